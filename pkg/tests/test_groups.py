import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covest.errors import UnsupportedError, ValidationError
from covest.groups import (
    average_state,
    characters_rep,
    choi_vector,
    cocycle_identity_residual,
    cyclic,
    defining_rep,
    dihedral,
    group_from_document,
    haar_average,
    heisenberg_weyl_group,
    heisenberg_weyl_rep,
    make_group,
    permutation_group,
    regular_rep,
    rep_from_document,
    rep_from_unitaries,
    rep_power,
    rep_tensor,
    trivial_group,
    trivial_rep,
    u1,
    u1_rep,
)


def test_cyclic_two():
    G = cyclic(2)
    assert G.order == 2
    assert G.table.tolist() == [[0, 1], [1, 0]]
    assert G.identity == 0 and G.inverse.tolist() == [0, 1]


def test_dihedral_is_nonabelian_and_matches_s3():
    G = dihedral(3)
    assert G.order == 6
    assert not G.is_abelian()
    # s r s = r^{-1}: s has index 3, r index 1
    r, s = 1, 3
    assert G.mul(G.mul(s, r), s) == G.inv(r)
    # independent oracle: S3 generated by a 3-cycle and a transposition has order 6
    assert permutation_group([[1, 2, 0], [0, 2, 1]]).order == 6


@pytest.mark.parametrize("N", [1, 2, 5, 8])
def test_group_axioms_on_builtins(N):
    for G in (cyclic(N), dihedral(N)):
        e = G.identity
        for g in G.elements():
            assert G.mul(e, g) == g == G.mul(g, e)
            assert G.mul(G.inv(g), g) == e


def test_make_group_rejects_bad_tables():
    # a Latin square that is not associative
    bad = [[0, 1, 2, 3, 4], [1, 0, 3, 4, 2], [2, 4, 0, 1, 3], [3, 2, 4, 0, 1], [4, 3, 1, 2, 0]]
    with pytest.raises(ValidationError, match="associative"):
        make_group(bad)
    with pytest.raises(ValidationError, match="permutation"):
        make_group([[0, 0], [1, 1]])
    with pytest.raises(ValidationError, match="identity"):
        make_group([[0, 2, 1], [2, 1, 0], [1, 0, 2]])  # x*y = -x-y mod 3


def test_heisenberg_weyl_pauli_cocycle():
    G = heisenberg_weyl_group(2)
    f = heisenberg_weyl_rep(G)
    X = np.array([[0, 1], [1, 0]])
    Z = np.diag([1, -1])
    # explicit Pauli products: f(a,b) = X^a Z^b, index a*2+b
    assert np.abs(f.image(2) - X).max() < 1e-12
    assert np.abs(f.image(1) - Z).max() < 1e-12
    assert np.abs(f.image(3) - X @ Z).max() < 1e-12
    # Z X = -X Z, so omega(Z, X) = -1 relative to f(XZ)
    assert abs(f.cocycle[1, 2] - (-1)) < 1e-12
    assert abs(f.cocycle[2, 1] - 1) < 1e-12
    assert not f.is_linear()
    assert cocycle_identity_residual(f) < 1e-12


def test_rep_validation_errors():
    G = cyclic(2)
    with pytest.raises(ValidationError, match="unitary"):
        rep_from_unitaries(G, [np.eye(2), 2 * np.eye(2)])
    with pytest.raises(ValidationError):
        rep_from_unitaries(G, [np.eye(2), np.diag([1, -1])], cocycle=-np.ones((2, 2)))
    with pytest.raises(ValidationError, match="identity"):
        rep_from_unitaries(G, [np.diag([1, -1]), np.eye(2)])


def test_tensor_examples():
    G = cyclic(2)
    f = rep_power(characters_rep(G, [0, 1]), 2)
    assert np.abs(f.image(1) - np.diag([1, -1, -1, 1])).max() < 1e-12
    g = rep_tensor([characters_rep(G, [0, 1]), trivial_rep(G, 1)])
    assert np.abs(g.images() - characters_rep(G, [0, 1]).images()).max() < 1e-12
    with pytest.raises(ValidationError):
        rep_tensor([characters_rep(G, [0, 1]), characters_rep(cyclic(3), [0])])


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_u1_tensor_binomial(n):
    U = u1(64)
    f = rep_power(u1_rep(U, {0: 1, 1: 1}), n)
    assert f.modes == tuple(range(n + 1))
    assert f.mults == tuple(math.comb(n, k) for k in range(n + 1))


def test_u1_quadrature_rule():
    with pytest.raises(ValidationError, match="Q"):
        u1_rep(u1(8), {2: 1})
    f = u1_rep(u1(9), [{"k": 2, "mult": 1}, {"k": 0}])
    assert f.modes == (0, 2) and f.d == 2


def test_choi_vectors():
    G = cyclic(2)
    f = characters_rep(G, [0, 1])
    assert np.abs(choi_vector(f, 1) - np.array([1, 0, 0, -1])).max() < 1e-12
    assert np.abs(choi_vector(f, 0) - np.eye(2).reshape(-1)).max() < 1e-12
    for g in G.elements():
        assert abs(np.linalg.norm(choi_vector(f, g)) ** 2 - f.d) < 1e-12
    with pytest.raises(ValidationError):
        choi_vector(f, 2)


def test_haar_average_examples():
    f = characters_rep(cyclic(3), [1])
    assert abs(haar_average(f, lambda g: f.image(g))).max() < 1e-12
    assert np.abs(haar_average(f, lambda g: np.eye(2)) - np.eye(2)).max() < 1e-12
    U = u1(17)
    th = U.angles()
    for k in range(1, 17):
        assert abs(haar_average(U, lambda j: np.exp(1j * k * th[j]))) < 1e-12


def test_average_state_examples():
    f = characters_rep(cyclic(2), [0, 1])
    assert np.abs(average_state(f) - np.diag([1, 0, 0, 1])).max() < 1e-12
    t = trivial_rep(trivial_group(), 3)
    I = np.eye(3).reshape(-1)
    assert np.abs(average_state(t) - np.outer(I, I)).max() < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["z5", "d4", "hw3", "u1"]))
def test_average_state_is_state_like(which):
    G = {"z5": cyclic(5), "d4": dihedral(4), "hw3": heisenberg_weyl_group(3), "u1": u1(13)}[which]
    f = {"z5": lambda: characters_rep(G, [0, 2, 3]), "d4": lambda: defining_rep(G),
         "hw3": lambda: heisenberg_weyl_rep(G), "u1": lambda: u1_rep(G, {0: 1, 1: 2, 3: 1})}[which]()
    rho = average_state(f)
    assert abs(np.trace(rho).real - f.d) < 1e-10
    assert np.linalg.eigvalsh(rho).min() > -1e-10
    # invariance under F(g) (x) conj: rho commutes with f(g) (x) f(g)^*
    for g in G.elements():
        L = np.kron(f.image(g), f.image(g).conj())
        assert np.abs(L @ rho @ L.conj().T - rho).max() < 1e-10


def test_regular_rep_is_permutation():
    G = dihedral(3)
    f = regular_rep(G)
    for g, h in itertools.product(G.elements(), repeat=2):
        assert np.abs(f.image(g) @ f.image(h) - f.image(G.mul(g, h))).max() < 1e-12


def test_documents():
    G = group_from_document({"kind": "dihedral", "N": 5})
    assert G.order == 10
    assert group_from_document({"kind": "u1", "Q": 256}).order == 256
    assert group_from_document({"kind": "table", "mul": [[0, 1], [1, 0]]}).order == 2
    H = group_from_document({"kind": "heisenberg_weyl", "d": 2})
    assert rep_from_document({"kind": "builtin", "name": "hw", "d": 2}, H).d == 2
    Z = cyclic(2)
    f = rep_from_document({"kind": "matrices", "unitaries": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
                                                             [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]]}, Z)
    assert np.abs(f.image(1) - np.diag([1, -1])).max() < 1e-12
    m = rep_from_document({"kind": "u1modes", "modes": [{"k": 0, "mult": 1}, {"k": 1, "mult": 1}]}, u1(9))
    assert m.modes == (0, 1)
    with pytest.raises(ValidationError):
        group_from_document({"kind": "cyclic"})
    with pytest.raises(ValidationError):
        group_from_document({"N": 3})
    with pytest.raises(ValidationError):
        rep_from_document({"kind": "builtin", "name": "nope"}, Z)


def test_u1_images_and_angles():
    f = u1_rep(u1(9), {0: 1, 1: 2})
    imgs = f.images()
    assert imgs.shape == (9, 3, 3)
    assert abs(imgs[1, 2, 2] - np.exp(2j * np.pi / 9)) < 1e-12
    with pytest.raises(UnsupportedError):
        cyclic(3).angles()
