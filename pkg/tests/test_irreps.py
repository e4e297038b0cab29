import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covest.errors import UnsupportedError, ValidationError
from covest.groups import (
    characters_rep,
    cyclic,
    defining_rep,
    dihedral,
    heisenberg_weyl_group,
    heisenberg_weyl_rep,
    regular_rep,
    rep_from_unitaries,
    rep_power,
    trivial_group,
    trivial_rep,
    u1,
    u1_rep,
)
from covest.irreps import character_multiplicities, decompose, isotypic_projector, multiplicity
from covest.matcore import random_unitary


def block_form_residual(dec):
    """Independent check: rebuild (+) f_lambda (x) I_n and compare with V^dagger f V."""
    V = dec.basis_change
    U = dec.rep.images()
    worst = 0.0
    for g in range(U.shape[0]):
        target = np.zeros((dec.rep.d, dec.rep.d), dtype=complex)
        for b in dec.blocks:
            sl = slice(b.offset, b.offset + b.size)
            target[sl, sl] = np.kron(b.images[g], np.eye(b.mult))
        worst = max(worst, np.abs(V.conj().T @ U[g] @ V - target).max())
    return worst


def builtin_reps():
    D3 = dihedral(3)
    HW2 = heisenberg_weyl_group(2)
    HW3 = heisenberg_weyl_group(3)
    return {
        "d3": defining_rep(D3),
        "d3x2": rep_power(defining_rep(D3), 2),
        "d3reg": regular_rep(D3),
        "d4x2": rep_power(defining_rep(dihedral(4)), 2),
        "hw2": heisenberg_weyl_rep(HW2),
        "hw2x2": rep_power(heisenberg_weyl_rep(HW2), 2),
        "hw3x2": rep_power(heisenberg_weyl_rep(HW3), 2),
        "z2x2": rep_power(characters_rep(cyclic(2), [0, 1]), 2),
        "z6x2": rep_power(characters_rep(cyclic(6), [0, 1]), 2),
    }


def test_dihedral_tensor_square():
    dec = decompose(rep_power(defining_rep(dihedral(3)), 2))
    assert sorted(zip(dec.dims, dec.mults)) == [(1, 1), (1, 1), (2, 1)]
    assert dec.labels[0] == "d1.0"
    assert np.abs(dec.block("d1.0").character - 1).max() < 1e-10


def test_regular_rep_multiplicities_equal_dimensions():
    dec = decompose(regular_rep(dihedral(3)))
    assert all(d == m for d, m in zip(dec.dims, dec.mults))
    assert sorted(dec.dims) == [1, 1, 2]


def test_heisenberg_weyl_irreducible_and_square():
    dec = decompose(heisenberg_weyl_rep(heisenberg_weyl_group(2)))
    assert dec.dims == [2] and dec.mults == [1]
    dec2 = decompose(rep_power(heisenberg_weyl_rep(heisenberg_weyl_group(2)), 2))
    assert dec2.dims == [1, 1, 1, 1] and dec2.mults == [1, 1, 1, 1]


def test_z2_diag_two_copies():
    dec = decompose(rep_power(characters_rep(cyclic(2), [0, 1]), 2))
    assert dec.mults == [2, 2]


def test_u1_modes():
    f = rep_power(u1_rep(u1(17), {0: 1, 1: 1}), 3)
    dec = decompose(f)
    assert dec.labels == ["k=0", "k=1", "k=2", "k=3"]
    assert dec.mults == [1, 3, 3, 1]
    assert multiplicity(f, 2) == 3
    assert multiplicity(u1_rep(u1(9), [0, 1, 1]), 1) == 2


def test_trivial_group_single_block():
    dec = decompose(trivial_rep(trivial_group(), 3))
    assert dec.dims == [1] and dec.mults == [3]


@pytest.mark.parametrize("name", list(builtin_reps()))
def test_block_diagonalization(name):
    f = builtin_reps()[name]
    dec = decompose(f)
    V = dec.basis_change
    assert np.abs(V.conj().T @ V - np.eye(f.d)).max() < 1e-9
    assert block_form_residual(dec) < 1e-9
    assert dec.off_block_residual < 1e-9
    assert sum(b.dim * b.mult for b in dec.blocks) == f.d
    # irreducibility: sum |chi|^2 / |G| = 1 for every block
    for b in dec.blocks:
        assert abs(np.sum(np.abs(b.character) ** 2) / f.order - 1) < 1e-9


@pytest.mark.parametrize("name", ["d3", "d3x2", "d3reg", "d4x2", "z2x2", "z6x2"])
def test_character_method_agrees(name):
    f = builtin_reps()[name]
    dec = decompose(f)
    assert character_multiplicities(f, dec) == dict(zip(dec.labels, dec.mults))


def test_multiplicity_examples():
    N = 5
    f = regular_rep(cyclic(N))
    assert multiplicity(f, np.ones(N)) == 1
    sign = np.array([1, -1])
    assert multiplicity(trivial_rep(cyclic(2)), sign) == 0
    with pytest.raises(UnsupportedError):
        multiplicity(heisenberg_weyl_rep(heisenberg_weyl_group(2)), np.ones(4))


def test_isotypic_projectors():
    f = rep_power(defining_rep(dihedral(3)), 2)
    dec = decompose(f)
    Ps = [isotypic_projector(dec, lab) for lab in dec.labels]
    assert np.abs(sum(Ps) - np.eye(4)).max() < 1e-9
    for P in Ps:
        for g in range(f.order):
            assert np.abs(P @ f.image(g) - f.image(g) @ P).max() < 1e-9
    with pytest.raises(ValidationError):
        dec.block("nope")


def test_deterministic():
    f = regular_rep(dihedral(3))
    a, b = decompose(f, seed=3), decompose(f, seed=3)
    assert np.array_equal(a.basis_change, b.basis_change)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_decomposition_is_basis_independent(seed):
    # conjugating by a random unitary changes the basis but not the labels, dims or mults
    rng = np.random.default_rng(seed)
    f = rep_power(defining_rep(dihedral(3)), 2)
    W = random_unitary(f.d, rng)
    g = rep_from_unitaries(f.group, np.einsum("ij,gjk,lk->gil", W, f.images(), W.conj()))
    a, b = decompose(f), decompose(g, seed=seed % 1000)
    assert (a.labels, a.dims, a.mults) == (b.labels, b.dims, b.mults)
    assert block_form_residual(b) < 1e-9
