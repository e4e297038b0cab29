import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covest import gpovm as gp
from covest.errors import UnsupportedError, ValidationError
from covest.groups import (
    average_state,
    characters_rep,
    cyclic,
    defining_rep,
    dihedral,
    heisenberg_weyl_group,
    heisenberg_weyl_rep,
    rep_power,
    u1,
    u1_rep,
)


def double_sum_bayes(ops, outcomes, f, v):
    """Oracle: mean_g sum_k v(g^{-1} g_k) <<f(g)| M_k |f(g)>> with explicit loops."""
    G = f.group
    total = 0.0
    for g in range(f.order):
        c = f.image(g).reshape(-1)
        for k, M in zip(outcomes, ops):
            total += v.values[G.mul(G.inv(g), k)] * np.vdot(c, M @ c).real
    return total / f.order


def z2():
    return characters_rep(cyclic(2), [0, 1])


def test_error_functions():
    G = u1(16)
    v = gp.sine_squared(G)
    assert np.abs(v.values - 4 * np.sin(G.angles() / 2) ** 2).max() < 1e-12
    assert v.degree == 1
    d = gp.delta_error(cyclic(4))
    assert d.values.tolist() == [0, 1, 1, 1]
    f = defining_rep(dihedral(3))
    gi = gp.gate_infidelity(f)
    assert abs(gi(0)) < 1e-12 and abs(gi(3) - 1) < 1e-12  # reflections are traceless
    with pytest.raises(ValidationError):
        gp.fourier_error(G, [(1, 1)])  # not real
    with pytest.raises(ValidationError):
        gp.class_table(cyclic(3), [1, 0, 1])  # not minimal at e
    with pytest.raises(ValidationError):
        gp.check_quadrature(u1_rep(u1(5), {0: 1, 1: 1}), gp.fourier_error(u1(5), [(2, 1), (-2, 1)]))


def test_master_constraint_examples():
    f = z2()
    X = np.array([1, 0, 0, 1]) / np.sqrt(2)
    M = gp.covariant_gpovm(X, f)
    assert gp.master_constraint_check(M, f) <= 1e-12
    F = gp.as_finite(M, f)
    doubled = gp.Gpovm("finite", F.outcomes, 2 * F.operators)
    assert abs(gp.master_constraint_check(doubled, f) - 1) < 1e-12
    with pytest.raises(ValidationError, match="master"):
        gp.finite_gpovm(F.outcomes, 2 * F.operators, f)
    with pytest.raises(ValidationError):
        gp.finite_gpovm([0], [np.diag([1.0, -1, 0, 0])], f)


def test_perfect_discrimination_z2():
    f = z2()
    X = np.array([1, 0, 0, 1]) / np.sqrt(2)
    M = gp.covariant_gpovm(X, f)
    v = gp.delta_error(f.group)
    assert np.abs(gp.risk_profile(M, f, v)).max() < 1e-12
    P, _ = gp.probability_table(M, f)
    assert np.abs(P - np.eye(2)).max() < 1e-12


@pytest.mark.parametrize("N", [2, 3, 5])
def test_uniform_and_deterministic_guess(N):
    f = characters_rep(cyclic(N), [0, 1])
    d = f.d
    v = gp.delta_error(f.group)
    uniform = gp.finite_gpovm(np.arange(N), [np.eye(d * d) / (d * N)] * N, f)
    assert np.abs(gp.risk_profile(uniform, f, v) - (1 - 1 / N)).max() < 1e-12
    fixed = gp.finite_gpovm([0], [np.eye(d * d) / d], f)
    assert abs(gp.bayes_risk(gp.covariantize(fixed, f), f, v) - (1 - 1 / N)) < 1e-12
    zero = gp.class_table(f.group, np.zeros(N))
    assert gp.bayes_risk(uniform, f, zero) == 0


def test_constant_error_gives_total_weight():
    f = defining_rep(dihedral(3))
    rng = np.random.default_rng(0)
    M = gp.random_gpovm(f, rng)
    c = gp.class_table(f.group, np.full(6, 0.7))
    assert abs(gp.bayes_risk(M, f, c) - 0.7) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["z2", "d3", "hw2", "d3x2"]))
def test_bayes_risk_matches_double_sum(seed, which):
    f = {"z2": z2, "d3": lambda: defining_rep(dihedral(3)),
         "hw2": lambda: heisenberg_weyl_rep(heisenberg_weyl_group(2)),
         "d3x2": lambda: rep_power(defining_rep(dihedral(3)), 2)}[which]()
    rng = np.random.default_rng(seed)
    M = gp.random_gpovm(f, rng)
    v = gp.class_table(f.group, np.r_[0, rng.uniform(0.1, 1, f.order - 1)])  # identity has index 0
    assert abs(gp.bayes_risk(M, f, v) - double_sum_bayes(M.operators, M.outcomes, f, v)) < 1e-10


def test_covariant_probabilities_normalized_pointwise():
    f = rep_power(defining_rep(dihedral(3)), 2)
    rng = np.random.default_rng(1)
    x = rng.normal(size=16) + 1j * rng.normal(size=16)
    x /= np.sqrt(np.vdot(x, average_state(f) @ x).real)
    P, _ = gp.probability_table(gp.covariant_gpovm(x, f), f)
    assert np.abs(P.sum(axis=1) - 1).max() < 1e-10
    assert P.min() > -1e-12


def test_translate_shifts_risk():
    f = defining_rep(dihedral(3))
    G = f.group
    rng = np.random.default_rng(2)
    M = gp.random_gpovm(f, rng)
    v = gp.class_table(G, [0, 0.3, 0.5, 0.9, 0.2, 0.7])
    base = gp.risk_profile(M, f, v)
    for g in range(G.order):
        moved = gp.risk_profile(gp.translate(M, f, g), f, v)
        for gp_ in range(G.order):
            assert abs(moved[gp_] - base[G.mul(G.inv(g), gp_)]) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["z2", "z4", "d3", "hw2"]))
def test_hunt_stein(seed, which):
    f = {"z2": z2, "z4": lambda: characters_rep(cyclic(4), [0, 1, 3]),
         "d3": lambda: defining_rep(dihedral(3)),
         "hw2": lambda: heisenberg_weyl_rep(heisenberg_weyl_group(2))}[which]()
    rng = np.random.default_rng(seed)
    M = gp.random_gpovm(f, rng, n_outcomes=4)
    v = gp.gate_infidelity(f) if which == "d3" else gp.delta_error(f.group)
    Mb = gp.covariantize(M, f)
    assert abs(gp.bayes_risk(Mb, f, v) - gp.bayes_risk(M, f, v)) < 1e-10
    assert gp.worst_risk(Mb, f, v) <= gp.worst_risk(M, f, v) + 1e-9
    # covariant risk is flat
    prof = gp.risk_profile(Mb, f, v)
    assert prof.max() - prof.min() < 1e-10
    assert gp.master_constraint_check(Mb, f) < 1e-10


def test_seed_roundtrip():
    f = z2()
    X = np.array([1, 0, 0, 1]) / np.sqrt(2)
    T = np.outer(X, X)
    back = gp.seed_from_covariant(gp.as_finite(gp.covariant_gpovm(T, f), f), f)
    assert np.abs(back - T).max() < 1e-12
    d3 = defining_rep(dihedral(3))
    rng = np.random.default_rng(3)
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    T = A @ A.conj().T
    P0 = gp.h0_projector(d3)
    back = gp.seed_from_covariant(gp.covariant_gpovm(T, d3, check=False), d3)
    assert np.abs(back - P0 @ T @ P0).max() < 1e-9


def test_seed_from_non_covariant_names_element():
    f = defining_rep(dihedral(3))
    M = gp.random_gpovm(f, np.random.default_rng(4), n_outcomes=3)
    with pytest.raises(ValidationError, match="worst element"):
        gp.seed_from_covariant(M, f)


def test_compress_keeps_statistics():
    f = defining_rep(dihedral(3))
    M = gp.random_gpovm(f, np.random.default_rng(5))
    P1, _ = gp.probability_table(M, f)
    P2, _ = gp.probability_table(gp.compress(M, f), f)
    assert np.abs(P1 - P2).max() < 1e-10


def test_u1_restrictions():
    f = u1_rep(u1(9), {0: 1, 1: 1})
    M = gp.finite_gpovm([0], [np.eye(4) / 2], f)
    v = gp.sine_squared(f.group)
    with pytest.raises(UnsupportedError):
        gp.worst_risk(M, f, v)
    with pytest.raises(UnsupportedError):
        gp.covariantize(M, f)
    # a covariant U(1) GPOVM has a worst risk equal to its Bayes risk
    X = np.array([1, 0, 0, 1]) / np.sqrt(2)
    C = gp.covariant_gpovm(X, f)
    assert abs(gp.worst_risk(C, f, v) - gp.bayes_risk(C, f, v)) < 1e-12
