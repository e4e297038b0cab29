"""Built-in problem catalogue and the property suites behind ``covest verify``.

Every suite takes an explicit integer ``rng_seed`` and draws from
``numpy.random.default_rng`` (PCG64) seeded with ``[rng_seed, salt]``, so
reports are reproducible. Floating-point figures in reports are rounded to
three significant digits; the pass/fail verdicts use the unrounded values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gpovm as gp
from .combs import comb_constraint_check, comb_spec, random_sequential_strategy, sequential_gpovm
from .groups import (
    ProjectiveRep,
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
from .irreps import IrrepDecomposition, decompose
from .optimal import (
    build_parallel_scheme,
    completeness_residual,
    double_integral_risk_operator,
    feasible_seed,
    normalization_operator,
    optimal_parallel_input,
    single_integral_risk_operator,
    solve_optimal_seed,
    verify_simulation,
)

SUITES = ("completeness", "huntstein", "simulation", "comb", "noadvantage")
TOL = 1e-9
OPERATOR_TOL = 1e-10


def rounded(x: float) -> float:
    """Three significant digits, for reports."""
    return float(f"{float(x):.3e}")


@dataclass(frozen=True, eq=False)
class Problem:
    """A representation, an error function and (optionally) a per-step channel layout."""

    name: str
    rep: ProjectiveRep
    error: gp.ErrorFunction
    base: ProjectiveRep | None = None  # single-use rep when ``rep`` is a tensor power of it
    copies: int = 1

    _dec: list = None

    @property
    def steps(self) -> tuple:
        """Per-use ``(d_A, d_B)`` layout for sequential strategies (empty if unknown)."""
        if self.base is None or self.base.is_u1:
            return ()
        return ((self.base.d, self.base.d),) * self.copies

    def decomposition(self) -> IrrepDecomposition:
        if self._dec is None:
            object.__setattr__(self, "_dec", [decompose(self.rep)])
        return self._dec[0]


def _z(N, ks, copies=1, name=None):
    G = cyclic(N)
    base = characters_rep(G, ks)
    return Problem(name, rep_power(base, copies), gp.delta_error(G), base, copies)


def catalogue() -> list:
    """The built-in ``(representation, error)`` pairs."""
    D3 = dihedral(3)
    d3 = defining_rep(D3)
    HW = heisenberg_weyl_group(2)
    U = u1(17)
    return [
        _z(2, [0, 1], name="z2-delta"),
        _z(8, list(range(8)), name="z8-delta"),
        _z(4, [0, 1], name="z4-partial-delta"),
        Problem("d3-delta", d3, gp.delta_error(D3), d3),
        Problem("d3-infidelity", d3, gp.gate_infidelity(d3), d3),
        Problem("hw2-delta", heisenberg_weyl_rep(HW), gp.delta_error(HW), heisenberg_weyl_rep(HW)),
        Problem("u1-sine2", u1_rep(U, {k: 1 for k in range(5)}), gp.sine_squared(U)),
        _z(6, [0, 1], copies=2, name="z6x2-delta"),
        Problem("d3x2-delta", rep_power(d3, 2), gp.delta_error(D3), d3, 2),
    ]


SIMULATION_SET = ("z8-delta", "z4-partial-delta", "d3-delta", "d3-infidelity", "hw2-delta", "u1-sine2")
FINITE_SET = ("z4-partial-delta", "d3-delta", "d3-infidelity", "hw2-delta", "z6x2-delta", "d3x2-delta")
COMB_SET = ("z6x2-delta", "d3x2-delta")


def select(problems, names) -> list:
    return [p for p in problems if p.name in names]


def _rng(rng_seed: int, *salt) -> np.random.Generator:
    return np.random.default_rng([int(rng_seed) & (2**64 - 1), *salt])


def random_seed_vector(f: ProjectiveRep, rng: np.random.Generator) -> np.ndarray:
    D = f.d * f.d
    x = rng.normal(size=D) + 1j * rng.normal(size=D)
    return feasible_seed(x, f)


# ---------------------------------------------------------------- suites


def structural_checks(p: Problem) -> dict:
    """Schur completeness, block residual, ``N = rho_mu`` and the risk-operator convention lock."""
    dec = p.decomposition()
    scheme = build_parallel_scheme(dec)
    out = {
        "completeness": completeness_residual(scheme),
        "block_residual": dec.off_block_residual,
        "normalization": float(np.abs(normalization_operator(p.rep, dec).ambient() - average_state(p.rep)).max()),
        "risk_operator": float(np.abs(single_integral_risk_operator(p.rep, p.error)
                                      - double_integral_risk_operator(p.rep, p.error)).max()),
    }
    out["passed"] = (out["completeness"] <= TOL and out["block_residual"] <= TOL
                     and out["normalization"] <= TOL and out["risk_operator"] <= OPERATOR_TOL)
    return out


def suite_completeness(problems, rng_seed: int, trials: int) -> dict:
    rows = {p.name: structural_checks(p) for p in problems}
    worst = {k: max(r[k] for r in rows.values())
             for k in ("completeness", "block_residual", "normalization", "risk_operator")}
    failing = sorted(n for n, r in rows.items() if not r["passed"])
    return {"passed": not failing, "worst": worst, "failing": failing, "problems": sorted(rows)}


def suite_simulation(problems, rng_seed: int, trials: int) -> dict:
    worst, witness = 0.0, None
    amp = risk = 0.0
    for i, p in enumerate(problems):
        rng = _rng(rng_seed, 3, i)
        dec = p.decomposition()
        for t in range(trials):
            X = random_seed_vector(p.rep, rng)
            rep = verify_simulation(X, p.rep, dec, p.error, tol=TOL)
            amp = max(amp, rep.amplitude_deviation)
            risk = max(risk, rep.risk_deviation)
            if rep.max_deviation >= worst:
                worst = rep.max_deviation
                witness = {"problem": p.name, "trial": t, "pair": list(rep.worst_pair)}
    passed = max(worst, amp, risk) <= TOL
    return {"passed": passed, "max_deviation": worst, "amplitude_deviation": amp,
            "risk_deviation": risk, "trials": trials, "seed_rng": int(rng_seed), "witness": witness}


def suite_huntstein(problems, rng_seed: int, trials: int) -> dict:
    bayes_gap = worst_excess = roundtrip = 0.0
    witness = None
    for i, p in enumerate(problems):
        if p.rep.is_u1:
            continue
        rng = _rng(rng_seed, 2, i)
        f, v = p.rep, p.error
        for t in range(trials):
            M = gp.random_gpovm(f, rng)
            Mb = gp.covariantize(M, f)
            gap = abs(gp.bayes_risk(Mb, f, v) - gp.bayes_risk(M, f, v))
            exc = gp.worst_risk(Mb, f, v) - gp.worst_risk(M, f, v)
            if gap > bayes_gap or exc > worst_excess:
                witness = {"problem": p.name, "trial": t}
            bayes_gap = max(bayes_gap, gap)
            worst_excess = max(worst_excess, exc)
            P0 = gp.h0_projector(f)
            x = P0 @ random_seed_vector(f, rng)
            T = np.outer(x, x.conj())
            back = gp.seed_from_covariant(gp.as_finite(gp.covariant_gpovm(T, f, check=False), f), f)
            roundtrip = max(roundtrip, float(np.abs(back - T).max()))
    passed = bayes_gap <= TOL and worst_excess <= TOL and roundtrip <= TOL
    return {"passed": passed, "bayes_gap": bayes_gap, "worst_excess": max(worst_excess, 0.0),
            "roundtrip_residual": roundtrip, "trials": trials, "witness": witness}


def _sequential(p: Problem, rng: np.random.Generator):
    strat = random_sequential_strategy(p.steps, rng, memory=2, n_outcomes=int(rng.integers(2, 7)))
    outs = rng.integers(0, p.rep.order, size=len(strat.povm))
    return strat, sequential_gpovm(strat, p.rep, outs)


def suite_comb(problems, rng_seed: int, trials: int) -> dict:
    worst_comb = worst_sim = worst_master = 0.0
    witness = None
    for i, p in enumerate(problems):
        if not p.steps or p.rep.is_u1:
            continue
        rng = _rng(rng_seed, 4, i)
        spec = comb_spec(p.steps)
        for t in range(trials):
            strat, M = _sequential(p, rng)
            rep = comb_constraint_check(M, spec)
            P, _ = gp.probability_table(M, p.rep)
            direct = np.stack([strat.probabilities([p.base.image(g)] * p.copies) for g in range(p.rep.order)])
            sim = float(np.abs(P - direct).max())
            master = gp.master_constraint_check(M, p.rep)
            if rep.max_residual > worst_comb or sim > worst_sim:
                witness = {"problem": p.name, "trial": t}
            worst_comb = max(worst_comb, rep.max_residual)
            worst_sim = max(worst_sim, sim)
            worst_master = max(worst_master, master)
    passed = max(worst_comb, worst_sim, worst_master) <= TOL
    return {"passed": passed, "comb_residual": worst_comb, "simulation_deviation": worst_sim,
            "master_residual": worst_master, "trials": trials, "witness": witness}


def suite_noadvantage(problems, rng_seed: int, trials: int) -> dict:
    n_seq = trials // 5
    rows = {}
    gap, witness = math.inf, None
    all_comb_ok = True
    for i, p in enumerate(problems):
        if p.rep.is_u1:
            continue
        rng = _rng(rng_seed, 5, i)
        f, v = p.rep, p.error
        rstar = solve_optimal_seed(f, p.decomposition(), v).risk
        low_b = low_w = math.inf
        for t in range(trials):
            if t < n_seq and p.steps:
                _, M = _sequential(p, rng)
                if not comb_constraint_check(M, comb_spec(p.steps)).passed(TOL):
                    all_comb_ok = False
            else:
                M = gp.random_gpovm(f, rng)
            b, w = gp.bayes_risk(M, f, v), gp.worst_risk(M, f, v)
            low_b, low_w = min(low_b, b), min(low_w, w)
            if min(b, w) - rstar < gap:
                gap = min(b, w) - rstar
                witness = {"problem": p.name, "trial": t}
        rows[p.name] = {"risk_star": rstar, "min_bayes": low_b, "min_worst": low_w}
    passed = all_comb_ok and gap >= -TOL
    return {"passed": passed, "min_gap": gap, "problems": rows, "trials": trials,
            "sequential_per_problem": n_seq, "combs_valid": all_comb_ok, "witness": witness}


RUNNERS = {
    "completeness": suite_completeness,
    "huntstein": suite_huntstein,
    "simulation": suite_simulation,
    "comb": suite_comb,
    "noadvantage": suite_noadvantage,
}

DEFAULT_SETS = {
    "completeness": None,
    "huntstein": FINITE_SET,
    "simulation": SIMULATION_SET,
    "comb": COMB_SET,
    "noadvantage": COMB_SET,
}

DEFAULT_TRIALS = {"completeness": 1, "huntstein": 20, "simulation": 20, "comb": 20, "noadvantage": 100}


def run_suite(name: str, problems=None, rng_seed: int = 0, trials: int | None = None) -> dict:
    """Run one suite; with ``problems=None`` the suite's default catalogue subset is used."""
    if name not in RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    if problems is None:
        cat = catalogue()
        problems = cat if DEFAULT_SETS[name] is None else select(cat, DEFAULT_SETS[name])
    trials = DEFAULT_TRIALS[name] if trials is None else trials
    return RUNNERS[name](problems, rng_seed, trials)


def equality_chain(problems) -> dict:
    """``|risk*(seed) - risk*(parallel)|`` for every problem."""
    out = {}
    for p in problems:
        dec = p.decomposition()
        a = solve_optimal_seed(p.rep, dec, p.error).risk
        b = optimal_parallel_input(p.rep, dec, p.error).risk
        out[p.name] = {"seed_risk": a, "parallel_risk": b, "gap": abs(a - b)}
    return out


def round_report(obj):
    """Recursively round floats for stable, compact reports."""
    if isinstance(obj, float):
        return rounded(obj) if math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: round_report(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_report(v) for v in obj]
    return obj
