"""Generalized POVMs over a group, covariance, and risk evaluation.

Operators live on the doubled space ``H (x) K`` of dimension ``d**2``. The
first factor is the output system acted on by ``f(g)``, the second is the
reference (input) system, matching the row-major vectorization
``|f(g)>> = (f(g) (x) I)|I>>``. We write ``F(g) = f(g) (x) I_K``.

Convention. A GPOVM here is indexed by the *estimate*. It is covariant
when ``M(gB) = F(g) M(B) F(g)^dagger``; such a measurement is generated by
a seed ``T`` as ``M({g_hat}) = F(g_hat) T F(g_hat)^dagger / |G|`` (a Haar
density on U(1)). Written with the label ``l = g_hat^{-1}`` this is the
density ``F(l)^dagger T F(l)``: the two conventions differ only by the
relabeling ``g_hat -> g_hat^{-1}``. The translate used for covariantization
is ``M_g(B) = F(g) M(g^{-1} B) F(g)^dagger``, which satisfies
``D_{w,g'}(M_g) = D_{w,g^{-1} g'}(M)`` for left-invariant errors
``w(g, g_hat) = v(g^{-1} g_hat)``; covariant GPOVMs are its fixed points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, UnsupportedError, ValidationError
from .groups import ProjectiveRep, average_state, choi_vectors
from .matcore import check_psd, pairwise_sum, random_psd, span_basis

PSD_TOL = 1e-10
MASTER_TOL = 1e-9
COVARIANCE_TOL = 1e-9
IMAG_TOL = 1e-10


# ---------------------------------------------------------------- errors


@dataclass(frozen=True, eq=False)
class ErrorFunction:
    """Covariant error ``w(g, g_hat) = v(g^{-1} g_hat)``, stored as ``v``.

    ``values[h]`` is ``v`` at element (or U(1) node) ``h``. Fourier errors
    also keep their coefficients ``{k: c_k}``.
    """

    kind: str
    values: np.ndarray
    coeffs: tuple = ()

    def __call__(self, h):
        return self.values[h]

    @property
    def degree(self) -> int:
        return max((abs(k) for k, _ in self.coeffs), default=0)

    @property
    def max_value(self) -> float:
        return float(self.values.max())

    def relabeled(self, group) -> np.ndarray:
        """``v(h^{-1})`` for every ``h``: the weight in the single-integral risk."""
        return self.values[group.inverse]


def _finish_error(kind, group, values, coeffs=()) -> ErrorFunction:
    values = np.asarray(values, dtype=float)
    if values.shape != (group.order,):
        raise DimensionError(f"error function needs {group.order} values, got shape {values.shape}")
    if values.min() < -1e-12:
        raise ValidationError("error function must be non-negative")
    if values[group.identity] > values.min() + 1e-12:
        raise ValidationError("error function must be minimal at the identity")
    values = np.maximum(values, 0.0)
    values.setflags(write=False)
    return ErrorFunction(kind, values, tuple(coeffs))


def delta_error(group) -> ErrorFunction:
    """0 for the correct guess, 1 otherwise."""
    v = np.ones(group.order)
    v[group.identity] = 0.0
    return _finish_error("delta", group, v)


def gate_infidelity(f: ProjectiveRep) -> ErrorFunction:
    """``v(h) = 1 - |Tr f(h)|^2 / d^2``."""
    if f.is_u1:
        tr = f.mode_phases() @ np.asarray(f.mults, dtype=float)
    else:
        tr = np.einsum("gii->g", f.images())
    return _finish_error("gate_infidelity", f.group, 1 - np.abs(tr) ** 2 / f.d**2)


def class_table(group, values) -> ErrorFunction:
    return _finish_error("class_table", group, values)


def fourier_error(group, coeffs) -> ErrorFunction:
    """Trigonometric-polynomial error ``v(theta) = sum_k c_k exp(i k theta)`` on U(1)."""
    if not group.is_u1:
        raise ValidationError("Fourier errors are defined on U(1) only")
    c: dict = {}
    for k, ck in coeffs:
        if isinstance(ck, (list, tuple)):
            ck = complex(ck[0], ck[1])
        c[int(k)] = c.get(int(k), 0) + complex(ck)
    for k, ck in c.items():
        if abs(c.get(-k, 0) - np.conj(ck)) > 1e-12:
            raise ValidationError(f"coefficients must satisfy c_(-k) = conj(c_k) for a real error (k={k})")
    degree = max((abs(k) for k in c), default=0)
    if group.order <= 2 * degree:
        raise ValidationError(f"Q={group.order} cannot resolve an error of degree {degree}")
    theta = group.angles()
    vals = sum(ck * np.exp(1j * k * theta) for k, ck in c.items())
    vals = np.asarray(vals) if np.ndim(vals) else np.full(group.order, complex(vals))
    if np.abs(vals.imag).max() > 1e-10:
        raise ValidationError("Fourier error is not real-valued")
    return _finish_error("fourier", group, vals.real, sorted(c.items()))


def sine_squared(group) -> ErrorFunction:
    """``4 sin^2(theta/2) = 2 - exp(i theta) - exp(-i theta)``."""
    return fourier_error(group, [(0, 2), (1, -1), (-1, -1)])


def error_from_document(doc: dict, f: ProjectiveRep) -> ErrorFunction:
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "delta":
        return delta_error(f.group)
    if kind == "gate_infidelity":
        return gate_infidelity(f)
    if kind == "class_table":
        return class_table(f.group, doc["values"])
    if kind == "fourier":
        return fourier_error(f.group, doc["coeffs"])
    if kind in ("sine2", "sine_squared"):
        return sine_squared(f.group)
    raise ValidationError(f"unknown error-function kind {kind!r}")


def check_quadrature(f: ProjectiveRep, v: ErrorFunction | None = None) -> None:
    """On U(1), make sure node averages of risk integrands are exact."""
    if not f.is_u1:
        return
    span = max(f.modes) - min(f.modes)
    need = span + (v.degree if v is not None else 0) + 1
    if f.order < need:
        raise ValidationError(f"Q={f.order} too small: exact risk integrals need Q >= {need}")


# ---------------------------------------------------------------- GPOVMs


@dataclass(frozen=True, eq=False)
class Gpovm:
    """Either a finite list ``(estimate_k, M_k)`` or a covariant seed ``T``."""

    kind: str  # "finite" or "covariant"
    outcomes: np.ndarray | None = None
    operators: np.ndarray | None = None
    seed: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return int(self.seed.shape[0] if self.kind == "covariant" else self.operators.shape[1])

    def total(self) -> np.ndarray:
        return pairwise_sum(self.operators)


def lift(U: np.ndarray) -> np.ndarray:
    """``U (x) I`` on the doubled space."""
    return np.kron(U, np.eye(U.shape[-1]))


def _check_dims(f: ProjectiveRep, D: int) -> None:
    if D != f.d * f.d:
        raise DimensionError(f"operators act on dimension {D}, expected d^2 = {f.d * f.d}")


def master_constraint_check(M: Gpovm, f: ProjectiveRep) -> float:
    """``|Tr (sum_k M_k) rho_mu - 1|``."""
    _check_dims(f, M.dim)
    rho = average_state(f)
    total = M.seed if M.kind == "covariant" else M.total()
    return float(abs(np.trace(total @ rho) - 1))


def finite_gpovm(outcomes, operators, f: ProjectiveRep, check: bool = True) -> Gpovm:
    outcomes = np.asarray(outcomes, dtype=np.int64).reshape(-1)
    ops = np.asarray(operators, dtype=complex)
    if ops.ndim != 3 or ops.shape[0] != outcomes.size:
        raise DimensionError("need one square operator per outcome")
    if outcomes.size and (outcomes.min() < 0 or outcomes.max() >= f.order):
        raise ValidationError("outcome labels must be group element indices")
    M = Gpovm("finite", outcomes, ops)
    _check_dims(f, ops.shape[1])
    if check:
        for k, op in enumerate(ops):
            check_psd(op, PSD_TOL * max(1.0, float(np.abs(op).max())), name=f"M_{k}")
        res = master_constraint_check(M, f)
        if res > MASTER_TOL:
            raise ValidationError(f"master constraint violated: |Tr(sum M) rho - 1| = {res:.3e}")
    return M


def covariant_gpovm(seed, f: ProjectiveRep, check: bool = True) -> Gpovm:
    """Covariant GPOVM from a seed operator ``T`` (or a vector ``X``, ``T = |X><X|``)."""
    T = np.asarray(seed, dtype=complex)
    if T.ndim == 1:
        T = np.outer(T, T.conj())
    _check_dims(f, T.shape[0])
    M = Gpovm("covariant", seed=T)
    if check:
        check_psd(T, PSD_TOL * max(1.0, float(np.abs(T).max())), name="seed T")
        res = master_constraint_check(M, f)
        if res > MASTER_TOL:
            raise ValidationError(f"seed violates Tr T rho_mu = 1 (residual {res:.3e})")
    return M


def translated_choi(f: ProjectiveRep, g_hat: int) -> np.ndarray:
    """Rows ``|f(g_hat)^dagger f(g)>>`` for all true ``g``: ``F(g_hat)^dagger |f(g)>>``."""
    U = f.images()
    return np.einsum("ji,gjk->gik", U[g_hat].conj(), U).reshape(f.order, -1)


def as_finite(M: Gpovm, f: ProjectiveRep) -> Gpovm:
    """Expand a covariant GPOVM into its per-element operators."""
    if M.kind == "finite":
        return M
    U = f.images()
    n = f.order
    ops = np.empty((n, M.dim, M.dim), dtype=complex)
    for g in range(n):
        L = lift(U[g])
        ops[g] = L @ M.seed @ L.conj().T / n
    return Gpovm("finite", np.arange(n), ops)


def _real_probs(p: np.ndarray, scale: float) -> np.ndarray:
    if p.size and np.abs(p.imag).max() > IMAG_TOL * max(1.0, scale):
        raise ValidationError(f"probabilities have imaginary residue {np.abs(p.imag).max():.3e}")
    return p.real


def probability_table(M: Gpovm, f: ProjectiveRep) -> tuple[np.ndarray, np.ndarray]:
    """``P[g, k] = Tr M_k |f(g)>><<f(g)|`` and the outcome labels."""
    _check_dims(f, M.dim)
    n = f.order
    if M.kind == "covariant":
        T = M.seed
        P = np.empty((n, n), dtype=complex)
        for gh in range(n):
            Y = translated_choi(f, gh)  # (g, D)
            P[:, gh] = np.einsum("gi,ij,gj->g", Y.conj(), T, Y) / n
        return _real_probs(P, float(np.abs(T).max())), np.arange(n)
    V = choi_vectors(f)
    P = np.einsum("gi,kij,gj->gk", V.conj(), M.operators, V)
    return _real_probs(P, float(np.abs(M.operators).max(initial=0.0))), M.outcomes


def risk_profile(M: Gpovm, f: ProjectiveRep, v: ErrorFunction) -> np.ndarray:
    """``D_{w,g}(M)`` for every element ``g``."""
    check_quadrature(f, v)
    P, outs = probability_table(M, f)
    G = f.group
    weights = v.values[G.table[G.inverse][:, outs]]  # v(g^{-1} g_hat_k)
    return np.einsum("gk,gk->g", weights, P)


def risk_at(M: Gpovm, f: ProjectiveRep, v: ErrorFunction, g) -> float:
    g = f.group.check_element(g)
    return float(risk_profile(M, f, v)[g])


def bayes_risk(M: Gpovm, f: ProjectiveRep, v: ErrorFunction) -> float:
    """Haar average of the pointwise risk."""
    return float(pairwise_sum(risk_profile(M, f, v)) / f.order)


def worst_risk(M: Gpovm, f: ProjectiveRep, v: ErrorFunction) -> float:
    """Maximum pointwise risk over the group."""
    if f.is_u1 and M.kind != "covariant":
        raise UnsupportedError("worst-case risk of a non-covariant U(1) GPOVM is not computed")
    return float(risk_profile(M, f, v).max())


# ---------------------------------------------------------------- Hunt-Stein


def translate(M: Gpovm, f: ProjectiveRep, g: int) -> Gpovm:
    """``M_g(B) = F(g) M(g^{-1} B) F(g)^dagger``: outcome ``k`` moves to ``g * g_hat_k``."""
    M = as_finite(M, f)
    L = lift(f.image(g))
    ops = np.einsum("ij,kjl,ml->kim", L, M.operators, L.conj())
    return Gpovm("finite", f.group.table[g, M.outcomes], ops)


def covariantize(M: Gpovm, f: ProjectiveRep) -> Gpovm:
    """Group average of the translates of ``M``; returns its covariant seed.

    ``M_bar({g_hat}) = F(g_hat) T F(g_hat)^dagger / |G|`` with
    ``T = sum_k F(g_hat_k)^dagger M_k F(g_hat_k)``.
    """
    if f.is_u1:
        raise UnsupportedError("covariantization of finite-outcome U(1) GPOVMs is not supported")
    M = as_finite(M, f)
    U = f.images()
    lifts = np.stack([lift(U[g]) for g in M.outcomes])
    T = np.einsum("kji,kjl,klm->im", lifts.conj(), M.operators, lifts)
    T = (T + T.conj().T) / 2
    return Gpovm("covariant", seed=T)


def h0_projector(f: ProjectiveRep) -> np.ndarray:
    """Projector onto ``H_0 = span{|f(g)>>}``."""
    B = span_basis(list(choi_vectors(f)))
    return B @ B.conj().T


def compress(M: Gpovm, f: ProjectiveRep) -> Gpovm:
    """``P_0 M P_0``: the part of ``M`` visible to any ``|f(g)>>``."""
    P0 = h0_projector(f)
    if M.kind == "covariant":
        return Gpovm("covariant", seed=P0 @ M.seed @ P0)
    return Gpovm("finite", M.outcomes, np.einsum("ij,kjl,lm->kim", P0, M.operators, P0))


def _per_element(M: Gpovm, n: int) -> np.ndarray:
    ops = np.zeros((n, M.dim, M.dim), dtype=complex)
    np.add.at(ops, M.outcomes, M.operators)
    return ops


def seed_from_covariant(M: Gpovm, f: ProjectiveRep, tol: float = COVARIANCE_TOL) -> np.ndarray:
    """Seed ``T = |G| P_0 M({e}) P_0`` of a covariant finite-outcome GPOVM.

    Raises :class:`ValidationError` naming the worst element if ``M`` is not
    covariant within ``tol``.
    """
    if f.is_u1:
        raise UnsupportedError("seed extraction is implemented for finite groups")
    if M.kind == "covariant":
        M = as_finite(M, f)
    n = f.order
    ops = _per_element(M, n)
    U = f.images()
    base = ops[f.group.identity]
    worst, where = 0.0, None
    for g in range(n):
        L = lift(U[g])
        dev = float(np.abs(ops[g] - L @ base @ L.conj().T).max())
        if dev > worst:
            worst, where = dev, g
    if worst > tol:
        raise ValidationError(f"GPOVM is not covariant: worst element {where} deviates by {worst:.3e}")
    P0 = h0_projector(f)
    return n * P0 @ base @ P0


def random_gpovm(f: ProjectiveRep, rng: np.random.Generator, n_outcomes: int | None = None,
                 max_rank: int = 4) -> Gpovm:
    """Random finite-outcome GPOVM scaled to meet the master constraint.

    Each outcome gets a random PSD operator of rank 1..``max_rank`` and a
    uniformly random estimate.
    """
    D = f.d * f.d
    n_outcomes = n_outcomes or int(rng.integers(1, 2 * f.order + 1))
    outcomes = rng.integers(0, f.order, size=n_outcomes)
    ops = np.stack([random_psd(D, int(rng.integers(1, max_rank + 1)), rng) for _ in range(n_outcomes)])
    rho = average_state(f)
    scale = np.trace(pairwise_sum(ops) @ rho).real
    return finite_gpovm(outcomes, ops / scale, f)
