"""Optimal covariant seeds, the parallel scheme, and the seed-to-input map.

Compressed coordinates. With the isotypic decomposition in hand,
``H_0 = span{|f(g)>>}`` is parametrized by one ``d_lambda x d_lambda``
matrix ``A_lambda`` per irrep::

    x  <->  (+)_lambda |A_lambda>> (x) |I_{n_lambda}>> / n_lambda   (block basis)

In these coordinates ``|f(h)>>`` pairs with ``(+)_lambda |f_lambda(h)>>``
and the normalization operator is ``(+)_lambda I / d_lambda``; neither
depends on the multiplicities, so large U(1) tensor powers stay
well-conditioned.

Risk weights. Both optimizers weight ``|f(h)>><<f(h)|`` by ``v(h^{-1})``,
the relabeling that turns the Bayes double integral over
``(g, g_hat)`` into a single Haar integral under the estimate convention
of :mod:`covest.gpovm`. ``double_integral_risk_operator`` keeps the
unreduced form for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InfeasibleError, ValidationError
from .gpovm import (
    ErrorFunction,
    check_quadrature,
    covariant_gpovm,
    lift,
    probability_table,
)
from .groups import ProjectiveRep, average_state, choi_vectors
from .irreps import IrrepDecomposition
from .matcore import hermitian_eig, min_generalized_eig, pairwise_sum

FEASIBILITY_TOL = 1e-9


# ---------------------------------------------------------------- H_0 frame


def _block_sizes(dec: IrrepDecomposition) -> list:
    return [b.dim * b.dim for b in dec.blocks]


def choi_coordinates(dec: IrrepDecomposition) -> np.ndarray:
    """Rows ``(+)_lambda |f_lambda(h)>>`` for every element ``h``."""
    n = dec.rep.order
    return np.concatenate([b.images.reshape(n, -1) for b in dec.blocks], axis=1)


def h0_embedding(dec: IrrepDecomposition) -> np.ndarray:
    """Matrix ``J`` mapping compressed coordinates to doubled-space vectors."""
    V = dec.require_basis()
    d = dec.rep.d
    cols = []
    for b in dec.blocks:
        for a in range(b.dim):
            for a2 in range(b.dim):
                Bm = np.zeros((d, d), dtype=complex)
                for alpha in range(b.mult):
                    Bm[b.offset + a * b.mult + alpha, b.offset + a2 * b.mult + alpha] = 1.0 / b.mult
                cols.append((V @ Bm @ V.conj().T).reshape(-1))
    return np.stack(cols, axis=1)


def _choi_synthesis(dec: IrrepDecomposition) -> np.ndarray:
    """``S`` with ``|f(h)>> = S @ choi_coordinates(dec)[h]``."""
    J = h0_embedding(dec)
    weights = np.concatenate([np.full(b.dim * b.dim, b.mult, dtype=float) for b in dec.blocks])
    return J * weights


# ---------------------------------------------------------------- operators


@dataclass(frozen=True, eq=False)
class RiskOperator:
    """Bayes-risk quadratic form ``W``: ``D_{w,mu}(M_T) = Tr T W``."""

    matrix: np.ndarray
    dec: IrrepDecomposition | None
    provenance: str = "single"

    def ambient(self) -> np.ndarray:
        if self.dec is None:
            return self.matrix
        S = _choi_synthesis(self.dec)
        return S @ self.matrix @ S.conj().T


@dataclass(frozen=True, eq=False)
class NormalizationOperator:
    """``N = (+)_lambda d_lambda^{-1} I (x) I (x) |I_n>><<I_n|`` (block basis)."""

    matrix: np.ndarray
    dec: IrrepDecomposition

    def ambient(self) -> np.ndarray:
        """``N`` on the doubled space in the computational basis."""
        V = self.dec.require_basis()
        d = self.dec.rep.d
        N_block = np.zeros((d * d, d * d), dtype=complex)
        for b in self.dec.blocks:
            for a in range(b.dim):
                for a2 in range(b.dim):
                    u = np.zeros((d, d))
                    for alpha in range(b.mult):
                        u[b.offset + a * b.mult + alpha, b.offset + a2 * b.mult + alpha] = 1.0
                    u = u.reshape(-1)
                    N_block += np.outer(u, u) / b.dim
        W = np.kron(V, V.conj())
        return W @ N_block @ W.conj().T


def risk_operator(f: ProjectiveRep, dec: IrrepDecomposition, v: ErrorFunction) -> RiskOperator:
    """``W = int v(h^{-1}) |f(h)>><<f(h)| dmu(h)`` in compressed coordinates."""
    check_quadrature(f, v)
    C = choi_coordinates(dec)
    wt = v.relabeled(f.group)
    W = np.einsum("h,hi,hj->ij", wt, C, C.conj()) / f.order
    return RiskOperator((W + W.conj().T) / 2, dec, "single")


def single_integral_risk_operator(f: ProjectiveRep, v: ErrorFunction) -> np.ndarray:
    """Doubled-space ``W`` from the single Haar integral, no decomposition."""
    check_quadrature(f, v)
    Vc = choi_vectors(f)
    wt = v.relabeled(f.group)
    return np.einsum("h,hi,hj->ij", wt, Vc, Vc.conj()) / f.order


def double_integral_risk_operator(f: ProjectiveRep, v: ErrorFunction) -> np.ndarray:
    """Doubled-space ``W`` straight from the Bayes double integral.

    ``W = mean_{g, g_hat} v(g^{-1} g_hat) F(g_hat)^dagger |f(g)>><<f(g)| F(g_hat)``.
    """
    check_quadrature(f, v)
    U = f.images()
    G = f.group
    n = f.order
    Vc = choi_vectors(f)
    terms = []
    for gh in range(n):
        L = lift(U[gh]).conj().T
        Y = Vc @ L.T  # rows F(g_hat)^dagger |f(g)>>
        wt = v.values[G.table[G.inverse, gh]]  # v(g^{-1} g_hat) over g
        terms.append(np.einsum("g,gi,gj->ij", wt, Y, Y.conj()))
    return pairwise_sum(np.stack(terms)) / (n * n)


def resolve_relabeling(f: ProjectiveRep, v: ErrorFunction, tol: float = 1e-10) -> str:
    """Which single-integral weight (``v`` or ``v o inverse``) reproduces the double integral."""
    target = double_integral_risk_operator(f, v)
    Vc = choi_vectors(f)
    candidates = {
        "inverse": v.relabeled(f.group),
        "identity": np.asarray(v.values),
    }
    for name, wt in candidates.items():
        W = np.einsum("h,hi,hj->ij", wt, Vc, Vc.conj()) / f.order
        if np.abs(W - target).max() <= tol:
            return name
    raise ValidationError("neither relabeling reproduces the double-integral risk operator")


def normalization_operator(f: ProjectiveRep, dec: IrrepDecomposition) -> NormalizationOperator:
    diag = np.concatenate([np.full(b.dim * b.dim, 1.0 / b.dim) for b in dec.blocks])
    return NormalizationOperator(np.diag(diag).astype(complex), dec)


# ---------------------------------------------------------------- optimal seed


@dataclass(frozen=True, eq=False)
class OptimalSeed:
    risk: float
    coords: np.ndarray
    vector: np.ndarray | None  # doubled-space X with T = |X><X|, when materializable

    @property
    def seed(self) -> np.ndarray:
        if self.vector is None:
            raise DimensionError("seed was not materialized on the doubled space")
        return np.outer(self.vector, self.vector.conj())


def solve_optimal_seed(f: ProjectiveRep, dec: IrrepDecomposition, v: ErrorFunction) -> OptimalSeed:
    """Rank-one seed minimizing ``Tr T W`` subject to ``Tr T N = 1``."""
    W = risk_operator(f, dec, v).matrix
    N = normalization_operator(f, dec).matrix
    value, x = min_generalized_eig(W, N)
    vector = h0_embedding(dec) @ x if dec.basis_change is not None else None
    return OptimalSeed(value, x, vector)


def solve_optimal_seed_ambient(f: ProjectiveRep, v: ErrorFunction) -> OptimalSeed:
    """Same optimum computed on the doubled space with ``N = rho_mu``; no decomposition.

    Seeds outside ``supp(rho_mu) = H_0`` are never optimal: ``W`` is PSD, so
    such components add cost and contribute nothing to the normalization.
    """
    W = single_integral_risk_operator(f, v)
    rho = average_state(f)
    value, x = min_generalized_eig(W, rho)
    return OptimalSeed(value, x, x)


def feasible_seed(X, f: ProjectiveRep) -> np.ndarray:
    """Rescale ``X`` so that ``<X|rho_mu|X> = 1``."""
    X = np.asarray(X, dtype=complex).reshape(-1)
    q = np.vdot(X, average_state(f) @ X).real
    if q <= 1e-14:
        raise InfeasibleError("seed has no weight on H_0 and cannot be normalized")
    return X / math.sqrt(q)


# ---------------------------------------------------------------- parallel scheme


@dataclass(frozen=True, eq=False)
class ParallelScheme:
    """Input space ``H' = (+)_lambda U_lambda (x) C^{r_lambda}`` and its canonical POVM seed ``|F>``."""

    dec: IrrepDecomposition
    l: int
    ranks: tuple
    offsets: tuple
    F: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return int(self.F.size)

    @property
    def is_full(self) -> bool:
        return all(r == b.dim for r, b in zip(self.ranks, self.dec.blocks))

    def images(self) -> np.ndarray:
        """``f'(g) = (+)_lambda f_lambda(g) (x) I_{r_lambda}``, shape ``(order, D', D')``."""
        n = self.dec.rep.order
        out = np.zeros((n, self.dim, self.dim), dtype=complex)
        for b, r, o in zip(self.dec.blocks, self.ranks, self.offsets):
            s = b.dim * r
            out[:, o:o + s, o:o + s] = np.einsum("gab,xy->gaxby", b.images, np.eye(r)).reshape(n, s, s)
        return out

    def blocks(self, psi):
        """Split ``psi`` into per-irrep matrices ``Psi_lambda`` (``d_lambda x r_lambda``)."""
        psi = np.asarray(psi, dtype=complex)
        return [psi[o:o + b.dim * r].reshape(b.dim, r) for b, r, o in zip(self.dec.blocks, self.ranks, self.offsets)]


def default_reference_dim(dec: IrrepDecomposition) -> int:
    """Smallest ``l`` with ``l * n_lambda >= d_lambda`` for every irrep."""
    return max(1, max(-(-b.dim // b.mult) for b in dec.blocks))


def build_parallel_scheme(dec: IrrepDecomposition, l: int | None = None) -> ParallelScheme:
    if l is None:
        l = default_reference_dim(dec)
    if l < 1:
        raise ValidationError("reference dimension l must be >= 1")
    ranks, offsets, parts = [], [], []
    o = 0
    for b in dec.blocks:
        r = min(b.dim, l * b.mult)
        Fb = np.zeros((b.dim, r), dtype=complex)
        Fb[np.arange(r), np.arange(r)] = math.sqrt(b.dim)
        ranks.append(r)
        offsets.append(o)
        parts.append(Fb.reshape(-1))
        o += b.dim * r
    return ParallelScheme(dec, l, tuple(ranks), tuple(offsets), np.concatenate(parts))


def completeness_residual(scheme: ParallelScheme) -> float:
    """``max |mean_g f'(g)^dagger |F><F| f'(g) - I|``."""
    imgs = scheme.images()
    A = np.einsum("gji,j->gi", imgs.conj(), scheme.F)  # f'(g)^dagger F
    total = np.einsum("gi,gj->ij", A, A.conj()) / imgs.shape[0]
    return float(np.abs(total - np.eye(scheme.dim)).max())


def _pair_amplitudes(scheme: ParallelScheme, psi) -> np.ndarray:
    """``a[g, g_hat] = <F| f'(g_hat)^dagger f'(g) |psi>``."""
    n = scheme.dec.rep.order
    amp = np.zeros((n, n), dtype=complex)
    for b, r, Psi in zip(scheme.dec.blocks, scheme.ranks, scheme.blocks(psi)):
        fl = b.images
        # (f(g_hat)^dagger f(g))[a, c] for a < r
        prod = np.einsum("hba,gbc->ghac", fl[:, :, :r].conj(), fl)
        amp += math.sqrt(b.dim) * np.einsum("ghac,ca->gh", prod, Psi)
    return amp


def amplitudes(scheme: ParallelScheme, psi) -> np.ndarray:
    """``<F| f'(g) |psi>`` for every element ``g``."""
    out = 0
    for b, r, Psi in zip(scheme.dec.blocks, scheme.ranks, scheme.blocks(psi)):
        out = out + math.sqrt(b.dim) * np.einsum("gac,ca->g", b.images[:, :r, :], Psi)
    return out


def parallel_probability_table(scheme: ParallelScheme, psi) -> np.ndarray:
    """``P[g, g_hat]``: probability of estimate ``g_hat`` under true ``g`` with ``Pi_cov``."""
    n = scheme.dec.rep.order
    return np.abs(_pair_amplitudes(scheme, psi)) ** 2 / n


def _check_unit(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ValidationError(f"input state must have unit norm, got {np.linalg.norm(psi):.12f}")
    return psi


def parallel_risk(psi, scheme: ParallelScheme, f: ProjectiveRep, v: ErrorFunction) -> float:
    """Bayes risk ``D_w(|psi>)`` of the parallel strategy ``(|psi>, Pi_cov)`` by direct summation."""
    psi = _check_unit(psi)
    if psi.size != scheme.dim:
        raise DimensionError(f"psi has dimension {psi.size}, scheme expects {scheme.dim}")
    check_quadrature(f, v)
    P = parallel_probability_table(scheme, psi)
    G = f.group
    wt = v.values[G.table[G.inverse]]  # wt[g, g_hat] = v(g^{-1} g_hat)
    return float(np.sum(wt * P) / f.order)


def parallel_operator(scheme: ParallelScheme, f: ProjectiveRep, v: ErrorFunction) -> np.ndarray:
    """``W' = int v(h^{-1}) f'(h)^dagger |F><F| f'(h) dmu(h)`` on ``H'``."""
    check_quadrature(f, v)
    n = f.order
    A = np.zeros((n, scheme.dim), dtype=complex)
    for b, r, o in zip(scheme.dec.blocks, scheme.ranks, scheme.offsets):
        # f_lambda(h)^dagger acting on sqrt(d) sum_{a<r} |a, a>
        A[:, o:o + b.dim * r] = math.sqrt(b.dim) * np.conj(b.images[:, :r, :]).transpose(0, 2, 1).reshape(n, -1)
    wt = v.relabeled(f.group)
    W = np.einsum("h,hi,hj->ij", wt, A, A.conj()) / n
    return (W + W.conj().T) / 2


@dataclass(frozen=True, eq=False)
class ParallelOptimum:
    psi: np.ndarray
    risk: float
    scheme: ParallelScheme


def optimal_parallel_input(f: ProjectiveRep, dec: IrrepDecomposition, v: ErrorFunction,
                           l: int | None = None) -> ParallelOptimum:
    """Minimum eigenvector of ``W'`` over unit vectors on ``H'``."""
    scheme = build_parallel_scheme(dec, l)
    vals, vecs = hermitian_eig(parallel_operator(scheme, f, v))
    from .matcore import fix_phase

    return ParallelOptimum(fix_phase(vecs[:, 0]), float(vals[0]), scheme)


# ---------------------------------------------------------------- seed -> input map


def _psi_from_contractions(Z: list, scheme: ParallelScheme) -> np.ndarray:
    if not scheme.is_full:
        raise ValidationError("psi[T] needs the full space H' (reference dimension l >= d/n for every irrep)")
    if all(np.abs(z).max(initial=0.0) < 1e-14 for z in Z):
        raise InfeasibleError("seed has no diagonal-block content; it violates the normalization")
    parts = [z.conj().T.reshape(-1) / math.sqrt(b.dim) for z, b in zip(Z, scheme.dec.blocks)]
    return np.concatenate(parts)


def psi_from_seed(X, dec: IrrepDecomposition, scheme: ParallelScheme | None = None,
                  check: bool = True) -> np.ndarray:
    """Parallel input ``psi[T]`` for the rank-one seed ``T = |X><X|``.

    Per irrep, the diagonal block of ``X`` (viewed as an operator in the
    block basis) is contracted against ``|I_{n_lambda}>>`` on the
    multiplicity indices, giving a ``d_lambda x d_lambda`` matrix ``Z``;
    the input block is ``Z^dagger / sqrt(d_lambda)``, so that
    ``<X| F(g) |I>> = <F| f'(g) |psi[T]>`` for every ``g``.
    """
    scheme = scheme or build_parallel_scheme(dec)
    Xm = dec.vector_to_block_matrix(X)
    Z = []
    for b in dec.blocks:
        sub = Xm[b.offset:b.offset + b.size, b.offset:b.offset + b.size].reshape(b.dim, b.mult, b.dim, b.mult)
        Z.append(np.einsum("axbx->ab", sub))
    psi = _psi_from_contractions(Z, scheme)
    if check and abs(np.vdot(psi, psi).real - 1) > FEASIBILITY_TOL:
        raise ValidationError(f"seed is not normalized: Tr T N = {np.vdot(psi, psi).real:.12f}")
    return psi


def psi_from_coords(x, dec: IrrepDecomposition, scheme: ParallelScheme | None = None) -> np.ndarray:
    """``psi[T]`` for a seed given in compressed coordinates."""
    scheme = scheme or build_parallel_scheme(dec)
    Z, o = [], 0
    for b in dec.blocks:
        Z.append(np.asarray(x[o:o + b.dim * b.dim]).reshape(b.dim, b.dim))
        o += b.dim * b.dim
    return _psi_from_contractions(Z, scheme)


@dataclass(frozen=True)
class SimulationReport:
    max_deviation: float
    worst_pair: tuple
    amplitude_deviation: float
    gpovm_risk: float | None
    parallel_risk: float | None
    tol: float

    @property
    def risk_deviation(self) -> float:
        if self.gpovm_risk is None:
            return 0.0
        return abs(self.gpovm_risk - self.parallel_risk)

    @property
    def passed(self) -> bool:
        return max(self.max_deviation, self.amplitude_deviation, self.risk_deviation) <= self.tol


def verify_simulation(X, f: ProjectiveRep, dec: IrrepDecomposition, v: ErrorFunction | None = None,
                      tol: float = 1e-9) -> SimulationReport:
    """Compare the covariant GPOVM ``M_T`` with the parallel strategy on ``psi[T]``.

    Checks every ``(true g, estimate g_hat)`` probability, the amplitude
    moduli ``|<X|F(g)|I>>| = |<F|f'(g)|psi[T]>|``, and (with ``v``) the
    two Bayes risks.
    """
    X = np.asarray(X, dtype=complex).reshape(-1)
    scheme = build_parallel_scheme(dec)
    psi = psi_from_seed(X, dec, scheme)
    P1, _ = probability_table(covariant_gpovm(X, f, check=False), f)
    P2 = parallel_probability_table(scheme, psi)
    diff = np.abs(P1 - P2)
    g, gh = np.unravel_index(int(np.argmax(diff)), diff.shape)
    amp1 = np.abs(choi_vectors(f) @ X.conj())
    amp2 = np.abs(amplitudes(scheme, psi))
    r1 = r2 = None
    if v is not None:
        G = f.group
        wt = v.values[G.table[G.inverse]]
        r1 = float(np.sum(wt * P1) / f.order)
        r2 = parallel_risk(psi, scheme, f, v)
    return SimulationReport(float(diff.max()), (int(g), int(gh)), float(np.abs(amp1 - amp2).max()), r1, r2, tol)
