"""Sequential (adaptive) strategies as quantum combs.

Time step ``k`` feeds system ``A_k`` into the ``k``-th channel and receives
``B_k``. On the doubled space the subsystems are ordered
``(B_1, ..., B_n, A_1, ..., A_n)``, the ordering produced by vectorizing
``f(g) = f_1(g) (x) ... (x) f_n(g)``.

The comb conditions checked are

* ``Tr sum_x M_x = dim K_B`` with ``K_B = B_1 (x) ... (x) B_n``;
* for each ``k``: the operator left after tracing out every system of steps
  ``k+1..n`` acts as the identity on ``B_k``, i.e. it equals
  ``I_{B_k} (x) Tr_{B_k}(.) / d_{B_k}``.

The report also carries the residual of the same identity without the
``1/d_{B_k}`` factor, for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .gpovm import Gpovm, finite_gpovm
from .matcore import partial_trace, random_isometry, random_psd


@dataclass(frozen=True)
class ConstraintSpec:
    kind: str  # "master" or "comb"
    dims: tuple = ()  # ((d_A1, d_B1), (d_A2, d_B2), ...)

    @property
    def n_steps(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return math.prod(a * b for a, b in self.dims)

    @property
    def dim_kb(self) -> int:
        return math.prod(b for _, b in self.dims)

    def system_dims(self) -> list:
        return [b for _, b in self.dims] + [a for a, _ in self.dims]


def comb_spec(dims) -> ConstraintSpec:
    dims = tuple((int(a), int(b)) for a, b in dims)
    if not dims or any(a < 1 or b < 1 for a, b in dims):
        raise ValidationError("comb needs at least one step with positive dimensions")
    return ConstraintSpec("comb", dims)


@dataclass(frozen=True)
class CombReport:
    ad0_residual: float
    ad_residuals: tuple
    ad_residuals_unnormalized: tuple

    @property
    def max_residual(self) -> float:
        return max((self.ad0_residual, *self.ad_residuals))

    def passed(self, tol: float = 1e-9) -> bool:
        return self.max_residual <= tol


def _total(ops) -> np.ndarray:
    if isinstance(ops, Gpovm):
        if ops.kind == "covariant":
            raise ValidationError("comb check needs a finite-outcome GPOVM")
        return ops.total()
    ops = [np.asarray(o, dtype=complex) for o in ops]
    if not ops:
        raise ValidationError("empty operator list")
    return sum(ops[1:], ops[0].copy())


def comb_constraint_check(ops, spec: ConstraintSpec) -> CombReport:
    """Residuals of the comb normalization conditions for ``sum_x M_x``."""
    S = _total(ops)
    if S.shape != (spec.total_dim, spec.total_dim):
        raise DimensionError(f"operators have shape {S.shape}, comb dims multiply to {spec.total_dim}")
    n = spec.n_steps
    sys_dims = spec.system_dims()
    ad0 = float(abs(np.trace(S) - spec.dim_kb))
    normed, raw = [], []
    for k in range(1, n + 1):
        later = [j for j in range(k, n)] + [n + j for j in range(k, n)]  # B_{k+1..n}, A_{k+1..n}
        L = partial_trace(S, sys_dims, later)
        rem = [sys_dims[j] for j in range(k)] + [sys_dims[n + j] for j in range(k)]
        m = len(rem)
        pos = k - 1  # B_k inside the remaining ordering
        dB = rem[pos]
        red = partial_trace(L, rem, [pos])
        red_dims = rem[:pos] + rem[pos + 1:]
        red_t = red.reshape(red_dims + red_dims)
        expanded = np.moveaxis(np.multiply.outer(red_t, np.eye(dB)), [-2, -1], [pos, m + pos])
        R = expanded.reshape(L.shape)
        normed.append(float(np.abs(L - R / dB).max()))
        raw.append(float(np.abs(L - R).max()))
    return CombReport(ad0, tuple(normed), tuple(raw))


@dataclass(frozen=True, eq=False)
class SequentialStrategy:
    """Input state, inter-step isometries and final POVM of an adaptive strategy.

    ``phi`` lives on ``A_1 (x) R_1``; ``isometries[k]`` maps
    ``B_{k+1} (x) R_{k+1} -> A_{k+2} (x) R_{k+2}``; ``povm[x]`` acts on
    ``B_n (x) R_n``.
    """

    dims: tuple
    memory: tuple
    phi: np.ndarray
    isometries: tuple
    povm: tuple

    def tester(self) -> list:
        """Comb operators ``M_x`` on ``(B_1..B_n, A_1..A_n)``."""
        n = len(self.dims)
        dA1 = self.dims[0][0]
        phi = self.phi.reshape(dA1, self.memory[0])
        Y = np.einsum("ar,cq->arcq", phi, phi.conj())
        for k, V in enumerate(self.isometries):
            dB, dA2 = self.dims[k][1], self.dims[k + 1][0]
            Vt = V.reshape(dA2, self.memory[k + 1], dB, self.memory[k])
            Y = np.einsum("...arcq,xsbr,ytdq->...badcxsyt", Y, Vt, Vt.conj())
        dBn, rn = self.dims[-1][1], self.memory[-1]
        out = []
        D = math.prod(a * b for a, b in self.dims)
        perm = [4 * k + 2 for k in range(n)] + [4 * k + 3 for k in range(n)] \
            + [4 * k for k in range(n)] + [4 * k + 1 for k in range(n)]
        for P in self.povm:
            Pt = P.reshape(dBn, rn, dBn, rn)
            coef = np.einsum("...asct,dtbs->...badc", Y, Pt)
            out.append(np.transpose(coef, perm).reshape(D, D))
        return out

    def probabilities(self, unitaries) -> np.ndarray:
        """Outcome distribution when step ``k`` applies ``unitaries[k]`` (direct simulation)."""
        state = self.phi.copy()  # on A_k (x) R_k
        for k, Uk in enumerate(unitaries):
            dA = self.dims[k][0]
            r = self.memory[k]
            state = (np.asarray(Uk) @ state.reshape(dA, r)).reshape(-1)  # now B_k (x) R_k
            if k < len(self.isometries):
                state = self.isometries[k] @ state
        return np.array([np.vdot(state, P @ state).real for P in self.povm])


def random_sequential_strategy(dims, rng: np.random.Generator, memory: int = 2,
                               n_outcomes: int = 4) -> SequentialStrategy:
    """Random adaptive strategy from Stinespring isometries and a random POVM."""
    dims = tuple((int(a), int(b)) for a, b in dims)
    mem = [memory]
    isos = []
    for k in range(len(dims) - 1):
        dB, dA2 = dims[k][1], dims[k + 1][0]
        r2 = max(memory, -(-dB * mem[-1] // dA2))
        isos.append(random_isometry(dB * mem[-1], dA2 * r2, rng))
        mem.append(r2)
    dim0 = dims[0][0] * mem[0]
    phi = rng.normal(size=dim0) + 1j * rng.normal(size=dim0)
    phi /= np.linalg.norm(phi)
    dF = dims[-1][1] * mem[-1]
    # the first effect has full rank so that the normalizing sum is invertible
    raw = [random_psd(dF, dF if x == 0 else int(rng.integers(1, dF + 1)), rng) for x in range(n_outcomes)]
    S = sum(raw[1:], raw[0].copy())
    w, U = np.linalg.eigh(S)
    Sinv = (U / np.sqrt(w)) @ U.conj().T
    povm = tuple(Sinv @ G @ Sinv for G in raw)
    return SequentialStrategy(dims, tuple(mem), phi, tuple(isos), povm)


def sequential_gpovm(strategy: SequentialStrategy, f, outcomes) -> Gpovm:
    """Embed a sequential strategy as a finite-outcome GPOVM with the given estimates."""
    return finite_gpovm(outcomes, np.stack(strategy.tester()), f)
