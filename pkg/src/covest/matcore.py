"""Dense complex linear algebra used throughout the package.

Matrices and vectors are plain ``numpy`` arrays of dtype ``complex128``.
Vectorization is row-major: for a ``d x d`` matrix ``A`` the component at
index ``k*d + k'`` of ``|A>>`` is ``A[k, k']``, so that
``kron(A, B) @ vectorize(X) == vectorize(A @ X @ B.T)``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionError, InfeasibleError, ValidationError

HERMITIAN_TOL = 1e-10
DEFAULT_RANK_TOL = 1e-9


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {A.shape}")
    return A


def is_hermitian(A, tol: float = HERMITIAN_TOL) -> bool:
    A = np.asarray(A)
    return A.ndim == 2 and A.shape[0] == A.shape[1] and np.abs(A - A.conj().T).max(initial=0.0) <= tol


def check_hermitian(A, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    dev = np.abs(A - A.conj().T).max(initial=0.0)
    if dev > tol:
        raise ValidationError(f"{name} is not Hermitian (max deviation {dev:.3e})")
    return A


def check_psd(A, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    A = check_hermitian(A, tol, name)
    lo = np.linalg.eigvalsh((A + A.conj().T) / 2)[0] if A.size else 0.0
    if lo < -tol:
        raise ValidationError(f"{name} is not positive semi-definite (min eigenvalue {lo:.3e})")
    return A


def vectorize(A) -> np.ndarray:
    """Return ``|A>> = sum_{k,k'} A[k,k'] |k, k'>`` for a square matrix."""
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"vectorize needs a square matrix, got shape {A.shape}")
    return A.reshape(-1).copy()


def unvectorize(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionError(f"vector of length {v.size} is not a square")
    return v.reshape(d, d).copy()


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def direct_sum(A, B) -> np.ndarray:
    """Block-diagonal matrix ``diag(A, B)``."""
    return scipy.linalg.block_diag(as_matrix(A), as_matrix(B))


def hermitian_eig(H, tol: float = HERMITIAN_TOL):
    """Eigen-decomposition of a Hermitian matrix.

    Returns ``(values, vectors)`` with ascending real eigenvalues and the
    orthonormal eigenvectors as the columns of ``vectors``.
    """
    H = check_hermitian(H, tol)
    vals, vecs = np.linalg.eigh((H + H.conj().T) / 2)
    return vals, vecs


def fix_phase(x: np.ndarray) -> np.ndarray:
    """Rotate ``x`` so its first non-negligible component is real positive."""
    x = np.asarray(x, dtype=complex)
    mags = np.abs(x)
    if mags.size == 0 or mags.max() == 0:
        return x
    i = int(np.argmax(mags > 1e-8 * mags.max()))
    return x * (abs(x[i]) / x[i])


def min_generalized_eig(W, N, rank_tol: float = DEFAULT_RANK_TOL):
    """Minimize ``<x|W|x>`` subject to ``<x|N|x> = 1``.

    ``x`` is restricted to the support of ``N`` (eigenvalues above
    ``rank_tol`` times the largest). The pencil is compressed with
    ``N^{-1/2}`` on that support and solved as an ordinary Hermitian
    eigenproblem; ties go to the lowest index of the ascending ordering.

    Returns ``(value, x)``.
    """
    W = check_psd(W, name="W")
    N = check_psd(N, name="N")
    if W.shape != N.shape:
        raise DimensionError(f"W {W.shape} and N {N.shape} differ in shape")
    nvals, nvecs = np.linalg.eigh((N + N.conj().T) / 2)
    top = nvals[-1] if nvals.size else 0.0
    if top <= 1e-300 or top < 1e-14 * max(1.0, np.abs(W).max(initial=0.0)):
        raise InfeasibleError("normalization operator N is numerically zero")
    keep = nvals > rank_tol * top
    S = nvecs[:, keep] / np.sqrt(nvals[keep])
    C = S.conj().T @ W @ S
    vals, vecs = np.linalg.eigh((C + C.conj().T) / 2)
    x = fix_phase(S @ vecs[:, 0])
    return float(vals[0]), x


def span_basis(vs, rank_tol: float = DEFAULT_RANK_TOL, dim: int | None = None) -> np.ndarray:
    """Orthonormal basis (as columns) of the span of the vectors ``vs``."""
    vs = [np.asarray(v, dtype=complex).reshape(-1) for v in vs]
    if not vs:
        if dim is None:
            raise DimensionError("empty vector family needs an explicit dimension")
        return np.zeros((dim, 0), dtype=complex)
    sizes = {v.size for v in vs}
    if len(sizes) != 1:
        raise DimensionError(f"vectors have mismatched dimensions {sorted(sizes)}")
    if dim is not None and dim not in sizes:
        raise DimensionError(f"vectors have dimension {sizes.pop()}, expected {dim}")
    A = np.stack(vs, axis=1)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    keep = s**2 > rank_tol * s[0] ** 2
    return U[:, keep]


def projector_onto_span(vs, rank_tol: float = DEFAULT_RANK_TOL, dim: int | None = None) -> np.ndarray:
    """Orthogonal projector onto ``span(vs)``.

    An empty family gives the zero projector of size ``dim``.
    """
    B = span_basis(vs, rank_tol, dim)
    return B @ B.conj().T


def partial_trace(op, dims, traced) -> np.ndarray:
    """Trace out the subsystems listed in ``traced`` from ``op`` on ``prod(dims)``."""
    op = as_matrix(op)
    dims = [int(x) for x in dims]
    total = int(np.prod(dims))
    if op.shape != (total, total):
        raise DimensionError(f"operator shape {op.shape} does not match dims {dims}")
    t = op.reshape(dims + dims)
    n = len(dims)
    for idx in sorted(set(traced), reverse=True):
        t = np.trace(t, axis1=idx, axis2=idx + n)
        n -= 1
    kept = [dims[i] for i in range(len(dims)) if i not in set(traced)]
    size = int(np.prod(kept)) if kept else 1
    return t.reshape(size, size)


def pairwise_sum(stack: np.ndarray) -> np.ndarray:
    """Sum along axis 0 by recursive halving (order-insensitive to ~1 ulp·log n)."""
    stack = np.asarray(stack)
    n = stack.shape[0]
    if n == 0:
        return np.zeros(stack.shape[1:], dtype=stack.dtype)
    if n <= 8:
        out = stack[0].copy()
        for item in stack[1:]:
            out = out + item
        return out
    half = n // 2
    return pairwise_sum(stack[:half]) + pairwise_sum(stack[half:])


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (A + A.conj().T) / 2


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    Z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    if d_out < d_in:
        raise DimensionError("isometry needs d_out >= d_in")
    return random_unitary(d_out, rng)[:, :d_in]


def random_psd(d: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    return G @ G.conj().T
