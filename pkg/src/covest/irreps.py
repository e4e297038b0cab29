"""Isotypic decomposition ``H = (+)_lambda U_lambda (x) C^{n_lambda}``.

Finite groups are decomposed with the commutant method, which does not
care whether the cocycle is trivial:

1. ``R = mean_g f(g) X f(g)^dagger`` for a random Hermitian ``X`` lies in the
   commutant ``(+)_lambda I_{d_lambda} (x) R_lambda``; its eigenspaces are
   irreducible subspaces ``U_lambda (x) |r>``.
2. Irreducible subspaces are grouped into isotypic classes by their
   characters (orthonormal for irreducible omega-reps with a fixed cocycle).
3. Each copy inside a class is rotated by a unitary intertwiner so that all
   copies carry literally identical irrep matrices.

The basis change is ordered so that inside block ``lambda`` the column
``offset + a*n_lambda + alpha`` carries irrep index ``a`` and copy ``alpha``;
``V^dagger f(g) V = (+)_lambda f_lambda(g) (x) I_{n_lambda}``.

Labels are ``"d<dim>.<j>"`` with ``j`` counting irreps of that dimension in
descending character order (so the trivial irrep is ``d1.0``). For
non-trivial cocycles these are numeric fingerprints, not named characters.
U(1) blocks are labelled ``"k=<mode>"``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalDegeneracyError, UnsupportedError, ValidationError
from .groups import ProjectiveRep
from .matcore import random_hermitian, unvectorize, vectorize

BLOCK_TOL = 1e-9
MAX_RETRIES = 5


@dataclass(frozen=True, eq=False)
class IrrepBlock:
    label: str
    dim: int
    mult: int
    offset: int
    images: np.ndarray  # f_lambda(g), shape (order, dim, dim)
    character: np.ndarray  # shape (order,)
    mode: int | None = None

    @property
    def size(self) -> int:
        return self.dim * self.mult


@dataclass(frozen=True, eq=False)
class IrrepDecomposition:
    rep: ProjectiveRep
    blocks: tuple
    basis_change: np.ndarray | None
    off_block_residual: float

    @property
    def labels(self) -> list:
        return [b.label for b in self.blocks]

    @property
    def dims(self) -> list:
        return [b.dim for b in self.blocks]

    @property
    def mults(self) -> list:
        return [b.mult for b in self.blocks]

    @property
    def block_index(self) -> dict:
        return {b.label: (b.offset, b.dim, b.mult) for b in self.blocks}

    def block(self, label) -> IrrepBlock:
        for b in self.blocks:
            if b.label == label:
                return b
        raise ValidationError(f"unknown irrep label {label!r}; known: {self.labels}")

    def require_basis(self) -> np.ndarray:
        if self.basis_change is None:
            raise UnsupportedError(f"representation of dimension {self.rep.d} has no materialized basis change")
        return self.basis_change

    def to_block_basis(self, A) -> np.ndarray:
        """``V^dagger A V`` for an operator ``A`` on ``H``."""
        V = self.require_basis()
        return V.conj().T @ np.asarray(A) @ V

    def vector_to_block_matrix(self, x) -> np.ndarray:
        """View a doubled-space vector ``|A>>`` as the matrix ``V^dagger A V``."""
        return self.to_block_basis(unvectorize(x))

    def block_matrix_to_vector(self, B) -> np.ndarray:
        V = self.require_basis()
        return vectorize(V @ np.asarray(B) @ V.conj().T)

    def summary(self) -> dict:
        return {
            "labels": self.labels,
            "dims": self.dims,
            "mults": self.mults,
            "off_block_residual": self.off_block_residual,
        }


def _character_key(chi: np.ndarray) -> tuple:
    key = []
    for c in chi:
        key.append(-round(float(c.real), 6) + 0.0)
        key.append(-round(float(c.imag), 6) + 0.0)
    return tuple(key)


def _restrict(U: np.ndarray, E: np.ndarray) -> np.ndarray:
    return np.einsum("ia,gij,jb->gab", E.conj(), U, E)


def _irreducible_subspaces(U: np.ndarray, rng: np.random.Generator):
    n, d = U.shape[0], U.shape[1]
    for _ in range(MAX_RETRIES):
        X = random_hermitian(d, rng)
        R = np.einsum("gij,jk,glk->il", U, X, U.conj()) / n
        vals, vecs = np.linalg.eigh((R + R.conj().T) / 2)
        gap = 1e-8 * max(1.0, float(np.abs(vals).max()))
        cuts = [0] + [i + 1 for i in range(d - 1) if vals[i + 1] - vals[i] > gap] + [d]
        subspaces = [vecs[:, a:b] for a, b in zip(cuts[:-1], cuts[1:])]
        restricted = [_restrict(U, E) for E in subspaces]
        norms = [np.sum(np.abs(np.einsum("gaa->g", fE)) ** 2) / n for fE in restricted]
        if all(abs(x - 1) < 1e-6 for x in norms):
            return subspaces, restricted
    raise NumericalDegeneracyError(f"commutant eigenspaces stayed reducible after {MAX_RETRIES} random draws")


def _intertwiner(ref: np.ndarray, other: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Unitary ``A`` with ``ref(g) A = A other(g)`` for all ``g``."""
    k = ref.shape[1]
    for _ in range(MAX_RETRIES):
        Y = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        A = np.einsum("gij,jk,glk->il", ref, Y, other.conj()) / ref.shape[0]
        scale = np.sqrt(np.trace(A @ A.conj().T).real / k)
        if scale > 1e-6:
            return A / scale
    raise NumericalDegeneracyError("could not find an intertwiner between equivalent irreducible copies")


def _decompose_u1(f: ProjectiveRep) -> IrrepDecomposition:
    phases = f.mode_phases()
    blocks = []
    offset = 0
    for i, (k, m) in enumerate(zip(f.modes, f.mults)):
        blocks.append(IrrepBlock(
            label=f"k={k}", dim=1, mult=m, offset=offset,
            images=phases[:, i].reshape(-1, 1, 1).copy(), character=phases[:, i].copy(), mode=k,
        ))
        offset += m
    V = np.eye(f.d, dtype=complex) if f.d <= 4096 else None
    return IrrepDecomposition(f, tuple(blocks), V, 0.0)


def decompose(f: ProjectiveRep, seed: int = 0, tol: float = BLOCK_TOL) -> IrrepDecomposition:
    """Isotypic decomposition of ``f``; deterministic for a given ``seed``."""
    if f.is_u1:
        return _decompose_u1(f)
    U = f.images()
    n, d = U.shape[0], U.shape[1]
    rng = np.random.default_rng(seed)
    subspaces, restricted = _irreducible_subspaces(U, rng)

    classes = []  # each: list of (E, fE)
    for E, fE in zip(subspaces, restricted):
        chi = np.einsum("gaa->g", fE)
        for cls in classes:
            ref_chi = np.einsum("gaa->g", cls[0][1])
            if ref_chi.shape == chi.shape and cls[0][0].shape[1] == E.shape[1] \
                    and abs(np.vdot(ref_chi, chi)) / n > 0.5:
                cls.append((E, fE))
                break
        else:
            classes.append([(E, fE)])

    aligned = []
    for cls in classes:
        E0, f0 = cls[0]
        copies = [E0]
        for E, fE in cls[1:]:
            A = _intertwiner(f0, fE, rng)
            copies.append(E @ A.conj().T)
        chi = np.einsum("gaa->g", f0)
        aligned.append((f0.shape[1], _character_key(chi), f0, chi, copies))
    aligned.sort(key=lambda item: (item[0], item[1]))

    blocks = []
    cols = []
    offset = 0
    per_dim: dict = {}
    for dim, _, f0, chi, copies in aligned:
        j = per_dim.get(dim, 0)
        per_dim[dim] = j + 1
        mult = len(copies)
        stacked = np.stack(copies, axis=2)  # (d, dim, mult)
        cols.append(stacked.reshape(d, dim * mult))
        blocks.append(IrrepBlock(f"d{dim}.{j}", dim, mult, offset, f0.copy(), chi.copy()))
        offset += dim * mult
    V = np.concatenate(cols, axis=1)

    target = np.zeros_like(U)
    for b in blocks:
        sl = slice(b.offset, b.offset + b.size)
        target[:, sl, sl] = np.einsum("gab,xy->gaxby", b.images, np.eye(b.mult)).reshape(n, b.size, b.size)
    residual = float(np.abs(np.einsum("ia,gij,jb->gab", V.conj(), U, V) - target).max())
    unit_dev = float(np.abs(V.conj().T @ V - np.eye(d)).max())
    if residual > tol or unit_dev > tol:
        raise NumericalDegeneracyError(
            f"block diagonalization failed: worst off-block residual {residual:.3e}, "
            f"basis unitarity deviation {unit_dev:.3e}", residual=residual)
    return IrrepDecomposition(f, tuple(blocks), V, residual)


def multiplicity(f: ProjectiveRep, irrep) -> int:
    """Multiplicity of an irrep in ``f`` by the character inner product.

    ``irrep`` is an :class:`IrrepBlock`, a character array, or (for U(1)) an
    integer mode. Only linear (trivial-cocycle) reps are supported.
    """
    if f.is_u1:
        k = irrep.mode if isinstance(irrep, IrrepBlock) else int(irrep)
        return dict(zip(f.modes, f.mults)).get(k, 0)
    if not f.is_linear():
        raise UnsupportedError("character multiplicities need a trivial cocycle; use decompose()")
    chi = irrep.character if isinstance(irrep, IrrepBlock) else np.asarray(irrep, dtype=complex)
    traces = np.einsum("gii->g", f.images())
    value = np.vdot(chi, traces) / f.order
    rounded = int(round(value.real))
    if abs(value - rounded) > 1e-6:
        raise NumericalDegeneracyError(f"multiplicity {value} is not an integer", residual=abs(value - rounded))
    return rounded


def character_multiplicities(f: ProjectiveRep, dec: IrrepDecomposition) -> dict:
    return {b.label: multiplicity(f, b) for b in dec.blocks}


def isotypic_projector(dec: IrrepDecomposition, label) -> np.ndarray:
    """Orthogonal projector onto the isotypic component of ``label``."""
    b = dec.block(label)
    V = dec.require_basis()
    cols = V[:, b.offset:b.offset + b.size]
    return cols @ cols.conj().T
