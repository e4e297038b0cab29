"""Compact groups and their projective unitary representations.

Finite groups are stored as an explicit multiplication table. The circle
group U(1) is modelled by ``Q`` equispaced quadrature nodes
``theta_j = 2*pi*j/Q``; node multiplication is addition mod ``Q``. Haar
integrals over U(1) are then node averages, exact for trigonometric
polynomials of degree below ``Q``.

A representation of U(1) is a multiset of integer modes,
``f(theta) = (+)_k exp(i k theta) I_{mult_k}``, kept symbolic so that large
tensor powers never materialize ``d x d`` matrices.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, UnsupportedError, ValidationError
from .matcore import pairwise_sum, vectorize

UNITARY_TOL = 1e-10
COCYCLE_TOL = 1e-9
# Largest number of complex entries images() will allocate for a U(1) rep.
DENSE_LIMIT = 50_000_000


@dataclass(frozen=True, eq=False)
class GroupSpec:
    kind: str  # "finite" or "u1"
    table: np.ndarray
    identity: int
    inverse: np.ndarray
    name: str = ""
    family: str = "table"
    params: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return int(self.table.shape[0])

    @property
    def is_u1(self) -> bool:
        return self.kind == "u1"

    @property
    def Q(self) -> int | None:
        return self.order if self.is_u1 else None

    def mul(self, a, b):
        return self.table[a, b]

    def inv(self, a):
        return self.inverse[a]

    def angles(self) -> np.ndarray:
        if not self.is_u1:
            raise UnsupportedError("angles are only defined for U(1)")
        return 2 * np.pi * np.arange(self.order) / self.order

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.table, self.table.T))

    def elements(self) -> range:
        return range(self.order)

    def check_element(self, g) -> int:
        if isinstance(g, (bool, np.bool_)) or not isinstance(g, (int, np.integer)):
            raise ValidationError(f"group element must be an integer index, got {g!r}")
        if not 0 <= int(g) < self.order:
            raise ValidationError(f"element {g} out of range for group of order {self.order}")
        return int(g)


def _validate_table(mul, sample_seed: int = 0) -> tuple[np.ndarray, int, np.ndarray]:
    T = np.asarray(mul)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] == 0:
        raise ValidationError(f"multiplication table must be a non-empty square array, got shape {T.shape}")
    if not np.issubdtype(T.dtype, np.integer):
        if not np.all(np.asarray(T, dtype=float) == np.round(np.asarray(T, dtype=float))):
            raise ValidationError("multiplication table entries must be integers")
        T = np.asarray(T, dtype=float).astype(np.int64)
    T = T.astype(np.int64)
    n = T.shape[0]
    if T.min() < 0 or T.max() >= n:
        raise ValidationError("multiplication table entries out of range")
    ref = np.arange(n)
    for i in range(n):
        if not np.array_equal(np.sort(T[i]), ref):
            raise ValidationError(f"row {i} of the multiplication table is not a permutation")
        if not np.array_equal(np.sort(T[:, i]), ref):
            raise ValidationError(f"column {i} of the multiplication table is not a permutation")
    ids = [e for e in range(n) if np.array_equal(T[e], ref) and np.array_equal(T[:, e], ref)]
    if not ids:
        raise ValidationError("multiplication table has no identity element")
    e = ids[0]
    if n <= 64:
        left = T[T[:, :, None], np.arange(n)[None, None, :]]  # (ab)c
        right = T[np.arange(n)[:, None, None], T[None, :, :]]  # a(bc)
        bad = np.argwhere(left != right)
        if bad.size:
            a, b, c = (int(x) for x in bad[0])
            raise ValidationError(f"multiplication table is not associative at triple ({a}, {b}, {c})")
    else:
        rng = np.random.default_rng(sample_seed)
        for a, b, c in rng.integers(0, n, size=(1000, 3)):
            if T[T[a, b], c] != T[a, T[b, c]]:
                raise ValidationError(f"multiplication table is not associative at triple ({a}, {b}, {c})")
    inv = np.argmax(T == e, axis=1)
    return T, e, inv


def make_group(mul, name: str = "", family: str = "table", params: dict | None = None) -> GroupSpec:
    """Build a finite group from its multiplication table, checking the group axioms."""
    T, e, inv = _validate_table(mul)
    return GroupSpec("finite", T, e, inv, name=name or f"table({T.shape[0]})", family=family, params=params or {})


def cyclic(N: int) -> GroupSpec:
    if N < 1:
        raise ValidationError("cyclic group needs N >= 1")
    idx = np.arange(N)
    T = (idx[:, None] + idx[None, :]) % N
    return make_group(T, name=f"cyclic({N})", family="cyclic", params={"N": N})


def trivial_group() -> GroupSpec:
    return cyclic(1)


def dihedral(N: int) -> GroupSpec:
    """Dihedral group of order 2N; element ``r^a s^m`` has index ``a + N*m``."""
    if N < 1:
        raise ValidationError("dihedral group needs N >= 1")
    T = np.empty((2 * N, 2 * N), dtype=np.int64)
    for m, a, n, b in itertools.product(range(2), range(N), range(2), range(N)):
        sign = -1 if m else 1
        T[a + N * m, b + N * n] = (a + sign * b) % N + N * ((m + n) % 2)
    return make_group(T, name=f"dihedral({N})", family="dihedral", params={"N": N})


def heisenberg_weyl_group(d: int) -> GroupSpec:
    """Z_d x Z_d indexed by ``a*d + b``; the projective HW representation lives on it."""
    if d < 1:
        raise ValidationError("Heisenberg-Weyl group needs d >= 1")
    T = np.empty((d * d, d * d), dtype=np.int64)
    for a, b, a2, b2 in itertools.product(range(d), repeat=4):
        T[a * d + b, a2 * d + b2] = ((a + a2) % d) * d + (b + b2) % d
    return make_group(T, name=f"heisenberg_weyl({d})", family="heisenberg_weyl", params={"d": d})


def permutation_group(generators) -> GroupSpec:
    """Close a set of permutations (lists of images) under composition and tabulate."""
    gens = [tuple(int(x) for x in g) for g in generators]
    if not gens:
        raise ValidationError("need at least one generator")
    degree = len(gens[0])
    if any(len(g) != degree or sorted(g) != list(range(degree)) for g in gens):
        raise ValidationError("generators must be permutations of a common degree")
    ident = tuple(range(degree))
    elems = [ident]
    index = {ident: 0}
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = tuple(p[g[i]] for i in range(degree))
                if q not in index:
                    index[q] = len(elems)
                    elems.append(q)
                    nxt.append(q)
        frontier = nxt
    n = len(elems)
    if n > 4096:
        raise ValidationError(f"generated group has order {n}, above the supported 4096")
    T = np.empty((n, n), dtype=np.int64)
    for i, p in enumerate(elems):
        for j, q in enumerate(elems):
            T[i, j] = index[tuple(p[q[k]] for k in range(degree))]
    return make_group(T, name=f"permutations({n})", family="permutations",
                      params={"degree": degree, "elements": elems})


def u1(Q: int) -> GroupSpec:
    """U(1) discretized at ``Q`` equispaced nodes."""
    Q = int(Q)
    if Q < 1:
        raise ValidationError("U(1) quadrature needs Q >= 1")
    idx = np.arange(Q)
    T = (idx[:, None] + idx[None, :]) % Q
    inv = (-idx) % Q
    return GroupSpec("u1", T, 0, inv, name=f"u1(Q={Q})", family="u1", params={"Q": Q})


def group_from_document(doc: dict) -> GroupSpec:
    """Parse a group document such as ``{"kind": "cyclic", "N": 8}``."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValidationError("group document must be an object with a 'kind' field")
    kind = doc["kind"]
    try:
        if kind == "cyclic":
            return cyclic(int(doc["N"]))
        if kind == "dihedral":
            return dihedral(int(doc["N"]))
        if kind == "table":
            return make_group(doc["mul"])
        if kind == "u1":
            return u1(int(doc["Q"]))
        if kind in ("heisenberg_weyl", "hw"):
            return heisenberg_weyl_group(int(doc["d"]))
        if kind == "trivial":
            return trivial_group()
        if kind == "permutations":
            return permutation_group(doc["generators"])
    except KeyError as exc:
        raise ValidationError(f"group document of kind {kind!r} is missing field {exc}") from None
    raise ValidationError(f"unknown group kind {kind!r}")


@dataclass(frozen=True, eq=False)
class ProjectiveRep:
    """A projective unitary representation ``g -> f(g)`` with cocycle ``omega``.

    ``f(g) f(h) = omega(g, h) f(gh)``. Finite groups carry one unitary per
    element; U(1) carries sorted distinct integer ``modes`` with
    multiplicities ``mults``.
    """

    group: GroupSpec
    unitaries: np.ndarray | None = None
    cocycle_table: np.ndarray | None = None
    modes: tuple = ()
    mults: tuple = ()
    name: str = ""

    @property
    def is_u1(self) -> bool:
        return self.group.is_u1

    @property
    def d(self) -> int:
        if self.is_u1:
            return int(sum(self.mults))
        return int(self.unitaries.shape[1])

    @property
    def order(self) -> int:
        return self.group.order

    @property
    def max_mode(self) -> int:
        return max(abs(k) for k in self.modes) if self.modes else 0

    def can_materialize(self) -> bool:
        return (not self.is_u1) or self.order * self.d * self.d <= DENSE_LIMIT

    def images(self) -> np.ndarray:
        """All ``f(g)`` stacked as an array of shape ``(order, d, d)``."""
        if not self.is_u1:
            return self.unitaries
        if not self.can_materialize():
            raise UnsupportedError(f"U(1) representation of dimension {self.d} is too large to materialize")
        phases = self.mode_phases()  # (Q, n_modes)
        diag = np.repeat(phases, self.mults, axis=1)
        out = np.zeros((self.order, self.d, self.d), dtype=complex)
        i = np.arange(self.d)
        out[:, i, i] = diag
        return out

    def image(self, g) -> np.ndarray:
        g = self.group.check_element(g)
        if not self.is_u1:
            return self.unitaries[g]
        return self.images()[g]

    def mode_phases(self) -> np.ndarray:
        """``exp(i k theta_j)`` as an array of shape ``(Q, n_modes)``."""
        theta = self.group.angles()
        return np.exp(1j * np.outer(theta, np.asarray(self.modes, dtype=float)))

    @property
    def cocycle(self) -> np.ndarray:
        if self.is_u1:
            return np.ones((self.order, self.order), dtype=complex)
        return self.cocycle_table

    def is_linear(self, tol: float = COCYCLE_TOL) -> bool:
        return bool(np.abs(self.cocycle - 1).max() <= tol)


def _infer_cocycle(group: GroupSpec, U: np.ndarray) -> np.ndarray:
    n, d = U.shape[0], U.shape[1]
    omega = np.empty((n, n), dtype=complex)
    for g in range(n):
        prod = np.einsum("ij,hjk->hik", U[g], U)  # f(g) f(h)
        target = U[group.table[g]]  # f(gh)
        omega[g] = np.einsum("hik,hik->h", prod, target.conj()) / d
    return omega


def _check_rep(group: GroupSpec, U: np.ndarray, omega: np.ndarray) -> None:
    n, d = U.shape[0], U.shape[1]
    eye = np.eye(d)
    dev = np.abs(np.einsum("gji,gjk->gik", U.conj(), U) - eye).max()
    if dev > UNITARY_TOL:
        g = int(np.argmax(np.abs(np.einsum("gji,gjk->gik", U.conj(), U) - eye).reshape(n, -1).max(axis=1)))
        raise ValidationError(f"f({g}) is not unitary (deviation {dev:.3e})")
    if np.abs(U[group.identity] - eye).max() > UNITARY_TOL:
        raise ValidationError("f(e) must be the identity")
    if np.abs(np.abs(omega) - 1).max() > COCYCLE_TOL:
        raise ValidationError("cocycle values must have unit modulus")
    worst, where = 0.0, None
    for g in range(n):
        prod = np.einsum("ij,hjk->hik", U[g], U)
        res = np.abs(prod - omega[g][:, None, None] * U[group.table[g]]).reshape(n, -1).max(axis=1)
        h = int(np.argmax(res))
        if res[h] > worst:
            worst, where = float(res[h]), (g, h)
    if worst > COCYCLE_TOL:
        raise ValidationError(f"f(g) f(h) != omega(g,h) f(gh) at (g, h) = {where} (residual {worst:.3e})")


def rep_from_unitaries(group: GroupSpec, unitaries, cocycle=None, name: str = "") -> ProjectiveRep:
    """Projective rep from explicit matrices; the cocycle is inferred when omitted."""
    if group.is_u1:
        raise UnsupportedError("U(1) representations are given by modes, not matrices")
    U = np.asarray(unitaries, dtype=complex)
    if U.ndim != 3 or U.shape[1] != U.shape[2]:
        raise DimensionError(f"expected an array of square matrices, got shape {U.shape}")
    if U.shape[0] != group.order:
        raise DimensionError(f"need {group.order} matrices, got {U.shape[0]}")
    omega = _infer_cocycle(group, U) if cocycle is None else np.asarray(cocycle, dtype=complex)
    if omega.shape != (group.order, group.order):
        raise DimensionError(f"cocycle table must have shape {(group.order, group.order)}")
    _check_rep(group, U, omega)
    U.setflags(write=False)
    omega.setflags(write=False)
    return ProjectiveRep(group, U, omega, name=name)


def u1_rep(group: GroupSpec, modes, name: str = "") -> ProjectiveRep:
    """U(1) rep from ``{k: mult}`` or an iterable of ``(k, mult)`` pairs / plain modes."""
    if not group.is_u1:
        raise ValidationError("u1 modes need a U(1) group")
    counts: Counter = Counter()
    items = modes.items() if isinstance(modes, dict) else modes
    for item in items:
        if isinstance(item, dict):
            k, m = item["k"], item.get("mult", 1)
        elif isinstance(item, (tuple, list)):
            k, m = item
        else:
            k, m = item, 1
        if int(m) != m or int(k) != k:
            raise ValidationError("modes and multiplicities must be integers")
        if m < 0:
            raise ValidationError("multiplicities must be non-negative")
        if m:
            counts[int(k)] += int(m)
    if not counts:
        raise ValidationError("representation needs at least one mode")
    ks = tuple(sorted(counts))
    max_k = max(abs(k) for k in ks)
    if group.order < 4 * max_k + 1:
        raise ValidationError(f"U(1) quadrature Q={group.order} too small for modes up to {max_k}; need Q >= {4 * max_k + 1}")
    return ProjectiveRep(group, modes=ks, mults=tuple(counts[k] for k in ks), name=name or f"u1modes{list(ks)}")


def characters_rep(group: GroupSpec, ks, name: str = "") -> ProjectiveRep:
    """Diagonal rep of a cyclic group, ``j -> diag(exp(2 pi i k j / N))_k``."""
    if group.family != "cyclic":
        raise ValidationError("character reps need a cyclic group")
    N = group.order
    ks = [int(k) for k in ks]
    if not ks:
        raise ValidationError("need at least one character")
    j = np.arange(N)
    phases = np.exp(2j * np.pi * np.outer(j, ks) / N)
    U = np.zeros((N, len(ks), len(ks)), dtype=complex)
    U[:, np.arange(len(ks)), np.arange(len(ks))] = phases
    return rep_from_unitaries(group, U, np.ones((N, N)), name=name or f"characters{ks}")


def regular_rep(group: GroupSpec) -> ProjectiveRep:
    if group.is_u1:
        raise UnsupportedError("regular rep of U(1) is infinite-dimensional")
    n = group.order
    U = np.zeros((n, n, n), dtype=complex)
    for g in range(n):
        U[g, group.table[g], np.arange(n)] = 1.0
    return rep_from_unitaries(group, U, np.ones((n, n)), name="regular")


def trivial_rep(group: GroupSpec, d: int = 1) -> ProjectiveRep:
    if group.is_u1:
        return u1_rep(group, {0: d}, name=f"trivial({d})")
    U = np.broadcast_to(np.eye(d, dtype=complex), (group.order, d, d)).copy()
    return rep_from_unitaries(group, U, np.ones((group.order, group.order)), name=f"trivial({d})")


def defining_rep(group: GroupSpec) -> ProjectiveRep:
    """Two-dimensional rotation/reflection rep of ``dihedral(N)``."""
    if group.family != "dihedral":
        raise ValidationError("the defining rep is only built in for dihedral groups")
    N = group.params["N"]
    U = np.empty((2 * N, 2, 2), dtype=complex)
    S = np.diag([1.0, -1.0])
    for m, a in itertools.product(range(2), range(N)):
        c, s = math.cos(2 * math.pi * a / N), math.sin(2 * math.pi * a / N)
        R = np.array([[c, -s], [s, c]])
        U[a + N * m] = R @ (S if m else np.eye(2))
    return rep_from_unitaries(group, U, np.ones((2 * N, 2 * N)), name="defining")


def heisenberg_weyl_rep(group: GroupSpec) -> ProjectiveRep:
    """``f(a, b) = X^a Z^b`` on C^d with ``X|j> = |j+1>``, ``Z|j> = w^j |j>``."""
    if group.family != "heisenberg_weyl":
        raise ValidationError("the HW rep needs heisenberg_weyl_group(d)")
    d = group.params["d"]
    X = np.roll(np.eye(d), 1, axis=0)
    Z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    U = np.empty((d * d, d, d), dtype=complex)
    for a, b in itertools.product(range(d), repeat=2):
        U[a * d + b] = np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b)
    return rep_from_unitaries(group, U, name="hw")


def _parse_complex_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValidationError("matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def rep_from_document(doc: dict, group: GroupSpec) -> ProjectiveRep:
    """Parse a representation document against an already-built group."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValidationError("representation document must be an object with a 'kind' field")
    kind = doc["kind"]
    if kind == "u1modes":
        return u1_rep(group, doc["modes"])
    if kind == "matrices":
        mats = np.stack([_parse_complex_matrix(m) for m in doc["unitaries"]])
        cocycle = None
        if "cocycle" in doc:
            cocycle = _parse_complex_matrix(doc["cocycle"])
        return rep_from_unitaries(group, mats, cocycle)
    if kind == "builtin":
        name = doc.get("name")
        if name == "hw":
            if "d" in doc and group.params.get("d") != int(doc["d"]):
                raise ValidationError(f"hw rep with d={doc['d']} needs heisenberg_weyl_group({doc['d']})")
            return heisenberg_weyl_rep(group)
        if name in ("characters", "diag"):
            return characters_rep(group, doc.get("ks", [0, 1]))
        if name == "regular":
            return regular_rep(group)
        if name == "defining":
            return defining_rep(group)
        if name == "trivial":
            return trivial_rep(group, int(doc.get("d", 1)))
        raise ValidationError(f"unknown builtin representation {name!r}")
    raise ValidationError(f"unknown representation kind {kind!r}")


def rep_tensor(reps) -> ProjectiveRep:
    """Tensor product ``f(g) = (x)_j f_j(g)`` of reps over one group."""
    reps = list(reps)
    if not reps:
        raise ValidationError("need at least one representation")
    group = reps[0].group
    if any(r.group is not group and not np.array_equal(r.group.table, group.table) for r in reps):
        raise ValidationError("all representations must share the group")
    name = "(x)".join(r.name or "f" for r in reps)
    if group.is_u1:
        counts: Counter = Counter({0: 1})
        for r in reps:
            nxt: Counter = Counter()
            for k1, m1 in counts.items():
                for k2, m2 in zip(r.modes, r.mults):
                    nxt[k1 + k2] += m1 * m2
            counts = nxt
        return u1_rep(group, dict(counts), name=name)
    U = reps[0].unitaries
    omega = reps[0].cocycle
    for r in reps[1:]:
        n, a, b = U.shape[0], U.shape[1], r.d
        U = np.einsum("gij,gkl->gikjl", U, r.unitaries).reshape(n, a * b, a * b)
        omega = omega * r.cocycle
    return rep_from_unitaries(group, U, omega, name=name)


def rep_power(f: ProjectiveRep, n: int) -> ProjectiveRep:
    if n < 1:
        raise ValidationError("number of copies must be >= 1")
    return f if n == 1 else rep_tensor([f] * n)


def choi_vector(f: ProjectiveRep, g) -> np.ndarray:
    """``|f(g)>>``; its squared norm is ``d``."""
    return vectorize(f.image(g))


def choi_vectors(f: ProjectiveRep) -> np.ndarray:
    """All Choi vectors as rows, shape ``(order, d*d)``."""
    imgs = f.images()
    return imgs.reshape(imgs.shape[0], -1)


def haar_average(f, integrand):
    """Haar average of ``integrand(g)`` over the group of ``f`` (a rep or a group).

    Finite groups use the uniform measure; U(1) uses the node average,
    which is exact for trigonometric polynomials of degree below ``Q``.
    """
    group = f.group if isinstance(f, ProjectiveRep) else f
    vals = np.stack([np.asarray(integrand(g)) for g in group.elements()])
    return pairwise_sum(vals) / group.order


def average_state(f: ProjectiveRep) -> np.ndarray:
    """``rho_mu = int |f(g)>><<f(g)| dmu(g)`` on the doubled space (trace ``d``)."""
    V = choi_vectors(f)
    return V.T @ V.conj() / f.order


def cocycle_identity_residual(f: ProjectiveRep, max_full: int = 24, samples: int = 2000, seed: int = 0) -> float:
    """Max of ``|w(g,h) w(gh,k) - w(h,k) w(g,hk)|`` over all (or sampled) triples."""
    w = f.cocycle
    T = f.group.table
    n = f.order
    if n <= max_full:
        a, b, c = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    else:
        rng = np.random.default_rng(seed)
        a, b, c = rng.integers(0, n, size=(3, samples))
    lhs = w[a, b] * w[T[a, b], c]
    rhs = w[b, c] * w[a, T[b, c]]
    return float(np.abs(lhs - rhs).max())
