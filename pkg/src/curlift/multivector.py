"""Exterior algebra over R^d.

k-vectors and k-covectors share one coefficient layout: a flat real vector
over the strictly increasing multi-indices I(d, k), ordered lexicographically.
That layout is fixed here once and used by every other module.

Mass and comass norms are provided where the solver needs them: degree 1 in
any dimension (both coincide with the Euclidean norm) and degree 2 in R^4,
where the self-dual/anti-self-dual split of the Hodge star gives closed
forms for both norms, the comass-ball projection and the mass-norm prox.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SQRT2 = math.sqrt(2.0)


@lru_cache(maxsize=None)
def index_set(d: int, k: int) -> tuple:
    """All strictly increasing multi-indices of length k over {1..d}, lexicographic."""
    if not 0 <= k <= d:
        raise ValueError(f"degree k={k} outside 0..{d}")
    return tuple(itertools.combinations(range(1, d + 1), k))


@lru_cache(maxsize=None)
def _rank_table(d: int, k: int) -> dict:
    return {mi: r for r, mi in enumerate(index_set(d, k))}


def num_components(d: int, k: int) -> int:
    return math.comb(d, k)


@dataclass(frozen=True)
class MultiIndex:
    """Strictly increasing tuple of axis labels in {1..d}."""

    entries: tuple
    d: int

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        object.__setattr__(self, "entries", entries)
        if any(e < 1 or e > self.d for e in entries):
            raise ValueError(f"entries {entries} outside 1..{self.d}")
        if any(a >= b for a, b in zip(entries, entries[1:])):
            raise ValueError(f"entries {entries} not strictly increasing")

    @property
    def k(self) -> int:
        return len(self.entries)

    def complement(self) -> "MultiIndex":
        """The increasing complement in {1..d}."""
        rest = tuple(i for i in range(1, self.d + 1) if i not in self.entries)
        return MultiIndex(rest, self.d)


def lex_rank(mi: MultiIndex) -> int:
    """Position of a multi-index in the lexicographic coefficient layout."""
    return _rank_table(mi.d, mi.k)[mi.entries]


def _rank(d: int, entries: tuple) -> int:
    return _rank_table(d, len(entries))[tuple(entries)]


@dataclass
class KVector:
    """Element of Lambda_k R^d (or its dual; both use the same layout)."""

    d: int
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        want = num_components(self.d, self.k)
        if self.coeffs.shape != (want,):
            raise ValueError(
                f"expected {want} coefficients for degree {self.k} in R^{self.d}, "
                f"got shape {self.coeffs.shape}"
            )

    @classmethod
    def zero(cls, d: int, k: int) -> "KVector":
        return cls(d, k, np.zeros(num_components(d, k)))

    @classmethod
    def basis(cls, d: int, entries: tuple) -> "KVector":
        """The basis element e_i for the increasing multi-index `entries`."""
        v = cls.zero(d, len(entries))
        v.coeffs[_rank(d, tuple(entries))] = 1.0
        return v

    def coefficient(self, entries: tuple) -> float:
        return float(self.coeffs[_rank(self.d, tuple(entries))])

    def inner(self, other: "KVector") -> float:
        if (other.d, other.k) != (self.d, self.k):
            raise ValueError("inner product requires matching degree and dimension")
        return float(self.coeffs @ other.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def copy(self) -> "KVector":
        return KVector(self.d, self.k, self.coeffs.copy())

    def __add__(self, other):
        if (other.d, other.k) != (self.d, self.k):
            raise ValueError("mismatched degree or dimension")
        return KVector(self.d, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if (other.d, other.k) != (self.d, self.k):
            raise ValueError("mismatched degree or dimension")
        return KVector(self.d, self.k, self.coeffs - other.coeffs)

    def __mul__(self, s):
        return KVector(self.d, self.k, self.coeffs * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return KVector(self.d, self.k, -self.coeffs)


def _merge_sign(a: tuple, b: tuple) -> int:
    # parity of the shuffle interleaving b into a
    inv = sum(1 for x in a for y in b if x > y)
    return -1 if inv % 2 else 1


def wedge(u: KVector, v: KVector) -> KVector:
    """Wedge product of a p-vector and a q-vector (bilinear, graded-anticommutative)."""
    if u.d != v.d:
        raise ValueError("wedge requires a common ambient dimension")
    d, k = u.d, u.k + v.k
    if k > d:
        raise ValueError(f"degree overflow: {u.k}+{v.k} > {d}")
    out = KVector.zero(d, k)
    table = _rank_table(d, k)
    iu = index_set(d, u.k)
    iv = index_set(d, v.k)
    for a, ca in zip(iu, u.coeffs):
        if ca == 0.0:
            continue
        for b, cb in zip(iv, v.coeffs):
            if cb == 0.0 or set(a) & set(b):
                continue
            merged = tuple(sorted(a + b))
            out.coeffs[table[merged]] += _merge_sign(a, b) * ca * cb
    return out


def graph_embed(xi) -> KVector:
    """The simple n-vector (e_1 + xi e_1) ^ ... ^ (e_n + xi e_n) spanning a graph tangent.

    `xi` is an N x n Jacobian; the result lives in Lambda_n R^(n+N) with
    coefficient 1 on the leading multi-index (1..n).
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    N, n = xi.shape
    d = n + N
    out = None
    for i in range(n):
        c = np.zeros(d)
        c[i] = 1.0
        c[n:] = xi[:, i]
        col = KVector(d, 1, c)
        out = col if out is None else wedge(out, col)
    return out


def jacobian_of(v: KVector, n: int | None = None) -> np.ndarray:
    """Invert graph_embed on (normalized) simple n-vectors.

    [xi]_{j,i} = (-1)^(n-i) v^{ibar, j} after scaling v so that the leading
    coefficient is 1.  A zero leading coefficient means the plane is vertical
    and has no graph representation.
    """
    if n is None:
        n = v.k
    if v.k != n:
        raise ValueError(f"expected a degree-{n} vector, got degree {v.k}")
    d = v.d
    N = d - n
    lead = v.coefficient(tuple(range(1, n + 1)))
    if lead == 0.0:
        raise ValueError("leading coefficient is zero: vertical (non-graph) direction")
    xi = np.zeros((N, n))
    for i in range(1, n + 1):
        ibar = tuple(a for a in range(1, n + 1) if a != i)
        for j in range(1, N + 1):
            entries = ibar + (n + j,)
            xi[j - 1, i - 1] = (-1) ** (n - i) * v.coefficient(entries) / lead
    return xi


# ---------------------------------------------------------------------------
# degree 2 in R^4: Hodge star, self-dual split, mass/comass machinery
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _star_matrix_2_4() -> np.ndarray:
    idx = index_set(4, 2)
    table = _rank_table(4, 2)
    H = np.zeros((6, 6))
    for r, mi in enumerate(idx):
        comp = tuple(i for i in range(1, 5) if i not in mi)
        perm = mi + comp
        inv = sum(
            1
            for i in range(4)
            for j in range(i + 1, 4)
            if perm[i] > perm[j]
        )
        H[table[comp], r] = -1.0 if inv % 2 else 1.0
    return H


def _require_2_4(w: KVector):
    if (w.k, w.d) != (2, 4):
        raise ValueError(f"operation defined for degree 2 in R^4, got k={w.k}, d={w.d}")


def hodge_star_2_4(w: KVector) -> KVector:
    _require_2_4(w)
    return KVector(4, 2, _star_matrix_2_4() @ w.coeffs)


def hodge_split_2_4(w: KVector) -> tuple[KVector, KVector]:
    """Orthogonal split into self-dual and anti-self-dual parts."""
    _require_2_4(w)
    p, m = split_plus_minus(w.coeffs[None, :])
    return KVector(4, 2, p[0]), KVector(4, 2, m[0])


def split_plus_minus(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise self-dual split of (m, 6) coefficient arrays."""
    S = V @ _star_matrix_2_4()  # star matrix is symmetric
    return (V + S) / 2.0, (V - S) / 2.0


def mass_comass_rows(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    P, M = split_plus_minus(V)
    a = np.linalg.norm(P, axis=1)
    b = np.linalg.norm(M, axis=1)
    return SQRT2 * np.maximum(a, b), (a + b) / SQRT2


def mass_comass_2_4(w: KVector) -> tuple[float, float]:
    """Mass and comass of a 2-vector in R^4 via the self-dual radii."""
    _require_2_4(w)
    mass, comass = mass_comass_rows(w.coeffs[None, :])
    return float(mass[0]), float(comass[0])


def mass_comass(w: KVector) -> tuple[float, float]:
    """Mass/comass where supported: degree 1 (any d) and degree 2 in R^4."""
    if w.k == 1:
        nrm = w.norm()
        return nrm, nrm
    if (w.k, w.d) == (2, 4):
        return mass_comass_2_4(w)
    raise ValueError(f"mass/comass not supported for k={w.k}, d={w.d}")


def is_simple_2_4(w: KVector, rtol: float = 1e-9) -> bool:
    """Simplicity test w ^ w = 0, relative to |w|^2."""
    _require_2_4(w)
    ww = wedge(w, w)
    scale = w.norm() ** 2
    return abs(ww.coeffs[0]) <= rtol * max(scale, 1.0)


def project_comass_ball_rows(V: np.ndarray, alpha) -> np.ndarray:
    """Row-wise Euclidean projection of 2-(co)vectors in R^4 onto {comass <= alpha}.

    Works on the radius pair (|w+|, |w-|): projection onto the triangle
    {a + b <= sqrt(2) alpha, a, b >= 0} while keeping both directions fixed.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0):
        raise ValueError("comass radius must be nonnegative")
    P, M = split_plus_minus(V)
    a = np.linalg.norm(P, axis=1)
    b = np.linalg.norm(M, axis=1)
    c = SQRT2 * np.broadcast_to(alpha, a.shape)

    t = (a + b - c) / 2.0
    ap0, bp0 = a - t, b - t
    ap = np.where(bp0 < 0.0, np.minimum(a, c), np.maximum(ap0, 0.0))
    bp = np.where(ap0 < 0.0, np.minimum(b, c), np.maximum(bp0, 0.0))

    feas = a + b <= c
    with np.errstate(invalid="ignore", divide="ignore"):
        sp = np.where(a > 0.0, ap / np.where(a > 0.0, a, 1.0), 0.0)
        sm = np.where(b > 0.0, bp / np.where(b > 0.0, b, 1.0), 0.0)
    out = sp[:, None] * P + sm[:, None] * M
    return np.where(feas[:, None], V, out)


def prox_mass_rows(V: np.ndarray, tau) -> np.ndarray:
    """Row-wise prox of tau * mass via the Moreau identity."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("prox step must be nonnegative")
    return V - project_comass_ball_rows(V, tau)


def project_comass_ball(w: KVector, alpha: float) -> KVector:
    _require_2_4(w)
    return KVector(4, 2, project_comass_ball_rows(w.coeffs[None, :], alpha)[0])


def prox_mass(w: KVector, tau: float) -> KVector:
    _require_2_4(w)
    return KVector(4, 2, prox_mass_rows(w.coeffs[None, :], tau)[0])
