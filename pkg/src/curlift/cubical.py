"""Cubical sets, chains/cochains, boundary and pushforward operators.

A cubical set is given as a full-dimensional voxel mask over a bounding box;
elementary k-cubes are registered per degree with stable contiguous ids,
ordered by (base, axes).  Axis indices are 0-based throughout this module.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class ElementaryCube:
    """Product of elementary intervals: `base` is the lower corner in Z^d,
    `axes` the 0-based indices of the nondegenerate intervals."""

    base: tuple
    axes: tuple

    @property
    def dim(self) -> int:
        return len(self.axes)


class CubicalComplex:
    """Registry of the elementary cubes of a cubical set with mesh spacing."""

    def __init__(self, mask, spacing=None):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim < 1 or not mask.any():
            raise ValueError("mask must be a nonempty voxel array")
        self.mask = mask
        self.d = mask.ndim
        self.cells = mask.shape
        self.verts = tuple(c + 1 for c in mask.shape)
        if spacing is None:
            spacing = np.ones(self.d)
        self.h = np.asarray(spacing, dtype=float)
        if self.h.shape != (self.d,) or np.any(self.h <= 0):
            raise ValueError("spacing must be one positive entry per axis")
        self._bases = {}
        self._axes = {}
        self._ids = {}
        self._bmats = {}

    # -- registry ----------------------------------------------------------

    def _contained_grid(self, axes: tuple) -> np.ndarray:
        """Bool grid over candidate bases of cubes with the given nondegenerate axes."""
        d = self.d
        shape = tuple(
            self.cells[i] if i in axes else self.verts[i] for i in range(d)
        )
        padded = np.zeros(tuple(c + 2 for c in self.cells), dtype=bool)
        padded[tuple(slice(1, 1 + c) for c in self.cells)] = self.mask
        deg = [i for i in range(d) if i not in axes]
        out = np.zeros(shape, dtype=bool)
        for shifts in itertools.product((0, 1), repeat=len(deg)):
            sl = []
            for i in range(d):
                if i in axes:
                    sl.append(slice(1, 1 + self.cells[i]))
                else:
                    s = shifts[deg.index(i)]
                    sl.append(slice(1 - s, 1 - s + shape[i]))
            out |= padded[tuple(sl)]
        return out

    def _build(self, k: int):
        if k in self._bases:
            return
        if not 0 <= k <= self.d:
            raise ValueError(f"degree {k} outside 0..{self.d}")
        base_rows = []
        axes_rows = []
        for axes in itertools.combinations(range(self.d), k):
            grid = self._contained_grid(axes)
            bases = np.argwhere(grid)
            if len(bases):
                base_rows.append(bases)
                axes_rows.append(np.tile(np.array(axes, dtype=int), (len(bases), 1)))
        if base_rows:
            bases = np.concatenate(base_rows, axis=0)
            axes_arr = np.concatenate(axes_rows, axis=0)
        else:
            bases = np.zeros((0, self.d), dtype=int)
            axes_arr = np.zeros((0, k), dtype=int)
        # sort by base, then axes
        keys = [axes_arr[:, j] for j in range(k - 1, -1, -1)]
        keys += [bases[:, j] for j in range(self.d - 1, -1, -1)]
        order = np.lexsort(keys) if len(bases) else np.arange(0)
        self._bases[k] = np.ascontiguousarray(bases[order])
        self._axes[k] = np.ascontiguousarray(axes_arr[order])
        ids = {}
        for i, (b, a) in enumerate(zip(self._bases[k], self._axes[k])):
            ids[(tuple(b), tuple(a))] = i
        self._ids[k] = ids

    def num_cubes(self, k: int) -> int:
        self._build(k)
        return len(self._bases[k])

    def cube_bases(self, k: int) -> np.ndarray:
        self._build(k)
        return self._bases[k]

    def cube_axes(self, k: int) -> np.ndarray:
        self._build(k)
        return self._axes[k]

    def cube(self, k: int, i: int) -> ElementaryCube:
        self._build(k)
        return ElementaryCube(tuple(self._bases[k][i]), tuple(self._axes[k][i]))

    def id_of(self, k: int, base, axes) -> int:
        self._build(k)
        try:
            return self._ids[k][(tuple(base), tuple(axes))]
        except KeyError:
            raise KeyError(f"cube base={tuple(base)} axes={tuple(axes)} not in Q")

    def contains(self, k: int, base, axes) -> bool:
        self._build(k)
        return (tuple(base), tuple(axes)) in self._ids[k]

    def enumerate_cubes(self, k: int) -> list:
        """All k-cubes of Q in the registry order (sorted by base, then axes)."""
        self._build(k)
        return [
            ElementaryCube(tuple(b), tuple(a))
            for b, a in zip(self._bases[k], self._axes[k])
        ]

    # -- metric ------------------------------------------------------------

    def volumes(self, k: int) -> np.ndarray:
        """H^k volume of each scaled k-cube: product of h_i over nondegenerate axes."""
        self._build(k)
        if k == 0:
            return np.ones(self.num_cubes(0))
        return np.prod(self.h[self._axes[k]], axis=1)

    # -- operators ---------------------------------------------------------

    def boundary_matrix(self, k: int):
        """Sparse boundary operator C_k(Q) -> C_{k-1}(Q) with integer entries."""
        if not 1 <= k <= self.d:
            raise ValueError(f"boundary defined for 1 <= k <= {self.d}")
        if k in self._bmats:
            return self._bmats[k]
        self._build(k)
        self._build(k - 1)
        ids = self._ids[k - 1]
        rows, cols, vals = [], [], []
        for col, (b, a) in enumerate(zip(self._bases[k], self._axes[k])):
            bt = tuple(b)
            at = tuple(a)
            for j, ax in enumerate(at):
                face_axes = at[:j] + at[j + 1 :]
                sign = 1.0 if j % 2 == 0 else -1.0
                lo = ids[(bt, face_axes)]
                up_base = bt[:ax] + (bt[ax] + 1,) + bt[ax + 1 :]
                up = ids[(up_base, face_axes)]
                rows.extend((up, lo))
                cols.extend((col, col))
                vals.extend((sign, -sign))
        mat = sp.coo_matrix(
            (vals, (rows, cols)),
            shape=(self.num_cubes(k - 1), self.num_cubes(k)),
        ).tocsr()
        self._bmats[k] = mat
        return mat

    def coboundary_matrix(self, k: int):
        """Discrete coboundary C^{k-1}(Q) -> C^k(Q), the volume-weighted adjoint
        of the boundary operator (discrete Stokes)."""
        B = self.boundary_matrix(k)
        inv_dk = sp.diags(1.0 / self.volumes(k))
        d_km1 = sp.diags(self.volumes(k - 1))
        return (inv_dk @ B.T @ d_km1).tocsr()

    def pushforward_matrix(self, k: int, block: str):
        """Pushforward of k-chains under projection onto an axis block.

        `block` is "first" (the leading k axes) or "last" (the trailing k
        axes).  A cube maps with coefficient +1 to its projected cube when
        its nondegenerate axes are exactly the block, otherwise to 0.
        Returns (matrix, projected_mask); rows follow the C-order of the
        full-dimensional cells of the projected mask.
        """
        if block == "first":
            sel = tuple(range(k))
        elif block == "last":
            sel = tuple(range(self.d - k, self.d))
        else:
            raise ValueError(f"unknown block {block!r}")
        other = tuple(i for i in range(self.d) if i not in sel)
        proj_mask = self.mask.any(axis=other) if other else self.mask
        targets = np.argwhere(proj_mask)
        tid = {tuple(t): i for i, t in enumerate(targets)}

        self._build(k)
        axes_arr = self._axes[k]
        bases = self._bases[k]
        match = np.all(axes_arr == np.array(sel, dtype=int), axis=1)
        cols = np.nonzero(match)[0]
        rows = [tid[tuple(bases[c][list(sel)])] for c in cols]
        mat = sp.coo_matrix(
            (np.ones(len(cols)), (rows, cols)),
            shape=(len(targets), self.num_cubes(k)),
        ).tocsr()
        return mat, proj_mask


@dataclass
class Chain:
    """Real coefficients over the k-cube registry of a complex."""

    complex: CubicalComplex
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        want = self.complex.num_cubes(self.k)
        if self.coeffs.shape != (want,):
            raise ValueError(f"expected {want} coefficients, got {self.coeffs.shape}")

    @classmethod
    def zero(cls, cx: CubicalComplex, k: int) -> "Chain":
        return cls(cx, k, np.zeros(cx.num_cubes(k)))

    def boundary(self) -> "Chain":
        B = self.complex.boundary_matrix(self.k)
        return Chain(self.complex, self.k - 1, B @ self.coeffs)


@dataclass
class Cochain:
    """Dual coefficients over the k-cube registry of a complex."""

    complex: CubicalComplex
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        want = self.complex.num_cubes(self.k)
        if self.coeffs.shape != (want,):
            raise ValueError(f"expected {want} coefficients, got {self.coeffs.shape}")

    @classmethod
    def zero(cls, cx: CubicalComplex, k: int) -> "Cochain":
        return cls(cx, k, np.zeros(cx.num_cubes(k)))


def pairing(T: Chain, omega: Cochain) -> float:
    """Mesh-weighted pairing sum_kappa T_kappa omega_kappa H^k(phi(kappa))."""
    if T.complex is not omega.complex:
        raise ValueError("chain and cochain live on different complexes")
    if T.k != omega.k:
        raise ValueError(f"degree mismatch: chain {T.k} vs cochain {omega.k}")
    vol = T.complex.volumes(T.k)
    return float(np.sum(T.coeffs * omega.coeffs * vol))


def dirichlet_datum(cx: CubicalComplex, degree: int, points) -> Chain:
    """Boundary datum chain from signed cubes.

    `points` is a list of (cube, sign) pairs; a cube is either a vertex
    tuple (degree 0) or a (base, axes) pair for higher degree.
    """
    out = Chain.zero(cx, degree)
    for cube, sign in points:
        if degree == 0 and cube and not isinstance(cube[0], (tuple, list)):
            base, axes = tuple(cube), ()
        else:
            base, axes = tuple(cube[0]), tuple(cube[1])
        if len(axes) != degree:
            raise ValueError(f"cube of dimension {len(axes)} in degree-{degree} datum")
        try:
            i = cx.id_of(degree, base, axes)
        except KeyError:
            raise ValueError(f"datum cube base={base} axes={axes} lies outside Q")
        out.coeffs[i] += float(sign)
    return out
