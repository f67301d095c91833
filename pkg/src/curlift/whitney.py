"""Lowest-order Whitney interpolation of cochains on cubical complexes.

A k-cochain extends to a piecewise-multilinear k-form: constant along the
nondegenerate axes of each cube (supported on that cube's cell slab) and
hat-weighted along the degenerate axes.  The same scalar basis interpolates
chain coefficients into a k-vector density for solution extraction.

Evaluation exactly on a cell interface uses the left/lower cell.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cubical import Chain, Cochain, CubicalComplex
from .multivector import KVector, _rank, num_components

_WEIGHT_TOL = 1e-13


@dataclass
class SampleSet:
    """Positions in the scaled domain at which dual constraints are enforced."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))

    def __len__(self):
        return len(self.points)


def _owning_cell(cx: CubicalComplex, u: np.ndarray) -> tuple:
    """Cell index of an unscaled point; interfaces resolve to the left/lower cell."""
    c = np.ceil(u) - 1.0
    c = np.clip(c, 0, np.array(cx.cells) - 1).astype(int)
    return tuple(c)


def _snap(u: np.ndarray) -> np.ndarray:
    """Round away division noise so vertex-aligned points land on vertices."""
    u = np.asarray(u, dtype=float)
    r = np.round(u)
    return np.where(np.abs(u - r) < 1e-9, r, u)


def _covering_cells(cx: CubicalComplex, u: np.ndarray):
    """All cells whose closed cube contains the unscaled point, left/lower first."""
    u = _snap(u)
    cands = []
    for i in range(cx.d):
        lo = int(np.ceil(u[i])) - 1
        hi = int(np.floor(u[i]))
        opts = [c for c in range(lo, hi + 1) if 0 <= c < cx.cells[i]]
        cands.append(opts)
    return itertools.product(*cands)


def _check_inside(cx: CubicalComplex, u: np.ndarray) -> tuple:
    eps = 1e-9
    if np.any(u < -eps) or np.any(u > np.array(cx.cells) + eps):
        raise ValueError(f"point {u} outside the grid box")
    for cell in _covering_cells(cx, u):
        if cx.mask[cell]:
            return cell
    raise ValueError(f"point {u} outside the cubical set")


def _point_support(cx: CubicalComplex, k: int, u: np.ndarray):
    """Yield (component_rank, cube_id, weight) triples for one unscaled point."""
    d = cx.d
    u = _snap(u)
    cell = _check_inside(cx, u)
    for axes in itertools.combinations(range(d), k):
        rank = _rank(d, tuple(a + 1 for a in axes))
        deg = [i for i in range(d) if i not in axes]
        cands = []
        for i in deg:
            lo = int(np.floor(u[i]))
            opts = []
            for b in (lo, lo + 1):
                w = 1.0 - abs(u[i] - b)
                if w > _WEIGHT_TOL and 0 <= b <= cx.cells[i]:
                    opts.append((b, w))
            cands.append(opts)
        for combo in itertools.product(*cands):
            base = list(cell)
            w = 1.0
            for i, (b, wi) in zip(deg, combo):
                base[i] = b
                w *= wi
            try:
                cid = cx.id_of(k, tuple(base), axes)
            except KeyError:
                continue  # cube not in Q (masked out)
            yield rank, cid, w


def whitney_eval(omega: Cochain, x) -> KVector:
    """Evaluate the Whitney form of a k-cochain at a scaled position."""
    cx = omega.complex
    u = np.asarray(x, dtype=float) / cx.h
    out = KVector.zero(cx.d, omega.k)
    for rank, cid, w in _point_support(cx, omega.k, u):
        out.coeffs[rank] += omega.coeffs[cid] * w
    return out


def density_coefficients(T: Chain) -> np.ndarray:
    """Chain coefficients rescaled so the interpolated field is a density:
    a unit k-cube carries vol_kappa / cellvol per unit d-volume, making
    the L2 pairing of densities against Whitney forms match the discrete
    weighted pairing to leading order."""
    cx = T.complex
    cellvol = float(np.prod(cx.h))
    return T.coeffs * (cx.volumes(T.k) / cellvol)


def chain_density(T: Chain, x) -> KVector:
    """Interpolate chain coefficients into a k-vector-valued density at a
    scaled position (includes the transverse 1/h normalization)."""
    cx = T.complex
    u = np.asarray(x, dtype=float) / cx.h
    dens = density_coefficients(T)
    out = KVector.zero(cx.d, T.k)
    for rank, cid, w in _point_support(cx, T.k, u):
        out.coeffs[rank] += dens[cid] * w
    return out


def sampling_operator(cx: CubicalComplex, Z, k: int):
    """Sparse map from k-cochain coefficients to stacked covector values.

    Row block i (of size C(d, k)) applied to a cochain equals
    whitney_eval at sample i; the same matrix interpolates chain
    coefficients into density values.
    """
    pts = Z.points if isinstance(Z, SampleSet) else np.atleast_2d(np.asarray(Z, float))
    ncomp = num_components(cx.d, k)
    rows, cols, vals = [], [], []
    for i, z in enumerate(pts):
        u = z / cx.h
        for rank, cid, w in _point_support(cx, k, u):
            rows.append(i * ncomp + rank)
            cols.append(cid)
            vals.append(w)
    return sp.coo_matrix(
        (vals, (rows, cols)), shape=(len(pts) * ncomp, cx.num_cubes(k))
    ).tocsr()


def _axis_coords(cx: CubicalComplex, axis: int, midpoints: int) -> np.ndarray:
    verts = np.arange(cx.verts[axis], dtype=float)
    if midpoints <= 0:
        return verts
    fracs = (np.arange(1, midpoints + 1)) / (midpoints + 1)
    mids = (np.arange(cx.cells[axis])[:, None] + fracs[None, :]).ravel()
    return np.sort(np.concatenate([verts, mids]))


def generate_samples(
    cx: CubicalComplex,
    mode: str = "vertices",
    codomain_axes: tuple = (),
    midpoints: int = 1,
) -> SampleSet:
    """Build a sample set on the scaled domain.

    Modes: "vertices" (all grid vertices of Q), "midpoints+vertices"
    (vertices plus `midpoints` evenly spaced interior points per cell along
    each codomain axis), and "midpoints" (interior points only along the
    codomain axes, vertices along the rest — an unbiased quadrature for
    costs that vary strongly along the range).
    """
    if mode == "vertices":
        pts = cx.cube_bases(0).astype(float)
        return SampleSet(pts * cx.h)
    if mode in ("midpoints+vertices", "midpoints"):
        def axis_coords(i):
            if i not in codomain_axes:
                return _axis_coords(cx, i, 0)
            if mode == "midpoints":
                fracs = (np.arange(1, midpoints + 1)) / (midpoints + 1)
                return (np.arange(cx.cells[i])[:, None] + fracs[None, :]).ravel()
            return _axis_coords(cx, i, midpoints)

        coords = [axis_coords(i) for i in range(cx.d)]
        grid = np.meshgrid(*coords, indexing="ij")
        pts = np.stack([g.ravel() for g in grid], axis=1)
        keep = []
        for u in pts:
            keep.append(any(cx.mask[c] for c in _covering_cells(cx, u)))
        pts = pts[np.asarray(keep, dtype=bool)]
        return SampleSet(pts * cx.h)
    raise ValueError(f"unknown sample mode {mode!r}")
