"""Problem builders, graph-chain rasterization, energy evaluation, and
solution extraction.

Builders assemble the product-space complex, cost model, sample set and
constraints for the three shipped problem kinds.  Graph chains rasterize
explicit (piecewise-constant) functions and maps into currents for
validation.  Extraction reduces a solved chain back to an unlifted
function or map by fiberwise centers of mass.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .cubical import Chain, CubicalComplex, dirichlet_datum
from .lifting import (
    BrachistochroneCost,
    CostModel,
    CostVolume,
    RegistrationCost,
    ScalarTVCost,
)
from .solver import SaddleProblem, assemble
from .whitney import (SampleSet, density_coefficients, generate_samples,
                      sampling_operator)


@dataclass
class ProblemSpec:
    """Declarative description of one solvable instance."""

    kind: str  # brachistochrone | scalar_lifting | registration
    cells: tuple = ()
    spacing: tuple = ()
    g: float = 9.81
    y_min: float = 1.0
    endpoints: tuple | None = None
    rho: CostVolume | None = None
    image: np.ndarray | None = None
    labels: int = 8
    label_range: tuple = (0.0, 1.0)
    data_weight: float = 8.0
    fixed: np.ndarray | None = None
    moving: np.ndarray | None = None
    eps: float = 0.1
    boundary_map: np.ndarray | None = None


@dataclass
class BuiltProblem:
    """Everything a run needs: geometry, model, and the assembled saddle."""

    spec: ProblemSpec
    complex: CubicalComplex
    model: CostModel
    samples: SampleSet
    problem: SaddleProblem
    n: int
    y_origin: np.ndarray
    meta: dict = field(default_factory=dict)


@dataclass
class ExtractedSolution:
    """Unlifted solution values with a validity mask for empty fibers."""

    values: np.ndarray
    valid: np.ndarray
    backward: np.ndarray | None = None
    backward_valid: np.ndarray | None = None


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def nodes_from_pixels(img: np.ndarray) -> np.ndarray:
    """Resample pixel values to the node grid by corner averaging (edge clamp)."""
    img = np.asarray(img, dtype=float)
    pad = np.pad(img, [(1, 1)] * img.ndim, mode="edge")
    out = np.zeros(tuple(s + 1 for s in img.shape))
    for corner in itertools.product((0, 1), repeat=img.ndim):
        sl = tuple(slice(c, c + s + 1) for c, s in zip(corner, img.shape))
        out += pad[sl]
    return out / (1 << img.ndim)


def build_brachistochrone(
    cells=(25, 14),
    spacing=(0.8, 1.0),
    g: float = 9.81,
    y_min: float = 1.0,
    endpoints=None,
) -> BuiltProblem:
    """Time-of-descent problem on a box, Dirichlet endpoints at the corners.

    The vertical coordinate is the drop below the release point, shifted by
    `y_min` to stay clear of the singular zero-speed line.
    """
    spec = ProblemSpec(kind="brachistochrone", cells=tuple(cells),
                       spacing=tuple(spacing), g=g, y_min=y_min,
                       endpoints=endpoints)
    cx = CubicalComplex(np.ones(cells, dtype=bool), spacing=spacing)
    model = BrachistochroneCost(g=g, y_min=y_min, origin=(0.0, y_min))
    if endpoints is None:
        endpoints = ((0, 0), cells)
    a, b = endpoints
    datum = dirichlet_datum(cx, 0, [(tuple(a), -1.0), (tuple(b), 1.0)])
    Z = generate_samples(cx, "midpoints", codomain_axes=(1,))
    prob = assemble(cx, 1, model, Z, boundary="dirichlet", datum=datum,
                    pushforward=("first",), nonneg=("first",))
    return BuiltProblem(spec=spec, complex=cx, model=model, samples=Z,
                        problem=prob, n=1, y_origin=np.array([y_min]),
                        meta={"endpoints": (tuple(a), tuple(b))})


def build_scalar_lifting(
    rho: CostVolume,
    data_weight: float = 1.0,
    label_origin: float = 0.0,
) -> BuiltProblem:
    """Scalar range-lifting problem from a node-sampled cost volume.

    The volume's last axis enumerates the labels (codomain nodes); the
    leading axes are the domain node grid.  Free boundary on the domain,
    first-marginal constraint, midpoint sampling along the range.
    """
    vals = rho.values * data_weight
    n = vals.ndim - 1
    cells = tuple(s - 1 for s in vals.shape)
    if any(c < 1 for c in cells):
        raise ValueError("cost volume needs at least 2 nodes per axis")
    spec = ProblemSpec(kind="scalar_lifting", cells=cells,
                       spacing=tuple(rho.spacing), rho=rho,
                       labels=vals.shape[-1], data_weight=data_weight)
    cx = CubicalComplex(np.ones(cells, dtype=bool), spacing=rho.spacing)
    model = ScalarTVCost(CostVolume(vals, rho.spacing), n=n)
    Z = generate_samples(cx, "midpoints", codomain_axes=(n,))
    prob = assemble(cx, n, model, Z, boundary="free",
                    pushforward=("first",), nonneg=("first",))
    return BuiltProblem(spec=spec, complex=cx, model=model, samples=Z,
                        problem=prob, n=n,
                        y_origin=np.array([label_origin]))


def build_denoise(
    image: np.ndarray,
    labels: int = 8,
    label_range=(0.0, 1.0),
    data_weight: float = 8.0,
) -> BuiltProblem:
    """Total-variation denoising of a grayscale image via scalar lifting.

    Data term (y - u0(x))^2 scaled by `data_weight`, sampled on the label
    nodes; the image is resampled to the domain node grid by corner
    averaging.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError("denoise expects a single-channel 2D image")
    if labels < 2:
        raise ValueError("need at least two labels")
    lo, hi = label_range
    u0 = nodes_from_pixels(image)
    y = np.linspace(lo, hi, labels)
    vol = (y[None, None, :] - u0[:, :, None]) ** 2
    hy = (hi - lo) / (labels - 1)
    rho = CostVolume(vol, spacing=(1.0, 1.0, hy))
    built = build_scalar_lifting(rho, data_weight=data_weight, label_origin=lo)
    built.spec.kind = "scalar_lifting"
    built.spec.image = image
    built.spec.label_range = tuple(label_range)
    return built


def build_registration(
    fixed: np.ndarray,
    moving: np.ndarray,
    eps: float = 0.1,
    boundary_shift=(0, 0),
    data_weight: float = 1.0,
) -> BuiltProblem:
    """Dense matching of two grayscale images by a lifted surface current.

    The data cost rho(x, y) = data_weight * |I1(x) - I2(y)| is built on the
    product node grid from corner-averaged images.  The boundary condition
    matches the domain boundary loop to its translate by the integer
    `boundary_shift` (the supplied correspondence of the two image
    boundaries).  Both pushforward marginals are enforced with
    nonnegativity: unit mass per domain pixel and per codomain cell, so
    admissible currents are doubly stochastic in the cell-to-cell sense.
    """
    fixed = np.asarray(fixed, dtype=float)
    moving = np.asarray(moving, dtype=float)
    if fixed.shape != moving.shape or fixed.ndim != 2:
        raise ValueError("registration expects two equal-shape 2D images")
    n1 = nodes_from_pixels(fixed)
    n2 = nodes_from_pixels(moving)
    vol = data_weight * np.abs(n1[:, :, None, None] - n2[None, None, :, :])
    rho = CostVolume(vol, spacing=np.ones(4))
    model = RegistrationCost(rho, eps=eps)
    cells = fixed.shape + moving.shape
    cx = CubicalComplex(np.ones(cells, dtype=bool), spacing=np.ones(4))
    shifts = np.broadcast_to(np.asarray(boundary_shift, int), fixed.shape + (2,))
    T0 = map_graph_chain(cx, shifts)
    datum = T0.boundary()
    Z = generate_samples(cx, "vertices")
    prob = assemble(cx, 2, model, Z, boundary="dirichlet", datum=datum,
                    pushforward=("first", "last"), nonneg=("first", "last"))
    spec = ProblemSpec(kind="registration", cells=cells, spacing=(1.0,) * 4,
                       fixed=fixed, moving=moving, eps=eps)
    return BuiltProblem(spec=spec, complex=cx, model=model, samples=Z,
                        problem=prob, n=2, y_origin=np.zeros(2),
                        meta={"boundary_shift": tuple(np.asarray(boundary_shift)),
                              "datum_chain": T0.coeffs.copy()})


def build(spec: ProblemSpec) -> BuiltProblem:
    """Dispatch a declarative spec to the matching builder."""
    if spec.kind == "brachistochrone":
        return build_brachistochrone(cells=spec.cells or (25, 14),
                                     spacing=spec.spacing or (0.8, 1.0),
                                     g=spec.g, y_min=spec.y_min,
                                     endpoints=spec.endpoints)
    if spec.kind == "scalar_lifting":
        if spec.rho is not None and spec.image is None:
            return build_scalar_lifting(spec.rho, data_weight=spec.data_weight,
                                        label_origin=spec.label_range[0])
        if spec.image is not None:
            return build_denoise(spec.image, labels=spec.labels,
                                 label_range=spec.label_range,
                                 data_weight=spec.data_weight)
        raise ValueError("scalar_lifting needs a cost volume or an image")
    if spec.kind == "registration":
        if spec.fixed is None or spec.moving is None:
            raise ValueError("registration needs two images")
        return build_registration(spec.fixed, spec.moving, eps=spec.eps)
    raise ValueError(f"unknown problem kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# graph chains
# ---------------------------------------------------------------------------


def graph_chain(cx: CubicalComplex, values) -> Chain:
    """Rasterize a function into a chain with unit first marginal.

    For n = 1, `values` are integer codomain node indices at the domain
    nodes; the chain is the lattice path running each cell at the left
    node's height with a vertical connector at the right node.  For n = 2,
    `values` are integer codomain node indices per domain cell (piecewise
    constant), and jump discontinuities are closed by wall squares.
    """
    values = np.asarray(values)
    if not np.issubdtype(values.dtype, np.integer):
        raise ValueError("graph values must be integer node indices")
    if cx.d == 2 and values.ndim == 1:
        return _graph_chain_1d(cx, values)
    if cx.d == 3 and values.ndim == 2:
        return _graph_chain_2d(cx, values)
    raise ValueError(
        f"unsupported combination: d={cx.d}, values shape {values.shape}"
    )


def _graph_chain_1d(cx: CubicalComplex, values: np.ndarray) -> Chain:
    K = cx.cells[0]
    if len(values) != K + 1:
        raise ValueError(f"need {K + 1} node values, got {len(values)}")
    if np.any(values < 0) or np.any(values > cx.cells[1]):
        raise ValueError("graph values outside the codomain range")
    T = Chain.zero(cx, 1)
    for i in range(K):
        T.coeffs[cx.id_of(1, (i, values[i]), (0,))] += 1.0
        lo, hi = sorted((values[i], values[i + 1]))
        s = 1.0 if values[i + 1] >= values[i] else -1.0
        for y in range(lo, hi):
            T.coeffs[cx.id_of(1, (i + 1, y), (1,))] += s
    return T


def _graph_chain_2d(cx: CubicalComplex, values: np.ndarray) -> Chain:
    nx, ny = cx.cells[0], cx.cells[1]
    if values.shape != (nx, ny):
        raise ValueError(f"need one value per domain cell {(nx, ny)}")
    if np.any(values < 0) or np.any(values > cx.cells[2]):
        raise ValueError("graph values outside the codomain range")
    T = Chain.zero(cx, 2)
    for i in range(nx):
        for j in range(ny):
            T.coeffs[cx.id_of(2, (i, j, values[i, j]), (0, 1))] += 1.0
    # walls across jumps; signs chosen so interior boundary terms cancel
    for i in range(nx - 1):
        for j in range(ny):
            a, b = values[i, j], values[i + 1, j]
            s = -1.0 if b >= a else 1.0
            for l in range(min(a, b), max(a, b)):
                T.coeffs[cx.id_of(2, (i + 1, j, l), (1, 2))] += s
    for i in range(nx):
        for j in range(ny - 1):
            a, b = values[i, j], values[i, j + 1]
            s = 1.0 if b >= a else -1.0
            for l in range(min(a, b), max(a, b)):
                T.coeffs[cx.id_of(2, (i, j + 1, l), (0, 2))] += s
    return T


def map_graph_chain(cx: CubicalComplex, shifts, closed: bool = True) -> Chain:
    """Graph chain of a per-pixel integer shift map x -> x + shift(x) in d = 4.

    Horizontal (graph) squares carry the map; with `closed` the interior
    boundary left by neighbouring squares at different codomain nodes is
    cancelled by wall squares (domain edge x codomain edge) and corner
    squares (domain node x codomain square), so the chain boundary is
    supported on the domain-boundary fibers only.  Cells whose target
    leaves the codomain are rejected.
    """
    if cx.d != 4:
        raise ValueError("map graph chains require a 4-dimensional complex")
    shifts = np.asarray(shifts, dtype=int)
    nx, ny = cx.cells[0], cx.cells[1]
    if shifts.shape != (nx, ny, 2):
        raise ValueError(f"need one 2-vector shift per domain cell {(nx, ny)}")
    T = Chain.zero(cx, 2)
    tgt = np.empty((nx, ny, 2), dtype=int)
    for i in range(nx):
        for j in range(ny):
            ti, tj = i + shifts[i, j, 0], j + shifts[i, j, 1]
            if not (0 <= ti < cx.cells[2] and 0 <= tj < cx.cells[3]):
                raise ValueError(
                    f"shift at cell ({i}, {j}) maps outside the codomain"
                )
            tgt[i, j] = ti, tj
            T.coeffs[cx.id_of(2, (i, j, ti, tj), (0, 1))] += 1.0
    if closed:
        _close_map_chain(cx, T.coeffs, tgt)
    return T


def _close_map_chain(cx: CubicalComplex, coeffs: np.ndarray, tgt: np.ndarray):
    """Cancel the interior boundary of a raster map sheet in place.

    Candidate closing squares: along every interior domain edge, walls over
    the L-shaped codomain path between the two incident targets (axis 2
    first, then axis 3); at every interior domain node, corner squares over
    the bounding box of the four incident targets.  Their coefficients are
    the least-squares solution cancelling the boundary on interior fibers;
    the system is local and consistent for integer maps.
    """
    import scipy.sparse.linalg as spla

    nx, ny = cx.cells[0], cx.cells[1]
    cand = []

    def l_path(base, axis, ya, yb):
        (u0, v0), (u1, v1) = ya, yb
        for u in range(min(u0, u1), max(u0, u1)):
            cand.append(cx.id_of(2, (base[0], base[1], u, v0), (axis, 2)))
        for v in range(min(v0, v1), max(v0, v1)):
            cand.append(cx.id_of(2, (base[0], base[1], u1, v), (axis, 3)))

    for i in range(nx - 1):
        for j in range(ny):
            l_path((i + 1, j), 1, tgt[i, j], tgt[i + 1, j])
    for i in range(nx):
        for j in range(ny - 1):
            l_path((i, j + 1), 0, tgt[i, j], tgt[i, j + 1])
    for p in range(1, nx):
        for q in range(1, ny):
            quad = tgt[p - 1 : p + 1, q - 1 : q + 1].reshape(4, 2)
            for u in range(quad[:, 0].min(), quad[:, 0].max()):
                for v in range(quad[:, 1].min(), quad[:, 1].max()):
                    cand.append(cx.id_of(2, (p, q, u, v), (2, 3)))
    cand = np.unique(cand)
    if not len(cand):
        return

    bases = cx.cube_bases(1)
    axes = cx.cube_axes(1)[:, 0]
    interior = np.where(
        axes == 0, (bases[:, 1] > 0) & (bases[:, 1] < ny),
        np.where(axes == 1, (bases[:, 0] > 0) & (bases[:, 0] < nx),
                 (bases[:, 0] > 0) & (bases[:, 0] < nx)
                 & (bases[:, 1] > 0) & (bases[:, 1] < ny)))
    rows = np.nonzero(interior)[0]
    B = cx.boundary_matrix(2).tocsr()
    rhs = -(B @ coeffs)[rows]
    A = B[rows][:, cand]
    w = spla.lsqr(A, rhs, atol=1e-13, btol=1e-13, iter_lim=10_000)[0]
    if np.max(np.abs(A @ w - rhs), initial=0.0) > 1e-8:
        raise ValueError("cannot close the map graph chain with local walls")
    coeffs[cand] += w


# ---------------------------------------------------------------------------
# energy and extraction
# ---------------------------------------------------------------------------


def chain_energy(model: CostModel, T: Chain, quad: int = 2) -> float:
    """Energy of a chain under a cost model by per-cell tensor quadrature of
    the lifted integrand on the interpolated density."""
    cx = T.complex
    d = cx.d
    fr = (2 * np.arange(quad) + 1) / (2 * quad)
    cells = np.argwhere(cx.mask)
    pts = []
    for base in cells:
        grids = np.meshgrid(*[(base[a] + fr) * cx.h[a] for a in range(d)],
                            indexing="ij")
        pts.append(np.stack([g.ravel() for g in grids], axis=1))
    pts = np.concatenate(pts, axis=0)
    S = sampling_operator(cx, SampleSet(pts), T.k)
    dens = (S @ density_coefficients(T)).reshape(len(pts), -1)
    vals = model.bind(pts).psi_rows(dens)
    cellvol = float(np.prod(cx.h))
    return float(np.sum(vals) * cellvol / quad**d)


def calibration_cochain(cx: CubicalComplex, model: CostModel, f, fprime) -> "Cochain":
    """Dual certificate form of a smooth scalar function (n = 1).

    At each 1-cube barycenter the feasible covector maximizing the pairing
    with the graph direction of f is sampled; pairing any chain against it
    bounds the chain's energy from below, with equality (to first order)
    on rasterizations of the graph of f.
    """
    from .cubical import Cochain
    from .multivector import graph_embed

    if cx.d != 2:
        raise ValueError("calibration cochains are built for n = 1 problems")
    bases = cx.cube_bases(1)
    axes = cx.cube_axes(1)
    bary = bases + 0.5 * (axes[:, :, None] == np.arange(cx.d)).any(axis=1)
    pts = bary * cx.h
    xs = pts[:, 0]
    dirs = np.array([graph_embed(np.array([[float(fprime(x))]])).coeffs
                     for x in xs])
    bound = model.bind(pts)
    big = 1e8
    W = bound.dual_project_rows(dirs * big)
    vals = W[np.arange(len(bases)), axes[:, 0]]
    return Cochain(cx, 1, vals)


def graph_pairing_energy(built_model: CostModel, T: Chain, f, fprime) -> float:
    """Energy of a rasterized graph chain by pairing it against the
    calibration form of the underlying smooth function."""
    from .cubical import pairing

    omega = calibration_cochain(T.complex, built_model, f, fprime)
    return pairing(T, omega)


def fiber_coefficients(cx: CubicalComplex, T_coeffs: np.ndarray, n: int):
    """Group the coefficients of leading-axes n-cubes by their domain cell.

    Returns (domain cell array, coefficient matrix with one row per cell,
    codomain bases per column).
    """
    axes = cx.cube_axes(n)
    bases = cx.cube_bases(n)
    lead = np.all(axes == np.arange(n), axis=1)
    idx = np.nonzero(lead)[0]
    dom = bases[idx][:, :n]
    cod = bases[idx][:, n:]
    dom_cells = np.argwhere(cx.mask.any(
        axis=tuple(range(n, cx.d))) if cx.d > n else cx.mask)
    cell_rank = {tuple(c): r for r, c in enumerate(dom_cells)}
    cod_unique, cod_col = np.unique(cod, axis=0, return_inverse=True)
    W = np.zeros((len(dom_cells), len(cod_unique)))
    for ci, co, v in zip(dom, cod_col, T_coeffs[idx]):
        W[cell_rank[tuple(ci)], co] += v
    return dom_cells, W, cod_unique


def extract_scalar(built: BuiltProblem, T_coeffs: np.ndarray,
                   mass_tol: float = 1e-8) -> ExtractedSolution:
    """Center-of-mass reduction of the horizontal fiber coefficients to a
    scalar function on the domain cells (codomain units)."""
    cx = built.complex
    n = built.n
    dom_cells, W, cod = fiber_coefficients(cx, T_coeffs, n)
    hy = cx.h[n]
    # horizontally-oriented cubes are degenerate along the codomain axis:
    # their codomain index is a node position
    y_nodes = cod[:, 0] * hy + built.y_origin[0]
    Wp = np.maximum(W, 0.0)
    tot = Wp.sum(axis=1)
    valid = tot > mass_tol
    f = np.full(len(dom_cells), np.nan)
    f[valid] = (Wp[valid] @ y_nodes) / tot[valid]
    shape = cx.cells[:n]
    vals = np.full(shape, np.nan)
    ok = np.zeros(shape, dtype=bool)
    for c, fv, v in zip(dom_cells, f, valid):
        vals[tuple(c)] = fv
        ok[tuple(c)] = v
    return ExtractedSolution(values=vals, valid=ok)


def warm_start(built: BuiltProblem, T_coeffs: np.ndarray | None = None) -> np.ndarray:
    """Primal vector seeding the solver from a feasible raster chain.

    Defaults to the boundary-datum chain recorded by the builder; the
    decomposition block is initialized to the chain's sampled density.
    """
    if T_coeffs is None:
        T_coeffs = built.meta.get("datum_chain")
        if T_coeffs is None:
            raise ValueError("no datum chain recorded; pass T_coeffs")
    T = Chain(built.complex, built.n, np.asarray(T_coeffs, dtype=float))
    S = sampling_operator(built.complex, built.samples, T.k)
    lam = np.asarray(S @ density_coefficients(T)).ravel()
    return np.concatenate([T.coeffs, lam])


def fiber_concentration(built: BuiltProblem, T_coeffs: np.ndarray,
                        top: int = 2) -> np.ndarray:
    """Per-fiber share of interpolated density mass on the `top` best labels.

    A label is a codomain position of the graph (horizontal) component; the
    returned share per domain fiber is the fraction of absolute label mass
    carried by the `top` heaviest labels.  Values near one certify a current
    concentrated near a graph surface.
    """
    _, W, _ = fiber_coefficients(built.complex, T_coeffs, built.n)
    A = np.abs(W)
    tot = A.sum(axis=1)
    srt = np.sort(A, axis=1)[:, ::-1]
    share = srt[:, :top].sum(axis=1) / np.where(tot > 0, tot, 1.0)
    return np.where(tot > 0, share, 0.0)


def extract_map(built: BuiltProblem, T_coeffs: np.ndarray,
                mass_tol: float = 1e-8) -> ExtractedSolution:
    """Forward and backward correspondence maps from a registration chain.

    The interpolated density is evaluated at pixel centers crossed with the
    opposite-factor node grid; its pointwise norm weights a center of mass
    over the nodes, giving continuous target coordinates per pixel.  The
    solved current is typically diffuse around the graph surface, but the
    center of mass of its density recovers the map well beyond mesh
    accuracy.
    """
    cx = built.complex
    T = Chain(cx, 2, T_coeffs)
    nx, ny = cx.cells[0], cx.cells[1]
    my, mx = cx.cells[2], cx.cells[3]

    def com(centers_shape, nodes_shape, forward: bool):
        cgrid = np.stack(np.meshgrid(
            np.arange(centers_shape[0]) + 0.5,
            np.arange(centers_shape[1]) + 0.5, indexing="ij"), axis=-1)
        ngrid = np.stack(np.meshgrid(
            np.arange(nodes_shape[0] + 1.0),
            np.arange(nodes_shape[1] + 1.0), indexing="ij"), axis=-1)
        C = cgrid.reshape(-1, 2)
        G = ngrid.reshape(-1, 2)
        if forward:
            pts = np.concatenate(
                [np.repeat(C, len(G), axis=0), np.tile(G, (len(C), 1))], axis=1)
        else:
            pts = np.concatenate(
                [np.tile(G, (len(C), 1)), np.repeat(C, len(G), axis=0)], axis=1)
        S = sampling_operator(cx, SampleSet(pts * cx.h), 2)
        dens = (S @ density_coefficients(T)).reshape(len(C), len(G), -1)
        wgt = np.linalg.norm(dens, axis=2)
        tot = wgt.sum(axis=1)
        valid = tot > mass_tol
        vals = np.full((len(C), 2), np.nan)
        vals[valid] = (wgt[valid] @ G) / tot[valid][:, None]
        return (vals.reshape(centers_shape + (2,)),
                valid.reshape(centers_shape))

    fwd, fwd_ok = com((nx, ny), (my, mx), True)
    bwd, bwd_ok = com((my, mx), (nx, ny), False)
    return ExtractedSolution(values=fwd, valid=fwd_ok,
                             backward=bwd, backward_valid=bwd_ok)


# ---------------------------------------------------------------------------
# cycloid oracle
# ---------------------------------------------------------------------------


def cycloid_through(a, b, g: float = 9.81):
    """Analytic time-optimal descent curve through two points (y measured
    downward from the release height, both y > 0 and monotone descent).

    Returns (y_of_x, r): the curve as a function of x and the wheel radius.
    """
    xa, ya = float(a[0]), float(a[1])
    xb, yb = float(b[0]), float(b[1])
    if ya <= 0 or yb <= 0:
        raise ValueError("points must lie strictly below the release line")
    if xb <= xa or yb <= ya:
        raise ValueError("expected a rightward, descending pair of points")
    span = xb - xa

    def theta(y, r):
        return math.acos(max(-1.0, min(1.0, 1.0 - y / r)))

    def arc_x(th):
        return th - math.sin(th)

    def gap(r):
        return r * (arc_x(theta(yb, r)) - arc_x(theta(ya, r))) - span

    r_lo = yb / 2.0 * (1 + 1e-12)
    if gap(r_lo) < 0:
        raise ValueError("no monotone cycloid connects the two points")
    r_hi = r_lo
    while gap(r_hi) > 0:
        r_hi *= 2.0
        if r_hi > 1e12:
            raise ValueError("cycloid radius search diverged")
    r = brentq(gap, r_lo, r_hi, xtol=1e-13, rtol=1e-15)
    tha, thb = theta(ya, r), theta(yb, r)
    x0 = xa - r * arc_x(tha)

    def y_of_x(x):
        x = float(x)
        if not (xa - 1e-9 <= x <= xb + 1e-9):
            raise ValueError(f"x={x} outside [{xa}, {xb}]")
        th = brentq(lambda t: x0 + r * arc_x(t) - x, tha - 1e-12, thb + 1e-12,
                    xtol=1e-13)
        return r * (1.0 - math.cos(th))

    return y_of_x, r
