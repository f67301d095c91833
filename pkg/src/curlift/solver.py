"""Assembly of the discrete saddle-point problem and its primal-dual solution.

Primal blocks: the chain T and one lifted vector per constraint sample.
Dual blocks: the n-cochain and the boundary multiplier cochain (restricted
to the interior for free-boundary modes).  Pushforward equalities are
enforced by per-fiber affine or simplex projection inside the primal prox.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cubical import Chain, CubicalComplex
from .lifting import BoundCost, CostModel
from .multivector import num_components
from .whitney import SampleSet, sampling_operator


class SolverDivergence(RuntimeError):
    """Raised when iterates or the objective blow past the configured bound."""


@dataclass
class FiberSet:
    """Groups of T-coefficients whose per-group sums are pinned to a target."""

    indices: list
    nonneg: bool = False
    target: float = 1.0

    def stacked(self):
        lens = {len(ix) for ix in self.indices}
        if len(lens) == 1:
            return np.asarray(self.indices, dtype=int)
        return None


@dataclass
class SolverConfig:
    max_iters: int = 50_000
    tol: float = 1e-4
    precond: str = "diagonal"  # or "scalar"
    theta: float = 1.0
    check_every: int = 50
    divergence_bound: float = 1e10
    verbose: bool = False
    log_every: int = 0

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.precond not in ("diagonal", "scalar"):
            raise ValueError(f"unknown preconditioning mode {self.precond!r}")


@dataclass
class SaddleProblem:
    """Bilinear saddle-point instance consumed by the PDHG engine.

    The coupling K is primal-by-dual; the Lagrangian is
    x^T K y + g(x) - f*(y) with g the fiber constraints plus the lifted
    cost on the sample block and f* the affine boundary-datum term.
    """

    K: sp.spmatrix
    n_T: int
    n_omega: int
    lam_rows: int = 0
    lam_cols: int = 0
    fibers: list = field(default_factory=list)
    bound_cost: BoundCost | None = None
    phi_offset: np.ndarray | None = None
    violation_metrics: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def n_primal(self) -> int:
        return self.n_T + self.lam_rows * self.lam_cols

    @property
    def n_dual(self) -> int:
        return self.K.shape[1]

    @property
    def n_phi(self) -> int:
        return self.n_dual - self.n_omega


@dataclass
class PDHGState:
    """Final pair of iterates plus step sizes, enough to recompute residuals."""

    sp: SaddleProblem
    x: np.ndarray
    y: np.ndarray
    x_prev: np.ndarray
    y_prev: np.ndarray
    tau: np.ndarray
    sigma: np.ndarray


@dataclass
class SolverReport:
    iterations: int
    primal_res: float
    dual_res: float
    rel_primal: float
    rel_dual: float
    converged: bool
    energy: float
    violations: dict
    history: list


@dataclass
class SolverResult:
    T: np.ndarray
    lam: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    report: SolverReport
    state: PDHGState


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def project_simplex_rows(C: np.ndarray, target: float = 1.0) -> np.ndarray:
    """Row-wise Euclidean projection onto {x >= 0, sum x = target}."""
    n = C.shape[1]
    U = np.sort(C, axis=1)[:, ::-1]
    css = np.cumsum(U, axis=1) - target
    ks = np.arange(1, n + 1)
    cond = U - css / ks > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(len(C)), rho] / (rho + 1)
    return np.maximum(C - theta[:, None], 0.0)


def project_affine_rows(C: np.ndarray, target: float = 1.0) -> np.ndarray:
    """Row-wise Euclidean projection onto {sum x = target}."""
    n = C.shape[1]
    shift = (C.sum(axis=1) - target) / n
    return C - shift[:, None]


def _apply_fibers(T: np.ndarray, fibers) -> np.ndarray:
    for fib in fibers:
        stacked = fib.stacked()
        if stacked is not None:
            block = T[stacked]
            proj = (
                project_simplex_rows(block, fib.target)
                if fib.nonneg
                else project_affine_rows(block, fib.target)
            )
            T[stacked] = proj
        else:
            for ix in fib.indices:
                row = T[np.asarray(ix)][None, :]
                proj = (
                    project_simplex_rows(row, fib.target)
                    if fib.nonneg
                    else project_affine_rows(row, fib.target)
                )
                T[np.asarray(ix)] = proj[0]
    return T


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


def _phi_active_mask(cx: CubicalComplex, k: int, boundary: str, n: int) -> np.ndarray:
    """Active multiplier cochain entries for the requested boundary mode."""
    bases = cx.cube_bases(k)
    axes = cx.cube_axes(k)
    m = len(bases)
    if boundary == "dirichlet":
        return np.ones(m, dtype=bool)
    if boundary == "free":
        check_axes = range(n)
    elif boundary == "free_product":
        check_axes = range(cx.d)
    else:
        raise ValueError(f"unknown boundary mode {boundary!r}")
    on_bdry = np.zeros(m, dtype=bool)
    for i in check_axes:
        degen = ~np.any(axes == i, axis=1)
        extreme = (bases[:, i] == 0) | (bases[:, i] == cx.cells[i])
        on_bdry |= degen & extreme
    return ~on_bdry


def assemble(
    cx: CubicalComplex,
    n: int,
    model: CostModel,
    samples,
    boundary: str = "dirichlet",
    datum: Chain | None = None,
    pushforward: tuple = ("first",),
    nonneg: tuple = (),
) -> SaddleProblem:
    """Wire the coupling operators, fibers and prox bundles into a SaddleProblem.

    Boundary modes: "dirichlet" (pair boundary-minus-datum against a free
    multiplier), "free" (multiplier restricted away from the domain-boundary
    columns), "free_product" (restricted away from the whole product
    boundary).  Pushforward blocks "first"/"last" become per-fiber sum
    constraints; blocks listed in `nonneg` additionally get nonnegativity.
    """
    d = cx.d
    N = d - n
    if model.n != n or model.N != N:
        raise ValueError(
            f"cost model dimensions ({model.n},{model.N}) do not match complex ({n},{N})"
        )
    for blk in pushforward:
        if blk not in ("first", "last"):
            raise ValueError(f"unknown pushforward block {blk!r}")
    if "last" in pushforward and n != N:
        raise ValueError("second pushforward constraint requires n == N")
    if not set(nonneg) <= set(pushforward):
        raise ValueError("nonnegativity flags must refer to pushforward blocks")
    if boundary == "dirichlet":
        if datum is None:
            datum = Chain.zero(cx, n - 1)
        if datum.k != n - 1 or datum.complex is not cx:
            raise ValueError("datum must be an (n-1)-chain on the same complex")
    elif datum is not None:
        raise ValueError("a boundary datum requires the dirichlet mode")

    nT = cx.num_cubes(n)
    D_n = sp.diags(cx.volumes(n))
    B = cx.boundary_matrix(n)
    vol_nm1 = cx.volumes(n - 1)

    active = _phi_active_mask(cx, n - 1, boundary, n)
    act_idx = np.nonzero(active)[0]
    BtD = (B.T @ sp.diags(vol_nm1)).tocsc()[:, act_idx].tocsr()
    phi_offset = (
        (vol_nm1 * datum.coeffs)[act_idx]
        if datum is not None
        else np.zeros(len(act_idx))
    )

    pts = samples if isinstance(samples, SampleSet) else SampleSet(samples)
    S_mat = sampling_operator(cx, pts, n)
    ncomp = num_components(d, n)
    m = len(pts)

    K = sp.bmat(
        [[D_n, BtD], [-S_mat, None]],
        format="csr",
    )

    fibers = []
    for blk in pushforward:
        P, _ = cx.pushforward_matrix(n, blk)
        Pc = P.tocsr()
        idx = [
            Pc.indices[Pc.indptr[r] : Pc.indptr[r + 1]].tolist()
            for r in range(Pc.shape[0])
        ]
        fibers.append(FiberSet(indices=idx, nonneg=blk in nonneg, target=1.0))

    bound = model.bind(pts.points)

    violations = []
    if boundary == "dirichlet":
        dat = datum.coeffs.copy()
        violations.append(
            ("boundary", lambda T, B=B, dat=dat: float(np.max(np.abs(B @ T - dat), initial=0.0)))
        )
    else:
        inner = active

        def _free_viol(T, B=B, inner=inner):
            r = B @ T
            return float(np.max(np.abs(r[inner]), initial=0.0))

        violations.append(("boundary", _free_viol))
    for blk, fib in zip(pushforward, fibers):
        def _push_viol(T, fib=fib):
            worst = 0.0
            for ix in fib.indices:
                worst = max(worst, abs(float(np.sum(T[ix])) - fib.target))
            return worst

        violations.append((f"pushforward_{blk}", _push_viol))

    return SaddleProblem(
        K=K,
        n_T=nT,
        n_omega=cx.num_cubes(n),
        lam_rows=m,
        lam_cols=ncomp,
        fibers=fibers,
        bound_cost=bound,
        phi_offset=phi_offset,
        violation_metrics=violations,
        meta={
            "complex": cx,
            "n": n,
            "boundary": boundary,
            "phi_active": act_idx,
            "sample_points": pts.points,
            "model": model,
        },
    )


# ---------------------------------------------------------------------------
# the PDHG engine
# ---------------------------------------------------------------------------


def _estimate_norm(K: sp.spmatrix, iters: int = 50, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(K.shape[1])
    v /= np.linalg.norm(v)
    est = 1.0
    for _ in range(iters):
        w = K @ v
        v = K.T @ w
        nv = np.linalg.norm(v)
        if nv == 0:
            return 1.0
        est = math.sqrt(nv)
        v /= nv
    return est


def _step_sizes(prob: SaddleProblem, cfg: SolverConfig):
    K = prob.K
    if cfg.precond == "scalar":
        L = _estimate_norm(K)
        tau = np.full(prob.n_primal, 0.95 / L)
        sigma = np.full(prob.n_dual, 0.95 / L)
    else:
        absK = abs(K)
        row = np.asarray(absK.sum(axis=1)).ravel()
        col = np.asarray(absK.sum(axis=0)).ravel()
        tau = 1.0 / np.where(row > 0, row, 1.0)
        sigma = 1.0 / np.where(col > 0, col, 1.0)
    # isotropize over blocks whose prox needs a single step: each lifted
    # sample vector, and each constraint fiber
    if prob.lam_rows:
        lam_tau = tau[prob.n_T :].reshape(prob.lam_rows, prob.lam_cols)
        lam_min = lam_tau.min(axis=1)
        tau[prob.n_T :] = np.repeat(lam_min, prob.lam_cols)
    for fib in prob.fibers:
        for ix in fib.indices:
            ix = np.asarray(ix)
            tau[ix] = tau[ix].min()
    return tau, sigma


def residuals(state: PDHGState) -> tuple[float, float]:
    """Standard PDHG residual norms at the last iterate, scaled by problem size."""
    prob = state.sp
    dx = state.x_prev - state.x
    dy = state.y_prev - state.y
    p = dx / state.tau - prob.K @ dy
    d = dy / state.sigma - prob.K.T @ dx
    return (
        float(np.linalg.norm(p)) / math.sqrt(prob.n_primal),
        float(np.linalg.norm(d)) / math.sqrt(prob.n_dual),
    )


def pdhg_run(prob: SaddleProblem, cfg: SolverConfig | None = None,
             x0: np.ndarray | None = None) -> SolverResult:
    """Run the preconditioned primal-dual iteration until the residual
    tolerance (relative to the first measured residuals) or max_iters.

    `x0` optionally warm-starts the primal vector (length n_primal), e.g.
    from a feasible raster chain; the duals start at zero.
    """
    if cfg is None:
        cfg = SolverConfig()
    K = prob.K.tocsr()
    Kt = K.T.tocsr()
    tau, sigma = _step_sizes(prob, cfg)

    nT = prob.n_T
    if x0 is None:
        x = np.zeros(prob.n_primal)
    else:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (prob.n_primal,):
            raise ValueError(f"x0 must have shape ({prob.n_primal},)")
        x = x0.copy()
    y = np.zeros(prob.n_dual)
    x_prev = x.copy()
    y_prev = y.copy()
    sig_phi = sigma[prob.n_omega :]
    off = prob.phi_offset

    res0 = None
    pres = dres = math.inf
    rel_p = rel_d = math.inf
    converged = False
    history = []
    it = 0

    for it in range(1, cfg.max_iters + 1):
        x_prev, y_prev = x, y
        # primal: descend with the current duals, then prox
        x = x_prev - tau * (K @ y_prev)
        if prob.fibers:
            _apply_fibers(x[:nT], prob.fibers)
        if prob.lam_rows:
            lam = x[nT:].reshape(prob.lam_rows, prob.lam_cols)
            tlam = tau[nT :: prob.lam_cols]
            x[nT:] = prob.bound_cost.prox_rows(lam, tlam).ravel()
        # dual: ascend with the extrapolated primals
        xbar = x + cfg.theta * (x - x_prev)
        y = y_prev + sigma * (Kt @ xbar)
        if off is not None and len(off):
            y[prob.n_omega :] -= sig_phi * off

        if it % cfg.check_every == 0 or it == cfg.max_iters:
            state = PDHGState(prob, x, y, x_prev, y_prev, tau, sigma)
            pres, dres = residuals(state)
            if not (np.isfinite(pres) and np.isfinite(dres)):
                raise SolverDivergence(
                    f"non-finite residuals at iteration {it}: ({pres}, {dres})"
                )
            xn = float(np.linalg.norm(x))
            if xn > cfg.divergence_bound:
                raise SolverDivergence(
                    f"iterate norm {xn:.3e} exceeded bound {cfg.divergence_bound:.3e} "
                    f"at iteration {it}"
                )
            if res0 is None:
                res0 = (max(pres, 1e-300), max(dres, 1e-300))
            rel_p = pres / res0[0]
            rel_d = dres / res0[1]
            if cfg.log_every and (it % cfg.log_every == 0):
                history.append((it, pres, dres))
                if cfg.verbose:
                    print(f"  iter {it:7d}  primal {pres:.3e}  dual {dres:.3e}")
            if max(rel_p, rel_d) <= cfg.tol:
                converged = True
                break

    T = x[:nT].copy()
    lam = (
        x[nT:].reshape(prob.lam_rows, prob.lam_cols).copy()
        if prob.lam_rows
        else np.zeros((0, prob.lam_cols or 0))
    )
    omega = y[: prob.n_omega].copy()
    phi = y[prob.n_omega :].copy()
    energy = prob.bound_cost.psi_total(lam) if prob.bound_cost is not None else 0.0
    violations = {name: fn(T) for name, fn in prob.violation_metrics}
    report = SolverReport(
        iterations=it,
        primal_res=pres,
        dual_res=dres,
        rel_primal=rel_p,
        rel_dual=rel_d,
        converged=converged,
        energy=energy,
        violations=violations,
        history=history,
    )
    state = PDHGState(prob, x, y, x_prev, y_prev, tau, sigma)
    return SolverResult(T=T, lam=lam, omega=omega, phi=phi, report=report, state=state)
