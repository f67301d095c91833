"""Cost models for the lifted problems.

Each model bundles the original integrand c(x, y, xi), its one-homogeneous
convex reparametrization on n-vectors, the prox of that function, and the
projection onto the dual constraint set.  All three shipped models admit
closed forms, evaluated row-wise over sample batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .multivector import (
    graph_embed,
    mass_comass_rows,
    num_components,
    project_comass_ball_rows,
    prox_mass_rows,
)


@dataclass
class CostVolume:
    """Data cost sampled on the grid nodes of the product space."""

    values: np.ndarray
    spacing: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.spacing = np.asarray(self.spacing, dtype=float)
        if self.values.ndim != len(self.spacing):
            raise ValueError("spacing must have one entry per volume axis")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("cost volume contains non-finite values")
        if np.any(self.values < 0):
            raise ValueError("cost volume must be nonnegative")

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        """Multilinear interpolation at scaled positions, one row per point."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        U = P / self.spacing
        d = self.values.ndim
        hi = np.array(self.values.shape) - 1
        i0 = np.clip(np.floor(U).astype(int), 0, np.maximum(hi - 1, 0))
        frac = np.clip(U - i0, 0.0, 1.0)
        out = np.zeros(len(P))
        for corner in range(1 << d):
            bits = [(corner >> a) & 1 for a in range(d)]
            idx = tuple(np.minimum(i0[:, a] + bits[a], hi[a]) for a in range(d))
            w = np.ones(len(P))
            for a in range(d):
                w *= frac[:, a] if bits[a] else 1.0 - frac[:, a]
            out += w * self.values[idx]
        return out


class BoundCost:
    """A cost model evaluated against a fixed batch of sample points."""

    def __init__(self, psi_rows, prox_rows, dual_rows):
        self._psi = psi_rows
        self._prox = prox_rows
        self._dual = dual_rows

    def psi_rows(self, V: np.ndarray) -> np.ndarray:
        return self._psi(V)

    def psi_total(self, V: np.ndarray) -> float:
        return float(np.sum(self._psi(V)))

    def prox_rows(self, V: np.ndarray, tau) -> np.ndarray:
        return self._prox(V, np.asarray(tau, dtype=float))

    def dual_project_rows(self, W: np.ndarray) -> np.ndarray:
        return self._dual(W)


class CostModel:
    """Base class; subclasses fix (n, N) and the closed forms."""

    n: int
    N: int
    sample_mode = "vertices"

    @property
    def d(self) -> int:
        return self.n + self.N

    @property
    def ncomp(self) -> int:
        return num_components(self.d, self.n)

    # scalar convenience wrappers over the batch API
    def psi(self, z, v) -> float:
        return float(self.bind(np.atleast_2d(z)).psi_rows(np.atleast_2d(v))[0])

    def psi_prox(self, z, v, tau) -> np.ndarray:
        return self.bind(np.atleast_2d(z)).prox_rows(
            np.atleast_2d(v), np.array([tau])
        )[0]

    def dual_project(self, z, w) -> np.ndarray:
        return self.bind(np.atleast_2d(z)).dual_project_rows(np.atleast_2d(w))[0]

    def evaluate(self, x, y, xi) -> float:
        raise NotImplementedError

    def bind(self, points) -> BoundCost:
        raise NotImplementedError


def _shrink_rows(V: np.ndarray, thresh: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(V, axis=1)
    scale = np.zeros_like(nrm)
    pos = nrm > 0
    scale[pos] = np.maximum(0.0, 1.0 - thresh[pos] / nrm[pos])
    return V * scale[:, None]


class BrachistochroneCost(CostModel):
    """Time-of-descent integrand c(x, y, xi) = sqrt((1 + xi^2) / (2 g y)).

    The lifted form is the weighted Euclidean norm alpha(y) |v| with
    alpha(y) = (2 g y)^(-1/2).  The singularity at y = 0 is kept out of the
    domain by requiring y >= y_min > 0; problem builders shift the grid
    accordingly through `origin`.
    """

    n = 1
    N = 1
    sample_mode = "midpoints+vertices"

    def __init__(self, g: float = 9.81, y_min: float = 1e-6, origin=(0.0, 0.0)):
        if g <= 0:
            raise ValueError("g must be positive")
        if y_min <= 0:
            raise ValueError("y_min must be positive")
        self.g = g
        self.y_min = y_min
        self.origin = np.asarray(origin, dtype=float)

    def alpha(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if np.any(y < self.y_min):
            raise ValueError(f"height below y_min={self.y_min} (singular at y=0)")
        return 1.0 / np.sqrt(2.0 * self.g * y)

    def evaluate(self, x, y, xi) -> float:
        a = float(self.alpha(np.asarray(y).reshape(())))
        xi = float(np.asarray(xi).reshape(()))
        return a * math.sqrt(1.0 + xi * xi)

    def bind(self, points) -> BoundCost:
        P = np.atleast_2d(np.asarray(points, dtype=float)) + self.origin
        a = self.alpha(P[:, 1])

        def psi_rows(V):
            return a * np.linalg.norm(V, axis=1)

        def prox_rows(V, tau):
            return _shrink_rows(V, np.broadcast_to(tau * a, (len(V),)))

        def dual_rows(W):
            nrm = np.linalg.norm(W, axis=1)
            scale = np.minimum(1.0, a / np.maximum(nrm, 1e-300))
            return W * scale[:, None]

        return BoundCost(psi_rows, prox_rows, dual_rows)


class ScalarTVCost(CostModel):
    """Total-variation integrand c(x, y, xi) = rho(x, y) + |xi| for scalar range.

    The lifted form on n-vectors splits into the leading coefficient v_t
    (weighted by rho, restricted nonnegative) plus the Euclidean norm of the
    codimension-one coefficients.
    """

    sample_mode = "midpoints+vertices"

    def __init__(self, rho: CostVolume, n: int = 2, origin=None):
        self.rho = rho
        self.n = int(n)
        self.N = 1
        if rho.values.ndim != self.d:
            raise ValueError(
                f"cost volume dimension {rho.values.ndim} != n + 1 = {self.d}"
            )
        self.origin = (
            np.zeros(self.d) if origin is None else np.asarray(origin, dtype=float)
        )

    def evaluate(self, x, y, xi) -> float:
        z = np.concatenate([np.atleast_1d(x), np.atleast_1d(y)]) - self.origin
        r = float(self.rho.interpolate(z[None, :])[0])
        return r + float(np.linalg.norm(np.asarray(xi, dtype=float)))

    def bind(self, points) -> BoundCost:
        P = np.atleast_2d(np.asarray(points, dtype=float))
        r = self.rho.interpolate(P)

        def psi_rows(V):
            vt = V[:, 0]
            out = r * vt + np.linalg.norm(V[:, 1:], axis=1)
            return np.where(vt < 0, np.inf, out)

        def prox_rows(V, tau):
            tau = np.broadcast_to(tau, (len(V),))
            out = np.empty_like(V)
            out[:, 0] = np.maximum(0.0, V[:, 0] - tau * r)
            out[:, 1:] = _shrink_rows(V[:, 1:], tau)
            return out

        def dual_rows(W):
            out = np.empty_like(W)
            out[:, 0] = np.minimum(W[:, 0], r)
            nrm = np.linalg.norm(W[:, 1:], axis=1)
            scale = np.minimum(1.0, 1.0 / np.maximum(nrm, 1e-300))
            out[:, 1:] = W[:, 1:] * scale[:, None]
            return out

        return BoundCost(psi_rows, prox_rows, dual_rows)


class RegistrationCost(CostModel):
    """Area-based matching integrand (rho(x, y) + eps) sqrt(det(I + xi^T xi)).

    The lifted form is the weighted mass norm of the 2-vector in R^4; the
    dual constraint is a comass ball of radius rho + eps.
    """

    n = 2
    N = 2
    sample_mode = "vertices"

    def __init__(self, rho: CostVolume, eps: float):
        if eps <= 0:
            raise ValueError("eps must be positive")
        if rho.values.ndim != 4:
            raise ValueError("registration cost volume must be 4-dimensional")
        self.rho = rho
        self.eps = float(eps)
        self.origin = np.zeros(4)

    def evaluate(self, x, y, xi) -> float:
        z = np.concatenate([np.atleast_1d(x), np.atleast_1d(y)])
        r = float(self.rho.interpolate(z[None, :])[0])
        xi = np.asarray(xi, dtype=float).reshape(2, 2)
        return (r + self.eps) * math.sqrt(
            np.linalg.det(np.eye(2) + xi.T @ xi)
        )

    def bind(self, points) -> BoundCost:
        P = np.atleast_2d(np.asarray(points, dtype=float))
        w = self.rho.interpolate(P) + self.eps

        def psi_rows(V):
            mass, _ = mass_comass_rows(V)
            return w * mass

        def prox_rows(V, tau):
            return prox_mass_rows(V, np.broadcast_to(tau, (len(V),)) * w)

        def dual_rows(W):
            return project_comass_ball_rows(W, w)

        return BoundCost(psi_rows, prox_rows, dual_rows)


def polyconvex_consistency(
    model: CostModel, lo, hi, trials: int = 1000, seed: int = 0
) -> float:
    """Max deviation |Psi(z, M(xi)) - c(x, y, xi)| over random points and Jacobians.

    `lo`, `hi` bound the sampled product-space box in physical coordinates.
    """
    rng = np.random.default_rng(seed)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    origin = getattr(model, "origin", np.zeros(model.d))
    worst = 0.0
    for _ in range(trials):
        z = lo + rng.random(model.d) * (hi - lo)
        xi = rng.standard_normal((model.N, model.n))
        v = graph_embed(xi)
        lifted = model.psi(z - origin, v.coeffs)
        direct = model.evaluate(z[: model.n], z[model.n :], xi)
        worst = max(worst, abs(lifted - direct))
    return worst
