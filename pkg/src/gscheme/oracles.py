"""Independent reference computations the rest of the package is tested against.

Every reference value travels with its method tag and an accuracy estimate so
no oracle can masquerade as exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ResourceLimitError, UnsupportedError
from .scheme import InitialData, SchemeConfig, solve_grid, solve_lattice
from .uncertainty import UncertaintySet


@dataclass(frozen=True)
class ReferenceSolution:
    value: float
    method: str  # closed_form_bs | classical_normal | fine_grid_gheat | brute_force_tree | maximal_sup
    accuracy: float
    meta: dict = field(default_factory=dict)
    warning: bool = False

    def __post_init__(self):
        if not self.accuracy > 0:
            raise ArgumentError("reference accuracy must be recorded and positive")


def norm_cdf(x: float) -> float:
    """Standard normal CDF via erfc; accurate to ~1e-15."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def bs_closed_form(r: float, sigma: float, T: float, K: float, s0: float, kind: str = "put") -> float:
    """Closed-form European put under a single lognormal volatility."""
    if kind != "put":
        raise UnsupportedError(f"only kind='put' is supported, got {kind!r}")
    if sigma <= 0 or T <= 0:
        raise ArgumentError("need sigma > 0 and T > 0")
    if s0 <= 0:
        raise ArgumentError("need s0 > 0")
    if K <= 0:
        return 0.0
    srt = sigma * math.sqrt(T)
    d1 = (math.log(s0 / K) + (r + 0.5 * sigma * sigma) * T) / srt
    d2 = d1 - srt
    return K * math.exp(-r * T) * norm_cdf(-d2) - s0 * norm_cdf(-d1)


def brute_force_tree(
    u: UncertaintySet, delta: float, n: int, x0, phi: InitialData, path_cap: int = 1_000_000
) -> float:
    """Unrolled nested max-expectation over full (non-recombined) paths."""
    if n < 1 or n > 4:
        raise ArgumentError(f"brute force supports 1 <= n <= 4, got {n}")
    total_atoms = sum(len(m.atoms) for m in u.measures)
    if total_atoms**n > path_cap:
        raise ResourceLimitError(f"{total_atoms ** n} paths exceed cap {path_cap}")
    root = math.sqrt(delta)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))

    def value(x, k):
        if k == 0:
            out = phi(x[None, 0] if x.size == 1 else x[None, :])
            return float(np.atleast_1d(out)[0])
        best = -math.inf
        for m in u.measures:
            acc = 0.0
            for a in m.atoms:
                acc += a.p * value(x + root * a.x + delta * a.y, k - 1)
            best = max(best, acc)
        return best

    return value(x0, n)


def classical_normal_reference(phi: InitialData, sigma: float) -> ReferenceSolution:
    """E[phi(sigma Z)] for a standard normal Z by adaptive quadrature."""
    from scipy.integrate import quad

    if sigma < 0:
        raise ArgumentError("sigma must be nonnegative")
    if sigma == 0:
        return ReferenceSolution(float(phi(np.array([0.0]))[0]), "classical_normal", 1e-15)
    dens = 1.0 / math.sqrt(2 * math.pi)

    def integrand(z):
        return float(phi(np.array([sigma * z]))[0]) * dens * math.exp(-0.5 * z * z)

    val, err = quad(integrand, -12.0, 12.0, limit=200, epsabs=1e-12, epsrel=1e-10)
    return ReferenceSolution(val, "classical_normal", max(err, 1e-14), {"sigma": sigma})


def _auto_halfwidth(u: UncertaintySet, t_eval: float, x_eval: float, safety: float = 4.0) -> float:
    max_x = max(float(np.max(np.abs(m.xs), initial=0.0)) for m in u.measures)
    max_y = max(float(np.max(np.abs(m.ys), initial=0.0)) for m in u.measures)
    return abs(x_eval) + t_eval * max_y + math.sqrt(max(t_eval, 1e-12)) * max_x * safety + 1e-6


def fine_grid_reference(
    u: UncertaintySet,
    phi: InitialData,
    t_eval: float,
    x_eval: float,
    delta_ref: float | None = None,
    target_delta: float | None = None,
    h: float | None = None,
    halfwidth: float | None = None,
    safety: float = 4.0,
    node_cap: int = 2_000_000,
) -> ReferenceSolution:
    """Reference value u(t_eval, x_eval) from the same recursion at much finer delta.

    Solves at delta_ref, 2*delta_ref and 4*delta_ref and Richardson-extrapolates;
    the accuracy estimate is the magnitude of the last extrapolation correction.
    A one- or two-displacement family is routed through the exact lattice
    (interpolation-free); otherwise a fine shared grid is used for all three
    solves so the extrapolation isolates the time-step error.
    """
    if t_eval <= 0:
        raise ArgumentError("t_eval must be positive")
    if delta_ref is None:
        delta_ref = 1.0 / 4096.0
        if target_delta is not None:
            delta_ref = min(delta_ref, target_delta * target_delta)
    # snap so that t_eval is an integer number of steps at all three resolutions,
    # with the coarsest delta still inside (0, 1]
    n_fine = max(4, int(round(t_eval / delta_ref)), int(math.ceil(4 * t_eval)))
    n_fine += (-n_fine) % 4
    deltas = [4 * t_eval / n_fine, 2 * t_eval / n_fine, t_eval / n_fine]

    from .scheme import _distinct_displacements  # local import to keep surface small

    values = []
    used_lattice = False
    disp, _ = _distinct_displacements(u, deltas[-1])
    if disp.shape[0] <= 2 and u.d == 1:
        used_lattice = True
        for dlt in deltas:
            n = int(round(t_eval / dlt))
            values.append(solve_lattice(u, dlt, n, [x_eval], phi, node_cap=node_cap).value)
    else:
        if halfwidth is None:
            halfwidth = _auto_halfwidth(u, t_eval, x_eval, safety)
        if h is None:
            h = max(2.0 * halfwidth / 250_000, 1.1e-4)

        def grid_value(dlt, spacing):
            n_grid = max(3, int(round(2 * halfwidth / spacing)) + 1)
            cfg = SchemeConfig(
                delta=dlt, horizon=t_eval,
                grid_lo=(x_eval - halfwidth,), grid_hi=(x_eval + halfwidth,), grid_n=(n_grid,),
            )
            return solve_grid(u, cfg, phi).value_at(t_eval, x_eval)

        # interpolation leaves an O(h^2) bias per solve that grows with the
        # step count; a paired 2h solve extrapolates it away so the time-step
        # extrapolation below sees a clean sequence
        h_corrections = []
        for dlt in deltas:
            vh = grid_value(dlt, h)
            v2h = grid_value(dlt, 2.0 * h)
            h_corrections.append((vh - v2h) / 3.0)
            values.append(vh + h_corrections[-1])

    v4, v2, v1 = values
    d1 = v2 - v4
    d2 = v1 - v2
    meta = {
        "delta_ref": deltas[-1],
        "solves": list(values),
        "backend": "lattice" if used_lattice else "grid",
    }
    extra = 0.0
    if not used_lattice:
        meta.update({"h": h, "halfwidth": halfwidth, "h_corrections": h_corrections})
        extra = abs(h_corrections[-1]) / 3.0
    scale = max(abs(v1), 1.0)
    if abs(d1) <= 1e-14 * scale and abs(d2) <= 1e-14 * scale:
        return ReferenceSolution(v1, "fine_grid_gheat", 1e-13 * scale + extra, meta)
    if d1 == 0.0 or d2 == 0.0 or (d1 > 0) != (d2 > 0) or abs(d2) >= abs(d1):
        # non-monotone refinement: keep the finest value, inflate the estimate
        return ReferenceSolution(
            v1, "fine_grid_gheat", 3.0 * max(abs(d1), abs(d2)) + extra, meta, warning=True
        )
    rate = d1 / d2  # = 2^gamma for error ~ C * delta^gamma
    correction = d2 / (rate - 1.0)
    meta["fitted_order"] = math.log2(rate)
    return ReferenceSolution(
        v1 + correction, "fine_grid_gheat", max(abs(correction), 1e-14 * scale) + extra, meta
    )


@dataclass(frozen=True)
class ThetaSet:
    """A bounded closed convex target set: an interval box or a point cloud."""

    kind: str  # "box" | "points"
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    points: np.ndarray | None = None

    @staticmethod
    def box(lo, hi) -> "ThetaSet":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ArgumentError("box needs lo <= hi componentwise")
        return ThetaSet("box", lo=lo, hi=hi)

    @staticmethod
    def from_points(points) -> "ThetaSet":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.size == 0:
            raise ArgumentError("point cloud must be nonempty")
        return ThetaSet("points", points=pts)

    @property
    def d(self) -> int:
        return self.lo.size if self.kind == "box" else self.points.shape[1]

    def distance(self, y) -> float:
        """Euclidean distance to the set (convex hull for point clouds, d=1 only)."""
        yv = np.atleast_1d(np.asarray(y, dtype=float))
        if self.kind == "box":
            gap = np.maximum(np.maximum(self.lo - yv, yv - self.hi), 0.0)
            return float(np.linalg.norm(gap))
        if self.d != 1:
            raise UnsupportedError("point-cloud distance is supported in d = 1 only")
        lo, hi = float(np.min(self.points)), float(np.max(self.points))
        return float(max(lo - yv[0], yv[0] - hi, 0.0))

    def contains(self, y, tol: float = 0.0) -> bool:
        return self.distance(y) <= tol


def maximal_sup(theta: ThetaSet, phi, n_grid: int = 2**14, refine: bool = True) -> float:
    """Maximum of phi over the set: dense grid plus one local refinement pass
    for boxes, exact enumeration for point clouds."""
    if theta.kind == "points":
        vals = [float(np.atleast_1d(phi(p if theta.d == 1 else p[None, :]))[0])
                for p in theta.points]
        return max(vals)
    if theta.d != 1:
        n_grid = min(n_grid, 2**7)
    axes = [np.linspace(lo, hi, n_grid) if hi > lo else np.array([lo]) for lo, hi in zip(theta.lo, theta.hi)]
    if theta.d == 1:
        grid = axes[0]
        vals = np.asarray(phi(grid), dtype=float)
        best = float(np.max(vals))
        if refine and grid.size > 2:
            i = int(np.argmax(vals))
            lo = grid[max(0, i - 1)]
            hi = grid[min(grid.size - 1, i + 1)]
            fine = np.linspace(lo, hi, 1025)
            best = max(best, float(np.max(np.asarray(phi(fine), dtype=float))))
        return best
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = np.asarray(phi(pts), dtype=float)
    best = float(np.max(vals))
    if refine:
        i = int(np.argmax(vals))
        center = pts[i]
        span = np.array([(hi - lo) / max(n_grid - 1, 1) for lo, hi in zip(theta.lo, theta.hi)])
        fine_axes = [
            np.linspace(max(c - s, lo), min(c + s, hi), 65)
            for c, s, lo, hi in zip(center, span, theta.lo, theta.hi)
        ]
        mesh = np.meshgrid(*fine_axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        best = max(best, float(np.max(np.asarray(phi(pts), dtype=float))))
    return best
