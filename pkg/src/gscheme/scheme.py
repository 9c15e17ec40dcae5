"""Recursive solvers for the sublinear one-step operator.

The core update is ``psi -> E-hat[ psi(x + sqrt(delta) X + delta Y) ]`` applied
once per time step.  Two backends realize it:

* a uniform spatial grid with monotone piecewise-linear interpolation and
  clamp-constant extrapolation (general, scales to d <= 3), and
* an exact recombining lattice over the reachable displacement sums
  (interpolation-free; usable whenever the multiset count stays small).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement

import numpy as np

from .errors import (
    ArgumentError,
    ConfigurationError,
    EvaluationError,
    ResourceLimitError,
)
from .uncertainty import UncertaintySet, validate

LOWER_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class InitialData:
    """Initial condition descriptor: vectorized callable plus the regularity data
    the analysis layer needs (lower bound, Holder constant and exponent)."""

    name: str
    fn: object
    lower_bound: float
    c_phi: float | None = None
    beta: float = 1.0

    def __call__(self, points):
        return np.asarray(self.fn(points), dtype=float)


@dataclass(frozen=True)
class SchemeConfig:
    """Time step, horizon and spatial grid for the interpolating backend."""

    delta: float
    horizon: float
    grid_lo: tuple[float, ...]
    grid_hi: tuple[float, ...]
    grid_n: tuple[int, ...]
    extrapolation: str = "clamp-constant"

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.grid_lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.grid_hi))
        n = tuple(int(v) for v in np.atleast_1d(self.grid_n))
        object.__setattr__(self, "grid_lo", lo)
        object.__setattr__(self, "grid_hi", hi)
        object.__setattr__(self, "grid_n", n)
        if not (0 < self.delta <= 1):
            raise ArgumentError(f"delta must lie in (0, 1], got {self.delta}")
        if self.horizon < self.delta:
            raise ArgumentError(f"horizon {self.horizon} must be >= delta {self.delta}")
        if not (len(lo) == len(hi) == len(n)):
            raise ArgumentError("grid_lo, grid_hi, grid_n must share one length")
        if len(lo) > 3:
            raise ArgumentError("grid backend supports at most d = 3")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ArgumentError("grid_lo must be strictly below grid_hi componentwise")
        if any(k < 2 for k in n):
            raise ArgumentError("grid_n must be at least 2 per axis")
        if self.extrapolation != "clamp-constant":
            raise ArgumentError(f"unknown extrapolation rule {self.extrapolation!r}")

    @property
    def d(self) -> int:
        return len(self.grid_lo)

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        out = []
        for lo, hi, n in zip(self.grid_lo, self.grid_hi, self.grid_n):
            ax = np.linspace(lo, hi, n)
            ax.setflags(write=False)
            out.append(ax)
        return tuple(out)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (hi - lo) / (n - 1) for lo, hi, n in zip(self.grid_lo, self.grid_hi, self.grid_n)
        )

    @cached_property
    def _flat_nodes(self) -> np.ndarray:
        if self.d == 1:
            return self.axes[0]
        mesh = np.meshgrid(*self.axes, indexing="ij")
        out = np.stack([m.ravel() for m in mesh], axis=-1)
        out.setflags(write=False)
        return out

    def nodes(self) -> np.ndarray:
        """All grid nodes: shape (N,) for d=1, else (N, d) in C order."""
        return self._flat_nodes


@dataclass(frozen=True)
class GridFunction:
    """Values of one time level on the grid.  Snapshots are immutable."""

    config: SchemeConfig
    values: np.ndarray
    time_stamp: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        expected = self.config.grid_n if self.config.d > 1 else (self.config.grid_n[0],)
        if v.shape != tuple(expected):
            raise ArgumentError(f"values shape {v.shape} does not match grid {expected}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def interp(self, points) -> np.ndarray:
        """Piecewise-linear interpolation with clamp-constant extrapolation.

        The grid is uniform per axis, so the cell index is computed directly;
        the convex-combination form ``v[i] + frac * (v[i+1] - v[i])`` cannot
        overshoot the surrounding node values.
        """
        cfg = self.config
        if cfg.d == 1:
            pts = np.atleast_1d(np.asarray(points, dtype=float))
            n = cfg.grid_n[0]
            t = (pts - cfg.grid_lo[0]) / cfg.spacing[0]
            # snap queries that are a rounding error away from a node onto it
            nearest = np.rint(t)
            snap = np.abs(t - nearest) < 1e-9
            t[snap] = nearest[snap]
            np.clip(t, 0.0, n - 1.0, out=t)
            i = np.minimum(t.astype(np.int64), n - 2)
            frac = t - i
            v = self.values
            return v[i] + frac * (v[i + 1] - v[i])
        from scipy.interpolate import RegularGridInterpolator

        pts = np.atleast_2d(np.asarray(points, dtype=float))
        clipped = np.clip(pts, np.array(cfg.grid_lo), np.array(cfg.grid_hi))
        itp = RegularGridInterpolator(cfg.axes, self.values, method="linear")
        return itp(clipped)

    def min_value(self) -> float:
        return float(np.min(self.values))


def _shifts(u: UncertaintySet, delta: float):
    """Per-measure lists of (shift vector, weight) with shift = sqrt(d)X + dY."""
    root = math.sqrt(delta)
    out = []
    for xs, ys, ps in u.atom_arrays():
        shift = root * xs + delta * ys
        if not np.all(np.isfinite(shift)):
            raise EvaluationError("atom displacement is non-finite")
        out.append((shift, ps))
    return out


def forward_values(u: UncertaintySet, cfg: SchemeConfig, prev: GridFunction, points) -> np.ndarray:
    """One-step operator evaluated at arbitrary query points.

    For each measure, every atom shifts all query points at once and the
    previous level is interpolated there; the family maximum is taken nodewise.
    """
    if cfg.d == 1:
        pts = np.atleast_1d(np.asarray(points, dtype=float))
    else:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
    best = None
    for shifts, ps in _shifts(u, cfg.delta):
        acc = np.zeros(pts.shape[0])
        for k in range(len(ps)):
            s = shifts[k][0] if cfg.d == 1 else shifts[k]
            acc += ps[k] * prev.interp(pts + s)
        best = acc if best is None else np.maximum(best, acc)
    if best is None:
        raise ConfigurationError("uncertainty set has no measures")
    return best


def forward_operator(u: UncertaintySet, cfg: SchemeConfig, psi: GridFunction) -> GridFunction:
    """Apply the one-step operator on every grid node."""
    out = forward_values(u, cfg, psi, cfg.nodes())
    if cfg.d > 1:
        out = out.reshape(cfg.grid_n)
    return GridFunction(cfg, out, time_stamp=psi.time_stamp + cfg.delta)


def scheme_residual(u: UncertaintySet, cfg: SchemeConfig, x, p: float, v: GridFunction) -> float:
    """Residual of the monotone scheme at one node: (p - one-step value at x) / delta."""
    sv = forward_values(u, cfg, v, [x] if cfg.d > 1 else x)
    return (p - float(sv[0])) / cfg.delta


@dataclass
class SchemeSolution:
    """All time levels of one solve plus the piecewise-constant query rule."""

    config: SchemeConfig
    family: UncertaintySet
    phi: InitialData
    steps: list[GridFunction]

    @property
    def n_steps(self) -> int:
        return len(self.steps) - 1

    def step_index(self, t: float) -> int:
        """Index of the level governing time t: constant on [n*delta, (n+1)*delta)."""
        if t < 0 or t > self.config.horizon + 1e-12:
            raise ArgumentError(f"time {t} outside [0, {self.config.horizon}]")
        n = int(math.floor(t / self.config.delta + 1e-9))
        return min(n, self.n_steps)

    def at(self, t: float) -> GridFunction:
        return self.steps[self.step_index(t)]

    def value_at(self, t: float, x) -> float:
        return float(self.at(t).interp(x)[0] if self.config.d == 1 else self.at(t).interp([x])[0])

    def dump_csv(self, path) -> None:
        """Per-step rows ``t,x_1..x_d,value`` for every grid node."""
        cfg = self.config
        cols = ",".join(f"x_{i+1}" for i in range(cfg.d))
        nodes = cfg.nodes()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"t,{cols},value\n")
            for n, step in enumerate(self.steps):
                t = n * cfg.delta
                vals = step.values.ravel()
                for i in range(vals.size):
                    if cfg.d == 1:
                        xrow = format(nodes[i], ".17g")
                    else:
                        xrow = ",".join(format(c, ".17g") for c in nodes[i])
                    fh.write(f"{format(t, '.17g')},{xrow},{format(vals[i], '.17g')}\n")


def solve_grid(u: UncertaintySet, cfg: SchemeConfig, phi: InitialData) -> SchemeSolution:
    """Run the recursion from phi for floor(horizon/delta) steps on the grid.

    Requires a family without mean uncertainty in X; a trailing partial
    interval is left frozen at the last completed level.
    """
    report = validate(u)
    if not report.no_mean_uncertainty:
        raise ConfigurationError(
            "family has mean uncertainty in X; the recursion requires E[X] = 0 under every measure"
        )
    nodes = cfg.nodes()
    vals = phi(nodes)
    if cfg.d > 1:
        vals = vals.reshape(cfg.grid_n)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("initial data evaluated non-finite on the grid")
    if float(np.min(vals)) < phi.lower_bound - LOWER_BOUND_SLACK:
        raise EvaluationError(
            f"initial data dips below its declared lower bound {phi.lower_bound}"
        )
    steps = [GridFunction(cfg, vals, time_stamp=0.0)]
    n_steps = int(math.floor(cfg.horizon / cfg.delta + 1e-9))
    for _ in range(n_steps):
        nxt = forward_operator(u, cfg, steps[-1])
        if nxt.min_value() < phi.lower_bound - LOWER_BOUND_SLACK:
            raise EvaluationError("solver output violated the lower bound of the initial data")
        steps.append(nxt)
    return SchemeSolution(cfg, u, phi, steps)


@dataclass(frozen=True)
class LatticeState:
    """Values on the recombining set of displacement multisets of one size.

    Keys are count tuples over the distinct per-step displacement set; ``step``
    is the multiset size, so the key count equals the number of step-multisets.
    """

    x0: np.ndarray
    displacements: np.ndarray
    step: int
    values: dict


@dataclass(frozen=True)
class LatticeResult:
    value: float
    final: LatticeState
    levels: tuple[LatticeState, ...] | None = None


def _distinct_displacements(u: UncertaintySet, delta: float):
    """Distinct displacement vectors and per-measure (index, weight) tables."""
    root = math.sqrt(delta)
    seen: dict[tuple, int] = {}
    disp: list[tuple] = []
    tables = []
    for xs, ys, ps in u.atom_arrays():
        shift = root * xs + delta * ys
        idx = []
        for row in np.atleast_2d(shift):
            key = tuple(row.tolist())
            if key not in seen:
                seen[key] = len(disp)
                disp.append(key)
            idx.append(seen[key])
        tables.append((np.array(idx), ps))
    return np.array(disp), tables


def solve_lattice(
    u: UncertaintySet,
    delta: float,
    n_steps: int,
    x0,
    phi: InitialData,
    node_cap: int = 2_000_000,
    keep_levels: bool = False,
) -> LatticeResult:
    """Exact backward recursion over the recombining displacement lattice.

    At each multiset node the value is the family maximum of the weighted
    child values; the leaves evaluate phi.  No interpolation is involved, so
    the result realizes the recursion exactly at x0.
    """
    if n_steps < 1:
        raise ArgumentError("n_steps must be at least 1")
    if not (0 < delta <= 1):
        raise ArgumentError(f"delta must lie in (0, 1], got {delta}")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    disp, tables = _distinct_displacements(u, delta)
    m = disp.shape[0]
    leaf_count = math.comb(n_steps + m - 1, n_steps)
    if leaf_count > node_cap:
        raise ResourceLimitError(
            f"lattice would need {leaf_count} leaf nodes (> cap {node_cap}); use the grid backend"
        )

    if m <= 2:
        return _solve_lattice_small(u, delta, n_steps, x0, phi, disp, tables, keep_levels)

    # general case: per-level count-tuple keys with dict index maps
    def level_keys(j):
        keys = []
        for combo in combinations_with_replacement(range(m), j):
            counts = [0] * m
            for s in combo:
                counts[s] += 1
            keys.append(tuple(counts))
        return keys

    keys = level_keys(n_steps)
    counts = np.array(keys, dtype=float)
    positions = x0[None, :] + counts @ disp
    vals = phi(positions[:, 0] if x0.size == 1 else positions)
    levels = [LatticeState(x0, disp, n_steps, dict(zip(keys, vals.tolist())))] if keep_levels else None

    for j in range(n_steps - 1, -1, -1):
        idx_map = {k: i for i, k in enumerate(keys)}
        new_keys = level_keys(j)
        child_idx = np.empty((m, len(new_keys)), dtype=np.int64)
        for s in range(m):
            for i, k in enumerate(new_keys):
                child = list(k)
                child[s] += 1
                child_idx[s, i] = idx_map[tuple(child)]
        best = None
        for atom_idx, ps in tables:
            acc = np.zeros(len(new_keys))
            for a, w in zip(atom_idx, ps):
                acc += w * vals[child_idx[a]]
            best = acc if best is None else np.maximum(best, acc)
        vals, keys = best, new_keys
        if keep_levels:
            levels.append(LatticeState(x0, disp, j, dict(zip(keys, vals.tolist()))))

    final = LatticeState(x0, disp, 0, {tuple([0] * m): float(vals[0])})
    return LatticeResult(float(vals[0]), final, tuple(levels) if keep_levels else None)


def _solve_lattice_small(u, delta, n_steps, x0, phi, disp, tables, keep_levels):
    """Vectorized path for at most two distinct displacements."""
    m = disp.shape[0]

    def keys_of(j, counts0):
        if m == 1:
            return [(int(c),) for c in counts0]
        return [(int(j - c), int(c)) for c in counts0]

    if m == 1:
        counts = np.zeros((1, 1))
        counts[0, 0] = n_steps
    else:
        c1 = np.arange(n_steps + 1, dtype=float)
        counts = np.stack([n_steps - c1, c1], axis=-1)
    positions = x0[None, :] + counts @ disp
    vals = phi(positions[:, 0] if x0.size == 1 else positions)
    vals = np.atleast_1d(np.asarray(vals, dtype=float))
    levels = None
    if keep_levels:
        ks = keys_of(n_steps, counts[:, -1] if m == 2 else counts[:, 0])
        levels = [LatticeState(x0, disp, n_steps, dict(zip(ks, vals.tolist())))]

    for j in range(n_steps - 1, -1, -1):
        size = j + 1 if m == 2 else 1
        best = None
        for atom_idx, ps in tables:
            acc = np.zeros(size)
            for a, w in zip(atom_idx, ps):
                if m == 1:
                    acc += w * vals
                else:
                    # adding displacement 0 leaves the count of symbol 1; adding
                    # displacement 1 bumps it, i.e. shifts the slice by one
                    acc += w * (vals[0:size] if a == 0 else vals[1 : size + 1])
            best = acc if best is None else np.maximum(best, acc)
        vals = best
        if keep_levels:
            c1 = np.arange(size, dtype=float)
            ks = keys_of(j, c1 if m == 2 else np.array([j], dtype=float))
            levels.append(LatticeState(x0, disp, j, dict(zip(ks, vals.tolist()))))

    final = LatticeState(x0, disp, 0, {tuple([0] * m): float(vals[0])})
    return LatticeResult(float(vals[0]), final, tuple(levels) if keep_levels else None)
