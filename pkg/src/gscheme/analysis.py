"""Executable checks: axiom suite, discrete comparison principle, regularity
moduli and convergence-order fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, PreconditionError
from .scheme import SchemeSolution, forward_values
from .uncertainty import Atom, DiscreteMeasure, UncertaintySet, sublinear_expect

SLOPE_SLACK = 0.15


@dataclass(frozen=True)
class ExperimentRow:
    resolution: float
    error: float
    bound: float | None = None


@dataclass(frozen=True)
class ExperimentResult:
    """A resolution/error/bound table with its fitted log-log slope."""

    rows: tuple[ExperimentRow, ...]
    fitted_slope: float
    fitted_intercept: float
    passed: bool
    label: str = ""

    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    def resolutions(self) -> np.ndarray:
        return np.array([r.resolution for r in self.rows])


def fit_rate(pairs, target: float | None = None, slack: float = SLOPE_SLACK, bounds=None,
             label: str = "") -> ExperimentResult:
    """Least-squares slope of log error against log resolution.

    Rows with error below 1e-14 are excluded from the fit (they sit at float
    noise).  With a ``target``, the check passes when slope >= target - slack;
    if every error is at noise level the check passes outright.
    """
    pairs = [(float(r), abs(float(e))) for r, e in pairs]
    if len(pairs) < 3:
        raise ArgumentError("need at least 3 (resolution, error) pairs")
    if len({r for r, _ in pairs}) != len(pairs):
        raise ArgumentError("resolutions must be distinct")
    pairs.sort(key=lambda p: -p[0])
    if bounds is None:
        rows = tuple(ExperimentRow(r, e) for r, e in pairs)
    else:
        rows = tuple(ExperimentRow(r, e, float(b)) for (r, e), b in zip(pairs, bounds))
    usable = [(r, e) for r, e in pairs if e > 1e-14]
    if len(usable) < 3:
        slope, intercept = 0.0, 0.0
        passed = True
    else:
        logr = np.log([r for r, _ in usable])
        loge = np.log([e for _, e in usable])
        slope, intercept = np.polyfit(logr, loge, 1)
        passed = True if target is None else bool(slope >= target - slack)
    return ExperimentResult(rows, float(slope), float(intercept), passed, label)


def _as_step_values(h, solution: SchemeSolution, first: int, last: int):
    """Normalize a comparison-side h into per-step arrays over [first, last]."""
    shape = solution.steps[0].values.shape
    out = []
    for n in range(first, last + 1):
        if np.isscalar(h) or isinstance(h, (int, float)):
            out.append(np.full(shape, float(h)))
        elif callable(h):
            out.append(np.broadcast_to(np.asarray(h(n * solution.config.delta), float), shape))
        else:
            out.append(np.asarray(h[n - first], dtype=float).reshape(shape))
    return out


def _residual_series(solution: SchemeSolution, n: int) -> np.ndarray:
    """Nodewise scheme residual of a solution at step n against step n-1."""
    cfg = solution.config
    sv = forward_values(solution.family, cfg, solution.steps[n - 1], cfg.nodes())
    sv = sv.reshape(solution.steps[n].values.shape)
    return (solution.steps[n].values - sv) / cfg.delta


def check_comparison(
    under: SchemeSolution,
    over: SchemeSolution,
    h1=0.0,
    h2=0.0,
    slack: float = 1e-9,
    precondition_tol: float = 1e-9,
):
    """Discrete comparison check between a subsolution and a supersolution.

    First verifies the residual preconditions (under-residuals <= h1 and
    over-residuals >= h2 on the strict interior time levels); then evaluates
    the conclusion inequality nodewise: the gap between the two solutions
    never exceeds its value on the initial strip plus t times the largest
    positive part of h1 - h2.  Returns (holds, max violation).
    """
    if under.config != over.config:
        raise ArgumentError("both solutions must share one grid configuration")
    n_last = min(under.n_steps, over.n_steps)
    if n_last < 1:
        raise ArgumentError("solutions must contain at least one step")
    # interior levels are those strictly past the first interval
    interior = range(2, n_last + 1)
    h1s = _as_step_values(h1, under, 2, n_last)
    h2s = _as_step_values(h2, over, 2, n_last)
    for i, n in enumerate(interior):
        r_under = _residual_series(under, n)
        if np.max(r_under - h1s[i]) > precondition_tol:
            raise PreconditionError(
                f"under-solution residual exceeds h1 at step {n} by {np.max(r_under - h1s[i]):.3e}"
            )
        r_over = _residual_series(over, n)
        if np.min(r_over - h2s[i]) < -precondition_tol:
            raise PreconditionError(
                f"over-solution residual undercuts h2 at step {n} by {-np.min(r_over - h2s[i]):.3e}"
            )
    strip = max(
        float(np.max(under.steps[n].values - over.steps[n].values)) for n in (0, min(1, n_last))
    )
    strip = max(strip, 0.0)
    h_gap = max(
        (float(np.max(h1s[i] - h2s[i])) for i in range(len(h1s))), default=0.0
    )
    h_gap = max(h_gap, 0.0)
    worst = -math.inf
    for n in range(0, n_last + 1):
        t = n * under.config.delta
        lhs = under.steps[n].values - over.steps[n].values
        worst = max(worst, float(np.max(lhs - (strip + t * h_gap))))
    return worst <= slack, worst


@dataclass(frozen=True)
class ModulusReport:
    kind: str
    measured: float
    stated: float
    slack: float
    passed: bool


def estimate_modulus(
    solution: SchemeSolution,
    kind: str,
    c_phi: float,
    beta: float = 1.0,
    k0: float | None = None,
    x_window: tuple[float, float] | None = None,
    time_exponent: float | None = None,
    stated: float | None = None,
) -> ModulusReport:
    """Smallest multiplier that makes the regularity inequality hold on the data.

    ``kind='space'`` scans same-level node pairs against |x - y|^beta;
    ``kind='time'`` scans level pairs at fixed nodes against
    |s - t|^q + delta^q with q = beta/2 by default.  The pass threshold is the
    stated constant plus an interpolation-slack proportional to the spacing.
    """
    cfg = solution.config
    if cfg.d != 1:
        raise ArgumentError("modulus estimation is implemented for d = 1")
    xs = cfg.axes[0]
    mask = np.ones(xs.size, dtype=bool)
    if x_window is not None:
        mask = (xs >= x_window[0]) & (xs <= x_window[1])
    xs = xs[mask]
    h = cfg.spacing[0]
    grid_slack = 2.0 * h**beta * c_phi

    if kind == "space":
        dx = np.abs(xs[:, None] - xs[None, :])
        np.fill_diagonal(dx, np.inf)
        measured = 0.0
        for step in solution.steps:
            v = step.values[mask]
            dv = np.abs(v[:, None] - v[None, :])
            measured = max(measured, float(np.max(dv / dx**beta)))
        stated_c = c_phi if stated is None else stated
        return ModulusReport("space", measured, stated_c, grid_slack,
                             measured <= stated_c + grid_slack)

    if kind != "time":
        raise ArgumentError("kind must be 'space' or 'time'")
    q = beta / 2.0 if time_exponent is None else time_exponent
    if stated is None:
        if k0 is None:
            raise ArgumentError("time modulus needs k0 (or an explicit stated constant)")
        stated = math.sqrt(3.0) * c_phi * k0
    measured = 0.0
    n = len(solution.steps)
    for i in range(n):
        vi = solution.steps[i].values[mask]
        for j in range(i + 1, n):
            gap = abs(j - i) * cfg.delta
            denom = gap**q + cfg.delta**q
            dv = float(np.max(np.abs(vi - solution.steps[j].values[mask])))
            measured = max(measured, dv / denom)
    return ModulusReport("time", measured, stated, grid_slack, measured <= stated + grid_slack)


# -- axiom suite ----------------------------------------------------------------

def _random_family(rng: np.random.Generator, d: int) -> UncertaintySet:
    measures = []
    for _ in range(rng.integers(1, 4)):
        k = int(rng.integers(1, 5))
        w = rng.random(k) + 0.05
        w = w / w.sum()
        atoms = tuple(
            Atom(rng.normal(size=d), rng.normal(size=d), w[i]) for i in range(k)
        )
        measures.append(DiscreteMeasure(atoms))
    return UncertaintySet(tuple(measures), d=d)


def axiom_suite(n_trials: int = 200, seed: int = 0, tol: float = 1e-12):
    """Randomized check of the four sublinear-expectation axioms.

    Each trial draws a family and random payoff tables on its atoms, then
    verifies monotonicity, constant preservation, sub-additivity and positive
    homogeneity.  Returns (max violation, per-axiom dict of max violations).
    """
    rng = np.random.default_rng(seed)
    worst = {"monotone": 0.0, "constant": 0.0, "subadditive": 0.0, "homogeneous": 0.0}
    for _ in range(n_trials):
        d = int(rng.integers(1, 3))
        u = _random_family(rng, d)
        table_f = {}
        table_g = {}
        for m in u.measures:
            for a in m.atoms:
                key = (a.x.tobytes(), a.y.tobytes())
                table_f.setdefault(key, float(rng.normal(scale=2.0)))
                table_g.setdefault(key, table_f[key] + float(rng.random()))
        f = lambda x, y: table_f[(x.tobytes(), y.tobytes())]
        g = lambda x, y: table_g[(x.tobytes(), y.tobytes())]
        c = float(rng.normal())
        lam = float(rng.random() * 3.0)
        ef = sublinear_expect(u, f)
        eg = sublinear_expect(u, g)
        worst["monotone"] = max(worst["monotone"], ef - eg)
        e_shift = sublinear_expect(u, lambda x, y: f(x, y) + c)
        worst["constant"] = max(worst["constant"], abs(e_shift - (ef + c)))
        e_sum = sublinear_expect(u, lambda x, y: f(x, y) + g(x, y))
        worst["subadditive"] = max(worst["subadditive"], e_sum - (ef + eg))
        e_scaled = sublinear_expect(u, lambda x, y: lam * f(x, y))
        worst["homogeneous"] = max(worst["homogeneous"], abs(e_scaled - lam * ef))
    return max(worst.values()), worst
