"""Built-in measure families and initial-data descriptors.

These cover every experiment the package ships, so nothing needs a measure
file to run: ``pm-sigma`` (volatility uncertainty, no drift), ``bsb``
(volatility uncertainty with the matching drift term), ``lln-box`` (pure mean
uncertainty), and ``zero``.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError
from .scheme import InitialData
from .uncertainty import Atom, DiscreteMeasure, UncertaintySet


def pm_sigma_family(sigmas) -> UncertaintySet:
    """One measure per sigma with atoms x = +-sigma (weight 1/2 each), y = 0."""
    sigmas = [float(s) for s in np.atleast_1d(sigmas)]
    if not sigmas:
        raise ArgumentError("need at least one sigma")
    measures = tuple(
        DiscreteMeasure((Atom([s], [0.0], 0.5), Atom([-s], [0.0], 0.5))) for s in sigmas
    )
    return UncertaintySet(measures, d=1)


def sigma_grid(sigma_lo: float, sigma_hi: float, n_sigma: int) -> np.ndarray:
    if not (0 < sigma_lo <= sigma_hi):
        raise ArgumentError(f"need 0 < sigma_lo <= sigma_hi, got ({sigma_lo}, {sigma_hi})")
    if n_sigma < 1:
        raise ArgumentError("n_sigma must be at least 1")
    if n_sigma == 1:
        if sigma_lo != sigma_hi:
            raise ArgumentError("n_sigma = 1 requires sigma_lo = sigma_hi")
        return np.array([sigma_lo])
    return np.linspace(sigma_lo, sigma_hi, n_sigma)


def bsb_family(r: float, sigma_lo: float, sigma_hi: float, n_sigma: int = 33) -> UncertaintySet:
    """Volatility-band family: per sigma, x = +-sigma and y = r - sigma^2/2.

    The y component is tied to x so the one-step operator reproduces the
    log-price drift of the uncertain-volatility pricing equation.
    """
    measures = []
    for s in sigma_grid(sigma_lo, sigma_hi, n_sigma):
        y = r - 0.5 * s * s
        measures.append(DiscreteMeasure((Atom([s], [y], 0.5), Atom([-s], [y], 0.5))))
    return UncertaintySet(tuple(measures), d=1)


def lln_box_family(
    theta_lo: float,
    theta_hi: float,
    n_measures: int = 5,
    spread: float = 0.45,
) -> UncertaintySet:
    """Pure mean-uncertainty family: X = 0, Y two-point with means spanning the box.

    Atoms sit at theta_lo - spread and theta_hi + spread so that partial sums
    fluctuate outside [theta_lo, theta_hi]; the per-measure probabilities are
    chosen so the means sweep the box exactly.
    """
    if theta_hi < theta_lo:
        raise ArgumentError("need theta_lo <= theta_hi")
    if spread <= 0:
        raise ArgumentError("spread must be positive")
    a = theta_lo - spread
    b = theta_hi + spread
    measures = []
    for mu in np.linspace(theta_lo, theta_hi, max(2, n_measures)):
        lam = (mu - a) / (b - a)
        measures.append(DiscreteMeasure((Atom([0.0], [a], 1.0 - lam), Atom([0.0], [b], lam))))
    return UncertaintySet(tuple(measures), d=1)


def zero_family(d: int = 1) -> UncertaintySet:
    """Single measure with the single atom X = Y = 0."""
    z = [0.0] * d
    return UncertaintySet((DiscreteMeasure((Atom(z, z, 1.0),)),), d=d)


def builtin_family(name: str, **params) -> UncertaintySet:
    """Construct a named builtin family; unknown names raise."""
    if name == "pm-sigma":
        sigmas = sigma_grid(
            params["sigma_lo"], params.get("sigma_hi", params["sigma_lo"]), params.get("n_sigma", 2)
        )
        return pm_sigma_family(sigmas)
    if name == "bsb":
        return bsb_family(
            params["r"], params["sigma_lo"], params["sigma_hi"], params.get("n_sigma", 33)
        )
    if name == "lln-box":
        return lln_box_family(
            params["theta_lo"],
            params["theta_hi"],
            n_measures=params.get("n_measures", 5),
            spread=params.get("spread", 0.45),
        )
    if name == "zero":
        return zero_family(params.get("d", 1))
    raise ArgumentError(f"unknown builtin family {name!r}")


# -- initial data -------------------------------------------------------------

def relu() -> InitialData:
    return InitialData("relu", lambda x: np.maximum(np.asarray(x, float), 0.0), 0.0, c_phi=1.0)


def capped_relu(cap: float = 1.0) -> InitialData:
    if cap <= 0:
        raise ArgumentError("cap must be positive")
    return InitialData(
        "capped-relu",
        lambda x: np.minimum(np.maximum(np.asarray(x, float), 0.0), cap),
        0.0,
        c_phi=1.0,
    )


def abs_value() -> InitialData:
    return InitialData("abs", lambda x: np.abs(np.asarray(x, float)), 0.0, c_phi=1.0)


def square() -> InitialData:
    # not Lipschitz; handy for exact second-moment identities in oracle checks
    return InitialData("square", lambda x: np.asarray(x, float) ** 2, 0.0, c_phi=None)


def builtin_phi(name: str, **params) -> InitialData:
    table = {
        "relu": relu,
        "capped-relu": capped_relu,
        "abs": abs_value,
        "square": square,
    }
    if name not in table:
        raise ArgumentError(f"unknown builtin initial data {name!r}")
    return table[name](**params)
