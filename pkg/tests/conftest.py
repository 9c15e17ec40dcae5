import numpy as np
import pytest

import gscheme as gs


def make_random_family(rng, d=1, max_measures=3, max_atoms=4, zero_mean_x=False):
    """Random finite family; optionally recentered so X is mean-zero per measure."""
    measures = []
    for _ in range(rng.integers(1, max_measures + 1)):
        k = int(rng.integers(1, max_atoms + 1))
        w = rng.random(k) + 0.05
        w = w / w.sum()
        xs = rng.normal(size=(k, d))
        ys = rng.normal(size=(k, d))
        if zero_mean_x:
            xs = xs - w @ xs
        measures.append(
            gs.DiscreteMeasure(tuple(gs.Atom(xs[i], ys[i], w[i]) for i in range(k)))
        )
    return gs.UncertaintySet(tuple(measures), d=d)


def make_shared_displacement_config(rng):
    """Zero-mean family whose atoms share at most 3 distinct displacements,
    plus a smooth lower-bounded Lipschitz initial condition and run sizes."""
    a = float(rng.uniform(0.3, 1.2))
    y1, y2, y3 = rng.normal(scale=0.4, size=3)
    measures = []
    for _ in range(rng.integers(1, 3)):
        q = float(rng.uniform(0.2, 1.0))
        atoms = [gs.Atom([a], [y1], q / 2), gs.Atom([-a], [y2], q / 2)]
        if q < 1.0:
            atoms.append(gs.Atom([0.0], [y3], 1.0 - q))
        measures.append(gs.DiscreteMeasure(tuple(atoms)))
    u = gs.UncertaintySet(tuple(measures), d=1)
    amp = float(rng.uniform(1.0, 3.0))
    c = float(rng.normal(scale=0.5))
    w = float(rng.uniform(0.25, 0.6))
    b = float(rng.uniform(0.2, 1.0))
    d0 = float(rng.normal(scale=0.5))

    def fn(x, amp=amp, c=c, w=w, b=b, d0=d0):
        x = np.asarray(x, dtype=float)
        return amp * np.exp(-((x - c) ** 2) / (2 * w * w)) + b * np.sqrt(1.0 + (x - d0) ** 2)

    phi = gs.InitialData("rand-smooth", fn, 0.0, c_phi=amp / w * 0.61 + b)
    n = int(rng.integers(1, 4))
    delta = float(rng.uniform(0.2, 1.0))
    x0 = float(rng.normal(scale=0.5))
    return u, phi, n, delta, x0


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
