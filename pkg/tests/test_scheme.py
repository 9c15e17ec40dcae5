import math

import numpy as np
import pytest

import gscheme as gs
from conftest import make_random_family, make_shared_displacement_config


def wide_cfg(delta=0.5, horizon=1.0, half=6.0, n=241):
    return gs.SchemeConfig(delta=delta, horizon=horizon, grid_lo=(-half,), grid_hi=(half,),
                           grid_n=(n,))


def test_config_validation():
    with pytest.raises(gs.ArgumentError):
        gs.SchemeConfig(delta=0.0, horizon=1.0, grid_lo=(-1,), grid_hi=(1,), grid_n=(5,))
    with pytest.raises(gs.ArgumentError):
        gs.SchemeConfig(delta=1.5, horizon=2.0, grid_lo=(-1,), grid_hi=(1,), grid_n=(5,))
    with pytest.raises(gs.ArgumentError):
        gs.SchemeConfig(delta=0.5, horizon=0.25, grid_lo=(-1,), grid_hi=(1,), grid_n=(5,))
    with pytest.raises(gs.ArgumentError):
        gs.SchemeConfig(delta=0.5, horizon=1.0, grid_lo=(1,), grid_hi=(-1,), grid_n=(5,))
    with pytest.raises(gs.ArgumentError):
        gs.SchemeConfig(delta=0.5, horizon=1.0, grid_lo=(-1,), grid_hi=(1,), grid_n=(1,))
    # delta = 1 is allowed: one unit step
    gs.SchemeConfig(delta=1.0, horizon=1.0, grid_lo=(-1,), grid_hi=(1,), grid_n=(5,))


def test_forward_identity_for_zero_family():
    cfg = wide_cfg()
    v = gs.GridFunction(cfg, np.sin(cfg.axes[0]))
    out = gs.forward_operator(gs.zero_family(), cfg, v)
    assert np.array_equal(out.values, v.values)


def test_forward_preserves_constants():
    cfg = wide_cfg()
    u = gs.pm_sigma_family([0.3, 0.7])
    v = gs.GridFunction(cfg, np.full(cfg.grid_n[0], 1.25))
    out = gs.forward_operator(u, cfg, v)
    assert np.max(np.abs(out.values - 1.25)) < 1e-14


def test_forward_linear_function_fixed_in_interior():
    cfg = wide_cfg(delta=0.25)
    u = gs.pm_sigma_family([0.5, 1.0])
    v = gs.GridFunction(cfg, cfg.axes[0].copy())
    out = gs.forward_operator(u, cfg, v)
    xs = cfg.axes[0]
    interior = np.abs(xs) <= 6.0 - 1.0  # one max-displacement safety margin
    assert np.max(np.abs(out.values[interior] - xs[interior])) < 1e-12


def test_forward_monotone_in_values(rng):
    cfg = wide_cfg()
    u = make_random_family(rng, zero_mean_x=True)
    for _ in range(10):
        base = rng.normal(size=cfg.grid_n[0])
        v = gs.GridFunction(cfg, base)
        w = gs.GridFunction(cfg, base + rng.random(cfg.grid_n[0]))
        sv = gs.forward_operator(u, cfg, v)
        sw = gs.forward_operator(u, cfg, w)
        assert np.all(sw.values >= sv.values - 1e-12)


def test_residual_definition_and_shift():
    cfg = wide_cfg(delta=0.5)
    u = gs.pm_sigma_family([0.4])
    v = gs.GridFunction(cfg, np.abs(cfg.axes[0]))
    sval = float(gs.forward_values(u, cfg, v, np.array([0.25]))[0])
    assert gs.scheme_residual(u, cfg, 0.25, sval, v) == 0.0
    base = gs.scheme_residual(u, cfg, 0.25, 1.0, v)
    shifted = gs.scheme_residual(
        u, cfg, 0.25, 1.0 + 0.3, gs.GridFunction(cfg, v.values + 0.1)
    )
    assert shifted == pytest.approx(base + (0.3 - 0.1) / 0.5, abs=1e-12)


def test_residual_zero_prev_function():
    cfg = wide_cfg(delta=0.5)
    v = gs.GridFunction(cfg, np.zeros(cfg.grid_n[0]))
    assert gs.scheme_residual(gs.zero_family(), cfg, 0.0, 1.0, v) == pytest.approx(2.0)


def test_residual_concavity(rng):
    cfg = wide_cfg(delta=0.5)
    u = make_random_family(rng, zero_mean_x=True)
    for _ in range(10):
        v1 = gs.GridFunction(cfg, rng.normal(size=cfg.grid_n[0]))
        v2 = gs.GridFunction(cfg, rng.normal(size=cfg.grid_n[0]))
        p1, p2 = rng.normal(size=2)
        lam = float(rng.random())
        mix = gs.GridFunction(cfg, lam * v1.values + (1 - lam) * v2.values)
        s_mix = gs.scheme_residual(u, cfg, 0.0, lam * p1 + (1 - lam) * p2, mix)
        s1 = gs.scheme_residual(u, cfg, 0.0, p1, v1)
        s2 = gs.scheme_residual(u, cfg, 0.0, p2, v2)
        assert s_mix >= lam * s1 + (1 - lam) * s2 - 1e-10


def test_solve_grid_trivial_cases():
    cfg = wide_cfg(delta=0.25)
    phi = gs.builtin_phi("abs")
    sol = gs.solve_grid(gs.zero_family(), cfg, phi)
    for t in (0.0, 0.3, 0.9):
        assert np.array_equal(sol.at(t).values, sol.steps[0].values)

    const = gs.InitialData("const", lambda x: np.full_like(np.asarray(x, float), 3.0), 3.0)
    sol2 = gs.solve_grid(gs.pm_sigma_family([0.2, 0.4]), cfg, const)
    assert np.max(np.abs(sol2.at(1.0).values - 3.0)) < 1e-13


def test_solve_grid_one_step_example():
    # two-point +-1 measure, phi = x^2, delta = 1: value at 0 is (1 + 1)/2
    cfg = gs.SchemeConfig(delta=1.0, horizon=1.0, grid_lo=(-4.0,), grid_hi=(4.0,), grid_n=(33,))
    sol = gs.solve_grid(gs.pm_sigma_family([1.0]), cfg, gs.builtin_phi("square"))
    assert sol.value_at(1.0, 0.0) == pytest.approx(1.0, abs=1e-13)


def test_solve_grid_rejects_mean_uncertainty():
    biased = gs.UncertaintySet((gs.DiscreteMeasure((gs.Atom([0.5], [0.0], 1.0),)),), d=1)
    with pytest.raises(gs.ConfigurationError, match="mean uncertainty"):
        gs.solve_grid(biased, wide_cfg(), gs.builtin_phi("abs"))


def test_piecewise_constant_queries():
    cfg = wide_cfg(delta=0.4, horizon=1.0)
    sol = gs.solve_grid(gs.pm_sigma_family([0.3]), cfg, gs.builtin_phi("abs"))
    assert sol.n_steps == 2  # floor(1.0 / 0.4)
    assert sol.at(0.4) is sol.at(0.65)
    assert sol.at(0.8) is sol.at(1.0)  # trailing partial interval stays frozen
    assert sol.at(0.0) is not sol.at(0.4)


def test_lower_bound_preserved(rng):
    cfg = wide_cfg(delta=0.25)
    u = make_random_family(rng, zero_mean_x=True)
    phi = gs.builtin_phi("capped-relu")
    sol = gs.solve_grid(u, cfg, phi)
    for step in sol.steps:
        assert step.min_value() >= 0.0 - 1e-9


def test_grid_function_immutable():
    cfg = wide_cfg()
    g = gs.GridFunction(cfg, np.zeros(cfg.grid_n[0]))
    with pytest.raises(ValueError):
        g.values[0] = 1.0


def test_interp_clamps_and_matches_numpy(rng):
    cfg = wide_cfg(half=2.0, n=37)
    vals = rng.normal(size=37)
    g = gs.GridFunction(cfg, vals)
    pts = rng.uniform(-3.0, 3.0, size=500)
    expected = np.interp(pts, cfg.axes[0], vals)
    assert np.max(np.abs(g.interp(pts) - expected)) < 1e-13
    assert g.interp(np.array([-10.0]))[0] == vals[0]
    assert g.interp(np.array([10.0]))[0] == vals[-1]


def test_lattice_one_step_equals_sublinear_expect(rng):
    u = make_random_family(rng)
    phi = gs.builtin_phi("abs")
    got = gs.solve_lattice(u, 0.49, 1, [0.2], phi).value
    expected = gs.sublinear_expect(
        u, lambda x, y: float(abs(0.2 + math.sqrt(0.49) * x[0] + 0.49 * y[0]))
    )
    assert got == pytest.approx(expected, abs=1e-13)


def test_lattice_matches_brute_force_two_steps(rng):
    for _ in range(10):
        u, phi, _n, delta, x0 = make_shared_displacement_config(rng)
        v_lat = gs.solve_lattice(u, delta, 2, [x0], phi).value
        v_tree = gs.brute_force_tree(u, delta, 2, [x0], phi)
        assert v_lat == pytest.approx(v_tree, abs=1e-12)


def test_lattice_recombination_counts(rng):
    u, phi, _n, delta, x0 = make_shared_displacement_config(rng)
    n = 5
    res = gs.solve_lattice(u, delta, n, [x0], phi, keep_levels=True)
    m = res.final.displacements.shape[0]
    assert m <= 3
    for level in res.levels:
        assert len(level.values) == math.comb(level.step + m - 1, level.step)


def test_lattice_node_cap():
    u = gs.pm_sigma_family([0.1, 0.2, 0.3, 0.4])  # 8 distinct displacements
    with pytest.raises(gs.ResourceLimitError, match="grid backend"):
        gs.solve_lattice(u, 1e-4, 200, [0.0], gs.builtin_phi("abs"), node_cap=10_000)


def test_lattice_crr_matches_degenerate_pricer():
    r, sigma, delta, K = 0.05, 0.2, 0.01, 1.0
    fam = gs.bsb_family(r, sigma, sigma, 1)
    payoff = gs.make_payoff("put", K)
    spec = gs.BsbSpec(r, sigma, sigma, 1.0, payoff, n_sigma=1, delta=delta)
    x0, phi, inverse = gs.bsb_transform(spec, 1.0)
    lat = gs.solve_lattice(fam, delta, 100, [x0], phi).value
    price = gs.bsb_price(spec, 1.0)
    assert inverse(lat) == pytest.approx(price, abs=1e-12)


def test_grid_converges_to_lattice(rng):
    u, phi, _n, delta, x0 = make_shared_displacement_config(rng)
    n = 3
    v_lat = gs.solve_lattice(u, delta, n, [x0], phi).value
    half = abs(x0) + n * (math.sqrt(delta) * 1.2 + delta * 1.5) + 0.5
    errs = []
    for h in (4e-3, 2e-3, 1e-3):
        n_grid = int(round(2 * half / h)) + 1
        cfg = gs.SchemeConfig(delta=delta, horizon=n * delta, grid_lo=(x0 - half,),
                              grid_hi=(x0 + half,), grid_n=(n_grid,))
        sol = gs.solve_grid(u, cfg, phi)
        errs.append(abs(sol.value_at(n * delta, x0) - v_lat))
    assert errs[-1] <= 5e-3
    # fitted linear-in-h envelope: halving h at least roughly halves the error
    assert errs[-1] <= errs[0] / 2 + 1e-9


def test_space_and_time_regularity_of_solver_output():
    u = gs.pm_sigma_family([0.1, 0.3])
    K = 1.0
    cfg = gs.SchemeConfig(delta=1 / 16, horizon=1.0, grid_lo=(-3.0,), grid_hi=(3.0,),
                          grid_n=(401,))
    phi = gs.InitialData("log-put", lambda x: np.maximum(K - np.exp(np.asarray(x, float)), 0.0),
                         0.0, c_phi=K)
    sol = gs.solve_grid(u, cfg, phi)
    mom = gs.validate(u)
    k0 = gs.compute_constants(mom, K, 1.0, 1.0, c_rho=1.0).k0
    space = gs.estimate_modulus(sol, "space", c_phi=K, beta=1.0, x_window=(-1.5, 1.5))
    assert space.passed, f"space modulus {space.measured} > {space.stated} + {space.slack}"
    time_mod = gs.estimate_modulus(sol, "time", c_phi=K, beta=1.0, k0=k0, x_window=(-1.5, 1.5))
    assert time_mod.passed, f"time modulus {time_mod.measured} > {time_mod.stated}"


def test_solution_dump_csv(tmp_path):
    cfg = gs.SchemeConfig(delta=0.5, horizon=1.0, grid_lo=(-1.0,), grid_hi=(1.0,), grid_n=(5,))
    sol = gs.solve_grid(gs.pm_sigma_family([0.2]), cfg, gs.builtin_phi("abs"))
    path = tmp_path / "steps.csv"
    sol.dump_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x_1,value"
    assert len(lines) == 1 + 5 * len(sol.steps)


def test_two_dimensional_lattice_matches_brute_force():
    m1 = gs.DiscreteMeasure((gs.Atom([0.6, 0.0], [0.1, 0.0], 0.5),
                             gs.Atom([-0.6, 0.0], [0.0, 0.2], 0.5)))
    m2 = gs.DiscreteMeasure((gs.Atom([0.0, 0.8], [0.0, 0.0], 0.5),
                             gs.Atom([0.0, -0.8], [0.1, 0.1], 0.5)))
    u = gs.UncertaintySet((m1, m2), d=2)
    phi = gs.InitialData("norm", lambda p: np.linalg.norm(p, axis=-1), 0.0, c_phi=1.0)
    for n in (1, 2, 3):
        lat = gs.solve_lattice(u, 0.49, n, [0.2, -0.1], phi).value
        tree = gs.brute_force_tree(u, 0.49, n, [0.2, -0.1], phi)
        assert lat == pytest.approx(tree, abs=1e-12)


def test_two_dimensional_forward_operator():
    cfg = gs.SchemeConfig(delta=0.5, horizon=1.0, grid_lo=(-3.0, -3.0), grid_hi=(3.0, 3.0),
                          grid_n=(31, 31))
    # symmetric two-point family along each axis
    m1 = gs.DiscreteMeasure((gs.Atom([0.5, 0.0], [0.0, 0.0], 0.5),
                             gs.Atom([-0.5, 0.0], [0.0, 0.0], 0.5)))
    m2 = gs.DiscreteMeasure((gs.Atom([0.0, 0.5], [0.0, 0.0], 0.5),
                             gs.Atom([0.0, -0.5], [0.0, 0.0], 0.5)))
    u = gs.UncertaintySet((m1, m2), d=2)
    phi = gs.InitialData("sum-abs", lambda p: np.abs(p).sum(axis=-1), 0.0, c_phi=1.0)
    sol = gs.solve_grid(u, cfg, phi)
    assert sol.steps[-1].values.shape == (31, 31)
    # constants preserved in 2-d as well
    const = gs.InitialData("c", lambda p: np.full(p.shape[0], 2.0), 2.0)
    solc = gs.solve_grid(u, cfg, const)
    assert np.max(np.abs(solc.steps[-1].values - 2.0)) < 1e-12
