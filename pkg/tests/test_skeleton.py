"""Skeleton equation, rate functional, and Gronwall-type bounds."""

import math

import numpy as np

from ldplab.models import (ConstantDiffusion, DiagonalLipschitzDiffusion,
                           ModelSpec, ZeroDrift, truncate_diffusion)
from ldplab.skeleton import (ControlPath, rate_of_target, skeleton_apriori_bound,
                             skeleton_continuity_bound, solve_skeleton,
                             solve_skeleton_picard, u1_path_from_control, wiener_rate)
from ldplab.spectral import NoiseSpace, TimeGrid


def model_1d(sigma=1.0):
    return ModelSpec(dim_h=1, dim_u=1, drift=ZeroDrift(),
                     diffusion=ConstantDiffusion(np.array([[sigma]])))


def test_zero_control_constant_skeleton():
    grid = TimeGrid(32)
    model = model_1d()
    z = solve_skeleton(np.array([0.7]), ControlPath.zero(1, grid), model)
    assert np.array_equal(z.values[:, 0], np.full(33, 0.7))


def test_linear_skeleton_exact():
    # G = sigma constant, phi = c: z(t) = x + sigma c t exactly at nodes
    grid = TimeGrid(64)
    model = model_1d(sigma=1.3)
    z = solve_skeleton(np.array([0.2]), ControlPath.constant(np.array([0.5]), grid), model)
    assert np.abs(z.values[:, 0] - (0.2 + 1.3 * 0.5 * grid.nodes)).max() <= 1e-14


def test_exponential_skeleton_richardson():
    # G(z) = z (clipped form), phi = 1, x = 1: z(t) = e^t, Euler error O(dt)
    model = ModelSpec(dim_h=1, dim_u=1, drift=ZeroDrift(),
                      diffusion=DiagonalLipschitzDiffusion(np.array([1.0])))
    # start at 0.3 and look at t = 1/2 so the path stays inside the clamp window
    errs = []
    for steps in (64, 128, 256):
        grid = TimeGrid(steps)
        z = solve_skeleton(np.array([0.3]), ControlPath.constant(np.array([1.0]), grid), model)
        t_half = steps // 2
        errs.append(abs(z.values[t_half, 0] - 0.3 * math.e ** 0.5))
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] / errs[1] > 1.7  # first-order convergence halves the error


def test_picard_cross_validation():
    grid = TimeGrid(128)
    model = ModelSpec(dim_h=1, dim_u=1, drift=ZeroDrift(),
                      diffusion=DiagonalLipschitzDiffusion(np.array([0.8])))
    phi = ControlPath(np.sin(np.linspace(0, 3, 128))[:, None], grid)
    a = solve_skeleton(np.array([0.4]), phi, model)
    b = solve_skeleton_picard(np.array([0.4]), phi, model)
    assert a.sup_distance(b) <= 5e-2  # both converge to the same ODE solution


def test_energy_and_norm():
    grid = TimeGrid(16)
    phi = ControlPath.constant(np.array([2.0]), grid)
    assert phi.energy() == 2.0  # 0.5 * 4
    assert phi.l2_norm() == 2.0  # sqrt(2 * energy)


def test_rate_round_trip_identity_diffusion():
    grid = TimeGrid(64)
    model = model_1d()
    rng = np.random.default_rng(4)
    phi = ControlPath(rng.standard_normal((64, 1)), grid)
    z = solve_skeleton(np.array([0.0]), phi, model)
    res = rate_of_target(np.array([0.0]), z.values, model)
    assert res.value <= phi.energy() + 1e-6
    assert abs(res.value - phi.energy()) <= 1e-6
    assert np.abs(res.control.values - phi.values).max() <= 1e-6


def test_rate_affine_target_closed_form():
    # u(t) = x + v t with G = 1: value v^2/2, control = v
    grid = TimeGrid(32)
    model = model_1d()
    v = 1.4
    target = (0.5 + v * grid.nodes)[:, None]
    res = rate_of_target(np.array([0.5]), target, model)
    assert abs(res.value - v ** 2 / 2) <= 1e-9
    assert np.abs(res.control.values - v).max() <= 1e-9


def test_rate_unreachable_target():
    grid = TimeGrid(16)
    model = ModelSpec(dim_h=1, dim_u=1, drift=ZeroDrift(),
                      diffusion=ConstantDiffusion(np.array([[0.0]])))
    target = grid.nodes[:, None]  # non-constant with G = 0
    res = rate_of_target(np.array([0.0]), target, model)
    assert math.isinf(res.value)


def test_rate_wrong_start_is_infinite():
    grid = TimeGrid(16)
    target = np.ones((17, 1))
    res = rate_of_target(np.array([0.0]), target, model_1d())
    assert math.isinf(res.value)


def test_rate_scaling_quadratic():
    # I_x(x + c(u - x)) = c^2 I_x(u) for identity-like G
    grid = TimeGrid(32)
    model = model_1d()
    rng = np.random.default_rng(6)
    for _ in range(10):
        phi = ControlPath(rng.standard_normal((32, 1)), grid)
        u = solve_skeleton(np.array([0.0]), phi, model).values
        c = float(rng.uniform(0.5, 2.0))
        base = rate_of_target(np.array([0.0]), u, model).value
        scaled = rate_of_target(np.array([0.0]), c * u, model).value
        assert abs(scaled - c ** 2 * base) <= 1e-6 * max(1.0, c ** 2 * base)


def test_apriori_bound():
    grid = TimeGrid(64)
    model = ModelSpec(dim_h=1, dim_u=1, drift=ZeroDrift(),
                      diffusion=DiagonalLipschitzDiffusion(np.array([1.0])))
    # phi = 0: (|x|, |x|) with equality
    sup, bound = skeleton_apriori_bound(np.array([0.7]), ControlPath.zero(1, grid), model)
    assert sup == bound == 0.7
    # d=m=1, G=1 (constant), phi=1, x=0: energy r = 1/2, sqrt(2r) = 1,
    # so sup = 1 and bound = (0 + Lambda) e^Lambda = e
    sup, bound = skeleton_apriori_bound(np.array([0.0]),
                                        ControlPath.constant(np.array([1.0]), grid),
                                        model_1d())
    assert abs(sup - 1.0) <= 1e-12
    assert abs(bound - math.e) <= 1e-12
    assert sup <= bound


def test_level_set_boundedness():
    # any target with finite computed rate <= r stays inside the a-priori ball
    grid = TimeGrid(32)
    model = ModelSpec(dim_h=1, dim_u=1, drift=ZeroDrift(),
                      diffusion=DiagonalLipschitzDiffusion(np.array([0.9])))
    rng = np.random.default_rng(7)
    x = np.array([0.5])
    lam = model.lambda_lip
    for _ in range(10):
        phi = ControlPath(0.8 * rng.standard_normal((32, 1)), grid)
        u = solve_skeleton(x, phi, model).values
        r = rate_of_target(x, u, model).value
        if not math.isfinite(r) or r == 0.0:
            continue
        q = lam * math.sqrt(2.0 * r)
        assert np.abs(u).max() < (0.5 + q) * math.exp(q) + 1e-9


def test_continuity_bound_trials():
    rng = np.random.default_rng(11)
    grid = TimeGrid(32)
    model = ModelSpec(dim_h=2, dim_u=2, drift=ZeroDrift(),
                      diffusion=DiagonalLipschitzDiffusion(np.array([0.7, 0.3])))
    noise = NoiseSpace(np.array([1.0, 0.5]))
    for trial in range(100):
        x1 = rng.uniform(-1, 1, 2)
        x2 = rng.uniform(-1, 1, 2)
        phi1 = ControlPath(rng.standard_normal((32, 2)), grid)
        phi2 = ControlPath(rng.standard_normal((32, 2)), grid)
        lhs, rhs = skeleton_continuity_bound(x1, x2, phi1, phi2, model)
        assert lhs <= rhs + 1e-12
    # identical inputs: lhs = 0 <= rhs = 0
    phi = ControlPath.zero(2, grid)
    lhs, rhs = skeleton_continuity_bound(x1, x1, phi, phi, model)
    assert lhs == 0.0
    # constant skeletons differing only in the start point: both sides = |h|
    x2 = x1 + np.array([0.25, 0.0])
    lhs, rhs = skeleton_continuity_bound(x1, x2, phi, phi, model)
    assert abs(lhs - 0.25) <= 1e-15 and abs(rhs - 0.25) <= 1e-12


def test_truncated_skeleton_identical_within_bound():
    # skeleton of the truncated model agrees node-for-node when R exceeds the
    # a-priori bound of the control
    grid = TimeGrid(64)
    model = ModelSpec(dim_h=1, dim_u=1, drift=ZeroDrift(),
                      diffusion=DiagonalLipschitzDiffusion(np.array([0.8])))
    phi = ControlPath.constant(np.array([1.0]), grid)
    _, bound = skeleton_apriori_bound(np.array([0.5]), phi, model)
    trunc = truncate_diffusion(model, bound + 0.1)
    a = solve_skeleton(np.array([0.5]), phi, model)
    b = solve_skeleton(np.array([0.5]), phi, trunc)
    assert np.array_equal(a.values, b.values)


def test_wiener_rate_round_trip():
    noise = NoiseSpace(np.array([1.0, 0.5]))
    grid = TimeGrid(64)
    # f = 0 -> 0
    assert wiener_rate(np.zeros((65, 2)), noise) == 0.0
    # constant control c: energy |c|^2 / 2
    c = np.array([0.8, -0.4])
    phi = ControlPath.constant(c, grid)
    f = u1_path_from_control(phi, noise)
    assert abs(wiener_rate(f, noise) - 0.5 * float(c @ c)) <= 1e-12
    # piecewise control round trip
    rng = np.random.default_rng(12)
    psi = rng.standard_normal((64, 2))
    f = u1_path_from_control(ControlPath(psi, grid), noise)
    assert abs(wiener_rate(f, noise) - 0.5 * float((psi ** 2).sum()) * grid.dt) <= 1e-10
