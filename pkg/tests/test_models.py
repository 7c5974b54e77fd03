"""Coefficient forms: drift/diffusion evaluation, Lipschitz data, truncation."""

import math

import numpy as np
import pytest

from ldplab.models import (AffineDiffusion, AffineDrift, ConstantDiffusion,
                           DiagonalLipschitzDiffusion, ModelSpec, NuWeight,
                           TableDrift, ZeroDrift, diffusion_dvec, eval_diffusion,
                           eval_drift, truncate_diffusion, truncation_radius)
from ldplab.spectral import hs_norm


def make_model(drift, diffusion, d, m):
    return ModelSpec(dim_h=d, dim_u=m, drift=drift, diffusion=diffusion)


def test_zero_drift():
    model = make_model(ZeroDrift(), ConstantDiffusion(np.eye(2)), 2, 2)
    assert np.array_equal(eval_drift(model, 0.3, np.array([1.0, -2.0])), [0.0, 0.0])


def test_affine_drift_identity_case():
    # nu = 1, b = 0, B = I: F(t, x) = x
    drift = AffineDrift(nu=NuWeight.constant(1.0), b=np.zeros(2), B=np.eye(2))
    model = make_model(drift, ConstantDiffusion(np.eye(2)), 2, 2)
    x = np.array([0.7, -0.1])
    assert np.allclose(eval_drift(model, 0.5, x), x, atol=0, rtol=0)


def test_affine_drift_singular_nu_tabulated():
    # nu(t) = t^(-1/4) tabulated at cell midpoints; b=(1,0), B=0, t=0.5
    drift = AffineDrift(nu=NuWeight.from_function(lambda t: t ** -0.25, 256),
                        b=np.array([1.0, 0.0]), B=np.zeros((2, 2)))
    model = make_model(drift, ConstantDiffusion(np.eye(2)), 2, 2)
    out = eval_drift(model, 0.5, np.zeros(2))
    # 0.5^(-1/4) = 1.189207 up to the midpoint tabulation error of the cell
    assert abs(out[0] - 0.5 ** -0.25) < 2e-3
    assert out[1] == 0.0


def test_drift_time_domain():
    model = make_model(ZeroDrift(), ConstantDiffusion(np.eye(1)), 1, 1)
    with pytest.raises(ValueError):
        eval_drift(model, 1.5, np.zeros(1))
    with pytest.raises(ValueError):
        eval_drift(model, -0.1, np.zeros(1))


def test_table_drift():
    table = np.arange(8.0).reshape(4, 2)
    model = make_model(TableDrift(table), ConstantDiffusion(np.eye(2)), 2, 2)
    assert np.array_equal(eval_drift(model, 0.3, np.zeros(2)), table[1])


def test_affine_drift_operator_norm_validation():
    with pytest.raises(ValueError):
        AffineDrift(nu=NuWeight.constant(1.0), b=np.zeros(2), B=2.0 * np.eye(2))


def test_constant_diffusion():
    g = np.array([[1.0, 2.0], [0.0, 1.0]])
    model = make_model(ZeroDrift(), ConstantDiffusion(g), 2, 2)
    for x in (np.zeros(2), np.array([5.0, -3.0])):
        assert np.array_equal(eval_diffusion(model, x), g)
    assert model.gamma_bound == hs_norm(g)


def test_diagonal_lipschitz_clamp():
    # column k = sigma_k * clamp(x_k) * e_k; sigma=(1,1), x=(0.5,-2) -> diag(0.5,-1)
    model = make_model(ZeroDrift(), DiagonalLipschitzDiffusion(np.array([1.0, 1.0])), 2, 2)
    g = eval_diffusion(model, np.array([0.5, -2.0]))
    assert np.array_equal(g, np.diag([0.5, -1.0]))


def test_lipschitz_certification_sampled():
    # declared Lambda is never exceeded on sampled pairs, strictly
    rng = np.random.default_rng(0)
    models = [
        make_model(ZeroDrift(), DiagonalLipschitzDiffusion(np.array([0.9, 0.4])), 2, 2),
        make_model(ZeroDrift(), ConstantDiffusion(np.array([[1.0, 0.3], [0.0, 0.7]])), 2, 2),
        make_model(ZeroDrift(), AffineDiffusion(
            base=np.array([[0.5, 0.0], [0.0, 0.5]]),
            coeff=0.3 * rng.standard_normal((2, 2, 2))), 2, 2),
    ]
    for model in models:
        lam = model.lambda_lip
        for _ in range(2000):
            x, y = rng.uniform(-10, 10, 2), rng.uniform(-10, 10, 2)
            dg = hs_norm(eval_diffusion(model, x) - eval_diffusion(model, y))
            assert dg <= lam * np.linalg.norm(x - y)


def test_growth_bound_sampled():
    rng = np.random.default_rng(1)
    model = make_model(
        AffineDrift(nu=NuWeight.constant(0.8), b=np.array([0.5, 0.0]), B=0.5 * np.eye(2)),
        DiagonalLipschitzDiffusion(np.array([0.9, 0.4])), 2, 2)
    lam = model.lambda_lip
    for _ in range(500):
        t = rng.uniform(0, 1)
        x = rng.uniform(-10, 10, 2)
        assert hs_norm(eval_diffusion(model, x)) <= lam * (1 + np.linalg.norm(x))
        assert np.linalg.norm(eval_drift(model, t, x)) <= model.nu_at(t) * (1 + np.linalg.norm(x)) + 1e-12


def test_truncation_inside_and_outside():
    # linear G(x) = x_1 * E: outside the unit ball the argument is retracted
    coeff = np.zeros((1, 1, 1))
    coeff[0, 0, 0] = 1.0
    model = make_model(ZeroDrift(), AffineDiffusion(base=np.zeros((1, 1)), coeff=coeff), 1, 1)
    trunc = truncate_diffusion(model, 1.0)
    inside = np.array([0.5])
    assert np.array_equal(eval_diffusion(trunc, inside), eval_diffusion(model, inside))
    assert np.array_equal(eval_diffusion(trunc, np.array([2.0])),
                          eval_diffusion(model, np.array([1.0])))


def test_truncation_constant_diffusion_unchanged():
    g = np.array([[2.0]])
    model = make_model(ZeroDrift(), ConstantDiffusion(g), 1, 1)
    trunc = truncate_diffusion(model, 0.5)
    for x in (np.array([0.1]), np.array([7.0])):
        assert np.array_equal(eval_diffusion(trunc, x), g)


def test_truncated_diffusion_bounded():
    rng = np.random.default_rng(2)
    coeff = 0.4 * rng.standard_normal((2, 2, 2))
    model = make_model(ZeroDrift(), AffineDiffusion(base=np.zeros((2, 2)), coeff=coeff), 2, 2)
    radius = 3.0
    trunc = truncate_diffusion(model, radius)
    lam = model.lambda_lip
    worst_ball = 0.0
    for _ in range(2000):
        x = rng.uniform(-20, 20, 2)
        g = hs_norm(eval_diffusion(trunc, x))
        assert g <= lam * (1 + radius)
        if np.linalg.norm(x) <= radius:
            worst_ball = max(worst_ball, g)
    # the sup over all of space is attained on the closed ball
    assert worst_ball > 0


def test_truncation_radius_values():
    # rho=1, Lambda=1, r=0.5, delta=0.1 -> 2e + 0.1 = 5.536563...
    assert math.isclose(truncation_radius(1.0, 0.5, 0.1, 1.0),
                        2.0 * math.e + 0.1, rel_tol=1e-12)
    # rho=0.5, Lambda=2, r=2, delta=1 -> 4.5 e^4 + 1 = 246.695...
    assert math.isclose(truncation_radius(0.5, 2.0, 1.0, 2.0),
                        4.5 * math.exp(4.0) + 1.0, rel_tol=1e-12)
    # Lambda=0 -> rho + delta
    assert truncation_radius(0.7, 5.0, 0.2, 0.0) == pytest.approx(0.9, abs=1e-15)


def test_diffusion_dvec_finite_difference():
    rng = np.random.default_rng(3)
    coeff = 0.5 * rng.standard_normal((2, 2, 2))
    model = make_model(ZeroDrift(), AffineDiffusion(base=rng.standard_normal((2, 2)),
                                                    coeff=coeff), 2, 2)
    x = np.array([0.4, -0.2])
    psi = np.array([0.8, 0.3])
    jac = diffusion_dvec(model, x, psi)
    h = 1e-6
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd = (eval_diffusion(model, x + e) @ psi - eval_diffusion(model, x - e) @ psi) / (2 * h)
        assert np.allclose(jac[:, k], fd, atol=1e-6)


def test_nu_weight_l2():
    nu = NuWeight.from_function(lambda t: t ** -0.25, 4096)
    # integral of t^(-1/2) over (0,1) = 2
    assert abs(nu.l2_norm_sq() - 2.0) < 0.05
