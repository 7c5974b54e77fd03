"""Spectral basis, semigroup action, noise space, and assumption checks."""

import math

import numpy as np
import pytest

from ldplab.models import ConstantDiffusion, DiagonalLipschitzDiffusion, ModelSpec, ZeroDrift
from ldplab.spectral import (NoiseSpace, SpectralBasis, TimeGrid, a2_log_bound,
                             check_a1_tail, check_a2_modulus, hs_norm, project_u,
                             semigroup_apply)


def test_semigroup_diagonal_closed_form():
    basis = SpectralBasis(np.array([-1.0, -4.0]))
    out = semigroup_apply(basis, 0.5, np.array([1.0, 1.0]))
    # e^{-0.5} = 0.6065306597, e^{-2} = 0.1353352832
    assert np.allclose(out, [math.exp(-0.5), math.exp(-2.0)], rtol=0, atol=1e-15)


def test_semigroup_law():
    basis = SpectralBasis(np.array([-1.0, -4.0]))
    v = np.array([1.0, 1.0])
    lhs = semigroup_apply(basis, 0.3, semigroup_apply(basis, 0.2, v))
    rhs = semigroup_apply(basis, 0.5, v)
    assert np.abs(lhs - rhs).max() <= 1e-14


def test_semigroup_identity_and_negative_time():
    basis = SpectralBasis(np.array([-2.0, 0.0, 1.5]))
    v = np.array([0.3, -1.0, 2.0])
    assert np.array_equal(semigroup_apply(basis, 0.0, v), v)
    with pytest.raises(ValueError):
        semigroup_apply(basis, -0.1, v)


def test_semigroup_bound_contractive_and_expanding():
    assert SpectralBasis(np.array([-3.0, -1.0])).semigroup_bound == 1.0
    assert SpectralBasis(np.array([2.0, -1.0])).semigroup_bound == math.exp(2.0)


def test_project_u():
    u = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(project_u(2, u), [1.0, 2.0, 0.0])
    assert np.array_equal(project_u(0, u), [0.0, 0.0, 0.0])
    assert np.array_equal(project_u(3, u), u)
    with pytest.raises(ValueError):
        project_u(4, u)


def test_noise_space_validation():
    with pytest.raises(ValueError):
        NoiseSpace(np.array([1.0, 1.0]))  # not strictly decreasing
    with pytest.raises(ValueError):
        NoiseSpace(np.array([1.0, -0.5]))
    noise = NoiseSpace(np.array([1.0, 0.5]))
    # |(2, 2)|_U1 = sqrt(1*4 + 0.25*4) = sqrt(5)
    assert math.isclose(noise.u1_norm(np.array([2.0, 2.0])), math.sqrt(5.0), rel_tol=1e-15)


def test_hs_norm():
    # sqrt(1 + 4 + 9 + 16) = sqrt(30)
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert math.isclose(hs_norm(m), math.sqrt(30.0), rel_tol=1e-15)


def test_time_grid():
    grid = TimeGrid(4)
    assert grid.dt == 0.25
    assert np.array_equal(grid.nodes, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert grid.cell_index(0.0) == 0
    assert grid.cell_index(0.26) == 1
    assert grid.cell_index(1.0) == 3


def test_a1_tail_monotone_and_vanishing():
    noise_dim = 3
    g = np.array([[1.0, 0.6, 0.3], [0.2, 0.5, 0.1]])
    model = ModelSpec(dim_h=2, dim_u=noise_dim, drift=ZeroDrift(),
                      diffusion=ConstantDiffusion(g))
    tails = [check_a1_tail(model, r=1.0, n=n) for n in range(noise_dim + 1)]
    assert all(a >= b for a, b in zip(tails, tails[1:]))
    assert tails[noise_dim] == 0.0
    # constant diffusion: the sup over the ball is the norm of the tail columns
    assert math.isclose(tails[1], hs_norm(g[:, 1:]), rel_tol=1e-12)


def test_a1_tail_state_dependent():
    model = ModelSpec(dim_h=2, dim_u=2, drift=ZeroDrift(),
                      diffusion=DiagonalLipschitzDiffusion(np.array([0.7, 0.4])))
    tails = [check_a1_tail(model, r=2.0, n=n) for n in range(3)]
    assert tails[0] >= tails[1] >= tails[2] == 0.0


def test_a2_modulus_vanishes_with_mesh():
    # three diagonal spectra of analytic type
    for ev in ([-1.0], [-5.0, -1.0], [-9.0, -4.0, -1.0]):
        basis = SpectralBasis(np.array(ev))
        moduli = [check_a2_modulus(basis, a=0.25, mesh=h) for h in (0.2, 0.1, 0.05, 0.0)]
        assert all(m1 >= m2 for m1, m2 in zip(moduli, moduli[1:]))
        assert moduli[-1] == 0.0
        assert moduli[0] <= a2_log_bound(0.25, 0.2) + 1e-12


def test_a2_log_bound_values():
    # (1/e) ln((0.25+0.25)/0.25) = ln(2)/e = 0.25499...
    assert math.isclose(a2_log_bound(0.25, 0.25), math.log(2.0) / math.e, rel_tol=1e-15)
    assert a2_log_bound(0.5, 0.0) == 0.0
