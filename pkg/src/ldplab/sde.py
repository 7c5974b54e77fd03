"""Exponential Euler simulation of the rescaled and tilted stochastic equations.

One step of the scheme applies the exact semigroup factor to the whole
update: X_{j+1} = S(eps*dt) [X_j + dt*drift + sqrt(eps)*G(X_j) dW_j].
The semigroup part is exact for diagonal generators, so the only
discretization error comes from the coefficient freezing (strong order 1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import Model, eval_diffusion, eval_drift, model_dims
from .skeleton import ControlPath
from .spectral import SpectralBasis, TimeGrid, semigroup_apply
from .wiener import WienerPath, sample_wiener, stream


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float
    steps: int
    seed: int = 0
    scheme: str = "exponential-euler"

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must be in (0, 1]")
        if self.scheme != "exponential-euler":
            raise ValueError("only the exponential-euler scheme is supported")


@dataclass(frozen=True)
class Trajectory:
    """Grid-sampled H-valued path; values has shape (N+1, d)."""

    values: np.ndarray
    grid: TimeGrid

    def sup_distance(self, other: "Trajectory") -> float:
        return float(np.abs(np.linalg.norm(self.values - other.values, axis=1)).max())

    def sup_norm(self) -> float:
        return float(np.linalg.norm(self.values, axis=1).max())


def _check_dims(x, model, basis: SpectralBasis, w: WienerPath):
    d, m = model_dims(model)
    if basis.dim_h != d or x.size != d:
        raise ValueError("dimension mismatch between model and basis/initial value")
    if w.dim_u != m:
        raise ValueError("dimension mismatch between model and noise path")


def solve_tilted(x: np.ndarray, model: Model, basis: SpectralBasis,
                 phi: Optional[ControlPath], cfg: SolverConfig, w: WienerPath) -> Trajectory:
    """Exponential Euler for the tilted equation: the drift is
    F~_eps(t, x) = eps*F(eps*t, x) + G(x) phi(t).  phi = None means no tilt,
    which recovers the rescaled equation bitwise.
    """
    x = np.asarray(x, dtype=float)
    _check_dims(x, model, basis, w)
    if w.grid.steps != cfg.steps:
        raise ValueError("grid of the Wiener path does not match cfg.steps")
    if phi is not None and phi.grid.steps != cfg.steps:
        raise ValueError("control grid does not match cfg.steps")
    eps, n = cfg.epsilon, cfg.steps
    dt = w.grid.dt
    sqeps = math.sqrt(eps)
    step_factor = np.exp(basis.eigenvalues * (eps * dt))
    values = np.empty((n + 1, x.size))
    values[0] = x
    cur = x
    for j in range(n):
        t_j = j * dt
        g = eval_diffusion(model, cur)
        drift = eps * eval_drift(model, eps * t_j, cur)
        if phi is not None:
            drift = drift + g @ phi.values[j]
        cur = step_factor * (cur + dt * drift + sqeps * (g @ w.increments[j]))
        values[j + 1] = cur
    return Trajectory(values=values, grid=w.grid)


def solve_rescaled(x: np.ndarray, model: Model, basis: SpectralBasis,
                   cfg: SolverConfig, w: WienerPath) -> Trajectory:
    """Rescaled small-time equation on [0,1] (no tilt)."""
    return solve_tilted(x, model, basis, None, cfg, w)


def solve_tilted_batch(x: np.ndarray, model: Model, basis: SpectralBasis,
                       eps: float, dw: np.ndarray,
                       phi: Optional[ControlPath] = None) -> np.ndarray:
    """Vectorized version of solve_tilted over a batch of increment arrays.

    dw has shape (n_samples, N, m); the result has shape (n_samples, N+1, d).
    Batch sample i equals the single-path solution driven by dw[i].
    """
    from .models import (AffineDiffusion, AffineDrift, ConstantDiffusion,
                         DiagonalLipschitzDiffusion, TruncatedDiffusion)

    x = np.asarray(x, dtype=float)
    nb, n, m = dw.shape
    d = x.size
    dt = 1.0 / n
    sqeps = math.sqrt(eps)
    step_factor = np.exp(basis.eigenvalues * (eps * dt))

    base = model.base if isinstance(model, TruncatedDiffusion) else model
    radius = model.radius if isinstance(model, TruncatedDiffusion) else None
    diff = base.diffusion

    def g_batch(xb: np.ndarray) -> np.ndarray:
        xe = xb
        if radius is not None:
            norms = np.linalg.norm(xb, axis=1, keepdims=True)
            scale = np.minimum(1.0, radius / np.maximum(norms, 1e-300))
            xe = xb * scale
        if isinstance(diff, ConstantDiffusion):
            return np.broadcast_to(diff.matrix, (xb.shape[0], d, m))
        if isinstance(diff, DiagonalLipschitzDiffusion):
            out = np.zeros((xb.shape[0], d, m))
            k = diff.sigma.size
            out[:, np.arange(k), np.arange(k)] = diff.sigma * np.clip(xe[:, :k], -1.0, 1.0)
            return out
        if isinstance(diff, AffineDiffusion):
            return diff.base + np.einsum("ijl,nl->nij", diff.coeff, xe)
        raise TypeError(f"unknown diffusion form {diff!r}")

    values = np.empty((nb, n + 1, d))
    cur = np.broadcast_to(x, (nb, d)).copy()
    values[:, 0] = cur
    for j in range(n):
        g = g_batch(cur)
        if isinstance(base.drift, AffineDrift):
            nu = base.drift.nu.at(eps * j * dt)
            drift = eps * (nu * (base.drift.b + cur @ base.drift.B.T))
        else:
            fd = eval_drift(base, eps * j * dt, np.zeros(d))
            drift = eps * np.broadcast_to(fd, (nb, d))
        if phi is not None:
            drift = drift + np.einsum("nij,j->ni", g, phi.values[j])
        noise = np.einsum("nij,nj->ni", g, dw[:, j])
        cur = step_factor * (cur + dt * drift + sqeps * noise)
        values[:, j + 1] = cur
    return values


def solve_original_rescaled_coupling(x: np.ndarray, model: Model, basis: SpectralBasis,
                                     noise, eps: float, steps: int,
                                     seed: int) -> tuple[Trajectory, Trajectory, float]:
    """Simulate the original equation on [0, eps] and the rescaled equation on
    [0, 1] from the same underlying Brownian increments, and report their
    sup-distance at matched nodes (an algebraic identity at the discrete level).
    """
    x = np.asarray(x, dtype=float)
    grid = TimeGrid(steps)
    rng = stream(seed)
    dt = grid.dt
    # increments of W over [0, eps] with step eps*dt
    dw_orig = rng.standard_normal((steps, noise.dim_u)) * math.sqrt(eps * dt)
    sqeps = math.sqrt(eps)

    # original equation, step size eps*dt, sampled at s_j = eps*t_j
    step_factor = np.exp(basis.eigenvalues * (eps * dt))
    vals = np.empty((steps + 1, x.size))
    vals[0] = x
    cur = x
    for j in range(steps):
        s_j = eps * j * dt
        g = eval_diffusion(model, cur)
        cur = step_factor * (cur + eps * dt * eval_drift(model, s_j, cur) + g @ dw_orig[j])
        vals[j + 1] = cur
    original = Trajectory(values=vals, grid=grid)

    # rescaled equation driven by dV = dW / sqrt(eps)
    w_resc = WienerPath(increments=dw_orig / sqeps, grid=grid, seed=seed)
    cfg = SolverConfig(epsilon=eps, steps=steps, seed=seed)
    rescaled = solve_rescaled(x, model, basis, cfg, w_resc)
    return original, rescaled, original.sup_distance(rescaled)


def dyadic_freeze_error(traj: Trajectory, basis: SpectralBasis, eps: float, n: int) -> float:
    """Sup over grid nodes of |X(t) - S(eps (t - pi_n(t))) X(pi_n(t))| where
    pi_n is the left endpoint of the level-n dyadic cell containing t."""
    steps = traj.grid.steps
    block = steps // (2 ** n)
    if block * 2 ** n != steps:
        raise ValueError("2^n must divide the number of grid steps")
    worst = 0.0
    dt = traj.grid.dt
    for j in range(steps + 1):
        anchor = 0 if j == 0 else ((j - 1) // block) * block
        propagated = semigroup_apply(basis, eps * (j - anchor) * dt, traj.values[anchor])
        worst = max(worst, float(np.linalg.norm(traj.values[j] - propagated)))
    return worst


def ito_shift_identity_check(Phi: np.ndarray, phi: ControlPath, eps: float,
                             w: WienerPath) -> float:
    """Discrete Ito shift identity: integrating against the shifted increments
    dW - phi dt / sqrt(eps) equals the unshifted integral minus the Riemann
    correction.  Returns the sup-norm of the difference (pure reassociation).
    """
    Phi = np.asarray(Phi, dtype=float)
    if Phi.shape[0] != w.grid.steps or phi.grid.steps != w.grid.steps:
        raise ValueError("grid mismatch between Phi, phi and w")
    dt = w.grid.dt
    shifted = w.increments - phi.values * (dt / math.sqrt(eps))
    lhs = np.einsum("jik,jk->i", Phi, shifted)
    rhs = (np.einsum("jik,jk->i", Phi, w.increments)
           - np.einsum("jik,jk->i", Phi, phi.values) * (dt / math.sqrt(eps)))
    return float(np.abs(lhs - rhs).max())


def constant_block_integral(Phi: np.ndarray, w: WienerPath, c_idx: int, d_idx: int) -> float:
    """Identity for a constant integrand over a grid interval: the discrete
    integral of Phi over (t_c, t_d] equals Phi (W(t_d) - W(t_c)) exactly.
    Returns the sup-norm difference of the two evaluations."""
    Phi = np.asarray(Phi, dtype=float)
    cum = w.cumulative()
    telescoped = Phi @ (cum[d_idx] - cum[c_idx])
    summed = np.einsum("ik,jk->i", Phi, w.increments[c_idx:d_idx])
    return float(np.abs(summed - telescoped).max())
