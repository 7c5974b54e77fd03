"""Controlled skeleton equation, control-energy functional and its minimizers.

The skeleton is the noiseless controlled flow dz = G(z) phi dt; the rate of a
target path is the minimal control energy reproducing it.  The infimum is
approximated from above: direct per-cell least squares when the diffusion has
full row rank along the path, otherwise a penalized adjoint-gradient descent.
Values are always certified by reproducing the path and reporting the
sup-distance residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import (ConstantDiffusion, Model, TruncatedDiffusion,
                     diffusion_dvec, eval_diffusion)
from .spectral import TimeGrid


@dataclass(frozen=True)
class ControlPath:
    """Piecewise-constant U-valued control on grid cells; values has shape (N, m)."""

    values: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.steps:
            raise ValueError("control must have one value per grid cell")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value, grid: TimeGrid) -> "ControlPath":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(np.tile(value, (grid.steps, 1)), grid)

    @classmethod
    def zero(cls, dim_u: int, grid: TimeGrid) -> "ControlPath":
        return cls(np.zeros((grid.steps, dim_u)), grid)

    def energy(self) -> float:
        """(1/2) sum |psi_j|^2 dt."""
        return 0.5 * float(np.sum(self.values ** 2)) * self.grid.dt

    def l2_norm(self) -> float:
        return math.sqrt(2.0 * self.energy())


@dataclass(frozen=True)
class RateResult:
    value: float                      # math.inf when unreachable
    control: Optional[ControlPath]
    residual: float


def solve_skeleton(x: np.ndarray, phi: ControlPath, model: Model):
    """Explicit Euler for dz = G(z) phi dt; contains neither the generator nor
    the drift by construction."""
    from .sde import Trajectory

    x = np.asarray(x, dtype=float)
    n = phi.grid.steps
    dt = phi.grid.dt
    values = np.empty((n + 1, x.size))
    values[0] = x
    cur = x
    for j in range(n):
        cur = cur + (eval_diffusion(model, cur) @ phi.values[j]) * dt
        values[j + 1] = cur
    return Trajectory(values=values, grid=phi.grid)


def solve_skeleton_picard(x: np.ndarray, phi: ControlPath, model: Model,
                          tol: float = 1e-14, max_iter: int = 10000):
    """Picard-iteration backend for cross-validation: iterate the discrete
    integral map to its fixed point (identical to the Euler solution)."""
    from .sde import Trajectory

    x = np.asarray(x, dtype=float)
    n, dt = phi.grid.steps, phi.grid.dt
    z = np.tile(x, (n + 1, 1))
    for _ in range(max_iter):
        incr = np.array([eval_diffusion(model, z[j]) @ phi.values[j] for j in range(n)]) * dt
        new = np.vstack([x, x + np.cumsum(incr, axis=0)])
        if np.abs(new - z).max() <= tol:
            z = new
            break
        z = new
    return Trajectory(values=z, grid=phi.grid)


def _constant_matrix(model: Model) -> Optional[np.ndarray]:
    base = model.base if isinstance(model, TruncatedDiffusion) else model
    if isinstance(base.diffusion, ConstantDiffusion):
        return base.diffusion.matrix
    return None


def _adjoint_gradient(x, u, psi, model, dt, delta, kappa):
    """Objective and gradient of energy + kappa * sum_j hinge(|z_j - u_j| - delta)^2."""
    n = psi.shape[0]
    d = x.size
    z = np.empty((n + 1, d))
    z[0] = x
    gmats = []
    for j in range(n):
        g = eval_diffusion(model, z[j])
        gmats.append(g)
        z[j + 1] = z[j] + (g @ psi[j]) * dt
    dev = z - u
    dist = np.linalg.norm(dev, axis=1)
    hinge = np.maximum(0.0, dist - delta)
    pen = kappa * float(np.sum(hinge ** 2))
    obj = 0.5 * float(np.sum(psi ** 2)) * dt + pen
    # dPen/dz_j
    gpen = np.zeros_like(z)
    active = hinge > 0
    gpen[active] = (2.0 * kappa * hinge[active] / dist[active])[:, None] * dev[active]
    grad = np.empty_like(psi)
    lam = gpen[n].copy()
    for j in range(n - 1, -1, -1):
        grad[j] = dt * (psi[j] + gmats[j].T @ lam)
        lam = gpen[j] + lam + dt * (diffusion_dvec(model, z[j], psi[j]).T @ lam)
    violation = float(hinge.max()) if n >= 0 else 0.0
    return obj, grad, z, violation


def _adam(psi0, grad_fn, iters: int, lr: float):
    psi = psi0.copy()
    m = np.zeros_like(psi)
    v = np.zeros_like(psi)
    b1, b2, eps = 0.9, 0.999, 1e-12
    out = None
    for k in range(1, iters + 1):
        obj, grad, z, violation = grad_fn(psi)
        out = (obj, z, violation)
        m = b1 * m + (1 - b1) * grad
        v = b2 * v + (1 - b2) * grad ** 2
        mhat = m / (1 - b1 ** k)
        vhat = v / (1 - b2 ** k)
        psi = psi - lr * mhat / (np.sqrt(vhat) + eps)
    return psi, out


def penalized_control_fit(x, u, model, grid: TimeGrid, delta: float = 0.0,
                          psi0: Optional[np.ndarray] = None,
                          kappas=(1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6),
                          iters_per_stage: int = 200, lr: float = 0.05):
    """Penalized minimization of control energy subject to the skeleton staying
    within delta of the target nodes (delta = 0: exact reproduction).

    Returns (psi, energy, violation): violation is the worst tube exceedance.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n = grid.steps
    m = model.dim_u
    psi = np.zeros((n, m)) if psi0 is None else psi0.copy()
    dt = grid.dt
    for kappa in kappas:
        psi, _ = _adam(psi, lambda p: _adjoint_gradient(x, u, p, model, dt, delta, kappa),
                       iters_per_stage, lr)
    _, _, z, violation = _adjoint_gradient(x, u, psi, model, dt, delta, kappas[-1])
    energy = 0.5 * float(np.sum(psi ** 2)) * dt
    return psi, energy, violation


def rate_of_target(x, u, model, tol: float = 1e-6) -> RateResult:
    """Upper bound on the minimal control energy reproducing the target path.

    Stage one recovers the control cell by cell through the pseudo-inverse of
    the diffusion along the target (the minimum-norm, hence minimum-energy,
    per-cell choice); stage two refines by penalized descent when the direct
    recovery leaves a residual.
    """
    x = np.asarray(x, dtype=float)
    uv = u.values if hasattr(u, "values") else np.asarray(u, dtype=float)
    grid = u.grid if hasattr(u, "grid") else TimeGrid(uv.shape[0] - 1)
    n, dt = grid.steps, grid.dt

    start_gap = float(np.linalg.norm(uv[0] - x))
    if start_gap > tol:
        return RateResult(value=math.inf, control=None, residual=start_gap)

    # stage one: per-cell least squares through the pseudo-inverse
    psi = np.empty((n, model.dim_u))
    for j in range(n):
        g = eval_diffusion(model, uv[j])
        target = (uv[j + 1] - uv[j]) / dt
        psi[j] = np.linalg.pinv(g) @ target
    phi = ControlPath(psi, grid)
    z = solve_skeleton(x, phi, model)
    residual = float(np.linalg.norm(z.values - uv, axis=1).max())
    if residual <= tol:
        return RateResult(value=phi.energy(), control=phi, residual=residual)

    # stage two: penalized refinement
    psi2, energy, _ = penalized_control_fit(x, uv, model, grid, delta=0.0, psi0=psi)
    phi2 = ControlPath(psi2, grid)
    z2 = solve_skeleton(x, phi2, model)
    residual2 = float(np.linalg.norm(z2.values - uv, axis=1).max())
    if residual2 <= tol:
        return RateResult(value=phi2.energy(), control=phi2, residual=residual2)
    return RateResult(value=math.inf, control=phi2, residual=min(residual, residual2))


def skeleton_continuity_bound(x1, x2, phi1: ControlPath, phi2: ControlPath,
                              model: Model) -> tuple[float, float]:
    """Gronwall continuity of the skeleton in (initial value, control):
    left side is the sup-distance of the two skeletons; right side is the
    driver size amplified by exp(Lambda q) with q the larger control L2 norm.
    """
    z1 = solve_skeleton(np.asarray(x1, float), phi1, model)
    z2 = solve_skeleton(np.asarray(x2, float), phi2, model)
    lhs = z1.sup_distance(z2)
    dt = phi1.grid.dt
    driver_terms = np.array([
        eval_diffusion(model, z1.values[j]) @ (phi1.values[j] - phi2.values[j]) * dt
        for j in range(phi1.grid.steps)
    ])
    partial = np.vstack([np.zeros(z1.values.shape[1]), np.cumsum(driver_terms, axis=0)])
    driver = float(np.linalg.norm(partial, axis=1).max())
    q = max(phi1.l2_norm(), phi2.l2_norm())
    rhs = (float(np.linalg.norm(np.asarray(x1, float) - np.asarray(x2, float))) + driver) \
        * math.exp(model.lambda_lip * q)
    return lhs, rhs


def skeleton_apriori_bound(x, phi: ControlPath, model: Model) -> tuple[float, float]:
    """Sup of the skeleton against the level-set a-priori bound
    (|x| + Lambda sqrt(2r)) exp(Lambda sqrt(2r)) with r the control energy."""
    x = np.asarray(x, dtype=float)
    z = solve_skeleton(x, phi, model)
    q = phi.l2_norm()
    bound = (float(np.linalg.norm(x)) + model.lambda_lip * q) * math.exp(model.lambda_lip * q)
    return z.sup_norm(), bound


def u1_path_from_control(phi: ControlPath, noise) -> np.ndarray:
    """Embed the integrated control into the larger noise space, sampled at the
    grid nodes in that space's orthonormal coordinates; starts at 0."""
    lam = noise.u1_weights
    incr = phi.values * lam * phi.grid.dt
    out = np.zeros((phi.grid.steps + 1, noise.dim_u))
    np.cumsum(incr, axis=0, out=out[1:])
    return out


def wiener_rate(f: np.ndarray, noise) -> float:
    """Energy of the noise path f (sampled in the embedding space's orthonormal
    coordinates, f(0) = 0): recover the control by differencing and pulling
    back through the embedding weights, then take half its squared L2 norm."""
    f = np.asarray(f, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    if np.linalg.norm(f[0]) != 0.0:
        raise ValueError("path must start at 0")
    n = f.shape[0] - 1
    dt = 1.0 / n
    psi = np.diff(f, axis=0) / dt / noise.u1_weights
    return 0.5 * float(np.sum(psi ** 2)) * dt
