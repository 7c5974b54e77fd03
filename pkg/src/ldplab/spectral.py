"""Finite spectral representation of the state space, noise space and semigroup.

The linear generator is diagonal in the chosen basis, so the semigroup
S(t) = e^{At} is exact: component k is multiplied by exp(a_k * t).  All
values here are plain numpy arrays; operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SpectralBasis:
    """Diagonal generator with eigenvalues ``eigenvalues`` on a d-dimensional space."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.ndim != 1 or ev.size == 0:
            raise ValueError("eigenvalues must be a non-empty 1-d array")
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def dim_h(self) -> int:
        return self.eigenvalues.size

    @property
    def semigroup_bound(self) -> float:
        """M = sup over t in [0,1] of the operator norm of S(t) (exact for diagonal A)."""
        return float(max(1.0, np.exp(self.eigenvalues).max()))

    def operator_norm(self, t: float) -> float:
        return float(np.exp(self.eigenvalues * t).max())


@dataclass(frozen=True)
class NoiseSpace:
    """m noise modes with strictly decreasing embedding weights lambda_k."""

    u1_weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.u1_weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("u1_weights must be a non-empty 1-d array")
        if np.any(w <= 0):
            raise ValueError("u1_weights must be positive")
        if w.size > 1 and np.any(np.diff(w) >= 0):
            raise ValueError("u1_weights must be strictly decreasing")
        object.__setattr__(self, "u1_weights", w)

    @property
    def dim_u(self) -> int:
        return self.u1_weights.size

    def u1_norm(self, u: np.ndarray) -> float:
        """Norm of a U-vector viewed in the larger embedding space."""
        u = np.asarray(u, dtype=float)
        return float(np.sqrt(np.sum(self.u1_weights ** 2 * u ** 2)))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_N = 1."""

    steps: int
    nodes: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.steps <= 0:
            raise ValueError("steps must be positive")
        object.__setattr__(self, "nodes", np.linspace(0.0, 1.0, self.steps + 1))

    @property
    def dt(self) -> float:
        return 1.0 / self.steps

    def cell_index(self, t: float) -> int:
        """Index of the grid cell containing t (t=1 maps to the last cell)."""
        return min(int(t * self.steps), self.steps - 1)


def semigroup_apply(basis: SpectralBasis, t: float, v: np.ndarray) -> np.ndarray:
    """Apply S(t) = e^{At} to v, componentwise exp(a_k t) v_k."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.exp(basis.eigenvalues * t) * v


def project_u(n: int, u: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the first n noise modes (rest zeroed)."""
    u = np.asarray(u, dtype=float)
    if not 0 <= n <= u.size:
        raise ValueError(f"n must be in [0, {u.size}], got {n}")
    out = np.zeros_like(u)
    out[:n] = u[:n]
    return out


def hs_norm(op_matrix: np.ndarray) -> float:
    """Hilbert-Schmidt (Frobenius) norm of a d x m matrix."""
    return float(np.linalg.norm(np.asarray(op_matrix, dtype=float)))


def _ball_samples(dim: int, radius: float, n_samples: int, seed: int) -> np.ndarray:
    """Deterministic sample of the closed ball: sphere points plus interior points."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n_sphere = max(1, n_samples // 2)
    dirs = rng.standard_normal((n_samples, dim))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    dirs /= norms
    radii = np.full(n_samples, radius)
    interior = rng.random(n_samples - n_sphere) ** (1.0 / dim) * radius
    radii[n_sphere:] = interior
    return dirs * radii[:, None]


def check_a1_tail(model, r: float, n: int, n_samples: int = 200, seed: int = 0) -> float:
    """Empirical sup over the r-ball of the Hilbert-Schmidt norm of G(h) restricted
    to the noise modes beyond n.

    Deterministic given the seed.  Nonincreasing in n; exactly 0 at n = dim_u.
    """
    from .models import eval_diffusion, model_dims

    if r <= 0:
        raise ValueError("r must be positive")
    dim_h, dim_u = model_dims(model)
    if not 0 <= n <= dim_u:
        raise ValueError(f"n must be in [0, {dim_u}]")
    worst = 0.0
    for h in _ball_samples(dim_h, r, n_samples, seed):
        g = eval_diffusion(model, h)
        worst = max(worst, hs_norm(g[:, n:]))
    return worst


def check_a2_modulus(basis: SpectralBasis, a: float, mesh: float,
                     n_eps: int = 16, n_time: int = 64) -> float:
    """Empirical modulus of norm-continuity of the rescaled semigroup family.

    Sup over eps in a geometric grid of (0,1] and pairs t, r in [a,1] with
    |t - r| <= mesh of max_k |exp(a_k eps t) - exp(a_k eps r)|.
    """
    if not 0 < a <= 1:
        raise ValueError("a must be in (0, 1]")
    if mesh < 0:
        raise ValueError("mesh must be nonnegative")
    if mesh == 0:
        return 0.0
    eps_grid = np.geomspace(1.0 / 2 ** (n_eps - 1), 1.0, n_eps)
    times = np.linspace(a, 1.0, n_time)
    ev = basis.eigenvalues[:, None, None]
    worst = 0.0
    for eps in eps_grid:
        # all pairs within the mesh window
        tt = times[None, :, None]
        rr = times[None, None, :]
        mask = np.abs(tt - rr) <= mesh + 1e-15
        diff = np.abs(np.exp(ev * eps * tt) - np.exp(ev * eps * rr))
        diff = diff.max(axis=0)
        worst = max(worst, float(diff[mask[0]].max()))
    return worst


def a2_log_bound(a: float, mesh: float) -> float:
    """Analytic-semigroup bound (1/e) ln((a+mesh)/a) dominating the A2 modulus
    for any diagonal nonpositive spectrum."""
    if mesh == 0:
        return 0.0
    return math.log((a + mesh) / a) / math.e
