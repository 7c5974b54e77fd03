"""Brownian increment generation with reproducible per-sample streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import NoiseSpace, TimeGrid


@dataclass(frozen=True)
class WienerPath:
    """Matrix of Brownian increments: entry (j, k) is beta_k(t_{j+1}) - beta_k(t_j)."""

    increments: np.ndarray  # N x m
    grid: TimeGrid
    seed: int

    @property
    def dim_u(self) -> int:
        return self.increments.shape[1]

    def cumulative(self) -> np.ndarray:
        """W(t_j) at all N+1 grid nodes, W(0) = 0; shape (N+1, m)."""
        n, m = self.increments.shape
        out = np.zeros((n + 1, m))
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based derived stream: sample `index` of master seed `seed`.

    Independent of worker count and evaluation order.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample_wiener(grid: TimeGrid, noise: NoiseSpace, seed: int, index: int = 0) -> WienerPath:
    """Gaussian increments with variance dt per mode, deterministic given seed."""
    rng = stream(seed, index)
    inc = rng.standard_normal((grid.steps, noise.dim_u)) * np.sqrt(grid.dt)
    return WienerPath(increments=inc, grid=grid, seed=seed)


def sample_wiener_batch(grid: TimeGrid, noise: NoiseSpace, seed: int, n: int,
                        offset: int = 0) -> np.ndarray:
    """Increments for n independent sample paths, shape (n, N, m).

    Sample i uses the derived stream (seed, offset + i), identical to
    ``sample_wiener(grid, noise, seed, offset + i)``.
    """
    sqdt = np.sqrt(grid.dt)
    out = np.empty((n, grid.steps, noise.dim_u))
    for i in range(n):
        out[i] = stream(seed, offset + i).standard_normal((grid.steps, noise.dim_u)) * sqdt
    return out


def refine_wiener(path: WienerPath, seed: int | None = None) -> WienerPath:
    """Split each increment into two conditioned Gaussians that sum to it.

    The refined path is a Brownian path on the doubled grid whose restriction
    to the coarse grid coincides with the parent (midpoint bridging).
    """
    n, m = path.increments.shape
    # refinement streams live far away from the per-sample stream indices
    rng = stream(path.seed if seed is None else seed, index=2 ** 20 + n)
    half_var = path.grid.dt / 4.0
    xi = rng.standard_normal((n, m)) * np.sqrt(half_var)
    first = path.increments / 2.0 + xi
    second = path.increments / 2.0 - xi
    inc = np.empty((2 * n, m))
    inc[0::2] = first
    inc[1::2] = second
    return WienerPath(increments=inc, grid=TimeGrid(2 * n), seed=path.seed)
