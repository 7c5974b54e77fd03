"""Registry of drift/diffusion coefficient pairs with exact Lipschitz data.

Coefficient forms are a closed tagged set so that every model carries an
exact Lipschitz constant and time weight, instead of estimated ones.  The
radial truncation of the diffusion (freezing it outside a ball) preserves
the Lipschitz constant because the radial retraction onto the ball is the
metric projection onto a convex set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .spectral import TimeGrid, hs_norm


def _ulp_up(x: float, n: int = 4) -> float:
    for _ in range(n):
        x = float(np.nextafter(x, np.inf))
    return x


@dataclass(frozen=True)
class NuWeight:
    """Piecewise-constant time weight on the unit grid (midpoint tabulation)."""

    values: np.ndarray  # length N, value on cell j

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, c: float) -> "NuWeight":
        return cls(np.array([float(c)]))

    @classmethod
    def from_function(cls, f, steps: int) -> "NuWeight":
        mids = (np.arange(steps) + 0.5) / steps
        return cls(np.array([f(t) for t in mids], dtype=float))

    def at(self, t: float) -> float:
        n = self.values.size
        j = min(int(t * n), n - 1)
        return float(self.values[j])

    def l2_norm_sq(self) -> float:
        return float(np.mean(self.values ** 2))


# ---------------------------------------------------------------------------
# drift forms


@dataclass(frozen=True)
class ZeroDrift:
    form = "zero"


@dataclass(frozen=True)
class AffineDrift:
    """F(t, x) = nu(t) (b + B x) with operator norm of B at most 1."""

    nu: NuWeight
    b: np.ndarray
    B: np.ndarray

    form = "affine"

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        B = np.asarray(self.B, dtype=float)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "B", B)
        if B.shape != (b.size, b.size):
            raise ValueError("B must be square with the dimension of b")
        if b.size > 0 and np.linalg.norm(B, 2) > 1 + 1e-12:
            raise ValueError("operator norm of B must not exceed 1")
        if np.linalg.norm(b) > 1 + 1e-12:
            # keeps the growth bound |F(t,x)| <= nu(t)(1+|x|) exact
            raise ValueError("norm of b must not exceed 1")


@dataclass(frozen=True)
class TableDrift:
    """State-independent drift tabulated per grid cell: F(t, x) = values[cell(t)]."""

    values: np.ndarray  # shape (N, d)

    form = "table"

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", v)


DriftSpec = Union[ZeroDrift, AffineDrift, TableDrift]


# ---------------------------------------------------------------------------
# diffusion forms


@dataclass(frozen=True)
class ConstantDiffusion:
    matrix: np.ndarray  # d x m

    form = "constant"

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        object.__setattr__(self, "matrix", m)

    @property
    def lipschitz(self) -> float:
        return _ulp_up(hs_norm(self.matrix))

    @property
    def gamma(self) -> Optional[float]:
        return hs_norm(self.matrix)


def _clamp(x):
    return np.clip(x, -1.0, 1.0)


@dataclass(frozen=True)
class DiagonalLipschitzDiffusion:
    """Column k equals sigma_k * clamp(x_k, -1, 1) * e_k (bounded, 1-Lipschitz factor)."""

    sigma: np.ndarray

    form = "diagonal-lipschitz"

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        object.__setattr__(self, "sigma", s)

    @property
    def lipschitz(self) -> float:
        return _ulp_up(float(np.abs(self.sigma).max()))

    @property
    def gamma(self) -> Optional[float]:
        return float(np.linalg.norm(self.sigma))


@dataclass(frozen=True)
class AffineDiffusion:
    """G(x) = base + coeff . x, entrywise G_ij(x) = base_ij + sum_l coeff_ijl x_l."""

    base: np.ndarray   # d x m
    coeff: np.ndarray  # d x m x d

    form = "affine"

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.base, dtype=float))
        k = np.asarray(self.coeff, dtype=float)
        if k.shape != (*b.shape, b.shape[0]):
            raise ValueError("coeff must have shape (d, m, d)")
        object.__setattr__(self, "base", b)
        object.__setattr__(self, "coeff", k)

    @property
    def lipschitz(self) -> float:
        d, m, _ = self.coeff.shape
        lip = float(np.linalg.norm(self.coeff.reshape(d * m, d), 2))
        return _ulp_up(max(lip, hs_norm(self.base)))

    @property
    def gamma(self) -> Optional[float]:
        return None  # unbounded


DiffusionSpec = Union[ConstantDiffusion, DiagonalLipschitzDiffusion, AffineDiffusion]


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class ModelSpec:
    dim_h: int
    dim_u: int
    drift: DriftSpec
    diffusion: DiffusionSpec

    def __post_init__(self):
        d, m = self.dim_h, self.dim_u
        if isinstance(self.diffusion, ConstantDiffusion):
            if self.diffusion.matrix.shape != (d, m):
                raise ValueError("diffusion matrix must be dim_h x dim_u")
        elif isinstance(self.diffusion, DiagonalLipschitzDiffusion):
            if self.diffusion.sigma.size != min(d, m):
                raise ValueError("sigma must have min(dim_h, dim_u) entries")
        elif isinstance(self.diffusion, AffineDiffusion):
            if self.diffusion.base.shape != (d, m):
                raise ValueError("diffusion base must be dim_h x dim_u")
        if isinstance(self.drift, AffineDrift) and self.drift.b.size != d:
            raise ValueError("drift vector must have dimension dim_h")
        if isinstance(self.drift, TableDrift) and self.drift.values.shape[1] != d:
            raise ValueError("drift table rows must have dimension dim_h")

    @property
    def lambda_lip(self) -> float:
        return self.diffusion.lipschitz

    @property
    def gamma_bound(self) -> Optional[float]:
        return self.diffusion.gamma

    def nu_at(self, t: float) -> float:
        if isinstance(self.drift, AffineDrift):
            return self.drift.nu.at(t)
        if isinstance(self.drift, TableDrift):
            n = self.drift.values.shape[0]
            j = min(int(t * n), n - 1)
            return float(np.linalg.norm(self.drift.values[j]))
        return 0.0


@dataclass(frozen=True)
class TruncatedDiffusion:
    """Model whose diffusion is radially frozen outside the ball of radius R."""

    base: ModelSpec
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def dim_h(self) -> int:
        return self.base.dim_h

    @property
    def dim_u(self) -> int:
        return self.base.dim_u

    @property
    def drift(self):
        return self.base.drift

    @property
    def lambda_lip(self) -> float:
        return self.base.lambda_lip

    @property
    def gamma_bound(self) -> float:
        return self.base.lambda_lip * (1.0 + self.radius)

    def nu_at(self, t: float) -> float:
        return self.base.nu_at(t)


Model = Union[ModelSpec, TruncatedDiffusion]


def model_dims(model: Model) -> tuple[int, int]:
    return model.dim_h, model.dim_u


def eval_drift(model: Model, t: float, x: np.ndarray) -> np.ndarray:
    """Drift F(t, x) under the model's tagged form."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    x = np.asarray(x, dtype=float)
    drift = model.drift
    if isinstance(drift, ZeroDrift):
        return np.zeros(model.dim_h)
    if isinstance(drift, AffineDrift):
        return drift.nu.at(t) * (drift.b + drift.B @ x)
    if isinstance(drift, TableDrift):
        n = drift.values.shape[0]
        j = min(int(t * n), n - 1)
        return drift.values[j].copy()
    raise TypeError(f"unknown drift form {drift!r}")


def eval_diffusion(model: Model, x: np.ndarray) -> np.ndarray:
    """Diffusion matrix G(x) (d x m) under the model's tagged form."""
    x = np.asarray(x, dtype=float)
    if isinstance(model, TruncatedDiffusion):
        norm = np.linalg.norm(x)
        if norm > model.radius:
            x = (model.radius / norm) * x
        return eval_diffusion(model.base, x)
    d, m = model.dim_h, model.dim_u
    diff = model.diffusion
    if isinstance(diff, ConstantDiffusion):
        return diff.matrix.copy()
    if isinstance(diff, DiagonalLipschitzDiffusion):
        g = np.zeros((d, m))
        k = min(d, m)
        g[np.arange(k), np.arange(k)] = diff.sigma * _clamp(x[:k])
        return g
    if isinstance(diff, AffineDiffusion):
        return diff.base + diff.coeff @ x
    raise TypeError(f"unknown diffusion form {diff!r}")


def diffusion_dvec(model: Model, x: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Jacobian of x -> G(x) psi, a d x d matrix (used by the adjoint solver).

    For a truncated model this is the Jacobian of the composed map; outside
    the ball the retraction Jacobian is included.
    """
    x = np.asarray(x, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if isinstance(model, TruncatedDiffusion):
        norm = np.linalg.norm(x)
        if norm <= model.radius:
            return diffusion_dvec(model.base, x, psi)
        y = (model.radius / norm) * x
        inner = diffusion_dvec(model.base, y, psi)
        # Jacobian of the radial retraction x -> (R/|x|) x
        d = x.size
        retr = (model.radius / norm) * (np.eye(d) - np.outer(x, x) / norm ** 2)
        return inner @ retr
    d = model.dim_h
    diff = model.diffusion
    if isinstance(diff, ConstantDiffusion):
        return np.zeros((d, d))
    if isinstance(diff, DiagonalLipschitzDiffusion):
        k = diff.sigma.size
        jac = np.zeros((d, d))
        active = np.abs(x[:k]) < 1.0
        idx = np.arange(k)[active]
        jac[idx, idx] = diff.sigma[active] * psi[idx]
        return jac
    if isinstance(diff, AffineDiffusion):
        return np.einsum("ijl,j->il", diff.coeff, psi)
    raise TypeError(f"unknown diffusion form {diff!r}")


def truncate_diffusion(model: ModelSpec, R: float) -> TruncatedDiffusion:
    """Radially freeze the diffusion outside the ball of radius R."""
    if R <= 0:
        raise ValueError("R must be positive")
    return TruncatedDiffusion(base=model, radius=R)


def truncation_radius(rho: float, r: float, delta: float, lambda_lip: float) -> float:
    """Localization radius (rho + L sqrt(2r)) exp(L sqrt(2r)) + delta."""
    if rho <= 0 or r <= 0 or delta <= 0:
        raise ValueError("rho, r and delta must be positive")
    if lambda_lip < 0:
        raise ValueError("lambda_lip must be nonnegative")
    s = lambda_lip * math.sqrt(2.0 * r)
    return (rho + s) * math.exp(s) + delta
