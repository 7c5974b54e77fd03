"""Monte Carlo verification of the large-deviation tube bounds and the
exponential tail estimates for stochastic integrals and convolutions.

Tube probabilities are estimated either directly or by importance sampling
under the Girsanov tilt that shifts the drift by G(.)phi; both estimators
target the same probability and the importance weights have mean one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from .models import ConstantDiffusion, Model, TruncatedDiffusion, eval_diffusion
from .reports import LDPReport, ReportRow
from .sde import solve_tilted_batch
from .skeleton import ControlPath, penalized_control_fit, solve_skeleton, wiener_rate
from .spectral import NoiseSpace, SpectralBasis, TimeGrid, hs_norm
from .wiener import WienerPath, sample_wiener_batch

CP_ALPHA = 0.05  # confidence level for the zero-hit upper bound 1 - alpha^(1/n)


@dataclass(frozen=True)
class GirsanovRecord:
    log_weight: float
    epsilon: float
    control: ControlPath


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int


def girsanov_log_weight(phi: ControlPath, eps: float, w: WienerPath) -> float:
    """Log density of the base measure with respect to the tilted one along the
    simulated path: -(1/sqrt(eps)) sum <phi_j, dW_j> - (1/(2 eps)) sum |phi_j|^2 dt."""
    if phi.grid.steps != w.grid.steps:
        raise ValueError("grid mismatch between control and Wiener path")
    dt = w.grid.dt
    inner = float(np.sum(phi.values * w.increments))
    sq = float(np.sum(phi.values ** 2)) * dt
    return -inner / math.sqrt(eps) - sq / (2.0 * eps)


def _batch_log_weights(phi: ControlPath, eps: float, dw: np.ndarray) -> np.ndarray:
    dt = phi.grid.dt
    inner = np.einsum("jk,njk->n", phi.values, dw)
    sq = float(np.sum(phi.values ** 2)) * dt
    return -inner / math.sqrt(eps) - sq / (2.0 * eps)


def estimate_tube_probability(x, phi: ControlPath, delta: float, eps: float,
                              model: Model, basis: SpectralBasis, noise: NoiseSpace,
                              n: int, seed: int, method: str = "importance") -> MCEstimate:
    """Probability that the rescaled solution stays within the delta-tube of
    the skeleton of phi.  'direct' counts plain sample paths; 'importance'
    simulates tilted paths and averages indicator * exp(log weight), an
    unbiased estimator of the same probability."""
    if n <= 0:
        raise ValueError("n must be positive")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if method not in ("direct", "importance"):
        raise ValueError(f"unknown method {method!r}")
    x = np.asarray(x, dtype=float)
    grid = phi.grid
    target = solve_skeleton(x, phi, model).values
    dw = sample_wiener_batch(grid, noise, seed, n)
    tilt = phi if method == "importance" else None
    paths = solve_tilted_batch(x, model, basis, eps, dw, phi=tilt)
    dist = np.linalg.norm(paths - target, axis=2).max(axis=1)
    inside = dist < delta
    if method == "direct":
        vals = inside.astype(float)
    else:
        vals = inside * np.exp(_batch_log_weights(phi, eps, dw))
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return MCEstimate(mean=mean, stderr=stderr, n_samples=n, seed=seed)


def verify_lower_bound(x, phi: ControlPath, delta: float, gamma: float,
                       eps_list, model: Model, basis: SpectralBasis,
                       noise: NoiseSpace, n: int, seed: int,
                       method: str = "importance") -> LDPReport:
    """Tube lower-bound rows: eps ln p_hat against -energy(phi) - gamma."""
    eps_list = list(eps_list)
    if not eps_list:
        raise ValueError("eps_list must be nonempty")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be decreasing")
    threshold = -phi.energy() - gamma
    report = LDPReport(kind="lower", seed=seed)
    for i, eps in enumerate(eps_list):
        est = estimate_tube_probability(x, phi, delta, eps, model, basis, noise,
                                        n, seed + i, method=method)
        if est.mean > 0:
            eps_log = eps * math.log(est.mean)
            zero_hit = False
            cp = math.nan
        else:
            eps_log = -math.inf
            zero_hit = True
            cp = 1.0 - CP_ALPHA ** (1.0 / n)
        report.rows.append(ReportRow(
            epsilon=eps, estimate=est.mean, stderr=est.stderr,
            eps_log_estimate=eps_log, threshold=threshold,
            passed=eps_log >= threshold, zero_hit=zero_hit, cp_upper=cp))
    return report


# ---------------------------------------------------------------------------
# level-set membership surrogate


def tube_rate(x, u, delta: float, model: Model, **fit_kwargs) -> float:
    """Minimal control energy over controls whose skeleton stays within delta
    of the target nodes (penalized-descent upper bound; 0 when the constant
    path at x is already inside the tube)."""
    x = np.asarray(x, dtype=float)
    uv = u.values if hasattr(u, "values") else np.asarray(u, dtype=float)
    grid = u.grid if hasattr(u, "grid") else TimeGrid(uv.shape[0] - 1)
    if float(np.linalg.norm(uv - x, axis=1).max()) <= delta:
        return 0.0
    gmat = _constant_diffusion_matrix(model)
    if gmat is not None and gmat.shape[0] == 1:
        return _tube_energy_taut(float(x[0]), uv[:, 0], delta,
                                 float(np.linalg.norm(gmat[0])))
    if gmat is not None:
        energies = _tube_energy_batch_constant(x, uv[None, :, :], delta, gmat, grid,
                                               **fit_kwargs)
        return float(energies[0])
    _, energy, _ = penalized_control_fit(x, uv, model, grid, delta=delta, **fit_kwargs)
    return energy


def taut_string_path(x0: float, lo: np.ndarray, hi: np.ndarray) -> Optional[np.ndarray]:
    """Shortest path through the corridor lo_j <= z_j <= hi_j with fixed left
    endpoint x0 and free right endpoint.  The taut string minimizes every
    convex function of the increments, in particular the control energy.
    Returns None when the corridor excludes the start point."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.size - 1
    if not lo[0] <= x0 <= hi[0]:
        return None
    z = np.empty(n + 1)
    z[0] = x0
    ja, a = 0, x0
    while ja < n:
        s_lo, s_hi = -math.inf, math.inf
        j_lo = j_hi = ja
        j = ja + 1
        anchored = False
        while j <= n:
            span = j - ja
            r_lo = (lo[j] - a) / span
            r_hi = (hi[j] - a) / span
            if r_lo > s_hi:
                # the lower bound at j is unreachable under the upper tangent:
                # the string hugs the upper boundary at its binding node
                for k in range(ja + 1, j_hi + 1):
                    z[k] = a + s_hi * (k - ja)
                z[j_hi] = hi[j_hi]
                ja, a = j_hi, hi[j_hi]
                anchored = True
                break
            if r_hi < s_lo:
                for k in range(ja + 1, j_lo + 1):
                    z[k] = a + s_lo * (k - ja)
                z[j_lo] = lo[j_lo]
                ja, a = j_lo, lo[j_lo]
                anchored = True
                break
            if r_lo > s_lo:
                s_lo, j_lo = r_lo, j
            if r_hi < s_hi:
                s_hi, j_hi = r_hi, j
            j += 1
        if anchored:
            continue
        # funnel stayed open to the right edge: rest as flat as the corridor
        # allows; a nonzero flattest slope pins the string to a boundary node
        if s_lo > 0.0:
            for k in range(ja + 1, j_lo + 1):
                z[k] = a + s_lo * (k - ja)
            z[j_lo] = lo[j_lo]
            ja, a = j_lo, lo[j_lo]
        elif s_hi < 0.0:
            for k in range(ja + 1, j_hi + 1):
                z[k] = a + s_hi * (k - ja)
            z[j_hi] = hi[j_hi]
            ja, a = j_hi, hi[j_hi]
        else:
            z[ja + 1:] = a
            break
    return z


def _tube_energy_taut(x0: float, u: np.ndarray, delta: float, g_eff: float) -> float:
    """Exact minimal tube energy for scalar state with constant diffusion row of
    Euclidean norm g_eff: energy of the taut string through the tube corridor."""
    n = u.size - 1
    z = taut_string_path(x0, u - delta, u + delta)
    if z is None:
        return math.inf
    dz = np.diff(z)
    return float(np.sum(dz * dz)) * n / (2.0 * g_eff * g_eff)


def _constant_diffusion_matrix(model: Model) -> Optional[np.ndarray]:
    base = model.base if isinstance(model, TruncatedDiffusion) else model
    if isinstance(base.diffusion, ConstantDiffusion):
        return base.diffusion.matrix
    return None


def _tube_energy_batch_constant(x, u_batch, delta, gmat, grid: TimeGrid,
                                kappas=(1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6),
                                iters_per_stage: int = 200, lr: float = 0.05) -> np.ndarray:
    """Vectorized tube-energy minimization for constant diffusion: the skeleton
    is linear in the control, so the forward map is a cumulative sum and the
    adjoint a reverse cumulative sum.  u_batch has shape (nb, N+1, d)."""
    nb, np1, d = u_batch.shape
    n = np1 - 1
    m = gmat.shape[1]
    dt = grid.dt
    psi = np.zeros((nb, n, m))
    mom = np.zeros_like(psi)
    vel = np.zeros_like(psi)
    b1, b2, tiny = 0.9, 0.999, 1e-12
    step_count = 0
    for kappa in kappas:
        for _ in range(iters_per_stage):
            step_count += 1
            z = np.empty((nb, np1, d))
            z[:, 0] = x
            z[:, 1:] = x + dt * np.cumsum(psi @ gmat.T, axis=1)
            dev = z - u_batch
            dist = np.linalg.norm(dev, axis=2)
            hinge = np.maximum(0.0, dist - delta)
            gpen = np.zeros_like(z)
            mask = hinge > 0
            scale = np.zeros_like(dist)
            scale[mask] = 2.0 * kappa * hinge[mask] / dist[mask]
            gpen = scale[:, :, None] * dev
            # reverse cumulative sum of gpen over nodes j+1..N
            tail = np.cumsum(gpen[:, ::-1][:, :-1], axis=1)[:, ::-1]
            grad = dt * (psi + tail @ gmat)
            mom = b1 * mom + (1 - b1) * grad
            vel = b2 * vel + (1 - b2) * grad ** 2
            mhat = mom / (1 - b1 ** step_count)
            vhat = vel / (1 - b2 ** step_count)
            psi = psi - lr * mhat / (np.sqrt(vhat) + tiny)
    return 0.5 * np.sum(psi ** 2, axis=(1, 2)) * dt


def tube_rates_batch(x, paths: np.ndarray, delta: float, model: Model,
                     grid: TimeGrid, **fit_kwargs) -> np.ndarray:
    """Tube rates for a batch of sample paths, screening out paths already
    within delta of the constant path (their rate is exactly 0)."""
    x = np.asarray(x, dtype=float)
    nb = paths.shape[0]
    rates = np.zeros(nb)
    need = np.linalg.norm(paths - x, axis=2).max(axis=1) > delta
    if not need.any():
        return rates
    gmat = _constant_diffusion_matrix(model)
    idx = np.nonzero(need)[0]
    if gmat is not None and gmat.shape[0] == 1:
        x0 = float(x[0]) if x.ndim else float(x)
        g_eff = float(np.linalg.norm(gmat[0]))
        for i in idx:
            rates[i] = _tube_energy_taut(x0, paths[i, :, 0], delta, g_eff)
    elif gmat is not None:
        rates[idx] = _tube_energy_batch_constant(x, paths[idx], delta, gmat, grid,
                                                 **fit_kwargs)
    else:
        for i in idx:
            _, energy, _ = penalized_control_fit(x, paths[i], model, grid,
                                                 delta=delta, **fit_kwargs)
            rates[i] = energy
    return rates


def verify_upper_bound(x, r: float, delta: float, gamma: float, eps_list,
                       model: Model, basis: SpectralBasis, noise: NoiseSpace,
                       n: int, seed: int, steps: Optional[int] = None,
                       **fit_kwargs) -> LDPReport:
    """Upper-bound rows: fraction of sample paths whose tube rate exceeds r,
    against the threshold -r + gamma.  Zero-hit rows pass (ln 0 = -inf) and
    carry the 1 - alpha^(1/n) confidence bound so the report stays falsifiable."""
    eps_list = list(eps_list)
    if not eps_list:
        raise ValueError("eps_list must be nonempty")
    x = np.asarray(x, dtype=float)
    grid = TimeGrid(steps) if steps is not None else TimeGrid(256)
    threshold = -r + gamma
    report = LDPReport(kind="upper", seed=seed)
    for i, eps in enumerate(eps_list):
        dw = sample_wiener_batch(grid, noise, seed + i, n)
        paths = solve_tilted_batch(x, model, basis, eps, dw, phi=None)
        rates = tube_rates_batch(x, paths, delta, model, grid, **fit_kwargs)
        outside = rates > r
        q = float(np.mean(outside))
        stderr = math.sqrt(q * (1.0 - q) / n)
        if q > 0:
            eps_log = eps * math.log(q)
            zero_hit = False
            cp = math.nan
        else:
            eps_log = -math.inf
            zero_hit = True
            cp = 1.0 - CP_ALPHA ** (1.0 / n)
        report.rows.append(ReportRow(
            epsilon=eps, estimate=q, stderr=stderr, eps_log_estimate=eps_log,
            threshold=threshold, passed=eps_log <= threshold,
            zero_hit=zero_hit, cp_upper=cp))
    return report


# ---------------------------------------------------------------------------
# exponential tail bounds


def chow_menaldi_check(xi: np.ndarray, eta1: float, delta_grid, n: int, seed: int,
                       noise: NoiseSpace) -> list[dict]:
    """Empirical sup-martingale tails against 3 exp(-delta^2 / (4 eta1)).

    xi has shape (N, d, m); the integrated squared Hilbert-Schmidt norm must
    not exceed eta1 (enforced, it is the hypothesis of the bound)."""
    xi = np.asarray(xi, dtype=float)
    steps = xi.shape[0]
    grid = TimeGrid(steps)
    total = float(np.sum(xi ** 2)) * grid.dt
    if total > eta1 * (1 + 1e-12):
        raise ValueError("integrated squared HS norm of xi exceeds eta1")
    dw = sample_wiener_batch(grid, noise, seed, n)
    incr = np.einsum("jik,njk->nji", xi, dw)
    partial = np.cumsum(incr, axis=1)
    sup = np.linalg.norm(partial, axis=2).max(axis=1)
    rows = []
    for delta in delta_grid:
        emp = float(np.mean(sup >= delta))
        stderr = math.sqrt(emp * (1.0 - emp) / n)
        bound = 3.0 * math.exp(-delta ** 2 / (4.0 * eta1))
        rows.append({"delta": float(delta), "empirical": emp, "stderr": stderr,
                     "bound": bound, "pass": emp <= bound + 4.0 * stderr})
    return rows


@dataclass(frozen=True)
class TailBoundParams:
    """Constants of the stochastic-convolution tail bound C exp(-delta^2/(kappa^2 eta))."""

    alpha0: float
    p0: float
    eta: float
    kappa: float
    n0: float = field(init=False)
    c_const: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.alpha0 < 0.5:
            raise ValueError("alpha0 must be in (0, 1/2)")
        if self.p0 <= 1:
            raise ValueError("p0 must exceed 1")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        n0 = self.p0 / (2.0 * self.p0 - 2.0) + 1.0
        # n0! for non-integer n0 read as Gamma(n0 + 1)
        c = 4.0 + math.exp(4.0 * gamma_fn(n0 + 1.0)) ** (1.0 / n0)
        object.__setattr__(self, "n0", n0)
        object.__setattr__(self, "c_const", c)

    @classmethod
    def from_basis(cls, basis: SpectralBasis, alpha0: float, p0: float,
                   eta: float) -> "TailBoundParams":
        kappa = convolution_kappa(basis, alpha0, p0)
        return cls(alpha0=alpha0, p0=p0, eta=eta, kappa=kappa)


def convolution_kappa(basis: SpectralBasis, alpha0: float, p0: float) -> float:
    """kappa = (integral_0^1 t^{(alpha0-1) p0} |S(t)|^{p0} dt)^{1/p0} with the
    exact diagonal operator norm; diverges unless (alpha0 - 1) p0 > -1."""
    exponent = (alpha0 - 1.0) * p0
    if exponent <= -1.0:
        raise ValueError("kappa integral diverges: (alpha0 - 1) p0 must exceed -1")
    val, _ = quad(lambda t: t ** exponent * basis.operator_norm(t) ** p0,
                  0.0, 1.0, points=[0.0], limit=200)
    return val ** (1.0 / p0)


def peszat_bound_eval(params: TailBoundParams, delta: float) -> float:
    """Tail bound C exp(-delta^2 / (kappa^2 eta))."""
    return params.c_const * math.exp(-delta ** 2 / (params.kappa ** 2 * params.eta))


def convolution_eta2(basis: SpectralBasis, xi_matrix: np.ndarray, alpha0: float) -> float:
    """sup over t in [0,1] of int_0^t (t-s)^{-2 alpha0} |S(t-s) xi|_HS^2 ds for a
    constant integrand, evaluated by quadrature (the sup is attained at t = 1
    for nonincreasing semigroups; a short grid scan covers the rest)."""
    xi_matrix = np.asarray(xi_matrix, dtype=float)
    ev = basis.eigenvalues[:, None]

    def integrand(u):
        mat = np.exp(ev * u) * xi_matrix
        return u ** (-2.0 * alpha0) * float(np.sum(mat ** 2))

    best = 0.0
    for t in np.linspace(0.1, 1.0, 10):
        val, _ = quad(integrand, 0.0, t, points=[0.0], limit=200)
        best = max(best, val)
    return best


def peszat_tail_check(basis: SpectralBasis, xi_matrix: np.ndarray,
                      params: TailBoundParams, delta_grid, n: int, seed: int,
                      noise: NoiseSpace, steps: int = 64) -> list[dict]:
    """Empirical stochastic-convolution sup tails against the bound of
    peszat_bound_eval, for a constant integrand xi."""
    xi_matrix = np.asarray(xi_matrix, dtype=float)
    eta_needed = convolution_eta2(basis, xi_matrix, params.alpha0)
    if eta_needed > params.eta * (1 + 1e-9):
        raise ValueError("eta does not dominate the convolution variance integral")
    grid = TimeGrid(steps)
    dw = sample_wiener_batch(grid, noise, seed, n)
    # kernels at each lag: S(l dt) xi, applied to the increments
    kernels = [np.exp(basis.eigenvalues[:, None] * (l * grid.dt)) * xi_matrix
               for l in range(steps + 1)]
    sup = np.zeros(n)
    conv = np.zeros((n, basis.dim_h))
    for j in range(1, steps + 1):
        conv = np.zeros((n, basis.dim_h))
        for i in range(j):
            conv += dw[:, i, :] @ kernels[j - i].T
        sup = np.maximum(sup, np.linalg.norm(conv, axis=1))
    rows = []
    for delta in delta_grid:
        emp = float(np.mean(sup >= delta))
        stderr = math.sqrt(emp * (1.0 - emp) / n)
        bound = peszat_bound_eval(params, float(delta))
        rows.append({"delta": float(delta), "empirical": emp, "stderr": stderr,
                     "bound": bound, "pass": emp <= bound + 4.0 * stderr})
    return rows


# ---------------------------------------------------------------------------
# Wiener-path large deviations


def wiener_ldp_check(noise: NoiseSpace, eps_list, radius_grid, n: int, seed: int,
                     steps: int = 256) -> list[dict]:
    """Rows of eps ln P(sqrt(eps) sup |W|_U1 <= b) together with the predicted
    exit rate of the complement, computed through wiener_rate on the cheapest
    straight-line path reaching the ball boundary."""
    grid = TimeGrid(steps)
    dw = sample_wiener_batch(grid, noise, seed, n)
    w = np.concatenate([np.zeros((n, 1, noise.dim_u)), np.cumsum(dw, axis=1)], axis=1)
    sup_u1 = np.sqrt(np.sum((noise.u1_weights * w) ** 2, axis=2)).max(axis=1)
    rows = []
    lam1 = noise.u1_weights[0]
    for eps in eps_list:
        for b in radius_grid:
            p = float(np.mean(math.sqrt(eps) * sup_u1 <= b))
            stderr = math.sqrt(p * (1.0 - p) / n)
            eps_log = eps * math.log(p) if p > 0 else -math.inf
            # cheapest exit path: constant push along the heaviest mode
            f = np.zeros((steps + 1, noise.dim_u))
            f[:, 0] = np.linspace(0.0, b, steps + 1)
            exit_rate = wiener_rate(f, noise)
            assert abs(exit_rate - 0.5 * (b / lam1) ** 2) < 1e-9
            rows.append({"epsilon": float(eps), "b": float(b), "estimate": p,
                         "stderr": stderr, "eps_log_estimate": eps_log,
                         "exit_rate": exit_rate})
    return rows
