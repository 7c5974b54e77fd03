"""Flat dotted-key run configuration.

One `key = value` pair per line, values in JSON syntax (bare words are kept
as strings), `#` starts a comment.  CLI overrides use the same dotted keys.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .models import (AffineDiffusion, AffineDrift, ConstantDiffusion,
                     DiagonalLipschitzDiffusion, ModelSpec, NuWeight,
                     TableDrift, ZeroDrift, truncate_diffusion)
from .skeleton import ControlPath
from .spectral import NoiseSpace, SpectralBasis, TimeGrid


class ConfigParseError(Exception):
    """Config file missing or syntactically broken (exit code 2)."""


class ConfigValidationError(Exception):
    """Config parsed but a field has an invalid value (exit code 3)."""


def parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigParseError(f"config file not found: {path}")
    cfg = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        cfg[key.strip()] = parse_value(value)
    return cfg


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    out = dict(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigParseError(f"override must be key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = parse_value(value)
    return out


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigValidationError(f"{key}: missing required field")
    return cfg[key]


def _positive(cfg: dict, key: str, value):
    if not isinstance(value, (int, float)) or value <= 0:
        raise ConfigValidationError(f"{key}: must be a positive number, got {value!r}")
    return float(value)


def build_basis(cfg: dict) -> SpectralBasis:
    ev = _require(cfg, "basis.eigenvalues")
    try:
        return SpectralBasis(np.asarray(ev, dtype=float))
    except (ValueError, TypeError) as exc:
        raise ConfigValidationError(f"basis.eigenvalues: {exc}") from exc


def build_noise(cfg: dict) -> NoiseSpace:
    w = _require(cfg, "noise.weights")
    try:
        return NoiseSpace(np.asarray(w, dtype=float))
    except (ValueError, TypeError) as exc:
        raise ConfigValidationError(f"noise.weights: {exc}") from exc


def build_grid(cfg: dict) -> TimeGrid:
    steps = cfg.get("grid.steps", 256)
    if not isinstance(steps, int) or steps <= 0:
        raise ConfigValidationError(f"grid.steps: must be a positive integer, got {steps!r}")
    return TimeGrid(steps)


def build_model(cfg: dict, basis: SpectralBasis, noise: NoiseSpace):
    d, m = basis.dim_h, noise.dim_u
    form = cfg.get("model.drift.form", "zero")
    try:
        if form == "zero":
            drift = ZeroDrift()
        elif form == "affine":
            nu_raw = cfg.get("model.drift.nu", 1.0)
            nu = (NuWeight.constant(nu_raw) if isinstance(nu_raw, (int, float))
                  else NuWeight(np.asarray(nu_raw, dtype=float)))
            b = np.asarray(cfg.get("model.drift.b", np.zeros(d)), dtype=float)
            B = np.asarray(cfg.get("model.drift.B", np.zeros((d, d))), dtype=float)
            drift = AffineDrift(nu=nu, b=b, B=B)
        elif form == "table":
            drift = TableDrift(np.asarray(_require(cfg, "model.drift.table"), dtype=float))
        else:
            raise ConfigValidationError(f"model.drift.form: unknown form {form!r}")

        dform = cfg.get("model.diffusion.form", "constant")
        if dform == "constant":
            mat = np.asarray(_require(cfg, "model.diffusion.matrix"), dtype=float)
            diffusion = ConstantDiffusion(mat)
        elif dform == "diagonal-lipschitz":
            sig = np.asarray(_require(cfg, "model.diffusion.sigma"), dtype=float)
            diffusion = DiagonalLipschitzDiffusion(sig)
        elif dform == "affine":
            base = np.asarray(_require(cfg, "model.diffusion.base"), dtype=float)
            coeff = np.asarray(_require(cfg, "model.diffusion.coeff"), dtype=float)
            diffusion = AffineDiffusion(base=base, coeff=coeff)
        else:
            raise ConfigValidationError(f"model.diffusion.form: unknown form {dform!r}")

        model = ModelSpec(dim_h=d, dim_u=m, drift=drift, diffusion=diffusion)
    except ConfigValidationError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigValidationError(f"model: {exc}") from exc

    radius = cfg.get("model.truncation_radius")
    if radius is not None:
        radius = _positive(cfg, "model.truncation_radius", radius)
        model = truncate_diffusion(model, radius)
    return model


def build_control(cfg: dict, grid: TimeGrid, noise: NoiseSpace) -> ControlPath:
    if "control.table" in cfg:
        vals = np.asarray(cfg["control.table"], dtype=float)
        if vals.shape[0] != grid.steps:
            raise ConfigValidationError("control.table: one row per grid cell required")
        return ControlPath(vals, grid)
    const = cfg.get("control.constant", [0.0] * noise.dim_u)
    const = np.atleast_1d(np.asarray(const, dtype=float))
    if const.size != noise.dim_u:
        raise ConfigValidationError("control.constant: dimension must match noise.weights")
    return ControlPath.constant(const, grid)


def seed_of(cfg: dict) -> int:
    env = os.environ.get("LDP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigValidationError(f"LDP_SEED: not an integer: {env!r}") from exc
    seed = cfg.get("run.seed", 0)
    if not isinstance(seed, int):
        raise ConfigValidationError(f"run.seed: must be an integer, got {seed!r}")
    return seed


def run_params(cfg: dict) -> dict:
    """Validated common run parameters."""
    out = {}
    out["x"] = np.atleast_1d(np.asarray(cfg.get("run.x", [0.0]), dtype=float))
    eps_list = cfg.get("run.eps", [0.2, 0.1, 0.05, 0.02])
    if not isinstance(eps_list, list) or not eps_list:
        raise ConfigValidationError("run.eps: must be a nonempty list")
    for e in eps_list:
        if not 0 < e <= 1:
            raise ConfigValidationError(f"run.eps: entries must lie in (0, 1], got {e}")
    out["eps_list"] = [float(e) for e in eps_list]
    for key, default in (("run.delta", 0.3), ("run.gamma", 0.1), ("run.r", 0.5)):
        out[key.split(".")[1]] = _positive(cfg, key, cfg.get(key, default))
    n = cfg.get("run.n_samples", 10000)
    if not isinstance(n, int) or n <= 0:
        raise ConfigValidationError(f"run.n_samples: must be a positive integer, got {n!r}")
    out["n_samples"] = n
    out["seed"] = seed_of(cfg)
    out["output"] = Path(cfg.get("run.output", "out"))
    method = cfg.get("run.method", "importance")
    if method not in ("direct", "importance"):
        raise ConfigValidationError(f"run.method: must be direct or importance, got {method!r}")
    out["method"] = method
    return out
