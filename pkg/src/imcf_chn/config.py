"""Line-oriented ``key = value`` run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

COMMANDS = ("flow", "sphere", "limit", "example", "verify")
KINDS = ("constant", "poly", "kzeta")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(errors))
        self.errors = errors


@dataclass
class RunConfig:
    command: str | None = None
    n: int = 2
    grid_points: int = 201
    t_end: float = 15.0
    initial_kind: str = "constant"
    initial_tau: float = 2.0
    initial_coeffs: tuple = ()
    initial_k: float | None = None
    stepper_safety: float = 0.4
    stepper_dt_max: float = 0.02
    output_dir: str = "out"
    output_every: int = 10
    seed: int = 0
    example_k_list: tuple = (8.0, 16.0, 32.0, 64.0)
    fit_window: tuple | None = None
    sources: dict = field(default_factory=dict, repr=False)

    def initial_profile(self, zeta: np.ndarray) -> np.ndarray:
        """Initial radial values ``tau + sum_m c_m zeta^m`` (``m >= 1``) or ``tau + k zeta``."""
        z = np.asarray(zeta, dtype=float)
        rho = np.full_like(z, self.initial_tau)
        if self.initial_kind == "poly":
            for m, c in enumerate(self.initial_coeffs, start=1):
                rho = rho + c * z**m
        elif self.initial_kind == "kzeta":
            rho = rho + self.initial_k * z
        return rho


def _int(s):
    if s.strip().lstrip("+-").isdigit():
        return int(s)
    raise ValueError(f"expected an integer, got {s!r}")


def _float(s):
    return float(s)


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _str(s):
    if not s:
        raise ValueError("empty value")
    return s


# key -> (attribute, converter)
KEYS = {
    "command": ("command", _str),
    "n": ("n", _int),
    "grid_points": ("grid_points", _int),
    "t_end": ("t_end", _float),
    "initial.kind": ("initial_kind", _str),
    "initial.tau": ("initial_tau", _float),
    "initial.coeffs": ("initial_coeffs", _floats),
    "initial.k": ("initial_k", _float),
    "stepper.safety": ("stepper_safety", _float),
    "stepper.dt_max": ("stepper_dt_max", _float),
    "output.dir": ("output_dir", _str),
    "output.every": ("output_every", _int),
    "seed": ("seed", _int),
    "example.k_list": ("example_k_list", _floats),
    "fit.window": ("fit_window", _floats),
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate; every problem found is reported, with line numbers."""
    cfg = RunConfig()
    errors: list[str] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            errors.append(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
            continue
        seen[key] = lineno
        attr, conv = KEYS[key]
        try:
            setattr(cfg, attr, conv(value))
        except ValueError as exc:
            errors.append(f"line {lineno}: type mismatch for {key}: {exc}")
    cfg.sources = seen
    errors.extend(_validate(cfg, seen))
    if errors:
        raise ConfigError(errors)
    return cfg


def _validate(cfg: RunConfig, seen: dict[str, int]) -> list[str]:
    errs = []

    def at(key):
        return f"line {seen[key]}" if key in seen else "default"

    if cfg.command is not None and cfg.command not in COMMANDS:
        errs.append(f"{at('command')}: command must be one of {', '.join(COMMANDS)}")
    if isinstance(cfg.n, int) and cfg.n < 2:
        errs.append(f"{at('n')}: range violation, n must be >= 2")
    if isinstance(cfg.grid_points, int):
        if cfg.grid_points < 33:
            errs.append(f"{at('grid_points')}: range violation, grid_points must be >= 33")
        if cfg.grid_points % 2 == 0:
            errs.append(f"{at('grid_points')}: range violation, grid_points must be odd "
                        "(N odd keeps zeta = 0 on the grid)")
    if not cfg.t_end > 0:
        errs.append(f"{at('t_end')}: range violation, t_end must be > 0")
    if cfg.initial_kind not in KINDS:
        errs.append(f"{at('initial.kind')}: initial.kind must be one of {', '.join(KINDS)}")
    if cfg.initial_kind == "kzeta" and cfg.initial_k is None:
        errs.append(f"{at('initial.kind')}: missing field initial.k required by initial.kind = kzeta")
    if cfg.initial_kind == "poly" and not cfg.initial_coeffs:
        errs.append(f"{at('initial.kind')}: missing field initial.coeffs required by initial.kind = poly")
    if not 0 < cfg.stepper_safety <= 1:
        errs.append(f"{at('stepper.safety')}: range violation, stepper.safety must lie in (0, 1]")
    if not cfg.stepper_dt_max > 0:
        errs.append(f"{at('stepper.dt_max')}: range violation, stepper.dt_max must be > 0")
    if isinstance(cfg.output_every, int) and cfg.output_every < 1:
        errs.append(f"{at('output.every')}: range violation, output.every must be >= 1")
    ks = np.asarray(cfg.example_k_list, dtype=float)
    if ks.size == 0 or np.any(ks <= 0) or np.any(np.diff(ks) <= 0):
        errs.append(f"{at('example.k_list')}: example.k_list must be positive and increasing")
    if cfg.fit_window is not None and (len(cfg.fit_window) != 2 or cfg.fit_window[0] >= cfg.fit_window[1]):
        errs.append(f"{at('fit.window')}: fit.window must be two increasing times")
    if cfg.initial_kind in KINDS and not errs:
        rho = cfg.initial_profile(np.linspace(-1.0, 1.0, 2001))
        if np.any(rho <= 0):
            errs.append(f"{at('initial.tau')}: range violation, initial radial function "
                        f"must be positive (min {rho.min():.4g})")
    return errs
