"""Flat key=value run configuration shared by all CLI subcommands.

The file format is one `key = value` pair per line with `#` comments.
Unknown keys are rejected.  Defaults are the reference parameter set
(k=1, A=10, m=1, Omega=0.5, kT=0.01, Gamma=1, tau_c=3, F=10, hbar=0.01,
c=10); command-line flags override file values and the effective merged
configuration is echoed into every output's metadata.
"""

from dataclasses import dataclass, field, fields
import os

from .bath import BathParams
from .integrator import DEFAULT_MOMENT_DAMPING_RATE, DEFAULT_STEPS_PER_CYCLE
from .model import SystemParams


class ConfigError(ValueError):
    """Malformed configuration: unknown key, bad value, or bad syntax."""


@dataclass
class RunConfig:
    """All tunables: physics, bath, integrator, diagnostics, outputs."""

    # physical system
    k: float = 1.0
    A: float = 10.0
    m: float = 1.0
    x_wall: float = 0.5
    F: float = 10.0
    Omega: float = 0.5
    hbar: float = 0.01
    c: float = 10.0
    # bath
    Gamma: float = 1.0
    tau_c: float = 3.0
    kT: float = 0.01
    n_components: int = 3
    # integrator
    seed: int = 0
    n_transient_cycles: int = 200
    n_record_cycles: int = 500
    sample_stride: int = 1
    steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE
    nonlinear_feed: bool = False
    moment_damping_rate: float = DEFAULT_MOMENT_DAMPING_RATE
    noise_scale: float = 1.0
    # diagnostics
    d0: float = 1e-8
    renorm_cycles: int = 1
    poincare_direction: str = "down"
    window: str = "hann"
    n_c: int = 100
    cluster_tol: float = 0.02
    # bifurcation grid
    grid_start: float = 0.2
    grid_stop: float = 2.0
    grid_step: float = 0.01
    seed_policy: str = "fixed"
    # ensemble
    n_realizations: int = 50
    # execution
    threads: int = 1
    desk_scale: bool = True
    output_dir: str = ""

    def system_params(self) -> SystemParams:
        return SystemParams(k=self.k, A=self.A, m=self.m, x_wall=self.x_wall,
                            F=self.F, Omega=self.Omega, hbar=self.hbar,
                            c_slope=self.c)

    def bath_params(self) -> BathParams:
        return BathParams(Gamma=self.Gamma, tau_c=self.tau_c, kT=self.kT,
                          hbar=self.hbar)

    def effective_output_dir(self) -> str:
        return (self.output_dir or os.environ.get("SOFTIMPACT_OUTPUT") or
                os.getcwd())

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_FIELDS = {f.name: f.type for f in fields(RunConfig)}
_DEFAULTS = RunConfig()

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _convert(key: str, raw: str):
    default = getattr(_DEFAULTS, key)
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as e:
        raise ConfigError(f"bad value for key {key!r}: {e}") from None


def parse_config_text(text: str, base: RunConfig = None) -> RunConfig:
    """Parse key=value lines into a RunConfig, rejecting unknown keys."""
    cfg = RunConfig(**(base.to_dict() if base is not None else {}))
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, "
                              f"got {stripped!r}")
        key, _, val = stripped.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        setattr(cfg, key, _convert(key, val))
    return cfg


def load_config(path, base: RunConfig = None) -> RunConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), base)


def apply_overrides(cfg: RunConfig, pairs) -> RunConfig:
    """Apply key=value override strings (CLI flags beat file values)."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override must be key=value, got {pair!r}")
        key, _, val = pair.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        setattr(cfg, key, _convert(key, val))
    return cfg


def validate(cfg: RunConfig) -> RunConfig:
    """Construct the parameter objects so their invariants run."""
    try:
        cfg.system_params()
        cfg.bath_params()
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if cfg.n_components < 1:
        raise ConfigError("n_components must be >= 1")
    if cfg.grid_step <= 0:
        raise ConfigError("grid_step must be positive")
    if cfg.grid_stop < cfg.grid_start:
        raise ConfigError("descending grid: grid_stop < grid_start")
    if cfg.poincare_direction not in ("up", "down", "both"):
        raise ConfigError(f"bad poincare_direction {cfg.poincare_direction!r}")
    if cfg.window not in ("hann", "none"):
        raise ConfigError(f"bad window {cfg.window!r}")
    if cfg.seed_policy not in ("fixed", "fresh"):
        raise ConfigError(f"bad seed_policy {cfg.seed_policy!r}")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    if cfg.noise_scale < 0:
        raise ConfigError("noise_scale must be >= 0")
    if cfg.moment_damping_rate < 0:
        raise ConfigError("moment_damping_rate must be >= 0")
    return cfg


def config_echo(cfg: RunConfig) -> dict:
    """Effective configuration as a flat dict for output metadata."""
    return {f"config_{k}": v for k, v in cfg.to_dict().items()}
