"""Run configuration: every tunable across the pipeline in one place.

Config files are plain key=value lines ('#' starts a comment), overridden by
CLI flags. None of the defaults come from the source material; all are
config-overridable. Ranges are enforced at parse time.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ParseError


@dataclass
class RunConfig:
    # geometric model
    sigma_hit: float = 0.2  # m
    z_rand_weight: float = 0.05
    max_eval_range: float = 2.0  # m, distance clamp for the likelihood field
    stride: int = 10  # evaluate every stride-th beam
    # semantic model
    gamma: float = 2.0
    miss_penalty: float = 0.5
    min_factor: float = 0.05
    # text matching / likelihood maps
    max_edit_distance: int = 1
    tau: float = 0.5
    min_attempts: int = 3
    hist_resolution: float = 0.25  # m
    # particle filter
    particles: int = 500
    rho: float = 0.15  # fraction of particles replaced per text event
    cooldown: float = 5.0  # s between injections for the same tag
    ess_ratio: float = 0.5  # resample when ESS < ess_ratio * n
    alpha1: float = 0.05  # odometry noise: rotation from rotation
    alpha2: float = 0.05  # rotation from translation
    alpha3: float = 0.05  # translation from translation
    alpha4: float = 0.05  # translation from rotation
    # stability analysis
    delta_move: float = 0.5  # m
    # channels and initialization
    geometric: bool = True
    semantic: bool = True
    text: bool = True
    init: str = "uniform"  # "uniform" or "rooms:<category>"
    seed: int = 0

    def validate(self) -> None:
        checks = [
            (self.sigma_hit > 0, "sigma_hit must be > 0"),
            (0 <= self.z_rand_weight < 1, "z_rand_weight must lie in [0, 1)"),
            (self.max_eval_range > 0, "max_eval_range must be > 0"),
            (self.stride >= 1, "stride must be >= 1"),
            (self.gamma >= 1, "gamma must be >= 1"),
            (0 < self.miss_penalty <= 1, "miss_penalty must lie in (0, 1]"),
            (0 < self.min_factor < 1, "min_factor must lie in (0, 1)"),
            (self.max_edit_distance >= 0, "max_edit_distance must be >= 0"),
            (0 < self.tau <= 1, "tau must lie in (0, 1]"),
            (self.min_attempts >= 1, "min_attempts must be >= 1"),
            (self.hist_resolution > 0, "hist_resolution must be > 0"),
            (self.particles >= 1, "particles must be >= 1"),
            (0 <= self.rho < 1, "rho must lie in [0, 1)"),
            (self.cooldown >= 0, "cooldown must be >= 0"),
            (0 < self.ess_ratio <= 1, "ess_ratio must lie in (0, 1]"),
            (min(self.alpha1, self.alpha2, self.alpha3, self.alpha4) >= 0, "alphas must be >= 0"),
            (self.delta_move > 0, "delta_move must be > 0"),
            (self.init == "uniform" or self.init.startswith("rooms:"), "init must be 'uniform' or 'rooms:<category>'"),
        ]
        for ok, message in checks:
            if not ok:
                raise ParseError(f"config: {message}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **overrides) -> "RunConfig":
        data = self.to_dict()
        data.update(overrides)
        cfg = RunConfig(**data)
        cfg.validate()
        return cfg


def _parse_value(name: str, raw: str, target_type: type):
    raw = raw.strip()
    if target_type is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ParseError(f"config: {name} expects a boolean, got {raw!r}")
    try:
        return target_type(raw)
    except ValueError as exc:
        raise ParseError(f"config: {name} expects {target_type.__name__}, got {raw!r}") from exc


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    """Parse a key=value config file on top of defaults (or a base config)."""
    cfg = base or RunConfig()
    known = {f.name: f.type for f in fields(RunConfig)}
    types = {f.name: type(getattr(cfg, f.name)) for f in fields(RunConfig)}
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"config line {lineno}: expected key=value, got {line!r}")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ParseError(f"config line {lineno}: unknown key {key!r}")
            overrides[key] = _parse_value(key, raw, types[key])
    return cfg.replace(**overrides)
