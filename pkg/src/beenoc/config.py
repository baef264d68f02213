"""Run configuration: line-oriented `key = value` parsing, validation, defaults."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError

_REQUIRED_KEYS = ("mesh_width", "mesh_height", "seed")


@dataclass(frozen=True)
class RunConfig:
    """Validated simulation parameters. `applied_defaults` lists every key
    that was not set explicitly, so no default is ever silent."""

    mesh_width: int
    mesh_height: int
    seed: int
    wire_count: int = 8
    wire_bandwidth: float = 1.0
    t_hop: int = 1
    setup_timeout_factor: float = 4.0
    hop_limit_metric: str = "euclidean"
    backward_bee_count: int = 3
    max_cycles: int = 1_000_000
    trace: bool = False
    workload_file: str | None = None
    traffic_rate: float = 0.005
    traffic_duration: int = 1000
    traffic_pattern: str = "uniform"
    hotspot_node: tuple[int, int] = (0, 0)
    hotspot_fraction: float = 0.1
    bandwidth_values: tuple[float, ...] = (1.0,)
    bandwidth_weights: tuple[float, ...] = (1.0,)
    hold_time_dist: str = "fixed"
    hold_time_mean: float = 100.0
    applied_defaults: tuple[str, ...] = ()


def _parse_bool(value: str) -> bool:
    if value == "on":
        return True
    if value == "off":
        return False
    raise ValueError("expected 'on' or 'off'")


def _parse_node(value: str) -> tuple[int, int]:
    parts = value.split(",")
    if len(parts) != 2:
        raise ValueError("expected 'x,y'")
    return (int(parts[0]), int(parts[1]))


def _parse_floats(value: str) -> tuple[float, ...]:
    return tuple(float(p) for p in value.split(","))


_PARSERS = {
    "mesh_width": int,
    "mesh_height": int,
    "seed": int,
    "wire_count": int,
    "wire_bandwidth": float,
    "t_hop": int,
    "setup_timeout_factor": float,
    "hop_limit_metric": str,
    "backward_bee_count": int,
    "max_cycles": int,
    "trace": _parse_bool,
    "workload_file": str,
    "traffic_rate": float,
    "traffic_duration": int,
    "traffic_pattern": str,
    "hotspot_node": _parse_node,
    "hotspot_fraction": float,
    "bandwidth_values": _parse_floats,
    "bandwidth_weights": _parse_floats,
    "hold_time_dist": str,
    "hold_time_mean": float,
}

_TRAFFIC_KEYS = {
    "traffic_rate",
    "traffic_duration",
    "traffic_pattern",
    "hotspot_node",
    "hotspot_fraction",
    "bandwidth_values",
    "bandwidth_weights",
    "hold_time_dist",
    "hold_time_mean",
}


def validate_config(cfg: RunConfig, explicit: set | None = None) -> None:
    """Range- and cross-checks; raises ConfigError naming the offending key."""

    def fail(key: str, why: str) -> None:
        raise ConfigError(f"key '{key}': {why}")

    if cfg.mesh_width < 2:
        fail("mesh_width", "all mesh dimensions must be >= 2")
    if cfg.mesh_height < 2:
        fail("mesh_height", "all mesh dimensions must be >= 2")
    if not 0 <= cfg.seed < 2**64:
        fail("seed", "must be a 64-bit unsigned integer")
    if cfg.wire_count < 1:
        fail("wire_count", "must be >= 1")
    if cfg.wire_bandwidth <= 0:
        fail("wire_bandwidth", "must be positive")
    if cfg.t_hop < 1:
        fail("t_hop", "must be >= 1 cycle")
    if cfg.setup_timeout_factor <= 0:
        fail("setup_timeout_factor", "must be positive")
    if cfg.hop_limit_metric not in ("euclidean", "manhattan"):
        fail("hop_limit_metric", "must be 'euclidean' or 'manhattan'")
    if cfg.backward_bee_count not in (1, 2, 3):
        fail("backward_bee_count", "must be 1, 2, or 3")
    if cfg.max_cycles < 1:
        fail("max_cycles", "must be >= 1")
    if cfg.traffic_rate <= 0:
        fail("traffic_rate", "must be positive (see workload_file for explicit workloads)")
    if cfg.traffic_duration < 1:
        fail("traffic_duration", "must be >= 1 cycle")
    if cfg.traffic_pattern not in ("uniform", "hotspot", "transpose"):
        fail("traffic_pattern", "must be 'uniform', 'hotspot', or 'transpose'")
    hx, hy = cfg.hotspot_node
    if not (0 <= hx < cfg.mesh_width and 0 <= hy < cfg.mesh_height):
        fail("hotspot_node", "must lie inside the mesh")
    if not 0.0 <= cfg.hotspot_fraction <= 1.0:
        fail("hotspot_fraction", "must be in [0, 1]")
    if cfg.traffic_pattern == "transpose" and cfg.mesh_width != cfg.mesh_height:
        fail("traffic_pattern", "transpose needs a square mesh")
    if not cfg.bandwidth_values:
        fail("bandwidth_values", "must not be empty")
    if any(v <= 0 for v in cfg.bandwidth_values):
        fail("bandwidth_values", "all values must be positive")
    if len(cfg.bandwidth_weights) != len(cfg.bandwidth_values):
        fail("bandwidth_weights", "must match bandwidth_values in length")
    if any(w < 0 for w in cfg.bandwidth_weights):
        fail("bandwidth_weights", "weights must be non-negative")
    if sum(cfg.bandwidth_weights) <= 0:
        fail("bandwidth_weights", "weights must not all be zero")
    if cfg.hold_time_dist not in ("fixed", "geometric"):
        fail("hold_time_dist", "must be 'fixed' or 'geometric'")
    if cfg.hold_time_mean < 1:
        fail("hold_time_mean", "must be >= 1 cycle")
    if explicit is not None and cfg.workload_file is not None:
        clash = sorted(_TRAFFIC_KEYS & explicit)
        if clash:
            fail(clash[0], "conflicts with workload_file (pick one workload source)")


def parse_config(text: str) -> RunConfig:
    """Parse the documented line-oriented config format.

    Blank lines and lines starting with '#' are ignored. Unknown keys,
    duplicate keys, missing required keys, and out-of-range values are
    rejected with the offending key and line number.
    """
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key '{key}' (first set on line {entries[key][1]})")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for '{key}'")
        entries[key] = (value, lineno)

    for key in _REQUIRED_KEYS:
        if key not in entries:
            raise ConfigError(f"missing required key '{key}'")

    kwargs = {}
    for key, (value, lineno) in entries.items():
        try:
            kwargs[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: key '{key}': {exc}") from None

    applied = tuple(k for k in _PARSERS if k not in entries)
    cfg = RunConfig(**kwargs, applied_defaults=applied)
    validate_config(cfg, explicit=set(entries))
    return cfg


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def echo_lines(cfg: RunConfig) -> list[str]:
    """Resolved configuration, one `key = value` line per parameter, with
    every applied default marked."""
    defaulted = set(cfg.applied_defaults)
    lines = []
    for f in fields(cfg):
        if f.name == "applied_defaults":
            continue
        suffix = "  (default)" if f.name in defaulted else ""
        lines.append(f"{f.name} = {_format_value(getattr(cfg, f.name))}{suffix}")
    return lines
