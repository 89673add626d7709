"""Plain key=value run configuration.

One flat file per run: `key = value` lines, blank lines and `#` comments
ignored.  Keys are model selectors (`model`, `variant`), numeric parameters
matching the model config fields, kernel/rate descriptors (`kernel=exp:1.0`,
`f=affine:1,0.5`), and experiment controls (`experiment`, `n_list`,
`replicates`, `times`, `limit_h`).  Parse errors carry the file line number;
semantic errors carry the key name.
"""

from __future__ import annotations

from .errors import ConfigError
from .models import (
    HawkesMeanFieldConfig,
    MeanFieldDiffusiveConfig,
    VolterraConfig,
    parse_kernel,
    parse_rate_fn,
)
from .rng import RngStream

__all__ = [
    "load_kv",
    "parse_kv_text",
    "get_choice",
    "get_float",
    "get_int",
    "get_bool",
    "get_int_list",
    "get_float_list",
    "build_meanfield",
    "build_volterra",
    "build_hawkes",
]


def parse_kv_text(text: str, origin: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{ln}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.split("#", 1)[0].strip()
        if not key or not value:
            raise ConfigError(f"{origin}:{ln}: empty key or value in {raw!r}")
        if key in out:
            raise ConfigError(f"{origin}:{ln}: duplicate key {key!r}")
        out[key] = value
    return out


def load_kv(path: str) -> dict[str, str]:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_kv_text(text, origin=path)


def get_choice(d: dict[str, str], key: str, choices: list[str], default: str | None = None) -> str:
    raw = d.get(key, default)
    if raw is None:
        raise ConfigError(f"missing required key {key!r} (one of {choices})")
    if raw not in choices:
        raise ConfigError(f"key {key!r}: expected one of {choices}, got {raw!r}")
    return raw


def get_float(d: dict[str, str], key: str, default: float | None = None) -> float:
    raw = d.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing required numeric key {key!r}")
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a number: {raw!r}") from exc


def get_int(d: dict[str, str], key: str, default: int | None = None) -> int:
    raw = d.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing required integer key {key!r}")
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not an integer: {raw!r}") from exc


def get_bool(d: dict[str, str], key: str, default: bool = False) -> bool:
    raw = d.get(key)
    if raw is None:
        return default
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key {key!r}: not a boolean: {raw!r}")


def _split_list(raw: str) -> list[str]:
    return [p for p in (s.strip() for s in raw.split(",")) if p]


def get_int_list(d: dict[str, str], key: str, default: list[int] | None = None) -> list[int]:
    raw = d.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing required list key {key!r}")
        return list(default)
    try:
        return [int(p) for p in _split_list(raw)]
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a comma-separated integer list: {raw!r}") from exc


def get_float_list(d: dict[str, str], key: str, default: list[float] | None = None) -> list[float]:
    raw = d.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing required list key {key!r}")
        return list(default)
    try:
        return [float(p) for p in _split_list(raw)]
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a comma-separated number list: {raw!r}") from exc


def build_meanfield(d: dict[str, str], seed: RngStream) -> MeanFieldDiffusiveConfig:
    return MeanFieldDiffusiveConfig(
        alpha=get_float(d, "alpha", 1.0),
        N=get_int(d, "n", 100),
        T=get_float(d, "t", 1.0),
        n_obs=get_int(d, "n_obs", 1),
        seed=seed,
    )


def build_volterra(d: dict[str, str], seed: RngStream) -> VolterraConfig:
    return VolterraConfig(
        gamma=get_float(d, "gamma", 1.0),
        N=get_int(d, "n", 8),
        T=get_float(d, "t", 1.0),
        h=get_float(d, "h", 0.02),
        mu=get_float(d, "mu", 1.0),
        seed=seed,
        bound_ceiling=get_float(d, "bound_ceiling", 1e6),
        freeze_feedback=get_bool(d, "freeze_feedback", False),
    )


def build_hawkes(d: dict[str, str], seed: RngStream) -> HawkesMeanFieldConfig:
    return HawkesMeanFieldConfig(
        kernel=parse_kernel(d.get("kernel", "exp:1.0")),
        rate_fn=parse_rate_fn(d.get("f", "affine:1,0.5")),
        N=get_int(d, "n", 8),
        T=get_float(d, "t", 5.0),
        h=get_float(d, "h", 0.05),
        n_obs=get_int(d, "n_obs", 1),
        seed=seed,
        bound_ceiling=get_float(d, "bound_ceiling", 1e6),
    )
