"""key = value config files shared by the CLI and the trainer.

Lines are ``key = value``; blank lines and #-comments are ignored.
Values stay strings here; typed accessors below convert and complain
with the key name on failure.
"""

from __future__ import annotations

from .arch import ArchSpec, make_spec
from .errors import ConfigError

ARCH_KEYS = (
    "arch", "block_layers", "use_stem", "use_transition_wo_pooling",
    "prediction_style", "num_scales", "scale_channels", "num_classes",
    "anchors_per_scale", "input_size",
)


def parse_kv_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key or not value:
            raise ConfigError(f"{source}:{ln}: expected 'key = value', got {raw!r}")
        if key in out:
            raise ConfigError(f"{source}:{ln}: duplicate key {key!r}")
        out[key] = value
    return out


def get_int(d: dict, key: str, default=None) -> int:
    if key not in d:
        return default
    try:
        return int(d[key])
    except ValueError as e:
        raise ConfigError(f"{key}: {e}") from e


def get_float(d: dict, key: str, default=None) -> float:
    if key not in d:
        return default
    try:
        return float(d[key])
    except ValueError as e:
        raise ConfigError(f"{key}: {e}") from e


def get_bool(d: dict, key: str, default=None) -> bool:
    if key not in d:
        return default
    v = d[key].lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {d[key]!r}")


def get_int_tuple(d: dict, key: str, default=None) -> tuple:
    if key not in d:
        return default
    try:
        return tuple(int(v) for v in d[key].split(","))
    except ValueError as e:
        raise ConfigError(f"{key}: {e}") from e


def spec_from_dict(d: dict) -> ArchSpec:
    """Build an ArchSpec from the arch-related keys of a config mapping."""
    if "arch" not in d:
        raise ConfigError("config is missing the 'arch' key (e.g. arch = DS/64-192-48-1)")
    kw = {}
    if "block_layers" in d:
        kw["block_layers"] = get_int_tuple(d, "block_layers")
    if "use_stem" in d:
        kw["use_stem"] = get_bool(d, "use_stem")
    if "use_transition_wo_pooling" in d:
        kw["use_transition_wo_pooling"] = get_bool(d, "use_transition_wo_pooling")
    if "prediction_style" in d:
        kw["prediction_style"] = d["prediction_style"]
    if "num_scales" in d:
        kw["num_scales"] = get_int(d, "num_scales")
    if "scale_channels" in d:
        kw["scale_channels"] = get_int(d, "scale_channels")
    if "num_classes" in d:
        kw["num_classes"] = get_int(d, "num_classes")
    if "anchors_per_scale" in d:
        kw["anchors_per_scale"] = get_int_tuple(d, "anchors_per_scale")
    if "input_size" in d:
        kw["input_size"] = get_int(d, "input_size")
    return make_spec(d["arch"], **kw)


def spec_to_dict(spec: ArchSpec) -> dict:
    return {
        "arch": spec.arch_string,
        "block_layers": ",".join(str(v) for v in spec.block_layers),
        "use_stem": "true" if spec.use_stem else "false",
        "use_transition_wo_pooling": "true" if spec.use_transition_wo_pooling else "false",
        "prediction_style": spec.prediction_style,
        "num_scales": str(spec.num_scales),
        "scale_channels": str(spec.scale_channels),
        "num_classes": str(spec.num_classes),
        "anchors_per_scale": ",".join(str(v) for v in spec.anchors_per_scale),
        "input_size": str(spec.input_size),
    }


def format_kv(d: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in d.items())
