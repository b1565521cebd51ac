"""Plain-text key=value experiment configuration.

Grammar (one entry per line):

    # comment
    key = value

Values are typed on read: ``true``/``false`` -> bool, integers, floats
(``inf`` allowed), comma-separated numbers -> list, anything else -> string.
Keys must match the target experiment's known fields; unknown keys are
rejected.  ``dump-config`` reproduces the canonical form, which round-trips.
"""

from __future__ import annotations

import math


class ConfigError(ValueError):
    pass


def _parse_scalar(tok: str):
    t = tok.strip()
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    if t.lower() in ("inf", "+inf"):
        return math.inf
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    return t


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        if not key.isidentifier():
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        val = val.strip()
        if "," in val:
            out[key] = [_parse_scalar(v) for v in val.split(",") if v.strip()]
        else:
            out[key] = _parse_scalar(val)
    return out


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt_value(x) for x in v)
    return str(v)


def dump_config_text(cfg: dict) -> str:
    lines = [f"{k} = {_fmt_value(cfg[k])}" for k in sorted(cfg)]
    return "\n".join(lines) + "\n"


def load_config(path: str) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read())


def save_config(cfg: dict, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dump_config_text(cfg))


def apply_overrides(cfg: dict, overrides) -> dict:
    out = dict(cfg)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, val = item.split("=", 1)
        key = key.strip()
        val = val.strip()
        if "," in val:
            out[key] = [_parse_scalar(v) for v in val.split(",") if v.strip()]
        else:
            out[key] = _parse_scalar(val)
    return out


def check_known_keys(cfg: dict, known, context: str) -> None:
    unknown = sorted(set(cfg) - set(known))
    if unknown:
        raise ConfigError(f"unknown {context} keys: {', '.join(unknown)}")
