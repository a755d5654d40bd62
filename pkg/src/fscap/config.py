"""Plain-text experiment configs: "[command]" section headers with
key = value lines.  Unknown keys and malformed lines are hard errors
with line numbers."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidConfig, ParseError

# key -> converter, per command
_COMMON = {
    "constraint": str,
    "channel": str,
    "epsilon": float,
    "eps_floor": float,
    "seed": int,
    "out": str,
}

SCHEMAS = {
    "optimize": {**_COMMON, "a": float, "b": float, "alpha": float,
                 "beta": float, "iters": int, "theta0": str,
                 "grad_tol": float, "grad_window": int,
                 "exact_gradient": lambda s: s.lower() in ("1", "true", "yes")},
    "estimate-entropy": {**_COMMON, "theta": str, "n": int},
    "estimate-gradient": {**_COMMON, "theta": str, "n": int,
                          "replicas": int, "alpha": float, "beta": float,
                          "dump_blocks": str},
    "oracle": {**_COMMON, "mode": str, "theta": str, "n": int, "pi": float,
               "eps_grid": str, "delta_grid": str},
    "report": {"trace": str, "out_dir": str},
}

DEFAULTS = {
    "optimize": {"a": 0.75, "b": 2.0, "alpha": 0.3, "beta": 0.2,
                 "eps_floor": 1e-3, "iters": 1000, "seed": 0,
                 "theta0": "random", "grad_tol": 0.0, "grad_window": 50,
                 "exact_gradient": False, "epsilon": 0.1,
                 "channel": "bsc", "out": "trace.csv"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)


def parse_config(text: str) -> ExperimentConfig:
    """Parse one config section; the first error is reported with its
    line number."""
    command = None
    params = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            if command is not None:
                raise ParseError(f"line {lineno}: multiple sections not supported")
            command = line[1:-1].strip()
            if command not in SCHEMAS:
                raise ParseError(f"line {lineno}: unknown command section {command!r}")
            continue
        if command is None:
            raise ParseError(f"line {lineno}: key before any [section] header")
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        schema = SCHEMAS[command]
        if key not in schema:
            raise ParseError(f"line {lineno}: unknown key {key!r} for [{command}]")
        try:
            params[key] = schema[key](value)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    if command is None:
        raise ParseError("no [section] header found")
    merged = dict(DEFAULTS.get(command, {}))
    merged.update(params)
    return ExperimentConfig(command=command, params=merged)


def render_config(cfg: ExperimentConfig) -> str:
    """Inverse of parse_config for the keys present."""
    lines = [f"[{cfg.command}]"]
    lines += [f"{k} = {v}" for k, v in sorted(cfg.params.items())]
    return "\n".join(lines) + "\n"
