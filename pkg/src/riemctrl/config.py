"""JSON run configuration for the command-line driver."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from riemctrl.dynamics import STEPS_PER_UNIT_TIME
from riemctrl.errors import ParseError, ValidationError
from riemctrl.models import BUILTIN_MODELS
from riemctrl.pontryagin import Costate, FixedEndpoint, FreeEndpoint

MODES = ("check-geometry", "simulate", "solve", "compare")

_KEYS = {
    "model", "params", "mode", "T", "steps", "q0", "qdot0", "boundary", "control",
    "costate0", "guess", "tol", "max_iters", "samples", "report", "trajectory_csv",
}


@dataclass
class RunConfig:
    model: str
    mode: str
    params: dict = field(default_factory=dict)
    T: float = 1.0
    steps: Optional[int] = None
    q0: Optional[np.ndarray] = None
    qdot0: Optional[np.ndarray] = None
    boundary: object = None
    control: object = None
    costate0: Optional[Costate] = None
    guess: Optional[Costate] = None
    tol: float = 1e-8
    max_iters: int = 50
    samples: int = 100
    report: str = "report.json"
    trajectory_csv: Optional[str] = None

    def __post_init__(self):
        if self.steps is None:
            self.steps = max(2, int(round(STEPS_PER_UNIT_TIME * self.T)))


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return None if m is None else text.count("\n", 0, m.start()) + 1


def _vector(raw, name, dim=None):
    try:
        v = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(name, "expected a list of numbers") from None
    if v.ndim != 1 or (dim is not None and v.size != dim) or not np.all(np.isfinite(v)):
        raise ValidationError(name, f"expected a finite vector of length {dim}")
    return v


def _number(raw, name, positive=False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not math.isfinite(raw):
        raise ValidationError(name, "expected a finite number")
    if positive and raw <= 0:
        raise ValidationError(name, "must be positive")
    return float(raw)


def _integer(raw, name, minimum):
    if isinstance(raw, bool) or not isinstance(raw, int) or raw < minimum:
        raise ValidationError(name, f"expected an integer >= {minimum}")
    return raw


def _costate(raw, name, dim):
    if not isinstance(raw, dict) or set(raw) != {"p", "xi"}:
        raise ValidationError(name, 'expected {"p": [...], "xi": [...]}')
    return Costate(_vector(raw["p"], f"{name}.p", dim), _vector(raw["xi"], f"{name}.xi", dim))


def _boundary(raw, dim):
    if not isinstance(raw, dict) or "type" not in raw:
        raise ValidationError("boundary", 'expected an object with "type"')
    kind = raw["type"]
    if kind == "free":
        if set(raw) != {"type"}:
            raise ValidationError("boundary", "free boundary takes no other keys")
        return FreeEndpoint()
    if kind == "fixed":
        if set(raw) != {"type", "q_T", "qdot_T"}:
            raise ValidationError("boundary", 'fixed boundary needs exactly "q_T" and "qdot_T"')
        return FixedEndpoint(_vector(raw["q_T"], "boundary.q_T", dim), _vector(raw["qdot_T"], "boundary.qdot_T", dim))
    raise ValidationError("boundary.type", f"unknown boundary type {kind!r}")


def _control(raw, dim):
    # a constant contravariant vector, or a CSV path with columns t,u1..un
    if isinstance(raw, str):
        return raw
    return _vector(raw, "control", dim)


def parse_config(text) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(raw, dict):
        raise ParseError("top level must be a JSON object", line=1)
    for key in raw:
        if key not in _KEYS:
            raise ParseError("unknown key", line=_line_of(text, key), key=key)

    for name in ("model", "mode"):
        if name not in raw:
            raise ValidationError(name, "required")
    model = raw["model"]
    if model not in BUILTIN_MODELS:
        raise ValidationError("model", f"unknown model {model!r}")
    mode = raw["mode"]
    if mode not in MODES:
        raise ValidationError("mode", f"expected one of {', '.join(MODES)}")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ValidationError("params", "expected an object")
    # dimension is fixed per built-in model; build it once to learn it
    try:
        dim = BUILTIN_MODELS[model](params).dim
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationError("params", str(exc)) from None

    cfg = {"model": model, "mode": mode, "params": params}
    if "T" in raw:
        cfg["T"] = _number(raw["T"], "T", positive=True)
    if "steps" in raw:
        cfg["steps"] = _integer(raw["steps"], "steps", 2)
    for name in ("q0", "qdot0"):
        if name in raw:
            cfg[name] = _vector(raw[name], name, dim)
    if "boundary" in raw:
        cfg["boundary"] = _boundary(raw["boundary"], dim)
    if "control" in raw:
        cfg["control"] = _control(raw["control"], dim)
    for name in ("costate0", "guess"):
        if name in raw:
            cfg[name] = _costate(raw[name], name, dim)
    if "tol" in raw:
        cfg["tol"] = _number(raw["tol"], "tol", positive=True)
    if "max_iters" in raw:
        cfg["max_iters"] = _integer(raw["max_iters"], "max_iters", 1)
    if "samples" in raw:
        cfg["samples"] = _integer(raw["samples"], "samples", 1)
    for name in ("report", "trajectory_csv"):
        if name in raw:
            if not isinstance(raw[name], str) or not raw[name]:
                raise ValidationError(name, "expected a path")
            cfg[name] = raw[name]

    if mode in ("simulate", "solve", "compare") and "q0" not in cfg:
        raise ValidationError("q0", f"required for {mode}")
    if mode == "solve" and "boundary" not in cfg:
        raise ValidationError("boundary", "required for solve")
    if mode == "compare" and "costate0" not in cfg:
        raise ValidationError("costate0", "required for compare")
    if "q0" in cfg and "qdot0" not in cfg:
        cfg["qdot0"] = np.zeros(dim)
    return RunConfig(**cfg)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
