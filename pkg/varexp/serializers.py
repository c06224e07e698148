# varexp/serializers.py
"""
Run-config validation (DRF serializers) and the config -> problem builders.

A run config is one JSON document:

    {
      "domain":   {"dim": 1, "bounds": [[0, 1]]},
      "grid":     {"nodes": [65]},
      "exponent": {"expr": "2 + x"}            | {"preset": "inv_x"},
      "phi":      {"expr": "x^2"},
      "q":        {"expr": "1"},                 (J_WEIGHTED only)
      "energy_kind": "F_GRAD",
      "solver":   {"grad_tol": 1e-8, "max_iters": 20000, "init": "zeros",
                   "seed": 0, "mode": "lbfgs", "max_backtracks": 60},
      "certificates": {"variational_dirs": 100, "uniqueness": true, "seed": 7},
      "output":   {"dir": "runs/demo"}
    }

The `norm` command takes the same domain/grid/exponent blocks plus
"u": {"expr": ...}, "kind" and an optional "tol".
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Optional

from rest_framework import serializers

from varexp.energy import EnergyKind, ProblemData
from varexp.exceptions import ConfigError, ExprSyntaxError
from varexp.exponent import PRESETS, make_exponent, make_weight
from varexp.expr import compile_expr, parse, variables
from varexp.grid import Domain, Grid, GridFunction, build_grid
from varexp.modular import ModularKind
from varexp.solver import INITS, MODES, SolverConfig


# =========================
# Fields
# =========================
def validate_expression(src: str) -> str:
    try:
        parse(src)
    except ExprSyntaxError as e:
        raise serializers.ValidationError(str(e))
    return src


class ExprSerializer(serializers.Serializer):
    expr = serializers.CharField(validators=[validate_expression], trim_whitespace=True)


class ExponentSerializer(serializers.Serializer):
    expr = serializers.CharField(required=False, validators=[validate_expression])
    preset = serializers.ChoiceField(choices=sorted(PRESETS), required=False)

    def validate(self, attrs):
        if ("expr" in attrs) == ("preset" in attrs):
            raise serializers.ValidationError("give exactly one of 'expr' or 'preset'")
        return attrs


class DomainSerializer(serializers.Serializer):
    dim = serializers.ChoiceField(choices=[1, 2])
    bounds = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2),
        min_length=1,
        max_length=2,
    )

    def validate(self, attrs):
        if len(attrs["bounds"]) != attrs["dim"]:
            raise serializers.ValidationError({"bounds": [f"need {attrs['dim']} intervals"]})
        for i, (a, b) in enumerate(attrs["bounds"]):
            if not a < b:
                raise serializers.ValidationError({"bounds": [f"axis {i}: need a < b, got [{a}, {b}]"]})
        return attrs


class GridSerializer(serializers.Serializer):
    nodes = serializers.ListField(child=serializers.IntegerField(min_value=3), min_length=1, max_length=2)


class SolverSerializer(serializers.Serializer):
    grad_tol = serializers.FloatField(required=False, min_value=0.0)
    max_iters = serializers.IntegerField(required=False, min_value=0)
    armijo_c = serializers.FloatField(required=False)
    backtrack_factor = serializers.FloatField(required=False)
    init = serializers.ChoiceField(choices=[i for i in INITS if i != "provided"], required=False)
    seed = serializers.IntegerField(required=False, min_value=0)
    mode = serializers.ChoiceField(choices=list(MODES), required=False)
    memory = serializers.IntegerField(required=False, min_value=1)
    max_backtracks = serializers.IntegerField(required=False, min_value=1)

    def validate_grad_tol(self, v):
        if not v > 0:
            raise serializers.ValidationError("must be > 0")
        return v

    def validate_armijo_c(self, v):
        if not 0 < v < 1:
            raise serializers.ValidationError("must lie in (0, 1)")
        return v

    def validate_backtrack_factor(self, v):
        if not 0 < v < 1:
            raise serializers.ValidationError("must lie in (0, 1)")
        return v


class CertificatesSerializer(serializers.Serializer):
    variational_dirs = serializers.IntegerField(required=False, min_value=0, default=0)
    uniqueness = serializers.BooleanField(required=False, default=False)
    seed = serializers.IntegerField(required=False, min_value=0, default=7)


class OutputSerializer(serializers.Serializer):
    dir = serializers.CharField(required=False, allow_blank=True, default="")


def _check_shape(attrs):
    dim = attrs["domain"]["dim"]
    errors = {}
    if len(attrs["grid"]["nodes"]) != dim:
        errors["grid"] = {"nodes": [f"need {dim} node counts"]}
    if dim == 1:
        for name in ("exponent", "phi", "q", "u"):
            block = attrs.get(name) or {}
            if "expr" in block and "y" in variables(parse(block["expr"])):
                errors[name] = {"expr": ["uses y on a 1D domain"]}
    return errors


class RunConfigSerializer(serializers.Serializer):
    domain = DomainSerializer()
    grid = GridSerializer()
    exponent = ExponentSerializer()
    phi = ExprSerializer()
    q = ExprSerializer(required=False)
    energy_kind = serializers.ChoiceField(choices=[k.value for k in EnergyKind])
    solver = SolverSerializer(required=False)
    certificates = CertificatesSerializer(required=False)
    output = OutputSerializer(required=False)

    def validate(self, attrs):
        errors = _check_shape(attrs)
        if attrs["energy_kind"] == EnergyKind.J_WEIGHTED.value and "q" not in attrs:
            errors["q"] = ["required when energy_kind is J_WEIGHTED"]
        if errors:
            raise serializers.ValidationError(errors)
        return attrs


class NormConfigSerializer(serializers.Serializer):
    domain = DomainSerializer()
    grid = GridSerializer()
    exponent = ExponentSerializer()
    u = ExprSerializer()
    kind = serializers.ChoiceField(choices=[k.value for k in ModularKind], default=ModularKind.RHO_P.value)
    tol = serializers.FloatField(required=False, min_value=0.0)

    def validate(self, attrs):
        errors = _check_shape(attrs)
        if "tol" in attrs and not attrs["tol"] > 0:
            errors["tol"] = ["must be > 0"]
        if errors:
            raise serializers.ValidationError(errors)
        return attrs


# =========================
# Loading
# =========================
def flatten_errors(errors, prefix: str = "") -> Dict[str, List[str]]:
    """DRF nested error dict -> {'solver.grad_tol': [...], ...}."""
    out: Dict[str, List[str]] = {}
    if isinstance(errors, dict):
        for key, val in errors.items():
            path = str(key) if not prefix else (prefix if key == "non_field_errors" else f"{prefix}.{key}")
            for p, msgs in flatten_errors(val, path).items():
                out.setdefault(p, []).extend(msgs)
    elif isinstance(errors, list) and errors and all(isinstance(e, (dict, list)) for e in errors):
        for i, val in enumerate(errors):
            for p, msgs in flatten_errors(val, f"{prefix}[{i}]").items():
                out.setdefault(p, []).extend(msgs)
    elif isinstance(errors, list):
        out[prefix or "config"] = [str(e) for e in errors]
    else:
        out[prefix or "config"] = [str(errors)]
    return out


def read_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return raw


def _validated(serializer_cls, raw: dict, label: str) -> dict:
    ser = serializer_cls(data=raw)
    if not ser.is_valid():
        raise ConfigError(f"{label} failed validation", flatten_errors(ser.errors))
    # OrderedDict/ReturnDict -> plain JSON-able dicts
    return json.loads(json.dumps(ser.validated_data))


def parse_run_config(raw: dict, defaults: Optional[dict] = None) -> dict:
    """Validated config with solver defaults filled in (echoed into run.json)."""
    cfg = _validated(RunConfigSerializer, raw, "run config")
    solver = dict(defaults or {})
    solver.update(cfg.get("solver") or {})
    cfg["solver"] = solver
    cfg.setdefault("certificates", {"variational_dirs": 0, "uniqueness": False, "seed": 7})
    cfg.setdefault("output", {"dir": ""})
    return cfg


def parse_norm_config(raw: dict) -> dict:
    return _validated(NormConfigSerializer, raw, "norm config")


# =========================
# Builders
# =========================
def build_grid_from(cfg: dict) -> Grid:
    domain = Domain(tuple(tuple(b) for b in cfg["domain"]["bounds"]))
    return build_grid(domain, cfg["grid"]["nodes"])


def exponent_source(block: dict) -> str:
    return PRESETS[block["preset"]] if "preset" in block else block["expr"]


def node_function(grid: Grid, src: str) -> GridFunction:
    return GridFunction.from_callable(grid, compile_expr(src))


def build_problem(cfg: dict) -> ProblemData:
    grid = build_grid_from(cfg)
    p = make_exponent(grid, exponent_source(cfg["exponent"]))
    phi = node_function(grid, cfg["phi"]["expr"])
    q = make_weight(grid, cfg["q"]["expr"]) if cfg.get("q") else None
    return ProblemData(grid, p, phi, q)


def solver_config(cfg: dict, **overrides) -> SolverConfig:
    fields = {k: v for k, v in cfg["solver"].items() if k in SolverConfig.__dataclass_fields__}
    fields.update(overrides)
    return SolverConfig(**fields)
