# varexp/records.py
"""
Artifacts written by the management commands.

  - solution.csv : x[,y],value  one row per node, C order of the node lattice
  - trace.csv    : iteration,energy,grad_norm,cauchy
  - run.json / report.json : {"version", "payload", "envelope"}

Everything that depends on wall-clock time lives in "envelope"; "payload" is a
pure function of the config and seed, so two runs byte-compare on it.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from django.core.serializers.json import DjangoJSONEncoder
from django.utils import timezone

from varexp import __version__
from varexp.grid import GridFunction
from varexp.solver import SolverReport


def _num(v: float) -> str:
    return repr(float(v))


def jsonable(obj: Any) -> Any:
    """Non-finite floats -> 'INF' / '-INF' / 'NaN'; containers recursively."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "item"):  # numpy scalars
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "NaN" if math.isnan(obj) else ("INF" if obj > 0 else "-INF")
    if isinstance(obj, float):
        return float(obj)
    return obj


_NON_FINITE = {"INF": math.inf, "-INF": -math.inf, "NaN": math.nan}


def from_jsonable(obj: Any) -> Any:
    """Inverse of jsonable: the "INF" / "-INF" / "NaN" markers back to floats."""
    if isinstance(obj, dict):
        return {k: from_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [from_jsonable(v) for v in obj]
    if isinstance(obj, str):
        return _NON_FINITE.get(obj, obj)
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, cls=DjangoJSONEncoder) + "\n"


def write_solution_csv(path: Path, u: GridFunction) -> Path:
    grid = u.grid
    coords = [c.ravel() for c in grid.nodes]
    header = ["x", "y"][: grid.dim] + ["value"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, value in enumerate(u.values.ravel()):
            w.writerow([_num(c[i]) for c in coords] + [_num(value)])
    return path


def write_trace_csv(path: Path, report: SolverReport) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "energy", "grad_norm", "cauchy"])
        for i, energy in enumerate(report.energy_trace):
            grad = report.grad_norm_trace[i] if i < len(report.grad_norm_trace) else math.nan
            cauchy = report.cauchy_trace[i - 1] if 0 < i <= len(report.cauchy_trace) else ""
            w.writerow([i, _num(energy), _num(grad), _num(cauchy) if cauchy != "" else ""])
    return path


@dataclass
class RunRecord:
    config: Dict[str, Any]
    solver: Dict[str, Any]
    certificates: Dict[str, Any] = field(default_factory=dict)
    started_at: Optional[str] = None
    finished_at: Optional[str] = None
    version: str = __version__

    def to_doc(self) -> dict:
        return {
            "version": self.version,
            "payload": jsonable({"config": self.config, "solver": self.solver, "certificates": self.certificates}),
            "envelope": {"started_at": self.started_at, "finished_at": self.finished_at},
        }

    def to_json(self) -> str:
        return dumps(self.to_doc())

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        doc = json.loads(text)
        payload = doc["payload"]
        env = doc.get("envelope") or {}
        return cls(
            config=payload["config"],
            solver=from_jsonable(payload["solver"]),
            certificates=from_jsonable(payload.get("certificates", {})),
            started_at=env.get("started_at"),
            finished_at=env.get("finished_at"),
            version=doc["version"],
        )


def now_iso() -> str:
    return timezone.now().isoformat()


def write_report_json(path: Path, payload: dict, started_at: str) -> Path:
    doc = {
        "version": __version__,
        "payload": jsonable(payload),
        "envelope": {"started_at": started_at, "finished_at": now_iso()},
    }
    Path(path).write_text(dumps(doc), encoding="utf-8")
    return path
