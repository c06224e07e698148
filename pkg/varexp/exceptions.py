# varexp/exceptions.py
"""
Error hierarchy of the varexp app.

Every library failure derives from VarExpError. Argument-style failures also
derive from ValueError. The management commands map these to exit codes
(see varexp/management/commands/).
"""

from __future__ import annotations

from typing import Dict, List, Optional


class VarExpError(Exception):
    """Base class of every varexp failure."""


class GridError(VarExpError, ValueError):
    """Bad domain or grid, mismatched grids, or a grid too coarse for a construction."""


class ExponentError(VarExpError, ValueError):
    """Exponent samples that are not finite reals > 1."""


class ExprSyntaxError(VarExpError, ValueError):
    def __init__(self, message: str, offset: int, expected: str = ""):
        self.offset = offset
        self.expected = expected
        detail = f"{message} at offset {offset}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class ExprDomainError(VarExpError, ValueError):
    def __init__(self, kind: str, subexpression: str):
        self.kind = kind
        self.subexpression = subexpression
        super().__init__(f"{kind} in `{subexpression}`")


class SaturatedEnergyError(VarExpError):
    """A modular or energy is +INF where a finite value is required."""


class ProblemDataError(VarExpError, ValueError):
    """ProblemData invariants violated (q < 0, rho_{1,p}(phi) infinite, ...)."""


class ConfigError(VarExpError, ValueError):
    """Run config failed validation; `fields` maps field paths to messages."""

    def __init__(self, message: str, fields: Optional[Dict[str, List[str]]] = None):
        self.fields = fields or {}
        lines = [message] + [f"  {path}: {'; '.join(msgs)}" for path, msgs in sorted(self.fields.items())]
        super().__init__("\n".join(lines))


class ZeroModularError(VarExpError, ValueError):
    """A ratio or normalization needs a strictly positive modular."""


class NotConvergedError(VarExpError):
    """A solve that had to converge stopped on max_iters or a stalled line search."""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)
