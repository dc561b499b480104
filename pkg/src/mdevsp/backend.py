"""Thin MILP backend layer.

Models are assembled incrementally (binary/continuous variables, two-sided
linear rows, a minimize objective) and solved by an interchangeable engine.
The bundled engine is HiGHS via ``scipy.optimize.milp``.  It exposes no
incumbent callbacks, so cutting-plane drivers re-solve after adding rows;
previously returned variable references stay valid across re-solves.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

INF = float("inf")


class BackendError(RuntimeError):
    pass


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"          # incumbent found, limit reached
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time-limit"      # limit reached without incumbent
    UNBOUNDED = "unbounded"
    ERROR = "error"


@dataclass
class SolveResult:
    status: SolveStatus
    objective: float | None
    values: np.ndarray | None
    best_bound: float | None
    wall_time: float

    @property
    def has_solution(self) -> bool:
        return self.values is not None


class HighsModel:
    """One MILP owned by one solve session; rows may be added between solves."""

    supports_incumbent_callbacks = False

    def __init__(self, name: str = "model"):
        self.name = name
        self._names: list[str] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._binary: list[bool] = []
        self._rows: list[tuple[dict[int, float], float, float, str]] = []
        self._objective: dict[int, float] = {}

    # -- building -------------------------------------------------------

    def add_binary(self, name: str) -> int:
        self._names.append(name)
        self._lb.append(0.0)
        self._ub.append(1.0)
        self._binary.append(True)
        return len(self._names) - 1

    def add_continuous(self, name: str, lb: float = -INF, ub: float = INF) -> int:
        self._names.append(name)
        self._lb.append(lb)
        self._ub.append(ub)
        self._binary.append(False)
        return len(self._names) - 1

    def add_constraint(self, coeffs: dict[int, float], lb: float = -INF, ub: float = INF, name: str = ""):
        if lb > ub:
            raise BackendError(f"row {name or len(self._rows)}: lb > ub")
        self._rows.append((dict(coeffs), lb, ub, name))

    def add_eq(self, coeffs, rhs, name=""):
        self.add_constraint(coeffs, rhs, rhs, name)

    def add_le(self, coeffs, rhs, name=""):
        self.add_constraint(coeffs, -INF, rhs, name)

    def add_ge(self, coeffs, rhs, name=""):
        self.add_constraint(coeffs, rhs, INF, name)

    def set_objective(self, coeffs: dict[int, float]):
        self._objective = dict(coeffs)

    @property
    def num_vars(self) -> int:
        return len(self._names)

    @property
    def num_rows(self) -> int:
        return len(self._rows)

    def var_name(self, ref: int) -> str:
        return self._names[ref]

    # -- solving ----------------------------------------------------------

    def solve(self, time_limit: float | None = None, relax: bool = False) -> SolveResult:
        n = self.num_vars
        if n == 0:
            raise BackendError("model has no variables")
        c = np.zeros(n)
        for ref, coef in self._objective.items():
            c[ref] = coef
        integrality = np.array([1 if b and not relax else 0 for b in self._binary])
        bounds = Bounds(np.array(self._lb), np.array(self._ub))
        constraints = []
        if self._rows:
            data, rows, cols = [], [], []
            row_lb = np.empty(len(self._rows))
            row_ub = np.empty(len(self._rows))
            for r, (coeffs, lb, ub, _) in enumerate(self._rows):
                row_lb[r] = lb
                row_ub[r] = ub
                for ref, coef in coeffs.items():
                    rows.append(r)
                    cols.append(ref)
                    data.append(coef)
            mat = sparse.csr_matrix((data, (rows, cols)), shape=(len(self._rows), n))
            constraints = [LinearConstraint(mat, row_lb, row_ub)]
        options = {"mip_rel_gap": 0.0}
        if time_limit is not None:
            options["time_limit"] = max(float(time_limit), 0.01)
        start = time.perf_counter()
        res = milp(c=c, constraints=constraints, integrality=integrality, bounds=bounds, options=options)
        wall = time.perf_counter() - start
        return self._interpret(res, wall)

    @staticmethod
    def _interpret(res, wall: float) -> SolveResult:
        values = None if res.x is None else np.asarray(res.x, dtype=float)
        bound = getattr(res, "mip_dual_bound", None)
        if bound is None and res.status == 0 and res.fun is not None:
            bound = float(res.fun)
        if res.status == 0:
            status = SolveStatus.OPTIMAL
        elif res.status == 1:
            status = SolveStatus.FEASIBLE if values is not None else SolveStatus.TIME_LIMIT
        elif res.status == 2:
            status = SolveStatus.INFEASIBLE
        elif res.status == 3:
            status = SolveStatus.UNBOUNDED
        else:
            status = SolveStatus.ERROR
        objective = float(res.fun) if res.fun is not None else None
        return SolveResult(status, objective, values, bound, wall)

    # -- export ------------------------------------------------------------

    def write_lp(self, path):
        """Write the model in the standard LP text format."""
        path = Path(path)
        out = [f"\\ {self.name}", "Minimize", " obj:" + self._lp_expr(self._objective)]
        out.append("Subject To")
        for r, (coeffs, lb, ub, name) in enumerate(self._rows):
            label = name or f"c{r}"
            if lb == ub:
                out.append(f" {label}:{self._lp_expr(coeffs)} = {lb:.12g}")
            else:
                if ub < INF:
                    out.append(f" {label}_u:{self._lp_expr(coeffs)} <= {ub:.12g}")
                if lb > -INF:
                    out.append(f" {label}_l:{self._lp_expr(coeffs)} >= {lb:.12g}")
        out.append("Bounds")
        for ref, name in enumerate(self._names):
            if self._binary[ref]:
                continue
            lb, ub = self._lb[ref], self._ub[ref]
            if lb == ub:
                out.append(f" {name} = {lb:.12g}")
            else:
                lo = f"{lb:.12g}" if lb > -INF else "-inf"
                hi = f"{ub:.12g}" if ub < INF else "+inf"
                out.append(f" {lo} <= {name} <= {hi}")
        binaries = [self._names[ref] for ref in range(self.num_vars) if self._binary[ref]]
        if binaries:
            out.append("Binaries")
            out.append(" " + " ".join(binaries))
        out.append("End")
        path.write_text("\n".join(out) + "\n")

    def _lp_expr(self, coeffs: dict[int, float]) -> str:
        if not coeffs:
            return " 0 " + self._names[0]
        parts = []
        for ref in sorted(coeffs):
            coef = coeffs[ref]
            if coef == 0:
                continue
            sign = "+" if coef >= 0 else "-"
            parts.append(f" {sign} {abs(coef):.12g} {self._names[ref]}")
        return "".join(parts) if parts else " 0 " + self._names[0]


class HighsBackend:
    """Factory for HiGHS-backed models."""

    name = "highs"
    supports_incumbent_callbacks = False

    def new_model(self, name: str = "model") -> HighsModel:
        return HighsModel(name)


_BACKENDS = {"highs": HighsBackend}

BACKEND_ENV_VAR = "MDEVSP_BACKEND"


def get_backend(name: str | None = None):
    """Resolve a backend by name, falling back to the environment variable."""
    name = name or os.environ.get(BACKEND_ENV_VAR, "highs")
    try:
        return _BACKENDS[name.lower()]()
    except KeyError:
        raise BackendError(f"unknown backend {name!r}; available: {sorted(_BACKENDS)}") from None
