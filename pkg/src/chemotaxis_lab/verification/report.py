"""Report containers for inequality checks and the discontinuity experiment.

Every measured inequality is stored as ``lhs <= rhs``; its slack is
``rhs / lhs`` so a slack of at least one means the inequality holds.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return value


def params_key(params: dict) -> str:
    """Canonical one-line JSON for a parameter dict (sorted keys)."""
    return json.dumps(_jsonable(params), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class Measurement:
    """One instance of ``lhs <= rhs``."""

    params: dict
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        if self.lhs == 0.0:
            return math.inf
        return self.rhs / self.lhs


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares slope of log2(y) against log2(x) with an acceptance band.

    Attributes
    ----------
    name : str
        Trend label.
    slope, stderr : float
        Fitted slope and its standard error.
    lower, upper : float
        Accepted slope interval (either may be infinite).
    max_stderr : float
        Largest admissible standard error.
    x, y : tuple of float
        The fitted points.
    """

    name: str
    slope: float
    stderr: float
    lower: float
    upper: float
    max_stderr: float
    x: tuple = ()
    y: tuple = ()

    @property
    def ok(self) -> bool:
        return (self.lower <= self.slope <= self.upper) and self.stderr <= self.max_stderr


def fit_exponent(name: str, x, y, target: float | None = None, band: float = 0.05,
                 lower: float | None = None, upper: float | None = None) -> ExponentFit:
    """Fit ``y ~ x^slope`` in log2 space.

    Either give ``target`` and ``band`` (two-sided band ``target +- band``)
    or explicit ``lower``/``upper`` limits.  The standard error must not
    exceed half of ``band``.

    Raises
    ------
    ValueError
        With fewer than three points or non-positive data.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError(f"trend fit '{name}' needs at least 3 points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError(f"trend fit '{name}' needs positive data")
    res = stats.linregress(np.log2(x), np.log2(y))
    if target is not None:
        lo, hi = target - band, target + band
    else:
        lo = -math.inf if lower is None else lower
        hi = math.inf if upper is None else upper
    return ExponentFit(name, float(res.slope), float(res.stderr), lo, hi, 0.5 * band,
                       tuple(float(v) for v in x), tuple(float(v) for v in y))


@dataclass
class CheckReport:
    """Outcome of one numerical inequality check.

    Attributes
    ----------
    check_id : str
        Identifier used by the command line.
    measured : list of Measurement
        Every measured inequality.
    fits : list of ExponentFit
        Trend fits, if any.
    tolerance : float
        A measurement passes when its slack is at least ``1 - tolerance``.
    constants : dict
        Measured corpus constants and other headline numbers.
    notes : list of str
        Free-form remarks (skipped cases, vacuous passes).
    """

    check_id: str
    measured: list = field(default_factory=list)
    fits: list = field(default_factory=list)
    tolerance: float = 0.0
    constants: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def add(self, params: dict, lhs: float, rhs: float) -> Measurement:
        m = Measurement(dict(params), float(lhs), float(rhs))
        self.measured.append(m)
        return m

    @property
    def failures(self) -> list:
        return [m for m in self.measured if not m.slack >= 1.0 - self.tolerance]

    @property
    def passed(self) -> bool:
        return not self.failures and all(f.ok for f in self.fits)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def worst_slack(self) -> float:
        if not self.measured:
            return math.inf
        return min(m.slack for m in self.measured)

    def csv_rows(self) -> list[list]:
        return [[self.check_id, i, params_key(m.params), repr(m.lhs), repr(m.rhs),
                 repr(m.slack)] for i, m in enumerate(self.measured)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check_id", "index", "params", "lhs", "rhs", "slack"])
        w.writerows(self.csv_rows())
        return buf.getvalue()

    def summary(self) -> dict:
        return _jsonable({
            "check_id": self.check_id,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "measurements": len(self.measured),
            "failures": len(self.failures),
            "worst_slack": self.worst_slack,
            "constants": self.constants,
            "fits": [{"name": f.name, "slope": f.slope, "stderr": f.stderr,
                      "lower": f.lower, "upper": f.upper, "ok": f.ok} for f in self.fits],
            "notes": self.notes,
        })

    def series(self) -> dict:
        return {f.name: (list(f.x), list(f.y)) for f in self.fits}


@dataclass
class RunRecord:
    """One run of the discontinuity experiment.

    Attributes
    ----------
    params : dict
        Family parameters of the run.
    epsilon : float
        Time parameter; the run is evaluated at ``epsilon * 2^{-2m}``.
    data_norm_u, data_norm_v : float
        Critical Besov norms of the data.
    solution_norm : float
        Critical norm of u at the evaluation time (full solver).
    u21_shell_norm : float
        Norm of U21 restricted to the shells K.
    ladder_norms : dict
        Shell-restricted and full norms of the ladder rungs.
    defect : float
        ||u_solver - u_ladder||_2 / ||U21||_2 at the evaluation time.
    excluded : str
        Empty when the run counts toward the verdict, else the reason.
    """

    params: dict
    epsilon: float
    data_norm_u: float
    data_norm_v: float
    solution_norm: float
    u21_shell_norm: float
    ladder_norms: dict = field(default_factory=dict)
    defect: float = 0.0
    excluded: str = ""

    @property
    def lower_bound(self) -> float:
        """Triangle-inequality bound ||U2||_K - ||U1||_K - ||U3||_K."""
        ln = self.ladder_norms
        return ln["U2_K"] - ln["U1_K"] - ln["U3_K"]

    def row(self) -> dict:
        out = {"params": params_key(self.params), "epsilon": self.epsilon,
               "data_norm_u": self.data_norm_u, "data_norm_v": self.data_norm_v,
               "solution_norm": self.solution_norm, "u21_shell_norm": self.u21_shell_norm,
               "defect": self.defect, "excluded": self.excluded}
        for k in sorted(self.ladder_norms):
            out[k] = self.ladder_norms[k]
        return out


@dataclass
class ExperimentReport:
    """Records, trend fits and verdict of the discontinuity experiment."""

    records: list = field(default_factory=list)
    epsilon_records: list = field(default_factory=list)
    fits: list = field(default_factory=list)
    measured: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    check_id: str = "experiment"

    def add(self, params: dict, lhs: float, rhs: float) -> Measurement:
        m = Measurement(dict(params), float(lhs), float(rhs))
        self.measured.append(m)
        return m

    @property
    def included(self) -> list:
        return [r for r in self.records if not r.excluded]

    @property
    def passed(self) -> bool:
        return (len(self.included) >= 3 and all(m.slack >= 1.0 for m in self.measured)
                and all(f.ok for f in self.fits))

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_csv(self) -> str:
        rows = [dict(r.row(), sweep="count") for r in self.records]
        rows += [dict(r.row(), sweep="epsilon") for r in self.epsilon_records]
        keys = sorted({k for r in rows for k in r})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([repr(r[k]) if isinstance(r.get(k), float) else r.get(k, "")
                        for k in keys])
        return buf.getvalue()

    def summary(self) -> dict:
        return _jsonable({
            "check_id": self.check_id,
            "verdict": self.verdict,
            "runs": len(self.records),
            "included": len(self.included),
            "constants": self.constants,
            "fits": [{"name": f.name, "slope": f.slope, "stderr": f.stderr,
                      "lower": f.lower, "upper": f.upper, "ok": f.ok} for f in self.fits],
            "conditions": [{"params": m.params, "lhs": m.lhs, "rhs": m.rhs, "slack": m.slack}
                           for m in self.measured],
            "notes": self.notes,
        })

    def series(self) -> dict:
        inc = self.included
        counts = [len(r.params["K"]) for r in inc]
        out = {
            "data_norm vs count": (counts, [r.data_norm_u for r in inc]),
            "solution_norm vs count": (counts, [r.solution_norm for r in inc]),
        }
        if self.epsilon_records:
            eps = [r.epsilon for r in self.epsilon_records]
            out["lower_bound vs epsilon"] = (eps, [r.lower_bound for r in self.epsilon_records])
            out["U22 vs epsilon"] = (eps, [r.ladder_norms["U22"] for r in self.epsilon_records])
        return out
