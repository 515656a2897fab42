"""Writing reports, plot series and manifests to disk."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml

import chemotaxis_lab
from chemotaxis_lab.errors import IoError


@dataclass
class TableReport:
    """Rows and a summary for commands that are not checks."""

    check_id: str
    rows: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    series_data: dict = field(default_factory=dict)
    passed: bool = True

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_csv(self) -> str:
        keys = []
        for r in self.rows:
            keys += [k for k in r if k not in keys]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for r in self.rows:
            w.writerow([_cell(r.get(k, "")) for k in keys])
        return buf.getvalue()

    def summary(self) -> dict:
        return _jsonable({"check_id": self.check_id, "verdict": self.verdict,
                          "rows": len(self.rows), "constants": self.constants})

    def series(self) -> dict:
        return self.series_data


def _cell(v):
    return repr(v) if isinstance(v, float) else v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def versions() -> dict:
    return {"chemotaxis_lab": chemotaxis_lab.__version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "pyyaml": yaml.__version__}


def slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_").lower()


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def emit_report(report, formats, out_dir: str | Path, manifest: dict | None = None) -> list[Path]:
    """Write a report as CSV and/or JSON plus summary, series and manifest.

    Parameters
    ----------
    report : CheckReport, ExperimentReport or TableReport
        Anything with ``to_csv()``, ``summary()`` and ``series()``.
    formats : iterable of {"csv", "json"}
        Row formats to write.
    out_dir : path
        Target directory, created when missing.
    manifest : dict, optional
        Reproduction record written as ``manifest.json``.

    Returns
    -------
    list of Path
        Written files, in writing order.

    Raises
    ------
    IoError
        When a file cannot be written.
    """
    out = Path(out_dir)
    written = []
    text = report.to_csv()
    if "csv" in formats:
        written.append(_write(out / "report.csv", text))
    if "json" in formats:
        reader = csv.reader(io.StringIO(text))
        header = next(reader, [])
        rows = [dict(zip(header, row)) for row in reader]
        written.append(_write(out / "report.json", json.dumps(rows, indent=1) + "\n"))
    summary = report.summary()
    written.append(_write(out / "summary.json",
                          json.dumps(summary, indent=2, sort_keys=True) + "\n"))
    for name, (xs, ys) in sorted(report.series().items()):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y"])
        w.writerows([[repr(float(x)), repr(float(y))] for x, y in zip(xs, ys)])
        written.append(_write(out / "series" / f"{slug(name)}.csv", buf.getvalue()))
    if manifest is not None:
        record = dict(manifest)
        record["files"] = sorted(str(p.relative_to(out)) for p in written)
        written.append(_write(out / "manifest.json",
                              json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n"))
    return written
