"""Run reports: named check rows, error norms, fitted slopes and CSV output."""

from __future__ import annotations

import csv
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class Row:
    """One report line.  ``passed`` is None for descriptive rows."""

    name: str
    value: float
    passed: bool | None = None
    detail: str = ""

    def format(self) -> str:
        status = {True: "PASS", False: "FAIL", None: "INFO"}[self.passed]
        text = f"{status}  {self.name}: {_fmt(self.value)}"
        return f"{text}  ({self.detail})" if self.detail else text


@dataclass
class Slope:
    name: str
    steps: list[float]
    errors: list[float]
    value: float


@dataclass
class RunReport:
    kind: str
    params: dict[str, object] = field(default_factory=dict)
    rows: list[Row] = field(default_factory=list)
    errors: list[tuple[str, str, float]] = field(default_factory=list)
    slopes: list[Slope] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def check(self, name: str, value: float, passed: bool | None, detail: str = "") -> Row:
        row = Row(name, float(value), None if passed is None else bool(passed), detail)
        self.rows.append(row)
        return row

    def info(self, name: str, value: float, detail: str = "") -> Row:
        return self.check(name, value, None, detail)

    def error(self, run_id: str, norm: str, value: float) -> None:
        self.errors.append((run_id, norm, float(value)))

    def slope(self, name: str, steps, errors, value: float) -> Slope:
        s = Slope(name, [float(v) for v in steps], [float(v) for v in errors], float(value))
        self.slopes.append(s)
        return s

    def extend(self, other: "RunReport") -> None:
        self.rows += other.rows
        self.errors += other.errors
        self.slopes += other.slopes
        self.timings.update(other.timings)

    @contextmanager
    def timed(self, label: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[label] = time.perf_counter() - start

    def row(self, name: str) -> Row:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def ok(self) -> bool:
        return all(r.passed is not False for r in self.rows)

    def render(self, with_timings: bool = False) -> str:
        lines = [f"# experiment: {self.kind}"]
        lines += [f"# {k} = {v}" for k, v in self.params.items()]
        lines += [r.format() for r in self.rows]
        for s in self.slopes:
            pairs = ", ".join(f"({_fmt(h)}, {_fmt(e)})" for h, e in zip(s.steps, s.errors))
            lines.append(f"slope {s.name} = {s.value:.4f} from {pairs}")
        if with_timings:
            lines += [f"time {k}: {v:.2f} s" for k, v in self.timings.items()]
        lines.append(f"overall: {'PASS' if self.ok else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path) -> None:
        """Write ``report.txt`` and ``errors.csv`` (timings go to the log only, for determinism)."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(self.render())
        with open(out / "errors.csv", "w", newline="") as fh:
            write_header(fh, self.params)
            w = csv.writer(fh)
            w.writerow(["run_id", "norm", "value"])
            for run_id, norm, value in self.errors:
                w.writerow([run_id, norm, repr(value)])


def write_header(fh, params: dict) -> None:
    for k, v in params.items():
        fh.write(f"# {k} = {v}\n")


def _fmt(v: float) -> str:
    if isinstance(v, float) and (math.isinf(v) or math.isnan(v)):
        return str(v)
    return f"{v:.6g}"
