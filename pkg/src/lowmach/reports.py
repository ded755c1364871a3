"""Report containers and their CSV, JSON and SVG writers.

CSV files carry only deterministic content (floats written with 17
significant digits), so re-running a driver with the same config yields
byte-identical tables.  Wall-clock timings live in the JSON summary.
"""

from __future__ import annotations

import csv
import io
import json
import math
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__


@dataclass
class Table:
    """Fixed column order plus rows of numbers or strings."""

    columns: tuple[str, ...]
    rows: list[tuple[Any, ...]] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} entries, table has {len(self.columns)} columns")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list[Any]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


@dataclass(frozen=True)
class Check:
    """One pass/fail property with its measured value and threshold."""

    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: value={self.value:.6g} threshold={self.threshold:.6g} {self.detail}".rstrip()


@dataclass(frozen=True)
class PlotSpec:
    """Line plot: ``series`` maps a label to ``(x, y)`` sequences."""

    name: str
    title: str
    xlabel: str
    ylabel: str
    series: dict[str, tuple[Sequence[float], Sequence[float]]]
    logx: bool = False
    logy: bool = False


@dataclass
class ExperimentReport:
    name: str
    checks: list[Check] = field(default_factory=list)
    tables: dict[str, Table] = field(default_factory=dict)
    plots: list[PlotSpec] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "%.17g" % value
    if hasattr(value, "dtype"):
        return format_value(value.item())
    return str(value)


def csv_text(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _parse_cell(text: str) -> Any:
    if text == "-0":
        # a negative zero float; int() would drop the sign
        return -0.0
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_csv(text: str) -> Table:
    """Inverse of :func:`csv_text`; numeric cells become ``int`` or ``float``."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ValueError("empty CSV text")
    table = Table(tuple(rows[0]))
    for r in rows[1:]:
        table.add(*(_parse_cell(c) for c in r))
    return table


def build_stamp() -> str:
    """``git describe``-style identifier of the source tree, if available."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
        return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        return __version__


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "dtype"):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def summary_json(report: ExperimentReport, config: dict[str, Any] | None = None) -> dict[str, Any]:
    return _jsonable(
        {
            "experiment": report.name,
            "passed": report.passed,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "value": c.value,
                    "threshold": c.threshold,
                    "detail": c.detail,
                }
                for c in report.checks
            ],
            "summary": report.summary,
            "config": config if config is not None else {},
            "build": build_stamp(),
            "timings": report.timings,
        }
    )


def write_svg(plot: PlotSpec, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "lowmach", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for label, (x, y) in plot.series.items():
            ax.plot(list(x), list(y), marker="o" if len(x) < 20 else None, label=label)
        if plot.logx:
            ax.set_xscale("log")
        if plot.logy:
            ax.set_yscale("log")
        ax.set_xlabel(plot.xlabel)
        ax.set_ylabel(plot.ylabel)
        ax.set_title(plot.title)
        if len(plot.series) > 1:
            ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def write_report(
    report: ExperimentReport,
    directory: str | Path,
    formats: Iterable[str] = ("csv", "json", "svg"),
    config: dict[str, Any] | None = None,
) -> list[Path]:
    """Write the report's tables, summary and plots; return the created paths.

    Raises:
        OSError: If ``directory`` cannot be created or written.
        ValueError: For an unknown format name.
    """
    formats = tuple(formats)
    unknown = set(formats) - {"csv", "json", "svg"}
    if unknown:
        raise ValueError(f"unknown report formats {sorted(unknown)}")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "csv" in formats:
        for key, table in report.tables.items():
            path = out / f"{report.name}_{key}.csv"
            path.write_text(csv_text(table))
            written.append(path)
    if "json" in formats:
        path = out / f"{report.name}_summary.json"
        path.write_text(json.dumps(summary_json(report, config), indent=2, sort_keys=True) + "\n")
        written.append(path)
    if "svg" in formats:
        for plot in report.plots:
            path = out / f"{report.name}_{plot.name}.svg"
            write_svg(plot, path)
            written.append(path)
    return written
