"""Delimited and markdown output for scenario results.

CSV files use RFC-4180 quoting with shortest-roundtrip float formatting, so
repeated runs with one seed produce byte-identical files; the markdown
summary carries verdicts, warnings and figure links.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..lyapunov import DissipationReport

__all__ = [
    "BoundReport",
    "ScenarioResult",
    "write_csv",
    "read_csv",
    "dissipation_rows",
    "classify_margins",
    "write_summary",
    "hash_csv_outputs",
]

DISSIPATION_HEADER = ["t", "x_norm", "u_norm", "vdot", "rhs", "margin", "tol"]
BOUND_HEADER = ["run", "t", "realized", "bound", "margin", "tol"]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


def column(rows: list[list[str]], header: list[str], name: str,
           as_float: bool = True) -> np.ndarray:
    i = header.index(name)
    vals = [row[i] for row in rows]
    return np.array([float(v) for v in vals]) if as_float else np.array(vals)


def classify_margins(margins: np.ndarray, tols: np.ndarray,
                     blow_up: bool = False) -> str:
    if blow_up:
        return "blow-up"
    return "violated" if (margins < -tols).any() else "dominates"


@dataclass
class BoundReport:
    """Realized norms of one run against a claimed bound: per-time margins
    (downsampled, plus the worst and final steps), a classification and the
    violation count over the full resolution."""

    run: str
    classification: str  # dominates | violated | blow-up
    worst_margin: float
    n_steps: int
    n_violations: int
    rows: list[list] = field(default_factory=list)  # BOUND_HEADER layout
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.classification != "violated"

    @classmethod
    def from_series(cls, run: str, times: np.ndarray, realized: np.ndarray,
                    bound: np.ndarray, tols: np.ndarray, record_every: int,
                    blow_up: bool = False, meta: Optional[dict] = None) -> "BoundReport":
        margins = bound - realized
        keep = set(range(0, len(times), max(1, record_every)))
        keep.add(int(np.argmin(margins)))
        keep.add(len(times) - 1)
        rows = [[run, times[k], realized[k], bound[k], margins[k], tols[k]]
                for k in sorted(keep)]
        return cls(run=run,
                   classification=classify_margins(margins, tols, blow_up),
                   worst_margin=float(np.min(margins)), n_steps=len(times) - 1,
                   n_violations=int(np.sum(margins < -tols)), rows=rows,
                   meta=meta or {})


def dissipation_rows(report: DissipationReport, prefix: Sequence = ()) -> list[list]:
    return [[*prefix, r.t, r.x_norm, r.u_norm, r.vdot, r.rhs, r.margin, r.tol]
            for r in report.records]


@dataclass
class ScenarioResult:
    name: str
    kind: str
    passed: bool
    summary: str
    details: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    csv_files: list[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def verdict(self) -> str:
        if self.error:
            return "ERROR"
        return "pass" if self.passed else "FAIL"


def write_summary(results: Sequence[ScenarioResult], out: Path, seed: int,
                  figures: Sequence[Path] = ()) -> Path:
    """Cross-linked markdown report for a batch of scenario runs."""
    lines = ["# Stability certification summary", ""]
    lines.append(f"Seed: `{seed}`")
    lines.append("")
    lines.append("| scenario | kind | verdict | warnings |")
    lines.append("|---|---|---|---|")
    for r in results:
        lines.append(f"| {r.name} | {r.kind} | {r.verdict} | {len(r.warnings)} |")
    lines.append("")
    for r in results:
        lines.append(f"## {r.name}")
        lines.append("")
        lines.append(f"**{r.verdict}** - {r.summary}")
        lines.append("")
        if r.error:
            lines.append(f"Error: `{r.error}`")
            lines.append("")
        for d in r.details:
            lines.append(f"- {d}")
        if r.details:
            lines.append("")
        for w in r.warnings:
            lines.append(f"- warning: {w}")
        if r.warnings:
            lines.append("")
        if r.csv_files:
            links = ", ".join(f"[{name}]({name})" for name in sorted(r.csv_files))
            lines.append(f"Data: {links}")
            lines.append("")
        fig_matches = [f for f in figures if f.stem.startswith(r.name)]
        for f in fig_matches:
            rel = f.relative_to(out) if f.is_relative_to(out) else f
            lines.append(f"![{f.stem}]({rel})")
            lines.append("")
    path = out / "summary.md"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines))
    return path


def hash_csv_outputs(out: Path) -> dict[str, str]:
    """sha256 of every CSV under the output directory, keyed by relative path."""
    hashes = {}
    for path in sorted(out.rglob("*.csv")):
        hashes[str(path.relative_to(out))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return hashes
