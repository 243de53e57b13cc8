"""File output for experiment results: per-step CSV, summary JSON, tables.

The CSV schema is part of the public contract:

    step,t,x0..x{n-1},u0..u{m-1},solve_time_s,sqp_iters,qp_iters,status,stage_cost,violation

Floats are written with 17 significant digits so a read-back reproduces the
in-memory values bit for bit; the summary statistics in the JSON file must be
recomputable from the CSV alone.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from .schemas import CompareReport, ExperimentResult, RunSummary, StepRecord


def _fmt(v: float) -> str:
    return "%.17g" % v


def csv_header(n: int, m: int) -> List[str]:
    cols = ["step", "t"]
    cols += [f"x{i}" for i in range(n)]
    cols += [f"u{j}" for j in range(m)]
    cols += ["solve_time_s", "sqp_iters", "qp_iters", "status", "stage_cost", "violation"]
    return cols


def write_run_csv(path: Path, result: ExperimentResult) -> None:
    if not result.records:
        raise ValueError("refusing to write a CSV with no steps")
    n = len(result.records[0].x)
    m = len(result.records[0].u)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(n, m))
        for r in result.records:
            row = [str(r.step), _fmt(r.t)]
            row += [_fmt(v) for v in r.x]
            row += [_fmt(v) for v in r.u]
            row += [
                _fmt(r.solve_time_s),
                str(r.sqp_iters),
                str(r.qp_iters),
                r.status,
                _fmt(r.stage_cost),
                _fmt(r.violation),
            ]
            writer.writerow(row)


def read_run_csv(path: Path) -> Tuple[List[StepRecord], int, int]:
    """Read a per-step CSV back into records. Returns (records, n, m)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = sum(1 for c in header if c.startswith("x") and c[1:].isdigit())
        m = sum(1 for c in header if c.startswith("u") and c[1:].isdigit())
        if header != csv_header(n, m):
            raise ValueError(f"unrecognized CSV header in {path}")
        records = []
        for row in reader:
            pos = 2
            x = [float(v) for v in row[pos : pos + n]]
            pos += n
            u = [float(v) for v in row[pos : pos + m]]
            pos += m
            records.append(
                StepRecord(
                    step=int(row[0]),
                    t=float(row[1]),
                    x=x,
                    u=u,
                    solve_time_s=float(row[pos]),
                    sqp_iters=int(row[pos + 1]),
                    qp_iters=int(row[pos + 2]),
                    status=row[pos + 3],
                    stage_cost=float(row[pos + 4]),
                    violation=float(row[pos + 5]),
                )
            )
    return records, n, m


def summary_from_records(records: Sequence[StepRecord]) -> RunSummary:
    """Recompute the summary statistics from per-step records.

    This is the consistency oracle for the summary JSON: applied to the rows
    of the CSV it must reproduce the stored summary to within 1e-12.
    """
    tau = np.array([r.solve_time_s for r in records])
    iters = np.array([r.sqp_iters for r in records], dtype=float)
    stage = np.array([r.stage_cost for r in records])
    order = ["converged", "max_iterations", "qp_infeasible", "diverged"]
    rank = lambda s: order.index(s) if s in order else len(order)
    worst = max((r.status for r in records), key=rank)
    return RunSummary(
        total_cost=float(np.sum(stage)),
        tau_mean=float(np.mean(tau)),
        tau_std=float(np.std(tau)),
        tau_max=float(np.max(tau)),
        mean_sqp_iterations=float(np.mean(iters)),
        worst_status=worst,
    )


def write_summary_json(path: Path, summary: RunSummary) -> None:
    with open(path, "w") as fh:
        json.dump(summary.model_dump(), fh, indent=2)
        fh.write("\n")


def read_summary_json(path: Path) -> RunSummary:
    with open(path) as fh:
        return RunSummary(**json.load(fh))


def format_compare_table(report: CompareReport) -> str:
    """Plain-text comparison table. Numbers rounded to 4 decimals."""
    cols = [
        "run",
        "controller",
        "total_cost",
        "cost_gap_%",
        "tau_mean_ms",
        "tau_max_ms",
        "mean_iters",
        "time_red_%",
        "iter_red_%",
        "status",
    ]
    rows = [cols]
    for e in report.entries:
        s = e.summary
        rows.append(
            [
                e.label,
                e.controller,
                f"{s.total_cost:.4f}",
                f"{e.cost_gap_pct:.4f}",
                f"{1e3 * s.tau_mean:.4f}",
                f"{1e3 * s.tau_max:.4f}",
                f"{s.mean_sqp_iterations:.4f}",
                f"{e.time_reduction_pct:.4f}",
                f"{e.iteration_reduction_pct:.4f}",
                s.worst_status,
            ]
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(cols))]
    lines = []
    for idx, r in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(cols))))
    header = f"benchmark: {report.benchmark}   reference: {report.reference}"
    return header + "\n" + "\n".join(lines) + "\n"


def write_compare_report(path_json: Path, path_txt: Path, report: CompareReport) -> None:
    with open(path_json, "w") as fh:
        json.dump(report.model_dump(), fh, indent=2)
        fh.write("\n")
    with open(path_txt, "w") as fh:
        fh.write(report.table)
