"""Render stored experiments as performance, energy and validation tables.

Tables are plain header + string rows so that rendering is a pure function
of the entry; exporters turn them into CSV (comma, ``.`` decimals, LF) or
markdown.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .errors import EmptyExperiment
from .harness import ExperimentPoint
from .repository import ExperimentEntry

SKIPPED_MARKER = "skipped (divisibility)"


@dataclass
class Table:
    header: list[str]
    rows: list[list[str]] = field(default_factory=list)


def _sorted_points(entry: ExperimentEntry) -> list[ExperimentPoint]:
    if not entry.points:
        raise EmptyExperiment(f"experiment {entry.experiment_id!r} has no points")
    return sorted(entry.points, key=lambda p: (p.config.kernel.name, p.config.n, p.config.tile.s_j,
                                               p.config.tile.s_i, p.point_id, p.replay_counter))


def _lws(p: ExperimentPoint) -> str:
    return f"{p.config.tile.s_j}x{p.config.tile.s_i}"


def _max_reps(points) -> int:
    return max(max(len(p.gflops_per_rep), p.config.repetitions) for p in points)


def render_order_table(entry: ExperimentEntry) -> Table:
    points = _sorted_points(entry)
    reps = _max_reps(points)
    header = ["kernel", "lws", "order"] + [f"rep{r}" for r in range(reps)] + ["mean", "std"]
    table = Table(header)
    for p in points:
        row = [p.config.kernel.name, _lws(p), str(p.config.n)]
        if p.skipped:
            row += [""] * reps + [SKIPPED_MARKER, ""]
        else:
            values = [f"{v:.3f}" for v in p.gflops_per_rep]
            row += values + [""] * (reps - len(values))
            row.append("" if p.mean is None else f"{p.mean:.5f}")
            row.append("" if p.std is None else f"{p.std:.6f}")
        table.rows.append(row)
    return table


def render_energy_table(entry: ExperimentEntry) -> Table:
    """Rows are (order, lws); one column per kernel and channel.

    A cell is the mean estimated Joules over every repetition of every
    record (original and replays) for that kernel, order and shape.
    """
    points = _sorted_points(entry)
    kernels = sorted({p.config.kernel.name for p in points})
    channels = sorted({e.channel for p in points for rep in p.energy for e in rep})
    if channels:
        columns = [(k, ch) for k in kernels for ch in channels]
        labels = [f"{k} {ch} J" for k, ch in columns]
    else:
        columns = [(k, None) for k in kernels]
        labels = [f"{k} J" for k in kernels]

    cells: dict[tuple, list[float]] = {}
    row_keys = set()
    for p in points:
        key = (p.config.n, p.config.tile.s_j, p.config.tile.s_i)
        row_keys.add(key)
        for rep in p.energy:
            for e in rep:
                cells.setdefault((key, p.config.kernel.name, e.channel), []).append(e.joules)

    table = Table(["order", "lws"] + labels)
    for key in sorted(row_keys):
        n, s_j, s_i = key
        row = [str(n), f"{s_j}x{s_i}"]
        for kernel, ch in columns:
            values = cells.get((key, kernel, ch))
            row.append(f"{sum(values) / len(values):.6f}" if values else "")
        table.rows.append(row)
    return table


def render_validation_table(entry: ExperimentEntry) -> Table:
    points = _sorted_points(entry)
    reps = _max_reps(points)
    header = ["kernel", "lws", "order"]
    for r in range(reps):
        header += [f"max_abs_diff{r}", f"match{r}"]
    table = Table(header)
    for p in points:
        row = [p.config.kernel.name, _lws(p), str(p.config.n)]
        cells = []
        if p.skipped:
            cells = [SKIPPED_MARKER, ""]
        for v in p.validations:
            cells += [f"{v.max_abs_diff:.6e}", "1" if v.match else "0"]
        table.rows.append(row + cells + [""] * (2 * reps - len(cells)))
    return table


def chart_data(entry: ExperimentEntry) -> Table:
    """Chart-ready (label, mean, std) rows for bar plots with error bars."""
    table = Table(["label", "mean", "std"])
    for p in _sorted_points(entry):
        if p.skipped:
            continue
        label = f"{p.config.kernel.name} n={p.config.n} lws={_lws(p)}"
        if p.replay_counter:
            label += f" r{p.replay_counter}"
        table.rows.append([label, "" if p.mean is None else repr(p.mean),
                           "" if p.std is None else repr(p.std)])
    return table


def export_csv(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.header)
    writer.writerows(table.rows)
    return buf.getvalue()


def parse_csv(text: str) -> Table:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return Table([])
    return Table(rows[0], rows[1:])


def export_markdown(table: Table) -> str:
    def line(cells):
        return "| " + " | ".join(c.replace("|", "\\|") for c in cells) + " |"

    out = [line(table.header), "|" + "|".join("---" for _ in table.header) + "|"]
    out += [line(row) for row in table.rows]
    return "\n".join(out) + "\n"


TABLES = {
    "perf": render_order_table,
    "energy": render_energy_table,
    "validation": render_validation_table,
    "chart": chart_data,
}
