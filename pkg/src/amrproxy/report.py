"""CSV tables, comparison reports and the chart views built from them."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass

from . import svg
from .errors import InputError, SeriesLengthMismatch
from .generator import GeneratorSpec
from .model import FitResult, geometric_sum
from .scan import AXES, CSV_FIELDS, SizeTable, aggregate, normalize_axes, per_dump_totals, read_csv

SERIES_FIELDS = ("dump", "plt_step", "bytes", "cumulative_bytes")
COMPARE_FIELDS = ("dump", "observed_cumulative_bytes", "modeled_cumulative_bytes",
                  "relative_error")


def rows_to_csv(fields, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        w.writerow(["" if row[k] is None else row[k] for k in fields])
    return buf.getvalue()


def csv_to_rows(text: str):
    reader = csv.DictReader(io.StringIO(text))
    return list(reader.fieldnames or ()), list(reader)


# -- size table views ---------------------------------------------------------

def aggregate_rows(table: SizeTable, axes, ncells: int | None = None):
    """Aggregated table as (fields, rows).

    When ``step`` is among the axes each group also gets a running
    ``cumulative_bytes`` and, given ``ncells``, the matching
    ``cumulative_cells`` (base-level cells times dumps so far).
    """
    axes = normalize_axes(axes)
    fields = list(axes) + ["bytes"]
    with_step = "step" in axes
    if with_step:
        fields.append("cumulative_bytes")
        if ncells is not None:
            fields.append("cumulative_cells")
    running = defaultdict(int)
    rows = []
    # aggregate() orders keys step-first, so each group's running sum advances in dump order
    for key, total in aggregate(table, axes):
        row = dict(zip(axes, key))
        row["bytes"] = total
        if with_step:
            group = tuple(v for a, v in zip(axes, key) if a != "step")
            running[group] += total
            row["cumulative_bytes"] = running[group]
            if ncells is not None:
                row["cumulative_cells"] = (row["step"] + 1) * ncells
        rows.append(row)
    return fields, rows


def aggregate_svg(csv_text: str, title: str = "") -> str:
    """Chart for an aggregated CSV, chosen by its columns.

    task present: bytes per task, one series per remaining group.
    step present: cumulative bytes against cumulative cells (or dump), one
    series per level. Otherwise bytes per level (or the grand total).
    """
    fields, rows = csv_to_rows(csv_text)

    def num(v):
        return float(v) if v != "" else -1.0

    def group_label(row, cols):
        parts = []
        for c in cols:
            v = row[c]
            if c == "level":
                parts.append("meta" if v == "" else f"L{v}")
            elif c == "step":
                parts.append(f"dump {v}")
        return " ".join(parts) or "all"

    if "task" in fields:
        rest = [c for c in ("level", "step") if c in fields]
        groups = defaultdict(lambda: ([], []))
        for r in rows:
            if r["task"] == "":
                continue
            xs, ys = groups[group_label(r, rest)]
            xs.append(num(r["task"]))
            ys.append(num(r["bytes"]))
        series = [(k, xs, ys) for k, (xs, ys) in groups.items()]
        return svg.chart(series, title or "Output per task", "task ID", "bytes", points=True)

    if "step" in fields:
        rest = [c for c in ("level",) if c in fields]
        xcol = "cumulative_cells" if "cumulative_cells" in fields else "step"
        groups = defaultdict(lambda: ([], []))
        for r in rows:
            xs, ys = groups[group_label(r, rest)]
            xs.append(num(r[xcol]))
            ys.append(num(r["cumulative_bytes"]))
        series = [(k, xs, ys) for k, (xs, ys) in groups.items()]
        xlabel = "cumulative base-level cells" if xcol == "cumulative_cells" else "dump"
        return svg.chart(series, title or "Cumulative output", xlabel, "cumulative bytes")

    if "level" in fields:
        xs = [num(r["level"]) for r in rows]
        ys = [num(r["bytes"]) for r in rows]
        return svg.chart([("bytes", xs, ys)], title or "Output per level", "level", "bytes",
                         points=True)
    ys = [num(r["bytes"]) for r in rows]
    return svg.chart([("total", [0.0] * len(ys), ys)], title or "Total output", "", "bytes",
                     points=True)


def series_rows(table: SizeTable, ncells: int | None = None):
    totals = per_dump_totals(table)
    plt_steps = {r.step_index: r.plt_step for r in table.records}
    fields = list(SERIES_FIELDS) + (["cumulative_cells"] if ncells is not None else [])
    rows = []
    running = 0
    for k, b in enumerate(totals):
        running += b
        row = {"dump": k, "plt_step": plt_steps.get(k, k), "bytes": b,
               "cumulative_bytes": running}
        if ncells is not None:
            row["cumulative_cells"] = (k + 1) * ncells
        rows.append(row)
    return fields, rows


def read_series(text: str) -> list[int]:
    """Per-dump byte totals from either a series CSV or a size-table CSV."""
    fields, rows = csv_to_rows(text)
    if tuple(fields) == CSV_FIELDS:
        return per_dump_totals(read_csv(io.StringIO(text)))
    if "bytes" not in fields:
        raise InputError("series CSV needs a 'bytes' column")
    try:
        if "dump" in fields:
            rows = sorted(rows, key=lambda r: int(r["dump"]))
            for i, r in enumerate(rows):
                if int(r["dump"]) != i:
                    raise InputError(f"series dumps must run 0..n-1; found {r['dump']} at {i}")
        return [int(float(r["bytes"])) for r in rows]
    except ValueError as e:
        raise InputError(f"bad series value: {e}") from None


# -- model comparison ---------------------------------------------------------

def modeled_per_dump(spec: GeneratorSpec) -> list[int]:
    """Bytes per dump the generator materializes for ``spec``."""
    return [spec.nprocs * spec.dump_bytes(k) + spec.meta_size for k in range(spec.num_dumps)]


@dataclass(frozen=True)
class CompareRow:
    dump: int
    observed_cumulative_bytes: int
    modeled_cumulative_bytes: int
    relative_error: float | None


@dataclass(frozen=True)
class CompareReport:
    rows: tuple[CompareRow, ...]

    def errors(self, first=0, last=None):
        return [abs(r.relative_error) for r in self.rows
                if r.relative_error is not None and r.dump >= first
                and (last is None or r.dump <= last)]

    def mean_abs_error(self, first=0, last=None) -> float:
        e = self.errors(first, last)
        return sum(e) / len(e) if e else 0.0

    def max_abs_error(self, first=0, last=None) -> float:
        return max(self.errors(first, last), default=0.0)

    def to_csv(self) -> str:
        rows = [{"dump": r.dump,
                 "observed_cumulative_bytes": r.observed_cumulative_bytes,
                 "modeled_cumulative_bytes": r.modeled_cumulative_bytes,
                 "relative_error": None if r.relative_error is None else repr(r.relative_error)}
                for r in self.rows]
        return rows_to_csv(COMPARE_FIELDS, rows)

    def summary(self) -> str:
        return (f"dumps = {len(self.rows)}\n"
                f"max_abs_relative_error = {self.max_abs_error():.6g}\n"
                f"mean_abs_relative_error = {self.mean_abs_error():.6g}\n")


def compare(observed, modeled) -> CompareReport:
    """Cumulative observed vs modeled bytes, dump by dump.

    ``relative_error = (modeled - observed) / observed``, left undefined
    (None) while the observed running total is zero.
    """
    if len(observed) != len(modeled):
        raise SeriesLengthMismatch(len(observed), len(modeled))
    rows = []
    obs_cum = mod_cum = 0
    for k, (o, m) in enumerate(zip(observed, modeled)):
        obs_cum += o
        mod_cum += m
        err = (mod_cum - obs_cum) / obs_cum if obs_cum > 0 else None
        rows.append(CompareRow(k, obs_cum, mod_cum, err))
    return CompareReport(tuple(rows))


def compare_svg(csv_text: str, title: str = "Observed vs modeled output") -> str:
    _, rows = csv_to_rows(csv_text)
    xs = [float(r["dump"]) for r in rows]
    obs = [float(r["observed_cumulative_bytes"]) for r in rows]
    mod = [float(r["modeled_cumulative_bytes"]) for r in rows]
    return svg.chart([("observed", xs, obs), ("model", xs, mod)], title, "dump",
                     "cumulative bytes")


# -- fit reports --------------------------------------------------------------

FIT_FIELDS = ("dump", "observed_bytes", "observed_cumulative_bytes",
              "fitted_cumulative_bytes", "residual")


def fit_text(fit: FitResult, n: int, nprocs: int | None = None) -> str:
    lines = [
        f"method = {fit.method}",
        f"data_growth = {fit.data_growth!r}",
        f"part_size_total = {fit.part_size!r}",
    ]
    if nprocs:
        lines += [f"nprocs = {nprocs}", f"part_size = {fit.per_task_size(nprocs)!r}"]
    lines += [f"dumps = {n}", f"sse = {fit.sse!r}", f"clamped = {str(fit.clamped).lower()}"]
    return "\n".join(lines) + "\n"


def fit_rows(fit: FitResult, observed):
    rows = []
    running = 0
    for k, b in enumerate(observed):
        running += b
        rows.append({
            "dump": k,
            "observed_bytes": b,
            "observed_cumulative_bytes": running,
            "fitted_cumulative_bytes": repr(fit.part_size * geometric_sum(fit.data_growth, k + 1)),
            "residual": repr(fit.residuals[k]),
        })
    return FIT_FIELDS, rows


def fit_svg(csv_text: str) -> str:
    _, rows = csv_to_rows(csv_text)
    xs = [float(r["dump"]) for r in rows]
    return svg.chart([("observed", xs, [float(r["observed_cumulative_bytes"]) for r in rows]),
                      ("fit", xs, [float(r["fitted_cumulative_bytes"]) for r in rows])],
                     "Growth calibration", "dump", "cumulative bytes")


def series_svg(csv_text: str) -> str:
    _, rows = csv_to_rows(csv_text)
    xcol = "cumulative_cells" if rows and "cumulative_cells" in rows[0] else "dump"
    xs = [float(r[xcol]) for r in rows]
    ys = [float(r["cumulative_bytes"]) for r in rows]
    xlabel = "cumulative base-level cells" if xcol == "cumulative_cells" else "dump"
    return svg.chart([("all", xs, ys)], "Cumulative output", xlabel, "cumulative bytes")


def svg_for_csv(csv_text: str) -> str:
    """Redraw the chart belonging to any CSV this package writes."""
    fields = tuple(csv_to_rows(csv_text)[0])
    if fields == COMPARE_FIELDS:
        return compare_svg(csv_text)
    if fields == FIT_FIELDS:
        return fit_svg(csv_text)
    if fields[:len(SERIES_FIELDS)] == SERIES_FIELDS:
        return series_svg(csv_text)
    if fields == CSV_FIELDS:
        table = read_csv(io.StringIO(csv_text))
        return aggregate_svg(rows_to_csv(*aggregate_rows(table, "step")))
    extra = {"bytes", "cumulative_bytes", "cumulative_cells"}
    if "bytes" in fields and set(fields) - extra <= set(AXES):
        return aggregate_svg(csv_text)
    raise InputError(f"no chart for CSV columns {','.join(fields)}")
