"""Walk AMReX plotfile trees and tabulate file sizes.

Layout understood::

    <root>/<prefix>plt<NNNNN>/Header
                              job_info
                              Level_<k>/Cell_D_<task>
                              Level_<k>/Cell_H

Only names and sizes are read; file contents are never opened.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig
from .errors import InputError, MalformedPlotfile, NonContiguousSteps, PathNotFound

log = logging.getLogger(__name__)

DATA = "data"
LEVEL_METADATA = "level_metadata"
STEP_METADATA = "step_metadata"
KINDS = (STEP_METADATA, LEVEL_METADATA, DATA)

AXES = ("step", "level", "task")
CSV_FIELDS = ("step_index", "plt_step", "level", "task", "kind", "bytes")

PLT_RE = re.compile(r"^(?P<prefix>.*)plt(?P<step>\d+)$")
LEVEL_RE = re.compile(r"^Level_(?P<level>\d+)$")
CELL_D_RE = re.compile(r"^Cell_D_(?P<task>\d+)$")
STEP_META_NAMES = ("Header", "job_info")
LEVEL_META_NAMES = ("Cell_H",)


@dataclass(frozen=True)
class SizeRecord:
    step_index: int
    plt_step: int
    level: int | None
    task: int | None
    bytes: int
    kind: str = DATA
    path: str = field(default="", compare=False)

    def sort_key(self):
        return (
            self.step_index,
            -1 if self.level is None else self.level,
            KINDS.index(self.kind),
            -1 if self.task is None else self.task,
            self.path,
        )


@dataclass(frozen=True)
class SizeTable:
    records: tuple[SizeRecord, ...]
    root: str = ""
    include_metadata: bool = True
    skipped: int = 0

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for r in self.records:
            if r.kind != DATA:
                continue
            key = (r.step_index, r.level, r.task)
            if key in seen:
                raise InputError(f"duplicate data record for step/level/task {key}")
            seen.add(key)

    def __len__(self):
        return len(self.records)

    @property
    def num_steps(self) -> int:
        return len({r.step_index for r in self.records})

    def counted(self):
        """Records that contribute to byte totals under this table's metadata mode."""
        if self.include_metadata:
            return self.records
        return tuple(r for r in self.records if r.kind == DATA)


def sort_records(records):
    return sorted(records, key=SizeRecord.sort_key)


def scan_plotfile_tree(root, include_metadata: bool = True) -> SizeTable:
    root = Path(root)
    if not root.is_dir():
        raise PathNotFound(root)

    skipped = 0
    plts = []
    for entry in os.scandir(root):
        m = PLT_RE.match(entry.name)
        if m and entry.is_dir():
            plts.append((int(m["step"]), entry.name))
        else:
            skipped += 1
    plts.sort()

    records = []
    for step_index, (plt_step, name) in enumerate(plts):
        plt_dir = root / name
        found_level0 = False
        for entry in os.scandir(plt_dir):
            if entry.name in STEP_META_NAMES and entry.is_file():
                if include_metadata:
                    records.append(SizeRecord(step_index, plt_step, None, None,
                                              entry.stat().st_size, STEP_METADATA,
                                              f"{name}/{entry.name}"))
                continue
            m = LEVEL_RE.match(entry.name)
            if not (m and entry.is_dir()):
                skipped += 1
                continue
            level = int(m["level"])
            found_level0 = found_level0 or level == 0
            recs, bad = _scan_level(Path(entry.path), step_index, plt_step, level,
                                    include_metadata, f"{name}/{entry.name}")
            records += recs
            skipped += bad
        if not found_level0:
            raise MalformedPlotfile(plt_dir)

    if skipped:
        log.warning("skipped %d non-conforming entries under %s", skipped, root)
    return SizeTable(sort_records(records), str(root), include_metadata, skipped)


def _scan_level(level_dir, step_index, plt_step, level, include_metadata, rel):
    records = []
    skipped = 0
    for entry in os.scandir(level_dir):
        if not entry.is_file():
            skipped += 1
            continue
        m = CELL_D_RE.match(entry.name)
        if m:
            records.append(SizeRecord(step_index, plt_step, level, int(m["task"]),
                                      entry.stat().st_size, DATA, f"{rel}/{entry.name}"))
        elif entry.name in LEVEL_META_NAMES:
            if include_metadata:
                records.append(SizeRecord(step_index, plt_step, level, None,
                                          entry.stat().st_size, LEVEL_METADATA,
                                          f"{rel}/{entry.name}"))
        else:
            skipped += 1
    return records, skipped


def _axis_value(record, axis):
    if axis == "step":
        return record.step_index
    if axis == "level":
        return record.level
    if axis == "task":
        return record.task
    raise ValueError(f"unknown axis {axis!r}; expected a subset of {AXES}")


def _none_first(key):
    return tuple((v is not None, -1 if v is None else v) for v in key)


def normalize_axes(axes) -> tuple[str, ...]:
    if isinstance(axes, str):
        axes = [a for a in axes.split(",") if a]
    axes = set(axes)
    unknown = axes - set(AXES)
    if unknown:
        raise InputError(f"unknown aggregation axes: {sorted(unknown)}")
    return tuple(a for a in AXES if a in axes)


def aggregate(table: SizeTable, axes=()) -> list[tuple[tuple, int]]:
    """Sum bytes grouped by ``axes`` (any subset of step, level, task).

    Keys are tuples in step, level, task order, sorted ascending with ``None``
    (metadata not tied to a level or task) first. With no axes the result is
    a single ``((), grand_total)`` entry.
    """
    axes = normalize_axes(axes)
    sums = defaultdict(int)
    for r in table.counted():
        sums[tuple(_axis_value(r, a) for a in axes)] += r.bytes
    if not axes:
        return [((), sums[()])]
    return sorted(sums.items(), key=lambda kv: _none_first(kv[0]))


def total_bytes(table: SizeTable) -> int:
    return aggregate(table)[0][1]


def per_dump_totals(table: SizeTable) -> list[int]:
    """Bytes per dump, indexed by step_index. Requires dense step indices."""
    sums = dict(aggregate(table, ("step",)))
    steps = sorted(k[0] for k in sums)
    for expected, got in enumerate(steps):
        if got != expected:
            raise NonContiguousSteps(expected)
    return [sums[(s,)] for s in steps]


def cumulative_series(table: SizeTable, cfg: RunConfig | None = None,
                      ncells: int | None = None) -> list[tuple[int, int]]:
    """Running output volume against cumulative base-level cells.

    Point k (1-based) is ``(k * ncells, bytes written by dumps 0..k-1)``.
    ``ncells`` defaults to the product of ``cfg.n_cell``; refined levels never
    enter it.
    """
    if ncells is None:
        if cfg is None:
            raise TypeError("cumulative_series needs cfg or ncells")
        ncells = cfg.ncells
    out = []
    running = 0
    for k, b in enumerate(per_dump_totals(table), 1):
        running += b
        out.append((k * ncells, running))
    return out


def _fmt(v):
    return "" if v is None else str(v)


def _opt_int(s):
    return None if s == "" else int(s)


def write_csv(table_or_records, f) -> None:
    records = table_or_records.records if isinstance(table_or_records, SizeTable) else table_or_records
    w = csv.writer(f, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        w.writerow([r.step_index, r.plt_step, _fmt(r.level), _fmt(r.task), r.kind, r.bytes])


def to_csv(table_or_records) -> str:
    buf = io.StringIO()
    write_csv(table_or_records, buf)
    return buf.getvalue()


def read_csv(f, root: str = "") -> SizeTable:
    reader = csv.DictReader(f)
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise InputError(f"size table CSV must have header {','.join(CSV_FIELDS)}")
    records = []
    include_metadata = False
    for row in reader:
        try:
            rec = SizeRecord(int(row["step_index"]), int(row["plt_step"]),
                             _opt_int(row["level"]), _opt_int(row["task"]),
                             int(row["bytes"]), row["kind"])
        except ValueError as e:
            raise InputError(f"bad size table row {row}: {e}") from None
        if rec.kind not in KINDS:
            raise InputError(f"unknown record kind {rec.kind!r}")
        include_metadata = include_metadata or rec.kind != DATA
        records.append(rec)
    return SizeTable(records, root, include_metadata)
