"""Ground-truth plotfile trees with known sizes.

A profile describes, per refinement level, how many bytes a dump writes
(``base * g**dump``) and how unevenly that volume is spread over tasks.
:func:`synthesize_run` lays the result out on disk in the AMReX plotfile
shape and returns the exact size table a scan should recover.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import read_keyvalue
from .errors import DirectoryNotEmpty, InputError, MalformedValue, PartialGeneration
from .generator import round_half_up
from .scan import DATA, LEVEL_METADATA, STEP_METADATA, SizeRecord, SizeTable, sort_records

log = logging.getLogger(__name__)

DEFAULT_PREFIX = "sedov_2d_cyl_in_cart_"


@dataclass(frozen=True)
class LevelSpec:
    base_total_bytes: float
    growth_g: float = 1.0
    jitter: float = 0.0  # 0 means an even split across tasks

    def __post_init__(self):
        if self.base_total_bytes < 0:
            raise MalformedValue("base_total_bytes", self.base_total_bytes, "must be >= 0")
        if self.growth_g <= 0:
            raise MalformedValue("growth_g", self.growth_g, "must be > 0")
        if self.jitter < 0:
            raise MalformedValue("jitter", self.jitter, "must be >= 0")

    def total(self, dump: int) -> int:
        return round_half_up(self.base_total_bytes * self.growth_g**dump)


@dataclass(frozen=True)
class OracleProfile:
    nprocs: int
    num_dumps: int
    levels: tuple[LevelSpec, ...]
    plot_int: int = 1
    prefix: str = DEFAULT_PREFIX
    header_bytes: int = 0
    job_info_bytes: int = 0
    cell_h_bytes: int = 0
    seed: int = 0
    warnings: tuple[str, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if self.nprocs < 1 or self.num_dumps < 1 or self.plot_int < 1:
            raise InputError("nprocs, num_dumps and plot_int must all be >= 1")
        if not self.levels:
            raise InputError("profile needs at least one level")
        if min(self.header_bytes, self.job_info_bytes, self.cell_h_bytes) < 0:
            raise InputError("metadata sizes must be >= 0")
        object.__setattr__(self, "warnings", tuple(lint(self)))

    def dump_total(self, dump: int, include_metadata: bool = True) -> int:
        total = sum(lv.total(dump) for lv in self.levels)
        if include_metadata:
            total += (self.header_bytes + self.job_info_bytes
                      + len(self.levels) * self.cell_h_bytes)
        return total


def lint(profile: OracleProfile) -> list[str]:
    msgs = []
    if profile.levels[0].growth_g != 1.0:
        msgs.append(f"level 0 grows (g={profile.levels[0].growth_g}); "
                    "base-level output is expected to stay constant")
    return msgs


def split_level(total: int, nprocs: int, jitter: float, rng: np.random.Generator) -> list[int]:
    """Divide ``total`` bytes over tasks, preserving the sum exactly.

    Shares follow multiplicative weights ``exp(jitter * z)``; each share is
    floored and the leftover goes to task 0.
    """
    if jitter > 0:
        w = np.exp(jitter * rng.standard_normal(nprocs))
    else:
        w = np.ones(nprocs)
    shares = [int(s) for s in np.floor(total * (w / w.sum()))]
    shares[0] += total - sum(shares)
    # float round-off can overshoot by a byte or two; take it from the largest
    while shares[0] < 0:
        i = max(range(nprocs), key=shares.__getitem__)
        shares[i] -= 1
        shares[0] += 1
    return shares


def plan_run(profile: OracleProfile) -> list[tuple[str, SizeRecord]]:
    """Every file the run would produce, as (relative path, record)."""
    width = max(5, len(str((profile.num_dumps - 1) * profile.plot_int)))
    plan = []
    for dump in range(profile.num_dumps):
        plt_step = dump * profile.plot_int
        plt = f"{profile.prefix}plt{plt_step:0{width}d}"
        for name, size in (("Header", profile.header_bytes), ("job_info", profile.job_info_bytes)):
            plan.append((f"{plt}/{name}",
                         SizeRecord(dump, plt_step, None, None, size, STEP_METADATA)))
        for level, spec in enumerate(profile.levels):
            rng = np.random.default_rng([profile.seed, dump, level])
            shares = split_level(spec.total(dump), profile.nprocs, spec.jitter, rng)
            for task, size in enumerate(shares):
                if size > 0:
                    plan.append((f"{plt}/Level_{level}/Cell_D_{task:05d}",
                                 SizeRecord(dump, plt_step, level, task, size, DATA)))
            plan.append((f"{plt}/Level_{level}/Cell_H",
                         SizeRecord(dump, plt_step, level, None, profile.cell_h_bytes,
                                    LEVEL_METADATA)))
    return plan


def synthesize_run(profile: OracleProfile, out_root, force: bool = False) -> SizeTable:
    """Write the profile's plotfile tree and return its exact size table.

    File contents are zero filler (sparse where the filesystem allows);
    only sizes and names carry information.
    """
    out = Path(out_root)
    if out.exists() and any(out.iterdir()) and not force:
        raise DirectoryNotEmpty(out)
    for msg in profile.warnings:
        log.warning(msg)

    plan = plan_run(profile)
    done = []
    made = set()
    try:
        for rel, rec in plan:
            path = out / rel
            if path.parent not in made:
                path.parent.mkdir(parents=True, exist_ok=True)
                made.add(path.parent)
            with open(path, "wb") as f:
                f.truncate(rec.bytes)
            done.append(_with_path(rec, rel))
    except OSError as e:
        raise PartialGeneration(SizeTable(sort_records(done), str(out)), e) from e
    return SizeTable(sort_records(done), str(out), include_metadata=True)


def _with_path(rec, rel):
    return SizeRecord(rec.step_index, rec.plt_step, rec.level, rec.task, rec.bytes,
                      rec.kind, rel)


# Profiles are stored as key = value text:
#   level.<k> = <base_total_bytes> <growth_g> uniform|jitter <fraction>
_INT_KEYS = ("nprocs", "num_dumps", "plot_int", "header_bytes", "job_info_bytes",
             "cell_h_bytes", "seed")


def profile_to_text(profile: OracleProfile) -> str:
    lines = [f"{k} = {getattr(profile, k)}" for k in _INT_KEYS]
    lines.insert(3, f"prefix = {profile.prefix}")
    for i, lv in enumerate(profile.levels):
        spread = f"jitter {lv.jitter!r}" if lv.jitter > 0 else "uniform"
        lines.append(f"level.{i} = {lv.base_total_bytes!r} {lv.growth_g!r} {spread}")
    return "\n".join(lines) + "\n"


def _parse_level(key, raw):
    toks = raw.split()
    try:
        base, g = float(toks[0]), float(toks[1])
        if toks[2:] == ["uniform"]:
            jitter = 0.0
        elif len(toks) == 4 and toks[2] == "jitter":
            jitter = float(toks[3])
        else:
            raise ValueError
    except (ValueError, IndexError):
        raise MalformedValue(key, raw, "expected '<base> <g> uniform|jitter <fraction>'") from None
    return LevelSpec(base, g, jitter)


def profile_from_text(text: str) -> OracleProfile:
    values, _ = read_keyvalue(text)
    kwargs = {}
    levels = {}
    for key, raw in values.items():
        if key in _INT_KEYS:
            try:
                kwargs[key] = int(raw)
            except ValueError:
                raise MalformedValue(key, raw, "expected an integer") from None
        elif key == "prefix":
            if len(raw.split()) > 1 or os.sep in raw:
                raise MalformedValue(key, raw, "prefix must be a single path component")
            kwargs["prefix"] = raw
        elif key.startswith("level."):
            try:
                idx = int(key[len("level."):])
            except ValueError:
                raise MalformedValue(key, raw, "bad level index") from None
            levels[idx] = _parse_level(key, raw)
        else:
            raise InputError(f"unknown profile key {key!r}")
    if sorted(levels) != list(range(len(levels))):
        raise InputError(f"profile levels must be numbered 0..n-1, got {sorted(levels)}")
    for key in ("nprocs", "num_dumps"):
        if key not in kwargs:
            raise InputError(f"profile is missing {key!r}")
    return OracleProfile(levels=tuple(levels[i] for i in range(len(levels))), **kwargs)


def load_profile(path) -> OracleProfile:
    with open(path) as f:
        return profile_from_text(f.read())


CASE4_DUMP0_TOTAL = 49_600_000  # 32 tasks x 1.55 MB


def case4_like(nprocs: int = 32, num_dumps: int = 21, seed: int = 0,
               jitter: float = 0.3) -> OracleProfile:
    """512x512 pivot-like run: flat base level, two growing refined levels.

    Level totals at dump 0 add up to :data:`CASE4_DUMP0_TOTAL`.
    """
    l0 = 16_000_000
    l1 = 20_000_000
    l2 = CASE4_DUMP0_TOTAL - l0 - l1
    return OracleProfile(
        nprocs=nprocs,
        num_dumps=num_dumps,
        levels=(LevelSpec(l0, 1.0), LevelSpec(l1, 1.015, jitter), LevelSpec(l2, 1.03, jitter)),
        plot_int=1,
        header_bytes=2_300,
        job_info_bytes=5_600,
        cell_h_bytes=900,
        seed=seed,
    )

