"""Synthetic N-to-N output kernel.

Writes one JSON file per (task, dump) plus one root metadata file per dump::

    <out>/data/macsio_json_<task:05d>_<dump:03d>.json
    <out>/metadata/macsio_json_root_<dump:03d>.json

Every task file in dump ``k`` holds exactly ``round(part_size * g**k)``
bytes. Tasks are simulated as write concurrency inside one process; dumps
are strictly sequential, separated by an idle ``compute_time``.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import os
import shutil
import time
from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path

from .config import read_keyvalue
from .errors import DirectoryNotEmpty, InputError, MalformedValue, PartialGeneration

log = logging.getLogger(__name__)

INTERFACE = "miftmpl"
FILE_MODE = "MIF"
ROOT_TASK = -1

_ALPHABET = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_"
_FILL_TABLE = bytes.maketrans(bytes(range(256)), _ALPHABET * 4)


@dataclass(frozen=True)
class GeneratorSpec:
    nprocs: int
    num_dumps: int
    part_size: float
    data_growth: float = 1.0
    meta_size: int = 0
    compute_time: float = 0.0
    seed: int = 0
    out_root: str = ""
    interface: str = INTERFACE
    parallel_file_mode: str = FILE_MODE
    avg_num_parts: int = 1
    vars_per_part: int = 1

    def __post_init__(self):
        if self.nprocs < 1:
            raise MalformedValue("nprocs", self.nprocs, "must be >= 1")
        if self.num_dumps < 1:
            raise MalformedValue("num_dumps", self.num_dumps, "must be >= 1")
        if not self.data_growth >= 1.0:
            raise MalformedValue("dataset_growth", self.data_growth, "must be >= 1.0")
        if round_half_up(self.part_size) < 1:
            raise MalformedValue("part_size", self.part_size, "rounds below 1 byte")
        if self.meta_size < 0:
            raise MalformedValue("meta_size", self.meta_size, "must be >= 0")
        if self.compute_time < 0:
            raise MalformedValue("compute_time", self.compute_time, "must be >= 0")
        if self.interface != INTERFACE:
            raise MalformedValue("interface", self.interface, f"only {INTERFACE} is supported")
        if self.parallel_file_mode != FILE_MODE:
            raise MalformedValue("parallel_file_mode", self.parallel_file_mode,
                                 f"only {FILE_MODE} is supported")
        if self.avg_num_parts != 1:
            raise MalformedValue("avg_num_parts", self.avg_num_parts, "only 1 is supported")
        if self.vars_per_part != 1:
            raise MalformedValue("vars_per_part", self.vars_per_part, "only 1 is supported")

    def dump_bytes(self, dump: int) -> int:
        """Per-task file size for ``dump``."""
        return round_half_up(self.part_size * self.data_growth**dump)

    @property
    def num_files(self) -> int:
        return self.nprocs * self.num_dumps + self.num_dumps

    def total_bytes(self) -> int:
        return sum(self.nprocs * self.dump_bytes(k) + self.meta_size
                   for k in range(self.num_dumps))


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def _num(x) -> str:
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return repr(x) if isinstance(x, float) else str(x)


def command_line(spec: GeneratorSpec, launcher: bool = True) -> str:
    """Render the equivalent proxy invocation, one flag per argument."""
    args = [
        "--interface", spec.interface,
        "--parallel_file_mode", spec.parallel_file_mode, str(spec.nprocs),
        "--num_dumps", str(spec.num_dumps),
        "--part_size", _num(spec.part_size),
        "--avg_num_parts", str(spec.avg_num_parts),
        "--vars_per_part", str(spec.vars_per_part),
        "--compute_time", _num(spec.compute_time),
        "--meta_size", _num(spec.meta_size),
        "--dataset_growth", _num(spec.data_growth),
    ]
    head = ["jsrun", "-n", str(spec.nprocs), "macsio"] if launcher else ["macsio"]
    return " ".join(head + args)


# spec file key -> (field, parser)
_SPEC_KEYS = {
    "interface": ("interface", str),
    "num_dumps": ("num_dumps", int),
    "part_size": ("part_size", float),
    "avg_num_parts": ("avg_num_parts", int),
    "vars_per_part": ("vars_per_part", int),
    "compute_time": ("compute_time", float),
    "meta_size": ("meta_size", int),
    "dataset_growth": ("data_growth", float),
    "seed": ("seed", int),
    "out": ("out_root", str),
}


def spec_to_text(spec: GeneratorSpec) -> str:
    lines = [
        f"interface = {spec.interface}",
        f"parallel_file_mode = {spec.parallel_file_mode} {spec.nprocs}",
        f"num_dumps = {spec.num_dumps}",
        f"part_size = {spec.part_size!r}",
        f"avg_num_parts = {spec.avg_num_parts}",
        f"vars_per_part = {spec.vars_per_part}",
        f"compute_time = {spec.compute_time!r}",
        f"meta_size = {spec.meta_size}",
        f"dataset_growth = {spec.data_growth!r}",
        f"seed = {spec.seed}",
    ]
    if spec.out_root:
        lines.append(f"out = {spec.out_root}")
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> GeneratorSpec:
    values, _ = read_keyvalue(text)
    kwargs = {}
    mode = values.pop("parallel_file_mode", None)
    if mode is None:
        raise InputError("spec file needs 'parallel_file_mode = MIF <nprocs>'")
    toks = mode.split()
    if len(toks) != 2:
        raise MalformedValue("parallel_file_mode", mode, "expected '<mode> <nprocs>'")
    kwargs["parallel_file_mode"] = toks[0]
    try:
        kwargs["nprocs"] = int(toks[1])
    except ValueError:
        raise MalformedValue("parallel_file_mode", mode, "nprocs must be an integer") from None
    for key, raw in values.items():
        if key not in _SPEC_KEYS:
            raise InputError(f"unknown spec key {key!r}")
        name, conv = _SPEC_KEYS[key]
        try:
            kwargs[name] = conv(raw)
        except ValueError:
            raise MalformedValue(key, raw) from None
    for required in ("num_dumps", "part_size"):
        if _SPEC_KEYS[required][0] not in kwargs:
            raise InputError(f"spec file is missing {required!r}")
    return GeneratorSpec(**kwargs)


def load_spec(path) -> GeneratorSpec:
    with open(path) as f:
        return spec_from_text(f.read())


def envelope_size(task: int, dump: int) -> int:
    return len(_envelope_head(task, dump)) + 2


def _envelope_head(task, dump):
    return b'{"task":%d,"dump":%d,"fill":"' % (task, dump)


def _fill(seed, task, dump, n):
    key = b"%d:%d:%d" % (seed, task, dump)
    return hashlib.shake_256(key).digest(n).translate(_FILL_TABLE)


def payload(seed: int, task: int, dump: int, size: int) -> bytes:
    """Deterministic file body of exactly ``size`` bytes.

    A JSON object ``{"task":T,"dump":D,"fill":"..."}`` whose fill string is
    padded to the target size. Sizes below the envelope get bare fill
    characters instead.
    """
    if size < 0:
        raise ValueError("size must be >= 0")
    head = _envelope_head(task, dump)
    room = size - len(head) - 2
    if room < 0:
        return _fill(seed, task, dump, size)
    return head + _fill(seed, task, dump, room) + b'"}'


def data_name(task: int, dump: int) -> str:
    return f"macsio_json_{task:05d}_{dump:03d}.json"


def root_name(dump: int) -> str:
    return f"macsio_json_root_{dump:03d}.json"


@dataclass
class DumpStat:
    dump: int
    task_bytes: int
    seconds: float
    started: float  # time.monotonic() at first write
    finished: float  # time.monotonic() after last write


@dataclass
class GenerationReport:
    out_root: str
    manifest: list[tuple[str, int]] = field(default_factory=list)
    per_dump: list[DumpStat] = field(default_factory=list)
    raw_fill: list[str] = field(default_factory=list)

    @property
    def files_written(self) -> int:
        return len(self.manifest)

    @property
    def bytes_written(self) -> int:
        return sum(b for _, b in self.manifest)

    def summary(self) -> str:
        secs = sum(d.seconds for d in self.per_dump)
        lines = [
            f"out_root = {self.out_root}",
            f"dumps = {len(self.per_dump)}",
            f"files_written = {self.files_written}",
            f"bytes_written = {self.bytes_written}",
            f"write_seconds = {secs:.6f}",
        ]
        if self.raw_fill:
            lines.append(f"raw_fill_files = {len(self.raw_fill)}")
        return "\n".join(lines) + "\n"

    def write_csv(self, f) -> None:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["dump", "task_bytes", "seconds"])
        for d in self.per_dump:
            w.writerow([d.dump, d.task_bytes, f"{d.seconds:.6f}"])

    def write_manifest(self, f) -> None:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["path", "bytes"])
        w.writerows(self.manifest)


def prepare_out_root(out: Path, force: bool, subdirs) -> None:
    if out.exists() and any(out.iterdir()):
        if not force:
            raise DirectoryNotEmpty(out)
        for sub in subdirs:
            if (out / sub).is_dir():
                shutil.rmtree(out / sub)
    for sub in subdirs:
        (out / sub).mkdir(parents=True, exist_ok=True)


def _write(path, body):
    with open(path, "wb") as f:
        f.write(body)
    return len(body)


def generate(spec: GeneratorSpec, force: bool = False, workers: int | None = None,
             out_root=None) -> GenerationReport:
    out = Path(out_root if out_root is not None else spec.out_root)
    if not str(out) or str(out) == ".":
        raise InputError("generator needs an output directory")
    prepare_out_root(out, force, ("data", "metadata"))
    report = GenerationReport(str(out))
    workers = workers or min(8, spec.nprocs)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for dump in range(spec.num_dumps):
            if dump and spec.compute_time > 0:
                time.sleep(spec.compute_time)
            size = spec.dump_bytes(dump)
            started = time.monotonic()
            jobs = []
            for task in range(spec.nprocs):
                rel = f"data/{data_name(task, dump)}"
                if size < envelope_size(task, dump):
                    report.raw_fill.append(rel)
                jobs.append((rel, pool.submit(_write, out / rel,
                                              payload(spec.seed, task, dump, size))))
            wait([fut for _, fut in jobs])
            _collect(report, jobs)

            rel = f"metadata/{root_name(dump)}"
            if 0 < spec.meta_size < envelope_size(ROOT_TASK, dump):
                report.raw_fill.append(rel)
            try:
                report.manifest.append(
                    (rel, _write(out / rel, payload(spec.seed, ROOT_TASK, dump, spec.meta_size))))
            except OSError as e:
                raise PartialGeneration(report, e) from e
            finished = time.monotonic()
            report.per_dump.append(DumpStat(dump, size, finished - started, started, finished))
            log.debug("dump %d: %d tasks x %d bytes in %.3fs", dump, spec.nprocs, size,
                      finished - started)
    return report


def _collect(report, jobs):
    # ordered merge; the first failure aborts with everything that did land
    error = None
    for rel, fut in jobs:
        exc = fut.exception()
        if exc is None:
            report.manifest.append((rel, fut.result()))
        elif error is None:
            error = exc
    if error is not None:
        if isinstance(error, OSError):
            raise PartialGeneration(report, error) from error
        raise error


def tree_digest(root) -> str:
    """SHA-256 over every file's relative path and contents, in sorted order."""
    root = Path(root)
    h = hashlib.sha256()
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            path = Path(dirpath) / name
            h.update(path.relative_to(root).as_posix().encode() + b"\0")
            with open(path, "rb") as f:
                for chunk in iter(lambda: f.read(1 << 20), b""):
                    h.update(chunk)
            h.update(b"\0")
    return h.hexdigest()

