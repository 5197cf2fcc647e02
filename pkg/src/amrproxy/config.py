"""AMReX input-deck parsing.

Only the handful of parameters that drive plotfile output are interpreted;
everything else in the deck is kept verbatim in ``RunConfig.extras``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

from .errors import MalformedValue, MissingParameter

log = logging.getLogger(__name__)

REQUIRED_KEYS = ("max_step", "amr.n_cell", "amr.max_level", "amr.plot_int", "castro.cfl")

# Some decks namespace max_step under amr; the bare key wins if both appear.
KEY_ALIASES = {"amr.max_step": "max_step"}

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RunConfig:
    max_step: int
    n_cell: tuple[int, ...]
    max_level: int
    plot_int: int
    cfl: float
    nprocs: int = 1
    extras: dict[str, str] = field(default_factory=dict)
    warnings: tuple[str, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "n_cell", tuple(self.n_cell))
        if self.max_step < 1:
            raise MalformedValue("max_step", self.max_step, "must be >= 1")
        if not 1 <= len(self.n_cell) <= 3 or any(n < 1 for n in self.n_cell):
            raise MalformedValue("amr.n_cell", self.n_cell, "need 1-3 positive integers")
        if math.prod(self.n_cell) > _UINT64_MAX:
            raise MalformedValue("amr.n_cell", self.n_cell, "cell count overflows 64 bits")
        if self.max_level < 0:
            raise MalformedValue("amr.max_level", self.max_level, "must be >= 0")
        if self.plot_int < 1:
            raise MalformedValue("amr.plot_int", self.plot_int, "must be >= 1")
        if self.plot_int > self.max_step:
            raise MalformedValue("amr.plot_int", self.plot_int, "exceeds max_step")
        if not 0.0 < self.cfl <= 1.0:
            raise MalformedValue("castro.cfl", self.cfl, "must lie in (0, 1]")
        if self.nprocs < 1:
            raise MalformedValue("nprocs", self.nprocs, "must be >= 1")

    @property
    def ncells(self) -> int:
        """Base-level (L0) cell count."""
        return math.prod(self.n_cell)

    def with_nprocs(self, nprocs: int) -> RunConfig:
        return replace(self, nprocs=nprocs)


def read_keyvalue(text: str) -> tuple[dict[str, str], list[str]]:
    """Tokenize ``key = value...`` text.

    ``#`` starts a comment. A non-blank line without ``=`` continues the value
    of the previous key (decks wrap long values that way). Values come back
    whitespace-normalized. Duplicate keys keep the last value and add a
    warning to the returned list.
    """
    values: dict[str, str] = {}
    warnings: list[str] = []
    last_key = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            if last_key is None:
                raise MalformedValue(f"line {lineno}", line, "expected 'key = value'")
            values[last_key] = " ".join((values[last_key] + " " + line).split())
            continue
        key, raw = line.split("=", 1)
        key = key.strip()
        if not key or len(key.split()) != 1:
            raise MalformedValue(f"line {lineno}", line, "bad key")
        if key in values:
            msg = f"duplicate key {key!r} on line {lineno}; last occurrence wins"
            warnings.append(msg)
            log.warning(msg)
            del values[key]
        values[key] = " ".join(raw.split())
        last_key = key
    return values, warnings


def _as_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise MalformedValue(key, raw, "expected an integer") from None


def parse_inputs(text: str, nprocs: int = 1) -> RunConfig:
    values, warnings = read_keyvalue(text)
    for alias, key in KEY_ALIASES.items():
        if alias in values:
            aliased = values.pop(alias)
            values.setdefault(key, aliased)
    for key in REQUIRED_KEYS:
        if key not in values:
            raise MissingParameter(key)

    raw_cells = values["amr.n_cell"]
    n_cell = tuple(_as_int("amr.n_cell", tok) for tok in raw_cells.split())
    if not 1 <= len(n_cell) <= 3:
        raise MalformedValue("amr.n_cell", raw_cells, "need 1-3 integers")
    try:
        cfl = float(values["castro.cfl"])
    except ValueError:
        raise MalformedValue("castro.cfl", values["castro.cfl"], "expected a number") from None

    extras = {k: v for k, v in values.items() if k not in REQUIRED_KEYS}
    return RunConfig(
        max_step=_as_int("max_step", values["max_step"]),
        n_cell=n_cell,
        max_level=_as_int("amr.max_level", values["amr.max_level"]),
        plot_int=_as_int("amr.plot_int", values["amr.plot_int"]),
        cfl=cfl,
        nprocs=nprocs,
        extras=extras,
        warnings=tuple(warnings),
    )


def load_inputs(path, nprocs: int = 1) -> RunConfig:
    with open(path) as f:
        return parse_inputs(f.read(), nprocs=nprocs)


def render(cfg: RunConfig) -> str:
    """Serialize back to deck text. ``nprocs`` is not a deck parameter and is omitted."""
    lines = [
        f"max_step = {cfg.max_step}",
        f"amr.n_cell = {' '.join(str(n) for n in cfg.n_cell)}",
        f"amr.max_level = {cfg.max_level}",
        f"amr.plot_int = {cfg.plot_int}",
        f"castro.cfl = {cfg.cfl!r}",
    ]
    lines += [f"{k} = {v}" for k, v in cfg.extras.items()]
    return "\n".join(lines) + "\n"


def dump_count(cfg: RunConfig, initial_dump: bool = True) -> int:
    """Number of plot dumps a run emits.

    Dumps land on steps 0, plot_int, 2*plot_int, ... up to max_step. With
    ``initial_dump=False`` the step-0 dump is dropped, giving the plain
    ``max_step // plot_int``.
    """
    n = cfg.max_step // cfg.plot_int
    return n + 1 if initial_dump else n
