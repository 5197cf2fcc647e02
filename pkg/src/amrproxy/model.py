"""Proxy workload model: fixed per-task base size plus geometric growth.

Dump ``k`` of a run with ``nprocs`` tasks writes ``part_size * g**k`` bytes
per task. ``part_size`` comes from the base-level mesh through
:func:`part_size_model`; ``g`` is calibrated against observed output with
either :func:`fit_growth_grid` (base held fixed, 1-D search) or
:func:`fit_loglinear` (least squares on log sizes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, dump_count
from .errors import IndexOutOfRange, InsufficientData, NonPositiveObservation
from .generator import GeneratorSpec

DEFAULT_F = 24.0
BYTES_PER_VALUE = 8  # double precision
DEFAULT_BOUNDS = (1.0, 1.05)
DEFAULT_RESOLUTION = 500
GOLDEN_TOL = 1e-6

GRID_1D = "grid_1d"
LOGLINEAR = "loglinear"


def part_size_model(nx, ny, nprocs, f=DEFAULT_F) -> float:
    """Per-task base bytes: ``f * 8 * nx * ny / nprocs``."""
    if nprocs == 0:
        raise ZeroDivisionError("nprocs must be non-zero")
    if nx <= 0 or ny <= 0 or nprocs < 0 or f <= 0:
        raise ValueError("part_size_model inputs must be positive")
    return f * BYTES_PER_VALUE * nx * ny / nprocs


@dataclass(frozen=True)
class ModelParams:
    part_size: float
    data_growth: float = 1.0
    num_dumps: int = 1
    nprocs: int = 1
    meta_size: int = 0
    compute_time: float = 0.0
    f: float = DEFAULT_F

    def __post_init__(self):
        if not self.part_size > 0:
            raise ValueError("part_size must be > 0")
        if not self.data_growth >= 1.0:
            raise ValueError("data_growth must be >= 1.0")
        if self.num_dumps < 1 or self.nprocs < 1:
            raise ValueError("num_dumps and nprocs must be >= 1")
        if self.meta_size < 0 or self.compute_time < 0 or not self.f > 0:
            raise ValueError("meta_size and compute_time must be >= 0, f > 0")


def geometric_sum(g: float, n: int) -> float:
    """``1 + g + ... + g**(n-1)``, exact at g == 1 and stable near it."""
    if g == 1.0:
        return float(n)
    if abs(g - 1.0) < 1e-2:
        return math.expm1(n * math.log1p(g - 1.0)) / (g - 1.0)
    return (g**n - 1.0) / (g - 1.0)


def _geometric_sums(gs, n):
    # vectorised geometric_sum over an array of growth factors, all >= 1
    gs = np.asarray(gs, dtype=float)
    d = gs - 1.0
    safe = np.where(d == 0.0, 1.0, d)
    n = np.asarray(n, dtype=float)
    out = np.expm1(np.multiply.outer(np.log1p(d), n)) / safe[:, None]
    return np.where((d == 0.0)[:, None], n[None, :], out)


def _check_index(p, k):
    if not 0 <= k < p.num_dumps:
        raise IndexOutOfRange(k, p.num_dumps)


def predict_dump_size(p: ModelParams, k: int) -> float:
    _check_index(p, k)
    return p.part_size * p.data_growth**k


def predict_cumulative(p: ModelParams, through_k: int) -> float:
    """Total bytes across all tasks and root metadata for dumps 0..through_k."""
    _check_index(p, through_k)
    n = through_k + 1
    return p.nprocs * p.part_size * geometric_sum(p.data_growth, n) + n * p.meta_size


@dataclass(frozen=True)
class FitResult:
    data_growth: float
    part_size: float  # dump-0 total over all tasks
    sse: float
    residuals: tuple[float, ...]
    method: str
    clamped: bool = False

    def per_task_size(self, nprocs: int) -> float:
        return self.part_size / nprocs


def golden_section(fun, a, b, tol=GOLDEN_TOL):
    """Minimize a unimodal ``fun`` on [a, b]; returns ``(x, fun(x))``.

    Stops once the bracket is narrower than ``tol``. The returned point is
    the best one evaluated.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a >= tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


def _check_series(observed):
    obs = np.asarray(observed, dtype=float)
    if obs.ndim != 1 or obs.size < 2:
        raise InsufficientData()
    return obs


def fit_growth_grid(observed, base_total, bounds=DEFAULT_BOUNDS,
                    resolution=DEFAULT_RESOLUTION, tol=GOLDEN_TOL) -> FitResult:
    """Fit g with the dump-0 total held at ``base_total``.

    ``observed`` is bytes per dump (all tasks). The objective is the sum of
    squared relative errors between observed and predicted cumulative
    output. A uniform grid of ``resolution`` cells over ``bounds`` picks the
    best cell, then golden-section search refines inside its neighbours.
    Ties go to the smaller g.
    """
    obs = _check_series(observed)
    g_lo, g_hi = map(float, bounds)
    if not 1.0 <= g_lo < g_hi:
        raise ValueError("bounds must satisfy 1.0 <= g_lo < g_hi")
    if not base_total > 0:
        raise ValueError("base_total must be > 0")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    for i, v in enumerate(obs):
        if v < 0:
            raise NonPositiveObservation(i, v)
    if obs[0] <= 0:
        raise NonPositiveObservation(0, obs[0])

    cum = np.cumsum(obs)
    counts = np.arange(1, obs.size + 1)

    def residuals(g):
        pred = base_total * _geometric_sums([g], counts)[0]
        return (pred - cum) / cum

    def sse(g):
        r = residuals(g)
        return float(r @ r)

    grid = np.linspace(g_lo, g_hi, resolution + 1)
    rel = (base_total * _geometric_sums(grid, counts) - cum) / cum
    grid_sse = np.einsum("ij,ij->i", rel, rel)
    i = int(np.argmin(grid_sse))  # first minimum, i.e. smallest g
    best_g, best_sse = float(grid[i]), sse(float(grid[i]))

    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    g, s = golden_section(sse, float(lo), float(hi), tol)
    if s < best_sse or (s == best_sse and g < best_g):
        best_g, best_sse = g, s

    return FitResult(best_g, float(base_total), best_sse,
                     tuple(float(x) for x in residuals(best_g)), GRID_1D)


def fit_loglinear(observed) -> FitResult:
    """Ordinary least squares of ``ln(size_k)`` on ``k``.

    A negative slope is clamped to g = 1 (base becomes the geometric mean)
    and flagged through ``FitResult.clamped``. Residuals are per-dump
    relative errors of the fitted curve.
    """
    obs = _check_series(observed)
    for i, v in enumerate(obs):
        if not v > 0:
            raise NonPositiveObservation(i, v)

    k = np.arange(obs.size, dtype=float)
    y = np.log(obs)
    kc = k - k.mean()
    slope = float(kc @ (y - y.mean()) / (kc @ kc))
    clamped = slope < 0
    if clamped:
        slope = 0.0
    intercept = float(y.mean() - slope * k.mean())

    base, g = math.exp(intercept), math.exp(slope)
    fitted = base * np.exp(slope * k)
    r = (fitted - obs) / obs
    return FitResult(g, base, float(r @ r), tuple(float(x) for x in r), LOGLINEAR, clamped)


def translate(cfg: RunConfig, f=DEFAULT_F, g=1.0, compute_time=0.0, meta_size=0,
              initial_dump=True, seed=0, out_root="") -> GeneratorSpec:
    """Map deck parameters to generator arguments.

    ``n_cell`` beyond two entries is folded into the second dimension so the
    per-task size always scales with the full base-level cell count.
    """
    nx = cfg.n_cell[0]
    ny = math.prod(cfg.n_cell[1:])
    return GeneratorSpec(
        nprocs=cfg.nprocs,
        num_dumps=dump_count(cfg, initial_dump),
        part_size=part_size_model(nx, ny, cfg.nprocs, f),
        data_growth=g,
        meta_size=meta_size,
        compute_time=compute_time,
        seed=seed,
        out_root=str(out_root),
    )
