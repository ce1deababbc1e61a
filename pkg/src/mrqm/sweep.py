"""Parameter sweeps and bandwidth maximization.

A sweep evaluates a grid of device-parameter combinations; every point
is re-matched (optionally) and characterized by |U(0)|^2, working
bandwidth and the atomic-transfer plateau.  Points fail individually
(structured per-row status), never the whole sweep.  Row order is the
lexicographic product of the axis indices, independent of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, MrqmError
from .matching import bandwidth, solve_matching
from .model import SystemParams, derive_params
from .spectral import CombVariant, frequency_grid, reflection

SWEEP_CSV_COLUMNS_FIXED = ("kappa", "g", "u0_sq", "bandwidth",
                           "pa_plateau", "status")

_AXIS_FIELDS = {f.name for f in fields(SystemParams)}


@dataclass(frozen=True)
class SweepConfig:
    """Grid specification over raw SystemParams fields (up to 3 axes)."""

    base: SystemParams
    axes: Sequence[tuple]            # (field_name, values) pairs
    impedance: bool = True
    spectral: bool = True
    variant: CombVariant = CombVariant.RECTANGULAR_F1
    epsilon: float = 0.01
    force_chi_one: bool = False
    grid_points: int = 2001
    grid_span: float = 1.5

    def __post_init__(self):
        if not (1 <= len(self.axes) <= 3):
            raise ConfigError("sweep needs 1..3 axes")
        for name, values in self.axes:
            if name not in _AXIS_FIELDS:
                raise ConfigError(f"unknown SystemParams field {name!r}")
            if len(values) == 0:
                raise ConfigError(f"axis {name!r} has no values")


@dataclass(frozen=True)
class SweepRow:
    index: tuple
    values: tuple
    kappa: float
    g: float
    u0_sq: float
    bandwidth: float
    pa_plateau: float
    status: str                      # "ok" or an error tag


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    rows: tuple

    def csv_header(self):
        return tuple(n for n, _ in self.config.axes) + SWEEP_CSV_COLUMNS_FIXED

    def csv_rows(self):
        for r in self.rows:
            yield r.values + (r.kappa, r.g, r.u0_sq, r.bandwidth,
                              r.pa_plateau, r.status)

    def summary(self) -> dict:
        ok = [r for r in self.rows if r.status == "ok"]
        out = {"points": len(self.rows), "failed": len(self.rows) - len(ok)}
        if ok:
            best = max(ok, key=lambda r: r.bandwidth)
            worst = min(ok, key=lambda r: r.bandwidth)
            out["best"] = {"values": best.values, "bandwidth": best.bandwidth}
            out["worst"] = {"values": worst.values, "bandwidth": worst.bandwidth}
        return out


def _eval_point(args):
    cfg, index, values = args
    params = cfg.base
    for (name, _), v in zip(cfg.axes, values):
        params = replace(params, **{name: v})
    try:
        dp = derive_params(params, force_chi_one=cfg.force_chi_one)
        sol = solve_matching(params, dp, cfg.variant,
                             impedance=cfg.impedance, spectral=cfg.spectral)
        work = replace(params, kappa=sol.kappa, g=sol.g)
        grid = frequency_grid(dp, cfg.grid_points, cfg.grid_span)
        u = reflection(work, dp, grid, cfg.variant)
        bw = bandwidth(grid, u, cfg.epsilon)
        e1 = (work.kappa - 2 * work.gamma_c) / work.kappa
        e2 = dp.gamma_a0 / dp.gamma_sigma if dp.gamma_sigma > 0 else 1.0
        return SweepRow(index=index, values=values, kappa=sol.kappa, g=sol.g,
                        u0_sq=sol.residual_u0_sq, bandwidth=bw.width,
                        pa_plateau=e1 * e2, status="ok")
    except MrqmError as exc:
        return SweepRow(index=index, values=values, kappa=math.nan,
                        g=math.nan, u0_sq=math.nan, bandwidth=math.nan,
                        pa_plateau=math.nan,
                        status=type(exc).__name__)


def run_sweep(cfg: SweepConfig, n_jobs: int = 1) -> SweepResult:
    """Evaluate every grid point; deterministic row order by axis index."""
    shapes = [len(vals) for _, vals in cfg.axes]
    indices = list(np.ndindex(*shapes))
    tasks = [(cfg, tuple(ix), tuple(cfg.axes[k][1][ix[k]]
                                    for k in range(len(cfg.axes))))
             for ix in indices]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(_eval_point, tasks, chunksize=8))
    else:
        rows = [_eval_point(t) for t in tasks]
    return SweepResult(config=cfg, rows=tuple(rows))


# ---------------------------------------------------------------------------
# Bandwidth maximization over (kappa, g)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimizeResult:
    kappa: float
    g: float
    bandwidth: float
    u0_sq: float
    evaluations: int
    boundary_pinned: bool
    analytic_bandwidth: float


def _golden_max(f, lo, hi, n_iter):
    """Deterministic golden-section maximization on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(n_iter):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize_bandwidth(p: SystemParams, dp, epsilon: float, bounds: dict,
                       variant=CombVariant.RECTANGULAR_F1,
                       budget: int = 200,
                       grid_points: int = 2001, grid_span: float = 1.5):
    """Maximize working bandwidth over (kappa, g) inside ``bounds``.

    Derivative-free coordinate search with golden-section refinement and
    a fixed evaluation budget; seeded at the analytic two-condition
    solution when it lies inside the bounds, which the result therefore
    weakly dominates.
    """
    try:
        klo, khi = bounds["kappa"]
        glo, ghi = bounds["g"]
    except KeyError as exc:
        raise ConfigError("bounds must contain 'kappa' and 'g'") from exc
    if not (0 < klo <= khi and 0 < glo <= ghi):
        raise ConfigError("bounds must be positive and ordered")
    grid = frequency_grid(dp, grid_points, grid_span)
    spent = 0

    def bw_of(kappa, g):
        nonlocal spent
        spent += 1
        work = replace(p, kappa=kappa, g=g)
        try:
            u = reflection(work, dp, grid, variant)
            return bandwidth(grid, u, epsilon).width
        except MrqmError:
            return -1.0

    sol = solve_matching(p, dp, variant, impedance=True, spectral=True)
    analytic_inside = klo <= sol.kappa <= khi and glo <= sol.g <= ghi
    analytic_bw = bw_of(sol.kappa, sol.g) if analytic_inside else math.nan

    if analytic_inside:
        best = (sol.kappa, sol.g, analytic_bw)
    else:
        k0, g0 = 0.5 * (klo + khi), 0.5 * (glo + ghi)
        best = (k0, g0, bw_of(k0, g0))

    # two rounds of per-coordinate golden refinement; each line spends
    # n_iter + 2 evaluations, so size the lines to honor the budget
    per_line = max(2, (budget - spent) // 4 - 2)
    for _ in range(2):
        k_best = best[0]
        gval, gbw = _golden_max(lambda g: bw_of(k_best, g), glo, ghi,
                                per_line)
        if gbw > best[2]:
            best = (k_best, gval, gbw)
        g_best = best[1]
        kval, kbw = _golden_max(lambda k: bw_of(k, g_best), klo, khi,
                                per_line)
        if kbw > best[2]:
            best = (kval, g_best, kbw)
        if spent + 2 * (per_line + 2) > budget:
            break

    kappa, g, width = best
    work = replace(p, kappa=kappa, g=g)
    u0 = abs(reflection(work, dp, 0.0, variant)) ** 2
    edge = 1e-3
    pinned = (kappa - klo <= edge * (khi - klo) or khi - kappa <= edge * (khi - klo)
              or g - glo <= edge * (ghi - glo) or ghi - g <= edge * (ghi - glo))
    return OptimizeResult(kappa=kappa, g=g, bandwidth=width, u0_sq=float(u0),
                          evaluations=spent, boundary_pinned=bool(pinned),
                          analytic_bandwidth=analytic_bw)
