"""Impedance and spectral matching, and working-bandwidth measurement.

Impedance matching chooses kappa so the on-resonance reflection U(0)
vanishes (complete transfer into the resonator+atom system):

    kappa = 2 gamma_c + 2 M g^2 / (delta_in * F(0)).

Spectral matching additionally cancels the linear-in-w term of the
response, flattening the absorption band:

    4 M g^2 = (chi delta_in)^2 + 4 (chi gamma_sigma)^2.

With both conditions the reflection grows only quartically around the
line center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .model import DerivedParams, SystemParams
from .spectral import CombVariant, reflection


def impedance_kappa(p: SystemParams, dp: DerivedParams,
                    variant=CombVariant.RECTANGULAR_F1) -> float:
    """kappa that cancels U(0) for the given comb variant.

    Rectangular and Lorentzian combs admit explicit closed forms:

        kappa = 2 gamma_c + 2 pi (g^2/delta) (1 - (2/pi) arctan(2 gamma_sigma/delta_in))
        kappa = 2 gamma_c + 2 M g^2 / (delta_in + gamma_sigma)

    and both equal the generic 2 gamma_c + 2 M g^2/(delta_in F(0)).
    The discrete variant uses the comb-sum back-action at w = 0 (real by
    the symmetry of the ladder).
    """
    if dp.delta_in <= 0:
        raise ConfigError("impedance matching requires delta_in > 0")
    variant = CombVariant.parse(variant)
    if variant is CombVariant.RECTANGULAR_F1:
        ratio = 2.0 * dp.gamma_sigma / dp.delta_in
        return 2.0 * p.gamma_c + 2.0 * math.pi * (p.g**2 * p.M / dp.delta_in) \
            * (1.0 - (2.0 / math.pi) * math.atan(ratio))
    if variant is CombVariant.LORENTZIAN_F2:
        return 2.0 * p.gamma_c + 2.0 * p.M * p.g**2 / (dp.delta_in + dp.gamma_sigma)
    # discrete comb: 2 g^2 Re sum_m M_m(0)
    from .spectral import comb_back_action
    z0 = comb_back_action(p, dp, 0.0, variant)
    return 2.0 * p.gamma_c + 2.0 * float(np.real(z0))


def spectral_match_g(dp: DerivedParams, M: int) -> float:
    """g that cancels the linear frequency dependence of U."""
    if M < 1:
        raise ConfigError("M must be >= 1")
    return math.sqrt(((dp.chi * dp.delta_in) ** 2
                      + 4.0 * (dp.chi * dp.gamma_sigma) ** 2) / (4.0 * M))


def matched_kappa_combined(dp: DerivedParams, gamma_c: float = 0.0) -> float:
    """kappa under both conditions at once (rectangular comb):

    kappa = 2 gamma_c + chi (delta_in^2 + 4 gamma_sigma^2)/(2 delta_in)
            * (pi - 2 arctan(2 gamma_sigma/delta_in))
    """
    if dp.delta_in <= 0:
        raise ConfigError("matched kappa requires delta_in > 0")
    d, gs = dp.delta_in, dp.gamma_sigma
    return 2.0 * gamma_c + dp.chi * (d**2 + 4.0 * gs**2) / (2.0 * d) \
        * (math.pi - 2.0 * math.atan(2.0 * gs / d))


@dataclass(frozen=True)
class MatchSolution:
    """Solver output: matched constants plus post-solve residuals."""

    kappa: float
    g: float
    variant: CombVariant
    impedance: bool
    spectral: bool
    residual_u0_sq: float     # |U(0)|^2 at the solution
    residual_du_dw: float     # |dU/dw(0)|, central difference

    def as_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "g": self.g,
            "variant": self.variant.value,
            "conditions": {"impedance": self.impedance, "spectral": self.spectral},
            "residuals": {"u0_sq": self.residual_u0_sq,
                          "du_dw": self.residual_du_dw},
        }


def solve_matching(p: SystemParams, dp: DerivedParams,
                   variant=CombVariant.RECTANGULAR_F1,
                   impedance: bool = True, spectral: bool = False) -> MatchSolution:
    """Apply the requested conditions; g (kappa-independent) solves first."""
    variant = CombVariant.parse(variant)
    g = spectral_match_g(dp, p.M) if spectral else p.g
    work = replace(p, g=g)
    kappa = impedance_kappa(work, dp, variant) if impedance else p.kappa
    work = replace(work, kappa=kappa)
    u0 = reflection(work, dp, 0.0, variant)
    h = 1e-6 * dp.delta_in
    du = (reflection(work, dp, h, variant)
          - reflection(work, dp, -h, variant)) / (2.0 * h)
    return MatchSolution(kappa=kappa, g=g, variant=variant,
                         impedance=impedance, spectral=spectral,
                         residual_u0_sq=float(abs(u0) ** 2),
                         residual_du_dw=float(abs(du)))


def matched_params(p: SystemParams, dp: DerivedParams,
                   variant=CombVariant.RECTANGULAR_F1,
                   impedance: bool = True, spectral: bool = False):
    """Convenience: (SystemParams with matched kappa/g, MatchSolution)."""
    sol = solve_matching(p, dp, variant, impedance, spectral)
    return replace(p, kappa=sol.kappa, g=sol.g), sol


# ---------------------------------------------------------------------------
# Working bandwidth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandwidthReport:
    """Largest contiguous interval around w=0 with |U|^2 < epsilon."""

    epsilon: float
    width: float
    lo: float
    hi: float


def bandwidth(grid: np.ndarray, u: np.ndarray, epsilon: float) -> BandwidthReport:
    """Measure the working band of a sampled reflection curve.

    The interval must contain w = 0; edges are linearly interpolated at
    the epsilon crossings.  If |U(0)|^2 >= epsilon the report is empty
    (width 0).  epsilon = 1 is allowed and yields the full grid span for
    any strictly passive response.
    """
    if not (0.0 < epsilon <= 1.0):
        raise ConfigError("epsilon must lie in (0, 1]")
    grid = np.asarray(grid, dtype=float)
    u2 = np.abs(np.asarray(u)) ** 2
    if grid[0] > 0.0 or grid[-1] < 0.0:
        raise ConfigError("grid must span w = 0")
    i0 = int(np.argmin(np.abs(grid)))
    if u2[i0] >= epsilon:
        return BandwidthReport(epsilon=epsilon, width=0.0, lo=0.0, hi=0.0)

    def cross(i, j):
        # epsilon crossing between grid[i] (inside) and grid[j] (outside)
        du = u2[j] - u2[i]
        frac = 0.5 if du == 0 else (epsilon - u2[i]) / du
        return grid[i] + frac * (grid[j] - grid[i])

    hi_i = i0
    while hi_i + 1 < grid.size and u2[hi_i + 1] < epsilon:
        hi_i += 1
    hi = grid[-1] if hi_i == grid.size - 1 else cross(hi_i, hi_i + 1)
    lo_i = i0
    while lo_i - 1 >= 0 and u2[lo_i - 1] < epsilon:
        lo_i -= 1
    lo = grid[0] if lo_i == 0 else cross(lo_i, lo_i - 1)
    return BandwidthReport(epsilon=epsilon, width=float(hi - lo),
                           lo=float(lo), hi=float(hi))
