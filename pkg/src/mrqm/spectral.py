"""Closed-form frequency-domain engine.

Transfer of the input field into the common resonator is

    T_cw(w) = sqrt(kappa) / (kappa/2 + gamma_c - i w + Z(w)),

where Z(w) is the back-action of the loaded mini-resonator comb.  For
the two continuum descriptions of the comb (rectangular and Lorentzian
frequency distribution) Z(w) = M g^2 / (delta_in * F(w)) with the form
factors F1, F2 below; the ``discrete`` variant sums the M individual
mode responses instead.  The waveguide reflection follows from
A_in + A_out = sqrt(kappa) a:

    U(w) = (kappa/2 - gamma_c - Z + i w) / (kappa/2 + gamma_c + Z - i w).

|U|^2 is the spectral fraction lost back to the line; impedance matching
makes U(0) vanish.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, SingularResponseError
from .model import DerivedParams, Pulse, SystemParams, pulse_spectrum

# Denominators with modulus below this are reported as poles (possible
# only with every loss channel closed, exactly on resonance).
POLE_TOLERANCE = 1e-14

DEFAULT_GRID_POINTS = 4001
DEFAULT_GRID_SPAN = 1.5  # in units of delta_in, each side


class CombVariant(enum.Enum):
    """Description of the mini-resonator frequency distribution."""

    RECTANGULAR_F1 = "f1"
    LORENTZIAN_F2 = "f2"
    DISCRETE_SUM = "discrete"

    @classmethod
    def parse(cls, name) -> "CombVariant":
        if isinstance(name, cls):
            return name
        for v in cls:
            if v.value == name or v.name == name:
                return v
        raise ConfigError(f"unknown comb variant {name!r}; expected one of "
                          f"{[v.value for v in cls]}")


def frequency_grid(dp: DerivedParams, n: int = DEFAULT_GRID_POINTS,
                   span: float = DEFAULT_GRID_SPAN) -> np.ndarray:
    """Default evaluation grid: ``n`` points over +-``span``*delta_in."""
    if n < 2:
        raise ConfigError("grid needs at least 2 points")
    return np.linspace(-span * dp.delta_in, span * dp.delta_in, n)


def atomic_susceptibility(dp: DerivedParams, omega, mode: str = "exact"):
    """Ensemble response N_a f^2 / (delta_in_a - i w) of one mini-resonator.

    ``exact`` keeps the full Lorentzian kernel; ``linearized`` is the
    narrowband expansion gamma_a0 + i chi_tilde w used by the continuum
    formulas.
    """
    w = np.asarray(omega, dtype=float)
    if mode == "exact":
        out = dp.gamma_a0 * dp.delta_in_a / (dp.delta_in_a - 1j * w)
    elif mode == "linearized":
        out = dp.gamma_a0 + 1j * dp.chi_tilde * w + 0.0 * w
    else:
        raise ConfigError(f"unknown susceptibility mode {mode!r}")
    return out if out.ndim else complex(out)


def mode_response(dp: DerivedParams, delta_m: float, omega,
                  mode: str = "exact"):
    """Loaded mini-resonator response M_m(delta_m, w).

    exact:        1 / (gamma_b + susceptibility(w) + i (delta_m - w))
    approximate:  chi / (chi gamma_sigma + i (chi delta_m - w)),
    i.e. the interaction with atoms shifts the line (delta_m ->
    chi delta_m) and broadens it (gamma_b -> chi gamma_sigma).
    """
    w = np.asarray(omega, dtype=float)
    gamma_b = dp.gamma_sigma - dp.gamma_a0
    if mode == "exact":
        den = gamma_b + atomic_susceptibility(dp, w, "exact") + 1j * (delta_m - w)
    elif mode == "approximate":
        den = (dp.chi * dp.gamma_sigma + 1j * (dp.chi * delta_m - w)) / dp.chi
    else:
        raise ConfigError(f"unknown mode_response mode {mode!r}")
    den = np.asarray(den, dtype=complex)
    _check_pole(den)
    out = 1.0 / den
    return out if out.ndim else complex(out)


def _check_pole(den):
    amin = np.min(np.abs(den))
    if amin < POLE_TOLERANCE:
        raise SingularResponseError(
            f"response pole: denominator modulus {amin:.3g} < {POLE_TOLERANCE}")


def form_factor(variant, dp: DerivedParams, omega):
    """Comb form factor F(w) of the continuum variants.

    F1 (rectangular comb): 1 / (pi - [phi_+ + phi_-] + i ln B) with
    phi_+- = arctan(2 chi gamma_sigma / (chi delta_in +- 2 w)) continued
    continuously in w (phi_+- < pi/2 at w = 0, plus pi once the arctan
    denominator changes sign), and

    B = sqrt( ((chi delta_in/2 + w)^2 + (chi gamma_sigma)^2)
            / ((chi delta_in/2 - w)^2 + (chi gamma_sigma)^2) ).

    F2 (Lorentzian comb): 1 + (chi gamma_sigma - i w)/(chi delta_in).
    """
    variant = CombVariant.parse(variant)
    w = np.asarray(omega, dtype=float)
    cd = dp.chi * dp.delta_in
    cg = dp.chi * dp.gamma_sigma
    if variant is CombVariant.LORENTZIAN_F2:
        out = 1.0 + (cg - 1j * w) / cd
        return out if out.ndim else complex(out)
    if variant is not CombVariant.RECTANGULAR_F1:
        raise ConfigError("form_factor is defined for the continuum variants only")
    q_plus = (cd / 2 + w) ** 2 + cg**2
    q_minus = (cd / 2 - w) ** 2 + cg**2
    if np.min(q_plus) == 0.0 or np.min(q_minus) == 0.0:
        raise SingularResponseError(
            "F1 log singularity: gamma_sigma = 0 at |w| = chi*delta_in/2")
    # phi_+- = pi/2 - atan2(cd/2 -+ w, cg) realizes the continuous branch.
    phi_sum = np.pi - np.arctan2(cd / 2 - w, cg) - np.arctan2(cd / 2 + w, cg)
    log_b = 0.5 * (np.log(q_plus) - np.log(q_minus))
    out = 1.0 / (np.pi - phi_sum + 1j * log_b)
    return out if out.ndim else complex(out)


def comb_back_action(p: SystemParams, dp: DerivedParams, omega, variant):
    """Z(w): total back-action of the comb on the common resonator."""
    variant = CombVariant.parse(variant)
    w = np.asarray(omega, dtype=float)
    if variant is CombVariant.DISCRETE_SUM:
        z = np.zeros(np.broadcast(w, 0.0).shape, dtype=complex)
        for delta_m in dp.comb_frequencies:
            z = z + mode_response(dp, delta_m, w, mode="exact")
        out = p.g**2 * z
    else:
        out = p.M * p.g**2 / (dp.delta_in * form_factor(variant, dp, w))
    return out if np.ndim(out) else complex(out)


def cavity_transfer(p: SystemParams, dp: DerivedParams, omega,
                    variant=CombVariant.RECTANGULAR_F1):
    """T_cw(w): input field -> common-resonator amplitude."""
    if p.kappa <= 0:
        raise ConfigError("cavity_transfer requires kappa > 0")
    w = np.asarray(omega, dtype=float)
    den = p.kappa / 2 + p.gamma_c - 1j * w + comb_back_action(p, dp, w, variant)
    _check_pole(den)
    out = np.sqrt(p.kappa) / den
    return out if out.ndim else complex(out)


def reflection(p: SystemParams, dp: DerivedParams, omega,
               variant=CombVariant.RECTANGULAR_F1):
    """U(w): waveguide reflection transfer function."""
    if p.kappa <= 0:
        raise ConfigError("reflection requires kappa > 0")
    w = np.asarray(omega, dtype=float)
    z = comb_back_action(p, dp, w, variant)
    den = p.kappa / 2 + p.gamma_c + z - 1j * w
    _check_pole(den)
    out = (p.kappa / 2 - p.gamma_c - z + 1j * w) / den
    return out if out.ndim else complex(out)


def mini_mode_spectrum(p: SystemParams, dp: DerivedParams, pulse: Pulse,
                       m: int, omega, variant=CombVariant.RECTANGULAR_F1):
    """Spectral amplitude b~_m(w) of the m-th mini-resonator mode.

    Lorentzian profile centered at chi*delta_m with half-width
    chi*gamma_sigma, weighted by the in-coupled field:

        b~_m = -i g chi T_cw(w) A~_in(w) / (chi gamma_sigma + i (chi delta_m - w))
    """
    delta_m = dp.comb_frequencies[m]
    w = np.asarray(omega, dtype=float)
    den = dp.chi * dp.gamma_sigma + 1j * (dp.chi * delta_m - w)
    _check_pole(den)
    out = (-1j * p.g * dp.chi * cavity_transfer(p, dp, w, variant)
           * pulse_spectrum(pulse, w) / den)
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# Tabulated response + CSV emission
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("omega", "ReU", "ImU", "absU2", "ReTcw", "ImTcw")


@dataclass(frozen=True)
class SpectralResponse:
    """Transfer functions sampled on a frequency grid."""

    grid: np.ndarray
    T_cw: np.ndarray
    U: np.ndarray
    b_m_spectra: Optional[np.ndarray] = None  # shape (M, len(grid))

    def __post_init__(self):
        if self.grid.shape != self.T_cw.shape or self.grid.shape != self.U.shape:
            raise ConfigError("grid/T_cw/U length mismatch")
        if not (np.all(np.isfinite(self.T_cw)) and np.all(np.isfinite(self.U))):
            raise SingularResponseError("non-finite values in spectral response")
        if np.any(np.diff(self.grid) <= 0):
            raise ConfigError("frequency grid must be strictly increasing")


def response_table(p: SystemParams, dp: DerivedParams, grid: np.ndarray,
                   variant=CombVariant.RECTANGULAR_F1,
                   pulse: Optional[Pulse] = None,
                   with_modes: bool = False) -> SpectralResponse:
    """Evaluate T_cw and U (optionally all b~_m) on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    t_cw = cavity_transfer(p, dp, grid, variant)
    u = reflection(p, dp, grid, variant)
    modes = None
    if with_modes:
        if pulse is None:
            raise ConfigError("mode spectra need the input pulse")
        modes = np.stack([mini_mode_spectrum(p, dp, pulse, m, grid, variant)
                          for m in range(p.M)])
    return SpectralResponse(grid=grid, T_cw=t_cw, U=u, b_m_spectra=modes)


def response_rows(resp: SpectralResponse):
    """Rows for CSV emission, one per grid point, columns CSV_COLUMNS."""
    u2 = np.abs(resp.U) ** 2
    for i in range(resp.grid.size):
        yield (resp.grid[i], resp.U[i].real, resp.U[i].imag, u2[i],
               resp.T_cw[i].real, resp.T_cw[i].imag)
