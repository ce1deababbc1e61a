"""Physical parameters, derived constants and input pulses.

The device is a common (bus) resonator coupled to an external waveguide
with rate ``kappa`` and to M mini-resonators with uniform rate ``g``.
The mini-resonator frequencies form a comb of spacing ``delta`` centered
on the rotating-frame zero; each mini-resonator holds an ensemble of
``N_a`` atoms whose transition frequencies follow a Lorentzian of
half-width ``delta_in_atomic``, much wider than the comb.

Everything is expressed in one user-chosen angular-frequency unit; the
library never attaches absolute units, only dimensionless ratios matter.
All containers are frozen and safe to share between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError

# Detunings beyond this multiple of the inhomogeneous width are clipped to
# the boundary; this bounds the fastest oscillation the integrator must
# resolve while moving a negligible amount of Lorentzian mass (~1.3%).
DETUNING_CAP_FACTOR = 50.0


@dataclass(frozen=True)
class SystemParams:
    """Raw device constants (angular-frequency units throughout).

    Parameters
    ----------
    kappa : float
        Common-resonator/waveguide coupling rate.
    gamma_c : float
        Common-resonator internal loss rate.
    gamma_b : float
        Mini-resonator intrinsic loss rate.
    gamma_a : float
        Atomic transverse (homogeneous) decay rate.
    g : float
        Uniform common<->mini coupling.
    f : float
        Uniform atom<->mini coupling.
    M : int
        Number of mini-resonators.
    delta : float
        Comb spacing between adjacent mini-resonator frequencies.
    delta_in_atomic : float
        Lorentzian half-width of the inhomogeneous atomic line.
    N_a : int
        Atoms per mini-resonator.
    T1 : float
        Longitudinal relaxation time (inf = no energy relaxation).
    gamma_12 : float
        Decoherence rate of the spin (shelving) transition.
    tau1, tau2, Ts : float
        Protocol intervals used by the total-efficiency estimate.
    """

    kappa: float
    gamma_c: float
    gamma_b: float
    gamma_a: float
    g: float
    f: float
    M: int
    delta: float
    delta_in_atomic: float
    N_a: int
    T1: float = math.inf
    gamma_12: float = 0.0
    tau1: float = 0.0
    tau2: float = 0.0
    Ts: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "gamma_c", "gamma_b", "gamma_a", "g", "f",
                     "delta", "delta_in_atomic", "gamma_12", "tau1", "tau2", "Ts"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {v!r}")
        if not (self.T1 > 0):
            raise ConfigError(f"T1 must be positive (inf allowed), got {self.T1!r}")
        if self.M < 1:
            raise ConfigError(f"M must be >= 1, got {self.M}")
        if self.N_a < 1:
            raise ConfigError(f"N_a must be >= 1, got {self.N_a}")
        if self.delta <= 0:
            raise ConfigError("delta must be > 0")
        if self.delta_in_atomic <= 0:
            raise ConfigError("delta_in_atomic must be > 0")


@dataclass(frozen=True)
class DerivedParams:
    """Constants derived from :class:`SystemParams`.

    ``gamma_a0`` is the collective absorption rate of a mini-resonator
    mode by its ensemble, N_a f^2 / (delta_in_atomic + gamma_a).  The
    dispersive pulling factor ``chi`` shifts comb frequencies
    (delta_m -> chi delta_m) and scales linewidths.
    """

    delta_in: float          # comb spectral width M*delta
    delta_in_a: float        # delta_in_atomic + gamma_a
    gamma_a0: float          # collective absorption rate
    gamma_sigma: float       # loaded mini-resonator linewidth gamma_a0 + gamma_b
    chi_tilde: float         # gamma_a0 / delta_in_a
    chi: float               # 1 / (1 - chi_tilde)
    tau: float               # comb rephasing period 2*pi/delta
    comb_frequencies: tuple  # symmetric ladder m*delta, m in {-(M-1)/2 .. (M-1)/2}


def derive_params(p: SystemParams, force_chi_one: bool = False) -> DerivedParams:
    """Compute :class:`DerivedParams` from raw constants.

    Pure and deterministic: equal inputs give bit-identical outputs.
    With ``force_chi_one`` the dispersive pulling is switched off
    (chi = 1, chi_tilde = 0), the convention under which the reference
    reflection curves are quoted.

    Raises
    ------
    ConfigError
        If the linearized ensemble response is invalid (chi_tilde >= 1).
    """
    delta_in_a = p.delta_in_atomic + p.gamma_a
    gamma_a0 = p.N_a * p.f**2 / delta_in_a
    chi_tilde = gamma_a0 / delta_in_a
    if chi_tilde >= 1.0:
        raise ConfigError(
            f"chi_tilde = {chi_tilde:.3g} >= 1: ensemble response too strong "
            "for the dispersive linearization")
    if force_chi_one:
        chi_tilde, chi = 0.0, 1.0
    else:
        chi = 1.0 / (1.0 - chi_tilde)
    m = np.arange(p.M) - (p.M - 1) / 2.0
    comb = tuple(float(x) for x in m * p.delta)
    return DerivedParams(
        delta_in=p.M * p.delta,
        delta_in_a=delta_in_a,
        gamma_a0=gamma_a0,
        gamma_sigma=gamma_a0 + p.gamma_b,
        chi_tilde=chi_tilde,
        chi=chi,
        tau=2.0 * math.pi / p.delta,
        comb_frequencies=comb,
    )


def params_for_gamma_sigma(p: SystemParams, gamma_sigma: float,
                           gamma_b: float = 0.0) -> SystemParams:
    """Return a copy of ``p`` with ``f`` chosen so the loaded linewidth
    gamma_a0 + gamma_b equals ``gamma_sigma``.

    Convenient for sweeping the ensemble interaction strength, which is
    not itself a raw device constant.
    """
    target = gamma_sigma - gamma_b
    if target < 0:
        raise ConfigError("gamma_sigma must be >= gamma_b")
    delta_in_a = p.delta_in_atomic + p.gamma_a
    f = math.sqrt(target * delta_in_a / p.N_a)
    return replace(p, f=f, gamma_b=gamma_b)


# ---------------------------------------------------------------------------
# Input pulse
# ---------------------------------------------------------------------------

PULSE_SHAPES = ("gaussian",)


@dataclass(frozen=True)
class Pulse:
    """Gaussian input envelope.

    A_in(t) = sqrt(W_in) (2/(pi dt_s^2))^(1/4)
              exp(-(t-t0)^2/dt_s^2 - i carrier_offset (t-t0))

    normalized so that the integral of |A_in|^2 over time equals the
    photon number ``W_in``.  Spectra follow the convention
    A~(w) = (2 pi)^(-1/2) * Integral A(t) exp(+i w t) dt.
    """

    shape: str
    W_in: float
    dt_s: float
    t0: float
    carrier_offset: float

    @property
    def peak_amplitude(self) -> float:
        return math.sqrt(self.W_in) * (2.0 / (math.pi * self.dt_s**2)) ** 0.25


def make_pulse(shape: str = "gaussian", W_in: float = 1.0, dt_s: float = 1.0,
               t0: float = 0.0, carrier_offset: float = 0.0) -> Pulse:
    if shape not in PULSE_SHAPES:
        raise ConfigError(f"unknown pulse shape {shape!r}; supported: {PULSE_SHAPES}")
    if dt_s <= 0:
        raise ConfigError("dt_s must be > 0")
    if W_in < 0:
        raise ConfigError("W_in must be >= 0")
    return Pulse(shape=shape, W_in=W_in, dt_s=dt_s, t0=t0,
                 carrier_offset=carrier_offset)


def evaluate_pulse(pulse: Pulse, t):
    """Complex envelope A_in(t); accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    u = (t - pulse.t0) / pulse.dt_s
    out = pulse.peak_amplitude * np.exp(-u * u) \
        * np.exp(-1j * pulse.carrier_offset * (t - pulse.t0))
    return out if out.ndim else complex(out)


def pulse_spectrum(pulse: Pulse, omega):
    """Closed-form transform A~(w) of the Gaussian envelope."""
    w = np.asarray(omega, dtype=float)
    dw = w - pulse.carrier_offset
    out = (math.sqrt(pulse.W_in) * (pulse.dt_s**2 / (2.0 * math.pi)) ** 0.25
           * np.exp(-dw * dw * pulse.dt_s**2 / 4.0)
           * np.exp(1j * w * pulse.t0))
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# Deterministic Lorentzian sampling of the inhomogeneous line
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomSampling:
    """Quantile discretization of the atomic Lorentzian.

    Every mini-resonator carries the same deterministic node set:
    midpoint quantiles delta_j = delta_in_atomic * tan(pi (u_j - 1/2)),
    u_j = (j - 1/2)/N, equal weights 1/N, clipped at
    +-DETUNING_CAP_FACTOR * delta_in_atomic.  Node arrays are read-only.
    """

    nodes_per_resonator: int
    detunings: np.ndarray = field(repr=False)   # shape (N,)
    weights: np.ndarray = field(repr=False)     # shape (N,), sums to 1

    def __post_init__(self):
        self.detunings.setflags(write=False)
        self.weights.setflags(write=False)


def sample_atoms(delta_in_atomic: float, n: int,
                 cap_factor: float = DETUNING_CAP_FACTOR) -> AtomSampling:
    """Midpoint-quantile Lorentzian sample with equal weights.

    Deterministic by construction so that the time-domain oracle is
    exactly reproducible.
    """
    if n < 1:
        raise ConfigError("need at least one node per resonator")
    j = np.arange(1, n + 1)
    u = (j - 0.5) / n
    det = delta_in_atomic * np.tan(np.pi * (u - 0.5))
    cap = cap_factor * delta_in_atomic
    det = np.clip(det, -cap, cap)
    w = np.full(n, 1.0 / n)
    return AtomSampling(nodes_per_resonator=n, detunings=det, weights=w)


def effective_absorption_rate(sampling: AtomSampling, p: SystemParams) -> float:
    """Collective absorption rate realized by the discrete node set.

    Re sum_j N_a w_j f^2 / (gamma_a + i delta_j); converges to gamma_a0
    once gamma_a resolves the node spacing (a few nodes per gamma_a).
    """
    z = p.gamma_a + 1j * sampling.detunings
    return float(np.sum(p.N_a * sampling.weights * p.f**2 * np.real(1.0 / z)))
