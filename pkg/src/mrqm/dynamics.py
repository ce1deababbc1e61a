"""Time-domain engine: brute-force integration of the coupled
common-resonator / mini-resonator / atom amplitude equations, analytic
time-domain solutions, energy diagnostics, idealized echo retrieval and
efficiency estimators.

The integration is the package's oracle: it knows nothing of the
frequency-domain closed forms and can therefore cross-validate them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import erfc

from . import backend
from .errors import ConfigError, IntegrationError, PreconditionError
from .model import (AtomSampling, DerivedParams, Pulse, SystemParams,
                    evaluate_pulse, pulse_spectrum)
from .spectral import CombVariant, cavity_transfer

MAX_STATE_DIM = 1_000_000

TRAJECTORY_CSV_COLUMNS = ("t", "Re_a", "Im_a", "P_M", "P_a",
                          "Re_Aout", "Im_Aout", "E_in", "E_out")


@dataclass(frozen=True)
class LinearSystem:
    """Assembled coupled-mode system.

    State order: [a, b_0..b_{M-1}, S_00..S_{M-1,N-1}] with atoms grouped
    by resonator; five energy accumulators are appended internally.
    The sparse structure (a<->each b_m, b_m<->its own S_jm) never
    materializes a matrix.
    """

    params: SystemParams
    derived: DerivedParams
    sampling: Optional[AtomSampling]
    diag_a: complex = field(repr=False, default=0j)
    diag_b: np.ndarray = field(repr=False, default=None)
    diag_s: np.ndarray = field(repr=False, default=None)
    f_node: float = 0.0

    @property
    def n_nodes(self) -> int:
        return self.sampling.nodes_per_resonator if self.sampling else 0

    @property
    def dim(self) -> int:
        return 1 + self.params.M * (1 + self.n_nodes)

    def zero_state(self) -> np.ndarray:
        # +5 accumulator slots (E_in, E_out, D_c, D_b, D_a)
        return np.zeros(self.dim + 5, dtype=np.complex128)

    def dense_generator(self) -> np.ndarray:
        """Dense matrix of the homogeneous part (small systems only)."""
        if self.dim > 4000:
            raise ConfigError("dense generator only supported for small systems")
        p, M, N = self.params, self.params.M, self.n_nodes
        A = np.zeros((self.dim, self.dim), dtype=complex)
        A[0, 0] = self.diag_a
        for m in range(M):
            A[1 + m, 1 + m] = self.diag_b[m]
            A[0, 1 + m] = -1j * p.g
            A[1 + m, 0] = -1j * p.g
            for j in range(N):
                i = 1 + M + m * N + j
                A[i, i] = self.diag_s[m * N + j]
                A[1 + m, i] = -1j * self.f_node
                A[i, 1 + m] = -1j * self.f_node
        return A


def build_system(p: SystemParams, dp: DerivedParams,
                 sampling: Optional[AtomSampling]) -> LinearSystem:
    """Assemble the system deterministically from params + atom sample.

    ``sampling=None`` builds the empty comb (no atomic degrees of
    freedom).  Each node carries coupling f*sqrt(N_a/N) so the sampled
    ensemble realizes the full collective rate gamma_a0.
    """
    M = p.M
    n = sampling.nodes_per_resonator if sampling is not None else 0
    dim = 1 + M * (1 + n)
    if dim > MAX_STATE_DIM:
        raise ConfigError(f"state dimension {dim} exceeds {MAX_STATE_DIM}")
    diag_a = -(p.kappa / 2 + p.gamma_c) + 0j
    diag_b = -(1j * np.asarray(dp.comb_frequencies) + p.gamma_b)
    if sampling is not None:
        det = np.tile(sampling.detunings, M)
        diag_s = -(1j * det + p.gamma_a)
        # equal weights: node coupling f*sqrt(N_a * w_j)
        f_node = p.f * math.sqrt(p.N_a * sampling.weights[0])
    else:
        diag_s = np.zeros(0, dtype=complex)
        f_node = 0.0
    return LinearSystem(params=p, derived=dp, sampling=sampling,
                        diag_a=diag_a, diag_b=diag_b, diag_s=diag_s,
                        f_node=f_node)


@dataclass(frozen=True)
class Trajectory:
    """Recorded time evolution plus energy bookkeeping.

    ``A_out = sqrt(kappa) a - A_in``; energies are running integrals
    computed inside the integrator, so the ledger

        E_in - E_out - (|a|^2 + P_M + P_a) - (D_c + D_b + D_a) = 0

    holds to integrator accuracy at every sample.
    """

    system: LinearSystem
    pulse: Optional[Pulse]
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray            # (nrec, M)
    A_in: np.ndarray
    A_out: np.ndarray
    P_M: np.ndarray
    P_a: np.ndarray
    E_in: np.ndarray
    E_out: np.ndarray
    D_c: np.ndarray
    D_b: np.ndarray
    D_a: np.ndarray
    final_state: np.ndarray  # full state incl accumulators, at t[-1]
    n_steps: int
    n_rejected: int

    @property
    def internal_energy(self) -> np.ndarray:
        return np.abs(self.a) ** 2 + self.P_M + self.P_a

    def ledger_residual(self) -> np.ndarray:
        """E_in - E_out - internal - dissipated at every sample time."""
        return (self.E_in - self.E_out - self.internal_energy
                - (self.D_c + self.D_b + self.D_a))

    def csv_rows(self):
        for i in range(self.t.size):
            yield (self.t[i], self.a[i].real, self.a[i].imag,
                   self.P_M[i], self.P_a[i],
                   self.A_out[i].real, self.A_out[i].imag,
                   self.E_in[i], self.E_out[i])


def _run_kernel(sys: LinearSystem, pulse: Optional[Pulse], y0, t_start,
                record_ts, rtol, atol):
    p = sys.params
    if pulse is not None:
        amp0, pt0 = pulse.peak_amplitude, pulse.t0
        dts, woff = pulse.dt_s, pulse.carrier_offset
    else:
        amp0, pt0, dts, woff = 0.0, 0.0, 1.0, 0.0
    h0 = min(1e-3, (record_ts[-1] - t_start) / 100.0) if record_ts.size else 1e-3
    h_max = max(record_ts[1] - record_ts[0], 1e-6) if record_ts.size > 1 else 1.0
    rec, y_final, status, t_reached, nstep, nrej = backend.integrate_dp5(
        np.ascontiguousarray(y0, dtype=np.complex128), float(t_start),
        np.ascontiguousarray(record_ts, dtype=float),
        p.M, sys.n_nodes, complex(sys.diag_a),
        np.ascontiguousarray(sys.diag_b, dtype=np.complex128),
        np.ascontiguousarray(sys.diag_s, dtype=np.complex128),
        float(p.g), float(sys.f_node), math.sqrt(p.kappa),
        float(amp0), float(pt0), float(dts), float(woff),
        p.gamma_c, p.gamma_b, p.gamma_a,
        float(rtol), float(atol), h0, h_max)
    if status != 0:
        raise IntegrationError(f"step-size underflow at t = {t_reached!r}",
                               t=t_reached)
    return rec, y_final, nstep, nrej


def _trajectory_from(sys, pulse, ts, rec, y_final, nstep, nrej) -> Trajectory:
    M = sys.params.M
    a = rec[:, 0]
    b = rec[:, 1:1 + M]
    p_a = rec[:, 1 + M].real
    acc = rec[:, 2 + M:].real
    a_in = (evaluate_pulse(pulse, ts) if pulse is not None
            else np.zeros_like(ts, dtype=complex))
    a_in = np.atleast_1d(a_in)
    a_out = math.sqrt(sys.params.kappa) * a - a_in
    return Trajectory(
        system=sys, pulse=pulse, t=ts, a=a, b=b, A_in=a_in, A_out=a_out,
        P_M=np.sum(np.abs(b) ** 2, axis=1), P_a=p_a,
        E_in=acc[:, 0], E_out=acc[:, 1],
        D_c=acc[:, 2], D_b=acc[:, 3], D_a=acc[:, 4],
        final_state=y_final, n_steps=nstep, n_rejected=nrej)


def integrate(sys: LinearSystem, pulse: Optional[Pulse], t_span,
              rtol: float = 1e-9, atol: float = 1e-12,
              record_dt: Optional[float] = None,
              y0: Optional[np.ndarray] = None) -> Trajectory:
    """Adaptive integration over ``t_span = (t0, t1)``.

    The recording grid is uniform with spacing ``record_dt`` (default:
    span/400, at least 16 samples per comb-edge period so spectral
    post-processing resolves the band).
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ConfigError("t_span must satisfy t1 > t0")
    if record_dt is None:
        w_edge = max(1.5 * sys.derived.delta_in, 1e-6)
        record_dt = min((t1 - t0) / 400.0, 2.0 * math.pi / (16.0 * w_edge))
    ts = t0 + record_dt * np.arange(int(round((t1 - t0) / record_dt)) + 1)
    ts = ts[ts <= t1 + 1e-12 * max(1.0, abs(t1))]
    y0 = sys.zero_state() if y0 is None else y0
    rec, y_final, nstep, nrej = _run_kernel(sys, pulse, y0, t0, ts, rtol, atol)
    return _trajectory_from(sys, pulse, ts, rec, y_final, nstep, nrej)


def output_spectrum_ratio(traj: Trajectory, pulse: Pulse,
                          omega: Optional[np.ndarray] = None,
                          support_floor: float = 1e-4):
    """Windowed transfer ratio A~_out(w)/A~_in(w) of a recorded run.

    Both transforms use the same trapezoid quadrature over the recording
    window, so windowing bias cancels in the ratio.  The ratio is only
    returned where the input spectral density exceeds ``support_floor``
    times its maximum; outside that mask it is ill-conditioned.

    Returns (omega, ratio) restricted to the mask.
    """
    resid = (np.abs(traj.a[-1]) ** 2 + traj.P_M[-1])
    w_in = max(traj.E_in[-1], 1e-300)
    if resid > 1e-4 * w_in:
        warnings.warn(
            f"residual cavity energy {resid:.2e} > 1e-4 W_in: the windowed "
            "ratio truncates un-emitted energy", stacklevel=2)
    if omega is None:
        # cover the pulse support with a few points per spectral std
        sw = 1.0 / pulse.dt_s
        omega = pulse.carrier_offset + np.linspace(-5 * sw, 5 * sw, 161)
    omega = np.asarray(omega, dtype=float)
    ain_w = np.abs(pulse_spectrum(pulse, omega)) ** 2
    mask = ain_w > support_floor * ain_w.max()
    omega = omega[mask]
    dt = traj.t[1] - traj.t[0]
    ph = np.exp(1j * np.outer(omega, traj.t))
    num = (ph * traj.A_out[None, :]).sum(axis=1) * dt
    den = (ph * traj.A_in[None, :]).sum(axis=1) * dt
    return omega, num / den


def storage_efficiency(traj: Trajectory) -> float:
    """Fraction of the input energy not reflected back by the end of the
    run: 1 - E_out/E_in."""
    if traj.E_in[-1] <= 0:
        raise PreconditionError("no input energy recorded")
    return float(1.0 - traj.E_out[-1] / traj.E_in[-1])


# ---------------------------------------------------------------------------
# Analytic time-domain solutions
# ---------------------------------------------------------------------------

def analytic_b_m(p: SystemParams, dp: DerivedParams, pulse: Pulse, m: int, t,
                 mode: str = "convolution"):
    """Mini-resonator amplitude under impedance matching.

    ``convolution``: b_m(t) = -i g chi/sqrt(kappa) *
        Integral_-inf^t exp(-chi (i Delta_m + gamma_sigma)(t-t')) A_in(t') dt'
    (a(t) ~ A_in/sqrt(kappa) inserted in the driven-mode solution), with
    the Gaussian integral evaluated in closed form.

    ``post_pulse``: the t > dt_s asymptote
        -i sqrt(2 pi) (g chi / sqrt(kappa)) A~_in(chi Delta_m)
        exp(-chi (i Delta_m + gamma_sigma) t)
    with the decay referenced to the pulse center (the phase reference is
    carried by the spectrum's exp(i w t0) factor).
    """
    delta_m = dp.comb_frequencies[m]
    t = np.asarray(t, dtype=float)
    lam = dp.chi * (1j * delta_m + dp.gamma_sigma)
    pref = -1j * p.g * dp.chi / math.sqrt(p.kappa)
    if mode == "post_pulse":
        out = (pref * math.sqrt(2.0 * math.pi)
               * pulse_spectrum(pulse, dp.chi * delta_m)
               * np.exp(-1j * dp.chi * delta_m * t)
               * np.exp(-dp.chi * dp.gamma_sigma * (t - pulse.t0)))
        return out if out.ndim else complex(out)
    if mode != "convolution":
        raise ConfigError(f"unknown analytic_b_m mode {mode!r}")
    # exp(-u^2/dt_s^2) is a Gaussian of std s = dt_s/sqrt(2); its
    # one-sided exponential convolution has the shifted-erfc closed form
    s = pulse.dt_s / math.sqrt(2.0)
    zc = lam - 1j * pulse.carrier_offset
    u = t - pulse.t0
    arg = zc * s / math.sqrt(2.0) - u / (s * math.sqrt(2.0))
    out = (pref * pulse.peak_amplitude * s * math.sqrt(2.0 * math.pi)
           * 0.5 * np.exp(zc**2 * s**2 / 2.0 - lam * u) * erfc(arg))
    return out if out.ndim else complex(out)


def mini_energy(p: SystemParams, dp: DerivedParams, pulse: Pulse, t,
                variant: str = "limit"):
    """Total mini-resonator excitation P_M after/during loading.

    ``limit``: W_in exp(-2 chi gamma_sigma t), the short-pulse, wide-comb
    limit (t measured from the pulse center).

    ``detailed``: prefactor 2 M g^2 delta_in / (kappa (delta_in^2 -
    gamma_sigma^2)) times {chi * running convolution of |A_in|^2 with
    exp(-2 chi gamma_sigma .) - |A_in(t)|^2/(2 delta_in)}; requires
    delta_in > gamma_sigma.
    """
    t = np.asarray(t, dtype=float)
    cgs = dp.chi * dp.gamma_sigma
    if variant == "limit":
        out = pulse.W_in * np.exp(-2.0 * cgs * t)
        return out if out.ndim else float(out)
    if variant != "detailed":
        raise ConfigError(f"unknown mini_energy variant {variant!r}")
    if dp.delta_in <= dp.gamma_sigma:
        raise PreconditionError("detailed P_M needs delta_in > gamma_sigma")
    # |A_in(u)|^2 = W sqrt(2/pi)/dt_s exp(-2(u-t0)^2/dt_s^2): Gaussian of
    # std s = dt_s/2; its exponential running average has an erfc form.
    a = 2.0 * cgs
    s = pulse.dt_s / 2.0
    peak2 = pulse.W_in * math.sqrt(2.0 / math.pi) / pulse.dt_s
    u = t  # time since pulse center
    conv = (peak2 * s * math.sqrt(2.0 * math.pi) * 0.5
            * np.exp(a * a * s * s / 2.0 - a * u)
            * erfc((a * s - u / s) / math.sqrt(2.0)))
    inst = peak2 * np.exp(-2.0 * u**2 / pulse.dt_s**2)
    pref = 2.0 * p.M * p.g**2 * dp.delta_in \
        / (p.kappa * (dp.delta_in**2 - dp.gamma_sigma**2))
    out = pref * (dp.chi * conv - inst / (2.0 * dp.delta_in))
    return out if out.ndim else float(out)


def atomic_excitation(p: SystemParams, dp: DerivedParams, pulse: Pulse,
                      m: int, delta, t: float,
                      variant=None):
    """Excitation probability density of an atom detuned by ``delta`` in
    the m-th mini-resonator, measured a time ``t`` after loading:

        e^(-t/T1) |T_am(chi Delta_m - delta)|^2 |T_cw(delta)|^2 |A~_in(delta)|^2

    with the Lorentzian transfer
        |T_am|^2 = 2 pi chi^2 |f g|^2 / ((chi gamma_sigma)^2 + (chi Delta_m - delta)^2).
    """
    variant = CombVariant.RECTANGULAR_F1 if variant is None else variant
    delta = np.asarray(delta, dtype=float)
    delta_m = dp.comb_frequencies[m]
    t_am2 = (2.0 * math.pi * dp.chi**2 * (p.f * p.g) ** 2
             / ((dp.chi * dp.gamma_sigma) ** 2 + (dp.chi * delta_m - delta) ** 2))
    t_cw2 = np.abs(cavity_transfer(p, dp, delta, variant)) ** 2
    decay = math.exp(-t / p.T1) if math.isfinite(p.T1) else 1.0
    out = decay * t_am2 * t_cw2 * np.abs(pulse_spectrum(pulse, delta)) ** 2
    return out if out.ndim else float(out)


def atomic_population_plateau(p: SystemParams, dp: DerivedParams,
                              pulse: Pulse) -> float:
    """Post-transfer atomic energy plateau E1 E2 W_in."""
    e1 = (p.kappa - 2.0 * p.gamma_c) / p.kappa
    e2 = dp.gamma_a0 / dp.gamma_sigma if dp.gamma_sigma > 0 else 1.0
    return e1 * e2 * pulse.W_in


def atomic_population(p: SystemParams, dp: DerivedParams, pulse: Pulse, t):
    """Plateau with the longitudinal decay factor e^(-t/T1)."""
    t = np.asarray(t, dtype=float)
    out = atomic_population_plateau(p, dp, pulse) * (
        np.exp(-t / p.T1) if math.isfinite(p.T1) else np.ones_like(t))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class AtomRequirement:
    """Minimum ensemble strength for efficient transfer before rephasing."""

    gamma_a0_min: float      # 3 delta / pi
    N_a_min: int
    ratio_vs_single: float   # N_a / N_s at equal performance


def atom_requirement(p: SystemParams, dp: DerivedParams,
                     f_single: Optional[float] = None) -> AtomRequirement:
    """Transfer must complete within half a comb rephasing period:
    gamma_a0 >= 3 delta/pi, i.e. N_a >= 3 delta delta_in_a / (pi f^2).

    ``ratio_vs_single`` compares against the single-resonator matched
    ensemble: N_a ~ (6 delta/(pi kappa)) |f_s/f_a|^2 N_s.
    """
    if p.delta <= 0 or p.kappa <= 0:
        raise ConfigError("atom_requirement needs delta > 0 and kappa > 0")
    g_min = 3.0 * p.delta / math.pi
    n_min = math.ceil(3.0 * p.delta * dp.delta_in_a / (math.pi * p.f**2))
    f_s = p.f if f_single is None else f_single
    ratio = 6.0 * p.delta / (math.pi * p.kappa) * (f_s / p.f) ** 2
    return AtomRequirement(gamma_a0_min=g_min, N_a_min=n_min,
                           ratio_vs_single=ratio)


# ---------------------------------------------------------------------------
# Efficiency estimates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EfficiencyBudget:
    """Stage efficiencies of the full store/retrieve protocol."""

    E1: float
    E2: float
    E_total: float


def total_efficiency(p: SystemParams, dp: DerivedParams) -> EfficiencyBudget:
    """E_total = E1^2 E2^2 exp(-8 (tau1+tau2) gamma_a) exp(-2 Ts gamma_12)."""
    if p.kappa < 2.0 * p.gamma_c:
        raise PreconditionError("kappa >= 2 gamma_c required for E1 in [0, 1]")
    e1 = (p.kappa - 2.0 * p.gamma_c) / p.kappa
    e2 = dp.gamma_a0 / dp.gamma_sigma if dp.gamma_sigma > 0 else 1.0
    total = (e1**2 * e2**2
             * math.exp(-8.0 * (p.tau1 + p.tau2) * p.gamma_a)
             * math.exp(-2.0 * p.Ts * p.gamma_12))
    return EfficiencyBudget(E1=e1, E2=e2, E_total=total)


# ---------------------------------------------------------------------------
# Idealized echo retrieval
# ---------------------------------------------------------------------------

def ideal_rephase(state: np.ndarray, sys: LinearSystem) -> np.ndarray:
    """Conjugate all atomic coherences (instantaneous, ideal pi pairs);
    field modes are untouched.  An involution: applying twice restores
    the input state.

    Warns when the fields are not yet empty (|a|^2 + P_M >= 1e-2 P_a),
    in which case the subsequent evolution mixes stored and un-stored
    energy.
    """
    M, n = sys.params.M, sys.n_nodes
    out = state.copy()
    s = slice(1 + M, 1 + M + M * n)
    a2 = abs(out[0]) ** 2
    pm = float(np.sum(np.abs(out[1:1 + M]) ** 2))
    pa = float(np.sum(np.abs(out[s]) ** 2))
    if a2 + pm >= 1e-2 * pa:
        warnings.warn(
            f"rephasing with fields not empty: |a|^2+P_M = {a2 + pm:.3e} "
            f">= 1e-2 P_a = {1e-2 * pa:.3e}", stacklevel=2)
    out[s] = np.conj(out[s])
    return out


@dataclass(frozen=True)
class EchoReport:
    """Windowed echo energetics of a store-rephase-retrieve run."""

    t_rephase: float
    t_echo: float            # predicted center 2 T_r - t0
    window: tuple            # (t_lo, t_hi), 6 dt_s wide
    echo_energy: float
    efficiency: float        # echo energy / W_in
    predicted: float         # E1^2 E2^2
    measured_center: float   # energy centroid of |A_out|^2 in the window


def run_echo(sys: LinearSystem, pulse: Pulse, t_rephase: float,
             t_end: Optional[float] = None, rtol: float = 1e-9,
             atol: float = 1e-12, record_dt: Optional[float] = None):
    """Store the pulse, conjugate the atomic coherences at ``t_rephase``,
    and integrate through the echo.

    The drive is treated as zero after the rephasing (its residual tail
    energy is negligible once t_rephase >= t0 + 2.5 dt_s).  Echo energy
    is integrated over a 6 dt_s window centered on the predicted echo
    time 2 t_rephase - t0.

    Returns (Trajectory, EchoReport); the trajectory is the stitched
    store+retrieve record.
    """
    if record_dt is None:
        w_edge = max(1.5 * sys.derived.delta_in, 1e-6)
        record_dt = min(pulse.dt_s / 40.0, 2.0 * math.pi / (16.0 * w_edge))
    ts1 = np.arange(0.0, t_rephase + record_dt / 2, record_dt)
    t_rephase = float(ts1[-1])  # snap to the recording grid
    t_echo = 2.0 * t_rephase - pulse.t0
    if t_end is None:
        t_end = t_echo + 4.0 * pulse.dt_s
    rec1, y_mid, ns1, nr1 = _run_kernel(sys, pulse, sys.zero_state(), 0.0,
                                        ts1, rtol, atol)
    y_mid = ideal_rephase(y_mid, sys)
    ts2 = t_rephase + record_dt * np.arange(
        1, int(round((t_end - t_rephase) / record_dt)) + 1)
    rec2, y_fin, ns2, nr2 = _run_kernel(sys, None, y_mid, t_rephase,
                                        ts2, rtol, atol)
    ts = np.concatenate([ts1, ts2])
    rec = np.vstack([rec1, rec2])
    traj = _trajectory_from(sys, None, ts, rec, y_fin, ns1 + ns2, nr1 + nr2)
    # A_in was live during the first segment only
    a_in = evaluate_pulse(pulse, ts) * (ts <= t_rephase)
    a_out = math.sqrt(sys.params.kappa) * rec[:, 0] - a_in
    traj = replace(traj, pulse=pulse, A_in=a_in, A_out=a_out)
    lo, hi = t_echo - 3.0 * pulse.dt_s, t_echo + 3.0 * pulse.dt_s
    win = (ts >= lo) & (ts <= hi)
    pout = np.abs(a_out) ** 2
    e_echo = float(np.trapezoid(pout[win], ts[win]))
    dpp = sys.derived
    e1 = (sys.params.kappa - 2 * sys.params.gamma_c) / sys.params.kappa
    e2 = dpp.gamma_a0 / dpp.gamma_sigma if dpp.gamma_sigma > 0 else 1.0
    centroid = float(np.sum(ts[win] * pout[win]) / max(np.sum(pout[win]), 1e-300))
    report = EchoReport(
        t_rephase=t_rephase, t_echo=t_echo, window=(lo, hi),
        echo_energy=e_echo, efficiency=e_echo / pulse.W_in,
        predicted=(e1 * e2) ** 2, measured_center=centroid)
    return traj, report
