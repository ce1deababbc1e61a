"""Time-domain engine: assembly, integration, analytic solutions,
energy bookkeeping, echo retrieval."""

import math
from dataclasses import replace

import numpy as np
import pytest

import mrqm
from mrqm import CombVariant, ConfigError

from conftest import make_params, matched


def small_system(gamma_sigma=1.0, M=2, nodes=25, **kw):
    p = make_params(gamma_sigma, delta_in=4.0, M=M, inhom_ratio=5.0, **kw)
    dp = mrqm.derive_params(p)
    p = matched(p, dp)
    sampling = mrqm.sample_atoms(p.delta_in_atomic, nodes) if nodes else None
    return p, dp, mrqm.build_system(p, dp, sampling)


class TestBuildSystem:
    def test_single_mode_cavity(self):
        p = replace(make_params(1e-12, M=1), g=0.0)
        dp = mrqm.derive_params(p)
        sysm = mrqm.build_system(p, dp, None)
        assert sysm.dim == 2  # a + one comb mode

    def test_dimension_accounting(self):
        p = make_params(2.0, M=8)
        dp = mrqm.derive_params(p)
        sysm = mrqm.build_system(p, dp, mrqm.sample_atoms(p.delta_in_atomic, 201))
        assert sysm.dim == 1 + 8 + 8 * 201 == 1617

    def test_dimension_guard(self):
        p = make_params(2.0, M=8)
        dp = mrqm.derive_params(p)
        with pytest.raises(ConfigError):
            mrqm.build_system(p, dp, mrqm.sample_atoms(p.delta_in_atomic,
                                                       200000))

    def test_generator_spectrum_damped(self):
        # all eigenvalues must sit in the closed left half-plane
        p, dp, sysm = small_system(1.0, M=2, nodes=15)
        ev = np.linalg.eigvals(sysm.dense_generator())
        assert np.max(ev.real) < 1e-12

    def test_lossless_generator_antihermitian_up_to_kappa(self):
        p, dp, sysm = small_system(1.0, M=2, nodes=9)
        p0 = replace(p, kappa=0.0, gamma_c=0.0, gamma_b=0.0, gamma_a=0.0)
        sys0 = mrqm.build_system(p0, dp, sysm.sampling)
        a = sys0.dense_generator()
        np.testing.assert_allclose(a + a.conj().T, 0.0, atol=1e-14)


class TestIntegrate:
    def test_zero_drive_zero_state(self):
        p, dp, sysm = small_system()
        traj = mrqm.integrate(sysm, None, (0.0, 5.0))
        assert np.all(traj.a == 0) and np.all(traj.P_a == 0)
        assert np.all(traj.E_in == 0) and np.all(traj.E_out == 0)

    def test_lossless_empty_cavity_reflects_everything(self):
        p = replace(make_params(1e-12, M=1), g=0.0, kappa=2.0, f=0.0)
        dp = mrqm.derive_params(p)
        sysm = mrqm.build_system(p, dp, None)
        pulse = mrqm.make_pulse(W_in=1.0, dt_s=1.0, t0=3.0)
        traj = mrqm.integrate(sysm, pulse, (0.0, 16.0))
        assert traj.E_out[-1] == pytest.approx(traj.E_in[-1], abs=1e-6)
        assert np.max(np.abs(traj.ledger_residual())) < 1e-6 * pulse.W_in

    def test_lossless_balance_every_sample(self):
        p, dp, sysm = small_system(1.0, M=2, nodes=25)
        pulse = mrqm.make_pulse(W_in=2.0, dt_s=0.7, t0=2.5)
        traj = mrqm.integrate(sysm, pulse, (0.0, 8.0))
        # no dissipation channels: E_in - E_out == internal exactly
        gap = traj.E_in - traj.E_out - traj.internal_energy
        assert np.max(np.abs(gap)) < 1e-6 * pulse.W_in

    def test_dissipative_ledger(self, plateau_run):
        p, dp, pulse, traj = plateau_run
        assert np.max(np.abs(traj.ledger_residual())) < 1e-6 * pulse.W_in
        assert traj.D_c[-1] > 0 and traj.D_b[-1] > 0

    def test_cavity_follows_drive_when_matched(self, oracle_run):
        p, dp, pulse, traj = oracle_run
        sel = np.abs(traj.t - pulse.t0) <= 2.0 * pulse.dt_s
        ref = mrqm.evaluate_pulse(pulse, traj.t[sel]) / math.sqrt(p.kappa)
        err = np.sqrt(np.sum(np.abs(traj.a[sel] - ref) ** 2)
                      / np.sum(np.abs(ref) ** 2))
        assert err < 0.05

    def test_comb_rephasing_burst_without_atoms(self):
        # empty comb: the stored field re-emits when the modes re-phase
        p = make_params(1e-14, delta_in=10.0, M=8)
        p = replace(p, f=0.0)
        dp = mrqm.derive_params(p)
        p = matched(p, dp, spectral=True)
        sysm = mrqm.build_system(p, dp, None)
        pulse = mrqm.make_pulse(W_in=1.0, dt_s=0.6, t0=3.0)
        tau = dp.tau
        traj = mrqm.integrate(sysm, pulse, (0.0, pulse.t0 + 1.6 * tau))
        win = (traj.t >= pulse.t0 + 0.6 * tau) & (traj.t <= pulse.t0 + 1.4 * tau)
        pout = np.abs(traj.A_out[win]) ** 2
        centroid = np.sum(traj.t[win] * pout) / np.sum(pout)
        assert centroid - pulse.t0 == pytest.approx(tau, rel=0.05)
        # the burst actually carries energy
        assert np.trapezoid(pout, traj.t[win]) > 0.5 * pulse.W_in


class TestOutputSpectrumRatio:
    def test_empty_matched_cavity_closed_form(self):
        # g = 0, gamma_c = kappa/2: U(w) = i w / (kappa - i w)
        p = replace(make_params(1e-12, M=1), g=0.0, kappa=2.0, gamma_c=1.0,
                    f=0.0)
        dp = mrqm.derive_params(p)
        sysm = mrqm.build_system(p, dp, None)
        pulse = mrqm.make_pulse(W_in=1.0, dt_s=1.0, t0=4.0)
        traj = mrqm.integrate(sysm, pulse, (0.0, 24.0), record_dt=0.02)
        om, ratio = mrqm.output_spectrum_ratio(traj, pulse)
        ref = 1j * om / (p.kappa - 1j * om)
        assert np.max(np.abs(ratio - ref)) < 1e-3

    def test_against_discrete_reflection(self, oracle_run):
        p, dp, pulse, traj = oracle_run
        om, ratio = mrqm.output_spectrum_ratio(traj, pulse)
        ref = mrqm.reflection(p, dp, om, CombVariant.DISCRETE_SUM)
        assert np.max(np.abs(ratio - ref)) < 0.02

    def test_ratio_passive_in_mask(self, oracle_run):
        p, dp, pulse, traj = oracle_run
        om, ratio = mrqm.output_spectrum_ratio(traj, pulse)
        assert np.max(np.abs(ratio)) <= 1.0 + 1e-3

    def test_warns_on_truncated_run(self):
        p, dp, sysm = small_system(0.05, M=2, nodes=25)
        pulse = mrqm.make_pulse(W_in=1.0, dt_s=0.5, t0=2.0)
        traj = mrqm.integrate(sysm, pulse, (0.0, 3.0))
        with pytest.warns(UserWarning, match="residual cavity energy"):
            mrqm.output_spectrum_ratio(traj, pulse)


@pytest.fixture(scope="module")
def bm_run():
    p = make_params(1.0, delta_in=10.0, M=8, inhom_ratio=10.0)
    dp = mrqm.derive_params(p)
    p = matched(p, dp)
    sampling = mrqm.sample_atoms(p.delta_in_atomic, 801)
    sysm = mrqm.build_system(p, dp, sampling)
    pulse = mrqm.make_pulse(W_in=1.0, dt_s=0.05, t0=0.2)
    traj = mrqm.integrate(sysm, pulse, (0.0, 2.8), rtol=1e-8,
                          record_dt=0.002)
    return p, dp, pulse, traj


class TestAnalyticBm:
    def test_exact_spectral_form_matches_integrator(self, bm_run):
        # inverse transform of the exact mode spectrum (discrete-comb
        # transfer) reproduces the integrated b_m(t) to sub-percent level
        p, dp, pulse, traj = bm_run
        w = np.linspace(-80, 80, 32001)
        dw = w[1] - w[0]
        sel = (traj.t >= pulse.t0 + 3 * pulse.dt_s) & (traj.t <= 1.5)
        ts = traj.t[sel][::40]
        for m in (0, 4):
            bm_w = mrqm.mini_mode_spectrum(p, dp, pulse, m, w,
                                           CombVariant.DISCRETE_SUM)
            recon = (bm_w * np.exp(-1j * w * ts[:, None])).sum(axis=1) \
                * dw / math.sqrt(2 * math.pi)
            ode = traj.b[sel, m][::40]
            assert np.max(np.abs(ode - recon)) / np.max(np.abs(ode)) < 0.005

    def test_closed_form_in_band(self, pm_decay_run):
        # for a pulse inside the flat matched band the a ~ A_in/sqrt(kappa)
        # premise holds and the closed form tracks interior modes to 5%
        p, dp, pulse, traj = pm_decay_run
        sel = (traj.t >= pulse.t0 - 1.0) & (traj.t <= pulse.t0 + 3.5)
        for m in (2, 3, 4, 5):
            ode = traj.b[sel, m]
            ana = mrqm.analytic_b_m(p, dp, pulse, m, traj.t[sel],
                                    mode="convolution")
            assert np.max(np.abs(ode - ana)) / np.max(np.abs(ode)) < 0.05

    def test_closed_form_envelope_broadband(self, bm_run):
        # for a pulse much broader than the band the flat-band form drops
        # the in-coupling filtering; deviations reach the ~30% level
        # (measured 27% here), while the exact spectral form stays exact
        p, dp, pulse, traj = bm_run
        sel = (traj.t >= pulse.t0 + 3 * pulse.dt_s) & (traj.t <= 1.5)
        for m in (2, 4):
            ode = np.abs(traj.b[sel, m])
            ana = np.abs(mrqm.analytic_b_m(p, dp, pulse, m, traj.t[sel],
                                           mode="post_pulse"))
            assert np.max(np.abs(ode - ana)) / np.max(ode) < 0.35

    def test_post_pulse_branch_agrees_with_convolution(self, bm_run):
        p, dp, pulse, traj = bm_run
        t = np.linspace(pulse.t0 + 4 * pulse.dt_s, 1.5, 40)
        conv = mrqm.analytic_b_m(p, dp, pulse, 3, t, mode="convolution")
        post = mrqm.analytic_b_m(p, dp, pulse, 3, t, mode="post_pulse")
        assert np.max(np.abs(conv - post)) / np.max(np.abs(conv)) < 0.01

    def test_decay_constant_fit(self, bm_run):
        # |b_m| of a band-center mode decays at chi*gamma_sigma; fit over
        # one decade (modes at the comb edge pick up extra waveguide
        # leakage and are not covered by the asymptotic formula)
        p, dp, pulse, traj = bm_run
        t0 = pulse.t0 + 3 * pulse.dt_s
        t1 = t0 + math.log(10.0) / (dp.chi * dp.gamma_sigma)
        sel = (traj.t >= t0) & (traj.t <= t1)
        mag = np.abs(traj.b[sel, p.M // 2])
        slope = np.polyfit(traj.t[sel], np.log(mag), 1)[0]
        assert -slope == pytest.approx(dp.chi * dp.gamma_sigma, rel=0.05)

    def test_zero_input(self):
        p = make_params(1.0)
        dp = mrqm.derive_params(p)
        pulse = mrqm.make_pulse(W_in=0.0, dt_s=1.0)
        assert mrqm.analytic_b_m(p, dp, pulse, 0, 5.0, "post_pulse") == 0.0

    def test_mode_spectra_parseval_against_integrator(self, bm_run):
        # sum_m Int |b~_m|^2 dw equals the time integral of P_M
        p, dp, pulse, traj = bm_run
        w = np.linspace(-80, 80, 32001)
        total_w = 0.0
        for m in range(p.M):
            bm_w = mrqm.mini_mode_spectrum(p, dp, pulse, m, w,
                                           CombVariant.DISCRETE_SUM)
            total_w += np.trapezoid(np.abs(bm_w) ** 2, w)
        # extend the recorded P_M with its exponential tail beyond t_end
        total_t = np.trapezoid(traj.P_M, traj.t)
        total_t += traj.P_M[-1] / (2 * dp.chi * dp.gamma_sigma)
        assert total_w == pytest.approx(total_t, rel=0.05)


class TestMiniEnergy:
    def test_limit_constant_without_losses(self):
        p = make_params(1e-14)
        dp = mrqm.derive_params(p)
        pulse = mrqm.make_pulse(W_in=1.0, dt_s=0.3)
        t = np.array([1.0, 5.0, 20.0])
        vals = mrqm.mini_energy(p, dp, pulse, t, "limit")
        assert np.max(vals) - np.min(vals) < 1e-10

    def test_exponential_arithmetic(self):
        # gamma_a0 * t = 3  ->  P_M/W = e^-6
        p = make_params(1.0)
        dp = mrqm.derive_params(p, force_chi_one=True)
        val = mrqm.mini_energy(p, dp, mrqm.make_pulse(), 3.0, "limit")
        assert val == pytest.approx(math.exp(-6.0), rel=1e-9)

    def test_detailed_approaches_limit(self):
        # gamma_sigma = 0.05 delta_in under the ideal weak-coupling
        # matching kappa = 2 M g^2/delta_in
        p = make_params(0.5, delta_in=10.0)
        dp = mrqm.derive_params(p)
        p = replace(p, kappa=2 * p.M * p.g**2 / dp.delta_in)
        pulse = mrqm.make_pulse(W_in=1.0, dt_s=0.1, t0=0.0)
        t = np.linspace(0.5, 2.0, 31)
        det = mrqm.mini_energy(p, dp, pulse, t, "detailed")
        lim = mrqm.mini_energy(p, dp, pulse, t, "limit")
        assert np.max(np.abs(det / lim - 1.0)) < 0.05

    def test_detailed_requires_wide_comb(self):
        p = make_params(30.0)
        dp = mrqm.derive_params(p)
        with pytest.raises(mrqm.PreconditionError):
            mrqm.mini_energy(p, dp, mrqm.make_pulse(), 1.0, "detailed")

    def test_decay_matches_integrator(self, pm_decay_run):
        p, dp, pulse, traj = pm_decay_run
        sel = (traj.t >= pulse.t0 + 3 * pulse.dt_s) & (traj.t <= pulse.t0 + 4.0)
        slope = np.polyfit(traj.t[sel], np.log(traj.P_M[sel]), 1)[0]
        assert -slope == pytest.approx(2 * dp.chi * dp.gamma_sigma, rel=0.05)


class TestAtomicExcitation:
    def test_peak_value_under_matching(self):
        p = make_params(2.0)
        dp = mrqm.derive_params(p, force_chi_one=True)
        p = matched(p, dp, spectral=True)
        pulse = mrqm.make_pulse(W_in=1.0, dt_s=1.0)
        m = 5
        dm = dp.comb_frequencies[m]
        peak = mrqm.atomic_excitation(p, dp, pulse, m, dm, 0.0)
        # exact identity with the actual in-band transfer...
        t_cw2 = abs(mrqm.cavity_transfer(p, dp, dm)) ** 2
        exact = (2 * math.pi * (p.f * p.g) ** 2 / dp.gamma_sigma**2 * t_cw2
                 * abs(mrqm.pulse_spectrum(pulse, dm)) ** 2)
        assert peak == pytest.approx(exact, rel=1e-12)
        # ...which reduces to 2 pi |fg|^2/(gamma_sigma^2 kappa) |A~|^2
        # because the matched band is flat, |T_cw|^2 ~ 1/kappa
        assert t_cw2 * p.kappa == pytest.approx(1.0, abs=0.05)
        flat = (2 * math.pi * (p.f * p.g) ** 2
                / (dp.gamma_sigma**2 * p.kappa)
                * abs(mrqm.pulse_spectrum(pulse, dm)) ** 2)
        assert peak == pytest.approx(flat, rel=0.05)

    def test_infinite_t1_removes_decay(self):
        p = make_params(2.0)
        dp = mrqm.derive_params(p)
        pulse = mrqm.make_pulse()
        v1 = mrqm.atomic_excitation(p, dp, pulse, 0, 0.5, 0.0)
        v2 = mrqm.atomic_excitation(p, dp, pulse, 0, 0.5, 1e6)
        assert v1 == v2

    def test_t1_decay_factor(self):
        p = replace(make_params(2.0), T1=2.0)
        dp = mrqm.derive_params(p)
        pulse = mrqm.make_pulse()
        v0 = mrqm.atomic_excitation(p, dp, pulse, 0, 0.5, 0.0)
        v1 = mrqm.atomic_excitation(p, dp, pulse, 0, 0.5, 2.0)
        assert v1 / v0 == pytest.approx(math.exp(-1.0), rel=1e-12)


class TestPlateauAndRequirement:
    def test_plateau_trivials(self):
        p = make_params(2.0, gamma_c=0.0)
        dp = mrqm.derive_params(p)
        pulse = mrqm.make_pulse(W_in=1.0)
        assert mrqm.atomic_population_plateau(p, dp, pulse) == pytest.approx(
            1.0, rel=1e-12)
        p2 = replace(make_params(2.0), kappa=1.0, gamma_c=0.25)
        e1 = (p2.kappa - 2 * p2.gamma_c) / p2.kappa
        assert e1 == 0.5

    def test_plateau_from_integrator(self, plateau_run):
        p, dp, pulse, traj = plateau_run
        plateau = mrqm.atomic_population_plateau(p, dp, pulse)
        assert traj.P_a[-1] == pytest.approx(plateau, rel=0.05)

    def test_requirement_threshold(self):
        p = make_params(2.0, delta_in=8.0)  # delta = 1
        dp = mrqm.derive_params(p)
        req = mrqm.atom_requirement(p, dp)
        assert req.gamma_a0_min == pytest.approx(3.0 / math.pi, rel=1e-12)
        assert req.ratio_vs_single == pytest.approx(
            6 * p.delta / (math.pi * p.kappa), rel=1e-12)

    def test_requirement_count(self):
        p = replace(make_params(2.0, delta_in=8.0), f=0.5,
                    delta_in_atomic=100.0, gamma_a=0.0, N_a=100)
        dp = mrqm.derive_params(p)
        req = mrqm.atom_requirement(p, dp)
        assert req.N_a_min == 382

    def test_total_efficiency_trivials(self):
        p = make_params(2.0)
        dp = mrqm.derive_params(p)
        assert mrqm.total_efficiency(p, dp).E_total == pytest.approx(1.0)
        # E1 = E2 = 0.9 -> 0.6561
        p2 = make_params(2.0, gamma_c=0.05)
        p2 = replace(p2, kappa=1.0, gamma_c=0.05)
        dp2 = mrqm.derive_params(params_with_e2(p2, 0.9))
        budget = mrqm.total_efficiency(params_with_e2(p2, 0.9), dp2)
        assert budget.E1 == pytest.approx(0.9, rel=1e-12)
        assert budget.E2 == pytest.approx(0.9, rel=1e-9)
        assert budget.E_total == pytest.approx(0.6561, rel=1e-9)

    def test_population_curve_decays_with_t1(self):
        p = replace(make_params(2.0), T1=2.0)
        dp = mrqm.derive_params(p)
        pulse = mrqm.make_pulse(W_in=1.0)
        plateau = mrqm.atomic_population_plateau(p, dp, pulse)
        half = mrqm.atomic_population(p, dp, pulse, 2.0 * math.log(2.0))
        assert half == pytest.approx(plateau / 2, rel=1e-12)

    def test_total_efficiency_decay_factor(self):
        p = replace(make_params(2.0), gamma_a=0.01, tau1=4.0, tau2=6.0)
        dp = mrqm.derive_params(p)
        assert mrqm.total_efficiency(p, dp).E_total == pytest.approx(
            math.exp(-0.8), rel=1e-9)


def params_with_e2(p, e2):
    """Split gamma_sigma so gamma_a0/(gamma_a0+gamma_b) = e2."""
    from mrqm.model import params_for_gamma_sigma
    return params_for_gamma_sigma(p, 1.0, gamma_b=1.0 - e2)


class TestRephaseAndEcho:
    def test_involution(self):
        p, dp, sysm = small_system(1.0, M=2, nodes=9)
        rng = np.random.default_rng(7)
        state = (rng.normal(size=sysm.dim + 5)
                 + 1j * rng.normal(size=sysm.dim + 5))
        state[1 + 2:] *= 100.0  # atoms dominate: precondition quiet
        twice = mrqm.ideal_rephase(mrqm.ideal_rephase(state, sysm), sysm)
        np.testing.assert_array_equal(twice, state)

    def test_warns_when_fields_occupied(self):
        p, dp, sysm = small_system(1.0, M=2, nodes=9)
        state = sysm.zero_state()
        state[0] = 1.0  # all energy in the bus field
        with pytest.warns(UserWarning, match="fields not empty"):
            mrqm.ideal_rephase(state, sysm)

    def test_lossless_echo(self, echo_runs):
        p, dp, pulse, traj, report = echo_runs["lossless"]
        assert report.efficiency == pytest.approx(1.0, abs=0.05)
        assert report.measured_center == pytest.approx(report.t_echo, abs=0.2)

    def test_lossy_echo_tracks_e1_squared(self, echo_runs):
        p, dp, pulse, traj, report = echo_runs["lossy"]
        e1 = (p.kappa - 2 * p.gamma_c) / p.kappa
        assert report.efficiency == pytest.approx(e1**2, abs=0.05)

    def test_echo_ledger(self, echo_runs):
        for tag in ("lossless", "lossy"):
            _, _, pulse, traj, _ = echo_runs[tag]
            assert np.max(np.abs(traj.ledger_residual())) < 1e-6 * pulse.W_in


class TestLineshape:
    def test_fitted_width_and_center(self, lineshape_run):
        from scipy.optimize import curve_fit
        p, dp, pulse, sampling, traj = lineshape_run
        m = 2  # comb line at +delta/2
        n = sampling.nodes_per_resonator
        s_final = traj.final_state[1 + p.M + m * n: 1 + p.M + (m + 1) * n]
        det = sampling.detunings
        target = dp.chi * dp.comb_frequencies[m]
        sel = np.abs(det - target) <= 3.0 * dp.gamma_sigma
        x, y = det[sel], np.abs(s_final[sel]) ** 2
        drive2 = (np.abs(mrqm.cavity_transfer(p, dp, x,
                                              CombVariant.DISCRETE_SUM)) ** 2
                  * np.abs(mrqm.pulse_spectrum(pulse, x)) ** 2)

        def model(xv, c, center, width):
            return c * drive2 / (width**2 + (xv - center) ** 2)

        popt, _ = curve_fit(model, x, y,
                            p0=(1.0, target, dp.gamma_sigma))
        _, center, width = popt
        assert abs(width) == pytest.approx(dp.chi * dp.gamma_sigma, rel=0.05)
        assert center == pytest.approx(target, abs=0.05 * p.delta)
