"""Shared fixtures: parameter factories and the heavyweight time-domain
runs reused by both the module tests and the acceptance suite."""

import pytest
from dataclasses import replace

import mrqm
from mrqm.model import params_for_gamma_sigma


def make_params(gamma_sigma=2.0, delta_in=10.0, M=8, gamma_b=0.0,
                gamma_c=0.0, gamma_a=0.0, inhom_ratio=100.0, N_a=10**6):
    """Device with a chosen loaded linewidth; f is solved from the target."""
    p = mrqm.SystemParams(
        kappa=1.0, gamma_c=gamma_c, gamma_b=gamma_b, gamma_a=gamma_a,
        g=1.0, f=0.1, M=M, delta=delta_in / M,
        delta_in_atomic=inhom_ratio * delta_in, N_a=N_a)
    return params_for_gamma_sigma(p, gamma_sigma, gamma_b=gamma_b)


def matched(p, dp, variant=mrqm.CombVariant.RECTANGULAR_F1,
            impedance=True, spectral=True):
    sol = mrqm.solve_matching(p, dp, variant, impedance=impedance,
                              spectral=spectral)
    return replace(p, kappa=sol.kappa, g=sol.g)


@pytest.fixture(scope="session")
def oracle_run():
    """Bulk cross-validation run: 8 resonators, 201 nodes each,
    inhomogeneous width 100x the comb, both matching conditions.

    gamma_a resolves the node spacing (pi*Delta_in/201 ~ 15.6) so the
    sampled Lorentzian behaves as a smooth continuum over the run.
    """
    p = make_params(gamma_sigma=2.0, delta_in=10.0, M=8, gamma_a=16.0,
                    inhom_ratio=100.0)
    dp = mrqm.derive_params(p)
    p = matched(p, dp)
    sampling = mrqm.sample_atoms(p.delta_in_atomic, 201)
    sysm = mrqm.build_system(p, dp, sampling)
    pulse = mrqm.make_pulse(W_in=1.0, dt_s=1.0, t0=3.5)
    traj = mrqm.integrate(sysm, pulse, (0.0, 9.0), rtol=1e-8)
    return p, dp, pulse, traj


@pytest.fixture(scope="session")
def echo_runs():
    """Idealized store/rephase/retrieve, lossless and with bus loss."""
    out = {}
    for tag, e1_target in (("lossless", 1.0), ("lossy", 0.9)):
        p = make_params(gamma_sigma=1.25, delta_in=10.0, M=8,
                        inhom_ratio=5.0)
        dp = mrqm.derive_params(p)
        x = mrqm.impedance_kappa(replace(p, g=mrqm.spectral_match_g(dp, p.M)),
                                 dp)
        kappa = x / e1_target
        gamma_c = 0.5 * (kappa - x)
        p = replace(p, g=mrqm.spectral_match_g(dp, p.M), kappa=kappa,
                    gamma_c=gamma_c)
        sampling = mrqm.sample_atoms(p.delta_in_atomic, 401)
        sysm = mrqm.build_system(p, dp, sampling)
        pulse = mrqm.make_pulse(W_in=1.0, dt_s=1.0, t0=4.0)
        traj, report = mrqm.run_echo(sysm, pulse, pulse.t0 + dp.tau / 2.0,
                                     rtol=1e-8)
        out[tag] = (p, dp, pulse, traj, report)
    return out


@pytest.fixture(scope="session")
def plateau_run():
    """Transfer into the ensembles with bus and mini losses switched on."""
    p = make_params(gamma_sigma=1.0, delta_in=10.0, M=8, inhom_ratio=10.0,
                    gamma_c=0.25)
    # split the linewidth so gamma_b = gamma_a0/10
    p = params_for_gamma_sigma(p, 1.0, gamma_b=1.0 / 11.0)
    dp = mrqm.derive_params(p)
    p = matched(p, dp)
    sampling = mrqm.sample_atoms(p.delta_in_atomic, 401)
    sysm = mrqm.build_system(p, dp, sampling)
    pulse = mrqm.make_pulse(W_in=1.0, dt_s=1.0, t0=3.5)
    t_meas = pulse.t0 + 3.0 / dp.gamma_sigma
    traj = mrqm.integrate(sysm, pulse, (0.0, t_meas), rtol=1e-8)
    return p, dp, pulse, traj


@pytest.fixture(scope="session")
def pm_decay_run():
    """Short pulse into a wide comb; energy drains into the atoms."""
    p = make_params(gamma_sigma=0.5, delta_in=10.0, M=8, inhom_ratio=10.0)
    dp = mrqm.derive_params(p)
    p = matched(p, dp)
    sampling = mrqm.sample_atoms(p.delta_in_atomic, 801)
    sysm = mrqm.build_system(p, dp, sampling)
    pulse = mrqm.make_pulse(W_in=1.0, dt_s=0.5, t0=2.0)
    traj = mrqm.integrate(sysm, pulse, (0.0, pulse.t0 + 4.5), rtol=1e-8)
    return p, dp, pulse, traj


@pytest.fixture(scope="session")
def lineshape_run():
    """Atom-resolved excitation spectrum inside one mini-resonator."""
    p = make_params(gamma_sigma=2.0, delta_in=10.0, M=4, inhom_ratio=10.0)
    dp = mrqm.derive_params(p)
    p = matched(p, dp)
    sampling = mrqm.sample_atoms(p.delta_in_atomic, 1001)
    sysm = mrqm.build_system(p, dp, sampling)
    pulse = mrqm.make_pulse(W_in=1.0, dt_s=1.0 / 3.0, t0=1.2)
    # capture essentially the whole ring-down: the residual un-decayed
    # tail ripples the measured wings and biases the width fit
    t_meas = pulse.t0 + 6.0 / dp.gamma_sigma
    traj = mrqm.integrate(sysm, pulse, (0.0, t_meas), rtol=1e-8)
    return p, dp, pulse, sampling, traj


def report_line(name, ok, detail):
    marker = "PASS" if ok else "FAIL"
    print(f"[{marker}] {name}: {detail}")
