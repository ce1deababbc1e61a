"""Built-in property battery behind ``mrqm check``.

Quick (seconds) spot checks of each module's core invariants; the full
verification lives in the pytest suite.
"""

from __future__ import annotations

import math

import numpy as np

from .model import (SystemParams, derive_params, evaluate_pulse, make_pulse,
                    params_for_gamma_sigma, pulse_spectrum, sample_atoms)
from .spectral import CombVariant, form_factor, frequency_grid, reflection
from .matching import bandwidth, solve_matching
from .dynamics import build_system, integrate


def _base_params(gamma_sigma=2.0, delta_in=10.0, M=8):
    p = SystemParams(kappa=1.0, gamma_c=0.0, gamma_b=0.0, gamma_a=0.0,
                     g=1.0, f=0.1, M=M, delta=delta_in / M,
                     delta_in_atomic=100.0 * delta_in, N_a=10**6)
    return params_for_gamma_sigma(p, gamma_sigma)


def run_all():
    checks = []

    def check(name, fn):
        checks.append((name, fn))

    check("derive_params idempotent and pure", _check_derive_pure)
    check("pulse normalization (quadrature)", _check_pulse_norm)
    check("F1(0) purely real", _check_f1_real)
    check("reflection passivity |U| <= 1", _check_passivity)
    check("impedance matching kills U(0)", _check_impedance)
    check("bandwidth monotone in epsilon", _check_bw_monotone)
    check("discrete comb ~ rectangular continuum", _check_discrete_vs_f1)
    check("quantile sampling realizes the Lorentzian", _check_sampling)
    check("empty-cavity energy ledger", _check_ledger)

    passed = failed = 0
    lines = []
    for name, fn in checks:
        try:
            fn()
            passed += 1
            lines.append(f"[PASS] {name}")
        except AssertionError as exc:
            failed += 1
            lines.append(f"[FAIL] {name}: {exc}")
    return passed, failed, lines


def _check_derive_pure():
    p = _base_params()
    a, b = derive_params(p), derive_params(p)
    assert a == b, "equal inputs must give identical outputs"
    assert math.isclose(a.gamma_sigma, a.gamma_a0 + p.gamma_b, rel_tol=0, abs_tol=0)


def _check_pulse_norm():
    pulse = make_pulse(W_in=2.5, dt_s=0.7, t0=1.0, carrier_offset=3.0)
    t = np.linspace(-6, 8, 20001)
    w = np.trapezoid(np.abs(evaluate_pulse(pulse, t)) ** 2, t)
    assert abs(w - 2.5) < 1e-9, f"time-domain norm {w}"
    om = np.linspace(-40, 40, 40001)
    ws = np.trapezoid(np.abs(pulse_spectrum(pulse, om)) ** 2, om)
    assert abs(ws - 2.5) < 1e-6, f"frequency-domain norm {ws}"


def _check_f1_real():
    dp = derive_params(_base_params())
    f0 = form_factor(CombVariant.RECTANGULAR_F1, dp, 0.0)
    assert abs(f0.imag) < 1e-15, f"Im F1(0) = {f0.imag}"


def _check_passivity():
    p = _base_params(4.0)
    dp = derive_params(p)
    grid = frequency_grid(dp, 801)
    for variant in (CombVariant.RECTANGULAR_F1, CombVariant.LORENTZIAN_F2,
                    CombVariant.DISCRETE_SUM):
        u = reflection(p, dp, grid, variant)
        assert np.max(np.abs(u)) <= 1 + 1e-12, f"|U|>1 for {variant}"


def _check_impedance():
    for gs in (0.5, 2.0, 10.0):
        p = _base_params(gs)
        dp = derive_params(p)
        for variant in (CombVariant.RECTANGULAR_F1, CombVariant.LORENTZIAN_F2):
            sol = solve_matching(p, dp, variant, impedance=True)
            assert sol.residual_u0_sq < 1e-12, f"{variant}: {sol.residual_u0_sq}"


def _check_bw_monotone():
    p = _base_params(10.0)
    dp = derive_params(p, force_chi_one=True)
    sol = solve_matching(p, dp, spectral=True)
    from dataclasses import replace
    work = replace(p, kappa=sol.kappa, g=sol.g)
    grid = frequency_grid(dp, 2001)
    u = reflection(work, dp, grid)
    widths = [bandwidth(grid, u, e).width for e in (0.001, 0.01, 0.1, 0.5)]
    assert all(b >= a for a, b in zip(widths, widths[1:])), widths


def _check_discrete_vs_f1():
    p = _base_params(2.0)
    dp = derive_params(p)
    sol = solve_matching(p, dp, spectral=True)
    from dataclasses import replace
    work = replace(p, kappa=sol.kappa, g=sol.g)
    w = np.linspace(-0.4 * dp.delta_in, 0.4 * dp.delta_in, 201)
    t1 = np.abs(reflection(work, dp, w, CombVariant.RECTANGULAR_F1))
    td = np.abs(reflection(work, dp, w, CombVariant.DISCRETE_SUM))
    assert np.max(np.abs(t1 - td)) < 0.03, np.max(np.abs(t1 - td))


def _check_sampling():
    s = sample_atoms(100.0, 2001)
    inside = np.abs(s.detunings) < 100.0 * 49.9
    emp = np.arange(1, 2002) / 2001.0
    cdf = 0.5 + np.arctan(s.detunings / 100.0) / np.pi
    assert np.max(np.abs(emp[inside] - cdf[inside])) < 0.01


def _check_ledger():
    p = SystemParams(kappa=2.0, gamma_c=0.0, gamma_b=0.0, gamma_a=0.0,
                     g=0.0, f=1e-6, M=1, delta=1.0, delta_in_atomic=10.0,
                     N_a=1)
    dp = derive_params(p)
    sysm = build_system(p, dp, None)
    traj = integrate(sysm, make_pulse(t0=3.0), (0.0, 12.0))
    res = np.max(np.abs(traj.ledger_residual()))
    assert res < 1e-6, f"ledger residual {res}"
    assert abs(traj.E_out[-1] - traj.E_in[-1]) < 1e-6
