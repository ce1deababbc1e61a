# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration core.

Adaptive Dormand-Prince 5(4) specialized to the structured linear system

    da/dt      = -(kappa/2 + gamma_c) a - i g sum_m b_m + sqrt(kappa) A_in(t)
    db_m/dt    = -(i Delta_m + gamma_b) b_m - i g a - i f sum_j S_jm
    dS_jm/dt   = -(i delta_jm + gamma_a) S_jm - i f b_m

with five real quadrature states (input/output energies and the three
dissipation integrals) carried inside the state vector so the energy
ledger closes to integrator accuracy.  State layout:

    [a, b_0..b_{M-1}, S_00..S_{M-1,N-1}, E_in, E_out, D_c, D_b, D_a]

The step controller lands exactly on the requested record times; each
record row is [a, b_0..b_{M-1}, P_a, E_in, E_out, D_c, D_b, D_a].
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, sin, sqrt, fabs, pow

cnp.import_array()

# Dormand-Prince 5(4) tableau
cdef double A21 = 1.0/5.0
cdef double A31 = 3.0/40.0, A32 = 9.0/40.0
cdef double A41 = 44.0/45.0, A42 = -56.0/15.0, A43 = 32.0/9.0
cdef double A51 = 19372.0/6561.0, A52 = -25360.0/2187.0
cdef double A53 = 64448.0/6561.0, A54 = -212.0/729.0
cdef double A61 = 9017.0/3168.0, A62 = -355.0/33.0, A63 = 46732.0/5247.0
cdef double A64 = 49.0/176.0, A65 = -5103.0/18656.0
cdef double B1 = 35.0/384.0, B3 = 500.0/1113.0, B4 = 125.0/192.0
cdef double B5 = -2187.0/6784.0, B6 = 11.0/84.0
cdef double E1 = 71.0/57600.0, E3 = -71.0/16695.0, E4 = 71.0/1920.0
cdef double E5 = -17253.0/339200.0, E6 = 22.0/525.0, E7 = -1.0/40.0
cdef double C2 = 1.0/5.0, C3 = 3.0/10.0, C4 = 4.0/5.0, C5 = 8.0/9.0


cdef inline double complex _drive(double t, double amp0, double t0,
                                  double dts, double woff) nogil:
    cdef double u, mag, ph
    if amp0 == 0.0:
        return 0.0
    u = (t - t0) / dts
    mag = amp0 * exp(-u * u)
    ph = -woff * (t - t0)
    return mag * (cos(ph) + 1j * sin(ph))


cdef void _rhs(double t, double complex* y, double complex* dy,
               Py_ssize_t M, Py_ssize_t N,
               double complex diag_a, double complex* diag_b,
               double complex* diag_s,
               double g, double f, double sqrt_kappa,
               double amp0, double t0, double dts, double woff,
               double gamma_c, double gamma_b, double gamma_a) nogil:
    cdef Py_ssize_t m, j, base
    cdef double complex a = y[0]
    cdef double complex ain = _drive(t, amp0, t0, dts, woff)
    cdef double complex sb = 0.0, ss, b, s, aout
    cdef double pm = 0.0, pa = 0.0, na
    for m in range(M):
        b = y[1 + m]
        sb = sb + b
        pm += b.real * b.real + b.imag * b.imag
        ss = 0.0
        base = 1 + M + m * N
        for j in range(N):
            s = y[base + j]
            ss = ss + s
            pa += s.real * s.real + s.imag * s.imag
            dy[base + j] = diag_s[m * N + j] * s - 1j * f * b
        dy[1 + m] = diag_b[m] * b - 1j * g * a - 1j * f * ss
    dy[0] = diag_a * a - 1j * g * sb + sqrt_kappa * ain
    aout = sqrt_kappa * a - ain
    na = a.real * a.real + a.imag * a.imag
    base = 1 + M + M * N
    dy[base] = ain.real * ain.real + ain.imag * ain.imag
    dy[base + 1] = aout.real * aout.real + aout.imag * aout.imag
    dy[base + 2] = 2.0 * gamma_c * na
    dy[base + 3] = 2.0 * gamma_b * pm
    dy[base + 4] = 2.0 * gamma_a * pa


def integrate_dp5(double complex[::1] y0, double t_start,
                  double[::1] record_ts,
                  Py_ssize_t M, Py_ssize_t N,
                  double complex diag_a,
                  double complex[::1] diag_b,
                  double complex[::1] diag_s,
                  double g, double f, double sqrt_kappa,
                  double amp0, double pulse_t0, double pulse_dts,
                  double pulse_woff,
                  double gamma_c, double gamma_b, double gamma_a,
                  double rtol, double atol, double h0, double h_max):
    """Integrate from t_start through every time in record_ts.

    Returns (records, y_final, status, t_reached, n_steps, n_rejected)
    with status 0 on success, 1 on step-size underflow.
    """
    cdef Py_ssize_t dim = y0.shape[0]
    cdef Py_ssize_t nrec = record_ts.shape[0]
    cdef Py_ssize_t exp_dim = 1 + M + M * N + 5
    if dim != exp_dim:
        raise ValueError(f"state length {dim} != expected {exp_dim}")

    rec_arr = np.zeros((nrec, 1 + M + 6), dtype=np.complex128)
    cdef double complex[:, ::1] rec = rec_arr
    y_arr = np.array(y0, dtype=np.complex128, copy=True)
    cdef double complex[::1] y = y_arr
    k_arr = np.zeros((7, dim), dtype=np.complex128)
    cdef double complex[:, ::1] k = k_arr
    tmp_arr = np.zeros(dim, dtype=np.complex128)
    cdef double complex[::1] ytmp = tmp_arr
    new_arr = np.zeros(dim, dtype=np.complex128)
    cdef double complex[::1] ynew = new_arr

    cdef double t = t_start
    cdef double h = h0
    cdef double tnext, err, errsum, sc, ay, ayn, q, fac, pa, hused
    cdef double complex e
    cdef Py_ssize_t irec = 0, i, m, j, base
    cdef long nstep = 0, nrej = 0
    cdef int status = 0

    _rhs(t, &y[0], &k[0, 0], M, N, diag_a, &diag_b[0],
         &diag_s[0] if M * N > 0 else NULL, g, f, sqrt_kappa,
         amp0, pulse_t0, pulse_dts, pulse_woff, gamma_c, gamma_b, gamma_a)

    while irec < nrec:
        tnext = record_ts[irec]
        if t >= tnext - 1e-12 * max(1.0, fabs(tnext)):
            # record row: a, b, P_a, accumulators
            rec[irec, 0] = y[0]
            for m in range(M):
                rec[irec, 1 + m] = y[1 + m]
            pa = 0.0
            base = 1 + M
            for i in range(M * N):
                pa += y[base + i].real * y[base + i].real \
                    + y[base + i].imag * y[base + i].imag
            rec[irec, 1 + M] = pa
            base = 1 + M + M * N
            for i in range(5):
                rec[irec, 2 + M + i] = y[base + i]
            irec += 1
            continue
        if h > h_max:
            h = h_max
        hused = h
        if t + hused > tnext:
            hused = tnext - t

        with nogil:
            for i in range(dim):
                ytmp[i] = y[i] + hused * (A21 * k[0, i])
            _rhs(t + C2 * hused, &ytmp[0], &k[1, 0], M, N, diag_a, &diag_b[0],
                 &diag_s[0] if M * N > 0 else NULL, g, f, sqrt_kappa,
                 amp0, pulse_t0, pulse_dts, pulse_woff, gamma_c, gamma_b, gamma_a)
            for i in range(dim):
                ytmp[i] = y[i] + hused * (A31 * k[0, i] + A32 * k[1, i])
            _rhs(t + C3 * hused, &ytmp[0], &k[2, 0], M, N, diag_a, &diag_b[0],
                 &diag_s[0] if M * N > 0 else NULL, g, f, sqrt_kappa,
                 amp0, pulse_t0, pulse_dts, pulse_woff, gamma_c, gamma_b, gamma_a)
            for i in range(dim):
                ytmp[i] = y[i] + hused * (A41 * k[0, i] + A42 * k[1, i]
                                          + A43 * k[2, i])
            _rhs(t + C4 * hused, &ytmp[0], &k[3, 0], M, N, diag_a, &diag_b[0],
                 &diag_s[0] if M * N > 0 else NULL, g, f, sqrt_kappa,
                 amp0, pulse_t0, pulse_dts, pulse_woff, gamma_c, gamma_b, gamma_a)
            for i in range(dim):
                ytmp[i] = y[i] + hused * (A51 * k[0, i] + A52 * k[1, i]
                                          + A53 * k[2, i] + A54 * k[3, i])
            _rhs(t + C5 * hused, &ytmp[0], &k[4, 0], M, N, diag_a, &diag_b[0],
                 &diag_s[0] if M * N > 0 else NULL, g, f, sqrt_kappa,
                 amp0, pulse_t0, pulse_dts, pulse_woff, gamma_c, gamma_b, gamma_a)
            for i in range(dim):
                ytmp[i] = y[i] + hused * (A61 * k[0, i] + A62 * k[1, i]
                                          + A63 * k[2, i] + A64 * k[3, i]
                                          + A65 * k[4, i])
            _rhs(t + hused, &ytmp[0], &k[5, 0], M, N, diag_a, &diag_b[0],
                 &diag_s[0] if M * N > 0 else NULL, g, f, sqrt_kappa,
                 amp0, pulse_t0, pulse_dts, pulse_woff, gamma_c, gamma_b, gamma_a)
            for i in range(dim):
                ynew[i] = y[i] + hused * (B1 * k[0, i] + B3 * k[2, i]
                                          + B4 * k[3, i] + B5 * k[4, i]
                                          + B6 * k[5, i])
            _rhs(t + hused, &ynew[0], &k[6, 0], M, N, diag_a, &diag_b[0],
                 &diag_s[0] if M * N > 0 else NULL, g, f, sqrt_kappa,
                 amp0, pulse_t0, pulse_dts, pulse_woff, gamma_c, gamma_b, gamma_a)

            errsum = 0.0
            for i in range(dim):
                e = hused * (E1 * k[0, i] + E3 * k[2, i] + E4 * k[3, i]
                             + E5 * k[4, i] + E6 * k[5, i] + E7 * k[6, i])
                ay = sqrt(y[i].real * y[i].real + y[i].imag * y[i].imag)
                ayn = sqrt(ynew[i].real * ynew[i].real
                           + ynew[i].imag * ynew[i].imag)
                sc = atol + rtol * (ay if ay > ayn else ayn)
                q = sqrt(e.real * e.real + e.imag * e.imag) / sc
                errsum += q * q
            err = sqrt(errsum / dim)

        if err <= 1.0:
            t = t + hused
            for i in range(dim):
                y[i] = ynew[i]
                k[0, i] = k[6, i]
            nstep += 1
        else:
            nrej += 1
        if err > 0.0:
            fac = 0.9 * pow(err, -0.2)
        else:
            fac = 5.0
        if fac < 0.2:
            fac = 0.2
        if fac > 5.0:
            fac = 5.0
        h = hused * fac
        if h < 1e-13 * max(1.0, fabs(t)):
            status = 1
            break

    return rec_arr, y_arr, status, t, nstep, nrej
