"""Pure-numpy fallback for the compiled integration core.

Same algorithm, tableau and record semantics as ``_kernel.pyx``; used
when the extension is not built (MRQM_BACKEND=python also selects it).
Vectorized over the state, so it stays usable for moderate systems,
just a few times slower than the compiled path.
"""

from __future__ import annotations

import numpy as np

# Dormand-Prince 5(4) tableau
_A = (
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)


def integrate_dp5(y0, t_start, record_ts, M, N, diag_a, diag_b, diag_s,
                  g, f, sqrt_kappa, amp0, pulse_t0, pulse_dts, pulse_woff,
                  gamma_c, gamma_b, gamma_a, rtol, atol, h0, h_max):
    """See ``mrqm._kernel.integrate_dp5``; identical contract."""
    dim = y0.shape[0]
    if dim != 1 + M + M * N + 5:
        raise ValueError(f"state length {dim} != expected {1 + M + M * N + 5}")
    nrec = record_ts.shape[0]
    acc0 = 1 + M + M * N

    def drive(t):
        if amp0 == 0.0:
            return 0.0j
        u = (t - pulse_t0) / pulse_dts
        return amp0 * np.exp(-u * u - 1j * pulse_woff * (t - pulse_t0))

    def rhs(t, y):
        dy = np.empty_like(y)
        a = y[0]
        ain = drive(t)
        b = y[1:1 + M]
        s = y[1 + M:acc0].reshape(M, N) if N else np.zeros((M, 0), complex)
        ds = diag_s.reshape(M, N) * s - 1j * f * b[:, None]
        dy[1 + M:acc0] = ds.ravel()
        dy[1:1 + M] = diag_b * b - 1j * g * a - 1j * f * s.sum(axis=1)
        dy[0] = diag_a * a - 1j * g * b.sum() + sqrt_kappa * ain
        aout = sqrt_kappa * a - ain
        pm = float(np.sum(b.real**2 + b.imag**2))
        pa = float(np.sum(s.real**2 + s.imag**2))
        dy[acc0 + 0] = abs(ain) ** 2
        dy[acc0 + 1] = abs(aout) ** 2
        dy[acc0 + 2] = 2.0 * gamma_c * (a.real**2 + a.imag**2)
        dy[acc0 + 3] = 2.0 * gamma_b * pm
        dy[acc0 + 4] = 2.0 * gamma_a * pa
        return dy

    rec = np.zeros((nrec, 1 + M + 6), dtype=np.complex128)
    y = np.array(y0, dtype=np.complex128, copy=True)
    k = [None] * 7
    t = t_start
    h = h0
    irec = 0
    nstep = nrej = 0
    status = 0
    k[0] = rhs(t, y)

    while irec < nrec:
        tnext = record_ts[irec]
        if t >= tnext - 1e-12 * max(1.0, abs(tnext)):
            rec[irec, 0] = y[0]
            rec[irec, 1:1 + M] = y[1:1 + M]
            rec[irec, 1 + M] = float(
                np.sum(y[1 + M:acc0].real**2 + y[1 + M:acc0].imag**2))
            rec[irec, 2 + M:] = y[acc0:]
            irec += 1
            continue
        h = min(h, h_max)
        hused = min(h, tnext - t)

        for st in range(1, 6):
            yt = y + hused * sum(c * k[i] for i, c in enumerate(_A[st - 1]))
            k[st] = rhs(t + _C[st] * hused, yt)
        ynew = y + hused * sum(c * k[i] for i, c in enumerate(_B) if c)
        k[6] = rhs(t + hused, ynew)

        e = hused * sum(c * k[i] for i, c in enumerate(_E) if c)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = float(np.sqrt(np.mean((np.abs(e) / scale) ** 2)))

        if err <= 1.0:
            t = t + hused
            y = ynew
            k[0] = k[6]
            nstep += 1
        else:
            nrej += 1
        fac = 0.9 * err**-0.2 if err > 0 else 5.0
        h = hused * min(5.0, max(0.2, fac))
        if h < 1e-13 * max(1.0, abs(t)):
            status = 1
            break

    return rec, y, status, t, nstep, nrej
