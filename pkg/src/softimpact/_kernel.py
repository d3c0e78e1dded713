"""Compiled inner loops for trajectory integration and twin-trajectory
Lyapunov accumulation.

State vector layout (length 15):
    0: X  mean position
    1: P  mean momentum
    2: z  memory auxiliary force
    3-14: fluctuation moments in the order of fluctuations.MOMENT_NAMES

Parameter vector layout (length 10):
    0: k, 1: A, 2: x_wall, 3: F, 4: Omega, 5: c_slope,
    6: Gamma, 7: tau_c, 8: nonlinear feed flag (0/1),
    9: moment damping rate (0 disables)

The colored noise enters through a precomputed per-step series f; each
step holds f fixed across both Heun stages.
"""

import math

import numpy as np
from numba import njit

NSTATE = 15
BLOWUP_GUARD = 1.0e6

OK = -1  # integrate/benettin return the failing step index, or OK


@njit(cache=True)
def _sigmoid(u):
    if u >= 0.0:
        return 1.0 / (1.0 + math.exp(-u))
    e = math.exp(u)
    return e / (1.0 + e)


@njit(cache=True)
def _softplus(u):
    if u > 0.0:
        return u + math.log1p(math.exp(-u))
    return math.log1p(math.exp(u))


@njit(cache=True)
def q_terms(s, par):
    """Per-order correction forces (q2, q3, q4) at the current mean position."""
    k = par[0]
    A = par[1]
    c = par[5]
    sg = _sigmoid(c * (s[0] - par[2]))
    kA = k * A
    V3 = kA * c * sg * (1.0 - sg)
    V4 = kA * c * c * sg * (1.0 - sg) * (1.0 - 2.0 * sg)
    V5 = kA * c * c * c * sg * (1.0 - sg) * (1.0 - 6.0 * sg + 6.0 * sg * sg)
    return (-0.5 * V3 * s[3], -V4 * s[6] / 6.0, -V5 * s[10] / 24.0)


@njit(cache=True)
def rhs(s, t, f, par, out):
    """Time derivative of the full state into out."""
    k = par[0]
    A = par[1]
    xw = par[2]
    F = par[3]
    Om = par[4]
    c = par[5]
    Gamma = par[6]
    tau_c = par[7]
    nl_feed = par[8] != 0.0
    damp = par[9]

    X = s[0]
    P = s[1]
    z = s[2]

    u = c * (X - xw)
    sg = _sigmoid(u)
    kA = k * A
    V1 = k * X + (kA / c) * _softplus(u) + F * math.cos(Om * t)
    V2 = kA * sg + k
    V3 = kA * c * sg * (1.0 - sg)
    V4 = kA * c * c * sg * (1.0 - sg) * (1.0 - 2.0 * sg)
    V5 = kA * c * c * c * sg * (1.0 - sg) * (1.0 - 6.0 * sg + 6.0 * sg * sg)

    a20 = s[3]
    a11 = s[4]
    a02 = s[5]
    a30 = s[6]
    a21 = s[7]
    a12 = s[8]
    a03 = s[9]
    a40 = s[10]
    a31 = s[11]
    a22 = s[12]
    a13 = s[13]
    a04 = s[14]

    Q = -0.5 * V3 * a20 - V4 * a30 / 6.0 - V5 * a40 / 24.0

    out[0] = P
    out[1] = -V1 + Q + f + z
    out[2] = -Gamma * P / tau_c - z / tau_c

    out[3] = 2.0 * a11
    out[4] = a02 - V2 * a20
    out[5] = -2.0 * V2 * a11
    out[6] = 3.0 * a21
    out[7] = 2.0 * a12 - V2 * a30
    out[8] = a03 - 2.0 * V2 * a21
    out[9] = -3.0 * V2 * a12
    out[10] = 4.0 * a31
    out[11] = 3.0 * a22 - V2 * a40
    out[12] = 2.0 * a13 - 2.0 * V2 * a31
    out[13] = a04 - 3.0 * V2 * a22
    out[14] = -4.0 * V2 * a13

    if nl_feed and V3 != 0.0:
        g = -0.5 * V3
        m50 = 10.0 * a20 * a30
        m41 = 6.0 * a20 * a21 + 4.0 * a11 * a30
        m32 = 3.0 * a20 * a12 + a02 * a30 + 6.0 * a11 * a21
        m23 = a20 * a03 + 3.0 * a02 * a21 + 6.0 * a11 * a12
        out[4] += g * a30
        out[5] += 2.0 * g * a21
        out[7] += g * (a40 - a20 * a20)
        out[8] += 2.0 * g * (a31 - a20 * a11)
        out[9] += 3.0 * g * (a22 - a20 * a02)
        out[11] += g * (m50 - a20 * a30)
        out[12] += 2.0 * g * (m41 - a20 * a21)
        out[13] += 3.0 * g * (m32 - a20 * a12)
        out[14] += 4.0 * g * (m23 - a20 * a03)

    if damp > 0.0:
        out[4] -= damp * a11
        out[5] -= 2.0 * damp * a02
        out[7] -= damp * a21
        out[8] -= 2.0 * damp * a12
        out[9] -= 3.0 * damp * a03
        out[11] -= damp * a31
        out[12] -= 2.0 * damp * a22
        out[13] -= 3.0 * damp * a13
        out[14] -= 4.0 * damp * a04


@njit(cache=True)
def heun_step(s, t, f, dt, par, k1, k2, sp):
    """One stochastic Heun step in place; noise f held constant."""
    rhs(s, t, f, par, k1)
    for j in range(NSTATE):
        sp[j] = s[j] + dt * k1[j]
    rhs(sp, t + dt, f, par, k2)
    for j in range(NSTATE):
        s[j] += 0.5 * dt * (k1[j] + k2[j])


@njit(cache=True)
def _blown(s):
    for j in range(NSTATE):
        if not math.isfinite(s[j]):
            return True
    return abs(s[0]) > BLOWUP_GUARD or abs(s[1]) > BLOWUP_GUARD


@njit(cache=True)
def integrate(s, par, t0, dt, fser, record_start, stride, rec):
    """Advance len(fser) steps, recording rows (t, X, P, z, f, q2, q3, q4).

    Samples are taken at step starts from record_start on, every stride
    steps; the f column holds the value applied over the following step.
    Returns OK or the step index where the blow-up guard tripped.
    """
    n_steps = fser.shape[0]
    k1 = np.empty(NSTATE)
    k2 = np.empty(NSTATE)
    sp = np.empty(NSTATE)
    irec = 0
    nrec = rec.shape[0]
    for i in range(n_steps):
        t = t0 + i * dt
        if i >= record_start and (i - record_start) % stride == 0 and irec < nrec:
            q2, q3, q4 = q_terms(s, par)
            rec[irec, 0] = t
            rec[irec, 1] = s[0]
            rec[irec, 2] = s[1]
            rec[irec, 3] = s[2]
            rec[irec, 4] = fser[i]
            rec[irec, 5] = q2
            rec[irec, 6] = q3
            rec[irec, 7] = q4
            irec += 1
        heun_step(s, t, fser[i], dt, par, k1, k2, sp)
        if _blown(s):
            return i
    return OK


@njit(cache=True)
def benettin(s, par, d0, t0, dt, fser, renorm_steps, accum_start):
    """Largest Lyapunov exponent by twin trajectories with shared noise.

    The perturbed copy starts offset by d0 along X.  Separation is measured
    in the full (X, P, z, moments) state, renormalized to d0 every
    renorm_steps steps; log stretch factors accumulate only from step
    accum_start on.  Returns (exponent, failing step index or OK).
    """
    n_steps = fser.shape[0]
    k1 = np.empty(NSTATE)
    k2 = np.empty(NSTATE)
    sp = np.empty(NSTATE)
    s2 = s.copy()
    s2[0] += d0
    logsum = 0.0
    accum_time = 0.0
    for i in range(n_steps):
        t = t0 + i * dt
        f = fser[i]
        heun_step(s, t, f, dt, par, k1, k2, sp)
        heun_step(s2, t, f, dt, par, k1, k2, sp)
        if _blown(s) or _blown(s2):
            return np.nan, i
        if (i + 1) % renorm_steps == 0:
            d2 = 0.0
            for j in range(NSTATE):
                dj = s2[j] - s[j]
                d2 += dj * dj
            d = math.sqrt(d2)
            if d == 0.0 or not math.isfinite(d):
                return np.nan, i
            if i >= accum_start:
                logsum += math.log(d / d0)
                accum_time += renorm_steps * dt
            scale = d0 / d
            for j in range(NSTATE):
                s2[j] = s[j] + (s2[j] - s[j]) * scale
    if accum_time == 0.0:
        return np.nan, OK
    return logsum / accum_time, OK
