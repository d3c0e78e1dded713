"""Sigmoid-smoothed soft-impact potential and its derivative tower.

The oscillator is a unit mass on a spring of constant k; beyond x_wall it
engages a second spring A times stiffer.  The piecewise stiffness is
smoothed by a sigmoid of slope c so that derivatives of all orders exist:

    V''(x) = k*A / (1 + exp(-c*(x - x_wall))) + k

First derivative and potential are reconstructed by integration, with
constants chosen so V'(x) -> k*x on the free side.  A periodic drive
F*cos(Omega*t) is added to the force.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import quad


@dataclass(frozen=True)
class SystemParams:
    """Oscillator, wall, forcing and smoothing constants (mass fixed at 1)."""

    k: float = 1.0
    A: float = 10.0
    m: float = 1.0
    x_wall: float = 0.5
    F: float = 10.0
    Omega: float = 0.5
    hbar: float = 0.01
    c_slope: float = 10.0
    omega0: float = field(init=False)

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.A < 0:
            raise ValueError(f"A must be non-negative, got {self.A}")
        if self.m <= 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if self.c_slope <= 0:
            raise ValueError(f"c_slope must be positive, got {self.c_slope}")
        if self.Omega <= 0:
            raise ValueError(f"Omega must be positive, got {self.Omega}")
        if self.hbar < 0:
            raise ValueError(f"hbar must be non-negative, got {self.hbar}")
        object.__setattr__(self, "omega0", math.sqrt(self.k / self.m))

    @property
    def forcing_period(self) -> float:
        return 2.0 * math.pi / self.Omega


def _sigmoid(u):
    """Numerically stable logistic function, branch on sign to avoid overflow."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out if out.ndim else float(out)


def _softplus(u):
    """log(1 + exp(u)) without overflow: for u > 0 use u + log(1+exp(-u))."""
    u = np.asarray(u, dtype=float)
    return np.where(u > 0, u + np.log1p(np.exp(-np.abs(u))),
                    np.log1p(np.exp(-np.abs(u))))


def v2(x, p: SystemParams):
    """Second derivative of the smoothed potential (position-dependent stiffness)."""
    s = _sigmoid(p.c_slope * (np.asarray(x, dtype=float) - p.x_wall))
    return p.k * p.A * s + p.k


def v1(x, t, p: SystemParams):
    """Force function V'(x, t) including the periodic drive.

    Integration constant makes v1 -> k*x far to the left of the wall.
    """
    x = np.asarray(x, dtype=float)
    sp = _softplus(p.c_slope * (x - p.x_wall))
    out = p.k * x + (p.k * p.A / p.c_slope) * sp + p.F * np.cos(p.Omega * t)
    return out if out.ndim else float(out)


def v_derivs(x, p: SystemParams, max_order: int = 4):
    """Derivatives V'', V''', ... up to order max_order+1 as a tuple.

    max_order n means the highest returned derivative is V^(n+1); allowed
    values are 2, 3, 4.  Closed forms follow from repeated differentiation
    of the logistic function: with s = sigma(c*(x - x_wall)),

        V'''  = k*A*c   * s*(1-s)
        V'''' = k*A*c^2 * s*(1-s)*(1-2s)
        V^(5) = k*A*c^3 * s*(1-s)*(1-6s+6s^2)
    """
    if max_order not in (2, 3, 4):
        raise ValueError(f"max_order must be in {{2, 3, 4}}, got {max_order}")
    x = np.asarray(x, dtype=float)
    s = _sigmoid(p.c_slope * (x - p.x_wall))
    kA = p.k * p.A
    c = p.c_slope
    d2 = kA * s + p.k
    out = [d2]
    if max_order >= 2:
        out.append(kA * c * s * (1.0 - s))
    if max_order >= 3:
        out.append(kA * c**2 * s * (1.0 - s) * (1.0 - 2.0 * s))
    if max_order >= 4:
        out.append(kA * c**3 * s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s**2))
    return tuple(out)


def potential(x: float, p: SystemParams, t: float = 0.0) -> float:
    """Static potential V(x) by adaptive quadrature of the force from a
    far-left anchor, plus the harmonic part integrated in closed form.

    Only used for energy diagnostics; the dynamics never need V itself.
    """
    anchor = p.x_wall - 10.0
    harmonic = 0.5 * p.k * (x**2)
    # quadrature only over the anharmonic softplus part
    extra, _ = quad(
        lambda u: (p.k * p.A / p.c_slope) * _softplus(p.c_slope * (u - p.x_wall)),
        anchor, x, limit=200)
    return harmonic + extra + x * p.F * math.cos(p.Omega * t)
