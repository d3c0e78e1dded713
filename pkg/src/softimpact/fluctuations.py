"""Fluctuation-moment hierarchy and the quantum correction force.

The mean trajectory (X, P) is corrected by a force built from central
moments of the position fluctuation delta-x around X.  Moments are stored
fully symmetrized up to total order 4 and propagated under the fluctuation
flow linearized at the mean position,

    d(dx)/dt = dp,    d(dp)/dt = -V''(X(t)) dx,

which closes each moment order exactly:

    da_jk/dt = j a_{j-1,k+1} - k V''(X) a_{j+1,k-1}.

The correction force assembled from the stored moments is

    Q = -( V'''(X) a20 / 2! + V''''(X) a30 / 3! + V^(5)(X) a40 / 4! ).

Two optional refinements, both off by default, are available for
sensitivity studies: a cubic feed term that lets the potential
nonlinearity source odd moments (closed at order 5 by Wick pairing), and
Markovian damping of momentum-indexed moments at the bath rate.
"""

from dataclasses import dataclass, astuple
import math

import numpy as np

from .model import SystemParams, v_derivs

# index layout shared with the integration kernel
MOMENT_NAMES = ("a20", "a11", "a02",
                "a30", "a21", "a12", "a03",
                "a40", "a31", "a22", "a13", "a04")
N_MOMENTS = len(MOMENT_NAMES)


@dataclass
class MomentState:
    """Symmetrized central moments of (dx, dp) up to total order 4."""

    a20: float = 0.0
    a11: float = 0.0
    a02: float = 0.0
    a30: float = 0.0
    a21: float = 0.0
    a12: float = 0.0
    a03: float = 0.0
    a40: float = 0.0
    a31: float = 0.0
    a22: float = 0.0
    a13: float = 0.0
    a04: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))

    @staticmethod
    def from_array(m) -> "MomentState":
        return MomentState(*map(float, m))

    def symplectic_invariant(self) -> float:
        """a20*a02 - a11^2; conserved by the linearized flow, >= hbar^2/4."""
        return self.a20 * self.a02 - self.a11**2


def init_moments(p: SystemParams) -> MomentState:
    """Minimum-uncertainty Gaussian at the oscillator's natural frequency.

    Order 2 saturates the Heisenberg floor, order 3 vanishes, order 4
    follows from Wick factorization of the Gaussian.
    """
    a20 = p.hbar / (2.0 * p.omega0)
    a02 = p.hbar * p.omega0 / 2.0
    return MomentState(
        a20=a20, a11=0.0, a02=a02,
        a40=3.0 * a20**2, a22=a20 * a02, a04=3.0 * a02**2)


def _fifth_moment(m, j, k):
    """Order-5 central moment by Wick pairing (covariance times third moment)."""
    a20, a11, a02 = m[0], m[1], m[2]
    a30, a21, a12, a03 = m[3], m[4], m[5], m[6]
    if (j, k) == (5, 0):
        return 10.0 * a20 * a30
    if (j, k) == (4, 1):
        return 6.0 * a20 * a21 + 4.0 * a11 * a30
    if (j, k) == (3, 2):
        return 3.0 * a20 * a12 + a02 * a30 + 6.0 * a11 * a21
    if (j, k) == (2, 3):
        return a20 * a03 + 3.0 * a02 * a21 + 6.0 * a11 * a12
    raise ValueError(f"unsupported fifth-moment index ({j}, {k})")


def moment_rhs_array(m, V2: float, V3: float = 0.0,
                     nonlinear_feed: bool = False,
                     damping_rate: float = 0.0) -> np.ndarray:
    """Time derivative of the moment vector under the linearized flow.

    With nonlinear_feed, the momentum equation gains the cubic source
    -(V'''/2)(dx^2 - a20); its contributions to order-4 moments close
    through order-5 Wick pairing.  damping_rate > 0 adds -k*rate*a_jk to
    each moment with k momentum indices.
    """
    m = np.asarray(m, dtype=float)
    (a20, a11, a02, a30, a21, a12, a03, a40, a31, a22, a13, a04) = m
    d = np.array([
        2.0 * a11,
        a02 - V2 * a20,
        -2.0 * V2 * a11,
        3.0 * a21,
        2.0 * a12 - V2 * a30,
        a03 - 2.0 * V2 * a21,
        -3.0 * V2 * a12,
        4.0 * a31,
        3.0 * a22 - V2 * a40,
        2.0 * a13 - 2.0 * V2 * a31,
        a04 - 3.0 * V2 * a22,
        -4.0 * V2 * a13,
    ])
    if nonlinear_feed and V3 != 0.0:
        g = -0.5 * V3
        # da_jk gains k*g*(a_{j+2,k-1} - a20*a_{j,k-1}); order-1 moments vanish
        d[1] += g * a30
        d[2] += 2.0 * g * a21
        d[4] += g * (a40 - a20 * a20)
        d[5] += 2.0 * g * (a31 - a20 * a11)
        d[6] += 3.0 * g * (a22 - a20 * a02)
        d[8] += g * (_fifth_moment(m, 5, 0) - a20 * a30)
        d[9] += 2.0 * g * (_fifth_moment(m, 4, 1) - a20 * a21)
        d[10] += 3.0 * g * (_fifth_moment(m, 3, 2) - a20 * a12)
        d[11] += 4.0 * g * (_fifth_moment(m, 2, 3) - a20 * a03)
    if damping_rate > 0.0:
        k_idx = np.array([0, 1, 2, 0, 1, 2, 3, 0, 1, 2, 3, 4], dtype=float)
        d -= damping_rate * k_idx * m
    return d


def moment_rhs(ms: MomentState, V2: float, **kw) -> MomentState:
    """Dataclass wrapper around moment_rhs_array."""
    return MomentState.from_array(moment_rhs_array(ms.as_array(), V2, **kw))


def q_correction(ms: MomentState, x: float, t: float, p: SystemParams) -> float:
    """Total quantum correction force at the mean position."""
    return sum(q_orders(ms, x, p))


def q_orders(ms: MomentState, x: float, p: SystemParams):
    """Per-order contributions (q2, q3, q4) to the correction force."""
    _, V3, V4, V5 = v_derivs(x, p, max_order=4)
    return (-0.5 * V3 * ms.a20,
            -V4 * ms.a30 / 6.0,
            -V5 * ms.a40 / 24.0)
