"""Affine trajectory parameterization on a Bernstein velocity basis.

A fixed-horizon trajectory of the planar pendulum state ``x = [q, qdot]``
is parameterized by ``omega = [q0, c_0, ..., c_{n-2}]``: the initial angle
plus the control values of a degree-``n-2`` Bernstein polynomial for the
angular velocity.  The angle is the exact running integral of that
polynomial, so the whole state is linear in ``omega``:

    x(t, omega) = H(t) omega,       H(t) in R^{2 x n}.

The module also assembles the block matrices that couple ``l`` stacked
segments: ``H_c`` (adjacent-segment continuity) and ``H_b`` (initial and
final boundary states).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import binom


class TimeOutOfRange(ValueError):
    """Evaluation time outside the segment horizon [0, T]."""


@dataclass(frozen=True)
class BasisSpec:
    """Segment parameterization: ``n`` parameters over horizon ``T`` seconds.

    The state dimension ``r`` is 2 (angle, angular velocity).  The
    velocity polynomial has Bernstein degree ``n - 2``.
    """

    n: int
    T: float
    r: int = 2

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"need n >= 3 parameters, got {self.n}")
        if self.T <= 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if self.r != 2:
            raise ValueError("only the planar pendulum state (r = 2) is supported")

    @property
    def velocity_degree(self) -> int:
        return self.n - 2


@dataclass
class StackedMatrices:
    """Continuity matrix ``H_c`` (r(l-1) x nl) and boundary matrix ``H_b`` (2r x nl)."""

    H_c: np.ndarray
    H_b: np.ndarray
    l: int


def bernstein_row(degree: int, tau: float) -> np.ndarray:
    """Values ``B_{i,degree}(tau)`` for i = 0..degree."""
    i = np.arange(degree + 1)
    return binom(degree, i) * tau**i * (1.0 - tau) ** (degree - i)


def bernstein_integral_row(degree: int, tau: float) -> np.ndarray:
    """Running integrals ``int_0^tau B_{i,degree}(s) ds`` for i = 0..degree.

    Uses the identity that the integral equals ``1/(degree+1)`` times the
    sum of the degree+1 Bernstein values with index above i.
    """
    higher = bernstein_row(degree + 1, tau)
    # tail sums: sum_{j > i} B_{j, degree+1}(tau)
    tails = np.cumsum(higher[::-1])[::-1][1:]
    return tails / (degree + 1.0)


def _check_time(spec: BasisSpec, t: float) -> float:
    if not (0.0 <= t <= spec.T * (1.0 + 1e-12)):
        raise TimeOutOfRange(f"t = {t} outside [0, {spec.T}]")
    return min(t / spec.T, 1.0)


def eval_H(spec: BasisSpec, t: float) -> np.ndarray:
    """State map ``H(t)`` with rows [angle; angular velocity], shape (2, n)."""
    tau = _check_time(spec, t)
    d = spec.velocity_degree
    H = np.zeros((2, spec.n))
    H[0, 0] = 1.0
    H[0, 1:] = spec.T * bernstein_integral_row(d, tau)
    H[1, 1:] = bernstein_row(d, tau)
    return H


def eval_accel_row(spec: BasisSpec, t: float) -> np.ndarray:
    """Linear functional giving the angular acceleration at ``t``, shape (n,).

    Differentiating the Bernstein velocity gives degree-(n-3) differences
    of the control values, scaled by (n-2)/T.
    """
    tau = _check_time(spec, t)
    d = spec.velocity_degree
    row = np.zeros(spec.n)
    lower = bernstein_row(d - 1, tau) if d >= 1 else np.zeros(0)
    scale = d / spec.T
    for i in range(d):
        # term (c_{i+1} - c_i) * B_{i, d-1}
        row[1 + i + 1] += scale * lower[i]
        row[1 + i] -= scale * lower[i]
    return row


def build_stacked(spec: BasisSpec, l: int) -> StackedMatrices:
    """Continuity and boundary matrices for ``l`` concatenated segments.

    ``H_c`` has one block row per adjacent pair: ``H(T)`` in the columns
    of segment i and ``-H(0)`` in the columns of segment i+1, so
    ``H_c w = 0`` is exactly state continuity.  ``H_b`` extracts the first
    segment's initial state and the last segment's final state.
    """
    if l < 1:
        raise ValueError(f"need at least one segment, got l = {l}")
    n, r = spec.n, spec.r
    H0 = eval_H(spec, 0.0)
    HT = eval_H(spec, spec.T)
    H_c = np.zeros((r * (l - 1), n * l))
    for i in range(l - 1):
        H_c[r * i:r * (i + 1), n * i:n * (i + 1)] = HT
        H_c[r * i:r * (i + 1), n * (i + 1):n * (i + 2)] = -H0
    H_b = np.zeros((2 * r, n * l))
    H_b[:r, :n] = H0
    H_b[r:, n * (l - 1):] = HT
    return StackedMatrices(H_c=H_c, H_b=H_b, l=l)


def pair_continuity(spec: BasisSpec) -> np.ndarray:
    """The single-junction continuity matrix ``[H(T) | -H(0)]``, shape (r, 2n)."""
    return build_stacked(spec, 2).H_c
