"""Torque-limited pendulum dynamics along parameterized trajectories.

The pendulum is a point mass ``m`` at distance ``l`` from the pivot, angle
``q`` measured from the stable (hanging) equilibrium.  Driving it along a
trajectory ``q(t, omega)`` requires joint torque

    u(t, omega) = m l^2 qdd(t, omega) + m g l sin(q(t, omega)),

which is nonlinear in ``omega`` only through the sine.  The torque bound
``|u| <= u_max`` is enforced at a finite set of check times; this module
evaluates torques and bound violations (single and batched), their
gradients (hyperplane normals for region growth), and simulates/fits
zero-torque free-fall trajectories used to seed the decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import BasisSpec, bernstein_row, eval_H, eval_accel_row

DEFAULT_GRAVITY = 9.81
DEFAULT_CHECK_COUNT = 11

_ZERO_TORQUE_TOL = 1e-12
_RK4_STEPS = 200

_CONFIG_KEYS = ("m", "l", "g", "u_max", "n", "T", "d")


class ZeroTorqueAmbiguity(ValueError):
    """|u| is not differentiable where the torque vanishes; pick another check time."""


@dataclass
class PendulumSystem:
    m: float
    l: float
    g: float
    u_max: float
    spec: BasisSpec
    check_times: np.ndarray = None

    def __post_init__(self):
        if self.m <= 0 or self.l <= 0 or self.u_max <= 0:
            raise ValueError("m, l, u_max must be positive")
        if self.g < 0:
            raise ValueError("g must be nonnegative (0 disables gravity for linear checks)")
        if self.check_times is None:
            self.check_times = np.linspace(0.0, self.spec.T, DEFAULT_CHECK_COUNT)
        self.check_times = np.asarray(self.check_times, dtype=float)
        d = self.check_times.shape[0]
        if d < 2 or np.any(np.diff(self.check_times) < 0):
            raise ValueError("check_times must be sorted with at least two entries")
        if self.check_times[0] != 0.0 or not np.isclose(self.check_times[-1], self.spec.T):
            raise ValueError("check_times must start at 0 and end at T")
        # torque is affine in omega except through sin(q); cache the two
        # linear maps (angle rows and acceleration rows at check times)
        self._W_q = np.array([eval_H(self.spec, t)[0] for t in self.check_times])
        self._W_a = np.array([eval_accel_row(self.spec, t) for t in self.check_times])

    @property
    def d(self) -> int:
        return self.check_times.shape[0]

    @classmethod
    def from_config(cls, config: dict) -> "PendulumSystem":
        missing = [k for k in _CONFIG_KEYS if k not in config]
        if missing:
            raise KeyError(f"system config missing keys {missing}")
        spec = BasisSpec(n=int(config["n"]), T=float(config["T"]))
        times = np.linspace(0.0, spec.T, int(config["d"]))
        return cls(m=float(config["m"]), l=float(config["l"]), g=float(config["g"]),
                   u_max=float(config["u_max"]), spec=spec, check_times=times)

    def to_config(self) -> dict:
        return {"m": self.m, "l": self.l, "g": self.g, "u_max": self.u_max,
                "n": self.spec.n, "T": self.spec.T, "d": int(self.d)}


@dataclass
class TorqueProfile:
    times: np.ndarray
    torques: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.torques.shape:
            raise ValueError("times and torques must have equal length")


@dataclass
class FreeFallTrajectory:
    """Dense samples of an unactuated swing, plus values at the check times."""

    times: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    check_times: np.ndarray
    q_checks: np.ndarray
    qdot_checks: np.ndarray


def torques_at_checks(sys: PendulumSystem, omegas: np.ndarray) -> np.ndarray:
    """Torques at all check times; accepts one omega (n,) or a batch (N, n)."""
    omegas = np.asarray(omegas, dtype=float)
    q = omegas @ sys._W_q.T
    acc = omegas @ sys._W_a.T
    return sys.m * sys.l**2 * acc + sys.m * sys.g * sys.l * np.sin(q)


def torque_at(sys: PendulumSystem, omega: np.ndarray, t: float) -> float:
    """Joint torque required at time ``t`` along the trajectory ``omega``."""
    omega = np.asarray(omega, dtype=float)
    q = float(eval_H(sys.spec, t)[0] @ omega)
    acc = float(eval_accel_row(sys.spec, t) @ omega)
    return sys.m * sys.l**2 * acc + sys.m * sys.g * sys.l * np.sin(q)


def torque_profile(sys: PendulumSystem, omega: np.ndarray) -> TorqueProfile:
    return TorqueProfile(times=sys.check_times.copy(),
                         torques=np.asarray(torques_at_checks(sys, omega)))


def max_violation(sys: PendulumSystem, omega: np.ndarray) -> tuple[int, float]:
    """Worst check index and its excess ``|u| - u_max`` (<= 0 means feasible)."""
    u = torques_at_checks(sys, omega)
    k = int(np.argmax(np.abs(u)))
    return k, float(np.abs(u[k]) - sys.u_max)


def max_violation_batch(sys: PendulumSystem, omegas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`max_violation` over a batch of parameter vectors."""
    u = np.abs(torques_at_checks(sys, np.atleast_2d(omegas)))
    ks = np.argmax(u, axis=1)
    return ks, u[np.arange(u.shape[0]), ks] - sys.u_max


def violation_gradient(sys: PendulumSystem, omega: np.ndarray, k: int) -> np.ndarray:
    """Gradient of ``|u(t_k, omega)|`` with respect to ``omega``.

    Raises :class:`ZeroTorqueAmbiguity` when the torque vanishes at the
    check time, since ``|u|`` has no gradient there; callers perturb the
    check-time choice instead.
    """
    omega = np.asarray(omega, dtype=float)
    u = torques_at_checks(sys, omega)[k]
    if abs(u) <= _ZERO_TORQUE_TOL:
        raise ZeroTorqueAmbiguity(f"torque vanishes at check time index {k}")
    q = float(sys._W_q[k] @ omega)
    grad_u = sys.m * sys.l**2 * sys._W_a[k] + sys.m * sys.g * sys.l * np.cos(q) * sys._W_q[k]
    return np.sign(u) * grad_u


def energy(sys: PendulumSystem, q, qdot):
    """Mechanical energy; conserved along unactuated motion."""
    return 0.5 * sys.m * sys.l**2 * np.asarray(qdot) ** 2 \
        - sys.m * sys.g * sys.l * np.cos(np.asarray(q))


def simulate_free_fall(sys: PendulumSystem, q0: float, qdot0: float) -> FreeFallTrajectory:
    """Integrate the unactuated pendulum over one horizon.

    Fixed-step RK4 with step T/200; returns the dense grid and the values
    interpolated at the check times (exact there for grid-aligned checks).
    """
    T = sys.spec.T
    h = T / _RK4_STEPS
    times = np.linspace(0.0, T, _RK4_STEPS + 1)
    y = np.array([q0, qdot0], dtype=float)
    traj = np.empty((_RK4_STEPS + 1, 2))
    traj[0] = y

    def f(y):
        return np.array([y[1], -(sys.g / sys.l) * np.sin(y[0])])

    for i in range(_RK4_STEPS):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        traj[i + 1] = y

    q_checks = np.interp(sys.check_times, times, traj[:, 0])
    qdot_checks = np.interp(sys.check_times, times, traj[:, 1])
    return FreeFallTrajectory(times=times, q=traj[:, 0], qdot=traj[:, 1],
                              check_times=sys.check_times.copy(),
                              q_checks=q_checks, qdot_checks=qdot_checks)


def fit_free_fall(sys: PendulumSystem, q0: float, qdot0: float) -> Optional[np.ndarray]:
    """Least-squares fit of the velocity basis to a free-fall trajectory.

    The initial angle is taken exactly; the Bernstein control values are
    fit to the dense simulated velocity.  Returns the parameter vector,
    or ``None`` when the fit residual pushes the torque outside the bound
    at any check time (the seed is rejected).
    """
    ff = simulate_free_fall(sys, q0, qdot0)
    taus = ff.times / sys.spec.T
    d = sys.spec.velocity_degree
    B = np.array([bernstein_row(d, tau) for tau in taus])
    coeffs, *_ = np.linalg.lstsq(B, ff.qdot, rcond=None)
    omega = np.concatenate([[q0], coeffs])
    _, excess = max_violation(sys, omega)
    if excess > 0.0:
        return None
    return omega
