"""Fractal impedance controller core.

Per-DoF nonlinear spring with a hard force/torque ceiling, plus the
divergence/convergence phase machine that makes the controller passive:
while the pose error grows the spring follows a stiffening exponential
profile that saturates at ``f_max``; once the error turns around, the
cycle's stored energy is released through a constant-stiffness spring
anchored at the mid-point of the return, so the plant arrives at the
set-point with zero residual velocity and the controller never injects
more energy than it absorbed.

Everything here is written as pure functions over small value objects;
callers thread the controller state explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

# Guard band for phase-machine comparisons (double precision headroom).
EPS_NUM = 1e-9

# Relative retreat from the cycle peak required before a turn is honored.
# Without it, fixed-step integration chatters between the branches at
# static-load equilibria (the two branch forces differ at the peak) and
# the chatter biases the settled error off the divergence balance point.
CONV_HYSTERESIS = 1e-3

# Minimum approach rate for a turn, as a fraction of x_b per second.
# Genuine release cycles return at ~sqrt(K/M)*x_b, orders of magnitude
# above this floor; sub-floor creep stays on the divergence branch so
# loaded equilibria settle exactly at the static balance point.
CONV_RATE_FLOOR = 0.05

DIVERGENCE = 0
CONVERGENCE = 1


class ProfileError(ValueError):
    """Raised for stiffness-profile parameter sets with no valid shape factor."""


def compute_beta(k_zeta: float, f_max: float, x_b: float) -> float:
    """Exponential shape factor making the spring force continuous at ``x_b``.

    Solves exp(beta * x_b^2) = f_max / x_b - k_zeta, so the stiffening
    branch meets the saturation branch exactly at the saturation error.
    Requires f_max / x_b - k_zeta > 1 so beta is real and positive.
    """
    if f_max <= 0.0:
        raise ProfileError(f"f_max must be positive, got {f_max}")
    if x_b <= 0.0:
        raise ProfileError(f"x_b must be positive, got {x_b}")
    if k_zeta < 0.0:
        raise ProfileError(f"k_zeta must be non-negative, got {k_zeta}")
    arg = f_max / x_b - k_zeta
    if arg <= 1.0:
        raise ProfileError(
            "invalid stiffness profile: f_max/x_b - k_zeta = "
            f"{arg:.6g} must exceed 1 (k_zeta={k_zeta}, f_max={f_max}, x_b={x_b})"
        )
    return math.log(arg) / (x_b * x_b)


@dataclass(frozen=True)
class StiffnessProfile:
    """Parameters of the per-DoF nonlinear spring.

    k_zeta: constant stiffness floor (N/m or N*m/rad)
    f_max:  force/torque ceiling (N or N*m)
    x_b:    error at which the force saturates (m or rad)
    beta:   exponential shape factor, derived from the other three
    """

    k_zeta: float
    f_max: float
    x_b: float
    beta: float = field(default=0.0)

    @classmethod
    def from_limits(cls, k_zeta: float, f_max: float, x_b: float) -> "StiffnessProfile":
        beta = compute_beta(k_zeta, f_max, x_b)
        return cls(k_zeta=float(k_zeta), f_max=float(f_max), x_b=float(x_b), beta=beta)


def k_divergence(x: float, profile: StiffnessProfile) -> float:
    """Divergence-branch stiffness at error ``x``.

    Inside the saturation error this is k_zeta + exp(beta x^2); beyond it
    the stiffness decays as f_max/|x| so the spring force stays pinned at
    the ceiling.
    """
    ax = abs(x)
    if ax > profile.x_b:
        return profile.f_max / ax
    return profile.k_zeta + math.exp(profile.beta * x * x)


def divergence_force(x: float, profile: StiffnessProfile) -> float:
    """Spring force k_div(x) * x, with exact saturation at +/- f_max."""
    ax = abs(x)
    if ax >= profile.x_b:
        return math.copysign(profile.f_max, x)
    return (profile.k_zeta + math.exp(profile.beta * x * x)) * x


def divergence_energy(x: float, profile: StiffnessProfile) -> float:
    """Potential stored by the divergence spring from 0 out to error ``x``.

    Closed form of the force integral: quadratic floor term plus
    (exp(beta x^2) - 1)/(2 beta) inside x_b, then a flat f_max ramp beyond.
    """
    ax = abs(x)
    b = profile.beta
    if ax <= profile.x_b:
        return 0.5 * profile.k_zeta * ax * ax + math.expm1(b * ax * ax) / (2.0 * b)
    e_b = 0.5 * profile.k_zeta * profile.x_b ** 2 + math.expm1(b * profile.x_b ** 2) / (2.0 * b)
    return e_b + profile.f_max * (ax - profile.x_b)


def k_convergence(x_max: float, profile: StiffnessProfile) -> float:
    """Constant return stiffness: four times the stored energy over x_max^2."""
    if x_max <= 0.0:
        raise ValueError(f"degenerate cycle: x_max must be positive, got {x_max}")
    return 4.0 * divergence_energy(x_max, profile) / (x_max * x_max)


def static_balance_error(force: float, profile: StiffnessProfile) -> float | None:
    """Error at which the divergence spring balances a constant load.

    Returns None when the load meets or exceeds the force ceiling (no
    equilibrium exists); otherwise the unique root in [0, x_b].
    """
    f = abs(force)
    if f >= profile.f_max:
        return None
    if f == 0.0:
        return 0.0
    return float(brentq(lambda x: divergence_force(x, profile) - f, 0.0, profile.x_b, xtol=1e-14))


@dataclass
class FicState:
    """Phase machine for one controller instance (arrays over DoF).

    phase:      DIVERGENCE or CONVERGENCE per DoF
    x_peak:     signed extreme error of the running divergence cycle
    x_max:      |x_peak| frozen when the cycle turned (0 while diverging)
    k_conv:     return stiffness frozen at the turn
    attractor:  mid-point of the return, x_peak/2, frozen at the turn
    x_prev:     previous-step error, for zero-crossing detection
    """

    phase: np.ndarray
    x_peak: np.ndarray
    x_max: np.ndarray
    k_conv: np.ndarray
    attractor: np.ndarray
    x_prev: np.ndarray

    @classmethod
    def initial(cls, n_dof: int = 6) -> "FicState":
        return cls(
            phase=np.zeros(n_dof, dtype=np.int8),
            x_peak=np.zeros(n_dof),
            x_max=np.zeros(n_dof),
            k_conv=np.zeros(n_dof),
            attractor=np.zeros(n_dof),
            x_prev=np.zeros(n_dof),
        )

    def copy(self) -> "FicState":
        return FicState(
            phase=self.phase.copy(),
            x_peak=self.x_peak.copy(),
            x_max=self.x_max.copy(),
            k_conv=self.k_conv.copy(),
            attractor=self.attractor.copy(),
            x_prev=self.x_prev.copy(),
        )

    def reset_dof(self, idx: np.ndarray | list[int], x_now: np.ndarray) -> None:
        """Restart the cycle on the given DoFs (set-point moved: the old
        energy bookkeeping is void)."""
        self.phase[idx] = DIVERGENCE
        self.x_peak[idx] = x_now[idx]
        self.x_max[idx] = 0.0
        self.k_conv[idx] = 0.0
        self.attractor[idx] = 0.0
        self.x_prev[idx] = x_now[idx]


def _update_phase_dof(state: FicState, i: int, x: float, xdot: float,
                      profile: StiffnessProfile) -> None:
    """Advance one DoF of the phase machine.

    Divergence while x*xdot >= 0; a turn (x*xdot < 0) freezes the cycle's
    return spring. Convergence ends on a zero crossing or when the error
    starts growing again; either way a fresh divergence cycle starts.
    """
    if state.phase[i] == DIVERGENCE:
        if abs(x) > abs(state.x_peak[i]):
            state.x_peak[i] = x
        peak = abs(state.x_peak[i])
        if (x * xdot < -EPS_NUM and peak > EPS_NUM
                and abs(x) <= peak * (1.0 - CONV_HYSTERESIS)
                and abs(xdot) >= CONV_RATE_FLOOR * profile.x_b):
            state.phase[i] = CONVERGENCE
            state.x_max[i] = peak
            state.k_conv[i] = k_convergence(peak, profile)
            state.attractor[i] = 0.5 * state.x_peak[i]
    else:
        crossed = x * state.x_prev[i] < 0.0 and abs(state.x_prev[i]) > EPS_NUM
        growing = x * xdot >= 0.0
        if crossed or growing:
            state.phase[i] = DIVERGENCE
            state.x_peak[i] = x
            state.x_max[i] = 0.0
            state.k_conv[i] = 0.0
            state.attractor[i] = 0.0
    state.x_prev[i] = x


def spring_force(x: np.ndarray, state: FicState,
                 profiles: list[StiffnessProfile]) -> np.ndarray:
    """Per-DoF spring force for the current phase (no damping)."""
    out = np.empty(len(profiles))
    for i, prof in enumerate(profiles):
        if state.phase[i] == CONVERGENCE:
            out[i] = state.k_conv[i] * (x[i] - state.attractor[i])
        else:
            out[i] = divergence_force(x[i], prof)
    return out


def spring_potential(x: np.ndarray, state: FicState,
                     profiles: list[StiffnessProfile]) -> np.ndarray:
    """Potential of the active branch per DoF (energy observer input)."""
    out = np.empty(len(profiles))
    for i, prof in enumerate(profiles):
        if state.phase[i] == CONVERGENCE:
            d = x[i] - state.attractor[i]
            out[i] = 0.5 * state.k_conv[i] * d * d
        else:
            out[i] = divergence_energy(x[i], prof)
    return out


def fic_wrench(x_tilde: np.ndarray, x_tilde_dot: np.ndarray, x_dot: np.ndarray,
               state: FicState, profiles: list[StiffnessProfile],
               damping: np.ndarray) -> tuple[np.ndarray, FicState]:
    """One controller evaluation: phase update, spring force, damping.

    x_tilde:     pose error (desired - actual), angular part as rotation vector
    x_tilde_dot: error rate, used only by the phase machine
    x_dot:       plant task-space velocity, damped directly
    Returns the commanded wrench K(x)x - D*xdot and the updated state.
    """
    new_state = state.copy()
    for i, prof in enumerate(profiles):
        _update_phase_dof(new_state, i, float(x_tilde[i]), float(x_tilde_dot[i]), prof)
    wrench = spring_force(x_tilde, new_state, profiles) - damping * x_dot
    return wrench, new_state


class FicController:
    """Stateful convenience wrapper around the pure controller functions.

    Owns the set-point: whenever a desired-pose component moves, the
    affected DoFs restart in divergence with their cycle record cleared
    (stale energy bookkeeping would otherwise leak between set-points).
    Not safe to step from two threads at once.
    """

    def __init__(self, profiles: list[StiffnessProfile], damping: np.ndarray):
        if len(profiles) != len(damping):
            raise ValueError("profiles and damping must have equal length")
        self.profiles = list(profiles)
        self.damping = np.asarray(damping, dtype=float)
        self.state = FicState.initial(len(profiles))
        self._desired_vec: np.ndarray | None = None
        self._desired_vel = np.zeros(len(profiles))

    def set_desired(self, desired_vec: np.ndarray, desired_vel: np.ndarray | None = None,
                    x_tilde_now: np.ndarray | None = None) -> None:
        """Update the set-point (position + rotation-vector form).

        Resets the phase machine on every DoF whose target moved; the
        angular block resets together since the rotation vector couples
        its components.
        """
        desired_vec = np.asarray(desired_vec, dtype=float)
        if self._desired_vec is not None:
            delta = np.abs(desired_vec - self._desired_vec)
            moved = delta > EPS_NUM
            if np.any(moved[3:]):
                moved[3:] = True
            if np.any(moved):
                x_now = x_tilde_now if x_tilde_now is not None else self.state.x_prev
                self.state.reset_dof(np.where(moved)[0], np.asarray(x_now, dtype=float))
        self._desired_vec = desired_vec.copy()
        self._desired_vel = (np.zeros(len(self.profiles)) if desired_vel is None
                             else np.asarray(desired_vel, dtype=float))

    @property
    def desired_vel(self) -> np.ndarray:
        return self._desired_vel

    def wrench(self, x_tilde: np.ndarray, x_dot: np.ndarray) -> np.ndarray:
        x_tilde_dot = self._desired_vel - x_dot
        w, self.state = fic_wrench(x_tilde, x_tilde_dot, x_dot, self.state,
                                   self.profiles, self.damping)
        return w
