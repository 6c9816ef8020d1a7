"""Controller energy bookkeeping and the passivity audit.

The observer tracks, per task DoF, the work the spring injects into the
plant, the potential credited by set-point motion, and the divergence
potential of the current error. The audited claim: over any interval the
spring never injects more than the potential available at the interval
start plus the credits received since; and every convergence cycle
releases at most the energy stored while diverging. Either violation is
what an actively unstable (energy-pumping) controller would produce.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fic import CONVERGENCE, DIVERGENCE, FicState, StiffnessProfile, divergence_energy

# Discretization slack for the running-interval inequality (J). First-order
# work sums drift by O(dt) per transit; scenarios stay desk-scale (~1 J).
AUDIT_TOL = 0.05
CYCLE_TOL = 0.02


@dataclass
class EnergyObserver:
    """Per-arm audit state, updated once per simulation step."""

    profiles: list[StiffnessProfile]
    w_inject: np.ndarray = field(init=False)      # cumulative spring work on plant
    w_credit: np.ndarray = field(init=False)      # cumulative set-point recharge
    s: np.ndarray = field(init=False)             # w_inject - w_credit
    running_min: np.ndarray = field(init=False)   # min over past of (s + v_div)
    margin: np.ndarray = field(init=False)        # running_min - s (>= -tol)
    cycle_stored: np.ndarray = field(init=False)
    cycle_work: np.ndarray = field(init=False)
    cycle_excess: np.ndarray = field(init=False)        # worst release minus stored
    cycle_peak_release: np.ndarray = field(init=False)  # largest mid-cycle release
    w_damping: float = 0.0                        # cumulative damping dissipation
    _prev_phase: np.ndarray = field(init=False)

    def __post_init__(self):
        n = len(self.profiles)
        self.w_inject = np.zeros(n)
        self.w_credit = np.zeros(n)
        self.s = np.zeros(n)
        self.running_min = np.full(n, np.inf)
        self.margin = np.full(n, np.inf)
        self.cycle_stored = np.zeros(n)
        self.cycle_work = np.zeros(n)
        self.cycle_excess = np.zeros(n)  # floored at 0: no cycle means no violation
        self.cycle_peak_release = np.zeros(n)
        self._prev_phase = np.zeros(n, dtype=np.int8)

    def v_div(self, err: np.ndarray) -> np.ndarray:
        return np.array([divergence_energy(e, p) for e, p in zip(err, self.profiles)])

    def credit_setpoint_change(self, err_old: np.ndarray, err_new: np.ndarray) -> None:
        """A set-point move re-charges (or discharges) the spring at constant
        plant pose; credit that potential change to the operator."""
        self.w_credit += self.v_div(err_new) - self.v_div(err_old)

    def update(self, spring: np.ndarray, x_dot: np.ndarray, err: np.ndarray,
               state: FicState, damping: np.ndarray, dt: float) -> None:
        dw = spring * x_dot * dt
        self.w_inject += dw
        self.w_damping += float(np.sum(damping * x_dot * x_dot)) * dt
        self.s = self.w_inject - self.w_credit
        v = self.v_div(err)
        # interval inequality: s(t1) <= min_{t0<t1}(s(t0) + v(t0)) + tol
        self.running_min = np.minimum(self.running_min, self.s + v)
        self.margin = self.running_min - self.s
        # per-cycle release accounting
        for i in range(len(self.profiles)):
            if state.phase[i] == CONVERGENCE:
                if self._prev_phase[i] == DIVERGENCE:
                    self.cycle_stored[i] = divergence_energy(state.x_max[i],
                                                             self.profiles[i])
                    self.cycle_work[i] = 0.0
                self.cycle_work[i] += dw[i]
                self.cycle_peak_release[i] = max(self.cycle_peak_release[i],
                                                 self.cycle_work[i])
                self.cycle_excess[i] = max(self.cycle_excess[i],
                                           self.cycle_work[i] - self.cycle_stored[i])
        self._prev_phase = state.phase.copy()

    def passes(self, tol: float = AUDIT_TOL, cycle_tol: float = CYCLE_TOL) -> bool:
        return bool(np.all(self.margin >= -tol)
                    and np.all(self.cycle_excess <= cycle_tol))


@dataclass
class AuditReport:
    ok: bool
    worst_margin: float
    worst_cycle_excess: float
    damping_dissipated: float
    peak_mechanical_energy: float
    final_mechanical_energy: float
    energy_bounded: bool
    first_violation_t: float | None = None

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return (f"audit {status}: interval margin {self.worst_margin:+.3e} J, "
                f"cycle excess {self.worst_cycle_excess:+.3e} J, "
                f"damping dissipated {self.damping_dissipated:.3e} J, "
                f"peak mech energy {self.peak_mechanical_energy:.3e} J "
                f"({'bounded' if self.energy_bounded else 'GROWING'})")


def audit_trace(trace, arm_prefixes: list[str] | None = None,
                tol: float = AUDIT_TOL, cycle_tol: float = CYCLE_TOL) -> AuditReport:
    """Re-verify the logged audit columns of a finished run.

    Checks the per-step interval margins and cycle excesses recorded by
    the observers, plus boundedness of total mechanical energy (the last
    third of the run must not exceed the earlier peak).
    """
    prefixes = arm_prefixes or trace.arm_prefixes()
    worst_margin = np.inf
    worst_cycle = -np.inf
    first_violation = None
    t = trace.column("t")
    for pre in prefixes:
        for i in range(6):
            margin = trace.column(f"{pre}margin{i}")
            cyc = trace.column(f"{pre}cycexc{i}")
            worst_margin = min(worst_margin, float(np.min(margin)))
            worst_cycle = max(worst_cycle, float(np.max(cyc)))
            bad = np.where((margin < -tol) | (cyc > cycle_tol))[0]
            if bad.size and (first_violation is None or t[bad[0]] < first_violation):
                first_violation = float(t[bad[0]])
    # boundedness on kinetic energy: gravity potential changes are legitimate
    # work (lifting a payload), runaway oscillation is not. A run that ends
    # at rest is bounded regardless of mid-run events (releases, mass steps);
    # otherwise the late peak must not exceed the early one.
    e = trace.column("e_kin" if trace.has_column("e_kin") else "e_mech")
    n = len(e)
    dt = float(t[1] - t[0]) if n > 1 else 1.0
    quiet_end = float(np.max(e[-max(int(1.0 / dt), 1):])) <= 5e-3
    head_peak = float(np.max(e[: max(2 * n // 3, 1)]))
    tail_peak = float(np.max(e[2 * n // 3:])) if n >= 3 else head_peak
    scale = max(abs(head_peak), 1e-3)
    bounded = quiet_end or tail_peak <= head_peak + 0.05 * scale
    damping = float(trace.column("w_damp")[-1]) if "w_damp" in trace.columns else 0.0
    em = trace.column("e_mech")
    ok = worst_margin >= -tol and worst_cycle <= cycle_tol and bounded
    return AuditReport(
        ok=ok,
        worst_margin=worst_margin,
        worst_cycle_excess=worst_cycle,
        damping_dissipated=damping,
        peak_mechanical_energy=float(np.max(em)),
        final_mechanical_energy=float(em[-1]),
        energy_bounded=bounded,
        first_violation_t=first_violation,
    )
