"""Rigid-body attitude stabilization under event-triggered synergistic control.

Plant: unit-quaternion attitude kinematics plus Euler rotational dynamics.
Controller: a two-member family of energy functions indexed by a logic
value q in {0, 1}; the feedback torque tracks the member selected by q,
and a supervisory switch flips q whenever the synergy gap (the excess of
the active member over the best member) reaches ``delta``. Transmissions
of the torque to the actuator happen over a channel with zero-order hold,
gated by one of several event triggers.

Triggers:

* ``proposed``  -- decrease-degradation margin combined (sign-preservingly)
  with the speed dead band ``|omega| - c``; transmissions are impossible at
  rest, which is what yields a positive gap between transmissions.
* ``gamma1-only`` -- the bare decrease-degradation margin.
* ``lyapunov-zhu`` -- the margin combined with the energy dead band
  ``V1 - c`` instead of the speed dead band.
* ``fixed-threshold`` -- a hold-error threshold trigger.
* ``dynamic`` -- a reservoir variable drained along flows and refilled at
  transmissions.
* ``dynamic-surrogate`` -- a count-up timer whose transmissions are also
  gated by the decrease margin; its executions can jam (dead-end) when the
  gate is closed at timer expiry.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import yaml

from .hybrid import Family, otimes
from .solver import JumpFamilyDef, SolverConfig, SystemDefinition

__all__ = [
    "PlantState",
    "ClosedLoopState",
    "SynergisticParams",
    "ProposedTrigger",
    "Gamma1Trigger",
    "LyapunovZhuTrigger",
    "FixedThresholdTrigger",
    "DynamicTrigger",
    "SurrogateTimerTrigger",
    "Trigger",
    "ConfigError",
    "InvalidStateError",
    "skew",
    "quat_rate",
    "f_p",
    "phi",
    "V0",
    "mu",
    "Gs",
    "kappa_s",
    "gamma1",
    "gamma",
    "c_prime",
    "in_attractor",
    "n_ell",
    "assemble_closed_loop",
    "continuous_feedback_system",
    "pack_state",
    "unpack_state",
    "load_config",
]


class ConfigError(ValueError):
    """Invalid or inconsistent configuration input."""


class InvalidStateError(ValueError):
    """A state violates its structural invariants (e.g. non-unit quaternion)."""


_QUAT_TOL = 1e-6


# ---------------------------------------------------------------------------
# States and parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlantState:
    """Attitude quaternion (scalar part ``n``, vector part ``e``) and body rate."""

    quat: np.ndarray   # (4,) unit quaternion [n, e1, e2, e3]
    omega: np.ndarray  # (3,) rad/s

    def __post_init__(self) -> None:
        q = np.asarray(self.quat, dtype=float)
        w = np.asarray(self.omega, dtype=float)
        if q.shape != (4,) or w.shape != (3,):
            raise InvalidStateError("quat must be length 4 and omega length 3")
        if abs(np.linalg.norm(q) - 1.0) > _QUAT_TOL:
            raise InvalidStateError(f"quaternion norm {np.linalg.norm(q)} is not 1")
        object.__setattr__(self, "quat", q)
        object.__setattr__(self, "omega", w)

    @property
    def n(self) -> float:
        return float(self.quat[0])

    @property
    def e(self) -> np.ndarray:
        return self.quat[1:]


@dataclass(frozen=True)
class ClosedLoopState:
    """Full closed-loop state: plant, logic value, held input, trigger memory."""

    plant: PlantState
    q: int
    u_hat: np.ndarray             # (3,) held torque, N*m
    ell: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        if self.q not in (0, 1):
            raise InvalidStateError(f"logic value must be 0 or 1, got {self.q}")
        object.__setattr__(self, "u_hat", np.asarray(self.u_hat, dtype=float))
        object.__setattr__(self, "ell", np.asarray(self.ell, dtype=float).reshape(-1))


@dataclass(frozen=True)
class SynergisticParams:
    """Gains, synergy threshold, and inertia of the attitude design."""

    k1: float = 1.0
    k2: float = 2.0
    delta: float = 2.0
    inertia: np.ndarray = field(default_factory=lambda: np.diag([1.0, 2.0, 3.0]))

    def __post_init__(self) -> None:
        J = np.asarray(self.inertia, dtype=float)
        if J.shape == (3,):
            J = np.diag(J)
        if J.shape != (3, 3) or not np.allclose(J, J.T, atol=1e-12):
            raise ConfigError("inertia must be a symmetric 3x3 matrix or 3 diagonal entries")
        eigvals = np.linalg.eigvalsh(J)
        if eigvals[0] <= 0.0:
            raise ConfigError("inertia must be positive definite")
        if not self.k1 > 0 or not self.k2 > 0:
            raise ConfigError("gains k1, k2 must be positive")
        if not (0.0 < self.delta < 4.0 * self.k1):
            raise ConfigError(f"delta must lie in (0, {4.0 * self.k1}), got {self.delta}")
        object.__setattr__(self, "inertia", J)
        object.__setattr__(self, "inertia_inv", np.linalg.inv(J))
        object.__setattr__(self, "lambda_max", float(eigvals[-1]))

    inertia_inv: np.ndarray = field(init=False, repr=False)
    lambda_max: float = field(init=False, repr=False)


def _warn_if_c_out_of_range(c: float, params: SynergisticParams | None) -> None:
    if params is None:
        return
    bound = (4.0 * params.k1 - params.delta) ** 0.5 * params.lambda_max ** -0.5
    if not (0.0 < c < bound):
        warnings.warn(
            f"dead-band radius c={c} is outside (0, {bound:.6g}); the attitude "
            "guarantee degenerates (the guaranteed set covers every orientation)",
            stacklevel=3,
        )


@dataclass(frozen=True)
class ProposedTrigger:
    kind = "proposed"
    sigma: float = 0.5
    c: float = 0.3

    def validate(self, params: SynergisticParams) -> None:
        if not (0.0 < self.sigma < 1.0):
            raise ConfigError("sigma must lie in (0, 1)")
        if not self.c > 0:
            raise ConfigError("c must be positive")
        _warn_if_c_out_of_range(self.c, params)


@dataclass(frozen=True)
class Gamma1Trigger:
    kind = "gamma1-only"
    sigma: float = 0.5

    def validate(self, params: SynergisticParams) -> None:
        if not (0.0 < self.sigma < 1.0):
            raise ConfigError("sigma must lie in (0, 1)")


@dataclass(frozen=True)
class LyapunovZhuTrigger:
    kind = "lyapunov-zhu"
    sigma: float = 0.5
    c: float = 0.3

    def validate(self, params: SynergisticParams) -> None:
        if not (0.0 < self.sigma < 1.0):
            raise ConfigError("sigma must lie in (0, 1)")
        if not self.c > 0:
            raise ConfigError("c must be positive")


@dataclass(frozen=True)
class FixedThresholdTrigger:
    kind = "fixed-threshold"
    rho_bar: float = 0.1
    rho_power: float = 1.0  # class-K-infinity gain rho(s) = s**rho_power

    def validate(self, params: SynergisticParams) -> None:
        if not self.rho_bar > 0:
            raise ConfigError("rho_bar must be positive")
        if not self.rho_power >= 1.0:
            raise ConfigError("rho_power must be >= 1")


@dataclass(frozen=True)
class DynamicTrigger:
    """Reservoir trigger: flow while ell >= ell_bar, transmit when it drains to ell_bar.

    Defaults are a well-posed configuration: the reservoir starts full,
    drains at unit rate and is refilled above the threshold at every
    transmission, so consecutive transmissions are at least ``ell_bar``
    apart by construction.
    """

    kind = "dynamic"
    ell_bar: float = 0.05
    drain_rate: float = 1.0     # d(ell)/dt = -drain_rate along flows
    refill: float = 0.1         # ell+ at transmissions; must exceed ell_bar
    ell0: float = 0.1

    def validate(self, params: SynergisticParams) -> None:
        if not self.ell_bar > 0:
            raise ConfigError("ell_bar must be positive")
        if not self.refill > self.ell_bar:
            raise ConfigError("refill must exceed ell_bar (else transmissions accumulate)")
        if not self.ell0 >= self.ell_bar:
            raise ConfigError("ell0 must start at or above ell_bar")


@dataclass(frozen=True)
class SurrogateTimerTrigger:
    """Count-up timer gated by the decrease margin.

    The timer grows at unit rate inside the flow set ``ell <= ell_bar`` and
    resets to zero at transmissions, but a transmission also requires the
    decrease margin to be nonnegative. When the margin is negative at timer
    expiry the execution can neither flow nor jump and dead-ends.
    """

    kind = "dynamic-surrogate"
    ell_bar: float = 0.05
    sigma: float = 0.5
    enable_margin: float = 0.0  # transmission needs gamma1 >= enable_margin

    def validate(self, params: SynergisticParams) -> None:
        if not self.ell_bar > 0:
            raise ConfigError("ell_bar must be positive")
        if not (0.0 < self.sigma < 1.0):
            raise ConfigError("sigma must lie in (0, 1)")


Trigger = (
    ProposedTrigger
    | Gamma1Trigger
    | LyapunovZhuTrigger
    | FixedThresholdTrigger
    | DynamicTrigger
    | SurrogateTimerTrigger
)


def n_ell(trigger: Trigger) -> int:
    """Dimension of the trigger-memory component."""
    return 1 if isinstance(trigger, (DynamicTrigger, SurrogateTimerTrigger)) else 0


# ---------------------------------------------------------------------------
# Plant and controller maps
# ---------------------------------------------------------------------------


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(v) @ w == cross(v, w)."""
    v1, v2, v3 = float(v[0]), float(v[1]), float(v[2])
    return np.array([[0.0, -v3, v2], [v3, 0.0, -v1], [-v2, v1, 0.0]])


def quat_rate(quat: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Unit-quaternion kinematics: qdot = 0.5 * [[-e^T], [n I + skew(e)]] @ omega."""
    n, e1, e2, e3 = (float(quat[0]), float(quat[1]), float(quat[2]), float(quat[3]))
    w1, w2, w3 = float(omega[0]), float(omega[1]), float(omega[2])
    return 0.5 * np.array(
        [
            -(e1 * w1 + e2 * w2 + e3 * w3),
            n * w1 + e2 * w3 - e3 * w2,
            n * w2 + e3 * w1 - e1 * w3,
            n * w3 + e1 * w2 - e2 * w1,
        ]
    )


def f_p(x: PlantState, u: np.ndarray, params: SynergisticParams) -> tuple[np.ndarray, np.ndarray]:
    """Plant derivative: quaternion kinematics and Euler rotational dynamics.

    Returns ``(quat_dot, omega_dot)`` with
    ``omega_dot = J^-1 (cross(J omega, omega) + u)``.
    """
    if abs(np.linalg.norm(x.quat) - 1.0) > _QUAT_TOL:
        raise InvalidStateError("plant quaternion drifted off the unit sphere")
    J = params.inertia
    Jw = J @ x.omega
    omega_dot = params.inertia_inv @ (np.cross(Jw, x.omega) + np.asarray(u, dtype=float))
    return quat_rate(x.quat, x.omega), omega_dot


def phi(q: int) -> float:
    """Sign selector of the two-member design: phi(0) = -1, phi(1) = +1."""
    return 2.0 * q - 1.0


def V0(x: PlantState, q: int, params: SynergisticParams) -> float:
    """Energy of member q: attitude-alignment term plus rotational kinetic energy.

    Zero exactly at the member's target (n = phi(q), omega = 0).
    """
    align = 2.0 * params.k1 * (1.0 - phi(q) * x.n)
    kinetic = 0.5 * float(x.omega @ (params.inertia @ x.omega))
    return align + kinetic


def mu(x: PlantState, q: int, params: SynergisticParams) -> float:
    """Synergy gap: excess of the active member's energy over the best member's."""
    return V0(x, q, params) - min(V0(x, 0, params), V0(x, 1, params))


def Gs(x: PlantState, params: SynergisticParams) -> list[int]:
    """Energy-minimizing logic values, smallest first (both on an exact tie)."""
    v0 = V0(x, 0, params)
    v1 = V0(x, 1, params)
    if v0 < v1:
        return [0]
    if v1 < v0:
        return [1]
    return [0, 1]


def kappa_s(x: PlantState, q: int, params: SynergisticParams) -> np.ndarray:
    """Feedback torque of member q: -k1*phi(q)*e - k2*omega."""
    return -params.k1 * phi(q) * x.e - params.k2 * x.omega


def gamma1(xi: ClosedLoopState, sigma: float, params: SynergisticParams) -> float:
    """Decrease-degradation margin of the held input.

    Analytic form ``k1*phi(q)*e.omega + omega.u_hat + sigma*k2*|omega|^2``:
    the energy rate under the held input minus sigma times the rate under
    fresh feedback (the gyroscopic term is orthogonal to omega and drops).
    Nonnegative means the held input no longer achieves the required
    fraction of the fresh-feedback decrease.
    """
    x = xi.plant
    w = x.omega
    return float(
        params.k1 * phi(xi.q) * (x.e @ w)
        + w @ xi.u_hat
        + sigma * params.k2 * (w @ w)
    )


def gamma(xi: ClosedLoopState, trigger: Trigger, params: SynergisticParams) -> float:
    """Trigger margin: the closed loop transmits where gamma >= 0 and flows where <= 0."""
    if isinstance(trigger, ProposedTrigger):
        g1 = gamma1(xi, trigger.sigma, params)
        g2 = float(np.linalg.norm(xi.plant.omega)) - trigger.c
        return otimes(g1, g2)
    if isinstance(trigger, Gamma1Trigger):
        return gamma1(xi, trigger.sigma, params)
    if isinstance(trigger, LyapunovZhuTrigger):
        g1 = gamma1(xi, trigger.sigma, params)
        g2 = V0(xi.plant, xi.q, params) - trigger.c
        return otimes(g1, g2)
    if isinstance(trigger, FixedThresholdTrigger):
        err = float(np.linalg.norm(xi.u_hat - kappa_s(xi.plant, xi.q, params)))
        return err**trigger.rho_power - trigger.rho_bar
    if isinstance(trigger, DynamicTrigger):
        if xi.ell.size != 1:
            raise ConfigError("dynamic trigger requires a one-dimensional trigger memory")
        return trigger.ell_bar - float(xi.ell[0])
    if isinstance(trigger, SurrogateTimerTrigger):
        if xi.ell.size != 1:
            raise ConfigError("dynamic trigger requires a one-dimensional trigger memory")
        g_timer = float(xi.ell[0]) - trigger.ell_bar
        g_enable = gamma1(xi, trigger.sigma, params) - trigger.enable_margin
        return min(g_timer, g_enable)
    raise ConfigError(f"unknown trigger {trigger!r}")


def c_prime(params: SynergisticParams, c: float) -> float:
    """Level of the guaranteed attractor: 2*k1 + delta/2 + lambda_max(J)*c^2/2."""
    return 2.0 * params.k1 + 0.5 * params.delta + 0.5 * params.lambda_max * c * c


def in_attractor(xi: ClosedLoopState, c_prime_level: float, params: SynergisticParams) -> bool:
    """Membership of the guaranteed set: active-member energy at most c'."""
    return V0(xi.plant, xi.q, params) <= c_prime_level


# ---------------------------------------------------------------------------
# Flat-vector closed loop for the solver
# ---------------------------------------------------------------------------
#
# State layout: [n, e1, e2, e3, w1, w2, w3, q, u1, u2, u3, (ell)].

_IDX_Q = 7
_IDX_U = slice(8, 11)


def pack_state(xi: ClosedLoopState) -> np.ndarray:
    return np.concatenate(
        [xi.plant.quat, xi.plant.omega, [float(xi.q)], xi.u_hat, xi.ell]
    )


def unpack_state(vec: np.ndarray) -> ClosedLoopState:
    vec = np.asarray(vec, dtype=float)
    plant = PlantState(quat=vec[0:4].copy(), omega=vec[4:7].copy())
    return ClosedLoopState(
        plant=plant,
        q=int(round(vec[_IDX_Q])),
        u_hat=vec[_IDX_U].copy(),
        ell=vec[11:].copy(),
    )


def _renormalize(vec: np.ndarray) -> np.ndarray:
    # In-place: the solver only hands freshly produced states to project.
    norm = math.sqrt(vec[0] ** 2 + vec[1] ** 2 + vec[2] ** 2 + vec[3] ** 2)
    vec[0:4] /= norm
    return vec


def assemble_closed_loop(
    params: SynergisticParams,
    trigger: Trigger,
    renormalize: bool = True,
) -> SystemDefinition:
    """Build the event-triggered closed loop as a solver system.

    Flow: plant under the held torque, frozen logic value, trigger-memory
    drift. Flow set: trigger margin <= 0 and synergy gap <= delta.
    Jump family T (transmission): enabled where the trigger margin >= 0;
    refreshes the held torque (and the trigger memory). Jump family S
    (switch): enabled where the synergy gap >= delta; moves the logic
    value to an energy-minimizing one, smallest first on ties.
    """
    trigger.validate(params)
    dim = 11 + n_ell(trigger)
    k1, k2, delta = params.k1, params.k2, params.delta
    # Inertia entries as plain floats keep the hot path allocation-light.
    J = params.inertia
    Ji = params.inertia_inv
    (j00, j01, j02), (j10, j11, j12), (j20, j21, j22) = J.tolist()
    (i00, i01, i02), (i10, i11, i12), (i20, i21, i22) = Ji.tolist()

    is_dynamic = isinstance(trigger, (DynamicTrigger, SurrogateTimerTrigger))
    if isinstance(trigger, DynamicTrigger):
        ell_rate = -trigger.drain_rate
    elif isinstance(trigger, SurrogateTimerTrigger):
        ell_rate = 1.0
    else:
        ell_rate = 0.0

    def flow_map(s: np.ndarray) -> np.ndarray:
        v = s.tolist()
        n, e1, e2, e3, w1, w2, w3 = v[0], v[1], v[2], v[3], v[4], v[5], v[6]
        u1, u2, u3 = v[8], v[9], v[10]
        # J @ w
        a1 = j00 * w1 + j01 * w2 + j02 * w3
        a2 = j10 * w1 + j11 * w2 + j12 * w3
        a3 = j20 * w1 + j21 * w2 + j22 * w3
        # cross(J w, w) + u
        b1 = a2 * w3 - a3 * w2 + u1
        b2 = a3 * w1 - a1 * w3 + u2
        b3 = a1 * w2 - a2 * w1 + u3
        out = [
            -0.5 * (e1 * w1 + e2 * w2 + e3 * w3),
            0.5 * (n * w1 + e2 * w3 - e3 * w2),
            0.5 * (n * w2 + e3 * w1 - e1 * w3),
            0.5 * (n * w3 + e1 * w2 - e2 * w1),
            i00 * b1 + i01 * b2 + i02 * b3,
            i10 * b1 + i11 * b2 + i12 * b3,
            i20 * b1 + i21 * b2 + i22 * b3,
            0.0,
            0.0,
            0.0,
            0.0,
        ]
        if is_dynamic:
            out.append(ell_rate)
        return np.array(out)

    def gamma1_fast(v: list[float]) -> float:
        n, e1, e2, e3, w1, w2, w3 = v[0], v[1], v[2], v[3], v[4], v[5], v[6]
        u1, u2, u3 = v[8], v[9], v[10]
        ph = 2.0 * v[_IDX_Q] - 1.0
        w_sq = w1 * w1 + w2 * w2 + w3 * w3
        sigma = getattr(trigger, "sigma", 0.5)
        return (
            k1 * ph * (e1 * w1 + e2 * w2 + e3 * w3)
            + (w1 * u1 + w2 * u2 + w3 * u3)
            + sigma * k2 * w_sq
        )

    def mu_minus_delta(s: np.ndarray) -> float:
        v = s.tolist()
        ph = 2.0 * v[_IDX_Q] - 1.0
        n = v[0]
        return 2.0 * k1 * (abs(n) - ph * n) - delta

    if isinstance(trigger, ProposedTrigger):
        c = trigger.c

        def trigger_guard(s: np.ndarray) -> float:
            v = s.tolist()
            g1 = gamma1_fast(v)
            g2 = math.sqrt(v[4] ** 2 + v[5] ** 2 + v[6] ** 2) - c
            if g1 < 0.0 and g2 < 0.0:
                return -g1 * g2
            if g1 > 0.0 or g2 > 0.0:
                return g1 * g2
            return min(g1, g2)

    elif isinstance(trigger, Gamma1Trigger):

        def trigger_guard(s: np.ndarray) -> float:
            return gamma1_fast(s.tolist())

    elif isinstance(trigger, LyapunovZhuTrigger):
        c = trigger.c

        def trigger_guard(s: np.ndarray) -> float:
            v = s.tolist()
            g1 = gamma1_fast(v)
            n, w1, w2, w3 = v[0], v[4], v[5], v[6]
            ph = 2.0 * v[_IDX_Q] - 1.0
            a1 = j00 * w1 + j01 * w2 + j02 * w3
            a2 = j10 * w1 + j11 * w2 + j12 * w3
            a3 = j20 * w1 + j21 * w2 + j22 * w3
            v1 = 2.0 * k1 * (1.0 - ph * n) + 0.5 * (w1 * a1 + w2 * a2 + w3 * a3)
            g2 = v1 - c
            if g1 < 0.0 and g2 < 0.0:
                return -g1 * g2
            if g1 > 0.0 or g2 > 0.0:
                return g1 * g2
            return min(g1, g2)

    elif isinstance(trigger, FixedThresholdTrigger):
        rho_bar, rho_power = trigger.rho_bar, trigger.rho_power

        def trigger_guard(s: np.ndarray) -> float:
            v = s.tolist()
            ph = 2.0 * v[_IDX_Q] - 1.0
            d1 = v[8] + k1 * ph * v[1] + k2 * v[4]
            d2 = v[9] + k1 * ph * v[2] + k2 * v[5]
            d3 = v[10] + k1 * ph * v[3] + k2 * v[6]
            err = math.sqrt(d1 * d1 + d2 * d2 + d3 * d3)
            return err**rho_power - rho_bar

    elif isinstance(trigger, DynamicTrigger):
        ell_bar = trigger.ell_bar

        def trigger_guard(s: np.ndarray) -> float:
            return ell_bar - s[11]

    elif isinstance(trigger, SurrogateTimerTrigger):
        ell_bar = trigger.ell_bar
        margin = trigger.enable_margin

        def trigger_guard(s: np.ndarray) -> float:
            v = s.tolist()
            return min(v[11] - ell_bar, gamma1_fast(v) - margin)

    else:
        raise ConfigError(f"unknown trigger {trigger!r}")

    def transmission_map(s: np.ndarray) -> list[np.ndarray]:
        out = s.copy()
        v = s.tolist()
        ph = 2.0 * v[_IDX_Q] - 1.0
        out[8] = -k1 * ph * v[1] - k2 * v[4]
        out[9] = -k1 * ph * v[2] - k2 * v[5]
        out[10] = -k1 * ph * v[3] - k2 * v[6]
        if isinstance(trigger, DynamicTrigger):
            out[11] = trigger.refill
        elif isinstance(trigger, SurrogateTimerTrigger):
            out[11] = 0.0
        return [out]

    def switch_map(s: np.ndarray) -> list[np.ndarray]:
        n = float(s[0])
        if n > 0.0:
            targets = [1]
        elif n < 0.0:
            targets = [0]
        else:
            targets = [0, 1]
        outs = []
        for q_new in targets:
            out = s.copy()
            out[_IDX_Q] = float(q_new)
            outs.append(out)
        return outs

    if isinstance(trigger, SurrogateTimerTrigger):
        ell_bar = trigger.ell_bar

        def timer_flow_guard(s: np.ndarray) -> float:
            return float(s[11]) - ell_bar

        flow_guards = (timer_flow_guard, mu_minus_delta)
    else:
        flow_guards = (trigger_guard, mu_minus_delta)

    return SystemDefinition(
        dimension=dim,
        flow_map=flow_map,
        flow_guards=flow_guards,
        transmission=JumpFamilyDef(Family.TRANSMISSION, trigger_guard, transmission_map),
        synergistic=JumpFamilyDef(Family.SYNERGISTIC, mu_minus_delta, switch_map),
        project=_renormalize if renormalize else None,
    )


def continuous_feedback_system(
    params: SynergisticParams, renormalize: bool = True
) -> SystemDefinition:
    """Closed loop with the feedback applied continuously (no hold, no trigger).

    Only the switch family remains; the held-input slots track the live
    feedback value for layout compatibility.
    """
    etc = assemble_closed_loop(params, ProposedTrigger(), renormalize=renormalize)
    k1, k2 = params.k1, params.k2

    def flow_map(s: np.ndarray) -> np.ndarray:
        live = s.copy()
        v = s.tolist()
        ph = 2.0 * v[_IDX_Q] - 1.0
        live[8] = -k1 * ph * v[1] - k2 * v[4]
        live[9] = -k1 * ph * v[2] - k2 * v[5]
        live[10] = -k1 * ph * v[3] - k2 * v[6]
        return etc.flow_map(live)

    def never(_s: np.ndarray) -> float:
        return -1.0

    def identity_map(s: np.ndarray) -> list[np.ndarray]:
        return [s.copy()]

    return SystemDefinition(
        dimension=11,
        flow_map=flow_map,
        flow_guards=(etc.flow_guards[1],),
        transmission=JumpFamilyDef(Family.TRANSMISSION, never, identity_map),
        synergistic=etc.synergistic,
        project=_renormalize if renormalize else None,
    )


# ---------------------------------------------------------------------------
# Parameter files
# ---------------------------------------------------------------------------

_TRIGGER_KINDS: dict[str, type] = {
    "proposed": ProposedTrigger,
    "gamma1-only": Gamma1Trigger,
    "lyapunov-zhu": LyapunovZhuTrigger,
    "fixed-threshold": FixedThresholdTrigger,
    "dynamic": DynamicTrigger,
    "dynamic-surrogate": SurrogateTimerTrigger,
}


def _build_trigger(kind: str, fields: dict, sigma: float, c: float) -> Trigger:
    cls = _TRIGGER_KINDS.get(kind)
    if cls is None:
        raise ConfigError(f"unknown trigger kind {kind!r}; expected one of {sorted(_TRIGGER_KINDS)}")
    kwargs = dict(fields)
    if cls in (ProposedTrigger, Gamma1Trigger, LyapunovZhuTrigger):
        kwargs.setdefault("sigma", sigma)
    if cls in (ProposedTrigger, LyapunovZhuTrigger):
        kwargs.setdefault("c", c)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad fields for trigger {kind!r}: {exc}") from exc


def load_config(path: str | Path) -> dict:
    """Parse a parameter file into params, trigger(s), and solver config.

    Top-level keys: ``inertia`` (3 diagonal entries or a full symmetric
    matrix), ``k1``, ``k2``, ``delta``, ``sigma``, ``c``, ``trigger``
    (with ``kind`` and kind-specific fields) or ``triggers`` (a list),
    and a ``solver`` block (``dt_max``, ``horizon``, ``policy``,
    ``seed``). An optional ``experiment`` block is passed through.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")

    try:
        params = SynergisticParams(
            k1=float(raw.get("k1", 1.0)),
            k2=float(raw.get("k2", 2.0)),
            delta=float(raw.get("delta", 2.0)),
            inertia=np.asarray(raw.get("inertia", [1.0, 2.0, 3.0]), dtype=float),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameter block: {exc}") from exc

    sigma = float(raw.get("sigma", 0.5))
    c = float(raw.get("c", 0.3))

    trigger_specs = raw.get("triggers")
    if trigger_specs is None:
        trigger_specs = [raw.get("trigger", {"kind": "proposed"})]
    triggers = []
    for spec in trigger_specs:
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigError("each trigger needs a 'kind' field")
        fields = {k: v for k, v in spec.items() if k != "kind"}
        trig = _build_trigger(spec["kind"], fields, sigma, c)
        trig.validate(params)
        triggers.append(trig)

    solver_raw = raw.get("solver", {})
    if not isinstance(solver_raw, dict):
        raise ConfigError("'solver' must be a mapping")
    try:
        solver = SolverConfig(
            dt_max=float(solver_raw.get("dt_max", 1e-3)),
            t_horizon=float(solver_raw.get("horizon", 60.0)),
            jump_policy=str(solver_raw.get("policy", "switch-first")),
            policy_seed=int(solver_raw.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"bad solver block: {exc}") from exc

    return {
        "params": params,
        "sigma": sigma,
        "c": c,
        "triggers": triggers,
        "solver": solver,
        "experiment": raw.get("experiment", {}),
    }
