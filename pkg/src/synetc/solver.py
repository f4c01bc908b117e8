"""Fixed-step hybrid integrator with guard localization.

Flows with classic RK4 while all flow guards are <= 0, localizes guard
crossings by bisection along the flow, resolves jumps among two families
under an explicit nondeterminism policy, and diagnoses termination. The
fixed step keeps runs bit-reproducible across platforms; accuracy near
events comes from the bisection, not from step adaptation.

State is a flat float vector. A system may install a ``project`` hook
(e.g. unit-quaternion renormalization) applied after every integration
substep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .hybrid import Family, HybridArc, HybridTimeDomain, JumpRecord

__all__ = [
    "JumpFamilyDef",
    "SystemDefinition",
    "SolverConfig",
    "TerminationKind",
    "TerminationReason",
    "SimulationResult",
    "BracketingError",
    "locate_crossing",
    "resolve_jump",
    "simulate",
]

_T_TOL = 1e-10  # bisection bracket width on the time axis, seconds


class BracketingError(ValueError):
    """No sign change inside the bracket handed to the crossing locator."""


@dataclass(frozen=True)
class JumpFamilyDef:
    """One jump family: membership guard (in-set iff >= 0) and finite-branching map.

    ``jump_map`` returns the admissible post-states in preference order;
    the solver applies the first, analytics may enumerate all.
    """

    family: Family
    guard: Callable[[np.ndarray], float]
    jump_map: Callable[[np.ndarray], Sequence[np.ndarray]]


@dataclass(frozen=True)
class SystemDefinition:
    """Flow map/guards plus two jump families.

    The state is in the flow set iff every flow guard is <= 0, and in jump
    set i iff that family's guard is >= 0.
    """

    dimension: int
    flow_map: Callable[[np.ndarray], np.ndarray]
    flow_guards: tuple[Callable[[np.ndarray], float], ...]
    transmission: JumpFamilyDef
    synergistic: JumpFamilyDef
    project: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def jump_families(self) -> tuple[JumpFamilyDef, JumpFamilyDef]:
        return (self.transmission, self.synergistic)


@dataclass(frozen=True)
class SolverConfig:
    dt_max: float = 1e-3
    guard_tol: float = 1e-9
    t_horizon: float = 60.0
    j_max: int = 1_000_000
    max_jumps_per_instant: int = 50
    jump_policy: str = "switch-first"  # switch-first | transmission-first | random
    policy_seed: int = 0
    eager_jump: bool = True

    def __post_init__(self) -> None:
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if not self.guard_tol > 0:
            raise ValueError("guard_tol must be positive")
        if self.max_jumps_per_instant < 2:
            raise ValueError("max_jumps_per_instant must be >= 2")
        if self.jump_policy not in ("switch-first", "transmission-first", "random"):
            raise ValueError(f"unknown jump policy {self.jump_policy!r}")


class TerminationKind(Enum):
    HORIZON_REACHED = "HorizonReached"
    JUMP_BUDGET_EXHAUSTED = "JumpBudgetExhausted"
    DISCRETE_ACCUMULATION = "DiscreteAccumulation"
    DEAD_END = "DeadEnd"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class TerminationReason:
    kind: TerminationKind
    detail: str = ""


class SimulationResult(NamedTuple):
    arc: HybridArc
    records: list[JumpRecord]
    termination: TerminationReason


def locate_crossing(
    guard: Callable[[float], float],
    bracket: tuple[float, float],
    guard_tol: float = 1e-9,
    t_tol: float = _T_TOL,
) -> float:
    """Bisect a scalar guard along the flow to its zero crossing.

    Requires ``guard(t_lo) < 0 <= guard(t_hi)``. Returns t with
    ``0 <= guard(t) <= guard_tol`` or bracket width <= ``t_tol``; either
    way the returned time lies on the nonnegative (jump-enabled) side.
    """
    lo, hi = bracket
    g_lo = guard(lo)
    g_hi = guard(hi)
    if not (g_lo < 0.0 <= g_hi):
        raise BracketingError(f"guard does not change sign on [{lo}, {hi}]")
    while hi - lo > t_tol:
        mid = 0.5 * (lo + hi)
        g_mid = guard(mid)
        if 0.0 <= g_mid <= guard_tol:
            return mid
        if g_mid < 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def _rk4_step(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + (0.5 * h) * k1)
    k3 = f(y + (0.5 * h) * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def resolve_jump(
    sys: SystemDefinition,
    state: np.ndarray,
    policy: str,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, Family]:
    """Apply one jump at a state where at least one family is enabled.

    With both families enabled the policy selects; the jump maps
    themselves order their branches (the switch map puts the smallest
    minimizing logic value first).
    """
    enabled = [fam for fam in sys.jump_families if fam.guard(state) >= 0.0]
    if not enabled:
        raise RuntimeError("resolve_jump called with no jump family enabled")
    if len(enabled) == 1:
        chosen = enabled[0]
    elif policy == "transmission-first":
        chosen = sys.transmission
    elif policy == "switch-first":
        chosen = sys.synergistic
    elif policy == "random":
        if rng is None:
            rng = np.random.default_rng(0)
        chosen = enabled[int(rng.integers(len(enabled)))]
    else:
        raise ValueError(f"unknown jump policy {policy!r}")
    posts = chosen.jump_map(state)
    if not posts:
        raise RuntimeError(f"jump map of family {chosen.family} returned no image")
    return np.asarray(posts[0], dtype=float), chosen.family


def _finite(y: np.ndarray) -> bool:
    # NaN and inf both propagate through the sum.
    return math.isfinite(float(np.sum(y)))


def simulate(
    sys: SystemDefinition, x0: np.ndarray, cfg: SolverConfig
) -> SimulationResult:
    """Run one hybrid execution from ``x0`` until the horizon or a diagnosis.

    Semantics: whenever a jump family is enabled (guard >= 0) and
    ``eager_jump`` holds, a jump fires before further flow; otherwise the
    state flows in the flow set, with guard crossings localized by
    bisection inside the violating step (the localized state lies on the
    enabled side). More than ``max_jumps_per_instant`` jumps at one t is
    reported as DiscreteAccumulation (the finite witness of a complete
    discrete solution); a state that can neither flow nor jump is a
    DeadEnd (the signature of a maximal solution that is not complete).
    """
    tol = cfg.guard_tol
    rng = np.random.default_rng(cfg.policy_seed)
    project = sys.project if sys.project is not None else (lambda y: y)
    flow = sys.flow_map
    families = sys.jump_families

    y = project(np.asarray(x0, dtype=float).copy())
    if y.shape != (sys.dimension,):
        raise ValueError(f"state has shape {y.shape}, expected ({sys.dimension},)")

    t = 0.0
    j = 0
    records: list[JumpRecord] = []
    intervals: list[tuple[float, float, int]] = []
    interval_times: list[list[float]] = []
    interval_states: list[list[np.ndarray]] = []
    cur_times: list[float] = [t]
    cur_states: list[np.ndarray] = [y]
    t_interval_start = t
    jumps_this_instant = 0
    # States are write-once: every produced array is fresh, so samples and
    # records may share references without copying.

    def in_flow_set(state: np.ndarray) -> bool:
        return all(g(state) <= tol for g in sys.flow_guards)

    def enabled_families(state: np.ndarray) -> list[JumpFamilyDef]:
        return [fam for fam in families if fam.guard(state) >= 0.0]

    # Flow guards that coincide with jump guards are already watched by the
    # jump-crossing detection; only evaluate the remainder per step.
    jump_guard_fns = {id(fam.guard) for fam in families}
    extra_flow_guards = tuple(g for g in sys.flow_guards if id(g) not in jump_guard_fns)

    def close_interval() -> None:
        if cur_times[-1] != t:
            cur_times.append(t)
            cur_states.append(y)
        intervals.append((t_interval_start, t, j))
        interval_times.append(cur_times)
        interval_states.append(cur_states)

    def finish(kind: TerminationKind, detail: str) -> SimulationResult:
        close_interval()
        domain = HybridTimeDomain(tuple(intervals))
        times = tuple(np.array(ts) for ts in interval_times)
        states = tuple(np.array(xs) for xs in interval_states)
        arc = HybridArc(domain=domain, times=times, states=states, dimension=sys.dimension)
        return SimulationResult(arc, records, TerminationReason(kind, detail))

    def apply_jump() -> TerminationReason | None:
        nonlocal y, j, jumps_this_instant, t_interval_start, cur_times, cur_states
        if j >= cfg.j_max:
            return TerminationReason(TerminationKind.JUMP_BUDGET_EXHAUSTED, f"j_max={cfg.j_max} reached")
        if jumps_this_instant >= cfg.max_jumps_per_instant:
            return TerminationReason(
                TerminationKind.DISCRETE_ACCUMULATION, f"{jumps_this_instant} jumps at t={t}"
            )
        y_post, family = resolve_jump(sys, y, cfg.jump_policy, rng)
        y_post = project(np.asarray(y_post, dtype=float))
        if not _finite(y_post):
            return TerminationReason(TerminationKind.NUMERICAL_FAILURE, "jump produced non-finite state")
        records.append(JumpRecord(t=t, j_pre=j, family=family, state_pre=y, state_post=y_post))
        close_interval()
        j += 1
        jumps_this_instant += 1
        y = y_post
        t_interval_start = t
        cur_times = [t]
        cur_states = [y]
        return None

    # A state reached by a clean flow step has every jump guard < 0 at its
    # step endpoint already; the discrete phase only needs to run at the
    # start and after jumps or localized crossings.
    need_discrete = True

    while True:
        if need_discrete:
            if cfg.eager_jump:
                while enabled_families(y):
                    stop = apply_jump()
                    if stop is not None:
                        return finish(stop.kind, stop.detail)
            if not in_flow_set(y) and not enabled_families(y):
                return finish(
                    TerminationKind.DEAD_END,
                    f"state at t={t} lies outside the flow set with no jump enabled",
                )
            need_discrete = False

        if t >= cfg.t_horizon:
            return finish(TerminationKind.HORIZON_REACHED, f"t={t}")

        # Continuous phase: one RK4 step, then event detection at its end.
        h = min(cfg.dt_max, cfg.t_horizon - t)
        y_new = project(_rk4_step(flow, y, h))
        if not _finite(y_new):
            return finish(TerminationKind.NUMERICAL_FAILURE, f"non-finite state after step at t={t}")

        y_base = y

        def guard_along_flow(g: Callable[[np.ndarray], float]) -> Callable[[float], float]:
            def at(s: float) -> float:
                if s <= 0.0:
                    return g(y_base)
                return g(project(_rk4_step(flow, y_base, s)))
            return at

        crossers: list[float] = []  # crossing time offsets within the step
        for fam in families:
            if fam.guard(y_new) >= 0.0:
                if fam.guard(y) >= 0.0:
                    crossers.append(0.0)  # enabled already (non-eager mode)
                else:
                    crossers.append(locate_crossing(guard_along_flow(fam.guard), (0.0, h), tol))
        for g in extra_flow_guards:
            if g(y_new) > tol:
                if g(y) >= 0.0:
                    crossers.append(0.0)
                else:
                    crossers.append(locate_crossing(guard_along_flow(g), (0.0, h), tol))

        if not crossers:
            t += h
            y = y_new
            cur_times.append(t)
            cur_states.append(y)
            jumps_this_instant = 0
            continue

        s_min = min(crossers)
        if s_min > 0.0:
            y = project(_rk4_step(flow, y, s_min))
            t += s_min
            cur_times.append(t)
            cur_states.append(y)
            jumps_this_instant = 0

        if enabled_families(y):
            if not cfg.eager_jump:
                # Non-eager mode only jumps once flowing is impossible.
                if in_flow_set(y):
                    h_nudge = min(1e-6, cfg.dt_max)
                    probe = project(_rk4_step(flow, y, h_nudge))
                    if all(g(probe) <= tol for g in sys.flow_guards):
                        y = probe
                        t += h_nudge
                        cur_times.append(t)
                        cur_states.append(y)
                        continue
                stop = apply_jump()
                if stop is not None:
                    return finish(stop.kind, stop.detail)
            need_discrete = True
            continue

        # A flow guard crossed with no jump enabled: probe whether any
        # admissible direction keeps the state in the flow set.
        h_probe = min(1e-7, cfg.dt_max)
        probe = project(_rk4_step(flow, y, h_probe))
        if any(g(probe) > tol for g in sys.flow_guards) and not enabled_families(probe):
            guards = [f"{g(y):+.3e}" for g in sys.flow_guards]
            return finish(
                TerminationKind.DEAD_END,
                f"flow leaves the flow set at t={t} (guards {guards}) with no jump enabled",
            )
        # Grazing contact: the flow re-enters the set; accept the probe step.
        t += h_probe
        y = probe
        cur_times.append(t)
        cur_states.append(y)
        jumps_this_instant = 0
        need_discrete = True
