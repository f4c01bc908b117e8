"""Batch harness: seeded initial conditions, trigger comparison, verdicts, CSV artifacts.

Runs each configured trigger from a common set of random initial
conditions plus its own pathology presets (random sampling essentially
never hits the measure-zero states that witness the failure modes), then
aggregates per-trigger verdicts: completeness of the observed executions,
a sustained-membership surrogate for asymptotic stability, and positivity
of the minimum inter-transmission gap.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import attitude
from .attitude import (
    ClosedLoopState,
    ConfigError,
    DynamicTrigger,
    Gamma1Trigger,
    LyapunovZhuTrigger,
    PlantState,
    ProposedTrigger,
    SurrogateTimerTrigger,
    SynergisticParams,
    Trigger,
    V0,
    assemble_closed_loop,
    c_prime,
    kappa_s,
    n_ell,
    pack_state,
    unpack_state,
)
from .hybrid import (
    Family,
    HybridArc,
    HybridTimeDomain,
    JumpRecord,
    MalformedLogError,
    min_inter_transmission,
    write_jump_log,
)
from .solver import SimulationResult, SolverConfig, TerminationKind, simulate

__all__ = [
    "Preset",
    "ExperimentConfig",
    "RunResult",
    "RunVerdict",
    "TIMESERIES_SCHEMA",
    "INTERTRANSMISSION_SCHEMA",
    "VERDICT_SCHEMA",
    "sample_initial_conditions",
    "default_presets",
    "default_triggers",
    "run_single",
    "run_comparison",
    "emit_report",
    "write_timeseries_csv",
    "write_intertransmission_csv",
    "load_timeseries_csv",
    "arc_from_timeseries",
    "trigger_label",
]

TIMESERIES_SCHEMA = "synetc-timeseries v1"
INTERTRANSMISSION_SCHEMA = "synetc-intertransmission v1"
VERDICT_SCHEMA = "synetc-verdicts v1"


def trigger_label(trigger: Trigger) -> str:
    return trigger.kind


# ---------------------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------------------


def sample_initial_conditions(
    seed: int,
    n: int,
    omega_bound: float,
    params: SynergisticParams | None = None,
    n_ell_dim: int = 0,
) -> list[ClosedLoopState]:
    """Seeded random initial conditions.

    Quaternions uniform on the unit sphere (normalized 4-d Gaussians),
    rates uniform in the cube, logic value uniform in {0, 1}, held input
    already matching the feedback, trigger memory zero.
    """
    if n < 1:
        raise ConfigError("need at least one initial condition")
    if not omega_bound > 0:
        raise ConfigError("omega_bound must be positive")
    params = params if params is not None else SynergisticParams()
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        g = rng.normal(size=4)
        quat = g / np.linalg.norm(g)
        omega = rng.uniform(-omega_bound, omega_bound, size=3)
        q = int(rng.integers(0, 2))
        plant = PlantState(quat=quat, omega=omega)
        out.append(
            ClosedLoopState(
                plant=plant,
                q=q,
                u_hat=kappa_s(plant, q, params),
                ell=np.zeros(n_ell_dim),
            )
        )
    return out


@dataclass(frozen=True)
class Preset:
    """A named pathology initial condition, optionally pinning the jump order."""

    name: str
    state: ClosedLoopState
    policy_override: str | None = None


def _rest_with_attitude_error(params: SynergisticParams, n_ell_dim: int = 0) -> ClosedLoopState:
    # At rest with the active member aligned (mu = 0) and a nonzero
    # attitude error; the decrease margin is exactly zero here.
    plant = PlantState(quat=np.array([0.6, 0.8, 0.0, 0.0]), omega=np.zeros(3))
    return ClosedLoopState(
        plant=plant, q=1, u_hat=kappa_s(plant, 1, params), ell=np.zeros(n_ell_dim)
    )


def _both_jump_sets_seed(params: SynergisticParams) -> ClosedLoopState:
    # Synergy gap exactly at the switching threshold and a held input that
    # keeps the trigger margin nonnegative: both jump families enabled.
    plant = PlantState(
        quat=np.array([-0.5, math.sqrt(3.0) / 2.0, 0.0, 0.0]),
        omega=np.array([-0.4, 0.0, 0.0]),
    )
    return ClosedLoopState(plant=plant, q=1, u_hat=np.array([-1.0, 0.0, 0.0]))


def _generic_spin_seed(params: SynergisticParams, n_ell_dim: int) -> ClosedLoopState:
    rng = np.random.default_rng(5)
    g = rng.normal(size=4)
    quat = g / np.linalg.norm(g)
    omega = rng.uniform(-2.0, 2.0, size=3)
    plant = PlantState(quat=quat, omega=omega)
    return ClosedLoopState(
        plant=plant, q=0, u_hat=kappa_s(plant, 0, params), ell=np.zeros(n_ell_dim)
    )


def default_presets(trigger: Trigger, params: SynergisticParams) -> list[Preset]:
    """Pathology presets shipped per trigger kind."""
    if isinstance(trigger, ProposedTrigger):
        return [Preset("rest-attitude-error", _rest_with_attitude_error(params))]
    if isinstance(trigger, Gamma1Trigger):
        return [Preset("rest-attitude-error", _rest_with_attitude_error(params))]
    if isinstance(trigger, LyapunovZhuTrigger):
        return [
            Preset(
                "same-instant-pair",
                _both_jump_sets_seed(params),
                policy_override="transmission-first",
            )
        ]
    if isinstance(trigger, SurrogateTimerTrigger):
        return [Preset("timer-jam", _generic_spin_seed(params, 1))]
    return []


def default_triggers(sigma: float = 0.5, c: float = 0.3) -> list[Trigger]:
    """The four-way comparison roster."""
    return [
        ProposedTrigger(sigma=sigma, c=c),
        Gamma1Trigger(sigma=sigma),
        LyapunovZhuTrigger(sigma=sigma, c=c),
        SurrogateTimerTrigger(sigma=sigma),
    ]


@dataclass(frozen=True)
class ExperimentConfig:
    params: SynergisticParams = field(default_factory=SynergisticParams)
    triggers: tuple[Trigger, ...] = field(default_factory=lambda: tuple(default_triggers()))
    solver: SolverConfig = field(default_factory=SolverConfig)
    n_initial_conditions: int = 20
    rng_seed: int = 12345
    omega_bound: float = 2.0
    output_dir: Path | None = None
    include_presets: bool = True
    csv_stride: int = 10

    def __post_init__(self) -> None:
        if self.n_initial_conditions < 1:
            raise ConfigError("n_initial_conditions must be >= 1")
        if not self.omega_bound > 0:
            raise ConfigError("omega_bound must be positive")
        if not self.triggers:
            raise ConfigError("at least one trigger is required")


# ---------------------------------------------------------------------------
# Per-run execution and analytics
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    trigger: Trigger
    run_name: str
    result: SimulationResult
    wall_time: float
    v1_final_ok: bool          # V1 <= c' at every sample in the final 10% of the horizon
    reached_final_window: bool
    min_gap: float             # consecutive inter-transmission gap (inf if < 2)
    n_transmissions: int
    n_switches: int

    @property
    def termination(self) -> TerminationKind:
        return self.result.termination.kind

    @property
    def gas_reached(self) -> bool:
        return self.reached_final_window and self.v1_final_ok


def _v1_of_samples(states: np.ndarray, params: SynergisticParams) -> np.ndarray:
    n = states[:, 0]
    w = states[:, 4:7]
    ph = 2.0 * states[:, 7] - 1.0
    kinetic = 0.5 * np.einsum("ij,jk,ik->i", w, params.inertia, w)
    return 2.0 * params.k1 * (1.0 - ph * n) + kinetic


def run_single(
    params: SynergisticParams,
    trigger: Trigger,
    ic: ClosedLoopState,
    solver: SolverConfig,
    run_name: str = "run",
) -> RunResult:
    """Simulate one trigger from one initial condition and grade the run."""
    sys_def = assemble_closed_loop(params, trigger)
    if ic.ell.size != n_ell(trigger):
        ic = replace(ic, ell=np.zeros(n_ell(trigger)) + _ell_init(trigger))
    t0 = time.perf_counter()
    result = simulate(sys_def, pack_state(ic), solver)
    wall = time.perf_counter() - t0

    cp = c_prime(params, getattr(trigger, "c", 0.3))
    window_start = 0.9 * solver.t_horizon
    reached = result.arc.domain.t_end >= window_start
    v1_ok = True
    if reached:
        for (a, b, j), ts, xs in zip(
            result.arc.domain.intervals, result.arc.times, result.arc.states
        ):
            if b < window_start:
                continue
            sel = ts >= window_start
            if not sel.any():
                continue
            if np.any(_v1_of_samples(xs[sel], params) > cp):
                v1_ok = False
                break
    n_t = sum(1 for r in result.records if r.family is Family.TRANSMISSION)
    return RunResult(
        trigger=trigger,
        run_name=run_name,
        result=result,
        wall_time=wall,
        v1_final_ok=v1_ok if reached else False,
        reached_final_window=reached,
        min_gap=min_inter_transmission(result.records),
        n_transmissions=n_t,
        n_switches=len(result.records) - n_t,
    )


def _ell_init(trigger: Trigger) -> float:
    return trigger.ell0 if isinstance(trigger, DynamicTrigger) else 0.0


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunVerdict:
    """Aggregate over all runs of one trigger, one Table row."""

    trigger_name: str
    completeness: str            # Complete | DeadEnd | DiscreteAccumulation | Budget
    gas_reached: bool            # every run reached the horizon and sustained V1 <= c'
    min_inter_transmission: float
    dwell_transmission: bool     # min gap over runs with >= 2 transmissions is positive
    n_runs: int = 0

    @property
    def complete_ok(self) -> bool:
        return self.completeness != "DeadEnd"


_COMPLETENESS_RANK = {
    TerminationKind.HORIZON_REACHED: ("Complete", 0),
    TerminationKind.DISCRETE_ACCUMULATION: ("DiscreteAccumulation", 1),
    TerminationKind.JUMP_BUDGET_EXHAUSTED: ("Budget", 2),
    TerminationKind.NUMERICAL_FAILURE: ("Budget", 2),
    TerminationKind.DEAD_END: ("DeadEnd", 3),
}


def aggregate_verdict(trigger: Trigger, runs: Sequence[RunResult]) -> RunVerdict:
    worst = max((_COMPLETENESS_RANK[r.termination] for r in runs), key=lambda kv: kv[1])
    min_gap = min((r.min_gap for r in runs if r.n_transmissions >= 2), default=math.inf)
    return RunVerdict(
        trigger_name=trigger_label(trigger),
        completeness=worst[0],
        gas_reached=all(r.gas_reached for r in runs),
        min_inter_transmission=min_gap,
        dwell_transmission=min_gap > 0.0,
        n_runs=len(runs),
    )


# ---------------------------------------------------------------------------
# CSV artifacts
# ---------------------------------------------------------------------------


def _timeseries_rows(
    result: SimulationResult, params: SynergisticParams, trigger: Trigger, stride: int
) -> Iterable[list]:
    transmission_times = {
        (r.t, r.j_pre) for r in result.records if r.family is Family.TRANSMISSION
    }
    for (a, b, j), ts, xs in zip(
        result.arc.domain.intervals, result.arc.times, result.arc.states
    ):
        n_samp = ts.size
        keep = set(range(0, n_samp, max(1, stride)))
        keep.add(0)
        keep.add(n_samp - 1)  # interval endpoints always survive striding
        for i in sorted(keep):
            xi = unpack_state(xs[i])
            v1 = V0(xi.plant, xi.q, params)
            omega_norm = float(np.linalg.norm(xi.plant.omega))
            g = attitude.gamma(xi, trigger, params)
            flag = 1 if (float(ts[i]), j) in transmission_times else 0
            yield [repr(float(ts[i])), j, repr(v1), repr(omega_norm), repr(g), flag]


def write_timeseries_csv(
    path: Path,
    result: SimulationResult,
    params: SynergisticParams,
    trigger: Trigger,
    stride: int = 1,
) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {TIMESERIES_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "j", "V1", "omega_norm", "gamma", "transmission"])
        for row in _timeseries_rows(result, params, trigger, stride):
            writer.writerow(row)


def write_intertransmission_csv(path: Path, records: Sequence[JumpRecord]) -> None:
    ts = [r.t for r in records if r.family is Family.TRANSMISSION]
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {INTERTRANSMISSION_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "elapsed"])
        for prev, cur in zip(ts, ts[1:]):
            writer.writerow([repr(cur), repr(cur - prev)])


def load_timeseries_csv(path: Path) -> tuple[list[str], np.ndarray]:
    """Read a versioned time-series CSV back; returns (columns, data)."""
    with Path(path).open("r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != f"# {TIMESERIES_SCHEMA}":
            raise MalformedLogError(f"{path}:1: expected schema line '# {TIMESERIES_SCHEMA}'")
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows)


def arc_from_timeseries(path: Path) -> HybridArc:
    """Rebuild a hybrid arc from a time-series CSV (state = logged columns)."""
    header, data = load_timeseries_csv(path)
    if data.size == 0:
        raise MalformedLogError(f"{path}: no samples")
    t = data[:, 0]
    j = data[:, 1].astype(int)
    vals = data[:, 2:]
    intervals = []
    times = []
    states = []
    start = 0
    for i in range(1, len(t) + 1):
        if i == len(t) or j[i] != j[start]:
            seg_t = t[start:i]
            intervals.append((float(seg_t[0]), float(seg_t[-1]), int(j[start])))
            times.append(seg_t.copy())
            states.append(vals[start:i].copy())
            start = i
    domain = HybridTimeDomain(tuple(intervals))
    return HybridArc(domain=domain, times=tuple(times), states=tuple(states), dimension=vals.shape[1])


# ---------------------------------------------------------------------------
# Batch driver
# ---------------------------------------------------------------------------


def _run_cell(args: tuple) -> RunResult:
    params, trigger, ic, solver, name = args
    return run_single(params, trigger, ic, solver, name)


def run_comparison(
    config: ExperimentConfig, parallel: int = 1
) -> tuple[list[RunVerdict], dict[str, list[RunResult]]]:
    """Run every trigger over the seeded ICs plus its presets; write artifacts.

    Returns the per-trigger verdicts and all run results keyed by trigger
    label. Numerical failures are recorded in the verdicts rather than
    aborting the batch.
    """
    out_dir = Path(config.output_dir) if config.output_dir is not None else None
    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from exc

    cells: list[tuple] = []
    for trigger in config.triggers:
        ics = sample_initial_conditions(
            config.rng_seed,
            config.n_initial_conditions,
            config.omega_bound,
            config.params,
            n_ell_dim=n_ell(trigger),
        )
        for i, ic in enumerate(ics):
            cells.append((config.params, trigger, ic, config.solver, f"ic{i:03d}"))
        if config.include_presets:
            for preset in default_presets(trigger, config.params):
                solver = config.solver
                if preset.policy_override is not None:
                    solver = replace(solver, jump_policy=preset.policy_override)
                cells.append((config.params, trigger, preset.state, solver, f"preset-{preset.name}"))

    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_run_cell, cells, chunksize=1))
    else:
        results = [_run_cell(c) for c in cells]

    by_trigger: dict[str, list[RunResult]] = {}
    for res in results:
        by_trigger.setdefault(trigger_label(res.trigger), []).append(res)

    verdicts = []
    for trigger in config.triggers:
        label = trigger_label(trigger)
        runs = by_trigger[label]
        verdicts.append(aggregate_verdict(trigger, runs))
        if out_dir is not None:
            tdir = out_dir / label
            tdir.mkdir(exist_ok=True)
            for res in runs:
                base = tdir / res.run_name
                write_timeseries_csv(
                    Path(f"{base}.csv"), res.result, config.params, res.trigger, config.csv_stride
                )
                write_intertransmission_csv(Path(f"{base}_gaps.csv"), res.result.records)
                write_jump_log(
                    Path(f"{base}.jumps"),
                    res.result.records,
                    meta={
                        "horizon": res.result.arc.domain.t_end,
                        "termination": res.result.termination.kind.value,
                        "transmissions": res.n_transmissions,
                        "switches": res.n_switches,
                        "wall_time": f"{res.wall_time:.3f}",
                    },
                )

    if out_dir is not None:
        write_verdict_csv(out_dir / "verdicts.csv", verdicts)
        (out_dir / "table.txt").write_text(emit_report(verdicts), encoding="utf-8")
    return verdicts, by_trigger


def write_verdict_csv(path: Path, verdicts: Sequence[RunVerdict]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {VERDICT_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["trigger", "completeness", "gas_reached", "min_inter_transmission", "dwell_transmission", "n_runs"]
        )
        for v in verdicts:
            writer.writerow(
                [
                    v.trigger_name,
                    v.completeness,
                    int(v.gas_reached),
                    repr(v.min_inter_transmission),
                    int(v.dwell_transmission),
                    v.n_runs,
                ]
            )


def read_verdict_csv(path: Path) -> list[RunVerdict]:
    with Path(path).open("r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != f"# {VERDICT_SCHEMA}":
            raise MalformedLogError(f"{path}:1: expected schema line '# {VERDICT_SCHEMA}'")
        reader = csv.reader(fh)
        next(reader)
        out = []
        for row in reader:
            out.append(
                RunVerdict(
                    trigger_name=row[0],
                    completeness=row[1],
                    gas_reached=bool(int(row[2])),
                    min_inter_transmission=float(row[3]),
                    dwell_transmission=bool(int(row[4])),
                    n_runs=int(row[5]),
                )
            )
    return out


def emit_report(verdicts: Sequence[RunVerdict]) -> str:
    """Render the three-property comparison table with one row per trigger."""
    if not verdicts:
        raise ConfigError("no verdicts to report")

    def mark(ok: bool) -> str:
        return "✓" if ok else "✗"

    name_w = max(len("trigger"), max(len(v.trigger_name) for v in verdicts))
    header = (
        f"{'trigger':<{name_w}}  {'complete':>9}  {'stable':>7}  {'dwell-gap':>9}  runs"
    )
    lines = [header, "-" * len(header)]
    for v in verdicts:
        lines.append(
            f"{v.trigger_name:<{name_w}}  {mark(v.complete_ok):>9}  "
            f"{mark(v.gas_reached):>7}  {mark(v.dwell_transmission):>9}  {v.n_runs:>4}"
        )
    return "\n".join(lines) + "\n"
