"""Hybrid time domains, hybrid arcs, and jump-log analytics.

The data model covers executions of hybrid systems whose jumps split into
two families: control transmissions (a zero-order-hold update of the held
input) and supervisory switches (a logic-variable update). On top of it sit
the analytics used to certify inter-transmission spacing:

* classification of a jump log by family,
* ``delta_t``: greatest lower bound of elapsed time between counted
  transmission jumps,
* deparametrization: re-indexing the jump counter so it counts one family
  only, absorbing the other family's jumps into flow intervals,
* dwell-time and weak dwell-time verdicts,
* recursive jump images (k-fold composition of a jump map through its
  jump set),
* Monte-Carlo separation checks for "the image of a jump set leaves the
  jump sets" conditions.

Everything here is a pure function over immutable inputs and is safe to
call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Family",
    "HybridTimeDomain",
    "HybridArc",
    "JumpRecord",
    "DwellReport",
    "SeparationCheck",
    "SeparationReport",
    "MalformedLogError",
    "JumpDepthError",
    "otimes",
    "classify_jumps",
    "delta_t",
    "min_inter_transmission",
    "max_transmissions_per_instant",
    "deparametrize",
    "dwell_time",
    "weak_dwell_time",
    "analyze",
    "domain_from_records",
    "recursive_jump_image",
    "check_separation",
    "write_jump_log",
    "read_jump_log",
]


class MalformedLogError(ValueError):
    """A jump log or hybrid time domain violates its structural invariants."""


class JumpDepthError(RuntimeError):
    """A recursive jump image was requested beyond the configured depth bound."""


class Family(str, Enum):
    """Jump family tag: transmission (held-input update) or synergistic switch."""

    TRANSMISSION = "T"
    SYNERGISTIC = "S"


def otimes(f1: float, f2: float) -> float:
    """Combine two trigger margins into one, preserving the joint sign.

    The result is >= 0 exactly when both inputs are >= 0, so a single
    scalar can gate a condition that requires two margins to be
    nonnegative at once:

    * both negative -> ``-f1*f2`` (negative),
    * at least one positive -> ``f1*f2``,
    * otherwise (a zero involved, none positive) -> ``min(f1, f2)``.
    """
    if not (math.isfinite(f1) and math.isfinite(f2)):
        raise ValueError(f"otimes requires finite inputs, got ({f1}, {f2})")
    if f1 < 0.0 and f2 < 0.0:
        return -f1 * f2
    if f1 > 0.0 or f2 > 0.0:
        return f1 * f2
    return min(f1, f2)


# ---------------------------------------------------------------------------
# Domains, arcs, records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HybridTimeDomain:
    """Ordered intervals ``[t_start, t_end] x {j}`` of one execution.

    Invariants (checked on construction): intervals are ordered by ``j``,
    consecutive and starting at ``j = 0``; ``t_end`` of interval ``j``
    equals ``t_start`` of interval ``j + 1`` (jumps are instantaneous on
    the t-axis); ``t_start <= t_end``, with zero-length intervals allowed
    (multiple jumps at one t); the first interval starts at ``t = 0``.
    """

    intervals: tuple[tuple[float, float, int], ...]

    def __post_init__(self) -> None:
        if not self.intervals:
            raise MalformedLogError("domain must contain at least one interval")
        object.__setattr__(self, "intervals", tuple(tuple(iv) for iv in self.intervals))
        first = self.intervals[0]
        if first[2] != 0:
            raise MalformedLogError("first interval must have j = 0")
        if first[0] != 0.0:
            raise MalformedLogError("first interval must start at t = 0")
        for idx, (t0, t1, j) in enumerate(self.intervals):
            if j != idx:
                raise MalformedLogError(f"interval {idx} has jump counter {j}")
            if t1 < t0:
                raise MalformedLogError(f"interval {idx} has t_end < t_start")
            if idx > 0 and t0 != self.intervals[idx - 1][1]:
                raise MalformedLogError(
                    f"interval {idx} does not start at the previous interval's end"
                )

    @property
    def n_intervals(self) -> int:
        return len(self.intervals)

    @property
    def t_end(self) -> float:
        return self.intervals[-1][1]

    def lengths(self) -> list[float]:
        """Per-interval lengths ``|I_j|`` in j-order."""
        return [t1 - t0 for (t0, t1, _) in self.intervals]

    def total_flow_time(self) -> float:
        return float(sum(self.lengths()))


@dataclass(frozen=True)
class HybridArc:
    """A hybrid time domain plus per-interval dense samples of the state."""

    domain: HybridTimeDomain
    times: tuple[np.ndarray, ...]   # one strictly increasing array per interval
    states: tuple[np.ndarray, ...]  # matching (n_samples, dimension) arrays
    dimension: int

    def __post_init__(self) -> None:
        if len(self.times) != self.domain.n_intervals or len(self.states) != len(self.times):
            raise MalformedLogError("arc samples must cover every interval")
        for (t0, t1, j), ts, xs in zip(self.domain.intervals, self.times, self.states):
            if ts.size == 0:
                raise MalformedLogError(f"interval {j} has no samples")
            if xs.shape != (ts.size, self.dimension):
                raise MalformedLogError(f"interval {j} has mismatched sample shapes")
            if ts[0] != t0 or ts[-1] != t1:
                raise MalformedLogError(f"interval {j} samples must span its endpoints")
            if ts.size > 1 and not np.all(np.diff(ts) > 0):
                raise MalformedLogError(f"interval {j} sample times must strictly increase")

    def iter_samples(self):
        """Yield ``(t, j, state)`` over all intervals in order."""
        for (t0, t1, j), ts, xs in zip(self.domain.intervals, self.times, self.states):
            for t, x in zip(ts, xs):
                yield float(t), j, x


@dataclass(frozen=True)
class JumpRecord:
    """One jump event: pre/post states with a family tag.

    ``j_pre`` is the jump counter before the jump; the post counter is
    implicitly ``j_pre + 1``. No two records of one log may share
    ``(t, j_pre)``.
    """

    t: float
    j_pre: int
    family: Family
    state_pre: np.ndarray
    state_post: np.ndarray


def _check_records(records: Sequence[JumpRecord]) -> None:
    seen: set[tuple[float, int]] = set()
    prev: tuple[float, int] | None = None
    for rec in records:
        key = (rec.t, rec.j_pre)
        if key in seen:
            raise MalformedLogError(f"duplicate jump record at (t={rec.t}, j={rec.j_pre})")
        seen.add(key)
        if prev is not None and key < prev:
            raise MalformedLogError("jump records must be ordered by (t, j_pre)")
        prev = key


def classify_jumps(
    records: Sequence[JumpRecord],
) -> tuple[set[tuple[float, int]], set[tuple[float, int]]]:
    """Partition a log's hybrid times by jump family.

    Returns ``(transmission_times, switch_times)`` as sets of ``(t, j)``.
    The two sets are disjoint by construction since each record carries
    exactly one family tag.
    """
    _check_records(records)
    e1 = {(r.t, r.j_pre) for r in records if r.family is Family.TRANSMISSION}
    e2 = {(r.t, r.j_pre) for r in records if r.family is Family.SYNERGISTIC}
    return e1, e2


def delta_t(records: Sequence[JumpRecord]) -> float:
    """Greatest lower bound of elapsed time between counted transmission jumps.

    Counted pairs are transmission records ``(t1, j1)``, ``(t2, j2)`` with
    ``0 < j1 < j2``; a transmission that is the execution's initial jump
    (``j_pre = 0``) never serves as the left element. Returns ``+inf``
    when fewer than two transmissions qualify.
    """
    _check_records(records)
    ts = [r.t for r in records if r.family is Family.TRANSMISSION and r.j_pre >= 1]
    if len(ts) < 2:
        return math.inf
    # Records are (t, j)-ordered and gaps are nonnegative, so the infimum
    # over all pairs is attained by a consecutive pair.
    return min(t2 - t1 for t1, t2 in zip(ts, ts[1:]))


def min_inter_transmission(records: Sequence[JumpRecord]) -> float:
    """Minimum gap between consecutive transmissions in log order.

    Unlike :func:`delta_t` this includes a first transmission that occurs
    as the execution's initial jump; it is the quantity plotted as
    "elapsed time between transmissions". ``+inf`` with < 2 transmissions.
    """
    _check_records(records)
    ts = [r.t for r in records if r.family is Family.TRANSMISSION]
    if len(ts) < 2:
        return math.inf
    return min(t2 - t1 for t1, t2 in zip(ts, ts[1:]))


def max_transmissions_per_instant(records: Sequence[JumpRecord]) -> int:
    """Largest number of transmission jumps sharing one continuous time."""
    _check_records(records)
    counts: dict[float, int] = {}
    for r in records:
        if r.family is Family.TRANSMISSION:
            counts[r.t] = counts.get(r.t, 0) + 1
    return max(counts.values(), default=0)


def deparametrize(
    domain: HybridTimeDomain, records: Sequence[JumpRecord]
) -> HybridTimeDomain:
    """Re-index the jump counter to count transmission jumps only.

    The new counter at hybrid time ``(t, j)`` is the number of transmission
    records with ``j_pre < j`` (their times are necessarily <= t), so it is
    constant on each interval; intervals sharing a counter value are merged,
    absorbing switch jumps into flow. Total continuous time is preserved.
    """
    _check_records(records)
    n = domain.n_intervals
    by_j = {r.j_pre: r for r in records}
    if len(by_j) != len(records):
        raise MalformedLogError("records must have distinct jump counters")
    for r in records:
        if r.j_pre + 1 >= n:
            raise MalformedLogError(f"record at j={r.j_pre} has no matching interval")
        if r.t != domain.intervals[r.j_pre][1] or r.t != domain.intervals[r.j_pre + 1][0]:
            raise MalformedLogError(
                f"record at (t={r.t}, j={r.j_pre}) is not at an interval boundary"
            )

    new_j = []
    count = 0
    for j in range(n):
        new_j.append(count)
        rec = by_j.get(j)
        if rec is not None and rec.family is Family.TRANSMISSION:
            count += 1

    merged: list[tuple[float, float, int]] = []
    for (t0, t1, j), nj in zip(domain.intervals, new_j):
        if merged and merged[-1][2] == nj:
            prev = merged[-1]
            merged[-1] = (prev[0], t1, nj)
        else:
            merged.append((t0, t1, nj))
    return HybridTimeDomain(tuple(merged))


def dwell_time(arc_domain: HybridTimeDomain) -> tuple[bool, float]:
    """Dwell-time verdict: is ``inf |I_j|`` over ``j >= 1`` positive?

    Returns ``(has_dwell, tau)`` with ``tau`` the verified infimum:
    ``+inf`` when no interval with ``j >= 1`` exists (vacuous dwell),
    ``0.0`` when the verdict is false.
    """
    lengths = arc_domain.lengths()[1:]
    if not lengths:
        return True, math.inf
    tau = min(lengths)
    return (tau > 0.0), tau


def weak_dwell_time(arc_domain: HybridTimeDomain, tau: float) -> bool:
    """Check the weak dwell-time property at a given ``tau > 0``.

    True iff for every ``j >= 1`` in the domain some ``k >= j`` has
    ``|I_k| >= tau``.
    """
    if not tau > 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    lengths = arc_domain.lengths()
    best = -math.inf
    suffix_max = [0.0] * len(lengths)
    for i in range(len(lengths) - 1, -1, -1):
        best = max(best, lengths[i])
        suffix_max[i] = best
    return all(suffix_max[j] >= tau for j in range(1, len(lengths)))


@dataclass(frozen=True)
class DwellReport:
    """Dwell analytics of one log: gap infimum, deparametrized intervals, verdicts."""

    delta_t: float
    deparam_interval_lengths: tuple[float, ...]
    has_dwell: bool
    dwell_tau: float
    has_weak_dwell: bool
    transmission_count: int
    synergistic_count: int
    min_inter_transmission: float

    def as_text(self) -> str:
        lines = [
            f"transmissions: {self.transmission_count}",
            f"switches: {self.synergistic_count}",
            f"delta_t: {self.delta_t}",
            f"min inter-transmission gap: {self.min_inter_transmission}",
            f"deparametrized intervals: {len(self.deparam_interval_lengths)}",
            f"dwell-time: {self.has_dwell} (tau = {self.dwell_tau})",
            f"weak dwell-time: {self.has_weak_dwell}",
        ]
        return "\n".join(lines)


def analyze(domain: HybridTimeDomain, records: Sequence[JumpRecord]) -> DwellReport:
    """Full dwell report for one execution log."""
    e1, e2 = classify_jumps(records)
    deparam = deparametrize(domain, records)
    has_dwell, tau = dwell_time(deparam)
    lengths = deparam.lengths()
    # For a finite domain the weak property reduces to: the last interval
    # (the only admissible k for the largest j) has positive length, or
    # there is no j >= 1 at all.
    has_weak = len(lengths) <= 1 or lengths[-1] > 0.0
    return DwellReport(
        delta_t=delta_t(records),
        deparam_interval_lengths=tuple(lengths),
        has_dwell=has_dwell,
        dwell_tau=tau,
        has_weak_dwell=has_weak,
        transmission_count=len(e1),
        synergistic_count=len(e2),
        min_inter_transmission=min_inter_transmission(records),
    )


def domain_from_records(
    records: Sequence[JumpRecord], horizon: float
) -> HybridTimeDomain:
    """Reconstruct the hybrid time domain of a log from its records.

    The records pin interval boundaries; ``horizon`` closes the last
    interval (it must not precede the last jump).
    """
    _check_records(records)
    t = 0.0
    intervals: list[tuple[float, float, int]] = []
    for j, rec in enumerate(records):
        if rec.j_pre != j:
            raise MalformedLogError(f"records must have consecutive counters, got {rec.j_pre}")
        if rec.t < t:
            raise MalformedLogError("record times must be nondecreasing")
        intervals.append((t, rec.t, j))
        t = rec.t
    if horizon < t:
        raise MalformedLogError("horizon precedes the last jump")
    intervals.append((t, horizon, len(records)))
    return HybridTimeDomain(tuple(intervals))


# ---------------------------------------------------------------------------
# Recursive jump images and separation checks
# ---------------------------------------------------------------------------


def _dedup(states: list[np.ndarray]) -> list[np.ndarray]:
    seen: set[bytes] = set()
    out = []
    for s in states:
        key = np.asarray(s, dtype=float).tobytes()
        if key not in seen:
            seen.add(key)
            out.append(s)
    return out


def recursive_jump_image(
    G: Callable[[np.ndarray], Sequence[np.ndarray]],
    D_membership: Callable[[np.ndarray], bool],
    k: int,
    seeds: Sequence[np.ndarray],
    max_depth: int = 8,
) -> list[list[np.ndarray]]:
    """Sampled k-fold jump image per seed.

    ``G^0`` is the identity; ``G^1`` applies the map where the seed lies in
    its jump set (a set-valued map is empty outside its domain); for
    ``k >= 1``, ``G^{k+1}(v) = G(G^k(v) ∩ D)``. Images are enumerated up to
    the finite branching the map exposes.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > max_depth:
        raise JumpDepthError(f"requested image depth {k} exceeds bound {max_depth}")

    def step(states: list[np.ndarray]) -> list[np.ndarray]:
        nxt: list[np.ndarray] = []
        for s in states:
            if D_membership(s):
                nxt.extend(np.asarray(g, dtype=float) for g in G(s))
        return _dedup(nxt)

    results = []
    for seed in seeds:
        current = [np.asarray(seed, dtype=float)]
        if k == 0:
            results.append(current)
            continue
        for _ in range(k):
            current = step(current)
            if not current:
                break
        results.append(current)
    return results


@dataclass(frozen=True)
class SeparationCheck:
    """Outcome of one sampled separation condition."""

    condition: str            # "image_avoids_own_set" or "image_avoids_jump_set"
    family: int               # 1 = transmission, 2 = switch
    n_requested: int
    n_sampled: int
    n_violations: int
    witnesses: tuple[tuple[np.ndarray, np.ndarray], ...]  # (seed, offending image)
    sampling_ok: bool

    @property
    def falsified(self) -> bool:
        return self.n_violations > 0


@dataclass(frozen=True)
class SeparationReport:
    checks: tuple[SeparationCheck, ...]

    def get(self, condition: str, family: int) -> SeparationCheck:
        for c in self.checks:
            if c.condition == condition and c.family == family:
                return c
        raise KeyError((condition, family))

    def as_text(self) -> str:
        rows = []
        for c in self.checks:
            status = "not falsified" if c.n_violations == 0 else f"{c.n_violations} violations"
            note = "" if c.sampling_ok else f" (sampling incomplete: {c.n_sampled}/{c.n_requested})"
            rows.append(f"{c.condition} family {c.family}: {status}{note}")
        return "\n".join(rows)


def check_separation(
    G_families: Sequence[Callable[[np.ndarray], Sequence[np.ndarray]]],
    D_memberships: Sequence[Callable[[np.ndarray], bool]],
    sampler: Callable[[np.random.Generator], np.ndarray],
    n_samples: int,
    rng: np.random.Generator | None = None,
    max_draw_factor: int = 200,
    max_witnesses: int = 5,
) -> SeparationReport:
    """Monte-Carlo falsification of the jump-set separation conditions.

    For each family ``i`` the two conditions are:

    * ``image_avoids_own_set``: images of states in ``D_i`` leave ``D_i``;
    * ``image_avoids_jump_set``: images of states in ``D_i`` but not in the
      other family's set leave ``D_1 ∪ D_2`` entirely.

    Seeds are drawn by rejection against the target set; zero violations
    means "not falsified at this sample size", never a proof. If the
    sampler cannot populate a target set within the retry budget, the
    check is reported with ``sampling_ok=False`` instead of raising.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if len(G_families) != 2 or len(D_memberships) != 2:
        raise ValueError("exactly two jump families are expected")
    rng = rng if rng is not None else np.random.default_rng(0)

    def in_any(s: np.ndarray) -> bool:
        return D_memberships[0](s) or D_memberships[1](s)

    checks: list[SeparationCheck] = []
    for fam in (1, 2):
        own = D_memberships[fam - 1]
        other = D_memberships[2 - fam]
        G = G_families[fam - 1]
        specs = (
            ("image_avoids_own_set", lambda s: own(s), own),
            ("image_avoids_jump_set", lambda s: own(s) and not other(s), in_any),
        )
        for name, target, bad_region in specs:
            sampled = 0
            violations = 0
            witnesses: list[tuple[np.ndarray, np.ndarray]] = []
            budget = max_draw_factor * n_samples
            draws = 0
            while sampled < n_samples and draws < budget:
                s = sampler(rng)
                draws += 1
                if not target(s):
                    continue
                sampled += 1
                for img in G(s):
                    img = np.asarray(img, dtype=float)
                    if bad_region(img):
                        violations += 1
                        if len(witnesses) < max_witnesses:
                            witnesses.append((s, img))
            checks.append(
                SeparationCheck(
                    condition=name,
                    family=fam,
                    n_requested=n_samples,
                    n_sampled=sampled,
                    n_violations=violations,
                    witnesses=tuple(witnesses),
                    sampling_ok=(sampled >= n_samples),
                )
            )
    return SeparationReport(tuple(checks))


# ---------------------------------------------------------------------------
# Log serialization
# ---------------------------------------------------------------------------
#
# Line-oriented text format, one record per line:
#
#   <t> <j_pre> <T|S> <pre_0> ... <pre_{d-1}> <post_0> ... <post_{d-1}>
#
# Floats are written with repr, which round-trips 64-bit values exactly.
# Lines starting with '#' carry run metadata as key=value pairs.


def write_jump_log(
    path: str | Path,
    records: Sequence[JumpRecord],
    meta: dict[str, object] | None = None,
) -> None:
    _check_records(records)
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"# {key}={value}")
    for r in records:
        pre = " ".join(repr(float(v)) for v in r.state_pre)
        post = " ".join(repr(float(v)) for v in r.state_post)
        lines.append(f"{r.t!r} {r.j_pre} {r.family.value} {pre} {post}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_jump_log(path: str | Path) -> tuple[list[JumpRecord], dict[str, str]]:
    records: list[JumpRecord] = []
    meta: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        parts = line.split()
        if len(parts) < 3 or (len(parts) - 3) % 2 != 0:
            raise MalformedLogError(f"line {lineno}: malformed record")
        try:
            t = float(parts[0])
            j_pre = int(parts[1])
            family = Family(parts[2])
            dim = (len(parts) - 3) // 2
            pre = np.array([float(v) for v in parts[3 : 3 + dim]])
            post = np.array([float(v) for v in parts[3 + dim :]])
        except (ValueError, KeyError) as exc:
            raise MalformedLogError(f"line {lineno}: {exc}") from exc
        records.append(JumpRecord(t=t, j_pre=j_pre, family=family, state_pre=pre, state_post=post))
    _check_records(records)
    return records, meta
