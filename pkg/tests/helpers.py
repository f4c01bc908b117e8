"""Shared test utilities: random log construction and attitude samplers."""

from __future__ import annotations

import numpy as np

from synetc.hybrid import Family, HybridTimeDomain, JumpRecord, domain_from_records
from synetc.attitude import SynergisticParams


def random_log(
    rng: np.random.Generator,
    n_jumps: int,
    zero_length_prob: float = 0.2,
    dim: int = 2,
    first_transmission_j1: bool = False,
) -> tuple[HybridTimeDomain, list[JumpRecord]]:
    """A structurally valid random jump log with optional zero-length intervals.

    With ``first_transmission_j1`` the first record is forced to be a
    switch, so every transmission has j_pre >= 1 and the horizon is padded
    past the last jump (the regime where the gap infimum and the
    deparametrized interval lengths are directly comparable).
    """
    t = 0.0
    records: list[JumpRecord] = []
    for j in range(n_jumps):
        if rng.random() > zero_length_prob:
            t += float(rng.uniform(0.01, 1.0))
        if first_transmission_j1 and j == 0:
            family = Family.SYNERGISTIC
        else:
            family = Family.TRANSMISSION if rng.random() < 0.5 else Family.SYNERGISTIC
        records.append(
            JumpRecord(
                t=t,
                j_pre=j,
                family=family,
                state_pre=rng.normal(size=dim),
                state_post=rng.normal(size=dim),
            )
        )
    horizon = t + float(rng.uniform(0.1, 2.0))
    return domain_from_records(records, horizon), records


def attitude_sampler(
    params: SynergisticParams,
    omega_bound: float = 2.0,
    u_bound: float = 3.0,
    omega_zero: bool = False,
):
    """Random closed-loop state vectors for Monte-Carlo membership checks."""

    def sampler(rng: np.random.Generator) -> np.ndarray:
        g = rng.normal(size=4)
        quat = g / np.linalg.norm(g)
        omega = np.zeros(3) if omega_zero else rng.uniform(-omega_bound, omega_bound, size=3)
        q = float(rng.integers(0, 2))
        u = rng.uniform(-u_bound, u_bound, size=3)
        return np.concatenate([quat, omega, [q], u])

    return sampler


def separation_interfaces(sys_def):
    """Jump maps and membership predicates of a two-family system."""
    G = (sys_def.transmission.jump_map, sys_def.synergistic.jump_map)
    D = (
        lambda x: sys_def.transmission.guard(x) >= 0.0,
        lambda x: sys_def.synergistic.guard(x) >= 0.0,
    )
    return G, D
