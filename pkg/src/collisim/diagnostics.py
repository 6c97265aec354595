"""Non-Markovianity and correlation diagnostics over trajectories.

Trace-distance series for pairs of initial system states, accumulated
information backflow, and mutual-information profiles between the system
and individual environment ancillas.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import ModelConfig, SchemeId, evolve, iter_steps
from .qcore import (
    DEFAULT_MAX_QUBITS,
    EXCITED,
    GROUND,
    MINUS,
    PLUS,
    check_density_operator,
    mutual_information,
    partial_trace,
    trace_distance,
)

__all__ = [
    "StatePair",
    "SeriesRecord",
    "CANONICAL_PAIRS",
    "distance_trajectory",
    "blp_accumulation",
    "mi_profile_last_ancillas",
    "mi_profile_fixed_ancilla",
]


@dataclass(frozen=True)
class StatePair:
    """Two initial system states whose evolutions are compared."""

    first: np.ndarray
    second: np.ndarray

    def __post_init__(self) -> None:
        check_density_operator(self.first, "pair.first")
        check_density_operator(self.second, "pair.second")

    def is_orthogonal(self, atol: float = 1e-10) -> bool:
        """Whether the members sit at the maximal trace distance of 1."""
        return abs(trace_distance(self.first, self.second) - 1.0) <= atol


@dataclass(frozen=True)
class SeriesRecord:
    step: int
    value: float


# The two antipodal pure pairs used throughout: poles and equator of the
# Bloch sphere. Arbitrary pairs are accepted everywhere a pair is taken.
CANONICAL_PAIRS = {
    "01": StatePair(GROUND, EXCITED),
    "pm": StatePair(PLUS, MINUS),
}


def distance_trajectory(
    cfg: ModelConfig,
    scheme: SchemeId,
    pair: StatePair,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> list[float]:
    """Trace distance between the two evolutions, one value per step.

    Both members run under the identical collision sequence; entry 0 is
    the distance between the initial states.
    """
    first = evolve(cfg.with_system(pair.first), scheme, max_qubits=max_qubits)
    second = evolve(cfg.with_system(pair.second), scheme, max_qubits=max_qubits)
    return [trace_distance(a, b) for a, b in zip(first.system_states, second.system_states)]


def blp_accumulation(series: Sequence[float]) -> float:
    """Sum of the positive trace-distance increments of a series.

    Zero for any monotone non-increasing series; positive whenever
    information flows back to the system.
    """
    if len(series) < 2:
        raise ValueError("need at least two values to accumulate increments")
    values = np.asarray(series, dtype=float)
    increments = np.diff(values)
    return float(increments[increments > 0].sum())


def mi_profile_last_ancillas(
    cfg: ModelConfig, n_max: int | None = None
) -> tuple[list[SeriesRecord], list[SeriesRecord]]:
    """Mutual information of the system with its two newest ancillas.

    Sampled after the system collision of step n, i.e. right before the
    next step begins. Runs the four-qubit erasure scheme so the joint
    state with both ancillas is available; both series start at n = 2,
    the first step at which two collided ancillas coexist.

    Returns (series with the newest ancilla, series with the one before).
    """
    if cfg.depth != 1:
        raise ValueError("last-ancilla profiles are defined for depth 1")
    run_cfg = cfg if n_max is None else cfg.with_steps(n_max)
    newest: list[SeriesRecord] = []
    previous: list[SeriesRecord] = []
    for st in iter_steps(run_cfg, SchemeId.ERASE_C):
        n = st.step
        if n < 2:
            continue
        last, second_last = f"E{n}", f"E{n - 1}"
        joint_new = partial_trace(st.register, ("S", last))
        joint_prev = partial_trace(st.register, ("S", second_last))
        newest.append(SeriesRecord(n, mutual_information(joint_new, (("S",), (last,)))))
        previous.append(SeriesRecord(n, mutual_information(joint_prev, (("S",), (second_last,)))))
    return newest, previous


def mi_profile_fixed_ancilla(
    cfg: ModelConfig,
    k: int,
    n_max: int | None = None,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> list[SeriesRecord]:
    """Mutual information of the system with the fixed ancilla k, per step.

    Needs the full chain, so the run length is bounded by the register
    capacity. Before ancilla k has collided the value is zero; after its
    last collision every change is driven by the system state alone.
    """
    run_cfg = cfg if n_max is None else cfg.with_steps(n_max)
    if k < 1 or k > run_cfg.depth * run_cfg.steps:
        raise ValueError(f"ancilla index {k} outside the chain of this run")
    label = f"E{k}"
    out: list[SeriesRecord] = []
    for st in iter_steps(run_cfg, SchemeId.FULL_CHAIN, max_qubits=max_qubits):
        joint = partial_trace(st.register, ("S", label))
        out.append(SeriesRecord(st.step, mutual_information(joint, (("S",), (label,)))))
    return out
