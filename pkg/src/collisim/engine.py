"""Collision-dynamics engines.

Five representations of the same open qubit dynamics: the exact full
chain (every ancilla kept, the brute-force oracle), three bounded-memory
erasure schemes, and the memory-depth embedding in which the system only
ever touches a fixed set of memory slots. All of them step a labeled
register through the configured collision sequence and record the
reduced system state after each step.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Mapping

import numpy as np

from .qcore import (
    DEFAULT_MAX_QUBITS,
    EXCITED,
    GROUND,
    CapacityError,
    CouplingTriple,
    LabeledRegister,
    adjoin,
    apply_on,
    check_density_operator,
    collision_unitary,
    make_register,
    partial_trace,
    reduced_state,
    swap_unitary,
    tensor_product,
)

__all__ = [
    "SchemeId",
    "UnsupportedConfigurationError",
    "ModelConfig",
    "Collision",
    "Trajectory",
    "StepState",
    "step_operator",
    "iter_steps",
    "evolve",
    "evolve_full_chain",
    "evolve_scheme",
    "evolve_embedded",
    "max_full_chain_steps",
]


class SchemeId(Enum):
    """Which representation of the dynamics to run."""

    FULL_CHAIN = "full-chain"
    ERASE_A = "erase-a"
    ERASE_B = "erase-b"
    ERASE_C = "erase-c"
    EMBEDDED = "embedded"


class UnsupportedConfigurationError(ValueError):
    """The requested scheme does not cover this configuration."""


def _default_aa_order(depth: int) -> tuple[tuple[int, int], ...]:
    window = depth + 1
    return tuple((i, j) for i in range(window) for j in range(i + 1, window))


def _renormalized(rho: np.ndarray) -> np.ndarray:
    """Hermitize and rescale to unit trace.

    Rebuilding a register as a product of marginals doubles any trace or
    anti-Hermitian round-off per step, which compounds exponentially over
    long runs; restoring the exact invariants here keeps the iterated
    decorrelation stable.
    """
    rho = 0.5 * (rho + rho.conj().T)
    return rho / rho.trace().real


@dataclass(frozen=True, eq=False)
class ModelConfig:
    """All physical parameters of one collision-model run.

    ``depth`` is the range of intra-environment collisions: in every step
    after the first, the previous ``depth + 1`` ancillas collide pairwise
    before the system meets its next ``depth`` fresh ancillas. The
    ancilla-ancilla pair ordering defaults to lexicographic within that
    window and can be overridden (as index offsets into the window) for
    reproducibility experiments.
    """

    sa_coupling: CouplingTriple
    aa_coupling: CouplingTriple
    tau_sa: float
    tau_aa: float
    steps: int
    depth: int = 1
    omega0: float = 1.0
    ancilla_init: np.ndarray = field(default_factory=lambda: GROUND.copy())
    system_init: np.ndarray = field(default_factory=lambda: EXCITED.copy())
    aa_pair_order: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        if self.tau_sa < 0 or self.tau_aa < 0:
            raise ValueError("collision times must be non-negative")
        if self.depth < 1:
            raise ValueError(f"memory depth must be >= 1, got {self.depth}")
        if self.steps < 0:
            raise ValueError(f"step count must be >= 0, got {self.steps}")
        check_density_operator(self.ancilla_init, "ancilla_init")
        check_density_operator(self.system_init, "system_init")
        if self.ancilla_init.shape != (2, 2) or self.system_init.shape != (2, 2):
            raise ValueError("system and ancilla initial states must be single-qubit")
        # Pin traces to exactly 1 so long chains of re-tensoring cannot
        # compound a sub-tolerance trace offset in the inputs.
        for name in ("ancilla_init", "system_init"):
            rho = np.asarray(getattr(self, name), dtype=complex)
            object.__setattr__(self, name, rho / rho.trace().real)
        if self.aa_pair_order is not None:
            expected = sorted(_default_aa_order(self.depth))
            if sorted(self.aa_pair_order) != expected:
                raise ValueError(
                    f"aa_pair_order must permute {expected}, got {self.aa_pair_order}"
                )

    def with_system(self, system_init: np.ndarray) -> "ModelConfig":
        return replace(self, system_init=system_init)

    def with_steps(self, steps: int) -> "ModelConfig":
        return replace(self, steps=steps)

    def aa_order(self) -> tuple[tuple[int, int], ...]:
        return self.aa_pair_order or _default_aa_order(self.depth)


@dataclass(frozen=True)
class Collision:
    """One pairwise collision: kind, target labels, and its unitary."""

    kind: str  # "sa" | "aa"
    targets: tuple[str, str]
    unitary: np.ndarray


def _collision_plan(cfg: ModelConfig, n: int) -> list[tuple[str, tuple[str, str]]]:
    """Ordered (kind, labels) list for step n of the chain picture.

    Step 1 is system collisions only; later steps run the ancilla-ancilla
    window first, then the system collisions with the next fresh block.
    """
    if n < 1:
        raise ValueError(f"step index must be >= 1, got {n}")
    d = cfg.depth
    plan: list[tuple[str, tuple[str, str]]] = []
    if n > 1:
        lo = (n - 2) * d + 1
        for i, j in cfg.aa_order():
            plan.append(("aa", (f"E{lo + i}", f"E{lo + j}")))
    for i in range((n - 1) * d + 1, n * d + 1):
        plan.append(("sa", ("S", f"E{i}")))
    return plan


def step_operator(cfg: ModelConfig, n: int) -> list[Collision]:
    """The ordered collision list applied at step n of the full chain."""
    unitaries = {
        "sa": collision_unitary(cfg.sa_coupling, cfg.tau_sa),
        "aa": collision_unitary(cfg.aa_coupling, cfg.tau_aa),
    }
    return [Collision(kind, targets, unitaries[kind]) for kind, targets in _collision_plan(cfg, n)]


@dataclass(frozen=True)
class StepState:
    """Snapshot after the system collisions of one step.

    ``finals`` maps chain ancilla index -> its state frozen after its last
    interaction, for every ancilla that has already completed all of its
    collisions at this snapshot (chain indices 1 .. (step-1)*depth).
    """

    step: int
    register: LabeledRegister
    finals: Mapping[int, np.ndarray]


@dataclass
class Trajectory:
    """Per-step record of a run: reduced system states plus extras."""

    scheme: SchemeId
    config: ModelConfig
    system_states: list[np.ndarray]
    registers: list[LabeledRegister] | None = None
    ancilla_finals: dict[int, np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self.system_states)


def max_full_chain_steps(cfg: ModelConfig, max_qubits: int = DEFAULT_MAX_QUBITS) -> int:
    return (max_qubits - 1) // cfg.depth


def _iter_full_chain(cfg: ModelConfig, max_qubits: int) -> Iterator[StepState]:
    total = 1 + cfg.depth * cfg.steps
    if total > max_qubits:
        raise CapacityError(
            f"full chain needs {total} qubits for {cfg.steps} steps at depth {cfg.depth}; "
            f"at most {max_full_chain_steps(cfg, max_qubits)} steps fit in {max_qubits} qubits"
        )
    count = cfg.depth * cfg.steps
    labels = ("S",) + tuple(f"E{i}" for i in range(1, count + 1))
    state = tensor_product(
        cfg.system_init, *([cfg.ancilla_init] * count), max_qubits=max_qubits
    )
    reg = LabeledRegister(state, labels)
    yield StepState(0, reg, {})
    unitaries = {
        "sa": collision_unitary(cfg.sa_coupling, cfg.tau_sa),
        "aa": collision_unitary(cfg.aa_coupling, cfg.tau_aa),
    }
    for n in range(1, cfg.steps + 1):
        for kind, targets in _collision_plan(cfg, n):
            reg = apply_on(reg, targets, unitaries[kind])
        yield StepState(n, reg, {})


def _iter_erase_a(cfg: ModelConfig) -> Iterator[StepState]:
    sa_u = collision_unitary(cfg.sa_coupling, cfg.tau_sa)
    aa_u = collision_unitary(cfg.aa_coupling, cfg.tau_aa)
    anc = cfg.ancilla_init
    reg = make_register([("S", cfg.system_init), ("E1", anc)])
    yield StepState(0, reg, {})
    finals: dict[int, np.ndarray] = {}
    for n in range(1, cfg.steps + 1):
        if n > 1:
            old, new = f"E{n - 1}", f"E{n}"
            # Erase the system-ancilla correlations, then let the bare
            # ancilla marginal carry the imprint into the fresh one.
            # Marginals are renormalized: tensoring them back together
            # would otherwise double the trace round-off every step.
            rho_s = _renormalized(reduced_state(reg, ("S",)))
            sigma = _renormalized(reduced_state(reg, (old,)))
            pair = make_register([(old, sigma), (new, anc)])
            pair = apply_on(pair, (old, new), aa_u)
            finals[n - 1] = reduced_state(pair, (old,))
            sigma_next = _renormalized(reduced_state(pair, (new,)))
            reg = make_register([("S", rho_s), (new, sigma_next)])
        reg = apply_on(reg, ("S", f"E{n}"), sa_u)
        yield StepState(n, reg, dict(finals))


def _iter_erase_b(cfg: ModelConfig) -> Iterator[StepState]:
    sa_u = collision_unitary(cfg.sa_coupling, cfg.tau_sa)
    aa_u = collision_unitary(cfg.aa_coupling, cfg.tau_aa)
    anc = cfg.ancilla_init
    reg = make_register([("S", cfg.system_init), ("E1", anc)])
    yield StepState(0, reg, {})
    finals: dict[int, np.ndarray] = {}
    for n in range(1, cfg.steps + 1):
        if n > 1:
            old, new = f"E{n - 1}", f"E{n}"
            reg = adjoin(reg, new, anc)
            reg = apply_on(reg, (old, new), aa_u)
            # The old ancilla never interacts again: freeze it and drop it.
            finals[n - 1] = reduced_state(reg, (old,))
            reg = partial_trace(reg, ("S", new))
        reg = apply_on(reg, ("S", f"E{n}"), sa_u)
        yield StepState(n, reg, dict(finals))


def _iter_erase_c(cfg: ModelConfig) -> Iterator[StepState]:
    sa_u = collision_unitary(cfg.sa_coupling, cfg.tau_sa)
    aa_u = collision_unitary(cfg.aa_coupling, cfg.tau_aa)
    anc = cfg.ancilla_init
    reg = make_register([("S", cfg.system_init), ("E1", anc)])
    yield StepState(0, reg, {})
    finals: dict[int, np.ndarray] = {}
    for n in range(1, cfg.steps + 1):
        if n > 1:
            old, new = f"E{n - 1}", f"E{n}"
            reg = adjoin(reg, new, anc)
            if n > 2:
                # Trace is postponed one step relative to the three-qubit
                # scheme: the next-to-last ancilla leaves only now.
                stale = f"E{n - 2}"
                finals[n - 2] = reduced_state(reg, (stale,))
                reg = partial_trace(reg, ("S", old, new))
            reg = apply_on(reg, (old, new), aa_u)
        reg = apply_on(reg, ("S", f"E{n}"), sa_u)
        yield StepState(n, reg, dict(finals))


def _iter_embedded(cfg: ModelConfig) -> Iterator[StepState]:
    d = cfg.depth
    sa_u = collision_unitary(cfg.sa_coupling, cfg.tau_sa)
    aa_u = collision_unitary(cfg.aa_coupling, cfg.tau_aa)
    anc = cfg.ancilla_init
    mem = tuple(f"M{i}" for i in range(1, d + 1))
    fresh = tuple(f"F{i}" for i in range(1, d + 1))
    parts = [("S", cfg.system_init)]
    parts += [(label, anc) for label in mem + fresh]
    reg = make_register(parts)
    yield StepState(0, reg, {})
    # Window offsets 0..d-1 are the memory slots (oldest first); offset d
    # is the incoming fresh ancilla, mirroring the chain ordering.
    window = mem + (fresh[0],)
    finals: dict[int, np.ndarray] = {}
    for n in range(1, cfg.steps + 1):
        for label in mem:
            reg = apply_on(reg, ("S", label), sa_u)
        yield StepState(n, reg, dict(finals))
        for i, j in cfg.aa_order():
            reg = apply_on(reg, (window[i], window[j]), aa_u)
        swap = swap_unitary()
        for m_label, f_label in zip(mem, fresh):
            reg = apply_on(reg, (m_label, f_label), swap)
        # After the swaps the fresh slots hold the outgoing chain
        # ancillas in their final states; record, then refresh.
        for i, f_label in enumerate(fresh, start=1):
            finals[(n - 1) * d + i] = reduced_state(reg, (f_label,))
        reg = partial_trace(reg, ("S",) + mem)
        for f_label in fresh:
            reg = adjoin(reg, f_label, anc)


def iter_steps(
    cfg: ModelConfig, scheme: SchemeId, max_qubits: int = DEFAULT_MAX_QUBITS
) -> Iterator[StepState]:
    """Lazily yield the post-collision snapshot of every step (0..steps)."""
    if scheme is SchemeId.FULL_CHAIN:
        return _iter_full_chain(cfg, max_qubits)
    if scheme in (SchemeId.ERASE_A, SchemeId.ERASE_B, SchemeId.ERASE_C):
        if cfg.depth != 1:
            raise UnsupportedConfigurationError(
                f"{scheme.value} is defined for depth 1 only, got depth {cfg.depth}"
            )
        return {
            SchemeId.ERASE_A: _iter_erase_a,
            SchemeId.ERASE_B: _iter_erase_b,
            SchemeId.ERASE_C: _iter_erase_c,
        }[scheme](cfg)
    if scheme is SchemeId.EMBEDDED:
        if cfg.depth not in (1, 2):
            raise UnsupportedConfigurationError(
                f"embedded representation covers depth 1 and 2, got depth {cfg.depth}"
            )
        return _iter_embedded(cfg)
    raise ValueError(f"unknown scheme {scheme!r}")


def evolve(
    cfg: ModelConfig,
    scheme: SchemeId,
    *,
    record_registers: bool = False,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> Trajectory:
    """Run a scheme and collect its per-step reduced system states."""
    states: list[np.ndarray] = []
    registers: list[LabeledRegister] | None = [] if record_registers else None
    finals: dict[int, np.ndarray] = {}
    for st in iter_steps(cfg, scheme, max_qubits):
        states.append(reduced_state(st.register, ("S",)))
        if registers is not None:
            registers.append(st.register)
        finals = dict(st.finals)
    return Trajectory(scheme, cfg, states, registers, finals)


def evolve_full_chain(cfg: ModelConfig, **kwargs) -> Trajectory:
    """Exact dynamics with every ancilla retained; the brute-force oracle."""
    return evolve(cfg, SchemeId.FULL_CHAIN, **kwargs)


def evolve_scheme(cfg: ModelConfig, scheme: SchemeId, **kwargs) -> Trajectory:
    """Run one of the bounded-register erasure schemes (depth 1 only)."""
    if scheme not in (SchemeId.ERASE_A, SchemeId.ERASE_B, SchemeId.ERASE_C):
        raise ValueError(f"evolve_scheme expects an erasure scheme, got {scheme!r}")
    return evolve(cfg, scheme, **kwargs)


def evolve_embedded(cfg: ModelConfig, **kwargs) -> Trajectory:
    """Run the fixed-register memory embedding (depth 1 or 2)."""
    return evolve(cfg, SchemeId.EMBEDDED, **kwargs)
