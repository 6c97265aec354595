"""Thermodynamic bookkeeping over collision trajectories.

Decomposes the system entropy change into a correlation term, an
environment-distortion term and a heat-like term, tracks system and
environment heat, and quantifies how tightly the heat flux follows the
trace-distance flow for energy-preserving couplings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

import numpy as np

from .diagnostics import StatePair
from .engine import (
    ModelConfig,
    SchemeId,
    StepState,
    UnsupportedConfigurationError,
    evolve,
    iter_steps,
)
from .qcore import (
    DEFAULT_MAX_QUBITS,
    LabeledRegister,
    SUPPORT_ATOL,
    apply_on,
    collision_unitary,
    free_hamiltonian,
    make_register,
    mutual_information,
    partial_trace,
    reduced_state,
    relative_entropy,
    tensor_product,
    trace_distance,
    von_neumann_entropy,
)

__all__ = [
    "DecompositionSource",
    "EntropyDecomposition",
    "HeatRecord",
    "FluxAlignmentReport",
    "entropy_decomposition",
    "entropy_decomposition_series",
    "heat_series",
    "flux_alignment",
]

# Mixing weight used to regularize a singular environment reference
# before taking its logarithm; small enough to stay far below the 1e-9
# identity tolerance, large enough to keep the log finite.
REGULARIZATION_EPS = 1e-12


class DecompositionSource(Enum):
    """Which state supplies the environment part of the decomposition."""

    FULL_CHAIN = "full-chain"
    TWO_ANCILLA_TOY = "two-ancilla-toy"
    ERASE_B = "erase-b"
    ERASE_C = "erase-c"


@dataclass(frozen=True)
class EntropyDecomposition:
    """Entropy-change budget of one step.

    On a true global state (nothing traced away), ``delta_s_system``
    equals ``s_corr + s_env + q_term``; on a truncated register the sum
    generally drifts away from it. ``minus_delta_s_env`` is the
    regularization-free combination s_env + q_term, always well defined.
    When the initial environment is singular the log is taken against a
    slightly mixed reference and ``q_regularized`` is set.
    """

    step: int
    delta_s_system: float
    s_corr: float
    s_env: float
    q_term: float
    minus_delta_s_env: float
    delta_env_energy: float
    q_regularized: bool

    @property
    def decomposition_sum(self) -> float:
        return self.s_corr + self.s_env + self.q_term

    @property
    def identity_residual(self) -> float:
        return self.delta_s_system - self.decomposition_sum


@dataclass(frozen=True)
class HeatRecord:
    """Heat drawn from the system and absorbed by the environment.

    ``q_system`` is positive when the system's mean energy has dropped;
    for energy-preserving (jx = jy) couplings the two entries cancel.
    """

    step: int
    q_system: float
    q_environment: float


def _iter_two_ancilla_toy(cfg: ModelConfig) -> Iterator[StepState]:
    """Closed three-qubit model: the system alternates between two
    ancillas, which collide with each other after every system collision.
    Nothing is ever traced away, so the decomposition identity is exact.
    """
    sa_u = collision_unitary(cfg.sa_coupling, cfg.tau_sa)
    aa_u = collision_unitary(cfg.aa_coupling, cfg.tau_aa)
    reg = make_register(
        [("S", cfg.system_init), ("E1", cfg.ancilla_init), ("E2", cfg.ancilla_init)]
    )
    yield StepState(0, reg, {})
    for n in range(1, cfg.steps + 1):
        target, other = ("E1", "E2") if n % 2 == 1 else ("E2", "E1")
        reg = apply_on(reg, ("S", target), sa_u)
        reg = apply_on(reg, (target, other), aa_u)
        yield StepState(n, reg, {})


def _source_steps(
    cfg: ModelConfig, source: DecompositionSource, max_qubits: int
) -> Iterator[StepState]:
    if source is DecompositionSource.TWO_ANCILLA_TOY:
        return _iter_two_ancilla_toy(cfg)
    scheme = {
        DecompositionSource.FULL_CHAIN: SchemeId.FULL_CHAIN,
        DecompositionSource.ERASE_B: SchemeId.ERASE_B,
        DecompositionSource.ERASE_C: SchemeId.ERASE_C,
    }[source]
    return iter_steps(cfg, scheme, max_qubits)


def _log_basis(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    eigs, vecs = np.linalg.eigh(sigma)
    return np.log(eigs), vecs


def entropy_decomposition_series(
    cfg: ModelConfig,
    source: DecompositionSource,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> list[EntropyDecomposition]:
    """Per-step entropy-change decomposition from the chosen source.

    The environment is whatever the source keeps next to the system: the
    whole chain, the toy's two ancillas, or the retained ancillas of an
    erasure scheme. The reference environment state is the corresponding
    number of fresh ancillas.
    """
    anc = cfg.ancilla_init
    h1 = free_hamiltonian(cfg.omega0)
    anc_energy = float(np.real(np.trace(h1 @ anc)))
    singular_ref = bool(np.linalg.eigvalsh(anc).min() < SUPPORT_ATOL)

    # Reference state, its log basis and entropy, cached per env size.
    ref_cache: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, float]] = {}

    def reference(m: int):
        if m not in ref_cache:
            ref = tensor_product(*([anc] * m))
            sigma = ref
            if singular_ref:
                dim = 2**m
                sigma = (1.0 - REGULARIZATION_EPS) * ref + REGULARIZATION_EPS * np.eye(dim) / dim
            log_eigs, vecs = _log_basis(sigma)
            ref_cache[m] = (ref, sigma, log_eigs, vecs, von_neumann_entropy(ref))
        return ref_cache[m]

    out: list[EntropyDecomposition] = []
    s_s0 = None
    i_0 = None
    for st in _source_steps(cfg, source, max_qubits):
        env_labels = tuple(label for label in st.register.labels if label != "S")
        rho_s = reduced_state(st.register, ("S",))
        s_s = von_neumann_entropy(rho_s)
        i_n = mutual_information(st.register, (("S",), env_labels))
        env = partial_trace(st.register, env_labels)
        if st.step == 0:
            s_s0 = s_s
            i_0 = i_n
        ref, sigma, log_eigs, vecs, s_ref = reference(len(env_labels))
        weights = np.real(np.einsum("ij,jk,ki->i", vecs.conj().T, env.state, vecs))
        sigma_weights = np.real(np.einsum("ij,jk,ki->i", vecs.conj().T, sigma, vecs))
        q_term = float((log_eigs * (weights - sigma_weights)).sum())
        s_env = relative_entropy(env.state, sigma)
        env_energy = sum(
            float(np.real(np.trace(h1 @ reduced_state(env, (label,)))))
            for label in env_labels
        )
        out.append(
            EntropyDecomposition(
                step=st.step,
                delta_s_system=s_s - s_s0,
                s_corr=i_n - i_0,
                s_env=s_env,
                q_term=q_term,
                minus_delta_s_env=s_ref - von_neumann_entropy(env.state),
                delta_env_energy=env_energy - len(env_labels) * anc_energy,
                q_regularized=singular_ref,
            )
        )
    return out


def entropy_decomposition(
    cfg: ModelConfig,
    n: int,
    source: DecompositionSource,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> EntropyDecomposition:
    """The decomposition at step n (runs the dynamics up to n)."""
    if n < 0 or n > cfg.steps:
        raise ValueError(f"step {n} outside 0..{cfg.steps}")
    series = entropy_decomposition_series(cfg.with_steps(n), source, max_qubits)
    return series[-1]


_HEAT_SOURCES = (SchemeId.FULL_CHAIN, SchemeId.ERASE_B, SchemeId.ERASE_C, SchemeId.EMBEDDED)


def heat_series(
    cfg: ModelConfig,
    source: SchemeId = SchemeId.FULL_CHAIN,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> list[HeatRecord]:
    """System and environment heat after each step.

    Ancillas that have completed all their collisions enter with their
    frozen final states; the ones still in play enter with their state
    right after the step's system collision. Sources must reproduce the
    exact reduced dynamics, so the two-qubit erasure scheme is excluded.
    """
    if source not in _HEAT_SOURCES:
        raise UnsupportedConfigurationError(
            f"heat bookkeeping needs an exact representation, not {source.value}"
        )
    h1 = free_hamiltonian(cfg.omega0)

    def energy(rho: np.ndarray) -> float:
        return float(np.real(np.trace(h1 @ rho)))

    e_anc = energy(cfg.ancilla_init)
    d = cfg.depth
    records: list[HeatRecord] = []
    e_s0 = 0.0
    for st in iter_steps(cfg, source, max_qubits):
        n = st.step
        e_s = energy(reduced_state(st.register, ("S",)))
        if n == 0:
            e_s0 = e_s
        finished_hi = max(0, (n - 1) * d)
        q_env = 0.0
        for k in range(1, finished_hi + 1):
            rho_k = st.finals.get(k)
            if rho_k is None:
                rho_k = reduced_state(st.register, (f"E{k}",))
            q_env += e_anc - energy(rho_k)
        for k in range(finished_hi + 1, n * d + 1):
            label = f"E{k}" if f"E{k}" in st.register.labels else f"M{k - finished_hi}"
            q_env += e_anc - energy(reduced_state(st.register, (label,)))
        records.append(HeatRecord(n, e_s0 - e_s, q_env))
    return records


@dataclass(frozen=True)
class FluxAlignmentReport:
    """Sign agreement between heat-flux and trace-distance increments.

    ``sign`` is the fixed relative sign that maximizes agreement over the
    active steps (those where both increments exceed the floor), and
    ``agreement_fraction`` the fraction of active steps it explains. A
    pair sitting at the steady state produces no active steps and is
    flagged degenerate.
    """

    sign: int
    agreement_fraction: float
    active_steps: int
    degenerate: bool
    q_system: tuple[float, ...]
    distances: tuple[float, ...]


def flux_alignment(
    cfg: ModelConfig,
    pair: StatePair,
    scheme: SchemeId = SchemeId.ERASE_B,
    increment_floor: float = 1e-10,
) -> FluxAlignmentReport:
    """Compare per-step heat flux against the trace-distance flow.

    Defined for energy-preserving (isotropic) system-ancilla couplings
    and thermal (sigma_z-diagonal) ancillas; the heat flux is taken from
    the first pair member's evolution.
    """
    if not cfg.sa_coupling.is_isotropic():
        raise UnsupportedConfigurationError(
            "flux alignment needs an isotropic system-ancilla coupling"
        )
    if abs(cfg.ancilla_init[0, 1]) > 1e-12:
        raise UnsupportedConfigurationError(
            "flux alignment needs thermal (sigma_z-diagonal) ancillas"
        )
    first = evolve(cfg.with_system(pair.first), scheme)
    second = evolve(cfg.with_system(pair.second), scheme)
    h1 = free_hamiltonian(cfg.omega0)
    e_series = [float(np.real(np.trace(h1 @ rho))) for rho in first.system_states]
    q_system = tuple(e_series[0] - e for e in e_series)
    distances = tuple(
        trace_distance(a, b) for a, b in zip(first.system_states, second.system_states)
    )
    dq = np.diff(q_system)
    dd = np.diff(distances)
    active = (np.abs(dq) > increment_floor) & (np.abs(dd) > increment_floor)
    n_active = int(active.sum())
    if n_active == 0:
        return FluxAlignmentReport(0, 0.0, 0, True, q_system, distances)
    same = int((np.sign(dq[active]) == np.sign(dd[active])).sum())
    if same >= n_active - same:
        sign, agree = 1, same
    else:
        sign, agree = -1, n_active - same
    return FluxAlignmentReport(sign, agree / n_active, n_active, False, q_system, distances)
