"""Dense few-qubit linear algebra for collision-model simulations.

States are plain complex numpy matrices. A multi-qubit register pairs a
state with an ordered tuple of subsystem labels so that collisions can
address qubits by name. All functions are pure: they return new arrays
and never mutate their inputs. Entropies are in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "IDENTITY_2",
    "GROUND",
    "EXCITED",
    "PLUS",
    "MINUS",
    "MAXIMALLY_MIXED",
    "DEFAULT_MAX_QUBITS",
    "CapacityError",
    "InvariantViolationError",
    "CouplingTriple",
    "QubitHamiltonianParams",
    "LabeledRegister",
    "check_density_operator",
    "check_unitary",
    "pure_state",
    "bloch_state",
    "num_qubits",
    "tensor_product",
    "make_register",
    "adjoin",
    "partial_trace",
    "reduced_state",
    "apply_on",
    "decorrelate",
    "mutual_information",
    "pair_hamiltonian",
    "collision_unitary",
    "swap_unitary",
    "partial_swap",
    "unitary_from_hamiltonian",
    "free_hamiltonian",
    "gibbs_qubit",
    "trace_distance",
    "von_neumann_entropy",
    "relative_entropy",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

GROUND = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
EXCITED = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
PLUS = np.full((2, 2), 0.5, dtype=complex)
MINUS = np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex)
MAXIMALLY_MIXED = 0.5 * np.eye(2, dtype=complex)

# Register capacity guard: 12 qubits keeps exact-chain runs in dense
# 4096x4096 matrices, which is the practical desk-scale ceiling.
DEFAULT_MAX_QUBITS = 12

HERMITICITY_ATOL = 1e-12
TRACE_ATOL = 1e-12
POSITIVITY_FLOOR = -1e-10
SUPPORT_ATOL = 1e-12
SUPPORT_WEIGHT_ATOL = 1e-10
ENTROPY_EIGENVALUE_FLOOR = 1e-15


class CapacityError(RuntimeError):
    """A register would exceed the configured qubit budget."""


class InvariantViolationError(ValueError):
    """A matrix failed a state or unitary invariant beyond tolerance."""


@dataclass(frozen=True)
class CouplingTriple:
    """Exchange energies (jx, jy, jz) of one pairwise collision."""

    jx: float
    jy: float
    jz: float

    def __post_init__(self) -> None:
        for name in ("jx", "jy", "jz"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvariantViolationError(f"coupling {name} must be finite, got {value!r}")

    def is_isotropic(self, atol: float = 1e-12) -> bool:
        return abs(self.jx - self.jy) <= atol and abs(self.jy - self.jz) <= atol


@dataclass(frozen=True)
class QubitHamiltonianParams:
    """Free-qubit Hamiltonian parameters; H = -omega0 * sigma_z."""

    omega0: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.omega0):
            raise InvariantViolationError(f"omega0 must be finite, got {self.omega0!r}")


def num_qubits(dim: int) -> int:
    """Number of qubits of a 2**k-dimensional space; rejects other dims."""
    if dim < 1 or dim & (dim - 1):
        raise InvariantViolationError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def check_density_operator(rho: np.ndarray, name: str = "state") -> None:
    """Validate hermiticity, unit trace and numerical positivity."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvariantViolationError(f"{name} must be a square matrix, got shape {rho.shape}")
    num_qubits(rho.shape[0])
    herm = np.abs(rho - rho.conj().T).max()
    if herm > HERMITICITY_ATOL:
        raise InvariantViolationError(f"{name} is not Hermitian (max deviation {herm:.3e})")
    tr = rho.trace()
    if abs(tr - 1.0) > TRACE_ATOL:
        raise InvariantViolationError(f"{name} trace {tr!r} differs from 1 beyond tolerance")
    smallest = float(np.linalg.eigvalsh(rho)[0])
    if smallest < POSITIVITY_FLOOR:
        raise InvariantViolationError(f"{name} has negative eigenvalue {smallest:.3e}")


def check_unitary(u: np.ndarray, name: str = "unitary") -> None:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise InvariantViolationError(f"{name} must be a square matrix, got shape {u.shape}")
    dev = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
    if dev > 1e-12:
        raise InvariantViolationError(f"{name} is not unitary (max deviation {dev:.3e})")


def pure_state(ket: Sequence[complex]) -> np.ndarray:
    """Density matrix |psi><psi| of a (normalized) state vector."""
    vec = np.asarray(ket, dtype=complex).ravel()
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise InvariantViolationError("cannot normalize the zero vector")
    vec = vec / norm
    return np.outer(vec, vec.conj())


def bloch_state(x: float, y: float, z: float) -> np.ndarray:
    """Qubit state (I + r.sigma)/2; the Bloch vector must fit in the ball."""
    r = math.sqrt(x * x + y * y + z * z)
    if r > 1.0 + 1e-12:
        raise InvariantViolationError(f"Bloch vector length {r} exceeds 1")
    return 0.5 * (IDENTITY_2 + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)


def tensor_product(*operators: np.ndarray, max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    """Kronecker product of operators, guarded by the register capacity."""
    if not operators:
        raise ValueError("tensor_product needs at least one operator")
    total = 0
    for op in operators:
        total += num_qubits(np.asarray(op).shape[0])
    if total > max_qubits:
        raise CapacityError(f"product of {total} qubits exceeds the {max_qubits}-qubit capacity")
    out = np.asarray(operators[0], dtype=complex)
    for op in operators[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


@dataclass(frozen=True)
class LabeledRegister:
    """A joint state together with the ordered labels of its tensor factors."""

    state: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in {self.labels}")
        if self.state.shape != (2 ** len(self.labels),) * 2:
            raise ValueError(
                f"state shape {self.state.shape} does not match {len(self.labels)} qubit labels"
            )

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    def positions(self, labels: Iterable[str]) -> list[int]:
        out = []
        for label in labels:
            try:
                out.append(self.labels.index(label))
            except ValueError:
                raise ValueError(f"unknown label {label!r}; register has {self.labels}") from None
        return out


def make_register(
    parts: Sequence[tuple[str, np.ndarray]], max_qubits: int = DEFAULT_MAX_QUBITS
) -> LabeledRegister:
    """Build a product register from (label, single-qubit state) pairs."""
    labels = tuple(label for label, _ in parts)
    state = tensor_product(*(rho for _, rho in parts), max_qubits=max_qubits)
    return LabeledRegister(state, labels)


def adjoin(
    reg: LabeledRegister,
    label: str,
    rho: np.ndarray,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> LabeledRegister:
    """Append one uncorrelated qubit at the end of the register."""
    state = tensor_product(reg.state, rho, max_qubits=max_qubits)
    return LabeledRegister(state, reg.labels + (label,))


def partial_trace(reg: LabeledRegister, keep: Iterable[str]) -> LabeledRegister:
    """Trace out every subsystem not in ``keep``.

    The kept labels retain their original register order regardless of the
    order they are listed in.
    """
    keep_set = set(keep)
    unknown = keep_set - set(reg.labels)
    if unknown:
        raise ValueError(f"unknown labels {sorted(unknown)}; register has {reg.labels}")
    if not keep_set:
        raise ValueError("must keep at least one subsystem")
    k = reg.n_qubits
    kept = [i for i, label in enumerate(reg.labels) if label in keep_set]
    tensor = reg.state.reshape((2,) * (2 * k))
    row = list(range(k))
    col = [i if i not in kept else k + i for i in range(k)]
    out = [i for i in kept] + [k + i for i in kept]
    reduced = np.einsum(tensor, row + col, out)
    m = len(kept)
    labels = tuple(reg.labels[i] for i in kept)
    return LabeledRegister(reduced.reshape(2**m, 2**m), labels)


def reduced_state(reg: LabeledRegister, keep: Iterable[str]) -> np.ndarray:
    return partial_trace(reg, keep).state


def apply_on(reg: LabeledRegister, targets: Sequence[str], u: np.ndarray) -> LabeledRegister:
    """Conjugate the register by a unitary acting on the named qubits.

    ``targets`` fixes which register qubit each tensor factor of ``u``
    addresses, in order.
    """
    pos = reg.positions(targets)
    nt = len(pos)
    u = np.asarray(u, dtype=complex)
    if u.shape != (2**nt, 2**nt):
        raise ValueError(f"unitary shape {u.shape} does not match {nt} target qubits")
    k = reg.n_qubits
    u_t = u.reshape((2,) * (2 * nt))
    rho = reg.state.reshape((2,) * (2 * k))
    rho = np.tensordot(u_t, rho, axes=(list(range(nt, 2 * nt)), pos))
    rho = np.moveaxis(rho, range(nt), pos)
    cpos = [k + p for p in pos]
    rho = np.tensordot(u_t.conj(), rho, axes=(list(range(nt, 2 * nt)), cpos))
    rho = np.moveaxis(rho, range(nt), cpos)
    return LabeledRegister(np.ascontiguousarray(rho.reshape(2**k, 2**k)), reg.labels)


def decorrelate(
    reg: LabeledRegister, cut: tuple[Sequence[str], Sequence[str]]
) -> LabeledRegister:
    """Replace the register state by the product of the two cut marginals.

    Erases every correlation across the cut while leaving both marginals
    untouched. Output labels are ordered first part then second part.
    """
    part_a, part_b = (tuple(cut[0]), tuple(cut[1]))
    if sorted(part_a + part_b) != sorted(reg.labels) or set(part_a) & set(part_b):
        raise ValueError(f"cut {cut!r} does not partition labels {reg.labels}")
    rho_a = partial_trace(reg, part_a)
    rho_b = partial_trace(reg, part_b)
    state = tensor_product(rho_a.state, rho_b.state, max_qubits=reg.n_qubits)
    # Tensoring the marginals doubles any trace or anti-Hermitian
    # round-off; restore both invariants so iterated decorrelation
    # cannot amplify them exponentially.
    state = 0.5 * (state + state.conj().T)
    state *= reg.state.trace().real / state.trace().real
    return LabeledRegister(state, rho_a.labels + rho_b.labels)


def mutual_information(reg: LabeledRegister, cut: tuple[Sequence[str], Sequence[str]]) -> float:
    """S(A) + S(B) - S(AB) across the given bipartition, in nats."""
    part_a, part_b = (tuple(cut[0]), tuple(cut[1]))
    if sorted(part_a + part_b) != sorted(reg.labels) or set(part_a) & set(part_b):
        raise ValueError(f"cut {cut!r} does not partition labels {reg.labels}")
    s_a = von_neumann_entropy(reduced_state(reg, part_a))
    s_b = von_neumann_entropy(reduced_state(reg, part_b))
    s_ab = von_neumann_entropy(reg.state)
    return s_a + s_b - s_ab


def pair_hamiltonian(coupling: CouplingTriple) -> np.ndarray:
    """Two-qubit exchange Hamiltonian -(1/2) sum_a J_a sigma_a x sigma_a."""
    return -0.5 * (
        coupling.jx * np.kron(SIGMA_X, SIGMA_X)
        + coupling.jy * np.kron(SIGMA_Y, SIGMA_Y)
        + coupling.jz * np.kron(SIGMA_Z, SIGMA_Z)
    )


def unitary_from_hamiltonian(h: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(-i h t) by eigendecomposition of the symmetrized generator."""
    h = np.asarray(h, dtype=complex)
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def collision_unitary(coupling: CouplingTriple, tau: float) -> np.ndarray:
    """Unitary of one pairwise collision of duration tau."""
    if tau < 0:
        raise ValueError(f"collision time must be non-negative, got {tau}")
    return unitary_from_hamiltonian(pair_hamiltonian(coupling), tau)


def swap_unitary() -> np.ndarray:
    """Two-qubit SWAP: S|ab> = |ba>."""
    s = np.zeros((4, 4), dtype=complex)
    s[0, 0] = s[3, 3] = s[1, 2] = s[2, 1] = 1.0
    return s


def partial_swap(angle: float) -> np.ndarray:
    """cos(angle) I + i sin(angle) SWAP.

    Equals the isotropic collision unitary up to a global phase; the sign
    of the swap component follows exp(-i H tau) for the exchange
    Hamiltonian above.
    """
    return math.cos(angle) * np.eye(4, dtype=complex) + 1j * math.sin(angle) * swap_unitary()


def free_hamiltonian(h: QubitHamiltonianParams | float = QubitHamiltonianParams()) -> np.ndarray:
    """Single-qubit free Hamiltonian -omega0 sigma_z."""
    omega0 = h.omega0 if isinstance(h, QubitHamiltonianParams) else float(h)
    return -omega0 * SIGMA_Z


def gibbs_qubit(beta: float, h: QubitHamiltonianParams | float = QubitHamiltonianParams()) -> np.ndarray:
    """Thermal qubit exp(-beta H)/Z for H = -omega0 sigma_z.

    Ground state |0> has energy -omega0, so beta -> inf pins the qubit to
    |0><0| (for omega0 > 0). Computed in a form stable for large beta.
    """
    if beta < 0:
        raise ValueError(f"inverse temperature must be non-negative, got {beta}")
    omega0 = h.omega0 if isinstance(h, QubitHamiltonianParams) else float(h)
    x = beta * omega0
    p0 = 1.0 / (1.0 + math.exp(-2.0 * x)) if x >= 0 else math.exp(2.0 * x) / (1.0 + math.exp(2.0 * x))
    return np.array([[p0, 0.0], [0.0, 1.0 - p0]], dtype=complex)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of a - b; in [0, 1] for density operators."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    eigs = np.linalg.eigvalsh(a - b)
    return 0.5 * float(np.abs(eigs).sum())


def _entropy_from_eigenvalues(eigs: np.ndarray) -> float:
    lam = np.clip(eigs, 0.0, 1.0)
    lam = lam[lam > ENTROPY_EIGENVALUE_FLOOR]
    return float(-(lam * np.log(lam)).sum())


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-Tr rho ln rho with the 0 ln 0 = 0 convention, in nats."""
    return _entropy_from_eigenvalues(np.linalg.eigvalsh(rho))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Tr rho (ln rho - ln sigma), in nats.

    Returns ``math.inf`` when rho puts weight outside sigma's support
    instead of raising; callers can branch on the flagged value.
    """
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    sig_eigs, sig_vecs = np.linalg.eigh(sigma)
    weights = np.real(np.einsum("ij,jk,ki->i", sig_vecs.conj().T, rho, sig_vecs))
    outside = sig_eigs < SUPPORT_ATOL
    if np.any(weights[outside] > SUPPORT_WEIGHT_ATOL):
        return math.inf
    cross = float((weights[~outside] * np.log(sig_eigs[~outside])).sum())
    return -von_neumann_entropy(rho) - cross
