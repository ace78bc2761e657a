"""Exact statevector and density-matrix simulation of small gate circuits.

Conventions used bit-exactly throughout the package:

* Qubit ordering is little-endian: qubit 0 is the least significant bit of a
  basis-state index, so ``|q_{n-1} ... q_1 q_0>`` lives at index
  ``sum_i q_i * 2**i``.
* Rotation gates follow ``RY(theta) = exp(-i theta Y / 2)`` and likewise for
  RX and RZ.
* Two-qubit gate matrices are written in the ``|t0 t1>`` basis where the
  first listed target is the most significant bit (CNOT control first).

States are immutable from the caller's perspective; every operation returns
a new :class:`QuantumState`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STATEVECTOR_QUBIT_CAP = 24
DENSITY_QUBIT_CAP = 14

NORM_ATOL = 1e-10
HERMITIAN_ATOL = 1e-10
PSD_EIG_FLOOR = -1e-9
IMAG_RESIDUE_ATOL = 1e-10

_INV_SQRT2 = 1.0 / np.sqrt(2.0)

_FIXED_GATES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
}

ROTATION_KINDS = ("RX", "RY", "RZ")
TWO_QUBIT_KINDS = ("CNOT", "CZ")
GATE_KINDS = ("H", "X") + ROTATION_KINDS + TWO_QUBIT_KINDS

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _rotation_matrix(kind: str, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "RY":
        return np.array([[c, -s], [s, c]])
    if kind == "RZ":
        return np.array([[np.exp(-1j * theta / 2.0), 0], [0, np.exp(1j * theta / 2.0)]])
    raise ValueError(f"unknown rotation kind {kind!r}")


@dataclass(frozen=True)
class Gate:
    """A single gate instruction: kind, target qubits, optional angle."""

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"gate targets must be distinct, got {self.targets}")
        if any(t < 0 for t in self.targets):
            raise ValueError(f"gate targets must be nonnegative, got {self.targets}")
        expected = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.targets) != expected:
            raise ValueError(
                f"{self.kind} acts on {expected} qubit(s), got targets {self.targets}"
            )
        if self.kind in ROTATION_KINDS:
            if self.angle is None:
                raise ValueError(f"{self.kind} requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ValueError(f"{self.kind} does not take an angle")

    def matrix(self) -> np.ndarray:
        """Unitary matrix of the gate (2x2 or 4x4, first target = MSB)."""
        if self.kind in ROTATION_KINDS:
            return _rotation_matrix(self.kind, self.angle)
        return _FIXED_GATES[self.kind].copy()

    def inverse(self) -> "Gate":
        if self.kind in ROTATION_KINDS:
            return Gate(self.kind, self.targets, -self.angle)
        return self  # H, X, CNOT, CZ are involutions

    def shifted(self, offset: int) -> "Gate":
        return Gate(self.kind, tuple(t + offset for t in self.targets), self.angle)


@dataclass
class Circuit:
    """An ordered gate list over a fixed-size qubit register."""

    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        for g in self.gates:
            self._check(g)

    def _check(self, gate: Gate):
        if max(gate.targets) >= self.n_qubits:
            raise ValueError(
                f"gate {gate.kind} targets {gate.targets} exceed register of "
                f"{self.n_qubits} qubits"
            )

    def add(self, gate: Gate) -> "Circuit":
        self._check(gate)
        self.gates.append(gate)
        return self

    # Small builder surface so circuits read like the math.
    def h(self, q):
        return self.add(Gate("H", (q,)))

    def x(self, q):
        return self.add(Gate("X", (q,)))

    def rx(self, q, angle):
        return self.add(Gate("RX", (q,), angle))

    def ry(self, q, angle):
        return self.add(Gate("RY", (q,), angle))

    def rz(self, q, angle):
        return self.add(Gate("RZ", (q,), angle))

    def cnot(self, control, target):
        return self.add(Gate("CNOT", (control, target)))

    def cz(self, a, b):
        return self.add(Gate("CZ", (a, b)))

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def inverse(self) -> "Circuit":
        """Gate-wise inverse in reversed order."""
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def embedded(self, offset: int, n_qubits: int) -> "Circuit":
        """The same circuit acting on qubits ``offset..`` of a larger register."""
        return Circuit(n_qubits, [g.shifted(offset) for g in self.gates])


class QuantumState:
    """A pure statevector or a density matrix over a little-endian register."""

    def __init__(self, array: np.ndarray, density: bool, _validate: bool = True):
        array = np.asarray(array, dtype=complex)
        self.is_density = bool(density)
        if density:
            if array.ndim != 2 or array.shape[0] != array.shape[1]:
                raise ValueError("density matrix must be square")
            self.n_qubits = _qubits_from_dim(array.shape[0])
        else:
            if array.ndim != 1:
                raise ValueError("statevector must be one-dimensional")
            self.n_qubits = _qubits_from_dim(array.shape[0])
        self._array = array
        if _validate:
            self.validate()

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero_state(cls, n_qubits: int, density: bool = False) -> "QuantumState":
        _check_cap(n_qubits, density)
        if density:
            rho = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
            rho[0, 0] = 1.0
            return cls(rho, density=True, _validate=False)
        vec = np.zeros(2**n_qubits, dtype=complex)
        vec[0] = 1.0
        return cls(vec, density=False, _validate=False)

    @classmethod
    def from_statevector(cls, vector) -> "QuantumState":
        return cls(np.asarray(vector, dtype=complex), density=False)

    @classmethod
    def from_density_matrix(cls, matrix) -> "QuantumState":
        return cls(np.asarray(matrix, dtype=complex), density=True)

    # -- accessors -----------------------------------------------------------
    @property
    def vector(self) -> np.ndarray:
        if self.is_density:
            raise TypeError("state is a density matrix, not a statevector")
        return self._array

    @property
    def matrix(self) -> np.ndarray:
        if not self.is_density:
            raise TypeError("state is a statevector, not a density matrix")
        return self._array

    def to_density(self) -> "QuantumState":
        if self.is_density:
            return self
        _check_cap(self.n_qubits, density=True)
        v = self._array
        return QuantumState(np.outer(v, v.conj()), density=True, _validate=False)

    def probabilities(self) -> np.ndarray:
        """Computational-basis probabilities over the full register."""
        if self.is_density:
            p = np.real(np.diag(self._array)).copy()
        else:
            p = np.abs(self._array) ** 2
        return p

    # -- validation ----------------------------------------------------------
    def validate(self, check_psd: bool = False, atol: float | None = None):
        """Check norm/trace/Hermiticity invariants; eigenvalues only on request."""
        atol = NORM_ATOL if atol is None else atol
        if self.is_density:
            rho = self._array
            if abs(np.trace(rho).real - 1.0) > atol or abs(np.trace(rho).imag) > atol:
                raise ValueError(f"density matrix trace {np.trace(rho)} is not 1")
            if not np.allclose(rho, rho.conj().T, atol=HERMITIAN_ATOL):
                raise ValueError("density matrix is not Hermitian")
            if check_psd:
                lo = np.linalg.eigvalsh(rho).min()
                if lo < PSD_EIG_FLOOR:
                    raise ValueError(f"density matrix min eigenvalue {lo} < {PSD_EIG_FLOOR}")
        else:
            norm = np.linalg.norm(self._array)
            if abs(norm - 1.0) > atol:
                raise ValueError(f"statevector norm {norm} is not 1")
        return self


def _qubits_from_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def _check_cap(n_qubits: int, density: bool):
    cap = DENSITY_QUBIT_CAP if density else STATEVECTOR_QUBIT_CAP
    if n_qubits > cap:
        kind = "density-matrix" if density else "statevector"
        raise ValueError(f"{n_qubits} qubits exceeds the {cap}-qubit {kind} cap")


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Paulis, identity omitted.

    ``ops`` maps qubit index to one of 'X', 'Y', 'Z'; qubits not listed carry
    the identity.
    """

    ops: tuple[tuple[int, str], ...]

    def __post_init__(self):
        seen = set()
        for q, label in self.ops:
            if label not in ("X", "Y", "Z"):
                raise ValueError(f"invalid Pauli label {label!r}")
            if q in seen:
                raise ValueError(f"duplicate qubit {q} in Pauli string")
            seen.add(q)
        object.__setattr__(self, "ops", tuple(sorted(self.ops)))

    @classmethod
    def from_dict(cls, mapping: dict[int, str]) -> "PauliString":
        return cls(tuple((int(q), lbl) for q, lbl in mapping.items() if lbl != "I"))

    @classmethod
    def single(cls, qubit: int, label: str) -> "PauliString":
        return cls.from_dict({qubit: label})

    @classmethod
    def pair(cls, q0: int, l0: str, q1: int, l1: str) -> "PauliString":
        return cls.from_dict({q0: l0, q1: l1})

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.ops)


# ---------------------------------------------------------------------------
# tensor machinery
# ---------------------------------------------------------------------------


def _apply_unitary_axes(tensor: np.ndarray, u: np.ndarray, axes: list[int]) -> np.ndarray:
    """Apply ``u`` to the given axes of a [2]*m tensor; axes[0] is the MSB of u."""
    k = len(axes)
    t = np.moveaxis(tensor, axes, range(k))
    shape = t.shape
    t = u @ t.reshape(2**k, -1)
    t = t.reshape(shape)
    return np.moveaxis(t, range(k), axes)


def _sv_apply(vec: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    axes = [n - 1 - q for q in gate.targets]
    psi = _apply_unitary_axes(vec.reshape([2] * n), gate.matrix(), axes)
    return psi.reshape(-1)


def _dm_apply(rho: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    u = gate.matrix()
    t = rho.reshape([2] * (2 * n))
    row_axes = [n - 1 - q for q in gate.targets]
    col_axes = [2 * n - 1 - q for q in gate.targets]
    t = _apply_unitary_axes(t, u, row_axes)
    t = _apply_unitary_axes(t, u.conj(), col_axes)
    return t.reshape(2**n, 2**n)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def apply_gate(state: QuantumState, gate: Gate) -> QuantumState:
    """Apply one gate: ``U|psi>`` for statevectors, ``U rho U^dag`` for matrices."""
    n = state.n_qubits
    if max(gate.targets) >= n:
        raise ValueError(f"gate targets {gate.targets} out of range for {n} qubits")
    if state.is_density:
        return QuantumState(_dm_apply(state.matrix, gate, n), density=True, _validate=False)
    return QuantumState(_sv_apply(state.vector, gate, n), density=False, _validate=False)


def run_circuit(circuit: Circuit, state: QuantumState | None = None) -> QuantumState:
    """Apply a circuit's gates in order, starting from |0...0> by default."""
    if state is None:
        state = QuantumState.zero_state(circuit.n_qubits)
    if state.n_qubits != circuit.n_qubits:
        raise ValueError(
            f"circuit register ({circuit.n_qubits}) does not match state "
            f"register ({state.n_qubits})"
        )
    for gate in circuit:
        state = apply_gate(state, gate)
    return state


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """The full unitary matrix of a circuit (little-endian basis)."""
    n = circuit.n_qubits
    if n > 14:
        raise ValueError("circuit_unitary is limited to 14 qubits")
    u = np.eye(2**n, dtype=complex)
    # Columns are statevectors; reuse the axis machinery with a batch axis.
    for gate in circuit:
        t = u.reshape([2] * n + [2**n])
        axes = [n - 1 - q for q in gate.targets]
        t = _apply_unitary_axes(t, gate.matrix(), axes)
        u = t.reshape(2**n, 2**n)
    return u


def tensor(low: QuantumState, high: QuantumState) -> QuantumState:
    """Tensor product with ``low`` on qubits 0..n_low-1 and ``high`` above them."""
    if low.is_density != high.is_density:
        raise ValueError("cannot tensor a statevector with a density matrix")
    if low.is_density:
        _check_cap(low.n_qubits + high.n_qubits, density=True)
        return QuantumState(np.kron(high.matrix, low.matrix), density=True, _validate=False)
    _check_cap(low.n_qubits + high.n_qubits, density=False)
    return QuantumState(np.kron(high.vector, low.vector), density=False, _validate=False)


def partial_trace(state: QuantumState, keep) -> QuantumState:
    """Reduced density matrix over ``keep`` (ascending qubit order, little-endian)."""
    keep = sorted(set(int(q) for q in keep))
    n = state.n_qubits
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[-1] >= n or keep[0] < 0:
        raise ValueError(f"keep qubits {keep} out of range for {n} qubits")
    k = len(keep)
    # Axis of qubit q in a [2]*n tensor is n-1-q; we want the largest kept
    # qubit as the most significant axis of the reduced register.
    front = [n - 1 - q for q in reversed(keep)]
    if state.is_density:
        t = state.matrix.reshape([2] * (2 * n))
        row = np.array(front)
        col = row + n
        # Layout after the move: kept rows | traced rows | kept cols | traced cols.
        t = np.moveaxis(t, list(row) + list(col), list(range(k)) + list(range(n, n + k)))
        t = t.reshape(2**k, 2 ** (n - k), 2**k, 2 ** (n - k))
        rho = np.einsum("aibi->ab", t)
    else:
        t = np.moveaxis(state.vector.reshape([2] * n), front, range(k))
        a = t.reshape(2**k, -1)
        rho = a @ a.conj().T
    return QuantumState(rho, density=True, _validate=False)


def marginal_distribution(probs: np.ndarray, n_bits: int, keep) -> np.ndarray:
    """Marginalize a distribution over n-bit strings onto the kept bits.

    Bit ``keep[i]`` (ascending) becomes bit ``i`` of the result index.
    """
    keep = sorted(set(int(b) for b in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[-1] >= n_bits or keep[0] < 0:
        raise ValueError(f"keep bits {keep} out of range for {n_bits}")
    t = np.asarray(probs).reshape([2] * n_bits)
    drop_axes = tuple(n_bits - 1 - b for b in range(n_bits) if b not in keep)
    t = t.sum(axis=drop_axes) if drop_axes else t
    # Remaining axes are ordered most-significant-first by descending bit index.
    return t.reshape(-1)


def computational_distribution(state: QuantumState, subset=None) -> np.ndarray:
    """Measurement distribution over the given qubit subset (full register default)."""
    n = state.n_qubits
    if subset is None:
        subset = range(n)
    subset = sorted(set(int(q) for q in subset))
    if not subset:
        raise ValueError("subset must be nonempty")
    if subset[-1] >= n or subset[0] < 0:
        raise ValueError(f"subset {subset} out of range for {n} qubits")
    return marginal_distribution(state.probabilities(), n, subset)


def pauli_expectation(state: QuantumState, pauli: PauliString) -> float:
    """Expectation value Tr[P rho] (or <psi|P|psi>) of a weight-<=2 Pauli string."""
    support = pauli.support
    if len(support) > 2:
        raise ValueError("Pauli strings of weight > 2 are not supported")
    if not support:
        return 1.0
    if support[-1] >= state.n_qubits:
        raise ValueError(f"Pauli support {support} out of range")
    rdm = partial_trace(state, support).matrix
    op = PAULI_MATRICES[pauli.ops[0][1]]
    for _, label in pauli.ops[1:]:
        op = np.kron(PAULI_MATRICES[label], op)  # higher qubit = MSB
    val = np.trace(op @ rdm)
    if abs(val.imag) > IMAG_RESIDUE_ATOL:
        raise ValueError(f"expectation has imaginary residue {val.imag}")
    return float(val.real)


def fidelity_overlap(a: QuantumState, b: QuantumState) -> float:
    """Squared overlap |<psi_a|psi_b>|^2 of two pure states."""
    if a.is_density or b.is_density:
        raise TypeError("fidelity_overlap requires pure statevectors")
    if a.n_qubits != b.n_qubits:
        raise ValueError("states must share a register size")
    return float(abs(np.vdot(a.vector, b.vector)) ** 2)


def sample_distribution(probs: np.ndarray, shots: int, seed) -> np.ndarray:
    """Empirical frequencies of ``shots`` draws; deterministic for a fixed seed."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    total = p.sum()
    if total <= 0:
        raise ValueError("distribution has no positive mass")
    p = p / total
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, p)
    return counts / float(shots)
