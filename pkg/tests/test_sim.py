"""Simulator core: gates, circuits, partial trace, distributions, expectations."""

import numpy as np
import pytest

from qforecast.sim import (
    Circuit,
    Gate,
    PauliString,
    QuantumState,
    apply_gate,
    circuit_unitary,
    computational_distribution,
    fidelity_overlap,
    marginal_distribution,
    partial_trace,
    pauli_expectation,
    run_circuit,
    sample_distribution,
    tensor,
)

# ---------------------------------------------------------------------------
# independent dense oracle: explicit kron products, no tensor-axis tricks
# ---------------------------------------------------------------------------

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_embed_1q(u, qubit, n):
    """Little-endian embedding: highest qubit is the leftmost kron factor."""
    full = np.array([[1.0 + 0j]])
    for q in reversed(range(n)):
        full = np.kron(full, u if q == qubit else np.eye(2))
    return full


def oracle_cnot(control, target, n):
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    return kron_embed_1q(p0, control, n) + kron_embed_1q(p1, control, n) @ kron_embed_1q(
        PAULI["X"], target, n
    )


def oracle_cz(a, b, n):
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    return kron_embed_1q(p0, a, n) + kron_embed_1q(p1, a, n) @ kron_embed_1q(PAULI["Z"], b, n)


def oracle_gate_matrix(gate, n):
    if gate.kind == "CNOT":
        return oracle_cnot(gate.targets[0], gate.targets[1], n)
    if gate.kind == "CZ":
        return oracle_cz(gate.targets[0], gate.targets[1], n)
    return kron_embed_1q(gate.matrix(), gate.targets[0], n)


def oracle_circuit_unitary(circuit):
    u = np.eye(2**circuit.n_qubits, dtype=complex)
    for gate in circuit:
        u = oracle_gate_matrix(gate, circuit.n_qubits) @ u
    return u


def random_circuit(n, depth, rng):
    c = Circuit(n)
    for _ in range(depth):
        kind = rng.choice(["H", "X", "RX", "RY", "RZ", "CNOT", "CZ"])
        if kind in ("CNOT", "CZ"):
            a, b = rng.choice(n, size=2, replace=False)
            c.add(Gate(kind, (int(a), int(b))))
        elif kind in ("RX", "RY", "RZ"):
            c.add(Gate(kind, (int(rng.integers(n)),), float(rng.uniform(0, 2 * np.pi))))
        else:
            c.add(Gate(kind, (int(rng.integers(n)),)))
    return c


def random_density_matrix(n, rng, rank=None):
    dim = 2**n
    rank = rank or dim
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return QuantumState.from_density_matrix(rho / np.trace(rho).real)


# ---------------------------------------------------------------------------
# gates and circuits
# ---------------------------------------------------------------------------


def test_gate_matrices_unitary():
    rng = np.random.default_rng(0)
    gates = [Gate("H", (0,)), Gate("X", (0,)), Gate("CNOT", (0, 1)), Gate("CZ", (0, 1))]
    gates += [Gate(k, (0,), float(rng.uniform(-7, 7))) for k in ("RX", "RY", "RZ") for _ in range(5)]
    for g in gates:
        u = g.matrix()
        assert np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=1e-12)


def test_gate_validation_errors():
    with pytest.raises(ValueError):
        Gate("RX", (0,))  # missing angle
    with pytest.raises(ValueError):
        Gate("H", (0,), 0.3)  # angle on non-rotation
    with pytest.raises(ValueError):
        Gate("CNOT", (1, 1))  # duplicate targets
    with pytest.raises(ValueError):
        Gate("CNOT", (0,))
    with pytest.raises(ValueError):
        Circuit(2).add(Gate("H", (2,)))  # out of register


def test_x_flips_zero():
    state = apply_gate(QuantumState.zero_state(1), Gate("X", (0,)))
    assert np.allclose(state.vector, [0, 1])


def test_hadamard_on_zero():
    state = apply_gate(QuantumState.zero_state(1), Gate("H", (0,)))
    assert np.allclose(state.probabilities(), [0.5, 0.5], atol=1e-12)


def test_ry_half_pi_density_matrix():
    # 2x2 matrix product by hand: RY(pi/2)|0> = (|0>+|1>)/sqrt(2).
    state = apply_gate(QuantumState.zero_state(1, density=True), Gate("RY", (0,), np.pi / 2))
    assert np.allclose(state.matrix, 0.5 * np.ones((2, 2)), atol=1e-12)


def test_empty_circuit_is_identity():
    rng = np.random.default_rng(1)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    v /= np.linalg.norm(v)
    state = QuantumState.from_statevector(v)
    assert np.allclose(run_circuit(Circuit(3), state).vector, v)


def test_bell_state_preparation():
    c = Circuit(2).h(0).cnot(0, 1)
    state = run_circuit(c)
    probs = state.probabilities()
    assert np.allclose(probs, [0.5, 0, 0, 0.5], atol=1e-12)


def test_circuit_inverse_restores_state():
    rng = np.random.default_rng(2)
    c = random_circuit(4, 30, rng)
    forward = run_circuit(c)
    back = run_circuit(c.inverse(), forward)
    expect = QuantumState.zero_state(4)
    assert np.allclose(back.vector, expect.vector, atol=1e-10)


def test_gate_application_matches_kron_oracle():
    rng = np.random.default_rng(3)
    for n in (2, 3, 4):
        c = random_circuit(n, 20, rng)
        assert np.allclose(circuit_unitary(c), oracle_circuit_unitary(c), atol=1e-10)
        # statevector path
        got = run_circuit(c).vector
        want = oracle_circuit_unitary(c)[:, 0]
        assert np.allclose(got, want, atol=1e-10)
        # density path
        rho0 = random_density_matrix(n, rng)
        got_dm = rho0
        for g in c:
            got_dm = apply_gate(got_dm, g)
        u = oracle_circuit_unitary(c)
        assert np.allclose(got_dm.matrix, u @ rho0.matrix @ u.conj().T, atol=1e-10)


def test_norm_and_trace_preserved():
    rng = np.random.default_rng(4)
    c = random_circuit(3, 40, rng)
    sv = run_circuit(c)
    assert abs(np.linalg.norm(sv.vector) - 1.0) < 1e-10
    dm = random_density_matrix(3, rng)
    for g in c:
        dm = apply_gate(dm, g)
    assert abs(np.trace(dm.matrix).real - 1.0) < 1e-10
    dm.validate(check_psd=True)


def test_register_size_mismatch_rejected():
    with pytest.raises(ValueError):
        run_circuit(Circuit(3), QuantumState.zero_state(2))
    with pytest.raises(ValueError):
        apply_gate(QuantumState.zero_state(1), Gate("CNOT", (0, 1)))


# ---------------------------------------------------------------------------
# partial trace / distributions
# ---------------------------------------------------------------------------


def test_partial_trace_product_state():
    plus = apply_gate(QuantumState.zero_state(1), Gate("H", (0,)))
    state = tensor(QuantumState.zero_state(1), plus)  # qubit0=|0>, qubit1=|+>
    rho0 = partial_trace(state, [0])
    assert np.allclose(rho0.matrix, [[1, 0], [0, 0]], atol=1e-12)
    rho1 = partial_trace(state, [1])
    assert np.allclose(rho1.matrix, 0.5 * np.ones((2, 2)), atol=1e-12)


def test_partial_trace_bell_is_maximally_mixed():
    bell = run_circuit(Circuit(2).h(0).cnot(0, 1))
    for q in (0, 1):
        rho = partial_trace(bell, [q])
        assert np.allclose(rho.matrix, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_random_product_factorizes():
    rng = np.random.default_rng(5)
    for _ in range(5):
        a = random_density_matrix(2, rng)
        b = random_density_matrix(2, rng)
        joint = tensor(a, b)
        assert np.allclose(partial_trace(joint, [0, 1]).matrix, a.matrix, atol=1e-12)
        assert np.allclose(partial_trace(joint, [2, 3]).matrix, b.matrix, atol=1e-12)


def test_reduced_purity_bounded():
    rng = np.random.default_rng(6)
    for _ in range(5):
        c = random_circuit(4, 25, rng)
        state = run_circuit(c)
        rho = partial_trace(state, [0, 2]).matrix
        eigs = np.linalg.eigvalsh(rho)
        assert eigs.min() > -1e-12
        purity = float(np.real(np.trace(rho @ rho)))
        assert purity <= 1.0 + 1e-10


def test_partial_trace_empty_keep_rejected():
    with pytest.raises(ValueError):
        partial_trace(QuantumState.zero_state(2), [])


def test_distribution_full_register_equals_amplitudes():
    rng = np.random.default_rng(7)
    c = random_circuit(3, 20, rng)
    state = run_circuit(c)
    assert np.allclose(
        computational_distribution(state), np.abs(state.vector) ** 2, atol=1e-12
    )


def test_distribution_equals_partial_trace_diagonal():
    rng = np.random.default_rng(8)
    state = run_circuit(random_circuit(4, 25, rng))
    for subset in ([0], [1, 3], [0, 2, 3]):
        d = computational_distribution(state, subset)
        diag = np.real(np.diag(partial_trace(state, subset).matrix))
        assert np.allclose(d, diag, atol=1e-12)
        assert abs(d.sum() - 1.0) < 1e-10
        assert d.min() > -1e-12


def test_distribution_examples():
    state = QuantumState.zero_state(3)
    d = computational_distribution(state)
    assert d[0] == 1.0 and abs(d.sum() - 1) < 1e-12
    bell = run_circuit(Circuit(2).h(0).cnot(0, 1))
    assert np.allclose(computational_distribution(bell, [0, 1]), [0.5, 0, 0, 0.5])


def test_distribution_matches_sampling_histogram():
    rng = np.random.default_rng(9)
    state = run_circuit(random_circuit(3, 15, rng))
    p = computational_distribution(state)
    emp = sample_distribution(p, shots=10**6, seed=123)
    # 3-sigma binomial bound per entry
    sigma = np.sqrt(np.maximum(p * (1 - p), 1e-12) / 10**6)
    assert np.all(np.abs(emp - p) <= 3 * sigma + 1e-9)


def test_marginal_distribution_product():
    p = np.array([0.1, 0.9])
    q = np.array([0.3, 0.7])
    # joint over 2 bits with bit0 ~ p, bit1 ~ q
    joint = np.array([p[0] * q[0], p[1] * q[0], p[0] * q[1], p[1] * q[1]])
    assert np.allclose(marginal_distribution(joint, 2, [0]), p)
    assert np.allclose(marginal_distribution(joint, 2, [1]), q)


# ---------------------------------------------------------------------------
# expectations / fidelity / sampling
# ---------------------------------------------------------------------------


def test_pauli_expectation_basics():
    zero = QuantumState.zero_state(1)
    assert pauli_expectation(zero, PauliString.single(0, "Z")) == pytest.approx(1.0)
    plus = apply_gate(zero, Gate("H", (0,)))
    assert pauli_expectation(plus, PauliString.single(0, "X")) == pytest.approx(1.0)
    assert pauli_expectation(plus, PauliString.single(0, "Z")) == pytest.approx(0.0, abs=1e-12)


def test_pauli_expectation_bell_zz():
    bell = run_circuit(Circuit(2).h(0).cnot(0, 1))
    # 4x4 trace oracle
    zz = np.kron(PAULI["Z"], PAULI["Z"])
    want = np.real(np.trace(zz @ bell.to_density().matrix))
    got = pauli_expectation(bell, PauliString.pair(0, "Z", 1, "Z"))
    assert got == pytest.approx(want)
    assert got == pytest.approx(1.0)


def test_pauli_expectation_matches_kron_oracle():
    rng = np.random.default_rng(10)
    state = run_circuit(random_circuit(4, 25, rng))
    rho = state.to_density().matrix
    for ops in ({0: "X"}, {2: "Y"}, {1: "Z", 3: "X"}, {0: "Y", 2: "Z"}):
        full = np.eye(1, dtype=complex)
        for q in reversed(range(4)):
            full = np.kron(full, PAULI[ops.get(q, "I")])
        want = float(np.real(np.trace(full @ rho)))
        got = pauli_expectation(state, PauliString.from_dict(ops))
        assert got == pytest.approx(want, abs=1e-10)
        assert -1.0 - 1e-10 <= got <= 1.0 + 1e-10


def test_pauli_expectation_linearity_on_mixtures():
    rng = np.random.default_rng(11)
    a = random_density_matrix(2, rng)
    b = random_density_matrix(2, rng)
    w = 0.3
    mix = QuantumState.from_density_matrix(w * a.matrix + (1 - w) * b.matrix)
    p = PauliString.pair(0, "X", 1, "Z")
    want = w * pauli_expectation(a, p) + (1 - w) * pauli_expectation(b, p)
    assert pauli_expectation(mix, p) == pytest.approx(want, abs=1e-10)


def test_pauli_weight_cap():
    state = QuantumState.zero_state(3)
    with pytest.raises(ValueError):
        pauli_expectation(state, PauliString.from_dict({0: "Z", 1: "Z", 2: "Z"}))


def test_fidelity_overlap():
    zero = QuantumState.zero_state(1)
    one = apply_gate(zero, Gate("X", (0,)))
    assert fidelity_overlap(zero, zero) == pytest.approx(1.0)
    assert fidelity_overlap(zero, one) == pytest.approx(0.0)
    for theta in (0.3, 1.1, 2.9):
        rotated = apply_gate(zero, Gate("RY", (0,), theta))
        assert fidelity_overlap(zero, rotated) == pytest.approx(np.cos(theta / 2) ** 2)
    with pytest.raises(TypeError):
        fidelity_overlap(zero.to_density(), zero)


def test_dephasing_trace_identity():
    # sum over ancilla-diagonal blocks equals the partial trace over ancillas
    rng = np.random.default_rng(12)
    joint = random_density_matrix(4, rng)
    anc = [2, 3]
    keep = [0, 1]
    rho = joint.matrix.reshape(4, 4, 4, 4)  # (anc_row, sys_row, anc_col, sys_col)
    summed = sum(rho[m, :, m, :] for m in range(4))
    assert np.allclose(summed, partial_trace(joint, keep).matrix, atol=1e-12)


def test_sample_distribution_behavior():
    point = np.array([0.0, 1.0, 0.0])
    assert np.allclose(sample_distribution(point, 17, seed=0), point)
    half = np.array([0.5, 0.5])
    emp = sample_distribution(half, 10**6, seed=42)
    assert np.all(np.abs(emp - 0.5) < 0.002)
    assert np.allclose(
        sample_distribution(half, 1000, seed=7), sample_distribution(half, 1000, seed=7)
    )
    with pytest.raises(ValueError):
        sample_distribution(half, 0, seed=0)


def test_state_validation():
    with pytest.raises(ValueError):
        QuantumState.from_statevector([1.0, 1.0])
    with pytest.raises(ValueError):
        QuantumState.from_density_matrix([[0.9, 0.3], [0.1, 0.1]])
    QuantumState.from_density_matrix([[0.5, 0.5], [0.5, 0.5]]).validate(check_psd=True)
