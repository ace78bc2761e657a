"""Tour of the exact simulator core.

Builds a few textbook states, checks the little-endian conventions, and shows
how distributions, reduced density matrices, and Pauli expectations connect.
"""

import numpy as np

from qforecast.sim import (
    Circuit,
    PauliString,
    QuantumState,
    computational_distribution,
    fidelity_overlap,
    partial_trace,
    pauli_expectation,
    run_circuit,
    sample_distribution,
)

# --- Bell state ------------------------------------------------------------
# Little-endian: qubit 0 is the least significant bit, so |q1 q0> = |11| sits
# at index 3.
bell = run_circuit(Circuit(2).h(0).cnot(0, 1))
print("Bell state probabilities:", np.round(bell.probabilities(), 3))
print("  <Z0 Z1> =", pauli_expectation(bell, PauliString.pair(0, "Z", 1, "Z")))
print("  <X0 X1> =", pauli_expectation(bell, PauliString.pair(0, "X", 1, "X")))

# Each marginal of a Bell pair is maximally mixed.
rho0 = partial_trace(bell, [0])
print("  reduced state of qubit 0:\n", np.round(rho0.matrix.real, 3))

# --- sampling matches exact probabilities -----------------------------------
ghz = run_circuit(Circuit(3).h(0).cnot(0, 1).cnot(1, 2))
exact = computational_distribution(ghz)
empirical = sample_distribution(exact, shots=100_000, seed=7)
print("\nGHZ exact:", np.round(exact, 4))
print("GHZ sampled (1e5 shots):", np.round(empirical, 4))

# --- single-qubit geometry ---------------------------------------------------
# RY(theta)|0> overlaps |0> with probability cos^2(theta/2).
zero = QuantumState.zero_state(1)
for theta in (0.5, 1.5, 2.5):
    rotated = run_circuit(Circuit(1).ry(0, theta))
    print(
        f"theta={theta:.1f}: fidelity={fidelity_overlap(zero, rotated):.4f}"
        f"  cos^2(theta/2)={np.cos(theta / 2) ** 2:.4f}"
    )

# --- circuits invert gate-by-gate --------------------------------------------
rng = np.random.default_rng(0)
c = Circuit(4)
for _ in range(12):
    c.ry(int(rng.integers(4)), float(rng.uniform(0, np.pi)))
    if rng.random() < 0.5:
        a, b = rng.choice(4, size=2, replace=False)
        c.cnot(int(a), int(b))
state = run_circuit(c)
restored = run_circuit(c.inverse(), state)
print("\nround trip through inverse circuit, |<0|psi>|^2 =",
      round(abs(restored.vector[0]) ** 2, 12))
