"""Matrix-product-state simulation of wide, shallow, nearest-neighbor circuits.

Sites are qubits in chain order (site i = qubit i of the little-endian
register). Two-qubit gates must act on adjacent sites; no SWAP routing is
performed. A canonical center is maintained with QR/LQ sweeps and moved
under two-site gates, so local expectation values reduce to contractions
over the support window with identity environments on both sides.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .sim import PAULI_MATRICES, Circuit, Gate, PauliString

DEFAULT_MAX_BOND = 64
DEFAULT_TRUNC_THRESHOLD = 1e-12

_STATEVECTOR_CONTRACT_CAP = 20


class MpsState:
    """An MPS over qubit sites: rank-3 tensors (left bond, physical 2, right bond)."""

    def __init__(self, tensors, max_bond: int = DEFAULT_MAX_BOND,
                 trunc_threshold: float = DEFAULT_TRUNC_THRESHOLD, center: int = 0):
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        if not self.tensors:
            raise ValueError("MPS needs at least one site")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        self.max_bond = int(max_bond)
        self.trunc_threshold = float(trunc_threshold)
        self.center = int(center)
        self.discarded_weights: list[float] = []

    @classmethod
    def zero(cls, n_qubits: int, max_bond: int = DEFAULT_MAX_BOND,
             trunc_threshold: float = DEFAULT_TRUNC_THRESHOLD) -> "MpsState":
        """The product state |0...0> with all bond dimensions 1."""
        if n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        site = np.zeros((1, 2, 1), dtype=complex)
        site[0, 0, 0] = 1.0
        return cls([site.copy() for _ in range(n_qubits)], max_bond, trunc_threshold)

    @property
    def n_qubits(self) -> int:
        return len(self.tensors)

    @property
    def bond_dimensions(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def tensor_size(self) -> int:
        """Total stored tensor entries (memory accounting)."""
        return sum(t.size for t in self.tensors)

    @property
    def total_discarded_weight(self) -> float:
        return float(sum(self.discarded_weights))

    # -- canonical moves -----------------------------------------------------

    def _push_right(self, i: int):
        t = self.tensors[i]
        l, p, r = t.shape
        q, rmat = np.linalg.qr(t.reshape(l * p, r))
        k = q.shape[1]
        self.tensors[i] = q.reshape(l, p, k)
        self.tensors[i + 1] = np.tensordot(rmat, self.tensors[i + 1], axes=(1, 0))

    def _push_left(self, i: int):
        t = self.tensors[i]
        l, p, r = t.shape
        rmat, q = scipy.linalg.rq(t.reshape(l, p * r), mode="economic")
        k = q.shape[0]
        self.tensors[i] = q.reshape(k, p, r)
        self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], rmat, axes=(2, 0))

    def move_center(self, target: int):
        if not 0 <= target < self.n_qubits:
            raise ValueError(f"center {target} out of range")
        while self.center < target:
            self._push_right(self.center)
            self.center += 1
        while self.center > target:
            self._push_left(self.center)
            self.center -= 1

    # -- gates ----------------------------------------------------------------

    def apply_gate(self, gate: Gate) -> "MpsState":
        """Apply a gate in place. Two-qubit gates must be chain-adjacent."""
        if max(gate.targets) >= self.n_qubits:
            raise ValueError(f"gate targets {gate.targets} out of range")
        if len(gate.targets) == 1:
            q = gate.targets[0]
            self.tensors[q] = np.einsum("ap,lpr->lar", gate.matrix(), self.tensors[q])
            return self
        a, b = gate.targets
        i, j = min(a, b), max(a, b)
        if j != i + 1:
            raise ValueError(
                f"two-qubit gate on non-adjacent sites {gate.targets}; "
                "circuits must be chain-local (no routing)"
            )
        self.move_center(i)
        theta = np.tensordot(self.tensors[i], self.tensors[i + 1], axes=(2, 0))
        # theta indices: (l, p_i, p_j, r); gate matrix basis has targets[0] as MSB.
        g = gate.matrix().reshape(2, 2, 2, 2)
        if a == i:
            theta = np.einsum("PQpq,lpqr->lPQr", g, theta)
        else:
            theta = np.einsum("QPqp,lpqr->lPQr", g, theta)
        self._split(i, theta)
        return self

    def _split(self, i: int, theta: np.ndarray):
        l, _, _, r = theta.shape
        mat = theta.reshape(l * 2, 2 * r)
        try:
            u, s, vh = np.linalg.svd(mat, full_matrices=False)
        except np.linalg.LinAlgError:  # rare convergence failure; robust driver
            u, s, vh = scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")
        total = float(np.sum(s**2))
        keep = len(s)
        if total > 0:
            # drop trailing values whose cumulative weight stays below threshold
            tail = np.cumsum((s**2)[::-1])[::-1] / total
            keep = int(np.searchsorted(-tail, -self.trunc_threshold))
            keep = max(keep, 1)
        keep = min(keep, self.max_bond)
        discarded = float(np.sum(s[keep:] ** 2) / total) if total > 0 else 0.0
        if discarded > 0 or keep < len(s):
            self.discarded_weights.append(discarded)
        s = s[:keep]
        norm = np.linalg.norm(s)
        if norm > 0:
            s = s / norm
        self.tensors[i] = u[:, :keep].reshape(l, 2, keep)
        self.tensors[i + 1] = (s[:, None] * vh[:keep]).reshape(keep, 2, r)
        self.center = i + 1

    def run(self, circuit: Circuit) -> "MpsState":
        if circuit.n_qubits != self.n_qubits:
            raise ValueError("circuit register does not match MPS size")
        for gate in circuit:
            self.apply_gate(gate)
        return self

    # -- observables ----------------------------------------------------------

    def norm_squared(self) -> float:
        m = self.tensors[self.center]
        return float(np.real(np.vdot(m, m)))

    def expectation(self, pauli: PauliString) -> float:
        """Expectation of a weight-<=2 Pauli string (any site distance)."""
        support = pauli.support
        if len(support) > 2:
            raise ValueError("Pauli strings of weight > 2 are not supported")
        if not support:
            return 1.0
        if support[-1] >= self.n_qubits:
            raise ValueError(f"support {support} out of range")
        ops = {q: PAULI_MATRICES[lbl] for q, lbl in pauli.ops}
        i, j = support[0], support[-1]
        self.move_center(i)
        t = self.tensors[i]
        env = np.einsum("apb,pq,aqc->bc", t.conj(), ops[i], t)
        for site in range(i + 1, j + 1):
            t = self.tensors[site]
            op = ops.get(site)
            if op is None:
                env = np.einsum("bc,bpd,cpe->de", env, t.conj(), t)
            else:
                env = np.einsum("bc,bpd,pq,cqe->de", env, t.conj(), op, t)
        val = complex(np.trace(env)) / self.norm_squared()
        return float(val.real)

    def reduced_density_matrix(self, sites) -> np.ndarray:
        """Reduced density matrix of one site or two adjacent sites (little-endian)."""
        sites = sorted(set(int(s) for s in sites))
        self.move_center(sites[0])
        if len(sites) == 1:
            t = self.tensors[sites[0]]
            rdm = np.einsum("apb,aqb->pq", t, t.conj())
        elif len(sites) == 2 and sites[1] == sites[0] + 1:
            theta = np.tensordot(self.tensors[sites[0]], self.tensors[sites[1]], axes=(2, 0))
            r = np.einsum("apqc,aPQc->pqPQ", theta, theta.conj())
            # row index = bit(site_low) + 2*bit(site_high)
            rdm = r.transpose(1, 0, 3, 2).reshape(4, 4)
        else:
            raise ValueError("reduced_density_matrix supports 1 site or an adjacent pair")
        return rdm / float(np.real(np.trace(rdm)))

    def to_statevector(self) -> np.ndarray:
        """Contract the chain into a little-endian statevector (small n only)."""
        n = self.n_qubits
        if n > _STATEVECTOR_CONTRACT_CAP:
            raise ValueError(f"refusing to contract {n} qubits into a dense vector")
        acc = self.tensors[0]
        for t in self.tensors[1:]:
            acc = np.tensordot(acc, t, axes=(acc.ndim - 1, 0))
        acc = acc.reshape(acc.shape[1:-1])  # drop boundary bonds
        # axes are (p_0, ..., p_{n-1}); little-endian flatten wants p_{n-1} first
        return np.transpose(acc, axes=tuple(reversed(range(n)))).reshape(-1)
