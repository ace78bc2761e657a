"""Kernelized quantum reservoir computing with repeated ancilla measurement.

Each of the S input streams owns a register of ``n_q`` system qubits. Every
timestep the observation is rotation-encoded per stream, a fixed entangling
reservoir unitary is applied, and each system qubit is copied onto a paired
ancilla with a CNOT; only the ancillas are measured and then reset. The state
carried to the next timestep is the ensemble average over measurement
outcomes, which for CNOT readout equals the system state dephased in the
computational basis. The recurrent state is therefore diagonal, and
:class:`ReservoirState` stores exactly that diagonal.

Because the boundary couplers are CNOTs (computational-basis permutations),
one step factorizes into per-stream stochastic matrices followed by a bit
permutation; the ``factored`` engine uses this and is exact. The ``dense``
engine evolves the full density matrix through the simulator core and exists
as an independently testable reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .sim import (
    Circuit,
    QuantumState,
    circuit_unitary,
    marginal_distribution,
    run_circuit,
    sample_distribution,
)

INPUT_SLACK = 0.05  # tolerated overshoot of normalized inputs outside [0, 1]

_DIAG_QUBIT_CAP = 20  # recurrent diagonal has 2**(S*n_q) entries


@dataclass(frozen=True)
class ReservoirConfig:
    """Hyperparameters of a multi-stream repeated-measurement reservoir."""

    n_streams: int
    qubits_per_stream: int
    cross_stream_entanglement: bool = True
    encoding_angle_scale: float = np.pi
    reservoir_seed: int = 0
    gamma: float = 1.0
    ridge_lambda: float = 1e-3
    shots: int | None = None  # None = exact probabilities
    shot_seed: int = 0
    stream_seed_offset: int = 0  # lets a 1-stream run reproduce stream s of a wider one

    def __post_init__(self):
        if self.n_streams < 1:
            raise ValueError("n_streams must be >= 1")
        if self.qubits_per_stream < 2:
            raise ValueError("qubits_per_stream must be >= 2")
        if self.gamma <= 0 or self.ridge_lambda <= 0:
            raise ValueError("gamma and ridge_lambda must be positive")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1 or None for exact probabilities")
        if self.n_system_qubits > _DIAG_QUBIT_CAP:
            raise ValueError(
                f"{self.n_system_qubits} system qubits exceeds the {_DIAG_QUBIT_CAP}-qubit cap"
            )

    @property
    def n_system_qubits(self) -> int:
        return self.n_streams * self.qubits_per_stream

    def stream_qubits(self, s: int) -> range:
        if not 0 <= s < self.n_streams:
            raise ValueError(f"stream index {s} out of range")
        return range(s * self.qubits_per_stream, (s + 1) * self.qubits_per_stream)


@dataclass
class ReservoirState:
    """Recurrent system state: the diagonal of the post-measurement density matrix."""

    diag: np.ndarray
    t: int = 0

    @property
    def n_qubits(self) -> int:
        n = int(self.diag.shape[0]).bit_length() - 1
        return n

    def to_density_matrix(self) -> QuantumState:
        if self.n_qubits > 10:
            raise ValueError("refusing to materialize a dense matrix above 10 qubits")
        return QuantumState.from_density_matrix(np.diag(self.diag.astype(complex)))


@dataclass
class AncillaDistribution:
    """Joint measurement distribution over all ancilla bitstrings at one timestep."""

    probs: np.ndarray
    t: int


@dataclass
class FeatureMatrix:
    """Per-timestep marginal ancilla distributions of one stream."""

    rows: np.ndarray  # (T, 2**n_q)
    stream: int


def _check_normalized(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    if x.min() < -INPUT_SLACK or x.max() > 1.0 + INPUT_SLACK:
        raise ValueError(
            f"inputs must be normalized to [0, 1] (slack {INPUT_SLACK}); "
            f"got range [{x.min():.4f}, {x.max():.4f}]"
        )
    return x


def _stream_encoding_circuit(value: float, cfg: ReservoirConfig) -> Circuit:
    """Encoding block of one stream on its local register.

    One layer of RX, RZ, RY data rotations on every qubit followed by a
    brickwork CNOT block (even pairs then odd pairs).
    """
    n = cfg.qubits_per_stream
    a = cfg.encoding_angle_scale * float(value)
    c = Circuit(n)
    for kind in ("RX", "RZ", "RY"):
        for q in range(n):
            getattr(c, kind.lower())(q, a)
    for start in (0, 1):
        for q in range(start, n - 1, 2):
            c.cnot(q, q + 1)
    return c


def _stream_intra_circuit(s: int, cfg: ReservoirConfig) -> Circuit:
    """Fixed intra-stream entangler: seeded rotations plus a CNOT ring."""
    n = cfg.qubits_per_stream
    rng = np.random.default_rng([cfg.reservoir_seed, cfg.stream_seed_offset + s])
    angles = rng.uniform(0.0, 2.0 * np.pi, size=(n, 3))
    c = Circuit(n)
    for q in range(n):
        c.rx(q, angles[q, 0]).ry(q, angles[q, 1]).rz(q, angles[q, 2])
    for q in range(n):
        c.cnot(q, (q + 1) % n)
    return c


def build_encoding_circuit(x_t, cfg: ReservoirConfig) -> Circuit:
    """Global encoding unitary: a tensor product of per-stream encoding blocks."""
    x_t = _check_normalized(x_t)
    if x_t.shape != (cfg.n_streams,):
        raise ValueError(f"expected {cfg.n_streams} stream values, got shape {x_t.shape}")
    n = cfg.n_system_qubits
    full = Circuit(n)
    for s in range(cfg.n_streams):
        local = _stream_encoding_circuit(x_t[s], cfg)
        for g in local.embedded(s * cfg.qubits_per_stream, n):
            full.add(g)
    return full


def build_reservoir_circuit(cfg: ReservoirConfig) -> Circuit:
    """Input-independent reservoir unitary: intra-stream entanglers, then
    boundary CNOT couplers between neighboring streams when enabled."""
    n = cfg.n_system_qubits
    full = Circuit(n)
    for s in range(cfg.n_streams):
        local = _stream_intra_circuit(s, cfg)
        for g in local.embedded(s * cfg.qubits_per_stream, n):
            full.add(g)
    if cfg.cross_stream_entanglement:
        for s in range(cfg.n_streams - 1):
            tail = s * cfg.qubits_per_stream + cfg.qubits_per_stream - 1
            head = (s + 1) * cfg.qubits_per_stream
            full.cnot(tail, head)
    return full


def initial_state(cfg: ReservoirConfig) -> ReservoirState:
    diag = np.zeros(2**cfg.n_system_qubits)
    diag[0] = 1.0
    return ReservoirState(diag=diag, t=0)


# ---------------------------------------------------------------------------
# step engines
# ---------------------------------------------------------------------------


def _boundary_permutation(cfg: ReservoirConfig) -> np.ndarray | None:
    """Index permutation of the composed boundary CNOTs (basis relabeling)."""
    if not cfg.cross_stream_entanglement or cfg.n_streams == 1:
        return None
    idx = np.arange(2**cfg.n_system_qubits, dtype=np.int64)
    out = idx.copy()
    for s in range(cfg.n_streams - 1):
        cbit = s * cfg.qubits_per_stream + cfg.qubits_per_stream - 1
        tbit = (s + 1) * cfg.qubits_per_stream
        out = out ^ (((idx >> cbit) & 1) << tbit)
    return out


def _step_factored(state: ReservoirState, x_t: np.ndarray, cfg: ReservoirConfig) -> np.ndarray:
    """Diagonal update via per-stream |V|^2 contractions plus the CNOT permutation."""
    d = 2**cfg.qubits_per_stream
    transitions = []
    for s in range(cfg.n_streams):
        enc = circuit_unitary(_stream_encoding_circuit(x_t[s], cfg))
        intra = circuit_unitary(_stream_intra_circuit(s, cfg))
        transitions.append(np.abs(intra @ enc) ** 2)
    q = state.diag.reshape([d] * cfg.n_streams)  # axes (s_{S-1}, ..., s_0)
    for s in range(cfg.n_streams):
        axis = cfg.n_streams - 1 - s
        q = np.moveaxis(np.tensordot(transitions[s], q, axes=(1, axis)), 0, axis)
    q = q.reshape(-1)
    perm = _boundary_permutation(cfg)
    return q[perm] if perm is not None else q


def _step_dense(state: ReservoirState, x_t: np.ndarray, cfg: ReservoirConfig) -> np.ndarray:
    """Reference update through the density-matrix simulator (small registers)."""
    rho = state.to_density_matrix()
    rho = run_circuit(build_encoding_circuit(x_t, cfg), rho)
    rho = run_circuit(build_reservoir_circuit(cfg), rho)
    return np.clip(np.real(np.diag(rho.matrix)), 0.0, None)


def step(state: ReservoirState, x_t, cfg: ReservoirConfig,
         engine: str = "auto") -> tuple[ReservoirState, AncillaDistribution]:
    """One reservoir timestep: encode, entangle, copy to ancillas, measure, reset.

    Returns the next recurrent state (ensemble average over outcomes) and the
    joint ancilla distribution, exact or shot-sampled per the config. Ancilla
    bit ``s*n_q + i`` mirrors system qubit ``q_{s,i}``.
    """
    x_t = _check_normalized(x_t)
    if x_t.shape != (cfg.n_streams,):
        raise ValueError(f"expected {cfg.n_streams} stream values, got shape {x_t.shape}")
    if state.diag.shape[0] != 2**cfg.n_system_qubits:
        raise ValueError("reservoir state register does not match the config")
    if engine == "auto":
        engine = "factored"
    if engine == "factored":
        p = _step_factored(state, x_t, cfg)
    elif engine == "dense":
        p = _step_dense(state, x_t, cfg)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    t_next = state.t + 1
    probs = p
    if cfg.shots is not None:
        probs = sample_distribution(p, cfg.shots, seed=[cfg.shot_seed, t_next])
    return ReservoirState(diag=p, t=t_next), AncillaDistribution(probs=probs, t=t_next)


def marginalize_stream(dist, s: int, cfg: ReservoirConfig) -> np.ndarray:
    """Marginal ancilla distribution of stream ``s`` (length ``2**n_q``)."""
    probs = dist.probs if isinstance(dist, AncillaDistribution) else np.asarray(dist)
    return marginal_distribution(probs, cfg.n_system_qubits, cfg.stream_qubits(s))


def run_reservoir(series, cfg: ReservoirConfig, engine: str = "auto") -> list[FeatureMatrix]:
    """Drive the reservoir through a window of observations.

    ``series`` has shape (S, T); row t of each stream's feature matrix is that
    stream's marginal ancilla distribution after processing observation t.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 2 or series.shape[0] != cfg.n_streams:
        raise ValueError(f"series must have shape ({cfg.n_streams}, T)")
    n_steps = series.shape[1]
    if n_steps < 1:
        raise ValueError("window must contain at least one timestep")
    state = initial_state(cfg)
    rows = [np.empty((n_steps, 2**cfg.qubits_per_stream)) for _ in range(cfg.n_streams)]
    for t in range(n_steps):
        state, dist = step(state, series[:, t], cfg, engine=engine)
        for s in range(cfg.n_streams):
            rows[s][t] = marginalize_stream(dist, s, cfg)
    return [FeatureMatrix(rows=rows[s], stream=s) for s in range(cfg.n_streams)]


# ---------------------------------------------------------------------------
# kernel ridge readout
# ---------------------------------------------------------------------------


@dataclass
class RidgeReadout:
    """Fitted kernel ridge coefficients plus what is needed to embed test rows."""

    beta: np.ndarray
    train_features: np.ndarray | None
    gamma: float | None
    ridge_lambda: float


def _feature_rows(f) -> np.ndarray:
    return f.rows if isinstance(f, FeatureMatrix) else np.asarray(f, dtype=float)


def rbf_kernel(fa, fb, gamma: float) -> np.ndarray:
    """Gram matrix K(i,j) = exp(-gamma * ||p_i - p_j||^2) between feature rows."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    a, b = _feature_rows(fa), _feature_rows(fb)
    if a.shape[1] != b.shape[1]:
        raise ValueError("feature matrices must share a column count")
    sq = (
        np.sum(a**2, axis=1)[:, None]
        + np.sum(b**2, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.exp(-gamma * np.clip(sq, 0.0, None))


def krr_fit(k_train: np.ndarray, y: np.ndarray, ridge_lambda: float,
            train_features: np.ndarray | None = None,
            gamma: float | None = None) -> RidgeReadout:
    """Solve (K + lambda I) beta = y through a symmetric factorization."""
    k_train = np.asarray(k_train, dtype=float)
    y = np.asarray(y, dtype=float)
    if k_train.ndim != 2 or k_train.shape[0] != k_train.shape[1]:
        raise ValueError("K_train must be square")
    if y.shape[0] != k_train.shape[0]:
        raise ValueError("target length does not match kernel size")
    if ridge_lambda <= 0:
        raise ValueError("ridge_lambda must be positive")
    system = k_train + ridge_lambda * np.eye(k_train.shape[0])
    try:
        factor = scipy.linalg.cho_factor(system)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError("kernel system is not positive definite (ill-conditioned)") from exc
    beta = scipy.linalg.cho_solve(factor, y)
    residual = np.linalg.norm(system @ beta - y)
    if residual > 1e-8 * max(np.linalg.norm(y), 1e-30):
        raise ValueError(f"ridge solve residual {residual:.3e} exceeds tolerance")
    return RidgeReadout(beta=beta, train_features=train_features,
                        gamma=gamma, ridge_lambda=ridge_lambda)


def krr_predict(readout: RidgeReadout, k_test: np.ndarray) -> np.ndarray:
    """Predictions K_test @ beta."""
    k_test = np.atleast_2d(np.asarray(k_test, dtype=float))
    if k_test.shape[1] != readout.beta.shape[0]:
        raise ValueError("K_test column count must equal the training size")
    return k_test @ readout.beta


# ---------------------------------------------------------------------------
# forecasting
# ---------------------------------------------------------------------------


@dataclass
class ForecastOutput:
    """Multi-stream forecast over a train/test window, in normalized units."""

    predictions: np.ndarray  # (S, horizon)
    truth: np.ndarray  # (S, horizon)
    feature_matrices: list | None = None


def forecast(window, cfg: ReservoirConfig, engine: str = "auto",
             keep_features: bool = False) -> ForecastOutput:
    """Forecast the test horizon of a window with per-horizon ridge readouts.

    Features are computed over the full window in one recurrent pass. For each
    horizon offset h a separate readout maps the feature row at time t to the
    value at t+h; the forecast is anchored at the last training row, so no
    test-segment inputs influence the predictions.
    """
    train = window.normalized_train()
    test = window.normalized_test()
    if train.shape[0] != cfg.n_streams:
        raise ValueError(
            f"window has {train.shape[0]} streams but config expects {cfg.n_streams}"
        )
    horizon = test.shape[1]
    train_len = train.shape[1]
    if train_len <= horizon:
        raise ValueError("training window must be longer than the forecast horizon")
    full = np.concatenate([train, window.normalized_test(clip=True)], axis=1)
    feats = run_reservoir(full, cfg, engine=engine)
    preds = np.empty((cfg.n_streams, horizon))
    for s in range(cfg.n_streams):
        rows = feats[s].rows[:train_len]
        k_full = rbf_kernel(rows, rows, cfg.gamma)
        origin = rows[train_len - 1 : train_len]
        for h in range(1, horizon + 1):
            n_pairs = train_len - h
            targets = train[s, h:]
            readout = krr_fit(k_full[:n_pairs, :n_pairs], targets, cfg.ridge_lambda)
            k_test = rbf_kernel(origin, rows[:n_pairs], cfg.gamma)
            preds[s, h - 1] = krr_predict(readout, k_test)[0]
    return ForecastOutput(
        predictions=preds,
        truth=test,
        feature_matrices=feats if keep_features else None,
    )
