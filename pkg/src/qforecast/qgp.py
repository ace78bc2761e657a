"""Projected-quantum-kernel Gaussian process for multi-output forecasting.

The feature map encodes an input vector on one qubit per output series:
a Hadamard layer, RY data rotations, a nearest-neighbor CNOT chain, RX data
re-uploading, a second CNOT chain, and a trainable RY layer. Kernel entries
compare two inputs through their two-body reduced density matrices on the
chain-coupled qubit pairs,

    K(x, x') = sum_pairs Tr[rho_pair(x) rho_pair(x')]
             = sum_pairs (1/4) sum_P <P>_x <P>_x' ,

so a full Gram matrix needs one expectation table per datapoint, never one
circuit per pair of datapoints. Circuit parameters and the observation noise
are trained by gradient ascent on the joint marginal log-likelihood, with
expectation gradients from the parameter-shift rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .mps import MpsState
from .sim import PAULI_MATRICES, Circuit, partial_trace, run_circuit

PAULI_LABELS = "IXYZ"

# basis settings per table: the 9 two-qubit combinations {X,Y,Z}^2 cover every
# weight-2 string; weight<=1 strings come from marginals of those outcomes
BASIS_SETTINGS_K2 = 9
BASIS_SETTINGS_K1 = 3

_FD_NOISE_FLOOR = 1e-8


@dataclass(frozen=True)
class FeatureMapParams:
    """Trainable hardware-efficient feature map over an n-qubit chain."""

    n_qubits: int
    theta: tuple[float, ...]
    angle_scale: float = np.pi
    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if len(self.theta) != self.n_qubits:
            raise ValueError("theta must hold one angle per qubit")
        object.__setattr__(self, "theta", tuple(float(v) for v in self.theta))
        pairs = self.pairs or tuple((i, i + 1) for i in range(self.n_qubits - 1))
        for a, b in pairs:
            if b != a + 1:
                raise ValueError(f"entangling pair {(a, b)} is not chain-adjacent")
        object.__setattr__(self, "pairs", tuple(pairs))

    @classmethod
    def init_random(cls, n_qubits: int, seed: int = 0, spread: float = 0.1,
                    angle_scale: float = np.pi) -> "FeatureMapParams":
        rng = np.random.default_rng(seed)
        theta = rng.uniform(-spread, spread, size=n_qubits)
        return cls(n_qubits=n_qubits, theta=tuple(theta), angle_scale=angle_scale)

    def with_theta(self, theta) -> "FeatureMapParams":
        return FeatureMapParams(
            n_qubits=self.n_qubits, theta=tuple(theta),
            angle_scale=self.angle_scale, pairs=self.pairs,
        )


def broadcast_theta(theta, n_qubits: int) -> tuple[float, ...]:
    """Tile a trained angle pattern onto a wider register (qubit i gets
    theta[i mod len(theta)])."""
    theta = tuple(float(v) for v in theta)
    return tuple(theta[i % len(theta)] for i in range(n_qubits))


def coupled_subsets(n_qubits: int) -> list[tuple[int, int]]:
    """The chain-adjacent qubit pairs measured for the projected kernel."""
    if n_qubits < 2:
        raise ValueError("need at least 2 qubits for coupled pairs")
    return [(i, i + 1) for i in range(n_qubits - 1)]


def build_feature_map(x, params: FeatureMapParams) -> Circuit:
    """H layer, RY(a x), CNOT chain, RX(a x) re-uploading, CNOT chain, RY(theta)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (params.n_qubits,):
        raise ValueError(f"expected {params.n_qubits} input values, got shape {x.shape}")
    a = params.angle_scale
    c = Circuit(params.n_qubits)
    for q in range(params.n_qubits):
        c.h(q)
    for q in range(params.n_qubits):
        c.ry(q, a * x[q])
    for i, j in params.pairs:
        c.cnot(i, j)
    for q in range(params.n_qubits):
        c.rx(q, a * x[q])
    for i, j in params.pairs:
        c.cnot(i, j)
    for q in range(params.n_qubits):
        c.ry(q, params.theta[q])
    return c


# ---------------------------------------------------------------------------
# expectation tables
# ---------------------------------------------------------------------------


class ExecutionCounter:
    """Accounting of quantum-circuit workload: one table per datapoint."""

    def __init__(self):
        self.tables = 0
        self.basis_settings = 0

    def record(self, k: int):
        self.tables += 1
        self.basis_settings += BASIS_SETTINGS_K2 if k == 2 else BASIS_SETTINGS_K1


@dataclass
class ExpectationTable:
    """Per-datapoint Pauli expectations on each measured subset.

    ``values[s, 4*u + v]`` is the expectation of Pauli ``IXYZ[u]`` on the lower
    qubit and ``IXYZ[v]`` on the upper qubit of subset ``s`` (for k=1,
    ``values[s, u]`` on the single qubit).
    """

    subsets: tuple[tuple[int, ...], ...]
    values: np.ndarray
    k: int

    def lookup(self, subset, labels) -> float:
        idx = self.subsets.index(tuple(subset))
        if self.k == 2:
            u, v = (PAULI_LABELS.index(l) for l in labels)
            return float(self.values[idx, 4 * u + v])
        return float(self.values[idx, PAULI_LABELS.index(labels[0])])


# operators stacked in table order: entry 4u+v is IXYZ[u] on the lower qubit
# (LSB) and IXYZ[v] on the upper qubit (kron MSB factor)
_PAULI2_STACK = np.stack(
    [
        np.kron(PAULI_MATRICES[lv], PAULI_MATRICES[lu])
        for lu in PAULI_LABELS
        for lv in PAULI_LABELS
    ]
)
_PAULI1_STACK = np.stack([PAULI_MATRICES[l] for l in PAULI_LABELS])


def _pair_table_from_rdm(rdm: np.ndarray) -> np.ndarray:
    """All 16 two-qubit Pauli expectations of a 4x4 reduced density matrix."""
    return np.einsum("pij,ji->p", _PAULI2_STACK, rdm).real


def _single_table_from_rdm(rdm: np.ndarray) -> np.ndarray:
    return np.einsum("pij,ji->p", _PAULI1_STACK, rdm).real


def expectation_table(x, params: FeatureMapParams, backend: str = "dense",
                      k: int = 2, counter: ExecutionCounter | None = None,
                      max_bond: int = 64) -> ExpectationTable:
    """Exact local Pauli expectations of the feature state for one input."""
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    circuit = build_feature_map(x, params)
    if k == 2:
        subsets = tuple(coupled_subsets(params.n_qubits))
    else:
        subsets = tuple((q,) for q in range(params.n_qubits))
    if backend == "dense":
        state = run_circuit(circuit)
        rdms = [partial_trace(state, s).matrix for s in subsets]
    elif backend == "mps":
        mps = MpsState.zero(params.n_qubits, max_bond=max_bond).run(circuit)
        rdms = [mps.reduced_density_matrix(s) for s in subsets]
    else:
        raise ValueError(f"unknown backend {backend!r}")
    rows = [_pair_table_from_rdm(r) if k == 2 else _single_table_from_rdm(r) for r in rdms]
    if counter is not None:
        counter.record(k)
    return ExpectationTable(subsets=subsets, values=np.array(rows), k=k)


def build_tables(X, params: FeatureMapParams, backend: str = "dense", k: int = 2,
                 counter: ExecutionCounter | None = None,
                 max_bond: int = 64) -> list[ExpectationTable]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return [expectation_table(row, params, backend, k, counter, max_bond) for row in X]


# ---------------------------------------------------------------------------
# projected kernel
# ---------------------------------------------------------------------------


def _table_weight(k: int) -> float:
    return 0.25 if k == 2 else 0.5


def projected_kernel_entry(ta: ExpectationTable, tb: ExpectationTable) -> float:
    """K(a, b) = sum_subsets 2^-k sum_P <P>_a <P>_b = sum_subsets Tr[rho_a rho_b]."""
    if ta.subsets != tb.subsets or ta.k != tb.k:
        raise ValueError("expectation tables have mismatched subset structure")
    return float(_table_weight(ta.k) * np.sum(ta.values * tb.values))


def feature_vectors(tables) -> np.ndarray:
    """Stack tables into rows of a (scaled) feature matrix so the projected
    Gram matrix is the plain inner-product Gram of these rows."""
    first = tables[0]
    w = np.sqrt(_table_weight(first.k))
    return np.stack([w * t.values.reshape(-1) for t in tables])


def projected_kernel_matrix(tables, tables_b=None) -> np.ndarray:
    """Gram matrix from precomputed tables (PSD by construction)."""
    if len(tables) == 0:
        raise ValueError("need at least one expectation table")
    va = feature_vectors(tables)
    vb = va if tables_b is None else feature_vectors(tables_b)
    return va @ vb.T


# ---------------------------------------------------------------------------
# Gaussian process
# ---------------------------------------------------------------------------


@dataclass
class GpModel:
    """A fitted GP: kernel, targets, noise, and the cached Cholesky factor."""

    k_xx: np.ndarray
    y: np.ndarray  # (N, D)
    noise: float
    chol: np.ndarray = field(repr=False, default=None)
    alpha: np.ndarray = field(repr=False, default=None)


def gp_fit(k_xx: np.ndarray, y: np.ndarray, noise: float) -> GpModel:
    """Factorize K + noise*I and cache the solve against the targets."""
    k_xx = np.asarray(k_xx, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n = k_xx.shape[0]
    if k_xx.ndim != 2 or k_xx.shape != (n, n):
        raise ValueError("K_XX must be square")
    if y.shape[0] != n:
        raise ValueError("target rows must match the kernel size")
    if noise <= 0:
        raise ValueError("noise variance must be positive")
    system = k_xx + noise * np.eye(n)
    try:
        chol = np.linalg.cholesky(system)
    except np.linalg.LinAlgError:
        lo = np.linalg.eigvalsh(k_xx).min()
        if lo < -1e-9:
            raise ValueError(f"kernel matrix is not PSD (min eigenvalue {lo})") from None
        chol = np.linalg.cholesky(system + 2.0 * abs(lo) * np.eye(n))
    residual = np.linalg.norm(chol @ chol.T - system) / max(np.linalg.norm(system), 1e-30)
    if residual > 1e-8:
        raise ValueError(f"factorization residual {residual:.3e} exceeds tolerance")
    alpha = scipy.linalg.cho_solve((chol, True), y)
    return GpModel(k_xx=k_xx, y=y, noise=noise, chol=chol, alpha=alpha)


@dataclass
class GpPrediction:
    mean: np.ndarray  # (N*, D)
    variance: np.ndarray  # (N*,) shared across outputs
    variance_clamp: float  # largest negative variance clipped to zero


def gp_predict(model: GpModel, k_star_x: np.ndarray, k_star_star: np.ndarray) -> GpPrediction:
    """Posterior mean and per-input predictive variance at test inputs."""
    k_star_x = np.atleast_2d(np.asarray(k_star_x, dtype=float))
    k_star_star = np.atleast_2d(np.asarray(k_star_star, dtype=float))
    n = model.k_xx.shape[0]
    if k_star_x.shape[1] != n:
        raise ValueError("K_*X columns must match the training size")
    if k_star_star.shape != (k_star_x.shape[0],) * 2:
        raise ValueError("K_** must be square over the test inputs")
    mean = k_star_x @ model.alpha
    solved = scipy.linalg.cho_solve((model.chol, True), k_star_x.T)
    cov = k_star_star - k_star_x @ solved
    var = np.diag(cov).copy()
    clamp = float(max(0.0, -var.min())) if var.size else 0.0
    return GpPrediction(mean=mean, variance=np.clip(var, 0.0, None), variance_clamp=clamp)


def mll_from_kernel(k_xx: np.ndarray, y: np.ndarray, noise: float) -> float:
    """Joint marginal log-likelihood of D outputs sharing one kernel."""
    model = gp_fit(k_xx, y, noise)
    n, d = model.y.shape
    logdet = 2.0 * float(np.sum(np.log(np.diag(model.chol))))
    quad = float(np.sum(model.y * model.alpha))
    return -0.5 * quad - 0.5 * d * logdet - 0.5 * n * d * np.log(2.0 * np.pi)


def marginal_log_likelihood(theta, noise: float, X, Y,
                            params: FeatureMapParams, backend: str = "dense") -> float:
    """Log-likelihood as a function of the circuit angles and noise."""
    tables = build_tables(X, params.with_theta(theta), backend)
    return mll_from_kernel(projected_kernel_matrix(tables), Y, noise)


def parameter_shift_gradient(theta, noise: float, X, Y, params: FeatureMapParams,
    backend: str = "dense", counter: ExecutionCounter | None = None,
) -> tuple[np.ndarray, float]:
    """Gradient of the marginal log-likelihood over (theta, noise).

    Each table expectation obeys d<P>/d theta_i = (<P>(+pi/2) - <P>(-pi/2)) / 2,
    propagated through the kernel and the likelihood by the chain rule; the
    noise derivative is analytic from the cached factorization.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    theta = np.asarray(theta, dtype=float)
    base = params.with_theta(theta)
    tables = build_tables(X, base, backend, counter=counter)
    v = feature_vectors(tables)
    k_xx = v @ v.T
    model = gp_fit(k_xx, Y, noise)
    n, d = model.y.shape
    w_inv = scipy.linalg.cho_solve((model.chol, True), np.eye(n))
    # dL/dK = (alpha alpha^T - D W^-1) / 2 for the joint likelihood
    g_k = 0.5 * (model.alpha @ model.alpha.T - d * w_inv)
    m = g_k @ v  # (N, F); dL/dtheta_i = sum((G + G^T) V . dV_i) = 2 sum(M . dV_i)

    grad_theta = np.empty(theta.shape[0])
    for i in range(theta.shape[0]):
        shift = np.zeros_like(theta)
        shift[i] = np.pi / 2.0
        plus = feature_vectors(build_tables(X, base.with_theta(theta + shift), backend,
                                            counter=counter))
        minus = feature_vectors(build_tables(X, base.with_theta(theta - shift), backend,
                                             counter=counter))
        dv = 0.5 * (plus - minus)
        grad_theta[i] = 2.0 * float(np.sum(m * dv))
    grad_noise = 0.5 * (float(np.sum(model.alpha**2)) - d * float(np.trace(w_inv)))
    return grad_theta, grad_noise


@dataclass
class TrainResult:
    params: FeatureMapParams
    noise: float
    loss_trace: list[float]  # negative log-likelihood per iteration


def train(X, Y, init_params: FeatureMapParams, init_noise: float = 0.01,
          n_iterations: int = 100, step_size: float = 0.05,
          backend: str = "dense", counter: ExecutionCounter | None = None) -> TrainResult:
    """Plain gradient ascent on the marginal log-likelihood.

    Angles step in their native space; the noise variance steps in log space
    (same analytic gradient via the chain rule), which keeps a fixed step
    stable across the decades its curvature spans.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise ValueError("training needs at least two datapoints")
    theta = np.asarray(init_params.theta, dtype=float)
    log_noise = float(np.log(init_noise))
    trace = []
    for iteration in range(n_iterations):
        noise = float(np.exp(log_noise))
        ll = marginal_log_likelihood(theta, noise, X, Y, init_params, backend)
        if not np.isfinite(ll):
            raise RuntimeError(
                f"non-finite log-likelihood at iteration {iteration} "
                f"(noise={noise:.3e})"
            )
        trace.append(-ll)
        g_theta, g_noise = parameter_shift_gradient(
            theta, noise, X, Y, init_params, backend, counter
        )
        theta = theta + step_size * g_theta
        log_noise += step_size * g_noise * noise
        log_noise = float(np.clip(log_noise, np.log(_FD_NOISE_FLOOR), 8.0))
    noise_out = float(np.exp(log_noise)) if n_iterations else float(init_noise)
    return TrainResult(
        params=init_params.with_theta(theta), noise=noise_out, loss_trace=trace
    )


# ---------------------------------------------------------------------------
# forecasting
# ---------------------------------------------------------------------------


@dataclass
class QgpForecast:
    predictions: np.ndarray  # (D, horizon)
    truth: np.ndarray  # (D, horizon)
    variance: np.ndarray  # (horizon,) predictive variance per forecast step
    loss_trace: list[float]
    noise: float
    theta: tuple[float, ...]


def qgp_forecast(window, backend: str = "dense", theta_seed: int = 0,
                 angle_scale: float = np.pi, init_noise: float = 0.01,
                 n_iterations: int = 100, step_size: float = 0.05,
                 train_qubits: int | None = None,
                 counter: ExecutionCounter | None = None,
                 max_bond: int = 64) -> QgpForecast:
    """Direct multi-horizon GP forecast of a train/test window.

    Inputs are the multivariate observations (one qubit per series); horizon h
    is served by a GP on pairs (x_t, x_{t+h}) sharing one trained kernel. On
    wide registers the angles are trained on the first ``train_qubits`` series
    and tiled across the chain.
    """
    train_vals = window.normalized_train()  # (D, L)
    test_vals = window.normalized_test()
    d, train_len = train_vals.shape
    horizon = test_vals.shape[1]
    if train_len <= horizon:
        raise ValueError("training window must be longer than the forecast horizon")

    sub = min(train_qubits or d, d)
    sub_params = FeatureMapParams.init_random(sub, seed=theta_seed, angle_scale=angle_scale)
    x_fit = train_vals[:sub, :-1].T  # (L-1, sub)
    y_fit = train_vals[:sub, 1:].T
    fitted = train(x_fit, y_fit, sub_params, init_noise=init_noise,
                   n_iterations=n_iterations, step_size=step_size, backend=backend,
                   counter=counter)
    theta = broadcast_theta(fitted.params.theta, d)
    params = FeatureMapParams(n_qubits=d, theta=theta, angle_scale=angle_scale)

    tables = build_tables(train_vals.T, params, backend, counter=counter, max_bond=max_bond)
    k_full = projected_kernel_matrix(tables)
    origin = train_len - 1
    preds = np.empty((d, horizon))
    variance = np.empty(horizon)
    for h in range(1, horizon + 1):
        n_pairs = train_len - h
        model = gp_fit(k_full[:n_pairs, :n_pairs], train_vals[:, h:].T, fitted.noise)
        k_star = k_full[origin : origin + 1, :n_pairs]
        k_ss = k_full[origin : origin + 1, origin : origin + 1]
        out = gp_predict(model, k_star, k_ss)
        preds[:, h - 1] = out.mean[0]
        variance[h - 1] = out.variance[0]
    return QgpForecast(
        predictions=preds, truth=test_vals, variance=variance,
        loss_trace=fitted.loss_trace, noise=fitted.noise, theta=theta,
    )
