"""Classical comparators: echo state network with kernel ridge readout,
coregionalized multi-output GP, and naive persistence.

All baselines consume the same window objects as the quantum models and
produce forecasts in the same normalized space, so side-by-side metric
tables compare like with like.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .kqrc import ForecastOutput, krr_fit, krr_predict, rbf_kernel


@dataclass(frozen=True)
class EsnConfig:
    reservoir_size: int = 100
    spectral_radius: float = 0.9
    leak_rate: float = 0.3
    input_scale: float = 1.0
    seed: int = 0
    gamma: float = 1.0
    ridge_lambda: float = 1e-3

    def __post_init__(self):
        if not 0 < self.leak_rate <= 1:
            raise ValueError("leak_rate must lie in (0, 1]")
        if self.reservoir_size < 1 or self.spectral_radius <= 0:
            raise ValueError("invalid reservoir parameters")


def _esn_weights(cfg: EsnConfig, stream: int):
    rng = np.random.default_rng([cfg.seed, stream])
    w = rng.uniform(-1.0, 1.0, size=(cfg.reservoir_size, cfg.reservoir_size))
    radius = np.max(np.abs(np.linalg.eigvals(w)))
    if radius == 0:
        raise ValueError("recurrent matrix has zero spectral radius")
    w *= cfg.spectral_radius / radius
    w_in = rng.uniform(-1.0, 1.0, size=cfg.reservoir_size) * cfg.input_scale
    return w, w_in


def esn_features(series, cfg: EsnConfig, stream: int = 0, h0=None) -> np.ndarray:
    """Leaky reservoir states h_t = (1-a) h_{t-1} + a tanh(W h_{t-1} + W_in x_t)."""
    series = np.asarray(series, dtype=float).reshape(-1)
    w, w_in = _esn_weights(cfg, stream)
    h = np.zeros(cfg.reservoir_size) if h0 is None else np.asarray(h0, dtype=float).copy()
    a = cfg.leak_rate
    rows = np.empty((series.shape[0], cfg.reservoir_size))
    for t, x in enumerate(series):
        h = (1.0 - a) * h + a * np.tanh(w @ h + w_in * x)
        rows[t] = h
    return rows


def esn_krr_forecast(window, cfg: EsnConfig) -> ForecastOutput:
    """Independent per-stream reservoirs with the shared ridge readout scheme:
    per-horizon regressors anchored at the last training feature row."""
    train = window.normalized_train()
    test = window.normalized_test()
    n_streams, train_len = train.shape
    horizon = test.shape[1]
    full = np.concatenate([train, window.normalized_test(clip=True)], axis=1)
    preds = np.empty((n_streams, horizon))
    for s in range(n_streams):
        rows = esn_features(full[s], cfg, stream=s)[:train_len]
        k_full = rbf_kernel(rows, rows, cfg.gamma)
        origin = rows[train_len - 1 : train_len]
        for h in range(1, horizon + 1):
            n_pairs = train_len - h
            readout = krr_fit(k_full[:n_pairs, :n_pairs], train[s, h:], cfg.ridge_lambda)
            k_test = rbf_kernel(origin, rows[:n_pairs], cfg.gamma)
            preds[s, h - 1] = krr_predict(readout, k_test)[0]
    return ForecastOutput(predictions=preds, truth=test)


def naive_persistence(window, horizon: int | None = None) -> ForecastOutput:
    """Forecast every future step with the last observed training value."""
    train = window.normalized_train()
    test = window.normalized_test()
    if train.shape[1] < 1:
        raise ValueError("training window is empty")
    horizon = test.shape[1] if horizon is None else horizon
    preds = np.repeat(train[:, -1:], horizon, axis=1)
    return ForecastOutput(predictions=preds, truth=test[:, :horizon])


# ---------------------------------------------------------------------------
# linear model of coregionalization
# ---------------------------------------------------------------------------


@dataclass
class LmcConfig:
    length_scale: float = 0.5
    noise: float = 0.05
    optimize: bool = True
    n_iterations: int = 80
    step_size: float = 0.02


@dataclass
class LmcModel:
    """Fitted LMC: B = L L^T output mixing, RBF input kernel, noise."""

    mixing_factor: np.ndarray  # lower-triangular L, (D, D)
    length_scale: float
    noise: float
    x_train: np.ndarray = field(repr=False, default=None)
    y_train: np.ndarray = field(repr=False, default=None)

    @property
    def coregionalization(self) -> np.ndarray:
        return self.mixing_factor @ self.mixing_factor.T


def _rbf(x, y, ell):
    return np.exp(-cdist(np.atleast_2d(x), np.atleast_2d(y), "sqeuclidean") / (2 * ell**2))


def _stack(y):
    return y.T.reshape(-1)  # output-major stacking: index d*N + i


def lmc_covariance(model: LmcModel, x=None) -> np.ndarray:
    x = model.x_train if x is None else x
    return np.kron(model.coregionalization, _rbf(x, x, model.length_scale))


def lmc_log_likelihood(model: LmcModel) -> float:
    y = _stack(model.y_train)
    c = lmc_covariance(model) + model.noise * np.eye(y.shape[0])
    chol = np.linalg.cholesky(c)
    alpha = scipy.linalg.cho_solve((chol, True), y)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return float(-0.5 * y @ alpha - 0.5 * logdet - 0.5 * y.shape[0] * np.log(2 * np.pi))


def _lmc_gradients(model: LmcModel):
    """Gradient of the log-likelihood over (log ell, L entries, log noise)."""
    x, ymat = model.x_train, model.y_train
    d = ymat.shape[1]
    y = _stack(ymat)
    kx = _rbf(x, x, model.length_scale)
    b = model.coregionalization
    c = np.kron(b, kx) + model.noise * np.eye(y.shape[0])
    chol = np.linalg.cholesky(c)
    alpha = scipy.linalg.cho_solve((chol, True), y)
    cinv = scipy.linalg.cho_solve((chol, True), np.eye(y.shape[0]))
    g_c = 0.5 * (np.outer(alpha, alpha) - cinv)

    d2 = cdist(x, x, "sqeuclidean")
    dkx_dlog_ell = kx * d2 / model.length_scale**2
    g_log_ell = float(np.sum(g_c * np.kron(b, dkx_dlog_ell)))

    l_factor = model.mixing_factor
    g_l = np.zeros_like(l_factor)
    for a in range(d):
        for bcol in range(a + 1):
            e = np.zeros((d, d))
            e[a, bcol] = 1.0
            db = e @ l_factor.T + l_factor @ e.T
            g_l[a, bcol] = float(np.sum(g_c * np.kron(db, kx)))
    g_log_noise = float(np.trace(g_c) * model.noise)
    return g_log_ell, g_l, g_log_noise


def lmc_fit(x_train, y_train, cfg: LmcConfig) -> tuple[LmcModel, list[float]]:
    """Fit by gradient ascent on the marginal likelihood (or keep B = I fixed)."""
    x_train = np.atleast_2d(np.asarray(x_train, dtype=float))
    y_train = np.asarray(y_train, dtype=float)
    if y_train.ndim == 1:
        y_train = y_train[:, None]
    d = y_train.shape[1]
    model = LmcModel(
        mixing_factor=np.eye(d), length_scale=cfg.length_scale, noise=cfg.noise,
        x_train=x_train, y_train=y_train,
    )
    trace = [-lmc_log_likelihood(model)]
    if not cfg.optimize:
        return model, trace
    log_ell = np.log(cfg.length_scale)
    log_noise = np.log(cfg.noise)
    for _ in range(cfg.n_iterations):
        g_log_ell, g_l, g_log_noise = _lmc_gradients(model)
        log_ell += cfg.step_size * g_log_ell
        log_noise += cfg.step_size * g_log_noise
        model.mixing_factor = model.mixing_factor + cfg.step_size * g_l
        model.length_scale = float(np.exp(np.clip(log_ell, -6, 6)))
        model.noise = float(np.exp(np.clip(log_noise, -12, 4)))
        ll = lmc_log_likelihood(model)
        if not np.isfinite(ll):
            raise RuntimeError("non-finite LMC likelihood during optimization")
        trace.append(-ll)
    return model, trace


def lmc_predict(model: LmcModel, x_star) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean (N*, D) and per-(input, output) variance (N*, D)."""
    x_star = np.atleast_2d(np.asarray(x_star, dtype=float))
    d = model.y_train.shape[1]
    y = _stack(model.y_train)
    c = lmc_covariance(model) + model.noise * np.eye(y.shape[0])
    chol = np.linalg.cholesky(c)
    k_cross = np.kron(model.coregionalization, _rbf(x_star, model.x_train, model.length_scale))
    alpha = scipy.linalg.cho_solve((chol, True), y)
    mean = (k_cross @ alpha).reshape(d, -1).T  # back to (N*, D)
    k_ss = np.kron(model.coregionalization, _rbf(x_star, x_star, model.length_scale))
    solved = scipy.linalg.cho_solve((chol, True), k_cross.T)
    cov = k_ss - k_cross @ solved
    var = np.clip(np.diag(cov), 0.0, None).reshape(d, -1).T
    return mean, var


@dataclass
class MogpForecast(ForecastOutput):
    variance: np.ndarray | None = None
    loss_trace: list[float] | None = None


def mogp_fit_predict(window, cfg: LmcConfig | None = None) -> MogpForecast:
    """Coregionalized GP forecast with the shared direct multi-horizon scheme."""
    cfg = cfg or LmcConfig()
    train = window.normalized_train()
    test = window.normalized_test()
    d, train_len = train.shape
    horizon = test.shape[1]
    if train_len <= horizon:
        raise ValueError("training window must be longer than the forecast horizon")
    model, trace = lmc_fit(train[:, :-1].T, train[:, 1:].T, cfg)
    fitted = LmcConfig(
        length_scale=model.length_scale, noise=model.noise, optimize=False
    )
    origin = train[:, train_len - 1 : train_len].T
    preds = np.empty((d, horizon))
    var = np.empty((d, horizon))
    for h in range(1, horizon + 1):
        n_pairs = train_len - h
        mh, _ = lmc_fit(train[:, :n_pairs].T, train[:, h:].T, fitted)
        mh.mixing_factor = model.mixing_factor
        mean, v = lmc_predict(mh, origin)
        preds[:, h - 1] = mean[0]
        var[:, h - 1] = v[0]
    return MogpForecast(
        predictions=preds, truth=test, variance=var, loss_trace=trace
    )
