"""Projected kernel, GP inference, and parameter-shift training."""

import numpy as np
import pytest

from qforecast.data import WindowSplit
from qforecast.qgp import (
    ExecutionCounter,
    FeatureMapParams,
    broadcast_theta,
    build_feature_map,
    build_tables,
    coupled_subsets,
    expectation_table,
    gp_fit,
    gp_predict,
    marginal_log_likelihood,
    mll_from_kernel,
    parameter_shift_gradient,
    projected_kernel_entry,
    projected_kernel_matrix,
    qgp_forecast,
    train,
)
from qforecast.sim import (
    Circuit,
    PauliString,
    QuantumState,
    apply_gate,
    Gate,
    partial_trace,
    pauli_expectation,
    run_circuit,
)


def params_for(n, seed=0, theta=None):
    if theta is not None:
        return FeatureMapParams(n_qubits=n, theta=tuple(theta))
    return FeatureMapParams.init_random(n, seed=seed)


# ---------------------------------------------------------------------------
# feature map
# ---------------------------------------------------------------------------


def test_feature_map_layer_structure():
    p = params_for(5)
    c = build_feature_map(np.full(5, 0.3), p)
    kinds = [g.kind for g in c]
    assert kinds == (
        ["H"] * 5 + ["RY"] * 5 + ["CNOT"] * 4 + ["RX"] * 5 + ["CNOT"] * 4 + ["RY"] * 5
    )


def test_feature_map_chain_local():
    p = params_for(7)
    c = build_feature_map(np.linspace(0, 1, 7), p)
    for g in c:
        if len(g.targets) == 2:
            assert abs(g.targets[0] - g.targets[1]) == 1


def test_feature_map_zero_angles():
    p = FeatureMapParams(n_qubits=3, theta=(0.0, 0.0, 0.0))
    c = build_feature_map(np.zeros(3), p)
    for g in c:
        if g.kind in ("RX", "RY"):
            assert g.angle == 0.0


def test_feature_map_length_mismatch():
    with pytest.raises(ValueError):
        build_feature_map(np.zeros(3), params_for(4))


def test_coupled_subsets():
    assert coupled_subsets(2) == [(0, 1)]
    assert len(coupled_subsets(5)) == 4
    assert len(coupled_subsets(100)) == 99
    with pytest.raises(ValueError):
        coupled_subsets(1)


def test_broadcast_theta():
    assert broadcast_theta((1.0, 2.0, 3.0), 7) == (1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 1.0)


# ---------------------------------------------------------------------------
# expectation tables
# ---------------------------------------------------------------------------


def test_table_identity_entries():
    p = params_for(4, seed=1)
    t = expectation_table(np.array([0.1, 0.6, 0.3, 0.9]), p)
    for s in range(len(t.subsets)):
        assert t.lookup(t.subsets[s], "II") == pytest.approx(1.0)
    assert np.all(np.abs(t.values) <= 1.0 + 1e-10)


def test_table_matches_pauli_expectation():
    p = params_for(4, seed=2)
    x = np.array([0.2, 0.8, 0.5, 0.1])
    t = expectation_table(x, p)
    state = run_circuit(build_feature_map(x, p))
    for (i, j) in t.subsets:
        for labels, pauli in [
            ("ZZ", PauliString.pair(i, "Z", j, "Z")),
            ("XI", PauliString.single(i, "X")),
            ("IY", PauliString.single(j, "Y")),
            ("XY", PauliString.pair(i, "X", j, "Y")),
        ]:
            assert t.lookup((i, j), labels) == pytest.approx(
                pauli_expectation(state, pauli), abs=1e-10
            )


def test_table_backends_agree():
    for n in (3, 6, 12):
        p = params_for(n, seed=3)
        x = np.linspace(0.05, 0.95, n)
        dense = expectation_table(x, p, backend="dense")
        mps = expectation_table(x, p, backend="mps")
        assert np.allclose(dense.values, mps.values, atol=1e-10)


def test_table_purity_reconstruction():
    p = params_for(5, seed=4)
    x = np.array([0.3, 0.1, 0.9, 0.4, 0.7])
    t = expectation_table(x, p)
    state = run_circuit(build_feature_map(x, p))
    for idx, subset in enumerate(t.subsets):
        rho = partial_trace(state, subset).matrix
        purity = float(np.real(np.trace(rho @ rho)))
        reconstructed = 0.25 * float(np.sum(t.values[idx] ** 2))
        assert reconstructed == pytest.approx(purity, abs=1e-10)
        assert 0.0 < purity <= 1.0 + 1e-12


def test_k1_tables():
    p = params_for(3, seed=5)
    t = expectation_table(np.array([0.2, 0.5, 0.8]), p, k=1)
    assert t.subsets == ((0,), (1,), (2,))
    assert t.values.shape == (3, 4)
    assert np.allclose(t.values[:, 0], 1.0)


# ---------------------------------------------------------------------------
# projected kernel
# ---------------------------------------------------------------------------


def trace_product_oracle(xa, xb, p):
    """Sum over coupled pairs of Tr[rho_K(xa) rho_K(xb)] via partial traces."""
    sa = run_circuit(build_feature_map(xa, p))
    sb = run_circuit(build_feature_map(xb, p))
    total = 0.0
    for subset in coupled_subsets(p.n_qubits):
        ra = partial_trace(sa, subset).matrix
        rb = partial_trace(sb, subset).matrix
        total += float(np.real(np.trace(ra @ rb)))
    return total


def test_kernel_entry_equals_trace_product():
    rng = np.random.default_rng(50)
    p = params_for(6, seed=6)
    for _ in range(5):
        xa, xb = rng.random(6), rng.random(6)
        ta = expectation_table(xa, p)
        tb = expectation_table(xb, p)
        got = projected_kernel_entry(ta, tb)
        assert got == pytest.approx(trace_product_oracle(xa, xb, p), abs=1e-10)
        assert got == pytest.approx(projected_kernel_entry(tb, ta))


def test_kernel_entry_identical_inputs_is_total_purity():
    p = params_for(4, seed=7)
    x = np.array([0.6, 0.2, 0.9, 0.4])
    t = expectation_table(x, p)
    entry = projected_kernel_entry(t, t)
    state = run_circuit(build_feature_map(x, p))
    purities = [
        float(np.real(np.trace(partial_trace(state, s).matrix @ partial_trace(state, s).matrix)))
        for s in coupled_subsets(4)
    ]
    assert entry == pytest.approx(sum(purities), abs=1e-10)
    assert entry <= len(purities) + 1e-10


def test_kernel_matrix_psd_and_counting():
    rng = np.random.default_rng(51)
    p = params_for(4, seed=8)
    counter = ExecutionCounter()
    X = rng.random((20, 4))
    tables = build_tables(X, p, counter=counter)
    k = projected_kernel_matrix(tables)
    assert counter.tables == 20  # one table per datapoint, reused across the Gram
    assert counter.basis_settings == 20 * 9
    assert np.allclose(k, k.T)
    assert np.linalg.eigvalsh(k).min() >= -1e-9
    single = projected_kernel_matrix(tables[:1])
    assert single[0, 0] == pytest.approx(projected_kernel_entry(tables[0], tables[0]))


def test_kernel_cross_matrix():
    rng = np.random.default_rng(52)
    p = params_for(3, seed=9)
    ta = build_tables(rng.random((4, 3)), p)
    tb = build_tables(rng.random((6, 3)), p)
    cross = projected_kernel_matrix(ta, tb)
    assert cross.shape == (4, 6)
    assert cross[2, 5] == pytest.approx(projected_kernel_entry(ta[2], tb[5]))


# ---------------------------------------------------------------------------
# GP regression
# ---------------------------------------------------------------------------


def test_gp_fit_identity_kernel():
    y = np.array([[1.0, -1.0], [2.0, 0.5], [0.0, 3.0]])
    noise = 0.25
    model = gp_fit(np.eye(3), y, noise)
    pred = gp_predict(model, np.eye(3), np.eye(3))
    assert np.allclose(pred.mean, y / (1 + noise))
    assert pred.mean.shape == (3, 2)


def test_gp_fit_residual_and_errors():
    rng = np.random.default_rng(53)
    a = rng.normal(size=(8, 8))
    k = a @ a.T
    model = gp_fit(k, rng.normal(size=8), 0.1)
    recon = model.chol @ model.chol.T
    assert np.linalg.norm(recon - (k + 0.1 * np.eye(8))) <= 1e-8 * np.linalg.norm(k)
    with pytest.raises(ValueError):
        gp_fit(k, np.ones(5), 0.1)
    with pytest.raises(ValueError):
        gp_fit(k, np.ones(8), 0.0)
    with pytest.raises(ValueError):
        gp_fit(np.array([[1.0, 0.0], [0.0, -1.0]]), np.ones(2), 0.01)


def test_gp_predict_interpolation():
    rng = np.random.default_rng(54)
    x = rng.random((10, 3))
    sq = ((x[:, None, :] - x[None, :, :]) ** 2).sum(-1)
    k = np.exp(-sq)
    y = rng.normal(size=(10, 2))
    model = gp_fit(k, y, 1e-8)
    pred = gp_predict(model, k, k)
    assert np.abs(pred.mean - y).mean() < 1e-3


def test_gp_predict_prior_reversion_and_variance_bound():
    rng = np.random.default_rng(55)
    k = np.eye(5)
    model = gp_fit(k, rng.normal(size=(5, 1)), 0.1)
    k_ss = np.diag([2.0, 3.0])
    pred = gp_predict(model, np.zeros((2, 5)), k_ss)
    assert np.allclose(pred.mean, 0.0)
    assert np.allclose(pred.variance, [2.0, 3.0])
    # posterior variance never exceeds the prior variance
    pred2 = gp_predict(model, 0.5 * np.eye(5)[:2], np.eye(2))
    assert np.all(pred2.variance <= 1.0 + 1e-9)
    assert pred2.variance_clamp <= 1e-9


def test_mll_trivial_value():
    n, d = 4, 3
    got = mll_from_kernel(np.zeros((n, n)), np.zeros((n, d)), 1.0)
    assert got == pytest.approx(-0.5 * n * d * np.log(2 * np.pi))


def test_mll_matches_dense_oracle():
    rng = np.random.default_rng(56)
    a = rng.normal(size=(9, 9))
    k = a @ a.T
    y = rng.normal(size=(9, 2))
    noise = 0.3
    got = mll_from_kernel(k, y, noise)
    c = k + noise * np.eye(9)
    want = (
        -0.5 * np.sum(y * (np.linalg.inv(c) @ y))
        - 0.5 * y.shape[1] * np.log(np.linalg.det(c))
        - 0.5 * 9 * y.shape[1] * np.log(2 * np.pi)
    )
    assert got == pytest.approx(want, abs=1e-8)


def test_quadratic_form_monotone_in_noise():
    rng = np.random.default_rng(57)
    a = rng.normal(size=(7, 7))
    k = a @ a.T
    y = rng.normal(size=7)
    vals = [y @ np.linalg.inv(k + s * np.eye(7)) @ y for s in (0.1, 0.5, 1.0, 2.0)]
    assert all(v1 > v2 for v1, v2 in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# gradients and training
# ---------------------------------------------------------------------------


def test_parameter_shift_rule_single_qubit():
    def z_of_theta(theta):
        state = apply_gate(QuantumState.zero_state(1), Gate("RY", (0,), theta))
        return pauli_expectation(state, PauliString.single(0, "Z"))

    for theta in (0.0, 0.4, 1.3, 2.8):
        shift = 0.5 * (z_of_theta(theta + np.pi / 2) - z_of_theta(theta - np.pi / 2))
        assert shift == pytest.approx(-np.sin(theta), abs=1e-12)
        assert z_of_theta(theta) == pytest.approx(np.cos(theta), abs=1e-12)


def test_kernel_invariant_under_trailing_rotations():
    # the final per-qubit RY layer conjugates every reduced state identically,
    # so pairwise trace products (and hence the projected kernel) cannot move
    rng = np.random.default_rng(64)
    X = rng.random((5, 4))
    p0 = FeatureMapParams(n_qubits=4, theta=(0.0,) * 4)
    p1 = FeatureMapParams(n_qubits=4, theta=tuple(rng.uniform(-2, 2, 4)))
    k0 = projected_kernel_matrix(build_tables(X, p0))
    k1 = projected_kernel_matrix(build_tables(X, p1))
    assert np.allclose(k0, k1, atol=1e-12)


def test_likelihood_gradient_matches_finite_differences():
    rng = np.random.default_rng(58)
    n_q, n = 4, 6
    p = params_for(n_q, seed=10)
    X = rng.random((n, n_q))
    Y = rng.normal(size=(n, 2))
    theta = np.asarray(p.theta)
    noise = 0.5
    g_theta, g_noise = parameter_shift_gradient(theta, noise, X, Y, p)
    eps = 1e-4
    for i in range(n_q):
        d = np.zeros(n_q)
        d[i] = eps
        fd = (
            marginal_log_likelihood(theta + d, noise, X, Y, p)
            - marginal_log_likelihood(theta - d, noise, X, Y, p)
        ) / (2 * eps)
        assert g_theta[i] == pytest.approx(fd, abs=1e-6)
    fd_noise = (
        marginal_log_likelihood(theta, noise + eps, X, Y, p)
        - marginal_log_likelihood(theta, noise - eps, X, Y, p)
    ) / (2 * eps)
    assert g_noise == pytest.approx(fd_noise, abs=1e-6)


def test_gradient_zero_targets():
    rng = np.random.default_rng(59)
    p = params_for(3, seed=11)
    X = rng.random((5, 3))
    Y = np.zeros((5, 2))
    _, g_noise = parameter_shift_gradient(np.asarray(p.theta), 0.1, X, Y, p)
    # with zero targets only the log-determinant term contributes
    from qforecast.qgp import projected_kernel_matrix as pkm

    k = pkm(build_tables(X, p))
    w = np.linalg.inv(k + 0.1 * np.eye(5))
    assert g_noise == pytest.approx(-0.5 * 2 * np.trace(w), abs=1e-10)


def test_train_loss_improves_on_toy():
    rng = np.random.default_rng(60)
    X = rng.random((4, 2))
    Y = rng.normal(size=(4, 1))
    p = params_for(2, seed=12)
    result = train(X, Y, p, init_noise=0.1, n_iterations=25, step_size=1e-3)
    assert result.loss_trace[-1] <= result.loss_trace[0]
    assert len(result.loss_trace) == 25


def test_train_zero_iterations_and_determinism():
    rng = np.random.default_rng(61)
    X = rng.random((3, 2))
    Y = rng.normal(size=(3, 1))
    p = params_for(2, seed=13)
    r0 = train(X, Y, p, init_noise=0.05, n_iterations=0)
    assert r0.params.theta == p.theta and r0.noise == 0.05 and r0.loss_trace == []
    r1 = train(X, Y, p, init_noise=0.05, n_iterations=10, step_size=0.02)
    r2 = train(X, Y, p, init_noise=0.05, n_iterations=10, step_size=0.02)
    assert r1.loss_trace == r2.loss_trace
    assert r1.params.theta == r2.params.theta


# ---------------------------------------------------------------------------
# forecasting
# ---------------------------------------------------------------------------


def make_window(series, train_len=15, horizon=5):
    series = np.asarray(series, dtype=float)
    return WindowSplit(
        origin=0,
        train=series[:, :train_len],
        test=series[:, train_len : train_len + horizon],
        customer_ids=[str(i) for i in range(series.shape[0])],
    )


def test_qgp_forecast_shapes():
    rng = np.random.default_rng(62)
    series = rng.random((5, 20))
    out = qgp_forecast(make_window(series), n_iterations=3)
    assert out.predictions.shape == (5, 5)
    assert out.variance.shape == (5,)
    assert len(out.loss_trace) == 3
    assert np.all(out.variance >= 0)


def test_qgp_forecast_constant_dataset():
    series = np.full((3, 20), 1.7)
    out = qgp_forecast(make_window(series), n_iterations=2)
    sigma = np.sqrt(out.variance) + 1e-6
    assert np.all(np.abs(out.predictions - 0.0) <= 2 * sigma[None, :] + 1e-6)


def test_qgp_forecast_theta_tiling_for_wide_registers():
    rng = np.random.default_rng(63)
    series = rng.random((8, 20))
    out = qgp_forecast(make_window(series), n_iterations=2, train_qubits=4)
    assert out.predictions.shape == (8, 5)
    assert out.theta[:4] == out.theta[4:]


def test_qgp_forecast_hundred_customers_on_mps():
    from qforecast.metrics import tier_classify

    rng = np.random.default_rng(65)
    base = 0.4 + 0.2 * np.sin(np.arange(20) / 3.0)
    series = np.clip(base + 0.1 * rng.normal(size=(100, 20)), 0.0, None)
    out = qgp_forecast(make_window(series), backend="mps", n_iterations=3,
                       train_qubits=5)
    assert out.predictions.shape == (100, 5)
    m_all = np.abs(out.predictions - out.truth).mean(axis=1)
    tiers = tier_classify(m_all)
    assert sum(t.count for t in tiers) == 100
