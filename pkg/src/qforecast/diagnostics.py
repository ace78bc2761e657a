"""Kernel-geometry diagnostics: classical kernel zoo, fidelity quantum kernel,
geometric difference, model complexity, and the training-size scaling study.

The geometric difference between a classical Gram matrix K_C and a quantum
Gram matrix K_Q is  g = sqrt(|| sqrt(K_Q) K_C^{-1} sqrt(K_Q) ||_spectral);
values near 1 mean the two kernels induce interchangeable geometries, growth
with sqrt(N) signals separation. Model complexity is kappa = y^T K^{-1} y.
Inverses are regularized with eps = 1e-10 * trace/N, recorded per cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .data import TimeSeriesDataset, select_correlated_subset
from .qgp import FeatureMapParams, build_feature_map, build_tables, projected_kernel_matrix
from .sim import run_circuit

RIDGE_FACTOR = 1e-10

KERNEL_KINDS = ("rbf", "laplacian", "rational_quadratic", "matern")


@dataclass(frozen=True)
class ClassicalKernelSpec:
    kind: str
    length_scale: float = 1.0
    alpha: float = 1.0  # rational-quadratic mixture
    nu: float = 1.5  # Matern smoothness, 1.5 or 2.5

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.length_scale <= 0 or self.alpha <= 0:
            raise ValueError("kernel parameters must be positive")
        if self.kind == "matern" and self.nu not in (1.5, 2.5):
            raise ValueError("Matern smoothness must be 1.5 or 2.5 (closed forms)")


def classical_kernel_matrix(X, spec: ClassicalKernelSpec, X2=None) -> np.ndarray:
    """Closed-form Gram matrix of a classical kernel."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if X2 is None else np.atleast_2d(np.asarray(X2, dtype=float))
    ell = spec.length_scale
    if spec.kind == "rbf":
        d2 = cdist(X, Y, "sqeuclidean")
        k = np.exp(-d2 / (2.0 * ell**2))
    elif spec.kind == "laplacian":
        d1 = cdist(X, Y, "cityblock")
        k = np.exp(-d1 / ell)
    elif spec.kind == "rational_quadratic":
        d2 = cdist(X, Y, "sqeuclidean")
        k = (1.0 + d2 / (2.0 * spec.alpha * ell**2)) ** (-spec.alpha)
    else:  # matern
        d = cdist(X, Y, "euclidean")
        if spec.nu == 1.5:
            z = np.sqrt(3.0) * d / ell
            k = (1.0 + z) * np.exp(-z)
        else:
            z = np.sqrt(5.0) * d / ell
            k = (1.0 + z + z**2 / 3.0) * np.exp(-z)
    if X2 is None:
        k = 0.5 * (k + k.T)
    return k


def median_length_scale(X) -> float:
    """Median pairwise Euclidean distance (falls back to 1 for degenerate sets)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = cdist(X, X, "euclidean")
    vals = d[np.triu_indices_from(d, k=1)]
    med = float(np.median(vals)) if vals.size else 0.0
    return med if med > 0 else 1.0


def default_kernel_specs(length_scale: float) -> dict[str, ClassicalKernelSpec]:
    return {
        "rbf": ClassicalKernelSpec("rbf", length_scale),
        "laplacian": ClassicalKernelSpec("laplacian", length_scale),
        "rational_quadratic": ClassicalKernelSpec("rational_quadratic", length_scale),
        "matern": ClassicalKernelSpec("matern", length_scale, nu=1.5),
    }


def fidelity_kernel_matrix(X, params: FeatureMapParams, X2=None) -> np.ndarray:
    """K(i,j) = |<psi(x_i)|psi(x_j)>|^2 under the feature-map encoding."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    states = np.stack([run_circuit(build_feature_map(x, params)).vector for x in X])
    if X2 is None:
        overlaps = states @ states.conj().T
        k = np.abs(overlaps) ** 2
        np.fill_diagonal(k, 1.0)
        return 0.5 * (k + k.T)
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    other = np.stack([run_circuit(build_feature_map(x, params)).vector for x in X2])
    return np.abs(states @ other.conj().T) ** 2


def _ridge_eps(K: np.ndarray) -> float:
    return RIDGE_FACTOR * float(np.trace(K)) / K.shape[0]


def _psd_sqrt(K: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(0.5 * (K + K.T))
    w = np.clip(w, 0.0, None)
    return (u * np.sqrt(w)) @ u.T


def geometric_difference(k_classical: np.ndarray, k_quantum: np.ndarray) -> float:
    """g = sqrt of the spectral norm of sqrt(K_Q) (K_C + eps I)^{-1} sqrt(K_Q)."""
    k_classical = np.asarray(k_classical, dtype=float)
    k_quantum = np.asarray(k_quantum, dtype=float)
    if k_classical.shape != k_quantum.shape or k_classical.ndim != 2:
        raise ValueError("kernel matrices must share a square shape")
    eps = _ridge_eps(k_classical)
    inv = np.linalg.inv(0.5 * (k_classical + k_classical.T) + eps * np.eye(k_classical.shape[0]))
    root = _psd_sqrt(k_quantum)
    middle = root @ inv @ root
    top = float(np.linalg.eigvalsh(0.5 * (middle + middle.T)).max())
    return float(np.sqrt(max(top, 0.0)))


def model_complexity(K: np.ndarray, y: np.ndarray) -> float:
    """kappa = y^T (K + eps I)^{-1} y with the standard trace-scaled ridge."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != y.shape[0]:
        raise ValueError("kernel and targets have mismatched sizes")
    eps = _ridge_eps(K)
    system = 0.5 * (K + K.T) + eps * np.eye(K.shape[0])
    kappa = float(y @ scipy.linalg.solve(system, y, assume_a="pos"))
    return max(kappa, 0.0)


@dataclass
class DiagnosticsRecord:
    """One (training size, repetition) cell of the scaling study."""

    n: int
    repetition: int
    seed: int
    g_by_kernel: dict[str, float]
    kappa_by_kernel: dict[str, float]
    eps_classical: dict[str, float]
    eps_quantum: float
    length_scale: float = 1.0


def scaling_study(dataset: TimeSeriesDataset, sizes, repetitions: int = 10,
                  seed: int = 0, subset_size: int = 5,
                  angle_scale: float = np.pi,
                  quantum_kernel: str = "fidelity") -> list[DiagnosticsRecord]:
    """Geometric difference and model complexity versus training-set size.

    For every size N and repetition: subsample N observation vectors from a
    correlated customer subset, build the quantum kernel and the four
    classical kernels (median-distance length scales), and record g and kappa.
    The target is the subset-mean demand one hour ahead.
    """
    if quantum_kernel not in ("fidelity", "projected"):
        raise ValueError("quantum_kernel must be 'fidelity' or 'projected'")
    spec = select_correlated_subset(dataset, subset_size)
    sub = dataset.subset(spec.member_ids)
    vals = sub.values
    lo = vals.min(axis=1, keepdims=True)
    spread = np.ptp(vals, axis=1, keepdims=True)
    normed = (vals - lo) / np.where(spread > 0, spread, 1.0)
    x_pool = normed[:, :-1].T  # observation at hour t
    y_pool = normed[:, 1:].mean(axis=0)  # subset-mean demand at t+1
    params = FeatureMapParams(
        n_qubits=subset_size, theta=(0.0,) * subset_size, angle_scale=angle_scale
    )
    if max(sizes) > x_pool.shape[0]:
        raise ValueError("requested size exceeds the available observations")
    records = []
    for n in sizes:
        for rep in range(repetitions):
            rng = np.random.default_rng([seed, int(n), rep])
            idx = rng.choice(x_pool.shape[0], size=int(n), replace=False)
            X = x_pool[idx]
            y = y_pool[idx]
            ell = median_length_scale(X)
            if quantum_kernel == "fidelity":
                k_q = fidelity_kernel_matrix(X, params)
            else:
                k_q = projected_kernel_matrix(build_tables(X, params))
            g_by, kappa_by, eps_by = {}, {}, {}
            for name, kspec in default_kernel_specs(ell).items():
                k_c = classical_kernel_matrix(X, kspec)
                g_by[name] = geometric_difference(k_c, k_q)
                kappa_by[name] = model_complexity(k_c, y)
                eps_by[name] = _ridge_eps(k_c)
            kappa_by["quantum"] = model_complexity(k_q, y)
            records.append(
                DiagnosticsRecord(
                    n=int(n), repetition=rep, seed=seed,
                    g_by_kernel=g_by, kappa_by_kernel=kappa_by,
                    eps_classical=eps_by, eps_quantum=_ridge_eps(k_q),
                    length_scale=ell,
                )
            )
    return records


@dataclass
class ScalingSummary:
    n: int
    g_mean: dict[str, float] = field(default_factory=dict)
    g_std: dict[str, float] = field(default_factory=dict)
    kappa_mean: dict[str, float] = field(default_factory=dict)
    kappa_std: dict[str, float] = field(default_factory=dict)


def summarize_scaling(records) -> list[ScalingSummary]:
    """Mean and standard deviation across repetitions, per training size."""
    by_n: dict[int, list[DiagnosticsRecord]] = {}
    for r in records:
        by_n.setdefault(r.n, []).append(r)
    out = []
    for n in sorted(by_n):
        cell = by_n[n]
        summary = ScalingSummary(n=n)
        for name in cell[0].g_by_kernel:
            vals = np.array([r.g_by_kernel[name] for r in cell])
            summary.g_mean[name] = float(vals.mean())
            summary.g_std[name] = float(vals.std())
        for name in cell[0].kappa_by_kernel:
            vals = np.array([r.kappa_by_kernel[name] for r in cell])
            summary.kappa_mean[name] = float(vals.mean())
            summary.kappa_std[name] = float(vals.std())
        out.append(summary)
    return out
