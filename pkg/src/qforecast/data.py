"""Synthetic correlated smart-meter data, CSV ingestion, subsets, and windows.

The generator mixes a shared daily sinusoid, a per-cluster AR(1) latent
factor, idiosyncratic noise, and occasional consumption peaks. The cluster
loading dial both aligns the customers' daily phases and scales the shared
factor, so mean pairwise correlation grows monotonically with it.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

NORMALIZATION_SLACK = 0.05  # tolerated extrapolation of test values past [0, 1]


@dataclass(frozen=True)
class GeneratorParams:
    n_clusters: int = 3
    cluster_loading: float = 0.8
    daily_amplitude: float = 0.35
    factor_scale: float = 0.35
    ar_coeff: float = 0.8
    noise_scale: float = 0.25
    peak_rate: float = 0.02
    peak_scale: float = 1.2
    base_level: float = 0.6


@dataclass
class TimeSeriesDataset:
    """S customer series sampled hourly: values[s, t] in kWh-like units."""

    values: np.ndarray  # (S, T)
    customer_ids: list[str]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D (customers x hours) array")
        if len(self.customer_ids) != self.values.shape[0]:
            raise ValueError("customer id count does not match the value rows")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("dataset contains non-finite values")

    @property
    def n_customers(self) -> int:
        return self.values.shape[0]

    @property
    def n_hours(self) -> int:
        return self.values.shape[1]

    def subset(self, member_ids) -> "TimeSeriesDataset":
        index = {cid: i for i, cid in enumerate(self.customer_ids)}
        missing = [m for m in member_ids if m not in index]
        if missing:
            raise ValueError(f"unknown customer ids {missing}")
        rows = [index[m] for m in member_ids]
        return TimeSeriesDataset(
            values=self.values[rows].copy(),
            customer_ids=list(member_ids),
            meta=dict(self.meta),
        )


@dataclass(frozen=True)
class SubsetSpec:
    role: str  # 'group' | 'triplet' | 'utility'
    member_ids: tuple[str, ...]

    def __post_init__(self):
        if self.role not in ("group", "triplet", "utility"):
            raise ValueError(f"unknown subset role {self.role!r}")
        if len(set(self.member_ids)) != len(self.member_ids):
            raise ValueError("subset members must be distinct")


def generate_synthetic(n_customers: int = 103, n_hours: int = 60 * 24,
                       params: GeneratorParams | None = None,
                       seed: int = 0) -> TimeSeriesDataset:
    """Seeded synthetic generator; returns nonnegative hourly consumption."""
    if n_customers < 1:
        raise ValueError("need at least one customer")
    if n_hours < 20:
        raise ValueError("need at least 20 hours (one train+test window)")
    p = params or GeneratorParams()
    rng = np.random.default_rng(seed)
    t = np.arange(n_hours)

    clusters = np.arange(n_customers) % p.n_clusters
    phase_jitter = rng.uniform(0.0, 24.0, size=n_customers)
    phases = (1.0 - p.cluster_loading) * phase_jitter

    factors = np.zeros((p.n_clusters, n_hours))
    innov = rng.normal(size=(p.n_clusters, n_hours))
    stat_scale = p.factor_scale * np.sqrt(1.0 - p.ar_coeff**2)
    for k in range(p.n_clusters):
        for step_t in range(1, n_hours):
            factors[k, step_t] = p.ar_coeff * factors[k, step_t - 1] + stat_scale * innov[k, step_t]

    noise = rng.normal(size=(n_customers, n_hours)) * p.noise_scale
    spikes = (rng.random(size=(n_customers, n_hours)) < p.peak_rate) * rng.exponential(
        scale=p.peak_scale, size=(n_customers, n_hours)
    )

    daily = 0.5 * p.daily_amplitude * (
        1.0 + np.sin(2.0 * np.pi * (t[None, :] + phases[:, None]) / 24.0)
    )
    values = (
        p.base_level
        + daily
        + p.cluster_loading * factors[clusters]
        + noise
        + spikes
    )
    values = np.clip(values, 0.0, None)
    ids = [str(i) for i in range(1, n_customers + 1)]
    meta = {"seed": seed, "generator": asdict(p)}
    return TimeSeriesDataset(values=values, customer_ids=ids, meta=meta)


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------


def save_csv(dataset: TimeSeriesDataset, path) -> Path:
    """Write the dataset (header of customer ids, one row per hour) plus a
    metadata sidecar ``<path>.meta.json``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.customer_ids)
        for row in dataset.values.T:
            writer.writerow([format(v, ".17g") for v in row])
    sidecar = path.with_suffix(path.suffix + ".meta.json")
    sidecar.write_text(json.dumps(
        {"customer_ids": dataset.customer_ids, **dataset.meta}, indent=2, sort_keys=True
    ))
    return path


def load_csv(path) -> TimeSeriesDataset:
    """Load an hourly CSV; rejects ragged rows and missing cells with locations."""
    path = Path(path)
    with path.open() as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        ids = [h.strip() for h in header]
        if len(set(ids)) != len(ids) or any(not h for h in ids):
            raise ValueError(f"{path}: header must list distinct nonempty customer ids")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(ids):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(ids)} fields, found {len(row)}"
                )
            parsed = []
            for col, cell in enumerate(row):
                cell = cell.strip()
                if not cell:
                    raise ValueError(
                        f"{path}:{lineno}: missing value in column {ids[col]!r}"
                    )
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}:{lineno}: cannot parse {cell!r} in column {ids[col]!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    meta = {}
    sidecar = path.with_suffix(path.suffix + ".meta.json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        meta.pop("customer_ids", None)
    return TimeSeriesDataset(values=np.array(rows).T, customer_ids=ids, meta=meta)


# ---------------------------------------------------------------------------
# correlations and subset construction
# ---------------------------------------------------------------------------


def pairwise_correlations(dataset: TimeSeriesDataset) -> np.ndarray:
    """Pearson correlation matrix across customers."""
    if dataset.n_hours < 3:
        raise ValueError("need at least 3 hours to correlate")
    std = dataset.values.std(axis=1)
    flat = [dataset.customer_ids[i] for i in np.flatnonzero(std == 0)]
    if flat:
        raise ValueError(f"zero-variance series for customers {flat}")
    corr = np.corrcoef(dataset.values)
    np.fill_diagonal(corr, 1.0)
    return corr


def select_correlated_subset(dataset: TimeSeriesDataset, size: int,
                             role: str = "group") -> SubsetSpec:
    """Greedy most-correlated subset: seed with the best pair, then repeatedly
    add the customer with the highest mean correlation to the current set.
    Ties break toward the smaller customer index."""
    if size > dataset.n_customers:
        raise ValueError("subset size exceeds the number of customers")
    if size < 1:
        raise ValueError("subset size must be >= 1")
    corr = pairwise_correlations(dataset)
    n = dataset.n_customers
    if size == 1:
        return SubsetSpec(role=role, member_ids=(dataset.customer_ids[0],))
    masked = corr - np.eye(n) * 2.0  # exclude the diagonal from the argmax
    best = np.argmax(masked)
    i, j = divmod(int(best), n)
    chosen = [min(i, j), max(i, j)]
    while len(chosen) < size:
        remaining = [c for c in range(n) if c not in chosen]
        means = [corr[c, chosen].mean() for c in remaining]
        order = np.lexsort((remaining, [-m for m in means]))
        chosen.append(remaining[order[0]])
    chosen.sort()
    return SubsetSpec(role=role, member_ids=tuple(dataset.customer_ids[c] for c in chosen))


# ---------------------------------------------------------------------------
# rolling windows with train-only normalization
# ---------------------------------------------------------------------------


@dataclass
class WindowSplit:
    """A contiguous train segment plus the hours that immediately follow it.

    Normalization is per-series min/max computed from the train segment only.
    """

    origin: int
    train: np.ndarray  # (S, train_len) raw values
    test: np.ndarray  # (S, horizon) raw values
    customer_ids: list[str]
    lo: np.ndarray = field(init=False)
    span: np.ndarray = field(init=False)

    def __post_init__(self):
        self.train = np.asarray(self.train, dtype=float)
        self.test = np.asarray(self.test, dtype=float)
        self.lo = self.train.min(axis=1)
        hi = self.train.max(axis=1)
        span = hi - self.lo
        self.span = np.where(span > 0, span, 1.0)

    @property
    def train_len(self) -> int:
        return self.train.shape[1]

    @property
    def horizon(self) -> int:
        return self.test.shape[1]

    def normalize(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.lo[:, None]) / self.span[:, None]

    def denormalize(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.span[:, None] + self.lo[:, None]

    def normalized_train(self) -> np.ndarray:
        return self.normalize(self.train)

    def normalized_test(self, clip: bool = False) -> np.ndarray:
        """Normalized test values; with ``clip`` they are confined to the
        encoder's accepted range [-slack, 1+slack]."""
        scaled = self.normalize(self.test)
        if clip:
            scaled = np.clip(scaled, -NORMALIZATION_SLACK, 1.0 + NORMALIZATION_SLACK)
        return scaled

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(",".join(self.customer_ids).encode())
        h.update(str(self.origin).encode())
        h.update(np.ascontiguousarray(self.train).tobytes())
        h.update(np.ascontiguousarray(self.test).tobytes())
        return h.hexdigest()


def rolling_windows(dataset: TimeSeriesDataset, train_len: int = 15, horizon: int = 5,
                    stride: int = 24, max_windows: int | None = None) -> list[WindowSplit]:
    """Contiguous train/test splits at regular origins."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    total = train_len + horizon
    if dataset.n_hours < total:
        raise ValueError(
            f"dataset has {dataset.n_hours} hours; a window needs {total}"
        )
    windows = []
    for origin in range(0, dataset.n_hours - total + 1, stride):
        windows.append(
            WindowSplit(
                origin=origin,
                train=dataset.values[:, origin : origin + train_len],
                test=dataset.values[:, origin + train_len : origin + total],
                customer_ids=list(dataset.customer_ids),
            )
        )
        if max_windows is not None and len(windows) >= max_windows:
            break
    return windows
