"""Forecast error metrics and accuracy-tier classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TIER_LOW_EDGE = 0.15
TIER_HIGH_EDGE = 0.35


@dataclass
class MetricSet:
    """MAE/MSE of an (S streams x H horizons) forecast, at all granularities."""

    per_cell_mae: np.ndarray  # (S, H) absolute errors
    per_cell_mse: np.ndarray

    @property
    def per_horizon_mae(self) -> np.ndarray:
        return self.per_cell_mae.mean(axis=0)

    @property
    def per_horizon_mse(self) -> np.ndarray:
        return self.per_cell_mse.mean(axis=0)

    @property
    def per_customer_mae(self) -> np.ndarray:
        return self.per_cell_mae.mean(axis=1)

    @property
    def per_customer_mse(self) -> np.ndarray:
        return self.per_cell_mse.mean(axis=1)

    @property
    def mae(self) -> float:
        return float(self.per_cell_mae.mean())

    @property
    def mse(self) -> float:
        return float(self.per_cell_mse.mean())

    def to_dict(self) -> dict:
        return {
            "mae": self.mae,
            "mse": self.mse,
            "per_horizon_mae": self.per_horizon_mae.tolist(),
            "per_horizon_mse": self.per_horizon_mse.tolist(),
            "per_customer_mae": self.per_customer_mae.tolist(),
            "per_customer_mse": self.per_customer_mse.tolist(),
            "per_cell_mae": self.per_cell_mae.tolist(),
            "per_cell_mse": self.per_cell_mse.tolist(),
        }


def compute_metrics(predictions, truth) -> MetricSet:
    """Elementwise |error| and error^2 with shape checking."""
    predictions = np.asarray(predictions, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predictions.shape != truth.shape:
        raise ValueError(
            f"prediction shape {predictions.shape} does not match truth {truth.shape}"
        )
    err = predictions - truth
    return MetricSet(per_cell_mae=np.abs(err), per_cell_mse=err**2)


@dataclass
class TierRow:
    tier: str
    mae_range: str
    share_pct: float
    avg_mae: float
    avg_mse: float | None
    count: int


def tier_classify(per_customer_mae, per_customer_mse=None) -> list[TierRow]:
    """Partition customers into accuracy tiers by MAE.

    Low is strictly below 0.15, High strictly above 0.35; both boundary values
    land in Medium. Shares are percentages of all customers.
    """
    mae = np.asarray(per_customer_mae, dtype=float)
    if mae.size == 0:
        raise ValueError("tier classification needs at least one customer")
    mse = None if per_customer_mse is None else np.asarray(per_customer_mse, dtype=float)
    masks = {
        "Low": mae < TIER_LOW_EDGE,
        "Medium": (mae >= TIER_LOW_EDGE) & (mae <= TIER_HIGH_EDGE),
        "High": mae > TIER_HIGH_EDGE,
    }
    ranges = {"Low": "<0.15", "Medium": "0.15-0.35", "High": ">0.35"}
    rows = []
    for tier, mask in masks.items():
        count = int(mask.sum())
        rows.append(
            TierRow(
                tier=tier,
                mae_range=ranges[tier],
                share_pct=100.0 * count / mae.size,
                avg_mae=float(mae[mask].mean()) if count else 0.0,
                avg_mse=(float(mse[mask].mean()) if (mse is not None and count) else None),
                count=count,
            )
        )
    return rows
