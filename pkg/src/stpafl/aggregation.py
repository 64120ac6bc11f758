"""Baseline Byzantine-resilient aggregation rules over a round's updates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vectors import ClientUpdate

RULE_KINDS = ("fed_avg", "coordinate_median", "trimmed_mean", "krum", "stpa")


@dataclass(frozen=True)
class AggregationRule:
    kind: str
    gamma: float | None = None  # trimmed_mean
    f: int | None = None  # krum
    m: int | None = None  # krum

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown aggregation rule: {self.kind}")
        if self.kind == "trimmed_mean":
            if self.gamma is None or not 0.0 < self.gamma < 0.5:
                raise ValueError("trimmed_mean requires gamma in (0, 0.5)")
        if self.kind == "krum":
            if self.f is None or self.f < 0:
                raise ValueError("krum requires f >= 0")
            if self.m is None or self.m < 1:
                raise ValueError("krum requires m >= 1")


def _stack(updates: list[ClientUpdate]) -> np.ndarray:
    if not updates:
        raise ValueError("empty update list")
    dim = updates[0].dim
    if any(u.dim != dim for u in updates):
        raise ValueError("updates have mismatched dimensions")
    return np.stack([u.model for u in updates])


def fed_avg(updates: list[ClientUpdate]) -> np.ndarray:
    """Mean weighted by each client's sample count."""
    X = _stack(updates)
    counts = np.array([u.sample_count for u in updates], dtype=np.float64)
    weights = counts / counts.sum()
    return weights @ X


def coordinate_median(updates: list[ClientUpdate]) -> np.ndarray:
    """Per-coordinate median; even counts average the two middle values."""
    X = _stack(updates)
    return np.median(X, axis=0)


def trimmed_mean(updates: list[ClientUpdate], gamma: float) -> np.ndarray:
    """Per coordinate: drop floor(gamma*n) values from each end, mean the rest."""
    if not 0.0 < gamma < 0.5:
        raise ValueError("gamma must be in (0, 0.5)")
    X = _stack(updates)
    n = X.shape[0]
    k = int(np.floor(gamma * n))
    if n - 2 * k < 1:
        raise ValueError(f"trim rate {gamma} leaves no survivors for n={n}")
    S = np.sort(X, axis=0)
    return S[k : n - k].mean(axis=0)


def krum_scores(updates: list[ClientUpdate], f: int) -> np.ndarray:
    """Score per update: sum of Euclidean distances to its n-f-2 nearest peers."""
    X = _stack(updates)
    n = X.shape[0]
    if n - f - 2 < 1:
        raise ValueError(f"krum needs n - f - 2 >= 1, got n={n}, f={f}")
    diffs = X[:, None, :] - X[None, :, :]
    D = np.sqrt((diffs * diffs).sum(axis=2))
    scores = np.empty(n)
    for k in range(n):
        others = np.delete(D[k], k)
        others.sort()
        scores[k] = others[: n - f - 2].sum()
    return scores


def krum_selection(updates: list[ClientUpdate], f: int, m: int) -> list[int]:
    """Indices of the m lowest-scoring updates; ties go to the smaller slot."""
    n = len(updates)
    if not 1 <= m <= n - f - 2:
        raise ValueError(f"krum needs 1 <= m <= n - f - 2, got m={m}, n={n}, f={f}")
    scores = krum_scores(updates, f)
    order = sorted(range(n), key=lambda k: (scores[k], updates[k].slot))
    return order[:m]


def krum(updates: list[ClientUpdate], f: int, m: int) -> np.ndarray:
    """Unweighted mean of the m lowest-scoring updates."""
    selected = krum_selection(updates, f, m)
    return np.stack([updates[k].model for k in selected]).mean(axis=0)


def apply_rule(rule: AggregationRule, updates: list[ClientUpdate]) -> np.ndarray:
    """Dispatch a baseline rule. The stpa rule is handled by the stpa module."""
    if rule.kind == "fed_avg":
        return fed_avg(updates)
    if rule.kind == "coordinate_median":
        return coordinate_median(updates)
    if rule.kind == "trimmed_mean":
        return trimmed_mean(updates, rule.gamma)
    if rule.kind == "krum":
        return krum(updates, rule.f, rule.m)
    raise ValueError(f"rule {rule.kind} is not a baseline aggregator")
