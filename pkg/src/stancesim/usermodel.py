"""User choice model and the linear preference update.

Clicking is independent per shown item: the probability is the user-item
preference dot product plus slight Gaussian noise, clamped into [0, 1].
Each click adds `gamma` mass on the item's stance to the user's raw
preference row; no renormalization is applied afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class UserModelConfig:
    gamma: float = 0.001
    click_noise_sigma: float = 0.05
    click_scale: float = 1.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.click_noise_sigma < 0:
            raise ValueError("click_noise_sigma must be >= 0")
        if self.click_scale <= 0:
            raise ValueError("click_scale must be positive")


def click_probabilities(u_row: np.ndarray, items: np.ndarray, A: np.ndarray,
                        cfg: UserModelConfig, rng: np.random.Generator) -> np.ndarray:
    base = cfg.click_scale * (A[items] @ u_row)
    if cfg.click_noise_sigma > 0:
        base = base + rng.normal(0.0, cfg.click_noise_sigma, size=len(items))
    return np.clip(base, 0.0, 1.0)


def choose(u_row: np.ndarray, items: np.ndarray, A: np.ndarray,
           cfg: UserModelConfig, rng: np.random.Generator) -> np.ndarray:
    """Boolean click decision per shown item; slate order does not matter."""
    items = np.asarray(items)
    probs = click_probabilities(u_row, items, A, cfg, rng)
    return rng.random(len(items)) < probs


def update_preferences(u_row: np.ndarray, clicked_items, A: np.ndarray,
                       gamma: float) -> np.ndarray:
    """Add gamma * stance vector per clicked item (order-independent)."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    clicked_items = list(clicked_items)
    if not clicked_items or gamma == 0:
        return u_row.copy()
    return u_row + gamma * A[clicked_items].sum(axis=0)
