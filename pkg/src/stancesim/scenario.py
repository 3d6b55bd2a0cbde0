"""Semi-synthetic user/item generation for the four media-landscape scenarios,
plus the random-exposure bootstrap that produces the t0 interaction matrix.

Scenario presets (item stance shares over L/C/R):
  1 balanced          (1/3, 1/3, 1/3)
  2 bi-polarized      (0.45, 0.10, 0.45)
  3 left dominance    (0.80, 0.10, 0.10)
  4 as scenario 1, with Right-group preference rows scaled up

User group shares default to the 56/11/33 L/C/R split in every scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InteractionLog, accumulate
from .rng import substream
from .usermodel import UserModelConfig, choose

ITEM_SPLITS = {
    1: (1 / 3, 1 / 3, 1 / 3),
    2: (0.45, 0.10, 0.45),
    3: (0.80, 0.10, 0.10),
    4: (1 / 3, 1 / 3, 1 / 3),
}

DEFAULT_GROUP_SPLIT = (0.56, 0.11, 0.33)


@dataclass
class ScenarioConfig:
    id: int = 1
    m: int = 100
    n: int = 3000
    item_split: tuple = None
    group_split: tuple = DEFAULT_GROUP_SPLIT
    amplification_factor: float = 2.0   # scenario 4 only
    dirichlet_peak: float = 8.0

    def __post_init__(self):
        if self.id not in ITEM_SPLITS:
            raise ValueError(f"unknown scenario id {self.id}")
        if self.item_split is None:
            self.item_split = ITEM_SPLITS[self.id]
        for name, split in (("item_split", self.item_split),
                            ("group_split", self.group_split)):
            if abs(sum(split) - 1.0) > 1e-9:
                raise ValueError(f"{name} must sum to 1, got {split}")
        if self.amplification_factor < 1:
            raise ValueError("amplification_factor must be >= 1")
        if self.dirichlet_peak <= 0:
            raise ValueError("dirichlet_peak must be positive")

    @property
    def num_stances(self) -> int:
        return len(self.item_split)


@dataclass
class BootstrapConfig:
    initial_items_per_user: int = 10
    cold_item_fanout: int = 10
    cold_threshold: float = 0.005
    max_cold_rounds: int = 50

    def __post_init__(self):
        if min(self.initial_items_per_user, self.cold_item_fanout,
               self.max_cold_rounds) <= 0:
            raise ValueError("bootstrap counts must be positive")
        if not 0 < self.cold_threshold < 1:
            raise ValueError("cold_threshold must be in (0, 1)")


def largest_remainder(total: int, fractions) -> np.ndarray:
    """Apportion `total` into integer counts proportional to `fractions`.

    Exact (counts sum to total); remainder ties break toward the lower index.
    """
    ideal = np.asarray(fractions, dtype=float) * total
    counts = np.floor(ideal).astype(int)
    leftover = total - counts.sum()
    # stable sort keeps lower indices first among equal remainders
    order = np.argsort(-(ideal - counts), kind="stable")
    counts[order[:leftover]] += 1
    return counts


def generate_items(cfg: ScenarioConfig, seed: int) -> np.ndarray:
    """One-hot n x |S| stance matrix with exact per-stance counts, shuffled."""
    counts = largest_remainder(cfg.n, cfg.item_split)
    stances = np.repeat(np.arange(cfg.num_stances), counts)
    rng = substream(seed, "scenario", "items")
    rng.shuffle(stances)
    A = np.zeros((cfg.n, cfg.num_stances), dtype=np.int64)
    A[np.arange(cfg.n), stances] = 1
    return A


def generate_users(cfg: ScenarioConfig, seed: int):
    """Preference matrix and per-user group assignment.

    Each user's row is Dirichlet-distributed with concentration
    `dirichlet_peak` on the group's own stance and 1.0 elsewhere; scenario 4
    scales Right-group rows by the amplification factor.
    """
    counts = largest_remainder(cfg.m, cfg.group_split)
    groups = np.repeat(np.arange(cfg.num_stances), counts)
    rng = substream(seed, "scenario", "users")
    U = np.empty((cfg.m, cfg.num_stances), dtype=float)
    for s in range(cfg.num_stances):
        concentration = np.ones(cfg.num_stances)
        concentration[s] = cfg.dirichlet_peak
        members = np.nonzero(groups == s)[0]
        if len(members):
            U[members] = rng.dirichlet(concentration, size=len(members))
    if cfg.id == 4:
        right = cfg.num_stances - 1
        U[groups == right] *= cfg.amplification_factor
    return U, groups


def bootstrap(U: np.ndarray, A: np.ndarray, user_cfg: UserModelConfig,
              cfg: BootstrapConfig, seed: int):
    """Random-exposure warm-up producing the t0 exposure matrix and log.

    Phase 1 shows every user `initial_items_per_user` random distinct items.
    Phase 2 repeatedly shows each never-clicked item to `cold_item_fanout`
    random users until fewer than `cold_threshold * n` cold items remain.
    Returns (exposure, log, clicked, warnings); all bootstrap records carry
    step index 0.
    """
    m, n = U.shape[0], A.shape[0]
    rng = substream(seed, "scenario", "bootstrap")
    exposure = np.zeros((m, n), dtype=np.int64)
    clicked = np.zeros((m, n), dtype=bool)
    log = InteractionLog()
    warnings = []

    for user in range(m):
        items = rng.choice(n, size=cfg.initial_items_per_user, replace=False)
        picks = choose(U[user], items, A, user_cfg, rng)
        for rank, (item, hit) in enumerate(zip(items, picks)):
            exposure[user, item] += 1
            clicked[user, item] |= hit
            log.append(0, user, int(item), rank, hit)

    rounds = 0
    while True:
        cold = np.nonzero(~clicked.any(axis=0))[0]
        if len(cold) <= cfg.cold_threshold * n:
            break
        if rounds >= cfg.max_cold_rounds:
            warnings.append(
                f"bootstrap exhausted {cfg.max_cold_rounds} cold rounds with "
                f"{len(cold)} cold items remaining")
            break
        for item in cold:
            users = rng.choice(m, size=min(cfg.cold_item_fanout, m), replace=False)
            for user in users:
                hit = bool(choose(U[user], np.array([item]), A, user_cfg, rng)[0])
                exposure[user, item] += 1
                clicked[user, item] |= hit
                log.append(0, int(user), int(item), 0, hit)
        rounds += 1

    return exposure, log, clicked, warnings
