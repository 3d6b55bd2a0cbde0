"""Shared data model: preferences, stances, slates, exposures, interaction log.

Conventions used throughout the package:

- ``U``: m x |S| nonnegative preference matrix (rows sum to 1 at generation
  time; preference updates may push row sums above 1).
- ``A``: n x |S| one-hot item stance matrix.
- exposure matrices are m x n integer count matrices; per-step matrices are
  0/1, the aggregate accumulates counts across steps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

LEFT, CENTER, RIGHT = 0, 1, 2
DEFAULT_NUM_STANCES = 3

STANCE_LABELS = {LEFT: "L", CENTER: "C", RIGHT: "R"}


class SimulationStateError(RuntimeError):
    """The simulation reached a state a component cannot handle."""


class DegenerateDistributionError(ValueError):
    """A stance distribution was requested over zero total exposure."""


@dataclass(frozen=True)
class Slate:
    """Ordered top-k recommendation for one user; rank 0 = most preferred."""

    user: int
    items: tuple

    def __post_init__(self):
        if len(set(self.items)) != len(self.items):
            raise ValueError(f"slate for user {self.user} contains duplicates")

    def __len__(self):
        return len(self.items)


@dataclass
class InteractionLog:
    """Append-only (step, user, item, rank, clicked) records.

    Step 0 holds the bootstrap exposures; the simulated loop occupies
    steps 1..T, where every user contributes exactly k records per step.
    """

    records: list = field(default_factory=list)

    def append(self, step: int, user: int, item: int, rank: int, clicked: bool):
        self.records.append((step, user, item, rank, bool(clicked)))

    def extend(self, rows: Iterable):
        for row in rows:
            self.append(*row)

    def __len__(self):
        return len(self.records)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "user", "item", "rank", "clicked"])
            for step, user, item, rank, clicked in self.records:
                writer.writerow([step, user, item, rank, int(clicked)])

    @classmethod
    def read_csv(cls, path) -> "InteractionLog":
        log = cls()
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                log.append(int(row["step"]), int(row["user"]), int(row["item"]),
                           int(row["rank"]), bool(int(row["clicked"])))
        return log


def validate_stance_matrix(A: np.ndarray):
    if A.ndim != 2 or A.shape[1] < 2:
        raise ValueError("stance matrix must be n x |S| with |S| >= 2")
    if not np.array_equal(np.unique(A), np.array([0, 1])) and not np.all(A == A.astype(bool)):
        raise ValueError("stance matrix must be binary")
    if not np.all(A.sum(axis=1) == 1):
        raise ValueError("every stance row must be one-hot")


def exposure_of_item(exposure: np.ndarray, item: int) -> int:
    """Total number of times `item` was shown, summed over all users."""
    n = exposure.shape[1]
    if not 0 <= item < n:
        raise ValueError(f"item id {item} out of range [0, {n})")
    return int(exposure[:, item].sum())


def stance_distribution(exposure: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Share of total exposure landing on each stance.

    Raises DegenerateDistributionError when nothing was shown in the window.
    """
    per_item = exposure.sum(axis=0)
    total = per_item.sum()
    if total <= 0:
        raise DegenerateDistributionError("no exposure in window")
    per_stance = per_item @ A
    return per_stance / total


def accumulate(agg: np.ndarray, step: np.ndarray) -> np.ndarray:
    """Elementwise sum of two exposure matrices (commutative, associative)."""
    if agg.shape != step.shape:
        raise ValueError(f"shape mismatch {agg.shape} vs {step.shape}")
    return agg + step


def exposure_from_slates(slates, m: int, n: int) -> np.ndarray:
    """Per-step exposure counts implied by a slate set."""
    counts = np.zeros((m, n), dtype=np.int64)
    for slate in slates:
        for item in slate.items:
            counts[slate.user, item] += 1
    return counts


def exposure_from_log(log: InteractionLog, m: int, n: int,
                      steps=None, clicked_only: bool = False) -> np.ndarray:
    """Replay the log into an exposure (or read) count matrix.

    `steps` optionally restricts to a collection of step indices; this is
    the oracle against which incrementally accumulated matrices are checked.
    """
    counts = np.zeros((m, n), dtype=np.int64)
    wanted = None if steps is None else set(steps)
    for step, user, item, _rank, clicked in log.records:
        if wanted is not None and step not in wanted:
            continue
        if clicked_only and not clicked:
            continue
        counts[user, item] += 1
    return counts


def write_exposure_csv(exposure: np.ndarray, path, sparse: bool = True):
    """Serialize an exposure matrix; sparse triplets are the default for n=3000."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if sparse:
            writer.writerow(["row", "col", "count"])
            rows, cols = np.nonzero(exposure)
            for r, c in zip(rows, cols):
                writer.writerow([int(r), int(c), int(exposure[r, c])])
        else:
            for row in exposure:
                writer.writerow([int(v) for v in row])


def check_slates(slates, m: int, k: int, consumed: np.ndarray | None = None):
    """Assert the engine-tick invariants: one slate per user, k distinct items,
    nothing the user already clicked."""
    if len(slates) != m:
        raise SimulationStateError(f"expected {m} slates, got {len(slates)}")
    seen_users = set()
    for slate in slates:
        if slate.user in seen_users:
            raise SimulationStateError(f"duplicate slate for user {slate.user}")
        seen_users.add(slate.user)
        if len(slate.items) != k:
            raise SimulationStateError(
                f"slate for user {slate.user} has {len(slate.items)} items, expected {k}")
        if consumed is not None and consumed[slate.user, list(slate.items)].any():
            raise SimulationStateError(
                f"slate for user {slate.user} repeats a clicked item")
