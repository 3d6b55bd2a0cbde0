"""Shared fixtures and small-instance builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from stancesim.core import Slate
from stancesim.engine import (ModeratorConfig, RecommenderConfig, RunConfig,
                              run)
from stancesim.scenario import ScenarioConfig
from stancesim.usermodel import UserModelConfig


def small_config(scenario_id: int = 1, moderator: str = "none",
                 recommender: str = "oracle", seed: int = 0, T: int = 5,
                 m: int = 20, n: int = 120, **mod_kwargs) -> RunConfig:
    """Desk-scale config shrunk for unit tests (full scale lives in
    test_acceptance)."""
    return RunConfig(
        scenario=ScenarioConfig(id=scenario_id, m=m, n=n),
        recommender=RecommenderConfig(kind=recommender),
        moderator=ModeratorConfig(kind=moderator, **mod_kwargs),
        user=UserModelConfig(gamma=0.001),
        T=T, seed=seed)


def slates_from_matrix(item_lists) -> list:
    return [Slate(user, tuple(items)) for user, items in enumerate(item_lists)]


@pytest.fixture(scope="session")
def small_run_result():
    """One small unmoderated run shared by read-only tests."""
    return run(small_config())


def one_hot_stances(stances, num_stances: int = 3) -> np.ndarray:
    stances = np.asarray(stances)
    A = np.zeros((len(stances), num_stances), dtype=np.int64)
    A[np.arange(len(stances)), stances] = 1
    return A


def kc_brute_force(slates, k: int, lam: float, eligible: np.ndarray):
    """Exhaustive-minimum Hamming distance for the KC re-ranking problem.

    Enumerates every per-user k-subset of eligible items and folds them into
    a (hamming -> minimal weight) frontier; returns the smallest Hamming
    distance of any slate set satisfying the popularity budget, or None when
    the budget is infeasible. Usable only for tiny instances.
    """
    from itertools import combinations

    from stancesim.core import exposure_from_slates

    m = len(slates)
    n = eligible.shape[1]
    rm = exposure_from_slates(slates, m, n)
    w = rm.sum(axis=0) / rm.sum()
    budget = lam * float((rm * w).sum())

    frontier = {0: 0.0}
    ordered = sorted(slates, key=lambda s: s.user)
    for user, slate in enumerate(ordered):
        options = np.nonzero(eligible[user])[0]
        new = {}
        for combo in combinations(options, k):
            wsum = float(w[list(combo)].sum())
            ham = 2 * (k - len(set(combo) & set(slate.items)))
            for h, wt in frontier.items():
                key = h + ham
                val = wt + wsum
                if key not in new or val < new[key]:
                    new[key] = val
        frontier = new
    feasible = [h for h, wt in frontier.items() if wt <= budget]
    return min(feasible) if feasible else None


def random_kc_instance(rng):
    """Random tiny KC instance (slates, k, lam, eligible) with m<=4, n<=6,
    k<=2 and every user holding at least k eligible items."""
    from stancesim.core import Slate

    m = int(rng.integers(1, 5))
    n = int(rng.integers(3, 7))
    k = int(rng.integers(1, 3))
    while True:
        eligible = rng.random((m, n)) > 0.2
        if np.all(eligible.sum(axis=1) >= k + 1):
            break
    slates = []
    for user in range(m):
        picks = rng.choice(np.nonzero(eligible[user])[0], size=k, replace=False)
        slates.append(Slate(user, tuple(int(i) for i in picks)))
    lam = float(rng.uniform(0.2, 0.95))
    return slates, k, lam, eligible


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance-criterion PASS/FAIL lines after the test run."""
    try:
        from test_acceptance import REPORT_LINES
    except ImportError:
        return
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in REPORT_LINES:
            terminalreporter.write_line(line)


def planted_block_matrix(users_per_block, items_per_block, n_blocks, rng,
                         noise: float = 0.0):
    """Block bipartite exposure matrix plus the planted user/item labels."""
    m = users_per_block * n_blocks
    n = items_per_block * n_blocks
    rm = np.zeros((m, n), dtype=np.int64)
    user_labels = np.repeat(np.arange(n_blocks), users_per_block)
    item_labels = np.repeat(np.arange(n_blocks), items_per_block)
    for b in range(n_blocks):
        block = rng.integers(1, 4, size=(users_per_block, items_per_block))
        rm[b * users_per_block:(b + 1) * users_per_block,
           b * items_per_block:(b + 1) * items_per_block] = block
    if noise > 0:
        off = (user_labels[:, None] != item_labels[None, :])
        flips = (rng.random((m, n)) < noise) & off
        rm[flips] = 1
    return rm, user_labels, item_labels
