"""The five recommenders: Oracle-CB, Inaccurate-CB, Random, MF, PP.

All of them emit, per user, the k highest-scoring items the user has not
clicked yet, with score ties broken uniformly at random from the
recommender sub-stream. MF keeps warm-start factors across steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Slate, SimulationStateError

RECOMMENDER_KINDS = ("oracle", "inaccurate", "random", "mf", "pp")


@dataclass
class MFConfig:
    latent_dim: int = 16
    epochs: int = 20          # first training; warm_epochs afterwards
    warm_epochs: int = 5
    learn_rate: float = 0.05
    reg: float = 1e-4
    neg_ratio: int = 4
    batch_size: int = 2048

    def __post_init__(self):
        if min(self.latent_dim, self.epochs, self.warm_epochs,
               self.neg_ratio, self.batch_size) <= 0:
            raise ValueError("MF hyperparameters must be positive")
        if self.learn_rate <= 0 or self.reg < 0:
            raise ValueError("learn_rate must be positive, reg nonnegative")


@dataclass
class MFState:
    user_factors: np.ndarray
    item_factors: np.ndarray
    trained: bool = False


def _topk_slates(scores: np.ndarray, consumed: np.ndarray, k: int,
                 rng: np.random.Generator):
    """Per-user top-k by score over non-consumed items, random tie-break,
    ordered by descending score."""
    m, n = scores.shape
    slates = []
    for user in range(m):
        eligible = np.nonzero(~consumed[user])[0]
        if len(eligible) < k:
            raise SimulationStateError(
                f"user {user} has only {len(eligible)} eligible items, needs {k}")
        row = scores[user, eligible]
        tie = rng.random(len(eligible))
        order = np.lexsort((tie, -row))
        slates.append(Slate(user, tuple(int(i) for i in eligible[order[:k]])))
    return slates


def oracle_cb(U: np.ndarray, A: np.ndarray, consumed: np.ndarray, k: int,
              rng: np.random.Generator):
    return _topk_slates(U @ A.T, consumed, k, rng)


def inaccurate_cb(U: np.ndarray, A: np.ndarray, consumed: np.ndarray, k: int,
                  noise_sigma: float, rng: np.random.Generator):
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    scores = U @ A.T
    if noise_sigma > 0:
        scores = scores + rng.normal(0.0, noise_sigma, size=scores.shape)
    return _topk_slates(scores, consumed, k, rng)


def random_rec(consumed: np.ndarray, k: int, rng: np.random.Generator):
    m, n = consumed.shape
    slates = []
    for user in range(m):
        eligible = np.nonzero(~consumed[user])[0]
        if len(eligible) < k:
            raise SimulationStateError(
                f"user {user} has only {len(eligible)} eligible items, needs {k}")
        picks = rng.choice(eligible, size=k, replace=False)
        slates.append(Slate(user, tuple(int(i) for i in picks)))
    return slates


def pp_rec(click_counts: np.ndarray, consumed: np.ndarray, k: int,
           rng: np.random.Generator):
    """Popularity: rank all items by cumulative click count, ties random."""
    m = consumed.shape[0]
    scores = np.broadcast_to(click_counts.astype(float), consumed.shape)
    return _topk_slates(np.array(scores), consumed, k, rng)


def _train_mf(state: MFState, clicked: np.ndarray, cfg: MFConfig,
              rng: np.random.Generator, epochs: int):
    P, Q = state.user_factors, state.item_factors
    pos_users, pos_items = np.nonzero(clicked)
    for _ in range(epochs):
        neg_users = np.repeat(pos_users, cfg.neg_ratio)
        neg_items = rng.integers(0, clicked.shape[1], size=len(neg_users))
        bad = clicked[neg_users, neg_items]
        for _ in range(100):
            if not bad.any():
                break
            neg_items[bad] = rng.integers(0, clicked.shape[1], size=int(bad.sum()))
            bad = clicked[neg_users, neg_items]
        users = np.concatenate([pos_users, neg_users])
        items = np.concatenate([pos_items, neg_items])
        targets = np.concatenate([np.ones(len(pos_users)),
                                  np.zeros(len(neg_users))])
        perm = rng.permutation(len(users))
        for start in range(0, len(perm), cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            bu, bi, bt = users[idx], items[idx], targets[idx]
            pu, qi = P[bu], Q[bi]
            err = bt - np.einsum("ij,ij->i", pu, qi)
            grad_p = err[:, None] * qi - cfg.reg * pu
            grad_q = err[:, None] * pu - cfg.reg * qi
            np.add.at(P, bu, cfg.learn_rate * grad_p)
            np.add.at(Q, bi, cfg.learn_rate * grad_q)
    state.trained = True


def mf_rec(clicked: np.ndarray, consumed: np.ndarray, k: int, cfg: MFConfig,
           state: MFState | None, rng: np.random.Generator):
    """Factorize the cumulative binary click matrix by SGD with sampled
    negatives and recommend by factor dot product.

    Returns (slates, state, warnings). Falls back to random recommendation
    when the click matrix is all-zero.
    """
    m, n = clicked.shape
    warnings = []
    if not clicked.any():
        warnings.append("MF click matrix is all-zero; fell back to random slates")
        return random_rec(consumed, k, rng), state, warnings
    if state is None:
        state = MFState(rng.normal(0.0, 0.1, size=(m, cfg.latent_dim)),
                        rng.normal(0.0, 0.1, size=(n, cfg.latent_dim)))
    epochs = cfg.warm_epochs if state.trained else cfg.epochs
    _train_mf(state, clicked, cfg, rng, epochs)
    scores = state.user_factors @ state.item_factors.T
    return _topk_slates(scores, consumed, k, rng), state, warnings
