"""Content-agnostic moderators: round-robin quotas (RR), knapsack-constrained
re-ranking (KC), and cluster dispersal (RD / SD).

Every function here sees only relational inputs: slates, exposure counts and
click masks. Item stances and user preferences are deliberately unreachable
from this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Slate, SimulationStateError, exposure_from_slates

MODERATOR_KINDS = ("none", "rr", "kc", "rd", "sd")


# ---------------------------------------------------------------------------
# Round-robin with dynamic quota adjustment
# ---------------------------------------------------------------------------

def _rr_adjust(m: int, n: int, k: int, base: np.ndarray, alpha_min: float):
    """Raise alpha_min in 0.01 increments until the remaining per-item copies
    sum_j max(q - base_j, 0) with q = ceil(alpha_min * m * k / n) cover the
    m * k slots. Returns (alpha_min, q)."""
    q = math.ceil(alpha_min * m * k / n)
    while int(np.maximum(q - base, 0).sum()) < m * k:
        alpha_min += 0.01
        q = math.ceil(alpha_min * m * k / n)
    return alpha_min, q


def rr_quota(m: int, n: int, k: int, item_exposure: np.ndarray | None = None) -> int:
    """Smallest per-item copy count q = ceil(a * m * k / n), with `a` raised in
    0.01 increments from 1 until the remaining copies cover the m * k slots.

    Without an exposure history the capacity is simply n * q; with one, the
    capacity is sum_j max(q - exposure_j, 0), which makes the quota track the
    cumulative equal-exposure frontier.
    """
    base = np.zeros(n, dtype=np.int64) if item_exposure is None else item_exposure
    _alpha, q = _rr_adjust(m, n, k, base, 1.0)
    return q


def rr_moderate(slates, step: int, item_exposure: np.ndarray, consumed: np.ndarray,
                k: int, rng: np.random.Generator, per_step_quota: bool = False):
    """Allocate slates under equal per-item exposure quotas.

    The default budget is cumulative: an item may be shown again only while
    its total historical exposure stays below the dynamically adjusted quota,
    which drives every item toward equal lifetime exposure. The per-step mode
    (behind the flag) compares the quota against within-step exposure only.

    Allocation runs k rounds; in each round users are visited in an order
    rotated by (step + round) and take their highest-ranked still-unassigned
    slate item with remaining budget. A user whose remaining slate items are
    all quota-blocked takes the globally least-exposed eligible item instead,
    which keeps the equalization moving without breaking the quota. A
    manifest warning is recorded only if even that fill fails.

    Returns (slates, warnings, info) where info carries the step's quota.
    """
    m = len(slates)
    n = consumed.shape[1]
    base = np.zeros(n, dtype=np.int64) if per_step_quota else item_exposure
    alpha_min, q = _rr_adjust(m, n, k, base, 1.0)
    takes = np.zeros(n, dtype=np.int64)

    assigned = [[] for _ in range(m)]
    from_slate = [set() for _ in range(m)]
    taken = np.zeros((m, n), dtype=bool)
    warnings = []

    by_user = {s.user: s for s in slates}
    for rnd in range(k):
        for pos in range(m):
            user = (pos + step + rnd) % m
            slate = by_user[user]
            remaining = np.maximum(q - base, 0) - takes
            pick = None
            for item in slate.items:
                if not taken[user, item] and remaining[item] > 0:
                    pick = item
                    break
            if pick is not None:
                from_slate[user].add(pick)
            else:
                open_items = ~consumed[user] & ~taken[user]
                idx = np.nonzero((remaining > 0) & open_items)[0]
                while len(idx) == 0 and q <= int(base.max()) + int(takes.max()) + 1:
                    # every open item is quota-blocked: adjust the quota up
                    alpha_min, q = _rr_adjust(m, n, k, base, alpha_min + 0.01)
                    remaining = np.maximum(q - base, 0) - takes
                    idx = np.nonzero((remaining > 0) & open_items)[0]
                if len(idx) == 0:
                    warnings.append(
                        f"rr: step {step} user {user}: no quota-respecting item "
                        "available, filled ignoring quota")
                    idx = np.nonzero(open_items)[0]
                    if len(idx) == 0:
                        raise SimulationStateError(
                            f"rr: user {user} has no eligible items at all")
                exp = item_exposure[idx]
                lowest = idx[exp == exp.min()]
                pick = int(rng.choice(lowest))
            taken[user, pick] = True
            takes[pick] += 1
            assigned[user].append(pick)

    out = []
    for user in range(m):
        slate = by_user[user]
        kept = [i for i in slate.items if i in from_slate[user]]
        fills = [i for i in assigned[user] if i not in from_slate[user]]
        out.append(Slate(user, tuple(kept + fills)))
    return out, warnings, {"quota": q}


# ---------------------------------------------------------------------------
# Knapsack-constrained re-ranking
# ---------------------------------------------------------------------------

def kc_weight_total(in_slate: np.ndarray, w: np.ndarray) -> float:
    """Canonical evaluation of sum_ij X_ij * w_j; the budget constraint is
    enforced against exactly this expression (zero tolerance)."""
    return float((in_slate * w).sum())


def kc_moderate(slates, k: int, lam: float, eligible: np.ndarray,
                rng: np.random.Generator):
    """Greedy exchange minimizing Hamming distance subject to the popularity
    budget lam * sum(RM * w), with weights w_j = colsum_j / (m * k).

    Weights come from the original step matrix and stay fixed. Each iteration
    recomputes, per user, the cheapest eligible non-slate replacement, then
    applies the single (user, kept-item) exchange with the largest weight
    reduction, until the recomputed constraint holds exactly. Kept items
    retain their original rank order; replacements are appended at the
    bottom ranks in insertion order.
    """
    if not 0 < lam <= 1:
        raise ValueError("lambda must be in (0, 1]")
    m = len(slates)
    n = eligible.shape[1]
    rm = exposure_from_slates(slates, m, n)
    w = rm.sum(axis=0) / rm.sum()
    budget = lam * kc_weight_total(rm, w)

    items = [list(s.items) for s in sorted(slates, key=lambda s: s.user)]
    in_slate = rm.astype(bool)
    swaps = 0

    while kc_weight_total(in_slate, w) > budget:
        # per-user cheapest eligible replacement, recomputed from scratch
        wmat = np.broadcast_to(w, (m, n)).copy()
        wmat[~eligible | in_slate] = np.inf
        cheapest = wmat.min(axis=1)

        slate_w = np.full((m, k), -np.inf)
        for u in range(m):
            slate_w[u, :len(items[u])] = w[items[u]]
        priciest = slate_w.max(axis=1)

        reduction = priciest - cheapest
        user = int(np.argmax(reduction))
        if not np.isfinite(reduction[user]) or reduction[user] <= 0:
            raise SimulationStateError(
                "kc: popularity budget unreachable by exchange")

        out_pos = int(np.argmax(slate_w[user]))
        out_item = items[user][out_pos]
        choices = np.nonzero(wmat[user] == cheapest[user])[0]
        in_item = int(rng.choice(choices))

        items[user].pop(out_pos)
        items[user].append(in_item)
        in_slate[user, out_item] = False
        in_slate[user, in_item] = True
        swaps += 1

    out = [Slate(u, tuple(items[u])) for u in range(m)]
    return out, {"weights": w, "budget": budget,
                 "weight_total": kc_weight_total(in_slate, w),
                 "swaps": swaps, "hamming": 2 * swaps}


# ---------------------------------------------------------------------------
# Spectral co-clustering and dispersal
# ---------------------------------------------------------------------------

@dataclass
class CoclusterModel:
    n_clusters: int
    user_embeddings: np.ndarray      # over nonzero-degree users
    item_embeddings: np.ndarray      # over nonzero-degree items
    user_labels: np.ndarray          # length m, -1 for zero-degree users
    item_labels: np.ndarray          # length n, -1 for zero-degree items
    user_row: np.ndarray             # user id -> row in user_embeddings (-1 absent)
    item_row: np.ndarray             # item id -> row in item_embeddings (-1 absent)
    cluster_user_silhouette: np.ndarray  # length n_clusters, -1 if undefined


def _singular_directions(normalized: np.ndarray, dims: int,
                         d1: np.ndarray, d2: np.ndarray):
    """Left/right singular vectors 2..dims+1 of the degree-normalized matrix.

    The leading singular pair of D1^{-1/2} A D2^{-1/2} is known in closed form
    (the square-root degree vectors d1, d2 normalized to unit length, singular
    value 1), so it is deflated explicitly before the decomposition. This
    keeps the result well-defined even when the leading singular value is
    degenerate, e.g. for block-diagonal matrices with several connected
    components.

    Computed from the Gram matrix of the smaller side (deterministic).
    """
    rows, cols = normalized.shape
    u1 = d1 / np.linalg.norm(d1)
    v1 = d2 / np.linalg.norm(d2)
    sigma1 = float(u1 @ normalized @ v1)
    residual = normalized - sigma1 * np.outer(u1, v1)
    if rows <= cols:
        gram = residual @ residual.T
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1][:dims]
        svals = np.sqrt(np.clip(evals[order], 1e-30, None))
        left = evecs[:, order]
        right = (residual.T @ left) / svals
    else:
        gram = residual.T @ residual
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1][:dims]
        svals = np.sqrt(np.clip(evals[order], 1e-30, None))
        right = evecs[:, order]
        left = (residual @ right) / svals
    # fix the sign convention so embeddings are reproducible across BLAS builds
    for d in range(left.shape[1]):
        pivot = np.argmax(np.abs(left[:, d]))
        if left[pivot, d] < 0:
            left[:, d] = -left[:, d]
            right[:, d] = -right[:, d]
    return left, right


def _kmeans(points: np.ndarray, n_clusters: int, rng: np.random.Generator,
            restarts: int = 10, max_iter: int = 100):
    """Seeded Lloyd k-means, best of `restarts` by inertia (ties by the
    earlier restart)."""
    n_points, dim = points.shape
    sq_norms = (points ** 2).sum(axis=1)
    tol = 1e-4 * float(points.var(axis=0).sum())

    def plusplus_init():
        centers = np.empty((n_clusters, dim))
        centers[0] = points[rng.integers(n_points)]
        closest = ((points - centers[0]) ** 2).sum(axis=1)
        for c in range(1, n_clusters):
            total = closest.sum()
            if total <= 0:
                centers[c] = points[rng.integers(n_points)]
                continue
            draw = np.searchsorted(np.cumsum(closest), rng.random() * total)
            centers[c] = points[min(draw, n_points - 1)]
            closest = np.minimum(closest, ((points - centers[c]) ** 2).sum(axis=1))
        return centers

    # all restarts iterate in lockstep; converged restarts drop out
    pts32 = points.astype(np.float32)
    centers = np.stack([plusplus_init() for _ in range(restarts)]).astype(np.float32)
    labels = np.full((restarts, n_points), -1)
    active = np.arange(restarts)
    for _ in range(max_iter):
        n_act = len(active)
        act_centers = centers[active].reshape(n_act * n_clusters, dim)
        scores = ((act_centers ** 2).sum(axis=1)[None, :]
                  - 2.0 * pts32 @ act_centers.T)
        new_labels = (scores.reshape(n_points * n_act, n_clusters)
                      .argmin(axis=1).reshape(n_points, n_act).T)
        converged = (new_labels == labels[active]).all(axis=1)
        labels[active] = new_labels
        active = active[~converged]
        if len(active) == 0:
            break
        n_act = len(active)
        flat = (labels[active] * 1 + (np.arange(n_act) * n_clusters)[:, None]).ravel()
        counts = np.bincount(flat, minlength=n_act * n_clusters)
        sums = np.stack([np.bincount(flat, weights=np.tile(points[:, d], n_act),
                                     minlength=n_act * n_clusters)
                         for d in range(dim)], axis=1)
        new_centers = np.where(counts[:, None] > 0,
                               sums / np.maximum(counts, 1)[:, None],
                               centers[active].reshape(-1, dim))
        empty = np.nonzero(counts == 0)[0]
        if len(empty):
            new_centers[empty] = points[rng.integers(n_points, size=len(empty))]
        new_centers = new_centers.reshape(n_act, n_clusters, dim)
        shifts = ((new_centers - centers[active]) ** 2).sum(axis=(1, 2))
        centers[active] = new_centers
        active = active[shifts > tol]

    flat_centers = centers.reshape(restarts * n_clusters, dim).astype(float)
    scores = ((flat_centers ** 2).sum(axis=1)[None, :]
              - 2.0 * points @ flat_centers.T).reshape(n_points, restarts, n_clusters)
    picked = np.take_along_axis(scores, labels.T[:, :, None], axis=2)[:, :, 0]
    inertias = sq_norms.sum() + picked.sum(axis=0)
    best = int(np.argmin(inertias))  # ties resolve to the earlier restart
    return labels[best]


def _silhouette(points: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-sample silhouette with Euclidean distance; NaN where undefined."""
    n_points = len(points)
    dists = np.sqrt(((points[:, None, :] - points[None]) ** 2).sum(axis=2))
    clusters = np.unique(labels)
    onehot = (labels[None, :] == clusters[:, None]).astype(float)
    counts = onehot.sum(axis=1)
    sums = dists @ onehot.T                      # n_points x n_clusters
    own = np.searchsorted(clusters, labels)
    own_count = counts[own]
    idx = np.arange(n_points)
    a = np.where(own_count > 1, sums[idx, own] / np.maximum(own_count - 1, 1), 0.0)
    means = sums / counts[None, :]
    means[idx, own] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(invalid="ignore"):
        score = np.where(denom > 0, (b - a) / denom, 0.0)
    return np.where(own_count <= 1, 0.0, score)  # singleton clusters score 0


def cocluster(rm_agg: np.ndarray, n_clusters: int, seed: int,
              raw_space_silhouette: bool = False) -> CoclusterModel | None:
    """Bipartite spectral co-clustering of the aggregated exposure matrix.

    Degree-normalizes over nonzero-degree rows/columns, takes singular
    directions 2..(n_clusters+1), rescales by D^{-1/2} and k-means the
    stacked user+item embeddings (10 restarts). Returns None when fewer
    nonzero-degree rows or columns than clusters exist, in which case
    dispersal becomes a no-op for the step.

    Tightness silhouettes are computed over user embeddings by default, or
    over raw exposure rows with `raw_space_silhouette`.
    """
    if n_clusters < 2:
        raise ValueError("n_clusters must be >= 2")
    m, n = rm_agg.shape
    rows = np.nonzero(rm_agg.sum(axis=1) > 0)[0]
    cols = np.nonzero(rm_agg.sum(axis=0) > 0)[0]
    if len(rows) < n_clusters or len(cols) < n_clusters:
        return None

    sub = rm_agg[np.ix_(rows, cols)].astype(float)
    d1 = np.sqrt(sub.sum(axis=1))
    d2 = np.sqrt(sub.sum(axis=0))
    normalized = sub / d1[:, None] / d2[None, :]
    dims = min(n_clusters, min(sub.shape) - 1)
    if dims < 1:
        return None
    left, right = _singular_directions(normalized, dims, d1, d2)
    z_users = left / d1[:, None]
    z_items = right / d2[:, None]

    rng = np.random.default_rng(seed)
    labels = _kmeans(np.vstack([z_users, z_items]), n_clusters, rng)
    user_part = labels[:len(rows)]
    item_part = labels[len(rows):]

    user_labels = np.full(m, -1, dtype=np.int64)
    item_labels = np.full(n, -1, dtype=np.int64)
    user_labels[rows] = user_part
    item_labels[cols] = item_part
    user_row = np.full(m, -1, dtype=np.int64)
    item_row = np.full(n, -1, dtype=np.int64)
    user_row[rows] = np.arange(len(rows))
    item_row[cols] = np.arange(len(cols))

    sil = np.full(n_clusters, -1.0)
    if len(np.unique(user_part)) >= 2:
        space = sub if raw_space_silhouette else z_users
        samples = _silhouette(space, user_part)
        for c in range(n_clusters):
            members = user_part == c
            if members.any():
                sil[c] = float(samples[members].mean())

    return CoclusterModel(n_clusters, z_users, z_items, user_labels, item_labels,
                          user_row, item_row, sil)


def disperse(slates, model: CoclusterModel | None, alpha: int, beta: float,
             mode: str, consumed: np.ndarray, rng: np.random.Generator,
             global_silhouette: bool = False, proportional: bool = False):
    """Replace the alpha bottom-ranked items of users in tight clusters with
    other-cluster items (RD: uniform random; SD: highest cosine similarity
    between item embedding and the user's embedding, ties by lower item id,
    or similarity-proportional sampling with `proportional`).
    """
    if mode not in ("rd", "sd"):
        raise ValueError(f"unknown dispersal mode {mode!r}")
    warnings = []
    if model is None:
        return list(slates), warnings

    sil = model.cluster_user_silhouette
    if global_silhouette:
        defined = sil[sil > -1]
        overall = defined.mean() if len(defined) else -1.0
        tight = set(range(model.n_clusters)) if overall > beta else set()
    else:
        tight = {c for c in range(model.n_clusters) if sil[c] > beta}
    if not tight:
        return list(slates), warnings

    n = consumed.shape[1]
    labeled = model.item_labels >= 0

    # one candidate-mask row per tight-cluster user, built in bulk
    users = np.array([s.user for s in slates])
    labels_u = model.user_labels[users]
    active = (labels_u >= 0) & np.isin(labels_u, sorted(tight))
    act = np.nonzero(active)[0]
    if len(act):
        allowed = (labeled[None, :]
                   & (model.item_labels[None, :] != labels_u[act][:, None])
                   & ~consumed[users[act]])
        for j, i in enumerate(act):
            allowed[j, list(slates[i].items)] = False
        act_pos = np.full(len(slates), -1)
        act_pos[act] = np.arange(len(act))

    if mode == "sd" and len(act):
        # cosine similarities between every labeled item and every tight
        # user, computed in one matmul; zero-norm embeddings land at -1,
        # excluded candidates at -inf
        item_ids = np.nonzero(labeled)[0]
        id_rows = model.item_row[item_ids]
        item_norms = np.linalg.norm(model.item_embeddings[id_rows], axis=1)
        item_unit = (model.item_embeddings[id_rows]
                     / np.where(item_norms > 0, item_norms, 1.0)[:, None])
        u_emb = model.user_embeddings[model.user_row[users[act]]]
        u_norms = np.linalg.norm(u_emb, axis=1)
        u_unit = u_emb / np.where(u_norms > 0, u_norms, 1.0)[:, None]
        sims_act = np.full((len(act), n), -np.inf)
        sims_act[:, item_ids] = u_unit @ item_unit.T
        sims_act[:, item_ids[item_norms == 0]] = -1.0
        for j in np.nonzero(u_norms == 0)[0]:
            sims_act[j, item_ids] = -1.0
        sims_masked = np.where(allowed, sims_act, -np.inf)

    out = []
    for pos, slate in enumerate(slates):
        user = slate.user
        if not active[pos]:
            out.append(slate)
            continue
        k = len(slate.items)
        if alpha > k:
            raise ValueError("alpha must be <= k")
        row = act_pos[pos]
        n_cand = int(allowed[row].sum())
        take = min(alpha, n_cand)
        if take < alpha:
            warnings.append(
                f"disperse: user {user} had only {take} other-cluster "
                f"candidates for alpha={alpha}")
        if take == 0:
            out.append(slate)
            continue
        if mode == "rd":
            cand = np.nonzero(allowed[row])[0]
            swaps = [int(i) for i in rng.choice(cand, size=take, replace=False)]
        elif proportional:
            cand = np.nonzero(allowed[row])[0]
            weight = np.maximum(sims_masked[row, cand], 0.0) + 1e-9
            swaps = [int(i) for i in rng.choice(
                cand, size=take, replace=False, p=weight / weight.sum())]
        else:
            sims = sims_masked[row]
            cut = np.partition(sims, -take)[-take]
            pool = np.nonzero(sims >= cut)[0]
            order = np.lexsort((pool, -sims[pool]))
            swaps = [int(pool[i]) for i in order[:take]]
        out.append(Slate(user, slate.items[:k - take] + tuple(swaps)))
    return out, warnings
