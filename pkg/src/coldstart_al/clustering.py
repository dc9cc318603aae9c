"""Lloyd k-means, k-means++ seeding, nearest-to-center queries, silhouette.

All routines are deterministic given their seed and invariant to the order
in which points are supplied: random initialization draws from the
lexicographically sorted distinct points, and k-means++ samples through an
inverse-CDF walk over that canonical order. Ties always resolve to the
lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Clustering:
    centers: np.ndarray
    assignment: np.ndarray
    inertia: float
    iterations_run: int
    inertia_history: list[float]


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances (n, k) via the expansion form.

    Clamped at zero: the GEMM route can produce tiny negatives for
    coincident rows. Bit-equal rows yield bit-equal outputs, so index
    tie-breaking stays deterministic.
    """
    pp = np.einsum("nd,nd->n", points, points)
    cc = np.einsum("kd,kd->k", centers, centers)
    d2 = pp[:, None] - 2.0 * (points @ centers.T) + cc[None, :]
    return np.maximum(d2, 0.0, out=d2)


def _canonical_order(points: np.ndarray) -> np.ndarray:
    """Indices of points in lexicographic row order (stable for duplicates)."""
    return np.lexsort(points.T[::-1])


def _validate(points: np.ndarray, k: int) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("points must be a nonempty 2-D array")
    if k <= 0:
        raise ValueError("k must be positive")
    return points


def kmeanspp_indices(points: np.ndarray, k: int, seed: int) -> list[int]:
    """Indices of k points chosen by squared-distance-weighted seeding.

    The first point is uniform; each next one is drawn with probability
    proportional to its squared distance to the nearest chosen point. When
    that distribution has zero mass (duplicates of chosen points are all
    that remain), the draw falls back to uniform over unchosen indices, so
    the result always contains k distinct indices.
    """
    points = _validate(points, k)
    if k > len(points):
        raise ValueError(f"k={k} exceeds number of points {len(points)}")
    order = _canonical_order(points)
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    taken = np.zeros(len(points), dtype=bool)
    d2 = np.full(len(points), np.inf)
    for _ in range(k):
        weights = np.ones(len(points)) if not chosen else d2.copy()
        weights[taken] = 0.0
        ordered = weights[order]
        total = float(ordered.sum())
        if total <= 0.0:
            ordered = (~taken[order]).astype(np.float64)
            total = float(ordered.sum())
        u = rng.random() * total
        pick_pos = int(np.searchsorted(np.cumsum(ordered), u, side="right"))
        pick_pos = min(pick_pos, len(order) - 1)
        idx = int(order[pick_pos])
        chosen.append(idx)
        taken[idx] = True
        diff = points - points[idx]
        d2 = np.minimum(d2, np.einsum("nd,nd->n", diff, diff))
    return chosen


def kmeanspp_init(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    points = _validate(points, k)
    distinct = np.unique(points, axis=0)
    if k > len(distinct):
        raise ValueError(f"k={k} exceeds number of distinct points {len(distinct)}")
    return points[kmeanspp_indices(points, k, seed)].copy()


def _random_init(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    distinct = np.unique(points, axis=0)  # sorted lexicographically
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(distinct), size=k, replace=False)
    return distinct[idx].copy()


def kmeans(
    points: np.ndarray,
    k: int,
    init: str = "random",
    max_iter: int = 10,
    seed: int = 0,
) -> Clustering:
    """Lloyd iterations until assignments stabilize or max_iter is hit.

    Empty clusters are repaired by reseeding them with the point currently
    farthest from its assigned center. The recorded inertia history is
    taken after each center update and is non-increasing.
    """
    points = _validate(points, k)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    distinct = np.unique(points, axis=0)
    if k > len(distinct):
        raise ValueError(f"k={k} exceeds number of distinct points {len(distinct)}")
    if init == "random":
        centers = _random_init(points, k, seed)
    elif init in ("kmeans++", "kmeanspp"):
        centers = kmeanspp_init(points, k, seed)
    else:
        raise ValueError(f"unknown init {init!r} (expected 'random' or 'kmeans++')")

    n = len(points)
    assignment = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    iterations = 0
    for _ in range(max_iter):
        d2 = _sq_dists(points, centers)
        new_assignment = np.argmin(d2, axis=1)
        counts = np.bincount(new_assignment, minlength=k)
        if np.any(counts == 0):
            dist_to_own = d2[np.arange(n), new_assignment]
            by_worst = np.argsort(-dist_to_own, kind="stable")
            for c in np.flatnonzero(counts == 0):
                # reseed with the worst-fit point whose cluster survives the move
                for worst in by_worst:
                    src = new_assignment[worst]
                    if dist_to_own[worst] >= 0.0 and counts[src] > 1:
                        new_assignment[worst] = c
                        counts[src] -= 1
                        counts[c] += 1
                        dist_to_own[worst] = -1.0
                        break
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in range(k):
            members = points[assignment == c]
            centers[c] = members.mean(axis=0)
        iterations += 1
        diff = points - centers[assignment]
        history.append(float(np.einsum("nd,nd->n", diff, diff).sum()))
    return Clustering(
        centers=centers,
        assignment=assignment,
        inertia=history[-1],
        iterations_run=iterations,
        inertia_history=history,
    )


def nearest_to_centers(points: np.ndarray, centers: np.ndarray) -> list[int]:
    """For each center in order, the nearest not-yet-selected point index."""
    points = np.asarray(points, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if len(centers) == 0:
        raise ValueError("centers must be nonempty")
    if len(points) < len(centers):
        raise ValueError(f"{len(points)} points cannot serve {len(centers)} centers")
    d2 = _sq_dists(points, centers)
    selected: list[int] = []
    available = np.ones(len(points), dtype=bool)
    for c in range(len(centers)):
        dists = np.where(available, d2[:, c], np.inf)
        idx = int(np.argmin(dists))
        selected.append(idx)
        available[idx] = False
    return selected


def silhouette(points: np.ndarray, assignment: np.ndarray) -> float:
    """Mean silhouette coefficient over all points.

    Per point: s = (b - a) / max(a, b) where a is the mean distance to the
    rest of its own cluster and b the smallest mean distance to another
    cluster. Points in singleton clusters score 0, as do points with
    a = b = 0.
    """
    points = np.asarray(points, dtype=np.float64)
    assignment = np.asarray(assignment)
    labels = np.unique(assignment)
    if len(labels) < 2:
        raise ValueError("silhouette requires at least 2 clusters")
    n = len(points)
    scores = np.zeros(n, dtype=np.float64)
    members = {lab: np.flatnonzero(assignment == lab) for lab in labels}
    for i in range(n):
        own = members[assignment[i]]
        if len(own) == 1:
            continue
        # direct differences, not the GEMM expansion: the brute-force
        # comparison tolerance is tighter than GEMM cancellation error
        dists = np.sqrt(((points - points[i]) ** 2).sum(axis=1))
        a = dists[own].sum() / (len(own) - 1)
        b = min(dists[members[lab]].mean() for lab in labels if lab != assignment[i])
        denom = max(a, b)
        if denom > 0:
            scores[i] = (b - a) / denom
    return float(scores.mean())
