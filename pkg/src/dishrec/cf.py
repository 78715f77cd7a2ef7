"""Sparse user x (restaurant, item) rating matrix and memory-based
collaborative filtering.

Columns are (restaurant_id, item_id) pairs, so "recommend a restaurant for
an item" means ranking that item's columns. Similarities are plain cosine
over the zero-filled rating vectors; predictions are the two weighted
neighborhood formulas plus a positive-count baseline.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import UnknownColumn, UnknownItem, UnknownUser


def derive_item_rating(stars: float, sentiment: float, blend_weight: float = 0.5) -> float:
    """Blend the review star rating with the fragment sentiment score.

    rating = clamp(stars + 2*sentiment*blend_weight, 1, 5). With weight 0 the
    review stars pass through unchanged.
    """
    return float(min(5.0, max(1.0, stars + 2.0 * sentiment * blend_weight)))


@dataclass(frozen=True)
class ScoredFragment:
    """A per-item fragment with its classifier score and review context."""

    review_id: str
    user_id: str
    restaurant_id: str
    item_id: int
    score: float
    stars: float


@dataclass
class RatingMatrix:
    user_ids: list[str]
    columns: list[tuple[str, int]]  # (restaurant_id, item_id)
    ratings: np.ndarray             # zeros where missing
    mask: np.ndarray                # True where rated

    def __post_init__(self):
        self.user_index = {u: i for i, u in enumerate(self.user_ids)}
        self.column_index = {c: j for j, c in enumerate(self.columns)}

    @property
    def n_users(self):
        return len(self.user_ids)

    @property
    def n_columns(self):
        return len(self.columns)

    def user_mean(self, u: int) -> float:
        row = self.mask[u]
        if not row.any():
            return self.global_mean()
        return float(self.ratings[u, row].mean())

    def column_mean(self, j: int) -> float:
        col = self.mask[:, j]
        if not col.any():
            return self.global_mean()
        return float(self.ratings[col, j].mean())

    def global_mean(self) -> float:
        if not self.mask.any():
            return 3.0  # midpoint of the rating scale
        return float(self.ratings[self.mask].mean())

    def columns_for_item(self, item_id: int) -> list[int]:
        return [j for j, (_, iid) in enumerate(self.columns) if iid == item_id]

    @classmethod
    def from_entries(cls, entries) -> "RatingMatrix":
        """Build from (user_id, restaurant_id, item_id, rating) tuples.

        Several entries for the same (user, column) are averaged. Users and
        columns are index-ordered by sorted id for determinism.
        """
        sums = defaultdict(float)
        counts = defaultdict(int)
        users = set()
        cols = set()
        for user_id, restaurant_id, item_id, rating in entries:
            if not 1.0 <= rating <= 5.0:
                raise ValueError(f"rating {rating} outside [1, 5]")
            key = (user_id, (restaurant_id, item_id))
            sums[key] += rating
            counts[key] += 1
            users.add(user_id)
            cols.add((restaurant_id, item_id))
        user_ids = sorted(users)
        columns = sorted(cols)
        uix = {u: i for i, u in enumerate(user_ids)}
        cix = {c: j for j, c in enumerate(columns)}
        ratings = np.zeros((len(user_ids), len(columns)))
        mask = np.zeros((len(user_ids), len(columns)), dtype=bool)
        for (u, c), s in sums.items():
            ratings[uix[u], cix[c]] = s / counts[(u, c)]
            mask[uix[u], cix[c]] = True
        return cls(user_ids, columns, ratings, mask)


def build_rating_matrix(scored_fragments, blend_weight: float = 0.5) -> RatingMatrix:
    """Derive item-level ratings from scored fragments and assemble the matrix."""
    return RatingMatrix.from_entries(
        (
            f.user_id,
            f.restaurant_id,
            f.item_id,
            derive_item_rating(f.stars, f.score, blend_weight),
        )
        for f in scored_fragments
    )


def cosine_sim(a, b) -> float:
    """Plain cosine a.b/(|a||b|) over the full vectors; 0 when either norm is 0.

    The denominator is computed as sqrt(|a|^2 * |b|^2): one rounding instead
    of two, so rational results like 4/5 come out exact.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na2 = float(a @ a)
    nb2 = float(b @ b)
    if na2 == 0.0 or nb2 == 0.0:
        return 0.0
    return float(a @ b / np.sqrt(na2 * nb2))


def _cosine_matrix(M: np.ndarray) -> np.ndarray:
    norms = np.sqrt((M * M).sum(axis=1))
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = M / safe[:, None]
    S = unit @ unit.T
    S[norms == 0.0, :] = 0.0
    S[:, norms == 0.0] = 0.0
    np.clip(S, -1.0, 1.0, out=S)
    # exact symmetry and unit diagonal for nonzero rows
    S = (S + S.T) / 2.0
    for k in range(len(norms)):
        if norms[k] > 0.0:
            S[k, k] = 1.0
    return S


def user_similarity(matrix: RatingMatrix) -> np.ndarray:
    """User x user cosine similarity of zero-filled rating rows."""
    return _cosine_matrix(matrix.ratings)


def column_similarity(matrix: RatingMatrix) -> np.ndarray:
    """Column x column cosine similarity of zero-filled rating columns."""
    return _cosine_matrix(matrix.ratings.T)


def _top_neighbors(sims, candidates, n_neighbors):
    """Candidates ordered by |sim| descending, index ascending; truncated to N."""
    ordered = sorted(candidates, key=lambda a: (-abs(sims[a]), a))
    if n_neighbors is not None:
        ordered = ordered[:n_neighbors]
    return ordered


def predict_user_item(user_id, column, matrix: RatingMatrix, user_sims: np.ndarray,
                      n_neighbors: int | None = 20, center: str = "user",
                      clamp: bool = True) -> float:
    """Mean-centered user-neighborhood prediction.

    x_hat = mean(k) + sum_a sim(k,a) * (x_{a,m} - center_a) / sum_a |sim(k,a)|
    over the N most similar users who rated the column. ``center`` selects
    the deviation baseline: "user" subtracts each neighbor's own mean,
    "item" subtracts the column mean.
    """
    if center not in ("user", "item"):
        raise ValueError("center must be 'user' or 'item'")
    k = matrix.user_index.get(user_id)
    if k is None:
        raise UnknownUser(user_id)
    m = matrix.column_index.get(column)
    if m is None:
        raise UnknownColumn(str(column))
    if not matrix.mask[k].any():
        return matrix.global_mean()
    base = matrix.user_mean(k)
    raters = [a for a in range(matrix.n_users) if a != k and matrix.mask[a, m]]
    neighbors = _top_neighbors(user_sims[k], raters, n_neighbors)
    denom = sum(abs(user_sims[k, a]) for a in neighbors)
    if denom == 0.0:
        pred = base
    else:
        col_mean = matrix.column_mean(m) if center == "item" else None
        num = 0.0
        for a in neighbors:
            center_a = matrix.user_mean(a) if center == "user" else col_mean
            num += user_sims[k, a] * (matrix.ratings[a, m] - center_a)
        pred = base + num / denom
    return float(min(5.0, max(1.0, pred))) if clamp else float(pred)


def predict_item_item(user_id, column, matrix: RatingMatrix, column_sims: np.ndarray,
                      n_neighbors: int | None = 20, clamp: bool = True) -> float:
    """Item-neighborhood prediction: similarity-weighted mean of the user's
    own ratings over the N most similar columns."""
    k = matrix.user_index.get(user_id)
    if k is None:
        raise UnknownUser(user_id)
    m = matrix.column_index.get(column)
    if m is None:
        raise UnknownColumn(str(column))
    rated = [b for b in range(matrix.n_columns) if b != m and matrix.mask[k, b]]
    neighbors = _top_neighbors(column_sims[m], rated, n_neighbors)
    denom = sum(abs(column_sims[m, b]) for b in neighbors)
    if denom == 0.0:
        pred = matrix.user_mean(k) if matrix.mask[k].any() else matrix.global_mean()
    else:
        num = sum(column_sims[m, b] * matrix.ratings[k, b] for b in neighbors)
        pred = num / denom
    return float(min(5.0, max(1.0, pred))) if clamp else float(pred)


def positive_counts(item_id, scored_fragments) -> dict[str, int]:
    """Per-restaurant count of positively scored fragments for one item."""
    counts: dict[str, int] = {}
    for f in scored_fragments:
        if f.item_id != item_id:
            continue
        counts.setdefault(f.restaurant_id, 0)
        if f.score > 0.0:
            counts[f.restaurant_id] += 1
    return counts


def baseline_recommend(item_id, scored_fragments) -> list[tuple[str, int]]:
    """Restaurants ranked by positive-fragment count, ties by id ascending."""
    counts = positive_counts(item_id, scored_fragments)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def baseline_predict(column, scored_fragments, fallback: float = 3.0) -> float:
    """Rating-scale view of the baseline predictor.

    The baseline judges whole restaurants by their positive-review volume
    and knows nothing about individual items, so its rating prediction for
    any column is the restaurant's overall positive-fragment share mapped
    linearly onto [1, 5] (no fragments -> fallback).
    """
    restaurant_id, _ = column
    total = 0
    pos = 0
    for f in scored_fragments:
        if f.restaurant_id == restaurant_id:
            total += 1
            if f.score > 0.0:
                pos += 1
    if total == 0:
        return fallback
    return 1.0 + 4.0 * pos / total


class Recommender:
    """Bundles the trained state needed to answer top-k restaurant queries."""

    def __init__(self, matrix: RatingMatrix, scored_fragments,
                 user_sims: np.ndarray | None = None,
                 column_sims: np.ndarray | None = None,
                 partition: dict[int, int] | None = None,
                 fm_model=None, fm_features=None,
                 n_neighbors: int | None = 20, eq1_center: str = "user"):
        self.matrix = matrix
        self.scored_fragments = list(scored_fragments)
        self.user_sims = user_sims if user_sims is not None else user_similarity(matrix)
        self.column_sims = column_sims if column_sims is not None else column_similarity(matrix)
        self.partition = partition or {}
        self.fm_model = fm_model
        self.fm_features = fm_features
        self.n_neighbors = n_neighbors
        self.eq1_center = eq1_center
        self._positive = {
            (f.restaurant_id, f.item_id) for f in self.scored_fragments if f.score > 0.0
        }

    def predict(self, user_id, column, method: str) -> float:
        if method == "user":
            return predict_user_item(user_id, column, self.matrix, self.user_sims,
                                     self.n_neighbors, self.eq1_center)
        if method == "item":
            return predict_item_item(user_id, column, self.matrix, self.column_sims,
                                     self.n_neighbors)
        if method == "fm":
            if self.fm_model is None or self.fm_features is None:
                raise ValueError("no factorization machine attached")
            from .fm import fm_predict  # deferred: fm does not import cf

            x = self.fm_features.encode(user_id, column)
            return float(min(5.0, max(1.0, fm_predict(x, self.fm_model))))
        if method == "baseline":
            return baseline_predict(column, self.scored_fragments,
                                    fallback=self.matrix.global_mean())
        raise ValueError(f"unknown method {method!r}")

    def side_score(self, item_id, restaurant_id) -> float:
        """Fraction of the item's community co-members with a positive
        fragment at the restaurant; 0 when the community is a singleton."""
        community = self.partition.get(item_id)
        if community is None:
            return 0.0
        members = [i for i, c in self.partition.items() if c == community and i != item_id]
        if not members:
            return 0.0
        hits = sum(1 for i in members if (restaurant_id, i) in self._positive)
        return hits / len(members)

    def recommend_top_k(self, user_id, item_id, method: str = "user", k: int = 10,
                        side_weight: float = 0.2) -> list[tuple[str, float]]:
        """Rank restaurants serving the item by predicted rating plus the
        weighted side-dish affinity; ties break by restaurant id."""
        cols = self.matrix.columns_for_item(item_id)
        if not cols:
            raise UnknownItem(str(item_id))
        if method == "baseline":
            counts = positive_counts(item_id, self.scored_fragments)
            scored = [
                (rid, count + side_weight * self.side_score(item_id, rid))
                for rid, count in counts.items()
            ]
        else:
            scored = []
            for j in cols:
                restaurant_id, _ = self.matrix.columns[j]
                value = self.predict(user_id, self.matrix.columns[j], method)
                scored.append(
                    (restaurant_id, value + side_weight * self.side_score(item_id, restaurant_id))
                )
        scored.sort(key=lambda rs: (-rs[1], rs[0]))
        return scored[:k]


def export_matrix(matrix: RatingMatrix, path, seed=None):
    """Write ``user_id<TAB>restaurant_id:item_id<TAB>rating`` triples in
    deterministic (user, column) order."""
    with open(path, "w", encoding="utf-8") as fh:
        if seed is not None:
            fh.write(f"# seed={seed}\n")
        for u, user_id in enumerate(matrix.user_ids):
            for j, (restaurant_id, item_id) in enumerate(matrix.columns):
                if matrix.mask[u, j]:
                    fh.write(f"{user_id}\t{restaurant_id}:{item_id}\t{matrix.ratings[u, j]!r}\n")
