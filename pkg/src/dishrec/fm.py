"""Second-order factorization machine trained by SGD with adaptive
regularization.

Instances are sparse (index, value) lists; the recommender uses one-hot
user and column blocks. The pairwise interaction term is evaluated in the
linear-time form sum_f [(sum_i v_if x_i)^2 - sum_i v_if^2 x_i^2] / 2, and
the regularization strengths are themselves adapted each epoch by a
gradient step on validation error through the next parameter update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceDetected, FeatureIndexOutOfRange, InvalidConfig, UnknownColumn, UnknownUser


@dataclass
class FMModel:
    w0: float
    w: np.ndarray            # n_features
    V: np.ndarray            # n_features x kdim
    lambda_w: float
    lambda_v: float
    kdim: int
    history: dict = field(default_factory=dict, repr=False)

    @property
    def n_features(self):
        return len(self.w)


@dataclass(frozen=True)
class FeatureMap:
    """One-hot layout: user block, then column block, then (optionally) an
    indicator for the column item's side-dish community."""

    user_ids: tuple[str, ...]
    columns: tuple[tuple[str, int], ...]
    item_community: dict | None = None  # item_id -> community id; None = feature off

    def __post_init__(self):
        object.__setattr__(self, "_user_index", {u: i for i, u in enumerate(self.user_ids)})
        object.__setattr__(
            self, "_column_index",
            {c: len(self.user_ids) + j for j, c in enumerate(self.columns)},
        )
        n_comm = 0
        if self.item_community:
            n_comm = max(self.item_community.values()) + 1
        object.__setattr__(self, "_n_communities", n_comm)

    @property
    def n_features(self):
        return len(self.user_ids) + len(self.columns) + self._n_communities

    def encode(self, user_id, column):
        u = self._user_index.get(user_id)
        if u is None:
            raise UnknownUser(user_id)
        c = self._column_index.get(column)
        if c is None:
            raise UnknownColumn(str(column))
        features = [(u, 1.0), (c, 1.0)]
        if self.item_community is not None:
            community = self.item_community.get(column[1])
            if community is not None:
                offset = len(self.user_ids) + len(self.columns)
                features.append((offset + community, 1.0))
        return tuple(features)

    @classmethod
    def from_matrix(cls, matrix, item_community=None) -> "FeatureMap":
        return cls(tuple(matrix.user_ids), tuple(matrix.columns), item_community)


def build_fm_dataset(matrix, feature_map: FeatureMap | None = None, item_community=None):
    """(features, target) pairs for every observed matrix entry, in
    deterministic (user, column) order. Passing item_community switches the
    side-community indicator feature on (off by default)."""
    fmap = feature_map or FeatureMap.from_matrix(matrix, item_community)
    data = []
    for u, user_id in enumerate(matrix.user_ids):
        for j, column in enumerate(matrix.columns):
            if matrix.mask[u, j]:
                data.append((fmap.encode(user_id, column), float(matrix.ratings[u, j])))
    return data, fmap


def _check_indices(x, n):
    for i, _ in x:
        if not 0 <= i < n:
            raise FeatureIndexOutOfRange(f"feature index {i} outside 0..{n - 1}")


def _factor_sums(x, V):
    s = np.zeros(V.shape[1])
    for i, v in x:
        s += V[i] * v
    return s


def fm_predict(x, model: FMModel) -> float:
    """w0 + <w, x> + pairwise interactions in the linear-time form."""
    _check_indices(x, model.n_features)
    y = model.w0
    sq = 0.0
    for i, v in x:
        y += model.w[i] * v
        sq += float(model.V[i] @ model.V[i]) * v * v
    s = _factor_sums(x, model.V)
    y += 0.5 * (float(s @ s) - sq)
    return float(y)


def fm_predict_gradients(x, model: FMModel):
    """d prediction / d (w0, active w_i, active V rows); used by training and
    by the finite-difference checks."""
    s = _factor_sums(x, model.V)
    grad_w = [(i, v) for i, v in x]
    grad_V = [(i, v * (s - model.V[i] * v)) for i, v in x]
    return 1.0, grad_w, grad_V


def fm_sgd_step(x, y, model: FMModel, lr: float) -> float:
    """One squared-error SGD step on the touched coordinates.

    Weight decay with the current lambda_w / lambda_v applies to the active
    linear weights and factor rows; w0 is unregularized. Returns the
    prediction made before the update.
    """
    y_hat = fm_predict(x, model)
    err2 = 2.0 * (y_hat - y)
    _, grad_w, grad_V = fm_predict_gradients(x, model)
    model.w0 -= lr * err2
    for i, g in grad_w:
        model.w[i] -= lr * (err2 * g + model.lambda_w * model.w[i])
    for i, g in grad_V:
        model.V[i] -= lr * (err2 * g + model.lambda_v * model.V[i])
    if not (np.isfinite(model.w0) and np.isfinite(model.w).all() and np.isfinite(model.V).all()):
        raise DivergenceDetected("non-finite factorization machine parameters")
    return y_hat


def _mse(data, model):
    if not data:
        return 0.0
    return float(np.mean([(fm_predict(x, model) - y) ** 2 for x, y in data]))


def _lambda_gradients(val, model, lr):
    """d validation squared error / d lambda, through the next-step update
    theta' = theta - lr * (loss grad + lambda * theta), i.e.
    d theta' / d lambda = -lr * theta."""
    g_w = 0.0
    g_v = 0.0
    for x, y in val:
        err2 = 2.0 * (fm_predict(x, model) - y)
        s = _factor_sums(x, model.V)
        dw = sum(v * model.w[i] for i, v in x)
        dv = 0.0
        for i, v in x:
            dy_dVi = v * (s - model.V[i] * v)
            dv += float(dy_dVi @ model.V[i])
        g_w += err2 * (-lr) * dw
        g_v += err2 * (-lr) * dv
    n = max(1, len(val))
    return g_w / n, g_v / n


def fm_train(train, validation=None, lr: float = 0.001, epochs: int = 100,
             kdim: int = 8, seed: int = 0, n_features: int | None = None,
             lambda_init: float = 0.01, lambda_max: float = 10.0,
             lambda_lr: float | None = None, iteration_unit: str = "epochs") -> FMModel:
    """Train on (sparse features, target) pairs.

    Each epoch runs one seeded-shuffle SGD pass over the training set, then
    one adaptive-regularization step: lambda_w and lambda_v move along the
    gradient of validation squared error taken through the next parameter
    update, clamped to [0, lambda_max]. When no validation set is supplied, a
    seeded 10% slice of the training data is carved off for it.
    ``iteration_unit="steps"`` reinterprets ``epochs`` as a number of
    single-instance SGD steps (one lambda update at the end).

    The returned model carries a ``history`` dict with per-epoch train MSE
    and the lambda trajectory.
    """
    if not train:
        raise InvalidConfig("empty training set")
    if iteration_unit not in ("epochs", "steps"):
        raise InvalidConfig(f"bad iteration_unit {iteration_unit!r}")
    rng = np.random.default_rng(seed)
    train = list(train)
    if validation is None:
        if len(train) < 2:
            raise InvalidConfig("need at least 2 instances to carve a validation split")
        order = rng.permutation(len(train))
        n_val = max(1, int(round(0.1 * len(train))))
        validation = [train[i] for i in order[:n_val]]
        train = [train[i] for i in order[n_val:]]
    validation = list(validation)
    if not validation:
        raise InvalidConfig("validation set must be non-empty")

    if n_features is None:
        n_features = 1 + max(i for x, _ in list(train) + validation for i, _ in x)
    model = FMModel(
        w0=0.0,
        w=np.zeros(n_features),
        V=rng.normal(0.0, 0.01, size=(n_features, kdim)),
        lambda_w=lambda_init,
        lambda_v=lambda_init,
        kdim=kdim,
    )
    lam_lr = lr if lambda_lr is None else lambda_lr
    train_mse = []
    lambdas = []

    def adapt():
        g_w, g_v = _lambda_gradients(validation, model, lr)
        model.lambda_w = float(np.clip(model.lambda_w - lam_lr * g_w, 0.0, lambda_max))
        model.lambda_v = float(np.clip(model.lambda_v - lam_lr * g_v, 0.0, lambda_max))
        lambdas.append((model.lambda_w, model.lambda_v))

    if iteration_unit == "steps":
        order = rng.permutation(len(train))
        for step in range(epochs):
            x, y = train[order[step % len(train)]]
            fm_sgd_step(x, y, model, lr)
        adapt()
        train_mse.append(_mse(train, model))
    else:
        for _ in range(epochs):
            order = rng.permutation(len(train))
            for k in order:
                x, y = train[k]
                fm_sgd_step(x, y, model, lr)
            adapt()
            train_mse.append(_mse(train, model))

    model.history = {"train_mse": train_mse, "lambdas": lambdas}
    return model
