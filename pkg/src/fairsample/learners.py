"""Dependency-free deterministic learners behind a single interface.

Every learner produces continuous scores and thresholded labels.  fit and
predict are pure functions: identical inputs give bit-identical outputs,
which the experiment harness relies on for reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import CLASSIFICATION, REGRESSION
from .errors import ConfigError, DataError

KINDS = ("logistic_regression", "decision_tree", "knn", "linear_regression")


@dataclass(frozen=True)
class Learner:
    kind: str = "logistic_regression"
    threshold: float = 0.5
    # logistic regression
    l2: float = 1e-4
    learning_rate: float = 0.1
    max_iter: int = 2000
    grad_tol: float = 1e-6
    # decision tree
    max_depth: int = 8
    min_leaf: int = 5
    # knn
    k: int = 5
    # linear regression
    ridge_jitter: float = 1e-8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown learner kind {self.kind!r}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must be in (0, 1)")
        if self.l2 < 0 or self.learning_rate <= 0 or self.max_iter < 1:
            raise ConfigError("invalid logistic regression hyperparameters")
        if self.max_depth < 1 or self.min_leaf < 1:
            raise ConfigError("invalid decision tree hyperparameters")
        if self.k < 1:
            raise ConfigError("k must be >= 1")

    @property
    def task(self):
        return REGRESSION if self.kind == "linear_regression" else CLASSIFICATION


@dataclass(frozen=True)
class FittedModel:
    """Opaque fitted parameters plus the training-sample fingerprint."""

    kind: str
    threshold: float
    n_features: int
    params: dict
    task: str
    fingerprint: tuple = ()

    def predict(self, X):
        """Return (scores, labels) for a feature matrix.

        Classification: scores in [0, 1], labels = 1[score >= threshold].
        Regression: labels are the real-valued scores.
        """
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(
                f"feature dimension mismatch: model expects {self.n_features},"
                f" got {X.shape}")
        scores = _SCORERS[self.kind](self.params, X)
        if self.task == CLASSIFICATION:
            scores = np.clip(scores, 0.0, 1.0)
            labels = (scores >= self.threshold).astype(float)
        else:
            labels = scores
        return scores, labels


def fit(learner, train, fingerprint=()):
    if train.n == 0:
        raise DataError("cannot fit on an empty training set")
    if train.X.shape[1] == 0:
        raise DataError("zero-feature input")
    if learner.task == CLASSIFICATION:
        labels_present = set(np.unique(train.y))
        if len(labels_present) < 2:
            # Single-class draws are common at very small m; a constant
            # model keeps sweeps running instead of crashing.
            value = float(train.y[0])
            return FittedModel(learner.kind, learner.threshold,
                               train.X.shape[1], {"constant": value},
                               CLASSIFICATION, fingerprint)
    params = _FITTERS[learner.kind](learner, train.X, train.y)
    return FittedModel(learner.kind, learner.threshold, train.X.shape[1],
                       params, learner.task, fingerprint)


# ---------------------------------------------------------------- logistic

def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logreg_loss_grad(w, Xb, y, l2):
    z = Xb @ w
    # log(1 + exp(-m)) with m = (2y-1) z, numerically stable
    margin = np.where(y > 0.5, z, -z)
    loss = float(np.mean(np.logaddexp(0.0, -margin)))
    reg = w.copy()
    reg[-1] = 0.0  # intercept not penalized
    loss += 0.5 * l2 * float(reg @ reg)
    p = _sigmoid(z)
    grad = Xb.T @ (p - y) / len(y) + l2 * reg
    return loss, grad


def _fit_logreg(learner, X, y):
    Xb = np.hstack([X, np.ones((len(y), 1))])
    w = np.zeros(Xb.shape[1])
    loss, grad = _logreg_loss_grad(w, Xb, y, learner.l2)
    for _ in range(learner.max_iter):
        if np.max(np.abs(grad)) < learner.grad_tol:
            break
        step = learner.learning_rate
        while step > 1e-12:
            w_new = w - step * grad
            loss_new, grad_new = _logreg_loss_grad(w_new, Xb, y, learner.l2)
            if loss_new <= loss:
                break
            step *= 0.5
        else:
            break
        w, loss, grad = w_new, loss_new, grad_new
    return {"w": w}


def _score_logreg(params, X):
    if "constant" in params:
        return np.full(len(X), params["constant"])
    w = params["w"]
    return _sigmoid(X @ w[:-1] + w[-1])


# ---------------------------------------------------------------- tree

def _best_split(X, y, min_leaf):
    """Lowest-impurity split; ties broken by lowest feature index then
    lowest threshold (first strict improvement wins)."""
    n = len(y)
    best = None  # (impurity, feature, threshold)
    for j in range(X.shape[1]):
        xj = X[:, j]
        order = np.argsort(xj, kind="stable")
        xs = xj[order]
        ys = y[order]
        pos_left = np.cumsum(ys)
        total_pos = pos_left[-1]
        # candidate cut puts i items on the left
        i = np.arange(min_leaf, n - min_leaf + 1)
        valid = xs[i - 1] < xs[i]
        i = i[valid]
        if len(i) == 0:
            continue
        nl = i.astype(float)
        nr = n - nl
        pl = pos_left[i - 1]
        pr = total_pos - pl
        gl = 1.0 - (pl / nl) ** 2 - ((nl - pl) / nl) ** 2
        gr = 1.0 - (pr / nr) ** 2 - ((nr - pr) / nr) ** 2
        imp = (nl * gl + nr * gr) / n
        # thresholds increase with i, so argmin's first-occurrence rule
        # picks the lowest threshold among exact ties within a feature
        k = int(np.argmin(imp))
        thr = 0.5 * (xs[i[k] - 1] + xs[i[k]])
        if best is None or imp[k] < best[0] - 1e-15:
            best = (float(imp[k]), j, thr)
    return best


def _build_tree(X, y, depth, learner):
    n = len(y)
    mean = float(y.mean())
    if (depth >= learner.max_depth or n < 2 * learner.min_leaf
            or mean in (0.0, 1.0)):
        return {"leaf": mean}
    split = _best_split(X, y, learner.min_leaf)
    if split is None:
        return {"leaf": mean}
    _, j, thr = split
    left = X[:, j] <= thr
    if left.all() or not left.any():
        return {"leaf": mean}
    return {
        "feature": j,
        "threshold": thr,
        "left": _build_tree(X[left], y[left], depth + 1, learner),
        "right": _build_tree(X[~left], y[~left], depth + 1, learner),
    }


def _fit_tree(learner, X, y):
    return {"tree": _build_tree(X, y, 0, learner)}


def _score_tree_one(node, x):
    while "leaf" not in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] \
            else node["right"]
    return node["leaf"]


def _score_tree(params, X):
    if "constant" in params:
        return np.full(len(X), params["constant"])
    tree = params["tree"]
    return np.array([_score_tree_one(tree, x) for x in X])


# ---------------------------------------------------------------- knn

def _fit_knn(learner, X, y):
    return {"X": X.copy(), "y": y.copy(), "k": min(learner.k, len(y))}


def _score_knn(params, X):
    if "constant" in params:
        return np.full(len(X), params["constant"])
    Xt, yt, k = params["X"], params["y"], params["k"]
    out = np.empty(len(X))
    for i, x in enumerate(X):
        d2 = np.sum((Xt - x) ** 2, axis=1)
        # stable argsort: equal distances resolved by lower row index
        nn = np.argsort(d2, kind="stable")[:k]
        out[i] = yt[nn].mean()
    return out


# ---------------------------------------------------------------- OLS

def _fit_ols(learner, X, y):
    Xb = np.hstack([X, np.ones((len(y), 1))])
    G = Xb.T @ Xb
    b = Xb.T @ y
    try:
        np.linalg.cholesky(G)
        w = np.linalg.solve(G, b)
    except np.linalg.LinAlgError:
        # small samples routinely make the Gram matrix singular
        G = G + learner.ridge_jitter * np.eye(G.shape[0])
        w = np.linalg.solve(G, b)
    return {"w": w}


def _score_ols(params, X):
    if "constant" in params:
        return np.full(len(X), params["constant"])
    w = params["w"]
    return X @ w[:-1] + w[-1]


_FITTERS = {
    "logistic_regression": _fit_logreg,
    "decision_tree": _fit_tree,
    "knn": _fit_knn,
    "linear_regression": _fit_ols,
}

_SCORERS = {
    "logistic_regression": _score_logreg,
    "decision_tree": _score_tree,
    "knn": _score_knn,
    "linear_regression": _score_ols,
}
