"""Main prediction and noise/bias/net-variance decomposition of loss,
per-group costs, and discrimination, plus the statistical-disparity
estimation-error bounds.

Noise is fixed at zero throughout (the optimal prediction is identified
with the observed outcome); the noise fields are kept in every report so
the full decomposition structure stays visible.

Zero-one and absolute-loss terms are exact rationals built from label
counts; squared-loss terms are float64 with fixed-order summation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigError, DataError

SQUARED = "squared"
ZERO_ONE = "zero_one"
ABSOLUTE = "absolute"

# conditioning subset per decomposable metric
_CONDITIONING = {"MSE": "all", "ZOL": "all", "FPR": "y==0", "EO": "y==1"}
# cost = offset + sign * (mean conditioned loss)
_COST_AFFINE = {"MSE": (0, 1), "ZOL": (0, 1), "FPR": (0, 1), "EO": (1, -1)}


@dataclass(frozen=True)
class PredictionEnsemble:
    """K models' predictions on one fixed evaluation set."""

    scores: np.ndarray            # (K, n)
    labels: np.ndarray            # (K, n); equals scores for regression
    eval_y: np.ndarray
    eval_a: np.ndarray
    loss_kind: str = ZERO_ONE

    def __post_init__(self):
        if self.scores.ndim != 2 or self.scores.shape[0] < 1:
            raise ConfigError("scores must be a K x n matrix with K >= 1")
        n = self.scores.shape[1]
        if self.labels.shape != self.scores.shape:
            raise ConfigError("labels shape must match scores")
        if len(self.eval_y) != n or len(self.eval_a) != n:
            raise ConfigError("evaluation vectors misaligned with predictions")
        if self.loss_kind not in (SQUARED, ZERO_ONE, ABSOLUTE):
            raise ConfigError(f"unknown loss kind {self.loss_kind!r}")

    @property
    def k(self):
        return self.scores.shape[0]

    @property
    def n(self):
        return self.scores.shape[1]

    def same_eval_set(self, other):
        return (np.array_equal(self.eval_y, other.eval_y)
                and np.array_equal(self.eval_a, other.eval_a))


@dataclass(frozen=True)
class PointDecomposition:
    """Per evaluation point terms.  For squared loss the entries are float
    arrays; for zero-one and absolute loss they are tuples of Fractions."""

    loss_kind: str
    main_scores: np.ndarray
    main_labels: np.ndarray
    noise: tuple
    bias: tuple
    variance: tuple
    net_factor: tuple     # c(x): +1 / -1 for 0-1 loss, (1-2B) for absolute
    mean_loss: tuple


def main_prediction(ens):
    """(scores, labels) of the ensemble's main prediction.

    Squared loss: per-point mean of model scores.  Zero-one: per-point
    majority vote, ties resolved to label 1 iff the mean score >= 0.5.
    """
    mean_scores = ens.scores.mean(axis=0)
    if ens.loss_kind == SQUARED:
        return mean_scores, mean_scores
    return mean_scores, _majority_labels(ens, mean_scores)


def _majority_labels(ens, mean_scores):
    ones = (ens.labels == 1).sum(axis=0)
    k = ens.k
    labels = np.where(2 * ones > k, 1.0, 0.0)
    tie = 2 * ones == k
    labels[tie] = np.where(mean_scores[tie] >= 0.5, 1.0, 0.0)
    return labels


def decompose_points(ens):
    if ens.loss_kind == ABSOLUTE:
        raise ConfigError("absolute loss has no exact decomposition")
    mean_scores = ens.scores.mean(axis=0)
    if ens.loss_kind == SQUARED:
        bias = (mean_scores - ens.eval_y) ** 2
        variance = ((ens.scores - mean_scores) ** 2).mean(axis=0)
        mean_loss = ((ens.scores - ens.eval_y) ** 2).mean(axis=0)
        ones = np.ones(ens.n)
        return PointDecomposition(SQUARED, mean_scores, mean_scores,
                                  np.zeros(ens.n), bias, variance, ones,
                                  mean_loss)
    labels = _majority_labels(ens, mean_scores)
    k = ens.k
    n_diff_main = (ens.labels != labels).sum(axis=0)
    n_diff_y = (ens.labels != ens.eval_y).sum(axis=0)
    bias = []
    variance = []
    net_factor = []
    mean_loss = []
    zero = Fraction(0)
    for i in range(ens.n):
        b = zero if labels[i] == ens.eval_y[i] else Fraction(1)
        v = Fraction(int(n_diff_main[i]), k)
        c = 1 if b == 0 else -1
        bias.append(b)
        variance.append(v)
        net_factor.append(c)
        mean_loss.append(Fraction(int(n_diff_y[i]), k))
    return PointDecomposition(ZERO_ONE, mean_scores, labels,
                              tuple(zero for _ in range(ens.n)),
                              tuple(bias), tuple(variance),
                              tuple(net_factor), tuple(mean_loss))


@dataclass(frozen=True)
class DecompositionReport:
    """Per-group mean noise / bias / net-variance terms of the conditioned
    loss, the implied cost values, and the between-group differences.

    cost_a = cost_offset + cost_sign * (bias_a + net_variance_a); for all
    decomposable metrics except EO offset is 0 and sign is +1.
    """

    metric: str
    conditioning: str
    cost_offset: int
    cost_sign: int
    noise_a0: object
    bias_a0: object
    net_variance_a0: object
    noise_a1: object
    bias_a1: object
    net_variance_a1: object

    def _diff(self, x1, x0):
        if x0 is None or x1 is None:
            return None
        return x1 - x0

    @property
    def noise_diff(self):
        return self._diff(self.noise_a1, self.noise_a0)

    @property
    def bias_diff(self):
        return self._diff(self.bias_a1, self.bias_a0)

    @property
    def net_variance_diff(self):
        return self._diff(self.net_variance_a1, self.net_variance_a0)

    def cost(self, group):
        b = getattr(self, f"bias_a{group}")
        v = getattr(self, f"net_variance_a{group}")
        if b is None or v is None:
            return None
        return self.cost_offset + self.cost_sign * (b + v)

    @property
    def cost_disc(self):
        return self._diff(self.cost(1), self.cost(0))

    def to_json_dict(self):
        conv = lambda v: None if v is None else float(v)
        return {
            "metric": self.metric,
            "conditioning": self.conditioning,
            "a0": {"noise": conv(self.noise_a0), "bias": conv(self.bias_a0),
                   "net_variance": conv(self.net_variance_a0),
                   "cost": conv(self.cost(0))},
            "a1": {"noise": conv(self.noise_a1), "bias": conv(self.bias_a1),
                   "net_variance": conv(self.net_variance_a1),
                   "cost": conv(self.cost(1))},
            "difference": {"noise": conv(self.noise_diff),
                           "bias": conv(self.bias_diff),
                           "net_variance": conv(self.net_variance_diff),
                           "cost": conv(self.cost_disc)},
        }


def _subset_mask(metric, y):
    cond = _CONDITIONING[metric]
    if cond == "all":
        return np.ones(len(y), dtype=bool), cond
    if cond == "y==0":
        return y == 0, cond
    return y == 1, cond


def decompose_cost(ens, metric):
    """Per-group decomposition of one cost metric over its conditioning
    subset (MSE/ZOL: all points; FPR: y=0; EO: y=1)."""
    if metric not in _CONDITIONING:
        raise ConfigError(f"metric {metric!r} has no decomposition")
    loss_kind = SQUARED if metric == "MSE" else ZERO_ONE
    if loss_kind != ens.loss_kind:
        raise ConfigError(
            f"metric {metric} needs {loss_kind} loss, ensemble carries "
            f"{ens.loss_kind}")
    points = decompose_points(ens)
    mask, cond = _subset_mask(metric, ens.eval_y)
    offset, sign = _COST_AFFINE[metric]
    terms = {}
    for group in (0, 1):
        sel = np.flatnonzero(mask & (ens.eval_a == group))
        if len(sel) == 0:
            terms[group] = (None, None, None)
            continue
        if loss_kind == SQUARED:
            b = float(np.mean(np.asarray(points.bias)[sel]))
            v = float(np.mean(np.asarray(points.variance)[sel]))
            n0 = 0.0
        else:
            b = sum(points.bias[i] for i in sel) / len(sel)
            v = sum(points.net_factor[i] * points.variance[i]
                    for i in sel) / len(sel)
            n0 = Fraction(0)
        terms[group] = (n0, b, v)
    return DecompositionReport(metric, cond, offset, sign,
                               terms[0][0], terms[0][1], terms[0][2],
                               terms[1][0], terms[1][1], terms[1][2])


@dataclass(frozen=True)
class BiasGapReport:
    """Term-wise deltas between a target and a reference decomposition.

    total = cost_sign * (bias_delta_diff + net_variance_delta_diff), which
    for squared loss equals the discrimination gap between the two
    ensembles under the mean-over-models estimator.
    """

    metric: str
    target: DecompositionReport
    reference: DecompositionReport
    bias_delta_a0: object
    bias_delta_a1: object
    net_variance_delta_a0: object
    net_variance_delta_a1: object

    def _diff(self, x1, x0):
        if x0 is None or x1 is None:
            return None
        return x1 - x0

    @property
    def bias_delta_diff(self):
        return self._diff(self.bias_delta_a1, self.bias_delta_a0)

    @property
    def net_variance_delta_diff(self):
        return self._diff(self.net_variance_delta_a1,
                          self.net_variance_delta_a0)

    @property
    def total(self):
        b = self.bias_delta_diff
        v = self.net_variance_delta_diff
        if b is None or v is None:
            return None
        return self.target.cost_sign * (b + v)


def decompose_bias_gap(ens_target, ens_reference, metric):
    """Term-wise decomposition of a discrimination gap into per-group
    bias and net-variance deltas against a reference ensemble."""
    if not ens_target.same_eval_set(ens_reference):
        raise ConfigError("ensembles evaluated on different evaluation sets")
    rep_t = decompose_cost(ens_target, metric)
    rep_r = decompose_cost(ens_reference, metric)

    def delta(term):
        out = []
        for group in (0, 1):
            t = getattr(rep_t, f"{term}_a{group}")
            r = getattr(rep_r, f"{term}_a{group}")
            out.append(None if t is None or r is None else t - r)
        return out

    db = delta("bias")
    dv = delta("net_variance")
    return BiasGapReport(metric, rep_t, rep_r, db[0], db[1], dv[0], dv[1])


@dataclass(frozen=True)
class SdBoundsReport:
    """Absolute-loss components and the statistical-disparity
    estimation-error bounds, evaluated verbatim and reported (never
    asserted: the expressions can be negative as written)."""

    observed: object
    upper: object
    lower: object
    within_bounds: bool
    noise_a0: object
    bias_a0: object
    net_variance_a0: object
    noise_a1: object
    bias_a1: object
    net_variance_a1: object

    def to_json_dict(self):
        conv = lambda v: None if v is None else float(v)
        return {
            "observed": conv(self.observed),
            "upper": conv(self.upper),
            "lower": conv(self.lower),
            "within_bounds": self.within_bounds,
            "a0": {"noise": conv(self.noise_a0), "bias": conv(self.bias_a0),
                   "net_variance": conv(self.net_variance_a0)},
            "a1": {"noise": conv(self.noise_a1), "bias": conv(self.bias_a1),
                   "net_variance": conv(self.net_variance_a1)},
        }


def sd_bounds(ens):
    """Absolute-loss decomposition terms and the estimation-error bounds
    for statistical disparity.

    observed is |Disc^SD of the ensemble's expected labels - Disc^SD of the
    true outcomes|.  All quantities are exact rationals.
    """
    if ens.loss_kind not in (ZERO_ONE, ABSOLUTE):
        raise ConfigError("sd_bounds requires a classification ensemble")
    for group in (0, 1):
        if not np.any(ens.eval_a == group):
            raise DataError(f"empty group a{group} in evaluation set")
    mean_scores = ens.scores.mean(axis=0)
    main = _majority_labels(ens, mean_scores)
    k = ens.k
    n_diff_main = (ens.labels != main).sum(axis=0)
    terms = {}
    sd_hat = {}
    sd_true = {}
    for group in (0, 1):
        sel = np.flatnonzero(ens.eval_a == group)
        n = len(sel)
        b_sum = Fraction(0)
        v_sum = Fraction(0)
        for i in sel:
            b = Fraction(0) if main[i] == ens.eval_y[i] else Fraction(1)
            v = Fraction(int(n_diff_main[i]), k)
            b_sum += b
            v_sum += (1 - 2 * b) * v
        terms[group] = (Fraction(0), b_sum / n, v_sum / n)
        sd_hat[group] = Fraction(int(ens.labels[:, sel].sum()), k * n)
        sd_true[group] = Fraction(int(ens.eval_y[sel].sum()), n)
    dn = terms[1][0] - terms[0][0]
    db = terms[1][1] - terms[0][1]
    dv = terms[1][2] - terms[0][2]
    upper = dn + db + dv
    lower = max(dn - db - dv, db - dn - dv, dv - db - dn)
    observed = abs((sd_hat[1] - sd_hat[0]) - (sd_true[1] - sd_true[0]))
    within = lower <= observed <= upper
    return SdBoundsReport(observed, upper, lower, within,
                          terms[0][0], terms[0][1], terms[0][2],
                          terms[1][0], terms[1][1], terms[1][2])
