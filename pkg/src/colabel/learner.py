"""Incremental probabilistic classifiers driving the machine side of a session.

Two model families share one interface:

* ``NaiveBayesModel`` keeps exact sufficient statistics (class counts,
  Welford mean/M2 per numeric feature, category counts with Laplace k=1),
  so its state after a sequence of ``learn_one`` calls equals a batch refit
  over the same rows. This is the reference model.
* ``OnlineLinearModel`` is a single-pass multinomial logistic regression,
  included to show the interface is model-agnostic.

Both are total: an untrained model predicts the uniform distribution, and
every prediction is a deterministic function of the update history.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import RejectedInput
from .records import NUMERIC, Record, Schema

VARIANCE_FLOOR = 1e-6
LAPLACE_K = 1


def argmax_label(probs: dict[str, float], labels: tuple[str, ...]) -> str:
    """Highest-probability label; ties break toward the earliest label in the
    session's declared order, so replays are stable."""
    best = labels[0]
    best_p = probs[best]
    for lab in labels[1:]:
        p = probs[lab]
        if p > best_p:
            best, best_p = lab, p
    return best


@dataclass
class _RunningMoments:
    """Welford accumulator; variance is the population variance M2/n."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, x: float) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    @property
    def variance(self) -> float:
        if self.n == 0:
            return 0.0
        return self.m2 / self.n

    def to_list(self) -> list:
        return [self.n, self.mean, self.m2]

    @classmethod
    def from_list(cls, v: list) -> "_RunningMoments":
        return cls(n=v[0], mean=v[1], m2=v[2])


class NaiveBayesModel:
    """Gaussian/categorical naive Bayes trained one record at a time.

    Class priors are Laplace-smoothed with the same k as the categorical
    likelihoods. Numeric likelihoods for a label with no observations yet
    fall back to the pooled (all-label) moments so prediction stays defined
    for every label from the first update on; a label with a single numeric
    observation keeps its own mean but borrows the pooled spread, since its
    sample variance is degenerate.
    """

    kind = "naive-bayes"

    def __init__(self, schema: Schema):
        self.schema = schema
        self.n_seen = 0
        self.class_counts: dict[str, int] = {lab: 0 for lab in schema.labels}
        # per label -> per numeric feature index -> moments
        self._moments: dict[str, dict[int, _RunningMoments]] = {
            lab: {} for lab in schema.labels
        }
        self._pooled: dict[int, _RunningMoments] = {}
        # per label -> per categorical feature index -> {category: count}
        self._cat_counts: dict[str, dict[int, dict[str, int]]] = {
            lab: {} for lab in schema.labels
        }

    def predict_proba(self, x: Record) -> dict[str, float]:
        self.schema.validate_record(x)
        labels = self.schema.labels
        log_joint = []
        denom = self.n_seen + LAPLACE_K * len(labels)
        for lab in labels:
            n_y = self.class_counts[lab]
            lp = math.log((n_y + LAPLACE_K) / denom)
            for j in range(len(self.schema.features)):
                lp += self.feature_log_likelihood(x, lab, j)
            log_joint.append(lp)
        peak = max(log_joint)
        weights = [math.exp(lp - peak) for lp in log_joint]
        total = sum(weights)
        return {lab: w / total for lab, w in zip(labels, weights)}

    def _numeric_params(self, label: str, j: int) -> tuple[float, float] | None:
        own = self._moments[label].get(j)
        pooled = self._pooled.get(j)
        if own is None or own.n == 0:
            if pooled is None or pooled.n == 0:
                return None
            return pooled.mean, max(pooled.variance, VARIANCE_FLOOR)
        if own.n >= 2:
            return own.mean, max(own.variance, VARIANCE_FLOOR)
        if pooled is not None and pooled.n >= 2:
            return own.mean, max(pooled.variance, VARIANCE_FLOOR)
        return own.mean, max(own.variance, VARIANCE_FLOOR)

    def learn_one(self, x: Record, y: str) -> "NaiveBayesModel":
        self.schema.validate_record(x)
        self.schema.validate_label(y)
        self.n_seen += 1
        self.class_counts[y] += 1
        for j, spec in enumerate(self.schema.features):
            v = x.features[j]
            if spec.kind == NUMERIC:
                self._moments[y].setdefault(j, _RunningMoments()).update(v)
                self._pooled.setdefault(j, _RunningMoments()).update(v)
            else:
                per_feature = self._cat_counts[y].setdefault(j, {})
                per_feature[v] = per_feature.get(v, 0) + 1
        return self

    def fit_seed(self, records, labels) -> "NaiveBayesModel":
        if len(records) != len(labels):
            raise RejectedInput("records and labels must have equal length")
        for x, y in zip(records, labels):
            self.learn_one(x, y)
        return self

    def feature_log_likelihood(self, x: Record, label: str, j: int) -> float:
        """Log-likelihood contribution of feature ``j`` under ``label``."""
        spec = self.schema.features[j]
        v = x.features[j]
        if spec.kind == NUMERIC:
            params = self._numeric_params(label, j)
            if params is None:
                return 0.0
            mean, var = params
            return -0.5 * math.log(2.0 * math.pi * var) - ((v - mean) ** 2) / (2.0 * var)
        count = self._cat_counts[label].get(j, {}).get(v, 0)
        n_y = self.class_counts[label]
        return math.log((count + LAPLACE_K) / (n_y + LAPLACE_K * len(spec.categories)))

    def log_prior(self, label: str) -> float:
        denom = self.n_seen + LAPLACE_K * len(self.schema.labels)
        return math.log((self.class_counts[label] + LAPLACE_K) / denom)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_seen": self.n_seen,
            "class_counts": dict(self.class_counts),
            "moments": {
                lab: {str(j): m.to_list() for j, m in per.items()}
                for lab, per in self._moments.items()
            },
            "pooled": {str(j): m.to_list() for j, m in self._pooled.items()},
            "cat_counts": {
                lab: {str(j): dict(c) for j, c in per.items()}
                for lab, per in self._cat_counts.items()
            },
        }


class OnlineLinearModel:
    """Multinomial logistic regression updated by one SGD step per record.

    Numeric features pass through unchanged; categoricals are one-hot encoded
    over their declared category set. Weights start at zero, so the untrained
    model is uniform.
    """

    kind = "online-linear"

    def __init__(self, schema: Schema, learning_rate: float = 0.1):
        self.schema = schema
        self.learning_rate = learning_rate
        self.n_seen = 0
        self._offsets: list[int] = []
        dim = 0
        for spec in schema.features:
            self._offsets.append(dim)
            dim += 1 if spec.kind == NUMERIC else len(spec.categories)
        self._dim = dim + 1  # trailing bias term
        self._weights = {lab: np.zeros(self._dim) for lab in schema.labels}

    def _encode(self, x: Record) -> np.ndarray:
        phi = np.zeros(self._dim)
        for j, spec in enumerate(self.schema.features):
            v = x.features[j]
            if spec.kind == NUMERIC:
                phi[self._offsets[j]] = v
            else:
                phi[self._offsets[j] + spec.categories.index(v)] = 1.0
        phi[-1] = 1.0
        return phi

    def predict_proba(self, x: Record) -> dict[str, float]:
        self.schema.validate_record(x)
        phi = self._encode(x)
        scores = np.array([float(self._weights[lab] @ phi) for lab in self.schema.labels])
        scores -= scores.max()
        expd = np.exp(scores)
        probs = expd / expd.sum()
        return {lab: float(p) for lab, p in zip(self.schema.labels, probs)}

    def learn_one(self, x: Record, y: str) -> "OnlineLinearModel":
        self.schema.validate_record(x)
        self.schema.validate_label(y)
        probs = self.predict_proba(x)
        phi = self._encode(x)
        for lab in self.schema.labels:
            grad = probs[lab] - (1.0 if lab == y else 0.0)
            self._weights[lab] -= self.learning_rate * grad * phi
        self.n_seen += 1
        return self

    def fit_seed(self, records, labels) -> "OnlineLinearModel":
        if len(records) != len(labels):
            raise RejectedInput("records and labels must have equal length")
        for x, y in zip(records, labels):
            self.learn_one(x, y)
        return self

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_seen": self.n_seen,
            "learning_rate": self.learning_rate,
            "weights": {lab: [float(w) for w in vec] for lab, vec in self._weights.items()},
        }


MODEL_KINDS = ("naive-bayes", "online-linear")


def build_model(kind: str, schema: Schema):
    if kind == "naive-bayes":
        return NaiveBayesModel(schema)
    if kind == "online-linear":
        return OnlineLinearModel(schema)
    raise RejectedInput(f"unknown model kind {kind!r}")
