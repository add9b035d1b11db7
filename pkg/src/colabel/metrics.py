"""Fading track-record metrics: weighted empirical accuracy, skepticality, belief.

Each agent (the model, the human) has a per-label track record: how often a
label it proposed became the accepted final label. Recent evidence counts
more; the weight of an event is either ``decay ** age`` (temporal mode) or
``exp(-bandwidth * distance^2)`` to the record currently being decided
(feature mode). ``norm_mode`` picks the denominator: the weight of the events
where the agent proposed that label (per_label), or the weight of all of the
agent's events (global).

Machine auto-accepted decisions are excluded by default: their final label is
the model's own output by construction, so counting them would let the model
confirm itself.

All functions are pure and bit-deterministic for fixed inputs.
"""

import math
from array import array
from dataclasses import dataclass

from . import _kernels
from .distance import numeric_ranges, record_distance
from .errors import RejectedInput
from .events import DecisionLog
from .learner import argmax_label
from .records import Record, Schema

AGENT_MODEL = "model"
AGENT_HUMAN = "human"

TEMPORAL = "temporal"
FEATURE = "feature"

PER_LABEL = "per_label"
GLOBAL = "global"


@dataclass(frozen=True)
class FadingConfig:
    decay: float = 0.98
    weight_mode: str = TEMPORAL
    feature_bandwidth: float = 1.0
    norm_mode: str = PER_LABEL
    prior: float = 0.5
    include_machine_auto: bool = False

    def __post_init__(self):
        for name in ("decay", "feature_bandwidth", "prior"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise RejectedInput(f"{name} must be a number")
        if not 0.0 < self.decay <= 1.0:
            raise RejectedInput("decay must be in (0, 1]")
        if self.weight_mode not in (TEMPORAL, FEATURE):
            raise RejectedInput(f"unknown weight mode {self.weight_mode!r}")
        if self.feature_bandwidth <= 0.0:
            raise RejectedInput("feature_bandwidth must be positive")
        if self.norm_mode not in (PER_LABEL, GLOBAL):
            raise RejectedInput(f"unknown norm mode {self.norm_mode!r}")
        if not 0.0 <= self.prior <= 1.0:
            raise RejectedInput("prior must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "decay": self.decay,
            "weight_mode": self.weight_mode,
            "feature_bandwidth": self.feature_bandwidth,
            "norm_mode": self.norm_mode,
            "prior": self.prior,
            "include_machine_auto": self.include_machine_auto,
        }


def fading_weight(age_or_distance: float, cfg: FadingConfig) -> float:
    """Weight of one past event: decay**age or exp(-bandwidth * dist^2)."""
    if age_or_distance < 0:
        raise RejectedInput("age or distance must be non-negative")
    if cfg.weight_mode == TEMPORAL:
        return cfg.decay ** age_or_distance
    return math.exp(-cfg.feature_bandwidth * age_or_distance * age_or_distance)


def _feature_weights(log: DecisionLog, x_now: Record, schema: Schema, cfg: FadingConfig) -> array:
    """Per-event weights for feature mode; shared by both kernel backends."""
    rows = log.feature_rows()
    ranges = numeric_ranges(rows, schema)
    lam = cfg.feature_bandwidth
    weights = array("d")
    for row in rows:
        d = record_distance(x_now.features, row, schema, ranges)
        weights.append(math.exp(-lam * d * d))
    return weights


def _sums(
    log: DecisionLog,
    agent: str,
    label_idx: int,
    now_t: int,
    cfg: FadingConfig,
    x_now: Record | None,
    schema: Schema | None,
) -> tuple[float, float, float]:
    if len(log) == 0:
        return 0.0, 0.0, 0.0
    if now_t <= log.last_t:
        raise RejectedInput("now_t must exceed every event index in the log")
    out = log.agent_column(agent)
    if cfg.weight_mode == TEMPORAL:
        return _kernels.temporal_label_sums(
            log._ts, out, log._final, log._auto, label_idx,
            cfg.include_machine_auto, cfg.decay, now_t,
        )
    if x_now is None or schema is None:
        raise RejectedInput("feature weight mode needs the current record and schema")
    weights = _feature_weights(log, x_now, schema, cfg)
    return _kernels.weighted_label_sums(
        weights, out, log._final, log._auto, label_idx, cfg.include_machine_auto
    )


def fading_empirical_accuracy(
    log: DecisionLog,
    agent: str,
    label: str,
    now_t: int,
    cfg: FadingConfig,
    x_now: Record | None = None,
    schema: Schema | None = None,
) -> float:
    """Fading fraction of the agent's ``label`` proposals that were accepted.

    Falls back to ``cfg.prior`` when the agent has no eligible evidence at
    all (per_label: none for this label; global: none for any label).
    """
    label_idx = log.label_index(label)
    num, den_label, den_all = _sums(log, agent, label_idx, now_t, cfg, x_now, schema)
    den = den_label if cfg.norm_mode == PER_LABEL else den_all
    if den == 0.0:
        return cfg.prior
    return num / den


def skepticality_score(
    conf_model: float, fea_model: float, conf_user: float, fea_user: float
) -> float:
    """Confidence-weighted track-record difference between the two proposals."""
    return conf_model * fea_model - conf_user * fea_user


def fading_skepticality(
    x: Record,
    y_model: str,
    y_user: str,
    probs: dict[str, float],
    log: DecisionLog,
    now_t: int,
    cfg: FadingConfig,
    schema: Schema | None = None,
) -> float:
    """How strongly the model doubts the user's label, in [-1, 1].

    Only defined on a clash: the model's and the user's labels must differ.
    """
    if y_model == y_user:
        raise RejectedInput("skepticality is only evaluated when the labels clash")
    fea_model = fading_empirical_accuracy(log, AGENT_MODEL, y_model, now_t, cfg, x, schema)
    fea_user = fading_empirical_accuracy(log, AGENT_HUMAN, y_user, now_t, cfg, x, schema)
    return skepticality_score(probs[y_model], fea_model, probs[y_user], fea_user)


def belief(
    x: Record,
    y_model: str,
    probs: dict[str, float],
    log: DecisionLog,
    now_t: int,
    cfg: FadingConfig,
    schema: Schema | None = None,
) -> float:
    """The model's prediction probability times its track record for it."""
    if y_model != argmax_label(probs, log.labels):
        raise RejectedInput("belief is defined for the model's own decision")
    fea_model = fading_empirical_accuracy(log, AGENT_MODEL, y_model, now_t, cfg, x, schema)
    return probs[y_model] * fea_model


def average_fea(
    log: DecisionLog,
    agent: str,
    now_t: int,
    cfg: FadingConfig,
    x_now: Record | None = None,
    schema: Schema | None = None,
) -> float:
    """Unweighted mean of the agent's per-label fading accuracies."""
    total = 0.0
    for label in log.labels:
        total += fading_empirical_accuracy(log, agent, label, now_t, cfg, x_now, schema)
    return total / len(log.labels)


def per_label_fea(
    log: DecisionLog,
    agent: str,
    now_t: int,
    cfg: FadingConfig,
    x_now: Record | None = None,
    schema: Schema | None = None,
) -> dict[str, float]:
    return {
        label: fading_empirical_accuracy(log, agent, label, now_t, cfg, x_now, schema)
        for label in log.labels
    }
