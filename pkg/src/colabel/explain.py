"""Explanation payloads: exemplar retrieval, per-feature evidence, unreliability.

All payloads are regenerated from the latest log and model on every request;
nothing here caches or mutates session state.
"""

from dataclasses import dataclass, field

from .distance import numeric_ranges, record_distance
from .errors import CapabilityError, RejectedInput
from .events import DecisionLog
from .learner import NaiveBayesModel
from .records import Record, Schema

EXEMPLARS = "exemplars"
COUNTER_EXEMPLARS = "counter_exemplars"
FEATURE_CONTRIBUTIONS = "feature_contributions"
UNRELIABILITY = "unreliability"


@dataclass(frozen=True)
class ExplanationItem:
    record_id: str
    annotation: dict

    def to_dict(self) -> dict:
        return {"record_id": self.record_id, "annotation": dict(self.annotation)}


@dataclass(frozen=True)
class Explanation:
    kind: str
    items: tuple[ExplanationItem, ...] = ()
    scores: dict | None = None
    context: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "items": [item.to_dict() for item in self.items]}
        if self.scores is not None:
            d["scores"] = dict(self.scores)
        if self.context:
            d["context"] = dict(self.context)
        return d


def _nearest(log: DecisionLog, schema: Schema, x: Record, k: int, keep) -> list:
    """The k closest logged events passing ``keep``, by (distance, t)."""
    if k < 1:
        raise RejectedInput("k must be at least 1")
    ranges = numeric_ranges(log.feature_rows(), schema)
    scored = []
    for event in log:
        if not keep(event):
            continue
        d = record_distance(x.features, event.features, schema, ranges)
        scored.append((d, event.t, event))
    scored.sort(key=lambda item: (item[0], item[1]))
    return scored[:k]


def exemplars(log: DecisionLog, schema: Schema, x: Record, y_target: str, k: int) -> Explanation:
    """Nearest past records whose accepted label equals ``y_target``."""
    picked = _nearest(log, schema, x, k, lambda e: e.final_label == y_target)
    items = tuple(
        ExplanationItem(
            event.record_id,
            {"distance": d, "final_label": event.final_label, "t": event.t},
        )
        for d, _, event in picked
    )
    return Explanation(EXEMPLARS, items, context={"target": y_target})


def counter_exemplars(
    log: DecisionLog, schema: Schema, x: Record, y_target: str, k: int
) -> Explanation:
    """Nearest past records whose accepted label differs from ``y_target``."""
    picked = _nearest(log, schema, x, k, lambda e: e.final_label != y_target)
    items = tuple(
        ExplanationItem(
            event.record_id,
            {"distance": d, "final_label": event.final_label, "t": event.t},
        )
        for d, _, event in picked
    )
    return Explanation(COUNTER_EXEMPLARS, items, context={"target": y_target})


def feature_contributions(model, x: Record, y_target: str) -> Explanation:
    """Per-feature log-likelihood edge of ``y_target`` over its strongest rival.

    The scores plus the log-prior difference reconstruct the total log-odds
    between the two labels exactly (naive Bayes factorizes).
    """
    if not isinstance(model, NaiveBayesModel):
        raise CapabilityError("feature contributions require the naive Bayes model")
    schema = model.schema
    schema.validate_label(y_target)
    probs = model.predict_proba(x)
    rivals = [lab for lab in schema.labels if lab != y_target]
    rival = rivals[0]
    for lab in rivals[1:]:
        if probs[lab] > probs[rival]:
            rival = lab
    scores = {}
    for j, spec in enumerate(schema.features):
        scores[spec.name] = model.feature_log_likelihood(
            x, y_target, j
        ) - model.feature_log_likelihood(x, rival, j)
    prior_diff = model.log_prior(y_target) - model.log_prior(rival)
    return Explanation(
        FEATURE_CONTRIBUTIONS,
        scores=scores,
        context={"target": y_target, "rival": rival, "log_prior_diff": prior_diff},
    )


def unreliability_explanation(
    log: DecisionLog,
    schema: Schema,
    x: Record,
    k: int,
    max_prob_below: float,
    current_belief: float | None = None,
) -> Explanation:
    """Nearest past records the model was similarly unsure about: those whose
    logged top probability stayed under ``max_prob_below``."""

    def low_confidence(event) -> bool:
        return max(event.model_probs.values()) < max_prob_below

    picked = _nearest(log, schema, x, k, low_confidence)
    items = tuple(
        ExplanationItem(
            event.record_id,
            {
                "distance": d,
                "t": event.t,
                "belief": event.belief,
                "model_label": event.model_label,
                "final_label": event.final_label,
                "model_was_accepted": event.model_label == event.final_label,
            },
        )
        for d, _, event in picked
    )
    context = {"threshold": max_prob_below}
    if current_belief is not None:
        context["current_belief"] = current_belief
    return Explanation(UNRELIABILITY, items, context=context)
