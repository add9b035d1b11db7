"""Shared fixtures and log builders for the test suite."""

import random

import pytest

from colabel.events import (
    CALLBACK_LOW_BELIEF,
    CALLBACK_NONE,
    CALLBACK_RANDOM_CHECK,
    DECIDED_HUMAN,
    DECIDED_MACHINE,
    DECIDED_SUGGESTION,
    PHASE_HIC,
    PHASE_MIC,
    DecisionEvent,
    DecisionLog,
)
from colabel.records import CATEGORICAL, NUMERIC, FeatureSpec, Record, Schema

AB = ("A", "B")
ABC = ("A", "B", "C")


def numeric_schema(dims: int = 2, labels=AB) -> Schema:
    return Schema(
        features=tuple(FeatureSpec(f"x{j}", NUMERIC) for j in range(dims)),
        label_column="label",
        labels=tuple(labels),
    )


def categorical_schema(labels=AB) -> Schema:
    return Schema(
        features=(
            FeatureSpec("color", CATEGORICAL, ("red", "green", "blue")),
            FeatureSpec("shape", CATEGORICAL, ("round", "square")),
        ),
        label_column="label",
        labels=tuple(labels),
    )


def rec(t: int, *features, rid: str | None = None) -> Record:
    return Record(id=rid or f"r{t}", features=tuple(features), t=t)


def make_event(
    t: int,
    model_label: str,
    final_label: str,
    labels=AB,
    user_label: str | None = "unset",
    decided_by: str = DECIDED_HUMAN,
    phase: str = PHASE_HIC,
    features: tuple = (0.0, 0.0),
    model_probs: dict | None = None,
    **kwargs,
) -> DecisionEvent:
    """An event with consistent defaults: the user proposed the final label
    unless told otherwise."""
    if user_label == "unset":
        user_label = None if decided_by == DECIDED_MACHINE else final_label
    if model_probs is None:
        share = 0.6
        rest = (1.0 - share) / (len(labels) - 1)
        model_probs = {lab: (share if lab == model_label else rest) for lab in labels}
    return DecisionEvent(
        t=t,
        record_id=f"r{t}",
        features=features,
        phase=phase,
        model_label=model_label,
        model_probs=model_probs,
        final_label=final_label,
        decided_by=decided_by,
        user_label=user_label,
        **kwargs,
    )


def random_log(rng: random.Random, n_events: int, labels=AB, numeric_dims: int = 2) -> DecisionLog:
    """A structurally valid random log mixing phases, challenges and autos."""
    log = DecisionLog(tuple(labels))
    for t in range(n_events):
        features = tuple(rng.uniform(-3.0, 3.0) for _ in range(numeric_dims))
        model_label = rng.choice(labels)
        probs = _random_probs(rng, labels, model_label)
        if rng.random() < 0.25:
            event = make_event(
                t,
                model_label,
                model_label,
                labels=labels,
                decided_by=DECIDED_MACHINE,
                phase=PHASE_MIC,
                features=features,
                model_probs=probs,
                belief=rng.random(),
                rng_draw=rng.random(),
            )
        else:
            user_label = rng.choice(labels)
            phase = rng.choice((PHASE_HIC, PHASE_MIC))
            if phase == PHASE_HIC and user_label != model_label and rng.random() < 0.5:
                accepted = rng.random() < 0.5
                event = make_event(
                    t,
                    model_label,
                    model_label if accepted else user_label,
                    labels=labels,
                    user_label=user_label,
                    decided_by=DECIDED_SUGGESTION if accepted else DECIDED_HUMAN,
                    phase=PHASE_HIC,
                    features=features,
                    model_probs=probs,
                    challenged=True,
                    challenge_accepted=accepted,
                    skepticality=rng.uniform(-1, 1),
                )
            else:
                callback = (
                    rng.choice((CALLBACK_LOW_BELIEF, CALLBACK_RANDOM_CHECK))
                    if phase == PHASE_MIC
                    else CALLBACK_NONE
                )
                event = make_event(
                    t,
                    model_label,
                    user_label,
                    labels=labels,
                    user_label=user_label,
                    decided_by=DECIDED_HUMAN,
                    phase=phase,
                    features=features,
                    model_probs=probs,
                    callback_kind=callback,
                    belief=rng.random() if phase == PHASE_MIC else None,
                )
        log.append(event)
    return log


def _random_probs(rng: random.Random, labels, argmax_lab: str) -> dict:
    raw = {lab: rng.random() for lab in labels}
    raw[argmax_lab] = max(raw.values()) + rng.random()
    total = sum(raw.values())
    return {lab: v / total for lab, v in raw.items()}


@pytest.fixture
def ab_schema():
    return numeric_schema()
