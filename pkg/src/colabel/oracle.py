"""A simulated decision-maker for reproducible desk-scale experiments.

Every response is drawn from an RNG derived from (seed, record index,
operation), not from one shared stream: whether the oracle is consulted at
a given index depends on the engine's own randomness, and per-index seeding
keeps the oracle's answers a pure function of (t, true label) regardless of
which prompts actually occurred.
"""

import random
from dataclasses import dataclass

from .errors import ConfigError, RejectedInput

CONSENT_ALWAYS = "always"
CONSENT_NEVER = "never"
CONSENT_AFTER_T = "after_t"

NOTICE_STAY = "stay"
NOTICE_REVERT = "revert"


@dataclass(frozen=True)
class DriftPoint:
    """From index ``at_t`` on, the user behaves with these parameters."""

    at_t: int
    base_accuracy: float | None = None
    confusion: dict | None = None


@dataclass(frozen=True)
class SimulatedUser:
    labels: tuple[str, ...]
    seed: int = 0
    base_accuracy: float = 1.0
    confusion: dict | None = None  # true label -> {output label: prob}
    accept_when_correct: float = 1.0
    accept_when_wrong: float = 0.0
    consent_policy: str = CONSENT_NEVER
    consent_after_t: int = 0
    notice_policy: str = NOTICE_STAY
    drift: tuple[DriftPoint, ...] = ()

    def __post_init__(self):
        for name in ("base_accuracy", "accept_when_correct", "accept_when_wrong"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise RejectedInput(f"{name} must be in [0, 1]")
        if self.consent_policy not in (CONSENT_ALWAYS, CONSENT_NEVER, CONSENT_AFTER_T):
            raise RejectedInput(f"unknown consent policy {self.consent_policy!r}")
        if self.notice_policy not in (NOTICE_STAY, NOTICE_REVERT):
            raise RejectedInput(f"unknown notice policy {self.notice_policy!r}")
        _check_confusion(self.confusion, self.labels)
        for point in self.drift:
            _check_confusion(point.confusion, self.labels)

    def _rng(self, t: int, op: str) -> random.Random:
        return random.Random(f"{self.seed}|{t}|{op}")

    def _params_at(self, t: int) -> tuple[float, dict | None]:
        accuracy = self.base_accuracy
        confusion = self.confusion
        for point in self.drift:
            if t >= point.at_t:
                if point.base_accuracy is not None:
                    accuracy = point.base_accuracy
                if point.confusion is not None:
                    confusion = point.confusion
        return accuracy, confusion

    def decide(self, t: int, true_label: str) -> str:
        """The user's own label: the truth with probability base_accuracy,
        otherwise a wrong label (uniform, or confusion-directed)."""
        if true_label not in self.labels:
            raise RejectedInput(f"unknown true label {true_label!r}")
        accuracy, confusion = self._params_at(t)
        rng = self._rng(t, "decide")
        if rng.random() < accuracy:
            return true_label
        wrong = [lab for lab in self.labels if lab != true_label]
        if confusion is not None:
            row = confusion.get(true_label)
            if row is not None:
                weights = [row.get(lab, 0.0) for lab in wrong]
                if sum(weights) > 0.0:
                    return rng.choices(wrong, weights=weights)[0]
        return wrong[rng.randrange(len(wrong))]

    def respond_to_challenge(self, t: int, suggestion: str, own_label: str, true_label: str) -> bool:
        """Accept probability depends on whether the suggestion is right."""
        if suggestion == own_label:
            raise RejectedInput("a challenge implies the suggestion differs from the user label")
        p = self.accept_when_correct if suggestion == true_label else self.accept_when_wrong
        return self._rng(t, "challenge").random() < p

    def respond_consent(self, t: int) -> bool:
        if self.consent_policy == CONSENT_ALWAYS:
            return True
        if self.consent_policy == CONSENT_NEVER:
            return False
        return t > self.consent_after_t

    def respond_notice(self, t: int) -> bool:
        """True to revert to HiC, False to stay in MiC."""
        return self.notice_policy == NOTICE_REVERT


def _check_confusion(confusion, labels) -> None:
    if confusion is None:
        return
    for true_label, row in confusion.items():
        if true_label not in labels:
            raise RejectedInput(f"confusion row for unknown label {true_label!r}")
        total = sum(row.values())
        if abs(total - 1.0) > 1e-9:
            raise RejectedInput(f"confusion row for {true_label!r} must sum to 1")
        for lab in row:
            if lab not in labels:
                raise RejectedInput(f"confusion entry for unknown label {lab!r}")


def simulated_user_from_dict(d: dict, labels, path: str = "oracle") -> SimulatedUser:
    d = dict(d)
    drift_docs = d.pop("drift", [])
    try:
        drift = tuple(
            DriftPoint(
                at_t=point["at_t"],
                base_accuracy=point.get("base_accuracy"),
                confusion=point.get("confusion"),
            )
            for point in drift_docs
        )
        return SimulatedUser(labels=tuple(labels), drift=drift, **d)
    except (TypeError, KeyError) as exc:
        raise ConfigError(path, str(exc)) from None
    except RejectedInput as exc:
        raise ConfigError(path, str(exc)) from None
