"""Decision events and the append-only in-session log the accuracy metrics read.

``DecisionLog`` keeps the events both as objects and as parallel columns
(arrival index, each agent's proposed label, the accepted label, an
auto-accept flag), so the fading-accuracy kernels can scan the whole history
without touching Python objects. Appends maintain the event invariants; the
log itself is never rewritten.
"""

from array import array
from collections.abc import Sequence
from dataclasses import dataclass

from .errors import RejectedInput

PHASE_HIC = "HiC"
PHASE_MIC = "MiC"

DECIDED_HUMAN = "human"
DECIDED_SUGGESTION = "human_accepted_suggestion"
DECIDED_MACHINE = "machine_auto"

CALLBACK_NONE = "none"
CALLBACK_LOW_BELIEF = "low_belief"
CALLBACK_RANDOM_CHECK = "random_check"

_ABSENT = -1  # column value for "this agent proposed nothing"


@dataclass(frozen=True)
class DecisionEvent:
    """One finalized decision: who proposed what and what was accepted."""

    t: int
    record_id: str
    features: tuple
    phase: str
    model_label: str
    model_probs: dict
    final_label: str
    decided_by: str
    user_label: str | None = None
    skepticality: float | None = None
    challenged: bool = False
    challenge_accepted: bool | None = None
    belief: float | None = None
    callback_kind: str = CALLBACK_NONE
    explanation_shown: bool = False
    rng_draw: float | None = None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "record_id": self.record_id,
            "features": list(self.features),
            "phase": self.phase,
            "model_label": self.model_label,
            "model_probs": dict(self.model_probs),
            "final_label": self.final_label,
            "decided_by": self.decided_by,
            "user_label": self.user_label,
            "skepticality": self.skepticality,
            "challenged": self.challenged,
            "challenge_accepted": self.challenge_accepted,
            "belief": self.belief,
            "callback_kind": self.callback_kind,
            "explanation_shown": self.explanation_shown,
            "rng_draw": self.rng_draw,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionEvent":
        d = dict(d)
        d["features"] = tuple(d["features"])
        return cls(**d)


def _check_event(event: DecisionEvent, labels: tuple[str, ...]) -> None:
    if event.final_label not in labels:
        raise RejectedInput(f"final label {event.final_label!r} not in label set")
    if event.model_label not in labels:
        raise RejectedInput(f"model label {event.model_label!r} not in label set")
    if event.user_label is not None and event.user_label not in labels:
        raise RejectedInput(f"user label {event.user_label!r} not in label set")
    if event.decided_by not in (DECIDED_HUMAN, DECIDED_SUGGESTION, DECIDED_MACHINE):
        raise RejectedInput(f"unknown decided_by {event.decided_by!r}")
    if event.decided_by == DECIDED_MACHINE:
        if event.phase != PHASE_MIC or event.callback_kind != CALLBACK_NONE:
            raise RejectedInput("machine_auto decisions only occur in MiC without a callback")
        if event.user_label is not None:
            raise RejectedInput("machine_auto decisions carry no user label")
    if event.challenged and event.user_label == event.model_label:
        raise RejectedInput("a challenge requires the user and model labels to differ")
    if event.callback_kind not in (CALLBACK_NONE, CALLBACK_LOW_BELIEF, CALLBACK_RANDOM_CHECK):
        raise RejectedInput(f"unknown callback kind {event.callback_kind!r}")


class DecisionLog(Sequence):
    """Ordered, append-only sequence of DecisionEvents with columnar mirrors."""

    def __init__(self, labels: tuple[str, ...]):
        self.labels = tuple(labels)
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        self.events: list[DecisionEvent] = []
        self._ts = array("q")
        self._model_out = array("q")
        self._user_out = array("q")
        self._final = array("q")
        self._auto = array("B")

    @classmethod
    def from_events(cls, events, labels) -> "DecisionLog":
        log = cls(labels)
        for event in events:
            log.append(event)
        return log

    def append(self, event: DecisionEvent) -> None:
        _check_event(event, self.labels)
        if self.events and event.t <= self.events[-1].t:
            raise RejectedInput("event arrival indices must strictly increase")
        self.events.append(event)
        self._ts.append(event.t)
        self._model_out.append(self._index[event.model_label])
        self._user_out.append(
            _ABSENT if event.user_label is None else self._index[event.user_label]
        )
        self._final.append(self._index[event.final_label])
        self._auto.append(1 if event.decided_by == DECIDED_MACHINE else 0)

    def label_index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise RejectedInput(f"unknown label {label!r}") from None

    @property
    def last_t(self) -> int:
        return self._ts[-1] if self._ts else -1

    def agent_column(self, agent: str) -> array:
        if agent == "model":
            return self._model_out
        if agent == "human":
            return self._user_out
        raise RejectedInput(f"unknown agent {agent!r}")

    def feature_rows(self):
        return [event.features for event in self.events]

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, i):
        return self.events[i]

    def __iter__(self):
        return iter(self.events)
