"""The two-phase decision loop, exposed as a prompt/response protocol.

A session alternates between:

* Human-in-Command (HiC): every record goes to the human. The model predicts
  in parallel and, when the labels clash and its confidence-weighted track
  record sufficiently beats the human's (skepticality above ``alpha``), it
  challenges the label. The human can accept the suggestion, refuse it, or
  ask for an explanation first; the accepted label always trains the model.
* Machine-in-Command (MiC): the model labels records on its own. Records with
  belief below ``beta`` call the human back immediately; confident records
  pass a random check that routes a fraction of them to the human anyway, so
  the machine never goes unaudited. The model trains only on callback
  answers, never on its own auto-accepted labels.

Promotion to MiC needs a long enough HiC stint (k > k_max), a strong enough
average track record, and the human's explicit consent. Demotion back to HiC
is offered through a critical notice when low-belief callbacks pile up
(p > p_max) or the average track record drops below ``tau_demote``.

The engine holds at most one outstanding prompt. Every random draw it makes
is surfaced on the resulting prompt or event, so a session can be replayed
bit-exactly from its log.
"""

import random
from collections import deque
from dataclasses import dataclass, field

from . import explain
from .errors import ConfigError, ProtocolError, RejectedInput
from .events import (
    CALLBACK_LOW_BELIEF,
    CALLBACK_RANDOM_CHECK,
    DECIDED_HUMAN,
    DECIDED_MACHINE,
    DECIDED_SUGGESTION,
    PHASE_HIC,
    PHASE_MIC,
    DecisionEvent,
    DecisionLog,
)
from .learner import MODEL_KINDS, argmax_label, build_model
from .metrics import (
    AGENT_MODEL,
    FadingConfig,
    average_fea,
    belief as belief_metric,
    fading_skepticality,
)
from .records import Record, Schema

PROMPT_NEED_LABEL = "need_user_label"
PROMPT_CHALLENGE = "skeptical_challenge"
PROMPT_CALLBACK = "callback"
PROMPT_CONSENT = "consent_request"
PROMPT_NOTICE = "critical_notice"

CHECK_BELIEF = "belief"
CHECK_BETA = "beta"

REASON_CALLBACKS = "callbacks"
REASON_FEA_DROP = "fea_drop"

ACCEPT_SUGGESTION = "accept_suggestion"
REFUSE = "refuse"
REQUEST_EXPLANATION = "request_explanation"


@dataclass
class Phase:
    tag: str = PHASE_HIC
    k: int = 0  # records finalized in the current HiC stint
    p: int = 0  # low-belief callbacks since the last promotion or counter reset


@dataclass(frozen=True)
class EngineConfig:
    alpha: float = 0.1
    beta: float = 0.5
    k_max: int = 100
    p_max: int = 10
    tau_promote: float = 0.8
    tau_demote: float = 0.6
    fading: FadingConfig = field(default_factory=FadingConfig)
    check_mode: str = CHECK_BELIEF
    consent_cooldown: int = 25
    rng_seed: int = 0
    model_kind: str = "naive-bayes"

    def __post_init__(self):
        for name in ("alpha", "beta", "tau_promote", "tau_demote"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise RejectedInput(f"{name} must be a number")
        for name in ("k_max", "p_max", "consent_cooldown", "rng_seed"):
            if not isinstance(getattr(self, name), int):
                raise RejectedInput(f"{name} must be an integer")
        if not 0.0 <= self.beta <= 1.0:
            raise RejectedInput("beta must be in [0, 1]")
        if self.k_max < 1:
            raise RejectedInput("k_max must be at least 1")
        if self.p_max < 1:
            raise RejectedInput("p_max must be at least 1")
        if not 0.0 <= self.tau_promote <= 1.0:
            raise RejectedInput("tau_promote must be in [0, 1]")
        if not 0.0 <= self.tau_demote <= 1.0:
            raise RejectedInput("tau_demote must be in [0, 1]")
        if self.tau_demote > self.tau_promote:
            raise RejectedInput("tau_demote must not exceed tau_promote")
        if self.check_mode not in (CHECK_BELIEF, CHECK_BETA):
            raise RejectedInput(f"unknown check mode {self.check_mode!r}")
        if self.consent_cooldown < 0:
            raise RejectedInput("consent_cooldown must be non-negative")
        if self.model_kind not in MODEL_KINDS:
            raise RejectedInput(f"unknown model kind {self.model_kind!r}")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "k_max": self.k_max,
            "p_max": self.p_max,
            "tau_promote": self.tau_promote,
            "tau_demote": self.tau_demote,
            "fading": self.fading.to_dict(),
            "check_mode": self.check_mode,
            "consent_cooldown": self.consent_cooldown,
            "rng_seed": self.rng_seed,
            "model_kind": self.model_kind,
        }


def engine_config_from_dict(d: dict, path: str = "engine") -> EngineConfig:
    """Build an EngineConfig from a JSON document, naming the bad field."""
    d = dict(d)
    fading_doc = d.pop("fading", {})
    if not isinstance(fading_doc, dict):
        raise ConfigError(f"{path}.fading", "must be an object")
    try:
        fading = FadingConfig(**fading_doc)
    except TypeError as exc:
        raise ConfigError(f"{path}.fading", str(exc)) from None
    except RejectedInput as exc:
        raise ConfigError(f"{path}.fading", str(exc)) from None
    try:
        return EngineConfig(fading=fading, **d)
    except TypeError as exc:
        raise ConfigError(path, str(exc)) from None
    except RejectedInput as exc:
        raise ConfigError(path, str(exc)) from None


@dataclass
class Prompt:
    """The one question the engine is currently asking.

    ``kind`` decides which fields are meaningful; ``explanation_offer`` marks
    the prompt kinds for which an explanation can be requested before
    answering.
    """

    kind: str
    record: Record | None = None
    model_label: str | None = None
    user_label: str | None = None
    model_probs: dict | None = None
    skepticality: float | None = None
    belief: float | None = None
    reason: str | None = None
    reasons: tuple[str, ...] = ()
    rng_draw: float | None = None
    explanation_offer: bool = False
    explanation_shown: bool = False

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "explanation_offer": self.explanation_offer}
        if self.record is not None:
            d["record"] = self.record.to_dict()
        if self.model_label is not None:
            d["model_label"] = self.model_label
        if self.user_label is not None:
            d["user_label"] = self.user_label
        if self.model_probs is not None:
            d["model_probs"] = dict(self.model_probs)
        if self.skepticality is not None:
            d["skepticality"] = self.skepticality
        if self.belief is not None:
            d["belief"] = self.belief
        if self.reason is not None:
            d["reason"] = self.reason
        if self.reasons:
            d["reasons"] = list(self.reasons)
        if self.rng_draw is not None:
            d["rng_draw"] = self.rng_draw
        return d


class DrawSource:
    """Uniform draws for the random check; replay substitutes recorded ones."""

    def __init__(self, seed: int):
        self._rng = random.Random(seed)
        self.used = 0

    def draw(self) -> float:
        self.used += 1
        return self._rng.random()


class ReplayDraws(DrawSource):
    def __init__(self, values):
        self._queue = deque(values)
        self.used = 0

    def draw(self) -> float:
        if not self._queue:
            raise ProtocolError("replay requested more random draws than were recorded")
        self.used += 1
        return self._queue.popleft()


class Engine:
    """One labeling session's state machine; single-writer, prompt at a time."""

    def __init__(
        self,
        config: EngineConfig,
        schema: Schema,
        seed_records=(),
        seed_labels=(),
        draws: DrawSource | None = None,
    ):
        if len(seed_records) != len(seed_labels):
            raise RejectedInput("seed records and labels must have equal length")
        self.config = config
        self.schema = schema
        self.labels = schema.labels
        self.model = build_model(config.model_kind, schema)
        for x in seed_records:
            schema.validate_record(x)
        self.model.fit_seed(list(seed_records), list(seed_labels))
        self.log = DecisionLog(self.labels)
        self.phase = Phase()
        self.pending: Prompt | None = None
        self.consent_snooze_until = 0
        self.draws = draws if draws is not None else DrawSource(config.rng_seed)
        self.phase_changes: list[tuple[int, str]] = []

    # -- record intake -----------------------------------------------------

    def offer_record(self, x: Record):
        """Feed the next record. Returns the resulting Prompt, or the
        DecisionEvent when MiC auto-accepted the record without asking."""
        if self.pending is not None:
            raise ProtocolError("a prompt is already outstanding")
        self.schema.validate_record(x)
        if x.t <= self.log.last_t:
            raise RejectedInput("record arrival indices must strictly increase")
        if self.phase.tag == PHASE_HIC:
            self.pending = Prompt(kind=PROMPT_NEED_LABEL, record=x)
            return self.pending
        return self._machine_step(x)

    def _machine_step(self, x: Record):
        probs = self.model.predict_proba(x)
        y_model = argmax_label(probs, self.labels)
        b = belief_metric(x, y_model, probs, self.log, x.t, self.config.fading, self.schema)
        if b < self.config.beta:
            self.phase.p += 1
            self.pending = Prompt(
                kind=PROMPT_CALLBACK,
                record=x,
                model_label=y_model,
                model_probs=probs,
                belief=b,
                reason=CALLBACK_LOW_BELIEF,
                explanation_offer=True,
            )
            return self.pending
        r = self.draws.draw()
        bound = b if self.config.check_mode == CHECK_BELIEF else self.config.beta
        if r < bound:
            event = DecisionEvent(
                t=x.t,
                record_id=x.id,
                features=x.features,
                phase=PHASE_MIC,
                model_label=y_model,
                model_probs=probs,
                final_label=y_model,
                decided_by=DECIDED_MACHINE,
                belief=b,
                rng_draw=r,
            )
            self.log.append(event)  # the model is NOT trained on its own output
            return event
        self.pending = Prompt(
            kind=PROMPT_CALLBACK,
            record=x,
            model_label=y_model,
            model_probs=probs,
            belief=b,
            reason=CALLBACK_RANDOM_CHECK,
            rng_draw=r,
            explanation_offer=True,
        )
        return self.pending

    # -- HiC responses -----------------------------------------------------

    def submit_user_label(self, y_user: str):
        """Answer a need_user_label prompt. Returns the challenge Prompt when
        the model is skeptical, otherwise the finalized DecisionEvent."""
        prompt = self._expect(PROMPT_NEED_LABEL)
        self.schema.validate_label(y_user)
        x = prompt.record
        probs = self.model.predict_proba(x)
        y_model = argmax_label(probs, self.labels)
        skp = None
        if y_user != y_model:
            skp = fading_skepticality(
                x, y_model, y_user, probs, self.log, x.t, self.config.fading, self.schema
            )
            if skp > self.config.alpha:
                self.pending = Prompt(
                    kind=PROMPT_CHALLENGE,
                    record=x,
                    model_label=y_model,
                    user_label=y_user,
                    model_probs=probs,
                    skepticality=skp,
                    explanation_offer=True,
                )
                return self.pending
        self.pending = None
        return self._finalize_hic(
            x, probs, y_model, y_user,
            final=y_user, decided_by=DECIDED_HUMAN, skepticality=skp,
            challenged=False, challenge_accepted=None, explanation_shown=False,
        )

    def resolve_challenge(self, response: str):
        """Answer a skeptical challenge: accept the suggestion, refuse it, or
        request an explanation (which leaves the challenge outstanding)."""
        prompt = self._expect(PROMPT_CHALLENGE)
        if response == REQUEST_EXPLANATION:
            return self.request_explanation()
        if response not in (ACCEPT_SUGGESTION, REFUSE):
            raise RejectedInput(f"unknown challenge response {response!r}")
        self.pending = None
        accepted = response == ACCEPT_SUGGESTION
        return self._finalize_hic(
            prompt.record, prompt.model_probs, prompt.model_label, prompt.user_label,
            final=prompt.model_label if accepted else prompt.user_label,
            decided_by=DECIDED_SUGGESTION if accepted else DECIDED_HUMAN,
            skepticality=prompt.skepticality,
            challenged=True, challenge_accepted=accepted,
            explanation_shown=prompt.explanation_shown,
        )

    def _finalize_hic(
        self, x, probs, y_model, y_user, *,
        final, decided_by, skepticality, challenged, challenge_accepted, explanation_shown,
    ) -> DecisionEvent:
        event = DecisionEvent(
            t=x.t,
            record_id=x.id,
            features=x.features,
            phase=PHASE_HIC,
            model_label=y_model,
            model_probs=probs,
            final_label=final,
            decided_by=decided_by,
            user_label=y_user,
            skepticality=skepticality,
            challenged=challenged,
            challenge_accepted=challenge_accepted,
            explanation_shown=explanation_shown,
        )
        self.log.append(event)
        self.model.learn_one(x, final)
        self.phase.k += 1
        self._promotion_check(x)
        return event

    def _promotion_check(self, x: Record) -> None:
        cfg = self.config
        if self.phase.k <= cfg.k_max:
            return
        if x.t < self.consent_snooze_until:
            return
        # in feature-weighted fading the just-decided record anchors d()
        avg = average_fea(self.log, AGENT_MODEL, x.t + 1, cfg.fading, x, self.schema)
        if avg > cfg.tau_promote:
            self.pending = Prompt(kind=PROMPT_CONSENT)

    def respond_consent(self, grant: bool) -> None:
        self._expect(PROMPT_CONSENT)
        self.pending = None
        t = self.log.last_t
        if grant:
            self.phase.tag = PHASE_MIC
            self.phase.p = 0
            self.phase_changes.append((t, PHASE_MIC))
        else:
            self.consent_snooze_until = t + self.config.consent_cooldown

    # -- MiC responses -----------------------------------------------------

    def submit_callback_label(self, y_user: str) -> DecisionEvent:
        """Answer a callback. The user's label is final (no challenge here),
        the model trains on it, and the critical conditions are checked."""
        prompt = self._expect(PROMPT_CALLBACK)
        self.schema.validate_label(y_user)
        self.pending = None
        x = prompt.record
        event = DecisionEvent(
            t=x.t,
            record_id=x.id,
            features=x.features,
            phase=PHASE_MIC,
            model_label=prompt.model_label,
            model_probs=prompt.model_probs,
            final_label=y_user,
            decided_by=DECIDED_HUMAN,
            user_label=y_user,
            belief=prompt.belief,
            callback_kind=prompt.reason,
            explanation_shown=prompt.explanation_shown,
            rng_draw=prompt.rng_draw,
        )
        self.log.append(event)
        self.model.learn_one(x, y_user)
        self._demotion_check(x)
        return event

    def _demotion_check(self, x: Record) -> None:
        cfg = self.config
        reasons = []
        if self.phase.p > cfg.p_max:
            reasons.append(REASON_CALLBACKS)
        avg = average_fea(self.log, AGENT_MODEL, x.t + 1, cfg.fading, x, self.schema)
        if avg < cfg.tau_demote:
            reasons.append(REASON_FEA_DROP)
        if reasons:
            self.pending = Prompt(kind=PROMPT_NOTICE, reasons=tuple(reasons))

    def respond_notice(self, revert: bool) -> None:
        self._expect(PROMPT_NOTICE)
        self.pending = None
        if revert:
            self.phase.tag = PHASE_HIC
            self.phase.k = 0
            self.phase_changes.append((self.log.last_t, PHASE_HIC))
        else:
            self.phase.p = 0  # fresh counting window, stay in MiC

    # -- explanations --------------------------------------------------------

    def request_explanation(self) -> dict:
        """Explanation payload for the outstanding prompt; marks it shown."""
        prompt = self.pending
        if prompt is None or not prompt.explanation_offer:
            raise ProtocolError("no prompt offering an explanation is outstanding")
        prompt.explanation_shown = True
        x = prompt.record
        if prompt.kind == PROMPT_CALLBACK and prompt.reason == CALLBACK_LOW_BELIEF:
            payload = {
                "unreliability": explain.unreliability_explanation(
                    self.log, self.schema, x, k=3,
                    max_prob_below=self.config.beta,
                    current_belief=prompt.belief,
                ).to_dict()
            }
        else:
            payload = {
                "exemplars": explain.exemplars(
                    self.log, self.schema, x, prompt.model_label, k=3
                ).to_dict(),
                "counter_exemplars": explain.counter_exemplars(
                    self.log, self.schema, x, prompt.model_label, k=3
                ).to_dict(),
            }
            if self.model.kind == "naive-bayes":
                payload["feature_contributions"] = explain.feature_contributions(
                    self.model, x, prompt.model_label
                ).to_dict()
        return {"context": prompt.kind, "payload": payload}

    # -- introspection -------------------------------------------------------

    def _expect(self, kind: str) -> Prompt:
        if self.pending is None:
            raise ProtocolError("no prompt is outstanding")
        if self.pending.kind != kind:
            raise ProtocolError(
                f"expected a response to {self.pending.kind!r}, not {kind!r}"
            )
        return self.pending

    @property
    def now_t(self) -> int:
        """First index not yet decided; valid as metrics now_t."""
        return self.log.last_t + 1

    def snapshot(self) -> dict:
        """Full state as JSON-compatible data. Excludes the raw RNG object:
        replay consumes recorded draws, so only the count is comparable."""
        return {
            "config": self.config.to_dict(),
            "schema": self.schema.to_dict(),
            "phase": {"tag": self.phase.tag, "k": self.phase.k, "p": self.phase.p},
            "consent_snooze_until": self.consent_snooze_until,
            "draws_used": self.draws.used,
            "model": self.model.to_dict(),
            "pending": self.pending.to_dict() if self.pending else None,
            "events": [event.to_dict() for event in self.log],
            "phase_changes": [[t, tag] for t, tag in self.phase_changes],
        }


def start_session(
    config: EngineConfig,
    schema: Schema,
    seed_records=(),
    seed_labels=(),
    draws: DrawSource | None = None,
) -> Engine:
    """Fresh session: HiC phase, counters at zero, model pre-trained on the
    seed rows. Seed rows precede the stream and never enter the decision log."""
    return Engine(config, schema, seed_records, seed_labels, draws=draws)
