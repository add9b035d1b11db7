"""Engine protocol tests: every branch of the decision loop, plus the
prompt discipline (one outstanding prompt, one-shot responses)."""

import random

import pytest

from colabel.engine import (
    ACCEPT_SUGGESTION,
    CHECK_BETA,
    PROMPT_CALLBACK,
    PROMPT_CHALLENGE,
    PROMPT_CONSENT,
    PROMPT_NEED_LABEL,
    PROMPT_NOTICE,
    REASON_CALLBACKS,
    REASON_FEA_DROP,
    REFUSE,
    REQUEST_EXPLANATION,
    Engine,
    EngineConfig,
    Prompt,
    start_session,
)
from colabel.errors import ProtocolError, RejectedInput
from colabel.events import (
    CALLBACK_LOW_BELIEF,
    CALLBACK_RANDOM_CHECK,
    DECIDED_HUMAN,
    DECIDED_MACHINE,
    DECIDED_SUGGESTION,
    PHASE_HIC,
    PHASE_MIC,
    DecisionEvent,
)
from colabel.metrics import FadingConfig

from .conftest import numeric_schema, rec


def config(**kw) -> EngineConfig:
    fading_kw = kw.pop("fading", {})
    defaults = dict(prior=1.0)
    defaults.update(fading_kw)
    base = dict(
        alpha=-1.5,  # challenge on every clash unless a test overrides
        beta=0.4,
        k_max=1,
        p_max=10,
        tau_promote=0.8,
        tau_demote=0.6,
        consent_cooldown=3,
        check_mode=CHECK_BETA,
        rng_seed=1,
        fading=FadingConfig(**defaults),
    )
    base.update(kw)
    return EngineConfig(**base)


def agreeable_hic_steps(engine: Engine, n: int, start_t: int = 0) -> None:
    """Run n HiC records where the user submits the model's own prediction,
    granting nothing; the model track record stays perfect."""
    from colabel.learner import argmax_label

    for t in range(start_t, start_t + n):
        x = rec(t, 1.0 + 0.01 * t, -1.0)
        engine.offer_record(x)
        y_model = argmax_label(engine.model.predict_proba(x), engine.labels)
        out = engine.submit_user_label(y_model)
        assert isinstance(out, DecisionEvent)


def promoted_engine(**kw) -> Engine:
    """Two agreeable HiC records, then consent: lands in MiC at t=2."""
    engine = start_session(config(**kw), numeric_schema())
    agreeable_hic_steps(engine, 2)
    assert engine.pending is not None and engine.pending.kind == PROMPT_CONSENT
    engine.respond_consent(True)
    assert engine.phase.tag == PHASE_MIC and engine.phase.p == 0
    return engine


class TestHiCBranches:
    def test_direct_accept_when_labels_agree(self, ab_schema):
        engine = start_session(config(), ab_schema)
        engine.offer_record(rec(0, 0.0, 0.0))
        event = engine.submit_user_label("A")  # untrained argmax ties to A
        assert isinstance(event, DecisionEvent)
        assert event.phase == PHASE_HIC
        assert event.decided_by == DECIDED_HUMAN
        assert event.user_label == "A" and event.model_label == "A"
        assert event.final_label == "A"
        assert event.challenged is False and event.challenge_accepted is None
        assert event.skepticality is None  # no clash, never computed
        assert engine.phase.k == 1
        assert engine.model.n_seen == 1

    def test_challenge_accept_takes_model_label(self, ab_schema):
        engine = start_session(config(), ab_schema)
        engine.offer_record(rec(0, 0.0, 0.0))
        prompt = engine.submit_user_label("B")
        assert isinstance(prompt, Prompt) and prompt.kind == PROMPT_CHALLENGE
        assert prompt.model_label == "A" and prompt.user_label == "B"
        assert prompt.skepticality is not None and prompt.skepticality > -1.5
        event = engine.resolve_challenge(ACCEPT_SUGGESTION)
        assert event.final_label == "A"
        assert event.decided_by == DECIDED_SUGGESTION
        assert event.challenged is True and event.challenge_accepted is True
        assert event.user_label == "B"
        assert engine.phase.k == 1 and engine.model.n_seen == 1

    def test_challenge_refuse_keeps_user_label(self, ab_schema):
        engine = start_session(config(), ab_schema)
        engine.offer_record(rec(0, 0.0, 0.0))
        engine.submit_user_label("B")
        event = engine.resolve_challenge(REFUSE)
        assert event.final_label == "B"
        assert event.decided_by == DECIDED_HUMAN
        assert event.challenged is True and event.challenge_accepted is False
        assert engine.model.n_seen == 1

    def test_explanation_then_refuse_flags_event(self, ab_schema):
        engine = start_session(config(), ab_schema)
        engine.offer_record(rec(0, 0.0, 0.0))
        engine.submit_user_label("B")
        payload = engine.resolve_challenge(REQUEST_EXPLANATION)
        assert payload["context"] == PROMPT_CHALLENGE
        assert "exemplars" in payload["payload"]
        assert engine.pending is not None  # challenge still outstanding
        event = engine.resolve_challenge(REFUSE)
        assert event.explanation_shown is True
        assert event.final_label == "B"

    def test_not_skeptical_clash_accepts_user_label(self, ab_schema):
        engine = start_session(config(alpha=2.0), ab_schema)  # skp can never exceed 2
        engine.offer_record(rec(0, 0.0, 0.0))
        event = engine.submit_user_label("B")
        assert isinstance(event, DecisionEvent)
        assert event.challenged is False
        assert event.final_label == "B"
        assert event.skepticality is not None  # clash means it was evaluated
        assert event.skepticality <= 2.0


class TestMiCBranches:
    def test_auto_accept_records_draw_and_skips_training(self):
        engine = promoted_engine(rng_seed=1)  # first draw 0.134 < beta 0.4
        n_before = engine.model.n_seen
        expected_draw = random.Random(1).random()
        outcome = engine.offer_record(rec(2, 1.0, -1.0))
        assert isinstance(outcome, DecisionEvent)
        assert outcome.decided_by == DECIDED_MACHINE
        assert outcome.callback_kind == "none"
        assert outcome.user_label is None
        assert outcome.rng_draw == expected_draw
        assert outcome.belief is not None and outcome.belief >= engine.config.beta
        assert engine.model.n_seen == n_before
        assert engine.pending is None
        assert engine.phase.p == 0

    def test_random_check_callback_keeps_p_and_trains(self):
        engine = promoted_engine(rng_seed=0)  # first draw 0.844 >= beta 0.4
        expected_draw = random.Random(0).random()
        prompt = engine.offer_record(rec(2, 1.0, -1.0))
        assert isinstance(prompt, Prompt)
        assert prompt.kind == PROMPT_CALLBACK
        assert prompt.reason == CALLBACK_RANDOM_CHECK
        assert prompt.rng_draw == expected_draw
        assert engine.phase.p == 0  # only low-belief callbacks count
        n_before = engine.model.n_seen
        event = engine.submit_callback_label("A")
        assert event.callback_kind == CALLBACK_RANDOM_CHECK
        assert event.decided_by == DECIDED_HUMAN
        assert event.rng_draw == expected_draw
        assert engine.model.n_seen == n_before + 1
        assert engine.pending is None

    def test_low_belief_callback_increments_p(self):
        engine = promoted_engine(beta=1.0)  # belief < 1 always triggers callback
        prompt = engine.offer_record(rec(2, 1.0, -1.0))
        assert isinstance(prompt, Prompt)
        assert prompt.reason == CALLBACK_LOW_BELIEF
        assert prompt.rng_draw is None  # no random check happened
        assert prompt.belief is not None and prompt.belief < 1.0
        assert engine.phase.p == 1
        n_before = engine.model.n_seen
        event = engine.submit_callback_label("B")
        assert event.callback_kind == CALLBACK_LOW_BELIEF
        assert event.final_label == "B" and event.user_label == "B"
        assert engine.model.n_seen == n_before + 1

    def test_belief_equal_to_beta_is_not_low(self, ab_schema):
        # untrained two-label model has confidence exactly 0.5; prior 1.0
        # makes belief exactly 0.5, and b < beta is strict
        engine = start_session(config(beta=0.5, rng_seed=0), ab_schema)
        engine.phase.tag = PHASE_MIC
        prompt = engine.offer_record(rec(0, 0.0, 0.0))
        assert isinstance(prompt, Prompt)
        assert prompt.reason == CALLBACK_RANDOM_CHECK  # not low_belief
        assert prompt.belief == 0.5

    def test_critical_notice_from_callback_count_and_revert(self):
        engine = promoted_engine(beta=1.0, p_max=1)
        engine.offer_record(rec(2, 1.0, -1.0))
        engine.submit_callback_label("A")
        assert engine.pending is None  # p == p_max stays (strict)
        engine.offer_record(rec(3, 1.0, -1.0))
        engine.submit_callback_label("A")
        notice = engine.pending
        assert notice is not None and notice.kind == PROMPT_NOTICE
        assert notice.reasons == (REASON_CALLBACKS,)
        assert engine.phase.p == 2
        engine.respond_notice(True)
        assert engine.phase.tag == PHASE_HIC
        assert engine.phase.k == 0

    def test_critical_notice_stay_resets_p(self):
        engine = promoted_engine(beta=1.0, p_max=1)
        for t in (2, 3):
            engine.offer_record(rec(t, 1.0, -1.0))
            engine.submit_callback_label("A")
        assert engine.pending is not None
        engine.respond_notice(False)
        assert engine.phase.tag == PHASE_MIC
        assert engine.phase.p == 0
        assert engine.pending is None

    def test_critical_notice_from_fea_drop(self):
        engine = promoted_engine(
            beta=1.0, p_max=50, tau_promote=0.7, tau_demote=0.65,
            fading={"prior": 0.5},
        )
        engine.offer_record(rec(2, 1.0, -1.0))
        engine.submit_callback_label("B")  # contradicts the model's label
        notice = engine.pending
        assert notice is not None and notice.kind == PROMPT_NOTICE
        assert notice.reasons == (REASON_FEA_DROP,)


class TestPromotion:
    def test_boundary_k_equal_k_max_stays(self, ab_schema):
        engine = start_session(config(k_max=2), ab_schema)
        agreeable_hic_steps(engine, 2)
        assert engine.pending is None  # k == k_max, strict inequality
        agreeable_hic_steps(engine, 1, start_t=2)
        assert engine.pending is not None and engine.pending.kind == PROMPT_CONSENT

    def test_low_track_record_blocks_promotion(self, ab_schema):
        from colabel.learner import argmax_label

        engine = start_session(
            config(alpha=2.0, tau_promote=0.9, tau_demote=0.1, fading={"prior": 0.0}),
            ab_schema,
        )
        # the user contradicts the model every time: its track record stays 0,
        # so k > k_max alone must not raise the consent prompt
        for t in range(6):
            x = rec(t, 0.1 * t, 0.0)
            engine.offer_record(x)
            y_model = argmax_label(engine.model.predict_proba(x), engine.labels)
            other = "B" if y_model == "A" else "A"
            out = engine.submit_user_label(other)
            assert isinstance(out, DecisionEvent)  # alpha=2 never challenges
        assert engine.phase.k == 6
        assert engine.pending is None

    def test_consent_refuse_snoozes(self, ab_schema):
        engine = start_session(config(consent_cooldown=3), ab_schema)
        agreeable_hic_steps(engine, 2)
        assert engine.pending.kind == PROMPT_CONSENT
        engine.respond_consent(False)
        assert engine.phase.tag == PHASE_HIC
        assert engine.consent_snooze_until == 1 + 3
        agreeable_hic_steps(engine, 2, start_t=2)  # t=2,3 inside the window
        assert engine.pending is None
        agreeable_hic_steps(engine, 1, start_t=4)  # t=4 hits the boundary
        assert engine.pending is not None and engine.pending.kind == PROMPT_CONSENT

    def test_consent_grant_resets_p(self, ab_schema):
        engine = start_session(config(), ab_schema)
        engine.phase.p = 7  # stale from a previous stint
        agreeable_hic_steps(engine, 2)
        engine.respond_consent(True)
        assert engine.phase.tag == PHASE_MIC
        assert engine.phase.p == 0

    def test_consent_prompt_is_one_shot(self, ab_schema):
        engine = start_session(config(), ab_schema)
        agreeable_hic_steps(engine, 2)
        engine.respond_consent(True)
        with pytest.raises(ProtocolError):
            engine.respond_consent(True)


class TestProtocolDiscipline:
    def test_offer_with_outstanding_prompt_rejected(self, ab_schema):
        engine = start_session(config(), ab_schema)
        engine.offer_record(rec(0, 0.0, 0.0))
        with pytest.raises(ProtocolError):
            engine.offer_record(rec(1, 0.0, 0.0))

    def test_wrong_response_kind_rejected(self, ab_schema):
        engine = start_session(config(), ab_schema)
        engine.offer_record(rec(0, 0.0, 0.0))
        with pytest.raises(ProtocolError):
            engine.resolve_challenge(REFUSE)
        with pytest.raises(ProtocolError):
            engine.submit_callback_label("A")
        with pytest.raises(ProtocolError):
            engine.respond_consent(True)

    def test_unknown_label_keeps_prompt(self, ab_schema):
        engine = start_session(config(), ab_schema)
        engine.offer_record(rec(0, 0.0, 0.0))
        with pytest.raises(RejectedInput):
            engine.submit_user_label("Z")
        assert engine.pending is not None and engine.pending.kind == PROMPT_NEED_LABEL
        event = engine.submit_user_label("A")
        assert isinstance(event, DecisionEvent)

    def test_non_increasing_t_rejected(self, ab_schema):
        engine = start_session(config(), ab_schema)
        engine.offer_record(rec(0, 0.0, 0.0))
        engine.submit_user_label("A")
        with pytest.raises(RejectedInput):
            engine.offer_record(rec(0, 1.0, 1.0))

    def test_schema_violation_rejected(self, ab_schema):
        engine = start_session(config(), ab_schema)
        with pytest.raises(RejectedInput):
            engine.offer_record(rec(0, 0.0))

    def test_no_explanation_without_offering_prompt(self, ab_schema):
        engine = start_session(config(), ab_schema)
        with pytest.raises(ProtocolError):
            engine.request_explanation()
        engine.offer_record(rec(0, 0.0, 0.0))
        with pytest.raises(ProtocolError):
            engine.request_explanation()  # need_user_label offers none


class TestDeterminism:
    def test_same_config_and_seed_snapshots_identical(self, ab_schema):
        def run():
            engine = start_session(config(rng_seed=5), ab_schema,
                                   seed_records=[rec(0, 1.0, 2.0, rid="s0")],
                                   seed_labels=["A"])
            agreeable_hic_steps(engine, 2, start_t=0)
            engine.respond_consent(True)
            for t in (2, 3, 4):
                out = engine.offer_record(rec(t, 1.0, -1.0))
                if isinstance(out, Prompt):
                    engine.submit_callback_label("A")
                    if engine.pending is not None:
                        engine.respond_notice(False)
            return engine.snapshot()

        assert run() == run()

    def test_seed_rows_train_but_stay_out_of_log(self, ab_schema):
        seeds = [rec(i, float(i), 0.0, rid=f"s{i}") for i in range(20)]
        labels = ["A", "B"] * 10
        engine = start_session(config(), ab_schema, seeds, labels)
        assert engine.model.n_seen == 20
        assert len(engine.log) == 0
        assert engine.phase.tag == PHASE_HIC
        assert engine.phase.k == 0 and engine.phase.p == 0

    def test_unseeded_session_predicts_uniform(self, ab_schema):
        engine = start_session(config(), ab_schema)
        assert engine.model.predict_proba(rec(0, 3.0, -2.0)) == {"A": 0.5, "B": 0.5}


class TestFeatureModeFading:
    def test_full_loop_with_feature_weights(self, ab_schema):
        # promotion, MiC callbacks and demotion checks all evaluate the
        # fading metrics anchored on the current record
        engine = start_session(
            config(
                beta=1.0,
                p_max=2,
                tau_promote=0.4,
                tau_demote=0.3,
                fading={"weight_mode": "feature", "feature_bandwidth": 0.5, "prior": 1.0},
            ),
            ab_schema,
        )
        agreeable_hic_steps(engine, 2)
        assert engine.pending is not None and engine.pending.kind == PROMPT_CONSENT
        engine.respond_consent(True)
        for t in (2, 3, 4):
            prompt = engine.offer_record(rec(t, 1.0, -1.0))
            assert isinstance(prompt, Prompt) and prompt.reason == CALLBACK_LOW_BELIEF
            engine.submit_callback_label("A")
            if engine.pending is not None:
                assert engine.pending.kind == PROMPT_NOTICE
                engine.respond_notice(False)
        assert engine.phase.tag == PHASE_MIC
        assert engine.model.n_seen == 5

    def test_metrics_view_works_in_feature_mode(self, ab_schema):
        from colabel.session import EVENT_OFFER_RECORD, EVENT_USER_LABEL, Session
        from colabel.store import MemoryStore

        session = Session(
            "s",
            config(fading={"weight_mode": "feature", "feature_bandwidth": 1.0}),
            ab_schema,
            sink=MemoryStore(),
        )
        assert session.metrics_view()["average_fea"]["model"] == 1.0  # prior
        session.handle_event({"type": EVENT_OFFER_RECORD, "record": rec(0, 1.0, 0.0).to_dict()})
        out = session.handle_event({"type": EVENT_USER_LABEL, "label": "A"})
        assert 0.0 <= out["metrics"]["average_fea"]["model"] <= 1.0


class TestExplanationHooks:
    def test_low_belief_callback_serves_unreliability(self):
        engine = promoted_engine(beta=1.0)
        engine.offer_record(rec(2, 1.0, -1.0))
        payload = engine.request_explanation()
        assert payload["context"] == PROMPT_CALLBACK
        assert "unreliability" in payload["payload"]
        assert payload["payload"]["unreliability"]["context"]["current_belief"] is not None
        event = engine.submit_callback_label("A")
        assert event.explanation_shown is True

    def test_random_check_callback_serves_standard_bundle(self):
        engine = promoted_engine(rng_seed=0)
        engine.offer_record(rec(2, 1.0, -1.0))
        payload = engine.request_explanation()
        assert set(payload["payload"]) == {"exemplars", "counter_exemplars", "feature_contributions"}
