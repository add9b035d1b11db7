"""One session = one engine plus its write-ahead log plus a mailbox lock.

Every client event maps to exactly one engine transition; all resulting log
entries are appended (and flushed) before the response is returned. Requests
against one session are serialized by the lock; independent sessions do not
contend.

``replay_log`` re-executes a log file through a fresh engine, consuming the
recorded random draws instead of drawing, while a ``VerifyingStore`` checks
that every re-emitted entry matches the file line for line. The final state
snapshot is bit-identical to the live session's.
"""

import threading

from . import store as store_mod
from .engine import (
    ACCEPT_SUGGESTION,
    PROMPT_CALLBACK,
    PROMPT_NEED_LABEL,
    PROMPT_NOTICE,
    REFUSE,
    EngineConfig,
    Prompt,
    ReplayDraws,
    engine_config_from_dict,
    start_session,
)
from .errors import ConfigError, CorruptLog, ProtocolError, RejectedInput
from .events import (
    CALLBACK_LOW_BELIEF,
    CALLBACK_RANDOM_CHECK,
    DECIDED_MACHINE,
    PHASE_HIC,
    PHASE_MIC,
    DecisionEvent,
)
from .metrics import AGENT_HUMAN, AGENT_MODEL, average_fea, per_label_fea
from .records import Record, Schema
from .store import (
    KIND_DECISION_FINALIZED,
    KIND_EXPLANATION_SERVED,
    KIND_MODEL_UPDATED,
    KIND_NOTICE_ISSUED,
    KIND_PHASE_CHANGED,
    KIND_PROMPT_ISSUED,
    KIND_RECORD_OFFERED,
    KIND_RESPONSE_RECEIVED,
    KIND_RNG_DRAW,
    KIND_SESSION_CLOSED,
    KIND_SESSION_CREATED,
    EntrySink,
    snapshot_hash,
)

EVENT_OFFER_RECORD = "offer_record"
EVENT_USER_LABEL = "user_label"
EVENT_CHALLENGE_RESPONSE = "challenge_response"
EVENT_CONSENT_RESPONSE = "consent_response"
EVENT_NOTICE_RESPONSE = "notice_response"
EVENT_REQUEST_EXPLANATION = "request_explanation"

CLIENT_EVENT_TYPES = (
    EVENT_OFFER_RECORD,
    EVENT_USER_LABEL,
    EVENT_CHALLENGE_RESPONSE,
    EVENT_CONSENT_RESPONSE,
    EVENT_NOTICE_RESPONSE,
    EVENT_REQUEST_EXPLANATION,
)


def parse_session_config(doc: dict) -> dict:
    """Validate a session-creation document into constructor arguments."""
    if not isinstance(doc, dict):
        raise ConfigError("", "config must be an object")
    engine_doc = doc.get("engine", {})
    if not isinstance(engine_doc, dict):
        raise ConfigError("engine", "must be an object")
    config = engine_config_from_dict(engine_doc)
    data_spec = doc.get("data")
    if "schema" in doc:
        try:
            schema = Schema.from_dict(doc["schema"])
        except (KeyError, TypeError) as exc:
            raise ConfigError("schema", str(exc)) from None
        except RejectedInput as exc:
            raise ConfigError("schema", str(exc)) from None
    elif data_spec and "generator" in data_spec:
        from .stream import blob_schema

        gen = data_spec["generator"]
        try:
            schema = blob_schema(gen.get("classes", 2), gen.get("dims", 2))
        except RejectedInput as exc:
            raise ConfigError("data.generator", str(exc)) from None
    else:
        raise ConfigError("schema", "missing (and no generator to derive it from)")
    seed_doc = doc.get("seed_data") or {}
    try:
        seed_records = [Record.from_dict(r) for r in seed_doc.get("records", [])]
    except (KeyError, TypeError) as exc:
        raise ConfigError("seed_data.records", f"malformed record: {exc}") from None
    seed_labels = list(seed_doc.get("labels", []))
    if len(seed_records) != len(seed_labels):
        raise ConfigError("seed_data", "records and labels must have equal length")
    for lab in seed_labels:
        if lab not in schema.labels:
            raise ConfigError("seed_data.labels", f"unknown label {lab!r}")
    return {
        "config": config,
        "schema": schema,
        "seed_records": seed_records,
        "seed_labels": seed_labels,
        "data_spec": data_spec,
    }


def _build_rows(data_spec: dict | None, schema: Schema):
    if not data_spec:
        return None
    from . import stream as stream_mod

    if "generator" in data_spec:
        gen = data_spec["generator"]
        _, rows = stream_mod.gen_blobs(
            n=gen.get("n", 100),
            classes=gen.get("classes", 2),
            dims=gen.get("dims", 2),
            separation=gen.get("separation", 4.0),
            seed=gen.get("seed", 0),
        )
    elif "csv" in data_spec:
        rows = stream_mod.load_csv(data_spec["csv"], schema)
    else:
        raise ConfigError("data", "expected a generator or csv block")
    if "drift" in data_spec and data_spec["drift"]:
        rows = stream_mod.apply_drift(rows, stream_mod.drift_spec_from_dict(data_spec["drift"]))
    return rows


class Session:
    def __init__(
        self,
        session_id: str,
        config: EngineConfig,
        schema: Schema,
        seed_records=(),
        seed_labels=(),
        sink: EntrySink | None = None,
        data_spec: dict | None = None,
        draws=None,
        record_creation: bool = True,
        attach_data: bool = True,
    ):
        self.id = session_id
        self.lock = threading.Lock()
        self.sink = sink if sink is not None else store_mod.MemoryStore()
        self.engine = start_session(config, schema, seed_records, seed_labels, draws=draws)
        # replays echo the recorded spec but feed explicit records, so they
        # never rebuild (or require) the data source itself
        self.data_rows = _build_rows(data_spec, schema) if attach_data else None
        self.data_cursor = 0
        self.truth_by_t: dict[int, str] = {}
        self.last_explanation: dict | None = None
        self.closed = False
        if record_creation:
            self.sink.append(
                KIND_SESSION_CREATED,
                {
                    "config": config.to_dict(),
                    "schema": schema.to_dict(),
                    "seed_data": {
                        "records": [r.to_dict() for r in seed_records],
                        "labels": list(seed_labels),
                    },
                    "data": data_spec,
                },
            )

    # -- event handling ------------------------------------------------------

    def handle_event(self, event: dict) -> dict:
        """Apply one client event; exactly one engine transition runs and all
        of its log entries are written before the response is built."""
        etype = event.get("type")
        with self.lock:
            if self.closed:
                raise ProtocolError("session is closed")
            if etype == EVENT_OFFER_RECORD:
                return self._offer(event)
            if etype == EVENT_USER_LABEL:
                return self._user_label(event)
            if etype == EVENT_CHALLENGE_RESPONSE:
                return self._challenge_response(event)
            if etype == EVENT_CONSENT_RESPONSE:
                return self._consent_response(event)
            if etype == EVENT_NOTICE_RESPONSE:
                return self._notice_response(event)
            if etype == EVENT_REQUEST_EXPLANATION:
                return self._request_explanation()
            raise RejectedInput(f"unknown event type {etype!r}")

    def _next_record(self, event: dict) -> tuple[Record, bool]:
        if event.get("record") is not None:
            try:
                return Record.from_dict(event["record"]), False
            except (KeyError, TypeError) as exc:
                raise RejectedInput(f"malformed record payload: {exc}") from None
        if self.data_rows is None:
            raise RejectedInput("no record supplied and no data source attached")
        if self.data_cursor >= len(self.data_rows):
            raise RejectedInput("data source exhausted")
        return self.data_rows[self.data_cursor][0], True

    def _offer(self, event: dict) -> dict:
        record, from_data = self._next_record(event)
        outcome = self.engine.offer_record(record)
        if from_data:  # advance only once the engine accepted the record
            self.truth_by_t[record.t] = self.data_rows[self.data_cursor][1]
            self.data_cursor += 1
        self.sink.append(KIND_RECORD_OFFERED, {"record": record.to_dict()})
        if isinstance(outcome, DecisionEvent):
            self.sink.append(KIND_RNG_DRAW, {"value": outcome.rng_draw})
            self.sink.append(KIND_DECISION_FINALIZED, {"event": outcome.to_dict()})
            return self._respond({"result": "auto_accepted", "event": outcome.to_dict()})
        if outcome.kind == PROMPT_CALLBACK and outcome.rng_draw is not None:
            self.sink.append(KIND_RNG_DRAW, {"value": outcome.rng_draw})
        self.sink.append(KIND_PROMPT_ISSUED, {"prompt": outcome.to_dict()})
        return self._respond({"result": "prompt", "prompt": outcome.to_dict()})

    def _user_label(self, event: dict) -> dict:
        label = event.get("label")
        pending = self.engine.pending
        if pending is None:
            raise ProtocolError("no prompt is outstanding")
        if pending.kind == PROMPT_NEED_LABEL:
            outcome = self.engine.submit_user_label(label)
            self.sink.append(
                KIND_RESPONSE_RECEIVED, {"action": EVENT_USER_LABEL, "label": label}
            )
            if isinstance(outcome, Prompt):
                self.sink.append(KIND_PROMPT_ISSUED, {"prompt": outcome.to_dict()})
                return self._respond({"result": "prompt", "prompt": outcome.to_dict()})
            return self._after_finalized(outcome)
        if pending.kind == PROMPT_CALLBACK:
            outcome = self.engine.submit_callback_label(label)
            self.sink.append(
                KIND_RESPONSE_RECEIVED, {"action": EVENT_USER_LABEL, "label": label}
            )
            return self._after_finalized(outcome)
        raise ProtocolError(f"a label does not answer a {pending.kind!r} prompt")

    def _challenge_response(self, event: dict) -> dict:
        response = event.get("response")
        if response == "request_explanation":
            return self._request_explanation()
        if response not in (ACCEPT_SUGGESTION, REFUSE, "accept", "refuse"):
            raise RejectedInput(f"unknown challenge response {response!r}")
        normalized = ACCEPT_SUGGESTION if response in (ACCEPT_SUGGESTION, "accept") else REFUSE
        outcome = self.engine.resolve_challenge(normalized)
        self.sink.append(
            KIND_RESPONSE_RECEIVED,
            {"action": EVENT_CHALLENGE_RESPONSE, "response": normalized},
        )
        return self._after_finalized(outcome)

    def _consent_response(self, event: dict) -> dict:
        grant = bool(event.get("grant"))
        self.engine.respond_consent(grant)
        self.sink.append(
            KIND_RESPONSE_RECEIVED, {"action": EVENT_CONSENT_RESPONSE, "grant": grant}
        )
        if grant:
            self.sink.append(
                KIND_PHASE_CHANGED, {"to": PHASE_MIC, "t": self.engine.log.last_t}
            )
        return self._respond(
            {"result": "consent_recorded", "phase": self.engine.phase.tag}
        )

    def _notice_response(self, event: dict) -> dict:
        revert = bool(event.get("revert"))
        self.engine.respond_notice(revert)
        self.sink.append(
            KIND_RESPONSE_RECEIVED, {"action": EVENT_NOTICE_RESPONSE, "revert": revert}
        )
        if revert:
            self.sink.append(
                KIND_PHASE_CHANGED, {"to": PHASE_HIC, "t": self.engine.log.last_t}
            )
        return self._respond(
            {"result": "notice_recorded", "phase": self.engine.phase.tag}
        )

    def _request_explanation(self) -> dict:
        payload = self.engine.request_explanation()
        self.sink.append(KIND_EXPLANATION_SERVED, payload)
        self.last_explanation = payload
        return self._respond({"result": "explanation", "explanation": payload})

    def _after_finalized(self, event: DecisionEvent) -> dict:
        self.sink.append(KIND_DECISION_FINALIZED, {"event": event.to_dict()})
        if event.decided_by != DECIDED_MACHINE:
            self.sink.append(KIND_MODEL_UPDATED, {"n_seen": self.engine.model.n_seen})
        follow_up = self.engine.pending
        response = {"result": "finalized", "event": event.to_dict()}
        if follow_up is not None:
            if follow_up.kind == PROMPT_NOTICE:
                self.sink.append(
                    KIND_NOTICE_ISSUED, {"reasons": list(follow_up.reasons)}
                )
            else:
                self.sink.append(KIND_PROMPT_ISSUED, {"prompt": follow_up.to_dict()})
            response["prompt"] = follow_up.to_dict()
        return self._respond(response)

    def _respond(self, body: dict) -> dict:
        body["metrics"] = self._metrics_view_locked()
        return body

    # -- views ----------------------------------------------------------------

    def prompt_view(self) -> dict | None:
        with self.lock:
            pending = self.engine.pending
            return pending.to_dict() if pending else None

    def metrics_view(self) -> dict:
        with self.lock:
            return self._metrics_view_locked()

    def _metrics_view_locked(self) -> dict:
        engine = self.engine
        now_t = engine.now_t
        cfg = engine.config.fading
        # feature-weighted fading needs a reference point; anchor the view on
        # the most recently decided record
        x_now = None
        if engine.log:
            last = engine.log[-1]
            x_now = Record(last.record_id, last.features, last.t)
        counts = {
            "records": 0,
            "hic_decisions": 0,
            "mic_decisions": 0,
            "challenges": 0,
            "challenges_accepted": 0,
            "auto_accepts": 0,
            "callbacks_low_belief": 0,
            "callbacks_random_check": 0,
        }
        for event in engine.log:
            counts["records"] += 1
            if event.phase == PHASE_HIC:
                counts["hic_decisions"] += 1
                if event.challenged:
                    counts["challenges"] += 1
                    if event.challenge_accepted:
                        counts["challenges_accepted"] += 1
            else:
                counts["mic_decisions"] += 1
                if event.decided_by == DECIDED_MACHINE:
                    counts["auto_accepts"] += 1
                elif event.callback_kind == CALLBACK_LOW_BELIEF:
                    counts["callbacks_low_belief"] += 1
                elif event.callback_kind == CALLBACK_RANDOM_CHECK:
                    counts["callbacks_random_check"] += 1
        human_queries = (
            counts["hic_decisions"]
            + counts["callbacks_low_belief"]
            + counts["callbacks_random_check"]
        )
        return {
            "phase": engine.phase.tag,
            "k": engine.phase.k,
            "p": engine.phase.p,
            "fea": {
                "model": per_label_fea(engine.log, AGENT_MODEL, now_t, cfg, x_now, engine.schema),
                "human": per_label_fea(engine.log, AGENT_HUMAN, now_t, cfg, x_now, engine.schema),
            },
            "average_fea": {
                "model": average_fea(engine.log, AGENT_MODEL, now_t, cfg, x_now, engine.schema),
                "human": average_fea(engine.log, AGENT_HUMAN, now_t, cfg, x_now, engine.schema),
            },
            "counts": counts,
            "human_queries": human_queries,
            "human_query_rate": (
                human_queries / counts["records"] if counts["records"] else 0.0
            ),
            "n_seen": engine.model.n_seen,
        }

    def snapshot(self) -> dict:
        with self.lock:
            return self.engine.snapshot()

    def state_hash(self) -> str:
        return snapshot_hash(self.snapshot())

    def close(self, summary: dict | None = None) -> str:
        """Append the closing entry with the final state hash; idempotent."""
        with self.lock:
            if self.closed:
                raise ProtocolError("session is already closed")
            final_hash = snapshot_hash(self.engine.snapshot())
            self.sink.append(
                KIND_SESSION_CLOSED,
                {"state_hash": final_hash, "summary": summary or {}},
            )
            self.closed = True
            self.sink.close()
            return final_hash


def new_session_from_config(session_id: str, doc: dict, sink: EntrySink | None = None) -> Session:
    parsed = parse_session_config(doc)
    return Session(
        session_id,
        parsed["config"],
        parsed["schema"],
        parsed["seed_records"],
        parsed["seed_labels"],
        sink=sink,
        data_spec=parsed["data_spec"],
    )


def replay_log(path) -> tuple[Session, str | None]:
    """Re-execute a session log; returns the rebuilt session and the recorded
    final hash (None when the log has no closing entry).

    Raises CorruptLog when the file has gaps, unparseable lines, or when any
    re-emitted entry disagrees with the file.
    """
    entries = store_mod.read_log(path)
    if not entries:
        raise CorruptLog(0, "empty log")
    if entries[0].kind != KIND_SESSION_CREATED:
        raise CorruptLog(0, "log does not start with session_created")
    created = entries[0].payload
    draws = ReplayDraws(
        [e.payload["value"] for e in entries if e.kind == KIND_RNG_DRAW]
    )
    try:
        config = engine_config_from_dict(created["config"], path="config")
        schema = Schema.from_dict(created["schema"])
        seed_doc = created.get("seed_data") or {}
        seed_records = [Record.from_dict(r) for r in seed_doc.get("records", [])]
        seed_labels = list(seed_doc.get("labels", []))
    except (ConfigError, RejectedInput, KeyError, TypeError) as exc:
        raise CorruptLog(0, f"bad session_created payload: {exc}") from None
    verifier = store_mod.VerifyingStore(entries)
    session = Session(
        "replay",
        config,
        schema,
        seed_records,
        seed_labels,
        sink=verifier,
        data_spec=created.get("data"),
        draws=draws,
        record_creation=True,  # re-emits session_created; the verifier checks it
        attach_data=False,
    )
    recorded_hash: str | None = None
    while verifier.cursor < len(entries):
        entry = entries[verifier.cursor]
        try:
            if entry.kind == KIND_RECORD_OFFERED:
                session.handle_event(
                    {"type": EVENT_OFFER_RECORD, "record": entry.payload["record"]}
                )
            elif entry.kind == KIND_RESPONSE_RECEIVED:
                session.handle_event(_client_event(entry.payload))
            elif entry.kind == KIND_EXPLANATION_SERVED:
                session.handle_event({"type": EVENT_REQUEST_EXPLANATION})
            elif entry.kind == KIND_SESSION_CLOSED:
                recorded_hash = entry.payload.get("state_hash")
                verifier.cursor += 1
            else:
                raise CorruptLog(
                    entry.seq, f"unexpected {entry.kind!r} outside a transition"
                )
        except (ProtocolError, RejectedInput) as exc:
            raise CorruptLog(entry.seq, f"replay rejected: {exc}") from None
    return session, recorded_hash


def _client_event(payload: dict) -> dict:
    action = payload.get("action")
    if action == EVENT_USER_LABEL:
        return {"type": EVENT_USER_LABEL, "label": payload.get("label")}
    if action == EVENT_CHALLENGE_RESPONSE:
        return {"type": EVENT_CHALLENGE_RESPONSE, "response": payload.get("response")}
    if action == EVENT_CONSENT_RESPONSE:
        return {"type": EVENT_CONSENT_RESPONSE, "grant": payload.get("grant")}
    if action == EVENT_NOTICE_RESPONSE:
        return {"type": EVENT_NOTICE_RESPONSE, "revert": payload.get("revert")}
    raise RejectedInput(f"unknown recorded action {action!r}")
