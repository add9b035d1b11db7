"""Batch experiments: run seeded sessions against the simulated user.

One experiment config describes the engine, the simulated user, the data
source, optional drift, and a list of seeds. Each seed runs an independent
session (stream seed, user seed and engine draw seed all derive from it),
writes one JSONL log, and contributes one row to the summary. Identical
configs produce byte-identical logs.
"""

import json
import statistics
from dataclasses import dataclass
from pathlib import Path

from .engine import (
    PROMPT_CALLBACK,
    PROMPT_CHALLENGE,
    PROMPT_CONSENT,
    PROMPT_NEED_LABEL,
    PROMPT_NOTICE,
    engine_config_from_dict,
)
from .errors import ConfigError
from .events import (
    CALLBACK_LOW_BELIEF,
    CALLBACK_RANDOM_CHECK,
    DECIDED_MACHINE,
    PHASE_HIC,
    PHASE_MIC,
)
from .oracle import simulated_user_from_dict
from .records import Schema
from .session import (
    EVENT_CHALLENGE_RESPONSE,
    EVENT_CONSENT_RESPONSE,
    EVENT_NOTICE_RESPONSE,
    EVENT_OFFER_RECORD,
    EVENT_USER_LABEL,
    Session,
)
from .store import JsonlStore
from .stream import apply_drift, drift_spec_from_dict, gen_blobs, load_csv


@dataclass(frozen=True)
class ExperimentConfig:
    engine: dict
    oracle: dict
    data: dict
    seeds: tuple[int, ...]
    drift: dict | None = None
    seed_rows: int = 0  # leading rows used to pre-train the model

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("", "experiment config must be an object")
        for key in ("engine", "oracle", "data"):
            if key not in doc or not isinstance(doc[key], dict):
                raise ConfigError(key, "missing or not an object")
        seeds = doc.get("seeds")
        if not isinstance(seeds, list) or not seeds:
            raise ConfigError("seeds", "need at least one seed")
        if "generator" not in doc["data"] and "csv" not in doc["data"]:
            raise ConfigError("data", "expected a generator or csv block")
        if "csv" in doc["data"]:
            if "schema" not in doc["data"]:
                raise ConfigError("data.schema", "a csv block needs an explicit schema")
            if not Path(doc["data"]["csv"]).is_file():
                raise ConfigError("data.csv", f"file not found: {doc['data']['csv']}")
        return cls(
            engine=doc["engine"],
            oracle=doc["oracle"],
            data=doc["data"],
            seeds=tuple(int(s) for s in seeds),
            drift=doc.get("drift"),
            seed_rows=int(doc.get("seed_rows", 0)),
        )


def _build_stream(data: dict, drift: dict | None, seed: int):
    if "generator" in data:
        gen = data["generator"]
        schema, rows = gen_blobs(
            n=gen.get("n", 1000),
            classes=gen.get("classes", 2),
            dims=gen.get("dims", 2),
            separation=gen.get("separation", 4.0),
            seed=seed,
        )
    else:
        try:
            schema = Schema.from_dict(data["schema"])
        except (KeyError, TypeError) as exc:
            raise ConfigError("data.schema", str(exc)) from None
        rows = load_csv(data["csv"], schema)
    if drift:
        rows = apply_drift(rows, drift_spec_from_dict(drift))
    return schema, rows


def run_seed(exp: ExperimentConfig, seed: int, log_path) -> dict:
    """One full session under the simulated user; returns its summary row."""
    schema, rows = _build_stream(exp.data, exp.drift, seed)
    engine_doc = dict(exp.engine)
    engine_doc["rng_seed"] = seed
    config = engine_config_from_dict(engine_doc)
    user = simulated_user_from_dict({**exp.oracle, "seed": seed}, schema.labels)

    n_seed = exp.seed_rows
    seed_records = [r for r, _ in rows[:n_seed]]
    seed_labels = [lab for _, lab in rows[:n_seed]]
    stream = rows[n_seed:]

    sink = JsonlStore(log_path)
    session = Session(
        f"seed{seed}",
        config,
        schema,
        seed_records,
        seed_labels,
        sink=sink,
        data_spec=None,
    )
    truth_by_t = {}
    oracle_correct = 0
    oracle_asked = 0
    for record, truth in stream:
        truth_by_t[record.t] = truth
        session.handle_event({"type": EVENT_OFFER_RECORD, "record": record.to_dict()})
        while session.engine.pending is not None:
            prompt = session.engine.pending
            if prompt.kind == PROMPT_NEED_LABEL or prompt.kind == PROMPT_CALLBACK:
                own = user.decide(record.t, truth)
                oracle_asked += 1
                if own == truth:
                    oracle_correct += 1
                session.handle_event({"type": EVENT_USER_LABEL, "label": own})
            elif prompt.kind == PROMPT_CHALLENGE:
                accept = user.respond_to_challenge(
                    record.t, prompt.model_label, prompt.user_label, truth
                )
                session.handle_event(
                    {
                        "type": EVENT_CHALLENGE_RESPONSE,
                        "response": "accept_suggestion" if accept else "refuse",
                    }
                )
            elif prompt.kind == PROMPT_CONSENT:
                session.handle_event(
                    {
                        "type": EVENT_CONSENT_RESPONSE,
                        "grant": user.respond_consent(record.t),
                    }
                )
            elif prompt.kind == PROMPT_NOTICE:
                session.handle_event(
                    {
                        "type": EVENT_NOTICE_RESPONSE,
                        "revert": user.respond_notice(record.t),
                    }
                )
    summary = summarize_run(session, truth_by_t, seed)
    summary["oracle_accuracy"] = oracle_correct / oracle_asked if oracle_asked else None
    summary["oracle_decisions"] = oracle_asked
    summary["n_seed_rows"] = n_seed
    summary["state_hash"] = session.close(summary={"seed": seed})
    summary["log_file"] = str(log_path)
    return summary


def summarize_run(session: Session, truth_by_t: dict, seed: int) -> dict:
    engine = session.engine
    notices = []
    correct = 0
    hic_records = 0
    mic_records = 0
    mic_records_by_mode = {"auto": 0, "low_belief": 0, "random_check": 0}
    challenges = 0
    challenges_accepted = 0
    for event in engine.log:
        if truth_by_t.get(event.t) == event.final_label:
            correct += 1
        if event.phase == PHASE_HIC:
            hic_records += 1
            if event.challenged:
                challenges += 1
                if event.challenge_accepted:
                    challenges_accepted += 1
        else:
            mic_records += 1
            if event.decided_by == DECIDED_MACHINE:
                mic_records_by_mode["auto"] += 1
            elif event.callback_kind == CALLBACK_LOW_BELIEF:
                mic_records_by_mode["low_belief"] += 1
            elif event.callback_kind == CALLBACK_RANDOM_CHECK:
                mic_records_by_mode["random_check"] += 1
    records = len(engine.log)
    callbacks = mic_records_by_mode["low_belief"] + mic_records_by_mode["random_check"]
    phase_changes = [{"t": t, "to": tag} for t, tag in engine.phase_changes]
    promoted_at = next((c["t"] for c in phase_changes if c["to"] == PHASE_MIC), None)
    return {
        "seed": seed,
        "records": records,
        "final_accuracy": correct / records if records else None,
        "hic_records": hic_records,
        "mic_records": mic_records,
        "auto_accepts": mic_records_by_mode["auto"],
        "callbacks_low_belief": mic_records_by_mode["low_belief"],
        "callbacks_random_check": mic_records_by_mode["random_check"],
        "mic_query_rate": callbacks / mic_records if mic_records else None,
        "mic_low_belief_rate": (
            mic_records_by_mode["low_belief"] / mic_records if mic_records else None
        ),
        "challenges": challenges,
        "challenges_accepted": challenges_accepted,
        "challenge_acceptance_rate": challenges_accepted / challenges if challenges else None,
        "phase_changes": phase_changes,
        "promoted_at": promoted_at,
        "final_phase": engine.phase.tag,
        "final_k": engine.phase.k,
        "final_p": engine.phase.p,
        "n_seen": engine.model.n_seen,
    }


_MEAN_FIELDS = (
    "final_accuracy",
    "oracle_accuracy",
    "mic_query_rate",
    "mic_low_belief_rate",
    "challenge_acceptance_rate",
    "hic_records",
    "mic_records",
    "auto_accepts",
    "callbacks_low_belief",
    "callbacks_random_check",
    "challenges",
)


def run_experiment(exp: ExperimentConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = []
    for seed in exp.seeds:
        log_path = out / f"run_seed{seed}.jsonl"
        log_path.unlink(missing_ok=True)  # logs are append-only; start fresh
        runs.append(run_seed(exp, seed, log_path))
    means = {}
    for name in _MEAN_FIELDS:
        values = [r[name] for r in runs if r.get(name) is not None]
        means[name] = statistics.fmean(values) if values else None
    summary = {
        "config": {
            "engine": exp.engine,
            "oracle": exp.oracle,
            "data": exp.data,
            "drift": exp.drift,
            "seeds": list(exp.seeds),
            "seed_rows": exp.seed_rows,
        },
        "runs": runs,
        "mean": means,
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
