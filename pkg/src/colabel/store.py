"""Append-only JSONL session logs: write-ahead persistence and verification.

Each line is one entry: {"seq": n, "ts": n, "kind": ..., "payload": {...}}.
``ts`` is a logical clock equal to ``seq``; an optional "wall" field carries
wall-clock time for operators but is ignored by replay and excluded from
state hashes. Entries are flushed before any response leaves the session.
"""

import hashlib
import json
import os
import time
from dataclasses import dataclass

from .errors import CorruptLog

KIND_SESSION_CREATED = "session_created"
KIND_RECORD_OFFERED = "record_offered"
KIND_PROMPT_ISSUED = "prompt_issued"
KIND_RESPONSE_RECEIVED = "response_received"
KIND_RNG_DRAW = "rng_draw"
KIND_DECISION_FINALIZED = "decision_finalized"
KIND_MODEL_UPDATED = "model_updated"
KIND_PHASE_CHANGED = "phase_changed"
KIND_EXPLANATION_SERVED = "explanation_served"
KIND_NOTICE_ISSUED = "notice_issued"
KIND_SESSION_CLOSED = "session_closed"

ENTRY_KINDS = frozenset(
    {
        KIND_SESSION_CREATED,
        KIND_RECORD_OFFERED,
        KIND_PROMPT_ISSUED,
        KIND_RESPONSE_RECEIVED,
        KIND_RNG_DRAW,
        KIND_DECISION_FINALIZED,
        KIND_MODEL_UPDATED,
        KIND_PHASE_CHANGED,
        KIND_EXPLANATION_SERVED,
        KIND_NOTICE_ISSUED,
        KIND_SESSION_CLOSED,
    }
)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def snapshot_hash(snapshot: dict) -> str:
    return hashlib.sha256(canonical_json(snapshot).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SessionRecordEntry:
    seq: int
    ts: int
    kind: str
    payload: dict
    wall: float | None = None


class EntrySink:
    """Interface the session writes through; implementations must persist (or
    verify) each entry before returning."""

    def append(self, kind: str, payload: dict) -> SessionRecordEntry:
        raise NotImplementedError

    def close(self) -> None:
        pass


class JsonlStore(EntrySink):
    def __init__(self, path, fsync: bool = False, wall_clock: bool = False):
        self.path = path
        self._fsync = fsync
        self._wall_clock = wall_clock
        self._fh = open(path, "a", encoding="utf-8")
        self._seq = 0

    def append(self, kind: str, payload: dict) -> SessionRecordEntry:
        if kind not in ENTRY_KINDS:
            raise ValueError(f"unknown entry kind {kind!r}")
        entry = SessionRecordEntry(
            seq=self._seq,
            ts=self._seq,
            kind=kind,
            payload=payload,
            wall=time.time() if self._wall_clock else None,
        )
        doc = {"seq": entry.seq, "ts": entry.ts, "kind": kind, "payload": payload}
        if entry.wall is not None:
            doc["wall"] = entry.wall
        self._fh.write(canonical_json(doc))
        self._fh.write("\n")
        self._fh.flush()
        if self._fsync:
            os.fsync(self._fh.fileno())
        self._seq += 1
        return entry

    def close(self) -> None:
        self._fh.close()


class MemoryStore(EntrySink):
    """In-memory sink for tests and dry runs."""

    def __init__(self):
        self.entries: list[SessionRecordEntry] = []

    def append(self, kind: str, payload: dict) -> SessionRecordEntry:
        entry = SessionRecordEntry(len(self.entries), len(self.entries), kind, payload)
        self.entries.append(entry)
        return entry


class VerifyingStore(EntrySink):
    """Replays against an existing log: every entry the session emits must
    match the file's next line, modulo wall-clock fields."""

    def __init__(self, entries: list[SessionRecordEntry]):
        self.entries = entries
        self.cursor = 0

    def append(self, kind: str, payload: dict) -> SessionRecordEntry:
        if self.cursor >= len(self.entries):
            raise CorruptLog(len(self.entries), "log ended before the session did")
        expected = self.entries[self.cursor]
        if expected.kind != kind:
            raise CorruptLog(
                expected.seq, f"expected kind {expected.kind!r}, session produced {kind!r}"
            )
        if canonical_json(expected.payload) != canonical_json(payload):
            raise CorruptLog(expected.seq, f"payload mismatch for {kind!r}")
        self.cursor += 1
        return expected


def read_log(path) -> list[SessionRecordEntry]:
    """Parse and validate a session log: dense seq from 0, known kinds."""
    entries: list[SessionRecordEntry] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptLog(i, f"unparseable line: {exc}") from None
            for key in ("seq", "ts", "kind", "payload"):
                if key not in doc:
                    raise CorruptLog(i, f"missing field {key!r}")
            if doc["seq"] != i:
                raise CorruptLog(i, f"sequence gap: expected seq {i}, found {doc['seq']}")
            if doc["kind"] not in ENTRY_KINDS:
                raise CorruptLog(i, f"unknown kind {doc['kind']!r}")
            entries.append(
                SessionRecordEntry(
                    seq=doc["seq"],
                    ts=doc["ts"],
                    kind=doc["kind"],
                    payload=doc["payload"],
                    wall=doc.get("wall"),
                )
            )
    return entries
