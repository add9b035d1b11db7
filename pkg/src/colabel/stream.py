"""Record sources: CSV ingestion, Gaussian blob generation, concept drift.

Streams are plain lists of (Record, true_label) pairs in arrival order, so
iterating twice replays the identical sequence. True labels ride along for
the simulated user and the summary metrics; the engine's model only ever
sees labels through accepted decisions.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RejectedInput
from .records import NUMERIC, FeatureSpec, Record, Schema

DRIFT_LABEL_FLIP = "label_flip"
DRIFT_MEAN_SHIFT = "mean_shift"


@dataclass(frozen=True)
class DriftSpec:
    kind: str
    at_t: int
    mapping: dict | None = None  # label_flip: old label -> new label
    deltas: dict | None = None  # mean_shift: label -> per-numeric-feature shift

    def __post_init__(self):
        if self.kind not in (DRIFT_LABEL_FLIP, DRIFT_MEAN_SHIFT):
            raise RejectedInput(f"unknown drift kind {self.kind!r}")
        if self.at_t < 0:
            raise RejectedInput("drift index must be non-negative")
        if self.kind == DRIFT_LABEL_FLIP and not self.mapping:
            raise RejectedInput("label_flip drift needs a mapping")
        if self.kind == DRIFT_MEAN_SHIFT and not self.deltas:
            raise RejectedInput("mean_shift drift needs per-label deltas")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "at_t": self.at_t, "mapping": self.mapping, "deltas": self.deltas}


def drift_spec_from_dict(d: dict, path: str = "drift") -> DriftSpec:
    try:
        return DriftSpec(
            kind=d["kind"],
            at_t=d["at_t"],
            mapping=d.get("mapping"),
            deltas=d.get("deltas"),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None
    except RejectedInput as exc:
        raise ConfigError(path, str(exc)) from None


def load_csv(path, schema: Schema) -> list[tuple[Record, str]]:
    """Read a labeled stream. Rows are indexed 0..n-1 in file order; any cell
    that does not fit the schema is reported with its row number."""
    rows: list[tuple[Record, str]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RejectedInput("empty file: missing header") from None
        expected = [f.name for f in schema.features] + [schema.label_column]
        if header != expected:
            raise RejectedInput(f"header mismatch: expected {expected}, got {header}")
        for t, row in enumerate(reader):
            if len(row) != len(expected):
                raise RejectedInput(f"row {t}: expected {len(expected)} cells, got {len(row)}")
            features = []
            for spec, cell in zip(schema.features, row):
                if spec.kind == NUMERIC:
                    try:
                        features.append(float(cell))
                    except ValueError:
                        raise RejectedInput(
                            f"row {t}: feature {spec.name!r}: bad numeric value {cell!r}"
                        ) from None
                else:
                    if cell not in spec.categories:
                        raise RejectedInput(
                            f"row {t}: feature {spec.name!r}: unknown category {cell!r}"
                        )
                    features.append(cell)
            label = row[-1]
            if label not in schema.labels:
                raise RejectedInput(f"row {t}: unknown label {label!r}")
            rows.append((Record(id=f"r{t}", features=tuple(features), t=t), label))
    return rows


def write_csv(path, schema: Schema, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f.name for f in schema.features] + [schema.label_column])
        for record, label in rows:
            cells = [
                repr(v) if spec.kind == NUMERIC else v
                for spec, v in zip(schema.features, record.features)
            ]
            writer.writerow(cells + [label])


def blob_schema(classes: int, dims: int) -> Schema:
    return Schema(
        features=tuple(FeatureSpec(f"x{j}", NUMERIC) for j in range(dims)),
        label_column="label",
        labels=tuple(f"c{i}" for i in range(classes)),
    )


def gen_blobs(
    n: int, classes: int, dims: int = 2, separation: float = 4.0, seed: int = 0
) -> tuple[Schema, list[tuple[Record, str]]]:
    """Balanced unit-variance Gaussian clusters; consecutive class means sit
    ``separation`` apart along the first axis. Deterministic per seed."""
    if n < 1:
        raise RejectedInput("n must be at least 1")
    if classes < 2:
        raise RejectedInput("need at least two classes")
    schema = blob_schema(classes, dims)
    rng = np.random.default_rng(seed)
    class_ids = np.array([i % classes for i in range(n)])
    rng.shuffle(class_ids)
    rows: list[tuple[Record, str]] = []
    for t in range(n):
        c = int(class_ids[t])
        mean = np.zeros(dims)
        mean[0] = c * separation
        values = rng.normal(loc=mean, scale=1.0)
        record = Record(id=f"r{t}", features=tuple(float(v) for v in values), t=t)
        rows.append((record, schema.labels[c]))
    return schema, rows


def apply_drift(rows, spec: DriftSpec) -> list[tuple[Record, str]]:
    """Rows before ``at_t`` pass through; from ``at_t`` on, labels are flipped
    per the mapping or numeric features shifted per the label's delta."""
    out: list[tuple[Record, str]] = []
    for record, label in rows:
        if record.t < spec.at_t:
            out.append((record, label))
            continue
        if spec.kind == DRIFT_LABEL_FLIP:
            out.append((record, spec.mapping.get(label, label)))
        else:
            delta = spec.deltas.get(label)
            if delta is None:
                out.append((record, label))
                continue
            shifted = []
            j_num = 0
            for v in record.features:
                if isinstance(v, (int, float)) and not isinstance(v, bool):
                    shifted.append(v + delta[j_num] if j_num < len(delta) else v)
                    j_num += 1
                else:
                    shifted.append(v)
            out.append((Record(record.id, tuple(shifted), record.t), label))
    return out
