"""Feature schemas and the records that flow through a labeling session.

A schema declares an ordered list of features (numeric or categorical with a
closed category set), the label column name and the ordered label set. The
label order is significant: it is the deterministic tie-break for argmax over
prediction probabilities.
"""

import math
from dataclasses import dataclass

from .errors import RejectedInput

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise RejectedInput(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL and not self.categories:
            raise RejectedInput(f"feature {self.name!r}: categorical feature needs categories")
        if self.kind == NUMERIC and self.categories:
            raise RejectedInput(f"feature {self.name!r}: numeric feature cannot have categories")


@dataclass(frozen=True)
class Schema:
    features: tuple[FeatureSpec, ...]
    label_column: str
    labels: tuple[str, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise RejectedInput("feature names must be unique")
        if self.label_column in names:
            raise RejectedInput("label column collides with a feature name")
        if len(self.labels) < 2:
            raise RejectedInput("need at least two labels")
        if len(set(self.labels)) != len(self.labels):
            raise RejectedInput("labels must be unique")

    def validate_label(self, label: str) -> None:
        if label not in self.labels:
            raise RejectedInput(f"unknown label {label!r}")

    def validate_features(self, features) -> None:
        if len(features) != len(self.features):
            raise RejectedInput(
                f"expected {len(self.features)} features, got {len(features)}"
            )
        for spec, value in zip(self.features, features):
            if spec.kind == NUMERIC:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise RejectedInput(f"feature {spec.name!r}: expected a number, got {value!r}")
                if not math.isfinite(value):
                    raise RejectedInput(f"feature {spec.name!r}: non-finite value")
            else:
                if value not in spec.categories:
                    raise RejectedInput(f"feature {spec.name!r}: unknown category {value!r}")

    def validate_record(self, record: "Record") -> None:
        self.validate_features(record.features)

    def to_dict(self) -> dict:
        return {
            "features": [
                {"name": f.name, "kind": f.kind, "categories": list(f.categories)}
                for f in self.features
            ],
            "label_column": self.label_column,
            "labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        feats = tuple(
            FeatureSpec(f["name"], f["kind"], tuple(f.get("categories", ())))
            for f in d["features"]
        )
        return cls(feats, d["label_column"], tuple(d["labels"]))


@dataclass(frozen=True)
class Record:
    """One unlabeled instance; ``t`` is the 0-based arrival index."""

    id: str
    features: tuple
    t: int

    def to_dict(self) -> dict:
        return {"id": self.id, "features": list(self.features), "t": self.t}

    @classmethod
    def from_dict(cls, d: dict) -> "Record":
        return cls(d["id"], tuple(d["features"]), d["t"])
