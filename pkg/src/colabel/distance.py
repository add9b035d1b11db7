"""Record distance over min-max normalized numerics plus categorical mismatch.

Numeric coordinates are scaled by the value range observed in a reference set
of rows (usually the session log), so no feature dominates by unit choice; a
categorical mismatch contributes 1. With fixed ranges this is a proper metric
(the l2 combination of per-coordinate metrics).
"""

import math

from .records import NUMERIC, Schema


def numeric_ranges(rows, schema: Schema) -> list[tuple[float, float] | None]:
    """Per-feature (min, span) over ``rows``; None for categorical features."""
    ranges: list[tuple[float, float] | None] = []
    for j, spec in enumerate(schema.features):
        if spec.kind != NUMERIC:
            ranges.append(None)
            continue
        lo = math.inf
        hi = -math.inf
        for row in rows:
            v = row[j]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        if lo > hi:  # no rows
            ranges.append((0.0, 0.0))
        else:
            ranges.append((lo, hi - lo))
    return ranges


def record_distance(a, b, schema: Schema, ranges) -> float:
    total = 0.0
    for j, spec in enumerate(schema.features):
        if spec.kind == NUMERIC:
            span = ranges[j][1]
            if span > 0.0:
                d = (a[j] - b[j]) / span
                total += d * d
        elif a[j] != b[j]:
            total += 1.0
    return math.sqrt(total)
