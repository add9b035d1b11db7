"""Hybrid human/machine labeling sessions.

A session alternates between a human-led phase, where an incremental model
challenges labels it is skeptical of, and a machine-led phase, where the
model auto-labels and calls the human back on low belief or random checks.
Fading per-label track records drive both the challenges and the phase
transitions; every session is event-sourced to JSONL and replayable
bit-for-bit.
"""

from .engine import Engine, EngineConfig, Prompt, start_session
from .errors import (
    CapabilityError,
    ColabelError,
    ConfigError,
    CorruptLog,
    ProtocolError,
    RejectedInput,
)
from .events import DecisionEvent, DecisionLog
from .metrics import FadingConfig, average_fea, belief, fading_empirical_accuracy, fading_skepticality
from .records import FeatureSpec, Record, Schema

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "ColabelError",
    "ConfigError",
    "CorruptLog",
    "DecisionEvent",
    "DecisionLog",
    "Engine",
    "EngineConfig",
    "FadingConfig",
    "FeatureSpec",
    "Prompt",
    "ProtocolError",
    "Record",
    "RejectedInput",
    "Schema",
    "average_fea",
    "belief",
    "fading_empirical_accuracy",
    "fading_skepticality",
    "start_session",
    "__version__",
]
