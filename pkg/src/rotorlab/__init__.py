"""Deterministic rotor walks on Z^d."""

__version__ = "0.1.0"

from .config import ConfigRule, initial_label, initial_labels, parse_rule
from .engine import (
    ExitRecord,
    RotorField,
    RotorOrder,
    WalkState,
    checkpoint_load,
    checkpoint_save,
    parse_order,
    run_until_exit,
    run_until_norm_exceeds,
    snapshot,
    snapshot_digest,
    step,
)
from .errors import (
    CapExhausted,
    CheckpointCorruptError,
    CheckpointDimensionError,
    CheckpointError,
    CheckpointVersionError,
    ContractViolation,
    CoordinateOverflow,
    InstrumentationDisabled,
)
from .lattice import Box, dense_index, infinity_norm, translate, unit_vector
