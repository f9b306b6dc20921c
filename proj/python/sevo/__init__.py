"""Python bindings for the sevo C++ core."""

from ._sevo import (
    CalibrationError,
    Error,
    FormatError,
    GateConfig,
    GatePhase,
    InvalidArgument,
    IoError,
    Policy,
    ProtocolFlags,
    SafetyGate,
    ShapeError,
    blend_channel,
    collect,
    compose_overlay,
    downsample,
    evaluate,
    init_policy,
    load_policy,
    read_dataset,
    read_episode,
    train,
)

__all__ = [
    "CalibrationError",
    "Error",
    "FormatError",
    "GateConfig",
    "GatePhase",
    "InvalidArgument",
    "IoError",
    "Policy",
    "ProtocolFlags",
    "SafetyGate",
    "ShapeError",
    "blend_channel",
    "collect",
    "compose_overlay",
    "downsample",
    "evaluate",
    "init_policy",
    "load_policy",
    "read_dataset",
    "read_episode",
    "train",
]
