"""Streaming erasure codes for variable-size messages over burst-loss channels.

The package splits into a pure core (galois, model, spread_code, channel,
offline, online, harness), a FastAPI service wrapping it, and a CLI that
talks to the service.
"""

__version__ = "0.1.0"

from .model import (
    ChannelPacket,
    CodeParams,
    MessagePacket,
    PacketHeader,
    SizeSequence,
    instance_from_trace,
    pad_sequence,
    validate_params,
)
from .spread_code import (
    ParitySchedule,
    SpreadEncoder,
    decode_burst,
    decode_lossless,
    decode_stream,
    encode_sequence,
    parity_schedule,
    rate,
)
from .channel import LossPattern, apply_channel, enumerate_patterns, random_pattern
from .offline import (
    OfflineSolution,
    PrefixPin,
    brute_force_oracle,
    check_constraints,
    solve_offline,
    solve_offline_suffix,
)
from .online import (
    RegretReport,
    SideInformation,
    SizeDistribution,
    choose_policy_online,
    regret_report,
    required_samples,
    run_online,
    sample_side_information,
)
from .harness import ExperimentConfig, ResultRow, ingest_trace, load_config, run_experiment

__all__ = [
    "__version__",
    "ChannelPacket",
    "CodeParams",
    "MessagePacket",
    "PacketHeader",
    "SizeSequence",
    "instance_from_trace",
    "pad_sequence",
    "validate_params",
    "ParitySchedule",
    "SpreadEncoder",
    "decode_burst",
    "decode_lossless",
    "decode_stream",
    "encode_sequence",
    "parity_schedule",
    "rate",
    "LossPattern",
    "apply_channel",
    "enumerate_patterns",
    "random_pattern",
    "OfflineSolution",
    "PrefixPin",
    "brute_force_oracle",
    "check_constraints",
    "solve_offline",
    "solve_offline_suffix",
    "RegretReport",
    "SideInformation",
    "SizeDistribution",
    "choose_policy_online",
    "regret_report",
    "required_samples",
    "run_online",
    "sample_side_information",
    "ExperimentConfig",
    "ResultRow",
    "ingest_trace",
    "load_config",
    "run_experiment",
]
