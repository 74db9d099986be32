"""Weighted-CAZAC joint timing and CFO synchronization for RGI-CO-OFDM.

Library layers: sequence and preamble construction (`sequences`), OFDM
frame assembly (`frame`), the linear impairment chain (`channel`), the
synchronizers (`sync`), the receiver chain (`rx`), and the Monte-Carlo
experiment harness (`experiments`, `config`, `cli`).
"""

from .channel import ChannelConfig, run_channel
from .frame import FrameConfig, OfdmFrame, assemble_frame, qam_demap, qam_map
from .rx import BerReport, ChannelEstimate, cd_equalize_overlap_add, receive_frame
from .sequences import (
    CazacParams,
    PnSequence,
    TrainingSymbol,
    build_training_symbol,
    cazac_sequence,
    periodic_autocorrelation,
    pn_sequence,
)
from .sync import SyncResult, TimingTrace, synchronize, timing_metric

__version__ = "0.1.0"

__all__ = [
    "CazacParams",
    "PnSequence",
    "TrainingSymbol",
    "cazac_sequence",
    "periodic_autocorrelation",
    "pn_sequence",
    "build_training_symbol",
    "FrameConfig",
    "OfdmFrame",
    "assemble_frame",
    "qam_map",
    "qam_demap",
    "ChannelConfig",
    "run_channel",
    "TimingTrace",
    "SyncResult",
    "timing_metric",
    "synchronize",
    "ChannelEstimate",
    "BerReport",
    "cd_equalize_overlap_add",
    "receive_frame",
    "__version__",
]
