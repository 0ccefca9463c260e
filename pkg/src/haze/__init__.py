"""Privacy-preserving traffic statistics from threshold-encrypted votes."""

from .errors import (
    ChainFailure,
    ConfigError,
    ContextError,
    DkgFailure,
    EncodingError,
    HazeError,
    InsufficientSharesError,
    ProtocolError,
)
from .group import Ciphertext, GroupParams, PublicKey, encrypt, preset_params
from .protocol import FaultSchedule, ProtocolConfig, UserObservation, run_epoch
from .tally import NoiseSet, StatReport, build_noise_set, dp_mechanism_oracle

__version__ = "0.1.0"
