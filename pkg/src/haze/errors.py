"""Exception hierarchy shared by every module."""


class HazeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HazeError, ValueError):
    """Invalid parameters, presets, thresholds or party ids."""


class EncodingError(HazeError, ValueError):
    """Plaintext outside the signed exponent range."""


class ContextError(HazeError, ValueError):
    """Operands belong to different groups or keys."""


class InsufficientSharesError(HazeError):
    """Fewer than the threshold number of valid participants."""

    def __init__(self, needed, available, detail=""):
        self.needed = needed
        self.available = available
        missing = needed - available
        msg = f"insufficient shares: need {needed}, have {available} ({missing} missing)"
        if detail:
            msg += f"; {detail}"
        super().__init__(msg)


class DkgFailure(HazeError):
    """Too few qualified dealers after exclusion."""

    def __init__(self, qualified, excluded, threshold):
        self.qualified = tuple(qualified)
        self.excluded = tuple(excluded)
        self.threshold = threshold
        super().__init__(
            f"dkg failure: {len(self.qualified)} qualified dealers < threshold {threshold}; "
            f"excluded dealers {list(self.excluded)}"
        )


class ChainFailure(HazeError):
    """No live authority was able to produce a verified mix hop."""


class ProtocolError(HazeError):
    """State-machine or lineage violation."""
