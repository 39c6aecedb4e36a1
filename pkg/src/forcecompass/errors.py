"""Exception types shared across the package."""


class ForceCompassError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ForceCompassError):
    """Invalid configuration value, rejected at construction/load time."""


class MonotonicityError(ForceCompassError):
    """A timestamp went backwards on a stream that requires ordered time."""


class TerminalStateError(ForceCompassError):
    """An episode was stepped after a terminal (success/fracture) event."""


class DecodeError(ForceCompassError):
    """A wire frame could not be decoded.

    ``offset`` is the byte offset into the input at which decoding failed.
    """

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ShapeError(ForceCompassError):
    """Policy/observation dimensions do not match."""


class TrainingDivergedError(ForceCompassError):
    """Training loss became non-finite; carries diagnostics."""

    def __init__(self, epoch: int, loss_curve):
        tail = ", ".join(f"{v:.3g}" for v in loss_curve[-5:])
        super().__init__(f"loss became non-finite at epoch {epoch} (recent losses: {tail})")
        self.epoch = epoch
        self.loss_curve = list(loss_curve)
