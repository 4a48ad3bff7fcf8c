"""Exception hierarchy shared across the stack."""


class ArmstackError(Exception):
    """Base class for all errors raised by this package."""


class SpaceMismatch(ArmstackError):
    """A wrapper's declared input spaces do not match the wrapped environment."""

    def __init__(self, channel: str, detail: str = ""):
        self.channel = channel
        msg = f"incompatible channel {channel!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NotReset(ArmstackError):
    """step() was called before the first reset()."""


class ActionOutOfBounds(ArmstackError):
    """An action channel violated its descriptor and clamping was disabled."""


class DimensionMismatch(ArmstackError):
    """A joint vector does not match the chain's joint count."""


class NoConvergence(ArmstackError):
    """The IK solver did not reach the requested tolerances."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"no convergence after {iterations} iterations, residual {residual:.3e} m")


class UnknownObject(ArmstackError):
    """A referenced scene object id does not exist."""


class CameraUnavailable(ArmstackError):
    """The wrapped environment cannot produce camera frames."""


class TwinDesync(ArmstackError):
    """Shadow environment diverged from the protected environment."""


class IoFailure(ArmstackError):
    """Underlying I/O operation failed."""


class VersionMismatch(ArmstackError):
    """Episode file magic or version not supported by this reader."""


class ChecksumMismatch(ArmstackError):
    """Episode file is truncated or corrupt."""


class NonDivisibleRate(ArmstackError):
    """Downsampling target rate does not divide the source rate."""


class SchemaMismatch(ArmstackError):
    """Observation/action schema digests disagree between two parties."""


class TransportClosed(ArmstackError):
    """The peer closed the connection or the transport failed."""


class Oversize(ArmstackError):
    """Frame payload exceeds the protocol limit."""


class UnknownType(ArmstackError):
    """Frame carries an unknown message type byte."""


class TruncatedFrame(ArmstackError):
    """Byte stream ended inside a frame."""


class RpcTimeout(ArmstackError):
    """The peer did not answer within the configured timeout."""


class ConfigError(ArmstackError):
    """A config file is malformed; message names the offending entry."""
