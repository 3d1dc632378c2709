"""Exception hierarchy for rotorlab."""


class RotorlabError(Exception):
    pass


class ContractViolation(RotorlabError, ValueError):
    """An argument broke an operation's precondition."""


class CoordinateOverflow(RotorlabError, OverflowError):
    """A coordinate left the signed 64-bit range."""


class CapExhausted(RotorlabError, RuntimeError):
    """A run hit its step cap before reaching its stop condition."""

    def __init__(self, cap, message=None):
        self.cap = cap
        super().__init__(message or f"step cap of {cap} exhausted before the stop condition")


class InstrumentationDisabled(RotorlabError, RuntimeError):
    pass


class CheckpointError(RotorlabError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointCorruptError(CheckpointError):
    pass


class CheckpointDimensionError(CheckpointError):
    pass


class CheckpointMismatchError(CheckpointError):
    """The checkpoint belongs to a different rule or rotor order."""


class SweepInterrupted(RotorlabError):
    """Raised when a sweep stops at a step budget after saving a checkpoint."""

    def __init__(self, checkpoint_path, step_count):
        self.checkpoint_path = checkpoint_path
        self.step_count = step_count
        super().__init__(f"sweep halted at step {step_count}; checkpoint at {checkpoint_path}")
