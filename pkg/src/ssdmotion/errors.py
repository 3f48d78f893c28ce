"""Exception types raised across the package."""


class SSDError(Exception):
    """Base class for all package errors."""


class DimensionError(SSDError, ValueError):
    def __init__(self, what, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected dimension {expected}, got {actual}")


class LayoutError(SSDError, ValueError):
    """A sequence layout violates its structural invariants."""


class ConfigError(SSDError, ValueError):
    pass


class CheckpointError(SSDError, ValueError):
    """Checkpoint file is malformed or of an unsupported version."""


class TrainingDivergence(SSDError, FloatingPointError):
    def __init__(self, step, lr, loss):
        self.step = step
        self.lr = lr
        self.loss = loss
        super().__init__(f"training loss became {loss} at step {step} (lr={lr})")


class OptimizationError(SSDError, RuntimeError):
    """An optimization iteration failed; ``iteration`` says which one."""

    def __init__(self, iteration, message):
        self.iteration = iteration
        super().__init__(f"iteration {iteration}: {message}")
