"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 2, NumericError (and its
subclasses) -> 3. Usage problems are handled by argparse and exit 1.
"""


class DataError(Exception):
    """Dataset file missing, malformed, or inconsistent."""


class CheckpointError(DataError):
    """Checkpoint document missing, malformed, or incompatible."""


class NumericError(RuntimeError):
    """Non-finite value where a finite one is required."""


class DivergenceError(NumericError):
    """Training loss or gradient became non-finite."""

    def __init__(self, message: str, epoch: int, batch: int | None = None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
