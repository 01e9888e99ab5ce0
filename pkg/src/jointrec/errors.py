"""Exception types shared across the package.

Every error raised by the library derives from JointrecError so the CLI can
map failures to exit codes in one place.
"""


class JointrecError(Exception):
    """Base class for all jointrec errors."""


# --- corpus ---------------------------------------------------------------

class MissingFile(JointrecError):
    """A manifest referenced a feature file that does not exist."""


class BadLabel(JointrecError):
    """A label name is not part of the declared vocabulary."""


class DuplicateId(JointrecError):
    """Two samples in one dataset share an id."""


class BadMagic(JointrecError):
    """A feature file does not start with the FEA1 magic bytes."""


class TruncatedFile(JointrecError):
    """A feature file payload is shorter than its header declares."""


class ZeroDims(JointrecError):
    """A feature matrix header declares zero rows or zero columns."""


class BadSpec(JointrecError):
    """A synthetic dataset spec is unusable (no classes, no dims, ...)."""


class EmptySplit(JointrecError):
    """An operation needed samples from a split that has none."""


# --- model ----------------------------------------------------------------

class DimMismatch(JointrecError):
    """An input feature matrix has the wrong number of columns."""


# --- metrics --------------------------------------------------------------

class LengthMismatch(JointrecError):
    """Gold and predicted label lists differ in length."""


class LabelOutOfRange(JointrecError):
    """A label index falls outside [0, num_classes)."""


class EmptyMatrix(JointrecError):
    """A confusion matrix with zero tallied samples cannot be scored."""


# --- training -------------------------------------------------------------

class DivergedLoss(JointrecError):
    """Training produced a non-finite loss; carries the offending batch."""

    def __init__(self, epoch: int, batch_index: int):
        self.epoch = epoch
        self.batch_index = batch_index
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch_index}")


# --- ensemble -------------------------------------------------------------

class IdSetMismatch(JointrecError):
    """Prediction tables in one vote do not cover the same sample ids."""


# --- config ---------------------------------------------------------------

class ConfigError(JointrecError):
    """A run config violates the schema (unknown key, wrong type, ...)."""
