"""Exception types shared across the workbench."""


class WorkbenchError(Exception):
    """Base class for all errors raised by cocyclebench."""


class GroupMismatchError(WorkbenchError, ValueError):
    """Operands belong to different groups."""


class CapExceededError(WorkbenchError):
    """An element or radius lies beyond the word-metric radius cap."""


class BudgetExceededError(WorkbenchError):
    """A ball would exceed the configured element budget."""


class BasisMismatchError(WorkbenchError, ValueError):
    """Vectors (or a vector and an operator) live over incompatible bases."""


class IncompatibleCocycleError(WorkbenchError, ValueError):
    """Generator data does not define a 1-cocycle."""


class PropernessError(WorkbenchError, ValueError):
    """A cocycle vanishes at a non-identity element where properness is required."""


class UnboundedFieldError(WorkbenchError, ValueError):
    """A field that must be bounded has no declared bound, or breaks it."""


class NegativityError(WorkbenchError, ValueError):
    """A field required to be nonnegative takes a negative value."""


class HarmonicityError(WorkbenchError, ValueError):
    """A field required to be harmonic has defect above tolerance."""


class WitnessNotFoundError(WorkbenchError):
    """No witness element satisfies the requested lower bound within the cap."""


class GrammarError(WorkbenchError, ValueError):
    """A selection string could not be parsed.

    ``position`` is the character offset where parsing failed, when known.
    """

    def __init__(self, message, text=None, position=None):
        if text is not None and position is not None:
            message = f"{message} (at position {position} in {text!r})"
        super().__init__(message)
        self.text = text
        self.position = position
