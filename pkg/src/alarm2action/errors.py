"""Exception types shared across the package.

Every error that callers are expected to catch is defined here so the
pipeline, trainer and service can raise and translate them consistently.
"""


class Alarm2ActionError(Exception):
    """Base class for all package-specific errors."""


# --- log parsing / cleaning ---------------------------------------------

class MalformedRow(Alarm2ActionError):
    def __init__(self, line_no: int, reason: str = "unparseable row"):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class EmptyFile(Alarm2ActionError):
    pass


class UnsortedInput(Alarm2ActionError):
    pass


# --- sequencing / vocabulary --------------------------------------------

class EmptyDataset(Alarm2ActionError):
    pass


class EmptyCorpus(Alarm2ActionError):
    pass


class UnknownLabel(Alarm2ActionError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"label not in vocabulary: {label!r}")


class DimensionMismatch(Alarm2ActionError):
    def __init__(self, line_no: int, expected: int, got: int):
        self.line_no = line_no
        self.expected = expected
        self.got = got
        super().__init__(
            f"line {line_no}: expected {expected} values, got {got}"
        )


# --- markov ---------------------------------------------------------------

class EmptyInput(Alarm2ActionError):
    pass


class UnknownState(Alarm2ActionError):
    def __init__(self, state: str):
        self.state = state
        super().__init__(f"state not in model: {state!r}")


# --- network / optimizer ---------------------------------------------------

class ShapeMismatch(Alarm2ActionError):
    pass


class IndexOutOfVocab(Alarm2ActionError):
    pass


class LabelOutOfRange(Alarm2ActionError):
    pass


class CacheMismatch(Alarm2ActionError):
    pass


class NonFiniteGradient(Alarm2ActionError):
    pass


# --- training / checkpoints -------------------------------------------------

class EmptyTrainingSet(Alarm2ActionError):
    pass


class DivergenceDetected(Alarm2ActionError):
    """Non-finite loss during training; carries the last usable state."""

    def __init__(self, epoch: int, last_good=None, history=None):
        self.epoch = epoch
        self.last_good = last_good
        self.history = history or []
        super().__init__(f"non-finite loss in epoch {epoch}")


class CorruptCheckpoint(Alarm2ActionError):
    pass


class VocabularyHashMismatch(Alarm2ActionError):
    pass


# --- synthetic corpora -------------------------------------------------------

class InvalidSpec(Alarm2ActionError):
    pass


# --- service ------------------------------------------------------------------

class UnknownRecommendation(Alarm2ActionError):
    pass


class AlreadyResolved(Alarm2ActionError):
    pass


class MissingCorrection(Alarm2ActionError):
    pass


class RetrainInProgress(Alarm2ActionError):
    pass


class InsufficientData(Alarm2ActionError):
    pass


class NoModelLoaded(Alarm2ActionError):
    pass


class NoAlarmsInWindow(Alarm2ActionError):
    pass
