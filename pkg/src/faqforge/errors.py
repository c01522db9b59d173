"""Exception and warning types shared across the package."""


class FaqForgeError(Exception):
    """Base class for all faqforge errors."""

    @property
    def category(self) -> str:
        return type(self).__name__


class EmptyCorpus(FaqForgeError):
    """The corpus source contained no entries."""


class MalformedRecord(FaqForgeError):
    """A corpus record is missing a field or fails validation."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class DuplicateOriginal(FaqForgeError):
    """A thread has more than one non-paraphrase entry."""


class MissingOriginal(FaqForgeError):
    """A thread has no non-paraphrase entry."""


class InvalidFraction(FaqForgeError):
    """A train fraction outside the open interval (0, 1)."""


class InsufficientParaphrases(FaqForgeError):
    """A thread has fewer paraphrases than the per-fold test quota."""


class EmptyDocument(FaqForgeError):
    """A question group has an empty token document."""


class BadHeader(FaqForgeError):
    """An embedding stream does not start with a valid header."""


class TruncatedStream(FaqForgeError):
    """An embedding stream ended before the header's promised payload."""


class MissingKeywordSet(FaqForgeError):
    """A training entry's group has no keyword set."""


class DimensionMismatch(FaqForgeError):
    """Vector or parameter shapes are incompatible."""


class EmptyTrainingSet(FaqForgeError):
    """No training examples were provided."""


class NonFiniteLoss(FaqForgeError):
    """Training produced a NaN or infinite loss."""


class EmptyBag(FaqForgeError):
    """A word bag is empty after out-of-vocabulary skipping."""


class EmptyIndex(FaqForgeError):
    """The translated FAQ index holds no entries."""


class NoPositives(FaqForgeError):
    """No relevant question pair exists in the training split."""


class NoNegatives(FaqForgeError):
    """No non-relevant question pair exists in the training split."""


class EmptyRelevantSet(FaqForgeError):
    """A query has no relevant entries to score against."""


class EmptyQuestion(FaqForgeError):
    """A query request carried no question text."""


class MissingArtifact(FaqForgeError):
    """A pipeline stage requires an artifact that does not exist."""


class ArtifactMismatch(FaqForgeError):
    """An artifact was produced from different inputs than supplied."""


class DegenerateCollectionWarning(UserWarning):
    """All IDF values are zero (single-group collection)."""
