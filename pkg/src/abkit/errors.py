"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class AbkitError(Exception):
    """Base class for all domain errors raised by this package."""


class MalformedRecord(AbkitError):
    """A record is structurally broken: missing field, wrong type, unknown field in strict mode."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InvariantViolation(AbkitError):
    """A structurally valid record violates a semantic invariant. Carries the offending field path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class OutsideImage(AbkitError):
    """A page-frame point lies outside the image rectangle beyond the 1-pixel tolerance."""


class InsufficientPool(AbkitError):
    """Candidate pool too small to assemble a work unit."""


class UnknownAssignment(AbkitError):
    """No assignment registered under the given id."""


class ClosedAssignment(AbkitError):
    """Events arrived for an assignment or page that no longer accepts them."""


class NonMonotoneTimestamp(AbkitError):
    """A new event's timestamp precedes the page's timestamp high-water mark."""


class PageAlreadySubmitted(AbkitError):
    """Submit arrived twice for the same page."""


class MissingGroundTruth(AbkitError):
    """Ground truth does not cover every image under evaluation."""


class EmptyInput(AbkitError):
    """An aggregate statistic was requested over zero qualifying inputs."""


class DegenerateBox(AbkitError):
    """A ground-truth box has zero area and cannot define a box frame."""


class ShapeMismatch(AbkitError):
    """Tensor arguments have inconsistent shapes."""


class NonPositiveBeta(AbkitError):
    """smooth-l1 transition width must be > 0."""


class NonPositiveBandwidth(AbkitError):
    """Attentive-pooling bandwidth must be > 0."""


class DivergedTraining(AbkitError):
    """Training loss became non-finite."""


class EmptyTestSet(AbkitError):
    """Robustness evaluation received an empty test set."""


class NoCooccurrence(AbkitError):
    """A sample offered to the co-occurrence reliance metrics has fewer than two classes."""
