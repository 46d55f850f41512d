"""Exception hierarchy shared by every corrdyn module."""

from __future__ import annotations


class CorrdynError(Exception):
    """Base class for all library errors."""


class AmbiguousContinuation(CorrdynError):
    """Nearest-root tracking could not tell two branches apart.

    Raised when a continuation step crosses a branch cut or comes too close
    to the critical point ``z = 0``; the caller should subdivide the step.
    """


class SingularDerivative(CorrdynError):
    """Branch derivative requested at ``z = 0`` or ``w = c``."""


class NoConvergence(CorrdynError):
    """A Newton or fixed-point iteration did not converge."""


class DepthOverflow(CorrdynError):
    """A tree or Hutchinson expansion would exceed its point budget."""


class ConstructionFailed(CorrdynError):
    """A branch system could not be built or failed re-verification."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class TooCloseToCenter(ConstructionFailed):
    """The parameter is numerically indistinguishable from the centre."""


class NotContracting(CorrdynError):
    """An induced iterated function system is not a contraction."""


class OverlapDetected(CorrdynError):
    """First-level images of an induced CIFS intersect."""


class DomainEscape(CorrdynError):
    """An orbit left the disks of a branch system."""


class SeedOnPostCritical(CorrdynError):
    """An inverse-iteration seed lies on the truncated post-critical set."""


class EmptyCloud(CorrdynError):
    """Operation needs a nonempty point cloud."""


class EmptySeed(CorrdynError):
    """No cloud point lies inside the requested disk."""


class NotCovered(CorrdynError):
    """Forward images did not cover the cloud within the step limit."""


class ClassChanged(CorrdynError):
    """A continued cycle stopped being repelling.

    ``trace`` holds the records computed before the change.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class NotCentre(CorrdynError):
    """The parameter failed the (simple) centre test."""

    def __init__(self, reason: str, word=None):
        super().__init__(reason)
        self.reason = reason
        self.word = word


class Undecided(CorrdynError):
    """Some critical branch neither returned to 0 nor escaped within limits."""

    def __init__(self, reason: str, word=None):
        super().__init__(reason)
        self.reason = reason
        self.word = word
