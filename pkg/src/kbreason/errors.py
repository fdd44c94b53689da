"""Exception hierarchy shared across the package."""


class KBReasonError(Exception):
    """Base class for all package errors."""


class UnparsableText(KBReasonError):
    """No verbalization template matched the input text."""


class UnknownRelation(KBReasonError):
    """The schema has no template for the requested relation."""


class ChainBroken(KBReasonError):
    """A step sequence violates the subject/object chain constraint."""


class DimensionMismatch(KBReasonError):
    """Embedding vectors of different dimensions were compared."""


class ZeroVector(KBReasonError):
    """Cosine similarity requested for a zero-norm vector."""


class EmptyText(KBReasonError):
    """An embedding was requested for empty or whitespace-only text."""


class EmptySlice(KBReasonError):
    """Projection was attempted against an empty fact slice."""


class CapacityExceeded(KBReasonError):
    """The exact-string translator ran out of one-hot slots."""


class BackendFailure(KBReasonError):
    """A planner or translator backend failed irrecoverably."""


class TransportError(BackendFailure):
    """A remote backend call failed after all retries."""


class ProtocolError(BackendFailure):
    """A remote backend returned a malformed response."""


class ReplayMiss(BackendFailure):
    """Replay mode had no recorded response for a request."""


class InfeasibleSize(KBReasonError):
    """A generator was asked for fewer entities than it can build."""


class CompositionUndefined(KBReasonError):
    """A relation pair has no entry in the composition table."""


class VocabTooSmall(KBReasonError):
    """Not enough distinct triples exist to satisfy a noise request."""


class UnprovableTestQuery(KBReasonError):
    """A held-out query cannot be proven from its training facts."""
