"""Exception hierarchy shared by all pipeline stages."""

from __future__ import annotations


class FunnelError(Exception):
    """Base class for every error raised by this package."""


class MalformedInput(FunnelError):
    """A source file could not be decoded or parsed."""


class EmptyCorpus(FunnelError):
    """An operation that needs at least one document got none."""


class ResolverUnavailable(FunnelError):
    """The license registry could not be reached after bounded retries."""


class BackendError(FunnelError):
    """An extraction backend failed for a sentence or document."""


class BackendUnavailable(FunnelError):
    """The extraction service could not be reached after bounded retries."""


class ScorerUnavailable(FunnelError):
    """The entity scorer could not be reached after bounded retries."""


class ProtocolError(FunnelError):
    """A remote service replied outside its wire contract."""


class InsufficientRecords(FunnelError):
    """Fewer records available than a split spec requires."""


class TooFewRecords(FunnelError):
    """An operation needs at least two records."""


class TooFewSamples(FunnelError):
    """A statistic needs more samples than were supplied."""


class DegenerateSamples(FunnelError):
    """Both samples have zero variance; the test statistic is undefined."""


class DimensionMismatch(FunnelError):
    """Embedding sets with different vector dimensions were compared."""


class EmptySide(FunnelError):
    """A score was requested with an empty candidate or reference."""


class RowMisalignment(FunnelError):
    """Prediction and gold files disagree on row count or key columns."""


class ConfigError(FunnelError):
    """A pipeline config file is missing keys or fails validation."""
