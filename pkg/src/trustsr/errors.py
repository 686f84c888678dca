"""Exception hierarchy shared by every trustsr module.

Each error class carries an ``exit_code`` so the CLI can map failures onto
its documented exit-code partition:

* 2 -- configuration errors (bad flags, invalid specs, conflicting paths)
* 3 -- data errors (unreadable files, shape mismatches, missing columns)
* 4 -- provider errors (embedding or VLM endpoints misbehaving)
* 5 -- an otherwise-valid run whose confidence filter removed everything
"""

from __future__ import annotations


class TrustSrError(Exception):
    """Base class for all trustsr errors."""

    exit_code = 3


class ConfigError(TrustSrError):
    exit_code = 2


class BadSpec(ConfigError):
    """Invalid degradation or ladder specification."""


# --- data errors ---------------------------------------------------------


class IoError(TrustSrError):
    """File missing or unreadable."""


class FormatError(TrustSrError):
    """File exists but cannot be decoded as a supported format."""


class ShapeMismatch(TrustSrError):
    """Operands do not share the required dimensions or channel count."""


class TooSmall(TrustSrError):
    """Image too small for the requested window or filter support."""


class EmptyInput(TrustSrError):
    """An operation that needs at least one element received none."""


class MissingReference(TrustSrError):
    """Scoring requested on a sample set without a reference image."""


class JoinError(TrustSrError):
    """Two keyed tables could not be joined on their shared ids."""


class MissingHumanData(TrustSrError):
    """Human-selection records absent for a scene that needs them."""


class NoConfidenceData(TrustSrError):
    """Confidence filtering requested but no verdict carries a confidence."""


class TooFewSamples(TrustSrError):
    """Statistical test requires more observations than were supplied."""


class ZeroVariance(TrustSrError):
    """Statistic undefined because a sample has no spread."""


class LengthMismatch(TrustSrError):
    """Paired vectors differ in length."""


class DimensionMismatch(TrustSrError):
    """Embedding vectors of different dimensionality."""


class ZeroVector(TrustSrError):
    """Cosine similarity undefined for a zero-norm vector."""


# --- provider errors -----------------------------------------------------


class ProviderError(TrustSrError):
    """A VLM provider failed after retries."""

    exit_code = 4


class EmbeddingError(ProviderError):
    """An embedding provider failed."""


class NetworkError(ProviderError):
    """Endpoint unreachable after retries."""


class TimeoutError(NetworkError):  # noqa: A001 - mirrors the wire contract name
    """Request exceeded its deadline after retries."""


class ProtocolError(ProviderError):
    """Endpoint reachable but its response violates the wire contract."""


class ParseError(ProviderError):
    """A provider response named no usable candidate."""


# --- selection outcomes --------------------------------------------------


class EmptyAfterFilter(TrustSrError):
    """Confidence filtering removed every candidate."""

    exit_code = 5

    def __init__(self, message: str, histogram: dict[str, int] | None = None):
        super().__init__(message)
        self.histogram = dict(histogram or {})
