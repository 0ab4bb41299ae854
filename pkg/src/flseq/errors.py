"""Exception hierarchy for the fault-localization workbench.

Every domain failure raises a subclass of :class:`FlseqError`, so callers
(and the CLI) can distinguish workbench failures from programming errors.
Plain I/O failures are left to the builtin ``OSError`` family.
"""

from __future__ import annotations


class FlseqError(Exception):
    """Base class for all workbench errors."""


# --- corpus ---------------------------------------------------------------

class EmptySource(FlseqError):
    """A source text with zero lines where at least one is required."""


class NoDifference(FlseqError):
    """Buggy and fixed sources are line-identical; no fault can be labeled."""


class NoApplicableSite(FlseqError):
    """No line of the clean source matches any of the given mutators."""


class MalformedRecord(FlseqError):
    """A record file violates the line-delimited record schema."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"record {line_no}: {message}")
        self.line_no = line_no


# --- sgcodec --------------------------------------------------------------

class OutOfRange(FlseqError):
    """A 1-based line index falls outside the source's line range."""


# --- model ----------------------------------------------------------------

class TooLong(FlseqError):
    """An encoded example does not fit the model context window."""

    def __init__(self, required: int, available: int):
        super().__init__(f"encoded length {required} exceeds context {available}")
        self.required = required
        self.available = available


class NoTrainableExamples(FlseqError):
    """Training was requested but no example fits the context window."""


class NonFiniteLoss(FlseqError):
    """Training produced a NaN/inf loss; carries the offending batch id."""

    def __init__(self, batch_id: int, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch_id}")
        self.batch_id = batch_id
        self.epoch = epoch


class ContextOverflow(FlseqError):
    """A token prefix is too long for the backend context window."""


class TransportError(FlseqError):
    """Remote endpoint unreachable after retries (retryable class)."""


class ProtocolError(FlseqError):
    """Remote endpoint answered with a malformed or invalid payload."""


class ServerError(FlseqError):
    """Remote endpoint answered with a 5xx status."""

    def __init__(self, status: int, message: str = ""):
        super().__init__(f"server error {status}: {message}" if message else f"server error {status}")
        self.status = status


# --- beam -----------------------------------------------------------------

class NoHypotheses(FlseqError):
    """The backend assigned probability zero to every continuation."""


# --- baseline -------------------------------------------------------------

class NoFailingTests(FlseqError):
    """SBFL scoring requires at least one failing test."""


class NoMutants(FlseqError):
    """MBFL scoring requires at least one mutant."""


class EmptyResult(FlseqError):
    """Restricting a ranking to a function left no ranked lines."""


# --- evaluation -----------------------------------------------------------

class MixedTotals(FlseqError):
    """Reports being aggregated disagree on total or matching mode."""


class TooFew(FlseqError):
    """Not enough ids to populate the requested split scheme."""
