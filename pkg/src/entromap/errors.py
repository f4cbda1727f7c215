"""Exception hierarchy shared across the package.

The CLI maps these onto its exit codes: usage problems exit 2, I/O 3,
transport/endpoint problems 4, data validation 5.
"""

from __future__ import annotations


class EntromapError(Exception):
    """Base class for every error this package raises deliberately."""


class UsageError(EntromapError):
    """Bad invocation: out-of-range flags or missing configuration."""


class ParseError(EntromapError):
    """Input that cannot be decoded at all; names the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StructuralError(EntromapError):
    """Well-formed pieces that do not fit together (indices, lengths, ids)."""


class ValidationError(EntromapError):
    """A value breaks a data-model invariant (mass, sign, ordering)."""


class DomainError(EntromapError):
    """A parameter lies outside its documented domain."""


class TransportError(EntromapError):
    """Failure talking to the endpoint."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class CapabilityError(EntromapError):
    """The endpoint answered but cannot satisfy the request (e.g. no logprobs)."""


class ReplayMissError(TransportError):
    """No archived response exists for this request and live mode is off."""
