"""Exception hierarchy shared by every segserve subsystem.

Each error carries a stable machine-readable ``code`` so the HTTP layer can
serialize failures as ``{"error": code, "message": text}`` from a fixed
enumerated set.
"""

from __future__ import annotations


class SegServeError(Exception):
    """Base class for all domain errors."""

    code = "internal_error"


class InvalidInput(SegServeError):
    code = "invalid_input"


class DimensionMismatch(SegServeError):
    code = "dimension_mismatch"


class DegenerateLabels(SegServeError):
    code = "degenerate_labels"


class SegmenterContractViolation(SegServeError):
    code = "segmenter_contract_violation"


class UnsupportedFormat(SegServeError):
    code = "unsupported_format"


class InvalidCategory(SegServeError):
    code = "invalid_category"


class NotFound(SegServeError):
    code = "not_found"


class NotOwner(SegServeError):
    code = "not_owner"


class PersistError(SegServeError):
    code = "persist_error"


class IllegalTransition(SegServeError):
    code = "illegal_transition"


class ResultNotReady(SegServeError):
    code = "result_not_ready"


class UsernameTaken(SegServeError):
    code = "username_taken"


class WeakPassword(SegServeError):
    code = "weak_password"


class AuthFailed(SegServeError):
    code = "auth_failed"


class TokenInvalid(SegServeError):
    code = "token_invalid"


class PayloadTooLarge(SegServeError):
    code = "payload_too_large"
