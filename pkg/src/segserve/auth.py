"""Account operations: registration, login, session validation, password
reset.

Passwords are stored as PBKDF2-HMAC-SHA256 with a fresh 16-byte salt and
100,000 iterations. Login failure is uniform: an unknown username burns the
same KDF work and raises the same error as a wrong password.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from datetime import datetime, timedelta, timezone
from typing import Callable

from .errors import AuthFailed, NotFound, TokenInvalid, WeakPassword
from .records import ResetToken, SessionToken, UserRecord, ms_from_utc
from .storage import Store

KDF_ITERATIONS = 100_000
SALT_BYTES = 16
MIN_PASSWORD_LENGTH = 8
DEFAULT_SESSION_TTL = timedelta(hours=24)
RESET_TTL = timedelta(minutes=15)

Clock = Callable[[], datetime]


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


class AuthService:
    def __init__(
        self,
        store: Store,
        *,
        clock: Clock = _utc_now,
        session_ttl: timedelta = DEFAULT_SESSION_TTL,
        kdf_iterations: int = KDF_ITERATIONS,
    ) -> None:
        self._store = store
        self._clock = clock
        self._session_ttl = session_ttl
        # Lower iteration counts are a test hook only; production paths use
        # the 100k default.
        self._iterations = kdf_iterations

    def _hash(self, password: str, salt: bytes) -> bytes:
        return hashlib.pbkdf2_hmac(
            "sha256", password.encode("utf-8"), salt, self._iterations
        )

    @staticmethod
    def _check_strength(password: str) -> None:
        if len(password) < MIN_PASSWORD_LENGTH:
            raise WeakPassword(
                f"password must be at least {MIN_PASSWORD_LENGTH} characters"
            )

    def register(self, username: str, password: str) -> UserRecord:
        if not username:
            raise WeakPassword("username must be non-empty")
        self._check_strength(password)
        salt = secrets.token_bytes(SALT_BYTES)
        digest = self._hash(password, salt)
        return self._store.create_user(
            username, digest, salt, ms_from_utc(self._clock())
        )

    def authenticate(self, username: str, password: str) -> SessionToken:
        user = self._store.get_user_by_name(username)
        if user is None:
            # Equalize work so the failure mode does not leak which part
            # of the credentials was wrong.
            self._hash(password, b"\x00" * SALT_BYTES)
            raise AuthFailed("bad credentials")
        if not hmac.compare_digest(self._hash(password, user.salt),
                                   user.password_hash):
            raise AuthFailed("bad credentials")
        token = secrets.token_hex(16)
        expires_at = self._clock() + self._session_ttl
        self._store.put_session(token, user.user_id, ms_from_utc(expires_at))
        return SessionToken(token=token, user_id=user.user_id,
                            expires_at=expires_at)

    def validate(self, token: str) -> int:
        row = self._store.get_session(token)
        if row is None:
            raise AuthFailed("unknown session token")
        user_id, expires_at_ms = row
        if ms_from_utc(self._clock()) >= expires_at_ms:
            raise AuthFailed("session expired")
        return user_id

    def reset_password(self, username: str) -> ResetToken:
        user = self._store.get_user_by_name(username)
        if user is None:
            raise NotFound(f"no user named {username!r}")
        token = secrets.token_hex(16)
        expires_at = self._clock() + RESET_TTL
        self._store.put_reset(token, user.user_id, ms_from_utc(expires_at))
        return ResetToken(token=token, user_id=user.user_id,
                          expires_at=expires_at)

    def redeem_reset(self, token: str, new_password: str) -> None:
        """Single-use: sets the new password and kills every session."""
        self._check_strength(new_password)
        row = self._store.take_reset(token)
        if row is None:
            raise TokenInvalid("unknown or already-used reset token")
        user_id, expires_at_ms = row
        if ms_from_utc(self._clock()) >= expires_at_ms:
            raise TokenInvalid("reset token expired")
        salt = secrets.token_bytes(SALT_BYTES)
        self._store.update_password(user_id, self._hash(new_password, salt), salt)
        self._store.delete_sessions(user_id)
