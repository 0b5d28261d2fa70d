"""Users, sessions, and the role policy.

Passwords are stored as PBKDF2-HMAC-SHA256 envelopes; session tokens are 32
CSPRNG bytes, base64url on the wire, held server-side so logout actually
revokes. AuthFailed is byte-identical for unknown users and wrong passwords.
"""

from __future__ import annotations

import hashlib
import hmac
import base64
import json
import os
import secrets
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .core import SierraError

PBKDF2_ITERATIONS = 210_000
SALT_SIZE = 16
HASH_SIZE = 32
MIN_PASSWORD_LEN = 10
DEFAULT_TTL_MS = 12 * 3600 * 1000

ROLES = ("admin", "expert", "subject")

ACTIONS = (
    "manage_users",
    "create_subject",
    "read_subject",
    "read_series",
    "load_questionnaire",
    "read_questionnaire",
    "respond_questionnaire",
    "read_scores",
    "read_portfolio",
    "build_viz",
    "manage_ml",
)

# allow / own (resource must match the caller's linked subject) / deny
POLICY: dict[str, dict[str, str]] = {
    "admin": {action: "allow" for action in ACTIONS},
    "expert": {action: "allow" for action in ACTIONS} | {"manage_users": "deny"},
    "subject": {
        "manage_users": "deny",
        "create_subject": "deny",
        "read_subject": "own",
        "read_series": "own",
        "load_questionnaire": "deny",
        "read_questionnaire": "allow",
        "respond_questionnaire": "own",
        "read_scores": "own",
        "read_portfolio": "allow",
        "build_viz": "own",
        "manage_ml": "deny",
    },
}


class DuplicateUser(SierraError):
    pass


class WeakPassword(SierraError):
    pass


class AuthFailed(SierraError):
    def __init__(self):
        super().__init__("invalid credentials")


@dataclass(frozen=True)
class User:
    username: str
    password_hash: str
    role: str
    linked_subject: str | None = None


@dataclass(frozen=True)
class Session:
    token: str
    username: str
    role: str
    linked_subject: str | None
    expires_at: int  # epoch ms


@dataclass(frozen=True)
class AccessDecision:
    allowed: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.allowed


def hash_password(password: str) -> str:
    salt = os.urandom(SALT_SIZE)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, PBKDF2_ITERATIONS, HASH_SIZE)
    return "pbkdf2-sha256$%d$%s$%s" % (
        PBKDF2_ITERATIONS,
        base64.b64encode(salt).decode("ascii"),
        base64.b64encode(digest).decode("ascii"),
    )


def verify_password(envelope: str, password: str) -> bool:
    try:
        scheme, iters, salt_b64, hash_b64 = envelope.split("$")
        if scheme != "pbkdf2-sha256":
            return False
        salt = base64.b64decode(salt_b64)
        expected = base64.b64decode(hash_b64)
        digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, int(iters), len(expected))
    except (ValueError, TypeError):
        return False
    return hmac.compare_digest(digest, expected)


# burned on unknown usernames so the failure path costs the same either way
_DUMMY_HASH = hash_password("placeholder-timing-equalizer")


class AuthGuard:
    """User registry plus server-side session store."""

    def __init__(self, users_path: str | Path, session_ttl_ms: int = DEFAULT_TTL_MS):
        self.users_path = Path(users_path)
        self.session_ttl_ms = session_ttl_ms
        self._users: dict[str, User] = {}
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        if self.users_path.exists():
            for line in self.users_path.read_text("utf-8").splitlines():
                if not line.strip():
                    continue
                doc = json.loads(line)
                self._users[doc["username"]] = User(
                    username=doc["username"],
                    password_hash=doc["password_hash"],
                    role=doc["role"],
                    linked_subject=doc.get("linked_subject"),
                )

    # -- users ---------------------------------------------------------------

    def create_user(
        self, username: str, password: str, role: str, linked_subject: str | None = None
    ) -> User:
        if not 3 <= len(username) <= 64:
            raise ValueError("username must be 3-64 characters")
        if role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}")
        if role == "subject" and not linked_subject:
            raise ValueError("subject users must link to a subject id")
        if role != "subject":
            linked_subject = None
        if len(password) < MIN_PASSWORD_LEN:
            raise WeakPassword(f"password must be at least {MIN_PASSWORD_LEN} characters")
        with self._lock:
            if username in self._users:
                raise DuplicateUser(username)
            user = User(username, hash_password(password), role, linked_subject)
            self._users[username] = user
            self.users_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.users_path, "a", encoding="utf-8") as f:
                f.write(json.dumps({
                    "username": user.username,
                    "password_hash": user.password_hash,
                    "role": user.role,
                    "linked_subject": user.linked_subject,
                }) + "\n")
        return user

    def get_user(self, username: str) -> User | None:
        return self._users.get(username)

    # -- sessions ------------------------------------------------------------

    def authenticate(self, username: str, password: str, now_ms: int | None = None) -> Session:
        user = self._users.get(username)
        if user is None:
            verify_password(_DUMMY_HASH, password)
            raise AuthFailed()
        if not verify_password(user.password_hash, password):
            raise AuthFailed()
        now = int(time.time() * 1000) if now_ms is None else now_ms
        session = Session(
            token=secrets.token_urlsafe(32),
            username=user.username,
            role=user.role,
            linked_subject=user.linked_subject,
            expires_at=now + self.session_ttl_ms,
        )
        with self._lock:
            self._sessions[session.token] = session
        return session

    def session(self, token: str | None, now_ms: int | None = None) -> Session | None:
        """Live session for the token, or None (unknown or expired)."""
        if not token:
            return None
        now = int(time.time() * 1000) if now_ms is None else now_ms
        with self._lock:
            s = self._sessions.get(token)
            if s is None:
                return None
            if now >= s.expires_at:
                del self._sessions[token]
                return None
            return s

    def logout(self, token: str) -> None:
        with self._lock:
            self._sessions.pop(token, None)

    # -- policy ----------------------------------------------------------------

    def check_access(
        self, token: str | None, action: str, resource: str | None = None,
        now_ms: int | None = None,
    ) -> AccessDecision:
        """Decide before any store access; Deny is a value, not an exception."""
        session = self.session(token, now_ms)
        if session is None:
            return AccessDecision(False, "no valid session")
        return check_access(session, action, resource)


def check_access(session: Session, action: str, resource: str | None = None) -> AccessDecision:
    if action not in ACTIONS:
        return AccessDecision(False, f"unknown action: {action}")
    rule = POLICY[session.role][action]
    if rule == "allow":
        return AccessDecision(True)
    if rule == "own":
        if resource is not None and resource == session.linked_subject:
            return AccessDecision(True)
        return AccessDecision(False, f"{session.role} may only {action} for their own subject")
    return AccessDecision(False, f"{session.role} may not {action}")
