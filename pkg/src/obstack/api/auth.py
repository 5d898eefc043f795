"""Bearer-token authentication and label-matcher scoping.

Tokens live in the environment (loaded from a .env file at deploy time):
``API_ADMIN_TOKEN`` holds the admin token, ``API_USER_TOKENS`` holds
comma-separated ``token:label=value`` bindings; repeating a token adds
more matchers to its scope. Scoping is enforced server-side by AND-ing
every scope matcher into each query, one mechanism covering time series,
events, summaries, and alerts uniformly.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from obstack.core.errors import ObstackError
from obstack.core.selector import Selector

# re-exported: scoping errors map to HTTP 403 at the API boundary
from obstack.core.selector import ScopeConflict  # noqa: F401


class Unauthenticated(ObstackError):
    """Missing or unknown bearer token."""


class Role(str, enum.Enum):
    ADMIN = "admin"
    USER = "user"


@dataclass(frozen=True)
class Principal:
    token_id: str
    role: Role
    scope: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if self.role is Role.USER and not self.scope:
            raise ValueError("user principals need a non-empty scope")
        if self.role is Role.ADMIN and self.scope:
            raise ValueError("admin principals must have an empty scope")


class CredentialStore:
    def __init__(self, admin_token: Optional[str], user_tokens: Dict[str, Tuple[Tuple[str, str], ...]]):
        self._admin = admin_token
        self._users = dict(user_tokens)

    @classmethod
    def from_env(cls, env: Optional[Dict[str, str]] = None) -> "CredentialStore":
        env = os.environ if env is None else env
        admin = env.get("API_ADMIN_TOKEN") or None
        users: Dict[str, list] = {}
        raw = env.get("API_USER_TOKENS", "")
        for entry in raw.split(","):
            entry = entry.strip()
            if not entry:
                continue
            token, sep, binding = entry.partition(":")
            key, eq, value = binding.partition("=")
            if not (sep and eq and token and key):
                raise ValueError(f"malformed API_USER_TOKENS entry {entry!r}")
            users.setdefault(token, []).append((key.lower(), value))
        return cls(admin, {t: tuple(sorted(set(m))) for t, m in users.items()})

    def authorize(self, bearer_token: Optional[str]) -> Principal:
        """Resolve a bearer token into a Principal or refuse."""
        if not bearer_token:
            raise Unauthenticated("missing bearer token")
        if self._admin is not None and bearer_token == self._admin:
            return Principal(token_id="admin", role=Role.ADMIN)
        scope = self._users.get(bearer_token)
        if scope:
            return Principal(token_id=bearer_token[:8], role=Role.USER, scope=scope)
        raise Unauthenticated("unknown bearer token")


def scope_selector(principal: Principal, requested: Selector) -> Selector:
    """The effective selector a query runs with.

    Admins pass through unchanged; user scopes are AND-composed in and a
    contradiction raises ScopeConflict (HTTP 403). Composition happens
    here, server-side, so no request parameter can override it.
    """
    if principal.role is Role.ADMIN:
        return requested
    return requested.intersect(principal.scope)


def load_env_file(path: str) -> Dict[str, str]:
    """Parse KEY=VALUE lines; comments and blanks are skipped, quoted
    values are unquoted."""
    out: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, _, value = line.partition("=")
            value = value.strip()
            if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
                value = value[1:-1]
            out[key.strip()] = value
    return out
