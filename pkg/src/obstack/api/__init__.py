"""Unified HTTP surface: admin overviews vs. per-user scoped data."""

from obstack.api.auth import (
    CredentialStore,
    Principal,
    Role,
    Unauthenticated,
    load_env_file,
    scope_selector,
)
from obstack.api.stack import Stack, StackSettings

__all__ = [
    "CredentialStore",
    "Principal",
    "Role",
    "Stack",
    "StackSettings",
    "Unauthenticated",
    "load_env_file",
    "scope_selector",
]
