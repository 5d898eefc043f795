"""Metric selectors: a name plus equality label matchers.

Selectors use the same grammar as series keys on the wire:
``name{key="value",...}``. An empty name (``{key="v"}``) matches any
metric name; an empty matcher set matches any label set. Matching is
subset semantics: a series matches when every matcher key is present
with exactly the matcher's value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

from obstack.core.errors import ObstackError, ParseError
from obstack.core.model import LABEL_KEY_RE, NAME_RE, SeriesKey


class ScopeConflict(ObstackError):
    """Requested selector contradicts the principal's scope."""


_MATCHER_RE = re.compile(r'(?P<key>[A-Za-z_][A-Za-z0-9_]*)="(?P<value>(?:[^"\\]|\\.)*)"')


@dataclass(frozen=True)
class Selector:
    name: str = ""
    matchers: Tuple[Tuple[str, str], ...] = ()

    def matches(self, key: SeriesKey) -> bool:
        if self.name and key.name != self.name:
            return False
        if not self.matchers:
            return True
        have = key.label_map()
        return all(have.get(k) == v for k, v in self.matchers)

    def matches_labels(self, labels: Mapping[str, str]) -> bool:
        return all(labels.get(k) == v for k, v in self.matchers)

    def intersect(self, scope: Tuple[Tuple[str, str], ...]) -> "Selector":
        """AND-compose scope matchers into this selector.

        Raises ScopeConflict when a requested matcher names a scope key
        with a different value; such a request can never legally match.
        """
        mine = dict(self.matchers)
        for k, v in scope:
            if k in mine and mine[k] != v:
                raise ScopeConflict(f"selector pins {k}={mine[k]!r} outside scope")
            mine[k] = v
        return Selector(self.name, tuple(sorted(mine.items())))

    def __str__(self) -> str:
        inner = ",".join(
            '{}="{}"'.format(k, v.replace("\\", "\\\\").replace('"', '\\"'))
            for k, v in self.matchers
        )
        return f"{self.name}{{{inner}}}"


def parse_selector(text: str) -> Selector:
    """Parse ``name{k="v",...}``; both the name and matchers are optional."""
    stripped = text.strip()
    name = stripped
    block: Optional[str] = None
    if "{" in stripped:
        if not stripped.endswith("}"):
            raise ParseError(f"malformed selector {text!r}")
        name, _, rest = stripped.partition("{")
        block = rest[:-1]
    if name and not NAME_RE.match(name.lower()):
        raise ParseError(f"bad metric name in selector {text!r}")

    matchers: dict[str, str] = {}
    if block:
        pos = 0
        while pos < len(block):
            if matchers:
                if block[pos] != ",":
                    raise ParseError(f"malformed selector {text!r}")
                pos += 1
            pair = _MATCHER_RE.match(block, pos)
            if pair is None:
                raise ParseError(f"malformed selector {text!r}")
            key = pair.group("key").lower()
            if not LABEL_KEY_RE.match(key):
                raise ParseError(f"bad matcher key in selector {text!r}")
            matchers[key] = re.sub(r"\\(.)", r"\1", pair.group("value"))
            pos = pair.end()
    return Selector(name.lower(), tuple(sorted(matchers.items())))
