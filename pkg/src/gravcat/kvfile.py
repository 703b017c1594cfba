"""Reader for the flat ``key = value`` files used for configs and catalogs."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

log = logging.getLogger(__name__)


class KVSyntaxError(ValueError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


@dataclass(frozen=True)
class Entry:
    key: str
    value: str
    lineno: int


def parse_kv(text: str, source="<string>") -> dict[str, Entry]:
    """Parse ``key = value`` lines. ``#`` starts a comment; duplicate keys: last wins."""
    entries: dict[str, Entry] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise KVSyntaxError(source, lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise KVSyntaxError(source, lineno, "empty key")
        if key in entries:
            log.warning("%s:%d: duplicate key %r overrides line %d", source, lineno, key, entries[key].lineno)
        entries[key] = Entry(key, value, lineno)
    return entries


def read_kv(path) -> dict[str, Entry]:
    path = Path(path)
    return parse_kv(path.read_text(encoding="utf-8"), source=str(path))
