"""Disk cache for coset tables.

Keys hash the canonical presentation text (so whitespace-only edits still
hit) together with the enumeration algorithm version; payloads carry their
own checksum.  Anything off -- bad JSON, bad checksum, different version --
is treated as a miss and recomputed, never trusted.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

from .cosets import ALGORITHM_VERSION, CosetTable, DEFAULT_COSET_CAP, enumerate_cosets
from .words import Presentation, SubgroupSpec, canonical_form

CACHE_DIR_ENV = "RANKGRADIENT_CACHE"


def cache_key(pres: Presentation, spec: SubgroupSpec | None = None) -> str:
    text = ALGORITHM_VERSION + "\n" + canonical_form(pres, spec)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _checksum(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def serialize_table(table: CosetTable) -> str:
    payload = {
        "version": ALGORITHM_VERSION,
        "presentation": canonical_form(table.pres, table.spec),
        "perms": [list(p) for p in table.perms],
    }
    return json.dumps({"payload": payload, "checksum": _checksum(payload)})


def deserialize_table(
    text: str, pres: Presentation, spec: SubgroupSpec | None
) -> CosetTable:
    """Rebuild a table against the caller's presentation objects.

    Raises ValueError on any integrity problem; callers treat that as a
    cache miss.
    """
    obj = json.loads(text)
    payload = obj.get("payload")
    if not isinstance(payload, dict) or obj.get("checksum") != _checksum(payload):
        raise ValueError("cache entry failed its checksum")
    if payload.get("version") != ALGORITHM_VERSION:
        raise ValueError(
            f"cache entry written by {payload.get('version')!r}, "
            f"expected {ALGORITHM_VERSION!r}"
        )
    if payload.get("presentation") != canonical_form(pres, spec):
        raise ValueError("cache entry is for a different presentation")
    return CosetTable(
        pres=pres,
        perms=tuple(tuple(p) for p in payload["perms"]),
        spec=spec,
        provenance="cache",
    )


@dataclass
class TableCache:
    """Cached front end to enumerate_cosets with hit/miss instrumentation.

    ``directory=None`` falls back to the environment override and, failing
    that, disables caching (every call enumerates).
    """

    directory: str = None
    hits: int = 0
    misses: int = 0

    def __post_init__(self):
        if self.directory is None:
            self.directory = os.environ.get(CACHE_DIR_ENV)

    @property
    def enabled(self) -> bool:
        return bool(self.directory)

    def _path(self, key: str) -> str:
        return os.path.join(self.directory, key + ".json")

    def enumerate(
        self,
        pres: Presentation,
        spec: SubgroupSpec | None = None,
        cap: int = DEFAULT_COSET_CAP,
        provenance: str = "enumerate",
    ) -> CosetTable:
        if not self.enabled:
            self.misses += 1
            return enumerate_cosets(pres, spec, cap=cap, provenance=provenance)
        key = cache_key(pres, spec)
        path = self._path(key)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                table = deserialize_table(fh.read(), pres, spec)
            self.hits += 1
            return table
        except (OSError, ValueError, json.JSONDecodeError):
            pass
        table = enumerate_cosets(pres, spec, cap=cap, provenance=provenance)
        self.misses += 1
        os.makedirs(self.directory, exist_ok=True)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(serialize_table(table))
        os.replace(tmp, path)
        return table
