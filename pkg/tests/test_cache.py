import json
import os

import pytest

from rankgradient.cache import (
    TableCache,
    cache_key,
    deserialize_table,
    serialize_table,
)
from rankgradient.cosets import enumerate_cosets
from rankgradient.words import parse_presentation

TEXT = "gens a b\nrel a^3\nrel b^2\nrel a b a b\nsub H b\n"


def parsed(text=TEXT):
    pres, specs = parse_presentation(text)
    return pres, (specs[0] if specs else None)


def test_serialize_round_trip():
    pres, spec = parsed()
    table = enumerate_cosets(pres, spec)
    restored = deserialize_table(serialize_table(table), pres, spec)
    assert restored.perms == table.perms
    assert restored.provenance == "cache"


def test_cache_key_ignores_formatting():
    a = cache_key(*parsed())
    b = cache_key(*parsed("# c\ngens  a   b\n\nrel a^3\nrel b^2\nrel a b a b\nsub H b\n"))
    assert a == b
    # a different subgroup gives a different key
    assert a != cache_key(*parsed(TEXT.replace("sub H b", "sub H a")))


def test_disabled_cache_counts_misses(monkeypatch):
    monkeypatch.delenv("RANKGRADIENT_CACHE", raising=False)
    cache = TableCache()
    assert not cache.enabled
    pres, spec = parsed()
    cache.enumerate(pres, spec)
    cache.enumerate(pres, spec)
    assert (cache.hits, cache.misses) == (0, 2)


def test_cache_hit_after_miss(tmp_path):
    cache = TableCache(str(tmp_path))
    pres, spec = parsed()
    first = cache.enumerate(pres, spec)
    second = cache.enumerate(pres, spec)
    assert (cache.hits, cache.misses) == (1, 1)
    assert first.perms == second.perms
    assert second.provenance == "cache"


def test_env_var_enables_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("RANKGRADIENT_CACHE", str(tmp_path))
    cache = TableCache()
    assert cache.enabled
    pres, spec = parsed()
    cache.enumerate(pres, spec)
    assert TableCache().enumerate(pres, spec).provenance == "cache"


def corrupt(path, mangle):
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    mangle(obj)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)


def test_corrupted_payload_is_a_miss(tmp_path):
    cache = TableCache(str(tmp_path))
    pres, spec = parsed()
    cache.enumerate(pres, spec)
    path = os.path.join(str(tmp_path), cache_key(pres, spec) + ".json")

    corrupt(path, lambda obj: obj["payload"]["perms"][0].reverse())
    fresh = TableCache(str(tmp_path))
    table = fresh.enumerate(pres, spec)
    assert fresh.misses == 1  # checksum no longer matches
    assert table.provenance != "cache"

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("not json at all")
    fresh = TableCache(str(tmp_path))
    assert fresh.enumerate(pres, spec).provenance != "cache"
    assert fresh.misses == 1


def test_version_mismatch_is_a_miss(tmp_path):
    cache = TableCache(str(tmp_path))
    pres, spec = parsed()
    cache.enumerate(pres, spec)
    path = os.path.join(str(tmp_path), cache_key(pres, spec) + ".json")

    def bump(obj):
        obj["payload"]["version"] = "rankgradient-cosets-0"
        # keep the checksum honest so only the version check can fail
        from rankgradient.cache import _checksum

        obj["checksum"] = _checksum(obj["payload"])

    corrupt(path, bump)
    with pytest.raises(ValueError, match="version|written by"):
        with open(path, encoding="utf-8") as fh:
            deserialize_table(fh.read(), pres, spec)
    fresh = TableCache(str(tmp_path))
    assert fresh.enumerate(pres, spec).provenance != "cache"


def test_wrong_presentation_rejected(tmp_path):
    pres, spec = parsed()
    table = enumerate_cosets(pres, spec)
    other_pres, other_spec = parsed(TEXT.replace("sub H b", "sub H a"))
    with pytest.raises(ValueError, match="different presentation"):
        deserialize_table(serialize_table(table), other_pres, other_spec)
