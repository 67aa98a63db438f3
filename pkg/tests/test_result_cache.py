import json

from utils.result_cache import ResultCache, cache_key, canonical_json


def test_cache_key_ignores_mapping_order():
    a = cache_key("zeta", {"k": 2, "N": 1}, {"precision_bits": 192})
    b = cache_key("zeta", {"N": 1, "k": 2}, {"precision_bits": 192})
    assert a == b
    assert a != cache_key("zeta", {"k": 2, "N": 1}, {"precision_bits": 256})
    assert a != cache_key("dedekind", {"k": 2, "N": 1}, {"precision_bits": 192})


def test_put_then_get(tmp_path):
    cache = ResultCache(tmp_path / "sub" / "cache.jsonl")
    record = {"value": "1.25", "nested": {"x": [1, 2]}}
    assert cache.get("k1") is None
    cache.put("k1", record)
    assert cache.get("k1") == record
    assert len(cache) == 1


def test_corrupt_lines_are_misses(tmp_path):
    path = tmp_path / "cache.jsonl"
    cache = ResultCache(path)
    cache.put("good", {"value": "1"})
    cache.put("tampered", {"value": "2"})

    lines = path.read_text().splitlines()
    entry = json.loads(lines[1])
    entry["record"]["value"] = "3"
    lines[1] = canonical_json(entry)
    lines.append("{not json")
    path.write_text("\n".join(lines) + "\n")

    assert cache.get("good") == {"value": "1"}
    assert cache.get("tampered") is None


def test_first_entry_wins(tmp_path):
    cache = ResultCache(tmp_path / "cache.jsonl")
    cache.put("key", {"value": "first"})
    cache.put("key", {"value": "second"})
    assert cache.get("key") == {"value": "first"}
