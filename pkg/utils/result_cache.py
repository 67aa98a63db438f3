"""
Append-only cache of result records.

Each line of the cache file is one JSON object
{"key": ..., "record": ..., "checksum": ...}; the checksum is the sha256 of
the canonical JSON of the record. Lines that fail to parse or whose checksum
does not match are skipped, so a damaged entry is a cache miss.
"""
import fcntl
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

logger = logging.getLogger(__name__)


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def cache_key(subcommand: str, params: Mapping[str, Any], config: Mapping[str, Any]) -> str:
    """Stable key of a (subcommand, params, config) triple."""
    return _digest(canonical_json({"subcommand": subcommand, "params": dict(params), "config": dict(config)}))


def record_checksum(record: Mapping[str, Any]) -> str:
    return _digest(canonical_json(record))


class ResultCache:
    """JSON-lines result cache at a file path; the file is created on first write."""

    def __init__(self, path):
        self.path = Path(path)

    def _scan(self) -> Dict[str, Dict[str, Any]]:
        entries: Dict[str, Dict[str, Any]] = {}
        if not self.path.is_file():
            return entries
        with open(self.path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                    key, record, checksum = entry["key"], entry["record"], entry["checksum"]
                except (ValueError, KeyError, TypeError):
                    logger.warning("cache %s line %d is not a valid entry; ignored", self.path, lineno)
                    continue
                if record_checksum(record) != checksum:
                    logger.warning("cache %s line %d failed its checksum; ignored", self.path, lineno)
                    continue
                # first intact entry wins so repeated hits stay identical
                entries.setdefault(key, record)
        return entries

    def get(self, key: str) -> Optional[Dict[str, Any]]:
        record = self._scan().get(key)
        if record is not None:
            logger.info("cache hit %s", key[:12])
        return record

    def put(self, key: str, record: Mapping[str, Any]) -> None:
        """Append one entry under an exclusive lock."""
        line = canonical_json({"key": key, "record": record, "checksum": record_checksum(record)})
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as handle:
            fcntl.flock(handle.fileno(), fcntl.LOCK_EX)
            try:
                handle.write(line + "\n")
                handle.flush()
            finally:
                fcntl.flock(handle.fileno(), fcntl.LOCK_UN)
        logger.debug("cached %s in %s", key[:12], self.path)

    def __len__(self) -> int:
        return len(self._scan())
