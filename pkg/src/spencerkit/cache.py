"""Content-addressed cache of pipeline reports.

Cache key: SHA-256 of the canonical config JSON, the engine version and the
frozen cochain-basis version.  Reports are stored byte-for-byte next to a
checksum file; a checksum mismatch is treated as a miss with a warning.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import tempfile
from typing import Optional

from . import BASIS_VERSION, __version__


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True)


def config_hash(config: dict) -> str:
    preimage = "\x00".join([canonical_json(config), __version__,
                            BASIS_VERSION])
    return hashlib.sha256(preimage.encode("utf-8")).hexdigest()


def cache_dir() -> str:
    env = os.environ.get("SPENCERKIT_CACHE_DIR")
    if env:
        return env
    return os.path.join(os.path.expanduser("~"), ".cache", "spencerkit")


def _paths(key: str):
    base = cache_dir()
    return os.path.join(base, key + ".json"), os.path.join(base,
                                                           key + ".sha256")


def cache_lookup(key: str) -> Optional[bytes]:
    """Stored report bytes for the key, or None on a miss.  Corrupt entries
    are reported on stderr and treated as misses."""
    report_path, sum_path = _paths(key)
    if not (os.path.exists(report_path) and os.path.exists(sum_path)):
        return None
    with open(report_path, "rb") as fh:
        blob = fh.read()
    with open(sum_path, "r", encoding="ascii") as fh:
        recorded = fh.read().strip()
    actual = hashlib.sha256(blob).hexdigest()
    if actual != recorded:
        print(f"warning: cache entry {key} is corrupt; ignoring",
              file=sys.stderr)
        return None
    return blob


def cache_store(key: str, blob: bytes) -> None:
    """Atomic write (temp file then rename) of the report and its checksum."""
    base = cache_dir()
    os.makedirs(base, exist_ok=True)
    report_path, sum_path = _paths(key)
    digest = hashlib.sha256(blob).hexdigest()
    for path, payload in ((report_path, blob),
                          (sum_path, (digest + "\n").encode("ascii"))):
        fd, tmp = tempfile.mkstemp(dir=base)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def cache_list() -> list:
    base = cache_dir()
    if not os.path.isdir(base):
        return []
    return sorted(name[:-5] for name in os.listdir(base)
                  if name.endswith(".json"))


def cache_remove(key: Optional[str] = None) -> int:
    """Remove one entry, or all entries when key is None; returns a count."""
    removed = 0
    keys = [key] if key else cache_list()
    for k in keys:
        for path in _paths(k):
            if os.path.exists(path):
                os.unlink(path)
                removed += 1
    return removed
