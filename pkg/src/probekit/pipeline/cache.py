"""Content-addressed artifact cache with atomic writes."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path


def canonical_key(payload: dict) -> str:
    """SHA-256 over the canonical JSON form of the payload."""
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def derived_seed(*parts) -> int:
    """Stable 31-bit seed derived from arbitrary string/int parts."""
    blob = ":".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(blob.encode("utf-8")).digest()[:4], "big") % (2**31)


class ArtifactCache:
    """Files keyed by content hash; the PROBEKIT_CACHE env var overrides root."""

    def __init__(self, root: str | Path):
        env = os.environ.get("PROBEKIT_CACHE")
        self.root = Path(env) if env else Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, key: str, suffix: str) -> Path:
        return self.root / f"{key[:32]}{suffix}"

    def has(self, key: str, suffix: str) -> bool:
        return self.path_for(key, suffix).exists()

    def store(self, key: str, suffix: str, write_fn) -> Path:
        """Materialize an artifact atomically; write_fn(path) creates the file."""
        final = self.path_for(key, suffix)
        if final.exists():
            return final
        fd, tmp_name = tempfile.mkstemp(dir=self.root, suffix=suffix + ".tmp")
        os.close(fd)
        tmp = Path(tmp_name)
        try:
            write_fn(tmp)
            os.replace(tmp, final)
        finally:
            tmp.unlink(missing_ok=True)
        return final
