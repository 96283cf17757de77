"""Checksummed, cached retrieval of named model artifacts.

Manifest format: one entry per line, ``name<TAB>uri<TAB>sha256<TAB>sizeBytes``.
Artifacts land in the cache under ``<sha256 prefix 16>/<name>`` and are
re-hashed on every hit, so silent cache corruption is always caught; a
corrupt entry is quarantined and refetched once before giving up.
"""

from __future__ import annotations

import os
import re
import shutil
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

import hashlib

from filelock import FileLock

from .errors import (
    ChecksumMismatch,
    MalformedManifest,
    SourceUnavailable,
    UnknownModel,
)

_SHA256_RE = re.compile(r"^[0-9a-f]{64}$")
_CHUNK = 64 * 1024
_HTTP_BACKOFFS = (0.25, 1.0)


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    uri: str
    sha256: str
    size_bytes: int


def parse_manifest(path: str) -> list[ManifestEntry]:
    entries: dict[str, ManifestEntry] = {}
    with open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise MalformedManifest(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
            name, uri, sha, size = parts
            if not name:
                raise MalformedManifest(f"{path}:{lineno}: empty name")
            if not _SHA256_RE.match(sha):
                raise MalformedManifest(
                    f"{path}:{lineno}: sha256 must be 64 lowercase hex chars")
            try:
                size_bytes = int(size)
            except ValueError:
                raise MalformedManifest(f"{path}:{lineno}: bad sizeBytes {size!r}") from None
            if name in entries:
                raise MalformedManifest(f"{path}:{lineno}: duplicate name {name!r}")
            entries[name] = ManifestEntry(name=name, uri=uri, sha256=sha,
                                          size_bytes=size_bytes)
    return [entries[k] for k in sorted(entries)]


def hash_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        while True:
            chunk = f.read(_CHUNK)
            if not chunk:
                break
            h.update(chunk)
    return h.hexdigest()


def verify(path: str, sha256: str) -> bool:
    return hash_file(path) == sha256


def default_cache_dir() -> str:
    return os.environ.get("TUNDRA_CACHE",
                          os.path.join(os.path.expanduser("~"), ".cache", "tundra"))


class ModelRepository:
    """Client for one manifest + one cache directory, with read counters."""

    def __init__(self, manifest_path: str, cache_dir: str | None = None):
        self.manifest_path = manifest_path
        self.cache_dir = cache_dir or default_cache_dir()
        self.entries = {e.name: e for e in parse_manifest(manifest_path)}
        self.source_reads: dict[str, int] = {}

    def list(self) -> list[ManifestEntry]:
        return [self.entries[k] for k in sorted(self.entries)]

    def _cache_path(self, entry: ManifestEntry) -> str:
        return os.path.join(self.cache_dir, entry.sha256[:16], entry.name)

    def _read_source(self, entry: ManifestEntry, dest: str) -> None:
        self.source_reads[entry.name] = self.source_reads.get(entry.name, 0) + 1
        uri = entry.uri
        if uri.startswith("file://"):
            src = uri[len("file://"):]
            if not os.path.exists(src):
                raise SourceUnavailable(f"{entry.name}: missing source file {src}")
            shutil.copyfile(src, dest)
            return
        if uri.startswith(("http://", "https://")):
            last: Exception | None = None
            for attempt in range(1 + len(_HTTP_BACKOFFS)):
                try:
                    with urllib.request.urlopen(uri) as resp, open(dest, "wb") as out:
                        shutil.copyfileobj(resp, out, _CHUNK)
                    return
                except (urllib.error.URLError, OSError) as exc:
                    last = exc
                    if attempt < len(_HTTP_BACKOFFS):
                        time.sleep(_HTTP_BACKOFFS[attempt])
            raise SourceUnavailable(f"{entry.name}: GET {uri} failed: {last}")
        raise SourceUnavailable(f"{entry.name}: unsupported uri scheme in {uri!r}")

    def fetch(self, name: str) -> str:
        """Return a verified local path; at most one source read when cached."""
        entry = self.entries.get(name)
        if entry is None:
            raise UnknownModel(f"no manifest entry named {name!r}")
        path = self._cache_path(entry)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        lock = FileLock(path + ".lock")
        with lock:
            if os.path.exists(path):
                if verify(path, entry.sha256):
                    return path
                # quarantine the corrupt entry, then refetch once
                quarantine = path + f".quarantine.{int(time.time() * 1000)}"
                os.replace(path, quarantine)
            tmp = path + ".part"
            self._read_source(entry, tmp)
            if not verify(tmp, entry.sha256):
                os.remove(tmp)
                raise ChecksumMismatch(
                    f"{name}: downloaded artifact does not match manifest sha256")
            os.replace(tmp, path)
            return path


def fetch(name: str, manifest_path: str, cache_dir: str | None = None) -> str:
    return ModelRepository(manifest_path, cache_dir).fetch(name)
