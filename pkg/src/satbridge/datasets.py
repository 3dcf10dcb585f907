"""Benchmark graph download, checksum verification and caching.

The cache directory is ``$SATBRIDGE_DATA`` (default ``~/.cache/satbridge``).
Checksums are SHA-256 of the stored graph file (for archives: of the
extracted member).  Entries whose manifest checksum is null are pinned on
first download into ``checksums.lock.json`` in the cache directory and
verified against that pin afterwards.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import shutil
import tarfile
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .graph import CoInstance, load_graph

log = logging.getLogger(__name__)

LOCK_NAME = "checksums.lock.json"


class DatasetError(RuntimeError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class ChecksumError(DatasetError):
    pass


class OfflineError(DatasetError):
    pass


def cache_dir() -> Path:
    return Path(os.environ.get("SATBRIDGE_DATA", Path.home() / ".cache" / "satbridge"))


def bundled_manifest() -> list[dict]:
    text = resources.files("satbridge").joinpath("data/manifest.json").read_text()
    return json.loads(text)["datasets"]


def load_manifest(path=None) -> list[dict]:
    if path is None:
        return bundled_manifest()
    data = json.loads(Path(path).read_text())
    return data["datasets"] if isinstance(data, dict) else data


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class FetchReport:
    downloaded: list = field(default_factory=list)
    verified: list = field(default_factory=list)     # already present and matching
    pinned: list = field(default_factory=list)       # checksum recorded on first fetch
    quarantined: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    missing: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors and not self.missing

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("downloaded", "verified", "pinned", "quarantined", "errors", "missing")}


def _read_lock(dest: Path) -> dict:
    p = dest / LOCK_NAME
    return json.loads(p.read_text()) if p.exists() else {}


def _write_lock(dest: Path, lock: dict):
    (dest / LOCK_NAME).write_text(json.dumps(lock, indent=1, sort_keys=True) + "\n")


def _quarantine(path: Path, dest: Path) -> Path:
    qdir = dest / "quarantine"
    qdir.mkdir(exist_ok=True)
    target = qdir / f"{path.name}.{int(time.time() * 1000)}"
    shutil.move(str(path), target)
    return target


def _download(url: str, retries: int, timeout: float, opener, sleep) -> bytes:
    last = None
    for attempt in range(retries):
        try:
            with opener(url, timeout=timeout) as resp:
                return resp.read()
        except (urllib.error.URLError, OSError, TimeoutError) as e:
            last = e
            log.warning("download %s failed (attempt %d/%d): %s", url, attempt + 1, retries, e)
            if attempt + 1 < retries:
                sleep(min(30.0, 2.0 ** attempt))
    raise DatasetError(f"could not download {url} after {retries} attempts: {last}")


def _extract(payload: bytes, member: str) -> bytes:
    with tarfile.open(fileobj=io.BytesIO(payload), mode="r:*") as tar:
        for info in tar.getmembers():
            if info.isfile() and Path(info.name).name == member:
                return tar.extractfile(info).read()
    raise DatasetError(f"archive has no member {member!r}")


def fetch_datasets(manifest=None, dest=None, offline: bool = False, retries: int = 3,
                   timeout: float = 60.0, strict: bool = True, opener=None, sleep=time.sleep) -> FetchReport:
    """Make every manifest entry present and verified under ``dest``.

    Verified files are never downloaded again.  A file whose checksum does
    not match is moved to ``dest/quarantine``.  In offline mode nothing is
    downloaded and missing files are listed in the error.
    """
    entries = load_manifest() if manifest is None else (load_manifest(manifest)
                                                        if isinstance(manifest, (str, Path)) else manifest)
    dest = cache_dir() if dest is None else Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    opener = urllib.request.urlopen if opener is None else opener
    lock = _read_lock(dest)
    report = FetchReport()
    for e in entries:
        name = e["name"]
        path = dest / name
        expected = e.get("sha256") or lock.get(name)
        if path.exists():
            digest = sha256_file(path)
            if expected is None:
                lock[name] = digest
                report.pinned.append(name)
                continue
            if digest == expected:
                report.verified.append(name)
                continue
            report.quarantined.append(str(_quarantine(path, dest)))
            log.warning("%s: cached file failed verification, quarantined", name)
        if offline:
            report.missing.append(name)
            continue
        try:
            payload = _download(e["url"], retries, timeout, opener, sleep)
            if e.get("member"):
                payload = _extract(payload, e["member"])
        except DatasetError as err:
            report.errors[name] = str(err)
            continue
        digest = hashlib.sha256(payload).hexdigest()
        path.write_bytes(payload)
        if expected is not None and digest != expected:
            report.quarantined.append(str(_quarantine(path, dest)))
            report.errors[name] = f"checksum mismatch: expected {expected}, got {digest}"
            continue
        if e.get("size") is not None and len(payload) != e["size"]:
            log.warning("%s: size %d differs from manifest %d", name, len(payload), e["size"])
        if expected is None:
            lock[name] = digest
            report.pinned.append(name)
        report.downloaded.append(name)
    _write_lock(dest, lock)
    if strict:
        if report.missing:
            raise OfflineError("offline and missing: " + ", ".join(report.missing), report)
        if report.errors:
            cls = ChecksumError if any("checksum" in v for v in report.errors.values()) else DatasetError
            raise cls("; ".join(f"{k}: {v}" for k, v in report.errors.items()), report)
    return report


def entry(name: str, manifest=None) -> dict:
    for e in load_manifest(manifest) if not isinstance(manifest, list) else manifest:
        if e["name"] == name:
            return e
    raise KeyError(f"dataset {name!r} not in manifest")


def load_dataset(name: str, dest=None, manifest=None) -> CoInstance:
    """Load a fetched dataset as a CoInstance (raises FileNotFoundError if absent)."""
    e = entry(name, manifest)
    path = (cache_dir() if dest is None else Path(dest)) / name
    if not path.exists():
        raise FileNotFoundError(f"{path} missing; run `satbridge fetch` first")
    return CoInstance(load_graph(path, e["format"]), e["kind"], name)
