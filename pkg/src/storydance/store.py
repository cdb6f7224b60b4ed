"""Content-addressed on-disk JSON record store.

Every write goes through a temp file and an atomic rename, so a crashed
process never leaves a partially visible record. Records are immutable
JSON documents keyed by content hash; performances store their compiled
clip alongside a small meta document.
"""
from __future__ import annotations

import json
import threading
from contextlib import contextmanager
from pathlib import Path

from .jsonio import dumps_canonical_bytes, write_atomic


class RecordStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        (self.root / "dances").mkdir(parents=True, exist_ok=True)
        (self.root / "performances").mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    @contextmanager
    def lock(self, dance_id: str):
        """Serializes writers per dance id; readers stay lock-free."""
        with self._registry_lock:
            lock = self._locks.setdefault(dance_id, threading.Lock())
        with lock:
            yield

    # -- dances -------------------------------------------------------------

    def _dance_path(self, dance_id: str) -> Path:
        return self.root / "dances" / f"{dance_id}.json"

    def save_dance(self, record: dict) -> None:
        write_atomic(self._dance_path(record["dance_id"]),
                     dumps_canonical_bytes(record))

    def load_dance(self, dance_id: str) -> dict | None:
        path = self._dance_path(dance_id)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return json.load(fh)
        except FileNotFoundError:
            return None

    def list_dances(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "dances").glob("*.json"))

    # -- performances ---------------------------------------------------------

    def _perf_path(self, perf_id: str, kind: str) -> Path:
        return self.root / "performances" / f"{perf_id}.{kind}.json"

    def save_performance(self, perf_id: str, clip_doc: dict, meta: dict) -> None:
        write_atomic(self._perf_path(perf_id, "clip"),
                     dumps_canonical_bytes(clip_doc))
        write_atomic(self._perf_path(perf_id, "meta"),
                     dumps_canonical_bytes(meta))

    def load_performance(self, perf_id: str) -> tuple[dict, dict] | None:
        try:
            with open(self._perf_path(perf_id, "clip"), encoding="utf-8") as fh:
                clip_doc = json.load(fh)
            with open(self._perf_path(perf_id, "meta"), encoding="utf-8") as fh:
                meta = json.load(fh)
        except FileNotFoundError:
            return None
        return clip_doc, meta

    def has_performance(self, perf_id: str) -> bool:
        return self._perf_path(perf_id, "clip").exists() and \
            self._perf_path(perf_id, "meta").exists()
