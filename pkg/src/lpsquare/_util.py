"""Small shared helpers: deterministic JSON reports and a thread-capped map."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone


def worker_count() -> int:
    """Parallelism cap from LPSQ_THREADS (default 1: serial, bit-stable)."""
    raw = os.environ.get("LPSQ_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, min(n, os.cpu_count() or 1))


def parallel_map(fn, items):
    """Order-preserving map over independent pure calls; parallel only when
    LPSQ_THREADS allows, so aggregation stays deterministic either way."""
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def utc_stamp() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def write_report(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
