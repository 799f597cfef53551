import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    """Worker cap from ``SPECGAP_THREADS`` (default: CPU count, at most 4)."""
    raw = os.environ.get("SPECGAP_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, min(4, os.cpu_count() or 1))


def ordered_map(fn, items):
    """``list(map(fn, items))``, possibly threaded; output order is input order."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
