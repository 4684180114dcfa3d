import os
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "CAVMAG_WORKERS"


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV, "").strip()
    if env and env != "auto":
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(func, items, workers: int | None = 1) -> list:
    """Ordered map over ``items``; results never depend on ``workers``."""
    items = list(items)
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(items) < 2:
        return [func(item) for item in items]
    chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunksize))
