"""
Workers - ordered parallel map over episodes
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from exceptions.sbmcl_exceptions import ConfigException

logger = logging.getLogger(__name__)

NUM_THREADS_ENV = "SBMCL_NUM_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count(default: int = 1) -> int:
    """
    Thread count from SBMCL_NUM_THREADS.

    Raises:
        ConfigException: If the variable is set but not a positive integer
    """
    raw = os.environ.get(NUM_THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        count = int(raw)
    except ValueError:
        raise ConfigException(f"expected a positive integer, got {raw!r}", key=NUM_THREADS_ENV) from None
    if count < 1:
        raise ConfigException(f"expected a positive integer, got {raw!r}", key=NUM_THREADS_ENV)
    return count


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """
    Apply `fn` to every item and return results in item order.

    Each call must only read shared state, so the result does not depend on
    the worker count or on scheduling.
    """
    items = list(items)
    workers = workers if workers is not None else worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
