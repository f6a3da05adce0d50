"""
Bounded worker pool for per-recording work
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from ..config.settings import settings

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """
    Apply ``func`` to every item on a thread pool

    Results come back in input order whatever the scheduling, so callers
    that sort their items first get deterministic output.

    Args:
        func: Work function
        items: Work items
        workers: Pool size (defaults to ``PIPELINE_WORKERS``)

    Returns:
        List of results in input order
    """
    items = list(items)
    size = workers if workers is not None else settings.workers
    if size <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(size, len(items))) as executor:
        return list(executor.map(func, items))
