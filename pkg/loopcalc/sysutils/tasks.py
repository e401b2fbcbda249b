import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")


def _run_safely(fn: Callable[..., T], *args: Any, **kwargs: Any) -> T | None:
    """Execute a function and log any exception instead of raising it.

    A ``None`` result marks the failed task; callers decide how to count it.
    """
    try:
        return fn(*args, **kwargs)
    except Exception:
        logger.exception("Sample evaluation failed")
        return None


def map_in_order(fn: Callable[[Any], T], items: Iterable[Any], *, max_workers: int) -> list[T | None]:
    """Evaluate ``fn`` over ``items`` on a thread pool.

    Results come back in submission order regardless of completion order.
    """
    items = list(items)
    if not items:
        return []

    workers = max(1, int(max_workers))
    if workers == 1:
        return [_run_safely(fn, item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda item: _run_safely(fn, item), items))
