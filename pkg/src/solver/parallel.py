"""
Ordered data-parallel map over independent work items.
"""
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Generic, Iterable, List, Tuple, TypeVar

from ..logging_config import get_logger
from ..monitoring.metrics import CounterSnapshot, get_metrics_collector, reset_metrics_collector

logger = get_logger(__name__, component="parallel")

T = TypeVar("T")
R = TypeVar("R")


class _CountedTask(Generic[T, R]):
    """Runs ``fn`` in a worker and returns its result with the counters it recorded."""

    def __init__(self, fn: Callable[[T], R]):
        self.fn = fn

    def __call__(self, item: T) -> Tuple[R, CounterSnapshot]:
        collector = reset_metrics_collector()
        result = self.fn(item)
        return result, collector.counter_snapshot()


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """
    Apply ``fn`` to every item and return results in input order.

    With more than one worker the items are spread over a process pool;
    ``fn`` and the items must then be picklable. Results never depend on the
    worker count. Counters recorded in workers are added to the parent's
    collector; histograms and gauges stay in the worker.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    pool_size = min(workers, len(items))
    logger.debug("Dispatching work items", items=len(items), workers=pool_size)
    with ProcessPoolExecutor(max_workers=pool_size) as pool:
        pairs = list(pool.map(_CountedTask(fn), items))

    collector = get_metrics_collector()
    for _, snapshot in pairs:
        collector.merge_counters(snapshot)
    return [result for result, _ in pairs]
