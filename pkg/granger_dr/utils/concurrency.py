import logging
from concurrent import futures

from granger_dr.config.config import RuntimeConfig

logger = logging.getLogger(__name__)


def resolve_workers(max_workers=None):
    if max_workers is None:
        max_workers = RuntimeConfig().MAX_WORKERS
    return max(1, int(max_workers))


def imap_ordered(fn, items, max_workers=None):
    """Yield ``(item, result)`` in input order as soon as each result is ready."""
    items = list(items)
    workers = min(resolve_workers(max_workers), max(1, len(items)))
    if workers == 1:
        for item in items:
            yield item, fn(item)
        return

    with futures.ThreadPoolExecutor(max_workers=workers) as executor:
        pending = [(item, executor.submit(fn, item)) for item in items]
        try:
            for item, future in pending:
                yield item, future.result()
        finally:
            for _, future in pending:
                future.cancel()


def map_ordered(fn, items, max_workers=None):
    """Apply ``fn`` to every item, returning results in input order.

    The first exception raised by any call propagates; the remaining work is
    cancelled.
    """
    items = list(items)
    workers = min(resolve_workers(max_workers), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]

    logger.debug(f"Running {len(items)} tasks on {workers} threads")
    with futures.ThreadPoolExecutor(max_workers=workers) as executor:
        pending = [executor.submit(fn, item) for item in items]
        try:
            return [future.result() for future in pending]
        except BaseException:
            for future in pending:
                future.cancel()
            raise
