"""Order-preserving thread fan-out."""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    threads: int = 1,
    on_done: Optional[Callable[[R], None]] = None
) -> List[R]:
    """Apply fn to every item, returning results in input order.

    Args:
        fn: Function to apply
        items: Inputs
        threads: Worker count; 1 runs inline
        on_done: Called in input order as each result becomes available

    Returns:
        Results aligned with items
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        results = []
        for item in items:
            result = fn(item)
            if on_done is not None:
                on_done(result)
            results.append(result)
        return results

    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, item) for item in items]
        results = []
        for future in futures:
            result = future.result()
            if on_done is not None:
                on_done(result)
            results.append(result)
        return results
