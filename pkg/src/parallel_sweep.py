"""
Ordered thread-pool evaluation for sweeps and table builds
Results and the first failure come back in input order; one worker runs inline.
"""

import concurrent.futures
import logging
from typing import Callable, Iterable, List, Sequence, TypeVar

from monitoring import EvaluationStats

logger = logging.getLogger("pdnspot.sweep")

T = TypeVar("T")
R = TypeVar("R")


class ParallelEvaluator:
    """Runs independent evaluations on a thread pool and hands results back in input order"""

    def __init__(self, max_workers: int = 4, stats: EvaluationStats = None):
        if max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {max_workers}")
        self.max_workers = max_workers
        self.stats = stats

    def map_ordered(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        cells: Sequence[T] = list(items)
        if self.max_workers == 1 or len(cells) <= 1:
            return [self._run_single(fn, cell) for cell in cells]

        with concurrent.futures.ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = [executor.submit(self._run_single, fn, cell) for cell in cells]

            # first failure in input order wins
            results = []
            for future in futures:
                results.append(future.result())
            return results

    def _run_single(self, fn: Callable[[T], R], cell: T) -> R:
        if self.stats is None:
            return fn(cell)
        with self.stats.timed():
            return fn(cell)
