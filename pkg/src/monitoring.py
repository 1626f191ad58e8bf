"""
PDNspot logging and evaluation statistics
Console logging on stderr, optional JSON log file, and counters/timings for sweeps
"""

import json
import logging
import statistics
import sys
import time
from collections import defaultdict
from contextlib import contextmanager
from datetime import datetime, timezone
from threading import Lock
from typing import Any, Dict, Iterator, List, Optional


_RECORD_FIELDS = frozenset(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message", "asctime"}


class JsonFormatter(logging.Formatter):
    """One JSON object per record; fields passed through `extra=` ride along"""

    def format(self, record):
        entry = {
            'timestamp': datetime.now(timezone.utc).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno
        }

        entry.update({k: v for k, v in vars(record).items() if k not in _RECORD_FIELDS and not k.startswith("_")})
        if record.exc_info:
            entry["exception"] = self.formatException(record.exc_info)
        return json.dumps(entry, default=str)


def setup_logging(level: str = "WARNING", log_file: Optional[str] = None) -> logging.Logger:
    """Configure the pdnspot logger tree; stdout stays free for reports"""
    logger = logging.getLogger('pdnspot')
    logger.setLevel(getattr(logging, str(level).upper(), logging.WARNING))
    logger.propagate = False
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
    logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(JsonFormatter())
        logger.addHandler(file_handler)

    return logger


class EvaluationStats:
    """Collects evaluation counts and durations across worker threads"""

    def __init__(self):
        self.counters: Dict[str, int] = defaultdict(int)
        self.histograms: Dict[str, List[float]] = defaultdict(list)
        self.lock = Lock()
        self.start_time = time.perf_counter()

    def increment(self, name: str, value: int = 1):
        with self.lock:
            self.counters[name] += value

    def observe(self, name: str, value: float):
        with self.lock:
            self.histograms[name].append(value)

    @contextmanager
    def timed(self, name: str = 'evaluation') -> Iterator[None]:
        started = time.perf_counter()
        try:
            yield
        finally:
            self.observe(f'{name}.seconds', time.perf_counter() - started)
            self.increment(name)

    def get_counter(self, name: str) -> int:
        return self.counters.get(name, 0)

    def get_histogram_stats(self, name: str) -> Dict[str, float]:
        """Get histogram statistics"""
        values = self.histograms.get(name, [])
        if not values:
            return {}

        return {
            'count': len(values),
            'mean': statistics.mean(values),
            'median': statistics.median(values),
            'min': min(values),
            'max': max(values),
            'stddev': statistics.stdev(values) if len(values) > 1 else 0
        }

    def summary(self) -> str:
        with self.lock:
            parts = [f"{name}={count}" for name, count in sorted(self.counters.items())]
            for name in sorted(self.histograms):
                stats = self.get_histogram_stats(name)
                parts.append(f"{name}: mean={stats['mean'] * 1e3:.3f}ms max={stats['max'] * 1e3:.3f}ms")
        return ", ".join(parts) or "no evaluations"

    def to_dict(self) -> Dict[str, Any]:
        with self.lock:
            return {
                'elapsed': time.perf_counter() - self.start_time,
                'counters': dict(self.counters),
                'histograms': {name: self.get_histogram_stats(name) for name in self.histograms}
            }
