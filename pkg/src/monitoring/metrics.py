"""
Metrics collection for the Nehari fixed-point toolkit using Prometheus.
Tracks radial-potential evaluations, t_v searches, Nehari iterations and
hypothesis checks.
"""

import time
import functools
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union
from contextlib import contextmanager

from prometheus_client import (
    Counter, Histogram, Gauge, Info,
    CollectorRegistry, generate_latest
)
import structlog

logger = structlog.get_logger(__name__)

# Counters that worker processes hand back to the parent
COUNTER_ATTRIBUTES = (
    'potential_evaluations_total',
    'tv_searches_total',
    'nehari_solves_total',
    'hypothesis_checks_total',
)

CounterSnapshot = List[Tuple[str, dict, float]]


class MetricsCollector:
    """Central metrics collector for solver activity."""

    def __init__(self, registry: Optional[CollectorRegistry] = None):
        """
        Initialize metrics collector.

        Args:
            registry: Prometheus registry, a private one if None
        """
        self.registry = registry or CollectorRegistry()
        self._setup_metrics()
        logger.debug("Metrics collector initialized")

    def _setup_metrics(self):
        """Set up all Prometheus metrics."""

        self.app_info = Info(
            'nehari_toolkit_info',
            'Toolkit information',
            registry=self.registry
        )
        self.app_info.info({
            'version': '1.0.0',
            'service': 'nehari-fixed-point',
            'component': 'metrics'
        })

        # Radial energy metrics
        self.potential_evaluations_total = Counter(
            'radial_potential_evaluations_total',
            'Total number of radial potential evaluations',
            ['operator'],
            registry=self.registry
        )

        self.tv_searches_total = Counter(
            'tv_searches_total',
            'Total number of per-direction maximizer searches',
            ['outcome'],
            registry=self.registry
        )

        # Solver metrics
        self.nehari_iterations = Histogram(
            'nehari_iterations',
            'Direction iterations used per Nehari solve',
            buckets=[0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000],
            registry=self.registry
        )

        self.nehari_solves_total = Counter(
            'nehari_solves_total',
            'Total number of Nehari solves',
            ['status'],
            registry=self.registry
        )

        self.last_residual = Gauge(
            'nehari_last_residual',
            'Fixed-point residual of the most recent solve',
            registry=self.registry
        )

        # Verification metrics
        self.hypothesis_checks_total = Counter(
            'hypothesis_checks_total',
            'Total number of hypothesis checks',
            ['condition', 'verdict'],
            registry=self.registry
        )

        # Command metrics
        self.command_duration_seconds = Histogram(
            'command_duration_seconds',
            'Time spent running a CLI command',
            ['command'],
            buckets=[0.1, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0, 60.0, 120.0, 300.0],
            registry=self.registry
        )

    def record_potential_evaluation(self, operator: str):
        """Record one radial potential evaluation."""
        self.potential_evaluations_total.labels(operator=operator).inc()

    def record_tv_search(self, outcome: str):
        """Record a t_v search with its outcome (interior, boundary, ambiguous)."""
        self.tv_searches_total.labels(outcome=outcome).inc()

    def record_nehari_solve(self, iterations: int, converged: bool, residual: Optional[float]):
        """Record a finished Nehari solve."""
        self.nehari_iterations.observe(iterations)
        self.nehari_solves_total.labels(status='converged' if converged else 'not_converged').inc()
        if residual is not None:
            self.last_residual.set(residual)

    def record_hypothesis_check(self, condition: str, verdict: str):
        """Record a hypothesis check verdict."""
        self.hypothesis_checks_total.labels(condition=condition, verdict=verdict).inc()

    def record_command_duration(self, command: str, duration: float):
        """Record how long a CLI command took."""
        self.command_duration_seconds.labels(command=command).observe(duration)

    def get_metrics(self) -> str:
        """Get all metrics in Prometheus format."""
        return generate_latest(self.registry).decode('utf-8')

    def counter_snapshot(self) -> CounterSnapshot:
        """Non-zero counter values as (attribute, labels, value) rows."""
        rows: CounterSnapshot = []
        for attribute in COUNTER_ATTRIBUTES:
            for metric in getattr(self, attribute).collect():
                for sample in metric.samples:
                    if sample.name.endswith('_total') and sample.value:
                        rows.append((attribute, dict(sample.labels), sample.value))
        return rows

    def merge_counters(self, snapshot: CounterSnapshot):
        """Add counter values recorded by another process."""
        for attribute, labels, value in snapshot:
            getattr(self, attribute).labels(**labels).inc(value)

    def write_metrics(self, path: Union[str, Path]) -> Path:
        """Write the Prometheus text exposition to ``path``."""
        path = Path(path)
        path.write_text(self.get_metrics(), encoding='utf-8')
        return path


# Global metrics collector instance
_metrics_collector: Optional[MetricsCollector] = None


def get_metrics_collector() -> MetricsCollector:
    """Get the global metrics collector instance."""
    global _metrics_collector
    if _metrics_collector is None:
        _metrics_collector = MetricsCollector()
    return _metrics_collector


def reset_metrics_collector() -> MetricsCollector:
    """Replace the global collector with a fresh one; every CLI run starts here."""
    global _metrics_collector
    _metrics_collector = MetricsCollector()
    return _metrics_collector


def track_hypothesis_check(condition: str):
    """Decorator recording the verdict of a function returning a HypothesisReport."""
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            report = func(*args, **kwargs)
            get_metrics_collector().record_hypothesis_check(
                getattr(report, 'condition', condition),
                str(getattr(getattr(report, 'verdict', None), 'value', 'unknown'))
            )
            return report

        return wrapper

    return decorator


@contextmanager
def track_command_duration(command: str):
    """Context manager to track the duration of a CLI command."""
    metrics = get_metrics_collector()
    start_time = time.time()

    try:
        yield
    finally:
        duration = time.time() - start_time
        metrics.record_command_duration(command, duration)
