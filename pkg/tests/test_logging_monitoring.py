"""
Tests for logging and monitoring functionality.
"""

import logging

import numpy as np
import pytest
from prometheus_client import CollectorRegistry

from src.logging_config import LogConfig, TimedOperation, get_logger, round_floats, setup_logging
from src.monitoring.metrics import (
    MetricsCollector,
    get_metrics_collector,
    reset_metrics_collector,
    track_command_duration,
    track_hypothesis_check,
)
from src.solver.parallel import ordered_map
from src.verification.hypotheses import HypothesisReport, Verdict


class TestLogConfig:
    """Test logging configuration."""

    def test_default_config(self, monkeypatch):
        """Test default logging configuration."""
        for name in ('LOG_LEVEL', 'LOG_FORMAT', 'ENABLE_FILE_LOGGING', 'MAX_LOG_SIZE_MB', 'LOG_BACKUP_COUNT'):
            monkeypatch.delenv(name, raising=False)

        config = LogConfig()

        assert config.log_level == 'WARNING'
        assert config.log_format == 'console'
        assert config.enable_file_logging is False
        assert config.max_log_size == 20 * 1024 * 1024
        assert config.backup_count == 3

    def test_environment_config(self, monkeypatch, tmp_path):
        """Test configuration from environment variables."""
        monkeypatch.setenv('LOG_LEVEL', 'debug')
        monkeypatch.setenv('LOG_FORMAT', 'json')
        monkeypatch.setenv('ENABLE_FILE_LOGGING', 'true')
        monkeypatch.setenv('LOG_DIR', str(tmp_path / 'logs'))
        monkeypatch.setenv('MAX_LOG_SIZE_MB', '50')

        config = LogConfig()

        assert config.log_level == 'DEBUG'
        assert config.log_format == 'json'
        assert config.enable_file_logging is True
        assert config.max_log_size == 50 * 1024 * 1024
        assert (tmp_path / 'logs').is_dir()


class TestStructuredLogging:
    """Test structured logging functionality."""

    def test_get_logger(self):
        """Test logger creation with and without a component."""
        assert get_logger(__name__) is not None
        assert get_logger(__name__, component="test") is not None

    def test_round_floats(self):
        """Test numpy scalars are turned into plain Python numbers."""
        event = round_floats(None, 'info', {'residual': np.float64(1e-9), 'count': 3, 'values': np.zeros(2)})

        assert type(event['residual']) is float
        assert event['count'] == 3
        assert isinstance(event['values'], np.ndarray)

    def test_timed_operation(self):
        """Test timed operation records a duration."""
        logger = get_logger(__name__)

        with TimedOperation(logger, "test_operation", seed=0) as timer:
            pass

        assert timer.duration is not None
        assert timer.duration >= 0

    def test_timed_operation_propagates_errors(self):
        """Test failures inside a timed operation are not swallowed."""
        logger = get_logger(__name__)

        with pytest.raises(RuntimeError):
            with TimedOperation(logger, "failing_operation") as timer:
                raise RuntimeError("boom")
        assert timer.duration is not None

    def test_file_logging(self, monkeypatch, tmp_path):
        """Test file logging creates the application and solver logs."""
        monkeypatch.setenv('ENABLE_FILE_LOGGING', 'true')
        monkeypatch.setenv('LOG_DIR', str(tmp_path))
        root = logging.getLogger()
        solver = logging.getLogger('src.solver')
        before_root, before_solver = list(root.handlers), list(solver.handlers)

        try:
            setup_logging(LogConfig())
            assert (tmp_path / 'nehari.log').exists()
            assert (tmp_path / 'solver.log').exists()
        finally:
            for handler in set(root.handlers) - set(before_root):
                root.removeHandler(handler)
                handler.close()
            for handler in set(solver.handlers) - set(before_solver):
                solver.removeHandler(handler)
                handler.close()


class TestMetricsCollector:
    """Test metrics collection functionality."""

    def setup_method(self):
        """Set up test fixtures."""
        self.collector = MetricsCollector(CollectorRegistry())

    def test_initialization(self):
        """Test metrics collector initialization."""
        assert self.collector.registry is not None
        assert 'nehari_toolkit_info' in self.collector.get_metrics()

    def test_solver_metrics(self):
        """Test potential, t_v search and solve metrics."""
        self.collector.record_potential_evaluation('hammerstein-kernel')
        self.collector.record_tv_search('interior')
        self.collector.record_nehari_solve(12, True, 3e-10)

        output = self.collector.get_metrics()
        assert 'radial_potential_evaluations_total{operator="hammerstein-kernel"} 1.0' in output
        assert 'tv_searches_total{outcome="interior"} 1.0' in output
        assert 'nehari_solves_total{status="converged"} 1.0' in output
        assert 'nehari_last_residual 3e-10' in output

    def test_unconverged_solve_keeps_last_residual(self):
        """Test a solve without a residual leaves the gauge alone."""
        self.collector.record_nehari_solve(5, True, 0.5)
        self.collector.record_nehari_solve(500, False, None)

        output = self.collector.get_metrics()
        assert 'nehari_solves_total{status="not_converged"} 1.0' in output
        assert 'nehari_last_residual 0.5' in output

    def test_verification_metrics(self):
        """Test hypothesis verdict counters."""
        self.collector.record_hypothesis_check('h1', 'sampled-pass')
        self.collector.record_hypothesis_check('h1', 'sampled-pass')

        output = self.collector.get_metrics()
        assert 'hypothesis_checks_total{condition="h1",verdict="sampled-pass"} 2.0' in output

    def test_write_metrics(self, tmp_path):
        """Test the exposition is written to a file."""
        self.collector.record_command_duration('solve', 0.2)
        path = self.collector.write_metrics(tmp_path / 'metrics.prom')

        assert 'command_duration_seconds_count{command="solve"} 1.0' in path.read_text(encoding='utf-8')

    def test_counter_snapshot_and_merge(self):
        """Test counters copied from one collector add onto another."""
        self.collector.record_potential_evaluation('kernel')
        self.collector.record_potential_evaluation('kernel')
        self.collector.record_tv_search('interior')
        snapshot = self.collector.counter_snapshot()

        target = MetricsCollector(registry=CollectorRegistry())
        target.record_tv_search('interior')
        target.merge_counters(snapshot)

        output = target.get_metrics()
        assert 'radial_potential_evaluations_total{operator="kernel"} 2.0' in output
        assert 'tv_searches_total{outcome="interior"} 2.0' in output


class TestGlobalCollector:
    """Test the process-wide collector and its helpers."""

    def setup_method(self):
        """Set up test fixtures."""
        self.collector = reset_metrics_collector()

    def test_singleton(self):
        """Test the global collector is reused until reset."""
        assert get_metrics_collector() is self.collector
        assert reset_metrics_collector() is not self.collector

    def test_track_hypothesis_check(self):
        """Test the decorator counts the returned verdict under the report's condition."""
        @track_hypothesis_check("scaling")
        def check():
            return HypothesisReport("h4", Verdict.FAIL)

        assert check().condition == "h4"
        output = get_metrics_collector().get_metrics()
        assert 'hypothesis_checks_total{condition="h4",verdict="fail"} 1.0' in output

    def test_track_command_duration(self):
        """Test command durations are observed even when the command raises."""
        with pytest.raises(ValueError):
            with track_command_duration('verify'):
                raise ValueError("bad")

        output = get_metrics_collector().get_metrics()
        assert 'command_duration_seconds_count{command="verify"} 1.0' in output


def count_evaluation(item):
    get_metrics_collector().record_potential_evaluation('kernel')
    return item * item


class TestWorkerCounters:
    """Test counters recorded in worker processes reach the parent collector."""

    def setup_method(self):
        """Set up test fixtures."""
        self.collector = reset_metrics_collector()

    def test_counters_survive_process_pool(self):
        """Test every item counted in a worker shows up once in the parent."""
        results = ordered_map(count_evaluation, range(6), workers=2)

        assert results == [0, 1, 4, 9, 16, 25]
        output = get_metrics_collector().get_metrics()
        assert 'radial_potential_evaluations_total{operator="kernel"} 6.0' in output

    def test_serial_map_counts_in_place(self):
        """Test one worker records straight into the global collector."""
        ordered_map(count_evaluation, range(3), workers=1)

        output = get_metrics_collector().get_metrics()
        assert 'radial_potential_evaluations_total{operator="kernel"} 3.0' in output
