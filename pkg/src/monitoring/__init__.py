"""
Monitoring package for the Nehari fixed-point toolkit.
Provides Prometheus metrics for solver and verification activity.
"""

from .metrics import (
    get_metrics_collector,
    reset_metrics_collector,
    MetricsCollector,
    track_command_duration,
    track_hypothesis_check,
)

__all__ = [
    'get_metrics_collector',
    'reset_metrics_collector',
    'MetricsCollector',
    'track_command_duration',
    'track_hypothesis_check',
]
