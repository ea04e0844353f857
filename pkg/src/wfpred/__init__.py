"""Workload failure prediction for batch clusters.

Ingest job-accounting traces, label failures, build queue-time and runtime
classifiers, and simulate proactive kills of jobs predicted to fail.
"""

__version__ = "0.1.0"
