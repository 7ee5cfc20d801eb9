"""Mining and classification tooling for self-admitted technical debt
in scientific software: corpus extraction, normalization, an interpolated
per-artifact-head naive Bayes classifier, annotation-loop bookkeeping,
agreement statistics, and reporting.
"""

__version__ = "0.1.0"
