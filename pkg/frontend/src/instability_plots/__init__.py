"""Rendering of instability solver artifacts (CSV/JSON) into figures.

This package consumes only the documented artifact schemas; it shares no
in-process API with the solver package.
"""

__version__ = "0.1.0"
