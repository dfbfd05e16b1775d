"""Flaky-test labeling, vocabulary-based flakiness prediction and root-cause ranking."""

__version__ = "0.1.0"
