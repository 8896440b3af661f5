"""Synthetic spatial-affordance data generation and points-in-mask evaluation."""

__version__ = "0.1.0"
