"""Steering-vector laboratory: in-context vectors and function vectors on a
small hookable transformer, with the evaluation protocol to compare them."""

__version__ = "0.1.0"
