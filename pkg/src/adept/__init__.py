"""Evolutionary search over complete combinatorial-optimization solver
programs, with LLM-backed variation, dependency repair and sandboxed
multi-scale evaluation."""

__version__ = "0.1.0"
