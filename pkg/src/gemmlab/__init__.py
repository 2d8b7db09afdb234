"""Benchmarking and autotuning harness for square GEMM kernel variants."""

__version__ = "0.1.0"
