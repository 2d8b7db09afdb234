"""Element-wise result validation against the reference oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

DEFAULT_EPSILON = 0.1


@dataclass(frozen=True)
class ValidationReport:
    max_abs_diff: float
    epsilon: float
    match: bool

    def to_json_dict(self) -> dict:
        return {"max_abs_diff": self.max_abs_diff, "epsilon": self.epsilon, "match": self.match}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ValidationReport":
        return cls(float(obj["max_abs_diff"]), float(obj["epsilon"]), bool(obj["match"]))


def max_abs_diff(result, reference) -> float:
    """Largest |result - reference| in double precision; +inf if anything is not finite."""
    x = np.asarray(result)
    y = np.asarray(reference)
    if x.shape != y.shape:
        raise DimensionMismatch(f"result shape {x.shape} != reference shape {y.shape}")
    if x.size == 0:
        return 0.0
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        return math.inf
    return float(np.max(np.abs(x - y)))


def validate(result, reference, epsilon: float = DEFAULT_EPSILON) -> ValidationReport:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    diff = max_abs_diff(result, reference)
    return ValidationReport(diff, float(epsilon), diff <= epsilon)
