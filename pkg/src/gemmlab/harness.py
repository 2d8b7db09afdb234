"""Run one experiment point: R timed repetitions, validation, statistics, energy."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import platform
import statistics
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__, engine
from .energy import EnergyEstimate, PowerSensor, estimate_energy
from .engine import LaunchConfig, TileShape, flops_for
from .errors import ConfigError, EmptyInput, SensorError
from .registry import KernelRegistry, KernelSpec
from .validation import DEFAULT_EPSILON, ValidationReport, validate

log = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_SKIPPED = "skipped"


def compute_stats(values: Sequence[float]) -> tuple[float, float | None]:
    """Arithmetic mean and sample standard deviation (n - 1 denominator).

    The deviation is ``None`` for fewer than two values.
    """
    values = [float(v) for v in values]
    if not values:
        raise EmptyInput("cannot compute statistics of an empty sequence")
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else None
    return mean, std


def config_to_json_dict(config: LaunchConfig) -> dict:
    return {
        "kernel": config.kernel.to_json_dict(),
        "n": config.n,
        "tile": [config.tile.s_j, config.tile.s_i],
        "repetitions": config.repetitions,
        "seed": config.seed,
        "alpha": config.alpha,
        "beta": config.beta,
    }


def config_from_json_dict(obj: dict) -> LaunchConfig:
    s_j, s_i = obj["tile"]
    return LaunchConfig(
        kernel=KernelSpec.from_json_dict(obj["kernel"]),
        n=int(obj["n"]),
        tile=TileShape(int(s_j), int(s_i)),
        repetitions=int(obj["repetitions"]),
        seed=int(obj["seed"]),
        alpha=float(obj["alpha"]),
        beta=float(obj["beta"]),
    )


def point_id_for(config: LaunchConfig) -> str:
    """16 hex digits derived from the configuration alone."""
    canonical = json.dumps(
        {
            "kernel": config.kernel.name,
            "precision": config.kernel.precision,
            "n": config.n,
            "tile": [config.tile.s_j, config.tile.s_i],
            "seed": config.seed,
            "alpha": config.alpha,
            "beta": config.beta,
            "repetitions": config.repetitions,
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def collect_environment() -> dict:
    import numba

    return {
        "os": platform.system(),
        "os_release": platform.release(),
        "platform": platform.platform(),
        "machine": platform.machine(),
        "processor": platform.processor() or platform.machine(),
        "cpu_count": os.cpu_count(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba.__version__,
        "tool_version": __version__,
    }


@dataclass
class ExperimentPoint:
    point_id: str
    config: LaunchConfig
    gflops_per_rep: list[float] = field(default_factory=list)
    mean: float | None = None
    std: float | None = None
    validations: list[ValidationReport] = field(default_factory=list)
    # one list of per-channel estimates per repetition; empty without a sensor
    energy: list[list[EnergyEstimate]] = field(default_factory=list)
    environment: dict = field(default_factory=dict)
    elapsed_per_rep: list[float] = field(default_factory=list)
    sensor_errors: list[list[str]] = field(default_factory=list)
    problem_digest: str | None = None
    result_digests: list[str] = field(default_factory=list)
    status: str = STATUS_OK
    skip_reason: str | None = None
    replay_counter: int = 0

    @property
    def all_matched(self) -> bool:
        return all(v.match for v in self.validations)

    @property
    def skipped(self) -> bool:
        return self.status == STATUS_SKIPPED

    def to_json_dict(self) -> dict:
        return {
            "point_id": self.point_id,
            "replay_counter": self.replay_counter,
            "status": self.status,
            "skip_reason": self.skip_reason,
            "config": config_to_json_dict(self.config),
            "gflops_per_rep": list(self.gflops_per_rep),
            "elapsed_per_rep": list(self.elapsed_per_rep),
            "mean": self.mean,
            "std": self.std,
            "validations": [v.to_json_dict() for v in self.validations],
            "energy": [[e.to_json_dict() for e in rep] for rep in self.energy],
            "sensor_errors": [list(errs) for errs in self.sensor_errors],
            "problem_digest": self.problem_digest,
            "result_digests": list(self.result_digests),
            "environment": dict(self.environment),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ExperimentPoint":
        return cls(
            point_id=obj["point_id"],
            config=config_from_json_dict(obj["config"]),
            gflops_per_rep=[float(v) for v in obj.get("gflops_per_rep", [])],
            mean=obj.get("mean"),
            std=obj.get("std"),
            validations=[ValidationReport.from_json_dict(v) for v in obj.get("validations", [])],
            energy=[[EnergyEstimate.from_json_dict(e) for e in rep] for rep in obj.get("energy", [])],
            environment=dict(obj.get("environment", {})),
            elapsed_per_rep=[float(v) for v in obj.get("elapsed_per_rep", [])],
            sensor_errors=[list(errs) for errs in obj.get("sensor_errors", [])],
            problem_digest=obj.get("problem_digest"),
            result_digests=list(obj.get("result_digests", [])),
            status=obj.get("status", STATUS_OK),
            skip_reason=obj.get("skip_reason"),
            replay_counter=int(obj.get("replay_counter", 0)),
        )


def skipped_point(config: LaunchConfig, reason: str, environment: dict | None = None) -> ExperimentPoint:
    return ExperimentPoint(
        point_id=point_id_for(config),
        config=config,
        environment=dict(environment or {}),
        status=STATUS_SKIPPED,
        skip_reason=reason,
    )


def _digest(m: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(m).tobytes()).hexdigest()[:16]


def _read_all(sensor, errors):
    samples = {}
    for channel in sensor.channels:
        try:
            samples[channel] = sensor.read(channel)
        except SensorError as exc:
            errors.append(str(exc))
    return samples


def run_point(config: LaunchConfig, registry: KernelRegistry, sensor: PowerSensor | None = None, *,
              epsilon: float = DEFAULT_EPSILON, warmup: bool = False, environment: dict | None = None,
              tile_depth: int = engine.TILE_DEPTH) -> ExperimentPoint:
    spec = registry.get(config.kernel.name)
    if spec != config.kernel:
        raise ConfigError(f"kernel {spec.name!r} in the registry differs from the one in the configuration")
    engine.variant_of(spec)
    config.check()

    problem = engine.generate_problem(config.n, config.seed, config.alpha, config.beta, spec.precision)
    reference = engine.reference_gemm(problem, spec.flavour)
    engine.precompile(spec, config, problem, tile_depth)
    if warmup:
        engine.run_kernel(spec, config, problem, tile_depth)

    point = ExperimentPoint(point_id=point_id_for(config), config=config,
                            environment={**collect_environment(), **(environment or {})},
                            problem_digest=problem.digest())
    flops = flops_for(config.n)
    for rep in range(config.repetitions):
        errors: list[str] = []
        start = _read_all(sensor, errors) if sensor is not None else {}
        result, elapsed = engine.run_kernel(spec, config, problem, tile_depth)
        end = _read_all(sensor, errors) if sensor is not None else {}

        point.elapsed_per_rep.append(elapsed)
        point.gflops_per_rep.append(flops / elapsed / 1e9 if elapsed > 0 else math.inf)
        point.validations.append(validate(result, reference, epsilon))
        point.result_digests.append(_digest(result))
        if sensor is not None:
            point.energy.append([estimate_energy(start[ch], end[ch], elapsed)
                                 for ch in sensor.channels if ch in start and ch in end])
            point.sensor_errors.append(errors)
            for msg in errors:
                log.warning("repetition %d: %s", rep, msg)

    point.mean, point.std = compute_stats(point.gflops_per_rep)
    return point
