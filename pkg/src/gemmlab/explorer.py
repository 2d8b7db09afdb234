"""Parameter sweeps over matrix order and work-group (tile) shape.

Observed on the original hardware: shapes ``(s_j, s_i)`` with ``s_j < s_i``
beat their transposes, which is what ``prefer_slim`` filters on. A weaker
pattern (``s_j = 1`` best for small groups, ``s_j = 4`` for large ones) is
hardware specific and deliberately not encoded as a rule.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Callable, Iterable, NamedTuple, Sequence

from .energy import PowerSensor
from .engine import LaunchConfig, TileShape
from .errors import ConfigError
from .harness import ExperimentPoint, run_point, skipped_point
from .registry import KernelRegistry, KernelSpec

log = logging.getLogger(__name__)

DEFAULT_ORDERS = (64, 96, 128, 192, 256, 384, 512, 640, 768, 896, 1024)
DEFAULT_TILE_ORDERS = (128, 256, 384, 512)
DEFAULT_TILE_TOTALS = (16, 32, 64, 128)

EXHAUSTIVE = "exhaustive"
PREFER_SLIM = "prefer_slim"
HEURISTICS = (EXHAUSTIVE, PREFER_SLIM)

# called with each finished (or skipped) point, e.g. to persist it
PointSink = Callable[[ExperimentPoint], None]


def _run_or_skip(config, registry, sensor, sink, run_kwargs):
    try:
        config.check()
    except ConfigError as exc:
        log.info("skipping %s n=%d tile=%s: %s", config.kernel.name, config.n, config.tile, exc)
        point = skipped_point(config, f"divisibility: {exc}")
    else:
        point = run_point(config, registry, sensor, **run_kwargs)
    if sink is not None:
        sink(point)
    return point


def explore_order(kernels: Sequence[KernelSpec], orders: Iterable[int], base: LaunchConfig,
                  registry: KernelRegistry, sensor: PowerSensor | None = None,
                  sink: PointSink | None = None, **run_kwargs) -> list[ExperimentPoint]:
    """One point per (kernel, order), kernels by name then orders ascending."""
    orders = sorted(set(orders))
    points = []
    for kernel in sorted(kernels, key=lambda k: k.name):
        for n in orders:
            config = replace(base, kernel=kernel, n=n)
            points.append(_run_or_skip(config, registry, sensor, sink, run_kwargs))
    return points


def enumerate_tile_shapes(total: int) -> list[TileShape]:
    if total < 1:
        raise ValueError(f"work-group size must be positive, got {total}")
    return [TileShape(s_j, total // s_j) for s_j in range(1, total + 1) if total % s_j == 0]


def candidate_shapes(total: int, heuristic: str = EXHAUSTIVE) -> list[TileShape]:
    shapes = enumerate_tile_shapes(total)
    if heuristic == EXHAUSTIVE:
        return shapes
    if heuristic == PREFER_SLIM:
        return [s for s in shapes if s.s_j <= s.s_i]
    raise ValueError(f"unknown heuristic {heuristic!r}; expected one of {HEURISTICS}")


def explore_tiles(kernel: KernelSpec, orders: Iterable[int] = DEFAULT_TILE_ORDERS,
                  totals: Iterable[int] = DEFAULT_TILE_TOTALS, heuristic: str = EXHAUSTIVE, *,
                  base: LaunchConfig | None = None, registry: KernelRegistry,
                  sensor: PowerSensor | None = None, sink: PointSink | None = None,
                  **run_kwargs) -> list[ExperimentPoint]:
    """Run every candidate shape for every (total, order).

    Points come out grouped by total, then shape (s_j ascending), then order,
    matching how the sweep is usually tabulated.
    """
    orders = sorted(set(orders))
    base = base or LaunchConfig(kernel=kernel, n=orders[0] if orders else 1)
    points = []
    for total in sorted(set(totals)):
        for shape in candidate_shapes(total, heuristic):
            for n in orders:
                config = replace(base, kernel=kernel, n=n, tile=shape)
                points.append(_run_or_skip(config, registry, sensor, sink, run_kwargs))
    return points


class Measurement(NamedTuple):
    tile: TileShape
    order: int
    mean: float


class Winner(NamedTuple):
    tile: TileShape
    mean: float


def _better(a: Measurement, b: Measurement) -> bool:
    """Higher mean wins; ties go to smaller s_j, then smaller total."""
    return (-a.mean, a.tile.s_j, a.tile.total) < (-b.mean, b.tile.s_j, b.tile.total)


def rank_tiles(measurements: Iterable[Measurement]) -> dict[tuple[int, int], Winner]:
    """Best shape per (order, total)."""
    best: dict[tuple[int, int], Measurement] = {}
    for m in measurements:
        key = (m.order, m.tile.total)
        if key not in best or _better(m, best[key]):
            best[key] = m
    return {k: Winner(m.tile, m.mean) for k, m in sorted(best.items())}


def best_per_order(measurements: Iterable[Measurement]) -> dict[int, Winner]:
    best: dict[int, Measurement] = {}
    for m in measurements:
        if m.order not in best or _better(m, best[m.order]):
            best[m.order] = m
    return {k: Winner(m.tile, m.mean) for k, m in sorted(best.items())}


def measurements_of(points: Iterable[ExperimentPoint]) -> list[Measurement]:
    return [Measurement(p.config.tile, p.config.n, p.mean) for p in points
            if not p.skipped and p.mean is not None]
