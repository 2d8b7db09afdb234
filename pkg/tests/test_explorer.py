import pytest
from hypothesis import given
from hypothesis import strategies as st

from gemmlab.engine import LaunchConfig, TileShape
from gemmlab.explorer import (EXHAUSTIVE, PREFER_SLIM, Measurement, Winner, best_per_order, candidate_shapes,
                              enumerate_tile_shapes, explore_order, explore_tiles, measurements_of, rank_tiles)
from gemmlab.registry import Flavour

from published import LWS_SWEEP


def shapes(pairs):
    return [TileShape(j, i) for j, i in pairs]


def test_enumerate_16():
    assert enumerate_tile_shapes(16) == shapes([(1, 16), (2, 8), (4, 4), (8, 2), (16, 1)])


def test_enumerate_1():
    assert enumerate_tile_shapes(1) == [TileShape(1, 1)]


def test_enumerate_32_covers_published_shapes():
    got = enumerate_tile_shapes(32)
    assert got == shapes([(1, 32), (2, 16), (4, 8), (8, 4), (16, 2), (32, 1)])
    published = {(j, i) for t, j, i, *_ in LWS_SWEEP if t == 32}
    assert published == {(s.s_j, s.s_i) for s in got} - {(32, 1)}


@given(st.integers(1, 2000))
def test_enumeration_is_divisor_complete(total):
    got = enumerate_tile_shapes(total)
    assert len(got) == sum(1 for d in range(1, total + 1) if total % d == 0)
    assert all(s.total == total for s in got)
    assert [s.s_j for s in got] == sorted(s.s_j for s in got)


@given(st.integers(1, 2000))
def test_prefer_slim_is_subset(total):
    slim = candidate_shapes(total, PREFER_SLIM)
    assert set(slim) <= set(candidate_shapes(total, EXHAUSTIVE))
    assert all(s.s_j <= s.s_i for s in slim)


def test_prefer_slim_16():
    assert candidate_shapes(16, PREFER_SLIM) == shapes([(1, 16), (2, 8), (4, 4)])


def test_unknown_heuristic():
    with pytest.raises(ValueError):
        candidate_shapes(16, "random")


def published_measurements():
    return [Measurement(TileShape(j, i), n, mean) for _, j, i, n, _, mean, _ in LWS_SWEEP]


def test_published_ranking_prefers_slim_shape():
    winners = rank_tiles(published_measurements())
    assert winners[(128, 16)] == Winner(TileShape(1, 16), 11.789)
    for n in (128, 256, 384, 512):
        assert winners[(n, 16)].tile == TileShape(1, 16)


def test_published_best_overall():
    best = best_per_order(published_measurements())
    assert best[128] == Winner(TileShape(1, 16), 11.789)


def test_tie_breaks():
    ms = [Measurement(TileShape(4, 4), 64, 1.0), Measurement(TileShape(2, 8), 64, 1.0),
          Measurement(TileShape(2, 16), 64, 1.0)]
    assert rank_tiles(ms)[(64, 16)].tile == TileShape(2, 8)
    assert best_per_order(ms)[64].tile == TileShape(2, 8)


def test_explore_order(registry):
    kernels = registry.lookup(Flavour("S", "N", "T"))
    base = LaunchConfig(kernels[0], 1, repetitions=1)
    stored = []
    points = explore_order(list(reversed(kernels)), [128, 64, 100], base, registry, sink=stored.append)
    assert stored == points
    assert [(p.config.kernel.name, p.config.n) for p in points] == [
        (k.name, n) for k in kernels for n in (64, 100, 128)]
    skipped = [p for p in points if p.skipped]
    assert len(skipped) == 3
    assert all("divisib" in p.skip_reason and not p.gflops_per_rep for p in skipped)
    assert all(p.all_matched for p in points if not p.skipped)


def test_explore_order_empty(registry):
    base = LaunchConfig(registry.get("SGEMM_NT_1x1"), 1)
    assert explore_order(registry.lookup(Flavour("S", "N", "T")), [], base, registry) == []


def test_explore_tiles_small(registry):
    kernel = registry.get("SGEMM_NT_4x1_barrier")
    base = LaunchConfig(kernel, 1, repetitions=1)
    points = explore_tiles(kernel, [32, 64], [4], PREFER_SLIM, base=base, registry=registry)
    assert [(p.config.tile, p.config.n) for p in points] == [
        (TileShape(1, 4), 32), (TileShape(1, 4), 64), (TileShape(2, 2), 32), (TileShape(2, 2), 64)]
    winners = rank_tiles(measurements_of(points))
    assert set(winners) == {(32, 4), (64, 4)}

    full = explore_tiles(kernel, [32], [4], EXHAUSTIVE, base=base, registry=registry)
    # (4, 1) needs 16 | 32 and runs; all exhaustive shapes appear
    assert [p.config.tile for p in full] == shapes([(1, 4), (2, 2), (4, 1)])


def test_explore_tiles_skips_indivisible(registry):
    kernel = registry.get("SGEMM_NT_4x1_barrier")
    points = explore_tiles(kernel, [128], [128], EXHAUSTIVE, base=LaunchConfig(kernel, 1, repetitions=1),
                           registry=registry)
    # d_j * s_j must divide 128, so s_j <= 32
    ran = {p.config.tile.s_j for p in points if not p.skipped}
    assert ran == {1, 2, 4, 8, 16, 32}
    assert {p.config.tile.s_j for p in points if p.skipped} == {64, 128}


def test_explore_tiles_empty_orders(registry):
    kernel = registry.get("SGEMM_NT_4x1_barrier")
    assert explore_tiles(kernel, [], [16, 32], registry=registry) == []
