"""Acceptance suite: one PASS/FAIL line per primary criterion.

Lines are printed as each check finishes (visible with ``-s``) and repeated
in the terminal summary by ``conftest.pytest_terminal_summary``.
"""

import itertools
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from gemmlab.energy import LinearDrift, MockSensor, PowerSample, estimate_energy
from gemmlab.engine import LaunchConfig, TileShape, generate_problem, reference_gemm, run_kernel
from gemmlab.explorer import (EXHAUSTIVE, PREFER_SLIM, Measurement, candidate_shapes, enumerate_tile_shapes,
                              rank_tiles)
from gemmlab.harness import compute_stats, run_point
from gemmlab.registry import Flavour
from gemmlab.report import parse_csv
from gemmlab.repository import list_points, load_point, replay, store_point
from gemmlab.validation import validate

from published import LWS_SWEEP, ORDER_SWEEP, VALIDATION_SWEEP

RESULTS = []


def report(name, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
    RESULTS.append(line)
    print(line)
    return ok


def test_statistics_oracle():
    start = time.perf_counter()
    rows = [(v, m, s) for _, _, v, m, s in ORDER_SWEEP] + [(v, m, s) for *_, v, m, s in LWS_SWEEP]
    worst_mean = worst_std = 0.0
    for values, mean, std in rows:
        got_mean, got_std = compute_stats(values)
        worst_mean = max(worst_mean, abs(got_mean - mean))
        worst_std = max(worst_std, abs(got_std - std))
    elapsed = time.perf_counter() - start
    ok = worst_mean <= 1e-5 and worst_std <= 1e-6 and elapsed < 1.0 and len(rows) == 85
    assert report("statistics oracle", ok,
                  f"{len(rows)} rows, worst mean err {worst_mean:.1e}, worst std err {worst_std:.1e}, {elapsed:.3f} s")


def _shapes(spec, n):
    powers = [1, 2, 4, 8, 16, 32, 64]
    return [TileShape(j, i) for j, i in itertools.product(powers, powers)
            if n % (spec.d_j * j) == 0 and n % (spec.d_i * i) == 0]


def _diff(c, truth):
    return float(np.max(np.abs(c.astype(np.float64) - truth)))


def test_kernel_correctness(registry):
    # tolerances are checked against an independent float64 product, not the package's own reference
    start = time.perf_counter()
    tolerance = {"S": 1e-4, "D": 1e-10}
    flavours = {str(f) for f in registry.flavours()}
    worst = {"S": 0.0, "D": 0.0}
    coarsened_identical = shape_invariant = True
    runs = 0
    for flavour in (Flavour.parse(f) for f in ("SGEMM NT", "SGEMM NN", "DGEMM NT", "DGEMM NN")):
        specs = {s.name.split("_", 2)[2]: s for s in registry.lookup(flavour)}
        for n in (8, 16, 32, 64):
            for seed in range(10):
                problem = generate_problem(n, seed, precision=flavour.precision)
                a, b = problem.a.astype(np.float64), problem.b.astype(np.float64)
                op_b = b.T if flavour.trans_b == "T" else b
                truth = problem.alpha * (a @ op_b) + problem.beta * problem.c_initial.astype(np.float64)
                runs += 1
                worst[flavour.precision] = max(worst[flavour.precision], _diff(reference_gemm(problem, flavour), truth))
                by_kernel = {}
                for key, spec in specs.items():
                    outputs = []
                    for tile in _shapes(spec, n):
                        config = LaunchConfig(spec, n, tile, seed=seed)
                        c, _ = run_kernel(spec, config, problem)
                        runs += 1
                        worst[flavour.precision] = max(worst[flavour.precision], _diff(c, truth))
                        outputs.append(c)
                    shape_invariant &= all(np.array_equal(outputs[0], o) for o in outputs)
                    by_kernel[key] = outputs[0]
                coarsened_identical &= by_kernel["1x1"].tobytes() == by_kernel["4x1"].tobytes()
    elapsed = time.perf_counter() - start
    ok = (len(flavours) == 4 and worst["S"] <= tolerance["S"] and worst["D"] <= tolerance["D"]
          and coarsened_identical and shape_invariant and elapsed < 30)
    assert report("kernel correctness", ok,
                  f"{runs} runs, worst S {worst['S']:.1e}, worst D {worst['D']:.1e}, "
                  f"1x1 vs 4x1 identical {coarsened_identical}, shape invariant {shape_invariant}, {elapsed:.1f} s")


def test_validation_behaviour():
    ref = reference_gemm(generate_problem(16, 3), Flavour("S", "N", "T")).astype(np.float32)

    def perturbed(delta, pos=37):
        x = ref.copy()
        x.flat[pos] += np.float32(delta)
        return x

    bracket = validate(perturbed(0.05), ref, 0.1).match and not validate(perturbed(0.15), ref, 0.1).match
    sub_unit = all(not validate(perturbed(s * 0.9, pos), ref, 0.1).match for pos in range(0, 256, 17) for s in (1, -1))
    nan = ref.copy()
    nan.flat[5] = np.nan
    nan_ok = not validate(nan, ref, 0.1).match
    published = [(diff, match) for _, _, reps in VALIDATION_SWEEP for diff, match in reps if diff == 5.016124e-02]
    fixture_ok = bool(published) and all(
        m == 1 and validate(perturbed(d).astype(np.float64), ref.astype(np.float64), 0.1).match
        for d, m in published)
    ok = bracket and sub_unit and nan_ok and fixture_ok
    assert report("validation behaviour", ok,
                  f"bracketing {bracket}, 0.9 detected {sub_unit}, NaN mismatch {nan_ok}, "
                  f"{len(published)} published 5.016124e-02 entries match {fixture_ok}")


def test_replay_determinism(registry, repo):
    config = LaunchConfig(registry.get("DGEMM_NT_4x1_barrier"), 64, TileShape(2, 8), repetitions=3, seed=11)
    original = run_point(config, registry)
    store_point(repo, "replay", original)
    first = replay(repo, "replay", original.point_id, registry)
    second = replay(repo, "replay", original.point_id, registry)
    names = sorted(p.name for p in (repo / "replay" / "points").iterdir())
    expected = sorted(f"{original.point_id}{s}.json" for s in ("", ".r1", ".r2"))
    matrices = all(generate_problem(64, 11, precision="D").digest() == p.problem_digest
                   for p in (original, first, second))
    reports = first.validations == second.validations == original.validations
    results = first.result_digests == second.result_digests == original.result_digests
    lossless = [load_point(repo, "replay", original.point_id, c) for c in (0, 1, 2)] == [original, first, second]
    listed = [p.replay_counter for p in list_points(repo, "replay")] == [0, 1, 2]
    ok = names == expected and matrices and reports and results and lossless and listed
    assert report("replay determinism", ok,
                  f"files {names == expected}, matrices {matrices}, reports {reports}, results {results}, "
                  f"round-trip {lossless}")


def test_energy_model(registry):
    t = 0.37
    constant = all(estimate_energy(PowerSample(p, "gpu"), PowerSample(p, "gpu"), t).joules == p * t
                   for p in (0.0, 1.0, 2.5, 4.1, 7.3))

    ticks = iter([0.0, 0.0, t])
    sensor = MockSensor({"gpu": LinearDrift(1.0, 3.0, t)}, clock=lambda: next(ticks))
    drift = estimate_energy(sensor.read("gpu"), sensor.read("gpu"), t).joules
    drift_ok = drift == 2.0 * t

    point = run_point(LaunchConfig(registry.get("SGEMM_NT_1x1"), 32, repetitions=3), registry,
                      MockSensor({"gpu": 4.1}))
    harness_ok = all(rep[0].joules == 4.1 * el for rep, el in zip(point.energy, point.elapsed_per_rep))
    ok = constant and drift_ok and harness_ok
    assert report("energy model", ok, f"constant exact {constant}, drift 1->3 W gives {drift:.6f} J over {t} s, "
                                      f"harness exact {harness_ok}")


def test_exploration_shape():
    complete = all(
        {(s.s_j, s.s_i) for s in enumerate_tile_shapes(total)} == {(d, total // d) for d in range(1, total + 1)
                                                                   if total % d == 0}
        for total in (16, 32, 64, 128))
    subset = all(set(candidate_shapes(t, PREFER_SLIM)) <= set(candidate_shapes(t, EXHAUSTIVE))
                 for t in (16, 32, 64, 128))
    winners = rank_tiles(Measurement(TileShape(j, i), n, mean) for _, j, i, n, _, mean, _ in LWS_SWEEP)
    picks = {n: winners[(n, 16)].tile for n in (128, 256, 384, 512)}
    ranked = all(tile == TileShape(1, 16) for tile in picks.values())
    ok = complete and subset and ranked
    assert report("exploration shape", ok, f"divisor complete {complete}, prefer_slim subset {subset}, "
                                           f"total 16 winners {sorted((n, str(t)) for n, t in picks.items())}")


def test_tiled_beats_naive_at_1024(registry):
    """Informational only: hardware dependent, never fails."""
    n, reps = 1024, 2
    means = {}
    for name, tile in (("SGEMM_NT_1x1", TileShape(8, 8)), ("SGEMM_NT_4x1_barrier", TileShape(8, 8))):
        means[name] = run_point(LaunchConfig(registry.get(name), n, tile, repetitions=reps), registry).mean
    ratio = means["SGEMM_NT_4x1_barrier"] / means["SGEMM_NT_1x1"]
    line = (f"tiled/naive at n=1024 ratio {ratio:.2f} "
            f"(tiled {means['SGEMM_NT_4x1_barrier']:.3f}, naive {means['SGEMM_NT_1x1']:.3f} Gflops/s, "
            f"{os.cpu_count()} cpu)")
    report("soft: tiled >= naive (informational)", ratio >= 1.0, line)


def test_end_to_end(tmp_path):
    start = time.perf_counter()
    env = {**os.environ, "GEMMLAB_REPO": str(tmp_path / "repo")}
    run = subprocess.run([sys.executable, "-m", "gemmlab", "explore-order", "--orders", "64,128,256"],
                         capture_output=True, text=True, env=env, cwd=tmp_path)
    stored = len(list_points(tmp_path / "repo", "SGEMM_NT-explore-f-n")) if run.returncode == 0 else 0
    rep = subprocess.run([sys.executable, "-m", "gemmlab", "report", "--experiment", "SGEMM_NT-explore-f-n",
                          "--table", "perf", "--format", "csv"], capture_output=True, text=True, env=env, cwd=tmp_path)
    table = parse_csv(rep.stdout)
    numeric = all(math.isfinite(float(row[table.header.index("mean")])) for row in table.rows)
    elapsed = time.perf_counter() - start
    ok = (run.returncode == 0 and rep.returncode == 0 and stored == 9 and len(table.rows) == 9 and numeric
          and elapsed < 120)
    assert report("end-to-end explore-order + report", ok,
                  f"exit {run.returncode}/{rep.returncode}, {stored} points stored, {len(table.rows)} csv rows, "
                  f"{elapsed:.1f} s"), run.stderr + rep.stderr
