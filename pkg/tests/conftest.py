import pytest

from gemmlab.engine import LaunchConfig, TileShape
from gemmlab.harness import ExperimentPoint, compute_stats, point_id_for
from gemmlab.registry import KernelRegistry
from gemmlab.repository import ExperimentEntry
from gemmlab.validation import ValidationReport


@pytest.fixture(scope="session")
def registry():
    return KernelRegistry.bundled()


@pytest.fixture
def repo(tmp_path):
    return tmp_path / "repo"


def make_point(registry, kernel, n, gflops=(), tile=(8, 8), validations=(), energy=(), elapsed=None):
    """Build a point record directly from published or synthetic numbers."""
    config = LaunchConfig(registry.get(kernel), n, TileShape(*tile), repetitions=max(len(gflops), 1))
    mean, std = compute_stats(gflops) if gflops else (None, None)
    return ExperimentPoint(
        point_id=point_id_for(config),
        config=config,
        gflops_per_rep=list(gflops),
        mean=mean,
        std=std,
        validations=[ValidationReport(d, 0.1, d <= 0.1) if m is None else ValidationReport(d, 0.1, bool(m))
                     for d, m in validations],
        energy=[list(rep) for rep in energy],
        elapsed_per_rep=list(elapsed or []),
    )


def make_entry(points, experiment_id="fixture"):
    return ExperimentEntry(experiment_id, list(points), {})


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
