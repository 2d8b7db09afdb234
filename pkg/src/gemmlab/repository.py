"""Plain-directory experiment repository.

Layout::

    <repo>/<experiment_id>/meta.json
    <repo>/<experiment_id>/points/<point_id>.json
    <repo>/<experiment_id>/points/<point_id>.r<N>.json   # N-th replay

Entries are append-only. Floats are written with Python's shortest
round-trip repr, so loading a stored point reproduces every value exactly.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .energy import PowerSensor
from .errors import ConfigError, DuplicateWithoutReplayFlag, NotFound
from .harness import ExperimentPoint, collect_environment, run_point
from .registry import KernelRegistry

REPO_ENV_VAR = "GEMMLAB_REPO"

_POINT_FILE_RE = re.compile(r"^([0-9A-Za-z_-]+?)(?:\.r(\d+))?\.json$")
_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


@dataclass
class ExperimentEntry:
    experiment_id: str
    points: list[ExperimentPoint] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def _check_id(kind: str, value: str) -> None:
    if not _ID_RE.match(value) or value in (".", ".."):
        raise ValueError(f"invalid {kind} {value!r}")


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(obj, f, indent=2, sort_keys=True)
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _experiment_dir(repo_path, experiment_id: str) -> Path:
    _check_id("experiment id", experiment_id)
    return Path(repo_path) / experiment_id


def _point_path(points_dir: Path, point_id: str, counter: int) -> Path:
    suffix = f".r{counter}" if counter else ""
    return points_dir / f"{point_id}{suffix}.json"


def _counters(points_dir: Path, point_id: str) -> list[int]:
    found = []
    if points_dir.is_dir():
        for p in points_dir.iterdir():
            m = _POINT_FILE_RE.match(p.name)
            if m and m.group(1) == point_id:
                found.append(int(m.group(2) or 0))
    return sorted(found)


def ensure_experiment(repo_path, experiment_id: str, environment: dict | None = None) -> Path:
    exp_dir = _experiment_dir(repo_path, experiment_id)
    meta = exp_dir / "meta.json"
    if not meta.exists():
        _write_json(meta, {
            "experiment_id": experiment_id,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "tool_version": __version__,
            "environment": environment if environment is not None else collect_environment(),
        })
    (exp_dir / "points").mkdir(parents=True, exist_ok=True)
    return exp_dir


def store_point(repo_path, experiment_id: str, point: ExperimentPoint, replay: bool = False) -> Path:
    """Write ``point``; with ``replay`` an existing id gets the next ``.rN`` suffix.

    The point's ``replay_counter`` is updated to match the file written.
    """
    _check_id("point id", point.point_id)
    points_dir = ensure_experiment(repo_path, experiment_id) / "points"
    existing = _counters(points_dir, point.point_id)
    if existing and not replay:
        raise DuplicateWithoutReplayFlag(
            f"point {point.point_id} already stored in {experiment_id}; pass replay=True to append"
        )
    point.replay_counter = existing[-1] + 1 if existing else 0
    path = _point_path(points_dir, point.point_id, point.replay_counter)
    _write_json(path, point.to_json_dict())
    return path


def list_experiments(repo_path) -> list[str]:
    root = Path(repo_path)
    if not root.is_dir():
        return []
    return sorted(p.name for p in root.iterdir() if (p / "meta.json").is_file())


def _require_experiment(repo_path, experiment_id: str) -> Path:
    exp_dir = _experiment_dir(repo_path, experiment_id)
    if not (exp_dir / "meta.json").is_file():
        raise NotFound(f"experiment {experiment_id!r} not found in {repo_path}")
    return exp_dir


def load_point(repo_path, experiment_id: str, point_id: str, replay_counter: int = 0) -> ExperimentPoint:
    exp_dir = _require_experiment(repo_path, experiment_id)
    _check_id("point id", point_id)
    path = _point_path(exp_dir / "points", point_id, replay_counter)
    if not path.is_file():
        raise NotFound(f"point {point_id!r} (replay {replay_counter}) not found in experiment {experiment_id!r}")
    with open(path, encoding="utf-8") as f:
        return ExperimentPoint.from_json_dict(json.load(f))


def list_points(repo_path, experiment_id: str) -> list[ExperimentPoint]:
    """Every stored record, ordered by (point_id, replay counter)."""
    exp_dir = _require_experiment(repo_path, experiment_id)
    keyed = []
    for p in (exp_dir / "points").glob("*.json"):
        m = _POINT_FILE_RE.match(p.name)
        if m:
            keyed.append(((m.group(1), int(m.group(2) or 0)), p))
    points = []
    for _, p in sorted(keyed):
        with open(p, encoding="utf-8") as f:
            points.append(ExperimentPoint.from_json_dict(json.load(f)))
    return points


def load_experiment(repo_path, experiment_id: str) -> ExperimentEntry:
    exp_dir = _require_experiment(repo_path, experiment_id)
    with open(exp_dir / "meta.json", encoding="utf-8") as f:
        metadata = json.load(f)
    return ExperimentEntry(experiment_id, list_points(repo_path, experiment_id), metadata)


def replay(repo_path, experiment_id: str, point_id: str, registry: KernelRegistry,
           sensor: PowerSensor | None = None, **run_kwargs) -> ExperimentPoint:
    """Re-run a stored point from its recorded configuration and append the new record."""
    original = load_point(repo_path, experiment_id, point_id)
    name = original.config.kernel.name
    if name not in registry:
        raise ConfigError(f"cannot replay {point_id}: kernel {name!r} is no longer in the registry")
    if original.validations and "epsilon" not in run_kwargs:
        run_kwargs["epsilon"] = original.validations[0].epsilon
    env = dict(run_kwargs.pop("environment", None) or {})
    env["replay_of"] = point_id
    point = run_point(original.config, registry, sensor, environment=env, **run_kwargs)
    store_point(repo_path, experiment_id, point, replay=True)
    return point
