"""Command-line entry point.

Exit codes: 0 success, 1 domain error (bad kernel, missing point, ...),
2 usage error, 3 completed but at least one repetition failed validation
(``run`` and ``replay`` only).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, explorer, report
from . import repository as repo_mod
from .energy import sensor_from_config
from .engine import DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_REPETITIONS, DEFAULT_TILE, TILE_DEPTH, LaunchConfig, TileShape
from .errors import ConfigError, GemmlabError
from .harness import ExperimentPoint, run_point
from .registry import Flavour, KernelRegistry
from .validation import DEFAULT_EPSILON

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_MISMATCH = 3

DEFAULT_REPO = "gemmlab-repo"
DEFAULT_FLAVOUR = "SGEMM NT"
DEFAULT_TILE_KERNEL = "SGEMM_NT_4x1_barrier"

log = logging.getLogger("gemmlab")


def _lws(text: str) -> TileShape:
    try:
        return TileShape.parse(text)
    except (ValueError, ConfigError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"values must be positive: {text!r}")
    return values


def _flavour(text: str) -> Flavour:
    try:
        return Flavour.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one-line reason on stderr, nonzero exit
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with defaults (seed, alpha, beta, epsilon, sensor, repo, ...)")
    common.add_argument("--dataset", help="directory of kernel metadata JSON files (default: bundled)")
    common.add_argument("--repo", help=f"repository directory (default: ${repo_mod.REPO_ENV_VAR} or ./{DEFAULT_REPO})")
    common.add_argument("-v", "--verbose", action="store_true")

    running = argparse.ArgumentParser(add_help=False)
    running.add_argument("--reps", type=int, help=f"repetitions (default {DEFAULT_REPETITIONS})")
    running.add_argument("--seed", type=int)
    running.add_argument("--alpha", type=float)
    running.add_argument("--beta", type=float)
    running.add_argument("--epsilon", type=float, help=f"validation threshold (default {DEFAULT_EPSILON})")
    running.add_argument("--sensor", help="sensor configuration: JSON file or inline JSON object")
    running.add_argument("--warmup", action="store_true", default=None, help="prepend one untimed run")
    running.add_argument("--tile-depth", type=int, help=f"k-depth of staged tiles (default {TILE_DEPTH})")
    running.add_argument("-p", "--platform", dest="platform_index", help="backend selector, recorded only")
    running.add_argument("-d", "--device", dest="device_index", help="device selector, recorded only")

    parser = _Parser(prog="gemmlab", description="GEMM kernel benchmarking and autotuning harness")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("list", parents=[common], help="list kernels grouped by flavour")
    p.add_argument("--flavour", type=_flavour)

    p = sub.add_parser("run", parents=[common, running], help="run a single experiment point")
    p.add_argument("--kernel", required=True)
    p.add_argument("-n", type=int, required=True, help="matrix order")
    p.add_argument("--lws", type=_lws, help="work-group shape J,I (default 8,8)")
    p.add_argument("--experiment", help="store the point in this experiment")
    p.add_argument("--append", action="store_true", help="append as a replay if the point exists")
    p.add_argument("--json", action="store_true", help="print the full point record as JSON")

    p = sub.add_parser("explore-order", parents=[common, running], help="sweep the matrix order")
    p.add_argument("--flavour", type=_flavour, default=Flavour.parse(DEFAULT_FLAVOUR))
    p.add_argument("--kernels", help="comma-separated kernel names (default: every kernel of the flavour)")
    p.add_argument("--orders", type=_int_list, default=list(explorer.DEFAULT_ORDERS))
    p.add_argument("--lws", type=_lws, help="work-group shape J,I (default 8,8)")
    p.add_argument("--experiment")
    p.add_argument("--append", action="store_true")

    p = sub.add_parser("explore-lws", parents=[common, running], help="sweep the work-group shape")
    p.add_argument("--kernel", default=DEFAULT_TILE_KERNEL)
    p.add_argument("--orders", type=_int_list, default=list(explorer.DEFAULT_TILE_ORDERS))
    p.add_argument("--totals", type=_int_list, default=list(explorer.DEFAULT_TILE_TOTALS))
    p.add_argument("--heuristic", choices=explorer.HEURISTICS, default=explorer.EXHAUSTIVE)
    p.add_argument("--experiment")
    p.add_argument("--append", action="store_true")

    p = sub.add_parser("replay", parents=[common, running], help="re-run a stored point")
    p.add_argument("--experiment", required=True)
    p.add_argument("--point", required=True)

    p = sub.add_parser("report", parents=[common], help="render a stored experiment")
    p.add_argument("--experiment", required=True)
    p.add_argument("--table", choices=sorted(report.TABLES), default="perf")
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    return parser


class _Settings:
    """Flag value if given, else config-file value, else built-in default."""

    def __init__(self, args, file_cfg: dict):
        self.args = args
        self.cfg = file_cfg

    def get(self, name: str, default=None, key: str | None = None):
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        return self.cfg.get(key or name, default)


def _load_json_arg(text: str, what: str) -> dict:
    path = Path(text)
    try:
        if path.is_file():
            obj = json.loads(path.read_text(encoding="utf-8"))
        elif text.lstrip().startswith("{"):
            obj = json.loads(text)
        else:
            raise ConfigError(f"{what}: no such file {text!r}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what}: malformed JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{what}: expected a JSON object")
    return obj


def _registry(settings: _Settings) -> KernelRegistry:
    dataset = settings.get("dataset")
    return KernelRegistry.from_directory(dataset) if dataset else KernelRegistry.bundled()


def _repo(settings: _Settings) -> str:
    return settings.get("repo") or os.environ.get(repo_mod.REPO_ENV_VAR) or DEFAULT_REPO


def _sensor(settings: _Settings):
    raw = getattr(settings.args, "sensor", None)
    cfg = _load_json_arg(raw, "--sensor") if raw else settings.cfg.get("sensor")
    return sensor_from_config(cfg)


def _run_kwargs(settings: _Settings) -> dict:
    env = {}
    for key in ("platform_index", "device_index"):
        value = getattr(settings.args, key, None)
        if value is not None:
            env[key] = value
    return {
        "epsilon": float(settings.get("epsilon", DEFAULT_EPSILON)),
        "warmup": bool(settings.get("warmup", False)),
        "tile_depth": int(settings.get("tile_depth", TILE_DEPTH)),
        "environment": env,
    }


def _base_config(settings: _Settings, kernel, n: int, tile: TileShape | None) -> LaunchConfig:
    tile = tile or (TileShape(*settings.cfg["lws"]) if "lws" in settings.cfg else DEFAULT_TILE)
    return LaunchConfig(
        kernel=kernel,
        n=n,
        tile=tile,
        repetitions=int(settings.get("reps", DEFAULT_REPETITIONS, key="repetitions")),
        seed=int(settings.get("seed", 0)),
        alpha=float(settings.get("alpha", DEFAULT_ALPHA)),
        beta=float(settings.get("beta", DEFAULT_BETA)),
    )


def _print_point(point: ExperimentPoint, out) -> None:
    c = point.config
    print(f"point {point.point_id}  kernel {c.kernel.name}  n={c.n}  lws={c.tile}  "
          f"seed={c.seed}  alpha={c.alpha}  beta={c.beta}", file=out)
    if point.skipped:
        print(f"  skipped: {point.skip_reason}", file=out)
        return
    for r, (g, t, v) in enumerate(zip(point.gflops_per_rep, point.elapsed_per_rep, point.validations)):
        line = f"  rep {r}: {g:10.3f} Gflops/s  {t:.6f} s  max_abs_diff {v.max_abs_diff:.6e}  match {int(v.match)}"
        if point.energy and point.energy[r]:
            line += "  " + " ".join(f"{e.channel}={e.joules:.6f}J" for e in point.energy[r])
        print(line, file=out)
    std = "n/a" if point.std is None else f"{point.std:.6f}"
    print(f"  mean {point.mean:.5f} Gflops/s  std {std}", file=out)


def _cmd_list(args, settings, out):
    registry = _registry(settings)
    flavours = [args.flavour] if args.flavour else registry.flavours()
    for flavour in flavours:
        print(str(flavour), file=out)
        for spec in registry.lookup(flavour):
            print(f"  {spec.name:<28} dj={spec.d_j} di={spec.d_i}  file={spec.source_id}", file=out)
    return EXIT_OK


def _cmd_run(args, settings, out):
    registry = _registry(settings)
    config = _base_config(settings, registry.get(args.kernel), args.n, args.lws)
    point = run_point(config, registry, _sensor(settings), **_run_kwargs(settings))
    if args.experiment:
        path = repo_mod.store_point(_repo(settings), args.experiment, point, replay=args.append)
        log.info("stored %s", path)
    if args.json:
        print(json.dumps(point.to_json_dict(), indent=2, sort_keys=True), file=out)
    else:
        _print_point(point, out)
    return EXIT_OK if point.all_matched else EXIT_MISMATCH


def _sink(settings, experiment_id, append):
    repo = _repo(settings)

    def store(point):
        repo_mod.store_point(repo, experiment_id, point, replay=append)

    return store


def _cmd_explore_order(args, settings, out):
    registry = _registry(settings)
    if args.kernels:
        kernels = [registry.get(k.strip()) for k in args.kernels.split(",") if k.strip()]
    else:
        kernels = registry.lookup(args.flavour)
    if not kernels:
        raise ConfigError(f"no kernels for flavour {args.flavour}")
    flavour = kernels[0].flavour
    experiment = args.experiment or f"{flavour.precision}GEMM_{flavour.trans_a}{flavour.trans_b}-explore-f-n"
    base = _base_config(settings, kernels[0], 1, args.lws)
    points = explorer.explore_order(kernels, args.orders, base, registry, _sensor(settings),
                                    sink=_sink(settings, experiment, args.append), **_run_kwargs(settings))
    for point in points:
        _print_point(point, out)
    done = sum(not p.skipped for p in points)
    print(f"experiment {experiment}: {done} points run, {len(points) - done} skipped, stored in {_repo(settings)}",
          file=out)
    return EXIT_OK


def _cmd_explore_lws(args, settings, out):
    registry = _registry(settings)
    kernel = registry.get(args.kernel)
    flavour = kernel.flavour
    experiment = args.experiment or f"{flavour.precision}GEMM_{flavour.trans_a}{flavour.trans_b}-explore-n-lws"
    base = _base_config(settings, kernel, 1, None)
    points = explorer.explore_tiles(kernel, args.orders, args.totals, args.heuristic, base=base,
                                    registry=registry, sensor=_sensor(settings),
                                    sink=_sink(settings, experiment, args.append), **_run_kwargs(settings))
    for point in points:
        _print_point(point, out)
    measurements = explorer.measurements_of(points)
    for (n, total), win in explorer.rank_tiles(measurements).items():
        print(f"best for order {n}, {total} work-items: lws={win.tile} mean {win.mean:.5f} Gflops/s", file=out)
    print(f"experiment {experiment}: {len(points)} points stored in {_repo(settings)}", file=out)
    return EXIT_OK


def _cmd_replay(args, settings, out):
    registry = _registry(settings)
    kwargs = _run_kwargs(settings)
    if getattr(args, "epsilon", None) is None and "epsilon" not in settings.cfg:
        del kwargs["epsilon"]  # reuse the stored threshold
    point = repo_mod.replay(_repo(settings), args.experiment, args.point, registry, _sensor(settings), **kwargs)
    _print_point(point, out)
    print(f"  stored as replay {point.replay_counter}", file=out)
    return EXIT_OK if point.all_matched else EXIT_MISMATCH


def _cmd_report(args, settings, out):
    entry = repo_mod.load_experiment(_repo(settings), args.experiment)
    table = report.TABLES[args.table](entry)
    text = report.export_csv(table) if args.format == "csv" else report.export_markdown(table)
    out.write(text)
    return EXIT_OK


COMMANDS = {
    "list": _cmd_list,
    "run": _cmd_run,
    "explore-order": _cmd_explore_order,
    "explore-lws": _cmd_explore_lws,
    "replay": _cmd_replay,
    "report": _cmd_report,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_cfg = _load_json_arg(args.config, "--config") if args.config else {}
        return COMMANDS[args.command](args, _Settings(args, file_cfg), out)
    except GemmlabError as exc:
        print(f"gemmlab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"gemmlab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
