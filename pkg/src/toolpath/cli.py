"""Command-line surface: plan, sweep, verify, and graph export.

Exit codes: 0 success, 1 input/usage error, 2 no valid path (or a verify
gap above the tolerance), 3 path-count explosion.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy

from . import __version__
from .errors import PathExplosion, SearchExhausted, ToolpathError
from .evaluation import brute_force_optimal, pareto_csv, sweep_alpha
from .execution import Simulator, SimulatorSpec, load_simulator_spec
from .graphs import (
    build_tdg,
    build_tool_subgraph,
    subgraph_to_dot,
    subgraph_to_json,
    tdg_to_dot,
)
from .planning import (
    build_planner_prompt,
    parse_subtask_tree,
    planner_client_from_env,
    request_tree,
)
from .registry import load_benchmark, load_mdt
from .search import (
    DEFAULT_MAX_RETRIES,
    DEFAULT_QUALITY_THRESHOLD,
    DEFAULT_SEED,
    SearchConfig,
    astar_search,
    precompute_heuristics,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NO_PATH = 2
EXIT_PATH_EXPLOSION = 3


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage failures exit 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT_ERROR)


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_manifest(argv: list[str], config: dict, input_paths: list[Path], seed: int) -> dict:
    """Provenance record written next to every output artifact."""
    return {
        "command": argv,
        "config_hash": _sha256_text(json.dumps(config, sort_keys=True)),
        "inputs": {str(p): _sha256_file(p) for p in sorted(set(input_paths))},
        "seed": seed,
        "versions": {
            "toolpath": __version__,
            "python": platform.python_version(),
            "numpy": numpy.__version__,
        },
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_manifest(out: str | None, manifest: dict) -> None:
    if out:
        Path(out).with_suffix(Path(out).suffix + ".manifest.json").write_text(
            _dump_json(manifest), encoding="utf-8"
        )


def _sim_spec(value: str) -> SimulatorSpec:
    if value == "deterministic":
        return SimulatorSpec(mode="deterministic")
    if value == "stochastic":
        return SimulatorSpec(mode="stochastic")
    return load_simulator_spec(value)


def _add_common(parser: argparse.ArgumentParser, with_tree: bool = True) -> None:
    parser.add_argument("--mdt", required=True, help="model description table JSON")
    parser.add_argument("--benchmark", required=True, help="benchmark table JSON")
    if with_tree:
        parser.add_argument("--tree", help="subtask tree JSON file")
    parser.add_argument("--quality-threshold", type=float, default=DEFAULT_QUALITY_THRESHOLD)
    parser.add_argument("--max-retries", type=int, default=DEFAULT_MAX_RETRIES)
    parser.add_argument(
        "--sim",
        default="deterministic",
        help='simulator: "deterministic", "stochastic", or a spec JSON path',
    )
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--out", help="output file (stdout when omitted)")


def _load_tree_text(args) -> tuple[str, list[Path]]:
    if getattr(args, "tree", None):
        path = Path(args.tree)
        if not path.is_file():
            raise ToolpathError(f"tree file not found: {path}")
        return path.read_text(encoding="utf-8"), [path]
    if getattr(args, "task", None):
        client = planner_client_from_env(getattr(args, "planner_endpoint", None))
        prompt = build_planner_prompt(args.task)
        return request_tree(client, prompt), []
    raise ToolpathError("either --tree or --task (with a planner endpoint) is required")


def _build_graph(args):
    mdt = load_mdt(args.mdt)
    bt = load_benchmark(args.benchmark, mdt)
    tree_text, extra_inputs = _load_tree_text(args)
    tree = parse_subtask_tree(tree_text)
    tdg = build_tdg(mdt)
    graph = build_tool_subgraph(tree, mdt, tdg)
    inputs = [Path(args.mdt), Path(args.benchmark)] + extra_inputs
    return mdt, bt, tree, graph, inputs


def cmd_plan(args, argv: list[str]) -> int:
    _, bt, _, graph, inputs = _build_graph(args)
    cfg = SearchConfig(
        alpha=args.alpha,
        quality_threshold=args.quality_threshold,
        max_retries=args.max_retries,
        seed=args.seed,
    )
    spec = _sim_spec(args.sim)
    simulator = Simulator(spec, bt, cfg.seed)
    heuristics = precompute_heuristics(graph, bt, cfg.alpha)
    result = astar_search(graph, heuristics, simulator, cfg)
    payload = result.to_json_dict(graph)
    _write_or_print(_dump_json(payload), args.out)
    if args.out:
        trace_path = Path(args.out).with_suffix(Path(args.out).suffix + ".trace.json")
        trace_path.write_text(_dump_json(result.trace.to_json_dict()), encoding="utf-8")
    config = {
        "command": "plan",
        "alpha": cfg.alpha,
        "quality_threshold": cfg.quality_threshold,
        "max_retries": cfg.max_retries,
        "sim": args.sim,
        "seed": cfg.seed,
    }
    _emit_manifest(args.out, build_manifest(argv, config, inputs, cfg.seed))
    return EXIT_OK if result.found else EXIT_NO_PATH


def cmd_sweep(args, argv: list[str]) -> int:
    _, bt, _, graph, inputs = _build_graph(args)
    alphas = [float(a) for a in args.alphas.split(",") if a.strip() != ""]
    cfg = SearchConfig(
        quality_threshold=args.quality_threshold,
        max_retries=args.max_retries,
        seed=args.seed,
    )
    spec = _sim_spec(args.sim)
    points = sweep_alpha(graph, bt, spec, alphas, base_cfg=cfg)
    text = pareto_csv(points, include_flag=True)
    _write_or_print(text, args.csv or args.out)
    config = {
        "command": "sweep",
        "alphas": sorted(alphas),
        "quality_threshold": cfg.quality_threshold,
        "max_retries": cfg.max_retries,
        "sim": args.sim,
        "seed": cfg.seed,
    }
    _emit_manifest(args.csv or args.out, build_manifest(argv, config, inputs, cfg.seed))
    return EXIT_OK


def cmd_verify(args, argv: list[str]) -> int:
    _, bt, _, graph, inputs = _build_graph(args)
    cfg = SearchConfig(
        alpha=args.alpha,
        quality_threshold=args.quality_threshold,
        max_retries=args.max_retries,
        seed=args.seed,
    )
    report = brute_force_optimal(graph, bt, args.alpha, cfg=cfg, cap=args.paths_cap)
    payload = {
        "alpha": args.alpha,
        "best_objective": report.best_objective,
        "astar_objective": report.astar_objective,
        "gap": report.gap,
        "paths_enumerated": report.paths_enumerated,
        "astar_status": report.astar_status,
        "best_path": list(report.best_path),
        "astar_path": list(report.astar_path),
    }
    _write_or_print(_dump_json(payload), args.out)
    config = {
        "command": "verify",
        "alpha": args.alpha,
        "paths_cap": args.paths_cap,
        "seed": cfg.seed,
    }
    _emit_manifest(args.out, build_manifest(argv, config, inputs, cfg.seed))
    if args.gap_tolerance is not None and report.gap > args.gap_tolerance:
        print(
            f"gap {report.gap} exceeds tolerance {args.gap_tolerance}",
            file=sys.stderr,
        )
        return EXIT_NO_PATH
    return EXIT_OK


def cmd_graph(args, argv: list[str]) -> int:
    mdt = load_mdt(args.mdt)
    tdg = build_tdg(mdt)
    inputs = [Path(args.mdt)]
    if args.tree:
        tree_path = Path(args.tree)
        tree = parse_subtask_tree(tree_path.read_text(encoding="utf-8"))
        graph = build_tool_subgraph(tree, mdt, tdg)
        inputs.append(tree_path)
        text = subgraph_to_json(graph) if args.format == "json" else subgraph_to_dot(graph)
    else:
        if args.format == "json":
            payload = {"nodes": list(tdg.nodes), "edges": sorted([u, v] for u, v in tdg.edges)}
            text = _dump_json(payload)
        else:
            text = tdg_to_dot(tdg)
    _write_or_print(text, args.out)
    _emit_manifest(
        args.out,
        build_manifest(argv, {"command": "graph", "format": args.format}, inputs, 0),
    )
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="toolpath", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="search one toolpath")
    _add_common(p_plan)
    p_plan.add_argument("--task", help="plan from a task description via the planner endpoint")
    p_plan.add_argument("--planner-endpoint", help="planner URL (overrides COSTA_PLANNER_URL)")
    p_plan.add_argument("--alpha", type=float, default=1.0)
    p_plan.set_defaults(func=cmd_plan)

    p_sweep = sub.add_parser("sweep", help="search once per alpha and emit a Pareto CSV")
    _add_common(p_sweep)
    p_sweep.add_argument("--alphas", default="0,0.5,1,1.5,2", help="comma-separated alphas")
    p_sweep.add_argument("--csv", help="CSV output file (stdout when omitted)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="compare the search against path enumeration")
    _add_common(p_verify)
    p_verify.add_argument("--alpha", type=float, default=1.0)
    p_verify.add_argument("--paths-cap", type=int, default=10**6)
    p_verify.add_argument(
        "--gap-tolerance",
        type=float,
        default=None,
        help="when set, exit non-zero if the gap exceeds this value",
    )
    p_verify.set_defaults(func=cmd_verify)

    p_graph = sub.add_parser("graph", help="export the dependency graph or a tool subgraph")
    p_graph.add_argument("--mdt", required=True)
    p_graph.add_argument("--tree")
    p_graph.add_argument("--format", choices=("dot", "json"), default="dot")
    p_graph.add_argument("--out")
    p_graph.set_defaults(func=cmd_graph)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in ("plan", "sweep", "verify") and not args.tree and not getattr(args, "task", None):
            parser.error("--tree is required (or --task with a planner endpoint for plan)")
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except PathExplosion as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PATH_EXPLOSION
    except SearchExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    except ToolpathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
