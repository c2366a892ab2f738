"""Seeded random instance generators shared by the test modules.

Two shapes are produced: arbitrary layered DAGs for exercising the
heuristic recursion, and pipeline-shaped instances (MDT + benchmark +
subtask tree JSON payloads) that go through the real loaders and builder.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from toolpath.graphs import ROOT_ID, PlanNode, ToolSubgraph, _assemble
from toolpath.planning import SubtaskInstance
from toolpath.registry import PLANNER_SUBTASKS, BenchmarkRow, BenchmarkTable


def random_plan_graph(
    seed: int, max_nodes: int = 40, zero_time_fraction: float = 0.1
) -> tuple[ToolSubgraph, BenchmarkTable]:
    """Random layered DAG rooted at the virtual node, plus benchmark rows.

    Every node is reachable from the root; sinks are the leaves.  A slice
    of the times is exactly zero to exercise the 0**0 convention.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, max_nodes))
    n_layers = int(rng.integers(2, 6))
    layers: list[list[int]] = [[] for _ in range(n_layers)]
    nodes = [PlanNode(node_id=ROOT_ID, tool=None, kind=None, instance=None, role="root")]
    inst = SubtaskInstance(kind="Object Detection", argument="synthetic", ordinal=1)
    for i in range(1, n + 1):
        layer = int(rng.integers(0, n_layers))
        layers[layer].append(i)
        nodes.append(
            PlanNode(
                node_id=i,
                tool=f"T{i:03d}",
                kind=PLANNER_SUBTASKS[i % len(PLANNER_SUBTASKS)],
                instance=inst,
                role="candidate",
            )
        )
    layers = [lay for lay in layers if lay]
    edges: set[tuple[int, int]] = set()
    for li, layer in enumerate(layers):
        earlier = [ROOT_ID] + [j for prev in layers[:li] for j in prev]
        for i in layer:
            k = int(rng.integers(1, min(3, len(earlier)) + 1))
            for j in rng.choice(earlier, size=k, replace=False):
                edges.add((int(j), i))
    graph_tmp = _assemble(nodes, edges, set())
    leaves = {i for i in range(len(nodes)) if not graph_tmp.successors[i]}
    graph = _assemble(nodes, edges, leaves)

    rows = {}
    for node in nodes[1:]:
        time = 0.0 if rng.random() < zero_time_fraction else float(rng.uniform(0.001, 20.0))
        quality = float(rng.uniform(0.05, 1.0))
        rows[(node.tool, node.kind)] = BenchmarkRow(
            time_seconds=time, quality_raw=quality, quality_norm=quality
        )
    return graph, BenchmarkTable(rows=rows)


def random_pipeline_instance(seed: int, unit_quality: bool = False) -> dict:
    """Pipeline-shaped instance as JSON payloads: {"mdt", "benchmark", "tree"}.

    Stages are a chain (sometimes an order-diamond) of distinct subtask
    kinds; each stage has 1..3 candidate tools, some of which require a
    helper-produced resource so the builder must splice prerequisite
    chains.  Qualities stay at or above 0.8 so the default threshold never
    rejects anything; unit_quality pins them all to 1.0.
    """
    rng = np.random.default_rng(seed)
    n_stages = int(rng.integers(2, 5))
    kinds = [PLANNER_SUBTASKS[int(k)] for k in rng.choice(len(PLANNER_SUBTASKS), size=n_stages + 1, replace=False)]
    stage_kinds, helper_kind = kinds[:n_stages], kinds[n_stages]

    mdt: list[dict] = []
    benchmark: list[dict] = []
    helper_count = 0

    def new_helper_chain() -> str:
        """Helper tools producing a fresh resource, grounded at the input image."""
        nonlocal helper_count
        depth = int(rng.integers(1, 3))
        consumed = "Input Image"
        resource = ""
        for _ in range(depth):
            helper_count += 1
            resource = f"artifact-{helper_count}"
            tool = f"SimHelper-{helper_count:02d}"
            mdt.append(
                {"tool": tool, "subtasks": [helper_kind], "inputs": [consumed], "outputs": [resource]}
            )
            benchmark.append(
                {
                    "tool": tool,
                    "subtask": helper_kind,
                    "time_seconds": round(float(rng.uniform(0.01, 15.0)), 4),
                    "quality": 1.0 if unit_quality else round(float(rng.uniform(0.8, 1.0)), 3),
                }
            )
            consumed = resource
        return resource

    for s, kind in enumerate(stage_kinds):
        n_tools = int(rng.integers(1, 4))
        for t in range(n_tools):
            tool = f"SimTool-{s}{chr(97 + t)}"
            if rng.random() < 0.5:
                inputs = ["Input Image"]
            else:
                inputs = [new_helper_chain()]
            mdt.append(
                {"tool": tool, "subtasks": [kind], "inputs": inputs, "outputs": [f"stage-{s}-result"]}
            )
            benchmark.append(
                {
                    "tool": tool,
                    "subtask": kind,
                    "time_seconds": round(float(rng.uniform(0.01, 15.0)), 4),
                    "quality": 1.0 if unit_quality else round(float(rng.uniform(0.8, 1.0)), 3),
                }
            )

    tree_nodes = []
    if n_stages >= 3 and rng.random() < 0.3:
        # Order-diamond over the first two stages, then the remaining chain.
        a, b = stage_kinds[0], stage_kinds[1]
        tree_nodes.append({"subtask": f"{a} (obj)(1)", "parent": []})
        tree_nodes.append({"subtask": f"{b} (obj)(2)", "parent": [f"{a} (obj)(1)"]})
        tree_nodes.append({"subtask": f"{b} (obj)(3)", "parent": []})
        tree_nodes.append({"subtask": f"{a} (obj)(4)", "parent": [f"{b} (obj)(3)"]})
        prev = [f"{b} (obj)(2)", f"{a} (obj)(4)"]
        ordinal = 5
        rest = stage_kinds[2:]
    else:
        prev = []
        ordinal = 1
        rest = stage_kinds
    for kind in rest:
        label = f"{kind} (obj)({ordinal})"
        tree_nodes.append({"subtask": label, "parent": list(prev)})
        prev = [label]
        ordinal += 1

    return {
        "mdt": mdt,
        "benchmark": benchmark,
        "tree": {"task": f"synthetic pipeline {seed}", "subtask_tree": tree_nodes},
    }


def write_instance(payload: dict, directory: Path) -> dict[str, Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name in ("mdt", "benchmark", "tree"):
        p = directory / f"{name}.json"
        p.write_text(json.dumps(payload[name], indent=2), encoding="utf-8")
        paths[name] = p
    return paths


def built_instance(seed: int, unit_quality: bool = False):
    """Instance materialized through the real parsers and builder."""
    from toolpath.graphs import build_tdg, build_tool_subgraph
    from toolpath.planning import parse_subtask_tree
    from toolpath.registry import parse_benchmark, parse_mdt

    payload = random_pipeline_instance(seed, unit_quality=unit_quality)
    mdt = parse_mdt(json.dumps(payload["mdt"]))
    bt = parse_benchmark(json.dumps(payload["benchmark"]), mdt)
    tree = parse_subtask_tree(json.dumps(payload["tree"]))
    graph = build_tool_subgraph(tree, mdt, build_tdg(mdt))
    return graph, bt, tree, payload
