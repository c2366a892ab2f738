"""Tool dependency graph and tool-subgraph construction.

The tool dependency graph (TDG) links tool u to tool v whenever some output
resource of u matches some input resource of v.  A subtask tree is expanded
into a tool subgraph by replacing each subtask instance with its candidate
tools plus any prerequisite chains spliced in from the TDG, so that every
root-to-leaf path is an executable toolpath.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import CycleDetected, NoToolForSubtask, PathExplosion, UnsatisfiableDependency
from .planning import SubtaskInstance, SubtaskTree, topological_order
from .registry import ModelDescriptionTable, ToolRecord, normalize_resource

ROOT_ID = 0
ROOT_TOOL = "ROOT"

# The virtual root stands in for the user-supplied image: it costs nothing,
# has perfect quality, and produces the one resource every pipeline starts from.
ROOT_OUTPUTS = frozenset({normalize_resource("Input Image")})

DEFAULT_PATH_CAP = 10**6


@dataclass(frozen=True)
class ToolDependencyGraph:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def successors(self, tool: str) -> list[str]:
        return sorted(v for (u, v) in self.edges if u == tool)

    def predecessors(self, tool: str) -> list[str]:
        return sorted(u for (u, v) in self.edges if v == tool)


def build_tdg(mdt: ModelDescriptionTable) -> ToolDependencyGraph:
    """Directed edge (u, v) exactly when an output of u is an input of v.

    Resource comparison uses the registry matching rule; self-edges are
    excluded.
    """
    tools = mdt.tools()
    outs = {t: mdt.tool_output_keys(t) for t in tools}
    ins = {t: mdt.tool_input_keys(t) for t in tools}
    edges = {
        (u, v)
        for u in tools
        for v in tools
        if u != v and outs[u] & ins[v]
    }
    return ToolDependencyGraph(nodes=tuple(tools), edges=frozenset(edges))


@dataclass(frozen=True)
class PlanNode:
    """One search node: a tool applied for a subtask instance.

    Spliced prerequisite nodes keep their own executable subtask kind (that
    is what benchmark lookups use) but carry the instance they were spliced
    in for.
    """

    node_id: int
    tool: str | None
    kind: str | None
    instance: SubtaskInstance | None
    role: str  # "root" | "candidate" | "prerequisite"
    input_keys: frozenset[str] = frozenset()
    output_keys: frozenset[str] = frozenset()

    @property
    def is_root(self) -> bool:
        return self.role == "root"

    def describe(self) -> str:
        if self.is_root:
            return ROOT_TOOL
        return f"{self.tool} [{self.kind}]"


@dataclass(frozen=True)
class ToolSubgraph:
    nodes: tuple[PlanNode, ...]
    edges: frozenset[tuple[int, int]]
    leaves: frozenset[int]
    successors: tuple[tuple[int, ...], ...] = field(compare=False)
    predecessors: tuple[tuple[int, ...], ...] = field(compare=False)

    @property
    def root(self) -> PlanNode:
        return self.nodes[ROOT_ID]

    def node(self, node_id: int) -> PlanNode:
        return self.nodes[node_id]


def _assemble(nodes: list[PlanNode], edges: set[tuple[int, int]], leaves: set[int]) -> ToolSubgraph:
    succ: list[list[int]] = [[] for _ in nodes]
    pred: list[list[int]] = [[] for _ in nodes]
    for a, b in edges:
        succ[a].append(b)
        pred[b].append(a)
    return ToolSubgraph(
        nodes=tuple(nodes),
        edges=frozenset(edges),
        leaves=frozenset(leaves),
        successors=tuple(tuple(sorted(s)) for s in succ),
        predecessors=tuple(tuple(sorted(p)) for p in pred),
    )


def _producers(mdt: ModelDescriptionTable, resource: str, consumer: ToolRecord) -> list[ToolRecord]:
    # Self-tool producers are never eligible: the TDG carries no self-edges.
    return sorted(
        (
            rec
            for rec in mdt.records.values()
            if resource in rec.output_keys and rec.tool != consumer.tool
        ),
        key=lambda r: (r.tool, r.subtask),
    )


def _resolve(
    record: ToolRecord,
    available: frozenset[str],
    mdt: ModelDescriptionTable,
    tdg: ToolDependencyGraph,
    visiting: frozenset[tuple[str, str]],
) -> list[ToolRecord]:
    """Minimal prerequisite chain making every input of `record` available.

    Walks backwards through the dependency graph from the candidate tool,
    resolving each missing input resource to a producer chain.  Producers
    are ranked by total spliced node count, ties broken by (tool, subtask)
    name.  Resources accumulate: once some chain element produces a
    resource, later elements may consume it without a direct edge.
    """
    chain: list[ToolRecord] = []
    avail = set(available)
    for resource in sorted(record.input_keys - avail):
        best: tuple[tuple[int, str, str], list[ToolRecord], ToolRecord] | None = None
        for producer in _producers(mdt, resource, record):
            if producer.key in visiting or producer.key == record.key:
                continue
            if (producer.tool, record.tool) not in tdg.edges:
                continue
            try:
                sub = _resolve(producer, frozenset(avail), mdt, tdg, visiting | {record.key})
            except UnsatisfiableDependency:
                continue
            rank = (len(sub) + 1, producer.tool, producer.subtask)
            if best is None or rank < best[0]:
                best = (rank, sub, producer)
        if best is None:
            raise UnsatisfiableDependency(
                f"no producer chain for resource {resource!r} required by "
                f"{record.tool!r} ({record.subtask})"
            )
        _, sub, producer = best
        for rec in sub + [producer]:
            chain.append(rec)
            avail |= rec.output_keys
    return chain


def build_tool_subgraph(
    tree: SubtaskTree, mdt: ModelDescriptionTable, tdg: ToolDependencyGraph
) -> ToolSubgraph:
    """Expand a subtask tree into the tool subgraph searched by the planner.

    Each subtask instance becomes the set of tools able to perform it; a
    candidate whose inputs are not yet available along the incoming path
    gets a prerequisite chain spliced in front of it.  Chains of one
    instance are merged on identical prefixes, so alternatives that share
    prerequisites (e.g. detection then segmentation) fan out only at the
    point they actually diverge.  Consecutive instances are joined by
    complete bipartite edges from the predecessor's terminal tools to the
    successor's entry tools; the virtual root feeds every entry of the root
    instances.
    """
    root = PlanNode(
        node_id=ROOT_ID, tool=None, kind=None, instance=None, role="root",
        output_keys=ROOT_OUTPUTS,
    )
    nodes: list[PlanNode] = [root]
    edges: set[tuple[int, int]] = set()
    avail_out: dict[SubtaskInstance, frozenset[str]] = {}
    terminals_of: dict[SubtaskInstance, list[int]] = {}
    leaves: set[int] = set()

    kids = tree.children()
    for inst in topological_order(tree):
        parents = tree.parents[inst]
        avail_in = set(ROOT_OUTPUTS)
        if parents:
            common = set(avail_out[parents[0]])
            for p in parents[1:]:
                common &= avail_out[p]
            avail_in |= common
        avail_in = frozenset(avail_in)

        candidates = sorted(
            (rec for rec in mdt.records.values() if rec.subtask == inst.kind),
            key=lambda r: r.tool,
        )
        if not candidates:
            raise NoToolForSubtask(f"no tool supports subtask {inst.kind!r}")

        trie: dict[tuple[tuple[str, str], ...], int] = {}
        local_edges: set[tuple[int, int]] = set()
        terminals: list[int] = []
        produced_sets: list[frozenset[str]] = []
        for record in candidates:
            chain = _resolve(record, avail_in, mdt, tdg, frozenset())
            seq = chain + [record]
            prefix: tuple[tuple[str, str], ...] = ()
            prev_id: int | None = None
            for rec in seq:
                prefix = prefix + (rec.key,)
                node_id = trie.get(prefix)
                if node_id is None:
                    node_id = len(nodes)
                    nodes.append(
                        PlanNode(
                            node_id=node_id,
                            tool=rec.tool,
                            kind=rec.subtask,
                            instance=inst,
                            role="candidate" if rec.key == record.key else "prerequisite",
                            input_keys=rec.input_keys,
                            output_keys=rec.output_keys,
                        )
                    )
                    trie[prefix] = node_id
                if prev_id is not None:
                    local_edges.add((prev_id, node_id))
                prev_id = node_id
            terminals.append(prev_id)
            produced_sets.append(frozenset().union(*(r.output_keys for r in seq)))

        with_inbound = {b for (_, b) in local_edges}
        entries = sorted(nid for nid in trie.values() if nid not in with_inbound)
        edges |= local_edges
        if parents:
            for p in parents:
                for t in terminals_of[p]:
                    for e in entries:
                        edges.add((t, e))
        else:
            for e in entries:
                edges.add((ROOT_ID, e))

        terminals_of[inst] = terminals
        guaranteed = produced_sets[0]
        for s in produced_sets[1:]:
            guaranteed &= s
        avail_out[inst] = avail_in | guaranteed
        if not kids[inst]:
            leaves.update(terminals)

    graph = _assemble(nodes, edges, leaves)
    validate_dag(graph)
    return graph


def _adjacency(graph) -> tuple[list[int], dict[int, list[int]]]:
    if isinstance(graph, ToolSubgraph):
        ids = [n.node_id for n in graph.nodes]
        return ids, {i: list(graph.successors[i]) for i in ids}
    if isinstance(graph, SubtaskTree):
        kids = graph.children()
        index = {n: i for i, n in enumerate(graph.nodes)}
        return list(index.values()), {
            index[n]: [index[c] for c in kids[n]] for n in graph.nodes
        }
    if isinstance(graph, ToolDependencyGraph):
        return list(graph.nodes), {t: graph.successors(t) for t in graph.nodes}
    raise TypeError(f"cannot validate object of type {type(graph).__name__}")


def validate_dag(graph) -> None:
    """Kahn-style acyclicity check; raises CycleDetected with one cycle."""
    ids, succ = _adjacency(graph)
    indeg = {i: 0 for i in ids}
    for i in ids:
        for j in succ[i]:
            indeg[j] += 1
    queue = [i for i in ids if indeg[i] == 0]
    seen = 0
    while queue:
        i = queue.pop()
        seen += 1
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    if seen == len(ids):
        return
    remaining = {i for i in ids if indeg[i] > 0}
    cycle = _find_cycle(remaining, succ)
    raise CycleDetected(f"graph contains a cycle: {cycle}", cycle)


def _find_cycle(remaining: set, succ: dict) -> list:
    start = next(iter(sorted(remaining, key=repr)))
    path, seen = [start], {start}
    while True:
        nxt = next(j for j in succ[path[-1]] if j in remaining)
        if nxt in seen:
            return path[path.index(nxt):] + [nxt]
        path.append(nxt)
        seen.add(nxt)


def count_paths(graph: ToolSubgraph) -> int:
    """Number of root-to-leaf paths, via DP over a topological order."""
    order = _topo_ids(graph)
    counts = [0] * len(graph.nodes)
    counts[ROOT_ID] = 1
    total = 0
    for i in order:
        if not graph.successors[i]:
            total += counts[i]
        for j in graph.successors[i]:
            counts[j] += counts[i]
    return total


def _topo_ids(graph: ToolSubgraph) -> list[int]:
    indeg = [len(p) for p in graph.predecessors]
    queue = sorted(i for i in range(len(graph.nodes)) if indeg[i] == 0)
    order = []
    while queue:
        i = queue.pop(0)
        order.append(i)
        for j in graph.successors[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
        queue.sort()
    return order


def enumerate_paths(graph: ToolSubgraph, cap: int = DEFAULT_PATH_CAP) -> list[tuple[int, ...]]:
    """All root-to-leaf node-id paths in lexicographic node-id order.

    Raises PathExplosion when the DP count exceeds the cap, without
    materializing anything.
    """
    total = count_paths(graph)
    if total > cap:
        raise PathExplosion(f"{total} root-to-leaf paths exceed the cap of {cap}")
    out: list[tuple[int, ...]] = []
    stack: list[int] = [ROOT_ID]

    def walk(i: int) -> None:
        succs = graph.successors[i]
        if not succs:
            out.append(tuple(stack))
            return
        for j in succs:
            stack.append(j)
            walk(j)
            stack.pop()

    walk(ROOT_ID)
    return out


def subgraph_to_json(graph: ToolSubgraph) -> str:
    payload = {
        "nodes": [
            {
                "id": n.node_id,
                "tool": n.tool if not n.is_root else ROOT_TOOL,
                "subtask": n.kind,
                "argument": n.instance.argument if n.instance else None,
                "ordinal": n.instance.ordinal if n.instance else None,
            }
            for n in graph.nodes
        ],
        "edges": sorted([a, b] for (a, b) in graph.edges),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def tdg_to_dot(tdg: ToolDependencyGraph) -> str:
    lines = ["digraph tool_dependencies {"]
    for tool in tdg.nodes:
        lines.append(f'  "{_dot_escape(tool)}";')
    for u, v in sorted(tdg.edges):
        lines.append(f'  "{_dot_escape(u)}" -> "{_dot_escape(v)}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def subgraph_to_dot(graph: ToolSubgraph) -> str:
    lines = ["digraph tool_subgraph {"]
    for n in graph.nodes:
        if n.is_root:
            label = ROOT_TOOL
        else:
            label = _dot_escape(n.tool) + "\\n" + _dot_escape(n.kind)
        shape = "diamond" if n.is_root else ("doublecircle" if n.node_id in graph.leaves else "box")
        lines.append(f'  n{n.node_id} [label="{label}", shape={shape}];')
    for a, b in sorted(graph.edges):
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
