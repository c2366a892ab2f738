"""Cost/quality-weighted best-first search over a tool subgraph.

The planner orders paths by f = g + h.  The realized prefix objective is

    g = (sum of executed times) ** alpha * (2 - product of qualities) ** (2 - alpha)

and the precomputed suffix estimate at a node is the minimum over its
successors y of

    (h_C(y) + C(y)) ** alpha * (2 - Q(y) * h_Q(y)) ** (2 - alpha)

where h_C accumulates the best-case suffix time, h_Q the best-case suffix
quality product, and C, Q are benchmark values.  alpha in [0, 2] trades
time against quality: 2 is pure time, 0 pure quality.

A node whose executed quality misses the threshold is retried with a bumped
attempt counter; a node that exhausts its retries drops the path without
re-queueing it, while other routes through the same node stay explorable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from heapq import heappop, heappush

from .errors import AlphaOutOfRange, QueueOverflow
from .execution import ExecutionOutcome, TraceRecorder, validate_quality
from .graphs import ROOT_ID, PlanNode, ToolSubgraph
from .registry import BenchmarkTable

DEFAULT_SEED = 0xC057A
DEFAULT_QUALITY_THRESHOLD = 0.8
DEFAULT_MAX_RETRIES = 3
DEFAULT_QUEUE_CAP = 100_000

STATUS_FOUND = "found"
STATUS_EXHAUSTED = "exhausted"


def validate_alpha(alpha: float) -> float:
    if not 0.0 <= alpha <= 2.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 2], got {alpha}")
    return float(alpha)


@dataclass(frozen=True)
class SearchConfig:
    alpha: float = 1.0
    quality_threshold: float = DEFAULT_QUALITY_THRESHOLD
    max_retries: int = DEFAULT_MAX_RETRIES
    queue_cap: int = DEFAULT_QUEUE_CAP
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        validate_alpha(self.alpha)
        if not 0.0 <= self.quality_threshold <= 1.0:
            raise ValueError("quality_threshold must lie in [0, 1]")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.queue_cap < 1:
            raise ValueError("queue_cap must be positive")


def _pow(base: float, exponent: float) -> float:
    # 0 ** 0 is taken as 1; only degenerate zero-time inputs reach it.
    if base == 0.0 and exponent == 0.0:
        return 1.0
    return base**exponent


def compute_g(cum_time: float, cum_quality: float, alpha: float) -> float:
    """Realized prefix objective; a zero-time prefix (the bare root) is 0."""
    if cum_time == 0.0:
        return 0.0
    return cum_time**alpha * (2.0 - cum_quality) ** (2.0 - alpha)


@dataclass(frozen=True)
class HeuristicEntry:
    h: float
    h_C: float
    h_Q: float


def precompute_heuristics(
    graph: ToolSubgraph, bt: BenchmarkTable, alpha: float
) -> dict[int, HeuristicEntry]:
    """Best-case suffix estimates for every node, in reverse topological order.

    Sink nodes get (h=0, h_C=0, h_Q=1) exactly.  Elsewhere the minimizing
    successor hands its accumulated (h_C + C, Q * h_Q) upward; among equal
    values the smallest successor id wins, which makes the table
    deterministic.
    """
    validate_alpha(alpha)
    entries: dict[int, HeuristicEntry] = {}
    order = _reverse_topological(graph)
    for node_id in order:
        succs = graph.successors[node_id]
        if not succs:
            entries[node_id] = HeuristicEntry(h=0.0, h_C=0.0, h_Q=1.0)
            continue
        best_val = None
        best_hc = best_hq = 0.0
        for succ in succs:
            node = graph.nodes[succ]
            if node.is_root:
                c, q = 0.0, 1.0
            else:
                row = bt.row(node.tool, node.kind)
                c, q = row.time_seconds, row.quality_norm
            sub = entries[succ]
            val = _pow(sub.h_C + c, alpha) * (2.0 - q * sub.h_Q) ** (2.0 - alpha)
            if best_val is None or val < best_val:
                best_val = val
                best_hc = sub.h_C + c
                best_hq = q * sub.h_Q
        entries[node_id] = HeuristicEntry(h=best_val, h_C=best_hc, h_Q=best_hq)
    return entries


def _reverse_topological(graph: ToolSubgraph) -> list[int]:
    outdeg = [len(s) for s in graph.successors]
    queue = sorted(i for i in range(len(graph.nodes)) if outdeg[i] == 0)
    order: list[int] = []
    while queue:
        i = queue.pop(0)
        order.append(i)
        for j in graph.predecessors[i]:
            outdeg[j] -= 1
            if outdeg[j] == 0:
                queue.append(j)
        queue.sort()
    return order


@dataclass(frozen=True)
class PathStep:
    node_id: int
    time_seconds: float  # all attempts for this node on this path
    quality: float  # quality of the final (accepted) attempt
    attempts: int


@dataclass(frozen=True)
class PathState:
    node_ids: tuple[int, ...]
    steps: tuple[PathStep, ...]
    cum_time: float
    cum_quality: float
    g: float
    f: float


@dataclass(frozen=True)
class RetryOutcome:
    succeeded: bool
    extra_time: float
    final_quality: float
    attempts: int  # total invocations including the original failed one


def retry_node(
    node: PlanNode,
    executor,
    cfg: SearchConfig,
    attempt_path: PathState,
    recorder: TraceRecorder | None = None,
    first_outcome: ExecutionOutcome | None = None,
) -> RetryOutcome:
    """Re-invoke a below-threshold node with bumped attempt counters.

    Stops at the first attempt meeting the quality threshold, or after
    max_retries re-invocations.  extra_time sums the retry attempts only;
    the original attempt's time is already on the path.
    """
    extra_time = 0.0
    final_quality = first_outcome.quality if first_outcome is not None else 0.0
    retries = 0
    succeeded = False
    for attempt in range(2, cfg.max_retries + 2):
        outcome = executor(node, attempt)
        retries += 1
        extra_time += outcome.time_seconds
        final_quality = outcome.quality
        passed = validate_quality(outcome, cfg.quality_threshold)
        if recorder is not None:
            recorder.record(node, attempt, outcome, passed)
        if passed:
            succeeded = True
            break
    return RetryOutcome(
        succeeded=succeeded,
        extra_time=extra_time,
        final_quality=final_quality,
        attempts=1 + retries,
    )


@dataclass(frozen=True)
class PlanResult:
    status: str
    alpha: float
    path: PathState | None
    trace: object
    expanded_count: int

    @property
    def found(self) -> bool:
        return self.status == STATUS_FOUND

    def to_json_dict(self, graph: ToolSubgraph) -> dict:
        path_rows = []
        totals = None
        if self.path is not None:
            for step in self.path.steps:
                node = graph.nodes[step.node_id]
                path_rows.append(
                    {
                        "tool": node.tool if not node.is_root else "ROOT",
                        "subtask": node.kind,
                        "argument": node.instance.argument if node.instance else None,
                        "ordinal": node.instance.ordinal if node.instance else None,
                        "c": step.time_seconds,
                        "q": step.quality,
                        "attempts": step.attempts,
                    }
                )
            totals = {
                "time": self.path.cum_time,
                "quality_product": self.path.cum_quality,
                "g": self.path.g,
                "f": self.path.f,
            }
        return {
            "status": self.status,
            "alpha": self.alpha,
            "path": path_rows,
            "totals": totals,
            "expanded_count": self.expanded_count,
        }


def astar_search(
    graph: ToolSubgraph,
    heuristics: dict[int, HeuristicEntry],
    executor,
    cfg: SearchConfig,
    recorder: TraceRecorder | None = None,
) -> PlanResult:
    """Best-first search returning the first leaf-ending path popped.

    Successors are executed when generated; a passing node extends the
    path, a failing one goes through the retry mechanism and, if it never
    passes, the extension is dropped without re-queueing.  Queue order is
    (f, insertion counter), so runs replay exactly.  Paths into an already
    visited node are pruned only when strictly dominated: realized g above
    the node's best and quality product no better than the best path's.
    """
    rec = recorder if recorder is not None else TraceRecorder()
    counter = itertools.count()
    root_state = PathState(
        node_ids=(ROOT_ID,),
        steps=(PathStep(node_id=ROOT_ID, time_seconds=0.0, quality=1.0, attempts=0),),
        cum_time=0.0,
        cum_quality=1.0,
        g=0.0,
        f=heuristics[ROOT_ID].h,
    )
    heap: list[tuple[float, int, PathState]] = [(root_state.f, next(counter), root_state)]
    best: dict[int, tuple[float, float]] = {ROOT_ID: (0.0, 1.0)}
    expanded = 0

    while heap:
        _, _, state = heappop(heap)
        expanded += 1
        last = state.node_ids[-1]
        if last in graph.leaves:
            return PlanResult(
                status=STATUS_FOUND,
                alpha=cfg.alpha,
                path=state,
                trace=rec.build(),
                expanded_count=expanded,
            )
        for succ in graph.successors[last]:
            node = graph.nodes[succ]
            first = executor(node, 1)
            passed = validate_quality(first, cfg.quality_threshold)
            rec.record(node, 1, first, passed)
            g_new = compute_g(
                state.cum_time + first.time_seconds,
                state.cum_quality * first.quality,
                cfg.alpha,
            )
            if passed:
                attempts, extra_time, final_quality = 1, 0.0, first.quality
                g_literal = g_new
            else:
                retry = retry_node(node, executor, cfg, state, recorder=rec, first_outcome=first)
                if not retry.succeeded:
                    continue
                attempts = retry.attempts
                extra_time = retry.extra_time
                final_quality = retry.final_quality
                g_literal = g_new + compute_g(extra_time, final_quality, cfg.alpha)

            cum_time = state.cum_time + first.time_seconds + extra_time
            cum_quality = state.cum_quality * final_quality
            g_path = compute_g(cum_time, cum_quality, cfg.alpha)
            if attempts > 1:
                rec.annotate_last(g_literal=g_literal, g_path=g_path)

            known = best.get(succ)
            if known is not None and g_path > known[0] and cum_quality <= known[1]:
                continue
            if known is None or g_path < known[0]:
                best[succ] = (g_path, cum_quality)

            f = g_path + heuristics[succ].h
            next_state = PathState(
                node_ids=state.node_ids + (succ,),
                steps=state.steps
                + (
                    PathStep(
                        node_id=succ,
                        time_seconds=first.time_seconds + extra_time,
                        quality=final_quality,
                        attempts=attempts,
                    ),
                ),
                cum_time=cum_time,
                cum_quality=cum_quality,
                g=g_path,
                f=f,
            )
            heappush(heap, (f, next(counter), next_state))
            if len(heap) > cfg.queue_cap:
                raise QueueOverflow(
                    f"search queue exceeded its capacity of {cfg.queue_cap} paths"
                )

    return PlanResult(
        status=STATUS_EXHAUSTED,
        alpha=cfg.alpha,
        path=None,
        trace=rec.build(),
        expanded_count=expanded,
    )
