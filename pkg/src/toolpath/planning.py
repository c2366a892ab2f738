"""Subtask-tree planning front end.

Builds the text prompt handed to an external planner model and parses the
JSON subtask trees it returns.  A subtask tree is a DAG whose nodes are
labeled subtask instances; every root-to-leaf chain is one valid ordering
of the work.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass
from collections import deque

from .errors import (
    CycleDetected,
    DanglingParent,
    EmptyTask,
    EndpointUnavailable,
    ParseError,
    TransportError,
    UnknownSubtask,
)
from .registry import PLANNER_SUBTASKS, canonical_subtask

PLANNER_URL_ENV = "COSTA_PLANNER_URL"


@dataclass(frozen=True, order=True)
class SubtaskInstance:
    """A single labeled occurrence of a subtask within one tree."""

    kind: str
    argument: str
    ordinal: int

    def label(self) -> str:
        if self.argument:
            return f"{self.kind} ({self.argument})({self.ordinal})"
        return f"{self.kind}({self.ordinal})"


@dataclass(frozen=True)
class SubtaskTree:
    nodes: tuple[SubtaskInstance, ...]
    parents: dict[SubtaskInstance, tuple[SubtaskInstance, ...]]
    task_text: str

    def roots(self) -> list[SubtaskInstance]:
        return [n for n in self.nodes if not self.parents[n]]

    def children(self) -> dict[SubtaskInstance, list[SubtaskInstance]]:
        out: dict[SubtaskInstance, list[SubtaskInstance]] = {n: [] for n in self.nodes}
        for node, parents in self.parents.items():
            for p in parents:
                out[p].append(node)
        for lst in out.values():
            lst.sort(key=lambda n: n.label())
        return out

    def leaves(self) -> list[SubtaskInstance]:
        kids = self.children()
        return [n for n in self.nodes if not kids[n]]


def _final_paren_group(text: str) -> tuple[str, str] | None:
    """Split off a trailing balanced "(...)" group; None when there is none."""
    s = text.rstrip()
    if not s.endswith(")"):
        return None
    depth = 0
    for i in range(len(s) - 1, -1, -1):
        if s[i] == ")":
            depth += 1
        elif s[i] == "(":
            depth -= 1
            if depth == 0:
                return s[:i].rstrip(), s[i + 1 : -1]
    return None


def parse_label(label: str) -> tuple[str, str, int | None]:
    """Split a node label into (kind, argument, ordinal).

    The grammar is "<Kind> (<Argument>)(<ordinal>)" with the argument
    optional.  The trailing group counts as the ordinal only when it is all
    digits; a label without one gets an ordinal assigned by the caller.
    """
    rest = label.strip()
    ordinal: int | None = None
    argument = ""
    split = _final_paren_group(rest)
    if split is not None and split[1].strip().isdigit():
        rest, group = split
        ordinal = int(group.strip())
        split = _final_paren_group(rest)
    if split is not None:
        rest, argument = split
        argument = argument.strip()
    kind = rest.strip()
    if not kind:
        raise ParseError(f"label {label!r} has no subtask name")
    return kind, argument, ordinal


def parse_subtask_tree(
    json_text: str, vocabulary: tuple[str, ...] = PLANNER_SUBTASKS
) -> SubtaskTree:
    """Parse a planner-format JSON subtask tree and verify it is a DAG.

    Raises ParseError for malformed JSON or duplicate labels, UnknownSubtask
    for names outside the vocabulary, DanglingParent for unresolved parent
    references and CycleDetected when the parent relation is cyclic.
    """
    try:
        raw = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"subtask tree is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or "subtask_tree" not in raw:
        raise ParseError('subtask tree JSON must be an object with a "subtask_tree" field')
    items = raw["subtask_tree"]
    if not isinstance(items, list) or not items:
        raise ParseError('"subtask_tree" must be a non-empty array')
    task_text = raw.get("task", "")

    by_label: dict[str, SubtaskInstance] = {}
    parent_labels: dict[SubtaskInstance, list[str]] = {}
    pending: list[tuple[str, str, str, list[str]]] = []
    used_ordinals: set[int] = set()
    for i, item in enumerate(items):
        if not isinstance(item, dict) or "subtask" not in item or "parent" not in item:
            raise ParseError(f'tree node {i} must have "subtask" and "parent" fields')
        label = item["subtask"]
        parents = item["parent"]
        if not isinstance(label, str) or not isinstance(parents, list):
            raise ParseError(f"tree node {i} has wrong field types")
        kind, argument, ordinal = parse_label(label)
        try:
            kind = canonical_subtask(kind, vocabulary)
        except UnknownSubtask:
            raise UnknownSubtask(f"tree node {i}: unknown subtask kind in label {label!r}") from None
        if ordinal is not None:
            used_ordinals.add(ordinal)
        pending.append((label, kind, argument, list(parents)))
        if ordinal is not None:
            _register(by_label, parent_labels, label, kind, argument, ordinal, parents)

    next_ordinal = max(used_ordinals, default=0) + 1
    for label, kind, argument, parents in pending:
        if label in by_label:
            continue
        _register(by_label, parent_labels, label, kind, argument, next_ordinal, parents)
        next_ordinal += 1

    parents_resolved: dict[SubtaskInstance, tuple[SubtaskInstance, ...]] = {}
    for node, labels in parent_labels.items():
        resolved = []
        for lab in labels:
            if lab not in by_label:
                raise DanglingParent(f"node {node.label()!r} references missing parent {lab!r}")
            resolved.append(by_label[lab])
        parents_resolved[node] = tuple(resolved)

    nodes = tuple(by_label[p[0]] for p in pending)
    tree = SubtaskTree(nodes=nodes, parents=parents_resolved, task_text=task_text)
    if not tree.roots():
        raise CycleDetected("subtask tree has no root (every node has a parent)")
    _check_acyclic(tree)
    return tree


def _register(by_label, parent_labels, label, kind, argument, ordinal, parents):
    node = SubtaskInstance(kind=kind, argument=argument, ordinal=ordinal)
    if label in by_label or node in parent_labels:
        raise ParseError(f"duplicate node label {label!r}")
    by_label[label] = node
    parent_labels[node] = list(parents)


def _check_acyclic(tree: SubtaskTree) -> None:
    kids = tree.children()
    indeg = {n: len(tree.parents[n]) for n in tree.nodes}
    queue = deque(sorted((n for n in tree.nodes if indeg[n] == 0), key=lambda n: n.label()))
    seen = 0
    while queue:
        node = queue.popleft()
        seen += 1
        for child in kids[node]:
            indeg[child] -= 1
            if indeg[child] == 0:
                queue.append(child)
    if seen != len(tree.nodes):
        cycle = [n.label() for n in tree.nodes if indeg[n] > 0]
        raise CycleDetected(f"subtask tree contains a cycle among: {cycle}", cycle)


def topological_order(tree: SubtaskTree) -> list[SubtaskInstance]:
    """Kahn order with ready nodes taken in label order, so it is stable."""
    kids = tree.children()
    indeg = {n: len(tree.parents[n]) for n in tree.nodes}
    ready = sorted((n for n in tree.nodes if indeg[n] == 0), key=lambda n: n.label())
    order: list[SubtaskInstance] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        changed = False
        for child in kids[node]:
            indeg[child] -= 1
            if indeg[child] == 0:
                ready.append(child)
                changed = True
        if changed:
            ready.sort(key=lambda n: n.label())
    if len(order) != len(tree.nodes):
        raise CycleDetected("subtask tree contains a cycle")
    return order


def root_to_leaf_orderings(tree: SubtaskTree) -> list[tuple[SubtaskInstance, ...]]:
    """Every root-to-leaf chain, in deterministic label order."""
    kids = tree.children()
    out: list[tuple[SubtaskInstance, ...]] = []

    def walk(node: SubtaskInstance, acc: list[SubtaskInstance]) -> None:
        acc.append(node)
        if not kids[node]:
            out.append(tuple(acc))
        else:
            for child in kids[node]:
                walk(child, acc)
        acc.pop()

    for root in sorted(tree.roots(), key=lambda n: n.label()):
        walk(root, [])
    return out


def missing_requirements(
    tree: SubtaskTree, required: set[tuple[str, str]]
) -> list[tuple[tuple[str, str], tuple[SubtaskInstance, ...]]]:
    """Required (kind, argument) pairs absent from some root-to-leaf chain."""
    gaps = []
    for chain in root_to_leaf_orderings(tree):
        covered = {(n.kind, n.argument) for n in chain}
        for req in sorted(required):
            if req not in covered:
                gaps.append((req, chain))
    return gaps


def serialize_tree(tree: SubtaskTree) -> str:
    payload = {
        "task": tree.task_text,
        "subtask_tree": [
            {"subtask": n.label(), "parent": [p.label() for p in tree.parents[n]]}
            for n in tree.nodes
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


@dataclass(frozen=True)
class PlannerPrompt:
    text: str


_PROMPT_TEMPLATE = """You are a planning model that decomposes an image editing request into a
subtask tree.  Each tree node is one atomic operation on the image; an edge
means the child may only run after its parent.

Rules:
1. Use only subtasks from the Supported Subtasks list, spelled exactly.
2. Label each node "<Subtask> (<Object or Detail>)(<n>)" where n numbers the
   node uniquely across the tree; replacements read (Old -> New).
3. When independent subtasks can run in either order, emit both orderings as
   separate branches; a subtask appearing in several branches gets a distinct
   number per occurrence.
4. Every root-to-leaf path must contain all subtasks required to fulfill the
   request, with dependencies ordered parent-before-child.

Supported Subtasks: {subtasks}

Respond with JSON only, shaped as:
{{"task": "<the request>", "subtask_tree": [{{"subtask": "<label>", "parent": ["<label>", ...]}}, ...]}}
Nodes with no prerequisite use an empty parent list.

Image: input_image
Request: {task}
"""


def build_planner_prompt(
    task_text: str, vocabulary: tuple[str, ...] = PLANNER_SUBTASKS
) -> PlannerPrompt:
    """Assemble the planner prompt for a task.  Deterministic per input."""
    if not task_text or not task_text.strip():
        raise EmptyTask("task description is empty")
    return PlannerPrompt(
        text=_PROMPT_TEMPLATE.format(subtasks=", ".join(vocabulary), task=task_text.strip())
    )


class FilePlannerClient:
    """Planner stub that replays a canned response file."""

    def __init__(self, path):
        self.path = path

    def generate(self, prompt_text: str) -> str:
        with open(self.path, encoding="utf-8") as fh:
            return fh.read()


class HttpPlannerClient:
    """POSTs {"prompt": ...} to the endpoint and reads {"text": ...} back."""

    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def generate(self, prompt_text: str) -> str:
        body = json.dumps({"prompt": prompt_text}).encode("utf-8")
        req = urllib.request.Request(
            self.base_url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise TransportError(f"planner endpoint request failed: {exc}") from exc
        if not isinstance(payload, dict) or "text" not in payload:
            raise TransportError('planner endpoint response lacks a "text" field')
        return payload["text"]


def planner_client_from_env(url: str | None = None) -> HttpPlannerClient:
    endpoint = url or os.environ.get(PLANNER_URL_ENV)
    if not endpoint:
        raise EndpointUnavailable(
            f"no planner endpoint configured; set {PLANNER_URL_ENV} or pass a URL"
        )
    return HttpPlannerClient(endpoint)


def request_tree(client, prompt: PlannerPrompt) -> str:
    """Single-attempt call to the planner; returns the raw response text."""
    if client is None:
        raise EndpointUnavailable("planner client is not configured")
    return client.generate(prompt.text)
