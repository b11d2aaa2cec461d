"""Global persistent tree of evaluated candidates.

Append-only.  Nodes are grouped into expansion batches; the frontier is the
most recent committed batch.  A virtual super-root of depth -1 makes LCA
queries total across the root forest.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorruptCheckpoint, UnknownNode, UnknownParent
from .program_model import FunctionEntry, Role, StructuredProgram
from .scores import FAILED_SCORE, is_failed

CHECKPOINT_VERSION = 1


class NodeStatus(enum.Enum):
    EVALUATED = "evaluated"
    FAILED = "failed"
    INCOMPLETE = "incomplete"


@dataclass
class OperatorWeights:
    micro: float = 0.0
    macro: float = 0.0

    def copy(self) -> "OperatorWeights":
        return OperatorWeights(self.micro, self.macro)


@dataclass
class ProgramNode:
    program: StructuredProgram
    score: float
    thought: str = ""
    status: NodeStatus = NodeStatus.EVALUATED
    parent_id: int | None = None
    history: tuple[tuple[str, tuple[int, ...]], ...] = ()
    weights: OperatorWeights = field(default_factory=OperatorWeights)
    id: int | None = None
    depth: int = 0
    generation: int = 0

    def __post_init__(self):
        if (self.status is NodeStatus.EVALUATED) == is_failed(self.score):
            raise ValueError("status Evaluated must coincide with a finite score")

    @property
    def evaluated(self) -> bool:
        return self.status is NodeStatus.EVALUATED


@dataclass(frozen=True)
class TreeStats:
    node_count: int
    evaluated_count: int
    s_max: float | None
    s_min: float | None
    d_max: int
    best_id: int | None
    frontier_ids: tuple[int, ...]


class SearchTree:
    def __init__(self):
        self._nodes: dict[int, ProgramNode] = {}
        self._order: list[int] = []
        self._batches: list[list[int]] = []
        self._open_batch: list[int] = []

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._nodes

    def node(self, node_id: int) -> ProgramNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNode(f"no node with id {node_id}") from None

    def nodes(self) -> list[ProgramNode]:
        return [self._nodes[i] for i in self._order]

    def insert(self, node: ProgramNode) -> int:
        """Store permanently and add to the open expansion batch."""
        if node.parent_id is not None and node.parent_id not in self._nodes:
            raise UnknownParent(f"parent {node.parent_id} does not exist")
        node.id = len(self._order)
        node.depth = 0 if node.parent_id is None else self._nodes[node.parent_id].depth + 1
        node.generation = len(self._batches)
        self._nodes[node.id] = node
        self._order.append(node.id)
        self._open_batch.append(node.id)
        return node.id

    def commit_batch(self) -> None:
        """Seal the open batch; it becomes the frontier."""
        if self._open_batch:
            self._batches.append(self._open_batch)
            self._open_batch = []

    @property
    def generation(self) -> int:
        return len(self._batches)

    def frontier(self) -> list[ProgramNode]:
        if not self._batches:
            return []
        return [self._nodes[i] for i in self._batches[-1]]

    def evaluated_nodes(self) -> list[ProgramNode]:
        return [n for n in self.nodes() if n.evaluated]

    def update_weights(self, node_id: int, weights: OperatorWeights) -> None:
        self.node(node_id).weights = weights

    def ancestors(self, node_id: int) -> list[int]:
        """Chain from the node itself up to its root, inclusive."""
        chain = [node_id]
        node = self.node(node_id)
        while node.parent_id is not None:
            chain.append(node.parent_id)
            node = self._nodes[node.parent_id]
        return chain

    def lca_depth(self, a: int, b: int) -> int:
        """Depth of the deepest common ancestor; -1 across disjoint lineages
        (the virtual super-root)."""
        if a == b:
            raise ValueError("lca_depth requires two distinct nodes")
        mine = set(self.ancestors(a))
        node_id = b
        while True:
            if node_id in mine:
                return self.node(node_id).depth
            parent = self.node(node_id).parent_id
            if parent is None:
                return -1
            node_id = parent

    def stats(self) -> TreeStats:
        evaluated = self.evaluated_nodes()
        s_max = s_min = None
        best_id = None
        if evaluated:
            best = max(evaluated, key=lambda n: (n.score, -n.id))
            s_max, best_id = best.score, best.id
            s_min = min(n.score for n in evaluated)
        d_max = max((n.depth for n in self.nodes()), default=0)
        frontier_ids = tuple(self._batches[-1]) if self._batches else ()
        return TreeStats(
            node_count=len(self._nodes),
            evaluated_count=len(evaluated),
            s_max=s_max,
            s_min=s_min,
            d_max=d_max,
            best_id=best_id,
            frontier_ids=frontier_ids,
        )

    # --- serialization ------------------------------------------------------

    def to_doc(self) -> dict:
        return {
            "nodes": [_node_doc(self._nodes[i]) for i in self._order],
            "batches": [list(b) for b in self._batches],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SearchTree":
        tree = cls()
        for node_doc in doc["nodes"]:
            node = _node_from_doc(node_doc)
            tree._nodes[node.id] = node
            tree._order.append(node.id)
        tree._batches = [list(b) for b in doc["batches"]]
        return tree


def _program_doc(program: StructuredProgram) -> dict:
    return {
        "preface": program.preface,
        "entry": program.entry,
        "functions": [
            {"name": e.name, "signature": e.signature, "body": e.body, "role": e.role.value}
            for e in program.entries
        ],
    }


def _program_from_doc(doc: dict) -> StructuredProgram:
    entries = tuple(
        FunctionEntry(f["name"], f["signature"], f["body"], Role(f["role"]))
        for f in doc["functions"]
    )
    return StructuredProgram(doc["preface"], entries, doc["entry"])


def _node_doc(node: ProgramNode) -> dict:
    return {
        "id": node.id,
        "parent_id": node.parent_id,
        "score": None if is_failed(node.score) else node.score,
        "thought": node.thought,
        "status": node.status.value,
        "history": [[op, list(parents)] for op, parents in node.history],
        "weights": [node.weights.micro, node.weights.macro],
        "depth": node.depth,
        "generation": node.generation,
        "program": _program_doc(node.program),
    }


def _node_from_doc(doc: dict) -> ProgramNode:
    score = FAILED_SCORE if doc["score"] is None else doc["score"]
    return ProgramNode(
        program=_program_from_doc(doc["program"]),
        score=score,
        thought=doc["thought"],
        status=NodeStatus(doc["status"]),
        parent_id=doc["parent_id"],
        history=tuple((op, tuple(parents)) for op, parents in doc["history"]),
        weights=OperatorWeights(*doc["weights"]),
        id=doc["id"],
        depth=doc["depth"],
        generation=doc["generation"],
    )


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def checkpoint(tree: SearchTree, path: str | Path, extra: dict | None = None) -> None:
    """Write tree plus run state with a schema version and content hash."""
    payload = {"tree": tree.to_doc(), "extra": extra or {}}
    doc = {
        "version": CHECKPOINT_VERSION,
        "sha256": hashlib.sha256(_canonical(payload).encode()).hexdigest(),
        "payload": payload,
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def restore(path: str | Path) -> tuple[SearchTree, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CorruptCheckpoint(f"unsupported checkpoint version {doc.get('version')}")
    payload = doc["payload"]
    digest = hashlib.sha256(_canonical(payload).encode()).hexdigest()
    if digest != doc.get("sha256"):
        raise CorruptCheckpoint("checkpoint content hash mismatch")
    return SearchTree.from_doc(payload["tree"]), payload["extra"]


def export_node_table(tree: SearchTree, path: str | Path) -> None:
    """Per-node records as a comma-separated table for offline analysis."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "parent_id", "operator", "score", "generation", "depth", "status"])
        for node in tree.nodes():
            op = node.history[-1][0] if node.history else ""
            score = "" if is_failed(node.score) else repr(node.score)
            writer.writerow([node.id, node.parent_id, op, score, node.generation, node.depth, node.status.value])
