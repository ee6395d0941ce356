"""Combinatorial model of toroidal defining sequences.

A :class:`PatternSystem` is a finite presentation of an infinite nested
sequence of stages ``C_0, C_1, ...``: stage-0 roots, a dictionary of
replacement patterns, and an eventually periodic per-stage assignment that
says which pattern is instantiated inside each component.  :func:`expand`
turns it into explicit :class:`StageGraph` objects.

Roots may be partitioned into *lanes*; every lane has its own assignment
and exactly one spine root.  Documents written by hand or by the generators
have a single lane and never mention it.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from math import lcm
from typing import Any, Iterator, Mapping

import jsonschema

from .sequences import EPSeq

DEFAULT_NODE_CAP = 10**6
CAP_ENV_VAR = "DEFSEQ_NODE_CAP"
ARRANGEMENTS = ("chain", "custom")


class SchemaError(ValueError):
    """A document is malformed or violates a semantic invariant."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class NodeCapExceeded(RuntimeError):
    """Expansion would create more nodes than the configured cap."""

    def __init__(self, needed: int, cap: int):
        self.needed = needed
        self.cap = cap
        super().__init__(f"expansion needs {needed} nodes, cap is {cap} (set {CAP_ENV_VAR} to raise it)")


def node_cap() -> int:
    raw = os.environ.get(CAP_ENV_VAR)
    if raw is None or not raw.strip():
        return DEFAULT_NODE_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"{CAP_ENV_VAR} must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ValueError(f"{CAP_ENV_VAR} must be positive")
    return cap


@dataclass(frozen=True, order=True)
class Edge:
    """Unordered linking record between two components of one stage."""

    a: Any
    b: Any
    lk: int
    split: bool

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"edge from {self.a!r} to itself")
        if self.lk != 0 and self.split:
            raise ValueError(f"edge {self.a!r}-{self.b!r} has lk={self.lk} but is marked split")
        if self.b < self.a:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    @property
    def linked(self) -> bool:
        return self.lk != 0

    def other(self, node: Any) -> Any:
        return self.b if node == self.a else self.a


@dataclass(frozen=True)
class TorusNode:
    id: str
    parent: str | None
    stage: int
    winding: int | None
    knot_label: str = "unknot"
    spine_flag: bool = False
    lane: int = 0


@dataclass(frozen=True)
class StageGraph:
    stage: int
    nodes: tuple[TorusNode, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError(f"stage {self.stage} has duplicate node ids")
        known = set(ids)
        seen = set()
        for e in self.edges:
            if e.a not in known or e.b not in known:
                raise ValueError(f"stage {self.stage} edge {e.a}-{e.b} references unknown node")
            if (e.a, e.b) in seen:
                raise ValueError(f"stage {self.stage} has duplicate edge {e.a}-{e.b}")
            seen.add((e.a, e.b))

    def __len__(self) -> int:
        return len(self.nodes)

    def ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def node(self, node_id: str) -> TorusNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def edge_map(self) -> dict[tuple[str, str], Edge]:
        out = {}
        for e in self.edges:
            out[(e.a, e.b)] = e
            out[(e.b, e.a)] = e
        return out

    def linked_neighbors(self) -> dict[str, list[str]]:
        """Node id -> sorted ids of nodes sharing an edge with lk != 0."""
        nbrs: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            if e.linked:
                nbrs[e.a].append(e.b)
                nbrs[e.b].append(e.a)
        return {k: sorted(v) for k, v in nbrs.items()}

    def by_parent(self) -> dict[str | None, list[TorusNode]]:
        groups: dict[str | None, list[TorusNode]] = {}
        for n in self.nodes:
            groups.setdefault(n.parent, []).append(n)
        return groups


@dataclass(frozen=True)
class ChildSlot:
    winding: int
    knot: str = "unknot"


@dataclass(frozen=True)
class Pattern:
    """Replacement rule: the components placed inside one parent torus."""

    name: str
    children: tuple[ChildSlot, ...]
    edges: tuple[Edge, ...] = ()
    arrangement: str = "custom"
    spine_child: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        k = len(self.children)
        if k == 0:
            raise ValueError(f"pattern {self.name!r} has no children")
        if self.arrangement not in ARRANGEMENTS:
            raise ValueError(f"pattern {self.name!r}: arrangement must be one of {ARRANGEMENTS}")
        pairs = set()
        for e in self.edges:
            if not (0 <= e.a < k and 0 <= e.b < k):
                raise ValueError(f"pattern {self.name!r}: edge {e.a}-{e.b} outside 0..{k - 1}")
            if (e.a, e.b) in pairs:
                raise ValueError(f"pattern {self.name!r}: duplicate edge {e.a}-{e.b}")
            pairs.add((e.a, e.b))
        if self.spine_child is not None and not 0 <= self.spine_child < k:
            raise ValueError(f"pattern {self.name!r}: spine_child {self.spine_child} outside 0..{k - 1}")
        if self.arrangement == "chain" and not self._is_cycle():
            raise ValueError(
                f"pattern {self.name!r}: chain arrangement needs >= 3 children whose "
                "edges form one cycle with nonzero linking numbers"
            )

    def _is_cycle(self) -> bool:
        k = len(self.children)
        if k < 3 or len(self.edges) != k or not all(e.linked for e in self.edges):
            return False
        deg = [0] * k
        for e in self.edges:
            deg[e.a] += 1
            deg[e.b] += 1
        return all(d == 2 for d in deg) and len(self.cycle_order()) == k

    def cycle_order(self) -> list[int]:
        """Children in order around the linking cycle, starting at child 0."""
        adj: dict[int, list[int]] = {i: [] for i in range(len(self.children))}
        for e in self.edges:
            if e.linked:
                adj[e.a].append(e.b)
                adj[e.b].append(e.a)
        order = [0]
        prev, cur = None, 0
        while True:
            nxt = [j for j in sorted(adj[cur]) if j != prev]
            if not nxt or nxt[0] == 0:
                break
            prev, cur = cur, nxt[0]
            if cur in order:
                break
            order.append(cur)
        return order

    @property
    def linked_children(self) -> frozenset[int]:
        out = set()
        for e in self.edges:
            if e.linked:
                out.update((e.a, e.b))
        return frozenset(out)

    def is_unknot_chain(self) -> bool:
        return self.arrangement == "chain" and all(c.knot == "unknot" for c in self.children)

    def same_shape(self, other: "Pattern") -> bool:
        return (
            self.children == other.children
            and self.edges == other.edges
            and self.arrangement == other.arrangement
            and self.spine_child == other.spine_child
        )

    def renamed(self, name: str) -> "Pattern":
        return Pattern(name, self.children, self.edges, self.arrangement, self.spine_child)


@dataclass(frozen=True)
class Rule:
    spine: str
    other: str


@dataclass(frozen=True)
class Assignment:
    """Per-stage rules for stages 1, 2, ...; ``preperiod[0]`` governs stage 1."""

    preperiod: tuple[Rule, ...]
    period: tuple[Rule, ...]

    def __post_init__(self):
        object.__setattr__(self, "preperiod", tuple(self.preperiod))
        object.__setattr__(self, "period", tuple(self.period))
        if not self.period:
            raise ValueError("assignment period must be nonempty")

    def rule(self, m: int) -> Rule:
        if m < 1:
            raise ValueError("rules start at stage 1")
        i = m - 1
        if i < len(self.preperiod):
            return self.preperiod[i]
        return self.period[(i - len(self.preperiod)) % len(self.period)]

    def rules(self) -> tuple[Rule, ...]:
        return self.preperiod + self.period

    def sequence(self) -> EPSeq:
        return EPSeq(self.preperiod, self.period)

    def renamed(self, mapping: Mapping[str, str]) -> "Assignment":
        def r(rule: Rule) -> Rule:
            return Rule(mapping.get(rule.spine, rule.spine), mapping.get(rule.other, rule.other))

        return Assignment(tuple(map(r, self.preperiod)), tuple(map(r, self.period)))


@dataclass(frozen=True)
class PatternSystem:
    roots: tuple[TorusNode, ...]
    root_edges: tuple[Edge, ...]
    patterns: Mapping[str, Pattern] = field(hash=False)
    assignments: tuple[Assignment, ...]

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(self.roots))
        object.__setattr__(self, "root_edges", tuple(sorted(self.root_edges)))
        object.__setattr__(self, "patterns", dict(sorted(self.patterns.items())))
        object.__setattr__(self, "assignments", tuple(self.assignments))
        problem = self.problem()
        if problem is not None:
            raise SchemaError(*problem)

    def problem(self) -> tuple[str, str] | None:
        """First violated invariant as ``(path, message)``, or None."""
        if not self.roots:
            return "$.roots", "at least one root is required"
        if not self.assignments:
            return "$.assignment", "missing assignment"
        ids = [r.id for r in self.roots]
        for i, r in enumerate(self.roots):
            if not r.id or "." in r.id:
                return f"$.roots[{i}].id", "root ids must be nonempty and contain no '.'"
            if r.stage != 0 or r.parent is not None:
                return f"$.roots[{i}]", "roots must be stage-0 nodes without parent"
            if not 0 <= r.lane < len(self.assignments):
                return f"$.roots[{i}].lane", f"lane {r.lane} has no assignment"
        if len(set(ids)) != len(ids):
            return "$.roots", "duplicate root id"
        for i, e in enumerate(self.root_edges):
            if e.a not in ids or e.b not in ids:
                return f"$.root_edges[{i}]", f"unknown root in edge {e.a}-{e.b}"
        if len({(e.a, e.b) for e in self.root_edges}) != len(self.root_edges):
            return "$.root_edges", "duplicate edge"
        for lane in range(len(self.assignments)):
            spines = [r.id for r in self.roots if r.lane == lane and r.spine_flag]
            where = "$.roots" if len(self.assignments) == 1 else f"$.roots(lane {lane})"
            if len(spines) != 1:
                return where, f"exactly one spine root required, found {len(spines)}"
        for lane, asg in enumerate(self.assignments):
            base = "$.assignment" if len(self.assignments) == 1 else f"$.assignment[{lane}]"
            for part in ("preperiod", "period"):
                for j, rule in enumerate(getattr(asg, part)):
                    for role in ("spine", "other"):
                        name = getattr(rule, role)
                        path = f"{base}.{part}[{j}].{role}"
                        if name not in self.patterns:
                            return path, f"unknown pattern {name!r}"
                        if role == "spine" and self.patterns[name].spine_child is None:
                            return path, f"pattern {name!r} is used on the spine but has no spine_child"
        return None

    @property
    def lanes(self) -> int:
        return len(self.assignments)

    def pattern_for(self, parent: TorusNode, m: int) -> Pattern:
        """Pattern instantiated inside ``parent`` to produce stage ``m``."""
        rule = self.assignments[parent.lane].rule(m)
        return self.patterns[rule.spine if parent.spine_flag else rule.other]

    def lane_roots(self, lane: int) -> list[TorusNode]:
        return [r for r in self.roots if r.lane == lane]

    def rule_window(self) -> tuple[int, int]:
        """(longest preperiod, lcm of periods) over all lanes."""
        pre = max(len(a.preperiod) for a in self.assignments)
        per = lcm(*(len(a.period) for a in self.assignments))
        return pre, per


# ---------------------------------------------------------------------------
# JSON documents

_NAME = {"type": "string", "minLength": 1}
_EDGE = {
    "type": "array",
    "prefixItems": [{}, {}, {"type": "integer"}, {"type": "boolean"}],
    "minItems": 4,
    "maxItems": 4,
}
_RULE = {
    "type": "object",
    "properties": {"spine": _NAME, "other": _NAME},
    "required": ["spine", "other"],
    "additionalProperties": False,
}
_ASSIGNMENT = {
    "type": "object",
    "properties": {
        "preperiod": {"type": "array", "items": _RULE},
        "period": {"type": "array", "items": _RULE, "minItems": 1},
    },
    "required": ["preperiod", "period"],
    "additionalProperties": False,
}

SYSTEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "roots": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "id": _NAME,
                    "knot": _NAME,
                    "spine": {"type": "boolean"},
                    "lane": {"type": "integer", "minimum": 0},
                },
                "required": ["id", "knot", "spine"],
                "additionalProperties": False,
            },
        },
        "root_edges": {
            "type": "array",
            "items": {**_EDGE, "prefixItems": [_NAME, _NAME, *_EDGE["prefixItems"][2:]]},
        },
        "patterns": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "children": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "properties": {"winding": {"type": "integer"}, "knot": _NAME},
                            "required": ["winding", "knot"],
                            "additionalProperties": False,
                        },
                    },
                    "edges": {
                        "type": "array",
                        "items": {
                            **_EDGE,
                            "prefixItems": [
                                {"type": "integer", "minimum": 0},
                                {"type": "integer", "minimum": 0},
                                *_EDGE["prefixItems"][2:],
                            ],
                        },
                    },
                    "arrangement": {"enum": list(ARRANGEMENTS)},
                    "spine_child": {"type": ["integer", "null"], "minimum": 0},
                },
                "required": ["children", "edges", "arrangement", "spine_child"],
                "additionalProperties": False,
            },
        },
        "assignment": {
            "oneOf": [_ASSIGNMENT, {"type": "array", "items": _ASSIGNMENT, "minItems": 1}],
        },
    },
    "required": ["roots", "root_edges", "patterns", "assignment"],
    "additionalProperties": False,
}

_validator = jsonschema.Draft202012Validator(SYSTEM_SCHEMA)


def json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _schema_check(doc: Any) -> None:
    errors = sorted(_validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        # oneOf failures are unreadable; report the innermost cause instead
        while err.context:
            err = min(err.context, key=lambda e: len(e.absolute_path) * -1)
        raise SchemaError(json_path(err.absolute_path), err.message)


def system_from_json(doc: Any) -> PatternSystem:
    _schema_check(doc)
    roots = tuple(
        TorusNode(
            id=r["id"], parent=None, stage=0, winding=None, knot_label=r["knot"],
            spine_flag=r["spine"], lane=r.get("lane", 0),
        )
        for r in doc["roots"]
    )
    try:
        root_edges = tuple(Edge(a, b, lk, split) for a, b, lk, split in doc["root_edges"])
    except ValueError as exc:
        raise SchemaError("$.root_edges", str(exc)) from None
    patterns = {}
    for name, p in doc["patterns"].items():
        try:
            patterns[name] = Pattern(
                name=name,
                children=tuple(ChildSlot(c["winding"], c["knot"]) for c in p["children"]),
                edges=tuple(Edge(i, j, lk, split) for i, j, lk, split in p["edges"]),
                arrangement=p["arrangement"],
                spine_child=p["spine_child"],
            )
        except ValueError as exc:
            raise SchemaError(f"$.patterns.{name}", str(exc)) from None
    raw = doc["assignment"]
    raw_list = raw if isinstance(raw, list) else [raw]

    def rules(items):
        return tuple(Rule(x["spine"], x["other"]) for x in items)

    assignments = tuple(Assignment(rules(a["preperiod"]), rules(a["period"])) for a in raw_list)
    return PatternSystem(roots, root_edges, patterns, assignments)


def parse_system(text: str | bytes) -> PatternSystem:
    """Parse and validate a pattern-system document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    return system_from_json(doc)


def load_system(path: str | os.PathLike) -> PatternSystem:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())


def system_to_json(ps: PatternSystem) -> dict:
    multi = ps.lanes > 1
    roots = []
    for r in ps.roots:
        obj = {"id": r.id, "knot": r.knot_label, "spine": r.spine_flag}
        if multi:
            obj["lane"] = r.lane
        roots.append(obj)

    def asg(a: Assignment) -> dict:
        return {
            "preperiod": [{"spine": r.spine, "other": r.other} for r in a.preperiod],
            "period": [{"spine": r.spine, "other": r.other} for r in a.period],
        }

    return {
        "roots": roots,
        "root_edges": [[e.a, e.b, e.lk, e.split] for e in ps.root_edges],
        "patterns": {
            name: {
                "children": [{"winding": c.winding, "knot": c.knot} for c in p.children],
                "edges": [[e.a, e.b, e.lk, e.split] for e in p.edges],
                "arrangement": p.arrangement,
                "spine_child": p.spine_child,
            }
            for name, p in ps.patterns.items()
        },
        "assignment": [asg(a) for a in ps.assignments] if multi else asg(ps.assignments[0]),
    }


def dump_system(ps: PatternSystem) -> str:
    return json.dumps(system_to_json(ps), indent=2) + "\n"


def save_system(ps: PatternSystem, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_system(ps))


# ---------------------------------------------------------------------------
# Expansion


def iter_lane_sizes(ps: PatternSystem, lane: int) -> Iterator[int]:
    """Node counts of one lane at stages 0, 1, 2, ... (unbounded)."""
    total = len(ps.lane_roots(lane))
    m = 0
    while True:
        yield total
        m += 1
        rule = ps.assignments[lane].rule(m)
        spine_k = len(ps.patterns[rule.spine].children)
        other_k = len(ps.patterns[rule.other].children)
        total = spine_k + (total - 1) * other_k


def stage_sizes(ps: PatternSystem, depth: int) -> list[int]:
    sizes = [0] * (depth + 1)
    for lane in range(ps.lanes):
        it = iter_lane_sizes(ps, lane)
        for m in range(depth + 1):
            sizes[m] += next(it)
    return sizes


def _instantiate(ps: PatternSystem, parents: tuple[TorusNode, ...], m: int) -> StageGraph:
    nodes = []
    edges = []
    for parent in parents:
        pat = ps.pattern_for(parent, m)
        for i, slot in enumerate(pat.children):
            nodes.append(
                TorusNode(
                    id=f"{parent.id}.{i}", parent=parent.id, stage=m, winding=slot.winding,
                    knot_label=slot.knot, spine_flag=parent.spine_flag and i == pat.spine_child,
                    lane=parent.lane,
                )
            )
        for e in pat.edges:
            edges.append(Edge(f"{parent.id}.{e.a}", f"{parent.id}.{e.b}", e.lk, e.split))
    return StageGraph(m, tuple(nodes), tuple(edges))


def expand(ps: PatternSystem, depth: int, cap: int | None = None) -> list[StageGraph]:
    """Explicit stages ``0..depth``.

    Raises :class:`NodeCapExceeded` before building anything if the total
    node count over all stages would exceed ``cap``.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    cap = node_cap() if cap is None else cap
    needed = sum(stage_sizes(ps, depth))
    if needed > cap:
        raise NodeCapExceeded(needed, cap)
    stages = [StageGraph(0, ps.roots, ps.root_edges)]
    for m in range(1, depth + 1):
        stages.append(_instantiate(ps, stages[-1].nodes, m))
    return stages


def stage(ps: PatternSystem, m: int, cap: int | None = None) -> StageGraph:
    return expand(ps, m, cap)[-1]
