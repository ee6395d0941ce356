"""Admissibility checking and the component-bijection verifier.

Conditions of admissibility, numbered as usual:

1. below stage 0 every parent holds at least four components, each linked
   (lk != 0) with exactly two others and split from all the rest;
2. no component is null-homotopic in its parent (checked through the chain
   arrangement and nonzero windings);
3. and 4. are properties of the limit set; they are recorded as assumed for
   chains of unknots and are otherwise not checkable here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from .core import PatternSystem, StageGraph, _instantiate

SATISFIED = "Satisfied"
VIOLATED = "Violated"
ASSUMED = "Assumed"
NOT_CHECKABLE = "NotCheckable"

SIMPLE_CHAIN_DECLARATION = (
    "every pattern is a cyclic chain of unknots with Hopf-linked neighbours; "
    "limit-set conditions (3) and (4) are taken as given for such Antoine systems"
)


@dataclass(frozen=True)
class ConditionStatus:
    status: str
    trace: tuple[str, ...] = ()
    declaration: str | None = None

    def to_json(self) -> dict:
        out: dict = {"status": self.status}
        if self.trace:
            out["trace"] = list(self.trace)
        if self.declaration:
            out["declaration"] = self.declaration
        return out


@dataclass(frozen=True)
class AdmissibilityReport:
    conditions: dict[int, ConditionStatus] = field(hash=False)
    depth: int = 0

    @property
    def overall(self) -> bool:
        """Admissible modulo the declared assumptions."""
        if any(c.status == VIOLATED for c in self.conditions.values()):
            return False
        return self.conditions[1].status == SATISFIED and self.conditions[2].status == SATISFIED

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "conditions": {f"adm({k})": v.to_json() for k, v in sorted(self.conditions.items())},
            "admissible_modulo_assumptions": self.overall,
        }


def condition1_violations(stage: StageGraph) -> list[str]:
    """Condition (1) on one explicit stage (stage >= 1)."""
    out = []
    nbrs = stage.linked_neighbors()
    for parent, kids in sorted(stage.by_parent().items(), key=lambda kv: str(kv[0])):
        if len(kids) < 4:
            out.append(
                f"adm(1): component {parent} contains {len(kids)} components of stage "
                f"{stage.stage}, fewer than four components"
            )
    for node in stage.nodes:
        d = nbrs[node.id]
        if len(d) != 2:
            out.append(
                f"adm(1): node {node.id} has {len(d)} linked neighbours ({', '.join(d) or 'none'}), "
                "expected exactly two"
            )
    for e in stage.edges:
        if not e.linked and not e.split:
            out.append(f"adm(1): nodes {e.a} and {e.b} have lk 0 but are not split")
    return out


def condition2_status(stage: StageGraph, arrangements: dict[str | None, str]) -> tuple[list[str], bool]:
    """Violations of the condition-(2) proxy and whether every block is a chain."""
    out = []
    for node in stage.nodes:
        if node.winding == 0:
            out.append(f"adm(2): node {node.id} has winding 0 in {node.parent} (null-homotopic in its parent)")
    all_chain = all(arrangements.get(n.parent) == "chain" for n in stage.nodes)
    return out, all_chain


def check_stages(stages: Iterable[StageGraph], arrangements: dict[str | None, str],
                 unknot_chains: bool) -> AdmissibilityReport:
    """Build a report from explicit stages (index >= 1).

    ``arrangements`` maps each parent id to the arrangement of the pattern
    instantiated in it.
    """
    v1, v2 = [], []
    all_chain = True
    depth = 0
    for st in stages:
        depth = max(depth, st.stage)
        v1 += condition1_violations(st)
        bad, chain = condition2_status(st, arrangements)
        v2 += bad
        all_chain = all_chain and chain
    c1 = ConditionStatus(VIOLATED, tuple(v1)) if v1 else ConditionStatus(SATISFIED)
    if v2:
        c2 = ConditionStatus(VIOLATED, tuple(v2))
    elif all_chain:
        c2 = ConditionStatus(SATISFIED)
    else:
        c2 = ConditionStatus(NOT_CHECKABLE, ("adm(2): a pattern is not a chain; the proxy does not apply",))
    if unknot_chains:
        c34 = ConditionStatus(ASSUMED, declaration=SIMPLE_CHAIN_DECLARATION)
    else:
        c34 = ConditionStatus(NOT_CHECKABLE, ("only chains of unknots carry the simple-chain assumption",))
    return AdmissibilityReport({1: c1, 2: c2, 3: c34, 4: c34}, depth)


def _representative_blocks(ps: PatternSystem, depth: int):
    """Yield ``(parent, m)`` for one parent of every kind at each stage.

    Stages below 0 are disjoint unions of pattern instances, one per parent,
    and parents of the same lane and spine status receive the same pattern;
    checking one instance per kind is equivalent to checking the whole stage.
    """
    for lane in range(ps.lanes):
        roots = ps.lane_roots(lane)
        spine = next(r for r in roots if r.spine_flag)
        other = next((r for r in roots if not r.spine_flag), None)
        for m in range(1, depth + 1):
            yield spine, m
            if other is not None:
                yield other, m
            sp_pat = ps.pattern_for(spine, m)
            kids = _instantiate(ps, (spine,), m).nodes
            new_spine = kids[sp_pat.spine_child]
            if other is not None:
                new_other = _instantiate(ps, (other,), m).nodes[0]
            else:
                new_other = next((k for k in kids if not k.spine_flag), None)
            spine, other = new_spine, new_other


def check_admissible(ps: PatternSystem, depth: int) -> AdmissibilityReport:
    """Check conditions (1) and (2) on stages ``1..depth``."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    blocks = []
    arrangements: dict[str | None, str] = {}
    unknots = all(r.knot_label == "unknot" for r in ps.roots)
    for parent, m in _representative_blocks(ps, depth):
        pat = ps.pattern_for(parent, m)
        arrangements[parent.id] = pat.arrangement
        unknots = unknots and pat.is_unknot_chain()
        blocks.append(_instantiate(ps, (parent,), m))
    blocks.sort(key=lambda st: (st.stage, st.nodes[0].parent))
    report = check_stages(blocks, arrangements, unknots)
    return AdmissibilityReport(report.conditions, depth)


def check_expanded(ps: PatternSystem, stages: list[StageGraph]) -> AdmissibilityReport:
    """Same as :func:`check_admissible`, on fully expanded stages."""
    arrangements = {}
    unknots = all(r.knot_label == "unknot" for r in ps.roots)
    for prev, st in zip(stages, stages[1:]):
        for parent in prev.nodes:
            pat = ps.pattern_for(parent, st.stage)
            arrangements[parent.id] = pat.arrangement
            unknots = unknots and pat.is_unknot_chain()
    return check_stages(stages[1:], arrangements, unknots)


# ---------------------------------------------------------------------------
# Component bijection

C_IN_D = "c_in_d"
D_IN_C = "d_in_c"


class MalformedRelation(ValueError):
    pass


@dataclass(frozen=True)
class NestingRelation:
    """Nesting between the components of two stages after normalisation:
    ``(c, d, "c_in_d")`` or ``(c, d, "d_in_c")``."""

    stage: int
    pairs: tuple[tuple[str, str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        seen = {}
        for c, d, tag in self.pairs:
            if tag not in (C_IN_D, D_IN_C):
                raise MalformedRelation(f"pair ({c}, {d}): tag must be {C_IN_D!r} or {D_IN_C!r}")
            if (c, d) in seen and seen[(c, d)] != tag:
                raise MalformedRelation(f"pair ({c}, {d}) has both tags")
            seen[(c, d)] = tag

    @classmethod
    def from_json(cls, doc) -> "NestingRelation":
        if not isinstance(doc, dict) or set(doc) != {"stage", "pairs"}:
            raise MalformedRelation('expected {"stage": m, "pairs": [[c, d, tag], ...]}')
        if not isinstance(doc["stage"], int) or doc["stage"] < 0:
            raise MalformedRelation("stage must be a nonnegative integer")
        pairs = []
        for i, p in enumerate(doc["pairs"]):
            if not (isinstance(p, list) and len(p) == 3 and all(isinstance(x, str) for x in p)):
                raise MalformedRelation(f"pairs[{i}] must be [cId, dId, tag]")
            pairs.append(tuple(p))
        return cls(doc["stage"], tuple(pairs))

    def to_json(self) -> dict:
        return {"stage": self.stage, "pairs": [list(p) for p in self.pairs]}


def parse_relation(text: str) -> NestingRelation:
    try:
        return NestingRelation.from_json(json.loads(text))
    except json.JSONDecodeError as exc:
        raise MalformedRelation(f"invalid JSON: {exc}") from None


@dataclass(frozen=True)
class BijectionCertificate:
    matching: tuple[tuple[str, str], ...]
    log: tuple[str, ...]

    def to_json(self) -> dict:
        return {"certificate": {"matching": [list(p) for p in self.matching], "log": list(self.log)}}


@dataclass(frozen=True)
class Violation:
    rule: str
    clause: str
    trace: tuple[str, ...]

    def to_json(self) -> dict:
        return {"violation": {"rule": self.rule, "clause": self.clause, "trace": list(self.trace)}}


class _Families:
    """Both stages with their nesting, addressed symmetrically."""

    def __init__(self, c_stage: StageGraph, d_stage: StageGraph, rel: NestingRelation):
        self.stage = {"C": c_stage, "D": d_stage}
        self.nbrs = {"C": c_stage.linked_neighbors(), "D": d_stage.linked_neighbors()}
        self.nodes = {"C": {n.id: n for n in c_stage.nodes}, "D": {n.id: n for n in d_stage.nodes}}
        # partners[F][x] -> {y: "inside" | "contains"} from x's point of view
        self.partners: dict[str, dict[str, dict[str, str]]] = {
            "C": {x: {} for x in self.nodes["C"]},
            "D": {x: {} for x in self.nodes["D"]},
        }
        for c, d, tag in rel.pairs:
            if c not in self.nodes["C"]:
                raise MalformedRelation(f"unknown C node {c!r}")
            if d not in self.nodes["D"]:
                raise MalformedRelation(f"unknown D node {d!r}")
            self.partners["C"][c][d] = "inside" if tag == C_IN_D else "contains"
            self.partners["D"][d][c] = "contains" if tag == C_IN_D else "inside"

    @staticmethod
    def other(fam: str) -> str:
        return "D" if fam == "C" else "C"

    def name(self, fam: str, x: str) -> str:
        return f"{fam}:{x}"


def _chain_walk(f: _Families, fam: str, t: str, t1: str, t2: str) -> Violation:
    """Follow the linking chain from a component ``t`` of family ``fam``
    that contains two components ``t1``, ``t2`` of the other family until a
    component with three linked neighbours appears."""
    g = f.other(fam)
    n = f.name
    log = [f"{n(fam, t)} contains {n(g, t1)} and {n(g, t2)}"]

    def fail(msg: str, clause: str = "adm(1)") -> Violation:
        log.append(msg)
        return Violation("c", clause, tuple(log))

    t_nbrs = f.nbrs[fam][t]
    if not t_nbrs:
        return fail(f"{n(fam, t)} has no linked neighbour: the {fam} stage violates adm(1)")
    tp = t_nbrs[0]
    log.append(f"{n(fam, tp)} is linked with {n(fam, t)} (lk != 0)")
    rel3 = sorted(f.partners[fam][tp].items())
    if not rel3:
        return fail(f"{n(fam, tp)} meets no component of {g}", "nesting")
    t3, how3 = rel3[0]
    if t3 in (t1, t2):
        return fail(f"{n(g, t3)} lies in {n(fam, t)} and cannot also meet {n(fam, tp)}", "nesting")
    if how3 == "contains":
        log.append(
            f"{n(g, t3)} lies in {n(fam, tp)}, so {n(g, t1)} and {n(g, t2)} (inside {n(fam, t)}) "
            f"link {n(g, t3)} with lk != 0"
        )
    else:
        log.append(
            f"{n(fam, tp)} lies in {n(g, t3)} and {n(fam, t)} does not, so {n(fam, t)} links "
            f"{n(g, t3)}; hence {n(g, t1)} and {n(g, t2)} link {n(g, t3)} with lk != 0"
        )
    tpp_choices = [x for x in f.nbrs[fam][tp] if x != t]
    if not tpp_choices:
        return fail(f"{n(fam, tp)} has fewer than two linked neighbours: the {fam} stage violates adm(1)")
    tpp = tpp_choices[0]
    log.append(f"{n(fam, tpp)} is the other component linked with {n(fam, tp)}")
    if how3 == "inside" and f.partners[fam][tpp].get(t3) == "inside":
        return fail(
            f"{n(fam, tp)} and {n(fam, tpp)} would both lie in {n(g, t3)} and both link {n(fam, t)} "
            "and each other, contradicting adm(1)"
        )
    rel4 = sorted(f.partners[fam][tpp].items())
    if not rel4:
        return fail(f"{n(fam, tpp)} meets no component of {g}", "nesting")
    t4, how4 = rel4[0]
    if t4 in (t1, t2, t3):
        return fail(f"{n(g, t4)} cannot meet {n(fam, tpp)} as well", "nesting")
    if how3 == "contains" and how4 == "contains":
        why = f"{n(g, t3)} lies in {n(fam, tp)} and {n(g, t4)} lies in {n(fam, tpp)}"
    elif how3 == "contains":
        why = f"{n(fam, tpp)} lies in {n(g, t4)}, which cannot contain {n(fam, t)} or {n(fam, tp)}"
    elif how4 == "contains":
        why = f"{n(fam, tp)} lies in {n(g, t3)} but {n(fam, tpp)} does not, and {n(g, t4)} lies in {n(fam, tpp)}"
    else:
        why = f"{n(fam, tpp)} lies in {n(g, t4)}, which is disjoint from the other tori"
    log.append(f"{why}; so {n(g, t3)} links {n(g, t4)}")
    return fail(
        f"{n(g, t3)} links {n(g, t1)}, {n(g, t2)} and {n(g, t4)}: three linked neighbours, "
        "contradicting adm(1)"
    )


def verify_component_bijection(c_stage: StageGraph, d_stage: StageGraph,
                               rel: NestingRelation) -> BijectionCertificate | Violation:
    """Certify that nesting matches the components of two stages one-to-one.

    Rules, applied in order:

    (a) every component must meet some component of the other family;
    (b) an inner component must have nonzero winding in its container;
    (c) a component containing two of the other family is refuted by walking
        the linking chain to a component with three linked neighbours;
    (d) otherwise each component has exactly one partner: emit the matching.

    Raises :class:`MalformedRelation` for dangling references.
    """
    f = _Families(c_stage, d_stage, rel)
    log = [f"stage {rel.stage}: |C| = {len(c_stage)}, |D| = {len(d_stage)}, {len(rel.pairs)} nesting pairs"]

    for fam in ("C", "D"):
        for x in sorted(f.partners[fam]):
            if not f.partners[fam][x]:
                log.append(f"rule (a): {f.name(fam, x)} is disjoint from every component of {f.other(fam)}")
                return Violation("a", "nesting", tuple(log))
    log.append("rule (a): every component meets the other family")

    for fam in ("C", "D"):
        for x in sorted(f.partners[fam]):
            for y, how in sorted(f.partners[fam][x].items()):
                if how == "inside" and f.nodes[fam][x].winding == 0:
                    log.append(
                        f"rule (b): {f.name(fam, x)} lies in {f.name(f.other(fam), y)} with winding 0 "
                        "(null-homotopic), contradicting adm(2)"
                    )
                    return Violation("b", "adm(2)", tuple(log))
    log.append("rule (b): every inner component has nonzero winding")

    for fam in ("D", "C"):
        for x in sorted(f.partners[fam]):
            inner = sorted(y for y, how in f.partners[fam][x].items() if how == "contains")
            if len(inner) >= 2:
                walk = _chain_walk(f, fam, x, inner[0], inner[1])
                trace = tuple(log) + tuple(f"rule (c): {s}" for s in walk.trace)
                return Violation("c", walk.clause, trace)
    log.append("rule (c): no component contains two components of the other family")

    for fam in ("C", "D"):
        for x in sorted(f.partners[fam]):
            if len(f.partners[fam][x]) != 1:
                others = ", ".join(f.name(f.other(fam), y) for y in sorted(f.partners[fam][x]))
                log.append(f"{f.name(fam, x)} meets {others}, which cannot all be nested with it")
                return Violation("d", "nesting", tuple(log))
    matching = tuple(sorted((c, next(iter(ds))) for c, ds in f.partners["C"].items()))
    log.append(f"rule (d): each component has exactly one partner; matched {len(matching)} pairs")
    return BijectionCertificate(matching, tuple(log))

