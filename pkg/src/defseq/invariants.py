"""Concordance invariants of pattern systems and formal classes.

* component counts ``n_m`` (number of components of stage ``m``),
* the mod-2 linking sequence ``L``: parity of the number of stage-``m``
  components having nonzero algebraic linking with another component,
* ``nu``: the componentwise XOR of ``L`` over the members of a class.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from math import lcm
from typing import Iterable

from .core import Assignment, Edge, PatternSystem, SchemaError, TorusNode, system_from_json, system_to_json
from .sequences import EPSeq

PREFIX_LENGTH = 12


@dataclass(frozen=True)
class CountSequence:
    """Component counts as a per-lane affine recurrence.

    For each lane, ``count(m+1) = multipliers[lane][pos] * count(m) +
    additive[lane][pos]`` where ``pos`` indexes the combined rule list
    (``preperiod_length`` preperiod positions followed by one period).
    The total count is the sum over lanes.
    """

    initial: tuple[int, ...]
    preperiod_length: int
    multipliers: tuple[tuple[int, ...], ...]
    additive: tuple[tuple[int, ...], ...]

    @property
    def period_length(self) -> int:
        return len(self.multipliers[0]) - self.preperiod_length

    def position(self, m: int) -> int:
        """Rule position producing stage ``m`` (m >= 1)."""
        i = m - 1
        p = self.preperiod_length
        return i if i < p else p + (i - p) % self.period_length

    def lane_prefix(self, n: int) -> list[list[int]]:
        out = []
        for lane, start in enumerate(self.initial):
            vals = [start]
            for m in range(1, n):
                pos = self.position(m)
                vals.append(self.multipliers[lane][pos] * vals[-1] + self.additive[lane][pos])
            out.append(vals[:n])
        return out

    def prefix(self, n: int) -> list[int]:
        lanes = self.lane_prefix(n)
        return [sum(col) for col in zip(*lanes)]

    def __getitem__(self, m: int) -> int:
        return self.prefix(m + 1)[m]

    def to_json(self, prefix_length: int = PREFIX_LENGTH) -> dict:
        prefix = self.prefix(max(prefix_length, PREFIX_LENGTH))
        if len(set(self.multipliers)) == 1:
            mult: list = list(self.multipliers[0])
            add: list = [sum(col) for col in zip(*self.additive)]
        else:
            mult = [list(x) for x in self.multipliers]
            add = [list(x) for x in self.additive]
        return {
            "prefix": prefix,
            "preperiod_length": self.preperiod_length,
            "multipliers_per_period_stage": mult,
            "additive_terms": add,
        }


def _combined_positions(assignments: tuple[Assignment, ...]) -> tuple[int, int]:
    pre = max(len(a.preperiod) for a in assignments)
    per = lcm(*(len(a.period) for a in assignments))
    return pre, per


def component_counts(ps: PatternSystem) -> CountSequence:
    pre, per = _combined_positions(ps.assignments)
    mults, adds, initial = [], [], []
    for lane, asg in enumerate(ps.assignments):
        initial.append(len(ps.lane_roots(lane)))
        lm, la = [], []
        for pos in range(pre + per):
            rule = asg.rule(pos + 1)
            k_spine = len(ps.patterns[rule.spine].children)
            k_other = len(ps.patterns[rule.other].children)
            # count' = k_spine + (count - 1) * k_other
            lm.append(k_other)
            la.append(k_spine - k_other)
        mults.append(tuple(lm))
        adds.append(tuple(la))
    return CountSequence(tuple(initial), pre, tuple(mults), tuple(adds))


def mod2_linking_sequence(ps: PatternSystem) -> EPSeq:
    """Exact ``L`` as a canonical EPSeq.

    Linking is intra-parent below stage 0, so the parity at stage m+1 only
    depends on the rule position and on the parity of the number of
    off-spine components of each lane at stage m.  That state space is
    finite; the sequence is read off from the first repeated state.
    """
    linked_roots = set()
    for e in ps.root_edges:
        if e.linked:
            linked_roots.update((e.a, e.b))
    l0 = len(linked_roots) % 2

    pre, per = _combined_positions(ps.assignments)
    parities = tuple((len(ps.lane_roots(lane)) - 1) % 2 for lane in range(ps.lanes))
    seen: dict[tuple, int] = {}
    values: list[int] = []
    m = 0
    while True:
        pos = m if m < pre else pre + (m - pre) % per
        state = (pos, parities)
        if state in seen:
            start = seen[state]
            return EPSeq([l0] + values[:start], values[start:])
        seen[state] = m
        bit = 0
        nxt = []
        for lane, asg in enumerate(ps.assignments):
            rule = asg.rule(pos + 1)
            sp, ot = ps.patterns[rule.spine], ps.patterns[rule.other]
            bit += len(sp.linked_children) + parities[lane] * len(ot.linked_children)
            nxt.append((parities[lane] * len(ot.children) + len(sp.children) - 1) % 2)
        values.append(bit % 2)
        parities = tuple(nxt)
        m += 1


# ---------------------------------------------------------------------------
# Formal classes


class SliceCertificateWarning(UserWarning):
    """A declared slice system has nonzero L, which refutes the declaration."""


@dataclass(frozen=True)
class SliceCertificate:
    system: PatternSystem
    provenance: str

    def __post_init__(self):
        if not isinstance(self.provenance, str) or not self.provenance.strip():
            raise ValueError("slice certificates need a provenance string")


@dataclass(frozen=True)
class FormalClass:
    """Unoriented bookkeeping for a sum of decompositions.

    The class stands for the disjoint union of its representatives plus the
    declared slice systems, which are zero in the concordance group.
    """

    representatives: tuple[PatternSystem, ...] = ()
    slice_certificates: tuple[SliceCertificate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "representatives", tuple(self.representatives))
        object.__setattr__(self, "slice_certificates", tuple(self.slice_certificates))

    @classmethod
    def of(cls, *systems: PatternSystem) -> "FormalClass":
        return cls(tuple(systems))

    def to_json(self) -> dict:
        return {
            "representatives": [system_to_json(p) for p in self.representatives],
            "slice_certificates": [
                {"system": system_to_json(c.system), "provenance": c.provenance}
                for c in self.slice_certificates
            ],
        }


def class_from_json(doc) -> FormalClass:
    """Read a class document, or a bare system document as a one-member class."""
    if not isinstance(doc, dict) or "representatives" not in doc:
        return FormalClass.of(system_from_json(doc))
    extra = set(doc) - {"representatives", "slice_certificates"}
    if extra:
        raise SchemaError("$", f"unknown fields {sorted(extra)}")
    reps = []
    for i, r in enumerate(doc["representatives"]):
        try:
            reps.append(system_from_json(r))
        except SchemaError as exc:
            raise SchemaError(f"$.representatives[{i}]" + exc.path[1:], exc.message) from None
    certs = []
    for i, c in enumerate(doc.get("slice_certificates", [])):
        if not isinstance(c, dict) or set(c) != {"system", "provenance"}:
            raise SchemaError(f"$.slice_certificates[{i}]", "expected {'system', 'provenance'}")
        try:
            certs.append(SliceCertificate(system_from_json(c["system"]), c["provenance"]))
        except SchemaError as exc:
            raise SchemaError(f"$.slice_certificates[{i}].system" + exc.path[1:], exc.message) from None
        except ValueError as exc:
            raise SchemaError(f"$.slice_certificates[{i}].provenance", str(exc)) from None
    return FormalClass(tuple(reps), tuple(certs))


def parse_class(text: str) -> FormalClass:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    return class_from_json(doc)


def nu(c: FormalClass) -> EPSeq:
    """XOR of ``L`` over the representatives.

    Slice certificates contribute zero; their ``L`` is still computed and a
    :class:`SliceCertificateWarning` is issued when it is nonzero.
    """
    total = EPSeq.zero()
    for ps in c.representatives:
        total = total ^ mod2_linking_sequence(ps)
    for cert in c.slice_certificates:
        if mod2_linking_sequence(cert.system) != EPSeq.zero():
            warnings.warn(
                f"slice certificate {cert.provenance!r} has nonzero L; the declaration is refuted",
                SliceCertificateWarning,
                stacklevel=2,
            )
    return total


def summed_counts(systems: Iterable[PatternSystem], n: int) -> list[int]:
    out = [0] * n
    for ps in systems:
        for i, v in enumerate(component_counts(ps).prefix(n)):
            out[i] += v
    return out


# ---------------------------------------------------------------------------
# Disjoint union


def _fresh(name: str, taken: set[str]) -> str:
    j = 2
    while f"{name}_{j}" in taken:
        j += 1
    return f"{name}_{j}"


def disjoint_union(a: PatternSystem, b: PatternSystem) -> PatternSystem:
    """Disjoint union (connected sum at infinity) of two systems.

    Roots are concatenated without new root edges and pattern names are
    renamed on collision.  ``a`` keeps its spine.  A lane of ``b`` whose
    spine and off-spine rules coincide is folded into a lane of the result
    with the same rules, its spine flag cleared; any other lane of ``b`` is
    kept as a separate lane so that counts add and ``L`` XORs exactly.
    """
    patterns = dict(a.patterns)
    rename: dict[str, str] = {}
    taken = set(patterns) | set(b.patterns)
    for name, pat in b.patterns.items():
        if name in patterns:
            if patterns[name].same_shape(pat):
                continue
            new = _fresh(name, taken)
            taken.add(new)
            rename[name] = new
            patterns[new] = pat.renamed(new)
        else:
            patterns[name] = pat

    root_ids = {r.id for r in a.roots}
    root_rename: dict[str, str] = {}
    all_ids = root_ids | {r.id for r in b.roots}
    for r in b.roots:
        if r.id in root_ids:
            new = _fresh(r.id, all_ids)
            all_ids.add(new)
            root_rename[r.id] = new
        root_ids.add(root_rename.get(r.id, r.id))

    assignments = list(a.assignments)
    lane_map: dict[int, int] = {}
    fold: set[int] = set()
    for lane, asg in enumerate(b.assignments):
        asg = asg.renamed(rename)
        if all(r.spine == r.other for r in asg.rules()):
            others = asg.sequence().map(lambda r: r.other)
            target = next(
                (i for i, x in enumerate(assignments) if x.sequence().map(lambda r: r.other) == others),
                None,
            )
            if target is not None:
                lane_map[lane] = target
                fold.add(lane)
                continue
        lane_map[lane] = len(assignments)
        assignments.append(asg)

    roots = list(a.roots)
    for r in b.roots:
        roots.append(
            TorusNode(
                id=root_rename.get(r.id, r.id), parent=None, stage=0, winding=r.winding,
                knot_label=r.knot_label, spine_flag=r.spine_flag and r.lane not in fold,
                lane=lane_map[r.lane],
            )
        )
    edges = list(a.root_edges)
    for e in b.root_edges:
        edges.append(Edge(root_rename.get(e.a, e.a), root_rename.get(e.b, e.b), e.lk, e.split))
    return PatternSystem(tuple(roots), tuple(edges), patterns, tuple(assignments))


# ---------------------------------------------------------------------------
# Comparison


@dataclass(frozen=True)
class Verdict:
    """``DistinctByNu`` / ``DistinctByCounts`` with the first differing
    index, or ``Unknown`` when every implemented invariant agrees."""

    kind: str
    witness: int | None = None

    @property
    def distinct(self) -> bool:
        return self.kind != "Unknown"

    def to_json(self) -> dict:
        return {"verdict": self.kind, "witness": self.witness}


UNKNOWN = Verdict("Unknown")


def distinguish(a: FormalClass, b: FormalClass) -> Verdict:
    """Compare two classes by ``nu``, then by summed component counts.

    ``Unknown`` never asserts that the classes are equal.  Counts are summed
    over representatives only (slice certificates are neutral).
    """
    na, nb = nu(a), nu(b)
    i = na.first_difference(nb)
    if i is not None:
        return Verdict("DistinctByNu", i)
    window = na.window(nb)
    for ps in a.representatives + b.representatives:
        pre, per = ps.rule_window()
        window = max(window, pre + per + 1)
    ca = summed_counts(a.representatives, window)
    cb = summed_counts(b.representatives, window)
    for j, (x, y) in enumerate(zip(ca, cb)):
        if x != y:
            return Verdict("DistinctByCounts", j)
    return UNKNOWN
