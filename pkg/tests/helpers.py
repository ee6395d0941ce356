"""Strategies and enumeration oracles shared by the test modules."""

from __future__ import annotations

import contextlib
import io
import itertools
import json
import random
from pathlib import Path

from hypothesis import strategies as st

from defseq.admissibility import C_IN_D, D_IN_C, NestingRelation
from defseq.cli import run
from defseq.core import Assignment, ChildSlot, Edge, Pattern, PatternSystem, Rule, TorusNode, expand, stage
from defseq.generators import chain_pattern
from defseq.sequences import EPSeq

FIXTURES = Path(__file__).parent / "fixtures"


# ---------------------------------------------------------------------------
# strategies

@st.composite
def custom_patterns(draw, name: str, max_children: int = 4) -> Pattern:
    k = draw(st.integers(1, max_children))
    children = tuple(ChildSlot(draw(st.sampled_from([0, 1, -1, 2])), "unknot") for _ in range(k))
    edges = []
    for a, b in itertools.combinations(range(k), 2):
        if draw(st.booleans()):
            lk = draw(st.sampled_from([-1, 0, 1, 2]))
            edges.append(Edge(a, b, lk, draw(st.booleans()) if lk == 0 else False))
    spine = draw(st.integers(0, k - 1))
    return Pattern(name, children, tuple(edges), "custom", spine)


@st.composite
def any_patterns(draw, name: str, max_children: int = 4) -> Pattern:
    if draw(st.booleans()):
        k = draw(st.integers(3, max(3, max_children)))
        return chain_pattern(k, name, spine_child=draw(st.integers(0, k - 1)))
    return draw(custom_patterns(name, max_children))


@st.composite
def systems(draw, max_children: int = 4, max_roots: int = 3) -> PatternSystem:
    npat = draw(st.integers(1, 3))
    patterns = {f"p{i}": draw(any_patterns(f"p{i}", max_children)) for i in range(npat)}
    names = sorted(patterns)
    nroots = draw(st.integers(1, max_roots))
    spine = draw(st.integers(0, nroots - 1))
    roots = tuple(TorusNode(f"r{i}", None, 0, None, "unknot", i == spine) for i in range(nroots))
    root_edges = []
    for a, b in itertools.combinations(range(nroots), 2):
        if draw(st.booleans()):
            lk = draw(st.sampled_from([-1, 0, 1]))
            root_edges.append(Edge(f"r{a}", f"r{b}", lk, lk == 0 and draw(st.booleans())))
    rule = st.builds(Rule, st.sampled_from(names), st.sampled_from(names))
    asg = Assignment(
        tuple(draw(st.lists(rule, max_size=2))), tuple(draw(st.lists(rule, min_size=1, max_size=3)))
    )
    return PatternSystem(roots, tuple(root_edges), patterns, (asg,))


def z2_targets(max_pre: int = 4, max_per: int = 6):
    """Eventually periodic 0/1 sequences starting with 0."""
    bits = st.integers(0, 1)

    @st.composite
    def build(draw):
        pre = draw(st.lists(bits, max_size=max_pre))
        per = draw(st.lists(bits, min_size=1, max_size=max_per))
        return EPSeq((0, *pre), per)

    return build()


def random_target(rng: random.Random, max_pre: int = 4, max_per: int = 6) -> EPSeq:
    pre = [rng.randint(0, 1) for _ in range(rng.randint(0, max_pre))]
    per = [rng.randint(0, 1) for _ in range(rng.randint(1, max_per))]
    return EPSeq((0, *pre), per)


# ---------------------------------------------------------------------------
# enumeration oracles

def enumerated_counts(ps: PatternSystem, depth: int) -> list[int]:
    return [len(st_) for st_ in expand(ps, depth)]


def enumerated_linking(ps: PatternSystem, depth: int) -> list[int]:
    out = []
    for st_ in expand(ps, depth):
        linked = set()
        for e in st_.edges:
            if e.lk != 0:
                linked.update((e.a, e.b))
        out.append(len(linked) % 2)
    return out


# ---------------------------------------------------------------------------
# nesting relations

def single(pattern: Pattern) -> PatternSystem:
    root = TorusNode("r0", None, 0, None, "unknot", True)
    return PatternSystem((root,), (), {pattern.name: pattern}, (Assignment((), (Rule(pattern.name, pattern.name),)),))


def chain4_with(edges=None, windings=(1, 1, 1, 1), arrangement=None) -> PatternSystem:
    base = chain_pattern(4)
    edges = base.edges if edges is None else edges
    arrangement = arrangement or ("chain" if edges == base.edges else "custom")
    kids = tuple(ChildSlot(w, "unknot") for w in windings)
    return single(Pattern("m", kids, edges, arrangement, 0))


def chain_stage(k: int):
    return stage(single(chain_pattern(k)), 1)


def rel(pairs, m=1):
    return NestingRelation(m, tuple(pairs))


def consistent_matchings(c_ids, d_ids, pairs):
    """All bijections C -> D whose pairs are exactly the related pairs."""
    related = {(c, d) for c, d, _ in pairs}
    if len(c_ids) != len(d_ids):
        return []
    out = []
    for perm in itertools.permutations(d_ids):
        m = set(zip(c_ids, perm))
        if m == related:
            out.append(tuple(sorted(m)))
    return out


def random_instance(rnd: random.Random):
    """A pair of chain stages (<= 6 nodes each) with a nesting relation that
    is a perfect matching, possibly perturbed."""
    kc, kd = rnd.randint(4, 6), rnd.randint(4, 6)
    if rnd.random() < 0.6:
        kd = kc
    c, d = chain_stage(kc), chain_stage(kd)
    cids, dids = c.ids(), d.ids()
    perm = dids[:]
    rnd.shuffle(perm)
    pairs = {(x, y): rnd.choice((C_IN_D, D_IN_C)) for x, y in zip(cids, perm)}
    for x in cids[len(perm):]:
        pairs[(x, rnd.choice(dids))] = rnd.choice((C_IN_D, D_IN_C))
    for y in perm[len(cids):]:
        pairs[(rnd.choice(cids), y)] = rnd.choice((C_IN_D, D_IN_C))
    kind = rnd.choice(["clean", "clean", "extra", "drop", "swap"])
    if kind == "extra":
        pairs.setdefault((rnd.choice(cids), rnd.choice(dids)), rnd.choice((C_IN_D, D_IN_C)))
    elif kind == "drop" and len(pairs) > 1:
        del pairs[rnd.choice(sorted(pairs))]
    elif kind == "swap":
        (x, y), tag = rnd.choice(sorted(pairs.items()))
        pairs[(x, y)] = C_IN_D if tag == D_IN_C else D_IN_C
    return c, d, rel((x, y, t) for (x, y), t in sorted(pairs.items()))


# ---------------------------------------------------------------------------
# command-line pipelines

PIPELINES = {
    "antoine-check": [
        ["generate", "antoine", "--k", "4", "-o", "a.json"],
        ["check", "a.json", "--depth", "4"],
    ],
    "target-invariants": [
        ["generate", "from-target", "--l", "pre:0;per:1,0", "-o", "t.json"],
        ["invariants", "t.json", "--terms", "12"],
    ],
    "compare": [
        ["generate", "antoine", "--k", "4", "-o", "a.json"],
        ["generate", "from-target", "--l", "pre:0;per:1,0", "-o", "t.json"],
        ["compare", "a.json", "a.json"],
        ["compare", "a.json", "t.json"],
    ],
    "slice-fixtures": [
        ["generate", "bing", "-o", "b.json"],
        ["generate", "whitehead", "-o", "w.json"],
        ["invariants", "b.json"],
        ["check", "w.json"],
    ],
    "geometry": [
        ["generate", "antoine", "--k", "4", "-o", "a.json"],
        ["geom", "a.json", "--depth", "2", "--certify", "--obj", "a.obj", "--placements", "p.json"],
    ],
    "bijection": [
        ["generate", "antoine", "--k", "4", "-o", "a.json"],
        ["bijection", "a.json", "a.json", "same.json"],
        ["bijection", "a.json", "a.json", "double.json"],
    ],
}

# input documents that pipelines expect in the working directory
PIPELINE_INPUTS = {
    "bijection": {
        "same.json": {"stage": 1, "pairs": [[f"r0.{i}", f"r0.{i}", "c_in_d"] for i in range(4)]},
        "double.json": {
            "stage": 1,
            "pairs": [["r0.0", "r0.0", "c_in_d"], ["r0.1", "r0.0", "c_in_d"], ["r0.2", "r0.1", "d_in_c"],
                      ["r0.3", "r0.2", "c_in_d"], ["r0.2", "r0.3", "d_in_c"]],
        },
    },
}


def call(argv: list[str]) -> tuple[int, str, str]:
    """Run the command line in-process; return (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = run(argv)
    return code, out.getvalue(), err.getvalue()


def run_pipeline(name: str) -> list[tuple[int, str]]:
    """Run a named pipeline in the current directory."""
    for fname, doc in PIPELINE_INPUTS.get(name, {}).items():
        with open(fname, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
    results = []
    for argv in PIPELINES[name]:
        code, out, _ = call(argv)
        json.loads(out)  # stdout is always one JSON document
        results.append((code, out))
    return results
