import json
import random
import warnings

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from defseq.core import dump_system, expand, parse_system, stage_sizes
from defseq.generators import (
    WHITEHEAD_PROVENANCE,
    antoine_chain,
    antoine_from_target,
    bing_pattern,
    whitehead_pattern,
)
from defseq.invariants import (
    FormalClass,
    SliceCertificate,
    SliceCertificateWarning,
    component_counts,
    disjoint_union,
    distinguish,
    mod2_linking_sequence,
    nu,
    parse_class,
)
from defseq.sequences import EPSeq
from helpers import enumerated_counts, enumerated_linking, random_target, systems

ZERO = EPSeq.zero()
slow = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


# ---------------------------------------------------------------------------
# component counts


def test_chain4_counts():
    c = component_counts(antoine_chain(4))
    assert c.prefix(7) == [4**m for m in range(7)]
    assert c.prefix(7) == enumerated_counts(antoine_chain(4), 6)
    desc = c.to_json()
    assert desc["prefix"][:4] == [1, 4, 16, 64] and len(desc["prefix"]) >= 12
    assert desc["multipliers_per_period_stage"] == [4]
    assert desc["additive_terms"] == [0]


def test_union_counts():
    u = disjoint_union(antoine_chain(4), antoine_chain(4))
    assert component_counts(u).prefix(4) == [2, 8, 32, 128]


def test_whitehead_counts_are_constant():
    assert component_counts(whitehead_pattern()).prefix(12) == [1] * 12


def test_spine_counts_follow_the_target():
    ps = antoine_from_target(EPSeq((0, 1, 1, 0), (1, 0)))
    # count(m) = 4 count(m-1) + l_m
    assert component_counts(ps).prefix(6) == [1, 5, 21, 84, 337, 1348]


@slow
@given(systems(max_children=4))
def test_counts_match_enumeration(ps):
    depth = 6
    while sum(stage_sizes(ps, depth)) > 60_000:
        depth -= 1
    assert component_counts(ps).prefix(depth + 1) == enumerated_counts(ps, depth)


# ---------------------------------------------------------------------------
# mod-2 linking sequence


@pytest.mark.parametrize(
    "ps, expected",
    [
        (antoine_chain(4), ZERO),
        (antoine_chain(5), EPSeq((0,), (1,))),
        (antoine_chain(6), ZERO),
        (bing_pattern(), ZERO),
        (whitehead_pattern(), ZERO),
        (antoine_from_target(EPSeq((), (0, 1))), EPSeq((), (0, 1))),
    ],
)
def test_linking_sequence_examples(ps, expected):
    assert mod2_linking_sequence(ps) == expected


@slow
@given(systems(max_children=4))
def test_linking_sequence_matches_enumeration(ps):
    depth = 6
    while sum(stage_sizes(ps, depth)) > 60_000:
        depth -= 1
    assert mod2_linking_sequence(ps).take(depth + 1) == enumerated_linking(ps, depth)


def test_linking_sequence_is_canonical():
    seq = mod2_linking_sequence(antoine_from_target(EPSeq((0,), (1, 1, 1))))
    assert seq.preperiod == (0,) and seq.period == (1,)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_linking_equals_count_parity_for_chain_systems(seed):
    # every component of a chain system is linked, so L(m) = count(m) mod 2 for m >= 1
    ps = antoine_from_target(random_target(random.Random(seed)))
    counts = component_counts(ps).prefix(20)
    assert mod2_linking_sequence(ps).take(20)[1:] == [c % 2 for c in counts[1:]]


# ---------------------------------------------------------------------------
# classes and nu


def test_nu_examples():
    target = EPSeq((0,), (1,))
    assert nu(FormalClass.of(antoine_from_target(target))) == target
    slice_only = FormalClass((), (SliceCertificate(whitehead_pattern(), WHITEHEAD_PROVENANCE),))
    assert nu(slice_only) == ZERO
    a = antoine_chain(5)
    assert nu(FormalClass.of(a, a)) == ZERO
    assert nu(FormalClass()) == ZERO


def test_slice_certificate_requires_provenance():
    with pytest.raises(ValueError):
        SliceCertificate(whitehead_pattern(), "")


def test_refuted_slice_certificate_warns():
    c = FormalClass((), (SliceCertificate(antoine_chain(5), "claimed"),))
    with pytest.warns(SliceCertificateWarning):
        assert nu(c) == ZERO
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        nu(FormalClass((), (SliceCertificate(bing_pattern(), "Bing"),)))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2**32 - 1), min_size=1, max_size=5), st.randoms(use_true_random=False))
def test_nu_ignores_order(seeds, rnd):
    reps = [antoine_from_target(random_target(random.Random(s))) for s in seeds]
    shuffled = reps[:]
    rnd.shuffle(shuffled)
    assert nu(FormalClass.of(*reps)) == nu(FormalClass.of(*shuffled))


def test_class_documents():
    bare = parse_class(dump_system(antoine_chain(4)))
    assert len(bare.representatives) == 1
    c = FormalClass((antoine_chain(5),), (SliceCertificate(whitehead_pattern(), WHITEHEAD_PROVENANCE),))
    again = parse_class(json.dumps(c.to_json()))
    assert again.to_json() == c.to_json()


# ---------------------------------------------------------------------------
# disjoint union


def test_union_keeps_roots_and_renames_patterns():
    a, b = antoine_chain(4), antoine_from_target(EPSeq((0, 1), (0,)))
    u = disjoint_union(a, b)
    assert [r.id for r in u.roots] == ["r0", "r0_2"]
    assert u.root_edges == ()
    assert sum(r.spine_flag for r in u.roots) == u.lanes
    assert parse_system(dump_system(u)) is not None


@slow
@given(systems(max_children=3), systems(max_children=3))
def test_union_is_a_homomorphism_on_random_systems(a, b):
    u = disjoint_union(a, b)
    n = 12
    ca, cb, cu = (component_counts(x).prefix(n) for x in (a, b, u))
    assert cu == [x + y for x, y in zip(ca, cb)]
    assert mod2_linking_sequence(u) == mod2_linking_sequence(a) ^ mod2_linking_sequence(b)
    assert nu(FormalClass.of(u)) == nu(FormalClass.of(a, b))
    # the merged system expands to the union of the two expansions
    depth = 3
    eu = expand(u, depth)
    assert [len(s) for s in eu] == [len(x) + len(y) for x, y in zip(expand(a, depth), expand(b, depth))]


# ---------------------------------------------------------------------------
# distinguish


def target_class(pre, per):
    return FormalClass.of(antoine_from_target(EPSeq(pre, per)))


def test_distinguish_examples():
    v = distinguish(target_class((0, 1), (0,)), target_class((0, 0, 1), (0,)))
    assert (v.kind, v.witness) == ("DistinctByNu", 1)
    a = target_class((0,), (1, 0))
    assert distinguish(a, a).kind == "Unknown" and not distinguish(a, a).distinct
    four = antoine_chain(4)
    v = distinguish(FormalClass.of(four), FormalClass.of(disjoint_union(four, four)))
    assert (v.kind, v.witness) == ("DistinctByCounts", 0)
    assert v.to_json() == {"verdict": "DistinctByCounts", "witness": 0}


def test_distinguish_by_late_count_difference():
    # same nu (all zero) and same first count, different growth from stage 1
    v = distinguish(FormalClass.of(antoine_chain(4)), FormalClass.of(antoine_chain(6)))
    assert (v.kind, v.witness) == ("DistinctByCounts", 1)


def test_slice_certificates_do_not_change_the_verdict():
    a = FormalClass.of(antoine_chain(4))
    b = FormalClass((antoine_chain(4),), (SliceCertificate(whitehead_pattern(), WHITEHEAD_PROVENANCE),))
    assert distinguish(a, b).kind == "Unknown"


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_distinct_targets_are_distinguished_by_nu(s1, s2):
    t1, t2 = random_target(random.Random(s1)), random_target(random.Random(s2))
    v = distinguish(FormalClass.of(antoine_from_target(t1)), FormalClass.of(antoine_from_target(t2)))
    if t1 == t2:
        assert v.kind == "Unknown"
    else:
        assert v.kind == "DistinctByNu"
        assert t1[v.witness] != t2[v.witness] and t1.take(v.witness) == t2.take(v.witness)
