import pytest
from hypothesis import given
from hypothesis import strategies as st

from defseq.sequences import EPSeq, canonicalize, parse_spec

small = st.integers(0, 2)
words = st.lists(small, max_size=5)
periods = st.lists(small, min_size=1, max_size=5)


def test_canonical_form_examples():
    assert canonicalize([0, 1], [0, 1]) == ((), (0, 1))
    assert canonicalize([1, 0, 0], [0]) == ((1,), (0,))
    assert canonicalize([], [1, 0, 1, 0]) == ((), (1, 0))
    assert EPSeq((0, 1, 0), (1, 0)) == EPSeq((0,), (1, 0))
    with pytest.raises(ValueError):
        EPSeq((1,), ())


@given(words, periods, st.integers(1, 3), st.integers(0, 4))
def test_canonicalization_preserves_terms(pre, per, reps, unroll):
    # repeating the period and unrolling part of it into the preperiod
    # describes the same sequence
    longer = per * reps
    alt_pre = pre + (longer * 2)[:unroll]
    rot = unroll % len(longer)
    alt = EPSeq(alt_pre, longer[rot:] + longer[:rot])
    ref = EPSeq(pre, per)
    assert alt == ref
    assert alt.take(40) == (pre + per * 40)[:40]


@given(words, periods)
def test_canonical_form_is_minimal(pre, per):
    s = EPSeq(pre, per)
    p = s.period
    assert all(p != p[:d] * (len(p) // d) for d in range(1, len(p)) if len(p) % d == 0)
    if s.preperiod:
        assert s.preperiod[-1] != s.period[-1]


@given(words, periods, words, periods)
def test_window_equality_iff_equality(pa, qa, pb, qb):
    a, b = EPSeq(pa, qa), EPSeq(pb, qb)
    n = a.window(b)
    assert (a.take(n) == b.take(n)) == (a == b)
    # the window is sufficient: agreement on it implies agreement far out
    if a.take(n) == b.take(n):
        assert a.take(5 * n + 7) == b.take(5 * n + 7)


@given(words, periods, words, periods)
def test_pointwise_operations(pa, qa, pb, qb):
    a, b = EPSeq(pa, qa), EPSeq(pb, qb)
    n = 3 * a.window(b) + 5
    assert (a ^ b).take(n) == [(x + y) % 2 for x, y in zip(a.take(n), b.take(n))]
    assert (a + b).take(n) == [x + y for x, y in zip(a.take(n), b.take(n))]
    d = a.first_difference(b)
    if d is None:
        assert a == b
    else:
        assert a[d] != b[d] and a.take(d) == b.take(d)


@given(words, periods, st.integers(0, 8))
def test_shift_drops_terms(pre, per, k):
    s = EPSeq(pre, per)
    assert s.shift(k).take(20) == s.take(k + 20)[k:]


def test_spec_syntax():
    assert parse_spec("pre:0;per:1,0") == EPSeq((0,), (1, 0))
    assert parse_spec("per:1") == EPSeq((), (1,))
    assert parse_spec("pre:;per:0") == EPSeq.zero()
    assert str(EPSeq((0, 1), (1, 0))) == "pre:0,1;per:1,0"
    assert parse_spec(str(EPSeq((0, 1, 1), (0, 1)))) == EPSeq((0, 1, 1), (0, 1))
    for bad in ("pre:0", "per:", "pre:0;per:2", "0,1", "pre:a;per:1"):
        with pytest.raises(ValueError):
            parse_spec(bad)


def test_json_round_trip():
    s = EPSeq((0, 1, 1, 0), (1, 0))
    assert s.to_json() == {"preperiod": [0, 1], "period": [1, 0]}
    assert EPSeq.from_json(s.to_json()) == s
