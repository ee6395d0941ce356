"""Eventually periodic sequences in canonical form."""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import lcm
from typing import Any, Callable, Hashable, Iterable


def _primitive_root(word: tuple) -> tuple:
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and word[:d] * (n // d) == word:
            return word[:d]
    return word


def canonicalize(preperiod: Iterable, period: Iterable) -> tuple[tuple, tuple]:
    """Return ``(preperiod, period)`` with a primitive period and the
    shortest possible preperiod describing the same infinite sequence."""
    pre = tuple(preperiod)
    per = tuple(period)
    if not per:
        raise ValueError("period must be nonempty")
    per = _primitive_root(per)
    while pre and pre[-1] == per[-1]:
        pre = pre[:-1]
        per = per[-1:] + per[:-1]
    return pre, per


@dataclass(frozen=True)
class EPSeq:
    """An infinite sequence ``preperiod + period + period + ...``.

    Instances are always stored canonically, so ``==`` is equality of the
    infinite sequences.
    """

    preperiod: tuple
    period: tuple

    def __post_init__(self):
        pre, per = canonicalize(self.preperiod, self.period)
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    @classmethod
    def constant(cls, value: Hashable) -> "EPSeq":
        return cls((), (value,))

    @classmethod
    def zero(cls) -> "EPSeq":
        return cls((), (0,))

    def __getitem__(self, i: int) -> Any:
        if i < 0:
            raise IndexError("EPSeq indices are nonnegative")
        p = len(self.preperiod)
        if i < p:
            return self.preperiod[i]
        return self.period[(i - p) % len(self.period)]

    def take(self, n: int) -> list:
        return [self[i] for i in range(n)]

    def window(self, other: "EPSeq") -> int:
        """Length of a prefix on which agreement implies equality."""
        return max(len(self.preperiod), len(other.preperiod)) + lcm(
            len(self.period), len(other.period)
        )

    def zip_with(self, other: "EPSeq", fn: Callable[[Any, Any], Any]) -> "EPSeq":
        p = max(len(self.preperiod), len(other.preperiod))
        q = lcm(len(self.period), len(other.period))
        values = [fn(self[i], other[i]) for i in range(p + q)]
        return EPSeq(values[:p], values[p:])

    def map(self, fn: Callable[[Any], Any]) -> "EPSeq":
        return EPSeq([fn(x) for x in self.preperiod], [fn(x) for x in self.period])

    def __xor__(self, other: "EPSeq") -> "EPSeq":
        return self.zip_with(other, lambda a, b: (a + b) % 2)

    def __add__(self, other: "EPSeq") -> "EPSeq":
        return self.zip_with(other, lambda a, b: a + b)

    def shift(self, k: int = 1) -> "EPSeq":
        """Drop the first ``k`` terms."""
        seq = self
        for _ in range(k):
            if seq.preperiod:
                seq = EPSeq(seq.preperiod[1:], seq.period)
            else:
                seq = EPSeq((), seq.period[1:] + seq.period[:1])
        return seq

    def first_difference(self, other: "EPSeq") -> int | None:
        for i in range(self.window(other)):
            if self[i] != other[i]:
                return i
        return None

    def to_json(self) -> dict:
        return {"preperiod": list(self.preperiod), "period": list(self.period)}

    @classmethod
    def from_json(cls, obj: dict) -> "EPSeq":
        return cls(tuple(obj["preperiod"]), tuple(obj["period"]))

    def __str__(self) -> str:
        pre = ",".join(map(str, self.preperiod))
        per = ",".join(map(str, self.period))
        return f"pre:{pre};per:{per}"


_SPEC_RE = re.compile(r"^\s*(?:pre:(?P<pre>[^;]*);)?\s*per:(?P<per>[^;]+)\s*$")


def parse_spec(text: str, modulus: int | None = 2) -> EPSeq:
    """Parse ``pre:0,1;per:1,0`` (the ``pre:`` part is optional).

    With ``modulus`` set, every term must lie in ``range(modulus)``.
    """
    m = _SPEC_RE.match(text)
    if not m:
        raise ValueError(f"bad sequence spec {text!r}; expected 'pre:a,b;per:c,d'")

    def ints(part: str | None) -> list[int]:
        if part is None or not part.strip():
            return []
        try:
            vals = [int(x) for x in part.split(",")]
        except ValueError:
            raise ValueError(f"bad sequence spec {text!r}: terms must be integers") from None
        if modulus is not None and any(not 0 <= v < modulus for v in vals):
            raise ValueError(f"bad sequence spec {text!r}: terms must be in 0..{modulus - 1}")
        return vals

    per = ints(m.group("per"))
    if not per:
        raise ValueError(f"bad sequence spec {text!r}: empty period")
    return EPSeq(ints(m.group("pre")), per)
