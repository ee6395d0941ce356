"""Named pattern systems: Antoine chains, prescribed-ν spine systems, Bing
and Whitehead decompositions."""

from __future__ import annotations

import warnings

from .core import Assignment, ChildSlot, Edge, Pattern, PatternSystem, Rule, TorusNode
from .sequences import EPSeq

BING_PROVENANCE = "Bing decomposition: declared slice (Bing doubles of the unknot are slice)"
WHITEHEAD_PROVENANCE = "Whitehead decomposition: declared slice (Freedman)"


class NonAdmissibleWarning(UserWarning):
    """A generated system is known to fail the admissibility conditions."""


def chain_pattern(k: int, name: str | None = None, spine_child: int | None = 0) -> Pattern:
    """Cyclic chain of ``k`` unknots, neighbours linked with alternating sign.

    Each child gets winding 1 in its parent by convention.
    """
    if k < 3:
        raise ValueError(f"a chain needs at least 3 components, got {k}")
    edges = tuple(Edge(i, (i + 1) % k, 1 if i % 2 == 0 else -1, False) for i in range(k))
    return Pattern(
        name or f"chain{k}",
        tuple(ChildSlot(1, "unknot") for _ in range(k)),
        edges,
        "chain",
        spine_child,
    )


def _single_root(spine: bool = True) -> tuple[TorusNode, ...]:
    return (TorusNode("r0", None, 0, None, "unknot", spine),)


def antoine_chain(k: int) -> PatternSystem:
    """Antoine necklace: every component is replaced by a ``k``-chain."""
    if k < 3:
        raise ValueError(f"antoine_chain needs k >= 3, got {k}")
    if k == 3:
        warnings.warn(
            "a 3-chain has fewer than four components per parent; the result is not admissible",
            NonAdmissibleWarning,
            stacklevel=2,
        )
    pat = chain_pattern(k)
    rule = Rule(pat.name, pat.name)
    return PatternSystem(_single_root(), (), {pat.name: pat}, (Assignment((), (rule,)),))


def antoine_from_target(target: EPSeq) -> PatternSystem:
    """Antoine system whose mod-2 linking sequence equals ``target``.

    Off the spine every component holds a 4-chain.  The spine component at
    stage m-1 holds a 5-chain when ``target[m] == 1`` and a 4-chain
    otherwise, so the stage-m count is ``4 * count(m-1) + target[m]``.
    """
    if any(x not in (0, 1) for x in target.preperiod + target.period):
        raise ValueError("target must be a Z/2 sequence")
    if target[0] != 0:
        raise ValueError("target must start with 0: a single unlinked root has no linked component")
    tail = target.shift(1)
    four, five = chain_pattern(4), chain_pattern(5)

    def rule(bit: int) -> Rule:
        return Rule(five.name if bit else four.name, four.name)

    patterns = {four.name: four}
    if 1 in tail.preperiod + tail.period:
        patterns[five.name] = five
    asg = Assignment(tuple(map(rule, tail.preperiod)), tuple(map(rule, tail.period)))
    return PatternSystem(_single_root(), (), patterns, (asg,))


def bing_pattern() -> PatternSystem:
    """Bing decomposition: two clasped components of winding 0 per parent.

    Algebraic linking of the pair is 0 although it is not split.
    """
    pat = Pattern(
        "bing",
        (ChildSlot(0, "unknot"), ChildSlot(0, "unknot")),
        (Edge(0, 1, 0, False),),
        "custom",
        0,
    )
    return PatternSystem(_single_root(), (), {"bing": pat}, (Assignment((), (Rule("bing", "bing"),)),))


def whitehead_pattern() -> PatternSystem:
    """Whitehead decomposition: one winding-0 component per parent."""
    pat = Pattern("whitehead", (ChildSlot(0, "unknot"),), (), "custom", 0)
    return PatternSystem(
        _single_root(), (), {"whitehead": pat}, (Assignment((), (Rule("whitehead", "whitehead"),)),)
    )
