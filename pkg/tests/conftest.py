from __future__ import annotations

from fractions import Fraction

import pytest

from gbdist import (
    ActionDomain,
    Alpha,
    Cost,
    FiniteTree,
    RegularTree,
    Step,
    StepSequence,
    tree_sum,
    usual_metric,
)


@pytest.fixture
def half() -> Alpha:
    return Alpha(Fraction(1, 2))


@pytest.fixture
def ab_cd_domain() -> ActionDomain:
    """d(a,b) = 4, d(c,d) = 1, other cross pairs unspecified (= infinite)."""
    return ActionDomain.build(entries=[("a", "b", 4), ("c", "d", 1)])


@pytest.fixture
def digits() -> ActionDomain:
    """Actions 1..5 with the usual integer distance."""
    return usual_metric(5)


@pytest.fixture
def chain_loop_pair() -> tuple[RegularTree, RegularTree]:
    """Single-action loops: the regular trees a^inf and b^inf."""
    a = RegularTree(("s",), {"s": (("a", "s"),)}, "s", name="a_loop")
    b = RegularTree(("s",), {"s": (("b", "s"),)}, "s", name="b_loop")
    return a, b


@pytest.fixture
def running_pair(half):
    """The two-summand example: t = a.c + a.d against t' = b.c + b.d,
    with its three projected witness sequences."""
    leaf = FiniteTree.leaf
    t1 = tree_sum([FiniteTree.of(("a", leaf("c"))), FiniteTree.of(("a", leaf("d")))])
    pi1 = StepSequence(
        half,
        tree_sum([leaf("a"), leaf("a")]),
        (
            Step("drop", (), 0, partner=1),
            Step("relabel", (), 0, old_action="a", new_action="b", cost=Cost.of(4)),
            Step("dup", (), 0),
        ),
    )
    pi2 = StepSequence(
        half,
        t1.project(2),
        (
            Step("relabel", (1,), 0, old_action="d", new_action="c", cost=Cost.of(Fraction(1, 2))),
            Step("drop", (), 0, partner=1),
            Step("relabel", (), 0, old_action="a", new_action="b", cost=Cost.of(4)),
            Step("dup", (), 0),
            Step("relabel", (1,), 0, old_action="c", new_action="d", cost=Cost.of(Fraction(1, 2))),
        ),
    )
    t3 = tree_sum(
        [
            FiniteTree.of(("a", FiniteTree.chain(["c", "c"]))),
            FiniteTree.of(("a", FiniteTree.chain(["d", "d"]))),
        ]
    )
    pi3 = StepSequence(
        half,
        t3,
        (
            Step("relabel", (1,), 0, old_action="d", new_action="c", cost=Cost.of(Fraction(1, 2))),
            Step("relabel", (1, 0), 0, old_action="d", new_action="c", cost=Cost.of(Fraction(1, 4))),
            Step("drop", (), 0, partner=1),
            Step("relabel", (), 0, old_action="a", new_action="b", cost=Cost.of(4)),
            Step("dup", (), 0),
            Step("relabel", (1,), 0, old_action="c", new_action="d", cost=Cost.of(Fraction(1, 2))),
            Step("relabel", (1, 0), 0, old_action="c", new_action="d", cost=Cost.of(Fraction(1, 4))),
        ),
    )
    return pi1, pi2, pi3


@pytest.fixture
def counter_trees() -> tuple[RegularTree, RegularTree, RegularTree]:
    """The unbounded-counter tree, its 1-relabeled variant, and the
    two-summand mixed variant used in the certificate examples."""
    t = RegularTree(("n0", "n1"), {"n0": (("0", "n0"), ("0", "n1")), "n1": ()}, "n0", name="counter")
    tp = RegularTree(("n0", "n1"), {"n0": (("0", "n0"), ("1", "n1")), "n1": ()}, "n0", name="counter_relabeled")
    tpp = RegularTree(
        ("m0", "m1", "m2", "m3"),
        {"m0": (("1", "m1"), ("0", "m2")), "m1": (), "m2": (("0", "m2"), ("0", "m3")), "m3": ()},
        "m0",
        name="counter_mixed",
    )
    return t, tp, tpp
