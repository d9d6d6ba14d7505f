"""Atomic transformation steps and their replay semantics.

A step rewrites the child list of one node: duplicating a summand, collapsing
two identical summands, or relabeling a summand's action. Positions are paths
of summand indices into canonical child listings, re-resolved against the
current tree at every step; the level of a step is len(position) + 1 and a
relabel at level l costs at least alpha^(l-1) * d(old, new).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .costs import Alpha, Cost, ZERO_COST
from .domains import ActionDomain
from .trees import EMPTY_TREE, FiniteTree

DUP = "dup"
DROP = "drop"
RELABEL = "relabel"


class StepError(ValueError):
    """Base class for step replay failures."""


class BadPosition(StepError):
    pass


class IdemMismatch(StepError):
    pass


class CostTooLow(StepError):
    pass


class UnknownAction(StepError):
    pass


class EndpointMismatch(StepError):
    pass


@dataclass(frozen=True)
class Step:
    kind: str
    position: tuple[int, ...]
    subject: int
    partner: Optional[int] = None  # drop only: second summand index
    old_action: Optional[str] = None  # relabel only; validated when present
    new_action: Optional[str] = None  # relabel only
    cost: Cost = ZERO_COST

    def __post_init__(self):
        if self.kind not in (DUP, DROP, RELABEL):
            raise ValueError(f"unknown step kind {self.kind!r}")
        if self.kind == DROP and self.partner is None:
            raise ValueError("drop needs two summand indices")
        if self.kind == RELABEL and self.new_action is None:
            raise ValueError("relabel needs a new action")

    @property
    def level(self) -> int:
        return len(self.position) + 1

    def describe(self) -> str:
        at = ".".join(str(i) for i in self.position)
        if self.kind == RELABEL:
            return f"relabel @{at + '.' if at else ''}{self.subject} {self.old_action or '?'} {self.new_action} {self.cost}"
        if self.kind == DUP:
            return f"dup @{at} {self.subject}"
        return f"drop @{at} {self.subject} {self.partner}"


@dataclass(frozen=True)
class StepSequence:
    alpha: Alpha
    source: FiniteTree
    steps: tuple[Step, ...]

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def total(self) -> Cost:
        out = ZERO_COST
        for s in self.steps:
            out = out + s.cost
        return out


@dataclass(frozen=True)
class Applied:
    """Bookkeeping for one replayed step (used by reverse/fold/graph code)."""

    before_node: FiniteTree
    after_node: FiniteTree
    path_after: tuple[int, ...]
    pair: tuple[str, FiniteTree]  # the summand acted on (post-action for relabel)
    minimal: Optional[Cost]


@dataclass(frozen=True)
class Replay:
    trees: tuple[FiniteTree, ...]
    applied: tuple[Applied, ...]
    declared_total: Cost
    minimal_total: Optional[Cost]

    @property
    def target(self) -> FiniteTree:
        return self.trees[-1]


def _resolve_chain(tree: FiniteTree, position: tuple[int, ...]) -> list[FiniteTree]:
    """Nodes along the position path, root first; validates indices."""
    chain = [tree]
    node = tree
    for depth, idx in enumerate(position):
        if not (0 <= idx < len(node.children)):
            raise BadPosition(
                f"position {position} leaves the tree at depth {depth} (node has {len(node.children)} summands)"
            )
        node = node.children[idx][1]
        chain.append(node)
    return chain


def _rebuild(chain: list[FiniteTree], position: tuple[int, ...], new_node: FiniteTree) -> tuple[FiniteTree, tuple[int, ...]]:
    """Replace the node at `position` and re-canonicalize ancestors.

    Returns the new tree and the rewritten node's path in it (child lists
    re-sort, so indices shift).
    """
    node = new_node
    rev_path: list[int] = []
    for depth in range(len(position) - 1, -1, -1):
        parent = chain[depth]
        idx = position[depth]
        kids = list(parent.children)
        action = kids[idx][0]
        kids[idx] = (action, node)
        parent_new = FiniteTree(kids)
        rev_path.append(parent_new.children.index((action, node)))
        node = parent_new
    rev_path.reverse()
    return node, tuple(rev_path)


def apply_step(
    tree: FiniteTree,
    step: Step,
    alpha: Alpha,
    dom: Optional[ActionDomain] = None,
) -> FiniteTree:
    """Apply one step; raises StepError subclasses on invalid steps.

    With dom=None the structural checks still run but relabel costs and
    action membership are not checked (used for pure re-projection replay).
    """
    return _apply(tree, step, alpha, dom)[0]


def _apply(
    tree: FiniteTree,
    step: Step,
    alpha: Alpha,
    dom: Optional[ActionDomain],
) -> tuple[FiniteTree, Applied]:
    chain = _resolve_chain(tree, step.position)
    node = chain[-1]
    kids = list(node.children)
    n = len(kids)
    if not (0 <= step.subject < n):
        raise BadPosition(f"subject {step.subject} out of range at {step.position} ({n} summands)")

    minimal: Optional[Cost] = ZERO_COST
    if step.kind == DUP:
        pair = kids[step.subject]
        kids.append(pair)
    elif step.kind == DROP:
        if not (0 <= step.partner < n):
            raise BadPosition(f"partner {step.partner} out of range at {step.position} ({n} summands)")
        if step.partner == step.subject:
            raise IdemMismatch("drop needs two distinct summand indices")
        if kids[step.subject] != kids[step.partner]:
            a, b = kids[step.subject], kids[step.partner]
            raise IdemMismatch(
                f"summands {step.subject} and {step.partner} differ: {a[0]}.{a[1]} vs {b[0]}.{b[1]}"
            )
        pair = kids[step.subject]
        del kids[max(step.subject, step.partner)]
    else:  # relabel
        action, sub = kids[step.subject]
        if step.old_action is not None and step.old_action != action:
            raise BadPosition(
                f"relabel at {step.position}/{step.subject} expected action {step.old_action!r}, found {action!r}"
            )
        if dom is not None:
            if not dom.has(action):
                raise UnknownAction(f"action {action!r} not in domain")
            if not dom.has(step.new_action):
                raise UnknownAction(f"action {step.new_action!r} not in domain")
            minimal = dom.dist(action, step.new_action).scale(alpha.discount(step.level))
            if step.cost < minimal:
                raise CostTooLow(
                    f"declared cost {step.cost} below minimum {minimal} for level-{step.level} "
                    f"relabel {action}->{step.new_action}"
                )
        else:
            minimal = None
        pair = (step.new_action, sub)
        kids[step.subject] = pair
    node_new = FiniteTree(kids)
    tree_new, path_after = _rebuild(chain, step.position, node_new)
    return tree_new, Applied(node, node_new, path_after, pair, minimal)


def replay(seq: StepSequence, dom: Optional[ActionDomain] = None) -> Replay:
    """Replay a whole sequence, collecting intermediate trees and totals."""
    trees = [seq.source]
    infos: list[Applied] = []
    declared = ZERO_COST
    minimal: Optional[Cost] = ZERO_COST if dom is not None else None
    for i, st in enumerate(seq.steps):
        try:
            t, info = _apply(trees[-1], st, seq.alpha, dom)
        except StepError as exc:
            raise type(exc)(f"step {i + 1} ({st.describe()}): {exc}") from None
        trees.append(t)
        infos.append(info)
        declared = declared + st.cost
        if minimal is not None:
            minimal = minimal + info.minimal
    return Replay(tuple(trees), tuple(infos), declared, minimal)


def validate_sequence(seq: StepSequence, dom: ActionDomain) -> Replay:
    """Full validation against a domain; synonym for strict replay."""
    return replay(seq, dom)


def compose(s1: StepSequence, s2: StepSequence, dom: Optional[ActionDomain] = None) -> StepSequence:
    if s1.alpha != s2.alpha:
        raise EndpointMismatch(f"alpha mismatch: {s1.alpha} vs {s2.alpha}")
    t1 = replay(s1, dom).target
    if t1 != s2.source:
        raise EndpointMismatch(f"first sequence ends at {t1}, second starts at {s2.source}")
    return StepSequence(s1.alpha, s1.source, s1.steps + s2.steps)


def reverse(seq: StepSequence, dom: Optional[ActionDomain] = None) -> StepSequence:
    """Mirror a sequence (dup <-> drop, relabels swapped), preserving costs."""
    rep = replay(seq, dom)
    out: list[Step] = []
    for st, info in zip(reversed(seq.steps), reversed(rep.applied)):
        kids = info.after_node.children
        if st.kind == DUP:
            first = kids.index(info.pair)
            second = kids.index(info.pair, first + 1)
            out.append(Step(DROP, info.path_after, first, partner=second, cost=st.cost))
        elif st.kind == DROP:
            out.append(Step(DUP, info.path_after, kids.index(info.pair), cost=st.cost))
        else:
            old = st.old_action
            if old is None:
                old = info.before_node.children[st.subject][0]
            out.append(
                Step(
                    RELABEL,
                    info.path_after,
                    kids.index(info.pair),
                    old_action=st.new_action,
                    new_action=old,
                    cost=st.cost,
                )
            )
    return StepSequence(seq.alpha, rep.target, tuple(out))


def project_sequence(seq: StepSequence, k: int) -> StepSequence:
    """Project a sequence to depth k: steps of level > k vanish, the rest keep
    their costs with positions recomputed against the projected trees."""
    rep = replay(seq, None)
    src = seq.source.project(k)
    cur = src
    out: list[Step] = []
    for st, before in zip(seq.steps, rep.trees):
        if st.level > k:
            continue
        node_deep = before
        node_proj = cur
        remaining = k
        pos: list[int] = []
        for idx in st.position:
            a, sub = node_deep.children[idx]
            pair = (a, sub.project(remaining - 1))
            pidx = node_proj.children.index(pair)
            pos.append(pidx)
            node_deep = sub
            node_proj = node_proj.children[pidx][1]
            remaining -= 1

        def proj_pair(i: int) -> tuple[str, FiniteTree]:
            a, sub = node_deep.children[i]
            return (a, sub.project(remaining - 1))

        if st.kind == DROP:
            pair = proj_pair(st.subject)
            first = node_proj.children.index(pair)
            second = node_proj.children.index(pair, first + 1)
            new_st = replace(st, position=tuple(pos), subject=first, partner=second)
        else:
            pair = proj_pair(st.subject)
            subj = node_proj.children.index(pair)
            old = node_deep.children[st.subject][0] if st.kind == RELABEL else None
            new_st = replace(st, position=tuple(pos), subject=subj,
                             old_action=old if st.kind == RELABEL else None)
        cur = apply_step(cur, new_st, seq.alpha, None)
        out.append(new_st)
    # internal consistency: the projected replay must shadow the deep one
    if cur != rep.target.project(k):
        raise StepError("projection replay diverged from the projected target")
    return StepSequence(seq.alpha, src, tuple(out))


def normalize_steps(seq: StepSequence) -> StepSequence:
    """Rewrite every index choice to the first equal occurrence.

    Equal summands are interchangeable, so transcriptions of the same
    transformation can differ in index choices; this picks a canonical
    representative (used before comparing sequences for equality).
    """
    cur = seq.source
    out: list[Step] = []
    for st in seq.steps:
        chain = _resolve_chain(cur, st.position)
        node_deep = cur
        pos: list[int] = []
        for d, idx in enumerate(st.position):
            pair = node_deep.children[idx]
            pos.append(node_deep.children.index(pair))
            node_deep = pair[1]
        node = chain[-1]
        if st.kind == DROP:
            pair = node.children[st.subject]
            first = node.children.index(pair)
            second = node.children.index(pair, first + 1)
            new_st = replace(st, position=tuple(pos), subject=first, partner=second)
        else:
            pair = node.children[st.subject]
            subj = node.children.index(pair)
            old = pair[0] if st.kind == RELABEL else None
            new_st = replace(st, position=tuple(pos), subject=subj,
                             old_action=old if st.kind == RELABEL else None)
        cur = apply_step(cur, new_st, seq.alpha, None)
        out.append(new_st)
    return StepSequence(seq.alpha, seq.source, tuple(out))


def lift_at_summand(
    outer: FiniteTree,
    index: int,
    inner: StepSequence,
    alpha: Alpha,
) -> tuple[list[Step], FiniteTree]:
    """Run a sequence on the subtree of first-level summand `index`, one level
    deeper: positions gain the summand's (moving) index, costs gain a factor
    alpha. Returns the lifted steps and the resulting outer tree."""
    if inner.alpha != alpha:
        raise ValueError("inner sequence uses a different alpha")
    if not (0 <= index < len(outer.children)):
        raise BadPosition(f"summand index {index} out of range")
    action, sub = outer.children[index]
    if sub != inner.source:
        raise EndpointMismatch(
            f"summand subtree {sub} does not match inner source {inner.source}"
        )
    cur_outer = outer
    cur_sub = sub
    cur_idx = index
    out: list[Step] = []
    for st in inner.steps:
        lifted = replace(st, position=(cur_idx,) + st.position, cost=st.cost.scale(alpha.value))
        cur_outer = apply_step(cur_outer, lifted, alpha, None)
        cur_sub = apply_step(cur_sub, st, alpha, None)
        cur_idx = cur_outer.children.index((action, cur_sub))
        out.append(lifted)
    return out, cur_outer


def steps_from_moves(
    source: FiniteTree,
    alpha: Alpha,
    moves: Iterable[tuple],
) -> StepSequence:
    """Convenience builder used by tests: moves are ('dup', pos, i),
    ('drop', pos, i, j) or ('relabel', pos, i, old, new, cost)."""
    steps = []
    for m in moves:
        if m[0] == DUP:
            steps.append(Step(DUP, tuple(m[1]), m[2]))
        elif m[0] == DROP:
            steps.append(Step(DROP, tuple(m[1]), m[2], partner=m[3]))
        else:
            steps.append(
                Step(RELABEL, tuple(m[1]), m[2], old_action=m[3], new_action=m[4], cost=Cost.of(m[5]))
            )
    return StepSequence(alpha, source, tuple(steps))
