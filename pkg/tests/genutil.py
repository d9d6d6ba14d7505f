"""Deterministic random instance generators shared by the test suites."""
from __future__ import annotations

import random
from fractions import Fraction

from gbdist import (
    ActionDomain,
    Alpha,
    Cost,
    EMPTY_TREE,
    FiniteTree,
    RegularTree,
    Step,
    StepSequence,
    apply_step,
    replay,
)

LETTERS = "abcdefgh"


def rand_metric(rng: random.Random, n_actions: int, connected: bool = True) -> ActionDomain:
    """Random metric as the shortest-path closure of a random weighted graph.

    With connected=False some pairs may stay at infinite distance.
    """
    acts = list(LETTERS[:n_actions])
    INF = None
    dist = {(a, b): (Fraction(0) if a == b else INF) for a in acts for b in acts}
    edges = []
    for i, a in enumerate(acts):
        for b in acts[i + 1 :]:
            if connected or rng.random() < 0.7:
                edges.append((a, b))
    if connected:
        # a random spanning path keeps everything reachable
        order = acts[:]
        rng.shuffle(order)
        for x, y in zip(order, order[1:]):
            if (x, y) not in edges and (y, x) not in edges:
                edges.append((x, y))
    for a, b in edges:
        w = Fraction(rng.randint(1, 8), rng.choice((1, 1, 2, 4)))
        dist[(a, b)] = dist[(b, a)] = w
    # Floyd-Warshall closure
    for c in acts:
        for a in acts:
            ac = dist[(a, c)]
            if ac is None:
                continue
            for b in acts:
                cb = dist[(c, b)]
                if cb is None:
                    continue
                cur = dist[(a, b)]
                if cur is None or ac + cb < cur:
                    dist[(a, b)] = dist[(b, a)] = ac + cb
    entries = [
        (a, b, v)
        for (a, b), v in dist.items()
        if a < b and v is not None
    ]
    return ActionDomain.build(acts, entries)


def rand_tree(rng: random.Random, alphabet, max_depth: int, max_width: int) -> FiniteTree:
    if max_depth <= 0:
        return EMPTY_TREE
    width = rng.randint(0 if max_depth > 1 else 1, max_width)
    kids = []
    for _ in range(width):
        a = rng.choice(alphabet)
        kids.append((a, rand_tree(rng, alphabet, max_depth - 1, max_width)))
    return FiniteTree(kids)


def _all_nodes(t: FiniteTree, max_level: int | None = None):
    """(position, node) pairs; position is the path to the node whose child
    list would be rewritten."""
    out = [((), t)]
    frontier = [((), t)]
    while frontier:
        pos, node = frontier.pop()
        if max_level is not None and len(pos) + 1 >= max_level + 1:
            continue
        for i, (_, c) in enumerate(node.children):
            out.append((pos + (i,), c))
            frontier.append((pos + (i,), c))
    return out


def rand_steps(
    rng: random.Random,
    source: FiniteTree,
    alpha: Alpha,
    dom: ActionDomain,
    n_steps: int,
    max_width: int = 6,
    max_level: int | None = None,
    pad_costs: bool = False,
) -> StepSequence:
    """Random valid sequence from `source` (relabels use finite-distance
    targets; declared costs are minimal unless pad_costs)."""
    cur = source
    steps: list[Step] = []
    for _ in range(n_steps):
        moves = []
        for pos, node in _all_nodes(cur, max_level):
            kids = node.children
            level = len(pos) + 1
            if not kids:
                continue
            if len(kids) < max_width:
                for i in range(len(kids)):
                    moves.append(Step("dup", pos, i))
            for i in range(len(kids)):
                for j in range(i + 1, len(kids)):
                    if kids[i] == kids[j]:
                        moves.append(Step("drop", pos, i, partner=j))
            for i, (a, _) in enumerate(kids):
                for b in dom.actions:
                    if b == a:
                        continue
                    d = dom.dist(a, b)
                    if not d.is_finite:
                        continue
                    c = d.scale(alpha.discount(level))
                    if pad_costs and rng.random() < 0.3:
                        c = c + Cost.of(Fraction(rng.randint(1, 3), 4))
                    moves.append(Step("relabel", pos, i, old_action=a, new_action=b, cost=c))
        if not moves:
            break
        st = rng.choice(moves)
        steps.append(st)
        cur = apply_step(cur, st, alpha, dom)
    return StepSequence(alpha, source, tuple(steps))


def rand_lts(rng: random.Random, alphabet, n_states: int, max_out: int = 3, acyclic: bool = False) -> RegularTree:
    names = [f"q{i}" for i in range(n_states)]
    succ = {}
    for i, s in enumerate(names):
        moves = []
        for _ in range(rng.randint(0, max_out)):
            tgt = rng.randrange(i + 1, n_states) if acyclic and i + 1 < n_states else rng.randrange(n_states)
            if acyclic and tgt <= i:
                continue
            moves.append((rng.choice(alphabet), names[tgt]))
        succ[s] = tuple(moves)
    return RegularTree(names, succ, "q0")


def rand_depth1(rng: random.Random, alphabet, max_width: int) -> FiniteTree:
    width = rng.randint(1, max_width)
    return FiniteTree((rng.choice(alphabet), EMPTY_TREE) for _ in range(width))
