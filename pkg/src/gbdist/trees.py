"""Finite and regular trees over an action alphabet.

Trees are unordered multisets of (action, subtree) summands; a + a and a are
different trees (collapsing a duplicate is a costed transformation step, not a
structural identity). FiniteTree keeps children canonically sorted so that
structural equality, hashing and summand indices are all well defined.

RegularTree is a finite-state presentation (an LTS with a root) of a possibly
infinite tree. Equality of regular trees means equality of the denoted trees,
decided by greatest-fixpoint partition refinement over multiset child
signatures: two states are identified iff their (action, class) successor
multisets agree, which matches agreement of all finite-depth projections.
"""
from __future__ import annotations

from typing import Hashable, Iterable, Sequence


class InfiniteTreeError(ValueError):
    """An operation that needs a finite tree met a cyclic regular tree."""


class FiniteTree:
    """Canonical unordered finite tree (multiset of prefixed summands).

    Children are ordered by (action, order_key of the subtree). order_key is
    the graded projection sequence (pi_1 key, pi_2 key, ...), so the order of
    two distinct subtrees is decided at the shallowest level where they
    differ. That makes summand order stable under projection: projecting a
    tree never reorders surviving summands, only merges ones that became
    equal. Replay indices therefore carry over between a sequence and its
    projections, and between operational and coinductive presentations.
    """

    __slots__ = ("children", "key", "_hash", "_okey", "_proj", "_depth")

    children: tuple[tuple[str, "FiniteTree"], ...]

    def __init__(self, children: Iterable[tuple[str, "FiniteTree"]] = ()):
        object.__setattr__(self, "_okey", None)
        object.__setattr__(self, "_proj", None)
        kids = sorted(children, key=lambda p: (p[0], p[1].order_key))
        object.__setattr__(self, "children", tuple(kids))
        object.__setattr__(self, "key", tuple((a, c.key) for a, c in self.children))
        object.__setattr__(self, "_hash", hash(self.key))
        object.__setattr__(self, "_depth", 1 + max((c._depth for _, c in kids), default=-1))

    def __setattr__(self, name, value):
        raise AttributeError("FiniteTree is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def leaf(action: str) -> "FiniteTree":
        return FiniteTree(((action, EMPTY_TREE),))

    @staticmethod
    def chain(actions: Sequence[str]) -> "FiniteTree":
        t = EMPTY_TREE
        for a in reversed(actions):
            t = FiniteTree(((a, t),))
        return t

    @staticmethod
    def of(*summands: tuple[str, "FiniteTree"]) -> "FiniteTree":
        return FiniteTree(summands)

    # -- basics ------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return isinstance(other, FiniteTree) and self.key == other.key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"FiniteTree({format_tree(self)!r})"

    def __str__(self) -> str:
        return format_tree(self)

    @property
    def is_empty(self) -> bool:
        return not self.children

    @property
    def order_key(self) -> tuple:
        """Graded projection key: (pi_1.key, ..., pi_depth.key).

        Lexicographic comparison of these tuples orders trees by their
        shallowest difference; a projection of a tree is always <= the tree.
        """
        ok = self._okey
        if ok is None:
            d = self.depth()
            ok = tuple(self.project(k).key for k in range(1, d + 1))
            object.__setattr__(self, "_okey", ok)
        return ok

    def width1(self) -> int:
        """Number of first-level summands (with multiplicity)."""
        return len(self.children)

    def depth(self) -> int:
        return self._depth

    def size(self) -> int:
        """Total number of prefix occurrences (edges)."""
        return sum(1 + c.size() for _, c in self.children)

    def width_upto(self, k: int) -> int:
        """Max summand count over all nodes strictly above level k.

        width_upto(1) is the first-level width; width_upto(k) bounds every
        child list a level-(<= k) step can rewrite.
        """
        if k <= 0:
            return 0
        w = len(self.children)
        for _, c in self.children:
            w = max(w, c.width_upto(k - 1))
        return w

    def project(self, k: int) -> "FiniteTree":
        """Cut everything below level k."""
        if k <= 0:
            return EMPTY_TREE
        if k >= self.depth():
            return self
        cache = self._proj
        if cache is None:
            cache = {}
            object.__setattr__(self, "_proj", cache)
        got = cache.get(k)
        if got is None:
            got = FiniteTree((a, c.project(k - 1)) for a, c in self.children)
            cache[k] = got
        return got

    def dedup(self) -> "FiniteTree":
        """Recursive multiplicity-erased form (children become sets).

        Two trees are interconvertible by zero-cost duplicate/collapse steps
        alone iff their dedup forms coincide; the exact searches run over
        these normal forms.
        """
        seen: dict[tuple, tuple[str, FiniteTree]] = {}
        for a, c in self.children:
            d = c.dedup()
            seen.setdefault((a, d.key), (a, d))
        return FiniteTree(seen.values())

    def actions_used(self) -> set[str]:
        out: set[str] = set()
        stack = [self]
        while stack:
            t = stack.pop()
            for a, c in t.children:
                out.add(a)
                stack.append(c)
        return out

    def level_action_sets(self) -> list[set[str]]:
        """Sets of actions occurring at levels 1, 2, ... (index 0 = level 1)."""
        out: list[set[str]] = []
        frontier = [self]
        while frontier:
            acts: set[str] = set()
            nxt: list[FiniteTree] = []
            for t in frontier:
                for a, c in t.children:
                    acts.add(a)
                    nxt.append(c)
            if not acts:
                break
            out.append(acts)
            frontier = nxt
        return out


EMPTY_TREE = FiniteTree(())


def tree_sum(parts: Iterable[FiniteTree]) -> FiniteTree:
    """Multiset union of the summands of the given trees."""
    kids: list[tuple[str, FiniteTree]] = []
    for p in parts:
        kids.extend(p.children)
    return FiniteTree(kids)


def format_tree(t: FiniteTree) -> str:
    """Canonical term form: 0 | term(+term)*, term = action(.atom)?.

    A lone 0-action leaf prints as 0.0 because the bare token 0 denotes the
    empty tree in tree position.
    """
    if t.is_empty:
        return "0"
    parts = [_format_summand(a, c) for a, c in t.children]
    if len(parts) == 1 and parts[0] == "0":
        return "0.0"
    return "+".join(parts)


def _format_summand(action: str, child: FiniteTree) -> str:
    if child.is_empty:
        return action
    if len(child.children) == 1:
        inner = _format_summand(*child.children[0])
        if inner == "0":
            # chained bare 0 would read as the empty tree, not a 0-leaf
            inner = "0.0"
        return f"{action}.{inner}"
    return f"{action}.({format_tree(child)})"


# ---------------------------------------------------------------------------
# Regular trees
# ---------------------------------------------------------------------------


class RegularTree:
    """Rooted finite LTS viewed as a (possibly infinite) unordered tree.

    succ maps each state to a *multiset* of (action, state) moves; duplicate
    entries are meaningful and preserved.
    """

    __slots__ = ("states", "succ", "root", "name")

    def __init__(
        self,
        states: Sequence[Hashable],
        succ: dict[Hashable, Sequence[tuple[str, Hashable]]],
        root: Hashable,
        name: str = "",
    ):
        sts = tuple(states)
        stset = set(sts)
        if root not in stset:
            raise ValueError(f"root {root!r} not among states")
        table: dict[Hashable, tuple[tuple[str, Hashable], ...]] = {}
        for s in sts:
            moves = tuple(sorted(succ.get(s, ()), key=lambda m: (m[0], str(m[1]))))
            for a, tgt in moves:
                if tgt not in stset:
                    raise ValueError(f"transition target {tgt!r} not among states")
            table[s] = moves
        object.__setattr__(self, "states", sts)
        object.__setattr__(self, "succ", table)
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "name", name)

    def __setattr__(self, name, value):
        raise AttributeError("RegularTree is immutable")

    @staticmethod
    def from_finite(t: FiniteTree, name: str = "") -> "RegularTree":
        """Present a finite tree as a regular tree (states = distinct subtrees)."""
        states: dict[tuple, FiniteTree] = {}

        def visit(node: FiniteTree):
            if node.key in states:
                return
            states[node.key] = node
            for _, c in node.children:
                visit(c)

        visit(t)
        succ = {k: tuple((a, c.key) for a, c in states[k].children) for k in states}
        return RegularTree(tuple(states.keys()), succ, t.key, name=name)

    def reachable(self) -> list[Hashable]:
        seen = [self.root]
        seen_set = {self.root}
        i = 0
        while i < len(seen):
            for _, tgt in self.succ[seen[i]]:
                if tgt not in seen_set:
                    seen_set.add(tgt)
                    seen.append(tgt)
            i += 1
        return seen

    def is_finite(self) -> bool:
        """True iff the denoted tree is finite (no reachable cycle)."""
        WHITE, GRAY, BLACK = 0, 1, 2
        color: dict[Hashable, int] = {}
        stack: list[tuple[Hashable, int]] = [(self.root, 0)]
        while stack:
            state, idx = stack[-1]
            if idx == 0:
                if color.get(state, WHITE) == GRAY:
                    return False
                if color.get(state, WHITE) == BLACK:
                    stack.pop()
                    continue
                color[state] = GRAY
            moves = self.succ[state]
            if idx < len(moves):
                stack[-1] = (state, idx + 1)
                tgt = moves[idx][1]
                c = color.get(tgt, WHITE)
                if c == GRAY:
                    return False
                if c == WHITE:
                    stack.append((tgt, 0))
            else:
                color[state] = BLACK
                stack.pop()
        return True

    def unfold_to_depth(self, k: int, state: Hashable | None = None) -> FiniteTree:
        """Finite projection pi_k of the tree denoted from `state` (default root)."""
        memo: dict[tuple[Hashable, int], FiniteTree] = {}
        start = self.root if state is None else state

        def go(st, depth):
            if depth <= 0:
                return EMPTY_TREE
            key = (st, depth)
            got = memo.get(key)
            if got is None:
                got = FiniteTree((a, go(tgt, depth - 1)) for a, tgt in self.succ[st])
                memo[key] = got
            return got

        return go(start, k)

    def project(self, k: int) -> "RegularTree":
        """The k-th projection as a regular tree (always finite)."""
        return RegularTree.from_finite(self.unfold_to_depth(k), name=self.name)

    def to_finite(self) -> FiniteTree:
        """Full unfolding; raises InfiniteTreeError on a cyclic tree."""
        if not self.is_finite():
            raise InfiniteTreeError(f"regular tree {self.name or self.root!r} denotes an infinite tree")
        memo: dict[Hashable, FiniteTree] = {}

        def go(state):
            got = memo.get(state)
            if got is None:
                got = FiniteTree((a, go(tgt)) for a, tgt in self.succ[state])
                memo[state] = got
            return got

        return go(self.root)

    def actions_used(self) -> set[str]:
        return {a for s in self.reachable() for a, _ in self.succ[s]}

    def __repr__(self) -> str:
        tag = self.name or f"{len(self.states)} states"
        return f"RegularTree({tag}, root={self.root!r})"


# ---------------------------------------------------------------------------
# Joint bisimulation classification
# ---------------------------------------------------------------------------


class TreeFamily:
    """Joint multiset-bisimulation classes for a finite family of regular trees.

    Besides deciding equality, classes get a canonical total order (iterated
    rank refinement); replay code uses the ranks to sort summands whose
    subtrees are arbitrary regular trees.
    """

    def __init__(self, trees: Sequence[RegularTree]):
        self.trees = tuple(trees)
        nodes: list[tuple[int, Hashable]] = []
        for i, t in enumerate(self.trees):
            for s in t.states:
                nodes.append((i, s))
        cls = {nd: 0 for nd in nodes}
        n = 1
        while True:
            sigs = {}
            for nd in nodes:
                i, s = nd
                sig = tuple(sorted((a, cls[(i, tgt)]) for a, tgt in self.trees[i].succ[s]))
                sigs[nd] = (cls[nd], sig)
            order = sorted(set(sigs.values()))
            remap = {v: k for k, v in enumerate(order)}
            new_cls = {nd: remap[sigs[nd]] for nd in nodes}
            if len(order) == n:
                cls = new_cls
                break
            cls, n = new_cls, len(order)

        # canonical rank per class: order classes by their graded projection
        # sequence (pi_1, pi_2, ...), the same order FiniteTree uses for
        # summands. Distinct classes differ within `n` levels (partition
        # refinement stabilizes in at most n rounds), so depth n+1 suffices
        # both to separate them and to detect that a class has gone constant
        # (finite tree shallower than the probe depth).
        reps: dict[int, tuple[int, Hashable]] = {}
        for nd in nodes:
            reps.setdefault(cls[nd], nd)
        graded: dict[int, tuple] = {}
        for c, (i, s) in reps.items():
            seq = []
            prev = None
            for k in range(1, n + 2):
                cut = self.trees[i].unfold_to_depth(k, s).key
                if cut == prev:
                    break
                seq.append(cut)
                prev = cut
            graded[c] = tuple(seq)
        order = sorted(graded.values())
        pos = {v: k for k, v in enumerate(order)}
        self._cls = cls
        self._rank = {c: pos[graded[c]] for c in graded}

    def state_class(self, tree_index: int, state: Hashable) -> int:
        return self._rank[self._cls[(tree_index, state)]]

    def root_class(self, tree_index: int) -> int:
        return self.state_class(tree_index, self.trees[tree_index].root)

    def equal(self, i: int, j: int) -> bool:
        return self.root_class(i) == self.root_class(j)


def tree_equal(r1: RegularTree, r2: RegularTree) -> bool:
    """Equality of denoted trees (all finite projections agree)."""
    fam = TreeFamily((r1, r2))
    return fam.equal(0, 1)
