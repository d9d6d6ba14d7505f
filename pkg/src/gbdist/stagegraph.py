"""Multi-stage graphs of first-level transformation runs.

A run between two 1-depth trees only ever duplicates, merges, or relabels
first-level summands, so it can be drawn as a layered graph: one column
(stage) per intermediate tree, one node per summand, and arcs showing where
each summand goes next. Stage 0 carries the source multiset, the last stage
the target multiset, and the total arc cost equals the minimal cost of the
run.

The point of the representation is reduction: redundant detours can be
removed from the graph without disconnecting either side, and what remains
is a disjoint union of "diabolos" (funnels that merge everything into a
single waist node and fan out again). Reading a run back off the reduced
graph gives an equivalent proof with at most 3(|A|+|B|-2)+1 steps whose
intermediate trees are never wider than |A|+|B|.

Node identity is positional: node (j, i) is the i-th summand of stage j.
All transformations return new graphs with freshly compacted indices.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .costs import Alpha, Cost, ZERO_COST
from .domains import ActionDomain
from .steps import Step, StepSequence, replay
from .trees import EMPTY_TREE, FiniteTree

__all__ = [
    "Arc",
    "Diabolo",
    "MultiStageGraph",
    "NotDepthOne",
    "NotDiabolo",
    "NotFirstLevel",
    "NotTbwc",
    "NotTsc",
    "StageGraphError",
    "arc_kind",
    "build_graph",
    "compact_by_paths",
    "decompose",
    "extract_sequence",
    "is_tbwc",
    "is_tsc",
    "prune_to_tbwc",
    "reduce_to_diabolos",
    "to_dot",
    "total_cost",
]


class StageGraphError(ValueError):
    """Base for stage-graph shape and precondition failures."""


class NotFirstLevel(StageGraphError):
    """A step acts below the first level."""


class NotDepthOne(StageGraphError):
    """A tree along the run has depth greater than one."""


class NotTsc(StageGraphError):
    """The graph does not connect both sides."""


class NotTbwc(StageGraphError):
    """An internal node lacks an in-arc or an out-arc."""


class NotDiabolo(StageGraphError):
    """A component has no admissible center."""


@dataclass(frozen=True, order=True)
class Arc:
    """Directed arc from node (stage, tail) to node (stage+1, head).

    The cost is intrinsic (relabel arcs pay the label distance, everything
    else is free); the pattern kind is not stored because it decays under
    reduction - ask arc_kind for the current reading.
    """

    stage: int
    tail: int
    head: int
    cost: Cost = ZERO_COST

    def __post_init__(self):
        if self.stage < 0 or self.tail < 0 or self.head < 0:
            raise StageGraphError(f"negative arc coordinates {self!r}")
        if not self.cost.is_finite or self.cost < ZERO_COST:
            raise StageGraphError(f"arc cost must be finite and >= 0, got {self.cost}")


@dataclass(frozen=True)
class MultiStageGraph:
    """Layered graph over per-stage label tuples.

    labels[j][i] is the action of node (j, i); arcs only connect stage j to
    stage j+1. At least one stage must exist; the first and last stage play
    the roles of the source and target multisets.
    """

    labels: tuple[tuple[str, ...], ...]
    arcs: tuple[Arc, ...]

    def __init__(self, labels: Iterable[Sequence[str]], arcs: Iterable[Arc] = ()):
        lbl = tuple(tuple(s) for s in labels)
        if not lbl:
            raise StageGraphError("a multi-stage graph needs at least one stage")
        seen: set[tuple[int, int, int]] = set()
        for arc in arcs:
            if arc.stage >= len(lbl) - 1:
                raise StageGraphError(f"arc {arc} starts at or after the last stage")
            if arc.tail >= len(lbl[arc.stage]) or arc.head >= len(lbl[arc.stage + 1]):
                raise StageGraphError(f"arc {arc} points outside its stages")
            key = (arc.stage, arc.tail, arc.head)
            if key in seen:
                raise StageGraphError(f"duplicate arc {key}")
            seen.add(key)
        object.__setattr__(self, "labels", lbl)
        object.__setattr__(self, "arcs", tuple(sorted(arcs)))

    @property
    def n_stages(self) -> int:
        return len(self.labels)

    @property
    def width(self) -> int:
        return max(len(s) for s in self.labels)

    def label(self, node: tuple[int, int]) -> str:
        return self.labels[node[0]][node[1]]

    def source_multiset(self) -> tuple[str, ...]:
        return tuple(sorted(self.labels[0]))

    def target_multiset(self) -> tuple[str, ...]:
        return tuple(sorted(self.labels[-1]))

    def nodes(self) -> list[tuple[int, int]]:
        return [(j, i) for j, stage in enumerate(self.labels) for i in range(len(stage))]


def total_cost(g: MultiStageGraph) -> Cost:
    out = ZERO_COST
    for arc in g.arcs:
        out = out + arc.cost
    return out


def _adjacency(g: MultiStageGraph):
    """(out-arcs by tail node, in-arcs by head node), each list sorted."""
    out: dict[tuple[int, int], list[Arc]] = {}
    inn: dict[tuple[int, int], list[Arc]] = {}
    for arc in g.arcs:
        out.setdefault((arc.stage, arc.tail), []).append(arc)
        inn.setdefault((arc.stage + 1, arc.head), []).append(arc)
    return out, inn


def arc_kind(g: MultiStageGraph, arc: Arc) -> str:
    """Current pattern reading of an arc: relabel, split, merge, or identity.

    Derived from the surviving structure: a split that lost its sibling arc
    reads as identity again.
    """
    if g.labels[arc.stage][arc.tail] != g.labels[arc.stage + 1][arc.head]:
        return "relabel"
    out, inn = _adjacency(g)
    if len(out.get((arc.stage, arc.tail), ())) >= 2:
        return "split"
    if len(inn.get((arc.stage + 1, arc.head), ())) >= 2:
        return "merge"
    return "identity"


# ---------------------------------------------------------------------------
# Building a graph from a run
# ---------------------------------------------------------------------------


def _depth_one_labels(tree: FiniteTree, what: str) -> list[str]:
    for a, child in tree.children:
        if not child.is_empty:
            raise NotDepthOne(f"{what} is deeper than one level (summand {a} has children)")
    return [a for a, _ in tree.children]


def build_graph(seq: StepSequence, dom: ActionDomain) -> MultiStageGraph:
    """Stage graph of a first-level run between 1-depth trees.

    The sequence is replayed against dom first, so declared costs must be
    admissible; arc costs are the exact label distances, hence the graph
    total equals the replay's minimal total, not the declared one.
    """
    for i, st in enumerate(seq.steps):
        if st.position != ():
            raise NotFirstLevel(f"step {i + 1} ({st.describe()}) acts at position {st.position}")
    rep = replay(seq, dom)
    stages = [_depth_one_labels(rep.trees[0], "the source")]
    arcs: list[Arc] = []
    for j, (st, after) in enumerate(zip(seq.steps, rep.trees[1:])):
        before = stages[-1]
        i = st.subject
        if st.kind == "dup":
            nxt = before[: i + 1] + [before[i]] + before[i + 1 :]
            for k in range(len(before)):
                if k < i:
                    arcs.append(Arc(j, k, k))
                elif k == i:
                    arcs.append(Arc(j, i, i))
                    arcs.append(Arc(j, i, i + 1))
                else:
                    arcs.append(Arc(j, k, k + 1))
        elif st.kind == "drop":
            p = st.partner
            nxt = before[:i] + before[i + 1 :]
            survivor = p - (1 if p > i else 0)
            for k in range(len(before)):
                if k == i:
                    arcs.append(Arc(j, i, survivor))
                else:
                    arcs.append(Arc(j, k, k - (1 if k > i else 0)))
        else:
            rest = before[:i] + before[i + 1 :]
            p = bisect_right(rest, st.new_action)
            nxt = rest[:p] + [st.new_action] + rest[p:]
            for k in range(len(before)):
                if k == i:
                    arcs.append(Arc(j, i, p, dom.dist(st.old_action, st.new_action)))
                else:
                    pos = k - (1 if k > i else 0)
                    arcs.append(Arc(j, k, pos + (1 if pos >= p else 0)))
        assert nxt == _depth_one_labels(after, f"the tree after step {j + 1}")
        stages.append(nxt)
    return MultiStageGraph([tuple(s) for s in stages], arcs)


# ---------------------------------------------------------------------------
# Connectivity predicates and pruning
# ---------------------------------------------------------------------------


def _reach(g: MultiStageGraph) -> tuple[list[list[bool]], list[list[bool]]]:
    """(reached from stage 0, reaches the last stage) flags per node."""
    fwd = [[False] * len(s) for s in g.labels]
    bwd = [[False] * len(s) for s in g.labels]
    for i in range(len(g.labels[0])):
        fwd[0][i] = True
    for i in range(len(g.labels[-1])):
        bwd[-1][i] = True
    by_stage: list[list[Arc]] = [[] for _ in range(max(1, g.n_stages - 1))]
    for arc in g.arcs:
        by_stage[arc.stage].append(arc)
    for j in range(g.n_stages - 1):
        for arc in by_stage[j]:
            if fwd[j][arc.tail]:
                fwd[j + 1][arc.head] = True
    for j in range(g.n_stages - 2, -1, -1):
        for arc in by_stage[j]:
            if bwd[j + 1][arc.head]:
                bwd[j][arc.tail] = True
    return fwd, bwd


def is_tsc(g: MultiStageGraph) -> bool:
    """Totally sides connecting: every source node reaches the target stage
    and every target node is reached from the source stage."""
    fwd, bwd = _reach(g)
    return all(bwd[0]) and all(fwd[-1])


def is_tbwc(g: MultiStageGraph) -> bool:
    """Totally both ways connected: tsc, and every internal node has at
    least one in-arc and one out-arc."""
    if not is_tsc(g):
        return False
    out, inn = _adjacency(g)
    for j in range(1, g.n_stages - 1):
        for i in range(len(g.labels[j])):
            if (j, i) not in out or (j, i) not in inn:
                return False
    return True


def _rebuild(g: MultiStageGraph, dead: set[tuple[int, int]], dropped: set[Arc]) -> MultiStageGraph:
    """New graph without the dead nodes and dropped arcs, indices compacted."""
    remap: dict[tuple[int, int], int] = {}
    stages: list[tuple[str, ...]] = []
    for j, stage in enumerate(g.labels):
        kept = [i for i in range(len(stage)) if (j, i) not in dead]
        for new_i, old_i in enumerate(kept):
            remap[(j, old_i)] = new_i
        stages.append(tuple(stage[i] for i in kept))
    arcs = [
        Arc(a.stage, remap[(a.stage, a.tail)], remap[(a.stage + 1, a.head)], a.cost)
        for a in g.arcs
        if a not in dropped and (a.stage, a.tail) not in dead and (a.stage + 1, a.head) not in dead
    ]
    return MultiStageGraph(stages, arcs)


def prune_to_tbwc(g: MultiStageGraph) -> MultiStageGraph:
    """Largest both-ways-connected subgraph: repeatedly drop internal nodes
    missing an in-arc or an out-arc. Endpoint stages are never touched and
    the result costs no more than the input."""
    if not is_tsc(g):
        raise NotTsc("pruning expects a graph that connects both sides")
    dead: set[tuple[int, int]] = set()
    while True:
        out: dict[tuple[int, int], int] = {}
        inn: dict[tuple[int, int], int] = {}
        for arc in g.arcs:
            t, h = (arc.stage, arc.tail), (arc.stage + 1, arc.head)
            if t in dead or h in dead:
                continue
            out[t] = out.get(t, 0) + 1
            inn[h] = inn.get(h, 0) + 1
        doomed = [
            (j, i)
            for j in range(1, g.n_stages - 1)
            for i in range(len(g.labels[j]))
            if (j, i) not in dead and (out.get((j, i), 0) == 0 or inn.get((j, i), 0) == 0)
        ]
        if not doomed:
            break
        dead.update(doomed)
    return _rebuild(g, dead, set()) if dead else g


# ---------------------------------------------------------------------------
# Reduction to a disjoint union of diabolos
# ---------------------------------------------------------------------------


def _find_join_sequence(g: MultiStageGraph) -> Optional[list[Arc]]:
    """Earliest maximal chain whose interior nodes carry only the chain arcs
    and whose endpoints each keep another arc on the outside.

    Removing such a chain (single redundant arcs of a diamond included)
    keeps the graph both ways connected.
    """
    out, inn = _adjacency(g)
    last = g.n_stages - 1

    def sole(node: tuple[int, int]) -> bool:
        return (
            0 < node[0] < last
            and len(out.get(node, ())) == 1
            and len(inn.get(node, ())) == 1
        )

    seen: set[Arc] = set()
    best: Optional[list[Arc]] = None
    for seed in g.arcs:
        if seed in seen:
            continue
        chain = [seed]
        start = (seed.stage, seed.tail)
        while sole(start):
            prev = inn[start][0]
            chain.insert(0, prev)
            start = (prev.stage, prev.tail)
        end = (chain[-1].stage + 1, chain[-1].head)
        while sole(end):
            nxt = out[end][0]
            chain.append(nxt)
            end = (nxt.stage + 1, nxt.head)
        seen.update(chain)
        if len(out.get(start, ())) >= 2 and len(inn.get(end, ())) >= 2:
            key = (chain[0].stage, chain[0].tail, chain[0].head)
            if best is None or key < (best[0].stage, best[0].tail, best[0].head):
                best = chain
    return best


def _find_reducible(g: MultiStageGraph) -> Optional[Arc]:
    """Arc whose removal trims a side-reducible node, or None.

    A node fed through several in-arcs but reachable from only one source
    node (or dually, feeding several out-arcs but reaching only one target
    node) keeps both sides connected when one of those arcs goes. The
    costliest arc goes first; ties break on the lowest coordinates.
    """
    out, inn = _adjacency(g)
    anc: dict[tuple[int, int], set[int]] = {}
    des: dict[tuple[int, int], set[int]] = {}
    for i in range(len(g.labels[0])):
        anc[(0, i)] = {i}
    for arc in sorted(g.arcs, key=lambda a: a.stage):
        node = (arc.stage + 1, arc.head)
        anc.setdefault(node, set()).update(anc.get((arc.stage, arc.tail), set()))
    for i in range(len(g.labels[-1])):
        des[(g.n_stages - 1, i)] = {i}
    for arc in sorted(g.arcs, key=lambda a: -a.stage):
        node = (arc.stage, arc.tail)
        des.setdefault(node, set()).update(des.get((arc.stage + 1, arc.head), set()))
    for node in sorted(n for n in g.nodes()):
        ins = inn.get(node, [])
        if len(ins) >= 2 and len(anc.get(node, ())) == 1:
            return max(ins, key=lambda a: (a.cost, -a.tail))
        outs = out.get(node, [])
        if len(outs) >= 2 and len(des.get(node, ())) == 1:
            return max(outs, key=lambda a: (a.cost, -a.head))
    return None


def reduce_to_diabolos(g: MultiStageGraph) -> MultiStageGraph:
    """Remove redundant detours until only disjoint diabolos remain.

    Alternates three moves to a fixpoint, join-sequence removal first, then
    one side-reducible arc, re-pruning after every removal. Each move only
    deletes arcs or nodes, so the endpoints stay intact and the total cost
    never increases.
    """
    if not is_tbwc(g):
        raise NotTbwc("reduction expects a both-ways-connected graph")
    cur = g
    while True:
        chain = _find_join_sequence(cur)
        if chain is not None:
            interior = {
                (arc.stage, arc.tail) for arc in chain[1:]
            }
            cur = prune_to_tbwc(_rebuild(cur, interior, set(chain)))
            continue
        arc = _find_reducible(cur)
        if arc is not None:
            cur = prune_to_tbwc(_rebuild(cur, set(), {arc}))
            continue
        return cur


# ---------------------------------------------------------------------------
# Decomposition into diabolos
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diabolo:
    """One funnel component: everything left of the center merges into it
    along unique forward paths, everything right of it fans out along
    unique backward paths."""

    nodes: tuple[tuple[int, int], ...]
    center: tuple[int, int]
    in_arcs: tuple[Arc, ...]
    out_arcs: tuple[Arc, ...]


def _components(g: MultiStageGraph) -> list[list[tuple[int, int]]]:
    parent: dict[tuple[int, int], tuple[int, int]] = {n: n for n in g.nodes()}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for arc in g.arcs:
        a, b = find((arc.stage, arc.tail)), find((arc.stage + 1, arc.head))
        if a != b:
            parent[b] = a
    groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for n in g.nodes():
        groups.setdefault(find(n), []).append(n)
    return sorted((sorted(v) for v in groups.values()), key=lambda c: c[0])


def decompose(g: MultiStageGraph) -> tuple[Diabolo, ...]:
    """Split a reduced graph into its diabolos.

    Each connected component must expose a center: a stage where the
    component narrows to one node, with unique continuations before it and
    unique origins after it. Components that do not are reported whole.
    """
    out, inn = _adjacency(g)
    res = []
    for comp in _components(g):
        members = set(comp)
        by_stage: dict[int, list[tuple[int, int]]] = {}
        for n in comp:
            by_stage.setdefault(n[0], []).append(n)
        center = None
        for j in sorted(by_stage):
            if len(by_stage[j]) != 1:
                continue
            left_ok = all(
                len(out.get(n, ())) == 1 for jj, ns in by_stage.items() if jj < j for n in ns
            )
            right_ok = all(
                len(inn.get(n, ())) == 1 for jj, ns in by_stage.items() if jj > j for n in ns
            )
            if left_ok and right_ok:
                center = by_stage[j][0]
                break
        if center is None:
            raise NotDiabolo(f"component containing node {comp[0]} has no center")
        comp_arcs = [a for a in g.arcs if (a.stage, a.tail) in members]
        res.append(
            Diabolo(
                tuple(comp),
                center,
                tuple(a for a in comp_arcs if a.stage < center[0]),
                tuple(a for a in comp_arcs if a.stage >= center[0]),
            )
        )
    return tuple(res)


# ---------------------------------------------------------------------------
# Reading a short run back out of a graph
# ---------------------------------------------------------------------------


def _contract(
    g: MultiStageGraph, nodes: Iterable[tuple[int, int]]
) -> tuple[list[tuple[int, int]], list[tuple[tuple[int, int], tuple[int, int]]]]:
    """Keep endpoints, merge points, and branch points; contract the unary
    chains between them into single edges."""
    out, inn = _adjacency(g)
    last = g.n_stages - 1
    member = set(nodes)

    def kept(n: tuple[int, int]) -> bool:
        return (
            n[0] == 0
            or n[0] == last
            or len(out.get(n, ())) >= 2
            or len(inn.get(n, ())) >= 2
        )

    kept_nodes = sorted(n for n in member if kept(n))
    edges = []
    for u in kept_nodes:
        for arc in out.get(u, ()):
            v = (arc.stage + 1, arc.head)
            while not kept(v):
                follow = out[v][0]
                v = (follow.stage + 1, follow.head)
            edges.append((u, v))
    return kept_nodes, edges


def _emit(
    g: MultiStageGraph,
    kept: list[tuple[int, int]],
    edges: list[tuple[tuple[int, int], tuple[int, int]]],
    multiset: list[str],
    steps: list[Step],
    dom: ActionDomain,
) -> None:
    """Serialize a contracted funnel over the shared working multiset.

    Per node, in stage order: relabel each incoming summand to the node's
    label, merge duplicates down to one, then duplicate once per extra
    outgoing edge. Equal summands are interchangeable, so indices into the
    sorted multiset stay honest even across components.
    """
    ins: dict[tuple[int, int], list[tuple[int, int]]] = {}
    outs: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for u, v in sorted(edges):
        ins.setdefault(v, []).append(u)
        outs.setdefault(u, []).append(v)
    for v in kept:
        lv = g.label(v)
        sources = ins.get(v, [])
        for u in sources:
            lu = g.label(u)
            if lu == lv:
                continue
            d = dom.dist(lu, lv)
            if not d.is_finite:
                raise StageGraphError(
                    f"no finite distance between {lu} and {lv}; the graph labels do not fit the domain"
                )
            idx = bisect_left(multiset, lu)
            steps.append(Step("relabel", (), idx, old_action=lu, new_action=lv, cost=d))
            multiset.pop(idx)
            insort(multiset, lv)
        for _ in range(len(sources) - 1):
            idx = bisect_left(multiset, lv)
            steps.append(Step("drop", (), idx, partner=idx + 1))
            multiset.pop(idx)
        for _ in range(len(outs.get(v, ())) - 1):
            idx = bisect_left(multiset, lv)
            steps.append(Step("dup", (), idx))
            insort(multiset, lv)


def extract_sequence(g: MultiStageGraph, alpha: Alpha, dom: ActionDomain) -> StepSequence:
    """Short run realizing a reduced graph.

    Walks each diabolo from its source leaves to its target leaves: merge
    chains get one relabel per contracted edge at most, so the run has at
    most 3(|A|+|B|-2)+1 steps and costs no more than the graph.
    """
    diabolos = decompose(g)
    source = FiniteTree((a, EMPTY_TREE) for a in g.labels[0])
    multiset = sorted(g.labels[0])
    steps: list[Step] = []
    for diab in diabolos:
        kept, edges = _contract(g, diab.nodes)
        _emit(g, kept, edges, multiset, steps, dom)
    assert multiset == sorted(g.labels[-1])
    return StepSequence(alpha, source, tuple(steps))


# ---------------------------------------------------------------------------
# Path compaction (the direct route, no diabolo reduction)
# ---------------------------------------------------------------------------


def compact_by_paths(g: MultiStageGraph, dom: ActionDomain) -> MultiStageGraph:
    """Compact a sides-connecting graph by picking one witness path per
    endpoint and contracting it to a single arc.

    Later paths stop at the first node already claimed, splitting the
    claimed arc there; unreached target nodes attach by the same rule
    walked backwards. The compacted run touches each endpoint once, so it
    stays within the 3(|A|+|B|-2)+1 step bound with cost no more than the
    original (label distances replace whole path costs).
    """
    if not is_tsc(g):
        raise NotTsc("path compaction expects a graph that connects both sides")
    if g.n_stages == 1:
        return g
    out, inn = _adjacency(g)
    fwd, bwd = _reach(g)
    last = g.n_stages - 1

    paths: list[list[tuple[int, int]]] = []
    claimed: dict[tuple[int, int], tuple[int, int]] = {}

    def claim(idx: int) -> None:
        for pos, n in enumerate(paths[idx]):
            claimed[n] = (idx, pos)

    def cross(path: list[tuple[int, int]]) -> None:
        """Record a walk that ended on an already-claimed node, splitting
        the claimed path there when the hit lands mid-arc."""
        c = path[-1]
        idx, pos = claimed[c]
        old = paths[idx]
        if 0 < pos < len(old) - 1:
            paths[idx] = old[: pos + 1]
            paths.append(old[pos:])
            claim(idx)
            claim(len(paths) - 1)
        if len(path) >= 2:
            paths.append(path)
            claim(len(paths) - 1)

    for i in range(len(g.labels[0])):
        a = (0, i)
        if a in claimed:
            continue
        path = [a]
        while path[-1][0] != last:
            node = path[-1]
            arc = next(x for x in out[node] if bwd[x.stage + 1][x.head])
            path.append((arc.stage + 1, arc.head))
            if path[-1] in claimed:
                break
        if path[-1] in claimed:
            cross(path)
        else:
            paths.append(path)
            claim(len(paths) - 1)
    for i in range(len(g.labels[-1])):
        b = (last, i)
        if b in claimed:
            continue
        path = [b]
        while path[0] not in claimed:
            node = path[0]
            arc = next(x for x in inn[node] if fwd[x.stage][x.tail])
            path.insert(0, (arc.stage, arc.tail))
        cross(list(reversed(path)))

    ends = sorted({p[0] for p in paths} | {p[-1] for p in paths})
    edges = sorted((p[0], p[-1]) for p in paths)
    multiset = sorted(g.labels[0])
    steps: list[Step] = []
    _emit(g, ends, edges, multiset, steps, dom)
    assert multiset == sorted(g.labels[-1])
    source = FiniteTree((a, EMPTY_TREE) for a in g.labels[0])
    return build_graph(StepSequence(Alpha(1), source, tuple(steps)), dom)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def to_dot(g: MultiStageGraph) -> str:
    """Deterministic DOT text: stages as ranked columns, arcs labeled with
    their current kind and cost; diabolo centers render as double circles
    when the graph decomposes."""
    try:
        centers = {d.center for d in decompose(g)}
    except StageGraphError:
        centers = set()
    lines = ["digraph stages {", "  rankdir=LR;", '  node [shape=circle];']
    for j, stage in enumerate(g.labels):
        if not stage:
            continue
        lines.append(f"  {{ rank=same;  /* stage {j} */")
        for i, lbl in enumerate(stage):
            shape = ' shape=doublecircle' if (j, i) in centers else ""
            lines.append(f'    n{j}_{i} [label="{lbl}"{shape}];')
        lines.append("  }")
    for arc in g.arcs:
        lines.append(
            f'  n{arc.stage}_{arc.tail} -> n{arc.stage + 1}_{arc.head} '
            f'[label="{arc_kind(g, arc)} {arc.cost}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
