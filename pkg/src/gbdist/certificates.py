"""Coinductive distance certificates over regular trees.

A certificate is a family of (left, right, bound) triples, each justified by a
finite witness of first-level moves: duplicate / collapse (free), relabel
(costs at least the action distance), and the coinductive move that swaps a
whole first-level subtree for the other side of some triple of the family at
a cost of at least alpha times that triple's bound. A witness may cite its own
triple; that self-reference is what lets a two-line certificate bound the
distance between two infinite trees.

Verification replays witnesses over multisets of (action, class) pairs, where
classes come from a joint TreeFamily over every tree the certificate mentions.
Class ranks follow the same graded projection order FiniteTree uses for
summands, so a subject index means the same summand whether a witness is
replayed here, unfolded into an operational sequence, or projected.

The fold / unfold pair translates between operational sequences on finite
trees and certificates: unfold expands coinductive moves recursively (costs
scale by alpha, positions deepen), fold factorizes a sequence into first-level
moves plus per-summand deeper blocks (costs divide by alpha, positions lose
their head coordinate) and emits one triple per block.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence

from .costs import Alpha, Cost, ZERO_COST
from .domains import ActionDomain
from .steps import (
    BadPosition,
    CostTooLow,
    EndpointMismatch,
    IdemMismatch,
    Replay,
    Step,
    StepError,
    StepSequence,
    UnknownAction,
    apply_step,
    lift_at_summand,
    normalize_steps,
    project_sequence,
    replay,
)
from .trees import (
    FiniteTree,
    InfiniteTreeError,
    RegularTree,
    TreeFamily,
    format_tree,
    tree_equal,
)

DUP, DROP, RELABEL, CO = "dup", "drop", "relabel", "co"
_CO_KINDS = (DUP, DROP, RELABEL, CO)


class CertificateError(Exception):
    """Base for certificate-level failures."""


class BudgetExceeded(CertificateError):
    """A witness spends more than its triple's bound allows."""


class SubtreeMismatch(CertificateError):
    """A coinductive move cites a triple whose left side is not the subject subtree."""


class CandidateMismatch(CertificateError):
    """A supplied limit candidate disagrees with an observed projection."""


class NotTelescopic(CertificateError):
    """A family violates the projection-coherence requirement."""


# ---------------------------------------------------------------------------
# Certificate data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistanceTriple:
    """A claimed bound: the denoted trees are within `bound` of each other."""

    left: RegularTree
    right: RegularTree
    bound: Cost

    def __post_init__(self):
        if not self.bound.is_finite:
            raise ValueError("triple bound must be finite")


@dataclass(frozen=True)
class CoStep:
    """One first-level move of a certificate witness.

    Kinds: dup i | drop i j | relabel i a b cost | co i cite k cost. Subject
    indices address the current summand multiset in canonical order (action,
    then graded subtree order); equal summands are interchangeable.
    """

    kind: str
    subject: int
    partner: Optional[int] = None
    old_action: Optional[str] = None
    new_action: Optional[str] = None
    cite: Optional[int] = None
    cost: Cost = ZERO_COST

    def __post_init__(self):
        if self.kind not in _CO_KINDS:
            raise ValueError(f"unknown CoStep kind {self.kind!r}")
        if self.subject < 0:
            raise ValueError("subject index must be >= 0")
        if self.kind in (DUP, DROP) and self.cost != ZERO_COST:
            raise ValueError(f"{self.kind} carries no cost")
        if self.kind == DROP and self.partner is None:
            raise ValueError("drop needs a partner index")
        if self.kind == RELABEL and (self.old_action is None or self.new_action is None):
            raise ValueError("relabel needs old and new actions")
        if self.kind == CO and self.cite is None:
            raise ValueError("co needs a cited triple index")

    def describe(self) -> str:
        if self.kind == DUP:
            return f"dup {self.subject}"
        if self.kind == DROP:
            return f"drop {self.subject} {self.partner}"
        if self.kind == RELABEL:
            return f"relabel {self.subject} {self.old_action} {self.new_action} {self.cost}"
        return f"co {self.subject} cite {self.cite} {self.cost}"


@dataclass(frozen=True)
class CcdCertificate:
    """A family of distance triples with their replayable witnesses."""

    alpha: Alpha
    domain: ActionDomain
    triples: tuple[DistanceTriple, ...]
    witnesses: tuple[tuple[CoStep, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "triples", tuple(self.triples))
        object.__setattr__(self, "witnesses", tuple(tuple(w) for w in self.witnesses))
        if len(self.triples) != len(self.witnesses):
            raise ValueError("one witness per triple required")

    def __len__(self) -> int:
        return len(self.triples)

    @cached_property
    def family(self) -> TreeFamily:
        """Joint classification of every tree the certificate mentions.

        Family tree 2i is triples[i].left, tree 2i+1 is triples[i].right.
        """
        trees: list[RegularTree] = []
        for tr in self.triples:
            trees.append(tr.left)
            trees.append(tr.right)
        return TreeFamily(trees)


@dataclass(frozen=True)
class TripleVerdict:
    index: int
    ok: bool
    total: Optional[Cost]
    error: Optional[Exception] = None

    def __str__(self) -> str:
        if self.ok:
            return f"triple {self.index}: ok, total {self.total}"
        return f"triple {self.index}: FAIL, {self.error}"


@dataclass(frozen=True)
class CcdReport:
    verdicts: tuple[TripleVerdict, ...]

    @property
    def ok(self) -> bool:
        return all(v.ok for v in self.verdicts)

    def __str__(self) -> str:
        return "\n".join(str(v) for v in self.verdicts)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def _root_pairs(fam: TreeFamily, tree_index: int) -> list[tuple[str, int]]:
    """Sorted (action, class) pairs of the root children of family tree i."""
    t = fam.trees[tree_index]
    return sorted((a, fam.state_class(tree_index, s)) for a, s in t.succ[t.root])


def _replay_costeps(
    cert: CcdCertificate,
    fam: TreeFamily,
    start: list[tuple[str, int]],
    steps: Sequence[CoStep],
) -> tuple[list[tuple[str, int]], Cost]:
    """Replay a witness over sorted (action, class) pairs.

    Returns the end state and the declared total; raises the same error kinds
    the step engine uses, plus SubtreeMismatch for bad citations.
    """
    cur = sorted(start)
    total = ZERO_COST
    dom = cert.domain
    alpha = cert.alpha
    for n, cs in enumerate(steps):
        where = f"witness step {n + 1} ({cs.describe()})"
        if not (0 <= cs.subject < len(cur)):
            raise BadPosition(f"{where}: subject {cs.subject} out of range 0..{len(cur) - 1}")
        if cs.kind == DUP:
            cur.append(cur[cs.subject])
        elif cs.kind == DROP:
            j = cs.partner
            if not (0 <= j < len(cur)):
                raise BadPosition(f"{where}: partner {j} out of range")
            if j == cs.subject:
                raise IdemMismatch(f"{where}: subject and partner coincide")
            if cur[cs.subject] != cur[j]:
                raise IdemMismatch(f"{where}: summands {cs.subject} and {j} are not equal trees")
            del cur[max(cs.subject, j)]
        elif cs.kind == RELABEL:
            a, cls = cur[cs.subject]
            if a != cs.old_action:
                raise BadPosition(f"{where}: expected action {cs.old_action!r}, found {a!r}")
            for act in (cs.old_action, cs.new_action):
                if not dom.has(act):
                    raise UnknownAction(f"{where}: action {act!r} not in domain")
            need = dom.dist(cs.old_action, cs.new_action)
            if cs.cost < need:
                raise CostTooLow(f"{where}: declared {cs.cost} below d = {need}")
            cur[cs.subject] = (cs.new_action, cls)
        else:  # CO
            if not (0 <= cs.cite < len(cert.triples)):
                raise BadPosition(f"{where}: cited triple {cs.cite} does not exist")
            a, cls = cur[cs.subject]
            if cls != fam.root_class(2 * cs.cite):
                raise SubtreeMismatch(
                    f"{where}: subject subtree is not the cited triple's left side"
                )
            need = cert.triples[cs.cite].bound.scale(alpha.value)
            if cs.cost < need:
                raise CostTooLow(f"{where}: declared {cs.cost} below alpha*bound = {need}")
            cur[cs.subject] = (a, fam.root_class(2 * cs.cite + 1))
        total = total + cs.cost
        cur.sort()
    return cur, total


def verify_ccd(cert: CcdCertificate) -> CcdReport:
    """Check every triple's witness; never raises, reports per triple."""
    fam = cert.family
    verdicts = []
    for i, (tr, wit) in enumerate(zip(cert.triples, cert.witnesses)):
        try:
            end, total = _replay_costeps(cert, fam, _root_pairs(fam, 2 * i), wit)
            want = _root_pairs(fam, 2 * i + 1)
            if end != want:
                raise EndpointMismatch(f"witness ends at {end}, right side has {want}")
            if total > tr.bound:
                raise BudgetExceeded(f"witness spends {total}, bound is {tr.bound}")
            verdicts.append(TripleVerdict(i, True, total))
        except (StepError, CertificateError) as exc:
            verdicts.append(TripleVerdict(i, False, None, exc))
    return CcdReport(tuple(verdicts))


# ---------------------------------------------------------------------------
# Unfold: certificate -> operational sequence on finite trees
# ---------------------------------------------------------------------------


def unfold_certificate(
    cert: CcdCertificate,
    triple_index: int = 0,
    finite_only: bool = True,
) -> StepSequence:
    """Expand a triple's witness into a plain step sequence on finite trees.

    Coinductive moves are replaced by the cited triple's own unfolding run
    one level deeper (positions gain a head coordinate, costs scale by
    alpha), so the result proves the same bound operationally: it validates
    and its total stays within the triple's bound.

    finite_only=True rejects any certificate mentioning an infinite tree
    upfront; with False only triples actually reached must be finite. A cycle
    of citations never bottoms out and raises InfiniteTreeError either way.
    """
    if not (0 <= triple_index < len(cert.triples)):
        raise BadPosition(f"triple {triple_index} does not exist")
    if finite_only:
        for i, tr in enumerate(cert.triples):
            for side, t in (("left", tr.left), ("right", tr.right)):
                if not t.is_finite():
                    raise InfiniteTreeError(f"triple {i} {side} side denotes an infinite tree")

    alpha = cert.alpha
    done: dict[int, StepSequence] = {}
    building: set[int] = set()

    def go(i: int) -> StepSequence:
        got = done.get(i)
        if got is not None:
            return got
        if i in building:
            raise InfiniteTreeError(
                f"triple {i} cites itself through a cycle; it has no finite unfolding"
            )
        building.add(i)
        tr = cert.triples[i]
        src = tr.left.to_finite()
        tgt = tr.right.to_finite()
        cur = src
        out: list[Step] = []
        spent = ZERO_COST
        for n, cs in enumerate(cert.witnesses[i]):
            where = f"triple {i} witness step {n + 1} ({cs.describe()})"
            spent = spent + cs.cost
            if cs.kind == DUP:
                st = Step(DUP, (), cs.subject)
            elif cs.kind == DROP:
                st = Step(DROP, (), cs.subject, partner=cs.partner)
            elif cs.kind == RELABEL:
                st = Step(
                    RELABEL, (), cs.subject,
                    old_action=cs.old_action, new_action=cs.new_action, cost=cs.cost,
                )
            else:
                if not (0 <= cs.cite < len(cert.triples)):
                    raise BadPosition(f"{where}: cited triple {cs.cite} does not exist")
                need = cert.triples[cs.cite].bound.scale(alpha.value)
                if cs.cost < need:
                    raise CostTooLow(f"{where}: declared {cs.cost} below alpha*bound = {need}")
                if not (0 <= cs.subject < len(cur.children)):
                    raise BadPosition(f"{where}: subject {cs.subject} out of range")
                inner = go(cs.cite)
                sub = cur.children[cs.subject][1]
                if sub != inner.source:
                    raise SubtreeMismatch(
                        f"{where}: subject subtree {format_tree(sub)} is not the cited "
                        f"left side {format_tree(inner.source)}"
                    )
                lifted, cur = lift_at_summand(cur, cs.subject, inner, alpha)
                out.extend(lifted)
                continue
            cur = apply_step(cur, st, alpha, cert.domain)
            out.append(st)
        if cur != tgt:
            raise EndpointMismatch(
                f"triple {i} witness ends at {format_tree(cur)}, not {format_tree(tgt)}"
            )
        if spent > tr.bound:
            raise BudgetExceeded(f"triple {i} witness spends {spent}, bound is {tr.bound}")
        seq = StepSequence(alpha, src, tuple(out))
        building.discard(i)
        done[i] = seq
        return seq

    return go(triple_index)


# ---------------------------------------------------------------------------
# Fold: operational sequence -> certificate
# ---------------------------------------------------------------------------


@dataclass
class _Block:
    """Deeper steps of one run regrouped under one first-level summand."""

    entry_index: int
    action: str
    sub_before: FiniteTree
    sub_after: FiniteTree
    inner: StepSequence
    declared: Cost  # original (outer) cost of the block's steps


def _factorize(seq: StepSequence, rep: Replay) -> list[tuple]:
    """Split a validated sequence into first-level steps and deep runs.

    Items are ("flat", i, step) for a first-level step at sequence position i
    and ("run", i, j, blocks) for a maximal stretch of deeper steps occupying
    positions i..j-1. A run's steps are regrouped by the first-level summand
    they live under (tracked across canonical reordering) into blocks ordered
    by entry index; block inner sequences act on the summand's own subtree,
    with positions stripped of their head coordinate and costs divided by
    alpha.
    """
    alpha = seq.alpha
    inv = Fraction(1) / alpha.value
    items: list[tuple] = []
    i = 0
    steps = seq.steps
    while i < len(steps):
        if steps[i].level == 1:
            items.append(("flat", i, steps[i]))
            i += 1
            continue
        entry_tree = rep.trees[i]
        tokens = list(range(len(entry_tree.children)))  # child position -> entry index
        per_token: dict[int, list[Step]] = {}
        per_cost: dict[int, Cost] = {}
        cur_sub: dict[int, FiniteTree] = {}
        j = i
        while j < len(steps) and steps[j].level > 1:
            dst = steps[j]
            token = tokens[dst.position[0]]
            per_token.setdefault(token, []).append(
                replace(dst, position=dst.position[1:], cost=dst.cost.scale(inv))
            )
            per_cost[token] = per_cost.get(token, ZERO_COST) + dst.cost
            new_idx = rep.applied[j].path_after[0]
            tokens.insert(new_idx, tokens.pop(dst.position[0]))
            cur_sub[token] = rep.trees[j + 1].children[new_idx][1]
            j += 1
        blocks = []
        for token in sorted(per_token):
            action, sub_before = entry_tree.children[token]
            blocks.append(
                _Block(
                    entry_index=token,
                    action=action,
                    sub_before=sub_before,
                    sub_after=cur_sub[token],
                    inner=StepSequence(alpha, sub_before, tuple(per_token[token])),
                    declared=per_cost[token],
                )
            )
        items.append(("run", i, j, blocks))
        i = j
    return items


def _find_pair(pairs: list[tuple[str, FiniteTree]], action: str, sub: FiniteTree) -> int:
    for k, p in enumerate(pairs):
        if p == (action, sub):
            return k
    raise AssertionError("summand value disappeared during witness emission")


def _canon_sort(pairs: list[tuple[str, FiniteTree]]) -> None:
    pairs.sort(key=lambda p: (p[0], p[1].order_key))


def fold_sequence(seq: StepSequence, dom: ActionDomain) -> CcdCertificate:
    """Factorize a finite-tree sequence into a certificate.

    The main triple sits at index 0 and carries the sequence endpoints with
    bound equal to the declared total; every deeper block becomes its own
    triple (recursively), cited by a coinductive move whose cost is exactly
    the block's original cost, i.e. alpha times the inner bound. Folding then
    unfolding the main triple reproduces the sequence up to the canonical
    regrouping of deeper steps.
    """
    triples: list[Optional[DistanceTriple]] = []
    witnesses: list[Optional[tuple[CoStep, ...]]] = []

    def build(s: StepSequence) -> int:
        slot = len(triples)
        triples.append(None)
        witnesses.append(None)
        rep = replay(s, dom)
        wit: list[CoStep] = []
        for item in _factorize(s, rep):
            if item[0] == "flat":
                _, _, st = item
                if st.kind == DUP:
                    wit.append(CoStep(DUP, st.subject))
                elif st.kind == DROP:
                    wit.append(CoStep(DROP, st.subject, partner=st.partner))
                else:
                    wit.append(
                        CoStep(
                            RELABEL, st.subject,
                            old_action=st.old_action, new_action=st.new_action,
                            cost=st.cost,
                        )
                    )
            else:
                _, start, end, blocks = item
                cur = list(rep.trees[start].children)
                for blk in blocks:
                    cite = build(blk.inner)
                    idx = _find_pair(cur, blk.action, blk.sub_before)
                    wit.append(CoStep(CO, idx, cite=cite, cost=blk.declared))
                    cur[idx] = (blk.action, blk.sub_after)
                    _canon_sort(cur)
        total = sum((w.cost for w in wit), ZERO_COST)
        triples[slot] = DistanceTriple(
            RegularTree.from_finite(s.source),
            RegularTree.from_finite(rep.target),
            total,
        )
        witnesses[slot] = tuple(wit)
        return slot

    build(seq)
    return CcdCertificate(seq.alpha, dom, tuple(triples), tuple(witnesses))


# ---------------------------------------------------------------------------
# Projection and composition of certificates
# ---------------------------------------------------------------------------


def project_ccd(cert: CcdCertificate, n: int) -> CcdCertificate:
    """Project every triple to levels 0..n.

    The projected triple (i, m) sits at index i*(n+1)+m and relates the m-th
    projections of triple i's trees at the unchanged bound. Witnesses carry
    over verbatim except that citations drop one level (a cited subtree sits
    one level deeper than its parent); level-0 witnesses are empty. Summand
    indices need no adjustment because the canonical order is stable under
    projection.
    """
    if n < 0:
        raise ValueError("projection level must be >= 0")
    triples: list[DistanceTriple] = []
    witnesses: list[tuple[CoStep, ...]] = []
    for tr, wit in zip(cert.triples, cert.witnesses):
        for m in range(n + 1):
            triples.append(DistanceTriple(tr.left.project(m), tr.right.project(m), tr.bound))
            if m == 0:
                witnesses.append(())
            else:
                witnesses.append(
                    tuple(
                        replace(cs, cite=cs.cite * (n + 1) + (m - 1)) if cs.kind == CO else cs
                        for cs in wit
                    )
                )
    return CcdCertificate(cert.alpha, cert.domain, tuple(triples), tuple(witnesses))


def compose_certificates(
    c1: CcdCertificate, c2: CcdCertificate, i1: int = 0, i2: int = 0
) -> CcdCertificate:
    """Chain triple i1 of c1 with triple i2 of c2 into one certificate.

    Requires the right side of the first triple to denote the same tree as
    the left side of the second; the new main triple (last index) bounds
    their two-hop distance by the sum of the bounds, witnessed by the two
    witnesses in succession. Both inputs keep verifying inside the result.
    """
    if c1.alpha != c2.alpha:
        raise ValueError("certificates use different alphas")
    t1, t2 = c1.triples[i1], c2.triples[i2]
    if not tree_equal(t1.right, t2.left):
        raise EndpointMismatch(
            "right side of the first triple differs from left side of the second"
        )
    dom = ActionDomain.build(
        sorted(set(c1.domain.actions) | set(c2.domain.actions)),
        sorted(set(c1.domain.entries()) | set(c2.domain.entries())),
    )
    off = len(c1.triples)

    def shift(w: tuple[CoStep, ...]) -> tuple[CoStep, ...]:
        return tuple(replace(cs, cite=cs.cite + off) if cs.kind == CO else cs for cs in w)

    triples = list(c1.triples) + list(c2.triples)
    witnesses = list(c1.witnesses) + [shift(w) for w in c2.witnesses]
    triples.append(DistanceTriple(t1.left, t2.right, t1.bound + t2.bound))
    witnesses.append(tuple(c1.witnesses[i1]) + shift(c2.witnesses[i2]))
    return CcdCertificate(c1.alpha, dom, tuple(triples), tuple(witnesses))


# ---------------------------------------------------------------------------
# Telescopic families and limit assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TelescopicFamily:
    """Per-level sequences S^1..S^N between projections of two regular trees.

    sequences[n-1] is the stage-n sequence and must run from the n-th
    projection of `source` to the n-th projection of `target`; coherence asks
    that projecting any stage to a lower level replays the lower stage
    exactly (same steps, same costs).
    """

    alpha: Alpha
    domain: ActionDomain
    sequences: tuple[StepSequence, ...]
    source: RegularTree
    target: RegularTree

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(self.sequences))
        if not self.sequences:
            raise ValueError("a telescopic family needs at least one stage")
        for s in self.sequences:
            if s.alpha != self.alpha:
                raise ValueError("stage sequence uses a different alpha")

    @property
    def horizon(self) -> int:
        return len(self.sequences)

    def stage(self, n: int) -> StepSequence:
        if not (1 <= n <= len(self.sequences)):
            raise IndexError(f"no stage {n}; family has stages 1..{len(self.sequences)}")
        return self.sequences[n - 1]


@dataclass(frozen=True)
class TelescopicReport:
    ok: bool
    violation: Optional[tuple[int, int]] = None
    message: str = ""

    def __str__(self) -> str:
        return "telescopic: ok" if self.ok else f"telescopic: FAIL, {self.message}"


def check_telescopic(fam: TelescopicFamily) -> TelescopicReport:
    """Validate every stage between the claimed endpoint projections, then
    check pairwise projection coherence.

    Reports the first violation found: (n, n) when stage n itself is broken,
    (m, n) with m < n when projecting stage n to level m disagrees with
    stage m.
    """
    for n in range(1, fam.horizon + 1):
        s = fam.stage(n)
        want_src = fam.source.unfold_to_depth(n)
        if s.source != want_src:
            return TelescopicReport(
                False, (n, n),
                f"stage {n} starts at {format_tree(s.source)}, the source projects "
                f"to {format_tree(want_src)}",
            )
        try:
            rep = replay(s, fam.domain)
        except StepError as exc:
            return TelescopicReport(False, (n, n), f"stage {n} does not replay: {exc}")
        want_tgt = fam.target.unfold_to_depth(n)
        if rep.target != want_tgt:
            return TelescopicReport(
                False, (n, n),
                f"stage {n} ends at {format_tree(rep.target)}, the target projects "
                f"to {format_tree(want_tgt)}",
            )
    for n in range(1, fam.horizon + 1):
        for m in range(1, n):
            if project_sequence(fam.stage(n), m) != normalize_steps(fam.stage(m)):
                return TelescopicReport(
                    False, (m, n),
                    f"projecting stage {n} to level {m} disagrees with stage {m}",
                )
    return TelescopicReport(True)


def assemble_limit(
    fam: TelescopicFamily,
    candidates: Sequence[RegularTree],
    claims: Sequence[DistanceTriple] = (),
) -> CcdCertificate:
    """Overlap a telescopic family into a certificate about its limits.

    Only the top stage is factorized (lower stages are its projections, so
    they contribute nothing new). Each deeper block's endpoints are matched
    against `candidates` by projection equality at the block's level; the
    matched trees become a recursively assembled triple, memoized per pair of
    tree classes so that repeating blocks collapse and self-citation closes
    loops.

    `claims` fix the bounds of chosen pairs upfront. A loop block that cites
    its own in-progress triple needs a claim to carry a sound cost; without
    one the citation falls back to the cost observed within the horizon,
    which is too small for a genuine loop, and verify_ccd rejects the result.
    A claim below an observed stage cost is refused outright.

    Raises NotTelescopic / CandidateMismatch / BudgetExceeded on structurally
    bad input; semantic shortfalls are left for verify_ccd on the output.
    """
    chk = check_telescopic(fam)
    if not chk.ok:
        raise NotTelescopic(chk.message)

    pool: list[RegularTree] = list(candidates)
    for cl in claims:
        pool.append(cl.left)
        pool.append(cl.right)
    pool.append(fam.source)
    pool.append(fam.target)
    wfam = TreeFamily(pool)

    claim_bound: dict[tuple[int, int], Cost] = {}
    base = len(candidates)
    for k, cl in enumerate(claims):
        key = (wfam.root_class(base + 2 * k), wfam.root_class(base + 2 * k + 1))
        claim_bound.setdefault(key, cl.bound)

    def match(finite: FiniteTree, depth: int, what: str) -> int:
        for idx in range(len(pool)):
            if pool[idx].unfold_to_depth(depth) == finite:
                return idx
        raise CandidateMismatch(
            f"no candidate projects to {format_tree(finite)} at level {depth} ({what})"
        )

    triples: list[Optional[DistanceTriple]] = []
    witnesses: list[Optional[tuple[CoStep, ...]]] = []
    slot_of: dict[tuple[int, int], int] = {}
    bound_of: dict[tuple[int, int], Optional[Cost]] = {}
    alpha = fam.alpha

    def build(s: StepSequence, left_idx: int, right_idx: int, h: int) -> int:
        key = (wfam.root_class(left_idx), wfam.root_class(right_idx))
        got = slot_of.get(key)
        if got is not None:
            return got
        slot = len(triples)
        triples.append(None)
        witnesses.append(None)
        slot_of[key] = slot
        bound_of[key] = claim_bound.get(key)

        if s.source != pool[left_idx].unfold_to_depth(h):
            raise CandidateMismatch(
                f"matched left side does not project to {format_tree(s.source)} at level {h}"
            )
        try:
            rep = replay(s, fam.domain)
        except StepError as exc:
            raise NotTelescopic(f"level-{h} block does not replay: {exc}") from None
        if rep.target != pool[right_idx].unfold_to_depth(h):
            raise CandidateMismatch(
                f"matched right side does not project to {format_tree(rep.target)} at level {h}"
            )

        wit: list[CoStep] = []
        total = ZERO_COST
        for item in _factorize(s, rep):
            if item[0] == "flat":
                _, _, st = item
                if st.kind == DUP:
                    wit.append(CoStep(DUP, st.subject))
                elif st.kind == DROP:
                    wit.append(CoStep(DROP, st.subject, partner=st.partner))
                else:
                    wit.append(
                        CoStep(
                            RELABEL, st.subject,
                            old_action=st.old_action, new_action=st.new_action,
                            cost=st.cost,
                        )
                    )
                total = total + st.cost
            else:
                _, start, end, blocks = item
                cur = list(rep.trees[start].children)
                for blk in blocks:
                    lb = match(blk.sub_before, h - 1, "block left endpoint")
                    rb = match(blk.sub_after, h - 1, "block right endpoint")
                    bkey = (wfam.root_class(lb), wfam.root_class(rb))
                    observed = blk.inner.total
                    claimed = claim_bound.get(bkey)
                    if claimed is not None and claimed < observed:
                        raise BudgetExceeded(
                            f"claimed bound {claimed} is below the stage cost {observed} "
                            f"observed for a level-{h - 1} block"
                        )
                    cite = build(blk.inner, lb, rb, h - 1)
                    stored = bound_of.get(bkey)
                    cite_bound = stored if stored is not None else observed
                    cost = cite_bound.scale(alpha.value)
                    idx = _find_pair(cur, blk.action, blk.sub_before)
                    wit.append(CoStep(CO, idx, cite=cite, cost=cost))
                    cur[idx] = (blk.action, blk.sub_after)
                    _canon_sort(cur)
                    total = total + cost
        bound = bound_of[key]
        if bound is None:
            bound = total
        elif bound < total:
            raise BudgetExceeded(
                f"claimed bound {bound} is below the assembled witness total {total}"
            )
        triples[slot] = DistanceTriple(pool[left_idx], pool[right_idx], bound)
        witnesses[slot] = tuple(wit)
        bound_of[key] = bound
        return slot

    build(fam.stage(fam.horizon), len(pool) - 2, len(pool) - 1, fam.horizon)
    return CcdCertificate(alpha, fam.domain, tuple(triples), tuple(witnesses))
