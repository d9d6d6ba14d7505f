"""Action alphabets equipped with a (possibly partial) metric.

Unspecified pairs are at infinite distance, so disconnected label groups are
legal; what is not legal is an infinite entry undercut by a finite path, which
validate_domain reports as a triangle violation.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .costs import Cost, INFINITE_COST, ZERO_COST

ACTION_RE = re.compile(r"^[A-Za-z0-9_]+$")


class DomainError(ValueError):
    """Raised when an action domain fails validation."""


@dataclass(frozen=True)
class MetricViolation:
    kind: str  # "negative" | "self" | "symmetry" | "distinct" | "triangle" | "name" | "unknown-action"
    actions: tuple[str, ...]
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}({', '.join(self.actions)}): {self.detail}"


class ActionDomain:
    """Finite action set with exact pairwise distances.

    dist(a, a) = 0 always; entries are stored as given (both directions kept
    when supplied) so that validate_domain can report symmetry conflicts on
    domains built with check=False.
    """

    __slots__ = ("actions", "_table", "_index")

    def __init__(self, actions: Sequence[str], table: dict[tuple[str, str], Fraction]):
        object.__setattr__(self, "actions", tuple(actions))
        object.__setattr__(self, "_table", dict(table))
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(self.actions)})

    def __setattr__(self, name, value):
        raise AttributeError("ActionDomain is immutable")

    @classmethod
    def build(
        cls,
        actions: Iterable[str] = (),
        entries: Iterable[tuple[str, str, Fraction | int]] = (),
        check: bool = True,
    ) -> "ActionDomain":
        """Build a domain from distance entries, applying symmetric closure.

        Actions mentioned only in entries are added to the alphabet. With
        check=True (the default) any violation raises DomainError; check=False
        keeps the raw table for validate_domain to inspect.
        """
        seen: list[str] = []
        for a in actions:
            if a not in seen:
                seen.append(a)
        table: dict[tuple[str, str], Fraction] = {}
        for a, b, v in entries:
            for x in (a, b):
                if x not in seen:
                    seen.append(x)
            v = Fraction(v)
            key = (a, b)
            if key in table and table[key] != v:
                raise DomainError(f"conflicting entries for d({a},{b}): {table[key]} vs {v}")
            table[key] = v
        # symmetric closure for pairs given in one direction only
        for (a, b), v in list(table.items()):
            table.setdefault((b, a), v)
        dom = cls(tuple(sorted(seen)), table)
        if check:
            problems = validate_domain(dom)
            if problems:
                raise DomainError("; ".join(str(p) for p in problems))
        return dom

    def has(self, action: str) -> bool:
        return action in self._index

    def dist(self, a: str, b: str) -> Cost:
        if a not in self._index or b not in self._index:
            raise DomainError(f"action not in domain: {a if a not in self._index else b}")
        if a == b:
            return ZERO_COST
        v = self._table.get((a, b))
        if v is None:
            v = self._table.get((b, a))
        return INFINITE_COST if v is None else Cost(v)

    def entries(self) -> list[tuple[str, str, Fraction]]:
        """Deterministic one-direction listing of the finite entries."""
        out = []
        for (a, b), v in self._table.items():
            if a < b or (b, a) not in self._table:
                out.append((a, b, v))
        out.sort()
        return out

    def extended(self, extra_actions: Iterable[str]) -> "ActionDomain":
        """Same metric over a larger alphabet (new actions at distance inf)."""
        merged = list(self.actions)
        for a in extra_actions:
            if a not in self._index and a not in merged:
                merged.append(a)
        return ActionDomain(tuple(sorted(merged)), self._table)

    def __repr__(self) -> str:
        return f"ActionDomain(actions={self.actions!r}, entries={len(self._table)})"


def validate_domain(dom: ActionDomain) -> list[MetricViolation]:
    """Check metric laws; returns an empty list when the domain is sound.

    Triangle checking runs over the full alphabet including infinite entries:
    d(a,b) = inf with a finite two-leg path through c is a violation, because
    the unspecified-means-infinite convention must still yield a metric.
    """
    out: list[MetricViolation] = []
    for a in dom.actions:
        if not ACTION_RE.match(a):
            out.append(MetricViolation("name", (a,), "action names must match [A-Za-z0-9_]+"))
    table = dom._table
    for (a, b), v in sorted(table.items()):
        if a not in dom._index or b not in dom._index:
            out.append(MetricViolation("unknown-action", (a, b), "entry over undeclared action"))
            continue
        if v < 0:
            out.append(MetricViolation("negative", (a, b), f"d({a},{b}) = {v} < 0"))
        if a == b and v != 0:
            out.append(MetricViolation("self", (a,), f"d({a},{a}) = {v} != 0"))
        if a < b:
            w = table.get((b, a))
            if w is not None and w != v:
                out.append(MetricViolation("symmetry", (a, b), f"d({a},{b}) = {v} but d({b},{a}) = {w}"))
        if a != b and v == 0:
            out.append(MetricViolation("distinct", (a, b), f"d({a},{b}) = 0 for distinct actions"))
    if out:
        return out
    for a in dom.actions:
        for b in dom.actions:
            if b <= a:
                continue
            direct = dom.dist(a, b)
            for c in dom.actions:
                if c == a or c == b:
                    continue
                via = dom.dist(a, c) + dom.dist(c, b)
                if via < direct:
                    out.append(
                        MetricViolation(
                            "triangle",
                            (a, b, c),
                            f"d({a},{b}) = {direct} exceeds d({a},{c}) + d({c},{b}) = {via}",
                        )
                    )
    return out


def usual_metric(n: int, prefix: str = "") -> ActionDomain:
    """Integers 1..n named as actions, with |i - j| distances. Handy in tests."""
    acts = [f"{prefix}{i}" for i in range(1, n + 1)]
    entries = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            entries.append((f"{prefix}{i}", f"{prefix}{j}", Fraction(j - i)))
    return ActionDomain.build(acts, entries)
