"""Exact cost arithmetic: non-negative rationals plus infinity.

All costs in the step calculus are exact. Floats never enter any cost path;
values are Fractions end to end, with a single distinguished infinite value
(the default distance between unrelated actions).
"""
from __future__ import annotations

from fractions import Fraction
from functools import total_ordering
from typing import Union

Rational = Union[int, Fraction]


@total_ordering
class Cost:
    """A non-negative exact cost, possibly infinite.

    Addition treats infinity as absorbing; comparison places infinity above
    every finite value. Negative costs are rejected at construction.
    """

    __slots__ = ("_value",)

    def __init__(self, value: Rational | None):
        if value is not None:
            if not isinstance(value, (int, Fraction)):
                raise TypeError(f"cost must be int or Fraction, got {type(value).__name__}")
            value = Fraction(value)
            if value < 0:
                raise ValueError(f"cost must be non-negative, got {value}")
        object.__setattr__(self, "_value", value)

    def __setattr__(self, name, value):
        raise AttributeError("Cost is immutable")

    @classmethod
    def of(cls, value: Rational | str | "Cost") -> "Cost":
        if isinstance(value, Cost):
            return value
        if isinstance(value, str):
            return parse_cost(value)
        return cls(value)

    @property
    def is_finite(self) -> bool:
        return self._value is not None

    @property
    def value(self) -> Fraction:
        """Finite value as a Fraction; raises on infinity."""
        if self._value is None:
            raise ValueError("infinite cost has no finite value")
        return self._value

    def __add__(self, other: "Cost") -> "Cost":
        if not isinstance(other, Cost):
            return NotImplemented
        if self._value is None or other._value is None:
            return INFINITE_COST
        return Cost(self._value + other._value)

    def scale(self, factor: Rational) -> "Cost":
        """Multiply by a non-negative rational. 0 * infinity is 0 here:
        scaling only ever applies discount factors, never metric values."""
        factor = Fraction(factor)
        if factor < 0:
            raise ValueError("scale factor must be non-negative")
        if factor == 0:
            return ZERO_COST
        if self._value is None:
            return INFINITE_COST
        return Cost(self._value * factor)

    def __eq__(self, other) -> bool:
        if isinstance(other, Cost):
            return self._value == other._value
        if isinstance(other, (int, Fraction)):
            return self._value is not None and self._value == other
        return NotImplemented

    def __lt__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Cost(other)
        if not isinstance(other, Cost):
            return NotImplemented
        if self._value is None:
            return False
        if other._value is None:
            return True
        return self._value < other._value

    def __hash__(self) -> int:
        return hash(("Cost", self._value))

    def __repr__(self) -> str:
        return f"Cost({format_cost(self)})"

    def __str__(self) -> str:
        return format_cost(self)


ZERO_COST = Cost(0)
INFINITE_COST = Cost(None)


def parse_cost(text: str) -> Cost:
    """Parse 'p/q', an integer, or 'inf'."""
    text = text.strip()
    if text in ("inf", "infinity", "oo"):
        return INFINITE_COST
    try:
        return Cost(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad cost literal {text!r}") from exc


def format_cost(cost: Cost) -> str:
    if not cost.is_finite:
        return "inf"
    v = cost.value
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


class Alpha:
    """Discount factor in (0, 1]. A step at level l is discounted by
    alpha^(l-1): level-1 steps pay the raw metric value, each prefix
    nesting multiplies the cost by alpha once."""

    __slots__ = ("value",)

    def __init__(self, value: Rational):
        value = Fraction(value)
        if not (0 < value <= 1):
            raise ValueError(f"alpha must lie in (0, 1], got {value}")
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, value):
        raise AttributeError("Alpha is immutable")

    @classmethod
    def parse(cls, text: str) -> "Alpha":
        return cls(Fraction(text.strip()))

    def discount(self, level: int) -> Fraction:
        """Multiplier applied to a relabel at the given level (level >= 1)."""
        if level < 1:
            raise ValueError("levels are 1-based")
        return self.value ** (level - 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, Alpha) and self.value == other.value

    def __hash__(self) -> int:
        return hash(("Alpha", self.value))

    def __repr__(self) -> str:
        return f"Alpha({self.value})"

    def __str__(self) -> str:
        v = self.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
