"""Tightening patterns on a ring of bolts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import MIN_BOLTS, ValidationError

PATTERN_KINDS = ("pattern1", "pattern2", "star_circular", "circular", "custom")

# 20-bolt layouts. Each group is a four-bolt star at 90 degrees.
_STAR = (1, 11, 6, 16)
_PATTERN1 = _STAR + (3, 13, 8, 18) + (5, 15, 10, 20) + (2, 12, 7, 17) + (4, 14, 9, 19)
_PATTERN2 = _STAR + (2, 12, 7, 17) + (3, 13, 8, 18) + (4, 14, 9, 19) + (5, 15, 10, 20)
_FIXED = {
    "pattern1": _PATTERN1,
    "pattern2": _PATTERN2,
    "star_circular": _STAR + tuple(p for p in range(1, 21) if p not in _STAR),
}


@dataclass(frozen=True)
class TighteningPattern:
    """Order in which bolt positions are tightened (a permutation of 1..n)."""

    order: tuple[int, ...]
    n_bolts: int

    def __post_init__(self):
        order = tuple(int(p) for p in self.order)
        object.__setattr__(self, "order", order)
        n = self.n_bolts
        if len(order) != n:
            raise ValidationError(
                f"order has {len(order)} entries, expected n_bolts={n}"
            )
        if sorted(order) != list(range(1, n + 1)):
            dupes = sorted({p for p in order if order.count(p) > 1})
            outside = sorted(p for p in order if not 1 <= p <= n)
            raise ValidationError(
                f"order is not a permutation of 1..{n} "
                f"(duplicates {dupes}, out of range {outside})"
            )
        object.__setattr__(self, "_index", {p: k + 1 for k, p in enumerate(order)})

    def __len__(self):
        return self.n_bolts

    def __iter__(self):
        return iter(self.order)

    def position_at(self, step: int) -> int:
        """Bolt position tightened at 1-based ``step``."""
        if not 1 <= step <= self.n_bolts:
            raise ValidationError(f"step {step} outside 1..{self.n_bolts}")
        return self.order[step - 1]

    def step_of(self, position: int) -> int:
        try:
            return self._index[position]
        except KeyError:
            raise ValidationError(f"unknown position {position}") from None


def make_pattern(
    kind: str, n: int, custom_order: Sequence[int] | None = None
) -> TighteningPattern:
    """Build one of the named patterns.

    ``pattern1``, ``pattern2`` and ``star_circular`` are 20-bolt layouts;
    ``circular`` is 1, 2, ..., n; ``custom`` takes ``custom_order`` verbatim.
    """
    if kind not in PATTERN_KINDS:
        raise ValidationError(f"unknown pattern kind {kind!r}; expected one of {PATTERN_KINDS}")
    if n < MIN_BOLTS:
        raise ValidationError(f"n_bolts below minimum ({n} < {MIN_BOLTS})")
    if kind == "custom":
        if custom_order is None:
            raise ValidationError("custom pattern requires custom_order")
        return TighteningPattern(tuple(custom_order), n)
    if kind == "circular":
        return TighteningPattern(tuple(range(1, n + 1)), n)
    if n != 20:
        raise ValidationError(f"{kind} requires 20 bolts (got {n})")
    return TighteningPattern(_FIXED[kind], n)


def _check_position(n: int, p: int) -> None:
    if not 1 <= p <= n:
        raise ValidationError(f"position {p} outside 1..{n}")


def ring_distance(n: int, a: int, b: int) -> int:
    """Number of steps between positions ``a`` and ``b`` going the short way."""
    _check_position(n, a)
    _check_position(n, b)
    d = abs(a - b)
    return min(d, n - d)


def ring_offset(n: int, position: int, step: int) -> int:
    """Position reached from ``position`` after ``step`` signed moves."""
    return (position - 1 + step) % n + 1


def order_index(pattern: TighteningPattern, position: int) -> int:
    """1-based step at which ``position`` is tightened in ``pattern``."""
    return pattern.step_of(position)


def rotate(pattern: TighteningPattern, offset: int) -> TighteningPattern:
    """Shift every position in the pattern by ``offset`` around the ring."""
    n = pattern.n_bolts
    return TighteningPattern(tuple(ring_offset(n, p, offset) for p in pattern.order), n)
