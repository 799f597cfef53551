"""Sorted disjoint unions of closed real intervals."""

from __future__ import annotations

from typing import Iterable, List, Tuple

Interval = Tuple[float, float]

MERGE_RTOL = 1e-9


class IntervalUnion:
    """Finite union of closed intervals, kept sorted and disjoint.

    Intervals whose separation is at most ``merge_tol`` are merged; the
    default tolerance is ``MERGE_RTOL`` times the largest endpoint
    magnitude (at least 1).
    """

    __slots__ = ("_parts", "merge_tol")

    def __init__(self, intervals: Iterable[Interval] = (), merge_tol: float | None = None):
        parts = []
        for lo, hi in intervals:
            lo, hi = float(lo), float(hi)
            if lo > hi:
                raise ValueError(f"interval [{lo}, {hi}] has lo > hi")
            parts.append((lo, hi))
        parts.sort()
        if merge_tol is None:
            scale = max([1.0] + [max(abs(a), abs(b)) for a, b in parts])
            merge_tol = MERGE_RTOL * scale
        self.merge_tol = float(merge_tol)
        merged: List[Interval] = []
        for lo, hi in parts:
            if merged and lo - merged[-1][1] <= self.merge_tol:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        self._parts = tuple(merged)

    @property
    def intervals(self) -> Tuple[Interval, ...]:
        return self._parts

    def __iter__(self):
        return iter(self._parts)

    def __len__(self):
        return len(self._parts)

    def __repr__(self):
        body = " U ".join(f"[{a:.6g}, {b:.6g}]" for a, b in self._parts)
        return f"IntervalUnion({body or 'empty'})"

    @property
    def hull(self) -> Interval:
        if not self._parts:
            raise ValueError("empty union has no hull")
        return (self._parts[0][0], self._parts[-1][1])

    @property
    def connected(self) -> bool:
        return len(self._parts) == 1

    def gaps(self) -> List[Interval]:
        """Open intervals strictly between consecutive parts."""
        return [(a[1], b[0]) for a, b in zip(self._parts, self._parts[1:])]

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= x <= hi + tol for lo, hi in self._parts)

    def meets_open(self, a: float, b: float, tol: float = 0.0) -> bool:
        """Does the union intersect the open interval (a + tol, b - tol)?"""
        a, b = a + tol, b - tol
        if a >= b:
            return False
        return any(lo < b and hi > a for lo, hi in self._parts)

    def distance(self, a: float, b: float) -> float:
        """Distance from the closed interval [a, b] to the union."""
        best = float("inf")
        for lo, hi in self._parts:
            if hi >= a and lo <= b:
                return 0.0
            best = min(best, a - hi if hi < a else lo - b)
        return best

    def is_subset_of(self, other: "IntervalUnion", tol: float = 0.0) -> bool:
        for lo, hi in self._parts:
            if not any(olo - tol <= lo and hi <= ohi + tol for olo, ohi in other):
                return False
        return True

    def difference_measure(self, other: "IntervalUnion") -> float:
        """Lebesgue measure of self minus other."""
        total = 0.0
        for lo, hi in self._parts:
            pieces = [(lo, hi)]
            for olo, ohi in other:
                nxt = []
                for a, b in pieces:
                    if ohi <= a or olo >= b:
                        nxt.append((a, b))
                        continue
                    if a < olo:
                        nxt.append((a, olo))
                    if ohi < b:
                        nxt.append((ohi, b))
                pieces = nxt
            total += sum(b - a for a, b in pieces)
        return total

    def to_list(self):
        return [[lo, hi] for lo, hi in self._parts]
