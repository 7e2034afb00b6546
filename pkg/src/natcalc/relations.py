"""Finite decidable binary relations with extensional operations.

A relation carries explicit source and destination carriers (ordered tuples)
and a frozenset of pairs.  Composition, converse, union, inclusion, and
equality are all computed over the carriers, which is what makes the
algebraic law suites decidable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CarrierMismatch


@dataclass(frozen=True)
class Relation:
    src: tuple
    dst: tuple
    pairs: frozenset

    def __post_init__(self):
        src_set, dst_set = set(self.src), set(self.dst)
        for a, b in self.pairs:
            if a not in src_set or b not in dst_set:
                raise CarrierMismatch(f"pair ({a!r}, {b!r}) is off-carrier")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_predicate(src, dst, predicate) -> "Relation":
        pairs = frozenset((a, b) for a in src for b in dst if predicate(a, b))
        return Relation(tuple(src), tuple(dst), pairs)

    @staticmethod
    def from_pairs(src, dst, pairs) -> "Relation":
        return Relation(tuple(src), tuple(dst), frozenset(pairs))

    @staticmethod
    def identity(carrier) -> "Relation":
        carrier = tuple(carrier)
        return Relation(carrier, carrier, frozenset((a, a) for a in carrier))

    @staticmethod
    def empty(src, dst) -> "Relation":
        return Relation(tuple(src), tuple(dst), frozenset())

    @staticmethod
    def full(src, dst) -> "Relation":
        return Relation(tuple(src), tuple(dst),
                        frozenset((a, b) for a in src for b in dst))

    # -- queries -----------------------------------------------------------

    def holds(self, a, b) -> bool:
        return (a, b) in self.pairs

    def __le__(self, other: "Relation") -> bool:
        return self.pairs <= other.pairs

    def __bool__(self) -> bool:
        return bool(self.pairs)

    # -- operations --------------------------------------------------------

    def compose(self, other: "Relation") -> "Relation":
        """Relational composition: self, then other."""
        if self.dst != other.src:
            raise CarrierMismatch("composition over mismatched carriers")
        by_mid: dict = {}
        for m, c in other.pairs:
            by_mid.setdefault(m, []).append(c)
        pairs = frozenset((a, c)
                          for a, m in self.pairs
                          for c in by_mid.get(m, ()))
        return Relation(self.src, other.dst, pairs)

    def converse(self) -> "Relation":
        return Relation(self.dst, self.src,
                        frozenset((b, a) for a, b in self.pairs))

    def union(self, other: "Relation") -> "Relation":
        if self.src != other.src or self.dst != other.dst:
            raise CarrierMismatch("union over mismatched carriers")
        return Relation(self.src, self.dst, self.pairs | other.pairs)
