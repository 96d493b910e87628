"""Equivalence relations on ``0..n-1`` stored by canonical representative."""

from __future__ import annotations

from typing import Iterable, Iterator

from .errors import CarrierMismatch


class UnionFind:
    """Plain union-find with path halving; roots are always block minima."""

    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra < rb:
            self.parent[rb] = ra
        else:
            self.parent[ra] = rb
        return True

    def labels(self) -> tuple[int, ...]:
        return tuple(self.find(x) for x in range(len(self.parent)))


class Partition:
    """Immutable partition; ``rep[x]`` is the least element of x's block.

    Equality and hashing use the representative tuple, so two partitions
    of the same carrier compare equal exactly when they have the same blocks.
    """

    __slots__ = ("rep", "_hash")

    def __init__(self, rep: Iterable[int]):
        self.rep = tuple(rep)
        self._hash = hash(self.rep)

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Partition":
        uf = UnionFind(n)
        for a, b in pairs:
            uf.union(a, b)
        return cls(uf.labels())

    @classmethod
    def from_blocks(cls, n: int, blocks: Iterable[Iterable[int]]) -> "Partition":
        pairs = []
        for block in blocks:
            block = list(block)
            pairs += [(block[0], x) for x in block[1:]]
        return cls.from_pairs(n, pairs)

    @classmethod
    def identity(cls, n: int) -> "Partition":
        return cls(range(n))

    @classmethod
    def all(cls, n: int) -> "Partition":
        return cls([0] * n)

    @property
    def n(self) -> int:
        return len(self.rep)

    def related(self, a: int, b: int) -> bool:
        return self.rep[a] == self.rep[b]

    __call__ = related

    def blocks(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for x, r in enumerate(self.rep):
            out.setdefault(r, []).append(x)
        return list(out.values())

    def pairs(self) -> Iterator[tuple[int, int]]:
        for block in self.blocks():
            for i, a in enumerate(block):
                for b in block[i + 1 :]:
                    yield a, b

    def is_identity(self) -> bool:
        return all(r == x for x, r in enumerate(self.rep))

    def is_all(self) -> bool:
        return all(r == 0 for r in self.rep)

    def refines(self, other: "Partition") -> bool:
        """True when ``self`` is contained in ``other`` as a set of pairs."""
        _same(self, other)
        return all(other.rep[x] == other.rep[r] for x, r in enumerate(self.rep))

    def __le__(self, other: "Partition") -> bool:
        return self.refines(other)

    def restrict(self, points: Iterable[int]) -> "Partition":
        """Restriction to ``points``, reindexed in the given order."""
        pts = list(points)
        first: dict[int, int] = {}
        rep = []
        for i, x in enumerate(pts):
            r = self.rep[x]
            rep.append(first.setdefault(r, i))
        return Partition(rep)

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and self.rep == other.rep

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Partition") -> bool:
        return self.rep < other.rep

    def __repr__(self) -> str:
        return "Partition(" + "|".join(",".join(map(str, b)) for b in self.blocks()) + ")"


def _same(p: Partition, q: Partition) -> None:
    if p.n != q.n:
        raise CarrierMismatch(f"carriers of size {p.n} and {q.n}")


def partition_meet(p: Partition, q: Partition) -> Partition:
    """Intersection of the two relations."""
    _same(p, q)
    seen: dict[tuple[int, int], int] = {}
    return Partition(seen.setdefault((a, b), x) for x, (a, b) in enumerate(zip(p.rep, q.rep)))


def partition_join(p: Partition, q: Partition) -> Partition:
    """Equivalence closure of the union."""
    _same(p, q)
    uf = UnionFind(p.n)
    for x in range(p.n):
        uf.union(x, p.rep[x])
        uf.union(x, q.rep[x])
    return Partition(uf.labels())


def meet_all(n: int, parts: Iterable[Partition]) -> Partition:
    acc = Partition.all(n)
    for p in parts:
        acc = partition_meet(acc, p)
    return acc


def principal_equivalence(n: int, a: int, b: int) -> Partition:
    return Partition.from_pairs(n, [(a, b)])


def all_partitions(n: int) -> Iterator[Partition]:
    """Every partition of ``0..n-1`` as restricted growth strings, in lex order."""
    if n == 0:
        yield Partition(())
        return
    rgs = [0] * n

    def rec(i: int, m: int):
        if i == n:
            first: dict[int, int] = {}
            yield Partition(first.setdefault(c, x) for x, c in enumerate(rgs))
            return
        for c in range(m + 2):
            rgs[i] = c
            yield from rec(i + 1, max(m, c))

    rgs[0] = 0
    yield from rec(1, 0)
