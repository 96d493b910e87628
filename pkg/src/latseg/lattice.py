"""Finite bounded lattices, usl homomorphisms and the Galois adjoint."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    AdjointPropertyFailed,
    LatticeFormatError,
    NotAHomomorphism,
    NotALattice,
    NotAPartialOrder,
    Unbounded,
)


@dataclass(frozen=True)
class FiniteLattice:
    """A bounded lattice on indices ``0..n-1`` with the bottom at index 0.

    ``leq[a][b]`` is the order; ``join`` and ``meet`` are full tables.
    Build instances with :func:`build_lattice` rather than directly.
    """

    n: int
    leq: tuple[tuple[bool, ...], ...]
    join: tuple[tuple[int, ...], ...]
    meet: tuple[tuple[int, ...], ...]
    bottom: int
    top: int
    labels: tuple[str, ...] = field(default=())

    @property
    def elements(self) -> range:
        return range(self.n)

    def le(self, a: int, b: int) -> bool:
        return self.leq[a][b]

    def lt(self, a: int, b: int) -> bool:
        return a != b and self.leq[a][b]

    def label(self, a: int) -> str:
        return self.labels[a] if self.labels else str(a)

    def index_of(self, name: str) -> int:
        if self.labels and name in self.labels:
            return self.labels.index(name)
        return int(name)

    def join_all(self, items: Iterable[int]) -> int:
        acc = self.bottom
        for x in items:
            acc = self.join[acc][x]
        return acc

    def meet_all(self, items: Iterable[int]) -> int:
        acc = self.top
        for x in items:
            acc = self.meet[acc][x]
        return acc

    def non_top(self) -> list[int]:
        return [x for x in self.elements if x != self.top]

    def covers(self) -> list[tuple[int, int]]:
        """Covering pairs ``(a, b)`` with ``a < b`` and nothing strictly between."""
        out = []
        for a in self.elements:
            for b in self.elements:
                if self.lt(a, b) and not any(
                    self.lt(a, c) and self.lt(c, b) for c in self.elements
                ):
                    out.append((a, b))
        return out

    def is_isomorphic(self, other: "FiniteLattice") -> bool:
        from itertools import permutations

        if self.n != other.n:
            return False
        for perm in permutations(range(self.n)):
            if all(
                self.leq[a][b] == other.leq[perm[a]][perm[b]]
                for a in self.elements
                for b in self.elements
            ):
                return True
        return False


def _closure(n: int, pairs: Iterable[tuple[int, int]]) -> list[list[bool]]:
    rel = [[i == j for j in range(n)] for i in range(n)]
    for a, b in pairs:
        if not (0 <= a < n and 0 <= b < n):
            raise NotAPartialOrder(f"pair {(a, b)} outside carrier of size {n}")
        rel[a][b] = True
    for k in range(n):
        rk = rel[k]
        for i in range(n):
            if rel[i][k]:
                ri = rel[i]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True
    return rel


def _bounds(n: int, rel, op_le) -> list[list[int]]:
    # op_le(x, y) is True when x is "better" than y for the bound we want
    table = [[0] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            ups = [c for c in range(n) if op_le(a, c) and op_le(b, c)]
            least = [c for c in ups if all(op_le(c, d) for d in ups)]
            if len(least) != 1:
                raise NotALattice(f"elements {a} and {b} have no unique bound")
            table[a][b] = table[b][a] = least[0]
    return table


def build_lattice(
    order_pairs: Iterable[tuple[int, int]],
    n: int,
    labels: Sequence[str] | None = None,
) -> FiniteLattice:
    """Build a lattice from covering or full order pairs ``(i, j)`` meaning ``i <= j``.

    Indices are canonicalized so that the bottom sits at index 0: if the
    bottom of the input is some ``b != 0`` then ``b`` and ``0`` swap places.
    """
    if n < 1:
        raise Unbounded("empty carrier")
    rel = _closure(n, order_pairs)
    for a in range(n):
        for b in range(n):
            if a != b and rel[a][b] and rel[b][a]:
                raise NotAPartialOrder(f"{a} <= {b} <= {a}")
    bottoms = [x for x in range(n) if all(rel[x][y] for y in range(n))]
    tops = [x for x in range(n) if all(rel[y][x] for y in range(n))]
    join = _bounds(n, rel, lambda x, y: rel[x][y])
    meet = _bounds(n, rel, lambda x, y: rel[y][x])
    if not bottoms or not tops:
        raise Unbounded("no global bottom or top")
    bottom, top = bottoms[0], tops[0]
    perm = list(range(n))
    perm[0], perm[bottom] = perm[bottom], perm[0]
    return _relabel(n, rel, join, meet, perm, bottom, top, labels)


def _relabel(n, rel, join, meet, perm, bottom, top, labels) -> FiniteLattice:
    # perm is an involution (a transposition), so it is its own inverse
    leq = tuple(tuple(rel[perm[a]][perm[b]] for b in range(n)) for a in range(n))
    j = tuple(tuple(perm[join[perm[a]][perm[b]]] for b in range(n)) for a in range(n))
    m = tuple(tuple(perm[meet[perm[a]][perm[b]]] for b in range(n)) for a in range(n))
    lab = tuple(labels[perm[a]] for a in range(n)) if labels else ()
    return FiniteLattice(n, leq, j, m, perm[bottom], perm[top], lab)


def dual(L: FiniteLattice) -> FiniteLattice:
    """Order-reversed lattice.  Top and bottom trade indices, so dual is an involution."""
    n = L.n
    rel = [[L.leq[b][a] for b in range(n)] for a in range(n)]
    perm = list(range(n))
    perm[L.bottom], perm[L.top] = perm[L.top], perm[L.bottom]
    join = [list(r) for r in L.meet]
    meet = [list(r) for r in L.join]
    return _relabel(n, rel, join, meet, perm, L.top, L.bottom, L.labels or None)


@dataclass(frozen=True)
class UslHomomorphism:
    """A map between lattices preserving 0, 1 and binary joins."""

    source: FiniteLattice
    target: FiniteLattice
    map: tuple[int, ...]

    def __post_init__(self):
        problem = hom_violation(self.source, self.target, self.map)
        if problem is not None:
            raise NotAHomomorphism(problem)

    def __call__(self, a: int) -> int:
        return self.map[a]

    @classmethod
    def identity(cls, L: FiniteLattice) -> "UslHomomorphism":
        return cls(L, L, tuple(L.elements))

    def compose(self, other: "UslHomomorphism") -> "UslHomomorphism":
        """``other`` after ``self``."""
        return UslHomomorphism(self.source, other.target, tuple(other.map[x] for x in self.map))


def hom_violation(src: FiniteLattice, dst: FiniteLattice, f: Sequence[int]) -> str | None:
    if len(f) != src.n or any(not 0 <= x < dst.n for x in f):
        return "map is not total into the target"
    if f[src.bottom] != dst.bottom:
        return "bottom not preserved"
    if f[src.top] != dst.top:
        return "top not preserved"
    for a in src.elements:
        for b in src.elements:
            if f[src.join[a][b]] != dst.join[f[a]][f[b]]:
                return f"join of {a},{b} not preserved"
    return None


@dataclass(frozen=True)
class Adjoint:
    """The adjoint map from target to source together with its clause checks."""

    phi: UslHomomorphism
    map: tuple[int, ...]
    clauses: Mapping[int, bool]

    def __call__(self, x: int) -> int:
        return self.map[x]


def adjoint_map(
    source: FiniteLattice, target: FiniteLattice, f: Sequence[int]
) -> tuple[int, ...]:
    return tuple(
        source.join_all(a for a in source.elements if target.leq[f[a]][x])
        for x in target.elements
    )


def adjoint_clauses(
    source: FiniteLattice, target: FiniteLattice, f: Sequence[int], star: Sequence[int]
) -> dict[int, object]:
    """Return ``{clause: witness or None}`` for the four adjoint properties."""
    out: dict[int, object] = {1: None, 2: None, 3: None, 4: None}
    T, S = target, source
    if star[T.top] != S.top:
        out[1] = ("top", T.top)
    for x in T.elements:
        for y in T.elements:
            if out[1] is None and star[T.meet[x][y]] != S.meet[star[x]][star[y]]:
                out[1] = (x, y)
    for x in T.elements:
        if x != T.top and star[x] == S.top and out[2] is None:
            out[2] = x
    image = sorted(set(f))
    for i, x in enumerate(image):
        for y in image[i + 1 :]:
            if star[x] == star[y] and out[3] is None:
                out[3] = (x, y)
    for a in S.elements:
        for x in T.elements:
            if S.leq[a][star[x]] != S.leq[star[f[a]]][star[x]] and out[4] is None:
                out[4] = (a, x)
    return out


def galois_adjoint(phi: UslHomomorphism) -> Adjoint:
    """Compute the adjoint of ``phi`` and check its four properties.

    Raises :class:`AdjointPropertyFailed` naming the first failing clause.
    """
    star = adjoint_map(phi.source, phi.target, phi.map)
    report = adjoint_clauses(phi.source, phi.target, phi.map, star)
    for k in (1, 2, 3, 4):
        if report[k] is not None:
            raise AdjointPropertyFailed(k, report[k])
    return Adjoint(phi, star, {k: True for k in report})


# ---------------------------------------------------------------- file format


def parse_lattice(text: str) -> FiniteLattice:
    """Parse the lattice text format.

    Grammar (one item per line, ``#`` starts a comment, blank lines ignored)::

        <n>
        <i> <= <j>
        label <i> <name>
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise LatticeFormatError("empty lattice description")
    try:
        n = int(lines[0])
    except ValueError:
        raise LatticeFormatError(f"first line must be the element count, got {lines[0]!r}")
    pairs, labels = [], [str(i) for i in range(n)]
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "label" and len(parts) == 3:
            i = int(parts[1])
            if not 0 <= i < n:
                raise LatticeFormatError(f"label index out of range: {ln!r}")
            labels[i] = parts[2]
        elif len(parts) == 3 and parts[1] == "<=":
            pairs.append((int(parts[0]), int(parts[2])))
        else:
            raise LatticeFormatError(f"cannot parse line {ln!r}")
    return build_lattice(pairs, n, labels)


def format_lattice(L: FiniteLattice) -> str:
    out = [str(L.n)]
    out += [f"{a} <= {b}" for a, b in L.covers()]
    if L.labels:
        out += [f"label {i} {name}" for i, name in enumerate(L.labels)]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- catalog


def chain(k: int) -> FiniteLattice:
    names = ["0"] + [f"c{i}" for i in range(1, k - 1)] + ["1"] if k > 1 else ["0"]
    return build_lattice([(i, i + 1) for i in range(k - 1)], k, names)


def boolean_square() -> FiniteLattice:
    return build_lattice([(0, 1), (0, 2), (1, 3), (2, 3)], 4, ["0", "a", "b", "1"])


def m3() -> FiniteLattice:
    return build_lattice(
        [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)], 5, ["0", "a", "b", "c", "1"]
    )


def n5() -> FiniteLattice:
    # 0 < a < b < 1 is the long side, 0 < c < 1 the short side
    return build_lattice([(0, 1), (1, 2), (2, 4), (0, 3), (3, 4)], 5, ["0", "a", "b", "c", "1"])


CATALOG = {
    "2-chain": lambda: chain(2),
    "3-chain": lambda: chain(3),
    "4-chain": lambda: chain(4),
    "2x2": boolean_square,
    "M3": m3,
    "N5": n5,
}


def catalog_lattice(name: str) -> FiniteLattice:
    try:
        return CATALOG[name]()
    except KeyError:
        raise LatticeFormatError(f"unknown catalog lattice {name!r}; known: {sorted(CATALOG)}")
