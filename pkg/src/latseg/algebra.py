"""Unary algebras, lattice tables, endomorphisms and Malcev homogeneity."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations, permutations, product
from typing import Iterable, Iterator, Sequence

from .errors import CarrierTooLarge, NoPath, NotALatticeTable, NotInjectiveAtStage
from .lattice import FiniteLattice, build_lattice
from .partition import (
    Partition,
    UnionFind,
    all_partitions,
    meet_all,
    partition_join,
    partition_meet,
)

BRUTE_FORCE_CAP = 7

Map = tuple[int, ...]


@dataclass(frozen=True)
class UnaryAlgebra:
    carrier_size: int
    ops: tuple[Map, ...]

    def __post_init__(self):
        for f in self.ops:
            if len(f) != self.carrier_size or any(not 0 <= y < self.carrier_size for y in f):
                raise ValueError(f"operation {f} is not total on {self.carrier_size} points")


def is_congruence(A: UnaryAlgebra, p: Partition) -> bool:
    # checking each point against its block minimum is enough
    for f in A.ops:
        for x, r in enumerate(p.rep):
            if p.rep[f[x]] != p.rep[f[r]]:
                return False
    return True


def principal_congruence(A: UnaryAlgebra, a: int, b: int) -> Partition:
    """Least congruence containing ``(a, b)`` by worklist closure."""
    uf = UnionFind(A.carrier_size)
    work = deque([(a, b)])
    while work:
        x, y = work.popleft()
        if uf.union(x, y):
            for f in A.ops:
                work.append((f[x], f[y]))
    return Partition(uf.labels())


@dataclass(frozen=True)
class LatticeTable:
    """A lattice together with ``rel``: lattice index -> partition of the carrier.

    The required laws (top -> identity, bottom -> all, join -> intersection)
    are asserted at construction; injectivity is asserted unless
    ``injective=False`` is passed.
    """

    lattice: FiniteLattice
    carrier_size: int
    rel: tuple[Partition, ...]

    @classmethod
    def build(
        cls,
        lattice: FiniteLattice,
        rel: Sequence[Partition],
        injective: bool = True,
    ) -> "LatticeTable":
        rel = tuple(rel)
        n = rel[0].n if rel else 0
        T = cls(lattice, n, rel)
        problem = T.violation(injective)
        if problem is not None:
            raise problem
        return T

    def violation(self, injective: bool = True) -> Exception | None:
        L, rel, n = self.lattice, self.rel, self.carrier_size
        if len(rel) != L.n or any(p.n != n for p in rel):
            return NotALatticeTable("rel must give one partition of the carrier per element")
        if not rel[L.top].is_identity():
            return NotALatticeTable("top is not sent to the identity relation")
        if not rel[L.bottom].is_all():
            return NotALatticeTable("bottom is not sent to the all relation")
        for a in L.elements:
            for b in L.elements:
                if rel[L.join[a][b]] != partition_meet(rel[a], rel[b]):
                    return NotALatticeTable(f"join of {a},{b} is not an intersection")
        if injective:
            seen: dict[Partition, int] = {}
            for k, p in enumerate(rel):
                if p in seen:
                    return NotInjectiveAtStage(seen[p], k)
                seen[p] = k
        return None

    def is_full_lattice_table(self) -> bool:
        """Whether meets are also carried to partition joins."""
        L = self.lattice
        return all(
            self.rel[L.meet[a][b]] == partition_join(self.rel[a], self.rel[b])
            for a in L.elements
            for b in L.elements
        )

    def related(self, k: int, x: int, y: int) -> bool:
        return self.rel[k].rep[x] == self.rel[k].rep[y]

    def least(self, x: int, k: int) -> int:
        """``x^[k]``: the least carrier element ``k``-related to ``x``."""
        return self.rel[k].rep[x]

    def matrix(self) -> list[list[int]]:
        return [[self.least(x, k) for k in self.lattice.elements] for x in range(self.carrier_size)]

    def is_endomorphism(self, g: Sequence[int]) -> bool:
        for p in self.rel:
            rep = p.rep
            for x, r in enumerate(rep):
                if rep[g[x]] != rep[g[r]]:
                    return False
        return True


def format_table(T: LatticeTable) -> str:
    """Text export: one row per carrier element, one column per lattice element."""
    L = T.lattice
    out = [
        "# lattice-table v1",
        f"carrier {T.carrier_size}",
        f"lattice {L.n}",
        "columns " + " ".join(L.label(k) for k in L.elements),
    ]
    for x, row in enumerate(T.matrix()):
        out.append(f"{x}: " + " ".join(map(str, row)))
    return "\n".join(out) + "\n"


def congruence_lattice(A: UnaryAlgebra, cap: int = BRUTE_FORCE_CAP) -> LatticeTable:
    """All congruences of ``A`` as a lattice table ordered by reverse inclusion.

    Congruences are listed coarsest first, so index 0 is the all relation.
    """
    n = A.carrier_size
    if n > cap:
        raise CarrierTooLarge(f"carrier {n} exceeds brute-force cap {cap}")
    cons = [p for p in all_partitions(n) if is_congruence(A, p)]
    cons.sort(key=lambda p: (len(p.blocks()), p.rep))
    m = len(cons)
    pairs = [(i, j) for i in range(m) for j in range(m) if cons[j].refines(cons[i])]
    L = build_lattice(pairs, m)
    return LatticeTable.build(L, cons)


def endomorphisms(
    T: LatticeTable,
    cap: int = BRUTE_FORCE_CAP,
    generators: Iterable[Map] | None = None,
    depth: int = 4,
) -> list[Map]:
    """All maps preserving every relation of ``T``, in lexicographic order.

    Above the brute-force cap, ``generators`` must be given and the
    submonoid they generate (to composition ``depth``) is returned.
    """
    n = T.carrier_size
    if n > cap:
        if generators is None:
            raise CarrierTooLarge(f"carrier {n} exceeds cap {cap}; supply generators")
        return generated_submonoid(n, generators, depth)
    reps = [p.rep for p in T.rel]
    out: list[Map] = []
    g = [0] * n

    def rec(x: int):
        if x == n:
            out.append(tuple(g))
            return
        for y in range(n):
            g[x] = y
            if all(rep[y] == rep[g[rep[x]]] for rep in reps):
                rec(x + 1)

    rec(0)
    return out


def compose(f: Map, g: Map) -> Map:
    """``f`` after ``g``."""
    return tuple(f[y] for y in g)


def generated_submonoid(n: int, generators: Iterable[Map], depth: int) -> list[Map]:
    ident = tuple(range(n))
    gens = sorted(set(map(tuple, generators)))
    seen = {ident}
    frontier = [ident]
    for _ in range(depth):
        nxt = []
        for h in frontier:
            for g in gens:
                c = compose(g, h)
                if c not in seen:
                    seen.add(c)
                    nxt.append(c)
        if not nxt:
            break
        frontier = nxt
    return sorted(seen)


def end_principal(T: LatticeTable, ends: Iterable[Map], a: int, b: int) -> Partition:
    """Equivalence generated by the pairs ``(f(a), f(b))``."""
    return Partition.from_pairs(T.carrier_size, ((f[a], f[b]) for f in ends))


def c_theta(T: LatticeTable, a: int, b: int) -> Partition:
    """Meet of every table relation containing ``(a, b)``."""
    return meet_all(T.carrier_size, (p for p in T.rel if p.related(a, b)))


@dataclass(frozen=True)
class HomogeneityResult:
    homogeneous: bool
    witness: tuple[int, int, int, int] | None
    mode: str  # "exhaustive" or "generated submonoid"

    def __bool__(self) -> bool:
        return self.homogeneous


def is_malcev_homogeneous(
    T: LatticeTable, ends: Sequence[Map], mode: str = "exhaustive"
) -> HomogeneityResult:
    n = T.carrier_size
    for a in range(n):
        for b in range(a + 1, n):
            c = c_theta(T, a, b)
            e = end_principal(T, ends, a, b)
            for x, y in c.pairs():
                if not e.related(x, y):
                    return HomogeneityResult(False, (a, b, x, y), mode)
    return HomogeneityResult(True, None, mode)


def homogeneity_interpolants(
    ends: Sequence[Map], a: int, b: int, c: int, d: int
) -> tuple[list[int], list[Map]]:
    """Path ``c = z_0, ..., z_{n+1} = d`` with ``{f_i(a), f_i(b)} = {z_i, z_{i+1}}``.

    Breadth-first over the image edges; neighbours are explored in index
    order and each edge keeps the first map realizing it, preferring the
    identity and otherwise following ``ends`` order.
    """
    if c == d:
        return [c], []
    adj: dict[int, dict[int, Map]] = {}
    ordered = sorted(ends, key=lambda f: f != tuple(range(len(f))))  # identity first
    for f in ordered:
        x, y = f[a], f[b]
        if x != y:
            adj.setdefault(x, {}).setdefault(y, f)
            adj.setdefault(y, {}).setdefault(x, f)
    prev: dict[int, int] = {c: c}
    queue = deque([c])
    while queue:
        x = queue.popleft()
        if x == d:
            break
        for y in sorted(adj.get(x, {})):
            if y not in prev:
                prev[y] = x
                queue.append(y)
    if d not in prev:
        raise NoPath(f"({c},{d}) is not generated by images of ({a},{b})")
    path = [d]
    while path[-1] != c:
        path.append(prev[path[-1]])
    path.reverse()
    maps = [adj[path[i]][path[i + 1]] for i in range(len(path) - 1)]
    return path, maps


def replay_interpolants(
    T: LatticeTable, a: int, b: int, path: Sequence[int], maps: Sequence[Map]
) -> bool:
    if len(maps) != len(path) - 1:
        return False
    for i, f in enumerate(maps):
        if not T.is_endomorphism(f):
            return False
        if {f[a], f[b]} != {path[i], path[i + 1]}:
            return False
    return True


# ---------------------------------------------------------------- exhaustive sweep


def _conjugate(f: Map, perm: Sequence[int], inv: Sequence[int]) -> Map:
    return tuple(perm[f[inv[x]]] for x in range(len(f)))


def unary_algebras(max_carrier: int, max_ops: int) -> Iterator[UnaryAlgebra]:
    """Unary algebras up to relabeling of the carrier and reordering of the operations.

    Operations are taken as a set of distinct maps, since repeating an
    operation or changing the order changes no congruence.  Each class is
    represented by its least form over all carrier permutations.
    """
    for n in range(1, max_carrier + 1):
        maps = list(product(range(n), repeat=n))
        perms = [(p, tuple(sorted(range(n), key=p.__getitem__))) for p in permutations(range(n))]
        for r in range(max_ops + 1):
            for ops in combinations(maps, r):
                canon = min(tuple(sorted(_conjugate(f, p, q) for f in ops)) for p, q in perms)
                if canon == ops:
                    yield UnaryAlgebra(n, ops)


@dataclass
class SweepReport:
    algebras: int
    pairs_replayed: int
    failures: list[tuple[UnaryAlgebra, str]]

    @property
    def ok(self) -> bool:
        return not self.failures


def homogeneity_sweep(max_carrier: int = 4, max_ops: int = 2) -> SweepReport:
    """Check homogeneity of every congruence lattice and replay every interpolant chain."""
    count = replayed = 0
    failures = []
    for A in unary_algebras(max_carrier, max_ops):
        count += 1
        T = congruence_lattice(A)
        ends = endomorphisms(T)
        res = is_malcev_homogeneous(T, ends)
        if not res:
            failures.append((A, f"not homogeneous at {res.witness}"))
            continue
        n = T.carrier_size
        for a in range(n):
            for b in range(a + 1, n):
                for c, d in c_theta(T, a, b).pairs():
                    path, maps = homogeneity_interpolants(ends, a, b, c, d)
                    replayed += 1
                    if not replay_interpolants(T, a, b, path, maps):
                        failures.append((A, f"replay failed for {(a, b, c, d)}"))
    return SweepReport(count, replayed, failures)
