"""Embeddings along usl homomorphisms, direct limits and the sequential array."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import (
    MalformedTable,
    NotAHomomorphism,
    NotALattice,
    NotUsl,
    RecolorCollapse,
    StageTooSmall,
)
from .lattice import (
    FiniteLattice,
    UslHomomorphism,
    build_lattice,
    format_lattice,
    galois_adjoint,
    parse_lattice,
)
from .partition import UnionFind
from .pudlak import (
    DEFAULT_BUDGET,
    MODIFIED,
    Cell,
    ColoredGraph,
    EdgeInfo,
    color_equivalence,
    pudlak_stage,
)

PAIRWISE_CAP = 400


# ---------------------------------------------------------------- embeddings


@dataclass
class EmbeddingReport:
    injection: tuple[int, ...]
    host: ColoredGraph
    mode: str  # "recolored replay" or "provenance"
    holds: bool
    witness: tuple | None
    pairwise_checked: bool
    copies_needed: int
    adjoint: tuple[int, ...]

    def __bool__(self) -> bool:
        return self.holds


def recolor(G: ColoredGraph, phi: UslHomomorphism) -> ColoredGraph:
    """The graph with every color ``alpha`` replaced by ``phi* alpha``.

    Vertices, edges and cells are kept; pentagons stay keyed by their
    original pair, so a cell may carry several pentagons with the same
    recolored pair.
    """
    if G.lattice != phi.target:
        raise ValueError("graph must be colored by the target of phi")
    star = galois_adjoint(phi).map
    L0 = phi.source
    edges = []
    for e, info in enumerate(G.edges):
        c = star[info.color]
        if c == L0.top:
            raise RecolorCollapse(f"edge {e} colored {info.color} would be recolored to the top")
        edges.append(EdgeInfo(info.u, info.v, c, info.step, info.birth, info.base,
                              info.cell_step, info.copy, info.pentagon, info.pos, info.key))
    H = ColoredGraph(L0, G.variant, G.copies, G.steps, list(G.vertices), edges,
                     dict(G.edge_index), dict(G.cells))
    return H


def _relations_agree(G1, phi, target, image, alpha_cap=None):
    """Compare ``x ~_{phi a} y`` in ``G1`` with ``image x ~_a image y`` in ``target``."""
    for a in phi.source.elements:
        left = color_equivalence(G1, phi.map[a])
        right = color_equivalence(target, a).restrict(image)
        if left != right:
            for x in range(G1.n_vertices):
                for y in range(x + 1, G1.n_vertices):
                    if left.related(x, y) != right.related(x, y):
                        return False, (a, x, y)
    return True, None


def _pairwise(G1, phi, target, image):
    # second route: literal check of the biconditional over every pair
    rel1 = {a: color_equivalence(G1, phi.map[a]).rep for a in phi.source.elements}
    rel0 = {a: color_equivalence(target, a).rep for a in phi.source.elements}
    n = G1.n_vertices
    for a in phi.source.elements:
        r1, r0 = rel1[a], rel0[a]
        for x in range(n):
            for y in range(x + 1, n):
                if (r1[x] == r1[y]) != (r0[image[x]] == r0[image[y]]):
                    return False, (a, x, y)
    return True, None


def copies_needed(G: ColoredGraph, phi: UslHomomorphism) -> int:
    """Largest number of pentagons in one cell sharing a recolored pair."""
    star = galois_adjoint(phi).map
    worst = 1 if G.cells else 0
    for cell in G.cells.values():
        count: dict[tuple[int, int], int] = {}
        for a1, a2 in cell.pentagons:
            key = (star[a1], star[a2])
            count[key] = count.get(key, 0) + 1
        worst = max(worst, max(count.values(), default=0))
    return worst


def embed_into(G1: ColoredGraph, phi: UslHomomorphism, target: ColoredGraph) -> tuple[int, ...]:
    """Provenance embedding of the recolored ``G1`` into a stage of the source lattice's graph.

    Cells are processed in creation order; each pentagon is placed on the
    unused target pentagon with the same recolored pair over the image
    base edge that has the least (birth, step, copy).  Raises
    :class:`StageTooSmall` when the target runs out of room.
    """
    if target.lattice != phi.source:
        raise ValueError("target must be colored by the source of phi")
    star = galois_adjoint(phi).map
    image = [-1] * G1.n_vertices
    image[0], image[1] = 0, 1
    if star[G1.edges[0].color] != target.edges[0].color:
        raise StageTooSmall("base edges carry incompatible colors")
    by_base: dict[int, list[Cell]] = {}
    for cell in target.cells.values():
        by_base.setdefault(cell.base, []).append(cell)
    for cells in by_base.values():
        cells.sort(key=lambda c: (target.edges[c.pentagons[next(iter(c.pentagons))][1][0]].birth, c.step, c.copy))
    used: set[tuple[int, int, int, tuple[int, int]]] = set()
    order = sorted(G1.cells.values(), key=lambda c: (c.step, c.base, c.copy))
    for cell in order:
        binfo = G1.edges[cell.base]
        fa, fb = image[binfo.u], image[binfo.v]
        te = target.edge_between(fa, fb)
        if te is None or target.edges[te].color != star[binfo.color]:
            raise StageTooSmall(f"no target edge for base {cell.base}")
        forward = target.edges[te].u == fa
        for (a1, a2), (us, _) in cell.pentagons.items():
            want = (star[a1], star[a2]) if forward else (star[a2], star[a1])
            slot = None
            for tc in by_base.get(te, []):
                key = (tc.base, tc.step, tc.copy, want)
                if want in tc.pentagons and key not in used:
                    slot = tc
                    used.add(key)
                    break
            if slot is None:
                raise StageTooSmall(f"target has no free pentagon {want} over edge {te}")
            tus = slot.pentagons[want][0]
            for t, s in zip(us, tus if forward else reversed(tus)):
                image[t] = s
    return tuple(image)


def embed_table(
    G1: ColoredGraph,
    phi: UslHomomorphism,
    target: ColoredGraph | None = None,
    pairwise_cap: int = PAIRWISE_CAP,
) -> EmbeddingReport:
    """Embed the table of ``G1`` along ``phi`` and verify the defining biconditional.

    Without ``target`` the host is the recolored graph itself and the
    injection is the identity.  With ``target`` (a stage built for the
    source lattice) the provenance embedding is used and equivalences are
    computed in the whole target, extra edges included.
    """
    star = galois_adjoint(phi).map
    if target is None:
        host = recolor(G1, phi)
        image = tuple(range(G1.n_vertices))
        mode = "recolored replay"
    else:
        recolor(G1, phi)  # surfaces RecolorCollapse
        host = target
        image = embed_into(G1, phi, target)
        mode = "provenance"
    if len(set(image)) != len(image):
        raise RecolorCollapse("two vertices share an image")
    holds, witness = _relations_agree(G1, phi, host, image)
    pairwise = False
    if G1.n_vertices <= pairwise_cap:
        ok2, w2 = _pairwise(G1, phi, host, image)
        pairwise = True
        if ok2 != holds:
            raise AssertionError("partition and pairwise routes disagree")
        witness = witness or w2
    return EmbeddingReport(image, host, mode, holds, witness, pairwise, copies_needed(G1, phi), star)


# ---------------------------------------------------------------- sequences


@dataclass(frozen=True)
class LatticeSequence:
    lattices: tuple[FiniteLattice, ...]
    homs: tuple[UslHomomorphism, ...]

    def __post_init__(self):
        if len(self.homs) != max(len(self.lattices) - 1, 0):
            raise ValueError("need one homomorphism between each consecutive pair")
        for i, h in enumerate(self.homs):
            if h.source != self.lattices[i] or h.target != self.lattices[i + 1]:
                raise NotAHomomorphism(f"hom {i} does not connect lattices {i} and {i + 1}")

    @classmethod
    def constant(cls, L: FiniteLattice, length: int) -> "LatticeSequence":
        return cls((L,) * length, (UslHomomorphism.identity(L),) * (length - 1))


def parse_sequence(text: str) -> LatticeSequence:
    """Parse blocks ``lattice i`` ... ``end`` followed by ``hom i: a->b`` lines."""
    lattices: list[FiniteLattice] = []
    maps: dict[int, dict[int, int]] = {}
    block: list[str] | None = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if block is not None:
            if line == "end":
                lattices.append(parse_lattice("\n".join(block)))
                block = None
            else:
                block.append(line)
        elif line.startswith("lattice"):
            block = []
        elif line.startswith("hom"):
            head, _, body = line.partition(":")
            i = int(head.split()[1])
            a, _, b = body.strip().partition("->")
            src, dst = lattices[i], lattices[i + 1]
            maps.setdefault(i, {})[src.index_of(a.strip())] = dst.index_of(b.strip())
        else:
            raise MalformedTable(f"cannot parse line {raw!r}")
    if block is not None:
        raise MalformedTable("unterminated lattice block")
    homs = []
    for i in range(len(lattices) - 1):
        m = maps.get(i, {})
        if sorted(m) != list(lattices[i].elements):
            raise MalformedTable(f"hom {i} is not total")
        homs.append(UslHomomorphism(lattices[i], lattices[i + 1], tuple(m[a] for a in lattices[i].elements)))
    return LatticeSequence(tuple(lattices), tuple(homs))


def format_sequence(seq: LatticeSequence) -> str:
    out = []
    for i, L in enumerate(seq.lattices):
        out.append(f"lattice {i}")
        out.append(format_lattice(L).rstrip("\n"))
        out.append("end")
    for i, h in enumerate(seq.homs):
        for a in h.source.elements:
            out.append(f"hom {i}: {h.source.label(a)}->{h.target.label(h.map[a])}")
    return "\n".join(out) + "\n"


@dataclass
class LimitUsl:
    """The finite prefix of a direct limit: elements are pairs ``(i, a)``."""

    elements: list[tuple[int, int]]
    classes: list[int]  # class id per element
    leq: list[list[bool]]  # preorder on elements
    prejoin: dict[tuple[int, int], int]  # element-index pair -> element index
    quotient: FiniteLattice

    def class_of(self, i: int, a: int) -> int:
        return self.classes[self.elements.index((i, a))]


def direct_limit_prefix(seq: LatticeSequence) -> LimitUsl:
    """The approximation relation, preorder and pre-join on the finite prefix.

    The quotient is checked to be a bounded usl whose join is induced by
    the pre-join; a failure raises :class:`NotUsl`.
    """
    elems = [(i, a) for i, L in enumerate(seq.lattices) for a in L.elements]
    where = {e: k for k, e in enumerate(elems)}
    uf = UnionFind(len(elems))
    for i, h in enumerate(seq.homs):
        for a in h.source.elements:
            uf.union(where[(i, a)], where[(i + 1, h.map[a])])
    cls = list(uf.labels())
    N = len(elems)
    leq = [[False] * N for _ in range(N)]
    members: dict[int, list[int]] = {}
    for k, c in enumerate(cls):
        members.setdefault(c, []).append(k)
    # a <~ b iff some lattice holds representatives a0 <= b0
    for i, L in enumerate(seq.lattices):
        for a0 in L.elements:
            for b0 in L.elements:
                if L.leq[a0][b0]:
                    for x in members[cls[where[(i, a0)]]]:
                        for y in members[cls[where[(i, b0)]]]:
                            leq[x][y] = True
    first_level = {}
    for c, ks in members.items():
        first_level[c] = min(elems[k][0] for k in ks)
    prejoin: dict[tuple[int, int], int] = {}
    for x in range(N):
        for y in range(N):
            i = max(first_level[cls[x]], first_level[cls[y]])
            L = seq.lattices[i]
            a0 = next(elems[k][1] for k in members[cls[x]] if elems[k][0] == i) if _has(members[cls[x]], elems, i) else None
            b0 = next(elems[k][1] for k in members[cls[y]] if elems[k][0] == i) if _has(members[cls[y]], elems, i) else None
            if a0 is None or b0 is None:
                raise NotUsl(f"classes of {elems[x]} and {elems[y]} do not meet lattice {i}")
            prejoin[(x, y)] = where[(i, L.join[a0][b0])]
    reps = sorted(members)
    idx = {c: j for j, c in enumerate(reps)}
    pairs = [(idx[cls[x]], idx[cls[y]]) for x in range(N) for y in range(N) if leq[x][y]]
    try:
        Q = build_lattice(pairs, len(reps), [_class_label(seq, elems, members[c]) for c in reps])
    except Exception as exc:
        raise NotUsl(f"quotient is not a bounded usl: {exc}") from None
    # quotient index 0 may have been swapped with the bottom; recover the map by labels
    qidx = {lab: j for j, lab in enumerate(Q.labels)}
    to_q = [qidx[_class_label(seq, elems, members[cls[k]])] for k in range(N)]
    for (x, y), z in prejoin.items():
        if Q.join[to_q[x]][to_q[y]] != to_q[z]:
            raise NotUsl(f"pre-join of {elems[x]} and {elems[y]} is not the least upper bound")
    return LimitUsl(elems, [to_q[k] for k in range(N)], leq, prejoin, Q)


def _has(ks, elems, i) -> bool:
    return any(elems[k][0] == i for k in ks)


def _class_label(seq, elems, ks) -> str:
    i, a = elems[min(ks)]
    return f"{i}:{seq.lattices[i].label(a)}"


# ---------------------------------------------------------------- permissibility


def unpair(n: int) -> tuple[int, int]:
    """Inverse Cantor pairing."""
    w = int(((8 * n + 1) ** 0.5 - 1) // 2)
    while w * (w + 1) // 2 > n:
        w -= 1
    while (w + 1) * (w + 2) // 2 <= n:
        w += 1
    y = n - w * (w + 1) // 2
    return w - y, y


def decode(n: int, arity: int) -> tuple[int, ...]:
    out = []
    for _ in range(arity - 1):
        a, n = unpair(n)
        out.append(a)
    out.append(n)
    return tuple(out)


def case_of(i: int) -> tuple[int, tuple[int, ...]]:
    """Even codes are case 1 quadruples ``<x,y,z,n>``, odd codes case 2 triples ``<x,y,n>``."""
    return (1, decode(i // 2, 4)) if i % 2 == 0 else (2, decode(i // 2, 3))


def encode_case1(x: int, y: int, z: int, n: int) -> int:
    return 2 * _encode((x, y, z, n))


def encode_case2(x: int, y: int, n: int) -> int:
    return 2 * _encode((x, y, n)) + 1


def _encode(t: Sequence[int]) -> int:
    acc = t[-1]
    for a in reversed(t[:-1]):
        acc = (a + acc) * (a + acc + 1) // 2 + acc
    return acc


@dataclass
class PresentationTables:
    """Finite approximations of the two relations of a presentation.

    ``join_rows[(x, y, z, n)]`` is the truth row of ``w -> U(x, y, z, w, n)``;
    ``order_rows[(x, y, n)]`` is the row of ``z -> V(x, y, z, n)``.  A missing
    key means the row is all false.
    """

    join_rows: Mapping[tuple[int, int, int, int], Sequence[bool]] = field(default_factory=dict)
    order_rows: Mapping[tuple[int, int, int], Sequence[bool]] = field(default_factory=dict)

    def validate(self) -> None:
        for table, arity in ((self.join_rows, 4), (self.order_rows, 3)):
            widths = set()
            for k, row in table.items():
                if not (isinstance(k, tuple) and len(k) == arity and all(isinstance(v, int) and v >= 0 for v in k)):
                    raise MalformedTable(f"bad key {k!r}")
                widths.add(len(row))
            if len(widths) > 1:
                raise MalformedTable("rows of unequal width")

    def least_witnesses(self) -> dict[tuple[int, int], tuple[int, int]]:
        """``(x, y) -> (code, z)`` for the confirmed join row of least code."""
        out: dict[tuple[int, int], tuple[int, int]] = {}
        for (x, y, z, n), row in self.join_rows.items():
            if row and all(row):
                code = encode_case1(x, y, z, n)
                if (x, y) not in out or code < out[(x, y)][0]:
                    out[(x, y)] = (code, z)
        return out

    def join_confirmed(self, x, y, z, n) -> bool:
        row = self.join_rows.get((x, y, z, n))
        return bool(row) and all(row)

    def order_confirmed(self, x, y, n) -> bool:
        row = self.order_rows.get((x, y, n))
        return bool(row) and all(row)


@dataclass
class MachineState:
    names: tuple[int, ...]  # universe elements present, besides bottom and top
    lattice: FiniteLattice
    where: dict  # name -> lattice index; "0" and "1" for bounds


def _lattice_on(names: Sequence[int], pairs: Sequence[tuple[object, object]]) -> tuple[FiniteLattice, dict]:
    """Finite lattice on the classes of the preorder generated by ``pairs`` plus bounds."""
    items: list[object] = ["0", *names, "1"]
    ix = {v: k for k, v in enumerate(items)}
    n = len(items)
    rel = [[i == j for j in range(n)] for i in range(n)]
    for v in items:
        rel[ix["0"]][ix[v]] = True
        rel[ix[v]][ix["1"]] = True
    for a, b in pairs:
        rel[ix[a]][ix[b]] = True
    for k in range(n):
        for i in range(n):
            if rel[i][k]:
                for j in range(n):
                    if rel[k][j]:
                        rel[i][j] = True
    uf = UnionFind(n)
    for i in range(n):
        for j in range(n):
            if rel[i][j] and rel[j][i]:
                uf.union(i, j)
    lab = uf.labels()
    reps = sorted(set(lab))
    cix = {r: k for k, r in enumerate(reps)}
    cpairs = [(cix[lab[i]], cix[lab[j]]) for i in range(n) for j in range(n) if rel[i][j]]
    labels = [_label(items[r]) for r in reps]
    L = build_lattice(cpairs, len(reps), labels)
    where = {v: L.labels.index(_label(items[lab[ix[v]]])) for v in items}
    return L, where


def _join_quotient(L: FiniteLattice, x: int, y: int) -> tuple[FiniteLattice, tuple[int, ...]]:
    """Quotient of ``L`` by the least join congruence forcing ``x <= y``."""
    uf = UnionFind(L.n)
    work = [(L.join[x][y], y)]
    while work:
        a, b = work.pop()
        if uf.union(a, b):
            # closing the newly merged classes under joins with every element
            cls = uf.labels()
            for p in L.elements:
                for q in L.elements:
                    if cls[p] == cls[q]:
                        for c in L.elements:
                            j1, j2 = L.join[p][c], L.join[q][c]
                            if uf.find(j1) != uf.find(j2):
                                work.append((j1, j2))
    cls = uf.labels()
    reps = sorted(set(cls))
    cix = {r: k for k, r in enumerate(reps)}
    pairs = [
        (cix[cls[a]], cix[cls[b]])
        for a in L.elements
        for b in L.elements
        if cls[L.join[a][b]] == cls[b]
    ]
    # a join congruence class contains its own join; name the class after it
    top_of = {r: L.join_all(a for a in L.elements if cls[a] == r) for r in reps}
    Q = build_lattice(pairs, len(reps), [L.label(top_of[r]) for r in reps])
    qix = {lab: k for k, lab in enumerate(Q.labels)}
    return Q, tuple(qix[L.label(top_of[cls[a]])] for a in L.elements)


def permissibility_machine(tables: PresentationTables, steps: int) -> LatticeSequence:
    """Run the two-case machine for codes ``0..steps-1`` starting at the 2-element lattice.

    Case 1 adds ``{x, y, z}`` once every pair drawn from the current names
    and ``{x, y, z}`` has a confirmed join with a smaller code; the witnessed
    join values are added too, so the result is closed.  Case 2 passes to the
    quotient forcing ``x <= y`` once the order is confirmed.  Codes whose case
    does not fire contribute nothing; the returned sequence lists only the
    lattices that changed, each with the map from its predecessor.
    """
    tables.validate()
    names: list[int] = []
    L, where = _lattice_on([], [])
    lattices, homs = [L], []
    for i in range(steps):
        case, args = case_of(i)
        if case == 1:
            x, y, z, _ = args
            cand = sorted(set(names) | {x, y, z})
            joins = _confirmed_joins(tables, cand, i)
            if joins is None:
                continue
            cand = sorted(set(cand) | set(joins.values()))
            if _confirmed_joins(tables, cand, i) is None:
                continue
            joins = _confirmed_joins(tables, cand, i)
            if set(cand) == set(names):
                continue
            pairs: list[tuple[object, object]] = []
            for a in L.elements:
                for b in L.elements:
                    if L.leq[a][b]:
                        pairs.append((_key(_name(L, a)), _key(_name(L, b))))
            for (a, b), c in joins.items():
                pairs += [(a, c), (b, c)]
            try:
                newL, newwhere = _lattice_on(cand, pairs)
            except NotALattice as exc:
                raise MalformedTable(f"confirmed joins do not form a lattice: {exc}") from None
            for (a, b), c in joins.items():
                if newL.join[newwhere[a]][newwhere[b]] != newwhere[c]:
                    raise MalformedTable(f"confirmed join {a} v {b} = {c} is not a least upper bound")
            m = tuple(newwhere[_key(_name(L, a))] for a in L.elements)
            try:
                h = UslHomomorphism(L, newL, m)
            except NotAHomomorphism as exc:
                raise MalformedTable(f"inclusion is not a homomorphism: {exc}") from None
            names, L, where = cand, newL, newwhere
        else:
            x, y, n = args
            if x not in names or y not in names or not tables.order_confirmed(x, y, n):
                continue
            newL, m = _join_quotient(L, where[x], where[y])
            if newL.n == L.n:
                continue
            h = UslHomomorphism(L, newL, m)
            where = {k: m[v] for k, v in where.items()}
            L = newL
        lattices.append(L)
        homs.append(h)
    return LatticeSequence(tuple(lattices), tuple(homs))


def _name(L: FiniteLattice, a: int) -> str:
    return L.labels[a]


def _label(item) -> str:
    # universe names print as x<k> so they never clash with the bounds
    return item if item in ("0", "1") else f"x{item}"


def _key(label: str):
    return label if label in ("0", "1") else int(label[1:])


def _confirmed_joins(tables, cand, i) -> dict[tuple[int, int], int] | None:
    # least-code confirmed witness for each pair, which must precede code i
    best = tables.least_witnesses()
    joins = {}
    for a in cand:
        for b in cand:
            hit = best.get((a, b))
            if hit is None or hit[0] >= i:
                return None
            joins[(a, b)] = hit[1]
    return joins


# ---------------------------------------------------------------- sequential array


@dataclass
class ArrayEntry:
    """``Theta^i_k`` at a defined index ``k``: the stage ``j`` of ``L^i`` it comes from."""

    level: int
    index: int
    stage: int
    graph: ColoredGraph
    injection: tuple[int, ...]  # vertices of ``graph`` -> vertices of the level-0 graph at ``index``


@dataclass
class SequentialTableArray:
    seq: LatticeSequence
    graphs: list[list[ColoredGraph]]  # graphs[i][n] is stage n of L^i
    m: list[list[int | None]]  # m[i][n] = least m with Theta(phi_i) Theta^{i+1}_n inside Theta^i_m
    entries: list[list[ArrayEntry]]

    def h(self, i: int) -> int | None:
        return self.entries[i][0].index if self.entries[i] else None

    def at(self, i: int, k: int) -> ArrayEntry | None:
        """``Theta^i_k`` with the padding rule: the latest defined index ``<= k``."""
        best = None
        for e in self.entries[i]:
            if e.index <= k:
                best = e
        return best

    def transfer_holds(self, i: int, entry: ArrayEntry) -> tuple[bool, tuple | None]:
        """``x ~_{phi a} y`` in ``Theta^i`` iff the images are ``a``-related in ``Theta^0``, for every ``a`` in ``L^0``."""
        phi = UslHomomorphism.identity(self.seq.lattices[0])
        for h in self.seq.homs[:i]:
            phi = phi.compose(h)
        host = self.graphs[0][entry.index]
        G = entry.graph
        for a in self.seq.lattices[0].elements:
            left = color_equivalence(G, phi.map[a]).rep
            right = color_equivalence(host, a).rep
            img = entry.injection
            for x in range(G.n_vertices):
                for y in range(x + 1, G.n_vertices):
                    if (left[x] == left[y]) != (right[img[x]] == right[img[y]]):
                        return False, (a, x, y)
        return True, None


def sequential_array(
    seq: LatticeSequence,
    stages: int,
    variant: str = MODIFIED,
    budget: int = DEFAULT_BUDGET,
) -> SequentialTableArray:
    """Compose the level embeddings into one array of tables inside ``Theta(L^0)``.

    Stage ``n`` of ``L^{i+1}`` is placed into the least stage ``m`` of ``L^i``
    (among those built, ``m <= stages``) that holds its provenance embedding
    with the biconditional verified.  Level ``i`` is defined at the composite
    indices ``m_0(m_1(...m_{i-1}(j)))``; lookups between them use the latest
    defined index.  A stage that fits nowhere leaves ``m`` undefined and ends
    that level's entries.
    """
    graphs = [[pudlak_stage(L, n, variant, budget) for n in range(stages + 1)] for L in seq.lattices]
    ms: list[list[int | None]] = []
    embeds: list[list[tuple[int, ...] | None]] = []
    for i, phi in enumerate(seq.homs):
        row, maps = [], []
        for n in range(stages + 1):
            found = None
            for mm in range(stages + 1):
                try:
                    rep = embed_table(graphs[i + 1][n], phi, graphs[i][mm])
                except (StageTooSmall, RecolorCollapse):
                    continue
                if rep.holds:
                    found = (mm, rep.injection)
                    break
            row.append(None if found is None else found[0])
            maps.append(None if found is None else found[1])
        ms.append(row)
        embeds.append(maps)
    entries: list[list[ArrayEntry]] = []
    for i in range(len(seq.lattices)):
        level = []
        for j in range(stages + 1):
            k, inj = j, tuple(range(graphs[i][j].n_vertices))
            for lvl in range(i - 1, -1, -1):
                nxt = ms[lvl][k]
                if nxt is None:
                    k = None
                    break
                step = embeds[lvl][k]
                inj = tuple(step[x] for x in inj)
                k = nxt
            if k is None:
                break
            if level and k <= level[-1].index:
                continue
            level.append(ArrayEntry(i, k, j, graphs[i][j], inj))
        entries.append(level)
    return SequentialTableArray(seq, graphs, ms, entries)
