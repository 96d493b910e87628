"""Staged colored graphs built from cells of pentagons, and the checks run on them.

Every edge of the graph carries a color in ``L - {1}``.  A cell over a base
edge colored ``alpha`` has one pentagon for each pair ``(a1, a2)`` of
non-top colors with ``a1 ^ a2 <= alpha``; a pentagon is a four-edge chain
``a = u0, u1, u2, u3, u4 = b`` colored ``a1, a2, a1, a2``.

Two families are built:

* ``original``: stage ``n`` attaches one cell to every edge, ``n`` times.
* ``modified``: stage ``n`` attaches ``n`` cells to every edge, ``n`` times.

Vertices and edges record the step that created them, and ``birth``: the
least stage of the family that contains them.  For the original family the
two coincide; for the modified family a vertex created at step ``s`` in
copy ``q`` over a base born at stage ``b`` has birth ``max(s, q + 1, b)``.
"""

from __future__ import annotations

import copy as _copy
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .algebra import LatticeTable
from .errors import (
    BudgetExceeded,
    ConditionViolated,
    EdgeNotFound,
    NotAChainEdge,
    NotAPath,
    NotStable,
    StageTooSmall,
)
from .lattice import FiniteLattice
from .partition import Partition, UnionFind

DEFAULT_BUDGET = 50_000
CYCLE_LENGTH_CAP = 12

ORIGINAL = "original"
MODIFIED = "modified"


@dataclass(frozen=True)
class VertexInfo:
    step: int
    birth: int
    base: int  # base edge id, -1 for the two stage-0 vertices
    cell_step: int
    copy: int
    pentagon: tuple[int, int] | None
    pos: int  # 1..3 inside a chain, 0 or 4 for the stage-0 endpoints
    key: tuple


@dataclass(frozen=True)
class EdgeInfo:
    u: int
    v: int
    color: int
    step: int
    birth: int
    base: int  # -1 for the stage-0 edge
    cell_step: int
    copy: int
    pentagon: tuple[int, int] | None
    pos: int  # chain position 1..4, 0 for the stage-0 edge
    key: tuple


@dataclass
class Cell:
    base: int
    step: int
    copy: int
    alpha: int
    # pentagon -> ((u1, u2, u3), (x1, x2, x3, x4))
    pentagons: dict[tuple[int, int], tuple[tuple[int, int, int], tuple[int, int, int, int]]]


@dataclass
class ColoredGraph:
    lattice: FiniteLattice
    variant: str
    copies: int
    steps: int = 0
    vertices: list[VertexInfo] = field(default_factory=list)
    edges: list[EdgeInfo] = field(default_factory=list)
    edge_index: dict[tuple[int, int], int] = field(default_factory=dict)
    cells: dict[tuple[int, int, int], Cell] = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edge_between(self, a: int, b: int) -> int | None:
        return self.edge_index.get((a, b) if a < b else (b, a))

    def color(self, e: int) -> int:
        return self.edges[e].color

    def vertices_upto(self, step: int) -> list[int]:
        return [i for i, v in enumerate(self.vertices) if v.step <= step]

    def edges_upto(self, step: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.step <= step]

    def stage_vertices(self, stage: int) -> list[int]:
        return [i for i, v in enumerate(self.vertices) if v.birth <= stage]

    def stage_edges(self, stage: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.birth <= stage]

    def key_index(self) -> dict[tuple, int]:
        return {v.key: i for i, v in enumerate(self.vertices)}

    def cells_on(self, e: int) -> list[Cell]:
        return [c for (b, _, _), c in self.cells.items() if b == e]


def pentagon_pairs(L: FiniteLattice, alpha: int) -> list[tuple[int, int]]:
    """All ``(a1, a2)`` in ``(L - {1})^2`` with ``a1 ^ a2 <= alpha``, sorted."""
    K = L.non_top()
    return [(p, q) for p in K for q in K if L.leq[L.meet[p][q]][alpha]]


def _initial(L: FiniteLattice, variant: str, copies: int, base_color: int | None) -> ColoredGraph:
    c = L.bottom if base_color is None else base_color
    if c == L.top:
        raise ValueError("colors must avoid the top element")
    G = ColoredGraph(L, variant, copies)
    G.vertices = [
        VertexInfo(0, 0, -1, 0, 0, None, 0, ("v", 0)),
        VertexInfo(0, 0, -1, 0, 0, None, 4, ("v", 1)),
    ]
    G.edges = [EdgeInfo(0, 1, c, 0, 0, -1, 0, 0, None, 0, ("e",))]
    G.edge_index = {(0, 1): 0}
    return G


def _add_edge(G: ColoredGraph, info: EdgeInfo) -> int:
    eid = len(G.edges)
    G.edges.append(info)
    a, b = info.u, info.v
    G.edge_index[(a, b) if a < b else (b, a)] = eid
    return eid


def _attach(G: ColoredGraph, e: int, q: int, step: int) -> Cell:
    L = G.lattice
    base = G.edges[e]
    alpha = base.color
    a, b = base.u, base.v
    birth = step if G.variant == ORIGINAL else max(step, q + 1, base.birth)
    cell = Cell(e, step, q, alpha, {})
    for a1, a2 in pentagon_pairs(L, alpha):
        us = []
        for pos in (1, 2, 3):
            us.append(len(G.vertices))
            key = (base.key, step, q, a1, a2, pos)
            G.vertices.append(VertexInfo(step, birth, e, step, q, (a1, a2), pos, key))
        chain = [a, us[0], us[1], us[2], b]
        xs = []
        for pos in (1, 2, 3, 4):
            col = a1 if pos % 2 else a2
            key = (base.key, step, q, a1, a2, "x", pos)
            info = EdgeInfo(
                chain[pos - 1], chain[pos], col, step, birth, e, step, q, (a1, a2), pos, key
            )
            xs.append(_add_edge(G, info))
        cell.pentagons[(a1, a2)] = (tuple(us), tuple(xs))
    G.cells[(e, step, q)] = cell
    return cell


def attach_cell(G: ColoredGraph, e: int, copies: int) -> ColoredGraph:
    """Copy of ``G`` with ``copies`` fresh cells over edge ``e`` (tagged as a new step)."""
    if not 0 <= e < len(G.edges):
        raise EdgeNotFound(f"edge {e} not in graph")
    H = _copy.deepcopy(G)
    if copies == 0:
        return H
    step = H.steps + 1
    used = [k[2] for k in H.cells if k[0] == e and k[1] == step]
    start = max(used) + 1 if used else 0
    for q in range(start, start + copies):
        _attach(H, e, q, step)
    H.steps = step
    return H


def projected_vertices(L: FiniteLattice, n: int, variant: str, base_color: int | None = None) -> int:
    """Exact vertex count of stage ``n`` computed from color counts alone."""
    copies = 1 if variant == ORIGINAL else n
    counts = {x: 0 for x in L.non_top()}
    counts[L.bottom if base_color is None else base_color] = 1
    verts = 2
    pairs = {a: pentagon_pairs(L, a) for a in counts}
    for _ in range(n):
        new = dict(counts)
        for alpha, cnt in counts.items():
            if not cnt:
                continue
            for a1, a2 in pairs[alpha]:
                new[a1] += 2 * cnt * copies
                new[a2] += 2 * cnt * copies
            verts += 3 * len(pairs[alpha]) * cnt * copies
        counts = new
    return verts


def pudlak_stage(
    L: FiniteLattice,
    n: int,
    variant: str = MODIFIED,
    budget: int = DEFAULT_BUDGET,
    base_color: int | None = None,
) -> ColoredGraph:
    """Stage ``n`` of the chosen family.  Raises :class:`BudgetExceeded` up front."""
    if variant not in (ORIGINAL, MODIFIED):
        raise ValueError(f"unknown variant {variant!r}")
    projected = projected_vertices(L, n, variant, base_color)
    if projected > budget:
        raise BudgetExceeded(projected, budget)
    copies = 1 if variant == ORIGINAL else n
    G = _initial(L, variant, copies, base_color)
    for step in range(1, n + 1):
        for e in range(len(G.edges)):
            for q in range(copies):
                _attach(G, e, q, step)
        G.steps = step
    return G


# ---------------------------------------------------------------- equivalences


def color_equivalence(
    G: ColoredGraph, alpha: int, edges: Iterable[int] | None = None, n: int | None = None
) -> Partition:
    """Identify endpoints of every edge colored ``>= alpha``.

    ``edges`` limits the edge set (default all); ``n`` the vertex count.
    """
    L = G.lattice
    uf = UnionFind(G.n_vertices if n is None else n)
    up = L.leq[alpha]
    for e in range(len(G.edges)) if edges is None else edges:
        info = G.edges[e]
        if up[info.color]:
            uf.union(info.u, info.v)
    return Partition(uf.labels())


def stage_equivalences(G: ColoredGraph) -> tuple[Partition, ...]:
    return tuple(color_equivalence(G, k) for k in G.lattice.elements)


def table_from_graph(G: ColoredGraph, injective: bool = True) -> LatticeTable:
    """Lattice table ``k -> e(k)`` on the vertices of ``G``.

    With ``injective=True`` a stage too small to separate two lattice
    elements raises :class:`NotInjectiveAtStage`.
    """
    return LatticeTable.build(G.lattice, stage_equivalences(G), injective=injective)


def join_preserved(G: ColoredGraph, rel: Sequence[Partition] | None = None) -> bool:
    from .partition import partition_meet

    L = G.lattice
    rel = stage_equivalences(G) if rel is None else rel
    return all(
        rel[L.join[a][b]] == partition_meet(rel[a], rel[b]) for a in L.elements for b in L.elements
    )


def restriction_check(small: ColoredGraph, big: ColoredGraph) -> dict[int, bool]:
    """For each color, whether ``e`` on ``small`` is ``e`` on ``big`` restricted.

    Vertices of ``small`` are located in ``big`` by provenance key.
    """
    where = big.key_index()
    try:
        image = [where[v.key] for v in small.vertices]
    except KeyError as exc:
        raise StageTooSmall(f"vertex {exc} of the smaller stage is missing") from None
    out = {}
    for k in small.lattice.elements:
        out[k] = color_equivalence(small, k) == color_equivalence(big, k).restrict(image)
    return out


# ---------------------------------------------------------------- conditions


@dataclass
class ConditionReport:
    surjective: bool | None
    cycles_closed: bool
    cycle_meet: bool
    cycle_search_complete: bool
    connectivity_criterion: bool
    checked_edges: int
    exempt_edges: int
    witnesses: dict[int, object] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return (
            self.surjective is not False
            and self.cycles_closed
            and self.cycle_meet
            and self.connectivity_criterion
        )


def _condition_two(G: ColoredGraph) -> tuple[bool, int, int, object]:
    # every edge that already carries a cell must witness every inequality
    # below its color by a pentagon cycle with the right colors
    L = G.lattice
    checked = exempt = 0
    carried = {b for (b, _, _) in G.cells}
    for e, info in enumerate(G.edges):
        if e not in carried:
            exempt += 1
            continue
        checked += 1
        cell = min((c for c in G.cells_on(e)), key=lambda c: (c.step, c.copy))
        for pair in pentagon_pairs(L, info.color):
            if pair not in cell.pentagons:
                return False, checked, exempt, (e, pair)
            us, xs = cell.pentagons[pair]
            chain = [info.u, *us, info.v]
            for pos, x in enumerate(xs, start=1):
                ex = G.edges[x]
                if {ex.u, ex.v} != {chain[pos - 1], chain[pos]}:
                    return False, checked, exempt, (e, pair, x)
                if ex.color not in pair or ex.color != pair[(pos - 1) % 2]:
                    return False, checked, exempt, (e, pair, x)
    return True, checked, exempt, None


def _adjacency(G: ColoredGraph) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in G.vertices]
    for e, info in enumerate(G.edges):
        adj[info.u].append((info.v, e))
        adj[info.v].append((info.u, e))
    return adj


def _cycle_meet_search(G: ColoredGraph, cap: int, max_paths: int) -> tuple[bool, bool, object]:
    """Depth-first search over cycles of length ``<= cap`` through each edge.

    A branch is abandoned as soon as its running meet drops below the color
    of the distinguished edge, since meets only decrease.  Returns
    ``(ok, complete, witness)``; ``complete`` is False if ``max_paths`` was hit.
    """
    L = G.lattice
    adj = _adjacency(G)
    explored = 0
    for x, info in enumerate(G.edges):
        target, hx = info.v, info.color
        on_path = {info.u}
        stack = [(info.u, L.top, 0, iter(adj[info.u]), [x])]
        while stack:
            vertex, meet, depth, it, used = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                on_path.discard(vertex)
                continue
            w, e = nxt
            if e == x or w in on_path and w != target:
                continue
            m = L.meet[meet][G.edges[e].color]
            if L.leq[m][hx]:
                continue
            if w == target:
                return False, True, [*used, e]
            if depth + 2 >= cap:
                continue
            explored += 1
            if explored > max_paths:
                return True, False, None
            on_path.add(w)
            stack.append((w, m, depth + 1, iter(adj[w]), [*used, e]))
    return True, True, None


def _connectivity_criterion(G: ColoredGraph, rel: Sequence[Partition]) -> tuple[bool, object]:
    # an edge x = {a, b} violates the cycle inequality iff a ~_beta b for
    # some beta not below h(x): the path found is a cycle whose other
    # edges all have color >= beta
    L = G.lattice
    for beta in L.elements:
        rep = rel[beta].rep
        for e, info in enumerate(G.edges):
            if not L.leq[beta][info.color] and rep[info.u] == rep[info.v]:
                return False, (e, beta)
    return True, None


def verify_pudlak_conditions(
    G: ColoredGraph,
    cycle_cap: int = CYCLE_LENGTH_CAP,
    max_paths: int = 2_000_000,
    raise_on_failure: bool = True,
) -> ConditionReport:
    """Check surjectivity of the coloring, the pentagon cycles and the cycle inequality.

    The cycle inequality is checked twice: by bounded cycle search and by
    the equivalent color-connectivity criterion, which covers every length.
    """
    L = G.lattice
    K = set(L.non_top())
    surjective = None if G.steps == 0 else {e.color for e in G.edges} == K
    two, checked, exempt, w2 = _condition_two(G)
    three, complete, w3 = _cycle_meet_search(G, cycle_cap, max_paths)
    crit, wc = _connectivity_criterion(G, stage_equivalences(G))
    rep = ConditionReport(surjective, two, three, complete, crit, checked, exempt)
    if surjective is False:
        rep.witnesses[1] = sorted(K - {e.color for e in G.edges})
    if not two:
        rep.witnesses[2] = w2
    if not three:
        rep.witnesses[3] = w3
    elif not crit:
        rep.witnesses[3] = wc
    if raise_on_failure and not rep.ok:
        k = min(rep.witnesses)
        raise ConditionViolated(k, rep.witnesses[k])
    return rep


# ---------------------------------------------------------------- stable maps


def is_stable(
    G: ColoredGraph, f: dict[int, int] | Sequence[int], edges: Iterable[int], target: ColoredGraph | None = None
) -> tuple[bool, object]:
    """Every edge in ``edges`` collapses or lands on an edge of the same color."""
    H = G if target is None else target
    for e in edges:
        info = G.edges[e]
        a, b = f[info.u], f[info.v]
        if a == b:
            continue
        img = H.edge_between(a, b)
        if img is None or H.edges[img].color != info.color:
            return False, e
    return True, None


def _chain_of(G: ColoredGraph, x: int) -> tuple[list[int], int]:
    info = G.edges[x]
    if info.base < 0:
        raise NotAChainEdge(f"edge {x} is a stage-0 edge")
    base = G.edges[info.base]
    us, _ = G.cells[(info.base, info.cell_step, info.copy)].pentagons[info.pentagon]
    return [base.u, *us, base.v], info.pos


def collapse_map(G: ColoredGraph, x: int) -> dict[int, int]:
    """The collapse map for ``x`` on the step prefix where ``x`` is newest.

    On that prefix the image is exactly the two endpoints of ``x``.  For
    positions 1 and 2 the chain points ``u_k, u_{k+1}`` go to ``u_k`` and all
    else to ``u_{k-1}``; positions 3 and 4 are the mirror image under
    ``u_i <-> u_{4-i}``: ``u_{k-1}, u_{k-2}`` go to ``u_{k-1}``, all else to ``u_k``.
    """
    info = G.edges[x]
    dom = G.vertices_upto(info.step)
    if info.base < 0:
        return {v: v for v in dom}
    u, k = _chain_of(G, x)
    if k in (1, 2):
        keep, fold, rest = u[k], (u[k], u[k + 1]), u[k - 1]
    else:
        keep, fold, rest = u[k - 1], (u[k - 1], u[k - 2]), u[k]
    f = {v: rest for v in dom}
    for v in fold:
        f[v] = keep
    return f


def extend_stable(
    f: dict[int, int],
    source: ColoredGraph,
    n: int,
    target: ColoredGraph,
    m: int,
) -> dict[int, int]:
    """Extend stable ``f`` from source steps ``<= n`` into target steps ``<= m`` by one step.

    Cells born at source step ``n + 1`` are sent to the point ``f(a)`` when
    their base collapses, and otherwise copied onto the matching cell born
    at target step ``m + 1`` over the image base, reversing pentagons when
    ``f`` swaps the base endpoints.
    """
    ok, bad = is_stable(source, f, source.edges_upto(n), target)
    if not ok:
        raise NotStable(f"edge {bad} is neither collapsed nor sent to a same-colored edge")
    if target.steps < m + 1 or source.steps < n + 1:
        raise StageTooSmall("graphs must contain the next step")
    g = dict(f)
    for (base, step, q), cell in source.cells.items():
        if step != n + 1:
            continue
        binfo = source.edges[base]
        fa, fb = f[binfo.u], f[binfo.v]
        if fa == fb:
            for us, _ in cell.pentagons.values():
                for t in us:
                    g[t] = fa
            continue
        te = target.edge_between(fa, fb)
        if q >= target.copies:
            raise StageTooSmall(f"target has no copy {q} of the cell over edge {te}")
        tcell = target.cells[(te, m + 1, q)]
        tinfo = target.edges[te]
        same = tinfo.u == fa
        for (a1, a2), (us, _) in cell.pentagons.items():
            if same:
                tus = tcell.pentagons[(a1, a2)][0]
                for t, s in zip(us, tus):
                    g[t] = s
            else:
                tus = tcell.pentagons[(a2, a1)][0]
                for t, s in zip(us, reversed(tus)):
                    g[t] = s
    return g


def stable_map_fx(G: ColoredGraph, x: int) -> dict[int, int]:
    """Collapse map for ``x`` extended step by step to the whole of ``G``."""
    f = collapse_map(G, x)
    s = G.edges[x].step
    for step in range(s, G.steps):
        f = extend_stable(f, G, step, G, step)
    return f


def as_tuple(f: dict[int, int], n: int) -> tuple[int, ...]:
    return tuple(f[v] for v in range(n))


# ---------------------------------------------------------------- paths


def contract_path(G: ColoredGraph, path: Sequence[int], alpha: int) -> list[int]:
    """Remove loops and shortcut pentagon chains until neither applies."""
    L = G.lattice
    for a, b in zip(path, path[1:]):
        e = G.edge_between(a, b)
        if e is None or not L.leq[alpha][G.edges[e].color]:
            raise NotAPath(f"no edge of color >= {alpha} between {a} and {b}")
    p = list(path)
    changed = True
    while changed:
        changed = False
        seen: dict[int, int] = {}
        for i, v in enumerate(p):
            if v in seen:
                p = p[: seen[v]] + p[i:]
                changed = True
                break
            seen[v] = i
        if changed:
            continue
        for i in range(len(p) - 4):
            window = p[i : i + 5]
            base = _pentagon_base(G, window)
            if base is not None:
                p = p[: i + 1] + p[i + 4 :]
                changed = True
                break
    return p


def _pentagon_base(G: ColoredGraph, window: Sequence[int]) -> int | None:
    mids = window[1:4]
    infos = [G.vertices[v] for v in mids]
    first = infos[0]
    if first.base < 0:
        return None
    if any((i.base, i.cell_step, i.copy, i.pentagon) != (first.base, first.cell_step, first.copy, first.pentagon) for i in infos):
        return None
    base = G.edges[first.base]
    forward = [i.pos for i in infos] == [1, 2, 3] and (window[0], window[4]) == (base.u, base.v)
    backward = [i.pos for i in infos] == [3, 2, 1] and (window[0], window[4]) == (base.v, base.u)
    return first.base if forward or backward else None


# ---------------------------------------------------------------- export


def to_dot(G: ColoredGraph) -> str:
    """DOT text: vertex name = index, edge label = color label, provenance as attributes."""
    L = G.lattice
    out = [f'graph "stage{G.steps}" {{']
    for i, v in enumerate(G.vertices):
        out.append(f"  {i} [birth={v.birth}, step={v.step}];")
    for e, info in enumerate(G.edges):
        attrs = [f'label="{L.label(info.color)}"', f"step={info.step}"]
        if info.base >= 0:
            a1, a2 = info.pentagon
            attrs += [
                f"base={info.base}",
                f"copy={info.copy}",
                f'pentagon="{L.label(a1)},{L.label(a2)}"',
                f"pos={info.pos}",
            ]
        out.append(f"  {info.u} -- {info.v} [{', '.join(attrs)}];")
    out.append("}")
    return "\n".join(out) + "\n"
