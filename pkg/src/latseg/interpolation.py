"""Meet interpolants, the GLB interpolation chain and extendibility interpolation.

Strings are tuples of carrier indices of a :class:`StagedTable`; a string
``s`` belongs to ``S(Theta)`` when ``s[p]`` is born at stage ``p`` or earlier.
All searches are breadth first with neighbours visited in index order, so
every answer is the least one under (length, lexicographic) order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .algebra import endomorphisms, homogeneity_interpolants
from .errors import (
    NoHomogeneityInterpolants,
    NoMeetInterpolants,
    NoPath,
    NotFound,
    PreconditionFailed,
)
from .pudlak import collapse_map
from .stages import StagedTable

Str = tuple[int, ...]


# ---------------------------------------------------------------- meet interpolants


def _search_alternating(S: StagedTable, first: int, second: int, a: int, b: int, stage: int) -> list[int] | None:
    """Shortest ``a ~first z1 ~second z2 ... ~first b`` inside ``stage``; ``None`` if absent."""
    allowed = S.members(stage)
    classes = []
    for k in (first, second):
        blocks: dict[int, list[int]] = {}
        rep = S.rel[k].rep
        for v in allowed:
            blocks.setdefault(rep[v], []).append(v)
        classes.append((rep, blocks))
    start = (a, 0)
    prev: dict[tuple[int, int], tuple[int, int] | None] = {start: None}
    opened: set[tuple[int, int]] = set()
    queue = deque([start])
    goal = (b, 1)
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        v, side = node
        rep, blocks = classes[side]
        key = (side, rep[v])
        if key in opened:
            continue
        opened.add(key)
        for w in blocks.get(rep[v], ()):
            nxt = (w, 1 - side)
            if nxt not in prev:
                prev[nxt] = node
                queue.append(nxt)
    if goal not in prev:
        return None
    path = []
    node: tuple[int, int] | None = goal
    while node is not None:
        path.append(node[0])
        node = prev[node]
    path.reverse()
    return path[1:-1]


def meet_interpolants(
    S: StagedTable, i: int, j: int, k: int, a: int, b: int, stage: int | None = None
) -> list[int]:
    """``z1..zn`` with ``a ~i z1 ~j z2 ~i ... ~j zn ~i b``, all inside ``stage``.

    ``stage`` defaults to one above the later of ``a`` and ``b``.
    """
    L = S.lattice
    if L.meet[i][j] != k:
        raise PreconditionFailed("meet interpolants", (i, j, k))
    if not S.related(k, a, b):
        raise PreconditionFailed("meet interpolants", ("not related", a, b))
    if a == b or S.related(i, a, b):
        return []
    if stage is None:
        stage = min(max(S.birth[a], S.birth[b]) + 1, S.max_stage)
    z = _search_alternating(S, i, j, a, b, stage)
    if z is None:
        raise NotFound(f"no meet interpolants for ({a},{b}) inside stage {stage}")
    return z


def check_alternating(S: StagedTable, first: int, second: int, chain: Sequence) -> bool:
    """Consecutive members are ``first``-related at even links and ``second``-related at odd ones."""
    for p in range(len(chain) - 1):
        k = first if p % 2 == 0 else second
        x, y = chain[p], chain[p + 1]
        ok = S.strings_related(k, x, y) if isinstance(x, tuple) else S.related(k, x, y)
        if not ok:
            return False
    return True


# ---------------------------------------------------------------- GLB interpolation


def glb_interpolate(
    S: StagedTable, a: int, b: int, c: int, sigma: Str, tau: Str, rho: Str
) -> list[Str]:
    """Chain ``tau = t0 ~a t1 ~b t2 ~a ... ~b tm = rho`` with every ``sigma * tp`` in ``S(Theta)``.

    By induction on length: interpolate the prefixes, then the last
    coordinate with meet interpolants, giving
    ``r0*q0, ..., rv*q0, rv*q1, ..., rv*qw``.  Reflexive links pad each
    piece to an even number of links.
    """
    L = S.lattice
    if L.meet[a][b] != c:
        raise PreconditionFailed("glb", ("meet", a, b, c))
    if not sigma:
        raise PreconditionFailed("glb", "sigma is empty")
    if len(tau) != len(rho):
        raise PreconditionFailed("glb", "tau and rho differ in length")
    if not S.strings_related(c, tau, rho):
        raise PreconditionFailed("glb", ("not related mod", c))
    for t in (tau, rho):
        if not S.in_S(tuple(sigma) + tuple(t)):
            raise PreconditionFailed("glb", ("outside S", t))
    return _glb(S, a, b, len(sigma), tuple(tau), tuple(rho))


def _glb(S, a, b, offset, tau, rho) -> list[Str]:
    if not tau:
        return [()]
    s = len(tau) - 1
    prefix = _glb(S, a, b, offset, tau[:-1], rho[:-1])
    q, r = tau[-1], rho[-1]
    cap = min(offset + s, S.max_stage)
    lo = max(S.birth[q], S.birth[r])
    z = None
    if q == r:
        # nothing to interpolate: the chain so far simply gains the letter
        return [p + (q,) for p in prefix]
    if S.related(a, q, r):
        z = []
    else:
        for stage in range(lo, cap + 1):
            z = _search_alternating(S, a, b, q, r, stage)
            if z is not None:
                break
    if z is None:
        raise NoMeetInterpolants(f"coordinate {s}: ({q},{r}) has no interpolants inside stage {cap}")
    qs = [q, *z, r]
    if (len(qs) - 1) % 2:
        qs.append(r)
    v = prefix[-1]
    out = [p + (q,) for p in prefix]
    out += [v + (x,) for x in qs[1:]]
    return out


# ---------------------------------------------------------------- extendibility


@dataclass
class Transport:
    """Collapse onto edge ``x``, carry ``x`` onto ``y`` (flipped when ``flip``), then extend."""

    x: int
    y: int
    flip: bool

    def describe(self) -> str:
        return f"transport {self.x}->{self.y}{' flipped' if self.flip else ''}"


class TransportFamily:
    """Stable maps from stage ``m`` of a Pudlák table into its deepest built stage.

    Images are computed through cell ancestry, so evaluating a map at one
    vertex costs only the depth of that vertex.
    """

    def __init__(self, S: StagedTable, m: int):
        if S.graph is None:
            raise ValueError("transport maps need a Pudlák graph")
        self.S, self.G, self.m = S, S.graph, m
        self.domain = S.members(m)
        self.source_edges = [e for e, info in enumerate(self.G.edges) if info.birth <= m]
        self._collapse: dict[int, dict[int, int]] = {}
        self.by_color: dict[int, list[int]] = {}
        for e, info in enumerate(self.G.edges):
            self.by_color.setdefault(info.color, []).append(e)

    def _base_value(self, t: Transport, w: int) -> int:
        x, y = self.G.edges[t.x], self.G.edges[t.y]
        onto = {x.u: y.v, x.v: y.u} if t.flip else {x.u: y.u, x.v: y.v}
        if t.x not in self._collapse:
            self._collapse[t.x] = collapse_map(self.G, t.x)
        return onto[self._collapse[t.x][w]]

    def value(self, t: Transport, w: int, memo: dict[int, int] | None = None) -> int | None:
        G = self.G
        memo = {} if memo is None else memo
        if w in memo:
            return memo[w]
        sx, sy = G.edges[t.x].step, G.edges[t.y].step
        vinfo = G.vertices[w]
        if vinfo.step <= sx:
            out = self._base_value(t, w)
        else:
            base = G.edges[vinfo.base]
            fa = self.value(t, base.u, memo)
            fb = self.value(t, base.v, memo)
            if fa is None or fb is None:
                out = None
            elif fa == fb:
                out = fa
            else:
                te = G.edge_between(fa, fb)
                cell = G.cells.get((te, sy + vinfo.cell_step - sx, vinfo.copy)) if te is not None else None
                if cell is None:
                    out = None
                else:
                    a1, a2 = vinfo.pentagon
                    if G.edges[te].u == fa:
                        out = cell.pentagons[(a1, a2)][0][vinfo.pos - 1]
                    else:
                        out = cell.pentagons[(a2, a1)][0][3 - vinfo.pos]
        memo[w] = out
        return out

    def full_map(self, t: Transport) -> dict[int, int] | None:
        memo: dict[int, int] = {}
        out = {}
        for w in self.domain:
            val = self.value(t, w, memo)
            if val is None:
                return None
            out[w] = val
        return out

    def links(self, u: int, v: int) -> list[tuple[int, int, int, Transport | None]]:
        """Every image pair ``(f(u), f(v), birth, f)`` with ``f(u) != f(v)``."""
        G, S = self.G, self.S
        out = [(u, v, max(S.birth[u], S.birth[v]), None)]
        for x in self.source_edges:
            color = G.edges[x].color
            for y in self.by_color[color]:
                for flip in (False, True):
                    t = Transport(x, y, flip)
                    memo: dict[int, int] = {}
                    fu, fv = self.value(t, u, memo), self.value(t, v, memo)
                    if fu is None or fv is None or fu == fv:
                        continue
                    out.append((fu, fv, max(S.birth[fu], S.birth[fv]), t))
        return out


@dataclass
class ExtendibilityResult:
    lambdas: list[Str]
    maps: list[tuple[dict[int, int], ...]]  # f_r as one coordinate map per position
    w: int
    describe: list[list[str]]

    @property
    def t(self) -> int:
        return len(self.maps)


def partial_hom_ok(S: StagedTable, u: int, v: int, lam: Str, lam2: Str) -> bool:
    return all(
        S.strings_related(k, lam, lam2) for k in S.lattice.elements if S.related(k, u, v)
    )


def _homogeneity_chain(S, links, u, v, c, d, cap, family, banned):
    """Path from ``c`` to ``d`` through image pairs born by ``cap``; returns points and maps."""
    if c == d:
        return [c], []
    adj: dict[int, list[tuple[int, int, Transport | None]]] = {}
    for idx, (fu, fv, birth, t) in enumerate(links):
        if birth <= cap and idx not in banned:
            adj.setdefault(fu, []).append((fv, idx, t))
            adj.setdefault(fv, []).append((fu, idx, t))
    prev = {c: None}
    queue = deque([c])
    while queue:
        z = queue.popleft()
        if z == d:
            break
        for w, idx, t in sorted(adj.get(z, ()), key=lambda e: (e[0], e[1])):
            if w not in prev:
                prev[w] = (z, idx)
                queue.append(w)
    if d not in prev:
        return None
    pts, idxs = [d], []
    while pts[-1] != c:
        z, idx = prev[pts[-1]]
        idxs.append(idx)
        pts.append(z)
    pts.reverse()
    idxs.reverse()
    return pts, idxs


def extendibility_interpolate(
    S: StagedTable, m: int, u: int, v: int, lam: Str, lam2: Str, max_retries: int = 50
) -> ExtendibilityResult:
    """Interpolate ``lam`` to ``lam2`` through images of ``(u, v)`` under homomorphisms of stage ``m``.

    Coordinate ``x`` draws its interpolants from stage ``min(m + x + 1, max_stage)``.
    Every map used is checked to be a homomorphism on the whole of stage ``m``.
    """
    lam, lam2 = tuple(lam), tuple(lam2)
    if len(lam) != len(lam2):
        raise PreconditionFailed("extendibility", "strings differ in length")
    if not (S.in_stage(u, m) and S.in_stage(v, m)):
        raise PreconditionFailed("extendibility", ("outside stage", m))
    if not (S.in_S(lam) and S.in_S(lam2)):
        raise PreconditionFailed("extendibility", "strings outside S")
    if not partial_hom_ok(S, u, v, lam, lam2):
        raise PreconditionFailed("extendibility", "not a partial homomorphism")
    domain = S.members(m)
    per_coord: list[tuple[list[int], list[dict[int, int]], list[str]]] = []
    if S.graph is not None:
        family = TransportFamily(S, m)
        links = family.links(u, v)
    else:
        family = None
        ends = endomorphisms(S.stage_table(S.max_stage if S.max_stage < 10**6 else 0))
    for x in range(len(lam)):
        cap = min(m + x + 1, S.max_stage)
        if family is not None:
            per_coord.append(_coordinate_chain(S, family, links, u, v, lam[x], lam2[x], cap, domain, max_retries))
        else:
            per_coord.append(_coordinate_chain_brute(S, ends, u, v, lam[x], lam2[x]))
    w = max([0] + [len(maps) - 1 for _, maps, _ in per_coord])
    return _assemble(S, per_coord, u, v, lam, lam2, w, domain)


def _coordinate_chain(S, family, links, u, v, c, d, cap, domain, max_retries):
    banned: set[int] = set()
    for _ in range(max_retries):
        found = _homogeneity_chain(S, links, u, v, c, d, cap, family, banned)
        if found is None:
            raise NoHomogeneityInterpolants(f"({c},{d}) not reached from images of ({u},{v}) inside stage {cap}")
        pts, idxs = found
        maps, names, bad = [], [], False
        for idx in idxs:
            fu, fv, _, t = links[idx]
            f = {w: w for w in domain} if t is None else family.full_map(t)
            if f is None or any(S.birth[val] > cap for val in f.values()) or not S.is_hom(f, domain)[0]:
                banned.add(idx)
                bad = True
                break
            maps.append(f)
            names.append("inclusion" if t is None else t.describe())
        if not bad:
            return pts, maps, names
    raise NoHomogeneityInterpolants(f"gave up on ({c},{d}) after {max_retries} rejected links")


def _coordinate_chain_brute(S, ends, u, v, c, d):
    try:
        pts, fs = homogeneity_interpolants(ends, u, v, c, d)
    except NoPath as exc:
        raise NoHomogeneityInterpolants(str(exc)) from None
    maps = [dict(enumerate(f)) for f in fs]
    return pts, maps, ["endomorphism"] * len(maps)


def _constant(domain, value) -> dict[int, int]:
    return {w: value for w in domain}


def _assemble(S, per_coord, u, v, lam, lam2, w, domain) -> ExtendibilityResult:
    n = len(lam)
    mu = [[None] * (w + 2) for _ in range(n)]
    link: list[list[dict[int, int]]] = [[None] * (w + 1) for _ in range(n)]
    label: list[list[str]] = [[""] * (w + 1) for _ in range(n)]
    for x, (pts, maps, names) in enumerate(per_coord):
        k = len(maps)
        for s in range(w + 2):
            mu[x][s] = pts[min(s, len(pts) - 1)]
        for s in range(w + 1):
            if s < k:
                link[x][s], label[x][s] = maps[s], names[s]
            else:
                link[x][s], label[x][s] = _constant(domain, mu[x][s]), "constant"
    t = 4 * (w + 1)
    lambdas: list[list[int]] = [[0] * n for _ in range(t + 1)]
    coord_maps: list[list[dict[int, int]]] = [[None] * n for _ in range(t)]
    coord_names: list[list[str]] = [[""] * n for _ in range(t)]
    for x in range(n):
        for s in range(w + 1):
            f = link[x][s]
            lambdas[4 * s][x] = mu[x][s]
            lambdas[4 * s + 1][x] = f[v]
            lambdas[4 * s + 2][x] = f[u]
            lambdas[4 * s + 3][x] = mu[x][s + 1]
            lambdas[4 * s + 4][x] = mu[x][s + 1]
        for s in range(w + 1):
            f = link[x][s]
            const_next = _constant(domain, mu[x][s + 1])
            const_here = _constant(domain, mu[x][s])
            still = lambdas[4 * s][x] == lambdas[4 * s + 1][x]
            coord_maps[4 * s][x] = const_here if still else f
            coord_maps[4 * s + 1][x] = f
            coord_maps[4 * s + 2][x] = const_next if still else f
            coord_maps[4 * s + 3][x] = const_next
            coord_names[4 * s][x] = "constant" if still else label[x][s]
            coord_names[4 * s + 1][x] = label[x][s]
            coord_names[4 * s + 2][x] = "constant" if still else label[x][s]
            coord_names[4 * s + 3][x] = "constant"
    res = ExtendibilityResult(
        [tuple(l) for l in lambdas], [tuple(fs) for fs in coord_maps], w, coord_names
    )
    return res


def verify_extendibility(
    S: StagedTable, m: int, u: int, v: int, lam: Str, lam2: Str, res: ExtendibilityResult
) -> list[str]:
    """Replay a result; returns a list of problems (empty when everything holds)."""
    problems = []
    domain = S.members(m)
    if res.t % 4 or res.t == 0:
        problems.append(f"t = {res.t} is not a positive multiple of 4")
    if res.lambdas[0] != tuple(lam) or res.lambdas[-1] != tuple(lam2):
        problems.append("chain endpoints differ from the inputs")
    if len(res.lambdas) != res.t + 1:
        problems.append("chain length is not t + 1")
    for r, fs in enumerate(res.maps):
        for x, f in enumerate(fs):
            cap = min(m + x + 1, S.max_stage)
            if set(f) != set(domain):
                problems.append(f"f_{r} coordinate {x} is not total on stage {m}")
                continue
            if any(S.birth[val] > cap for val in f.values()):
                problems.append(f"f_{r} coordinate {x} leaves stage {cap}")
            ok, bad = S.is_hom(f, domain)
            if not ok:
                problems.append(f"f_{r} coordinate {x} breaks relation {bad}")
        img_u = tuple(f[u] for f in fs)
        img_v = tuple(f[v] for f in fs)
        pair = (res.lambdas[r], res.lambdas[r + 1])
        if (img_u, img_v) != pair and (img_v, img_u) != pair:
            problems.append(f"f_{r} does not send (u, v) onto lambda_{r}, lambda_{r + 1}")
    if res.maps:
        if tuple(f[u] for f in res.maps[0]) != tuple(lam):
            problems.append("f_0(u) differs from lambda")
        if tuple(f[u] for f in res.maps[-1]) != tuple(lam2):
            problems.append("f_(t-1)(u) differs from lambda'")
    return problems
