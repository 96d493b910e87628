"""Finite trees on table strings: structure, extensions, Ext subtrees, e-splittings.

A tree maps domain strings (tuples of carrier indices) to image strings.
Domain strings must lie in ``S(Theta)`` of the domain table, shifted by
``offset`` for re-rooted Ext trees.

Focal points are the internal nodes that are alone at their length, plus
any node an extension explicitly marked (type 1 extensions mark the node
they grow above).  Potential focal points are the focal points, the nodes
alone at their length, and the terminal nodes at the top of the tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    BudgetExhausted,
    EliminationEmpty,
    LengthMismatch,
    NotAnLTree,
    NotInDomain,
    PreconditionFailed,
)
from .stages import StagedTable

Str = tuple[int, ...]


def fmt(s: Sequence[int]) -> str:
    return "<" + ",".join(map(str, s)) + ">"


def parse_str(text: str) -> Str:
    body = text.strip()
    if not (body.startswith("<") and body.endswith(">")):
        raise ValueError(f"bad string literal {text!r}")
    body = body[1:-1].strip()
    return tuple(int(p) for p in body.split(",")) if body else ()


def strkey(s: Str) -> tuple[int, Str]:
    """The global (length, lexicographic) order."""
    return (len(s), s)


def is_prefix(a: Sequence[int], b: Sequence[int]) -> bool:
    return len(a) <= len(b) and tuple(b[: len(a)]) == tuple(a)


# ---------------------------------------------------------------- the tree value


@dataclass(frozen=True, eq=False)
class TreeMap:
    images: Mapping[Str, Str]
    table: StagedTable
    offset: int = 0
    marks: frozenset = frozenset()
    range_table: StagedTable | None = None

    # -- basic access

    def __call__(self, sigma: Str) -> Str | None:
        return self.images.get(tuple(sigma))

    def __contains__(self, sigma) -> bool:
        return tuple(sigma) in self.images

    def __eq__(self, other) -> bool:
        return isinstance(other, TreeMap) and dict(self.images) == dict(other.images) and self.marks == other.marks

    def __hash__(self):
        return hash(tuple(sorted(self.images.items())))

    def __len__(self) -> int:
        return len(self.images)

    @property
    def empty(self) -> bool:
        return not self.images

    @property
    def rtable(self) -> StagedTable:
        return self.range_table or self.table

    def letters(self, position: int) -> tuple[int, ...]:
        return self.table.members(position + self.offset)

    def domain(self) -> list[Str]:
        return sorted(self.images, key=strkey)

    def ran(self) -> list[Str]:
        return sorted(self.images.values(), key=strkey)

    def _inverse(self) -> dict[Str, Str]:
        inv = self.__dict__.get("_inv")
        if inv is None:
            inv = {v: k for k, v in self.images.items()}
            object.__setattr__(self, "_inv", inv)
        return inv

    def preimage(self, img: Str) -> Str | None:
        return self._inverse().get(tuple(img))

    def on(self, img: Str) -> bool:
        """``img`` is on the tree."""
        return tuple(img) in self._inverse()

    def compatible(self, s: Str) -> bool:
        return any(is_prefix(s, v) for v in self.images.values())

    @cached_property
    def depth(self) -> int:
        return max((len(k) for k in self.images), default=-1)

    @cached_property
    def _heights(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for k, v in self.images.items():
            out.setdefault(len(k), len(v))
        return out

    def H(self, n: int) -> int | None:
        """Height function: image length at domain length ``n``."""
        return self._heights.get(n)

    @property
    def ht(self) -> int | None:
        return None if self.empty else self.H(self.depth)

    @cached_property
    def _kids(self) -> dict[Str, list[Str]]:
        kids: dict[Str, list[Str]] = {}
        for k in sorted(self.images, key=strkey):
            if k:
                kids.setdefault(k[:-1], []).append(k)
        return kids

    @cached_property
    def _level_count(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for k in self.images:
            counts[len(k)] = counts.get(len(k), 0) + 1
        return counts

    def children(self, sigma: Str) -> list[Str]:
        return list(self._kids.get(tuple(sigma), ()))

    def terminal(self, sigma: Str) -> bool:
        return not self.children(sigma)

    def at_length(self, n: int) -> list[Str]:
        return sorted((k for k in self.images if len(k) == n), key=strkey)

    def top_terminal(self, sigma: Str) -> bool:
        return len(sigma) == self.depth and self.terminal(sigma)

    def root(self) -> Str | None:
        return self.images.get(())

    def with_images(self, images: Mapping[Str, Str], marks: Iterable[Str] | None = None) -> "TreeMap":
        return TreeMap(dict(images), self.table, self.offset, frozenset(self.marks if marks is None else marks), self.range_table)

    def dump(self) -> str:
        """One line per node, ``domain -> image``, in domain order."""
        lines = [f"{fmt(k)} -> {fmt(self.images[k])}" for k in self.domain()]
        return "\n".join(lines) + ("\n" if lines else "")

    # -- focal structure

    @cached_property
    def _focal(self) -> frozenset:
        counts, kids = self._level_count, self._kids
        return frozenset(k for k in self.images if k in kids and (counts[len(k)] == 1 or k in self.marks))

    @cached_property
    def _potential(self) -> frozenset:
        counts, kids, top = self._level_count, self._kids, self.depth
        return frozenset(
            k for k in self.images
            if counts[len(k)] == 1 or k in self.marks or (k not in kids and len(k) == top)
        )

    def focal_points(self) -> list[Str]:
        return sorted(self._focal, key=strkey)

    def potential_focal_points(self) -> list[Str]:
        return sorted(self._potential, key=strkey)

    def is_focal(self, img: Str) -> bool:
        return self.preimage(img) in self._focal

    def is_potential_focal(self, img: Str) -> bool:
        return self.preimage(img) in self._potential

    def is_merely_potential(self, img: Str) -> bool:
        return self.is_potential_focal(img) and not self.is_focal(img)

    def shortening(self, img: Str) -> Str | None:
        """Domain string of the longest focal point whose image is inside ``img``."""
        best = None
        for k in self._focal:
            if is_prefix(self.images[k], img) and (best is None or len(k) > len(best)):
                best = k
        return best

    def plateau_bounds(self) -> list[int]:
        """Focal lengths followed by the top, deduplicated and sorted."""
        if self.empty:
            return []
        bounds = {len(self.images[k]) for k in self._focal}
        bounds.add(self.ht)
        return sorted(bounds)

    def in_last_plateau(self, img: Str) -> bool:
        b = self.plateau_bounds()
        if not b or not self.compatible(img):
            return False
        lo = b[-2] if len(b) > 1 else 0
        return lo <= len(img) <= b[-1]


# ---------------------------------------------------------------- analysis


@dataclass
class TreeReport:
    levels: dict[int, tuple[int, int]]
    focal_points: list[Str]
    potential_focal_points: list[Str]
    plateaus: dict[int, tuple[int, int]]
    height: int | None
    weakly_uniform: bool
    witness: object = None


def tree_violation(T: TreeMap) -> str | None:
    """Why ``T`` is not a tree (domain closure, S membership, isomorphism, uniform heights)."""
    heights: dict[int, int] = {}
    for k, v in T.images.items():
        if k and k[:-1] not in T.images:
            return f"domain not closed under prefixes at {fmt(k)}"
        for p, letter in enumerate(k):
            if letter not in set(T.letters(p)):
                return f"{fmt(k)} leaves S at position {p}"
        if heights.setdefault(len(k), len(v)) != len(v):
            return f"images at domain length {len(k)} differ in length"
        if k:
            pv = T.images[k[:-1]]
            if not (len(pv) < len(v) and v[: len(pv)] == pv):
                return f"image of {fmt(k)} does not properly extend its parent image"
    for k in T.images:
        kids = T.children(k)
        imgs = [T.images[c] for c in kids]
        for i in range(len(imgs)):
            for j in range(i + 1, len(imgs)):
                if is_prefix(imgs[i], imgs[j]) or is_prefix(imgs[j], imgs[i]):
                    return f"children of {fmt(k)} have comparable images"
    return None


def fullness_witness(T: TreeMap) -> Str | None:
    """First string missing from a plateau that should be full."""
    focal = T.focal_points()
    fset = set(focal)
    for f in focal:
        above = [g for g in focal if len(g) > len(f) and g[: len(f)] == f]
        nxt = [g for g in above if not any(h in fset and len(f) < len(h) < len(g) and g[: len(h)] == h for h in above)]
        if nxt:
            limit = min(len(g) for g in nxt)
        else:
            limit = max(len(k) for k in T.images if k[: len(f)] == f)
        frontier = [f]
        while frontier:
            nxt_frontier = []
            for s in frontier:
                if len(s) >= limit:
                    continue
                for a in T.letters(len(s)):
                    c = s + (a,)
                    if c not in T.images:
                        return c
                    nxt_frontier.append(c)
            frontier = nxt_frontier
    return None


def analyze_tree(T: TreeMap) -> TreeReport:
    levels: dict[int, tuple[int, int]] = {}
    if not T.empty:
        h0 = T.H(0)
        if h0:
            levels[-1] = (0, h0)
        for i in range(T.depth):
            levels[i] = (T.H(i), T.H(i + 1))
    plateaus: dict[int, tuple[int, int]] = {}
    if -1 in levels:
        plateaus[-1] = levels[-1]
    b = T.plateau_bounds()
    for i in range(len(b) - 1):
        plateaus[i] = (b[i], b[i + 1])
    problem = tree_violation(T)
    missing = None if problem else fullness_witness(T)
    return TreeReport(
        levels,
        T.focal_points(),
        T.potential_focal_points(),
        plateaus,
        T.ht,
        problem is None and missing is None,
        problem or missing,
    )


def identity_tree(table: StagedTable, height: int, offset: int = 0) -> TreeMap:
    """``Id_t``: every string of ``S(Theta)`` up to length ``height`` sent to itself."""
    images: dict[Str, Str] = {(): ()}
    frontier = [()]
    for p in range(height):
        frontier = [s + (a,) for s in frontier for a in table.members(p + offset)]
        for s in frontier:
            images[s] = s
    return TreeMap(images, table, offset)


def single_node(table: StagedTable, image: Str, offset: int = 0) -> TreeMap:
    return TreeMap({(): tuple(image)}, table, offset)


def empty_tree(table: StagedTable, offset: int = 0) -> TreeMap:
    return TreeMap({}, table, offset)


# ---------------------------------------------------------------- extensions


def _strings_above(T: TreeMap, start: Str, upto: int) -> list[Str]:
    out = []
    frontier = [tuple(start)]
    while frontier:
        nxt = []
        for s in frontier:
            if len(s) >= upto:
                continue
            for a in T.letters(len(s)):
                c = s + (a,)
                out.append(c)
                nxt.append(c)
        frontier = nxt
    return out


def extend_type(
    T: TreeMap, parent: TreeMap, alpha: Str, kind: int, target_height: int | None = None,
    start: Str | None = None,
) -> TreeMap:
    """Type 0 (grow), 1 (create) or 2 (combine) extension of ``T`` for ``alpha`` within ``parent``.

    New nodes copy their siblings sideways when a sibling already has the
    child, and otherwise stretch a terminal string ``xi`` to ``xi * a^n`` at
    ``target_height`` on the parent.  ``start`` overrides the node a type 2
    extension combines above (by default the shortening of ``alpha``).
    """
    alpha = tuple(alpha)
    eta = T.preimage(alpha)
    if eta is None:
        raise PreconditionFailed(kind, ("not on the tree", alpha))
    ht = T.ht
    if kind in (0, 1):
        if target_height is None:
            target_height = parent.ht
        if target_height is None or target_height <= ht:
            raise PreconditionFailed(kind, ("target height not above the tree", target_height, ht))
        if parent.ht is None or target_height > parent.ht:
            raise PreconditionFailed(kind, ("parent too short", target_height, parent.ht))
    if kind == 0:
        if not len(alpha) < ht:
            raise PreconditionFailed(0, ("alpha at the top", alpha))
    elif kind == 1:
        if not T.is_merely_potential(alpha):
            raise PreconditionFailed(1, ("not a merely potential focal point", alpha))
        if parent.on(alpha) and parent.terminal(parent.preimage(alpha)):
            raise PreconditionFailed(1, ("terminal on the parent", alpha))
    elif kind != 2:
        raise ValueError(f"unknown extension type {kind}")
    if kind == 1:
        start = eta
    elif start is None or kind != 2:
        start = T.shortening(alpha)
        if start is None:
            raise PreconditionFailed(kind, ("no focal point below", alpha))
    m = T.depth
    top = m + 1 if kind in (0, 1) else m
    images = dict(T.images)
    original: dict[int, list[Str]] = {}
    for k in sorted(T.images, key=strkey):
        original.setdefault(len(k), []).append(k)
    for lam in _strings_above(T, start, top):
        if lam in images:
            continue
        lam_parent, a = lam[:-1], lam[-1]
        pimg = images.get(lam_parent)
        tau = parent.preimage(pimg) if pimg is not None else None
        if tau is None:
            raise PreconditionFailed(kind, ("parent image not on the enclosing tree", lam))
        if len(lam) <= m:
            img = _copy_sideways(T, images, original, parent, lam, tau)
            if img is None:
                img = _stretch(parent, tau, a, T.H(len(lam)))
        else:
            img = _stretch(parent, tau, a, target_height)
        if img is None:
            raise PreconditionFailed(kind, ("enclosing tree is not full enough", lam))
        images[lam] = img
    marks = set(T.marks)
    if kind == 1:
        marks.add(eta)
    else:
        # growing or combining above ``start`` merges every plateau over it
        marks = {k for k in marks if not (len(k) > len(start) and k[: len(start)] == start)}
    return T.with_images(images, marks)


def _copy_sideways(T, images, original, parent, lam, tau) -> Str | None:
    n, a = len(lam) - 1, lam[-1]
    want = T.H(len(lam))
    for sib in original.get(n, ()):
        child = sib + (a,)
        if child not in images:
            continue
        tau0 = parent.preimage(images[sib])
        tchild = parent.preimage(images[child])
        if tau0 is None or tchild is None or tchild[: len(tau0)] != tau0:
            continue
        gamma = tchild[len(tau0):]
        img = parent(tau + gamma)
        if img is not None and (want is None or len(img) == want):
            return img
    return None


def _stretch(parent: TreeMap, tau: Str, a: int, height: int | None) -> Str | None:
    if height is None:
        return None
    xi = tuple(tau)
    while True:
        xi = xi + (a,)
        img = parent(xi)
        if img is None:
            return None
        if len(img) == height:
            return img
        if len(img) > height:
            return None


def extension_kind(before: TreeMap, after: TreeMap, alpha: Str) -> int | None:
    """Which type (0, 1 or 2) of extension for ``alpha`` turns ``before`` into ``after``, if any."""
    added = set(after.images) - set(before.images)
    if not added or any(before.images[k] != after.images[k] for k in before.images):
        return None
    eta = before.preimage(alpha)
    if eta is None:
        return None
    m = before.depth
    star = before.shortening(alpha)
    deepest = max(len(k) for k in added)
    for kind, start in ((1, eta), (0, star), (2, star)):
        if start is None:
            continue
        if kind == 1 and not before.is_merely_potential(alpha):
            continue
        if kind == 0 and not len(alpha) < before.ht:
            continue
        top = m + 1 if kind in (0, 1) else m
        if deepest != top:
            continue
        want = {s for s in _strings_above(before, start, top) if s not in before.images}
        if want == added:
            return kind
    return None


# ---------------------------------------------------------------- Ext, transfer, projections


def ext_subtree(T: TreeMap, xi: Str) -> TreeMap:
    """``Ext(T, xi)``: the part of ``T`` above ``xi``, re-rooted so ``xi`` becomes the root."""
    xi = tuple(xi)
    if xi not in T.images:
        raise NotInDomain(f"{fmt(xi)} is not in the domain")
    n = len(xi)
    images = {k[n:]: v for k, v in T.images.items() if k[:n] == xi}
    marks = frozenset(k[n:] for k in T.marks if k[:n] == xi)
    return TreeMap(images, T.table, T.offset + n, marks, T.range_table)


def transfer(sigma: Str, tau: Str, rho: Str) -> Str:
    """``tr(sigma -> tau; rho)``: ``tau`` followed by the part of ``rho`` beyond ``|tau|``."""
    if len(sigma) != len(tau):
        raise LengthMismatch(f"|sigma|={len(sigma)} but |tau|={len(tau)}")
    if not is_prefix(sigma, rho):
        raise NotInDomain("sigma is not an initial segment of rho")
    return tuple(tau) + tuple(rho[len(tau):])


def project(sigma: Sequence[int], table, i: int) -> Str:
    """Coordinatewise least ``i``-representative."""
    rep = table.rel[i].rep
    return tuple(rep[v] for v in sigma)


def strings_related(table, k: int, s: Sequence[int], t: Sequence[int]) -> bool:
    """``s ~_k t`` on their common length."""
    rep = table.rel[k].rep
    return all(rep[a] == rep[b] for a, b in zip(s, t))


def signature(T: TreeMap, g_prefix: Sequence[int]) -> Str:
    """Longest domain string whose image is an initial segment of ``g_prefix``."""
    best: Str = ()
    found = False
    for k, v in T.images.items():
        if is_prefix(v, g_prefix) and (not found or len(k) > len(best)):
            best, found = k, True
    if not found:
        raise NotInDomain("no image lies below the given prefix")
    return best


# ---------------------------------------------------------------- functionals


@dataclass(frozen=True)
class StringFunctional:
    """A monotone oracle functional; ``rule`` returns (value or None, steps used)."""

    name: str
    rule: Callable[[Str, int], tuple[int | None, int]] = field(compare=False)

    def __call__(self, sigma: Sequence[int], x: int, budget: int | None = None) -> int | None:
        value, steps = self.rule(tuple(sigma), x)
        if value is None or (budget is not None and steps > budget):
            return None
        return value

    def __repr__(self) -> str:
        return f"StringFunctional({self.name})"


def constant(c: int) -> StringFunctional:
    return StringFunctional(f"const({c})", lambda s, x: (c, 1))


def never() -> StringFunctional:
    return StringFunctional("never", lambda s, x: (None, 0))


def reader(position: Callable[[int], int] | None = None, name: str | None = None) -> StringFunctional:
    """``sigma(position(x))``, diverging while the string is too short."""
    pos = position or (lambda x: x)

    def rule(s, x):
        p = pos(x)
        return (s[p], p + 1) if p < len(s) else (None, p + 1)

    return StringFunctional(name or "read", rule)


def projected_reader(table, k: int, position: Callable[[int], int] | None = None, name: str | None = None) -> StringFunctional:
    """``sigma(position(x))^[k]``."""
    pos = position or (lambda x: x)
    rep = table.rel[k].rep

    def rule(s, x):
        p = pos(x)
        return (rep[s[p]], p + 1) if p < len(s) else (None, p + 1)

    return StringFunctional(name or f"read^[{k}]", rule)


def lookup(entries: Mapping[tuple[Str, int], int], name: str = "lookup") -> StringFunctional:
    """Converges on ``x`` once ``sigma`` extends a listed prefix for ``x`` (shortest prefix wins)."""
    ordered = sorted(entries.items(), key=lambda kv: (kv[0][1], len(kv[0][0]), kv[0][0]))

    def rule(s, x):
        for (prefix, y), val in ordered:
            if y == x and is_prefix(prefix, s):
                return val, len(prefix) + 1
        return None, len(s) + 1

    return StringFunctional(name, rule)


def delayed(f: StringFunctional, lag: int) -> StringFunctional:
    """``f`` but converging only once ``lag`` more positions are available."""

    def rule(s, x):
        value, steps = f.rule(s, x)
        if value is None:
            return None, steps + lag
        need = steps + lag
        return (value, need) if len(s) >= need - 1 else (None, need)

    return StringFunctional(f"delay{lag}({f.name})", rule)


def compose_after(post: Callable[[int], int], f: StringFunctional, name: str | None = None) -> StringFunctional:
    def rule(s, x):
        value, steps = f.rule(s, x)
        return (None if value is None else post(value)), steps

    return StringFunctional(name or f"post({f.name})", rule)


def on_projection(f: StringFunctional, table, b: int) -> StringFunctional:
    """``{e}(sigma^<b>; x)``."""

    def rule(s, x):
        return f.rule(project(s, table, b), x)

    return StringFunctional(f"{f.name}^<{b}>", rule)


# ---------------------------------------------------------------- e-splittings


def default_bound(T: TreeMap) -> int:
    return (T.ht or 0) + 1


def split_on(Phi: StringFunctional, s: Str, t: Str, bound: int, budget: int | None = None) -> int | None:
    """Least ``x < bound`` with both computations convergent and different."""
    for x in range(bound):
        a, b = Phi(s, x, budget), Phi(t, x, budget)
        if a is not None and b is not None and a != b:
            return x
    return None


def find_e_splitting(
    Phi: StringFunctional,
    T: TreeMap,
    rho: Str,
    mod_a: int | None = None,
    budget: int | None = None,
    bound: int | None = None,
) -> tuple[Str, Str, int] | None:
    """Least ``(sigma, tau, x)`` on ``T`` properly above ``rho`` that e-splits (mod ``mod_a``)."""
    rho = tuple(rho)
    bound = default_bound(T) if bound is None else bound
    cands = [v for v in T.ran() if len(v) > len(rho) and v[: len(rho)] == rho]
    table = T.rtable
    # one evaluation per (string, argument); equal value rows cannot split
    rows = [tuple(Phi(s, x, budget) for x in range(bound)) for s in cands]
    for i, s in enumerate(cands):
        for j in range(i + 1, len(cands)):
            if rows[i] == rows[j]:
                continue
            t = cands[j]
            if mod_a is not None and not strings_related(table, mod_a, s, t):
                continue
            for x, (a, b) in enumerate(zip(rows[i], rows[j])):
                if a is not None and b is not None and a != b:
                    return s, t, x
    return None


def is_e_splitting_level(
    T: TreeMap, Phi: StringFunctional, k: int, level: int, budget: int | None = None, bound: int | None = None
) -> tuple[bool, object]:
    """Level ``level`` splits every pair of length ``level + 1`` domain strings that differ mod ``k``."""
    bound = default_bound(T) if bound is None else bound
    nodes = T.at_length(level + 1)
    for i, xi in enumerate(nodes):
        for eta in nodes[i + 1:]:
            if strings_related(T.table, k, xi, eta):
                continue
            if split_on(Phi, T.images[xi], T.images[eta], bound, budget) is None:
                return False, (xi, eta)
    return True, None


@dataclass
class SplittingReport:
    ok: bool
    no_splittings_mod_k: bool
    levels: list[tuple[int, int, int, bool]]  # (stage index, plateau, level, is e-splitting)
    witness: object = None

    def __bool__(self) -> bool:
        return self.ok


def check_weak_e_splitting(
    stages: Sequence[TreeMap], Phi: StringFunctional, k: int, budget: int | None = None, bound: int | None = None
) -> SplittingReport:
    if not stages:
        return SplittingReport(True, True, [])
    final = stages[-1]
    bound = default_bound(final) if bound is None else bound
    cands = final.ran()
    table = final.rtable
    witness = None
    for i, s in enumerate(cands):
        for t in cands[i + 1:]:
            if strings_related(table, k, s, t):
                x = split_on(Phi, s, t, bound, budget)
                if x is not None:
                    witness = ("splitting mod k", s, t, x)
                    break
        if witness:
            break
    levels = []
    for idx, T in enumerate(stages):
        if T.empty:
            continue
        b = T.plateau_bounds()
        for p in range(len(b) - 1):
            end = b[p + 1]
            lev = next((j for j in range(T.depth) if T.H(j + 1) == end), None)
            if lev is None:
                continue
            ok, bad = is_e_splitting_level(T, Phi, k, lev, budget, bound)
            levels.append((idx, p, lev, ok))
            if not ok and witness is None:
                witness = ("level", idx, lev, bad)
    ok = witness is None
    return SplittingReport(ok, not (witness and witness[0] == "splitting mod k"), levels, witness)


# ---------------------------------------------------------------- computing through a splitting tree


def computation_forward(
    Phi: StringFunctional,
    stages: Sequence[TreeMap],
    k: int,
    g_k_prefix: Sequence[int],
    x: int,
    budget: int | None = None,
) -> int:
    """``Phi^g(x)`` from ``g^<k>`` alone: any convergent ``sigma ~_k g`` on the tree gives the answer."""
    g_k = tuple(g_k_prefix)
    for T in stages:
        table = T.rtable
        for s in T.ran():
            if len(s) > len(g_k):
                break
            if project(s, table, k) != g_k[: len(s)]:
                continue
            val = Phi(s, x, budget)
            if val is not None:
                return val
    raise BudgetExhausted(f"no convergent string ~_{k} the prefix for x={x}")


@dataclass
class BackwardReport:
    sigmas: list[Str]
    eliminated: list[int]
    arbitrary: list[int]  # steps where every candidate was eliminated


def computation_backward(
    Phi: StringFunctional,
    stages: Sequence[TreeMap],
    k: int,
    phi_g: Callable[[int], int | None] | Mapping[int, int],
    steps: int,
    budget: int | None = None,
    bound: int | None = None,
    strict: bool = False,
) -> BackwardReport:
    """Recover ``sigma_0, ..., sigma_steps`` with ``sigma_j ~_k g`` from the values of ``Phi^g``."""
    value = phi_g.get if isinstance(phi_g, Mapping) else phi_g
    T0 = stages[0]
    if T0.empty:
        raise BudgetExhausted("the first stage is empty")
    sigmas = [T0.images[()]]
    xis: list[Str] = [()]
    eliminated, arbitrary = [], []
    for j in range(steps):
        sigma = sigmas[-1]
        picked = None
        for T in stages:
            bnd = default_bound(T) if bound is None else bound
            for r in range(T.depth):
                v = T.H(r + 1)
                if v <= len(sigma):
                    continue
                if not is_e_splitting_level(T, Phi, k, r, budget, bnd)[0]:
                    continue
                if not any(len(t) == v and strings_related(T.rtable, k, t, sigma) for t in T.ran()):
                    continue
                picked = (T, r, v, bnd)
                break
            if picked:
                break
        if picked is None:
            raise BudgetExhausted(f"no e-splitting level above length {len(sigma)}")
        T, r, v, bnd = picked
        tau = next(t for t in T.ran() if len(t) == v and strings_related(T.rtable, k, t, sigma))
        rho = tau[: len(sigma)]
        cands = [t for t in T.ran() if len(t) == v and is_prefix(rho, t)]
        survivors = []
        for mu in cands:
            bad = False
            for x in range(bnd):
                got = Phi(mu, x, budget)
                want = value(x)
                if got is not None and want is not None and got != want:
                    bad = True
                    break
            if not bad:
                survivors.append(mu)
        eliminated.append(len(cands) - len(survivors))
        if not survivors:
            if strict:
                raise EliminationEmpty(f"step {j + 1}: every candidate eliminated")
            arbitrary.append(j + 1)
            survivors = cands
        mu = survivors[0]
        dom = T.preimage(mu)
        xi = dom[: j + 1]
        sigmas.append(T.images[xi])
        xis.append(xi)
    return BackwardReport(sigmas, eliminated, arbitrary)


# ---------------------------------------------------------------- L-trees


@dataclass
class LTreeReport:
    parent_signature: Str
    subtree_signature: Str
    repeats: list[int]
    signature_match: bool
    projection_match: bool


def l_tree_repeats(P: TreeMap, U: TreeMap, min_repeat: Callable[[int], int] | None = None) -> dict[Str, tuple[Str, int]]:
    """Check the shape ``U(eta * a) = P(xi * a^n)``; returns ``eta -> (xi, n)`` for each non-root node."""
    if U.empty or not P.on(U.images[()]):
        raise NotAnLTree("the root is not on the parent")
    out: dict[Str, tuple[Str, int]] = {}
    for eta in U.domain():
        xi = P.preimage(U.images[eta])
        if xi is None:
            raise NotAnLTree(f"{fmt(eta)} is not sent onto the parent")
        if not eta:
            out[eta] = (xi, len(xi))
            continue
        pxi = P.preimage(U.images[eta[:-1]])
        tail = xi[len(pxi):]
        a = eta[-1]
        if xi[: len(pxi)] != pxi or not tail or any(c != a for c in tail):
            raise NotAnLTree(f"{fmt(eta)} is not a repetition of its last letter on the parent")
        need = min_repeat(len(eta) - 1) if min_repeat else 1
        if len(tail) < need:
            raise NotAnLTree(f"{fmt(eta)} repeats {len(tail)} < {need} times")
        out[eta] = (xi, len(tail))
    return out


def l_subtree_transfer(
    P: TreeMap,
    U: TreeMap,
    g_prefix: Sequence[int],
    b: int,
    phi_b: int,
    letter_map: Callable[[int], int] | None = None,
    parent_table=None,
    sub_table=None,
    min_repeat: Callable[[int], int] | None = None,
) -> LTreeReport:
    """Translate between the parent signature and the L-subtree signature of ``g``.

    The parent signature is the subtree signature with each letter repeated
    as many times as the subtree's level spans on the parent.
    """
    shape = l_tree_repeats(P, U, min_repeat)
    sig_u = signature(U, g_prefix)
    sig_p = signature(P, g_prefix)
    root_xi = shape[()][0]
    repeats = [shape[sig_u[: n + 1]][1] for n in range(len(sig_u))]
    rebuilt = list(root_xi)
    for a, n in zip(sig_u, repeats):
        rebuilt += [a] * n
    rebuilt = tuple(rebuilt)
    signature_match = rebuilt == sig_p[: len(rebuilt)] and len(sig_p) - len(rebuilt) < (repeats[-1] if repeats else 1) + 1
    ptab = parent_table or P.table
    utab = sub_table or U.table
    lm = letter_map or (lambda v: v)
    proj_u = project([lm(v) for v in sig_u], utab, phi_b)
    proj_p = project(sig_p[len(root_xi):], ptab, b)
    expanded = []
    for a, n in zip(proj_u, repeats):
        expanded += [a] * n
    projection_match = tuple(expanded[: len(proj_p)]) == proj_p[: len(expanded)]
    return LTreeReport(sig_p, sig_u, repeats, signature_match, projection_match)
