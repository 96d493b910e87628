"""Seeded instance generators for the interpolation checks.

Every generator takes an explicit ``random.Random`` seed so the CLI and
the test suite draw exactly the same instances.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

from .algebra import LatticeTable
from .lattice import boolean_square, catalog_lattice, chain
from .partition import Partition
from .pudlak import pudlak_stage
from .stages import UNBOUNDED, StagedTable
from .trees import StringFunctional, TreeMap, identity_tree, on_projection, reader

Str = tuple[int, ...]

DEFAULT_SEED = 20240601


@lru_cache(maxsize=None)
def staged_fixture(name: str, stage: int) -> StagedTable:
    """The staged table of a catalog lattice's Pudlák graph at ``stage`` (memoized)."""
    return StagedTable.from_graph(pudlak_stage(catalog_lattice(name), stage, budget=100_000))


@dataclass(frozen=True)
class GlbInstance:
    fixture: str
    a: int
    b: int
    c: int
    sigma: Str
    tau: Str
    rho: Str


@dataclass(frozen=True)
class ExtendInstance:
    fixture: str
    m: int
    u: int
    v: int
    lam: Str
    lam2: Str


def _related_choice(rng: random.Random, S: StagedTable, k: int, w: int, stage: int) -> int:
    return rng.choice([z for z in S.members(stage) if S.related(k, z, w)])


def glb_instances(fixtures: tuple[str, ...], count: int, seed: int = DEFAULT_SEED, stage: int = 2) -> list[GlbInstance]:
    """``count`` instances; strings have length 1 to 3 and deepen stage by stage.

    Coordinate ``x`` is drawn from stage ``x`` so that its meet
    interpolants can come from one stage deeper.
    """
    rng = random.Random(seed)
    out = []
    for r in range(count):
        name = fixtures[r % len(fixtures)]
        S = staged_fixture(name, stage)
        L = S.lattice
        a, b = rng.choice(L.elements), rng.choice(L.elements)
        c = L.meet[a][b]
        n = rng.randint(1, 3)
        sigma = (rng.choice(S.members(0)),)
        tau = tuple(rng.choice(S.members(min(x, stage - 1))) for x in range(n))
        rho = tuple(_related_choice(rng, S, c, tau[x], min(x, stage - 1)) for x in range(n))
        out.append(GlbInstance(name, a, b, c, sigma, tau, rho))
    return out


def extend_instances(
    fixtures: tuple[str, ...], count: int, seed: int = DEFAULT_SEED, stage: int = 2, m: int = 0
) -> list[ExtendInstance]:
    """``count`` instances with ``(u, v)`` in stage ``m`` and ``lam2`` related to ``lam`` modulo the join of ``(u, v)``."""
    rng = random.Random(seed)
    out = []
    for r in range(count):
        name = fixtures[r % len(fixtures)]
        S = staged_fixture(name, stage)
        L = S.lattice
        u, v = rng.sample(S.members(m), 2)
        gamma = L.join_all([k for k in L.elements if S.related(k, u, v)])
        n = rng.randint(1, 3)
        lam = tuple(rng.choice(S.members(min(x, 1))) for x in range(n))
        lam2 = tuple(_related_choice(rng, S, gamma, lam[x], min(x, 1)) for x in range(n))
        out.append(ExtendInstance(name, m, u, v, lam, lam2))
    return out


# ---------------------------------------------------------------- planted-branch computation fixtures


@dataclass(frozen=True)
class ComputationFixture:
    """A weak e-splitting tree for ``k`` with a planted branch of the given depth."""

    name: str
    stages: tuple[TreeMap, ...]
    functional: StringFunctional
    k: int
    planted: Str

    @property
    def table(self) -> StagedTable:
        return self.stages[-1].rtable


def square_table() -> StagedTable:
    """``2x2`` on the carrier ``{0,1} x {0,1}`` coded as ``2i + j``; ``a`` keeps ``i``, ``b`` keeps ``j``.

    Points are born at stages 0, 1, 3, 3, which keeps the fixture trees small.
    """
    L = boolean_square()
    a, b = L.index_of("a"), L.index_of("b")
    rel = [None] * L.n
    rel[L.bottom] = Partition.all(4)
    rel[L.top] = Partition.identity(4)
    rel[a] = Partition.from_blocks(4, [[0, 1], [2, 3]])
    rel[b] = Partition.from_blocks(4, [[0, 2], [1, 3]])
    T = LatticeTable.build(L, rel)
    return StagedTable(L, T.rel, (0, 1, 3, 3), UNBOUNDED)


def two_point_table() -> StagedTable:
    """The 2-chain on two points, both present from stage 0."""
    L = chain(2)
    return StagedTable.constant(LatticeTable.build(L, [Partition.all(2), Partition.identity(2)]))


def chain3_table() -> StagedTable:
    """The 3-chain on three points, born at stages 0, 1, 2."""
    L = chain(3)
    mid = L.index_of("c1")
    rel = [None] * L.n
    rel[L.bottom] = Partition.all(3)
    rel[L.top] = Partition.identity(3)
    rel[mid] = Partition.from_blocks(3, [[0, 1], [2]])
    T = LatticeTable.build(L, rel)
    return StagedTable(L, T.rel, (0, 1, 2), UNBOUNDED)


def _spread(table: StagedTable, height: int, filler: int) -> TreeMap:
    # sigma(0) filler sigma(1) filler ...: every image is twice as long
    images: dict[Str, Str] = {(): ()}
    frontier: list[Str] = [()]
    for p in range(height):
        frontier = [s + (v,) for s in frontier for v in table.members(p)]
        for s in frontier:
            images[s] = tuple(x for v in s for x in (v, filler))
    return TreeMap(images, table)


def _planted(letters: Str, depth: int) -> Str:
    return tuple(letters[p % len(letters)] if p < len(letters) else 0 for p in range(depth))


def computation_fixtures(depth: int = 6) -> list[ComputationFixture]:
    """Three trees with planted branches: the identity and a stretched tree on ``2x2``, and a two-stage 3-chain tree."""
    sq = square_table()
    a = sq.lattice.index_of("a")
    b = sq.lattice.index_of("b")
    ch = chain3_table()
    mid = ch.lattice.index_of("c1")
    spread = _spread(sq, depth, 0)
    return [
        ComputationFixture(
            "2x2-identity-a",
            (identity_tree(sq, depth),),
            on_projection(reader(), sq, a),
            a,
            _planted((0, 1, 1, 3, 2, 1), depth),
        ),
        ComputationFixture(
            "2x2-spread-b",
            (spread,),
            on_projection(reader(lambda x: 2 * (x // 2), "read-even"), sq, b),
            b,
            spread.images[_planted((0, 1, 0, 2, 3, 1), depth)],
        ),
        ComputationFixture(
            "3-chain-identity-mid",
            (identity_tree(ch, depth // 2), identity_tree(ch, depth)),
            on_projection(reader(), ch, mid),
            mid,
            _planted((0, 1, 2, 2, 0, 1), depth),
        ),
    ]
