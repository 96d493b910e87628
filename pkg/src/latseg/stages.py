"""Sequential tables: one carrier split into nested stages.

A :class:`StagedTable` keeps the relations of the deepest available stage
and a birth index per element; stage ``j`` is the set of elements born at
or before ``j``, with the relations restricted.  For Pudlák graphs this is
sound because the equivalences stabilize (checked in the test suite).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from .algebra import LatticeTable
from .lattice import FiniteLattice
from .partition import Partition
from .pudlak import ColoredGraph, stage_equivalences

UNBOUNDED = 10**9


@dataclass(frozen=True)
class StagedTable:
    lattice: FiniteLattice
    rel: tuple[Partition, ...]
    birth: tuple[int, ...]
    max_stage: int
    graph: ColoredGraph | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_graph(cls, G: ColoredGraph) -> "StagedTable":
        return cls(G.lattice, stage_equivalences(G), tuple(v.birth for v in G.vertices), G.steps, G)

    @classmethod
    def constant(cls, T: LatticeTable) -> "StagedTable":
        """Every stage is ``T`` itself."""
        return cls(T.lattice, T.rel, (0,) * T.carrier_size, UNBOUNDED)

    @property
    def size(self) -> int:
        return len(self.birth)

    @cached_property
    def _members(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for v, b in enumerate(self.birth):
            out.setdefault(b, []).append(v)
        acc: list[int] = []
        res = {}
        for b in sorted(out):
            acc += out[b]
            res[b] = tuple(sorted(acc))
        return res

    def members(self, j: int) -> tuple[int, ...]:
        best = [b for b in self._members if b <= j]
        return self._members[max(best)] if best else ()

    def in_stage(self, v: int, j: int) -> bool:
        return self.birth[v] <= j

    def related(self, k: int, x: int, y: int) -> bool:
        rep = self.rel[k].rep
        return rep[x] == rep[y]

    def strings_related(self, k: int, s: Sequence[int], t: Sequence[int]) -> bool:
        rep = self.rel[k].rep
        return len(s) == len(t) and all(rep[a] == rep[b] for a, b in zip(s, t))

    def in_S(self, sigma: Sequence[int], offset: int = 0) -> bool:
        """``sigma(p)`` lies in stage ``p + offset`` for every position ``p``."""
        return all(self.birth[v] <= p + offset for p, v in enumerate(sigma))

    def stage_table(self, j: int) -> LatticeTable:
        pts = self.members(j)
        return LatticeTable.build(self.lattice, [p.restrict(pts) for p in self.rel], injective=False)

    def least(self, v: int, k: int) -> int:
        return self.rel[k].rep[v]

    def is_hom(self, f: dict[int, int], domain: Sequence[int]) -> tuple[bool, object]:
        """Whether ``f`` preserves every relation on ``domain`` (checked against block minima)."""
        dom = list(domain)
        for k, p in enumerate(self.rel):
            rep = p.rep
            first: dict[int, int] = {}
            for x in dom:
                r = first.setdefault(rep[x], x)
                if rep[f[x]] != rep[f[r]]:
                    return False, (k, r, x)
        return True, None
