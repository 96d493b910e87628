import pytest
from hypothesis import given, strategies as st

from latseg.errors import CarrierMismatch
from latseg.partition import (
    Partition,
    all_partitions,
    meet_all,
    partition_join,
    partition_meet,
    principal_equivalence,
)

from oracles import as_pairs, equivalence_closure


def partitions_of(n):
    return st.lists(st.integers(0, n - 1), min_size=n, max_size=n).map(
        lambda labels: Partition.from_pairs(n, [(x, y) for x in range(n) for y in range(n) if labels[x] == labels[y]])
    )


def pair_set(p):
    return as_pairs(p.blocks())


def test_join_of_two_merges():
    p = Partition.from_blocks(3, [[0, 1], [2]])
    q = Partition.from_blocks(3, [[0], [1, 2]])
    assert partition_join(p, q) == Partition.all(3)


def test_meet_of_crossing_pairs_is_identity():
    p = Partition.from_blocks(4, [[0, 1], [2, 3]])
    q = Partition.from_blocks(4, [[0, 2], [1, 3]])
    assert partition_meet(p, q) == Partition.identity(4)


def test_meet_with_identity():
    p = Partition.from_blocks(4, [[0, 3], [1, 2]])
    assert partition_meet(Partition.identity(4), p) == Partition.identity(4)


def test_principal():
    assert principal_equivalence(4, 1, 1) == Partition.identity(4)
    assert principal_equivalence(4, 0, 3) == Partition.from_blocks(4, [[0, 3], [1], [2]])


def test_carrier_mismatch():
    with pytest.raises(CarrierMismatch):
        partition_meet(Partition.identity(2), Partition.identity(3))


@pytest.mark.parametrize("n,bell", [(0, 1), (1, 1), (2, 2), (3, 5), (4, 15), (5, 52), (6, 203)])
def test_partition_counts_are_bell_numbers(n, bell):
    parts = list(all_partitions(n))
    assert len(parts) == bell and len(set(parts)) == bell


def test_restrict_reindexes():
    p = Partition.from_blocks(5, [[0, 4], [1, 2, 3]])
    assert p.restrict([4, 2, 0]) == Partition((0, 1, 0))


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(partitions_of(n), partitions_of(n))))
def test_meet_and_join_against_pair_sets(pq):
    p, q = pq
    n = p.n
    assert pair_set(partition_meet(p, q)) == pair_set(p) & pair_set(q)
    assert pair_set(partition_join(p, q)) == equivalence_closure(n, pair_set(p) | pair_set(q))


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(partitions_of(n), partitions_of(n))))
def test_lattice_laws(pq):
    p, q = pq
    assert partition_meet(p, partition_join(p, q)) == p
    assert partition_join(p, partition_meet(p, q)) == p
    assert partition_meet(p, q) <= p <= partition_join(p, q)
    assert p.refines(q) == (pair_set(p) <= pair_set(q))


@given(st.integers(1, 5).flatmap(lambda n: st.lists(partitions_of(n), max_size=4).map(lambda ps: (n, ps))))
def test_meet_all_is_intersection(nps):
    n, ps = nps
    expected = as_pairs([range(n)])
    for p in ps:
        expected &= pair_set(p)
    assert pair_set(meet_all(n, ps)) == expected
