import pytest
from hypothesis import given, strategies as st

from latseg.algebra import (
    LatticeTable,
    UnaryAlgebra,
    c_theta,
    compose,
    congruence_lattice,
    end_principal,
    endomorphisms,
    format_table,
    homogeneity_interpolants,
    homogeneity_sweep,
    is_malcev_homogeneous,
    principal_congruence,
    replay_interpolants,
    unary_algebras,
)
from latseg.errors import CarrierTooLarge, NotALatticeTable
from latseg.lattice import chain
from latseg.partition import Partition, all_partitions, principal_equivalence

from oracles import as_pairs, congruences, orbit_count


def algebras(max_n=4, max_ops=2):
    return st.integers(1, max_n).flatmap(
        lambda n: st.lists(st.tuples(*[st.integers(0, n - 1)] * n), max_size=max_ops).map(
            lambda ops: UnaryAlgebra(n, tuple(ops))
        )
    )


def two_point_table():
    return LatticeTable.build(chain(2), [Partition.all(2), Partition.identity(2)])


def test_golden_two_point_table():
    assert two_point_table().matrix() == [[0, 0], [0, 1]]


def test_format_table_header():
    assert format_table(two_point_table()).splitlines()[0] == "# lattice-table v1"


def test_table_laws_enforced():
    with pytest.raises(NotALatticeTable):
        LatticeTable.build(chain(2), [Partition.identity(2), Partition.all(2)])


def test_no_operations_gives_all_partitions():
    T = congruence_lattice(UnaryAlgebra(3, ()))
    assert set(T.rel) == set(all_partitions(3))


def test_constant_map_on_two_points():
    T = congruence_lattice(UnaryAlgebra(2, ((0, 0),)))
    assert set(T.rel) == {Partition.all(2), Partition.identity(2)}


def test_carrier_cap():
    with pytest.raises(CarrierTooLarge):
        congruence_lattice(UnaryAlgebra(8, ()))


def test_principal_congruence_examples():
    assert principal_congruence(UnaryAlgebra(3, ()), 0, 2) == principal_equivalence(3, 0, 2)
    succ = UnaryAlgebra(3, ((1, 2, 0),))
    assert principal_congruence(succ, 0, 1) == Partition.all(3)


def test_endomorphisms_of_two_point_table():
    ends = endomorphisms(two_point_table())
    assert ends == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_end_principal_and_c_theta_examples():
    T = two_point_table()
    assert end_principal(T, [(0, 1)], 0, 1) == principal_equivalence(2, 0, 1)
    assert c_theta(T, 0, 1) == Partition.all(2)
    assert c_theta(T, 1, 1) == Partition.identity(2)
    assert end_principal(T, endomorphisms(T), 0, 0) == Partition.identity(2)


def test_single_point_and_part_two_are_homogeneous():
    T1 = congruence_lattice(UnaryAlgebra(1, ()))
    assert is_malcev_homogeneous(T1, endomorphisms(T1))
    T = two_point_table()
    assert is_malcev_homogeneous(T, endomorphisms(T))


def test_interpolant_trivial_cases():
    T = two_point_table()
    ends = endomorphisms(T)
    assert homogeneity_interpolants(ends, 0, 1, 1, 1) == ([1], [])
    path, maps = homogeneity_interpolants(ends, 0, 1, 0, 1)
    assert path == [0, 1] and maps == [(0, 1)]


@given(algebras())
def test_congruences_match_oracle(A):
    T = congruence_lattice(A)
    assert {frozenset(as_pairs(p.blocks())) for p in T.rel} == {frozenset(c) for c in congruences(A.carrier_size, A.ops)}


@given(algebras(4, 1), st.data())
def test_more_operations_fewer_congruences(A, data):
    n = A.carrier_size
    extra = data.draw(st.tuples(*[st.integers(0, n - 1)] * n))
    B = UnaryAlgebra(n, A.ops + (extra,))
    assert set(congruence_lattice(B).rel) <= set(congruence_lattice(A).rel)


@given(algebras(), st.data())
def test_principal_congruence_contains_pair(A, data):
    n = A.carrier_size
    a, b = data.draw(st.integers(0, n - 1)), data.draw(st.integers(0, n - 1))
    p = principal_congruence(A, a, b)
    assert p.related(a, b)
    assert p in congruence_lattice(A).rel
    # generated: every congruence containing the pair contains p
    for q in congruence_lattice(A).rel:
        if q.related(a, b):
            assert p <= q


@given(algebras(3, 2))
def test_endomorphisms_closed_and_contain_identity(A):
    T = congruence_lattice(A)
    ends = endomorphisms(T)
    assert tuple(range(A.carrier_size)) in ends
    es = set(ends)
    for f in ends:
        for g in ends:
            assert compose(f, g) in es


@given(algebras(4, 2))
def test_end_principal_inside_c_theta(A):
    T = congruence_lattice(A)
    ends = endomorphisms(T)
    n = A.carrier_size
    for a in range(n):
        for b in range(n):
            e, c = end_principal(T, ends, a, b), c_theta(T, a, b)
            assert e <= c
            # the plain equivalence of (a, b) sits below C_Theta(a, b)
            assert principal_equivalence(n, a, b) <= c


@given(algebras(4, 2))
def test_homogeneous_with_replayed_chains(A):
    T = congruence_lattice(A)
    ends = endomorphisms(T)
    assert is_malcev_homogeneous(T, ends)
    n = A.carrier_size
    for a in range(n):
        for b in range(a + 1, n):
            for c, d in c_theta(T, a, b).pairs():
                path, maps = homogeneity_interpolants(ends, a, b, c, d)
                assert path[0] == c and path[-1] == d
                assert replay_interpolants(T, a, b, path, maps)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_symmetry_reduction_count_matches_burnside(n):
    got = sum(1 for A in unary_algebras(n, 2) if A.carrier_size == n)
    assert got == orbit_count(n, 2)


def test_sweep_small():
    rep = homogeneity_sweep(3, 2)
    assert rep.ok and rep.algebras == sum(orbit_count(n, 2) for n in (1, 2, 3))
