import pytest
from hypothesis import given, strategies as st

from latseg.errors import NoHomogeneityInterpolants, PreconditionFailed
from latseg.instances import extend_instances, glb_instances, staged_fixture
from latseg.interpolation import (
    check_alternating,
    extendibility_interpolate,
    glb_interpolate,
    meet_interpolants,
    verify_extendibility,
)


@pytest.fixture(scope="module")
def m3s():
    return staged_fixture("M3", 2)


def atoms(S):
    L = S.lattice
    return [L.index_of(x) for x in "abc"]


def test_same_element_needs_no_interpolants(m3s):
    a, b, _ = atoms(m3s)
    assert meet_interpolants(m3s, a, b, 0, 3, 3) == []


def test_direct_link_when_already_related(m3s):
    a = atoms(m3s)[0]
    x = next(y for y in m3s.members(1) if y != 0 and m3s.related(a, 0, y))
    assert meet_interpolants(m3s, a, a, a, 0, x) == []


def test_atoms_of_m3_over_the_base_edge(m3s):
    a, b, _ = atoms(m3s)
    z = meet_interpolants(m3s, a, b, 0, 0, 1)
    chain = [0, *z, 1]
    assert check_alternating(m3s, a, b, chain + [1])
    assert all(m3s.in_stage(v, 1) for v in chain)


def test_meet_precondition(m3s):
    a, b, _ = atoms(m3s)
    with pytest.raises(PreconditionFailed):
        meet_interpolants(m3s, a, b, a, 0, 1)


def test_glb_equal_strings(m3s):
    a, b, _ = atoms(m3s)
    assert glb_interpolate(m3s, a, b, 0, (0,), (1, 4), (1, 4)) == [(1, 4)]


def test_glb_empty_strings(m3s):
    a, b, _ = atoms(m3s)
    assert glb_interpolate(m3s, a, b, 0, (0,), (), ()) == [()]


def test_glb_preconditions(m3s):
    a, b, _ = atoms(m3s)
    with pytest.raises(PreconditionFailed):
        glb_interpolate(m3s, a, b, a, (0,), (0,), (1,))
    with pytest.raises(PreconditionFailed):
        glb_interpolate(m3s, a, b, 0, (), (0,), (1,))


def _check_glb(inst):
    S = staged_fixture(inst.fixture, 2)
    chain = glb_interpolate(S, inst.a, inst.b, inst.c, inst.sigma, inst.tau, inst.rho)
    assert chain[0] == inst.tau and chain[-1] == inst.rho
    assert check_alternating(S, inst.a, inst.b, chain)
    # links are validated independently from the partitions' block tables
    for p in range(len(chain) - 1):
        k = inst.a if p % 2 == 0 else inst.b
        assert all(S.rel[k].related(x, y) for x, y in zip(chain[p], chain[p + 1]))
    assert all(S.in_S(inst.sigma + t) for t in chain)


@given(st.integers(0, 10_000))
def test_glb_random_instances(seed):
    for inst in glb_instances(("M3", "N5"), 3, seed):
        _check_glb(inst)


def test_extendibility_two_point_pattern():
    S = staged_fixture("2-chain", 3)
    res = extendibility_interpolate(S, 1, 0, 1, (0,), (1,))
    assert not verify_extendibility(S, 1, 0, 1, (0,), (1,), res)
    lam = res.lambdas
    assert res.t == 4
    assert lam[0] == (0,) and lam[-1] == (1,)
    # the last half-period repeats its string
    assert lam[3] == lam[4]


def test_extendibility_equal_strings():
    S = staged_fixture("M3", 2)
    res = extendibility_interpolate(S, 0, 0, 1, (1,), (1,))
    assert not verify_extendibility(S, 0, 0, 1, (1,), (1,), res)
    assert set(res.lambdas) == {(1,)}


def test_extendibility_preconditions():
    S = staged_fixture("M3", 2)
    with pytest.raises(PreconditionFailed):
        extendibility_interpolate(S, 0, 0, 1, (0,), (0, 1))
    with pytest.raises(PreconditionFailed):
        extendibility_interpolate(S, 0, 0, 0, (0,), (1,))


def test_stage_one_source_can_run_out_of_interpolants():
    # with (u, v) drawn from stage 1 a coordinate cap of stage 2 is too small here
    S = staged_fixture("M3", 2)
    with pytest.raises(NoHomogeneityInterpolants):
        extendibility_interpolate(S, 1, 1, 23, (1, 24), (1, 33))


@given(st.integers(0, 10_000))
def test_extendibility_random_instances(seed):
    for inst in extend_instances(("M3", "N5"), 2, seed):
        S = staged_fixture(inst.fixture, 2)
        res = extendibility_interpolate(S, inst.m, inst.u, inst.v, inst.lam, inst.lam2)
        assert verify_extendibility(S, inst.m, inst.u, inst.v, inst.lam, inst.lam2, res) == []
        assert res.t % 4 == 0


def test_verifier_flags_tampering():
    S = staged_fixture("M3", 2)
    (inst,) = extend_instances(("M3",), 1, 5)
    res = extendibility_interpolate(S, inst.m, inst.u, inst.v, inst.lam, inst.lam2)
    res.lambdas[-1] = tuple(0 for _ in inst.lam)
    assert verify_extendibility(S, inst.m, inst.u, inst.v, inst.lam, inst.lam2, res)
