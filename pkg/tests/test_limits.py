import pytest
from hypothesis import given, strategies as st

from latseg.errors import MalformedTable, RecolorCollapse
from latseg.lattice import UslHomomorphism, boolean_square, catalog_lattice, chain, galois_adjoint, m3
from latseg.limits import (
    LatticeSequence,
    PresentationTables,
    case_of,
    decode,
    direct_limit_prefix,
    embed_table,
    encode_case1,
    encode_case2,
    format_sequence,
    parse_sequence,
    permissibility_machine,
    recolor,
    sequential_array,
    unpair,
)
from latseg.pudlak import ORIGINAL, pudlak_stage

from oracles import components


def top_only(dst):
    return UslHomomorphism(chain(2), dst, (0, dst.top))


def test_identity_embedding():
    G = pudlak_stage(m3(), 1)
    rep = embed_table(G, UslHomomorphism.identity(m3()))
    assert rep.holds and rep.injection == tuple(range(G.n_vertices))


def test_chain_into_m3_recolors_to_bottom():
    phi = top_only(m3())
    G = pudlak_stage(m3(), 1)
    H = recolor(G, phi)
    assert {e.color for e in H.edges} == {0}
    assert embed_table(G, phi).holds


@pytest.mark.parametrize("target", ["M3", "2x2", "N5", "3-chain"])
@pytest.mark.parametrize("stage", [0, 1, 2])
def test_biconditional_against_components(target, stage):
    dst = catalog_lattice(target)
    phi = top_only(dst)
    G = pudlak_stage(dst, stage)
    assert embed_table(G, phi).holds
    # independent route: components of the recolored and original colourings
    star = galois_adjoint(phi).map
    n = G.n_vertices
    for a in phi.source.elements:
        left = components(n, [(e.u, e.v) for e in G.edges if dst.le(phi(a), e.color)])
        right = components(n, [(e.u, e.v) for e in G.edges if phi.source.le(a, star[e.color])])
        assert left == right


def test_recolored_colors_are_fixed_by_the_round_trip():
    phi = UslHomomorphism(chain(3), boolean_square(), (0, boolean_square().index_of("a"), 3))
    star = galois_adjoint(phi).map
    H = recolor(pudlak_stage(boolean_square(), 1), phi)
    for e in H.edges:
        assert star[phi(e.color)] == e.color


def test_recolor_collapse_detected():
    from dataclasses import replace

    L = boolean_square()
    G = pudlak_stage(L, 1)
    # only a top-colored edge can be sent to the top, so plant one
    G.edges[1] = replace(G.edges[1], color=L.top)
    with pytest.raises(RecolorCollapse):
        recolor(G, top_only(L))


def test_sequence_round_trip():
    seq = LatticeSequence((chain(2), m3(), m3()), (top_only(m3()), UslHomomorphism.identity(m3())))
    back = parse_sequence(format_sequence(seq))
    assert [L.leq for L in back.lattices] == [L.leq for L in seq.lattices]
    assert [h.map for h in back.homs] == [h.map for h in seq.homs]


def test_sequence_errors():
    with pytest.raises(MalformedTable):
        parse_sequence("lattice 0\n2\n0 <= 1\n")
    with pytest.raises(MalformedTable):
        parse_sequence("lattice 0\n2\n0 <= 1\nend\nlattice 1\n2\n0 <= 1\nend\nhom 0: 0->0\n")


def test_constant_limit_is_the_lattice():
    lim = direct_limit_prefix(LatticeSequence.constant(m3(), 3))
    assert lim.quotient.is_isomorphic(m3())


def test_growing_chain_limit():
    up = UslHomomorphism(chain(2), chain(3), (0, 2))
    seq = LatticeSequence((chain(2), chain(3), chain(3)), (up, UslHomomorphism.identity(chain(3))))
    lim = direct_limit_prefix(seq)
    assert lim.quotient.is_isomorphic(chain(3))
    for i, h in enumerate(seq.homs):
        for a in h.source.elements:
            assert lim.class_of(i, a) == lim.class_of(i + 1, h(a))


@given(st.integers(0, 10_000))
def test_pairing_round_trip(n):
    x, y = unpair(n)
    assert (x + y) * (x + y + 1) // 2 + y == n


@given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30), st.integers(0, 5))
def test_codes_round_trip(x, y, z, n):
    assert case_of(encode_case1(x, y, z, n)) == (1, (x, y, z, n))
    assert case_of(encode_case2(x, y, n)) == (2, (x, y, n))
    assert decode(encode_case1(x, y, z, n) // 2, 4) == (x, y, z, n)


def test_machine_without_relations_stays_two_element():
    seq = permissibility_machine(PresentationTables(), 50)
    assert len(seq.lattices) == 1 and seq.lattices[0].n == 2


def _two_name_tables(order_n):
    joins = {(a, b, max(a, b), 0): [True] for a in (0, 1) for b in (0, 1)}
    return PresentationTables(joins, {(1, 0, order_n): [True]})


def test_machine_adds_names_with_their_joins():
    seq = permissibility_machine(_two_name_tables(2), encode_case2(1, 0, 2))
    sizes = [L.n for L in seq.lattices]
    assert sizes == [2, 3, 4]
    last = seq.lattices[-1]
    x0, x1 = last.index_of("x0"), last.index_of("x1")
    assert last.join[x0][x1] == x1


def test_machine_merges_on_confirmed_order():
    code = encode_case2(1, 0, 2)
    seq = permissibility_machine(_two_name_tables(2), code + 1)
    merge = seq.homs[-1]
    src = merge.source
    assert merge(src.index_of("x0")) == merge(src.index_of("x1"))
    assert seq.lattices[-1].n == 3


def test_machine_rejects_ragged_rows():
    with pytest.raises(MalformedTable):
        permissibility_machine(PresentationTables({(0, 0, 0, 0): [True], (0, 1, 1, 0): [True, True]}), 5)


def test_single_level_array_is_the_stage_sequence():
    arr = sequential_array(LatticeSequence.constant(chain(2), 1), 2)
    assert [e.index for e in arr.entries[0]] == [0, 1, 2]
    assert arr.h(0) == 0


def test_constant_two_level_array():
    arr = sequential_array(LatticeSequence.constant(chain(2), 2), 2)
    assert arr.m == [[0, 1, 2]]
    for e in arr.entries[1]:
        assert arr.transfer_holds(1, e)[0]


def test_array_into_longer_chain():
    up = UslHomomorphism(chain(2), chain(3), (0, 2))
    arr = sequential_array(LatticeSequence((chain(2), chain(3)), (up,)), 2)
    # stage 1 of the 3-chain needs stage 2 of the 2-chain; stage 2 fits in nothing built
    assert arr.m == [[0, 2, None]]
    for e in arr.entries[1]:
        assert arr.transfer_holds(1, e)[0]
    # padding: between defined indices the latest entry is used
    assert arr.at(1, 1).index == 0 and arr.at(1, 2).index == 2


def test_array_stages_are_original_or_modified():
    arr = sequential_array(LatticeSequence.constant(chain(2), 2), 1, variant=ORIGINAL)
    assert arr.m == [[0, 1]]
