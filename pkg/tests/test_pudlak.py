from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from latseg.errors import BudgetExceeded, ConditionViolated, NotAPath, NotStable
from latseg.lattice import CATALOG, catalog_lattice, chain, m3, n5
from latseg.pudlak import (
    MODIFIED,
    ORIGINAL,
    as_tuple,
    attach_cell,
    collapse_map,
    color_equivalence,
    contract_path,
    extend_stable,
    is_stable,
    join_preserved,
    pentagon_pairs,
    projected_vertices,
    pudlak_stage,
    restriction_check,
    stable_map_fx,
    table_from_graph,
    to_dot,
    verify_pudlak_conditions,
)

from oracles import components

GOLDEN = Path(__file__).parent / "golden"


def oracle_equivalence(G, alpha):
    L = G.lattice
    return components(G.n_vertices, [(e.u, e.v) for e in G.edges if L.le(alpha, e.color)])


def test_stage_zero_is_one_edge():
    G = pudlak_stage(chain(2), 0)
    assert G.n_vertices == 2 and len(G.edges) == 1 and G.edges[0].color == 0


def test_two_chain_first_original_stage():
    G = pudlak_stage(chain(2), 1, ORIGINAL)
    assert (G.n_vertices, len(G.edges)) == (5, 5)


def test_single_cell_on_two_chain():
    G = attach_cell(pudlak_stage(chain(2), 0), 0, 1)
    assert len(G.cells) == 1
    (cell,) = G.cells.values()
    assert list(cell.pentagons) == [(0, 0)]
    assert (G.n_vertices, len(G.edges)) == (5, 5)


def test_zero_copies_leaves_graph():
    G = pudlak_stage(chain(2), 0)
    H = attach_cell(G, 0, 0)
    assert H.edges == G.edges and H.vertices == G.vertices


@pytest.mark.parametrize("name", list(CATALOG))
def test_pentagon_count_per_cell(name):
    G = pudlak_stage(catalog_lattice(name), 1)
    for cell in G.cells.values():
        assert len(cell.pentagons) == len(pentagon_pairs(G.lattice, cell.alpha))


@pytest.mark.parametrize("name", list(CATALOG))
@pytest.mark.parametrize("variant", [ORIGINAL, MODIFIED])
def test_projected_counts_exact(name, variant):
    L = catalog_lattice(name)
    for n in range(3):
        assert pudlak_stage(L, n, variant).n_vertices == projected_vertices(L, n, variant)


def test_budget_refused_up_front():
    with pytest.raises(BudgetExceeded):
        pudlak_stage(m3(), 3)


@pytest.mark.parametrize("name", list(CATALOG))
def test_color_equivalence_matches_components(name):
    G = pudlak_stage(catalog_lattice(name), 1)
    for k in G.lattice.elements:
        assert list(color_equivalence(G, k).rep) == oracle_equivalence(G, k)


def test_extreme_colors():
    G = pudlak_stage(chain(2), 1, ORIGINAL)
    assert color_equivalence(G, G.lattice.top).is_identity()
    assert color_equivalence(G, 0).is_all()


def test_golden_two_point_table():
    T = table_from_graph(pudlak_stage(chain(2), 0))
    # x^[k] is the least point related to x mod k
    assert T.matrix() == [[0, 0], [0, 1]]


@pytest.mark.parametrize("name", list(CATALOG))
@pytest.mark.parametrize("stage", [0, 1, 2])
def test_joins_become_intersections(name, stage):
    G = pudlak_stage(catalog_lattice(name), stage)
    assert join_preserved(G)


def test_m3_injective_at_stage_two():
    T = table_from_graph(pudlak_stage(m3(), 2))
    assert len(set(T.rel)) == m3().n


@pytest.mark.parametrize("name", list(CATALOG))
def test_conditions_at_stage_one(name):
    assert verify_pudlak_conditions(pudlak_stage(catalog_lattice(name), 1)).ok


def test_broken_recoloring_detected():
    G = pudlak_stage(chain(3), 1, ORIGINAL)
    # push a chain edge to the middle color so its cycle no longer meets below it
    e = next(i for i, info in enumerate(G.edges) if info.base >= 0 and info.color == 0)
    G.edges[e] = replace(G.edges[e], color=1)
    with pytest.raises(ConditionViolated) as err:
        verify_pudlak_conditions(G)
    assert err.value.condition in (2, 3)
    rep = verify_pudlak_conditions(G, raise_on_failure=False)
    assert not rep.ok


def test_base_color_does_not_change_table_shape():
    L = chain(3)
    a = pudlak_stage(L, 1, ORIGINAL)
    b = pudlak_stage(L, 1, ORIGINAL, base_color=1)
    assert len(set(table_from_graph(a, injective=False).rel)) == len(set(table_from_graph(b, injective=False).rel))


@pytest.mark.parametrize("name", list(CATALOG))
def test_stages_stabilize(name):
    L = catalog_lattice(name)
    for n in range(2):
        small, big = pudlak_stage(L, n, ORIGINAL), pudlak_stage(L, n + 1, ORIGINAL)
        assert all(restriction_check(small, big).values())


def test_stage_zero_collapse_is_identity():
    G = pudlak_stage(chain(2), 1, ORIGINAL)
    assert collapse_map(G, 0) == {0: 0, 1: 1}


@pytest.mark.parametrize("name", ["2-chain", "3-chain", "2x2"])
def test_fx_lands_on_endpoints_and_is_stable(name):
    G = pudlak_stage(catalog_lattice(name), 2, ORIGINAL)
    for x, info in enumerate(G.edges):
        if info.base >= 0:
            # on the prefix where x is newest the image is its two endpoints
            assert set(collapse_map(G, x).values()) == {info.u, info.v}
        f = stable_map_fx(G, x)
        assert set(f) == set(range(G.n_vertices))
        assert is_stable(G, f, range(len(G.edges)))[0]


def test_identity_extends_to_identity():
    G = pudlak_stage(chain(2), 2, ORIGINAL)
    ident = {v: v for v in G.vertices_upto(1)}
    g = extend_stable(ident, G, 1, G, 1)
    assert as_tuple(g, G.n_vertices) == tuple(range(G.n_vertices))


def test_collapsed_base_sends_cell_to_point():
    G = pudlak_stage(chain(2), 1, ORIGINAL)
    g = extend_stable({0: 0, 1: 0}, G, 0, G, 0)
    assert set(g.values()) == {0}


def test_unstable_map_rejected():
    G = pudlak_stage(chain(2), 1, ORIGINAL)
    with pytest.raises(NotStable):
        extend_stable({0: 0, 1: 1, 2: 2, 3: 2, 4: 4}, G, 1, G, 0)


def test_contract_backtrack_and_pentagon():
    G = pudlak_stage(chain(2), 1, ORIGINAL)
    assert contract_path(G, [0, 2, 0, 1], 0) == [0, 1]
    assert contract_path(G, [0, 2, 3, 4, 1], 0) == [0, 1]
    with pytest.raises(NotAPath):
        contract_path(G, [0, 3], 0)


def test_golden_dot_files():
    assert to_dot(pudlak_stage(chain(2), 1, ORIGINAL)) == (GOLDEN / "2-chain-original-1.dot").read_text()
    assert to_dot(pudlak_stage(n5(), 1)) == (GOLDEN / "N5-modified-1.dot").read_text()


@given(st.sampled_from(list(CATALOG)), st.integers(0, 1), st.sampled_from([ORIGINAL, MODIFIED]))
def test_builds_are_deterministic(name, n, variant):
    L = catalog_lattice(name)
    assert to_dot(pudlak_stage(L, n, variant)) == to_dot(pudlak_stage(L, n, variant))


@given(st.sampled_from(["2-chain", "3-chain", "N5"]), st.data())
def test_contracted_paths_keep_endpoints(name, data):
    G = pudlak_stage(catalog_lattice(name), 1, ORIGINAL)
    L = G.lattice
    alpha = data.draw(st.sampled_from(list(L.elements)))
    start = data.draw(st.integers(0, G.n_vertices - 1))
    path = [start]
    for _ in range(data.draw(st.integers(0, 8))):
        nbrs = sorted(
            info.v if info.u == path[-1] else info.u
            for info in G.edges
            if path[-1] in (info.u, info.v) and L.le(alpha, info.color)
        )
        if not nbrs:
            break
        path.append(data.draw(st.sampled_from(nbrs)))
    out = contract_path(G, path, alpha)
    assert out[0] == path[0] and out[-1] == path[-1]
    assert len(set(out)) == len(out)
