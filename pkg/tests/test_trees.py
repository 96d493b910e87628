import pytest
from hypothesis import given
from hypothesis import strategies as st

from latseg.errors import EliminationEmpty, LengthMismatch, NotAnLTree, NotInDomain, PreconditionFailed
from latseg.instances import computation_fixtures, square_table, two_point_table
from latseg.trees import (
    TreeMap,
    analyze_tree,
    check_weak_e_splitting,
    computation_backward,
    computation_forward,
    constant,
    delayed,
    empty_tree,
    ext_subtree,
    extend_type,
    extension_kind,
    find_e_splitting,
    fmt,
    fullness_witness,
    identity_tree,
    is_e_splitting_level,
    l_subtree_transfer,
    l_tree_repeats,
    lookup,
    never,
    on_projection,
    parse_str,
    project,
    projected_reader,
    reader,
    signature,
    single_node,
    split_on,
    strings_related,
    transfer,
    tree_violation,
)

TWO = two_point_table()
TOP = TWO.lattice.top
ID3 = identity_tree(TWO, 3)

bits = st.lists(st.integers(0, 1), max_size=6).map(tuple)


# ---------------------------------------------------------------- structure


def test_string_literals_round_trip():
    assert fmt((0, 1, 1)) == "<0,1,1>"
    assert parse_str("<0,1,1>") == (0, 1, 1)
    assert parse_str("<>") == ()
    with pytest.raises(ValueError):
        parse_str("0,1")


def test_identity_tree_has_one_plateau():
    r = analyze_tree(ID3)
    assert r.plateaus == {0: (0, 3)}
    assert r.focal_points == [()]
    assert r.height == 3
    assert r.weakly_uniform
    assert len(ID3) == 1 + 2 + 4 + 8


def test_single_branch_every_node_potential_internal_focal():
    T = TreeMap({(): (), (0,): (0,), (0, 1): (0, 1), (0, 1, 1): (0, 1, 1)}, TWO)
    r = analyze_tree(T)
    assert r.potential_focal_points == T.domain()
    assert r.focal_points == [(), (0,), (0, 1)]


def test_non_full_plateau_is_not_weakly_uniform():
    images = dict(ID3.images)
    del images[(1, 0, 1)]
    T = TreeMap(images, TWO)
    r = analyze_tree(T)
    assert not r.weakly_uniform
    assert r.witness == (1, 0, 1)
    assert fullness_witness(ID3) is None


def test_empty_and_single_node_trees():
    E = empty_tree(TWO)
    assert E.empty and E.ht is None and analyze_tree(E).plateaus == {}
    N = single_node(TWO, (1, 0))
    r = analyze_tree(N)
    assert r.height == 2 and r.levels == {-1: (0, 2)} and r.weakly_uniform


@pytest.mark.parametrize(
    "images, reason",
    [
        ({(): (), (0, 1): (0, 1)}, "prefixes"),
        ({(): (), (0,): (0,), (1,): (1, 0)}, "differ in length"),
        ({(): (0,), (0,): (0,)}, "properly extend"),
        ({(): (), (0,): (0, 0), (1,): (0, 0)}, "comparable"),
        ({(): (), (3,): (0,)}, "leaves S"),
    ],
)
def test_tree_violations(images, reason):
    assert reason in tree_violation(TreeMap(images, TWO))


# ---------------------------------------------------------------- extensions


def test_type1_on_potential_focal_point_creates_plateau():
    small = identity_tree(TWO, 1)
    before = analyze_tree(small)
    assert (0,) in before.potential_focal_points and (0,) not in before.focal_points
    grown = extend_type(small, ID3, (0,), 1)
    after = analyze_tree(grown)
    assert (0,) in after.focal_points
    assert len(after.plateaus) == len(before.plateaus) + 1
    assert after.weakly_uniform
    assert extension_kind(small, grown, (0,)) == 1
    # the rest of the old tree is untouched
    assert all(grown.images[k] == v for k, v in small.images.items())


def test_type0_grows_every_branch_above_the_shortening():
    small = identity_tree(TWO, 1)
    grown = extend_type(identity_tree(TWO, 2), ID3, (), 0)
    assert grown == ID3
    assert extension_kind(identity_tree(TWO, 2), grown, ()) == 0
    assert small.ht == 1


def test_type0_at_top_fails():
    with pytest.raises(PreconditionFailed):
        extend_type(identity_tree(TWO, 1), ID3, (0,), 0)


def test_type1_needs_merely_potential_focal_point():
    with pytest.raises(PreconditionFailed):
        extend_type(identity_tree(TWO, 1), ID3, (), 1)


def test_extension_above_parent_height_fails():
    with pytest.raises(PreconditionFailed):
        extend_type(identity_tree(TWO, 1), ID3, (), 0, target_height=4)
    with pytest.raises(PreconditionFailed):
        extend_type(ID3, ID3, (0,), 0)


def test_type2_combines_a_created_plateau():
    small = identity_tree(TWO, 1)
    grown = extend_type(small, ID3, (0,), 1)
    combined = extend_type(grown, ID3, (1,), 2)
    r = analyze_tree(combined)
    assert r.weakly_uniform
    assert set(grown.images) <= set(combined.images)
    # copied sideways from the sibling branch
    assert combined.images[(1, 0)] == (1, 0, 0)
    assert (0,) not in combined.marks
    assert extension_kind(grown, combined, (1,)) == 2


def test_unknown_extension_kind():
    with pytest.raises(ValueError):
        extend_type(identity_tree(TWO, 1), ID3, (), 5)


# ---------------------------------------------------------------- Ext, transfer, signature


def test_ext_at_root_is_the_tree():
    assert ext_subtree(ID3, ()) == ID3


def test_ext_above_a_node():
    E = ext_subtree(ID3, (1,))
    assert E.root() == (1,)
    assert E.offset == 1
    assert E((0, 1)) == (1, 0, 1)
    assert len(E) == 7
    with pytest.raises(NotInDomain):
        ext_subtree(ID3, (0, 0, 0, 0))


@given(bits, bits)
def test_transfer_identity_and_shape(rho, tau_bits):
    assert transfer((), (), rho) == rho
    n = min(len(rho), len(tau_bits))
    sigma, tau = rho[:n], tau_bits[:n]
    out = transfer(sigma, tau, rho)
    assert out[:n] == tau and len(out) == len(rho)
    assert transfer(sigma, sigma, rho) == rho


def test_transfer_errors():
    with pytest.raises(LengthMismatch):
        transfer((0,), (), (0, 1))
    with pytest.raises(NotInDomain):
        transfer((1,), (0,), (0, 1))


def test_project_is_least_representative():
    sq = square_table()
    a = sq.lattice.index_of("a")
    assert project((0, 1, 2, 3), sq, a) == (0, 0, 2, 2)
    assert project((3, 1), sq, sq.lattice.bottom) == (0, 0)
    assert strings_related(sq, a, (0, 3), (1, 2))


@given(bits)
def test_signature_of_identity_is_the_prefix(g):
    sig = signature(ID3, g)
    assert sig == g[:3]
    assert ID3.images[sig] == g[: len(sig)]


def test_signature_needs_an_image_below():
    with pytest.raises(NotInDomain):
        signature(single_node(TWO, (1,)), (0, 0))


# ---------------------------------------------------------------- functionals and splittings


def test_functionals():
    assert constant(4)((0,), 9) == 4
    assert never()((0, 1), 0) is None
    assert reader()((1, 0), 1) == 0 and reader()((1,), 1) is None
    sq = square_table()
    a = sq.lattice.index_of("a")
    assert projected_reader(sq, a)((3,), 0) == 2
    assert on_projection(reader(), sq, a)((1, 3), 1) == 2
    f = lookup({((0,), 0): 7, ((0, 1), 0): 8})
    assert f((0, 1), 0) == 7 and f((1,), 0) is None
    slow = delayed(reader(), 2)
    assert slow((1,), 0) is None and slow((1, 0), 0) == 1
    assert reader()((1, 0), 1, budget=1) is None


def test_constant_functional_never_splits():
    assert find_e_splitting(constant(0), ID3, ()) is None


def test_reader_splits_at_zero():
    s, t, x = find_e_splitting(reader(), ID3, ())
    assert x == 0 and s[0] != t[0]
    assert split_on(reader(), (0,), (1,), 1) == 0


def test_no_splittings_modulo_top():
    assert find_e_splitting(reader(), ID3, (), mod_a=TOP) is None
    report = check_weak_e_splitting([ID3], reader(), TOP)
    assert report.no_splittings_mod_k


def test_splitting_above_a_node():
    s, t, x = find_e_splitting(reader(), ID3, (1, 0))
    assert s[:2] == t[:2] == (1, 0) and x == 2


def test_single_node_is_vacuously_weakly_splitting():
    assert check_weak_e_splitting([single_node(TWO, ())], constant(0), TOP)
    assert check_weak_e_splitting([], constant(0), TOP)


def test_constant_is_weakly_splitting_only_modulo_bottom():
    # modulo bottom every pair is related, so no level obligations arise
    assert check_weak_e_splitting([ID3], constant(0), TWO.lattice.bottom).ok
    assert not check_weak_e_splitting([ID3], constant(0), TOP).ok


def _fixture(name):
    return next(F for F in computation_fixtures() if F.name == name)


@pytest.mark.parametrize("name", [F.name for F in computation_fixtures()])
def test_fixtures_are_weakly_splitting(name):
    F = _fixture(name)
    report = check_weak_e_splitting(F.stages, F.functional, F.k)
    assert report.ok and report.no_splittings_mod_k
    assert report.levels and all(ok for *_, ok in report.levels)


def _without_splitting_pair(T: TreeMap, keep: tuple, drop: tuple, moved: tuple) -> TreeMap:
    # ``moved`` takes over the subtree images of ``drop``, which leaves the tree
    n = len(drop)
    images = {k: v for k, v in T.images.items() if k[:n] != drop and k[:n] != moved}
    for k, v in T.images.items():
        if k[:n] == drop:
            images[moved + k[n:]] = v
    return TreeMap(images, T.table)


def test_removing_a_splitting_pair_breaks_the_level():
    F = _fixture("2x2-identity-a")
    T = F.stages[0]
    broken = _without_splitting_pair(T, (0, 1, 0, 0), (0, 1, 0, 1), (0, 1, 0, 2))
    assert tree_violation(broken) is None
    ok, witness = is_e_splitting_level(broken, F.functional, F.k, 3)
    assert not ok
    report = check_weak_e_splitting([broken], F.functional, F.k)
    assert not report.ok and report.witness[0] == "level"
    xi, eta = witness
    assert not strings_related(T.table, F.k, xi, eta)
    assert split_on(F.functional, broken.images[xi], broken.images[eta], 7) is None


# ---------------------------------------------------------------- computing through a splitting tree


def test_forward_with_constant():
    assert computation_forward(constant(5), [ID3], TOP, (0, 1), 3) == 5


@pytest.mark.parametrize("name", [F.name for F in computation_fixtures()])
def test_forward_matches_direct_evaluation(name):
    F = _fixture(name)
    g = F.planted
    gk = project(g, F.table, F.k)
    for x in range(len(g)):
        direct = F.functional(g, x)
        if direct is not None:
            assert computation_forward(F.functional, F.stages, F.k, gk, x) == direct


@pytest.mark.parametrize("name", [F.name for F in computation_fixtures()])
def test_backward_recovers_related_strings(name):
    F = _fixture(name)
    g = F.planted
    back = computation_backward(F.functional, F.stages, F.k, lambda x: F.functional(g, x), 6, strict=True)
    assert back.sigmas[0] == F.stages[0].images[()]
    assert len(back.sigmas) == 7
    assert all(strings_related(F.table, F.k, s, g) for s in back.sigmas)
    assert [len(s) for s in back.sigmas] == sorted(len(s) for s in back.sigmas)
    assert not back.arbitrary


def test_backward_with_inconsistent_values():
    F = _fixture("2x2-identity-a")
    with pytest.raises(EliminationEmpty):
        computation_backward(F.functional, F.stages, F.k, lambda x: 99, 4, strict=True)
    back = computation_backward(F.functional, F.stages, F.k, lambda x: 99, 4)
    assert back.arbitrary


def test_backward_step_zero():
    F = _fixture("3-chain-identity-mid")
    back = computation_backward(F.functional, F.stages, F.k, {}, 0)
    assert back.sigmas == [F.stages[0].images[()]]


# ---------------------------------------------------------------- L-trees


def _doubled(parent_height: int) -> TreeMap:
    # each letter of the subtree is repeated twice on the parent
    images = {(): ()}
    frontier = [()]
    for _ in range(parent_height // 2):
        frontier = [s + (a,) for s in frontier for a in (0, 1)]
        for s in frontier:
            images[s] = tuple(x for v in s for x in (v, v))
    return TreeMap(images, TWO)


def test_l_tree_identity_translation():
    report = l_subtree_transfer(ID3, ID3, (1, 0, 1, 1), TOP, TOP)
    assert report.parent_signature == report.subtree_signature == (1, 0, 1)
    assert report.repeats == [1, 1, 1]
    assert report.signature_match and report.projection_match


def test_l_tree_doubled_translation():
    P = identity_tree(TWO, 4)
    U = _doubled(4)
    shape = l_tree_repeats(P, U)
    assert shape[(1, 0)] == ((1, 1, 0, 0), 2)
    report = l_subtree_transfer(P, U, (1, 1, 0, 0, 1), TOP, TOP)
    assert report.subtree_signature == (1, 0)
    assert report.parent_signature == (1, 1, 0, 0)
    assert report.repeats == [2, 2]
    assert report.signature_match and report.projection_match


def test_l_tree_shape_errors():
    P = identity_tree(TWO, 4)
    bad = TreeMap({(): (), (0,): (0, 1)}, TWO)
    with pytest.raises(NotAnLTree):
        l_tree_repeats(P, bad)
    with pytest.raises(NotAnLTree):
        l_tree_repeats(P, _doubled(4), min_repeat=lambda n: 3)
    with pytest.raises(NotAnLTree):
        l_tree_repeats(P, single_node(TWO, (0, 0, 0, 0, 0)))


@given(st.lists(st.integers(0, 1), min_size=2, max_size=2))
def test_l_tree_signatures_agree_on_every_branch(letters):
    g = tuple(x for v in letters for x in (v, v))
    report = l_subtree_transfer(identity_tree(TWO, 4), _doubled(4), g, TOP, TOP)
    assert report.signature_match
    assert report.projection_match
