"""Builders, recognition, surgery, neighbourhood systems, witnesses."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bigsurf.construct import (
    BifluteParams,
    EventuallyPeriodic,
    InvalidParameters,
    Neighbourhood,
    NoGluingSite,
    NotABiflute,
    REWitness,
    biflute,
    biflute_between,
    build_re_system,
    check_normal_system,
    check_witness,
    compact_pants,
    connected_sum,
    eta_sphere,
    flute_of,
    levels_for,
    pants_for_pure,
    parse_witnesses,
    recognize_biflute,
    serialize_witnesses,
    standard_tree,
    visible_ends,
)
from bigsurf.ordinal import (
    OMEGA,
    ClosedSetEncoding,
    ConstTail,
    OrdinalNotation,
    PerfectKernel,
    RampTail,
    RankOverflow,
    SetNode,
    cb_rank,
)
from bigsurf.pantsgraph import (
    EmbeddingFailure,
    MalformedGraph,
    Slot,
    check_levels,
    check_scheme_compatibility,
    classify_blocks,
    edge_id,
    trivalent_tree,
    validate_graph,
)


# -- parameter data -----------------------------------------------------------

def test_eventually_periodic_values():
    s = EventuallyPeriodic((1, 2), exceptions=((0, 7), (-3, 5)))
    assert s.value(0) == 7
    assert s.value(-3) == 5
    assert s.value(1) == 2
    assert s.value(2) == 1
    assert s.value(-1) == 2
    assert s.bound() == 7


def test_eventually_periodic_rejects():
    with pytest.raises(InvalidParameters):
        EventuallyPeriodic(())
    with pytest.raises(InvalidParameters):
        EventuallyPeriodic((1, -1))
    with pytest.raises(InvalidParameters):
        EventuallyPeriodic((1,), exceptions=((0, 1), (0, 2)))


def test_biflute_params_bounds():
    p = BifluteParams.constant(1, 2, 3)
    assert (p.A, p.B, p.C) == (1, 2, 3)
    assert not p.is_plain()
    assert p.fits(1, 2, 3)
    assert not p.fits(1, 1, 3)
    assert BifluteParams.constant(0, 0, 2).is_plain()


def test_biflute_params_rejects():
    with pytest.raises(InvalidParameters):
        BifluteParams.constant(1, 1, 0)
    with pytest.raises(InvalidParameters):
        BifluteParams.constant(1, 1, 1, base="Q")
    # loop sizes vanishing at some stations but not others
    with pytest.raises(InvalidParameters):
        BifluteParams(EventuallyPeriodic((1, 0)), EventuallyPeriodic((0,)),
                      EventuallyPeriodic((1,)))


# -- biflute round trips ------------------------------------------------------

def _canon(a, b):
    # the last chain pants sits on the cycle, so (1, b) builds the same
    # graph as (0, b + 1); the recognizer reports the latter
    return (0, b + 1) if a == 1 else (a, b)


def test_biflute_round_trip_grid():
    for a in range(3):
        for b in range(4):
            if a == 0 and b == 0:
                continue
            for c in range(1, 5):
                p = BifluteParams.constant(a, b, c)
                q = recognize_biflute(biflute(p), 12)
                assert (q.A, q.B, q.C) == _canon(a, b) + (c,), (a, b, c)
                assert q.base == "Z"
                assert q.verdict == "compatible at depth 12"


def test_biflute_plain_recognition():
    q = recognize_biflute(biflute(BifluteParams.constant(0, 0, 3)), 6)
    assert q.is_plain()
    assert (q.A, q.B, q.C) == (0, 0, 1)


def test_biflute_over_naturals():
    p = BifluteParams.constant(0, 2, 2, base="N")
    q = recognize_biflute(biflute(p), 9)
    assert q.base == "N"
    assert (q.A, q.B, q.C) == (0, 2, 2)


def test_ladder_compatible_at_every_depth():
    lad = biflute(BifluteParams.constant(0, 1, 1))
    for d in (4, 6, 8, 10):
        q = recognize_biflute(lad, d)
        assert (q.A, q.B, q.C) == (0, 1, 1)
        assert q.fits(0, 1, 1)


def test_biflute_truncations_validate():
    s = biflute(BifluteParams.constant(2, 3, 2))
    for d in (0, 1, 4, 9):
        validate_graph(s.truncate(d))
    check_scheme_compatibility(s, range(0, 8))


def test_biflute_varying_pattern():
    p = BifluteParams(EventuallyPeriodic((0,)), EventuallyPeriodic((2, 3)),
                      EventuallyPeriodic((2,)))
    q = recognize_biflute(biflute(p), 12)
    assert q.fits(0, 3, 2)
    assert set(q.b_seq.period) <= {2, 3}


def test_recognize_rejects_tree():
    with pytest.raises(NotABiflute):
        recognize_biflute(trivalent_tree(), 4)


def test_recognize_needs_depth():
    with pytest.raises(InvalidParameters):
        recognize_biflute(biflute(BifluteParams.constant(0, 1, 1)), 1)


@given(st.integers(0, 2), st.integers(0, 3), st.integers(1, 3))
@settings(max_examples=20, deadline=None)
def test_biflute_recognition_fits_bounds(a, b, c):
    if a == 0 and b == 0:
        return
    q = recognize_biflute(biflute(BifluteParams.constant(a, b, c)), 10)
    ca, cb = _canon(a, b)
    assert q.fits(ca, cb, c)


# -- eta spheres --------------------------------------------------------------

def test_eta_sphere_ranks():
    for eta in (0, 1, 2, 3, OMEGA):
        s = eta_sphere(eta)
        r = cb_rank(s.meta["ends"])
        assert r.nu == (OrdinalNotation.from_int(eta)
                        if isinstance(eta, int) else eta)
        assert r.n == 1


def test_eta_sphere_truncations():
    for eta in (1, 2, OMEGA):
        s = eta_sphere(eta)
        for d in (0, 2, 5):
            validate_graph(s.truncate(d))
        check_scheme_compatibility(s, range(0, 5))


def test_eta_sphere_zero_is_bare_ray():
    g = eta_sphere(0).truncate(4)
    assert not g.vertices
    assert g.bare_rays


def test_eta_sphere_one_is_plain_flute():
    q = recognize_biflute(eta_sphere(1), 6)
    assert q.is_plain()
    assert q.base == "N"


# -- flutes of pieces ---------------------------------------------------------

def test_flute_of_unique_top_point():
    fl = flute_of([None, None], period=[eta_sphere(1)])
    validate_graph(fl.truncate(6))
    r = cb_rank(fl.meta["ends"])
    assert (str(r.nu), r.n) == ("2", 1)
    views = visible_ends(fl, 6)
    assert [t for t, v in views.items() if v.kind == "limit"] == ["x-limit"]


def test_flute_of_genus_flags():
    fl = flute_of([None, eta_sphere(1)], period=[None],
                  genus_flags=[False, True])
    g = fl.truncate(6)
    validate_graph(g)
    assert any(a.vertex == b.vertex for a, b in g.edges().values())


def test_flute_of_rejects_junk():
    with pytest.raises(InvalidParameters):
        flute_of([object()], period=[None])
    with pytest.raises(InvalidParameters):
        flute_of([None, None], period=[None], genus_flags=[True])


def test_flute_of_finite_needs_three_ends():
    with pytest.raises(EmbeddingFailure):
        flute_of([])  # boundary root plus terminal cusp only


# -- standard trees -----------------------------------------------------------

def test_standard_tree_plain():
    t = standard_tree(0)
    g = t.truncate(4)
    validate_graph(g)
    check_scheme_compatibility(t, range(1, 5))
    ls = levels_for(t, 4)
    check_levels(g, ls)
    for w in t.meta["witnesses"]:
        assert check_witness(g, w) == []


def test_standard_tree_with_sphere_and_genus():
    t = standard_tree(1, genus=True)
    g = t.truncate(4)
    validate_graph(g)
    assert any(a.vertex == b.vertex for a, b in g.edges().values())
    for w in t.meta["witnesses"]:
        assert check_witness(g, w) == []


def test_standard_tree_blocks_classify():
    t = standard_tree(0, genus=True)
    g = t.truncate(3)
    ls = levels_for(t, 3)
    check_levels(g, ls)
    kinds = classify_blocks(g, ls)
    assert "torus-block" in {k for k, _ in kinds}


# -- realizing encodings ------------------------------------------------------

def test_pure_single_genus_chain():
    s = pants_for_pure(SetNode(genus=True, tag="g"))
    g = s.truncate(5)
    validate_graph(g)
    views = visible_ends(s, 5)
    assert views["g"].kind == "chain"
    assert views["g"].genus
    # a handle at every station: both slots of the head pants, then one per
    handles = [e for e, (a, b) in g.edges().items() if a.vertex == b.vertex]
    spine = [v for v in g.vertices if "/" not in v]
    assert len(handles) == len(spine) + 1


def test_pure_three_rays_single_pants():
    s = pants_for_pure(SetNode(children=(SetNode(), SetNode())))
    g = s.truncate(4)
    validate_graph(g)
    assert sorted(g.vertices) == ["s:0"]
    assert len(g.rays) == 3


def test_pure_two_ends_fail():
    with pytest.raises(EmbeddingFailure):
        pants_for_pure(SetNode(children=(SetNode(),)))
    with pytest.raises(EmbeddingFailure):
        pants_for_pure(SetNode())


def test_pure_worn_ramp_fails():
    with pytest.raises(EmbeddingFailure):
        pants_for_pure(SetNode(tail=RampTail(OMEGA, worn=1), tag="e"))


def test_pure_limit_space_views():
    enc = SetNode(tail=ConstTail((SetNode(),)), children=(SetNode(),), tag="e")
    s = pants_for_pure(enc)
    check_scheme_compatibility(s, range(0, 6))
    views = visible_ends(s, 6)
    assert views["e"].kind == "limit"
    assert views["e.0"].kind == "ray"
    copies = [t for t in views if "@" in t]
    assert copies and all(t.startswith("e.1@") for t in copies)


def test_pure_ramp_limit():
    s = pants_for_pure(SetNode(tail=RampTail(OMEGA), tag="e"), depth=7)
    g = s.truncate(7)
    validate_graph(g)
    r = cb_rank(s.meta["ends"])
    assert str(r.nu) == "w"
    views = visible_ends(s, 7)
    assert views["e"].kind == "limit"
    assert any(".r" in t for t in views)


def test_pure_perfect_tree_with_rays():
    node = SetNode(perfect=True, genus_rays=("(L)*", "(R)*"), tag="e")
    s = pants_for_pure(node, depth=5)
    g = s.truncate(5)
    validate_graph(g)
    views = visible_ends(s, 5)
    assert sorted(views) == ["e!(L)*", "e!(R)*"]
    assert all(v.kind == "tree-ray" and v.genus for v in views.values())


def test_pure_levels_separate():
    for enc in (SetNode(genus=True, tag="g"),
                SetNode(tail=ConstTail((SetNode(),)),
                        children=(SetNode(),), tag="e")):
        s = pants_for_pure(enc)
        g = s.truncate(5)
        ls = levels_for(s, 5)
        check_levels(g, ls)


# -- the biflute between two ends ---------------------------------------------

def _wrapped_pair():
    gx = SetNode(genus=True, tail=ConstTail((SetNode(),)), tag="x")
    gy = SetNode(genus=True, tail=ConstTail((SetNode(),)), tag="y")
    return SetNode(tail=ConstTail((SetNode(),)), children=(gx, gy), tag="e")


def test_between_wrapped_genus_limits():
    s = pants_for_pure(_wrapped_pair(), depth=8)
    q = biflute_between(s, 8)
    assert (q.A, q.B, q.C) == (0, 1, 2)


def test_between_chain_pair():
    root = SetNode(children=(SetNode(genus=True, tag="x"),
                             SetNode(genus=True, tag="y")),
                   tail=ConstTail((SetNode(),)), tag="e")
    s = pants_for_pure(root, depth=8)
    q = biflute_between(s, 8)
    assert (q.A, q.B, q.C) == (0, 1, 2)


def test_between_tree_rays():
    node = SetNode(perfect=True, genus_rays=("(L)*", "(R)*"), tag="e")
    s = pants_for_pure(node, depth=6)
    q = biflute_between(s, 6)
    assert (q.A, q.B, q.C) == (0, 1, 2)


def test_between_explicit_slots_on_ladder():
    lad = biflute(BifluteParams.constant(0, 1, 1))
    q = biflute_between(lad, 8, Slot("z:-8", 0), Slot("z:8", 1))
    assert (q.A, q.B, q.C) == (0, 1, 1)


def test_between_needs_two_genus_ends():
    s = pants_for_pure(SetNode(tail=ConstTail((SetNode(),)), tag="e"))
    with pytest.raises(InvalidParameters):
        biflute_between(s, 6)


# -- connected sums -----------------------------------------------------------

def test_sum_of_ladders_bounds():
    lad = lambda: biflute(BifluteParams.constant(0, 1, 1))
    cs = connected_sum(lad(), lad())
    g = cs.truncate(6)
    validate_graph(g)
    q = biflute_between(cs, 8, Slot("a/z:-6", 0), Slot("b/z:6", 1))
    # the seam inserts one extra station gap: C grows by one, A and B keep
    assert (q.A, q.B, q.C) == (0, 1, 2)
    ls = levels_for(cs, 5)
    check_levels(cs.truncate(5), ls)
    assert cs.meta["level_roots"] == [cs.meta["sum_gamma"]]


def test_sum_of_spheres_counts_points():
    s = eta_sphere(2)
    for n in (2, 3):
        s = connected_sum(s, eta_sphere(2))
        r = cb_rank(s.meta["ends"])
        assert (str(r.nu), r.n) == ("2", n)
    validate_graph(s.truncate(5))


def test_sum_of_single_pants():
    cs = connected_sum(compact_pants("p"), compact_pants("q"))
    g = cs.truncate(3)
    validate_graph(g)
    assert sorted(g.vertices) == ["a/p:0", "b/q:0", "sum:a", "sum:b"]
    check_levels(g, levels_for(cs, 3))


def test_sum_site_rules():
    lad = biflute(BifluteParams.constant(0, 1, 1))
    # a genus scheme refuses a site far from any handle block
    with pytest.raises(NoGluingSite):
        connected_sum(lad, biflute(BifluteParams.constant(0, 1, 1)),
                      site1=Slot("z:0", 0))


def test_sum_drops_witnesses_hit_by_site():
    # branch-swap regions jointly cover every tree vertex, so any site
    # invalidates both carried witnesses on both summands
    cs = connected_sum(standard_tree(0), standard_tree(0))
    validate_graph(cs.truncate(4))
    assert "witnesses" not in cs.meta


def test_sum_keeps_witnesses_clear_of_site():
    tree = standard_tree(0)
    sub = REWitness(
        "sub-L", "sub-R",
        edge_id(Slot("t:rL+g", 1), Slot("t:rLL", 0)),
        edge_id(Slot("t:rL+g", 2), Slot("t:rLR", 0)),
        "t:rLL", "t:rLR",
        (("prefix", "t:rLL", "t:rLR"),))
    assert check_witness(tree.truncate(5), sub) == []
    tree.meta["witnesses"] = tree.meta["witnesses"] + (sub,)
    cs = connected_sum(standard_tree(0), tree, site2=Slot("t:rR", 1))
    ws = cs.meta["witnesses"]
    assert [w.end_x for w in ws] == ["sub-L"]
    assert check_witness(cs.truncate(5), ws[0]) == []


# -- witnesses ----------------------------------------------------------------

def test_witness_shift_apply():
    w = REWitness("x", "y", "c", "c", "s:2", "b/s:1",
                  (("shift", "", "b/", -1),))
    assert w.apply("s:2") == "b/s:1"
    assert w.apply("s:4.2/h") == "b/s:3.2/h"
    assert w.apply("s:0") is None


def test_witness_round_trip():
    child = SetNode(tail=ConstTail((SetNode(),)), tag="c")
    root = SetNode(tail=ConstTail((SetNode(),)), children=(child,), tag="e")
    scheme, _, wits = build_re_system(root, rank_bound=3, depth=6)
    g = scheme.truncate(6)
    text = serialize_witnesses(g, wits)
    back = parse_witnesses(text)
    assert len(back) == len(wits)
    for w in back:
        assert check_witness(g, w) == []
    with pytest.raises(MalformedGraph):
        parse_witnesses("nonsense\n")


def test_witness_catches_class_mismatch():
    # mapping a genus chain onto a planar tail must fail the role checks
    root = SetNode(children=(SetNode(genus=True, tag="x"),
                             SetNode(genus=True, tag="y")),
                   tail=ConstTail((SetNode(),)), tag="e")
    s = pants_for_pure(root, depth=6)
    g = s.truncate(6)
    bogus = REWitness("x", "e", "s:0.0/s:0.1--s:0.0/s:1.0", "s:1.1--s:2.0",
                      "s:0.0/s:1", "s:2", (("shift", "s:0.0/", "", 1),))
    assert check_witness(g, bogus) != []


# -- neighbourhood systems ----------------------------------------------------

def test_re_system_planar_pair():
    child = SetNode(tail=ConstTail((SetNode(),)), tag="c")
    root = SetNode(tail=ConstTail((SetNode(),)), children=(child,), tag="e")
    scheme, system, wits = build_re_system(root, rank_bound=3, depth=6)
    assert check_normal_system(scheme, system, 6) == []
    g = scheme.truncate(6)
    for w in wits:
        assert check_witness(g, w) == []
    owners = {n.owner for n in system.neighbourhoods}
    assert {"e", "e.0"} <= owners


def test_re_system_chain_pair():
    root = SetNode(children=(SetNode(genus=True, tag="x"),
                             SetNode(genus=True, tag="y")),
                   tail=ConstTail((SetNode(),)), tag="e")
    scheme, system, wits = build_re_system(root, rank_bound=2, depth=7)
    assert check_normal_system(scheme, system, 7) == []
    g = scheme.truncate(7)
    for w in wits:
        assert check_witness(g, w) == []
    assert system.genus_part()
    assert all(n.genus for n in system.for_end("e.0"))


def test_re_system_wrapped_pair():
    scheme, system, wits = build_re_system(_wrapped_pair(), rank_bound=3,
                                           depth=8)
    assert check_normal_system(scheme, system, 8) == []
    g = scheme.truncate(8)
    for w in wits:
        assert check_witness(g, w) == []


def test_re_system_guards():
    deep = SetNode(tail=ConstTail((SetNode(),)),
                   children=(SetNode(tail=ConstTail((SetNode(),))),))
    with pytest.raises(RankOverflow):
        build_re_system(deep, 1)
    with pytest.raises(PerfectKernel):
        build_re_system(SetNode(perfect=True), 5)


def test_re_system_singletons_get_no_rows():
    # one genus limit over genus points: copies are excluded from
    # classes, so no equivalent pair exists anywhere
    enc = SetNode(genus=True, tail=ConstTail((SetNode(genus=True, tag="g"),)),
                  tag="e")
    scheme, system, wits = build_re_system(enc, rank_bound=2, depth=5)
    assert system.neighbourhoods == ()
    assert wits == ()
