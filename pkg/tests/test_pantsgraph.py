"""Graph invariants, builders, surgery, levels and the text format."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bigsurf.pantsgraph import (
    EmbeddingFailure,
    LevelStructure,
    MalformedGraph,
    Run,
    Slot,
    TruncatedGraph,
    all_free_slots,
    assign_levels,
    attach,
    bare_ray_scheme,
    cap_and_splice,
    check_levels,
    check_scheme_compatibility,
    classify_blocks,
    cut_along,
    edge_id,
    flute,
    loop_graph,
    make_interior,
    parse_graph,
    serialize_graph,
    slots_named,
    trivalent_tree,
    validate_graph,
    z_graph,
)


def test_z_graph_shape():
    for d in (0, 1, 4):
        g = z_graph().truncate(d)
        assert len(g.vertices) == 2 * d + 1
        assert len(g.edges()) == 2 * d
        assert sorted(g.free.values()) == ["cusp"] * (2 * d + 1)
        assert g.frontier == {Slot("z:%d" % -d, 0), Slot("z:%d" % d, 1)}
        assert g.euler_characteristic() == -(2 * d + 1)
        assert len(g.components()) == 1
        assert g.first_betti() == 0


def test_flute_shape():
    g = flute().truncate(3)
    assert len(g.vertices) == 4
    assert g.free[Slot("f:0", 0)] == "boundary"
    assert sum(1 for k in g.free.values() if k == "cusp") == 4
    assert g.frontier == {Slot("f:3", 1)}
    assert g.edge_class["f:0.1--f:1.0"] == ("spine", 0)


def test_trivalent_tree_shape():
    for d in (0, 1, 3):
        g = trivalent_tree().truncate(d)
        assert len(g.vertices) == 2 ** (d + 1) - 1
        assert len(g.frontier) == 2 ** (d + 1)
        assert g.free == {Slot("t:r", 0): "boundary"}
        assert len(g.edges()) == 2 ** (d + 1) - 2


@pytest.mark.parametrize("a,b,want_v", [
    (0, 1, 1), (1, 0, 1), (1, 1, 2), (2, 3, 5), (0, 3, 3), (3, 0, 3), (0, 2, 2),
])
def test_loop_graph_shapes(a, b, want_v):
    g = loop_graph(a, b).truncate(0)
    assert len(g.vertices) == want_v
    assert g.first_betti() == 1
    assert len(g.components()) == 1
    assert sum(1 for k in g.free.values() if k == "boundary") == 1
    # truncations of a finite piece are all the same graph
    assert serialize_graph(g) == serialize_graph(loop_graph(a, b).truncate(5))


def test_loop_graph_degenerate_cases():
    g01 = loop_graph(0, 1).truncate(0)
    g10 = loop_graph(1, 0).truncate(0)
    assert len(g01.edges()) == len(g10.edges()) == 1
    for g in (g01, g10):
        (eid,) = g.edges()
        fam, _ = g.edge_class[eid]
        assert fam == "handle"
    with pytest.raises(EmbeddingFailure):
        loop_graph(0, 0)
    with pytest.raises(EmbeddingFailure):
        loop_graph(-1, 2)


def test_validate_catches_bad_graphs():
    g = TruncatedGraph()
    g.add_vertex("x")
    with pytest.raises(MalformedGraph):
        validate_graph(g)  # unused slots
    g2 = TruncatedGraph()
    g2.add_vertex("x")
    with pytest.raises(MalformedGraph):
        g2.pair(Slot("x", 0), Slot("x", 0))
    with pytest.raises(MalformedGraph):
        g2.add_vertex("x")
    g3 = TruncatedGraph()
    g3.add_vertex("x")
    g3.pair(Slot("x", 0), Slot("x", 1))
    g3.set_free(Slot("x", 2), "cusp")
    validate_graph(g3)
    g3.frontier.add(Slot("x", 2))  # force a two-role slot
    with pytest.raises(MalformedGraph):
        validate_graph(g3)


def test_attach_pieces_and_compatibility():
    base = flute()
    handled = attach(
        base, all_free_slots("cusp"),
        lambda s: loop_graph(0, 1),
        glue_family="glue",
        glue_index=lambda s: int(s.vertex.split(":")[1]),
    )
    g = handled.truncate(2)
    assert len(g.vertices) == 3 + 3
    assert g.edge_class[edge_id(Slot("f:1", 2), Slot("f:1.2/l:1", 0))] == ("glue", 1)
    assert g.first_betti() == 3
    check_scheme_compatibility(handled, range(4))


def test_attach_cusp_and_ray_pieces():
    base = flute()

    def piece(s):
        i = int(s.vertex.split(":")[1])
        if i % 3 == 0:
            return None
        if i % 3 == 1:
            return bare_ray_scheme()
        return loop_graph(1, 0)

    built = attach(base, all_free_slots("cusp"), piece)
    g = built.truncate(3)
    assert g.free[Slot("f:0", 2)] == "cusp"
    assert Slot("f:1", 2) in g.rays
    assert g.free[Slot("f:1", 2)] == "boundary"
    assert "f:2.2/v:1" in g.vertices
    check_scheme_compatibility(built, range(3))


def test_attach_rejects_bad_roots():
    base = flute()
    with pytest.raises(EmbeddingFailure):
        attach(base, all_free_slots("cusp"), lambda s: bare_ray_scheme()
               if False else PantsSchemeNoRoot()).truncate(1)


class PantsSchemeNoRoot:
    name = "no-root"
    root_slot = None

    def truncate(self, d):
        g = TruncatedGraph()
        g.add_vertex("q")
        g.pair(Slot("q", 0), Slot("q", 1))
        g.set_free(Slot("q", 2), "boundary")
        return g


def test_cut_along_separates_spine():
    g = z_graph().truncate(3)
    cut = cut_along(g, ["z:0.1--z:1.0"])
    assert len(cut.components()) == 2
    assert cut.free[Slot("z:0", 1)] == "boundary"
    with pytest.raises(MalformedGraph):
        cut_along(g, ["nope"])


def test_cut_run_graph():
    g = TruncatedGraph()
    g.add_vertex("p:0")
    g.add_vertex("p:1")
    g.set_free(Slot("p:0", 0), "boundary")
    g.set_free(Slot("p:0", 2), "cusp")
    g.set_free(Slot("p:1", 1), "boundary")
    g.set_free(Slot("p:1", 2), "cusp")
    g.add_run(Run("r:0", Slot("p:0", 1), Slot("p:1", 0), count=1000, hang="cusp"))
    validate_graph(g)
    assert g.euler_characteristic() == -(2 + 1000)
    assert len(g.components()) == 1
    with pytest.raises(EmbeddingFailure):
        cut_along(g, ["r:0"])
    with pytest.raises(EmbeddingFailure):
        assign_levels(g)


def test_cap_and_splice_merges_neighbours():
    g = z_graph().truncate(2)
    capped = cap_and_splice(g, Slot("z:0", 2))
    assert "z:0" not in capped.vertices
    assert capped.pairing[Slot("z:-1", 1)] == Slot("z:1", 0)
    validate_graph(capped)
    assert len(capped.components()) == 1

    # free-kind transfer: capping next to a free end slot
    h = flute().truncate(1)
    # f:1 carries the frontier; cap the hang of f:0 instead: merge moves
    # the boundary onto the spine peer
    with pytest.raises(EmbeddingFailure):
        cap_and_splice(h, Slot("f:1", 2))  # would splice through the frontier
    merged = cap_and_splice(h, Slot("f:0", 2))
    assert "f:0" not in merged.vertices
    assert merged.free[Slot("f:1", 0)] == "boundary"

    with pytest.raises(EmbeddingFailure):
        cap_and_splice(loop_graph(1, 0).truncate(0), Slot("v:1", 0))
    with pytest.raises(EmbeddingFailure):
        cap_and_splice(g, Slot("z:0", 1))  # paired slot


def test_cap_and_splice_moves_rays():
    base = attach(flute(), slots_named(["f:1.2"]), lambda s: bare_ray_scheme())
    g = base.truncate(2)
    capped = cap_and_splice(g, Slot("f:0", 2))
    assert Slot("f:1", 2) in capped.rays
    capped2 = cap_and_splice(capped, Slot("f:1", 2))
    # ray anchor capped: the ray moves onto the spliced-through peer
    assert Slot("f:1", 2) not in capped2.rays


def test_assign_levels_flute_and_tree():
    g = flute().truncate(4)
    ls = assign_levels(g)
    assert ls.roots == ("f:0.0",)
    assert ls.levels["f:0.0"] == 0
    for i in range(4):
        assert ls.levels["f:%d.1--f:%d.0" % (i, i + 1)] == i + 1
    check_levels(g, ls)

    t = trivalent_tree().truncate(4)
    tls = assign_levels(t)
    for n in range(1, 5):
        assert len(tls.at_level(n)) == 2 ** n
    check_levels(t, tls)
    blocks = classify_blocks(t, tls)
    assert all(kind == "pants" for kind, _ in blocks)


def test_assign_levels_two_sided_spine():
    g = z_graph().truncate(4)
    ls = assign_levels(g, roots=["z:0.1--z:1.0"])
    assert ls.levels[edge_id(Slot("z:-1", 1), Slot("z:0", 0))] == 1
    assert ls.levels[edge_id(Slot("z:1", 1), Slot("z:2", 0))] == 1
    assert ls.levels[edge_id(Slot("z:-2", 1), Slot("z:-1", 0))] == 2
    check_levels(g, ls)


def test_check_levels_rejects_bad_structures():
    g = flute().truncate(3)
    ls = assign_levels(g)
    broken = LevelStructure(levels=dict(ls.levels), roots=ls.roots)
    broken.levels["f:2.1--f:3.0"] = 1  # level 1 curve not adjacent to roots
    with pytest.raises(MalformedGraph):
        check_levels(g, broken)
    gapped = LevelStructure(levels=dict(ls.levels), roots=ls.roots)
    gapped.levels["f:1.1--f:2.0"] = 5
    with pytest.raises(MalformedGraph):
        check_levels(g, gapped)


def test_interior_curves_and_torus_blocks():
    base = z_graph()
    built = attach(base, slots_named(["z:0.2"]), lambda s: loop_graph(0, 1),
                   glue_family="glue", glue_index=lambda s: 0)
    g = built.truncate(2)
    ls = assign_levels(g, roots=["z:0.1--z:1.0"])
    handle_edge = edge_id(Slot("z:0.2/l:1", 1), Slot("z:0.2/l:1", 2))
    lvl = ls.levels[handle_edge]
    make_interior(ls, handle_edge, (lvl - 1, lvl))
    check_levels(g, ls)
    blocks = classify_blocks(g, ls)
    kinds = sorted(kind for kind, _ in blocks)
    assert kinds.count("torus-block") == 1
    assert kinds.count("pants") == len(g.vertices) - 1


def test_serialize_round_trip():
    scheme = attach(flute(), slots_named(["f:1.2"]), lambda s: bare_ray_scheme())
    g = scheme.truncate(3)
    ls = assign_levels(g)
    lengths = {eid: 1.0 + i for i, eid in enumerate(sorted(g.edges()))}
    twists = {eid: -0.25 for eid in sorted(g.edges())[:2]}
    text = serialize_graph(g, ls, lengths, twists)
    assert text.splitlines()[0] == "pantsgraph v1"
    g2, ls2, lengths2, twists2 = parse_graph(text)
    assert serialize_graph(g2, ls2, lengths2, twists2) == text
    assert g2.vertices == g.vertices
    assert g2.edges() == g.edges()
    assert g2.free == g.free
    assert g2.rays == g.rays
    assert ls2.levels == {c: l for c, l in ls.levels.items()}
    assert lengths2 == lengths
    assert twists2 == twists


def test_serialize_runs_and_floats():
    g = TruncatedGraph()
    g.add_vertex("p:0")
    g.add_vertex("p:1")
    g.set_free(Slot("p:0", 0), "boundary")
    g.set_free(Slot("p:0", 2), "cusp")
    g.set_free(Slot("p:1", 1), "boundary")
    g.set_free(Slot("p:1", 2), "cusp")
    big = 28 * 10 ** 174 + 7  # exact spine counts survive the round trip
    g.add_run(Run("r:0", Slot("p:0", 1), Slot("p:1", 0), count=big, hang="boundary"))
    text = serialize_graph(g, lengths={"p:0.0": 0.1})
    assert "run r:0 p:0.1 p:1.0 count=%d hang=boundary" % big in text
    assert "length=1.0000000000000001e-01" in text
    g2, _, lengths2, _ = parse_graph(text)
    assert g2.runs["r:0"].count == big
    assert lengths2["p:0.0"] == 0.1


@pytest.mark.parametrize("bad", [
    "vertex x",
    "pantsgraph v1\nedge a.0--b.0 a.0 b.0",
    "pantsgraph v1\nvertex x\nvertex x",
    "pantsgraph v1\nvertex x\nwat x",
    "pantsgraph v1\nvertex x\nedge x.0--x.1 x.0 x.1\nfree x.2 kind=wat",
    "pantsgraph v1\nvertex x\nedge y x.0 x.1\nfree x.2 kind=cusp",
    "pantsgraph v1\nvertex x\nrun r x.0 x.1 hang=cusp",
])
def test_parse_errors(bad):
    with pytest.raises(MalformedGraph):
        parse_graph(bad)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["z", "flute", "tree"]),
       st.sampled_from([(0, 1), (1, 0), (1, 2), (2, 1)]),
       st.integers(0, 2))
def test_random_attachments_stay_valid(base_kind, ab, modk):
    base = {"z": z_graph, "flute": flute, "tree": trivalent_tree}[base_kind]()
    if base_kind == "tree":
        built = base
    else:
        def piece(s):
            i = int(s.vertex.split(":")[1])
            if i % 3 == modk:
                return loop_graph(*ab)
            if i % 3 == (modk + 1) % 3:
                return bare_ray_scheme()
            return None

        built = attach(base, all_free_slots("cusp"), piece)
    for d in range(3):
        validate_graph(built.truncate(d))
    check_scheme_compatibility(built, range(3))
    g = built.truncate(2)
    assert len(g.components()) == 1
