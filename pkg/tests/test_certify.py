"""Mapping schemes, dilatation windows and the certify verdict routes."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bigsurf.certify import (
    Certificate,
    CurveNotCarried,
    FiniteGenusComplement,
    MalformedMapping,
    MappingScheme,
    MapUndefinedOnCurve,
    NoWitness,
    Thresholds,
    UnboundedFamily,
    agree_on_core,
    approximant_sequence,
    certify,
    identity_scheme,
    map_curve,
    matsuzaki_bounds,
    serialize_certificate,
    wolpert_lower_bound,
)
from bigsurf.construct import standard_tree
from bigsurf.fixtures import (
    FIXTURES,
    arm_cascade,
    arm_swap,
    armed_flute,
    exp_odd_lengths,
    ladder,
    ladder_shift,
)
from bigsurf.geometry import (
    BlockPath,
    Clause,
    Cuff,
    EdgePath,
    Formula,
    NonPositiveLength,
    RuleSet,
    unit_structure,
)
from bigsurf.pantsgraph import PantsScheme, Slot, TruncatedGraph

TOL = 1e-12


# ---------------------------------------------------------------------------
# dilatation windows
# ---------------------------------------------------------------------------

def test_unit_twist_window_matches_high_precision():
    # digits from oracles.multitwist_dilatation_bounds at 50 digits
    lo, hi = matsuzaki_bounds([1.0], [1])
    assert abs(lo - 1.5641895835477563) < TOL
    assert abs(hi - 1.5755680389831543) < TOL


def test_zero_power_window_is_exactly_one():
    assert matsuzaki_bounds([1.0], [0]) == (1.0, 1.0)
    assert matsuzaki_bounds([2.5], [0]) == (1.0, 1.0)
    assert matsuzaki_bounds([], []) == (1.0, 1.0)


def test_short_cuff_window_collapses_onto_upper_bound():
    # the raw lower estimate (1.7878478774854901 at 50 digits) overshoots
    # the exact annulus dilatation here, so the window closes up
    lo, hi = matsuzaki_bounds([0.05], [20])
    assert abs(hi - 1.3799725522628861) < TOL
    assert lo == hi


def test_long_cuff_window_spreads():
    # digits from oracles.multitwist_dilatation_bounds at 50 digits
    lo, hi = matsuzaki_bounds([10.0], [3])
    assert abs(lo - 4.9894228040143268) < 1e-11
    assert abs(hi - 1239028.2007868249) < 1e-6


def test_family_window_takes_running_sup():
    # digits from oracles.multitwist_dilatation_bounds at 50 digits
    lo, hi = matsuzaki_bounds([2.5, 1.0], [2, 5])
    assert abs(lo - 2.6925687506432689) < TOL
    assert abs(hi - 22.023195273594721) < 1e-10


def test_window_ordered_and_monotone_on_grid():
    lengths = [0.05 + 0.995 * k for k in range(11)]
    powers = list(range(21))
    table = {(l, n): matsuzaki_bounds([l], [n])
             for l in lengths for n in powers}
    for (l, n), (lo, hi) in table.items():
        assert 1.0 <= lo <= hi
        if n > 0:
            plo, phi = table[(l, n - 1)]
            assert lo >= plo and hi >= phi
    for n in powers:
        for la, lb in zip(lengths, lengths[1:]):
            assert table[(la, n)][1] <= table[(lb, n)][1]


@given(st.floats(0.05, 10.0), st.integers(0, 20))
@settings(max_examples=120, deadline=None)
def test_window_ordered_everywhere(l, n):
    lo, hi = matsuzaki_bounds([l], [n])
    assert 1.0 <= lo <= hi


def test_window_formula_mode_matches_sequence_mode():
    one = Formula("const", 1.0)
    assert matsuzaki_bounds(one, one) == matsuzaki_bounds([1.0], [1])
    zero = Formula("const", 0.0)
    assert matsuzaki_bounds(one, zero) == (1.0, 1.0)


def test_window_diverges_for_growing_families():
    with pytest.raises(UnboundedFamily):
        matsuzaki_bounds(Formula("const", 1.0), Formula("linear", 1.0))
    with pytest.raises(UnboundedFamily):
        matsuzaki_bounds(Formula("exp"), Formula("const", 2.0))


def test_window_rejects_bad_input():
    with pytest.raises(MalformedMapping):
        matsuzaki_bounds([1.0], [1.5])
    with pytest.raises(MalformedMapping):
        matsuzaki_bounds(Formula("const", 1.0), Formula("const", 0.5))
    with pytest.raises(MalformedMapping):
        matsuzaki_bounds([1.0], [1, 2])
    with pytest.raises(NonPositiveLength):
        matsuzaki_bounds([0.0], [1])


# ---------------------------------------------------------------------------
# mapping schemes
# ---------------------------------------------------------------------------

def test_action_bump_prefix_and_pairs():
    f = MappingScheme(kind="compact", rules=(("bump", "z:", 2),))
    assert f.action("z:-3") == "z:-1"
    assert f.action("z:4.2/l:1") == "z:6.2/l:1"
    g = MappingScheme(kind="end-swap", rules=(("prefix", "a/", "b/"),
                                              ("prefix", "b/", "a/")))
    assert g.action("a/x:1") == "b/x:1"
    assert g.action("b/x:1") == "a/x:1"
    h = MappingScheme(kind="compact", rules=(("pairs", (("u", "v"),)),))
    assert h.action("u") == "v"
    assert h.action("w") == "w"


def test_action_support_and_identity_rest():
    f = MappingScheme(kind="compact", rules=(("bump", "z:", 1),),
                      support=("z:",))
    assert f.action("c:0") == "c:0"
    g = MappingScheme(kind="compact", rules=(("bump", "z:", 1),),
                      support=("z:", "c:"), identity_rest=False)
    assert g.action("c:0") is None
    assert g.action("z:0") == "z:1"


def test_inverse_round_trip_on_ladder_vertices():
    f = ladder_shift()
    inv = f.inverse()
    g = ladder().truncate(5)
    for v in g.vertices:
        assert inv.action(f.action(v)) == v
    swap = arm_swap(0, 2)
    assert swap.inverse().rules == (("prefix", "f:2.2/", "f:0.2/"),
                                    ("prefix", "f:0.2/", "f:2.2/"))


def test_composite_action_chains_factors():
    cascade = arm_cascade()
    assert cascade.action("f:0.2/f:3") == "f:2.2/f:3"
    assert cascade.action("f:6.2/f:0.2/l:1") == "f:4.2/f:0.2/l:1"
    assert cascade.action("f:1") == "f:1"
    assert cascade.moves_anything()
    assert not identity_scheme().moves_anything()


def test_scheme_validation():
    with pytest.raises(MalformedMapping):
        MappingScheme(kind="teleport")
    with pytest.raises(MalformedMapping):
        MappingScheme(kind="multitwist")
    with pytest.raises(MalformedMapping):
        MappingScheme(kind="composite")
    with pytest.raises(MalformedMapping):
        MappingScheme(kind="pa-blocks")
    with pytest.raises(MalformedMapping):
        MappingScheme(kind="composite", disjoint_support=True,
                      factors=(arm_swap(0, 2), arm_swap(2, 4)))
    with pytest.raises(MalformedMapping):
        FIXTURES["multitwist-unit"]()[1].inverse()


@given(st.integers(-4, 4), st.integers(0, 4))
@settings(max_examples=40, deadline=None)
def test_bump_inverse_is_exact(offset, station):
    f = MappingScheme(kind="compact", rules=(("bump", "z:", offset),))
    v = "z:%d.2/l:1" % station
    assert f.inverse().action(f.action(v)) == v


# ---------------------------------------------------------------------------
# curve images
# ---------------------------------------------------------------------------

def test_map_curve_on_cuffs_runs_and_paths():
    f = ladder_shift()
    assert map_curve(f, Cuff("z:0.1--z:1.0")) == Cuff("z:1.1--z:2.0")
    assert map_curve(f, Cuff("z:-1.2")) == Cuff("z:0.2")
    path = EdgePath((("z:0.1--z:1.0", 2),))
    assert map_curve(f, path) == EdgePath((("z:1.1--z:2.0", 2),))
    g = MappingScheme(kind="compact", rules=(("bump", "q:", 1),))
    assert map_curve(g, BlockPath("q:0", 2)) == BlockPath("q:1", 2)


def test_map_curve_propagates_undefined():
    f = MappingScheme(kind="compact", rules=(), support=("z:",),
                      identity_rest=False)
    assert map_curve(f, Cuff("z:0.1--z:1.0")) is None
    assert map_curve(f, EdgePath((("z:0.1--z:1.0", 1),))) is None


# ---------------------------------------------------------------------------
# ratio lower bounds
# ---------------------------------------------------------------------------

def test_identity_ratio_is_exactly_one():
    x = unit_structure(ladder())
    r, label = wolpert_lower_bound(x, x, identity_scheme(),
                                   [Cuff("z:0.1--z:1.0")], depth=4)
    assert r == 1.0
    assert label == "z:0.1--z:1.0"


def test_shift_ratio_on_growing_lengths_is_formula_exact():
    x = exp_odd_lengths()
    best, label = wolpert_lower_bound(
        x, x, ladder_shift(),
        [Cuff("z:%d.1--z:%d.0" % (i, i + 1)) for i in range(0, 15, 2)],
        depth=16)
    assert abs(best - math.exp(15)) / math.exp(15) < TOL
    assert label == "z:14.1--z:15.0"


def test_ratio_is_symmetric_under_inverse():
    x = exp_odd_lengths()
    f = ladder_shift()
    src = Cuff("z:2.1--z:3.0")
    img = map_curve(f, src)
    fwd, _ = wolpert_lower_bound(x, x, f, [src], depth=8)
    back, _ = wolpert_lower_bound(x, x, f.inverse(), [img], depth=8)
    assert abs(fwd - back) < TOL


def test_ratio_errors():
    x = unit_structure(ladder())
    with pytest.raises(CurveNotCarried):
        wolpert_lower_bound(x, x, identity_scheme(), [], depth=4)
    broken = MappingScheme(kind="compact", rules=(), support=("z:",),
                           identity_rest=False)
    with pytest.raises(MapUndefinedOnCurve):
        wolpert_lower_bound(x, x, broken, [Cuff("z:0.1--z:1.0")], depth=4)


# ---------------------------------------------------------------------------
# verdicts, one fixture per route
# ---------------------------------------------------------------------------

def test_unit_ladder_shift_is_modular():
    x, f = FIXTURES["ladder-shift-unit"]()
    cert = certify(x, f, depth=8)
    assert cert.verdict == "MODULAR"
    w = dict(cert.witness)
    assert w["m"] == "1" and w["t"] == "0"
    assert w["route"] == "pants-to-pants"
    assert w["along-verified"] == "yes"


def test_odd_exp_shift_diverges_with_exp_ratios():
    x, f = FIXTURES["ladder-shift-odd-exp"]()
    cert = certify(x, f, depth=16)
    assert cert.verdict == "NOT_QC"
    assert cert.growth == "exp"
    by_index = {i: r for i, _, r in cert.sequence}
    for i in (2, 4, 6):
        assert abs(by_index[i] - math.exp(i + 1)) / math.exp(i + 1) < 1e-9
    assert cert.sequence[-1][2] >= 1e6


def test_odd_exp_shift_is_inconclusive_at_shallow_depth():
    x, f = FIXTURES["ladder-shift-odd-exp"]()
    cert = certify(x, f, depth=8)
    assert cert.verdict == "INCONCLUSIVE"
    assert "no diverging ratio sequence" in cert.blocking


def test_symmetric_exp_shift_is_inconclusive():
    x, f = FIXTURES["ladder-shift-all-exp"]()
    cert = certify(x, f, depth=16)
    assert cert.verdict == "INCONCLUSIVE"
    assert "lengths are not bounded-type" in cert.blocking


def test_sparse_blocks_force_doubly_exponential_divergence():
    x, f = FIXTURES["sparse-shift"]()
    cert = certify(x, f, depth=6)
    assert cert.verdict == "NOT_QC"
    assert cert.growth == "doubexp"
    assert len(cert.sequence) >= 3
    rs = [r for _, _, r in cert.sequence]
    assert all(a < b for a, b in zip(rs, rs[1:]))
    assert rs[-1] >= 1e6


def test_fenced_blocks_leave_a_modular_shift():
    x, f = FIXTURES["fenced-shift"]()
    cert = certify(x, f, depth=6)
    assert cert.verdict == "MODULAR"
    w = dict(cert.witness)
    assert w["along"] == "(0,1,2;Z)"
    assert w["along-verified"] == "yes"


def test_arm_cascade_diverges_linearly():
    x, f = FIXTURES["arm-cascade"]()
    cert = certify(x, f, depth=8)
    assert cert.verdict == "NOT_QC"
    assert cert.growth == "linear"
    assert cert.sequence[0] == (1, "block:1", 1.0)
    assert cert.sequence[1] == (2, "block:2", 2.0)
    assert cert.sequence[-1][2] >= 1e6


def test_single_arm_swap_is_modular():
    x, f = FIXTURES["arm-swap"]()
    cert = certify(x, f, depth=8)
    assert cert.verdict == "MODULAR"
    assert dict(cert.witness)["route"] == "pants-to-pants"


def test_declared_stretch_blocks_diverge():
    x, f = FIXTURES["block-stretch"]()
    cert = certify(x, f, depth=8)
    assert cert.verdict == "NOT_QC"
    assert cert.growth == "exp"


def test_declared_table_blocks():
    table = ((0, "block:0", 2.0), (1, "block:1", 90.0), (2, "block:2", 2e6))
    f = MappingScheme(kind="pa-blocks", block_bounds=table)
    cert = certify(unit_structure(ladder()), f, depth=4)
    assert cert.verdict == "NOT_QC"
    assert cert.growth == "declared"
    assert cert.sequence == table
    flat = ((0, "block:0", 2.0), (1, "block:1", 2.0), (2, "block:2", 2e6))
    g = MappingScheme(kind="pa-blocks", block_bounds=flat)
    assert certify(unit_structure(ladder()), g, depth=4).verdict == "INCONCLUSIVE"


def test_unit_multitwist_window():
    x, f = FIXTURES["multitwist-unit"]()
    cert = certify(x, f, depth=8)
    assert cert.verdict == "MODULAR"
    assert dict(cert.witness)["route"] == "multitwist"
    lo, hi = cert.interval
    assert abs(lo - 1.5641895835477563) < TOL
    assert abs(hi - 1.5755680389831543) < TOL


def test_growing_multitwist_diverges_as_square_root():
    x, f = FIXTURES["multitwist-growing"]()
    cert = certify(x, f, depth=8)
    assert cert.verdict == "NOT_QC"
    assert cert.growth == "sqrt"
    i0, _, v0 = cert.sequence[0]
    assert i0 == 1
    assert abs(v0 - (math.sqrt(1 / math.pi) + 1)) < TOL


def test_sparse_shift_blocking_names_the_mismatch():
    x, f = FIXTURES["sparse-shift"]()
    cert = certify(x, f, depth=2)
    assert cert.verdict == "INCONCLUSIVE"
    assert "different block" in cert.blocking


def test_certificate_serialization_golden():
    x, f = FIXTURES["multitwist-unit"]()
    text = serialize_certificate(certify(x, f, depth=8))
    assert text == (
        "certificate v1\n"
        "verdict=MODULAR\n"
        "witness=route:multitwist classes:34\n"
        "interval=1.56418958354776,1.57556803898315\n"
        "depth=8\n")
    y, g = FIXTURES["ladder-shift-all-exp"]()
    lines = serialize_certificate(certify(y, g, depth=6)).splitlines()
    assert lines[0] == "certificate v1"
    assert lines[1] == "verdict=INCONCLUSIVE"
    assert any(l.startswith("blocking=") for l in lines)


def test_thresholds_are_honoured():
    x, f = FIXTURES["sparse-shift"]()
    strict = Thresholds(min_terms=40, ratio=1e6)
    assert certify(x, f, depth=6, thresholds=strict).verdict == "INCONCLUSIVE"
    x, f = FIXTURES["ladder-shift-odd-exp"]()
    loose = Thresholds(min_terms=3, ratio=1e3)
    assert certify(x, f, depth=10, thresholds=loose).verdict == "NOT_QC"


# ---------------------------------------------------------------------------
# finite-stage approximants
# ---------------------------------------------------------------------------

def test_composite_approximants_agree_on_cores():
    x = unit_structure(armed_flute())
    cascade = arm_cascade()
    seq = approximant_sequence(x, cascade, depth=8)
    assert len(seq) == 9
    for n, f in enumerate(seq):
        assert agree_on_core(f, cascade, x.scheme.truncate(n))
    assert len(seq[0].factors) == 1
    assert len(seq[8].factors) < len(cascade.factors)
    assert certify(x, seq[4], depth=8).verdict == "MODULAR"


def test_pa_approximants_are_compact():
    x = unit_structure(ladder())
    target = FIXTURES["block-stretch"]()[1]
    seq = approximant_sequence(x, target, depth=4)
    assert all(f.kind == "compact" for f in seq)
    assert agree_on_core(seq[2], target, x.scheme.truncate(2))


def test_end_swap_approximants_need_witnesses():
    x = unit_structure(armed_flute())
    with pytest.raises(NoWitness):
        approximant_sequence(x, arm_swap(0, 2), depth=4)
    tree = standard_tree(0)
    assert tree.meta.get("witnesses")
    swap = MappingScheme(kind="end-swap", rules=(("prefix", "t:rL", "t:rR"),
                                                 ("prefix", "t:rR", "t:rL")),
                         support=("t:rL", "t:rR"))
    seq = approximant_sequence(unit_structure(tree), swap, depth=3)
    assert len(seq) == 4


def _stub_chain(k: int) -> PantsScheme:
    """Chain of k+1 pants ending in a handle; the genus stops growing."""

    def build(d: int) -> TruncatedGraph:
        g = TruncatedGraph()
        n = min(d, k)
        for i in range(n + 1):
            g.vertices.add("m:%d" % i)
        g.set_free(Slot("m:0", 0), "boundary")
        for i in range(n):
            g.pair(Slot("m:%d" % i, 1), Slot("m:%d" % (i + 1), 0), "stem", i)
            g.set_free(Slot("m:%d" % i, 2), "cusp")
        last = Slot("m:%d" % n, 1)
        if n == k:
            g.pair(last, Slot("m:%d" % n, 2), "handle", 0)
        else:
            g.frontier.add(last)
            g.set_free(Slot("m:%d" % n, 2), "cusp")
        return g

    return PantsScheme(build, name="stub_chain", root_slot=Slot("m:0", 0))


def test_vanishing_genus_tail_is_rejected():
    x = unit_structure(_stub_chain(3))
    with pytest.raises(FiniteGenusComplement):
        approximant_sequence(x, identity_scheme(), depth=3)
    ok = unit_structure(ladder())
    assert approximant_sequence(ok, identity_scheme(), depth=3)


def test_certificate_fields_default_empty():
    cert = Certificate("MODULAR", 4)
    assert cert.witness == () and cert.interval is None
    assert cert.sequence == () and cert.growth is None
