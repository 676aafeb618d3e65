"""Named surface-and-mapping fixtures exercising every verdict route.

Each entry in FIXTURES is a zero-argument recipe returning a pair
``(structure, mapping)`` ready for :func:`bigsurf.certify.certify`.
The graphs are small enough to truncate quickly yet rich enough to pin
one route each: ladder shifts for the structural route and for length
ratios along the spine, condensed cuspidal clouds for block ratios,
fenced clouds for a shift whose support dodges the punctures, swaps of
identical arms for composites, and twist families for the dilatation
window.
"""

from typing import Callable, Dict, Tuple

import mpmath

from .certify import MappingScheme
from .construct import BifluteParams, biflute
from .geometry import (Clause, FNStructure, Formula, RuleSet, assign_lengths,
                       unit_structure)
from .pantsgraph import (PantsScheme, Run, Slot, TruncatedGraph,
                         all_free_slots, attach, flute)

__all__ = ["FIXTURES", "armed_flute", "fenced_ladder", "ladder",
           "sparse_ladder"]


# ---------------------------------------------------------------------------
# the bi-infinite ladder
# ---------------------------------------------------------------------------

def ladder() -> PantsScheme:
    """One standard handle at every spine station, one cusp between."""
    return biflute(BifluteParams.constant(0, 1, 1), name="ladder")


def ladder_shift() -> MappingScheme:
    return MappingScheme(kind="shift-along-biflute", name="ladder-shift",
                         rules=(("bump", "z:", 1),),
                         along=BifluteParams.constant(0, 1, 1),
                         carrier=ladder())


def exp_odd_lengths() -> FNStructure:
    """Unit cuffs except on odd spine edges, whose lengths run e^i."""
    rules = RuleSet((Clause("spine", "odd", Formula("exp")),
                     Clause("*", "all", Formula("const", 1.0))))
    return assign_lengths(ladder(), rules, 0.0)


def exp_all_lengths() -> FNStructure:
    """Every spine edge of length e^|i|; ratios stall at a single step."""
    rules = RuleSet((Clause("spine", "all", Formula("exp")),
                     Clause("*", "all", Formula("const", 1.0))))
    return assign_lengths(ladder(), rules, 0.0)


# ---------------------------------------------------------------------------
# condensed clouds: puncture blocks of size floor(e^(e^|i|))
# ---------------------------------------------------------------------------

def _cloud_size(i: int) -> int:
    n = abs(i)
    digits = int(mpmath.e ** n * 0.4343) + 30
    with mpmath.workdps(digits):
        return int(mpmath.floor(mpmath.exp(mpmath.exp(n))))


def sparse_ladder() -> PantsScheme:
    """Handle stations separated by rapidly growing puncture blocks.
    The blocks sit directly on the spine as condensed runs, so a shift
    must match their sizes block against block."""

    def build(d: int) -> TruncatedGraph:
        g = TruncatedGraph()
        for i in range(-d, d + 1):
            p, h = "p:%d" % i, "h:%d" % i
            g.vertices.update((p, h))
            g.pair(Slot(p, 2), Slot(h, 0), "delta", i)
            g.pair(Slot(h, 1), Slot(h, 2), "handle", i)
        for i in range(-d, d):
            g.add_run(Run("q:%d" % i, Slot("p:%d" % i, 1),
                          Slot("p:%d" % (i + 1), 0), _cloud_size(i), "cusp"))
        g.frontier.update((Slot("p:%d" % -d, 0), Slot("p:%d" % d, 1)))
        return g

    scheme = PantsScheme(build, name="sparse_ladder")
    scheme.meta["run_growth"] = Formula("expexp")
    return scheme


def sparse_shift() -> MappingScheme:
    return MappingScheme(kind="shift-along-biflute", name="sparse-shift",
                         rules=(("bump", "p:", 1), ("bump", "h:", 1),
                                ("bump", "q:", 1)),
                         along=BifluteParams.constant(0, 1, 2))


# ---------------------------------------------------------------------------
# fenced clouds: the same blocks hung off bridge vertices
# ---------------------------------------------------------------------------

def fenced_ladder() -> PantsScheme:
    """Each puncture block moved off the spine behind a bridge vertex,
    so a curve fences it away from the handles.  A shift of the spine
    and bridges can then leave every block where it is."""

    def build(d: int) -> TruncatedGraph:
        g = TruncatedGraph()
        for i in range(-d, d + 1):
            p, h = "p:%d" % i, "h:%d" % i
            g.vertices.update((p, h))
            g.pair(Slot(p, 2), Slot(h, 0), "delta", i)
            g.pair(Slot(h, 1), Slot(h, 2), "handle", i)
        for i in range(-d, d):
            b, c, t = "b:%d" % i, "c:%d" % i, "t:%d" % i
            g.vertices.update((b, c, t))
            g.pair(Slot("p:%d" % i, 1), Slot(b, 0), "spine", 2 * i)
            g.pair(Slot(b, 2), Slot("p:%d" % (i + 1), 0), "spine", 2 * i + 1)
            g.pair(Slot(b, 1), Slot(c, 0), "bloom", i)
            g.set_free(Slot(c, 2), "cusp")
            g.add_run(Run("w:%d" % i, Slot(c, 1), Slot(t, 0),
                          _cloud_size(i), "cusp"))
            g.set_free(Slot(t, 1), "cusp")
            g.set_free(Slot(t, 2), "cusp")
        g.frontier.update((Slot("p:%d" % -d, 0), Slot("p:%d" % d, 1)))
        return g

    return PantsScheme(build, name="fenced_ladder")


def fenced_shift() -> MappingScheme:
    return MappingScheme(kind="shift-along-biflute", name="fenced-shift",
                         rules=(("bump", "p:", 1), ("bump", "b:", 1),
                                ("bump", "h:", 1)),
                         support=("p:", "b:", "h:"),
                         along=BifluteParams.constant(0, 1, 2),
                         carrier=biflute(BifluteParams.constant(0, 1, 2)))


# ---------------------------------------------------------------------------
# a flute with identical handle-bearing arms at even stations
# ---------------------------------------------------------------------------

def armed_flute() -> PantsScheme:
    """One-ended spine with a copy of the same infinite arm (handles
    every other station) glued at each even position."""
    arm = biflute(BifluteParams.constant(0, 1, 2, base="N"))

    def arm_at(s: Slot):
        return arm if int(s.vertex[2:]) % 2 == 0 else None

    return attach(flute(), all_free_slots("cusp"), arm_at,
                  glue_index=lambda s: int(s.vertex[2:]), name="armed_flute")


def arm_swap(i: int, j: int) -> MappingScheme:
    pi, pj = "f:%d.2/" % i, "f:%d.2/" % j
    return MappingScheme(kind="end-swap", name="arm-swap-%d-%d" % (i, j),
                         rules=(("prefix", pi, pj), ("prefix", pj, pi)),
                         support=(pi, pj))


def arm_cascade(pairs: int = 6) -> MappingScheme:
    """Swap arm 4k with arm 4k+2 for every k at once; the declared
    block bounds record that the k-th swap costs on the order of k."""
    return MappingScheme(kind="composite", name="arm-cascade",
                         factors=tuple(arm_swap(4 * k, 4 * k + 2)
                                       for k in range(pairs)),
                         disjoint_support=True,
                         block_bounds=Formula("linear", 1.0))


# ---------------------------------------------------------------------------
# declared stretch blocks and twist families
# ---------------------------------------------------------------------------

def block_stretch() -> MappingScheme:
    """Blockwise stretch map whose i-th block dilatation is declared to
    grow like e^i."""
    return MappingScheme(kind="pa-blocks", name="block-stretch",
                         block_bounds=Formula("exp"))


def unit_multitwist() -> MappingScheme:
    return MappingScheme(
        kind="multitwist", name="unit-multitwist",
        powers=RuleSet((Clause("spine", "all", Formula("const", 1.0)),
                        Clause("*", "all", Formula("const", 0.0)))))


def growing_multitwist() -> MappingScheme:
    return MappingScheme(
        kind="multitwist", name="growing-multitwist",
        powers=RuleSet((Clause("spine", "all", Formula("linear", 1.0)),
                        Clause("*", "all", Formula("const", 0.0)))))


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

FIXTURES: Dict[str, Callable[[], Tuple[FNStructure, MappingScheme]]] = {
    "ladder-shift-unit": lambda: (unit_structure(ladder()), ladder_shift()),
    "ladder-shift-odd-exp": lambda: (exp_odd_lengths(), ladder_shift()),
    "ladder-shift-all-exp": lambda: (exp_all_lengths(), ladder_shift()),
    "sparse-shift": lambda: (unit_structure(sparse_ladder()), sparse_shift()),
    "fenced-shift": lambda: (unit_structure(fenced_ladder()), fenced_shift()),
    "arm-cascade": lambda: (unit_structure(armed_flute()), arm_cascade()),
    "arm-swap": lambda: (unit_structure(armed_flute()), arm_swap(0, 2)),
    "block-stretch": lambda: (unit_structure(ladder()), block_stretch()),
    "multitwist-unit": lambda: (unit_structure(ladder()), unit_multitwist()),
    "multitwist-growing": lambda: (unit_structure(ladder()),
                                   growing_multitwist()),
}
