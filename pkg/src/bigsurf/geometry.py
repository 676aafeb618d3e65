"""Hyperbolic length data on pants graphs.

Cuff lengths and twists are given by rules, not per-curve tables, so an
infinite decomposition has a finite description: a rule is an ordered
clause list matched against a curve's (family, index) class, first match
wins.  Formulas are the handful of index laws the constructions need:
constants, exp(|i|), exp(exp(|i|)), 1/(1+|i|) and linear twists c*i.

Transverse curves are measured through collars: a simple curve crossing
a cuff of length l picks up at least 2*asinh(1/sinh(l/2)).  Lengths of
paths routed through a condensed run use a declared per-block slack and
end cap for the upper bound; the constants are NOT derived from
hyperbolic geometry, so nothing may depend on their exact values beyond
"finite and positive" (divergence verdicts compare lower bounds of one
family against upper bounds of another whose growth is slower by an
exponential, which swallows any constant).

Text format ``structure v1`` (clause order is match order)::

    structure v1
    length spine odd exp
    length * all const 1.0
    twist * all const 0.0
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .pantsgraph import PantsScheme, Run, Slot, TruncatedGraph

DECLARED_BLOCK_SLACK = 2.0  # declared, not derived: per-block upper padding
DECLARED_ENDCAP = 4.0       # declared, not derived: per-path upper padding


class NonPositiveLength(ValueError):
    pass


class PathNotCarried(ValueError):
    pass


class MalformedStructure(ValueError):
    pass


def collar_width(l: float) -> float:
    """Half-width of the standard embedded collar around a cuff."""
    if l <= 0:
        raise NonPositiveLength("collar needs a positive length, got %r" % l)
    return math.asinh(1.0 / math.sinh(l / 2.0))


def crossing_cost(l: float) -> float:
    """Least length a transverse simple curve spends crossing the collar."""
    return 2.0 * collar_width(l)


# ---------------------------------------------------------------------------
# rules
# ---------------------------------------------------------------------------

FORMULA_KINDS = ("const", "exp", "expexp", "inv", "linear")


@dataclass(frozen=True)
class Formula:
    kind: str
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in FORMULA_KINDS:
            raise MalformedStructure("unknown formula %r" % self.kind)

    def value(self, index: Optional[int]) -> float:
        i = abs(index) if index is not None else 0
        if self.kind == "const":
            return self.c
        if self.kind == "exp":
            return math.exp(i)
        if self.kind == "expexp":
            return math.exp(math.exp(i))
        if self.kind == "inv":
            return 1.0 / (1.0 + i)
        return self.c * (index or 0)  # linear, signed

    def bounded(self) -> Tuple[bool, Optional[float]]:
        """Bounded away from 0 and infinity over all indices, with the
        bound M >= max(value, 1/value) when it exists."""
        if self.kind == "const":
            if self.c <= 0:
                return False, None
            return True, max(self.c, 1.0 / self.c)
        return False, None

    def bounded_magnitude(self) -> Tuple[bool, Optional[float]]:
        """sup |value| over all indices, for twists."""
        if self.kind == "const":
            return True, abs(self.c)
        if self.kind == "inv":
            return True, 1.0
        return False, None

    def growth(self) -> Optional[str]:
        return {"exp": "exp", "expexp": "doubexp", "linear": "linear"}.get(self.kind)

    def __str__(self):
        if self.kind in ("const", "linear"):
            return "%s %s" % (self.kind, repr(self.c))
        return self.kind


@dataclass(frozen=True)
class Clause:
    family: str          # edge family, or "*" for any
    match: object        # "all" | "odd" | "even" | frozenset of indices
    formula: Formula

    def matches(self, family: str, index: Optional[int]) -> bool:
        if self.family != "*" and self.family != family:
            return False
        if self.match == "all":
            return True
        if index is None:
            return False
        if self.match == "odd":
            return index % 2 != 0
        if self.match == "even":
            return index % 2 == 0
        return index in self.match


@dataclass(frozen=True)
class RuleSet:
    clauses: Tuple[Clause, ...]

    def value(self, family: str, index: Optional[int]) -> float:
        for cl in self.clauses:
            if cl.matches(family, index):
                return cl.formula.value(index)
        raise MalformedStructure("no rule covers (%s, %s)" % (family, index))

    def formula_for(self, family: str, index: Optional[int]) -> Formula:
        for cl in self.clauses:
            if cl.matches(family, index):
                return cl.formula
        raise MalformedStructure("no rule covers (%s, %s)" % (family, index))


def const_rule(v: float) -> RuleSet:
    return RuleSet((Clause("*", "all", Formula("const", v)),))


# ---------------------------------------------------------------------------
# structures
# ---------------------------------------------------------------------------

@dataclass
class FNStructure:
    lengths: RuleSet
    twists: RuleSet
    scheme: Optional[PantsScheme] = None

    def cuff_length(self, g: TruncatedGraph, curve_id: str) -> float:
        """Length of a decomposition curve or boundary circle.  Cusps
        carry no geodesic."""
        if curve_id in g.edge_class:
            fam, idx = g.edge_class[curve_id]
        else:
            try:
                s = Slot.parse(curve_id)
            except Exception:
                raise PathNotCarried("no curve %s in graph" % curve_id)
            kind = g.free.get(s)
            if kind is None:
                raise PathNotCarried("no curve %s in graph" % curve_id)
            if kind == "cusp":
                raise PathNotCarried("cusp %s has no geodesic" % curve_id)
            fam, idx = "boundary", None
        l = self.lengths.value(fam, idx)
        if l <= 0:
            raise NonPositiveLength("rule gives length %r to %s" % (l, curve_id))
        return l

    def twist(self, g: TruncatedGraph, curve_id: str) -> float:
        if curve_id not in g.edge_class:
            raise PathNotCarried("no edge %s in graph" % curve_id)
        fam, idx = g.edge_class[curve_id]
        return self.twists.value(fam, idx)

    def run_cuff_length(self, run: Run) -> float:
        l = self.lengths.value("run", None)
        if l <= 0:
            raise NonPositiveLength("rule gives length %r inside run %s" % (l, run.id))
        return l

    def bounded_type(self) -> Tuple[bool, Optional[float]]:
        """Symbolic verdict: every length clause bounded away from 0 and
        infinity, with the witness constant M."""
        m = 1.0
        for cl in self.lengths.clauses:
            ok, cm = cl.formula.bounded()
            if not ok:
                return False, None
            m = max(m, cm)
        return True, m

    def untwisted(self) -> Tuple[bool, Optional[float]]:
        """Symbolic verdict: twist magnitudes uniformly bounded, with the
        witness constant T."""
        t = 0.0
        for cl in self.twists.clauses:
            ok, ct = cl.formula.bounded_magnitude()
            if not ok:
                return False, None
            t = max(t, ct)
        return True, t


def unit_structure(scheme: Optional[PantsScheme] = None) -> FNStructure:
    return FNStructure(lengths=const_rule(1.0), twists=const_rule(0.0),
                       scheme=scheme)


def assign_lengths(scheme: PantsScheme, rule, twists=None,
                   depth: int = 4) -> FNStructure:
    """Attach length and twist rules to a scheme.  Bare numbers become
    constant rules.  Every edge of the depth-``depth`` truncation must
    get a positive length and some twist."""
    if not isinstance(rule, RuleSet):
        rule = const_rule(float(rule))
    if twists is None:
        twists = const_rule(0.0)
    elif not isinstance(twists, RuleSet):
        twists = const_rule(float(twists))
    fn = FNStructure(lengths=rule, twists=twists, scheme=scheme)
    g = scheme.truncate(depth)
    for eid in g.edges():
        fn.cuff_length(g, eid)
        fn.twist(g, eid)
    return fn


def is_untwisted(fn: FNStructure, t: float, depth: int) -> bool:
    """Twist magnitudes at most t: settled symbolically when every
    clause is bounded under t, else checked on the depth truncation of
    the attached scheme."""
    ok, bound = fn.untwisted()
    if ok and bound <= t:
        return True
    if fn.scheme is None:
        return False
    g = fn.scheme.truncate(depth)
    return all(abs(fn.twist(g, e)) <= t for e in g.edges())


def verify_bounds_at_depth(fn: FNStructure, g: TruncatedGraph,
                           m: float, t: float) -> bool:
    """Numeric spot check of the symbolic verdicts on one truncation."""
    for eid in g.edges():
        l = fn.cuff_length(g, eid)
        if not (1.0 / m <= l <= m):
            return False
        if abs(fn.twist(g, eid)) > t:
            return False
    return True


# ---------------------------------------------------------------------------
# measured paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cuff:
    """The decomposition curve itself: exact length."""
    curve: str


@dataclass(frozen=True)
class EdgePath:
    """Closed curve transverse to the listed cuffs, crossing each a given
    number of times.  Gives a collar lower bound, no upper bound."""
    crossings: Tuple[Tuple[str, int], ...]


@dataclass(frozen=True)
class BlockPath:
    """Closed curve running the length of a condensed run, crossing all
    of its count cuffs `mult` times, plus explicit extra crossings.  The
    upper bound uses the declared block slack and end cap."""
    run: str
    mult: int = 1
    extra: Tuple[Tuple[str, int], ...] = ()


@dataclass(frozen=True)
class Bound:
    lo: float
    hi: Optional[float] = None

    def ratio_at_least(self, den: "Bound", r: float) -> bool:
        """Provably self/den >= r.  Needs an upper bound on den."""
        if den.hi is None or den.hi <= 0:
            return False
        return self.lo / den.hi >= r

    def ratio_lower(self, den: "Bound") -> Optional[float]:
        if den.hi is None or den.hi <= 0:
            return None
        return self.lo / den.hi


def curve_length(fn: FNStructure, g: TruncatedGraph, path) -> Bound:
    if isinstance(path, Cuff):
        l = fn.cuff_length(g, path.curve)
        return Bound(l, l)
    if isinstance(path, EdgePath):
        if not path.crossings:
            raise PathNotCarried("empty path")
        lo = 0.0
        for cid, mult in path.crossings:
            if mult < 1:
                raise PathNotCarried("crossing multiplicity must be >= 1")
            lo += mult * crossing_cost(fn.cuff_length(g, cid))
        return Bound(lo, None)
    if isinstance(path, BlockPath):
        run = g.runs.get(path.run)
        if run is None:
            raise PathNotCarried("no run %s in graph" % path.run)
        cuff = fn.run_cuff_length(run)
        lo = path.mult * run.count * crossing_cost(cuff)
        for cid, mult in path.extra:
            lo += mult * crossing_cost(fn.cuff_length(g, cid))
        hi = (path.mult * run.count * (crossing_cost(cuff) + DECLARED_BLOCK_SLACK)
              + DECLARED_ENDCAP)
        return Bound(lo, hi)
    raise PathNotCarried("unknown path %r" % (path,))


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

STRUCTURE_HEADER = "structure v1"


def _match_text(match) -> str:
    if isinstance(match, frozenset):
        return "in:%s" % ",".join(str(i) for i in sorted(match))
    return match


def _parse_match(text: str):
    if text in ("all", "odd", "even"):
        return text
    if text.startswith("in:"):
        return frozenset(int(x) for x in text[3:].split(","))
    raise MalformedStructure("bad index match %r" % text)


def serialize_structure(fn: FNStructure) -> str:
    lines = [STRUCTURE_HEADER]
    for label, rules in (("length", fn.lengths), ("twist", fn.twists)):
        for cl in rules.clauses:
            lines.append("%s %s %s %s" % (label, cl.family,
                                          _match_text(cl.match), cl.formula))
    return "\n".join(lines) + "\n"


def parse_structure(text: str) -> FNStructure:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != STRUCTURE_HEADER:
        raise MalformedStructure("missing '%s' header" % STRUCTURE_HEADER)
    lengths = []
    twists = []
    for ln in lines[1:]:
        fields = ln.split()
        if len(fields) < 4 or fields[0] not in ("length", "twist"):
            raise MalformedStructure("bad rule line %r" % ln)
        label, family, match = fields[0], fields[1], _parse_match(fields[2])
        kind = fields[3]
        if kind in ("const", "linear"):
            if len(fields) != 5:
                raise MalformedStructure("%s needs one constant in %r" % (kind, ln))
            formula = Formula(kind, float(fields[4]))
        else:
            if len(fields) != 4:
                raise MalformedStructure("unexpected arguments in %r" % ln)
            formula = Formula(kind)
        (lengths if label == "length" else twists).append(Clause(family, match, formula))
    if not lengths or not twists:
        raise MalformedStructure("need at least one length and one twist rule")
    return FNStructure(lengths=RuleSet(tuple(lengths)), twists=RuleSet(tuple(twists)))
