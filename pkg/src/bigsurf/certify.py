"""Mapping schemes on pants graphs and quasiconformal verdicts.

A mapping scheme is a finitely described vertex rewrite (shifts along
spines, region swaps, twist assignments, composites) acting on the
truncations of a scheme.  Certification routes, in order: declared
per-block dilatation bounds, multitwist windows, the pants-to-pants
structural route, and a transverse-length ratio sweep.  MODULAR and
NOT_QC verdicts are always depth-qualified: symbolic rule confirmation
plus a numeric check on one truncation.
"""

import math
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .construct import BifluteParams, recognize_biflute
from .geometry import (
    BlockPath,
    Bound,
    Cuff,
    EdgePath,
    FNStructure,
    Formula,
    MalformedStructure,
    NonPositiveLength,
    PathNotCarried,
    RuleSet,
    curve_length,
)
from .pantsgraph import PantsScheme, Slot, TruncatedGraph, edge_id

__all__ = [
    "CurveNotCarried",
    "MapUndefinedOnCurve",
    "UnboundedFamily",
    "MalformedMapping",
    "NoWitness",
    "FiniteGenusComplement",
    "MappingScheme",
    "identity_scheme",
    "Thresholds",
    "Certificate",
    "serialize_certificate",
    "matsuzaki_bounds",
    "wolpert_lower_bound",
    "certify",
    "approximant_sequence",
    "agree_on_core",
]


class CurveNotCarried(PathNotCarried):
    pass


class MapUndefinedOnCurve(ValueError):
    pass


class UnboundedFamily(ValueError):
    pass


class MalformedMapping(ValueError):
    pass


class NoWitness(ValueError):
    pass


class FiniteGenusComplement(ValueError):
    pass


# ---------------------------------------------------------------------------
# mapping schemes
# ---------------------------------------------------------------------------

MAP_KINDS = ("shift-along-biflute", "flute-shear", "multitwist", "end-swap",
             "compact", "composite", "pa-blocks")

_INT_TAIL = re.compile(r"(-?\d+)$")


@dataclass(frozen=True)
class MappingScheme:
    """Partial vertex rewrite plus the data each verdict route consumes.

    Rules fire first-match on vertex (and run) identifiers:
    ``("bump", prefix, offset)`` adds offset to the integer following
    the prefix, ``("prefix", old, new)`` swaps a leading path, and
    ``("pairs", ((a, b), ...))`` lists explicit images.  Identifiers
    outside ``support`` never move; unmatched ones inside stay fixed
    when ``identity_rest`` and are undefined otherwise."""

    kind: str
    name: str = ""
    rules: Tuple = ()
    identity_rest: bool = True
    support: Optional[Tuple[str, ...]] = None
    along: Optional[BifluteParams] = None
    carrier: Optional[PantsScheme] = field(default=None, compare=False)
    powers: Optional[RuleSet] = None
    block_bounds: Optional[object] = None  # Formula or ((index, label, value), ...)
    factors: Tuple["MappingScheme", ...] = ()
    disjoint_support: bool = False

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise MalformedMapping("unknown mapping kind %r" % self.kind)
        if self.kind == "multitwist" and self.powers is None:
            raise MalformedMapping("multitwist needs twisting powers")
        if self.kind == "composite" and not self.factors:
            raise MalformedMapping("composite needs factors")
        if self.kind == "pa-blocks" and self.block_bounds is None:
            raise MalformedMapping("pa-blocks needs declared block bounds")
        if self.disjoint_support:
            pres = [f.support for f in self.factors]
            if any(p is None for p in pres):
                raise MalformedMapping("disjoint-support factors need supports")
            flat = [q for p in pres for q in p]
            for i, p in enumerate(flat):
                for q in flat[i + 1:]:
                    if p.startswith(q) or q.startswith(p):
                        raise MalformedMapping(
                            "factor supports overlap: %r / %r" % (p, q))

    def in_support(self, ident: str) -> bool:
        if self.kind == "composite":
            return any(f.in_support(ident) for f in self.factors)
        if self.support is None:
            return True
        return any(ident.startswith(p) for p in self.support)

    def action(self, ident: str) -> Optional[str]:
        """Image of a vertex or run identifier; None when undefined."""
        if self.kind == "composite":
            out = ident
            for f in self.factors:
                out = f.action(out)
                if out is None:
                    return None
            return out
        if not self.in_support(ident):
            return ident
        for rule in self.rules:
            if rule[0] == "bump":
                _, prefix, offset = rule
                if ident.startswith(prefix):
                    m = re.match(r"(-?\d+)(.*)", ident[len(prefix):])
                    if m:
                        return "%s%d%s" % (prefix, int(m.group(1)) + offset,
                                           m.group(2))
            elif rule[0] == "prefix":
                _, frm, to = rule
                if ident.startswith(frm):
                    return to + ident[len(frm):]
            elif rule[0] == "pairs":
                for a, b in rule[1]:
                    if a == ident:
                        return b
            else:
                raise MalformedMapping("unknown rule %r" % (rule[0],))
        return ident if self.identity_rest else None

    def moves_anything(self) -> bool:
        if self.kind == "composite":
            return any(f.moves_anything() for f in self.factors)
        return bool(self.rules)

    def inverse(self) -> "MappingScheme":
        if self.kind in ("multitwist", "pa-blocks"):
            raise MalformedMapping("%s schemes carry no inverse rewrite"
                                   % self.kind)
        if self.kind == "composite":
            return replace(self, factors=tuple(
                f.inverse() for f in reversed(self.factors)))
        inv = []
        for rule in self.rules:
            if rule[0] == "bump":
                inv.append(("bump", rule[1], -rule[2]))
            elif rule[0] == "prefix":
                inv.append(("prefix", rule[2], rule[1]))
            else:
                inv.append(("pairs", tuple((b, a) for a, b in rule[1])))
        return replace(self, rules=tuple(inv))


def identity_scheme(name: str = "identity") -> MappingScheme:
    return MappingScheme(kind="compact", name=name)


def _map_slot(f: MappingScheme, s: Slot) -> Optional[Slot]:
    w = f.action(s.vertex)
    return None if w is None else Slot(w, s.index)


def map_curve(f: MappingScheme, path):
    """Image of a measured path; None when any piece is undefined."""
    if isinstance(path, Cuff):
        if "--" not in path.curve:
            s = _map_slot(f, Slot.parse(path.curve))
            return None if s is None else Cuff(str(s))
        a, b = path.curve.split("--")
        ia, ib = _map_slot(f, Slot.parse(a)), _map_slot(f, Slot.parse(b))
        if ia is None or ib is None:
            return None
        return Cuff(edge_id(ia, ib))
    if isinstance(path, EdgePath):
        out = []
        for cid, mult in path.crossings:
            img = map_curve(f, Cuff(cid))
            if img is None:
                return None
            out.append((img.curve, mult))
        return EdgePath(tuple(out))
    if isinstance(path, BlockPath):
        rid = f.action(path.run)
        if rid is None:
            return None
        extra = []
        for cid, mult in path.extra:
            img = map_curve(f, Cuff(cid))
            if img is None:
                return None
            extra.append((img.curve, mult))
        return BlockPath(rid, path.mult, tuple(extra))
    raise CurveNotCarried("unknown path %r" % (path,))


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Thresholds:
    """NOT_QC needs this many strictly increasing provable ratios with
    the last one at least `ratio`, on top of a recognized growth family."""

    min_terms: int = 3
    ratio: float = 1e6


@dataclass(frozen=True)
class Certificate:
    verdict: str  # MODULAR | NOT_QC | INCONCLUSIVE
    depth: int
    witness: Tuple[Tuple[str, str], ...] = ()
    interval: Optional[Tuple[float, float]] = None
    sequence: Tuple[Tuple[int, str, float], ...] = ()
    growth: Optional[str] = None
    blocking: Optional[str] = None


CERTIFICATE_HEADER = "certificate v1"


def _g15(x: float) -> str:
    return "%.15g" % x


def serialize_certificate(c: Certificate) -> str:
    lines = [CERTIFICATE_HEADER, "verdict=%s" % c.verdict]
    if c.witness:
        lines.append("witness=%s" % " ".join("%s:%s" % kv for kv in c.witness))
    if c.interval is not None:
        lines.append("interval=%s,%s" % (_g15(c.interval[0]), _g15(c.interval[1])))
    if c.sequence:
        lines.append("sequence=%s" % " ".join(
            "(%d,%s,%s)" % (i, cid, _g15(r)) for i, cid, r in c.sequence))
    if c.growth is not None:
        lines.append("growth=%s" % c.growth)
    lines.append("depth=%d" % c.depth)
    if c.blocking is not None:
        lines.append("blocking=%s" % c.blocking)
    return "\n".join(lines) + "\n"


def _params_text(p: Optional[BifluteParams]) -> str:
    if p is None:
        return "none"
    return "(%d,%d,%d;%s)" % (p.A, p.B, p.C, p.base)


# ---------------------------------------------------------------------------
# multitwist windows
# ---------------------------------------------------------------------------

def _twist_window(length: float, power: int) -> Tuple[float, float]:
    """One annulus: collar-twist upper bound, crossing lower bound.  The
    lower estimate is only informative in the long-curve regime, so it
    is capped by the constructive upper bound."""
    if length <= 0:
        raise NonPositiveLength("twisting curve of length %r" % length)
    n = abs(int(power))
    lo = math.sqrt(max(2 * n - 1, 0) * length / math.pi) + 1
    theta = math.pi - 2 * math.atan(math.sinh(length / 2))
    t = n * length / (2 * theta)
    hi = (math.sqrt(t * t + 1) + t) ** 2
    return min(lo, hi), hi


def _as_formula(x) -> Formula:
    if isinstance(x, Formula):
        return x
    return Formula("const", float(x))


def matsuzaki_bounds(lengths, powers) -> Tuple[float, float]:
    """Dilatation window [K_lo, K_hi] of the multitwist with the given
    curve lengths and twisting powers.  Finite sequences are evaluated
    term by term; a formulaic family either reduces to its extreme term
    or raises UnboundedFamily when the window diverges."""
    if isinstance(lengths, Formula) or isinstance(powers, Formula):
        lf, nf = _as_formula(lengths), _as_formula(powers)
        if nf.kind == "const":
            n = int(nf.c)
            if n != nf.c:
                raise MalformedMapping("twisting power %r is not an integer" % nf.c)
            if n == 0:
                return 1.0, 1.0
            if lf.kind in ("const", "inv"):
                # both windows peak at index 0 and shrink with the length
                return _twist_window(lf.value(0), n)
            if lf.growth() is not None:
                raise UnboundedFamily("lengths grow %s under a fixed twist"
                                      % lf.growth())
            raise MalformedStructure("unsupported length family %r" % lf.kind)
        if nf.growth() is not None:
            if lf.kind in ("const", "exp", "expexp", "linear"):
                raise UnboundedFamily("twisting powers grow %s" % nf.growth())
            raise MalformedStructure("unsupported length family %r" % lf.kind)
        raise MalformedStructure("unsupported power family %r" % nf.kind)

    ls, ps = list(lengths), list(powers)
    if len(ls) != len(ps):
        raise MalformedMapping("length and power sequences differ in length")
    lo, hi = 1.0, 1.0
    for length, n in zip(ls, ps):
        if int(n) != n:
            raise MalformedMapping("twisting power %r is not an integer" % (n,))
        tl, th = _twist_window(float(length), int(n))
        lo, hi = max(lo, tl), max(hi, th)
    return lo, hi


def _twist_divergence_growth(lf: Formula, nf: Formula) -> Optional[str]:
    """Family of sqrt((2|n_i|-1) l_i / pi) along the diverging indices."""
    kinds = {lf.kind, nf.kind}
    if "expexp" in kinds:
        return "doubexp"
    if "exp" in kinds:
        return "exp"
    if lf.kind == "linear" and nf.kind == "linear":
        return "linear"
    if "linear" in kinds:
        return "sqrt"
    return None


# ---------------------------------------------------------------------------
# transverse-length obstruction
# ---------------------------------------------------------------------------

def _same_structure(x: FNStructure, y: FNStructure) -> bool:
    return x is y or (x.lengths == y.lengths and x.twists == y.twists
                      and x.scheme is y.scheme)


def _curve_label(path) -> str:
    if isinstance(path, Cuff):
        return path.curve
    if isinstance(path, BlockPath):
        return "run:%s" % path.run
    return "path:%s" % ",".join(c for c, _ in path.crossings)


def _provable_ratio(x: FNStructure, y: FNStructure, gx: TruncatedGraph,
                    gy: TruncatedGraph, src, img) -> Optional[float]:
    """Largest r with a proof that the length ratio (either direction)
    is at least r; exact 1 for a curve carried unchanged between equal
    structures."""
    if src == img and _same_structure(x, y):
        return 1.0
    a = curve_length(x, gx, src)
    b = curve_length(y, gy, img)
    best = None
    if a.hi is not None and a.hi > 0:
        best = b.lo / a.hi
    if b.hi is not None and b.hi > 0:
        r = a.lo / b.hi
        best = r if best is None else max(best, r)
    return best


def wolpert_lower_bound(x: FNStructure, y: FNStructure, f: MappingScheme,
                        curves: Sequence[object], depth: int
                        ) -> Tuple[float, str]:
    """Best provable lower bound, over the given curves and both ratio
    directions, on the dilatation of any quasiconformal realization of
    f from x to y; with the curve achieving it."""
    if not curves:
        raise CurveNotCarried("empty curve family")
    if x.scheme is None or y.scheme is None:
        raise CurveNotCarried("structures must carry schemes")
    gx, gy = x.scheme.truncate(depth), y.scheme.truncate(depth)
    best, label = None, ""
    for c in curves:
        img = map_curve(f, c)
        if img is None:
            raise MapUndefinedOnCurve("image of %s is undefined" % _curve_label(c))
        try:
            r = _provable_ratio(x, y, gx, gy, c, img)
        except PathNotCarried as e:
            raise CurveNotCarried(str(e))
        if r is not None and (best is None or r > best):
            best, label = r, _curve_label(c)
    if best is None:
        raise CurveNotCarried("no curve in the family admits a provable ratio")
    return best, label


# ---------------------------------------------------------------------------
# the pants-to-pants route
# ---------------------------------------------------------------------------

def _resolve_image_edge(g: TruncatedGraph, f: MappingScheme, sa: Slot,
                        sb: Slot) -> Tuple[Optional[str], Optional[str]]:
    """(image edge id, failure reason) for one edge.  A seam edge (one
    endpoint outside the support) resolves to whatever its moved slot
    pairs with, as long as that stays outside the support."""
    ia, ib = _map_slot(f, sa), _map_slot(f, sb)
    if ia is None or ib is None:
        return None, "undefined"
    if ia.vertex not in g.vertices or ib.vertex not in g.vertices:
        return None, "undefined"
    if g.pairing.get(ia) == ib:
        return edge_id(ia, ib), None
    ins_a, ins_b = f.in_support(sa.vertex), f.in_support(sb.vertex)
    if ins_a == ins_b:
        return None, "edge %s maps off the graph" % edge_id(sa, sb)
    moved = ia if ins_a else ib
    partner = g.pairing.get(moved)
    if partner is None:
        return None, "seam slot %s has no pairing" % moved
    if f.in_support(partner.vertex):
        return None, "seam at %s closes inside the support" % moved
    return edge_id(moved, partner), None


def _pants_to_pants(g: TruncatedGraph, f: MappingScheme
                    ) -> Tuple[Optional[str], Dict[str, str]]:
    """None and the edge image table when f maps pants to pants on this
    truncation (seams at the support boundary allowed), else a reason."""
    defined = 0
    for v in g.vertices:
        w = f.action(v)
        if w is None:
            if f.in_support(v):
                return "action undefined on %s" % v, {}
            continue
        if w not in g.vertices:
            continue
        defined += 1
        for i in range(3):
            s, t = Slot(v, i), Slot(w, i)
            kind = g.free.get(s)
            if kind is not None:
                if g.free.get(t) != kind:
                    return "free slot %s (%s) maps to a %s slot" % (
                        s, kind, g.slot_role(t)), {}
    if defined == 0:
        raise MapUndefinedOnCurve("action undefined on every vertex at this depth")
    images: Dict[str, str] = {}
    for eid, (sa, sb) in sorted(g.edges().items()):
        img, reason = _resolve_image_edge(g, f, sa, sb)
        if img is None:
            if reason == "undefined":
                continue
            return reason, {}
        images[eid] = img
    for rid, run in sorted(g.runs.items()):
        tid = f.action(rid)
        if tid is None:
            return "run %s has no image" % rid, {}
        if tid == rid:
            continue
        tgt = g.runs.get(tid)
        if tgt is None:
            continue
        if tgt.count != run.count or tgt.hang != run.hang:
            return "run %s maps to %s with a different block" % (rid, tid), {}
        for s, t in ((run.slot_a, tgt.slot_a), (run.slot_b, tgt.slot_b)):
            if _map_slot(f, s) != t:
                return "run %s ends move off %s" % (rid, tid), {}
    return None, images


def _pullback_within(x: FNStructure, g: TruncatedGraph,
                     images: Dict[str, str], m: float, t: float) -> bool:
    for img in images.values():
        l = x.cuff_length(g, img)
        if not (1.0 / m <= l <= m) or abs(x.twist(g, img)) > t:
            return False
    return True


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------

def _geometric_sequence(value, label, thresholds: Thresholds
                        ) -> Optional[Tuple[Tuple[int, str, float], ...]]:
    """Sample a diverging per-index bound at geometric indices until the
    threshold is cleared; None when 2^63 indices do not reach it."""
    seq, i, last = [], 1, 0.0
    while len(seq) < 64:
        v = value(i)
        if v > last:
            seq.append((i, label(i), v))
            last = v
        if v >= thresholds.ratio and len(seq) >= thresholds.min_terms:
            return tuple(seq)
        i *= 2
        if i > 2 ** 63:
            break
    return None


def _declared_certificate(f: MappingScheme, depth: int,
                          thresholds: Thresholds) -> Certificate:
    bb = f.block_bounds
    if isinstance(bb, Formula):
        growth = bb.growth()
        if growth is None:
            return Certificate("INCONCLUSIVE", depth,
                               blocking="declared block bounds do not diverge")
        seq = _geometric_sequence(bb.value, lambda i: "block:%d" % i, thresholds)
        if seq is None:
            return Certificate("INCONCLUSIVE", depth,
                               blocking="declared block bounds stay under threshold")
        return Certificate("NOT_QC", depth, sequence=seq, growth=growth)
    seq = tuple((int(i), str(lbl), float(v)) for i, lbl, v in bb)
    increasing = all(a[2] < b[2] for a, b in zip(seq, seq[1:]))
    if (len(seq) >= thresholds.min_terms and increasing
            and seq[-1][2] >= thresholds.ratio):
        return Certificate("NOT_QC", depth, sequence=seq, growth="declared")
    return Certificate("INCONCLUSIVE", depth,
                       blocking="declared bound table does not clear thresholds")


def _multitwist_certificate(x: FNStructure, f: MappingScheme, depth: int,
                            thresholds: Thresholds) -> Certificate:
    g = x.scheme.truncate(depth)
    classes = sorted({cls for cls in g.edge_class.values()},
                     key=lambda c: (c[0], c[1] if c[1] is not None else 0))
    if g.runs:
        classes.append(("run", None))
    lengths, powers = [], []
    for fam, idx in classes:
        lf = x.lengths.formula_for(fam, idx)
        nf = f.powers.formula_for(fam, idx)
        try:
            matsuzaki_bounds(lf, nf)
        except UnboundedFamily:
            growth = _twist_divergence_growth(lf, nf)

            def k_lo(i: int) -> float:
                n = abs(int(round(nf.value(i))))
                return math.sqrt(max(2 * n - 1, 0) * lf.value(i) / math.pi) + 1

            seq = _geometric_sequence(k_lo, lambda i: "twist:%s:%d" % (fam, i),
                                      thresholds)
            if growth is None or seq is None:
                return Certificate(
                    "INCONCLUSIVE", depth,
                    blocking="twist window diverges without a recognized family")
            return Certificate("NOT_QC", depth, sequence=seq, growth=growth)
        n = nf.value(idx if idx is not None else 0)
        if int(n) != n:
            raise MalformedMapping("twisting power %r is not an integer" % n)
        lengths.append(x.lengths.value(fam, idx))
        powers.append(int(n))
    lo, hi = matsuzaki_bounds(lengths, powers)
    witness = (("route", "multitwist"), ("classes", str(len(classes))))
    return Certificate("MODULAR", depth, witness=witness, interval=(lo, hi))


def _ratio_index(g: TruncatedGraph, path) -> int:
    if isinstance(path, Cuff) and path.curve in g.edge_class:
        idx = g.edge_class[path.curve][1]
        return idx if idx is not None else 0
    if isinstance(path, BlockPath):
        m = _INT_TAIL.search(path.run)
        return int(m.group(1)) if m else 0
    return 0


def _sweep_family(g: TruncatedGraph) -> List[object]:
    fam: List[object] = [Cuff(eid) for eid in sorted(g.edges())]
    fam += [BlockPath(rid, 2) for rid in sorted(g.runs)]
    return fam


def _ratio_sweep(x: FNStructure, f: MappingScheme, g: TruncatedGraph
                 ) -> List[Tuple[int, object, object, float]]:
    """Strictly increasing provable ratios, walking the canonical curve
    family outward by index."""
    rows = []
    for c in _sweep_family(g):
        img = map_curve(f, c)
        if img is None:
            continue
        try:
            r = _provable_ratio(x, x, g, g, c, img)
        except PathNotCarried:
            continue
        if r is not None:
            rows.append((_ratio_index(g, c), c, img, r))
    rows.sort(key=lambda row: (abs(row[0]), _curve_label(row[1])))
    kept, last = [], 1.0
    for idx, c, img, r in rows:
        if r > last:
            kept.append((idx, c, img, r))
            last = r
    return kept


def _sweep_growth(x: FNStructure, g: TruncatedGraph, kept) -> Optional[str]:
    """Growth family of the diverging tail, read off the generating
    rules: run counts must declare their growth on the scheme, cuff
    ratios must pit a growing clause against a bounded one."""
    idx, src, img, _ = kept[-1]
    if isinstance(src, BlockPath):
        declared = x.scheme.meta.get("run_growth")
        return declared.growth() if isinstance(declared, Formula) else None
    num_cls = g.edge_class.get(img.curve)
    den_cls = g.edge_class.get(src.curve)
    if num_cls is None or den_cls is None:
        return None
    num = x.lengths.formula_for(*num_cls)
    den = x.lengths.formula_for(*den_cls)
    if den.bounded()[0] and num.growth() is not None:
        return num.growth()
    if num.bounded()[0] and den.growth() is not None:
        return den.growth()
    return None


def certify(x: FNStructure, f: MappingScheme, depth: int,
            thresholds: Optional[Thresholds] = None) -> Certificate:
    """Decision procedure for one structure and one mapping scheme.
    Declared block bounds and multitwist windows go first; then the
    structural route (pants-to-pants with bounded untwisted geometry on
    both sides); then the ratio sweep; INCONCLUSIVE names what blocked."""
    if x.scheme is None:
        raise MalformedStructure("structure carries no scheme")
    thresholds = thresholds or Thresholds()
    if f.kind == "pa-blocks" or (f.kind == "composite"
                                 and f.block_bounds is not None):
        return _declared_certificate(f, depth, thresholds)
    if f.kind == "multitwist":
        return _multitwist_certificate(x, f, depth, thresholds)

    g = x.scheme.truncate(depth)
    reasons = []
    bounded, m = x.bounded_type()
    untwisted, t = x.untwisted()
    reason, images = _pants_to_pants(g, f)
    if reason is not None:
        reasons.append(reason)
    elif not bounded:
        reasons.append("lengths are not bounded-type")
    elif not untwisted:
        reasons.append("twists are unbounded")
    elif not _pullback_within(x, g, images, m, t):
        reasons.append("pulled-back geometry leaves the bounds")
    else:
        witness = (("m", _g15(m)), ("t", _g15(t)),
                   ("along", _params_text(f.along)),
                   ("along-verified", _along_verified(f, depth)),
                   ("pants-to-pants", "yes"),
                   ("route", "pants-to-pants"))
        return Certificate("MODULAR", depth, witness=witness)

    kept = _ratio_sweep(x, f, g)
    if (len(kept) >= thresholds.min_terms
            and kept[-1][3] >= thresholds.ratio):
        growth = _sweep_growth(x, g, kept)
        if growth is not None:
            seq = tuple((idx, _curve_label(src), r) for idx, src, _, r in kept)
            return Certificate("NOT_QC", depth, sequence=seq, growth=growth)
        reasons.append("diverging ratios lack a recognized growth family")
    else:
        reasons.append("no diverging ratio sequence at depth %d" % depth)
    return Certificate("INCONCLUSIVE", depth, blocking="; ".join(reasons))


def _along_verified(f: MappingScheme, depth: int) -> str:
    if f.along is None:
        return "n/a"
    if f.carrier is None:
        return "declared"
    got = recognize_biflute(f.carrier, max(2, min(depth, 4)))
    return "yes" if got.fits(f.along.A, f.along.B, f.along.C) else "no"


# ---------------------------------------------------------------------------
# finite-stage approximants
# ---------------------------------------------------------------------------

def _component_blocks(g: TruncatedGraph, removed) -> List[set]:
    seen, comps = set(removed), []
    for v in sorted(g.vertices):
        if v in seen:
            continue
        comp, queue = {v}, [v]
        seen.add(v)
        while queue:
            u = queue.pop()
            for i in range(3):
                nb = g.pairing.get(Slot(u, i))
                if nb is not None and nb.vertex not in seen:
                    seen.add(nb.vertex)
                    comp.add(nb.vertex)
                    queue.append(nb.vertex)
            for run in g.runs.values():
                ends = {run.slot_a.vertex, run.slot_b.vertex}
                if u in ends:
                    for w in ends - seen:
                        seen.add(w)
                        comp.add(w)
                        queue.append(w)
        comps.append(comp)
    return comps


def _check_complements(scheme: PantsScheme, depth: int):
    """Every genus-carrying complementary branch of each core must keep
    growing: visibly finite genus branches have no straightening."""
    probe = scheme.truncate(depth + 2)
    genus_edges = {eid for eid, cls in probe.edge_class.items()
                   if cls[0] in ("handle", "loop")}
    frontier_verts = {s.vertex for s in probe.frontier}
    for n in range(depth + 1):
        core = scheme.truncate(n).vertices
        for comp in _component_blocks(probe, core):
            has_genus = any(
                Slot.parse(eid.split("--")[0]).vertex in comp
                for eid in genus_edges)
            if has_genus and not (comp & frontier_verts):
                raise FiniteGenusComplement(
                    "level-%d complement holds genus but stops growing" % n)


def agree_on_core(a: MappingScheme, b: MappingScheme,
                  g: TruncatedGraph) -> bool:
    return all(a.action(v) == b.action(v) for v in g.vertices)


def approximant_sequence(x: FNStructure, target: MappingScheme,
                         depth: int) -> List[MappingScheme]:
    """Finite-stage mapping schemes f_0..f_depth, each agreeing with the
    target on the corresponding core truncation.  Composites shed the
    factors (and any declared divergence) not yet touching the core;
    region swaps need witness data on the scheme."""
    if x.scheme is None:
        raise MalformedStructure("structure carries no scheme")
    _check_complements(x.scheme, depth)
    if target.kind == "end-swap" and not x.scheme.meta.get("witnesses"):
        raise NoWitness("scheme carries no region-swap witnesses")
    out = []
    for n in range(depth + 1):
        if target.kind == "composite":
            core = x.scheme.truncate(n)
            live = tuple(
                fac for fac in target.factors
                if fac.support is None
                or any(v.startswith(p) for p in fac.support
                       for v in core.vertices))
            if not live:
                out.append(identity_scheme("%s[%d]" % (target.name, n)))
            else:
                out.append(replace(target, name="%s[%d]" % (target.name, n),
                                   factors=live, block_bounds=None))
        elif target.kind == "pa-blocks":
            out.append(MappingScheme(kind="compact",
                                     name="%s[%d]" % (target.name, n)))
        else:
            out.append(target)
    return out
