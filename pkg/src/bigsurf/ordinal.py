"""Ordinal notations in Cantor normal form, and rooted-tree encodings of
countable compact subsets of the Cantor set with genus marks.

An encoding is a rooted tree in which every node stands for one point of
the set.  Children come in two parts: an explicit finite prefix, plus an
optional infinite tail.  Only an infinite child sequence accumulates to
its parent; a finite prefix is just a cluster of neighbours grouped
under the parent and carries no topology.  Tails are either an
eventually-repeating block of subtrees (ConstTail) or a ramp of
canonical points whose ranks increase strictly to a limit ordinal
(RampTail).  A `perfect` node stands for a full binary (Cantor) subtree
and is rejected by rank computations.

Text formats
------------
Ordinals: ``0``, or ``+``-joined terms ``w^E*c`` with the conventions
``w^0*c = c``, ``w^1 = w``, ``*1`` omitted, and the exponent ``E``
parenthesized iff it has several terms or a coefficient > 1.  Example:
``w^(w+1)*3+w^2+4``.

End-space files: header ``endspace v1``, then one ``node`` line per
point, children indented two spaces under their parent::

    node e children=[e.0,e.1]+gen:const
      node e.0 children=[]
      node e.1 genus children=[]

``gen:const:<b>`` repeats the last ``b`` listed children forever (default
1); ``gen:ramp:<ordinal>[:genus]`` appends canonical points of ranks
running up a limit ordinal; ``children=cantor[...]`` marks a full binary
subtree, optionally with eventually-periodic genus addresses such as
``(L)*`` or ``R(LR)*``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Union

DEFAULT_TOWER_BOUND = 6


class MalformedEncoding(ValueError):
    pass


class EmptySet(ValueError):
    pass


class RankOverflow(ValueError):
    pass


class PerfectKernel(ValueError):
    pass


# ---------------------------------------------------------------------------
# Ordinal notations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrdinalNotation:
    """Cantor normal form: sum of w^exponent * coefficient terms with
    strictly decreasing exponents.  Empty term list is 0."""

    terms: tuple = ()  # tuple of (OrdinalNotation, int)

    def __post_init__(self):
        prev = None
        for exp, coeff in self.terms:
            if not isinstance(exp, OrdinalNotation) or not isinstance(coeff, int):
                raise MalformedEncoding("bad term %r" % ((exp, coeff),))
            if coeff < 1:
                raise MalformedEncoding("coefficient must be >= 1")
            if prev is not None and ordinal_cmp(prev, exp) <= 0:
                raise MalformedEncoding("exponents must be strictly decreasing")
            prev = exp

    # -- constructors

    @staticmethod
    def zero() -> "OrdinalNotation":
        return OrdinalNotation(())

    @staticmethod
    def from_int(n: int) -> "OrdinalNotation":
        if n < 0:
            raise MalformedEncoding("ordinals are non-negative")
        if n == 0:
            return OrdinalNotation(())
        return OrdinalNotation(((OrdinalNotation(()), n),))

    @staticmethod
    def omega() -> "OrdinalNotation":
        return OrdinalNotation(((OrdinalNotation.from_int(1), 1),))

    @staticmethod
    def omega_pow(exp: "OrdinalNotation", coeff: int = 1,
                  tower_bound: int = DEFAULT_TOWER_BOUND) -> "OrdinalNotation":
        o = OrdinalNotation(((exp, coeff),))
        if o.tower_height() > tower_bound:
            raise RankOverflow("notation nests %d deep, bound is %d"
                               % (o.tower_height(), tower_bound))
        return o

    # -- structure

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_finite(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and self.terms[0][0].is_zero)

    def as_int(self) -> int:
        if not self.is_finite:
            raise MalformedEncoding("not a finite ordinal: %s" % self)
        return self.terms[0][1] if self.terms else 0

    def tower_height(self) -> int:
        if not self.terms:
            return 0
        return 1 + max(e.tower_height() for e, _ in self.terms)

    @property
    def is_successor(self) -> bool:
        return bool(self.terms) and self.terms[-1][0].is_zero

    @property
    def is_limit(self) -> bool:
        return bool(self.terms) and not self.terms[-1][0].is_zero

    def pred(self) -> "OrdinalNotation":
        """Predecessor of a successor ordinal."""
        if not self.is_successor:
            raise MalformedEncoding("%s is not a successor" % self)
        exp, coeff = self.terms[-1]
        if coeff > 1:
            return OrdinalNotation(self.terms[:-1] + ((exp, coeff - 1),))
        return OrdinalNotation(self.terms[:-1])

    def successor(self) -> "OrdinalNotation":
        return self + OrdinalNotation.from_int(1)

    def fundamental(self, i: int) -> "OrdinalNotation":
        """i-th entry (i >= 1) of the canonical increasing sequence
        converging to a limit notation."""
        if not self.is_limit:
            raise MalformedEncoding("%s is not a limit" % self)
        if i < 1:
            raise MalformedEncoding("fundamental index starts at 1")
        head = self.terms[:-1]
        exp, coeff = self.terms[-1]
        if coeff > 1:
            base = OrdinalNotation(head + ((exp, coeff - 1),))
        else:
            base = OrdinalNotation(head)
        if exp.is_successor:
            step = OrdinalNotation(((exp.pred(), i),))
        else:
            step = OrdinalNotation(((exp.fundamental(i), 1),))
        return base + step

    # -- arithmetic and order

    def __add__(self, other):
        if isinstance(other, int):
            other = OrdinalNotation.from_int(other)
        if not isinstance(other, OrdinalNotation):
            return NotImplemented
        if not other.terms:
            return self
        lead = other.terms[0][0]
        kept = [t for t in self.terms if ordinal_cmp(t[0], lead) > 0]
        if self.terms and len(kept) < len(self.terms) and \
                ordinal_cmp(self.terms[len(kept)][0], lead) == 0:
            merged = (lead, self.terms[len(kept)][1] + other.terms[0][1])
            return OrdinalNotation(tuple(kept) + (merged,) + other.terms[1:])
        return OrdinalNotation(tuple(kept) + other.terms)

    def __lt__(self, other):
        return ordinal_cmp(self, other) < 0

    def __le__(self, other):
        return ordinal_cmp(self, other) <= 0

    def __gt__(self, other):
        return ordinal_cmp(self, other) > 0

    def __ge__(self, other):
        return ordinal_cmp(self, other) >= 0

    # -- text

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exp, coeff in self.terms:
            if exp.is_zero:
                parts.append(str(coeff))
                continue
            if exp.is_finite and exp.as_int() == 1:
                s = "w"
            else:
                e = str(exp)
                if len(exp.terms) > 1 or (exp.terms[0][1] > 1 and not exp.is_finite):
                    e = "(" + e + ")"
                s = "w^" + e
            if coeff > 1:
                s += "*%d" % coeff
            parts.append(s)
        return "+".join(parts)

    def __repr__(self) -> str:
        return "OrdinalNotation<%s>" % self

    @staticmethod
    def parse(text: str, tower_bound: int = DEFAULT_TOWER_BOUND) -> "OrdinalNotation":
        o, rest = _parse_ordinal(text.strip())
        if rest:
            raise MalformedEncoding("trailing input %r in ordinal %r" % (rest, text))
        if o.tower_height() > tower_bound:
            raise RankOverflow("notation nests %d deep, bound is %d"
                               % (o.tower_height(), tower_bound))
        return o


def ordinal_cmp(a: OrdinalNotation, b: OrdinalNotation) -> int:
    """Order comparison: -1, 0 or 1."""
    for (ea, ca), (eb, cb) in zip(a.terms, b.terms):
        c = ordinal_cmp(ea, eb)
        if c != 0:
            return c
        if ca != cb:
            return -1 if ca < cb else 1
    if len(a.terms) != len(b.terms):
        return -1 if len(a.terms) < len(b.terms) else 1
    return 0


def _parse_ordinal(text: str):
    """Parse a leading ordinal, return (notation, rest)."""
    if text.startswith("0") and not text[1:2].isdigit():
        return OrdinalNotation.zero(), text[1:]
    terms = []
    rest = text
    while True:
        term, rest = _parse_term(rest)
        terms.append(term)
        if rest.startswith("+"):
            rest = rest[1:]
        else:
            break
    total = OrdinalNotation.zero()
    prev = None
    for exp, coeff in terms:
        if prev is not None and ordinal_cmp(prev, exp) <= 0:
            raise MalformedEncoding("terms out of order in %r" % text)
        prev = exp
        total = OrdinalNotation(total.terms + ((exp, coeff),))
    return total, rest


def _parse_term(text: str):
    m = re.match(r"\d+", text)
    if m:
        return (OrdinalNotation.zero(), int(m.group())), text[m.end():]
    if not text.startswith("w"):
        raise MalformedEncoding("expected term at %r" % text)
    rest = text[1:]
    if rest.startswith("^"):
        exp, rest = _parse_exponent(rest[1:])
    else:
        exp = OrdinalNotation.from_int(1)
    coeff = 1
    if rest.startswith("*"):
        m = re.match(r"\d+", rest[1:])
        if not m:
            raise MalformedEncoding("expected coefficient at %r" % rest)
        coeff = int(m.group())
        rest = rest[1 + m.end():]
    if coeff < 1:
        raise MalformedEncoding("coefficient must be >= 1")
    if exp.is_zero:
        return (OrdinalNotation.zero(), coeff), rest
    return (exp, coeff), rest


def _parse_exponent(text: str):
    if text.startswith("("):
        depth, i = 1, 1
        while i < len(text) and depth:
            if text[i] == "(":
                depth += 1
            elif text[i] == ")":
                depth -= 1
            i += 1
        if depth:
            raise MalformedEncoding("unbalanced parens at %r" % text)
        inner, leftover = _parse_ordinal(text[1:i - 1])
        if leftover:
            raise MalformedEncoding("trailing input %r in exponent" % leftover)
        return inner, text[i:]
    m = re.match(r"\d+", text)
    if m:
        return OrdinalNotation.from_int(int(m.group())), text[m.end():]
    if text.startswith("w"):
        rest = text[1:]
        if rest.startswith("^"):
            inner, rest = _parse_exponent(rest[1:])
            return OrdinalNotation(((inner, 1),)), rest
        return OrdinalNotation.omega(), rest
    raise MalformedEncoding("expected exponent at %r" % text)


ZERO = OrdinalNotation.zero()
ONE = OrdinalNotation.from_int(1)
OMEGA = OrdinalNotation.omega()


# ---------------------------------------------------------------------------
# Cantor-Bendixson rank values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CBRank:
    nu: OrdinalNotation
    n: int

    def __str__(self):
        return "(%s, %d)" % (self.nu, self.n)

    def simple_ordinal(self) -> str:
        """Presentation of the classifying ordinal w^nu * n + 1 (plain n
        when nu is 0: a finite set is the discrete space)."""
        if self.nu.is_zero:
            return str(self.n)
        head = OrdinalNotation(((self.nu, self.n),))
        return "%s+1" % head


# ---------------------------------------------------------------------------
# Closed-set encodings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstTail:
    """Infinite tail: the block of subtrees repeats forever."""

    block: tuple = ()

    def __post_init__(self):
        if not self.block:
            raise MalformedEncoding("constant tail needs a nonempty block")


@dataclass(frozen=True)
class RampTail:
    """Infinite tail whose i-th entry is a canonical point of rank
    ``limit.fundamental(i)``, each derived `worn` times."""

    limit: OrdinalNotation
    genus: bool = False
    worn: int = 0

    def __post_init__(self):
        if not self.limit.is_limit:
            raise MalformedEncoding("ramp tail needs a limit ordinal, got %s" % self.limit)


Tail = Union[ConstTail, RampTail]


@dataclass(frozen=True)
class SetNode:
    genus: bool = False
    children: tuple = ()
    tail: Optional[Tail] = None
    perfect: bool = False
    genus_rays: tuple = ()  # only meaningful with perfect
    tag: Optional[str] = None

    def __post_init__(self):
        if self.perfect and (self.children or self.tail is not None):
            raise MalformedEncoding("perfect node carries no explicit children")
        if self.genus_rays and not self.perfect:
            raise MalformedEncoding("genus rays only apply to perfect nodes")


@dataclass(frozen=True)
class ClosedSetEncoding:
    root: SetNode

    def __post_init__(self):
        _validate(self.root)

    @property
    def has_perfect_part(self) -> bool:
        return _has_perfect(self.root)


def _validate(node: SetNode):
    if node.perfect:
        for ray in node.genus_rays:
            if not re.fullmatch(r"[LR]*\([LR]+\)\*", ray):
                raise MalformedEncoding("bad genus address %r" % ray)
        return
    accumulating_genus = False
    if isinstance(node.tail, ConstTail):
        for b in node.tail.block:
            _validate(b)
        accumulating_genus = any(subtree_has_genus(b) for b in node.tail.block)
    elif isinstance(node.tail, RampTail):
        accumulating_genus = node.tail.genus
    if accumulating_genus and not node.genus:
        raise MalformedEncoding("limit of genus points must be genus-marked")
    for c in node.children:
        _validate(c)


def _has_perfect(node: SetNode) -> bool:
    if node.perfect:
        return True
    if any(_has_perfect(c) for c in node.children):
        return True
    if isinstance(node.tail, ConstTail):
        return any(_has_perfect(b) for b in node.tail.block)
    return False


def subtree_has_genus(node: SetNode) -> bool:
    if node.genus or (node.perfect and node.genus_rays):
        return True
    if any(subtree_has_genus(c) for c in node.children):
        return True
    if isinstance(node.tail, ConstTail):
        return any(subtree_has_genus(b) for b in node.tail.block)
    if isinstance(node.tail, RampTail):
        return node.tail.genus
    return False


def canonical_point(rank: OrdinalNotation, genus: bool = False,
                    tag: Optional[str] = None) -> SetNode:
    """One point of the given rank together with its accumulating cloud."""
    if rank.is_zero:
        return SetNode(genus=genus, tag=tag)
    if rank.is_successor:
        below = canonical_point(rank.pred(), genus=genus)
        return SetNode(genus=genus, tail=ConstTail((below,)), tag=tag)
    return SetNode(genus=genus, tail=RampTail(rank, genus=genus), tag=tag)


def encoding_of_rank(nu: OrdinalNotation, n: int = 1,
                     genus: bool = False) -> ClosedSetEncoding:
    """Canonical encoding with homeomorphism type (nu, n)."""
    if n < 1:
        raise MalformedEncoding("need at least one point of maximal rank")
    siblings = tuple(canonical_point(nu, genus=genus) for _ in range(n - 1))
    top = canonical_point(nu, genus=genus)
    return ClosedSetEncoding(replace(top, children=top.children + siblings))


# -- ranks ------------------------------------------------------------------

def node_rank(node: SetNode) -> OrdinalNotation:
    """Number of derivation steps the node itself survives."""
    if node.perfect:
        raise PerfectKernel("perfect part has no countable rank")
    if node.tail is None:
        return ZERO
    if isinstance(node.tail, RampTail):
        return node.tail.limit
    best = ZERO
    for b in node.tail.block:
        r = subtree_max_rank(b)
        if r > best:
            best = r
    return best.successor()


def subtree_max_rank(node: SetNode) -> OrdinalNotation:
    best = node_rank(node)
    for c in node.children:
        r = subtree_max_rank(c)
        if r > best:
            best = r
    if isinstance(node.tail, ConstTail):
        for b in node.tail.block:
            r = subtree_max_rank(b)
            if r > best:
                best = r
    return best


def cb_rank(s: ClosedSetEncoding) -> CBRank:
    """Structural rank: (nu, n) with the nu-th derived set of size n and
    the next one empty.  Computed without iterating derived_set."""
    if s.has_perfect_part:
        raise PerfectKernel("encoding has a perfect kernel")
    nu = subtree_max_rank(s.root)

    def count(node: SetNode) -> int:
        # maximal-rank points never occur inside a tail: the tail's parent
        # would outrank them
        c = 1 if ordinal_cmp(node_rank(node), nu) == 0 else 0
        return c + sum(count(ch) for ch in node.children)

    return CBRank(nu, count(s.root))


def homeo_type(s: ClosedSetEncoding) -> CBRank:
    """Topological type of the encoded set; equal data to cb_rank since
    rank classifies countable compact sets."""
    return cb_rank(s)


# -- derivation -------------------------------------------------------------

def _derive_forest(node: SetNode):
    """Survivors of one derivation step, as a forest.  A node survives
    iff it has infinitely many children, i.e. a tail; surviving
    descendants of a removed node are promoted as explicit children."""
    if node.perfect:
        return (node,)
    new_children = []
    for c in node.children:
        new_children.extend(_derive_forest(c))
    tail = node.tail
    if isinstance(tail, ConstTail):
        new_block = []
        for b in tail.block:
            new_block.extend(_derive_forest(b))
        new_tail = ConstTail(tuple(new_block)) if new_block else None
    elif isinstance(tail, RampTail):
        new_tail = replace(tail, worn=tail.worn + 1)
    else:
        new_tail = None
    if tail is None:
        return tuple(new_children)
    return (replace(node, children=tuple(new_children), tail=new_tail),)


def derived_set(s: ClosedSetEncoding) -> ClosedSetEncoding:
    """One derivation step: drop every isolated point."""
    forest = _derive_forest(with_tags(s).root)
    if not forest:
        raise EmptySet("derived set is empty")
    root = forest[0]
    if len(forest) > 1:
        root = replace(root, children=root.children + tuple(forest[1:]))
    return ClosedSetEncoding(root)


# -- tagging and truncation -------------------------------------------------

def _tag_node(node: SetNode, path: str) -> SetNode:
    if node.tag is not None:
        return node
    children = tuple(_tag_node(c, "%s.%d" % (path, i))
                     for i, c in enumerate(node.children))
    tail = node.tail
    if isinstance(tail, ConstTail):
        base = len(children)
        tail = ConstTail(tuple(_tag_node(b, "%s.%d" % (path, base + i))
                               for i, b in enumerate(tail.block)))
    return replace(node, children=children, tail=tail, tag=path)


def with_tags(s: ClosedSetEncoding) -> ClosedSetEncoding:
    """Assign stable path tags; derivation preserves them."""
    if s.root.tag is not None:
        return s
    return ClosedSetEncoding(_tag_node(s.root, "e"))


@dataclass
class MaterialNode:
    tag: str
    genus: bool
    children: list = field(default_factory=list)

    def walk(self) -> Iterator["MaterialNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def size(self) -> int:
        return sum(1 for _ in self.walk())


def _retag(node: SetNode, suffix: str) -> SetNode:
    children = tuple(_retag(c, suffix) for c in node.children)
    tail = node.tail
    if isinstance(tail, ConstTail):
        tail = ConstTail(tuple(_retag(b, suffix) for b in tail.block))
    tag = (node.tag or "?") + suffix
    return replace(node, children=children, tail=tail, tag=tag)


def _materialize(node: SetNode, k: int) -> MaterialNode:
    if node.perfect:
        raise PerfectKernel("perfect part has no finite truncation")
    out = MaterialNode(node.tag or "?", node.genus)
    for c in node.children:
        out.children.append(_materialize(c, k))
    tail = node.tail
    if isinstance(tail, ConstTail):
        # the listed block is repeat 1; further repeats are fresh copies
        for j in range(1, k + 1):
            for b in tail.block:
                copy = b if j == 1 else _retag(b, "@%d" % j)
                out.children.append(_materialize(copy, k))
    elif isinstance(tail, RampTail):
        for i in range(1, k + 1):
            child = canonical_point(tail.limit.fundamental(i), genus=tail.genus)
            child = _tag_node(child, "%s.r%d" % (node.tag or "?", i))
            forest = (child,)
            for _ in range(tail.worn):
                survivors = []
                for f in forest:
                    survivors.extend(_derive_forest(f))
                forest = tuple(survivors)
            for f in forest:
                out.children.append(_materialize(f, k))
    return out


def truncate_encoding(s: ClosedSetEncoding, k: int) -> MaterialNode:
    """Finite tree materializing the first k entries of every infinite
    child sequence."""
    return _materialize(with_tags(s).root, k)


# -- equivalence keys --------------------------------------------------------

def canonical_key(node: SetNode):
    """Hashable normal form of (subtree, genus marks); equal keys mean
    the end pairs are interchangeable."""
    if node.perfect:
        return ("cantor", node.genus, tuple(sorted(node.genus_rays)))
    kids = tuple(sorted(canonical_key(c) for c in node.children))
    if isinstance(node.tail, ConstTail):
        t = ("const", tuple(sorted(canonical_key(b) for b in node.tail.block)))
    elif isinstance(node.tail, RampTail):
        t = ("ramp", str(node.tail.limit), node.tail.genus, node.tail.worn)
    else:
        t = ()
    return (node.genus, kids, t)


# ---------------------------------------------------------------------------
# End-space text format
# ---------------------------------------------------------------------------

ENDSPACE_HEADER = "endspace v1"


def serialize_endspace(s: ClosedSetEncoding) -> str:
    lines = [ENDSPACE_HEADER]

    def emit(node: SetNode, path: str, depth: int):
        indent = "  " * depth
        flag = " genus" if node.genus else ""
        listed = list(node.children)
        marker = ""
        if isinstance(node.tail, ConstTail):
            listed += list(node.tail.block)
            b = len(node.tail.block)
            marker = "+gen:const" if b == 1 else "+gen:const:%d" % b
        elif isinstance(node.tail, RampTail):
            marker = "+gen:ramp:%s" % node.tail.limit
            if node.tail.genus:
                marker += ":genus"
            if node.tail.worn:
                raise MalformedEncoding("worn ramps have no canonical text form")
        if node.perfect:
            spec = "cantor"
            if node.genus_rays:
                spec += "[%s]" % ",".join(sorted(node.genus_rays))
        else:
            ids = ["%s.%d" % (path, i) for i in range(len(listed))]
            spec = "[%s]%s" % (",".join(ids), marker)
        lines.append("%snode %s%s children=%s" % (indent, path, flag, spec))
        for i, c in enumerate(listed):
            emit(c, "%s.%d" % (path, i), depth + 1)

    emit(s.root, "e", 0)
    return "\n".join(lines) + "\n"


_NODE_RE = re.compile(
    r"node (?P<id>\S+)(?P<genus> genus)? children="
    r"(?:(?P<cantor>cantor)(?:\[(?P<rays>[^]]*)\])?|\[(?P<ids>[^]]*)\](?P<marker>\+gen:\S+)?)$")


def parse_endspace(text: str) -> ClosedSetEncoding:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != ENDSPACE_HEADER:
        raise MalformedEncoding("missing '%s' header" % ENDSPACE_HEADER)
    rows = []
    for ln in lines[1:]:
        stripped = ln.lstrip(" ")
        indent = len(ln) - len(stripped)
        if indent % 2:
            raise MalformedEncoding("odd indent in %r" % ln)
        m = _NODE_RE.match(stripped)
        if not m:
            raise MalformedEncoding("bad node line %r" % ln)
        rows.append((indent // 2, m))
    if not rows:
        raise MalformedEncoding("no nodes")

    pos = 0

    def build(depth: int) -> SetNode:
        nonlocal pos
        level, m = rows[pos]
        if level != depth:
            raise MalformedEncoding("indentation does not match tree shape at %r"
                                    % m.group("id"))
        pos += 1
        genus = bool(m.group("genus"))
        if m.group("cantor"):
            rays = tuple(r for r in (m.group("rays") or "").split(",") if r)
            return SetNode(genus=genus, perfect=True, genus_rays=rays)
        ids = [i for i in (m.group("ids") or "").split(",") if i]
        listed = []
        for _ in ids:
            listed.append(build(depth + 1))
        marker = m.group("marker") or ""
        tail: Optional[Tail] = None
        if marker.startswith("+gen:const"):
            b = int(marker.rsplit(":", 1)[1]) if marker.count(":") == 2 else 1
            if b < 1 or b > len(listed):
                raise MalformedEncoding("block size %d out of range" % b)
            tail = ConstTail(tuple(listed[-b:]))
            listed = listed[:-b]
        elif marker.startswith("+gen:ramp:"):
            parts = marker[len("+gen:ramp:"):]
            ramp_genus = parts.endswith(":genus")
            if ramp_genus:
                parts = parts[:-len(":genus")]
            tail = RampTail(OrdinalNotation.parse(parts), genus=ramp_genus)
        elif marker:
            raise MalformedEncoding("unknown generator %r" % marker)
        return SetNode(genus=genus, children=tuple(listed), tail=tail)

    root = build(0)
    if pos != len(rows):
        raise MalformedEncoding("unreachable trailing nodes")
    return ClosedSetEncoding(root)
