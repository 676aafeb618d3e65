"""Assembling pants-graph schemes for infinite-type surfaces.

Everything here produces or inspects the lazily truncated schemes of
``pantsgraph``.  The builders fall into three groups:

* spine constructions: biflutes over Z or N with eventually periodic
  loop-graph decorations, flutes of glued pieces, and spheres whose end
  space is a single point of prescribed rank over its derived cloud;
* tree constructions: schemes over the trivalent tree whose pants may
  bloom handles along marked rays (or everywhere) and carry one fixed
  piece each;
* surgery and analysis: connected sums, realizing a closed end-space
  encoding as a scheme, cutting a scheme down to the spine joining two
  ends so the biflute pattern between them can be recognized, and
  neighbourhood systems for the visible ends with checkable exchange
  witnesses.

A builder never invents ends: the punctures, rays, and spine limits of
every truncation are exactly the points of the encoding the scheme was
built from, and ``visible_ends`` reports them by tag.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .ordinal import (
    ClosedSetEncoding,
    ConstTail,
    OrdinalNotation,
    RampTail,
    RankOverflow,
    SetNode,
    ZERO,
    _retag,
    canonical_key,
    canonical_point,
    cb_rank,
    node_rank,
    subtree_has_genus,
    with_tags,
)
from .pantsgraph import (
    EmbeddingFailure,
    LevelStructure,
    MalformedGraph,
    PantsScheme,
    Slot,
    TruncatedGraph,
    _curve_universe,
    _prefix_graph,
    all_free_slots,
    assign_levels,
    attach,
    bare_ray_scheme,
    edge_id,
    flute,
    loop_graph,
    make_interior,
    merge_graphs,
    z_graph,
)

__all__ = [
    "InvalidParameters",
    "NotABiflute",
    "NoBoundarySlot",
    "NoGluingSite",
    "EventuallyPeriodic",
    "BifluteParams",
    "biflute",
    "recognize_biflute",
    "biflute_between",
    "EndView",
    "visible_ends",
    "eta_sphere",
    "flute_of",
    "standard_tree",
    "pants_for_pure",
    "levels_for",
    "connected_sum",
    "compact_pants",
    "REWitness",
    "check_witness",
    "serialize_witnesses",
    "parse_witnesses",
    "WITNESS_HEADER",
    "Neighbourhood",
    "NormalSystem",
    "check_normal_system",
    "build_re_system",
]


class InvalidParameters(ValueError):
    """Parameter data that violates its own constraints."""


class NotABiflute(ValueError):
    """Recognition failure; carries the first violating vertex."""

    def __init__(self, vertex: str, message: str):
        self.vertex = vertex
        super().__init__("%s (at %s)" % (message, vertex))


class NoBoundarySlot(ValueError):
    """A piece offered for gluing has no free boundary root."""


class NoGluingSite(ValueError):
    """No usable connected-sum site on the scheme."""


# ---------------------------------------------------------------------------
# eventually periodic sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventuallyPeriodic:
    """Integer sequence over Z: a repeating block plus finitely many
    exceptional entries ``(index, value)``."""

    period: Tuple[int, ...]
    exceptions: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        if not self.period:
            raise InvalidParameters("period block must be nonempty")
        for v in self.period + tuple(v for _, v in self.exceptions):
            if not isinstance(v, int) or v < 0:
                raise InvalidParameters("sequence values are ints >= 0, got %r" % (v,))
        indices = [i for i, _ in self.exceptions]
        if len(indices) != len(set(indices)):
            raise InvalidParameters("duplicate exception index")

    @staticmethod
    def const(v: int) -> "EventuallyPeriodic":
        return EventuallyPeriodic((v,))

    def value(self, i: int) -> int:
        for j, v in self.exceptions:
            if j == i:
                return v
        return self.period[i % len(self.period)]

    def bound(self) -> int:
        return max(self.period + tuple(v for _, v in self.exceptions))


def _lcm(a: int, b: int) -> int:
    from math import gcd

    return a * b // gcd(a, b)


@dataclass(frozen=True)
class BifluteParams:
    """Decoration pattern along a spine: a loop graph of type
    ``(a_i, b_i)`` at station i, consecutive stations ``c_i`` pants
    apart, over Z or N."""

    a_seq: EventuallyPeriodic
    b_seq: EventuallyPeriodic
    c_seq: EventuallyPeriodic
    base: str = "Z"
    verdict: str = field(default="", compare=False)

    def __post_init__(self):
        if self.base not in ("Z", "N"):
            raise InvalidParameters("base must be 'Z' or 'N', got %r" % (self.base,))
        for v in self.c_seq.period + tuple(v for _, v in self.c_seq.exceptions):
            if v < 1:
                raise InvalidParameters("station gaps must be >= 1")
        cycle = _lcm(len(self.a_seq.period), len(self.b_seq.period))
        sums = [self.a_seq.period[i % len(self.a_seq.period)]
                + self.b_seq.period[i % len(self.b_seq.period)]
                for i in range(cycle)]
        if any(s == 0 for s in sums) and any(s > 0 for s in sums):
            raise InvalidParameters(
                "loop sizes must vanish everywhere or nowhere on the period")

    @staticmethod
    def constant(a: int, b: int, c: int, base: str = "Z") -> "BifluteParams":
        return BifluteParams(EventuallyPeriodic.const(a),
                             EventuallyPeriodic.const(b),
                             EventuallyPeriodic.const(c), base)

    @property
    def A(self) -> int:
        return self.a_seq.bound()

    @property
    def B(self) -> int:
        return self.b_seq.bound()

    @property
    def C(self) -> int:
        return self.c_seq.bound()

    def is_plain(self) -> bool:
        """No loop graphs anywhere (pattern (0, 0, *))."""
        return self.A == 0 and self.B == 0

    def fits(self, a: int, b: int, c: int) -> bool:
        """The observed pattern stays within the stated bounds."""
        return self.A <= a and self.B <= b and self.C <= c


def _station_positions(p: BifluteParams, radius: int) -> Dict[int, int]:
    """Spine position -> station index, for stations within the radius.
    Station 0 sits at position 0; stations i-1 and i are
    ``c_seq.value(i)`` apart."""
    out = {0: 0}
    pos, i = 0, 0
    while pos <= radius:
        i += 1
        pos += p.c_seq.value(i)
        if pos <= radius:
            out[pos] = i
    if p.base == "Z":
        pos, i = 0, 0
        while pos >= -radius:
            pos -= p.c_seq.value(i)
            i -= 1
            if pos >= -radius:
                out[pos] = i
    return out


def biflute(p: BifluteParams, name: str = "") -> PantsScheme:
    """Spine over Z or N with a loop graph of type ``(a_i, b_i)`` hung
    at every station; non-station hang slots stay cusps."""
    base = z_graph() if p.base == "Z" else flute()
    prefix = "z:" if p.base == "Z" else "f:"

    def station_of(s: Slot) -> Optional[int]:
        pos = int(s.vertex[len(prefix):])
        return _station_positions(p, abs(pos)).get(pos)

    def piece_at(s: Slot) -> Optional[PantsScheme]:
        i = station_of(s)
        if i is None:
            return None
        a, b = p.a_seq.value(i), p.b_seq.value(i)
        if a == 0 and b == 0:
            return None
        return loop_graph(a, b)

    scheme = attach(base, all_free_slots("cusp"), piece_at,
                    glue_family="glue", glue_index=station_of,
                    name=name or "biflute(%d,%d,%d;%s)" % (p.A, p.B, p.C, p.base))
    scheme.meta["biflute"] = p
    if p.base == "Z":
        scheme.meta["level_roots"] = [edge_id(Slot("z:0", 1), Slot("z:1", 0))]
    return scheme


# ---------------------------------------------------------------------------
# biflute recognition
# ---------------------------------------------------------------------------


def _adjacency(g: TruncatedGraph) -> Dict[str, List[Tuple[str, str, object]]]:
    """vertex -> [(peer, kind, payload)]; payload is an edge id or run id."""
    adj: Dict[str, List[Tuple[str, str, object]]] = {v: [] for v in g.vertices}
    for eid, (a, b) in g.edges().items():
        adj[a.vertex].append((b.vertex, "edge", eid))
        if a.vertex != b.vertex:
            adj[b.vertex].append((a.vertex, "edge", eid))
    for r in g.runs.values():
        adj[r.slot_a.vertex].append((r.slot_b.vertex, "run", r.id))
        adj[r.slot_b.vertex].append((r.slot_a.vertex, "run", r.id))
    return adj


def _shortest_path(g: TruncatedGraph, va: str, vb: str):
    """BFS path as [(vertex, step)]: step describes the hop to the next
    vertex, None on the last entry."""
    adj = _adjacency(g)
    parent: Dict[str, Optional[Tuple[str, str, object]]] = {va: None}
    ring = [va]
    while ring and vb not in parent:
        nxt = []
        for v in ring:
            for w, kind, payload in sorted(adj[v], key=lambda t: str(t[2])):
                if w not in parent:
                    parent[w] = (v, kind, payload)
                    nxt.append(w)
        ring = nxt
    if vb not in parent:
        return None
    hops: List[Tuple[str, Optional[Tuple[str, object]]]] = []
    v = vb
    while v != va:
        pv, kind, payload = parent[v]
        hops.append((pv, (kind, payload)))
        v = pv
    hops.reverse()
    hops.append((vb, None))
    return hops


def _edge_slots(g: TruncatedGraph, eid: str) -> Tuple[Slot, Slot]:
    a, _ = eid.split("--")
    sa = Slot.parse(a)
    return sa, g.pairing[sa]


def _flood(g: TruncatedGraph, start: str, blocked: Set[str]):
    """Component of ``start`` avoiding blocked vertices: its vertex set,
    the blocked vertices touched, and whether the truncation cut it off
    (frontier or runs inside)."""
    comp = {start}
    touches: Set[str] = set()
    unfinished = False
    queue = [start]
    run_slots = g.run_slots()
    while queue:
        v = queue.pop()
        for k in range(3):
            s = Slot(v, k)
            if s in g.frontier or s in run_slots:
                unfinished = True
                continue
            peer = g.pairing.get(s)
            if peer is None:
                continue
            if peer.vertex in blocked:
                touches.add(peer.vertex)
            elif peer.vertex not in comp:
                comp.add(peer.vertex)
                queue.append(peer.vertex)
    return comp, touches, unfinished


def _classify_loop(g: TruncatedGraph, comp: Set[str], root: str) -> Tuple[int, int]:
    """Recognize an attachment component as a loop graph of type (a, b).
    The last chain pants of a build sits on the cycle itself, so the
    builds (1, b) and (0, b+1) share one graph; the recognizer reports
    the root-on-cycle form (0, b+1)."""
    nbrs: Dict[str, List[str]] = {v: [] for v in comp}
    looped: Set[str] = set()
    for v in comp:
        for k in range(3):
            s = Slot(v, k)
            if s in g.free:
                if g.free[s] != "cusp":
                    raise NotABiflute(v, "loop graphs hang only cusps")
                continue
            peer = g.pairing.get(s)
            if peer is None or peer.vertex not in comp:
                continue
            if peer.vertex == v:
                looped.add(v)
            else:
                nbrs[v].append(peer.vertex)
    core = set(comp)
    changed = True
    while changed:
        changed = False
        for v in sorted(core):
            if v in looped or len(core) == 1:
                continue
            if len([w for w in nbrs[v] if w in core]) <= 1:
                core.discard(v)
                changed = True
                break
    if looped and (looped != core or len(looped) > 1):
        raise NotABiflute(root, "self-edge off the cycle")
    if len(core) == 1 and not looped:
        raise NotABiflute(root, "attachment carries no loop")
    if root in core:
        a, b = 0, len(core)
    else:
        dist = 1
        ring = {w for w in nbrs[root]}
        seen = {root} | ring
        while not ring & core:
            ring = {w for v in ring for w in nbrs[v] if w not in seen}
            if not ring:
                raise NotABiflute(root, "attachment loop is unreachable")
            seen |= ring
            dist += 1
        a, b = dist + 1, len(core) - 1
    if a + b != len(comp):
        raise NotABiflute(root, "attachment is not a chain ending in a loop")
    return a, b


def _recognize_core(g: TruncatedGraph, end_a: Slot, end_b: Slot,
                    depth: int, base: str) -> BifluteParams:
    if not g.vertices:
        raise NotABiflute("-", "empty truncation")
    hops = _shortest_path(g, end_a.vertex, end_b.vertex)
    if hops is None:
        raise NotABiflute(end_a.vertex, "spine ends are disconnected")
    spine = {v for v, _ in hops}
    used: Dict[str, Set[int]] = {v: set() for v in spine}
    used[end_a.vertex].add(end_a.index)
    used[end_b.vertex].add(end_b.index)
    pos: Dict[str, int] = {}
    p = 0
    for i, (v, step) in enumerate(hops):
        pos[v] = p
        if step is None:
            break
        kind, payload = step
        w = hops[i + 1][0]
        if kind == "edge":
            sa, sb = _edge_slots(g, payload)
            p += 1
        else:
            r = g.runs[payload]
            sa, sb = r.slot_a, r.slot_b
            p += r.count + 1
        if sa.vertex == w:
            sa, sb = sb, sa
        used[v].add(sa.index)
        used[w].add(sb.index)

    stations: List[Tuple[int, int, int]] = []
    for v, _ in hops:
        for k in range(3):
            if k in used[v]:
                continue
            s = Slot(v, k)
            role = g.slot_role(s)
            if role in ("free", "frontier"):
                continue
            if role == "run":
                raise NotABiflute(v, "condensed run leaves the spine")
            if role == "missing":
                raise NotABiflute(v, "unaccounted slot")
            peer = g.pairing[s]
            if peer.vertex in spine:
                raise NotABiflute(v, "chord across the spine")
            comp, touches, unfinished = _flood(g, peer.vertex, spine)
            if touches - {v}:
                raise NotABiflute(v, "attachment meets the spine twice")
            if unfinished:
                continue  # cut by the truncation: not yet classifiable
            a, b = _classify_loop(g, comp, peer.vertex)
            stations.append((pos[v], a, b))

    stations.sort()
    verdict = "compatible at depth %d" % depth
    if not stations:
        return BifluteParams(EventuallyPeriodic.const(0),
                             EventuallyPeriodic.const(0),
                             EventuallyPeriodic.const(1), base, verdict=verdict)
    a_obs = tuple(a for _, a, _ in stations)
    b_obs = tuple(b for _, _, b in stations)
    gaps = tuple(stations[i][0] - stations[i - 1][0]
                 for i in range(1, len(stations)))

    def collapse(vals: Tuple[int, ...], default: int) -> EventuallyPeriodic:
        if not vals:
            return EventuallyPeriodic.const(default)
        if len(set(vals)) == 1:
            return EventuallyPeriodic.const(vals[0])
        return EventuallyPeriodic(vals)

    return BifluteParams(collapse(a_obs, 0), collapse(b_obs, 0),
                         collapse(gaps, 1), base, verdict=verdict)


def recognize_biflute(scheme: PantsScheme, depth: int) -> BifluteParams:
    """Recognize the decoration pattern of a scheme's truncation.  The
    truncation must be a spine (one or two growth directions) carrying
    finished loop-graph attachments."""
    if depth < 2:
        raise InvalidParameters("recognition needs depth >= 2")
    g = scheme.truncate(depth)
    growth = sorted(g.frontier, key=str)
    if len(growth) == 2:
        return _recognize_core(g, growth[0], growth[1], depth, "Z")
    if len(growth) == 1:
        root = scheme.root_slot
        if root is None or g.free.get(root) != "boundary":
            candidates = sorted(
                (s for s, k in g.free.items()
                 if k == "boundary" and s not in g.rays and s.index == 0),
                key=str)
            if not candidates:
                raise NotABiflute(growth[0].vertex,
                                  "one growth direction but no root boundary")
            root = candidates[0]
        return _recognize_core(g, root, growth[0], depth, "N")
    if not growth:
        v = sorted(g.vertices)[0] if g.vertices else "-"
        raise NotABiflute(v, "no growth direction")
    raise NotABiflute(growth[2].vertex, "more than two growth directions")


# ---------------------------------------------------------------------------
# branch plans
# ---------------------------------------------------------------------------
#
# The remaining builders share one emit engine.  A plan is a symbolic
# branch description: a spine hosting an entry stream (finite prefix
# plus repeating block), or an infinite trivalent tree.  Entry specs
# name what each hang slot carries; accumulating entries become
# sub-plans realized lazily, so truncation stays cheap and every depth
# emits a prefix of the same infinite graph.


@dataclass(frozen=True)
class _RaySpec:
    node: SetNode


@dataclass(frozen=True)
class _CuspSpec:
    node: Optional[SetNode] = None


@dataclass(frozen=True)
class _BoundarySpec:
    pass


@dataclass(frozen=True)
class _HandleSpec:
    pass


@dataclass
class _PieceSpec:
    scheme: PantsScheme
    tag: Optional[str] = None
    genus: bool = False


@dataclass
class _SubSpec:
    node: SetNode
    flavor: str = "pure"


@dataclass
class _RampSpec:
    limit: OrdinalNotation
    genus: bool
    base_tag: str
    flavor: str = "pure"
    cache: Dict[int, object] = field(default_factory=dict)


@dataclass
class _TreeSpec:
    node: SetNode


@dataclass
class _SpinePlan:
    prefix: str
    pre: Tuple[object, ...]
    per: Tuple[object, ...]
    first_slot_taken: bool   # slot 0 of the first vertex glues to a parent
    boundary_root: bool      # slot 0 of the first vertex is a free boundary
    node: Optional[SetNode] = None
    limit_tag: Optional[str] = None
    limit_node: Optional[SetNode] = None


@dataclass
class _TreePlan:
    prefix: str
    node: SetNode
    rays: Tuple[Tuple[str, str], ...]  # parsed (prefix word, repeating word)
    extra: Optional[object] = None     # one attachment per pants
    genus_all: bool = False
    virtual_root: bool = False         # two subtrees joined across a curve


_RAY_RE = re.compile(r"([LR]*)\(([LR]+)\)\*")


def _parse_ray(text: str) -> Tuple[str, str]:
    m = _RAY_RE.fullmatch(text)
    if m is None:
        raise MalformedGraph("bad marked ray %r" % text)
    return m.group(1), m.group(2)


def _ray_char(ray: Tuple[str, str], i: int) -> str:
    pre, per = ray
    if i < len(pre):
        return pre[i]
    return per[(i - len(pre)) % len(per)]


def _on_ray(path: str, ray: Tuple[str, str]) -> bool:
    return all(path[i] == _ray_char(ray, i) for i in range(len(path)))


def _spec_genus(spec) -> bool:
    if isinstance(spec, _HandleSpec):
        return True
    if isinstance(spec, (_SubSpec, _TreeSpec)):
        return subtree_has_genus(spec.node)
    if isinstance(spec, _RampSpec):
        return spec.genus
    if isinstance(spec, _PieceSpec):
        return spec.genus
    if isinstance(spec, (_RaySpec, _CuspSpec)) and spec.node is not None:
        return spec.node.genus
    return False


def _wrap_period(per: Tuple[object, ...], limit_genus: bool) -> Tuple[object, ...]:
    """Interleave a handle before each non-handle period entry when the
    spine limit accumulates genus."""
    if not limit_genus:
        return per
    out: List[object] = []
    for spec in per:
        if not isinstance(spec, _HandleSpec):
            out.append(_HandleSpec())
        out.append(spec)
    return tuple(out)


def _spec_for(node: SetNode, flavor: str) -> object:
    if node.perfect:
        return _TreeSpec(node)
    if node.children or node.tail is not None or node.genus:
        return _SubSpec(node, flavor)
    if flavor == "sphere":
        return _CuspSpec(node)
    return _RaySpec(node)


def _plan_of(node: SetNode, prefix: str, first_slot_taken: bool,
             boundary_root: bool = False, flavor: str = "pure"):
    """Translate an encoding node into a branch plan.  The node's own
    point becomes the spine limit when something accumulates to it, a
    ray (or cusp) otherwise; its children hang on the early stations."""
    if node.perfect:
        rays = tuple(_parse_ray(r) for r in node.genus_rays)
        return _TreePlan(prefix, node, rays, None, node.genus,
                         virtual_root=not first_slot_taken)
    pre: List[object] = [_spec_for(c, flavor) for c in node.children]
    per: Tuple[object, ...] = ()
    limit_tag = limit_node = None
    if isinstance(node.tail, ConstTail):
        per = _wrap_period(tuple(_spec_for(b, flavor) for b in node.tail.block),
                           node.genus)
        limit_tag, limit_node = node.tag, node
    elif isinstance(node.tail, RampTail):
        if node.tail.worn:
            raise EmbeddingFailure(
                "worn derived tails name no single surface (node %r)" % (node.tag,))
        per = _wrap_period(
            (_RampSpec(node.tail.limit, node.tail.genus, node.tag or "?", flavor),),
            node.genus)
        limit_tag, limit_node = node.tag, node
    elif node.genus:
        per = (_HandleSpec(),)
        limit_tag, limit_node = node.tag, node
    else:
        pre.insert(0, _CuspSpec(node) if flavor == "sphere" else _RaySpec(node))
    plan = _SpinePlan(prefix, tuple(pre), per, first_slot_taken, boundary_root,
                      node=node, limit_tag=limit_tag, limit_node=limit_node)
    _check_arity(plan)
    return plan


def _check_arity(plan: _SpinePlan):
    if plan.per:
        return
    n = len(plan.pre)
    if plan.first_slot_taken or plan.boundary_root:
        if n < 2:
            raise EmbeddingFailure(
                "a hanging branch needs at least two entries, got %d (node %r)"
                % (n, plan.node.tag if plan.node else None))
    elif n < 3:
        raise EmbeddingFailure(
            "fewer than three ends and nothing accumulating: a plane or "
            "annulus carries no pants decomposition (node %r)"
            % (plan.node.tag if plan.node else None,))


@dataclass(frozen=True)
class EndView:
    """One visible end of a truncation: where it anchors and what local
    structure it carries."""

    tag: str
    kind: str  # "ray" | "cusp" | "limit" | "chain" | "tree-ray"
    node: SetNode
    genus: bool
    slot: Optional[str] = None    # anchor slot for ray and cusp ends
    prefix: Optional[str] = None  # spine or tree prefix otherwise
    word: Optional[Tuple[str, str]] = None  # marked-ray word for tree rays
    period_has_genus: bool = False

    def local_key(self):
        """Equal keys mean the two ends are locally interchangeable:
        same rank structure and genus, ignoring hanging children."""
        stripped = replace(self.node, children=(), tag=None)
        return (canonical_key(stripped), self.genus)


def _copy_node(node: SetNode, copy: Optional[int]) -> SetNode:
    if copy is None or copy < 2:
        return node
    return _retag(node, "@%d" % copy)


def _entry_at(plan: _SpinePlan, j: int):
    """Entry spec and period copy number (None for prefix entries)."""
    if j < len(plan.pre):
        return plan.pre[j], None
    q = j - len(plan.pre)
    return plan.per[q % len(plan.per)], q // len(plan.per) + 1


def _spine_shape(plan: _SpinePlan):
    """(entry count or None, vertex count or None); None means infinite."""
    if plan.per:
        return None, None
    n = len(plan.pre)
    if plan.first_slot_taken or plan.boundary_root:
        return n, n - 1
    return n, n - 2


def _host_of(plan: _SpinePlan, j: int) -> Tuple[int, int]:
    """Vertex index and slot index hosting entry j."""
    n, nv = _spine_shape(plan)
    if plan.first_slot_taken or plan.boundary_root:
        if n is not None and j == n - 1:
            return nv - 1, 1
        return j, 2
    if j == 0:
        return 0, 0
    if n is not None and j == n - 1:
        return nv - 1, 1
    return j - 1, 2


def _emit_spine(g: TruncatedGraph, plan: _SpinePlan, anchor: Optional[Slot],
                budget: int, glue_index: Optional[int],
                table: Dict[str, EndView]):
    n_entries, n_vertices = _spine_shape(plan)
    limit_t = budget if n_vertices is None else min(budget, n_vertices)
    if limit_t <= 0:
        if anchor is not None:
            g.set_frontier(anchor)
        return
    names = [plan.prefix + "s:%d" % t for t in range(limit_t)]
    for v in names:
        g.add_vertex(v)
    for t in range(limit_t - 1):
        g.pair(Slot(names[t], 1), Slot(names[t + 1], 0), "spine", t)
    if n_vertices is None or limit_t < n_vertices:
        g.set_frontier(Slot(names[-1], 1))
    if anchor is not None:
        g.pair(anchor, Slot(names[0], 0), "glue",
               glue_index if glue_index is not None else 0)
    elif plan.boundary_root:
        g.set_free(Slot(names[0], 0), "boundary")
    if plan.limit_tag is not None and plan.limit_node is not None:
        kind = ("chain" if node_rank(plan.limit_node) == ZERO
                and plan.limit_node.genus else "limit")
        table[plan.limit_tag] = EndView(
            plan.limit_tag, kind, plan.limit_node, plan.limit_node.genus,
            prefix=plan.prefix,
            period_has_genus=any(_spec_genus(s) for s in plan.per))
    j = 0
    while n_entries is None or j < n_entries:
        spec, copy = _entry_at(plan, j)
        t, slot_index = _host_of(plan, j)
        if t >= limit_t:
            break
        _emit_entry(g, spec, copy, Slot(names[t], slot_index), j,
                    budget - t - 1, table)
        j += 1


def _emit_entry(g: TruncatedGraph, spec, copy: Optional[int], slot: Slot,
                abs_index: int, child_budget: int, table: Dict[str, EndView]):
    if isinstance(spec, _RaySpec):
        node = _copy_node(spec.node, copy)
        g.set_free(slot, "boundary")
        g.add_ray(slot)
        if node.tag:
            table[node.tag] = EndView(node.tag, "ray", node, node.genus,
                                      slot=str(slot))
        return
    if isinstance(spec, _CuspSpec):
        g.set_free(slot, "cusp")
        if spec.node is not None and spec.node.tag:
            node = _copy_node(spec.node, copy)
            table[node.tag] = EndView(node.tag, "cusp", node, node.genus,
                                      slot=str(slot))
        return
    if isinstance(spec, _BoundarySpec):
        g.set_free(slot, "boundary")
        return
    if isinstance(spec, _HandleSpec):
        hv = "%s/h" % slot
        g.add_vertex(hv)
        g.pair(slot, Slot(hv, 0), "hglue", abs_index)
        g.pair(Slot(hv, 1), Slot(hv, 2), "handle", abs_index)
        return
    if isinstance(spec, _PieceSpec):
        _emit_piece(g, spec.scheme, slot, abs_index, child_budget)
        return
    if isinstance(spec, _SubSpec):
        if child_budget <= 0:
            g.set_frontier(slot)
            return
        node = _copy_node(spec.node, copy)
        sub = _plan_of(node, "%s/" % slot, True, flavor=spec.flavor)
        _emit_plan(g, sub, slot, child_budget, abs_index, table)
        return
    if isinstance(spec, _RampSpec):
        c = copy if copy is not None else 1
        if c not in spec.cache:
            rank_c = spec.limit.fundamental(c)
            if spec.flavor == "sphere":
                spec.cache[c] = _PieceSpec(eta_sphere(rank_c))
            else:
                spec.cache[c] = canonical_point(
                    rank_c, genus=spec.genus, tag="%s.r%d" % (spec.base_tag, c))
        cached = spec.cache[c]
        if isinstance(cached, _PieceSpec):
            _emit_piece(g, cached.scheme, slot, abs_index, child_budget)
            return
        if cached.tail is None and not cached.children and not cached.genus:
            _emit_entry(g, _RaySpec(cached), None, slot, abs_index,
                        child_budget, table)
            return
        if child_budget <= 0:
            g.set_frontier(slot)
            return
        sub = _plan_of(cached, "%s/" % slot, True, flavor=spec.flavor)
        _emit_plan(g, sub, slot, child_budget, abs_index, table)
        return
    if isinstance(spec, _TreeSpec):
        if child_budget <= 0:
            g.set_frontier(slot)
            return
        sub = _plan_of(spec.node, "%s/" % slot, True)
        _emit_plan(g, sub, slot, child_budget, abs_index, table)
        return
    raise MalformedGraph("unknown entry spec %r" % (spec,))


def _emit_piece(g: TruncatedGraph, piece: PantsScheme, slot: Slot,
                abs_index: int, child_budget: int):
    pg = piece.truncate(max(child_budget, 0))
    if not pg.vertices:
        if len(pg.bare_rays) == 1:
            g.set_free(slot, "boundary")
            g.rays.add(slot)
        else:
            g.set_frontier(slot)
        return
    if piece.root_slot is None:
        raise NoBoundarySlot("piece %r has no root slot" % piece.name)
    prefixed = _prefix_graph(pg, "%s/" % slot)
    root = Slot("%s/%s" % (slot, piece.root_slot.vertex), piece.root_slot.index)
    if prefixed.free.get(root) != "boundary":
        raise NoBoundarySlot("piece root %s is not a free boundary" % root)
    merge_graphs(g, prefixed)
    g.pair(slot, root, "glue", abs_index)


def _emit_tree(g: TruncatedGraph, tp: _TreePlan, anchor: Optional[Slot],
               budget: int, glue_index: Optional[int],
               table: Dict[str, EndView]):
    if budget <= 0:
        if anchor is not None:
            g.set_frontier(anchor)
        return

    def emit_pants(addr: str, parent_slot: Optional[Slot], level: int) -> str:
        main = tp.prefix + "t:" + addr
        g.add_vertex(main)
        if parent_slot is not None:
            g.pair(parent_slot, Slot(main, 0), "tree", level - 1)
        elif anchor is not None:
            g.pair(anchor, Slot(main, 0), "glue",
                   glue_index if glue_index is not None else 0)
        path = addr[1:]
        extras: List[object] = []
        if tp.genus_all or any(_on_ray(path, r) for r in tp.rays):
            extras.append(_HandleSpec())
        if tp.extra is not None:
            extras.append(tp.extra)
        carrier = main
        for i, spec in enumerate(extras):
            _emit_entry(g, spec, None, Slot(carrier, 1), level,
                        budget - level - 1, table)
            nxt = main + ("+g" if i == len(extras) - 1 else "+a")
            g.add_vertex(nxt)
            g.pair(Slot(carrier, 2), Slot(nxt, 0), "tsplit", level)
            carrier = nxt
        for k, letter in ((1, "L"), (2, "R")):
            child = Slot(carrier, k)
            if level + 1 < budget:
                emit_pants(addr + letter, child, level + 1)
            else:
                g.set_frontier(child)
        return main

    if tp.virtual_root:
        left = emit_pants("rL", None, 0)
        right = emit_pants("rR", None, 0)
        g.pair(Slot(left, 0), Slot(right, 0), "splice", None)
    else:
        emit_pants("r", None, 0)
    for ray in tp.rays:
        tag = "%s!%s(%s)*" % (tp.node.tag or "?", ray[0], ray[1])
        table[tag] = EndView(tag, "tree-ray", tp.node, True,
                             prefix=tp.prefix, word=ray)


def _emit_plan(g: TruncatedGraph, plan, anchor: Optional[Slot], budget: int,
               glue_index: Optional[int], table: Dict[str, EndView]):
    if isinstance(plan, _SpinePlan):
        _emit_spine(g, plan, anchor, budget, glue_index, table)
    elif isinstance(plan, _TreePlan):
        _emit_tree(g, plan, anchor, budget, glue_index, table)
    else:
        raise MalformedGraph("unknown plan %r" % (plan,))


def _tree_root_curve(tp: _TreePlan) -> str:
    return edge_id(Slot(tp.prefix + "t:rL", 0), Slot(tp.prefix + "t:rR", 0))


def _scheme_from_plan(plan, name: str, root_slot: Optional[Slot],
                      meta: Optional[dict]) -> PantsScheme:
    def build(d: int) -> TruncatedGraph:
        g = TruncatedGraph()
        _emit_plan(g, plan, None, d, None, {})
        return g

    full_meta = dict(meta or {})
    full_meta["plan"] = plan
    return PantsScheme(build, name=name, root_slot=root_slot, meta=full_meta)


def visible_ends(scheme: PantsScheme, depth: int) -> Dict[str, EndView]:
    """Ends visible in the depth-truncation of an engine-built scheme,
    keyed by encoding tag.  Tags carrying ``@k`` or ``.rk`` mark the
    k-th repetition of an infinite family."""
    plan = scheme.meta.get("plan")
    if plan is None:
        raise MalformedGraph("scheme %r carries no branch plan" % scheme.name)
    g = TruncatedGraph()
    table: Dict[str, EndView] = {}
    _emit_plan(g, plan, None, depth, None, table)
    return table


# ---------------------------------------------------------------------------
# named constructions
# ---------------------------------------------------------------------------


def _as_ordinal(x: Union[int, OrdinalNotation]) -> OrdinalNotation:
    return OrdinalNotation.from_int(x) if isinstance(x, int) else x


def _all_tagged(node: SetNode) -> bool:
    if node.tag is None:
        return False
    kids = list(node.children)
    if isinstance(node.tail, ConstTail):
        kids.extend(node.tail.block)
    return all(_all_tagged(c) for c in kids)


def _strip_tags(node: SetNode) -> SetNode:
    tail = node.tail
    if isinstance(tail, ConstTail):
        tail = ConstTail(tuple(_strip_tags(b) for b in tail.block))
    return replace(node, tag=None, tail=tail,
                   children=tuple(_strip_tags(c) for c in node.children))


def _ensure_tags(enc: ClosedSetEncoding) -> ClosedSetEncoding:
    """Fully tagged copy: hand-tagged encodings pass through, anything
    partial is renamed wholesale so every end is addressable."""
    if _all_tagged(enc.root):
        return enc
    return with_tags(ClosedSetEncoding(_strip_tags(enc.root)))


def eta_sphere(eta: Union[int, OrdinalNotation]) -> PantsScheme:
    """Planar scheme whose end space is one point of the given rank over
    its derived cloud: rank 0 is the bare ray, rank 1 the cusped flute,
    and each higher rank strings spheres of lower rank along a flute."""
    eta = _as_ordinal(eta)
    enc = with_tags(ClosedSetEncoding(canonical_point(eta)))
    node = enc.root
    if eta.is_zero:
        scheme = bare_ray_scheme()
        scheme.meta["ends"] = enc
        return scheme
    if isinstance(node.tail, ConstTail):
        inner = node.tail.block[0]
        if inner.tail is None and not inner.children and not inner.genus:
            spec: object = _CuspSpec(inner)
        else:
            spec = _PieceSpec(eta_sphere(eta.pred()), tag=inner.tag)
    else:
        spec = _RampSpec(node.tail.limit, False, node.tag or "e", flavor="sphere")
    plan = _SpinePlan("", (), (spec,), False, True,
                      node=node, limit_tag=node.tag, limit_node=node)
    return _scheme_from_plan(plan, "sphere(%s)" % eta, Slot("s:0", 0),
                             {"ends": enc})


def flute_of(pieces: Sequence[object], period: Sequence[object] = (),
             genus_flags: Optional[Sequence[bool]] = None,
             limit_genus: bool = False, terminal: Optional[str] = None,
             name: str = "flute_of") -> PantsScheme:
    """Spine with a boundary root whose stations carry the given pieces:
    None hangs a cusp, "ray" a decorated boundary, and a scheme glues in
    at its boundary root.  ``period`` repeats forever after the listed
    pieces; without it the spine closes with a final cusp (or boundary,
    per ``terminal``).  A piece flagged in ``genus_flags`` gets a handle
    pants just before it; ``limit_genus`` does that at every period
    station."""

    def convert(entry, label: str) -> object:
        if entry is None:
            return _CuspSpec(SetNode(tag=label))
        if entry == "ray":
            return _RaySpec(SetNode(tag=label))
        if isinstance(entry, PantsScheme):
            ends = entry.meta.get("ends")
            has_genus = ends is not None and subtree_has_genus(ends.root)
            return _PieceSpec(entry, tag=label, genus=has_genus)
        raise InvalidParameters("station entry %r is not a piece" % (entry,))

    def node_of(spec) -> Optional[SetNode]:
        if isinstance(spec, (_RaySpec, _CuspSpec)):
            return spec.node
        if isinstance(spec, _PieceSpec):
            ends = spec.scheme.meta.get("ends")
            if ends is None or ends.root.tag is None:
                return None
            return _retag(ends.root, "#" + (spec.tag or "?"))
        return None

    pre = [convert(e, "p%d" % i) for i, e in enumerate(pieces)]
    if genus_flags is not None:
        if len(genus_flags) != len(pre):
            raise InvalidParameters("need one genus flag per piece")
        pre = [s for flag, spec in zip(genus_flags, pre)
               for s in ((_HandleSpec(), spec) if flag else (spec,))]
    per = tuple(convert(e, "q%d" % i) for i, e in enumerate(period))
    per = _wrap_period(per, limit_genus)
    if not per:
        pre.append(_BoundarySpec() if terminal == "boundary"
                   else _CuspSpec(SetNode()))

    limit_node = None
    if per:
        tail_nodes = []
        for s in per:
            if isinstance(s, _HandleSpec):
                continue
            n = node_of(s)
            tail_nodes.append(n)
        genus_limit = limit_genus or any(_spec_genus(s) for s in per)
        if all(n is not None for n in tail_nodes) and tail_nodes:
            limit_node = SetNode(genus=genus_limit,
                                 tail=ConstTail(tuple(tail_nodes)),
                                 tag="x-limit")
    plan = _SpinePlan("", tuple(pre), per, False, True,
                      node=limit_node,
                      limit_tag="x-limit" if limit_node is not None else None,
                      limit_node=limit_node)
    _check_arity(plan)
    meta: Dict[str, object] = {}
    if limit_node is not None:
        prefix_nodes = []
        for s in pre:
            if isinstance(s, (_HandleSpec, _BoundarySpec)):
                continue
            n = node_of(s)
            if n is None:
                prefix_nodes = None
                break
            prefix_nodes.append(n)
        if prefix_nodes is not None:
            meta["ends"] = ClosedSetEncoding(
                replace(limit_node, children=tuple(prefix_nodes)))
    return _scheme_from_plan(plan, name, Slot("s:0", 0), meta)


def standard_tree(w: Union[int, OrdinalNotation], genus: bool = False,
                  name: str = "") -> PantsScheme:
    """Scheme over the trivalent tree: every pants carries one extra
    attachment of type ``w`` (an extra cusp for w = 0, a rank-w sphere
    otherwise); with ``genus`` every pants also blooms a handle.  The
    end space is the whole boundary tree plus the attached points."""
    w = _as_ordinal(w)
    node = SetNode(perfect=True, genus=genus, tag="e")
    extra: object = (_CuspSpec(SetNode(tag="w0")) if w.is_zero
                     else _PieceSpec(eta_sphere(w), tag="w"))
    tp = _TreePlan("", node, (), extra, genus, virtual_root=True)
    scheme = _scheme_from_plan(
        tp, name or "tree(%s%s)" % (w, ",genus" if genus else ""),
        None, {"ends": ClosedSetEncoding(node), "tree_type": str(w)})
    splice = _tree_root_curve(tp)
    scheme.meta["level_roots"] = [splice]
    scheme.meta["witnesses"] = (
        REWitness("branch-L", "branch-R", splice, splice, "t:rL", "t:rR",
                  (("prefix", "t:rL", "t:rR"),)),
        REWitness("branch-R", "branch-L", splice, splice, "t:rR", "t:rL",
                  (("prefix", "t:rR", "t:rL"),)),
    )
    return scheme


def pants_for_pure(ends: Union[ClosedSetEncoding, SetNode],
                   depth: int = 6) -> PantsScheme:
    """Realize a closed end-space encoding as a pants scheme: isolated
    planar points become rays, isolated genus points handle chains,
    accumulation points spine limits with their cloud along the period,
    and perfect kernels trivalent trees.  Raises EmbeddingFailure for
    specs only a plane or annulus would carry."""
    if isinstance(ends, SetNode):
        ends = ClosedSetEncoding(ends)
    enc = _ensure_tags(ends)
    plan = _plan_of(enc.root, "", False)
    scheme = _scheme_from_plan(plan, "pure(%s)" % (enc.root.tag,), None,
                               {"ends": enc})
    if isinstance(plan, _TreePlan):
        scheme.meta["level_roots"] = [_tree_root_curve(plan)]
    else:
        _, nv = _spine_shape(plan)
        if nv is None or nv >= 2:
            scheme.meta["level_roots"] = [edge_id(Slot("s:0", 1), Slot("s:1", 0))]
    scheme.truncate(min(depth, 4))  # surface malformed specs eagerly
    return scheme


# ---------------------------------------------------------------------------
# levels
# ---------------------------------------------------------------------------


def _hangoff_curves(g: TruncatedGraph, root_vertices: Set[str]) -> Set[str]:
    """Curves confined to a frontier-free piece behind a bridge.  Such a
    piece is fully materialized and hangs off a single pants, so its
    curves bound blocks instead of separating shells."""
    edges = g.edges()
    adj: Dict[str, List[Tuple[str, str]]] = {v: [] for v in g.vertices}
    for eid, (a, b) in edges.items():
        adj[a.vertex].append((b.vertex, eid))
        adj[b.vertex].append((a.vertex, eid))
    bridges: Set[str] = set()
    disc: Dict[str, int] = {}
    low: Dict[str, int] = {}
    clock = 0
    for start in g.vertices:
        if start in disc:
            continue
        stack = [(start, None, iter(adj[start]))]
        disc[start] = low[start] = clock
        clock += 1
        while stack:
            v, in_eid, it = stack[-1]
            advanced = False
            for w, eid in it:
                if eid == in_eid:
                    continue
                if w not in disc:
                    disc[w] = low[w] = clock
                    clock += 1
                    stack.append((w, eid, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if not advanced:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        bridges.add(in_eid)
    parent_of = {v: v for v in g.vertices}

    def find(x):
        while parent_of[x] != x:
            parent_of[x] = parent_of[parent_of[x]]
            x = parent_of[x]
        return x

    for eid, (a, b) in edges.items():
        if eid not in bridges:
            parent_of[find(a.vertex)] = find(b.vertex)
    members: Dict[str, Set[str]] = {}
    for v in g.vertices:
        members.setdefault(find(v), set()).add(v)
    block_adj: Dict[str, List[Tuple[str, str]]] = {b: [] for b in members}
    for eid in bridges:
        a, b = edges[eid]
        block_adj[find(a.vertex)].append((find(b.vertex), eid))
        block_adj[find(b.vertex)].append((find(a.vertex), eid))
    frontier = {s.vertex for s in g.frontier}
    root_blocks = {find(v) for v in root_vertices if v in parent_of}
    order, entry = [], {}
    seen = set(root_blocks)
    queue = list(sorted(root_blocks))
    while queue:
        blk = queue.pop(0)
        order.append(blk)
        for nb, eid in block_adj[blk]:
            if nb not in seen:
                seen.add(nb)
                entry[nb] = eid
                queue.append(nb)
    subtree_frontier = {blk: bool(members[blk] & frontier) for blk in members}
    for blk in reversed(order):
        if blk in entry:
            up = next(nb for nb, eid in block_adj[blk] if entry[blk] == eid)
            subtree_frontier[up] = subtree_frontier[up] or subtree_frontier[blk]
    out: Set[str] = set()
    hang_verts: Set[str] = set()
    for blk in order:
        if blk in root_blocks or subtree_frontier[blk]:
            continue
        hang_verts |= members[blk]
        out.add(entry[blk])
    for cid, verts in _curve_universe(g).items():
        if verts and all(v in hang_verts for v in verts):
            out.add(cid)
    return out


def levels_for(scheme: PantsScheme, depth: int) -> LevelStructure:
    """Assign curve levels to a truncation, rooted at the scheme's
    declared root curves, then push handle meridians and hang-off
    curves inside their blocks."""
    g = scheme.truncate(depth)
    universe = set(g.edges()) | {
        str(s) for s, k in g.free.items() if k == "boundary" and s not in g.rays}
    roots = None
    declared = scheme.meta.get("level_roots")
    if declared:
        present = [c for c in declared if c in universe]
        if present:
            roots = present
    if roots is None and universe and not any(
            k == "boundary" and s not in g.rays for s, k in g.free.items()):
        roots = [sorted(universe)[0]]
    ls = assign_levels(g, roots)
    curves = _curve_universe(g)
    root_vertices = {v for c in ls.roots for v in curves.get(c, ())}
    interior = _hangoff_curves(g, root_vertices)
    for eid, (fam, _) in sorted(g.edge_class.items()):
        if fam == "handle":
            interior.add(eid)
    for cid in sorted(interior):
        lv = ls.levels.get(cid)
        if isinstance(lv, int) and lv >= 1:
            make_interior(ls, cid, (lv - 1, lv))
    return ls


# ---------------------------------------------------------------------------
# the biflute between two ends
# ---------------------------------------------------------------------------


def _spine_positions(g: TruncatedGraph, prefix: str) -> List[int]:
    pat = re.compile(re.escape(prefix) + r"s:(\d+)")
    out = []
    for v in g.vertices:
        m = pat.fullmatch(v)
        if m:
            out.append(int(m.group(1)))
    return sorted(out)


def _growth_slot(g: TruncatedGraph, view: EndView) -> Slot:
    """The truncation slot pointing toward a non-isolated end."""
    if view.kind in ("chain", "limit"):
        positions = _spine_positions(g, view.prefix or "")
        if not positions:
            raise NotABiflute("-", "end %s is not materialized" % view.tag)
        v = (view.prefix or "") + "s:%d" % positions[-1]
        for k in (1, 2, 0):
            if Slot(v, k) in g.frontier:
                return Slot(v, k)
        return Slot(v, 1)
    if view.kind == "tree-ray":
        prefix = view.prefix or ""
        addr = "r"
        while prefix + "t:" + addr + _ray_char(view.word, len(addr) - 1) in g.vertices:
            addr += _ray_char(view.word, len(addr) - 1)
        v = prefix + "t:" + addr
        if v not in g.vertices:
            raise NotABiflute(v, "end %s is not materialized" % view.tag)
        if v + "+g" in g.vertices:
            v = v + "+g"
        k = 1 if _ray_char(view.word, len(addr) - 1) == "L" else 2
        return Slot(v, k)
    raise NotABiflute("-", "end %s is not a growth direction" % view.tag)


def _extract_between(g: TruncatedGraph, sa: Slot, sb: Slot) -> TruncatedGraph:
    """Subgraph spanned by the path joining two slots: loop-graph
    attachments along it are kept, every other side branch is cut to a
    free boundary, decorations ride along."""
    hops = _shortest_path(g, sa.vertex, sb.vertex)
    if hops is None:
        raise NotABiflute(sa.vertex, "ends are disconnected")
    spine = [v for v, _ in hops]
    spine_set = set(spine)
    keep: Set[str] = set(spine)
    cut_slots: List[Slot] = []
    used: Dict[str, Set[int]] = {v: set() for v in spine}
    used[sa.vertex].add(sa.index)
    used[sb.vertex].add(sb.index)
    for i, (v, step) in enumerate(hops):
        if step is None:
            break
        kind, payload = step
        w = hops[i + 1][0]
        if kind == "edge":
            x, y = _edge_slots(g, payload)
        else:
            r = g.runs[payload]
            x, y = r.slot_a, r.slot_b
        if x.vertex == w:
            x, y = y, x
        used[v].add(x.index)
        used[w].add(y.index)
    for v in spine:
        for k in range(3):
            if k in used[v]:
                continue
            s = Slot(v, k)
            if g.slot_role(s) != "paired":
                continue
            peer = g.pairing[s]
            if peer.vertex in spine_set:
                cut_slots.append(s)
                continue
            comp, touches, unfinished = _flood(g, peer.vertex, spine_set)
            ok = not unfinished and not (touches - {v})
            if ok:
                try:
                    _classify_loop(g, comp, peer.vertex)
                except NotABiflute:
                    ok = False
            if ok:
                keep |= comp
            else:
                cut_slots.append(s)
    out = TruncatedGraph()
    for v in sorted(keep):
        out.add_vertex(v)
    cut_set = set(cut_slots)
    for eid, (a, b) in g.edges().items():
        if (a.vertex in keep and b.vertex in keep
                and a not in cut_set and b not in cut_set):
            fam, idx = g.edge_class[eid]
            out.pair(a, b, fam, idx)
    for s in cut_slots:
        out.set_free(s, "boundary")
    for s, kind in g.free.items():
        if s.vertex in keep and s not in out.free and s not in out.pairing:
            out.set_free(s, kind)
            if s in g.rays:
                out.rays.add(s)
    for s in g.frontier:
        if s.vertex in keep and s not in out.pairing and s not in out.free:
            out.set_frontier(s)
    for r in g.runs.values():
        if r.slot_a.vertex in keep and r.slot_b.vertex in keep:
            out.runs[r.id] = r
    return out


def biflute_between(scheme: PantsScheme, depth: int,
                    end_a=None, end_b=None) -> BifluteParams:
    """Cut the scheme down to the spine joining two ends (keeping the
    loop graphs along it) and recognize the resulting biflute.  Ends may
    be Slots, end tags, or callables on the truncation; with none given
    the scheme must show exactly two non-isolated genus ends."""
    if depth < 2:
        raise InvalidParameters("recognition needs depth >= 2")
    g = scheme.truncate(depth)

    def resolve(end) -> Slot:
        if isinstance(end, Slot):
            return end
        if callable(end):
            return end(g)
        views = visible_ends(scheme, depth)
        if end in views:
            return _growth_slot(g, views[end])
        return Slot.parse(end)

    if end_a is None or end_b is None:
        views = sorted((v for v in visible_ends(scheme, depth).values()
                        if v.genus and v.kind != "cusp"), key=lambda v: v.tag)
        if len(views) != 2:
            raise InvalidParameters(
                "need explicit ends: scheme shows %d genus ends" % len(views))
        sa, sb = (_growth_slot(g, v) for v in views)
    else:
        sa, sb = resolve(end_a), resolve(end_b)
    sub = _extract_between(g, sa, sb)
    return _recognize_core(sub, sa, sb, depth, "Z")


# ---------------------------------------------------------------------------
# connected sums
# ---------------------------------------------------------------------------


def compact_pants(prefix: str = "p") -> PantsScheme:
    """A single pants with three cusps; the smallest compact-type piece."""

    def build(d: int) -> TruncatedGraph:
        g = TruncatedGraph()
        v = "%s:0" % prefix
        g.add_vertex(v)
        for k in range(3):
            g.set_free(Slot(v, k), "cusp")
        return g

    return PantsScheme(build, name="pants")


def _handle_adjacent_slots(g: TruncatedGraph) -> List[Slot]:
    """Slots whose peer pants carries a self-edge (a handle block)."""
    out = set()
    for eid in g.edge_class:
        a, b = _edge_slots(g, eid)
        for host, piece in ((a, b), (b, a)):
            v = piece.vertex
            if v != host.vertex and g.pairing.get(Slot(v, 1)) == Slot(v, 2):
                out.add(host)
    return sorted(out, key=str)


def _scheme_has_genus(scheme: PantsScheme, g: TruncatedGraph) -> bool:
    ends = scheme.meta.get("ends")
    if ends is not None and subtree_has_genus(ends.root):
        return True
    p = scheme.meta.get("biflute")
    if p is not None and not p.is_plain():
        return True
    return any(a.vertex == b.vertex for a, b in g.edges().values())


def _default_site(scheme: PantsScheme) -> Slot:
    g = scheme.truncate(2)
    handles = _handle_adjacent_slots(g)
    if handles:
        return handles[0]
    if _scheme_has_genus(scheme, g):
        raise NoGluingSite(
            "scheme %r has genus but no handle block near the root" % scheme.name)
    cusps = sorted((s for s, k in g.free.items() if k == "cusp"), key=str)
    if cusps:
        return cusps[0]
    for v in sorted(g.vertices):
        for k in (2, 1, 0):
            if g.slot_role(Slot(v, k)) == "paired":
                return Slot(v, k)
    raise NoGluingSite("scheme %r has no usable site" % scheme.name)


def _prefix_edge_id(eid: str, prefix: str) -> str:
    a, b = eid.split("--")
    return edge_id(Slot.parse(prefix + a), Slot.parse(prefix + b))


def _prefix_witness(w: "REWitness", prefix: str) -> "REWitness":
    def fix_curve(c: str) -> str:
        return _prefix_edge_id(c, prefix) if "--" in c else str(
            Slot.parse(prefix + c))

    rewrites = []
    for rule in w.rewrites:
        if rule[0] == "prefix":
            rewrites.append(("prefix", prefix + rule[1], prefix + rule[2]))
        elif rule[0] == "shift":
            rewrites.append(("shift", prefix + rule[1], prefix + rule[2], rule[3]))
        else:
            rewrites.append((rule[0],
                             tuple((prefix + x, prefix + y) for x, y in rule[1])))
    return REWitness(w.end_x, w.end_y, fix_curve(w.gamma_x), fix_curve(w.gamma_y),
                     prefix + w.inside_x if w.inside_x else "",
                     prefix + w.inside_y if w.inside_y else "",
                     tuple(rewrites))


def connected_sum(s1: PantsScheme, s2: PantsScheme,
                  site1: Optional[Slot] = None,
                  site2: Optional[Slot] = None,
                  name: str = "") -> PantsScheme:
    """Connected sum along a separating curve: each site pants splits in
    two, the designated connection moves to the new half, and the two
    halves join across the sum curve.  On a scheme with genus the site
    must sit next to a handle block so both directions along the seam
    see genus immediately."""
    sites = []
    for scheme, site in ((s1, site1), (s2, site2)):
        if site is None:
            site = scheme.meta.get("sum_site") or _default_site(scheme)
        g = scheme.truncate(2)
        if _scheme_has_genus(scheme, g) and site not in _handle_adjacent_slots(g):
            raise NoGluingSite(
                "site %s on %r is not next to a handle block" % (site, scheme.name))
        sites.append(site)
    site1, site2 = sites

    def build(d: int) -> TruncatedGraph:
        g = TruncatedGraph()
        merge_graphs(g, _prefix_graph(s1.truncate(d), "a/"))
        merge_graphs(g, _prefix_graph(s2.truncate(d), "b/"))
        for tag, site, wname, idx in (("a/", site1, "sum:a", 1),
                                      ("b/", site2, "sum:b", 2)):
            s = Slot(tag + site.vertex, site.index)
            if s.vertex not in g.vertices:
                raise EmbeddingFailure("sum site %s is not materialized" % s)
            g.add_vertex(wname)
            w0 = Slot(wname, 0)
            if s in g.pairing:
                peer = g.pairing.pop(s)
                del g.pairing[peer]
                fam, i = g.edge_class.pop(edge_id(s, peer))
                g.pair(w0, peer, fam, i)
            elif s in g.free:
                kind = g.free.pop(s)
                g.set_free(w0, kind)
                if s in g.rays:
                    g.rays.discard(s)
                    g.rays.add(w0)
            else:
                raise EmbeddingFailure("sum site %s is not free" % s)
            g.pair(s, Slot(wname, 1), "sum-split", idx)
        g.pair(Slot("sum:a", 2), Slot("sum:b", 2), "sum", None)
        return g

    gamma = edge_id(Slot("sum:a", 2), Slot("sum:b", 2))
    meta: Dict[str, object] = {"sum_gamma": gamma, "level_roots": [gamma]}
    e1, e2 = s1.meta.get("ends"), s2.meta.get("ends")
    if e1 is not None and e2 is not None and not e1.root.perfect:
        extra = _retag(e2.root, "'")
        meta["ends"] = ClosedSetEncoding(
            replace(e1.root, children=e1.root.children + (extra,)))
    ws = [_prefix_witness(w, "a/") for w in s1.meta.get("witnesses", ())]
    ws += [_prefix_witness(w, "b/") for w in s2.meta.get("witnesses", ())]
    if ws:
        # a witness survives only if the surgery stayed out of both of
        # its regions; anything touching a site no longer exchanges
        probe = build(4)
        split = {"a/" + site1.vertex, "b/" + site2.vertex}

        def carryable(w: REWitness) -> bool:
            for curve, inside in ((w.gamma_x, w.inside_x),
                                  (w.gamma_y, w.inside_y)):
                if "--" in curve and curve not in probe.edges():
                    return False
                verts, rays = _region(probe, curve, inside)
                if verts & split:
                    return False
                if any(Slot.parse(r).vertex in split for r in rays):
                    return False
            return True

        kept = tuple(w for w in ws if carryable(w))
        if kept:
            meta["witnesses"] = kept
    root = None
    if s1.root_slot is not None and s1.root_slot != site1:
        root = Slot("a/" + s1.root_slot.vertex, s1.root_slot.index)
    return PantsScheme(build, name=name or "sum(%s,%s)" % (s1.name, s2.name),
                       root_slot=root, meta=meta)


# ---------------------------------------------------------------------------
# exchange witnesses
# ---------------------------------------------------------------------------

WITNESS_HEADER = "witness v1"

_SHIFT_RE = re.compile(r"s:(\d+)")


@dataclass(frozen=True)
class REWitness:
    """Checkable homeomorphism datum between two end neighbourhoods: the
    bounding curves, an anchor vertex on each inside, and a vertex
    rewrite carrying one region onto the other, pants decomposition and
    all.  A slot id in place of a curve names a bare ray region."""

    end_x: str
    end_y: str
    gamma_x: str
    gamma_y: str
    inside_x: str = ""
    inside_y: str = ""
    rewrites: Tuple = ()

    def apply(self, vertex: str) -> Optional[str]:
        for rule in self.rewrites:
            if rule[0] == "prefix":
                _, frm, to = rule
                if vertex.startswith(frm):
                    return to + vertex[len(frm):]
            elif rule[0] == "shift":
                _, frm, to, offset = rule
                if vertex.startswith(frm):
                    rest = vertex[len(frm):]
                    m = _SHIFT_RE.search(rest)
                    if m is None:
                        return None
                    j = int(m.group(1)) + offset
                    if j < 0:
                        return None
                    return to + rest[:m.start()] + "s:%d" % j + rest[m.end():]
            elif rule[0] == "pairs":
                for a, b in rule[1]:
                    if a == vertex:
                        return b
        return None


def _region(g: TruncatedGraph, curve: str, inside: str):
    """(vertices, anchored ray slot ids) on the inside of a curve.  A
    slot id as the curve names a puncture or bare-ray region with no
    pants in it."""
    if "--" not in curve:
        return frozenset(), frozenset({curve})
    if not inside:
        return frozenset(), frozenset()
    sa, sb = _edge_slots(g, curve)
    blocked = {sa, sb}
    comp = {inside}
    queue = [inside]
    while queue:
        v = queue.pop()
        for k in range(3):
            s = Slot(v, k)
            if s in blocked:
                continue
            peer = g.pairing.get(s)
            if peer is None or peer in blocked:
                continue
            if peer.vertex not in comp:
                comp.add(peer.vertex)
                queue.append(peer.vertex)
    rays = frozenset(str(s) for s in g.rays if s.vertex in comp)
    return frozenset(comp), rays


def check_witness(g: TruncatedGraph, w: REWitness) -> List[str]:
    """Verify a witness on one truncation: the regions are disjoint and
    the rewrite is a slot-state-preserving injection anchored at the
    cut.  The two sides of a truncation rarely reach equal depth, so
    vertices whose image falls past the far side's frontier are the
    allowed fringe; everything matched must correspond exactly."""
    out: List[str] = []
    vx, rx = _region(g, w.gamma_x, w.inside_x)
    vy, ry = _region(g, w.gamma_y, w.inside_y)
    if vx & vy or rx & ry:
        out.append("regions of %s and %s overlap" % (w.end_x, w.end_y))
        return out
    if not vx and not vy:
        return out  # two puncture regions: nothing further to carry
    phi: Dict[str, str] = {}
    for v in sorted(vx):
        img = w.apply(v)
        if img is not None and img in vy:
            phi[v] = img
    if not phi:
        out.append("rewrite matches nothing between %s and %s"
                   % (w.end_x, w.end_y))
        return out
    if w.inside_x and phi.get(w.inside_x) != w.inside_y:
        out.append("rewrite does not anchor the cut of %s at the cut of %s"
                   % (w.end_x, w.end_y))
        return out
    if len(set(phi.values())) != len(phi):
        out.append("rewrite is not injective on the %s side" % w.end_x)
        return out
    run_by_slot = {}
    for r in g.runs.values():
        run_by_slot[r.slot_a] = r
        run_by_slot[r.slot_b] = r
    for v in sorted(phi):
        for k in range(3):
            s, t = Slot(v, k), Slot(phi[v], k)
            role_s, role_t = g.slot_role(s), g.slot_role(t)
            if role_s != role_t:
                if {role_s, role_t} == {"paired", "frontier"}:
                    continue  # one side grew past the other's frontier
                out.append("slot %s maps to %s with role %s != %s"
                           % (s, t, role_s, role_t))
                continue
            if role_s == "paired":
                ps, pt = g.pairing[s], g.pairing[t]
                if ps.vertex in phi:
                    if phi[ps.vertex] != pt.vertex or ps.index != pt.index:
                        out.append("edge at %s is not carried to %s" % (s, t))
                elif ps.vertex not in vx and pt.vertex in vy:
                    out.append("boundary edge at %s maps to an interior edge" % s)
            elif role_s == "free":
                if g.free[s] != g.free[t] or (s in g.rays) != (t in g.rays):
                    out.append("free slot %s changes kind at %s" % (s, t))
            elif role_s == "run":
                a, b = run_by_slot[s], run_by_slot[t]
                if a.count != b.count or a.hang != b.hang:
                    out.append("run at %s changes shape" % s)
    return out


def serialize_witnesses(g: TruncatedGraph, witnesses: Iterable[REWitness]) -> str:
    lines = [WITNESS_HEADER]
    for w in witnesses:
        vx, _ = _region(g, w.gamma_x, w.inside_x)
        pairs = ",".join("%s>%s" % (v, w.apply(v)) for v in sorted(vx)
                         if w.apply(v) is not None)
        lines.append("swap %s %s gamma_x=%s gamma_y=%s map=%s"
                     % (w.end_x, w.end_y, w.gamma_x, w.gamma_y, pairs))
    return "\n".join(lines) + "\n"


def parse_witnesses(text: str) -> Tuple[REWitness, ...]:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != WITNESS_HEADER:
        raise MalformedGraph("missing '%s' header" % WITNESS_HEADER)
    out = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] != "swap" or len(parts) < 5:
            raise MalformedGraph("bad witness line %r" % ln)
        fields = {}
        for p in parts[3:]:
            key, eq, val = p.partition("=")
            if not eq:
                raise MalformedGraph("bad witness field %r" % p)
            fields[key] = val
        pairs = []
        for chunk in fields.get("map", "").split(","):
            if not chunk:
                continue
            if ">" not in chunk:
                raise MalformedGraph("bad witness pair %r" % chunk)
            a, _, b = chunk.partition(">")
            pairs.append((a, b))
        inside_x = pairs[0][0] if pairs else ""
        inside_y = pairs[0][1] if pairs else ""
        out.append(REWitness(parts[1], parts[2],
                             fields["gamma_x"], fields["gamma_y"],
                             inside_x, inside_y,
                             (("pairs", tuple(pairs)),) if pairs else ()))
    return tuple(out)


# ---------------------------------------------------------------------------
# normal neighbourhood systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Neighbourhood:
    """One closed end neighbourhood: the cutting curve and the side the
    owner lives on.  ``index`` orders the owner's shrinking family;
    ``partner`` names the equivalent end the member was built for."""

    owner: str
    partner: str
    index: int
    curve: str
    inside: str
    genus: bool
    rank: OrdinalNotation


@dataclass(frozen=True)
class NormalSystem:
    neighbourhoods: Tuple[Neighbourhood, ...]

    def planar_part(self) -> Tuple[Neighbourhood, ...]:
        return tuple(n for n in self.neighbourhoods if not n.genus)

    def genus_part(self) -> Tuple[Neighbourhood, ...]:
        return tuple(n for n in self.neighbourhoods if n.genus)

    def for_end(self, tag: str) -> Tuple[Neighbourhood, ...]:
        return tuple(sorted((n for n in self.neighbourhoods if n.owner == tag),
                            key=lambda n: n.index))


def _contains(big, small) -> bool:
    bv, br = big
    sv, sr = small
    return sv <= bv and all(r in br or Slot.parse(r).vertex in bv for r in sr)


def _disjoint(a, b) -> bool:
    av, ar = a
    bv, br = b
    if av & bv or ar & br:
        return False
    if any(Slot.parse(r).vertex in bv for r in ar):
        return False
    if any(Slot.parse(r).vertex in av for r in br):
        return False
    return True


def _ends_inside(g: TruncatedGraph, region, views: Dict[str, EndView]):
    verts, rays = region
    found = []
    for view in views.values():
        if view.kind in ("ray", "cusp"):
            if view.slot in rays or Slot.parse(view.slot).vertex in verts:
                found.append(view)
        elif view.kind in ("chain", "limit"):
            positions = _spine_positions(g, view.prefix or "")
            if positions and (view.prefix or "") + "s:%d" % positions[-1] in verts:
                found.append(view)
    return found


def _boundary_edges(g: TruncatedGraph, verts) -> List[str]:
    return [eid for eid, (a, b) in g.edges().items()
            if (a.vertex in verts) != (b.vertex in verts)]


def _handle_edges_inside(g: TruncatedGraph, verts) -> List[str]:
    return [eid for eid, (a, b) in g.edges().items()
            if a.vertex == b.vertex and a.vertex in verts]


def _incident_curves(g: TruncatedGraph, v: str) -> List[str]:
    out = []
    for k in range(3):
        s = Slot(v, k)
        peer = g.pairing.get(s)
        if peer is not None:
            out.append(edge_id(s, peer))
        elif g.free.get(s) == "boundary" and s not in g.rays:
            out.append(str(s))
    return out


def check_normal_system(scheme: PantsScheme, system: NormalSystem,
                        depth: int) -> List[str]:
    """Check the decidable clauses of a neighbourhood system on one
    truncation; returns violation strings (empty means pass).

    Checked per member: a single bounding curve, genus inside exactly
    for genus members (1); the owner is the unique point of its rank and
    genus inside (2a); the two sides of a pair never overlap (2b); each
    family shrinks (2d); different ranks nest or avoid each other (3a);
    only outer family members or higher-rank members may contain a
    member (3b); regions stay at or below their curve's level (4);
    handles recur toward genus ends (5a); and each genus member contains
    a deeper one a single handle block in, exactly one pants pair for
    handle chains (5b) - the innermost member is exempt, having nothing
    deeper to compare against."""
    g = scheme.truncate(depth)
    views = visible_ends(scheme, depth)
    ls = levels_for(scheme, depth)
    out: List[str] = []
    rows = list(system.neighbourhoods)
    regions = {id(n): _region(g, n.curve, n.inside) for n in rows}

    for n in rows:
        verts, rays = regions[id(n)]
        if not verts and not rays:
            out.append("(1) %s#%d: empty region" % (n.owner, n.index))
            continue
        if verts:
            crossing = _boundary_edges(g, verts)
            if set(crossing) != {n.curve}:
                out.append("(1) %s#%d: boundary is %s, not the one curve %s"
                           % (n.owner, n.index, sorted(crossing), n.curve))
        handles = _handle_edges_inside(g, verts)
        if n.genus and not handles:
            out.append("(1) %s#%d: genus member without a handle"
                       % (n.owner, n.index))
        if not n.genus and handles:
            out.append("(1) %s#%d: planar member contains handles"
                       % (n.owner, n.index))

    for n in rows:
        inside = _ends_inside(g, regions[id(n)], views)
        top = [v for v in inside
               if node_rank(v.node) == n.rank and v.genus == n.genus]
        if len(top) != 1 or top[0].tag != n.owner:
            out.append("(2a) %s#%d: points of its rank inside are %s"
                       % (n.owner, n.index, sorted(v.tag for v in top)))

    by_pair: Dict[Tuple[str, str], List[Neighbourhood]] = {}
    for n in rows:
        by_pair.setdefault((n.owner, n.partner), []).append(n)
    for (x, y), group in sorted(by_pair.items()):
        for nx in group:
            for ny in by_pair.get((y, x), []):
                if not _disjoint(regions[id(nx)], regions[id(ny)]):
                    out.append("(2b) %s/%s: the two sides overlap" % (x, y))

    by_owner: Dict[str, List[Neighbourhood]] = {}
    for n in rows:
        by_owner.setdefault(n.owner, []).append(n)
    for x, group in sorted(by_owner.items()):
        group.sort(key=lambda n: n.index)
        for i in range(1, len(group)):
            if not _contains(regions[id(group[i - 1])], regions[id(group[i])]):
                out.append("(2d) %s: member #%d does not contain #%d"
                           % (x, group[i - 1].index, group[i].index))

    for n in rows:
        for m in rows:
            if n.rank < m.rank:
                a, b = regions[id(n)], regions[id(m)]
                if not (_disjoint(a, b) or _contains(b, a)):
                    out.append("(3a) %s#%d vs %s#%d: neither nested nor disjoint"
                               % (n.owner, n.index, m.owner, m.index))

    for n in rows:
        for m in rows:
            if m.owner == n.owner:
                continue  # same-owner nesting is (2d)'s business
            if _contains(regions[id(m)], regions[id(n)]) and not n.rank < m.rank:
                out.append("(3b) %s#%d sits inside %s#%d of rank %s"
                           % (n.owner, n.index, m.owner, m.index, m.rank))

    for n in rows:
        if "--" not in n.curve:
            continue
        lv = ls.levels.get(n.curve)
        if lv is None:
            out.append("(4) %s#%d: curve %s carries no level"
                       % (n.owner, n.index, n.curve))
            continue
        lv = lv[0] if isinstance(lv, tuple) else lv
        for v in sorted(regions[id(n)][0]):
            incident = [ls.levels[c] for c in _incident_curves(g, v)
                        if c in ls.levels]
            if not incident:
                continue
            lo = min(c[0] if isinstance(c, tuple) else c for c in incident)
            if lo < lv:
                out.append("(4) %s#%d: region dips to level %d below its "
                           "curve's level %d" % (n.owner, n.index, lo, lv))
                break

    for n in rows:
        if not n.genus:
            continue
        view = views.get(n.owner)
        if view is not None and view.kind in ("chain", "limit") \
                and not view.period_has_genus:
            out.append("(5a) %s: handles do not recur along the spine" % n.owner)
        family = sorted((m for m in by_owner[n.owner] if m.genus),
                        key=lambda m: m.index)
        deeper = [m for m in family if m.index > n.index]
        if not deeper:
            continue
        chain = view is not None and view.kind == "chain"
        ok = False
        for m in deeper:
            if not _contains(regions[id(n)], regions[id(m)]):
                continue
            diff = regions[id(n)][0] - regions[id(m)][0]
            handles = _handle_edges_inside(g, diff)
            if chain:
                if len(diff) == 2 and len(handles) == 1:
                    ok = True
                    break
            elif handles:
                ok = True
                break
        if not ok:
            out.append("(5b) %s#%d: no deeper member one handle block in"
                       % (n.owner, n.index))
    return out


# ---------------------------------------------------------------------------
# building the neighbourhood system of a realized end space
# ---------------------------------------------------------------------------


def _walk_plans(plan) -> List[_SpinePlan]:
    """Spine plans reachable from a plan, re-deriving hanging branches
    with their emitted prefixes (period branches up to the second copy)."""
    if not isinstance(plan, _SpinePlan):
        return []
    out = [plan]
    n_entries, _ = _spine_shape(plan)
    j = 0
    while True:
        if n_entries is not None and j >= n_entries:
            break
        if n_entries is None and j >= len(plan.pre) + 2 * len(plan.per):
            break
        spec, copy = _entry_at(plan, j)
        t, k = _host_of(plan, j)
        slot = Slot(plan.prefix + "s:%d" % t, k)
        if isinstance(spec, _SubSpec):
            node = _copy_node(spec.node, copy)
            out.extend(_walk_plans(_plan_of(node, "%s/" % slot, True,
                                            flavor=spec.flavor)))
        j += 1
    return out


def _plan_for_prefix(plan, prefix: str) -> Optional[_SpinePlan]:
    for p in _walk_plans(plan):
        if p.prefix == prefix:
            return p
    return None


def _cut_rows(scheme: PantsScheme, g: TruncatedGraph, view: EndView,
              count: int) -> List[Tuple[str, str]]:
    """(curve, inside anchor) cuts for a shrinking neighbourhood family
    of one end, outermost first.  Ray and cusp ends reuse their puncture
    region; chains cut after every handle block; limits cut at the start
    of every period copy, past all the prefix entries."""
    if view.kind in ("ray", "cusp"):
        return [(view.slot, "")] * count
    prefix = view.prefix or ""
    positions = _spine_positions(g, prefix)
    if not positions:
        return []
    top = positions[-1]
    if view.kind == "chain":
        starts = list(range(1, top + 1))
    else:
        plan = _plan_for_prefix(scheme.meta.get("plan"), prefix)
        if plan is None:
            starts = list(range(1, top + 1))
        else:
            base = 0 if (plan.first_slot_taken or plan.boundary_root) else -1
            period = max(len(plan.per), 1)
            starts = []
            c = 1
            while True:
                t = len(plan.pre) + (c - 1) * period + base
                if t > top:
                    break
                if t >= 1:
                    starts.append(t)
                c += 1
    rows = []
    for t in starts[:count]:
        curve = edge_id(Slot(prefix + "s:%d" % (t - 1), 1),
                        Slot(prefix + "s:%d" % t, 0))
        rows.append((curve, prefix + "s:%d" % t))
    return rows


def _pair_witness(x: EndView, y: EndView, cut_x: Tuple[str, str],
                  cut_y: Tuple[str, str]) -> REWitness:
    if x.kind in ("ray", "cusp"):
        return REWitness(x.tag, y.tag, cut_x[0], cut_y[0], "", "", ())
    px, py = x.prefix or "", y.prefix or ""
    tx = int(cut_x[1][len(px) + 2:])
    ty = int(cut_y[1][len(py) + 2:])
    return REWitness(x.tag, y.tag, cut_x[0], cut_y[0], cut_x[1], cut_y[1],
                     (("shift", px, py, ty - tx),))


def build_re_system(ends: Union[ClosedSetEncoding, SetNode],
                    rank_bound: Union[int, OrdinalNotation],
                    depth: int = 6):
    """Realize a countable end-space encoding and equip its equivalent
    end pairs with a neighbourhood system and exchange witnesses.
    Returns (scheme, system, witnesses).  Ends marked as repetition
    copies stand in for their family and get no members of their own;
    ends without an equivalent partner need no neighbourhoods at all.
    Raises RankOverflow when the rank reaches the stated bound and
    PerfectKernel when the end space is uncountable."""
    if isinstance(ends, SetNode):
        ends = ClosedSetEncoding(ends)
    enc = _ensure_tags(ends)
    rank = cb_rank(enc)
    bound = _as_ordinal(rank_bound)
    if not rank.nu < bound:
        raise RankOverflow("end space rank %s reaches the bound %s"
                           % (rank.nu, bound))
    scheme = pants_for_pure(enc, depth)
    g = scheme.truncate(depth)
    views = visible_ends(scheme, depth)

    classes: Dict[object, List[EndView]] = {}
    for view in views.values():
        if view.kind == "tree-ray" or "@" in view.tag:
            continue
        classes.setdefault(view.local_key(), []).append(view)

    rows: List[Neighbourhood] = []
    witnesses: List[REWitness] = []
    for key in sorted(classes, key=str):
        members = sorted(classes[key], key=lambda v: v.tag)
        if len(members) < 2:
            continue
        rank_c = node_rank(members[0].node)
        genus_c = members[0].genus
        cuts: Dict[str, List[Tuple[str, str]]] = {}
        for x in members:
            partners = [y.tag for y in members if y.tag != x.tag]
            want = len(partners)
            if genus_c:
                want = max(want, min(depth - 1, want + 4))
            family = _cut_rows(scheme, g, x, want)
            cuts[x.tag] = family
            for i, (curve, inside) in enumerate(family):
                partner = partners[min(i, len(partners) - 1)]
                rows.append(Neighbourhood(x.tag, partner, i, curve, inside,
                                          genus_c, rank_c))
        for x in members:
            for y in members:
                if x.tag >= y.tag or not cuts[x.tag] or not cuts[y.tag]:
                    continue
                witnesses.append(_pair_witness(x, y, cuts[x.tag][0],
                                               cuts[y.tag][0]))
                witnesses.append(_pair_witness(y, x, cuts[y.tag][0],
                                               cuts[x.tag][0]))
    scheme.meta["witnesses"] = tuple(witnesses)
    return scheme, NormalSystem(tuple(rows)), tuple(witnesses)
