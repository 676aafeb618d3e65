"""Half-edge graphs of pants decompositions for infinite-type surfaces.

A vertex is a pair of pants with three numbered slots.  A pairing of two
slots is a decomposition curve; an unpaired slot is either free (it
carries a cusp or a boundary circle, optionally decorated with an
infinite annulus ray) or frontier (cut off by the finite truncation).
Infinite families are described by schemes: a scheme produces, for every
depth d, a finite truncated graph whose identifiers are stable as d
grows, so any decision made from the symbolic description is consistent
across depths.

Two condensed records keep huge but repetitive regions symbolic:

* a `run` stands for `count` consecutive spine pants, each hanging one
  cusp or boundary, strung between two explicit slots.  Runs are opaque:
  they contribute to Euler characteristic and connectivity but cannot be
  cut or levelled.
* a `ray` decoration on a free slot stands for an infinite stack of
  annuli (an isolated planar end).  Rays contribute no Euler
  characteristic; their annulus curves are levelled arithmetically from
  a start level.

Text format ``pantsgraph v1``: one record per line, records sorted by
id within each record type::

    pantsgraph v1
    vertex z:0
    edge z:0.1--z:1.0 z:0.1 z:1.0 level=1 length=1.0000000000000000e+00
    free z:0.2 kind=cusp
    free f:0.0 kind=boundary ray=2
    frontier z:2.1
    run r:3 p:3.1 p:4.0 count=100 hang=cusp
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Optional, Set, Tuple


class EmbeddingFailure(ValueError):
    pass


class MalformedGraph(ValueError):
    pass


# ---------------------------------------------------------------------------
# slots, edges, runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Slot:
    vertex: str
    index: int

    def __str__(self):
        return "%s.%d" % (self.vertex, self.index)

    @staticmethod
    def parse(text: str) -> "Slot":
        v, _, i = text.rpartition(".")
        if not v or not i.isdigit():
            raise MalformedGraph("bad slot %r" % text)
        return Slot(v, int(i))


def edge_id(a: Slot, b: Slot) -> str:
    x, y = sorted((str(a), str(b)))
    return "%s--%s" % (x, y)


@dataclass(frozen=True)
class Run:
    """Condensed block of `count` spine pants between two explicit slots,
    each condensed pants hanging one cusp or boundary."""

    id: str
    slot_a: Slot
    slot_b: Slot
    count: int
    hang: str = "cusp"

    def __post_init__(self):
        if self.count < 1:
            raise MalformedGraph("run needs a positive count")
        if self.hang not in ("cusp", "boundary"):
            raise MalformedGraph("bad hang kind %r" % self.hang)


FREE_KINDS = ("cusp", "boundary")


@dataclass
class TruncatedGraph:
    vertices: Set[str] = field(default_factory=set)
    pairing: Dict[Slot, Slot] = field(default_factory=dict)
    free: Dict[Slot, str] = field(default_factory=dict)
    frontier: Set[Slot] = field(default_factory=set)
    runs: Dict[str, Run] = field(default_factory=dict)
    rays: Set[Slot] = field(default_factory=set)
    edge_class: Dict[str, Tuple[str, Optional[int]]] = field(default_factory=dict)
    bare_rays: Tuple[str, ...] = ()  # vertex-free components, one id each

    # -- construction helpers

    def add_vertex(self, vid: str):
        if vid in self.vertices:
            raise MalformedGraph("duplicate vertex %r" % vid)
        self.vertices.add(vid)

    def pair(self, a: Slot, b: Slot, family: str = "edge",
             index: Optional[int] = None):
        for s in (a, b):
            if s.vertex not in self.vertices:
                raise MalformedGraph("unknown vertex in slot %s" % s)
            self.free.pop(s, None)
            self.frontier.discard(s)
        if a == b:
            raise MalformedGraph("slot cannot pair with itself")
        if a in self.pairing or b in self.pairing:
            raise MalformedGraph("slot already paired: %s--%s" % (a, b))
        self.pairing[a] = b
        self.pairing[b] = a
        self.edge_class[edge_id(a, b)] = (family, index)

    def set_free(self, s: Slot, kind: str = "cusp"):
        if kind not in FREE_KINDS:
            raise MalformedGraph("bad free kind %r" % kind)
        if s in self.pairing:
            raise MalformedGraph("slot %s already paired" % s)
        self.free[s] = kind

    def set_frontier(self, s: Slot):
        if s in self.pairing or s in self.free:
            raise MalformedGraph("slot %s already used" % s)
        self.frontier.add(s)

    def add_run(self, run: Run):
        if run.id in self.runs:
            raise MalformedGraph("duplicate run %r" % run.id)
        for s in (run.slot_a, run.slot_b):
            if s in self.pairing or s in self.free or s in self.frontier:
                raise MalformedGraph("run endpoint %s already used" % s)
        self.runs[run.id] = run

    def add_ray(self, s: Slot):
        if self.free.get(s) != "boundary":
            raise MalformedGraph("rays anchor at free boundary slots, not %s" % s)
        self.rays.add(s)

    # -- views

    def edges(self) -> Dict[str, Tuple[Slot, Slot]]:
        out = {}
        for a, b in self.pairing.items():
            if (str(a), str(b)) <= (str(b), str(a)):
                out[edge_id(a, b)] = (a, b)
        return out

    def run_slots(self) -> Set[Slot]:
        out = set()
        for r in self.runs.values():
            out.add(r.slot_a)
            out.add(r.slot_b)
        return out

    def slot_role(self, s: Slot) -> str:
        if s in self.pairing:
            return "paired"
        if s in self.free:
            return "free"
        if s in self.frontier:
            return "frontier"
        if s in self.run_slots():
            return "run"
        return "missing"

    def euler_characteristic(self) -> int:
        return -(len(self.vertices) + sum(r.count for r in self.runs.values()))

    def first_betti(self) -> int:
        e = len(self.edges())
        v = len(self.vertices)
        return e - v + len(self.components()) if v else 0

    def components(self) -> List[Set[str]]:
        parent = {v: v for v in self.vertices}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            parent[find(x)] = find(y)

        for a, b in self.pairing.items():
            union(a.vertex, b.vertex)
        for r in self.runs.values():
            union(r.slot_a.vertex, r.slot_b.vertex)
        groups: Dict[str, Set[str]] = {}
        for v in self.vertices:
            groups.setdefault(find(v), set()).add(v)
        return sorted(groups.values(), key=lambda g: min(g))


def validate_graph(g: TruncatedGraph):
    """Every vertex trivalent, pairing a fixed-point-free involution,
    every slot in exactly one role."""
    run_slots = g.run_slots()
    for a, b in g.pairing.items():
        if g.pairing.get(b) != a or a == b:
            raise MalformedGraph("pairing is not an involution at %s" % a)
    seen = set()
    for group in (set(g.pairing), set(g.free), g.frontier, run_slots):
        dup = seen & group
        if dup:
            raise MalformedGraph("slots in two roles: %s"
                                 % ", ".join(sorted(map(str, dup))))
        seen |= group
    for s in seen:
        if s.vertex not in g.vertices:
            raise MalformedGraph("slot %s of unknown vertex" % s)
        if not 0 <= s.index <= 2:
            raise MalformedGraph("slot index out of range: %s" % s)
    for v in g.vertices:
        for i in range(3):
            if Slot(v, i) not in seen:
                raise MalformedGraph("unused slot %s.%d" % (v, i))
    for s in g.rays:
        if g.free.get(s) != "boundary":
            raise MalformedGraph("ray at non-boundary slot %s" % s)


# ---------------------------------------------------------------------------
# schemes
# ---------------------------------------------------------------------------

class PantsScheme:
    """Lazy family of compatible truncations.  `build(d)` must be
    deterministic; identifiers never change between depths."""

    def __init__(self, build: Callable[[int], TruncatedGraph], name: str = "",
                 root_slot: Optional[Slot] = None, meta: Optional[dict] = None):
        self._build = build
        self.name = name
        self.root_slot = root_slot
        self.meta = dict(meta or {})
        self._cache: Dict[int, TruncatedGraph] = {}

    def truncate(self, d: int) -> TruncatedGraph:
        if d < 0:
            raise ValueError("depth must be >= 0")
        if d not in self._cache:
            g = self._build(d)
            validate_graph(g)
            self._cache[d] = g
        return self._cache[d]


def check_scheme_compatibility(scheme: PantsScheme, depths: Iterable[int]):
    """truncate(d) must be an id-preserving subgraph of truncate(d+1):
    vertices, edges and free slots persist; frontier slots may resolve
    into anything."""
    for d in depths:
        g, h = scheme.truncate(d), scheme.truncate(d + 1)
        if not g.vertices <= h.vertices:
            raise MalformedGraph("vertices vanish between depths %d and %d" % (d, d + 1))
        ge, he = g.edges(), h.edges()
        for eid, slots in ge.items():
            if he.get(eid) != slots:
                raise MalformedGraph("edge %s vanishes at depth %d" % (eid, d + 1))
            if g.edge_class.get(eid) != h.edge_class.get(eid):
                raise MalformedGraph("edge %s changes class" % eid)
        for s, kind in g.free.items():
            if h.free.get(s) != kind:
                raise MalformedGraph("free slot %s changes at depth %d" % (s, d + 1))
        if not g.rays <= h.rays:
            raise MalformedGraph("ray vanishes between depths")
        for rid, run in g.runs.items():
            if h.runs.get(rid) != run:
                raise MalformedGraph("run %s changes between depths" % rid)
        if not set(g.bare_rays) <= set(h.bare_rays):
            raise MalformedGraph("bare ray vanishes between depths")


# -- builders ---------------------------------------------------------------

def z_graph(hang: str = "cusp") -> PantsScheme:
    """Two-ended spine indexed by the integers; slot 0 looks left, slot 1
    looks right, slot 2 hangs a cusp or boundary."""

    def build(d: int) -> TruncatedGraph:
        g = TruncatedGraph()
        for i in range(-d, d + 1):
            g.add_vertex("z:%d" % i)
        for i in range(-d, d):
            g.pair(Slot("z:%d" % i, 1), Slot("z:%d" % (i + 1), 0), "spine", i)
        for i in range(-d, d + 1):
            g.set_free(Slot("z:%d" % i, 2), hang)
        g.set_frontier(Slot("z:%d" % -d, 0))
        g.set_frontier(Slot("z:%d" % d, 1))
        return g

    return PantsScheme(build, name="z_graph", meta={"hang": hang})


def flute(hang: str = "cusp") -> PantsScheme:
    """One-ended spine indexed by the naturals, with a boundary circle at
    the start; the root slot is f:0.0."""

    def build(d: int) -> TruncatedGraph:
        g = TruncatedGraph()
        for i in range(d + 1):
            g.add_vertex("f:%d" % i)
        for i in range(d):
            g.pair(Slot("f:%d" % i, 1), Slot("f:%d" % (i + 1), 0), "spine", i)
        g.set_free(Slot("f:0", 0), "boundary")
        for i in range(d + 1):
            g.set_free(Slot("f:%d" % i, 2), hang)
        g.set_frontier(Slot("f:%d" % d, 1))
        return g

    return PantsScheme(build, name="flute", root_slot=Slot("f:0", 0),
                       meta={"hang": hang})


def trivalent_tree() -> PantsScheme:
    """Rooted binary tree of pants; the root keeps a boundary circle at
    slot 0, slots 1 and 2 grow L and R subtrees."""

    def build(d: int) -> TruncatedGraph:
        g = TruncatedGraph()
        paths = [""]
        for k in range(d):
            paths += [p + c for p in paths if len(p) == k for c in "LR"]
        for p in sorted(paths, key=len):
            g.add_vertex("t:r%s" % p)
        for p in paths:
            if len(p) < d:
                g.pair(Slot("t:r%s" % p, 1), Slot("t:r%sL" % p, 0), "tree", len(p))
                g.pair(Slot("t:r%s" % p, 2), Slot("t:r%sR" % p, 0), "tree", len(p))
        g.set_free(Slot("t:r", 0), "boundary")
        for p in paths:
            if len(p) == d:
                g.set_frontier(Slot("t:r%s" % p, 1))
                g.set_frontier(Slot("t:r%s" % p, 2))
        return g

    return PantsScheme(build, name="trivalent_tree", root_slot=Slot("t:r", 0))


def loop_graph(a: int, b: int, prefix: str = "") -> PantsScheme:
    """Chain of a pants ending in a cycle of b; the glue slot is the
    first vertex's slot 0.  (0,1) and (1,0) are both the standard
    handle: one vertex with its last two slots paired.  (0,0) is the
    empty piece."""
    if a < 0 or b < 0:
        raise EmbeddingFailure("loop graph parameters must be >= 0")
    if a == 0 and b == 0:
        raise EmbeddingFailure("empty loop graph has no truncations")

    def build(d: int) -> TruncatedGraph:
        g = TruncatedGraph()
        chain = ["%sv:%d" % (prefix, i) for i in range(1, a + 1)]
        cycle = ["%sl:%d" % (prefix, j) for j in range(1, b + 1)]
        for vid in chain + cycle:
            g.add_vertex(vid)
        for i in range(len(chain) - 1):
            g.pair(Slot(chain[i], 1), Slot(chain[i + 1], 0), "chain", i + 1)
            g.set_free(Slot(chain[i], 2), "cusp")
        if chain and not cycle:
            # degenerate cycle of length zero: self-paired handle
            g.pair(Slot(chain[-1], 1), Slot(chain[-1], 2), "handle", a)
        elif chain and cycle:
            g.pair(Slot(chain[-1], 1), Slot(cycle[0], 0), "loop", 0)
            if b == 1:
                g.pair(Slot(chain[-1], 2), Slot(cycle[0], 1), "loop", 1)
                g.set_free(Slot(cycle[0], 2), "cusp")
            else:
                for j in range(b - 1):
                    g.pair(Slot(cycle[j], 1), Slot(cycle[j + 1], 0), "loop", j + 1)
                    if j:
                        g.set_free(Slot(cycle[j], 2), "cusp")
                g.pair(Slot(chain[-1], 2), Slot(cycle[-1], 1), "loop", b)
                g.set_free(Slot(cycle[0], 2), "cusp")
                g.set_free(Slot(cycle[-1], 2), "cusp")
        elif cycle:
            if b == 1:
                g.pair(Slot(cycle[0], 1), Slot(cycle[0], 2), "handle", 0)
            else:
                for j in range(b - 1):
                    g.pair(Slot(cycle[j], 1), Slot(cycle[j + 1], 0), "loop", j + 1)
                g.pair(Slot(cycle[-1], 1), Slot(cycle[0], 2), "loop", 0)
                for j in range(1, b - 1):
                    g.set_free(Slot(cycle[j], 2), "cusp")
                g.set_free(Slot(cycle[-1], 2), "cusp")
        root = Slot(chain[0] if chain else cycle[0], 0)
        g.set_free(root, "boundary")
        return g

    root_vertex = "%sv:1" % prefix if a else "%sl:1" % prefix
    return PantsScheme(build, name="loop_graph", root_slot=Slot(root_vertex, 0),
                       meta={"a": a, "b": b})


# -- slot selectors -----------------------------------------------------------

def all_free_slots(kind: Optional[str] = None) -> Callable[[TruncatedGraph], List[Slot]]:
    def select(g: TruncatedGraph) -> List[Slot]:
        return sorted(s for s, k in g.free.items() if kind is None or k == kind)

    return select


def slots_named(names: Iterable[str]) -> Callable[[TruncatedGraph], List[Slot]]:
    wanted = [Slot.parse(n) for n in names]

    def select(g: TruncatedGraph) -> List[Slot]:
        return [s for s in wanted if s in g.free]

    return select


def hanging_slots(vertex_pred: Callable[[str], bool]) -> Callable[[TruncatedGraph], List[Slot]]:
    def select(g: TruncatedGraph) -> List[Slot]:
        return sorted(s for s in g.free if vertex_pred(s.vertex))

    return select


# -- composition --------------------------------------------------------------

def _prefix_graph(piece: TruncatedGraph, prefix: str) -> TruncatedGraph:
    def p(s: Slot) -> Slot:
        return Slot(prefix + s.vertex, s.index)

    out = TruncatedGraph()
    out.vertices = {prefix + v for v in piece.vertices}
    out.pairing = {p(a): p(b) for a, b in piece.pairing.items()}
    out.free = {p(s): k for s, k in piece.free.items()}
    out.frontier = {p(s) for s in piece.frontier}
    out.runs = {prefix + rid: replace(r, id=prefix + rid, slot_a=p(r.slot_a),
                                      slot_b=p(r.slot_b))
                for rid, r in piece.runs.items()}
    out.rays = {p(s) for s in piece.rays}
    out.edge_class = {edge_id(p(a), p(b)): piece.edge_class[edge_id(a, b)]
                      for a, b in piece.pairing.items()}
    out.bare_rays = tuple(prefix + r for r in piece.bare_rays)
    return out


def merge_graphs(base: TruncatedGraph, piece: TruncatedGraph):
    """Disjointly add piece's records into base (ids must not clash)."""
    overlap = base.vertices & piece.vertices
    if overlap:
        raise MalformedGraph("vertex ids clash: %s" % sorted(overlap)[:3])
    base.vertices |= piece.vertices
    base.pairing.update(piece.pairing)
    base.free.update(piece.free)
    base.frontier |= piece.frontier
    base.runs.update(piece.runs)
    base.rays |= piece.rays
    base.edge_class.update(piece.edge_class)
    base.bare_rays = base.bare_rays + piece.bare_rays


def attach(base: PantsScheme,
           selector: Callable[[TruncatedGraph], List[Slot]],
           piece_at: Callable[[Slot], Optional[PantsScheme]],
           glue_family: str = "glue",
           glue_index: Optional[Callable[[Slot], Optional[int]]] = None,
           name: str = "attach") -> PantsScheme:
    """Glue a piece scheme onto every selected free slot of the base.
    The piece for slot s gets its ids prefixed with "<s>/" so they stay
    stable as the truncation grows; for the same reason pieces and glue
    indices are keyed on the slot, never on selection order.  A piece of
    None marks the slot as a cusp; a piece whose truncations are a
    single bare ray decorates the slot with a ray."""

    def build(d: int) -> TruncatedGraph:
        bg = base.truncate(d)
        g = copy_graph(bg)
        for s in selector(bg):
            piece = piece_at(s)
            if piece is None:
                g.free[s] = "cusp"
                continue
            pg = piece.truncate(d)
            if not pg.vertices and len(pg.bare_rays) == 1:
                g.free[s] = "boundary"
                g.rays.add(s)
                continue
            if piece.root_slot is None:
                raise EmbeddingFailure("piece %r has no root slot" % piece.name)
            prefixed = _prefix_graph(pg, "%s/" % s)
            root = Slot("%s/%s" % (s, piece.root_slot.vertex), piece.root_slot.index)
            if prefixed.free.get(root) != "boundary":
                raise EmbeddingFailure("piece root %s is not a free boundary" % root)
            merge_graphs(g, prefixed)
            del g.free[root]
            kind = g.free.pop(s, None)
            if kind is None:
                raise EmbeddingFailure("selected slot %s is not free" % s)
            g.pairing[s] = root
            g.pairing[root] = s
            idx = glue_index(s) if glue_index else None
            g.edge_class[edge_id(s, root)] = (glue_family, idx)
        return g

    return PantsScheme(build, name=name, root_slot=base.root_slot,
                       meta=dict(base.meta))


def bare_ray_scheme(ray_id: str = "o") -> PantsScheme:
    """Vertex-free scheme: a boundary circle followed by an infinite
    stack of annuli (a once-punctured disk without its puncture)."""

    def build(d: int) -> TruncatedGraph:
        g = TruncatedGraph()
        g.bare_rays = (ray_id,)
        return g

    return PantsScheme(build, name="bare_ray")


# ---------------------------------------------------------------------------
# surgery
# ---------------------------------------------------------------------------

def copy_graph(g: TruncatedGraph) -> TruncatedGraph:
    out = TruncatedGraph()
    out.vertices = set(g.vertices)
    out.pairing = dict(g.pairing)
    out.free = dict(g.free)
    out.frontier = set(g.frontier)
    out.runs = dict(g.runs)
    out.rays = set(g.rays)
    out.edge_class = dict(g.edge_class)
    out.bare_rays = g.bare_rays
    return out


def cut_along(g: TruncatedGraph, curve_ids: Iterable[str]) -> TruncatedGraph:
    """Cut the surface along decomposition curves: each cut edge's two
    slots become free boundary circles.  Runs cannot be cut."""
    out = copy_graph(g)
    edges = out.edges()
    for cid in curve_ids:
        if cid in out.runs:
            raise EmbeddingFailure("cannot cut inside condensed run %s" % cid)
        if cid not in edges:
            raise MalformedGraph("no edge %s to cut" % cid)
        a, b = edges[cid]
        del out.pairing[a]
        del out.pairing[b]
        del out.edge_class[cid]
        out.free[a] = "boundary"
        out.free[b] = "boundary"
    return out


def cap_and_splice(g: TruncatedGraph, s: Slot,
                   family: str = "splice") -> TruncatedGraph:
    """Fill the free slot s with a disk.  Its pants becomes an annulus
    and is removed; the two remaining connections merge.  Rays and free
    kinds transfer across the merge."""
    out = copy_graph(g)
    if s not in out.free:
        raise EmbeddingFailure("can only cap a free slot, got %s" % s)
    del out.free[s]
    out.rays.discard(s)
    v = s.vertex
    others = [Slot(v, i) for i in range(3) if Slot(v, i) != s]

    def peer(x: Slot):
        return out.pairing.get(x)

    pa, pb = peer(others[0]), peer(others[1])
    if pa == others[1]:
        # remaining slots pair each other: capping leaves a torus piece
        raise EmbeddingFailure("capping %s would close a handle" % s)
    for o in others:
        if o in out.frontier or o in out.run_slots():
            raise EmbeddingFailure("cannot splice through %s" % o)
    out.vertices.discard(v)
    for o in others:
        p = out.pairing.pop(o, None)
        if p is not None:
            del out.pairing[p]
            del out.edge_class[edge_id(o, p)]
    if pa is not None and pb is not None:
        out.pairing[pa] = pb
        out.pairing[pb] = pa
        out.edge_class[edge_id(pa, pb)] = (family, None)
    elif pa is not None or pb is not None:
        kept = pa if pa is not None else pb
        dropped = others[1] if pa is not None else others[0]
        kind = out.free.pop(dropped, None)
        if kind is None:
            raise EmbeddingFailure("cannot splice %s into %s" % (dropped, kept))
        out.free[kept] = kind
        if dropped in out.rays:
            out.rays.discard(dropped)
            out.rays.add(kept)
    else:
        # both free: the component degenerates to a sphere piece
        raise EmbeddingFailure("capping %s leaves no pants" % s)
    return out


# ---------------------------------------------------------------------------
# level structures
# ---------------------------------------------------------------------------

@dataclass
class LevelStructure:
    levels: Dict[str, object]  # curve id -> int or (int, int)
    roots: Tuple[str, ...]
    ray_starts: Dict[str, int] = field(default_factory=dict)  # anchor slot id -> level

    def at_level(self, n: int) -> List[str]:
        return sorted(c for c, l in self.levels.items() if l == n)

    def max_level(self) -> int:
        ints = [l for l in self.levels.values() if isinstance(l, int)]
        return max(ints) if ints else 0


def _curve_universe(g: TruncatedGraph):
    """Curves that can carry a level: edges and free boundary circles.
    Ray anchors are handled through ray_starts."""
    curves = {}
    for eid, (a, b) in g.edges().items():
        curves[eid] = (a.vertex, b.vertex)
    for s, kind in g.free.items():
        if kind == "boundary" and s not in g.rays:
            curves[str(s)] = (s.vertex,)
    return curves


def assign_levels(g: TruncatedGraph, roots: Optional[Iterable[str]] = None) -> LevelStructure:
    """Breadth-first levels over the curve adjacency graph (curves are
    adjacent when they meet the same pants).  Default roots: the free
    boundary circles; there must be some curve to start from."""
    if g.runs:
        raise EmbeddingFailure("levels on condensed runs are formulaic, not assigned")
    curves = _curve_universe(g)
    if roots is None:
        root_list = sorted(str(s) for s, k in g.free.items()
                           if k == "boundary" and s not in g.rays)
    else:
        root_list = list(roots)
    if not root_list:
        raise EmbeddingFailure("no root curves to level from")
    for r in root_list:
        if r not in curves:
            raise MalformedGraph("root curve %s not in graph" % r)
    by_vertex: Dict[str, List[str]] = {}
    for cid, verts in curves.items():
        for v in verts:
            by_vertex.setdefault(v, []).append(cid)
    levels: Dict[str, object] = {c: 0 for c in root_list}
    frontier_curves = list(root_list)
    n = 0
    while frontier_curves:
        n += 1
        nxt = []
        for cid in frontier_curves:
            for v in curves[cid]:
                for other in by_vertex[v]:
                    if other not in levels:
                        levels[other] = n
                        nxt.append(other)
        frontier_curves = nxt
    ray_starts = {}
    for s in sorted(g.rays, key=str):
        anchor_mates = [c for c in by_vertex.get(s.vertex, []) if c in levels]
        base = min(levels[c] for c in anchor_mates) if anchor_mates else 0
        ray_starts[str(s)] = base + 1
    return LevelStructure(levels=levels, roots=tuple(root_list), ray_starts=ray_starts)


def make_interior(ls: LevelStructure, curve: str, span: Tuple[int, int]):
    """Re-mark a curve as block-interior between two consecutive levels."""
    lo, hi = span
    if hi != lo + 1:
        raise MalformedGraph("interior span must be consecutive, got %r" % (span,))
    if curve not in ls.levels:
        raise MalformedGraph("unknown curve %r" % curve)
    ls.levels[curve] = (lo, hi)


def _components_with_cuts(g: TruncatedGraph, cut: Set[str]):
    """Vertex components after cutting the given edge curves, plus the
    incident curves of each component."""
    parent = {v: v for v in g.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = g.edges()
    for eid, (a, b) in edges.items():
        if eid not in cut:
            parent[find(a.vertex)] = find(b.vertex)
    comps: Dict[str, Set[str]] = {}
    for v in g.vertices:
        comps.setdefault(find(v), set()).add(v)
    return list(comps.values())


def check_levels(g: TruncatedGraph, ls: LevelStructure):
    """Separation invariants of a level structure on one truncation.

    For each usable n >= 1 (all level-n curves materialized away from
    the frontier), cutting along the full level-n curve family leaves
    exactly one component meeting the roots; that inside component
    carries every curve of level < n, no curve of level > n and no
    frontier slot.  Inside vertex sets grow with n.
    """
    curves = _curve_universe(g)
    for c in ls.roots:
        if ls.levels.get(c) != 0:
            raise MalformedGraph("root %s must sit at level 0" % c)
    for cid in curves:
        if cid not in ls.levels:
            raise MalformedGraph("curve %s has no level" % cid)

    def curve_vertices(cid):
        return curves[cid]

    frontier_vertices = {s.vertex for s in g.frontier}
    int_levels = {c: l for c, l in ls.levels.items() if isinstance(l, int)}
    max_n = max(int_levels.values(), default=0)
    prev_inside: Optional[Set[str]] = None
    for n in range(1, max_n + 1):
        level_n = {c for c, l in int_levels.items() if l == n}
        if not level_n:
            raise MalformedGraph("no curves at level %d but deeper levels exist" % n)
        # adjacency to the previous level
        prev_level = {c for c, l in int_levels.items() if l == n - 1}
        prev_verts = {v for c in prev_level for v in curve_vertices(c)}
        for c in sorted(level_n):
            if not set(curve_vertices(c)) & prev_verts:
                raise MalformedGraph("curve %s at level %d touches no level-%d block"
                                     % (c, n, n - 1))
        if {v for c in level_n for v in curve_vertices(c)} & frontier_vertices:
            continue  # this level is not fully materialized; skip its cut
        cut_edges = {c for c in level_n if c in g.edges()}
        comps = _components_with_cuts(g, cut_edges)
        root_comps = []
        for comp in comps:
            if any(set(curve_vertices(r)) & comp for r in ls.roots):
                root_comps.append(comp)
        if len(root_comps) != 1:
            raise MalformedGraph("level %d does not leave a unique inside piece" % n)
        inside = root_comps[0]
        if inside & frontier_vertices:
            raise MalformedGraph("inside piece at level %d reaches the frontier" % n)
        for cid, l in int_levels.items():
            cverts = set(curve_vertices(cid))
            if l < n and not cverts <= inside:
                raise MalformedGraph("curve %s (level %d) escapes the level-%d inside"
                                     % (cid, l, n))
            if l > n and cverts <= inside and cid not in cut_edges:
                raise MalformedGraph("curve %s (level %d) hides inside level %d"
                                     % (cid, l, n))
        if prev_inside is not None and not prev_inside <= inside:
            raise MalformedGraph("inside pieces do not nest at level %d" % n)
        prev_inside = inside


def classify_blocks(g: TruncatedGraph, ls: LevelStructure) -> List[Tuple[str, frozenset]]:
    """Complementary blocks after cutting every integer-level curve.
    Returns (kind, vertex set) pairs; kind is 'pants' or 'torus-block'.
    Raises on anything else."""
    cut = {c for c, l in ls.levels.items() if isinstance(l, int) and c in g.edges()}
    comps = _components_with_cuts(g, cut)
    edges = g.edges()
    out = []
    for comp in comps:
        interior = [eid for eid, (a, b) in edges.items()
                    if eid not in cut and a.vertex in comp]
        if len(comp) == 1 and not interior:
            out.append(("pants", frozenset(comp)))
            continue
        handles = [eid for eid in interior
                   if g.edge_class.get(eid, ("",))[0] in ("handle", "splice-handle")]
        if handles and len(comp) <= 3:
            out.append(("torus-block", frozenset(comp)))
            continue
        raise MalformedGraph("block %s is neither pants nor torus block"
                             % sorted(comp))
    return out


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

GRAPH_HEADER = "pantsgraph v1"


def _fmt_float(x: float) -> str:
    return "%.16e" % x


def serialize_graph(g: TruncatedGraph, ls: Optional[LevelStructure] = None,
                    lengths: Optional[Dict[str, float]] = None,
                    twists: Optional[Dict[str, float]] = None) -> str:
    lines = [GRAPH_HEADER]
    for v in sorted(g.vertices):
        lines.append("vertex %s" % v)
    edges = g.edges()
    for eid in sorted(edges):
        a, b = edges[eid]
        x, y = sorted((a, b), key=str)
        parts = ["edge %s %s %s" % (eid, x, y)]
        fam, idx = g.edge_class.get(eid, ("edge", None))
        parts.append("class=%s%s" % (fam, ":%d" % idx if idx is not None else ""))
        if ls is not None and eid in ls.levels:
            l = ls.levels[eid]
            parts.append("level=%s" % ("(%d,%d)" % l if isinstance(l, tuple) else l))
        if lengths and eid in lengths:
            parts.append("length=%s" % _fmt_float(lengths[eid]))
        if twists and eid in twists:
            parts.append("twist=%s" % _fmt_float(twists[eid]))
        lines.append(" ".join(parts))
    for s in sorted(g.free, key=str):
        parts = ["free %s kind=%s" % (s, g.free[s])]
        sid = str(s)
        if ls is not None and sid in ls.levels:
            parts.append("level=%d" % ls.levels[sid])
        if lengths and sid in lengths:
            parts.append("length=%s" % _fmt_float(lengths[sid]))
        if s in g.rays:
            start = ls.ray_starts.get(sid, 0) if ls is not None else 0
            parts.append("ray=%d" % start)
        lines.append(" ".join(parts))
    for s in sorted(g.frontier, key=str):
        lines.append("frontier %s" % s)
    for rid in sorted(g.runs):
        r = g.runs[rid]
        lines.append("run %s %s %s count=%d hang=%s"
                     % (rid, r.slot_a, r.slot_b, r.count, r.hang))
    for b in sorted(g.bare_rays):
        lines.append("bareray %s" % b)
    return "\n".join(lines) + "\n"


def parse_graph(text: str):
    """Parse the pantsgraph v1 format.  Returns (graph, levels, lengths,
    twists); levels is None when no level annotations appear."""
    lines = [ln.rstrip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != GRAPH_HEADER:
        raise MalformedGraph("missing '%s' header" % GRAPH_HEADER)
    g = TruncatedGraph()
    levels: Dict[str, object] = {}
    ray_starts: Dict[str, int] = {}
    lengths: Dict[str, float] = {}
    twists: Dict[str, float] = {}
    pending_edges = []
    pending_free = []
    pending_frontier = []
    pending_runs = []
    for ln in lines[1:]:
        fields = ln.split()
        kind, args = fields[0], fields[1:]
        if kind == "vertex":
            g.add_vertex(args[0])
        elif kind == "edge":
            pending_edges.append(args)
        elif kind == "free":
            pending_free.append(args)
        elif kind == "frontier":
            pending_frontier.append(args)
        elif kind == "run":
            pending_runs.append(args)
        elif kind == "bareray":
            g.bare_rays = g.bare_rays + (args[0],)
        else:
            raise MalformedGraph("unknown record %r" % kind)
    for args in pending_edges:
        eid, sa, sb = args[0], Slot.parse(args[1]), Slot.parse(args[2])
        fam, idx = "edge", None
        for opt in args[3:]:
            key, _, val = opt.partition("=")
            if key == "class":
                fam, _, i = val.partition(":")
                idx = int(i) if i else None
            elif key == "level":
                if val.startswith("("):
                    lo, hi = val.strip("()").split(",")
                    levels[eid] = (int(lo), int(hi))
                else:
                    levels[eid] = int(val)
            elif key == "length":
                lengths[eid] = float(val)
            elif key == "twist":
                twists[eid] = float(val)
            else:
                raise MalformedGraph("unknown edge option %r" % opt)
        g.pair(sa, sb, fam, idx)
        if edge_id(sa, sb) != eid:
            raise MalformedGraph("edge id %s does not match its slots" % eid)
    for args in pending_free:
        s = Slot.parse(args[0])
        kind = None
        ray = None
        for opt in args[1:]:
            key, _, val = opt.partition("=")
            if key == "kind":
                kind = val
            elif key == "level":
                levels[args[0]] = int(val)
            elif key == "length":
                lengths[args[0]] = float(val)
            elif key == "ray":
                ray = int(val)
            else:
                raise MalformedGraph("unknown free option %r" % opt)
        g.set_free(s, kind or "cusp")
        if ray is not None:
            g.add_ray(s)
            ray_starts[args[0]] = ray
    for args in pending_frontier:
        g.set_frontier(Slot.parse(args[0]))
    for args in pending_runs:
        rid, sa, sb = args[0], Slot.parse(args[1]), Slot.parse(args[2])
        count = hang = None
        for opt in args[3:]:
            key, _, val = opt.partition("=")
            if key == "count":
                count = int(val)
            elif key == "hang":
                hang = val
            else:
                raise MalformedGraph("unknown run option %r" % opt)
        if count is None:
            raise MalformedGraph("run %s has no count" % rid)
        g.add_run(Run(rid, sa, sb, count, hang or "cusp"))
    validate_graph(g)
    ls = None
    if levels or ray_starts:
        roots = tuple(sorted(c for c, l in levels.items() if l == 0))
        ls = LevelStructure(levels=levels, roots=roots, ray_starts=ray_starts)
    return g, ls, lengths, twists
