"""Graphs, graphs with coloured oriented fins, and coverings between them.

A dart is a string ``"<edge>+"`` or ``"<edge>-"``; the edge ``e`` runs from
``from`` to ``to`` along ``e+``.  A fin is a closed immersed dart cycle.  An
oriented fin is a pair ``(fin_id, sign)`` with ``sign`` in ``{+1, -1}``.

All quantities are exact: integers or :class:`fractions.Fraction`.
"""
from __future__ import annotations

from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd


class FinGraphError(ValueError):
    pass


class BacktrackingLoop(FinGraphError):
    pass


class DanglingDart(FinGraphError):
    pass


class InvalidGraphCover(FinGraphError):
    pass


def dart(edge, sign=1):
    return edge + ("+" if sign > 0 else "-")


def dart_edge(d):
    return d[:-1]


def dart_sign(d):
    return 1 if d[-1] == "+" else -1


def rev(d):
    return d[:-1] + ("-" if d[-1] == "+" else "+")


def reverse_cycle(cycle):
    return tuple(rev(d) for d in reversed(cycle))


def least_rotation(seq):
    seq = tuple(seq)
    if not seq:
        return seq
    return min(seq[i:] + seq[:i] for i in range(len(seq)))


def cycle_period(seq):
    n = len(seq)
    for p in range(1, n + 1):
        if n % p == 0 and all(seq[i] == seq[i % p] for i in range(n)):
            return p
    return n


def cycle_root(cycle):
    """Primitive root and exponent of a cyclic sequence."""
    p = cycle_period(cycle)
    return tuple(cycle[:p]), len(cycle) // p


def commensurable_cycles(c1, c2):
    r1 = least_rotation(cycle_root(c1)[0])
    r2 = cycle_root(c2)[0]
    return r1 == least_rotation(r2) or r1 == least_rotation(reverse_cycle(r2))


@dataclass(frozen=True)
class Graph:
    vertices: tuple
    edges: tuple  # of (id, from, to)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))

    @cached_property
    def _origin(self):
        out = {}
        for e, a, b in self.edges:
            out[e + "+"] = a
            out[e + "-"] = b
        return out

    @cached_property
    def darts(self):
        return tuple(d for e, _, _ in self.edges for d in (e + "+", e + "-"))

    @cached_property
    def _star(self):
        star = {v: [] for v in self.vertices}
        for d in self.darts:
            star[self._origin[d]].append(d)
        return {v: tuple(ds) for v, ds in star.items()}

    def has_dart(self, d):
        return d in self._origin

    def origin(self, d):
        return self._origin[d]

    def terminus(self, d):
        return self._origin[rev(d)]

    def star(self, v):
        return self._star[v]

    def valence(self, v):
        return len(self._star[v])

    def euler_characteristic(self):
        return len(self.vertices) - len(self.edges)

    def problems(self):
        out = []
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            out.append("duplicate vertex identifiers")
        ids = [e for e, _, _ in self.edges]
        if len(set(ids)) != len(ids):
            out.append("duplicate edge identifiers")
        for e, a, b in self.edges:
            if a not in vs or b not in vs:
                out.append(f"edge {e} has an endpoint outside the vertex set")
        return out

    def components(self):
        adj = defaultdict(set)
        for _, a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        seen, comps = set(), []
        for v in self.vertices:
            if v in seen:
                continue
            comp, queue = [], deque([v])
            seen.add(v)
            while queue:
                x = queue.popleft()
                comp.append(x)
                for y in sorted(adj[x]):
                    if y not in seen:
                        seen.add(y)
                        queue.append(y)
            comps.append(comp)
        return comps

    def is_connected(self):
        return len(self.vertices) > 0 and len(self.components()) == 1


@dataclass(frozen=True)
class Fin:
    id: str
    cycle: tuple

    def __post_init__(self):
        object.__setattr__(self, "cycle", tuple(self.cycle))

    @property
    def length(self):
        return len(self.cycle)


@dataclass
class GraphWithFins:
    graph: Graph
    fins: tuple
    colours: dict = field(default_factory=dict)  # (fin_id, sign) -> str

    def __post_init__(self):
        self.fins = tuple(self.fins)

    @cached_property
    def fin_by_id(self):
        return {f.id: f for f in self.fins}

    def fin(self, fid):
        return self.fin_by_id[fid]

    def oriented_fins(self):
        return [(f.id, s) for f in self.fins for s in (1, -1)]

    def colour(self, fid, sign):
        return self.colours[(fid, sign)]

    @property
    def num_vertices(self):
        return len(self.graph.vertices)

    def colour_set(self):
        return set(self.colours.values())

    def recoloured(self, colours):
        return GraphWithFins(self.graph, self.fins, dict(colours))


def fresh_colours(fins):
    return {(f.id, s): f"{f.id}:{'+' if s > 0 else '-'}" for f in fins for s in (1, -1)}


def check_loop(graph, cycle):
    if not cycle:
        raise BacktrackingLoop("empty loop")
    for d in cycle:
        if not graph.has_dart(d):
            raise DanglingDart(f"unknown dart {d!r}")
    n = len(cycle)
    for i in range(n):
        a, b = cycle[i], cycle[(i + 1) % n]
        if graph.terminus(a) != graph.origin(b):
            raise DanglingDart(f"darts {a} and {b} do not compose")
        if rev(a) == b:
            raise BacktrackingLoop(f"loop backtracks at {a} {b}")


def validate_gwf(gwf, connected=False):
    """Raise on structural problems; returns ``gwf`` for chaining."""
    probs = gwf.graph.problems()
    if probs:
        raise FinGraphError("; ".join(probs))
    ids = [f.id for f in gwf.fins]
    if len(set(ids)) != len(ids):
        raise FinGraphError("duplicate fin identifiers")
    for f in gwf.fins:
        check_loop(gwf.graph, f.cycle)
    for of in gwf.oriented_fins():
        if of not in gwf.colours:
            raise FinGraphError(f"no colour for oriented fin {of}")
    extra = set(gwf.colours) - set(gwf.oriented_fins())
    if extra:
        raise FinGraphError(f"colours given for unknown fins {sorted(extra)}")
    if connected and not gwf.graph.is_connected():
        raise FinGraphError("graph is not connected")
    return gwf


def build_graph_with_fins(graph, loops, colouring=None, fin_ids=None):
    loops = [tuple(c) for c in loops]
    if fin_ids is None:
        fin_ids = [f"f{i}" for i in range(len(loops))]
    for c in loops:
        check_loop(graph, c)
    fins = tuple(Fin(i, c) for i, c in zip(fin_ids, loops))
    colours = fresh_colours(fins) if colouring is None else dict(colouring)
    return validate_gwf(GraphWithFins(graph, fins, colours))


def density(gwf, colour):
    total = sum(gwf.fin(fid).length for (fid, s), c in gwf.colours.items() if c == colour)
    return Fraction(total, gwf.num_vertices)


def densities(gwf):
    return {c: density(gwf, c) for c in sorted(gwf.colour_set())}


# --- coverings -------------------------------------------------------------

@dataclass(frozen=True)
class FinImage:
    fin: str
    offset: int
    degree: int
    direction: int


@dataclass
class CoveringMap:
    source: GraphWithFins
    target: GraphWithFins
    vertex_map: dict
    dart_map: dict
    fin_map: dict  # source fin id -> FinImage

    def image_dart_at(self, fid, i):
        img = self.fin_map[fid]
        cyc = self.target.fin(img.fin).cycle
        p = (img.offset + img.direction * i) % len(cyc)
        return cyc[p] if img.direction > 0 else rev(cyc[p])

    def oriented_image(self, fid, sign):
        img = self.fin_map[fid]
        return img.fin, sign * img.direction

    @property
    def degree(self):
        t = self.target.num_vertices
        return self.source.num_vertices // t if t else 0


@dataclass
class CoverReport:
    ok: bool
    degree: int | None
    violations: list

    def as_dict(self):
        return {"ok": self.ok, "degree": self.degree, "violations": list(self.violations)}


def verify_covering(cm):
    src, tgt = cm.source, cm.target
    G, H = src.graph, tgt.graph
    bad = []

    for v in G.vertices:
        if cm.vertex_map.get(v) not in set(H.vertices):
            bad.append(f"vertex map: {v} has no valid image")
    for d in G.darts:
        if not H.has_dart(cm.dart_map.get(d, "?")):
            bad.append(f"dart map: {d} has no valid image")
    if bad:
        return CoverReport(False, None, bad)

    for d in G.darts:
        img = cm.dart_map[d]
        if cm.dart_map[rev(d)] != rev(img):
            bad.append(f"reversal: dart {d}")
        if cm.vertex_map[G.origin(d)] != H.origin(img):
            bad.append(f"origin: dart {d}")

    for v in G.vertices:
        imgs = [cm.dart_map[d] for d in G.star(v)]
        if sorted(imgs) != sorted(H.star(cm.vertex_map[v])):
            bad.append(f"local bijection at vertex {v}")

    counts = Counter(cm.vertex_map[v] for v in G.vertices)
    degrees = {counts.get(w, 0) for w in H.vertices}
    degree = None
    if len(degrees) != 1 or 0 in degrees:
        bad.append(f"degree consistency: preimage sizes {sorted(degrees)}")
    else:
        degree = degrees.pop()
        if len(G.vertices) != degree * len(H.vertices):
            bad.append("degree consistency: vertex count")

    tgt_fins = tgt.fin_by_id
    fin_ok = True
    for f in src.fins:
        img = cm.fin_map.get(f.id)
        if img is None or img.fin not in tgt_fins:
            bad.append(f"fin map: fin {f.id} has no valid image")
            fin_ok = False
            continue
        L = tgt_fins[img.fin].length
        if img.direction not in (1, -1) or not 0 <= img.offset < L:
            bad.append(f"fin map: fin {f.id} has malformed image data")
            fin_ok = False
            continue
        if f.length != img.degree * L:
            bad.append(f"fin compatibility: length of {f.id} is not degree x target length")
            fin_ok = False
            continue
        for i, d in enumerate(f.cycle):
            if cm.dart_map[d] != cm.image_dart_at(f.id, i):
                bad.append(f"fin compatibility: fin {f.id} position {i}")
                fin_ok = False
                break
        for s in (1, -1):
            if src.colours.get((f.id, s)) != tgt.colours.get(cm.oriented_image(f.id, s)):
                bad.append(f"colour preservation: oriented fin ({f.id}, {s:+d})")

    if fin_ok and degree is not None:
        # every lift of every target fin occurs exactly once
        hits = defaultdict(list)
        for f in src.fins:
            img = cm.fin_map[f.id]
            L = tgt_fins[img.fin].length
            for i, d in enumerate(f.cycle):
                p = (img.offset + img.direction * i) % L
                hits[(img.fin, p)].append(d if img.direction > 0 else rev(d))
        pre = defaultdict(list)
        for d in G.darts:
            pre[cm.dart_map[d]].append(d)
        for t in tgt.fins:
            for p, td in enumerate(t.cycle):
                if sorted(hits[(t.id, p)]) != sorted(pre[td]):
                    bad.append(f"fin completeness: lifts of fin {t.id} at position {p}")
    return CoverReport(not bad, degree, bad)


def compose(first, second):
    """``first: A -> B`` followed by ``second: B -> C``."""
    fin_map = {}
    for fid, a in first.fin_map.items():
        b = second.fin_map[a.fin]
        L = second.target.fin(b.fin).length
        fin_map[fid] = FinImage(b.fin, (b.offset + b.direction * a.offset) % L,
                                a.degree * b.degree, a.direction * b.direction)
    return CoveringMap(
        first.source, second.target,
        {v: second.vertex_map[w] for v, w in first.vertex_map.items()},
        {d: second.dart_map[e] for d, e in first.dart_map.items()},
        fin_map,
    )


def identity_cover(gwf):
    return CoveringMap(
        gwf, gwf,
        {v: v for v in gwf.graph.vertices},
        {d: d for d in gwf.graph.darts},
        {f.id: FinImage(f.id, 0, 1, 1) for f in gwf.fins},
    )


# --- plain graph covers and induced fin structures --------------------------

@dataclass
class GraphCover:
    cover: Graph
    base: Graph
    vertex_map: dict
    dart_map: dict


def check_graph_cover(gc):
    G, H = gc.cover, gc.base
    try:
        for d in G.darts:
            img = gc.dart_map[d]
            if not H.has_dart(img) or gc.dart_map[rev(d)] != rev(img):
                raise InvalidGraphCover(f"dart {d} breaks reversal")
            if gc.vertex_map[G.origin(d)] != H.origin(img):
                raise InvalidGraphCover(f"dart {d} breaks incidence")
        for v in G.vertices:
            if sorted(gc.dart_map[d] for d in G.star(v)) != sorted(H.star(gc.vertex_map[v])):
                raise InvalidGraphCover(f"not a local bijection at {v}")
    except KeyError as exc:
        raise InvalidGraphCover(f"incomplete map: {exc}") from None
    counts = Counter(gc.vertex_map[v] for v in G.vertices)
    if len({counts.get(w, 0) for w in H.vertices}) != 1:
        raise InvalidGraphCover("preimage sizes differ")


def permutation_cover(graph, perms, degree):
    """Cover with vertices ``v.i`` and edges ``e.i`` running to ``(to, perms[e][i])``."""
    vs = [f"{v}.{i}" for v in graph.vertices for i in range(degree)]
    edges, vmap, dmap = [], {}, {}
    for v in graph.vertices:
        for i in range(degree):
            vmap[f"{v}.{i}"] = v
    for e, a, b in graph.edges:
        p = perms.get(e, range(degree))
        for i in range(degree):
            name = f"{e}.{i}"
            edges.append((name, f"{a}.{i}", f"{b}.{p[i]}"))
            dmap[name + "+"] = e + "+"
            dmap[name + "-"] = e + "-"
    return GraphCover(Graph(vs, edges), graph, vmap, dmap)


def induced_cover(gwf, gc):
    check_graph_cover(gc)
    if gc.base != gwf.graph:
        raise InvalidGraphCover("graph cover is over a different base graph")
    G = gc.cover
    lift_at = {}  # (cover vertex, base dart) -> cover dart
    for d in G.darts:
        lift_at[(G.origin(d), gc.dart_map[d])] = d
    pre = defaultdict(list)
    for d in G.darts:
        pre[gc.dart_map[d]].append(d)

    fins, fin_map, colours = [], {}, {}
    for t in gwf.fins:
        L = t.length
        used = set()
        k = 0
        for start in sorted(pre[t.cycle[0]]):
            if start in used:
                continue
            cyc, cur, j = [], start, 0
            while True:
                cyc.append(cur)
                if j % L == 0:
                    used.add(cur)
                j += 1
                nxt = lift_at[(G.terminus(cur), t.cycle[j % L])]
                if j % L == 0 and nxt == start:
                    break
                cur = nxt
            fid = f"{t.id}.{k}"
            k += 1
            fins.append(Fin(fid, cyc))
            fin_map[fid] = FinImage(t.id, 0, len(cyc) // L, 1)
            for s in (1, -1):
                colours[(fid, s)] = gwf.colours[(t.id, s)]
    src = GraphWithFins(G, fins, colours)
    return src, CoveringMap(src, gwf, dict(gc.vertex_map), dict(gc.dart_map), fin_map)


def subdivide(gwf, k):
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        return gwf
    G = gwf.graph
    vs = list(G.vertices)
    edges, path = [], {}
    for e, a, b in G.edges:
        names = [f"{e}/{j}" for j in range(k)]
        inner = [f"{e}/{j}" for j in range(1, k)]
        vs.extend(inner)
        stops = [a] + inner + [b]
        for j, n in enumerate(names):
            edges.append((n, stops[j], stops[j + 1]))
        path[e + "+"] = [n + "+" for n in names]
        path[e + "-"] = [n + "-" for n in reversed(names)]
    fins = [Fin(f.id, [x for d in f.cycle for x in path[d]]) for f in gwf.fins]
    return GraphWithFins(Graph(vs, edges), fins, dict(gwf.colours))


def component_of(gwf, vertex):
    """The connected component of ``vertex`` with the fins it carries."""
    for comp in gwf.graph.components():
        if vertex in comp:
            keep = set(comp)
            break
    else:
        raise KeyError(vertex)
    G = gwf.graph
    g = Graph([v for v in G.vertices if v in keep],
              [e for e in G.edges if e[1] in keep])
    fins = [f for f in gwf.fins if G.origin(f.cycle[0]) in keep]
    ids = {f.id for f in fins}
    return GraphWithFins(g, fins, {k: c for k, c in gwf.colours.items() if k[0] in ids})


def restrict_cover(cm, sub):
    """Restrict a covering map to a union of components ``sub`` of its source."""
    vs = set(sub.graph.vertices)
    return CoveringMap(
        sub, cm.target,
        {v: w for v, w in cm.vertex_map.items() if v in vs},
        {d: e for d, e in cm.dart_map.items() if sub.graph.has_dart(d)},
        {f.id: cm.fin_map[f.id] for f in sub.fins},
    )


def rose(letters, vertex="v"):
    return Graph([vertex], [(x, vertex, vertex) for x in letters])


def cycle_graph(n, prefix="c"):
    vs = [f"{prefix}{i}" for i in range(n)]
    return Graph(vs, [(f"{prefix}e{i}", vs[i], vs[(i + 1) % n]) for i in range(n)])


def lcm(a, b):
    return a * b // gcd(a, b)
