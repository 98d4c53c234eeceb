"""Graphs of spaces, raw graphs of cyclic groups, and their invariants."""
from __future__ import annotations

from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .core import (Graph, commensurable_cycles, cycle_root, least_rotation, permutation_cover,
                   rev, reverse_cycle, validate_gwf, verify_covering)
from .local_types import canonical_colours, refine_local_types


class InconsistentClassDensity(ValueError):
    pass


@dataclass(frozen=True)
class Cylinder:
    id: str
    kind: str = "circle"   # or "torus"
    transverse_rank: int = 1


@dataclass(frozen=True)
class Attachment:
    id: str
    rigid: str
    fin: str
    cylinder: str
    sign: int = 1   # orientation the positive fibre induces on the fin


@dataclass
class GraphOfSpaces:
    rigid: dict       # name -> GraphWithFins
    cylinders: dict   # name -> Cylinder
    edges: tuple      # Attachment records

    def __post_init__(self):
        self.edges = tuple(sorted(self.edges, key=lambda a: a.id))

    def edge(self, eid):
        for a in self.edges:
            if a.id == eid:
                return a
        raise KeyError(eid)

    def link(self, v):
        return [a for a in self.edges if a.cylinder == v]

    def attachment_of(self, u, fid):
        for a in self.edges:
            if a.rigid == u and a.fin == fid:
                return a
        return None

    @property
    def volume(self):
        return sum(x.num_vertices for x in self.rigid.values())

    def euler_characteristic(self):
        # circles, tori and annuli all have vanishing Euler characteristic
        return sum(x.graph.euler_characteristic() for x in self.rigid.values())

    def gamma(self):
        vs = sorted(self.rigid) + sorted(self.cylinders)
        return Graph(vs, [(a.id, a.rigid, a.cylinder) for a in self.edges])


@dataclass
class GosReport:
    ok: bool
    violations: list

    def as_dict(self):
        return {"ok": self.ok, "violations": list(self.violations)}


def validate_gos(g, connected=True):
    bad = []
    names = set(g.rigid) & set(g.cylinders)
    if names:
        bad.append(f"names used for both rigid and cylindrical vertices: {sorted(names)}")
    for u, x in sorted(g.rigid.items()):
        try:
            validate_gwf(x)
        except ValueError as exc:
            bad.append(f"rigid vertex {u}: {exc}")
    for v, c in sorted(g.cylinders.items()):
        if c.kind not in ("circle", "torus"):
            bad.append(f"cylinder {v}: unknown kind {c.kind!r}")
        if c.kind == "torus" and c.transverse_rank != 1:
            bad.append(f"cylinder {v}: transverse rank {c.transverse_rank} is not supported")
        if not g.link(v):
            bad.append(f"cylinder {v} has no incident edges")
    ids = [a.id for a in g.edges]
    if len(set(ids)) != len(ids):
        bad.append("duplicate edge identifiers")
    used = Counter()
    for a in g.edges:
        if a.rigid not in g.rigid:
            bad.append(f"edge {a.id}: unknown rigid vertex {a.rigid}")
            continue
        if a.cylinder not in g.cylinders:
            bad.append(f"edge {a.id}: unknown cylinder {a.cylinder}")
        if a.fin not in g.rigid[a.rigid].fin_by_id:
            bad.append(f"edge {a.id}: unknown fin {a.fin}")
            continue
        if a.sign not in (1, -1):
            bad.append(f"edge {a.id}: sign must be +1 or -1")
        used[(a.rigid, a.fin)] += 1
    for u, x in sorted(g.rigid.items()):
        for f in x.fins:
            n = used[(u, f.id)]
            if n == 0:
                bad.append(f"unmatched fin {f.id} at {u}")
            elif n > 1:
                bad.append(f"fin {f.id} at {u} carries {n} edges")
        fs = list(x.fins)
        for i in range(len(fs)):
            for j in range(i):
                if commensurable_cycles(fs[i].cycle, fs[j].cycle):
                    bad.append(f"fins {fs[j].id} and {fs[i].id} at {u} are commensurable")
    if connected and not bad and not g.gamma().is_connected():
        bad.append("underlying graph is not connected")
    return GosReport(not bad, bad)


# --- colourings and invariants ----------------------------------------------

def gos_colouring(g, use_colours=False):
    """Canonical colours keyed ``(rigid vertex, fin id, sign)``."""
    names = sorted(g.rigid)
    lab = canonical_colours([g.rigid[u] for u in names], use_colours)
    return {(names[i], f, s): c for (i, f, s), c in lab.items()}


def own_colouring(g):
    return {(u, f, s): c for u, x in g.rigid.items() for (f, s), c in x.colours.items()}


def edge_colour(g, colouring, a, orientation=1):
    return colouring[(a.rigid, a.fin, orientation * a.sign)]


def cylinder_numbers(g, colouring=None):
    """``(cylinder, orientation, colour) -> count``, zero counts omitted."""
    colouring = gos_colouring(g) if colouring is None else colouring
    out = Counter()
    for v in g.cylinders:
        for o in (1, -1):
            for a in g.link(v):
                out[(v, o, edge_colour(g, colouring, a, o))] += 1
    return dict(out)


def flip_identity_failures(g, colouring=None, reverse=None):
    """Triples where t_c(v,O) differs from t_{rev c}(v,-O); ``reverse`` maps a colour to its reversal."""
    colouring = gos_colouring(g) if colouring is None else colouring
    if reverse is None:
        reverse = {}
        for (u, f, s), c in colouring.items():
            reverse[c] = colouring[(u, f, -s)]
    t = cylinder_numbers(g, colouring)
    bad = []
    for (v, o, c), n in sorted(t.items(), key=repr):
        if t.get((v, -o, reverse[c]), 0) != n:
            bad.append((v, o, c))
    return bad


def stretch_ratio(g, v):
    lengths = {a.id: g.rigid[a.rigid].fin(a.fin).length for a in g.link(v)}
    d = 0
    for n in lengths.values():
        d = gcd(d, n)
    return {e: n // d for e, n in sorted(lengths.items())}


def stretch_tuple(g, v):
    return tuple(stretch_ratio(g, v).values())


def rigid_classes(g, colouring=None):
    """Rigid vertices grouped by universal cover (with colours), as sorted lists."""
    names = sorted(g.rigid)
    xs = [g.rigid[u] for u in names]
    if colouring is not None:
        xs = [x.recoloured({(f, s): colouring[(u, f, s)] for f, s in x.oriented_fins()})
              for u, x in zip(names, xs)]
    table = refine_local_types(xs, use_colours=True)
    key = {u: frozenset(table.vertex_labels(i)) for i, u in enumerate(names)}
    groups = defaultdict(list)
    for u in names:
        groups[key[u]].append(u)
    return sorted(groups.values())


@dataclass
class DensityReport:
    volume: int
    class_density: dict     # representative rigid vertex -> Fraction
    colour_density: dict    # colour -> Fraction
    identity: dict          # colour -> (lhs, rhs)
    classes: list

    @property
    def ok(self):
        return all(a == b for a, b in self.identity.values()) and sum(self.class_density.values()) == 1

    def as_dict(self):
        return {
            "volume": self.volume,
            "classes": self.classes,
            "class_density": {k: str(v) for k, v in sorted(self.class_density.items())},
            "colour_density": {k: str(v) for k, v in sorted(self.colour_density.items())},
            "identity": {k: {"lhs": str(a), "rhs": str(b), "ok": a == b}
                         for k, (a, b) in sorted(self.identity.items())},
            "ok": self.ok,
        }


def densities(g, colouring=None):
    colouring = gos_colouring(g) if colouring is None else colouring
    vol = g.volume
    classes = rigid_classes(g, colouring)
    rho_u, rho_c, cls_of_colour = {}, {}, {}
    for cls in classes:
        rho_u[cls[0]] = Fraction(sum(g.rigid[u].num_vertices for u in cls), vol)
        per = []
        for u in cls:
            x = g.rigid[u]
            tot = Counter()
            for f in x.fins:
                for s in (1, -1):
                    tot[colouring[(u, f.id, s)]] += f.length
            per.append({c: Fraction(n, x.num_vertices) for c, n in tot.items()})
        for c in sorted(set().union(*per)):
            vals = {p.get(c, Fraction(0)) for p in per}
            if len(vals) != 1:
                raise InconsistentClassDensity(f"colour {c} has densities {sorted(vals)} within one class")
            if c in cls_of_colour:
                raise InconsistentClassDensity(f"colour {c} occurs in two rigid classes")
            rho_c[c] = vals.pop()
            cls_of_colour[c] = cls[0]
    lhs = Counter()
    for a in g.edges:
        for s in (1, -1):
            lhs[colouring[(a.rigid, a.fin, s)]] += g.rigid[a.rigid].fin(a.fin).length
    ident = {c: (Fraction(lhs[c]), rho_c[c] * rho_u[cls_of_colour[c]] * vol) for c in rho_c}
    return DensityReport(vol, rho_u, rho_c, ident, classes)


# --- covers of graphs of spaces ---------------------------------------------

@dataclass
class GosCover:
    source: GraphOfSpaces
    target: GraphOfSpaces
    rigid_map: dict      # source rigid -> (target rigid, CoveringMap)
    cylinder_map: dict   # source cylinder -> (target cylinder, orientation sign, degree)
    edge_map: dict       # source edge -> target edge


def verify_gos_cover(cov):
    """Checks that ``cov`` is a covering of graphs of spaces; returns ``(degree or None, violations)``."""
    S, T = cov.source, cov.target
    bad = []
    for v in S.rigid:
        if v not in cov.rigid_map:
            bad.append(f"rigid vertex {v} has no image")
    for v in S.cylinders:
        if v not in cov.cylinder_map:
            bad.append(f"cylinder {v} has no image")
    for a in S.edges:
        if a.id not in cov.edge_map:
            bad.append(f"edge {a.id} has no image")
    if bad:
        return None, bad
    for u, (t, cm) in sorted(cov.rigid_map.items()):
        if cm.source is not S.rigid[u] and cm.source != S.rigid[u]:
            bad.append(f"rigid vertex {u}: map source differs from the vertex space")
        if t not in T.rigid or (cm.target is not T.rigid[t] and cm.target != T.rigid[t]):
            bad.append(f"rigid vertex {u}: map target differs from {t}")
            continue
        rep = verify_covering(cm)
        for msg in rep.violations:
            bad.append(f"rigid vertex {u}: {msg}")
    for v, (t, o, d) in sorted(cov.cylinder_map.items()):
        if t not in T.cylinders or S.cylinders[v].kind != T.cylinders[t].kind:
            bad.append(f"cylinder {v}: kind or image mismatch")
        if o not in (1, -1) or d < 1:
            bad.append(f"cylinder {v}: malformed orientation or degree")
    if bad:
        return None, bad
    for a in S.edges:
        b = T.edge(cov.edge_map[a.id])
        t, cm = cov.rigid_map[a.rigid]
        vt, o, d = cov.cylinder_map[a.cylinder]
        if t != b.rigid or vt != b.cylinder:
            bad.append(f"edge {a.id}: endpoints do not map to those of {b.id}")
            continue
        img = cm.fin_map[a.fin]
        if img.fin != b.fin:
            bad.append(f"edge {a.id}: fin maps to {img.fin}, not the attached fin {b.fin}")
        if img.degree != d:
            bad.append(f"edge {a.id}: fin degree {img.degree} differs from cylinder degree {d}")
        if img.direction * a.sign != b.sign * o:
            bad.append(f"orientation mismatch on edge space {a.id}")
    for v in S.cylinders:
        vt = cov.cylinder_map[v][0]
        imgs = sorted(cov.edge_map[a.id] for a in S.link(v))
        if imgs != sorted(a.id for a in T.link(vt)):
            bad.append(f"cylinder {v}: link does not map bijectively onto the link of {vt}")
    deg = defaultdict(int)
    for u, (t, cm) in cov.rigid_map.items():
        deg[("rigid", t)] += cm.source.num_vertices // max(cm.target.num_vertices, 1)
    for v, (t, o, d) in cov.cylinder_map.items():
        deg[("cylinder", t)] += d
    for t in T.rigid:
        deg.setdefault(("rigid", t), 0)
    for t in T.cylinders:
        deg.setdefault(("cylinder", t), 0)
    degs = set(deg.values())
    degree = None
    if len(degs) != 1 or 0 in degs:
        bad.append(f"global degree inconsistent: {sorted(degs)}")
    else:
        degree = degs.pop()
        if S.euler_characteristic() != degree * T.euler_characteristic():
            bad.append("Euler characteristic is not multiplicative")
    return degree, bad


# --- raw graphs of cyclic groups --------------------------------------------

@dataclass(frozen=True)
class RawEdge:
    id: str
    source: str
    target: str
    source_loop: tuple   # closed dart path in the source vertex graph
    target_loop: tuple


@dataclass
class RawGog:
    vertices: dict   # name -> Graph
    edges: tuple

    def __post_init__(self):
        self.edges = tuple(self.edges)

    def gamma(self):
        return Graph(sorted(self.vertices), [(e.id, e.source, e.target) for e in self.edges])


def reduce_loop(graph, loop):
    """Free and cyclic reduction of a closed dart path; raises on trivial loops."""
    loop = tuple(loop)
    if not loop:
        raise ValueError("empty attaching loop")
    for i, d in enumerate(loop):
        if not graph.has_dart(d):
            raise ValueError(f"unknown dart {d!r}")
        if graph.terminus(d) != graph.origin(loop[(i + 1) % len(loop)]):
            raise ValueError("attaching loop is not closed")
    out = []
    for d in loop:
        if out and out[-1] == rev(d):
            out.pop()
        else:
            out.append(d)
    i, j = 0, len(out) - 1
    while i < j and out[i] == rev(out[j]):
        i += 1
        j -= 1
    core = tuple(out[i:j + 1])
    if not core:
        raise ValueError("attaching loop is null-homotopic")
    return core


def validate_raw(raw):
    vs = set(raw.vertices)
    for e in raw.edges:
        if e.source not in vs or e.target not in vs:
            raise ValueError(f"edge {e.id} has an unknown endpoint")
        reduce_loop(raw.vertices[e.source], e.source_loop)
        reduce_loop(raw.vertices[e.target], e.target_loop)
    return raw


def _node(vertex, graph, loop):
    core = reduce_loop(graph, loop)
    root, k = cycle_root(core)
    a, b = least_rotation(root), least_rotation(reverse_cycle(root))
    return (vertex, min(a, b)), k


CLASSIFICATION = {
    True: "subgroup separable; virtually special; hyperbolic relative to virtually Z x F_n subgroups",
    False: "not subgroup separable; not virtually special; not hyperbolic relative to virtually Z x F_n subgroups",
}


@dataclass
class BalanceVerdict:
    balanced: bool
    classification: str
    witness: list = field(default_factory=list)   # [(edge id, +1/-1)]
    modulus: Fraction = Fraction(1)

    def as_dict(self):
        return {"verdict": "Balanced" if self.balanced else "Unbalanced",
                "classification": self.classification,
                "witness": [[e, s] for e, s in self.witness],
                "modulus": str(self.modulus)}


def balanced(raw):
    validate_raw(raw)
    adj = defaultdict(list)
    nodes = set()
    for e in raw.edges:
        a, ka = _node(e.source, raw.vertices[e.source], e.source_loop)
        b, kb = _node(e.target, raw.vertices[e.target], e.target_loop)
        r = Fraction(ka, kb)
        nodes |= {a, b}
        adj[a].append((e.id, 1, b, r))
        adj[b].append((e.id, -1, a, 1 / r))
    pot, parent = {}, {}
    for start in sorted(nodes):
        if start in pot:
            continue
        pot[start] = Fraction(1)
        parent[start] = None
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for eid, s, y, r in adj[x]:
                if y not in pot:
                    pot[y] = pot[x] * r
                    parent[y] = (eid, s, x)
                    queue.append(y)
                elif pot[y] != pot[x] * r:
                    hol = pot[x] * r / pot[y]
                    loop = _tree_path(parent, x) + [(eid, s)] + _reverse_path(_tree_path(parent, y))
                    loop = _cancel(loop)
                    if hol < 1:
                        loop, hol = _reverse_path(loop), 1 / hol
                    return BalanceVerdict(False, CLASSIFICATION[False], loop, hol)
    return BalanceVerdict(True, CLASSIFICATION[True])


def _tree_path(parent, x):
    out = []
    while parent[x] is not None:
        eid, s, p = parent[x]
        out.append((eid, s))
        x = p
    return list(reversed(out))


def _reverse_path(path):
    return [(e, -s) for e, s in reversed(path)]


def _cancel(path):
    out = []
    for step in path:
        if out and out[-1] == (step[0], -step[1]):
            out.pop()
        else:
            out.append(step)
    while len(out) > 1 and out[0] == (out[-1][0], -out[-1][1]):
        out = out[1:-1]
    return out


def random_raw_cover(raw, rng, max_degree=6, tries=200):
    """A connected finite cover of ``raw``, found by random search; ``raw`` itself on failure."""
    for _ in range(tries):
        d = rng.randint(2, max_degree)
        covers = {}
        for v, graph in sorted(raw.vertices.items()):
            perms = {}
            for e, _, _ in graph.edges:
                p = list(range(d))
                rng.shuffle(p)
                perms[e] = p
            covers[v] = permutation_cover(graph, perms, d).cover
        lifts = {}
        ok = True
        for e in raw.edges:
            src = _loop_lifts(raw.vertices[e.source], covers[e.source], e.source_loop, d)
            tgt = _loop_lifts(raw.vertices[e.target], covers[e.target], e.target_loop, d)
            ks, kt = len(e.source_loop), len(e.target_loop)
            if sorted(len(p) // ks for p in src) != sorted(len(p) // kt for p in tgt):
                ok = False
                break
            by_len = defaultdict(list)
            for p in tgt:
                by_len[len(p) // kt].append(p)
            for k in sorted(by_len):
                rng.shuffle(by_len[k])
            lifts[e.id] = [(p, by_len[len(p) // ks].pop()) for p in src]
        if not ok:
            continue
        cover = _assemble_raw_cover(raw, covers, lifts)
        comp = cover.gamma().components()[0]
        return restrict_raw(cover, comp)
    return raw


def _loop_lifts(graph, cover_graph, loop, d):
    lift = {}
    for dd in cover_graph.darts:
        e, i = dd[:-1].rsplit(".", 1)
        lift[(cover_graph.origin(dd), e + dd[-1])] = dd
    start_v = graph.origin(loop[0])
    seen, out = set(), []
    for i in range(d):
        s = f"{start_v}.{i}"
        if s in seen:
            continue
        path, x = [], s
        while True:
            seen.add(x)
            for dd in loop:
                step = lift[(x, dd)]
                path.append(step)
                x = cover_graph.terminus(step)
            if x == s:
                break
        out.append(tuple(path))
    return out


def _assemble_raw_cover(raw, covers, lifts):
    vertices, where = {}, {}
    for v in sorted(raw.vertices):
        g = covers[v]
        for k, comp in enumerate(g.components()):
            name = f"{v}.{k}"
            keep = set(comp)
            vertices[name] = Graph([x for x in g.vertices if x in keep],
                                   [e for e in g.edges if e[1] in keep])
            for x in comp:
                where[(v, x)] = name
    edges = []
    for e in raw.edges:
        for k, (p, q) in enumerate(lifts[e.id]):
            a = where[(e.source, covers[e.source].origin(p[0]))]
            b = where[(e.target, covers[e.target].origin(q[0]))]
            edges.append(RawEdge(f"{e.id}.{k}", a, b, p, q))
    return RawGog(vertices, edges)


def restrict_raw(raw, comp):
    keep = set(comp)
    return RawGog({v: g for v, g in raw.vertices.items() if v in keep},
                  [e for e in raw.edges if e.source in keep])


def component_cover(cov, node=None):
    """Restriction of ``cov`` to the component of ``node`` (default: first rigid vertex) of its source."""
    S = cov.source
    node = node or sorted(S.rigid)[0]
    comp = next(c for c in S.gamma().components() if node in c)
    keep = set(comp)
    sub = GraphOfSpaces({u: x for u, x in S.rigid.items() if u in keep},
                        {v: c for v, c in S.cylinders.items() if v in keep},
                        [a for a in S.edges if a.rigid in keep])
    return GosCover(sub, cov.target,
                    {u: m for u, m in cov.rigid_map.items() if u in keep},
                    {v: m for v, m in cov.cylinder_map.items() if v in keep},
                    {a.id: cov.edge_map[a.id] for a in sub.edges})
