"""Random inputs for property tests and acceptance runs."""
from __future__ import annotations

from dataclasses import replace

from .core import (CoveringMap, FinImage, Fin, Graph, GraphWithFins, commensurable_cycles, cycle_root,
                   component_of, fresh_colours, induced_cover, permutation_cover, rev, restrict_cover)
from .gos import Attachment, Cylinder, GraphOfSpaces


def random_graph(rng, max_vertices=12, extra=3):
    """Connected graph with first Betti number at least one."""
    n = rng.randint(1, max_vertices)
    vs = [f"v{i}" for i in range(n)]
    edges = []
    for i in range(1, n):
        a, b = vs[rng.randrange(i)], vs[i]
        if rng.random() < 0.5:
            a, b = b, a
        edges.append((a, b))
    for _ in range(rng.randint(1, extra)):
        edges.append((rng.choice(vs), rng.choice(vs)))
    return Graph(vs, [(f"e{i}", a, b) for i, (a, b) in enumerate(edges)])


def random_loop(graph, rng, max_len=None, tries=200):
    """A closed non-backtracking dart cycle, or None."""
    max_len = max_len or 4 * len(graph.darts)
    darts = list(graph.darts)
    for _ in range(tries):
        first = rng.choice(darts)
        walk = [first]
        while len(walk) < max_len:
            here = graph.terminus(walk[-1])
            if here == graph.origin(first) and walk[-1] != rev(first) and rng.random() < 0.3:
                return tuple(walk)
            opts = [d for d in graph.star(here) if d != rev(walk[-1])]
            if not opts:
                break
            walk.append(rng.choice(opts))
    return None


def random_gwf(rng, max_vertices=12, max_fins=6, palette=0, distinct=False):
    """Random connected graph with 1..max_fins fins.

    ``palette`` > 0 draws colours from that many labels instead of fresh ones.
    ``distinct`` keeps the fins primitive and pairwise non-commensurable.
    """
    while True:
        g = random_graph(rng, max_vertices)
        fins = []
        for _ in range(rng.randint(1, max_fins)):
            c = random_loop(g, rng)
            if c is None:
                continue
            if distinct and (cycle_root(c)[1] > 1
                             or any(commensurable_cycles(c, f.cycle) for f in fins)):
                continue
            fins.append(Fin(f"f{len(fins)}", c))
        if fins:
            break
    if palette:
        colours = {(f.id, s): f"c{rng.randrange(palette)}" for f in fins for s in (1, -1)}
    else:
        colours = fresh_colours(fins)
    return GraphWithFins(g, fins, colours)


def random_cover(gwf, rng, max_degree=4, degree=None):
    """Random permutation cover with the induced fins; may be disconnected."""
    d = degree or rng.randint(1, max_degree)
    perms = {}
    for e, _, _ in gwf.graph.edges:
        p = list(range(d))
        rng.shuffle(p)
        perms[e] = p
    return induced_cover(gwf, permutation_cover(gwf.graph, perms, d))


def connected_cover(gwf, rng, max_degree=4):
    """The component of a random cover containing a random vertex, with its covering map."""
    src, cm = random_cover(gwf, rng, max_degree)
    sub = component_of(src, rng.choice(src.graph.vertices))
    return sub, restrict_cover(cm, sub)


def relabel(gwf, rng, cm=None):
    """Isomorphic copy with shuffled names and rotated fins; also transports ``cm``'s source side."""
    G = gwf.graph
    vnames = {v: f"p{i}" for i, v in enumerate(rng.sample(list(G.vertices), len(G.vertices)))}
    order = rng.sample(range(len(G.edges)), len(G.edges))
    edges, dname = [], {}
    for k, j in enumerate(order):
        e, a, b = G.edges[j]
        name = f"g{k}"
        if rng.random() < 0.5:
            edges.append((name, vnames[a], vnames[b]))
            dname[e + "+"], dname[e + "-"] = name + "+", name + "-"
        else:
            edges.append((name, vnames[b], vnames[a]))
            dname[e + "+"], dname[e + "-"] = name + "-", name + "+"
    fins, fname, shift = [], {}, {}
    for k, f in enumerate(rng.sample(list(gwf.fins), len(gwf.fins))):
        r = rng.randrange(f.length)
        cyc = [dname[d] for d in f.cycle[r:] + f.cycle[:r]]
        fname[f.id], shift[f.id] = f"s{k}", r
        fins.append(Fin(f"s{k}", cyc))
    out = GraphWithFins(Graph([vnames[v] for v in G.vertices], edges), fins,
                        {(fname[f], s): c for (f, s), c in gwf.colours.items()})
    if cm is None:
        return out
    fin_map = {}
    for f in gwf.fins:
        img = cm.fin_map[f.id]
        L = cm.target.fin(img.fin).length
        fin_map[fname[f.id]] = FinImage(img.fin, (img.offset + img.direction * shift[f.id]) % L,
                                        img.degree, img.direction)
    moved = CoveringMap(out, cm.target, {vnames[v]: w for v, w in cm.vertex_map.items()},
                        {dname[d]: x for d, x in cm.dart_map.items()}, fin_map)
    return out, moved


MUTATIONS = ("vertex", "reversal", "fin_degree", "fin_missing", "colour", "dart_range")


def mutate(cm, rng, kind=None):
    """A copy of ``cm`` broken in one way that no covering map survives."""
    kind = kind or rng.choice(MUTATIONS)
    src, tgt = cm.source, cm.target
    vmap, dmap, fmap = dict(cm.vertex_map), dict(cm.dart_map), dict(cm.fin_map)
    if kind == "vertex":
        vmap[rng.choice(src.graph.vertices)] = "__nowhere__"
    elif kind == "reversal":
        d = rng.choice(src.graph.darts)
        others = [x for x in tgt.graph.darts if x != dmap[d]]
        if others:
            dmap[d] = rng.choice(others)   # the reversal of d keeps its old image
        else:
            dmap[d] = "__nowhere__"
    elif kind == "dart_range":
        dmap[rng.choice(src.graph.darts)] = "__nowhere__"
    elif kind == "fin_degree":
        f = rng.choice(src.fins)
        fmap[f.id] = replace(fmap[f.id], degree=fmap[f.id].degree + 1)
    elif kind == "fin_missing":
        del fmap[rng.choice(src.fins).id]
    elif kind == "colour":
        f = rng.choice(src.fins)
        colours = dict(src.colours)
        colours[(f.id, 1)] = "__fresh__"
        src = GraphWithFins(src.graph, src.fins, colours)
    else:
        raise ValueError(kind)
    return CoveringMap(src, tgt, vmap, dmap, fmap), kind


def random_gos(rng, max_rigid=3, max_cylinders=3, max_vertices=6, max_fins=3):
    """Random connected graph of spaces; cylinders may be tori."""
    while True:
        rigid = {f"u{i}": random_gwf(rng, max_vertices, max_fins, distinct=True)
                 for i in range(rng.randint(1, max_rigid))}
        cyl = {f"z{j}": Cylinder(f"z{j}", rng.choice(["circle", "circle", "torus"]))
               for j in range(rng.randint(1, max_cylinders))}
        names = sorted(cyl)
        edges = []
        for u in sorted(rigid):
            for f in rigid[u].fins:
                edges.append(Attachment(f"a{len(edges)}", u, f.id, rng.choice(names), rng.choice([1, -1])))
        g = GraphOfSpaces(rigid, cyl, edges)
        used = {a.cylinder for a in edges}
        g = GraphOfSpaces(rigid, {v: c for v, c in cyl.items() if v in used}, edges)
        if g.gamma().is_connected():
            return g
