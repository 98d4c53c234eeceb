"""Small named inputs used by tests, examples and the command line."""
from __future__ import annotations

from .core import (Graph, build_graph_with_fins, cycle_graph, identity_cover,
                   induced_cover, permutation_cover, rose)
from .gos import Attachment, Cylinder, GosCover, GraphOfSpaces, RawEdge, RawGog
from .words import inverse, pattern_to_fins, parse_word, triple_covering_word, word_to_cycle


PETALS = {"y": 2}


def one_colour(fins, colour="c"):
    return {(f, s): colour for f in fins for s in (1, -1)}


def c1(shared=True):
    """A single loop edge carrying one fin; ``shared`` gives both orientations one colour."""
    return build_graph_with_fins(rose("a"), [("a+",)], one_colour(["f0"]) if shared else None)


def c2(shared=True):
    return build_graph_with_fins(cycle_graph(2), [("ce0+", "ce1+")],
                                 one_colour(["f0"]) if shared else None)


def rose_pattern(words=("x", "y", "xy")):
    return pattern_to_fins(2, [parse_word(w) for w in words])


def double_cover(gwf, flips):
    """Degree-2 cover swapping the sheets along the edges in ``flips``."""
    perms = {e: ([1, 0] if e in flips else [0, 1]) for e, _, _ in gwf.graph.edges}
    return induced_cover(gwf, permutation_cover(gwf.graph, perms, 2))


def bs(m, n):
    """Raw data for the Baumslag-Solitar group with ``t g^m t^-1 = g^n``."""
    loop = lambda k: ("g+" if k > 0 else "g-",) * abs(k)
    return RawGog({"v": rose("g")}, [RawEdge("t", "v", "v", loop(m), loop(n))])


def tree_raw(m, n):
    """An amalgam of two cyclic groups; no loops in the underlying graph."""
    return RawGog({"p": rose("g"), "q": rose("h")},
                  [RawEdge("e", "p", "q", ("g+",) * m, ("h+",) * n)])


def word_space(word, letters="xy", colour=None, lengths=None):
    """Rose with a single fin spelled by ``word`` (a letter tuple).

    ``lengths`` subdivides petals, e.g. ``{"y": 2}``; unequal petal lengths let
    local types tell the crossings of the fin apart.
    """
    lengths = lengths or {}
    vs, edges, path = ["v"], [], {}
    for a in letters:
        k = lengths.get(a, 1)
        stops = ["v"] + [f"{a}:{j}" for j in range(1, k)] + ["v"]
        vs.extend(stops[1:-1])
        names = [a] if k == 1 else [f"{a}{j}" for j in range(1, k + 1)]
        for n, p, q in zip(names, stops, stops[1:]):
            edges.append((n, p, q))
        path[a + "+"] = [n + "+" for n in names]
        path[a + "-"] = [n + "-" for n in reversed(names)]
    cyc = [d for x in word_to_cycle(word, letters) for d in path[x]]
    cols = one_colour(["f0"], colour) if colour else None
    return build_graph_with_fins(Graph(vs, edges), [cyc], cols)


def torus_pair(lengths=None):
    """The free-by-cyclic-edge pair from the higher-rank counterexample, in normalized form.

    Both groups become one rigid rose carrying the fin ``w`` glued to one torus.
    The free factor of the torus vertex is not represented.  Pass ``lengths=PETALS``
    for the subdivided rose that the common-cover construction can handle.
    """
    w = triple_covering_word(2)
    out = []
    for _ in range(2):
        x = word_space(w, lengths=lengths)
        out.append(GraphOfSpaces({"u": x}, {"z": Cylinder("z", "torus")},
                                 [Attachment("e", "u", "f0", "z", 1)]))
    return tuple(out)


def amalgam_words():
    w1 = triple_covering_word(2)
    # a second word containing every reduced triple, not a rotation of the first
    w2 = inverse(w1)
    return w1, w2


def amalgam():
    """Two free groups of rank 2 amalgamated along words containing every length-3 subword."""
    w1, w2 = amalgam_words()
    x1 = word_space(w1, "xy", lengths={"y": 2})
    x2 = word_space(w2, "ab", lengths={"b": 2})
    return GraphOfSpaces({"u1": x1, "u2": x2}, {"v": Cylinder("v")},
                         [Attachment("e1", "u1", "f0", "v", 1), Attachment("e2", "u2", "f0", "v", 1)])


def amalgam_double_cover():
    """A hand-built degree-2 cover: two copies of the first side, a connected double cover of the second."""
    base = amalgam()
    x1, x2 = base.rigid["u1"], base.rigid["u2"]
    y2, m2 = double_cover(x2, {"a"})
    rigid = {"u1.0": x1, "u1.1": x1, "u2~": y2}
    cyl = {"v.0": Cylinder("v.0"), "v.1": Cylinder("v.1")}
    edges = [Attachment("e1.0", "u1.0", "f0", "v.0", 1),
             Attachment("e1.1", "u1.1", "f0", "v.1", 1),
             Attachment("e2.0", "u2~", "f0.0", "v.0", 1),
             Attachment("e2.1", "u2~", "f0.1", "v.1", 1)]
    g = GraphOfSpaces(rigid, cyl, edges)
    cover = GosCover(g, base,
                     {"u1.0": ("u1", identity_cover(x1)), "u1.1": ("u1", identity_cover(x1)),
                      "u2~": ("u2", m2)},
                     {"v.0": ("v", 1, 1), "v.1": ("v", 1, 1)},
                     {"e1.0": "e1", "e1.1": "e1", "e2.0": "e2", "e2.1": "e2"})
    return g, cover


def cylinder_count_mismatch():
    """Two inputs whose cylinders see one colour once and twice respectively."""
    w = triple_covering_word(2)
    x = word_space(w, lengths=PETALS)
    a = GraphOfSpaces({"u": x}, {"v": Cylinder("v")}, [Attachment("e", "u", "f0", "v", 1)])
    b = GraphOfSpaces({"u": x, "u'": x}, {"v": Cylinder("v")},
                      [Attachment("e", "u", "f0", "v", 1), Attachment("e'", "u'", "f0", "v", 1)])
    return a, b


def unwrap_space():
    """Fins of lengths 2 and 4 on separate cylinders: the short one must unwrap twice."""
    g = Graph(["v", "m"], [("p", "v", "m"), ("q", "m", "v"), ("r", "v", "v")])
    x = build_graph_with_fins(g, [("p+", "q+"), ("r+", "p+", "q+", "r+")])
    return GraphOfSpaces({"u": x}, {"v": Cylinder("v"), "z": Cylinder("z")},
                         [Attachment("e0", "u", "f0", "v", 1), Attachment("e1", "u", "f1", "z", 1)])


def broken_gwf_dict():
    """A fin that backtracks; parsing it must fail."""
    return {"schema": "gwf.v1", "vertices": ["v"], "edges": [{"id": "a", "from": "v", "to": "v"}],
            "fins": [{"id": "f0", "cycle": ["a+", "a-"]}]}


def export_fixtures(directory):
    """Write the named fixtures as JSON files into ``directory``; returns the file names."""
    import os

    from . import formats as F

    c1_double, _ = double_cover(c1(), {"a"})
    amalgam_cover, _ = amalgam_double_cover()
    ta, tb = torus_pair(PETALS)
    ma, mb = cylinder_count_mismatch()
    docs = {
        "c1.gwf.json": F.gwf_to_dict(c1()),
        "c1_double.gwf.json": F.gwf_to_dict(c1_double),
        "c2.gwf.json": F.gwf_to_dict(c2()),
        "rose_pattern.gwf.json": F.gwf_to_dict(rose_pattern()),
        "broken.gwf.json": broken_gwf_dict(),
        "bs12.rawgog.json": F.rawgog_to_dict(bs(1, 2)),
        "bs22.rawgog.json": F.rawgog_to_dict(bs(2, 2)),
        "amalgam.gos.json": F.gos_to_dict(amalgam()),
        "amalgam_double.gos.json": F.gos_to_dict(amalgam_cover),
        "torus_a.gos.json": F.gos_to_dict(ta),
        "torus_b.gos.json": F.gos_to_dict(tb),
        "count_one.gos.json": F.gos_to_dict(ma),
        "count_two.gos.json": F.gos_to_dict(mb),
        "unwrap.gos.json": F.gos_to_dict(unwrap_space()),
    }
    os.makedirs(directory, exist_ok=True)
    for name, doc in docs.items():
        with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
            fh.write(F.dumps(doc, pretty=True) + "\n")
    return sorted(docs)


if __name__ == "__main__":
    import sys

    print("\n".join(export_fixtures(sys.argv[1] if len(sys.argv) > 1 else "fixtures")))
