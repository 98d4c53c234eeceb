"""Local-type refinement for graphs with fins.

The refinement runs on the disjoint union of the inputs, over three kinds of
elements: vertices, darts, and oriented crossings.  An oriented crossing
``(fin, pos, sign)`` is the passage of a fin across an edge; with ``sign=+1`` it
sits on the dart ``cycle[pos]``, with ``sign=-1`` on its reversal.  Each
crossing leaves the origin of its dart, and its *partner* is the crossing
leaving the same vertex along the other half of the arc through that vertex.

Stable labels of these elements determine the universal cover rooted at them.
"""
from __future__ import annotations

import hashlib
from collections import defaultdict
from dataclasses import dataclass, field

from .core import cycle_root, rev


def _digest(obj):
    return hashlib.blake2b(repr(obj).encode(), digest_size=8).hexdigest()


def crossing_dart(gwf, c):
    fid, pos, s = c
    d = gwf.fin(fid).cycle[pos]
    return d if s > 0 else rev(d)


def partner(gwf, c):
    fid, pos, s = c
    L = gwf.fin(fid).length
    return (fid, (pos - s) % L, -s)


class LocalStructure:
    """Stars, crossings and partner pairing of one graph with fins."""

    def __init__(self, gwf):
        self.gwf = gwf
        g = gwf.graph
        self.crossings_on = {d: [] for d in g.darts}
        for f in gwf.fins:
            for pos in range(f.length):
                for s in (1, -1):
                    c = (f.id, pos, s)
                    self.crossings_on[crossing_dart(gwf, c)].append(c)
        for d in self.crossings_on:
            self.crossings_on[d].sort()
        self.dart_of = {c: d for d, cs in self.crossings_on.items() for c in cs}
        self.partner = {c: partner(gwf, c) for c in self.dart_of}

    def colour(self, c):
        return self.gwf.colours[(c[0], c[2])]

    def star(self, v):
        return self.gwf.graph.star(v)


@dataclass
class TypeTable:
    rounds: int
    vertex_type: dict   # (input index, vertex) -> label
    dart_type: dict     # (input index, dart) -> label
    crossing_type: dict  # (input index, crossing) -> label
    use_colours: bool = True
    structures: list = field(default_factory=list)

    def vertex_labels(self, i):
        return {lab for (j, _), lab in self.vertex_type.items() if j == i}


def refine_local_types(inputs, use_colours=True):
    inputs = list(inputs)
    structs = [LocalStructure(g) for g in inputs]
    verts = [(i, v) for i, g in enumerate(inputs) for v in g.graph.vertices]
    darts = [(i, d) for i, g in enumerate(inputs) for d in g.graph.darts]
    xs = [(i, c) for i, s in enumerate(structs) for c in sorted(s.dart_of)]

    vl = {x: "V" for x in verts}
    dl = {x: "D" for x in darts}
    if use_colours:
        cl = {(i, c): ("K", structs[i].colour(c)) for i, c in xs}
    else:
        cl = {x: "K" for x in xs}
    cl = {x: _digest(v) for x, v in cl.items()}

    def count():
        return len(set(vl.values())) + len(set(dl.values())) + len(set(cl.values()))

    rounds, n = 0, count()
    limit = len(verts) + len(darts) + len(xs) + 2
    while True:
        nvl, ndl, ncl = {}, {}, {}
        for i, v in verts:
            g = inputs[i].graph
            nvl[(i, v)] = _digest((vl[(i, v)], sorted(dl[(i, d)] for d in g.star(v))))
        for i, d in darts:
            g = inputs[i].graph
            ndl[(i, d)] = _digest((dl[(i, d)], vl[(i, g.origin(d))], dl[(i, rev(d))],
                                   sorted(cl[(i, c)] for c in structs[i].crossings_on[d])))
        for i, c in xs:
            st = structs[i]
            ncl[(i, c)] = _digest((cl[(i, c)], dl[(i, st.dart_of[c])],
                                   cl[(i, (c[0], c[1], -c[2]))], cl[(i, st.partner[c])]))
        vl, dl, cl = nvl, ndl, ncl
        rounds += 1
        m = count()
        if m == n or rounds > limit:
            break
        n = m
    return TypeTable(rounds, vl, dl, cl, use_colours, structs)


@dataclass
class Verdict:
    compatible: bool
    witness: str | None = None

    def __bool__(self):
        return self.compatible


def same_universal_cover(a, b, use_colours=True, table=None):
    t = table or refine_local_types([a, b], use_colours)
    la, lb = t.vertex_labels(0), t.vertex_labels(1)
    if la == lb:
        return Verdict(True)
    only_a = sorted(la - lb)
    if only_a:
        v = sorted(v for (i, v), lab in t.vertex_type.items() if i == 0 and lab == only_a[0])[0]
        return Verdict(False, f"vertex {v} of the first input has a type absent from the second")
    v = sorted(v for (i, v), lab in t.vertex_type.items() if i == 1 and lab == sorted(lb - la)[0])[0]
    return Verdict(False, f"vertex {v} of the second input has a type absent from the first")


def oriented_type_word(table, i, gwf, fid, sign):
    L = gwf.fin(fid).length
    order = range(L) if sign > 0 else [(-k) % L for k in range(L)]
    return tuple(table.crossing_type[(i, (fid, p, sign))] for p in order)


def _label_of_word(word):
    root, _ = cycle_root(word)
    return "c" + _digest(min(root[k:] + root[:k] for k in range(len(root))))[:12]


def canonical_colours(inputs, use_colours=False, table=None):
    """Canonical label per oriented fin, keyed ``(input index, fin id, sign)``."""
    inputs = list(inputs)
    t = table or refine_local_types(inputs, use_colours)
    out = {}
    for i, g in enumerate(inputs):
        for f in g.fins:
            for s in (1, -1):
                out[(i, f.id, s)] = _label_of_word(oriented_type_word(t, i, g, f.id, s))
    return out


def canonical_recolouring(inputs, use_colours=False):
    """Each input recoloured by its canonical labels."""
    lab = canonical_colours(inputs, use_colours)
    return [g.recoloured({(f, s): lab[(i, f, s)] for f, s in g.oriented_fins()})
            for i, g in enumerate(inputs)]


@dataclass
class TransitivityVerdict:
    ok: bool
    splitting: dict  # user colour -> sorted canonical classes (only failing colours)


def check_fin_transitivity(inputs, colouring=None):
    """``colouring`` maps ``(input index, fin id, sign)`` to a colour; defaults to the inputs' own."""
    inputs = list(inputs)
    if colouring is not None:
        inputs = [g.recoloured({(f, s): colouring[(i, f, s)] for f, s in g.oriented_fins()})
                  for i, g in enumerate(inputs)]
    lab = canonical_colours(inputs, use_colours=True)
    classes = defaultdict(set)
    for i, g in enumerate(inputs):
        for (f, s), c in g.colours.items():
            classes[c].add(lab[(i, f, s)])
    split = {c: sorted(ls) for c, ls in sorted(classes.items()) if len(ls) > 1}
    return TransitivityVerdict(not split, split)
