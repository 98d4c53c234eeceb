"""Common finite covers of graphs with fins sharing a universal cover.

Pieces:

* ``Realizer`` decides which local identifications between the universal
  covers extend to global isomorphisms.  A triple ``(d, d2, beta)`` identifies
  the half of the universal cover beyond dart ``d`` with the half beyond ``d2``,
  with ``beta`` matching the crossings on the two darts.  The set of extendable
  triples is the greatest fixed point of the one-step extension condition.
* Polyhedral pairs are star isomorphisms all of whose branch triples extend.
  Face pairs are the identifications they induce on edges.
* Weights come from ratio propagation of extension counts on the first input.
* Assembly glues weighted copies of polyhedral pairs along face pairs.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from math import factorial, gcd, prod

from .core import (CoveringMap, FinImage, Graph, GraphCover, density, induced_cover,
                   lcm, rev, verify_covering)
from .local_types import (LocalStructure, check_fin_transitivity, refine_local_types,
                          same_universal_cover)


MAX_BIJECTIONS = 5040


class LeightonError(ValueError):
    pass


class NoAdmissiblePairs(LeightonError):
    pass


class InconsistentRatios(LeightonError):
    pass


class TransitivityFailure(LeightonError):
    pass


def flip(c):
    return (c[0], c[1], -c[2])


class _Side:
    """A local structure together with its stable types from a joint table."""

    def __init__(self, struct, index, table):
        self.s = struct
        self.i = index
        self.t = table

    def vtype(self, v):
        return self.t.vertex_type[(self.i, v)]

    def dtype(self, d):
        return self.t.dart_type[(self.i, d)]

    def ctype(self, c):
        return self.t.crossing_type[(self.i, c)]


def star_isos(A, B, x, y, child_ok, dart_fixed=None, cross_fixed=None):
    """Yield ``(dart map, crossing map)`` for type-preserving star isomorphisms x -> y.

    ``child_ok(e, e2, images)`` is consulted once each dart's crossings are all mapped.
    """
    sx, sy = A.s.star(x), B.s.star(y)
    if len(sx) != len(sy):
        return
    cross_x = {e: A.s.crossings_on[e] for e in sx}

    def extend(dmap, cmap, pairs, checked):
        dmap, cmap, checked = dict(dmap), dict(cmap), set(checked)
        dused, cused = set(dmap.values()), set(cmap.values())
        queue = deque(pairs)
        while queue:
            k, k2 = queue.popleft()
            if k in cmap:
                if cmap[k] != k2:
                    return None
                continue
            if k2 in cused or A.ctype(k) != B.ctype(k2):
                return None
            cmap[k] = k2
            cused.add(k2)
            e, e2 = A.s.dart_of[k], B.s.dart_of[k2]
            if e in dmap:
                if dmap[e] != e2:
                    return None
            else:
                if e2 in dused:
                    return None
                dmap[e] = e2
                dused.add(e2)
            queue.append((A.s.partner[k], B.s.partner[k2]))
        for e, e2 in dmap.items():
            if e in checked:
                continue
            cs = cross_x[e]
            if all(k in cmap for k in cs):
                if not child_ok(e, e2, tuple(cmap[k] for k in cs)):
                    return None
                checked.add(e)
        return dmap, cmap, checked

    def search(state):
        dmap, cmap, checked = state
        for e in sx:
            if e in dmap:
                for k in cross_x[e]:
                    if k not in cmap:
                        used = set(cmap.values())
                        for k2 in B.s.crossings_on[dmap[e]]:
                            if k2 not in used and B.ctype(k2) == A.ctype(k):
                                nxt = extend(dmap, cmap, [(k, k2)], checked)
                                if nxt:
                                    yield from search(nxt)
                        return
        for e in sx:
            if e not in dmap:
                used = set(dmap.values())
                for e2 in sy:
                    if e2 not in used and B.dtype(e2) == A.dtype(e):
                        d2 = dict(dmap)
                        d2[e] = e2
                        nxt = extend(d2, cmap, [], checked)
                        if nxt:
                            yield from search(nxt)
                return
        yield dict(dmap), dict(cmap)

    dmap0 = dict(dart_fixed or {})
    for e, e2 in dmap0.items():
        if A.dtype(e) != B.dtype(e2):
            return
    start = extend(dmap0, {}, list((cross_fixed or {}).items()), set())
    if start:
        yield from search(start)


def crossing_bijections(A, B, d, d2):
    """All type-preserving bijections crossings(d) -> crossings(d2), as image tuples."""
    cs, cs2 = A.s.crossings_on[d], B.s.crossings_on[d2]
    if len(cs) != len(cs2):
        return []
    groups = defaultdict(list)
    for k in cs2:
        groups[B.ctype(k)].append(k)
    by_type = defaultdict(list)
    for idx, k in enumerate(cs):
        by_type[A.ctype(k)].append(idx)
    if sorted((t, len(v)) for t, v in by_type.items()) != sorted((t, len(v)) for t, v in groups.items()):
        return []
    types = sorted(by_type)
    size = prod(factorial(len(v)) for v in by_type.values())
    if size > MAX_BIJECTIONS:
        raise LeightonError(f"local types too coarse on dart {d}: {size} candidate crossing bijections")
    out = []
    for choice in product(*[permutations(groups[t]) for t in types]):
        img = [None] * len(cs)
        for t, perm in zip(types, choice):
            for idx, k2 in zip(by_type[t], perm):
                img[idx] = k2
        out.append(tuple(img))
    return out


class Realizer:
    """Extendable branch identifications between the universal covers of A and B."""

    def __init__(self, A, B):
        self.A, self.B = A, B
        gA, gB = A.s.gwf.graph, B.s.gwf.graph
        by_type = defaultdict(list)
        for d in gB.darts:
            by_type[B.dtype(d)].append(d)
        self.alive = set()
        index = defaultdict(list)
        for d in gA.darts:
            for d2 in by_type.get(A.dtype(d), ()):
                for beta in crossing_bijections(A, B, d, d2):
                    key = (d, d2, beta)
                    self.alive.add(key)
                    index[(gA.terminus(d), gB.terminus(d2))].append(key)
        queue = deque(sorted(self.alive))
        queued = set(queue)
        while queue:
            key = queue.popleft()
            queued.discard(key)
            if key not in self.alive:
                continue
            if not self._has_witness(key):
                self.alive.discard(key)
                d, d2, _ = key
                for parent in index.get((gA.origin(d), gB.origin(d2)), ()):
                    if parent in self.alive and parent not in queued:
                        queue.append(parent)
                        queued.add(parent)

    def _has_witness(self, key):
        d, d2, beta = key
        gA, gB = self.A.s.gwf.graph, self.B.s.gwf.graph
        back, back2 = rev(d), rev(d2)
        fixed = {flip(k): flip(k2) for k, k2 in zip(self.A.s.crossings_on[d], beta)}

        def ok(e, e2, img):
            return e == back or (e, e2, img) in self.alive

        for _ in star_isos(self.A, self.B, gA.terminus(d), gB.terminus(d2), ok, {back: back2}, fixed):
            return True
        return False

    def extends(self, d, d2, images):
        return (d, d2, tuple(images)) in self.alive


def _freeze(dmap, cmap):
    return tuple(sorted(dmap.items())), tuple(sorted(cmap.items()))


@dataclass(frozen=True)
class PolyhedralPair:
    vertex1: str
    vertex2: str
    darts: tuple     # sorted (dart in X1, dart in X2)
    crossings: tuple  # sorted (crossing in X1, crossing in X2)

    def dart_map(self):
        return dict(self.darts)

    def crossing_map(self):
        return dict(self.crossings)


@dataclass(frozen=True)
class FacePair:
    edge1: str      # positive dart of X1
    edge2: str      # dart of X2 it is matched with
    crossings: tuple  # sorted (crossing on edge1, crossing on edge2)


class LocalData:
    """Admissibility machinery for one ordered pair of graphs with fins."""

    def __init__(self, x1, x2):
        self.x1, self.x2 = x1, x2
        self.table = refine_local_types([x1, x2], use_colours=True)
        s1 = LocalStructure(x1)
        s2 = LocalStructure(x2)
        self.A = _Side(s1, 0, self.table)
        self.B = _Side(s2, 1, self.table)
        self.r12 = Realizer(self.A, self.B)
        self.r11 = Realizer(self.A, self.A)
        self._n = {}

    def polyhedral_pairs(self, x, y):
        ok = self.r12.extends
        return [PolyhedralPair(x, y, *_freeze(dm, cm))
                for dm, cm in star_isos(self.A, self.B, x, y, ok)]

    def enumerate(self):
        g1, g2 = self.x1.graph, self.x2.graph
        pairs = []
        for x in g1.vertices:
            for y in g2.vertices:
                if self.A.vtype(x) == self.B.vtype(y):
                    pairs.extend(self.polyhedral_pairs(x, y))
        return pairs

    def stabiliser_count(self, x, fixed_cross):
        """Extendable automorphisms of the star at ``x`` fixing the given crossings."""
        fixed_darts = {self.A.s.dart_of[k]: self.A.s.dart_of[k] for k in fixed_cross}
        ok = self.r11.extends
        return sum(1 for _ in star_isos(self.A, self.A, x, x, ok, fixed_darts,
                                        {k: k for k in fixed_cross}))

    def extension_count(self, d):
        """Completions of a face pair on the side where ``d`` leaves the polyhedron."""
        if d not in self._n:
            g = self.x1.graph
            x = g.origin(d)
            fixed_darts = {d: d}
            ok = self.r11.extends
            self._n[d] = sum(1 for _ in star_isos(
                self.A, self.A, x, x, ok, fixed_darts,
                {k: k for k in self.A.s.crossings_on[d]}))
        return self._n[d]


def face_pairs(local, pairs):
    """Group polyhedral pairs by the face pairs they induce: face -> {"left": [...], "right": [...]}"""
    cr = local.A.s.crossings_on
    faces = defaultdict(lambda: {"left": [], "right": []})
    for p in pairs:
        dm, cm = p.dart_map(), p.crossing_map()
        for d in local.x1.graph.star(p.vertex1):
            if d.endswith("+"):
                key = FacePair(d, dm[d], tuple(sorted((k, cm[k]) for k in cr[d])))
                faces[key]["left"].append(p)
            else:
                e = rev(d)
                key = FacePair(e, rev(dm[d]), tuple(sorted((flip(k), flip(cm[k])) for k in cr[d])))
                faces[key]["right"].append(p)
    return dict(faces)


@dataclass
class HaarSolution:
    vertex_weight: dict   # vertex of X1 -> positive int
    ratios: dict          # vertex of X1 -> Fraction before scaling
    type_constant: bool   # weights constant on stable vertex types
    counts: dict          # dart of X1 -> extension count


def haar_weights(local):
    g = local.x1.graph
    counts = {d: local.extension_count(d) for d in g.darts}
    root = g.vertices[0]
    mu = {root: Fraction(1)}
    parent = {root: None}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for d in g.star(x):
            y = g.terminus(d)
            val = mu[x] * counts[d] / counts[rev(d)]
            if y not in mu:
                mu[y] = val
                parent[y] = d
                queue.append(y)
            elif mu[y] != val:
                raise InconsistentRatios(
                    f"ratio around the cycle closed by dart {d} is {val / mu[y]}, "
                    f"path to {x}: {_path(g, parent, x)}, path to {y}: {_path(g, parent, y)}")
    if len(mu) != len(g.vertices):
        raise LeightonError("first input is not connected")
    den = 1
    for v in mu.values():
        den = lcm(den, v.denominator)
    ints = {x: int(v * den) for x, v in mu.items()}
    com = 0
    for v in ints.values():
        com = gcd(com, v)
    weights = {x: v // com for x, v in ints.items()}
    by_type = defaultdict(set)
    for x, w in weights.items():
        by_type[local.A.vtype(x)].add(w)
    return HaarSolution(weights, mu, all(len(s) == 1 for s in by_type.values()), counts)


def _path(g, parent, x):
    out = []
    while parent.get(x):
        d = parent[x]
        out.append(d)
        x = g.origin(d)
    return list(reversed(out))


def check_gluing(faces, weight):
    """Failures of the gluing equations and of within-side constancy."""
    bad = []
    for key in sorted(faces, key=repr):
        sides = faces[key]
        left = [weight(p) for p in sides["left"]]
        right = [weight(p) for p in sides["right"]]
        if not left or not right:
            bad.append((key, "face pair with an empty side"))
        elif sum(left) != sum(right):
            bad.append((key, f"left sum {sum(left)} != right sum {sum(right)}"))
        if len(set(left)) > 1 or len(set(right)) > 1:
            bad.append((key, "weights not constant within a side"))
    return bad


@dataclass
class FinEquationEntry:
    fin1: tuple
    fin2: tuple
    colour: str
    lhs: Fraction
    rhs: Fraction
    constant: Fraction

    @property
    def ok(self):
        return self.lhs == self.rhs

    def as_dict(self):
        return {"fin1": [self.fin1[0], self.fin1[1]], "fin2": [self.fin2[0], self.fin2[1]],
                "colour": self.colour, "lhs": str(self.lhs), "rhs": str(self.rhs),
                "constant": str(self.constant), "ok": self.ok}


def fin_equation_constant(x1, x2, common, colour):
    rho = density(x1, colour)
    return Fraction(common.num_vertices) / (rho * x1.num_vertices * x2.num_vertices)


def verify_fin_equation(x1, x2, common, cover1, cover2):
    sums = defaultdict(int)
    for f in common.fins:
        for s in (1, -1):
            sums[(cover1.oriented_image(f.id, s), cover2.oriented_image(f.id, s))] += f.length
    out = []
    for c in sorted(x1.colour_set() & x2.colour_set()):
        K = fin_equation_constant(x1, x2, common, c)
        o1 = [o for o in x1.oriented_fins() if x1.colours[o] == c]
        o2 = [o for o in x2.oriented_fins() if x2.colours[o] == c]
        for a in o1:
            for b in o2:
                lhs = Fraction(sums.get((a, b), 0))
                rhs = K * x1.fin(a[0]).length * x2.fin(b[0]).length
                out.append(FinEquationEntry(a, b, c, lhs, rhs, K))
    return out


@dataclass
class LeightonResult:
    common: object
    cover1: CoveringMap
    cover2: CoveringMap
    pairs: list
    faces: dict
    haar: HaarSolution
    fin_report: list
    gluing_failures: list
    local: LocalData = field(repr=False)

    def weight(self, p):
        return self.haar.vertex_weight[p.vertex1]

    @property
    def ok(self):
        return (not self.gluing_failures and all(e.ok for e in self.fin_report)
                and verify_covering(self.cover1).ok and verify_covering(self.cover2).ok)


def assemble_common_cover(local, pairs, faces, weight):
    """Glue ``weight(p)`` copies of each pair along face pairs; returns (common, cover1, cover2)."""
    A = local.A
    order = sorted(pairs, key=lambda p: (A.vtype(p.vertex1), p.vertex1, p.vertex2, p.darts, p.crossings))
    copy_name, copies = {}, []
    for p in order:
        for k in range(weight(p)):
            name = f"q{len(copies)}"
            copy_name[(p, k)] = name
            copies.append((name, p))
    edges, d1map, d2map = [], {}, {}
    for key in sorted(faces, key=lambda f: (f.edge1, f.edge2, f.crossings)):
        left = [copy_name[(p, k)] for p in faces[key]["left"] for k in range(weight(p))]
        right = [copy_name[(p, k)] for p in faces[key]["right"] for k in range(weight(p))]
        left.sort(key=lambda n: int(n[1:]))
        right.sort(key=lambda n: int(n[1:]))
        if len(left) != len(right):
            raise LeightonError(f"gluing equation fails on face {key}")
        for a, b in zip(left, right):
            h = f"h{len(edges)}"
            edges.append((h, a, b))
            d1map[h + "+"], d2map[h + "+"] = key.edge1, key.edge2
            d1map[h + "-"], d2map[h + "-"] = rev(key.edge1), rev(key.edge2)
    graph = Graph([n for n, _ in copies], edges)
    pair_of = dict(copies)
    gc = GraphCover(graph, local.x1.graph, {n: p.vertex1 for n, p in copies}, d1map)
    common, cover1 = induced_cover(local.x1, gc)

    fin_map = {}
    for f in common.fins:
        start = f.cycle[0]
        p = pair_of[graph.origin(start)]
        fid = cover1.fin_map[f.id].fin
        k2 = p.crossing_map()[(fid, 0, 1)]
        L2 = local.x2.fin(k2[0]).length
        fin_map[f.id] = FinImage(k2[0], k2[1], f.length // L2, k2[2])
    cover2 = CoveringMap(common, local.x2, {n: p.vertex2 for n, p in copies}, d2map, fin_map)
    return common, cover1, cover2


def common_cover(x1, x2):
    """The full construction with verification data; raises on unsatisfied hypotheses."""
    for g in (x1, x2):
        if not g.graph.is_connected():
            raise LeightonError("inputs must be connected")
    verdict = same_universal_cover(x1, x2)
    if not verdict:
        raise NoAdmissiblePairs(f"inputs have different universal covers: {verdict.witness}")
    trans = check_fin_transitivity([x1, x2])
    if not trans.ok:
        raise TransitivityFailure(
            "colour classes split into several orbit classes: " + ", ".join(sorted(trans.splitting)))
    local = LocalData(x1, x2)
    pairs = local.enumerate()
    hit1 = {p.vertex1 for p in pairs}
    hit2 = {p.vertex2 for p in pairs}
    if hit1 != set(x1.graph.vertices) or hit2 != set(x2.graph.vertices):
        raise NoAdmissiblePairs("some vertex has no admissible polyhedral pair")
    faces = face_pairs(local, pairs)
    haar = haar_weights(local)

    def weight(p):
        return haar.vertex_weight[p.vertex1]

    bad = check_gluing(faces, weight)
    if bad:
        raise LeightonError(f"gluing equations fail: {bad[0]}")
    common, c1, c2 = assemble_common_cover(local, pairs, faces, weight)
    report = verify_fin_equation(x1, x2, common, c1, c2)
    return LeightonResult(common, c1, c2, pairs, faces, haar, report, bad, local)
