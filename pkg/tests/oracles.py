"""Brute-force reference implementations used to cross-check the package.

These share no code with the package beyond the plain data classes.
"""
from __future__ import annotations

from collections import Counter
from fractions import Fraction
from itertools import permutations, product


def _rev(d):
    return d[:-1] + ("-" if d.endswith("+") else "+")


def _ends(graph):
    org, ter = {}, {}
    for e, a, b in graph.edges:
        org[e + "+"], ter[e + "+"] = a, b
        org[e + "-"], ter[e + "-"] = b, a
    return org, ter


def is_covering(cm):
    """Direct check of every covering axiom, written independently of the package."""
    S, T = cm.source, cm.target
    so, st = _ends(S.graph)
    to, tt = _ends(T.graph)
    if any(cm.vertex_map.get(v) not in T.graph.vertices for v in S.graph.vertices):
        return False
    if any(cm.dart_map.get(d) not in to for d in so):
        return False
    for d in so:
        x = cm.dart_map[d]
        if cm.dart_map[_rev(d)] != _rev(x) or cm.vertex_map[so[d]] != to[x]:
            return False
    for v in S.graph.vertices:
        here = sorted(cm.dart_map[d] for d in so if so[d] == v)
        there = sorted(x for x in to if to[x] == cm.vertex_map[v])
        if here != there:
            return False
    fibre = Counter(cm.vertex_map.values())
    if len({fibre[w] for w in T.graph.vertices}) != 1:
        return False
    tfins = {f.id: f.cycle for f in T.fins}
    covered = Counter()
    for f in S.fins:
        img = cm.fin_map.get(f.id)
        if img is None or img.fin not in tfins:
            return False
        t = tfins[img.fin]
        if len(f.cycle) != img.degree * len(t) or img.direction not in (1, -1):
            return False
        for i, d in enumerate(f.cycle):
            p = (img.offset + img.direction * i) % len(t)
            want = t[p] if img.direction == 1 else _rev(t[p])
            if cm.dart_map[d] != want:
                return False
            covered[(img.fin, p, d if img.direction == 1 else _rev(d))] += 1
        for s in (1, -1):
            if S.colours.get((f.id, s)) != T.colours.get((img.fin, s * img.direction)):
                return False
    # each lift of each target fin position is used exactly once
    for t in T.fins:
        for p, x in enumerate(t.cycle):
            for d in so:
                if cm.dart_map[d] == x and covered[(t.id, p, d)] != 1:
                    return False
    return sum(covered.values()) == sum(len(f.cycle) for f in S.fins)


def density(gwf, colour):
    total = 0
    for f in gwf.fins:
        for s in (1, -1):
            if gwf.colours[(f.id, s)] == colour:
                total += len(f.cycle)
    return Fraction(total, len(gwf.graph.vertices))


# --- local extensions -----------------------------------------------------------

class Local:
    """Stars, crossings and partners, rebuilt from scratch."""

    def __init__(self, gwf):
        self.g = gwf
        self.org, self.ter = _ends(gwf.graph)
        self.on = {d: [] for d in self.org}
        self.col = {}
        for f in gwf.fins:
            n = len(f.cycle)
            for i, d in enumerate(f.cycle):
                self.on[d].append((f.id, i, 1))
                self.on[_rev(d)].append((f.id, i, -1))
                self.col[(f.id, i, 1)] = gwf.colours[(f.id, 1)]
                self.col[(f.id, i, -1)] = gwf.colours[(f.id, -1)]
            self.n = getattr(self, "n", {})
            self.n[f.id] = n
        for d in self.on:
            self.on[d].sort()

    def partner(self, c):
        f, i, s = c
        return (f, (i - s) % self.n[f], -s)

    def star(self, v):
        return sorted(d for d in self.org if self.org[d] == v)


def star_maps(A, B, x, y, fixed_darts=None, fixed_cross=None, limit=200000):
    """Every bijection of stars and crossings x -> y respecting darts, partners and colours."""
    sx, sy = A.star(x), B.star(y)
    if len(sx) != len(sy):
        return
    budget = [limit]
    for img in permutations(sy):
        dm = dict(zip(sx, img))
        if any(dm[d] != e for d, e in (fixed_darts or {}).items()):
            continue
        if any(len(A.on[d]) != len(B.on[dm[d]]) for d in sx):
            continue
        choices = [list(permutations(B.on[dm[d]])) for d in sx]
        for pick in product(*choices):
            budget[0] -= 1
            if budget[0] < 0:
                raise RuntimeError("oracle budget exceeded")
            cm = {}
            for d, im in zip(sx, pick):
                cm.update(zip(A.on[d], im))
            if any(cm.get(k) != v for k, v in (fixed_cross or {}).items()):
                continue
            if all(A.col[k] == B.col[k2] and cm.get(A.partner(k)) == B.partner(k2) for k, k2 in cm.items()):
                yield dm, cm


def extendable_triples(A, B, limit=200000):
    """Greatest fixed point by plain iteration: triples whose branch extends to every depth."""
    def flip(c):
        return (c[0], c[1], -c[2])

    cur = set()
    for d in A.org:
        for d2 in B.org:
            if len(A.on[d]) == len(B.on[d2]):
                for im in permutations(B.on[d2]):
                    if all(A.col[k] == B.col[k2] for k, k2 in zip(A.on[d], im)):
                        cur.add((d, d2, im))
    while True:
        nxt = set()
        for d, d2, im in cur:
            fixed = {flip(k): flip(k2) for k, k2 in zip(A.on[d], im)}
            back, back2 = _rev(d), _rev(d2)
            for dm, cm in star_maps(A, B, A.ter[d], B.ter[d2], {back: back2}, fixed, limit):
                if all(e == back or (e, dm[e], tuple(cm[k] for k in A.on[e])) in cur for e in dm):
                    nxt.add((d, d2, im))
                    break
        if nxt == cur:
            return cur
        cur = nxt


def admissible_star_maps(A, B, alive, x, y, fixed_darts=None, fixed_cross=None):
    out = []
    for dm, cm in star_maps(A, B, x, y, fixed_darts, fixed_cross):
        if all((e, dm[e], tuple(cm[k] for k in A.on[e])) in alive for e in dm):
            out.append((dm, cm))
    return out


def extension_counts(x1):
    """For each dart d of ``x1``: admissible self-maps of the star at its origin fixing d and its crossings."""
    A = Local(x1)
    alive = extendable_triples(A, A)
    out = {}
    for d in A.org:
        fixed = {k: k for k in A.on[d]}
        out[d] = len(admissible_star_maps(A, A, alive, A.org[d], A.org[d], {d: d}, fixed))
    return out


def polyhedral_pair_count(x1, x2):
    A, B = Local(x1), Local(x2)
    alive = extendable_triples(A, B)
    return sum(len(admissible_star_maps(A, B, alive, x, y))
               for x in x1.graph.vertices for y in x2.graph.vertices)


def oracle_size(gwf):
    """Rough count of candidate star bijections, to keep oracle runs small."""
    A = Local(gwf)
    worst = 1
    for v in gwf.graph.vertices:
        n = 1
        st = A.star(v)
        for k in range(2, len(st) + 1):
            n *= k
        for d in st:
            for k in range(2, len(A.on[d]) + 1):
                n *= k
        worst = max(worst, n)
    return worst


# --- words and balancedness ---------------------------------------------------------

def primitive_exponent(letters):
    n = len(letters)
    return max(k for k in range(1, n + 1) if n % k == 0 and letters == letters[: n // k] * k)


def reduced_triples(rank):
    gens = [i for i in range(1, rank + 1)] + [-i for i in range(1, rank + 1)]
    return [t for t in product(gens, repeat=3) if t[0] != -t[1] and t[1] != -t[2]]


def contains_all_triples(rank, letters):
    n = len(letters)
    seen = set()
    for i in range(n):
        seen.add((letters[i], letters[(i + 1) % n], letters[(i + 2) % n]))
    return all(t in seen for t in reduced_triples(rank))


def bs_balanced(m, n):
    return abs(m) == abs(n)


def face_sides(x1, x2):
    """face -> (vertices of X1 for left-side pairs, same for right-side pairs), from brute-force pairs."""
    A, B = Local(x1), Local(x2)
    alive = extendable_triples(A, B)
    faces = {}

    def flip(c):
        return (c[0], c[1], -c[2])

    for x in x1.graph.vertices:
        for y in x2.graph.vertices:
            for dm, cm in admissible_star_maps(A, B, alive, x, y):
                for d in dm:
                    if d.endswith("+"):
                        key = (d, dm[d], tuple(sorted((k, cm[k]) for k in A.on[d])))
                        faces.setdefault(key, ([], []))[0].append(x)
                    else:
                        key = (_rev(d), _rev(dm[d]), tuple(sorted((flip(k), flip(cm[k])) for k in A.on[d])))
                        faces.setdefault(key, ([], []))[1].append(x)
    return faces


def ratio_weights(x1, counts):
    """Vertex weights with w(t(d)) / w(o(d)) = n(d) / n(rev d), normalised to coprime integers."""
    org, ter = _ends(x1.graph)
    w = {x1.graph.vertices[0]: Fraction(1)}
    changed = True
    while changed:
        changed = False
        for d in org:
            if org[d] in w:
                val = w[org[d]] * counts[d] / counts[_rev(d)]
                if ter[d] not in w:
                    w[ter[d]] = val
                    changed = True
                elif w[ter[d]] != val:
                    return None
    from math import gcd, lcm
    den = lcm(*(v.denominator for v in w.values()))
    ints = {k: int(v * den) for k, v in w.items()}
    g = 0
    for v in ints.values():
        g = gcd(g, v)
    return {k: v // g for k, v in ints.items()}
