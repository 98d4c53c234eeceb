"""Common finite covers of two graphs of spaces.

The construction runs in stages:

1. ``match_structures`` recolours fins until the colours see the cylinders they
   are glued to, then pairs rigid classes and oriented cylinders.
2. ``normalize_fin_lengths`` builds a common cover of every matched rigid pair
   and passes to a further cover in which every fin has its target length.
3. ``solve_global_gluing`` evaluates the closed-form weights and scales them.
4. ``assemble_witness`` glues weighted copies of the local pieces.
5. ``verify_witness`` re-derives every claim from the witness alone.
"""
from __future__ import annotations

import random
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from math import factorial, gcd

from .core import compose, density, induced_cover, lcm, permutation_cover
from .gos import (Attachment, Cylinder, GosCover, GraphOfSpaces, component_cover, stretch_ratio,
                  validate_gos, verify_gos_cover)
from .leighton import common_cover
from .local_types import _digest, canonical_colours, refine_local_types

CAVEAT = ("a failed match does not show the inputs are incommensurable: "
          "the canonical colouring may be finer than the true orbit classes")


class PipelineError(ValueError):
    pass


class NoMatching(PipelineError):
    def __init__(self, diagnostic):
        super().__init__(f"{diagnostic} ({CAVEAT})")
        self.diagnostic = diagnostic


class BudgetExhausted(PipelineError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial or {}


class NonPositiveSolution(PipelineError):
    pass


SIDES = ("a", "b")


# --- colour refinement --------------------------------------------------------

def _recolour_gos(g, colouring, side):
    rigid = {u: x.recoloured({(f, s): colouring[(side, u, f, s)] for f, s in x.oriented_fins()})
             for u, x in g.rigid.items()}
    return GraphOfSpaces(rigid, dict(g.cylinders), g.edges)


def refine_gos_colours(a, b, stage=3):
    """Joint canonical colours ``(side, rigid, fin, sign) -> label``.

    ``stage`` 0 uses rigid structure only, 1 adds the colours seen at each
    cylinder, 2 adds stretch ratios, 3 adds multiplicities.
    """
    gs = {"a": a, "b": b}
    keys = [(s, u) for s in SIDES for u in sorted(gs[s].rigid)]
    spaces = [gs[s].rigid[u] for s, u in keys]
    lab = canonical_colours(spaces, use_colours=False)
    col = {(s, u, f, sg): lab[(i, f, sg)] for i, (s, u) in enumerate(keys)
           for f, sg in spaces[i].oriented_fins()}
    if stage == 0:
        return col
    stretch = {s: {eid: r for v in gs[s].cylinders for eid, r in stretch_ratio(gs[s], v).items()}
               for s in SIDES}
    n = len(set(col.values()))
    for _ in range(len(col) + 2):
        sig = {}
        for s in SIDES:
            g = gs[s]
            for v, cyl in g.cylinders.items():
                for o in (1, -1):
                    items = [(col[(s, e.rigid, e.fin, o * e.sign)], stretch[s][e.id] if stage >= 2 else 0)
                             for e in g.link(v)]
                    items = sorted(items) if stage >= 3 else sorted(set(items))
                    sig[(s, v, o)] = (cyl.kind, tuple(items))
        new = {}
        for (s, u, f, sg), c in col.items():
            e = gs[s].attachment_of(u, f)
            new[(s, u, f, sg)] = "k" + _digest((c, sig[(s, e.cylinder, sg * e.sign)]))
        recol = [x.recoloured({(f, sg): new[(s, u, f, sg)] for f, sg in x.oriented_fins()})
                 for (s, u), x in zip(keys, spaces)]
        lab = canonical_colours(recol, use_colours=True)
        col = {(s, u, f, sg): lab[(i, f, sg)] for i, (s, u) in enumerate(keys)
               for f, sg in spaces[i].oriented_fins()}
        m = len(set(col.values()))
        if m == n:
            break
        n = m
    return col


def _side_colouring(col, side):
    return {(u, f, s): c for (sd, u, f, s), c in col.items() if sd == side}


def _rigid_class_keys(a_star, b_star):
    keys = [(s, u) for s, g in (("a", a_star), ("b", b_star)) for u in sorted(g.rigid)]
    gs = {"a": a_star, "b": b_star}
    table = refine_local_types([gs[s].rigid[u] for s, u in keys], use_colours=True)
    return {k: _digest(sorted(table.vertex_labels(i))) for i, k in enumerate(keys)}


def _compare(a, b, col):
    ca = {c for (s, *_), c in col.items() if s == "a"}
    cb = {c for (s, *_), c in col.items() if s == "b"}
    if ca - cb:
        return f"colour {sorted(ca - cb)[0]} occurs only in the first input"
    if cb - ca:
        return f"colour {sorted(cb - ca)[0]} occurs only in the second input"
    keys = _rigid_class_keys(_recolour_gos(a, col, "a"), _recolour_gos(b, col, "b"))
    ka = {k for (s, _), k in keys.items() if s == "a"}
    kb = {k for (s, _), k in keys.items() if s == "b"}
    for s, u in sorted(keys):
        other = kb if s == "a" else ka
        if keys[(s, u)] not in other:
            which = "first" if s == "a" else "second"
            return f"rigid vertex {u} of the {which} input has no counterpart"
    return None


def _t_vector(g, colouring, v, o):
    return tuple(sorted(Counter(colouring[(e.rigid, e.fin, o * e.sign)] for e in g.link(v)).items()))


# --- plan ----------------------------------------------------------------------

@dataclass
class MatchingPlan:
    a: GraphOfSpaces
    b: GraphOfSpaces
    colouring: dict                 # (side, rigid, fin, sign) -> colour
    a_star: GraphOfSpaces
    b_star: GraphOfSpaces
    rigid_class: dict               # (side, rigid) -> class key
    pairs: list                     # (u, u') of equal class
    cylinder_pairs: list            # (v, v', eps)
    reverse_colour: dict            # colour -> colour of the reversed fin
    class_density: dict = field(default_factory=dict)   # class key -> Fraction (first input)
    ratio: dict = field(default_factory=dict)           # colour class -> int
    N: int = 1
    lengths: dict = field(default_factory=dict)         # colour class -> target fin length
    cyl_degree: dict = field(default_factory=dict)      # (side, cylinder) -> degree
    leighton: dict = field(default_factory=dict)        # (u, u') -> LeightonResult
    normalized: dict = field(default_factory=dict)      # (u, u') -> (space, leg a, leg b)
    unwrap: dict = field(default_factory=dict)          # (u, u') -> cover degree used
    cyl_covers: dict = field(default_factory=dict)      # (v, v', eps) -> CylinderCover

    def colour_class(self, c):
        return min(c, self.reverse_colour[c])

    def side(self, s):
        return self.a_star if s == "a" else self.b_star


def match_structures(a, b):
    for name, g in (("first", a), ("second", b)):
        rep = validate_gos(g)
        if not rep.ok:
            raise PipelineError(f"{name} input is invalid: {rep.violations[0]}")
    ladder = [(0, "rigid vertex spaces differ"), (1, "cylinder colours differ"),
              (2, "stretch ratios differ"), (3, "cylinder numbers differ (ratios match)")]
    col = None
    for stage, diagnostic in ladder:
        col = refine_gos_colours(a, b, stage)
        why = _compare(a, b, col)
        if why:
            raise NoMatching(f"{diagnostic}: {why}")
    a_star, b_star = _recolour_gos(a, col, "a"), _recolour_gos(b, col, "b")
    ta, tb = _side_colouring(col, "a"), _side_colouring(col, "b")

    cyl_pairs = []
    matched_b = set()
    for v in sorted(a.cylinders):
        found = False
        for w in sorted(b.cylinders):
            for eps in (1, -1):
                if (a.cylinders[v].kind == b.cylinders[w].kind
                        and _t_vector(a, ta, v, 1) == _t_vector(b, tb, w, eps)):
                    cyl_pairs.append((v, w, eps))
                    matched_b.add(w)
                    found = True
        if not found:
            raise NoMatching(f"cylinder numbers differ (ratios match): cylinder {v} of the first input")
    for w in sorted(set(b.cylinders) - matched_b):
        raise NoMatching(f"cylinder numbers differ (ratios match): cylinder {w} of the second input")

    for v, w, eps in cyl_pairs:
        ra = sorted((ta[(e.rigid, e.fin, e.sign)], r) for e in a.link(v)
                    for r in [stretch_ratio(a, v)[e.id]])
        rb = sorted((tb[(e.rigid, e.fin, eps * e.sign)], r) for e in b.link(w)
                    for r in [stretch_ratio(b, w)[e.id]])
        if ra != rb:
            raise NoMatching(f"stretch ratios differ at cylinders {v} and {w}")

    keys = _rigid_class_keys(a_star, b_star)
    pairs = [(u, w) for u in sorted(a.rigid) for w in sorted(b.rigid) if keys[("a", u)] == keys[("b", w)]]
    rev_col = {}
    for (s, u, f, sg), c in col.items():
        rev_col[c] = col[(s, u, f, -sg)]
    plan = MatchingPlan(a, b, col, a_star, b_star, keys, pairs, cyl_pairs, rev_col)
    vol = a.volume
    for u in a.rigid:
        k = keys[("a", u)]
        plan.class_density[k] = plan.class_density.get(k, Fraction(0)) + Fraction(a.rigid[u].num_vertices, vol)
    return plan


# --- lengths ---------------------------------------------------------------------

def stretch_vector(plan):
    """Minimal positive integers ``r`` per colour class with r_e : r_f = len(S_e) : len(S_f) in every link."""
    adj = defaultdict(list)
    nodes = set()
    for s in SIDES:
        g = plan.side(s)
        for v in sorted(g.cylinders):
            link = g.link(v)
            for e in link:
                nodes.add(plan.colour_class(g.rigid[e.rigid].colour(e.fin, 1)))
            for e, f in zip(link, link[1:]):
                ke = plan.colour_class(g.rigid[e.rigid].colour(e.fin, 1))
                kf = plan.colour_class(g.rigid[f.rigid].colour(f.fin, 1))
                q = Fraction(g.rigid[e.rigid].fin(e.fin).length, g.rigid[f.rigid].fin(f.fin).length)
                adj[ke].append((kf, 1 / q))
                adj[kf].append((ke, q))
    r = {}
    for start in sorted(nodes):
        if start in r:
            continue
        comp = {start: Fraction(1)}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y, q in adj[x]:
                val = comp[x] * q
                if y not in comp:
                    comp[y] = val
                    queue.append(y)
                elif comp[y] != val:
                    raise NoMatching(f"stretch ratios differ: inconsistent ratio around colour class {y}")
        den = 1
        for val in comp.values():
            den = lcm(den, val.denominator)
        ints = {k: int(val * den) for k, val in comp.items()}
        g_ = 0
        for val in ints.values():
            g_ = gcd(g_, val)
        r.update({k: val // g_ for k, val in ints.items()})
    return r


def build_rigid_covers(plan):
    for u, w in plan.pairs:
        if (u, w) not in plan.leighton:
            plan.leighton[(u, w)] = common_cover(plan.a_star.rigid[u], plan.b_star.rigid[w])
    return plan


def _fin_class(plan, gwf, fid):
    return plan.colour_class(gwf.colour(fid, 1))


def normalize_fin_lengths(plan, budget=12, seed=0):
    build_rigid_covers(plan)
    r = stretch_vector(plan)
    plan.ratio = r
    N = 1
    for s in SIDES:
        g = plan.side(s)
        for v in g.cylinders:
            e = g.link(v)[0]
            sv = Fraction(g.rigid[e.rigid].fin(e.fin).length, r[_fin_class(plan, g.rigid[e.rigid], e.fin)])
            N = lcm(N, sv.numerator)
    for res in plan.leighton.values():
        for f in res.common.fins:
            rk = r[_fin_class(plan, res.common, f.id)]
            N = lcm(N, f.length // gcd(f.length, rk))
    plan.N = N
    plan.lengths = {k: N * x for k, x in r.items()}
    for s in SIDES:
        g = plan.side(s)
        for v in g.cylinders:
            degs = set()
            for e in g.link(v):
                L = plan.lengths[_fin_class(plan, g.rigid[e.rigid], e.fin)]
                n = g.rigid[e.rigid].fin(e.fin).length
                if L % n:
                    raise PipelineError(f"target length {L} is not a multiple of fin length {n}")
                degs.add(L // n)
            if len(degs) != 1:
                raise PipelineError(f"cylinder {v} would need several degrees {sorted(degs)}")
            plan.cyl_degree[(s, v)] = degs.pop()

    rng = random.Random(seed)
    missing = {}
    for key in sorted(plan.leighton):
        res = plan.leighton[key]
        targets = {f.id: plan.lengths[_fin_class(plan, res.common, f.id)] // f.length
                   for f in res.common.fins}
        try:
            space, up = omnipotent_cover(res.common, targets, budget, rng)
        except BudgetExhausted as exc:
            missing[key] = exc.partial
            continue
        plan.unwrap[key] = up.degree if up is not None else 1
        if up is None:
            plan.normalized[key] = (res.common, res.cover1, res.cover2)
        else:
            plan.normalized[key] = (space, compose(up, res.cover1), compose(up, res.cover2))
    if missing:
        raise BudgetExhausted(f"no fin-length normalizing cover within degree {budget}",
                              {f"{u}|{w}": p for (u, w), p in missing.items()})
    return plan


def _monodromy_ok(gwf, perms, m, targets):
    for f in gwf.fins:
        k = targets[f.id]
        seen = [False] * m
        for i in range(m):
            if seen[i]:
                continue
            x, n = i, 0
            while True:
                for d in f.cycle:
                    p = perms[d[:-1]]
                    x = p[0][x] if d[-1] == "+" else p[1][x]
                n += 1
                seen[x] = True
                if x == i:
                    break
            if n != k:
                return False
    return True


def omnipotent_cover(gwf, targets, budget, rng, tries=300):
    """A cover in which every lift of fin ``f`` has degree ``targets[f]`` over it.

    Returns ``(space, covering map)`` or ``(gwf, None)`` when nothing is needed.
    """
    if all(k == 1 for k in targets.values()):
        return gwf, None
    K = 1
    for k in targets.values():
        K = lcm(K, k)
    g = gwf.graph
    tree = _forest_edges(g)
    others = [e for e, _, _ in g.edges if e not in tree]
    for m in range(K, budget + 1, K):
        candidates = []
        for _ in range(tries):
            shift = {e: rng.randrange(m) for e in others}
            candidates.append({e: [(i + shift.get(e, 0)) % m for i in range(m)] for e, _, _ in g.edges})
        for _ in range(tries):
            perm = {}
            for e, _, _ in g.edges:
                p = list(range(m))
                rng.shuffle(p)
                perm[e] = p
            candidates.append(perm)
        for cand in candidates:
            both = {e: (p, _inverse_perm(p)) for e, p in cand.items()}
            if _monodromy_ok(gwf, both, m, targets):
                space, cm = induced_cover(gwf, permutation_cover(g, cand, m))
                return space, cm
    unmet = {f: k for f, k in sorted(targets.items()) if k != 1}
    raise BudgetExhausted(f"no cover of degree at most {budget} unwraps the fins as required", unmet)


def _inverse_perm(p):
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return out


def _forest_edges(g):
    parent = {v: v for v in g.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    out = set()
    for e, a, b in g.edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            out.add(e)
    return out


@dataclass(frozen=True)
class CylinderCover:
    """An oriented circle (times a circle for tori) covering two matched fibres."""
    kind: str
    degree_a: int
    degree_b: int
    length: int


def build_cyl_common_covers(plan):
    """One cover per matched pair; the reversed pair ``(v̄, v̄')`` shares the same entry."""
    plan.cyl_covers = {}
    for v, w, eps in plan.cylinder_pairs:
        e = plan.a_star.link(v)[0]
        length = plan.lengths[_fin_class(plan, plan.a_star.rigid[e.rigid], e.fin)]
        plan.cyl_covers[(v, w, eps)] = CylinderCover(
            plan.a.cylinders[v].kind, plan.cyl_degree[("a", v)], plan.cyl_degree[("b", w)], length)
    return plan


# --- link maps and weights ----------------------------------------------------------

def edge_colour(plan, side, e, o=1):
    g = plan.side(side)
    return g.rigid[e.rigid].colour(e.fin, o * e.sign)


def enumerate_link_maps(plan, v, w, eps):
    """Colour-preserving bijections lk(v) -> lk(w), sorted, as tuples of (edge, edge)."""
    a, b = plan.a_star, plan.b_star
    by_a, by_b = defaultdict(list), defaultdict(list)
    for e in a.link(v):
        by_a[edge_colour(plan, "a", e)].append(e.id)
    for f in b.link(w):
        by_b[edge_colour(plan, "b", f, eps)].append(f.id)
    if {c: len(x) for c, x in by_a.items()} != {c: len(x) for c, x in by_b.items()}:
        return []
    cols = sorted(by_a)
    out = []
    for choice in product(*[permutations(by_b[c]) for c in cols]):
        out.append(tuple(sorted(pair for c, img in zip(cols, choice) for pair in zip(by_a[c], img))))
    return sorted(out)


def link_map_count(plan, v, w, eps):
    n = 1
    for _, k in _t_vector(plan.a_star, _side_colouring(plan.colouring, "a"), v, 1):
        n *= factorial(k)
    return n


@dataclass
class Weights:
    rigid: dict       # (u, u') -> int
    cylinder: dict    # (v, v', eps) -> int
    edge: dict        # (e, e', eps) -> int
    scale: Fraction
    closed: dict      # same keys prefixed by kind -> Fraction before scaling

    def as_dict(self):
        return {
            "rigid": [[u, w, n] for (u, w), n in sorted(self.rigid.items())],
            "cylinder": [[v, w, s, n] for (v, w, s), n in sorted(self.cylinder.items())],
            "edge": [[e, f, s, n] for (e, f, s), n in sorted(self.edge.items())],
            "scale": str(self.scale),
        }


def fin_types(plan, key, space, leg_a, leg_b):
    """Count of fins of ``space`` per (edge of a, edge of b, relative orientation)."""
    u, w = key
    a, b = plan.a_star, plan.b_star
    out = Counter()
    for f in space.fins:
        ia, ib = leg_a.fin_map[f.id], leg_b.fin_map[f.id]
        ea, eb = a.attachment_of(u, ia.fin), b.attachment_of(w, ib.fin)
        eps = ia.direction * ib.direction * ea.sign * eb.sign
        out[(ea.id, eb.id, eps)] += 1
    return out


def closed_form_weights(a, b, class_of, spaces, lengths, colour_of, degrees, cyl_pairs):
    """The unscaled weights from sizes, lengths and densities of the first input.

    ``class_of(side, u)`` gives rigid class keys, ``spaces[(u, u')]`` the normalized
    rigid pair spaces, ``lengths[(e, e')]`` the common fin length over an edge pair,
    ``colour_of(e, o)`` the colour of an oriented edge of ``a``.
    """
    vol = a.volume
    rho_u = defaultdict(Fraction)
    for u, x in a.rigid.items():
        rho_u[class_of("a", u)] += Fraction(x.num_vertices, vol)
    rigid = {}
    for (u, w), space in spaces.items():
        rigid[(u, w)] = Fraction(a.rigid[u].num_vertices * b.rigid[w].num_vertices,
                                 1) / (rho_u[class_of("a", u)] * space.num_vertices)
    edge = {}
    cylinder = {}
    ident = {}
    for v, w, eps in cyl_pairs:
        vals = set()
        counts = Counter(colour_of(e, 1) for e in a.link(v))
        for e in a.link(v):
            for f in b.link(w):
                c = colour_of(e, 1)
                if b.rigid[f.rigid].colour(f.fin, eps * f.sign) != c:
                    continue
                x = a.rigid[e.rigid]
                L = lengths[(e.id, f.id)]
                val = Fraction(x.fin(e.fin).length * b.rigid[f.rigid].fin(f.fin).length,
                               1) / (L * density(x, c) * rho_u[class_of("a", e.rigid)])
                edge[(e.id, f.id, eps)] = val
                vals.add(counts[c] * val)
                ident[(v, w, eps, c)] = counts[c] * val
        if len(vals) != 1:
            raise NonPositiveSolution(f"cylinder weight for {v}, {w} depends on the colour")
        cylinder[(v, w, eps)] = vals.pop()
    for d in (rigid, edge, cylinder):
        for k, val in d.items():
            if val <= 0:
                raise NonPositiveSolution(f"weight {k} is not positive")
    return rigid, cylinder, edge, ident


def cylinder_identity_rhs(a, colour_of, degrees, v, w, eps):
    """|X| divided by the sum of d_v d_v' / d_v* over oriented cylinders of the same class."""
    def cls(x, o):
        return (a.cylinders[x].kind, tuple(sorted(Counter(colour_of(e, o) for e in a.link(x)).items())))
    target = cls(v, 1)
    tot = Fraction(0)
    for x in sorted(a.cylinders):
        for o in (1, -1):
            if cls(x, o) == target:
                tot += Fraction(degrees[("a", v)] * degrees[("b", w)], degrees[("a", x)])
    return Fraction(a.volume) / tot


def minimal_scale(values, divisors):
    """Least positive rational making every value integral and each cylinder weight divisible."""
    values = list(values)
    L = 1
    for q in values:
        L = lcm(L, q.denominator)
    g = 0
    for q in values:
        g = gcd(g, int(q * L))
    lam = Fraction(L, g)
    t = 1
    for val, n in divisors:
        m = int(val * lam)
        t = lcm(t, n // gcd(n, m))
    return lam * t


def solve_global_gluing(plan):
    a, b = plan.a_star, plan.b_star
    lengths = {}
    for v, w, eps in plan.cylinder_pairs:
        for e in a.link(v):
            for f in b.link(w):
                lengths[(e.id, f.id)] = plan.lengths[_fin_class(plan, a.rigid[e.rigid], e.fin)]
    spaces = {k: sp for k, (sp, _, _) in plan.normalized.items()}
    rigid, cyl, edge, ident = closed_form_weights(
        a, b, lambda s, u: plan.rigid_class[(s, u)], spaces, lengths,
        lambda e, o: edge_colour(plan, "a", e, o), plan.cyl_degree, plan.cylinder_pairs)
    for (v, w, eps, c), val in ident.items():
        rhs = cylinder_identity_rhs(a, lambda e, o: edge_colour(plan, "a", e, o), plan.cyl_degree, v, w, eps)
        if val != rhs:
            raise NonPositiveSolution(f"cylinder identity fails at {v}, {w}: {val} != {rhs}")
    divisors = [(val, link_map_count(plan, v, w, eps)) for (v, w, eps), val in cyl.items()]
    lam = minimal_scale(list(rigid.values()) + list(cyl.values()) + list(edge.values()), divisors)
    closed = {("rigid",) + k: x for k, x in rigid.items()}
    closed.update({("cylinder",) + k: x for k, x in cyl.items()})
    closed.update({("edge",) + k: x for k, x in edge.items()})
    w_ = Weights({k: int(x * lam) for k, x in rigid.items()},
                 {k: int(x * lam) for k, x in cyl.items()},
                 {k: int(x * lam) for k, x in edge.items()}, lam, closed)
    for key in sorted(plan.normalized):
        for t in fin_types(plan, key, *plan.normalized[key]):
            if t not in w_.edge:
                raise NonPositiveSolution(f"fins of type {t} have no matching cylinder pair")
    return w_


# --- witness ------------------------------------------------------------------------

@dataclass
class Witness:
    a: GraphOfSpaces
    b: GraphOfSpaces
    a_star: GraphOfSpaces
    b_star: GraphOfSpaces
    space: GraphOfSpaces
    leg_a: GosCover
    leg_b: GosCover
    weights: Weights
    pair_of: dict        # witness rigid vertex -> (u, u')
    cylinder_of: dict    # witness cylinder -> (v, v', eps)
    link_maps: dict      # witness cylinder -> link map tuple
    report: dict = field(default_factory=dict)


def assemble_witness(plan, weights):
    rigid, rmap_a, rmap_b, pair_of = {}, {}, {}, {}
    slots_fin = defaultdict(list)
    for key in sorted(plan.normalized):
        space, la, lb = plan.normalized[key]
        types_of = {}
        u, w = key
        for f in space.fins:
            ia, ib = la.fin_map[f.id], lb.fin_map[f.id]
            ea, eb = plan.a_star.attachment_of(u, ia.fin), plan.b_star.attachment_of(w, ib.fin)
            eps = ia.direction * ib.direction * ea.sign * eb.sign
            types_of[f.id] = ((ea.id, eb.id, eps), ia.direction * ea.sign)
        for k in range(weights.rigid[key]):
            name = f"r{len(rigid)}"
            rigid[name] = space
            rmap_a[name] = (u, la)
            rmap_b[name] = (w, lb)
            pair_of[name] = key
            for f in space.fins:
                t, sign = types_of[f.id]
                slots_fin[t].append((name, f.id, sign))

    cylinders, cmap_a, cmap_b, cyl_of, links = {}, {}, {}, {}, {}
    slots_cyl = defaultdict(list)
    for key in sorted(weights.cylinder):
        v, w, eps = key
        maps = enumerate_link_maps(plan, v, w, eps)
        for k in range(weights.cylinder[key]):
            name = f"s{len(cylinders)}"
            kind = plan.a.cylinders[v].kind
            cylinders[name] = Cylinder(name, kind)
            cmap_a[name] = (v, 1, plan.cyl_degree[("a", v)])
            cmap_b[name] = (w, eps, plan.cyl_degree[("b", w)])
            cyl_of[name] = key
            sigma = maps[k % len(maps)]
            links[name] = sigma
            for e, f in sigma:
                slots_cyl[(e, f, eps)].append(name)

    edges, emap_a, emap_b = [], {}, {}
    for t in sorted(set(slots_fin) | set(slots_cyl)):
        fins, cyls = slots_fin.get(t, []), slots_cyl.get(t, [])
        if len(fins) != len(cyls):
            raise PipelineError(f"gluing equation fails for edge type {t}: {len(fins)} fins, {len(cyls)} slots")
        for (r, fid, sign), s in zip(fins, cyls):
            h = f"h{len(edges)}"
            edges.append(Attachment(h, r, fid, s, sign))
            emap_a[h], emap_b[h] = t[0], t[1]
    space = GraphOfSpaces(rigid, cylinders, edges)
    leg_a = GosCover(space, plan.a_star, rmap_a, cmap_a, emap_a)
    leg_b = GosCover(space, plan.b_star, rmap_b, cmap_b, emap_b)
    return Witness(plan.a, plan.b, plan.a_star, plan.b_star, space, leg_a, leg_b, weights,
                   pair_of, cyl_of, links)


def commensurate(a, b, budget=12, seed=0):
    plan = match_structures(a, b)
    normalize_fin_lengths(plan, budget, seed)
    build_cyl_common_covers(plan)
    weights = solve_global_gluing(plan)
    wit = assemble_witness(plan, weights)
    wit.report = verify_witness(wit)
    return wit


# --- verification -------------------------------------------------------------------

def _same_structure(x, y):
    return x.graph == y.graph and x.fins == y.fins


def verify_witness(w):
    """Re-derives every property of the witness from its data; returns a report dict."""
    checks = {}

    def record(name, problems):
        checks[name] = {"ok": not problems, "problems": [str(p) for p in problems]}

    W, A, B = w.space, w.a_star, w.b_star
    rep = validate_gos(W, connected=False)
    record("structure", rep.violations)
    probs = []
    for orig, star in ((w.a, A), (w.b, B)):
        if sorted(orig.rigid) != sorted(star.rigid) or any(
                not _same_structure(orig.rigid[u], star.rigid[u]) for u in orig.rigid):
            probs.append("recoloured input does not match the original")
        if orig.edges != star.edges or orig.cylinders != star.cylinders:
            probs.append("recoloured input has different gluing data")
    record("inputs", probs)

    deg_a, pa = verify_gos_cover(w.leg_a)
    deg_b, pb = verify_gos_cover(w.leg_b)
    record("leg_a", pa)
    record("leg_b", pb)
    if deg_a is None or deg_b is None:
        checks["ok"] = False
        return {"ok": False, "checks": checks}

    probs = []
    if deg_a * A.volume != W.volume or deg_b * B.volume != W.volume:
        probs.append("global degrees do not match volumes")
    if W.euler_characteristic() != deg_a * A.euler_characteristic() or \
            W.euler_characteristic() != deg_b * B.euler_characteristic():
        probs.append("Euler characteristic is not multiplicative")
    record("degree", probs)

    # densities survive both legs, and rigid classes have equal weight on both sides
    probs = []
    for leg in (w.leg_a, w.leg_b):
        for r, (u, cm) in sorted(leg.rigid_map.items()):
            for c in sorted(cm.source.colour_set()):
                if density(cm.source, c) != density(cm.target, c):
                    probs.append(f"density of {c} changes over {r}")
    keys = _rigid_class_keys(A, B)
    rho = {s: defaultdict(Fraction) for s in SIDES}
    for s, g in (("a", A), ("b", B)):
        for u, x in g.rigid.items():
            rho[s][keys[(s, u)]] += Fraction(x.num_vertices, g.volume)
    if dict(rho["a"]) != dict(rho["b"]):
        probs.append("rigid class densities differ between the inputs")
    record("densities", probs)

    # link maps
    probs = []
    lk = {}
    for s in sorted(W.cylinders):
        v, oa, _ = w.leg_a.cylinder_map[s]
        v2, ob, _ = w.leg_b.cylinder_map[s]
        sigma = {}
        for h in W.link(s):
            sigma[w.leg_a.edge_map[h.id]] = w.leg_b.edge_map[h.id]
        if len(set(sigma.values())) != len(sigma) or sorted(sigma) != sorted(e.id for e in A.link(v)):
            probs.append(f"cylinder {s}: link map is not a bijection")
            continue
        for e, f in sigma.items():
            ea, fb = A.edge(e), B.edge(f)
            if A.rigid[ea.rigid].colour(ea.fin, oa * ea.sign) != B.rigid[fb.rigid].colour(fb.fin, ob * fb.sign):
                probs.append(f"cylinder {s}: link map does not preserve colours")
        lk[s] = (v, v2, oa * ob, tuple(sorted(sigma.items())))
    record("link_maps", probs)

    # counts from the witness
    n_rigid = Counter()
    spaces = {}
    for r in W.rigid:
        key = (w.leg_a.rigid_map[r][0], w.leg_b.rigid_map[r][0])
        n_rigid[key] += 1
        spaces.setdefault(key, W.rigid[r])
    n_cyl = Counter((v, v2, eps) for v, v2, eps, _ in lk.values())
    n_edge = Counter()
    fin_len = {}
    for h in W.edges:
        e, f = w.leg_a.edge_map[h.id], w.leg_b.edge_map[h.id]
        _, oa, _ = w.leg_a.cylinder_map[h.cylinder]
        _, ob, _ = w.leg_b.cylinder_map[h.cylinder]
        n_edge[(e, f, oa * ob)] += 1
        fin_len.setdefault((e, f), set()).add(W.rigid[h.rigid].fin(h.fin).length)
    probs = [f"fins over {k} have several lengths" for k, v in sorted(fin_len.items()) if len(v) != 1]
    lengths = {k: min(v) for k, v in fin_len.items()}

    deg = {}
    for s, (v, oa, d) in w.leg_a.cylinder_map.items():
        deg[("a", v)] = d
    for s, (v, ob, d) in w.leg_b.cylinder_map.items():
        deg[("b", v)] = d

    def colour_a(e, o):
        return A.rigid[e.rigid].colour(e.fin, o * e.sign)

    expected_pairs = [(u, x) for u in sorted(A.rigid) for x in sorted(B.rigid) if keys[("a", u)] == keys[("b", x)]]
    for key in expected_pairs:
        if key not in n_rigid:
            probs.append(f"rigid pair {key} has no copies")
    expected_cyl = sorted({(v, v2, eps) for v, v2, eps, _ in lk.values()})
    try:
        rigid_cf, cyl_cf, edge_cf, ident = closed_form_weights(
            A, B, lambda s, u: keys[(s, u)], spaces, lengths, colour_a, deg, expected_cyl)
    except (NonPositiveSolution, KeyError) as exc:
        record("weights", probs + [f"closed form unavailable: {exc}"])
        checks["ok"] = False
        return {"ok": False, "checks": checks}
    ratios = set()
    for k, x in rigid_cf.items():
        ratios.add(Fraction(n_rigid[k]) / x)
    for k, x in cyl_cf.items():
        ratios.add(Fraction(n_cyl[k]) / x)
    for k, x in edge_cf.items():
        ratios.add(Fraction(n_edge[k]) / x)
    if len(ratios) != 1:
        probs.append(f"copy counts are not one multiple of the closed form: {sorted(ratios)}")
    lam = ratios.pop() if len(ratios) == 1 else None
    if lam is not None and lam != w.weights.scale:
        probs.append(f"recorded scale {w.weights.scale} differs from {lam}")
    if set(n_edge) - set(edge_cf):
        probs.append("edges of unexpected type")
    record("weights", probs)

    # gluing equations from counts
    probs = []
    for key, space in sorted(spaces.items()):
        r = next(x for x in sorted(W.rigid) if (w.leg_a.rigid_map[x][0], w.leg_b.rigid_map[x][0]) == key)
        la, lb = w.leg_a.rigid_map[r][1], w.leg_b.rigid_map[r][1]
        types = Counter()
        for f in space.fins:
            ia, ib = la.fin_map[f.id], lb.fin_map[f.id]
            ea, eb = A.attachment_of(key[0], ia.fin), B.attachment_of(key[1], ib.fin)
            types[(ea.id, eb.id, ia.direction * ib.direction * ea.sign * eb.sign)] += 1
        for t, n in sorted(types.items()):
            if n_rigid[key] * n != n_edge[t]:
                probs.append(f"rigid gluing equation fails for {key} and {t}")
    for v, v2, eps in expected_cyl:
        counts = Counter(colour_a(e, 1) for e in A.link(v))
        for e in A.link(v):
            for f in B.link(v2):
                if B.rigid[f.rigid].colour(f.fin, eps * f.sign) == colour_a(e, 1):
                    if n_cyl[(v, v2, eps)] != counts[colour_a(e, 1)] * n_edge[(e.id, f.id, eps)]:
                        probs.append(f"cylinder gluing equation fails for {v}, {v2}, {e.id}, {f.id}")
        rev_counts = Counter(colour_a(e, -1) for e in A.link(v))
        if sorted(counts.values()) != sorted(rev_counts.values()):
            probs.append(f"orientation reversal changes multiplicities at {v}")
    record("gluing", probs)

    probs = []
    for (v, v2, eps, c), val in sorted(ident.items()):
        rhs = cylinder_identity_rhs(A, colour_a, deg, v, v2, eps)
        if val != rhs:
            probs.append(f"cylinder identity fails at {v}, {v2}: {val} != {rhs}")
    record("cylinder_identity", probs)

    ok = all(x["ok"] for x in checks.values())
    return {"ok": ok, "degrees": [deg_a, deg_b], "scale": str(lam) if lam is not None else None,
            "components": len(W.gamma().components()), "checks": checks}


def witness_component(w):
    """The component of the first rigid vertex with both restricted legs and their checks."""
    leg_a, leg_b = component_cover(w.leg_a), component_cover(w.leg_b)
    deg_a, pa = verify_gos_cover(leg_a)
    deg_b, pb = verify_gos_cover(leg_b)
    return leg_a.source, leg_a, leg_b, {"ok": not pa and not pb, "degrees": [deg_a, deg_b],
                                        "problems": pa + pb}
