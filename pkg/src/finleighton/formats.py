"""JSON encodings with versioned schema tags.

Every ``*_to_dict`` has a matching ``*_from_dict``; the decoders raise
:class:`ParseError` naming the offending field.
"""
from __future__ import annotations

import json
from fractions import Fraction

from .core import CoveringMap, FinGraphError, FinImage, Graph, GraphWithFins, Fin, fresh_colours, validate_gwf
from .gos import Attachment, Cylinder, GosCover, GraphOfSpaces, RawEdge, RawGog


class ParseError(ValueError):
    def __init__(self, message, where=""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


def loads(text, source="<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}", source)


def dumps(obj, pretty=False):
    return json.dumps(obj, sort_keys=True, indent=2 if pretty else None,
                      separators=None if pretty else (",", ":"))


def _need(d, key, where, kind=None):
    if not isinstance(d, dict):
        raise ParseError("expected an object", where)
    if key not in d:
        raise ParseError(f"missing field {key!r}", where)
    val = d[key]
    if kind is not None and not isinstance(val, kind):
        raise ParseError(f"field {key!r} has the wrong type", where)
    return val


def _check_schema(d, tag, where):
    got = d.get("schema", tag) if isinstance(d, dict) else None
    if got != tag:
        raise ParseError(f"expected schema {tag!r}, found {got!r}", where)


def _sign_key(fid, s):
    return f"{fid}:{'+' if s > 0 else '-'}"


def _parse_sign_key(k, where):
    fid, _, s = k.rpartition(":")
    if s not in "+-" or not s or not fid:
        raise ParseError(f"bad oriented fin key {k!r}", where)
    return fid, 1 if s == "+" else -1


# --- gwf.v1 ----------------------------------------------------------------

def gwf_to_dict(g):
    return {
        "schema": "gwf.v1",
        "vertices": list(g.graph.vertices),
        "edges": [{"id": e, "from": a, "to": b} for e, a, b in g.graph.edges],
        "fins": [{"id": f.id, "cycle": list(f.cycle)} for f in g.fins],
        "colours": {_sign_key(f, s): c for (f, s), c in sorted(g.colours.items())},
    }


def gwf_from_dict(d, where="gwf"):
    _check_schema(d, "gwf.v1", where)
    verts = _need(d, "vertices", where, list)
    edges = []
    for i, e in enumerate(_need(d, "edges", where, list)):
        w = f"{where}.edges[{i}]"
        edges.append((str(_need(e, "id", w)), str(_need(e, "from", w)), str(_need(e, "to", w))))
    fins = []
    for i, f in enumerate(_need(d, "fins", where, list)):
        w = f"{where}.fins[{i}]"
        cyc = _need(f, "cycle", w, list)
        for k, x in enumerate(cyc):
            if not isinstance(x, str) or x[-1:] not in ("+", "-"):
                raise ParseError(f"cycle entry {k} must be a signed edge id like 'e+'", w)
        fins.append(Fin(str(_need(f, "id", w)), tuple(cyc)))
    colours = d.get("colours")
    if colours is None:
        colours = fresh_colours(fins)
    else:
        if not isinstance(colours, dict):
            raise ParseError("field 'colours' must be an object", where)
        colours = {_parse_sign_key(k, f"{where}.colours"): str(v) for k, v in colours.items()}
    g = GraphWithFins(Graph(verts, edges), fins, colours)
    try:
        validate_gwf(g)
    except FinGraphError as exc:
        raise ParseError(str(exc), where)
    return g


# --- cover.v1 ----------------------------------------------------------------

def cover_maps_to_dict(cm):
    return {
        "vertex_map": dict(sorted(cm.vertex_map.items())),
        "dart_map": dict(sorted(cm.dart_map.items())),
        "fin_map": {f: {"fin": i.fin, "offset": i.offset, "degree": i.degree, "direction": i.direction}
                    for f, i in sorted(cm.fin_map.items())},
    }


def cover_to_dict(cm):
    out = {"schema": "cover.v1", "source": gwf_to_dict(cm.source), "target": gwf_to_dict(cm.target)}
    out.update(cover_maps_to_dict(cm))
    return out


def cover_maps_from_dict(d, source, target, where="cover"):
    fin_map = {}
    for f, img in _need(d, "fin_map", where, dict).items():
        w = f"{where}.fin_map.{f}"
        try:
            fin_map[f] = FinImage(str(_need(img, "fin", w)), int(_need(img, "offset", w)),
                                  int(_need(img, "degree", w)), int(_need(img, "direction", w)))
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), w)
    return CoveringMap(source, target, dict(_need(d, "vertex_map", where, dict)),
                       dict(_need(d, "dart_map", where, dict)), fin_map)


def cover_from_dict(d, source=None, target=None, where="cover"):
    _check_schema(d, "cover.v1", where)
    if source is None:
        source = gwf_from_dict(_need(d, "source", where), f"{where}.source")
    if target is None:
        target = gwf_from_dict(_need(d, "target", where), f"{where}.target")
    return cover_maps_from_dict(d, source, target, where)


# --- gos.v1 -------------------------------------------------------------------

def gos_to_dict(g):
    return {
        "schema": "gos.v1",
        "rigid": {u: gwf_to_dict(x) for u, x in sorted(g.rigid.items())},
        "cylinders": {v: {"kind": c.kind, "fibre": c.transverse_rank} for v, c in sorted(g.cylinders.items())},
        "edges": [{"id": a.id, "rigid": a.rigid, "fin": a.fin, "cylinder": a.cylinder, "sign": a.sign}
                  for a in g.edges],
    }


def gos_from_dict(d, where="gos"):
    _check_schema(d, "gos.v1", where)
    rigid = {u: gwf_from_dict(x, f"{where}.rigid.{u}") for u, x in _need(d, "rigid", where, dict).items()}
    cyl = {}
    for v, c in _need(d, "cylinders", where, dict).items():
        kind = c.get("kind", "circle") if isinstance(c, dict) else None
        if kind not in ("circle", "torus"):
            raise ParseError("cylinder kind must be 'circle' or 'torus'", f"{where}.cylinders.{v}")
        cyl[v] = Cylinder(v, kind, int(c.get("fibre", 1)))
    edges = []
    for i, a in enumerate(_need(d, "edges", where, list)):
        w = f"{where}.edges[{i}]"
        sign = a.get("sign", 1) if isinstance(a, dict) else None
        if sign not in (1, -1):
            raise ParseError("sign must be 1 or -1", w)
        edges.append(Attachment(str(_need(a, "id", w)), str(_need(a, "rigid", w)), str(_need(a, "fin", w)),
                                str(_need(a, "cylinder", w)), sign))
    return GraphOfSpaces(rigid, cyl, edges)


# --- rawgog.v1 ----------------------------------------------------------------

def rawgog_to_dict(raw):
    return {
        "schema": "rawgog.v1",
        "vertices": {v: {"vertices": list(g.vertices),
                         "edges": [{"id": e, "from": a, "to": b} for e, a, b in g.edges]}
                     for v, g in sorted(raw.vertices.items())},
        "edges": [{"id": e.id, "source": e.source, "target": e.target,
                   "source_loop": list(e.source_loop), "target_loop": list(e.target_loop)} for e in raw.edges],
    }


def rawgog_from_dict(d, where="rawgog"):
    _check_schema(d, "rawgog.v1", where)
    verts = {}
    for v, g in _need(d, "vertices", where, dict).items():
        w = f"{where}.vertices.{v}"
        edges = [(str(_need(e, "id", w)), str(_need(e, "from", w)), str(_need(e, "to", w)))
                 for e in _need(g, "edges", w, list)]
        graph = Graph(_need(g, "vertices", w, list), edges)
        if graph.problems():
            raise ParseError("; ".join(graph.problems()), w)
        verts[v] = graph
    edges = []
    for i, e in enumerate(_need(d, "edges", where, list)):
        w = f"{where}.edges[{i}]"
        edges.append(RawEdge(str(_need(e, "id", w)), str(_need(e, "source", w)), str(_need(e, "target", w)),
                             tuple(_need(e, "source_loop", w, list)), tuple(_need(e, "target_loop", w, list))))
    return RawGog(verts, edges)


# --- witness-fins.v1 -----------------------------------------------------------

def witness_fins_to_dict(res):
    return {
        "schema": "witness-fins.v1",
        "common": gwf_to_dict(res.common),
        "cover1": cover_maps_to_dict(res.cover1),
        "cover2": cover_maps_to_dict(res.cover2),
        "fin_equation": [e.as_dict() for e in res.fin_report],
        "degrees": [res.cover1.degree, res.cover2.degree],
        "ok": res.ok,
    }


# --- witness.v1 -----------------------------------------------------------------

def _leg_to_dict(leg):
    return {
        "rigid_map": {r: {"target": u, "cover": cover_maps_to_dict(cm)} for r, (u, cm) in sorted(leg.rigid_map.items())},
        "cylinder_map": {s: list(x) for s, x in sorted(leg.cylinder_map.items())},
        "edge_map": dict(sorted(leg.edge_map.items())),
    }


def _leg_from_dict(d, space, target, where):
    rigid_map = {}
    for r, x in _need(d, "rigid_map", where, dict).items():
        w = f"{where}.rigid_map.{r}"
        u = _need(x, "target", w)
        if r not in space.rigid or u not in target.rigid:
            raise ParseError("unknown rigid vertex", w)
        rigid_map[r] = (u, cover_maps_from_dict(_need(x, "cover", w), space.rigid[r], target.rigid[u], w))
    cyl = {s: (x[0], int(x[1]), int(x[2])) for s, x in _need(d, "cylinder_map", where, dict).items()}
    return GosCover(space, target, rigid_map, cyl, dict(_need(d, "edge_map", where, dict)))


def witness_to_dict(w):
    return {
        "schema": "witness.v1",
        "a": gos_to_dict(w.a),
        "b": gos_to_dict(w.b),
        "a_star": gos_to_dict(w.a_star),
        "b_star": gos_to_dict(w.b_star),
        "space": gos_to_dict(w.space),
        "leg_a": _leg_to_dict(w.leg_a),
        "leg_b": _leg_to_dict(w.leg_b),
        "weights": w.weights.as_dict(),
        "pair_of": {r: list(k) for r, k in sorted(w.pair_of.items())},
        "cylinder_of": {s: list(k) for s, k in sorted(w.cylinder_of.items())},
        "link_maps": {s: [list(p) for p in sig] for s, sig in sorted(w.link_maps.items())},
        "report": w.report,
    }


def witness_from_dict(d, where="witness"):
    from .pipeline import Weights, Witness

    _check_schema(d, "witness.v1", where)
    a = gos_from_dict(_need(d, "a", where), f"{where}.a")
    b = gos_from_dict(_need(d, "b", where), f"{where}.b")
    a_star = gos_from_dict(_need(d, "a_star", where), f"{where}.a_star")
    b_star = gos_from_dict(_need(d, "b_star", where), f"{where}.b_star")
    space = gos_from_dict(_need(d, "space", where), f"{where}.space")
    leg_a = _leg_from_dict(_need(d, "leg_a", where), space, a_star, f"{where}.leg_a")
    leg_b = _leg_from_dict(_need(d, "leg_b", where), space, b_star, f"{where}.leg_b")
    wd = _need(d, "weights", where, dict)
    try:
        weights = Weights({(u, x): n for u, x, n in wd.get("rigid", [])},
                          {(v, x, s): n for v, x, s, n in wd.get("cylinder", [])},
                          {(e, f, s): n for e, f, s, n in wd.get("edge", [])},
                          Fraction(_need(wd, "scale", f"{where}.weights")), {})
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), f"{where}.weights")
    return Witness(a, b, a_star, b_star, space, leg_a, leg_b, weights,
                   {r: tuple(k) for r, k in d.get("pair_of", {}).items()},
                   {s: tuple(k) for s, k in d.get("cylinder_of", {}).items()},
                   {s: tuple(tuple(p) for p in sig) for s, sig in d.get("link_maps", {}).items()},
                   d.get("report", {}))
