"""Command-line interface: ``finleighton <command> [files] [flags]``.

Output is JSON on stdout; exit codes are 0 success, 1 verification failure,
2 malformed input, 3 no matching, 4 budget exhausted.
"""
from __future__ import annotations

import argparse
import random
import sys

from . import formats as F
from .core import FinGraphError, component_of, densities, validate_gwf, verify_covering
from .gos import balanced, cylinder_numbers, densities as gos_densities, flip_identity_failures
from .gos import gos_colouring, stretch_ratio, validate_gos, InconsistentClassDensity
from .leighton import LeightonError, NoAdmissiblePairs, TransitivityFailure, common_cover
from .local_types import canonical_colours, refine_local_types, same_universal_cover
from .pipeline import BudgetExhausted, NoMatching, PipelineError, commensurate, verify_witness, witness_component
from .words import parse_word, random_reduced_word, rigidity_sufficient

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_NOMATCH, EXIT_BUDGET = 0, 1, 2, 3, 4


class Abort(Exception):
    def __init__(self, code, payload):
        super().__init__(payload)
        self.code, self.payload = code, payload


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise F.ParseError(f"cannot read file: {exc.strerror}", path)
    return F.loads(text, path)


def _gwf(path, args):
    g = F.gwf_from_dict(_read(path), path)
    if args.component:
        g = component_of(g, g.graph.vertices[0])
    return g


def _schema(d):
    return d.get("schema") if isinstance(d, dict) else None


# --- commands ------------------------------------------------------------------

def cmd_validate(args):
    d = _read(args.files[0])
    tag = _schema(d)
    if tag == "gwf.v1":
        g = F.gwf_from_dict(d, args.files[0])
        try:
            validate_gwf(g, connected=True)
            return EXIT_OK, {"schema": tag, "ok": True, "violations": []}
        except FinGraphError as exc:
            return EXIT_FAIL, {"schema": tag, "ok": False, "violations": [str(exc)]}
    if tag == "gos.v1":
        rep = validate_gos(F.gos_from_dict(d, args.files[0]))
        return (EXIT_OK if rep.ok else EXIT_FAIL), dict(schema=tag, **rep.as_dict())
    if tag == "rawgog.v1":
        from .gos import validate_raw
        try:
            validate_raw(F.rawgog_from_dict(d, args.files[0]))
        except ValueError as exc:
            return EXIT_FAIL, {"schema": tag, "ok": False, "violations": [str(exc)]}
        return EXIT_OK, {"schema": tag, "ok": True, "violations": []}
    if tag == "cover.v1":
        rep = verify_covering(F.cover_from_dict(d, where=args.files[0]))
        return (EXIT_OK if rep.ok else EXIT_FAIL), dict(schema=tag, **rep.as_dict())
    raise F.ParseError(f"unknown schema {tag!r}", args.files[0])


def cmd_density(args):
    d = _read(args.files[0])
    if _schema(d) == "gos.v1":
        g = F.gos_from_dict(d, args.files[0])
        try:
            rep = gos_densities(g)
        except InconsistentClassDensity as exc:
            return EXIT_FAIL, {"ok": False, "error": str(exc)}
        return (EXIT_OK if rep.ok else EXIT_FAIL), rep.as_dict()
    g = F.gwf_from_dict(d, args.files[0])
    return EXIT_OK, {"vertices": g.num_vertices,
                     "density": {c: str(x) for c, x in densities(g).items()}}


def cmd_cover_check(args):
    if len(args.files) == 3:
        src, tgt = _gwf(args.files[0], args), _gwf(args.files[1], args)
        cm = F.cover_from_dict(_read(args.files[2]), src, tgt, args.files[2])
    else:
        cm = F.cover_from_dict(_read(args.files[0]), where=args.files[0])
    rep = verify_covering(cm)
    return (EXIT_OK if rep.ok else EXIT_FAIL), rep.as_dict()


def cmd_univ_eq(args):
    a, b = _gwf(args.files[0], args), _gwf(args.files[1], args)
    v = same_universal_cover(a, b)
    return (EXIT_OK if v else EXIT_FAIL), {"same_universal_cover": v.compatible, "witness": v.witness}


def cmd_colours(args):
    gs = [_gwf(p, args) for p in args.files]
    t = refine_local_types(gs, use_colours=False)
    lab = canonical_colours(gs, table=t)
    return EXIT_OK, {
        "schema": "types.v1",
        "rounds": t.rounds,
        "vertex_types": {f"{i}:{v}": x for (i, v), x in sorted(t.vertex_type.items())},
        "fin_labels": {f"{i}:{f}:{'+' if s > 0 else '-'}": x for (i, f, s), x in sorted(lab.items())},
    }


def cmd_common_cover(args):
    a, b = _gwf(args.files[0], args), _gwf(args.files[1], args)
    try:
        res = common_cover(a, b)
    except (NoAdmissiblePairs, TransitivityFailure) as exc:
        raise Abort(EXIT_NOMATCH, {"ok": False, "error": str(exc)})
    except LeightonError as exc:
        raise Abort(EXIT_FAIL, {"ok": False, "error": str(exc)})
    return (EXIT_OK if res.ok else EXIT_FAIL), F.witness_fins_to_dict(res)


def cmd_balanced(args):
    raw = F.rawgog_from_dict(_read(args.files[0]), args.files[0])
    try:
        v = balanced(raw)
    except ValueError as exc:
        raise F.ParseError(str(exc), args.files[0])
    return (EXIT_OK if v.balanced else EXIT_FAIL), v.as_dict()


def cmd_invariants(args):
    g = F.gos_from_dict(_read(args.files[0]), args.files[0])
    rep = validate_gos(g)
    if not rep.ok:
        return EXIT_FAIL, {"ok": False, "violations": rep.violations}
    col = gos_colouring(g)
    t = cylinder_numbers(g, col)
    flips = flip_identity_failures(g, col)
    try:
        dens = gos_densities(g, col).as_dict()
    except InconsistentClassDensity as exc:
        dens = {"ok": False, "error": str(exc)}
    ok = not flips and dens["ok"]
    return (EXIT_OK if ok else EXIT_FAIL), {
        "ok": ok,
        "cylinder_numbers": [[v, o, c, n] for (v, o, c), n in sorted(t.items())],
        "flip_identity_failures": [list(x) for x in flips],
        "stretch_ratios": {v: stretch_ratio(g, v) for v in sorted(g.cylinders)},
        "densities": dens,
    }


def cmd_rigidity(args):
    if args.sample:
        if args.seed is None:
            raise F.ParseError("--sample requires --seed", "rigidity")
        rng = random.Random(args.seed)
        hits = sum(rigidity_sufficient(args.rank, [random_reduced_word(args.rank, args.length, rng)]) == "Sufficient"
                   for _ in range(args.sample))
        return EXIT_OK, {"rank": args.rank, "length": args.length, "samples": args.sample,
                         "sufficient": hits, "fraction": hits / args.sample, "seed": args.seed}
    if not args.files:
        raise F.ParseError("no words given", "rigidity")
    try:
        words = [parse_word(w) for w in args.files]
        verdict = rigidity_sufficient(args.rank, words)
    except ValueError as exc:
        raise F.ParseError(str(exc), "rigidity")
    return (EXIT_OK if verdict == "Sufficient" else EXIT_FAIL), {"rank": args.rank, "verdict": verdict}


def cmd_commensurate(args):
    a = F.gos_from_dict(_read(args.files[0]), args.files[0])
    b = F.gos_from_dict(_read(args.files[1]), args.files[1])
    try:
        w = commensurate(a, b, budget=args.budget, seed=args.seed or 0)
    except NoMatching as exc:
        raise Abort(EXIT_NOMATCH, {"ok": False, "error": "NoMatching", "diagnostic": str(exc)})
    except BudgetExhausted as exc:
        raise Abort(EXIT_BUDGET, {"ok": False, "error": "BudgetExhausted", "message": str(exc),
                                  "partial": exc.partial})
    except PipelineError as exc:
        raise Abort(EXIT_FAIL, {"ok": False, "error": type(exc).__name__, "message": str(exc)})
    out = F.witness_to_dict(w)
    if args.component:
        space, la, lb, rep = witness_component(w)
        out["component"] = {"space": F.gos_to_dict(space), "report": rep}
    return (EXIT_OK if w.report["ok"] else EXIT_FAIL), out


def cmd_verify_witness(args):
    w = F.witness_from_dict(_read(args.files[0]), args.files[0])
    rep = verify_witness(w)
    return (EXIT_OK if rep["ok"] else EXIT_FAIL), rep


COMMANDS = {
    "validate": (cmd_validate, 1),
    "density": (cmd_density, 1),
    "cover-check": (cmd_cover_check, None),
    "univ-eq": (cmd_univ_eq, 2),
    "colours": (cmd_colours, None),
    "common-cover": (cmd_common_cover, 2),
    "balanced": (cmd_balanced, 1),
    "invariants": (cmd_invariants, 1),
    "rigidity": (cmd_rigidity, None),
    "commensurate": (cmd_commensurate, 2),
    "verify-witness": (cmd_verify_witness, 1),
}


def parser():
    p = argparse.ArgumentParser(prog="finleighton", description="Common covers of graphs with fins.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("files", nargs="*", help="input files (words for 'rigidity')")
    p.add_argument("--budget", type=int, default=12, help="degree budget for the unwrapping search")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--component", action="store_true", help="work with a single connected component")
    p.add_argument("--pretty", action="store_true", help="human-readable output")
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--sample", type=int, default=0, help="rigidity: number of random words")
    p.add_argument("--length", type=int, default=200, help="rigidity: length of random words")
    return p


def _table(obj, prefix=""):
    if isinstance(obj, dict):
        rows = []
        for k in sorted(obj, key=str):
            rows += _table(obj[k], f"{prefix}.{k}" if prefix else str(k))
        return rows or [(prefix, "{}")]
    if isinstance(obj, list) and obj and all(isinstance(x, (dict, list)) for x in obj):
        rows = []
        for i, x in enumerate(obj):
            rows += _table(x, f"{prefix}[{i}]")
        return rows
    return [(prefix, F.dumps(obj))]


def render(payload, pretty=False):
    if not pretty:
        return F.dumps(payload)
    rows = _table(payload)
    width = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def run(argv=None, out=None):
    out = out or sys.stdout
    args = parser().parse_args(argv)
    fn, arity = COMMANDS[args.command]
    try:
        if arity is not None and len(args.files) != arity:
            raise F.ParseError(f"expected {arity} input file(s), got {len(args.files)}", args.command)
        code, payload = fn(args)
    except F.ParseError as exc:
        code, payload = EXIT_PARSE, {"ok": False, "error": "ParseError", "message": str(exc)}
    except Abort as exc:
        code, payload = exc.code, exc.payload
    out.write(render(payload, args.pretty) + "\n")
    return code


def main():
    sys.exit(run())
