"""Command-line entry point.

Machine-readable JSON goes to stdout, diagnostics to stderr.  Exit codes:

    0  success (``check``: admissible; ``compare``: Unknown)
    1  negative verdict (not admissible, bijection violation, geometry failure)
    2  usage error or invalid input document
    3  ``compare``: classes are distinct
    4  node cap exceeded
    5  I/O error
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

from . import admissibility, geometry, generators, invariants
from .core import NodeCapExceeded, SchemaError, load_system, save_system, stage
from .sequences import parse_spec

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_DISTINCT, EXIT_CAP, EXIT_IO = range(6)


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _note(msg: str) -> None:
    sys.stderr.write(msg + "\n")


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def cmd_generate(args) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            if args.kind == "antoine":
                ps = generators.antoine_chain(args.k)
            elif args.kind == "from-target":
                ps = generators.antoine_from_target(parse_spec(args.l))
            elif args.kind == "bing":
                ps = generators.bing_pattern()
            else:
                ps = generators.whitehead_pattern()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    save_system(ps, args.output)
    notes = [str(w.message) for w in caught]
    for n in notes:
        _note(f"warning: {n}")
    out = {"output": args.output, "roots": len(ps.roots), "patterns": sorted(ps.patterns), "warnings": notes}
    if args.kind in ("bing", "whitehead"):
        out["slice_provenance"] = (
            generators.BING_PROVENANCE if args.kind == "bing" else generators.WHITEHEAD_PROVENANCE
        )
    _emit(out)
    return EXIT_OK


def _status_depth(ps) -> int:
    pre, per = ps.rule_window()
    return pre + per + 1


def cmd_invariants(args) -> int:
    ps = load_system(args.file)
    counts = invariants.component_counts(ps)
    lseq = invariants.mod2_linking_sequence(ps)
    nu = invariants.nu(invariants.FormalClass.of(ps))
    report = admissibility.check_admissible(ps, _status_depth(ps))
    status = "admissible" if report.overall else "raw L, invariance not asserted"
    _emit({
        "counts": counts.to_json(args.terms),
        "L": {**lseq.to_json(), "terms": lseq.take(args.terms)},
        "nu": {**nu.to_json(), "terms": nu.take(args.terms)},
        "L_status": status,
    })
    _note(f"L = {lseq}  ({status})")
    return EXIT_OK


def cmd_check(args) -> int:
    if args.depth < 1:
        raise UsageError("--depth must be >= 1")
    ps = load_system(args.file)
    report = admissibility.check_admissible(ps, args.depth)
    _emit(report.to_json())
    _note("admissible (modulo assumptions)" if report.overall else "not admissible")
    return EXIT_OK if report.overall else EXIT_NEGATIVE


def cmd_compare(args) -> int:
    a = invariants.parse_class(_read(args.a))
    b = invariants.parse_class(_read(args.b))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        verdict = invariants.distinguish(a, b)
    for w in caught:
        _note(f"warning: {w.message}")
    _emit(verdict.to_json())
    return EXIT_DISTINCT if verdict.distinct else EXIT_OK


def cmd_bijection(args) -> int:
    try:
        rel = admissibility.parse_relation(_read(args.rel))
        c = stage(load_system(args.c), rel.stage)
        d = stage(load_system(args.d), rel.stage)
        result = admissibility.verify_component_bijection(c, d, rel)
    except admissibility.MalformedRelation as exc:
        raise UsageError(f"malformed nesting relation: {exc}") from None
    _emit(result.to_json())
    if isinstance(result, admissibility.Violation):
        _note(f"violation by rule ({result.rule}), {result.clause}")
        return EXIT_NEGATIVE
    _note(f"certified bijection of {len(result.matching)} components")
    return EXIT_OK


def cmd_geom(args) -> int:
    ps = load_system(args.file)
    try:
        emb = geometry.embed_antoine(ps, args.depth, shrink=args.shrink, tube_ratio=args.tube)
    except geometry.EmbeddingError as exc:
        _emit({"error": "overlap", "pair": list(exc.pair), "detail": str(exc)})
        _note(f"embedding failed: {exc}")
        return EXIT_NEGATIVE
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out: dict = {"tori": len(emb.placements), "shrink": args.shrink, "tube_ratio": args.tube}
    code = EXIT_OK
    if args.certify:
        report = geometry.certify_geometry(emb.placements, emb.links)
        out["certification"] = report
        if not report["passed"]:
            code = EXIT_NEGATIVE
        _note("certification " + ("passed" if report["passed"] else "FAILED"))
    if args.obj:
        geometry.export_obj(emb.placements, args.obj)
        out["obj"] = args.obj
    if args.placements:
        geometry.save_placements(emb.placements, args.placements)
        out["placements"] = args.placements
    _emit(out)
    return code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="defseq", description="Toroidal defining sequences: invariants, admissibility, geometry.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a generated pattern system")
    gsub = g.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    ga = gsub.add_parser("antoine", help="Antoine necklace of k-chains")
    ga.add_argument("--k", type=int, required=True)
    gt = gsub.add_parser("from-target", help="Antoine system with prescribed mod-2 sequence")
    gt.add_argument("--l", required=True, metavar="SPEC", help="e.g. 'pre:0;per:1,0'")
    gsub.add_parser("bing")
    gsub.add_parser("whitehead")
    for sp in gsub.choices.values():
        sp.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("invariants", help="component counts, L and nu")
    i.add_argument("file")
    i.add_argument("--terms", type=int, default=invariants.PREFIX_LENGTH)
    i.set_defaults(func=cmd_invariants)

    c = sub.add_parser("check", help="admissibility report")
    c.add_argument("file")
    c.add_argument("--depth", type=int, default=4)
    c.set_defaults(func=cmd_check)

    cmp_ = sub.add_parser("compare", help="try to distinguish two classes")
    cmp_.add_argument("a")
    cmp_.add_argument("b")
    cmp_.set_defaults(func=cmd_compare)

    b = sub.add_parser("bijection", help="verify a component bijection")
    b.add_argument("c")
    b.add_argument("d")
    b.add_argument("rel")
    b.set_defaults(func=cmd_bijection)

    ge = sub.add_parser("geom", help="embed, certify and export")
    ge.add_argument("file")
    ge.add_argument("--depth", type=int, required=True)
    ge.add_argument("--shrink", type=float, default=0.22)
    ge.add_argument("--tube", type=float, default=0.35)
    ge.add_argument("--certify", action="store_true")
    ge.add_argument("--obj", metavar="OUT.obj")
    ge.add_argument("--placements", metavar="OUT.json")
    ge.set_defaults(func=cmd_geom)
    return p


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "terms", 1) < 1:
            raise UsageError("--terms must be >= 1")
        return args.func(args)
    except UsageError as exc:
        _note(f"usage error: {exc}")
        return EXIT_USAGE
    except SchemaError as exc:
        _note(f"invalid document: {exc}")
        return EXIT_USAGE
    except NodeCapExceeded as exc:
        _note(f"resource limit: {exc}")
        return EXIT_CAP
    except OSError as exc:
        _note(f"I/O error: {exc}")
        return EXIT_IO
    except ValueError as exc:
        _note(f"usage error: {exc}")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
