"""Batch command-line front end.

Exit codes: 0 ok, 2 parse error, 3 validity failure, 4 validity unknown
(pass --assume-valid to downgrade to a warning).
"""

from __future__ import annotations

import argparse
import json
import sys

from bsw import construct as C
from bsw import dioph
from bsw import fixtures as FX
from bsw import specfile as SF
from bsw import testseq as TS
from bsw.tower import ValidityError, ValidityUnknown
from bsw.words import WordSyntaxError

EXIT_PARSE = 2
EXIT_VALIDITY = 3
EXIT_UNKNOWN = 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _load_spec(path, assume_valid):
    try:
        data = SF.read_json(path)
    except FileNotFoundError as e:
        raise CliError(EXIT_PARSE, str(e)) from None
    except json.JSONDecodeError as e:
        raise CliError(EXIT_PARSE, f"{path}: {e}") from None
    try:
        return SF.load_tower(data, assume_valid=assume_valid)
    except (SF.SpecError, WordSyntaxError, KeyError, TypeError) as e:
        raise CliError(EXIT_PARSE, f"{path}: {e}") from None
    except ValidityUnknown as e:
        raise CliError(EXIT_UNKNOWN,
                       f"{path}: {e} (re-run with --assume-valid)") from None
    except ValidityError as e:
        raise CliError(EXIT_VALIDITY, f"{path}: {e}") from None


def _embeddings(tower_extras, path):
    if path:
        try:
            return SF.parse_closures(SF.read_json(path))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise CliError(EXIT_PARSE, f"{path}: {e}") from None
    emb, names = tower_extras["closures"]
    if not emb:
        raise CliError(EXIT_PARSE, "no closure embeddings given "
                       "(spec section 'closures' or --embeddings)")
    return emb, names


def cmd_build(args):
    t, extras = _load_spec(args.spec, args.assume_valid)
    print(t.summary())
    return 0


def cmd_present(args):
    t, extras = _load_spec(args.spec, args.assume_valid)
    level = args.level if args.level is not None else t.height
    try:
        print(t.presentation_at(level))
    except IndexError as e:
        raise CliError(EXIT_PARSE, str(e)) from None
    return 0


def cmd_twin(args):
    t, extras = _load_spec(args.spec, args.assume_valid)
    try:
        tw = C.twin_tower(t, extras["twin_names"],
                          assume_valid=args.assume_valid)
    except ValidityUnknown as e:
        raise CliError(EXIT_UNKNOWN, str(e)) from None
    except ValidityError as e:
        raise CliError(EXIT_VALIDITY, str(e)) from None
    print(tw.result.top)
    print(f"case: {tw.case}")
    for fid in sorted({min(k, v) for k, v in tw.twin_map.items()}):
        print(f"twin: {fid} <-> {tw.twin_map[fid]}")
    return 0


def cmd_closure(args):
    t, extras = _load_spec(args.spec, args.assume_valid)
    emb, names = _embeddings(extras, args.embeddings)
    try:
        cl = C.tower_closure(t, emb, names)
    except ValidityError as e:
        raise CliError(EXIT_VALIDITY, str(e)) from None
    print(cl.top)
    for fid in sorted(emb):
        coset = dioph.system_to_coset(dioph.embedding_to_system(emb[fid]))
        print(f"coset {fid}: {coset}")
    return 0


def cmd_symmetrize(args):
    t, extras = _load_spec(args.spec, args.assume_valid)
    emb, names = _embeddings(extras, args.embeddings)
    try:
        tw = C.twin_tower(t, extras["twin_names"],
                          assume_valid=args.assume_valid)
        # closures declared on the original flats symmetrize against their twins
        full = dict(emb)
        for fid, e in emb.items():
            twin = tw.twin_map.get(fid)
            if twin and twin not in full:
                full[twin] = dioph.ClosureEmbedding(e.rank, e.peg_col, e.matrix)
        cl, sym, report = C.symmetric_closure(tw, full, names)
    except ValidityUnknown as e:
        raise CliError(EXIT_UNKNOWN, str(e)) from None
    except ValidityError as e:
        raise CliError(EXIT_VALIDITY, str(e)) from None
    print(cl.top)
    for fid, twin, u1, u2, common in report:
        print(f"pair {fid} ~ {twin}: U was {_lat(u1)}, Uhat was {_lat(u2)}, "
              f"symmetrized to {_lat(common)}")
        if len(common) == 1:
            print(f"U = Uhat = {common[0][0]}Z")
    return 0


def _lat(rows):
    return "[" + ";".join(",".join(str(x) for x in r) for r in rows) + "]"


def cmd_complete(args):
    try:
        data = SF.read_json(args.gadfile)
        cfg = SF.load_gad(data)
    except (json.JSONDecodeError, SF.SpecError, KeyError,
            WordSyntaxError) as e:
        raise CliError(EXIT_PARSE, f"{args.gadfile}: {e}") from None
    try:
        res = C.completion(cfg["gad"], cfg["eta"], cfg["target"],
                           cfg["filtration"], cfg["base_vertex"],
                           cfg["fresh_names"], cfg["case_overrides"])
    except ValidityUnknown as e:
        raise CliError(EXIT_UNKNOWN, str(e)) from None
    except ValidityError as e:
        raise CliError(EXIT_VALIDITY, str(e)) from None
    print(res.comp_pres)
    for c in res.cases:
        print(f"case {c}")
    for name in res.embedding.source.names:
        print(f"embed {name} -> {res.embedding.images[name]}")
    for note in res.checks:
        print(f"check {note}")
    return 0


def cmd_testseq(args):
    t, extras = _load_spec(args.spec, args.assume_valid)
    schedule = extras["schedule"]
    ordering = extras["ordering"]
    try:
        if any(f.kind == "surface" for f in t.flats):
            point = TS.gen_surface_point(t, args.n, args.seed, schedule)
        else:
            point = TS.gen_sequence_point(t, ordering, schedule, args.n,
                                          args.seed)
    except (ValueError, AssertionError) as e:
        raise CliError(EXIT_VALIDITY, str(e)) from None
    if point.heuristic:
        print(f"# heuristic point, n={args.n}")
    for name in t.top.names:
        print(f"{name} = {point.morphism(t.top.basis.gen(name))}")
    return 0


def cmd_extend(args):
    t, extras = _load_spec(args.spec, args.assume_valid)
    emb, _names = _embeddings(extras, args.embeddings)
    fid = args.flat or sorted(emb)[0]
    if fid not in emb:
        raise CliError(EXIT_PARSE, f"no closure embedding for flat {fid}")
    try:
        p = tuple(int(x) for x in args.p.split(","))
    except ValueError:
        raise CliError(EXIT_PARSE, f"bad exponent tuple {args.p!r}") from None
    e = emb[fid]
    if len(p) != e.rank:
        raise CliError(EXIT_PARSE,
                       f"expected {e.rank} exponents, got {len(p)}")
    ok, y = C.closure_extends(e, p)
    if ok:
        ytxt = str(y[0]) if len(y) == 1 else "(" + ",".join(map(str, y)) + ")"
        print(f"extends, y={ytxt}")
    else:
        coset = dioph.system_to_coset(dioph.embedding_to_system(e))
        print(f"does not extend, coset {coset}")
    return 0


def cmd_oracle(args):
    t, extras = _load_spec(args.spec, args.assume_valid)
    try:
        w = t.top.word(args.word)
    except (WordSyntaxError, IndexError) as e:
        raise CliError(EXIT_PARSE, str(e)) from None
    verd = t.verdict(w)
    if verd.is_unknown:
        verd = TS.limit_oracle(t, w, args.budget, args.seed,
                               extras["schedule"])
    else:
        verd = TS.attach_witness(t, w, verd, args.budget, args.seed,
                                 extras["schedule"])
    print(verd.serialize())
    return 0


def cmd_verify_fixtures(args):
    passed, failed, lines = FX.verify_fixtures()
    for line in lines:
        print(line)
    print(f"{passed} passed, {failed} failed")
    return 0 if failed == 0 else 1


def make_parser():
    ap = argparse.ArgumentParser(
        prog="bsw",
        description="towers over free groups: construction, twins, closures, "
                    "completions, and test sequences")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(fn=fn)
        p.add_argument("--assume-valid", action="store_true",
                       help="accept Unknown validity verdicts with a warning")
        return p

    p = add("build", cmd_build, help="build a tower and print its summary")
    p.add_argument("spec")
    p = add("present", cmd_present, help="print a level presentation")
    p.add_argument("spec")
    p.add_argument("--level", type=int, default=None)
    p = add("twin", cmd_twin, help="construct the twin tower")
    p.add_argument("spec")
    p = add("closure", cmd_closure, help="close abelian flats")
    p.add_argument("spec")
    p.add_argument("--embeddings", default=None)
    p = add("symmetrize", cmd_symmetrize,
            help="symmetric closure of the twin tower")
    p.add_argument("spec")
    p.add_argument("--embeddings", default=None)
    p = add("complete", cmd_complete, help="completion of a GAD file")
    p.add_argument("gadfile")
    p = add("testseq", cmd_testseq, help="emit one test-sequence point")
    p.add_argument("spec")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p = add("extend", cmd_extend,
            help="decide the closure extension criterion")
    p.add_argument("spec")
    p.add_argument("--p", required=True, help="comma-separated peg exponents")
    p.add_argument("--flat", default=None)
    p.add_argument("--embeddings", default=None)
    p = add("oracle", cmd_oracle, help="word-problem verdict for a word")
    p.add_argument("spec")
    p.add_argument("--word", required=True)
    p.add_argument("--budget", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    add("verify-fixtures", cmd_verify_fixtures,
        help="re-check the packaged worked examples")
    return ap


def main(argv=None):
    ap = make_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
