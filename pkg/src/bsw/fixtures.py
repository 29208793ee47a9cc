"""Packaged worked-example fixtures and their verification suite.

``BSW_FIXTURES`` overrides the fixture directory.  Each fixture file carries
the expected canonical outputs it is checked against.
"""

from __future__ import annotations

import os
from pathlib import Path

from bsw import construct as C
from bsw import specfile as SF
from bsw import testseq as TS


def fixture_dir() -> Path:
    override = os.environ.get("BSW_FIXTURES")
    if override:
        return Path(override)
    return Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    p = fixture_dir() / name
    if not p.exists():
        raise FileNotFoundError(f"no fixture {name} in {fixture_dir()}")
    return p


def load_fixture(name: str):
    return SF.read_json(str(fixture_path(name)))


def verify_fixtures():
    """Run every packaged check; returns (passed, failed, lines)."""
    lines = []
    passed = failed = 0

    def check(label, ok, detail=""):
        nonlocal passed, failed
        if ok:
            passed += 1
            lines.append(f"ok   {label}")
        else:
            failed += 1
            lines.append(f"FAIL {label}: {detail}")

    for name in ("abelian_tower.json", "nonabelian_tower.json"):
        data = load_fixture(name)
        t, extras = SF.load_tower(data)
        exp = extras["expected"]
        for lvl in (1, 2):
            got = str(t.presentation_at(lvl))
            check(f"{data['name']} level {lvl}", got == exp[f"level{lvl}"],
                  got)
        tw = C.twin_tower(t, extras["twin_names"])
        got = str(tw.result.top)
        check(f"{data['name']} twin presentation", got == exp["twin"], got)
        check(f"{data['name']} twin floors",
              tw.result.height == exp["twin_floors"],
              str(tw.result.height))
        if "twin_pegs" in exp:
            pegs = [str(f.peg) for f in tw.result.flats
                    if f.kind == "abelian"]
            check(f"{data['name']} twin pegs", pegs == exp["twin_pegs"],
                  str(pegs))

    data = load_fixture("closure_example.json")
    t, extras = SF.load_tower(data)
    exp = extras["expected"]
    check("closure-example level 1",
          str(t.presentation_at(1)) == exp["level1"], str(t.presentation_at(1)))
    embeddings, a_names = extras["closures"]
    cl = C.tower_closure(t, embeddings, a_names)
    check("closure-example closure", str(cl.top) == exp["closure"],
          str(cl.top))
    emb = embeddings["flat1"]
    bad = []
    for p in exp["extends"]:
        if not C.closure_extends(emb, (p,))[0]:
            bad.append(p)
    for p in exp["not_extends"]:
        if C.closure_extends(emb, (p,))[0]:
            bad.append(p)
    check("closure-example extension criterion", not bad, str(bad))

    data = load_fixture("pure_abelian.json")
    t, extras = SF.load_tower(data)
    check("pure-abelian level 2",
          str(t.presentation_at(2)) == extras["expected"]["level2"],
          str(t.presentation_at(2)))
    pt = TS.gen_sequence_point(t, n=5)
    ok, rep = TS.verify_point(t, pt)
    check("pure-abelian sequence point n=5", ok,
          "; ".join(f"{nm}:{okc}" for nm, okc, _ in rep if not okc))

    for name in ("completion_trivial.json", "completion_abelian.json",
                 "completion_surface.json"):
        data = load_fixture(name)
        cfg = SF.load_gad(data)
        res = C.completion(cfg["gad"], cfg["eta"], cfg["target"],
                           cfg["filtration"], cfg["base_vertex"],
                           cfg["fresh_names"], cfg["case_overrides"])
        exp = cfg["expected"]
        check(f"{data['name']} presentation",
              str(res.comp_pres) == exp["comp"], str(res.comp_pres))
        check(f"{data['name']} cases", list(res.cases) == exp["cases"],
              str(res.cases))
        relost = [str(r) for r in res.embedding.source.relators
                  if not res.verdict(res.embedding(r)).is_trivial]
        check(f"{data['name']} embedding kills relators", not relost,
              str(relost))
    return passed, failed, lines
