"""Tower spec files and GAD files (JSON payloads, word literals in strings)."""

from __future__ import annotations

import json
from typing import Optional, Tuple

from bsw import dioph
from bsw import gog as GG
from bsw.words import parse_word
from bsw.normal import Presentation, abelian_presentation
from bsw.tower import (AbelianFlat, AbelianFlatSpec, SurfaceFlat,
                       SurfaceFlatSpec, Tower, glue_abelian_flat,
                       glue_free_factor, glue_surface_flat, new_tower)
from bsw.testseq import GrowthSchedule, parse_shape


class SpecError(ValueError):
    """Malformed spec file."""


def load_tower(data, assume_valid: bool = False) -> Tuple[Tower, dict]:
    """Build a tower from a parsed spec object; returns (tower, extras).

    Extras carry the optional sections: closures (flat id -> embedding and
    names), schedule, ordering, twin_names.
    """
    if not isinstance(data, dict):
        raise SpecError("spec must be an object")
    try:
        base_rank = int(data["base_rank"])
    except KeyError:
        raise SpecError("missing base_rank") from None
    names = data.get("base_names")
    t = new_tower(base_rank, tuple(names) if names else None)
    for i, floor in enumerate(data.get("floors", ())):
        kind = floor.get("type")
        fnames = tuple(floor["names"]) if floor.get("names") else None
        if kind == "abelian":
            t = glue_abelian_flat(
                t, AbelianFlatSpec(floor["peg"], int(floor["rank"]), fnames),
                assume_valid=assume_valid)
        elif kind == "surface":
            t = glue_surface_flat(
                t, SurfaceFlatSpec(int(floor["genus"]),
                                   tuple(floor["boundary"]),
                                   tuple(floor["images"]), fnames,
                                   floor.get("aux")),
                assume_valid=assume_valid)
        elif kind == "free":
            t = glue_free_factor(t, int(floor["rank"]), fnames)
        else:
            raise SpecError(f"floor {i}: unknown type {kind!r}")
    extras = {
        "closures": parse_closures(data.get("closures", ())),
        "schedule": parse_schedule(data.get("schedule", {})),
        "ordering": data.get("ordering"),
        "twin_names": data.get("twin_names", {}),
        "expected": data.get("expected", {}),
    }
    return t, extras


def parse_closures(items):
    """The closure-embedding payload: list of {flat, peg_col, matrix[, names]}."""
    embeddings = {}
    a_names = {}
    for item in items:
        fid = item["flat"]
        emb = dioph.ClosureEmbedding(len(item["peg_col"]),
                                     tuple(item["peg_col"]),
                                     tuple(tuple(r) for r in item["matrix"]))
        embeddings[fid] = emb
        if item.get("names"):
            a_names[fid] = tuple(item["names"])
    return embeddings, a_names


def parse_schedule(data) -> GrowthSchedule:
    return GrowthSchedule({fid: tuple(parse_shape(s) for s in shapes)
                           for fid, shapes in data.items()})


def dump_tower(t: Tower, extras: Optional[dict] = None) -> dict:
    floors = []
    for flat in t.flats:
        if isinstance(flat, AbelianFlat):
            entry = {"type": "abelian", "peg": str(flat.peg),
                     "rank": flat.rank, "names": list(flat.gens)}
        elif isinstance(flat, SurfaceFlat):
            entry = {"type": "surface", "genus": flat.genus,
                     "boundary": [str(b) for b in flat.boundary],
                     "images": [str(im) for im in flat.images],
                     "names": list(flat.gens)}
            if flat.aux:
                entry["aux"] = flat.aux
        else:
            entry = {"type": "free", "rank": flat.rank,
                     "names": list(flat.gens)}
        floors.append(entry)
    out = {"base_rank": t.base.rank, "base_names": list(t.base.names),
           "floors": floors}
    return out


def dumps_tower(t: Tower) -> str:
    return json.dumps(dump_tower(t), indent=2, sort_keys=True) + "\n"


def load_gad(data):
    """Build (GAD, eta images, target, filtration, base vertex, fresh names,
    case overrides) from a completion file object."""
    if not isinstance(data, dict):
        raise SpecError("completion file must be an object")
    target = Presentation(tuple(data["target"]))
    vertex_groups = {}
    partition = {}
    surface_data = {}
    order = []
    for v in data["vertices"]:
        vid = v["id"]
        order.append(vid)
        kind = v["kind"]
        partition[vid] = kind
        gens = tuple(v["gens"])
        if kind == "abelian":
            vertex_groups[vid] = abelian_presentation(gens)
        else:
            pres = Presentation(gens)
            if v.get("relators"):
                basis = pres.basis
                pres = Presentation(gens, tuple(parse_word(basis, r)
                                                for r in v["relators"]))
            vertex_groups[vid] = pres
            if kind == "surface":
                bwords = tuple(vertex_groups[vid].word(b)
                               for b in v.get("boundary", ()))
                surface_data[vid] = GG.SurfaceData(int(v.get("genus", 0)),
                                                   max(1, len(bwords)), bwords)
    half_edges = []
    inv = {}
    alpha = {}
    tau = {}
    edge_groups = {}
    edge_maps = {}
    for e in data["edges"]:
        eid = e["id"]
        bid = eid + "~"
        half_edges += [eid, bid]
        inv[eid], inv[bid] = bid, eid
        alpha[eid], tau[eid] = e["from"], e["to"]
        alpha[bid], tau[bid] = e["to"], e["from"]
        edge_groups[eid] = tuple(e.get("edge_gens", ("c0",)))
        to_pres = vertex_groups[e["to"]]
        from_pres = vertex_groups[e["from"]]
        edge_maps[eid] = tuple(to_pres.word(wtxt) for wtxt in e["into_to"])
        edge_maps[bid] = tuple(from_pres.word(wtxt) for wtxt in e["into_from"])
    graph = GG.Graph(tuple(order), tuple(half_edges), inv, alpha, tau)
    gg = GG.GraphOfGroups(graph, vertex_groups, edge_groups, edge_maps)
    gad = GG.GAD(gg, partition, surface_data)
    fresh = {k: tuple(v) for k, v in data.get("fresh_names", {}).items()}
    return {
        "gad": gad,
        "eta": dict(data["eta"]),
        "target": target,
        "filtration": list(data["filtration"]),
        "base_vertex": data["base_vertex"],
        "fresh_names": fresh,
        "case_overrides": dict(data.get("case_overrides", {})),
        "expected": data.get("expected", {}),
    }


def read_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
