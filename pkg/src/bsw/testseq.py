"""Test sequences: small-cancellation families, sequence points for towers of
abelian flats and free factors, heuristic points through surface flats, the
point verifier, the limit oracle, and the swap-symmetry checker.

A sequence point at index n sends the base identically, each ordered abelian
generator to a power of the (image of the) peg's root with exponents following
a growth schedule, and free-factor generators to C'(1/n) words; every image is
rescaled so that the flat dominates everything ordered before it with ratio at
most 1/n at the default probes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from typing import Dict, List, Optional, Sequence, Tuple

from bsw import words as W
from bsw.words import Basis, Word
from bsw.normal import Morphism, Presentation, Verdict, NONTRIVIAL, TRIVIAL, UNKNOWN
from bsw.tower import (AbelianFlat, FreeFactor, SurfaceFlat, Tower,
                       check_legitimate_ordering, natural_ordering)

__all__ = [
    "ExpShape",
    "GrowthSchedule",
    "default_schedule",
    "parse_shape",
    "de_bruijn",
    "gen_smallcanc_family",
    "SequencePoint",
    "gen_sequence_point",
    "gen_surface_point",
    "verify_point",
    "limit_oracle",
    "swap_symmetry_check",
]


# -- growth schedules -------------------------------------------------------------


@dataclass(frozen=True)
class ExpShape:
    """The exponent function n -> coeff * n^degree."""

    coeff: int = 1
    degree: int = 1

    def __call__(self, n: int) -> int:
        return self.coeff * n ** self.degree

    def __str__(self):
        if self.degree == 0:
            return str(self.coeff)
        core = "n" if self.degree == 1 else f"n^{self.degree}"
        return core if self.coeff == 1 else f"{self.coeff}*{core}"


_SHAPE = re.compile(r"^\s*(?:(\d+)\s*\*\s*)?n(?:\^(\d+))?\s*$|^\s*(\d+)\s*$")


def parse_shape(text: str) -> ExpShape:
    m = _SHAPE.match(text)
    if not m:
        raise ValueError(f"bad exponent shape {text!r}")
    if m.group(3) is not None:
        return ExpShape(int(m.group(3)), 0)
    coeff = int(m.group(1)) if m.group(1) else 1
    degree = int(m.group(2)) if m.group(2) else 1
    return ExpShape(coeff, degree)


@dataclass(frozen=True)
class GrowthSchedule:
    """Per-flat exponent shapes, fastest generator first.

    Ratios m_{j+1}/m_j must go to 0, which for the closed shape family means
    strictly decreasing degrees; this is validated symbolically and spot
    checked numerically.
    """

    shapes: Dict[str, Tuple[ExpShape, ...]]

    def __post_init__(self):
        for fid, shapes in self.shapes.items():
            for a, b in zip(shapes, shapes[1:]):
                if b.degree >= a.degree:
                    raise ValueError(
                        f"flat {fid}: ratio {b}/{a} does not go to 0")
                # numeric spot check: the ratio strictly drops 10 -> 100
                if b(100) * a(10) >= a(100) * b(10):
                    raise ValueError(f"flat {fid}: ratio {b}/{a} not decreasing")
            for n in (5, 50):
                if any(s(n) <= 0 for s in shapes):
                    raise ValueError(f"flat {fid}: non-positive exponent")

    def for_flat(self, fid: str, rank: int) -> Tuple[ExpShape, ...]:
        shapes = self.shapes.get(fid)
        if shapes is None:
            return tuple(ExpShape(1, rank - j) for j in range(rank))
        if len(shapes) != rank:
            raise ValueError(f"flat {fid}: {rank} shapes required")
        return shapes

    def threshold(self, fid: str, rank: int) -> int:
        """Least N0 with m_{j+1}(n) < m_j(n) for all n >= N0 (n up to 10^4)."""
        shapes = self.for_flat(fid, rank)
        n0 = 1
        for a, b in zip(shapes, shapes[1:]):
            n = 1
            while n < 10 ** 4 and b(n) >= a(n):
                n += 1
            n0 = max(n0, n)
        return n0


def default_schedule(t: Tower) -> GrowthSchedule:
    return GrowthSchedule({})


# -- small cancellation families -----------------------------------------------------


def de_bruijn(order: int) -> List[int]:
    """Binary de Bruijn sequence of the given order (prefer-one greedy... no:
    the standard Lyndon-word concatenation, deterministic)."""
    sequence: List[int] = []
    a = [0] * (order + 1)

    def db(t, p):
        if t > order:
            if order % p == 0:
                sequence.extend(a[1:p + 1])
        else:
            a[t] = a[t - p]
            db(t + 1, p)
            for j in range(a[t - p] + 1, 2):
                a[t] = j
                db(t + 1, t)

    db(1, 1)
    return sequence


def gen_smallcanc_family(k: int, n: int, basis: Basis,
                         min_len: int = 0) -> Tuple[Word, ...]:
    """A deterministic k-tuple of positive words satisfying C'(1/n).

    Words are block products a * b^e with e in {1, 2} following disjoint
    windows of a de Bruijn sequence, plus one per-word terminator block with a
    globally unique exponent.  Any common subword of two distinct positioned
    occurrences then contains fewer than m complete ordinary blocks per
    wrap-free run, so pieces are shorter than 3m + k + 12 letters while the
    words have at least 2T letters; T is chosen to push the ratio under 1/n.
    All letters are positive, so inverse rotations share no pieces with the
    words themselves.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < 2:
        raise ValueError("n must be >= 2")
    if basis.rank < 2:
        raise ValueError("small cancellation families need base rank >= 2")
    order = 4
    while True:
        bound = 3 * order + k + 12
        blocks = max(n * bound // 2 + 1, (min_len + 1) // 2 + 1)
        if k * blocks <= 2 ** order:
            break
        order += 1
    seq = de_bruijn(order)
    period = len(seq)
    a = basis.gen(basis.names[0])
    b = basis.gen(basis.names[1])
    words = []
    for i in range(k):
        letters: List[int] = []
        ai = a.letters[0]
        bi = b.letters[0]
        for t in range(i * blocks, (i + 1) * blocks):
            letters.append(ai)
            letters.extend([bi] * (1 + seq[t % period]))
        letters.append(ai)
        letters.extend([bi] * (3 + i))
        words.append(Word(basis, letters, _reduced=True))
    return tuple(words)


# -- sequence points ---------------------------------------------------------------


@dataclass(frozen=True)
class SequencePoint:
    """One morphism h_n of a test sequence; base-identity by construction."""

    index: int
    morphism: Morphism
    ordering: Tuple[str, ...]
    exponents: Dict[str, Tuple[int, ...]]  # flat -> scaled exponents
    heuristic: bool = False
    seed: int = 0

    def __call__(self, w: Word) -> Word:
        return self.morphism(w)


def _image_map_word(images: Dict[str, Word], w: Word, base: Basis) -> Word:
    out = Word.identity(base)
    for x in w.letters:
        name = w.basis.names[abs(x) - 1]
        if name not in images:
            raise ValueError(f"ordering/schedule mismatch: {name} has no image "
                             f"yet (peg uses a later-ordered generator)")
        img = images[name]
        out = out * (img if x > 0 else img.inv())
    return out


def gen_sequence_point(t: Tower, ordering: Optional[Sequence[str]] = None,
                       schedule: Optional[GrowthSchedule] = None,
                       n: int = 1, seed: int = 0) -> SequencePoint:
    """Exact test-sequence point for a tower of abelian flats and free factors."""
    if any(isinstance(f, SurfaceFlat) for f in t.flats):
        raise ValueError("tower has surface flats; use gen_surface_point")
    if n < 1:
        raise ValueError("index must be >= 1")
    ordering = tuple(ordering) if ordering else tuple(natural_ordering(t))
    ok, cert = check_legitimate_ordering(t, list(ordering))
    if not ok:
        raise ValueError(f"ordering not legitimate: {cert}")
    schedule = schedule or default_schedule(t)
    base = t.base
    images: Dict[str, Word] = {name: base.gen(name) for name in base.names}
    probe_len = 1
    exponents: Dict[str, Tuple[int, ...]] = {}
    for fid in ordering:
        flat = t.flat_by_id(fid)
        if isinstance(flat, AbelianFlat):
            peg_img = _image_map_word(images, flat.peg, base)
            if peg_img.is_identity:
                raise ValueError(f"flat {fid}: peg image dies at the base")
            if flat.closed:
                raise ValueError("closed flats have no canonical sequence "
                                 "point; generate before closing and extend")
            gamma, _ = W.primitive_root(peg_img)
            shapes = schedule.for_flat(fid, flat.rank)
            raw = [s(n) for s in shapes]
            scale = max(1, ceil(n * probe_len / (raw[-1] * len(gamma))))
            exps = tuple(scale * m for m in raw)
            for g, e in zip(flat.gens, exps):
                images[g] = gamma ** e
            exponents[fid] = exps
        elif isinstance(flat, FreeFactor):
            need = n * probe_len
            fam = gen_smallcanc_family(len(flat.gens), n, base, min_len=need)
            for g, wimg in zip(flat.gens, fam):
                images[g] = wimg
            exponents[fid] = ()
        else:
            raise TypeError(flat)
        probe_len = max(probe_len,
                        max(len(images[g]) for g in flat.ordering_gens))
    top = t.top
    h = Morphism(top, Presentation(base.names), images,
                 f"seqpoint(n={n})")
    for rel in top.relators:
        if not h(rel).is_identity:
            raise AssertionError(f"sequence point fails relator {rel}")
    return SequencePoint(n, h, ordering, exponents, heuristic=False, seed=seed)


def gen_surface_point(t: Tower, n: int = 1, seed: int = 0,
                      schedule: Optional[GrowthSchedule] = None) -> SequencePoint:
    """Heuristic point for towers with surface flats: the composite of the
    stage retractions with n-th powers of boundary Dehn twists.

    Relator preservation is exact; the sequence is NOT certified as a test
    sequence (tagged heuristic).
    """
    if n < 0:
        raise ValueError("index must be >= 0")
    schedule = schedule or default_schedule(t)
    base = t.base
    maps: List[Morphism] = []
    for i, flat in enumerate(t.flats):
        lower = t.stages[i]
        upper = t.stages[i + 1]
        images = {name: lower.basis.gen(name) for name in lower.names}
        if isinstance(flat, SurfaceFlat):
            r = t.retractions[i]
            bword = flat.boundary[0].lift(lower.basis)
            # stage-dependent powers keep twin copies separated
            twist = bword ** (n * (i + 1))
            for g in flat.gens:
                img = r(upper.basis.gen(g))
                if flat.aux is not None:
                    img = _drop_aux(img, lower, flat.aux)
                images[g] = twist * img * twist.inv()
        elif isinstance(flat, AbelianFlat):
            peg = flat.peg.lift(lower.basis)
            shapes = schedule.for_flat(flat.flat_id, flat.rank)
            for g, s in zip(flat.gens, shapes):
                images[g] = peg ** s(max(n, 1))
            for aname in flat.a_names:
                images[aname] = Word.identity(lower.basis)
        else:
            fam = gen_smallcanc_family(len(flat.gens), max(n, 2), base) \
                if len(base.names) >= 2 else None
            for j, g in enumerate(flat.gens):
                images[g] = fam[j].lift(lower.basis) if fam else \
                    Word.identity(lower.basis)
        maps.append(Morphism(upper, lower, images, f"stage{i + 1}"))
    top = t.top
    # compose top-down
    comp_images = {}
    for name in top.names:
        w = top.basis.gen(name)
        for idx in range(len(maps) - 1, -1, -1):
            m = maps[idx]
            if len(w.basis.names) > len(m.source.names):
                raise AssertionError("stage mismatch")
            w = m(w.lift(m.source.basis))
        comp_images[name] = w
    h = Morphism(top, Presentation(base.names), comp_images,
                 f"twistpoint(n={n},seed={seed})")
    for rel in top.relators:
        if not h(rel).is_identity:
            raise AssertionError(f"surface point fails relator {rel}")
    return SequencePoint(n, h, tuple(natural_ordering(t)), {}, heuristic=True,
                         seed=seed)


def _drop_aux(w: Word, lower: Presentation, aux: str) -> Word:
    letters = []
    for x in w.letters:
        name = w.basis.names[abs(x) - 1]
        if name == aux:
            continue
        idx = lower.basis.index(name) + 1
        letters.append(idx if x > 0 else -idx)
    return Word(lower.basis, letters)


# -- verification ----------------------------------------------------------------


def verify_point(t: Tower, point: SequencePoint,
                 schedule: Optional[GrowthSchedule] = None,
                 ordering: Optional[Sequence[str]] = None,
                 probes: Optional[Sequence[Word]] = None):
    """Itemized checks of a sequence point; returns (ok, list of (name, ok,
    detail)).

    Checks: base-identity, relator preservation (exact), recovered abelian
    exponents proportional to the schedule with monotone ratios past the
    schedule threshold, C'(1/n) of free-factor images, and domination with
    ratio <= 1/n at the probes (default: every generator ordered earlier).
    """
    schedule = schedule or default_schedule(t)
    ordering = tuple(ordering) if ordering else point.ordering
    h = point.morphism
    n = point.index
    base = t.base
    report = []

    ok = all(h(t.top.basis.gen(name)) == base.gen(name)
             for name in base.names)
    report.append(("base-identity", ok, ""))

    bad = [str(rel) for rel in t.top.relators if not h(rel).is_identity]
    report.append(("relators", not bad, "; ".join(bad)))

    probe_words = list(probes) if probes is not None else \
        [base.gen(nm) for nm in base.names]
    probe_len = max((len(h(p.lift(t.top.basis))) for p in probe_words),
                    default=1) or 1
    for fid in ordering:
        flat = t.flat_by_id(fid)
        if isinstance(flat, AbelianFlat):
            peg_img = h(flat.peg.lift(t.top.basis))
            if peg_img.is_identity:
                report.append((f"{fid}:peg", False, "peg image trivial"))
                continue
            gamma, gexp = W.primitive_root(peg_img)
            recovered = []
            exact = True
            for g in flat.gens:
                img = h(t.top.basis.gen(g))
                if img.is_identity:
                    recovered.append(0)
                    exact = False
                    continue
                root, e = W.primitive_root(img)
                if root == gamma:
                    recovered.append(e)
                elif root == gamma.inv():
                    recovered.append(-e)
                else:
                    exact = False
                    recovered.append(0)
            report.append((f"{fid}:peg-powers", exact,
                           f"exponents {recovered}"))
            shapes = schedule.for_flat(fid, flat.rank)
            raw = [s(n) for s in shapes]
            prop = all(recovered[j + 1] * raw[j] == recovered[j] * raw[j + 1]
                       for j in range(len(raw) - 1))
            report.append((f"{fid}:schedule-proportional", prop,
                           f"{recovered} vs {raw}"))
            n0 = schedule.threshold(fid, flat.rank)
            if n >= n0 and len(recovered) > 1:
                mono = all(abs(recovered[j + 1]) < abs(recovered[j])
                           for j in range(len(recovered) - 1))
                ratio = max((Fraction(abs(recovered[j + 1]),
                                      abs(recovered[j]))
                             for j in range(len(recovered) - 1)
                             if recovered[j]), default=Fraction(0))
                report.append((f"{fid}:ratios-monotone", mono,
                               f"max ratio {ratio} at n={n}"))
            flat_min = min(len(h(t.top.basis.gen(g))) for g in flat.gens)
        elif isinstance(flat, FreeFactor):
            imgs = [h(t.top.basis.gen(g)) for g in flat.gens]
            ratio = W.max_piece_ratio(imgs)
            report.append((f"{fid}:small-cancellation",
                           ratio < Fraction(1, n),
                           f"piece ratio {ratio} vs 1/{n}"))
            flat_min = min(len(img) for img in imgs)
        else:
            report.append((f"{fid}:surface", True, "heuristic flat"))
            flat_min = max(probe_len, 1)
        if not point.heuristic:
            dom = flat_min >= n * probe_len
            report.append((f"{fid}:domination", dom,
                           f"min |image| {flat_min} vs {n}*probe {probe_len}"))
        probe_len = max(probe_len,
                        max(len(h(t.top.basis.gen(g)))
                            for g in flat.ordering_gens))
    overall = all(okc for _, okc, _ in report)
    return overall, report


# -- oracles ----------------------------------------------------------------------


def iter_sequence_points(t: Tower, budget: int, seed: int = 0,
                         schedule: Optional[GrowthSchedule] = None):
    """Points n = 1..budget, lazily; heuristic exactly when the tower has
    surface flats."""
    surf = any(isinstance(f, SurfaceFlat) for f in t.flats)
    for n in range(1, budget + 1):
        yield (gen_surface_point(t, n, seed, schedule) if surf
               else gen_sequence_point(t, None, schedule, n, seed))


def sequence_points(t: Tower, budget: int, seed: int = 0,
                    schedule: Optional[GrowthSchedule] = None):
    return list(iter_sequence_points(t, budget, seed, schedule))


def limit_oracle(t: Tower, w: Word, budget: int = 20, seed: int = 0,
                 schedule: Optional[GrowthSchedule] = None) -> Verdict:
    """Sound one-sided test: NonTrivial with a witness point when some point
    separates w from the identity, Unknown on exhaustion; never Trivial."""
    w = w.lift(t.top.basis) if w.basis != t.top.basis else w
    for point in iter_sequence_points(t, budget, seed, schedule):
        if not point(w).is_identity:
            return Verdict(NONTRIVIAL, witness=point.morphism,
                           method="limit-oracle")
    return Verdict(UNKNOWN, note=f"all {budget} sampled points kill the word")


def attach_witness(t: Tower, w: Word, verd: Verdict, budget: int = 20,
                   seed: int = 0,
                   schedule: Optional[GrowthSchedule] = None) -> Verdict:
    """Equip a NonTrivial verdict with a separating point when one is found."""
    if not verd.is_nontrivial or verd.witness is not None:
        return verd
    oracle = limit_oracle(t, w, budget, seed, schedule)
    if oracle.is_nontrivial:
        return Verdict(NONTRIVIAL, witness=oracle.witness, method=verd.method)
    return verd


def swap_symmetry_check(tt, w: Word, budget: int = 20) -> Verdict:
    """Verdict on swap(w) * w^-1 for a twin tower.

    Trivial means w is swap-symmetric in the twin group; NonTrivial carries a
    separating point when one exists within the budget.
    """
    t = tt.result
    basis = t.top.basis
    w = w.lift(basis) if w.basis != basis else w
    sym = dict(tt.gen_map)
    sym.update({v: k for k, v in tt.gen_map.items()})
    swapped = Word(basis, [
        (basis.index(sym.get(basis.names[abs(x) - 1],
                             basis.names[abs(x) - 1])) + 1)
        * (1 if x > 0 else -1) for x in w.letters])
    diff = swapped * w.inv()
    verd = t.verdict(diff)
    if verd.is_nontrivial and verd.witness is None:
        oracle = limit_oracle(t, diff, budget)
        if oracle.is_nontrivial:
            verd = Verdict(NONTRIVIAL, witness=oracle.witness,
                           method=verd.method)
    if verd.is_unknown:
        oracle = limit_oracle(t, diff, budget)
        if oracle.is_nontrivial:
            return oracle
    return verd
