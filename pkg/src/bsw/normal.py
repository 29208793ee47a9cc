"""Presentations, morphisms, and normal forms for one-edge floor extensions.

The word-problem engine works on a stack of *steps* over a free base: each step
extends the group below by a free factor, an abelian flat (amalgam over the
cyclic group generated by a peg), or a one-boundary surface flat (amalgam of
the lower group with a free group over cyclic subgroups).  Reduction of
alternating sequences follows the usual amalgam pinching, with membership in
the edge subgroup decided recursively.  Verdicts are three-valued: membership
oracles that fail to resolve make the verdict Unknown rather than guessing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from bsw import words as W
from bsw.words import Basis, Word

__all__ = [
    "Presentation",
    "Morphism",
    "Verdict",
    "TRIVIAL",
    "NONTRIVIAL",
    "UNKNOWN",
    "CheckResult",
    "check_morphism",
    "FreeStep",
    "AbelianStep",
    "SurfaceStep",
    "LevelContext",
    "amalgam_reduce",
    "hnn_reduce",
    "rewrite_trivial",
    "replay_trace",
    "peg_carrier_conjugacy",
]

TRIVIAL = "trivial"
NONTRIVIAL = "nontrivial"
UNKNOWN = "unknown"


class Presentation:
    """Finite presentation: ordered generator names plus freely reduced relators."""

    __slots__ = ("names", "relators", "basis", "is_abelian")

    def __init__(self, names: Sequence[str], relators: Sequence[Word] = (),
                 is_abelian: bool = False):
        basis = Basis(names)
        rels = []
        for r in relators:
            r = r.lift(basis) if r.basis != basis else r
            if r.is_identity:
                raise ValueError("relators must be non-identity")
            rels.append(r)
        object.__setattr__(self, "names", tuple(names))
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "relators", tuple(rels))
        object.__setattr__(self, "is_abelian", is_abelian)

    def __setattr__(self, *a):
        raise AttributeError("Presentation is immutable")

    @property
    def is_free(self) -> bool:
        return not self.relators

    def word(self, text: str) -> Word:
        return W.parse_word(self.basis, text)

    def __eq__(self, other):
        return (isinstance(other, Presentation) and self.names == other.names
                and self.relators == other.relators)

    def __hash__(self):
        return hash((self.names, tuple(r.letters for r in self.relators)))

    def __str__(self):
        gens = " ".join(self.names)
        rels = ", ".join(str(r) for r in self.relators)
        return f"< {gens} | {rels} >"

    def __repr__(self):
        return f"Presentation({self})"


def abelian_presentation(names) -> Presentation:
    """Free abelian presentation: pairwise commutators in generator order."""
    basis = Basis(tuple(names))
    rels = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            rels.append(W.commutator(basis.gen(names[i]), basis.gen(names[j])))
    return Presentation(tuple(names), tuple(rels), is_abelian=True)


class Morphism:
    """Generator-image map between presentations; application reduces freely."""

    __slots__ = ("source", "target", "images", "label")

    def __init__(self, source: Presentation, target: Presentation,
                 images: dict, label: str = ""):
        imgs = {}
        for name in source.names:
            if name not in images:
                raise KeyError(f"generator {name!r} has no image")
            w = images[name]
            imgs[name] = w.lift(target.basis) if w.basis != target.basis else w
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "images", imgs)
        object.__setattr__(self, "label", label or "morphism")

    def __setattr__(self, *a):
        raise AttributeError("Morphism is immutable")

    @staticmethod
    def identity(pres: Presentation, label: str = "id") -> "Morphism":
        return Morphism(pres, pres,
                        {n: pres.basis.gen(n) for n in pres.names}, label)

    def __call__(self, w: Word) -> Word:
        if not self.source.basis.extends(w.basis) and w.basis != self.source.basis:
            raise ValueError("word not over the morphism's source")
        out: list[int] = []
        import bsw._kernels as _k
        table = {}
        for name, img in self.images.items():
            idx = self.source.basis.index(name) + 1
            table[idx] = img.letters
            table[-idx] = tuple(-x for x in reversed(img.letters))
        for x in w.letters:
            out = _k.concat_reduced(out, table[x])
        return Word(self.target.basis, out, _reduced=True)

    def then(self, nxt: "Morphism") -> "Morphism":
        """Composite applying self first, then nxt."""
        return Morphism(self.source, nxt.target,
                        {n: nxt(img) for n, img in self.images.items()},
                        f"{nxt.label}*{self.label}")

    def __repr__(self):
        return f"Morphism({self.label}: {len(self.source.names)} gens)"


@dataclass(frozen=True)
class Verdict:
    """Three-valued word-problem answer."""

    kind: str
    witness: Optional[Morphism] = None
    trace: Optional[tuple] = None
    method: str = ""
    note: str = ""

    @property
    def is_trivial(self):
        return self.kind == TRIVIAL

    @property
    def is_nontrivial(self):
        return self.kind == NONTRIVIAL

    @property
    def is_unknown(self):
        return self.kind == UNKNOWN

    def serialize(self) -> str:
        if self.kind == NONTRIVIAL:
            wid = self.witness.label if self.witness else "none"
            return f"nontrivial witness={wid}"
        return self.kind


def _trivial(method="", trace=None):
    return Verdict(TRIVIAL, trace=trace, method=method)


def _nontrivial(method="", witness=None):
    return Verdict(NONTRIVIAL, witness=witness, method=method)


def _unknown(note=""):
    return Verdict(UNKNOWN, note=note)


# -- rewriting search ---------------------------------------------------------


def rewrite_trivial(w: Word, relators: Sequence[Word], max_depth: int = 8,
                    max_states: int = 20000):
    """Bounded search for a relator-rewriting proof that w = 1.

    Moves replace a subword p by q where p q^-1 is a cyclic rotation of a
    relator or its inverse.  Returns a trace (list of (word, rule) pairs ending
    at the identity) or None on exhaustion.  A greedy pass preferring
    length-reducing moves runs before the breadth-first search.
    """
    if w.is_identity:
        return ((w, None),)
    rules = []  # (lhs letters, rhs letters, rule label)
    for ri, rel in enumerate(relators):
        core = W.CyclicWord(rel).representative
        for sign, base in ((1, core.letters),
                           (-1, tuple(-x for x in reversed(core.letters)))):
            doubled = base + base
            n = len(base)
            for s in range(n):
                rot = doubled[s:s + n]
                for cut in range(1, n + 1):
                    lhs = rot[:cut]
                    rhs = tuple(-x for x in reversed(rot[cut:]))
                    rules.append((lhs, rhs, (ri, sign, s, cut)))
    basis = w.basis

    def apply_rule(word: Word, lhs, rhs, pos):
        letters = word.letters
        if letters[pos:pos + len(lhs)] != lhs:
            return None
        import bsw._kernels as _k
        new = _k.concat_reduced(letters[:pos], list(rhs))
        new = _k.concat_reduced(new, letters[pos + len(lhs):])
        return Word(basis, new, _reduced=True)

    def neighbors(word: Word, shrink_only: bool):
        for lhs, rhs, label in rules:
            if shrink_only and len(rhs) >= len(lhs):
                continue
            limit = len(word.letters) - len(lhs)
            for pos in range(limit + 1):
                out = apply_rule(word, lhs, rhs, pos)
                if out is not None and out != word:
                    yield out, (label, pos)

    # greedy shrink pass
    trace = [(w, None)]
    cur = w
    progressed = True
    while progressed and not cur.is_identity:
        progressed = False
        for out, step in neighbors(cur, shrink_only=True):
            if len(out) < len(cur):
                trace.append((out, step))
                cur = out
                progressed = True
                break
    if cur.is_identity:
        return tuple(trace)
    # breadth-first with a length cap
    cap = len(cur) + 2 * max(len(r) for r in relators) if relators else 0
    seen = {cur}
    frontier = [(cur, tuple(trace))]
    for _ in range(max_depth):
        nxt = []
        for word, tr in frontier:
            for out, step in neighbors(word, shrink_only=False):
                if len(out) > cap or out in seen:
                    continue
                seen.add(out)
                t2 = tr + ((out, step),)
                if out.is_identity:
                    return t2
                nxt.append((out, t2))
                if len(seen) > max_states:
                    return None
        frontier = nxt
        if not frontier:
            return None
    return None


def replay_trace(trace, relators: Sequence[Word]) -> bool:
    """Check a rewrite trace: each step is a relator rotation application and
    the final word is the identity."""
    if not trace:
        return False
    prev = trace[0][0]
    for word, step in trace[1:]:
        if step is None:
            return False
        (ri, sign, s, cut), pos = step
        core = W.CyclicWord(relators[ri]).representative
        base = core.letters if sign == 1 else tuple(-x for x in reversed(core.letters))
        doubled = base + base
        rot = doubled[s:s + len(base)]
        lhs, rhs = rot[:cut], tuple(-x for x in reversed(rot[cut:]))
        if prev.letters[pos:pos + len(lhs)] != lhs:
            return False
        import bsw._kernels as _k
        new = _k.concat_reduced(prev.letters[:pos], list(rhs))
        new = _k.concat_reduced(new, prev.letters[pos + len(lhs):])
        if tuple(new) != word.letters:
            return False
        prev = word
    return prev.is_identity


# -- level structure ----------------------------------------------------------


@dataclass(frozen=True)
class FreeStep:
    """Free product with the free group on new_names."""

    new_names: Tuple[str, ...]


@dataclass(frozen=True)
class AbelianStep:
    """Amalgam over <peg> with <peg> + Z^m; closure data optionally identifies
    z_i = peg^{peg_col[i]} * prod a_j^{matrix[i][j]} inside <peg> + Z^m + Z^m."""

    peg: Word  # over the lower level's generators
    zs: Tuple[str, ...]
    a_names: Tuple[str, ...] = ()
    peg_col: Tuple[int, ...] = ()
    matrix: Tuple[Tuple[int, ...], ...] = ()

    @property
    def closed(self) -> bool:
        return bool(self.a_names)

    @property
    def free_rank(self) -> int:
        # rank of the free part over the peg in the vertex group
        return len(self.a_names) if self.closed else len(self.zs)


@dataclass(frozen=True)
class SurfaceStep:
    """Amalgam with the free group on xs over <boundary> = <bword(xs)>.

    Exact normal forms only for one boundary component (no stable letters).
    """

    boundary: Word  # over the lower level's generators
    xs: Tuple[str, ...]
    bword: Word  # boundary element as a word in xs
    exact: bool = True


class LevelContext:
    """Word-problem context for a stack of steps over a free base.

    ``to_base``, when given, holds one map per level sending a word at that
    level to its image in the free base under the composite retraction; the
    engine uses it to pin candidate edge-subgroup exponents exactly.
    """

    def __init__(self, base: Basis, steps: Sequence[object],
                 bases: Sequence[Basis], to_base: Optional[Sequence] = None):
        # bases[0] is the free base; bases[i+1] the basis after step i
        self.base = base
        self.steps = tuple(steps)
        self.bases = tuple(bases)
        if len(self.bases) != len(self.steps) + 1:
            raise ValueError("need one basis per level")
        self.to_base = tuple(to_base) if to_base is not None else None
        if self.to_base is not None and len(self.to_base) != len(self.bases):
            raise ValueError("need one base map per level")
        self._memo = {}

    @property
    def top(self) -> Basis:
        return self.bases[-1]

    def base_image(self, w: Word) -> Optional[Word]:
        if self.to_base is None:
            return None
        return self.to_base[len(self.steps)](w)

    def sub(self, depth: int) -> "LevelContext":
        ctx = LevelContext(self.base, self.steps[:depth], self.bases[:depth + 1],
                           self.to_base[:depth + 1] if self.to_base else None)
        ctx._memo = self._memo
        return ctx

    # -- verdicts -------------------------------------------------------------

    def verdict(self, w: Word) -> Verdict:
        w = w.lift(self.top) if w.basis != self.top else w
        key = (len(self.steps), w.letters)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        out = self._verdict(w)
        self._memo[key] = out
        return out

    def _verdict(self, w: Word) -> Verdict:
        if w.is_identity:
            return _trivial("free-reduction")
        if not self.steps:
            return _nontrivial("free-reduction")
        step = self.steps[-1]
        lower = self.sub(len(self.steps) - 1)
        if isinstance(step, FreeStep):
            return self._free_product_verdict(w, step, lower)
        if isinstance(step, AbelianStep):
            return self._amalgam_verdict(w, _AbelianSide(step, lower), lower)
        if isinstance(step, SurfaceStep):
            if not step.exact:
                return _unknown("surface flat with several boundary components")
            return self._amalgam_verdict(w, _SurfaceSide(step), lower)
        raise TypeError(f"unknown step {step!r}")

    def equal(self, u: Word, v: Word) -> Verdict:
        return self.verdict(u * v.inv())

    # -- free product ----------------------------------------------------------

    def _split(self, w: Word, new_names) -> list:
        """Alternating (is_upper, letters) runs."""
        top = self.top
        upper = {top.index(n) + 1 for n in new_names}
        runs = []
        for x in w.letters:
            is_up = abs(x) in upper
            if runs and runs[-1][0] == is_up:
                runs[-1][1].append(x)
            else:
                runs.append([is_up, [x]])
        return runs

    def _free_product_verdict(self, w, step, lower) -> Verdict:
        runs = self._split(w, step.new_names)
        # upper runs are freely reduced non-empty, hence non-trivial; a lower
        # run may still vanish in the lower group
        lower_basis = lower.top
        segs = []
        for is_up, letters in runs:
            if is_up:
                segs.append(("B", tuple(letters)))
            else:
                segs.append(("A", Word(lower_basis, letters, _reduced=True)))
        changed = True
        while changed:
            changed = False
            for i, (tag, val) in enumerate(segs):
                if tag == "A":
                    verd = lower.verdict(val)
                    if verd.is_unknown:
                        return _unknown("lower-level segment undecided")
                    if verd.is_trivial:
                        del segs[i]
                        changed = True
                        break
            if changed:
                # merge adjacent segments of the same type
                merged = []
                for tag, val in segs:
                    if merged and merged[-1][0] == tag:
                        if tag == "B":
                            import bsw._kernels as _k
                            combined = tuple(
                                _k.concat_reduced(merged[-1][1], val))
                            if combined:
                                merged[-1] = (tag, combined)
                            else:
                                merged.pop()
                        else:
                            merged[-1] = (tag, merged[-1][1] * val)
                    else:
                        merged.append((tag, val))
                segs = merged
        if not segs:
            return _trivial("free-product-normal-form")
        return _nontrivial("free-product-normal-form")


    # -- amalgam reduction -----------------------------------------------------

    def _amalgam_verdict(self, w, side, lower) -> Verdict:
        seq = side.parse(w, self)
        out = _amalgam_core(seq, side, lower)
        if out is UNKNOWN_SENTINEL:
            return _unknown("edge-membership oracle undecided")
        if not out:
            return _trivial("amalgam-normal-form")
        if len(out) == 1:
            tag, val = out[0]
            if tag == "A":
                verd = lower.verdict(val)
                if verd.is_unknown:
                    return _unknown("lower-level segment undecided")
                return (_trivial("amalgam-normal-form") if verd.is_trivial
                        else _nontrivial("amalgam-normal-form"))
            return (_trivial("amalgam-normal-form") if side.upper_is_identity(val)
                    else _nontrivial("amalgam-normal-form"))
        return _nontrivial("amalgam-normal-form")


UNKNOWN_SENTINEL = object()


def _amalgam_core(seq, side, lower):
    """Pinch an alternating ('A', word)/('B', coords) sequence.

    Every operation strictly shrinks the sequence: trivial segments are
    removed, and a segment lying in the edge subgroup is rewritten on the
    opposite side, where it merges into a neighbour.  Returns the reduced
    sequence, or UNKNOWN_SENTINEL when a membership oracle fails to resolve.
    """
    def merge(items):
        out = []
        for tag, val in items:
            if out and out[-1][0] == tag:
                out[-1] = (tag, (out[-1][1] * val) if tag == "A"
                           else side.upper_mul(out[-1][1], val))
            else:
                out.append((tag, val))
        return out

    items = merge(list(seq))
    while True:
        removed = False
        for i, (tag, val) in enumerate(items):
            if tag == "A":
                verd = lower.verdict(val)
                if verd.is_unknown:
                    return UNKNOWN_SENTINEL
                if verd.is_trivial:
                    del items[i]
                    items = merge(items)
                    removed = True
                    break
            elif side.upper_is_identity(val):
                del items[i]
                items = merge(items)
                removed = True
                break
        if removed:
            continue
        if len(items) <= 1:
            return items
        pinched = False
        for i, (tag, val) in enumerate(items):
            if tag == "A":
                k = side.lower_edge_exponent(val, lower)
                if k is UNKNOWN_SENTINEL:
                    return UNKNOWN_SENTINEL
                if k is not None:
                    items[i] = ("B", side.edge_power(k))
                    items = merge(items)
                    pinched = True
                    break
            else:
                k = side.upper_edge_exponent(val)
                if k is not None:
                    items[i] = ("A", side.edge_in_lower(k))
                    items = merge(items)
                    pinched = True
                    break
        if not pinched:
            return items


class _AbelianSide:
    """Amalgam data for an abelian flat: upper vertex <peg> + free abelian."""

    def __init__(self, step: AbelianStep, lower: "LevelContext"):
        self.step = step
        self.lower_basis = lower.top
        self.m = step.free_rank

    def parse(self, w, ctx):
        top = ctx.top
        step = self.step
        zidx = {top.index(n) + 1: i for i, n in enumerate(step.zs)}
        aidx = {top.index(n) + 1: i for i, n in enumerate(step.a_names)}
        items = []
        run = []
        for x in w.letters:
            g = abs(x)
            if g in zidx or g in aidx:
                if run:
                    items.append(("A", Word(self.lower_basis, run)))
                    run = []
                items.append(("B", self._letter_coords(x, zidx, aidx)))
            else:
                run.append(x)
        if run:
            items.append(("A", Word(self.lower_basis, run)))
        return items

    def _letter_coords(self, x, zidx, aidx):
        # coordinates (peg exponent, free-part vector) in the vertex group
        sgn = 1 if x > 0 else -1
        g = abs(x)
        vec = [0] * self.m
        k = 0
        if g in aidx:
            vec[aidx[g]] = sgn
        else:
            i = zidx[g]
            if self.step.closed:
                k = sgn * self.step.peg_col[i]
                for j in range(self.m):
                    vec[j] = sgn * self.step.matrix[i][j]
            else:
                vec[i] = sgn
        return (k, tuple(vec))

    def upper_mul(self, u, v):
        return (u[0] + v[0], tuple(a + b for a, b in zip(u[1], v[1])))

    def upper_is_identity(self, val):
        return val[0] == 0 and not any(val[1])

    def upper_edge_exponent(self, val):
        return val[0] if not any(val[1]) else None

    def edge_power(self, k):
        return (k, (0,) * self.m)

    def edge_in_lower(self, k):
        return self.step.peg ** k

    def lower_edge_exponent(self, a_word, lower):
        return _cyclic_membership(a_word, self.step.peg, lower)


class _SurfaceSide:
    """Amalgam data for a one-boundary surface flat: upper vertex free on xs."""

    def __init__(self, step: SurfaceStep):
        self.step = step

    def parse(self, w, ctx):
        step = self.step
        top = ctx.top
        xidx = {top.index(n) + 1 for n in step.xs}
        xbasis = step.bword.basis
        lower_basis = ctx.sub(len(ctx.steps) - 1).top
        remap = {}
        for n in step.xs:
            remap[top.index(n) + 1] = xbasis.index(n) + 1
        items = []
        run = []
        urun = []

        def flush_lower():
            nonlocal run
            if run:
                items.append(("A", Word(lower_basis, run)))
                run = []

        def flush_upper():
            nonlocal urun
            if urun:
                items.append(("B", Word(xbasis, urun)))
                urun = []

        for x in w.letters:
            if abs(x) in xidx:
                flush_lower()
                urun.append(remap[abs(x)] if x > 0 else -remap[abs(x)])
            else:
                flush_upper()
                run.append(x)
        flush_lower()
        flush_upper()
        return items

    def upper_mul(self, u, v):
        return u * v

    def upper_is_identity(self, val):
        return val.is_identity

    def upper_edge_exponent(self, val):
        # val in <bword> inside the free group on xs
        b = self.step.bword
        if val.is_identity:
            return 0
        if not W.commutes(val, b):
            return None
        root_b, eb = W.primitive_root(b)
        root_v, ev = W.primitive_root(val)
        if root_v == root_b:
            k = ev
        elif root_v == root_b.inv():
            k = -ev
        else:
            return None
        if k % eb:
            return None
        k //= eb
        return k if (b ** k) == val else None

    def edge_power(self, k):
        return self.step.bword ** k

    def edge_in_lower(self, k):
        return self.step.boundary ** k

    def lower_edge_exponent(self, a_word, lower):
        return _cyclic_membership(a_word, self.step.boundary, lower)


def _cyclic_membership(u: Word, peg: Word, lower: "LevelContext"):
    """Decide u in <peg> at the lower level; returns the exponent, None, or
    UNKNOWN_SENTINEL.

    Strategy: u must commute with peg; the candidate exponent comes from the
    retraction-free base images (faithful on <peg> when the peg survives at the
    base), then u * peg^-k is verified exactly.
    """
    tri = lower.verdict(u)
    if tri.is_unknown:
        return UNKNOWN_SENTINEL
    if tri.is_trivial:
        return 0
    comm = lower.verdict(W.commutator(u, peg))
    if comm.is_unknown:
        return UNKNOWN_SENTINEL
    if comm.is_nontrivial:
        return None
    pb = lower.base_image(peg)
    k = None
    if pb is not None:
        ub = lower.base_image(u)
        if not pb.is_identity:
            if ub.is_identity:
                k = 0
            else:
                rp, ep = W.primitive_root(pb)
                ru, eu = W.primitive_root(ub)
                if ru == rp:
                    s = eu
                elif ru == rp.inv():
                    s = -eu
                else:
                    return None
                if rp ** s != ub:
                    return None
                if s % ep:
                    return None
                k = s // ep
    if k is None:
        for cand in range(-8, 9):
            verd = lower.verdict(u * peg ** -cand)
            if verd.is_trivial:
                return cand
        return UNKNOWN_SENTINEL
    verd = lower.verdict(u * peg ** -k)
    if verd.is_unknown:
        return UNKNOWN_SENTINEL
    return k if verd.is_trivial else None


# -- public reduction API ------------------------------------------------------


def amalgam_reduce(side, lower: LevelContext, seq):
    """Reduce an alternating sequence against an amalgam's pinch rules.

    ``side`` is an edge-data object (as built internally for abelian and
    surface steps); ``seq`` is a list of ('A', Word) / ('B', coords) items.
    Returns (reduced sequence, resolved flag).
    """
    out = _amalgam_core(list(seq), side, lower)
    if out is UNKNOWN_SENTINEL:
        return None, False
    return out, True


def top_amalgam_sequence(ctx: LevelContext, w: Word):
    """Reduced alternating sequence of w against the top step's amalgam.

    Returns (sequence, resolved); sequences of the same group element agree
    in length and side pattern.  Only defined when the top step is an abelian
    flat or an exact surface flat.
    """
    step = ctx.steps[-1]
    lower = ctx.sub(len(ctx.steps) - 1)
    if isinstance(step, AbelianStep):
        side = _AbelianSide(step, lower)
    elif isinstance(step, SurfaceStep) and step.exact:
        side = _SurfaceSide(step)
    else:
        raise TypeError("top step is not an exact amalgam")
    w = w.lift(ctx.top) if w.basis != ctx.top else w
    return amalgam_reduce(side, lower, side.parse(w, ctx))


@dataclass(frozen=True)
class HnnData:
    """HNN extension of the group described by ``lower``: t a t^-1 relation
    identifies <lhs> with <rhs> (both cyclic, generated by words below)."""

    lhs: Word  # f_e image: t * rhs * t^-1 = lhs
    rhs: Word


def hnn_reduce(data: HnnData, lower: LevelContext, seq):
    """Britton reduction.  ``seq`` is a list of syllables: (0, Word) plain
    segments and (+1, None)/(-1, None) stable letters.  Returns
    (sequence, resolved); resolved is False when a membership oracle fails."""
    def merge(items):
        out = []
        for e, v in items:
            if e == 0 and out and out[-1][0] == 0:
                out[-1] = (0, out[-1][1] * v)
            else:
                out.append((e, v))
        return out

    items = merge(list(seq))
    while True:
        changed = False
        # drop trivial plain segments (keeps a lone final segment)
        for i, (e, v) in enumerate(items):
            if e == 0 and v.is_identity and len(items) > 1:
                del items[i]
                items = merge(items)
                changed = True
                break
        if changed:
            continue
        # cancel adjacent inverse stable letters
        for i in range(len(items) - 1):
            if items[i][0] != 0 and items[i][0] == -items[i + 1][0]:
                del items[i:i + 2]
                items = merge(items)
                changed = True
                break
        if changed:
            continue
        # pinch t^-1 u t with u in <lhs>, or t u t^-1 with u in <rhs>
        for i in range(len(items) - 2):
            e1 = items[i][0]
            e0, mid = items[i + 1]
            e2 = items[i + 2][0]
            if e0 != 0 or e1 == 0 or e1 != -e2:
                continue
            if e1 == -1:
                k = _cyclic_membership(mid, data.lhs, lower)
                rep = data.rhs
            else:
                k = _cyclic_membership(mid, data.rhs, lower)
                rep = data.lhs
            if k is UNKNOWN_SENTINEL:
                return None, False
            if k is None:
                continue
            items[i:i + 3] = [(0, rep ** k)]
            items = merge(items)
            changed = True
            break
        if not changed:
            return items, True


def hnn_verdict(data: HnnData, lower: LevelContext, seq) -> Verdict:
    items, ok = hnn_reduce(data, lower, seq)
    if not ok:
        return _unknown("stable-letter membership undecided")
    if any(e != 0 for e, _ in items):
        return _nontrivial("britton-normal-form")
    if not items:
        return _trivial("britton-normal-form")
    verd = lower.verdict(items[0][1])
    if verd.is_unknown:
        return _unknown("lower-level segment undecided")
    return (_trivial("britton-normal-form") if verd.is_trivial
            else _nontrivial("britton-normal-form"))


# -- morphism checking ---------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    status: str  # "exact" | "sampled(n)" | "assumed"
    detail: str = ""

    def __bool__(self):
        return self.ok


def check_morphism(m: Morphism, target_ctx: Optional[LevelContext] = None,
                   samples: Sequence[Morphism] = (),
                   rewrite_depth: int = 6) -> CheckResult:
    """Verify that every source relator maps to the identity of the target.

    Exact for free targets, abelian targets, and targets with a word-problem
    context; otherwise the relator images are attacked with bounded rewriting
    and, failing that, sampled through the supplied target-to-base morphisms.
    """
    pending = []
    for rel in m.source.relators:
        img = m(rel)
        if img.is_identity:
            continue
        if m.target.is_free:
            return CheckResult(False, "exact", f"relator {rel} maps to {img}")
        if m.target.is_abelian:
            counts = {}
            for x in img.letters:
                counts[abs(x)] = counts.get(abs(x), 0) + (1 if x > 0 else -1)
            if any(counts.values()):
                return CheckResult(False, "exact", f"relator {rel} maps to {img}")
            continue
        if target_ctx is not None:
            verd = target_ctx.verdict(img)
            if verd.is_trivial:
                continue
            if verd.is_nontrivial:
                return CheckResult(False, "exact", f"relator {rel} maps to {img}")
            pending.append((rel, img))
            continue
        pending.append((rel, img))
    if not pending:
        return CheckResult(True, "exact")
    still = []
    for rel, img in pending:
        if rewrite_trivial(img, m.target.relators, max_depth=rewrite_depth):
            continue
        still.append((rel, img))
    if not still:
        return CheckResult(True, "exact")
    if samples:
        for rel, img in still:
            for h in samples:
                if not h(img).is_identity:
                    return CheckResult(False, f"sampled({len(samples)})",
                                       f"relator {rel} image separated")
        return CheckResult(True, f"sampled({len(samples)})",
                           f"{len(still)} relator image(s) only sampled")
    return CheckResult(True, "assumed",
                       f"{len(still)} relator image(s) unverified")


# -- peg conjugacy -------------------------------------------------------------


def peg_carrier_conjugacy(peg1: Word, peg2: Word) -> bool:
    """Do two base pegs generate conjugate maximal cyclic carriers?

    Compares primitive roots up to cyclic rotation and inversion.
    """
    if peg1.is_identity or peg2.is_identity:
        raise ValueError("pegs must be non-identity")
    r1, _ = W.primitive_root(peg1)
    r2, _ = W.primitive_root(peg2)
    same, _ = W.is_conjugate_cyclic(r1, r2)
    if same:
        return True
    inv_same, _ = W.is_conjugate_cyclic(r1, r2.inv())
    return inv_same
