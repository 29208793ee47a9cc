"""Towers over a free base: floors of surface flats, abelian flats, and free
factors, each witnessed by a retraction.

A tower is stored stage by stage (one flat per stage); floors group
consecutive stages for the public level numbering.  Validity checks run at
glue time and are tiered: exact where the carrier of a peg or boundary word
is recognizable (base words; handle words of a one-boundary surface flat),
three-valued otherwise.  An Unknown validity verdict raises unless
``assume_valid`` is set, and the acknowledgement is recorded on the tower.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from bsw import words as W
from bsw.words import Basis, Word
from bsw import normal as N
from bsw.normal import (AbelianStep, FreeStep, LevelContext, Morphism,
                        Presentation, SurfaceStep)

__all__ = [
    "ValidityError",
    "ValidityUnknown",
    "AbelianFlatSpec",
    "SurfaceFlatSpec",
    "AbelianFlat",
    "SurfaceFlat",
    "FreeFactor",
    "Tower",
    "new_tower",
    "glue_free_factor",
    "glue_abelian_flat",
    "glue_surface_flat",
    "check_legitimate_ordering",
    "normalize_convention",
]


class ValidityError(ValueError):
    """A tower condition failed exactly."""


class ValidityUnknown(ValueError):
    """A tower condition could not be decided; pass assume_valid to proceed."""


# -- input specs (also the file-format payloads) -------------------------------


@dataclass(frozen=True)
class AbelianFlatSpec:
    peg: str
    rank: int
    names: Optional[Tuple[str, ...]] = None


@dataclass(frozen=True)
class SurfaceFlatSpec:
    genus: int
    boundary: Tuple[str, ...]
    images: Tuple[str, ...]
    names: Optional[Tuple[str, ...]] = None
    aux: Optional[str] = None  # fresh letter for the cyclic-base exception


# -- stored flats ---------------------------------------------------------------


@dataclass(frozen=True)
class AbelianFlat:
    flat_id: str
    peg: Word  # over the stage basis below this flat
    gens: Tuple[str, ...]
    a_names: Tuple[str, ...] = ()
    peg_col: Tuple[int, ...] = ()
    matrix: Tuple[Tuple[int, ...], ...] = ()

    @property
    def kind(self):
        return "abelian"

    @property
    def closed(self):
        return bool(self.a_names)

    @property
    def rank(self):
        return len(self.gens)

    @property
    def ordering_gens(self):
        return self.gens + self.a_names


@dataclass(frozen=True)
class SurfaceFlat:
    flat_id: str
    genus: int
    boundary: Tuple[Word, ...]
    gens: Tuple[str, ...]  # 2*genus handle generators, then stable letters
    images: Tuple[Word, ...]
    aux: Optional[str] = None

    @property
    def kind(self):
        return "surface"

    @property
    def handles(self):
        return self.gens[:2 * self.genus]

    @property
    def stable_letters(self):
        return self.gens[2 * self.genus:]

    @property
    def ordering_gens(self):
        return self.gens


@dataclass(frozen=True)
class FreeFactor:
    flat_id: str
    gens: Tuple[str, ...]

    @property
    def kind(self):
        return "free"

    @property
    def rank(self):
        return len(self.gens)

    @property
    def ordering_gens(self):
        return self.gens


def _commutator_word(basis: Basis, u: Word, v: Word) -> Word:
    return W.commutator(u.lift(basis), v.lift(basis))


def _surface_relator(basis: Basis, flat: SurfaceFlat) -> Word:
    """Handle commutators times the inverse of the glued boundary product."""
    rel = Word.identity(basis)
    handles = flat.handles
    for i in range(0, len(handles) - 1, 2):
        rel = rel * _commutator_word(basis, basis.gen(handles[i]),
                                     basis.gen(handles[i + 1]))
    boundary_product = Word.identity(basis)
    for i, bword in enumerate(flat.boundary):
        curve = bword.lift(basis)
        if i > 0:
            t = basis.gen(flat.stable_letters[i - 1])
            curve = t * curve * t.inv()
        boundary_product = boundary_product * curve
    return rel * boundary_product.inv()


def _flat_relators(basis: Basis, flat) -> Tuple[Word, ...]:
    if isinstance(flat, FreeFactor):
        return ()
    if isinstance(flat, AbelianFlat):
        peg = flat.peg.lift(basis)
        gens = flat.gens + flat.a_names
        rels = [_commutator_word(basis, basis.gen(g), peg) for g in gens]
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                rels.append(_commutator_word(basis, basis.gen(gens[i]),
                                             basis.gen(gens[j])))
        if flat.closed:
            for i, z in enumerate(flat.gens):
                img = peg ** flat.peg_col[i]
                for j, a in enumerate(flat.a_names):
                    img = img * basis.gen(a) ** flat.matrix[i][j]
                rels.append(basis.gen(z) * img.inv())
        return tuple(rels)
    if isinstance(flat, SurfaceFlat):
        return (_surface_relator(basis, flat),)
    raise TypeError(flat)


def _flat_step(lower_basis: Basis, flat):
    if isinstance(flat, FreeFactor):
        return FreeStep(flat.gens)
    if isinstance(flat, AbelianFlat):
        return AbelianStep(flat.peg.lift(lower_basis), flat.gens,
                           flat.a_names, flat.peg_col, flat.matrix)
    if isinstance(flat, SurfaceFlat):
        xs = flat.handles
        xbasis = Basis(xs) if xs else None
        bword = Word.identity(xbasis) if xbasis else None
        if xbasis:
            tmp = Word.identity(xbasis)
            for i in range(0, len(xs) - 1, 2):
                tmp = tmp * W.commutator(xbasis.gen(xs[i]), xbasis.gen(xs[i + 1]))
            bword = tmp
        exact = len(flat.boundary) == 1 and flat.genus >= 1
        if not exact or xbasis is None:
            return SurfaceStep(flat.boundary[0].lift(lower_basis), flat.gens,
                               bword if bword is not None else
                               Word.identity(lower_basis), exact=False)
        return SurfaceStep(flat.boundary[0].lift(lower_basis), xs, bword,
                           exact=True)
    raise TypeError(flat)


class Tower:
    """Immutable tower; glue operations return extended copies."""

    __slots__ = ("base", "flats", "floors", "stages", "retractions",
                 "assumed_notes", "_ctx", "_to_base")

    def __init__(self, base: Basis, flats=(), floors=(), stages=None,
                 retractions=(), assumed_notes=()):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "flats", tuple(flats))
        object.__setattr__(self, "floors", tuple(tuple(f) for f in floors))
        if stages is None:
            stages = (Presentation(base.names),)
        object.__setattr__(self, "stages", tuple(stages))
        object.__setattr__(self, "retractions", tuple(retractions))
        object.__setattr__(self, "assumed_notes", tuple(assumed_notes))
        object.__setattr__(self, "_ctx", None)
        object.__setattr__(self, "_to_base", None)

    def __setattr__(self, *a):
        raise AttributeError("Tower is immutable")

    # -- shape ------------------------------------------------------------

    @property
    def height(self) -> int:
        return len(self.floors)

    @property
    def top(self) -> Presentation:
        return self.stages[-1]

    def flat_by_id(self, flat_id: str):
        for f in self.flats:
            if f.flat_id == flat_id:
                return f
        raise KeyError(flat_id)

    def stage_of_flat(self, flat_id: str) -> int:
        for i, f in enumerate(self.flats):
            if f.flat_id == flat_id:
                return i + 1
        raise KeyError(flat_id)

    def _floor_break(self, level: int) -> int:
        """Stage index corresponding to floor level."""
        if not 0 <= level <= self.height:
            raise IndexError(f"level {level} out of range 0..{self.height}")
        count = 0
        for fl in self.floors[:level]:
            count += len(fl)
        return count

    def presentation_at(self, level: int) -> Presentation:
        return self.stages[self._floor_break(level)]

    def _stage_down(self, i: int) -> Morphism:
        """Stage retraction i+1 -> i with any auxiliary letter killed."""
        r = self.retractions[i]
        aux = getattr(self.flats[i], "aux", None)
        if aux is None:
            return r
        lower = self.stages[i]
        kill = {n: lower.basis.gen(n) for n in lower.names}
        kill[aux] = Word.identity(lower.basis)
        return r.then(Morphism(r.target, lower, kill, "drop-aux"))

    def retraction_at(self, level: int) -> Morphism:
        """Retraction from floor level to floor level-1 (composite of the
        stage retractions inside the floor).

        A single-flat floor using the cyclic-base exception returns the honest
        map into the lower level freely extended by the auxiliary letter;
        composites collapse the auxiliary letter to the identity.
        """
        if not 1 <= level <= self.height:
            raise IndexError(f"level {level} out of range 1..{self.height}")
        hi = self._floor_break(level)
        lo = self._floor_break(level - 1)
        if hi - lo == 1:
            return self.retractions[lo]
        m = self._stage_down(hi - 1)
        for i in range(hi - 2, lo - 1, -1):
            m = m.then(self._stage_down(i))
        return m

    # -- word-problem context ------------------------------------------------

    def context(self) -> LevelContext:
        ctx = self._ctx
        if ctx is None:
            steps = []
            for i, flat in enumerate(self.flats):
                steps.append(_flat_step(self.stages[i].basis, flat))
            ctx = LevelContext(self.base, steps,
                               [p.basis for p in self.stages],
                               to_base=self._base_maps())
            object.__setattr__(self, "_ctx", ctx)
        return ctx

    def context_at_stage(self, stage: int) -> LevelContext:
        return self.context().sub(stage)

    def _base_maps(self):
        maps = self._to_base
        if maps is None:
            maps = [lambda w: w]
            for i in range(len(self.retractions)):
                prev = maps[i]
                down = self._stage_down(i)
                maps.append(lambda w, _d=down, _p=prev: _p(_d(w)))
            maps = tuple(maps)
            object.__setattr__(self, "_to_base", maps)
        return maps

    def to_base(self, w: Word, stage: Optional[int] = None) -> Word:
        """Composite retraction image in the free base."""
        if stage is None:
            stage = len(self.flats)
        return self._base_maps()[stage](w)

    def verdict(self, w: Word) -> N.Verdict:
        return self.context().verdict(w)

    def word(self, text: str) -> Word:
        return self.top.word(text)

    def summary(self) -> str:
        lines = [f"tower: base rank {self.base.rank}, height {self.height}, "
                 f"generators {len(self.top.names)}"]
        for lvl, floor in enumerate(self.floors, start=1):
            parts = []
            for fi in floor:
                flat = self.flats[fi]
                if isinstance(flat, AbelianFlat):
                    extra = " (closed)" if flat.closed else ""
                    parts.append(f"abelian flat {flat.flat_id}: peg {flat.peg}, "
                                 f"rank {flat.rank}{extra}")
                elif isinstance(flat, SurfaceFlat):
                    bnd = ", ".join(str(b) for b in flat.boundary)
                    parts.append(f"surface flat {flat.flat_id}: genus {flat.genus}, "
                                 f"boundary {bnd}")
                else:
                    parts.append(f"free factor {flat.flat_id}: rank {flat.rank}")
            lines.append(f"floor {lvl}: " + "; ".join(parts))
        for note in self.assumed_notes:
            lines.append(f"assumed: {note}")
        return "\n".join(lines)

    # -- gluing ------------------------------------------------------------

    def _next_id(self) -> str:
        return f"flat{len(self.flats) + 1}"

    def _extend(self, flat, retraction, new_floor=True, note=None):
        lower = self.top
        names = lower.names + tuple(flat.gens) + tuple(
            getattr(flat, "a_names", ()))
        pres = Presentation(
            names, tuple(r.lift(Basis(names)) for r in lower.relators)
            + _flat_relators(Basis(names), flat))
        floors = self.floors + ((len(self.flats),),) if new_floor else \
            self.floors[:-1] + (self.floors[-1] + (len(self.flats),),)
        notes = self.assumed_notes + ((note,) if note else ())
        return Tower(self.base, self.flats + (flat,), floors,
                     self.stages + (pres,), self.retractions + (retraction,),
                     notes)


def new_tower(base_rank: int, names: Optional[Sequence[str]] = None) -> Tower:
    if names is None:
        names = tuple(f"e{i + 1}" for i in range(base_rank))
    if len(names) != base_rank:
        raise ValueError("base names do not match rank")
    return Tower(Basis(names))


def glue_free_factor(t: Tower, rank: int,
                     names: Optional[Sequence[str]] = None) -> Tower:
    if rank < 1:
        raise ValidityError("free factor rank must be >= 1")
    if names is None:
        names = tuple(f"f{len(t.flats) + 1}_{j + 1}" for j in range(rank))
    names = tuple(names)
    _check_fresh_names(t, names)
    flat = FreeFactor(t._next_id(), names)
    lower = t.top
    new_names = lower.names + names
    pres = Presentation(new_names,
                        tuple(r.lift(Basis(new_names)) for r in lower.relators))
    images = {n: lower.basis.gen(n) for n in lower.names}
    for n in names:
        images[n] = Word.identity(lower.basis)
    r = Morphism(pres, lower, images, f"r{len(t.flats) + 1}")
    return t._extend(flat, r)


def _check_fresh_names(t: Tower, names):
    clashes = set(names) & set(t.top.names)
    if clashes:
        raise ValidityError(f"generator names already in use: {sorted(clashes)}")
    if len(set(names)) != len(names):
        raise ValidityError("new generator names must be distinct")


# -- peg carrier analysis -------------------------------------------------------


def _carrier_descriptor(t: Tower, w: Word):
    """('base', cyclic-class) | ('surface', flat_id, cyclic-class) |
    ('abflat', flat_id) | None when unrecognized.

    The cyclic class is the rotation-minimal tuple over the root and its
    inverse, an exact conjugacy invariant within the carrier's free group.
    """
    names = w.letter_names()
    if names <= set(t.base.names):
        base_word = Word(t.base,
                         [_reindex(x, w.basis, t.base) for x in w.letters])
        root, _ = W.primitive_root(base_word)
        return ("base", _cyclic_class(root))
    for flat in t.flats:
        if isinstance(flat, AbelianFlat):
            if names <= set(flat.gens) | set(flat.a_names):
                return ("abflat", flat.flat_id)
        elif isinstance(flat, SurfaceFlat):
            if (names <= set(flat.handles) and len(flat.boundary) == 1
                    and flat.genus >= 1):
                xbasis = Basis(flat.handles)
                word = Word(xbasis, [_reindex(x, w.basis, xbasis)
                                     for x in w.letters])
                root, _ = W.primitive_root(word)
                bword = Word.identity(xbasis)
                for i in range(0, len(flat.handles) - 1, 2):
                    bword = bword * W.commutator(xbasis.gen(flat.handles[i]),
                                                 xbasis.gen(flat.handles[i + 1]))
                broot, _ = W.primitive_root(bword)
                if _cyclic_class(root) == _cyclic_class(broot):
                    return None  # boundary-parallel: carrier crosses the edge
                return ("surface", flat.flat_id, _cyclic_class(root))
    return None


def _reindex(letter: int, src: Basis, dst: Basis) -> int:
    name = src.names[abs(letter) - 1]
    idx = dst.index(name) + 1
    return idx if letter > 0 else -idx


def _cyclic_class(root: Word):
    core, _ = root.cyclic_reduced()
    cands = []
    for letters in (core.letters, tuple(-x for x in reversed(core.letters))):
        doubled = letters + letters
        n = len(letters)
        cands.extend(tuple(doubled[i:i + n]) for i in range(n))
    return min(cands) if cands else ()


def _descriptors_conjugate(d1, d2) -> bool:
    if d1[0] != d2[0]:
        return False
    if d1[0] == "base":
        return d1[1] == d2[1]
    if d1[0] == "surface":
        return d1[1] == d2[1] and d1[2] == d2[2]
    return d1[1] == d2[1]


def _previous_peg_descriptors(t: Tower):
    out = []
    for flat in t.flats:
        if isinstance(flat, AbelianFlat):
            out.append((flat.flat_id, _carrier_descriptor(t, flat.peg)))
    return out


def glue_abelian_flat(t: Tower, spec: AbelianFlatSpec,
                      assume_valid: bool = False) -> Tower:
    if spec.rank < 1:
        raise ValidityError("abelian flat rank must be >= 1")
    peg = t.top.word(spec.peg) if isinstance(spec.peg, str) else \
        spec.peg.lift(t.top.basis)
    if peg.is_identity:
        raise ValidityError("peg must be non-identity")
    verd = t.verdict(peg)
    note = None
    if verd.is_trivial:
        raise ValidityError(f"peg {peg} is trivial in the current level")
    if verd.is_unknown:
        if not assume_valid:
            raise ValidityUnknown(f"peg {peg}: triviality undecided")
        note = f"peg {peg}: triviality assumed non-trivial"
    desc = _carrier_descriptor(t, peg)
    if desc is None:
        if not assume_valid:
            raise ValidityUnknown(
                f"peg {peg}: maximal-abelian carrier not recognized")
        note = f"peg {peg}: carrier maximality assumed"
    elif desc[0] == "abflat":
        raise ValidityError(
            f"peg {peg} lies in the abelian flat {desc[1]} of a previous floor")
    else:
        for fid, other in _previous_peg_descriptors(t):
            if other is not None and _descriptors_conjugate(desc, other):
                raise ValidityError(
                    f"peg {peg} is conjugate to the peg of {fid}")
    names = tuple(spec.names) if spec.names else tuple(
        f"z{len(t.flats) + 1}_{j + 1}" for j in range(spec.rank))
    if len(names) != spec.rank:
        raise ValidityError("abelian flat names do not match rank")
    _check_fresh_names(t, names)
    flat = AbelianFlat(t._next_id(), peg, names)
    lower = t.top
    new_names = lower.names + names
    basis = Basis(new_names)
    pres = Presentation(new_names,
                        tuple(r.lift(basis) for r in lower.relators)
                        + _flat_relators(basis, flat))
    images = {n: lower.basis.gen(n) for n in lower.names}
    for n in names:
        images[n] = peg
    r = Morphism(pres, lower, images, f"r{len(t.flats) + 1}")
    return t._extend(flat, r, note=note)


def glue_surface_flat(t: Tower, spec: SurfaceFlatSpec,
                      assume_valid: bool = False) -> Tower:
    if spec.genus < 0:
        raise ValidityError("genus must be >= 0")
    if not spec.boundary:
        raise ValidityError("surface flat needs at least one boundary word")
    if spec.genus == 0 and len(spec.boundary) == 1:
        raise ValidityError("a disk is not a surface flat")
    lower = t.top
    boundary = tuple(lower.word(b) if isinstance(b, str) else b.lift(lower.basis)
                     for b in spec.boundary)
    notes = []
    for b in boundary:
        if b.is_identity:
            raise ValidityError("boundary words must be non-identity")
        verd = t.verdict(b)
        if verd.is_trivial:
            raise ValidityError(f"boundary word {b} is trivial")
        if verd.is_unknown:
            if not assume_valid:
                raise ValidityUnknown(f"boundary word {b}: triviality undecided")
            notes.append(f"boundary {b}: triviality assumed")
    n_gens = 2 * spec.genus + (len(spec.boundary) - 1)
    names = tuple(spec.names) if spec.names else tuple(
        [f"x{len(t.flats) + 1}_{j + 1}" for j in range(2 * spec.genus)]
        + [f"t{len(t.flats) + 1}_{j + 2}" for j in range(len(spec.boundary) - 1)])
    if len(names) != n_gens:
        raise ValidityError(
            f"surface flat needs {n_gens} generator names, got {len(names)}")
    _check_fresh_names(t, names)
    if len(spec.images) != n_gens:
        raise ValidityError("one retraction image per new generator required")

    # retraction target: the lower level, freely extended by the auxiliary
    # letter for the cyclic-base exception
    if spec.aux:
        aux_names = lower.names + (spec.aux,)
        target = Presentation(aux_names,
                              tuple(r.lift(Basis(aux_names))
                                    for r in lower.relators))
        target_ctx = LevelContext(
            t.base, list(t.context().steps) + [FreeStep((spec.aux,))],
            [p.basis for p in t.stages] + [target.basis])
    else:
        target = lower
        target_ctx = t.context()
    images = tuple(target.word(im) if isinstance(im, str) else
                   im.lift(target.basis) for im in spec.images)

    flat = SurfaceFlat(t._next_id(), spec.genus, boundary, names, images,
                       spec.aux)
    new_names = lower.names + names
    basis = Basis(new_names)
    pres = Presentation(new_names,
                        tuple(r.lift(basis) for r in lower.relators)
                        + _flat_relators(basis, flat))

    # the extended retraction must kill the new relator
    image_map = {n: target.basis.gen(n) for n in lower.names}
    for name, img in zip(names, images):
        image_map[name] = img
    r = Morphism(pres, target, image_map, f"r{len(t.flats) + 1}")
    rel_img = r(_surface_relator(basis, flat))
    verd = target_ctx.verdict(rel_img)
    if verd.is_nontrivial:
        raise ValidityError(
            f"retraction does not kill the surface relator (image {rel_img})")
    if verd.is_unknown:
        if not assume_valid:
            raise ValidityUnknown("surface relator image: triviality undecided")
        notes.append("surface relator image: triviality assumed")

    # the surface vertex must retract to a non-abelian image; the vertex group
    # is generated by the handles and the boundary curves, whose images are
    # the handle images and the (conjugated) boundary words
    candidates = list(images[:2 * spec.genus])
    candidates.append(boundary[0].lift(target.basis))
    for i in range(1, len(boundary)):
        timg = images[2 * spec.genus + i - 1]
        candidates.append(timg * boundary[i].lift(target.basis) * timg.inv())
    nonabelian = False
    undecided = False
    for i in range(len(candidates)):
        for j in range(i + 1, len(candidates)):
            comm = W.commutator(candidates[i], candidates[j])
            verd = target_ctx.verdict(comm)
            if verd.is_nontrivial:
                nonabelian = True
                break
            if verd.is_unknown:
                undecided = True
        if nonabelian:
            break
    if not nonabelian:
        if undecided:
            if not assume_valid:
                raise ValidityUnknown("non-abelian image check undecided")
            notes.append("non-abelian image assumed")
        else:
            raise ValidityError(
                "retraction images generate an abelian subgroup"
                + ("" if spec.aux else
                   " (declare the cyclic exception with an aux letter)"))
    note = "; ".join(notes) if notes else None
    return t._extend(flat, r, note=note)


# -- orderings -------------------------------------------------------------------


def check_legitimate_ordering(t: Tower, order: Sequence[str]):
    """Check a flat ordering; returns (ok, certificate lines)."""
    ids = [f.flat_id for f in t.flats]
    if sorted(order) != sorted(ids):
        raise ValueError("ordering must be a permutation of the flat ids")
    cert = []
    allowed = set(t.base.names)
    ok = True
    for fid in order:
        flat = t.flat_by_id(fid)
        stage = t.stage_of_flat(fid)
        r = t.retractions[stage - 1]
        image_names = set()
        for g in flat.ordering_gens:
            img = r(t.stages[stage].basis.gen(g))
            image_names |= img.letter_names()
        if getattr(flat, "aux", None):
            image_names.discard(flat.aux)
        missing = image_names - allowed
        line_ok = not missing
        cert.append((fid, line_ok,
                     f"r({fid}) uses {sorted(image_names)};"
                     f" missing {sorted(missing)}" if missing else
                     f"r({fid}) uses {sorted(image_names)}"))
        if missing:
            ok = False
        allowed |= set(flat.ordering_gens)
    return ok, cert


def natural_ordering(t: Tower):
    return [f.flat_id for f in t.flats]


# -- the Convention ---------------------------------------------------------------


def _base_peg(t: Tower, flat) -> bool:
    return isinstance(flat, AbelianFlat) and _word_over_base(t, flat.peg)


def _word_over_base(t: Tower, w: Word) -> bool:
    core, _ = w.cyclic_reduced()
    return core.letter_names() <= set(t.base.names)


def normalize_convention(t: Tower) -> Tower:
    """Collect base-peg abelian flats into the first floor, merge consecutive
    free factors, and keep every other floor a single flat.

    The top group is unchanged: generator sets agree and the relators agree
    as words, which is verified before returning.
    """
    first = [f for f in t.flats if _base_peg(t, f)]
    rest = [f for f in t.flats if not _base_peg(t, f)]
    rebuilt = Tower(t.base)
    for flat in first + rest:
        rebuilt = _reglue(rebuilt, flat)
    # floor grouping: the base-peg flats form floor 1; consecutive free
    # factors merge; everything else is a singleton floor
    floors = []
    idx = 0
    if first:
        floors.append(tuple(range(len(first))))
        idx = len(first)
    while idx < len(rebuilt.flats):
        if isinstance(rebuilt.flats[idx], FreeFactor):
            j = idx
            while (j + 1 < len(rebuilt.flats)
                   and isinstance(rebuilt.flats[j + 1], FreeFactor)):
                j += 1
            floors.append(tuple(range(idx, j + 1)))
            idx = j + 1
        else:
            floors.append((idx,))
            idx += 1
    out = Tower(t.base, rebuilt.flats, floors, rebuilt.stages,
                rebuilt.retractions, t.assumed_notes)
    _assert_same_group(t, out)
    return out


def _reglue(t: Tower, flat) -> Tower:
    if isinstance(flat, FreeFactor):
        return glue_free_factor(t, len(flat.gens), flat.gens)
    if isinstance(flat, AbelianFlat):
        t2 = glue_abelian_flat(
            t, AbelianFlatSpec(str(flat.peg), flat.rank, flat.gens),
            assume_valid=True)
        if flat.closed:
            # re-attach closure data
            base_flat = t2.flats[-1]
            closed = AbelianFlat(base_flat.flat_id, base_flat.peg,
                                 base_flat.gens, flat.a_names, flat.peg_col,
                                 flat.matrix)
            return _replace_last_flat(t2, closed)
        return t2
    if isinstance(flat, SurfaceFlat):
        return glue_surface_flat(
        t, SurfaceFlatSpec(flat.genus, tuple(str(b) for b in flat.boundary),
                           tuple(str(im) for im in flat.images), flat.gens,
                           flat.aux), assume_valid=True)
    raise TypeError(flat)


def _replace_last_flat(t: Tower, flat) -> Tower:
    lower = t.stages[-2]
    names = lower.names + flat.gens + flat.a_names
    basis = Basis(names)
    pres = Presentation(names, tuple(r.lift(basis) for r in lower.relators)
                        + _flat_relators(basis, flat))
    images = {n: lower.basis.gen(n) for n in lower.names}
    peg = flat.peg.lift(lower.basis)
    for i, z in enumerate(flat.gens):
        images[z] = peg ** (flat.peg_col[i] if flat.closed else 1)
    for a in flat.a_names:
        images[a] = Word.identity(lower.basis)
    r = Morphism(pres, lower, images, t.retractions[-1].label)
    return Tower(t.base, t.flats[:-1] + (flat,), t.floors,
                 t.stages[:-1] + (pres,), t.retractions[:-1] + (r,),
                 t.assumed_notes)


def _assert_same_group(t1: Tower, t2: Tower):
    if set(t1.top.names) != set(t2.top.names):
        raise AssertionError("normalization changed the generator set")
    def rel_key(pres):
        out = []
        for r in pres.relators:
            out.append(tuple((r.basis.names[abs(x) - 1], x > 0)
                             for x in r.letters))
        return sorted(out)
    if rel_key(t1.top) != rel_key(t2.top):
        raise AssertionError("normalization changed the relator set")
