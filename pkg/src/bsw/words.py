"""Exact free-group word arithmetic.

Words are freely reduced sequences of signed letters over a fixed basis;
generator ``i`` (0-based) appears as letter ``i+1`` and its inverse as
``-(i+1)``.  Everything here is immutable and pure.

Literal syntax (shared by the CLI and all file formats): generators are
identifiers, inversion is ``^-1`` (any integer exponent is accepted),
concatenation is ``*``; the identity is the empty string or ``1``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Sequence

from bsw import _kernels as _k

__all__ = [
    "Basis",
    "Word",
    "CyclicWord",
    "WHOLE_GROUP",
    "WordSyntaxError",
    "parse_word",
    "reduce",
    "commutator",
    "primitive_root",
    "commutes",
    "centralizer",
    "is_conjugate_cyclic",
    "max_piece_ratio",
]

#: Sentinel returned by :func:`centralizer` on the identity.
WHOLE_GROUP = object()

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class WordSyntaxError(ValueError):
    """Malformed word literal; carries the offset of the offending factor."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class Basis:
    """An ordered list of distinct generator names; rank = len(names)."""

    __slots__ = ("names", "_index")

    def __init__(self, names: Sequence[str]):
        names = tuple(names)
        if not names:
            raise ValueError("basis must have at least one generator")
        if len(set(names)) != len(names):
            raise ValueError("basis names must be pairwise distinct")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    def __setattr__(self, *a):
        raise AttributeError("Basis is immutable")

    @property
    def rank(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self._index[name]

    def __contains__(self, name):
        return name in self._index

    def __eq__(self, other):
        return isinstance(other, Basis) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return f"Basis({', '.join(self.names)})"

    def extends(self, other: "Basis") -> bool:
        """True if other's names are a prefix of ours (levels share indices)."""
        return self.names[: len(other.names)] == other.names

    def gen(self, name: str) -> "Word":
        return Word(self, (self._index[name] + 1,))


class Word:
    """A freely reduced word.  Construction reduces; equality is exact."""

    __slots__ = ("basis", "letters", "_hash")

    def __init__(self, basis: Basis, letters: Iterable[int], _reduced=False):
        if not _reduced:
            letters = tuple(_k.reduce_ints(list(letters)))
        else:
            letters = tuple(letters)
        rank = basis.rank
        for x in letters:
            if x == 0 or abs(x) > rank:
                raise IndexError(f"letter {x} out of basis range 1..{rank}")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):
        raise AttributeError("Word is immutable")

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def identity(basis: Basis) -> "Word":
        return Word(basis, (), _reduced=True)

    def lift(self, basis: Basis) -> "Word":
        """Reinterpret over a basis whose names extend ours."""
        if basis == self.basis:
            return self
        if not basis.extends(self.basis):
            raise ValueError("target basis does not extend the word's basis")
        return Word(basis, self.letters, _reduced=True)

    # -- group operations ----------------------------------------------------

    def __mul__(self, other: "Word") -> "Word":
        if self.basis != other.basis:
            raise ValueError("cannot multiply words over different bases")
        return Word(self.basis, _k.concat_reduced(self.letters, other.letters),
                    _reduced=True)

    def inv(self) -> "Word":
        return Word(self.basis, tuple(-x for x in reversed(self.letters)),
                    _reduced=True)

    def __pow__(self, n: int) -> "Word":
        if n == 0:
            return Word.identity(self.basis)
        base = self if n > 0 else self.inv()
        n = abs(n)
        # square-and-multiply keeps the intermediate reductions cheap
        result = Word.identity(self.basis)
        while True:
            if n & 1:
                result = result * base
            n >>= 1
            if not n:
                return result
            base = base * base

    def conj(self, g: "Word") -> "Word":
        """g * self * g^-1."""
        return g * self * g.inv()

    # -- inspection ------------------------------------------------------

    @property
    def is_identity(self) -> bool:
        return not self.letters

    def __len__(self):
        return len(self.letters)

    def __eq__(self, other):
        return (isinstance(other, Word) and self.letters == other.letters
                and self.basis == other.basis)

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.basis.names, self.letters))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        return f"Word({self})"

    def __str__(self):
        return format_word(self)

    def letter_names(self) -> set:
        return {self.basis.names[abs(x) - 1] for x in self.letters}

    def syllables(self):
        """Yield (generator index, exponent) runs."""
        letters = self.letters
        i = 0
        n = len(letters)
        while i < n:
            j = i
            while j < n and letters[j] == letters[i]:
                j += 1
            g = abs(letters[i]) - 1
            e = (j - i) if letters[i] > 0 else -(j - i)
            yield g, e
            i = j

    def cyclic_reduced(self):
        """Return (core, p) with self == p * core * p^-1 and core cyclically reduced."""
        letters = list(self.letters)
        i, j = 0, len(letters)
        while j - i >= 2 and letters[i] == -letters[j - 1]:
            i += 1
            j -= 1
        core = Word(self.basis, letters[i:j], _reduced=True)
        prefix = Word(self.basis, letters[:i], _reduced=True)
        return core, prefix


class CyclicWord:
    """A cyclically reduced word up to rotation; used for pieces and pegs."""

    __slots__ = ("representative",)

    def __init__(self, word: Word):
        core, _ = word.cyclic_reduced()
        if core.is_identity:
            raise ValueError("cyclic word must be non-identity")
        object.__setattr__(self, "representative", core)

    def __setattr__(self, *a):
        raise AttributeError("CyclicWord is immutable")

    def rotations(self):
        letters = self.representative.letters
        n = len(letters)
        doubled = letters + letters
        return [doubled[i:i + n] for i in range(n)]

    def __eq__(self, other):
        if not isinstance(other, CyclicWord):
            return False
        a = self.representative
        b = other.representative
        if a.basis != b.basis or len(a) != len(b):
            return False
        return b.letters in (tuple(r) for r in self.rotations())

    def __hash__(self):
        # rotation-invariant: least rotation
        return hash((self.representative.basis.names,
                     min(tuple(r) for r in self.rotations())))

    def __repr__(self):
        return f"CyclicWord({self.representative})"


# -- literals ------------------------------------------------------------


def parse_word(basis: Basis, text: str) -> Word:
    """Parse the literal syntax, e.g. ``x1*x2^-1*x1^2``."""
    s = text.strip()
    if s in ("", "1"):
        return Word.identity(basis)
    letters: list[int] = []
    pos = 0
    for factor in s.split("*"):
        stripped = factor.strip()
        if not stripped:
            raise WordSyntaxError("empty factor", pos)
        m = _IDENT.match(stripped)
        if not m or (stripped[m.end():].strip() and
                     not stripped[m.end():].strip().startswith("^")):
            raise WordSyntaxError(f"bad factor {stripped!r}", pos)
        name = m.group(0)
        rest = stripped[m.end():].strip()
        if rest:
            try:
                exp = int(rest[1:].strip())
            except ValueError:
                raise WordSyntaxError(f"bad exponent in {stripped!r}", pos) from None
        else:
            exp = 1
        if name not in basis:
            raise WordSyntaxError(f"unknown generator {name!r}", pos)
        idx = basis.index(name) + 1
        letters.extend([idx if exp > 0 else -idx] * abs(exp))
        pos += len(factor) + 1
    return Word(basis, letters)


def format_word(w: Word) -> str:
    """Canonical syllable form; identity prints as ``1``."""
    if w.is_identity:
        return "1"
    parts = []
    for g, e in w.syllables():
        name = w.basis.names[g]
        parts.append(name if e == 1 else f"{name}^{e}")
    return "*".join(parts)


# -- operations ------------------------------------------------------------


def reduce(basis: Basis, raw: Iterable[int]) -> Word:
    """Freely reduce a raw signed-letter sequence."""
    return Word(basis, raw)


def commutator(u: Word, v: Word) -> Word:
    """u v u^-1 v^-1."""
    return u * v * u.inv() * v.inv()


def primitive_root(w: Word):
    """Return (root, k) with w == root**k, root not a proper power, k maximal.

    The input is conjugate-normalized first, so the root of u c u^-1 is
    u r u^-1 for the cyclic root r of c.
    """
    if w.is_identity:
        raise ValueError("identity has no primitive root")
    core, prefix = w.cyclic_reduced()
    letters = core.letters
    n = len(letters)
    for d in range(1, n + 1):
        if n % d:
            continue
        if letters == letters[:d] * (n // d):
            root_core = Word(w.basis, letters[:d], _reduced=True)
            root = prefix * root_core * prefix.inv()
            return root, n // d
    raise AssertionError("unreachable")


def commutes(u: Word, v: Word) -> bool:
    """True iff u and v commute in the free group."""
    return commutator(u, v).is_identity


def centralizer(w: Word):
    """Generator of C(w): the primitive root, or WHOLE_GROUP for the identity."""
    if w.is_identity:
        return WHOLE_GROUP
    root, _ = primitive_root(w)
    return root


def is_conjugate_cyclic(u: Word, v: Word):
    """Decide conjugacy; on success also return g with v == g^-1 * u * g."""
    if u.basis != v.basis:
        raise ValueError("words over different bases")
    cu, pu = u.cyclic_reduced()
    cv, pv = v.cyclic_reduced()
    if len(cu) != len(cv):
        return False, None
    if cu.is_identity:
        return True, Word.identity(u.basis)
    doubled = cu.letters + cu.letters
    n = len(cu)
    for s in range(n):
        if doubled[s:s + n] == cv.letters:
            # rot_s(cu) = cu[:s]^-1 cu cu[:s]
            shift = Word(u.basis, cu.letters[:s], _reduced=True)
            g = pu * shift * pv.inv()
            return True, g
    return False, None


# -- small cancellation -----------------------------------------------------


def _rotation_entries(relators):
    """All positioned occurrences: (doubled letters, start, length, relator index)."""
    entries = []
    for ridx, rel in enumerate(relators):
        core = rel.representative if isinstance(rel, CyclicWord) else rel
        if isinstance(core, Word):
            if core.is_identity:
                raise ValueError("relators must be non-identity")
            core = CyclicWord(core).representative
        letters = core.letters
        n = len(letters)
        for sign in (1, -1):
            base = letters if sign == 1 else tuple(-x for x in reversed(letters))
            doubled = base + base
            for s in range(n):
                entries.append((doubled, s, n, ridx))
    return entries


def _sort_entries(entries):
    """Sort positioned rotations lexicographically with adaptive prefix keys."""
    chunk = 32

    def key(entry, depth=0, width=chunk):
        doubled, s, n, _ = entry
        end = min(n, depth + width)
        return tuple(doubled[s + depth:s + end])

    entries = sorted(entries, key=key)
    # refine runs whose short keys tie
    depth = chunk
    while True:
        runs = []
        i = 0
        while i < len(entries):
            j = i + 1
            ki = key(entries[i], 0, depth)
            while j < len(entries) and key(entries[j], 0, depth) == ki and \
                    len(ki) == depth:
                j += 1
            if j - i > 1:
                runs.append((i, j))
            i = j
        if not runs:
            return entries
        for i, j in runs:
            entries[i:j] = sorted(
                entries[i:j],
                key=lambda e: tuple(e[0][e[1]:e[1] + e[2]]))
        return entries


def _adjacent_lcp(a, b):
    da, sa, na, _ = a
    db, sb, nb, _ = b
    return _k.common_prefix_len(da[sa:sa + na], db[sb:sb + nb], min(na, nb))


def max_piece_ratio(relators) -> Fraction:
    """Supremum of |piece| / |relator| over the symmetrized relator set.

    A piece is a common prefix of two distinct positioned occurrences (relator,
    sign, cyclic shift) among all rotations of the relators and their inverses.
    The set satisfies C'(lambda) iff the returned ratio is < lambda.
    """
    relators = list(relators)
    if not relators:
        return Fraction(0)
    entries = _sort_entries(_rotation_entries(relators))
    m = len(entries)
    lcp = [_adjacent_lcp(entries[i], entries[i + 1]) for i in range(m - 1)]
    nrel = max(e[3] for e in entries) + 1
    best = [0] * nrel
    lengths = {}
    for _, _, n, ridx in entries:
        lengths[ridx] = n
    for i, (_, _, n, ridx) in enumerate(entries):
        b = best[ridx]
        # walk right, then left, with the running-min LCP
        run = None
        for j in range(i + 1, m):
            run = lcp[j - 1] if run is None else min(run, lcp[j - 1])
            if run <= b:
                break
            b = max(b, min(run, entries[j][2]))
        run = None
        for j in range(i - 1, -1, -1):
            run = lcp[j] if run is None else min(run, lcp[j])
            if run <= b:
                break
            b = max(b, min(run, entries[j][2]))
        best[ridx] = b
    ratio = Fraction(0)
    for ridx, n in lengths.items():
        ratio = max(ratio, Fraction(best[ridx], n))
    return ratio
