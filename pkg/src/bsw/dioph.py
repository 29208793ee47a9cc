"""Integer-lattice machinery behind closures.

Matrices are tuples of tuples of Python ints (arbitrary precision).  Lattices
are represented by row-basis matrices in row Hermite normal form, which makes
lattice equality a tuple comparison.  The closure correspondence implemented
here: an embedding z_i -> c^{k_i} * prod_j a_j^{K[i][j]} of Z^m into the free
abelian group on (a_1..a_m) relative to the peg c, the linear system
x_i = k_i + sum_j K[i][j] y_j, and the solvability coset k + U where U is the
lattice spanned by the columns of K.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

__all__ = [
    "IntMatrix",
    "identity_matrix",
    "mat_mul",
    "mat_det",
    "hnf",
    "row_hnf",
    "snf",
    "lattice_from_rows",
    "lattice_from_columns",
    "lattice_index",
    "lattice_contains",
    "intersect_lattices",
    "ClosureEmbedding",
    "LinearSystem",
    "Coset",
    "embedding_to_system",
    "system_to_coset",
    "coset_to_embedding",
    "solvable",
]

IntMatrix = Tuple[Tuple[int, ...], ...]


def _as_matrix(rows) -> IntMatrix:
    rows = tuple(tuple(int(x) for x in r) for r in rows)
    if rows:
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("ragged matrix")
    return rows


def identity_matrix(n: int) -> IntMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    if a and b and len(a[0]) != len(b):
        raise ValueError("dimension mismatch")
    bt = tuple(zip(*b)) if b else ()
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt)
                 for row in a)


def mat_det(a: IntMatrix) -> int:
    n = len(a)
    if n == 0:
        return 1
    if any(len(r) != n for r in a):
        raise ValueError("determinant of non-square matrix")
    # fraction-free Gaussian elimination (Bareiss)
    m = [list(r) for r in a]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[-1][-1]


def row_hnf(rows) -> tuple[IntMatrix, IntMatrix]:
    """Row-style Hermite form: returns (H, U) with H = U * M, U unimodular.

    H has positive pivots, entries above each pivot reduced into [0, pivot),
    zero rows at the bottom.
    """
    m = [list(r) for r in _as_matrix(rows)]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    u = [list(r) for r in identity_matrix(nrows)]
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = None
        for i in range(r, nrows):
            if m[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        u[r], u[piv] = u[piv], u[r]
        # clear below by gcd steps
        for i in range(r + 1, nrows):
            while m[i][c] != 0:
                q = m[r][c] // m[i][c]
                for j in range(ncols):
                    m[r][j] -= q * m[i][j]
                for j in range(nrows):
                    u[r][j] -= q * u[i][j]
                m[r], m[i] = m[i], m[r]
                u[r], u[i] = u[i], u[r]
        if m[r][c] < 0:
            m[r] = [-x for x in m[r]]
            u[r] = [-x for x in u[r]]
        for i in range(r):
            q = m[i][c] // m[r][c]
            if q:
                for j in range(ncols):
                    m[i][j] -= q * m[r][j]
                for j in range(nrows):
                    u[i][j] -= q * u[r][j]
        r += 1
    return _as_matrix(m), _as_matrix(u)


def hnf(mat) -> tuple[IntMatrix, IntMatrix]:
    """Column-style Hermite form: returns (H, U) with H = M * U, U unimodular."""
    m = _as_matrix(mat)
    mt = tuple(zip(*m)) if m else ()
    h_t, u_t = row_hnf(mt)
    h = tuple(zip(*h_t)) if h_t else ()
    u = tuple(zip(*u_t)) if u_t else ()
    return _as_matrix(h), _as_matrix(u)


def snf(mat) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Smith normal form: returns (S, L, R) with S = L * M * R diagonal and
    each diagonal entry dividing the next; L, R unimodular."""
    a = [list(r) for r in _as_matrix(mat)]
    nr = len(a)
    nc = len(a[0]) if a else 0
    left = [list(r) for r in identity_matrix(nr)]
    right = [list(r) for r in identity_matrix(nc)]

    def row_op(i, j, q):  # row_i -= q * row_j
        for k in range(nc):
            a[i][k] -= q * a[j][k]
        for k in range(nr):
            left[i][k] -= q * left[j][k]

    def col_op(i, j, q):  # col_i -= q * col_j
        for k in range(nr):
            a[k][i] -= q * a[k][j]
        for k in range(nc):
            right[k][i] -= q * right[k][j]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        left[i], left[j] = left[j], left[i]

    def swap_cols(i, j):
        for k in range(nr):
            a[k][i], a[k][j] = a[k][j], a[k][i]
        for k in range(nc):
            right[k][i], right[k][j] = right[k][j], right[k][i]

    def clear_cross(t):
        # Euclid steps until column t below and row t right of the pivot vanish;
        # each swap strictly shrinks |a[t][t]|, so this terminates.
        changed = True
        while changed:
            changed = False
            for i in range(t + 1, nr):
                if a[i][t]:
                    q = a[i][t] // a[t][t]
                    row_op(i, t, q)
                    if a[i][t]:
                        swap_rows(t, i)
                    changed = True
            for j in range(t + 1, nc):
                if a[t][j]:
                    q = a[t][j] // a[t][t]
                    col_op(j, t, q)
                    if a[t][j]:
                        swap_cols(t, j)
                    changed = True

    t = 0
    while t < min(nr, nc):
        piv = None
        for i in range(t, nr):
            for j in range(t, nc):
                if a[i][j] != 0:
                    piv = (i, j)
                    break
            if piv:
                break
        if piv is None:
            break
        swap_rows(t, piv[0])
        swap_cols(t, piv[1])
        while True:
            clear_cross(t)
            bad = None
            for i in range(t + 1, nr):
                for j in range(t + 1, nc):
                    if a[i][j] % a[t][t]:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            row_op(t, bad, -1)  # row_t += row_bad, then re-clear
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            left[t] = [-x for x in left[t]]
        t += 1
    return _as_matrix(a), _as_matrix(left), _as_matrix(right)


# -- lattices ---------------------------------------------------------------


def lattice_from_rows(rows, ambient: int) -> IntMatrix:
    """Canonical (row-HNF, zero rows dropped) basis of the span of the rows."""
    rows = [r for r in _as_matrix(rows) if any(r)]
    if not rows:
        return ()
    if any(len(r) != ambient for r in rows):
        raise ValueError("row length does not match ambient rank")
    h, _ = row_hnf(rows)
    return tuple(r for r in h if any(r))


def lattice_from_columns(mat, ambient=None) -> IntMatrix:
    m = _as_matrix(mat)
    cols = tuple(zip(*m)) if m else ()
    return lattice_from_rows(cols, ambient if ambient is not None else
                             (len(m) if m else 0))


def lattice_index(lat: IntMatrix, ambient: int) -> int:
    """Index in Z^ambient; 0 means infinite (rank deficient)."""
    if len(lat) < ambient:
        return 0
    square = tuple(r[:ambient] for r in lat)
    return abs(mat_det(square))


def lattice_contains(lat: IntMatrix, vec) -> bool:
    """Membership via back-substitution against the HNF row basis."""
    v = [int(x) for x in vec]
    for row in lat:
        piv = next((j for j, x in enumerate(row) if x), None)
        if piv is None:
            continue
        if v[piv] % row[piv]:
            return False
        q = v[piv] // row[piv]
        for j in range(len(v)):
            v[j] -= q * row[j]
    return not any(v)


def intersect_lattices(u: IntMatrix, v: IntMatrix, ambient: int) -> IntMatrix:
    """Hermite basis of the intersection of two full-rank lattices."""
    if len(u) < ambient or len(v) < ambient:
        raise ValueError("intersection requires full-rank lattices")
    stacked = tuple(u) + tuple(v)
    h, t = row_hnf(stacked)
    rows = []
    for i, hr in enumerate(h):
        if not any(hr):
            # t[i] = (x | y) with x*U + y*V = 0, so x*U lies in both
            x = t[i][:len(u)]
            vec = [0] * ambient
            for coeff, row in zip(x, u):
                for j in range(ambient):
                    vec[j] += coeff * row[j]
            rows.append(tuple(vec))
    return lattice_from_rows(rows, ambient)


# -- the embedding / system / coset correspondence ---------------------------


@dataclass(frozen=True)
class ClosureEmbedding:
    """z_i -> c^{peg_col[i]} * prod_j a_j^{matrix[i][j]}; det(matrix) != 0."""

    rank: int
    peg_col: Tuple[int, ...]
    matrix: IntMatrix

    def __post_init__(self):
        object.__setattr__(self, "peg_col", tuple(int(x) for x in self.peg_col))
        object.__setattr__(self, "matrix", _as_matrix(self.matrix))
        if len(self.peg_col) != self.rank or len(self.matrix) != self.rank:
            raise ValueError("embedding data does not match rank")
        if mat_det(self.matrix) == 0:
            raise ValueError("embedding must have finite index (det != 0)")

    @staticmethod
    def identity(rank: int) -> "ClosureEmbedding":
        return ClosureEmbedding(rank, (0,) * rank, identity_matrix(rank))


@dataclass(frozen=True)
class LinearSystem:
    """x_i = offset[i] + sum_j coeffs[i][j] * y_j."""

    offset: Tuple[int, ...]
    coeffs: IntMatrix

    def __str__(self):
        lines = []
        for i, (k, row) in enumerate(zip(self.offset, self.coeffs)):
            terms = [str(k)]
            for j, c in enumerate(row):
                if c:
                    terms.append(f"{c}*y{j + 1}" if c != 1 else f"y{j + 1}")
            lines.append(f"x{i + 1} = " + " + ".join(terms))
        return "; ".join(lines)


@dataclass(frozen=True)
class Coset:
    """offset + lattice, the extension criterion for peg exponent tuples."""

    offset: Tuple[int, ...]
    lattice: IntMatrix  # row-HNF basis, full rank

    def __post_init__(self):
        object.__setattr__(self, "offset", tuple(int(x) for x in self.offset))
        object.__setattr__(self, "lattice", _as_matrix(self.lattice))

    @property
    def rank(self) -> int:
        return len(self.offset)

    def canonical_offset(self) -> Tuple[int, ...]:
        """Reduce the offset into the HNF fundamental domain."""
        v = list(self.offset)
        for row in self.lattice:
            piv = next(j for j, x in enumerate(row) if x)
            q = v[piv] // row[piv]
            for j in range(len(v)):
                v[j] -= q * row[j]
        return tuple(v)

    def __contains__(self, p) -> bool:
        d = [int(x) - k for x, k in zip(p, self.offset)]
        return lattice_contains(self.lattice, d)

    def same_coset(self, other: "Coset") -> bool:
        return (self.lattice == other.lattice
                and self.canonical_offset() == other.canonical_offset())

    def __str__(self):
        if self.rank == 1:
            return f"{self.canonical_offset()[0]}+{self.lattice[0][0]}Z"
        off = ",".join(str(x) for x in self.canonical_offset())
        rows = ";".join(",".join(str(x) for x in r) for r in self.lattice)
        return f"({off})+L[{rows}]"


def embedding_to_system(f: ClosureEmbedding) -> LinearSystem:
    return LinearSystem(f.peg_col, f.matrix)


def system_to_coset(sigma: LinearSystem) -> Coset:
    m = len(sigma.offset)
    lat = lattice_from_columns(sigma.coeffs, m)
    if len(lat) < m:
        raise ValueError("rank-deficient system has no finite-index coset")
    return Coset(sigma.offset, lat)


def coset_to_embedding(coset: Coset) -> ClosureEmbedding:
    """An embedding whose extension coset equals the input.

    Columns of the matrix are the HNF basis rows of the lattice, so the round
    trip embedding -> system -> coset is the identity on cosets.
    """
    m = coset.rank
    if len(coset.lattice) < m:
        raise ValueError("coset lattice must be full rank")
    matrix = tuple(zip(*coset.lattice))
    return ClosureEmbedding(m, coset.canonical_offset(), matrix)


def solvable(sigma: LinearSystem, p: Sequence[int]):
    """Decide Sigma(p, y) over the integers; returns (bool, y or None)."""
    m = len(sigma.offset)
    target = [int(x) - k for x, k in zip(p, sigma.offset)]
    if len(target) != m:
        raise ValueError("wrong tuple length")
    # solve coeffs * y = target via Smith form
    s, left, right = snf(sigma.coeffs)
    n = len(sigma.coeffs[0]) if sigma.coeffs else 0
    tv = [sum(left[i][j] * target[j] for j in range(m)) for i in range(m)]
    y0 = [0] * n
    for i in range(min(m, n)):
        d = s[i][i]
        if d == 0:
            if tv[i]:
                return False, None
            continue
        if tv[i] % d:
            return False, None
        y0[i] = tv[i] // d
    for i in range(n, m):
        if i < m and tv[i]:
            return False, None
    y = tuple(sum(right[i][j] * y0[j] for j in range(n)) for i in range(n))
    # verify by substitution
    for i in range(m):
        if sum(sigma.coeffs[i][j] * y[j] for j in range(n)) != target[i]:
            raise AssertionError("witness verification failed")
    return True, y
