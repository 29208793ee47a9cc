import random
from math import gcd

import pytest

from bsw import dioph as D


def rand_matrix(rng, rows, cols, bound=5):
    return tuple(tuple(rng.randint(-bound, bound) for _ in range(cols))
                 for _ in range(rows))


# -- normal forms ---------------------------------------------------------------


def test_hnf_identity():
    h, u = D.hnf(D.identity_matrix(3))
    assert h == D.identity_matrix(3)
    assert abs(D.mat_det(u)) == 1


def test_snf_divisibility_example():
    s, left, right = D.snf(((2, 0), (0, 3)))
    assert (s[0][0], s[1][1]) == (1, 6)
    assert D.mat_mul(D.mat_mul(left, ((2, 0), (0, 3))), right) == s


def determinantal_divisors(m, k):
    """gcd of all k x k minors; the classical independent Smith oracle."""
    from itertools import combinations
    rows = range(len(m))
    cols = range(len(m[0]) if m else 0)
    g = 0
    for rs in combinations(rows, k):
        for cs in combinations(cols, k):
            minor = tuple(tuple(m[i][j] for j in cs) for i in rs)
            g = gcd(g, abs(D.mat_det(minor)))
    return g


def test_snf_matches_determinantal_divisors():
    rng = random.Random(11)
    for _ in range(200):
        m = rand_matrix(rng, 3, 3, 3)
        s, left, right = D.snf(m)
        assert abs(D.mat_det(left)) == 1
        assert abs(D.mat_det(right)) == 1
        assert D.mat_mul(D.mat_mul(left, m), right) == s
        prev = 1
        for k in range(1, 4):
            dk = determinantal_divisors(m, k)
            expected = dk // prev if dk else 0
            assert s[k - 1][k - 1] == expected
            if dk == 0:
                break
            prev = dk


def test_hnf_recomposition_random():
    rng = random.Random(12)
    for _ in range(300):
        m = rand_matrix(rng, rng.randint(1, 4), rng.randint(1, 4))
        h, u = D.hnf(m)
        assert abs(D.mat_det(u)) == 1
        assert D.mat_mul(m, u) == h
        hr, ur = D.row_hnf(m)
        assert abs(D.mat_det(ur)) == 1
        assert D.mat_mul(ur, m) == hr


# -- lattices ----------------------------------------------------------------------


def test_lattice_membership():
    lat = D.lattice_from_rows(((2, 0), (0, 3)), 2)
    assert D.lattice_contains(lat, (4, -3))
    assert not D.lattice_contains(lat, (1, 0))
    assert D.lattice_index(lat, 2) == 6


def test_intersect_examples():
    two = D.lattice_from_rows(((2,),), 1)
    three = D.lattice_from_rows(((3,),), 1)
    assert D.intersect_lattices(two, three, 1) == ((6,),)
    assert D.intersect_lattices(two, two, 1) == two


def test_intersect_matches_box_enumeration():
    rng = random.Random(13)
    for _ in range(60):
        u = D.lattice_from_rows(rand_matrix(rng, 2, 2, 4), 2)
        v = D.lattice_from_rows(rand_matrix(rng, 2, 2, 4), 2)
        if len(u) < 2 or len(v) < 2:
            continue
        w = D.intersect_lattices(u, v, 2)
        for x in range(-8, 9):
            for y in range(-8, 9):
                both = D.lattice_contains(u, (x, y)) and \
                    D.lattice_contains(v, (x, y))
                assert both == D.lattice_contains(w, (x, y)), (u, v, x, y)


def test_intersect_index_bound():
    rng = random.Random(14)
    for _ in range(50):
        u = D.lattice_from_rows(rand_matrix(rng, 2, 2, 4), 2)
        v = D.lattice_from_rows(rand_matrix(rng, 2, 2, 4), 2)
        if len(u) < 2 or len(v) < 2:
            continue
        w = D.intersect_lattices(u, v, 2)
        assert D.lattice_index(w, 2) >= max(D.lattice_index(u, 2),
                                            D.lattice_index(v, 2))


# -- embedding / system / coset correspondence ----------------------------------------


def test_embedding_to_system_example():
    f = D.ClosureEmbedding(1, (2,), ((3,),))
    assert str(D.embedding_to_system(f)) == "x1 = 2 + 3*y1"
    ident = D.ClosureEmbedding.identity(2)
    assert str(D.embedding_to_system(ident)) == "x1 = 0 + y1; x2 = 0 + y2"
    f2 = D.ClosureEmbedding(2, (1, 0), ((2, 0), (0, 3)))
    assert str(D.embedding_to_system(f2)) == "x1 = 1 + 2*y1; x2 = 0 + 3*y2"


def test_zero_determinant_rejected():
    with pytest.raises(ValueError):
        D.ClosureEmbedding(2, (0, 0), ((1, 1), (1, 1)))


def test_coset_example():
    f = D.ClosureEmbedding(1, (2,), ((3,),))
    coset = D.system_to_coset(D.embedding_to_system(f))
    assert str(coset) == "2+3Z"
    assert (5,) in coset and (4,) not in coset
    ident = D.ClosureEmbedding.identity(3)
    coset = D.system_to_coset(D.embedding_to_system(ident))
    assert all((p, -p, 2 * p) in coset for p in range(-3, 4))


def test_round_trip_preserves_coset():
    rng = random.Random(15)
    for _ in range(200):
        m = rng.randint(1, 3)
        while True:
            k = rand_matrix(rng, m, m, 4)
            if D.mat_det(k):
                break
        f = D.ClosureEmbedding(m, tuple(rng.randint(-4, 4) for _ in range(m)), k)
        c1 = D.system_to_coset(D.embedding_to_system(f))
        f2 = D.coset_to_embedding(c1)
        c2 = D.system_to_coset(D.embedding_to_system(f2))
        assert c1.same_coset(c2)


def test_solvable_examples_and_brute_force():
    f = D.ClosureEmbedding(1, (2,), ((3,),))
    sigma = D.embedding_to_system(f)
    ok, y = D.solvable(sigma, (5,))
    assert ok and y == (1,)
    ok, _ = D.solvable(sigma, (4,))
    assert not ok
    for p in range(-9, 10):
        ok, y = D.solvable(sigma, (p,))
        brute = any(p == 2 + 3 * yy for yy in range(-20, 21))
        assert ok == brute
        if ok:
            assert p == 2 + 3 * y[0]


def test_solvable_rank2_brute_force():
    f = D.ClosureEmbedding(2, (1, 0), ((2, 0), (0, 3)))
    sigma = D.embedding_to_system(f)
    coset = D.system_to_coset(sigma)
    for p1 in range(-6, 7):
        for p2 in range(-6, 7):
            ok, y = D.solvable(sigma, (p1, p2))
            brute = (p1 - 1) % 2 == 0 and p2 % 3 == 0
            assert ok == brute
            assert ((p1, p2) in coset) == brute
            if ok:
                assert p1 == 1 + 2 * y[0] and p2 == 3 * y[1]
