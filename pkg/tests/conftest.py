import pytest

from bsw import tower as T
from bsw.tower import AbelianFlatSpec, SurfaceFlatSpec


@pytest.fixture
def abelian_tower():
    """Two floors: Z^2 on e1^2 e2^2, then a one-holed torus on [z1, e1]."""
    t = T.new_tower(2)
    t = T.glue_abelian_flat(t, AbelianFlatSpec("e1^2*e2^2", 2, ("z1", "z2")))
    t = T.glue_surface_flat(
        t, SurfaceFlatSpec(1, ("z1*e1*z1^-1*e1^-1",), ("z1", "e1"),
                           ("x1", "x2")))
    return t


@pytest.fixture
def nonabelian_tower():
    """Two floors: a one-holed torus on [e1, e2], then Z^2 on x1^3 x2^4."""
    t = T.new_tower(2)
    t = T.glue_surface_flat(
        t, SurfaceFlatSpec(1, ("e1*e2*e1^-1*e2^-1",), ("e1", "e2"),
                           ("x1", "x2")))
    t = T.glue_abelian_flat(t, AbelianFlatSpec("x1^3*x2^4", 2, ("z1", "z2")))
    return t


@pytest.fixture
def closure_example_tower():
    """One rank-1 flat on the peg e1."""
    t = T.new_tower(2)
    t = T.glue_abelian_flat(t, AbelianFlatSpec("e1", 1, ("z",)))
    return t
