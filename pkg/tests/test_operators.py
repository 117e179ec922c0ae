import math

import numpy as np
import pytest

from visolve.hilbert import Euclidean, HVector, constant, inner, norm, zeros
from visolve.operators import (
    Mapping,
    MappingMeta,
    Problem,
    example2_matrix,
    make_example1,
    make_example2,
    make_example3,
    rng_for,
    scaling,
    spectral_norm,
)
from visolve.projections import Ball, WholeSpace


def vec(*xs):
    return HVector(Euclidean(len(xs)), xs)


def test_example1_operator():
    p = make_example1()
    assert p.A(vec(0, 0)).coords.tolist() == [0, 0]
    assert np.allclose(p.A(vec(1, 0)).coords, [1 + math.sin(1), -1])
    assert p.T(vec(2, 4)).coords.tolist() == [1, 4]
    assert p.A.meta.lipschitz == 3
    assert p.known_solution.coords.tolist() == [0, 0]


def test_example2_construction():
    p = make_example2(30, seed=11)
    assert norm(p.A(zeros(p.space))) == 0
    G = example2_matrix(30, 11)
    assert np.array_equal(G, example2_matrix(30, 11))
    assert not np.array_equal(G, example2_matrix(30, 12))
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.normal(size=30)
        assert x @ G @ x >= -1e-9
    # skew part only: G - G^T = 2M with entries in [-2, 2]
    M = (G - G.T) / 2
    assert np.abs(M).max() <= 2
    assert p.A.meta.lipschitz == pytest.approx(np.linalg.norm(G, 2), rel=1e-8)
    with pytest.raises(ValueError):
        make_example2(0, 1)


def test_example2_entry_ranges():
    # rebuild B, E from the same stream to check the documented ranges
    rng = rng_for(5, stream=0)
    B = rng.uniform(0, 2, size=(8, 8))
    rng.uniform(-2, 2, size=(8, 8))
    E = rng.uniform(0, 2, size=8)
    G = example2_matrix(8, 5)
    assert np.allclose(np.diag(G), np.diag(B @ B.T) + E)
    assert B.min() >= 0 and B.max() <= 2 and E.min() >= 0


def test_example3_operators():
    p = make_example3(129)
    g = p.space
    assert np.array_equal(p.A(constant(g, -1)).coords, np.zeros(129))
    # integral of 1 over [0,1] is exact under the trapezoid rule
    assert np.allclose(p.T(constant(g, 1)).coords, g.grid, atol=1e-14)
    assert norm(p.T(zeros(g))) == 0
    assert isinstance(p.C, Ball) and p.C.radius == 1


def test_spectral_norm_examples():
    assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3, rel=1e-8)
    assert spectral_norm(np.eye(7)) == pytest.approx(1, rel=1e-8)
    assert spectral_norm(np.array([[0.0, -2.0], [2.0, 0.0]])) == pytest.approx(2, rel=1e-8)
    with pytest.raises(ValueError):
        spectral_norm(np.ones((2, 3)))


@pytest.mark.parametrize("n", [1, 5, 50, 120])
def test_spectral_norm_matches_svd(n):
    G = example2_matrix(n, 3)
    assert spectral_norm(G) == pytest.approx(np.linalg.svd(G, compute_uv=False)[0], rel=1e-8)


def test_meta_validation():
    with pytest.raises(ValueError):
        MappingMeta(strong_monotonicity=2.0, lipschitz_of_S=1.0)
    with pytest.raises(ValueError):
        MappingMeta(demicontractive=1.0)
    with pytest.raises(ValueError):
        MappingMeta(contraction=-0.1)


def test_problem_rejects_false_solution():
    space = Euclidean(2)
    ident = Mapping(lambda x: x)
    with pytest.raises(ValueError):
        Problem(A=ident, C=WholeSpace(), T=ident, S=scaling(0.5), space=space, known_solution=vec(1, 1))


def test_mapping_must_preserve_space():
    m = Mapping(lambda x: zeros(Euclidean(3)))
    with pytest.raises(ValueError):
        m(vec(1, 2))


def _pairs(space, count, seed, scale=3.0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield (HVector(space, scale * rng.normal(size=space.size)),
               HVector(space, scale * rng.normal(size=space.size)))


PROBLEMS = [make_example1, lambda: make_example2(40, 9), lambda: make_example3(64)]


@pytest.mark.parametrize("make", PROBLEMS, ids=["ex1", "ex2", "ex3"])
def test_operator_invariants(make):
    p = make()
    L = p.A.meta.lipschitz
    eta = p.S.meta.strong_monotonicity
    vt = p.T.meta.demicontractive
    z = p.known_solution
    for x, y in _pairs(p.space, 1000, 0):
        d = x - y
        Ad = p.A(x) - p.A(y)
        assert inner(Ad, d) >= -1e-10
        assert norm(Ad) <= (L + 1e-8) * norm(d)
        Tx = p.T(x)
        assert norm(Tx - z) ** 2 <= norm(x - z) ** 2 + vt * norm(x - Tx) ** 2 + 1e-10
        assert inner(p.S(x) - p.S(y), d) >= (eta - 1e-10) * norm(d) ** 2
