"""Mappings of the problem class and the three benchmark problems.

A problem bundles a monotone Lipschitz operator ``A`` with a closed convex set
``C`` (the variational inequality part), a demicontractive ``T`` (the fixed
point part), a strongly monotone Lipschitz ``S`` used by the hybrid steepest
descent step, and optionally a contraction ``f`` for viscosity-type methods.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .hilbert import Euclidean, GridL2, HVector, SpaceDescriptor, norm, zeros
from .projections import Ball, FeasibleSet, box, project

SOLUTION_TOL = 1e-9


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """PCG64 generator for ``(seed, stream)``.

    Streams keep independent draws (matrix entries, start vectors, test
    samples) from interfering when the same seed is reused.
    """
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


@dataclass(frozen=True)
class MappingMeta:
    lipschitz: Optional[float] = None
    strong_monotonicity: Optional[float] = None  # eta
    lipschitz_of_S: Optional[float] = None  # kappa
    demicontractive: Optional[float] = None  # vartheta
    contraction: Optional[float] = None  # rho

    def __post_init__(self):
        for name in ("lipschitz", "strong_monotonicity", "lipschitz_of_S"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative, got {v}")
        for name in ("demicontractive", "contraction"):
            v = getattr(self, name)
            if v is not None and not 0 <= v < 1:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        eta, kappa = self.strong_monotonicity, self.lipschitz_of_S
        if eta is not None and kappa is not None and not 0 < eta <= kappa:
            raise ValueError(f"need 0 < eta <= kappa, got eta={eta}, kappa={kappa}")


@dataclass(frozen=True)
class Mapping:
    """A nonlinear map ``HVector -> HVector`` with its known constants."""

    apply: Callable[[HVector], HVector]
    meta: MappingMeta = field(default_factory=MappingMeta)
    name: str = ""

    def __call__(self, x: HVector) -> HVector:
        out = self.apply(x)
        if out.space != x.space:
            raise ValueError(f"mapping {self.name or self.apply!r} changed the space")
        return out


def scaling(c: float, **meta) -> Mapping:
    """The map ``x -> c*x``."""
    return Mapping(lambda x: c * x, MappingMeta(**meta), name=f"{c:g}*id")


def linear(matrix: np.ndarray, **meta) -> Mapping:
    """``x -> matrix @ x`` on a Euclidean space."""
    G = np.array(matrix, dtype=np.float64)
    G.flags.writeable = False
    return Mapping(lambda x: HVector._wrap(x.space, G @ x.coords), MappingMeta(**meta), name="linear")


def shifted_identity(anchor: HVector) -> Mapping:
    """``x -> x - anchor``; 1-strongly monotone and 1-Lipschitz."""
    return Mapping(
        lambda x: x - anchor,
        MappingMeta(strong_monotonicity=1.0, lipschitz_of_S=1.0),
        name="x - x0",
    )


@dataclass(frozen=True)
class Problem:
    A: Mapping
    C: FeasibleSet
    T: Mapping
    S: Mapping
    space: SpaceDescriptor
    f: Optional[Mapping] = None
    known_solution: Optional[HVector] = None
    name: str = ""

    def __post_init__(self):
        if self.C.space is not None and self.C.space != self.space:
            raise ValueError("feasible set does not live in the problem space")
        x = self.known_solution
        if x is not None:
            if x.space != self.space:
                raise ValueError("known solution does not live in the problem space")
            vi_res = norm(x - project(self.C, x - self.A(x)))
            fp_res = norm(self.T(x) - x)
            if vi_res > SOLUTION_TOL or fp_res > SOLUTION_TOL:
                raise ValueError(
                    f"known_solution is not a common solution "
                    f"(VI residual {vi_res:.3g}, fixed-point residual {fp_res:.3g})"
                )

    def error(self, x: HVector) -> float:
        """Distance to the known solution (``nan`` if there is none)."""
        if self.known_solution is None:
            return float("nan")
        return norm(x - self.known_solution)


def spectral_norm(G, tol: float = 1e-8, max_iter: int = 10_000) -> float:
    """Largest singular value of a square matrix by power iteration on ``G^T G``.

    Starts from the normalised all-ones vector and stops once the eigen-residual
    ``||G^T G v - lam v||`` drops below ``tol * lam``, which bounds the relative
    error of ``lam`` by ``tol``.
    """
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"spectral_norm needs a square matrix, got shape {G.shape}")
    if not np.isfinite(G).all():
        raise ValueError("matrix has non-finite entries")
    n = G.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(max_iter):
        w = G.T @ (G @ v)
        lam = float(v @ w)
        if lam <= 0.0:
            return 0.0
        if np.linalg.norm(w - lam * v) <= tol * lam:
            break
        v = w / np.linalg.norm(w)
    return float(np.sqrt(lam))


# -- benchmark problems -------------------------------------------------------

def _half() -> Mapping:
    return scaling(0.5, strong_monotonicity=0.5, lipschitz_of_S=0.5, contraction=0.5)


def make_example1() -> Problem:
    """Two-dimensional nonlinear problem on the box ``[-1, 1]^2``; solution 0."""
    space = Euclidean(2)

    def A(x):
        a, b = x.coords
        return HVector._wrap(space, np.array([a + b + np.sin(a), -a + b + np.sin(b)]))

    # T = D/||D|| with D = diag(1, 2) and the spectral norm ||D|| = 2
    t_diag = np.array([0.5, 1.0])

    return Problem(
        A=Mapping(A, MappingMeta(lipschitz=3.0), name="A1"),
        C=box(space, -1.0, 1.0),
        T=Mapping(lambda x: HVector._wrap(space, t_diag * x.coords), MappingMeta(demicontractive=0.0), name="D/|D|"),
        S=_half(),
        f=_half(),
        space=space,
        known_solution=zeros(space),
        name="ex1",
    )


def example2_matrix(n: int, seed: int) -> np.ndarray:
    """``G = B B^T + M + E`` with B, E in [0, 2], E diagonal, M skew with entries in [-2, 2]."""
    if n < 1:
        raise ValueError(f"dimension must be positive, got {n}")
    rng = rng_for(seed, stream=0)
    B = rng.uniform(0.0, 2.0, size=(n, n))
    M0 = rng.uniform(-2.0, 2.0, size=(n, n))
    M = (M0 - M0.T) / 2
    E = np.diag(rng.uniform(0.0, 2.0, size=n))
    return B @ B.T + M + E


def make_example2(n: int, seed: int) -> Problem:
    """Linear monotone problem ``A(x) = Gx`` on the box ``[-2, 5]^n``; solution 0."""
    G = example2_matrix(n, seed)
    space = Euclidean(n)
    return Problem(
        A=linear(G, lipschitz=spectral_norm(G)),
        C=box(space, -2.0, 5.0),
        T=scaling(0.5, demicontractive=0.0),
        S=_half(),
        f=_half(),
        space=space,
        known_solution=zeros(space),
        name="ex2",
    )


def make_example3(points: int = 256) -> Problem:
    """Problem in grid ``L^2([0,1])``: ``A = max(0, x)`` on the unit ball; solution 0."""
    space = GridL2(points)
    t = space.grid
    w = space.weights

    def T(x):
        # (Tx)(t) = t * int_0^1 x(s) ds
        return HVector._wrap(space, t * float(np.dot(w, x.coords)))

    return Problem(
        A=Mapping(lambda x: HVector._wrap(space, np.maximum(x.coords, 0.0)), MappingMeta(lipschitz=1.0), name="max(0,x)"),
        C=Ball(zeros(space), 1.0),
        T=Mapping(T, MappingMeta(demicontractive=0.0), name="t*int x"),
        S=_half(),
        f=_half(),
        space=space,
        known_solution=zeros(space),
        name="ex3",
    )
