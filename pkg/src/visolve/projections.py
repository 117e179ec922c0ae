"""Metric projections onto boxes, balls and half-spaces.

All projections are closed form and use the inner product of the vector's
space, so the same code serves ``R^n`` and the grid ``L^2`` space.  A box is
clipped componentwise, which is also the weighted-``L^2`` projection because
the quadrature weights are positive and separable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .hilbert import HVector, SpaceMismatchError, inner, norm, zeros

MEMBERSHIP_TOL = 1e-12
# tolerances for the projection property checks
IDEMPOTENCE_TOL = 1e-12
FIRM_NONEXPANSIVE_TOL = 1e-10
VARIATIONAL_TOL = 1e-10
DEGENERATE_NORMAL = 1e-14


class EmptySetError(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    lower: HVector
    upper: HVector

    def __post_init__(self):
        if self.lower.space != self.upper.space:
            raise SpaceMismatchError("box bounds live in different spaces")
        if np.any(self.lower.coords > self.upper.coords):
            raise EmptySetError("box needs lower <= upper componentwise")

    @property
    def space(self):
        return self.lower.space


@dataclass(frozen=True)
class Ball:
    center: HVector
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius!r}")

    @property
    def space(self):
        return self.center.space


@dataclass(frozen=True)
class HalfSpace:
    """The set ``{x : <normal, x> <= offset}``.

    A (numerically) zero normal is the whole space when ``offset >= 0``;
    with a negative offset the set is empty and construction fails.
    """

    normal: HVector
    offset: float

    def __post_init__(self):
        if self.degenerate and self.offset < 0:
            raise EmptySetError("half-space with zero normal and negative offset is empty")

    @property
    def space(self):
        return self.normal.space

    @property
    def degenerate(self) -> bool:
        return norm(self.normal) < DEGENERATE_NORMAL


@dataclass(frozen=True)
class WholeSpace:
    space: object = None  # None: any space


FeasibleSet = Union[Box, Ball, HalfSpace, WholeSpace]


def _check_space(s, x: HVector):
    if s.space is not None and s.space != x.space:
        raise SpaceMismatchError(f"set lives in {s.space}, point in {x.space}")


def project(s: FeasibleSet, x: HVector) -> HVector:
    """Nearest point of ``s`` to ``x``."""
    _check_space(s, x)
    if isinstance(s, Box):
        return HVector._wrap(x.space, np.clip(x.coords, s.lower.coords, s.upper.coords))
    if isinstance(s, Ball):
        d = x - s.center
        r = norm(d)
        if r <= s.radius:
            return x
        return s.center + (s.radius / r) * d
    if isinstance(s, HalfSpace):
        a = s.normal
        aa = inner(a, a)
        if aa < DEGENERATE_NORMAL**2:
            return x
        excess = inner(a, x) - s.offset
        if excess <= 0:
            return x
        return x - (excess / aa) * a
    if isinstance(s, WholeSpace):
        return x
    raise TypeError(f"unsupported feasible set {type(s).__name__}")


def violation(s: FeasibleSet, x: HVector) -> float:
    """Amount by which ``x`` breaks the constraints of ``s`` (0 when inside)."""
    _check_space(s, x)
    if isinstance(s, Box):
        lo = np.max(s.lower.coords - x.coords)
        hi = np.max(x.coords - s.upper.coords)
        return float(max(lo, hi, 0.0))
    if isinstance(s, Ball):
        return max(norm(x - s.center) - s.radius, 0.0)
    if isinstance(s, HalfSpace):
        if s.degenerate:
            return 0.0
        return max(inner(s.normal, x) - s.offset, 0.0)
    return 0.0


def contains(s: FeasibleSet, x: HVector, tol: float = MEMBERSHIP_TOL) -> bool:
    return violation(s, x) <= tol


def box(space, lower: float, upper: float) -> Box:
    """Box with the same scalar bounds in every coordinate."""
    z = zeros(space)
    return Box(HVector(space, z.coords + lower), HVector(space, z.coords + upper))


def halfspace_for_subgradient_step(u: HVector, psi: float, Au: HVector, y: HVector) -> HalfSpace:
    """Half-space ``{x : <u - psi*Au - y, x - y> <= 0}`` built from a projection step.

    When ``y = P_C(u - psi*Au)`` the half-space contains ``C`` and ``y`` sits on
    its boundary.  If the projection was inactive the normal vanishes and the
    result is the whole space.
    """
    a = u - psi * Au - y
    if norm(a) < DEGENERATE_NORMAL:
        return HalfSpace(zeros(u.space), 0.0)
    return HalfSpace(a, inner(a, y))
