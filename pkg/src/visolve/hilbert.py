"""Finite-dimensional Hilbert spaces used by the solvers.

Two spaces are supported: plain ``R^n`` with the dot product, and a uniform-grid
discretisation of ``L^2([0, 1])`` whose inner product is the trapezoidal
quadrature of ``int_0^1 x(t) y(t) dt``.  Both reduce to a weighted dot product,
so every vector is a dense float64 array tagged with its space.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np


class SpaceMismatchError(ValueError):
    """Two vectors from different spaces were combined."""


class NonFiniteError(FloatingPointError):
    """A vector acquired a NaN or infinite entry."""


@dataclass(frozen=True)
class Euclidean:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"Euclidean dim must be a positive integer, got {self.dim!r}")

    @property
    def size(self) -> int:
        return self.dim


@dataclass(frozen=True)
class GridL2:
    """``L^2([0, 1])`` sampled on ``points`` equispaced nodes (endpoints included)."""

    points: int

    def __post_init__(self):
        if int(self.points) != self.points or self.points < 2:
            raise ValueError(f"GridL2 needs at least 2 points, got {self.points!r}")

    @property
    def size(self) -> int:
        return self.points

    @property
    def grid(self) -> np.ndarray:
        return _grid(self.points)

    @property
    def weights(self) -> np.ndarray:
        return _trapezoid_weights(self.points)


SpaceDescriptor = Union[Euclidean, GridL2]


@lru_cache(maxsize=None)
def _grid(points: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, points)
    t.flags.writeable = False
    return t


@lru_cache(maxsize=None)
def _trapezoid_weights(points: int) -> np.ndarray:
    h = 1.0 / (points - 1)
    w = np.full(points, h)
    w[0] = w[-1] = h / 2
    w.flags.writeable = False
    return w


class HVector:
    """An immutable point of a :data:`SpaceDescriptor`.

    Supports ``+``, ``-``, unary ``-`` and multiplication/division by scalars.
    Combining vectors of different spaces raises :class:`SpaceMismatchError`.
    """

    __slots__ = ("space", "coords")

    def __init__(self, space: SpaceDescriptor, coords):
        arr = np.array(coords, dtype=np.float64)  # always a private copy
        if arr.ndim != 1 or arr.shape[0] != space.size:
            raise ValueError(f"coords of shape {arr.shape} do not fit {space}")
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"non-finite entries in vector of {space}")
        arr.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "coords", arr)

    def __setattr__(self, name, value):
        raise AttributeError("HVector is immutable")

    @classmethod
    def _wrap(cls, space, arr):
        # internal fast path: ``arr`` is freshly allocated and owned by us
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"non-finite entries in vector of {space}")
        arr.flags.writeable = False
        self = object.__new__(cls)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "coords", arr)
        return self

    def __repr__(self):
        return f"HVector({self.space}, {np.array2string(self.coords, threshold=8)})"

    def __len__(self):
        return self.coords.shape[0]

    def _check(self, other):
        if not isinstance(other, HVector):
            return NotImplemented
        if other.space != self.space:
            raise SpaceMismatchError(f"{self.space} vs {other.space}")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return HVector._wrap(self.space, self.coords + other.coords)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return HVector._wrap(self.space, self.coords - other.coords)

    def __neg__(self):
        return HVector._wrap(self.space, -self.coords)

    def __mul__(self, a):
        if isinstance(a, HVector):
            return NotImplemented
        return HVector._wrap(self.space, float(a) * self.coords)

    __rmul__ = __mul__

    def __truediv__(self, a):
        if isinstance(a, HVector):
            return NotImplemented
        return HVector._wrap(self.space, self.coords / float(a))

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "HVector":
        """Apply an array-to-array function to the coordinates, keeping the space."""
        return HVector(self.space, fn(self.coords))


def zeros(space: SpaceDescriptor) -> HVector:
    return HVector._wrap(space, np.zeros(space.size))


def constant(space: SpaceDescriptor, value: float) -> HVector:
    return HVector._wrap(space, np.full(space.size, float(value)))


def sample(space: GridL2, fn: Callable[[np.ndarray], np.ndarray]) -> HVector:
    """Sample a function of ``t`` on the nodes of a grid space."""
    if not isinstance(space, GridL2):
        raise TypeError("sample() needs a GridL2 space")
    return HVector(space, np.broadcast_to(fn(space.grid), (space.size,)))


def _same_space(x: HVector, y: HVector):
    if x.space != y.space:
        raise SpaceMismatchError(f"{x.space} vs {y.space}")


def inner(x: HVector, y: HVector) -> float:
    _same_space(x, y)
    if isinstance(x.space, GridL2):
        return float(np.dot(x.space.weights * x.coords, y.coords))
    return float(np.dot(x.coords, y.coords))


def norm(x: HVector) -> float:
    return float(np.sqrt(max(inner(x, x), 0.0)))


def dist(x: HVector, y: HVector) -> float:
    return norm(x - y)


def lincomb(a: float, x: HVector, b: float, y: HVector) -> HVector:
    """Return ``a*x + b*y``."""
    _same_space(x, y)
    return HVector._wrap(x.space, float(a) * x.coords + float(b) * y.coords)
