"""Step-size, inertia and scalar sequence rules."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Tuple

from .hilbert import HVector, norm
from .operators import Mapping, Problem
from .projections import FeasibleSet, project

SAME_POINT_RTOL = 1e-14
ZERO_DIFF = 1e-14
ARMIJO_MAX_BACKTRACKS = 100


class ConfigurationError(ValueError):
    """Solver parameters incompatible with the problem or algorithm."""


class LineSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class SequenceRules:
    """Scalar sequences indexed by the 1-based iteration counter ``k``.

    ``theta`` must tend to zero with a divergent sum, ``zeta/theta`` must tend
    to zero, and ``varphi`` must stay in ``[a, 1 - vartheta)``.  The divergent
    sum cannot be checked on a computer and is left to the caller.
    """

    theta: Callable[[int], float]
    zeta: Callable[[int], float]
    varphi: Callable[[int], float]
    a: float

    def check(self, vartheta: float = 0.0, horizon: int = 10_000) -> None:
        prev_ratio = float("inf")
        for k in range(1, horizon + 1):
            th, ze, vp = self.theta(k), self.zeta(k), self.varphi(k)
            if not 0 < th < 1:
                raise ConfigurationError(f"theta({k}) = {th} is outside (0, 1)")
            if not ze > 0:
                raise ConfigurationError(f"zeta({k}) = {ze} is not positive")
            if not self.a <= vp < 1 - vartheta:
                raise ConfigurationError(
                    f"varphi({k}) = {vp} is outside [{self.a}, {1 - vartheta})"
                )
            ratio = ze / th
            if ratio > prev_ratio:
                raise ConfigurationError(f"zeta/theta increases at k = {k}")
            prev_ratio = ratio


def _theta(k):
    return 1.0 / (k + 1)


def _zeta(k):
    return 1.0 / (k + 1) ** 2


def _varphi(k):
    return k / (2 * k + 1)


def paper_default_rules() -> SequenceRules:
    """``theta_k = 1/(k+1)``, ``zeta_k = 1/(k+1)^2``, ``varphi_k = k/(2k+1)``."""
    return SequenceRules(theta=_theta, zeta=_zeta, varphi=_varphi, a=1.0 / 3.0)


@dataclass(frozen=True)
class SolverParams:
    """Scalar knobs shared by all algorithms.

    ``phi`` is the step-shrink factor of the self-adaptive rule while
    ``armijo_phi`` is the one used inside the Armijo line search; the fixed
    step of the Halpern baseline is ``hsegm_factor / L``.
    """

    xi: float = 0.4
    psi1: float = 0.9
    phi: float = 0.5
    sigma: float = 0.5
    rules: SequenceRules = field(default_factory=paper_default_rules)
    armijo_alpha: float = 0.5
    armijo_ell: float = 0.5
    armijo_phi: float = 0.4
    hsegm_factor: float = 0.99
    max_iter: int = 400

    def __post_init__(self):
        if not self.xi > 0:
            raise ConfigurationError(f"xi must be positive, got {self.xi}")
        if not self.psi1 > 0:
            raise ConfigurationError(f"psi1 must be positive, got {self.psi1}")
        if not 0 < self.phi < 1:
            raise ConfigurationError(f"phi must lie in (0, 1), got {self.phi}")
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if not self.armijo_alpha > 0:
            raise ConfigurationError(f"armijo_alpha must be positive, got {self.armijo_alpha}")
        if not 0 < self.armijo_ell < 1:
            raise ConfigurationError(f"armijo_ell must lie in (0, 1), got {self.armijo_ell}")
        if not 0 < self.armijo_phi < 1:
            raise ConfigurationError(f"armijo_phi must lie in (0, 1), got {self.armijo_phi}")
        if not 0 < self.hsegm_factor < 1:
            raise ConfigurationError(f"hsegm_factor must lie in (0, 1), got {self.hsegm_factor}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 0:
            raise ConfigurationError(f"max_iter must be a nonnegative integer, got {self.max_iter}")

    def with_(self, **changes) -> "SolverParams":
        return replace(self, **changes)

    def sigma_bound(self, problem: Problem) -> float:
        """Upper limit ``2*eta/kappa^2`` for ``sigma`` given the problem's ``S``."""
        m = problem.S.meta
        if m.strong_monotonicity is None or m.lipschitz_of_S is None:
            raise ConfigurationError("S needs strong_monotonicity and lipschitz_of_S metadata")
        return 2 * m.strong_monotonicity / m.lipschitz_of_S**2

    def check_sigma(self, problem: Problem) -> None:
        bound = self.sigma_bound(problem)
        if not self.sigma < bound:
            raise ConfigurationError(f"sigma = {self.sigma} must be below 2*eta/kappa^2 = {bound}")


PAPER_PRESET = SolverParams()


def inertial_xi(xi: float, zeta_k: float, x_k: HVector, x_km1: HVector) -> float:
    """Inertial weight ``min(zeta_k / ||x_k - x_{k-1}||, xi)``, or ``xi`` if the points coincide."""
    d = norm(x_k - x_km1)
    if d > SAME_POINT_RTOL * (1.0 + norm(x_k)):
        return min(zeta_k / d, xi)
    return xi


def adaptive_psi_next(psi_k: float, phi: float, u: HVector, y: HVector, Au: HVector, Ay: HVector) -> float:
    den = norm(Au - Ay)
    if den > ZERO_DIFF:
        return min(phi * norm(u - y) / den, psi_k)
    return psi_k


def armijo_psi(alpha: float, ell: float, phi: float, x: HVector, A: Mapping, C: FeasibleSet,
               Ax: HVector = None) -> Tuple[float, HVector]:
    """Largest ``psi`` in ``alpha * ell**m`` with ``psi ||Ax - Ay|| <= phi ||x - y||``.

    Here ``y = P_C(x - psi*Ax)``.  Returns ``(psi, y)``.  ``Ax`` may be passed
    in to avoid recomputing it.
    """
    if Ax is None:
        Ax = A(x)
    psi = alpha
    for _ in range(ARMIJO_MAX_BACKTRACKS + 1):
        y = project(C, x - psi * Ax)
        if psi * norm(Ax - A(y)) <= phi * norm(x - y):
            return psi, y
        psi *= ell
    raise LineSearchError(
        f"Armijo search failed after {ARMIJO_MAX_BACKTRACKS} backtracks "
        f"(psi = {psi / ell:.3g}); is A Lipschitz?"
    )
