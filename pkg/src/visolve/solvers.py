"""Iteration maps for the inertial extragradient methods and their baselines.

Every algorithm is a pure transition ``(state, problem, params) -> (state, report)``;
:func:`run` drives any of them and records a trace.  Iterations are counted
from ``k = 1`` and the sequence rules are evaluated at the current ``k``.

Proposed methods (self-adaptive step, inertial extrapolation):

* ``ISEGM``  - subgradient extragradient + hybrid steepest descent
* ``ITEGM``  - Tseng correction + hybrid steepest descent
* ``COR1_HALPERN``   - ISEGM with ``S = I - x0`` and ``sigma = 1`` (Halpern anchor)
* ``COR2_VISCOSITY`` - ITEGM with ``S = I - f`` and ``sigma = 1`` (viscosity)

Baselines (no inertia):

* ``HSEGM`` - Halpern subgradient extragradient, fixed step ``0.99/L``
* ``VSEGM`` / ``VTEGM`` - viscosity subgradient / Tseng extragradient
* ``STEGM`` - Tseng extragradient with an Armijo line search + steepest descent
"""

from __future__ import annotations

import contextlib
import enum
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

from .hilbert import HVector, NonFiniteError, inner, lincomb, norm
from .operators import Mapping, Problem, rng_for
from .projections import halfspace_for_subgradient_step, project, violation
from .stepsize import (
    ConfigurationError,
    LineSearchError,
    SolverParams,
    adaptive_psi_next,
    armijo_psi,
    inertial_xi,
)

LEMMA_SLACK = 1e-9
TSENG_SLACK = 1e-10


class AlgorithmId(str, enum.Enum):
    ISEGM = "ISEGM"
    ITEGM = "ITEGM"
    COR1_HALPERN = "COR1_HALPERN"
    COR2_VISCOSITY = "COR2_VISCOSITY"
    HSEGM = "HSEGM"
    VSEGM = "VSEGM"
    VTEGM = "VTEGM"
    STEGM = "STEGM"

    @classmethod
    def parse(cls, name: str) -> "AlgorithmId":
        key = name.strip().upper().replace("-", "_")
        aliases = {"COR1": "COR1_HALPERN", "COR2": "COR2_VISCOSITY"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(
                f"unknown algorithm {name!r}; choose from {', '.join(a.value for a in cls)}"
            ) from None

    @property
    def subgradient(self) -> bool:
        """Whether the corrector projects onto the constructed half-space."""
        return self in (AlgorithmId.ISEGM, AlgorithmId.COR1_HALPERN, AlgorithmId.HSEGM, AlgorithmId.VSEGM)


class StepError(RuntimeError):
    """A transition produced an invalid intermediate.  ``step`` names the stage."""

    def __init__(self, step: str, message: str):
        super().__init__(f"{step}: {message}")
        self.step = step


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except (NonFiniteError, LineSearchError) as exc:
        raise StepError(name, str(exc)) from exc


@dataclass(frozen=True)
class SolverState:
    k: int
    x_prev: HVector
    x_cur: HVector
    psi: float
    x0: HVector

    def __post_init__(self):
        if not self.psi > 0:
            raise ValueError(f"step size must be positive, got {self.psi}")
        if not self.x_prev.space == self.x_cur.space == self.x0.space:
            raise ValueError("state vectors live in different spaces")


@dataclass(frozen=True)
class StepReport:
    """Intermediates of one transition.

    ``psi_k`` is the step used in this iteration and ``psi_next`` the one
    handed to the next; ``phi`` is the shrink factor of the rule that produced
    them.  ``halfspace_slack`` is ``<u - psi*Au - y, z - y>`` for
    subgradient-type correctors (``None`` otherwise) and must be ``<= 0``.
    """

    u: HVector
    y: HVector
    z: HVector
    q: HVector
    xi_k: float
    psi_k: float
    psi_next: float
    phi: float
    residual_uy: float
    residual_Tz: float
    halfspace_slack: Optional[float] = None
    lemma_lhs_rhs: Optional[Tuple[float, float]] = None


# -- shared stages -------------------------------------------------------------

def _extrapolate(state: SolverState, params: SolverParams):
    with _stage("u"):
        xi_k = inertial_xi(params.xi, params.rules.zeta(state.k), state.x_cur, state.x_prev)
        u = state.x_cur + xi_k * (state.x_cur - state.x_prev)
    return xi_k, u


def _predict(p: Problem, u: HVector, psi: float):
    with _stage("y"):
        Au = p.A(u)
        y = project(p.C, u - psi * Au)
        Ay = p.A(y)
    return Au, y, Ay


def _subgradient_correct(p: Problem, u, psi, Au, y, Ay):
    with _stage("z"):
        H = halfspace_for_subgradient_step(u, psi, Au, y)
        z = project(H, u - psi * Ay)
        slack = inner(u - psi * Au - y, z - y)
    return z, slack


def _tseng_correct(y, psi, Au, Ay):
    with _stage("z"):
        return y - psi * (Ay - Au)


def _mann(p: Problem, z: HVector, varphi: float):
    with _stage("q"):
        Tz = p.T(z)
        q = lincomb(1 - varphi, z, varphi, Tz)
    return q, norm(Tz - z)


def _steepest_descent(p: Problem, q: HVector, sigma: float, theta: float) -> HVector:
    with _stage("outer"):
        return q - (sigma * theta) * p.S(q)


def _advance(state: SolverState, x_next: HVector, psi_next: float) -> SolverState:
    return SolverState(state.k + 1, state.x_cur, x_next, psi_next, state.x0)


def _require_f(p: Problem) -> Mapping:
    if p.f is None:
        raise ConfigurationError(f"problem {p.name or ''} has no contraction f")
    return p.f


# -- transitions ---------------------------------------------------------------

def step_isegm(state: SolverState, p: Problem, params: SolverParams):
    k, psi, rules = state.k, state.psi, params.rules
    xi_k, u = _extrapolate(state, params)
    Au, y, Ay = _predict(p, u, psi)
    z, slack = _subgradient_correct(p, u, psi, Au, y, Ay)
    q, res_tz = _mann(p, z, rules.varphi(k))
    x_next = _steepest_descent(p, q, params.sigma, rules.theta(k))
    psi_next = adaptive_psi_next(psi, params.phi, u, y, Au, Ay)
    report = StepReport(u, y, z, q, xi_k, psi, psi_next, params.phi, norm(u - y), res_tz, slack)
    return _advance(state, x_next, psi_next), report


def step_itegm(state: SolverState, p: Problem, params: SolverParams):
    k, psi, rules = state.k, state.psi, params.rules
    xi_k, u = _extrapolate(state, params)
    Au, y, Ay = _predict(p, u, psi)
    z = _tseng_correct(y, psi, Au, Ay)
    q, res_tz = _mann(p, z, rules.varphi(k))
    x_next = _steepest_descent(p, q, params.sigma, rules.theta(k))
    psi_next = adaptive_psi_next(psi, params.phi, u, y, Au, Ay)
    report = StepReport(u, y, z, q, xi_k, psi, psi_next, params.phi, norm(u - y), res_tz)
    return _advance(state, x_next, psi_next), report


def step_cor1(state: SolverState, p: Problem, params: SolverParams):
    k, psi, rules = state.k, state.psi, params.rules
    xi_k, u = _extrapolate(state, params)
    Au, y, Ay = _predict(p, u, psi)
    z, slack = _subgradient_correct(p, u, psi, Au, y, Ay)
    q, res_tz = _mann(p, z, rules.varphi(k))
    th = rules.theta(k)
    with _stage("outer"):
        x_next = lincomb(th, state.x0, 1 - th, q)
    psi_next = adaptive_psi_next(psi, params.phi, u, y, Au, Ay)
    report = StepReport(u, y, z, q, xi_k, psi, psi_next, params.phi, norm(u - y), res_tz, slack)
    return _advance(state, x_next, psi_next), report


def step_cor2(state: SolverState, p: Problem, params: SolverParams):
    f = _require_f(p)
    k, psi, rules = state.k, state.psi, params.rules
    xi_k, u = _extrapolate(state, params)
    Au, y, Ay = _predict(p, u, psi)
    z = _tseng_correct(y, psi, Au, Ay)
    q, res_tz = _mann(p, z, rules.varphi(k))
    th = rules.theta(k)
    with _stage("outer"):
        x_next = lincomb(1 - th, q, th, f(q))
    psi_next = adaptive_psi_next(psi, params.phi, u, y, Au, Ay)
    report = StepReport(u, y, z, q, xi_k, psi, psi_next, params.phi, norm(u - y), res_tz)
    return _advance(state, x_next, psi_next), report


def hsegm_step_size(p: Problem, params: SolverParams) -> float:
    L = p.A.meta.lipschitz
    if L is None or not L > 0:
        raise ConfigurationError("HSEGM needs the Lipschitz constant of A")
    return params.hsegm_factor / L


def step_hsegm(state: SolverState, p: Problem, params: SolverParams):
    """Halpern subgradient extragradient step with the fixed step held in ``state.psi``."""
    k, psi, rules = state.k, state.psi, params.rules
    x = state.x_cur
    Ax, y, Ay = _predict(p, x, psi)
    w, slack = _subgradient_correct(p, x, psi, Ax, y, Ay)
    th, vp = rules.theta(k), rules.varphi(k)
    with _stage("z"):
        z = lincomb(th, state.x0, 1 - th, w)
    with _stage("q"):
        Tz = p.T(z)
    with _stage("outer"):
        x_next = lincomb(vp, x, 1 - vp, Tz)
    report = StepReport(x, y, z, Tz, 0.0, psi, psi, params.phi, norm(x - y), norm(Tz - z), slack)
    return _advance(state, x_next, psi), report


def step_vsegm(state: SolverState, p: Problem, params: SolverParams):
    f = _require_f(p)
    k, psi, rules = state.k, state.psi, params.rules
    x = state.x_cur
    Ax, y, Ay = _predict(p, x, psi)
    z, slack = _subgradient_correct(p, x, psi, Ax, y, Ay)
    q, res_tz = _mann(p, z, rules.varphi(k))
    th = rules.theta(k)
    with _stage("outer"):
        x_next = lincomb(th, f(x), 1 - th, q)
    psi_next = adaptive_psi_next(psi, params.phi, x, y, Ax, Ay)
    report = StepReport(x, y, z, q, 0.0, psi, psi_next, params.phi, norm(x - y), res_tz, slack)
    return _advance(state, x_next, psi_next), report


def step_vtegm(state: SolverState, p: Problem, params: SolverParams):
    f = _require_f(p)
    k, psi, rules = state.k, state.psi, params.rules
    x = state.x_cur
    Ax, y, Ay = _predict(p, x, psi)
    z = _tseng_correct(y, psi, Ax, Ay)
    q, res_tz = _mann(p, z, rules.varphi(k))
    th = rules.theta(k)
    with _stage("outer"):
        x_next = lincomb(th, f(x), 1 - th, q)
    psi_next = adaptive_psi_next(psi, params.phi, x, y, Ax, Ay)
    report = StepReport(x, y, z, q, 0.0, psi, psi_next, params.phi, norm(x - y), res_tz)
    return _advance(state, x_next, psi_next), report


def step_stegm(state: SolverState, p: Problem, params: SolverParams):
    """Tseng step whose ``psi`` comes from a fresh Armijo search at every iterate."""
    k, rules = state.k, params.rules
    x = state.x_cur
    with _stage("y"):
        Ax = p.A(x)
        psi, y = armijo_psi(params.armijo_alpha, params.armijo_ell, params.armijo_phi, x, p.A, p.C, Ax)
        Ay = p.A(y)
    z = _tseng_correct(y, psi, Ax, Ay)
    q, res_tz = _mann(p, z, rules.varphi(k))
    x_next = _steepest_descent(p, q, params.sigma, rules.theta(k))
    report = StepReport(x, y, z, q, 0.0, psi, psi, params.armijo_phi, norm(x - y), res_tz)
    return _advance(state, x_next, psi), report


STEPS = {
    AlgorithmId.ISEGM: step_isegm,
    AlgorithmId.ITEGM: step_itegm,
    AlgorithmId.COR1_HALPERN: step_cor1,
    AlgorithmId.COR2_VISCOSITY: step_cor2,
    AlgorithmId.HSEGM: step_hsegm,
    AlgorithmId.VSEGM: step_vsegm,
    AlgorithmId.VTEGM: step_vtegm,
    AlgorithmId.STEGM: step_stegm,
}


# -- driver --------------------------------------------------------------------

@dataclass(frozen=True)
class StopRule:
    max_iter: int
    tol: Optional[float] = None


@dataclass(frozen=True)
class TraceRow:
    """Iteration ``k``: error of ``x^k`` plus the quantities of the step leaving it."""

    k: int
    D_k: float
    psi_k: float
    xi_k: float
    residual_uy: float
    residual_Tz: float
    elapsed_s: float


@dataclass
class IterationTrace:
    algorithm: AlgorithmId
    rows: List[TraceRow] = field(default_factory=list)
    x_final: Optional[HVector] = None
    final_error: float = float("nan")
    complete: bool = True
    error: Optional[str] = None


def check_params(p: Problem, alg: AlgorithmId, params: SolverParams) -> None:
    """Raise :class:`ConfigurationError` if ``alg`` cannot run on ``p`` with ``params``."""
    alg = AlgorithmId(alg)
    if alg in (AlgorithmId.ISEGM, AlgorithmId.ITEGM, AlgorithmId.STEGM):
        params.check_sigma(p)
    if alg in (AlgorithmId.COR2_VISCOSITY, AlgorithmId.VSEGM, AlgorithmId.VTEGM):
        _require_f(p)
    if alg is AlgorithmId.HSEGM:
        hsegm_step_size(p, params)
    vartheta = p.T.meta.demicontractive or 0.0
    params.rules.check(vartheta, horizon=max(params.max_iter, 1))


def initial_state(p: Problem, alg: AlgorithmId, params: SolverParams, x1: HVector,
                  x0: Optional[HVector] = None) -> SolverState:
    x0 = x1 if x0 is None else x0
    if alg is AlgorithmId.HSEGM:
        psi = hsegm_step_size(p, params)
    elif alg is AlgorithmId.STEGM:
        psi = params.armijo_alpha
    else:
        psi = params.psi1
    return SolverState(1, x0, x1, psi, x0)


def run(p: Problem, alg, params: SolverParams, x1: HVector, x0: Optional[HVector] = None,
        stop: Optional[StopRule] = None,
        on_step: Optional[Callable[[SolverState, StepReport, SolverState], None]] = None) -> IterationTrace:
    """Iterate ``alg`` from ``x1`` (and ``x0``, default ``x0 = x1``).

    Stops after ``stop.max_iter`` steps (default ``params.max_iter``), or earlier
    once the error against the known solution drops to ``stop.tol``.  Step
    failures end the run and leave a trace marked incomplete.  ``elapsed_s``
    counts only time spent inside the transitions.
    """
    alg = AlgorithmId(alg)
    stop = stop or StopRule(params.max_iter)
    check_params(p, alg, params.with_(max_iter=stop.max_iter))
    step = STEPS[alg]
    state = initial_state(p, alg, params, x1, x0)
    trace = IterationTrace(alg)
    d_k = p.error(state.x_cur)
    elapsed = 0.0
    for _ in range(stop.max_iter):
        t0 = time.perf_counter()
        try:
            new_state, report = step(state, p, params)
        except StepError as exc:
            trace.complete, trace.error = False, f"k={state.k} {exc}"
            break
        elapsed += time.perf_counter() - t0
        trace.rows.append(TraceRow(state.k, d_k, report.psi_k, report.xi_k,
                                   report.residual_uy, report.residual_Tz, elapsed))
        if alg.subgradient and alg is not AlgorithmId.HSEGM and p.known_solution is not None:
            report = replace(report, lemma_lhs_rhs=descent_sides(
                report, p.known_solution, report.phi, report.psi_k, report.psi_next))
        if on_step is not None:
            on_step(state, report, new_state)
        state = new_state
        d_k = p.error(state.x_cur)
        if stop.tol is not None and d_k <= stop.tol:
            break
    trace.x_final = state.x_cur
    trace.final_error = d_k
    return trace


# -- diagnostics -----------------------------------------------------------------

@dataclass(frozen=True)
class ContractionDiagnostics:
    """Modulus of ``(I - theta*sigma*S) o U``: it contracts by ``1 - theta*gamma``."""

    gamma: float
    theta: float

    @classmethod
    def from_constants(cls, eta: float, kappa: float, sigma: float, theta: float):
        if not 0 < eta <= kappa:
            raise ConfigurationError(f"need 0 < eta <= kappa, got {eta}, {kappa}")
        if not 0 < sigma < 2 * eta / kappa**2:
            raise ConfigurationError(f"sigma = {sigma} must lie in (0, 2*eta/kappa^2 = {2 * eta / kappa**2})")
        if not 0 <= theta <= 1:
            raise ConfigurationError(f"theta = {theta} must lie in [0, 1]")
        radicand = 1 - sigma * (2 * eta - sigma * kappa**2)
        if not radicand > 0:
            # gamma would reach 1; the modulus is only claimed on (0, 1)
            raise ConfigurationError(f"sigma = {sigma} makes gamma = 1")
        return cls(1 - math.sqrt(radicand), theta)

    @property
    def bound(self) -> float:
        return 1 - self.theta * self.gamma


def verify_contraction(S: Mapping, U: Callable[[HVector], HVector], sigma: float, theta: float,
                       samples: int, space, seed: int = 0, scale: float = 1.0) -> float:
    """Largest observed ``||V x - V y|| / ||x - y||`` for ``V = (I - theta*sigma*S) o U``.

    Raises :class:`ConfigurationError` if ``S`` lacks its constants or
    ``sigma`` is out of range; the caller compares the result to
    ``ContractionDiagnostics.bound``.
    """
    eta, kappa = S.meta.strong_monotonicity, S.meta.lipschitz_of_S
    if eta is None or kappa is None:
        raise ConfigurationError("S needs strong_monotonicity and lipschitz_of_S metadata")
    ContractionDiagnostics.from_constants(eta, kappa, sigma, theta)
    rng = rng_for(seed, stream=7)
    c = theta * sigma

    def V(x):
        ux = U(x)
        return ux - c * S(ux)

    worst = 0.0
    for _ in range(samples):
        x = HVector(space, scale * rng.standard_normal(space.size))
        y = HVector(space, scale * rng.standard_normal(space.size))
        d = norm(x - y)
        if d > 0:
            worst = max(worst, norm(V(x) - V(y)) / d)
    return worst


def descent_sides(report: StepReport, x_dag: HVector, phi: float, psi_k: float, psi_k1: float):
    """Both sides of the per-iteration descent inequality for subgradient steps.

    ``lhs = ||z - x_dag||^2`` and
    ``rhs = ||u - x_dag||^2 - c ||y - u||^2 - c ||z - y||^2`` with
    ``c = 1 - phi * psi_k / psi_k1``.
    """
    c = 1 - phi * psi_k / psi_k1
    lhs = norm(report.z - x_dag) ** 2
    rhs = (norm(report.u - x_dag) ** 2 - c * norm(report.y - report.u) ** 2
           - c * norm(report.z - report.y) ** 2)
    return lhs, rhs


def verify_iteration_inequality(report: StepReport, x_dag: HVector, phi: float, psi_k: float,
                                psi_k1: float, slack: float = LEMMA_SLACK) -> bool:
    lhs, rhs = descent_sides(report, x_dag, phi, psi_k, psi_k1)
    return lhs <= rhs + slack


def tseng_gap(report: StepReport) -> float:
    """``||z - y|| - phi * (psi_k/psi_next) * ||u - y||``; nonpositive for Tseng steps."""
    bound = report.phi * (report.psi_k / report.psi_next) * report.residual_uy
    return norm(report.z - report.y) - bound


def verify_tseng_bound(report: StepReport, slack: float = TSENG_SLACK) -> bool:
    return tseng_gap(report) <= slack


def feasibility_gap(p: Problem, report: StepReport) -> float:
    """Constraint violation of ``y`` (should be 0 up to rounding)."""
    return violation(p.C, report.y)
