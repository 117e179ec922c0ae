"""Benchmark orchestration: configs, comparison runs, CSV traces, invariant checks."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .hilbert import GridL2, HVector, inner, norm, sample
from .operators import Problem, make_example1, make_example2, make_example3, rng_for
from .projections import (
    FIRM_NONEXPANSIVE_TOL,
    IDEMPOTENCE_TOL,
    MEMBERSHIP_TOL,
    VARIATIONAL_TOL,
    project,
    violation,
)
from .solvers import (
    AlgorithmId,
    ContractionDiagnostics,
    StopRule,
    TraceRow,
    descent_sides,
    run,
    tseng_gap,
    verify_contraction,
)
from .stepsize import PAPER_PRESET, ConfigurationError, SolverParams

log = logging.getLogger(__name__)

EXAMPLES = ("ex1", "ex2", "ex3")
DEFAULT_MAX_ITER = {"ex1": 400, "ex2": 400, "ex3": 50}
DEFAULT_START = {"ex1": "random:1", "ex2": "random:1", "ex3": "t2"}
DEFAULT_POINTS = 256

NAMED_STARTS = {
    "t2": lambda t: t**2,
    "pow2t": lambda t: 2.0**t,
    "expt": np.exp,
    "t_plus_halfcos": lambda t: t + 0.5 * np.cos(t),
}
START_ALIASES = {"tcos": "t_plus_halfcos"}

PARAM_KEYS = ("xi", "psi1", "phi", "sigma", "armijo_alpha", "armijo_ell", "armijo_phi", "hsegm_factor")

CSV_COLUMNS = ("algorithm", "k", "D_k", "psi_k", "xi_k", "residual_uy", "residual_Tz", "elapsed_s")

START_STREAM = 1
CHECK_STREAM = 2


def parse_start(spec: str) -> Tuple[str, object]:
    """``"random:<scale>"`` -> ``("random", scale)``; a function id -> ``("named", id)``."""
    spec = spec.strip()
    if spec.startswith("random"):
        _, _, scale = spec.partition(":")
        scale = float(scale) if scale else 1.0
        if not scale > 0:
            raise ValueError(f"random start scale must be positive, got {scale}")
        return "random", scale
    name = START_ALIASES.get(spec, spec)
    if name not in NAMED_STARTS:
        raise ValueError(f"unknown start {spec!r}; use random:<scale> or one of {sorted(NAMED_STARTS)} / tcos")
    return "named", name


@dataclass(frozen=True)
class BenchConfig:
    example: str
    n: Optional[int] = None
    points: Optional[int] = None
    seed: int = 0
    algorithms: Tuple[AlgorithmId, ...] = tuple(AlgorithmId)
    max_iter: Optional[int] = None
    tol: Optional[float] = None
    start: str = ""
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.example not in EXAMPLES:
            raise ValueError(f"example must be one of {EXAMPLES}, got {self.example!r}")
        object.__setattr__(self, "algorithms", tuple(AlgorithmId(a) for a in self.algorithms))
        if not self.start:
            object.__setattr__(self, "start", DEFAULT_START[self.example])
        parse_start(self.start)
        unknown = set(self.params) - set(PARAM_KEYS)
        if unknown:
            raise ValueError(f"unknown parameter overrides {sorted(unknown)}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def iterations(self) -> int:
        return DEFAULT_MAX_ITER[self.example] if self.max_iter is None else self.max_iter

    def solver_params(self) -> SolverParams:
        return PAPER_PRESET.with_(max_iter=self.iterations, **self.params)

    def echo(self) -> Dict[str, str]:
        """Stable string form of every setting, for CSV headers."""
        out = {
            "example": self.example,
            "n": "" if self.n is None else str(self.n),
            "points": "" if self.points is None else str(self.points),
            "seed": str(self.seed),
            "algorithms": ",".join(a.value for a in self.algorithms),
            "max_iter": str(self.iterations),
            "tol": "" if self.tol is None else repr(self.tol),
            "start": self.start,
        }
        params = self.solver_params()
        for key in PARAM_KEYS:
            out[key] = repr(getattr(params, key))
        return out


@dataclass
class RunRecord:
    algorithm: AlgorithmId
    rows: List[TraceRow]
    seed: int
    config: Dict[str, str]
    complete: bool = True
    error: Optional[str] = None
    final_error: float = float("nan")

    @property
    def final_D(self) -> float:
        return self.rows[-1].D_k if self.rows else float("nan")

    def time_per_iteration(self) -> float:
        return self.rows[-1].elapsed_s / len(self.rows) if self.rows else float("nan")


def build_problem(cfg: BenchConfig) -> Problem:
    if cfg.example == "ex1":
        return make_example1()
    if cfg.example == "ex2":
        if cfg.n is None:
            raise ConfigurationError("ex2 needs the dimension n")
        return make_example2(cfg.n, cfg.seed)
    if cfg.points is None:
        raise ConfigurationError("ex3 needs the number of grid points")
    return make_example3(cfg.points)


def make_start(cfg: BenchConfig, space) -> HVector:
    kind, arg = parse_start(cfg.start)
    if kind == "random":
        rng = rng_for(cfg.seed, stream=START_STREAM)
        return HVector(space, arg * rng.uniform(0.0, 1.0, size=space.size))
    if not isinstance(space, GridL2):
        raise ConfigurationError(f"start {cfg.start!r} is a function of t and needs a grid L2 space")
    return sample(space, NAMED_STARTS[arg])


def compare(cfg: BenchConfig, repeats: int = 1) -> List[RunRecord]:
    """Run every configured algorithm on one problem instance from one start.

    With ``repeats > 1`` the algorithms are run round-robin that many times and
    each record keeps the timings of its fastest repeat; the iterates are
    deterministic, so only ``elapsed_s`` differs between repeats.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be at least 1, got {repeats}")
    problem = build_problem(cfg)
    x1 = make_start(cfg, problem.space)
    params = cfg.solver_params()
    stop = StopRule(cfg.iterations, cfg.tol)
    echo = cfg.echo()
    best: Dict[AlgorithmId, RunRecord] = {}
    for _ in range(repeats):
        for alg in cfg.algorithms:
            if alg in best and best[alg].error and not best[alg].rows:
                continue
            try:
                trace = run(problem, alg, params, x1, stop=stop)
            except ConfigurationError as exc:
                log.warning("%s not run: %s", alg.value, exc)
                best[alg] = RunRecord(alg, [], cfg.seed, echo, complete=False, error=str(exc))
                continue
            if not trace.complete:
                log.warning("%s stopped early: %s", alg.value, trace.error)
            rec = RunRecord(alg, trace.rows, cfg.seed, echo, trace.complete, trace.error, trace.final_error)
            if alg not in best or _total_time(rec) < _total_time(best[alg]):
                best[alg] = rec
    return [best[alg] for alg in cfg.algorithms]


def _total_time(rec: RunRecord) -> float:
    return rec.rows[-1].elapsed_s if rec.rows else math.inf


def _fmt(x: float) -> str:
    return "%.17g" % x


def emit_csv(records: Sequence[RunRecord], path) -> None:
    """Write all records to one CSV with an ``algorithm`` column.

    Settings are echoed as ``#`` comment lines before the header.
    """
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            write_csv(records, fh)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def write_csv(records: Sequence[RunRecord], fh) -> None:
    seen = []
    for rec in records:
        if rec.config not in seen:
            seen.append(rec.config)
            fh.write(f"# seed={rec.seed}\n")
            fh.write("# config " + " ".join(f"{k}={v}" for k, v in rec.config.items()) + "\n")
    for rec in records:
        if rec.error:
            fh.write(f"# error {rec.algorithm.value}: {rec.error}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in records:
        for r in rec.rows:
            w.writerow([rec.algorithm.value, r.k, _fmt(r.D_k), _fmt(r.psi_k), _fmt(r.xi_k),
                        _fmt(r.residual_uy), _fmt(r.residual_Tz), _fmt(r.elapsed_s)])


def read_csv(path) -> List[dict]:
    """Parse a trace CSV back into dict rows (comments skipped, floats restored)."""
    with Path(path).open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = []
    for r in csv.DictReader(lines):
        rows.append({k: (v if k == "algorithm" else int(v) if k == "k" else float(v)) for k, v in r.items()})
    return rows


# -- invariant suite -------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float = float("nan")
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = "" if math.isnan(self.worst) else f" worst={self.worst:.3e}"
        detail = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}{worst}{detail}"


@dataclass
class DiagnosticReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, worst=float("nan"), detail=""):
        self.checks.append(CheckResult(name, bool(passed), float(worst), detail))

    def __getitem__(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def format(self) -> str:
        return "\n".join(c.line() for c in self.checks)


def _random_vector(rng, space, scale):
    return HVector(space, scale * rng.standard_normal(space.size))


def _check_projection(report, problem, rng, samples, scale):
    C, space = problem.C, problem.space
    idem = firm = var = memb = -math.inf
    for _ in range(samples):
        x, y = _random_vector(rng, space, scale), _random_vector(rng, space, scale)
        px, py = project(C, x), project(C, y)
        memb = max(memb, violation(C, px))
        idem = max(idem, norm(project(C, px) - px))
        firm = max(firm, norm(px - py) ** 2 - inner(px - py, x - y))
        var = max(var, inner(x - px, py - px))  # py is a point of C
    report.add("projection.membership", memb <= MEMBERSHIP_TOL, memb)
    report.add("projection.idempotence", idem <= IDEMPOTENCE_TOL, idem)
    report.add("projection.firm_nonexpansive", firm <= FIRM_NONEXPANSIVE_TOL, firm)
    report.add("projection.variational", var <= VARIATIONAL_TOL, var)


def _check_operators(report, problem, rng, samples, scale):
    A, T, S, space = problem.A, problem.T, problem.S, problem.space
    L = A.meta.lipschitz
    eta = S.meta.strong_monotonicity
    vt = T.meta.demicontractive or 0.0
    z = problem.known_solution
    mono = lip = demi = strong = -math.inf
    for _ in range(samples):
        x, y = _random_vector(rng, space, scale), _random_vector(rng, space, scale)
        d = x - y
        Ad = A(x) - A(y)
        mono = max(mono, -inner(Ad, d))
        if L is not None:
            lip = max(lip, norm(Ad) - (L + 1e-8) * norm(d))
        if z is not None:
            Tx = T(x)
            demi = max(demi, norm(Tx - z) ** 2 - norm(x - z) ** 2 - vt * norm(x - Tx) ** 2)
        if eta is not None:
            strong = max(strong, (eta - 1e-10) * norm(d) ** 2 - inner(S(x) - S(y), d))
    report.add("operator.A.monotone", mono <= 1e-10, mono)
    if L is not None:
        report.add("operator.A.lipschitz", lip <= 0.0, lip)
    if z is not None:
        report.add("operator.T.demicontractive", demi <= 1e-10, demi)
    if eta is not None:
        report.add("operator.S.strongly_monotone", strong <= 0.0, strong)


def _check_contraction(report, problem, params, samples, scale):
    meta = problem.S.meta
    try:
        diag = ContractionDiagnostics.from_constants(meta.strong_monotonicity, meta.lipschitz_of_S,
                                                     params.sigma, 1.0)
        ratio = verify_contraction(problem.S, lambda x: project(problem.C, x), params.sigma, 1.0,
                                   samples, problem.space, seed=CHECK_STREAM, scale=scale)
    except (ConfigurationError, TypeError) as exc:
        report.add("contraction", False, detail=str(exc))
        return
    report.add("contraction", ratio <= diag.bound + 1e-9, ratio - diag.bound,
               f"gamma={diag.gamma:.6g}, max ratio={ratio:.6g}")


def _check_run(report, problem, alg, params, x1, iters):
    worst = {"descent": -math.inf, "halfspace": -math.inf, "tseng": -math.inf, "feasible": 0.0}
    psis = []

    def on_step(state, rep, new_state):
        psis.append(rep.psi_k)
        worst["feasible"] = max(worst["feasible"], violation(problem.C, rep.y))
        if rep.halfspace_slack is not None:
            # relative to the magnitudes entering <u - psi*Au - y, z - y>
            scale = (1.0 + norm(rep.u) + norm(rep.z)) ** 2
            worst["halfspace"] = max(worst["halfspace"], rep.halfspace_slack / scale)
        if alg.subgradient:
            lhs, rhs = descent_sides(rep, problem.known_solution, rep.phi, rep.psi_k, rep.psi_next)
            worst["descent"] = max(worst["descent"], lhs - rhs)
        else:
            worst["tseng"] = max(worst["tseng"], tseng_gap(rep))

    name = alg.value
    trace = run(problem, alg, params, x1, stop=StopRule(iters), on_step=on_step)
    report.add(f"{name}.complete", trace.complete, detail=trace.error or f"{len(trace.rows)} iterations")
    report.add(f"{name}.feasibility", worst["feasible"] <= 1e-10, worst["feasible"])
    if alg.subgradient:
        report.add(f"{name}.halfspace", worst["halfspace"] <= 1e-12, worst["halfspace"])
        report.add(f"{name}.descent_inequality", worst["descent"] <= 1e-9, worst["descent"])
    else:
        report.add(f"{name}.tseng_residual", worst["tseng"] <= 1e-9, worst["tseng"])
    if psis:
        rise = max((b - a for a, b in zip(psis, psis[1:])), default=0.0)
        L = problem.A.meta.lipschitz
        floor = min(params.psi1, params.phi / L) if L else 0.0
        report.add(f"{name}.stepsize", rise <= 0.0 and min(psis) >= floor - 1e-12,
                   floor - min(psis), f"min psi={min(psis):.6g}, floor={floor:.6g}")


def validate(cfg: BenchConfig, samples: int = 1000) -> DiagnosticReport:
    """Run the invariant suite on ``cfg``'s problem; failures become report entries."""
    report = DiagnosticReport()
    try:
        problem = build_problem(cfg)
        params = cfg.solver_params()
        x1 = make_start(cfg, problem.space)
    except (ConfigurationError, ValueError) as exc:
        report.add("config", False, detail=str(exc))
        return report
    if problem.known_solution is None:
        report.add("known_solution", False, detail="problem has no known solution")
        return report

    try:
        bound = params.sigma_bound(problem)
        report.add("precondition.sigma", params.sigma < bound, params.sigma - bound,
                   f"sigma={params.sigma:g} vs 2*eta/kappa^2={bound:g}")
        sigma_ok = params.sigma < bound
    except ConfigurationError as exc:
        report.add("precondition.sigma", False, detail=str(exc))
        sigma_ok = False
    try:
        params.rules.check(problem.T.meta.demicontractive or 0.0)
        report.add("precondition.sequences", True)
    except ConfigurationError as exc:
        report.add("precondition.sequences", False, detail=str(exc))

    rng = rng_for(cfg.seed, stream=CHECK_STREAM)
    scale = 2.0 * max(1.0, norm(x1))
    _check_projection(report, problem, rng, samples, scale)
    _check_operators(report, problem, rng, samples, scale)
    if sigma_ok:
        _check_contraction(report, problem, params, samples, scale)
        for alg in (AlgorithmId.ISEGM, AlgorithmId.ITEGM):
            _check_run(report, problem, alg, params, x1, cfg.iterations)
    else:
        for name in ("contraction", "ISEGM.run", "ITEGM.run"):
            report.add(name, False, detail="skipped: sigma precondition fails")
    return report
