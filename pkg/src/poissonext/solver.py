"""Constrained maximization of the bulk energy over antipodal boundary data.

The maximizers of

    lambda_p(K) = sup { integral |E v|^{p_bulk} :
                        v >= 0 antipodal, integral K |v|^p ds = 1 }

satisfy the Euler-Lagrange equation lambda K v^{p-1} = T[(E v)^{q_exp}]
with E the extension and T its adjoint.  The solver iterates the damped
fixed point of that equation:

    G = T[(E v)^{q_exp}],  candidate w = (G / K)^{1/(p-1)},
    v+ = (1 - tau) v + tau w, symmetrized and constraint-normalized,

accepting a step only if the functional did not decrease (tau halves
otherwise), which makes the functional history nondecreasing by
construction.  Continuation lowers p along a schedule toward the critical
exponent, warm-starting each stage from the previous one.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .functionals import SharpConstant, WeightFunction, lambda_threshold
from .operators import BoundaryFunction, ExtensionOperator, build_extension_operator
from .params import ProblemParams
from .quadrature import BallQuadrature, SphereQuadrature, integrate_ball, integrate_boundary

MAX_DAMPING_HALVINGS = 20
ASCENT_SLACK = 1e-12


@dataclass
class SubcriticalProblem:
    """One constrained maximization: weight, exponent, quadratures, knobs."""

    params: ProblemParams
    weight: WeightFunction
    p: float
    sphere: SphereQuadrature
    ball: BallQuadrature
    tol_v: float = 1e-9
    max_iter: int = 5000
    damping: float = 1.0
    correction: str = "balanced"
    allow_critical: bool = False
    operator: ExtensionOperator = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not self.weight.antipodal:
            raise ValueError("the solver requires an antipodally symmetric weight")
        if self.weight.quad is not self.sphere:
            raise ValueError("weight must live on the problem's sphere quadrature")
        p_lo, p_hi = self.params.p_crit, self.params.p_bulk
        in_range = (p_lo <= self.p < p_hi) if self.allow_critical else (p_lo < self.p < p_hi)
        if not in_range:
            bracket = "[" if self.allow_critical else "("
            raise ValueError(f"p must lie in {bracket}{p_lo}, {p_hi}), got {self.p}")
        if self.operator is None:
            self.operator = build_extension_operator(
                self.sphere, self.ball, self.params, self.correction
            )


@dataclass
class SolverState:
    v: BoundaryFunction
    lambda_est: float
    iteration: int = 0
    residual: float = np.inf
    functional_history: list = field(default_factory=list)
    step_failed: bool = False


def symmetrize_antipodal(v: BoundaryFunction) -> BoundaryFunction:
    """Project onto the antipodally symmetric class (idempotent average)."""
    return BoundaryFunction(_symmetrize(v.values, v.quad.antipode_index), v.quad)


def _symmetrize(values: np.ndarray, anti: np.ndarray) -> np.ndarray:
    return 0.5 * (values + values[anti])


def normalize_constraint(
    v: BoundaryFunction, weight: WeightFunction, p: float
) -> BoundaryFunction:
    """Scale v so that the constraint integral K |v|^p equals one."""
    c = integrate_boundary(weight.values * np.abs(v.values) ** p, v.quad)
    if c <= 0:
        raise ValueError("cannot normalize the zero function")
    return BoundaryFunction(v.values / c ** (1.0 / p), v.quad)


def _prepare(problem: SubcriticalProblem, init: BoundaryFunction) -> SolverState:
    v = np.maximum(np.asarray(init.values, dtype=float), 0.0)
    if not np.any(v > 0):
        raise ValueError("initial guess must be nonnegative and nonzero")
    v = _symmetrize(v, problem.sphere.antipode_index)
    v = _normalize_values(v, problem)
    lam = _functional(v, problem)
    return SolverState(
        v=BoundaryFunction(v, problem.sphere),
        lambda_est=lam,
        functional_history=[lam],
    )


def _normalize_values(v: np.ndarray, problem: SubcriticalProblem) -> np.ndarray:
    c = integrate_boundary(problem.weight.values * np.abs(v) ** problem.p, problem.sphere)
    return v / c ** (1.0 / problem.p)


def _functional(v: np.ndarray, problem: SubcriticalProblem) -> float:
    ext = problem.operator.extend_values(v)
    return integrate_ball(np.abs(ext) ** problem.params.p_bulk, problem.ball)


def fixed_point_step(state: SolverState, problem: SubcriticalProblem) -> SolverState:
    """One damped Euler-Lagrange fixed-point step with ascent acceptance."""
    op = problem.operator
    v = state.v.values
    g = op.adjoint_values(op.extend_values(v) ** problem.params.q_exp)
    w = (g / problem.weight.values) ** (1.0 / (problem.p - 1.0))
    tau = problem.damping
    for _ in range(MAX_DAMPING_HALVINGS + 1):
        cand = (1.0 - tau) * v + tau * w
        cand = _symmetrize(cand, problem.sphere.antipode_index)
        cand = _normalize_values(cand, problem)
        lam = _functional(cand, problem)
        if lam >= state.lambda_est - ASCENT_SLACK:
            residual = float(np.max(np.abs(cand - v)) / np.max(np.abs(v)))
            return SolverState(
                v=BoundaryFunction(cand, problem.sphere),
                lambda_est=lam,
                iteration=state.iteration + 1,
                residual=residual,
                functional_history=state.functional_history + [lam],
            )
        tau *= 0.5
    return replace(state, step_failed=True)


def maximize_subcritical(
    problem: SubcriticalProblem, init: BoundaryFunction
) -> tuple[BoundaryFunction, float, dict]:
    """Iterate fixed-point steps to convergence; returns (v, lambda, report)."""
    state = _prepare(problem, init)
    converged = False
    for _ in range(problem.max_iter):
        state = fixed_point_step(state, problem)
        if state.step_failed:
            break
        if state.residual < problem.tol_v:
            converged = True
            break
    lam_pair = multiplier_estimate(state.v, problem)
    report = {
        "iterations": state.iteration,
        "converged": converged,
        "step_failed": state.step_failed,
        "residual": state.residual,
        "lambda_est": state.lambda_est,
        "multiplier_pairing": lam_pair,
        "multiplier_identity_dev": abs(lam_pair / state.lambda_est - 1.0),
        "el_residual": el_residual(
            state.v, problem.weight, problem.params, problem.ball,
            lam=state.lambda_est, p=problem.p, operator=problem.operator,
        ),
        "functional_history": state.functional_history,
    }
    return state.v, state.lambda_est, report


def multiplier_estimate(v: BoundaryFunction, problem: SubcriticalProblem) -> float:
    """Independent multiplier value <v, T[(E v)^q]> / <v, K v^{p-1}>."""
    op = problem.operator
    g = op.adjoint_values(op.extend_values(v.values) ** problem.params.q_exp)
    num = integrate_boundary(v.values * g, problem.sphere)
    den = integrate_boundary(
        problem.weight.values * v.values**problem.p, problem.sphere
    )
    return num / den


def el_residual(
    v: BoundaryFunction,
    weight: WeightFunction,
    params: ProblemParams,
    ball: BallQuadrature,
    lam: float | None = None,
    p: float | None = None,
    correction: str = "balanced",
    operator: ExtensionOperator = None,
) -> float:
    """Relative sup-norm residual of the Euler-Lagrange equation.

    With a multiplier: sup |lam K v^{p-1} - T[(E v)^q]| / sup T[(E v)^q].
    Without one, the multiplier is first estimated by pairing the equation
    with v and then absorbed into the scaling of v (v -> c v with
    c = lam^{1/(p-1-q)}, which leaves both sides equal exactly when v
    solves the multiplier form), and the plain equation is evaluated; by
    default p is the critical exponent, so this is the residual of the
    parameter-free critical equation.
    """
    if np.any(v.values <= 0):
        raise ValueError("the residual is defined for positive v")
    if p is None:
        p = params.p_crit
    op = operator or build_extension_operator(v.quad, ball, params, correction)
    g = op.adjoint_values(op.extend_values(v.values) ** params.q_exp)
    if lam is None:
        num = integrate_boundary(v.values * g, v.quad)
        den = integrate_boundary(weight.values * v.values**p, v.quad)
        lam_pair = num / den
        c = lam_pair ** (1.0 / (p - 1.0 - params.q_exp))
        lhs = weight.values * (c * v.values) ** (p - 1.0)
        rhs = c**params.q_exp * g
        return float(np.max(np.abs(lhs - rhs)) / np.max(rhs))
    lhs = lam * weight.values * v.values ** (p - 1.0)
    return float(np.max(np.abs(lhs - g)) / np.max(g))


@dataclass
class StageReport:
    p: float
    lambda_est: float
    el_residual: float
    sup_v: float
    inf_v: float
    iterations: int
    converged: bool


@dataclass
class ContinuationReport:
    stages: list
    final_v: BoundaryFunction
    lambda_est: float
    blow_up_flag: bool
    lambda_threshold: float | None = None
    stage_profiles: list = field(default_factory=list)

    def stage_rows(self) -> list[dict]:
        return [
            {
                "p": s.p,
                "lambda": s.lambda_est,
                "el_residual": s.el_residual,
                "sup_v": s.sup_v,
                "inf_v": s.inf_v,
                "iterations": s.iterations,
                "converged": s.converged,
            }
            for s in self.stages
        ]


def default_schedule(
    params: ProblemParams, start: float | None = None, floor: float = 1e-3, max_stages: int = 16
) -> list[float]:
    """Geometric approach of p toward p_crit + floor, halving the excess."""
    if start is None:
        start = 0.5 * (params.p_crit + params.p_bulk)
    if not (params.p_crit < start < params.p_bulk):
        raise ValueError("schedule start must lie between the critical exponents")
    out = []
    excess = start - params.p_crit
    for _ in range(max_stages):
        if excess <= floor:
            break
        out.append(params.p_crit + excess)
        excess *= 0.5
    out.append(params.p_crit + floor)
    return out


def continuation(
    weight: WeightFunction,
    schedule: list[float],
    params: ProblemParams,
    sphere: SphereQuadrature,
    ball: BallQuadrature,
    init: BoundaryFunction | None = None,
    tol_v: float = 1e-9,
    max_iter: int = 5000,
    damping: float = 1.0,
    correction: str = "balanced",
    blow_up_factor: float = 3.0,
    sharp: SharpConstant | None = None,
) -> ContinuationReport:
    """Solve the stages of a decreasing-p schedule with warm starts.

    Flags a blow-up symptom when sup v grows by more than `blow_up_factor`
    between consecutive stages.  Stage failure aborts with the partial
    report.
    """
    if len(schedule) == 0:
        raise ValueError("empty schedule")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly decreasing")
    if schedule[0] >= params.p_bulk or schedule[-1] < params.p_crit:
        raise ValueError("schedule must stay inside [p_crit, p_bulk)")
    op = build_extension_operator(sphere, ball, params, correction)
    if init is None:
        init = BoundaryFunction(np.ones(len(sphere)), sphere)
    v = init
    stages: list[StageReport] = []
    profiles: list[np.ndarray] = []
    blow_up = False
    lam = np.nan
    for p in schedule:
        problem = SubcriticalProblem(
            params=params,
            weight=weight,
            p=p,
            sphere=sphere,
            ball=ball,
            tol_v=tol_v,
            max_iter=max_iter,
            damping=damping,
            correction=correction,
            allow_critical=p <= params.p_crit,
            operator=op,
        )
        v, lam, report = maximize_subcritical(problem, v)
        stages.append(
            StageReport(
                p=p,
                lambda_est=lam,
                el_residual=report["el_residual"],
                sup_v=float(v.values.max()),
                inf_v=float(v.values.min()),
                iterations=report["iterations"],
                converged=report["converged"],
            )
        )
        profiles.append(v.values.copy())
        if len(stages) >= 2 and stages[-1].sup_v > blow_up_factor * stages[-2].sup_v:
            blow_up = True
        if report["step_failed"]:
            break
    threshold = lambda_threshold(weight, params, sharp) if sharp is not None else None
    return ContinuationReport(
        stages=stages,
        final_v=v,
        lambda_est=lam,
        blow_up_flag=blow_up,
        lambda_threshold=threshold,
        stage_profiles=profiles,
    )
