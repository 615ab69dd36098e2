"""Filter line-search interior-point method.

The driver solves a sequence of barrier subproblems with two-sided
logarithmic barriers on the bounded variables. Each iteration assembles the
condensed KKT system, solves it with the configured linear solver
(escalating the regularization until the curvature test passes), cuts the
step at the fraction-to-boundary limit and backtracks until the filter
accepts the trial point. When backtracking gives up, a restoration phase
minimizes constraint violation on an elastic reformulation.

Errors that end a solve are reported through :class:`SolveReport`, never
raised.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from graphipm.errors import (
    RegularizationExhausted,
    RestorationFailure,
    SingularMatrix,
    StepTooSmall,
    TrialPointFailure,
)
from graphipm.ipm.filter import Filter, alpha_min, filter_accept
from graphipm.ipm.options import IpmOptions
from graphipm.ipm.restoration import RestorationNLP
from graphipm.ipm.scaling import ScaledNLP, gradient_scaling
from graphipm.kkt import KktSystem, assemble, barrier_gradient, bound_masks, bound_slacks, recover_bound_step
from graphipm.linalg.solvers import DirectSolver, LinearSolverOptions, make_linear_solver
from graphipm.nlp import NlpProtocol, PrimalDualPoint

logger = logging.getLogger(__name__)

STATUSES = ("optimal", "max_iter", "restoration_failure", "trial_point_failure")

LOG_HEADER = "iter    objective        inf_pr   inf_du   mu       alpha_du alpha_pr ls lin_it delta_w"

RESTORATION_REDUCTION = 0.9


@dataclass
class Timings:
    total: float = 0.0
    function_evaluation: float = 0.0
    linear_solve: float = 0.0

    @property
    def other(self) -> float:
        return max(0.0, self.total - self.function_evaluation - self.linear_solve)

    def as_dict(self) -> dict[str, float]:
        return {
            "total": self.total,
            "function_evaluation": self.function_evaluation,
            "linear_solve": self.linear_solve,
            "other": self.other,
        }


@dataclass
class SolveReport:
    status: str
    iterations: int = 0
    objective: float = math.nan
    kkt_error: float = math.inf
    primal_infeasibility: float = math.inf
    dual_infeasibility: float = math.inf
    complementarity: float = math.inf
    mu: float = math.nan
    restorations: int = 0
    linear_iterations: int = 0
    overlap_adaptations: int = 0
    timings: Timings = field(default_factory=Timings)
    log_lines: list[str] = field(default_factory=list)
    message: str = ""

    @property
    def success(self) -> bool:
        return self.status == "optimal"

    def as_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "objective": self.objective,
            "kkt_error": self.kkt_error,
            "primal_infeasibility": self.primal_infeasibility,
            "dual_infeasibility": self.dual_infeasibility,
            "complementarity": self.complementarity,
            "restorations": self.restorations,
            "linear_iterations": self.linear_iterations,
            "overlap_adaptations": self.overlap_adaptations,
            "times": self.timings.as_dict(),
            "message": self.message,
        }


@dataclass
class IpmState:
    point: PrimalDualPoint
    mu: float
    tau: float
    filter: Filter
    theta_min: float
    theta_max: float
    delta_w: float = 0.0
    delta_c: float = 0.0
    iteration: int = 0
    alpha_pr: float = 0.0
    alpha_du: float = 0.0
    line_search_steps: int = 0
    linear_iterations: int = 0


@dataclass
class Step:
    dx: np.ndarray
    dlam: np.ndarray
    dz_lower: np.ndarray
    dz_upper: np.ndarray
    delta_w: float
    delta_c: float
    linear_iterations: int = 0
    adaptations: int = 0


class _TimedNLP:
    """Oracle proxy that charges evaluation time to ``timings``."""

    def __init__(self, nlp: NlpProtocol, timings: Timings):
        self.nlp = nlp
        self.timings = timings

    def __getattr__(self, name: str) -> Any:
        return getattr(self.nlp, name)

    def _timed(self, fn: Callable, *args):
        start = time.perf_counter()
        try:
            return fn(*args)
        finally:
            self.timings.function_evaluation += time.perf_counter() - start

    def objective(self, x):
        return self._timed(self.nlp.objective, x)

    def gradient(self, x):
        return self._timed(self.nlp.gradient, x)

    def constraints(self, x):
        return self._timed(self.nlp.constraints, x)

    def jacobian_values(self, x):
        return self._timed(self.nlp.jacobian_values, x)

    def hessian_values(self, x, lam, obj_factor: float = 1.0):
        return self._timed(self.nlp.hessian_values, x, lam, obj_factor)


# building blocks

def update_barrier(mu: float, tol: float = 1e-8, kappa_mu: float = 0.2, theta_mu: float = 1.5) -> float:
    """Next barrier parameter: ``max(tol/10, min(kappa_mu*mu, mu**theta_mu))``."""
    if mu <= 0:
        raise ValueError(f"Barrier parameter must be positive, got {mu}")
    return max(tol / 10.0, min(kappa_mu * mu, mu ** theta_mu))


def curvature_test(dx: np.ndarray, W, sigma: np.ndarray, delta_w: float, kappa: float = 1e-12) -> bool:
    """``dx^T (W + Sigma + delta_w I) dx >= kappa * dx^T dx``; vacuous for ``dx = 0``."""
    dx = np.asarray(dx, dtype=float)
    dd = float(dx @ dx)
    if dd == 0.0:
        return True
    q = float(dx @ (W @ dx)) + float(np.sum(sigma * dx * dx)) + delta_w * dd
    return q >= kappa * dd


def _passes_curvature(kkt: KktSystem, dx: np.ndarray, kappa: float) -> bool:
    dd = float(dx @ dx)
    return dd == 0.0 or kkt.primal_curvature(dx) >= kappa * dd


def fraction_to_boundary(nlp: NlpProtocol, point: PrimalDualPoint, dx: np.ndarray,
                         dz_lower: np.ndarray, dz_upper: np.ndarray, tau: float) -> tuple[float, float]:
    """Largest primal and dual steps in (0, 1] keeping a ``1 - tau`` share of every slack."""
    has_l, has_u = bound_masks(nlp)
    s_l, s_u = bound_slacks(nlp, point.x)

    def largest(value: np.ndarray, direction: np.ndarray, mask: np.ndarray) -> float:
        shrinking = mask & (direction < 0)
        if not np.any(shrinking):
            return 1.0
        return float(min(1.0, np.min(tau * value[shrinking] / -direction[shrinking])))

    alpha_pr = min(largest(s_l, dx, has_l), largest(s_u, -dx, has_u))
    alpha_du = min(largest(point.z_lower, dz_lower, has_l), largest(point.z_upper, dz_upper, has_u))
    return alpha_pr, alpha_du


def push_into_bounds(x: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                     kappa_1: float = 1e-2, kappa_2: float = 1e-2) -> np.ndarray:
    """Move a start point strictly inside its bounds."""
    x = np.array(x, dtype=float, copy=True)
    has_l, has_u = np.isfinite(lower), np.isfinite(upper)
    width = np.where(has_l & has_u, upper - lower, np.inf)
    p_l = np.minimum(kappa_1 * np.maximum(1.0, np.abs(np.where(has_l, lower, 0.0))), kappa_2 * width)
    p_u = np.minimum(kappa_1 * np.maximum(1.0, np.abs(np.where(has_u, upper, 0.0))), kappa_2 * width)
    x = np.where(has_l, np.maximum(x, lower + p_l), x)
    x = np.where(has_u, np.minimum(x, upper - p_u), x)
    return x


def _transpose_times(nlp: NlpProtocol, jac_values: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.zeros(nlp.n)
    if len(jac_values):
        np.add.at(out, nlp.jac_cols, jac_values * v[nlp.jac_rows])
    return out


def barrier_objective(nlp: NlpProtocol, x: np.ndarray, f: float, mu: float) -> float:
    has_l, has_u = bound_masks(nlp)
    s_l, s_u = bound_slacks(nlp, x)
    return f - mu * float(np.sum(np.log(s_l[has_l]))) - mu * float(np.sum(np.log(s_u[has_u])))


@dataclass
class OptimalityErrors:
    dual: float
    primal: float
    complementarity: float
    total: float


def optimality_errors(nlp: NlpProtocol, point: PrimalDualPoint, grad: np.ndarray, cons: np.ndarray,
                      jac_values: np.ndarray, mu: float, s_max: float = 100.0,
                      obj_scale: float = 1.0, con_scale: np.ndarray | None = None) -> OptimalityErrors:
    """Scaled optimality error of the barrier problem with parameter ``mu``.

    With ``obj_scale``/``con_scale`` the error is measured for the unscaled
    problem while the oracles belong to the scaled one.
    """
    has_l, has_u = bound_masks(nlp)
    s_l, s_u = bound_slacks(nlp, point.x)
    con_scale = np.ones(nlp.m) if con_scale is None else con_scale
    z_l = np.where(has_l, point.z_lower, 0.0) / obj_scale
    z_u = np.where(has_u, point.z_upper, 0.0) / obj_scale
    lam = point.lam * con_scale / obj_scale

    residual = (grad + _transpose_times(nlp, jac_values, point.lam)) / obj_scale \
        - np.where(has_l, point.z_lower, 0.0) / obj_scale + np.where(has_u, point.z_upper, 0.0) / obj_scale
    dual = float(np.max(np.abs(residual))) if residual.size else 0.0
    primal = float(np.max(np.abs(cons / con_scale))) if cons.size else 0.0
    comp_l = np.abs(s_l * z_l - mu)[has_l]
    comp_u = np.abs(s_u * z_u - mu)[has_u]
    comp = float(max(comp_l.max(initial=0.0), comp_u.max(initial=0.0)))

    n_bounds = int(has_l.sum() + has_u.sum())
    z_sum = float(np.sum(np.abs(z_l)) + np.sum(np.abs(z_u)))
    count = nlp.m + n_bounds
    s_d = max(s_max, (float(np.sum(np.abs(lam))) + z_sum) / count) / s_max if count else 1.0
    s_c = max(s_max, z_sum / n_bounds) / s_max if n_bounds else 1.0
    return OptimalityErrors(dual, primal, comp, max(dual / s_d, primal, comp / s_c))


def _format_line(iteration: int, tag: str, objective: float, inf_pr: float, inf_du: float, mu: float,
                 alpha_du: float, alpha_pr: float, ls: int, lin_it: int, delta_w: float) -> str:
    label = f"{iteration:4d}{tag}"
    return (f"{label} {objective:+.8e} {inf_pr:.2e} {inf_du:.2e} {mu:.2e} "
            f"{alpha_du:.2e} {alpha_pr:.2e} {ls:2d} {lin_it:4d} {delta_w:.1e}")


# the driver

class InteriorPoint:
    """One run of the interior-point loop on a (possibly scaled) NLP."""

    def __init__(self, nlp: NlpProtocol, options: IpmOptions, linear_solver,
                 timings: Timings | None = None, log_lines: list[str] | None = None,
                 tag: str = "", obj_scale: float = 1.0, con_scale: np.ndarray | None = None):
        self.raw = nlp
        self.timings = timings or Timings()
        self.nlp = _TimedNLP(nlp, self.timings)
        self.options = options
        self.linear_solver = linear_solver
        self.log_lines = log_lines if log_lines is not None else []
        self.tag = tag
        self.obj_scale = obj_scale
        self.con_scale = np.ones(nlp.m) if con_scale is None else con_scale
        self.restorations = 0
        self.adaptations = 0
        self.iterations = 0
        self.linear_iterations = 0
        self.errors: OptimalityErrors | None = None

    # oracle bundle at the current x
    def _evaluate(self, x: np.ndarray) -> dict[str, Any]:
        nlp = self.nlp
        return {
            "f": nlp.objective(x),
            "grad": nlp.gradient(x),
            "c": nlp.constraints(x),
            "jac": nlp.jacobian_values(x),
        }

    def _log(self, state: IpmState, values: dict[str, Any], errors: OptimalityErrors) -> None:
        line = _format_line(state.iteration, self.tag, values["f"] / self.obj_scale,
                            errors.primal, errors.dual, state.mu, state.alpha_du, state.alpha_pr,
                            state.line_search_steps, state.linear_iterations, state.delta_w)
        self.log_lines.append(line)
        logger.info(line)

    def initial_state(self, x0: np.ndarray, mu0: float, values: dict[str, Any]) -> IpmState:
        opts = self.options
        has_l, has_u = bound_masks(self.raw)
        s_l, s_u = bound_slacks(self.raw, x0)
        point = PrimalDualPoint(
            x=x0.copy(),
            lam=np.zeros(self.raw.m),
            z_lower=np.where(has_l, mu0 / s_l, 0.0),
            z_upper=np.where(has_u, mu0 / s_u, 0.0),
        )
        theta0 = float(np.sum(np.abs(values["c"])))
        theta_max = opts.theta_max_fact * max(1.0, theta0)
        return IpmState(
            point=point,
            mu=mu0,
            tau=max(opts.tau_min, 1.0 - mu0),
            filter=Filter(opts.gamma_theta, opts.gamma_phi, theta_max),
            theta_min=opts.theta_min_fact * max(1.0, theta0),
            theta_max=theta_max,
        )

    def run(self, x0: np.ndarray, mu0: float | None = None,
            stop_test: Callable[[np.ndarray], bool] | None = None) -> tuple[PrimalDualPoint, str, str]:
        """Iterate from ``x0``; returns the final point, a status and a message."""
        opts = self.options
        mu0 = opts.mu_init if mu0 is None else mu0
        try:
            values = self._evaluate(x0)
        except TrialPointFailure as e:
            return PrimalDualPoint(x0, np.zeros(self.raw.m), np.zeros(self.raw.n), np.zeros(self.raw.n)), \
                "trial_point_failure", f"Evaluation failed at the starting point: {e}"
        state = self.initial_state(x0, mu0, values)
        self.state = state

        while True:
            point = state.point
            errors = optimality_errors(self.raw, point, values["grad"], values["c"], values["jac"], 0.0,
                                       opts.s_max, self.obj_scale, self.con_scale)
            self.errors = errors
            self._log(state, values, errors)
            if errors.total <= opts.tol:
                return point, "optimal", "Optimal solution found"
            if stop_test is not None and state.iteration > 0 and stop_test(point.x):
                return point, "stopped", "Stop test satisfied"
            if state.iteration >= opts.max_iter:
                return point, "max_iter", f"Maximum number of iterations ({opts.max_iter}) reached"

            self._update_mu(state, values)

            try:
                hess = self.nlp.hessian_values(point.x, point.lam, 1.0)
                step = compute_step(state, self.nlp, self.linear_solver, opts, values, hess)
            except TrialPointFailure as e:
                return point, "trial_point_failure", f"Hessian evaluation failed: {e}"
            except RegularizationExhausted as e:
                logger.debug("Regularization exhausted: %s", e)
                step = None

            trial = None
            only_eval_failures = False
            if step is not None:
                self.linear_iterations += step.linear_iterations
                self.adaptations += step.adaptations
                state.delta_w, state.delta_c = step.delta_w, step.delta_c
                state.linear_iterations = step.linear_iterations
                try:
                    trial = self._line_search(state, values, step)
                except StepTooSmall as e:
                    logger.debug("%s", e)
                    only_eval_failures = e.evaluation_failures_only

            if trial is not None:
                x_new, f_new, c_new, alpha = trial
                _, alpha_du = fraction_to_boundary(self.raw, point, step.dx, step.dz_lower,
                                                   step.dz_upper, state.tau)
                new_point = PrimalDualPoint(
                    x=x_new,
                    lam=point.lam + alpha * step.dlam,
                    z_lower=point.z_lower + alpha_du * step.dz_lower,
                    z_upper=point.z_upper + alpha_du * step.dz_upper,
                )
                self._safeguard_multipliers(new_point, state.mu)
                state.point = new_point
                state.alpha_pr, state.alpha_du = alpha, alpha_du
                try:
                    values = {"f": f_new, "c": c_new, "grad": self.nlp.gradient(x_new),
                              "jac": self.nlp.jacobian_values(x_new)}
                except TrialPointFailure as e:
                    return state.point, "trial_point_failure", f"Derivative evaluation failed: {e}"
            else:
                if not opts.restoration:
                    status = "trial_point_failure" if only_eval_failures else "restoration_failure"
                    return point, status, "Line search failed and restoration is disabled"
                theta = float(np.sum(np.abs(values["c"])))
                phi = barrier_objective(self.raw, point.x, values["f"], state.mu)
                state.filter.add(theta, phi)
                try:
                    state = restoration(state, self.raw, opts, self.timings, self.log_lines, theta, phi)
                except RestorationFailure as e:
                    return point, "restoration_failure", str(e)
                except TrialPointFailure as e:
                    return point, "trial_point_failure", str(e)
                self.restorations += 1
                self.state = state
                state.alpha_pr = state.alpha_du = 0.0
                state.line_search_steps = 0
                try:
                    values = self._evaluate(state.point.x)
                except TrialPointFailure as e:
                    return state.point, "trial_point_failure", str(e)
            state.iteration += 1
            self.iterations = state.iteration

    def _update_mu(self, state: IpmState, values: dict[str, Any]) -> None:
        opts = self.options
        floor = opts.tol / 10.0
        while state.mu > floor:
            err = optimality_errors(self.raw, state.point, values["grad"], values["c"], values["jac"],
                                    state.mu, opts.s_max)
            if err.total > opts.kappa_eps * state.mu:
                break
            state.mu = update_barrier(state.mu, opts.tol, opts.kappa_mu, opts.theta_mu)
            state.tau = max(opts.tau_min, 1.0 - state.mu)
            state.filter.reset()

    def _safeguard_multipliers(self, point: PrimalDualPoint, mu: float) -> None:
        kappa = self.options.kappa_sigma
        has_l, has_u = bound_masks(self.raw)
        s_l, s_u = bound_slacks(self.raw, point.x)
        point.z_lower = np.where(has_l, np.clip(point.z_lower, mu / (kappa * s_l), kappa * mu / s_l), 0.0)
        point.z_upper = np.where(has_u, np.clip(point.z_upper, mu / (kappa * s_u), kappa * mu / s_u), 0.0)

    def _line_search(self, state: IpmState, values: dict[str, Any],
                     step: Step) -> tuple[np.ndarray, float, np.ndarray, float]:
        """Backtrack from the fraction-to-boundary step; returns ``(x, f, c, alpha)``."""
        opts = self.options
        point = state.point
        alpha_pr_max, _ = fraction_to_boundary(self.raw, point, step.dx, step.dz_lower, step.dz_upper, state.tau)
        theta = float(np.sum(np.abs(values["c"])))
        phi = barrier_objective(self.raw, point.x, values["f"], state.mu)
        grad_phi_dx = float(barrier_gradient(self.raw, point.x, values["grad"], state.mu) @ step.dx)
        a_min = alpha_min(grad_phi_dx, theta, state.theta_min, opts.gamma_theta, opts.gamma_phi,
                          opts.delta, opts.s_theta, opts.s_phi, opts.alpha_min_frac)
        alpha = alpha_pr_max
        state.line_search_steps = 0
        only_eval_failures = True
        while alpha >= a_min:
            x_trial = point.x + alpha * step.dx
            try:
                f_trial = self.nlp.objective(x_trial)
                c_trial = self.nlp.constraints(x_trial)
                phi_trial = barrier_objective(self.raw, x_trial, f_trial, state.mu)
                if not (math.isfinite(f_trial) and math.isfinite(phi_trial)):
                    raise TrialPointFailure("Non-finite objective at trial point")
            except TrialPointFailure:
                alpha *= 0.5
                state.line_search_steps += 1
                continue
            only_eval_failures = False
            theta_trial = float(np.sum(np.abs(c_trial)))
            accepted, armijo = filter_accept(
                state.filter, theta, phi, theta_trial, phi_trial, alpha, grad_phi_dx, state.theta_min,
                opts.eta_phi, opts.delta, opts.s_theta, opts.s_phi,
            )
            if accepted:
                if not armijo:
                    state.filter.add(theta, phi)
                return x_trial, f_trial, c_trial, alpha
            alpha *= 0.5
            state.line_search_steps += 1
        raise StepTooSmall(f"Step size fell below {a_min:.2e} after {state.line_search_steps} trials",
                           evaluation_failures_only=only_eval_failures)


def compute_step(state: IpmState, nlp: NlpProtocol, linear_solver, options: IpmOptions,
                 values: dict[str, Any], hess_values: np.ndarray) -> Step:
    """Regularized Newton step at the current iterate.

    The first trial is unregularized. A singular system adds ``delta_c``
    (then grows ``delta_w``); a failed curvature test grows ``delta_w`` to
    ``max(first, growth * delta_w, 2 * max(0, -rayleigh))`` where
    ``rayleigh`` is the curvature of the rejected direction.
    """
    point, mu = state.point, state.mu
    kkt0 = assemble(nlp, point, mu, 0.0, 0.0, values["grad"], values["c"], values["jac"], hess_values)
    n = nlp.n
    lin_tol = min(options.iterative_tol, options.iterative_mu_factor * mu)
    first_dw = options.delta_w_first * max(1.0, kkt0.hessian_inf_norm())
    dw, dc = 0.0, 0.0
    escalations = 0
    lin_it = adaptations = 0
    solve_seconds = 0.0
    timings = getattr(nlp, "timings", None)

    def escalate(rayleigh: float = 0.0) -> float:
        return max(first_dw, options.delta_w_growth * dw, 2.0 * max(0.0, -rayleigh))

    try:
        while True:
            kkt = kkt0 if dw == 0.0 and dc == 0.0 else kkt0.with_regularization(dw, dc)
            try:
                d, info = linear_solver.solve(kkt, lin_tol)
                lin_it += info.iterations
                adaptations += info.adaptations
                solve_seconds += info.seconds
            except SingularMatrix as e:
                logger.debug("Singular KKT system (dw=%.1e, dc=%.1e): %s", dw, dc, e)
                if dc == 0.0:
                    dc = options.delta_c_base * mu ** options.delta_c_exponent
                else:
                    dw = escalate()
                escalations += 1
            else:
                dx = d[:n]
                if _passes_curvature(kkt, dx, options.curvature_kappa):
                    dz_l, dz_u = recover_bound_step(nlp, point, dx, mu)
                    return Step(dx, d[n:], dz_l, dz_u, dw, dc, lin_it, adaptations)
                dd = float(dx @ dx)
                rayleigh = (kkt.primal_curvature(dx) - dw * dd) / dd
                dw = escalate(rayleigh)
                escalations += 1
                logger.debug("Curvature test failed, delta_w -> %.3e", dw)
            if escalations > options.max_regularizations:
                raise RegularizationExhausted(
                    f"No acceptable step after {options.max_regularizations} regularizations"
                )
    finally:
        if timings is not None:
            timings.linear_solve += solve_seconds


def restoration(state: IpmState, nlp: NlpProtocol, options: IpmOptions, timings: Timings | None = None,
                log_lines: list[str] | None = None, theta: float | None = None,
                phi: float | None = None) -> IpmState:
    """Restore feasibility from the current iterate.

    Solves the elastic problem with the direct solver and restoration
    disabled, stopping as soon as the original filter accepts the x part
    with enough reduction of the violation. Multipliers are re-centered
    (``lam = 0``, ``z = mu / slack``).
    """
    x_ref = state.point.x
    theta_ref = float(np.sum(np.abs(nlp.constraints(x_ref)))) if theta is None else theta
    if theta_ref == 0.0:
        return state
    rnlp = RestorationNLP(nlp, x_ref, state.mu, options.restoration_rho)
    mu_r = max(state.mu, float(np.max(np.abs(nlp.constraints(x_ref)))) if nlp.m else state.mu)
    inner_opts = options.updated(restoration=False, scaling=False, mu_init=mu_r,
                                 max_iter=options.restoration_max_iter)

    def acceptable(y: np.ndarray) -> bool:
        x = y[: nlp.n]
        try:
            theta_t = float(np.sum(np.abs(nlp.constraints(x))))
            phi_t = barrier_objective(nlp, x, nlp.objective(x), state.mu)
        except TrialPointFailure:
            return False
        if not math.isfinite(phi_t):
            return False
        return theta_t <= RESTORATION_REDUCTION * theta_ref and state.filter.acceptable(theta_t, phi_t)

    logger.debug("Entering restoration with violation %.3e", theta_ref)
    inner = InteriorPoint(rnlp, inner_opts, DirectSolver(), timings, log_lines, tag="r")
    y_start = rnlp.x_start
    result, status, message = inner.run(y_start, mu_r, stop_test=acceptable)
    if status != "stopped" and not (status == "optimal" and acceptable(result.x)):
        violation = rnlp.violation(result.x)
        raise RestorationFailure(
            f"Restoration could not reduce the constraint violation "
            f"(status {status}, violation {violation:.3e})"
        )
    x_new = result.x[: nlp.n]
    has_l, has_u = bound_masks(nlp)
    s_l, s_u = bound_slacks(nlp, x_new)
    state.point = PrimalDualPoint(
        x=x_new.copy(),
        lam=np.zeros(nlp.m),
        z_lower=np.where(has_l, state.mu / s_l, 0.0),
        z_upper=np.where(has_u, state.mu / s_u, 0.0),
    )
    state.iteration += inner.iterations
    logger.debug("Leaving restoration after %d iterations", inner.iterations)
    return state


def solve(nlp: NlpProtocol, options: IpmOptions | None = None,
          linear: LinearSolverOptions | None = None) -> tuple[PrimalDualPoint, SolveReport]:
    """Solve ``nlp`` with the filter line-search interior-point method.

    Args:
        nlp: Flat problem with exact first and second derivatives.
        options: Solver options; defaults when omitted.
        linear: Linear solver for the KKT systems; direct when omitted.

    Returns:
        The final primal-dual point and a report carrying the status,
        errors, timings and iteration log. Failures are reported through
        the status, not raised.
    """
    options = options or IpmOptions()
    linear = linear or LinearSolverOptions()
    started = time.perf_counter()
    timings = Timings()
    report = SolveReport(status="trial_point_failure", timings=timings)
    report.log_lines.append(LOG_HEADER)

    x0 = push_into_bounds(nlp.x_start, nlp.x_lower, nlp.x_upper, options.bound_push, options.bound_frac)
    work: NlpProtocol = nlp
    obj_scale, con_scale = 1.0, np.ones(nlp.m)
    try:
        if options.scaling:
            scaled = gradient_scaling(nlp, x0, options.scaling_gmax)
            work, obj_scale, con_scale = scaled, scaled.obj_scale, scaled.con_scale
    except TrialPointFailure as e:
        report.message = f"Evaluation failed at the starting point: {e}"
        timings.total = time.perf_counter() - started
        return PrimalDualPoint(x0, np.zeros(nlp.m), np.zeros(nlp.n), np.zeros(nlp.n)), report

    solver = make_linear_solver(linear, getattr(nlp, "U", None), getattr(nlp, "graph", None))
    ipm = InteriorPoint(work, options, solver, timings, report.log_lines,
                        obj_scale=obj_scale, con_scale=con_scale)
    point, status, message = ipm.run(x0)

    if isinstance(work, ScaledNLP):
        lam, z_l, z_u = work.unscale_multipliers(point.lam, point.z_lower, point.z_upper)
        point = PrimalDualPoint(point.x, lam, z_l, z_u)

    report.status = status
    report.message = message
    report.iterations = ipm.iterations
    report.restorations = ipm.restorations
    report.linear_iterations = ipm.linear_iterations
    report.overlap_adaptations = ipm.adaptations
    report.mu = ipm.state.mu if hasattr(ipm, "state") else options.mu_init
    if ipm.errors is not None:
        report.kkt_error = ipm.errors.total
        report.primal_infeasibility = ipm.errors.primal
        report.dual_infeasibility = ipm.errors.dual
        report.complementarity = ipm.errors.complementarity
    try:
        report.objective = float(nlp.objective(point.x))
    except TrialPointFailure:
        report.objective = math.nan
    timings.total = time.perf_counter() - started
    logger.info("Solve finished: %s after %d iterations (objective %.8e)",
                status, report.iterations, report.objective)
    return point, report
