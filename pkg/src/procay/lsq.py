"""Small dense nonlinear least squares: Levenberg-Marquardt and a dogleg
trust-region driver, both recording the accepted iterates.

The residual function maps a parameter vector to a residual vector and may
raise :class:`~procay.errors.Infeasible` where it is undefined; such trial
points are treated as rejected steps. The cost is ``1/2 |f(v)|^2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import Infeasible

# LM damping above this means the step has collapsed to nothing
_MAX_DAMPING = 1e20


class Method(str, enum.Enum):
    LM = "lm"
    TRF = "trf"


class Termination(str, enum.Enum):
    COST_TOL = "CostTol"
    STEP_TOL = "StepTol"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class LsqConfig:
    """Solver settings.

    ``max_iterations`` bounds the number of trial steps (accepted or not).
    ``cost_tolerance`` is a relative cost decrease, ``step_tolerance`` a
    step norm relative to ``1 + |v|``. ``initial_damping`` only affects LM.
    """

    method: Method = Method.TRF
    max_iterations: int = 100
    cost_tolerance: float = 1e-12
    step_tolerance: float = 1e-10
    initial_damping: float = 1e-3
    jacobian_step: float = 1e-7

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("cost_tolerance", "step_tolerance", "initial_damping", "jacobian_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SolveTrace:
    """Accepted optimiser states ``(v, cost)`` of one run, start first."""

    states: tuple
    method: Method
    converged: bool
    termination: Termination
    evaluations: int = 0
    rejected: int = 0

    @property
    def iterations(self) -> int:
        return len(self.states) - 1

    @property
    def start(self) -> np.ndarray:
        return self.states[0][0]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1][0]

    @property
    def final_cost(self) -> float:
        return self.states[-1][1]


class LsqResult(NamedTuple):
    v: np.ndarray
    cost: float
    trace: SolveTrace


def numeric_jacobian(residual_fn, v, step=1e-7) -> np.ndarray:
    """Central-difference Jacobian, column ``j`` from ``v +/- step e_j``.

    Raises :class:`Infeasible` if any perturbed evaluation does.
    """
    v = np.asarray(v, dtype=float)
    cols = []
    for j in range(v.size):
        dv = np.zeros_like(v)
        dv[j] = step
        fp = np.asarray(residual_fn(v + dv), dtype=float)
        fm = np.asarray(residual_fn(v - dv), dtype=float)
        cols.append((fp - fm) / (2.0 * step))
    return np.column_stack(cols)


@dataclass
class _Run:
    fn: Callable
    jac: Callable
    config: LsqConfig
    states: list = field(default_factory=list)
    evaluations: int = 0
    rejected: int = 0
    trials: int = 0

    def evaluate(self, v):
        self.evaluations += 1
        r = np.asarray(self.fn(v), dtype=float)
        return r, 0.5 * float(r @ r)

    def accept(self, v, cost):
        self.states.append((v.copy(), cost))

    def finish(self, termination):
        trace = SolveTrace(
            states=tuple(self.states),
            method=self.config.method,
            converged=termination in (Termination.COST_TOL, Termination.STEP_TOL),
            termination=termination,
            evaluations=self.evaluations,
            rejected=self.rejected,
        )
        v, cost = self.states[-1]
        return LsqResult(v.copy(), cost, trace)

    def small_step(self, step, v):
        tol = self.config.step_tolerance
        return float(np.linalg.norm(step)) <= tol * (float(np.linalg.norm(v)) + tol)


def _solve_damped(JTJ, g, damping):
    scale = np.maximum(np.diag(JTJ), 1e-300)
    A = JTJ + damping * np.diag(scale)
    try:
        return np.linalg.solve(A, -g)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(A, -g, rcond=None)[0]


def _levenberg_marquardt(run: _Run, v, r, cost):
    cfg = run.config
    damping = cfg.initial_damping
    while True:
        try:
            J = run.jac(v)
        except Infeasible:
            return Termination.INFEASIBLE
        g = J.T @ r
        if cost == 0.0 or not np.any(g):
            return Termination.COST_TOL
        JTJ = J.T @ J
        while True:
            if run.trials >= cfg.max_iterations:
                return Termination.MAX_ITER
            step = _solve_damped(JTJ, g, damping)
            if run.small_step(step, v) or damping > _MAX_DAMPING:
                return Termination.STEP_TOL
            run.trials += 1
            v_new = v + step
            try:
                r_new, cost_new = run.evaluate(v_new)
            except Infeasible:
                cost_new = math.inf
            if cost_new < cost:
                damping /= 10.0
                decrease = cost - cost_new
                v, r, cost = v_new, r_new, cost_new
                run.accept(v, cost)
                if decrease <= cfg.cost_tolerance * (cost + decrease):
                    return Termination.COST_TOL
                break
            damping *= 10.0
            run.rejected += 1


def _dogleg(J, r, g, radius):
    gn = np.linalg.lstsq(J, -r, rcond=None)[0]
    if np.linalg.norm(gn) <= radius:
        return gn
    Jg = J @ g
    gg = float(g @ g)
    JgJg = float(Jg @ Jg)
    if JgJg == 0.0:
        return -radius * g / math.sqrt(gg)
    cauchy = -(gg / JgJg) * g
    nc = float(np.linalg.norm(cauchy))
    if nc >= radius:
        return cauchy * (radius / nc)
    # walk from the Cauchy point towards the Gauss-Newton point to the boundary
    d = gn - cauchy
    a = float(d @ d)
    b = 2.0 * float(cauchy @ d)
    c = nc * nc - radius * radius
    tau = (-b + math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    return cauchy + tau * d


def _trust_region(run: _Run, v, r, cost):
    cfg = run.config
    radius = None
    need_jac = True
    while True:
        if need_jac:
            try:
                J = run.jac(v)
            except Infeasible:
                return Termination.INFEASIBLE
            g = J.T @ r
            if cost == 0.0 or not np.any(g):
                return Termination.COST_TOL
            if radius is None:
                # first trial is the full Gauss-Newton step, so affine
                # problems finish in one accepted step
                gn = np.linalg.lstsq(J, -r, rcond=None)[0]
                radius = max(1.0, float(np.linalg.norm(v)), float(np.linalg.norm(gn)))
        if run.trials >= cfg.max_iterations:
            return Termination.MAX_ITER
        step = _dogleg(J, r, g, radius)
        if run.small_step(step, v):
            return Termination.STEP_TOL
        Js = J @ step
        predicted = -(float(g @ step) + 0.5 * float(Js @ Js))
        if predicted <= 0.0:
            return Termination.STEP_TOL
        run.trials += 1
        v_new = v + step
        try:
            r_new, cost_new = run.evaluate(v_new)
        except Infeasible:
            cost_new = math.inf
        ratio = (cost - cost_new) / predicted
        step_norm = float(np.linalg.norm(step))
        if ratio < 0.25:
            radius = 0.5 * min(radius, step_norm)
        elif ratio > 0.75:
            radius = max(radius, 2.0 * step_norm)
        if ratio > 0.0:
            decrease = cost - cost_new
            v, r, cost = v_new, r_new, cost_new
            run.accept(v, cost)
            need_jac = True
            if decrease <= cfg.cost_tolerance * (cost + decrease):
                return Termination.COST_TOL
        else:
            run.rejected += 1
            need_jac = False


def lsq_solve(
    residual_fn,
    v0,
    config: Optional[LsqConfig] = None,
    jacobian=None,
) -> LsqResult:
    """Minimise ``1/2 |residual_fn(v)|^2`` from ``v0``.

    Parameters
    ----------
    residual_fn : callable
        ``v -> residual vector``; may raise :class:`Infeasible`.
    v0 : array_like
        Start point. If ``residual_fn`` is infeasible there, the run ends
        immediately with termination ``Infeasible`` and cost ``inf``.
    config : LsqConfig, optional
    jacobian : callable, optional
        Analytic Jacobian ``v -> (m, k)``. Central differences otherwise.

    Returns
    -------
    LsqResult
        ``(v, cost, trace)``; ``trace.states`` holds every accepted iterate.
    """
    config = config or LsqConfig()
    v0 = np.array(v0, dtype=float).ravel()
    if jacobian is None:
        step = config.jacobian_step

        def jacobian(v):
            return numeric_jacobian(residual_fn, v, step)

    run = _Run(residual_fn, jacobian, config)
    try:
        r0, cost0 = run.evaluate(v0)
    except Infeasible:
        run.accept(v0, math.inf)
        return run.finish(Termination.INFEASIBLE)
    run.accept(v0, cost0)
    driver = _levenberg_marquardt if config.method is Method.LM else _trust_region
    termination = driver(run, v0, r0, cost0)
    return run.finish(termination)
