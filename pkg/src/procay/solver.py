"""Planar PnP by two antipodal Cayley-space least-squares runs.

The quadratic reconstruction form supplies the translation operator and the
two diagonal entries that pick the start; the optimiser then minimises the
projection residuals from that start and from its negation, and the run
with the lower final cost is kept.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._accel import thread_cap
from .errors import BothRunsInfeasible
from .lsq import LsqConfig, SolveTrace, Termination, lsq_solve
from .omega import OmegaForm, PlanarScene, build_omega
from .residuals import ErrorStats, Pose, error_stats, projection_jacobian, projection_residuals
from .rotations import cayley_to_matrix


class StartIndex(str, enum.Enum):
    E7 = "E7"
    E8 = "E8"


class Winner(str, enum.Enum):
    PRIMARY = "Primary"
    ANTIPODAL = "Antipodal"


# Nearest rotations to sqrt(3) e7 and sqrt(3) e8 and their antipodes, as
# Cayley vectors. They do not depend on the scene.
_STARTS = {
    StartIndex.E7: (np.array([0.0, -1.0, 0.0]), np.array([0.0, 1.0, 0.0])),
    StartIndex.E8: (np.array([1.0, 0.0, 0.0]), np.array([-1.0, 0.0, 0.0])),
}


def choose_start(omega77: float, omega88: float):
    """Start branch from two diagonal entries of Omega.

    Returns ``(start_index, v_start, v_anti)``; ``E7`` only when
    ``omega77 < omega88`` strictly, so ties go to ``E8``.
    """
    index = StartIndex.E7 if omega77 < omega88 else StartIndex.E8
    v, v_anti = _STARTS[index]
    return index, v.copy(), v_anti.copy()


@dataclass(frozen=True, eq=False)
class PnpSolution:
    pose: Pose
    cayley: np.ndarray
    projection_stats: ErrorStats
    winner: Winner
    traces: tuple  # (primary, antipodal)
    start_index: StartIndex
    omega77: float
    omega88: float

    @property
    def winning_trace(self) -> SolveTrace:
        return self.traces[0] if self.winner is Winner.PRIMARY else self.traces[1]

    @property
    def losing_trace(self) -> SolveTrace:
        return self.traces[1] if self.winner is Winner.PRIMARY else self.traces[0]


def _pick_winner(primary: SolveTrace, antipodal: SolveTrace) -> Winner:
    p_bad = primary.termination is Termination.INFEASIBLE
    a_bad = antipodal.termination is Termination.INFEASIBLE
    if p_bad and a_bad and primary.iterations == 0 and antipodal.iterations == 0:
        raise BothRunsInfeasible("both starts put board points behind the camera")
    if p_bad != a_bad:
        return Winner.ANTIPODAL if p_bad else Winner.PRIMARY
    # keep the primary run only if the antipodal cost is strictly larger
    if antipodal.final_cost > primary.final_cost:
        return Winner.PRIMARY
    return Winner.ANTIPODAL


def solve_pnp_procay78(
    scene: PlanarScene,
    config: Optional[LsqConfig] = None,
    *,
    analytic_jacobian: bool = True,
    form: Optional[OmegaForm] = None,
) -> PnpSolution:
    """Estimate the board-to-camera pose of a planar scene.

    Parameters
    ----------
    scene : PlanarScene
        Board points and normalised image points.
    config : LsqConfig, optional
        Optimiser settings; TRF by default.
    analytic_jacobian : bool
        Use the closed-form Jacobian of the projection residuals. With
        ``False`` central differences are used.
    form : OmegaForm, optional
        Precomputed form for ``scene``.

    Raises
    ------
    SingularNormal
        From :func:`build_omega`.
    BothRunsInfeasible
        If both start points leave some board point at non-positive depth.
    """
    config = config or LsqConfig()
    form = form or build_omega(scene)
    T = form.translation_op
    omega77 = float(form.omega[6, 6])
    omega88 = float(form.omega[7, 7])
    start_index, v0, v0_anti = choose_start(omega77, omega88)

    def fn(v):
        return projection_residuals(v, scene, T)

    jac = (lambda v: projection_jacobian(v, scene, T)) if analytic_jacobian else None

    def run(start):
        return lsq_solve(fn, start, config, jac)

    if thread_cap() > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            primary, antipodal = pool.map(run, (v0, v0_anti))
    else:
        primary, antipodal = run(v0), run(v0_anti)

    winner = _pick_winner(primary.trace, antipodal.trace)
    best = primary if winner is Winner.PRIMARY else antipodal
    v = best.v.copy()
    R = cayley_to_matrix(v)
    t = T @ R.ravel()
    stats = error_stats(fn(v))
    for arr in (v, R, t):
        arr.setflags(write=False)
    return PnpSolution(
        pose=Pose(R, t),
        cayley=v,
        projection_stats=stats,
        winner=winner,
        traces=(primary.trace, antipodal.trace),
        start_index=start_index,
        omega77=omega77,
        omega88=omega88,
    )
