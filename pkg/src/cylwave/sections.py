"""Cross-section energy, its critical points, and principal eigenvalues.

The reduced energy ``E[v] = int (|v'|^2 / 2 + V(v, y)) dy`` lives on the
cross-section alone; its local minimizers are the plateaus axial fronts
connect to.  The principal eigenvalue of ``-d2/dy2 - f_u(v, y)`` at ``v = 0``
or at a critical point controls admissibility and non-degeneracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .grids import DIRICHLET, CrossSectionField, CylinderGrid
from .reactions import ReactionModel

NEWTON_GRAD_TOL = 1e-10
EIGEN_RESIDUAL_TOL = 1e-9


class SectionSolverError(RuntimeError):
    pass


def section_energy(v: CrossSectionField, model: ReactionModel) -> float:
    """Trapezoidal quadrature of |v'|^2/2 + V(v, y) over the cross-section."""
    g = v.grid
    y = g.y
    Vv = np.asarray(model.V(v.values, y), dtype=float)
    if g.n_y == 1:
        return float(Vv[0])
    w = g.section_weights()
    grad_sq = np.sum((np.diff(v.values) / g.dy) ** 2) * g.dy  # midpoint-exact for P1
    return float(0.5 * grad_sq + np.sum(w * Vv))


def _section_matrices(grid: CylinderGrid, potential: np.ndarray):
    """Stiffness+potential and lumped mass for -d2/dy2 + potential(y).

    Dirichlet ends are eliminated; returns (A, mass, free_index).
    """
    n = grid.n_y
    w = grid.section_weights()
    if n == 1:
        return np.array([[potential[0]]]), np.array([1.0]), np.array([0])
    dy = grid.dy
    main = np.full(n, 2.0 / dy)
    main[0] = main[-1] = 1.0 / dy
    off = np.full(n - 1, -1.0 / dy)
    K = np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
    A = K + np.diag(w * potential)
    free = np.arange(n)
    if grid.bc_left == DIRICHLET:
        free = free[1:]
    if grid.bc_right == DIRICHLET:
        free = free[:-1]
    return A[np.ix_(free, free)], w[free], free


@dataclass
class EigenResult:
    value: float
    eigenfunction: CrossSectionField
    iterations: int
    residual: float


def principal_eigenpair(model: ReactionModel, grid: CylinderGrid,
                        linearize_at: CrossSectionField | None = None,
                        max_iter: int = 200) -> EigenResult:
    """Smallest eigenvalue of ``-d2/dy2 - f_u(v, y)`` under the grid's tags.

    Inverse power iteration with a Gershgorin shift on the symmetrized
    (mass-scaled) pencil; returns the positive principal eigenfunction,
    normalized in the cross-section L2.
    """
    y = grid.y
    v = np.zeros_like(y) if linearize_at is None else linearize_at.values
    pot = -np.asarray(model.f_u(v, y), dtype=float)
    pot = np.broadcast_to(pot, y.shape)
    A, mass, free = _section_matrices(grid, pot)
    d = 1.0 / np.sqrt(mass)
    S = d[:, None] * A * d[None, :]  # symmetric standard form
    S = 0.5 * (S + S.T)

    # stiffness is PSD, so the spectrum sits above min(potential)
    shift = float(np.min(pot)) - 1.0
    lu, piv = sla.lu_factor(S - shift * np.eye(S.shape[0]))
    x = np.ones(S.shape[0])
    x /= np.linalg.norm(x)
    value = float(x @ S @ x)
    it = 0
    for it in range(1, max_iter + 1):
        x = sla.lu_solve((lu, piv), x)
        x /= np.linalg.norm(x)
        value = float(x @ S @ x)
        res = float(np.linalg.norm(S @ x - value * x))
        if res <= EIGEN_RESIDUAL_TOL * max(1.0, abs(value)):
            break
        if it % 20 == 0:
            # quotient sits within res of the target eigenvalue
            shift = value - 10.0 * res
            lu, piv = sla.lu_factor(S - shift * np.eye(S.shape[0]))
    else:
        raise SectionSolverError("eigen iteration did not converge in %d steps" % max_iter)

    if np.sum(x) < 0:
        x = -x
    full = np.zeros(grid.n_y)
    full[free] = d * x  # undo mass scaling
    # L2 normalization over the cross-section
    w = grid.section_weights()
    full /= np.sqrt(np.sum(w * full ** 2))
    if np.any(full[free] <= 0):
        raise SectionSolverError("principal eigenfunction changed sign")
    return EigenResult(value=value, eigenfunction=CrossSectionField(grid, full),
                       iterations=it, residual=res)


@dataclass
class CriticalPoint:
    v: CrossSectionField
    energy: float
    gradient_norm: float
    hessian_floor: float
    collapsed_to_trivial: bool = False


def _section_residual(model, grid, v):
    """Strong-form residual v'' + f(v, y) with the grid's end conventions."""
    y = grid.y
    fv = np.broadcast_to(np.asarray(model.f(v, y), dtype=float), v.shape)
    if grid.n_y == 1:
        return fv.copy()
    dy2 = grid.dy ** 2
    r = np.empty_like(v)
    r[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / dy2 + fv[1:-1]
    r[0] = (2 * v[1] - 2 * v[0]) / dy2 + fv[0] if grid.bc_left != DIRICHLET else 0.0
    r[-1] = (2 * v[-2] - 2 * v[-1]) / dy2 + fv[-1] if grid.bc_right != DIRICHLET else 0.0
    return r


def section_flow(model: ReactionModel, grid: CylinderGrid, v0: CrossSectionField,
                 tau: float, steps: int) -> list[CrossSectionField]:
    """Explicit gradient flow of the cross-section energy (fallback relaxer)."""
    out = [v0.copy()]
    v = v0.values.copy()
    for _ in range(steps):
        v = v + tau * _section_residual(model, grid, v)
        out.append(CrossSectionField(grid, v.copy()))
        v = out[-1].values
    return out


def find_critical_point(model: ReactionModel, grid: CylinderGrid,
                        seed: CrossSectionField, max_newton: int = 60) -> CriticalPoint:
    """Damped Newton on the discrete Euler-Lagrange system, flow fallback.

    Reports the energy and the smallest eigenvalue of the linearization at the
    solution (recomputed with principal_eigenpair so one tolerance governs all
    eigenvalues).
    """
    y = grid.y
    v = seed.values.copy()
    nontrivial_seed = float(np.max(np.abs(v))) > 1e-8

    def grad_norm(vv):
        return float(np.max(np.abs(_section_residual(model, grid, vv))))

    # relaxation sweeps pull rough seeds into the Newton basin
    tau = 0.2 * min(grid.dy ** 2 if grid.n_y > 1 else 1.0, 1.0) / max(1.0, model.max_slope(grid))
    for _ in range(3000):
        if grad_norm(v) < 1e-2:
            break
        v = v + tau * _section_residual(model, grid, v)
        v = CrossSectionField(grid, v).values

    converged = False
    for _ in range(max_newton):
        r = _section_residual(model, grid, v)
        gn = float(np.max(np.abs(r)))
        if gn <= NEWTON_GRAD_TOL:
            converged = True
            break
        fu = np.broadcast_to(np.asarray(model.f_u(v, y), dtype=float), v.shape)
        if grid.n_y == 1:
            J = np.array([[fu[0]]])
        else:
            dy2 = grid.dy ** 2
            J = np.zeros((grid.n_y, grid.n_y))
            for i in range(grid.n_y):
                J[i, i] = -2.0 / dy2 + fu[i]
                if i > 0:
                    J[i, i - 1] = 1.0 / dy2
                if i < grid.n_y - 1:
                    J[i, i + 1] = 1.0 / dy2
            if grid.bc_left == DIRICHLET:
                J[0, :] = 0.0
                J[0, 0] = 1.0
            else:
                J[0, 1] = 2.0 / dy2
            if grid.bc_right == DIRICHLET:
                J[-1, :] = 0.0
                J[-1, -1] = 1.0
            else:
                J[-1, -2] = 2.0 / dy2
        rhs = r.copy()
        if grid.n_y > 1:
            if grid.bc_left == DIRICHLET:
                rhs[0] = 0.0
            if grid.bc_right == DIRICHLET:
                rhs[-1] = 0.0
        try:
            dv = np.linalg.solve(J, -rhs)
        except np.linalg.LinAlgError:
            raise SectionSolverError("singular Jacobian in cross-section Newton")
        step = 1.0
        for _ in range(10):
            trial = CrossSectionField(grid, v + step * dv).values
            if grad_norm(trial) < gn or step < 1e-3:
                break
            step *= 0.5
        v = CrossSectionField(grid, v + step * dv).values
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > 10.0:
            raise SectionSolverError("cross-section Newton diverged")
    if not converged and grad_norm(v) > NEWTON_GRAD_TOL:
        raise SectionSolverError("cross-section Newton stalled at |grad| = %.3g" % grad_norm(v))

    sol = CrossSectionField(grid, v)
    collapsed = nontrivial_seed and float(np.max(np.abs(v))) < 1e-6
    eig = principal_eigenpair(model, grid, linearize_at=sol)
    return CriticalPoint(
        v=sol,
        energy=section_energy(sol, model),
        gradient_norm=grad_norm(v),
        hessian_floor=eig.value,
        collapsed_to_trivial=collapsed,
    )


@dataclass
class AdmissibilityReport:
    c_trial: float
    eigenvalue_at_zero: float
    discriminant_ok: bool       # c^2 + 4 nu > 0
    best_energy: float          # smallest weighted energy seen along the flow
    trial_norm: float           # L2_c norm of the field achieving it
    admissible: bool


def check_speed_admissible(model: ReactionModel, grid: CylinderGrid, c_trial: float,
                           budget_steps: int = 600) -> AdmissibilityReport:
    """Trial-speed admissibility: discriminant plus a weighted-flow search.

    Evolves a front-like seed in the frame moving at ``c_trial`` (that flow
    descends the weighted energy at this rate) for a fixed budget and records
    the smallest energy value encountered.  Report-only.
    """
    from .evolve import EvolutionState, Stepper, weighted_energy
    from .grids import Field
    from .weighted import WeightedMeasure, weighted_norm_l2

    if not c_trial > 0:
        raise ValueError("trial speed must be positive")
    nu = principal_eigenpair(model, grid).value
    disc_ok = bool(c_trial ** 2 + 4.0 * nu > 0.0)

    z = grid.z
    prof = 0.5 * (1.0 - np.tanh(z - 0.25 * (grid.z_min + grid.z_max)))
    u0 = Field(grid, np.tile(prof, (grid.n_y, 1)))
    m = WeightedMeasure(c_trial, z_ref=0.25 * (grid.z_min + grid.z_max))
    stepper = Stepper(model, grid, dt=0.4 / max(1.0, model.max_slope(grid)), frame_speed=c_trial)
    state = EvolutionState(t=0.0, u=u0, frame_speed=c_trial)
    best = weighted_energy(state.u, model, m)
    best_norm = weighted_norm_l2(state.u, m)
    for k in range(budget_steps):
        state = stepper.step(state)
        if k % 5 == 0 or k == budget_steps - 1:
            e = weighted_energy(state.u, model, m)
            if e < best:
                best = e
                best_norm = weighted_norm_l2(state.u, m)
    return AdmissibilityReport(
        c_trial=c_trial,
        eigenvalue_at_zero=nu,
        discriminant_ok=disc_ok,
        best_energy=best,
        trial_norm=best_norm,
        admissible=bool(disc_ok and best <= 0.0 and best_norm > 0.0),
    )
