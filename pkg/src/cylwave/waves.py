"""Selected-speed traveling waves: freezing + Newton solver, spectral gap,
secondary (stacked-front) speed, and translation-distance diagnostics.

The solver runs in two phases.  Phase 1 evolves the moving-frame equation
with an adaptive frame speed until the front freezes; phase 2 is Newton on
the coupled system {discrete wave equation = 0, weighted phase condition = 0}
with the speed as an extra unknown.  The profile is then translated so the
mid-level of the front sits at z = 0 and re-polished.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .evolve import EvolutionState, Stepper, dt_max, flow_weights
from .grids import (CrossSectionField, CylinderGrid, Field, WINDOW_MARGIN,
                    apply_boundary, axial_bands, axial_derivative,
                    transport_operator)
from .reactions import ReactionModel, ShiftedModel, eval_f, eval_f_u
from .sections import CriticalPoint, SectionSolverError, find_critical_point
from .weighted import WeightedMeasure

NEWTON_TOL = 1e-11
RESIDUAL_LIMIT = 1e-8


class WaveSolverError(RuntimeError):
    pass


class SeedBasinError(WaveSolverError):
    """Phase-1 evolution collapsed to an equilibrium instead of freezing."""


@dataclass
class WaveSolution:
    grid: CylinderGrid
    speed: float
    profile: Field
    profile_dz: np.ndarray          # centered d/dz of the profile
    residual: float                 # sup-norm of the discrete wave equation
    normalization_shift: float      # translation applied to center the front
    plateau: CrossSectionField      # left-edge cross-section state
    monotone: bool

    def measure(self, z_ref: float = 0.0) -> WeightedMeasure:
        return WeightedMeasure(self.speed, z_ref)


def front_seed(grid: CylinderGrid, plateau, offset: float = 0.0,
               steepness: float = 1.0) -> Field:
    """Front-like seed: plateau on the left decaying to zero on the right."""
    if np.isscalar(plateau):
        plat = np.full(grid.n_y, float(plateau))
    else:
        plat = np.asarray(plateau.values if hasattr(plateau, "values") else plateau, float)
    prof = 0.5 * (1.0 - np.tanh(steepness * (grid.z - offset)))
    return apply_boundary(Field(grid, plat[:, None] * prof[None, :]))


def front_position(u: Field, level_frac: float = 0.5) -> float:
    """Axial coordinate where the cross-section sup crosses level_frac of its max."""
    s = np.max(np.abs(u.values), axis=0)
    smax = float(s.max())
    if smax <= 0.0:
        raise SeedBasinError("state vanished; no front to locate")
    level = level_frac * smax
    below = np.nonzero(s < level)[0]
    if below.size == 0:
        raise SeedBasinError("state has no decaying edge inside the window")
    j = below[0]
    if j == 0:
        return float(u.grid.z[0])
    z = u.grid.z
    frac = (s[j - 1] - level) / max(s[j - 1] - s[j], 1e-300)
    return float(z[j - 1] + frac * u.grid.dz)


def _shift_cells(values: np.ndarray, k: int) -> np.ndarray:
    """Shift data k cells left (k > 0) or right (k < 0), constant/zero fill."""
    if k == 0:
        return values.copy()
    out = np.empty_like(values)
    if k > 0:
        out[:, :-k] = values[:, k:]
        out[:, -k:] = 0.0
    else:
        k = -k
        out[:, k:] = values[:, :-k]
        out[:, :k] = values[:, :1]
    return out


def _rewindow(state: EvolutionState, pos: float) -> tuple[EvolutionState, bool]:
    g = state.u.grid
    lo, hi = g.z_min + WINDOW_MARGIN, g.z_max - WINDOW_MARGIN
    if lo <= pos <= hi:
        return state, False
    center = 0.5 * (g.z_min + g.z_max)
    k = int(round((pos - center) / g.dz))
    vals = _shift_cells(state.u.values, k)
    return replace(state, u=apply_boundary(Field(g, vals)),
                   window_shift=state.window_shift + k), True


def freeze_frame(model: ReactionModel, grid: CylinderGrid, seed: Field,
                 c_seed: float, dt: float | None = None, tol: float | None = None,
                 max_steps: int = 40000, gain: float = 0.5) -> tuple[float, Field, int]:
    """Phase 1: adapt the frame speed until the tracked front stops drifting.

    The speed relaxes by ``c += gain * drift`` with the gain halved whenever
    the drift changes sign.  Returns (speed, frozen state, steps used).
    """
    if dt is None:
        dt = 0.4 * dt_max(model, grid)
    if tol is None:
        # on 2D grids the Newton phase (speed included among its unknowns)
        # carries the final tolerance; freezing only has to reach its basin
        tol = 1e-8 if grid.n_y == 1 else 1e-5
    c = max(float(c_seed), 1e-6)
    kappa = gain
    # refactorizing the 2D implicit operator is expensive; hold the speed for
    # a block of steps between updates there (1D rebuilds are free)
    min_hold = 1 if grid.n_y == 1 else 8
    stepper = Stepper(model, grid, dt, c)
    state = EvolutionState(0.0, apply_boundary(seed), c)
    plateau0 = float(np.max(state.u.values))
    pos_prev = front_position(state.u)
    drift_prev = None
    pending = 0.0
    held = 0
    for k in range(1, max_steps + 1):
        state = stepper.step(state)
        smax = float(np.max(state.u.values))
        if smax < 0.25 * plateau0:
            raise SeedBasinError("seed collapsed toward zero during freezing")
        if float(np.min(np.max(state.u.values, axis=0))) > 0.75 * plateau0:
            raise SeedBasinError("seed filled the window during freezing")
        pos = front_position(state.u)
        state, shifted = _rewindow(state, pos)
        if shifted:
            pos = front_position(state.u)
        drift = (pos - pos_prev) / dt if not shifted else 0.0
        pos_prev = pos
        if not shifted and abs(drift) < tol and k > 10:
            return c, state.u, k
        if drift_prev is not None and drift * drift_prev < 0:
            kappa = max(0.5 * kappa, 0.05)
        drift_prev = drift
        pending += kappa * drift / min_hold
        held += 1
        if held >= min_hold and abs(pending) > max(0.3 * abs(drift), 1e-13):
            c = max(c + pending, 1e-6)
            pending = 0.0
            held = 0
            state = replace(state, frame_speed=c)
            stepper = Stepper(model, grid, dt, c)
    raise WaveSolverError("front failed to freeze in %d steps (last drift %.3g)"
                          % (max_steps, drift))


def _wave_residual(model, grid, values, c):
    A = transport_operator(grid, c)
    r = (A @ values.ravel()).reshape(grid.shape) + eval_f(model, Field(grid, values)).values
    r[grid.dirichlet_mask()] = 0.0
    return r


def _newton_polish(model, grid, values, c, ref_values, max_iter=40,
                   tol=NEWTON_TOL):
    """Phase 2: Newton on (profile, speed) with a weighted phase condition.

    The phase condition pins the weighted projection of the update on the
    reference profile's axial derivative, anchored at the phase-1 speed.
    """
    pinned = grid.dirichlet_mask().ravel()
    ref_dz = axial_derivative(ref_values, grid).ravel()
    ref_dz[pinned] = 0.0
    w = flow_weights(grid, WeightedMeasure(max(c, 1e-6), z_ref=0.0)).ravel()
    p = w * ref_dz
    p /= float(p @ ref_dz)  # now p.(u - ref) has units of translation
    p[pinned] = 0.0

    u = values.ravel().copy()
    u[pinned] = 0.0
    ref = ref_values.ravel()
    hc = 1e-7 * (1.0 + abs(c))

    def residual(uv, cv):
        G = _wave_residual(model, grid, uv.reshape(grid.shape), cv).ravel()
        phase = float(p @ (uv - ref))
        return G, phase

    G, phase = residual(u, c)
    merit = max(float(np.max(np.abs(G))), abs(phase))
    for _ in range(max_iter):
        if merit <= tol:
            break
        fu = eval_f_u(model, Field(grid, u.reshape(grid.shape))).values.ravel()
        Gc = ((transport_operator(grid, c + hc) - transport_operator(grid, c - hc)) @ u) / (2 * hc)
        Gc[pinned] = 0.0
        try:
            if grid.n_y == 1:
                # Schur-complement bordering on the tridiagonal block; the
                # exactly evaluated residual governs convergence, so mild
                # near-null amplification in the block solves is harmless
                lower, diag, upper = axial_bands(grid, c)
                diag = diag + np.where(pinned, 1.0, fu)
                band = np.zeros((3, grid.n_z))
                band[0, 1:] = upper[:-1]
                band[1, :] = diag
                band[2, :-1] = lower[1:]
                s1 = solve_banded((1, 1), band, G)
                s2 = solve_banded((1, 1), band, Gc)
                dc = (phase - p @ s1) / (p @ s2)
                du = -s1 - dc * s2
            else:
                A = transport_operator(grid, c)
                # pinned rows of A are zero, so unit diagonal entries there
                # make identity rows enforcing the pinned values
                J = A + sp.diags(np.where(pinned, 1.0, fu))
                B = sp.bmat([[J, Gc[:, None]],
                             [sp.csr_matrix(p[None, :]), sp.csr_matrix((1, 1))]],
                            format="csc")
                sol = spla.splu(B).solve(np.concatenate([-G, [-phase]]))
                du, dc = sol[:-1], float(sol[-1])
        except (RuntimeError, np.linalg.LinAlgError) as exc:
            raise WaveSolverError("bordered Newton solve failed: %s" % exc)
        stepsize = 1.0
        for _ in range(10):
            u_try = u + stepsize * du
            c_try = c + stepsize * dc
            G_try, phase_try = residual(u_try, c_try)
            m_try = max(float(np.max(np.abs(G_try))), abs(phase_try))
            if m_try < merit or stepsize < 1e-4:
                break
            stepsize *= 0.5
        if m_try >= merit and merit > 100 * tol:
            raise WaveSolverError("Newton stalled at residual %.3g" % merit)
        u, c, G, phase, merit = u_try, c_try, G_try, phase_try, m_try
        if not np.isfinite(merit) or abs(c) > 1e3:
            raise WaveSolverError("Newton diverged")
    if merit > 100 * tol:
        raise WaveSolverError("Newton did not converge: residual %.3g" % merit)
    return u.reshape(grid.shape), c


def _mid_level_position(grid: CylinderGrid, values: np.ndarray) -> float:
    """z where the cross-section sup equals half its global maximum."""
    from scipy.interpolate import PchipInterpolator
    from scipy.optimize import brentq

    s = np.max(np.abs(values), axis=0)
    target = 0.5 * float(s.max())
    j = np.nonzero(s < target)[0]
    if j.size == 0 or j[0] == 0:
        raise WaveSolverError("profile has no mid-level crossing inside the window")
    interp = PchipInterpolator(grid.z, s - target)
    lo, hi = grid.z[j[0] - 1], grid.z[j[0]]
    return float(brentq(lambda z: float(interp(z)), lo, hi, xtol=1e-13))


def solve_wave(model: ReactionModel, grid: CylinderGrid, seed: Field,
               c_seed: float, dt: float | None = None,
               freeze_tol: float | None = None,
               max_freeze_steps: int = 40000) -> WaveSolution:
    """Compute the selected speed and the centered minimizing profile."""
    c1, frozen, _ = freeze_frame(model, grid, seed, c_seed, dt=dt,
                                 tol=freeze_tol, max_steps=max_freeze_steps)
    values, c = _newton_polish(model, grid, frozen.values, c1, frozen.values)

    total_shift = 0.0
    from .weighted import translate
    for _ in range(6):
        zmid = _mid_level_position(grid, values)
        if abs(zmid) < 1e-10:
            break
        shifted = translate(Field(grid, values), -zmid)
        total_shift += -zmid
        values, c = _newton_polish(model, grid, shifted.values, c, shifted.values)

    res = float(np.max(np.abs(_wave_residual(model, grid, values, c))))
    if res > RESIDUAL_LIMIT:
        raise WaveSolverError("wave residual %.3g exceeds %.1g" % (res, RESIDUAL_LIMIT))
    dvals = np.diff(values, axis=1)
    monotone = bool(np.all(dvals <= 1e-12))
    if not monotone:
        raise WaveSolverError("computed profile is not monotone along the axis")
    profile = Field(grid, values)
    return WaveSolution(
        grid=grid,
        speed=float(c),
        profile=profile,
        profile_dz=axial_derivative(values, grid),
        residual=res,
        normalization_shift=float(total_shift),
        plateau=CrossSectionField(grid, values[:, 0].copy()),
        monotone=monotone,
    )


def refine_solution(ws: WaveSolution, grid: CylinderGrid,
                    model: ReactionModel) -> WaveSolution:
    """Transfer a solved wave to a finer grid by Newton polish alone.

    The interpolated coarse profile is already in the Newton basin, so the
    expensive freezing phase is skipped; the same grid-refinement studies run
    in seconds.  The window must match; only resolutions may differ.
    """
    if (grid.z_min, grid.z_max, grid.y_min, grid.y_max) != (
            ws.grid.z_min, ws.grid.z_max, ws.grid.y_min, ws.grid.y_max):
        raise WaveSolverError("refinement grid must keep the same window")
    from scipy.interpolate import PchipInterpolator

    vals = PchipInterpolator(ws.grid.z, ws.profile.values, axis=1)(grid.z)
    if grid.n_y > 1:
        if ws.grid.n_y == 1:
            vals = np.tile(vals[:1], (grid.n_y, 1))
        else:
            vals = PchipInterpolator(ws.grid.y, vals, axis=0)(grid.y)
    vals = apply_boundary(Field(grid, vals)).values
    c = ws.speed
    values, c = _newton_polish(model, grid, vals, c, vals)
    total_shift = 0.0
    from .weighted import translate
    for _ in range(6):
        zmid = _mid_level_position(grid, values)
        if abs(zmid) < 1e-10:
            break
        shifted = translate(Field(grid, values), -zmid)
        total_shift += -zmid
        values, c = _newton_polish(model, grid, shifted.values, c, shifted.values)
    res = float(np.max(np.abs(_wave_residual(model, grid, values, c))))
    if res > RESIDUAL_LIMIT:
        raise WaveSolverError("refined residual %.3g exceeds %.1g" % (res, RESIDUAL_LIMIT))
    return WaveSolution(
        grid=grid,
        speed=float(c),
        profile=Field(grid, values),
        profile_dz=axial_derivative(values, grid),
        residual=res,
        normalization_shift=float(total_shift),
        plateau=CrossSectionField(grid, values[:, 0].copy()),
        monotone=bool(np.all(np.diff(values, axis=1) <= 1e-12)),
    )


# ---------------------------------------------------------------------------
# spectral gap of the linearization


@dataclass
class GapResult:
    zero_mode_value: float        # eigenvalue of the translational mode
    gap: float                    # smallest eigenvalue orthogonal to it
    alignment: float              # |cos| between that mode and profile_dz
    constraint_residual: float    # weighted projection of the gap mode on profile_dz
    residual_zero: float
    residual_gap: float
    scale: float                  # Gershgorin norm of the symmetrized operator
    gap_positive: bool
    iterations: int


def _inverse_iteration(Asym: sp.spmatrix, shift: float, deflate: np.ndarray | None,
                       max_iter: int = 1000):
    """Shifted inverse power iteration with optional rank-one deflation.

    Deflation shifts the unwanted direction up the spectrum (A + beta phi
    phi^T); the shifted solves stay sparse through Sherman-Morrison.  The
    shift is re-centered on the Rayleigh quotient while converging (for a
    symmetric operator the quotient lies within the residual of the target
    eigenvalue, so theta - 10 res stays safely below it).
    """
    n = Asym.shape[0]
    ident = sp.identity(n, format="csr")
    beta = 0.0 if deflate is None else 10.0 * float(np.max(np.abs(Asym).sum(axis=1)))

    def factor(sigma):
        lu = spla.splu((Asym - sigma * ident).tocsc())
        t = lu.solve(deflate) if deflate is not None else None
        return lu, t

    def solve(lu, t, rhs):
        s = lu.solve(rhs)
        if deflate is None:
            return s
        return s - t * ((deflate @ s) / (1.0 / beta + (deflate @ t)))

    def apply(x):
        y = Asym @ x
        if deflate is not None:
            y = y + beta * (deflate @ x) * deflate
        return y

    lu, t = factor(shift)
    rng = np.random.default_rng(12345)
    x = np.ones(n) + 1e-3 * rng.standard_normal(n)
    if deflate is not None:
        x -= (deflate @ x) * deflate
    x /= np.linalg.norm(x)
    res = np.inf
    theta = float(x @ apply(x))
    for it in range(1, max_iter + 1):
        x = solve(lu, t, x)
        x /= np.linalg.norm(x)
        ax = apply(x)
        theta = float(x @ ax)
        res = float(np.linalg.norm(ax - theta * x))
        if res <= 1e-9 * max(1.0, abs(theta)):
            break
        if it % 20 == 0:
            shift = theta - 10.0 * res
            lu, t = factor(shift)
    else:
        raise WaveSolverError("eigen iteration did not converge (residual %.3g)" % res)
    if deflate is not None:
        # report the exactly-constrained vector (projection changes the
        # eigenpair only at the deflation-leakage level)
        x = x - (deflate @ x) * deflate
        x /= np.linalg.norm(x)
        ax = Asym @ x
        theta = float(x @ ax)
        res = float(np.linalg.norm((ax - (deflate @ ax) * deflate) - theta * x))
    return theta, x, res, it


def spectral_gap(ws: WaveSolution, model: ReactionModel) -> GapResult:
    """Two smallest eigenvalues of the weighted linearization at the wave.

    The operator is symmetrized by the diagonal weight substitution
    (w = weight^{-1/2} phi), then the translational mode is located by
    inverse iteration and the rest of the spectrum by deflated iteration
    against the profile's axial derivative (weighted Gram-Schmidt).
    """
    grid = ws.grid
    free = ~grid.dirichlet_mask().ravel()
    A = transport_operator(grid, ws.speed)
    fu = eval_f_u(model, ws.profile).values.ravel()
    w = flow_weights(grid, ws.measure(z_ref=0.0)).ravel()

    L = (-(A + sp.diags(fu))).tocsr()[free][:, free]
    wf = w[free]
    S = sp.diags(wf) @ L
    d = 1.0 / np.sqrt(wf)
    Asym = sp.diags(d) @ S @ sp.diags(d)
    Asym = 0.5 * (Asym + Asym.T)
    scale = float(np.max(np.abs(Asym).sum(axis=1)))

    phiz = np.sqrt(wf) * ws.profile_dz.ravel()[free]
    phiz_hat = phiz / np.linalg.norm(phiz)

    shift = -0.2 * (1.0 + float(np.max(np.abs(fu))))
    lam0, v0, res0, it0 = _inverse_iteration(Asym, shift, None)
    align = float(abs(v0 @ phiz_hat))
    gap, vg, resg, itg = _inverse_iteration(Asym, shift, phiz_hat)
    constraint = float(abs(vg @ phiz_hat))
    return GapResult(
        zero_mode_value=lam0,
        gap=gap,
        alignment=align,
        constraint_residual=constraint,
        residual_zero=res0,
        residual_gap=resg,
        scale=scale,
        gap_positive=bool(gap > 0.0),
        iterations=it0 + itg,
    )


# ---------------------------------------------------------------------------
# secondary (stacked-front) speed


@dataclass
class SecondaryResult:
    applicable: bool
    note: str
    speed: float | None = None
    wave: Field | None = None
    upper_state: CrossSectionField | None = None


def secondary_speed(model: ReactionModel, grid: CylinderGrid, v: CriticalPoint,
                    c_seed: float = 0.05, dt: float | None = None,
                    max_freeze_steps: int = 40000) -> SecondaryResult:
    """Selected speed of a front invading the plateau v from above.

    Works on the shifted unknown h = u - v with the shifted reaction; returns
    "not applicable" when there is no room above v or no negative-energy upper
    state to launch from.
    """
    head = 1.0 - v.v.values
    if float(np.max(head)) < 1e-6:
        return SecondaryResult(False, "not applicable: no room above the plateau")
    # locate the next critical point above v with the base model (the shifted
    # problem has the same solution set translated by v)
    try:
        upper_full = find_critical_point(
            model, grid, CrossSectionField(grid, v.v.values + 0.95 * head))
    except SectionSolverError as exc:
        return SecondaryResult(False, "not applicable: upper-state solve failed (%s)" % exc)
    h_star = upper_full.v.values - v.v.values
    if float(np.max(h_star)) < 1e-3:
        return SecondaryResult(False, "not applicable: no nontrivial state above the plateau")
    if float(np.min(h_star)) < -1e-8:
        return SecondaryResult(False, "not applicable: nearest critical point is not above the plateau")
    if not upper_full.energy < v.energy:
        return SecondaryResult(
            False, "not applicable: upper state has nonnegative shifted energy %.3g"
            % (upper_full.energy - v.energy))
    shifted = ShiftedModel(base=model, v_values=tuple(v.v.values),
                           y_nodes=tuple(grid.y))
    upper = CrossSectionField(grid, np.maximum(h_star, 0.0))
    try:
        ws = solve_wave(shifted, grid, front_seed(grid, upper), c_seed,
                        dt=dt, max_freeze_steps=max_freeze_steps)
    except (WaveSolverError, SectionSolverError) as exc:
        return SecondaryResult(False, "not applicable: secondary wave solve failed (%s)" % exc)
    return SecondaryResult(True, "secondary wave found", speed=ws.speed,
                           wave=ws.profile, upper_state=upper)


# ---------------------------------------------------------------------------
# translation-distance diagnostics


@dataclass
class TranslationReport:
    radii: np.ndarray
    distances: np.ndarray
    ratio_lower: float            # min distance/|R| over 0 < |R| <= 1
    ratio_upper: float            # max distance/|R| over 0 < |R| <= 1
    small_shift_slope: float      # distance/|R| at the smallest sampled |R|
    dz_norm: float                # weighted norm of the discrete profile_dz
    monotone_in_abs_R: bool
    min_distance_outside: float   # smallest distance among |R| >= 1


def translation_profile(ws: WaveSolution, radii: np.ndarray | None = None) -> TranslationReport:
    """Sample ||T_R profile - profile|| and fit the linear-band constants."""
    from .weighted import translate, weighted_norm_l2

    if radii is None:
        radii = np.concatenate([np.linspace(-1.0, 1.0, 41), [-2.0, -1.5, 1.5, 2.0]])
    radii = np.asarray(sorted(radii))
    m = ws.measure(z_ref=0.0)
    dist = np.empty(radii.size)
    for i, r in enumerate(radii):
        if r == 0.0:
            dist[i] = 0.0
            continue
        diff = translate(ws.profile, float(r)).values - ws.profile.values
        dist[i] = weighted_norm_l2(Field(ws.grid, diff), m)

    inner = (np.abs(radii) > 0) & (np.abs(radii) <= 1.0)
    ratios = dist[inner] / np.abs(radii[inner])
    small = np.argmin(np.abs(np.where(radii == 0.0, np.inf, radii)))
    dzn = weighted_norm_l2(Field(ws.grid, ws.profile_dz), m)

    pos = radii > 0
    neg = radii < 0
    mono = bool(np.all(np.diff(dist[pos]) >= -1e-12) and
                np.all(np.diff(dist[neg][::-1]) >= -1e-12))
    outside = np.abs(radii) >= 1.0
    return TranslationReport(
        radii=radii,
        distances=dist,
        ratio_lower=float(ratios.min()),
        ratio_upper=float(ratios.max()),
        small_shift_slope=float(dist[small] / abs(radii[small])),
        dz_norm=float(dzn),
        monotone_in_abs_R=mono,
        min_distance_outside=float(dist[outside].min()) if outside.any() else float("nan"),
    )


# ---------------------------------------------------------------------------
# flat text serialization (decimal round-trip at 17 significant digits)


def save_solution(ws: WaveSolution, path) -> None:
    g = ws.grid
    lines = ["# cylwave wave solution v1"]
    lines.append("speed = %.17g" % ws.speed)
    lines.append("residual = %.17g" % ws.residual)
    lines.append("normalization_shift = %.17g" % ws.normalization_shift)
    lines.append("monotone = %s" % ("true" if ws.monotone else "false"))
    lines.append("n_y = %d" % g.n_y)
    lines.append("n_z = %d" % g.n_z)
    for k in ("y_min", "y_max", "z_min", "z_max"):
        lines.append("%s = %.17g" % (k, getattr(g, k)))
    for k in ("bc_left", "bc_right", "bc_axial_left", "bc_axial_right"):
        lines.append("%s = %s" % (k, getattr(g, k)))
    lines.append("plateau = " + " ".join("%.17g" % x for x in ws.plateau.values))
    lines.append("values:")
    for row in ws.profile.values:
        lines.append(" ".join("%.17g" % x for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_solution(path) -> WaveSolution:
    from .grids import GridConfig, build_grid

    head: dict[str, str] = {}
    rows: list[np.ndarray] = []
    in_values = False
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line == "values:":
                in_values = True
                continue
            if in_values:
                rows.append(np.array(line.split(), dtype=float))
            else:
                k, _, val = line.partition("=")
                head[k.strip()] = val.strip()
    grid = build_grid(GridConfig(
        n_y=int(head["n_y"]), n_z=int(head["n_z"]),
        y_min=float(head["y_min"]), y_max=float(head["y_max"]),
        z_min=float(head["z_min"]), z_max=float(head["z_max"]),
        bc_left=head["bc_left"], bc_right=head["bc_right"],
        bc_axial_left=head["bc_axial_left"], bc_axial_right=head["bc_axial_right"]))
    values = np.vstack(rows)
    profile = Field(grid, values)
    return WaveSolution(
        grid=grid,
        speed=float(head["speed"]),
        profile=profile,
        profile_dz=axial_derivative(values, grid),
        residual=float(head["residual"]),
        normalization_shift=float(head["normalization_shift"]),
        plateau=CrossSectionField(grid, np.array(head["plateau"].split(), dtype=float)),
        monotone=head["monotone"] == "true",
    )
