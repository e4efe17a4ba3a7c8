"""Fully-implicit time integration of the (p_l, X) system.

Newton iteration on the coupled residual with a finite-difference Jacobian
assembled through stencil-aware coloring (3 colors in 1D, 5 in 2D, two
variables per cell), direct sparse linear solves, backtracking damping,
adaptive time-step control, and detection of the characteristic times
T1 (gas appearance), T2 (pressure peak), T3 (stationarity).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constitutive import capillary_pressure
from .discretization import FlowProblem, assemble_residual, flux_audit
from .errors import (
    LiquidDepletionError,
    NewtonConvergenceError,
    SingularJacobianError,
)
from .statevars import invert_saturation


def _pc0(problem):
    """Capillary entry pressure p_c(S_g = 0), cached on the problem."""
    val = getattr(problem, "_pc0_cache", None)
    if val is None:
        val = float(capillary_pressure(0.0, problem.medium))
        problem._pc0_cache = val
    return val

__all__ = [
    "NewtonOptions",
    "TimeStepControl",
    "RunSummary",
    "newton_solve",
    "linear_solve",
    "run_simulation",
]

GAS_DETECT_SG = 1e-9       # a cell counts as gassy above this saturation
STATIONARITY_FACTOR = 1e-6  # |dX/dt| threshold is this times max(X)/t_end
MAX_BACKTRACKS = 8
# When an unsaturated cell would cross the dissolution threshold, the whole
# update is damped so it lands only this far (relative) past the threshold;
# the blending function N grows like (X - threshold)^(1-1/n) with unbounded
# slope at the boundary, so an uncapped crossing step leaves the validity
# region of the flat-branch linearization and backtracking alone stalls.
CROSSING_MARGIN = 1e-3
# Bound on norm-increasing acceptances of chopped crossing steps per solve.
MAX_CROSSING_PROBES = 6


@dataclass
class NewtonOptions:
    """Convergence controls of the per-step Newton solve."""

    abs_tol: float = 1e-9    # on the scaled residual inf-norm
    rel_tol: float = 1e-10   # vs the residual at the initial guess
    max_iter: int = 12
    fd_eps: float = 1e-7     # relative Jacobian perturbation
    damping: float = 0.5     # backtracking factor
    u_scale: float = 1.0     # floor of the per-unknown perturbation scale

    def __post_init__(self):
        if min(self.abs_tol, self.rel_tol, self.fd_eps) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.damping < 1:
            raise ValueError("damping factor must lie in (0, 1)")


@dataclass
class TimeStepControl:
    """Adaptive step-size policy (seconds)."""

    dt_init: float
    dt_min: float
    dt_max: float
    grow_factor: float = 1.5
    cut_factor: float = 0.5
    target_newton_iters: int = 6

    def __post_init__(self):
        if not self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need dt_min <= dt_init <= dt_max")
        if not (self.grow_factor > 1.0 > self.cut_factor > 0.0):
            raise ValueError("need grow_factor > 1 > cut_factor > 0")


@dataclass
class RunSummary:
    """Characteristic times, time series and accounting of one simulation."""

    T1: float = None           # gas appearance time, s
    T2: float = None           # time of the global max liquid pressure, s
    T3: float = None           # stationarity time, s
    times: np.ndarray = None
    max_p_l: np.ndarray = None
    max_S_g: np.ndarray = None
    max_grad_p: np.ndarray = None      # max |dp_l/dn| over interior faces, Pa/m
    total_h2_mass: np.ndarray = None   # kg over the whole domain
    steps: int = 0
    newton_iters_total: int = 0
    mass_initial: float = 0.0          # normalized m^3 (std)
    mass_final: float = 0.0
    mass_injected: float = 0.0         # boundary inflow + sources, normalized
    mass_outflow: float = 0.0          # boundary outflow, normalized
    mass_balance_error: float = 0.0    # |final - initial - (in - out)|
    mass_balance_error_rel: float = 0.0


class _Coloring:
    """Distance-2 cell coloring and stencil row lists for colored FD."""

    def __init__(self, grid):
        nx, ny = grid.nx, grid.ny
        n = grid.ncells
        ix = np.arange(n) % nx
        iy = np.arange(n) // nx
        color = (ix % 3) if grid.dimension == 1 else (ix + 2 * iy) % 5
        ncolors = 3 if grid.dimension == 1 else 5

        nbrs = [np.arange(n)]
        for shift, ok in ((-1, ix > 0), (+1, ix < nx - 1)):
            nbrs.append(np.where(ok, np.arange(n) + shift, -1))
        if grid.dimension == 2:
            for shift, ok in ((-nx, iy > 0), (+nx, iy < ny - 1)):
                nbrs.append(np.where(ok, np.arange(n) + shift, -1))
        stencil = np.stack(nbrs, axis=1)  # (n, <=5), -1 marks absent

        self.groups = []
        for c in range(ncolors):
            cells = np.where(color == c)[0]
            if cells.size == 0:
                continue
            st = stencil[cells]
            owner = np.repeat(np.arange(cells.size), st.shape[1])
            flat = st.ravel()
            keep = flat >= 0
            touched = flat[keep]
            owner = owner[keep]
            rows = np.empty(2 * touched.size, dtype=int)
            rows[0::2] = 2 * touched
            rows[1::2] = 2 * touched + 1
            owner2 = np.repeat(owner, 2)
            self.groups.append((cells, rows, owner2))


def _coloring(grid):
    cache = getattr(grid, "_fd_coloring", None)
    if cache is None:
        cache = _Coloring(grid)
        grid._fd_coloring = cache
    return cache


def linear_solve(J, r):
    """Direct sparse solve J d = r with a residual check.

    Raises SingularJacobianError on a singular or unusably ill-conditioned
    factorization (distinct from Newton non-convergence).
    """
    J = sp.csc_matrix(J)
    try:
        lu = spla.splu(J)
        d = lu.solve(r)
    except RuntimeError as exc:
        raise SingularJacobianError(f"sparse factorization failed: {exc}") from exc
    if not np.all(np.isfinite(d)):
        raise SingularJacobianError("sparse solve produced non-finite values")
    rnorm = np.linalg.norm(r, ord=np.inf)
    if rnorm > 0.0:
        for _ in range(2):  # iterative refinement if the factorization was rough
            res = r - J @ d
            if np.linalg.norm(res, ord=np.inf) <= 1e-10 * rnorm:
                return d
            d = d + lu.solve(res)
        if np.linalg.norm(r - J @ d, ord=np.inf) > 1e-10 * rnorm:
            raise SingularJacobianError("linear solve residual above 1e-10*|r|")
    return d


def _interleave(p, X):
    u = np.empty(2 * p.size)
    u[0::2] = p
    u[1::2] = X
    return u


def newton_solve(problem: FlowProblem, p_old, X_old, dt,
                 opts: NewtonOptions = None, guess=None):
    """One implicit-Euler step: solve R(p, X) = 0 starting from the old state.

    Returns (p_new, X_new, iterations).  The residual rows are scaled to a
    per-step dimensionless form (the total-flow row additionally by 1/G so
    both equations are comparable); chi is frozen at the current iterate
    during Jacobian assembly (semi-smooth treatment of the branch kink).
    ``guess`` optionally seeds the iteration (e.g. a time extrapolation);
    the relative tolerance still refers to the old-state residual.
    """
    if opts is None:
        opts = NewtonOptions()
    consts = problem.consts
    grid = problem.grid
    n = grid.ncells

    sec_old = invert_saturation(p_old, X_old, consts, problem.medium)
    old_acc_tot = X_old - consts.G * sec_old.S_g

    phiV = problem.medium.phi * grid.cell_vol
    X_ref = max(consts.C_h * float(np.max(p_old)), float(np.max(X_old)))
    row_scale = np.empty(2 * n)
    row_scale[0::2] = dt / (phiV * X_ref * consts.G)
    row_scale[1::2] = dt / (phiV * X_ref)

    def residual(u, chi_override=None):
        return row_scale * assemble_residual(
            problem, u[0::2], u[1::2], old_acc_tot, X_old, dt,
            chi_override=chi_override)

    u = _interleave(np.asarray(p_old, dtype=float).copy(),
                    np.asarray(X_old, dtype=float).copy())
    r = residual(u)
    norm = np.linalg.norm(r, ord=np.inf)
    target = max(opts.abs_tol, opts.rel_tol * norm)
    if norm <= target:
        return u[0::2], u[1::2], 0

    if guess is not None:
        u_g = _interleave(np.asarray(guess[0], dtype=float).copy(),
                          np.asarray(guess[1], dtype=float).copy())
        u_g[1::2] = np.maximum(u_g[1::2], 0.0)
        if np.all(u_g[0::2] > 0.0):
            try:
                r_g = residual(u_g)
                u, r = u_g, r_g
                norm = np.linalg.norm(r, ord=np.inf)
                if norm <= target:
                    return u[0::2], u[1::2], 0
            except LiquidDepletionError:
                pass  # fall back to the old state as the starting point

    coloring = _coloring(grid)
    probes_left = MAX_CROSSING_PROBES
    for it in range(1, opts.max_iter + 1):
        chi_k = invert_saturation(u[0::2], u[1::2], consts, problem.medium).chi
        col_scale = np.maximum(np.abs(u), opts.u_scale)

        rows_all, cols_all, data_all = [], [], []
        for var in (0, 1):
            for cells, rows, owner in coloring.groups:
                idx = 2 * cells + var
                u_pert = u.copy()
                u_pert[idx] += opts.fd_eps * col_scale[idx]
                r_pert = residual(u_pert, chi_override=chi_k)
                # entries of J @ diag(col_scale): delta / fd_eps
                data_all.append((r_pert[rows] - r[rows]) / opts.fd_eps)
                rows_all.append(rows)
                cols_all.append(idx[owner])
        J_scaled = sp.coo_matrix(
            (np.concatenate(data_all),
             (np.concatenate(rows_all), np.concatenate(cols_all))),
            shape=(2 * n, 2 * n)).tocsc()

        y = linear_solve(J_scaled, -r)
        delta = col_scale * y

        def evaluate(u_try):
            if np.any(u_try[0::2] <= 0.0):
                return None
            try:
                r_try = residual(u_try)
            except LiquidDepletionError:
                return None
            return u_try, r_try, np.linalg.norm(r_try, ord=np.inf)

        # semi-smooth crossing chop: cells that would jump the dissolution
        # threshold land barely past it instead, so the next iteration
        # re-linearizes them on the saturated branch; the cusp of the
        # blending N at the threshold makes an uncapped crossing leave the
        # flat-branch linearization's validity region
        u_full = u + delta
        u_full[1::2] = np.maximum(u_full[1::2], 0.0)
        lim = consts.C_h * (u_full[0::2] + _pc0(problem)) * (1.0 + CROSSING_MARGIN)
        crossing = (~chi_k) & (u_full[1::2] > lim)
        chopped = None
        if np.any(crossing):
            u_chop = u_full.copy()
            u_chop[1::2] = np.where(crossing, lim, u_chop[1::2])
            chopped = evaluate(u_chop)

        accepted = None
        if chopped is not None and (chopped[2] < norm or chopped[2] <= target):
            accepted = chopped
        if accepted is None:
            alpha = 1.0
            for _ in range(MAX_BACKTRACKS + 1):
                u_try = u + alpha * delta
                u_try[1::2] = np.maximum(u_try[1::2], 0.0)
                res = evaluate(u_try)
                alpha *= opts.damping
                if res is None:
                    continue
                if res[2] < norm or res[2] <= target:
                    accepted = res
                    break
        if accepted is None and chopped is not None and probes_left > 0:
            # transient norm rise is unavoidable when a front of cells
            # crosses the threshold; accept the chopped step (bounded number
            # of times) and let subsequent iterations polish
            probes_left -= 1
            accepted = chopped
        if accepted is None:
            raise NewtonConvergenceError(
                f"line search stalled at iteration {it} (norm {norm:.3e})")
        u, r, norm = accepted
        if norm <= target:
            return u[0::2], u[1::2], it
    raise NewtonConvergenceError(
        f"no convergence in {opts.max_iter} iterations (norm {norm:.3e})")


def run_simulation(problem: FlowProblem, p0, X0, t_end, output_times=(),
                   newton: NewtonOptions = None, control: TimeStepControl = None):
    """March from t=0 to t_end with adaptive dt; record snapshots and series.

    Output times are hit exactly by truncating dt.  Returns
    (RunSummary, snapshots) where each snapshot is a dict with keys
    t, p_l, X, S_g.
    """
    if newton is None:
        newton = NewtonOptions()
    if control is None:
        control = TimeStepControl(dt_init=t_end / 1000.0,
                                  dt_min=t_end / 1e9, dt_max=t_end / 10.0)
    consts = problem.consts
    p = np.asarray(p0, dtype=float).copy()
    X = np.asarray(X0, dtype=float).copy()
    phiV = problem.medium.phi * problem.grid.cell_vol

    outputs = sorted(t for t in output_times if 0.0 < t <= t_end)
    snapshots = []

    def mass_norm(Xv):
        return float(np.sum(phiV * Xv))

    grid = problem.grid

    def max_grad(pv):
        if grid.face_L.size == 0:
            return 0.0
        return float(np.max(np.abs(pv[grid.face_R] - pv[grid.face_L])
                            / grid.face_dist))

    sec = invert_saturation(p, X, consts, problem.medium)
    times = [0.0]
    max_pl = [float(np.max(p))]
    max_sg = [float(np.max(sec.S_g))]
    grad_pl = [max_grad(p)]
    masses = [mass_norm(X)]

    summary = RunSummary()
    summary.mass_initial = masses[0]
    cum_net_out = 0.0   # signed boundary outflow, integrated
    cum_gross_in = 0.0  # entering boundary flux, integrated
    cum_src = 0.0       # volumetric sources, integrated

    t = 0.0
    dt_nominal = control.dt_init
    out_idx = 0
    eps_t = 1e-12 * t_end
    prev = None  # (p, X, dt) of the last accepted step, for extrapolation

    while t < t_end - eps_t:
        next_stop = t_end
        if out_idx < len(outputs):
            next_stop = min(next_stop, outputs[out_idx])
        dt_used = min(dt_nominal, next_stop - t)

        guess = None
        if prev is not None:
            w = dt_used / prev[2]
            guess = (p + w * (p - prev[0]), X + w * (X - prev[1]))
        try:
            p_new, X_new, iters = newton_solve(problem, p, X, dt_used, newton,
                                               guess=guess)
        except (NewtonConvergenceError, SingularJacobianError, LiquidDepletionError) as exc:
            if dt_nominal <= control.dt_min * (1.0 + 1e-12):
                raise type(exc)(f"step failed at dt_min={control.dt_min}: {exc}") from exc
            dt_nominal = max(dt_nominal * control.cut_factor, control.dt_min)
            continue

        t += dt_used
        sec = invert_saturation(p_new, X_new, consts, problem.medium)
        if np.any(sec.S_g >= problem.medium.sg_max):
            raise LiquidDepletionError(
                f"accepted state reached the gas saturation cap at t={t:.6e} s")

        net_out, gross_in, src_rate = flux_audit(problem, p_new, X_new)
        cum_net_out += net_out * dt_used
        cum_gross_in += gross_in * dt_used
        cum_src += src_rate * dt_used
        prev = (p, X, dt_used)

        summary.steps += 1
        summary.newton_iters_total += iters
        times.append(t)
        max_pl.append(float(np.max(p_new)))
        max_sg.append(float(np.max(sec.S_g)))
        grad_pl.append(max_grad(p_new))
        masses.append(mass_norm(X_new))

        if summary.T1 is None and max_sg[-1] > GAS_DETECT_SG:
            summary.T1 = t
        rate = float(np.max(np.abs(X_new - X))) / dt_used
        thresh = STATIONARITY_FACTOR * float(np.max(X_new)) / t_end
        if summary.T3 is None and rate <= thresh:
            summary.T3 = t

        p, X = p_new, X_new

        if out_idx < len(outputs) and abs(t - outputs[out_idx]) <= max(eps_t, 1e-9 * t):
            snapshots.append({"t": t, "p_l": p.copy(), "X": X.copy(),
                              "S_g": sec.S_g.copy()})
            out_idx += 1

        if iters <= control.target_newton_iters:
            dt_nominal = min(dt_nominal * control.grow_factor, control.dt_max)
        dt_nominal = max(dt_nominal, control.dt_min)

    summary.times = np.array(times)
    summary.max_p_l = np.array(max_pl)
    summary.max_S_g = np.array(max_sg)
    summary.max_grad_p = np.array(grad_pl)
    summary.total_h2_mass = np.array(masses) * problem.fluid.rho_g_std
    i2 = int(np.argmax(summary.max_p_l))
    summary.T2 = float(summary.times[i2])
    summary.mass_final = masses[-1]
    summary.mass_injected = cum_src + cum_gross_in
    summary.mass_outflow = cum_net_out + cum_gross_in  # gross boundary outflow
    # discrete balance: M_end - M_0 = integral of (sources - net outflow)
    summary.mass_balance_error = abs(
        summary.mass_final - summary.mass_initial - (cum_src - cum_net_out))
    summary.mass_balance_error_rel = (
        summary.mass_balance_error / max(summary.mass_injected, 1e-300))
    return summary, snapshots
