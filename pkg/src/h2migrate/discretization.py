"""Structured-grid finite-volume assembly of the (p_l, X) system.

Two-point fluxes on uniform axis-aligned grids (identical to multi-point
schemes for K-orthogonal rectangles), phase-potential upwinding of the
mobility-bearing coefficient parts, arithmetic face averages of the
diffusive parts, harmonic permeability, implicit-Euler accumulation.
Residual ordering is interleaved: rows (2i, 2i+1) hold the total-flow and
hydrogen equations of cell i, matching unknowns (p_l_i, X_i).
"""

from dataclasses import dataclass, field

import numpy as np

from .constitutive import DerivedConstants, FluidParams, MediumParams
from .coefficients import flux_term_groups
from .statevars import invert_saturation

__all__ = [
    "StructuredGrid",
    "Impervious",
    "InflowGas",
    "OutflowDirichlet",
    "BoundarySpec",
    "SourceField",
    "FlowProblem",
    "face_flux",
    "assemble_residual",
    "flux_audit",
]


@dataclass
class StructuredGrid:
    """Uniform structured grid, 1D or 2D, cells indexed row-major (x fastest).

    In 1D, ``dy`` is the transverse extent of the strip: cell volumes are
    dx*dy (unit thickness) and x-face areas dy, so a 1D run and a
    y-invariant 2D run of the same strip carry identical fluxes.
    """

    dimension: int
    nx: int
    ny: int
    dx: float
    dy: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.dimension == 1 and self.ny != 1:
            raise ValueError("1D grid requires ny == 1")
        if self.nx < 1 or self.ny < 1 or self.dx <= 0 or self.dy <= 0:
            raise ValueError("grid extents must be positive")
        self.ncells = self.nx * self.ny
        ix = np.arange(self.ncells) % self.nx
        iy = np.arange(self.ncells) // self.nx
        self.cell_x = self.x0 + (ix + 0.5) * self.dx
        self.cell_y = self.y0 + (iy + 0.5) * self.dy
        self.cell_vol = np.full(self.ncells, self.dx * self.dy)
        self._build_faces()

    @classmethod
    def make_1d(cls, x0, x1, nx, height=1.0):
        return cls(dimension=1, nx=nx, ny=1, dx=(x1 - x0) / nx, dy=height, x0=x0)

    @classmethod
    def make_2d(cls, x0, x1, y0, y1, nx, ny):
        return cls(dimension=2, nx=nx, ny=ny,
                   dx=(x1 - x0) / nx, dy=(y1 - y0) / ny, x0=x0, y0=y0)

    def _build_faces(self):
        nx, ny = self.nx, self.ny
        L, R, area, dist, axis = [], [], [], [], []
        # x-faces, normal +x
        if nx > 1:
            iy = np.repeat(np.arange(ny), nx - 1)
            ix = np.tile(np.arange(nx - 1), ny)
            lf = iy * nx + ix
            L.append(lf)
            R.append(lf + 1)
            area.append(np.full(lf.size, self.dy))
            dist.append(np.full(lf.size, self.dx))
            axis.append(np.zeros(lf.size, dtype=int))
        # y-faces, normal +y
        if self.dimension == 2 and ny > 1:
            iy = np.repeat(np.arange(ny - 1), nx)
            ix = np.tile(np.arange(nx), ny - 1)
            lf = iy * nx + ix
            L.append(lf)
            R.append(lf + nx)
            area.append(np.full(lf.size, self.dx))
            dist.append(np.full(lf.size, self.dy))
            axis.append(np.ones(lf.size, dtype=int))
        cat = (lambda parts, dtype=float:
               np.concatenate(parts) if parts else np.empty(0, dtype=dtype))
        self.face_L = cat(L, int).astype(int)
        self.face_R = cat(R, int).astype(int)
        self.face_area = cat(area)
        self.face_dist = cat(dist)
        self.face_axis = cat(axis, int).astype(int)

        # boundary faces per side: (cells, area, half-distance, axis, sign)
        self.sides = {}
        self.sides["left"] = (np.arange(ny) * nx, self.dy, 0.5 * self.dx, 0, -1)
        self.sides["right"] = (np.arange(ny) * nx + nx - 1, self.dy, 0.5 * self.dx, 0, +1)
        if self.dimension == 2:
            self.sides["bottom"] = (np.arange(nx), self.dx, 0.5 * self.dy, 1, -1)
            self.sides["top"] = ((ny - 1) * nx + np.arange(nx), self.dx, 0.5 * self.dy, 1, +1)

    def linecut_cells(self):
        """Cells along the horizontal mid-line (y closest to the strip center)."""
        iy = self.ny // 2 if self.dimension == 2 else 0
        return iy * self.nx + np.arange(self.nx)


@dataclass(frozen=True)
class Impervious:
    """No flow of either component through the face."""


@dataclass(frozen=True)
class InflowGas:
    """Pure gas injection at a normalized volumetric rate (m/s); the water
    flux through the face is zero, so total flux equals hydrogen flux."""

    q_norm: float


@dataclass(frozen=True)
class OutflowDirichlet:
    """Dirichlet values held at the boundary face (ghost at half-cell)."""

    p_l_out: float
    X_out: float


@dataclass
class BoundarySpec:
    """One condition per grid side; every side must be assigned."""

    conditions: dict

    def __post_init__(self):
        for side, cond in self.conditions.items():
            if not isinstance(cond, (Impervious, InflowGas, OutflowDirichlet)):
                raise ValueError(f"unknown boundary condition on side {side!r}")

    def validate(self, grid: StructuredGrid):
        missing = set(grid.sides) - set(self.conditions)
        if missing:
            raise ValueError(f"boundary sides lack a condition: {sorted(missing)}")


@dataclass
class SourceField:
    """Per-cell normalized source rates F_w/rho_l_std and F_h/rho_g_std (1/s)."""

    f_w_norm: np.ndarray
    f_h_norm: np.ndarray

    def __post_init__(self):
        if not (np.all(np.isfinite(self.f_w_norm))
                and np.all(np.isfinite(self.f_h_norm))):
            raise ValueError("source rates must be finite")

    @classmethod
    def zeros(cls, ncells):
        return cls(np.zeros(ncells), np.zeros(ncells))


@dataclass
class FlowProblem:
    """Grid, boundary conditions, sources and material parameters of one run."""

    grid: StructuredGrid
    bc: BoundarySpec
    sources: SourceField
    medium: MediumParams
    fluid: FluidParams
    consts: DerivedConstants
    use_printed_krl: bool = False
    k_cells: np.ndarray = None  # optional heterogeneous permeability

    def __post_init__(self):
        self.bc.validate(self.grid)
        if self.k_cells is None:
            self.k_cells = np.full(self.grid.ncells, self.medium.k)

    def g_component(self, axis):
        g = self.fluid.g_vec
        return g[axis] if axis < len(g) else 0.0


def _face_coeff_fluxes(tg_L, tg_R, p_L, p_R, X_L, X_R, pg_L, pg_R,
                       k_L, k_R, dist, area, gn, G):
    """TPFA fluxes (q_tot*A, q_h*A) through faces with states L and R.

    Mobility-bearing coefficient parts are taken from the phase-potential
    upwind side, diffusive parts are arithmetic face means, permeability
    is the harmonic face mean.
    """
    k_f = 2.0 * k_L * k_R / (k_L + k_R)
    dp = p_R - p_L
    dX = X_R - X_L

    rho_l_f = 0.5 * (tg_L.rho_l + tg_R.rho_l)
    rho_g_f = 0.5 * (tg_L.rho_g + tg_R.rho_g)
    pot_l = -dp + rho_l_f * gn * dist
    pot_g = -(pg_R - pg_L) + rho_g_f * gn * dist
    up_l = pot_l >= 0.0   # True: donor is L
    up_g = pot_g >= 0.0

    def pick(field_L, field_R, donor_L):
        return np.where(donor_L, field_L, field_R)

    adv_l_h = pick(tg_L.adv_l_h, tg_R.adv_l_h, up_l)
    adv_l_tot = pick(G * tg_L.adv_l_w + tg_L.adv_l_h,
                     G * tg_R.adv_l_w + tg_R.adv_l_h, up_l)
    adv_l_h_rho = pick(tg_L.adv_l_h_rho, tg_R.adv_l_h_rho, up_l)
    adv_l_tot_rho = pick(G * tg_L.adv_l_w_rho + tg_L.adv_l_h_rho,
                         G * tg_R.adv_l_w_rho + tg_R.adv_l_h_rho, up_l)
    adv_g_h_p = pick(tg_L.adv_g_h_p, tg_R.adv_g_h_p, up_g)
    adv_g_h_X = pick(tg_L.adv_g_h_X, tg_R.adv_g_h_X, up_g)
    adv_g_rho = pick(tg_L.adv_g_rho, tg_R.adv_g_rho, up_g)

    diff_p = 0.5 * (tg_L.diff_p + tg_R.diff_p)
    diff_X = 0.5 * (tg_L.diff_X + tg_R.diff_X)

    A21_f = k_f * (adv_l_h + adv_g_h_p) + diff_p
    A22_f = k_f * adv_g_h_X + diff_X
    A11_f = k_f * (adv_l_tot + adv_g_h_p)
    A12_f = k_f * adv_g_h_X
    b2_f = -k_f * (adv_l_h_rho + adv_g_rho)
    b1_f = -k_f * (adv_l_tot_rho + adv_g_rho)

    q_h = -(A21_f * dp / dist + A22_f * dX / dist + b2_f * gn) * area
    q_tot = -(A11_f * dp / dist + A12_f * dX / dist + b1_f * gn) * area
    return q_tot, q_h


class _GroupView:
    """Index view over FluxTermGroups arrays (keeps _face_coeff_fluxes generic)."""

    _FIELDS = ("adv_l_w", "adv_l_h", "adv_l_w_rho", "adv_l_h_rho",
               "adv_g_h_p", "adv_g_h_X", "adv_g_rho", "diff_p", "diff_X",
               "rho_l", "rho_g")

    def __init__(self, tg, idx):
        for name in self._FIELDS:
            setattr(self, name, np.asarray(getattr(tg, name))[idx])


def face_flux(problem: FlowProblem, p, X, left, right, dist, area, gn=0.0,
              sec=None):
    """Normalized (q_tot*A, q_h*A) through faces joining cells ``left`` and
    ``right`` with normal pointing left-to-right.

    Convenience wrapper over the vectorized face kernel; ``sec`` may carry a
    precomputed SecondaryState for all cells.
    """
    p = np.asarray(p, dtype=float)
    X = np.asarray(X, dtype=float)
    if sec is None:
        sec = invert_saturation(p, X, problem.consts, problem.medium)
    tg = flux_term_groups(sec, problem.medium, problem.fluid, problem.consts,
                          problem.use_printed_krl)
    left = np.atleast_1d(left)
    right = np.atleast_1d(right)
    return _face_coeff_fluxes(
        _GroupView(tg, left), _GroupView(tg, right),
        p[left], p[right], X[left], X[right], sec.p_g[left], sec.p_g[right],
        problem.k_cells[left], problem.k_cells[right],
        np.asarray(dist, dtype=float), np.asarray(area, dtype=float),
        np.asarray(gn, dtype=float), problem.consts.G)


def _boundary_states(problem, cond):
    """Secondary state and term groups of a Dirichlet boundary value.

    Boundary values are constants of the problem, so the result is cached.
    """
    cache = getattr(problem, "_bstate_cache", None)
    if cache is None:
        cache = problem._bstate_cache = {}
    key = (cond.p_l_out, cond.X_out)
    hit = cache.get(key)
    if hit is None:
        pb = np.array([cond.p_l_out], dtype=float)
        Xb = np.array([cond.X_out], dtype=float)
        sec = invert_saturation(pb, Xb, problem.consts, problem.medium)
        tg = flux_term_groups(sec, problem.medium, problem.fluid,
                              problem.consts, problem.use_printed_krl)
        hit = cache[key] = (pb, Xb, sec, tg)
    return hit


def assemble_residual(problem: FlowProblem, p, X, old_acc_tot, old_X, dt,
                      chi_override=None, sec=None):
    """Implicit-Euler residual, two interleaved rows per cell.

    ``old_acc_tot`` is (X - G*S_g) at the previous time level, ``old_X`` the
    previous X.  All fluxes are evaluated at the new state (fully implicit).
    Returns the raw residual in normalized volumetric units (m^3/s).
    """
    grid = problem.grid
    consts = problem.consts
    G = consts.G
    n = grid.ncells
    p = np.asarray(p, dtype=float)
    X = np.asarray(X, dtype=float)

    if sec is None:
        sec = invert_saturation(p, X, consts, problem.medium,
                                chi_override=chi_override)
    tg = flux_term_groups(sec, problem.medium, problem.fluid, consts,
                          problem.use_printed_krl)

    phiV = problem.medium.phi * grid.cell_vol
    R_tot = phiV * ((X - G * sec.S_g) - old_acc_tot) / dt
    R_h = phiV * (X - old_X) / dt

    # interior faces
    if grid.face_L.size:
        L, Rt = grid.face_L, grid.face_R
        gn = np.array([problem.g_component(a) for a in (0, 1)])[grid.face_axis]
        q_tot, q_h = _face_coeff_fluxes(
            _GroupView(tg, L), _GroupView(tg, Rt),
            p[L], p[Rt], X[L], X[Rt], sec.p_g[L], sec.p_g[Rt],
            problem.k_cells[L], problem.k_cells[Rt],
            grid.face_dist, grid.face_area, gn, G)
        R_tot += np.bincount(L, weights=q_tot, minlength=n)
        R_tot -= np.bincount(Rt, weights=q_tot, minlength=n)
        R_h += np.bincount(L, weights=q_h, minlength=n)
        R_h -= np.bincount(Rt, weights=q_h, minlength=n)

    # boundary faces
    for side, (cells, area, half, axis, sign) in grid.sides.items():
        cond = problem.bc.conditions[side]
        if isinstance(cond, Impervious):
            continue
        if isinstance(cond, InflowGas):
            influx = cond.q_norm * area
            R_tot[cells] -= influx
            R_h[cells] -= influx
            continue
        # Dirichlet ghost at half-cell distance, outward normal
        pb, Xb, sec_b, tg_b = _boundary_states(problem, cond)
        gn = problem.g_component(axis) * sign
        nb = cells.size
        rep = np.zeros(nb, dtype=int)
        q_tot, q_h = _face_coeff_fluxes(
            _GroupView(tg, cells), _GroupView(tg_b, rep),
            p[cells], pb[rep], X[cells], Xb[rep],
            sec.p_g[cells], sec_b.p_g[rep],
            problem.k_cells[cells], problem.k_cells[cells],
            np.full(nb, half), np.full(nb, area), gn, G)
        R_tot[cells] += q_tot
        R_h[cells] += q_h

    # sources (normalized)
    V = grid.cell_vol
    R_tot -= V * (G * problem.sources.f_w_norm + problem.sources.f_h_norm)
    R_h -= V * problem.sources.f_h_norm

    out = np.empty(2 * n)
    out[0::2] = R_tot
    out[1::2] = R_h
    return out


def flux_audit(problem: FlowProblem, p, X):
    """Boundary and source totals of the hydrogen equation at one state.

    Returns (net_outflux, gross_influx, source_total) in normalized m^3/s,
    where net_outflux sums signed outward hydrogen fluxes over all boundary
    faces and gross_influx only their entering parts; interior fluxes
    telescope away, so these totals close the discrete mass balance.
    """
    grid = problem.grid
    sec = invert_saturation(p, X, problem.consts, problem.medium)
    tg = flux_term_groups(sec, problem.medium, problem.fluid, problem.consts,
                          problem.use_printed_krl)
    net_out = 0.0
    gross_in = 0.0
    for side, (cells, area, half, axis, sign) in grid.sides.items():
        cond = problem.bc.conditions[side]
        if isinstance(cond, Impervious):
            continue
        if isinstance(cond, InflowGas):
            total = cond.q_norm * area * cells.size
            net_out -= total
            gross_in += total
            continue
        pb, Xb, sec_b, tg_b = _boundary_states(problem, cond)
        gn = problem.g_component(axis) * sign
        nb = cells.size
        rep = np.zeros(nb, dtype=int)
        _, q_h = _face_coeff_fluxes(
            _GroupView(tg, cells), _GroupView(tg_b, rep),
            np.asarray(p)[cells], pb[rep], np.asarray(X)[cells], Xb[rep],
            sec.p_g[cells], sec_b.p_g[rep],
            problem.k_cells[cells], problem.k_cells[cells],
            np.full(nb, half), np.full(nb, area), gn, problem.consts.G)
        net_out += float(np.sum(q_h))
        gross_in += float(np.sum(np.maximum(-q_h, 0.0)))
    src = float(np.sum(grid.cell_vol * problem.sources.f_h_norm))
    return net_out, gross_in, src
