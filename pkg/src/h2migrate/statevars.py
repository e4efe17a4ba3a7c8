"""Persistent-variable transform between (p_l, X) and the physical state.

X is the total hydrogen mass per pore volume normalized by the standard
gas density; it stays well defined whether or not a gas phase exists.
This module inverts X back to gas saturation, evaluates the partial
derivatives of that inverse, the auxiliary blending function N, and the
saturated-region indicator chi.
"""

from dataclasses import dataclass

import numpy as np

from .constitutive import (
    DerivedConstants,
    MediumParams,
    capillary_pressure,
    capillary_pressure_deriv,
)
from .errors import LiquidDepletionError

__all__ = [
    "PrimaryState",
    "SecondaryState",
    "total_density_X",
    "invert_saturation",
    "secondary_state_nocap",
]

# Relative slack on the saturation threshold so chi is deterministic
# under round-off; exactly-on-threshold resolves to the unsaturated branch.
_CHI_TOL = 1e-14


@dataclass
class PrimaryState:
    """Per-cell persistent unknowns."""

    p_l: np.ndarray  # liquid pressure, Pa
    X: np.ndarray    # normalized total hydrogen mass density

    def copy(self):
        return PrimaryState(self.p_l.copy(), self.X.copy())


@dataclass
class SecondaryState:
    """Per-cell quantities derived from (p_l, X)."""

    S_g: np.ndarray       # gas saturation
    p_g: np.ndarray       # gas pressure, Pa
    R_s: np.ndarray       # dissolved-hydrogen ratio
    chi: np.ndarray       # saturated-region indicator (bool)
    N: np.ndarray         # blending function, in [0, 1]
    dSg_dpl: np.ndarray   # dS_g/dp_l, 1/Pa
    dSg_dX: np.ndarray    # dS_g/dX
    a_val: np.ndarray     # a(S_g) = C_h(1-S_g) + C_v S_g, 1/Pa


def _check_primary(p_l, X):
    if np.any(p_l <= 0.0):
        raise ValueError("liquid pressure must be positive")
    if np.any(X < 0.0):
        raise ValueError("total hydrogen density X must be >= 0")


def total_density_X(p_l, consts: DerivedConstants, medium: MediumParams,
                    S_g=None, R_s=None):
    """Normalized total hydrogen density X from one branch of its definition.

    Saturated branch (pass ``S_g``): X = a(S_g) * (p_l + p_c(S_g)).
    Unsaturated branch (pass ``R_s``): X = R_s.
    """
    p_l = np.asarray(p_l, dtype=float)
    if (S_g is None) == (R_s is None):
        raise ValueError("pass exactly one of S_g (saturated) or R_s (unsaturated)")
    if S_g is not None:
        S_g = np.asarray(S_g, dtype=float)
        if np.any(S_g <= 0.0) or np.any(S_g >= medium.sg_max):
            raise ValueError(
                f"saturated branch requires 0 < S_g < {medium.sg_max}"
            )
        a = consts.C_h * (1.0 - S_g) + consts.C_v * S_g
        return a * (p_l + capillary_pressure(S_g, medium))
    R_s = np.asarray(R_s, dtype=float)
    threshold = consts.C_h * (p_l + capillary_pressure(0.0, medium))
    if np.any(R_s < 0.0) or np.any(R_s > threshold * (1.0 + 1e-12)):
        raise ValueError("unsaturated branch requires 0 <= R_s <= C_h*(p_l + p_c(0))")
    return R_s + np.zeros_like(p_l)


def _pc_inverse(pc, medium):
    """Gas saturation with capillary pressure pc (exact closed form)."""
    span = 1.0 - medium.S_lr - medium.S_gr
    S_le = (1.0 + (pc / medium.P_r) ** medium.n) ** (-medium.m)
    return (1.0 - medium.S_lr) - span * S_le


def _solve_psi_asymptotic(p_l, X, consts, medium, iters=12):
    """Near-threshold root via the closed-form p_c inverse.

    Fixed point S = pc^-1(X/a(S) - p_l); strongly contractive while S_g is
    tiny (where bisection on psi loses resolution because p_c' blows up).
    """
    a = np.full_like(X, consts.C_h)
    S = np.zeros_like(X)
    for _ in range(iters):
        S = _pc_inverse(np.maximum(X / a - p_l, 0.0), medium)
        a = consts.C_h + consts.C_delta * S
    return S


def _solve_psi(p_l, X, consts, medium, n_bisect=20, n_polish=8):
    """Root of psi(S) = a(S)(p_l + p_c(S)) - X on (0, sg_max).

    Bracketed bisection first (the bracket is guaranteed), then Newton
    polish confined to the bracket; the region just past the dissolution
    threshold goes through the asymptotic closed-form inverse instead.
    Vectorized over cells.
    """
    C_h, C_v, C_d = consts.C_h, consts.C_v, consts.C_delta

    def psi(S):
        a = C_h + C_d * S
        return a * (p_l + capillary_pressure(S, medium, _checked=True)) - X

    if medium.P_r > 0.0:
        # thin layer above the threshold: delegate to the asymptotic form
        thr = C_h * (p_l + capillary_pressure(0.0, medium))
        asym = X - thr <= 1e-6 * thr
        if np.any(asym):
            out = np.zeros_like(X)
            out[asym] = _solve_psi_asymptotic(p_l[asym], X[asym], consts,
                                              medium)
            if np.any(~asym):
                out[~asym] = _solve_psi(p_l[~asym], X[~asym], consts, medium,
                                        n_bisect, n_polish)
            return out

    lo = np.zeros_like(X)
    hi = np.full_like(X, medium.sg_max)
    psi_hi = psi(hi)
    if np.any(psi_hi < 0.0):
        bad = int(np.sum(psi_hi < 0.0))
        raise LiquidDepletionError(
            f"X exceeds the admissible range at {bad} cell(s): liquid would "
            f"drop below residual saturation (S_g cap {medium.sg_max})"
        )

    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        neg = psi(mid) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)

    S = 0.5 * (lo + hi)
    tol = 1e-12 * np.maximum(X, 1.0)
    for _ in range(n_polish):
        val = psi(S)
        if np.all(np.abs(val) <= tol):
            break
        neg = val < 0.0
        lo = np.where(neg, S, lo)
        hi = np.where(neg, hi, S)
        a = C_h + C_d * S
        dpsi = (C_d * (p_l + capillary_pressure(S, medium, _checked=True))
                + a * capillary_pressure_deriv(S, medium))
        with np.errstate(invalid="ignore"):
            S_new = S - val / dpsi
        inside = (S_new > lo) & (S_new < hi) & np.isfinite(S_new)
        S = np.where(inside, S_new, 0.5 * (lo + hi))

    # Remaining stragglers (Newton stuck on the p_c' blow-up): pure bisection.
    val = psi(S)
    need = np.abs(val) > tol
    if np.any(need):
        neg = val < 0.0
        lo = np.where(need & neg, S, lo)
        hi = np.where(need & ~neg, S, hi)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            neg = psi(mid) < 0.0
            lo = np.where(need & neg, mid, lo)
            hi = np.where(need & ~neg, mid, hi)
            S = np.where(need, 0.5 * (lo + hi), S)
            if np.all(np.abs(psi(S)[need]) <= tol[need]):
                break
    return S


def invert_saturation(p_l, X, consts: DerivedConstants, medium: MediumParams,
                      chi_override=None) -> SecondaryState:
    """Secondary state from the persistent pair (p_l, X).

    Below the dissolution threshold X <= C_h*(p_l + p_c(0)) the cell is
    unsaturated (S_g = 0, R_s = X); above it S_g solves
    a(S_g)*(p_l + p_c(S_g)) = X.  ``chi_override`` pins the branch per cell
    (semi-smooth Jacobian assembly); the state is still evaluated
    consistently with the pinned branch.
    """
    p_l = np.atleast_1d(np.asarray(p_l, dtype=float))
    X = np.atleast_1d(np.asarray(X, dtype=float))
    p_l, X = np.broadcast_arrays(p_l, X)
    _check_primary(p_l, X)

    pc0 = float(capillary_pressure(0.0, medium))
    threshold = consts.C_h * (p_l + pc0)
    if chi_override is None:
        chi = X - threshold > _CHI_TOL * np.maximum(X, threshold)
    else:
        chi = np.broadcast_to(np.asarray(chi_override, dtype=bool), X.shape)

    S_g = np.zeros_like(X)
    if np.any(chi):
        # clip at the threshold so a pinned saturated branch stays solvable
        X_sat = np.maximum(X[chi], threshold[chi] * (1.0 + 1e-15))
        S_g[chi] = _solve_psi(p_l[chi], X_sat, consts, medium)

    p_g = p_l + capillary_pressure(S_g, medium, _checked=True)
    R_s = np.where(chi, consts.C_h * p_g, X)
    a = consts.C_h + consts.C_delta * S_g

    dSg_dpl = np.zeros_like(X)
    dSg_dX = np.zeros_like(X)
    N = np.zeros_like(X)
    if np.any(chi):
        pc_d = capillary_pressure_deriv(S_g[chi], medium)
        a_c = a[chi]
        with np.errstate(invalid="ignore"):
            denom = consts.C_delta * X[chi] + a_c ** 2 * pc_d
            dpl = -a_c ** 2 / denom
            dX = a_c / denom
            Nv = consts.C_delta * X[chi] / denom
        # p_c' = inf exactly on the branch boundary: derivatives vanish there
        inf_mask = ~np.isfinite(pc_d)
        dpl[inf_mask] = 0.0
        dX[inf_mask] = 0.0
        Nv[inf_mask] = 0.0
        dSg_dpl[chi] = dpl
        dSg_dX[chi] = dX
        N[chi] = Nv

    return SecondaryState(S_g=S_g, p_g=p_g, R_s=R_s, chi=chi, N=N,
                          dSg_dpl=dSg_dpl, dSg_dX=dSg_dX, a_val=a)


def secondary_state_nocap(p, X, consts: DerivedConstants,
                          sg_max: float = None) -> SecondaryState:
    """Closed-form secondary state when capillary pressure is identically zero.

    S_g = (X/p - C_h)/C_delta on the saturated branch, with explicit
    derivatives; serves as the analytic oracle for invert_saturation.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    X = np.atleast_1d(np.asarray(X, dtype=float))
    p, X = np.broadcast_arrays(p, X)
    _check_primary(p, X)

    threshold = consts.C_h * p
    chi = X - threshold > _CHI_TOL * np.maximum(X, threshold)
    S_g = np.where(chi, (X / p - consts.C_h) / consts.C_delta, 0.0)
    if sg_max is not None and np.any(S_g >= sg_max):
        raise LiquidDepletionError(
            f"no-capillarity state reaches the gas saturation cap {sg_max}"
        )
    R_s = np.where(chi, consts.C_h * p, X)
    dSg_dp = np.where(chi, -X / (consts.C_delta * p ** 2), 0.0)
    dSg_dX = np.where(chi, 1.0 / (consts.C_delta * p), 0.0)
    N = np.where(chi, 1.0, 0.0)
    a = consts.C_h + consts.C_delta * S_g
    return SecondaryState(S_g=S_g, p_g=p.copy(), R_s=R_s, chi=chi, N=N,
                          dSg_dpl=dSg_dp, dSg_dX=dSg_dX, a_val=a)
