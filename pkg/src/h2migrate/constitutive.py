"""Pointwise constitutive laws.

van Genuchten-Mualem capillary pressure and relative permeabilities,
the derived fluid constants of the simplified (incompressible water,
no vapor) closure, Black-oil style equilibrium factors, and the
partial-pressure equilibrium solve for the full dissolution/vaporization
closure.  Everything here is a pure function of value inputs; array
arguments broadcast in the numpy way.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MediumParams",
    "FluidParams",
    "DerivedConstants",
    "derived_constants",
    "effective_saturation",
    "capillary_pressure",
    "capillary_pressure_deriv",
    "rel_perms",
    "mobilities",
    "blackoil_factors",
    "equilibrium_partial_pressures",
    "mass_to_molar_fractions",
    "SG_CAP_MARGIN",
]

# Gas saturation is capped this far below the residual-liquid limit; the
# model excludes complete liquid disappearance.
SG_CAP_MARGIN = 1e-6


@dataclass(frozen=True)
class MediumParams:
    """Petrophysical constants of an isotropic porous medium."""

    k: float            # absolute permeability, m^2
    phi: float          # porosity
    P_r: float          # van Genuchten pressure scale, Pa (0 disables capillarity)
    n: float            # van Genuchten exponent
    S_lr: float         # residual liquid saturation
    S_gr: float = 0.0   # residual gas saturation

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"permeability must be positive, got {self.k}")
        if not 0 < self.phi <= 1:
            raise ValueError(f"porosity must lie in (0, 1], got {self.phi}")
        if not self.n > 1:
            raise ValueError(f"van Genuchten exponent must exceed 1, got {self.n}")
        if self.P_r < 0:
            raise ValueError(f"capillary pressure scale must be >= 0, got {self.P_r}")
        if self.S_lr < 0 or self.S_gr < 0 or self.S_lr + self.S_gr >= 1:
            raise ValueError(
                f"residual saturations must satisfy 0 <= S_lr, S_gr and "
                f"S_lr + S_gr < 1, got S_lr={self.S_lr}, S_gr={self.S_gr}"
            )

    @property
    def m(self) -> float:
        return 1.0 - 1.0 / self.n

    @property
    def sg_max(self) -> float:
        """Largest admissible gas saturation (liquid stays above residual)."""
        return 1.0 - self.S_lr - SG_CAP_MARGIN


@dataclass(frozen=True)
class FluidParams:
    """Fluid constants of the water/hydrogen pair at fixed temperature."""

    mu_l: float           # liquid viscosity, Pa.s
    mu_g: float           # gas viscosity, Pa.s
    D_l_h: float          # hydrogen diffusion in liquid, m^2/s
    M_w: float            # water molar mass, kg/mol
    M_h: float            # hydrogen molar mass, kg/mol
    rho_l_std: float      # liquid density at standard conditions, kg/m^3
    rho_g_std: float      # gas density at standard conditions, kg/m^3
    H: float              # Henry constant, mol/Pa/m^3
    T: float              # temperature, K
    R_gas: float = 8.314  # universal gas constant, J/mol/K
    g_vec: tuple = (0.0, 0.0)  # gravity acceleration, m/s^2

    def __post_init__(self):
        for name in ("mu_l", "mu_g", "D_l_h", "M_w", "M_h",
                     "rho_l_std", "rho_g_std", "T", "R_gas"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.H < 0:
            raise ValueError(f"Henry constant must be >= 0, got {self.H}")

    @property
    def D_l_w(self) -> float:
        """Water diffusion in liquid from the binary identity M_h*D_l_h = M_w*D_l_w."""
        return self.M_h * self.D_l_h / self.M_w


@dataclass(frozen=True)
class DerivedConstants:
    """Constants derived once from FluidParams for the reduced closure."""

    C_h: float      # Henry slope, 1/Pa
    C_v: float      # ideal-gas slope, 1/Pa
    C_delta: float  # C_v - C_h, 1/Pa
    F: float        # molar density ratio M_h*rho_l_std/(M_w*rho_g_std)
    G: float        # standard density ratio rho_l_std/rho_g_std


def derived_constants(fluid: FluidParams) -> DerivedConstants:
    """Compute the reduced-closure constants C_h, C_v, C_delta, F, G."""
    C_h = fluid.H * fluid.M_h / fluid.rho_g_std
    C_v = fluid.M_h / (fluid.R_gas * fluid.T * fluid.rho_g_std)
    if C_v <= C_h:
        raise ValueError(
            f"closure requires C_v > C_h (dissolved hydrogen lighter than free "
            f"gas), got C_h={C_h:.6e}, C_v={C_v:.6e}"
        )
    F = fluid.M_h * fluid.rho_l_std / (fluid.M_w * fluid.rho_g_std)
    G = fluid.rho_l_std / fluid.rho_g_std
    return DerivedConstants(C_h=C_h, C_v=C_v, C_delta=C_v - C_h, F=F, G=G)


def effective_saturation(S_g, medium: MediumParams):
    """Effective liquid saturation, clamped to [0, 1] against round-off."""
    span = 1.0 - medium.S_lr - medium.S_gr
    S_le = (1.0 - np.asarray(S_g, dtype=float) - medium.S_lr) / span
    return np.clip(S_le, 0.0, 1.0)


def _one_minus_sle(S_g, medium):
    """1 - S_le computed without cancellation, clamped to [0, 1]."""
    span = 1.0 - medium.S_lr - medium.S_gr
    return np.clip((np.asarray(S_g, dtype=float) - medium.S_gr) / span, 0.0, 1.0)


def _check_pc_range(S_g, medium):
    if np.any(np.asarray(S_g) >= 1.0 - medium.S_lr):
        raise ValueError(
            f"capillary pressure unbounded at S_g >= 1 - S_lr = {1.0 - medium.S_lr}"
        )
    if np.any(np.asarray(S_g) < 0.0):
        raise ValueError("gas saturation must be >= 0")


def capillary_pressure(S_g, medium: MediumParams, _checked: bool = False):
    """van Genuchten capillary pressure P_r*(S_le^(-1/m) - 1)^(1/n).

    Evaluated through log1p/expm1 so the S_le -> 1 limit (zero entry
    pressure) keeps full relative precision.  ``_checked`` skips the range
    validation when the caller already guarantees 0 <= S_g < 1 - S_lr.
    """
    if not _checked:
        _check_pc_range(S_g, medium)
    s = _one_minus_sle(S_g, medium)
    m, n = medium.m, medium.n
    # S_le^(-1/m) - 1 = expm1(-(1/m) log1p(-s))
    t = np.expm1(-np.log1p(-s) / m)
    return medium.P_r * t ** (1.0 / n)


def capillary_pressure_deriv(S_g, medium: MediumParams):
    """dp_c/dS_g; diverges like S_g^(1/n - 1) as S_g -> 0+ (returns inf at 0)."""
    _check_pc_range(S_g, medium)
    S_g = np.asarray(S_g, dtype=float)
    if medium.P_r == 0.0:
        return np.zeros_like(S_g)
    s = _one_minus_sle(S_g, medium)
    m, n = medium.m, medium.n
    span = 1.0 - medium.S_lr - medium.S_gr
    tiny = s < 1e-12
    with np.errstate(divide="ignore", over="ignore"):
        # asymptotic s -> 0 power law avoids 0^negative on the main branch
        t_asym = s / m
        t = np.where(tiny, 1.0, np.expm1(-np.log1p(-s) / m))
        S_le = 1.0 - s
        main = t ** (1.0 / n - 1.0) * S_le ** (-1.0 / m - 1.0)
        asym = t_asym ** (1.0 / n - 1.0)
        core = np.where(tiny, asym, main)
    return medium.P_r / (n * m * span) * core


def rel_perms(S_g, medium: MediumParams, use_printed_krl: bool = False):
    """van Genuchten-Mualem relative permeabilities (kr_l, kr_g).

    ``use_printed_krl`` selects the variant with the inner Mualem exponent
    dropped, kr_l = sqrt(S_le) * S_le^(2/m), kept for comparison only.
    """
    S_le = effective_saturation(S_g, medium)
    m = medium.m
    s = _one_minus_sle(S_g, medium)
    # S_le^(1/m) via expm1/log1p keeps 1 - S_le^(1/m) accurate near S_le = 1
    with np.errstate(divide="ignore"):  # log1p(-1) = -inf at the S_le = 0 endpoint
        one_minus_sle_pow = -np.expm1(np.log1p(-s) / m)  # 1 - S_le^(1/m), in [0, 1]
    one_minus_sle_pow = np.clip(one_minus_sle_pow, 0.0, 1.0)
    if use_printed_krl:
        kr_l = np.sqrt(S_le) * (1.0 - one_minus_sle_pow) ** 2
    else:
        kr_l = np.sqrt(S_le) * (1.0 - one_minus_sle_pow ** m) ** 2
    kr_g = np.sqrt(1.0 - S_le) * one_minus_sle_pow ** (2.0 * m)
    return kr_l, kr_g


def mobilities(S_g, medium: MediumParams, fluid: FluidParams,
               use_printed_krl: bool = False):
    """Phase mobilities (kr_l/mu_l, kr_g/mu_g)."""
    kr_l, kr_g = rel_perms(S_g, medium, use_printed_krl)
    return kr_l / fluid.mu_l, kr_g / fluid.mu_g


def blackoil_factors(p_l, p_g, fluid: FluidParams, consts: DerivedConstants,
                     p_vap_ref: float = 0.0, B_l: float = 1.0):
    """Equilibrium Black-oil factors (R_s, B_g, R_v) from the thermodynamical
    closure; with B_l = 1 and zero vapor reference this is R_s = C_h*p_g,
    1/B_g = C_v*p_g, R_v = 0."""
    p_g = np.asarray(p_g, dtype=float)
    if np.any(p_g <= p_vap_ref):
        raise ValueError(
            f"gas pressure must exceed the vapor reference pressure {p_vap_ref}"
        )
    dp = p_g - p_vap_ref
    R_s = B_l * (fluid.H * fluid.M_h / fluid.rho_g_std) * dp
    B_g = fluid.R_gas * fluid.T * fluid.rho_g_std / (fluid.M_h * dp)
    R_v = (1.0 / consts.F) * p_vap_ref / dp
    return R_s, B_g, R_v


def equilibrium_partial_pressures(p_l: float, p_g: float, rho_l_w: float,
                                  fluid: FluidParams, p_vap_ref: float):
    """Unique positive pair (p_g_w, p_g_h) of partial pressures at equilibrium.

    Solves p_g_w = p_vap_ref * X_l^w * exp(-M_w (p_g - p_l)/(R T rho_l)) with
    Dalton's p_g = p_g_w + p_g_h by safeguarded bisection on p_g_h in
    [0, p_g]; the water side is monotone decreasing in p_g_h.
    """
    if p_g < p_vap_ref:
        raise ValueError("gas pressure below the vapor reference pressure")
    if p_vap_ref == 0.0:
        return 0.0, float(p_g)

    RT = fluid.R_gas * fluid.T

    def water_side(p_g_h):
        denom_frac = rho_l_w + fluid.M_w * fluid.H * p_g_h
        rho_l = rho_l_w + fluid.M_h * fluid.H * p_g_h
        return (p_vap_ref * rho_l_w / denom_frac
                * np.exp(-fluid.M_w * (p_g - p_l) / (RT * rho_l)))

    def resid(p_g_h):
        return water_side(p_g_h) + p_g_h - p_g

    lo, hi = 0.0, float(p_g)
    f_lo, f_hi = resid(lo), resid(hi)
    if f_lo > 0.0 or f_hi < 0.0:
        raise ValueError("no sign change on [0, p_g]; inputs inconsistent")
    tol = 1e-10 * p_g
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if resid(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    p_g_h = 0.5 * (lo + hi)
    return water_side(p_g_h), p_g_h


def mass_to_molar_fractions(omega_h, M_w: float, M_h: float):
    """Molar fractions (X_h, X_w) from the hydrogen mass fraction; sums to 1
    exactly."""
    omega_h = np.asarray(omega_h, dtype=float)
    if np.any(omega_h < 0) or np.any(omega_h > 1):
        raise ValueError("mass fraction must lie in [0, 1]")
    X_h = omega_h / (omega_h + (M_h / M_w) * (1.0 - omega_h))
    return X_h, 1.0 - X_h
