"""Flux coefficients of the (p_l, X) system and the fractional-flow limit.

The water, hydrogen and total fluxes take the gradient form
phi = -(A_p grad p_l + A_X grad X + B) with coefficients assembled here
pointwise per cell.  ``flux_term_groups`` additionally exposes the
advective (per phase) and diffusive pieces separately so the face scheme
can upwind and average them independently; the pieces sum back to the
printed coefficients exactly.
"""

from dataclasses import dataclass

import numpy as np

from .constitutive import DerivedConstants, FluidParams, MediumParams, mobilities
from .statevars import SecondaryState, secondary_state_nocap

__all__ = [
    "CoefficientSet",
    "FluxTermGroups",
    "FractionalFlow",
    "flux_term_groups",
    "assemble_coefficients",
    "fractional_flow",
]


@dataclass
class CoefficientSet:
    """Pointwise coefficients of the water/hydrogen/total flux expressions.

    A-coefficients multiply gradients (velocity per unit gradient); the
    B fields are the gravity vectors, shape (..., dim).
    """

    At11: np.ndarray
    At12: np.ndarray
    A21: np.ndarray
    A22: np.ndarray
    A11: np.ndarray
    A12: np.ndarray
    Bt1: np.ndarray
    B2: np.ndarray
    B1: np.ndarray


@dataclass
class FluxTermGroups:
    """Per-cell pieces of the flux coefficients, split by transport mechanism.

    ``adv_l_*`` carry the liquid mobility (upwind by liquid potential),
    ``adv_g_*`` the gas mobility (upwind by gas potential), ``diff_*`` the
    molecular diffusion (arithmetic face average).  Permeability k is NOT
    folded in; the face scheme applies it harmonically.
    """

    adv_l_w: np.ndarray        # lam_l                      (water eq, grad p_l)
    adv_l_h: np.ndarray        # lam_l * R_s                (hydrogen eq, grad p_l)
    adv_l_w_rho: np.ndarray    # lam_l * rho_l              (water gravity)
    adv_l_h_rho: np.ndarray    # lam_l * R_s * rho_l        (hydrogen gravity)
    adv_g_h_p: np.ndarray      # lam_g * C_v p_g * N        (hydrogen eq, grad p_l)
    adv_g_h_X: np.ndarray      # lam_g * C_v p_g * (1-N)/a  (hydrogen eq, grad X)
    adv_g_rho: np.ndarray      # lam_g * C_v^2 rho_g_std p_g^2 (hydrogen gravity)
    diff_p: np.ndarray         # Phi(1-S_g)F/(R_s+F) D C_h N       (grad p_l)
    diff_X: np.ndarray         # Phi(1-S_g)F/(R_s+F) D C_h (1-N)/a (grad X)
    rho_l: np.ndarray          # liquid mass density rho_l_std + R_s rho_g_std
    rho_g: np.ndarray          # gas mass density C_v rho_g_std p_g


def flux_term_groups(sec: SecondaryState, medium: MediumParams,
                     fluid: FluidParams, consts: DerivedConstants,
                     use_printed_krl: bool = False) -> FluxTermGroups:
    """Split the flux coefficients into upwindable/averageable pieces."""
    lam_l, lam_g = mobilities(sec.S_g, medium, fluid, use_printed_krl)
    lam_g = np.where(sec.chi, lam_g, 0.0)  # no gas mobility without gas phase
    rho_l = fluid.rho_l_std + sec.R_s * fluid.rho_g_std
    rho_g = consts.C_v * fluid.rho_g_std * sec.p_g
    one_minus_N_over_a = (1.0 - sec.N) / sec.a_val
    diff_base = (medium.phi * (1.0 - sec.S_g) * consts.F / (sec.R_s + consts.F)
                 * fluid.D_l_h * consts.C_h)
    return FluxTermGroups(
        adv_l_w=lam_l,
        adv_l_h=lam_l * sec.R_s,
        adv_l_w_rho=lam_l * rho_l,
        adv_l_h_rho=lam_l * sec.R_s * rho_l,
        adv_g_h_p=lam_g * consts.C_v * sec.p_g * sec.N,
        adv_g_h_X=lam_g * consts.C_v * sec.p_g * one_minus_N_over_a,
        adv_g_rho=lam_g * consts.C_v ** 2 * fluid.rho_g_std * sec.p_g ** 2,
        diff_p=diff_base * sec.N,
        diff_X=diff_base * one_minus_N_over_a,
        rho_l=rho_l,
        rho_g=rho_g,
    )


def assemble_coefficients(sec: SecondaryState, p_l, X, medium: MediumParams,
                          fluid: FluidParams, consts: DerivedConstants,
                          use_printed_krl: bool = False) -> CoefficientSet:
    """All nine flux coefficients at one state (arrays broadcast per cell)."""
    g = np.asarray(fluid.g_vec, dtype=float)
    tg = flux_term_groups(sec, medium, fluid, consts, use_printed_krl)
    k = medium.k
    G = consts.G

    At11 = k * tg.adv_l_w - tg.diff_p / G
    At12 = -tg.diff_X / G
    A21 = k * tg.adv_l_h + k * tg.adv_g_h_p + tg.diff_p
    A22 = k * tg.adv_g_h_X + tg.diff_X
    A11 = G * At11 + A21
    A12 = G * At12 + A22

    def gvec(fac):
        return -k * np.asarray(fac)[..., None] * g

    Bt1 = gvec(tg.adv_l_w_rho)
    B2 = gvec(tg.adv_l_h_rho + tg.adv_g_rho)
    B1 = G * Bt1 + B2
    return CoefficientSet(At11=At11, At12=At12, A21=A21, A22=A22,
                          A11=A11, A12=A12, Bt1=Bt1, B2=B2, B1=B1)


@dataclass
class FractionalFlow:
    """Mobility split of the no-capillarity transport limit."""

    Lambda_tot: np.ndarray  # lam_l (G + R_s) + lam_g C_v p
    Lambda_h: np.ndarray    # lam_l R_s + lam_g C_v p
    f_h: np.ndarray         # hydrogen fractional flow, in [0, 1]


def fractional_flow(p, X, consts: DerivedConstants, medium: MediumParams,
                    fluid: FluidParams) -> FractionalFlow:
    """Fractional-flow functions of the model without capillarity."""
    sec = secondary_state_nocap(p, X, consts, sg_max=medium.sg_max)
    lam_l, lam_g = mobilities(sec.S_g, medium, fluid)
    lam_g = np.where(sec.chi, lam_g, 0.0)
    Lambda_tot = lam_l * (consts.G + sec.R_s) + lam_g * consts.C_v * sec.p_g
    Lambda_h = lam_l * sec.R_s + lam_g * consts.C_v * sec.p_g
    assert np.all(Lambda_tot > 0.0), "total mobility vanished below the S_g cap"
    return FractionalFlow(Lambda_tot=Lambda_tot, Lambda_h=Lambda_h,
                          f_h=Lambda_h / Lambda_tot)
