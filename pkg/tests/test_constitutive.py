"""Constitutive laws against independent formula oracles.

Expected values were frozen from 50-digit mpmath evaluations of the plain
closed formulas; the oracle transcriptions below recompute them with naive
powers, independent of the library's log1p/expm1 evaluation path.
"""

import numpy as np
import pytest

from h2migrate import (
    FluidParams,
    blackoil_factors,
    capillary_pressure,
    capillary_pressure_deriv,
    derived_constants,
    effective_saturation,
    equilibrium_partial_pressures,
    mass_to_molar_fractions,
    rel_perms,
)

from oracles import (
    naive_krg as oracle_krg,
    naive_krl as oracle_krl,
    naive_pc as oracle_pc,
    naive_s_le as oracle_s_le,
)

YEAR = 3.1536e7


class TestDerivedConstants:
    def test_table1_values(self, fluid, consts):
        # frozen from 50-digit evaluation of the defining formulas
        assert consts.C_h == pytest.approx(1.9125e-7, rel=1e-12)
        assert consts.C_v == pytest.approx(9.9240138110515406e-6, rel=1e-12)
        assert consts.C_delta == pytest.approx(9.7327638110515406e-6, rel=1e-12)
        assert consts.F == pytest.approx(2500.0, rel=1e-14)
        assert consts.G == pytest.approx(12500.0, rel=1e-14)

    def test_zero_henry_allows_no_dissolution(self, fluid):
        import dataclasses
        c = derived_constants(dataclasses.replace(fluid, H=0.0))
        assert c.C_h == 0.0

    def test_rejects_ch_above_cv(self, fluid):
        import dataclasses
        bad = dataclasses.replace(fluid, H=1.0)  # makes C_h >> C_v
        with pytest.raises(ValueError):
            derived_constants(bad)


class TestEffectiveSaturation:
    def test_endpoints_and_midpoint(self, medium):
        assert effective_saturation(0.0, medium) == 1.0
        assert effective_saturation(0.6, medium) == 0.0
        assert effective_saturation(0.3, medium) == pytest.approx(0.5, rel=1e-14)

    def test_clamped_against_roundoff(self, medium):
        assert effective_saturation(-1e-15, medium) <= 1.0
        assert effective_saturation(0.6 + 1e-16, medium) >= 0.0


class TestCapillaryPressure:
    def test_zero_at_full_liquid(self, medium):
        assert capillary_pressure(0.0, medium) == 0.0

    def test_midpoint_frozen_value(self, medium):
        assert capillary_pressure(0.3, medium) == pytest.approx(
            7544237.943095651, rel=1e-12)

    def test_matches_naive_formula(self, medium, rng):
        S_g = rng.uniform(1e-6, 0.59, size=200)
        assert np.allclose(capillary_pressure(S_g, medium),
                           oracle_pc(S_g, medium), rtol=1e-10)

    def test_strictly_increasing(self, medium, rng):
        S_g = np.sort(rng.uniform(0.0, 0.599, size=500))
        pc = capillary_pressure(S_g, medium)
        assert np.all(np.diff(pc) > 0.0)

    def test_out_of_range_rejected(self, medium):
        with pytest.raises(ValueError):
            capillary_pressure(0.6, medium)
        with pytest.raises(ValueError):
            capillary_pressure(-0.1, medium)

    def test_zero_scale_disables_capillarity(self, medium):
        import dataclasses
        med0 = dataclasses.replace(medium, P_r=0.0)
        assert capillary_pressure(0.3, med0) == 0.0
        assert capillary_pressure_deriv(0.3, med0) == 0.0


class TestCapillaryDeriv:
    def test_against_central_differences(self, medium):
        # finite-difference oracle on the naive closed formula
        for sg in (1e-3, 1e-4, 1e-5, 0.01, 0.1, 0.3, 0.55):
            h = sg * 1e-6
            fd = (oracle_pc(sg + h, medium) - oracle_pc(sg - h, medium)) / (2 * h)
            assert capillary_pressure_deriv(sg, medium) == pytest.approx(
                fd, rel=1e-6)

    def test_increasing_toward_zero_saturation(self, medium):
        vals = capillary_pressure_deriv(np.array([1e-3, 1e-4, 1e-5]), medium)
        assert np.all(np.diff(vals) > 0.0)

    def test_blowup_scaling_exponent(self, medium):
        # dp_c/dS_g * S_g^(1 - 1/n) tends to a positive finite constant
        ks = np.arange(3, 9)
        prods = np.array([
            float(capillary_pressure_deriv(10.0 ** -k, medium))
            * (10.0 ** -k) ** (1.0 - 1.0 / medium.n) for k in ks])
        assert prods[-1] == pytest.approx(3989238.65667, rel=1e-5)
        assert np.all(prods > 0.0)
        spread = prods.max() / prods.min()
        assert spread < 1.01

    def test_infinite_at_zero(self, medium):
        assert np.isposinf(capillary_pressure_deriv(0.0, medium))


class TestRelPerms:
    def test_endpoints(self, medium):
        assert rel_perms(0.0, medium) == (1.0, 0.0)
        kr_l, kr_g = rel_perms(0.6, medium)
        assert kr_l == 0.0 and kr_g == 1.0

    def test_midpoint_frozen_values(self, medium):
        kr_l, kr_g = rel_perms(0.3, medium)
        assert kr_l == pytest.approx(0.0012301856477551852, rel=1e-12)
        assert kr_g == pytest.approx(0.64934976097926811, rel=1e-12)

    def test_matches_naive_formulas(self, medium, rng):
        S_g = rng.uniform(1e-4, 0.5999, size=200)
        kr_l, kr_g = rel_perms(S_g, medium)
        assert np.allclose(kr_l, oracle_krl(S_g, medium), rtol=1e-9)
        assert np.allclose(kr_g, oracle_krg(S_g, medium), rtol=1e-9)

    def test_bounds_and_monotonicity(self, medium, rng):
        S_g = np.sort(rng.uniform(0.0, 0.6, size=400))
        kr_l, kr_g = rel_perms(S_g, medium)
        assert np.all((kr_l >= 0) & (kr_l <= 1))
        assert np.all((kr_g >= 0) & (kr_g <= 1))
        assert np.all(np.diff(kr_l) <= 1e-15)
        assert np.all(np.diff(kr_g) >= -1e-15)

    def test_printed_variant_reduces_to_power_law(self, medium, rng):
        # dropped inner exponent: kr_l = sqrt(S_le) * S_le^(2/m)
        S_g = rng.uniform(0.0, 0.59, size=50)
        kr_l, _ = rel_perms(S_g, medium, use_printed_krl=True)
        s = oracle_s_le(S_g, medium)
        assert np.allclose(kr_l, np.sqrt(s) * s ** (2.0 / medium.m), rtol=1e-9)


class TestBlackoilFactors:
    def test_reduced_model(self, fluid, consts):
        R_s, B_g, R_v = blackoil_factors(1e6, 1e6, fluid, consts)
        assert R_s == pytest.approx(0.19125, rel=1e-12)
        assert 1.0 / B_g == pytest.approx(consts.C_v * 1e6, rel=1e-12)
        assert R_v == 0.0

    def test_vapor_reference_formula(self, fluid, consts):
        # direct-formula oracle: R_v = (1/F) * p_ref/(p_g - p_ref)
        p_ref, p_g = 0.1e6, 1.1e6
        R_s, B_g, R_v = blackoil_factors(1e6, p_g, fluid, consts,
                                         p_vap_ref=p_ref)
        assert R_v == pytest.approx((1.0 / consts.F) * p_ref / (p_g - p_ref),
                                    rel=1e-12)
        assert R_s == pytest.approx(
            fluid.H * fluid.M_h / fluid.rho_g_std * (p_g - p_ref), rel=1e-12)
        assert B_g == pytest.approx(
            fluid.R_gas * fluid.T * fluid.rho_g_std
            / (fluid.M_h * (p_g - p_ref)), rel=1e-12)

    def test_nonphysical_pressure_rejected(self, fluid, consts):
        with pytest.raises(ValueError):
            blackoil_factors(1e6, 0.05e6, fluid, consts, p_vap_ref=0.1e6)


class TestEquilibriumPartialPressures:
    def test_zero_vapor_reference(self, fluid):
        assert equilibrium_partial_pressures(1e6, 1e6, 1e3, fluid, 0.0) \
            == (0.0, 1e6)

    def test_raoult_limit_without_henry(self, fluid):
        # H = 0, p_c = 0: water side is exactly the vapor reference
        import dataclasses
        dry = dataclasses.replace(fluid, H=0.0)
        p_ref = 2.0e3
        p_g_w, p_g_h = equilibrium_partial_pressures(1e6, 1e6, 1e3, dry, p_ref)
        assert p_g_w == pytest.approx(p_ref, rel=1e-9)
        assert p_g_h == pytest.approx(1e6 - p_ref, rel=1e-9)

    def test_against_dense_grid_oracle(self, fluid):
        p_l, p_g, rho_l_w, p_ref = 0.9e6, 1.2e6, 996.0, 3.5e3
        RT = fluid.R_gas * fluid.T

        def water_side(ph):
            return (p_ref * rho_l_w / (rho_l_w + fluid.M_w * fluid.H * ph)
                    * np.exp(-fluid.M_w * (p_g - p_l)
                             / (RT * (rho_l_w + fluid.M_h * fluid.H * ph))))

        # brute force: dense scan, then bisection refinement
        grid = np.linspace(0.0, p_g, 1_000_001)
        res = water_side(grid) + grid - p_g
        i = int(np.searchsorted(res > 0.0, True))
        lo, hi = grid[i - 1], grid[i]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if water_side(mid) + mid - p_g <= 0.0:
                lo = mid
            else:
                hi = mid
        expect_h = 0.5 * (lo + hi)

        p_g_w, p_g_h = equilibrium_partial_pressures(p_l, p_g, rho_l_w, fluid,
                                                     p_ref)
        assert p_g_h == pytest.approx(expect_h, rel=1e-8)
        assert p_g_w == pytest.approx(p_g - expect_h, rel=1e-6)
        # both residual equations hold
        assert abs(p_g_w + p_g_h - p_g) <= 1e-9 * p_g
        assert abs(p_g_w - water_side(p_g_h)) <= 1e-9 * p_g


class TestMassToMolarFractions:
    def test_pure_endpoints(self):
        assert mass_to_molar_fractions(0.0, 1e-2, 2e-3) == (0.0, 1.0)
        assert mass_to_molar_fractions(1.0, 1e-2, 2e-3) == (1.0, 0.0)

    def test_midpoint(self):
        X_h, X_w = mass_to_molar_fractions(0.5, 1e-2, 2e-3)
        assert X_h == pytest.approx(0.5 / (0.5 + 0.2 * 0.5), rel=1e-14)

    def test_sums_to_one_exactly(self, rng):
        om = rng.uniform(0.0, 1.0, size=1000)
        X_h, X_w = mass_to_molar_fractions(om, 1e-2, 2e-3)
        assert np.all(X_h + X_w == 1.0)


def test_binary_diffusion_identity(fluid, consts):
    # M_h D_l_h = M_w D_l_w by construction, equivalently F D_l_h = G D_l_w
    assert fluid.M_h * fluid.D_l_h == pytest.approx(fluid.M_w * fluid.D_l_w,
                                                    rel=1e-14)
    assert consts.F * fluid.D_l_h == pytest.approx(consts.G * fluid.D_l_w,
                                                   rel=1e-14)
