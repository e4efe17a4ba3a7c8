import numpy as np
import pytest

from h2migrate import FluidParams, MediumParams, derived_constants


@pytest.fixture(scope="session")
def medium():
    """Benchmark porous medium (Table-1 values)."""
    return MediumParams(k=5e-20, phi=0.15, P_r=2e6, n=1.49, S_lr=0.4, S_gr=0.0)


@pytest.fixture(scope="session")
def fluid():
    """Benchmark water/hydrogen pair at 303 K."""
    return FluidParams(mu_l=1e-3, mu_g=9e-6, D_l_h=3e-9, M_w=1e-2, M_h=2e-3,
                       rho_l_std=1e3, rho_g_std=8e-2, H=7.65e-6, T=303.0)


@pytest.fixture(scope="session")
def consts(fluid):
    return derived_constants(fluid)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
