import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlthermo import cahn_hilliard as ch
from nlthermo.errors import DomainError
from nlthermo.fields import Grid, volume_integral
from nlthermo.processes import ch_process

SPINODAL = ch.ChParams(gamma=0.01, beta=1.0, theta0=1.0, theta=0.5)


def test_params_validation():
    with pytest.raises(ValueError):
        ch.ChParams(0.01, 1.0, 1.0, 0.5, mobility="quadratic")
    with pytest.raises(ValueError):
        ch.ChParams(-0.01, 1.0, 1.0, 0.5)


def test_degenerate_mobility_is_clamped():
    p = ch.ChParams(0.01, 1.0, 1.0, 0.5, mobility="degenerate")
    assert ch.mobility(np.array([-1.3, 0.0, 1.2]), p).min() == 0.0


@given(st.integers(0, 10_000), st.floats(-0.3, 0.3), st.sampled_from(["constant", "degenerate"]))
@settings(max_examples=10, deadline=None)
def test_mass_is_conserved(seed, mean, kind):
    g = Grid.regular(32, dims=2)
    p = ch.ChParams(0.02, 1.0, 1.0, 0.5, mobility=kind)
    s = ch.random_state(g, 0.05, seed, mean)
    m0 = ch.mass(s)
    dt = ch.stable_dt(p, g)
    for _ in range(30):
        s = ch.ch_step(s, p, dt)
    c1 = volume_integral(np.abs(s.c), g)
    assert abs(ch.mass(s) - m0) <= 1e-12 * max(c1, 1e-300)


def test_spinodal_free_energy_decreases():
    g = Grid.regular(128)
    s = ch.random_state(g, 0.01, 7)
    dt = ch.stable_dt(SPINODAL, g)
    P = ch_process(s, SPINODAL, dt, 400)
    dE = np.diff(P.functionals["free_energy"])
    assert dE.max() <= (dt + g.hmin**2) * dt * P.channels["dissipation"].max()
    assert P.functionals["free_energy"][-1] < P.functionals["free_energy"][0]


def test_lyapunov_residual_is_small():
    g = Grid.regular(64)
    x = g.coords()[0]
    s = ch.ChState(g, 0.3 * np.sin(x) + 0.1 * np.cos(3 * x))
    P = ch_process(s, SPINODAL, ch.stable_dt(SPINODAL, g), 100)
    scale = P.channels["dissipation"].max()
    assert np.abs(P.channels["lyapunov_residual"]).max() <= 1e-3 * scale


@pytest.mark.parametrize("k", [2, 3, 4])
def test_linear_growth_matches_symbol(k):
    g = Grid.regular(64)
    x = g.coords()[0]
    basis = np.sin(k * x)
    s = ch.ChState(g, 1e-8 * basis)
    dt = ch.stable_dt(SPINODAL, g)
    steps = 2000
    for _ in range(steps):
        s = ch.ch_step(s, SPINODAL, dt)
    a1 = volume_integral(s.c * basis, g) / volume_integral(1e-8 * basis**2, g)
    sigma = np.log(a1) / (steps * dt)
    assert sigma == pytest.approx(ch.growth_rate(k, SPINODAL), rel=0.05)
    assert sigma == pytest.approx(ch.growth_rate(k, SPINODAL, g.spacing[0]), rel=2e-3)


def test_dual_form_constant_stable_under_refinement():
    consts = []
    for n in (32, 64):
        g = Grid.regular(n)
        x = g.coords()[0]
        s = ch.ChState(g, 0.3 * np.sin(x) + 0.1 * np.cos(3 * x))
        dt = ch.stable_dt(SPINODAL, Grid.regular(64))
        P = ch_process(s, SPINODAL, dt, 50)
        gap = np.abs(P.channels["internal_power"] - P.channels["dual_power"]).max()
        scale = P.channels["dissipation"].max()
        consts.append(gap / ((dt + g.hmin**2) * scale))
    assert max(consts) < 1.0


def test_overshoot_raises_domain_error():
    g = Grid.regular(16)
    p = ch.ChParams(0.01, 1.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        ch.ch_step(ch.ChState(g, np.full(g.shape, 50.0)), p, 1e-3)


def test_isothermal_heat_form_closes_with_source():
    g = Grid.regular(64)
    x = g.coords()[0]
    s0 = ch.ChState(g, 0.3 * np.sin(x) + 0.1 * np.cos(3 * x))
    dt = ch.stable_dt(SPINODAL, g) * 0.25
    s1 = ch.ch_step(s0, SPINODAL, dt)
    r = 0.5 * (ch.isothermal_source(s0, SPINODAL) + ch.isothermal_source(s1, SPINODAL))
    res = ch.ch_heat_form_residual(s0, s1, SPINODAL, dt, r=r)
    scale = volume_integral(np.abs(r), g)
    assert abs(res) <= 1e-3 * scale
