import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gk_random_state
from nlthermo import gk
from nlthermo.errors import DomainError
from nlthermo.fields import Grid, volume_integral
from nlthermo.processes import gk_process, gk_virtual_parts
from nlthermo.thermo_laws import check_cycle, virtual_balance_residual


def test_params_validation():
    with pytest.raises(ValueError):
        gk.GkParams(0.0, 0.1, 1.0)
    with pytest.raises(ValueError):
        gk.GkParams(1.0, -0.1, 1.0)
    p = gk.GkParams(1.0, -0.1, 1.0, strict=False)
    assert not p.admissible


def test_uniform_mode_decay_matches_closed_form():
    g = Grid.regular(32)
    p = gk.GkParams(0.7, 0.05, 1.0)
    q0 = 0.2
    s = gk.GkState(g, np.ones(g.shape), np.full(g.field_shape(1), q0))
    dt = p.tau_r / 50
    for _ in range(100):
        s = gk.gk_step(s, p, None, dt)
    exact = gk.uniform_mode_solution(q0, p, s.t)
    assert np.abs(s.q - exact).max() / exact <= 1e-8
    np.testing.assert_allclose(s.theta, 1.0, atol=1e-14)


def test_energy_conserved_without_supply():
    g = Grid.regular(32, dims=2)
    p = gk.GkParams(0.5, 0.02, 1.0)
    s = gk_random_state(g, 1)
    e0 = volume_integral(gk.gk_energy(s, p), g)
    dt = gk.stable_dt(p, g, float(s.theta.min()))
    for _ in range(50):
        s = gk.gk_step(s, p, None, dt)
    assert volume_integral(gk.gk_energy(s, p), g) == pytest.approx(e0, rel=1e-13)


@given(
    st.floats(0.2, 2.0),
    st.floats(0.005, 0.1),
    st.floats(0.5, 4.0),
    st.integers(0, 1000),
)
@settings(max_examples=8, deadline=None)
def test_second_law_pointwise(tau_r, tau_n, c0, seed):
    g = Grid.regular(32)
    p = gk.GkParams(tau_r, tau_n, c0)
    s = gk_random_state(g, seed)
    P = gk_process(s, p, None, gk.stable_dt(p, g, float(s.theta.min())), 60)
    assert P.channels["second_law_min"].min() >= -1e-10
    assert np.all(P.channels["production"] >= 0)


def test_negative_tau_n_violates_second_law_quickly():
    g = Grid.regular(64)
    p = gk.GkParams(0.5, -0.1, 2.0, strict=False)
    s = gk_random_state(g, 3)
    P = gk_process(s, p, None, 1e-3, 100)
    assert P.channels["second_law_min"].min() < -1e-10


def test_negative_temperature_is_a_domain_error():
    g = Grid.regular(16)
    p = gk.GkParams(1.0, 0.1, 1.0)
    with pytest.raises(DomainError):
        gk.gk_step(gk.GkState(g, -np.ones(g.shape), g.zeros(1)), p, None, 0.01)


def test_entropy_balance_closes_with_refinement():
    p = gk.GkParams(0.5, 0.02, 2.0)
    gaps = []
    for n in (32, 64):
        g = Grid.regular(n)
        s = gk_random_state(g, 4)
        dt = 0.25 * gk.stable_dt(p, Grid.regular(64), 0.9)
        P = gk_process(s, p, None, dt, 40)
        gaps.append(np.abs(P.channels["entropy_action"] - P.channels["external_action"]).max())
    assert gaps[1] <= gaps[0] * 1.01


def test_forced_cycle_second_law_strictly_negative():
    g = Grid.regular(32)
    p = gk.GkParams(0.5, 0.0667, 4.0)
    omega = 2.0
    x = g.coords()[0]

    def r(t):
        return 0.5 * np.sin(x) * np.sin(omega * t)

    steps = 100
    dt = 2 * np.pi / omega / steps
    s = gk.GkState(g, np.ones(g.shape), g.zeros(1))
    for _ in range(6 * steps):
        s = gk.gk_step(s, p, r, dt)
    s = gk.GkState(g, s.theta, s.q, 0.0)
    rep = check_cycle(gk_process(s, p, r, dt, steps))
    assert rep.passed
    assert rep.second_law_integral < -10 * rep.tolerances["second_law"]


def test_virtual_entropy_balance_is_exact():
    g = Grid.regular(32, dims=2)
    p = gk.GkParams(0.5, 0.02, 2.0)
    s = gk_random_state(g, 2)
    out = virtual_balance_residual(gk_virtual_parts(s, p), g, 20, seed=0)
    assert out["mechanical"] is None
    assert out["entropy"] < 1e-12
