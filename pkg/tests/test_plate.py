import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlthermo import plate as pl
from nlthermo.fields import Grid, volume_integral
from nlthermo.processes import plate_process
from nlthermo.thermo_laws import virtual_balance_residual


def test_params_validation():
    with pytest.raises(ValueError):
        pl.PlateParams(a=0.0)
    with pytest.raises(ValueError):
        pl.PlateParams(b=0.1, memory=pl.PlateMemory(1.0, 0.5, 1.0))
    with pytest.raises(ValueError):
        pl.PlateMemory(1.0, -0.5, 1.0)


@pytest.mark.parametrize("b", [0.0, 0.2])
def test_conservative_energy_drift(b):
    g = Grid.regular(64)
    p = pl.PlateParams(a=1.0, b=b)
    s = pl.single_mode(g, 2, 0.1)
    dt = 0.3 * pl.stable_dt(p, g)
    P = plate_process(s, p, dt, 1000)
    E = P.functionals["energy"]
    assert np.abs(E - E[0]).max() / E[0] <= 1e-6


@pytest.mark.parametrize("b", [0.0, 0.2])
def test_frequency_converges_to_continuum(b):
    p = pl.PlateParams(a=1.3, b=b)
    errs = []
    for n in (32, 64):
        g = Grid.regular(n)
        k = 2
        s = pl.single_mode(g, k, 0.1)
        omega = pl.mode_frequency(k, p)
        dt = 2 * np.pi / omega / 400
        P = plate_process(s, p, dt, 1200)
        sig = np.array([volume_integral(sn["u"] * np.sin(k * g.coords()[0]), g) for sn in P.snapshots])
        w = pl.measured_frequency(P.times, sig)
        assert w == pytest.approx(pl.mode_frequency(k, p, g.spacing[0]), rel=1e-4)
        errs.append(abs(w - omega) / omega)
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)


def test_continuum_frequency_formula():
    p = pl.PlateParams(rho=2.0, a=3.0)
    assert pl.mode_frequency(2.0, p) == pytest.approx(4.0 * np.sqrt(1.5))


@given(st.floats(0.0, 0.3), st.floats(0.0, 0.5), st.integers(1, 3))
@settings(max_examples=8, deadline=None)
def test_power_balance_and_dual_form(b, c_th, mode):
    g = Grid.regular(32)
    x = g.coords()[0]
    p = pl.PlateParams(a=1.0, b=b, c_th=c_th)
    s = pl.single_mode(g, mode, 0.1)
    s = pl.PlateState(g, s.u, s.v, 1.0 + 0.2 * np.sin(x))

    def f(t):
        return 0.3 * np.cos(x) * np.cos(1.1 * t)

    dt = 0.2 * pl.stable_dt(p, g)
    P = plate_process(s, p, dt, 60, f)
    scale = max(np.abs(P.channels["kinetic_rate"]).max(), np.abs(P.channels["internal_power"]).max())
    assert np.abs(P.channels["balance"]).max() <= (dt + g.hmin**2) * scale
    assert np.abs(P.channels["internal_power"] - P.channels["dual_power"]).max() <= (dt + g.hmin**2) * scale


def test_dual_form_holds_pointwise_up_to_time_error():
    g = Grid.regular(32)
    p = pl.PlateParams(a=1.0, b=0.1)
    s0 = pl.single_mode(g, 2, 0.1)
    gaps = []
    for dt in (2e-3, 1e-3):
        s1 = pl.plate_step(s0, p, None, dt)
        pw = pl.plate_powers(s0, s1, p, None, dt)
        gaps.append(np.abs(pw.internal - pw.terms["dual"]).max())
    assert gaps[1] < gaps[0] / 3


def test_memory_without_relaxation_matches_instantaneous_plate():
    g = Grid.regular(32)
    p_inst = pl.PlateParams(a=1.0)
    p_mem = pl.PlateParams(memory=pl.PlateMemory(1.0, 0.0, 2.0))
    s = pl.single_mode(g, 1, 0.1)
    dt = 0.3 * pl.stable_dt(p_inst, g)
    a, b = s, pl.with_static_history(s, 20)
    for _ in range(50):
        a = pl.plate_step(a, p_inst, None, dt)
        b = pl.plate_step(b, p_mem, None, dt)
    np.testing.assert_allclose(b.u, a.u, atol=1e-13)


def test_memory_power_balance():
    g = Grid.regular(32)
    p = pl.PlateParams(memory=pl.PlateMemory(1.0, 0.5, 2.0))
    s = pl.single_mode(g, 2, 0.1)
    dt = 0.3 * pl.stable_dt(p, g)
    s = pl.with_static_history(s, int(np.ceil(6.0 / 2.0 / dt)))
    P = plate_process(s, p, dt, 200)
    scale = max(np.abs(P.channels["kinetic_rate"]).max(), np.abs(P.channels["internal_power"]).max())
    assert np.abs(P.channels["balance"]).max() <= (dt + g.hmin**2) * scale


def test_virtual_power_balance_is_second_order():
    errs = []
    for n in (32, 64, 128):
        g = Grid.regular(n)
        x = g.coords()[0]
        p = pl.PlateParams(a=1.0, b=0.1, c_th=0.3)
        s = pl.PlateState(g, 0.1 * np.sin(x) + 0.05 * np.cos(2 * x), 0.1 * np.cos(x), 1.0 + 0.2 * np.sin(x))
        errs.append(virtual_balance_residual(pl.second_grade_parts(s, p), g, 20, seed=0)["mechanical"])
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(3.2 <= r <= 4.8 for r in ratios), (errs, ratios)
