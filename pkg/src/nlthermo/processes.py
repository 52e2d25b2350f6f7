"""Capture model trajectories as :class:`ProcessRecord` objects.

Every capture steps the model, evaluates the model's power breakdown over
each step and stores volume integrals as channels.  ``heat`` is the
integrated ``rho h`` and ``internal_power`` the integrated ``P^i``; models
without one of them store zeros so the First-Law check applies uniformly.
"""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from . import cahn_hilliard as ch
from . import dielectric as em
from . import gk
from . import memory_heat as mh
from . import plate as pl
from .fields import div, volume_integral
from .thermo_laws import ProcessRecord
from .timestepping import BlowUpGuard


def _params(p) -> dict:
    out = {}
    for k, v in asdict(p).items():
        if isinstance(v, dict):
            out.update({f"{k}.{kk}": vv for kk, vv in v.items()})
        elif v is not None:
            out[k] = v
    return out


def _finish(model, dt, snaps, channels, functionals, params):
    return ProcessRecord(
        model,
        dt,
        tuple(snaps),
        {k: np.array(v) for k, v in channels.items()},
        {k: np.array(v) for k, v in functionals.items()},
        params,
    )


# --------------------------------------------------------------------------
# Guyer-Krumhansl


def gk_process(s: gk.GkState, p: gk.GkParams, r, dt: float, steps: int) -> ProcessRecord:
    """Channels: heat, internal_power (zero, rigid body), entropy_action,
    external_action, production, second_law_min (pointwise residual minimum
    over the scale).  Functionals: entropy, energy."""
    grid = s.grid
    guard = BlowUpGuard([s.q, s.theta])
    snaps = [{"theta": s.theta, "q": s.q}]
    ch_ = {k: [] for k in ("heat", "internal_power", "entropy_action", "external_action", "production", "second_law_min")}
    fn = {"entropy": [volume_integral(gk.gk_entropy(s, p), grid)], "energy": [volume_integral(gk.gk_energy(s, p), grid)]}
    for n in range(steps):
        s1 = gk.gk_step(s, p, r, dt)
        guard.check([s1.q, s1.theta], n + 1)
        pw = gk.gk_entropy_actions(s1, p, r, prev=s, dt=dt)
        res = gk.gk_second_law_residual(s1, p, r, prev=s, dt=dt)
        scale = max(gk.second_law_scale(s1, p, r, prev=s, dt=dt), np.finfo(float).tiny)
        ch_["heat"].append(pw.integral("heat_rate"))
        ch_["internal_power"].append(0.0)
        ch_["entropy_action"].append(pw.integral("internal"))
        ch_["external_action"].append(pw.integral("external"))
        ch_["production"].append(-pw.integral("relaxation") - pw.integral("nonlocal"))
        ch_["second_law_min"].append(float(np.min(res)) / scale)
        fn["entropy"].append(volume_integral(gk.gk_entropy(s1, p), grid))
        fn["energy"].append(volume_integral(gk.gk_energy(s1, p), grid))
        snaps.append({"theta": s1.theta, "q": s1.q})
        s = s1
    return _finish("gk", dt, snaps, ch_, fn, _params(p))


def gk_virtual_parts(s: gk.GkState, p: gk.GkParams, r=None) -> dict:
    """Thermal decomposition of the GK conductor: ``q1 = q``, no second-grade flux."""
    src = gk.source_at(r, s.t, s.grid)
    return {"h": -div(s.q, s.grid) + src, "q1": s.q, "q2": None, "r": src}


# --------------------------------------------------------------------------
# Cahn-Hilliard


def ch_process(s: ch.ChState, p: ch.ChParams, dt: float, steps: int, source=None) -> ProcessRecord:
    """Channels: heat, internal_power, dual_power, external_power,
    dissipation, lyapunov_residual.  Functionals: free_energy, internal_energy, mass.

    The temperature is held fixed, so ``heat`` is the supply that keeps it
    there: the internal-energy rate minus the internal power.
    """
    snaps = [{"c": s.c}]
    names = ("heat", "internal_power", "dual_power", "external_power", "dissipation", "lyapunov_residual")
    ch_ = {k: [] for k in names}
    fn = {"free_energy": [ch.free_energy(s, p)], "internal_energy": [ch.internal_energy(s, p)], "mass": [ch.mass(s)]}
    for _ in range(steps):
        s1 = ch.ch_step(s, p, dt, source)
        pw = ch.ch_powers(s, s1, p, dt)
        E1 = ch.free_energy(s1, p)
        diss = pw.integral("dissipation")
        e1 = ch.internal_energy(s1, p)
        ch_["heat"].append((e1 - fn["internal_energy"][-1]) / dt - pw.integral("internal"))
        ch_["internal_power"].append(pw.integral("internal"))
        ch_["dual_power"].append(pw.integral("dual"))
        ch_["external_power"].append(pw.integral("external"))
        ch_["dissipation"].append(diss)
        if source is None:
            ch_["lyapunov_residual"].append((E1 - fn["free_energy"][-1]) / dt + diss)
        else:
            ch_["lyapunov_residual"].append(0.0)
        fn["free_energy"].append(E1)
        fn["internal_energy"].append(e1)
        fn["mass"].append(ch.mass(s1))
        snaps.append({"c": s1.c})
        s = s1
    params = _params(p)
    params["isothermal"] = True
    return _finish("cahn_hilliard", dt, snaps, ch_, fn, params)


# --------------------------------------------------------------------------
# plate


def plate_process(s: pl.PlateState, p: pl.PlateParams, dt: float, steps: int, f=None) -> ProcessRecord:
    """Channels: heat (zero), internal_power, kinetic_rate, external_power,
    dual_power, balance.  Functionals: energy, internal_energy, kinetic."""
    grid = s.grid
    guard = BlowUpGuard([s.u, s.v])
    snaps = [{"u": s.u, "v": s.v}]
    names = ("heat", "internal_power", "kinetic_rate", "external_power", "dual_power", "balance")
    ch_ = {k: [] for k in names}

    def functionals(st):
        d = pl.plate_energy_density(st, p)
        kin = volume_integral(0.5 * p.rho * st.v**2, grid)
        total = volume_integral(d["kinetic"] + d["potential"], grid)
        return total, total - kin, kin

    fn = {k: [v] for k, v in zip(("energy", "internal_energy", "kinetic"), functionals(s))}
    for n in range(steps):
        s1 = pl.plate_step(s, p, f, dt)
        guard.check([s1.u, s1.v], n + 1)
        if p.memory is None:
            pw = pl.plate_powers(s, s1, p, f, dt)
        else:
            pw = pl.plate_memory_powers(s, s1, p, dt)
        pi, kr, pe = pw.integral("internal"), pw.integral("kinetic_rate"), pw.integral("external")
        ch_["heat"].append(0.0)
        ch_["internal_power"].append(pi)
        ch_["kinetic_rate"].append(kr)
        ch_["external_power"].append(pe)
        ch_["dual_power"].append(pw.integral("dual"))
        ch_["balance"].append(kr + pi - pe)
        for k, v in zip(("energy", "internal_energy", "kinetic"), functionals(s1)):
            fn[k].append(v)
        snaps.append({"u": s1.u, "v": s1.v})
        s = s1
    params = _params(p)
    return _finish("plate", dt, snaps, ch_, fn, params)


# --------------------------------------------------------------------------
# dielectric


def em_process(s: em.EmState, p: em.EmParams, dt: float, steps: int) -> ProcessRecord:
    """Channels: heat (zero), internal_power, classical_power, external_power,
    heat_difference.  Functional: energy."""
    grid = s.grid
    guard = BlowUpGuard([s.E, s.H])
    snaps = [{"E": s.E, "H": s.H}]
    names = ("heat", "internal_power", "classical_power", "external_power", "heat_difference", "heat_difference_max")
    ch_ = {k: [] for k in names}
    fn = {"energy": [em.em_energy(s, p)]}
    for n in range(steps):
        s1 = em.em_step(s, p, dt)
        guard.check([s1.E, s1.H], n + 1)
        pw = em.em_powers(s, s1, p, dt)
        diff = pw.terms["classical"] - pw.internal
        ch_["heat"].append(0.0)
        ch_["internal_power"].append(pw.integral("internal"))
        ch_["classical_power"].append(pw.integral("classical"))
        ch_["external_power"].append(pw.integral("external"))
        ch_["heat_difference"].append(volume_integral(diff, grid))
        ch_["heat_difference_max"].append(float(np.max(np.abs(diff))))
        fn["energy"].append(em.em_energy(s1, p))
        snaps.append({"E": s1.E, "H": s1.H})
        s = s1
    return _finish("dielectric", dt, snaps, ch_, fn, _params(p))


# --------------------------------------------------------------------------
# memory conductor


def memory_process(
    grid, p: mh.MemoryParams, theta_fn, theta_dot_fn, dt: float, steps: int, m: int, rows=None
) -> ProcessRecord:
    """Channels: heat, entropy_action, psi2_residual.  Functional: psi2.

    ``rows`` may carry an existing :func:`run_memory` trajectory to avoid recomputing it.
    """
    if rows is None:
        rows = mh.run_memory(grid, p, theta_fn, theta_dot_fn, dt, steps, m)
    snaps = [{"theta": r["theta"], "q": r["q"]} for r in rows]
    ch_ = {
        "heat": [volume_integral(r["h"], grid) for r in rows[1:]],
        "entropy_action": [volume_integral(r["entropy_action"], grid) for r in rows[1:]],
        "psi2_residual": [r["psi2_residual"] for r in rows[1:]],
    }
    fn = {"psi2": [r["psi2"] for r in rows]}
    params = {
        "k1.amplitude": p.k1.amplitude,
        "k1.lambda": p.k1.lam,
        "k2.amplitude": p.k2.amplitude,
        "k2.lambda": p.k2.lam,
        "c_heat": p.c_heat,
        "buffer.m": m,
    }
    return _finish("memory_heat", dt, snaps, ch_, fn, params)


def memory_virtual_parts(buf: mh.HistoryBuffer, theta, h, p: mh.MemoryParams) -> dict:
    """Second-grade thermal decomposition; ``r`` closes the energy balance ``h = -div q + r``."""
    q1, q2 = mh.memory_flux_parts(buf, theta, p.k1, p.k2)
    q = q1 - div(q2, buf.grid)
    return {"h": h, "q1": q1, "q2": q2, "r": h + div(q, buf.grid)}
