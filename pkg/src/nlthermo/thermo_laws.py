"""Processes, cycles and the three Laws as numerical checks.

A :class:`ProcessRecord` is a uniformly sampled trajectory.  Snapshots are
dicts of arrays (the model state); channels hold one volume-integrated rate
per step (interval ``[t_i, t_{i+1}]``), and functionals hold one value per
snapshot.  Rates in the channels are built from backward differences, so a
cyclic integral ``sum dt * rate`` telescopes exactly whenever the integrand
is a time derivative.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import NotACycleError
from .fields import Grid, grad, grad2, inner, volume_integral

TOL_CYCLE = 1e-4
ENDPOINT_TOL = 1e-8


@dataclass(frozen=True)
class ProcessRecord:
    model: str
    dt: float
    snapshots: tuple
    channels: dict = field(default_factory=dict)
    functionals: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        if len(snaps) < 1:
            raise ValueError("a process needs at least one snapshot")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        keys = set(snaps[0])
        for s in snaps[1:]:
            if set(s) != keys:
                raise ValueError("snapshots must carry the same fields")
        n = len(snaps) - 1
        chans = {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}
        funcs = {k: np.asarray(v, dtype=float) for k, v in self.functionals.items()}
        for k, v in chans.items():
            if v.shape != (n,):
                raise ValueError(f"channel {k!r} has {v.shape[0] if v.ndim else 0} samples, need {n}")
        for k, v in funcs.items():
            if v.shape != (n + 1,):
                raise ValueError(f"functional {k!r} needs one value per snapshot")
        object.__setattr__(self, "snapshots", snaps)
        object.__setattr__(self, "channels", chans)
        object.__setattr__(self, "functionals", funcs)

    @property
    def steps(self) -> int:
        return len(self.snapshots) - 1

    @property
    def duration(self) -> float:
        return self.steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)

    def identity(self) -> "ProcessRecord":
        """Zero-duration process sitting at the final state."""
        return ProcessRecord(
            self.model,
            self.dt,
            (self.snapshots[-1],),
            {k: v[:0] for k, v in self.channels.items()},
            {k: v[-1:] for k, v in self.functionals.items()},
            self.params,
        )

    def to_json(self) -> str:
        """Model tag, params, dt and the per-step channel table (snapshots are not serialised)."""
        doc = {
            "model": self.model,
            "params": self.params,
            "dt": self.dt,
            "steps": self.steps,
            "channels": {k: [float(x) for x in v] for k, v in sorted(self.channels.items())},
            "functionals": {k: [float(x) for x in v] for k, v in sorted(self.functionals.items())},
        }
        return json.dumps(doc, sort_keys=True, indent=1)


def state_distance(a: dict, b: dict) -> float:
    return max(float(np.max(np.abs(np.asarray(a[k]) - np.asarray(b[k])))) for k in a)


def state_scale(P: ProcessRecord) -> float:
    return max(max(float(np.max(np.abs(np.asarray(v)))) for v in s.values()) for s in P.snapshots)


def compose(P1: ProcessRecord, P2: ProcessRecord) -> ProcessRecord:
    """``P1`` followed by ``P2``."""
    if P1.model != P2.model:
        raise ValueError("cannot compose processes of different models")
    if abs(P1.dt - P2.dt) > 1e-12 * P1.dt:
        raise ValueError(f"time steps differ: {P1.dt} vs {P2.dt}")
    if set(P1.channels) != set(P2.channels) or set(P1.functionals) != set(P2.functionals):
        raise ValueError("processes record different channels")
    scale = max(state_scale(P1), state_scale(P2), np.finfo(float).tiny)
    gap = state_distance(P1.snapshots[-1], P2.snapshots[0])
    if gap > ENDPOINT_TOL * scale:
        raise ValueError(f"end of P1 and start of P2 differ by {gap / scale:.3e} (relative)")
    return ProcessRecord(
        P1.model,
        P1.dt,
        P1.snapshots + P2.snapshots[1:],
        {k: np.concatenate([P1.channels[k], P2.channels[k]]) for k in P1.channels},
        {k: np.concatenate([P1.functionals[k], P2.functionals[k][1:]]) for k in P1.functionals},
        P1.params,
    )


def _index(P: ProcessRecord, t: float) -> int:
    i = int(round(t / P.dt))
    if abs(t - i * P.dt) > 1e-9 * max(P.dt, abs(t)) or not 0 <= i <= P.steps:
        raise ValueError(f"time {t} is not on the record's grid")
    return i


def restrict(P: ProcessRecord, t1: float, t2: float) -> ProcessRecord:
    """The part of ``P`` on ``[t1, t2]``, re-based to start at t = 0."""
    i1, i2 = _index(P, t1), _index(P, t2)
    if i2 < i1:
        raise ValueError("t2 must not precede t1")
    return ProcessRecord(
        P.model,
        P.dt,
        P.snapshots[i1 : i2 + 1],
        {k: v[i1:i2] for k, v in P.channels.items()},
        {k: v[i1 : i2 + 1] for k, v in P.functionals.items()},
        P.params,
    )


def records_equal(a: ProcessRecord, b: ProcessRecord) -> bool:
    if a.model != b.model or a.dt != b.dt or a.steps != b.steps:
        return False
    if set(a.channels) != set(b.channels) or set(a.functionals) != set(b.functionals):
        return False
    for sa, sb in zip(a.snapshots, b.snapshots):
        if set(sa) != set(sb) or any(not np.array_equal(sa[k], sb[k]) for k in sa):
            return False
    return all(np.array_equal(a.channels[k], b.channels[k]) for k in a.channels) and all(
        np.array_equal(a.functionals[k], b.functionals[k]) for k in a.functionals
    )


# --------------------------------------------------------------------------
# cycles


def closure_error(P: ProcessRecord) -> float:
    """Sup-norm distance between first and last snapshot relative to the record's scale."""
    scale = state_scale(P)
    if scale == 0.0:
        return 0.0
    return state_distance(P.snapshots[0], P.snapshots[-1]) / scale


def _require_cycle(P: ProcessRecord, tol_cycle: float) -> float:
    err = closure_error(P)
    if err > tol_cycle:
        raise NotACycleError(f"process does not close: closure error {err:.3e} > {tol_cycle:.1e}")
    return err


def _channel(P: ProcessRecord, name: str) -> np.ndarray:
    if name not in P.channels:
        raise ValueError(f"record of model {P.model!r} has no {name!r} channel")
    return P.channels[name]


def cyclic_integral(P: ProcessRecord, integrand: np.ndarray) -> float:
    return float(np.sum(integrand) * P.dt)


def first_law_cycle(P: ProcessRecord, tol_cycle: float = TOL_CYCLE) -> float:
    """``oint [heat + internal power] dt``."""
    _require_cycle(P, tol_cycle)
    return cyclic_integral(P, _channel(P, "heat") + _channel(P, "internal_power"))


def second_law_cycle(P: ProcessRecord, tol_cycle: float = TOL_CYCLE) -> float:
    """``oint A_en^i dt`` (should be <= 0)."""
    _require_cycle(P, tol_cycle)
    return cyclic_integral(P, _channel(P, "entropy_action"))


def dissipation_cycle(P: ProcessRecord, tol_cycle: float = TOL_CYCLE) -> float:
    """``oint P^i dt`` (should be >= 0)."""
    _require_cycle(P, tol_cycle)
    return cyclic_integral(P, _channel(P, "internal_power"))


@dataclass
class CycleReport:
    closure_error: float
    first_law_integral: float | None
    second_law_integral: float | None
    dissipation_integral: float | None
    tolerances: dict
    verdicts: dict

    @property
    def passed(self) -> bool:
        return all(v == "PASS" for v in self.verdicts.values())

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    def text(self) -> str:
        lines = [f"closure error {self.closure_error:.3e}"]
        for law in ("first_law", "second_law", "dissipation"):
            val = getattr(self, f"{law}_integral")
            if val is None:
                continue
            lines.append(
                f"{law:12s} {val:+.6e}  tol {self.tolerances[law]:.3e}  {self.verdicts[law]}"
            )
        return "\n".join(lines)


def roundoff_floor(P: ProcessRecord) -> float:
    """Accumulated round-off of rate channels built as differences of the functionals.

    A rate ``(F1 - F0)/dt`` carries an error of ``eps |F| / dt``; summed over
    ``N`` steps and multiplied by ``dt`` that is ``N eps |F|``.
    """
    size = max((float(np.max(np.abs(v))) for v in P.functionals.values()), default=0.0)
    return 10.0 * max(P.steps, 1) * np.finfo(float).eps * size


def cycle_tolerance(P: ProcessRecord, integrand: np.ndarray, closure: float, C: float = 1.0, order: int = 1) -> float:
    """``C (closure + dt^order) int |integrand| dt`` plus the round-off floor."""
    return C * (closure + P.dt**order) * float(np.sum(np.abs(integrand)) * P.dt) + roundoff_floor(P)


def check_cycle(P: ProcessRecord, tol_cycle: float = TOL_CYCLE, C: float = 1.0, dt_order: int = 1) -> CycleReport:
    """Evaluate every law whose channels the record carries."""
    err = _require_cycle(P, tol_cycle)
    tols, verdicts = {}, {}
    fl = sl = dl = None
    if "heat" in P.channels and "internal_power" in P.channels:
        integrand = P.channels["heat"] + P.channels["internal_power"]
        fl = cyclic_integral(P, integrand)
        tols["first_law"] = cycle_tolerance(P, integrand, err, C, dt_order)
        verdicts["first_law"] = "PASS" if abs(fl) <= tols["first_law"] else "FAIL"
    if "entropy_action" in P.channels:
        a = P.channels["entropy_action"]
        sl = cyclic_integral(P, a)
        tols["second_law"] = cycle_tolerance(P, a, err, C, dt_order)
        verdicts["second_law"] = "PASS" if sl <= tols["second_law"] else "FAIL"
    if "internal_power" in P.channels and P.params.get("isothermal", False):
        pi = P.channels["internal_power"]
        dl = cyclic_integral(P, pi)
        tols["dissipation"] = cycle_tolerance(P, pi, err, C, dt_order)
        verdicts["dissipation"] = "PASS" if dl >= -tols["dissipation"] else "FAIL"
    return CycleReport(err, fl, sl, dl, tols, verdicts)


# --------------------------------------------------------------------------
# potentials


RELATIONS = {"energy": "==", "entropy": ">=", "free_energy": "<="}


@dataclass
class PotentialSeries:
    """Reconstructed potential change since the first snapshot.

    ``relation`` says how the true potential difference compares with
    ``values``: ``==`` for energy, ``>=`` for entropy, ``<=`` for free energy.
    """

    kind: str
    times: np.ndarray
    values: np.ndarray
    relation: str


def reconstruct_potential(P: ProcessRecord, kind: str) -> PotentialSeries:
    if kind == "energy":
        rate = _channel(P, "heat") + _channel(P, "internal_power")
    elif kind == "entropy":
        rate = _channel(P, "entropy_action")
    elif kind == "free_energy":
        rate = _channel(P, "internal_power")
    else:
        raise ValueError(f"kind must be one of {sorted(RELATIONS)}")
    values = np.concatenate([[0.0], np.cumsum(rate) * P.dt])
    return PotentialSeries(kind, P.times, values, RELATIONS[kind])


def potential_consistent(series: PotentialSeries, functional: np.ndarray, tol: float) -> bool:
    """Compare a reconstruction with a model functional (anchored at its first value)."""
    delta = np.asarray(functional) - functional[0]
    if series.relation == "==":
        return bool(np.all(np.abs(delta - series.values) <= tol))
    if series.relation == ">=":
        return bool(np.all(series.values <= delta + tol))
    return bool(np.all(delta <= series.values + tol))


# --------------------------------------------------------------------------
# virtual powers and entropy actions


def trig_field(grid: Grid, rng: np.random.Generator, modes: int = 3) -> np.ndarray:
    """Random smooth trigonometric polynomial of unit sup-norm."""
    X = grid.coords()
    out = np.zeros(grid.shape)
    for _ in range(2 * modes):
        phase = rng.uniform(0, 2 * np.pi)
        arg = phase
        for x, L in zip(X, grid.length):
            arg = arg + 2 * np.pi * rng.integers(0, modes + 1) * x / L
        out += rng.standard_normal() * np.cos(arg)
    m = np.max(np.abs(out))
    return out / m if m > 0 else out


def virtual_pairs(grid: Grid, n: int = 20, seed: int = 0, theta_ref: float = 1.0):
    """``n`` seeded pairs ``(v_tilde, w_tilde = 1/theta_tilde)``."""
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        v = trig_field(grid, rng)
        theta = theta_ref * (1.0 + 0.3 * trig_field(grid, rng))
        pairs.append((v, 1.0 / theta))
    return pairs


def mechanical_imbalance(parts: dict, v: np.ndarray, grid: Grid) -> float:
    """Internal minus external virtual power for one virtual velocity."""
    gv = grad(v, grid)
    internal = parts["rho_udd"] * v + inner(parts["T2"], gv, grid)
    if parts.get("T3") is not None:
        internal = internal + inner(parts["T3"], grad2(v, grid), grid)
    external = parts.get("rho_f", 0.0) * v
    return volume_integral(internal - external, grid)


def entropy_imbalance(parts: dict, w: np.ndarray, grid: Grid) -> float:
    """Internal minus external virtual entropy action for one virtual coldness."""
    gw = grad(w, grid)
    internal = parts["h"] * w - inner(parts["q1"], gw, grid)
    if parts.get("q2") is not None:
        internal = internal - inner(parts["q2"], grad2(w, grid), grid)
    external = parts.get("r", 0.0) * w
    return volume_integral(internal - external, grid)


def virtual_balance_residual(parts: dict | None, grid: Grid, n_pairs: int = 20, seed: int = 0, theta_ref: float = 1.0):
    """Worst imbalance over ``n_pairs`` random virtual pairs.

    ``parts`` is a model's second-grade decomposition: mechanical keys
    ``rho_udd, T2, T3, rho_f`` and/or thermal keys ``h, q1, q2, r``.
    Returns ``{"mechanical": x | None, "entropy": y | None}``, or None when
    the model has no decomposition (not applicable).
    """
    if not parts:
        return None
    pairs = virtual_pairs(grid, n_pairs, seed, theta_ref)
    mech = ent = None
    if "rho_udd" in parts:
        mech = max(abs(mechanical_imbalance(parts, v, grid)) for v, _ in pairs)
    if "h" in parts:
        ent = max(abs(entropy_imbalance(parts, w, grid)) for _, w in pairs)
    return {"mechanical": mech, "entropy": ent}
