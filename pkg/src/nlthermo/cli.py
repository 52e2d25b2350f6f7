"""Command-line harness: ``nlthermo run|validate|list|batch``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import Scenario, load_config
from .errors import ConfigError
from .runner import RunResult, run

SCENARIO_DIR = Path(__file__).parent / "scenarios"
DEFAULT_ROOT = "nlt_runs"

# (column, source) per model; source is ("fn"|"ch"|"trace", key)
COLUMNS = {
    "gk": [
        ("entropy", ("fn", "entropy")),
        ("energy", ("fn", "energy")),
        ("heat", ("ch", "heat")),
        ("entropy_action", ("ch", "entropy_action")),
        ("external_action", ("ch", "external_action")),
        ("production", ("ch", "production")),
        ("second_law_min", ("ch", "second_law_min")),
        ("decay_error", ("trace", "decay_error")),
    ],
    "memory_heat": [
        ("psi2", ("fn", "psi2")),
        ("heat", ("ch", "heat")),
        ("entropy_action", ("ch", "entropy_action")),
        ("psi2_residual", ("ch", "psi2_residual")),
    ],
    "cahn_hilliard": [
        ("mass", ("fn", "mass")),
        ("free_energy", ("fn", "free_energy")),
        ("dissipation", ("ch", "dissipation")),
        ("internal_power", ("ch", "internal_power")),
        ("dual_power", ("ch", "dual_power")),
        ("heat", ("ch", "heat")),
    ],
    "plate": [
        ("kinetic", ("fn", "kinetic")),
        ("potential", ("fn", "internal_energy")),
        ("internal_power", ("ch", "internal_power")),
        ("external_power", ("ch", "external_power")),
        ("balance", ("ch", "balance")),
        ("dual_power", ("ch", "dual_power")),
    ],
    "dielectric": [
        ("energy", ("fn", "energy")),
        ("internal_power", ("ch", "internal_power")),
        ("classical_power", ("ch", "classical_power")),
        ("residual", ("ch", "heat_difference")),
        ("pointwise_max", ("ch", "heat_difference_max")),
        ("external_power", ("ch", "external_power")),
    ],
}


def _fmt(x) -> str:
    return format(float(x), ".17g")


def bundled_scenarios() -> dict[str, Path]:
    return {p.stem: p for p in sorted(SCENARIO_DIR.glob("*.cfg"))}


def resolve(target: str) -> Path:
    path = Path(target)
    if path.exists():
        return path
    bundled = bundled_scenarios()
    if target in bundled:
        return bundled[target]
    falsify = SCENARIO_DIR / "falsification" / f"{target}.cfg"
    if falsify.exists():
        return falsify
    raise ConfigError(f"no config file or bundled scenario named {target!r}")


def output_root(sc: Scenario) -> Path:
    env = os.environ.get("NLT_OUTPUT_DIR")
    if env:
        return Path(env)
    return Path(sc.get("output.dir", DEFAULT_ROOT))


def timeseries_csv(res: RunResult) -> str | None:
    P = res.record
    if P is None:
        return None
    cols = [(name, src) for name, src in COLUMNS[P.model] if src[0] != "trace" or src[1] in res.traces]
    every = res.scenario["output.every"]
    lines = [",".join(["t"] + [c for c, _ in cols])]
    for i in range(1, P.steps + 1):
        if i % every and i != P.steps:
            continue
        row = [_fmt(i * P.dt)]
        for _, (kind, key) in cols:
            if kind == "fn":
                row.append(_fmt(P.functionals[key][i]))
            elif kind == "ch":
                row.append(_fmt(P.channels[key][i - 1]))
            else:
                row.append(_fmt(res.traces[key][i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def report_dict(res: RunResult, manifest: list[str]) -> dict:
    sc = res.scenario
    return {
        "scenario": sc.name,
        "model": sc.model,
        "source": Path(sc.source).name if sc.source else None,
        "config": _jsonable(sc.echo()),
        "checks": _jsonable(res.checks),
        "failed": sorted(k for k, c in res.checks.items() if c["verdict"] == "FAIL"),
        "error": res.error,
        "notes": res.notes,
        "traces": _jsonable(res.traces),
        "outputs": manifest,
        "verdict": "PASS" if res.passed else "FAIL",
    }


def write_outputs(res: RunResult, root: Path) -> Path:
    out = root / res.scenario.name
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    csv = timeseries_csv(res)
    if csv is not None:
        (out / "timeseries.csv").write_text(csv)
        manifest.append("timeseries.csv")
        (out / "record.json").write_text(res.record.to_json() + "\n")
        manifest.append("record.json")
    manifest.append("report.json")
    doc = report_dict(res, manifest)
    (out / "report.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return out


def summary(res: RunResult, elapsed: float | None = None) -> str:
    lines = [f"scenario {res.scenario.name} ({res.scenario.model})"]
    if res.error:
        lines.append(f"  error: {res.error}")
    for note in res.notes:
        lines.append(f"  note: {note}")
    for name, c in res.checks.items():
        val = "-" if c["value"] is None else f"{c['value']:.3e}" if isinstance(c["value"], float) else c["value"]
        tol = "-" if c["tol"] is None else f"{c['tol']:.3e}" if isinstance(c["tol"], float) else c["tol"]
        lines.append(f"  {c['verdict']:4s} {name:16s} value {val:>10s}  tol {tol:>10s}  {c['detail']}")
    tail = f"  => {'PASS' if res.passed else 'FAIL'}"
    if elapsed is not None:
        tail += f"  ({elapsed:.2f} s)"
    lines.append(tail)
    return "\n".join(lines)


def run_scenario(target, seed: int | None = None, root: Path | None = None) -> tuple[RunResult, Path, float]:
    sc = load_config(resolve(str(target)))
    if seed is not None:
        sc = replace(sc, values={**sc.values, "seed": seed})
    t0 = time.perf_counter()
    res = run(sc)
    elapsed = time.perf_counter() - t0
    out = write_outputs(res, root or output_root(sc))
    return res, out, elapsed


def _batch_worker(args):
    path, seed, root = args
    try:
        res, out, elapsed = run_scenario(path, seed, root)
    except ConfigError as exc:
        return str(path), False, f"{path}: {exc}"
    return str(path), res.passed, summary(res, elapsed) + f"\n  outputs in {out}"


def cmd_run(ns) -> int:
    try:
        res, out, elapsed = run_scenario(ns.config, ns.seed, Path(ns.out) if ns.out else None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(summary(res, elapsed))
    print(f"  outputs in {out}")
    return 0 if res.passed else 1


def cmd_validate(ns) -> int:
    try:
        sc = load_config(resolve(ns.config))
    except ConfigError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 2
    print(f"ok: {sc.name} ({sc.model}); checks: {', '.join(sc.checks)}")
    return 0


def cmd_list(ns) -> int:
    for name, path in bundled_scenarios().items():
        try:
            sc = load_config(path)
            print(f"{name:24s} {sc.model:14s} {', '.join(sc.checks)}")
        except ConfigError as exc:
            print(f"{name:24s} (invalid: {exc})")
    return 0


def cmd_batch(ns) -> int:
    paths = sorted(Path(ns.dir).glob("*.cfg"))
    if not paths:
        print(f"no .cfg files in {ns.dir}", file=sys.stderr)
        return 2
    root = Path(ns.out) if ns.out else None
    jobs = [(p, ns.seed, root) for p in paths]
    if ns.jobs > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            results = list(pool.map(_batch_worker, jobs))
    else:
        results = [_batch_worker(j) for j in jobs]
    for _, _, text in results:
        print(text)
    failed = [p for p, ok, _ in results if not ok]
    print(f"{len(results) - len(failed)}/{len(results)} scenarios passed")
    return 0 if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlthermo", description="Run thermodynamic consistency scenarios.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one config file or bundled scenario")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="output root (NLT_OUTPUT_DIR and output.dir otherwise)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="parse and check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("list", help="list bundled scenarios")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("batch", help="run every .cfg in a directory")
    p.add_argument("dir")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_batch)
    return ap


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
