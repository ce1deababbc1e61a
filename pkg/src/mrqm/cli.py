"""Command-line front door.

Subcommands parse a JSON config, dispatch to the engines and emit CSV
and JSON artifacts plus a run manifest (schema ``mrqm-manifest/1``).
All files are written atomically (temp file + rename) and reruns with
identical inputs produce byte-identical outputs.

Exit codes: 0 ok, 2 config error, 3 numerical/singular failure,
4 violated precondition.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (ConfigError, IntegrationError, MrqmError,
                     PreconditionError, SingularResponseError)
from .model import (SystemParams, derive_params, make_pulse, sample_atoms)
from .spectral import (CSV_COLUMNS, CombVariant, frequency_grid,
                       response_rows, response_table)
from .matching import bandwidth, matched_params, solve_matching
from .dynamics import (TRAJECTORY_CSV_COLUMNS, build_system, integrate,
                       run_echo, storage_efficiency)
from .sweep import SweepConfig, optimize_bandwidth, run_sweep

MANIFEST_SCHEMA = "mrqm-manifest/1"


# ---------------------------------------------------------------------------
# Atomic IO helpers
# ---------------------------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path: Path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _system_from(cfg: dict) -> SystemParams:
    try:
        sysd = dict(cfg["system"])
    except KeyError as exc:
        raise ConfigError("config needs a 'system' section") from exc
    if "T1" in sysd and sysd["T1"] is None:
        sysd["T1"] = math.inf
    try:
        return SystemParams(**sysd)
    except TypeError as exc:
        raise ConfigError(f"bad system parameters: {exc}") from exc


def _pulse_from(cfg: dict):
    pd = cfg.get("pulse", {})
    return make_pulse(shape=pd.get("shape", "gaussian"),
                      W_in=pd.get("W_in", 1.0),
                      dt_s=pd.get("dt_s", 1.0),
                      t0=pd.get("t0", 0.0),
                      carrier_offset=pd.get("carrier_offset", 0.0))


def _grid_opts(cfg: dict, args) -> tuple:
    gd = cfg.get("grid", {})
    n = args.grid if args.grid else gd.get("points", 4001)
    span = args.span if args.span else gd.get("span", 1.5)
    if n < 2:
        raise ConfigError("grid must have at least 2 points")
    return int(n), float(span)


def _variant(cfg: dict, args) -> CombVariant:
    name = args.variant or cfg.get("variant", "f1")
    return CombVariant.parse(name)


def _force_chi(cfg: dict, args) -> bool:
    return bool(args.force_chi_one or cfg.get("force_chi_one", False))


def _derived_echo(dp) -> dict:
    return {
        "delta_in": dp.delta_in, "delta_in_a": dp.delta_in_a,
        "gamma_a0": dp.gamma_a0, "gamma_sigma": dp.gamma_sigma,
        "chi_tilde": dp.chi_tilde, "chi": dp.chi, "tau": dp.tau,
        "comb_frequencies": list(dp.comb_frequencies),
    }


def _family_curves(base: SystemParams, family) -> list:
    """Expand a curve family: one field with a value list, or several
    fields zipped against rows of values."""
    import dataclasses
    if not family:
        return [("base", base)]
    fields = family.get("fields") or [family["field"]]
    for f in fields:
        if f not in SystemParams.__dataclass_fields__:
            raise ConfigError(f"unknown family field {f!r}")
    rows = family["values"]
    out = []
    for row in rows:
        vals = row if isinstance(row, (list, tuple)) else [row]
        if len(vals) != len(fields):
            raise ConfigError("family row length does not match fields")
        label = ",".join(f"{f}={v:g}" for f, v in zip(fields, vals))
        out.append((label, dataclasses.replace(base,
                                               **dict(zip(fields, vals)))))
    return out


class _Run:
    """Collects output paths and writes the manifest at the end."""

    def __init__(self, subcommand: str, config_path: str, outdir: str):
        self.subcommand = subcommand
        self.config_path = config_path
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        with open(config_path, "rb") as fh:
            self.input_hash = hashlib.sha256(fh.read()).hexdigest()

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.outdir / name

    def finish(self) -> None:
        manifest = {
            "schema": MANIFEST_SCHEMA,
            "subcommand": self.subcommand,
            "config": str(self.config_path),
            "out": str(self.outdir),
            "seedless_deterministic": True,
            "version": __version__,
            "input_sha256": self.input_hash,
            "outputs": sorted(self.outputs),
        }
        write_json(self.outdir / "manifest.json", manifest)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_reflect(args) -> int:
    cfg = _load_config(args.config)
    run = _Run("reflect", args.config, args.out)
    base = _system_from(cfg)
    variant = _variant(cfg, args)
    force_chi = _force_chi(cfg, args)
    n, span = _grid_opts(cfg, args)
    match_cfg = cfg.get("matching", {"impedance": True, "spectral": True})
    curve_params = _family_curves(base, cfg.get("family"))
    curves = []
    for i, (label, p) in enumerate(curve_params):
        dp = derive_params(p, force_chi_one=force_chi)
        p, sol = matched_params(p, dp, variant,
                                impedance=match_cfg.get("impedance", True),
                                spectral=match_cfg.get("spectral", True))
        grid = frequency_grid(dp, n, span)
        resp = response_table(p, dp, grid, variant)
        fname = f"reflect_{i:02d}.csv"
        write_csv(run.path(fname), CSV_COLUMNS, response_rows(resp))
        curves.append({"file": fname, "label": label,
                       "match": sol.as_dict(), "derived": _derived_echo(dp)})
    write_json(run.path("reflect.json"), {"curves": curves,
                                          "variant": variant.value})
    run.finish()
    return 0


def cmd_match(args) -> int:
    cfg = _load_config(args.config)
    run = _Run("match", args.config, args.out)
    p = _system_from(cfg)
    variant = _variant(cfg, args)
    dp = derive_params(p, force_chi_one=_force_chi(cfg, args))
    match_cfg = cfg.get("matching", {"impedance": True, "spectral": True})
    sol = solve_matching(p, dp, variant,
                         impedance=match_cfg.get("impedance", True),
                         spectral=match_cfg.get("spectral", True))
    out = sol.as_dict()
    out["derived"] = _derived_echo(dp)
    write_json(run.path("match.json"), out)
    run.finish()
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_bandwidth(args) -> int:
    cfg = _load_config(args.config)
    run = _Run("bandwidth", args.config, args.out)
    p = _system_from(cfg)
    variant = _variant(cfg, args)
    dp = derive_params(p, force_chi_one=_force_chi(cfg, args))
    match_cfg = cfg.get("matching", {})
    if match_cfg:
        p, _ = matched_params(p, dp, variant,
                              impedance=match_cfg.get("impedance", True),
                              spectral=match_cfg.get("spectral", True))
    n, span = _grid_opts(cfg, args)
    eps = cfg.get("bandwidth", {}).get("epsilon", 0.01)
    grid = frequency_grid(dp, n, span)
    from .spectral import reflection
    rep = bandwidth(grid, reflection(p, dp, grid, variant), eps)
    out = {"epsilon": rep.epsilon, "width": rep.width,
           "interval": [rep.lo, rep.hi], "kappa": p.kappa, "g": p.g}
    write_json(run.path("bandwidth.json"), out)
    run.finish()
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _build_matched_system(cfg, args, need_atoms=True):
    p = _system_from(cfg)
    variant = _variant(cfg, args)
    force_chi = _force_chi(cfg, args)
    dp = derive_params(p, force_chi_one=force_chi)
    dyn = cfg.get("dynamics", {})
    if dyn.get("match", True):
        match_cfg = cfg.get("matching", {"impedance": True, "spectral": True})
        p, _ = matched_params(p, dp, variant,
                              impedance=match_cfg.get("impedance", True),
                              spectral=match_cfg.get("spectral", True))
    nodes = int(dyn.get("nodes", 201))
    sampling = sample_atoms(p.delta_in_atomic, nodes) if need_atoms and nodes > 0 else None
    return p, dp, build_system(p, dp, sampling), dyn


def cmd_dynamics(args) -> int:
    cfg = _load_config(args.config)
    run = _Run("dynamics", args.config, args.out)
    pulse = _pulse_from(cfg)
    p, dp, sysm, dyn = _build_matched_system(cfg, args)
    t_end = dyn.get("t_end")
    if t_end is None:
        tail = 3.0 / dp.gamma_sigma if dp.gamma_sigma > 0 else 2.0 * dp.tau
        t_end = pulse.t0 + 3.0 * pulse.dt_s + tail
    traj = integrate(sysm, pulse, (0.0, float(t_end)),
                     rtol=dyn.get("rtol", 1e-9), atol=dyn.get("atol", 1e-12),
                     record_dt=dyn.get("record_dt"))
    write_csv(run.path("trajectory.csv"), TRAJECTORY_CSV_COLUMNS,
              traj.csv_rows())
    out = {
        "kappa": p.kappa, "g": p.g,
        "storage_efficiency": (storage_efficiency(traj)
                               if traj.E_in[-1] > 0 else None),
        "ledger_max_residual": float(np.abs(traj.ledger_residual()).max()),
        "n_steps": traj.n_steps, "n_rejected": traj.n_rejected,
        "final_P_a": float(traj.P_a[-1]), "final_P_M": float(traj.P_M[-1]),
    }
    write_json(run.path("dynamics.json"), out)
    run.finish()
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_echo(args) -> int:
    cfg = _load_config(args.config)
    run = _Run("echo", args.config, args.out)
    pulse = _pulse_from(cfg)
    p, dp, sysm, dyn = _build_matched_system(cfg, args)
    echo_cfg = cfg.get("echo", {})
    t_reph = echo_cfg.get("t_rephase", pulse.t0 + dp.tau / 2.0)
    traj, report = run_echo(sysm, pulse, float(t_reph),
                            t_end=echo_cfg.get("t_end"),
                            rtol=dyn.get("rtol", 1e-9),
                            atol=dyn.get("atol", 1e-12),
                            record_dt=dyn.get("record_dt"))
    write_csv(run.path("trajectory.csv"), TRAJECTORY_CSV_COLUMNS,
              traj.csv_rows())
    out = {
        "kappa": p.kappa, "g": p.g,
        "t_rephase": report.t_rephase, "t_echo": report.t_echo,
        "window": list(report.window),
        "echo_energy": report.echo_energy,
        "efficiency": report.efficiency,
        "predicted_efficiency": report.predicted,
        "measured_center": report.measured_center,
        "ledger_max_residual": float(np.abs(traj.ledger_residual()).max()),
    }
    write_json(run.path("echo.json"), out)
    run.finish()
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    run = _Run("sweep", args.config, args.out)
    base = _system_from(cfg)
    sw = cfg.get("sweep")
    if not sw or "axes" not in sw:
        raise ConfigError("config needs sweep.axes")
    scfg = SweepConfig(
        base=base,
        axes=[(name, list(values)) for name, values in sw["axes"]],
        impedance=sw.get("impedance", True),
        spectral=sw.get("spectral", True),
        variant=_variant(cfg, args),
        epsilon=sw.get("epsilon", 0.01),
        force_chi_one=_force_chi(cfg, args),
        grid_points=sw.get("grid_points", 2001),
        grid_span=sw.get("grid_span", 1.5))
    res = run_sweep(scfg, n_jobs=int(sw.get("n_jobs", 1)))
    write_csv(run.path("sweep.csv"), res.csv_header(), res.csv_rows())
    write_json(run.path("sweep_summary.json"), res.summary())
    run.finish()
    print(json.dumps(res.summary(), indent=2, sort_keys=True))
    return 0


def cmd_optimize(args) -> int:
    cfg = _load_config(args.config)
    run = _Run("optimize", args.config, args.out)
    p = _system_from(cfg)
    dp = derive_params(p, force_chi_one=_force_chi(cfg, args))
    oc = cfg.get("optimize", {})
    bounds = oc.get("bounds")
    if not bounds:
        raise ConfigError("config needs optimize.bounds with kappa and g ranges")
    res = optimize_bandwidth(
        p, dp, epsilon=oc.get("epsilon", 0.01),
        bounds={k: tuple(v) for k, v in bounds.items()},
        variant=_variant(cfg, args), budget=int(oc.get("budget", 200)))
    out = {"kappa": res.kappa, "g": res.g, "bandwidth": res.bandwidth,
           "u0_sq": res.u0_sq, "evaluations": res.evaluations,
           "boundary_pinned": res.boundary_pinned,
           "analytic_bandwidth": res.analytic_bandwidth}
    write_json(run.path("optimize.json"), out)
    run.finish()
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_check(args) -> int:
    """Fast self-check battery over every module's core invariants."""
    from . import selfcheck
    passed, failed, lines = selfcheck.run_all()
    for line in lines:
        print(line)
    print(f"{passed} passed, {failed} failed")
    return 0 if failed == 0 else 3


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="mrqm",
        description="Multiresonator quantum memory: spectra, matching, "
                    "time-domain oracle, sweeps")
    sub = ap.add_subparsers(dest="cmd", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON parameter document")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--variant", choices=[v.value for v in CombVariant],
                        help="comb frequency-distribution variant")
    common.add_argument("--force-chi-one", action="store_true",
                        help="disable dispersive line pulling (chi = 1)")
    common.add_argument("--grid", type=int, help="frequency grid points")
    common.add_argument("--span", type=float,
                        help="grid half-span in units of delta_in")
    for name, fn in [("reflect", cmd_reflect), ("match", cmd_match),
                     ("bandwidth", cmd_bandwidth), ("dynamics", cmd_dynamics),
                     ("echo", cmd_echo), ("sweep", cmd_sweep),
                     ("optimize", cmd_optimize)]:
        sp = sub.add_parser(name, parents=[common])
        sp.set_defaults(fn=fn)
    sp = sub.add_parser("check", help="run the built-in property suite")
    sp.set_defaults(fn=cmd_check)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SingularResponseError, IntegrationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return 4
    except MrqmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
