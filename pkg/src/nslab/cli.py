"""Command line: scenario runner, verification-suite driver, and refinement
ladders.

Verbs:

* ``nslab run --config cfg.json [--out DIR] [--seed N] [--threads K]``
  solve + monitors; writes manifest.json, reports/*.{json,csv},
  figures/*.png, snapshots/*.  Exit 0 iff every asserting monitor passes,
  1 on monitor failure, 2 on config errors, 3 on numerical abort.
* ``nslab check SUITE [--out DIR]`` with SUITE in
  {projector, calculus, inequalities, identities, all}; fixed seeds;
  exit 0/1.
* ``nslab convergence --config cfg.json [--out DIR]`` runs a dt or n ladder
  and emits CSV/JSON/PNG plus the fitted order.

Environment overrides: NSLAB_OUT, NSLAB_SEED, NSLAB_THREADS mirror the
corresponding flags (flags win).
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys

import numpy as np

from . import __version__
from .checks import run_suite
from .convergence import dt_ladder, expm_oracle_ladder, grid_ladder_lp_norm
from .inequalities import young_fuzz, binomial_fuzz
from .monitors import (
    energy_estimate_check,
    energy_identity_residual,
    higher_order_gronwall_check,
    infinite_horizon_monitor,
    l2r_identity_residual,
    linearized_energy_bound,
    lions_identity_check,
    lps_diagnostic,
)
from .nonlinear import DealiasPolicy
from .norms import BochnerExponents, norm_table
from .reporting import write_fuzz_report, write_manifest, write_norm_table, write_report
from .solver import (
    BlowupError,
    ProblemData,
    SCHEMES,
    SolverConfig,
    content_hash,
    make_forcing,
    make_initial_data,
    save_checkpoint,
    solve_linearized,
    solve_navier_stokes,
    solve_stokes,
)
from .spectral import GridSpec, SpectralVectorField, set_fft_workers, write_snapshot

EXIT_OK = 0
EXIT_MONITOR_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ABORT = 3

MONITOR_NAMES = (
    "energy_identity",
    "energy_estimate",
    "linearized_energy_bound",
    "lps",
    "l2r_identity",
    "higher_order_gronwall",
    "lions_identity",
    "infinite_horizon",
)

INITIAL_KINDS = ("single_mode", "taylor_green", "random_band_limited", "decaying_spectrum")
FORCING_KINDS = ("none", "constant", "cosine", "power_decay")
SOLVER_KINDS = ("stokes", "linearized", "navier_stokes")


class ConfigError(ValueError):
    """The configuration file cannot be turned into a run."""


class RunConfig:
    """Validated run configuration; round-trips through ``as_dict``."""

    def __init__(self, raw: dict):
        self.raw = copy.deepcopy(raw)
        self._validate()

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls(raw)

    def as_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    # validation -----------------------------------------------------------

    def _validate(self):
        raw = self.raw
        for section in ("grid", "physics", "scheme"):
            if section not in raw:
                raise ConfigError(f"missing config section {section!r}")
        g = raw["grid"]
        try:
            GridSpec(int(g["n"]), float(g.get("box_length", 2 * np.pi)),
                     float(g.get("dealias", 2.0 / 3.0)))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad grid section: {exc}") from exc
        p = raw["physics"]
        if not (float(p.get("mu", 0)) > 0 and float(p.get("T", 0)) > 0):
            raise ConfigError("physics.mu and physics.T must be positive")
        s = raw["scheme"]
        if s.get("name", "integrating-factor-rk2") not in SCHEMES:
            raise ConfigError(f"unknown scheme {s.get('name')!r}; choose from {SCHEMES}")
        if not float(s.get("dt", 0)) > 0:
            raise ConfigError("scheme.dt must be positive")
        if float(s["dt"]) > float(p["T"]):
            raise ConfigError("scheme.dt must not exceed physics.T")
        kind = raw.get("solver", "navier_stokes")
        if kind not in SOLVER_KINDS:
            raise ConfigError(f"unknown solver {kind!r}; choose from {SOLVER_KINDS}")
        initial = raw.get("initial", {"kind": "single_mode"})
        if initial.get("kind") not in INITIAL_KINDS:
            raise ConfigError(
                f"unknown initial kind {initial.get('kind')!r}; choose from {INITIAL_KINDS}"
            )
        if initial.get("kind") == "decaying_spectrum":
            beta = initial.get("params", {}).get("beta")
            if beta is None or float(beta) <= 1.5:
                raise ConfigError("decaying_spectrum initial data requires beta > 3/2")
        forcing = raw.get("forcing", {"kind": "none"})
        if forcing.get("kind", "none") not in FORCING_KINDS:
            raise ConfigError(
                f"unknown forcing kind {forcing.get('kind')!r}; choose from {FORCING_KINDS}"
            )
        if forcing.get("kind") == "power_decay":
            if forcing.get("decay_gamma") is None:
                raise ConfigError("power_decay forcing requires decay_gamma")
        if kind == "linearized" and "w" not in raw:
            raise ConfigError("linearized solver requires a 'w' section")
        for mon in raw.get("monitors", []):
            self._validate_monitor(mon)

    @staticmethod
    def _validate_monitor(mon: dict):
        name = mon.get("name")
        if name not in MONITOR_NAMES:
            raise ConfigError(
                f"unknown monitor {name!r}; choose from {MONITOR_NAMES}"
            )
        if name == "lps":
            rs = mon.get("r_values", [4.0])
            bad = [r for r in rs if not float(r) > 3.0]
            if bad:
                raise ConfigError(
                    f"lps monitor requires r > 3 (scaling 2/s + 3/r = 1 with r > 3); got {bad}"
                )
        if name == "l2r_identity" and not float(mon.get("r", 2.0)) > 1.5:
            raise ConfigError("l2r_identity monitor requires r > 3/2")
        if name == "higher_order_gronwall":
            if not 0 <= int(mon.get("j", 0)) <= 2:
                raise ConfigError("higher_order_gronwall needs j in {0, 1, 2}")
            if not float(mon.get("r", 4.0)) > 3.0:
                raise ConfigError("higher_order_gronwall requires r > 3")
            if not float(mon.get("c", 1.0)) > 0:
                raise ConfigError("higher_order_gronwall requires c > 0")

    # builders --------------------------------------------------------------

    def build_grid(self) -> GridSpec:
        g = self.raw["grid"]
        return GridSpec(int(g["n"]), float(g.get("box_length", 2 * np.pi)),
                        float(g.get("dealias", 2.0 / 3.0)))

    def build_data(self, grid: GridSpec, seed_override=None) -> ProblemData:
        initial = self.raw.get("initial", {"kind": "single_mode"})
        params = dict(initial.get("params", {}))
        if seed_override is not None:
            params["seed"] = int(seed_override)
        u0 = make_initial_data(
            initial["kind"],
            grid,
            seed=int(params.get("seed", 0)),
            amplitude=float(params.get("amplitude", 1.0)),
            beta=params.get("beta"),
            band_fraction=params.get("band_fraction"),
        )
        fsec = self.raw.get("forcing", {"kind": "none"})
        fparams = dict(fsec.get("params", {}))
        forcing = make_forcing(
            fsec.get("kind", "none"),
            grid,
            seed=int(fparams.get("seed", params.get("seed", 0))),
            amplitude=float(fparams.get("amplitude", 1.0)),
            decay_gamma=fsec.get("decay_gamma"),
            omega=float(fparams.get("omega", 1.0)),
            field_kind=fparams.get("field_kind", "single_mode"),
        )
        phys = self.raw["physics"]
        return ProblemData(u0=u0, forcing=forcing, mu=float(phys["mu"]), T=float(phys["T"]))

    def build_w(self, grid: GridSpec):
        spec = self.raw.get("w")
        if spec is None:
            return None
        kind = spec.get("kind")
        params = dict(spec.get("params", {}))
        if kind == "zero":
            return None
        if kind == "constant_vector":
            comps = params.get("components", [0.0, 0.0, 0.0])
            if len(comps) != 3:
                raise ConfigError("constant_vector w needs three components")
            coeffs = np.zeros((3,) + grid.shape, dtype=np.complex128)
            for i, c in enumerate(comps):
                coeffs[i, 0, 0, 0] = float(c)
            return SpectralVectorField.from_stack(grid, coeffs)
        if kind in INITIAL_KINDS:
            return make_initial_data(
                kind,
                grid,
                seed=int(params.get("seed", 1)),
                amplitude=float(params.get("amplitude", 1.0)),
                beta=params.get("beta"),
            )
        raise ConfigError(f"unknown w kind {kind!r}")

    def build_solver_config(self) -> SolverConfig:
        s = self.raw["scheme"]
        monitors = [m.get("name") for m in self.raw.get("monitors", [])]
        needs_dudt = "lions_identity" in monitors
        return SolverConfig(
            dt=float(s["dt"]),
            scheme=s.get("name", "integrating-factor-rk2"),
            snapshot_every=int(s.get("snapshot_every", 1)),
            dealias=DealiasPolicy(float(self.raw["grid"].get("dealias", 2.0 / 3.0))),
            store_dudt=bool(s.get("store_dudt", needs_dudt)),
            store_pressure=bool(s.get("store_pressure", False)),
        )


def _run_monitors(config: RunConfig, traj, data, w) -> list:
    reports = []
    for mon in config.raw.get("monitors", []):
        name = mon["name"]
        if name == "energy_identity":
            reports.append(
                energy_identity_residual(traj, data, tolerance=float(mon.get("tolerance", 1e-6)))
            )
        elif name == "energy_estimate":
            reports.append(
                energy_estimate_check(traj, data, tolerance=float(mon.get("tolerance", 0.0)))
            )
        elif name == "linearized_energy_bound":
            reports.append(
                linearized_energy_bound(
                    traj, data, w, tolerance=float(mon.get("tolerance", 0.0))
                )
            )
        elif name == "lps":
            reports.append(lps_diagnostic(traj, [float(r) for r in mon.get("r_values", [4.0])]))
        elif name == "l2r_identity":
            reports.append(
                l2r_identity_residual(
                    traj,
                    data,
                    r=float(mon.get("r", 2.0)),
                    tolerance=float(mon.get("tolerance", 1e-4)),
                )
            )
        elif name == "higher_order_gronwall":
            reports.append(
                higher_order_gronwall_check(
                    traj,
                    data,
                    j=int(mon.get("j", 0)),
                    exps=BochnerExponents.lps(float(mon.get("r", 4.0))),
                    c_supplied=float(mon.get("c", 1.0)),
                    tolerance=float(mon.get("tolerance", 0.0)),
                )
            )
        elif name == "lions_identity":
            reports.append(
                lions_identity_check(traj, tolerance=float(mon.get("tolerance", 1e-6)))
            )
        elif name == "infinite_horizon":
            reports.append(
                infinite_horizon_monitor(traj, data, tolerance=float(mon.get("tolerance", 0.0)))
            )
    return reports


def _gather_constants(reports) -> list:
    rows = []
    for rep in reports:
        for const in rep.constants:
            rows.append({**const, "monitor": rep.name})
    return rows


def cmd_run(config_path: str, out_dir=None, seed=None, threads=None) -> int:
    try:
        config = RunConfig.load(config_path)
        grid = config.build_grid()
        data = config.build_data(grid, seed_override=seed)
        w = config.build_w(grid)
        solver_cfg = config.build_solver_config()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    if threads:
        set_fft_workers(int(threads))
    out_dir = out_dir or config.raw.get("output", {}).get("directory", "out")
    formats = tuple(config.raw.get("output", {}).get("formats", ["json", "csv", "png"]))

    kind = config.raw.get("solver", "navier_stokes")
    try:
        if kind == "stokes":
            traj = solve_stokes(data, solver_cfg)
        elif kind == "linearized":
            traj = solve_linearized(data, w, solver_cfg)
        else:
            traj = solve_navier_stokes(data, solver_cfg)
    except BlowupError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_ABORT

    reports = _run_monitors(config, traj, data, w)
    for rep in reports:
        write_report(rep, out_dir, formats)
    rows = norm_table(traj, r_values=tuple(config.raw.get("output", {}).get("norm_r_values", [4.0])))
    norm_formats = tuple(f for f in ("csv", "png") if f in formats) or ("csv",)
    write_norm_table(rows, out_dir, formats=norm_formats)

    snap_mode = config.raw.get("output", {}).get("snapshots", "final")
    snap_dir = os.path.join(out_dir, "snapshots")
    if snap_mode in ("final", "all"):
        os.makedirs(snap_dir, exist_ok=True)
        indices = range(len(traj)) if snap_mode == "all" else [len(traj) - 1]
        for i in indices:
            write_snapshot(
                os.path.join(snap_dir, f"velocity_{i:05d}.dat"),
                "velocity",
                float(traj.times[i]),
                grid,
                traj.velocities[i].to_physical(),
            )
        save_checkpoint(snap_dir, traj, config_echo=config.as_dict())

    config_bytes = json.dumps(config.as_dict(), sort_keys=True).encode()
    failed = [rep.name for rep in reports if rep.asserting and not rep.passed]
    manifest = {
        "package_version": __version__,
        "command": "run",
        "config": config.as_dict(),
        "config_hash": content_hash(config_bytes),
        "seed": seed,
        "threads": threads or 1,
        "solver": kind,
        "monitors": [
            {
                "name": rep.name,
                "passed": rep.passed,
                "asserting": rep.asserting,
                "min_margin": rep.min_margin,
            }
            for rep in reports
        ],
        "constants": _gather_constants(reports),
        "failed_monitors": failed,
    }
    write_manifest(manifest, out_dir)

    for rep in reports:
        verdict = "PASS" if rep.passed else ("FAIL" if rep.asserting else "info")
        print(f"{verdict:>4} {rep.name}: min margin {rep.min_margin:.3e}")
    return EXIT_OK if not failed else EXIT_MONITOR_FAILURE


def cmd_check(suite: str, out_dir=None, seed=None) -> int:
    try:
        results = run_suite(suite)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    for res in results:
        mark = "PASS" if res["passed"] else "FAIL"
        print(f"{mark} {res['name']}: worst={res['worst']:.3e} tol={res['tol']:g}")
    if out_dir:
        os.makedirs(os.path.join(out_dir, "reports"), exist_ok=True)
        payload = {"schema": "nslab-check-1", "suite": suite, "results": results}
        with open(os.path.join(out_dir, "reports", f"check_{suite}.json"), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if suite in ("inequalities", "all"):
            base_seed = 2024 if seed is None else int(seed)
            write_fuzz_report(
                young_fuzz(base_seed), os.path.join(out_dir, "reports", "fuzz_young.json")
            )
            write_fuzz_report(
                binomial_fuzz(base_seed + 1),
                os.path.join(out_dir, "reports", "fuzz_binomial.json"),
            )
    bad = [r for r in results if not r["passed"]]
    if bad:
        print(f"{len(bad)} failing properties: {[r['name'] for r in bad]}", file=sys.stderr)
        return EXIT_MONITOR_FAILURE
    return EXIT_OK


def cmd_convergence(config_path: str, out_dir=None, seed=None, threads=None) -> int:
    try:
        config = RunConfig.load(config_path)
        ladder = config.raw.get("ladder")
        if not ladder:
            raise ConfigError("convergence config needs a 'ladder' section")
        values = ladder.get("values", [])
        if len(values) < 3:
            raise ConfigError("ladder needs at least three values")
        grid = config.build_grid()
        data = config.build_data(grid, seed_override=seed)
        w = config.build_w(grid)
        solver_cfg = config.build_solver_config()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    if threads:
        set_fft_workers(int(threads))
    out_dir = out_dir or config.raw.get("output", {}).get("directory", "out")

    quantity = ladder.get("quantity", "dt")
    reference = ladder.get("reference", "finest")
    try:
        if quantity == "dt" and reference == "expm":
            result = expm_oracle_ladder(
                data, w, int(ladder.get("galerkin_modes", 8)), solver_cfg, values
            )
        elif quantity == "dt":
            result = dt_ladder(
                data,
                solver_cfg,
                values,
                kind=config.raw.get("solver", "navier_stokes"),
                w=w,
                ref_refine=int(ladder.get("ref_refine", 8)),
            )
        elif quantity == "n":
            result = grid_ladder_lp_norm(
                lambda X, Y, Z: np.exp(np.sin(X)) * np.cos(Y) + 0.5 * np.sin(2 * Z),
                float(ladder.get("p", 4.0)),
                [int(v) for v in values],
                box_length=grid.box_length,
            )
        else:
            raise ConfigError(f"unknown ladder quantity {quantity!r}")
    except (ValueError, BlowupError) as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    os.makedirs(os.path.join(out_dir, "reports"), exist_ok=True)
    import csv as _csv

    csv_path = os.path.join(out_dir, "reports", "convergence.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow([result["quantity"], "error"])
        for v, e in zip(result["values"], result["errors"]):
            writer.writerow([v, e])
    with open(os.path.join(out_dir, "reports", "convergence.json"), "w") as fh:
        json.dump({"schema": "nslab-convergence-1", **result}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    from .plotting import convergence_figure

    os.makedirs(os.path.join(out_dir, "figures"), exist_ok=True)
    convergence_figure(
        result["values"],
        result["errors"],
        result["fitted_order"],
        os.path.join(out_dir, "figures", "convergence.png"),
        xlabel=result["quantity"],
    )
    print(f"fitted order: {result['fitted_order']:.3f} ({result['reference']})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nslab",
        description="Pseudo-spectral Navier-Stokes laboratory: runs, property "
        "suites, refinement ladders.",
        epilog="Environment overrides: NSLAB_OUT, NSLAB_SEED, NSLAB_THREADS.",
    )
    parser.add_argument("--version", action="version", version=f"nslab {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="solve a configured problem and run its monitors")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out", default=None)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--threads", type=int, default=None)

    check_p = sub.add_parser("check", help="run a named property suite with fixed seeds")
    check_p.add_argument(
        "suite", choices=["projector", "calculus", "inequalities", "identities", "all"]
    )
    check_p.add_argument("--out", default=None)
    check_p.add_argument("--seed", type=int, default=None)

    conv_p = sub.add_parser("convergence", help="run a dt or n refinement ladder")
    conv_p.add_argument("--config", required=True)
    conv_p.add_argument("--out", default=None)
    conv_p.add_argument("--seed", type=int, default=None)
    conv_p.add_argument("--threads", type=int, default=None)
    return parser


def _env_default(args, attr, env, cast):
    if getattr(args, attr, None) is None and os.environ.get(env):
        setattr(args, attr, cast(os.environ[env]))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _env_default(args, "out", "NSLAB_OUT", str)
    _env_default(args, "seed", "NSLAB_SEED", int)
    if hasattr(args, "threads"):
        _env_default(args, "threads", "NSLAB_THREADS", int)
    if args.verb == "run":
        return cmd_run(args.config, args.out, args.seed, args.threads)
    if args.verb == "check":
        return cmd_check(args.suite, args.out, args.seed)
    if args.verb == "convergence":
        return cmd_convergence(args.config, args.out, args.seed, args.threads)
    return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
