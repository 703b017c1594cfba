"""
Command-line entry point.

    gravcat <subcommand> --config FILE [--out DIR] [--seed N] [--set key=value ...]
                         [--format json|table|both]

Subcommands: estimate, trap, simulate-classical, simulate-quantum,
feasibility, optimize. Exit status is 0 on success, 2 for configuration
errors and 1 for computational errors.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import classical_probe as cp
from . import feasibility as fz
from . import quantum_probe as qp
from . import trap_design as td
from .kvfile import KVSyntaxError, parse_kv
from .quantities import (
    DENSITY,
    FORCE,
    LENGTH,
    MASS,
    RATE,
    TIME,
    CURRENT,
    Dimension,
    Quantity,
    UnitError,
    format_quantity,
    parse_quantity,
)

log = logging.getLogger("gravcat")


class ConfigError(Exception):
    """Bad configuration; the message names the file, key and fault."""


@dataclass(frozen=True)
class Field:
    kind: str  # quantity | int | float | str | bool | list
    dim: Dimension | None = None
    required: bool = False
    default: object = None


def Q(dim, required=False, default=None):
    return Field("quantity", dim, required, default)


SCHEMAS: dict[str, dict[str, Field]] = {
    "estimate": {
        "M": Q(MASS), "m": Q(MASS, True), "L": Q(LENGTH, True), "D": Q(LENGTH),
        "R": Q(LENGTH), "a": Q(LENGTH), "rho": Q(DENSITY), "material": Field("str"),
        "sensitivity": Q(FORCE), "materials_file": Field("str"),
    },
    "trap": {
        "material": Field("str", required=True), "I": Q(CURRENT, True), "l": Q(LENGTH, True),
        "R": Q(LENGTH, True), "chi": Field("float", default=0.0),
        "cooling_floor": Q(RATE, default=td.DEFAULT_COOLING_FLOOR),
        "size_factor": Field("float", default=td.DEFAULT_SIZE_FACTOR),
        "materials_file": Field("str"),
    },
    "simulate-classical": {
        "f0": Q(FORCE), "M": Q(MASS), "m": Q(MASS), "L": Q(LENGTH), "y": Q(LENGTH),
        "Gamma": Q(RATE), "nu": Q(RATE), "tau": Q(TIME),
        "dt": Q(TIME, True), "t_max": Q(TIME, True), "n_traj": Field("int", required=True),
        "initial": Field("int", default=-1), "save_trajectories": Field("bool", default=False),
    },
    "simulate-quantum": {
        "m": Q(MASS, True), "omega": Q(RATE, True), "f0": Q(FORCE, True), "nu": Q(RATE, True),
        "n_max": Field("int"), "t_max": Q(TIME, True), "n_times": Field("int", default=2048),
        "initial": Field("str", default="displaced"), "tol": Field("float", default=1e-10),
    },
    "feasibility": {
        "M": Q(MASS), "material": Field("str", default="Pb"), "R": Q(LENGTH, True),
        "L": Q(LENGTH, True), "a": Q(LENGTH, default=1e-6), "proposal": Field("list"),
        "proposals_file": Field("str"), "L_projection": Q(LENGTH, default=100e-9),
        "L_improvement": Field("float", default=10.0), "m_design": Q(MASS, default=4.0e-12),
        "materials_file": Field("str"),
    },
    "optimize": {
        "materials": Field("list", default=["Pb", "Ta"]),
        "R_min": Q(LENGTH, True), "R_max": Q(LENGTH, True),
        "a_min": Q(LENGTH, default=1e-6), "a_max": Q(LENGTH, default=1e-6),
        "L_min": Q(LENGTH, True), "L_max": Q(LENGTH, True), "m": Q(MASS, True),
        "points": Field("int", default=50), "cooling_floor": Q(RATE, default=td.DEFAULT_COOLING_FLOOR),
        "omega_t": Q(RATE), "size_factor": Field("float", default=td.DEFAULT_SIZE_FACTOR),
        "casimir_threshold": Q(LENGTH, default=fz.CASIMIR_THRESHOLD), "materials_file": Field("str"),
    },
}


@dataclass
class RunConfig:
    subcommand: str
    config_path: Path
    out_dir: Path
    seed: int = 0
    overrides: list[tuple[str, str]] = field(default_factory=list)
    fmt: str = "both"


def _convert(source: str, key: str, raw: str, spec: Field):
    try:
        if spec.kind == "quantity":
            q = parse_quantity(raw)
            if q.dim != spec.dim:
                raise ConfigError(f"{source}: key {key!r}: dimension mismatch, expected [{spec.dim}] got [{q.dim}]")
            return q.magnitude
        if spec.kind == "int":
            return int(raw)
        if spec.kind == "float":
            q = parse_quantity(raw)
            return float(q)
        if spec.kind == "bool":
            low = raw.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(f"not a boolean: {raw!r}")
            return low in ("true", "yes", "1")
        if spec.kind == "list":
            return [item.strip() for item in raw.split(",") if item.strip()]
        return raw
    except ConfigError:
        raise
    except (UnitError, ValueError) as exc:
        raise ConfigError(f"{source}: key {key!r}: {exc}") from None


def load_config(path, subcommand: str, overrides=()) -> dict:
    """Read, validate and type a flat ``key = value`` config for ``subcommand``."""
    schema = SCHEMAS[subcommand]
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror or exc})") from None
    try:
        entries = {k: e.value for k, e in parse_kv(text, str(path)).items()}
    except KVSyntaxError as exc:
        raise ConfigError(str(exc)) from None
    for key, value in overrides:
        entries[key] = value
    out = {}
    for key, raw in entries.items():
        if key not in schema:
            raise ConfigError(f"{path}: unknown key {key!r} for '{subcommand}'")
        out[key] = _convert(str(path), key, raw, schema[key])
    for key, spec in schema.items():
        if key not in out:
            if spec.required:
                raise ConfigError(f"{path}: missing required key {key!r}")
            out[key] = spec.default
    return out


# --- formatting helpers -----------------------------------------------------

def fq(value: float, dim: Dimension, unit: str, digits: int = 3) -> str:
    return format_quantity(Quantity(value, dim), unit, digits)


def _csv(header: str, *columns) -> str:
    buf = io.StringIO()
    np.savetxt(buf, np.column_stack(columns), delimiter=",", header=header, comments="", fmt="%.17g")
    return buf.getvalue()


def _table(rows) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def _materials(cfg):
    return td.load_materials(cfg["materials_file"]) if cfg.get("materials_file") else td.MATERIALS


def _material(cfg, path):
    mats = _materials(cfg)
    name = cfg["material"]
    if name not in mats:
        raise ConfigError(f"{path}: key 'material': unknown material {name!r} (known: {', '.join(mats)})")
    return mats[name]


# --- subcommands ------------------------------------------------------------

def cmd_estimate(cfg, run: RunConfig):
    lines, data = [], {}
    rho = cfg["rho"]
    if cfg["material"]:
        rho = _material(cfg, run.config_path).rho
    M = cfg["M"]
    if M is None:
        if rho is None or cfg["R"] is None:
            raise ConfigError(f"{run.config_path}: need M, or R with rho or material")
        M = td.sphere_mass(cfg["R"], rho)
    D = cfg["D"]
    if D is None:
        if cfg["R"] is None or cfg["a"] is None:
            raise ConfigError(f"{run.config_path}: need D, or R and a")
        D = cfg["R"] + cfg["a"]
    f = cp.f0(M, cfg["m"], cfg["L"], D)
    data.update(M_kg=M, m_kg=cfg["m"], L_m=cfg["L"], D_m=D, f0_N=f)
    lines.append(f"M = {fq(M, MASS, 'ng')}")
    lines.append(f"D = {fq(D, LENGTH, 'um')}")
    lines.append(f"f0 = {fq(f, FORCE, 'N', 2)}")
    if rho is not None and cfg["R"] is not None:
        a = cfg["a"] if cfg["a"] is not None else D - cfg["R"]
        fd = fz.f0_density_form(rho, cfg["m"], cfg["L"], a, cfg["R"])
        data["f0_density_form_N"] = fd
        lines.append(f"f0 (density form) = {fq(fd, FORCE, 'N', 2)}")
        guard = fz.casimir_guard(a) if a > 0 else None
        if guard is not None and not guard.ok:
            lines.append("warning: " + guard.message)
            data["casimir"] = guard.status
    if cfg["sensitivity"] is not None:
        gap = fz.sensitivity_gap(f, cfg["sensitivity"])
        data.update(sensitivity_N=cfg["sensitivity"], gap_orders=gap)
        lines.append(f"gap to sensitivity {fq(cfg['sensitivity'], FORCE, 'zN')} = {gap:.1f} orders of magnitude")
    return data, "\n".join(lines) + "\n", {}


def cmd_trap(cfg, run: RunConfig):
    mat = _material(cfg, run.config_path)
    tc = td.TrapConfig(mat, cfg["R"], cfg["I"], cfg["l"], cfg["chi"])
    checks = td.validate_trap(tc, cfg["cooling_floor"], cfg["size_factor"])
    w = tc.omega_t
    data = {
        "material": mat.name, "omega_t_rad_s": w, "omega_perp_rad_s": tc.omega_perp,
        "R_max_m": tc.R_max, "M_kg": tc.M, "x_zp_m": tc.x_zp, "chi": cfg["chi"], "L_m": tc.L,
        "checks": [{"check": c.check, "passed": c.passed, "margin": c.margin} for c in checks],
        "notes": [],
    }
    if cfg["chi"] > 0:
        data["notes"].append(
            f"chi = {cfg['chi']:g} is a configured displacement factor, not a derived one; "
            "L scales linearly with it"
        )
    lines = [
        f"omega_t = {fq(w, RATE, 'rad/s')} = 2pi x {fq(w / (2 * math.pi), RATE, 'kHz')}",
        f"omega_perp = {fq(tc.omega_perp, RATE, 'rad/s')}",
        f"R_max = {fq(tc.R_max, LENGTH, 'um')}",
        f"M = {fq(tc.M, MASS, 'ng')}",
        f"x_zp = {fq(tc.x_zp, LENGTH, 'm')}",
        f"L = 4 chi x_zp = {fq(tc.L, LENGTH, 'pm')} (chi = {cfg['chi']:g})",
        "",
    ]
    rows = [("check", "result", "margin")]
    rows += [(c.check, "pass" if c.passed else "FAIL", f"{c.margin:+.1%}") for c in checks]
    text = "\n".join(lines) + _table(rows)
    text += "all validations pass\n" if all(c.passed for c in checks) else "some validations FAIL\n"
    text += "".join(f"note: {n}\n" for n in data["notes"])
    return data, text, {}


def cmd_simulate_classical(cfg, run: RunConfig):
    f0v = cfg["f0"]
    if f0v is None:
        need = ("M", "m", "L", "y")
        if any(cfg[k] is None for k in need):
            raise ConfigError(f"{run.config_path}: need f0, or M, m, L and y")
        f0v = cp.f0(cfg["M"], cfg["m"], cfg["L"], cp.probe_distance(cfg["y"], cfg["L"]))
    Gamma = cfg["Gamma"]
    if Gamma is None:
        if cfg["nu"] is None or cfg["tau"] is None:
            raise ConfigError(f"{run.config_path}: need Gamma, or nu and tau")
        Gamma = cp.decay_constant(cfg["nu"], cfg["tau"])
    ens = cp.simulate_telegraph(f0v, Gamma, cfg["dt"], cfg["t_max"], cfg["n_traj"], run.seed, cfg["initial"])
    stats = cp.estimate_statistics(ens)
    target_mean = cfg["initial"] * f0v * np.exp(-Gamma * stats.times)
    target_corr = cp.force_correlation(0.0, stats.lags, f0v, Gamma)
    z_mean = _zscores(stats.mean - target_mean, stats.mean_stderr)
    z_corr = _zscores(stats.autocorr - target_corr, stats.autocorr_stderr)
    ok_mean = bool(np.all(np.abs(z_mean) <= 3))
    ok_corr = bool(np.all(np.abs(z_corr) <= 3))
    data = {
        "f0_N": f0v, "Gamma_per_s": Gamma, "n_traj": ens.n_traj, "seed": run.seed,
        "times_s": stats.times.tolist(), "mean_N": stats.mean.tolist(), "mean_stderr_N": stats.mean_stderr.tolist(),
        "lags_s": stats.lags.tolist(), "autocorr_N2": stats.autocorr.tolist(),
        "autocorr_stderr_N2": stats.autocorr_stderr.tolist(), "burn_in_s": stats.burn_in,
        "max_abs_z_mean": float(np.max(np.abs(z_mean))), "max_abs_z_autocorr": float(np.max(np.abs(z_corr))),
        "mean_within_3se": ok_mean, "autocorr_within_3se": ok_corr,
    }
    text = (
        f"f0 = {fq(f0v, FORCE, 'N')}, Gamma = {fq(Gamma, RATE, '1/s')}, {ens.n_traj} trajectories, seed {run.seed}\n"
        f"mean force vs -f0 exp(-Gamma t): max |z| = {data['max_abs_z_mean']:.2f} "
        f"({'within' if ok_mean else 'OUTSIDE'} 3 standard errors)\n"
        f"autocorrelation vs f0^2 exp(-Gamma lag): max |z| = {data['max_abs_z_autocorr']:.2f} "
        f"({'within' if ok_corr else 'OUTSIDE'} 3 standard errors)\n"
    )
    files = {}
    if cfg["save_trajectories"]:
        files["trajectories.csv"] = ens.to_csv()
    return data, text, files


def _zscores(diff, se):
    diff = np.asarray(diff)
    se = np.asarray(se)
    out = np.zeros_like(diff)
    nz = se > 0
    out[nz] = diff[nz] / se[nz]
    out[~nz & (np.abs(diff) > 1e-12 * np.max(np.abs(diff), initial=1.0))] = np.inf
    return out


def cmd_simulate_quantum(cfg, run: RunConfig):
    spec = qp.QuantumProbeSpec(m=cfg["m"], omega=cfg["omega"], f0=cfg["f0"], nu=cfg["nu"], n_max=cfg["n_max"])
    H = qp.build_hamiltonian(spec)
    n = H.n_max
    if cfg["initial"] == "displaced":
        psi0 = qp.coherent_state("+", -H.g / H.omega, n)
    elif cfg["initial"] == "vacuum":
        psi0 = qp.basis_state("+", 0, n)
    else:
        raise ConfigError(f"{run.config_path}: key 'initial': expected 'displaced' or 'vacuum'")
    times = np.linspace(0.0, cfg["t_max"], cfg["n_times"])
    states = qp.evolve_series(psi0, H, times, cfg["tol"])
    s3 = np.array([qp.expectation(s, "sigma3") for s in states])
    num = np.array([qp.expectation(s, "number") for s in states])
    pos = np.array([qp.expectation(s, "position", spec.m, spec.omega) for s in states])
    e0 = qp.energy(psi0, H)
    energies = np.array([qp.energy(s, H) for s in states])
    norm_drift = float(max(s.norm_drift for s in states))
    abs_drift = float(np.max(np.abs(energies - e0)))
    energy_drift = abs_drift / abs(e0) if e0 != 0 else None
    omega_grid, power = qp.periodogram(s3, times[1] - times[0])
    try:
        rabi = qp.rabi_frequency_estimate(s3, times[1] - times[0])
    except qp.NoPeak:
        rabi = None
    d = qp.distinguishability(spec.f0, spec.m, spec.omega)
    data = {
        "g_rad_s": H.g, "n_max": n, "distinguishability": d,
        "classical_center_m": qp.classical_center(spec.f0, spec.m, spec.omega),
        "rabi_frequency_rad_s": rabi, "renormalized_tunneling_rad_s": 2 * spec.nu * math.exp(-d),
        "norm_drift": norm_drift, "energy_drift_rad_s": abs_drift,
        "relative_energy_drift": energy_drift,
    }
    text = (
        f"g = {fq(H.g, RATE, 'rad/s')}, n_max = {n}\n"
        f"distinguishability f0^2/(m hbar omega^3) = {d:.3g} (dimensionless)\n"
        f"classical centre = {fq(data['classical_center_m'], LENGTH, 'm')}\n"
        f"norm drift = {norm_drift:.2g} (dimensionless), energy drift = {fq(abs_drift, RATE, 'rad/s', 2)} "
        + (f"({energy_drift:.2g} relative, dimensionless)\n" if energy_drift is not None else "(initial energy is zero)\n")
    )
    if rabi is None:
        text += "no dominant sigma3 oscillation found\n"
    else:
        text += (f"sigma3 oscillation frequency = {fq(rabi, RATE, 'rad/s')} "
                 f"(2 nu exp(-d) = {fq(data['renormalized_tunneling_rad_s'], RATE, 'rad/s')})\n")
    files = {
        "observables.csv": _csv("t,sigma3,number,position", times, s3, num, pos),
        "spectrum.csv": _csv("omega,power", omega_grid, power),
    }
    return data, text, files


def cmd_feasibility(cfg, run: RunConfig):
    catalog = fz.load_proposals(cfg["proposals_file"]) if cfg["proposals_file"] else fz.PROPOSALS
    mat = _material(cfg, run.config_path)
    M = cfg["M"] if cfg["M"] is not None else td.sphere_mass(cfg["R"], mat.rho)
    cat = fz.CatSource(M=M, L=cfg["L"], R=cfg["R"])
    keys = cfg["proposal"] or list(catalog)
    for k in keys:
        if k not in catalog:
            raise ConfigError(f"{run.config_path}: key 'proposal': unknown proposal {k!r}")
    entries = [fz.evaluate_proposal(catalog[k], cat, cfg["a"]) for k in keys]
    proj = fz.projections(cfg["L_projection"], cfg["L_improvement"], cfg["m_design"])
    report = fz.build_report(entries, projections=proj, extra_notes=[fz.distinguishability_note()])
    return report.to_dict(), report.to_table(), {}


def cmd_optimize(cfg, run: RunConfig):
    mats = _materials(cfg)
    for name in cfg["materials"]:
        if name not in mats:
            raise ConfigError(f"{run.config_path}: key 'materials': unknown material {name!r}")
    bounds = fz.DesignBounds(
        materials=tuple(cfg["materials"]), R=(cfg["R_min"], cfg["R_max"]), a=(cfg["a_min"], cfg["a_max"]),
        L=(cfg["L_min"], cfg["L_max"]), m=cfg["m"], points=cfg["points"], cooling_floor=cfg["cooling_floor"],
        omega_t=cfg["omega_t"], size_factor=cfg["size_factor"], casimir_threshold=cfg["casimir_threshold"],
    )
    d = fz.optimize_f0(bounds, mats)
    data = fz._design_dict(d)
    data["n_feasible"] = d.n_feasible
    rows = [("check", "result", "margin")]
    rows += [(c.check, "pass" if c.passed else "FAIL", f"{c.margin:+.1%}") for c in d.checks]
    text = "optimum: " + fz._design_line(d) + "\n" + _table(rows) + f"casimir guard: {d.casimir.status}\n"
    return data, text, {}


COMMANDS = {
    "estimate": cmd_estimate,
    "trap": cmd_trap,
    "simulate-classical": cmd_simulate_classical,
    "simulate-quantum": cmd_simulate_quantum,
    "feasibility": cmd_feasibility,
    "optimize": cmd_optimize,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gravcat", description="Gravitational cat-state feasibility engine")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=Path("gravcat_out"))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--format", dest="fmt", choices=("json", "table", "both"), default="both")
    return parser


def run(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = _parser().parse_args(argv)
    overrides = []
    for item in args.overrides:
        if "=" not in item:
            print(f"error: --set expects key=value, got {item!r}", file=sys.stderr)
            return 2
        k, v = item.split("=", 1)
        overrides.append((k.strip(), v.strip()))
    rc = RunConfig(args.subcommand, args.config, args.out, args.seed, overrides, args.fmt)
    try:
        cfg = load_config(rc.config_path, rc.subcommand, rc.overrides)
        data, text, files = COMMANDS[rc.subcommand](cfg, rc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    rc.out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"subcommand": rc.subcommand, "version": __version__, "seed": rc.seed, "result": data}
    if rc.fmt in ("json", "both"):
        (rc.out_dir / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if rc.fmt in ("table", "both"):
        (rc.out_dir / "report.txt").write_text(text)
    for name, content in files.items():
        (rc.out_dir / name).write_text(content)
    sys.stdout.write(text if rc.fmt != "json" else json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
