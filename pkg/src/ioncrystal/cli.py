"""
Command-line driver: ``ioncrystal {spectrum,gate,decoherence,spin}``.

Options are resolved as flags > ``--config`` file > built-in defaults.
The config file holds ``key = value`` lines with ``#`` comments; keys are
the long flag names with dashes or underscores.  Every run writes
``manifest.json`` and ``resolved_config.txt`` next to its outputs; the
latter can be fed back through ``--config`` to repeat the run.

Exit codes: 0 ok, 1 a physics check failed (gap check), 2 config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy
from scipy import constants

from . import __version__
from .decoherence.kernels import QuadratureError
from .decoherence.lattice_terms import E3_METHODS, ValidationError
from .decoherence.oracle import ConvergenceError
from .decoherence.scan import scan_to_dict, summary_stats, temperature_scan, write_scan_csv
from .gate import gate_diagnostics
from .lattice import BE9_MASS, PhysicalParams, derived_betas, lattice_sums, standard_parameter_set
from .phonons import (
    Crystal,
    UnstableCrystalError,
    axial_bandwidth,
    band_structure,
    gap_check,
    mode_grid,
    occupation,
    write_band_csv,
    x_direction_path,
)
from .spinchain import (
    BlueDetunedError,
    ChainSpec,
    UnstableChainError,
    carrier_correction_bound,
    chain_report,
    write_matrix_csv,
)

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "set": 1,
    "mass_u": BE9_MASS / constants.atomic_mass,
    "f_xy": None,
    "f_z": None,
    "fz_over_fxy": None,
    "temperature": 1e-3,
    "L": 100,
    "gamma_xy": 0.05,
    "eta0": 0.234,
    "t_min": 1e-5,
    "t_max": 1e-3,
    "points": 12,
    "sets": "1",
    "method": "high_t",
    "x_ratio": None,
    "n": None,
    "beta_x": 1e-3,
    "detuning": 0.05,
    "force": 0.01,
    "rabi": 0.0,
    "seed": 0,
    "threads": 1,
    "out": ".",
    "format": "csv",
}

INT_KEYS = {"set", "L", "points", "n", "seed", "threads"}
STR_KEYS = {"sets", "method", "out", "format"}


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


def _key(name: str) -> str:
    key = name.strip().lstrip("-").replace("-", "_")
    return {"l": "L"}.get(key, key)


def _coerce(key: str, value):
    if value is None or (isinstance(value, str) and value.lower() in ("none", "")):
        return None
    try:
        if key in INT_KEYS:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        if key in STR_KEYS:
            return str(value)
        return float(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def read_config(path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    cfg = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        key = _key(k)
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {k!r}")
        cfg[key] = _coerce(key, v)
    return cfg


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for k, v in vars(args).items():
        if k in DEFAULTS and v is not None:
            cfg[k] = _coerce(k, v)
    if cfg["threads"] < 1:
        raise ConfigError("threads must be at least 1")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    return cfg


def physical_params(cfg: dict, which: int | None = None) -> PhysicalParams:
    base = standard_parameter_set(which if which is not None else cfg["set"])
    f_xy = cfg["f_xy"] if cfg["f_xy"] is not None else base.f_xy
    if cfg["fz_over_fxy"] is not None:
        f_z = cfg["fz_over_fxy"] * f_xy
    elif cfg["f_z"] is not None:
        f_z = cfg["f_z"]
    else:
        f_z = base.f_z
    mass = cfg["mass_u"] * constants.atomic_mass
    return PhysicalParams(ion_mass=mass, f_xy=f_xy, f_z=f_z, temperature=cfg["temperature"])


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(cfg: dict, out: Path) -> tuple[int, list[str], dict]:
    params = physical_params(cfg)
    crystal = Crystal.from_params(params, cfg["L"])
    grid = mode_grid(crystal)
    ok, lo, hi = gap_check(grid)
    bands = band_structure(x_direction_path(cfg["L"]), crystal)
    scales = derived_betas(params, lattice_sums(cfg["L"]))
    width = axial_bandwidth(grid)
    summary = {"gap_ok": ok, "min_axial": lo, "max_inplane": hi, "axial_bandwidth": width,
               "beta_z": scales.beta_z, "bandwidth_over_beta_z": width / scales.beta_z,
               "d0_um": scales.d0 * 1e6}
    if cfg["format"] == "csv":
        name = "spectrum.csv"
        write_band_csv(bands, out / name)
    else:
        name = "spectrum.json"
        rows = [{"n1": q.n1, "n2": q.n2, "q1": q.q1, "q2": q.q2, "omega_axial": a, "omega_long": b,
                 "omega_trans": c} for q, a, b, c in zip(bands.path, bands.axial, bands.longitudinal,
                                                         bands.transverse)]
        _write_json(out / name, {"rows": rows, "summary": summary})
    verdict = "PASS" if ok else "FAIL"
    print(f"gap check {verdict}: min axial {lo:.6g} vs 2 x max in-plane {2 * hi:.6g} (units omega_xy)")
    print(f"axial fractional bandwidth {width:.4g} = {width / scales.beta_z:.3g} beta_z")
    return (EXIT_OK if ok else EXIT_CHECK), [name], summary


def cmd_gate(cfg: dict, out: Path) -> tuple[int, list[str], dict]:
    if not cfg["gamma_xy"] > 0:
        raise ConfigError("gamma-xy must be positive")
    if cfg["eta0"] < 0:
        raise ConfigError("eta0 must be non-negative")
    params = physical_params(cfg)
    scales = derived_betas(params, lattice_sums(cfg["L"]))
    nbar_z = float(occupation(params.wz_ratio, params))
    diag = gate_diagnostics(cfg["eta0"], scales.beta_z, params.wz_ratio, nbar_z, cfg["gamma_xy"])
    data = diag.to_dict()
    data.update({"beta_z": scales.beta_z, "nbar_z": nbar_z})
    _write_json(out / "gate.json", data)
    rep = diag.consistency
    print(f"J(0) = {diag.J0:.6g} omega_z, E_z = {diag.E_z:.3g}, total phase = {diag.total_phase:.6g}")
    if "quoted_over_sign_gate" in rep:
        tag = "consistent" if rep["consistent"] else "INCONSISTENT"
        print(f"Gamma/omega_xy: sign gate {diag.gamma_over_omega_xy:.4g}, quoted {cfg['gamma_xy']:.4g} "
              f"(ratio {rep['quoted_over_sign_gate']:.3g}, {tag})")
    return EXIT_OK, ["gate.json"], {"E_z": diag.E_z, "consistency": rep}


def _parse_sets(text: str) -> list[int]:
    try:
        sets = [int(s) for s in str(text).replace(" ", "").split(",") if s]
    except ValueError:
        raise ConfigError(f"bad parameter-set list {text!r}") from None
    if not sets or any(s not in (1, 2) for s in sets):
        raise ConfigError("parameter sets must be drawn from {1, 2}")
    return sets


def cmd_decoherence(cfg: dict, out: Path) -> tuple[int, list[str], dict]:
    if not cfg["gamma_xy"] > 0:
        raise ConfigError("gamma-xy must be positive")
    if cfg["method"] not in E3_METHODS:
        raise ConfigError(f"method must be one of {E3_METHODS}")
    if not (0 < cfg["t_min"] <= cfg["t_max"]) or cfg["points"] < 1:
        raise ConfigError("need 0 < t-min <= t-max and points >= 1")
    outputs, summary = [], {}
    for which in _parse_sets(cfg["sets"]):
        params = physical_params(cfg, which)
        res = temperature_scan(params, cfg["L"], cfg["gamma_xy"], cfg["t_min"], cfg["t_max"],
                               cfg["points"], cfg["method"], cfg["threads"], cfg["x_ratio"])
        stats = summary_stats(res)
        summary[f"set{which}"] = stats
        if cfg["format"] == "csv":
            name = f"decoherence_set{which}.csv"
            write_scan_csv(res, out / name)
        else:
            name = f"decoherence_set{which}.json"
            _write_json(out / name, scan_to_dict(res))
        outputs.append(name)
        print(f"set {which}: slope {stats['loglog_slope_upper_decade']:.3f}, "
              f"max E'/E {stats['max_Eprime_over_E']:.3g}, max E {stats['max_E']:.3g}")
    _write_json(out / "decoherence_summary.json", summary)
    outputs.append("decoherence_summary.json")
    return EXIT_OK, outputs, summary


def cmd_spin(cfg: dict, out: Path) -> tuple[int, list[str], dict]:
    if cfg["n"] is None:
        raise ConfigError("spin needs --n (number of ions)")
    try:
        spec = ChainSpec(cfg["n"], cfg["beta_x"], cfg["detuning"], cfg["force"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        report = chain_report(spec)
    except (BlueDetunedError, UnstableChainError) as exc:
        raise NumericalFailure(str(exc)) from None
    bound, flag = carrier_correction_bound(cfg["rabi"], spec.omega_L)
    report["carrier"] = {"bound": bound, "regime_violation": flag}
    if cfg["format"] == "csv":
        J = np.array(report["J"])
        write_matrix_csv(out / "spin_J.csv", J, spec)
        write_matrix_csv(out / "spin_reference.csv", np.array(report["reference"]), spec)
        lines = ["n,omega"] + [f"{i},{w:.15g}" for i, w in enumerate(report["omegas"])]
        (out / "spin_modes.csv").write_text("\n".join(lines) + "\n")
        dev = ["separation,pairs,min_rel_dev,max_rel_dev"] + [
            f"{r['separation']},{r['pairs']},{r['min_rel_dev']:.15g},{r['max_rel_dev']:.15g}"
            for r in report["deviations"]]
        (out / "spin_deviation.csv").write_text("\n".join(dev) + "\n")
        outputs = ["spin_J.csv", "spin_reference.csv", "spin_modes.csv", "spin_deviation.csv"]
    else:
        _write_json(out / "spin.json", report)
        outputs = ["spin.json"]
    summary = {k: report[k] for k in ("errors", "carrier") if k in report}
    if "cube_law" in report:
        summary["cube_law"] = report["cube_law"]
        print(f"1/|j-k|^3 shape: max deviation {report['cube_law']['max_rel_dev']:.3%}, "
              f"amplitude / closed form {report['cube_law']['amplitude_over_reference']:.4f}")
    if flag:
        print(f"warning: carrier correction Omega/omega_L = {bound:.3g} is not small")
    return EXIT_OK, outputs, summary


COMMANDS = {"spectrum": cmd_spectrum, "gate": cmd_gate, "decoherence": cmd_decoherence, "spin": cmd_spin}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--out", help="output directory (default .)")
    common.add_argument("--threads", type=int, help="worker threads for the Brillouin-zone sums")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int, help="seed for sampled validations")

    phys = argparse.ArgumentParser(add_help=False)
    phys.add_argument("--set", type=int, choices=(1, 2), help="trap setting: 1 = 20 kHz/1 MHz, 2 = 200 kHz/10 MHz")
    phys.add_argument("--L", "--l", dest="L", type=int, help="lattice size (L x L sites)")
    phys.add_argument("--f-xy", dest="f_xy", type=float, help="in-plane trap frequency, Hz")
    phys.add_argument("--f-z", dest="f_z", type=float, help="axial trap frequency, Hz")
    phys.add_argument("--fz-over-fxy", dest="fz_over_fxy", type=float, help="axial / in-plane frequency ratio")
    phys.add_argument("--mass-u", dest="mass_u", type=float, help="ion mass in u")
    phys.add_argument("--temperature", type=float, help="temperature, K")

    parser = argparse.ArgumentParser(prog="ioncrystal", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("spectrum", parents=[common, phys], help="phonon bands along x and the axial gap check")

    g = sub.add_parser("gate", parents=[common, phys], help="pushing-gate parameters and axial error")
    g.add_argument("--eta0", type=float, help="peak axial displacement F Z0 / (hbar omega_z)")
    g.add_argument("--gamma-xy", dest="gamma_xy", type=float, help="quoted pulse rate Gamma/omega_xy")

    d = sub.add_parser("decoherence", parents=[common, phys], help="temperature scan of the gate errors")
    d.add_argument("--gamma-xy", dest="gamma_xy", type=float, help="pulse rate Gamma/omega_xy")
    d.add_argument("--t-min", dest="t_min", type=float, help="lowest temperature, K")
    d.add_argument("--t-max", dest="t_max", type=float, help="highest temperature, K")
    d.add_argument("--points", type=int, help="number of log-spaced temperatures")
    d.add_argument("--sets", help="comma-separated trap settings, e.g. 1,2")
    d.add_argument("--method", choices=E3_METHODS, help="E3/E4 kernel")
    d.add_argument("--x-ratio", dest="x_ratio", type=float, help="override X0/d0")

    s = sub.add_parser("spin", parents=[common], help="walking-wave couplings of an ion chain")
    s.add_argument("--n", type=int, help="number of ions")
    s.add_argument("--beta-x", dest="beta_x", type=float, help="e^2/(m d0^3 omega_x^2)")
    s.add_argument("--detuning", type=float, help="(omega_x - omega_L)/omega_x")
    s.add_argument("--force", type=float, help="F x0 / (hbar omega_x)")
    s.add_argument("--rabi", type=float, help="carrier Rabi frequency in units of omega_x")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = resolve_config(args)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        status, outputs, summary = COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, UnstableCrystalError, ArithmeticError, QuadratureError, ValidationError,
            ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"{parser.prog}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    wall = time.perf_counter() - start
    resolved = {k: cfg[k] for k in DEFAULTS}
    manifest = {
        "command": args.command,
        "argv": list(sys.argv[1:] if argv is None else argv),
        "config": resolved,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "wall_time_s": wall,
        "exit_status": status,
        "outputs": outputs,
        "summary": summary,
    }
    _write_json(out / "manifest.json", manifest)
    lines = [f"{k} = {'none' if v is None else v}" for k, v in resolved.items() if k != "out"]
    (out / "resolved_config.txt").write_text(f"# {args.command}\n" + "\n".join(lines) + "\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
