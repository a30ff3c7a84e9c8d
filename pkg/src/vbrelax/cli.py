"""Command-line front end.

Every option can also come from a flat ``key = value`` file given with
``--config``; command-line flags win over the file. Exit codes: 0 success
(including fits flagged as non-converged), 2 invalid usage or input,
1 internal failure. Errors are a single JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, fileio
from .errors import InvalidInputError
from .fitting import (
    DECAY_MODELS,
    extract_rates,
    fit_decay,
    fit_power_law,
    fit_temperature_law,
    power_law,
)
from .noise import Susceptibility, build_spectrum, electric_noise, suppression
from .rates import RateParams, ReadoutModel, t1_conventional, t1_full
from .spin import SPLITTING_KINDS, DefectParams, FieldConfig, odmr_frequencies, splitting, zeeman_splitting
from .synth import REFERENCE_NOISE_SCALE, AcquisitionConfig, default_tau_grid, generate_curve

REQUIRED = object()


class UsageError(InvalidInputError):
    pass


@dataclass(frozen=True)
class Opt:
    name: str
    kind: str  # float, int, str, path, choice, bool, paths2
    default: object = None
    help: str = ""
    choices: tuple = ()
    minimum: float | None = None
    exclusive_min: bool = False
    maximum: float | None = None

    @property
    def flag(self):
        return "--" + self.name.replace("_", "-")

    def convert(self, raw):
        key = self.name.replace("_", "-")
        if self.kind in ("str", "path"):
            return str(raw)
        if self.kind == "paths2":
            parts = raw if isinstance(raw, list) else str(raw).replace(",", " ").split()
            if len(parts) != 2:
                raise UsageError(f"{key} expects two paths", key=key)
            return [str(p) for p in parts]
        if self.kind == "bool":
            s = str(raw).strip().lower()
            if s in ("1", "true", "yes", "on"):
                return True
            if s in ("0", "false", "no", "off"):
                return False
            raise UsageError(f"{key} expects a boolean, got {raw!r}", key=key)
        if self.kind == "choice":
            if raw not in self.choices:
                raise UsageError(f"{key} must be one of {', '.join(self.choices)}, got {raw!r}", key=key)
            return raw
        try:
            val = int(raw) if self.kind == "int" else float(raw)
        except (TypeError, ValueError):
            raise UsageError(f"{key} expects a{'n integer' if self.kind == 'int' else ' number'}, got {raw!r}", key=key) from None
        if isinstance(val, float) and not math.isfinite(val):
            raise UsageError(f"{key} must be finite", key=key)
        if self.minimum is not None:
            if val < self.minimum or (self.exclusive_min and val == self.minimum):
                op = ">" if self.exclusive_min else ">="
                raise UsageError(f"{key} must be {op} {self.minimum}, got {raw}", key=key)
        if self.maximum is not None and val > self.maximum:
            raise UsageError(f"{key} must be <= {self.maximum}, got {raw}", key=key)
        return val


def _pos(name, default=REQUIRED, help=""):
    return Opt(name, "float", default, help, minimum=0.0, exclusive_min=True)


def _nonneg(name, default=REQUIRED, help=""):
    return Opt(name, "float", default, help, minimum=0.0)


DEFECT_OPTS = [
    _pos("d_mhz", 3480.0, "axial zero-field splitting D (MHz)"),
    _nonneg("e_mhz", 48.0, "transverse zero-field splitting E (MHz)"),
    _pos("g", 2.0, "electron g-factor"),
]

SCHEMAS = {
    "simulate": [
        Opt("protocol", "choice", REQUIRED, "which observable(s) to generate", choices=("f1", "f2", "pair")),
        _nonneg("omega_khz", REQUIRED, "single-quantum rate (kHz)"),
        _nonneg("gamma_khz", REQUIRED, "double-quantum rate (kHz)"),
        Opt("seed", "int", REQUIRED, "RNG seed (mandatory)", minimum=0, maximum=2**64 - 1),
        _pos("amplitude", 1.0, "readout amplitude r"),
        Opt("baseline", "float", 0.0, "readout baseline"),
        Opt("pulse_fidelity", "float", 1.0, "pi-pulse fidelity", minimum=0.0, maximum=1.0),
        _nonneg("noise_scale", REFERENCE_NOISE_SCALE, "per-point noise standard deviation at one shot"),
        Opt("shots", "int", 1, "averages per point", minimum=1),
        Opt("n_points", "int", 32, "number of delays", minimum=3),
        _pos("tau_min_us", 0.1, "shortest delay (us)"),
        _pos("tau_max_us", None, "longest delay (us); default five slowest decay times"),
        Opt("out_prefix", "str", "run", "output prefix; writes <prefix>_f1.csv / <prefix>_f2.csv"),
    ],
    "fit decay": [
        Opt("in", "path", REQUIRED, "decay CSV"),
        Opt("model", "choice", "single-exp", "decay model", choices=DECAY_MODELS),
        Opt("out", "path", None, "report path (default stdout)"),
    ],
    "fit pair": [
        Opt("f1", "path", REQUIRED, "F1 decay CSV"),
        Opt("f2", "path", REQUIRED, "F2 decay CSV"),
        Opt("model", "choice", "single-exp", "decay model", choices=DECAY_MODELS),
        Opt("out", "path", None, "report path (default stdout)"),
    ],
    "fit powerlaw": [
        Opt("in", "path", REQUIRED, "gamma table CSV"),
        _nonneg("e_mhz", 48.0, "E used in f - 2E (MHz)"),
        Opt("out", "path", None, "report path (default stdout)"),
    ],
    "fit templaw": [
        Opt("in", "path", REQUIRED, "temperature CSV"),
        Opt("out", "path", None, "report path (default stdout)"),
    ],
    "noise": [
        Opt("in", "path", None, "gamma table CSV"),
        Opt("compare", "paths2", None, "raw and coated spectra (or gamma tables)"),
        Opt("gamma_inf_khz", "float", None, "bulk plateau rate (kHz)"),
        _nonneg("gamma_inf_sigma_khz", 0.0, "plateau uncertainty added in quadrature (kHz)"),
        Opt("fit_plateau", "bool", False, "take the plateau from a power-law fit of each table"),
        _nonneg("e_mhz", 48.0, "E for the plateau fit (MHz)"),
        _pos("d_perp_over_h", 0.4, "transverse susceptibility (Hz m/V)"),
        Opt("out", "path", None, "spectrum or suppression CSV (default stdout)"),
        Opt("report", "path", None, "optional JSON report"),
    ],
    "odmr": DEFECT_OPTS + [
        _nonneg("b_gauss", 0.0, "field magnitude (G)"),
        Opt("polar_deg", "float", 0.0, "field angle from the c-axis (degrees)"),
        Opt("azimuth_deg", "float", 0.0, "field azimuth (degrees)"),
    ],
    "sweep": DEFECT_OPTS + [
        Opt("quantity", "choice", "gamma", "tabulate gamma(f) or S(f)", choices=("gamma", "noise")),
        _pos("b_min", REQUIRED, "first field (G)"),
        _pos("b_max", REQUIRED, "last field (G)"),
        Opt("n_points", "int", 50, "grid size", minimum=2),
        _pos("amplitude", REQUIRED, "power-law amplitude A (kHz MHz^a)"),
        Opt("exponent", "float", REQUIRED, "power-law exponent a"),
        _nonneg("gamma_inf_khz", REQUIRED, "plateau rate (kHz)"),
        Opt("splitting", "choice", "odmr", "frequency axis definition", choices=SPLITTING_KINDS),
        _pos("d_perp_over_h", 0.4, "transverse susceptibility (Hz m/V)"),
        Opt("out", "path", None, "CSV path (default stdout)"),
    ],
    "verify": [Opt("report", "path", REQUIRED, "report to check")],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, key="usage")


def _add_schema(parser, command):
    for opt in SCHEMAS[command]:
        kw = {"dest": opt.name, "default": argparse.SUPPRESS, "help": opt.help}
        if opt.kind == "bool":
            parser.add_argument(opt.flag, action="store_const", const="true", **kw)
        elif opt.kind == "paths2":
            parser.add_argument(opt.flag, nargs=2, metavar=("RAW", "COATED"), **kw)
        elif command == "verify":
            parser.add_argument(opt.name, help=opt.help)
        else:
            parser.add_argument(opt.flag, **kw)
    if command != "verify":
        parser.add_argument("--config", default=None, help="flat key = value file; flags override it")
    parser.set_defaults(command=command)


def build_parser():
    p = _Parser(prog="vbrelax", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"vbrelax {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    _add_schema(sub.add_parser("simulate", help="generate synthetic F1/F2 decay curves"), "simulate")
    fit = sub.add_parser("fit", help="fit decay curves, rate pairs, power or temperature laws")
    fsub = fit.add_subparsers(dest="fit_kind", required=True, parser_class=_Parser)
    for kind in ("decay", "pair", "powerlaw", "templaw"):
        _add_schema(fsub.add_parser(kind), f"fit {kind}")
    _add_schema(sub.add_parser("noise", help="electric-field noise spectra and suppression"), "noise")
    _add_schema(sub.add_parser("odmr", help="print ODMR frequencies and splitting"), "odmr")
    _add_schema(sub.add_parser("sweep", help="tabulate gamma(f) or S(f) over a field grid"), "sweep")
    _add_schema(sub.add_parser("verify", help="check the input hashes recorded in a report"), "verify")
    return p


def resolve_config(command, namespace) -> dict:
    """Merge defaults, the optional config file and flags, then validate."""
    schema = {o.name: o for o in SCHEMAS[command]}
    raw = {}
    cfg_path = getattr(namespace, "config", None)
    if cfg_path:
        for key, value in fileio.parse_config_file(cfg_path).items():
            if key not in schema:
                raise UsageError(f"unknown config key {key.replace('_', '-')!r} for {command}", key=key.replace("_", "-"))
            raw[key] = value
    for key in schema:
        if hasattr(namespace, key):
            raw[key] = getattr(namespace, key)
    out = {}
    for key, opt in schema.items():
        if key in raw and raw[key] is not None:
            out[key] = opt.convert(raw[key])
        elif opt.default is REQUIRED:
            raise UsageError(f"missing required option {opt.flag}", key=opt.flag[2:])
        else:
            out[key] = opt.default
    return out


def _emit(text, path):
    if path:
        fileio.atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _fit_dict(fit):
    return {
        "params": fit.params,
        "sigmas": fit.sigmas,
        "names": list(fit.names),
        "covariance": fit.covariance,
        "chi2": fit.chi2,
        "chi2_reduced": fit.chi2_reduced,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "diagnostics": fit.diagnostics,
    }


def _report(command, inputs, cfg, results, path):
    rep = fileio.build_report(command, inputs, cfg, results, __version__)
    _emit(fileio.dumps_report(rep), path)


def cmd_simulate(cfg):
    rates = RateParams(cfg["omega_khz"], cfg["gamma_khz"])
    readout = ReadoutModel(cfg["amplitude"], cfg["baseline"], cfg["pulse_fidelity"])
    if cfg["tau_max_us"] is None:
        grid = default_tau_grid(rates, n=cfg["n_points"], tau_min=cfg["tau_min_us"])
    else:
        if cfg["tau_max_us"] <= cfg["tau_min_us"]:
            raise UsageError("tau-max-us must exceed tau-min-us", key="tau-max-us")
        grid = np.geomspace(cfg["tau_min_us"], cfg["tau_max_us"], cfg["n_points"])
    acq = AcquisitionConfig(tuple(grid), cfg["shots"], cfg["noise_scale"], cfg["seed"])
    wanted = {"f1": ["F1"], "f2": ["F2"], "pair": ["F1", "F2"]}[cfg["protocol"]]
    for model in wanted:
        stream = 0 if model == "F1" else 1
        curve = generate_curve(model, rates, readout, acq, stream=stream)
        path = f"{cfg['out_prefix']}_{model.lower()}.csv"
        fileio.write_decay_csv(path, curve)
        print(path)
    return 0


def cmd_fit_decay(cfg):
    curve = fileio.read_decay_csv(cfg["in"])
    fit = fit_decay(curve, cfg["model"])
    res = {"converged": fit.converged, "fit": _fit_dict(fit)}
    _report("fit decay", [cfg["in"]], cfg, res, cfg["out"])
    return 0


def cmd_fit_pair(cfg):
    f1 = fileio.read_decay_csv(cfg["f1"])
    f2 = fileio.read_decay_csv(cfg["f2"])
    est = extract_rates(f1, f2, cfg["model"])
    rates = RateParams(est.omega, est.gamma)
    derived = {}
    if 3 * rates.omega + rates.gamma > 0:
        derived["t1_full_us"] = t1_full(rates)
    if rates.omega > 0:
        derived["t1_conventional_us"] = t1_conventional(rates)
    res = {
        "converged": est.converged,
        "omega_khz": est.omega,
        "omega_sigma_khz": est.omega_sigma,
        "gamma_khz": est.gamma,
        "gamma_sigma_khz": est.gamma_sigma,
        "gamma_raw_khz": est.gamma_raw,
        "physical": est.physical,
        "derived": derived,
        "f1_fit": _fit_dict(est.f1_fit),
        "f2_fit": _fit_dict(est.f2_fit),
    }
    _report("fit pair", [cfg["f1"], cfg["f2"]], cfg, res, cfg["out"])
    return 0


def _power_fit_dict(pl):
    return {
        "converged": pl.fit.converged,
        "degenerate": pl.degenerate,
        "amplitude": pl.amplitude,
        "amplitude_sigma": pl.amplitude_sigma,
        "exponent": pl.exponent,
        "exponent_sigma": pl.exponent_sigma,
        "gamma_inf_khz": pl.gamma_inf,
        "gamma_inf_sigma_khz": pl.gamma_inf_sigma,
        "e_used_mhz": pl.e_used,
        "fit": _fit_dict(pl.fit),
    }


def cmd_fit_powerlaw(cfg):
    rows = fileio.read_gamma_table(cfg["in"])
    bad = [i for i, r in enumerate(rows) if r[0] <= 2 * cfg["e_mhz"]]
    if bad:
        raise InvalidInputError(
            f"{cfg['in']}: row {bad[0] + 2}: f_mhz={fileio.fmt(rows[bad[0]][0])} is not above 2E={fileio.fmt(2 * cfg['e_mhz'])}",
            key="f_mhz",
        )
    pts = [(f, g, s if s > 0 else None) for f, g, s in rows]
    pl = fit_power_law(pts, cfg["e_mhz"])
    _report("fit powerlaw", [cfg["in"]], cfg, _power_fit_dict(pl), cfg["out"])
    return 0


def cmd_fit_templaw(cfg):
    rows = fileio.read_temperature_table(cfg["in"])
    tl = fit_temperature_law(rows)
    res = {
        "converged": True,
        "exponent": tl.exponent,
        "exponent_sigma": tl.exponent_sigma,
        "log_prefactor": tl.log_prefactor,
        "log_prefactor_sigma": tl.log_prefactor_sigma,
        "n_points": tl.n_points,
    }
    _report("fit templaw", [cfg["in"]], cfg, res, cfg["out"])
    return 0


def _spectrum_from_table(path, cfg, sus):
    rows = fileio.read_gamma_table(path)
    info = {}
    if cfg["fit_plateau"]:
        pl = fit_power_law([(f, g, s if s > 0 else None) for f, g, s in rows], cfg["e_mhz"])
        g_inf, g_inf_sig = pl.gamma_inf, pl.gamma_inf_sigma
        info["plateau_fit"] = _power_fit_dict(pl)
    elif cfg["gamma_inf_khz"] is not None:
        g_inf, g_inf_sig = cfg["gamma_inf_khz"], cfg["gamma_inf_sigma_khz"]
    else:
        raise UsageError("give --gamma-inf-khz or --fit-plateau", key="gamma-inf-khz")
    spec = build_spectrum(rows, g_inf, sus, gamma_inf_sigma=g_inf_sig or None, meta={"source": str(path)})
    info["gamma_inf_khz"] = g_inf
    info["unphysical_rows"] = spec.unphysical
    return spec, info


def _load_spectrum(path, cfg, sus):
    if fileio.sniff_header(path) == fileio.GAMMA_HEADER:
        return _spectrum_from_table(path, cfg, sus)
    return fileio.read_spectrum_csv(path), {}


def cmd_noise(cfg):
    sus = Susceptibility(cfg["d_perp_over_h"])
    if cfg["compare"] and cfg["in"]:
        raise UsageError("give either --in or --compare, not both", key="compare")
    if cfg["compare"]:
        raw_path, coated_path = cfg["compare"]
        raw, raw_info = _load_spectrum(raw_path, cfg, sus)
        coated, coated_info = _load_spectrum(coated_path, cfg, sus)
        sup = suppression(raw, coated)
        rows = [(f, p) for f, p in zip(sup.f, sup.percent) if math.isfinite(p)]
        _emit(fileio.table_text(fileio.SUPPRESSION_HEADER, rows), cfg["out"])
        print(f"average_suppression_pct={fileio.fmt(sup.average)}", file=sys.stderr if not cfg["out"] else sys.stdout)
        if cfg["report"]:
            res = {
                "average_suppression_pct": sup.average,
                "per_point": [{"f_mhz": f, "suppression_pct": p} for f, p in zip(sup.f, sup.percent)],
                "excluded_rows": sup.excluded,
                "raw": raw_info,
                "coated": coated_info,
            }
            rep = fileio.build_report("noise --compare", [raw_path, coated_path], cfg, res, __version__)
            fileio.write_report(cfg["report"], rep)
        return 0
    if not cfg["in"]:
        raise UsageError("give --in or --compare", key="in")
    spec, info = _spectrum_from_table(cfg["in"], cfg, sus)
    rows = [(p.f, p.s_e_perp, p.sigma) for p in spec.points]
    _emit(fileio.table_text(fileio.SPECTRUM_HEADER, rows), cfg["out"])
    if cfg["report"]:
        rep = fileio.build_report("noise", [cfg["in"]], cfg, info, __version__)
        fileio.write_report(cfg["report"], rep)
    return 0


def _defect(cfg):
    return DefectParams(cfg["d_mhz"], cfg["e_mhz"], cfg["g"])


def cmd_odmr(cfg):
    params = _defect(cfg)
    field = FieldConfig(cfg["b_gauss"], math.radians(cfg["polar_deg"]), math.radians(cfg["azimuth_deg"]))
    lo, hi = odmr_frequencies(params, field)
    print(f"nu_minus_mhz={fileio.fmt(lo)}")
    print(f"nu_plus_mhz={fileio.fmt(hi)}")
    print(f"splitting_mhz={fileio.fmt(hi - lo)}")
    print(f"zeeman_splitting_mhz={fileio.fmt(zeeman_splitting(params, field))}")
    return 0


def cmd_sweep(cfg):
    if cfg["b_max"] <= cfg["b_min"]:
        raise UsageError("b-max must exceed b-min", key="b-max")
    params = _defect(cfg)
    sus = Susceptibility(cfg["d_perp_over_h"])
    header = ("b_gauss", "f_mhz", "gamma_khz") + (("s_e_perp",) if cfg["quantity"] == "noise" else ())
    rows = []
    for b in np.linspace(cfg["b_min"], cfg["b_max"], cfg["n_points"]):
        f = splitting(params, FieldConfig(float(b)), cfg["splitting"])
        if f <= 2 * params.e_gs:
            raise UsageError(
                f"splitting {fileio.fmt(f)} MHz at B={fileio.fmt(b)} G is not above 2E; raise b-min",
                key="b-min",
            )
        g = float(power_law(f, cfg["amplitude"], cfg["exponent"], cfg["gamma_inf_khz"], params.e_gs))
        row = (b, f, g)
        if cfg["quantity"] == "noise":
            row += (electric_noise(g, cfg["gamma_inf_khz"], sus),)
        rows.append(row)
    _emit(fileio.table_text(header, rows), cfg["out"])
    return 0


def cmd_verify(cfg):
    rep = fileio.read_report(cfg["report"])
    bad = fileio.verify_report(rep)
    if bad:
        raise InvalidInputError(f"input hash mismatch: {', '.join(bad)}", key="inputs")
    print(f"ok inputs={len(rep.get('inputs', []))}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "fit decay": cmd_fit_decay,
    "fit pair": cmd_fit_pair,
    "fit powerlaw": cmd_fit_powerlaw,
    "fit templaw": cmd_fit_templaw,
    "noise": cmd_noise,
    "odmr": cmd_odmr,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def _fail(kind, exc, key=None):
    msg = {"error": kind, "key": key, "message": str(exc).replace("\n", " ")}
    sys.stderr.write(json.dumps(msg) + "\n")


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = resolve_config(ns.command, ns)
        return COMMANDS[ns.command](cfg)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except fileio.CSVFormatError as exc:
        _fail("malformed-csv", exc, key=exc.column)
        return 2
    except InvalidInputError as exc:
        _fail("invalid-input", exc, key=getattr(exc, "key", None))
        return 2
    except Exception as exc:  # noqa: BLE001
        _fail("internal", f"{type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
