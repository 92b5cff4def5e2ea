"""Batch command-line interface.

Verbs: simulate, analyze, sweep, calibrate, infer.  Exit codes: 0 ok,
2 input error, 3 numeric error, 4 inference flag raised.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .analysis import analyze_fringes
from .calibration import (fit_bfield, fit_light_shift, fit_release_curve,
                          fit_zeeman)
from .constants import CONST, TWO_PI
from .fitting import FitError
from .inference import InferenceError, infer_density, infer_temperature
from .ramsey import synthesize_fringe
from .serialization import (ConfigError, DEFAULT_CONFIG, bath_from_config,
                            canonical_json, config_hash, fringe_from_csv,
                            fringe_to_csv, hash_bytes, load_config,
                            model_from_config, protocol_from_config,
                            write_json)
from .thermal import QuadratureError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_INFERENCE = 4


def _prepare(args):
    cfg = load_config(args.config) if args.config else json.loads(
        json.dumps(DEFAULT_CONFIG))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.quadrature_order is not None:
        cfg["quadrature"]["energy_order"] = args.quadrature_order
    os.makedirs(args.out, exist_ok=True)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _prepare(args)
    bath = bath_from_config(cfg)
    model = model_from_config(cfg)
    protocol = protocol_from_config(cfg)
    series = synthesize_fringe(
        protocol, bath, model, noise=cfg["noise"], seed=int(cfg["seed"]),
        density_order=int(cfg["quadrature"]["density_order"]),
        energy_order=int(cfg["quadrature"]["energy_order"]),
        include_background=bool(cfg["include_background"]))
    csv_text = fringe_to_csv(series)
    csv_path = os.path.join(args.out, "fringes.csv")
    with open(csv_path, "w") as fh:
        fh.write(csv_text)
    sidecar = {"schema_version": cfg["schema_version"], "config": cfg,
               "config_hash": config_hash(cfg),
               "csv_hash": hash_bytes(csv_text.encode()),
               "tool_version": __version__}
    write_json(os.path.join(args.out, "fringes.meta.json"), sidecar)
    print(f"wrote {csv_path} ({len(series.t)}x{len(series.phi)} grid)")
    return EXIT_OK


def cmd_analyze(args) -> int:
    series = fringe_from_csv(args.fringes)
    delta_bg = TWO_PI * args.delta_bg_hz
    result = analyze_fringes(series, delta_bg=delta_bg,
                             phase_convention=args.phase_convention)
    with open(args.fringes, "rb") as fh:
        input_hash = hash_bytes(fh.read())
    out = {"schema_version": 1, "input_hash": input_hash,
           "delta_bg_Hz": args.delta_bg_hz,
           "phase_convention": args.phase_convention,
           "analysis": result.to_dict(),
           "delta_Hz": (None if result.delta is None
                        else result.delta / TWO_PI),
           "T2_ms": (None if not math.isfinite(result.T2)
                     else result.T2 * 1e3),
           "warning_count": len(result.warnings)}
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "analysis.json")
    write_json(path, out)
    print(f"wrote {path} ({len(result.warnings)} warnings)")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _prepare(args)
    sweep = cfg.get("sweep")
    if not sweep or "parameter" not in sweep or "values" not in sweep:
        raise ConfigError("sweep config needs {'parameter':..., 'values':[...]}")
    param = sweep["parameter"]
    values = list(sweep["values"])
    if len(values) < 2:
        raise ConfigError("sweep needs at least 2 values")
    if param not in ("peak_density_per_cm3", "temperature_nK"):
        raise ConfigError(f"unsupported sweep parameter {param!r}")

    rows = []
    for value in values:
        cfg_i = json.loads(canonical_json(cfg))
        cfg_i["bath"][param] = value
        bath = bath_from_config(cfg_i)
        model = model_from_config(cfg_i)
        protocol = protocol_from_config(cfg_i)
        series = synthesize_fringe(
            protocol, bath, model, noise=cfg_i["noise"], seed=int(cfg_i["seed"]),
            density_order=int(cfg_i["quadrature"]["density_order"]),
            energy_order=int(cfg_i["quadrature"]["energy_order"]),
            include_background=bool(cfg_i["include_background"]))
        res = analyze_fringes(series, delta_bg=protocol.delta_bg
                              if cfg_i["include_background"] else 0.0,
                              phase_convention="cos2")
        slope = res.slope_fit
        rows.append((value,
                     None if slope is None else slope.params["delta"] / TWO_PI,
                     None if slope is None else slope.errors["delta"] / TWO_PI,
                     res.T2 * 1e3, res.decay_fit.errors["T2"] * 1e3))

    lines = [f"{param},delta_Hz,delta_err_Hz,T2_ms,T2_err_ms"]
    for row in rows:
        lines.append(",".join("" if v is None else format(float(v), ".17g")
                              for v in row))
    text = "\n".join(lines) + "\n"
    path = os.path.join(args.out, "sweep.csv")
    with open(path, "w") as fh:
        fh.write(text)
    write_json(os.path.join(args.out, "sweep.meta.json"),
               {"schema_version": cfg["schema_version"], "config": cfg,
                "config_hash": config_hash(cfg),
                "csv_hash": hash_bytes(text.encode())})
    print(f"wrote {path} ({len(rows)} points)")
    return EXIT_OK


def _read_xy_csv(path):
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim == 1:
        data = data[None, :]
    if data.shape[1] < 2 or np.any(np.isnan(data[:, :2])):
        raise ConfigError(f"{path}: expected numeric CSV columns x,y[,y_err]")
    y_err = data[:, 2] if data.shape[1] > 2 and not np.any(np.isnan(data[:, 2])) else None
    return data[:, 0], data[:, 1], y_err


def cmd_calibrate(args) -> int:
    x, y, y_err = _read_xy_csv(args.data)
    if args.kind == "bfield":
        rep, B_coil = fit_bfield(TWO_PI * x, y, Omega0=TWO_PI * args.rabi_hz,
                                 omega_MW=TWO_PI * args.mw_hz, p_err=y_err)
        payload = {"kind": "bfield", "fit": rep.to_dict(),
                   "omega_bg_Hz": rep.params["omega_bg"] / TWO_PI,
                   "B_coil_mG": B_coil * 1e7}
    elif args.kind == "lightshift":
        rep = fit_light_shift(x, TWO_PI * y, delta_err=None if y_err is None
                              else TWO_PI * y_err)
        payload = {"kind": "lightshift", "fit": rep.to_dict(),
                   "slope_Hz_per_W": rep.params["slope"] / TWO_PI}
    elif args.kind == "zeeman":
        rep = fit_zeeman(x * 1e-4, TWO_PI * y, delta_err=None if y_err is None
                         else TWO_PI * y_err)
        payload = {"kind": "zeeman", "fit": rep.to_dict(),
                   "a_Hz_per_G2": rep.params["a_hz_per_G2"]}
    elif args.kind == "release":
        rep = fit_release_curve(x * CONST.k_B * 1e-6, y, fraction_err=y_err)
        payload = {"kind": "release", "fit": rep.to_dict(),
                   "T_uK": rep.params["T"] * 1e6}
    else:
        raise ConfigError(f"unknown calibration kind {args.kind!r}")

    with open(args.data, "rb") as fh:
        input_hash = hash_bytes(fh.read())
    payload["input_hash"] = input_hash
    payload["schema_version"] = 1
    os.makedirs(args.out, exist_ok=True)
    ledger_path = os.path.join(args.out, "calibration.json")
    ledger = {}
    if os.path.exists(ledger_path):
        with open(ledger_path) as fh:
            ledger = json.load(fh)
    ledger[input_hash] = payload
    write_json(ledger_path, ledger)
    print(f"wrote {ledger_path} entry {input_hash[:12]}")
    return EXIT_OK


def cmd_infer(args) -> int:
    cfg = _prepare(args)
    model = model_from_config(cfg)
    protocol = protocol_from_config(cfg)
    qd = int(cfg["quadrature"]["density_order"])
    qe = int(cfg["quadrature"]["energy_order"])
    if args.kind == "density":
        observed = {}
        if args.delta_hz is not None:
            observed["delta"] = TWO_PI * args.delta_hz
        if args.t2_ms is not None:
            observed["T2"] = args.t2_ms * 1e-3
        if not observed:
            raise ConfigError("density inference needs --delta-hz and/or --t2-ms")
        post = infer_density(observed, cfg["bath"]["temperature_nK"] * 1e-9,
                             model, protocol, density_order=qd, energy_order=qe)
        payload = {"kind": "density", "estimate_per_cm3": post.estimate / 1e6,
                   "interval_per_cm3": [v / 1e6 for v in post.interval]}
    elif args.kind == "temperature":
        if args.t2_ms is None:
            raise ConfigError("temperature inference needs --t2-ms")
        post = infer_temperature(args.t2_ms * 1e-3,
                                 cfg["bath"]["peak_density_per_cm3"] * 1e6,
                                 model, protocol, density_order=qd,
                                 energy_order=qe)
        payload = {"kind": "temperature", "estimate_nK": post.estimate * 1e9,
                   "interval_nK": [v * 1e9 for v in post.interval]}
    else:
        raise ConfigError(f"unknown inference kind {args.kind!r}")

    payload.update({"schema_version": 1, "config_hash": config_hash(cfg),
                    "posterior": post.to_dict(), "flags": post.flags})
    path = os.path.join(args.out, "inference.json")
    write_json(path, payload)
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="impurityprobe",
        description="Simulate and analyze Ramsey signals of a single "
                    "impurity probing a thermal gas.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1,
                       help="reserved; evaluation is deterministic either way")
        p.add_argument("--quadrature-order", type=int, default=None,
                       help="override the energy quadrature order")

    p = sub.add_parser("simulate", help="synthesize a fringe dataset")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="run the extraction pipeline on a fringe CSV")
    p.add_argument("fringes", help="fringe CSV (t_ms,phase_deg,p,p_err)")
    p.add_argument("--out", default=".")
    p.add_argument("--delta-bg-hz", type=float, default=-135.0,
                   help="background detuning to subtract, Hz")
    p.add_argument("--phase-convention", choices=["sin2", "cos2"],
                   default="cos2")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="sweep one bath parameter")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="fit a calibration dataset")
    p.add_argument("kind", choices=["bfield", "lightshift", "zeeman", "release"])
    p.add_argument("data", help="CSV with columns x,y[,y_err]")
    p.add_argument("--out", default=".")
    p.add_argument("--rabi-hz", type=float, default=1.0e3,
                   help="bare Rabi frequency for bfield spectra, Hz")
    p.add_argument("--mw-hz", type=float, default=0.7e6 * 0.1985,
                   help="applied microwave frequency offset, Hz")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("infer", help="invert observables for density or temperature")
    common(p)
    p.add_argument("kind", choices=["density", "temperature"])
    p.add_argument("--delta-hz", type=float, default=None)
    p.add_argument("--t2-ms", type=float, default=None)
    p.set_defaults(func=cmd_infer)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (QuadratureError, FitError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InferenceError as exc:
        print(f"inference flag [{exc.flag}]: {exc}", file=sys.stderr)
        return EXIT_INFERENCE


if __name__ == "__main__":
    sys.exit(main())
