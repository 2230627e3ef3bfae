"""Command line scenario runner.

    optodde run --config cfg.json [--set membrane.m=6]... [--out DIR]
    optodde list-scenarios
    optodde version

Configs are JSON objects merged over :data:`DEFAULTS`; unknown keys are
rejected. Each scenario writes one CSV table and one JSON summary.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import sys
import warnings
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, dipole, fisher, kernels, membrane, phase_contrast, weights
from .detection import DetectionBudget, apply_quantum_efficiency, budget, dde_map
from .errors import ConfigError, NumericalError, PreconditionError, UnsupportedModeError
from .fields import MembraneConfig, OpticalParams

DEFAULTS: dict = {
    "scenario": "membrane-dde",
    "optical": {"wavelength": 1064e-9, "alpha": 1.0, "alpha_signal": None},
    "membrane": {"Lx": 1.5e-3, "Ly": 3.5e-3, "m": 2, "n": 1, "w0": 100e-6, "z_d": 0.33069,
                 "lever_threshold": 0.25},
    "field_model": "propagated",
    "weighting": {"kind": "qpd", "B_over_wd": 0.0},
    "grid": {"device_n": 256, "far_nx": 1024, "far_ny": 256, "lever_nx": 1600, "lever_ny": 256},
    "block_scan": {"B_max_over_wd": 3.0},
    "sweep": {"modes": [[2, 1], [4, 1], [6, 1], [8, 1], [10, 1]], "block": True},
    "dipole": {"NA": 1.0, "alpha0": 1.0, "alpha_dip": 1e-3, "axis": "y0", "gouy": 1.0,
               "n_theta": 400, "n_phi": 512, "geometry": "strip", "n_samples": 201},
    "phase_contrast": {"scheme": "array", "samples_per_pitch": 200, "ny": 128, "g_max": 0.6,
                       "mask_n": 1024, "threshold_lo": 0.0, "threshold_hi": 0.6,
                       "n_samples": 121, "psi_threshold": 0.29, "mask_format": "pgm"},
    "fisher": {"tau": 1.0},
    "eta_qe": None,
    "outputs": {"table": "table.csv", "summary": "summary.json"},
}

SCENARIOS: dict[str, str] = {
    "membrane-dde": "DDE and ideal DDE along x for one membrane mode",
    "membrane-block-scan": "efficiency versus centre block width",
    "membrane-sweep": "standard and blocked QPD relative to an interferometer",
    "dipole-irp": "information radiation pattern and collection efficiency",
    "dipole-block-scan": "dipole efficiency versus block angle",
    "phase-contrast": "photodiode array gap scan or threshold-mask scan",
    "fisher-check": "QFI against ideal imprecision across scenarios",
}

POSITIVE = {("optical", "wavelength"), ("membrane", "Lx"), ("membrane", "Ly"), ("membrane", "w0"),
            ("membrane", "z_d"), ("membrane", "lever_threshold"), ("dipole", "NA"),
            ("fisher", "tau"), ("block_scan", "B_max_over_wd")}


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def parse_override(item: str) -> tuple[list[str], object]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(cfg: dict, overrides: Sequence[str]) -> dict:
    for item in overrides:
        keys, value = parse_override(item)
        nested: dict = value
        for k in reversed(keys):
            nested = {k: nested}
        cfg = merge(cfg, nested)
    return cfg


def load_config(path: str | Path | None, overrides: Sequence[str] = ()) -> dict:
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    cfg = apply_overrides(merge(DEFAULTS, raw), overrides)
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    if cfg["scenario"] not in SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg['scenario']!r}")
    for section, key in POSITIVE:
        v = cfg[section][key]
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            raise ConfigError(f"{section}.{key} must be a positive number")
    if cfg["optical"]["alpha"] < 0:
        raise ConfigError("optical.alpha must be non-negative")
    if cfg["field_model"] not in ("propagated", "optical_lever"):
        raise ConfigError("field_model must be 'propagated' or 'optical_lever'")
    if cfg["weighting"]["kind"] not in ("qpd", "blocked_qpd", "linear"):
        raise ConfigError("weighting.kind must be qpd, blocked_qpd or linear")
    if cfg["phase_contrast"]["scheme"] not in ("array", "mask"):
        raise ConfigError("phase_contrast.scheme must be 'array' or 'mask'")
    if cfg["phase_contrast"]["mask_format"] not in ("pgm", "csv", "none"):
        raise ConfigError("phase_contrast.mask_format must be pgm, csv or none")
    if cfg["dipole"]["geometry"] not in ("strip", "cap"):
        raise ConfigError("dipole.geometry must be 'strip' or 'cap'")
    for key in ("table", "summary"):
        name = cfg["outputs"][key]
        if not isinstance(name, str) or not name or Path(name).name != name:
            raise ConfigError(f"outputs.{key} must be a plain file name")


def _optical(cfg) -> OpticalParams:
    o = cfg["optical"]
    return OpticalParams(o["wavelength"], o["alpha"], o["alpha_signal"])


def _membrane(cfg) -> MembraneConfig:
    m = dict(cfg["membrane"])
    for key in ("m", "n"):
        if not isinstance(m[key], int) or isinstance(m[key], bool):
            raise ConfigError(f"membrane.{key} must be an integer")
    return MembraneConfig(**m)


def _dipole(cfg) -> dipole.DipoleConfig:
    d = {k: v for k, v in cfg["dipole"].items() if k not in ("geometry", "n_samples")}
    return dipole.DipoleConfig(wavelength=cfg["optical"]["wavelength"], **d)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def emit_table(path: str | Path, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    """RFC 4180 CSV with CRLF line ends and shortest round-trip floats."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def emit_summary(path: str | Path, cfg: dict, results: dict, grids: dict,
                 budget_: DetectionBudget | None = None, residual: float | None = None) -> dict:
    summary: dict = {"scenario": cfg["scenario"], "version": __version__}
    if budget_ is not None:
        summary.update(budget_.as_dict())
    if residual is not None:
        summary["dde_integral_residual"] = residual
    summary["results"] = results
    summary["grids"] = grids
    summary["backend"] = kernels.backend()
    summary["config"] = cfg
    summary = _jsonable(summary)
    Path(path).write_text(json.dumps(summary, indent=2, allow_nan=False) + "\n", encoding="ascii")
    return summary


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

class Output:
    def __init__(self, out_dir: Path, cfg: dict):
        self.dir = out_dir
        self.cfg = cfg

    def table(self, columns, rows):
        emit_table(self.dir / self.cfg["outputs"]["table"], columns, rows)

    def summary(self, results, grids, b=None, residual=None):
        return emit_summary(self.dir / self.cfg["outputs"]["summary"], self.cfg, results, grids,
                            b, residual)


def _membrane_fields(cfg, mcfg, params):
    g = cfg["grid"]
    if cfg["field_model"] == "optical_lever":
        f = membrane.optical_lever_scenario(mcfg, params, g["lever_nx"], g["lever_ny"])
        return f, {"far_nx": g["lever_nx"], "far_ny": g["lever_ny"], "model": "optical_lever"}
    res = membrane.PipelineGrid(g["device_n"], g["far_nx"], g["far_ny"])
    return membrane.far_fields(mcfg, params, res), {"device_n": g["device_n"], "far_nx": g["far_nx"],
                                                     "far_ny": g["far_ny"], "model": "propagated"}


def _membrane_weight(cfg, fields, w_d):
    w = cfg["weighting"]
    if w["kind"] == "qpd":
        return weights.qpd()
    if w["kind"] == "linear":
        return weights.linear(w_d)
    return weights.blocked_qpd(weights.snap_block(w["B_over_wd"] * w_d, fields.grid))


def _maybe_qe(cfg, b):
    return b if cfg["eta_qe"] is None else apply_quantum_efficiency(b, cfg["eta_qe"])


def run_membrane_dde(cfg, out: Output):
    params, mcfg = _optical(cfg), _membrane(cfg)
    fields, grids = _membrane_fields(cfg, mcfg, params)
    fw = _membrane_weight(cfg, fields, mcfg.w_d(params.k))
    b = budget(fields, fw, params)
    prof = dde_map(fields, fw, params, b).reduce_to_x()
    integral, ideal_integral = prof.integral_check, prof.ideal_integral
    rows = [(x, v, i) for x, v, i in zip(prof.x, prof.values, prof.ideal)]
    rows.append(("eta_integral", integral, ideal_integral))
    out.table(("x_m", "dde_per_m", "ideal_dde_per_m"), rows)
    results = {"eta_dde_integral": integral, "ideal_dde_integral": ideal_integral,
               "w_d_m": mcfg.w_d(params.k), "km_w0": mcfg.k_m * mcfg.w0, "weighting": fw.kind}
    if cfg["eta_qe"] is not None:
        results["eta_with_qe"] = _maybe_qe(cfg, b).eta
    return out.summary(results, grids, b, abs(integral - b.eta))


def run_membrane_block_scan(cfg, out: Output):
    params, mcfg = _optical(cfg), _membrane(cfg)
    fields, grids = _membrane_fields(cfg, mcfg, params)
    wd = mcfg.w_d(params.k)
    r = membrane.optimize_block(fields, params, wd, B_max_over_wd=cfg["block_scan"]["B_max_over_wd"])
    rows = [(B, B / wd, eta, membrane.blocked_power_fraction(fields, B), int(i == r.scan.best_index))
            for i, (B, eta) in enumerate(zip(r.scan.samples, r.scan.values))]
    out.table(("B_m", "B_over_wd", "eta", "blocked_fraction", "is_optimum"), rows)
    prof = dde_map(fields, weights.blocked_qpd(r.B_lattice), params, r.budget)
    results = {"B_star_m": r.B_star, "B_star_over_wd": r.B_over_wd, "B_lattice_over_wd": r.B_lattice / wd,
               "eta_star": r.eta_star, "eta_standard": r.eta_standard, "improvement": r.improvement,
               "blocked_fraction": r.blocked_fraction, "w_d_m": wd}
    return out.summary(results, grids, r.budget, abs(prof.integral_check - r.budget.eta))


def run_membrane_sweep(cfg, out: Output):
    params, mcfg = _optical(cfg), _membrane(cfg)
    g = cfg["grid"]
    modes = [tuple(int(v) for v in mn) for mn in cfg["sweep"]["modes"]]
    rows = membrane.relative_sensitivity_sweep(modes, mcfg, params, bool(cfg["sweep"]["block"]),
                                               membrane.PipelineGrid(g["device_n"], g["far_nx"], g["far_ny"]))
    cols = membrane.SWEEP_COLUMNS
    out.table(cols, [[r[c] for c in cols] for r in rows])
    ref = membrane.interferometer_benchmark(params)
    return out.summary({"interferometer_S_imp": ref.S_imp, "interferometer_S_ba": ref.S_ba,
                        "n_modes": len(rows)},
                       {"device_n": g["device_n"], "far_nx": g["far_nx"], "far_ny": g["far_ny"]})


def run_dipole_irp(cfg, out: Output):
    dcfg = _dipole(cfg)
    fact = dipole.eta_factorization(dcfg)
    full = dipole.irp(dcfg)
    T = full.grid.theta
    per_theta = full.values.sum(axis=1) * full.grid.row_weights / full.grid.dtheta
    dde = dipole.dipole_dde(dcfg)
    cap_theta = dde.grid.theta
    dde_theta = dde.values.sum(axis=1) * dde.grid.row_weights / dde.grid.dtheta
    lookup = dict(zip(np.round(cap_theta, 12).tolist(), dde_theta.tolist()))
    rows = [(t, v, lookup.get(round(float(t), 12), "")) for t, v in zip(T, per_theta)]
    out.table(("theta_rad", "irp_per_rad", "qpd_dde_per_rad"), rows)
    results = {"axis": dcfg.axis, "NA": dcfg.NA, "eta_col": fact.eta_col, "eta_qpd": fact.eta_qpd,
               "irp_full_sphere_integral": full.integral_check,
               "information_over_k2_alpha_dip2": dipole.full_information(dcfg)
               / (dcfg.params.k ** 2 * dcfg.alpha_dip ** 2)}
    grids = {"n_theta": dcfg.n_theta, "n_phi": dcfg.n_phi, "sphere_n_theta": 2 * dcfg.n_theta}
    return out.summary(results, grids, fact.budget, abs(dde.integral_check - fact.eta))


def run_dipole_block_scan(cfg, out: Output):
    dcfg = _dipole(cfg)
    geom = cfg["dipole"]["geometry"]
    r = dipole.block_angle_optimization(dcfg, geom, cfg["dipole"]["n_samples"])
    rows = [(t, eta, fr, int(i == r.scan.best_index))
            for i, (t, eta, fr) in enumerate(zip(r.scan.samples, r.scan.values, r.fractions))]
    out.table(("theta_b_rad", "eta", "blocked_fraction", "is_optimum"), rows)
    tb = float(r.scan.samples[r.scan.best_index])
    fw = weights.sphere_blocked_qpd(tb, dcfg.axis, geom)
    b = dipole.dipole_budget(dcfg, fw)
    prof = dipole.dipole_dde(dcfg, fw)
    results = {"geometry": geom, "theta_b_star_rad": r.theta_b, "eta_star": r.eta_star,
               "eta_standard": r.eta_standard, "blocked_fraction": r.blocked_fraction,
               "eta_col": dipole.collection_efficiency(dcfg)}
    grids = {"n_theta": dcfg.n_theta, "n_phi": dcfg.n_phi, "n_samples": cfg["dipole"]["n_samples"]}
    return out.summary(results, grids, b, abs(prof.integral_check - b.eta))


def run_phase_contrast(cfg, out: Output):
    params, mcfg = _optical(cfg), _membrane(cfg)
    pc = cfg["phase_contrast"]
    if pc["scheme"] == "array":
        r = phase_contrast.optimize_gap(mcfg, params, pc["samples_per_pitch"], pc["ny"], pc["g_max"])
        out.table(("gap_fraction", "eta"), list(zip(r.scan.samples, r.scan.values)))
        fields = phase_contrast.image_fields(
            mcfg, phase_contrast.array_grid(mcfg, pc["samples_per_pitch"], pc["ny"]))
        g_best = float(r.scan.samples[r.scan.best_index])
        fw = weights.array_1d(np.pi / mcfg.k_m, g_best)
        b = budget(fields, fw, params)
        prof = dde_map(fields, fw, params, b)
        results = {"scheme": "array", "gap_star": r.gap, "eta_star": r.eta, "eta_no_gap": r.eta_no_gap,
                   "km_w0": mcfg.k_m * mcfg.w0}
        grids = {"samples_per_pitch": pc["samples_per_pitch"], "ny": pc["ny"]}
        return out.summary(results, grids, b, abs(prof.integral_check - b.eta))
    r = phase_contrast.optimize_threshold(mcfg, params, pc["mask_n"], pc["threshold_lo"],
                                          pc["threshold_hi"], pc["n_samples"])
    out.table(("psi_threshold", "eta"), list(zip(r.samples, r.values)))
    grid = phase_contrast.mask_grid(mcfg, pc["mask_n"])
    fields = phase_contrast.image_fields(mcfg, grid)
    t = pc["psi_threshold"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b = phase_contrast.threshold_mask_budget(mcfg, t, params, fields=fields)
    fw = weights.threshold_mask(lambda X, Y: np.sin(mcfg.k_m * X) * np.cos(mcfg.k_n * Y), t)
    prof = dde_map(fields, fw, params, b)
    mask = phase_contrast.emit_mask(mcfg, t, grid)
    if pc["mask_format"] == "pgm":
        phase_contrast.write_pgm(out.dir / "mask.pgm", mask)
    elif pc["mask_format"] == "csv":
        phase_contrast.write_mask_csv(out.dir / "mask.csv", mask)
    results = {"scheme": "mask", "psi_threshold": t, "eta_at_threshold": b.eta,
               "threshold_argmax": r.argmax, "eta_max": r.value,
               "open_fraction": float(mask.mean())}
    return out.summary(results, {"mask_n": pc["mask_n"]}, b, abs(prof.integral_check - b.eta))


def run_fisher_check(cfg, out: Output):
    params, mcfg = _optical(cfg), _membrane(cfg)
    tau = cfg["fisher"]["tau"]
    g = cfg["grid"]
    cases = {}
    cases["membrane_far_field"] = membrane.far_fields(
        mcfg, params, membrane.PipelineGrid(g["device_n"], g["far_nx"], g["far_ny"]))
    cases["interferometer"] = membrane.interferometer_fields(mcfg, g["device_n"])
    rows = []
    worst = 0.0
    for name, f in cases.items():
        q = fisher.qfi(f, params)
        d = fisher.decompose(f)
        S_ideal = 1.0 / (4 * params.k ** 2 * params.alpha_s ** 2 * f.signal_norm())
        product = q.F_Q * S_ideal
        worst = max(worst, abs(product - 1))
        rows.append((name, q.F_Q, S_ideal, product, d.phi_I, d.n_perp, fisher.cramer_rao(q, tau)))
    out.table(("case", "F_Q_per_s_m2", "S_ideal_m2_per_Hz", "F_Q_times_S_ideal", "phi_I", "n_perp",
               "cramer_rao_m2"), rows)
    b = budget(cases["membrane_far_field"], weights.qpd(), params)
    return out.summary({"max_abs_FQ_S_ideal_minus_1": worst, "tau_s": tau},
                       {"device_n": g["device_n"], "far_nx": g["far_nx"], "far_ny": g["far_ny"]}, b)


RUNNERS: dict[str, Callable] = {
    "membrane-dde": run_membrane_dde,
    "membrane-block-scan": run_membrane_block_scan,
    "membrane-sweep": run_membrane_sweep,
    "dipole-irp": run_dipole_irp,
    "dipole-block-scan": run_dipole_block_scan,
    "phase-contrast": run_phase_contrast,
    "fisher-check": run_fisher_check,
}


def run(config: str | Path | None, overrides: Sequence[str] = (), out_dir: str | Path = ".") -> dict:
    cfg = load_config(config, overrides)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return RUNNERS[cfg["scenario"]](cfg, Output(out, cfg))


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optodde", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    r.add_argument("--out", default=".")
    sub.add_parser("list-scenarios", help="show available scenarios")
    sub.add_parser("version", help="print the version")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return 0
    if args.command == "list-scenarios":
        for name, text in SCENARIOS.items():
            print(f"{name}\t{text}")
        return 0
    try:
        run(args.config, args.overrides, args.out)
    except (ConfigError, PreconditionError, UnsupportedModeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
