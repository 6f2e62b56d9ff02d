"""Config-driven experiment driver.

Subcommands: synth, flow, qdelta, counterexample, mollify, plots.
Every run writes its outputs plus a ``run_manifest.json`` recording the
resolved configuration, wall-clock per stage and a sha256 digest of each
output file; identical config and seed reproduce identical CSV bytes.

Exit codes: 0 success, 2 config error, 3 numerical-gate failure, 4 blow-up.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import (ConfigError, Option, Schema, choice_of, load_config,
                     parse_bool, parse_float, parse_floats, parse_int,
                     parse_ints, parse_str)
from .flow import (BlowUpError, FlowParams, PhaseBox, PhaseState,
                   default_step, integrate, write_trajectory_csv)
from .spectral import (RegularityTarget, load_field, save_field, synthesize)
from .stability import (ContainmentError, EnsembleSpec, ShiftSpec,
                        fit_log_exponent, mollification_cauchy_study,
                        q_delta, q_scaling_study, step_robustness)
from .turning import (WindowEscapeError, certify_window, fit_separation_exponent,
                      oscillation_family, separation_scan)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GATE = 3
EXIT_BLOWUP = 4

GATE_THRESHOLD = 0.01


class GateFailure(RuntimeError):
    """A numerical validity gate failed; results are not trustworthy."""


def _fmt(x):
    return f"{x:.17g}"


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                _fmt(c) if isinstance(c, float) else str(c) for c in row) + "\n")


class RunManifest:
    """Collects config, timings and output digests for one run."""

    def __init__(self, command, resolved, seed):
        self.command = command
        self.resolved = resolved
        self.seed = seed
        self.timings = {}
        self.outputs = {}
        self.extra = {}

    def time_stage(self, name):
        manifest = self

        class _Stage:
            def __enter__(self):
                self.start = time.perf_counter()
                return self

            def __exit__(self, *exc):
                manifest.timings[name] = time.perf_counter() - self.start
                return False

        return _Stage()

    def register(self, path):
        self.outputs[os.path.basename(path)] = _sha256(path)

    def write(self, out_dir):
        doc = {
            "command": self.command,
            "artifact_version": __version__,
            "seed": self.seed,
            "config": _jsonable(self.resolved),
            "wall_clock_s": self.timings,
            "output_digests": self.outputs,
        }
        doc.update(self.extra)
        path = os.path.join(out_dir, "run_manifest.json")
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        return path


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


# -- shared option blocks -------------------------------------------------------


def _field_options(require_synth=False):
    return {
        "field.file": Option(parse_str, None),
        "field.dim": Option(parse_int, 1),
        "field.period": Option(parse_float, None),
        "field.s": Option(parse_float, None),
        "field.cutoff": Option(parse_int, None),
        "field.amplitude": Option(parse_float, None),
        "field.decay_margin": Option(parse_float, 0.05),
        "field.gradient": Option(parse_bool, False),
        "field.seed": Option(parse_int, None),
    }


ENSEMBLE_OPTIONS = {
    "ensemble.count": Option(parse_int, 512),
    "ensemble.sampling": Option(
        choice_of("grid", "low-discrepancy", "pseudorandom"), "low-discrepancy"),
    "ensemble.x_min": Option(parse_floats, (0.0,)),
    "ensemble.x_max": Option(parse_floats, (1.0,)),
    "ensemble.v_min": Option(parse_floats, (0.0,)),
    "ensemble.v_max": Option(parse_floats, (1.0,)),
}

FLOW_OPTIONS = {
    "flow.h": Option(parse_str, "auto"),
    "flow.T": Option(parse_float),
    "flow.record_stride": Option(parse_int, 1),
}


def _resolve_field(cfg, master_seed):
    if cfg.get("field.file"):
        path = cfg["field.file"]
        if not os.path.exists(path):
            raise ConfigError(f"key 'field.file': no such file {path!r}")
        return load_field(path)
    for key in ("field.s", "field.cutoff", "field.amplitude", "field.period"):
        if cfg.get(key) is None:
            raise ConfigError(
                f"missing required key {key!r} (or provide field.file)")
    seed = cfg["field.seed"] if cfg["field.seed"] is not None else master_seed
    try:
        target = RegularityTarget(s=cfg["field.s"], cutoff=cfg["field.cutoff"],
                                  amplitude=cfg["field.amplitude"],
                                  decay_margin=cfg["field.decay_margin"])
        return synthesize(target, dim=cfg["field.dim"], period=cfg["field.period"],
                          seed=seed, gradient=cfg["field.gradient"])
    except ValueError as exc:
        raise ConfigError(f"field.* block invalid: {exc}") from exc


def _resolve_ensemble(cfg, master_seed):
    try:
        omega = PhaseBox(
            np.concatenate([cfg["ensemble.x_min"], cfg["ensemble.v_min"]]),
            np.concatenate([cfg["ensemble.x_max"], cfg["ensemble.v_max"]]))
        return EnsembleSpec(omega=omega, sampling=cfg["ensemble.sampling"],
                            count=cfg["ensemble.count"], seed=master_seed)
    except ValueError as exc:
        raise ConfigError(f"ensemble.* block invalid: {exc}") from exc


def _resolve_flow(cfg, field):
    raw_h = cfg["flow.h"]
    if raw_h == "auto":
        h = default_step(field)
    else:
        try:
            h = float(raw_h)
        except ValueError:
            raise ConfigError(f"key 'flow.h': expected a number or 'auto', got {raw_h!r}")
    try:
        return FlowParams(h=h, T=cfg["flow.T"], record_stride=cfg["flow.record_stride"])
    except ValueError as exc:
        raise ConfigError(f"flow.* block invalid: {exc}") from exc


# -- synth -----------------------------------------------------------------------


SYNTH_SCHEMA = Schema("synth", {
    "seed": Option(parse_int, 0),
    **{k: v for k, v in _field_options().items() if k != "field.file"},
})


def cmd_synth(cfg, out_dir, seed, workers):
    manifest = RunManifest("synth", cfg, seed)
    with manifest.time_stage("synthesize"):
        field = _resolve_field({**cfg, "field.file": None}, seed)
    path = os.path.join(out_dir, "field.json")
    with manifest.time_stage("write"):
        save_field(field, path)
    manifest.register(path)
    manifest.extra["sup_bound"] = field.sup_bound
    manifest.extra["mode_count"] = field.mode_count()
    manifest.write(out_dir)
    print(f"synth: {field!r} -> {path}")
    return EXIT_OK


# -- flow ------------------------------------------------------------------------


FLOW_SCHEMA = Schema("flow", {
    "seed": Option(parse_int, 0),
    **_field_options(),
    **FLOW_OPTIONS,
    "flow.x0": Option(parse_floats),
    "flow.v0": Option(parse_floats),
})


def cmd_flow(cfg, out_dir, seed, workers):
    manifest = RunManifest("flow", cfg, seed)
    field = _resolve_field(cfg, seed)
    params = _resolve_flow(cfg, field)
    try:
        state0 = PhaseState(np.array(cfg["flow.x0"]), np.array(cfg["flow.v0"]))
    except ValueError as exc:
        raise ConfigError(f"flow.x0/flow.v0 invalid: {exc}") from exc
    if state0.dim != field.dim:
        raise ConfigError(
            f"key 'flow.x0': dimension {state0.dim} does not match field dim {field.dim}")
    with manifest.time_stage("integrate"):
        traj = integrate(field.evaluate_batch, state0, params)
    path = os.path.join(out_dir, "trajectory.csv")
    write_trajectory_csv(traj, path)
    manifest.register(path)
    manifest.write(out_dir)
    print(f"flow: {len(traj)} samples -> {path}")
    return EXIT_OK


# -- qdelta -----------------------------------------------------------------------


QDELTA_SCHEMA = Schema("qdelta", {
    "seed": Option(parse_int, 0),
    **_field_options(),
    **ENSEMBLE_OPTIONS,
    **FLOW_OPTIONS,
    "qdelta.deltas": Option(parse_floats),
    "qdelta.direction": Option(parse_floats, None),
    "qdelta.gate": Option(parse_bool, True),
})


def cmd_qdelta(cfg, out_dir, seed, workers):
    manifest = RunManifest("qdelta", cfg, seed)
    field = _resolve_field(cfg, seed)
    ensemble = _resolve_ensemble(cfg, seed)
    params = _resolve_flow(cfg, field)
    deltas = list(cfg["qdelta.deltas"])
    ceiling = float(np.exp(-1.0))
    if any(not 0.0 < d < ceiling for d in deltas):
        raise ConfigError("key 'qdelta.deltas': every delta must lie in (0, 1/e)")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ConfigError("key 'qdelta.deltas': list must be strictly decreasing")
    direction = cfg["qdelta.direction"]
    if direction is not None:
        direction = np.array(direction)

    with manifest.time_stage("scaling_study"):
        study = _run_scaling(field, ensemble, deltas, params, direction, workers)

    csv_path = os.path.join(out_dir, "qdelta_scaling.csv")
    _write_csv(csv_path, ["delta", "Q", "Q_over_log", "n_samples", "h", "seed"],
               [(r.delta, r.q, r.q_over_log, study.n_samples, study.h, study.seed)
                for r in study.rows])
    manifest.register(csv_path)

    summary = {
        "deltas": deltas,
        "Q": [r.q for r in study.rows],
        "gate": None,
        "valid": True,
        "fit": None,
    }
    exit_code = EXIT_OK
    if cfg["qdelta.gate"]:
        with manifest.time_stage("step_gate"):
            gate = step_robustness(field, ensemble, [deltas[0], deltas[-1]],
                                   params, direction)
        summary["gate"] = {
            "deltas": list(gate.deltas),
            "Q_coarse": list(gate.q_coarse),
            "Q_fine": list(gate.q_fine),
            "max_rel_change": gate.max_rel_change,
            "threshold": GATE_THRESHOLD,
            "passed": gate.passed(GATE_THRESHOLD),
        }
        if not gate.passed(GATE_THRESHOLD):
            summary["valid"] = False
            exit_code = EXIT_GATE
    if summary["valid"]:
        fit = fit_log_exponent(study.deltas(), study.qs())
        summary["fit"] = {
            "p_hat": fit.slope, "intercept": fit.intercept,
            "residual": fit.residual, "n_used": fit.n_used,
            "excluded_rows": list(fit.excluded),
        }
    fit_path = os.path.join(out_dir, "qdelta_fit.json")
    with open(fit_path, "w") as fh:
        json.dump(_jsonable(summary), fh, indent=1)
        fh.write("\n")
    manifest.register(fit_path)
    manifest.write(out_dir)
    if exit_code == EXIT_GATE:
        print("qdelta: step-robustness gate FAILED; run marked invalid", file=sys.stderr)
    else:
        print(f"qdelta: p_hat = {summary['fit']['p_hat']:.4f} -> {csv_path}")
    return exit_code


def _run_scaling(field, ensemble, deltas, params, direction, workers):
    if workers <= 1:
        return q_scaling_study(field, ensemble, deltas, params, direction)
    # keyed reduction: one job per delta, assembled in delta order
    from .spectral import field_to_json
    payload = field_to_json(field)
    jobs = [(payload, ensemble.omega.lower.tolist(), ensemble.omega.upper.tolist(),
             ensemble.sampling, ensemble.count, ensemble.seed, float(d),
             None if direction is None else list(direction), params.h, params.T)
            for d in deltas]
    results = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for delta, q in pool.map(_qdelta_worker, jobs):
            results[delta] = q
    from .stability import ScalingRow, ScalingStudy
    rows = tuple(ScalingRow(d, results[d], results[d] / float(np.log(1.0 / d)))
                 for d in deltas)
    return ScalingStudy(rows, ensemble.count, params.h, params.T, ensemble.seed)


def _qdelta_worker(job):
    (payload, lo, hi, sampling, count, seed, delta, direction, h, T) = job
    from .spectral import field_from_json
    field = field_from_json(payload)
    ensemble = EnsembleSpec(PhaseBox(np.array(lo), np.array(hi)),
                            sampling=sampling, count=count, seed=seed)
    shift = ShiftSpec(delta, None if direction is None else np.array(direction))
    q = q_delta(field, ensemble, shift, FlowParams(h=h, T=T))
    return delta, q


# -- counterexample ----------------------------------------------------------------


COUNTEREXAMPLE_SCHEMA = Schema("counterexample", {
    "seed": Option(parse_int, 0),
    "counterexample.h": Option(choice_of("sin", "sin2", "triangle"), "sin"),
    "counterexample.amplitude": Option(parse_float, 1.0),
    "counterexample.alpha": Option(parse_float, 0.25),
    "counterexample.n_list": Option(parse_ints),
    "counterexample.v_window": Option(parse_str, "auto"),
    "counterexample.window_threshold": Option(parse_float, 0.1),
    "counterexample.z_max": Option(parse_float, 8e4),
    "counterexample.quad_tol": Option(parse_float, 1e-12),
})


def cmd_counterexample(cfg, out_dir, seed, workers):
    manifest = RunManifest("counterexample", cfg, seed)
    alpha = cfg["counterexample.alpha"]
    if not 0.0 < alpha < 0.5:
        raise ConfigError(
            f"key 'counterexample.alpha': must lie in (0, 1/2), got {alpha}")
    if cfg["counterexample.quad_tol"] > 1e-10:
        raise ConfigError("key 'counterexample.quad_tol': scans require <= 1e-10")
    osc = oscillation_family(cfg["counterexample.h"], cfg["counterexample.amplitude"])
    n_list = list(cfg["counterexample.n_list"])

    window_info = None
    eta_window = None
    eta_star = None
    if cfg["counterexample.v_window"] == "auto":
        if osc.is_zero:
            raise ConfigError(
                "key 'counterexample.v_window': auto window needs a nonzero "
                "oscillation; give an explicit window for the ballistic control")
        with manifest.time_stage("window_certification"):
            cert = certify_window(osc, threshold=cfg["counterexample.window_threshold"],
                                  z_max=cfg["counterexample.z_max"])
        v_window = cert.v_window
        eta_window = (cert.eta_lo, cert.eta_hi)
        eta_star = cert.eta_star
        window_info = {
            "eta_lo": cert.eta_lo, "eta_hi": cert.eta_hi, "eta_star": cert.eta_star,
            "threshold": cert.threshold, "tail_bound": cert.tail_bound,
            "eta_grid": cert.etas.tolist(), "a_values": cert.values.tolist(),
        }
    else:
        try:
            lo, hi = (float(t) for t in cfg["counterexample.v_window"].split(","))
        except ValueError:
            raise ConfigError(
                "key 'counterexample.v_window': expected 'auto' or 'lo,hi'")
        v_window = (lo, hi)

    with manifest.time_stage("scan"):
        result = _run_scan(osc, alpha, v_window, n_list, eta_window, eta_star,
                           cfg["counterexample.quad_tol"], cfg["counterexample.z_max"],
                           workers)

    csv_path = os.path.join(out_dir, "counterexample_scan.csv")
    _write_csv(csv_path,
               ["N", "delta", "t0", "t0_delta", "separation", "eta", "A_eta",
                "ratio", "quadrature_tol"],
               [(r.n_osc, r.delta, r.t0, r.t0_delta, r.separation, r.eta,
                 r.a_eta, r.ratio, r.quad_tol) for r in result.rows])
    manifest.register(csv_path)

    summary = {
        "h_family": osc.name,
        "alpha": alpha,
        "v_window": list(v_window),
        "window_certification": window_info,
        "valid": True,
        "fit": None,
    }
    exit_code = EXIT_OK
    smallest = min(r.separation for r in result.rows)
    if smallest <= 0 or cfg["counterexample.quad_tol"] > 1e-2 * smallest:
        summary["valid"] = False
        exit_code = EXIT_GATE
    elif len(result.rows) < 4:
        summary["valid"] = False
        summary["reason"] = "fit refused: fewer than 4 rows"
        exit_code = EXIT_GATE
    if summary["valid"]:
        fit = fit_separation_exponent(result.n_values(), result.separations())
        summary["fit"] = {
            "slope": fit.slope, "intercept": fit.intercept,
            "residual": fit.residual, "n_used": fit.n_used,
            "excluded_rows": list(fit.excluded),
        }
    fit_path = os.path.join(out_dir, "counterexample_fit.json")
    with open(fit_path, "w") as fh:
        json.dump(_jsonable(summary), fh, indent=1)
        fh.write("\n")
    manifest.register(fit_path)
    manifest.write(out_dir)
    if exit_code == EXIT_GATE:
        print("counterexample: fit refused (gate failure)", file=sys.stderr)
    else:
        print(f"counterexample: slope = {summary['fit']['slope']:.4f} -> {csv_path}")
    return exit_code


def _run_scan(osc, alpha, v_window, n_list, eta_window, eta_star, quad_tol,
              z_max, workers):
    if workers <= 1:
        return separation_scan(osc, alpha, v_window, n_list,
                               eta_window=eta_window, eta_star=eta_star,
                               quad_tol=quad_tol, a_z_max=z_max)
    jobs = [(osc.name, tuple(osc.modes), alpha, v_window, n, eta_window,
             eta_star, quad_tol, z_max) for n in n_list]
    rows = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for row in pool.map(_scan_row_worker, jobs):
            rows[row.n_osc] = row
    from .turning import ScanResult
    ordered = tuple(rows[n] for n in n_list)
    return ScanResult(ordered, float(alpha), osc.name, tuple(v_window),
                      tuple(eta_window) if eta_window else None)


def _scan_row_worker(job):
    from .turning import OscillationFunction
    (name, modes, alpha, v_window, n, eta_window, eta_star, quad_tol, z_max) = job
    osc = OscillationFunction(name, tuple(modes))
    result = separation_scan(osc, alpha, v_window, [n], eta_window=eta_window,
                             eta_star=eta_star, quad_tol=quad_tol, a_z_max=z_max)
    return result.rows[0]


# -- mollify -----------------------------------------------------------------------


MOLLIFY_SCHEMA = Schema("mollify", {
    "seed": Option(parse_int, 0),
    **_field_options(),
    **ENSEMBLE_OPTIONS,
    **FLOW_OPTIONS,
    "mollify.cutoffs": Option(parse_ints),
})


def cmd_mollify(cfg, out_dir, seed, workers):
    manifest = RunManifest("mollify", cfg, seed)
    field = _resolve_field(cfg, seed)
    ensemble = _resolve_ensemble(cfg, seed)
    params = _resolve_flow(cfg, field)
    cutoffs = list(cfg["mollify.cutoffs"])
    if len(cutoffs) < 2:
        raise ConfigError("key 'mollify.cutoffs': need at least two cutoffs")
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ConfigError("key 'mollify.cutoffs': must be strictly increasing")
    with manifest.time_stage("cauchy_study"):
        rows = mollification_cauchy_study(field, cutoffs, ensemble, params)
    csv_path = os.path.join(out_dir, "mollify_distances.csv")
    _write_csv(csv_path,
               ["cut_low", "cut_high", "sup_component", "integral_component",
                "distance"],
               [(r.cut_low, r.cut_high, r.sup_component, r.integral_component,
                 r.distance) for r in rows])
    manifest.register(csv_path)
    manifest.write(out_dir)
    print(f"mollify: {len(rows)} cutoff pairs -> {csv_path}")
    return EXIT_OK


# -- plots -------------------------------------------------------------------------


PLOTS_SCHEMA = Schema("plots", {"seed": Option(parse_int, 0)})

_PLOT_HEADER = '''\
#!/usr/bin/env python3
"""Render figures from study CSVs in this directory (generated script)."""
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))

def read_csv(name):
    with open(os.path.join(HERE, name)) as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}

'''

_QDELTA_STANZA = '''\
def plot_qdelta():
    data = read_csv("qdelta_scaling.csv")
    loginv = np.log(1.0 / data["delta"])
    fig, ax = plt.subplots()
    ax.plot(loginv, data["Q"], "o-")
    ax.set_xlabel("log(1/delta)")
    ax.set_ylabel("Q_delta(T)")
    ax.set_title("Trajectory-stability functional vs shift size")
    fig.savefig(os.path.join(HERE, "qdelta_scaling.png"), dpi=150)

plot_qdelta()
'''

_COUNTEREXAMPLE_STANZA = '''\
def plot_counterexample():
    data = read_csv("counterexample_scan.csv")
    logn = np.log(data["N"])
    logsep = np.log(data["separation"])
    slope, icpt = np.polyfit(logn, logsep, 1)
    fig, ax = plt.subplots()
    ax.loglog(data["N"], data["separation"], "o", label="measured")
    ax.loglog(data["N"], np.exp(icpt) * data["N"] ** slope, "-",
              label=f"fit slope {slope:.3f}")
    ax.set_xlabel("N")
    ax.set_ylabel("|t0 - t0_delta|")
    ax.legend()
    ax.set_title("Turning-time separation law")
    fig.savefig(os.path.join(HERE, "counterexample_scan.png"), dpi=150)

plot_counterexample()
'''

_MOLLIFY_STANZA = '''\
def plot_mollify():
    data = read_csv("mollify_distances.csv")
    fig, ax = plt.subplots()
    ax.semilogy(data["cut_high"], data["distance"], "o-")
    ax.set_xlabel("spectral cutoff n")
    ax.set_ylabel("flow distance to previous cutoff")
    ax.set_title("Mollified-flow Cauchy distances")
    fig.savefig(os.path.join(HERE, "mollify_distances.png"), dpi=150)

plot_mollify()
'''

_TRAJECTORY_STANZA = '''\
def plot_trajectory():
    data = read_csv("trajectory.csv")
    fig, ax = plt.subplots()
    ax.plot(data["x_1"], data["v_1"], lw=0.7)
    ax.set_xlabel("x_1")
    ax.set_ylabel("v_1")
    ax.set_title("Phase portrait")
    fig.savefig(os.path.join(HERE, "trajectory.png"), dpi=150)

plot_trajectory()
'''


def emit_plots(result_dir, out_path=None):
    """Write a self-contained plotting script for whichever CSVs are present."""
    stanzas = []
    if os.path.exists(os.path.join(result_dir, "qdelta_scaling.csv")):
        stanzas.append(_QDELTA_STANZA)
    if os.path.exists(os.path.join(result_dir, "counterexample_scan.csv")):
        stanzas.append(_COUNTEREXAMPLE_STANZA)
    if os.path.exists(os.path.join(result_dir, "mollify_distances.csv")):
        stanzas.append(_MOLLIFY_STANZA)
    if os.path.exists(os.path.join(result_dir, "trajectory.csv")):
        stanzas.append(_TRAJECTORY_STANZA)
    if out_path is None:
        out_path = os.path.join(result_dir, "plot_results.py")
    with open(out_path, "w") as fh:
        fh.write(_PLOT_HEADER)
        fh.write("\n".join(stanzas) if stanzas else "# no study CSVs found\n")
    return out_path, len(stanzas)


def cmd_plots(cfg, out_dir, seed, workers):
    path, count = emit_plots(out_dir)
    print(f"plots: wrote {path} with {count} stanza(s)")
    return EXIT_OK


# -- driver ------------------------------------------------------------------------


COMMANDS = {
    "synth": (SYNTH_SCHEMA, cmd_synth),
    "flow": (FLOW_SCHEMA, cmd_flow),
    "qdelta": (QDELTA_SCHEMA, cmd_qdelta),
    "counterexample": (COUNTEREXAMPLE_SCHEMA, cmd_counterexample),
    "mollify": (MOLLIFY_SCHEMA, cmd_mollify),
    "plots": (PLOTS_SCHEMA, cmd_plots),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="roughflow",
        description="Newton flows with rough force fields: synthesis, "
                    "integration and stability studies.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="flat key = value config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config master seed")
        p.add_argument("--workers", type=int, default=1,
                       help="worker-pool width for independent jobs")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    schema, runner = COMMANDS[args.command]
    try:
        raw = load_config(args.config) if args.config else {}
        cfg = schema.resolve(raw)
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        cfg["seed"] = seed
        os.makedirs(args.out, exist_ok=True)
        return runner(cfg, args.out, seed, max(1, args.workers))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GateFailure, WindowEscapeError, ContainmentError) as exc:
        print(f"numerical gate failure: {exc}", file=sys.stderr)
        return EXIT_GATE
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
