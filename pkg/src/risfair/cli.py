"""Experiment runner: config parsing, sweeps, validation suites, CSV output.

Subcommands
    simulate <config>    Monte-Carlo scheme comparison, optionally swept over
                         one axis (K, N, p_max, sar_max); writes a CSV table.
    sweep <config>       Same as simulate but requires a sweep section.
    validate <config>    Deterministic-equivalent and gradient validation
                         suite; nonzero exit if any check fails.
    grad-check <config>  The analytic-vs-finite-difference gradient check
                         alone.

``<config>`` is a YAML file (see the schema below) or the name of a packaged
preset (fig_minsinr_vs_K, fig_time_vs_K, fig_sinr_vs_pmax, fig_minsinr_vs_N,
fig_vary_sarmax).  Flags --seed/--trials/--out/--threads override the config,
and environment variables RISFAIR_SEED, RISFAIR_TRIALS, RISFAIR_OUT,
RISFAIR_THREADS sit between the two (flag > env > config).

Config schema (YAML, ``schema_version: 1``)::

    schema_version: 1
    system:            # dimensions and physical constants
      K: 10            # required
      M: 20            # required
      N: 40            # required
      carrier_ghz: 2.5
      rician_kappa: 10.0
      corr_eta_ris: 0.95
      corr_eta_users: 0.95
      bandwidth_hz: 1.0e8
      gain_bs_dbi: 5.0
      gain_user_dbi: 0.0
      gain_ris_dbi: 0.0
    geometry:          # optional; meters
      bs: [0.0, 0.0, 10.0]
      ris: [10.0, 10.0, 15.0]
      user_x_range: [10.0, 15.0]
      user_y_range: [5.0, 10.0]
      user_height: 1.5
    exposure:          # optional
      p_max_w: 0.5     # or p_max_dbm: 27.0
      sar_ref: 6.3e-3  # W/kg per Watt
      sar_max: 2.9e-3  # W/kg
    schemes: [S1, S2, S3, S6]
    sweep:             # optional
      axis: K          # K | N | p_max | sar_max
      values: [2, 4, 6, 10]   # strictly increasing
      m_factor: 2      # K axis only: M = m_factor * K
      n_factor: 4      # K axis only: N = n_factor * K
    n_trials: 50
    seed: 1234
    output: results.csv
    phase_opts:        # optional optimizer overrides
      max_iter: 500
      rel_tol: 1.0e-8
      restarts: 0
      smoothing: 50.0
      fd_step: 1.0e-5
    validate:          # optional; used by validate / grad-check
      tau: 1.0
      dims: [[8, 16, 32], [16, 32, 64]]
      n_trials: 100
      grad_instances: 20

CSV columns (fixed; numbers carry 12 significant digits): scheme, sweep_axis,
sweep_value, K, M, N, n_trials, seed, min_sinr_mean, min_sinr_mean_db,
min_sinr_std, min_sinr_min, min_sinr_max, power_sum_mean_w, stat_time_ms,
trial_time_ms, amortized_time_ms, error.  Identical config+seed reproduces
every column byte-for-byte except the three wall-clock ones.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import yaml

from . import emf, model, phaseopt, power, schemes
from .asymptotics import (
    quadratic_form_concentration,
    resolvent_trace_equivalent,
    solve_dbar,
    solve_taubar,
    validate_theorem1,
    validate_theorem2,
)
from .errors import ConfigError
from .model import SPEED_OF_LIGHT, SystemConfig, sample_complex_gaussian

SCHEMA_VERSION = 1
ENV_PREFIX = "RISFAIR_"
FLOAT_FMT = "%.12g"
SWEEP_AXES = ("K", "N", "p_max", "sar_max")

CSV_COLUMNS = [
    "scheme", "sweep_axis", "sweep_value", "K", "M", "N", "n_trials", "seed",
    "min_sinr_mean", "min_sinr_mean_db", "min_sinr_std", "min_sinr_min",
    "min_sinr_max", "power_sum_mean_w", "stat_time_ms", "trial_time_ms",
    "amortized_time_ms", "error",
]

# test hook: added to the analytic gradient inside the gradient check so the
# validation suite can be shown to fail on a wrong gradient (negative control)
GRADIENT_PERTURBATION = 0.0


def _fmt(x):
    if x is None or x == "":
        return ""
    if isinstance(x, float):
        return FLOAT_FMT % x
    return str(x)


def _line_of(text, key):
    """1-based line of the first occurrence of ``key:`` in the raw config."""
    for i, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith(f"{key}:"):
            return i
    return None


class _Parser:
    """Validating reader over the parsed YAML tree with path-anchored errors."""

    def __init__(self, tree, text, path):
        self.tree = tree
        self.text = text
        self.path = path

    def fail(self, key, msg):
        line = _line_of(self.text, key.split(".")[-1])
        where = f"{self.path}:{line}" if line else self.path
        raise ConfigError(f"{where}: {key}: {msg}")

    def section(self, parent, key, allowed, required=()):
        node = parent.get(key, {})
        if node is None:
            node = {}
        if not isinstance(node, dict):
            self.fail(key, "must be a mapping")
        for sub in node:
            if sub not in allowed:
                self.fail(f"{key}.{sub}", f"unknown field (allowed: {sorted(allowed)})")
        for sub in required:
            if sub not in node:
                self.fail(key, f"missing required field '{sub}'")
        return node


@dataclass
class ExperimentConfig:
    """One experiment: base system, scheme list, optional sweep, run sizes."""

    system: SystemConfig
    geometry_kwargs: dict
    scheme_ids: list
    sweep_axis: str | None
    sweep_values: list
    m_factor: int | None
    n_factor: int | None
    n_trials: int
    seed: int
    output: str | None
    phase_opts: phaseopt.PgaOptions
    validate_tau: float = 1.0
    validate_dims: tuple = ((8, 16, 32), (16, 32, 64))
    validate_trials: int = 100
    grad_instances: int = 20

    def swept_systems(self):
        """(sweep value, SystemConfig) pairs; a single pair when no sweep."""
        if self.sweep_axis is None:
            return [(None, self.system)]
        out = []
        for v in self.sweep_values:
            if self.sweep_axis == "K":
                kk = int(v)
                mm = self.m_factor * kk if self.m_factor else self.system.M
                nn = self.n_factor * kk if self.n_factor else self.system.N
                out.append((v, replace(self.system, K=kk, M=mm, N=nn)))
            elif self.sweep_axis == "N":
                out.append((v, replace(self.system, N=int(v))))
            elif self.sweep_axis == "p_max":
                out.append((v, replace(self.system, p_max_w=float(v))))
            else:  # sar_max
                out.append((v, replace(self.system, sar_max=float(v))))
        return out


_SYSTEM_KEYS = {"K", "M", "N", "carrier_ghz", "rician_kappa", "corr_eta_ris",
                "corr_eta_users", "bandwidth_hz", "gain_bs_dbi",
                "gain_user_dbi", "gain_ris_dbi"}
_GEOMETRY_KEYS = {"bs", "ris", "user_x_range", "user_y_range", "user_height"}
_EXPOSURE_KEYS = {"p_max_w", "p_max_dbm", "sar_ref", "sar_max"}
_SWEEP_KEYS = {"axis", "values", "m_factor", "n_factor"}
_PHASE_KEYS = {"max_iter", "rel_tol", "initial_step", "contraction",
               "armijo_c", "fd_step", "smoothing", "restarts"}
_VALIDATE_KEYS = {"tau", "dims", "n_trials", "grad_instances"}
_TOP_KEYS = {"schema_version", "system", "geometry", "exposure", "schemes",
             "sweep", "n_trials", "seed", "output", "phase_opts", "validate"}


def load_config(path):
    """Parse and validate an experiment config file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    p = _Parser(tree, text, path)

    for key in tree:
        if key not in _TOP_KEYS:
            p.fail(key, f"unknown field (allowed: {sorted(_TOP_KEYS)})")
    version = tree.get("schema_version")
    if version != SCHEMA_VERSION:
        p.fail("schema_version", f"must be {SCHEMA_VERSION}, got {version!r}")

    sys_node = p.section(tree, "system", _SYSTEM_KEYS, required=("K", "M", "N"))
    exp_node = p.section(tree, "exposure", _EXPOSURE_KEYS)
    geo_node = p.section(tree, "geometry", _GEOMETRY_KEYS)

    if "p_max_dbm" in exp_node and "p_max_w" in exp_node:
        p.fail("exposure", "give p_max_w or p_max_dbm, not both")
    p_max_w = float(exp_node.get("p_max_w", 0.5))
    if "p_max_dbm" in exp_node:
        p_max_w = 10.0 ** (float(exp_node["p_max_dbm"]) / 10.0) * 1e-3

    try:
        system = SystemConfig(
            M=int(sys_node["M"]), N=int(sys_node["N"]), K=int(sys_node["K"]),
            carrier_wavelength=SPEED_OF_LIGHT / (float(sys_node.get("carrier_ghz", 2.5)) * 1e9),
            rician_kappa=float(sys_node.get("rician_kappa", 10.0)),
            corr_eta_ris=float(sys_node.get("corr_eta_ris", 0.95)),
            corr_eta_users=float(sys_node.get("corr_eta_users", 0.95)),
            noise_bandwidth_hz=float(sys_node.get("bandwidth_hz", 100e6)),
            gain_bs_dbi=float(sys_node.get("gain_bs_dbi", 5.0)),
            gain_user_dbi=float(sys_node.get("gain_user_dbi", 0.0)),
            gain_ris_dbi=float(sys_node.get("gain_ris_dbi", 0.0)),
            p_max_w=p_max_w,
            sar_ref=float(exp_node.get("sar_ref", 63e-4)),
            sar_max=float(exp_node.get("sar_max", 0.0029)),
        )
    except ValueError as exc:
        p.fail("system", str(exc))

    geometry_kwargs = {}
    if "bs" in geo_node:
        geometry_kwargs["bs_position"] = tuple(map(float, geo_node["bs"]))
    if "ris" in geo_node:
        geometry_kwargs["ris_position"] = tuple(map(float, geo_node["ris"]))
    if "user_x_range" in geo_node:
        geometry_kwargs["x_range"] = tuple(map(float, geo_node["user_x_range"]))
    if "user_y_range" in geo_node:
        geometry_kwargs["y_range"] = tuple(map(float, geo_node["user_y_range"]))
    if "user_height" in geo_node:
        geometry_kwargs["user_height"] = float(geo_node["user_height"])

    raw_schemes = tree.get("schemes") or []
    if not raw_schemes:
        p.fail("schemes", "must be a nonempty list of scheme ids")
    try:
        scheme_ids = [schemes.SchemeId(str(s)) for s in raw_schemes]
    except ValueError:
        p.fail("schemes", f"unknown scheme in {raw_schemes} "
               f"(valid: {[s.value for s in schemes.SchemeId]})")

    sweep_axis = sweep_values = m_factor = n_factor = None
    if "sweep" in tree and tree["sweep"] is not None:
        sw = p.section(tree, "sweep", _SWEEP_KEYS, required=("axis", "values"))
        sweep_axis = str(sw["axis"])
        if sweep_axis not in SWEEP_AXES:
            p.fail("sweep.axis", f"must be one of {SWEEP_AXES}")
        sweep_values = list(sw["values"])
        if len(sweep_values) < 1:
            p.fail("sweep.values", "must be nonempty")
        if any(b <= a for a, b in zip(sweep_values, sweep_values[1:])):
            p.fail("sweep.values", "must be strictly increasing")
        if sweep_axis == "K":
            m_factor = int(sw.get("m_factor", 0)) or None
            n_factor = int(sw.get("n_factor", 0)) or None
        elif "m_factor" in sw or "n_factor" in sw:
            p.fail("sweep", "m_factor/n_factor only apply to the K axis")

    ph_node = p.section(tree, "phase_opts", _PHASE_KEYS)
    phase_opts = phaseopt.PgaOptions(**{k: v for k, v in ph_node.items()})

    val_node = p.section(tree, "validate", _VALIDATE_KEYS)
    dims = val_node.get("dims", [[8, 16, 32], [16, 32, 64]])
    dims = tuple(tuple(int(x) for x in d) for d in dims)
    if any(len(d) != 3 for d in dims) or len(dims) < 2:
        p.fail("validate.dims", "need at least two (K, M, N) triples")

    n_trials = int(tree.get("n_trials", 50))
    if n_trials < 1:
        p.fail("n_trials", "must be >= 1")

    return ExperimentConfig(
        system=system,
        geometry_kwargs=geometry_kwargs,
        scheme_ids=scheme_ids,
        sweep_axis=sweep_axis,
        sweep_values=sweep_values,
        m_factor=m_factor,
        n_factor=n_factor,
        n_trials=n_trials,
        seed=int(tree.get("seed", 0)),
        output=tree.get("output"),
        phase_opts=phase_opts,
        validate_tau=float(val_node.get("tau", 1.0)),
        validate_dims=dims,
        validate_trials=int(val_node.get("n_trials", 100)),
        grad_instances=int(val_node.get("grad_instances", 20)),
    )


def resolve_config_path(name):
    """A filesystem path as-is, otherwise a packaged preset name."""
    if os.path.exists(name):
        return name
    from importlib import resources

    candidate = name if name.endswith(".yaml") else name + ".yaml"
    ref = resources.files("risfair").joinpath("presets", candidate)
    if ref.is_file():
        return str(ref)
    raise ConfigError(f"config not found: {name} (no such file or preset)")


def _simulate_cell(scheme, system, exp):
    summary = schemes.monte_carlo(
        scheme, system, exp.n_trials, exp.seed,
        phase_opts=exp.phase_opts, geometry_kwargs=exp.geometry_kwargs)
    return summary


def run_simulate(exp, threads=1, stream=None):
    """Monte-Carlo table over (scheme, sweep value); returns CSV text."""
    cells = [(scheme, value, system)
             for value, system in exp.swept_systems()
             for scheme in exp.scheme_ids]

    def work(cell):
        scheme, value, system = cell
        try:
            return _simulate_cell(scheme, system, exp), None
        except Exception as exc:  # per-row error column, run continues
            return None, f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, cells))
    else:
        results = [work(c) for c in cells]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for (scheme, value, system), (summary, err) in zip(cells, results):
        row = {
            "scheme": scheme.value,
            "sweep_axis": exp.sweep_axis or "",
            "sweep_value": _fmt(value) if value is not None else "",
            "K": system.K, "M": system.M, "N": system.N,
            "n_trials": exp.n_trials, "seed": exp.seed,
            "error": err or "",
        }
        if summary is not None:
            mean = summary.mean
            row.update({
                "min_sinr_mean": mean,
                "min_sinr_mean_db": 10.0 * math.log10(mean) if mean > 0 else float("-inf"),
                "min_sinr_std": summary.std,
                "min_sinr_min": summary.min,
                "min_sinr_max": summary.max,
                "power_sum_mean_w": float(summary.power_sum.mean()),
                "stat_time_ms": summary.stat_time_s * 1e3,
                "trial_time_ms": summary.mean_trial_time_s * 1e3,
                "amortized_time_ms": summary.amortized_time_s * 1e3,
            })
        writer.writerow([_fmt(row.get(c, "")) for c in CSV_COLUMNS])
        if stream is not None:
            label = f"{scheme.value}" + (f" {exp.sweep_axis}={value}" if value is not None else "")
            status = err or (FLOAT_FMT % summary.mean)
            print(f"  {label}: {status}", file=stream)
    return buf.getvalue()


def _grad_check_instances(exp):
    """Analytic vs central-finite-difference gradient errors, one per instance.

    Instances follow the statistical phase design setup at K=4, M=8, N=16
    with the default exponential correlation; the finite-difference step is
    1e-5 on each theta coordinate.
    """
    errors = []
    h = 1e-5
    base = replace(exp.system, K=4, M=8, N=16)
    for i in range(exp.grad_instances):
        rng = np.random.default_rng(np.random.SeedSequence([exp.seed, 31, i]))
        geom = model.sample_geometry(base, rng, **exp.geometry_kwargs)
        stats = model.build_statistics(base, geom, rng)
        caps = emf.physical_power_caps(emf.ExposureSpec.from_config(base), base.K)
        alpha0 = power.min_power_budget(stats.ell, caps, base.K)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=base.N)
        phases = phaseopt.PhaseVector(theta)

        analytic, _ = phaseopt.taubar_theta_gradient(stats, phases, alpha0,
                                                     stats.noise_power)
        if GRADIENT_PERTURBATION:
            analytic = analytic + GRADIENT_PERTURBATION * max(
                1e-300, float(np.max(np.abs(analytic))))
        fd = np.empty(base.N)
        for n in range(base.N):
            up, dn = theta.copy(), theta.copy()
            up[n] += h
            dn[n] -= h
            f_up = phaseopt.taubar_of_phases(stats, phaseopt.PhaseVector(up),
                                             alpha0, stats.noise_power)
            f_dn = phaseopt.taubar_of_phases(stats, phaseopt.PhaseVector(dn),
                                             alpha0, stats.noise_power)
            fd[n] = (f_up - f_dn) / (2.0 * h)
        scale = max(float(np.max(np.abs(fd))), 1e-300)
        errors.append(float(np.max(np.abs(analytic - fd))) / scale)
    return errors


def run_validate(exp):
    """Validation suite; returns (lines, ok). Byte-deterministic per seed."""
    lines = []
    ok = True

    def check(name, passed, detail):
        nonlocal ok
        ok = ok and passed
        lines.append(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")

    # closed-form fixed points on the identity channel
    m, k = 8, 4
    u_eye = np.eye(m, dtype=complex)
    dbar = solve_dbar(1.0, u_eye, 1.0, k)
    check("closed_form_dbar", abs(dbar - 1.5) < 1e-9,
          f"d_bar={_fmt(dbar)} expected 1.5")
    taubar = solve_taubar(1.0, u_eye, 1.0, k)
    check("closed_form_taubar", abs(taubar - math.sqrt(2.0)) < 1e-9,
          f"tau_bar={_fmt(taubar)} expected sqrt(2)")
    dbar_at = solve_dbar(taubar, u_eye, 1.0, k)
    check("identity_taubar_alpha0_dbar", abs(taubar - dbar_at) < 1e-9,
          f"tau_bar={_fmt(taubar)} alpha0*d_bar={_fmt(dbar_at)}")

    # deterministic-equivalent convergence trends
    r1 = validate_theorem1(exp.validate_tau, exp.system, exp.validate_trials,
                           exp.validate_dims, seed=exp.seed)
    check("theorem1_trend", r1.decreasing,
          "mean spread " + " -> ".join(_fmt(v) for v in r1.mean))
    r2t, r2p = validate_theorem2(exp.system, exp.validate_trials,
                                 exp.validate_dims, seed=exp.seed)
    check("theorem2_tau_trend", r2t.decreasing,
          "mean |tau*-tau_bar|/tau_bar " + " -> ".join(_fmt(v) for v in r2t.mean))
    check("theorem2_power_trend", r2p.decreasing,
          "mean max power error " + " -> ".join(_fmt(v) for v in r2p.mean))

    # quadratic-form concentration: std should roughly halve from M to 4M
    rng = np.random.default_rng(np.random.SeedSequence([exp.seed, 17]))
    stds = []
    for mm in (32, 128):
        x = sample_complex_gaussian(rng, (mm, mm))
        a = (x + x.conj().T) / 2.0
        a = a / np.linalg.norm(a, 2)
        _, s, _ = quadratic_form_concentration(a, 2000, rng)
        stds.append(s)
    ratio = stds[0] / stds[1]
    check("quadratic_form_concentration", 1.0 <= ratio <= 3.0,
          f"std ratio M=32/M=128 = {_fmt(ratio)} (expect about 2)")

    # resolvent deterministic equivalent vs Monte-Carlo
    kk, mm, nn = 32, 64, 64
    rng = np.random.default_rng(np.random.SeedSequence([exp.seed, 19]))
    u = sample_complex_gaussian(rng, (mm, nn))
    u = u / math.sqrt(nn)
    c_mat = np.eye(mm, dtype=complex)
    det = resolvent_trace_equivalent(c_mat, u, -1.0, kk)
    vals = []
    for _ in range(50):
        x = sample_complex_gaussian(rng, (nn, kk))
        b = (u @ x) @ (u @ x).conj().T / kk
        vals.append(np.trace(np.linalg.inv(b + np.eye(mm))).real / kk)
    emp = float(np.mean(vals))
    rel = abs(emp - det) / det
    check("resolvent_trace", rel < 0.05,
          f"empirical={_fmt(emp)} deterministic={_fmt(det)} rel={_fmt(rel)}")

    # implicit-function gradient vs finite differences
    errors = _grad_check_instances(exp)
    worst = max(errors)
    check("gradient_vs_finite_differences", worst < 1e-5,
          f"max relative error {_fmt(worst)} over {len(errors)} instances")

    lines.append(f"{'OK' if ok else 'FAILED'} ({sum(1 for l in lines if l.startswith('PASS'))}"
                 f"/{len(lines)} checks passed)")
    return lines, ok


def _overrides(exp, args):
    """Apply flag > env > config precedence; returns (exp, threads, out).

    ``out`` is the explicit --out/RISFAIR_OUT override only; the config's
    ``output`` field applies to simulate/sweep, where it also lands in
    ``exp.output``.
    """
    env = os.environ
    seed = args.seed if args.seed is not None else env.get(ENV_PREFIX + "SEED")
    trials = args.trials if args.trials is not None else env.get(ENV_PREFIX + "TRIALS")
    out = args.out if args.out is not None else env.get(ENV_PREFIX + "OUT")
    threads = args.threads if args.threads is not None else env.get(ENV_PREFIX + "THREADS")
    if seed is not None:
        exp.seed = int(seed)
    if trials is not None:
        exp.n_trials = int(trials)
        exp.validate_trials = int(trials)
    if out is not None:
        exp.output = out
    return exp, max(1, int(threads)) if threads is not None else 1, out


def _write_output(text, output, stream):
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {output}", file=stream)
    else:
        stream.write(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="risfair",
        description="Fair RIS-aided uplink allocation: simulation and validation runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("simulate", "Monte-Carlo scheme comparison (optional sweep)"),
        ("sweep", "like simulate, but the config must define a sweep"),
        ("validate", "deterministic-equivalent and gradient validation suite"),
        ("grad-check", "analytic vs finite-difference gradient check only"),
    ]:
        cmd = sub.add_parser(name, help=help_)
        cmd.add_argument("config", help="config file path or preset name")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--trials", type=int, default=None)
        cmd.add_argument("--out", default=None)
        cmd.add_argument("--threads", type=int, default=None)
        if name in ("validate", "grad-check"):
            cmd.add_argument("--perturb-gradient", type=float, default=0.0,
                             help="negative-control hook: offset added to the "
                                  "analytic gradient (nonzero must FAIL)")
    return parser


def main(argv=None, stream=None):
    stream = stream or sys.stdout
    args = build_parser().parse_args(argv)
    global GRADIENT_PERTURBATION
    try:
        exp = load_config(resolve_config_path(args.config))
        exp, threads, out_override = _overrides(exp, args)

        if args.command in ("simulate", "sweep"):
            if args.command == "sweep" and exp.sweep_axis is None:
                raise ConfigError("sweep command requires a sweep section in the config")
            text = run_simulate(exp, threads=threads, stream=stream)
            _write_output(text, exp.output, stream)
            return 0

        if args.command == "validate":
            GRADIENT_PERTURBATION = args.perturb_gradient
            try:
                lines, ok = run_validate(exp)
            finally:
                GRADIENT_PERTURBATION = 0.0
            text = "\n".join(lines) + "\n"
            _write_output(text, out_override, stream)
            return 0 if ok else 1

        # grad-check
        GRADIENT_PERTURBATION = args.perturb_gradient
        try:
            errors = _grad_check_instances(exp)
        finally:
            GRADIENT_PERTURBATION = 0.0
        worst = max(errors)
        ok = worst < 1e-5
        text = (f"{'PASS' if ok else 'FAIL'} gradient_vs_finite_differences: "
                f"max relative error {_fmt(worst)} over {len(errors)} instances\n")
        _write_output(text, out_override, stream)
        return 0 if ok else 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
