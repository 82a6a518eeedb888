"""Command-line front end ``ldp``.

One experiment per invocation.  The configuration is an INI file::

    [instance]
    family = ou_linear
    x0 = 0
    z0 = 0
    params.a2 = -1

    [grids]
    T = 1
    dt = 0.01
    z_min = -3
    z_max = 3
    z_cells = 12
    t_cells = 10

    [experiment.estimate]
    eps = 0.02
    delta = 0.3
    n = 10000
    seed = 1

Exactly one ``[experiment.NAME]`` section is allowed and ``NAME`` must match
the subcommand.  Exit codes: 0 success, 1 configuration or usage error,
2 assumption failure under ``--strict``, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from . import io
from .errors import BadParam, Infeasible, LDPError, NotDegenerate, NumericalFailure, UnknownFamily
from .invariant import averaged_ode, invariant_density, nu_p
from .model import CoefficientSet, register_family, validate_assumptions
from .occupation import GridMeasure, occupation_measure
from .paths import Path
from .rare_event import crude_ball_probability, ergodic_check, is_ball_probability, ldp_slope
from .rate import density_estimate, legendre_F_check, legendre_S_check, rate_L
from .simulate import simulate_batch
from .variational import VariationalOptions, hxy

EXIT_OK, EXIT_CONFIG, EXIT_ASSUMPTION, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class Param:
    name: str
    kind: type
    default: object
    help: str


def _P(name, kind, default, help):
    return Param(name, kind, default, help)


EXPERIMENTS: dict[str, dict] = {
    "validate": {
        "params": [
            _P("z_min", float, -5.0, "fast window lower end"),
            _P("z_max", float, 5.0, "fast window upper end"),
            _P("x_min", float, -6.0, "slow window lower end"),
            _P("x_max", float, 6.0, "slow window upper end"),
            _P("grid_step", float, 0.01, "check grid step"),
        ],
        "outputs": {"report.json": "AssumptionReport: lipschitz constants, sigma bounds, tail profile, verdicts"},
    },
    "simulate": {
        "params": [
            _P("eps", float, None, "scale parameter"),
            _P("seed", int, 0, "RNG seed"),
            _P("beta", float, 0.0, "regularizing slow noise (0 disables)"),
        ],
        "outputs": {"path.csv": "t,X,xi", "measure.csv": "t_lo,t_hi,z_lo,z_hi,mass",
                    "report.json": "eps, seed, substeps, X_T"},
    },
    "ergodic": {
        "params": [
            _P("eps_list", list, None, "strictly decreasing eps values"),
            _P("n", int, 100, "replicas per eps"),
            _P("seed", int, 0, "RNG seed"),
        ],
        "outputs": {"report.json": "per-eps medians of r_T and rho, verdict"},
    },
    "rate": {
        "params": [
            _P("path_file", str, "", "target path CSV (t,X[,Xdot]); default: averaged flow"),
            _P("measure_file", str, "", "measure CSV; default: invariant measure shifted by theta"),
            _P("theta", float, 0.0, "shift of the default measure"),
            _P("bandwidth", float, 0.1, "density smoothing bandwidth"),
            _P("beta", float, 0.0, "regularizing diffusion"),
        ],
        "outputs": {"rate.json": "S_T, F_T, L_T, quad_error, infinite_reason"},
    },
    "legendre": {
        "params": [
            _P("theta", float, 1.0, "shift of the measure"),
            _P("bandwidth", float, 0.1, "density smoothing bandwidth"),
            _P("lambda_step", float, 1e-3, "lambda grid step"),
            _P("speed", float, 0.5, "target path is the averaged flow plus speed * t"),
        ],
        "outputs": {"report.json": "S side: numeric sup, closed form, gap, bound; F side: J minimum, F, gap"},
    },
    "estimate": {
        "params": [
            _P("eps", float, None, "scale parameter"),
            _P("delta", float, None, "ball radius"),
            _P("n", int, 10000, "replicas"),
            _P("method", str, "crude", "crude or tilted"),
            _P("beta", float, 0.0, "regularizing slow noise for the tilted method"),
            _P("theta", float, 0.0, "shift of the target occupation measure"),
            _P("bandwidth", float, 0.2, "smoothing bandwidth for the tilt"),
            _P("seed", int, 0, "RNG seed"),
        ],
        "outputs": {"estimates.csv": "eps,delta,n,p_hat,stderr,log_p", "report.json": "Estimate fields"},
    },
    "slope": {
        "params": [
            _P("eps_list", list, None, "strictly decreasing eps values"),
            _P("delta", float, None, "ball radius or escape level"),
            _P("n", int, 10000, "replicas per eps"),
            _P("event", str, "escape", "ball or escape"),
            _P("rate_ref", float, None, "reference rate for the comparison"),
            _P("seed", int, 0, "RNG seed"),
        ],
        "outputs": {"estimates.csv": "eps,delta,n,p_hat,stderr,log_p", "slope.json": "SlopeFit fields"},
    },
    "hxy": {
        "params": [
            _P("y", float, None, "constrained drift value"),
            _P("x", float, 0.0, "slow state"),
            _P("knots", int, 17, "tilt knots"),
            _P("tol", float, 1e-6, "constraint tolerance"),
        ],
        "outputs": {"report.json": "H, residual, converged, iterations"},
    },
}


def describe(name: str) -> str:
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; known: {', '.join(EXPERIMENTS)}")
    entry = EXPERIMENTS[name]
    lines = [f"experiment {name}", "parameters ([experiment.%s]):" % name]
    for p in entry["params"]:
        d = "required" if p.default is None else f"default {p.default!r}"
        lines.append(f"  {p.name} ({p.kind.__name__}, {d}): {p.help}")
    lines.append("outputs:")
    lines.extend(f"  {f}: {s}" for f, s in entry["outputs"].items())
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# configuration


def _convert(section, key, raw, kind):
    try:
        if kind is list:
            return [float(v) for v in raw.replace(",", " ").split()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from None


@dataclass
class RunConfig:
    cs: CoefficientSet
    T: float
    dt: float
    z_edges: np.ndarray
    t_cells: int
    experiment: str
    params: dict
    base: FsPath


def load_config(path, experiment: str | None = None) -> RunConfig:
    path = FsPath(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} not found")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if "instance" not in cp:
        raise ConfigError("missing section [instance]")
    inst = cp["instance"]
    params = {}
    for key, raw in inst.items():
        if key.startswith("params."):
            params[key[7:]] = _convert("instance", key, raw, float)
        elif key not in ("family", "x0", "z0"):
            raise ConfigError(f"[instance] {key}: unknown key")
    if "family" not in inst:
        raise ConfigError("[instance] family: missing")
    try:
        cs = register_family(inst["family"], params,
                             _convert("instance", "x0", inst.get("x0", "0"), float),
                             _convert("instance", "z0", inst.get("z0", "0"), float))
    except (UnknownFamily, BadParam) as exc:
        raise ConfigError(f"[instance] {exc.args[0] if exc.args else exc}") from None
    g = cp["grids"] if "grids" in cp else {}
    known_g = {"T", "dt", "z_min", "z_max", "z_cells", "t_cells"}
    for key in g:
        if key not in known_g:
            raise ConfigError(f"[grids] {key}: unknown key")
    T = _convert("grids", "T", g.get("T", "1"), float)
    dt = _convert("grids", "dt", g.get("dt", "0.01"), float)
    z_min = _convert("grids", "z_min", g.get("z_min", "-3"), float)
    z_max = _convert("grids", "z_max", g.get("z_max", "3"), float)
    z_cells = _convert("grids", "z_cells", g.get("z_cells", "12"), int)
    t_cells = _convert("grids", "t_cells", g.get("t_cells", "10"), int)
    for key, val in (("T", T), ("dt", dt), ("z_cells", z_cells), ("t_cells", t_cells)):
        if not val > 0:
            raise ConfigError(f"[grids] {key}: must be positive")
    if not z_max > z_min:
        raise ConfigError("[grids] z_max: must exceed z_min")
    blocks = [s for s in cp.sections() if s.startswith("experiment.")]
    if len(blocks) != 1:
        raise ConfigError(f"expected exactly one [experiment.NAME] section, found {len(blocks)}")
    name = blocks[0][len("experiment."):]
    if name not in EXPERIMENTS:
        raise ConfigError(f"[{blocks[0]}]: unknown experiment {name!r}")
    if experiment is not None and experiment != name:
        raise ConfigError(f"[{blocks[0]}]: subcommand {experiment!r} does not match the experiment block")
    sect = cp[blocks[0]]
    entry = {p.name: p for p in EXPERIMENTS[name]["params"]}
    values = {}
    for key in sect:
        if key not in entry:
            raise ConfigError(f"[{blocks[0]}] {key}: unknown key")
        values[key] = _convert(blocks[0], key, sect[key], entry[key].kind)
    for p in entry.values():
        if p.name not in values:
            if p.default is None:
                raise ConfigError(f"[{blocks[0]}] {p.name}: missing required key")
            values[p.name] = p.default
    return RunConfig(cs, T, dt, np.linspace(z_min, z_max, z_cells + 1), t_cells, name, values, path.parent)


# ---------------------------------------------------------------------------
# experiments


def _shifted_measure(p, T, t_cells, z_edges, theta: float) -> GridMeasure:
    if theta == 0.0:
        return nu_p(p, T, t_cells, z_edges)
    c = p.cdf(z_edges - theta)
    probs = np.clip(np.concatenate([[c[0]], np.diff(c), [1.0 - c[-1]]]), 0.0, None)
    t_edges = np.linspace(0.0, T, t_cells + 1)
    return GridMeasure(t_edges, z_edges, np.diff(t_edges)[:, None] * (probs / probs.sum())[None, :])


def _resolve(cfg: RunConfig, name: str) -> FsPath:
    f = FsPath(cfg.params[name])
    return f if f.is_absolute() else cfg.base / f


def _exp_validate(cfg, out, workers):
    q = cfg.params
    rep = validate_assumptions(cfg.cs, (q["z_min"], q["z_max"]), (q["x_min"], q["x_max"]), q["grid_step"])
    io.write_json(out / "report.json", rep.to_dict())
    status = "pass" if rep.passed else "FAIL"
    return f"validate: {status} ({', '.join(k for k, v in rep.verdicts.items() if v['pass'])} passed)", rep.passed


def _exp_simulate(cfg, out, workers):
    q = cfg.params
    b = simulate_batch(cfg.cs, q["eps"], cfg.T, cfg.dt, q["seed"], 1, beta=q["beta"], workers=workers)
    pp = b.pair(0)
    io.write_path_csv(out / "path.csv", pp.t_grid, pp.X, pp.xi)
    m = occupation_measure(pp, np.linspace(0.0, cfg.T, cfg.t_cells + 1), cfg.z_edges)
    io.write_measure_csv(out / "measure.csv", m)
    io.write_json(out / "report.json", {"eps": q["eps"], "seed": q["seed"], "substeps": pp.substeps,
                                        "X_T": float(pp.X[-1]), "beta": q["beta"]})
    return f"simulate: {pp.t_grid.size} nodes, substeps {pp.substeps}, X_T = {pp.X[-1]:.6g}", True


def _exp_ergodic(cfg, out, workers):
    q = cfg.params
    rep = ergodic_check(cfg.cs, q["eps_list"], cfg.T, q["n"], q["seed"], dt=cfg.dt, t_cells=cfg.t_cells,
                        z_edges=cfg.z_edges, workers=workers)
    io.write_json(out / "report.json", rep)
    meds = ", ".join(f"{r['eps']:g}: r={r['median_r']:.4g} rho={r['median_rho']:.4g}" for r in rep["rows"])
    return f"ergodic: verdict {'pass' if rep['verdict'] else 'fail'} ({meds})", True


def _target_path(cfg, p):
    if cfg.params.get("path_file"):
        cols = io.read_path_csv(_resolve(cfg, "path_file"))
        return Path(cols["t"], cols["X"], cols.get("Xdot"))
    return averaged_ode(cfg.cs, p, cfg.T, cfg.dt)


def _exp_rate(cfg, out, workers):
    q = cfg.params
    p = invariant_density(cfg.cs)
    X = _target_path(cfg, p)
    if q["measure_file"]:
        m = io.read_measure_csv(_resolve(cfg, "measure_file"))
    else:
        m = _shifted_measure(p, X.T, cfg.t_cells, cfg.z_edges, q["theta"])
    rb = rate_L(X, m, cfg.cs, q["beta"], p=p, bandwidth=q["bandwidth"])
    io.write_json(out / "rate.json", rb.to_dict())
    return f"rate: S_T={rb.S_T:.6g} F_T={rb.F_T:.6g} L_T={rb.L_T:.6g}", True


def _exp_legendre(cfg, out, workers):
    q = cfg.params
    p = invariant_density(cfg.cs)
    Xbar = averaged_ode(cfg.cs, p, cfg.T, cfg.dt)
    X = Path(Xbar.t, Xbar.X + q["speed"] * Xbar.t, Xbar.Xdot + q["speed"])
    m = _shifted_measure(p, cfg.T, cfg.t_cells, cfg.z_edges, q["theta"])
    s = legendre_S_check(X, m, cfg.cs, q["lambda_step"])
    n = density_estimate(m, q["bandwidth"])
    f = legendre_F_check(n, p, cfg.cs)
    rep = {"S": {"numeric_sup": s.numeric_sup, "closed_form": s.closed_form, "gap": s.gap, "bound": s.bound},
           "F": {"J_min": f.J_min, "alpha_min": f.alpha_min, "F": f.F, "vertex_gap": f.vertex_gap,
                 "root_residual": f.root_residual}}
    io.write_json(out / "report.json", rep)
    return f"legendre: S gap {s.gap:.3g} (bound {s.bound:.3g}), F vertex gap {f.vertex_gap:.3g}", True


def _estimate(cfg, q, eps, delta, n, seed, workers, event="ball", method=None):
    p = invariant_density(cfg.cs)
    X = averaged_ode(cfg.cs, p, cfg.T, cfg.dt)
    m = None if event == "escape" else _shifted_measure(p, cfg.T, cfg.t_cells, cfg.z_edges, q.get("theta", 0.0))
    method = method or q.get("method", "crude")
    if method == "crude":
        return crude_ball_probability(cfg.cs, eps, X, m, delta, n, seed, dt=cfg.dt, event=event, workers=workers)
    if method == "tilted":
        return is_ball_probability(cfg.cs, eps, X, m, delta, n, seed, bandwidth=q["bandwidth"], beta=q["beta"],
                                   dt=cfg.dt, event=event, workers=workers)
    raise ConfigError(f"[experiment.estimate] method: expected crude or tilted, got {method!r}")


def _exp_estimate(cfg, out, workers):
    q = cfg.params
    e = _estimate(cfg, q, q["eps"], q["delta"], q["n"], q["seed"], workers)
    io.write_estimates_csv(out / "estimates.csv", [e])
    io.write_json(out / "report.json", e.to_dict())
    return f"estimate ({e.method}): p_hat={e.p_hat:.6g} stderr={e.stderr:.3g} n={e.n}", True


def _exp_slope(cfg, out, workers):
    q = cfg.params
    if q["event"] not in ("ball", "escape"):
        raise ConfigError(f"[experiment.slope] event: expected ball or escape, got {q['event']!r}")
    ests = [_estimate(cfg, q, eps, q["delta"], q["n"], q["seed"], workers, event=q["event"], method="crude")
            for eps in q["eps_list"]]
    io.write_estimates_csv(out / "estimates.csv", ests)
    fit = ldp_slope(ests, q["rate_ref"])
    io.write_json(out / "slope.json", fit.to_dict())
    return f"slope: {fit.slope:.6g} vs -{fit.rate_ref:.6g} (deviation {fit.deviation:.1%})", True


def _exp_hxy(cfg, out, workers):
    q = cfg.params
    p = invariant_density(cfg.cs)
    try:
        r = hxy(q["y"], q["x"], cfg.cs, p, VariationalOptions(knots=q["knots"], tol=q["tol"]))
        rep = r.to_dict()
    except Infeasible as exc:
        rep = {"H": math.inf, "residual": math.inf, "converged": False, "iterations": 0, "note": str(exc)}
    io.write_json(out / "report.json", rep)
    return f"hxy: H={rep['H']:.6g} residual={rep['residual']:.3g}", True


RUNNERS = {
    "validate": _exp_validate, "simulate": _exp_simulate, "ergodic": _exp_ergodic, "rate": _exp_rate,
    "legendre": _exp_legendre, "estimate": _exp_estimate, "slope": _exp_slope, "hxy": _exp_hxy,
}


def run(config_path, experiment: str | None = None, out=".", strict: bool = False, workers: int = 1) -> int:
    """Run one experiment; returns the process exit code."""
    try:
        cfg = load_config(config_path, experiment)
        out = FsPath(out)
        out.mkdir(parents=True, exist_ok=True)
        summary, ok = RUNNERS[cfg.experiment](cfg, out, workers)
    except (ConfigError, NotDegenerate, BadParam) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LDPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(summary)
    if strict and not ok:
        return EXIT_ASSUMPTION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ldp", description="Large-deviation experiments for slow/fast diffusions.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in (*EXPERIMENTS, "run"):
        sp = sub.add_parser(name, help="run the experiment in the config" if name == "run" else f"{name} experiment")
        sp.add_argument("--config", required=True, help="INI configuration file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--strict", action="store_true", help="exit 2 when assumptions fail")
        sp.add_argument("--workers", type=int, default=1, help="worker threads for replica batches")
    d = sub.add_parser("describe", help="show parameters and outputs of an experiment")
    d.add_argument("name")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "describe":
        try:
            print(describe(args.name))
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    experiment = None if args.command == "run" else args.command
    return run(args.config, experiment, args.out, args.strict, args.workers)


if __name__ == "__main__":
    sys.exit(main())
