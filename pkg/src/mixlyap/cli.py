"""Configuration-driven experiment runner.

Usage:
    mixlyap run CONFIG.ini [--out DIR] [--threads N] [--no-plots]
    mixlyap check [--strict] [--seed S] [--threads N] [--out DIR]

Configs are flat INI files with [experiment], [process] and [params]
sections (see the README for the schema). Every emitted CSV starts with a
`# config_hash=<sha256 prefix> seed=<seed>` line followed by a header row;
identical configs produce byte-identical CSVs.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance-check failure.
"""

import argparse
import configparser
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import acceptance, dynamics, fokkerplanck as fp, phase, spectral, transfer
from .errors import ConfigurationError, NumericalError, WrongConstructionError
from .kernels import backend_name
from .potential import (cocycle_process, iid_process, intermittent_process,
                        moving_average_process, two_state_markov)

EXPERIMENTS = ("LyapunovScan", "BandCenterScaling", "BandEdgeScaling",
               "NearEdgeScaling", "DensityCompare", "SpectralDensity",
               "Moments", "NormGrowth")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    process: tuple      # sorted (key, value-string) pairs
    params: tuple       # sorted (key, value-string) pairs
    out: str = "results"

    def process_dict(self):
        return dict(self.process)

    def params_dict(self):
        return dict(self.params)

    def to_ini(self):
        cp = configparser.ConfigParser()
        cp.optionxform = str  # keys are case-sensitive (L, E, ...)
        cp["experiment"] = {"kind": self.experiment, "seed": str(self.seed),
                            "out": self.out}
        cp["process"] = dict(self.process)
        cp["params"] = dict(self.params)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def hash(self):
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:12]


def parse_config(text):
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case-sensitive (L, E, ...)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    if "experiment" not in cp:
        raise ConfigurationError("missing [experiment] section")
    exp = cp["experiment"].get("kind", "")
    if exp not in EXPERIMENTS:
        raise ConfigurationError(
            f"unknown experiment {exp!r}; choose from {', '.join(EXPERIMENTS)}")
    try:
        seed = int(cp["experiment"].get("seed", "0"))
    except ValueError as exc:
        raise ConfigurationError(f"seed must be an integer: {exc}") from exc
    out = cp["experiment"].get("out", "results")
    process = tuple(sorted(cp["process"].items())) if "process" in cp else ()
    params = tuple(sorted(cp["params"].items())) if "params" in cp else ()
    return ExperimentConfig(exp, seed, process, params, out)


def load_config(path):
    return parse_config(Path(path).read_text())


def _floats(text):
    items = [t for t in text.replace(";", ",").split(",") if t.strip()]
    return [float(t) for t in items]


def _grid(text):
    """Comma list or start:stop:step range."""
    if ":" in text:
        a, b, s = (float(x) for x in text.split(":"))
        n = int(round((b - a) / s)) + 1
        return [a + i * s for i in range(n)]
    return _floats(text)


def build_process(cfg):
    p = cfg.process_dict()
    kind = p.get("kind", "iid")
    seed = cfg.seed
    burn = int(p["burn_in"]) if "burn_in" in p else None
    try:
        if kind == "iid":
            values = _floats(p.get("values", "-1, 1"))
            probs = _floats(p.get("probs", "0.5, 0.5"))
            return iid_process(values, probs, seed=seed, burn_in=burn or 0)
        if kind == "markov":
            flip = float(p.get("flip", "0.3"))
            return two_state_markov(flip, seed=seed,
                                    burn_in=10_000 if burn is None else burn)
        if kind == "moving_average":
            return moving_average_process(float(p.get("a", "0.5")), seed=seed,
                                          burn_in=burn or 0)
        if kind == "intermittent":
            return intermittent_process(float(p.get("z", "0.5")), seed=seed,
                                        burn_in=10_000 if burn is None else burn)
        if kind == "cocycle":
            values = _floats(p.get("values", "-1, 1"))
            probs = _floats(p.get("probs", "0.5, 0.5"))
            return cocycle_process(values, probs, seed=seed, burn_in=burn or 0)
    except (ValueError, ConfigurationError) as exc:
        raise ConfigurationError(f"bad process block: {exc}") from exc
    raise ConfigurationError(f"unknown process kind {kind!r}")


def write_csv(path, header, rows, cfg):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_hash={cfg.hash()} seed={cfg.seed}",
             ",".join(header)]
    for row in rows:
        lines.append(",".join(
            format(x, ".17g") if isinstance(x, float) else str(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _maybe_plot(enabled, fname, draw):
    if not enabled:
        return None
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    draw(ax)
    fig.tight_layout()
    fig.savefig(fname, format="svg")
    plt.close(fig)
    return fname


def _require(params, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise ConfigurationError(f"missing required params: {', '.join(missing)}")


def run_lyapunov_scan(cfg, out_dir, threads, plots):
    params = cfg.params_dict()
    _require(params, "lambdas", "energies")
    lambdas = _floats(params["lambdas"])
    energies = _grid(params["energies"])
    if not energies or not lambdas:
        raise ConfigurationError("lambdas and energies must be nonempty")
    steps = int(params.get("steps", "1000000"))
    replicas = int(params.get("replicas", "8"))
    process = build_process(cfg)
    rows = []
    gaps = []
    for lam in lambdas:
        for E in energies:
            est = transfer.lyapunov_mc(process, E=E, lam=lam, steps=steps,
                                       replicas=replicas, threads=threads)
            pred = math.nan
            if abs(E) < 2.0:
                k = math.acos(E / 2.0)
                if math.sin(k) > 1e-6:
                    # backscattering momentum transfer 2k enters the density
                    d = spectral.exact_density(process, 2.0 * k)
                    if d is None:
                        d = spectral.periodogram_density(process, 2.0 * k).value
                    pred = fp.gamma_thouless(lam, k, d)
            rel = abs(est.gamma / pred - 1.0) if pred == pred else math.nan
            if rel == rel and abs(E) > 0.25 and abs(E) < 1.75:
                gaps.append(rel)
            rows.append((E, lam, est.gamma, est.stderr, steps, replicas,
                         pred, rel))
    path = write_csv(out_dir / "lyapunov_scan.csv",
                     ["E", "lambda", "gamma", "stderr", "steps", "replicas",
                      "gamma_thouless", "rel_gap"], rows, cfg)
    ok = (max(gaps) <= 0.15) if gaps else True
    print(f"lyapunov_scan: bulk rel gaps max "
          f"{max(gaps):.3f} -> {'PASS' if ok else 'FAIL'}" if gaps else
          "lyapunov_scan: no bulk prediction rows")
    _maybe_plot(plots, out_dir / "lyapunov_scan.svg", lambda ax: [
        ax.plot([r[0] for r in rows if r[1] == lam],
                [r[2] for r in rows if r[1] == lam], "o-",
                label=f"lam={lam}") for lam in lambdas
    ] + [ax.set_xlabel("E"), ax.set_ylabel("gamma"), ax.legend()])
    return 0 if ok else 4, [path]


def run_band_center_scaling(cfg, out_dir, threads, plots):
    params = cfg.params_dict()
    _require(params, "lambdas")
    lambdas = _floats(params["lambdas"])
    eps = float(params.get("epsilon", "0"))
    steps = int(params.get("steps", "10000000"))
    replicas = int(params.get("replicas", "8"))
    process = build_process(cfg)
    d0 = spectral.exact_density(process, 0.0)
    dpi = spectral.exact_density(process, math.pi)
    if d0 is None or dpi is None:
        raise ConfigurationError("band-center scan needs a process with an "
                                 "exact spectral density oracle")
    rho = fp.density_elliptic(fp.assemble_coefficients(
        fp.BandCenter(eps, d0, dpi)))
    rows = []
    for lam in lambdas:
        E = eps * lam * lam
        est = transfer.lyapunov_mc(process, E=E, lam=lam, steps=steps,
                                   replicas=replicas, threads=threads)
        pred = fp.gamma_band_center(lam, eps, dpi, rho)
        rows.append((lam, E, est.gamma, est.stderr, pred,
                     lam * lam * dpi / 8.0))
    path = write_csv(out_dir / "band_center_scaling.csv",
                     ["lambda", "E", "gamma", "stderr", "prediction",
                      "naive_thouless"], rows, cfg)
    rel = max(abs(r[2] / r[4] - 1.0) for r in rows)
    print(f"band_center_scaling: max rel gap {rel:.3f} -> "
          f"{'PASS' if rel <= 0.10 else 'FAIL'}")
    _maybe_plot(plots, out_dir / "band_center_scaling.svg", lambda ax: [
        ax.loglog([r[0] for r in rows], [r[2] for r in rows], "o",
                  label="MC"),
        ax.loglog([r[0] for r in rows], [r[4] for r in rows], "-",
                  label="prediction"),
        ax.set_xlabel("lambda"), ax.set_ylabel("gamma"), ax.legend()])
    return 0 if rel <= 0.10 else 4, [path]


def run_band_edge_scaling(cfg, out_dir, threads, plots):
    params = cfg.params_dict()
    _require(params, "lambdas")
    lambdas = _floats(params["lambdas"])
    eps = float(params.get("epsilon", "0"))
    steps = int(params.get("steps", "10000000"))
    replicas = int(params.get("replicas", "8"))
    process = build_process(cfg)
    d0 = spectral.exact_density(process, 0.0)
    if d0 is None:
        raise ConfigurationError("band-edge scan needs an exact D_V(0)")
    rho = fp.density_band_edge(d0, eps)
    rows = []
    for lam in lambdas:
        # eps > 0 moves into the band: E = 2 - eps lam^(4/3)
        E = 2.0 - eps * lam ** (4.0 / 3.0)
        est = transfer.lyapunov_mc(process, E=E, lam=lam, steps=steps,
                                   replicas=replicas, threads=threads)
        pred = fp.gamma_band_edge(lam, eps, d0, rho)
        rows.append((lam, E, est.gamma, est.stderr, pred))
    path = write_csv(out_dir / "band_edge_scaling.csv",
                     ["lambda", "E", "gamma", "stderr", "prediction"],
                     rows, cfg)
    rel = max(abs(r[2] / r[4] - 1.0) for r in rows)
    print(f"band_edge_scaling: max rel gap {rel:.3f} -> "
          f"{'PASS' if rel <= 0.10 else 'FAIL'}")
    _maybe_plot(plots, out_dir / "band_edge_scaling.svg", lambda ax: [
        ax.loglog([r[0] for r in rows], [r[2] for r in rows], "o", label="MC"),
        ax.loglog([r[0] for r in rows], [r[4] for r in rows], "-",
                  label="prediction"),
        ax.set_xlabel("lambda"), ax.set_ylabel("gamma"), ax.legend()])
    return 0 if rel <= 0.10 else 4, [path]


def run_near_edge_scaling(cfg, out_dir, threads, plots):
    params = cfg.params_dict()
    _require(params, "lambdas", "epsilon")
    lambdas = _floats(params["lambdas"])
    eps = float(params["epsilon"])
    eta = float(params.get("eta", "1"))
    steps = int(params.get("steps", "4000000"))
    replicas = int(params.get("replicas", "8"))
    process = build_process(cfg)
    d0 = spectral.exact_density(process, 0.0)
    rows = []
    for lam in lambdas:
        for side, sgn in (("hyperbolic", +1), ("elliptic", -1)):
            E = 2.0 + sgn * eps * lam ** eta
            est = transfer.lyapunov_mc(process, E=E, lam=lam, steps=steps,
                                       replicas=replicas, threads=threads)
            pred = fp.gamma_near_edge(lam, eps, eta, side, d0=d0)
            rows.append((lam, side, E, est.gamma, est.stderr, pred))
    path = write_csv(out_dir / "near_edge_scaling.csv",
                     ["lambda", "side", "E", "gamma", "stderr", "prediction"],
                     rows, cfg)
    rel = max(abs(r[3] / r[5] - 1.0) for r in rows)
    print(f"near_edge_scaling: max rel gap {rel:.3f} -> "
          f"{'PASS' if rel <= 0.20 else 'FAIL'}")
    return 0 if rel <= 0.20 else 4, [path]


def run_density_compare(cfg, out_dir, threads, plots):
    params = cfg.params_dict()
    setting = params.get("setting", "band_edge")
    eps = float(params.get("epsilon", "0"))
    d0 = float(params.get("d0", "1"))
    orbit_steps = int(params.get("orbit_steps", "2000000"))
    lam = float(params.get("lambda", "0.01"))
    process = build_process(cfg)
    if setting == "band_edge":
        co = fp.assemble_coefficients(fp.BandEdge(eps, d0))
        rho_a = fp.density_band_edge(d0, eps)
        setup = phase.band_edge_setup(process, lam, eps)
    elif setting == "band_center":
        dpi = float(params.get("dpi", "1"))
        co = fp.assemble_coefficients(fp.BandCenter(eps, d0, dpi))
        rho_a = fp.density_elliptic(co)
        setup = phase.band_center_setup(process, lam, eps)
    else:
        raise ConfigurationError("setting must be band_edge or band_center")
    rho_b = fp.density_bvp_oracle(co)
    mids, mass = phase.orbit_histogram(setup, orbit_steps, bins=128)
    hist_density = mass * 128 / math.pi
    rows = [(float(co.theta[i]), float(co.p[i]), float(co.q[i]),
             float(rho_a.rho[i]), float(rho_b.rho[i]))
            for i in range(co.theta.size)]
    path1 = write_csv(out_dir / "density_compare.csv",
                      ["theta", "p", "q", "rho_formula", "rho_oracle"],
                      rows, cfg)
    rows2 = [(float(mids[i]), float(mass[i]), float(hist_density[i]),
              float(rho_a.at(mids[i])))
             for i in range(mids.size)]
    path2 = write_csv(out_dir / "density_histogram.csv",
                      ["theta_mid", "mass", "hist_density", "rho"],
                      rows2, cfg)
    diff = float(np.max(np.abs(rho_a.rho - rho_b.rho)))
    print(f"density_compare: max|formula - oracle| = {diff:.2e} -> "
          f"{'PASS' if diff <= 1e-4 else 'FAIL'}")
    _maybe_plot(plots, out_dir / "density_compare.svg", lambda ax: [
        ax.plot(co.theta, rho_a.rho, label="formula"),
        ax.plot(co.theta, rho_b.rho, "--", label="oracle"),
        ax.plot(mids, hist_density, ".", ms=3, label="orbit histogram"),
        ax.set_xlabel("theta"), ax.set_ylabel("rho"), ax.legend()])
    return 0 if diff <= 1e-4 else 4, [path1, path2]


def run_spectral_density(cfg, out_dir, threads, plots):
    params = cfg.params_dict()
    _require(params, "k_values")
    ks = _floats(params["k_values"])
    seg_len = int(params.get("segment_len", "4096"))
    segments = int(params.get("segments", "64"))
    process = build_process(cfg)
    rows = []
    for k in ks:
        est = spectral.periodogram_density(process, k, seg_len, segments)
        exact = spectral.exact_density(process, k)
        rows.append((k, est.value, est.stderr, est.method.value,
                     exact if exact is not None else math.nan))
    path = write_csv(out_dir / "spectral_density.csv",
                     ["k", "value", "stderr", "method", "exact"], rows, cfg)
    print(f"spectral_density: {len(rows)} rows")
    return 0, [path]


def run_moments(cfg, out_dir, threads, plots):
    params = cfg.params_dict()
    _require(params, "lambda", "L")
    lam = float(params["lambda"])
    L = int(params["L"])
    q = float(params.get("q", "2"))
    tmin = float(params.get("t_min", "10"))
    tmax = float(params.get("t_max", "1000"))
    tpts = int(params.get("t_points", "13"))
    replicas = int(params.get("replicas", "8"))
    beta = float(params.get("beta", "2.5"))
    process = build_process(cfg)
    times = np.geomspace(tmin, tmax, tpts)
    series = dynamics.moment_series(process, lam, L, q, times,
                                    replicas=replicas)
    rows = [(float(times[i]), q, float(series.values[i]),
             float(series.stderr[i]), replicas, L,
             float(series.wall_mass[i])) for i in range(len(times))]
    path = write_csv(out_dir / "moments.csv",
                     ["T", "q", "M", "stderr", "replicas", "L", "wall_mass"],
                     rows, cfg)
    try:
        rep = dynamics.log_growth_check(series, beta)
        print(f"moments: log-bound beta={beta} C_hat={rep.c_hat:.3g} -> "
              f"{'PASS' if rep.passes else 'FAIL'}")
    except ValueError:
        print("moments: T-range too short for the log-bound verdict")
    _maybe_plot(plots, out_dir / "moments.svg", lambda ax: [
        ax.loglog(times, series.values, "o-"),
        ax.set_xlabel("T"), ax.set_ylabel(f"M_T^{q:g}")])
    return 0, [path]


def run_norm_growth(cfg, out_dir, threads, plots):
    params = cfg.params_dict()
    _require(params, "lambda", "E", "n_values")
    lam = float(params["lambda"])
    E = float(params["E"])
    ns = [int(x) for x in _floats(params["n_values"])]
    samples = int(params.get("samples", "2000"))
    c_factor = float(params.get("c_hat_factor", "0.25"))
    process = build_process(cfg)
    est = transfer.lyapunov_mc(process, E=E, lam=lam, steps=100_000,
                               replicas=8, threads=threads)
    c_hat = est.gamma * c_factor
    rows = []
    ok = True
    for n in ns:
        res = transfer.norm_growth_probability(process, E, lam, n, samples,
                                               c_hat)
        ok = ok and res.fraction >= res.bound
        rows.append((n, res.fraction, res.bound, c_hat, samples))
    path = write_csv(out_dir / "norm_growth.csv",
                     ["N", "fraction", "bound", "c_hat", "samples"], rows, cfg)
    print(f"norm_growth: lemma bound -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 4, [path]


RUNNERS = {
    "LyapunovScan": run_lyapunov_scan,
    "BandCenterScaling": run_band_center_scaling,
    "BandEdgeScaling": run_band_edge_scaling,
    "NearEdgeScaling": run_near_edge_scaling,
    "DensityCompare": run_density_compare,
    "SpectralDensity": run_spectral_density,
    "Moments": run_moments,
    "NormGrowth": run_norm_growth,
}


def run(cfg, out_dir=None, threads=1, plots=True):
    """Execute one experiment; returns (exit_code, artifact paths)."""
    out = Path(out_dir) if out_dir is not None else Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return RUNNERS[cfg.experiment](cfg, out, threads, plots)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="mixlyap",
        description="Lyapunov exponents and quantum dynamics for correlated "
                    "1D lattice models")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--no-plots", action="store_true")
    p_check = sub.add_parser("check", help="run the acceptance suite")
    p_check.add_argument("--strict", action="store_true",
                         help="tighten all tolerances 10x")
    p_check.add_argument("--seed", type=int, default=acceptance.DEFAULT_SEED)
    p_check.add_argument("--threads", type=int, default=1)
    p_check.add_argument("--out", default=None,
                         help="write a JSON report here")
    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            cfg = load_config(args.config)
            code, paths = run(cfg, out_dir=args.out, threads=args.threads,
                              plots=not args.no_plots)
        except (ConfigurationError, FileNotFoundError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        except (NumericalError, WrongConstructionError) as exc:
            print(f"numerical failure: {exc}", file=sys.stderr)
            return 3
        for p in paths:
            print(f"wrote {p}")
        return code

    if args.command == "check":
        print(f"kernel backend: {backend_name()}")
        tol = 0.1 if args.strict else 1.0
        results = acceptance.run_all(seed=args.seed, tol_scale=tol,
                                     threads=args.threads)
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            report = [{"name": r.name, "passed": r.passed,
                       "elapsed": r.elapsed, "details": r.details}
                      for r in results]
            (out / "acceptance_report.json").write_text(
                json.dumps(report, indent=2, default=float))
        failed = [r for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
        return 4 if failed else 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
