"""Command-line experiment runner: ``dtn run|validate|list-experiments``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .approximant import ApproximantFamily, convergence_report, export_convergence, w_factor
from .config import EXPERIMENTS, ExperimentConfig, load_config
from .dtn_operator import assemble_dtn, export_matrix, export_spectrum, localization_profile, spectrum, weyl_fit
from .errors import ConfigError, DtnError, UnsupportedConfiguration
from .geometry import Annulus, discretize_boundary
from .harmonic_lift import BoundaryFunction
from .io import write_csv, write_json
from .semigroup import evolve, export_semigroup_action, export_trace_norm_curve, lax_apply
from .transport import annulus_dtn, export_flux_sweep, flux_sweep

log = logging.getLogger("dtnlab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

TOLERANCES = {
    "psd": 1e-8,
    "asymmetry": 1e-2,
    "constant_kernel": 1e-6,
    "solver_residual": 1e-8,
}


@contextlib.contextmanager
def _thread_limit():
    n = os.environ.get("DTN_THREADS")
    if not n:
        yield None
        return
    try:
        limit = max(1, int(n))
    except ValueError:
        raise ConfigError(f"DTN_THREADS must be a positive integer, got {n!r}") from None
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=limit):
        yield limit


class _Run:
    """Output bookkeeping for one experiment."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.out = Path(cfg["output_dir"]) / cfg.experiment
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.summary = {}

    def path(self, name):
        p = self.out / name
        self.files.append(name)
        if name.endswith(".csv"):
            self.files.append(name[:-4] + ".schema.json")
        return p

    def plot(self, name, draw):
        if not self.cfg["plots"]:
            return
        try:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:  # plotting is optional
            self.summary.setdefault("notes", []).append("matplotlib not installed; plots skipped")
            return
        plt.rcParams["svg.hashsalt"] = "dtnlab"
        fig, ax = plt.subplots(figsize=(5, 3.5))
        draw(ax)
        fig.tight_layout()
        fig.savefig(self.path(name), format="svg", metadata={"Date": None})
        plt.close(fig)


def _grid(cfg):
    return discretize_boundary(cfg.domain.inner if isinstance(cfg.domain, Annulus) else cfg.domain, cfg.resolution)


def _dtn(cfg, grid=None):
    grid = grid or _grid(cfg)
    if isinstance(cfg.domain, Annulus):
        return annulus_dtn(cfg.domain, grid)
    return assemble_dtn(cfg.domain, cfg.gamma, grid, backend=cfg["backend"], fd_factor=cfg["fd_factor"],
                        richardson=cfg["richardson"])


def _random_functions(grid, n, seed):
    """Band-limited random boundary functions with coefficients decaying like ``exp(-deg / 2)``."""
    rng = np.random.default_rng(seed)
    decay = np.exp(-0.5 * grid.basis.degrees)
    return [BoundaryFunction(grid, rng.standard_normal(grid.dim) * decay) for _ in range(n)]


def run_spectrum(run: _Run):
    L = _dtn(run.cfg)
    sp = spectrum(L)
    export_spectrum(sp, run.path("spectrum.csv"))
    if run.cfg["matrix_format"] != "none":
        name = "dtn_matrix." + run.cfg["matrix_format"]
        export_matrix(L, run.path(name), run.cfg["matrix_format"])
        run.files.append(name + ".json")
    run.summary.update(size=L.size, asymmetry=L.asymmetry, lambda_min=float(sp.eigenvalues[0]),
                       lambda_max=float(sp.eigenvalues[-1]), backend=L.backend)

    def draw(ax):
        lam = sp.eigenvalues
        ax.step(lam, np.arange(1, lam.size + 1), where="post")
        ax.set_xlabel("lambda")
        ax.set_ylabel("N(lambda)")
        ax.set_title("eigenvalue counting function")

    run.plot("staircase.svg", draw)


def run_weyl(run: _Run):
    sp = spectrum(_dtn(run.cfg))
    d = run.cfg.domain.dim
    fit = weyl_fit(sp, d, run.cfg["k_range"])
    write_csv(run.path("weyl.csv"), ["exponent", "expected_exponent", "C_est", "fit_residual", "k_lo", "k_hi"],
              [(fit.exponent, 1.0 / (d - 1), fit.C_est, fit.fit_residual, fit.k_range[0], fit.k_range[1])],
              {"exponent": "fitted slope of log lambda_k against log k", "C_est": "fitted Weyl constant"})
    run.summary.update(exponent=fit.exponent, C_est=fit.C_est, fit_residual=fit.fit_residual)

    def draw(ax):
        k = np.arange(1, len(sp) + 1)
        lam = sp.eigenvalues
        m = lam > 0
        ax.loglog(k[m], lam[m], ".", ms=3, label="lambda_k")
        kk = np.arange(*fit.k_range)
        ax.loglog(kk, (kk / fit.C_est) ** fit.exponent, "-", label=f"fit, slope {fit.exponent:.3f}")
        ax.set_xlabel("k")
        ax.legend()

    run.plot("weyl.svg", draw)


def run_localization(run: _Run):
    sp = spectrum(_dtn(run.cfg))
    R = run.cfg.domain.R
    rows = []
    for k in run.cfg["modes"]:
        if k > len(sp):
            raise ConfigError(f"mode {k} exceeds the spectrum size {len(sp)}", key="modes")
        lam = float(sp.eigenvalues[k - 1])
        top = localization_profile(sp, k, [1.0])[0][1]
        for r, val in localization_profile(sp, k, run.cfg["radii"]):
            rows.append((k, lam, r, val, val / top, float(np.exp(-lam * R * (1 - r)))))
    write_csv(run.path("localization.csv"), ["k", "lambda", "r", "profile", "relative_profile", "decay_bound"], rows,
              {"r": "radius relative to R", "profile": "max over sampled directions of |v|",
               "relative_profile": "profile divided by its boundary value",
               "decay_bound": "exp(-lambda R (1 - r))"})


def run_semigroup(run: _Run):
    sp = spectrum(_dtn(run.cfg))
    t_list = run.cfg["t_list"]
    export_semigroup_action(sp, t_list, run.path("semigroup_action.csv"))
    export_trace_norm_curve(sp, t_list, run.path("trace_norm.csv"))
    run.summary["truncation"] = len(sp)


def run_lax(run: _Run):
    cfg = run.cfg
    grid = _grid(cfg)
    sp = spectrum(_dtn(cfg, grid))
    fs = _random_functions(grid, cfg["n_samples"], cfg["seed"])
    rows = []
    for t in cfg["t_list"]:
        for i, f in enumerate(fs):
            rows.append((float(t), i, (lax_apply(f, t, cfg.domain) - evolve(sp, t, f)).norm()))
    write_csv(run.path("lax.csv"), ["t", "sample", "l2_difference"], rows,
              {"l2_difference": "L2 norm of the Lax semigroup minus spectral calculus"})
    run.summary["max_difference"] = max(r[2] for r in rows)


def _family(cfg, grid):
    return ApproximantFamily(cfg.domain, cfg.gamma, grid, cfg["approx"]["s"], backend=cfg["backend"],
                             fd_factor=cfg["fd_factor"])


def run_chernoff(run: _Run):
    cfg = run.cfg
    grid = _grid(cfg)
    sp = spectrum(_dtn(cfg, grid))
    fam = _family(cfg, grid)
    worst = 0.0
    curves = {}
    for t in cfg["approx"]["t_list"]:
        rows = convergence_report(fam, sp, t, cfg["approx"]["n_list"])
        export_convergence(rows, run.path(f"convergence_t{t:g}.csv"))
        worst = max(worst, max(max(r.op_err, r.tr_err) for r in rows))
        curves[t] = rows
    run.summary["max_error"] = worst

    def draw(ax):
        for t, rows in curves.items():
            n = [r.n for r in rows]
            ax.loglog(n, [r.op_err for r in rows], "o-", label=f"operator norm, t={t:g}")
            ax.loglog(n, [r.tr_err for r in rows], "s--", label=f"trace norm, t={t:g}")
        ax.set_xlabel("n")
        ax.set_ylabel("error")
        ax.legend(fontsize=7)

    run.plot("convergence.svg", draw)
    return curves, fam, sp


def run_trace_conjecture(run: _Run):
    cfg = run.cfg
    curves, fam, sp = run_chernoff(run)
    rows = []
    for t, conv in curves.items():
        for r in conv:
            rows.append((float(t), r.n, r.k_n, r.m_n, r.tr_err, r.bound, r.gg_ratio))
    write_csv(run.path("trace_split.csv"), ["t", "n", "k_n", "m_n", "tr_err", "split_bound", "gg_ratio"], rows,
              {"split_bound": "sum of the two split terms bounding the trace-norm error",
               "gg_ratio": "||V(t/n)^m||_1 / ||U(m t/n)||_1"})
    wrows = []
    for t in cfg["approx"]["t_list"]:
        for K in cfg["K_list"]:
            _, norm, used = w_factor(fam, sp, t, min(K, len(sp)))
            wrows.append((float(t), K, used, norm))
    write_csv(run.path("w_factor.csv"), ["t", "K", "K_used", "W_norm"], wrows,
              {"K_used": "truncation after capping t lambda_K at 30", "W_norm": "||V(t) exp(t L_K)||"})


def run_flux(run: _Run):
    cfg = run.cfg
    tr = cfg["transport"]
    L = annulus_dtn(cfg.domain, resolution=cfg.resolution)
    mu = tr["mu_list"] if "mu_list" in tr else [tr["D"] / W for W in tr["W_list"]]
    mu = sorted(float(m) for m in mu)
    rows = flux_sweep(L, mu, tr["D"], tr["C0"])
    export_flux_sweep(rows, run.path("flux_sweep.csv"))
    run.summary.update(Phi_first=rows[0][1], Phi_last=rows[-1][1])

    def draw(ax):
        ax.plot([r[0] for r in rows], [r[1] for r in rows], "o-")
        ax.set_xlabel("mu = D / W")
        ax.set_ylabel("total flux")

    run.plot("flux.svg", draw)


RUNNERS = {
    "spectrum": run_spectrum,
    "weyl": run_weyl,
    "localization": run_localization,
    "semigroup": run_semigroup,
    "lax": run_lax,
    "chernoff": run_chernoff,
    "trace_conjecture": run_trace_conjecture,
    "flux": run_flux,
}


def _versions():
    return {"dtnlab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def run_experiment(cfg: ExperimentConfig):
    """Run one experiment; returns ``(exit_code, manifest)``. The manifest is written last."""
    run = _Run(cfg)
    start = time.perf_counter()
    status, error, code = "ok", None, EXIT_OK
    try:
        with _thread_limit():
            RUNNERS[cfg.experiment](run)
    except (ConfigError, UnsupportedConfiguration) as exc:
        status, error, code = "config_error", str(exc), EXIT_CONFIG
    except (DtnError, np.linalg.LinAlgError, FloatingPointError) as exc:
        status, error, code = "numerical_failure", f"{type(exc).__name__}: {exc}", EXIT_NUMERIC
    manifest = {
        "experiment": cfg.experiment,
        "config_file": cfg.source,
        "inputs": cfg.raw,
        "defaulted": cfg.defaulted,
        "versions": _versions(),
        "tolerances": TOLERANCES,
        "status": status,
        "error": error,
        "summary": run.summary,
        "files": sorted(run.files),
        "wall_time_s": time.perf_counter() - start,
        "finished_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "threads": os.environ.get("DTN_THREADS"),
    }
    write_json(run.out / "manifest.json", manifest, atomic=True)
    return code, manifest


def _cmd_run(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.output_dir:
        cfg.raw["output_dir"] = args.output_dir
    code, manifest = run_experiment(cfg)
    out = Path(cfg["output_dir"]) / cfg.experiment
    if code == EXIT_OK:
        print(f"{cfg.experiment}: ok ({manifest['wall_time_s']:.2f} s) -> {out}")
    else:
        print(f"{cfg.experiment}: {manifest['status']}: {manifest['error']}", file=sys.stderr)
    return code


def _cmd_validate(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print("ok")
    for item in cfg.defaulted:
        print(f"  default: {item}")
    return EXIT_OK


def _cmd_list(args):
    width = max(map(len, EXPERIMENTS))
    for name, text in EXPERIMENTS.items():
        print(f"{name:<{width}}  {text}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="dtn", description="Dirichlet-to-Neumann operator experiments")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config")
    r.add_argument("-o", "--output-dir", help="override output_dir from the config")
    r.set_defaults(func=_cmd_run)
    v = sub.add_parser("validate", help="check a config file without running it")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)
    ls = sub.add_parser("list-experiments", help="list experiment names")
    ls.set_defaults(func=_cmd_list)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
