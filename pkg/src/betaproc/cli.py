"""Command-line front end: simulate, curves, infer, analyze and replay.

Exit codes: 0 success, 1 usage or invalid input, 2 numerical failure or
replay mismatch, 3 I/O or parse failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bernoulli import bp_bep, count_stats
from .errors import DomainError, NumericalError, ParameterError, ParseError
from .factor.mcmc import MCMCConfig, autocorrelation, run_mcmc
from .factor.model import FactorHyper, generate_synthetic
from .powerlaw import (
    KINDS,
    asymptotic_constant_C,
    asymptotic_KN,
    asymptotic_KNj,
    chernoff_tail,
    fit_power_law,
    phi_exact,
    two_param_phi,
)
from .process import BPParams
from .rng import RandomStream, split
from .runio import MANIFEST_NAME, RunManifest, comment_line, read_table, sha256_file, write_table
from .svg import Figure

log = logging.getLogger("betaproc")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _alpha_tag(a: float) -> str:
    return f"{a:g}"


def _log_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.unique(np.round(np.geomspace(lo, hi, n)))


# simulate ---------------------------------------------------------------

def cmd_simulate(args, outdir: Path) -> list:
    n, rounds = args.n_data, args.rounds
    if n < 1 or rounds < 1 or args.n_seeds < 1:
        raise DomainError("--n-data, --rounds and --n-seeds must be >= 1")
    streams = split(RandomStream(args.seed, 0), len(args.alpha) * args.n_seeds)
    outputs = []
    fig_k = Figure("Total features K_n", "n", "K_n", xlog=True, ylog=True)
    fig_j = Figure(f"Features seen j times, N={n}", "j", "K_N,j", xlog=True, ylog=True)
    fig_iii = Figure("Per-row feature counts", "M", "P(k_n >= M)", ylog=True)
    fig_w = Figure("Ranked atom weights", "rank", "weight", xlog=True, ylog=True)
    for ia, alpha in enumerate(args.alpha):
        params = BPParams(args.gamma, args.theta, alpha)
        tag = _alpha_tag(alpha)
        com = comment_line(args.seed, gamma=args.gamma, theta=args.theta, alpha=alpha,
                           n_data=n, rounds=rounds, n_seeds=args.n_seeds)
        prefixes, hists, row_counts, first_draw = [], [], [], None
        for s in range(args.n_seeds):
            fm, draw = bp_bep(params, n, rounds, streams[ia * args.n_seeds + s], return_draw=True)
            st = count_stats(fm)
            prefixes.append(st.K_prefix)
            hists.append(st.K_hist)
            row_counts.append(st.row_counts)
            if first_draw is None:
                first_draw = draw
        prefix = np.array(prefixes)
        k_mean = prefix.mean(axis=0)
        seeds_hdr = [f"K_seed{s}" for s in range(args.n_seeds)]
        name = f"K_prefix_alpha{tag}.csv"
        write_table(outdir / name, ["n", "K_mean"] + seeds_hdr,
                    ([i + 1, k_mean[i]] + [int(v) for v in prefix[:, i]] for i in range(n)), com)
        outputs.append(name)

        js = sorted(set().union(*hists))
        hist_mean = [sum(h.get(j, 0) for h in hists) / args.n_seeds for j in js]
        name = f"K_hist_alpha{tag}.csv"
        write_table(outdir / name, ["j", "K_Nj_mean"], zip(js, hist_mean), com)
        outputs.append(name)

        rc = np.array(row_counts)
        name = f"row_counts_alpha{tag}.csv"
        write_table(outdir / name, ["n"] + [f"k_seed{s}" for s in range(args.n_seeds)],
                    ([i + 1] + [int(v) for v in rc[:, i]] for i in range(n)), com)
        outputs.append(name)

        w = np.sort(first_draw.weights)[::-1]
        w = w[w > 0]
        name = f"ranked_weights_alpha{tag}.csv"
        write_table(outdir / name, ["rank", "weight"], ((i + 1, v) for i, v in enumerate(w)), com)
        outputs.append(name)

        _plot_simulation(params, n, k_mean, js, hist_mean, rc, w, fig_k, fig_j, fig_iii, fig_w, tag)

    for fig, name in ((fig_k, "sim_K.svg"), (fig_j, "sim_j.svg"), (fig_iii, "sim_iii.svg"),
                      (fig_w, "sim_freqs.svg")):
        fig.save(outdir / name)
        outputs.append(name)
    return outputs


def _plot_simulation(params, n, k_mean, js, hist_mean, rc, w, fig_k, fig_j, fig_iii, fig_w, tag):
    a = params.alpha
    ns = np.arange(1, n + 1)
    fig_k.points(ns, k_mean, f"alpha={tag}")
    grid = _log_grid(1, n, 25)
    fig_k.line(grid, phi_exact(params, "PhiN", grid).values, color="#d62728")
    if a > 0:
        fig_k.line(grid, [asymptotic_KN(params, g) for g in grid], color="#2ca02c", dashed=True)

    fig_j.points(js, hist_mean, f"alpha={tag}")
    jj = np.arange(1, min(max(js, default=1), n) + 1)
    exact = [phi_exact(params, "PhiNj", [n], j=int(j)).values[0] for j in jj]
    fig_j.line(jj, exact, color="#d62728")
    if a > 0:
        fig_j.line(jj, [asymptotic_KNj(params, n, int(j)) for j in jj], color="#2ca02c", dashed=True)

    counts = rc.ravel()
    ms = np.arange(0, counts.max() + 1)
    tail = np.array([(counts >= m).mean() for m in ms])
    fig_iii.points(ms, tail, f"alpha={tag}")
    q = counts.mean()
    mm = ms[ms > q]
    if mm.size:
        fig_iii.line(mm, [min(1.0, chernoff_tail(q, m)) for m in mm], color="#2ca02c", dashed=True)

    ranks = np.arange(1, w.size + 1)
    fig_w.points(ranks, w, f"alpha={tag}")
    if a > 0:
        c = asymptotic_constant_C(params)
        fig_w.line(ranks, (ranks / c) ** (-1.0 / a), color="#2ca02c", dashed=True)


# curves -----------------------------------------------------------------

def cmd_curves(args, outdir: Path) -> list:
    params = BPParams(args.gamma, args.theta, args.alpha)
    if args.points is not None:
        pts = np.array(args.points, dtype=float)
    elif args.grid:
        lo, hi, k = args.grid
        pts = _log_grid(float(lo), float(hi), int(k))
    else:
        raise DomainError("give --points or --grid")
    if pts.size == 0:
        raise DomainError("empty evaluation grid")
    j = args.j if args.kind in ("PhiNj", "PhiTj") else None
    exact = phi_exact(params, args.kind, pts, j=j).values
    rows = []
    for x, v in zip(pts, exact):
        row = [x, v]
        if params.alpha > 0:
            asym = asymptotic_KN(params, x) if j is None else asymptotic_KNj(params, x, j)
            row += [asym, v / asym]
        else:
            row += [math.nan, math.nan]
        if params.alpha == 0 and args.kind == "PhiN" and x == int(x):
            row.append(two_param_phi(params, int(x)).phi_n)
        else:
            row.append(math.nan)
        rows.append(row)
    com = comment_line(args.seed, gamma=args.gamma, theta=args.theta, alpha=args.alpha,
                       kind=args.kind, j=j)
    name = f"curve_{args.kind}.csv"
    write_table(outdir / name, ["x", "exact", "asymptotic", "ratio", "closed_form"], rows, com)
    fig = Figure(f"{args.kind} (alpha={_alpha_tag(args.alpha)})", "x", "mean count", xlog=True, ylog=True)
    fig.line(pts, exact, "quadrature", color="#d62728")
    if params.alpha > 0:
        fig.line(pts, [r[2] for r in rows], "asymptotic", color="#2ca02c", dashed=True)
    fig.save(outdir / f"curve_{args.kind}.svg")
    return [name, f"curve_{args.kind}.svg"]


# infer ------------------------------------------------------------------

def _parse_synthetic(spec: str) -> dict:
    out = {}
    for part in spec.replace(" ", ",").split(","):
        if not part:
            continue
        if "=" not in part:
            raise DomainError(f"--synthetic expects KEY=VALUE pairs, got {part!r}")
        k, v = part.split("=", 1)
        if k.upper() not in ("N", "P", "K"):
            raise DomainError(f"unknown --synthetic key {k!r}")
        out[k.upper()] = int(v)
    missing = {"N", "P", "K"} - out.keys()
    if missing:
        raise DomainError(f"--synthetic is missing {sorted(missing)}")
    return out


def cmd_infer(args, outdir: Path) -> list:
    config = MCMCConfig.read(args.config) if args.config else MCMCConfig()
    overrides = {"seed": args.seed}
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.burn_in is not None:
        overrides["burn_in"] = args.burn_in
    elif "iterations" in overrides:
        overrides["burn_in"] = min(config.burn_in, overrides["iterations"])
    config = config.replace(**overrides)
    hyper = FactorHyper(args.eta, args.zeta, tuple(args.rho))
    outputs = []
    com = comment_line(args.seed, iterations=config.iterations, burn_in=config.burn_in)
    if args.synthetic:
        spec = _parse_synthetic(args.synthetic)
        truth_params = BPParams(args.gamma, args.theta, args.alpha)
        X, truth = generate_synthetic(truth_params, hyper, spec["N"], spec["P"], args.rounds,
                                      RandomStream(args.seed, 1), n_features=spec["K"])
        write_table(outdir / "data.csv", [f"x{p}" for p in range(X.shape[1])], X.tolist(), com)
        outputs.append("data.csv")
    else:
        _, X = read_table(args.data)
    trace = run_mcmc(X, config, hyper)
    trace.to_csv(outdir / "trace.csv", comment=com)
    outputs.append("trace.csv")

    k = trace.column("K")
    post = k[trace.column("iteration") > config.burn_in] if config.iterations > config.burn_in else k
    max_lag = min(args.max_lag, max(len(post) - 1, 0))
    acf = autocorrelation(post, max_lag)
    write_table(outdir / "acf_K.csv", ["lag", "acf"], enumerate(acf), com)
    outputs.append("acf_K.csv")

    it = trace.column("iteration")
    fig = Figure("Number of features", "iteration", "K")
    fig.line(it, k, "K")
    fig.save(outdir / "trace_K.svg")
    fig = Figure("Hyperparameters", "iteration", "value")
    for name in ("theta", "alpha", "gamma"):
        fig.line(it, trace.column(name), name)
    fig.save(outdir / "trace_hyper.svg")
    fig = Figure("Autocorrelation of K", "lag", "acf")
    fig.line(np.arange(acf.size), acf, "acf")
    fig.save(outdir / "acf_K.svg")
    outputs += ["trace_K.svg", "trace_hyper.svg", "acf_K.svg"]

    st = trace.final_state
    kk = st.K
    write_table(outdir / "final_Z.csv", [f"z{j}" for j in range(kk)], st.Z.tolist(), com)
    write_table(outdir / "final_W.csv", [f"w{j}" for j in range(kk)], (st.W * st.Z).tolist(), com)
    write_table(outdir / "final_Phi.csv", [f"p{j}" for j in range(X.shape[1])], st.Phi.tolist(), com)
    write_table(outdir / "final_rounds.csv", ["k", "round"], enumerate(st.r.tolist()), com)
    outputs += ["final_Z.csv", "final_W.csv", "final_Phi.csv", "final_rounds.csv"]
    if config.iterations > config.burn_in:
        summ = trace.summary(config.burn_in)
        write_table(outdir / "summary.csv", list(summ), [list(summ.values())], com)
        outputs.append("summary.csv")
        print(json.dumps(summ, sort_keys=True))
    return outputs


# analyze ----------------------------------------------------------------

def cmd_analyze(args, outdir: Path) -> list:
    header, data = read_table(args.series)
    if data.shape[1] < 2:
        raise ParseError(f"{args.series}: need at least two columns")
    xi, yi = _column_index(header, args.x_col, 0), _column_index(header, args.y_col, 1)
    x, y = data[:, xi], data[:, yi]
    fit = fit_power_law(x, y, lower=args.lower, upper=args.upper, upper_half=not args.full_range)
    com = comment_line(args.seed, series=Path(args.series).name)
    write_table(outdir / "fit.csv", ["c", "a", "rms", "n_points", "lower", "upper"],
                [[fit.c, fit.a, fit.rms, fit.n_points, fit.lower, fit.upper]], com)
    fig = Figure(f"Power-law fit: a = {fit.a:.4f}", "x", "y", xlog=True, ylog=True)
    fig.points(x, y, "data")
    xs = np.geomspace(fit.lower, fit.upper, 50)
    fig.line(xs, fit.c * xs ** fit.a, "fit", color="#d62728")
    fig.save(outdir / "fit.svg")
    print(f"c={fit.c!r} a={fit.a!r} rms={fit.rms!r} n_points={fit.n_points}")
    return ["fit.csv", "fit.svg"]


def _column_index(header, col, default):
    if col is None:
        return default
    if col.isdigit():
        return int(col)
    if header is None or col not in header:
        raise DomainError(f"column {col!r} not found")
    return header.index(col)


# driver -----------------------------------------------------------------

COMMANDS = {
    "simulate": cmd_simulate,
    "curves": cmd_curves,
    "infer": cmd_infer,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="betaproc", description="Three-parameter beta process toolkit.")
    p.add_argument("--version", action="version", version=f"betaproc {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, alpha_default=0.0, many_alpha=False):
        sp.add_argument("--gamma", type=float, default=3.0)
        sp.add_argument("--theta", type=float, default=1.0)
        if many_alpha:
            sp.add_argument("--alpha", type=float, nargs="+", default=[0.0, 0.3, 0.6])
        else:
            sp.add_argument("--alpha", type=float, default=alpha_default)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--outdir", required=True)

    sp = sub.add_parser("simulate", help="simulate feature matrices and their count statistics")
    common(sp, many_alpha=True)
    sp.add_argument("--n-data", type=int, default=1000)
    sp.add_argument("--rounds", type=int, default=2000)
    sp.add_argument("--n-seeds", type=int, default=1)

    sp = sub.add_parser("curves", help="exact and asymptotic mean-count curves")
    common(sp)
    sp.add_argument("--kind", choices=KINDS, default="PhiN")
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--points", type=float, nargs="*")
    sp.add_argument("--grid", nargs=3, metavar=("LO", "HI", "COUNT"))

    sp = sub.add_parser("infer", help="run the factor-model sampler")
    common(sp, alpha_default=0.5)
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--data")
    src.add_argument("--synthetic", metavar="N=..,P=..,K=..")
    sp.add_argument("--config")
    sp.add_argument("--iterations", type=int)
    sp.add_argument("--burn-in", type=int)
    sp.add_argument("--rounds", type=int, default=200)
    sp.add_argument("--eta", type=float, default=0.1)
    sp.add_argument("--zeta", type=float, default=1.0)
    sp.add_argument("--rho", type=float, nargs="+", default=[1.0])
    sp.add_argument("--max-lag", type=int, default=50)

    sp = sub.add_parser("analyze", help="fit a power law to a two-column series")
    sp.add_argument("--series", required=True)
    sp.add_argument("--x-col")
    sp.add_argument("--y-col")
    sp.add_argument("--lower", type=float)
    sp.add_argument("--upper", type=float)
    sp.add_argument("--full-range", action="store_true", help="fit every point, not the upper half")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--outdir", required=True)

    sp = sub.add_parser("replay", help="rerun a command from its manifest and compare outputs")
    sp.add_argument("manifest")
    sp.add_argument("--outdir", help="where to write the rerun (default: <manifest dir>/replay)")
    return p


def _manifest_params(args) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("command", "outdir", "verbose")}
    for key in ("data", "config", "series"):
        if params.get(key):
            path = Path(params[key]).resolve()
            params[key] = str(path)
            params[f"{key}_sha256"] = sha256_file(path)
    return params


def run_command(command: str, params: dict, outdir) -> RunManifest:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    args = argparse.Namespace(**params)
    names = COMMANDS[command](args, outdir)
    man = RunManifest(command, params, int(params.get("seed", 0)))
    man.record_outputs(outdir, names)
    man.write(outdir)
    return man


def replay(manifest_path, outdir=None) -> list:
    """Rerun a manifest into ``outdir`` and return the outputs that differ."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    man = RunManifest.read(manifest_path)
    if man.command not in COMMANDS:
        raise ParseError(f"{manifest_path}: unknown command {man.command!r}")
    for key in ("data", "config", "series"):
        if man.params.get(key) and sha256_file(man.params[key]) != man.params.get(f"{key}_sha256"):
            raise DomainError(f"input {man.params[key]} changed since the recorded run")
    outdir = Path(outdir) if outdir else manifest_path.parent / "replay"
    outdir.mkdir(parents=True, exist_ok=True)
    args = argparse.Namespace(**{k: v for k, v in man.params.items() if not k.endswith("_sha256")})
    COMMANDS[man.command](args, outdir)
    return man.compare(outdir)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"betaproc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            bad = replay(args.manifest, args.outdir)
            if bad:
                print("replay mismatch: " + ", ".join(bad), file=sys.stderr)
                return EXIT_NUMERICAL
            print("replay identical")
            return EXIT_OK
        params = _manifest_params(args)
        run_command(args.command, params, args.outdir)
        return EXIT_OK
    except NumericalError as exc:
        print(f"betaproc: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ParseError, OSError) as exc:
        print(f"betaproc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ParameterError, DomainError) as exc:
        print(f"betaproc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
