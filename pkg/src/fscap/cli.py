"""Command-line entry point.

Subcommands: optimize, estimate-entropy, estimate-gradient,
oracle {in|birch|parry|coeff|perturb}, report.  All outputs are CSV with
a provenance comment line; report also renders matplotlib figures.
The FSCAP_SEED environment variable overrides the default seed.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import channel as chan
from . import constraints as cons
from . import oracle
from .config import ExperimentConfig, parse_config, render_config
from .errors import FscapError
from .hmm import encode_xy, sample_entropy, view_XY, view_Y
from .markov import (MarkovParams, build_transition, markov_entropy_rate,
                     transition_derivatives)
from .optimizer import SAConfig, exact_gradient_problem, mc_problem, run
from .reporting import (provenance_line, read_trace_csv, render_figures,
                        summarize_trace, write_trace_csv)
from .simulator import make_schedule, replicate_gradient


def _default_seed() -> int:
    return int(os.environ.get("FSCAP_SEED", "0"))


def _load_constraint(spec: str) -> cons.ForbiddenPairSet:
    if Path(spec).exists():
        return cons.load_constraint(spec)
    return cons.named_constraint(spec)


def _load_channel(spec: str, epsilon: float, allow_degenerate=False) -> chan.ChannelSpec:
    if spec == "bsc":
        return chan.lift_memoryless(chan.bsc_family(), epsilon,
                                    allow_degenerate=allow_degenerate)
    if spec == "bec":
        return chan.lift_memoryless(chan.bec_family(), epsilon,
                                    allow_degenerate=allow_degenerate)
    if Path(spec).exists():
        return chan.load_channel(spec)
    raise FscapError(f"unknown channel spec {spec!r}")


def _parse_theta(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.replace(",", " ").split()])


def _csv_out(path, seed, config_text, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(provenance_line(seed, config_text) + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_optimize(args) -> int:
    F = _load_constraint(args.constraint)
    cfg = SAConfig(a=args.a, b=args.b, alpha=args.alpha, beta=args.beta,
                   epsilon_floor=args.eps_floor,
                   theta0=("random" if args.theta0 == "random"
                           else _parse_theta(args.theta0)),
                   max_iters=args.iters, seed=args.seed,
                   grad_window=args.grad_window, grad_tol=args.grad_tol)
    if args.exact_gradient:
        problem = exact_gradient_problem(F)
    else:
        ch = _load_channel(args.channel, args.epsilon)
        problem = mc_problem(F, ch, alpha=args.alpha, beta=args.beta)
    trace = run(cfg, problem)
    config_text = repr(sorted(vars(args).items()))
    write_trace_csv(args.out, trace, args.seed, config_text)
    data = read_trace_csv(args.out)
    summary = summarize_trace(data)
    summary_path = Path(args.out).with_suffix(".summary.txt")
    summary_path.write_text(summary)
    print(summary, end="")
    return 0


def cmd_estimate_entropy(args) -> int:
    F = _load_constraint(args.constraint)
    ch = _load_channel(args.channel, args.epsilon)
    params = MarkovParams(_parse_theta(args.theta), args.eps_floor)
    tm = build_transition(params, F)
    dP = transition_derivatives(params.theta, F)
    rng = chan.stream_rng(args.seed)
    path = chan.sample_path(tm, ch, args.n, rng)
    hy = sample_entropy(view_Y(tm, dP, ch), path.y)
    hxy = sample_entropy(view_XY(tm, dP, ch), encode_xy(path.x, path.y, ch.num_outputs))
    hx = markov_entropy_rate(tm)
    i_hat = hx + hy - hxy
    rows = [[args.n, repr(float(hx)), repr(float(hy)), repr(float(hxy)), repr(float(i_hat))]]
    if args.out:
        _csv_out(args.out, args.seed, repr(sorted(vars(args).items())),
                 ["n", "H_X", "H_Y_hat", "H_XY_hat", "I_hat"], rows)
    print(f"H(X)={hx:.6f} Hhat(Y)={hy:.6f} Hhat(X,Y)={hxy:.6f} Ihat={i_hat:.6f}")
    return 0


def cmd_estimate_gradient(args) -> int:
    F = _load_constraint(args.constraint)
    ch = _load_channel(args.channel, args.epsilon)
    params = MarkovParams(_parse_theta(args.theta), args.eps_floor)
    gs, ests = replicate_gradient(params, F, ch, args.n, args.replicas,
                                  seed=args.seed, alpha=args.alpha, beta=args.beta)
    mean = gs.mean(axis=0)
    se = gs.std(axis=0, ddof=1) / np.sqrt(len(gs)) if len(gs) > 1 else np.zeros_like(mean)
    config_text = repr(sorted(vars(args).items()))
    if args.out:
        header = ["replica"] + [f"g{i}" for i in range(gs.shape[1])]
        _csv_out(args.out, args.seed, config_text, header,
                 [[r] + [repr(float(v)) for v in row] for r, row in enumerate(gs)])
    if args.dump_blocks:
        header = ["replica", "block", "coordinate", "zeta_y", "zeta_xy"]
        rows = []
        for r, est in enumerate(ests):
            zy, zxy = est.per_block_zeta_y, est.per_block_zeta_xy
            for bidx in range(zy.shape[0]):
                for cidx in range(zy.shape[1]):
                    rows.append([r, bidx, cidx, repr(float(zy[bidx, cidx])),
                                 repr(float(zxy[bidx, cidx]))])
        _csv_out(args.dump_blocks, args.seed, config_text, header, rows)
    print("g_mean: " + " ".join(f"{v:.6f}" for v in mean))
    print("g_se:   " + " ".join(f"{v:.6f}" for v in se))
    return 0


def cmd_oracle(args) -> int:
    config_text = repr(sorted(vars(args).items()))
    if args.mode == "parry":
        F = _load_constraint(args.constraint)
        theta_star, cap0 = oracle.parry_optimum(F)
        if args.out:
            _csv_out(args.out, args.seed, config_text,
                     ["capacity0"] + [f"theta{i}" for i in range(len(theta_star))],
                     [[repr(float(cap0))] + [repr(float(v)) for v in theta_star]])
        print(f"capacity0={cap0:.6f} theta_star=" +
              " ".join(f"{v:.6f}" for v in theta_star))
        return 0
    if args.mode == "coeff":
        eps_grid = _parse_theta(args.eps_grid)
        res = oracle.asymptotic_coefficient_experiment(args.pi, eps_grid, n=args.n)
        if args.out:
            _csv_out(args.out, args.seed, config_text, ["eps", "delta_h"],
                     [[repr(float(e)), repr(float(d))] for e, d in zip(res["eps"], res["delta_h"])])
        print(f"fitted={res['fitted']:.6f} target={res['target']:.6f} "
              f"rel_error={res['rel_error']:.4f}")
        return 0

    F = _load_constraint(args.constraint)
    params = MarkovParams(_parse_theta(args.theta), args.eps_floor)
    tm = build_transition(params, F)
    if args.mode == "in":
        ch = _load_channel(args.channel, args.epsilon, allow_degenerate=True)
        res = oracle.exact_In(tm, ch, args.n)
        if args.out:
            _csv_out(args.out, args.seed, config_text, ["n", "I_n"],
                     [[res.n, repr(float(res.value))]])
        print(f"I_{res.n} = {res.value:.8f}")
        return 0
    if args.mode == "birch":
        ch = _load_channel(args.channel, args.epsilon, allow_degenerate=True)
        lower, upper = oracle.birch_profile(tm, ch, args.n)
        if args.out:
            _csv_out(args.out, args.seed, config_text, ["n", "lower", "upper"],
                     [[t + 1, repr(float(lower[t])), repr(float(upper[t]))] for t in range(args.n)])
        print(f"lower_{args.n}={lower[-1]:.8f} upper_{args.n}={upper[-1]:.8f}")
        return 0
    if args.mode == "perturb":
        ch = _load_channel(args.channel, args.epsilon, allow_degenerate=True)
        delta_grid = _parse_theta(args.delta_grid)
        res = oracle.perturbation_experiment(tm.entries, delta_grid, ch, n=args.n)
        if args.out:
            _csv_out(args.out, args.seed, config_text, ["delta", "gain"],
                     [[repr(float(d)), repr(float(g))] for d, g in zip(res["delta"], res["gain"])])
        print(f"all_positive={res['all_positive']} slope={res['slope']:.4f}")
        return 0
    raise FscapError(f"unknown oracle mode {args.mode!r}")


def cmd_report(args) -> int:
    data = read_trace_csv(args.trace)
    summary = summarize_trace(data)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.txt").write_text(summary)
    figures = render_figures(data, out_dir)
    print(summary, end="")
    for p in figures:
        print(f"figure: {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fscap",
        description="Capacity of input-constrained finite-state channels "
                    "by stochastic approximation.")
    parser.add_argument("--config", help="key=value config file; section "
                                         "selects the command")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--constraint", default="rll-1-inf")
        p.add_argument("--channel", default="bsc")
        p.add_argument("--epsilon", type=float, default=0.1)
        p.add_argument("--eps-floor", dest="eps_floor", type=float, default=1e-3)
        p.add_argument("--seed", type=int, default=_default_seed())
        p.add_argument("--out", default=None)

    p = sub.add_parser("optimize", help="run the stochastic-approximation iteration")
    common(p)
    p.set_defaults(out="trace.csv")
    p.add_argument("--a", type=float, default=0.75)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--theta0", default="random")
    p.add_argument("--grad-tol", dest="grad_tol", type=float, default=0.0)
    p.add_argument("--grad-window", dest="grad_window", type=int, default=50)
    p.add_argument("--exact-gradient", dest="exact_gradient", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("estimate-entropy", help="Monte Carlo sample entropies")
    common(p)
    p.add_argument("--theta", required=True)
    p.add_argument("--n", type=int, default=100000)
    p.set_defaults(func=cmd_estimate_entropy)

    p = sub.add_parser("estimate-gradient", help="replicated simulator draws")
    common(p)
    p.add_argument("--theta", required=True)
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("--dump-blocks", dest="dump_blocks", default=None)
    p.set_defaults(func=cmd_estimate_gradient)

    p = sub.add_parser("oracle", help="exact small-instance ground truths")
    p.add_argument("mode", choices=["in", "birch", "parry", "coeff", "perturb"])
    common(p)
    p.add_argument("--theta", default="0.5")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--pi", type=float, default=0.5)
    p.add_argument("--eps-grid", dest="eps_grid",
                   default="0.0003 0.001 0.003 0.01 0.03")
    p.add_argument("--delta-grid", dest="delta_grid",
                   default="0.001 0.003 0.01 0.03 0.1")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="summary statistics and figures for a trace")
    p.add_argument("trace")
    p.add_argument("--out-dir", dest="out_dir", default="report")
    p.set_defaults(func=cmd_report)
    return parser


def _apply_config_file(parser, argv):
    """Turn a --config file into an argv for the matching subcommand."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    rest = argv[:idx] + argv[idx + 2:]
    cfg = parse_config(Path(path).read_text())
    new_argv = [cfg.command] if cfg.command != "oracle" else ["oracle", cfg.params.get("mode", "parry")]
    for key, value in cfg.params.items():
        if key == "mode":
            continue
        if key == "exact_gradient":
            if value:
                new_argv.append("--exact-gradient")
            continue
        new_argv += [f"--{key.replace('_', '-')}", str(value)]
    return new_argv + rest


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_help()
            return 2
        return args.func(args)
    except FscapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
