"""Command-line entry point: ``train``, ``ablate``, ``analyze``, ``gridsearch``.

Exit status is 0 on success, 2 for usage errors and 3 when training
diverges. A ``--config`` file of ``key=value`` lines supplies defaults;
explicit flags override it.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .agent import AgentConfig
from .analysis import analyze_states
from .harness import (
    ABLATION_ORDER, VARIANTS, RunConfig, ablation_csv, run_ablation, run_training, summarize_ablation,
)

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED = 0, 2, 3

ALPHA_GRID = tuple(round(0.3 * i, 1) for i in range(11))  # 0.0 .. 3.0
KAPPA_GRID = tuple(float(k) for k in range(1, 11))  # 1 .. 10


class UsageError(Exception):
    pass


def _hidden(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(h) for h in str(text).split(",") if h.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated widths, got {text!r}")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("hidden widths must be positive")
    return sizes


def _run_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key=value file of defaults; flags override it")
    env = p.add_argument_group("environment and run")
    env.add_argument("--env", choices=["grid", "pointmass"], default="grid", help="environment (default: %(default)s)")
    env.add_argument("--map", dest="map_file", help="grid map file: rows of . F S P G, top row first")
    env.add_argument("--variant", type=str.lower, choices=sorted(VARIANTS) + ["custom"], default="custom",
                     help="hyper-parameter preset; custom uses --alpha/--kappa (default: %(default)s)")
    env.add_argument("--seed", type=int, default=0, help="random seed (default: %(default)s)")
    env.add_argument("--steps", dest="total_env_steps", type=int, default=50_000,
                     help="environment steps (default: %(default)s)")
    env.add_argument("--eval-every", type=int, default=5_000, help="steps between evaluations (default: %(default)s)")
    env.add_argument("--eval-episodes", type=int, default=10, help="episodes per evaluation (default: %(default)s)")
    env.add_argument("--warmup", type=int, default=1_000,
                     help="initial uniform-random steps before training (default: %(default)s)")
    env.add_argument("--replay-capacity", type=int, default=1_000_000, help="replay size (default: %(default)s)")
    env.add_argument("--state-stride", type=int, default=10, help="keep every n-th state (default: %(default)s)")
    env.add_argument("--out", dest="out_dir", help="output directory")

    hp = p.add_argument_group("agent hyper-parameters (defaults are the Table 2 values)")
    d = AgentConfig()
    hp.add_argument("--alpha", type=float, default=d.alpha,
                    help="penalty multiplier for intrinsic uncertainty, Table 2 (default: %(default)s)")
    hp.add_argument("--kappa", type=float, default=d.kappa,
                    help="decay rate of the parametric-uncertainty bonus, Table 2 (default: %(default)s)")
    hp.add_argument("--gamma", type=float, default=d.gamma, help="discount factor, Table 2 (default: %(default)s)")
    hp.add_argument("--tau", type=float, default=d.tau, help="target-network update rate, Table 2 (default: %(default)s)")
    hp.add_argument("--actor-lr", type=float, default=d.actor_lr, help="actor Adam rate, Table 2 (default: %(default)s)")
    hp.add_argument("--critic-lr", type=float, default=d.critic_lr,
                    help="critic Adam rate, Table 2 (default: %(default)s)")
    hp.add_argument("--batch-size", type=int, default=d.batch_size, help="mini-batch size, Table 2 (default: %(default)s)")
    hp.add_argument("--policy-freq", type=int, default=d.policy_freq,
                    help="delayed policy update period, Table 2 (default: %(default)s)")
    hp.add_argument("--explore-noise", dest="explore_noise_std", type=float, default=d.explore_noise_std,
                    help="Gaussian exploration noise std, Table 2 sigma (default: %(default)s)")
    hp.add_argument("--target-noise", dest="target_noise_std", type=float, default=d.target_noise_std,
                    help="target smoothing noise std; not in Table 2, TD3 convention (default: %(default)s)")
    hp.add_argument("--noise-clip", type=float, default=d.noise_clip,
                    help="target smoothing noise clip, Table 2 (default: %(default)s)")
    hp.add_argument("--K", dest="K", type=int, default=d.K, help="environment steps per epoch, Table 2 (default: %(default)s)")
    hp.add_argument("--M", dest="M", type=int, default=d.M,
                    help="train steps between eta refreshes, Table 2 (default: %(default)s)")
    hp.add_argument("--hidden", type=_hidden, default=",".join(map(str, d.hidden)),
                    help="hidden widths, comma separated (default: %(default)s)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ader", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    flags = _run_flags()

    sub.add_parser("train", parents=[flags], help="run one training experiment")

    ab = sub.add_parser("ablate", parents=[flags], help="train every variant over several seeds")
    ab.add_argument("--seeds", type=int, default=8, help="number of seeds, 0..n-1 (default: %(default)s)")
    ab.add_argument("--variants", default=",".join(ABLATION_ORDER), help="comma-separated variants (default: %(default)s)")
    ab.add_argument("--workers", type=int, default=1, help="parallel worker processes (default: %(default)s)")

    gs = sub.add_parser("gridsearch", parents=[flags], help="alpha/kappa sweep manifest")
    gs.add_argument("--execute", action="store_true", help="run the manifest instead of only writing it")

    an = sub.add_parser("analyze", help="PCA projection and heatmap of visited states")
    an.add_argument("--run", help="run directory holding states.f64 and config.txt")
    an.add_argument("--states", help="explicit states.f64 path")
    an.add_argument("--dim", type=int, help="state width (read from config.txt obs_dim when omitted)")
    an.add_argument("--bins", type=int, default=50, help="histogram bins per axis (default: %(default)s)")
    an.add_argument("--out", dest="out_dir", help="output directory (default: the run directory)")
    return parser


def read_config_file(path) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _parse(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        values = read_config_file(args.config)
        aliases = {"steps": "total_env_steps", "out": "out_dir", "map": "map_file",
                   "explore_noise": "explore_noise_std", "target_noise": "target_noise_std"}
        # obs_dim/action_dim appear in run echoes but follow from the environment
        values = {aliases.get(k, k): v for k, v in values.items() if k not in ("obs_dim", "action_dim")}
        unknown = sorted(set(values) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
        if isinstance(args.hidden, str):
            args.hidden = _hidden(args.hidden)
    return args


def run_config_from_args(args) -> RunConfig:
    hidden = args.hidden if isinstance(args.hidden, tuple) else _hidden(args.hidden)
    try:
        agent = AgentConfig(
            alpha=args.alpha, kappa=args.kappa, gamma=args.gamma, tau=args.tau,
            actor_lr=args.actor_lr, critic_lr=args.critic_lr, batch_size=args.batch_size,
            policy_freq=args.policy_freq, explore_noise_std=args.explore_noise_std,
            target_noise_std=args.target_noise_std, noise_clip=args.noise_clip, K=args.K, M=args.M,
            hidden=hidden,
        )
        return RunConfig(
            agent=agent, env=args.env, map_file=args.map_file, total_env_steps=args.total_env_steps,
            eval_every=args.eval_every, eval_episodes=args.eval_episodes, seed=args.seed,
            warmup=args.warmup, replay_capacity=args.replay_capacity, state_stride=args.state_stride,
            variant=args.variant, out_dir=args.out_dir,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_train(args) -> int:
    cfg = run_config_from_args(args)
    metrics = run_training(cfg)
    if cfg.out_dir and metrics.agent is not None:
        metrics.agent.save(Path(cfg.out_dir) / "checkpoint")
    final = metrics.rows[-1] if metrics.rows else None
    if final:
        print(f"final env_step={final[0]} mean_return={final[1]:.3f} failure_rate={final[2]:.2f}")
    if metrics.diverged:
        print(f"diverged: {metrics.diverged}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _summary_csv(summary: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variant", "median_return", "mean_return", "median_failure_rate", "median_storm_visits"])
    for variant, s in summary.items():
        w.writerow([variant, s["median_return"], s["mean_return"], s["median_failure_rate"], s["median_storm_visits"]])
    return buf.getvalue()


def cmd_ablate(args) -> int:
    base = run_config_from_args(args)
    variants = [v.strip().lower() for v in args.variants.split(",") if v.strip()]
    bad = [v for v in variants if v not in VARIANTS]
    if bad or args.seeds < 1:
        raise UsageError(f"bad variants {bad} or seed count {args.seeds}")
    rows = run_ablation(base, variants, range(args.seeds), workers=args.workers)
    summary = summarize_ablation(rows)
    if base.out_dir:
        out = Path(base.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation.csv").write_text(ablation_csv(rows))
        (out / "summary.csv").write_text(_summary_csv(summary))
    print(f"{'variant':<8} {'median':>10} {'mean':>10} {'fail':>6} {'storm':>8}")
    for variant, s in summary.items():
        print(f"{variant:<8} {s['median_return']:>10.2f} {s['mean_return']:>10.2f} "
              f"{s['median_failure_rate']:>6.2f} {s['median_storm_visits']:>8.0f}")
    return EXIT_DIVERGED if any(np.isnan(r.final_return) for r in rows) else EXIT_OK


def cmd_gridsearch(args) -> int:
    base = run_config_from_args(args)
    out = Path(base.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "kappa", "seed", "final_return"] if args.execute else ["alpha", "kappa", "seed"])
    diverged = False
    for alpha in ALPHA_GRID:
        for kappa in KAPPA_GRID:
            if not args.execute:
                w.writerow([alpha, kappa, base.seed])
                continue
            run_out = str(out / f"a{alpha}_k{kappa}") if base.out_dir else None
            cfg = replace(base, variant="custom", agent=replace(base.agent, alpha=alpha, kappa=kappa), out_dir=run_out)
            m = run_training(cfg)
            diverged |= m.diverged is not None
            w.writerow([alpha, kappa, base.seed, repr(m.final_return)])
    name = "gridsearch.csv" if args.execute else "manifest.csv"
    (out / name).write_text(buf.getvalue())
    print(f"wrote {len(ALPHA_GRID) * len(KAPPA_GRID)} configurations to {out / name}")
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_analyze(args) -> int:
    if not (args.run or args.states):
        raise UsageError("analyze needs --run or --states")
    states = Path(args.states) if args.states else Path(args.run) / "states.f64"
    dim = args.dim
    if dim is None:
        if not args.run:
            raise UsageError("--dim is required with --states")
        dim = int(read_config_file(Path(args.run) / "config.txt")["obs_dim"])
    out = args.out_dir or args.run or "."
    model = analyze_states(states, out, dim, bins=args.bins)
    print(f"explained variances: {' '.join(f'{v:.6g}' for v in model.variances)}")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "ablate": cmd_ablate, "gridsearch": cmd_gridsearch, "analyze": cmd_analyze}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _parse(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"ader: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ader: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"ader: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
