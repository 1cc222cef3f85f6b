"""Command line: ``pvdonet {run,eval,infer,plot,gradcheck}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config

log = logging.getLogger("pvdonet")


def _thread_limit():
    """Honour ``PVD_THREADS`` for the BLAS pool."""
    raw = os.environ.get("PVD_THREADS")
    if not raw:
        return None
    n = int(raw)
    if n < 1:
        raise SystemExit("PVD_THREADS must be a positive integer")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.preset:
        cfg = cfg.with_preset(args.preset)
    return cfg.updated(
        seed=args.seed,
        out=args.out,
        method=getattr(args, "method", None),
        problem=getattr(args, "problem", None),
        iterations=getattr(args, "iterations", None),
    )


def cmd_run(args) -> int:
    from .runner import run

    cfg = _config(args)
    outcome = run(cfg, plot=not args.no_plot)
    g = outcome.report.metrics
    print(
        f"{cfg.method} {cfg.problem} seed={cfg.seed}: rel L2 {g[('global', 'rel_l2')]:.3e}, "
        f"Linf {g[('global', 'linf')]:.3e}, junction {g[('junction', 'abs_error')]:.3e} "
        f"-> {outcome.directory}"
    )
    if not outcome.ok:
        print(outcome.status, file=sys.stderr)
        return 2
    return 0


def cmd_eval(args) -> int:
    from .evaluation import report_csv
    from .runner import evaluate_run

    print(report_csv(evaluate_run(args.run)), end="")
    return 0


def cmd_infer(args) -> int:
    from .runner import infer, read_pairs

    out = infer(args.run, read_pairs(args.pairs), args.out or Path(args.run) / "inference.csv")
    print(out)
    return 0


def cmd_plot(args) -> int:
    from .plotting import plot_run

    print(plot_run(args.run, args.out))
    return 0


def cmd_gradcheck(args) -> int:
    from .gradcheck import check_jets, check_loss_gradients, check_operator_gradients

    seed = args.seed or 0
    results = [
        *check_loss_gradients(trials=args.trials, seed=seed),
        *check_operator_gradients(seed=seed),
        check_jets(seed=seed),
    ]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:24s} max rel err {r.max_error:.2e} (tol {r.tolerance:g})")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pvdonet", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI file with an [experiment] section")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output path")
        sp.add_argument("--preset", choices=["full", "desk"])

    r = sub.add_parser("run", help="train, evaluate and write a run directory")
    common(r)
    r.add_argument("--method")
    r.add_argument("--problem", choices=["constant", "variable"])
    r.add_argument("--iterations", type=int)
    r.add_argument("--no-plot", action="store_true")
    r.set_defaults(fn=cmd_run)

    e = sub.add_parser("eval", help="recompute report.csv from saved weights")
    common(e)
    e.add_argument("run", help="run directory")
    e.set_defaults(fn=cmd_eval)

    i = sub.add_parser("infer", help="operator predictions for (alpha, beta) pairs")
    common(i)
    i.add_argument("run", help="run directory of an operator method")
    i.add_argument("pairs", help="text file, one 'alpha beta' pair per line")
    i.set_defaults(fn=cmd_infer)

    pl = sub.add_parser("plot", help="write an SVG of prediction vs reference")
    common(pl)
    pl.add_argument("run", help="run directory")
    pl.set_defaults(fn=cmd_plot)

    g = sub.add_parser("gradcheck", help="finite-difference checks of gradients and jets")
    common(g)
    g.add_argument("--trials", type=int, default=50)
    g.set_defaults(fn=cmd_gradcheck)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    limit = _thread_limit()
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        if limit is not None:
            limit.restore_original_limits()


if __name__ == "__main__":
    sys.exit(main())
