"""Command-line entry point: ``spindle-bounds <command> [flags]``.

Commands:

- ``generate``    write a problem instance (``X.csv``, ``Y.csv``, ``meta.json``)
- ``train``       train one learner on one prefix and dump its weights
- ``curve``       tabulate a bound curve
- ``experiment``  seed-averaged loss curve against its bound, CSV plus SVG
- ``figure2``     linear neuron against the spindly net on Hadamard and random sign rows
- ``verify``      run the verification suites by tag, ``all`` for every suite

The exit code is 0 only when every asserted check passes.
"""
import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

from spindle_bounds import __version__, config, harness, io, plots
from spindle_bounds.bounds import BoundKind, bound_curve
from spindle_bounds.exceptions import SpindleBoundsError
from spindle_bounds.learners import InitKind, LearnerKind, average_loss, default_config, seen_loss, train
from spindle_bounds.losses import LossKind
from spindle_bounds.problems import Family, make_problem
from spindle_bounds.strategy import STRATEGY_REGISTRY, get_strategy

log = logging.getLogger(__name__)

DEFAULTS: Dict[str, Any] = {
    "q": 1,
    "column": 1,
    "seeds": 100,
    "learner": LearnerKind.LINEAR.value,
    "problem": Family.SIGN_FLIP.value,
    "loss": LossKind.SQUARE.value,
    "strategy": "local",
    "workers": 1,
}

_CONFIG_FIELDS = ("eta", "epochs", "init", "sigma", "clip", "hidden_units", "online_to_batch")

#: dimension used when --d is not given
DEFAULT_DIM = 16
FIGURE2_DIM = 64


def _values(enum) -> List[str]:
    return [member.value for member in enum]


def _common_parser() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="flat key=value file; flags given here win over it")
    parent.add_argument("--d", type=int, help="dimension, a power of two for Hadamard families")
    parent.add_argument("--k", type=config.KEYS["k"], help="prefix length(s), comma separated")
    parent.add_argument("--q", type=int, help="duplication factor")
    parent.add_argument("--n", type=int, help="rows of the Gaussian and random sign families")
    parent.add_argument("--column", type=int, help="target column of single-feature families")
    parent.add_argument("--seeds", type=int, help="number of seeds to average over")
    parent.add_argument("--learner", choices=_values(LearnerKind))
    parent.add_argument("--problem", choices=_values(Family))
    parent.add_argument("--loss", choices=_values(LossKind))
    parent.add_argument("--bound", choices=_values(BoundKind))
    parent.add_argument("--eta", type=float, help="learning rate")
    parent.add_argument("--epochs", type=int)
    parent.add_argument("--init", choices=_values(InitKind))
    parent.add_argument("--sigma", type=float, help="standard deviation of the Gaussian init")
    parent.add_argument("--hidden-units", dest="hidden_units", type=int)
    parent.add_argument("--clip", type=config.KEYS["clip"], help="prediction interval 'lo,hi'")
    parent.add_argument("--online-to-batch", dest="online_to_batch", action="store_true", default=None)
    parent.add_argument("--out", help="output file or directory")
    parent.add_argument("--master-seed", dest="master_seed", type=int, help=f"defaults to ${config.SEED_ENV}, then 0")
    parent.add_argument("--strategy", choices=sorted(STRATEGY_REGISTRY))
    parent.add_argument("--workers", type=int, help="threads of the local strategy")
    parent.add_argument("-v", "--verbose", action="store_true", default=None)
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spindle-bounds", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = _common_parser()
    commands = parser.add_subparsers(dest="command", required=True)
    for name, handler in _COMMANDS.items():
        sub = commands.add_parser(name, parents=[common], help=handler.__doc__)
        if name == "verify":
            sub.add_argument("tags", nargs="*", default=["all"], help="suite tags such as T1 or COR6")
        sub.set_defaults(handler=handler)
    return parser


def resolve_options(args: argparse.Namespace) -> Dict[str, Any]:
    """Defaults, then the ``--config`` file, then explicit flags."""
    flags = {key: value for key, value in vars(args).items() if key not in ("config", "handler", "command")}
    file_values = config.load_config(args.config) if args.config else {}
    opts = config.merge({**DEFAULTS, **file_values}, flags)
    opts["master_seed"] = config.resolve_master_seed(opts.get("master_seed"))
    if args.command != "figure2":
        opts["d"] = opts.get("d") or DEFAULT_DIM
    return opts


def _learner_config(opts: Dict[str, Any]):
    overrides = {key: opts[key] for key in _CONFIG_FIELDS if opts.get(key) is not None}
    return default_config(opts["learner"], **overrides)


def _problem(opts: Dict[str, Any]):
    return make_problem(
        opts["problem"], opts["d"], opts["master_seed"], column=opts["column"], q=opts["q"], n=opts.get("n")
    )


def cmd_generate(opts: Dict[str, Any]) -> int:
    """Write a problem instance."""
    p = _problem(opts)
    out = opts.get("out") or f"{p.family.value}_d{opts['d']}"
    io.save_problem(out, p)
    log.info("wrote %s problem (%d x %d, %d targets) to %s", p.family.value, p.n, p.d, p.m, out)
    return 0


def cmd_train(opts: Dict[str, Any]) -> int:
    """Train one learner on one prefix."""
    p = _problem(opts)
    k = (opts.get("k") or [p.n])[0]
    cfg = _learner_config(opts)
    model = train(opts["learner"], p, k, cfg, seed=opts["master_seed"])
    loss = LossKind(opts["loss"])
    print(f"k={k} average_loss={average_loss(model, p, loss):.10g} seen_loss={seen_loss(model, p, k, loss):.10g}")
    if opts.get("out"):
        io.save_model(opts["out"], model, cfg)
        log.info("wrote %s weights to %s", model.kind.value, opts["out"])
    return 0


def cmd_curve(opts: Dict[str, Any]) -> int:
    """Tabulate a bound curve."""
    kind = opts.get("bound") or harness.default_bound(opts["problem"])
    if kind is None:
        log.error("no bound curve for the %s family, pass --bound", opts["problem"])
        return 2
    curve = bound_curve(kind, opts["d"], q=opts["q"])
    if opts.get("out"):
        io.save_curve(opts["out"], curve)
    for k, value in enumerate(curve.values.tolist()):
        print(f"{k},{io.format_number(value)},{curve.tag}")
    return 0


def cmd_experiment(opts: Dict[str, Any]) -> int:
    """Seed-averaged loss curve against its bound."""
    out = opts.get("out") or "experiment.csv"
    spec = harness.ExperimentSpec(
        opts["problem"],
        opts["learner"],
        opts["d"],
        k_values=opts.get("k"),
        seeds=opts["seeds"],
        cfg=_learner_config(opts),
        loss=opts["loss"],
        master_seed=opts["master_seed"],
        column=opts["column"],
        q=opts["q"],
        n=opts.get("n"),
        bound=opts.get("bound"),
        out=out,
    )
    strategy = get_strategy(opts["strategy"], opts["workers"])
    try:
        result = harness.run_experiment(spec, strategy)
        if strategy.is_global_zero:
            plots.plot_curves(result, os.path.splitext(out)[0] + ".svg", harness.companion_curves(spec))
    finally:
        strategy.teardown()
    return 0


def _report(checks: Sequence[harness.Check]) -> None:
    for c in checks:
        status = "report" if not c.asserted else ("PASS" if c.passed else "FAIL")
        value, threshold = io.format_number(c.value), io.format_number(c.threshold)
        print(f"{status:6s} {c.tag:8s} {c.check}: {value} (threshold {threshold})")


def cmd_figure2(opts: Dict[str, Any]) -> int:
    """Linear neuron against the spindly net."""
    out_dir = opts.get("out") or "figure2"
    strategy = get_strategy(opts["strategy"], opts["workers"])
    try:
        figure = harness.figure2_reproduction(
            d=opts.get("d") or FIGURE2_DIM,
            seeds=opts["seeds"],
            master_seed=opts["master_seed"],
            strategy=strategy,
            out_dir=out_dir,
        )
    finally:
        strategy.teardown()
    report = harness.VerifyReport(list(figure.checks))
    report.to_csv(os.path.join(out_dir, "figure2_checks.csv"))
    _report(report.checks)
    return 0 if report.passed else 1


def cmd_verify(opts: Dict[str, Any]) -> int:
    """Run verification suites."""
    strategy = get_strategy(opts["strategy"], opts["workers"])
    try:
        report = harness.verify(opts["tags"], master_seed=opts["master_seed"], strategy=strategy)
    finally:
        strategy.teardown()
    if opts.get("out"):
        report.to_csv(opts["out"])
    _report(report.checks)
    return 0 if report.passed else 1


_COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "curve": cmd_curve,
    "experiment": cmd_experiment,
    "figure2": cmd_figure2,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        opts = resolve_options(args)
        return args.handler(opts)
    except (SpindleBoundsError, ValueError) as err:
        log.error("%s", err)
        return 2


if __name__ == "__main__":
    sys.exit(main())
