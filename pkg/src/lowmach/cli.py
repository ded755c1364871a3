"""Command-line entry point: ``lowmach <subcommand> [options]``.

Exit codes: 0 when every check passes, 1 when a property check fails and
2 on a usage or configuration error.  ``--config FILE`` loads a JSON config;
any ``--section.key value`` flag overrides one key.  The environment
variable ``LOWMACH_OUTPUT_ROOT`` prefixes the output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from . import experiments as ex
from .config import EXPERIMENTS, ConfigError, RunConfig, apply_overrides, validate
from .gas import validate_assumptions
from .norms import ParamTriple
from .reports import ExperimentReport, write_report

OUTPUT_ROOT_ENV = "LOWMACH_OUTPUT_ROOT"

# Driver functions whose extra keyword arguments may be set under ``options``.
DRIVER_OPTIONS: dict[str, Callable[..., Any]] = {
    "verify-operators": ex.run_operator_suite,
    "example42": ex.run_example42,
    "limit-convergence": ex.run_limit_convergence,
    "acoustic-decay": ex.run_acoustic_decay,
    "linearized-probe": ex.run_linearized_estimate_probe,
}

# Shortcut flags for common keys, e.g. ``--seed 1`` for ``--data.seed 1``.
SHORTCUTS = {"seed": "data.seed", "n": "grid.n", "d": "grid.d", "output": "output.directory"}


def _options(cfg: RunConfig, **base: Any) -> dict[str, Any]:
    base.update(cfg.options)
    return base


def run_experiment(cfg: RunConfig) -> ExperimentReport:
    """Dispatch a validated config to its driver."""
    g, p, dat = cfg.grid, cfg.params, cfg.data
    name = cfg.experiment
    if name in ("simulate", "sweep"):
        spec = ex.ExperimentSpec(
            name=name,
            dim=g.d,
            points=g.n,
            box_length=g.L,
            eps_list=p.eps,
            mu_list=p.mu,
            kappa_list=p.kappa,
            seed=dat.seed,
            band=dat.band,
            target_norm=dat.target_norm,
            well_prepared=dat.well_prepared,
            order_s=dat.order_s,
            t_end=dat.t_end,
        )
        if name == "sweep":
            return ex.run_uniform_sweep(spec, cfg.stepper, cfg.coefficients())
        a = ParamTriple(p.eps[0], p.mu[0], p.kappa[0])
        return ex.run_simulation(a, spec, cfg.stepper, cfg.coefficients())
    if name == "verify-operators":
        return ex.run_operator_suite(**_options(cfg, seed=dat.seed, n=g.n, d=g.d))
    if name == "example42":
        return ex.run_example42(
            **_options(cfg, eps_list=p.eps, n=g.n, d=g.d, T=dat.t_end, seed=dat.seed, band=dat.band)
        )
    if name == "limit-convergence":
        return ex.run_limit_convergence(
            **_options(
                cfg, eps_list=p.eps, mu=p.mu[0], kappa=p.kappa[0], n=g.n, d=g.d, T=dat.t_end,
                seed=dat.seed, band=dat.band, coefficients=cfg.coefficients(),
            )
        )
    if name == "acoustic-decay":
        return ex.run_acoustic_decay(**_options(cfg, eps_list=p.eps, box_scale=g.L, T=dat.t_end))
    if name == "linearized-probe":
        return ex.run_linearized_estimate_probe(
            **_options(
                cfg, eps_list=p.eps, mu=p.mu[0], kappa=p.kappa[0], n=g.n, d=g.d, T=dat.t_end,
                seed=dat.seed, band=dat.band, coefficients=cfg.coefficients(),
            )
        )
    raise ValueError(f"experiment {name!r} has no driver")


def _validate_model(cfg: RunConfig) -> ExperimentReport:
    from .reports import Check

    report = validate_assumptions(cfg.coefficients())
    print(report.table())
    out = ExperimentReport("validate")
    for clause in report.clauses:
        margin = clause.margin if clause.margin is not None else 0.0
        out.checks.append(Check(clause.name, clause.passed, margin, 0.0, clause.status))
    out.summary["validation"] = report.to_dict()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lowmach",
        description="Pseudospectral low Mach number laboratory.",
        epilog="Any --section.key VALUE flag overrides one config key; "
        f"{OUTPUT_ROOT_ENV} prefixes the output directory.",
    )
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} driver")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--quiet", action="store_true", help="print only the verdict line")
        if name == "validate-model":
            p.add_argument("--preset", default=None, help="coefficient preset (perfect-gas)")
        for short, target in SHORTCUTS.items():
            p.add_argument(f"--{short}", dest=f"short_{short}", default=None, help=f"alias of --{target}")
    return parser


def _split_overrides(argv: Sequence[str]) -> tuple[list[str], list[tuple[str, str]]]:
    """Separate dotted ``--section.key value`` flags from the argparse flags.

    Raises:
        ConfigError: If a dotted flag has no value.
    """
    rest, overrides = [], []
    i = 0
    argv = list(argv)
    while i < len(argv):
        arg = argv[i]
        if arg.startswith("--") and "." in arg.split("=", 1)[0]:
            if "=" in arg:
                key, value = arg[2:].split("=", 1)
                i += 1
            else:
                if i + 1 >= len(argv):
                    raise ConfigError([f"{arg[2:]}: missing value"])
                key, value = arg[2:], argv[i + 1]
                i += 2
            overrides.append((key, value))
        else:
            rest.append(arg)
            i += 1
    return rest, overrides


def run_command(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the driver, write the report and return an exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        rest, overrides = _split_overrides(argv)
    except ConfigError as err:
        print(err, file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(rest)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        raw: dict[str, Any] = {}
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as err:
                raise ConfigError([f"--config: cannot read {args.config}: {err.strerror}"]) from None
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as err:
                raise ConfigError([f"syntax error at line {err.lineno}, column {err.colno}: {err.msg}"]) from None
            if not isinstance(raw, dict):
                raise ConfigError(["<root>: expected a JSON object"])
        if raw.get("experiment", args.command) != args.command:
            raise ConfigError(
                [f"experiment: config names {raw['experiment']!r} but the subcommand is {args.command!r}"]
            )
        raw["experiment"] = args.command
        for short, target in SHORTCUTS.items():
            value = getattr(args, f"short_{short}")
            if value is not None:
                overrides.append((target, value))
        if getattr(args, "preset", None) is not None:
            overrides.append(("model.preset", json.dumps(args.preset)))
        cfg = validate(apply_overrides(raw, overrides))
    except ConfigError as err:
        print(err, file=sys.stderr)
        return 2

    if cfg.experiment == "validate-model":
        report = _validate_model(cfg)
    else:
        try:
            report = run_experiment(cfg)
        except ValueError as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
    directory = Path(cfg.output.directory)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root:
        directory = Path(root) / directory
    try:
        written = write_report(report, directory, cfg.output.formats, cfg.to_dict())
    except OSError as err:
        print(f"error: cannot write report to {directory}: {err}", file=sys.stderr)
        return 2
    if not args.quiet:
        for line in report.lines():
            print(line)
        for path in written:
            print(f"wrote {path}")
    print(f"{cfg.experiment}: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def main() -> None:
    sys.exit(run_command())
