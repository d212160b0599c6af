"""Command-line entry point.

Subcommands: generate (sample a builtin to CSV), run (one fit, writes a
model file plus a record), check (audit a saved model), batch (repeated
seeded runs), report (median and violation tables from a records file).

Exit codes: 0 success or feasible, 1 infeasible or unknown name, 2 usage.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from . import experiment, modelfile, problems
from .experiment import truncate_pct
from .gp import GPConfig
from .itea import ITEAConfig
from .runlog import write_convergence_csv

__all__ = ["main"]


class CliError(Exception):
    """Recoverable command failure: message printed, exit code 1."""


def _pct(value: float) -> str:
    return f"{truncate_pct(value):.2f}"


def _resolve_problem(args) -> problems.ProblemSpec:
    if getattr(args, "spec", None):
        spec = problems.load_spec(args.spec)
    else:
        registry = problems.builtin_registry()
        spec = registry.get(args.problem)
        if spec is None:
            names = ", ".join(sorted(registry))
            raise CliError(f"unknown problem {args.problem!r}; available: {names}")
    if getattr(args, "noise", False):
        spec = spec.with_noise()
    if getattr(args, "data_seed", None) is not None:
        spec = spec.with_seed(args.data_seed)
    return spec


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", ".") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _gp_config(args) -> GPConfig | None:
    """Tree-search config from CLI overrides; None means per-algorithm
    defaults apply downstream."""
    overrides = {}
    if getattr(args, "pop_size", None):
        overrides["population_size"] = args.pop_size
    if getattr(args, "generations", None):
        overrides["generations"] = args.generations
    if getattr(args, "n_opt", None) is not None:
        overrides["n_opt"] = args.n_opt
    if getattr(args, "max_length", None):
        overrides["max_length"] = args.max_length
    if getattr(args, "max_depth", None):
        overrides["max_depth"] = args.max_depth
    if not overrides:
        return None
    base = experiment._resolve_gp_config(getattr(args, "algo", "gp"), None)
    return dataclasses.replace(base, **overrides)


def _itea_config(args) -> ITEAConfig | None:
    overrides = {}
    if getattr(args, "pop_size", None):
        overrides["population_size"] = args.pop_size
    if getattr(args, "iterations", None):
        overrides["iterations"] = args.iterations
    if not overrides:
        return None
    return dataclasses.replace(ITEAConfig(), **overrides)


# ------------------------------------------------------------- subcommands


def cmd_generate(args) -> int:
    spec = _resolve_problem(args)
    if not spec.is_builtin:
        raise CliError(f"problem {spec.name!r} has no generating formula")
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    train, test = problems.generate(spec)
    out = _out_dir(args)
    problems.save_csv(train, str(out / "train.csv"))
    problems.save_csv(test, str(out / "test.csv"))
    print(f"wrote {out / 'train.csv'} ({train.n_rows} rows)")
    print(f"wrote {out / 'test.csv'} ({test.n_rows} rows)")
    return 0


def cmd_run(args) -> int:
    spec = _resolve_problem(args)
    algo = args.algo
    constrained = bool(args.constraints)
    if algo == "itea" and constrained:
        raise CliError("itea does not handle constraints; use --algo fiit")
    if algo == "fiit" and len(spec.constraint_set()) == 0:
        if not args.allow_empty_constraints:
            raise CliError(
                "fiit requires constraints; this problem declares none "
                "(pass --allow-empty-constraints to run unconstrained anyway)"
            )
        print("note: no constraints declared; running plain itea")
        algo = "itea"
    log_rows: list = []
    record = experiment.run_one(
        spec,
        algo,
        args.seed,
        constrained=constrained,
        audit_samples=args.audit_samples,
        gp_config=_gp_config(args),
        itea_config=_itea_config(args),
        log_sink=log_rows,
    )
    out = _out_dir(args)
    stem = f"{spec.name}-{record.algorithm}-seed{args.seed}"
    model_path = out / f"model-{stem}.json"
    model = modelfile.model_from_dict(record.model)
    modelfile.save_model(
        model, str(model_path), problem=spec.name, algorithm=record.algorithm,
        seed=args.seed, constrained=record.constrained,
    )
    experiment.append_record(str(out / "records.jsonl"), record)
    if log_rows:
        write_convergence_csv(str(out / f"convergence-{stem}.csv"), log_rows)
    print(f"train NMSE: {_pct(record.train_nmse_pct)}%")
    print(f"test NMSE: {_pct(record.test_nmse_pct)}%")
    if record.no_solution:
        print("no feasible model found")
    print(f"model written to {model_path}")
    return 0


def cmd_check(args) -> int:
    from .constraints import audit_empirical

    spec = _resolve_problem(args)
    model, meta = modelfile.load_model(args.model)
    if model is None:
        print("model file holds no model; infeasible by definition")
        return 1
    cset = spec.constraint_set()
    if len(cset) == 0:
        print("problem declares no constraints; nothing to audit")
        return 0
    report = audit_empirical(model, cset, n_samples=args.samples, seed=args.audit_seed)
    for constraint, count in zip(cset.constraints, report.counts):
        print(f"{constraint.describe()}: {count} violations")
    print(f"checked {report.n_samples} points: "
          f"{'feasible' if report.feasible else 'INFEASIBLE'}")
    return 0 if report.feasible else 1


def cmd_batch(args) -> int:
    registry = problems.builtin_registry()
    if args.problems == "all":
        specs = list(registry.values())
    else:
        specs = []
        for name in args.problems.split(","):
            name = name.strip()
            if name not in registry:
                raise CliError(
                    f"unknown problem {name!r}; available: {', '.join(sorted(registry))}"
                )
            specs.append(registry[name])
    if args.noise:
        specs = [s.with_noise() for s in specs]
    algorithms = [a.strip() for a in args.algos.split(",")]
    for algo in algorithms:
        if algo not in experiment.ALGORITHMS:
            raise CliError(
                f"unknown algorithm {algo!r}; available: {', '.join(experiment.ALGORITHMS)}"
            )
    out = _out_dir(args)
    records = experiment.run_batch(
        specs,
        algorithms,
        repetitions=args.reps,
        base_seed=args.base_seed,
        constrained=bool(args.constraints),
        audit_samples=args.audit_samples,
        out_path=str(out / "records.jsonl"),
        workers=args.workers,
        gp_config=_gp_config(args),
        itea_config=_itea_config(args),
    )
    medians = experiment.report_medians(records)
    experiment.write_medians_csv(medians, str(out / "medians.csv"))
    if args.audit_samples:
        freqs = experiment.report_violations(records)
        experiment.write_violations_csv(freqs, str(out / "violations.csv"))
    failures = sum(1 for r in records if r.error is not None)
    print(f"{len(records)} runs recorded in {out / 'records.jsonl'}"
          + (f" ({failures} failed)" if failures else ""))
    for (prob, algo), (tr, te) in medians.items():
        print(f"{prob} {algo}: median train {tr:.2f}% test {te:.2f}%")
    return 0


def cmd_report(args) -> int:
    records = experiment.load_records(args.records)
    if not records:
        raise CliError(f"{args.records}: no records")
    if args.kind == "medians":
        table = experiment.report_medians(records)
        if args.out:
            experiment.write_medians_csv(table, args.out)
        for (prob, algo), (tr, te) in table.items():
            print(f"{prob},{algo},{tr:.2f},{te:.2f}")
    else:
        try:
            freqs = experiment.report_violations(records)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        if args.out:
            experiment.write_violations_csv(freqs, args.out)
        for (prob, algo), freq in freqs.items():
            print(f"{prob},{algo},{freq!r}")
    return 0


# ------------------------------------------------------------------ parser


def _add_problem_source(p, required=True):
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--problem", help="builtin problem name")
    group.add_argument("--spec", help="path to a problem-spec JSON file")


def _add_config_overrides(p):
    p.add_argument("--pop-size", type=int, help="population size override")
    p.add_argument("--generations", type=int, help="tree-search generations")
    p.add_argument("--iterations", type=int, help="IT-search iterations")
    p.add_argument("--n-opt", type=int, help="parameter-optimizer iterations per child")
    p.add_argument("--max-length", type=int, help="tree length limit")
    p.add_argument("--max-depth", type=int, help="tree depth limit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapesr",
        description="Symbolic regression with shape constraints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a builtin problem to CSV files")
    g.add_argument("problem", help="builtin problem name")
    g.add_argument("--noise", action="store_true", help="noisy target variant")
    g.add_argument("--seed", type=int, default=None, help="sampling seed")
    g.add_argument("--out", default=".", help="output directory")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run one algorithm once")
    _add_problem_source(r)
    r.add_argument("--algo", required=True, choices=experiment.ALGORITHMS)
    r.add_argument("--constraints", action="store_true",
                   help="enforce the problem's shape constraints")
    r.add_argument("--allow-empty-constraints", action="store_true",
                   help="let fiit run without constraints (degenerate mode)")
    r.add_argument("--seed", type=int, default=0, help="search seed")
    r.add_argument("--data-seed", type=int, default=None, help="dataset seed")
    r.add_argument("--noise", action="store_true", help="noisy target variant")
    r.add_argument("--audit-samples", type=int, default=None,
                   help="audit the final model on this many points")
    r.add_argument("--out", default=".", help="output directory")
    _add_config_overrides(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="audit a saved model against a problem")
    c.add_argument("model", help="model file written by run")
    _add_problem_source(c)
    c.add_argument("--samples", type=int, default=1_000_000,
                   help="number of uniform audit points")
    c.add_argument("--audit-seed", type=int, default=0)
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("batch", help="repeated seeded runs over problems")
    b.add_argument("--problems", default="all",
                   help="comma-separated builtin names, or 'all'")
    b.add_argument("--algos", default="gp", help="comma-separated algorithms")
    b.add_argument("--reps", type=int, default=30, help="repetitions per cell")
    b.add_argument("--base-seed", type=int, default=0)
    b.add_argument("--constraints", action="store_true")
    b.add_argument("--noise", action="store_true")
    b.add_argument("--audit-samples", type=int, default=None)
    b.add_argument("--workers", type=int,
                   default=int(os.environ.get("SHAPESR_WORKERS", "1")),
                   help="parallel runs (default from SHAPESR_WORKERS)")
    b.add_argument("--out", default=".", help="output directory")
    _add_config_overrides(b)
    b.set_defaults(func=cmd_batch)

    rep = sub.add_parser("report", help="tables from a records file")
    rep.add_argument("kind", choices=("medians", "violations"))
    rep.add_argument("records", help="records.jsonl from run/batch")
    rep.add_argument("--out", default=None, help="also write a CSV here")
    rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
