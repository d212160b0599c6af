"""Batch orchestration: repeated seeded runs, append-only record files,
median tables and constraint-violation frequencies."""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import statistics
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import gp as gp_mod
from . import itea as itea_mod
from . import modelfile
from .constraints import audit_empirical
from .fitness import nmse
from .gp import GPConfig
from .itea import ITEAConfig
from .problems import ProblemSpec, generate

__all__ = [
    "ALGORITHMS",
    "RunRecord",
    "run_one",
    "run_batch",
    "append_record",
    "load_records",
    "report_medians",
    "report_violations",
    "write_medians_csv",
    "write_violations_csv",
    "truncate_pct",
    "overhead_ratio",
]

ALGORITHMS = ("gp", "gpc", "itea", "fiit")

log = logging.getLogger(__name__)


@dataclass
class RunRecord:
    """Outcome of one algorithm run on one problem."""

    problem: str
    algorithm: str
    constrained: bool
    seed: int
    train_nmse_pct: float
    test_nmse_pct: float
    wall_time: float
    evaluations: int
    model: dict
    audit: Optional[dict] = None
    no_solution: bool = False
    error: Optional[str] = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        for v in (self.train_nmse_pct, self.test_nmse_pct):
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"NMSE percent {v} outside [0, 100]")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**d)


def _resolve_gp_config(algorithm: str, gp_config: Optional[GPConfig]) -> GPConfig:
    if gp_config is None:
        # memetic variant defaults to far fewer generations; the parameter
        # optimizer does the rest of the work
        gp_config = GPConfig(generations=20) if algorithm == "gpc" else GPConfig()
    if algorithm == "gpc" and gp_config.n_opt <= 0:
        gp_config = dataclasses.replace(gp_config, n_opt=10)
    return gp_config


def run_one(
    spec: ProblemSpec,
    algorithm: str,
    seed: int,
    *,
    constrained: bool = False,
    audit_samples: Optional[int] = None,
    gp_config: Optional[GPConfig] = None,
    itea_config: Optional[ITEAConfig] = None,
    log_sink: Optional[list] = None,
) -> RunRecord:
    """One full run: generate data, fit on train, score on test.

    The dataset comes from spec.seed; `seed` drives the search so that
    repetitions share the data.  FI-2POP always uses the problem's
    constraints; plain ITEA never does.  Pass a list as log_sink to
    collect the run's convergence rows.
    """
    algorithm = algorithm.lower()
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    t0 = time.perf_counter()
    train, test = generate(spec)
    cset = spec.constraint_set()
    no_solution = False

    if algorithm in ("gp", "gpc"):
        cfg = dataclasses.replace(_resolve_gp_config(algorithm, gp_config), seed=seed)
        res = gp_mod.run(cfg, train.X, train.y, cset if constrained else None)
        model = res.scaled
        evaluations = res.evaluations
    elif algorithm == "itea":
        if constrained:
            raise ValueError("itea ignores constraints; use fiit for constrained runs")
        cfg = dataclasses.replace(itea_config or ITEAConfig(), seed=seed)
        res = itea_mod.run_itea(cfg, train.X, train.y)
        model = res.expr
        evaluations = res.evaluations
    else:  # fiit
        constrained = True
        cfg = dataclasses.replace(itea_config or ITEAConfig(), seed=seed)
        res = itea_mod.run_fi2pop(cfg, train.X, train.y, cset)
        model = res.expr
        evaluations = res.evaluations
        no_solution = model is None

    if log_sink is not None:
        log_sink.extend(res.log)

    if model is None:
        train_pct, test_pct = 100.0, 100.0
    else:
        with np.errstate(all="ignore"):
            train_pct = 100.0 * nmse(model.predict(train.X), train.y)
            test_pct = 100.0 * nmse(model.predict(test.X), test.y)

    audit = None
    if audit_samples:
        if model is None:
            audit = {"n_samples": 0, "counts": [], "feasible": False}
        else:
            rep = audit_empirical(model, cset, n_samples=audit_samples, seed=0)
            audit = {
                "n_samples": rep.n_samples,
                "counts": list(rep.counts),
                "feasible": rep.feasible,
            }

    return RunRecord(
        problem=spec.name,
        algorithm=algorithm,
        constrained=constrained,
        seed=seed,
        train_nmse_pct=train_pct,
        test_nmse_pct=test_pct,
        wall_time=time.perf_counter() - t0,
        evaluations=evaluations,
        model=modelfile.model_to_dict(model),
        audit=audit,
        no_solution=no_solution,
    )


def _safe_run(spec, algorithm, seed, constrained, audit_samples, gp_config, itea_config):
    t0 = time.perf_counter()
    try:
        return run_one(
            spec,
            algorithm,
            seed,
            constrained=constrained,
            audit_samples=audit_samples,
            gp_config=gp_config,
            itea_config=itea_config,
        )
    except Exception as exc:  # record the failure, keep the batch going
        log.warning("run failed: %s/%s seed=%d: %s", spec.name, algorithm, seed, exc)
        return RunRecord(
            problem=spec.name,
            algorithm=algorithm,
            constrained=constrained or algorithm == "fiit",
            seed=seed,
            train_nmse_pct=100.0,
            test_nmse_pct=100.0,
            wall_time=time.perf_counter() - t0,
            evaluations=0,
            model={"kind": "none"},
            no_solution=True,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_batch(
    problem_specs: Sequence[ProblemSpec],
    algorithms: Sequence[str],
    repetitions: int,
    base_seed: int = 0,
    *,
    constrained: bool = False,
    audit_samples: Optional[int] = None,
    out_path: Optional[str] = None,
    workers: int = 1,
    gp_config: Optional[GPConfig] = None,
    itea_config: Optional[ITEAConfig] = None,
) -> list[RunRecord]:
    """Every (problem, algorithm, repetition) combination, seed = base + rep.

    Records are appended to out_path as they complete, so an interrupted
    batch keeps its finished runs.  Failures become error records.  The
    returned list is sorted by (problem, algorithm, seed).
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    tasks = [
        (spec, algo, base_seed + rep)
        for spec in problem_specs
        for algo in algorithms
        for rep in range(repetitions)
    ]
    records: list[RunRecord] = []
    writer = open(out_path, "a") if out_path else None
    try:
        if workers <= 1:
            for spec, algo, seed in tasks:
                rec = _safe_run(
                    spec, algo, seed, constrained, audit_samples, gp_config, itea_config
                )
                records.append(rec)
                if writer:
                    append_record(writer, rec)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(
                        _safe_run,
                        spec,
                        algo,
                        seed,
                        constrained,
                        audit_samples,
                        gp_config,
                        itea_config,
                    )
                    for spec, algo, seed in tasks
                ]
                for fut in as_completed(futures):
                    rec = fut.result()
                    records.append(rec)
                    if writer:
                        append_record(writer, rec)
    finally:
        if writer:
            writer.close()
    records.sort(key=lambda r: (r.problem, r.algorithm, r.seed))
    return records


# ------------------------------------------------------------- persistence


def append_record(sink, record: RunRecord) -> None:
    """Append one record as a single JSON line; sink is a path or open file."""
    line = json.dumps(record.to_dict(), sort_keys=True)
    if hasattr(sink, "write"):
        sink.write(line + "\n")
        sink.flush()
    else:
        with open(sink, "a") as fh:
            fh.write(line + "\n")


def load_records(path: str) -> list[RunRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(RunRecord.from_dict(json.loads(line)))
    return out


# --------------------------------------------------------------- reporting


def truncate_pct(value: float) -> float:
    """Two decimal places, truncated (not rounded)."""
    return math.floor(value * 100.0) / 100.0


def report_medians(
    records: Iterable[RunRecord],
    keys: Optional[Sequence[tuple[str, str]]] = None,
) -> dict[tuple[str, str], tuple[float, float]]:
    """Median train/test NMSE percent per (problem, algorithm), truncated
    to two decimals.  Requested keys with no records are skipped with a
    warning."""
    cells: dict[tuple[str, str], list[RunRecord]] = defaultdict(list)
    for rec in records:
        cells[(rec.problem, rec.algorithm)].append(rec)
    if keys:
        for key in keys:
            if key not in cells:
                log.warning("no records for %s; cell omitted", key)
    return {
        key: (
            truncate_pct(statistics.median(r.train_nmse_pct for r in rs)),
            truncate_pct(statistics.median(r.test_nmse_pct for r in rs)),
        )
        for key, rs in sorted(cells.items())
    }


def report_violations(
    records: Iterable[RunRecord],
) -> dict[tuple[str, str], float]:
    """Fraction of runs per (problem, algorithm) whose final model violated
    at least one constraint at one audit point.  A run with no model counts
    as violating."""
    totals: dict[tuple[str, str], int] = defaultdict(int)
    bad: dict[tuple[str, str], int] = defaultdict(int)
    for rec in records:
        if rec.audit is None:
            raise ValueError(
                f"record {rec.problem}/{rec.algorithm} seed={rec.seed} has no audit"
            )
        key = (rec.problem, rec.algorithm)
        totals[key] += 1
        if rec.no_solution or not rec.audit["feasible"]:
            bad[key] += 1
    return {key: bad[key] / totals[key] for key in sorted(totals)}


def write_medians_csv(table: dict, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("problem,algorithm,train_nmse_pct,test_nmse_pct\n")
        for (problem, algorithm), (tr, te) in sorted(table.items()):
            fh.write(f"{problem},{algorithm},{tr:.2f},{te:.2f}\n")


def write_violations_csv(freqs: dict, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("problem,algorithm,violation_frequency\n")
        for (problem, algorithm), freq in sorted(freqs.items()):
            fh.write(f"{problem},{algorithm},{freq!r}\n")


def overhead_ratio(
    spec: ProblemSpec,
    algorithm: str = "gp",
    seed: int = 0,
    *,
    gp_config: Optional[GPConfig] = None,
    itea_config: Optional[ITEAConfig] = None,
) -> dict:
    """Wall-time ratio of a constrained run over its unconstrained twin.
    For the IT family the constrained twin is fiit.  Informational."""
    if algorithm == "gp" or algorithm == "gpc":
        pairs = [(algorithm, True), (algorithm, False)]
    elif algorithm == "itea":
        pairs = [("fiit", False), ("itea", False)]
    else:
        raise ValueError(f"no unconstrained twin for {algorithm!r}")
    times = []
    for algo, flag in pairs:
        rec = run_one(
            spec,
            algo,
            seed,
            constrained=flag,
            gp_config=gp_config,
            itea_config=itea_config,
        )
        times.append(rec.wall_time)
    constrained_s, unconstrained_s = times
    return {
        "constrained_s": constrained_s,
        "unconstrained_s": unconstrained_s,
        "ratio": constrained_s / unconstrained_s,
    }
