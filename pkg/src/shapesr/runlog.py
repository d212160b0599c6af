"""Per-generation convergence records shared by the search drivers."""

from __future__ import annotations

import csv
from dataclasses import dataclass


@dataclass(frozen=True)
class ConvergenceRow:
    generation: int
    evaluations: int
    best_nmse: float
    median_nmse: float


def write_convergence_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation", "evaluations", "best_nmse", "median_nmse"])
        for r in rows:
            w.writerow([r.generation, r.evaluations, repr(r.best_nmse), repr(r.median_nmse)])


def read_convergence_csv(path):
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(
                ConvergenceRow(
                    generation=int(row["generation"]),
                    evaluations=int(row["evaluations"]),
                    best_nmse=float(row["best_nmse"]),
                    median_nmse=float(row["median_nmse"]),
                )
            )
    return out
