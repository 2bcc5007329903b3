from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence


@dataclass
class ExampleResult:
    example: int
    final_lambda: float
    queries: int
    origin: str = "initial"


@dataclass
class MetricsSummary:
    avg_l2: float
    asr: float
    epsilon: float
    total_queries: int
    query_ratio: float | None
    per_example: list[ExampleResult] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "avg_l2": self.avg_l2,
            "asr": self.asr,
            "epsilon": self.epsilon,
            "total_queries": self.total_queries,
            "query_ratio": self.query_ratio,
            "per_example": [asdict(r) for r in self.per_example],
        }


def compute_metrics(
    final_lambdas: Sequence[float],
    queries: Sequence[int],
    epsilon: float,
    baseline_queries: int | None = None,
    origins: Sequence[str] | None = None,
) -> MetricsSummary:
    """Average distortion, success rate below ``epsilon`` and query totals."""
    if len(final_lambdas) == 0 or len(final_lambdas) != len(queries):
        raise ValueError("need nonempty lambda and query lists of equal length")
    n = len(final_lambdas)
    origins = ["initial"] * n if origins is None else list(origins)
    total = int(sum(queries))
    ratio = total / baseline_queries if baseline_queries else None
    rows = [ExampleResult(i, float(l), int(q), o) for i, (l, q, o) in enumerate(zip(final_lambdas, queries, origins))]
    return MetricsSummary(
        avg_l2=float(sum(final_lambdas)) / n,
        asr=sum(1 for l in final_lambdas if l < epsilon) / n,
        epsilon=float(epsilon),
        total_queries=total,
        query_ratio=ratio,
        per_example=rows,
    )


PER_EXAMPLE_HEADER = ["example", "final_lambda", "queries", "origin"]


def write_per_example_csv(summary: MetricsSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PER_EXAMPLE_HEADER)
        for r in summary.per_example:
            w.writerow([r.example, repr(r.final_lambda), r.queries, r.origin])


def read_per_example_csv(path) -> tuple[list[float], list[int], list[str]]:
    lams, qs, origins = [], [], []
    with open(Path(path), newline="") as fh:
        for row in csv.DictReader(fh):
            lams.append(float(row["final_lambda"]))
            qs.append(int(row["queries"]))
            origins.append(row.get("origin") or "initial")
    return lams, qs, origins


# Published MNIST numbers at eps < 1.0, kept for comparison in reports only.
REFERENCE_MNIST = {
    "Boundary attack": (1.13, 0.41),
    "OPT-based attack": (1.09, 0.46),
    "Sign-OPT attack": (1.07, 0.49),
    "BOSH Sign-OPT": (0.91, 0.67),
}
