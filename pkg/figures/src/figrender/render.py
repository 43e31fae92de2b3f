"""Figure rendering from the optimizer harness CSV artifacts.

Couples only to the documented CSV schemas:

* ``probabilities.csv``: iteration, epsilon, p_hat
* ``kl_profile.csv``: k, t, kl[, floor_estimate]

Data extraction is deterministic; re-rendering identical inputs draws
identical figures (PNG bytes may differ only in encoder metadata).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

KINDS = ("probability-curves", "sampler-comparison", "kl-profile",
         "dimension-comparison")

_COMPARISON_TITLES = {
    "probability-curves": "Probability of missing the tolerance",
    "sampler-comparison": "Sampler comparison",
    "dimension-comparison": "Dimension comparison",
}


class SchemaError(ValueError):
    """An input CSV does not carry the columns the figure needs."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: input CSVs, kind, output path, optional annotations.

    ``epsilons`` limits probability figures to a subset of the thresholds
    present in the data: None means all, an explicit empty list is an error.
    ``labels``, when given, must match the number of inputs (defaults to the
    file stems).
    """

    kind: str
    inputs: tuple[Path, ...]
    output: Path
    epsilons: tuple[float, ...] | None = None
    labels: tuple[str, ...] | None = None
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r} (one of {KINDS})")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if self.epsilons is not None and len(self.epsilons) == 0:
            raise ValueError("epsilon list must not be empty")
        if self.labels is not None and len(self.labels) != len(self.inputs):
            raise ValueError(f"{len(self.labels)} labels for {len(self.inputs)} inputs")


def _read_csv(path: Path, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise SchemaError(f"{path}: missing required column {column!r}")
        return list(reader)


def _probability_series(path: Path) -> dict[float, tuple[list[int], list[float]]]:
    rows = _read_csv(path, ("iteration", "epsilon", "p_hat"))
    series: dict[float, tuple[list[int], list[float]]] = {}
    for row in rows:
        eps = float(row["epsilon"])
        xs, ys = series.setdefault(eps, ([], []))
        xs.append(int(row["iteration"]))
        ys.append(float(row["p_hat"]))
    return series


def _render_probability(spec: FigureSpec, ax) -> None:
    labels = spec.labels or tuple(p.stem for p in spec.inputs)
    for path, label in zip(spec.inputs, labels):
        series = _probability_series(path)
        if not series:
            raise SchemaError(f"{path}: no data rows")
        if spec.epsilons is None:
            chosen = sorted(series)
        else:
            missing = [e for e in spec.epsilons if e not in series]
            if missing:
                raise ValueError(f"{path}: epsilon annotations {missing} "
                                 f"not present in the data ({sorted(series)})")
            chosen = list(spec.epsilons)
        for eps in chosen:
            xs, ys = series[eps]
            name = f"{label}, eps={eps:g}" if len(spec.inputs) > 1 else f"eps={eps:g}"
            ax.plot(xs, ys, label=name)
    ax.set_xlabel("iteration")
    ax.set_ylabel("P(best - U* >= eps)")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best", fontsize="small")


def _render_kl_profile(spec: FigureSpec, ax) -> None:
    for path in spec.inputs:
        rows = _read_csv(path, ("k", "kl"))
        if not rows:
            raise SchemaError(f"{path}: no data rows")
        ks = [int(r["k"]) for r in rows]
        kl = [float(r["kl"]) for r in rows]
        ax.plot(ks, kl, label=path.stem)
        if "floor_estimate" in rows[0] and rows[0]["floor_estimate"]:
            floor = float(rows[0]["floor_estimate"])
            if floor > 0:
                ax.axhline(floor, linestyle="--", linewidth=0.8, color="gray")
    ax.set_xlabel("iteration")
    ax.set_ylabel("KL divergence to the target")
    ax.set_yscale("log")
    if len(spec.inputs) > 1:
        ax.legend(loc="best", fontsize="small")


def render(spec: FigureSpec) -> Path:
    """Draw one figure and write it to ``spec.output``."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        if spec.kind == "kl-profile":
            _render_kl_profile(spec, ax)
            default_title = "KL decay profile"
        else:
            _render_probability(spec, ax)
            default_title = _COMPARISON_TITLES[spec.kind]
        ax.set_title(spec.title or default_title)
        fig.tight_layout()
        spec.output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.output, dpi=130)
    finally:
        plt.close(fig)
    return spec.output
