"""Rank-based comparison of classifiers across datasets.

Average ranks, the Friedman chi-square statistic and its F refinement, and the
Nemenyi critical difference. The studentized-range constant ``q_alpha`` is
supplied by the caller (2.850 for six models at alpha = 0.05).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.stats

from .errors import IngestError, StatsError

DEFAULT_Q_ALPHA = 2.850

# Critical differences quoted in published comparisons that used l=6, K=27 and
# q_alpha=2.850; the closed form gives 1.4511 for those inputs.
_QUOTED_CD = {(6, 27, 2.850): 1.4788}


@dataclass(frozen=True)
class AccuracyTable:
    """Datasets x models accuracy matrix; ``percent`` marks 0-100 scaling."""

    values: np.ndarray
    model_names: tuple
    dataset_names: tuple
    percent: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise StatsError("accuracy table must be 2-D")
        if values.shape != (len(self.dataset_names), len(self.model_names)):
            raise StatsError("table shape does not match its row and column names")
        top = 100.0 if self.percent else 1.0
        finite = values[np.isfinite(values)]
        if finite.size and (finite.min() < 0 or finite.max() > top):
            raise StatsError(f"accuracies must lie in [0, {top:g}]")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "model_names", tuple(self.model_names))
        object.__setattr__(self, "dataset_names", tuple(self.dataset_names))

    @property
    def fractions(self) -> np.ndarray:
        return self.values / 100.0 if self.percent else self.values

    @classmethod
    def from_csv(cls, path, percent: bool | None = None) -> "AccuracyTable":
        """Header row of model names; first column dataset names; ``NA`` for absent cells.

        With ``percent=None`` the scale is inferred: any value above 1 means percent.
        """
        path = Path(path)
        if not path.is_file():
            raise IngestError(f"{path}: no such file")
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
        if len(rows) < 2:
            raise IngestError(f"{path}: need a header row and at least one data row")
        header = [c.strip() for c in rows[0]]
        models = header[1:]
        names, values = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != len(header):
                raise IngestError(f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}")
            names.append(row[0].strip())
            cells = []
            for cell in row[1:]:
                cell = cell.strip()
                if cell.upper() in {"NA", "NAN", ""}:
                    cells.append(math.nan)
                    continue
                try:
                    cells.append(float(cell))
                except ValueError:
                    raise IngestError(f"{path}: row {lineno}: non-numeric cell {cell!r}") from None
            values.append(cells)
        arr = np.array(values, dtype=float).reshape(len(names), len(models))
        if percent is None:
            finite = arr[np.isfinite(arr)]
            percent = bool(finite.size and finite.max() > 1.0)
        try:
            return cls(arr, tuple(models), tuple(names), percent)
        except StatsError as exc:
            raise IngestError(f"{path}: {exc}") from exc

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dataset", *self.model_names])
            for name, row in zip(self.dataset_names, self.values):
                w.writerow([name, *("NA" if not np.isfinite(v) else repr(float(v)) for v in row)])


@dataclass(frozen=True)
class RankSummary:
    rank_matrix: np.ndarray
    avg_ranks: np.ndarray
    K: int
    l: int


def rank_models(table: AccuracyTable) -> RankSummary:
    """Rank 1 is the most accurate model per dataset; ties share their mean position."""
    values = table.values
    K, l = values.shape
    if K < 2 or l < 2:
        raise StatsError(f"need at least 2 datasets and 2 models, got K={K}, l={l}")
    if not np.all(np.isfinite(values)):
        raise StatsError("accuracy table has absent cells")
    ranks = np.vstack([scipy.stats.rankdata(-row, method="average") for row in values])
    return RankSummary(ranks, ranks.mean(axis=0), K, l)


def friedman_chi2(avg_ranks, K: int) -> float:
    R = np.asarray(avg_ranks, dtype=float)
    l = R.size
    if l < 2 or K < 2:
        raise StatsError("Friedman test needs l >= 2 models and K >= 2 datasets")
    return float(12.0 * K / (l * (l + 1)) * (np.sum(R * R) - l * (l + 1) ** 2 / 4.0))


def friedman_F(chi2: float, K: int, l: int) -> float:
    denom = K * (l - 1) - chi2
    if denom <= 0:
        raise StatsError("F statistic undefined: chi-square is at its maximum K(l-1)")
    return float((K - 1) * chi2 / denom)


def friedman_dof(K: int, l: int) -> tuple[int, int]:
    return l - 1, (K - 1) * (l - 1)


def nemenyi_cd(q_alpha: float, l: int, K: int) -> float:
    return float(q_alpha * math.sqrt(l * (l + 1) / (6.0 * K)))


@dataclass
class ComparisonReport:
    model_names: tuple
    ranks: RankSummary
    chi2: float
    chi2_pvalue: float
    F: float
    F_pvalue: float
    dof: tuple
    q_alpha: float
    cd: float
    rank_gaps: np.ndarray
    significant: np.ndarray
    notes: list = field(default_factory=list)
    rank_decimals: int | None = None

    def gaps_against(self, model: str) -> dict:
        """Average-rank differences ``R_other - R_model`` for every other model."""
        j = self.model_names.index(model)
        return {name: float(self.rank_gaps[i, j])
                for i, name in enumerate(self.model_names) if i != j}


def compare(table: AccuracyTable, q_alpha: float = DEFAULT_Q_ALPHA,
            rank_decimals: int | None = None) -> ComparisonReport:
    """Ranks, Friedman statistics, Nemenyi C.D. and pairwise rank gaps.

    With ``rank_decimals`` set, average ranks are rounded to that many decimals
    before the statistics and gaps are computed, as is done when the test is
    run by hand from a printed rank row.
    """
    ranks = rank_models(table)
    K, l = ranks.K, ranks.l
    R = ranks.avg_ranks if rank_decimals is None else np.round(ranks.avg_ranks, rank_decimals)
    chi2 = friedman_chi2(R, K)
    df1, df2 = friedman_dof(K, l)
    try:
        F = friedman_F(chi2, K, l)
        F_p = float(scipy.stats.f.sf(F, df1, df2))
    except StatsError:
        F, F_p = math.inf, 0.0
    cd = nemenyi_cd(q_alpha, l, K)
    gaps = R[:, None] - R[None, :]
    sig = np.abs(gaps) > cd
    notes = []
    quoted = _QUOTED_CD.get((l, K, round(q_alpha, 6)))
    if quoted is not None:
        notes.append(
            f"C.D. {cd:.4f} from q*sqrt(l(l+1)/(6K)); published comparisons with "
            f"l={l}, K={K}, q={q_alpha:.3f} quote {quoted:.4f} for the same inputs"
        )
    return ComparisonReport(table.model_names, ranks, chi2,
                            float(scipy.stats.chi2.sf(chi2, df1)), F, F_p, (df1, df2),
                            float(q_alpha), cd, gaps, sig, notes, rank_decimals)


def format_comparison(rep: ComparisonReport) -> str:
    names = rep.model_names
    width = max(8, *(len(n) for n in names))
    lines = ["Average ranks:"]
    for name, r in zip(names, rep.ranks.avg_ranks):
        lines.append(f"  {name:<{width}}  {r:.4f}")
    if rep.rank_decimals is not None:
        lines.append(f"(statistics use average ranks rounded to {rep.rank_decimals} decimals)")
    lines.append(f"Friedman chi2_F = {rep.chi2:.4f}  (d.o.f. {rep.dof[0]}, p = {rep.chi2_pvalue:.3g})")
    lines.append(f"Friedman F_F    = {rep.F:.4f}  (d.o.f. {rep.dof[0]}, {rep.dof[1]}, p = {rep.F_pvalue:.3g})")
    lines.append(f"Nemenyi C.D.    = {rep.cd:.4f}  (q_alpha = {rep.q_alpha:.3f}, K = {rep.ranks.K}, l = {rep.ranks.l})")
    lines.append("Significant pairwise rank differences (|R_i - R_j| > C.D.):")
    lines.append(" " * (width + 2) + "  ".join(f"{n[:width]:>{width}}" for n in names))
    for i, name in enumerate(names):
        cells = []
        for j in range(len(names)):
            if i == j:
                cells.append(f"{'-':>{width}}")
            else:
                mark = "*" if rep.significant[i, j] else " "
                cells.append(f"{rep.rank_gaps[i, j]:>{width - 1}.2f}{mark}")
        lines.append(f"{name:<{width}}  " + "  ".join(cells))
    for note in rep.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)
