"""Segmentation quality metrics and significance testing.

Conventions (fixed, matching common evaluation-library behavior): DSC of
two empty masks is 1.0, of exactly one empty mask 0.0; HD95 with either
mask empty is undefined and excluded from aggregation with a count.
Boundaries use 6-connectivity; percentiles interpolate linearly between
order statistics. Values are rounded to 6 significant digits when records
are built so CSV round-trips reproduce aggregates exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import special
from scipy.spatial import cKDTree

from .errors import GridMismatchError, ValidationError
from .volume import LabelMask

CSV_HEADER = "case_id,structure,phase,dsc,hd95,excluded"


@dataclass(frozen=True)
class MetricsRecord:
    """One case/structure row: DSC in [0,1], HD95 in mm or None."""

    case_id: str
    structure: str
    structure_id: int
    dsc: float
    hd95: Optional[float]
    phase: str = ""

    def __post_init__(self):
        if not (0.0 <= self.dsc <= 1.0):
            raise ValidationError(f"dsc must be in [0, 1], got {self.dsc}")
        if self.hd95 is not None and self.hd95 < 0:
            raise ValidationError(f"hd95 must be >= 0, got {self.hd95}")


@dataclass(frozen=True)
class PairedTestResult:
    n: int
    mean_diff: float
    t_stat: float
    p_value: float
    significant: bool
    degenerate: bool = False

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise ValidationError(f"p_value must be in [0, 1], got {self.p_value}")


def round6g(x: float) -> float:
    """Round to the 6 significant digits used by the CSV schema."""
    return float(f"{x:.6g}")


def _structure_sets(pred: LabelMask, gt: LabelMask, structure: int):
    if pred.dims != gt.dims or not np.allclose(pred.spacing, gt.spacing):
        raise GridMismatchError("prediction and ground truth grids differ")
    return pred.labels == structure, gt.labels == structure


def dsc(pred: LabelMask, gt: LabelMask, structure: int) -> float:
    """Dice similarity 2|P∩G| / (|P|+|G|); both empty -> 1, one empty -> 0."""
    p, g = _structure_sets(pred, gt, structure)
    np_, ng = int(p.sum()), int(g.sum())
    if np_ == 0 and ng == 0:
        return 1.0
    if np_ == 0 or ng == 0:
        return 0.0
    inter = int(np.logical_and(p, g).sum())
    return 2.0 * inter / (np_ + ng)


def _boundary_points(mask: np.ndarray, spacing) -> np.ndarray:
    """Voxels of the mask with at least one 6-neighbor outside it, scaled
    to millimeters. Out-of-array counts as outside."""
    padded = np.pad(mask, 1)
    interior = (
        padded[:-2, 1:-1, 1:-1] & padded[2:, 1:-1, 1:-1]
        & padded[1:-1, :-2, 1:-1] & padded[1:-1, 2:, 1:-1]
        & padded[1:-1, 1:-1, :-2] & padded[1:-1, 1:-1, 2:]
    )
    boundary = mask & ~interior
    coords = np.argwhere(boundary).astype(np.float64)
    sx, sy, sz = spacing
    return coords * np.array([sz, sy, sx])


def hd95(pred: LabelMask, gt: LabelMask, structure: int) -> Optional[float]:
    """Max of the two directed 95th-percentile boundary distances in mm;
    None when either mask is empty."""
    p, g = _structure_sets(pred, gt, structure)
    if not p.any() or not g.any():
        return None
    pts_p = _boundary_points(p, pred.spacing)
    pts_g = _boundary_points(g, gt.spacing)
    d_pg, _ = cKDTree(pts_g).query(pts_p)
    d_gp, _ = cKDTree(pts_p).query(pts_g)
    return float(max(np.percentile(d_pg, 95), np.percentile(d_gp, 95)))


def paired_t_test(x: Sequence[float], y: Sequence[float]) -> PairedTestResult:
    """Two-sided paired Student t-test on x - y (n-1 denominator).

    All-zero differences yield the degenerate result p = 1. Constant
    nonzero differences have zero variance and give p = 0.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("paired test needs two equal-length vectors")
    n = x.size
    if n < 2:
        raise ValidationError("paired test needs at least 2 pairs")
    d = x - y
    mean = float(d.mean())
    if np.all(d == 0.0):
        return PairedTestResult(n, 0.0, 0.0, 1.0, False, degenerate=True)
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        t = math.inf if mean > 0 else -math.inf
        return PairedTestResult(n, mean, t, 0.0, True)
    t = mean / (sd / math.sqrt(n))
    p = float(2.0 * special.stdtr(n - 1, -abs(t)))
    p = min(max(p, 0.0), 1.0)
    return PairedTestResult(n, mean, t, p, p < 0.05)


@dataclass(frozen=True)
class AggregateRow:
    group: str
    n: int
    dsc_mean: float
    dsc_std: float
    hd95_mean: Optional[float]
    hd95_std: Optional[float]
    hd95_excluded: int


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return mean, std


def aggregate(records: Sequence[MetricsRecord], group_by: str = "structure") -> list[AggregateRow]:
    """Mean and n-1 standard deviation per group plus an overall row.

    ``group_by`` is "structure", "phase", or "none". Undefined HD95 rows
    are excluded from the HD95 statistics and counted.
    """
    if not records:
        raise ValidationError("aggregate needs at least one record")
    if group_by not in ("structure", "phase", "none"):
        raise ValidationError(f"unknown group_by: {group_by!r}")

    def key(r: MetricsRecord) -> str:
        if group_by == "structure":
            return r.structure
        if group_by == "phase":
            return r.phase or "(none)"
        return "all"

    groups: dict[str, list[MetricsRecord]] = {}
    for r in records:
        groups.setdefault(key(r), []).append(r)

    def row(name: str, rows: list[MetricsRecord]) -> AggregateRow:
        dscs = np.array([r.dsc for r in rows], dtype=np.float64)
        hds = np.array([r.hd95 for r in rows if r.hd95 is not None], dtype=np.float64)
        excluded = len(rows) - hds.size
        d_mean, d_std = _mean_std(dscs)
        h_mean, h_std = _mean_std(hds) if hds.size else (None, None)
        return AggregateRow(name, len(rows), d_mean, d_std, h_mean, h_std, excluded)

    out = [row(name, rows) for name, rows in sorted(groups.items())]
    if group_by != "none":
        out.append(row("all", list(records)))
    return out


# ---------------------------------------------------------------------------
# CSV schema: case_id,structure,phase,dsc,hd95,excluded
# UTF-8, LF line endings, '.' decimals, 6 significant digits.

def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6g}"


def write_metrics_csv(
    records: Sequence[MetricsRecord],
    path: Union[str, Path],
    labels: Optional[dict[str, int]] = None,
    summary: bool = True,
) -> None:
    """Write metric rows (sorted by case then structure) with the label map
    and per-structure summary as '#' comment lines."""
    lines = []
    if labels:
        lines.append("# labels: " + ",".join(f"{name}={lid}" for name, lid in labels.items()))
    lines.append(CSV_HEADER)
    for r in sorted(records, key=lambda r: (r.case_id, r.structure_id, r.phase)):
        lines.append(
            f"{r.case_id},{r.structure},{r.phase},{_fmt(r.dsc)},{_fmt(r.hd95)},"
            f"{0 if r.hd95 is not None else 1}"
        )
    if summary and records:
        for row in aggregate(records, "structure"):
            lines.append(
                f"# summary,{row.group},n={row.n},dsc_mean={_fmt(row.dsc_mean)},"
                f"dsc_std={_fmt(row.dsc_std)},hd95_mean={_fmt(row.hd95_mean)},"
                f"hd95_std={_fmt(row.hd95_std)},hd95_excluded={row.hd95_excluded}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_metrics_csv(path: Union[str, Path]) -> list[MetricsRecord]:
    """Read metric rows back; '#' lines are ignored."""
    text = Path(path).read_text(encoding="utf-8")
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not rows or rows[0] != CSV_HEADER:
        raise ValidationError(f"{path}: missing metrics CSV header")
    records = []
    for ln in csv.reader(io.StringIO("\n".join(rows[1:]))):
        if not ln:
            continue
        case_id, structure, phase, dsc_s, hd_s, excluded = ln
        records.append(
            MetricsRecord(
                case_id=case_id,
                structure=structure,
                structure_id=0,
                dsc=float(dsc_s),
                hd95=None if excluded == "1" or hd_s == "" else float(hd_s),
                phase=phase,
            )
        )
    return records
