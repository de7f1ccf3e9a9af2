"""Command-line surface: corrupt / evaluate / compare / trend / analyze.

corrupt   generate the corrupted test tree (transform x severity) + manifest
evaluate  per-case per-structure DSC / HD95 CSV for a prediction dir
compare   paired significance report between two metrics CSVs
trend     per-transform severity-trend CSVs (plot-ready)
analyze   feature-space (PCA + separability score) or weight-norm reports

The master seed comes from --seed, falling back to the MRK_SEED environment
variable, then 0. Every generated file is bit-reproducible from the run
manifest alone.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, analysis, metrics
from .corruptions import (
    GEOMETRIC_KINDS,
    SeverityConfig,
    TransformKind,
    apply_corruption_with_mask,
)
from .errors import MrkError, ValidationError
from .nifti import read_nifti, write_nifti
from .rng import RngStream

SEED_ENV = "MRK_SEED"
TREND_PREFIX = "pgf_format_corruption_trends_"


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _case_id(path: Path) -> str:
    name = path.name
    for suffix in (".nii.gz", ".nii"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def _phase_of(case_id: str) -> str:
    tail = case_id.rsplit("_", 1)[-1].upper()
    return tail if tail in ("ED", "ES") else ""


def _scan_cases(directory: Path) -> list[Path]:
    files = [
        p
        for p in sorted(directory.iterdir())
        if p.name.endswith((".nii", ".nii.gz")) and "_gt." not in p.name
    ]
    return files


def _gt_for(path: Path) -> Optional[Path]:
    cid = _case_id(path)
    for suffix in (".nii.gz", ".nii"):
        cand = path.parent / f"{cid}_gt{suffix}"
        if cand.exists():
            return cand
    return None


def _parse_transforms(arg: str) -> list[TransformKind]:
    if arg == "all":
        return list(TransformKind)
    return [TransformKind.parse(tok.strip()) for tok in arg.split(",") if tok.strip()]


def _parse_severities(arg: str) -> list[int]:
    if arg == "all":
        return [1, 2, 3, 4, 5]
    sevs = [int(tok) for tok in arg.split(",") if tok.strip()]
    for s in sevs:
        if not 1 <= s <= 5:
            raise ValidationError(f"severity out of range: {s}")
    return sevs


def _parse_labels(arg: str) -> dict[str, int]:
    labels = {}
    for tok in arg.split(","):
        tok = tok.strip()
        if not tok:
            continue
        name, _, lid = tok.partition("=")
        if not lid:
            raise ValidationError(f"labels must be name=id pairs, got {tok!r}")
        labels[name.strip()] = int(lid)
    if not labels:
        raise ValidationError("at least one structure label is required")
    return labels


# ---------------------------------------------------------------------------
# corrupt

@dataclass
class RunManifest:
    """Everything needed to bit-reproduce a corruption run: the seed, the
    full severity table, the tool version, and each file's stream path."""

    tool: str
    version: str
    master_seed: int
    severity_config_sha256: str
    severity_config: dict
    created_utc: str
    records: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")


def _process_case(
    in_path: str,
    gt_path: Optional[str],
    out_root: str,
    kinds: list[str],
    severities: list[int],
    seed: int,
    cfg_params: dict,
) -> tuple[list[dict], list[dict]]:
    """Corrupt one subject across all (transform, severity) cells."""
    cfg = SeverityConfig(cfg_params)
    in_path_p = Path(in_path)
    cid = _case_id(in_path_p)
    records: list[dict] = []
    errors: list[dict] = []
    try:
        volume, _ = read_nifti(in_path_p)
        mask = read_nifti(gt_path, read_labels=True)[1] if gt_path else None
    except MrkError as exc:
        return [], [{"input": str(in_path), "error": str(exc)}]
    root = RngStream(seed)
    for kind_name in kinds:
        kind = TransformKind.parse(kind_name)
        for sev in severities:
            rng = root.child(cid, kind.value, sev)
            try:
                geo_mask = mask if kind in GEOMETRIC_KINDS else None
                out_vol, out_mask = apply_corruption_with_mask(volume, geo_mask, kind, sev, cfg, rng)
            except MrkError as exc:
                errors.append(
                    {"input": str(in_path), "transform": kind.value, "severity": sev, "error": str(exc)}
                )
                continue
            cell = Path(out_root) / kind.value / str(sev)
            cell.mkdir(parents=True, exist_ok=True)
            out_path = cell / in_path_p.name
            write_nifti(out_vol, out_path)
            record = {
                "case_id": cid,
                "transform": kind.value,
                "severity": sev,
                "input": str(in_path),
                "output": str(out_path),
                "rng_path": [cid, kind.value, sev],
            }
            if out_mask is not None:
                gt_out = cell / Path(gt_path).name
                write_nifti(out_mask, gt_out)
                record["gt_output"] = str(gt_out)
            records.append(record)
    return records, errors


def cmd_corrupt(args) -> int:
    in_dir, out_dir = Path(args.in_dir), Path(args.out_dir)
    if not in_dir.is_dir():
        print(f"error: input directory not found: {in_dir}", file=sys.stderr)
        return 1
    cfg = SeverityConfig.from_json(args.config) if args.config else SeverityConfig.default()
    kinds = [k.value for k in _parse_transforms(args.transforms)]
    severities = _parse_severities(args.severities)
    cases = _scan_cases(in_dir)
    if not cases:
        print(f"error: no NIfTI volumes in {in_dir}", file=sys.stderr)
        return 1
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = RunManifest(
        tool="mrk",
        version=__version__,
        master_seed=args.seed,
        severity_config_sha256=cfg.sha256(),
        severity_config={k: list(v) for k, v in cfg.params.items()},
        created_utc=datetime.now(timezone.utc).isoformat(),
    )
    jobs = []
    for case in cases:
        gt = _gt_for(case)
        jobs.append(
            (str(case), str(gt) if gt else None, str(out_dir), kinds, severities, args.seed, dict(cfg.params))
        )
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_process_case, *zip(*jobs)))
    else:
        results = [_process_case(*job) for job in jobs]
    for records, errors in results:
        manifest.records.extend(records)
        manifest.errors.extend(errors)
    manifest.write(out_dir / "manifest.json")
    for err in manifest.errors:
        print(f"error: {err}", file=sys.stderr)
    print(
        f"corrupt: {len(manifest.records)} volumes written "
        f"({len(cases)} cases x {len(kinds)} transforms x {len(severities)} severities), "
        f"{len(manifest.errors)} errors -> {out_dir}"
    )
    return 1 if manifest.errors else 0


# ---------------------------------------------------------------------------
# evaluate

def cmd_evaluate(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    labels = _parse_labels(args.labels)
    records: list[metrics.MetricsRecord] = []
    errors: list[str] = []
    cases = _scan_cases(pred_dir)
    if not cases:
        print(f"error: no NIfTI volumes in {pred_dir}", file=sys.stderr)
        return 1
    for pred_path in cases:
        cid = _case_id(pred_path)
        gt_path = None
        for cand in (f"{cid}.nii.gz", f"{cid}.nii", f"{cid}_gt.nii.gz", f"{cid}_gt.nii"):
            if (gt_dir / cand).exists():
                gt_path = gt_dir / cand
                break
        if gt_path is None:
            errors.append(f"{cid}: no ground-truth counterpart in {gt_dir}")
            continue
        try:
            pred_mask = read_nifti(pred_path, read_labels=True)[1]
            gt_mask = read_nifti(gt_path, read_labels=True)[1]
            phase = _phase_of(cid)
            for name, lid in labels.items():
                d = metrics.round6g(metrics.dsc(pred_mask, gt_mask, lid))
                h = metrics.hd95(pred_mask, gt_mask, lid)
                records.append(
                    metrics.MetricsRecord(
                        case_id=cid,
                        structure=name,
                        structure_id=lid,
                        dsc=d,
                        hd95=None if h is None else metrics.round6g(h),
                        phase=phase,
                    )
                )
        except MrkError as exc:
            errors.append(f"{cid}: {exc}")
    for err in errors:
        print(f"error: {err}", file=sys.stderr)
    if not records:
        print("error: no cases evaluated", file=sys.stderr)
        return 1
    out = Path(args.out) if args.out else None
    if out:
        out.parent.mkdir(parents=True, exist_ok=True)
        metrics.write_metrics_csv(records, out, labels=labels)
    for row in metrics.aggregate(records, "structure"):
        hd_part = (
            f"hd95 {row.hd95_mean:.6g} +/- {row.hd95_std:.6g}"
            if row.hd95_mean is not None
            else "hd95 undefined"
        )
        print(
            f"evaluate[{row.group}]: n={row.n} dsc {row.dsc_mean:.6g} +/- {row.dsc_std:.6g}, "
            f"{hd_part} (excluded {row.hd95_excluded})"
        )
    return 1 if errors else 0


# ---------------------------------------------------------------------------
# compare

def _records_by_key(rows: list[metrics.MetricsRecord]) -> dict:
    return {(r.case_id, r.structure, r.phase): r for r in rows}


def cmd_compare(args) -> int:
    rows_a = metrics.read_metrics_csv(args.a)
    rows_b = metrics.read_metrics_csv(args.b)
    a_map, b_map = _records_by_key(rows_a), _records_by_key(rows_b)
    if set(a_map) != set(b_map):
        only_a = set(a_map) - set(b_map)
        only_b = set(b_map) - set(a_map)
        print(
            f"error: row sets differ (only in a: {sorted(only_a)[:5]}, only in b: {sorted(only_b)[:5]})",
            file=sys.stderr,
        )
        return 1
    keys = sorted(a_map)
    structures = sorted({k[1] for k in keys})
    lines = ["metric,group,n,mean_a,mean_b,t,p,direction"]

    def one(metric: str, group: str, selected: list) -> None:
        if metric == "dsc":
            pairs = [(a_map[k].dsc, b_map[k].dsc) for k in selected]
            higher_is_better = True
        else:
            pairs = [
                (a_map[k].hd95, b_map[k].hd95)
                for k in selected
                if a_map[k].hd95 is not None and b_map[k].hd95 is not None
            ]
            higher_is_better = False
        if len(pairs) < 2:
            lines.append(f"{metric},{group},{len(pairs)},,,,,insufficient")
            return
        av = np.array([p[0] for p in pairs])
        bv = np.array([p[1] for p in pairs])
        res = metrics.paired_t_test(bv, av)
        if res.degenerate or not res.significant:
            direction = "ns"
        else:
            better = res.mean_diff > 0 if higher_is_better else res.mean_diff < 0
            direction = "improved" if better else "degraded"
        lines.append(
            f"{metric},{group},{res.n},{av.mean():.6g},{bv.mean():.6g},"
            f"{res.t_stat:.6g},{res.p_value:.6g},{direction}"
        )

    for metric in ("dsc", "hd95"):
        for structure in structures:
            one(metric, structure, [k for k in keys if k[1] == structure])
        one(metric, "all", keys)
    report = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(report, encoding="utf-8")
    print(report, end="")
    return 0


# ---------------------------------------------------------------------------
# trend

def cmd_trend(args) -> int:
    root = Path(args.root)
    out_dir = Path(args.out) if args.out else root
    out_dir.mkdir(parents=True, exist_ok=True)
    models = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not models:
        print(f"error: no model subdirectories in {root}", file=sys.stderr)
        return 1
    transforms: list[str] = []
    for kind in TransformKind:
        if any((root / m / kind.value).is_dir() for m in models):
            transforms.append(kind.value)
    if not transforms:
        print(f"error: no transform subtrees under {root}", file=sys.stderr)
        return 1

    def mean_dsc(csv_path: Path) -> Optional[float]:
        if not csv_path.exists():
            return None
        rows = metrics.read_metrics_csv(csv_path)
        if not rows:
            return None
        return float(np.mean([r.dsc for r in rows]))

    warnings_count = 0
    for transform in transforms:
        lines = ["Severity," + ",".join(models)]
        for sev in range(0, 6):
            cells = []
            for model in models:
                path = (
                    root / model / "original.csv"
                    if sev == 0
                    else root / model / transform / f"{sev}.csv"
                )
                value = mean_dsc(path)
                if value is None:
                    warnings_count += 1
                    print(f"warning: missing metrics for {model}/{transform}/severity {sev}", file=sys.stderr)
                    cells.append("")
                else:
                    cells.append(f"{value:.6g}")
            lines.append(f"{sev}," + ",".join(cells))
        out_path = out_dir / f"{TREND_PREFIX}{transform}.csv"
        out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"trend: {len(transforms)} transform CSVs -> {out_dir} (warnings: {warnings_count})")
    return 0


# ---------------------------------------------------------------------------
# analyze

def cmd_analyze(args) -> int:
    dump = analysis.load_dump(args.dump)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.mode == "norms":
        rows = analysis.weight_norms(dump)
        out_path = out_dir / "norms.csv"
        out_path.write_text(
            "depth,norm\n" + "\n".join(f"{d},{metrics.round6g(n)}" for d, n in rows) + "\n",
            encoding="utf-8",
        )
        print(f"analyze: {len(rows)} depth rows -> {out_path}")
        return 0

    fs = analysis.load_feature_set(dump)
    rng = RngStream(args.seed).child("analyze", "sample")
    g = rng.generator()
    keep: list[np.ndarray] = []
    for c in range(fs.num_classes):
        idx = np.flatnonzero(fs.labels == c)
        if idx.size > args.per_class:
            idx = np.sort(g.choice(idx, size=args.per_class, replace=False))
        keep.append(idx)
    sel = np.concatenate(keep)
    sampled = analysis.FeatureSet(fs.features[sel], fs.labels[sel], fs.weights, fs.biases)

    coords, ratios = analysis.pca_project(sampled, k=2)
    pca_path = out_dir / "pca_coordinates.csv"
    with open(pca_path, "w", encoding="utf-8") as f:
        f.write("pc1,pc2,label\n")
        for row, label in zip(coords, sampled.labels):
            f.write(f"{row[0]:.6g},{row[1]:.6g},{label}\n")

    margins = analysis.gradient_normalized_margins(sampled)
    kv = analysis.k_variance(sampled, k=args.k, repeats=args.repeats, rng=RngStream(args.seed).child("analyze", "kvariance"))
    score = float(np.nanmedian(margins)) / kv if kv > 0 else float("inf")
    report = {
        "kvgm": score,
        "k_variance": kv,
        "median_margin": float(np.nanmedian(margins)),
        "explained_variance_ratios": [float(r) for r in ratios],
        "parameters": {
            "k": args.k,
            "repeats": args.repeats,
            "per_class": args.per_class,
            "seed": args.seed,
        },
        "rows_used": int(sel.size),
    }
    (out_dir / "analysis.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"analyze: kvgm={score:.6g} k_variance={kv:.6g} -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrk", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mrk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("corrupt", help="generate corrupted test volumes")
    c.add_argument("--in", dest="in_dir", required=True)
    c.add_argument("--out", dest="out_dir", required=True)
    c.add_argument("--transforms", default="all")
    c.add_argument("--severities", default="all")
    c.add_argument("--seed", type=int, default=_default_seed())
    c.add_argument("--config", default=None, help="severity config JSON")
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_corrupt)

    e = sub.add_parser("evaluate", help="DSC/HD95 metrics CSV")
    e.add_argument("--pred", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--labels", required=True, help="name=id[,name=id...]")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="paired significance report")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    t = sub.add_parser("trend", help="per-transform severity trends")
    t.add_argument("--root", required=True)
    t.add_argument("--out", default=None)
    t.set_defaults(func=cmd_trend)

    a = sub.add_parser("analyze", help="feature-space or weight-norm report")
    a.add_argument("--mode", choices=("features", "norms"), required=True)
    a.add_argument("--dump", required=True, help="dump manifest JSON")
    a.add_argument("--out", default=".")
    a.add_argument("--k", type=int, default=32)
    a.add_argument("--repeats", type=int, default=10)
    a.add_argument("--per-class", dest="per_class", type=int, default=2000)
    a.add_argument("--seed", type=int, default=_default_seed())
    a.set_defaults(func=cmd_analyze)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MrkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
