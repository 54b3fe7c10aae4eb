"""On-disk formats for detection outputs and their evaluation inputs.

Per fold (out_dir/folds/<pairing>_<i>x<j>/):
    fold.json         pairing, chunk indices, threshold, component count
    scores_train.csv  row,ue,offset,score,anomalous
    scores_test.csv   row,ue,offset,score,anomalous,fault_affected
    histograms.csv    method,stage,cell_id,value (long format)

Aggregates (out_dir/aggregate/):
    labels_<method>.json
    histogram_<method>_<pairing>.csv  cell_id,raw,amplified,normalized,label
    heatmap_<method>_<pairing>.svg

All floats are written with repr() so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .mdtlog import FoldPair
from .pipeline import ALL_METHODS, FoldOutput, MethodAggregate


def fold_dir_name(pair: FoldPair) -> str:
    return f"{pair.test_role}_{pair.train_index}x{pair.test_index}"


def write_fold_output(out: FoldOutput, fold_dir) -> None:
    fold_dir = Path(fold_dir)
    fold_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "train_role": out.pair.train_role,
        "train_index": out.pair.train_index,
        "test_role": out.pair.test_role,
        "test_index": out.pair.test_index,
        "threshold": out.threshold,
        "selected_components": out.selected_components,
        "cell_ids": list(out.cell_ids),
    }
    with open(fold_dir / "fold.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

    with open(fold_dir / "scores_train.csv", "w", encoding="utf-8") as fh:
        fh.write("row,ue,offset,score,anomalous\n")
        for i, ((ue, off), score, anom) in enumerate(
            zip(out.train_rows, out.train_scores, out.train_anomalous)
        ):
            fh.write(f"{i},{ue},{off},{float(score)!r},{int(anom)}\n")

    with open(fold_dir / "scores_test.csv", "w", encoding="utf-8") as fh:
        fh.write("row,ue,offset,score,anomalous,fault_affected\n")
        for i, ((ue, off), score, anom, aff) in enumerate(
            zip(out.test_rows, out.test_scores, out.test_anomalous, out.test_affected)
        ):
            fh.write(f"{i},{ue},{off},{float(score)!r},{int(anom)},{int(aff)}\n")

    with open(fold_dir / "histograms.csv", "w", encoding="utf-8") as fh:
        fh.write("method,stage,cell_id,value\n")
        for method in ALL_METHODS:
            stages = out.histograms[method]
            for stage in sorted(stages):
                for cell, value in zip(out.cell_ids, stages[stage]):
                    fh.write(f"{method},{stage},{cell},{float(value)!r}\n")


def read_fold_output(fold_dir) -> FoldOutput:
    fold_dir = Path(fold_dir)
    try:
        with open(fold_dir / "fold.json", encoding="utf-8") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"missing fold.json in {fold_dir}") from None
    pair = FoldPair(
        train_role=meta["train_role"],
        train_index=meta["train_index"],
        test_role=meta["test_role"],
        test_index=meta["test_index"],
    )
    cell_ids = tuple(int(c) for c in meta["cell_ids"])

    def read_scores(name, with_affected):
        rows, scores, anoms, affs = [], [], [], []
        with open(fold_dir / name, encoding="utf-8", newline="") as fh:
            for rec in csv.DictReader(fh):
                rows.append((int(rec["ue"]), int(rec["offset"])))
                scores.append(float(rec["score"]))
                anoms.append(bool(int(rec["anomalous"])))
                if with_affected:
                    affs.append(bool(int(rec["fault_affected"])))
        return rows, np.array(scores), np.array(anoms, dtype=bool), np.array(affs, dtype=bool)

    train_rows, train_scores, train_anom, _ = read_scores("scores_train.csv", False)
    test_rows, test_scores, test_anom, affected = read_scores("scores_test.csv", True)

    histograms: dict[str, dict[str, list]] = {}
    index = {c: i for i, c in enumerate(cell_ids)}
    with open(fold_dir / "histograms.csv", encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            stages = histograms.setdefault(rec["method"], {})
            arr = stages.setdefault(rec["stage"], np.zeros(len(cell_ids)))
            arr[index[int(rec["cell_id"])]] = float(rec["value"])

    return FoldOutput(
        pair=pair,
        threshold=float(meta["threshold"]),
        selected_components=int(meta["selected_components"]),
        train_rows=train_rows,
        test_rows=test_rows,
        train_scores=train_scores,
        test_scores=test_scores,
        train_anomalous=train_anom,
        test_anomalous=test_anom,
        test_affected=affected,
        histograms=histograms,
        cell_ids=cell_ids,
    )


def list_fold_dirs(out_dir) -> list[Path]:
    folds_root = Path(out_dir) / "folds"
    if not folds_root.is_dir():
        raise DataError(f"no folds directory under {out_dir}; run detect first")
    return sorted(p for p in folds_root.iterdir() if p.is_dir())


def write_method_aggregate(
    agg: MethodAggregate, cell_ids, out_dir, layout=None
) -> None:
    """labels JSON, per-pairing mean-histogram CSV, and heat maps."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "method": agg.method,
        "pooled_mean": agg.pooled_mean,
        "pooled_sigma": agg.pooled_sigma,
        "threshold": agg.pooled_mean + 3.0 * agg.pooled_sigma,
        "pairings": {},
    }
    for pairing, labels in agg.labels.items():
        mean_scores = agg.mean_scores[pairing]
        doc["pairings"][pairing] = {
            "mean_scores": {str(c): float(v) for c, v in zip(cell_ids, mean_scores)},
            "abnormal_cells": labels.abnormal_cells(),
            "argmax_cell": int(cell_ids[int(np.argmax(mean_scores))]),
            "runs": len(agg.run_labels[pairing]),
        }
    with open(out_dir / f"labels_{agg.method}.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    for pairing, labels in agg.labels.items():
        stages = agg.mean_stages[pairing]
        raw = stages.get("raw")
        amped = stages.get("amplified")
        norm = stages[
            "normalized" if "normalized" in stages else "normalized_raw"
        ]
        path = out_dir / f"histogram_{agg.method}_{pairing}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("cell_id,raw,amplified,normalized,label\n")
            for i, cell in enumerate(cell_ids):
                raw_v = "" if raw is None else repr(float(raw[i]))
                amp_v = "" if amped is None else repr(float(amped[i]))
                fh.write(
                    f"{cell},{raw_v},{amp_v},{float(norm[i])!r},{int(labels.abnormal[i])}\n"
                )
        if layout is not None:
            from .heatmap import write_heatmap

            write_heatmap(
                layout,
                norm,
                cell_ids,
                out_dir / f"heatmap_{agg.method}_{pairing}.svg",
                title=f"{agg.method} / {pairing}",
            )
