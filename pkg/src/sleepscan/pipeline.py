"""Fold-level detection pipeline and cross-fold aggregation.

One fold pairs a normal training chunk with a problematic or reference
testing chunk: featurize both, fit the minor-component basis on the
training rows, score everything with k-NN, threshold on the training
95th percentile, and run the four localization methods plus their
combination.  Aggregation pools the 72 fold histograms into 3-sigma
labels per pairing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import detect, embed, featurize, localize
from .config import RunConfig
from .errors import DataError
from .localize import METHOD_NAMES
from .mdtlog import Call, FoldPair, group_calls

ALL_METHODS = METHOD_NAMES + ("combined",)
STAGES = ("raw", "amplified", "normalized_raw", "normalized")


@dataclass
class FoldInput:
    pair: FoldPair
    train_calls: list[Call]
    test_calls: list[Call]
    train_dmap: "DominanceMap"
    test_dmap: "DominanceMap"
    adjacency: dict[int, frozenset[int]]
    cell_ids: list[int]
    test_truth: dict[tuple[int, int], bool] | None = None


@dataclass
class FoldOutput:
    pair: FoldPair
    threshold: float
    selected_components: int
    train_rows: list[tuple[int, int]]  # (ue, offset)
    test_rows: list[tuple[int, int]]
    train_scores: np.ndarray
    test_scores: np.ndarray
    train_anomalous: np.ndarray
    test_anomalous: np.ndarray
    test_affected: np.ndarray  # per test sub-call ground truth
    histograms: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    cell_ids: tuple[int, ...] = ()


def _subcall_affected(sub: featurize.SubCall, truth) -> bool:
    if truth is None:
        return False
    return any(
        truth.get((sub.ue, sub.offset + i), False) for i in range(len(sub.records))
    )


def run_fold(fold: FoldInput, cfg: RunConfig) -> FoldOutput:
    train_subs = featurize.windows_for_calls(fold.train_calls, m=cfg.window_m, n=cfg.window_n)
    test_subs = featurize.windows_for_calls(fold.test_calls, m=cfg.window_m, n=cfg.window_n)
    if not train_subs or not test_subs:
        raise DataError(
            f"fold {fold.pair}: empty sub-call set "
            f"(train {len(train_subs)}, test {len(test_subs)})"
        )
    vocab = featurize.NGramVocabulary.from_subcalls(train_subs, test_subs, n=cfg.ngram_n)
    train_matrix = featurize.build_feature_matrix(train_subs, vocab, n=cfg.ngram_n)
    test_matrix = featurize.build_feature_matrix(test_subs, vocab, n=cfg.ngram_n)

    basis = embed.fit_basis(train_matrix.counts)
    if cfg.minor_components == "auto":
        d = embed.sorte_select(basis.eigenvalues, fallback=min(6, basis.dim))
    else:
        d = int(cfg.minor_components)
    d = min(d, basis.dim)
    train_emb = embed.project_minor(basis, train_matrix.counts, d)
    test_emb = embed.project_minor(basis, test_matrix.counts, d)

    if len(train_subs) <= cfg.knn_k:
        raise DataError(
            f"fold {fold.pair}: {len(train_subs)} training sub-calls cannot "
            f"support k={cfg.knn_k} neighbors"
        )
    train_scores = detect.knn_scores(train_emb, train_emb, k=cfg.knn_k, exclude_self=True)
    test_scores = detect.knn_scores(train_emb, test_emb, k=cfg.knn_k)
    threshold = detect.fit_threshold(train_scores, percentile=cfg.threshold_percentile)
    train_anom = detect.classify(train_scores, threshold)
    test_anom = detect.classify(test_scores, threshold)

    train_ues = localize.distinct_ue_count(train_subs)
    test_ues = localize.distinct_ue_count(test_subs)
    train_anom_subs = [s for s, a in zip(train_subs, train_anom) if a]
    test_anom_subs = [s for s, a in zip(test_subs, test_anom) if a]
    gram_test_subs = test_anom_subs if cfg.gram_scope == "anomalous" else test_subs

    cell_ids = list(fold.cell_ids)
    raw = {
        "subcall": localize.sc_dominance_subcall_deviation(
            cell_ids, train_anom_subs, train_ues, test_anom_subs, test_ues,
            fold.train_dmap, fold.test_dmap,
        ),
        "gram": localize.sc_dominance_2gram_deviation(
            cell_ids, train_subs, train_ues, gram_test_subs, test_ues,
            fold.train_dmap, fold.test_dmap,
        ),
        "symmetry": localize.sc_2gram_symmetry_deviation(
            cell_ids, fold.train_calls, fold.test_calls,
            fold.train_dmap, fold.test_dmap, fold.adjacency,
            mode=cfg.symmetry_mode,
        ),
        "target": localize.sc_target_cell_subcalls(cell_ids, test_anom_subs, test_ues),
    }

    histograms: dict[str, dict[str, np.ndarray]] = {}
    norm_raw_parts = []
    norm_amp_parts = []
    for name in METHOD_NAMES:
        h = raw[name]
        amped = localize.amplify(h, fold.adjacency)
        n_raw = localize.normalize(h)
        n_amp = localize.normalize(amped)
        histograms[name] = {
            "raw": h.scores,
            "amplified": amped.scores,
            "normalized_raw": n_raw.scores,
            "normalized": n_amp.scores,
        }
        norm_raw_parts.append(n_raw)
        norm_amp_parts.append(n_amp)
    weights = list(cfg.weights)
    combined_amp = localize.combine(norm_amp_parts, weights)
    combined_raw = localize.combine(norm_raw_parts, weights)
    histograms["combined"] = {
        "normalized_raw": combined_raw.scores,
        "normalized": combined_amp.scores,
    }

    affected = np.array([_subcall_affected(s, fold.test_truth) for s in test_subs], dtype=bool)
    return FoldOutput(
        pair=fold.pair,
        threshold=threshold.value,
        selected_components=d,
        train_rows=[(s.ue, s.offset) for s in train_subs],
        test_rows=[(s.ue, s.offset) for s in test_subs],
        train_scores=train_scores,
        test_scores=test_scores,
        train_anomalous=train_anom,
        test_anomalous=test_anom,
        test_affected=affected,
        histograms=histograms,
        cell_ids=tuple(cell_ids),
    )


def fold_inputs_from_suite(manifest, roles, cfg: RunConfig, limit: int | None = None):
    """Fold inputs for normal x problematic and normal x reference pairings."""
    from .mdtlog import make_fold_pairs

    adjacency = {int(c): frozenset(v) for c, v in manifest["adjacency"].items()}
    cell_ids = [int(c) for c in manifest["cell_ids"]]
    normal = roles["normal"]
    inputs = []
    for test_role in ("problematic", "reference"):
        if test_role not in roles:
            continue
        test = roles[test_role]
        pairs = make_fold_pairs("normal", normal.chunks, test_role, test.chunks)
        for pair in pairs:
            inputs.append(
                FoldInput(
                    pair=pair,
                    train_calls=group_calls(normal.chunks[pair.train_index]),
                    test_calls=group_calls(test.chunks[pair.test_index]),
                    train_dmap=normal.dominance,
                    test_dmap=test.dominance,
                    adjacency=adjacency,
                    cell_ids=cell_ids,
                    test_truth=test.truth,
                )
            )
    if limit is not None:
        inputs = inputs[:limit]
    return inputs


@dataclass
class MethodAggregate:
    method: str
    pooled_mean: float
    pooled_sigma: float
    mean_scores: dict[str, np.ndarray]         # pairing -> per-cell mean
    mean_stages: dict[str, dict[str, np.ndarray]]  # pairing -> stage -> per-cell mean
    labels: dict[str, localize.CellLabels]     # pairing -> aggregate labels
    run_labels: dict[str, list[localize.CellLabels]]  # pairing -> per-run labels


def aggregate_method(
    method: str,
    cell_ids,
    runs_by_pairing: dict[str, list[dict[str, np.ndarray]]],
    stage: str,
) -> MethodAggregate:
    """Pool one method's fold histograms into labels per pairing.

    The 3-sigma statistics pool every (run, cell) score across both
    pairings; each pairing is then labeled on its per-cell mean, and
    each individual run on its own scores, against the same threshold.
    """
    all_runs = [stages[stage] for runs in runs_by_pairing.values() for stages in runs]
    if not all_runs:
        raise DataError(f"no runs to aggregate for method {method}")
    stats = localize.pooled_stats(all_runs)
    mean_scores = {}
    mean_stages = {}
    labels = {}
    run_labels = {}
    for pairing, runs in runs_by_pairing.items():
        if not runs:
            continue
        scores = [stages[stage] for stages in runs]
        labels[pairing] = localize.label_cells(cell_ids, scores, stats=stats)
        run_labels[pairing] = localize.label_single_runs(cell_ids, scores, stats=stats)
        mean_scores[pairing] = np.vstack(scores).mean(axis=0)
        mean_stages[pairing] = {
            st: np.vstack([stages[st] for stages in runs]).mean(axis=0)
            for st in runs[0]
        }
    return MethodAggregate(
        method=method,
        pooled_mean=stats[0],
        pooled_sigma=stats[1],
        mean_scores=mean_scores,
        mean_stages=mean_stages,
        labels=labels,
        run_labels=run_labels,
    )


def aggregate_folds(fold_outputs, cfg: RunConfig) -> dict[str, MethodAggregate]:
    """Aggregate all fold outputs per method, grouped by test pairing."""
    if not fold_outputs:
        raise DataError("no fold outputs to aggregate")
    cell_ids = fold_outputs[0].cell_ids
    stage = "normalized" if cfg.amplify else "normalized_raw"
    by_method: dict[str, dict[str, list[dict[str, np.ndarray]]]] = {
        m: {} for m in ALL_METHODS
    }
    for out in fold_outputs:
        pairing = out.pair.test_role
        for method in ALL_METHODS:
            by_method[method].setdefault(pairing, []).append(out.histograms[method])
    return {
        m: aggregate_method(m, cell_ids, runs, stage) for m, runs in by_method.items()
    }
