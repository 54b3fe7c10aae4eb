"""Acceptance gates for the whole framework.

Each test prints one PASS/FAIL line (run pytest with -s or -rA to see
them).  The end-to-end criteria run 20 independently seeded dataset
suites of 72 folds each, so this module takes a few minutes.
"""

import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from sleepscan import kernels
from sleepscan.config import RunConfig
from sleepscan.detect import fit_threshold, knn_scores
from sleepscan.embed import fit_basis, sorte_select
from sleepscan.errors import DataError
from sleepscan.evaluate import confusion_metrics, count_confusion, heuristic_distance, roc
from sleepscan.featurize import ngram_counts, sliding_window
from sleepscan.kernels import _knn_py
from sleepscan.localize import SleepingCellHistogram, normalize
from sleepscan.mdtlog import group_calls, make_fold_pairs
from sleepscan.pipeline import FoldInput, aggregate_folds, run_fold
from sleepscan.simgen import FaultConfig, SimConfig, generate_dataset_suite, macro21_layout, simulate

N_REPS = 20
REP_SEEDS = [42] + [1000 + i for i in range(N_REPS - 1)]


def _announce(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


def _truth_lookup(records, affected):
    counters: dict[int, int] = {}
    truth = {}
    for rec, flag in zip(records, affected):
        idx = counters.get(rec.ue, 0)
        counters[rec.ue] = idx + 1
        truth[(rec.ue, idx)] = flag
    return truth


def _run_suite_rep(seed: int) -> dict:
    """One full repetition: dataset suite, 72 folds, aggregation."""
    cfg = RunConfig().with_overrides(master_seed=seed)
    suite = generate_dataset_suite(
        cfg.layout(),
        cfg.sim_config(),
        faulty_cell=cfg.faulty_cell,
        master_seed=cfg.master_seed,
        n_chunks=cfg.n_chunks,
        grid=cfg.grid(),
        sigma_db=cfg.shadowing_sigma_db,
        correlation_m=cfg.shadowing_correlation_m,
    )
    outputs = []
    for test_role in ("problematic", "reference"):
        test = suite.roles[test_role]
        truth = _truth_lookup(test.records, test.affected)
        for pair in make_fold_pairs("normal", suite.roles["normal"].chunks, test_role, test.chunks):
            fold = FoldInput(
                pair=pair,
                train_calls=group_calls(suite.roles["normal"].chunks[pair.train_index]),
                test_calls=group_calls(test.chunks[pair.test_index]),
                train_dmap=suite.roles["normal"].radio.dominance,
                test_dmap=test.radio.dominance,
                adjacency=suite.adjacency,
                cell_ids=suite.cell_ids,
                test_truth=truth,
            )
            outputs.append(run_fold(fold, cfg))
    aggregates = aggregate_folds(outputs, cfg)

    aucs = [
        roc(out.test_scores, out.test_affected).auc
        for out in outputs
        if out.pair.test_role == "problematic"
        and out.test_affected.any()
        and not out.test_affected.all()
    ]
    f_scores = {}
    for method, agg in aggregates.items():
        labels, truths = [], []
        for pairing, run_labels in sorted(agg.run_labels.items()):
            cell_truth = {cfg.faulty_cell} if pairing == "problematic" else set()
            labels.extend(run_labels)
            truths.extend([cell_truth] * len(run_labels))
        f_scores[method] = confusion_metrics(count_confusion(labels, truths))["f_score"]

    combined = aggregates["combined"]
    prob_scores = combined.mean_scores["problematic"]
    argmax_cell = suite.cell_ids[int(np.argmax(prob_scores))]
    return {
        "seed": seed,
        "argmax_is_faulty": argmax_cell == cfg.faulty_cell,
        "faulty_above_threshold": cfg.faulty_cell in combined.labels["problematic"].abnormal_cells(),
        "reference_clean": combined.labels["reference"].abnormal_cells() == [],
        "mean_auc": float(np.mean(aucs)),
        "f_scores": f_scores,
    }


@pytest.fixture(scope="module")
def suite_reps():
    start = time.perf_counter()
    with ProcessPoolExecutor(max_workers=2) as pool:
        reps = list(pool.map(_run_suite_rep, REP_SEEDS))
    print(f"\n[{len(reps)} suite repetitions in {time.perf_counter() - start:.0f}s]")
    return reps


def test_a1_bigram_golden_counts():
    start = time.perf_counter()
    perf = ngram_counts("performance")
    performer = ngram_counts("performer")
    elapsed = time.perf_counter() - start
    expected_perf = {
        ("p", "e"): 1, ("e", "r"): 1, ("r", "f"): 1, ("f", "o"): 1, ("o", "r"): 1,
        ("r", "m"): 1, ("m", "a"): 1, ("a", "n"): 1, ("n", "c"): 1, ("c", "e"): 1,
    }
    ok = (
        perf == expected_perf
        and performer[("e", "r")] == 2
        and performer[("m", "e")] == 1
        and all(performer.get(p, 0) == 0 for p in (("m", "a"), ("a", "n"), ("n", "c"), ("c", "e")))
        and elapsed < 1e-3
    )
    _announce("A1 bigram golden counts", ok, f"exact match, {elapsed * 1e6:.0f}us")
    assert ok


def test_a2_end_to_end_detection(suite_reps):
    argmax_rate = np.mean([r["argmax_is_faulty"] for r in suite_reps])
    above_rate = np.mean([r["faulty_above_threshold"] for r in suite_reps])
    clean_rate = np.mean([r["reference_clean"] for r in suite_reps])
    ok = argmax_rate >= 0.95 and above_rate >= 0.90 and clean_rate >= 0.90
    _announce(
        "A2 end-to-end detection",
        ok,
        f"argmax {argmax_rate:.0%} (>=95%), above 3-sigma {above_rate:.0%} (>=90%), "
        f"reference clean {clean_rate:.0%} (>=90%) over {len(suite_reps)} repetitions",
    )
    assert ok


def test_a3_roc_separability(suite_reps):
    default_rep = next(r for r in suite_reps if r["seed"] == 42)
    mean_auc = default_rep["mean_auc"]
    all_aucs = [r["mean_auc"] for r in suite_reps]
    ok = mean_auc >= 0.95
    _announce(
        "A3 ROC separability",
        ok,
        f"default-suite mean AUC {mean_auc:.4f} (>=0.95); "
        f"across repetitions min {min(all_aucs):.4f}",
    )
    assert ok


def test_a4_method_f_scores(suite_reps):
    default_rep = next(r for r in suite_reps if r["seed"] == 42)
    f = default_rep["f_scores"]
    ok = f["subcall"] >= 0.8 and f["gram"] >= 0.8
    _announce(
        "A4 method F-scores",
        ok,
        "subcall {subcall:.3f}, gram {gram:.3f} (both >=0.8); "
        "symmetry {symmetry:.3f}, target {target:.3f}, combined {combined:.3f}".format(**f),
    )
    assert ok


def test_a5_heuristic_distance_sanity():
    n = 21
    one_hot = np.zeros(n)
    one_hot[0] = 100.0
    uniform = np.full(n, 100.0 / n)
    cells = tuple(range(1, n + 1))
    d_faulty = heuristic_distance(SleepingCellHistogram(cells, one_hot, "normalized"), "faulty", n)
    d_clean = heuristic_distance(SleepingCellHistogram(cells, uniform, "normalized"), "clean", n)
    d_mixed = heuristic_distance(SleepingCellHistogram(cells, uniform, "normalized"), "faulty", n)
    ok = (
        abs(d_faulty) <= 1e-9
        and abs(d_clean) <= 1e-9
        and abs(d_mixed - (100.0 - 100.0 / n)) <= 1e-9
    )
    _announce(
        "A5 heuristic distance sanity",
        ok,
        f"ideal faulty {d_faulty:.2e}, ideal clean {d_clean:.2e}, "
        f"uniform-under-faulty err {abs(d_mixed - (100.0 - 100.0 / n)):.2e}",
    )
    assert ok


def test_a6_oracle_equivalence():
    rng = np.random.default_rng(606)
    train = rng.normal(size=(200, 6))
    query = rng.normal(size=(200, 6))

    def brute(queries, k, exclude_self):
        out = []
        for i, q in enumerate(queries):
            dists = []
            for j, t in enumerate(train):
                if exclude_self and i == j:
                    continue
                sq = 0.0
                for a, b in zip(q, t):
                    d = a - b
                    sq += d * d
                dists.append(np.sqrt(sq))
            dists.sort()
            out.append(sum(dists[:k]))
        return np.array(out)

    knn_ok = True
    for k in (1, 5, 35):
        knn_ok &= np.array_equal(knn_scores(train, query, k=k), brute(query, k, False))
        knn_ok &= np.array_equal(
            knn_scores(train, train, k=k, exclude_self=True), brute(train, k, True)
        )

    X = rng.normal(size=(80, 10)) @ rng.normal(size=(10, 10))
    basis = fit_basis(X)
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / (X.shape[0] - 1)
    rebuilt = basis.eigenvectors @ np.diag(basis.eigenvalues) @ basis.eigenvectors.T
    eig_err = float(np.linalg.norm(cov - rebuilt))
    eig_ok = eig_err < 1e-6

    hits = 0
    for _ in range(100):
        rank = int(rng.integers(2, 8))
        dim = int(rng.integers(rank + 4, 16))
        signal = np.sort(100.0 * (1.0 + rng.uniform(0, 1, rank)))[::-1]
        noise = np.sort(1.0 + 0.05 * rng.uniform(-1, 1, dim - rank))[::-1]
        if sorte_select(np.concatenate([signal, noise])) == rank:
            hits += 1
    sorte_ok = hits >= 95

    ok = knn_ok and eig_ok and sorte_ok
    _announce(
        "A6 oracle equivalence",
        ok,
        f"k-NN exact for k in (1,5,35) [{kernels.backend()} backend], "
        f"covariance rebuilt to {eig_err:.1e} Frobenius, rank recovery {hits}/100",
    )
    assert ok


def test_a7_invariant_suites(tmp_path):
    rng = np.random.default_rng(707)

    # normalized histograms sum to 100
    sums_ok = True
    for _ in range(50):
        h = normalize(SleepingCellHistogram(tuple(range(21)), rng.uniform(0, 5, 21), "raw"))
        sums_ok &= abs(h.scores.sum() - 100.0) < 1e-6

    # every sub-call's bigram total is its length minus one
    window_ok = True
    from sleepscan.mdtlog import Call, EventId, MdtRecord

    for _ in range(30):
        n_events = int(rng.integers(2, 80))
        call = Call(
            ue=0,
            records=tuple(
                MdtRecord(event=EventId.RLF, ue=0, t=i, x=0.0, y=0.0, serving=1)
                for i in range(n_events)
            ),
        )
        for sub in sliding_window(call, m=15, n=10):
            counts = ngram_counts(sub.events())
            window_ok &= sum(counts.values()) == len(sub) - 1

    # test projection must use the training basis (mutation check)
    train = rng.normal(size=(60, 5))
    basis = fit_basis(train)
    eig_before = basis.eigenvalues.copy()
    from sleepscan.embed import project_minor

    test_a = rng.normal(size=(20, 5))
    test_b = test_a + 100.0
    emb_a = project_minor(basis, test_a, 3)
    emb_b = project_minor(basis, test_b, 3)
    leak_ok = np.array_equal(basis.eigenvalues, eig_before) and not np.allclose(emb_a, emb_b)
    minor = basis.eigenvectors[:, ::-1][:, :3]
    leak_ok &= np.array_equal(emb_b, (test_b - basis.mean) @ minor)

    # determinism: identical seeds give byte-identical logs and manifests
    from sleepscan.mdtlog import write_records
    from sleepscan.simgen import build_radio_map, make_shadowing

    layout = macro21_layout()
    grid = layout.default_grid(resolution_m=10.0)
    radio = build_radio_map(layout, make_shadowing(layout, grid, seed=3))
    sim = SimConfig(ues_per_cell=3, duration_steps=800, rng_seed=5)
    fault = FaultConfig(enabled=True, faulty_cell=1)
    out_a = simulate(layout, None, sim, fault, radio=radio)
    out_b = simulate(layout, None, sim, fault, radio=radio)
    pa, pb = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_records(out_a.records, pa)
    write_records(out_b.records, pb)
    sim_ok = pa.read_bytes() == pb.read_bytes()

    from sleepscan.cli import main

    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        '{"ues_per_cell": 3, "duration_steps": 800, "map_resolution_m": 10.0, "knn_k": 5}'
    )
    d1, d2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(d1)]) == 0
    assert main(["simulate", "--config", str(cfg_path), "--out", str(d2)]) == 0
    cli_ok = (d1 / "manifest.json").read_bytes() == (d2 / "manifest.json").read_bytes()
    cli_ok &= (d1 / "normal_chunk0.jsonl").read_bytes() == (d2 / "normal_chunk0.jsonl").read_bytes()

    ok = sums_ok and window_ok and leak_ok and sim_ok and cli_ok
    _announce(
        "A7 invariant suites",
        ok,
        f"normalization {sums_ok}, window row-sum {window_ok}, "
        f"basis non-leakage {leak_ok}, sim determinism {sim_ok}, cli determinism {cli_ok}",
    )
    assert ok
