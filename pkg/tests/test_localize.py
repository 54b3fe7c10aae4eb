import numpy as np
import pytest

from sleepscan.errors import DataError
from sleepscan.featurize import sliding_window
from sleepscan.localize import (
    SleepingCellHistogram,
    amplify,
    combine,
    label_cells,
    label_single_runs,
    normalize,
    pooled_stats,
    sc_2gram_symmetry_deviation,
    sc_dominance_2gram_deviation,
    sc_dominance_subcall_deviation,
    sc_target_cell_subcalls,
)
from sleepscan.mdtlog import Call, EventId, MdtRecord, strip_locations
from sleepscan.simgen.dominance import DominanceMap
from sleepscan.simgen.layout import GridSpec


def uniform_map(cell_id=1, n=4):
    spec = GridSpec(origin_x=0.0, origin_y=0.0, resolution_m=10.0, nx=n, ny=n)
    return DominanceMap(grid_spec=spec, grid=np.full((n, n), cell_id, dtype=np.int64))


def split_map(left=1, right=2, n=4):
    spec = GridSpec(origin_x=0.0, origin_y=0.0, resolution_m=10.0, nx=n, ny=n)
    grid = np.full((n, n), left, dtype=np.int64)
    grid[:, n // 2 :] = right
    return DominanceMap(grid_spec=spec, grid=grid)


def make_subcall(events, ue=0, xs=None, targets=None):
    xs = xs if xs is not None else [5.0] * len(events)
    targets = targets if targets is not None else [None] * len(events)
    recs = tuple(
        MdtRecord(event=e, ue=ue, t=i, x=float(x), y=5.0, serving=1,
                  target=tg if tg is not None else (2 if e in (EventId.A3_RSRP, EventId.HO_COMMAND,
                                                               EventId.HO_COMPLETE, EventId.RLF_REESTAB) else None))
        for i, (e, x, tg) in enumerate(zip(events, xs, targets))
    )
    call = Call(ue=ue, records=recs)
    return sliding_window(call, m=max(len(events), 2), n=max(len(events), 2))[0]


CELLS = [1, 2, 3]


def test_subcall_deviation_empty_and_confined():
    dmap = uniform_map(cell_id=1)
    h = sc_dominance_subcall_deviation(CELLS, [], 5, [], 7, dmap, dmap)
    assert np.all(h.scores == 0.0)

    sub = make_subcall([EventId.RLF, EventId.RLF_REESTAB], ue=3)
    h = sc_dominance_subcall_deviation(CELLS, [], 5, [sub], 1, dmap, dmap)
    assert h.score_of(1) == pytest.approx(1.0)
    assert h.score_of(2) == 0.0 and h.score_of(3) == 0.0
    # training deviation is clipped at zero
    h = sc_dominance_subcall_deviation(CELLS, [sub], 1, [], 1, dmap, dmap)
    assert np.all(h.scores == 0.0)


def test_gram_deviation_zero_when_identical():
    dmap = uniform_map(cell_id=1)
    subs = [make_subcall([EventId.A3_RSRP, EventId.HO_COMMAND], ue=u) for u in range(3)]
    h = sc_dominance_2gram_deviation(CELLS, subs, 3, subs, 3, dmap, dmap)
    assert np.allclose(h.scores, 0.0)


def test_gram_deviation_single_new_pair_inside_one_cell():
    dmap = uniform_map(cell_id=1)
    extra = make_subcall([EventId.HO_COMMAND, EventId.A2_RSRP_ENTER], ue=9)
    h = sc_dominance_2gram_deviation(CELLS, [], 1, [extra], 1, dmap, dmap)
    assert h.score_of(1) == pytest.approx(1.0)  # 0.5 per endpoint
    assert h.score_of(2) == 0.0 and h.score_of(3) == 0.0


def test_gram_deviation_splits_border_pairs():
    dmap = split_map(left=1, right=2)
    # one event in cell 1 (x<20), one in cell 2 (x>=20)
    sub = make_subcall([EventId.HO_COMMAND, EventId.HO_COMPLETE], ue=0, xs=[5.0, 35.0])
    h = sc_dominance_2gram_deviation(CELLS, [], 1, [sub], 1, dmap, dmap)
    assert h.score_of(1) == pytest.approx(0.5)
    assert h.score_of(2) == pytest.approx(0.5)


def _ho_attempt_call(ue, serving, target, count):
    recs = []
    t = 0
    for _ in range(count):
        recs.append(MdtRecord(event=EventId.A3_RSRP, ue=ue, t=t, x=0.0, y=0.0,
                              serving=serving, target=target))
        recs.append(MdtRecord(event=EventId.HO_COMMAND, ue=ue, t=t + 1, x=0.0, y=0.0,
                              serving=serving, target=target))
        t += 2
    return Call(ue=ue, records=tuple(recs))


def test_symmetry_balanced_flows_are_silent():
    adjacency = {1: frozenset({2}), 2: frozenset({1}), 3: frozenset()}
    train = [_ho_attempt_call(0, 1, 2, 10), _ho_attempt_call(1, 2, 1, 10)]
    test = [_ho_attempt_call(2, 1, 2, 4), _ho_attempt_call(3, 2, 1, 4)]
    dmap = uniform_map()
    h = sc_2gram_symmetry_deviation(CELLS, train, test, dmap, dmap, adjacency)
    assert np.allclose(h.scores, 0.0)


def test_symmetry_one_sided_flow_scores_both_ends():
    adjacency = {1: frozenset({2}), 2: frozenset({1}), 3: frozenset()}
    train = [_ho_attempt_call(0, 1, 2, 10), _ho_attempt_call(1, 2, 1, 10)]
    test = [_ho_attempt_call(2, 1, 2, 10)]  # nothing flows 2 -> 1
    dmap = uniform_map()
    h = sc_2gram_symmetry_deviation(CELLS, train, test, dmap, dmap, adjacency)
    assert h.score_of(1) == pytest.approx(1.0)
    assert h.score_of(2) == pytest.approx(1.0)
    assert h.score_of(3) == 0.0


def test_symmetry_location_mode_counts_crossings():
    adjacency = {1: frozenset({2}), 2: frozenset({1}), 3: frozenset()}
    dmap = split_map(left=1, right=2)
    # movement left->right: pair of consecutive events straddling the border
    cross = Call(ue=0, records=(
        MdtRecord(event=EventId.RLF, ue=0, t=0, x=5.0, y=5.0, serving=1),
        MdtRecord(event=EventId.RLF, ue=0, t=1, x=35.0, y=5.0, serving=1),
    ))
    h = sc_2gram_symmetry_deviation(CELLS, [], [cross], dmap, dmap, adjacency, mode="location")
    assert h.score_of(1) == pytest.approx(1.0)
    assert h.score_of(2) == pytest.approx(1.0)


def test_target_cell_counts_unique_targets_per_subcall():
    sub = make_subcall(
        [EventId.HO_COMMAND, EventId.HO_COMMAND, EventId.HO_COMMAND],
        ue=4,
        targets=[1, 1, 3],
    )
    h = sc_target_cell_subcalls(CELLS, [sub], 1)
    assert h.score_of(1) == pytest.approx(1.0)
    assert h.score_of(3) == pytest.approx(1.0)
    assert h.score_of(2) == 0.0
    assert np.all(sc_target_cell_subcalls(CELLS, [], 5).scores == 0.0)


def test_target_cell_needs_no_locations():
    sub = make_subcall([EventId.HO_COMMAND, EventId.HO_COMPLETE], ue=1, targets=[2, 2])
    stripped_records = strip_locations(sub.records)
    stripped = type(sub)(ue=sub.ue, call_index=sub.call_index, offset=sub.offset,
                         records=tuple(stripped_records))
    a = sc_target_cell_subcalls(CELLS, [sub], 1)
    b = sc_target_cell_subcalls(CELLS, [stripped], 1)
    assert np.array_equal(a.scores, b.scores)


def test_amplification_arithmetic():
    h = SleepingCellHistogram((1, 2, 3), np.array([50.0, 30.0, 20.0]), "raw")
    adjacency = {1: frozenset({2}), 2: frozenset({1}), 3: frozenset()}
    amp = amplify(h, adjacency)
    assert amp.score_of(1) == pytest.approx(50.0 / 20.0, rel=1e-9)
    assert amp.score_of(2) == pytest.approx(30.0 / 20.0, rel=1e-9)
    assert amp.score_of(3) == pytest.approx(20.0 / 80.0, rel=1e-9)


def test_amplification_uniform_symmetric_layout_stays_uniform():
    cells = (1, 2, 3, 4)
    # ring: every cell has the same neighbor count
    adjacency = {1: frozenset({2, 4}), 2: frozenset({1, 3}), 3: frozenset({2, 4}), 4: frozenset({3, 1})}
    h = SleepingCellHistogram(cells, np.full(4, 25.0), "raw")
    amp = amplify(h, adjacency)
    assert np.allclose(amp.scores, amp.scores[0])


def test_amplification_all_mass_on_one_cell_dominates():
    cells = (1, 2, 3)
    adjacency = {1: frozenset({2}), 2: frozenset({1, 3}), 3: frozenset({2})}
    h = SleepingCellHistogram(cells, np.array([100.0, 0.0, 0.0]), "raw")
    amp = amplify(h, adjacency)
    norm = normalize(amp)
    assert norm.argmax_cell() == 1
    assert norm.score_of(1) > 99.9


def test_normalize_examples():
    h = SleepingCellHistogram((1, 2, 3), np.array([2.0, 3.0, 5.0]), "raw")
    norm = normalize(h)
    assert np.allclose(norm.scores, [20.0, 30.0, 50.0])
    zero = normalize(SleepingCellHistogram(tuple(range(21)), np.zeros(21), "raw"))
    assert np.allclose(zero.scores, 100.0 / 21.0)
    rng = np.random.default_rng(0)
    any_h = normalize(SleepingCellHistogram((1, 2, 3, 4), rng.uniform(0, 9, 4), "raw"))
    assert any_h.scores.sum() == pytest.approx(100.0, abs=1e-6)


def test_combine_identity_and_weights():
    h = normalize(SleepingCellHistogram((1, 2), np.array([1.0, 3.0]), "raw"))
    other = normalize(SleepingCellHistogram((1, 2), np.array([9.0, 1.0]), "raw"))
    same = combine([h, h, h, h])
    assert np.allclose(same.scores, h.scores)
    first_only = combine([h, other, other, other], weights=[1, 0, 0, 0])
    assert np.allclose(first_only.scores, h.scores)
    with pytest.raises(DataError):
        combine([h, normalize(SleepingCellHistogram((1, 3), np.array([1.0, 1.0]), "raw"))])
    with pytest.raises(DataError):
        combine([h, other], weights=[1.0])


def test_labels_uniform_runs_flag_nothing():
    runs = [np.full(21, 100.0 / 21.0) for _ in range(10)]
    labels = label_cells(tuple(range(21)), runs)
    assert labels.sigma == pytest.approx(0.0, abs=1e-12)
    assert not any(labels.abnormal)


def test_labels_single_hot_cell_is_abnormal():
    run = np.zeros(21)
    run[4] = 100.0
    labels = label_cells(tuple(range(21)), [run] * 12)
    assert labels.abnormal_cells() == [4]


def test_label_single_runs_against_external_stats():
    runs = [np.array([10.0, 0.0]), np.array([0.0, 10.0])]
    stats = pooled_stats(runs)
    per_run = label_single_runs((1, 2), runs, stats)
    assert len(per_run) == 2
    assert per_run[0].abnormal_cells() == []  # 10 < 5 + 3*5


def test_methods_are_permutation_equivariant():
    # relabel cells 1<->2 everywhere; histograms must permute identically
    dmap = split_map(left=1, right=2)
    dmap_swapped = split_map(left=2, right=1)
    sub = make_subcall([EventId.RLF, EventId.PL_PROBLEM], ue=0, xs=[5.0, 35.0])
    h = sc_dominance_subcall_deviation([1, 2, 3], [], 1, [sub], 1, dmap, dmap)
    h_swapped = sc_dominance_subcall_deviation([1, 2, 3], [], 1, [sub], 1, dmap_swapped, dmap_swapped)
    assert h.score_of(1) == h_swapped.score_of(2)
    assert h.score_of(2) == h_swapped.score_of(1)
    assert h.score_of(3) == h_swapped.score_of(3)


def test_amplification_preserves_argmax_on_default_layout():
    # single-cell fault shape: one dominant score plus background noise
    from sleepscan.simgen import layout_adjacency, macro21_layout

    layout = macro21_layout()
    adjacency = layout_adjacency(layout, layout.default_grid(resolution_m=20.0))
    cells = tuple(layout.cell_ids)
    rng = np.random.default_rng(8)
    for _ in range(20):
        scores = rng.uniform(0.0, 1.0, len(cells))
        hot = int(rng.integers(len(cells)))
        scores[hot] += 10.0
        h = SleepingCellHistogram(cells, scores, "raw")
        total = scores.sum()
        non_neighbor_sums = {
            c: total - sum(scores[i] for i, cc in enumerate(cells) if cc in ({c} | set(adjacency[c])))
            for c in cells
        }
        hot_cell = cells[hot]
        if all(non_neighbor_sums[hot_cell] <= v for c, v in non_neighbor_sums.items() if c != hot_cell):
            assert amplify(h, adjacency).argmax_cell() == hot_cell


def test_histogram_stage_tracking():
    h = SleepingCellHistogram((1, 2), np.array([1.0, 2.0]), "raw")
    assert normalize(h).stage == "normalized"
    assert amplify(h, {1: frozenset(), 2: frozenset()}).stage == "amplified"
