"""Per-step MDT event simulator with an injectable random-access failure.

Each UE is one continuous call: it moves on random waypoints, measures
RSRP/RSRQ from the precomputed radio map at its pixel, and emits the
nine MDT-triggering events.  Handovers follow A3 with time-to-trigger;
random access toward the faulty cell always fails (the T304 timer
expires), producing PL PROBLEM / RLF / RLF REESTAB. and a re-attach to
the strongest healthy cell.  A short backoff bars the failed target so
a UE does not retry every TTT interval.

All state updates are vectorized over UEs; only steps that actually
emit events touch Python-level loops, so a full run stays fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..mdtlog import EventId, MdtRecord
from .dominance import RadioMap, build_radio_map
from .fields import ShadowingField
from .layout import NetworkLayout


@dataclass(frozen=True)
class FaultConfig:
    enabled: bool = False
    faulty_cell: int = 1
    mode: str = "rach-failure"

    def validate(self, layout: NetworkLayout) -> None:
        if self.mode != "rach-failure":
            raise ConfigError(f"unsupported fault mode {self.mode!r}")
        if self.enabled and self.faulty_cell not in layout.cell_ids:
            raise ConfigError(f"faulty cell {self.faulty_cell} not in layout")


@dataclass(frozen=True)
class SimConfig:
    ues_per_cell: int = 15
    ue_speed_kmh: float = 30.0
    a3_margin_db: float = 3.0
    ttt_ms: float = 256.0
    a2_rsrp_threshold_dbm: float = -110.0
    a2_rsrp_hysteresis_db: float = 3.0
    a2_rsrq_threshold_db: float = -10.0
    a2_rsrq_hysteresis_db: float = 2.0
    rsrq_load_db: float = 6.0  # RSSI load factor: RSRQ = serving - total - this
    a2_report_interval_ms: float = 0.0  # >0: re-report period while A2 RSRQ holds
    duration_steps: int = 5720
    step_seconds: float = 0.1
    rng_seed: int = 0
    t304_ms: float = 200.0
    ho_complete_ms: float = 100.0
    ho_backoff_ms: float = 500.0

    def validate(self) -> None:
        if self.ues_per_cell < 1:
            raise ConfigError("ues_per_cell must be >= 1")
        if self.duration_steps < 1:
            raise ConfigError("duration_steps must be >= 1")
        if self.step_seconds <= 0:
            raise ConfigError("step_seconds must be positive")
        if self.a2_rsrp_hysteresis_db < 0 or self.a2_rsrq_hysteresis_db < 0:
            raise ConfigError("hysteresis must be >= 0")
        for name in ("a3_margin_db", "a2_rsrp_threshold_dbm", "a2_rsrq_threshold_db"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    def steps(self, milliseconds: float, *, round_up: bool = False) -> int:
        step_ms = self.step_seconds * 1000.0
        n = milliseconds / step_ms
        return max(1, math.ceil(n) if round_up else round(n))


@dataclass
class SimOutput:
    records: list[MdtRecord]
    affected: list[bool]  # fault-affected flag per record
    radio: RadioMap


def simulate(
    layout: NetworkLayout,
    shadowing: ShadowingField | None,
    sim: SimConfig,
    fault: FaultConfig,
    radio: RadioMap | None = None,
) -> SimOutput:
    """Run one dataset; deterministic for a fixed rng_seed."""
    sim.validate()
    fault.validate(layout)
    if radio is None:
        radio = build_radio_map(layout, shadowing)
    grid = radio.grid_spec
    cell_ids = radio.cell_ids
    n_cells = len(cell_ids)
    faulty_idx = layout.index_of(fault.faulty_cell) if fault.enabled else -1

    n_ue = sim.ues_per_cell * n_cells
    rng = np.random.default_rng(np.random.SeedSequence(sim.rng_seed))
    x0, x1, y0, y1 = grid.extent
    pos = rng.uniform([x0, y0], [x1, y1], size=(n_ue, 2))
    waypoint = rng.uniform([x0, y0], [x1, y1], size=(n_ue, 2))
    speed = sim.ue_speed_kmh / 3.6 * sim.step_seconds  # meters per step

    ttt_steps = sim.steps(sim.ttt_ms, round_up=True)
    t304_steps = sim.steps(sim.t304_ms)
    complete_steps = 0 if sim.ho_complete_ms <= 0 else sim.steps(sim.ho_complete_ms)
    backoff_steps = sim.steps(sim.ho_backoff_ms)

    report_steps = sim.steps(sim.a2_report_interval_ms) if sim.a2_report_interval_ms > 0 else 0

    serving = np.zeros(n_ue, dtype=np.int64)          # cell index
    a2_rsrp_on = np.zeros(n_ue, dtype=bool)
    a2_rsrq_on = np.zeros(n_ue, dtype=bool)
    a2_rsrq_last = np.zeros(n_ue, dtype=np.int64)     # step of last RSRQ report
    a3_count = np.zeros(n_ue, dtype=np.int64)
    pending_target = np.full(n_ue, -1, dtype=np.int64)  # cell index, -1 = none
    pending_timer = np.zeros(n_ue, dtype=np.int64)
    bar_cell = np.full(n_ue, -1, dtype=np.int64)
    bar_until = np.zeros(n_ue, dtype=np.int64)

    records: list[MdtRecord] = []
    affected: list[bool] = []
    ue_range = np.arange(n_ue)

    def emit(event, ue, t, dom_cell, target_idx=None):
        target = None if target_idx is None else int(cell_ids[target_idx])
        rec = MdtRecord(
            event=event,
            ue=int(ue),
            t=int(t),
            x=float(pos[ue, 0]),
            y=float(pos[ue, 1]),
            serving=int(cell_ids[serving[ue]]),
            target=target,
        )
        records.append(rec)
        affected.append(
            fault.enabled
            and (target == fault.faulty_cell or int(dom_cell) == fault.faulty_cell)
        )

    def best_healthy(rsrp_col):
        col = rsrp_col.copy()
        col[faulty_idx] = -np.inf
        return int(np.argmax(col))

    for t in range(sim.duration_steps):
        if t > 0:
            vec = waypoint - pos
            dist = np.hypot(vec[:, 0], vec[:, 1])
            arrive = dist <= speed
            if arrive.any():
                pos[arrive] = waypoint[arrive]
                waypoint[arrive] = rng.uniform([x0, y0], [x1, y1], size=(int(arrive.sum()), 2))
            move = ~arrive
            pos[move] += vec[move] / dist[move, None] * speed

        iy, ix = grid.indices_for(pos[:, 0], pos[:, 1])
        rsrp = radio.rsrp_dbm[:, iy, ix]  # (n_cells, n_ue)
        dom_now = radio.dominance.grid[iy, ix]

        if t == 0:
            serving[:] = np.argmax(rsrp, axis=0)
            if fault.enabled:
                for u in np.nonzero(serving == faulty_idx)[0]:
                    # initial attach toward the sleeping cell fails
                    emit(EventId.PL_PROBLEM, u, t, dom_now[u])
                    emit(EventId.RLF, u, t, dom_now[u])
                    best = best_healthy(rsrp[:, u])
                    emit(EventId.RLF_REESTAB, u, t, dom_now[u], target_idx=best)
                    serving[u] = best
                    bar_cell[u] = faulty_idx
                    bar_until[u] = t + backoff_steps

        serving_rsrp = rsrp[serving, ue_range]
        rsrq = serving_rsrp - radio.total_dbm[iy, ix] - sim.rsrq_load_db

        # A2 RSRP enter/leave on threshold-with-hysteresis crossings
        enter = ~a2_rsrp_on & (serving_rsrp < sim.a2_rsrp_threshold_dbm - sim.a2_rsrp_hysteresis_db)
        leave = a2_rsrp_on & (serving_rsrp > sim.a2_rsrp_threshold_dbm + sim.a2_rsrp_hysteresis_db)
        for u in np.nonzero(enter)[0]:
            emit(EventId.A2_RSRP_ENTER, u, t, dom_now[u])
        for u in np.nonzero(leave)[0]:
            emit(EventId.A2_RSRP_LEAVE, u, t, dom_now[u])
        a2_rsrp_on |= enter
        a2_rsrp_on &= ~leave

        # A2 RSRQ has an enter event only; the leave crossing resets silently.
        # While the condition holds the report repeats every report interval.
        enter_q = ~a2_rsrq_on & (rsrq < sim.a2_rsrq_threshold_db - sim.a2_rsrq_hysteresis_db)
        reset_q = a2_rsrq_on & (rsrq > sim.a2_rsrq_threshold_db + sim.a2_rsrq_hysteresis_db)
        repeat_q = (
            a2_rsrq_on & ~reset_q & (t - a2_rsrq_last >= report_steps)
            if report_steps
            else np.zeros(n_ue, dtype=bool)
        )
        for u in np.nonzero(enter_q | repeat_q)[0]:
            emit(EventId.A2_RSRQ_ENTER, u, t, dom_now[u])
            a2_rsrq_last[u] = t
        a2_rsrq_on |= enter_q
        a2_rsrq_on &= ~reset_q

        # resolve random access started by earlier HO COMMANDs
        active = pending_target >= 0
        pending_timer[active] -= 1
        for u in np.nonzero(active & (pending_timer <= 0))[0]:
            target = pending_target[u]
            if fault.enabled and target == faulty_idx:
                emit(EventId.PL_PROBLEM, u, t, dom_now[u])
                emit(EventId.RLF, u, t, dom_now[u])
                best = best_healthy(rsrp[:, u])
                emit(EventId.RLF_REESTAB, u, t, dom_now[u], target_idx=best)
                serving[u] = best
                bar_cell[u] = faulty_idx
                bar_until[u] = t + backoff_steps
            else:
                emit(EventId.HO_COMPLETE, u, t, dom_now[u], target_idx=target)
                serving[u] = target
            pending_target[u] = -1
            a3_count[u] = 0

        # A3 evaluation over non-serving, non-barred cells
        candidates = rsrp.copy()
        candidates[serving, ue_range] = -np.inf
        barred = (bar_cell >= 0) & (t < bar_until)
        candidates[bar_cell[barred], ue_range[barred]] = -np.inf
        bar_cell[(bar_cell >= 0) & ~barred] = -1
        best_idx = np.argmax(candidates, axis=0)
        best_val = candidates[best_idx, ue_range]
        condition = (best_val - serving_rsrp > sim.a3_margin_db) & (pending_target < 0)
        a3_count = np.where(condition, a3_count + 1, 0)
        for u in np.nonzero(condition & (a3_count >= ttt_steps))[0]:
            target = int(best_idx[u])
            failing = fault.enabled and target == faulty_idx
            timer = t304_steps if failing else complete_steps
            if t + timer >= sim.duration_steps:
                continue  # would never resolve before the run ends
            emit(EventId.A3_RSRP, u, t, dom_now[u], target_idx=target)
            emit(EventId.HO_COMMAND, u, t, dom_now[u], target_idx=target)
            a3_count[u] = 0
            if timer == 0:
                # random access succeeds within the step
                emit(EventId.HO_COMPLETE, u, t, dom_now[u], target_idx=target)
                serving[u] = target
            else:
                pending_target[u] = target
                pending_timer[u] = timer

    return SimOutput(records=records, affected=affected, radio=radio)
