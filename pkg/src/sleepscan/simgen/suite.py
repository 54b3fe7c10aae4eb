"""Dataset suite generation: normal / problematic / reference roles.

normal       fault off,  shadowing seed S1, mobility seed M1
problematic  fault on,   shadowing seed S1, mobility seed M2
reference    fault off,  shadowing seed S2, mobility seed M3

Each role's log is split into K chunks by UE partition (ue mod K); the
detection stage pairs normal chunks against problematic and reference
chunks in a full K x K cross.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..mdtlog import MdtRecord, read_records, write_records
from .dominance import (
    RadioMap,
    build_radio_map,
    layout_adjacency,
    load_dominance_csv,
    write_dominance_csv,
)
from .engine import FaultConfig, SimConfig, simulate
from .fields import make_shadowing
from .layout import GridSpec, NetworkLayout

ROLES = ("normal", "problematic", "reference")


def derive_seeds(master_seed: int) -> dict:
    """Named sub-seeds for the suite, stable for a given master seed."""
    state = np.random.SeedSequence(master_seed).generate_state(5)
    return {
        "shadow": {"normal": int(state[0]), "problematic": int(state[0]), "reference": int(state[1])},
        "mobility": {"normal": int(state[2]), "problematic": int(state[3]), "reference": int(state[4])},
    }


@dataclass
class RoleData:
    role: str
    records: list[MdtRecord]
    affected: list[bool]
    radio: RadioMap | None
    chunks: list[list[MdtRecord]]


@dataclass
class DatasetSuite:
    roles: dict[str, RoleData]
    seeds: dict
    n_chunks: int
    grid: GridSpec
    faulty_cell: int
    cell_ids: list[int]
    adjacency: dict[int, frozenset[int]]


def split_chunks(records, n_chunks: int) -> list[list[MdtRecord]]:
    """Partition a log by UE (ue mod n_chunks), preserving record order."""
    chunks: list[list[MdtRecord]] = [[] for _ in range(n_chunks)]
    for rec in records:
        chunks[rec.ue % n_chunks].append(rec)
    return chunks


def generate_dataset_suite(
    layout: NetworkLayout,
    sim: SimConfig,
    faulty_cell: int = 1,
    master_seed: int = 0,
    n_chunks: int = 6,
    grid: GridSpec | None = None,
    sigma_db: float = 8.0,
    correlation_m: float = 40.0,
) -> DatasetSuite:
    if grid is None:
        grid = layout.default_grid()
    seeds = derive_seeds(master_seed)
    adjacency = layout_adjacency(layout, grid)
    layout.neighbors = adjacency
    radio_cache: dict[int, RadioMap] = {}
    roles: dict[str, RoleData] = {}
    for role in ROLES:
        shadow_seed = seeds["shadow"][role]
        if shadow_seed not in radio_cache:
            shadowing = make_shadowing(
                layout, grid, sigma_db=sigma_db, correlation_m=correlation_m, seed=shadow_seed
            )
            radio_cache[shadow_seed] = build_radio_map(layout, shadowing)
        fault = FaultConfig(enabled=(role == "problematic"), faulty_cell=faulty_cell)
        role_sim = replace(sim, rng_seed=seeds["mobility"][role])
        out = simulate(layout, None, role_sim, fault, radio=radio_cache[shadow_seed])
        roles[role] = RoleData(
            role=role,
            records=out.records,
            affected=out.affected,
            radio=out.radio,
            chunks=split_chunks(out.records, n_chunks),
        )
    return DatasetSuite(
        roles=roles,
        seeds=seeds,
        n_chunks=n_chunks,
        grid=grid,
        faulty_cell=faulty_cell,
        cell_ids=list(layout.cell_ids),
        adjacency=adjacency,
    )


def write_truth(records, affected, path) -> None:
    """Ground truth JSONL keyed by (ue, event_index within the UE's call)."""
    counters: dict[int, int] = {}
    with open(path, "w", encoding="utf-8") as fh:
        for rec, flag in zip(records, affected):
            idx = counters.get(rec.ue, 0)
            counters[rec.ue] = idx + 1
            fh.write(json.dumps({"ue": rec.ue, "event_index": idx, "affected": bool(flag)}) + "\n")


def load_truth(path) -> dict[tuple[int, int], bool]:
    truth = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            truth[(int(obj["ue"]), int(obj["event_index"]))] = bool(obj["affected"])
    return truth


def write_suite(suite: DatasetSuite, out_dir, manifest_extra: dict | None = None) -> Path:
    out_dir = Path(out_dir)
    if not out_dir.parent.exists():
        raise DataError(f"parent directory does not exist: {out_dir.parent}")
    out_dir.mkdir(exist_ok=True)
    files: dict[str, dict] = {}
    for role, data in suite.roles.items():
        chunk_names = []
        for j, chunk in enumerate(data.chunks):
            name = f"{role}_chunk{j}.jsonl"
            write_records(chunk, out_dir / name)
            chunk_names.append(name)
        truth_name = f"truth_{role}.jsonl"
        write_truth(data.records, data.affected, out_dir / truth_name)
        dom_name = f"dominance_{role}.csv"
        write_dominance_csv(data.radio.dominance, out_dir / dom_name)
        files[role] = {"chunks": chunk_names, "truth": truth_name, "dominance": dom_name}
    grid = suite.grid
    manifest = {
        "seeds": suite.seeds,
        "n_chunks": suite.n_chunks,
        "faulty_cell": suite.faulty_cell,
        "cell_ids": suite.cell_ids,
        "adjacency": {str(c): sorted(n) for c, n in suite.adjacency.items()},
        "grid": {
            "origin_x": grid.origin_x,
            "origin_y": grid.origin_y,
            "resolution_m": grid.resolution_m,
            "nx": grid.nx,
            "ny": grid.ny,
        },
        "files": files,
    }
    if manifest_extra:
        manifest.update(manifest_extra)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir / "manifest.json"


@dataclass
class LoadedRole:
    role: str
    chunks: list[list[MdtRecord]]
    truth: dict[tuple[int, int], bool]
    dominance: "DominanceMap"


def load_suite(data_dir):
    """Read back a written suite: manifest, chunks, truth, dominance maps."""
    data_dir = Path(data_dir)
    manifest_path = data_dir / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no manifest.json in {data_dir}")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    g = manifest["grid"]
    grid = GridSpec(
        origin_x=g["origin_x"],
        origin_y=g["origin_y"],
        resolution_m=g["resolution_m"],
        nx=g["nx"],
        ny=g["ny"],
    )
    roles = {}
    for role, entry in manifest["files"].items():
        chunks = [read_records(data_dir / name) for name in entry["chunks"]]
        truth = load_truth(data_dir / entry["truth"])
        dominance = load_dominance_csv(data_dir / entry["dominance"], grid)
        roles[role] = LoadedRole(role=role, chunks=chunks, truth=truth, dominance=dominance)
    return manifest, grid, roles
