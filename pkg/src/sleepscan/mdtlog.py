"""MDT data model: events, records, calls, JSONL I/O and K-fold pairing.

One JSONL record per line:
    {"ue": int, "t": int, "event": str, "x": float, "y": float,
     "serving": int, "target": int|null}
Event names on the wire use the human-readable spellings
("HO COMMAND", "RLF REESTAB.", ...).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path

from .errors import DataError, ParseError


class EventId(IntEnum):
    """The nine MDT-triggering network events, with stable codes."""

    PL_PROBLEM = 0
    RLF = 1
    RLF_REESTAB = 2
    A2_RSRP_ENTER = 3
    A2_RSRP_LEAVE = 4
    A2_RSRQ_ENTER = 5
    A3_RSRP = 6
    HO_COMMAND = 7
    HO_COMPLETE = 8


WIRE_NAMES: dict[EventId, str] = {
    EventId.PL_PROBLEM: "PL PROBLEM",
    EventId.RLF: "RLF",
    EventId.RLF_REESTAB: "RLF REESTAB.",
    EventId.A2_RSRP_ENTER: "A2 RSRP ENTER",
    EventId.A2_RSRP_LEAVE: "A2 RSRP LEAVE",
    EventId.A2_RSRQ_ENTER: "A2 RSRQ ENTER",
    EventId.A3_RSRP: "A3 RSRP",
    EventId.HO_COMMAND: "HO COMMAND",
    EventId.HO_COMPLETE: "HO COMPLETE",
}

EVENTS_BY_NAME: dict[str, EventId] = {name: ev for ev, name in WIRE_NAMES.items()}

# Events that must carry a target cell id.
TARGETED_EVENTS = frozenset(
    {EventId.A3_RSRP, EventId.HO_COMMAND, EventId.HO_COMPLETE, EventId.RLF_REESTAB}
)


@dataclass(frozen=True, slots=True)
class MdtRecord:
    """One event-triggered measurement report."""

    event: EventId
    ue: int
    t: int
    x: float
    y: float
    serving: int
    target: int | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "ue": self.ue,
                "t": self.t,
                "event": WIRE_NAMES[self.event],
                "x": self.x,
                "y": self.y,
                "serving": self.serving,
                "target": self.target,
            }
        )


@dataclass(frozen=True, slots=True)
class Call:
    """All reports of one UE, ordered by time (the UE's full call)."""

    ue: int
    records: tuple[MdtRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def events(self) -> list[EventId]:
        return [r.event for r in self.records]


@dataclass(frozen=True)
class FoldPair:
    """One (training chunk, testing chunk) combination of the K-fold cross."""

    train_role: str
    train_index: int
    test_role: str
    test_index: int


def _record_from_obj(obj: dict, path, lineno: int) -> MdtRecord:
    for field in ("ue", "t", "event", "x", "y", "serving"):
        if field not in obj:
            raise ParseError(path, lineno, f"missing required field {field!r}")
    name = obj["event"]
    if name not in EVENTS_BY_NAME:
        raise ParseError(path, lineno, f"unknown event name {name!r}")
    event = EVENTS_BY_NAME[name]
    try:
        x = float(obj["x"])
        y = float(obj["y"])
    except (TypeError, ValueError):
        raise ParseError(path, lineno, "non-numeric coordinate") from None
    target = obj.get("target")
    if event in TARGETED_EVENTS and target is None:
        raise ParseError(path, lineno, f"event {name!r} requires a target cell")
    try:
        return MdtRecord(
            event=event,
            ue=int(obj["ue"]),
            t=int(obj["t"]),
            x=x,
            y=y,
            serving=int(obj["serving"]),
            target=None if target is None else int(target),
        )
    except (TypeError, ValueError):
        raise ParseError(path, lineno, "malformed field value") from None


def read_records(path) -> list[MdtRecord]:
    """Read a JSONL log as a flat record list, in file order."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise ParseError(path, lineno, "invalid JSON") from None
            if not isinstance(obj, dict):
                raise ParseError(path, lineno, "record is not an object")
            records.append(_record_from_obj(obj, path, lineno))
    return records


def write_records(records, path) -> None:
    """Write records as JSONL, one record per line, in given order."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")


def group_calls(records) -> list[Call]:
    """Group records into per-UE calls, stable-sorted by t within a UE.

    Ties in t keep input order so that event sequences are reproducible.
    Calls are returned sorted by ue id.
    """
    by_ue: dict[int, list[MdtRecord]] = {}
    for rec in records:
        by_ue.setdefault(rec.ue, []).append(rec)
    calls = []
    for ue in sorted(by_ue):
        recs = sorted(by_ue[ue], key=lambda r: r.t)  # sorted() is stable
        calls.append(Call(ue=ue, records=tuple(recs)))
    return calls


def parse_log(path) -> list[Call]:
    """Parse a JSONL log into calls; malformed lines raise ParseError."""
    return group_calls(read_records(path))


def make_fold_pairs(train_role, train_chunks, test_role, test_chunks) -> list[FoldPair]:
    """Full cross product of training and testing chunk indices."""
    if not train_chunks or not test_chunks:
        raise DataError(
            f"fold pairing needs at least one chunk per role, got "
            f"{len(train_chunks)} x {len(test_chunks)}"
        )
    return [
        FoldPair(train_role, i, test_role, j)
        for i in range(len(train_chunks))
        for j in range(len(test_chunks))
    ]


def strip_locations(records) -> list[MdtRecord]:
    """Copy records with location zeroed; target-cell analysis must not need it."""
    return [replace(r, x=0.0, y=0.0) for r in records]
