"""Message timelines and delay metrics for the five handover protocols.

Each protocol carries its chronological event table (delay of the step,
event name, timestamp at which the event starts), its classification, a
price, and the three metric expressions used for ranking: the packet-loss
window, the handover delay and the signaling delay.

Event tables are transcribed as published, inconsistencies included;
:func:`check_chain_consistency` reports them rather than repairing them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional

from .delay import (
    ZERO,
    DelayExpr,
    Linear,
    Max,
    Min,
    ScenarioParams,
    add,
    canonical_form,
    equivalent,
    evaluate,
    parse,
    subtract_linear,
)


class ProtocolId(str, Enum):
    MIPV6 = "MIPv6"
    FMIPV6 = "FMIPv6"
    SMIPV6 = "SMIPv6"
    EFMIPV6 = "EFMIPv6"
    HMIPV6 = "HMIPv6"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, name: str) -> "ProtocolId":
        for p in cls:
            if p.value.lower() == name.strip().lower():
                return p
        raise ValueError(f"unknown protocol {name!r}; expected one of {[p.value for p in cls]}")


PROTOCOLS = tuple(ProtocolId)


@dataclass(frozen=True)
class Classification:
    change: str        # "none", "design" or "architecture"
    mobility: str      # "macro" or "micro"
    handover: str      # "hard" or "soft"

    @property
    def is_soft(self) -> bool:
        return self.handover == "soft"


@dataclass(frozen=True)
class TimelineEvent:
    name: str
    delay: Optional[DelayExpr]
    timestamp: DelayExpr
    # causal predecessors; () means the row is not checked
    after: tuple = ()
    note: str = ""

    @property
    def completion(self) -> DelayExpr:
        return self.timestamp if self.delay is None else add(self.timestamp, self.delay)


@dataclass(frozen=True)
class ProtocolSpec:
    id: ProtocolId
    events: tuple
    classification: Classification
    price: float
    handover_delay: DelayExpr
    signaling_delay: DelayExpr
    packet_loss_window: DelayExpr
    # rows used to rederive the handover delay: first packet on the new
    # path (min over the listed rows) minus the start of the interruption
    first_packet_events: tuple = ()
    interruption: str = ""
    interruption_at_completion: bool = False

    def event(self, name: str) -> TimelineEvent:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(f"{self.id}: no event named {name!r}")


_PREV = object()


def _rows(rows):
    """Build events from (delay, name, time[, after[, note]]) tuples.

    ``after`` defaults to the previous row.
    """
    events = []
    for i, row in enumerate(rows):
        delay, name, time = row[:3]
        after = row[3] if len(row) > 3 else _PREV
        note = row[4] if len(row) > 4 else ""
        if after is _PREV:
            after = (events[-1].name,) if events else ()
        elif isinstance(after, str):
            after = (after,)
        events.append(TimelineEvent(
            name=name,
            delay=parse(delay) if delay else None,
            timestamp=parse(time),
            after=tuple(after),
            note=note,
        ))
    return tuple(events)


# The MIPv6 source timeline prints the L2 handover delay as "H"; it is the symbol h.
_MIPV6 = _rows([
    ("T", "L2 Trigger", "0"),
    ("6T+4f+d", "RS", "T"),
    ("6T+4f+d", "RA", "6T+4f+d"),
    ("6T+4f+d", "NS", "12T+8f+2d"),
    ("6T+4f+d", "NA", "18T+12f+3d"),
    ("h", "L2 Handover", "24T+16f+4d"),
    ("3f+F+d+6T", "BUs sent to HA/CN", "24T+16f+4d+h"),
    ("3f+F+d+6T", "Packets sent by CNs@NCOA", "30T+19f+5d+h+F"),
    (None, "Packets sent by CNs are received", "36T+22f+6d+h+2F"),
])

_FAST_PREFIX = [
    ("T", "L2 Trigger", "0"),
    ("d+2T", "RtSolPr", "T"),
    ("d+2T", "PrRtAdv", "d+2T"),
    ("d+2T", "FBU", "2d+4T"),
    ("4f+5T", "HI", "3d+6T"),
    ("4f+5T", "HACK", "3d+4f+11T"),
    ("d+2T", "FBACK", "3d+8f+16T"),
    ("4f+5T", "Packets are rerouted through PAR", "3d+8f+16T", "HACK"),
    ("h", "L2 Handover", "4d+8f+18T", "FBACK"),
    ("d+2T", "FNA", "4d+8f+h+18T"),
    ("d+2T", "FNA-ACK", "5d+8f+h+20T"),
]

_FMIPV6 = _rows(_FAST_PREFIX + [
    ("3f+F+d+6T", "BUs sent to HA/CN", "6d+8f+h+22T"),
    ("d+2T", "PAR sends packets to MN", "max(5d+8f+h+20T, 12f+3d+21T)",
     ("FNA", "Packets are rerouted through PAR")),
    (None, "Packets are received by MN", "max(6d+8f+h+22T, 12f+4d+23T)"),
    (None, "BUs are received by CNs", "11f+7d+F+h+28T", "BUs sent to HA/CN"),
    (None, "BU-ACKs are received by MN", "14f+8d+2F+h+34T", (),
     "timestamp truncated in the source table; completed as BU receipt plus 3f+F+d+6T"),
])

_SMIPV6 = _rows([
    ("T", "L2 Trigger", "0"),
    ("d+2T", "FBU", "T"),
    ("3f+F+d+6T", "BU", "T", "L2 Trigger"),
    ("d+2T", "FBACK", "d+3T", "FBU"),
    ("4f+d+6T", "Rerouting of packets", "d+3T", "FBU"),
    ("h", "L2 Handover", "2d+5T", "FBACK"),
    ("3f+F+d+6T", "Packets sent by CNs@NCOA", "d+3f+F+6T", "BU"),
    (None, "Rerouted packets are received", "4f+2d+9T", "Rerouting of packets"),
    (None, "Packets sent by CNs are received", "6f+2F+2d+12T", "Packets sent by CNs@NCOA"),
])

_EFMIPV6 = _rows([
    ("T", "L2 Trigger", "0"),
    ("d+2T", "nCoA-REQ-MN", "T"),
    ("4f+5T", "nCoA-REQ-PAR", "d+2T"),
    ("4f+5T", "nCoA-REP", "d+4f+7T"),
    ("3f+F+5T", "BUs sent to HA/CN", "d+8f+12T"),
    ("d+2T", "nCoA-Adv", "d+8f+12T", "nCoA-REP"),
    ("4f+5T", "Packets are rerouted through PAR", "d+8f+12T", "nCoA-REP"),
    ("3f+F+5T", "BU_ACK", "d+11f+17T+F", "BUs sent to HA/CN"),
    ("h", "L2 Handover", "d+11f+17T+F", "BUs sent to HA/CN"),
    ("d+2T", "FNA", "d+11f+17T+F+h"),
    (None, "Rerouted packets are received", "2d+12f+17T", "Packets are rerouted through PAR"),
    (None, "Packets are received by MN", "max(2d+11f+19T+F+h, 2d+12f+17T)",
     ("FNA", "Rerouted packets are received")),
    ("d+2T", "NAACK", "2d+11f+19T+F+h", "FNA"),
    (None, "NAACKs are received by MN", "3d+11f+21T+F+h"),
])

# Captioned "FHMIPv6" in the source; the surrounding text calls it HMIPv6.
_HMIPV6 = _rows(_FAST_PREFIX + [
    ("2f+d+T", "BUs sent to MAP", "6d+8f+h+22T"),
    (None, "PAR sends packets to MN", "max(5d+8f+h+20T, 12f+3d+21T)",
     ("FNA", "Packets are rerouted through PAR")),
    (None, "Packets are received by MN", "max(6d+8f+h+22T, 12f+4d+23T)"),
    (None, "BUs are received by MAP", "10f+7d+h+23T", "BUs sent to MAP"),
    (None, "BU-ACKs are received by MN", "12f+8d+h+24T", ()),
])


def _spec(pid, events, classification, price, ho, sig, loss, first, interruption, at_completion=False):
    return ProtocolSpec(
        id=pid,
        events=events,
        classification=classification,
        price=float(price),
        handover_delay=parse(ho),
        signaling_delay=parse(sig),
        packet_loss_window=parse(loss),
        first_packet_events=tuple(first),
        interruption=interruption,
        interruption_at_completion=at_completion,
    )


_SPECS = {
    ProtocolId.MIPV6: _spec(
        ProtocolId.MIPV6, _MIPV6, Classification("none", "macro", "hard"), 1000,
        "12T+6f+2d+h+2F", "30T+19f+5d+h+2F+D", "35T+22f+6d+h+2F",
        ["Packets sent by CNs are received"], "L2 Handover",
    ),
    ProtocolId.FMIPV6: _spec(
        ProtocolId.FMIPV6, _FMIPV6, Classification("design", "macro", "soft"), 1000,
        "max(2d+h+6T, 4f+7T+d)", "14f+6d+2F+h+30T+D", "0",
        ["Packets are received by MN"], "L2 Handover",
    ),
    ProtocolId.SMIPV6: _spec(
        ProtocolId.SMIPV6, _SMIPV6, Classification("design", "macro", "soft"), 1500,
        "4f+4T", "3f+F+d+5T+D", "0",
        ["Rerouted packets are received", "Packets sent by CNs are received"], "L2 Handover",
    ),
    ProtocolId.EFMIPV6: _spec(
        ProtocolId.EFMIPV6, _EFMIPV6, Classification("design", "macro", "soft"), 1000,
        "max(3f+h+F+5T, 4f+3T)", "3d+11f+21T+F+h", "0",
        ["Packets are received by MN"], "nCoA-Adv", at_completion=True,
    ),
    ProtocolId.HMIPV6: _spec(
        ProtocolId.HMIPV6, _HMIPV6, Classification("architecture", "micro", "soft"), 1500,
        "max(2d+h+6T, 2f+d+5T)", "10f+3d+h+19T+D", "0",
        ["Packets are received by MN"], "L2 Handover",
    ),
}

# Instant at which the last packet over the old path arrives (MIPv6 only).
MIPV6_LAST_OLD_PATH_PACKET = parse("T")


def timeline(pid) -> ProtocolSpec:
    return _SPECS[ProtocolId(pid)]


def handover_delay(pid) -> DelayExpr:
    return timeline(pid).handover_delay


def signaling_delay(pid) -> DelayExpr:
    return timeline(pid).signaling_delay


def packet_loss(pid, params: ScenarioParams) -> tuple:
    """Return ``(window_s, packets_lost)`` for one handover."""
    window = evaluate(timeline(pid).packet_loss_window, params)
    return window, window * params.throughput_pkt_per_s


def smipv6_rerouting_margin(params) -> float:
    """Seconds between rerouted packets reaching the new network and the MN joining it.

    Positive means rerouted packets cannot arrive before the MN is attached.
    """
    return evaluate(parse("4f-h+T"), params)


# -- derivations and audits ---------------------------------------------------


@dataclass(frozen=True)
class Derivation:
    protocol: ProtocolId
    derived: DelayExpr
    listed: DelayExpr
    agrees: bool

    @property
    def structurally_equal(self) -> bool:
        return equivalent(self.derived, self.listed)


def _sample_params(rng: random.Random) -> dict:
    return {s: rng.choice([0.0, rng.uniform(0, 1e-2), rng.uniform(0, 1.0)]) for s in "TfFdhD"}


def numerically_equal(a: DelayExpr, b: DelayExpr, samples: int = 256, seed: int = 0,
                      rel: float = 1e-12) -> bool:
    """True when ``a`` and ``b`` evaluate alike on seeded random non-negative parameters."""
    rng = random.Random(seed)
    for _ in range(samples):
        p = _sample_params(rng)
        x, y = evaluate(a, p), evaluate(b, p)
        if abs(x - y) > rel * max(1.0, abs(x), abs(y)):
            return False
    return True


def derive_handover_delay(pid) -> Derivation:
    """First packet via the new path minus the start of service interruption."""
    spec = timeline(pid)
    arrivals = [spec.event(n).timestamp for n in spec.first_packet_events]
    first = arrivals[0] if len(arrivals) == 1 else Min(tuple(arrivals))
    start_event = spec.event(spec.interruption)
    start = start_event.completion if spec.interruption_at_completion else start_event.timestamp
    derived = subtract_linear(first, start)
    return Derivation(spec.id, derived, spec.handover_delay,
                      numerically_equal(derived, spec.handover_delay))


def derive_packet_loss_window() -> Derivation:
    spec = timeline(ProtocolId.MIPV6)
    first = spec.event("Packets sent by CNs are received").timestamp
    derived = subtract_linear(first, MIPV6_LAST_OLD_PATH_PACKET)
    return Derivation(spec.id, derived, spec.packet_loss_window,
                      numerically_equal(derived, spec.packet_loss_window))


@dataclass(frozen=True)
class ChainDiscrepancy:
    predecessors: tuple
    event: str
    expected: DelayExpr
    listed: DelayExpr

    def __str__(self):
        return (f"{' + '.join(self.predecessors)} -> {self.event}: expected "
                f"{canonical_form(self.expected)}, table lists {canonical_form(self.listed)}")


@dataclass
class ConsistencyReport:
    protocol: Optional[ProtocolId]
    checked: int = 0
    discrepancies: list = field(default_factory=list)
    unchecked: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.discrepancies


def check_chain_consistency(spec: ProtocolSpec) -> ConsistencyReport:
    """Check every row against its causal predecessors.

    A row's expected timestamp is the latest completion (timestamp + delay)
    among its predecessors; rows with no predecessor are listed as unchecked.
    """
    report = ConsistencyReport(getattr(spec, "id", None))
    by_name = {e.name: e for e in spec.events}
    for ev in spec.events:
        if not ev.after:
            report.unchecked.append(ev.name)
            continue
        preds = [by_name.get(n) for n in ev.after]
        if any(p is None for p in preds):
            report.unchecked.append(ev.name)
            continue
        done = [p.completion for p in preds]
        expected = done[0] if len(done) == 1 else Max(tuple(done))
        report.checked += 1
        if not equivalent(expected, ev.timestamp):
            report.discrepancies.append(ChainDiscrepancy(ev.after, ev.name, expected, ev.timestamp))
    return report


@lru_cache(maxsize=None)
def all_specs() -> tuple:
    return tuple(timeline(p) for p in PROTOCOLS)


__all__ = [
    "ProtocolId", "PROTOCOLS", "Classification", "TimelineEvent", "ProtocolSpec",
    "timeline", "handover_delay", "signaling_delay", "packet_loss",
    "smipv6_rerouting_margin", "derive_handover_delay", "derive_packet_loss_window",
    "check_chain_consistency", "ConsistencyReport", "ChainDiscrepancy", "numerically_equal",
    "ZERO", "Linear", "Max",
]
