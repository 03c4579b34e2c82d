"""Pipeline from a scenario to metric tables, decision matrix and ranking."""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .delay import canonical_form, evaluate
from .errors import ValidationError
from .mcdm import DecisionMatrix, Ranking, ahp_weights, consistency_ratio, normalize_weights, topsis
from .protocols import ProtocolId, timeline
from .reference import PUBLISHED_BLOCKING, TABLE9_DOCUMENTED_ANOMALIES, TABLES
from .scenario import CRITERIA, CRITERION_LABELS, Scenario
from .teletraffic import (
    GuardChannelSpec,
    blocking_probabilities,
    dwell_rate,
    effective_channels,
    handoff_rate_fixed_point,
)

CR_LIMIT = 0.1


@dataclass(frozen=True)
class MetricsRow:
    protocol: ProtocolId
    packet_loss_window_s: float
    packets_lost: float
    handover_delay_s: float
    signaling_delay_s: float
    call_blocking_prob: float
    handover_blocking_prob: float
    price: float
    blocking_source: str = ""

    def criterion(self, name: str) -> float:
        return {
            "packet_loss": self.packets_lost,
            "handover_delay": self.handover_delay_s,
            "call_blocking": self.call_blocking_prob,
            "handover_blocking": self.handover_blocking_prob,
            "signaling_delay": self.signaling_delay_s,
            "price": self.price,
        }[name]


@dataclass(frozen=True)
class CellBlocking:
    channels: int
    guard: int
    lambda_new: float
    lambda_handoff: float
    mu_call: float
    eta_dwell: float
    p_block_new: float
    p_drop_handoff: float
    fixed_point_iterations: Optional[int] = None


def cell_spec(scenario: Scenario, handover: str, guard: Optional[int] = None,
              lambda_handoff: float = 0.0) -> GuardChannelSpec:
    cell = scenario.cell
    c_eff = effective_channels(handover, cell.channels_total)
    g = cell.guard_channels if guard is None else guard
    if c_eff <= g:
        raise ValidationError(
            f"{handover} handover leaves {c_eff} usable channels, not more than the "
            f"{g} guard channels (cell.guard_channels)"
        )
    mob = cell.mobility()
    return GuardChannelSpec(c_eff, g, cell.new_call_rate_per_s, lambda_handoff,
                            mob.mu_call, dwell_rate(mob))


def cell_blocking(scenario: Scenario, handover: str, guard: Optional[int] = None) -> CellBlocking:
    """Blocking pair for the scenario's cell under hard or soft handover."""
    spec = cell_spec(scenario, handover, guard)
    iterations = None
    rate = scenario.cell.handoff_rate_per_s
    if rate is None:
        rate, iterations = handoff_rate_fixed_point(spec)
    spec = spec.with_handoff_rate(rate)
    r = blocking_probabilities(spec)
    return CellBlocking(spec.channels, spec.guard, spec.lambda_new, spec.lambda_handoff,
                        spec.mu_call, spec.eta_dwell, r.p_block_new, r.p_drop_handoff, iterations)


def evaluate_metrics(scenario: Scenario, override_blocking: bool = False) -> list:
    params = scenario.params
    computed = {}
    rows = []
    for pid in scenario.protocols:
        spec = timeline(pid)
        if override_blocking:
            pb, pd = PUBLISHED_BLOCKING[pid]
            source = "published"
        elif pid in scenario.blocking_override:
            pb, pd = scenario.blocking_override[pid]
            source = "scenario override"
        else:
            kind = spec.classification.handover
            if kind not in computed:
                computed[kind] = cell_blocking(scenario, kind)
            pb, pd = computed[kind].p_block_new, computed[kind].p_drop_handoff
            source = f"guard-channel model, {kind} handover"
        window = evaluate(spec.packet_loss_window, params)
        rows.append(MetricsRow(
            protocol=pid,
            packet_loss_window_s=window,
            packets_lost=window * params.throughput_pkt_per_s,
            handover_delay_s=evaluate(spec.handover_delay, params),
            signaling_delay_s=evaluate(spec.signaling_delay, params),
            call_blocking_prob=pb,
            handover_blocking_prob=pd,
            price=float(scenario.prices[pid]),
            blocking_source=source,
        ))
    return rows


def build_decision_matrix(scenario: Scenario, override_blocking: bool = False,
                          rows: Optional[list] = None) -> DecisionMatrix:
    """Alternatives are the scenario's protocols; criteria as configured.

    The packet-loss criterion is packets lost per handover (window times
    throughput).
    """
    rows = evaluate_metrics(scenario, override_blocking) if rows is None else rows
    crit = scenario.mcdm.criteria
    values = np.array([[r.criterion(c) for c in crit] for r in rows])
    return DecisionMatrix(values, scenario.mcdm.directions,
                          tuple(str(r.protocol) for r in rows), crit)


# -- tables -----------------------------------------------------------------


@dataclass
class ReportTable:
    rows: list
    columns: list
    cells: list
    meta: dict = field(default_factory=dict)


TABLE_COLUMNS = ["Packet loss window (s)", "Handover delay (s)", "Call blocking probability",
                 "Handover blocking probability", "Signaling delay (s)", "Price"]


def scenario_meta(scenario: Scenario, **extra) -> dict:
    meta = {
        "tool": "handover",
        "version": __version__,
        "scenario": scenario.name,
        "scenario_sha256": scenario.digest,
        "provenance": dict(scenario.provenance),
    }
    if scenario.note:
        meta["note"] = scenario.note
    meta.update(extra)
    return meta


def metrics_table(scenario: Scenario, mode: str = "numeric", override_blocking: bool = False,
                  rows: Optional[list] = None) -> ReportTable:
    """Per-protocol metric table; ``parametric`` mode prints delay expressions."""
    if mode not in ("numeric", "parametric"):
        raise ValidationError(f"mode must be numeric or parametric, got {mode!r}")
    rows = evaluate_metrics(scenario, override_blocking) if rows is None else rows
    cells = []
    for r in rows:
        spec = timeline(r.protocol)
        if mode == "parametric":
            delays = [canonical_form(spec.packet_loss_window), canonical_form(spec.handover_delay)]
            sig = canonical_form(spec.signaling_delay)
        else:
            delays = [r.packet_loss_window_s, r.handover_delay_s]
            sig = r.signaling_delay_s
        cells.append(delays + [r.call_blocking_prob, r.handover_blocking_prob, sig, r.price])
    meta = scenario_meta(scenario, mode=mode,
                         blocking_source=sorted({r.blocking_source for r in rows}))
    if mode == "numeric" and scenario.reference:
        checks = reference_check(rows, scenario.reference)
        meta["reference"] = scenario.reference
        meta["reference_mismatches"] = [c.as_dict() for c in checks if not c.ok]
    return ReportTable([str(r.protocol) for r in rows], list(TABLE_COLUMNS), cells, meta)


def decision_table(dm: DecisionMatrix, meta: Optional[dict] = None) -> ReportTable:
    cols = [CRITERION_LABELS.get(c, c) + f" [{d}]" for c, d in zip(dm.criteria, dm.directions)]
    return ReportTable(list(dm.labels), cols, dm.values.tolist(), meta or {})


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def render_table(table: ReportTable, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps({"rows": table.rows, "columns": table.columns,
                           "cells": table.cells, "meta": table.meta}, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["Algorithm"] + table.columns)
        for label, row in zip(table.rows, table.cells):
            w.writerow([label] + [repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()
    if fmt != "text":
        raise ValidationError(f"unknown format {fmt!r}; expected text, csv or json")
    grid = [["Algorithm"] + table.columns]
    grid += [[label] + [_fmt(v) for v in row] for label, row in zip(table.rows, table.cells)]
    widths = [max(len(r[i]) for r in grid) for i in range(len(grid[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in grid]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def read_csv_table(text: str) -> ReportTable:
    """Inverse of ``render_table(..., "csv")``; numeric cells come back as floats."""
    reader = list(csv.reader(io.StringIO(text)))
    if not reader:
        return ReportTable([], [], [])
    header, body = reader[0], reader[1:]

    def cell(v):
        try:
            return float(v)
        except ValueError:
            return v

    return ReportTable([r[0] for r in body], header[1:], [[cell(v) for v in r[1:]] for r in body])


# -- reference comparison ---------------------------------------------------


@dataclass(frozen=True)
class CellCheck:
    protocol: ProtocolId
    column: str
    computed: float
    published: float
    tolerance: float
    documented_anomaly: bool = False

    @property
    def diff(self) -> float:
        return self.computed - self.published

    @property
    def ok(self) -> bool:
        return abs(self.diff) <= self.tolerance

    def as_dict(self) -> dict:
        return {"protocol": str(self.protocol), "column": self.column, "computed": self.computed,
                "published": self.published, "diff": self.diff,
                "documented_anomaly": self.documented_anomaly}


def reference_check(rows, reference: str, tolerance: float = 1e-6) -> list:
    """Compare delay columns with a published table (``table8`` or ``table9``)."""
    table = TABLES[reference]
    anomalies = TABLE9_DOCUMENTED_ANOMALIES if reference == "table9" else set()
    out = []
    for r in rows:
        loss, ho, sig = table[r.protocol]
        for col, computed, published in (("packet_loss", r.packet_loss_window_s, loss),
                                          ("handover_delay", r.handover_delay_s, ho),
                                          ("signaling_delay", r.signaling_delay_s, sig)):
            out.append(CellCheck(r.protocol, col, computed, published, tolerance,
                                 (r.protocol, col) in anomalies))
    return out


# -- ranking ----------------------------------------------------------------


@dataclass
class RankReport:
    scenario: Scenario
    matrix: DecisionMatrix
    weights: np.ndarray
    weight_source: str
    ranking: Ranking
    lambda_max: Optional[float] = None
    consistency: Optional[tuple] = None
    warnings: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "criteria": list(self.matrix.criteria),
            "directions": list(self.matrix.directions),
            "weights": self.weights.tolist(),
            "weight_source": self.weight_source,
            "lambda_max": self.lambda_max,
            "consistency": None if self.consistency is None else
            {"CI": self.consistency[0], "CR": self.consistency[1]},
            "decision_matrix": {"rows": list(self.matrix.labels), "cells": self.matrix.values.tolist()},
            "closeness": dict(zip(self.ranking.labels, self.ranking.closeness.tolist())),
            "order": self.ranking.ordered_labels,
            "ties": self.ranking.tie_notes,
            "warnings": self.warnings,
            "meta": scenario_meta(self.scenario),
        }

    def render(self) -> str:
        out = [f"Scenario {self.scenario.name}", "", "Decision matrix",
               render_table(decision_table(self.matrix)), "Weights (" + self.weight_source + ")"]
        for c, w in zip(self.matrix.criteria, self.weights):
            out.append(f"  {CRITERION_LABELS.get(c, c):<32} {w:.4f}")
        if self.consistency is not None:
            ci, cr = self.consistency
            out.append(f"  lambda_max = {self.lambda_max:.6f}, CI = {ci:.6f}, CR = {cr:.4f}")
        out += ["", "Closeness to ideal"]
        for rank, i in enumerate(self.ranking.order, 1):
            out.append(f"  {rank}. {self.ranking.labels[i]:<10} {self.ranking.closeness[i]:.6f}")
        for note in self.ranking.tie_notes + self.warnings:
            out.append(f"  note: {note}")
        return "\n".join(out) + "\n"


def run_rank(scenario: Scenario, weights=None, pairwise=None,
             override_blocking: bool = False) -> RankReport:
    """Decision matrix, weights (direct or AHP) and TOPSIS in one go.

    Explicit ``weights`` or ``pairwise`` take precedence over those in the
    scenario. A consistency ratio above 0.1 is reported as a warning.
    """
    dm = build_decision_matrix(scenario, override_blocking)
    n = len(dm.criteria)
    notes = []
    lam = cons = None
    if weights is not None:
        w, source = normalize_weights(weights, n), "given"
    elif pairwise is not None or (scenario.mcdm.pairwise is not None and scenario.mcdm.weights is None):
        matrix = pairwise if pairwise is not None else scenario.mcdm.pairwise
        w, lam = ahp_weights(matrix)
        cons = consistency_ratio(matrix)
        source = "AHP eigenvector"
        if cons[1] > CR_LIMIT:
            msg = f"pairwise judgements inconsistent: CR = {cons[1]:.3f} > {CR_LIMIT}"
            notes.append(msg)
            warnings.warn(msg, stacklevel=2)
        if len(w) != n:
            raise ValidationError(f"pairwise matrix is {len(w)}x{len(w)} but {n} criteria are selected")
    elif scenario.mcdm.weights is not None:
        w, source = normalize_weights(scenario.mcdm.weights, n), "scenario"
    else:
        raise ValidationError("no weights: give mcdm.weights, a [pairwise] section, "
                              "--weights or --pairwise")
    ranking = topsis(dm, w)
    if override_blocking:
        notes.append("blocking columns replaced by published values")
    return RankReport(scenario, dm, np.asarray(w), source, ranking, lam, cons, notes)
