"""Scenario files: sectioned ``key = value`` text with SI units in key names.

Example (the shipped scenarios live in ``handover/data``)::

    [links]
    wireless_length_m = 500
    wireless_speed_m_per_s = 2e8
    ...
    [delays]
    processing_T_s = 2.5e-3

Every number derived from the file (the link delays f, F, d, the dwell
rate, the handoff rate) gets a provenance note explaining where it came from.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .delay import ScenarioParams
from .errors import InvalidParameterError, ScenarioError, ValidationError
from .mcdm import validate_pairwise
from .protocols import PROTOCOLS, ProtocolId
from .reference import PRICE, TABLES
from .teletraffic import MobilityParams, dwell_rate

CRITERIA = ("packet_loss", "handover_delay", "call_blocking",
            "handover_blocking", "signaling_delay", "price")

CRITERION_LABELS = {
    "packet_loss": "Packet lost",
    "handover_delay": "Handover delay",
    "call_blocking": "Call blocking probability",
    "handover_blocking": "Handover blocking probability",
    "signaling_delay": "Signaling delay",
    "price": "Price",
}

_SCHEMA = {
    "scenario": {"name": False, "reference": False, "note": False, "protocols": False},
    "links": {k: True for k in (
        "wireless_length_m", "wireless_speed_m_per_s",
        "wired_local_length_m", "wired_local_speed_m_per_s",
        "wired_global_length_m", "wired_global_speed_m_per_s")},
    "delays": {"processing_T_s": True, "l2_handover_h_s": False, "dad_D_s": False},
    "traffic": {"throughput_pkt_per_s": True},
    "cell": {"channels_total": True, "guard_channels": True, "speed_kmh": True,
             "radius_km": True, "holding_time_s": True, "new_call_rate_per_s": True,
             "handoff_rate_per_s": False},
    "costs": None,              # protocol names
    "mcdm": {"criteria": False, "weights": False},
    "pairwise": None,           # row_1 .. row_n
    "weights": None,            # criterion names
    "blocking_override": None,  # protocol names
}
_REQUIRED_SECTIONS = ("links", "delays", "traffic", "cell")


def propagation_delay(length_m: float, speed_m_per_s: float) -> float:
    if not speed_m_per_s > 0:
        raise InvalidParameterError(f"propagation speed must be positive, got {speed_m_per_s}")
    if not length_m >= 0:
        raise InvalidParameterError(f"link length must be non-negative, got {length_m}")
    return length_m / speed_m_per_s


@dataclass(frozen=True)
class CellConfig:
    channels_total: int
    guard_channels: int
    speed_kmh: float
    radius_km: float
    holding_time_s: float
    new_call_rate_per_s: float
    handoff_rate_per_s: Optional[float] = None

    def mobility(self) -> MobilityParams:
        return MobilityParams(self.speed_kmh / 3.6, self.radius_km * 1000.0, self.holding_time_s)


@dataclass
class McdmConfig:
    criteria: tuple = CRITERIA
    directions: tuple = ("cost",) * len(CRITERIA)
    weights: Optional[np.ndarray] = None
    pairwise: Optional[np.ndarray] = None


@dataclass
class Scenario:
    name: str
    params: ScenarioParams
    cell: CellConfig
    prices: dict
    mcdm: McdmConfig
    blocking_override: dict = field(default_factory=dict)
    protocols: tuple = PROTOCOLS
    reference: Optional[str] = None
    note: str = ""
    provenance: dict = field(default_factory=dict)
    digest: str = ""
    source: Optional[str] = None


class _Located:
    """Raw key/value access that remembers where each value sits in the text."""

    _KEY = re.compile(r"^(\s*)([^=:#;\s][^=:]*?)\s*[=:]\s*")
    _SECTION = re.compile(r"^\s*\[([^\]]+)\]")

    def __init__(self, text: str):
        self.where = {}
        section = None
        for lineno, line in enumerate(text.splitlines(), 1):
            m = self._SECTION.match(line)
            if m:
                section = m.group(1).strip()
                continue
            m = self._KEY.match(line)
            if m and section is not None:
                self.where[(section, m.group(2))] = (lineno, m.end() + 1)

    def error(self, message, section, key=None):
        line, col = self.where.get((section, key), (None, None)) if key else (None, None)
        path = f"{section}.{key}" if key else section
        return ScenarioError(message, key=path, line=line, column=col)


def _parse_config(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                   comment_prefixes=("#", ";"), strict=True,
                                   default_section="__no_defaults__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ScenarioError("key outside any [section]", line=e.lineno, column=1) from None
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ScenarioError(f"cannot parse line {line!r}; expected 'key = value'",
                            line=lineno, column=1) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as e:
        raise ScenarioError(str(e).split(":")[-1].strip() or "duplicate entry",
                            line=e.lineno, column=1) from None
    return cp


def _number(raw: str) -> float:
    raw = raw.strip()
    try:
        return float(Fraction(raw)) if "/" in raw else float(raw)
    except (ValueError, ZeroDivisionError):
        raise ValueError(raw) from None


class _Reader:
    def __init__(self, text: str):
        self.cp = _parse_config(text)
        self.loc = _Located(text)

    def check_known(self, allowed=_SCHEMA):
        for section in self.cp.sections():
            if section not in allowed:
                raise self.loc.error(f"unknown section [{section}]", section)
            keys = allowed[section]
            if keys is None:
                continue
            for key in self.cp[section]:
                if key not in keys:
                    raise self.loc.error(f"unknown key {key!r}", section, key)

    def has(self, section, key=None):
        if not self.cp.has_section(section):
            return False
        return key is None or self.cp.has_option(section, key)

    def text(self, section, key, default=None):
        return self.cp.get(section, key) if self.has(section, key) else default

    def number(self, section, key, default=None, *, required=False, positive=False,
               integer=False):
        if not self.has(section, key):
            if required:
                raise self.loc.error(f"missing required key {key!r} in [{section}]", section, key)
            return default
        raw = self.cp.get(section, key)
        try:
            value = _number(raw)
        except ValueError:
            raise self.loc.error(f"not a number: {raw!r}", section, key) from None
        if not math.isfinite(value):
            raise self.loc.error(f"value must be finite, got {raw!r}", section, key)
        if value < 0 or (positive and value == 0):
            bound = "positive" if positive else "non-negative"
            raise self.loc.error(f"value must be {bound}, got {raw!r}", section, key)
        if integer:
            if value != int(value):
                raise self.loc.error(f"value must be an integer, got {raw!r}", section, key)
            value = int(value)
        return value

    def numbers(self, section, key):
        raw = self.cp.get(section, key)
        try:
            return [_number(v) for v in raw.split(",") if v.strip()]
        except ValueError as e:
            raise self.loc.error(f"not a number: {e.args[0]!r}", section, key) from None


def _read_pairwise(r: _Reader, n: int) -> np.ndarray:
    keys = list(r.cp["pairwise"])
    rows = []
    for i in range(1, len(keys) + 1):
        key = f"row_{i}"
        if key not in keys:
            raise r.loc.error(f"expected keys row_1..row_{len(keys)}", "pairwise", keys[i - 1])
        row = r.numbers("pairwise", key)
        if len(row) != n:
            raise r.loc.error(f"row has {len(row)} entries, expected {n}", "pairwise", key)
        rows.append(row)
    if len(rows) != n:
        raise r.loc.error(f"pairwise matrix has {len(rows)} rows, expected {n}", "pairwise")
    a = np.array(rows)
    try:
        validate_pairwise(a)
    except ValidationError as e:
        bad = (a <= 0) | (np.abs(a * a.T - 1.0) > 1e-9) | (np.eye(n, dtype=bool) & (a != 1.0))
        row = int(np.argwhere(bad)[0][0]) + 1 if bad.any() else 1
        raise r.loc.error(str(e), "pairwise", f"row_{row}") from None
    return a


def _read_mcdm(r: _Reader) -> McdmConfig:
    cfg = McdmConfig()
    if r.has("mcdm", "criteria"):
        names, dirs = [], []
        for item in r.text("mcdm", "criteria").split(","):
            name, _, direction = item.strip().partition(":")
            name, direction = name.strip(), (direction.strip() or "cost")
            if name not in CRITERIA:
                raise r.loc.error(f"unknown criterion {name!r}; choose from {', '.join(CRITERIA)}",
                                  "mcdm", "criteria")
            if direction not in ("cost", "benefit"):
                raise r.loc.error(f"direction must be cost or benefit, got {direction!r}",
                                  "mcdm", "criteria")
            names.append(name)
            dirs.append(direction)
        if len(set(names)) != len(names):
            raise r.loc.error("criteria listed twice", "mcdm", "criteria")
        cfg.criteria, cfg.directions = tuple(names), tuple(dirs)
    n = len(cfg.criteria)
    if r.has("mcdm", "weights"):
        w = r.numbers("mcdm", "weights")
        if len(w) != n or any(x < 0 for x in w) or sum(w) <= 0:
            raise r.loc.error(f"need {n} non-negative weights with positive sum", "mcdm", "weights")
        cfg.weights = np.array(w) / sum(w)
    if r.has("weights"):
        if cfg.weights is not None:
            raise r.loc.error("weights given twice ([mcdm] weights and [weights])", "weights")
        cfg.weights = _weights_section(r, cfg.criteria)
    if r.has("pairwise"):
        cfg.pairwise = _read_pairwise(r, n)
    return cfg


def _weights_section(r: _Reader, criteria) -> np.ndarray:
    sec = r.cp["weights"]
    for key in sec:
        if key not in criteria:
            raise r.loc.error(f"weight for unknown or unselected criterion {key!r}", "weights", key)
    w = [r.number("weights", c, default=0.0) for c in criteria]
    if sum(w) <= 0:
        raise r.loc.error("weights must not all be zero", "weights")
    return np.array(w) / sum(w)


def _read_protocol_map(r: _Reader, section: str) -> dict:
    out = {}
    for key in r.cp[section]:
        try:
            pid = ProtocolId.parse(key)
        except ValueError as e:
            raise r.loc.error(str(e), section, key) from None
        out[pid] = key
    return out


def load_scenario(text: str, *, source: Optional[str] = None) -> Scenario:
    """Parse and validate scenario text into a fully resolved :class:`Scenario`."""
    r = _Reader(text)
    r.check_known()
    for s in _REQUIRED_SECTIONS:
        if not r.has(s):
            raise ScenarioError(f"missing required section [{s}]", key=s)

    prov = {}
    req = dict(required=True)
    link = {}
    for kind, sym in (("wireless", "d"), ("wired_local", "f"), ("wired_global", "F")):
        length = r.number("links", f"{kind}_length_m", **req)
        speed = r.number("links", f"{kind}_speed_m_per_s", positive=True, **req)
        link[sym] = propagation_delay(length, speed)
        prov[sym] = f"{kind}_length_m / {kind}_speed_m_per_s = {length:g} m / {speed:g} m/s"

    T = r.number("delays", "processing_T_s", **req)
    h = r.number("delays", "l2_handover_h_s", 0.0)
    D = r.number("delays", "dad_D_s", 1.0)
    prov["T"] = "delays.processing_T_s"
    prov["h"] = "delays.l2_handover_h_s" if r.has("delays", "l2_handover_h_s") else "default 0 s"
    prov["D"] = "delays.dad_D_s" if r.has("delays", "dad_D_s") else "default 1 s (worst-case DAD)"
    params = ScenarioParams(T_s=T, f_s=link["f"], F_s=link["F"], d_s=link["d"], h_s=h, D_s=D,
                            throughput_pkt_per_s=r.number("traffic", "throughput_pkt_per_s", **req))

    C = r.number("cell", "channels_total", integer=True, positive=True, **req)
    g = r.number("cell", "guard_channels", integer=True, **req)
    if g >= C:
        raise r.loc.error(f"guard_channels ({g}) must be less than channels_total ({C})",
                          "cell", "guard_channels")
    cell = CellConfig(
        channels_total=C,
        guard_channels=g,
        speed_kmh=r.number("cell", "speed_kmh", **req),
        radius_km=r.number("cell", "radius_km", positive=True, **req),
        holding_time_s=r.number("cell", "holding_time_s", positive=True, **req),
        new_call_rate_per_s=r.number("cell", "new_call_rate_per_s", **req),
        handoff_rate_per_s=r.number("cell", "handoff_rate_per_s"),
    )
    eta = dwell_rate(cell.mobility())
    prov["eta_dwell"] = (f"2 v / (pi r) with v = {cell.speed_kmh:g} km/h, r = {cell.radius_km:g} km "
                         f"-> {eta:.6g} 1/s")
    prov["mu_call"] = f"1 / holding_time_s = 1 / {cell.holding_time_s:g} s"
    prov["lambda_handoff"] = ("cell.handoff_rate_per_s" if cell.handoff_rate_per_s is not None
                              else "fixed point of the handoff balance, per channel configuration")

    prices = dict(PRICE)
    if r.has("costs"):
        for pid, key in _read_protocol_map(r, "costs").items():
            prices[pid] = r.number("costs", key, required=True)
    prov["price"] = "[costs]" if r.has("costs") else "default 1000 / 1500 schedule"

    override = {}
    if r.has("blocking_override"):
        for pid, key in _read_protocol_map(r, "blocking_override").items():
            vals = r.numbers("blocking_override", key)
            if len(vals) != 2 or not all(0 <= v <= 1 for v in vals):
                raise r.loc.error("expected 'call_blocking, handover_blocking' probabilities",
                                  "blocking_override", key)
            override[pid] = tuple(vals)

    reference = r.text("scenario", "reference")
    if reference in ("", "none"):
        reference = None
    if reference is not None and reference not in TABLES:
        raise r.loc.error(f"reference must be one of {', '.join(TABLES)} or none",
                          "scenario", "reference")

    protocols = PROTOCOLS
    if r.has("scenario", "protocols"):
        try:
            protocols = tuple(ProtocolId.parse(p) for p in r.text("scenario", "protocols").split(",")
                              if p.strip())
        except ValueError as e:
            raise r.loc.error(str(e), "scenario", "protocols") from None
        if not protocols or len(set(protocols)) != len(protocols):
            raise r.loc.error("protocol list must be non-empty without repeats",
                              "scenario", "protocols")

    return Scenario(
        protocols=protocols,
        name=r.text("scenario", "name", source or "scenario"),
        params=params,
        cell=cell,
        prices=prices,
        mcdm=_read_mcdm(r),
        blocking_override=override,
        reference=reference,
        note=r.text("scenario", "note", ""),
        provenance=prov,
        digest=hashlib.sha256(text.encode()).hexdigest(),
        source=source,
    )


def load_scenario_file(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except UnicodeDecodeError as e:
        raise ScenarioError(f"scenario file is not UTF-8 text: {e.reason}", key=str(path)) from None
    return load_scenario(text, source=str(path))


def load_weights(text: str, criteria=CRITERIA) -> np.ndarray:
    """Weights file: a ``[weights]`` section keyed by criterion name."""
    r = _Reader(text)
    r.check_known({"weights": None})
    if not r.has("weights"):
        raise ScenarioError("missing [weights] section", key="weights")
    return _weights_section(r, tuple(criteria))


def load_pairwise(text: str) -> tuple:
    """Pairwise file: ``[pairwise]`` with ``row_i = v1, v2, ...`` and optional ``criteria``.

    Returns ``(matrix, criteria or None)``.
    """
    r = _Reader(text)
    r.check_known({"pairwise": None})
    if not r.has("pairwise"):
        raise ScenarioError("missing [pairwise] section", key="pairwise")
    criteria = None
    if r.has("pairwise", "criteria"):
        criteria = tuple(c.strip() for c in r.cp.get("pairwise", "criteria").split(","))
        r.cp.remove_option("pairwise", "criteria")
        for c in criteria:
            if c not in CRITERIA:
                raise r.loc.error(f"unknown criterion {c!r}", "pairwise", "criteria")
    n = len(criteria) if criteria else len(list(r.cp["pairwise"]))
    return _read_pairwise(r, n), criteria


def shipped_path(name: str) -> Path:
    """Path of a file shipped in ``handover/data`` (e.g. ``scenario_a.ini``)."""
    return Path(str(resources.files("handover") / "data" / name))


def shipped_scenario(which: str) -> Scenario:
    return load_scenario_file(shipped_path(f"scenario_{which.lower()}.ini"))

