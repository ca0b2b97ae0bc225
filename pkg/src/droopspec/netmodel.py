"""Network description parsing, per-unit normalization, and validation.

A microgrid is described by a JSON document (see ``parse_network``) listing the
per-unit base, the buses (inverter-bearing or passive), and the lines. All
electrical quantities are normalized to the declared base so that downstream
matrix construction works on dimensionless per-unit values.

The spectral decomposition used elsewhere in this package is exact only when
the R/X ratio is uniform across lines and the frequency/voltage droop ratio
m/n is uniform across inverters; ``validate`` enforces both (strictly, with no
averaging fallback).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

__all__ = [
    "BaseSystem",
    "InverterRecord",
    "LineRecord",
    "NetworkModel",
    "Violation",
    "ParseError",
    "ValidationError",
    "parse_network",
    "validate",
    "serialize_network",
    "DEFAULT_OMEGA_C",
    "UNIFORMITY_RTOL",
]

# Power-controller low-pass cutoff used when the document does not give one.
DEFAULT_OMEGA_C = 31.42  # rad/s

# Uniformity of rho and k is a hard precondition of the modal theory; fail
# strictly rather than average away small mismatches.
UNIFORMITY_RTOL = 1e-6


class ParseError(ValueError):
    """Malformed or internally inconsistent network document."""


class ValidationError(ValueError):
    """Raised by parse_network when the parsed model violates invariants."""

    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        msg = "; ".join(f"{v.code}: {v.message}" for v in violations)
        super().__init__(f"invalid network: {msg}")


@dataclass(frozen=True)
class Violation:
    """One validation finding. Violations are data, not exceptions."""

    code: str
    message: str


@dataclass(frozen=True)
class BaseSystem:
    """Per-unit base quantities.

    ``impedance_ohm`` is derived exactly as voltage^2 / power. For three-phase
    systems the voltage base must be the line-to-line voltage for the usual
    Z = U^2/S convention to hold.
    """

    voltage_v: float
    power_va: float
    omega0: float  # nominal angular frequency, rad/s

    def __post_init__(self) -> None:
        for name in ("voltage_v", "power_va", "omega0"):
            if not getattr(self, name) > 0:
                raise ParseError(f"base.{name} must be strictly positive")

    @property
    def impedance_ohm(self) -> float:
        return self.voltage_v**2 / self.power_va


@dataclass(frozen=True)
class InverterRecord:
    """Droop settings of one grid-forming inverter.

    m and n are stored as per-unit fractions (a 1% droop is 0.01): per-unit
    frequency per per-unit real power, per-unit voltage per per-unit reactive
    power. tau is the power measurement filter time constant in seconds.
    """

    bus_id: str
    m: float
    n: float
    tau: float

    @property
    def k(self) -> float:
        """Frequency-to-voltage droop ratio m/n (dimensionless)."""
        return self.m / self.n


@dataclass(frozen=True)
class LineRecord:
    """One line, per-unit series impedance R + jX.

    ``length_km`` is retained when the document gave SI per-km data; it only
    feeds length sweeps and is excluded from equality so that per-unit round
    trips compare clean.
    """

    from_bus: str
    to_bus: str
    r_pu: float
    x_pu: float
    length_km: float | None = field(default=None, compare=False)

    @property
    def rho(self) -> float:
        return self.r_pu / self.x_pu

    @property
    def key(self) -> tuple[str, str]:
        """Undirected endpoint pair, order-normalized."""
        return (self.from_bus, self.to_bus) if self.from_bus <= self.to_bus \
            else (self.to_bus, self.from_bus)

    @property
    def label(self) -> str:
        return f"{self.from_bus}-{self.to_bus}"

    def inductance_pu(self, omega0: float) -> float:
        """Per-unit inductance X / omega0 at the given base frequency."""
        return self.x_pu / omega0


@dataclass(frozen=True)
class NetworkModel:
    """Validated, per-unit network.

    Buses are ordered with inverter buses first (in document order), then
    passive buses; every matrix in this package indexes rows in this order.
    Instances are immutable and safe to share across threads.
    """

    base: BaseSystem
    buses: tuple[str, ...]
    inverters: tuple[InverterRecord, ...]
    lines: tuple[LineRecord, ...]
    rho: float      # system R/X ratio (uniform across lines)
    k: float        # system droop ratio m/n (uniform across inverters)
    omega_c: float  # power-filter cutoff shared by all inverters, rad/s

    @property
    def inverter_count(self) -> int:
        return len(self.inverters)

    @property
    def inverter_buses(self) -> tuple[str, ...]:
        return tuple(inv.bus_id for inv in self.inverters)

    @property
    def passive_buses(self) -> tuple[str, ...]:
        inv = set(self.inverter_buses)
        return tuple(b for b in self.buses if b not in inv)

    def bus_index(self, bus_id: str) -> int:
        return self.buses.index(bus_id)

    def line_between(self, a: str, b: str) -> LineRecord | None:
        key = (a, b) if a <= b else (b, a)
        for line in self.lines:
            if line.key == key:
                return line
        return None


def _require(cond: bool, where: str, what: str) -> None:
    if not cond:
        raise ParseError(f"{where}: {what}")


def _as_number(obj: dict, where: str, key: str) -> float:
    _require(key in obj, where, f"missing required field '{key}'")
    val = obj[key]
    _require(isinstance(val, (int, float)) and not isinstance(val, bool)
             and math.isfinite(val), where, f"field '{key}' must be a finite number")
    return float(val)


def _parse_line(entry: dict, idx: int, base: BaseSystem) -> LineRecord:
    where = f"lines[{idx}]"
    _require(isinstance(entry, dict), where, "must be an object")
    for key in ("from", "to"):
        _require(key in entry, where, f"missing required field '{key}'")
    frm, to = str(entry["from"]), str(entry["to"])

    si_keys = {"length_km", "R_ohm_per_km", "L_H_per_km"}
    pu_keys = {"R_pu", "X_pu"}
    have_si = si_keys & entry.keys()
    have_pu = pu_keys & entry.keys()
    _require(not (have_si and have_pu), where,
             "mix of SI-per-km and per-unit impedance fields in one line record")
    if have_pu:
        _require(have_pu == pu_keys, where, "per-unit lines need both R_pu and X_pu")
        r_pu = _as_number(entry, where, "R_pu")
        x_pu = _as_number(entry, where, "X_pu")
        length = None
    else:
        _require(have_si == si_keys, where,
                 "SI lines need length_km, R_ohm_per_km and L_H_per_km")
        length = _as_number(entry, where, "length_km")
        r_km = _as_number(entry, where, "R_ohm_per_km")
        l_km = _as_number(entry, where, "L_H_per_km")
        zb = base.impedance_ohm
        r_pu = r_km * length / zb
        x_pu = base.omega0 * l_km * length / zb
    return LineRecord(from_bus=frm, to_bus=to, r_pu=r_pu, x_pu=x_pu,
                      length_km=length)


def parse_network(text: str) -> NetworkModel:
    """Parse a network document and return a validated per-unit model.

    The document is UTF-8 JSON with top-level keys:

    * ``base`` -- ``{voltage_V, rating_VA, frequency_Hz}``
    * ``power_filter_cutoff_rad_s`` -- optional, default 31.42
    * ``buses`` -- ``[{id, inverter?: {m_pct, n_pct} | {m_pu, n_pu}}]``
    * ``lines`` -- each with ``from``/``to`` plus either the SI triplet
      ``length_km, R_ohm_per_km, L_H_per_km`` or the per-unit pair
      ``R_pu, X_pu`` (never mixed within one record)

    Raises ParseError for malformed documents and ValidationError (carrying
    the violation list) when the parsed model breaks a network invariant.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"document is not valid JSON: {exc}") from exc
    _require(isinstance(doc, dict), "document", "top level must be an object")
    _require("base" in doc, "document", "missing required field 'base'")
    b = doc["base"]
    _require(isinstance(b, dict), "base", "must be an object")
    base = BaseSystem(
        voltage_v=_as_number(b, "base", "voltage_V"),
        power_va=_as_number(b, "base", "rating_VA"),
        omega0=2.0 * math.pi * _as_number(b, "base", "frequency_Hz"),
    )

    omega_c = float(doc.get("power_filter_cutoff_rad_s", DEFAULT_OMEGA_C))
    _require(omega_c > 0, "document", "power_filter_cutoff_rad_s must be positive")
    tau = 1.0 / omega_c

    _require("buses" in doc and isinstance(doc["buses"], list) and doc["buses"],
             "document", "missing or empty 'buses' array")
    inverter_buses: list[str] = []
    passive_buses: list[str] = []
    inverters: list[InverterRecord] = []
    seen: set[str] = set()
    for i, entry in enumerate(doc["buses"]):
        where = f"buses[{i}]"
        _require(isinstance(entry, dict) and "id" in entry, where,
                 "must be an object with an 'id'")
        bus_id = str(entry["id"])
        _require(bus_id not in seen, where, f"duplicate bus id '{bus_id}'")
        seen.add(bus_id)
        if "inverter" in entry and entry["inverter"] is not None:
            inv = entry["inverter"]
            _require(isinstance(inv, dict), where, "'inverter' must be an object")
            if "m_pct" in inv or "n_pct" in inv:
                m = _as_number(inv, where, "m_pct") / 100.0
                n = _as_number(inv, where, "n_pct") / 100.0
            else:
                m = _as_number(inv, where, "m_pu")
                n = _as_number(inv, where, "n_pu")
            inverters.append(InverterRecord(bus_id=bus_id, m=m, n=n, tau=tau))
            inverter_buses.append(bus_id)
        else:
            passive_buses.append(bus_id)

    _require("lines" in doc and isinstance(doc["lines"], list),
             "document", "missing 'lines' array")
    lines = [_parse_line(entry, i, base) for i, entry in enumerate(doc["lines"])]
    for line in lines:
        for end in (line.from_bus, line.to_bus):
            _require(end in seen, f"line {line.label}", f"unknown bus '{end}'")

    # Inverter buses first, then passive, each group in document order.
    buses = tuple(inverter_buses + passive_buses)
    rho = lines[0].rho if lines else 0.0
    k = inverters[0].k if inverters else 1.0
    model = NetworkModel(base=base, buses=buses, inverters=tuple(inverters),
                         lines=tuple(lines), rho=rho, k=k, omega_c=omega_c)
    violations = validate(model)
    if violations:
        raise ValidationError(violations)
    return model


def _components(model: NetworkModel) -> list[list[str]]:
    """Connected components of the undirected bus graph, document order."""
    adjacency: dict[str, set[str]] = {b: set() for b in model.buses}
    for line in model.lines:
        if line.from_bus in adjacency and line.to_bus in adjacency:
            adjacency[line.from_bus].add(line.to_bus)
            adjacency[line.to_bus].add(line.from_bus)
    unvisited = list(model.buses)
    comps: list[list[str]] = []
    while unvisited:
        stack = [unvisited[0]]
        comp: set[str] = set()
        while stack:
            node = stack.pop()
            if node in comp:
                continue
            comp.add(node)
            stack.extend(adjacency[node] - comp)
        comps.append([b for b in model.buses if b in comp])
        unvisited = [b for b in unvisited if b not in comp]
    return comps


def validate(model: NetworkModel) -> list[Violation]:
    """Check all network invariants; returns an empty list iff they hold.

    Each violation carries a machine-readable code (NONUNIFORM_RHO,
    NONUNIFORM_K, DISCONNECTED, ...) and a human message naming the offender.
    """
    out: list[Violation] = []

    inv_ids = [inv.bus_id for inv in model.inverters]
    bus_set = set(model.buses)
    for inv in model.inverters:
        if inv.bus_id not in bus_set:
            out.append(Violation("UNKNOWN_BUS",
                                 f"inverter references unknown bus '{inv.bus_id}'"))
        if not (inv.m > 0 and inv.n > 0):
            out.append(Violation("BAD_DROOP",
                                 f"inverter at bus {inv.bus_id}: droop gains must be > 0"))
        if not inv.tau > 0:
            out.append(Violation("BAD_TIME_CONSTANT",
                                 f"inverter at bus {inv.bus_id}: tau must be > 0"))
    dup = {b for b in inv_ids if inv_ids.count(b) > 1}
    for b in sorted(dup):
        out.append(Violation("DUPLICATE_INVERTER", f"bus {b} has multiple inverters"))

    seen_edges: set[tuple[str, str]] = set()
    for line in model.lines:
        if line.from_bus == line.to_bus:
            out.append(Violation("SELF_LOOP", f"line {line.label} connects a bus to itself"))
            continue
        if line.key in seen_edges:
            out.append(Violation("DUPLICATE_LINE", f"duplicate line {line.label}"))
        seen_edges.add(line.key)
        if line.r_pu < 0 or not line.x_pu > 0:
            out.append(Violation("BAD_LINE",
                                 f"line {line.label}: need R >= 0 and X > 0"))

    # Uniform R/X across lines (strict; the modal decomposition is exact only
    # under uniformity).
    good_lines = [ln for ln in model.lines if ln.x_pu > 0]
    if good_lines:
        rho0 = good_lines[0].rho
        scale = max(abs(rho0), 1.0)
        for line in good_lines[1:]:
            if abs(line.rho - rho0) > UNIFORMITY_RTOL * scale:
                out.append(Violation(
                    "NONUNIFORM_RHO",
                    f"line {line.label}: R/X = {line.rho:.6g} differs from "
                    f"system rho = {rho0:.6g}"))

    # Uniform droop ratio k = m/n across inverters.
    good_inv = [iv for iv in model.inverters if iv.m > 0 and iv.n > 0]
    if good_inv:
        k0 = good_inv[0].k
        for inv in good_inv[1:]:
            if abs(inv.k - k0) > UNIFORMITY_RTOL * abs(k0):
                out.append(Violation(
                    "NONUNIFORM_K",
                    f"inverter at bus {inv.bus_id}: m/n = {inv.k:.6g} differs "
                    f"from system k = {k0:.6g}"))

    comps = _components(model)
    if len(comps) > 1:
        parts = "; ".join("{" + ", ".join(c) + "}" for c in comps)
        out.append(Violation("DISCONNECTED",
                             f"bus graph has {len(comps)} components: {parts}"))

    if len(model.inverters) < 2:
        out.append(Violation("NO_DYNAMICS",
                             "need at least two inverters for nontrivial dynamics"))

    return out


def serialize_network(model: NetworkModel) -> str:
    """Canonical JSON form of a model: all per-unit, keys sorted.

    The output is itself a valid input document, so
    ``parse_network(serialize_network(m)) == m`` for any valid model.
    """
    doc = {
        "base": {
            "voltage_V": model.base.voltage_v,
            "rating_VA": model.base.power_va,
            "frequency_Hz": model.base.omega0 / (2.0 * math.pi),
        },
        "power_filter_cutoff_rad_s": model.omega_c,
        "buses": [
            {"id": b, "inverter": {"m_pu": inv.m, "n_pu": inv.n}}
            if (inv := next((i for i in model.inverters if i.bus_id == b), None))
            else {"id": b}
            for b in model.buses
        ],
        "lines": [
            {"from": ln.from_bus, "to": ln.to_bus, "R_pu": ln.r_pu, "X_pu": ln.x_pu}
            for ln in model.lines
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2)
