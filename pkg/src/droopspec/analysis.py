"""End-to-end stability analysis, parameter sweeps, and the mu_cr surface.

Pipeline for one network: parse -> validate -> susceptance -> Kron -> weighted
spectrum -> mu_cr -> clusters -> state-matrix cross-check -> report. Sweeps
re-evaluate only the spectrum per point; mu_cr depends on (rho, k, tau,
omega0) alone and is computed once per sweep.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .admittance import susceptance_set
from .charpoly import CharPolyModel, mu_critical
from .netmodel import NetworkModel
from .spectral import (
    CLUSTER_THRESHOLD,
    ClusterDescriptor,
    droop_matrix,
    extract_clusters,
    weighted_spectrum,
)
from .statespace import assemble_state_matrix, oracle_eigenvalues, theorem1_check

__all__ = [
    "StabilityReport",
    "SweepResult",
    "MuCrSurface",
    "analyze_network",
    "sweep_line_length",
    "sweep_droop",
    "mu_cr_surface",
    "find_crossings",
]

UNIT_CONVENTION_NOTE = (
    "mu values are eigenvalues of diag(m_i*omega0) @ B' with B' the reduced "
    "1/X per-unit Laplacian; both droop diagonals carry the omega0 factor, "
    "so mu and mu_cr are in rad/s and the droop ratio k = m/n stays "
    "dimensionless")


@dataclass(frozen=True)
class StabilityReport:
    """Everything the analyze pipeline produces for one network."""

    network: dict
    unit_convention: str
    mu_cr: float
    mu: tuple[float, ...]
    eigenvectors: tuple[tuple[float, ...], ...]  # per mu, same order
    clusters: tuple[ClusterDescriptor, ...]
    cluster_verdicts: tuple[str, ...]            # per cluster, vs mu_cr
    verdict: str                                  # stable | unstable
    oracle_status: str                            # PASS | FAIL | SKIPPED
    oracle_max_root_distance: float
    oracle_max_eig_real: float
    paths_agree: bool
    provenance: dict

    def to_dict(self) -> dict:
        clusters = []
        for desc, verdict in zip(self.clusters, self.cluster_verdicts):
            clusters.append({
                "mu": desc.mu,
                "rank": desc.rank,
                "members": [{"bus": b, "component": c} for b, c in desc.members],
                "critical_lines": list(desc.critical_lines),
                "degenerate": desc.degenerate,
                "verdict": verdict,
            })
        return {
            "network": self.network,
            "unit_convention": self.unit_convention,
            "mu_cr": self.mu_cr,
            "spectrum": {
                "mu": list(self.mu),
                "eigenvectors": [list(v) for v in self.eigenvectors],
            },
            "clusters": clusters,
            "verdict": self.verdict,
            "oracle": {
                "theorem1": self.oracle_status,
                "max_root_distance": self.oracle_max_root_distance,
                "max_eig_real_part": self.oracle_max_eig_real,
                "agrees_with_spectral_path": self.paths_agree,
            },
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_text(self) -> str:
        lines = [
            f"network: {self.network['bus_count']} buses, "
            f"{self.network['line_count']} lines, "
            f"{self.network['inverter_count']} inverters",
            f"rho = {self.network['rho']:.4f}   k = {self.network['k']:.4f}   "
            f"omega_c = {self.network['omega_c']:.4f} rad/s",
            f"mu_cr = {self.mu_cr:.2f}",
            "mu (ascending): " + ", ".join(f"{v:.2f}" for v in self.mu),
            "",
            "clusters (most critical first):",
        ]
        for desc, verdict in zip(self.clusters, self.cluster_verdicts):
            members = ", ".join(f"{b}({c:+.3f})" for b, c in desc.members)
            crit = ", ".join(desc.critical_lines) or "-"
            flag = " [degenerate]" if desc.degenerate else ""
            lines.append(f"  #{desc.rank}: mu = {desc.mu:.2f} ({verdict}){flag}  "
                         f"members: {members}  critical lines: {crit}")
        lines += [
            "",
            f"verdict: {self.verdict.upper()}",
            f"oracle: theorem-1 {self.oracle_status}, "
            f"max eig real part = {self.oracle_max_eig_real:+.4f}, "
            f"paths agree: {self.paths_agree}",
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SweepResult:
    """Spectra along a one-parameter family of networks."""

    parameter: str
    values: np.ndarray
    mu_per_value: np.ndarray   # (len(values), m) ascending per row
    mu_cr: float               # constant across the sweep
    crossings: tuple[float, ...]  # parameter values where max mu = mu_cr

    def to_csv(self) -> str:
        m = self.mu_per_value.shape[1]
        header = self.parameter + "," + ",".join(f"mu_{i + 1}" for i in range(m))
        rows = [header]
        for v, mus in zip(self.values, self.mu_per_value):
            rows.append(",".join([repr(float(v))] + [repr(float(x)) for x in mus]))
        return "\n".join(rows) + "\n"

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "values": [float(v) for v in self.values],
            "mu": [[float(x) for x in row] for row in self.mu_per_value],
            "mu_cr": self.mu_cr,
            "crossings": list(self.crossings),
        }


@dataclass(frozen=True)
class MuCrSurface:
    """mu_cr over a (rho, k) grid; NaN rows mark bisection failures."""

    rho_values: np.ndarray
    k_values: np.ndarray
    mu_cr: np.ndarray  # (len(rho), len(k))
    failures: int

    @property
    def grid_min(self) -> float:
        return float(np.nanmin(self.mu_cr))

    def to_csv(self) -> str:
        rows = ["rho,k,mu_cr"]
        for i, rho in enumerate(self.rho_values):
            for j, k in enumerate(self.k_values):
                rows.append(f"{rho!r},{k!r},{self.mu_cr[i, j]!r}")
        argmin = np.unravel_index(np.nanargmin(self.mu_cr), self.mu_cr.shape)
        rows.append(f"# min mu_cr = {self.grid_min!r} at rho={self.rho_values[argmin[0]]!r}, "
                    f"k={self.k_values[argmin[1]]!r}; bisection failures = {self.failures}")
        return "\n".join(rows) + "\n"


def _charpoly_for(model: NetworkModel) -> CharPolyModel:
    return CharPolyModel(rho=model.rho, k=model.k, tau=1.0 / model.omega_c,
                         omega0=model.base.omega0)


def analyze_network(
    model: NetworkModel,
    cluster_threshold: float = CLUSTER_THRESHOLD,
    input_text: str | None = None,
) -> StabilityReport:
    """Run the full pipeline on a validated model.

    The verdict is unstable iff any nontrivial mu exceeds mu_cr; the state
    matrix provides the independent verdict (sign of the largest eigenvalue
    real part), and disagreement between the two paths is flagged loudly in
    the report rather than masked.
    """
    sus = susceptance_set(model)
    m_diag = droop_matrix(model)
    spectrum = weighted_spectrum(sus.b_prime, m_diag)
    cp = _charpoly_for(model)
    mu_cr = mu_critical(cp)
    clusters = extract_clusters(spectrum, threshold=cluster_threshold,
                                bus_ids=list(model.inverter_buses),
                                lines=list(model.lines))
    cluster_verdicts = tuple("unstable" if c.mu > mu_cr else "stable"
                             for c in clusters)
    verdict = "unstable" if spectrum.max_mu > mu_cr else "stable"

    ss = assemble_state_matrix(model, sus.b_prime)
    eigs = oracle_eigenvalues(ss)
    nontrivial = eigs[np.abs(eigs) > 1e-9 * np.abs(eigs).max()]
    max_eig_real = float(nontrivial.real.max())
    report1 = theorem1_check(model, spectrum, cp)
    oracle_verdict = "unstable" if max_eig_real > 0 else "stable"
    paths_agree = (oracle_verdict == verdict)

    raw = input_text if input_text is not None else ""
    provenance = {
        "input_sha256": hashlib.sha256(raw.encode()).hexdigest(),
        "tool": "droopspec",
        "version": __version__,
    }
    network_summary = {
        "bus_count": len(model.buses),
        "line_count": len(model.lines),
        "inverter_count": model.inverter_count,
        "rho": model.rho,
        "k": model.k,
        "omega_c": model.omega_c,
        "base": {
            "voltage_V": model.base.voltage_v,
            "rating_VA": model.base.power_va,
            "omega0_rad_s": model.base.omega0,
        },
    }
    return StabilityReport(
        network=network_summary,
        unit_convention=UNIT_CONVENTION_NOTE,
        mu_cr=float(mu_cr),
        mu=tuple(float(v) for v in spectrum.mu),
        eigenvectors=tuple(tuple(float(x) for x in spectrum.u[:, i])
                           for i in range(spectrum.u.shape[1])),
        clusters=tuple(clusters),
        cluster_verdicts=cluster_verdicts,
        verdict=verdict,
        oracle_status=report1.status,
        oracle_max_root_distance=report1.max_root_distance,
        oracle_max_eig_real=max_eig_real,
        paths_agree=paths_agree,
        provenance=provenance,
    )


def _mu_for_model(model: NetworkModel) -> np.ndarray:
    return weighted_spectrum(susceptance_set(model).b_prime,
                             droop_matrix(model)).mu


def _with_line_length(model: NetworkModel, line_label: str,
                      length_km: float) -> NetworkModel:
    """Model with one line's impedance set from a new length in km."""
    new_lines = []
    for line in model.lines:
        if line.label == line_label:
            factor = length_km / line.length_km
            line = replace(line, r_pu=line.r_pu * factor,
                           x_pu=line.x_pu * factor, length_km=length_km)
        new_lines.append(line)
    return replace(model, lines=tuple(new_lines))


def _with_droop(model: NetworkModel, bus_id: str, m_new: float) -> NetworkModel:
    """Model with one inverter's frequency droop replaced.

    Only the spectrum-side droop changes; the voltage droop keeps its base
    value, matching how single-droop variations are studied. mu_cr belongs to
    the base design and is not touched by the sweep.
    """
    new_inv = []
    for inv in model.inverters:
        if inv.bus_id == bus_id:
            inv = replace(inv, m=m_new)
        new_inv.append(inv)
    return replace(model, inverters=tuple(new_inv))


def find_crossings(
    values: np.ndarray,
    mu_branch: np.ndarray,
    mu_cr: float,
    refine=None,
    rtol: float = 1e-3,
) -> list[float]:
    """Parameter values where a mu branch crosses mu_cr.

    Grid intervals bracketing a sign change of (mu - mu_cr) are refined by
    bisection to ``rtol`` relative when a ``refine`` callable (parameter ->
    mu) is supplied; mu depends smoothly and monotonically on single line or
    droop parameters, so a bracketed crossing is unique within its interval.
    """
    out: list[float] = []
    diff = np.asarray(mu_branch, dtype=float) - mu_cr
    for i in range(len(values) - 1):
        lo_v, hi_v = float(values[i]), float(values[i + 1])
        f_lo, f_hi = diff[i], diff[i + 1]
        if f_lo == 0.0:
            out.append(lo_v)
            continue
        if f_lo * f_hi < 0:
            if refine is None:
                out.append(0.5 * (lo_v + hi_v))
                continue
            a, b = lo_v, hi_v
            fa = f_lo
            while (b - a) > rtol * max(abs(a), abs(b)):
                mid = 0.5 * (a + b)
                fm = refine(mid) - mu_cr
                if fa * fm <= 0:
                    b = mid
                else:
                    a, fa = mid, fm
            out.append(0.5 * (a + b))
    if len(diff) and diff[-1] == 0.0:
        out.append(float(values[-1]))
    return out


def sweep_line_length(
    model: NetworkModel,
    line_label: str,
    length_range: tuple[float, float],
    count: int,
) -> SweepResult:
    """Sweep one line's length in km, holding everything else fixed.

    The swept line must have been specified with SI per-km data so its
    impedance scales linearly with length. mu_cr is evaluated once for the
    whole sweep; it does not depend on topology or line lengths.
    """
    line = next((ln for ln in model.lines if ln.label == line_label), None)
    if line is None:
        labels = ", ".join(ln.label for ln in model.lines)
        raise KeyError(f"no line '{line_label}' in the network (have: {labels})")
    if line.length_km is None:
        raise ValueError(f"line {line_label} was specified in per-unit; "
                         "length sweeps need SI per-km line data")
    lo, hi = length_range
    if not (0 < lo <= hi):
        raise ValueError("length range must be positive")
    values = np.linspace(lo, hi, count)
    mu_cr = mu_critical(_charpoly_for(model))
    mu_rows = np.array([_mu_for_model(_with_line_length(model, line_label, v))
                        for v in values])

    def top_mu(length: float) -> float:
        return float(_mu_for_model(_with_line_length(model, line_label, length))[-1])

    crossings = find_crossings(values, mu_rows[:, -1], mu_cr, refine=top_mu)
    return SweepResult(parameter=f"line-length:{line_label}", values=values,
                       mu_per_value=mu_rows, mu_cr=float(mu_cr),
                       crossings=tuple(crossings))


def sweep_droop(
    model: NetworkModel,
    bus_id: str,
    m_range: tuple[float, float],
    count: int,
) -> SweepResult:
    """Sweep one inverter's frequency droop gain (as a per-unit fraction)."""
    if bus_id not in model.inverter_buses:
        raise KeyError(f"no inverter at bus '{bus_id}'")
    lo, hi = m_range
    if not (0 < lo <= hi):
        raise ValueError("droop range must be positive")
    values = np.linspace(lo, hi, count)
    mu_cr = mu_critical(_charpoly_for(model))
    mu_rows = np.array([_mu_for_model(_with_droop(model, bus_id, v))
                        for v in values])

    def top_mu(m_new: float) -> float:
        return float(_mu_for_model(_with_droop(model, bus_id, m_new))[-1])

    crossings = find_crossings(values, mu_rows[:, -1], mu_cr, refine=top_mu)
    return SweepResult(parameter=f"droop-m:{bus_id}", values=values,
                       mu_per_value=mu_rows, mu_cr=float(mu_cr),
                       crossings=tuple(crossings))


def mu_cr_surface(
    rho_values: np.ndarray,
    k_values: np.ndarray,
    tau: float,
    omega0: float,
) -> MuCrSurface:
    """mu_cr over a (rho, k) grid. Failed bisections yield NaN, counted in
    ``failures``, instead of aborting the surface."""
    from .charpoly import NumericalError

    rho_values = np.asarray(rho_values, dtype=float)
    k_values = np.asarray(k_values, dtype=float)
    grid = np.empty((rho_values.size, k_values.size))
    failures = 0
    for i, rho in enumerate(rho_values):
        for j, k in enumerate(k_values):
            try:
                grid[i, j] = mu_critical(
                    CharPolyModel(rho=float(rho), k=float(k), tau=tau, omega0=omega0))
            except NumericalError:
                grid[i, j] = np.nan
                failures += 1
    return MuCrSurface(rho_values=rho_values, k_values=k_values,
                       mu_cr=grid, failures=failures)
