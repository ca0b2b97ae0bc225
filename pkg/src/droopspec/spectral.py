"""Droop-weighted susceptance spectrum and critical cluster extraction.

The object of interest is C = M B', the reduced 1/X Laplacian left-multiplied
by the diagonal matrix of frequency droop gains. C is not symmetric, but
M^(-1/2) C M^(1/2) = M^(1/2) B' M^(1/2) is, so its eigenvalues mu_i are real
and nonnegative and its eigenvectors can be chosen real. Each nontrivial mu
indexes one oscillatory cluster: the entries of the eigenvector split the
participating inverters into two antiphase coherent groups, and the largest
mu belongs to the cluster closest to the stability boundary.

Unit convention: the droop diagonal passed in here carries the nominal
angular frequency factor, M_ii = m_i * omega0 (rad/s per per-unit power), so
the mu values are in rad/s and compare directly against the thresh computed
by the characteristic-polynomial module. ``droop_matrix`` builds the diagonal
from a network model under this convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .netmodel import LineRecord, NetworkModel

__all__ = [
    "WeightedSpectrum",
    "ClusterDescriptor",
    "WeylCheck",
    "InternalConsistencyError",
    "droop_matrix",
    "weighted_spectrum",
    "extract_clusters",
    "weyl_bound_check",
    "TRIVIAL_MU_RTOL",
    "CLUSTER_THRESHOLD",
]

# |mu| below this fraction of the largest mu is the trivial rigid-rotation mode.
TRIVIAL_MU_RTOL = 1e-9

# Eigenvector components at least this fraction of the largest magnitude count
# as cluster members.
CLUSTER_THRESHOLD = 0.1

# Eigenvalues closer than this (relative to the largest) share an eigenspace,
# where cluster structure is basis dependent.
DEGENERACY_RTOL = 1e-8


class InternalConsistencyError(RuntimeError):
    """A mathematically guaranteed bound failed; indicates an implementation bug."""


@dataclass(frozen=True)
class WeightedSpectrum:
    """Eigenvalues and eigenvectors of C = M B'.

    mu is ascending; eigenvectors (columns of ``u``) are unit 2-norm with the
    largest-magnitude entry made positive, which keeps repeated runs byte
    identical.
    """

    c: np.ndarray        # m x m weighted Laplacian M B'
    mu: np.ndarray       # eigenvalues, ascending, rad/s
    u: np.ndarray        # eigenvectors of C as columns, matching mu order
    m_diag: np.ndarray   # droop diagonal (m_i * omega0)

    @property
    def trivial_tol(self) -> float:
        return TRIVIAL_MU_RTOL * float(self.mu[-1]) if self.mu.size else 0.0

    @property
    def nontrivial_indices(self) -> np.ndarray:
        return np.flatnonzero(np.abs(self.mu) > self.trivial_tol)

    @property
    def max_mu(self) -> float:
        """Largest nontrivial eigenvalue (the stability-governing one)."""
        idx = self.nontrivial_indices
        return float(self.mu[idx[-1]]) if idx.size else 0.0


@dataclass(frozen=True)
class ClusterDescriptor:
    """One oscillatory cluster, read off an eigenvector of C."""

    mu: float
    rank: int  # 1 = largest mu = most critical
    members: tuple[tuple[str, float], ...]       # (bus id, eigenvector entry)
    critical_lines: tuple[str, ...]              # lines joining antiphase members
    degenerate: bool = False


@dataclass(frozen=True)
class WeylCheck:
    """Spectra before/after a susceptance perturbation plus the Weyl bound."""

    mu_before: np.ndarray
    mu_after: np.ndarray
    bound: float  # (M_1 + M_2) / X_e


def droop_matrix(model: NetworkModel) -> np.ndarray:
    """Droop diagonal in the calibrated convention: M_ii = m_i * omega0."""
    omega0 = model.base.omega0
    return np.array([inv.m * omega0 for inv in model.inverters])


def weighted_spectrum(b_prime: np.ndarray, m_diag: np.ndarray) -> WeightedSpectrum:
    """Eigen-decompose C = M B' through its symmetrized similarity transform.

    Works on M^(1/2) B' M^(1/2) (symmetric, same spectrum as C) and maps the
    orthonormal eigenvectors u' back through u = M^(1/2) u'. Eigenvalues come
    out real by construction; eigenvectors are normalized and sign-fixed.
    """
    m_diag = np.asarray(m_diag, dtype=float)
    if np.any(m_diag <= 0):
        raise ValueError("all droop gains must be strictly positive")
    sqrt_m = np.sqrt(m_diag)
    sym = sqrt_m[:, None] * np.asarray(b_prime, dtype=float) * sqrt_m[None, :]
    mu, u_sym = np.linalg.eigh(0.5 * (sym + sym.T))
    u = sqrt_m[:, None] * u_sym
    u /= np.linalg.norm(u, axis=0, keepdims=True)
    # Deterministic sign: make the largest-magnitude entry of each vector
    # positive (ties broken by the lower index, which argmax already does).
    lead = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[lead, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    u *= signs
    c = m_diag[:, None] * np.asarray(b_prime, dtype=float)
    return WeightedSpectrum(c=c, mu=mu, u=u, m_diag=m_diag)


def extract_clusters(
    spectrum: WeightedSpectrum,
    threshold: float = CLUSTER_THRESHOLD,
    bus_ids: Sequence[str] | None = None,
    lines: Sequence[LineRecord] | None = None,
) -> list[ClusterDescriptor]:
    """Cluster descriptors for every nontrivial mode, most critical first.

    Members are the buses whose eigenvector magnitude reaches ``threshold``
    times the largest one; the strongest bus of each sign is always included
    so that every cluster exhibits its two antiphase groups. Critical lines
    are the lines joining members of opposite sign. Repeated eigenvalues get
    one descriptor per orthogonalized eigenvector, flagged ``degenerate``
    because the split between them is basis dependent.
    """
    m = spectrum.mu.size
    if bus_ids is None:
        bus_ids = [str(i + 1) for i in range(m)]
    idx = spectrum.nontrivial_indices[::-1]  # descending mu
    degenerate_tol = DEGENERACY_RTOL * float(spectrum.mu[-1]) if m else 0.0
    out: list[ClusterDescriptor] = []
    for rank, i in enumerate(idx, start=1):
        mu_i = float(spectrum.mu[i])
        vec = spectrum.u[:, i]
        mags = np.abs(vec)
        members = set(np.flatnonzero(mags >= threshold * mags.max()))
        # Anchor the strongest member of each sign (a nontrivial eigenvector
        # always has both: it is M-orthogonal to the all-ones vector).
        pos = np.flatnonzero(vec > 0)
        neg = np.flatnonzero(vec < 0)
        if pos.size:
            members.add(int(pos[np.argmax(mags[pos])]))
        if neg.size:
            members.add(int(neg[np.argmax(mags[neg])]))
        member_list = tuple(sorted((bus_ids[j], float(vec[j])) for j in members))
        critical: list[str] = []
        if lines is not None:
            pos_ids = {bus_ids[j] for j in members if vec[j] > 0}
            neg_ids = {bus_ids[j] for j in members if vec[j] < 0}
            for line in lines:
                ends = {line.from_bus, line.to_bus}
                if ends & pos_ids and ends & neg_ids:
                    critical.append(line.label)
        near = np.abs(spectrum.mu - mu_i) <= degenerate_tol
        out.append(ClusterDescriptor(
            mu=mu_i,
            rank=rank,
            members=member_list,
            critical_lines=tuple(critical),
            degenerate=bool(near.sum() > 1),
        ))
    return out


def weyl_bound_check(
    model: NetworkModel,
    added_line: LineRecord,
    rtol: float = 1e-9,
) -> WeylCheck:
    """Verify eigenvalue interlacing for a line addition or strengthening.

    Adding the edge e = (a, b) with reactance X_e perturbs the symmetrized C
    by a rank-one PSD term, so every eigenvalue moves up by at most
    (M_a + M_b) / X_e and never down. A violated bound cannot come from the
    physics, so it raises InternalConsistencyError.

    If the edge already exists, the added record acts as a parallel branch,
    i.e. a susceptance increase of 1/X_e.
    """
    from .admittance import susceptance_set  # local import, avoids cycle

    inv_index = {b: i for i, b in enumerate(model.inverter_buses)}
    try:
        ia, ib = inv_index[added_line.from_bus], inv_index[added_line.to_bus]
    except KeyError as exc:
        raise ValueError("weyl_bound_check needs the new line to join "
                         "inverter buses") from exc

    m_diag = droop_matrix(model)
    before = weighted_spectrum(susceptance_set(model).b_prime, m_diag)

    perturbed = NetworkModel(
        base=model.base, buses=model.buses, inverters=model.inverters,
        lines=model.lines + (added_line,), rho=model.rho, k=model.k,
        omega_c=model.omega_c)
    after = weighted_spectrum(susceptance_set(perturbed).b_prime, m_diag)

    bound = (m_diag[ia] + m_diag[ib]) / added_line.x_pu

    scale = max(float(before.mu[-1]), float(after.mu[-1]), 1.0)
    tol = rtol * scale
    low_ok = np.all(after.mu >= before.mu - tol)
    high_ok = np.all(after.mu <= before.mu + bound + tol)
    if not (low_ok and high_ok):
        raise InternalConsistencyError(
            "Weyl interlacing violated for added line "
            f"{added_line.label}: mu_before={before.mu}, mu_after={after.mu}, "
            f"bound={bound}")
    return WeylCheck(mu_before=before.mu, mu_after=after.mu, bound=float(bound))
