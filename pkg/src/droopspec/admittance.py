"""Susceptance matrix assembly, Kron reduction, and the B' scaling.

For a line with series impedance R + jX the static susceptance magnitude is
X / (R^2 + X^2) = 1 / (X (1 + rho^2)), so the full susceptance matrix B_hat is
the graph Laplacian with those edge weights. Kron reduction (a Schur
complement on the passive-bus block) eliminates interior buses without
inverters, and B' = (1 + rho^2) B recovers the reactance-only Laplacian with
edge weights 1/X over the retained inverter buses - the matrix that enters
both the weighted spectrum and the state matrix.

Microgrids have tens of buses, so everything here is dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .netmodel import NetworkModel

__all__ = [
    "SusceptanceSet",
    "KronReductionError",
    "build_susceptance",
    "kron_reduce",
    "scale_to_bprime",
    "susceptance_set",
]


class KronReductionError(ValueError):
    """Passive-bus block could not be factorized (singular B_cc)."""


@dataclass(frozen=True)
class SusceptanceSet:
    """Full, Kron-reduced, and (1+rho^2)-scaled susceptance matrices.

    ``bus_index_map`` maps bus id to row index of ``b_full``; the first
    ``b_reduced.shape[0]`` entries are the inverter buses, in model order.
    """

    b_full: np.ndarray      # n x n, edge weights 1/(X (1+rho^2))
    b_reduced: np.ndarray   # m x m, passive buses eliminated
    b_prime: np.ndarray     # m x m, (1+rho^2) * b_reduced == 1/X Laplacian
    bus_index_map: dict[str, int]


def _restore_laplacian(matrix: np.ndarray) -> np.ndarray:
    """Symmetrize and re-project the diagonal to kill rounding drift.

    The exact zero eigenvalue of a reduced Laplacian is relied on downstream
    (trivial mode detection), so after a Schur complement the diagonal is
    reset to minus the off-diagonal row sum.
    """
    sym = 0.5 * (matrix + matrix.T)
    off = sym - np.diag(np.diag(sym))
    return off - np.diag(off.sum(axis=1))


def build_susceptance(model: NetworkModel) -> np.ndarray:
    """Assemble the full n x n susceptance Laplacian over all buses.

    Edge weights are the physical susceptance magnitudes 1/(X (1+rho^2));
    for purely reactive lines (R = 0) this reduces to 1/X.
    """
    n = len(model.buses)
    index = {b: i for i, b in enumerate(model.buses)}
    b_full = np.zeros((n, n))
    for line in model.lines:
        w = 1.0 / (line.x_pu * (1.0 + line.rho**2))
        i, j = index[line.from_bus], index[line.to_bus]
        b_full[i, i] += w
        b_full[j, j] += w
        b_full[i, j] -= w
        b_full[j, i] -= w
    return b_full


def kron_reduce(b_full: np.ndarray, inverter_rows: int | list[int]) -> np.ndarray:
    """Eliminate passive rows by a single Schur complement.

    ``inverter_rows`` is either the number of leading rows to retain or an
    explicit list of row indices; the result is indexed in the retained order.
    The passive-bus principal submatrix of a connected network's Laplacian is
    irreducibly diagonally dominant, hence symmetric positive definite, so a
    Cholesky factorization is used; failure indicates a disconnected or
    degenerate passive set and is reported as KronReductionError.
    """
    n = b_full.shape[0]
    if isinstance(inverter_rows, (int, np.integer)):
        keep = list(range(int(inverter_rows)))
    else:
        keep = list(inverter_rows)
    elim = [i for i in range(n) if i not in set(keep)]
    if not elim:
        return b_full.copy()
    b_ii = b_full[np.ix_(keep, keep)]
    b_ic = b_full[np.ix_(keep, elim)]
    b_cc = b_full[np.ix_(elim, elim)]
    try:
        cho = scipy.linalg.cho_factor(b_cc)
        reduced = b_ii - b_ic @ scipy.linalg.cho_solve(cho, b_ic.T)
    except scipy.linalg.LinAlgError as exc:
        raise KronReductionError(
            f"passive-bus block (rows {elim}) is singular; "
            "passive buses must connect to the rest of the network") from exc
    return _restore_laplacian(reduced)


def scale_to_bprime(b_reduced: np.ndarray, rho: float) -> np.ndarray:
    """Elementwise (1 + rho^2) scaling of the reduced susceptance matrix."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    return (1.0 + rho**2) * b_reduced


def susceptance_set(model: NetworkModel) -> SusceptanceSet:
    """Full pipeline: assemble, Kron-reduce, scale. Inverter buses lead."""
    b_full = build_susceptance(model)
    b_reduced = kron_reduce(b_full, model.inverter_count)
    return SusceptanceSet(
        b_full=b_full,
        b_reduced=b_reduced,
        b_prime=scale_to_bprime(b_reduced, model.rho),
        bus_index_map={b: i for i, b in enumerate(model.buses)},
    )
