"""Per-mode quintic characteristic polynomial and the stability threshold.

Under uniform R/X ratio rho and uniform droop ratio k = m/n, each eigenvalue
mu of the weighted susceptance matrix C contributes five eigenvalues lambda of
the full linearized system, the roots of

    k g(l)^2 (h(l)^2 + 1) l  +  g(l) (k + l) mu  +  mu^2  =  0

with g(l) = 1 + tau*l and h(l) = rho + l/omega0. Here lambda and mu are in
rad/s, k is the dimensionless droop ratio, and the droop convention matches
``spectral.droop_matrix`` (both droop matrices carry the omega0 factor); the
state-space oracle confirms this normalization to machine precision.

The dominant root's real part crosses zero exactly once as mu grows, which
gives a unique threshold mu_cr(rho, k, tau, omega0), independent of the
network topology and line lengths. mu_cr is located by bisection after a
coarse scan that checks the single-crossing premise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CharPolyModel",
    "RootLocusResult",
    "NumericalError",
    "quintic_roots",
    "is_stable_mode",
    "mu_critical",
    "root_locus",
    "MU_BRACKET",
]

# Bisection bracket for mu_cr, in the calibrated rad/s units. Covers the
# practically relevant (rho, k) surface with wide margin.
MU_BRACKET = (1.0, 1e5)

PRESCAN_POINTS = 32


class NumericalError(RuntimeError):
    """Root finding could not proceed (no bracket, or premise violated)."""


@dataclass(frozen=True)
class CharPolyModel:
    """Parameters of the per-mode quintic; everything but mu."""

    rho: float     # uniform R/X ratio
    k: float       # dimensionless droop ratio m/n
    tau: float     # power-filter time constant, s
    omega0: float  # nominal angular frequency, rad/s

    def __post_init__(self) -> None:
        if self.k <= 0 or self.tau <= 0 or self.omega0 <= 0 or self.rho < 0:
            raise ValueError("need k, tau, omega0 > 0 and rho >= 0")

    def coefficients(self, mu: float) -> np.ndarray:
        """Quintic coefficients for the given mu, ascending powers of lambda.

        The leading coefficient is k tau^2 / omega0^2, nonzero for any valid
        model, so the degree is exactly five.
        """
        if mu < 0:
            raise ValueError("mu must be nonnegative")
        tau, rho, w0, k = self.tau, self.rho, self.omega0, self.k
        P = np.polynomial.polynomial.Polynomial
        g = P([1.0, tau])
        h2p1 = P([rho**2 + 1.0, 2.0 * rho / w0, 1.0 / w0**2])
        lam = P([0.0, 1.0])
        poly = k * g * g * h2p1 * lam + g * (k + lam) * mu + mu**2
        return poly.coef


@dataclass(frozen=True)
class RootLocusResult:
    """Roots of the quintic swept over mu."""

    mu_values: np.ndarray   # sampled mu grid
    roots: np.ndarray       # (len(mu), 5) complex, descending real part
    dominant: np.ndarray    # per-mu dominant root (trivial origin root at
                            # mu = 0 excluded: it is the rigid rotation mode)
    dominant_monotone: bool  # Re of the dominant root nondecreasing over the
                             # grid; can be False when branch switches occur

    def to_csv(self) -> str:
        header = "mu," + ",".join(f"re{i},im{i}" for i in range(1, 6))
        rows = [header]
        for mu, rr in zip(self.mu_values, self.roots):
            cells = [repr(float(mu))]
            for r in rr:
                cells.append(repr(float(r.real)))
                cells.append(repr(float(r.imag)))
            rows.append(",".join(cells))
        return "\n".join(rows) + "\n"


def quintic_roots(model: CharPolyModel, mu: float) -> np.ndarray:
    """All five roots for the given mu, sorted by descending real part.

    Roots come from the companion-matrix eigenvalues of the expanded
    polynomial (np.roots), which is deterministic and robust at degree five.
    """
    coef = model.coefficients(mu)
    roots = np.roots(coef[::-1])
    order = np.lexsort((-roots.imag, -roots.real))
    return roots[order]


def _dominant_real(model: CharPolyModel, mu: float) -> float:
    """Real part of the dominant root; at mu = 0 the structural root at the
    origin (rigid rotation of all angles) is excluded."""
    roots = quintic_roots(model, mu)
    if mu == 0:
        roots = np.delete(roots, np.argmin(np.abs(roots)))
    return float(roots.real.max())


def is_stable_mode(model: CharPolyModel, mu: float) -> bool:
    """True iff all five roots lie strictly in the open left half-plane.

    The mu = 0 structural root at the origin is treated as marginal but
    acceptable; it reflects the global angle-reference freedom, not an
    instability.
    """
    return _dominant_real(model, mu) < 0.0


def mu_critical(model: CharPolyModel, rtol: float = 1e-4) -> float:
    """Stability threshold: the mu at which the dominant root crosses the axis.

    A coarse scan over 32 log-spaced points in the bracket checks the
    root-locus premise first: the dominant real part must cross zero exactly
    once and be nondecreasing from the last stable point onward. (Below the
    crossing the identity of the dominant branch can switch, producing local
    dips deep in the stable region; that does not affect the threshold.)
    Violations are surfaced as NumericalError, never silently ignored.
    """
    lo, hi = MU_BRACKET
    grid = np.logspace(np.log10(lo), np.log10(hi), PRESCAN_POINTS)
    vals = np.array([_dominant_real(model, mu) for mu in grid])

    signs = np.sign(vals)
    crossings = np.flatnonzero(np.diff(signs >= 0))
    if vals[0] >= 0 or vals[-1] <= 0:
        raise NumericalError(
            "no sign change of the dominant real part inside the bracket "
            f"[{lo:g}, {hi:g}]: f(lo) = {vals[0]:.6g}, f(hi) = {vals[-1]:.6g}")
    if crossings.size != 1:
        raise NumericalError(
            "dominant real part crosses zero more than once on the scan grid; "
            "the single-threshold premise does not hold for "
            f"rho={model.rho:g}, k={model.k:g}, tau={model.tau:g}")
    last_stable = int(crossings[0])
    tail = vals[last_stable:]
    if np.any(np.diff(tail) < -1e-9 * np.maximum(np.abs(tail[:-1]), 1.0)):
        raise NumericalError(
            "dominant real part is not monotone past the stability crossing "
            f"for rho={model.rho:g}, k={model.k:g}, tau={model.tau:g}")

    lo, hi = float(grid[last_stable]), float(grid[last_stable + 1])
    while (hi - lo) > rtol * lo:
        mid = 0.5 * (lo + hi)
        if _dominant_real(model, mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def root_locus(model: CharPolyModel, mu_range: tuple[float, float],
               count: int) -> RootLocusResult:
    """Sample the quintic's roots on a linear mu grid.

    Past the stability crossing the dominant real part must be nondecreasing
    in mu (asserted); below the crossing the dominant branch may switch
    identity, so no monotonicity is required there.
    """
    lo, hi = mu_range
    if not (0 <= lo <= hi <= MU_BRACKET[1]):
        raise ValueError(f"mu range must lie within [0, {MU_BRACKET[1]:g}]")
    mu_values = np.linspace(lo, hi, count) if count > 1 else np.array([lo])
    roots = np.array([quintic_roots(model, mu) for mu in mu_values])
    dominant = np.empty(len(mu_values), dtype=complex)
    for i, mu in enumerate(mu_values):
        rr = roots[i]
        if mu == 0:
            rr = np.delete(rr, np.argmin(np.abs(rr)))
        dominant[i] = rr[np.argmax(rr.real)]
    unstable = np.flatnonzero(dominant.real >= 0)
    if unstable.size:
        tail = dominant.real[unstable[0]:]
        if np.any(np.diff(tail) < -1e-9 * np.maximum(np.abs(tail[:-1]), 1.0)):
            raise NumericalError(
                "dominant real part not monotone past the crossing on the "
                "sampled grid")
    return RootLocusResult(mu_values=mu_values, roots=roots, dominant=dominant)
