"""Random connected test networks for the property and oracle suites."""

from __future__ import annotations

import math

import numpy as np

from .netmodel import BaseSystem, InverterRecord, LineRecord, NetworkModel

__all__ = ["random_network", "random_added_line"]


def random_network(
    seed: int | np.random.Generator,
    m: int | None = None,
    m_max: int = 8,
    passive_max: int = 2,
    rho_range: tuple[float, float] = (0.3, 3.0),
    k_range: tuple[float, float] = (0.5, 5.0),
    nonuniform_k: bool = False,
    omega_c: float | None = None,
) -> NetworkModel:
    """Connected network with uniform rho and (by default) uniform k.

    The topology is a random spanning tree plus a few extra edges; inverter
    droops m_i are drawn independently while n_i = m_i / k keeps the droop
    ratio uniform. ``nonuniform_k`` deliberately breaks that hypothesis for
    precondition-gate tests.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if m is None:
        m = int(rng.integers(2, m_max + 1))
    if m < 2:
        raise ValueError("need at least two inverters")
    n_passive = int(rng.integers(0, passive_max + 1))
    n = m + n_passive
    bus_ids = [str(i + 1) for i in range(n)]

    edges: set[tuple[int, int]] = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    for _ in range(int(rng.integers(0, n))):
        u, v = sorted(int(x) for x in rng.integers(0, n, 2))
        if u != v:
            edges.add((u, v))

    rho = float(rng.uniform(*rho_range))
    k = float(rng.uniform(*k_range))
    lines = []
    for u, v in sorted(edges):
        x = float(rng.uniform(0.05, 1.5))
        lines.append(LineRecord(from_bus=bus_ids[u], to_bus=bus_ids[v],
                                r_pu=rho * x, x_pu=x))

    wc = float(omega_c) if omega_c is not None else float(rng.uniform(10.0, 100.0))
    tau = 1.0 / wc
    inverters = []
    for i in range(m):
        mi = float(rng.uniform(0.002, 0.05))
        ki = k * float(rng.uniform(1.5, 3.0)) if (nonuniform_k and i % 2) else k
        inverters.append(InverterRecord(bus_id=bus_ids[i], m=mi, n=mi / ki, tau=tau))

    base = BaseSystem(voltage_v=400.0, power_va=1e4, omega0=2.0 * math.pi * 50.0)
    return NetworkModel(base=base, buses=tuple(bus_ids), inverters=tuple(inverters),
                        lines=tuple(lines), rho=rho, k=k, omega_c=wc)


def random_added_line(
    seed: int | np.random.Generator,
    model: NetworkModel,
    x_range: tuple[float, float] = (0.05, 1.5),
) -> LineRecord:
    """A new line between two distinct inverter buses, same R/X as the system.

    May duplicate an existing corridor, in which case it acts as a parallel
    branch (a susceptance increase of an existing line).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    buses = model.inverter_buses
    i, j = rng.choice(len(buses), size=2, replace=False)
    a, b = sorted((buses[int(i)], buses[int(j)]))
    x = float(rng.uniform(*x_range))
    return LineRecord(from_bus=a, to_bus=b, r_pu=model.rho * x, x_pu=x)
