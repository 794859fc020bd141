"""Classical free motion on lattice connection space and its reduction to
geodesics on the structure group.

The free flow (A, P) -> (A + tP, P) conserves the kinetic energy
(1/2)|P|^2.  When the momentum is the parallel transport of a single
algebra vector X0 along A (the lattice form of the constraint surface), the
holonomy moves along the group geodesic h(A) exp(t X0) up to the O(1/N)
discretization error; for a generic unconstrained momentum it does not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .groups import (
    AlgebraVector,
    GroupElement,
    GroupKind,
    embed_algebra,
    exp_map,
    expm_traceless,
    group_distance,
    group_log,
    unembed_algebra,
)
from .lattice import LatticeConnection, LatticeGaugeMap, gauge_transform, holonomy


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """Position connection and a momentum field of the same shape."""

    a: LatticeConnection
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != self.a.values.shape:
            raise ValueError("momentum must match the connection shape")
        object.__setattr__(self, "p", p)

    @property
    def group(self) -> GroupKind:
        return self.a.group

    @property
    def n_sites(self) -> int:
        return self.a.n_sites


def energy(pt: PhasePoint) -> float:
    """Kinetic energy (1/2) |P|^2 with the (1/N)-weighted norm."""
    return 0.5 * float(np.sum(pt.p**2)) / pt.n_sites


def evolve_free(pt: PhasePoint, t: float) -> PhasePoint:
    """Exact free flow (A, P) -> (A + tP, P)."""
    return PhasePoint(LatticeConnection(pt.group, pt.a.values + t * pt.p), pt.p)


def gauge_transform_phase(pt: PhasePoint, gauge: LatticeGaugeMap) -> PhasePoint:
    """Gauge action on phase points: the translation term moves only the
    position, the momentum is conjugated pointwise."""
    new_a = gauge_transform(pt.a, gauge, level="algebra")
    group = pt.group
    if group is GroupKind.U1:
        new_p = pt.p.copy()
    else:
        new_p = np.empty_like(pt.p)
        for k in range(pt.n_sites):
            g = gauge.element(k).value
            rotated = g @ embed_algebra(group, pt.p[k]) @ g.conj().T
            new_p[k] = unembed_algebra(group, rotated)
    return PhasePoint(new_a, new_p)


def partial_holonomies(L: LatticeConnection) -> list:
    """T_0 = e, T_k = exp(A_{k-1}/N) ... exp(A_0/N): transport to site k."""
    group, n = L.group, L.n_sites
    if group is GroupKind.U1:
        acc = np.concatenate([[0.0], np.cumsum(L.values[:, 0])]) / n
        return [GroupElement(group, np.exp(1j * a)) for a in acc[:n]]
    steps = expm_traceless(embed_algebra(group, L.values / n))
    mats = [np.eye(2, dtype=complex)]
    for k in range(n - 1):
        mats.append(steps[k] @ mats[-1])
    return [GroupElement(group, m) for m in mats]


def make_constrained_pair(L: LatticeConnection, x0: AlgebraVector) -> PhasePoint:
    """Momentum by parallel transport: P_k = T_k X0 T_k^{-1}.

    This is the lattice horizontality condition; the discrete covariant
    difference P_{k+1} - U_k P_k U_k^{-1} vanishes identically on interior
    links (the section may jump at the base point, as the based constraint
    allows).
    """
    group, n = L.group, L.n_sites
    if group is GroupKind.U1:
        return PhasePoint(L, np.tile(x0.coords, (n, 1)))
    transports = partial_holonomies(L)
    x_mat = x0.embed()
    p = np.empty_like(L.values)
    for k, t_k in enumerate(transports):
        p[k] = unembed_algebra(group, t_k.value @ x_mat @ t_k.value.conj().T)
    return PhasePoint(L, p)


def covariant_residual(pt: PhasePoint) -> float:
    """max over interior links of |N (P_{k+1} - U_k P_k U_k^{-1})|."""
    group, n = pt.group, pt.n_sites
    if group is GroupKind.U1:
        return float(n * np.max(np.abs(np.diff(pt.p[:, 0]))))
    steps = expm_traceless(embed_algebra(group, pt.a.values / n))
    worst = 0.0
    for k in range(n - 1):
        transported = steps[k] @ embed_algebra(group, pt.p[k]) @ steps[k].conj().T
        diff = pt.p[k + 1] - unembed_algebra(group, transported)
        worst = max(worst, float(n * np.linalg.norm(diff)))
    return worst


def effective_velocity(pt: PhasePoint, eps: float = 1e-5) -> AlgebraVector:
    """X_eff = log(h(A)^{-1} h(A + eps P)) / eps, the initial holonomy
    velocity in the group."""
    h0 = holonomy(pt.a)
    h_eps = holonomy(LatticeConnection(pt.group, pt.a.values + eps * pt.p))
    return (1.0 / eps) * group_log(h0.inverse() * h_eps)


def geodesic_compare(
    pt: PhasePoint, t_grid: Sequence[float], eps: float = 1e-5
) -> tuple:
    """Deviation of the evolved holonomy from the group geodesic.

    Returns (max deviation, per-time deviations) of
    dist(h(A + tP), h(A) exp(t X_eff)) over the grid.
    """
    x_eff = effective_velocity(pt, eps)
    h0 = holonomy(pt.a)
    devs = []
    for t in t_grid:
        evolved = holonomy(LatticeConnection(pt.group, pt.a.values + t * pt.p))
        geodesic = h0 * exp_map(AlgebraVector(pt.group, t * x_eff.coords))
        devs.append(group_distance(evolved, geodesic))
    return max(devs), devs
