"""Madelung decomposition psi = R exp(iS/hbar) and the hydrodynamic residuals.

Spatial derivatives are spectral.  Quantities that divide by rho are built
from psi'/psi and psi''/psi on unmasked points only; quantities that are
smooth everywhere (density, current, stress) are evaluated on the full grid
so they can be differentiated again without contaminating the spectrum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import InsufficientSnapshots, NodeContamination
from .field_core import (DEFAULT_NODE_THRESHOLD, Grid, NodeMask, RealField, WaveField, deriv,
                         node_mask, unwrap_phase)
from .solvers import PotentialSpec, Trajectory

NODE_CONTAMINATION_LIMIT = 0.01
_TINY = 1e-300


@dataclass(frozen=True, eq=False)
class MadelungFields:
    R: RealField
    S: RealField
    rho: RealField
    v: RealField
    u: RealField
    Q: RealField
    mask: NodeMask
    winding: int = 0

    @property
    def grid(self) -> Grid:
        return self.R.grid

    @property
    def time(self) -> float:
        return self.R.time

    def recompose(self) -> WaveField:
        """R exp(iS/hbar)."""
        return WaveField(self.grid, self.R.values * np.exp(1j * self.S.values / self.grid.hbar),
                         self.time)


@dataclass(frozen=True)
class HydroResiduals:
    continuity: float
    quantum_hj: float
    euler: float
    stress_balance: float
    dt_used: float
    series: Optional[Dict[str, np.ndarray]] = field(default=None, repr=False)


def log_derivatives(values: np.ndarray, grid: Grid, mask: NodeMask):
    """(psi'/psi, psi''/psi) on unmasked points, zero elsewhere; also psi', psi''."""
    d1 = deriv(values, grid, 1)
    d2 = deriv(values, grid, 2)
    good = ~mask.flags
    g = np.zeros_like(values)
    h = np.zeros_like(values)
    g[good] = d1[good] / values[good]
    h[good] = d2[good] / values[good]
    return g, h, d1, d2


def quantum_potential_from_psi(values: np.ndarray, grid: Grid, mask: NodeMask) -> np.ndarray:
    """-(hbar^2/2m) |psi|''/|psi| = -(hbar^2/2m) [Re(psi''/psi) + Im(psi'/psi)^2]."""
    g, h, _, _ = log_derivatives(values, grid, mask)
    return -(grid.hbar ** 2 / (2 * grid.mass)) * (h.real + g.imag ** 2)


def decompose(psi: WaveField, mask: NodeMask = None,
              rel_threshold: float = DEFAULT_NODE_THRESHOLD) -> MadelungFields:
    grid, t = psi.grid, psi.time
    hbar, m = grid.hbar, grid.mass
    if mask is None:
        mask = node_mask(psi, rel_threshold=rel_threshold)
    phase = unwrap_phase(psi, mask)  # raises AllMasked
    vals = psi.values
    R = np.abs(vals)
    rho = R ** 2
    g, h, _, _ = log_derivatives(vals, grid, mask)
    good = ~mask.flags
    v = (hbar / m) * g.imag
    drho = deriv(rho, grid, 1)
    u = np.zeros(grid.n)
    u[good] = (hbar / (2 * m)) * drho[good] / rho[good]
    Q = -(hbar ** 2 / (2 * m)) * (h.real + g.imag ** 2)
    return MadelungFields(R=RealField(grid, R, t), S=phase.S, rho=RealField(grid, rho, t),
                          v=RealField(grid, v, t), u=RealField(grid, u, t),
                          Q=RealField(grid, Q, t), mask=mask, winding=phase.winding)


@dataclass(frozen=True, eq=False)
class QuantumPotential:
    """Both closed forms of the quantum potential and their mismatch."""

    amplitude_form: RealField
    density_form: RealField
    mismatch: float
    tolerance: float = 1e-8

    @property
    def agrees(self) -> bool:
        return self.mismatch < self.tolerance


def quantum_potential(rho: RealField, mask: NodeMask = None,
                      rel_threshold: float = DEFAULT_NODE_THRESHOLD) -> QuantumPotential:
    """Q from the curvature of sqrt(rho) and from rho', rho''.

    ``mismatch`` is max|Q_a - Q_b| over unmasked points divided by max|Q_a|
    (or by hbar^2/(2 m L^2) when Q_a vanishes identically).  The rho-based
    form divides spectral round-off by rho itself, so a 1e-8 agreement needs
    rho above roughly 1e-6 of its peak; pass a larger ``rel_threshold`` to
    compare only where that holds.
    """
    grid = rho.grid
    hbar, m = grid.hbar, grid.mass
    if mask is None:
        mask = node_mask(rho, rel_threshold=rel_threshold)
    if mask.interior_fraction() > NODE_CONTAMINATION_LIMIT:
        raise NodeContamination("density has interior nodes")
    good = ~mask.flags
    r = rho.values
    sq = np.sqrt(np.maximum(r, 0.0))
    d2sq = deriv(sq, grid, 2)
    d1 = deriv(r, grid, 1)
    d2 = deriv(r, grid, 2)
    qa = np.zeros(grid.n)
    qb = np.zeros(grid.n)
    qa[good] = -(hbar ** 2 / (2 * m)) * d2sq[good] / sq[good]
    qb[good] = -(hbar ** 2 / (8 * m)) * (2 * d2[good] / r[good] - (d1[good] / r[good]) ** 2)
    scale = max(np.max(np.abs(qa[good])), hbar ** 2 / (2 * m * grid.length ** 2))
    mismatch = float(np.max(np.abs(qa - qb)[good]) / scale)
    return QuantumPotential(RealField(grid, qa, rho.time), RealField(grid, qb, rho.time), mismatch)


# ------------------------------------------------------------------ stress tensors

@dataclass(frozen=True, eq=False)
class StressReport:
    Pi: RealField
    sigma: RealField
    identity_residual: float
    kinematic_viscosity: float
    dynamic_viscosity: RealField


def amplitude_slopes(values: np.ndarray, grid: Grid):
    """(R', R S'/hbar) as Re and Im of conj(psi) psi' / |psi|.

    Dividing by |psi| rather than rho keeps round-off in psi' bounded in the
    tails, where rho'^2/rho would amplify it without limit.
    """
    w = np.conj(values) * deriv(values, grid, 1)
    R = np.abs(values)
    w = np.where(R > _TINY, w / np.where(R > _TINY, R, 1.0), 0.0)
    return w.real, w.imag


def _sigma(values: np.ndarray, grid: Grid) -> np.ndarray:
    """m D^2 rho (log rho)'' = m D^2 (rho'' - 4 R'^2); smooth wherever R is."""
    D = grid.diffusion
    slope, _ = amplitude_slopes(values, grid)
    return grid.mass * D ** 2 * (deriv(np.abs(values) ** 2, grid, 2) - 4 * slope ** 2)


def stress_tensors(mf: MadelungFields) -> StressReport:
    """Internal stress sigma, momentum flux Pi = m rho v^2 - sigma, and the
    pointwise check -d(sigma) = -m D^2 rho d[rho''/rho - (rho'/rho)^2 / 2].

    The left side differentiates sigma = m D^2 (rho'' - 4 R'^2) spectrally; the
    right side is rho * dQ expanded by the product rule into rho''' - 8 R' R''.
    """
    grid = mf.grid
    if mf.mask.interior_fraction() > NODE_CONTAMINATION_LIMIT:
        raise NodeContamination("stress tensors need a node-free region")
    m, D = grid.mass, grid.diffusion
    rho = mf.rho.values
    good = ~mf.mask.flags
    # R rather than the recomposed psi: S is interpolated across masked points
    R = mf.R.values
    dR = deriv(R, grid, 1)
    sigma = m * D ** 2 * (deriv(rho, grid, 2) - 4 * dR ** 2)
    Pi = m * rho * mf.v.values ** 2 - sigma
    lhs = -deriv(sigma, grid, 1)
    # rho d[rho''/rho - (rho'/rho)^2/2] = rho''' - 8 R' R'', with no division by rho
    rhs = -m * D ** 2 * (deriv(rho, grid, 3) - 8 * dR * deriv(R, grid, 2))
    # floor: one box-mode variation of the peak density
    floor = m * D ** 2 * np.max(rho) * (2 * np.pi / grid.length) ** 3
    scale = max(np.max(np.abs(lhs[good])), floor)
    resid = float(np.max(np.abs(lhs - rhs)[good]) / scale)
    t = mf.time
    return StressReport(RealField(grid, Pi, t), RealField(grid, sigma, t), resid,
                        kinematic_viscosity=D / 2,
                        dynamic_viscosity=RealField(grid, 0.5 * m * D * rho, t))


# ------------------------------------------------------------- trajectory residuals

@dataclass(frozen=True, eq=False)
class Kinematics:
    """Instantaneous fields at an interior snapshot plus centered time derivatives."""

    psi: WaveField
    mask: NodeMask
    g: np.ndarray
    h: np.ndarray
    rho: np.ndarray
    current: np.ndarray
    rho_t: np.ndarray
    current_t: np.ndarray
    phase_t: np.ndarray  # d/dt of arg(psi), pointwise, dimensionless per time
    logrho_t: np.ndarray
    width: float


def current_density(values: np.ndarray, grid: Grid) -> np.ndarray:
    """j = (hbar/m) Im(conj(psi) psi')."""
    return (grid.hbar / grid.mass) * np.imag(np.conj(values) * deriv(values, grid, 1))


def density_width(rho: np.ndarray, grid: Grid) -> float:
    x = grid.x
    w = rho / np.sum(rho)
    mean = np.sum(w * x)
    return float(np.sqrt(np.sum(w * (x - mean) ** 2)))


def kinematics(traj: Trajectory, i: int, rel_threshold=DEFAULT_NODE_THRESHOLD) -> Kinematics:
    if len(traj) < 3:
        raise InsufficientSnapshots("need at least 3 snapshots for centered differences")
    if not 0 < i < len(traj) - 1:
        raise IndexError("kinematics needs an interior snapshot index")
    grid = traj.grid
    dt2 = traj[i + 1].time - traj[i - 1].time
    prev, cur, nxt = traj[i - 1].values, traj[i].values, traj[i + 1].values
    mask = node_mask(traj[i], rel_threshold=rel_threshold)
    g, h, _, _ = log_derivatives(cur, grid, mask)
    rho = np.abs(cur) ** 2
    rp, rn = np.abs(prev) ** 2, np.abs(nxt) ** 2
    good = ~mask.flags
    phase_t = np.zeros(grid.n)
    phase_t[good] = np.angle(nxt[good] * np.conj(prev[good])) / dt2
    rho_t = (rn - rp) / dt2
    logrho_t = np.zeros(grid.n)
    logrho_t[good] = rho_t[good] / rho[good]
    j = current_density(cur, grid)
    j_t = (current_density(nxt, grid) - current_density(prev, grid)) / dt2
    return Kinematics(traj[i], mask, g, h, rho, j, rho_t, j_t, phase_t, logrho_t,
                      density_width(rho, grid))


def _weighted_rms(r, rho, good):
    w = rho[good]
    return float(np.sqrt(np.sum(w * r[good] ** 2) / np.sum(w)))


def _potential(V: Optional[PotentialSpec], traj: Trajectory) -> PotentialSpec:
    return V if V is not None else traj.potential


def _residual_terms(kin: Kinematics, V: PotentialSpec):
    """Dimensionless continuity, quantum-HJ, Euler and momentum-flux residuals at one snapshot."""
    grid = kin.psi.grid
    hbar, m = grid.hbar, grid.mass
    good = ~kin.mask.flags
    rho, j = kin.rho, kin.current
    ell = kin.width
    rate = hbar / (m * ell ** 2)
    energy = hbar ** 2 / (m * ell ** 2)
    rho_norm = np.sqrt(np.sum(rho[good] ** 2))

    cont = kin.rho_t + deriv(j, grid, 1)
    continuity = np.sqrt(np.sum(cont[good] ** 2)) / (rho_norm * rate)

    S_x = hbar * kin.g.imag
    S_t = hbar * kin.phase_t
    Q = -(hbar ** 2 / (2 * m)) * (kin.h.real + kin.g.imag ** 2)
    hj = S_t + S_x ** 2 / (2 * m) + Q + V.values.values
    quantum_hj = _weighted_rms(hj, rho, good) / energy

    # Euler form: d_t(rho v) + d(rho v^2) + (rho/m) V' + (rho/m) Q', with rho Q' = -sigma'
    sigma = _sigma(kin.psi.values, grid)
    _, flow = amplitude_slopes(kin.psi.values, grid)
    force = rho * V.gradient() / m
    eul = (kin.current_t + deriv((hbar / m) ** 2 * flow ** 2, grid, 1) + force
           - deriv(sigma, grid, 1) / m)
    flux_scale = rho_norm * ell * rate ** 2
    euler = np.sqrt(np.sum(eul[good] ** 2)) / flux_scale

    # momentum-flux form: d_t(m j) + d Pi + rho V', Pi = (hbar^2/m)|psi'|^2 - (hbar^2/4m) rho''
    d1 = deriv(kin.psi.values, grid, 1)
    Pi = (hbar ** 2 / m) * np.abs(d1) ** 2 - (hbar ** 2 / (4 * m)) * deriv(rho, grid, 2)
    bal = m * kin.current_t + deriv(Pi, grid, 1) + m * force
    stress = np.sqrt(np.sum(bal[good] ** 2)) / (m * flux_scale)
    return continuity, quantum_hj, euler, stress


def hydro_residuals(traj: Trajectory, V: PotentialSpec = None) -> HydroResiduals:
    """RMS over interior snapshots of the four hydrodynamic residuals.

    Each residual is normalized by the natural scales of the snapshot (density
    width ell, rate hbar/(m ell^2)), so values are dimensionless and comparable
    across refinements.
    """
    if len(traj) < 3:
        raise InsufficientSnapshots("hydro residuals need >= 3 snapshots")
    V = _potential(V, traj)
    rows = np.array([_residual_terms(kinematics(traj, i), V) for i in range(1, len(traj) - 1)])
    rms = np.sqrt(np.mean(rows ** 2, axis=0))
    series = {"time": traj.times[1:-1], "continuity": rows[:, 0], "quantum_hj": rows[:, 1],
              "euler": rows[:, 2], "stress_balance": rows[:, 3]}
    return HydroResiduals(*map(float, rms), dt_used=traj.spacing, series=series)


@dataclass(frozen=True)
class LogDensityResiduals:
    continuity: float
    quantum_hj: float
    hj_agreement: float
    continuity_agreement: float


def log_density_form(traj: Trajectory, V: PotentialSpec = None) -> LogDensityResiduals:
    """Residuals in the variables xi = log rho, S, compared with the (R, S) form.

    xi_t + S''/m + xi' S'/m = 0 and
    S_t - (hbar^2/4m) xi'' - (hbar^2/8m) xi'^2 + S'^2/2m + V = 0.
    The agreement numbers are max pointwise differences (rho-weighted) between
    the xi-form residuals and the R-form ones after mapping variables.
    """
    if len(traj) < 3:
        raise InsufficientSnapshots("log-density form needs >= 3 snapshots")
    V = _potential(V, traj)
    grid = traj.grid
    hbar, m = grid.hbar, grid.mass
    cont_r, hj_r, agree_hj, agree_c = [], [], [], []
    for i in range(1, len(traj) - 1):
        kin = kinematics(traj, i)
        if kin.mask.interior_fraction() > NODE_CONTAMINATION_LIMIT:
            raise NodeContamination("log-density form requires a node-free state")
        good = ~kin.mask.flags
        rho = kin.rho
        energy = hbar ** 2 / (m * kin.width ** 2)
        rate = hbar / (m * kin.width ** 2)
        g, h = kin.g, kin.h
        dg = h - g ** 2  # (psi'/psi)'
        xi_x = 2 * g.real
        xi_xx = 2 * dg.real
        S_x = hbar * g.imag
        S_xx = hbar * dg.imag
        S_t = hbar * kin.phase_t
        r_cont = kin.logrho_t + S_xx / m + xi_x * S_x / m
        r_hj = (S_t - hbar ** 2 / (4 * m) * xi_xx - hbar ** 2 / (8 * m) * xi_x ** 2
                + S_x ** 2 / (2 * m) + V.values.values)
        cont_r.append(_weighted_rms(r_cont, rho, good) / rate)
        hj_r.append(_weighted_rms(r_hj, rho, good) / energy)
        # R-form counterparts from the amplitude route
        R = np.sqrt(rho)
        Q = np.zeros(grid.n)
        Q[good] = -(hbar ** 2 / (2 * m)) * deriv(R, grid, 2)[good] / R[good]
        hj_rform = S_t + S_x ** 2 / (2 * m) + Q + V.values.values
        cont_rform = kin.rho_t + deriv(kin.current, grid, 1)
        agree_hj.append(_weighted_rms(r_hj - hj_rform, rho, good) / energy)
        # xi-form continuity times rho is the R-form continuity (up to time-difference error)
        agree_c.append(_weighted_rms(rho * r_cont - cont_rform, np.ones_like(rho), good)
                       / (np.sqrt(np.mean(rho[good] ** 2)) * rate))
    return LogDensityResiduals(float(np.sqrt(np.mean(np.square(cont_r)))),
                               float(np.sqrt(np.mean(np.square(hj_r)))),
                               float(np.max(agree_hj)), float(np.max(agree_c)))
