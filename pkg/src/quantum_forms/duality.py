"""Dual pair of real diffusions built from a Schroedinger wave function.

With psi = exp(l + i s), l = log|psi| and s = S/hbar, the pair
phi = exp(l + s), phi_hat = exp(l - s) satisfies

    hbar phi_t     + (hbar^2/2m) phi''     + c phi     = 0
    -hbar phi_hat_t + (hbar^2/2m) phi_hat'' + c phi_hat = 0

with c = V + 2Q exactly when psi solves the linear Schroedinger equation.
For hbar = m = 1 these are the natural-unit forms with coefficient 1/2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import DriftUnsupported, InsufficientSnapshots, Overflow
from .field_core import Grid, RealField, WaveField
from .madelung import MadelungFields, decompose, density_width, kinematics
from .solvers import PotentialSpec, Trajectory

EXPONENT_LIMIT = 300.0
UNITS = ("natural", "scaled")


@dataclass(frozen=True, eq=False)
class DualPair:
    phi: RealField
    phi_hat: RealField
    c: RealField
    drift_a: float = 0.0
    units: str = "scaled"
    gauge: float = 0.0  # constant removed from S/hbar before exponentiating

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "time": self.phi.time,
                "phi": self.phi.values.tolist(), "phi_hat": self.phi_hat.values.tolist(),
                "c": self.c.values.tolist(), "drift_a": self.drift_a, "units": self.units,
                "gauge": self.gauge}

    @classmethod
    def from_dict(cls, d: dict) -> "DualPair":
        grid = Grid.from_dict(d["grid"])
        t = d.get("time", 0.0)
        return cls(RealField(grid, d["phi"], t), RealField(grid, d["phi_hat"], t),
                   RealField(grid, d["c"], t), d.get("drift_a", 0.0), d.get("units", "scaled"),
                   d.get("gauge", 0.0))


def _check_units(grid: Grid, units: str) -> None:
    if units not in UNITS:
        raise ValueError(f"units must be one of {UNITS}")
    if units == "natural" and not (grid.hbar == 1.0 and grid.mass == 1.0):
        raise ValueError("natural units require hbar = m = 1")


def _require_no_drift(a: float) -> None:
    if a != 0:
        raise DriftUnsupported("only a = 0 is supported for the dual diffusion pair")


def to_dual(mf: MadelungFields, V: PotentialSpec = None, units: str = "scaled",
            gauge: float = None) -> DualPair:
    """phi = exp(l + s~), phi_hat = exp(l - s~) with s~ = S/hbar - gauge.

    ``gauge`` defaults to the mean of S/hbar over unmasked points.  Masked
    points carry phi = phi_hat = 0.
    """
    grid = mf.grid
    _check_units(grid, units)
    good = ~mf.mask.flags
    s = mf.S.values / grid.hbar
    if gauge is None:
        gauge = float(np.mean(s[good]))
    s = s - gauge
    ell = np.zeros(grid.n)
    ell[good] = np.log(mf.R.values[good])
    up, down = ell + s, ell - s
    if max(np.max(np.abs(up[good])), np.max(np.abs(down[good]))) > EXPONENT_LIMIT:
        raise Overflow(f"dual exponent exceeds {EXPONENT_LIMIT:g}")
    phi = np.where(good, np.exp(up), 0.0)
    phi_hat = np.where(good, np.exp(down), 0.0)
    Vv = np.zeros(grid.n) if V is None else V.values.values
    c = np.where(good, Vv + 2 * mf.Q.values, 0.0)
    t = mf.time
    return DualPair(RealField(grid, phi, t), RealField(grid, phi_hat, t), RealField(grid, c, t),
                    0.0, units, float(gauge))


def from_dual(pair: DualPair) -> MadelungFields:
    """Invert: R = sqrt(phi phi_hat), S = hbar (log(phi/phi_hat)/2 + gauge)."""
    grid = pair.grid
    phi, phi_hat = pair.phi.values, pair.phi_hat.values
    good = (phi > 0) & (phi_hat > 0)
    R = np.sqrt(phi * phi_hat)
    s = np.zeros(grid.n)
    s[good] = 0.5 * np.log(phi[good] / phi_hat[good]) + pair.gauge
    return decompose(WaveField(grid, R * np.exp(1j * s), pair.phi.time))


@dataclass(frozen=True, eq=False)
class CreationTerm:
    closed: RealField
    direct: Optional[RealField]
    mismatch: Optional[float]


def _energy_scale(rho: np.ndarray, grid: Grid) -> float:
    return grid.hbar ** 2 / (grid.mass * density_width(rho, grid) ** 2)


def creation_term(mf: MadelungFields, V: PotentialSpec = None, a: float = 0.0,
                  phase_rate: np.ndarray = None) -> CreationTerm:
    """c = V + 2Q, plus the direct route -V - 2 S_t - S'^2/m when S_t is supplied.

    ``phase_rate`` is S_t (action per time) on the grid.  ``mismatch`` is the
    rho-weighted RMS of the difference divided by hbar^2/(m ell^2), ell the
    density width.
    """
    _require_no_drift(a)
    grid = mf.grid
    good = ~mf.mask.flags
    Vv = np.zeros(grid.n) if V is None else V.values.values
    closed = np.where(good, Vv + 2 * mf.Q.values, 0.0)
    t = mf.time
    if phase_rate is None:
        return CreationTerm(RealField(grid, closed, t), None, None)
    S_x = grid.mass * mf.v.values
    direct = np.where(good, -Vv - 2 * np.asarray(phase_rate) - S_x ** 2 / grid.mass, 0.0)
    rho = mf.rho.values
    diff = (closed - direct)[good]
    w = rho[good]
    mismatch = float(np.sqrt(np.sum(w * diff ** 2) / np.sum(w)) / _energy_scale(rho, grid))
    return CreationTerm(RealField(grid, closed, t), RealField(grid, direct, t), mismatch)


def creation_term_at(traj: Trajectory, i: int, V: PotentialSpec = None) -> CreationTerm:
    """Both routes of c at interior snapshot ``i``, S_t from centered differences."""
    V = V if V is not None else traj.potential
    kin = kinematics(traj, i)
    mf = decompose(traj[i], kin.mask)
    return creation_term(mf, V, 0.0, traj.grid.hbar * kin.phase_t)


@dataclass(frozen=True)
class DualityResiduals:
    res_phi: float
    res_phi_hat: float
    series: Optional[Dict[str, np.ndarray]] = field(default=None, repr=False)

    def __iter__(self):
        return iter((self.res_phi, self.res_phi_hat))


def _snapshot_residuals(traj: Trajectory, i: int, Vv: np.ndarray):
    grid = traj.grid
    hbar, m = grid.hbar, grid.mass
    kin = kinematics(traj, i)
    good = ~kin.mask.flags
    g, h = kin.g, kin.h
    dg = h - g ** 2
    Q = -(hbar ** 2 / (2 * m)) * (h.real + g.imag ** 2)
    c = Vv + 2 * Q
    ell_t = 0.5 * kin.logrho_t
    s_t = kin.phase_t
    kin_coef = hbar ** 2 / (2 * m)
    b_phi = hbar * (ell_t + s_t) + kin_coef * ((g.real + g.imag) ** 2 + dg.real + dg.imag) + c
    b_hat = -hbar * (ell_t - s_t) + kin_coef * ((g.real - g.imag) ** 2 + dg.real - dg.imag) + c
    # exponents of phi and phi_hat (mean gauge); constant shifts cancel in the weights
    mf = decompose(kin.psi, kin.mask)
    s = mf.S.values / hbar
    s = s - np.mean(s[good])
    ell = np.log(np.where(good, mf.R.values, 1.0))
    up, down = (ell + s)[good], (ell - s)[good]
    if max(np.max(np.abs(up)), np.max(np.abs(down))) > EXPONENT_LIMIT:
        raise Overflow(f"dual exponent exceeds {EXPONENT_LIMIT:g}")
    scale = _energy_scale(kin.rho, grid)

    def weighted(b, expo):
        w = np.exp(2 * (expo - np.max(expo)))
        return float(np.sqrt(np.sum(w * b[good] ** 2) / np.sum(w)) / scale)

    return weighted(b_phi, up), weighted(b_hat, down)


def verify_duality(traj: Trajectory, V: PotentialSpec = None, a: float = 0.0,
                   units: str = "scaled") -> DualityResiduals:
    """L2 residuals of both diffusion equations, RMS over interior snapshots.

    Each residual is the phi-weighted (resp. phi_hat-weighted) RMS of
    (equation)/phi, normalized by hbar^2/(m ell^2).  Dividing by phi first
    keeps exponentially large values out of the arithmetic; the weighting
    makes this the L2 norm of the equation itself relative to the L2 norm of
    phi, which is invariant under constant rescaling of phi (gauge).
    """
    _require_no_drift(a)
    if len(traj) < 3:
        raise InsufficientSnapshots("duality residuals need >= 3 snapshots")
    _check_units(traj.grid, units)
    V = V if V is not None else traj.potential
    Vv = V.values.values
    rows = np.array([_snapshot_residuals(traj, i, Vv) for i in range(1, len(traj) - 1)])
    rms = np.sqrt(np.mean(rows ** 2, axis=0))
    return DualityResiduals(float(rms[0]), float(rms[1]),
                            {"time": traj.times[1:-1], "res_phi": rows[:, 0],
                             "res_phi_hat": rows[:, 1]})
