"""Information-theoretic functionals of the density and energy functionals of psi."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import InsufficientSnapshots, MomentOverflow, NodeContamination
from .field_core import Grid, RealField, WaveField, deriv, node_mask, quadrature
from .madelung import NODE_CONTAMINATION_LIMIT, amplitude_slopes, log_derivatives
from .solvers import PotentialSpec, SolverParams, Trajectory, apply_hamiltonian, fractal_rhs

EDGE_FRACTION = 1.0 / 32
EDGE_MASS_LIMIT = 1e-10


def _density(rho: Union[RealField, WaveField]) -> RealField:
    return RealField(rho.grid, rho.density, rho.time) if isinstance(rho, WaveField) else rho


def _checked_mask(rho: RealField, mask=None):
    if mask is None:
        mask = node_mask(rho)
    if mask.interior_fraction() > NODE_CONTAMINATION_LIMIT:
        raise NodeContamination("density has interior nodes")
    return mask


def fisher_information(rho: Union[RealField, WaveField], mask=None) -> float:
    """F = integral of rho ((log rho)')^2 over unmasked points."""
    rho = _density(rho)
    mask = _checked_mask(rho, mask)
    good = ~mask.flags
    r = rho.values
    d1 = deriv(r, rho.grid, 1)
    integrand = np.zeros(rho.grid.n)
    integrand[good] = d1[good] ** 2 / r[good]
    return quadrature(integrand, rho.grid)


def shannon_entropy(rho: Union[RealField, WaveField], mask=None) -> float:
    """-integral rho log rho, with the integrand set to 0 on masked points."""
    rho = _density(rho)
    if mask is None:
        mask = node_mask(rho)
    good = ~mask.flags
    r = rho.values
    integrand = np.zeros(rho.grid.n)
    integrand[good] = r[good] * np.log(r[good])
    return -quadrature(integrand, rho.grid)


@dataclass(frozen=True)
class QuantumPotentialChain:
    """Three evaluations that agree for any smooth density.

    ``neg_mean_q`` is -integral(q rho) with q = u^2/2 + D u' the quantum
    potential per unit mass written in osmotic form (q = -Q/m);
    ``half_osmotic`` is (1/2) integral(u^2 rho); ``half_fisher`` is D^2 F / 2.
    """

    neg_mean_q: float
    half_osmotic: float
    half_fisher: float
    fisher_from_q: float  # -(2/D^2) integral(q rho)

    @property
    def max_relative_gap(self) -> float:
        vals = np.array([self.neg_mean_q, self.half_osmotic, self.half_fisher])
        return float(np.ptp(vals) / np.max(np.abs(vals))) if np.any(vals) else 0.0


def quantum_potential_chain(rho: Union[RealField, WaveField], mask=None) -> QuantumPotentialChain:
    rho = _density(rho)
    grid = rho.grid
    mask = _checked_mask(rho, mask)
    good = ~mask.flags
    D = grid.diffusion
    r = rho.values
    # q rho from the curvature of sqrt(rho): q = 2 D^2 R''/R, so q rho = 2 D^2 R'' R
    R = np.sqrt(np.maximum(r, 0.0))
    q_rho = 2 * D ** 2 * deriv(R, grid, 2) * R
    mean_q = quadrature(np.where(good, q_rho, 0.0), grid)
    u = np.zeros(grid.n)
    d1 = deriv(r, grid, 1)
    u[good] = D * d1[good] / r[good]
    half_u = 0.5 * quadrature(np.where(good, u ** 2 * r, 0.0), grid)
    F = fisher_information(rho, mask)
    return QuantumPotentialChain(-mean_q, half_u, 0.5 * D ** 2 * F, -(2 / D ** 2) * mean_q)


def mean_from_fluctuation_ansatz(rho: Union[RealField, WaveField], mask=None) -> float:
    """(Delta N)^2 = c integral rho |(log rho)'|^2 with c = hbar^2/4."""
    rho = _density(rho)
    grid = rho.grid
    mask = _checked_mask(rho, mask)
    good = ~mask.flags
    r = rho.values
    c = grid.hbar ** 2 / 4
    dlog = np.zeros(grid.n)
    dlog[good] = deriv(r, grid, 1)[good] / r[good]
    return c * quadrature(np.where(good, r * dlog ** 2, 0.0), grid)


# ---------------------------------------------------------------- heat flow / entropy

def heat_flow(rho0: RealField, D: float, times: Sequence[float]) -> list:
    """Exact periodic solution of rho_t = D rho'' sampled at ``times``."""
    grid = rho0.grid
    spectrum = np.fft.fft(rho0.values)
    out = []
    for t in times:
        vals = np.fft.ifft(np.exp(-D * grid.k ** 2 * (t - rho0.time)) * spectrum).real
        out.append(RealField(grid, vals, float(t)))
    return out


@dataclass(frozen=True, eq=False)
class EntropySeries:
    """Per-snapshot entropy balance; rate and derived columns cover interior snapshots.

    ``diffusive_rate`` is D F (the heat-flow prediction for dS/dt).  For wave
    trajectories ``balance_rate`` is -<v u>/D and ``schwarz_bound`` is
    sqrt(<v^2><u^2>)/D, the instantaneous cap on |dS/dt|.
    """

    times: np.ndarray
    entropy: np.ndarray
    fisher: np.ndarray
    interior_times: np.ndarray
    rate: np.ndarray
    diffusive_rate: np.ndarray
    balance_rate: np.ndarray = None
    schwarz_bound: np.ndarray = None

    def schwarz_holds(self, slack: float = 1e-9) -> bool:
        """D |dS/dt| <= <v^2>^(1/2) <u^2>^(1/2) at every interior snapshot.

        The instantaneous rate -<v u>/D is checked; it is the exact derivative
        of S, so no time-discretization slack enters.
        """
        if self.schwarz_bound is None:
            raise ValueError("Schwarz bound needs a wave trajectory")
        return bool(np.all(np.abs(self.balance_rate) <= self.schwarz_bound * (1 + slack) + slack))


def _velocity_moments(psi: WaveField, mask):
    grid = psi.grid
    hbar, m, D = grid.hbar, grid.mass, grid.diffusion
    good = ~mask.flags
    R = np.abs(psi.values)
    slope, flow = amplitude_slopes(psi.values, grid)
    # rho v = (hbar/m) R flow, rho u = 2 D R slope; products stay finite in the tails
    vu = quadrature(np.where(good, (hbar / m) * flow * 2 * D * slope, 0.0), grid)
    v2 = quadrature(np.where(good, ((hbar / m) * flow) ** 2, 0.0), grid)
    u2 = quadrature(np.where(good, (2 * D * slope) ** 2, 0.0), grid)
    norm = quadrature(R ** 2, grid)
    return vu / norm, v2 / norm, u2 / norm


def entropy_production(snapshots: Union[Trajectory, Sequence[RealField]],
                       D: float = None) -> EntropySeries:
    """Entropy S(t), dS/dt by centered differences, and the balance terms.

    ``snapshots`` is a wave trajectory or a uniformly spaced list of
    densities.  ``D`` defaults to hbar/2m of the grid.
    """
    wave = isinstance(snapshots, Trajectory)
    seq = list(snapshots.snapshots) if wave else list(snapshots)
    if len(seq) < 3:
        raise InsufficientSnapshots("entropy production needs >= 3 snapshots")
    grid = seq[0].grid
    D = grid.diffusion if D is None else D
    times = np.array([s.time for s in seq])
    dens = [_density(s) for s in seq]
    S = np.array([shannon_entropy(r) for r in dens])
    F = np.array([fisher_information(r) for r in dens])
    rate = (S[2:] - S[:-2]) / (times[2:] - times[:-2])
    bal = bound = None
    if wave:
        mom = np.array([_velocity_moments(s, node_mask(s)) for s in seq[1:-1]])
        bal = -mom[:, 0] / D
        bound = np.sqrt(mom[:, 1] * mom[:, 2]) / D
    return EntropySeries(times, S, F, times[1:-1], rate, D * F[1:-1], bal, bound)


# ----------------------------------------------------------------- uncertainty

@dataclass(frozen=True, eq=False)
class UncertaintyReport:
    var_x: float
    fisher: float
    fisher_length: float
    delta_x: float
    p_cl: RealField
    delta_p_nc: float
    product: float
    delta_p: float

    @property
    def chain(self):
        """(Delta X Delta p, delta X Delta p, delta X Delta p_nc)."""
        return (self.delta_x * self.delta_p, self.fisher_length * self.delta_p, self.product)

    def chain_holds(self, hbar: float, rtol: float = 1e-8) -> bool:
        a, b, c = self.chain
        return a >= b * (1 - rtol) and b >= 0.5 * hbar * (1 - rtol)


def _check_edges(rho: np.ndarray, grid: Grid) -> None:
    w = max(1, int(round(EDGE_FRACTION * grid.n)))
    edge = grid.dx * (np.sum(rho[:w]) + np.sum(rho[-w:])) / quadrature(rho, grid)
    if edge > EDGE_MASS_LIMIT:
        raise MomentOverflow(f"mass {edge:.2e} within {w} points of the box edge")


def momentum_moments(psi: WaveField):
    """(<p>, <p^2>) from the discrete Fourier spectrum."""
    grid = psi.grid
    power = np.abs(np.fft.fft(psi.values)) ** 2
    power /= np.sum(power)
    p = grid.hbar * grid.k
    return float(np.sum(power * p)), float(np.sum(power * p ** 2))


def exact_uncertainty(psi: WaveField) -> UncertaintyReport:
    """Position spread, Fisher length and the nonclassical momentum spread.

    Delta p_nc^2 = <p^2> - <p_cl^2> with <p^2> spectral and p_cl = hbar Im(psi'/psi).
    """
    grid = psi.grid
    rho = psi.density
    _check_edges(rho, grid)
    mask = _checked_mask(RealField(grid, rho), None)
    good = ~mask.flags
    norm = quadrature(rho, grid)
    x = grid.x
    mean_x = quadrature(rho * x, grid) / norm
    var_x = quadrature(rho * (x - mean_x) ** 2, grid) / norm
    F = fisher_information(RealField(grid, rho / norm), mask)
    g, _, _, _ = log_derivatives(psi.values, grid, mask)
    p_cl = grid.hbar * g.imag
    _, flow = amplitude_slopes(psi.values, grid)
    pcl2 = quadrature(np.where(good, (grid.hbar * flow) ** 2, 0.0), grid) / norm
    mean_p, p2 = momentum_moments(psi)
    dp_nc = float(np.sqrt(max(p2 - pcl2, 0.0)))
    dX = float(F ** -0.5) if F > 0 else np.inf
    return UncertaintyReport(float(var_x), float(F), dX, float(np.sqrt(var_x)),
                             RealField(grid, p_cl, psi.time), dp_nc, dX * dp_nc,
                             float(np.sqrt(max(p2 - mean_p ** 2, 0.0))))


# -------------------------------------------------------------------- Ehrenfest

@dataclass(frozen=True, eq=False)
class EhrenfestSeries:
    times: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    mean_force: np.ndarray
    interior_times: np.ndarray
    r1: np.ndarray
    r2: np.ndarray


def ehrenfest_residuals(traj: Trajectory, V: PotentialSpec = None) -> EhrenfestSeries:
    """r1 = d<x>/dt - <p>/m and r2 = m d^2<x>/dt^2 + <V'> at interior snapshots."""
    if len(traj) < 5:
        raise InsufficientSnapshots("Ehrenfest residuals need >= 5 snapshots")
    V = V if V is not None else traj.potential
    grid = traj.grid
    m = grid.mass
    dVdx = V.gradient()
    xs, ps, fs = [], [], []
    for s in traj.snapshots:
        rho = s.density
        norm = quadrature(rho, grid)
        xs.append(quadrature(rho * grid.x, grid) / norm)
        ps.append(momentum_moments(s)[0])
        fs.append(quadrature(rho * dVdx, grid) / norm)
    xs, ps, fs = map(np.array, (xs, ps, fs))
    t = traj.times
    dt = traj.spacing
    r1 = (xs[2:] - xs[:-2]) / (t[2:] - t[:-2]) - ps[1:-1] / m
    r2 = m * (xs[2:] - 2 * xs[1:-1] + xs[:-2]) / dt ** 2 + fs[1:-1]
    return EhrenfestSeries(t, xs, ps, fs, t[1:-1], r1, r2)


# -------------------------------------------------------------------- energies

@dataclass(frozen=True)
class EnergyReport:
    e_qm: float
    e_ft: float
    difference: float
    imag_part: float = 0.0  # largest imaginary part of either functional


def energy_functionals(psi: WaveField, V: PotentialSpec = None, params: SolverParams = None,
                       equation: str = "log") -> EnergyReport:
    """Field-theory and quantum-mechanical energies.

    ``equation='log'``: E_FT integrates the Hamiltonian density
    -(hbar^2/2m) psi* psi'' + V|psi|^2 - b|psi|^2 log|psi|^2 + b|psi|^2, while
    E_QM = <psi|H psi> with H carrying -b log|psi|^2; the gap is b times the norm.
    ``equation='fractal'``: both are the density
    -(hbar^2/2m)(alpha/h) psi* psi'' + U|psi|^2 - i(hbar^2/2m)(beta/h) psi* (psi'/psi)^2 psi,
    E_QM evaluated through the evolution operator (i hbar times psi_t).
    ``equation='linear'`` treats b as 0.
    """
    grid = psi.grid
    hbar, m = grid.hbar, grid.mass
    params = params or SolverParams(dt=1.0)
    Vv = np.zeros(grid.n) if V is None else V.values.values
    vals = psi.values
    conj = np.conj(vals)
    rho = np.abs(vals) ** 2
    if equation == "fractal":
        hc = params.hbar_complex
        mask = _checked_mask(RealField(grid, rho), None)
        good = ~mask.flags
        g, _, _, _ = log_derivatives(vals, grid, mask)
        dens = (-(hbar ** 2 / (2 * m)) * (params.alpha / hc) * conj * deriv(vals, grid, 2)
                + Vv * rho - 1j * (hbar ** 2 / (2 * m)) * (params.beta / hc)
                * np.where(good, conj * g ** 2 * vals, 0.0))
        e_ft = grid.dx * np.sum(dens)
        e_qm = grid.dx * np.sum(conj * (1j * hbar) * fractal_rhs(vals, grid, Vv, params))
        imag = max(abs(e_ft.imag), abs(e_qm.imag))
        return EnergyReport(float(e_qm.real), float(e_ft.real), float(e_ft.real - e_qm.real), imag)
    if equation not in ("log", "linear"):
        raise ValueError("equation must be 'log', 'linear' or 'fractal'")
    b = params.b if equation == "log" else 0.0
    log_rho = np.zeros(grid.n)
    if b:
        _checked_mask(RealField(grid, rho), None)
        floor = params.log_floor * np.max(rho)
        log_rho = np.log(np.maximum(rho, floor))
    kinetic = -(hbar ** 2 / (2 * m)) * conj * deriv(vals, grid, 2)
    e_ft = grid.dx * np.sum(kinetic + Vv * rho - b * rho * log_rho + b * rho)
    e_qm = grid.dx * np.sum(conj * apply_hamiltonian(vals, grid, Vv - b * log_rho))
    imag = max(abs(e_ft.imag), abs(e_qm.imag))
    return EnergyReport(float(e_qm.real), float(e_ft.real), float(e_ft.real - e_qm.real), imag)
