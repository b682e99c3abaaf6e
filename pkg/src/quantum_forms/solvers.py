"""Time evolution for the linear, logarithmic and complex-diffusion Schrodinger equations.

Three production steppers and one implicit oracle:

* ``step_linear``        Strang split-step Fourier, ``i hbar psi_t = -(hbar^2/2m) psi'' + V psi``
* ``step_log_nlse``      same splitting with the effective potential ``V - b log|psi|^2``
* ``step_fractal_nlse``  explicit RK4 with spectral derivatives for the non-Hermitian
  equation with complex diffusion constant ``alpha + i beta``
* ``crank_nicolson_step``  implicit midpoint rule solved by preconditioned GMRES
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import NoConvergence, NodeContamination, NonFinite, StabilityViolation
from .field_core import Grid, RealField, WaveField, deriv, node_mask

SCHEMES = ("split_step_strang", "crank_nicolson", "rk4_semi_spectral")
EQUATIONS = ("linear", "log", "fractal")

# RK4 is stable on the imaginary axis up to |lambda dt| = 2*sqrt(2); keep a margin.
RK4_STABILITY_LIMIT = 2.5
NODE_CONTAMINATION_LIMIT = 0.01


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """External potential sampled on the solver grid.

    ``gradient`` is optional; when absent it is derived from the samples
    (analytically for the harmonic kind, by second-order differences otherwise).
    """

    kind: str
    values: RealField
    omega: Optional[float] = None
    center: float = 0.0
    gradient_values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("free", "harmonic", "custom"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "harmonic" and not (self.omega and self.omega > 0):
            raise ValueError("harmonic potential needs omega > 0")

    @property
    def grid(self) -> Grid:
        return self.values.grid

    @classmethod
    def free(cls, grid: Grid) -> "PotentialSpec":
        return cls("free", RealField(grid, np.zeros(grid.n)))

    @classmethod
    def harmonic(cls, grid: Grid, omega: float, center: float = 0.0) -> "PotentialSpec":
        v = 0.5 * grid.mass * omega ** 2 * (grid.x - center) ** 2
        return cls("harmonic", RealField(grid, v), omega=omega, center=center)

    @classmethod
    def custom(cls, grid: Grid, values, gradient=None) -> "PotentialSpec":
        grad = None if gradient is None else np.asarray(gradient, dtype=float)
        return cls("custom", RealField(grid, values), gradient_values=grad)

    def gradient(self) -> np.ndarray:
        if self.gradient_values is not None:
            return self.gradient_values
        if self.kind == "free":
            return np.zeros(self.grid.n)
        if self.kind == "harmonic":
            return self.grid.mass * self.omega ** 2 * (self.grid.x - self.center)
        return np.gradient(self.values.values, self.grid.dx, edge_order=2)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "harmonic":
            d.update(omega=self.omega, center=self.center)
        elif self.kind == "custom":
            d["values"] = [float(v) for v in self.values.values]
        return d


@dataclass(frozen=True)
class SolverParams:
    dt: float
    scheme: str = "split_step_strang"
    b: float = 0.0
    alpha: float = 1.0
    beta: float = 0.0
    log_floor: float = 1e-30

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.b < 0:
            raise ValueError("b must be >= 0")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not self.log_floor > 0:
            raise ValueError("log_floor must be > 0")

    @property
    def hbar_complex(self) -> complex:
        return complex(self.alpha, self.beta)

    def stability_bound(self, grid: Grid, potential: PotentialSpec, scheme: str = None) -> float:
        """Largest admissible dt for ``scheme`` (defaults to ``self.scheme``)."""
        scheme = scheme or self.scheme
        vmax = float(np.max(np.abs(potential.values.values)))
        if scheme == "crank_nicolson":
            return np.inf
        if scheme == "split_step_strang":
            # potential phase per step must stay below pi or it aliases
            veff = vmax + self.b * abs(np.log(self.log_floor))
            return np.inf if veff == 0 else np.pi * grid.hbar / veff
        hc = abs(self.hbar_complex)
        lam = (grid.hbar / (2 * grid.mass)) * grid.k_max ** 2 * (self.alpha + abs(self.beta)) / hc
        lam += vmax / grid.hbar
        return RK4_STABILITY_LIMIT / lam

    def check_stability(self, grid: Grid, potential: PotentialSpec, scheme: str = None) -> None:
        bound = self.stability_bound(grid, potential, scheme)
        if self.dt > bound:
            raise StabilityViolation(
                f"dt={self.dt:g} exceeds stability bound {bound:g} for {scheme or self.scheme}")

    def to_dict(self) -> dict:
        return {"dt": self.dt, "scheme": self.scheme, "b": self.b, "alpha": self.alpha,
                "beta": self.beta, "log_floor": self.log_floor}


@dataclass(eq=False)
class Trajectory:
    """Uniformly spaced sequence of snapshots produced by :func:`evolve`."""

    snapshots: List[WaveField]
    params: SolverParams
    potential: PotentialSpec
    equation: str = "linear"
    norms: List[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.norms:
            self.norms = [s.norm() for s in self.snapshots]

    @property
    def grid(self) -> Grid:
        return self.snapshots[0].grid

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def spacing(self) -> float:
        t = self.times
        return float(t[1] - t[0]) if len(t) > 1 else 0.0

    @property
    def norm_drift(self) -> np.ndarray:
        n = np.asarray(self.norms)
        return np.abs(n - n[0])

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, i):
        return self.snapshots[i]


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise NonFinite("solver produced non-finite values")
    return values


def _kinetic_phase(grid: Grid, dt: float) -> np.ndarray:
    return np.exp(-1j * grid.hbar * grid.k ** 2 * dt / (2 * grid.mass))


def _strang(psi: WaveField, potential, dt: float) -> np.ndarray:
    """Strang splitting; ``potential(values)`` returns the (possibly nonlinear) V_eff.

    A potential sub-step leaves |psi| unchanged, so evaluating V_eff at the
    start of each half-step solves that sub-step exactly.
    """
    grid = psi.grid
    c = -1j * dt / (2 * grid.hbar)
    out = np.exp(c * potential(psi.values)) * psi.values
    out = np.fft.ifft(_kinetic_phase(grid, dt) * np.fft.fft(out))
    return np.exp(c * potential(out)) * out


def step_linear(psi: WaveField, V: PotentialSpec, p: SolverParams) -> WaveField:
    p.check_stability(psi.grid, V, "split_step_strang")
    v = V.values.values
    out = _strang(psi, lambda _: v, p.dt)
    return WaveField(psi.grid, _check_finite(out), psi.time + p.dt)


def log_potential(psi_values: np.ndarray, b: float, log_floor: float) -> np.ndarray:
    """-b log(max(|psi|^2, floor * max|psi|^2))."""
    rho = np.abs(psi_values) ** 2
    floor = log_floor * np.max(rho)
    return -b * np.log(np.maximum(rho, floor))


def step_log_nlse(psi: WaveField, V: PotentialSpec, p: SolverParams) -> WaveField:
    p.check_stability(psi.grid, V, "split_step_strang")
    v = V.values.values
    if p.b == 0:
        out = _strang(psi, lambda _: v, p.dt)
    else:
        out = _strang(psi, lambda z: v + log_potential(z, p.b, p.log_floor), p.dt)
    return WaveField(psi.grid, _check_finite(out), psi.time + p.dt)


def log_derivative_sq(values: np.ndarray, grid: Grid, check=True) -> np.ndarray:
    """(psi'/psi)^2 * psi on unmasked points, zero on masked ones."""
    mask = node_mask(np.abs(values) ** 2, grid)
    if check and mask.interior_fraction() > NODE_CONTAMINATION_LIMIT:
        raise NodeContamination(
            f"{100 * mask.interior_fraction():.1f}% of points are interior nodes")
    d1 = deriv(values, grid, 1)
    good = ~mask.flags
    out = np.zeros_like(values)
    out[good] = d1[good] ** 2 / values[good]
    return out


def fractal_rhs(values: np.ndarray, grid: Grid, U: np.ndarray, p: SolverParams) -> np.ndarray:
    """psi_t for the complex-diffusion equation

        i hbar psi_t = -(hbar^2/2m)(alpha/h) psi'' + U psi - i (hbar^2/2m)(beta/h)(psi'/psi)^2 psi.

    ``h = alpha + i beta`` is the complex diffusion constant; the prefactors
    ``hbar^2/2m`` and the left-hand ``hbar`` are the real grid constants.
    """
    hbar, m = grid.hbar, grid.mass
    hc = p.hbar_complex
    kin = -(hbar ** 2 / (2 * m)) * (p.alpha / hc) * deriv(values, grid, 2)
    rhs = kin + U * values
    if p.beta != 0:
        rhs = rhs - 1j * (hbar ** 2 / (2 * m)) * (p.beta / hc) * log_derivative_sq(values, grid)
    return rhs / (1j * hbar)


def step_fractal_nlse(psi: WaveField, V: PotentialSpec, p: SolverParams) -> WaveField:
    grid = psi.grid
    p.check_stability(grid, V, "rk4_semi_spectral")
    U = V.values.values
    dt = p.dt
    y = psi.values
    k1 = fractal_rhs(y, grid, U, p)
    k2 = fractal_rhs(y + 0.5 * dt * k1, grid, U, p)
    k3 = fractal_rhs(y + 0.5 * dt * k2, grid, U, p)
    k4 = fractal_rhs(y + dt * k3, grid, U, p)
    out = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return WaveField(grid, _check_finite(out), psi.time + dt)


def apply_hamiltonian(values: np.ndarray, grid: Grid, V: np.ndarray) -> np.ndarray:
    kin = np.fft.ifft((grid.hbar ** 2 * grid.k ** 2 / (2 * grid.mass)) * np.fft.fft(values))
    return kin + V * values


def crank_nicolson_step(psi: WaveField, V: PotentialSpec, p: SolverParams,
                        tol: float = 1e-12, maxiter: int = 200) -> WaveField:
    """(1 + i H dt / 2hbar) psi+ = (1 - i H dt / 2hbar) psi, H the spectral Hamiltonian.

    GMRES with the kinetic part inverted exactly in Fourier space as
    preconditioner; the true relative residual must reach ``tol``.
    """
    grid = psi.grid
    n, hbar, dt = grid.n, grid.hbar, p.dt
    v = V.values.values
    c = 1j * dt / (2 * hbar)

    def lhs(z):
        return z + c * apply_hamiltonian(z, grid, v)

    tk = grid.hbar ** 2 * grid.k ** 2 / (2 * grid.mass)
    pre = 1.0 / (1.0 + c * tk)
    A = LinearOperator((n, n), matvec=lhs, dtype=complex)
    M = LinearOperator((n, n), matvec=lambda z: np.fft.ifft(pre * np.fft.fft(z)), dtype=complex)
    rhs = psi.values - c * apply_hamiltonian(psi.values, grid, v)
    x0 = np.fft.ifft(pre * np.fft.fft(rhs))
    sol, info = gmres(A, rhs, x0=x0, M=M, rtol=tol * 1e-2, atol=0.0, restart=min(n, 60),
                      maxiter=maxiter)
    resid = np.linalg.norm(lhs(sol) - rhs) / np.linalg.norm(rhs)
    if info != 0 or resid > tol:
        raise NoConvergence(f"GMRES stopped with info={info}, residual={resid:.2e}")
    return WaveField(grid, _check_finite(sol), psi.time + dt)


def stepper_for(equation: str, scheme: str):
    if equation == "log":
        return step_log_nlse
    if equation == "fractal":
        return step_fractal_nlse
    if equation != "linear":
        raise ValueError(f"equation must be one of {EQUATIONS}")
    return {"split_step_strang": step_linear, "crank_nicolson": crank_nicolson_step,
            "rk4_semi_spectral": step_fractal_nlse}[scheme]


def scheme_for(equation: str, scheme: str) -> str:
    if equation == "log":
        return "split_step_strang"
    if equation == "fractal":
        return "rk4_semi_spectral"
    return scheme


def evolve(psi0: WaveField, V: PotentialSpec, p: SolverParams, n_steps: int,
           equation: str = "linear", stride: int = 1) -> Trajectory:
    """Advance ``n_steps`` steps, keeping every ``stride``-th snapshot (including t0)."""
    step = stepper_for(equation, p.scheme)
    if equation == "linear" and p.scheme == "rk4_semi_spectral" and p.beta != 0:
        raise ValueError("linear equation with rk4 scheme requires beta = 0")
    p.check_stability(psi0.grid, V, scheme_for(equation, p.scheme))
    snaps, norms = [psi0], [psi0.norm()]
    psi = psi0
    t0 = psi0.time
    for i in range(1, n_steps + 1):
        psi = step(psi, V, p)
        # avoid accumulated round-off in the time stamps
        psi = WaveField(psi.grid, psi.values, t0 + i * p.dt)
        if i % stride == 0:
            snaps.append(psi)
            norms.append(psi.norm())
    return Trajectory(snaps, p, V, equation, norms)
