"""Shared builders for the test suite."""
import numpy as np
from hypothesis import strategies as st

from quantum_forms.field_core import Grid, RealField, WaveField
from quantum_forms.solvers import PotentialSpec, SolverParams, Trajectory


def stationary_trajectory(psi: WaveField, energy: float, V: PotentialSpec, dt=0.01, n=7):
    """Exact snapshots psi exp(-i E t / hbar) of a stationary state."""
    g = psi.grid
    snaps = [WaveField(g, psi.values * np.exp(-1j * energy * k * dt / g.hbar), k * dt)
             for k in range(n)]
    return Trajectory(snaps, SolverParams(dt=dt), V)


def band_limited_density(grid: Grid, coeffs) -> RealField:
    """Node-free periodic density exp(f) / Z with f a short Fourier series."""
    x = grid.x
    kx = 2 * np.pi * (x - grid.x0) / grid.length
    f = np.zeros(grid.n)
    for j, (a, b) in enumerate(coeffs, start=1):
        f += a * np.cos(j * kx) + b * np.sin(j * kx)
    rho = np.exp(f)
    return RealField(grid, rho / (grid.dx * rho.sum()))


def density_coeffs(max_modes=4, amp=1.0):
    pair = st.tuples(st.floats(-amp, amp), st.floats(-amp, amp))
    return st.lists(pair, min_size=1, max_size=max_modes)


def exact_propagator(grid: Grid, V: np.ndarray):
    """Dense spectral Hamiltonian eigendecomposition for an exact-in-time oracle."""
    n = grid.n
    eye = np.eye(n)
    T = np.fft.ifft((grid.hbar ** 2 * grid.k ** 2 / (2 * grid.mass))[:, None]
                    * np.fft.fft(eye, axis=0), axis=0)
    H = T + np.diag(V)
    H = 0.5 * (H + H.conj().T)
    w, U = np.linalg.eigh(H)

    def apply(values, t):
        return U @ (np.exp(-1j * w * t / grid.hbar) * (U.conj().T @ values))

    return apply
