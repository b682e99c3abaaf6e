"""Periodic 1-D grid, field containers and the numerical primitives built on them.

Everything downstream (solvers, hydrodynamic diagnostics, dual diffusion pair,
path ensembles) consumes the types defined here.  Fields are immutable: the
backing arrays are copied on construction and flagged read-only.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import AllMasked, NonFinite

DEFAULT_NODE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice ``x_j = x0 + j*dx`` with the physical constants.

    Parameters
    ----------
    n : int
        Number of points; a power of two, at least 16.
    x0 : float
        Left endpoint.
    length : float
        Domain extent L; the point ``x0 + L`` is identified with ``x0``.
    hbar, mass : float
        Physical constants, natural units by default.
    """

    n: int
    x0: float
    length: float
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        n = int(self.n)
        if n != self.n or n < 16 or n & (n - 1):
            raise ValueError(f"n must be power of two and >= 16, got {self.n}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise ValueError("length must be positive")
        if not np.isfinite(self.x0):
            raise ValueError("x0 must be finite")
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")

    @classmethod
    def centered(cls, n, length, hbar=1.0, mass=1.0):
        return cls(n=n, x0=-0.5 * length, length=length, hbar=hbar, mass=mass)

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def k_max(self) -> float:
        return np.pi / self.dx

    @property
    def diffusion(self) -> float:
        """D = hbar / 2m."""
        return self.hbar / (2.0 * self.mass)

    def to_dict(self) -> dict:
        return {"n": self.n, "x0": self.x0, "length": self.length,
                "hbar": self.hbar, "mass": self.mass}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(n=int(d["n"]), x0=float(d["x0"]), length=float(d["length"]),
                   hbar=float(d.get("hbar", 1.0)), mass=float(d.get("mass", 1.0)))


def _frozen(values, dtype, n):
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.shape != (n,):
        raise ValueError(f"values must have shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("field contains NaN or Inf")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class WaveField:
    """Complex field (psi, or either member of a dual pair) at one time."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, complex, self.grid.n))

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        return float(self.grid.dx * np.sum(self.density))

    def normalized(self) -> "WaveField":
        return WaveField(self.grid, self.values / np.sqrt(self.norm()), self.time)

    def with_values(self, values, time=None) -> "WaveField":
        return WaveField(self.grid, values, self.time if time is None else time)


@dataclass(frozen=True, eq=False)
class RealField:
    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, float, self.grid.n))

    def with_values(self, values, time=None) -> "RealField":
        return RealField(self.grid, values, self.time if time is None else time)


@dataclass(frozen=True, eq=False)
class NodeMask:
    """Flags grid points whose density lies below ``epsilon_rho``."""

    grid: Grid
    flags: np.ndarray
    epsilon_rho: float

    def __post_init__(self):
        flags = np.array(self.flags, dtype=bool, copy=True)
        if flags.shape != (self.grid.n,):
            raise ValueError("mask length must equal grid.n")
        if not self.epsilon_rho > 0:
            raise ValueError("epsilon_rho must be positive")
        flags.flags.writeable = False
        object.__setattr__(self, "flags", flags)

    @property
    def unmasked(self) -> np.ndarray:
        return ~self.flags

    @property
    def fraction(self) -> float:
        return float(np.mean(self.flags))

    def interior_fraction(self) -> float:
        """Fraction of points masked *inside* the support.

        Points in the single cyclic gap that contains the box edge-to-edge tails
        are not counted; a decaying packet embedded in a large box therefore
        scores zero, while genuine interior nodes do not.
        """
        flags = self.flags
        if flags.all():
            return 1.0
        if not flags.any():
            return 0.0
        # lengths of cyclic runs of masked points
        start = np.argmin(flags)  # an unmasked index
        rolled = np.roll(flags, -start)
        runs = []
        count = 0
        for f in rolled:
            if f:
                count += 1
            elif count:
                runs.append(count)
                count = 0
        if count:
            runs.append(count)
        return float(sum(runs) - max(runs)) / flags.size


FieldLike = Union[WaveField, RealField]


def node_mask(f: Union[WaveField, RealField, np.ndarray], grid: Grid = None,
              rel_threshold: float = DEFAULT_NODE_THRESHOLD) -> NodeMask:
    """Mask points where rho < rel_threshold * max(rho).

    ``f`` may be a WaveField (rho = |psi|^2) or a RealField holding rho.
    """
    if isinstance(f, WaveField):
        rho, grid = f.density, f.grid
    elif isinstance(f, RealField):
        rho, grid = f.values, f.grid
    else:
        rho = np.asarray(f, dtype=float)
    peak = float(np.max(rho))
    if not peak > 0:
        raise AllMasked("density vanishes identically")
    eps = rel_threshold * peak
    return NodeMask(grid, rho < eps, eps)


def deriv(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """Spectral derivative of a raw periodic array (real in, real out)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    mult = (1j * grid.k) ** order
    if order % 2:
        mult[grid.n // 2] = 0.0  # odd derivative of the Nyquist mode is undefined
    out = np.fft.ifft(mult * np.fft.fft(values))
    return out.real if np.isrealobj(values) else out


def spectral_derivative(f: FieldLike, order: int = 1) -> FieldLike:
    """order-th spatial derivative computed in Fourier space (order in {1, 2})."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if not np.all(np.isfinite(f.values)):
        raise NonFinite("non-finite input")
    return f.with_values(deriv(f.values, f.grid, order))


# central-difference weights for offsets 1..p (antisymmetric / symmetric stencils)
_FD_FIRST = {
    2: [1 / 2],
    4: [2 / 3, -1 / 12],
    6: [3 / 4, -3 / 20, 1 / 60],
    8: [4 / 5, -1 / 5, 4 / 105, -1 / 280],
}
_FD_SECOND = {
    2: (-2.0, [1.0]),
    4: (-5 / 2, [4 / 3, -1 / 12]),
    6: (-49 / 18, [3 / 2, -3 / 20, 1 / 90]),
    8: (-205 / 72, [8 / 5, -1 / 5, 8 / 315, -1 / 560]),
}


def fd_derivative(f: FieldLike, order: int = 1, accuracy: int = 2) -> FieldLike:
    """Periodic central differences; an independent check on ``spectral_derivative``.

    ``accuracy`` is the formal order of the stencil (2, 4, 6 or 8).
    """
    v, h = f.values, f.grid.dx
    if order == 1:
        out = sum(w * (np.roll(v, -j) - np.roll(v, j))
                  for j, w in enumerate(_FD_FIRST[accuracy], start=1)) / h
    elif order == 2:
        c0, ws = _FD_SECOND[accuracy]
        out = (c0 * v + sum(w * (np.roll(v, -j) + np.roll(v, j))
                            for j, w in enumerate(ws, start=1))) / h ** 2
    else:
        raise ValueError("order must be 1 or 2")
    return f.with_values(out)


def quadrature(f: Union[RealField, np.ndarray], grid: Grid = None) -> float:
    """Periodic trapezoid rule, dx * sum(f)."""
    if isinstance(f, (RealField, WaveField)):
        values, grid = f.values, f.grid
    else:
        values = np.asarray(f)
    if not np.all(np.isfinite(values)):
        raise NonFinite("non-finite integrand")
    return float(grid.dx * np.sum(values).real)


@dataclass(frozen=True, eq=False)
class UnwrappedPhase:
    """Continuous action branch S (action units) plus bookkeeping.

    ``winding`` is the integer number of 2*pi turns of arg(psi) around the
    periodic domain; when nonzero S jumps by ``2*pi*hbar*winding`` across the
    wrap point.  ``interpolated`` flags the masked points whose S was filled
    in linearly.
    """

    S: RealField
    winding: int
    interpolated: np.ndarray


def unwrap_phase(psi: WaveField, mask: NodeMask = None) -> UnwrappedPhase:
    grid = psi.grid
    if mask is None:
        mask = node_mask(psi)
    good = np.flatnonzero(~mask.flags)
    if good.size == 0:
        raise AllMasked("every point is below the node threshold")
    vals = psi.values
    n = grid.n
    # phase increments between consecutive unmasked points, plus the wrap step
    nxt = np.roll(good, -1)
    steps = np.angle(vals[nxt] * np.conj(vals[good]))
    total = float(np.sum(steps))
    winding = int(np.round(total / (2 * np.pi)))
    theta_good = np.angle(vals[good[0]]) + np.concatenate(([0.0], np.cumsum(steps[:-1])))

    # extend to masked points: positions of good points on an unrolled axis
    pos = np.concatenate((good, [good[0] + n]))
    theta_ext = np.concatenate((theta_good, [theta_good[0] + total]))
    idx = np.arange(n)
    unrolled = np.where(idx < good[0], idx + n, idx)
    theta = np.interp(unrolled, pos, theta_ext)
    theta = np.where(idx < good[0], theta - total, theta)
    theta[good] = theta_good
    return UnwrappedPhase(RealField(grid, grid.hbar * theta, psi.time), winding,
                          mask.flags.copy())


# --------------------------------------------------------------------------- I/O

def field_to_csv(f: FieldLike, path) -> None:
    path = Path(path)
    x = f.grid.x
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if isinstance(f, WaveField):
            w.writerow(["x", "re", "im"])
            for xi, z in zip(x, f.values):
                w.writerow([repr(float(xi)), repr(float(z.real)), repr(float(z.imag))])
        else:
            w.writerow(["x", "value"])
            for xi, z in zip(x, f.values):
                w.writerow([repr(float(xi)), repr(float(z))])


def field_from_csv(path, grid: Grid = None, time: float = 0.0) -> FieldLike:
    """Read a field written by :func:`field_to_csv`.

    Without ``grid`` the lattice is inferred from the x column (natural units).
    """
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    if grid is None:
        x = body[:, 0]
        dx = x[1] - x[0]
        grid = Grid(n=len(x), x0=float(x[0]), length=float(dx * len(x)))
    if header == ["x", "re", "im"]:
        return WaveField(grid, body[:, 1] + 1j * body[:, 2], time)
    if header == ["x", "value"]:
        return RealField(grid, body[:, 1], time)
    raise ValueError(f"unrecognized CSV header {header}")


def field_to_json(f: FieldLike) -> str:
    if isinstance(f, WaveField):
        values = [[float(z.real), float(z.imag)] for z in f.values]
        kind = "complex"
    else:
        values = [float(z) for z in f.values]
        kind = "real"
    return json.dumps({"grid": f.grid.to_dict(), "time": f.time, "kind": kind,
                       "values": values})


def field_from_json(text: str) -> FieldLike:
    d = json.loads(text)
    grid = Grid.from_dict(d["grid"])
    vals = np.asarray(d["values"], dtype=float)
    if d.get("kind") == "complex" or vals.ndim == 2:
        return WaveField(grid, vals[:, 0] + 1j * vals[:, 1], float(d["time"]))
    return RealField(grid, vals, float(d["time"]))
