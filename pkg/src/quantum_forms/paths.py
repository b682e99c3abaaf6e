"""Bohmian trajectories, Nelson diffusions and drift estimation on a solver trajectory.

Random numbers come from one Philox stream per fixed-size chunk of paths,
spawned from the seed, so results do not depend on how chunks are scheduled.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .errors import NodeTrap
from .field_core import Grid, RealField, WaveField, node_mask
from .madelung import log_derivatives
from .solvers import Trajectory

KINDS = ("bohm", "nelson_forward", "nelson_backward")
CHUNK = 4096
MAX_MASKED_STEPS = 10
MIN_BIN_COUNT = 20
BIN_POINTS = 4
_HEADER = struct.Struct("<qqdq")


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    positions: np.ndarray  # (n_paths, n_times)
    times: np.ndarray
    seed: int
    dt: float
    diffusion_d: float
    kind: str
    grid: Grid

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float, copy=True)
        if pos.ndim != 2:
            raise ValueError("positions must be n_paths x n_times")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    @property
    def n_paths(self) -> int:
        return self.positions.shape[0]

    @property
    def n_times(self) -> int:
        return self.positions.shape[1]

    def to_bytes(self) -> bytes:
        return (_HEADER.pack(self.n_paths, self.n_times, self.dt, self.seed)
                + np.ascontiguousarray(self.positions, dtype="<f8").tobytes())

    @classmethod
    def from_bytes(cls, data: bytes, grid: Grid, kind: str, diffusion_d: float = None,
                   t0: float = 0.0) -> "PathEnsemble":
        n_paths, n_times, dt, seed = _HEADER.unpack_from(data)
        pos = np.frombuffer(data, dtype="<f8", offset=_HEADER.size, count=n_paths * n_times)
        D = grid.diffusion if diffusion_d is None else diffusion_d
        return cls(pos.reshape(n_paths, n_times), t0 + dt * np.arange(n_times), seed, dt, D,
                   kind, grid)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path"] + [repr(float(t)) for t in self.times])
            for i, row in enumerate(self.positions):
                w.writerow([i] + [repr(float(x)) for x in row])


# ----------------------------------------------------------------- sampling

def _streams(seed: int, n_paths: int):
    """(slice, Generator) per chunk of paths."""
    n_chunks = -(-n_paths // CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    for c, ss in enumerate(seqs):
        sl = slice(c * CHUNK, min((c + 1) * CHUNK, n_paths))
        yield sl, np.random.Generator(np.random.Philox(ss))


def _cell_cdf(rho: np.ndarray, grid: Grid):
    """Cell edges and CDF values for rho piecewise constant on cells centred at grid points."""
    edges = grid.x0 - 0.5 * grid.dx + grid.dx * np.arange(grid.n + 1)
    mass = np.clip(rho, 0.0, None)
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    return edges, cdf / cdf[-1]


def sample_density(rho: np.ndarray, grid: Grid, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling of a grid density (linear within cells)."""
    edges, cdf = _cell_cdf(rho, grid)
    return wrap(np.interp(uniforms, cdf, edges), grid)


def ks_distance(samples: np.ndarray, rho, grid: Grid = None) -> float:
    """Kolmogorov-Smirnov distance between samples and a grid density.

    The density CDF is anchored at the box edge x0 - dx/2; samples are wrapped
    into the same window.
    """
    if isinstance(rho, (RealField, WaveField)):
        grid = rho.grid
        rho = rho.density if isinstance(rho, WaveField) else rho.values
    edges, cdf = _cell_cdf(np.asarray(rho), grid)
    lo = edges[0]
    x = np.sort((np.asarray(samples) - lo) % grid.length + lo)
    F = np.interp(x, edges, cdf)
    n = x.size
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def wrap(x: np.ndarray, grid: Grid) -> np.ndarray:
    """Map positions into [x0 - dx/2, x0 - dx/2 + L)."""
    lo = grid.x0 - 0.5 * grid.dx
    return (x - lo) % grid.length + lo


def sample_increments(seed: int, n_draws: int, D: float, dt: float) -> np.ndarray:
    """Noise increments sqrt(2 D dt) xi drawn from the chunked streams."""
    out = np.empty(n_draws)
    for sl, gen in _streams(seed, n_draws):
        out[sl] = np.sqrt(2 * D * dt) * gen.standard_normal(sl.stop - sl.start)
    return out


# ----------------------------------------------------------- velocity fields

def _extend_nearest(values: np.ndarray, flags: np.ndarray) -> np.ndarray:
    """Replace masked entries by the cyclically nearest unmasked value."""
    if not flags.any():
        return values
    good = np.flatnonzero(~flags)
    n = values.size
    idx = np.arange(n)
    pos = np.searchsorted(good, idx) % good.size
    right = good[pos]
    left = good[pos - 1]
    dr = (right - idx) % n
    dl = (idx - left) % n
    nearest = np.where(dr <= dl, right, left)
    out = values.copy()
    out[flags] = values[nearest[flags]]
    return out


@dataclass(frozen=True, eq=False)
class _VelocityTable:
    grid: Grid
    times: np.ndarray
    fields: np.ndarray  # (n_times, n) velocity samples
    masks: np.ndarray   # (n_times, n) bool

    def at(self, x: np.ndarray, t: float) -> np.ndarray:
        """Velocity at positions x, linear in space (periodic) and in time."""
        ts = self.times
        i = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2))
        w = (t - ts[i]) / (ts[i + 1] - ts[i])
        a = self._space(self.fields[i], x)
        if w == 0.0:
            return a
        b = self._space(self.fields[i + 1], x)
        return (1 - w) * a + w * b

    def _space(self, f, x):
        g = self.grid
        return np.interp(x, g.x, f, period=g.length)

    def masked(self, x: np.ndarray, i: int) -> np.ndarray:
        g = self.grid
        j = np.rint((x - g.x0) / g.dx).astype(int) % g.n
        return self.masks[i][j]


def _velocity_table(traj: Trajectory, kind: str) -> _VelocityTable:
    grid = traj.grid
    hbar, m = grid.hbar, grid.mass
    D = grid.diffusion
    fields, masks = [], []
    for psi in traj.snapshots:
        mask = node_mask(psi)
        g, _, _, _ = log_derivatives(psi.values, grid, mask)
        v = (hbar / m) * g.imag
        u = 2 * D * g.real  # D (log rho)' = 2 D Re(psi'/psi)
        f = {"bohm": v, "nelson_forward": v + u, "nelson_backward": u - v}[kind]
        fields.append(_extend_nearest(f, mask.flags))
        masks.append(mask.flags)
    return _VelocityTable(grid, traj.times, np.array(fields), np.array(masks))


def _check_trap(table, x, i, counter):
    inside = table.masked(x, i)
    counter[:] = np.where(inside, counter + 1, 0)
    if np.any(counter > MAX_MASKED_STEPS):
        raise NodeTrap(f"{int(np.sum(counter > MAX_MASKED_STEPS))} paths stuck in masked region")


# ------------------------------------------------------------------ ensembles

def bohm_trajectories(traj: Trajectory, n_paths: int, seed: int = 0, x0: np.ndarray = None,
                      substeps: int = 1) -> PathEnsemble:
    """Integrate dx/dt = (hbar/m) Im(psi'/psi) with RK4, sampling x0 from |psi(t0)|^2."""
    grid = traj.grid
    table = _velocity_table(traj, "bohm")
    times = traj.times
    if x0 is None:
        x0 = np.empty(n_paths)
        for sl, gen in _streams(seed, n_paths):
            x0[sl] = sample_density(traj[0].density, grid, gen.random(sl.stop - sl.start))
    x = wrap(np.asarray(x0, dtype=float), grid)
    out = np.empty((x.size, len(times)))
    out[:, 0] = x
    counter = np.zeros(x.size, dtype=int)
    for i in range(len(times) - 1):
        h = (times[i + 1] - times[i]) / substeps
        for s in range(substeps):
            t = times[i] + s * h
            k1 = table.at(x, t)
            k2 = table.at(x + 0.5 * h * k1, t + 0.5 * h)
            k3 = table.at(x + 0.5 * h * k2, t + 0.5 * h)
            k4 = table.at(x + h * k3, t + h)
            x = wrap(x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4), grid)
        _check_trap(table, x, i + 1, counter)
        out[:, i + 1] = x
    return PathEnsemble(out, times, seed, traj.spacing, grid.diffusion, "bohm", grid)


def nelson_ensemble(traj: Trajectory, n_paths: int, seed: int = 0, direction: str = "forward",
                    D: float = None, substeps: int = 1) -> PathEnsemble:
    """Euler-Maruyama paths of dx = b dt + sqrt(2 D dt) xi.

    ``forward`` uses b+ = v + u from |psi(t0)|^2.  ``backward`` runs the
    reversed-time process from |psi(t_end)|^2 with drift u - v (the negated
    backward drift b- = v - u); positions are stored in forward time order.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    grid = traj.grid
    D = grid.diffusion if D is None else D
    kind = "nelson_" + direction
    table = _velocity_table(traj, kind)
    times = traj.times
    nt = len(times)
    order = range(nt) if direction == "forward" else range(nt - 1, -1, -1)
    order = list(order)
    start = traj[order[0]].density
    out = np.empty((n_paths, nt))
    for sl, gen in _streams(seed, n_paths):
        size = sl.stop - sl.start
        x = sample_density(start, grid, gen.random(size))
        out[sl, order[0]] = x
        counter = np.zeros(size, dtype=int)
        for a, b in zip(order[:-1], order[1:]):
            span = abs(times[b] - times[a])
            h = span / substeps
            sign = 1.0 if b > a else -1.0
            for s in range(substeps):
                t = times[a] + sign * s * h
                drift = table.at(x, t)
                x = wrap(x + drift * h + np.sqrt(2 * D * h) * gen.standard_normal(size), grid)
            _check_trap(table, x, b, counter)
            out[sl, b] = x
    return PathEnsemble(out, times, seed, traj.spacing, D, kind, grid)


# ------------------------------------------------------------ drift estimation

@dataclass(frozen=True, eq=False)
class DriftEstimate:
    """Binned drifts; entries with counts < 20 are NaN.

    Bins are centred on ``centers`` with width 4 dx; ``mean_x`` is the mean
    sample position inside each bin, the point at which a linear drift is
    estimated without bias.
    """

    centers: np.ndarray
    mean_x: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray
    v_est: np.ndarray
    u_est: np.ndarray
    counts: np.ndarray
    ci_width: np.ndarray
    time: float

    @property
    def populated(self) -> np.ndarray:
        return self.counts >= MIN_BIN_COUNT

    def coverage(self, u_true: np.ndarray) -> float:
        """Fraction of populated bins whose |u_est - u_true| lies within ``ci_width``."""
        p = self.populated
        return float(np.mean(np.abs(self.u_est[p] - u_true[p]) <= self.ci_width[p]))


def _binned(x, y, grid: Grid, nbins: int, width: float):
    lo = grid.x0 - 0.5 * width
    idx = np.floor(((x - lo) % grid.length) / width).astype(int) % nbins
    cnt = np.bincount(idx, minlength=nbins)
    s1 = np.bincount(idx, weights=y, minlength=nbins)
    s2 = np.bincount(idx, weights=y * y, minlength=nbins)
    sx = np.bincount(idx, weights=x, minlength=nbins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = s1 / cnt
        var = (s2 - cnt * mean ** 2) / (cnt - 1)
        se = np.sqrt(np.maximum(var, 0.0) / cnt)
        mx = sx / cnt
    return cnt, mean, se, mx


def _minimal_image(d, grid: Grid):
    L = grid.length
    return (d + 0.5 * L) % L - 0.5 * L


def estimate_drifts(ens_fwd: PathEnsemble, ens_bwd: PathEnsemble, index: int = None,
                    bin_points: int = BIN_POINTS) -> DriftEstimate:
    """b+ from forward increments after t_i, b- from increments into t_i.

    b+ = E[x(t_i + h) - x(t_i) | x(t_i)] / h on the forward ensemble and
    b- = E[x(t_i) - x(t_i - h) | x(t_i)] / h on the backward one; the 95%
    half-width of u_est and v_est is 1.96 * sqrt(se+^2 + se-^2) / 2.
    """
    grid = ens_fwd.grid
    nt = ens_fwd.n_times
    if index is None:
        index = nt // 2
    if not 0 < index < nt - 1:
        raise IndexError("drift estimation needs an interior time index")
    t = ens_fwd.times
    width = bin_points * grid.dx
    nbins = grid.n // bin_points
    xf = ens_fwd.positions[:, index]
    inc_f = _minimal_image(ens_fwd.positions[:, index + 1] - xf, grid) / (t[index + 1] - t[index])
    xb = ens_bwd.positions[:, index]
    inc_b = _minimal_image(xb - ens_bwd.positions[:, index - 1], grid) / (t[index] - t[index - 1])
    cf, bp, sef, mxf = _binned(xf, inc_f, grid, nbins, width)
    cb, bm, seb, mxb = _binned(xb, inc_b, grid, nbins, width)
    counts = np.minimum(cf, cb)
    ok = counts >= MIN_BIN_COUNT
    nan = np.full(nbins, np.nan)

    def keep(a):
        return np.where(ok, a, nan)

    ci = 1.96 * 0.5 * np.sqrt(sef ** 2 + seb ** 2)
    with np.errstate(invalid="ignore"):
        mean_x = (cf * mxf + cb * mxb) / (cf + cb)
    centers = grid.x0 + width * np.arange(nbins)
    return DriftEstimate(centers, keep(mean_x), keep(bp), keep(bm), keep(0.5 * (bp + bm)),
                         keep(0.5 * (bp - bm)), counts, keep(ci), float(t[index]))


def osmotic_velocity(psi: WaveField, x: np.ndarray) -> np.ndarray:
    """D (log rho)' of the solver field, interpolated at positions ``x``."""
    grid = psi.grid
    mask = node_mask(psi)
    g, _, _, _ = log_derivatives(psi.values, grid, mask)
    u = _extend_nearest(2 * grid.diffusion * g.real, mask.flags)
    return np.interp(x, grid.x, u, period=grid.length)


def current_velocity(psi: WaveField, x: np.ndarray) -> np.ndarray:
    grid = psi.grid
    mask = node_mask(psi)
    g, _, _, _ = log_derivatives(psi.values, grid, mask)
    v = _extend_nearest((grid.hbar / grid.mass) * g.imag, mask.flags)
    return np.interp(x, grid.x, v, period=grid.length)
