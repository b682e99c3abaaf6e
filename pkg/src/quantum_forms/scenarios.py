"""Named, JSON-configured experiments and their diagnostics.

A scenario builds an initial state, optionally evolves it, runs a list of
diagnostics and writes snapshots, a report CSV and a JSON manifest.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from . import cantor, duality, info, madelung, paths, states
from .errors import ConfigError, QuantumFormsError
from .field_core import Grid, RealField, WaveField, field_to_csv
from .solvers import (EQUATIONS, SCHEMES, PotentialSpec, SolverParams, Trajectory, evolve,
                      scheme_for)

OUTPUT_ENV = "QUANTUM_FORMS_OUTPUT"
SCENARIO_EQUATIONS = EQUATIONS + ("none",)
INITIAL_KINDS = ("gaussian", "harmonic_ground", "coherent", "plane_wave", "gausson",
                 "superposition")
_SAFE_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


# ------------------------------------------------------------------ scenario

@dataclass
class Scenario:
    name: str
    equation: str = "linear"
    grid: dict = field(default_factory=lambda: {"n": 256, "length": 40.0})
    potential: dict = field(default_factory=lambda: {"kind": "free"})
    params: dict = field(default_factory=lambda: {"dt": 0.01})
    initial: dict = field(default_factory=lambda: {"kind": "gaussian"})
    t_final: float = 0.0
    snapshot_stride: int = 1
    diagnostics: List[str] = field(default_factory=list)
    seeds: List[int] = field(default_factory=lambda: [0])
    options: dict = field(default_factory=dict)
    output_dir: Optional[str] = None

    _KEYS = ("name", "equation", "grid", "potential", "params", "initial", "t_final",
             "snapshot_stride", "diagnostics", "seeds", "options", "output_dir")

    def to_dict(self) -> dict:
        return {k: copy.deepcopy(getattr(self, k)) for k in self._KEYS}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise ConfigError("scenario must be a JSON object")
        unknown = set(d) - set(cls._KEYS)
        if unknown:
            raise ConfigError(f"unknown field(s) {sorted(unknown)}", sorted(unknown)[0])
        if "name" not in d:
            raise ConfigError("missing", "name")
        s = cls(**copy.deepcopy(d))
        s.check()
        return s

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(d)

    def canonical_json(self) -> str:
        d = self.to_dict()
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    # -------------------------------------------------------------- validation

    def check(self) -> None:
        """Raise ConfigError (or StabilityViolation) on the first invalid field."""
        if not isinstance(self.name, str) or not _SAFE_NAME.match(self.name):
            raise ConfigError("must be a nonempty filesystem-safe name", "name")
        if self.equation not in SCENARIO_EQUATIONS:
            raise ConfigError(f"must be one of {SCENARIO_EQUATIONS}", "equation")
        self.build_grid()
        for i, dname in enumerate(self.diagnostics):
            if dname not in DIAGNOSTICS:
                raise ConfigError(f"unknown diagnostic {dname!r}", f"diagnostics[{i}]")
        if not isinstance(self.seeds, list) or not all(isinstance(x, int) for x in self.seeds):
            raise ConfigError("must be a list of integers", "seeds")
        if not isinstance(self.snapshot_stride, int) or self.snapshot_stride < 1:
            raise ConfigError("must be a positive integer", "snapshot_stride")
        if not (isinstance(self.t_final, (int, float)) and self.t_final >= 0):
            raise ConfigError("must be >= 0", "t_final")
        if self.equation == "none":
            return
        self.build_initial()
        V = self.build_potential()
        p = self.build_params()
        p.check_stability(self.build_grid(), V, scheme_for(self.equation, p.scheme))

    def build_grid(self) -> Grid:
        g = self.grid
        if not isinstance(g, dict):
            raise ConfigError("must be an object", "grid")
        try:
            n = int(g["n"])
            length = float(g["length"])
        except KeyError as exc:
            raise ConfigError("missing", f"grid.{exc.args[0]}") from exc
        x0 = float(g.get("x0", -0.5 * length))
        try:
            return Grid(n, x0, length, float(g.get("hbar", 1.0)), float(g.get("mass", 1.0)))
        except ValueError as exc:
            key = "n" if "power of two" in str(exc) else ""
            raise ConfigError(str(exc), f"grid.{key}" if key else "grid") from exc

    def build_potential(self) -> PotentialSpec:
        grid = self.build_grid()
        pot = self.potential
        kind = pot.get("kind", "free")
        if kind == "free":
            return PotentialSpec.free(grid)
        if kind == "harmonic":
            omega = pot.get("omega")
            if not (isinstance(omega, (int, float)) and omega > 0):
                raise ConfigError("must be > 0", "potential.omega")
            return PotentialSpec.harmonic(grid, float(omega), float(pot.get("center", 0.0)))
        if kind == "anharmonic":
            omega, eps = float(pot.get("omega", 1.0)), float(pot.get("epsilon", 0.0))
            x = grid.x
            m = grid.mass
            vals = 0.5 * m * omega ** 2 * x ** 2 + eps * x ** 4
            return PotentialSpec.custom(grid, vals, m * omega ** 2 * x + 4 * eps * x ** 3)
        if kind == "custom":
            vals = pot.get("values")
            if not isinstance(vals, list) or len(vals) != grid.n:
                raise ConfigError(f"must be a list of {grid.n} numbers", "potential.values")
            return PotentialSpec.custom(grid, vals)
        raise ConfigError("must be free, harmonic, anharmonic or custom", "potential.kind")

    def build_params(self) -> SolverParams:
        p = dict(self.params)
        if "scheme" in p and p["scheme"] not in SCHEMES:
            raise ConfigError(f"must be one of {SCHEMES}", "params.scheme")
        try:
            return SolverParams(**p)
        except TypeError as exc:
            raise ConfigError(str(exc), "params") from exc
        except ValueError as exc:
            key = str(exc).split()[0]
            raise ConfigError(str(exc), f"params.{key}") from exc

    def build_initial(self) -> WaveField:
        grid = self.build_grid()
        ini = dict(self.initial)
        kind = ini.pop("kind", None)
        if kind not in INITIAL_KINDS:
            raise ConfigError(f"must be one of {INITIAL_KINDS}", "initial.kind")
        try:
            if kind == "gaussian":
                return states.gaussian_packet(grid, **ini)
            if kind == "harmonic_ground":
                return states.harmonic_ground(grid, **ini)
            if kind == "coherent":
                return states.coherent_state(grid, **ini)
            if kind == "plane_wave":
                return states.plane_wave(grid, **ini)
            if kind == "gausson":
                return states.gausson(grid, **ini)
            parts = [states.gaussian_packet(grid, **c) for c in ini.get("components", [])]
            if not parts:
                raise ConfigError("needs at least one component", "initial.components")
            return states.superposition(*parts)
        except TypeError as exc:
            raise ConfigError(str(exc), "initial") from exc


def validate(cfg) -> List[str]:
    """All problems found without running anything; empty list means valid."""
    try:
        s = cfg if isinstance(cfg, Scenario) else Scenario.from_dict(cfg)
        s.check()
    except QuantumFormsError as exc:
        return [f"{type(exc).__name__}: {exc}"]
    return []


# ------------------------------------------------------------------ results

@dataclass
class DiagnosticResult:
    name: str
    status: str  # pass | fail | value
    value: float
    rows: List[tuple] = field(default_factory=list)  # (time, name, value)
    detail: str = ""


@dataclass
class RunManifest:
    scenario: str
    scenario_hash: str
    tool_version: str
    wall_time: float
    diagnostics: List[dict]
    artifacts: List[str]
    output_dir: str

    @property
    def passed(self) -> bool:
        return all(d["status"] != "fail" for d in self.diagnostics)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "scenario_hash": self.scenario_hash,
                "tool_version": self.tool_version, "wall_time": self.wall_time,
                "diagnostics": self.diagnostics, "artifacts": self.artifacts}


class Context:
    """Lazily evolved trajectory plus helpers shared by diagnostics."""

    def __init__(self, scenario: Scenario):
        self.s = scenario
        self.grid = scenario.build_grid()
        self._traj = None

    @property
    def opts(self) -> dict:
        return self.s.options

    @property
    def seed(self) -> int:
        return self.s.seeds[0] if self.s.seeds else 0

    def initial(self) -> WaveField:
        return self.s.build_initial()

    def potential(self) -> PotentialSpec:
        return self.s.build_potential()

    def params(self) -> SolverParams:
        return self.s.build_params()

    def evolve(self, dt_factor: float = 1.0) -> Trajectory:
        p = self.params()
        if dt_factor != 1.0:
            p = SolverParams(**{**p.to_dict(), "dt": p.dt * dt_factor})
        n_steps = int(round(self.s.t_final / p.dt))
        return evolve(self.initial(), self.potential(), p, n_steps, self.s.equation,
                      self.s.snapshot_stride)

    @property
    def traj(self) -> Trajectory:
        if self._traj is None:
            if self.s.equation == "none":
                raise ConfigError("diagnostic needs an evolving equation", "equation")
            self._traj = self.evolve()
        return self._traj


def _bool(name, ok, value, rows=None, detail=""):
    return DiagnosticResult(name, "pass" if ok else "fail", float(value), rows or [], detail)


# ---------------------------------------------------------------- diagnostics

def _norm_drift(ctx: Context):
    tr = ctx.traj
    drift = tr.norm_drift
    rows = [(t, "norm_drift", d) for t, d in zip(tr.times, drift)]
    limit = ctx.opts.get("norm_drift_limit", 1e-8)
    return _bool("norm_drift", float(np.max(drift)) < limit, np.max(drift), rows)


def _gausson_errors(ctx: Context):
    """(L2 amplitude error vs rigid translation, max density error vs closed form)."""
    tr = ctx.traj
    ini = ctx.s.initial
    b = ctx.params().b
    k = ini.get("k", 0.0)
    c0 = ini.get("center", 0.0)
    grid = ctx.grid
    v = grid.hbar * k / grid.mass
    shape, modulus = [], []
    for snap in tr.snapshots:
        ref = states.gausson(grid, b, 0.0, c0 + v * snap.time)
        diff = np.abs(snap.values) - np.abs(ref.values)
        shape.append(np.sqrt(grid.dx * np.sum(diff ** 2)))
        dens = states.gausson_density(grid, b, c0 + v * snap.time)
        modulus.append(np.max(np.abs(snap.density - dens)))
    return tr.times, np.array(shape), np.array(modulus)


def _gausson_shape(ctx):
    t, shape, _ = _gausson_errors(ctx)
    rows = [(ti, "gausson_shape_l2", e) for ti, e in zip(t, shape)]
    return _bool("gausson_shape", shape.max() < ctx.opts.get("shape_tol", 1e-4), shape.max(), rows)


def _gausson_modulus(ctx):
    t, _, mod = _gausson_errors(ctx)
    rows = [(ti, "gausson_modulus_max", e) for ti, e in zip(t, mod)]
    return _bool("gausson_modulus", mod.max() < ctx.opts.get("modulus_tol", 1e-4), mod.max(), rows)


def _hydro_residuals(ctx):
    r = madelung.hydro_residuals(ctx.traj)
    rows = [(ctx.traj.times[-1], f"hydro_{k}", getattr(r, k))
            for k in ("continuity", "quantum_hj", "euler", "stress_balance")]
    return DiagnosticResult("hydro_residuals", "value", r.quantum_hj, rows)


def _convergence(ctx, name, fn, keys):
    coarse, fine = fn(ctx.evolve(1.0)), fn(ctx.evolve(0.5))
    min_ratio = ctx.opts.get("min_ratio", 2 ** 1.9)
    ratios = {k: getattr(coarse, k) / getattr(fine, k) for k in keys}
    rows = []
    t = ctx.s.t_final
    for k in keys:
        rows += [(t, f"{k}_dt", getattr(coarse, k)), (t, f"{k}_dt2", getattr(fine, k)),
                 (t, f"{k}_ratio", ratios[k])]
    worst = min(ratios.values())
    return _bool(name, worst >= min_ratio, worst, rows)


def _hydro_convergence(ctx):
    return _convergence(ctx, "hydro_convergence", madelung.hydro_residuals,
                        ("continuity", "quantum_hj", "euler"))


def _duality_residuals(ctx):
    r = duality.verify_duality(ctx.traj)
    t = ctx.traj.times[-1]
    return DiagnosticResult("duality_residuals", "value", max(r.res_phi, r.res_phi_hat),
                            [(t, "res_phi", r.res_phi), (t, "res_phi_hat", r.res_phi_hat)])


def _duality_convergence(ctx):
    return _convergence(ctx, "duality_convergence", duality.verify_duality,
                        ("res_phi", "res_phi_hat"))


def _creation_term(ctx):
    tr = ctx.traj
    i = len(tr) // 2
    ct = duality.creation_term_at(tr, i)
    tol = ctx.opts.get("creation_tol", 1e-3)
    return _bool("creation_term", ct.mismatch < tol, ct.mismatch,
                 [(tr.times[i], "creation_mismatch", ct.mismatch)])


def _fractal_modulus(ctx):
    tr = ctx.traj
    mods = [np.ptp(np.abs(s.values)) / np.mean(np.abs(s.values)) for s in tr.snapshots]
    init = np.abs(tr[0].values).mean()
    drift = [abs(np.abs(s.values).mean() - init) / init for s in tr.snapshots]
    worst = float(max(max(mods), max(drift)))
    rows = [(t, "modulus_drift", max(a, b)) for t, a, b in zip(tr.times, mods, drift)]
    return _bool("fractal_modulus", worst < ctx.opts.get("modulus_tol", 1e-8), worst, rows)


def _energy_functionals(ctx):
    psi = ctx.initial()
    p = ctx.params()
    rep = info.energy_functionals(psi, ctx.potential(), p, ctx.s.equation)
    t = psi.time
    rows = [(t, "e_qm", rep.e_qm), (t, "e_ft", rep.e_ft), (t, "energy_difference", rep.difference)]
    if ctx.s.equation == "fractal":
        k = 2 * np.pi * ctx.s.initial.get("mode", 1) / ctx.grid.length
        target = (ctx.grid.hbar * k) ** 2 / (2 * ctx.grid.mass)
        err = max(abs(rep.e_ft - target), abs(rep.e_qm - target), rep.imag_part)
    else:
        target = p.b if ctx.s.equation == "log" else 0.0
        err = abs(rep.difference - target * ctx.initial().norm())
    return _bool("energy_functionals", err < ctx.opts.get("energy_tol", 1e-8), err, rows)


def _bohm_equivariance(ctx):
    tr = ctx.traj
    n = ctx.opts.get("n_paths", 10000)
    ens = paths.bohm_trajectories(tr, n, seed=ctx.seed)
    ks = [paths.ks_distance(ens.positions[:, i], tr[i]) for i in range(len(tr))]
    rows = [(t, "bohm_ks", d) for t, d in zip(tr.times, ks)]
    return _bool("bohm_equivariance", max(ks) < ctx.opts.get("ks_tol", 0.02), max(ks), rows)


def _nelson_stationarity(ctx):
    tr = ctx.traj
    n = ctx.opts.get("n_paths", 10000)
    ens = paths.nelson_ensemble(tr, n, seed=ctx.seed, substeps=ctx.opts.get("substeps", 4))
    ks = [paths.ks_distance(ens.positions[:, i], tr[i]) for i in range(len(tr))]
    rows = [(t, "nelson_ks", d) for t, d in zip(tr.times, ks)]
    return _bool("nelson_stationarity", max(ks) < ctx.opts.get("nelson_ks_tol", 0.03), max(ks),
                 rows)


def _drift_coverage(ctx):
    tr = ctx.traj
    n = ctx.opts.get("n_paths", 10000)
    sub = ctx.opts.get("substeps", 4)
    fwd = paths.nelson_ensemble(tr, n, seed=ctx.seed, substeps=sub)
    bwd = paths.nelson_ensemble(tr, n, seed=ctx.seed + 1, direction="backward", substeps=sub)
    est = paths.estimate_drifts(fwd, bwd)
    psi = tr[len(tr) // 2]
    p = est.populated
    u_true = np.full(est.u_est.shape, np.nan)
    u_true[p] = paths.osmotic_velocity(psi, est.mean_x[p])
    cov = est.coverage(u_true)
    return _bool("drift_coverage", cov >= ctx.opts.get("coverage_min", 0.9), cov,
                 [(est.time, "drift_coverage", cov), (est.time, "populated_bins", int(p.sum()))])


def _heat_entropy(ctx):
    D = ctx.opts.get("D", 0.5)
    rho0 = RealField(ctx.grid, ctx.initial().density)
    dt = ctx.params().dt
    times = dt * np.arange(int(round(ctx.s.t_final / dt)) + 1)
    series = info.entropy_production(info.heat_flow(rho0, D, times), D=D)
    rel = np.abs(series.rate / series.diffusive_rate - 1)
    monotone = bool(np.all(np.diff(series.entropy) >= 0) and np.all(np.diff(series.fisher) <= 0))
    rows = [(t, "entropy_rate_rel_err", e) for t, e in zip(series.interior_times, rel)]
    rows += [(t, "entropy", s) for t, s in zip(series.times, series.entropy)]
    ok = rel.max() < ctx.opts.get("rate_tol", 1e-4) and monotone
    return _bool("heat_entropy", ok, rel.max(), rows, "" if monotone else "not monotone")


def _schwarz(ctx):
    series = info.entropy_production(ctx.traj)
    rows = [(t, "schwarz_margin", b - abs(r)) for t, r, b in
            zip(series.interior_times, series.balance_rate, series.schwarz_bound)]
    margin = min(r[2] for r in rows)
    return _bool("schwarz", series.schwarz_holds(), margin, rows)


def _exact_uncertainty(ctx):
    psi = ctx.initial()
    rep = info.exact_uncertainty(psi)
    hbar = ctx.grid.hbar
    err = abs(rep.product - 0.5 * hbar)
    t = psi.time
    rows = [(t, "delta_x", rep.delta_x), (t, "fisher_length", rep.fisher_length),
            (t, "delta_p_nc", rep.delta_p_nc), (t, "uncertainty_product", rep.product)]
    ok = err < ctx.opts.get("uncertainty_tol", 1e-6) and rep.chain_holds(hbar)
    return _bool("exact_uncertainty", ok, err, rows)


def _fisher_chain(ctx):
    psi = ctx.initial()
    ch = info.quantum_potential_chain(psi)
    F = info.fisher_information(psi)
    var = info.exact_uncertainty(psi).var_x
    t = psi.time
    rows = [(t, "neg_mean_q", ch.neg_mean_q), (t, "half_osmotic", ch.half_osmotic),
            (t, "half_fisher", ch.half_fisher), (t, "cramer_rao_gap", var - 1 / F)]
    ok = ch.max_relative_gap < ctx.opts.get("chain_tol", 1e-8) and var >= (1 - 1e-8) / F
    return _bool("fisher_chain", ok, ch.max_relative_gap, rows)


def _ehrenfest(ctx):
    eh = info.ehrenfest_residuals(ctx.traj)
    worst = float(max(np.abs(eh.r1).max(), np.abs(eh.r2).max()))
    rows = [(t, "ehrenfest_r1", a) for t, a in zip(eh.interior_times, eh.r1)]
    rows += [(t, "ehrenfest_r2", b) for t, b in zip(eh.interior_times, eh.r2)]
    return DiagnosticResult("ehrenfest", "value", worst, rows)


def _golden_identities(ctx):
    rep = cantor.golden_identities()
    rows = [(0.0, "golden_value", rep.value), (0.0, "phi_quadratic", rep.quadratic)]
    return _bool("golden_identities", rep.holds(), rep.value, rows)


def _cantor_averages(ctx):
    a = cantor.averages(cantor.PHI)
    h = cantor.averages(0.5)
    gap = abs(a.n_avg - a.d_avg)
    rows = [(0.0, "n_avg_phi", a.n_avg), (0.0, "d_avg_phi", a.d_avg),
            (0.0, "n_avg_half", h.n_avg), (0.0, "d_avg_half", h.d_avg)]
    ok = (gap < 1e-12 and abs(a.d_avg - (4 + cantor.PHI ** 3)) < 1e-12
          and (h.n_avg, h.d_avg) == (3.0, 4.0))
    return _bool("cantor_averages", ok, gap, rows)


def _cantor_box_dimension(ctx):
    depth = ctx.opts.get("depth", 14)
    slopes = [cantor.box_dimension(cantor.random_cantor(s, depth)).slope for s in ctx.s.seeds]
    mean = float(np.mean(slopes))
    rows = [(0.0, f"box_slope_seed_{s}", v) for s, v in zip(ctx.s.seeds, slopes)]
    rows.append((0.0, "box_slope_mean", mean))
    return _bool("cantor_box_dimension", abs(mean - cantor.PHI) < ctx.opts.get("slope_tol", 0.05),
                 mean, rows)


DIAGNOSTICS: Dict[str, Callable[[Context], DiagnosticResult]] = {
    "norm_drift": _norm_drift,
    "gausson_shape": _gausson_shape,
    "gausson_modulus": _gausson_modulus,
    "hydro_residuals": _hydro_residuals,
    "hydro_convergence": _hydro_convergence,
    "duality_residuals": _duality_residuals,
    "duality_convergence": _duality_convergence,
    "creation_term": _creation_term,
    "fractal_modulus": _fractal_modulus,
    "energy_functionals": _energy_functionals,
    "bohm_equivariance": _bohm_equivariance,
    "nelson_stationarity": _nelson_stationarity,
    "drift_coverage": _drift_coverage,
    "heat_entropy": _heat_entropy,
    "schwarz": _schwarz,
    "exact_uncertainty": _exact_uncertainty,
    "fisher_chain": _fisher_chain,
    "ehrenfest": _ehrenfest,
    "golden_identities": _golden_identities,
    "cantor_averages": _cantor_averages,
    "cantor_box_dimension": _cantor_box_dimension,
}


# ------------------------------------------------------------------ built-ins

BUILTINS: Dict[str, dict] = {
    "gausson": {
        "name": "gausson", "equation": "log",
        "grid": {"n": 1024, "length": 40.0},
        "params": {"dt": 0.002, "b": 0.5},
        "initial": {"kind": "gausson", "b": 0.5, "k": 1.0, "center": -5.0},
        "t_final": 10.0, "snapshot_stride": 500,
        "diagnostics": ["gausson_shape", "gausson_modulus", "norm_drift"],
    },
    "duality-harmonic": {
        "name": "duality-harmonic", "equation": "linear",
        "grid": {"n": 128, "length": 20.0},
        "potential": {"kind": "harmonic", "omega": 1.0},
        "params": {"dt": 0.01},
        "initial": {"kind": "coherent", "omega": 1.0, "shift": 2.0, "momentum": 0.5},
        "t_final": 1.0, "snapshot_stride": 1,
        "diagnostics": ["duality_residuals", "duality_convergence", "creation_term",
                        "hydro_convergence", "schwarz"],
    },
    "fractal-planewave": {
        "name": "fractal-planewave", "equation": "fractal",
        "grid": {"n": 64, "length": 2 * np.pi},
        "params": {"dt": 4 * np.pi / 3000, "scheme": "rk4_semi_spectral", "alpha": 1.0,
                   "beta": 0.05},
        "initial": {"kind": "plane_wave", "mode": 1},
        "t_final": 4 * np.pi, "snapshot_stride": 300,
        "diagnostics": ["fractal_modulus", "energy_functionals"],
    },
    "equivariance": {
        "name": "equivariance", "equation": "linear",
        "grid": {"n": 256, "length": 40.0},
        "params": {"dt": 0.01},
        "initial": {"kind": "gaussian", "sigma": 1.0, "k": 0.5},
        "t_final": 3.0, "snapshot_stride": 5,
        "diagnostics": ["bohm_equivariance", "schwarz"],
        "seeds": [1], "options": {"n_paths": 10000},
    },
    "entropy-heat": {
        "name": "entropy-heat", "equation": "none",
        "grid": {"n": 256, "length": 40.0},
        "params": {"dt": 0.01},
        "initial": {"kind": "gaussian", "sigma": 1.0},
        "t_final": 2.0,
        "diagnostics": ["heat_entropy"], "options": {"D": 0.5},
    },
    "uncertainty-gaussian": {
        "name": "uncertainty-gaussian", "equation": "none",
        "grid": {"n": 256, "length": 30.0},
        "initial": {"kind": "gaussian", "sigma": 1.3, "k": 0.7},
        "diagnostics": ["exact_uncertainty", "fisher_chain"],
    },
    "golden-dims": {
        "name": "golden-dims", "equation": "none",
        "grid": {"n": 16, "length": 1.0},
        "diagnostics": ["golden_identities", "cantor_averages", "cantor_box_dimension"],
        "seeds": list(range(32)), "options": {"depth": 14},
    },
}


def list_builtin() -> List[str]:
    return sorted(BUILTINS)


def builtin(name: str) -> Scenario:
    if name not in BUILTINS:
        raise ConfigError(f"no built-in scenario {name!r}", "name")
    return Scenario.from_dict(BUILTINS[name])


# ------------------------------------------------------------------- running

def output_root(default: str = "runs") -> Path:
    return Path(os.environ.get(OUTPUT_ENV, default))


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def run_scenario(s: Scenario, root: Optional[Path] = None,
                 write_snapshots: bool = True) -> RunManifest:
    """Evolve (if needed), run every diagnostic once and write the artifacts."""
    s.check()
    start = time.perf_counter()
    out = Path(s.output_dir) if s.output_dir else (root or output_root()) / s.name
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(s)
    artifacts = []
    results = []
    for dname in s.diagnostics:
        try:
            results.append(DIAGNOSTICS[dname](ctx))
        except QuantumFormsError as exc:
            raise type(exc)(f"scenario {s.name!r}, diagnostic {dname!r}: {exc}") from exc
    if write_snapshots and s.equation != "none" and ctx._traj is not None:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for i, snap in enumerate(ctx.traj.snapshots):
            p = snap_dir / f"psi_{i:05d}.csv"
            field_to_csv(snap, p)
            artifacts.append(str(p.relative_to(out)))
    dt = s.params.get("dt", float("nan"))
    dx = ctx.grid.dx
    report = out / "report.csv"
    with open(report, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "name", "value", "dt", "dx"])
        for r in results:
            for t, name, value in r.rows:
                w.writerow([_fmt(t), name, _fmt(value), _fmt(dt), _fmt(dx)])
    artifacts.append("report.csv")
    diags = [{"name": r.name, "status": r.status, "value": r.value, "detail": r.detail}
             for r in results]
    manifest = RunManifest(s.name, s.hash, __version__, time.perf_counter() - start, diags,
                           artifacts + ["manifest.json", "scenario.json"], str(out))
    (out / "scenario.json").write_text(json.dumps(s.to_dict(), indent=2, sort_keys=True))
    (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2))
    return manifest


def render_report(directory) -> str:
    """Plain-text summary of a finished run directory."""
    d = Path(directory)
    try:
        m = json.loads((d / "manifest.json").read_text())
    except FileNotFoundError as exc:
        raise ConfigError("no manifest.json in run directory", str(d)) from exc
    lines = [f"scenario {m['scenario']}  hash {m['scenario_hash'][:12]}  "
             f"version {m['tool_version']}  wall {m['wall_time']:.2f}s"]
    for diag in m["diagnostics"]:
        lines.append(f"  {diag['status'].upper():5s} {diag['name']:24s} {diag['value']:.6g}")
    if not m["diagnostics"]:
        lines.append("  (no diagnostics)")
    return "\n".join(lines)
