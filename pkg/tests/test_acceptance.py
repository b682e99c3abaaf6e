"""Acceptance criteria 1-11, one test each; every test prints a PASS/FAIL line."""
import numpy as np

from quantum_forms import states
from quantum_forms.cantor import (PHI, average_gap, averages, box_dimension, full_interval,
                                  golden_identities, middle_third_cantor, random_cantor)
from quantum_forms.duality import creation_term_at, verify_duality
from quantum_forms.field_core import Grid, RealField, WaveField, quadrature
from quantum_forms.info import (ehrenfest_residuals, energy_functionals, entropy_production,
                                exact_uncertainty, fisher_information, heat_flow,
                                quantum_potential_chain)
from quantum_forms.madelung import decompose, hydro_residuals, quantum_potential, stress_tensors
from quantum_forms.paths import (bohm_trajectories, estimate_drifts, ks_distance,
                                 nelson_ensemble, osmotic_velocity)
from quantum_forms.scenarios import Scenario, list_builtin, builtin, run_scenario
from quantum_forms.solvers import PotentialSpec, SolverParams, Trajectory, evolve

from _support import band_limited_density, stationary_trajectory

ORDER = 1.9
# linear-equation duality residuals sit below this at dt = 0.01; the negative control must exceed it
DUALITY_TOL = 1e-3


def _verdict(capsys, number, checks):
    """Print one line for the criterion and return whether every check passed."""
    ok = all(passed for _, passed in checks)
    detail = "; ".join(f"{text}{'' if passed else ' [FAIL]'}" for text, passed in checks)
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    return ok


def _order(coarse, fine):
    return float(np.log2(coarse / fine)) if fine > 0 else np.inf


def _two_hump(g):
    return states.superposition(states.gaussian_packet(g, -3.0, 1.0, 0.4),
                                states.gaussian_packet(g, 2.5, 0.8, -0.6))


def _coherent_run(dt):
    g = Grid.centered(128, 20.0)
    V = PotentialSpec.harmonic(g, 1.0)
    return evolve(states.coherent_state(g, 1.0, 2.0, 0.5), V, SolverParams(dt=dt),
                  int(round(1.0 / dt)))


def _ground_run(dt):
    g = Grid.centered(128, 20.0)
    V = PotentialSpec.harmonic(g, 1.0)
    return evolve(states.harmonic_ground(g, 1.0), V, SolverParams(dt=dt), int(round(1.0 / dt)))


def _free_run(dt):
    g = Grid.centered(256, 40.0)
    return evolve(states.gaussian_packet(g, 0.0, 1.0, 0.5), PotentialSpec.free(g),
                  SolverParams(dt=dt), int(round(1.0 / dt)))


def _random_densities(g, count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield band_limited_density(g, rng.uniform(-1.0, 1.0, size=(rng.integers(1, 6), 2)))


def test_criterion_01_gausson_propagation(capsys):
    g = Grid.centered(1024, 40.0)
    b, k, c0 = 0.5, 1.0, -5.0
    # soliton width 1/sqrt(alpha) = 1 for alpha = 2b/hbar^2; ten widths at v = 1 take t = 10
    tr = evolve(states.gausson(g, b, k, c0), PotentialSpec.free(g), SolverParams(dt=0.002, b=b),
                5000, "log", stride=500)
    shape, modulus = [], []
    for snap in tr.snapshots:
        center = c0 + g.hbar * k / g.mass * snap.time
        ref = np.abs(states.gausson(g, b, 0.0, center).values)
        shape.append(np.sqrt(g.dx * np.sum((np.abs(snap.values) - ref) ** 2)))
        modulus.append(np.max(np.abs(snap.density - states.gausson_density(g, b, center))))
    assert _verdict(capsys, 1, [
        (f"shape L2 error {max(shape):.2e} < 1e-4", max(shape) < 1e-4),
        (f"density max error {max(modulus):.2e} < 1e-4", max(modulus) < 1e-4),
    ])


def test_criterion_02_fractal_dispersion(capsys):
    g = Grid(64, 0.0, 2 * np.pi)
    psi0 = states.plane_wave(g, 1)
    k = 2 * np.pi / g.length
    period = 2 * np.pi / (g.hbar * k ** 2 / (2 * g.mass))
    n = 3000
    p = SolverParams(dt=period / n, scheme="rk4_semi_spectral", alpha=1.0, beta=0.05)
    tr = evolve(psi0, PotentialSpec.free(g), p, n, "fractal", stride=n // 10)
    mod0 = np.abs(psi0.values)
    drift = max(np.max(np.abs(np.abs(s.values) - mod0)) / np.max(mod0) for s in tr.snapshots)
    rep = energy_functionals(psi0, PotentialSpec.free(g), p, "fractal")
    target = (g.hbar * k) ** 2 / (2 * g.mass)
    err = max(abs(rep.e_ft - target), abs(rep.e_qm - target), rep.imag_part)
    assert _verdict(capsys, 2, [
        (f"modulus drift over one period {drift:.1e} < 1e-8", drift < 1e-8),
        (f"E_FT {rep.e_ft:.12f}, E_QM {rep.e_qm:.12f} vs p^2/2m {target}: {err:.1e} < 1e-8",
         err < 1e-8),
    ])


def test_criterion_03_log_energy_gap(capsys):
    g = Grid.centered(1024, 40.0)
    checks = []
    for b in (0.1, 0.5, 1.3):
        rep = energy_functionals(states.gausson(g, b, 1.0), PotentialSpec.free(g),
                                 SolverParams(dt=0.01, b=b), "log")
        err = abs(rep.difference - b)
        checks.append((f"b={b}: |gap - b| {err:.1e} < 1e-8", err < 1e-8))
    assert _verdict(capsys, 3, checks)


def test_criterion_04_madelung_identities(capsys):
    g = Grid.centered(256, 10.0)
    rng = np.random.default_rng(7)
    q_worst = stress_worst = 0.0
    for rho in _random_densities(g, 100, 2024):
        q_worst = max(q_worst, quantum_potential(rho).mismatch)
        phase = 2 * np.pi * rng.integers(-3, 4) * g.x / g.length
        mf = decompose(WaveField(g, np.sqrt(rho.values) * np.exp(1j * phase)))
        stress_worst = max(stress_worst, stress_tensors(mf).identity_residual)
    coarse, fine = hydro_residuals(_coherent_run(0.02)), hydro_residuals(_coherent_run(0.01))
    checks = [(f"two-form Q mismatch {q_worst:.1e} < 1e-8", q_worst < 1e-8),
              (f"stress identity {stress_worst:.1e} < 1e-8", stress_worst < 1e-8)]
    for key in ("continuity", "quantum_hj", "euler"):
        order = _order(getattr(coarse, key), getattr(fine, key))
        checks.append((f"{key} order {order:.2f} >= {ORDER}", order >= ORDER))
    assert _verdict(capsys, 4, checks)


def test_criterion_05_duality(capsys):
    checks = []
    for label, run in (("harmonic stationary", _ground_run), ("coherent", _coherent_run),
                       ("free packet", _free_run)):
        coarse, fine = verify_duality(run(0.02)), verify_duality(run(0.01))
        o_phi = _order(coarse.res_phi, fine.res_phi)
        o_hat = _order(coarse.res_phi_hat, fine.res_phi_hat)
        checks.append((f"{label} orders {o_phi:.2f}/{o_hat:.2f} >= {ORDER}",
                       min(o_phi, o_hat) >= ORDER))
    mism = [creation_term_at(tr, len(tr) // 2).mismatch
            for tr in (_coherent_run(0.02), _coherent_run(0.01))]
    o_c = _order(*mism)
    checks.append((f"creation routes mismatch {mism[1]:.1e}, order {o_c:.2f}", o_c >= ORDER))
    g = Grid.centered(256, 40.0)
    b = 0.5
    tr = evolve(states.gausson(g, b, 1.0), PotentialSpec.free(g), SolverParams(dt=0.01, b=b),
                100, "log")
    neg = min(verify_duality(tr))
    checks.append((f"log-NLSE control residual {neg:.2e} >= 10 x {DUALITY_TOL}",
                   neg >= 10 * DUALITY_TOL))
    assert _verdict(capsys, 5, checks)


def _schwarz_scenarios():
    g = Grid.centered(256, 40.0)
    free, harmonic = PotentialSpec.free(g), PotentialSpec.harmonic(g, 1.0)
    p = SolverParams(dt=0.01)
    yield "spreading", evolve(states.gaussian_packet(g, 0.0, 1.0, 0.5), free, p, 300, stride=5)
    yield "coherent", evolve(states.coherent_state(g, 1.0, 2.0, 0.5), harmonic, p, 300, stride=5)
    yield "two-hump", evolve(_two_hump(g), free, p, 300, stride=5)
    yield "ground", evolve(states.harmonic_ground(g, 1.0), harmonic, p, 100, stride=5)
    for name in ("duality-harmonic", "equivariance"):
        s = builtin(name)
        yield name, evolve(s.build_initial(), s.build_potential(), s.build_params(),
                           int(round(s.t_final / s.params["dt"])), s.equation, s.snapshot_stride)


def test_criterion_06_information_identities(capsys):
    checks = []
    g = Grid.centered(256, 10.0)
    chain = max(quantum_potential_chain(rho).max_relative_gap
                for rho in _random_densities(g, 50, 11))
    checks.append((f"-<Q> = D^2 F/2 chain gap {chain:.1e} < 1e-8", chain < 1e-8))

    gh = Grid.centered(256, 40.0)
    D = 0.5
    rho0 = RealField(gh, states.gaussian_packet(gh, 0.0, 1.0).density)
    heat = entropy_production(heat_flow(rho0, D, 0.01 * np.arange(201)), D=D)
    rel = float(np.max(np.abs(heat.rate / heat.diffusive_rate - 1)))
    checks.append((f"heat flow dS/dt = D F rel err {rel:.1e} < 1e-4", rel < 1e-4))

    schwarz = {name: entropy_production(tr).schwarz_holds() for name, tr in _schwarz_scenarios()}
    checks.append((f"Schwarz bound at every snapshot of {len(schwarz)} scenarios",
                   all(schwarz.values())))

    gu = Grid.centered(512, 40.0, hbar=0.8)
    worst = 0.0
    for psi in (states.gaussian_packet(gu, 0.0, 1.0), states.gaussian_packet(gu, 1.0, 0.8, 1.7),
                _two_hump(gu)):
        worst = max(worst, abs(exact_uncertainty(psi).product - 0.5 * gu.hbar))
    checks.append((f"dX dp_nc = hbar/2 err {worst:.1e} < 1e-6", worst < 1e-6))

    cr = []
    gl = Grid.centered(512, 40.0)
    tests = [RealField(gl, states.gaussian_packet(gl, 0.0, s).density) for s in (0.5, 1.0, 2.0)]
    tests.append(RealField(gl, _two_hump(gl).density))
    envelope = np.exp(-gl.x ** 2 / 8)
    for rho in _random_densities(Grid.centered(512, 10.0), 20, 5):
        vals = envelope * rho.values
        tests.append(RealField(gl, vals / quadrature(vals, gl)))
    for rho in tests:
        x = gl.x
        mean = quadrature(rho.values * x, gl)
        var = quadrature(rho.values * (x - mean) ** 2, gl)
        cr.append(var * fisher_information(rho))
    checks.append((f"Cramer-Rao min Var F = {min(cr):.10f} >= 1 on {len(cr)} densities",
                   min(cr) >= 1 - 1e-8))
    assert _verdict(capsys, 6, checks)


def test_criterion_07_ehrenfest(capsys):
    g = Grid.centered(256, 30.0)
    n = 8000
    tr = evolve(states.coherent_state(g, 1.0, 2.0), PotentialSpec.harmonic(g, 1.0),
                SolverParams(dt=2 * np.pi / n), n, stride=100)
    eh = ehrenfest_residuals(tr)
    err = float(np.max(np.abs(eh.mean_x - 2.0 * np.cos(eh.times))))

    ga = Grid.centered(256, 20.0)
    V = PotentialSpec.custom(ga, 0.5 * ga.x ** 2 + 0.01 * ga.x ** 4, ga.x + 0.04 * ga.x ** 3)
    fine = evolve(states.gaussian_packet(ga, 1.0, 0.7), V, SolverParams(dt=0.0025), 400)
    res = []
    for stride in (8, 4):
        sub = Trajectory(fine.snapshots[::stride], fine.params, V)
        e = ehrenfest_residuals(sub)
        res.append(float(np.sqrt(np.mean(e.r1 ** 2 + e.r2 ** 2))))
    order = _order(*res)
    assert _verdict(capsys, 7, [
        (f"coherent <x> vs x0 cos(wt) over one period {err:.1e} < 1e-6", err < 1e-6),
        (f"anharmonic residual order {order:.2f} >= {ORDER}", order >= ORDER),
    ])


def test_criterion_08_equivariance(capsys):
    g = Grid.centered(256, 40.0)
    tr = evolve(states.gaussian_packet(g, 0.0, 1.0, 0.5), PotentialSpec.free(g),
                SolverParams(dt=0.01), 300, stride=5)
    bohm = bohm_trajectories(tr, 10000, seed=1)
    ks_b = max(ks_distance(bohm.positions[:, i], tr[i]) for i in range(len(tr)))

    gg = Grid.centered(256, 20.0)
    ground = stationary_trajectory(states.harmonic_ground(gg, 1.0), 0.5,
                                   PotentialSpec.harmonic(gg, 1.0), 0.05, 41)
    nel = nelson_ensemble(ground, 10000, seed=2, substeps=4)
    ks_n = max(ks_distance(nel.positions[:, i], ground[i]) for i in range(len(ground)))
    assert _verdict(capsys, 8, [
        (f"Bohm KS {ks_b:.4f} < 0.02 (1e4 paths)", ks_b < 0.02),
        (f"Nelson ground-state KS {ks_n:.4f} < 0.03", ks_n < 0.03),
    ])


def test_criterion_09_drift_estimation(capsys):
    g = Grid.centered(512, 20.0)
    tr = stationary_trajectory(states.harmonic_ground(g, 1.0), 0.5,
                               PotentialSpec.harmonic(g, 1.0), 0.01, 9)
    fwd = nelson_ensemble(tr, 40000, seed=10, substeps=4)
    bwd = nelson_ensemble(tr, 40000, seed=11, direction="backward", substeps=4)
    est = estimate_drifts(fwd, bwd)
    p = est.populated
    u_true = np.full(est.u_est.shape, np.nan)
    u_true[p] = osmotic_velocity(tr[len(tr) // 2], est.mean_x[p])
    cov = est.coverage(u_true)
    assert _verdict(capsys, 9, [
        (f"u_est within 95% CI of D(log rho)' on {100 * cov:.1f}% of {int(p.sum())} bins",
         cov >= 0.9),
    ])


def test_criterion_10_golden_mean(capsys):
    gold, half = averages(PHI), averages(0.5)
    target = 4 + PHI ** 3
    d = np.linspace(0.5, 1.0, 10001)[:-1]
    sign_changes = int(np.count_nonzero(np.diff(np.sign(average_gap(d)))))
    mt = box_dimension(middle_third_cantor(14)).slope
    full = box_dimension(full_interval(14)).slope
    slopes = [box_dimension(random_cantor(seed, 14)).slope for seed in range(32)]
    mean = float(np.mean(slopes))
    gap = max(abs(gold.n_avg - target), abs(gold.d_avg - target))
    assert _verdict(capsys, 10, [
        (f"n_avg(phi) = d_avg(phi) = 4 + phi^3 = {target:.10f} err {gap:.1e}", gap < 1e-12),
        ("golden identities", golden_identities().holds()),
        (f"d0 = 1/2 gives ({half.n_avg:g}, {half.d_avg:g})", (half.n_avg, half.d_avg) == (3, 4)),
        (f"unique equality root on [1/2, 1): {sign_changes} sign change",
         sign_changes == 1 and abs(average_gap(PHI)) < 1e-9),
        (f"middle-third slope {mt:.4f} vs {np.log(2) / np.log(3):.4f}",
         abs(mt - np.log(2) / np.log(3)) < 0.02),
        (f"full interval slope {full:.4f}", abs(full - 1) < 0.01),
        (f"random Cantor mean slope {mean:.4f} within 0.05 of {PHI:.4f}",
         abs(mean - PHI) < 0.05),
    ])


STOCHASTIC = {
    "name": "nelson-ground", "equation": "linear",
    "grid": {"n": 256, "length": 20.0},
    "potential": {"kind": "harmonic", "omega": 1.0},
    "params": {"dt": 0.01},
    "initial": {"kind": "harmonic_ground", "omega": 1.0},
    "t_final": 0.5, "snapshot_stride": 5,
    "diagnostics": ["nelson_stationarity", "drift_coverage", "bohm_equivariance"],
    "seeds": [3], "options": {"n_paths": 5000, "substeps": 2, "coverage_min": 0.0},
}


def test_criterion_11_reproducibility(tmp_path, capsys):
    scenarios = [builtin(name) for name in list_builtin()] + [Scenario.from_dict(STOCHASTIC)]
    identical = []
    for s in scenarios:
        run_scenario(s, tmp_path / "first", write_snapshots=False)
        run_scenario(s, tmp_path / "second", write_snapshots=False)
        a = (tmp_path / "first" / s.name / "report.csv").read_bytes()
        b = (tmp_path / "second" / s.name / "report.csv").read_bytes()
        identical.append((s.name, a == b and len(a) > 0))
    bad = [name for name, same in identical if not same]
    assert _verdict(capsys, 11, [
        (f"{len(identical)} scenarios rerun bit-identically"
         + (f", differing: {bad}" if bad else ""), not bad),
    ])
