"""End-to-end pipelines: build data, evolve, extract, compare, report.

run_pipeline executes the full chain for one RunConfig and emits
monitors.csv, radiation.csv, interior.csv, envelopes.csv, and report.json
into the configured output directory.  Every file carries the config hash;
identical configs give byte-identical outputs.  convergence_study drives
grid-refinement sequences and reports observed orders.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import asymptotic_system as asys
from .config import RunConfig, dump_config, run_config_hash
from .core import FieldState, Weights
from .data_builder import (BumpProfile, ChargeValue, FreeData, GaussianProfile,
                           PolyGaussianProfile, TableProfile, assemble_state)
from .evolution import (EvolutionUnstable, ObservationPlan, SchemeParams,
                        evolve, frame_identity_residual)
from .grid import RadialGrid
from .interior import AsymSource, interior_limit_check
from .null_extraction import (build_radiation_table, envelope_check,
                              extract_AL_limit, extract_phi0,
                              j0_envelope_spec, phase_slope_fit,
                              phi_peeling_spec, sample_ray, table_interpolant,
                              mod_ALbar)
from .wave_oracle import dalembert_free, GaussianLambdaH


@dataclass
class Check:
    id: str
    description: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""

    def row(self) -> dict:
        return {"id": self.id, "description": self.description,
                "measured": self.measured, "tolerance": self.tolerance,
                "passed": bool(self.passed), "detail": self.detail}


@dataclass
class RunReport:
    config_hash: str
    charge_Q: float
    checks: list = field(default_factory=list)
    monitor_summary: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def add(self, *args, **kwargs):
        self.checks.append(Check(*args, **kwargs))

    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "charge_Q": self.charge_Q,
            "monitor_summary": self.monitor_summary,
            "checks": [c.row() for c in self.checks],
            "extras": self.extras,
            "all_passed": self.all_passed(),
        }


# ---------------------------------------------------------------------------
# data construction from config

def _even_profile(cfg_data: dict):
    fam = cfg_data["family"]
    amp, width = cfg_data["amplitude"], cfg_data["width"]
    if fam == "gaussian":
        return GaussianProfile(amp, width)
    if fam == "bump":
        return BumpProfile(amp, width)
    if fam == "polygauss":
        return PolyGaussianProfile(amp, cfg_data["power"], width)
    if fam == "file":
        return TableProfile.from_file(cfg_data["phi0_file"])
    raise ValueError(f"unknown data family {fam!r}")


def build_free_data(cfg: RunConfig, grid: RadialGrid) -> FreeData:
    """FreeData per the [data] section.

    The reference family is phi0 = amp * exp(-r^2) with the covariant datum
    phi0_dot = i * phidot_scale * phi0 (nonzero charge for phidot_scale != 0).
    """
    d = cfg.data
    r = grid.r
    prof = _even_profile(d)
    phi0 = prof(r).astype(complex)
    if d["phidot_file"]:
        phi0_dot = 1j * d["phidot_scale"] * TableProfile.from_file(d["phidot_file"])(r)
    else:
        phi0_dot = 1j * d["phidot_scale"] * prof(r)
    if d["ar_family"] == "none":
        ar0 = np.zeros_like(r)
    elif d["ar_family"] == "polygauss":
        if d["ar_power"] % 2 == 0:
            raise ValueError("data.ar_power must be odd (ar is an odd profile)")
        ar0 = PolyGaussianProfile(d["ar_amplitude"], d["ar_power"], d["ar_width"])(r)
    else:
        ar0 = TableProfile.from_file(d["ar_file"])(r)
    ar0_dot = d["ardot_amplitude"] * np.where(r > 0, r, 0.0) * np.exp(-r ** 2)
    return FreeData(phi0=phi0, phi0_dot=phi0_dot.astype(complex),
                    ar0=ar0, ar0_dot=ar0_dot)


# ---------------------------------------------------------------------------
# csv emission

def _write_csv(path: str, header_cols: list, rows, config_hash: str) -> None:
    with open(path, "w") as f:
        f.write(f"# mkglab output, config_hash={config_hash}\n")
        f.write(",".join(header_cols) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    return str(v)


# ---------------------------------------------------------------------------
# pipeline

def run_pipeline(cfg: RunConfig, out_dir: str | None = None,
                 progress=None, full_criteria: bool = False,
                 module_checks: bool = True) -> RunReport:
    """Execute data_builder -> evolution -> extraction -> interior -> report.

    full_criteria=True additionally runs the domain-doubling companion for
    the envelope-stability check (roughly 4x the base cost); otherwise that
    check is reported from the base domain only and marked accordingly.
    module_checks=False skips the oracle/kernel/convergence spot checks
    (partial report, intended for smoke tests).  Deterministic for a fixed
    config (seeded RNG, single-threaded numpy).
    """
    t_start = time.time()
    say = progress or (lambda msg: None)
    chash = run_config_hash(cfg)
    out_dir = out_dir or cfg.output["directory"]
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(cfg.output["seed"])

    grid = RadialGrid(cfg.grid["r_max"], cfg.grid["n_cells"], cfg.grid["ghost_count"])
    weights = Weights(cfg.weights["s"], cfg.weights["gamma"])
    scheme = SchemeParams(cfg.scheme["cfl"], cfg.scheme["t_end"],
                          cfg.scheme["boundary"], cfg.scheme["monitor_stride"])
    cfg_errs = scheme.validate(grid)
    if cfg_errs:
        raise ValueError("; ".join(cfg_errs))

    say(f"[1/6] building data on n={grid.n_cells}, r_max={grid.r_max}")
    data = build_free_data(cfg, grid)
    state0, Q = assemble_state(data, grid)
    report = RunReport(config_hash=chash, charge_Q=Q.Q)
    target = Q.Q / (4.0 * np.pi)

    ext = cfg.extraction
    t_end = scheme.t_end
    slice_times = sorted(set(
        [round(f * t_end, 10) for f in ext["t_fracs"]]
        + [float(t) for t in cfg.interior["t_list"]]))
    plan = ObservationPlan(
        ray_qs=tuple(ext["q_rays"]),
        stencil_spacing_cells=ext["stencil_spacing_cells"],
        snapshot_every=2,
        snapshot_subsample=max(1, grid.n_cells // 2000),
        slice_times=tuple(slice_times),
        ray_domain_frac=ext["domain_frac"])

    say(f"[2/6] evolving to t={t_end} ({int(round(t_end / (scheme.cfl * grid.h)))} steps)")
    result = evolve(state0, grid, scheme, plan)
    log = result.log

    # -- monitor summary and single-run criteria -----------------------------
    tarr = np.array(log.t)
    lor = np.array(log.lorenz_residual_sup)
    qarr = np.array(log.charge_Q)
    earr = np.array(log.energy_E)
    burn = tarr <= max(tarr[0], 0.05 * t_end)
    lor_base = float(np.max(lor[burn]))
    lor_sup = float(np.max(lor))
    report.monitor_summary = {
        "lorenz_t0": float(lor[0]), "lorenz_burn_in_max": lor_base,
        "lorenz_sup": lor_sup, "lorenz_final": float(lor[-1]),
        "charge_t0": float(qarr[0]), "charge_drift_max": float(np.max(np.abs(qarr - qarr[0]))),
        "energy_t0": float(earr[0]), "energy_final": float(earr[-1]),
        "n_monitor_events": len(tarr),
    }
    report.add("lorenz_stability",
               "Lorenz residual stays within 10x its initial (burn-in) level",
               lor_sup / max(lor_base, 1e-300), 10.0,
               lor_sup <= 10.0 * lor_base,
               detail=f"t=0 residual {lor[0]:.3e}, burn-in max {lor_base:.3e}, sup {lor_sup:.3e}")
    qdrift = float(np.max(np.abs(qarr - qarr[0])) / abs(qarr[0])) if qarr[0] != 0 else 0.0
    report.add("charge_conservation", "relative charge drift < 1e-3 over the run",
               qdrift, 1e-3, qdrift < 1e-3)

    # frame identity residual along the central ray
    frame_sup = None
    central_q = min(plan.ray_qs, key=abs) if plan.ray_qs else None
    if central_q is not None and len(result.rays[central_q].times) >= 5:
        frame_sup, ftimes, fres = frame_identity_residual(result.rays[central_q], Q)
        for tt, rr in zip(ftimes, fres):
            log.frame_identity_residual_sup[float(tt)] = float(abs(rr))
        report.extras["frame_identity_sup"] = frame_sup

    # -- extraction ----------------------------------------------------------
    say("[3/6] extracting radiation tables and ray limits")
    h = grid.h
    dq = ext["q_spacing_cells"] * h
    q_grid = np.arange(ext["q_min"], ext["q_max"] + 0.5 * dq, dq)
    frac_slices = {t: result.slices[t] for t in result.slices
                   if any(abs(t - f * t_end) < 1e-9 for f in ext["t_fracs"])}
    table = build_radiation_table(frac_slices, grid, Q, q_grid,
                                  domain_frac=ext["domain_frac"],
                                  ray_qs=tuple(ext["q_rays"]))
    report.extras["J_identity_residual"] = table.check_identity()

    al_rows = []
    phi0_rows = []
    for qray in ext["q_rays"]:
        ray = sample_ray(frac_slices, grid, qray, domain_frac=ext["domain_frac"])
        if len(ray.t) < 3:
            continue
        al = extract_AL_limit(ray, Q)
        errs_last3 = np.abs(ray.r[-3:] * ray.A_L[-3:] - target)
        rel = abs(al.value.real - target) / abs(target) if target != 0 else abs(al.value.real)
        floor = 1e-10 * abs(target) + 1e-300
        decreasing = bool(np.all(np.diff(errs_last3) < 0)
                          or np.all(errs_last3 < floor))
        al_rows.append({"q": qray, "value": al.value.real, "rel_err": rel,
                        "decreasing": decreasing,
                        "err_last3": [float(e) for e in errs_last3]})
        ph = extract_phi0(ray, Q)
        incs = ph.increments[-2:] if len(ph.increments) >= 2 else ph.increments
        ratio = float(incs[-1] / incs[-2]) if len(incs) >= 2 and incs[-2] > 0 else np.inf
        phi0_rows.append({"q": qray, "value": [ph.value.real, ph.value.imag],
                          "amp": abs(ph.value), "err_est": ph.err_est,
                          "cauchy_ratio": ratio, "converged": ph.converged,
                          "diagnostic": ph.diagnostic})
    # rays carrying no radiation to double precision are trivially Cauchy
    amp_max = max((row["amp"] for row in phi0_rows), default=0.0)
    for row in phi0_rows:
        if row["amp"] < 1e-10 * amp_max or row["err_est"] < 1e-30:
            row["cauchy_ratio"] = 0.0
            row["converged"] = True
            row["diagnostic"] = "below radiation noise floor, trivially Cauchy"

    worst_al = max((r["rel_err"] for r in al_rows), default=np.inf)
    al_tol = cfg.tolerances["al_limit_rel"]
    report.add("AL_limit", f"r A_L limit matches Q/4pi to {al_tol:.0%} on every ray",
               worst_al, al_tol,
               worst_al < al_tol and all(r["decreasing"] for r in al_rows),
               detail=json.dumps(al_rows))
    worst_ratio = max((r["cauchy_ratio"] for r in phi0_rows), default=np.inf)
    report.add("phi0_cauchy",
               "phase-corrected r phi Cauchy: terminal increment < 20% of previous",
               worst_ratio, 0.2, worst_ratio < 0.2,
               detail=json.dumps(phi0_rows))

    # phase slope on the densely sampled central ray
    slope_check = _phase_slope_check(result, central_q, target)
    if slope_check is not None:
        measured, tol, ok, detail = slope_check
        report.add("charge_phase_slope",
                   "phase slope of uncorrected r phi recovers -Q/4pi within 10%",
                   measured, tol, ok, detail=detail)

    # A_Lbar: log growth on the most interior ray + mod-corrected Cauchy
    albar_check = _albar_checks(result, plan, grid, Q, table, ext, t_end)
    if albar_check is not None:
        corr_val, corr_ok, mod_ratio, mod_ok, detail = albar_check
        report.add("albar_log_correlation",
                   "raw r A_Lbar is log-linear in (1+r): |corr| >= 0.99 on final decade",
                   corr_val, 0.99, corr_ok, detail=detail)
        report.add("albar_mod_cauchy",
                   "r A_Lbar^mod Cauchy: terminal increment < 20% of previous",
                   mod_ratio, 0.2, mod_ok, detail=detail)

    # -- interior ------------------------------------------------------------
    say("[4/6] interior limit comparison")
    source = AsymSource(q_grid=table.q, j=table.j_scalar(),
                        meta={"from": "radiation_table"})
    interior_slices = {t: result.slices[t] for t in result.slices
                       if any(abs(t - tt) < 1e-9 for tt in cfg.interior["t_list"])}
    interior_rows = interior_limit_check(interior_slices, grid, source,
                                         cfg.interior["y_list"], cfg.interior["t_list"])
    int_tol = cfg.tolerances["interior_rel"]
    worst_final = 0.0
    monotone = True
    for y in cfg.interior["y_list"]:
        sub = [r for r in interior_rows if r["y"] == y]
        sub.sort(key=lambda r: r["t"])
        errs = [r["abs_err0"] for r in sub]
        monotone = monotone and all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
        k0 = sub[-1]["K0_pred"]
        worst_final = max(worst_final, abs(sub[-1]["abs_err0"] / k0) if k0 else np.inf)
    sign_ok = all((r["K0_pred"] < 0) == (Q.Q < 0) or r["K0_pred"] == 0
                  for r in interior_rows)
    report.add("interior_limit",
               f"t A_0 -> K_0(y): error decreasing in t, final rel err < {int_tol:.0%}, sign matches",
               worst_final, int_tol, monotone and worst_final < int_tol and sign_ok,
               detail=f"monotone={monotone}, sign_ok={sign_ok}")

    report.extras["asym_source_mass"] = source.mass()
    report.extras["asym_source_mass_vs_charge"] = (
        source.mass() / (-target) if target != 0 else np.nan)

    # -- envelopes -----------------------------------------------------------
    say("[5/6] decay envelope sups")
    phi_spec = phi_peeling_spec(weights)
    j0_spec = j0_envelope_spec(weights)
    sup_phi, arg_phi = envelope_check(result.snapshots, phi_spec, "phi")
    sup_j0, arg_j0 = envelope_check(result.snapshots, j0_spec, "j0")
    env_rows = [
        (phi_spec.label, sup_phi, arg_phi[0], arg_phi[1]),
        (j0_spec.label, sup_j0, arg_j0[0], arg_j0[1]),
    ]
    if full_criteria:
        say("[5/6+] domain-doubling companion run for envelope stability")
        sup2_phi, sup2_j0 = _doubled_domain_sups(cfg, phi_spec, j0_spec, say)
        change = max(abs(sup2_phi - sup_phi) / sup_phi if sup_phi else 0.0,
                     abs(sup2_j0 - sup_j0) / sup_j0 if sup_j0 else 0.0)
        report.add("envelope_stability",
                   "weighted sups change < 10% when r_max, t_end double",
                   change, 0.10, change < 0.10,
                   detail=f"phi: {sup_phi:.6g} -> {sup2_phi:.6g}; J0: {sup_j0:.6g} -> {sup2_j0:.6g}")
        env_rows.append((phi_spec.label + "_doubled", sup2_phi, np.nan, np.nan))
        env_rows.append((j0_spec.label + "_doubled", sup2_j0, np.nan, np.nan))
    else:
        report.add("envelope_stability",
                   "weighted sups finite on the base domain (doubling run skipped)",
                   max(sup_phi, sup_j0), np.inf,
                   np.isfinite(sup_phi) and np.isfinite(sup_j0),
                   detail="run with full_criteria=True for the doubling comparison")

    # -- module-level fast criteria (oracles, kernels, asymptotic system) ----
    if module_checks:
        say("[6/6] oracle, kernel, and convergence spot checks")
        _kernel_checks(report, rng)
        _asys_checks(report, Q)
        _oracle_checks(report, rng)
        _free_wave_order_check(report, cfg)
        _refinement_orders_check(report, cfg, say)

    # -- emission ------------------------------------------------------------
    _emit(out_dir, chash, cfg, log, table, interior_rows, env_rows, report)
    report.extras["wall_seconds"] = time.time() - t_start
    return report


def _phase_slope_check(result, central_q, target):
    if central_q is None:
        return None
    hist = result.rays[central_q]
    if len(hist.times) < 16:
        return None
    times, r0, a0, ar, phi, j0, jr = hist.as_arrays()
    c = hist.center
    rphi = r0 * phi[:, c]
    if np.max(np.abs(rphi)) == 0.0:
        return (0.0, 0.10, True, "zero field, trivial")
    mask = r0 > r0[-1] / 10.0
    try:
        slope, r2 = phase_slope_fit(r0[mask], rphi[mask])
    except ValueError as exc:
        return (np.nan, 0.10, False, f"fit not applicable: {exc}")
    expected = -target
    rel = abs(slope - expected) / abs(expected) if expected != 0 else abs(slope)
    return (rel, 0.10, rel < 0.10,
            f"slope={slope:.6e}, expected={expected:.6e}, r2={r2:.4f}")


def _albar_checks(result, plan, grid, Q, table, ext, t_end):
    if not plan.ray_qs:
        return None
    q_low = min(plan.ray_qs)
    hist = result.rays[q_low]
    if len(hist.times) < 16:
        return None
    times, r0, a0, ar, phi, j0, jr = hist.as_arrays()
    c = hist.center
    ralb = r0 * (a0[:, c] - ar[:, c])
    if np.max(np.abs(ralb)) == 0.0:
        return 1.0, True, 0.0, True, "zero field, trivial"
    mask = r0 > r0[-1] / 10.0
    x = np.log1p(r0[mask])
    y = ralb[mask]
    corr = float(np.corrcoef(x, y)[0, 1])
    slope = float(np.polyfit(x, y, 1)[0])
    # mod-corrected values at geometrically spaced late times
    j_interp = table_interpolant(table.q, table.j_scalar())
    idx = [len(times) // 4, len(times) // 2, int(len(times) * 0.7),
           int(len(times) * 0.85), len(times) - 1]
    mods = []
    for i in idx:
        mods.append(r0[i] * mod_ALbar((a0[i, c] - ar[i, c]), j_interp,
                                      table.q[-1], times[i], r0[i],
                                      q_min=table.q[0]))
    incs = np.abs(np.diff(mods))
    mod_ratio = float(incs[-1] / incs[-2]) if incs[-2] > 0 else np.inf
    detail = (f"ray q={q_low}: slope={slope:.4e}, corr={corr:.5f}, "
              f"mod increments={[f'{v:.3e}' for v in incs]}")
    return abs(corr), abs(corr) >= 0.99, mod_ratio, mod_ratio < 0.2, detail


def _doubled_domain_sups(cfg, phi_spec, j0_spec, say):
    from copy import deepcopy
    cfg2 = deepcopy(cfg)
    cfg2.grid["r_max"] = 2.0 * cfg.grid["r_max"]
    cfg2.grid["n_cells"] = 2 * cfg.grid["n_cells"]
    cfg2.scheme["t_end"] = 2.0 * cfg.scheme["t_end"]
    grid2 = RadialGrid(cfg2.grid["r_max"], cfg2.grid["n_cells"])
    scheme2 = SchemeParams(cfg2.scheme["cfl"], cfg2.scheme["t_end"],
                           cfg2.scheme["boundary"], cfg2.scheme["monitor_stride"])
    data2 = build_free_data(cfg2, grid2)
    st2, _ = assemble_state(data2, grid2)
    plan2 = ObservationPlan(snapshot_every=2,
                            snapshot_subsample=max(1, grid2.n_cells // 2000))
    res2 = evolve(st2, grid2, scheme2, plan2)
    s_phi, _ = envelope_check(res2.snapshots, phi_spec, "phi")
    s_j0, _ = envelope_check(res2.snapshots, j0_spec, "j0")
    return s_phi, s_j0


def _kernel_checks(report: RunReport, rng) -> None:
    """Angular identity vs sphere quadrature + the A^ex chain decay."""
    from .interior import (angular_kernel_integral, angular_kernel_quadrature,
                           chain_difference_report, CallableSource)
    worst = 0.0
    for _ in range(100):
        a = float(rng.uniform(0.5, 5.0))
        x = float(a * rng.uniform(0.0, 0.99))
        closed = angular_kernel_integral(a, x)
        quadv = angular_kernel_quadrature(a, x, abs_tol=1e-10)
        worst = max(worst, abs(closed - quadv))
    report.add("angular_identity", "closed form vs S2 quadrature on 100 random inputs",
               worst, 1e-8, worst < 1e-8)
    src = CallableSource(lambda q: np.exp(-q * q), (-2.0, 2.0))
    rep = chain_difference_report([20.0, 40.0, 80.0], 0.5, src, s=0.9)
    bound = -(2 * 0.9 - 1.0) + 0.2
    report.add("chain_difference_decay",
               "|A^ex - A^ex,inf| decay exponent <= -(2s-1)+0.2 at c=0.5",
               rep["fitted_exponent"], bound, rep["fitted_exponent"] <= bound,
               detail=f"C log-slope {rep['C_log_slope']:.3f}")


def _asys_checks(report: RunReport, Q: ChargeValue) -> None:
    """Weak-null certificate at the configured charge parameter."""
    q_grid = np.linspace(-8.0, 8.0, 801)
    phi0 = np.exp(-q_grid ** 2) * (q_grid / 2.0 + 0.25j)
    st = asys.AsymState.from_phi0(q_grid, phi0, A_L_param=1.0)
    final, hist = asys.integrate(st, 50.0, 1e-2, record_every=500)
    cert = asys.weak_null_certificate(hist, 1e-2)
    report.add("weak_null_modulus", "sup_q |P| drift < 1e-10 over s in [0,50]",
               cert["modulus_drift"], 1e-10, cert["modulus_drift"] < 1e-10)
    report.add("weak_null_affine", "A_Lbar affine-in-s fit residual < 1e-6",
               cert["albar_affine_residual"], 1e-6,
               cert["albar_affine_residual"] < 1e-6)
    errs = []
    for ds in (4e-2, 2e-2, 1e-2):
        f2, _ = asys.integrate(st, 2.0, ds)
        errs.append(asys.phase_factorization_error(st, f2))
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    order = float(np.mean(orders))
    report.add("phase_factorization_order", "RK4 phase factorization order = 4.0 +- 0.1",
               order, 0.1, abs(order - 4.0) <= 0.1,
               detail=f"errors {errs}")


def _oracle_checks(report: RunReport, rng) -> None:
    """Manufactured-solution gate, oracle agreement, logest1 stability."""
    from .wave_oracle import (RadialSource, solve_inhom_radial, kirchhoff_eval,
                              verify_decay_bound)
    from .data_builder import GaussianProfile

    # manufactured solution: phi* = e^{-t} e^{-r^2}; F = d_t^2 phi* - Lap phi*
    def F(t, r):
        return np.exp(-t - r * r) * (7.0 - 4.0 * r * r)

    src = RadialSource(F=F)
    tpt, rpt = 1.0, 1.0
    inhom = solve_inhom_radial(src, tpt, rpt, abs_tol=1e-10)
    g = GaussianProfile(1.0, 1.0)
    hom = dalembert_free(g, lambda x: -np.exp(-x * x), tpt, rpt).real
    mms_err = abs(inhom + hom - np.exp(-tpt - rpt ** 2))
    report.add("oracle_mms", "manufactured-solution recovery to 1e-6",
               mms_err, 1e-6, mms_err < 1e-6)

    # d'Alembert vs Kirchhoff on random Gaussian-mixture radial data
    worst = 0.0
    for _ in range(1000):
        amps = rng.uniform(-1.0, 1.0, size=2)
        widths = rng.uniform(0.5, 2.0, size=2)
        t = float(rng.uniform(0.2, 6.0))
        r = float(rng.uniform(0.1, 8.0))
        g0 = _GaussMix(amps[0], widths[0])
        h0 = _GaussMix(amps[1], widths[1])
        da = dalembert_free(g0, h0, t, r).real
        ki = kirchhoff_eval(g0, h0, t, r, w0_prime=g0.d, order=160)
        worst = max(worst, abs(da - ki))
    report.add("oracle_agreement",
               "dalembert vs kirchhoff < 1e-8 on 1000 random radial cases",
               worst, 1e-8, worst < 1e-8)

    # logest1: envelope constant stable under domain doubling
    def F1(t, r):
        return 1.0 / ((1.0 + r) * (1.0 + t + r) * (1.0 + np.abs(t - r)) ** 2)

    src1 = RadialSource(F=F1, decay_C=1.0, decay_delta=1.0)
    cs = []
    for dom in (100.0, 200.0):
        samples = []
        for (ft, fr) in _SAMPLE_FRACS:
            t, r = ft * dom, fr * dom
            val = solve_inhom_radial(src1, t, r, fast=True)
            samples.append((t, r, val))
        c, _ = verify_decay_bound(samples, "logest1", {"delta": 1.0})
        cs.append(c)
    change = abs(cs[1] - cs[0]) / cs[0]
    report.add("oracle_logest1",
               "logest1 envelope constant stable within 20% under domain doubling",
               change, 0.20, change < 0.20,
               detail=f"C = {cs[0]:.6g} -> {cs[1]:.6g}")


_SAMPLE_FRACS = [(0.2, 0.1), (0.2, 0.22), (0.5, 0.1), (0.5, 0.3), (0.5, 0.52),
                 (0.8, 0.2), (0.8, 0.5), (0.8, 0.82), (0.9, 0.3), (0.9, 0.7),
                 (0.6, 0.58), (0.95, 0.9), (0.4, 0.38), (0.7, 0.1), (0.3, 0.28)]


class _GaussMix:
    def __init__(self, amp, width):
        self.amp = amp
        self.width = width

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amp * np.exp(-((x / self.width) ** 2))

    def d(self, x):
        x = np.asarray(x, dtype=float)
        return self(x) * (-2.0 * x / self.width ** 2)


def _free_wave_order_check(report: RunReport, cfg: RunConfig) -> None:
    """Criterion-1 free-wave convergence on a scaled (r_max=100) domain."""
    from copy import deepcopy
    cfg2 = deepcopy(cfg)
    cfg2.grid["r_max"], cfg2.scheme["t_end"] = 100.0, 50.0
    errs, times = [], []
    for n in (500, 1000, 2000):
        grid = RadialGrid(100.0, n)
        scheme = SchemeParams(cfg.scheme["cfl"], 50.0, cfg.scheme["boundary"],
                              cfg.scheme["monitor_stride"])
        t0 = time.time()
        errs.append(_free_wave_error(cfg2, grid, scheme))
        times.append(time.time() - t0)
    orders = [float(np.log2(errs[i] / errs[i + 1])) for i in range(2)]
    order = orders[-1]
    report.add("free_wave_order", "free-wave convergence order = 2.0 +- 0.2",
               order, 0.2, abs(order - 2.0) <= 0.2 and max(times) < 60.0,
               detail=f"errors {errs}, orders {orders}, seconds {[f'{s:.2f}' for s in times]}")


def _refinement_orders_check(report: RunReport, cfg: RunConfig, say) -> None:
    """Lorenz-residual and charge-drift orders on a scaled refinement ladder."""
    from copy import deepcopy
    cfg2 = deepcopy(cfg)
    cfg2.grid["r_max"], cfg2.grid["n_cells"] = 100.0, 1000
    cfg2.scheme["t_end"] = 80.0
    cfg2.extraction["q_rays"] = [0.0]
    study = convergence_study(cfg2, levels=3, progress=say)
    lor = study["orders"]["lorenz_residual"][-1]
    chg = study["orders"]["charge_drift"][-1]
    report.add("lorenz_order", "Lorenz residual refinement order >= 1.8",
               lor, 1.8, np.isfinite(lor) and lor >= 1.8,
               detail=f"residuals {study['errors']['lorenz_residual']}")
    report.add("charge_order", "charge drift refinement order >= 1.8",
               chg, 1.8, np.isfinite(chg) and chg >= 1.8,
               detail=f"drifts {study['errors']['charge_drift']}")


def _emit(out_dir, chash, cfg, log, table, interior_rows, env_rows, report):
    with open(os.path.join(out_dir, "config.txt"), "w") as f:
        f.write(dump_config(cfg))
    frame = log.frame_identity_residual_sup
    mon_rows = []
    for i, t in enumerate(log.t):
        fr = frame.get(float(t), np.nan)
        mon_rows.append((t, log.lorenz_residual_sup[i], log.charge_Q[i],
                         log.energy_E[i], fr))
    _write_csv(os.path.join(out_dir, "monitors.csv"),
               ["t", "lorenz_residual_sup", "charge_Q", "energy_E",
                "frame_identity_residual_sup"], mon_rows, chash)
    rad_rows = [(table.q[i], table.Phi0[i].real, table.Phi0[i].imag,
                 table.J_Lbar[i], table.A_L_err, table.A_Lbar_mod[i])
                for i in range(len(table.q))]
    _write_csv(os.path.join(out_dir, "radiation.csv"),
               ["q", "Re_Phi0", "Im_Phi0", "J_Lbar", "A_L_limit_err", "A_Lbar_mod"],
               rad_rows, chash)
    int_rows = [(r["t"], r["y"], r["tA0_sim"], r["K0_pred"], r["abs_err0"],
                 r["tAr_sim"], r["Kr_pred"], r["abs_errr"])
                for r in interior_rows]
    _write_csv(os.path.join(out_dir, "interior.csv"),
               ["t", "y_norm", "tA0_sim", "K0_pred", "abs_err",
                "tAr_sim", "Kr_pred", "abs_err_r"], int_rows, chash)
    _write_csv(os.path.join(out_dir, "envelopes.csv"),
               ["envelope", "sup_weighted", "argmax_t", "argmax_r"],
               env_rows, chash)
    with open(os.path.join(out_dir, "report.json"), "w") as f:
        json.dump(report.to_dict(), f, indent=1, sort_keys=True)
        f.write("\n")


def write_failed_marker(out_dir: str, exc: Exception) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "FAILED"), "w") as f:
        f.write(f"{type(exc).__name__}: {exc}\n")


# ---------------------------------------------------------------------------
# convergence studies

def convergence_study(cfg: RunConfig, levels: int = 3, progress=None) -> dict:
    """Refinement study at h, h/2, h/4, ... on the configured domain.

    Tracks the free-wave error against the d'Alembert oracle (linear run),
    the Lorenz residual, the charge drift, and the frame-identity residual
    of the full run.  Observed order between consecutive levels is
    log2(e_coarse / e_fine); non-monotone errors are flagged.
    """
    if levels < 2:
        raise ValueError("convergence_study needs >= 2 levels")
    say = progress or (lambda msg: None)
    baseline_n = cfg.grid["n_cells"]
    errors = {"free_wave": [], "lorenz_residual": [], "charge_drift": [],
              "frame_identity": []}
    level_info = []
    for lev in range(levels):
        n = baseline_n * (2 ** lev)
        say(f"level {lev}: n_cells = {n}")
        grid = RadialGrid(cfg.grid["r_max"], n)
        scheme = SchemeParams(cfg.scheme["cfl"], cfg.scheme["t_end"],
                              cfg.scheme["boundary"], cfg.scheme["monitor_stride"])
        data = build_free_data(cfg, grid)
        info = {"n_cells": n, "h": grid.h}
        try:
            errors["free_wave"].append(_free_wave_error(cfg, grid, scheme))
            st0, Q = assemble_state(data, grid)
            plan = ObservationPlan(ray_qs=(0.0,),
                                   stencil_spacing_cells=cfg.extraction["stencil_spacing_cells"],
                                   snapshot_every=10 ** 9)
            res = evolve(st0, grid, scheme, plan)
            lor = np.array(res.log.lorenz_residual_sup)
            tarr = np.array(res.log.t)
            qs = np.array(res.log.charge_Q)
            # sup over the propagated window: the data-transient burn-in peak
            # is sampled at h-dependent times and spoils order measurement
            late = tarr >= 0.1 * scheme.t_end
            errors["lorenz_residual"].append(float(np.max(lor[late])))
            errors["charge_drift"].append(float(np.max(np.abs(qs - qs[0]))))
            if len(res.rays[0.0].times) >= 5:
                _, fts, fser = frame_identity_residual(res.rays[0.0], Q)
                # same propagated window as the Lorenz residual: the ray
                # enters the sampled region at h-dependent early times
                fwin = fts >= 0.1 * scheme.t_end
                fr = float(np.max(np.abs(fser[fwin]))) if np.any(fwin) else np.nan
                errors["frame_identity"].append(fr)
            else:
                errors["frame_identity"].append(np.nan)
            info["status"] = "ok"
        except EvolutionUnstable as exc:
            info["status"] = f"unstable: {exc}"
            for key in errors:
                if len(errors[key]) <= lev:
                    errors[key].append(np.nan)
        level_info.append(info)
    orders = {}
    flags = []
    for key, errs in errors.items():
        seq = []
        for i in range(len(errs) - 1):
            if not (np.isfinite(errs[i]) and np.isfinite(errs[i + 1])) or errs[i + 1] == 0:
                seq.append(np.nan)
                continue
            if errs[i + 1] > errs[i]:
                flags.append(f"{key}: not in asymptotic regime "
                             f"(error grew {errs[i]:.3e} -> {errs[i + 1]:.3e})")
            seq.append(float(np.log2(errs[i] / errs[i + 1])))
        orders[key] = seq
    return {"levels": level_info, "errors": errors, "orders": orders,
            "flags": flags}


def _free_wave_error(cfg: RunConfig, grid: RadialGrid, scheme: SchemeParams) -> float:
    """Sup error of the linear (A = 0) run against the d'Alembert oracle."""
    d = cfg.data
    prof = _even_profile(d)
    state0 = FieldState.zeros(grid)
    state0.phi = prof(grid.r).astype(complex)
    state0.phi_t = 1j * d["phidot_scale"] * prof(grid.r)
    lin = SchemeParams(scheme.cfl, scheme.t_end, scheme.boundary,
                       scheme.monitor_stride, linear=True)
    res = evolve(state0, grid, lin, ObservationPlan(snapshot_every=10 ** 9))
    t_fin = res.final.t
    r = grid.r[1:]
    if d["family"] == "gaussian":
        lam = GaussianLambdaH(c=d["phidot_scale"] * d["amplitude"], width=d["width"])
        exact_re = dalembert_free(prof, None, t_fin, r)
        exact = exact_re + 1j * np.asarray(
            0.5 * (lam.lambda_antiderivative(r + t_fin)
                   - lam.lambda_antiderivative(np.abs(r - t_fin))) / r)
    else:
        hfun = lambda x: 1j * d["phidot_scale"] * prof(x)
        exact = dalembert_free(prof, hfun, t_fin, r)
    return float(np.max(np.abs(res.final.phi[1:] - exact)))
