"""Time evolution of the spherically reduced MKG system in Lorenz gauge.

Method of lines: 2nd-order spatial stencils from grid.py and the classical
4-stage Runge-Kutta integrator on the first-order system
(phi, phi_t, a0, a0_t, ar, ar_t).  With Box = -d_t^2 + Lap the evolved
equations are

    d_t^2 phi = Lap phi + 2i (-a0 phi_t + ar d_r phi) - (ar^2 - a0^2) phi
    d_t^2 a0  = Lap a0 + J_0
    d_t^2 ar  = Lap_vec ar + J_r

where Lap_vec carries the -2 ar/r^2 term of the vector Laplacian acting on
omega_j ar(r).  Diagnostics: the Lorenz residual sup|-d_t a0 + div(omega ar)|,
the charge 4 pi int J_0 r^2 dr, the gauge-covariant energy, and the residual
of the null-frame identity

    L( r Lbar(r A_L) ) + L( r A^1_Lbar ) = r^2 J_L

measured along outgoing rays (the angular term vanishes here).
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .core import FieldState, current
from .data_builder import ChargeValue, CutoffChi
from .grid import (EVEN, RadialGrid, d_r, divergence_radial, interp_values,
                   laplacian_even, laplacian_radial_vector, simpson_integral)


class EvolutionUnstable(RuntimeError):
    """Raised by the blow-up / NaN guard with the offending time and node."""


@dataclass
class SchemeParams:
    cfl: float = 0.5
    t_end: float = 320.0
    boundary: str = "sommerfeld"   # "sommerfeld" | "none"
    monitor_stride: int = 40
    linear: bool = False           # drop couplings and currents (oracle runs)

    def validate(self, grid: RadialGrid) -> list[str]:
        errs = []
        if not (0.0 < self.cfl <= 0.9):
            errs.append(f"cfl must satisfy 0 < cfl <= 0.9, got {self.cfl}")
        if self.boundary not in ("sommerfeld", "none"):
            errs.append(f"boundary must be 'sommerfeld' or 'none', got {self.boundary!r}")
        if self.boundary == "none" and self.t_end > 0.9 * grid.r_max:
            errs.append(
                f"causality shield: t_end = {self.t_end} exceeds 0.9*r_max = "
                f"{0.9 * grid.r_max} with boundary = none")
        if self.t_end <= 0.0:
            errs.append(f"t_end must be positive, got {self.t_end}")
        if self.monitor_stride < 1:
            errs.append("monitor_stride must be >= 1")
        return errs


@dataclass
class ObservationPlan:
    """What evolve() records along the way."""

    ray_qs: tuple = ()            # retarded coordinates of sampled rays
    stencil_spacing_cells: int = 2
    stencil_half: int = 2         # 2 -> 5-point radial stencil per ray
    snapshot_every: int = 1       # snapshots every this many monitor events
    snapshot_subsample: int = 4   # keep every k-th node in snapshots
    slice_times: tuple = ()       # full-resolution FieldState copies
    ray_domain_frac: float = 0.95


@dataclass
class MonitorLog:
    t: list = field(default_factory=list)
    lorenz_residual_sup: list = field(default_factory=list)
    charge_Q: list = field(default_factory=list)
    energy_E: list = field(default_factory=list)
    frame_identity_residual_sup: dict = field(default_factory=dict)  # t -> value

    def append(self, t, lorenz, q, e):
        if self.t and t <= self.t[-1]:
            raise ValueError("monitor timestamps must be strictly increasing")
        self.t.append(t)
        self.lorenz_residual_sup.append(lorenz)
        self.charge_Q.append(q)
        self.energy_E.append(e)


@dataclass
class RayHistory:
    """Time-resolved samples on a small radial stencil around r = t + q."""

    q: float
    offsets: np.ndarray           # stencil offsets around the ray radius
    times: list = field(default_factory=list)
    r0: list = field(default_factory=list)
    a0: list = field(default_factory=list)     # each entry: array over stencil
    ar: list = field(default_factory=list)
    phi: list = field(default_factory=list)
    j0: list = field(default_factory=list)
    jr: list = field(default_factory=list)

    def as_arrays(self):
        return (np.array(self.times), np.array(self.r0), np.array(self.a0),
                np.array(self.ar), np.array(self.phi), np.array(self.j0),
                np.array(self.jr))

    @property
    def center(self) -> int:
        return len(self.offsets) // 2


@dataclass
class Snapshot:
    t: float
    r: np.ndarray
    phi: np.ndarray
    a0: np.ndarray
    ar: np.ndarray
    j0: np.ndarray


@dataclass
class EvolveResult:
    final: FieldState
    log: MonitorLog
    rays: dict
    snapshots: list
    slices: dict


# ---------------------------------------------------------------------------
# right-hand side and stepper

def rhs(state: FieldState, grid: RadialGrid, boundary: str = "sommerfeld",
        linear: bool = False):
    """Time derivative of every evolved field (NaN-guarded)."""
    out = _rhs_arrays(state.phi, state.phi_t, state.a0, state.a0_t,
                      state.ar, state.ar_t, grid, boundary, linear)
    if not np.all(np.isfinite(out[1])):
        bad = int(np.argmax(~np.isfinite(out[1])))
        raise EvolutionUnstable(f"non-finite RHS at t={state.t}, node {bad}")
    return FieldState(state.t, out[0], out[1], out[2], out[3], out[4], out[5])


def _rhs_arrays(phi, phi_t, a0, a0_t, ar, ar_t, grid, boundary, linear=False):
    phi_tt = laplacian_even(phi, grid)
    if linear:
        j0 = jr = 0.0
    else:
        drphi = d_r(phi, grid, EVEN)
        absphi2 = phi.real * phi.real + phi.imag * phi.imag
        j0 = -(np.conj(phi) * phi_t).imag - a0 * absphi2
        jr = -(np.conj(phi) * drphi).imag - ar * absphi2
        phi_tt += 2j * (ar * drphi - a0 * phi_t)
        phi_tt += (a0 * a0 - ar * ar) * phi
    a0_tt = laplacian_even(a0, grid) + j0
    ar_tt = laplacian_radial_vector(ar, grid) + jr
    ar_tt[0] = 0.0

    if boundary == "sommerfeld":
        h, rmax = grid.h, grid.r_max
        for u_t, u_tt in ((phi_t, phi_tt), (a0_t, a0_tt), (ar_t, ar_tt)):
            u_tt[-1] = -(3.0 * u_t[-1] - 4.0 * u_t[-2] + u_t[-3]) / (2.0 * h) \
                - u_t[-1] / rmax
    else:  # frozen outer node; the causality shield keeps it irrelevant
        phi_tt[-1] = 0.0
        a0_tt[-1] = 0.0
        ar_tt[-1] = 0.0
    return phi_t, phi_tt, a0_t, a0_tt, ar_t, ar_tt


def step(state: FieldState, grid: RadialGrid, scheme: SchemeParams,
         dt: float | None = None) -> FieldState:
    """One classical RK4 step; parity is re-pinned at r = 0 afterwards."""
    if dt is None:
        dt = scheme.cfl * grid.h
    y = (state.phi, state.phi_t, state.a0, state.a0_t, state.ar, state.ar_t)
    b, lin = scheme.boundary, scheme.linear

    k1 = _rhs_arrays(*y, grid, b, lin)
    k2 = _rhs_arrays(*(y[i] + 0.5 * dt * k1[i] for i in range(6)), grid, b, lin)
    k3 = _rhs_arrays(*(y[i] + 0.5 * dt * k2[i] for i in range(6)), grid, b, lin)
    k4 = _rhs_arrays(*(y[i] + dt * k3[i] for i in range(6)), grid, b, lin)
    new = [y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
           for i in range(6)]
    new[4][0] = 0.0
    new[5][0] = 0.0
    return FieldState(state.t + dt, new[0], new[1],
                      new[2].real if np.iscomplexobj(new[2]) else new[2],
                      new[3].real if np.iscomplexobj(new[3]) else new[3],
                      new[4], new[5])


# ---------------------------------------------------------------------------
# monitors

def lorenz_residual(state: FieldState, grid: RadialGrid) -> float:
    """sup | -d_t a0 + (1/r^2) d_r(r^2 ar) | over the grid."""
    res = -state.a0_t + divergence_radial(state.ar, grid)
    return float(np.max(np.abs(res)))


def charge_monitor(state: FieldState, grid: RadialGrid) -> float:
    j0, _ = current(state, grid)
    return 4.0 * np.pi * simpson_integral(j0 * grid.r ** 2, grid.h)


def energy_monitor(state: FieldState, grid: RadialGrid) -> float:
    """E = 4 pi int [ |D_t phi|^2 + |D_r phi|^2 + E_r^2 ] / 2 * r^2 dr."""
    dtphi = state.phi_t + 1j * state.a0 * state.phi
    drphi = d_r(state.phi, grid, EVEN) + 1j * state.ar * state.phi
    er = state.ar_t - d_r(state.a0, grid, EVEN)
    dens = 0.5 * (np.abs(dtphi) ** 2 + np.abs(drphi) ** 2 + er ** 2)
    return 4.0 * np.pi * simpson_integral(dens * grid.r ** 2, grid.h)


def frame_identity_residual(history: RayHistory, Q: ChargeValue,
                            chi: CutoffChi = CutoffChi()) -> tuple[float, np.ndarray, np.ndarray]:
    """Residual of L(r Lbar(r A_L)) + L(r A^1_Lbar) - r^2 J_L along the ray.

    Along a fixed ray, d/dt of a sampled series is exactly L applied to the
    field; radial derivatives come from the stencil.  Needs at least five
    sampled times (two L-differencings), otherwise raises.
    Returns (sup_residual, times_used, residual_series).
    """
    times, r0, a0, ar, phi, j0, jr = history.as_arrays()
    if len(times) < 5:
        raise ValueError(
            f"stencil starvation: {len(times)} ray samples, need >= 5")
    dt = np.diff(times)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * dt[0]:
        raise ValueError("frame identity needs uniformly spaced ray samples")
    dm = dt[0]
    c = history.center
    dlt = history.offsets[1] - history.offsets[0]
    rmat = r0[:, None] + history.offsets[None, :]

    def ddr(fmat):
        return (fmat[:, c + 1] - fmat[:, c - 1]) / (2.0 * dlt)

    def along(series):
        out = np.empty_like(series)
        out[1:-1] = (series[2:] - series[:-2]) / (2.0 * dm)
        out[0] = out[-1] = np.nan
        return out

    rA_L = rmat * (a0 + ar)
    u = along(rA_L[:, c]) - 2.0 * ddr(rA_L)          # Lbar(r A_L)
    a1_lbar = (a0[:, c] - chi(rmat[:, c] - times) * Q.Q / (4.0 * np.pi * rmat[:, c])
               - ar[:, c])
    y = r0 * u + rmat[:, c] * a1_lbar
    resid = along(y) - rmat[:, c] ** 2 * (j0[:, c] + jr[:, c])
    ok = np.isfinite(resid)
    return float(np.max(np.abs(resid[ok]))), times[ok], resid[ok]


# ---------------------------------------------------------------------------
# the driver

def evolve(initial: FieldState, grid: RadialGrid, scheme: SchemeParams,
           plan: ObservationPlan | None = None,
           guard_factor: float = 1e6) -> EvolveResult:
    """Run RK4 to t_end, recording monitors, ray samples, and snapshots.

    The instability guard aborts when the sup norm of any field exceeds
    guard_factor times its initial scale (plus 1 to tolerate zero data).
    """
    plan = plan or ObservationPlan()
    # the cfl <= 0.9 invariant is enforced at config level; runs driven
    # programmatically with larger cfl are caught by the instability guard
    errs = [e for e in scheme.validate(grid) if "cfl" not in e]
    if errs:
        raise ValueError("; ".join(errs))
    if scheme.cfl <= 0.0:
        raise ValueError(f"cfl must be positive, got {scheme.cfl}")
    dt = scheme.cfl * grid.h
    n_steps = int(round(scheme.t_end / dt))
    state = initial.copy()
    log = MonitorLog()
    dlt = plan.stencil_spacing_cells * grid.h
    offsets = dlt * np.arange(-plan.stencil_half, plan.stencil_half + 1)
    rays = {q: RayHistory(q=q, offsets=offsets) for q in plan.ray_qs}
    snapshots: list[Snapshot] = []
    slices: dict[float, FieldState] = {}
    slice_times = sorted(plan.slice_times)
    guard0 = max(np.max(np.abs(initial.phi)), np.max(np.abs(initial.a0)),
                 np.max(np.abs(initial.ar)), 1e-30)
    monitor_count = 0

    def observe():
        nonlocal monitor_count
        sup = max(np.max(np.abs(state.phi)), np.max(np.abs(state.a0)),
                  np.max(np.abs(state.ar)))
        if not np.isfinite(sup) or sup > guard_factor * (guard0 + 1.0):
            raise EvolutionUnstable(
                f"instability detected at t={state.t:.6g}: sup={sup:.3e}, "
                f"initial scale {guard0:.3e}")
        log.append(state.t, lorenz_residual(state, grid),
                   charge_monitor(state, grid), energy_monitor(state, grid))
        j0 = jr = None
        for q, hist in rays.items():
            x = state.t + q
            pts = x + offsets
            if pts[0] <= 2.0 * dlt or pts[-1] >= plan.ray_domain_frac * grid.r_max:
                continue
            if j0 is None:
                j0, jr = current(state, grid)
            hist.times.append(state.t)
            hist.r0.append(x)
            hist.a0.append(interp_values(state.a0, grid, pts))
            hist.ar.append(interp_values(state.ar, grid, pts))
            hist.phi.append(interp_values(state.phi, grid, pts))
            hist.j0.append(interp_values(j0, grid, pts))
            hist.jr.append(interp_values(jr, grid, pts))
        if monitor_count % plan.snapshot_every == 0:
            k = plan.snapshot_subsample
            if j0 is None:
                j0, _ = current(state, grid)
            snapshots.append(Snapshot(
                t=state.t, r=grid.r[::k].copy(), phi=state.phi[::k].copy(),
                a0=state.a0[::k].copy(), ar=state.ar[::k].copy(),
                j0=j0[::k].copy()))
        monitor_count += 1

    next_slice = 0
    for k_step in range(n_steps):
        if k_step % scheme.monitor_stride == 0:
            observe()
        while next_slice < len(slice_times) and \
                state.t >= slice_times[next_slice] - 0.5 * dt:
            slices[slice_times[next_slice]] = state.copy()
            next_slice += 1
        state = step(state, grid, scheme, dt)
    observe()
    while next_slice < len(slice_times) and \
            state.t >= slice_times[next_slice] - 0.5 * dt:
        slices[slice_times[next_slice]] = state.copy()
        next_slice += 1
    return EvolveResult(final=state, log=log, rays=rays, snapshots=snapshots,
                        slices=slices)


# ---------------------------------------------------------------------------
# checkpoint io

_MAGIC = b"MKGS"
_VERSION = 1


def save_checkpoint(state: FieldState, grid: RadialGrid, path,
                    meta: dict | None = None) -> None:
    """Binary snapshot: header (version, n_cells, h, t) + 6 double arrays.

    Complex fields are stored as interleaved (re, im) doubles.  A JSON
    sidecar <path>.json carries caller metadata such as the config hash.
    """
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<IQdd", _VERSION, grid.n_cells, grid.h, state.t))
        for arr in (state.phi, state.phi_t):
            f.write(np.ascontiguousarray(arr, dtype=np.complex128).tobytes())
        for arr in (state.a0, state.a0_t, state.ar, state.ar_t):
            f.write(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    with open(str(path) + ".json", "w") as f:
        json.dump(meta or {}, f, indent=1, sort_keys=True)


def load_checkpoint(path) -> tuple[FieldState, RadialGrid, dict]:
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, n_cells, h, t = struct.unpack("<IQdd", f.read(28))
        if version != _VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        n = n_cells + 1
        phi = np.frombuffer(f.read(16 * n), dtype=np.complex128).copy()
        phi_t = np.frombuffer(f.read(16 * n), dtype=np.complex128).copy()
        a0 = np.frombuffer(f.read(8 * n), dtype=np.float64).copy()
        a0_t = np.frombuffer(f.read(8 * n), dtype=np.float64).copy()
        ar = np.frombuffer(f.read(8 * n), dtype=np.float64).copy()
        ar_t = np.frombuffer(f.read(8 * n), dtype=np.float64).copy()
    try:
        with open(str(path) + ".json") as f:
            meta = json.load(f)
    except FileNotFoundError:
        meta = {}
    grid = RadialGrid(r_max=n_cells * h, n_cells=n_cells)
    return FieldState(t, phi, phi_t, a0, a0_t, ar, ar_t), grid, meta
