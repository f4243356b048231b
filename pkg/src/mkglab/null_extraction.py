"""Radiation extraction along outgoing null rays r = t + q.

The scalar radiation field carries a charge-driven logarithmic phase:

    Phi_0(q) = lim_{t->inf} ( r e^{i (Q/4pi) ln(1+r)} phi )(t, t+q),

while r A_L -> Q/(4 pi) and the bad component needs a log subtraction,

    A_Lbar^mod(t, r) = A_Lbar - (1/2r) int_{r-t}^inf J_Lbar(eta)
                        ln((eta + t + r)/(eta + t - r)) deta,

with the asymptotic source J_Lbar(q) = -2 Im(Phi_0 conj d_q Phi_0).
Limits are estimated by the last sampled value with Cauchy-increment error
bars; no extrapolation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import jbracket, s0_weight
from .data_builder import ChargeValue
from .grid import RadialGrid, interp_values
from .quadrature import integrate_log_kernel


@dataclass
class RaySample:
    """Samples of one outgoing ray at a fixed retarded coordinate q = r - t."""

    q: float
    t: np.ndarray
    r: np.ndarray
    A_L: np.ndarray
    A_Lbar: np.ndarray
    phi: np.ndarray       # complex
    rphi: np.ndarray      # complex
    interp_err: float = 0.0

    def __post_init__(self):
        drift = np.max(np.abs((self.r - self.t) - self.q)) if len(self.t) else 0.0
        if drift > 1e-9:
            raise ValueError(f"ray samples drift off q={self.q}: max |r-t-q| = {drift}")


@dataclass
class LimitEstimate:
    value: complex
    err_est: float
    converged: bool
    increments: np.ndarray
    diagnostic: str = ""


@dataclass
class RadiationTable:
    """Sampled radiation data on a uniform q grid."""

    q: np.ndarray
    Phi0: np.ndarray
    dPhi0_dq: np.ndarray
    J_Lbar: np.ndarray
    A_L_limit: float
    A_L_err: float
    A_Lbar_mod: np.ndarray
    Phi0_err: np.ndarray
    meta: dict = field(default_factory=dict)

    def check_identity(self) -> float:
        """max |J_Lbar + 2 Im(Phi0 conj dPhi0)| (definitional, ~0)."""
        return float(np.max(np.abs(
            self.J_Lbar + 2.0 * np.imag(self.Phi0 * np.conj(self.dPhi0_dq)))))

    def j_scalar(self) -> np.ndarray:
        """j(q) = Im(Phi0 conj d_q Phi0) = -J_Lbar / 2."""
        return -0.5 * self.J_Lbar


def sample_ray(slices: dict, grid: RadialGrid, q: float,
               domain_frac: float = 0.95) -> RaySample:
    """Build a RaySample from stored full-resolution time slices.

    slices: mapping {label: FieldState}; every slice is interpolated at
    r = t + q (cubic, O(h^4)).  Rays that exit the safe domain are
    truncated.
    """
    ts, rs, als, albs, phis = [], [], [], [], []
    for st in sorted(slices.values(), key=lambda s: s.t):
        x = st.t + q
        if x <= 4.0 * grid.h or x >= domain_frac * grid.r_max:
            continue
        a0 = float(interp_values(st.a0, grid, x)[0])
        ar = float(interp_values(st.ar, grid, x)[0])
        ph = complex(interp_values(st.phi, grid, x)[0])
        ts.append(st.t)
        rs.append(x)
        als.append(a0 + ar)
        albs.append(a0 - ar)
        phis.append(ph)
    ts = np.array(ts)
    rs = np.array(rs)
    phis = np.array(phis)
    return RaySample(q=q, t=ts, r=rs, A_L=np.array(als), A_Lbar=np.array(albs),
                     phi=phis, rphi=rs * phis,
                     interp_err=grid.h ** 4)


def charge_phase(Q: float, r):
    """The corrective phase e^{i (Q/4pi) ln(1+r)}."""
    return np.exp(1j * (Q / (4.0 * np.pi)) * np.log1p(np.asarray(r, dtype=float)))


def _limit_from_sequence(values: np.ndarray, rate_hint=None) -> LimitEstimate:
    """Last-value limit with Cauchy increments as the error estimate."""
    values = np.asarray(values)
    if len(values) < 3:
        raise ValueError("limit estimation needs at least 3 samples")
    inc = np.abs(np.diff(values))
    err = float(inc[-1])
    converged = bool(inc[-1] <= inc[0] + 1e-300) and not np.any(np.isnan(inc))
    diag = ""
    if inc[-1] > inc[0]:
        diag = ("no-limit: Cauchy increments increase "
                f"({inc[0]:.3e} -> {inc[-1]:.3e})")
    return LimitEstimate(value=complex(values[-1]), err_est=err,
                         converged=converged, increments=inc, diagnostic=diag)


def extract_phi0(ray: RaySample, Q: ChargeValue) -> LimitEstimate:
    """Phase-corrected scalar radiation value along the ray.

    The expected Cauchy rate is <t+r>^(1/2 - (s+gamma)); the increments are
    returned so callers can test it.  A non-decreasing increment sequence
    is flagged in the diagnostic, never silently dropped.
    """
    if len(ray.t) < 3:
        raise ValueError("extract_phi0 needs >= 3 ray samples")
    corrected = ray.rphi * charge_phase(Q.Q, ray.r)
    return _limit_from_sequence(corrected)


def extract_AL_limit(ray: RaySample, Q: ChargeValue) -> LimitEstimate:
    """Limit of r A_L along the ray; Theorem target is Q/(4 pi)."""
    est = _limit_from_sequence(ray.r * ray.A_L)
    est.value = complex(est.value).real
    return est


def phase_slope_fit(ray_r: np.ndarray, rphi: np.ndarray,
                    min_amplitude: float = 0.0) -> tuple[float, float]:
    """Least-squares slope of unwrapped arg(r phi) against ln(1+r).

    Returns (slope, r2).  The slope estimates -Q/(4 pi).  Raises when the
    amplitude pre-condition fails or the phase is undersampled (a jump of
    more than pi between consecutive samples).
    """
    rphi = np.asarray(rphi)
    amp = np.abs(rphi)
    if np.any(amp <= min_amplitude) or np.any(amp == 0.0):
        raise ValueError("phase_slope_fit: |r phi| not bounded away from 0 "
                         "on the fit window")
    raw = np.angle(rphi)
    jumps = np.abs(np.diff(raw))
    jumps = np.minimum(jumps, 2.0 * np.pi - jumps)
    # wrapped jumps close to pi cannot be distinguished from aliased ones
    if np.any(jumps > 0.9 * np.pi):
        raise ValueError("phase_slope_fit: undersampled phase (jump > pi)")
    theta = np.unwrap(raw)
    x = np.log1p(np.asarray(ray_r, dtype=float))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, _, _, _ = np.linalg.lstsq(A, theta, rcond=None)
    fit = A @ coef
    ss_res = float(np.sum((theta - fit) ** 2))
    ss_tot = float(np.sum((theta - np.mean(theta)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(coef[0]), r2


def compute_J_asym(q_grid: np.ndarray, Phi0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """J_Lbar(q) = -2 Im(Phi0 conj d_q Phi0) with centered differencing.

    Returns (J_Lbar, dPhi0_dq); endpoints use one-sided differences.
    """
    dq = q_grid[1] - q_grid[0]
    d = np.empty_like(Phi0)
    d[1:-1] = (Phi0[2:] - Phi0[:-2]) / (2.0 * dq)
    d[0] = (Phi0[1] - Phi0[0]) / dq
    d[-1] = (Phi0[-1] - Phi0[-2]) / dq
    jlbar = -2.0 * np.imag(Phi0 * np.conj(d))
    return jlbar, d


def mod_ALbar(A_Lbar_value: float, j_of_q, q_max: float, t: float, r: float,
              q_min: float | None = None, abs_tol: float = 1e-8) -> float:
    """A_Lbar minus the log-kernel correction.

    A^mod = A_Lbar - (1/2r) int_{r-t}^{q_max} J_Lbar(eta)
            ln((eta+t+r)/(eta+t-r)) deta,
    with J_Lbar = -2 j; the tail beyond q_max is treated as zero.  j_of_q
    is a callable (use a table interpolant for pipeline sources).  The
    integrable log singularity at eta = r - t is handled by the dedicated
    kernel quadrature.
    """
    q_lo = r - t
    if q_min is not None and q_lo < q_min - 1e-12:
        raise ValueError(
            f"source table does not cover the ray: needs q >= {q_lo}, "
            f"table starts at {q_min}")
    integral = integrate_log_kernel(lambda e: -2.0 * j_of_q(e), q_lo, q_max,
                                    t, r, abs_tol=abs_tol)
    return float(A_Lbar_value - integral / (2.0 * r))


def table_interpolant(q_grid: np.ndarray, values: np.ndarray):
    """Linear interpolant of a tabulated source, zero outside the table."""
    def f(x):
        return np.interp(x, q_grid, values, left=0.0, right=0.0)
    return f


def build_radiation_table(slices: dict, grid: RadialGrid, Q: ChargeValue,
                          q_grid: np.ndarray, domain_frac: float = 0.95,
                          ray_qs: tuple = ()) -> RadiationTable:
    """Assemble the radiation table from late-time slices.

    Phi0 per q comes from the latest slice containing r = t + q; the error
    estimate per q is the difference against the previous slice.  A_L's
    limit is extracted along the q = max(ray_qs, 0)-ish central ray.
    """
    states = sorted(slices.values(), key=lambda s: s.t)
    if len(states) < 2:
        raise ValueError("radiation table needs at least two time slices")
    last, prev = states[-1], states[-2]
    Phi0 = np.zeros(len(q_grid), dtype=complex)
    Phi0_err = np.zeros(len(q_grid))
    for i, q in enumerate(q_grid):
        vals = []
        for st in (prev, last):
            x = st.t + q
            if x <= 4.0 * grid.h or x >= domain_frac * grid.r_max:
                continue
            ph = complex(interp_values(st.phi, grid, x)[0])
            vals.append(x * ph * complex(charge_phase(Q.Q, x)))
        if vals:
            Phi0[i] = vals[-1]
            Phi0_err[i] = abs(vals[-1] - vals[0]) if len(vals) == 2 else np.inf
    jlbar, dPhi0 = compute_J_asym(q_grid, Phi0)
    # A_L limit along the central extraction ray
    q_al = 0.0 if not ray_qs else sorted(ray_qs, key=abs)[0]
    ral = []
    for st in states:
        x = st.t + q_al
        if 4.0 * grid.h < x < domain_frac * grid.r_max:
            a0 = float(interp_values(st.a0, grid, x)[0])
            ar = float(interp_values(st.ar, grid, x)[0])
            ral.append(x * (a0 + ar))
    if len(ral) >= 3:
        est = _limit_from_sequence(np.array(ral))
        al, alerr = est.value.real, est.err_est
    else:
        al, alerr = (ral[-1] if ral else 0.0), np.inf
    # modified A_Lbar at the last slice, on the q grid
    j_interp = table_interpolant(q_grid, -0.5 * jlbar)
    mod = np.zeros(len(q_grid))
    for i, q in enumerate(q_grid):
        x = last.t + q
        if x <= 4.0 * grid.h or x >= domain_frac * grid.r_max:
            continue
        a0 = float(interp_values(last.a0, grid, x)[0])
        ar = float(interp_values(last.ar, grid, x)[0])
        mod[i] = x * mod_ALbar(a0 - ar, j_interp, q_grid[-1], last.t, x,
                               q_min=q_grid[0])
    return RadiationTable(q=q_grid.copy(), Phi0=Phi0, dPhi0_dq=dPhi0,
                          J_Lbar=jlbar, A_L_limit=al, A_L_err=alerr,
                          A_Lbar_mod=mod, Phi0_err=Phi0_err,
                          meta={"t_last": last.t, "t_prev": prev.t})


# ---------------------------------------------------------------------------
# decay-envelope checks

@dataclass(frozen=True)
class EnvelopeSpec:
    """Weight <t+r>^a <t-r>^b <(r-t)_+>^c S0^d multiplying the envelope."""

    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    label: str = ""

    def __call__(self, t, r):
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        env = jbracket(t + r) ** self.a * jbracket(t - r) ** self.b \
            * jbracket(np.maximum(r - t, 0.0)) ** self.c
        if self.d != 0.0:
            env = env * np.asarray(s0_weight(t, r)) ** self.d
        return env


PHI_PEELING = EnvelopeSpec(a=-1.0, b=0.5, c=0.0, label="phi_peeling4")
J0_ENVELOPE = EnvelopeSpec(a=-2.0, b=0.0, c=0.0, label="J0_estimate")


def phi_peeling_spec(w) -> EnvelopeSpec:
    """|phi| envelope <t+r>^-1 <t-r>^(1/2-s) <(r-t)_+>^-gamma."""
    return EnvelopeSpec(a=-1.0, b=0.5 - w.s, c=-w.gamma, label="phi_peeling4")


def j0_envelope_spec(w) -> EnvelopeSpec:
    """|J_0| envelope <t+r>^-2 <t-r>^(-2s) <(r-t)_+>^(-2 gamma)."""
    return EnvelopeSpec(a=-2.0, b=-2.0 * w.s, c=-2.0 * w.gamma,
                        label="J0_estimate")


def envelope_check(snapshots, spec: EnvelopeSpec, quantity: str,
                   t_min: float = 1.0) -> tuple[float, tuple]:
    """sup of |quantity| / envelope over stored snapshots.

    quantity: attribute name on Snapshot objects ('phi', 'j0', 'a0', 'ar').
    Returns (sup_weighted, (t, r) argmax).  Snapshots earlier than t_min
    are skipped (degenerate weights at t = 0).
    """
    sup, arg = 0.0, (np.nan, np.nan)
    for snap in snapshots:
        if snap.t < t_min:
            continue
        vals = np.abs(getattr(snap, quantity))
        env = spec(snap.t, snap.r)
        ratio = vals / env
        i = int(np.argmax(ratio))
        if ratio[i] > sup:
            sup, arg = float(ratio[i]), (snap.t, float(snap.r[i]))
    return sup, arg
