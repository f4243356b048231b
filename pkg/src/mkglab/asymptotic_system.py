"""Integrator for the (q, s) asymptotic system and the weak-null certificate.

State: P(q) = d_q Phi and B_mu(q) = d_q A_mu on a uniform q grid, evolved in
the slow time s = ln r:

    d_s P    = -i A_L_param * P,
    d_s B_mu = (L_mu(omega)/2) * Im(Phi conj P),

with the good-component coefficient A_L_param held constant (its dynamical
value is Q/4pi).  Phi is reconstructed by integrating P downward from
q_max where Phi vanishes.  The decoupled system has closed-form solutions:
P rotates by the unit phase e^{-i A_L (s - s0)} (so |P| is exactly
preserved), Phi factorizes the same way, and the frame components of B
grow linearly in s with s-independent rates.  These exact features are
what the weak-null certificate measures.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


def null_vector_lower(omega: np.ndarray) -> np.ndarray:
    """L_mu(omega) = (-1, omega): the lowered null generator."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (3,):
        raise ValueError("omega must be a 3-vector")
    n = np.linalg.norm(omega)
    if abs(n - 1.0) > 1e-12:
        raise ValueError(f"omega must be a unit vector, |omega| = {n}")
    return np.array([-1.0, omega[0], omega[1], omega[2]])


def contract_L(components: np.ndarray, omega: np.ndarray):
    """A_L = A_0 + omega . A  (raised L against lowered components)."""
    return components[0] + omega @ components[1:]


def contract_Lbar(components: np.ndarray, omega: np.ndarray):
    """A_Lbar = A_0 - omega . A."""
    return components[0] - omega @ components[1:]


@dataclass
class AsymState:
    s: float
    q_grid: np.ndarray
    P: np.ndarray                 # complex, d_q Phi per q
    B: np.ndarray                 # real, shape (4, nq): d_q A_mu per q
    A_L_param: float
    omega: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        null_vector_lower(self.omega)  # validates unit omega

    @staticmethod
    def from_phi0(q_grid: np.ndarray, phi0: np.ndarray, A_L_param: float,
                  omega=(0.0, 0.0, 1.0)) -> "AsymState":
        """Initial state at s = 0 from a radiation profile Phi(q, s=0)."""
        dq = q_grid[1] - q_grid[0]
        P = np.gradient(np.asarray(phi0, dtype=complex), dq)
        return AsymState(s=0.0, q_grid=np.asarray(q_grid, dtype=float), P=P,
                         B=np.zeros((4, len(q_grid))), A_L_param=A_L_param,
                         omega=np.asarray(omega, dtype=float))

    def phi(self) -> np.ndarray:
        """Phi(q) = -int_q^{q_max} P, anchored at Phi(q_max) = 0."""
        return _phi_from_P(self.P, self.q_grid)

    def A_frame(self) -> dict:
        """Frame components of A_mu(q) = -int_q^{q_max} B_mu."""
        a = np.stack([_cum_from_top(self.B[m], self.q_grid) for m in range(4)])
        return {
            "A_L": contract_L(a, self.omega),
            "A_Lbar": contract_Lbar(a, self.omega),
            "components": a,
        }

    def B_L(self):
        return contract_L(self.B, self.omega)

    def B_Lbar(self):
        return contract_Lbar(self.B, self.omega)


def _cum_from_top(f: np.ndarray, q: np.ndarray) -> np.ndarray:
    """g(q) = -int_q^{q_max} f dq' by the trapezoid rule, g(q_max) = 0."""
    dq = q[1] - q[0]
    incr = 0.5 * dq * (f[1:] + f[:-1])
    out = np.empty_like(f)
    out[-1] = 0.0
    out[:-1] = -np.cumsum(incr[::-1])[::-1]
    return out


def _phi_from_P(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    return _cum_from_top(P, q)


def _rhs(P: np.ndarray, B: np.ndarray, q: np.ndarray, a_l: float,
         L_mu: np.ndarray, source_mode: str = "standard"):
    phi = _phi_from_P(P, q)
    if source_mode == "standard":
        dP = -1j * a_l * P
    elif source_mode == "non_null_control":
        # negative control, not the physical system: phase speed |P|
        dP = -1j * np.abs(P) * P
    else:
        raise ValueError(f"unknown source mode {source_mode!r}")
    drive = np.imag(phi * np.conj(P))
    dB = 0.5 * L_mu[:, None] * drive[None, :]
    return dP, dB


def integrate(state: AsymState, s_target: float, ds: float,
              source_mode: str = "standard",
              record_every: int | None = None) -> tuple[AsymState, list]:
    """RK4 march of the asymptotic system from state.s to s_target.

    Returns the final state and, when record_every is set, a history of
    intermediate states (including the initial and final ones).
    """
    if ds <= 0.0:
        raise ValueError("ds must be positive")
    n = int(round((s_target - state.s) / ds))
    if n < 0:
        raise ValueError("s_target must be >= state.s")
    L_mu = null_vector_lower(state.omega)
    P = state.P.copy()
    B = state.B.copy()
    q = state.q_grid
    a_l = state.A_L_param
    history = []

    def snap(s):
        history.append(replace(state, s=s, P=P.copy(), B=B.copy()))

    if record_every:
        snap(state.s)
    s = state.s
    for k in range(n):
        k1P, k1B = _rhs(P, B, q, a_l, L_mu, source_mode)
        k2P, k2B = _rhs(P + 0.5 * ds * k1P, B + 0.5 * ds * k1B, q, a_l, L_mu, source_mode)
        k3P, k3B = _rhs(P + 0.5 * ds * k2P, B + 0.5 * ds * k2B, q, a_l, L_mu, source_mode)
        k4P, k4B = _rhs(P + ds * k3P, B + ds * k3B, q, a_l, L_mu, source_mode)
        P = P + ds / 6.0 * (k1P + 2.0 * k2P + 2.0 * k3P + k4P)
        B = B + ds / 6.0 * (k1B + 2.0 * k2B + 2.0 * k3B + k4B)
        s = state.s + (k + 1) * ds
        if record_every and ((k + 1) % record_every == 0 or k == n - 1):
            snap(s)
    final = replace(state, s=s, P=P, B=B)
    return final, history


def Albar_profile(states: list) -> dict:
    """Per-q linear regression of A_Lbar(q, s) against s.

    Returns slopes, intercepts, the max regression residual, and the
    predicted slope int_q^inf Im(Phi conj P) dq' evaluated from the first
    recorded state.
    """
    if len(states) < 3:
        raise ValueError("Albar_profile needs at least 3 recorded states")
    s_vals = np.array([st.s for st in states])
    albar = np.stack([st.A_frame()["A_Lbar"] for st in states])  # (ns, nq)
    A = np.vstack([s_vals, np.ones_like(s_vals)]).T
    coef, _, _, _ = np.linalg.lstsq(A, albar, rcond=None)
    slopes, intercepts = coef[0], coef[1]
    resid = float(np.max(np.abs(albar - A @ coef)))
    st0 = states[0]
    j = np.imag(st0.phi() * np.conj(st0.P))
    predicted = -_cum_from_top(j, st0.q_grid)  # int_q^{q_max} j dq'
    return {"s": s_vals, "slopes": slopes, "intercepts": intercepts,
            "max_residual": resid, "predicted_slopes": predicted}


def weak_null_certificate(states: list, ds: float,
                          modulus_tol: float = 1e-10,
                          affine_tol: float = 1e-6) -> dict:
    """Certify the weak-null behaviour over a recorded s history.

    Checks: (1) sup_q |P| drifts from its initial value by less than
    modulus_tol (exact invariant of the analytic flow, so drift is pure
    integrator error); (2) sup_q |A_Lbar| fits an affine function of s
    with residual below affine_tol; (3) the good components B_L (and the
    tangential ones, identically zero here) are s-independent; (4) no
    blow-up: sup |P| stays bounded by twice its initial value.
    """
    if len(states) < 3:
        raise ValueError("certificate needs at least 3 recorded states")
    s_vals = np.array([st.s for st in states])
    p_sup = np.array([np.max(np.abs(st.P)) for st in states])
    mod_drift = float(np.max(np.abs(np.abs(states[-1].P) - np.abs(states[0].P))))
    blow_up = bool(np.any(p_sup > 2.0 * max(p_sup[0], 1e-300)) or
                   not np.all(np.isfinite(p_sup)))
    alb_sup = np.array([np.max(np.abs(st.A_frame()["A_Lbar"])) for st in states])
    A = np.vstack([s_vals, np.ones_like(s_vals)]).T
    coef, _, _, _ = np.linalg.lstsq(A, alb_sup, rcond=None)
    affine_resid = float(np.max(np.abs(alb_sup - A @ coef)))
    bl = np.stack([st.B_L() for st in states])
    bl_drift = float(np.max(np.abs(bl - bl[0])))
    passed = (mod_drift < modulus_tol and affine_resid < affine_tol
              and not blow_up)
    return {
        "passed": bool(passed),
        "modulus_drift": mod_drift,
        "albar_affine_residual": affine_resid,
        "albar_slope": float(coef[0]),
        "B_L_drift": bl_drift,
        "blow_up": blow_up,
        "s_range": (float(s_vals[0]), float(s_vals[-1])),
        "ds": ds,
    }


def phase_factorization_error(state0: AsymState, state1: AsymState) -> float:
    """sup_q | Phi(s1) - e^{-i A_L (s1-s0)} Phi(s0) |, the RK4 error gauge."""
    rot = np.exp(-1j * state0.A_L_param * (state1.s - state0.s))
    return float(np.max(np.abs(state1.phi() - rot * state0.phi())))
