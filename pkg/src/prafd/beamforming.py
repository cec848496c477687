"""Closed-form beamformer and power blocks of the alternating optimizer.

With the FP auxiliaries frozen, the surrogate separates into a transmit
quadratic program with one sum-power constraint (solved by KKT + bisection
on the multiplier), an unconstrained receive quadratic program (plain
linear solve), and per-user scalar uplink power problems.
"""

from __future__ import annotations

import numpy as np

from .channel import Channels
from .config import ScenarioConfig
from .fp import SolverState, _inner_products

BISECT_TOL = 1e-13
BISECT_MAX_ITER = 200


def _split_aux(state: SolverState, cfg: ScenarioConfig):
    kd = cfg.K_D
    amp = np.sqrt(cfg.weights * (1.0 + state.gamma))
    return state.y[:kd], state.y[kd:], amp[:kd], amp[kd:]


def transmit_subproblem_matrices(state: SolverState, ch: Channels,
                                 cfg: ScenarioConfig):
    """Quadratic form H_t and linear term Hbar_D of the transmit block."""
    y_dl, y_ul, amp_dl, _ = _split_aux(state, cfg)
    B = (state.W_r * np.abs(y_ul) ** 2) @ state.W_r.conj().T
    H_t = (ch.H_D * np.abs(y_dl) ** 2) @ ch.H_D.conj().T \
        + ch.H_SI.conj().T @ B @ ch.H_SI
    Hbar = ch.H_D * (y_dl * amp_dl)
    return H_t, Hbar


def solve_transmit_qp(H_t: np.ndarray, Hbar: np.ndarray, p_max: float):
    """Maximize 2Re tr(Hbar^H W) - tr(W^H H_t W) s.t. tr(W W^H) <= p_max.

    Returns (W, mu, iterations).  Solved through the eigendecomposition of
    H_t: with H_t = V diag(lam) V^H and R = V^H Hbar, the transmit power of
    the stationary point at multiplier mu is sum_i ||R[i]||^2 / (lam_i+mu)^2,
    decreasing in mu, so the binding multiplier is found by bisection.
    Eigenvalues are clipped at zero and null modes with zero numerator are
    dropped, which is the pseudo-inverse solution when H_t is singular.
    """
    lam, V = np.linalg.eigh(H_t)
    lam = np.clip(lam, 0.0, None)
    R = V.conj().T @ Hbar
    num = (np.abs(R) ** 2).sum(axis=1)
    active = num > 0.0

    def power(mu: float) -> float:
        den = (lam[active] + mu) ** 2
        if np.any(den == 0.0):
            return np.inf
        return float((num[active] / den).sum())

    def build(mu: float) -> np.ndarray:
        scale = np.zeros_like(lam)
        scale[active] = 1.0 / (lam[active] + mu)
        return V @ (R * scale[:, None])

    if power(0.0) <= p_max:
        return build(0.0), 0.0, 0

    lo, hi = 0.0, float(np.sqrt(num.sum() / p_max))
    mu = hi
    for it in range(1, BISECT_MAX_ITER + 1):
        mu = 0.5 * (lo + hi)
        pw = power(mu)
        if abs(pw - p_max) / p_max < BISECT_TOL or hi - lo < 1e-16 * hi:
            break
        if pw > p_max:
            lo = mu
        else:
            hi = mu
    return build(mu), mu, it


def update_transmit_beamformer(state: SolverState, ch: Channels,
                               cfg: ScenarioConfig) -> np.ndarray:
    H_t, Hbar = transmit_subproblem_matrices(state, ch, cfg)
    W, _, _ = solve_transmit_qp(H_t, Hbar, cfg.p_D_max)
    return W


def receive_subproblem_matrices(state: SolverState, ch: Channels,
                                cfg: ScenarioConfig):
    """Quadratic form H_r and linear term Hbar_U of the receive block."""
    _, _, _, amp_ul = _split_aux(state, cfg)
    H_r = (ch.H_U * state.p) @ ch.H_U.conj().T \
        + ch.H_SI @ state.W_t @ state.W_t.conj().T @ ch.H_SI.conj().T \
        + cfg.sigma2 * np.eye(ch.H_U.shape[0])
    Hbar = ch.H_U * (amp_ul * np.sqrt(state.p))
    return H_r, Hbar


def update_receive_beamformer(state: SolverState, ch: Channels,
                              cfg: ScenarioConfig) -> np.ndarray:
    """Unconstrained receive block: W_r = H_r^{-1} Hbar_U Y_U^{-H}.

    Columns whose y auxiliary is zero have a flat subproblem and keep their
    previous value.
    """
    if cfg.K_U == 0:
        return state.W_r.copy()
    H_r, Hbar = receive_subproblem_matrices(state, ch, cfg)
    y_ul = state.y[cfg.K_D:]
    W = state.W_r.copy()
    live = y_ul != 0.0
    if np.any(live):
        sol = np.linalg.solve(H_r, Hbar[:, live])
        W[:, live] = sol / y_ul[live].conj()
    return W


def receive_objective_value(H_r: np.ndarray, Hbar: np.ndarray) -> float:
    """Optimal value tr(Hbar^H H_r^{-1} Hbar) of the receive block."""
    return float(np.real(np.trace(Hbar.conj().T @ np.linalg.solve(H_r, Hbar))))


def normalize_receive_columns(W_r: np.ndarray) -> np.ndarray:
    """Scale each receive beamformer to unit norm (rates are unaffected)."""
    norms = np.linalg.norm(W_r, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("zero receive beamformer column")
    return W_r / norms


def uplink_power_coefficients(state: SolverState, ch: Channels,
                              cfg: ScenarioConfig):
    """Per-user coefficients of the scalar power objective c1*sqrt(p) - c2*p.

    c1 collects the user's own matched-filter reward; c2 collects the damage
    its power does through every receive beamformer and every downlink user.
    """
    y_dl, y_ul, _, amp_ul = _split_aux(state, cfg)
    _, G, _ = _inner_products(state.W_t, state.W_r, ch)
    c1 = 2.0 * amp_ul * np.real(y_ul * np.diag(G))
    c2 = (np.abs(y_dl) ** 2) @ (np.abs(ch.H_IUI) ** 2) \
        + (np.abs(y_ul) ** 2) @ (np.abs(G) ** 2)
    return c1, c2


def optimal_scalar_power(c1: float, c2: float, p_max: float) -> float:
    """Maximizer of c1*sqrt(p) - c2*p on [0, p_max] (c2 >= 0)."""
    if c1 <= 0.0:
        return 0.0
    if c2 <= 0.0:
        return p_max
    return min(p_max, (c1 / (2.0 * c2)) ** 2)


def update_uplink_power(state: SolverState, ch: Channels,
                        cfg: ScenarioConfig) -> np.ndarray:
    """Exact maximizer of each scalar power problem on [0, p_U_max]."""
    c1, c2 = uplink_power_coefficients(state, ch, cfg)
    return np.array([optimal_scalar_power(c1[u], c2[u], cfg.p_U_max)
                     for u in range(cfg.K_U)])
