"""Weighted sum-rate objective and its fractional-programming surrogates.

The nonconvex weighted sum-rate is handled with two classic moves: a
Lagrangian dual transform introducing per-user auxiliaries gamma, then a
quadratic transform introducing complex auxiliaries y.  With (gamma, y)
jointly refreshed from the current transceiver state the surrogate touches
the true rate exactly; each block update afterwards can only push it up.

Rates are in bits (log2).  The surrogates are computed in nats and scaled
by 1/ln 2, which leaves every closed-form maximizer unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Channels
from .config import ScenarioConfig

LN2 = float(np.log(2.0))


@dataclass
class SolverState:
    """Designed variables plus the FP auxiliaries.

    gamma and y are ordered downlink users first, then uplink users,
    matching the weight vector.
    """

    W_t: np.ndarray   # (N_t, K_D) transmit beamformers
    W_r: np.ndarray   # (N_r, K_U) receive beamformers
    p: np.ndarray     # (K_U,) uplink transmit powers
    gamma: np.ndarray  # (K,) dual-transform auxiliaries
    y: np.ndarray      # (K,) quadratic-transform auxiliaries


def _inner_products(W_t, W_r, ch: Channels):
    """C[k,i] = h_D,k^H w_t,i; G[u,i] = w_r,u^H h_U,i; S = W_r^H H_SI W_t."""
    C = ch.H_D.conj().T @ W_t
    G = W_r.conj().T @ ch.H_U
    S = W_r.conj().T @ ch.H_SI @ W_t
    return C, G, S


def received_powers(W_t, W_r, p, ch: Channels, cfg: ScenarioConfig):
    """Total received powers s1 (at DL users) and s2 (per RX beamformer).

    s1[k] includes every transmit beam (own signal counted), uplink leakage
    and noise; s2[u] includes every uplink user, residual self-interference
    after W_t/W_r, and filtered noise.
    """
    C, G, S = _inner_products(W_t, W_r, ch)
    s1 = (np.abs(C) ** 2).sum(axis=1) + np.abs(ch.H_IUI) ** 2 @ p + cfg.sigma2
    wr_norm2 = (np.abs(W_r) ** 2).sum(axis=0)
    s2 = np.abs(G) ** 2 @ p + (np.abs(S) ** 2).sum(axis=1) + wr_norm2 * cfg.sigma2
    return s1, s2, C, G


def sinr_downlink(W_t, W_r, p, ch: Channels, cfg: ScenarioConfig) -> np.ndarray:
    s1, _, C, _ = received_powers(W_t, W_r, p, ch, cfg)
    sig = np.abs(np.diag(C)) ** 2
    return sig / (s1 - sig)


def sinr_uplink(W_t, W_r, p, ch: Channels, cfg: ScenarioConfig) -> np.ndarray:
    if W_r.shape[1] and np.any((np.abs(W_r) ** 2).sum(axis=0) == 0.0):
        raise ValueError("zero receive beamformer column")
    _, s2, _, G = received_powers(W_t, W_r, p, ch, cfg)
    sig = p * np.abs(np.diag(G)) ** 2
    return sig / (s2 - sig)


def all_sinrs(state: SolverState, ch: Channels, cfg: ScenarioConfig) -> np.ndarray:
    return np.concatenate([
        sinr_downlink(state.W_t, state.W_r, state.p, ch, cfg),
        sinr_uplink(state.W_t, state.W_r, state.p, ch, cfg),
    ])


def weighted_sum_rate(state: SolverState, ch: Channels, cfg: ScenarioConfig) -> float:
    """Objective: sum_i a_i log2(1 + SINR_i) over DL then UL users."""
    return float(cfg.weights @ np.log2(1.0 + all_sinrs(state, ch, cfg)))


def per_user_rates(state: SolverState, ch: Channels, cfg: ScenarioConfig):
    g = all_sinrs(state, ch, cfg)
    rates = np.log2(1.0 + g)
    return rates[: cfg.K_D], rates[cfg.K_D:]


def update_gamma(state: SolverState, ch: Channels, cfg: ScenarioConfig) -> np.ndarray:
    """Dual-transform auxiliaries: the optimizer is the current SINR vector."""
    return all_sinrs(state, ch, cfg)


def update_y(state: SolverState, ch: Channels, cfg: ScenarioConfig,
             gamma: np.ndarray | None = None) -> np.ndarray:
    """Quadratic-transform auxiliaries for the given (current) gamma.

    gamma must equal the SINRs of the present transceiver state for the
    surrogate to touch the true rate.  Uplink users with zero power get
    y = 0 (their surrogate terms vanish identically).
    """
    if gamma is None:
        gamma = state.gamma
    kd = cfg.K_D
    s1, s2, C, G = received_powers(state.W_t, state.W_r, state.p, ch, cfg)
    a = cfg.weights
    y_dl = np.sqrt(a[:kd] * (1.0 + gamma[:kd])) * np.diag(C) / s1
    y_ul = np.sqrt(a[kd:] * state.p * (1.0 + gamma[kd:])) * np.diag(G).conj() / s2
    return np.concatenate([y_dl, y_ul])


def auxiliary_pass(state: SolverState, ch: Channels, cfg: ScenarioConfig):
    """One (gamma, y) refresh; returns the new pair without mutating state.

    Jointly this never decreases the surrogate and lands it exactly on the
    weighted sum-rate.  (The gamma half alone, evaluated against a stale y,
    can transiently decrease it; only the pair is monotone.)
    """
    gamma = update_gamma(state, ch, cfg)
    y = update_y(state, ch, cfg, gamma)
    return gamma, y


def dual_transform_objective(gamma, W_t, W_r, p, ch: Channels,
                             cfg: ScenarioConfig) -> float:
    """Rate surrogate after the dual transform only, in bits.

    Concave in gamma with maximizer gamma = SINR, where it equals the
    weighted sum-rate.
    """
    kd = cfg.K_D
    a = cfg.weights
    s1, s2, C, G = received_powers(W_t, W_r, p, ch, cfg)
    base = a @ (np.log(1.0 + gamma) - gamma)
    ratio_dl = np.abs(np.diag(C)) ** 2 / s1
    ratio_ul = p * np.abs(np.diag(G)) ** 2 / s2
    lift = (a[:kd] * (1.0 + gamma[:kd])) @ ratio_dl \
        + (a[kd:] * (1.0 + gamma[kd:])) @ ratio_ul
    return float(base + lift) / LN2


def surrogate_objective(state: SolverState, ch: Channels,
                        cfg: ScenarioConfig) -> float:
    """Quadratic-transform surrogate at the state's own (gamma, y), in bits."""
    kd = cfg.K_D
    a = cfg.weights
    gamma, y = state.gamma, state.y
    s1, s2, C, G = received_powers(state.W_t, state.W_r, state.p, ch, cfg)
    base = a @ (np.log(1.0 + gamma) - gamma)
    y_dl, y_ul = y[:kd], y[kd:]
    t1 = 2.0 * np.sqrt(a[:kd] * (1.0 + gamma[:kd])) \
        @ np.real(y_dl.conj() * np.diag(C)) - (np.abs(y_dl) ** 2) @ s1
    # Uplink terms pair the *unconjugated* auxiliary with w_r^H h_U; this is
    # the pairing under which the closed-form y and W_r updates both hold.
    t2 = 2.0 * np.sqrt(a[kd:] * state.p * (1.0 + gamma[kd:])) \
        @ np.real(y_ul * np.diag(G)) - (np.abs(y_ul) ** 2) @ s2
    return float(base + t1 + t2) / LN2
