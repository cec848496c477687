"""Antenna position optimization by block successive upper-bound descent.

With beamformers, powers and FP auxiliaries frozen, the (negated) surrogate
restricted to one side's antenna positions is a finite sum of terms
Re{c * exp(j u.t)} per antenna: every channel entry is a sum of unit-modulus
path phasors, and the objective is (at most) quadratic in channel entries,
so products of phasors just add their spatial frequencies.  That gives the
exact gradient and Hessian of the per-antenna objective in closed form.

Each antenna is then moved to the minimizer of the standard quadratic
majorizer built from its gradient and a curvature bound tau, projected onto
the feasible region; tau doubles on the rare occasions the projected step
fails to descend (the term-wise bound sum(|c|*||u||^2) majorizes the Hessian
everywhere, so finitely many doublings always restore descent).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, _user_channel, field_response
from .config import ScenarioConfig
from .fp import SolverState
from .geometry import FeasibleRegionSpec, nearest_feasible_point

TAU_MIN_FACTOR = 1e-6
MAX_TAU_DOUBLINGS = 20


@dataclass
class ExpSum:
    """f(t) = sum_m Re{coefs[m] * exp(j dirs[m].t)} with exact derivatives."""

    coefs: np.ndarray  # (M,) complex
    dirs: np.ndarray   # (M, 2), spatial frequencies (kappa absorbed)

    def _phased(self, t: np.ndarray) -> np.ndarray:
        return self.coefs * np.exp(1j * (self.dirs @ t))

    def value(self, t: np.ndarray) -> float:
        return float(np.sum(np.real(self._phased(t))))

    def gradient(self, t: np.ndarray) -> np.ndarray:
        w = self._phased(t)
        return -(np.imag(w) @ self.dirs)

    def hessian(self, t: np.ndarray) -> np.ndarray:
        w = np.real(self._phased(t))
        return -np.einsum("m,mi,mj->ij", w, self.dirs, self.dirs)

    def curvature_cap(self) -> float:
        """Global bound on the Hessian spectral norm: sum |c| ||u||^2."""
        return float(np.sum(np.abs(self.coefs) * (self.dirs ** 2).sum(axis=1)))


@dataclass
class SurrogateContext:
    """Everything the per-side placement objective needs besides positions.

    Valid while beamformers, powers, auxiliaries and the *other* side's
    positions stay fixed, i.e. for one side's whole BSUM run.
    """

    side: str              # "t" or "r"
    kappa: float
    half_width: float
    d_min: float
    user_dirs: np.ndarray  # (K, L, 2) path directions of this side's users
    user_prm: np.ndarray   # (K, L)
    lin: np.ndarray        # (K,) linear-term coefficients
    chan_w: np.ndarray     # (K,) weight of ||.||^2 per user channel
    beam_w: np.ndarray     # (K,) weight per beamformer column
    W: np.ndarray          # (N, K) this side's beamformer
    Q: np.ndarray          # (N_t, N_t) transmit gram W_t W_t^H
    B: np.ndarray          # (N_r, N_r) weighted receive gram W_r |Y_U|^2 W_r^H
    si_dirs: np.ndarray    # (L_SI, 2) this side's SI path directions
    si_mix: np.ndarray     # mixing matrix folding in the other side's positions


def _aux_amp(state: SolverState, cfg: ScenarioConfig) -> np.ndarray:
    return np.sqrt(cfg.weights * (1.0 + state.gamma))


def transmit_context(state: SolverState, rlz: ChannelRealization,
                     r_positions: np.ndarray, cfg: ScenarioConfig) -> SurrogateContext:
    kd = cfg.K_D
    kappa = 2.0 * np.pi / cfg.wavelength
    y_dl, y_ul = state.y[:kd], state.y[kd:]
    amp = _aux_amp(state, cfg)
    B = (state.W_r * np.abs(y_ul) ** 2) @ state.W_r.conj().T
    er = field_response(r_positions, rlz.si_r_dirs, kappa)
    return SurrogateContext(
        side="t", kappa=kappa, half_width=cfg.region_half_width, d_min=cfg.D_min,
        user_dirs=rlz.dl_dirs, user_prm=rlz.prm_dl,
        lin=amp[:kd] * y_dl, chan_w=np.abs(y_dl) ** 2, beam_w=np.ones(kd),
        W=state.W_t, Q=state.W_t @ state.W_t.conj().T, B=B,
        si_dirs=rlz.si_t_dirs, si_mix=er.conj() @ rlz.sigma_si,
    )


def receive_context(state: SolverState, rlz: ChannelRealization,
                    t_positions: np.ndarray, cfg: ScenarioConfig) -> SurrogateContext:
    kd = cfg.K_D
    kappa = 2.0 * np.pi / cfg.wavelength
    y_ul = state.y[kd:]
    amp = _aux_amp(state, cfg)
    B = (state.W_r * np.abs(y_ul) ** 2) @ state.W_r.conj().T
    et = field_response(t_positions, rlz.si_t_dirs, kappa)
    return SurrogateContext(
        side="r", kappa=kappa, half_width=cfg.region_half_width, d_min=cfg.D_min,
        user_dirs=rlz.ul_dirs, user_prm=rlz.prm_ul,
        lin=amp[kd:] * np.sqrt(state.p) * y_ul,
        chan_w=state.p.astype(float), beam_w=np.abs(y_ul) ** 2,
        W=state.W_r, Q=state.W_t @ state.W_t.conj().T, B=B,
        si_dirs=rlz.si_r_dirs, si_mix=et.conj() @ rlz.sigma_si.conj().T,
    )


def _si_matrix(ctx: SurrogateContext, positions: np.ndarray) -> np.ndarray:
    """Rebuild H_SI as a function of this side's positions only."""
    e = np.exp(1j * ctx.kappa * (positions @ ctx.si_dirs.T))
    if ctx.side == "t":
        return ctx.si_mix @ e.T
    return (ctx.si_mix @ e.T).conj().T


def placement_objective(ctx: SurrogateContext, positions: np.ndarray) -> float:
    """Negated position-dependent surrogate part; BSUM minimizes this."""
    H = _user_channel(positions, ctx.user_dirs, ctx.user_prm, ctx.kappa)
    D = ctx.W.conj().T @ H          # D[b, c] = w_b^H h_c
    t1 = -2.0 * float(np.real(ctx.lin @ np.diag(D)))
    t2 = float(ctx.beam_w @ (np.abs(D) ** 2) @ ctx.chan_w)
    hsi = _si_matrix(ctx, positions)
    t3 = float(np.real(np.trace(ctx.Q @ hsi.conj().T @ ctx.B @ hsi)))
    return t1 + t2 + t3


def antenna_bundle(ctx: SurrogateContext, positions: np.ndarray,
                   n: int) -> ExpSum:
    """Exact exponential-sum form of the objective in antenna n's position.

    The returned ExpSum differs from placement_objective by a constant
    (everything not involving antenna n), so values are only meaningful as
    differences; gradients and Hessians are exact.
    """
    K, L = ctx.user_prm.shape
    H = _user_channel(positions, ctx.user_dirs, ctx.user_prm, ctx.kappa)
    wn = ctx.W[n, :]
    # Inner products with antenna n's own contribution removed.
    D0 = ctx.W.conj().T @ H - np.outer(wn.conj(), H[n, :])
    gram_nn = float(np.real((ctx.Q if ctx.side == "t" else ctx.B)[n, n]))

    coefs = []
    dirs = []

    # Channel terms.  d_c aggregates how the moving antenna's phasor beats
    # against the rest of the array through every beamformer column.
    d = ctx.chan_w * (ctx.beam_w * wn.conj() @ D0.conj())
    lin_coef = 2.0 * (d - ctx.lin * wn.conj())
    coefs.append((lin_coef[:, None] * ctx.user_prm).ravel())
    dirs.append((-ctx.kappa * ctx.user_dirs).reshape(-1, 2))
    omega = ctx.chan_w * gram_nn
    pair = ctx.user_prm[:, :, None] * ctx.user_prm.conj()[:, None, :]
    coefs.append((omega[:, None, None] * pair).ravel())
    ddiff = ctx.kappa * (ctx.user_dirs[:, None, :, :] - ctx.user_dirs[:, :, None, :])
    dirs.append(ddiff.reshape(-1, 2))

    # Self-interference terms; antenna n is a column (transmit side) or a
    # row (receive side) of H_SI.
    hsi = _si_matrix(ctx, positions)
    if ctx.side == "t":
        h0 = hsi.copy()
        h0[:, n] = 0.0
        u_lin = ctx.B @ h0 @ ctx.Q[:, n]
        M = ctx.si_mix.conj().T @ ctx.B @ ctx.si_mix
    else:
        h0 = hsi.copy()
        h0[n, :] = 0.0
        u_lin = ctx.Q @ h0.conj().T @ ctx.B[:, n]
        M = ctx.si_mix.conj().T @ ctx.Q @ ctx.si_mix
    coefs.append(2.0 * (u_lin.conj() @ ctx.si_mix))
    dirs.append(ctx.kappa * ctx.si_dirs)
    coefs.append((gram_nn * M).ravel())
    sdiff = ctx.kappa * (ctx.si_dirs[None, :, :] - ctx.si_dirs[:, None, :])
    dirs.append(sdiff.reshape(-1, 2))

    return ExpSum(np.concatenate(coefs), np.vstack(dirs))


def placement_gradient(ctx: SurrogateContext, positions: np.ndarray,
                       n: int) -> np.ndarray:
    return antenna_bundle(ctx, positions, n).gradient(positions[n])


def _lam_max_2x2(h: np.ndarray) -> float:
    return 0.5 * (h[0, 0] + h[1, 1] + np.hypot(h[0, 0] - h[1, 1], 2.0 * h[0, 1]))


def curvature_bound(ctx: SurrogateContext, positions: np.ndarray, n: int,
                    bundle: ExpSum | None = None) -> float:
    """Majorizer curvature: local Hessian top eigenvalue, floored.

    The floor scales with the term-wise global curvature cap so it carries
    the right units (kappa^2 times coefficient magnitude).
    """
    if bundle is None:
        bundle = antenna_bundle(ctx, positions, n)
    tau_min = TAU_MIN_FACTOR * bundle.curvature_cap()
    return max(_lam_max_2x2(bundle.hessian(positions[n])), tau_min)


def surrogate_stationary_point(position: np.ndarray, gradient: np.ndarray,
                               tau: float) -> np.ndarray:
    return position - gradient / tau


def bsum_optimize_side(ctx: SurrogateContext, positions: np.ndarray,
                       rng: np.random.Generator, eps: float,
                       max_sweeps: int = 50,
                       simplified: bool = False):
    """Sweep antennas in random order, each to its projected majorizer step.

    Returns (positions, objective trace per sweep, sweeps used).  The trace
    is monotone non-increasing: a candidate move is only accepted when the
    per-antenna objective does not increase, and the curvature doubles until
    that holds (or the antenna stays put).
    """
    pos = np.array(positions, dtype=float, copy=True)
    n_ant = len(pos)
    f = placement_objective(ctx, pos)
    trace = [f]
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        for n in rng.permutation(n_ant):
            bundle = antenna_bundle(ctx, pos, n)
            if bundle.curvature_cap() == 0.0:
                continue  # objective does not depend on this antenna
            g = bundle.gradient(pos[n])
            tau = curvature_bound(ctx, pos, n, bundle)
            region = FeasibleRegionSpec(ctx.half_width,
                                        np.delete(pos, n, axis=0), ctx.d_min)
            f_here = bundle.value(pos[n])
            for _ in range(MAX_TAU_DOUBLINGS + 1):
                cand = nearest_feasible_point(
                    surrogate_stationary_point(pos[n], g, tau), region,
                    simplified=simplified)
                if bundle.value(cand) <= f_here + 1e-12 * (1.0 + abs(f_here)):
                    pos[n] = cand
                    break
                tau *= 2.0
        f_new = placement_objective(ctx, pos)
        trace.append(f_new)
        rel = abs(f - f_new) / max(abs(f), 1e-12)
        f = f_new
        if rel < eps:
            break
    return pos, trace, sweeps
