"""Alternating optimizer over beamformers, uplink powers and positions.

Each outer iteration refreshes the FP auxiliaries (which pins the surrogate
to the true weighted sum-rate), then solves the transmit, receive, power,
transmit-placement and receive-placement blocks in that order.  Every block
maximizes the same surrogate exactly or monotonically, so the true rate
trace is non-decreasing and convergence is declared on its relative change.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import beamforming, fp, placement
from .channel import (AntennaLayout, ChannelRealization, Channels,
                      build_channels, build_downlink_channel,
                      build_si_channel, build_uplink_channel)
from .config import ConfigError, ScenarioConfig
from .geometry import layout_side_feasible

INIT_REJECTION_CAP = 100_000


@dataclass
class SolveOptions:
    max_outer: int = 100
    position_method: str = "bsum"   # "bsum", "gd", or "none"
    simplified_geometry: bool = False
    max_bsum_sweeps: int = 50
    validate: bool = True           # assert per-block surrogate monotonicity
    eval_rlz: ChannelRealization | None = None  # true channels, if the solver
    # is fed an imperfect estimate; rates are then reported against these.


@dataclass
class TrialResult:
    rate: float                 # final weighted sum-rate (true channels)
    dl_rates: np.ndarray
    ul_rates: np.ndarray
    outer_iterations: int
    bsum_sweeps: int
    wall_time: float
    layout: AntennaLayout
    trace: list                 # solver-side rate per outer iteration
    eval_trace: list            # rate on true channels per iteration
    converged: bool
    solver_rate: float          # final rate on the channels the solver saw
    sandwich_gap: float         # worst |surrogate - rate| after aux passes
    # filled by the experiment harness:
    algorithm: str = ""
    sweep_value: float = float("nan")
    trial: int = -1
    failure: str | None = None


def _sample_side(n: int, half_width: float, d_min: float,
                 rng: np.random.Generator) -> np.ndarray:
    pts: list[np.ndarray] = []
    failures = 0
    while len(pts) < n:
        q = rng.uniform(-half_width, half_width, size=2)
        if all(np.linalg.norm(q - p) >= d_min for p in pts):
            pts.append(q)
        else:
            failures += 1
            if failures > INIT_REJECTION_CAP:
                raise ConfigError(
                    f"could not place {n} antennas with spacing {d_min:g} m in a "
                    f"{2 * half_width:g} m square after {INIT_REJECTION_CAP} rejections"
                )
    return np.array(pts)


def initialize_layout(cfg: ScenarioConfig, rng: np.random.Generator) -> AntennaLayout:
    """Uniform random feasible layout (rejection sampling per side)."""
    hw = cfg.region_half_width
    return AntennaLayout(
        t=_sample_side(cfg.N_t, hw, cfg.D_min, rng),
        r=_sample_side(cfg.N_r, hw, cfg.D_min, rng),
    )


def initial_state(ch: Channels, cfg: ScenarioConfig) -> fp.SolverState:
    """Matched-filter beamformers at full power budgets."""
    g = float(np.sum(np.abs(ch.H_D) ** 2))
    W_t = ch.H_D * np.sqrt(cfg.p_D_max / g) if g > 0 else np.zeros_like(ch.H_D)
    W_r = ch.H_U.copy()
    for u in range(cfg.K_U):
        if np.linalg.norm(W_r[:, u]) == 0.0:
            W_r[:, u] = 0.0
            W_r[0, u] = 1.0
    k = cfg.K
    return fp.SolverState(
        W_t=W_t, W_r=W_r, p=np.full(cfg.K_U, cfg.p_U_max),
        gamma=np.zeros(k), y=np.zeros(k, dtype=complex),
    )


def _check_layout(layout: AntennaLayout, cfg: ScenarioConfig) -> None:
    hw = cfg.region_half_width
    if layout.t.shape != (cfg.N_t, 2) or layout.r.shape != (cfg.N_r, 2):
        raise ValueError("layout shape does not match antenna counts")
    for pts, tag in ((layout.t, "transmit"), (layout.r, "receive")):
        if not layout_side_feasible(pts, hw, cfg.D_min):
            raise ValueError(f"infeasible {tag} layout")


def _position_optimizer(method: str):
    if method == "bsum":
        return placement.bsum_optimize_side
    if method == "gd":
        from .baselines import gradient_descent_positions
        return gradient_descent_positions
    raise ValueError(f"unknown position method {method!r}")


class _Monitor:
    """Tracks surrogate monotonicity and the post-aux-pass sandwich gap."""

    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.sandwich_gap = 0.0

    def check_block(self, before: float, after: float, tag: str) -> None:
        if self.enabled and after < before - 1e-9 * max(1.0, abs(before)):
            raise AssertionError(
                f"surrogate decreased in {tag} block: {before!r} -> {after!r}")

    def check_sandwich(self, surrogate: float, rate: float) -> None:
        gap = abs(surrogate - rate) / max(1.0, abs(rate))
        self.sandwich_gap = max(self.sandwich_gap, gap)
        if self.enabled and gap > 1e-9:
            raise AssertionError(
                f"surrogate {surrogate!r} does not match rate {rate!r}")


def alternating_optimize(cfg: ScenarioConfig, rlz: ChannelRealization,
                         rng: np.random.Generator,
                         initial_layout: AntennaLayout | None = None,
                         options: SolveOptions | None = None) -> TrialResult:
    """Run the full alternating scheme from a (possibly given) layout.

    All randomness (layout initialization, placement sweep order) comes from
    `rng`, so results are bit-stable for a fixed generator state.
    """
    opts = options or SolveOptions()
    t_start = time.perf_counter()
    layout = initial_layout.copy() if initial_layout is not None \
        else initialize_layout(cfg, rng)
    _check_layout(layout, cfg)

    ch = build_channels(layout, rlz, cfg)
    state = initial_state(ch, cfg)
    monitor = _Monitor(opts.validate)

    eval_ch = None

    def true_rate() -> float:
        nonlocal eval_ch
        if opts.eval_rlz is None:
            return fp.weighted_sum_rate(state, ch, cfg)
        eval_ch = build_channels(layout, opts.eval_rlz, cfg)
        return fp.weighted_sum_rate(state, eval_ch, cfg)

    rate = fp.weighted_sum_rate(state, ch, cfg)
    trace = [rate]
    eval_trace = [true_rate()]
    bsum_sweeps = 0
    converged = False
    iterations = 0

    move = opts.position_method != "none"
    optimizer = _position_optimizer(opts.position_method) if move else None

    for it in range(1, opts.max_outer + 1):
        iterations = it
        state.gamma, state.y = fp.auxiliary_pass(state, ch, cfg)
        p3 = fp.surrogate_objective(state, ch, cfg)
        monitor.check_sandwich(p3, fp.weighted_sum_rate(state, ch, cfg))

        state.W_t = beamforming.update_transmit_beamformer(state, ch, cfg)
        p3_new = fp.surrogate_objective(state, ch, cfg)
        monitor.check_block(p3, p3_new, "transmit beamformer")
        p3 = p3_new

        state.W_r = beamforming.update_receive_beamformer(state, ch, cfg)
        p3_new = fp.surrogate_objective(state, ch, cfg)
        monitor.check_block(p3, p3_new, "receive beamformer")
        p3 = p3_new

        state.p = beamforming.update_uplink_power(state, ch, cfg)
        p3_new = fp.surrogate_objective(state, ch, cfg)
        monitor.check_block(p3, p3_new, "uplink power")
        p3 = p3_new

        if move and cfg.K_D > 0:
            ctx = placement.transmit_context(state, rlz, layout.r, cfg)
            layout.t, _, sw = optimizer(
                ctx, layout.t, rng, cfg.epsilon_bsum,
                max_sweeps=opts.max_bsum_sweeps,
                simplified=opts.simplified_geometry)
            bsum_sweeps += sw
            ch = build_channels(layout, rlz, cfg)
            p3_new = fp.surrogate_objective(state, ch, cfg)
            monitor.check_block(p3, p3_new, "transmit placement")
            p3 = p3_new
        if move and cfg.K_U > 0:
            ctx = placement.receive_context(state, rlz, layout.t, cfg)
            layout.r, _, sw = optimizer(
                ctx, layout.r, rng, cfg.epsilon_bsum,
                max_sweeps=opts.max_bsum_sweeps,
                simplified=opts.simplified_geometry)
            bsum_sweeps += sw
            ch = build_channels(layout, rlz, cfg)
            p3_new = fp.surrogate_objective(state, ch, cfg)
            monitor.check_block(p3, p3_new, "receive placement")

        new_rate = fp.weighted_sum_rate(state, ch, cfg)
        trace.append(new_rate)
        eval_trace.append(true_rate())
        if abs(new_rate - rate) <= cfg.epsilon * max(abs(rate), 1e-12):
            rate = new_rate
            converged = True
            break
        rate = new_rate

    # Receive beamformer scale does not affect rates; report unit columns.
    if cfg.K_U > 0:
        state.W_r = beamforming.normalize_receive_columns(state.W_r)

    final_ch = eval_ch if opts.eval_rlz is not None else ch
    dl_rates, ul_rates = fp.per_user_rates(state, final_ch, cfg)
    return TrialResult(
        rate=eval_trace[-1] if opts.eval_rlz is not None else rate,
        dl_rates=dl_rates, ul_rates=ul_rates,
        outer_iterations=iterations, bsum_sweeps=bsum_sweeps,
        wall_time=time.perf_counter() - t_start,
        layout=layout, trace=trace, eval_trace=eval_trace,
        converged=converged, solver_rate=trace[-1],
        sandwich_gap=monitor.sandwich_gap,
    )
