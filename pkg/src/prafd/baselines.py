"""Reference schemes the position-optimizing solver is compared against.

* fpas: fixed uniform planar arrays, beamforming/power only.
* fp-gd: same alternating scheme but positions move by projected gradient
  descent with Armijo backtracking instead of per-antenna majorization.
* hd: downlink-only half-duplex operation, scaled by a duplex factor.
"""

from __future__ import annotations

import math

import numpy as np

from .channel import ChannelRealization
from .config import ConfigError, ScenarioConfig
from .geometry import FeasibleRegionSpec, layout_side_feasible, nearest_feasible_point
from .placement import SurrogateContext, antenna_bundle, placement_objective
from .solver import AntennaLayout, SolveOptions, TrialResult, alternating_optimize

ALGORITHMS = ("fp-bsum", "fp-bsum-simplified", "fp-gd", "fpas", "hd")

ARMIJO_C = 1e-4
GD_MAX_HALVINGS = 40


def upa_layout(n: int, spacing: float, half_width: float) -> np.ndarray:
    """Centered ceil(sqrt(n)) x ceil(sqrt(n)) grid, filled row-major."""
    m = math.ceil(math.sqrt(n))
    if m > 1 and (m - 1) * spacing > 2.0 * half_width:
        raise ConfigError(
            f"a {m}x{m} grid at spacing {spacing:g} m does not fit the region")
    pts = []
    for idx in range(n):
        i, j = divmod(idx, m)
        pts.append([(j - (m - 1) / 2.0) * spacing,
                    (i - (m - 1) / 2.0) * spacing])
    return np.array(pts).reshape(n, 2)


def _project_side(cand: np.ndarray, half_width: float, d_min: float,
                  simplified: bool) -> np.ndarray | None:
    """Sequentially restore pairwise feasibility after a joint move."""
    proj = cand.copy()
    for _ in range(5):
        for n in range(len(proj)):
            region = FeasibleRegionSpec(half_width,
                                        np.delete(proj, n, axis=0), d_min)
            proj[n] = nearest_feasible_point(cand[n], region,
                                             simplified=simplified)
        if layout_side_feasible(proj, half_width, d_min):
            return proj
    return None


def gradient_descent_positions(ctx: SurrogateContext, positions: np.ndarray,
                               rng: np.random.Generator, eps: float,
                               max_sweeps: int = 200,
                               simplified: bool = False):
    """Projected gradient descent on one side's placement objective.

    Same interface and monotonicity contract as the per-antenna majorizer
    sweep; `max_sweeps` caps gradient steps here.  Step sizes come from
    Armijo backtracking (sufficient decrease c=1e-4, halving), so the
    objective trace never increases.
    """
    pos = np.array(positions, dtype=float, copy=True)
    n_ant = len(pos)
    f = placement_objective(ctx, pos)
    trace = [f]
    steps = 0
    alpha0 = None
    for _ in range(max_sweeps):
        bundles = [antenna_bundle(ctx, pos, n) for n in range(n_ant)]
        caps = np.array([b.curvature_cap() for b in bundles])
        if np.all(caps == 0.0):
            break
        grad = np.stack([bundles[n].gradient(pos[n]) for n in range(n_ant)])
        gnorm2 = float((grad ** 2).sum())
        if gnorm2 == 0.0:
            break
        if alpha0 is None:
            alpha0 = 1.0 / float(caps.max())
        steps += 1
        alpha = alpha0
        accepted = False
        for _ in range(GD_MAX_HALVINGS):
            proj = _project_side(pos - alpha * grad, ctx.half_width,
                                 ctx.d_min, simplified)
            if proj is not None:
                f_new = placement_objective(ctx, proj)
                if f_new <= f - ARMIJO_C * alpha * gnorm2:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break  # constrained stationary point at this resolution
        alpha0 = 2.0 * alpha  # warm start the next line search
        pos = proj
        trace.append(f_new)
        rel = abs(f - f_new) / max(abs(f), 1e-12)
        f = f_new
        if rel < eps:
            break
    return pos, trace, steps


def solve_fpas(cfg: ScenarioConfig, rlz: ChannelRealization,
               rng: np.random.Generator,
               options: SolveOptions | None = None) -> TrialResult:
    """Fixed half-wavelength planar arrays; only beamformers/powers adapt."""
    opts = options or SolveOptions()
    opts.position_method = "none"
    spacing = 0.5 * cfg.wavelength
    layout = AntennaLayout(
        t=upa_layout(cfg.N_t, spacing, cfg.region_half_width),
        r=upa_layout(cfg.N_r, spacing, cfg.region_half_width),
    )
    return alternating_optimize(cfg, rlz, rng, initial_layout=layout,
                                options=opts)


def solve_half_duplex(cfg: ScenarioConfig, rlz: ChannelRealization,
                      rng: np.random.Generator, duplex_factor: float = 0.5,
                      options: SolveOptions | None = None) -> TrialResult:
    """Downlink-only operation with the same placement-aware optimizer.

    No uplink means no self-interference and no uplink-to-downlink coupling
    anywhere in the problem.  The reported rates are the downlink weighted
    sum scaled by the duplex factor (the share of time the downlink runs);
    absolute values therefore depend on that factor, not on the solver.
    """
    if not 0.0 < duplex_factor <= 1.0:
        raise ValueError(
            f"duplex factor must be in (0, 1], got {duplex_factor:g}")
    opts = options or SolveOptions()
    if opts.eval_rlz is not None:
        opts.eval_rlz = opts.eval_rlz.downlink_only()
    res = alternating_optimize(cfg.downlink_only(), rlz.downlink_only(), rng,
                               options=opts)
    res.rate *= duplex_factor
    res.dl_rates = res.dl_rates * duplex_factor
    res.trace = [duplex_factor * v for v in res.trace]
    res.eval_trace = [duplex_factor * v for v in res.eval_trace]
    res.solver_rate *= duplex_factor
    return res


def run_algorithm(name: str, cfg: ScenarioConfig, rlz: ChannelRealization,
                  rng: np.random.Generator,
                  initial_layout: AntennaLayout | None = None,
                  eval_rlz: ChannelRealization | None = None,
                  duplex_factor: float = 0.5,
                  validate: bool = True) -> TrialResult:
    """Dispatch one named algorithm on one realization."""
    opts = SolveOptions(eval_rlz=eval_rlz, validate=validate)
    if name == "fp-bsum":
        return alternating_optimize(cfg, rlz, rng, initial_layout, opts)
    if name == "fp-bsum-simplified":
        opts.simplified_geometry = True
        return alternating_optimize(cfg, rlz, rng, initial_layout, opts)
    if name == "fp-gd":
        opts.position_method = "gd"
        opts.max_bsum_sweeps = 200
        return alternating_optimize(cfg, rlz, rng, initial_layout, opts)
    if name == "fpas":
        return solve_fpas(cfg, rlz, rng, opts)
    if name == "hd":
        return solve_half_duplex(cfg, rlz, rng, duplex_factor, opts)
    raise ValueError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
