"""Slow, transparent reference implementations used to cross-check the
closed-form updates.

Everything here trades speed for obviousness: projected gradient ascent in
place of the eigenbasis water-filling solution, dense grids in place of KKT
reasoning, and central differences in place of analytic derivatives.  The
test suite compares the fast paths against these oracles on randomized
instances; the ``oracle`` CLI subcommand runs a small batch on demand.
"""

from __future__ import annotations

import numpy as np

from .geometry import FeasibleRegionSpec


# ---------------------------------------------------------------------------
# random instances


def random_complex(rng: np.random.Generator, shape, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def random_psd(rng: np.random.Generator, n: int, eig_lo: float = 0.05,
               eig_hi: float = 2.0) -> np.ndarray:
    """Hermitian PSD matrix with eigenvalues uniform in [eig_lo, eig_hi]."""
    q, _ = np.linalg.qr(random_complex(rng, (n, n)))
    lam = rng.uniform(eig_lo, eig_hi, n)
    return (q * lam) @ q.conj().T


# ---------------------------------------------------------------------------
# transmit beamformer: power-constrained concave QP


def transmit_qp_value(H_t: np.ndarray, Hbar: np.ndarray, W: np.ndarray):
    """2 Re tr(Hbar^H W) - tr(W^H H_t W); batched over any leading axes."""
    lin = 2.0 * np.real(np.sum(np.conj(Hbar) * W, axis=(-2, -1)))
    quad = np.real(np.sum(np.conj(W) * (H_t @ W), axis=(-2, -1)))
    return lin - quad


def transmit_qp_pgd(H_t: np.ndarray, Hbar: np.ndarray, p_max,
                    iters: int = 4000) -> np.ndarray:
    """Projected gradient ascent for the transmit subproblem.

    Maximizes ``transmit_qp_value`` over the Frobenius ball
    ||W||_F^2 <= p_max using fixed step 1 / (2 lambda_max).  Accepts a
    single (N, K) instance or a stacked batch with one leading axis.
    Deliberately avoids the eigendecomposition shortcut the solver uses.
    """
    H_t = np.asarray(H_t)
    Hbar = np.asarray(Hbar)
    single = H_t.ndim == 2
    if single:
        H_t = H_t[None]
        Hbar = Hbar[None]
    batch = H_t.shape[0]
    rad = np.sqrt(np.broadcast_to(np.asarray(p_max, dtype=float), (batch,)))
    lip = 2.0 * np.maximum(np.linalg.eigvalsh(H_t)[:, -1], 1e-12)
    step = (1.0 / lip)[:, None, None]
    W = np.zeros_like(Hbar)
    for _ in range(iters):
        W = W + step * 2.0 * (Hbar - H_t @ W)
        nrm = np.linalg.norm(W, axis=(1, 2))
        shrink = np.where(nrm > rad, rad / np.maximum(nrm, 1e-300), 1.0)
        W = W * shrink[:, None, None]
    return W[0] if single else W


# ---------------------------------------------------------------------------
# uplink power: scalar grid search


def power_objective(c1, c2, p):
    return c1 * np.sqrt(p) - c2 * p


def power_grid_search(c1: float, c2: float, p_max: float,
                      num: int = 10_000) -> float:
    """Argmax of c1 sqrt(p) - c2 p over a uniform grid on [0, p_max].

    The objective is concave in sqrt(p), hence unimodal in p, so the grid
    argmax lies within one cell of the true maximizer.
    """
    grid = np.linspace(0.0, p_max, num)
    return float(grid[int(np.argmax(power_objective(c1, c2, grid)))])


# ---------------------------------------------------------------------------
# feasible-region projection: dense grid


def grid_nearest_feasible(sp: np.ndarray, spec: FeasibleRegionSpec,
                          step: float) -> np.ndarray | None:
    """Nearest-to-sp point of a uniform grid over the square that clears all
    obstacle discs.  Returns None when no grid point is feasible."""
    hw = spec.half_width
    n = max(2, int(np.floor(2.0 * hw / step)) + 1)
    ax = np.linspace(-hw, hw, n)
    gx, gy = np.meshgrid(ax, ax, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    ok = np.ones(len(pts), dtype=bool)
    for c in spec.obstacles:
        d2 = (pts[:, 0] - c[0]) ** 2 + (pts[:, 1] - c[1]) ** 2
        ok &= d2 >= spec.radius**2
    if not ok.any():
        return None
    pts = pts[ok]
    d2 = (pts[:, 0] - sp[0]) ** 2 + (pts[:, 1] - sp[1]) ** 2
    return pts[int(np.argmin(d2))]


# ---------------------------------------------------------------------------
# derivative checks


def central_difference_gradient(func, x: np.ndarray, step: float) -> np.ndarray:
    """Central-difference gradient of a scalar function of a real array."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    flat = grad.ravel()
    for i in range(x.size):
        bump = np.zeros_like(x).ravel()
        bump[i] = step
        bump = bump.reshape(x.shape)
        flat[i] = (func(x + bump) - func(x - bump)) / (2.0 * step)
    return grad


def central_difference_hessian(func, x: np.ndarray, step: float) -> np.ndarray:
    """Central-difference Hessian of a scalar function of a real array."""
    x = np.asarray(x, dtype=float)
    n = x.size
    hess = np.zeros((n, n))
    eye = np.eye(n)
    for i in range(n):
        for j in range(i, n):
            ei = (step * eye[i]).reshape(x.shape)
            ej = (step * eye[j]).reshape(x.shape)
            val = (func(x + ei + ej) - func(x + ei - ej)
                   - func(x - ei + ej) + func(x - ei - ej)) / (4.0 * step**2)
            hess[i, j] = val
            hess[j, i] = val
    return hess
