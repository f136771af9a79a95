"""Maximize the feedforward fidelity over splitting angle and gain.

A 64 x 64 grid over ``theta in [0, pi]`` and ``k in [0, 2 sqrt(M) + sqrt(N)]``
locates the basin, then a box-projected Nelder-Mead simplex refines it, with
one restart around the best vertex.
"""

import math
from dataclasses import dataclass

import numpy as np

from .fidelity import (
    FeedforwardParams,
    FidelityResult,
    SchemeConfig,
    ff_fidelity_grid,
    scheme_config,
    series_fidelity,
)

__all__ = [
    "OptimumReport",
    "nelder_mead_max",
    "optimize_ff",
    "sweep_alpha",
    "sweep_m",
]

GRID_POINTS = 64


@dataclass(frozen=True)
class OptimumReport:
    best: FeedforwardParams
    fidelity: FidelityResult
    grid_evals: int
    refine_iters: int
    converged: bool

    def as_dict(self):
        return {
            "theta": self.best.theta,
            "k": self.best.k,
            "fidelity": self.fidelity.as_dict(),
            "grid_evals": self.grid_evals,
            "refine_iters": self.refine_iters,
            "converged": self.converged,
        }


def nelder_mead_max(func, x0, step, lower, upper, ftol=1e-10, xtol=1e-7, max_iter=2000):
    """Maximize ``func`` over a box with a projected Nelder-Mead simplex.

    Parameters
    ----------
    func : callable
        Objective taking a 1-D array.
    x0 : array_like
        Starting vertex.
    step : array_like
        Initial edge lengths, one per coordinate.
    lower, upper : array_like
        Box bounds; every trial point is clipped into the box.
    ftol, xtol : float
        Stop when the spread of objective values is below ``ftol`` and the
        simplex diameter below ``xtol``.

    Returns
    -------
    x : numpy.ndarray
        Best vertex.
    fx : float
        Objective at ``x``.
    iterations : int
    spread : float
        Final spread of objective values across the simplex.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)

    def clip(x):
        return np.minimum(np.maximum(x, lower), upper)

    x0 = clip(np.asarray(x0, dtype=float))
    dim = len(x0)
    pts = [x0]
    for i in range(dim):
        x = x0.copy()
        x[i] += step[i]
        if clip(x)[i] == x0[i]:
            x[i] = x0[i] - step[i]
        pts.append(clip(x))
    pts = np.array(pts)
    vals = np.array([func(p) for p in pts])

    it = 0
    while it < max_iter:
        # descending by value, ties to the lexicographically smaller vertex
        order = np.lexsort(tuple(pts[:, j] for j in reversed(range(dim))) + (-vals,))
        pts, vals = pts[order], vals[order]
        spread = vals[0] - vals[-1]
        diameter = np.max(np.abs(pts[1:] - pts[0]))
        if spread < ftol and diameter < xtol:
            break
        it += 1

        centroid = pts[:-1].mean(axis=0)
        worst = pts[-1]
        xr = clip(centroid + (centroid - worst))
        fr = func(xr)
        if fr > vals[0]:
            xe = clip(centroid + 2.0 * (centroid - worst))
            fe = func(xe)
            if fe > fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
            continue
        if fr > vals[-2]:
            pts[-1], vals[-1] = xr, fr
            continue
        if fr > vals[-1]:
            xc = clip(centroid + 0.5 * (xr - centroid))
        else:
            xc = clip(centroid + 0.5 * (worst - centroid))
        fc = func(xc)
        if fc > max(fr, vals[-1]):
            pts[-1], vals[-1] = xc, fc
            continue
        # shrink toward the best vertex
        pts[1:] = pts[0] + 0.5 * (pts[1:] - pts[0])
        vals[1:] = [func(p) for p in pts[1:]]

    order = np.lexsort(tuple(pts[:, j] for j in reversed(range(dim))) + (-vals,))
    pts, vals = pts[order], vals[order]
    return pts[0], float(vals[0]), it, float(vals[0] - vals[-1])


def k_upper(cfg):
    return 2.0 * math.sqrt(cfg.m_out) + math.sqrt(cfg.n_in)


def optimize_ff(cfg, ctrl=None, opt_tol=1e-6, grid_points=GRID_POINTS):
    """Optimal ``(theta, k)`` for the feedforward scheme described by ``cfg``."""
    if not opt_tol > 0:
        raise ValueError("opt_tol must be positive")
    kmax = k_upper(cfg)
    thetas = np.linspace(0.0, math.pi, grid_points)
    ks = np.linspace(0.0, kmax, grid_points)
    grid = ff_fidelity_grid(cfg, thetas, ks, ctrl)
    # argmax returns the first hit: ties go to smaller theta, then smaller k
    i, j = np.unravel_index(np.argmax(grid), grid.shape)
    grid_best = grid[i, j]

    def objective(x):
        return series_fidelity(cfg, FeedforwardParams(x[0], x[1]), ctrl).value

    lower, upper = [0.0, 0.0], [math.pi, kmax]
    step = np.array([thetas[1] - thetas[0], ks[1] - ks[0]])
    x, fx, iters, spread = nelder_mead_max(
        objective, [thetas[i], ks[j]], step, lower, upper, ftol=opt_tol * 1e-3)
    # restart from a perturbed best vertex
    x2, fx2, iters2, spread2 = nelder_mead_max(
        objective, x, 0.25 * step, lower, upper, ftol=opt_tol * 1e-3)
    iters += iters2
    if fx2 > fx or (fx2 == fx and tuple(x2) < tuple(x)):
        x, fx, spread = x2, fx2, spread2
    if grid_best > fx:
        x, fx = np.array([thetas[i], ks[j]]), grid_best

    theta, k = float(x[0]), float(x[1])
    if theta > 0.5 * math.pi:
        # prefer the [0, pi/2] representative when it is at least as good
        mirrored = series_fidelity(cfg, FeedforwardParams(math.pi - theta, k), ctrl)
        if mirrored.value >= fx:
            theta = math.pi - theta
    best = FeedforwardParams(theta, k)
    result = series_fidelity(cfg, best, ctrl)
    return OptimumReport(best, result, grid.size, iters, spread < opt_tol)


def sweep_alpha(template, alpha_grid, schemes=("ff-sg", "ff-dh", "cl-sg", "cl-dh"),
                ctrl=None, opt_tol=1e-6):
    """Optimized fidelity per ``(alpha, scheme)``.

    Semiclassical schemes have no free parameters; their rows carry
    ``report=None`` and the plain series value.

    Returns
    -------
    list of dict
        Keys ``alpha``, ``scheme``, ``fidelity`` and ``report``.
    """
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    if alpha_grid.size == 0 or np.any(np.diff(alpha_grid) < 0):
        raise ValueError("alpha_grid must be nonempty and ascending")
    rows = []
    for alpha in alpha_grid:
        for scheme in schemes:
            cfg = SchemeConfig(template.n_in, template.m_out, float(alpha),
                               _model_for(scheme, template))
            if scheme.startswith("ff"):
                report = optimize_ff(cfg, ctrl, opt_tol)
                value = report.fidelity.value
            else:
                report = None
                value = series_fidelity(cfg, None, ctrl).value
            rows.append({"alpha": float(alpha), "scheme": scheme,
                         "fidelity": value, "report": report})
    return rows


def _model_for(scheme, template):
    eta = template.model.eta if template.model.kind == "dh" else 1.0
    return scheme_config(scheme, eta=eta, convention=template.model.convention).model


def sweep_m(template, m_grid, ctrl=None, opt_tol=1e-6):
    """Optimized feedforward fidelity for each number of clones in ``m_grid``."""
    m_grid = [int(m) for m in m_grid]
    if not m_grid or any(b < a for a, b in zip(m_grid, m_grid[1:])):
        raise ValueError("m_grid must be nonempty and ascending")
    return [(m, optimize_ff(SchemeConfig(template.n_in, m, template.alpha_mod,
                                         template.model), ctrl, opt_tol))
            for m in m_grid]
