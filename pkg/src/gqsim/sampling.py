"""Synthetic detection events drawn from the plate density."""

from dataclasses import dataclass, field

import numpy as np

from .detector import DetectionDensity, DetectionModel
from .errors import ContractError

__all__ = ["EventSet", "sample_events", "transport_oracle_sample"]

RNG_NAME = "numpy-PCG64"


@dataclass
class EventSet:
    """One simulated experimental run: (X_i, T_i) annihilation coordinates."""

    events: np.ndarray            # shape (n, 2): columns X [m], T [s]
    g_true: float
    seed: int
    n: int
    rng: str = RNG_NAME
    meta: dict = field(default_factory=dict)

    @property
    def X(self):
        return self.events[:, 0]

    @property
    def T(self):
        return self.events[:, 1]


def _sample_piecewise_linear(nodes, dens, u):
    """Inverse-CDF draws from a piecewise-linear density on `nodes`.

    `u` are uniforms in [0, 1); the density need not be normalized.
    """
    nodes = np.asarray(nodes, dtype=float)
    dens = np.clip(np.asarray(dens, dtype=float), 0.0, None)
    dx = np.diff(nodes)
    cell = 0.5 * (dens[1:] + dens[:-1]) * dx
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    total = cdf[-1]
    if total <= 0:
        raise ContractError("cannot sample from a zero density")
    r = u * total
    i = np.clip(np.searchsorted(cdf, r, side="right") - 1, 0, len(cell) - 1)
    rloc = r - cdf[i]
    f_lo = dens[i]
    df = dens[i + 1] - dens[i]
    a = 0.5 * df / dx[i]
    b = f_lo
    # solve a s^2 + b s = rloc for s in [0, dx]
    with np.errstate(invalid="ignore", divide="ignore"):
        s_quad = (-b + np.sqrt(np.maximum(b * b + 4.0 * a * rloc, 0.0))) / (2.0 * a)
        s_lin = rloc / np.maximum(b, 1e-300)
    s = np.where(np.abs(df) > 1e-12 * np.maximum(f_lo, dens[i + 1]), s_quad, s_lin)
    return nodes[i] + np.clip(s, 0.0, dx[i])


def _sample_rows(rows, q0, u):
    """Vectorized per-event inverse CDF over the rows' shared q0 axis."""
    rows = np.clip(rows, 0.0, None)
    dq = np.diff(q0)
    cell = 0.5 * (rows[:, 1:] + rows[:, :-1]) * dq[None, :]
    cdf = np.cumsum(cell, axis=1)
    total = cdf[:, -1]
    if np.any(total <= 0):
        raise ContractError("empty conditional momentum row")
    r = u * total
    idx = np.empty(len(rows), dtype=int)
    for k in range(len(rows)):  # searchsorted per row; rows differ
        idx[k] = np.searchsorted(cdf[k], r[k], side="right")
    idx = np.clip(idx, 0, cell.shape[1] - 1)
    rows_k = np.arange(len(rows))
    c_lo = np.where(idx > 0, cdf[rows_k, np.maximum(idx - 1, 0)], 0.0)
    rloc = r - c_lo
    f_lo = rows[rows_k, idx]
    df = rows[rows_k, idx + 1] - f_lo
    dxi = dq[idx]
    a = 0.5 * df / dxi
    with np.errstate(invalid="ignore", divide="ignore"):
        s_quad = (-f_lo + np.sqrt(np.maximum(f_lo ** 2 + 4.0 * a * rloc, 0.0))) / (2.0 * a)
        s_lin = rloc / np.maximum(f_lo, 1e-300)
    s = np.where(np.abs(df) > 1e-12 * np.maximum(f_lo, rows[rows_k, idx + 1]), s_quad, s_lin)
    return q0[idx] + np.clip(s, 0.0, dxi)


def sample_events(dd, n, seed, batch=8192):
    """Draw n i.i.d. events from a detection density, deterministic per seed.

    `dd` is either a DetectionModel (exact conditional rows at the sampled
    X, the default pipeline) or a plain rectangular DetectionDensity grid
    (bilinear interpolant sampling, used for densities loaded from files).
    """
    if n < 1:
        raise ContractError("need n >= 1 events")
    rng = np.random.default_rng(seed)
    if isinstance(dd, DetectionModel):
        X_nodes, q0, cols = dd.pdf_columns()
        marg = np.trapezoid(cols, q0, axis=1)
        X = _sample_piecewise_linear(X_nodes, marg, rng.uniform(size=n))
        T = np.empty(n)
        for lo in range(0, n, batch):
            hi = min(lo + batch, n)
            rows = dd.column_rows(X[lo:hi], q0)
            q = _sample_rows(rows, q0, rng.uniform(size=hi - lo))
            t = dd.tau * dd.geom.d / (X[lo:hi] - dd.geom.d)
            T[lo:hi] = t + dd.tau + q * dd.ctx.t_g
        events = np.column_stack([X, T])
        if dd.cfg.blur:
            events = events + rng.normal(
                0.0, [dd.cfg.blur_sigma_x, dd.cfg.blur_sigma_t], size=events.shape
            )
        g_true = dd.g
        meta = {"window": list(dd.window), "blur": bool(dd.cfg.blur)}
    elif isinstance(dd, DetectionDensity):
        if abs(dd.integral() - 1.0) > 1e-2:
            raise ContractError("detection density grid is not normalized")
        marg = np.trapezoid(dd.values, dd.t_grid, axis=1)
        X = _sample_piecewise_linear(dd.x_grid, marg, rng.uniform(size=n))
        i = np.clip(np.searchsorted(dd.x_grid, X) - 1, 0, len(dd.x_grid) - 2)
        w = (X - dd.x_grid[i]) / (dd.x_grid[i + 1] - dd.x_grid[i])
        rows = dd.values[i] * (1.0 - w[:, None]) + dd.values[i + 1] * w[:, None]
        T = _sample_rows(rows, dd.t_grid, rng.uniform(size=n))
        events = np.column_stack([X, T])
        g_true = float("nan")
        meta = {}
    else:
        raise ContractError(f"cannot sample from {type(dd).__name__}")
    return EventSet(events=events, g_true=g_true, seed=int(seed), n=int(n), meta=meta)


def transport_oracle_sample(model: DetectionModel, n, seed, batch=8192):
    """Independent oracle: draw mirror-edge variables, transport them forward.

    p_x is drawn from the horizontal Gaussian (restricted to the analysis
    window), the mirror time is t = d m / p_x, p_z comes from the exact
    momentum row at that time, and the classical fall maps the triple to
    (X, T).  Distributionally equivalent to sample_events by construction
    of the detector Jacobian.
    """
    rng = np.random.default_rng(seed)
    cfg = model.cfg
    m = cfg.m
    lo_v = (model.window[0] - cfg.d) / model.tau
    hi_v = (model.window[1] - cfg.d) / model.tau
    sig_v = model.sigma_p / m
    v = np.empty(0)
    while len(v) < n:
        cand = rng.normal(cfg.v0, sig_v, size=4 * n)
        v = np.concatenate([v, cand[(cand >= lo_v) & (cand <= hi_v)]])
    v = v[:n]
    X = cfg.d + v * model.tau
    q0 = model.q0_nodes()
    T = np.empty(n)
    for lo in range(0, n, batch):
        hi = min(lo + batch, n)
        rows = model.column_rows(X[lo:hi], q0)
        q = _sample_rows(rows, q0, rng.uniform(size=hi - lo))
        t = cfg.d * m / (m * v[lo:hi])
        T[lo:hi] = t + model.tau + q * model.ctx.t_g
    events = np.column_stack([X, T])
    return EventSet(
        events=events, g_true=model.g, seed=int(seed), n=int(n), meta={"method": "transport"}
    )
