"""Free-fall mapping from the mirror edge to the detection plate.

The classical fall of height H >> h turns the interference pattern at the
mirror end into a space-time annihilation density on the plate.  With
tau_bar = sqrt(2H/g), the event coordinates are

    X = d + p_x tau_bar / m,      T = t + tau_bar + p_z / (m g),

with t = d m / p_x the time spent above the mirror.  The map
(p_x, p_z) -> (X, T) is triangular, so its Jacobian is exactly
tau_bar/(m^2 g) and the plate density reads

    |J|(X, T) = (g m^2 / tau_bar) |phi_tilde(p_x)|^2 Pi_t(p_z),

i.e. the prefactor already carries the full change of variables.
"""

import math
from dataclasses import dataclass

import numpy as np

from .basis import MomentumDensity, build_basis
from .context import InitialWavePacket, PhysicalContext
from .errors import ConfigError, ContractError, DomainError, ExtentError

__all__ = [
    "DetectionDensity",
    "DetectionModel",
    "Geometry",
    "anamorphosis",
    "anamorphosis_inverse",
    "detection_density",
    "detection_window",
    "fringe_grid_check",
    "horizontal_weight",
]


@dataclass(frozen=True)
class Geometry:
    """Mirror length d and macroscopic free-fall height H, meters."""

    d: float
    H: float

    def __post_init__(self):
        if self.d <= 0 or self.H <= 0:
            raise ConfigError("geometry requires d > 0 and H > 0")

    def tau_bar(self, g):
        return math.sqrt(2.0 * self.H / g)


def anamorphosis(X, T, geom: Geometry, ctx: PhysicalContext):
    """Map plate coordinates (X, T) to mirror-edge variables (t, p_x, p_z)."""
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(X <= geom.d):
        raise DomainError("detection events require X > d")
    tau = geom.tau_bar(ctx.g)
    t = tau * geom.d / (X - geom.d)
    p_x = ctx.m * (X - geom.d) / tau
    p_z = ctx.m * ctx.g * (T - tau * X / (X - geom.d))
    return t, p_x, p_z


def anamorphosis_inverse(t, p_x, p_z, geom: Geometry, ctx: PhysicalContext):
    """Inverse chart; requires the consistency t * p_x = d * m."""
    tau = geom.tau_bar(ctx.g)
    p_x = np.asarray(p_x, dtype=float)
    X = geom.d + p_x * tau / ctx.m
    T = np.asarray(t, dtype=float) + tau + np.asarray(p_z, dtype=float) / (ctx.m * ctx.g)
    return X, T


def horizontal_weight(p_x, wp: InitialWavePacket, ctx: PhysicalContext):
    """Probability density of the horizontal momentum, |phi_tilde(p_x)|^2.

    Free horizontal motion preserves the momentum distribution, so this is
    the time-independent Gaussian centered at m v0 with dispersion
    hbar/(2 zeta).
    """
    sp = ctx.hbar / (2.0 * wp.zeta)
    u = (np.asarray(p_x, dtype=float) - ctx.m * wp.v0) / sp
    return np.exp(-0.5 * u * u) / (math.sqrt(2.0 * math.pi) * sp)


def _gauss_mass(lo, hi, mean, sigma):
    rt2 = math.sqrt(2.0)
    return 0.5 * (math.erf((hi - mean) / (rt2 * sigma)) - math.erf((lo - mean) / (rt2 * sigma)))


def detection_window(cfg):
    """Fixed analysis window in X, chosen once at the reference acceleration.

    The lower edge is the configured hard minimum above the mirror end; the
    upper edge additionally clips where the horizontal-momentum envelope is
    negligible.  The same window is reused at every trial g so that the
    likelihood compares identical experiments.
    """
    tau0 = cfg.geometry().tau_bar(cfg.g0)
    sig_v = cfg.hbar / (2.0 * cfg.m * cfg.zeta)
    x_hi = min(cfg.x_window_hi, (cfg.v0 + cfg.envelope_sigmas * sig_v) * tau0)
    x_lo = max(cfg.x_window_lo, (cfg.v0 - cfg.envelope_sigmas * sig_v) * tau0)
    if x_hi <= x_lo:
        raise ConfigError("empty detection window; check v0 and window bounds")
    return cfg.d + x_lo, cfg.d + x_hi


@dataclass
class DetectionDensity:
    """Annihilation probability density on a rectangular (X, T) grid."""

    x_grid: np.ndarray
    t_grid: np.ndarray            # detection times T, seconds
    values: np.ndarray            # shape (len(x_grid), len(t_grid)), unit integral
    norm_pre: float               # mass before renormalization (surviving norm)
    renorm: float                 # factor applied so the grid integrates to 1

    def integral(self):
        inner = np.trapezoid(self.values, self.t_grid, axis=1)
        return float(np.trapezoid(inner, self.x_grid))


def detection_density(md: MomentumDensity, wp, geom, ctx, xt_grid):
    """Plate density from a tabulated momentum density, bilinear in (t, p_z).

    xt_grid is a pair (X_grid, T_grid).  Raises ExtentError when the
    anamorphosis image of a grid corner leaves the tabulated (t, p_z)
    rectangle.
    """
    x_grid, t_grid = (np.asarray(a, dtype=float) for a in xt_grid)
    t, p_x, _ = anamorphosis(x_grid, t_grid[0], geom, ctx)
    tau = geom.tau_bar(ctx.g)
    uncovered = []
    for Xc in (x_grid[0], x_grid[-1]):
        for Tc in (t_grid[0], t_grid[-1]):
            tc, _, pzc = anamorphosis(Xc, Tc, geom, ctx)
            if not (md.t_grid[0] <= tc <= md.t_grid[-1]) or not (
                md.p_grid[0] <= pzc <= md.p_grid[-1]
            ):
                uncovered.append((float(Xc), float(Tc)))
    if uncovered:
        raise ExtentError(f"momentum grid does not cover corners {uncovered}")
    values = np.empty((len(x_grid), len(t_grid)))
    jac = ctx.g * ctx.m ** 2 / tau
    it = np.clip(np.searchsorted(md.t_grid, t) - 1, 0, len(md.t_grid) - 2)
    wt = (t - md.t_grid[it]) / (md.t_grid[it + 1] - md.t_grid[it])
    for i, X in enumerate(x_grid):
        _, _, p_z = anamorphosis(X, t_grid, geom, ctx)
        ip = np.clip(np.searchsorted(md.p_grid, p_z) - 1, 0, len(md.p_grid) - 2)
        wq = (p_z - md.p_grid[ip]) / (md.p_grid[ip + 1] - md.p_grid[ip])
        lo = md.values[it[i], ip] * (1 - wq) + md.values[it[i], ip + 1] * wq
        hi = md.values[it[i] + 1, ip] * (1 - wq) + md.values[it[i] + 1, ip + 1] * wq
        values[i] = jac * horizontal_weight(p_x[i], wp, ctx) * (lo * (1 - wt[i]) + hi * wt[i])
    inner = np.trapezoid(values, t_grid, axis=1)
    mass = float(np.trapezoid(inner, x_grid))
    if mass <= 0:
        raise ContractError("detection density has no mass on the requested grid")
    return DetectionDensity(
        x_grid=x_grid, t_grid=t_grid, values=values / mass, norm_pre=mass, renorm=1.0 / mass
    )


class DetectionModel:
    """End-to-end detection density at one acceleration value.

    Wraps basis construction, the anamorphosis and the window-normalized
    event density P_g(X, T).  The momentum rows entering sampling, grids
    and per-event likelihoods are always evaluated at the exact mirror
    time of the requested X, which keeps the fringes coherent even for the
    slowest atoms (a tabulated t axis cannot resolve them there).
    """

    def __init__(self, cfg, g=None, window=None):
        self.cfg = cfg
        self.g = cfg.g0 if g is None else float(g)
        self.ctx = cfg.context(self.g)
        self.wp = cfg.wave_packet()
        self.geom = cfg.geometry()
        self.basis = build_basis(
            self.wp, self.ctx, cfg.n_max, cfg.n_z, cfg.fft_pad, cfg.span_factor, cfg.q_max
        )
        self.tau = self.geom.tau_bar(self.g)
        self.window = detection_window(cfg) if window is None else window
        self.sigma_p = cfg.hbar / (2.0 * cfg.zeta)
        p_lo = cfg.m * (self.window[0] - cfg.d) / self.tau
        p_hi = cfg.m * (self.window[1] - cfg.d) / self.tau
        self.window_mass = _gauss_mass(p_lo, p_hi, cfg.m * cfg.v0, self.sigma_p)
        self.norm = self.basis.survival * self.window_mass

    # -- grids -----------------------------------------------------------

    def x_nodes(self, n=None):
        """Detector columns, log-spaced in X - d to track the t = const/(X-d) chart."""
        n = self.cfg.n_x if n is None else n
        lo, hi = self.window
        return self.cfg.d + np.geomspace(lo - self.cfg.d, hi - self.cfg.d, n)

    def q0_nodes(self, oversample=5.0):
        """Shared vertical-momentum offsets, units of p_g.

        The pitch resolves the fastest eigenfunction oscillation (period
        2 pi / lambda_n_max), which a coarser axis would alias.  The nodes
        deliberately avoid coinciding with the tabulated transform grid:
        finite differences in g across the kinks of the piecewise-linear
        interpolant would corrupt curvature estimates there.
        """
        qw = self.cfg.q_window
        pitch = 2.0 * math.pi / (self.basis.lam.zeros[-1] * oversample)
        n = int(round(2.0 * qw / pitch)) + 1
        return np.linspace(-qw, qw, n)

    def column_rows(self, X, q0=None):
        """Exact momentum rows for detector columns X on the q0 axis."""
        q0 = self.q0_nodes() if q0 is None else q0
        t = self.tau * self.geom.d / (np.asarray(X, dtype=float) - self.geom.d)
        phases = np.exp(-1j * np.outer(t / self.ctx.t_g, self.basis.lam.zeros))
        mask = np.abs(self.basis.q_grid) <= q0[-1] + 1e-9
        qg = self.basis.q_grid[mask]
        rows_tab = np.abs(phases @ (self.basis.c[:, None] * self.basis.chi[:, mask])) ** 2
        # resample the FFT q grid onto the requested q0 axis
        out = np.empty((len(t), len(q0)))
        for i in range(len(t)):
            out[i] = np.interp(q0, qg, rows_tab[i])
        return out

    # -- densities ---------------------------------------------------------

    def logpdf(self, X, T):
        """Window-normalized ln P_g at scattered events; floors off-support points.

        Returns (logp, n_floored).
        """
        X = np.asarray(X, dtype=float)
        T = np.asarray(T, dtype=float)
        t, p_x, p_z = anamorphosis(X, T, self.geom, self.ctx)
        q = p_z / self.ctx.p_g
        dens = self.basis.density_at(t / 1.0, q)  # dimensionless Pi(q)
        lw = -0.5 * ((p_x - self.ctx.m * self.wp.v0) / self.sigma_p) ** 2 - math.log(
            math.sqrt(2.0 * math.pi) * self.sigma_p
        )
        jac = math.log(self.g * self.ctx.m ** 2 / (self.tau * self.ctx.p_g))
        floor = math.log(self.cfg.floor_density)
        raw = np.where(dens > 0, np.log(np.maximum(dens, 1e-300)), -np.inf) + lw + jac
        raw = raw - math.log(self.norm)
        floored = raw < floor
        return np.where(floored, floor, raw), int(np.count_nonzero(floored))

    def pdf_columns(self):
        """Sheared-grid density: (X nodes, q0 nodes, P(X, T(X, q0))).

        T(X, q0) = t(X) + tau + q0 * p_g / (m g); the density includes the
        full Jacobian and window normalization, so that integrating with
        dT = (p_g/(m g)) dq0 gives 1 over the window.
        """
        X = self.x_nodes()
        q0 = self.q0_nodes()
        rows = self.column_rows(X, q0)
        p_x = self.ctx.m * (X - self.geom.d) / self.tau
        w = horizontal_weight(p_x, self.wp, self.ctx)
        jac = self.g * self.ctx.m ** 2 / (self.tau * self.ctx.p_g)
        vals = jac * w[:, None] * rows / self.norm
        return X, q0, vals

    def detection_grid(self, x_grid=None, T_grid=None):
        """Rectangular DetectionDensity evaluated exactly per column.

        The default T grid resolves every fringe across the span of the
        requested columns, so it is only practical for narrow X bands; the
        full window mixes sub-ms fringes with multi-second arrival delays
        and needs the sheared chart of pdf_columns instead.
        """
        if x_grid is None:
            x_grid = self.x_nodes()
        x_grid = np.asarray(x_grid, dtype=float)
        t = self.tau * self.geom.d / (x_grid - self.geom.d)
        if T_grid is None:
            qw = self.cfg.q_window
            dT = self.ctx.t_g / self.cfg.t_steps_per_tg
            lo = t.min() + self.tau - qw * self.ctx.t_g
            hi = t.max() + self.tau + qw * self.ctx.t_g
            T_grid = np.arange(lo, hi + dT, dT)
        T_grid = np.asarray(T_grid, dtype=float)
        p_x = self.ctx.m * (x_grid - self.geom.d) / self.tau
        w = horizontal_weight(p_x, self.wp, self.ctx)
        jac = self.g * self.ctx.m ** 2 / (self.tau * self.ctx.p_g)
        values = np.empty((len(x_grid), len(T_grid)))
        for i in range(len(x_grid)):
            q = (T_grid - t[i] - self.tau) / self.ctx.t_g
            values[i] = jac * w[i] * self.basis.density_at(np.full_like(q, t[i]), q)
        inner = np.trapezoid(values, T_grid, axis=1)
        mass = float(np.trapezoid(inner, x_grid))
        return DetectionDensity(
            x_grid=x_grid,
            t_grid=T_grid,
            values=values / mass,
            norm_pre=mass,
            renorm=1.0 / mass,
        )


def fringe_grid_check(geom: Geometry, ctx: PhysicalContext, lines):
    """Map diagnostic lines between the mirror-edge and plate charts.

    `lines` is a list of ("const_X", X, T_samples) or ("const_T", T,
    X_samples) entries.  Each is returned with its image polyline in the
    (t, p_z) chart; constant-X lines map to constant-t verticals and
    constant-T lines to the constructive-interference ridges.
    """
    out = []
    for kind, value, samples in lines:
        samples = np.asarray(samples, dtype=float)
        if kind == "const_X":
            t, p_x, p_z = anamorphosis(np.full_like(samples, value), samples, geom, ctx)
        elif kind == "const_T":
            t, p_x, p_z = anamorphosis(samples, np.full_like(samples, value), geom, ctx)
        else:
            raise ConfigError(f"unknown line kind {kind!r}")
        out.append({"kind": kind, "value": float(value), "t": t, "p_x": p_x, "p_z": p_z})
    return out
