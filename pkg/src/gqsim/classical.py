"""Classical timing baseline for the acceleration measurement.

A purely ballistic reference experiment: atoms leave the mirror end with a
Gaussian vertical position (mean h, spread zeta) and the minimum-uncertainty
vertical velocity spread hbar/(2 m zeta), fall the macroscopic height H and
the arrival time alone is recorded.  The arrival-time density is

    p(T) = integral dv f_v(v) f_z(g T^2/2 - v T - H) |g T - v|,

the Jacobian |g T - v| converting the landing condition into a density in T.
The same scan-and-parabola estimator as the interference analysis is applied
to the timing data, which isolates the information carried by the fringes.
"""

import math

import numpy as np

from .errors import ConfigError, ContractError
from .inference import (
    EnsembleResult,
    EstimateReport,
    LikelihoodScan,
    _dispersion,
    _gaussian_fit_histogram,
    quadratic_fit,
)
from .sampling import _sample_piecewise_linear

__all__ = [
    "ClassicalModel",
    "classical_ensemble",
    "classical_time_density",
    "estimate_g_classical",
    "sample_classical",
]

# the classical likelihood is orders of magnitude wider than the quantum one
SCAN_HALFWIDTH = 1e-2
SCAN_MAX_HALFWIDTH = 0.3


def classical_time_density(T, g, cfg, zeta=None, n_nodes=24):
    """Arrival-time probability density of the ballistic fall, vectorized in T.

    The landing condition g T^2/2 - v T - H = z makes the z integrand a
    narrow Gaussian (width zeta) under the slowly varying velocity factor,
    so the integral is taken over z with Gauss-Hermite nodes; a velocity
    grid would need micrometer-per-second resolution to catch the peak.
    """
    zeta = cfg.classical_zeta if zeta is None else float(zeta)
    if zeta <= 0:
        raise ConfigError("zeta must be positive")
    T = np.atleast_1d(np.asarray(T, dtype=float))
    sig_v = cfg.hbar / (2.0 * cfg.m * zeta)
    x, w = np.polynomial.hermite.hermgauss(n_nodes)
    z = cfg.h + math.sqrt(2.0) * zeta * x
    Tp = np.where(T > 0, T, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (0.5 * g * Tp[:, None] ** 2 - cfg.H - z[None, :]) / Tp[:, None]
        f_v = np.exp(-0.5 * (v / sig_v) ** 2) / (math.sqrt(2.0 * math.pi) * sig_v)
        jac = np.abs(g * Tp[:, None] - v)
        out = (w[None, :] * f_v * jac).sum(axis=1) / (math.sqrt(math.pi) * Tp)
    return np.where(T > 0, np.nan_to_num(out), 0.0)


class ClassicalModel:
    """Tabulated arrival-time density at one acceleration value."""

    def __init__(self, cfg, g=None, zeta=None, n_t=4001, t_sigmas=10.0):
        self.cfg = cfg
        self.g = cfg.g0 if g is None else float(g)
        self.zeta = cfg.classical_zeta if zeta is None else float(zeta)
        t0 = math.sqrt(2.0 * (cfg.H + cfg.h) / self.g)
        sig_v = cfg.hbar / (2.0 * cfg.m * self.zeta)
        # velocity spread dominates; position spread adds sigma_z/(g t0)
        sig_t = math.hypot(sig_v / self.g, self.zeta / (self.g * t0))
        # arrival times are positive by construction; keep the grid physical
        lo = max(t0 - t_sigmas * sig_t, 0.02 * t0)
        self.t_grid = np.linspace(lo, t0 + t_sigmas * sig_t, n_t)
        dens = classical_time_density(self.t_grid, self.g, cfg, zeta=self.zeta)
        mass = float(np.trapezoid(dens, self.t_grid))
        if mass <= 0:
            raise ContractError("classical arrival-time density has no mass")
        self.density = dens / mass

    def logpdf(self, T):
        """ln p(T) by interpolation on the tabulated grid; floors off-grid points."""
        T = np.asarray(T, dtype=float)
        dens = np.interp(T, self.t_grid, self.density, left=0.0, right=0.0)
        floor = math.log(self.cfg.floor_density)
        raw = np.where(dens > 0, np.log(np.maximum(dens, 1e-300)), -np.inf)
        floored = raw < floor
        return np.where(floored, floor, raw), int(np.count_nonzero(floored))

    def sample(self, n, seed):
        """Arrival times drawn by piecewise-linear inverse CDF, one per event."""
        if n < 1:
            raise ContractError("need n >= 1 events")
        rng = np.random.default_rng(seed)
        return _sample_piecewise_linear(self.t_grid, self.density, rng.uniform(size=n))


def sample_classical(cfg, n, seed, g=None, zeta=None):
    return ClassicalModel(cfg, g=g, zeta=zeta).sample(n, seed)


class _ClassicalCache:
    def __init__(self, cfg, zeta):
        self.cfg = cfg
        self.zeta = zeta
        self._models = {}

    def model(self, g):
        key = float(g)
        if key not in self._models:
            self._models[key] = ClassicalModel(self.cfg, g=key, zeta=self.zeta)
        return self._models[key]


def _loglik(T, g, cache):
    lp, _ = cache.model(g).logpdf(T)
    return float(lp.sum())


def estimate_g_classical(T_events, cfg, zeta=None, cache=None):
    """Scan-and-parabola fit of g from arrival times alone."""
    T = np.asarray(T_events, dtype=float)
    cache = cache or _ClassicalCache(cfg, cfg.classical_zeta if zeta is None else zeta)
    halfwidth = SCAN_HALFWIDTH
    while True:
        g_values = cfg.g0 * (1.0 + np.linspace(-halfwidth, halfwidth, cfg.scan_points))
        ll = np.array([_loglik(T, g, cache) for g in g_values])
        scan = LikelihoodScan(g_values=g_values, loglik=ll)
        if int(np.argmax(ll)) not in (0, len(g_values) - 1):
            break
        halfwidth *= 2.0
        if halfwidth > SCAN_MAX_HALFWIDTH:
            raise ContractError("classical likelihood maximum outside the scan window")
    # refine around the maximum until the fit window is well populated
    for _ in range(4):
        sel = scan.loglik >= scan.loglik.max() - cfg.fit_drop
        k = int(np.argmax(scan.loglik))
        if np.count_nonzero(sel) >= 5 and k not in (0, len(scan.g_values) - 1):
            break
        pitch = scan.g_values[1] - scan.g_values[0]
        g_values = np.linspace(
            scan.g_values[k] - 2.5 * pitch, scan.g_values[k] + 2.5 * pitch,
            max(cfg.scan_points, 11),
        )
        ll = np.array([_loglik(T, g, cache) for g in g_values])
        scan = LikelihoodScan(g_values=g_values, loglik=ll)
    g_hat, sigma = quadratic_fit(scan, fit_drop=cfg.fit_drop, g_center=cfg.g0)
    return EstimateReport(g_hat=float(g_hat), sigma_hat=float(sigma), n_events=len(T), scan=scan)


def classical_ensemble(cfg, M=None, seed=None, n_events=None, zeta=None, progress=None):
    """Repeated classical timing experiments; mirrors the quantum ensemble."""
    M = cfg.M if M is None else int(M)
    seed = cfg.seed if seed is None else int(seed)
    n_events = cfg.N if n_events is None else int(n_events)
    zeta = cfg.classical_zeta if zeta is None else float(zeta)
    if M < 2:
        raise ContractError("need at least M = 2 draws")
    cache = _ClassicalCache(cfg, zeta)
    sampler = cache.model(cfg.g0)
    seeds = np.random.SeedSequence(seed).generate_state(M)
    g_hats, sigma_hats, failures = [], [], []
    for i in range(M):
        try:
            T = sampler.sample(n_events, int(seeds[i]))
            rep = estimate_g_classical(T, cfg, zeta=zeta, cache=cache)
            g_hats.append(rep.g_hat)
            sigma_hats.append(rep.sigma_hat)
        except Exception as exc:
            failures.append({"draw": i, "seed": int(seeds[i]), "error": str(exc)})
        if progress is not None:
            progress(i + 1, M)
    g_hats = np.array(g_hats)
    sigma_hats = np.array(sigma_hats)
    if len(g_hats) < 2:
        raise ContractError(f"too few successful draws ({len(g_hats)}) for a dispersion")
    rel = (g_hats - cfg.g0) / cfg.g0
    counts, edges = np.histogram(rel, bins="fd")
    sigma_rel = _gaussian_fit_histogram(rel, edges, counts)
    return EnsembleResult(
        g_hats=g_hats,
        sigma_hats=sigma_hats,
        g0=cfg.g0,
        sigma_g=float(sigma_rel * cfg.g0),
        sigma_g_raw=float(np.std(g_hats, ddof=1)),
        mean_sigma_hat=float(np.mean(sigma_hats)),
        sigma_hat_dispersion=float(_dispersion(sigma_hats / np.median(sigma_hats))),
        hist_edges=edges,
        hist_counts=counts,
        n_events=n_events,
        n_draws=M,
        failures=failures,
    )
