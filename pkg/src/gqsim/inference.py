"""Maximum-likelihood estimation of g and its uncertainty budget.

The estimator rebuilds the full detection density at every trial g (all
gravitational scales move with g, not only the fall time), evaluates the
per-event log density exactly, fits a parabola to the log-likelihood and
reads off the estimate and its curvature dispersion.  Fisher information
is integrated on a flow-adapted detector grid and the repeated-experiment
Monte Carlo yields the ensemble dispersion of the estimate.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .detector import DetectionModel, detection_window
from .errors import ContractError, NonConcaveError, StepSizeError
from .sampling import EventSet, sample_events

__all__ = [
    "EnsembleResult",
    "EstimateReport",
    "LikelihoodScan",
    "ModelCache",
    "ensemble_run",
    "estimate_g",
    "fisher_information",
    "log_likelihood",
    "quadratic_fit",
    "scan_likelihood",
]


class ModelCache:
    """Per-g detection models sharing one analysis window and basis tables."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.window = detection_window(cfg)
        self._models = {}

    def model(self, g):
        key = float(g)
        if key not in self._models:
            self._models[key] = DetectionModel(self.cfg, g=key, window=self.window)
        return self._models[key]


def log_likelihood(events, g, cfg, cache=None, batch=20000):
    """Sum of ln P_g over the events; empty sets contribute 0."""
    if isinstance(events, EventSet):
        X, T = events.X, events.T
    else:
        arr = np.asarray(events, dtype=float).reshape(-1, 2)
        X, T = arr[:, 0], arr[:, 1]
    if len(X) == 0:
        return 0.0
    model = (cache or ModelCache(cfg)).model(g)
    total = 0.0
    for lo in range(0, len(X), batch):
        lp, _ = model.logpdf(X[lo : lo + batch], T[lo : lo + batch])
        total += float(lp.sum())
    return total


@dataclass
class LikelihoodScan:
    """Log-likelihood samples over trial g values with their parabola fit."""

    g_values: np.ndarray
    loglik: np.ndarray
    fit: tuple = None             # (a, b, c): loglik ~ -a g^2 + b g + c
    fit_points: int = 0


@dataclass
class EstimateReport:
    g_hat: float
    sigma_hat: float
    n_events: int
    fisher_info: float = None     # per-event information I(g0)
    cr_bound: float = None        # 1/(N I), variance bound
    scan: LikelihoodScan = None
    n_floored: int = 0


def quadratic_fit(scan: LikelihoodScan, fit_drop=2.0, g_center=None):
    """Least-squares parabola on the near-maximum scan window.

    Requires at least 5 points with loglik >= max - fit_drop and the
    maximum strictly inside the bracket; raises NonConcaveError when the
    fitted curvature is not negative.
    """
    g = np.asarray(scan.g_values, dtype=float)
    ll = np.asarray(scan.loglik, dtype=float)
    k = int(np.argmax(ll))
    if k in (0, len(g) - 1):
        raise ContractError("scan maximum sits on the bracket edge")
    sel = ll >= ll.max() - fit_drop
    if np.count_nonzero(sel) < 5:
        raise ContractError(
            f"only {np.count_nonzero(sel)} scan points inside the fit window; scan finer"
        )
    g0 = float(np.mean(g[sel])) if g_center is None else float(g_center)
    u = g[sel] - g0
    design = np.column_stack([u * u, u, np.ones_like(u)])
    coef, *_ = np.linalg.lstsq(design, ll[sel], rcond=None)
    a = -coef[0]
    if not a > 0:
        raise NonConcaveError("log-likelihood fit is not concave; adjust the scan window")
    b = coef[1]
    g_hat = g0 + b / (2.0 * a)
    sigma = 1.0 / math.sqrt(2.0 * a)
    # coefficients in the raw-g frame, loglik ~ -a g^2 + b g + c
    b_raw = b + 2.0 * a * g0
    c_raw = coef[2] - a * g0 * g0 - b * g0
    scan.fit = (float(a), float(b_raw), float(c_raw))
    scan.fit_points = int(np.count_nonzero(sel))
    return g_hat, sigma


def scan_likelihood(events, cfg, g_values=None, cache=None):
    if g_values is None:
        w = cfg.scan_halfwidth
        g_values = cfg.g0 * (1.0 + np.linspace(-w, w, cfg.scan_points))
    ll = np.array([log_likelihood(events, g, cfg, cache=cache) for g in g_values])
    return LikelihoodScan(g_values=np.asarray(g_values, dtype=float), loglik=ll)


def estimate_g(events, cfg, cache=None, with_fisher=False):
    """Scan, widen or refine as needed, fit, and report the estimate.

    The fit window is the set of scan points within fit_drop of the
    maximum; when the coarse grid leaves it underpopulated, one
    half-pitch rescan around the maximum repopulates it.  The rescan
    pitch stays comparable to the estimator width on purpose: a much
    finer grid would track fringe-scale wiggles of the log-likelihood
    instead of its envelope.
    """
    cache = cache or ModelCache(cfg)
    halfwidth = cfg.scan_halfwidth
    scan = scan_likelihood(events, cfg, cache=cache)
    while int(np.argmax(scan.loglik)) in (0, len(scan.g_values) - 1):
        halfwidth *= 2.0
        if halfwidth > cfg.scan_max_halfwidth:
            raise ContractError("likelihood maximum outside the maximal scan window")
        g_values = cfg.g0 * (1.0 + np.linspace(-halfwidth, halfwidth, cfg.scan_points))
        scan = scan_likelihood(events, cfg, g_values=g_values, cache=cache)
    for _ in range(3):
        sel = scan.loglik >= scan.loglik.max() - cfg.fit_drop
        k = int(np.argmax(scan.loglik))
        if np.count_nonzero(sel) >= 5 and k not in (0, len(scan.g_values) - 1):
            break
        pitch = scan.g_values[1] - scan.g_values[0]
        g_values = np.linspace(
            scan.g_values[k] - 2.5 * pitch, scan.g_values[k] + 2.5 * pitch,
            max(cfg.scan_points, 11),
        )
        scan = scan_likelihood(events, cfg, g_values=g_values, cache=cache)
    g_hat, sigma = quadratic_fit(scan, fit_drop=cfg.fit_drop, g_center=cfg.g0)
    n = events.n if isinstance(events, EventSet) else len(events)
    _, n_floored = cache.model(cfg.g0).logpdf(
        events.X if isinstance(events, EventSet) else np.asarray(events)[:, 0],
        events.T if isinstance(events, EventSet) else np.asarray(events)[:, 1],
    )
    report = EstimateReport(
        g_hat=float(g_hat), sigma_hat=float(sigma), n_events=int(n), scan=scan,
        n_floored=int(n_floored),
    )
    if with_fisher:
        fi = fisher_information(cfg, cache=cache)
        report.fisher_info = fi["info"]
        report.cr_bound = 1.0 / (n * fi["info"])
    return report


def _grid_logp(model_cache, g, X, Tflat, shape):
    lp, _ = model_cache.model(g).logpdf(X, Tflat)
    return lp.reshape(shape)


def fisher_information(cfg, g=None, delta_rel=None, cache=None, check_steps=True):
    """Per-event Fisher information by grid integration on the detector.

    Uses a flow-adapted grid (log-spaced columns, fringe-resolving
    vertical-momentum offsets) and central finite differences in g.  Both
    expectation forms of the information are returned; a step-halving
    self-consistency check guards against finite-difference noise.
    """
    g = cfg.g0 if g is None else float(g)
    delta_rel = cfg.fisher_delta if delta_rel is None else float(delta_rel)
    cache = cache or ModelCache(cfg)
    model = cache.model(g)
    X = model.x_nodes()
    q0 = model.q0_nodes()
    t = model.tau * cfg.d / (X - cfg.d)
    T = t[:, None] + model.tau + q0[None, :] * model.ctx.t_g
    Xfull = np.repeat(X, len(q0))
    Tflat = T.reshape(-1)
    shape = T.shape
    wx = np.gradient(X)
    wq = np.gradient(q0) * model.ctx.t_g
    W = wx[:, None] * wq[None, :]

    def info_at(delta):
        dg = g * delta
        l0 = _grid_logp(cache, g, Xfull, Tflat, shape)
        lp = _grid_logp(cache, g + dg, Xfull, Tflat, shape)
        lm = _grid_logp(cache, g - dg, Xfull, Tflat, shape)
        P = np.exp(l0)
        Z = float((P * W).sum())
        P /= Z
        score = (lp - lm) / (2.0 * dg)
        i1 = float((score * score * P * W).sum())
        curv = (lp - 2.0 * l0 + lm) / (dg * dg)
        i2 = float((-curv * P * W).sum())
        return i1, i2

    i1, i2 = info_at(delta_rel)
    if check_steps:
        i1_half, _ = info_at(delta_rel / 2.0)
        if abs(i1_half - i1) > 0.10 * abs(i1):
            raise StepSizeError(
                f"Fisher estimate unstable under step halving: {i1:g} vs {i1_half:g}"
            )
    return {"info": i1, "info_second_form": i2, "delta_rel": delta_rel, "g": g}


@dataclass
class EnsembleResult:
    """Repeated-experiment statistics of the estimator."""

    g_hats: np.ndarray
    sigma_hats: np.ndarray
    g0: float
    sigma_g: float                # Gaussian-fit dispersion of g_hat
    sigma_g_raw: float            # sample standard deviation cross-check
    mean_sigma_hat: float
    sigma_hat_dispersion: float   # Gaussian-fit relative spread of sigma_hat
    hist_edges: np.ndarray        # bins of (g_hat - g0)/g0
    hist_counts: np.ndarray
    n_events: int
    n_draws: int
    failures: list = field(default_factory=list)


def _gaussian_fit_histogram(rel, edges, counts):
    from scipy.optimize import curve_fit

    centers = 0.5 * (edges[1:] + edges[:-1])

    def gauss(x, amp, mu, sig):
        return amp * np.exp(-0.5 * ((x - mu) / sig) ** 2)

    # too few draws for a meaningful histogram fit
    if len(np.asarray(rel)) < 10:
        return float(np.std(rel, ddof=1))
    p0 = [counts.max(), float(np.median(rel)), 1.4826 * float(
        np.median(np.abs(rel - np.median(rel))))]
    if p0[2] == 0:
        return float(np.std(rel, ddof=1))
    try:
        popt, _ = curve_fit(gauss, centers, counts, p0=p0, maxfev=10000)
        return abs(popt[2])
    except Exception:
        return float(np.std(rel, ddof=1))


def _dispersion(values):
    """Gaussian-fit spread of a sample, robust to rare pathological draws."""
    values = np.asarray(values, dtype=float)
    if np.ptp(values) == 0.0:
        return 0.0
    counts, edges = np.histogram(values, bins="fd")
    return _gaussian_fit_histogram(values, edges, counts)


def ensemble_run(cfg, M=None, seed=None, n_events=None, cache=None, progress=None):
    """Draw M independent event sets at g0 and estimate each one.

    Failed single-draw estimations are recorded and excluded; the ensemble
    dispersion comes from a Gaussian fit to the Freedman-Diaconis histogram
    of (g_hat - g0)/g0, with the raw standard deviation as cross-check.
    """
    M = cfg.M if M is None else int(M)
    seed = cfg.seed if seed is None else int(seed)
    n_events = cfg.N if n_events is None else int(n_events)
    if M < 2:
        raise ContractError("need at least M = 2 draws")
    cache = cache or ModelCache(cfg)
    sampler = cache.model(cfg.g0)
    seeds = np.random.SeedSequence(seed).generate_state(M)
    g_hats, sigma_hats, failures = [], [], []
    for i in range(M):
        try:
            ev = sample_events(sampler, n_events, int(seeds[i]))
            rep = estimate_g(ev, cfg, cache=cache)
            g_hats.append(rep.g_hat)
            sigma_hats.append(rep.sigma_hat)
        except Exception as exc:  # recorded, excluded, reported
            failures.append({"draw": i, "seed": int(seeds[i]), "error": str(exc)})
        if progress is not None:
            progress(i + 1, M)
    g_hats = np.array(g_hats)
    sigma_hats = np.array(sigma_hats)
    if len(g_hats) < 2:
        raise ContractError(f"too few successful draws ({len(g_hats)}) for a dispersion")
    rel = (g_hats - cfg.g0) / cfg.g0
    if np.ptp(rel) == 0.0:
        edges = np.array([rel[0] - 1e-12, rel[0] + 1e-12])
        counts = np.array([len(rel)])
        sigma_rel = 0.0
    else:
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
