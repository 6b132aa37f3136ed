"""Special-function and numerical-analysis kernel.

Self-contained evaluation of the Airy function Ai and its derivative on the
real axis, their negative-axis zeros, adaptive quadrature and a unitary
discrete Fourier transform for tabulated wave functions.

Ai is evaluated by three matched methods:

* Maclaurin series for |x| <= 2 (no significant cancellation there),
* divergent asymptotic expansions, optimally truncated, for x > 9 and
  x < -8.25 where their smallest term is below double precision,
* Taylor recentering on a fixed table of anchor points in between.  The
  anchor values are themselves propagated from the trusted regions by the
  recurrence of the defining equation w'' = x w; on the positive axis the
  propagation runs downhill from x = 12, which is the stable direction for
  the recessive solution.
"""

import math

import numpy as np

from .errors import AccuracyError, AliasingError, ConfigError, DomainError

__all__ = [
    "AI_ZERO_1",
    "AiryZeroTable",
    "airy_ai",
    "airy_ai_prime",
    "airy_zeros",
    "fourier_transform_tabulated",
    "inverse_fourier_transform_tabulated",
    "quadrature",
]

_AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)        # Ai(0)
_AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)    # Ai'(0)
_SQRTPI = math.sqrt(math.pi)

#: First zero of Ai on the negative axis, Ai(-AI_ZERO_1) = 0.
AI_ZERO_1 = 2.33810741045976704

_SERIES_CUT = 2.0
_POS_ASYM_CUT = 9.0
_NEG_ASYM_CUT = -8.25
_N_TAYLOR = 26


def _maclaurin(x):
    """Ai and Ai' from the Maclaurin series, valid for small |x|."""
    x = np.asarray(x, dtype=float)
    x3 = x * x * x
    f = np.ones_like(x)
    t = np.ones_like(x)
    for k in range(40):
        t = t * x3 / ((3 * k + 2) * (3 * k + 3))
        f += t
    g = x.copy()
    t = x.copy()
    for k in range(40):
        t = t * x3 / ((3 * k + 3) * (3 * k + 4))
        g += t
    fp = np.zeros_like(x)
    t = 0.5 * x * x
    for k in range(1, 41):
        fp += t
        t = t * x3 * ((k + 1.0) / k) / ((3 * k + 2) * (3 * k + 3))
    gp = np.zeros_like(x)
    t = np.ones_like(x)
    for k in range(41):
        gp += t
        t = t * x3 / ((3 * k + 1) * (3 * k + 3))
    return _AI0 * f + _AIP0 * g, _AI0 * fp + _AIP0 * gp


def _poincare_coeffs(n_terms=40):
    u = np.empty(n_terms + 1)
    v = np.empty(n_terms + 1)
    u[0] = v[0] = 1.0
    for k in range(n_terms):
        u[k + 1] = u[k] * (6 * k + 5) * (6 * k + 3) * (6 * k + 1) / (216.0 * (k + 1) * (2 * k + 1))
    for k in range(1, n_terms + 1):
        v[k] = -u[k] * (6 * k + 1) / (6 * k - 1)
    return u, v


_U, _V = _poincare_coeffs()


def _asym_pos(x):
    """Exponentially decaying asymptotic form, x >= 9."""
    x = np.asarray(x, dtype=float)
    xi = (2.0 / 3.0) * x ** 1.5
    s = np.ones_like(x)
    sp = np.ones_like(x)
    for k in range(1, 30):
        r = (-1.0 / xi) ** k
        s += _U[k] * r
        sp += _V[k] * r
    pref = np.exp(-xi) / (2.0 * _SQRTPI * x ** 0.25)
    return pref * s, -np.exp(-xi) * x ** 0.25 / (2.0 * _SQRTPI) * sp


def _asym_neg(x):
    """Oscillatory asymptotic form, x <= -8.25."""
    z = -np.asarray(x, dtype=float)
    xi = (2.0 / 3.0) * z ** 1.5
    c = np.cos(xi - 0.25 * math.pi)
    s = np.sin(xi - 0.25 * math.pi)
    se = np.zeros_like(z)
    so = np.zeros_like(z)
    pe = np.zeros_like(z)
    po = np.zeros_like(z)
    for k in range(15):
        sgn = -1.0 if k % 2 else 1.0
        se += sgn * _U[2 * k] * xi ** (-2 * k)
        so += sgn * _U[2 * k + 1] * xi ** (-2 * k - 1)
        pe += sgn * _V[2 * k] * xi ** (-2 * k)
        po += sgn * _V[2 * k + 1] * xi ** (-2 * k - 1)
    ai = (c * se + s * so) / (_SQRTPI * z ** 0.25)
    aip = (z ** 0.25 / _SQRTPI) * (s * pe - c * po)
    return ai, aip


def _taylor_coeffs(anchors, y, yp):
    """Taylor coefficients about each anchor for a solution of w'' = x w."""
    tab = np.zeros((len(anchors), _N_TAYLOR))
    tab[:, 0] = y
    tab[:, 1] = yp
    for n in range(_N_TAYLOR - 2):
        prev = tab[:, n - 1] if n >= 1 else 0.0
        tab[:, n + 2] = (anchors * tab[:, n] + prev) / ((n + 1) * (n + 2))
    return tab


def _taylor_eval(coeffs, h):
    y = np.zeros_like(h)
    yp = np.zeros_like(h)
    for n in range(_N_TAYLOR - 1, -1, -1):
        y = y * h + coeffs[..., n]
    for n in range(_N_TAYLOR - 1, 0, -1):
        yp = yp * h + n * coeffs[..., n]
    return y, yp


def _build_anchor_table():
    anchors, ys, yps = [], [], []

    def march(start, stop, y, yp):
        a = start
        anchors.append(a)
        ys.append(y)
        yps.append(yp)
        step = -0.5
        while a + step >= stop - 1e-12:
            tab = _taylor_coeffs(np.array([a]), np.array([y]), np.array([yp]))
            y, yp = _taylor_eval(tab[0], np.array(step))
            y, yp = float(y), float(yp)
            a += step
            anchors.append(a)
            ys.append(y)
            yps.append(yp)

    y0, yp0 = _asym_pos(np.array([12.0]))
    march(12.0, 2.0, float(y0[0]), float(yp0[0]))
    y0, yp0 = _maclaurin(np.array([-2.0]))
    march(-2.0, -9.0, float(y0[0]), float(yp0[0]))
    anchors = np.array(anchors)
    return anchors, _taylor_coeffs(anchors, np.array(ys), np.array(yps))


_ANCHORS, _ANCHOR_TAB = _build_anchor_table()


def _airy_both(x):
    """Vectorized (Ai, Ai') for finite real arguments."""
    x = np.asarray(x, dtype=float)
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    near = np.abs(x) <= _SERIES_CUT
    pos = x > _POS_ASYM_CUT
    neg = x < _NEG_ASYM_CUT
    mid = ~(near | pos | neg)
    if near.any():
        ai[near], aip[near] = _maclaurin(x[near])
    if pos.any():
        ai[pos], aip[pos] = _asym_pos(x[pos])
    if neg.any():
        ai[neg], aip[neg] = _asym_neg(x[neg])
    if mid.any():
        xm = x[mid]
        idx = np.argmin(np.abs(xm[:, None] - _ANCHORS[None, :]), axis=1)
        ai[mid], aip[mid] = _taylor_eval(_ANCHOR_TAB[idx], xm - _ANCHORS[idx])
    return ai, aip


def _check_finite(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Airy argument must be finite")
    return arr


def airy_ai(x):
    """Airy function Ai(x) for real x, scalar or array."""
    arr = _check_finite(x)
    ai, _ = _airy_both(np.atleast_1d(arr))
    return float(ai[0]) if arr.ndim == 0 else ai


def airy_ai_prime(x):
    """Derivative Ai'(x) for real x, scalar or array."""
    arr = _check_finite(x)
    _, aip = _airy_both(np.atleast_1d(arr))
    return float(aip[0]) if arr.ndim == 0 else aip


class AiryZeroTable:
    """Ordered positive numbers lambda_n with Ai(-lambda_n) = 0."""

    def __init__(self, zeros):
        zeros = np.asarray(zeros, dtype=float)
        if zeros.ndim != 1 or len(zeros) < 1:
            raise ConfigError("zero table must be a non-empty 1-D array")
        if not np.all(np.diff(zeros) > 0):
            raise ConfigError("Airy zeros must be strictly increasing")
        self.zeros = zeros

    def __len__(self):
        return len(self.zeros)

    def __getitem__(self, i):
        return self.zeros[i]

    def ai_prime(self):
        """Ai'(-lambda_n), the normalization denominators of the eigenbasis."""
        return airy_ai_prime(-self.zeros)


def airy_zero_seeds(n_max):
    """Asymptotic seeds for the first n_max negative-axis zeros of Ai."""
    n = np.arange(1, n_max + 1)
    return (3.0 * math.pi * (4.0 * n - 1.0) / 8.0) ** (2.0 / 3.0)


def airy_zeros(n_max):
    """First n_max zeros of Ai, polished by Newton iteration from the seeds."""
    if not (1 <= int(n_max) <= 10 ** 4) or int(n_max) != n_max:
        raise ConfigError(f"n_max must be an integer in [1, 10^4], got {n_max!r}")
    lam = airy_zero_seeds(int(n_max))
    for _ in range(30):
        ai, aip = _airy_both(-lam)
        # d/dlam Ai(-lam) = -Ai'(-lam)
        step = ai / aip
        lam = lam + step
        if np.max(np.abs(step)) < 1e-13:
            break
    else:
        raise AccuracyError("Newton polishing of Airy zeros did not converge", lam)
    return AiryZeroTable(lam)


def quadrature(f, a, b, tol=1e-10):
    """Adaptive integral of f on [a, b] with absolute tolerance tol.

    Thin wrapper over scipy's adaptive Gauss-Kronrod integrator; raises
    AccuracyError carrying the best estimate when the reported error bound
    exceeds the request.
    """
    from scipy.integrate import quad

    if not a < b:
        raise DomainError(f"integration bounds must satisfy a < b, got [{a}, {b}]")
    res = quad(f, a, b, epsabs=tol, epsrel=0.0, limit=400, full_output=1)
    value, err = res[0], res[1]
    if len(res) > 3:
        raise AccuracyError(f"quadrature did not converge: {res[3]}", value)
    if err > 10 * tol:
        raise AccuracyError(f"quadrature error estimate {err:g} above tol {tol:g}", value)
    return value


def fourier_transform_tabulated(samples, dz, z0=0.0, hbar=1.0, pad=1, boundary_tol=1e-12):
    """Unitary momentum-space transform of a uniformly tabulated function.

    Returns (p, f_tilde) with f_tilde(p) = (2 pi hbar)^(-1/2) * integral of
    f(z) exp(-i p z / hbar) dz, p sorted ascending on the conjugate grid.
    The samples must be negligible at both ends of the grid; `pad`
    zero-pads the transform by that factor to refine the p step.
    """
    samples = np.asarray(samples)
    if samples.ndim != 1 or len(samples) < 2 ** 10:
        raise ConfigError("need a 1-D array of at least 2^10 samples")
    peak = np.max(np.abs(samples))
    if peak > 0 and max(abs(samples[0]), abs(samples[-1])) > boundary_tol * peak:
        raise AliasingError("samples not negligible at the grid boundary")
    n_fft = len(samples) * int(pad)
    spec = np.fft.fft(samples, n=n_fft) * dz / math.sqrt(2.0 * math.pi * hbar)
    p = 2.0 * math.pi * hbar * np.fft.fftfreq(n_fft, d=dz)
    if z0 != 0.0:
        spec = spec * np.exp(-1j * p * z0 / hbar)
    order = np.argsort(p)
    return p[order], spec[order]


def inverse_fourier_transform_tabulated(p, f_tilde, z_grid, hbar=1.0):
    """Inverse of the unitary convention on an arbitrary z grid (direct sum)."""
    p = np.asarray(p, dtype=float)
    dp = np.gradient(p)
    phase = np.exp(1j * np.outer(np.asarray(z_grid, dtype=float), p) / hbar)
    return phase @ (np.asarray(f_tilde) * dp) / math.sqrt(2.0 * math.pi * hbar)
