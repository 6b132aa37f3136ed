"""Gravitational-quantum-state eigenbasis of the bouncing atom.

Eigenfunctions in position space are truncated, shifted Airy functions; in
momentum space they are tabulated once on a dimensionless grid q = p/p_g
(the shape of psi_tilde_n is independent of g, only the scales move) and
reused for every acceleration value.
"""

import math
from dataclasses import dataclass

import numpy as np

from .context import InitialWavePacket, PhysicalContext
from .errors import ConfigError, ContractError
from .special import (
    AiryZeroTable,
    airy_ai,
    airy_zeros,
    fourier_transform_tabulated,
)

__all__ = [
    "GqsBasis",
    "MomentumDensity",
    "build_basis",
    "cross_density",
    "eigen_momentum",
    "momentum_density",
    "project_coefficients",
]

# memo of dimensionless momentum eigenfunction tables, keyed by grid layout
_CHI_CACHE = {}


def dimensionless_eigen_table(n_max, n_z=2 ** 14, pad=4, span_factor=1.5, q_max=64.0):
    """Tabulate chi_n(q), the momentum transform of the n-th eigenfunction.

    chi_n(q) = (2 pi)^(-1/2) * integral_0^inf Ai(u - lambda_n)/Ai'(-lambda_n)
    exp(-i q u) du, unit-normalized on the stored window.  Returns
    (zero_table, q_grid, chi) with chi of shape (n_max, len(q_grid)).
    """
    key = (n_max, n_z, pad, float(span_factor), float(q_max))
    if key in _CHI_CACHE:
        return _CHI_CACHE[key]
    lam = airy_zeros(n_max)
    aip = lam.ai_prime()
    # at least 15 units past the last turning point so Ai has decayed
    u_max = max(span_factor * lam[-1], lam[-1] + 15.0)
    du = u_max / n_z
    u = np.arange(n_z) * du
    chi_rows = []
    q_grid = None
    for n in range(n_max):
        psi = airy_ai(u - lam[n]) / aip[n]
        q, ft = fourier_transform_tabulated(psi, du, pad=pad, boundary_tol=1e-10)
        if q_grid is None:
            sel = np.abs(q) <= q_max
            q_grid = q[sel]
        chi_rows.append(ft[sel])
    chi = np.array(chi_rows)
    # remove the residual discretization error from the norm
    norms = np.sqrt(np.trapezoid(np.abs(chi) ** 2, q_grid, axis=1))
    chi /= norms[:, None]
    result = (lam, q_grid, chi)
    _CHI_CACHE[key] = result
    return result


def project_coefficients(wp: InitialWavePacket, ctx: PhysicalContext, n_max, zero_table=None):
    """Closed-form projection coefficients of the Gaussian packet.

    Exact Gaussian-Airy convolution identity up to the neglected z < 0 tail
    of the Gaussian, hence accurate whenever zeta << h.
    """
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    lam = zero_table if zero_table is not None else airy_zeros(n_max)
    lam_v = lam.zeros[:n_max]
    aip = lam.ai_prime()[:n_max]
    zl = wp.zeta / ctx.l_g
    hl = wp.h / ctx.l_g
    arg = hl - lam_v + zl ** 4
    return (
        math.sqrt(zl)
        * (8.0 * math.pi) ** 0.25
        / aip
        * airy_ai(arg)
        * np.exp(zl ** 2 * (hl - lam_v + (2.0 / 3.0) * zl ** 4))
    )


def eigen_momentum(n, ctx: PhysicalContext, n_z=2 ** 14, pad=4, span_factor=1.5, q_max=64.0):
    """Momentum-space eigenfunction psi_tilde_n on the conjugate grid.

    Returns (p_z, psi_tilde) in SI units, unit norm.  n is 1-based.
    """
    if n < 1:
        raise ConfigError("state index n is 1-based")
    lam, q, chi = dimensionless_eigen_table(int(n), n_z, pad, span_factor, q_max)
    return q * ctx.p_g, chi[n - 1] / math.sqrt(ctx.p_g)


def cross_density(n, m, ctx: PhysicalContext, **table_kwargs):
    """pi_{n,m}(p_z) = psi_tilde_n(p_z) * conj(psi_tilde_m(p_z))."""
    top = max(int(n), int(m))
    lam, q, chi = dimensionless_eigen_table(top, **table_kwargs)
    return q * ctx.p_g, chi[n - 1] * np.conj(chi[m - 1]) / ctx.p_g


@dataclass
class GqsBasis:
    """Truncated eigenbasis with packet coefficients and momentum tables.

    Immutable after construction; chi holds the dimensionless momentum
    eigenfunctions on q_grid = p_z/p_g.
    """

    ctx: PhysicalContext
    wp: InitialWavePacket
    n_max: int
    lam: AiryZeroTable
    c: np.ndarray
    q_grid: np.ndarray
    chi: np.ndarray

    @property
    def survival(self):
        """Norm kept by the absorber truncation, sum of |c_n|^2."""
        return float(np.sum(np.abs(self.c) ** 2))

    def psi_tilde(self, n):
        """Dimensionful momentum eigenfunction of state n (1-based)."""
        return self.q_grid * self.ctx.p_g, self.chi[n - 1] / math.sqrt(self.ctx.p_g)

    def momentum_rows(self, t, q_sel=None):
        """Momentum probability density at times t (s), dimensionless q axis.

        Returns (q, rows) with rows[i] = |sum_n c_n chi_n(q) e^{-i lambda_n
        t_i/t_g}|^2; integral over q equals the surviving norm.  Evaluated
        as sum-then-square, O(n_max) per grid point.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if q_sel is None:
            q = self.q_grid
            chi = self.chi
        else:
            mask = np.abs(self.q_grid) <= q_sel
            q = self.q_grid[mask]
            chi = self.chi[:, mask]
        phases = np.exp(-1j * np.outer(t / self.ctx.t_g, self.lam.zeros))
        amp = phases @ (self.c[:, None] * chi)
        return q, np.abs(amp) ** 2

    def density_at(self, t, q):
        """Exact density at scattered dimensionless (t, q) points.

        chi_n is interpolated in q with a 4-point cubic (the derivative
        jumps of a linear interpolant would contaminate finite-difference
        curvatures of the log density); the time phases are exact.
        """
        t = np.asarray(t, dtype=float)
        q = np.asarray(q, dtype=float)
        qg = self.q_grid
        inside = (q >= qg[0]) & (q <= qg[-1])
        qc = np.clip(q, qg[0], qg[-1])
        i = np.clip(np.searchsorted(qg, qc) - 1, 1, len(qg) - 3)
        w = (qc - qg[i]) / (qg[i + 1] - qg[i])
        wm1 = w - 1.0
        wm2 = w - 2.0
        wp1 = w + 1.0
        chie = (
            self.chi[:, i - 1] * (-w * wm1 * wm2 / 6.0)
            + self.chi[:, i] * (wp1 * wm1 * wm2 / 2.0)
            + self.chi[:, i + 1] * (-w * wp1 * wm2 / 2.0)
            + self.chi[:, i + 2] * (w * wp1 * wm1 / 6.0)
        )
        phases = np.exp(-1j * self.lam.zeros[:, None] * (t[None, :] / self.ctx.t_g))
        amp = np.einsum("n,nk,nk->k", self.c.astype(complex), phases, chie)
        out = np.abs(amp) ** 2
        out[~inside] = 0.0
        return out


def build_basis(wp, ctx, n_max=100, n_z=2 ** 14, pad=4, span_factor=1.5, q_max=64.0):
    lam, q_grid, chi = dimensionless_eigen_table(n_max, n_z, pad, span_factor, q_max)
    c = project_coefficients(wp, ctx, n_max, zero_table=lam)
    return GqsBasis(ctx=ctx, wp=wp, n_max=n_max, lam=lam, c=c, q_grid=q_grid, chi=chi)


@dataclass
class MomentumDensity:
    """Momentum probability density at the mirror end on a (t, p_z) grid."""

    t_grid: np.ndarray
    p_grid: np.ndarray
    values: np.ndarray            # shape (len(t_grid), len(p_grid)), >= 0
    survival: float               # sum of |c_n|^2 of the generating basis

    def total_per_t(self):
        """Integral over p_z at each time; constant in t up to truncation."""
        return np.trapezoid(self.values, self.p_grid, axis=1)


def momentum_density(basis: GqsBasis, ctx: PhysicalContext, t_grid, p_grid=None, q_window=12.0):
    """Evaluate the time-dependent momentum density on a rectangular grid."""
    if ctx is not basis.ctx and not np.isclose(ctx.g, basis.ctx.g):
        raise ContractError("context does not match the basis scales")
    t_grid = np.asarray(t_grid, dtype=float)
    if p_grid is None:
        q, rows = basis.momentum_rows(t_grid, q_sel=q_window)
        p_grid = q * ctx.p_g
        values = rows / ctx.p_g
    else:
        p_grid = np.asarray(p_grid, dtype=float)
        q = p_grid / ctx.p_g
        if q.min() < basis.q_grid[0] or q.max() > basis.q_grid[-1]:
            raise ContractError("requested p grid exceeds the tabulated window")
        values = np.empty((len(t_grid), len(p_grid)))
        for i, t in enumerate(t_grid):
            values[i] = basis.density_at(np.full_like(q, t), q) / ctx.p_g
    if values.min() < -1e-10:
        raise ContractError(f"momentum density significantly negative: {values.min():g}")
    np.clip(values, 0.0, None, out=values)
    return MomentumDensity(t_grid=t_grid, p_grid=p_grid, values=values, survival=basis.survival)
