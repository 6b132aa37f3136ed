"""Matplotlib renderings of densities, scans and ensemble statistics."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_density_grid",
    "plot_ensemble_histogram",
    "plot_likelihood_scan",
    "plot_momentum_density",
    "plot_plate_columns",
]


def plot_momentum_density(md, path, title=None):
    """Heatmap of the mirror-end momentum density on its (t, p_z) grid."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    mesh = ax.pcolormesh(
        md.t_grid * 1e3, md.p_grid * 1e29, md.values.T, shading="auto", cmap="inferno"
    )
    ax.set_xlabel("time above mirror t [ms]")
    ax.set_ylabel(r"$p_z$ [$10^{-29}$ kg m/s]")
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, label="probability density")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_density_grid(dd, path, title=None):
    """Heatmap of the plate annihilation density on its (X, T) grid."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    mesh = ax.pcolormesh(
        dd.x_grid * 1e2, dd.t_grid, dd.values.T, shading="auto", cmap="inferno"
    )
    ax.set_xlabel("X [cm]")
    ax.set_ylabel("T [s]")
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, label="probability density")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_plate_columns(x_grid, q0, values, path, title=None):
    """Plate density in the sheared chart: columns X, fringe offset q0.

    q0 = (T - t(X) - tau_bar) / t_g removes the column-dependent arrival
    delay, so the fringes appear as horizontal bands; a rectangular (X, T)
    raster at fringe resolution would need millions of rows instead.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    mesh = ax.pcolormesh(
        np.asarray(x_grid) * 1e2, q0, values.T, shading="auto", cmap="inferno"
    )
    ax.set_xlabel("X [cm]")
    ax.set_ylabel(r"$(T - t(X) - \bar\tau)\,/\,t_g$")
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, label="probability density")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_likelihood_scan(scan, path, g0=None, title=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    g = scan.g_values
    ll = scan.loglik
    x = (g / g0 - 1.0) * 1e6 if g0 else g
    ax.plot(x, ll - ll.max(), "o", ms=4)
    if scan.fit is not None:
        a, b, c = scan.fit
        gf = np.linspace(g.min(), g.max(), 400)
        lf = -a * gf ** 2 + b * gf + c
        xf = (gf / g0 - 1.0) * 1e6 if g0 else gf
        ax.plot(xf, lf - ll.max(), "-", lw=1)
    ax.set_xlabel(r"$(g/g_0 - 1) \times 10^6$" if g0 else "g [m/s$^2$]")
    ax.set_ylabel(r"$\ln L - \ln L_{max}$")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ensemble_histogram(res, path, title=None):
    """Histogram of the relative estimates with the fitted Gaussian overlay."""
    fig, ax = plt.subplots(figsize=(6, 4))
    rel = (res.g_hats - res.g0) / res.g0
    widths = np.diff(res.hist_edges)
    centers = 0.5 * (res.hist_edges[1:] + res.hist_edges[:-1])
    ax.bar(centers * 1e6, res.hist_counts, width=widths * 1e6, alpha=0.6, edgecolor="k")
    if res.sigma_g > 0:
        sig = res.sigma_g / res.g0
        mu = float(np.mean(rel))
        x = np.linspace(rel.min(), rel.max(), 400)
        amp = res.hist_counts.max()
        ax.plot(x * 1e6, amp * np.exp(-0.5 * ((x - mu) / sig) ** 2), "r-", lw=1.5)
    ax.set_xlabel(r"$(\hat g/g_0 - 1) \times 10^6$")
    ax.set_ylabel("draws per bin")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
