"""Free-fall anamorphosis, detection window and plate densities."""

import math

import numpy as np
import pytest

from gqsim.detector import (
    DetectionModel,
    Geometry,
    anamorphosis,
    anamorphosis_inverse,
    detection_density,
    detection_window,
    fringe_grid_check,
    horizontal_weight,
)
from gqsim.basis import momentum_density
from gqsim.errors import ConfigError, DomainError, ExtentError


class TestAnamorphosis:
    def test_tau_bar(self, cfg):
        # sqrt(2 * 0.30 / 9.81)
        assert math.isclose(cfg.geometry().tau_bar(9.81), 0.24731, rel_tol=1e-4)

    def test_hand_computed_point(self, cfg, model):
        # X - d = 0.05 at v = 1 m/s crossing: t = tau d/(X-d), p_x = m(X-d)/tau
        geom, ctx = model.geom, model.ctx
        tau = geom.tau_bar(ctx.g)
        X, T = 0.1, 0.5
        t, p_x, p_z = anamorphosis(X, T, geom, ctx)
        assert math.isclose(float(t), tau * 0.05 / 0.05, rel_tol=1e-12)
        assert math.isclose(float(p_x), ctx.m * 0.05 / tau, rel_tol=1e-12)
        assert math.isclose(float(p_z), ctx.m * ctx.g * (T - tau - t), rel_tol=1e-10)

    def test_round_trip(self, model, rng):
        geom, ctx = model.geom, model.ctx
        X = rng.uniform(0.06, 0.3, 100)
        T = rng.uniform(0.3, 3.0, 100)
        t, p_x, p_z = anamorphosis(X, T, geom, ctx)
        X2, T2 = anamorphosis_inverse(t, p_x, p_z, geom, ctx)
        assert np.max(np.abs(X2 - X)) < 1e-12
        assert np.max(np.abs(T2 - T)) < 1e-12

    def test_time_momentum_differential_identity(self, model):
        # along the mirror-edge chart, |dt/t| = |dp_x/p_x| = |dX/(X-d)|
        geom, ctx = model.geom, model.ctx
        X = 0.12
        dX = 1e-9
        t1, p1, _ = anamorphosis(X, 1.0, geom, ctx)
        t2, p2, _ = anamorphosis(X + dX, 1.0, geom, ctx)
        rel_x = dX / (X - geom.d)
        assert math.isclose(abs((t2 - t1) / t1), rel_x, rel_tol=1e-6)
        assert math.isclose(abs((p2 - p1) / p1), rel_x, rel_tol=1e-6)

    def test_x_below_mirror_end_rejected(self, model):
        with pytest.raises(DomainError):
            anamorphosis(model.geom.d, 1.0, model.geom, model.ctx)

    def test_geometry_validation(self):
        with pytest.raises(ConfigError):
            Geometry(d=-1.0, H=0.3)


class TestWindow:
    def test_window_inside_configured_bounds(self, cfg):
        lo, hi = detection_window(cfg)
        assert cfg.d < lo < hi <= cfg.d + cfg.x_window_hi

    def test_empty_window_rejected(self, cfg):
        bad = cfg.replace(v0=5.0, x_window_hi=0.01)
        with pytest.raises(ConfigError):
            detection_window(bad)

    def test_horizontal_weight_normalized(self, model):
        p = np.linspace(-10, 10, 20001) * model.sigma_p + model.ctx.m * model.wp.v0
        w = horizontal_weight(p, model.wp, model.ctx)
        assert abs(np.trapezoid(w, p) - 1.0) < 1e-9


class TestDetectionModel:
    def test_pre_normalization_mass_equals_survival(self, model, cfg):
        # plate mass before renormalization = surviving norm times the
        # horizontal window coverage, integrated on the sheared chart
        X, q0, vals = model.pdf_columns()
        inner = np.trapezoid(vals * model.norm, q0 * model.ctx.t_g, axis=1)
        mass = np.trapezoid(inner, X)
        expected = model.basis.survival * model.window_mass
        assert abs(mass - expected) / expected < 1e-3

    def test_narrow_band_grid_mass(self, model, cfg):
        # rectangular grid on a narrow X band: pre-normalization mass equals
        # the surviving norm times the band's envelope coverage
        from gqsim.detector import _gauss_mass

        x_grid = np.linspace(0.10, 0.12, 81)
        dd = model.detection_grid(x_grid=x_grid)
        p_lo = cfg.m * (x_grid[0] - cfg.d) / model.tau
        p_hi = cfg.m * (x_grid[-1] - cfg.d) / model.tau
        band = _gauss_mass(p_lo, p_hi, cfg.m * cfg.v0, model.sigma_p)
        expected = model.basis.survival * band
        assert abs(dd.norm_pre - expected) / expected < 2e-3
        assert abs(dd.integral() - 1.0) < 1e-6

    def test_pdf_columns_unit_mass(self, model):
        X, q0, vals = model.pdf_columns()
        dT = model.ctx.t_g
        inner = np.trapezoid(vals, q0 * dT, axis=1)
        mass = np.trapezoid(inner, X)
        assert abs(mass - 1.0) < 1e-3

    def test_logpdf_matches_columns(self, model):
        # the sampling chart (linear resampling of the tabulated rows) and
        # the likelihood path (cubic interpolation) agree exactly on the
        # table nodes and at interpolation accuracy in between
        X, q0, vals = model.pdf_columns()
        i = 57
        t = model.tau * model.geom.d / (X[i] - model.geom.d)
        sub = model.basis.q_grid[np.abs(model.basis.q_grid) <= 8.0]
        # keep max(nodes) at the window edge: column_rows masks its table
        # at the last requested offset
        nodes = np.concatenate([sub[50:-50:173], sub[-1:]])
        row = model.column_rows(np.array([X[i]]), nodes)[0]
        T = t + model.tau + nodes * model.ctx.t_g
        lp, n_floored = model.logpdf(np.full_like(nodes, X[i]), T)
        assert n_floored == 0
        from gqsim.detector import horizontal_weight

        p_x = model.ctx.m * (X[i] - model.geom.d) / model.tau
        w = horizontal_weight(p_x, model.wp, model.ctx)
        jac = model.g * model.ctx.m ** 2 / (model.tau * model.ctx.p_g)
        expected = jac * w * row / model.norm
        assert np.max(np.abs(np.exp(lp) / expected - 1.0)) < 1e-9
        # off-node, the two interpolants differ only at the few-percent level
        j = 411
        Toff = t + model.tau + q0[j] * model.ctx.t_g
        lp_off, _ = model.logpdf(np.array([X[i]]), np.array([Toff]))
        assert math.isclose(math.exp(lp_off[0]), vals[i, j], rel_tol=0.05)

    def test_logpdf_floors_off_support(self, model, cfg):
        lp, n_floored = model.logpdf(np.array([0.06]), np.array([100.0]))
        assert n_floored == 1
        assert lp[0] == pytest.approx(math.log(cfg.floor_density))

    def test_constant_T_ridges(self, cfg, model):
        # bright interference ridges run along constant detection time: two
        # nearby columns are much more correlated at fixed T than at fixed
        # phase q0 (config with a strong horizontal kick populates late t)
        kcfg = cfg.replace(v0=0.8)
        kmodel = DetectionModel(kcfg)
        X1, X2 = 0.250, 0.251
        geom, ctx = kmodel.geom, kmodel.ctx
        t1 = kmodel.tau * geom.d / (X1 - geom.d)
        t2 = kmodel.tau * geom.d / (X2 - geom.d)
        T = np.linspace(
            max(t1, t2) + kmodel.tau + 2 * ctx.t_g,
            min(t1, t2) + kmodel.tau + 10 * ctx.t_g,
            3001,
        )
        pT1 = np.exp(kmodel.logpdf(np.full_like(T, X1), T)[0])
        pT2 = np.exp(kmodel.logpdf(np.full_like(T, X2), T)[0])
        corr_T = np.corrcoef(pT1, pT2)[0, 1]
        q = np.linspace(2.0, 10.0, 3001)
        Tq1 = t1 + kmodel.tau + q * ctx.t_g
        Tq2 = t2 + kmodel.tau + q * ctx.t_g
        pq1 = np.exp(kmodel.logpdf(np.full_like(q, X1), Tq1)[0])
        pq2 = np.exp(kmodel.logpdf(np.full_like(q, X2), Tq2)[0])
        corr_q = np.corrcoef(pq1, pq2)[0, 1]
        assert corr_T > 0.85
        assert corr_T - corr_q > 0.2

    def test_q0_pitch_resolves_fastest_fringe(self, model, cfg):
        q0 = model.q0_nodes()
        pitch = q0[1] - q0[0]
        period = 2.0 * math.pi / model.basis.lam.zeros[-1]
        assert pitch < period / 4.0
        assert q0[0] == -cfg.q_window and q0[-1] == cfg.q_window


class TestGridDensity:
    def test_bilinear_grid_agrees_with_exact(self, model, cfg):
        # rectangular-momentum-table path vs exact per-column evaluation
        # narrow X band: a rectangular (X, T) patch must fit inside the
        # tabulated q window together with the column arrival-time spread
        x_grid = np.linspace(0.118, 0.120, 41)
        t_lo = model.tau * cfg.d / (x_grid[-1] - cfg.d)
        t_hi = model.tau * cfg.d / (x_grid[0] - cfg.d)
        T_grid = np.linspace(
            t_lo + model.tau - 6 * model.ctx.t_g,
            t_hi + model.tau + 6 * model.ctx.t_g,
            301,
        )
        # t pitch must resolve the lambda_100/t_g fringe phase rate
        t_tab = np.linspace(0.95 * t_lo, 1.05 * t_hi, 20001)
        md = momentum_density(model.basis, model.ctx, t_tab, q_window=cfg.q_window)
        dd = detection_density(md, model.wp, model.geom, model.ctx, (x_grid, T_grid))
        exact = model.detection_grid(x_grid=x_grid, T_grid=T_grid)
        # both unit-normalized on the same grid; residual is the linear vs
        # cubic momentum-table interpolation difference at the sharpest fringes
        diff = np.abs(dd.values - exact.values)
        l1 = np.trapezoid(np.trapezoid(diff, T_grid, axis=1), x_grid)
        assert l1 < 0.02
        assert diff.max() / exact.values.max() < 0.02

    def test_uncovered_corner_raises(self, model, cfg):
        t_tab = np.linspace(0.3, 0.5, 101)
        md = momentum_density(model.basis, model.ctx, t_tab, q_window=cfg.q_window)
        x_grid = np.linspace(0.06, 0.3, 11)   # maps far outside t_tab
        T_grid = np.linspace(0.4, 0.9, 11)
        with pytest.raises(ExtentError):
            detection_density(md, model.wp, model.geom, model.ctx, (x_grid, T_grid))


class TestFringeCheck:
    def test_line_mapping(self, model):
        T_samples = np.linspace(0.5, 0.6, 5)
        X_samples = np.linspace(0.1, 0.2, 5)
        out = fringe_grid_check(model.geom, model.ctx, [
            ("const_X", 0.1, T_samples),
            ("const_T", 0.6, X_samples),
        ])
        # constant X maps to a single mirror time
        assert np.ptp(out[0]["t"]) < 1e-12
        # constant T maps to a monotone ridge in (t, p_z)
        assert np.all(np.diff(out[1]["t"]) < 0)
        with pytest.raises(ConfigError):
            fringe_grid_check(model.geom, model.ctx, [("diagonal", 0.1, X_samples)])
