"""Physical scales and wave-packet validation."""

import math

import pytest

from gqsim.context import HBAR, HYDROGEN_MASS, InitialWavePacket, make_context
from gqsim.errors import ConfigError


class TestScales:
    def test_reference_values(self):
        # published bouncer scales at g = 9.81 for the hydrogen mass
        ctx = make_context(HYDROGEN_MASS, 9.81)
        assert abs(ctx.t_g - 1.09e-3) / 1.09e-3 < 0.01
        assert abs(ctx.l_g - 5.87e-6) / 5.87e-6 < 0.01
        assert abs(ctx.p_g - 1.79e-29) / 1.79e-29 < 0.01

    def test_defining_relations(self):
        ctx = make_context(HYDROGEN_MASS, 9.81)
        # t_g^3 = 2 hbar/(m g^2), l_g = g t_g^2 / 2, p_g = m g t_g
        assert math.isclose(ctx.t_g ** 3, 2.0 * ctx.hbar / (ctx.m * ctx.g ** 2), rel_tol=1e-12)
        assert math.isclose(ctx.l_g, 0.5 * ctx.g * ctx.t_g ** 2, rel_tol=1e-12)
        assert math.isclose(ctx.p_g, ctx.m * ctx.g * ctx.t_g, rel_tol=1e-12)

    def test_g_scaling_exponents(self):
        a = make_context(HYDROGEN_MASS, 9.81)
        b = make_context(HYDROGEN_MASS, 2.0 * 9.81)
        assert math.isclose(b.t_g / a.t_g, 2.0 ** (-2.0 / 3.0), rel_tol=1e-12)
        assert math.isclose(b.l_g / a.l_g, 2.0 ** (-1.0 / 3.0), rel_tol=1e-12)
        assert math.isclose(b.p_g / a.p_g, 2.0 ** (1.0 / 3.0), rel_tol=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(ConfigError):
            make_context(-1.0, 9.81)
        with pytest.raises(ConfigError):
            make_context(HYDROGEN_MASS, 0.0)


class TestWavePacket:
    def test_momentum_dispersion(self):
        wp = InitialWavePacket(h=10e-6, zeta=0.5e-6, v0=0.25)
        assert math.isclose(wp.momentum_dispersion(), HBAR / (2 * 0.5e-6), rel_tol=1e-12)

    def test_zeta_above_h_rejected(self):
        with pytest.raises(ConfigError):
            InitialWavePacket(h=1e-6, zeta=2e-6, v0=0.0)
        with pytest.raises(ConfigError):
            InitialWavePacket(h=10e-6, zeta=-1e-6, v0=0.0)

    def test_wide_packet_warns(self):
        with pytest.warns(UserWarning):
            InitialWavePacket(h=10e-6, zeta=3e-6, v0=0.0)
