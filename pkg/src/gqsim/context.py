"""Physical scales and initial-state description of the quantum bouncer."""

import warnings
from dataclasses import dataclass

from .errors import ConfigError

#: CODATA reduced Planck constant, J s.
HBAR = 1.054571817e-34

#: Hydrogen (and antihydrogen) atomic mass, kg.
HYDROGEN_MASS = 1.6735e-27


@dataclass(frozen=True)
class PhysicalContext:
    """Mass, hbar, acceleration g and the derived bouncer scales.

    t_g, l_g and p_g are the natural time, length and momentum units of a
    particle bouncing on a mirror in a linear gravity potential.
    """

    m: float
    hbar: float
    g: float
    t_g: float
    l_g: float
    p_g: float


def make_context(m, g, hbar=HBAR):
    if m <= 0 or g <= 0 or hbar <= 0:
        raise ConfigError(f"m, g, hbar must be positive (m={m}, g={g}, hbar={hbar})")
    t_g = (2.0 * hbar / (m * g * g)) ** (1.0 / 3.0)
    l_g = (hbar * hbar / (2.0 * m * m * g)) ** (1.0 / 3.0)
    p_g = hbar / l_g
    return PhysicalContext(m=m, hbar=hbar, g=g, t_g=t_g, l_g=l_g, p_g=p_g)


@dataclass(frozen=True)
class InitialWavePacket:
    """Minimal-uncertainty Gaussian released above the mirror.

    h is the mean height, zeta the position dispersion along both axes and
    v0 the horizontal kick velocity.  The closed-form projection onto the
    bouncer eigenbasis assumes zeta small against h; a warning is issued
    when zeta/h > 0.2 (no hard cutoff is known).
    """

    h: float
    zeta: float
    v0: float

    def __post_init__(self):
        if self.h <= 0 or self.zeta <= 0:
            raise ConfigError("wave packet requires h > 0 and zeta > 0")
        if self.zeta >= self.h:
            raise ConfigError("zeta >= h is outside the validity domain of the projection formula")
        if self.zeta / self.h > 0.2:
            warnings.warn(
                f"zeta/h = {self.zeta / self.h:.3g} > 0.2: closed-form projection "
                "coefficients may be inaccurate",
                stacklevel=2,
            )

    def momentum_dispersion(self, hbar=HBAR):
        """Momentum dispersion of the minimal-uncertainty packet."""
        return hbar / (2.0 * self.zeta)
