"""Experiment configuration: defaults, YAML loading, validation, hashing."""

import dataclasses
import hashlib
import json
from dataclasses import dataclass

import yaml

from .context import HBAR, HYDROGEN_MASS, InitialWavePacket, make_context
from .errors import ConfigError


@dataclass
class ExperimentConfig:
    """Full configuration of one simulated measurement campaign.

    Defaults reproduce the headline run: mirror d = 5 cm, fall height
    H = 30 cm, packet h = 10 um / zeta = 0.5 um / v0 = 0.25 m/s, 100 kept
    states, N = 800 events per draw and M = 2300 repeated draws.
    """

    # physical
    m: float = HYDROGEN_MASS
    g0: float = 9.81
    hbar: float = HBAR

    # initial wave packet
    h: float = 10e-6
    zeta: float = 0.5e-6
    v0: float = 0.25

    # geometry
    d: float = 0.05
    H: float = 0.30

    # basis truncation (absorber keeps the first n_max states)
    n_max: int = 100

    # numerical grids
    n_z: int = 2 ** 14          # z samples for the eigenfunction transform
    fft_pad: int = 4            # zero-padding factor of the transform
    span_factor: float = 1.5    # z extent in units of the absorber height
    q_max: float = 64.0         # stored momentum window, units of p_g
    q_window: float = 12.0      # physical momentum window for densities/sampling
    n_x: int = 400              # detector grid columns
    t_steps_per_tg: int = 20    # detector grid rows per gravitational time unit
    x_window_lo: float = 1e-3   # detector window starts at d + x_window_lo
    x_window_hi: float = 0.40   # and ends at d + x_window_hi
    envelope_sigmas: float = 6.0  # horizontal-velocity coverage of the grid

    # statistics
    N: int = 800
    M: int = 2300
    seed: int = 12345
    mode: str = "quantum"       # "quantum" | "classical"

    # detector blur toggle (off by default)
    blur: bool = False
    blur_sigma_x: float = 1e-4
    blur_sigma_t: float = 1e-7

    # likelihood machinery
    scan_points: int = 11
    scan_halfwidth: float = 5e-5        # relative to g0
    scan_max_halfwidth: float = 1e-3
    fit_drop: float = 2.0               # fit window: loglik >= max - fit_drop
    floor_density: float = 1e-30        # floor for events outside support
    fisher_delta: float = 1e-5          # relative finite-difference step in g

    # classical baseline
    classical_zeta: float = 0.5e-6

    def __post_init__(self):
        self.validate()

    def validate(self):
        errs = []
        for name in ("m", "g0", "hbar", "h", "zeta", "d", "H", "n_z", "fft_pad",
                     "q_max", "q_window", "n_x", "t_steps_per_tg", "x_window_lo",
                     "x_window_hi", "N", "M", "scan_points", "scan_halfwidth",
                     "fit_drop", "floor_density", "fisher_delta", "classical_zeta",
                     "envelope_sigmas", "span_factor"):
            if getattr(self, name) <= 0:
                errs.append(f"{name} must be positive")
        if self.v0 < 0:
            errs.append("v0 must be non-negative")
        if not 1 <= self.n_max <= 10 ** 4:
            errs.append("n_max must be in [1, 10^4]")
        if self.mode not in ("quantum", "classical"):
            errs.append(f"mode must be 'quantum' or 'classical', got {self.mode!r}")
        if self.x_window_lo >= self.x_window_hi:
            errs.append("x_window_lo must be below x_window_hi")
        if self.zeta >= self.h:
            errs.append("zeta must be smaller than h")
        if self.H <= 1e3 * self.h:
            errs.append("H must exceed 1000 h for the macroscopic-fall approximation")
        if self.q_window > self.q_max:
            errs.append("q_window cannot exceed q_max")
        if self.scan_points < 5:
            errs.append("scan_points must be at least 5")
        if errs:
            raise ConfigError("invalid configuration: " + "; ".join(errs))
        return self

    # -- derived objects -------------------------------------------------

    def context(self, g=None):
        return make_context(self.m, self.g0 if g is None else g, self.hbar)

    def wave_packet(self):
        return InitialWavePacket(h=self.h, zeta=self.zeta, v0=self.v0)

    def geometry(self):
        from .detector import Geometry

        return Geometry(d=self.d, H=self.H)

    # -- serialization ---------------------------------------------------

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_yaml(cls, path):
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        return cls.from_dict(data)

    def to_yaml(self, path):
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)

    def config_hash(self):
        """Stable hash of every field; identical hash + seed => identical outputs."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)
