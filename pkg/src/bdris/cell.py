"""Cell and surface scattering: phase shifter - splitter - phase shifter.

A cell joins a reflecting antenna and a transmitting antenna through a power
splitter. Each antenna contributes an ideal phase shift, so a wave entering
from the reflecting side picks up the reflecting antenna's phase twice on the
way back out, while the transmitted wave picks up each antenna's phase once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfiniteRatio, PhaseUndefined
from .netalg import TwoPortNetwork, cascade, phase_shifter
from .splitter import SplitterState

TWO_PI = 2 * math.pi
_QUANT = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)


@dataclass(frozen=True)
class IdealSplitter:
    """Abstract splitter given by magnitudes and phases of s11 and s21.

    Port 2 is assumed to mirror port 1 (s22 = s11), as for any symmetric
    two-port.
    """

    mag_r: float
    mag_t: float
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if self.mag_r < 0 or self.mag_t < 0:
            raise ValueError("magnitudes must be non-negative")
        if self.mag_r ** 2 + self.mag_t ** 2 > 1 + 1e-12:
            raise ValueError("|s11|^2 + |s21|^2 exceeds 1 (active splitter)")

    @classmethod
    def lossless(cls, ratio: float, c1: float = 0.0) -> "IdealSplitter":
        """Lossless splitter with power ratio ``|s11/s21|^2 = ratio``.

        Losslessness of a symmetric two-port fixes c2 = c1 + 90 deg.
        """
        r = math.sqrt(ratio / (1 + ratio))
        t = math.sqrt(1 / (1 + ratio))
        return cls(r, t, c1, c1 - math.pi / 2)

    @property
    def s(self) -> np.ndarray:
        r = self.mag_r * np.exp(1j * self.c1)
        t = self.mag_t * np.exp(1j * self.c2)
        return np.array([[r, t], [t, r]])

    @property
    def network(self) -> TwoPortNetwork:
        return TwoPortNetwork(self.s)


def _mode_matrix(splitter) -> np.ndarray:
    if isinstance(splitter, SplitterState):
        return np.asarray(splitter.s.s)
    if isinstance(splitter, TwoPortNetwork):
        return np.asarray(splitter.s)
    if isinstance(splitter, IdealSplitter):
        return splitter.s
    raise TypeError(f"unsupported splitter {type(splitter).__name__}")


def _quantize(theta: float, name: str) -> float:
    t = theta % TWO_PI
    for q in _QUANT + (TWO_PI,):
        if abs(t - q) <= 1e-9:
            return q % TWO_PI
    raise ValueError(f"{name}={theta} rad is not one of 0, pi/2, pi, 3pi/2")


@dataclass(frozen=True, eq=False)
class CellConfig:
    splitter: object
    theta1: float = 0.0
    theta2: float = 0.0

    def __post_init__(self):
        _mode_matrix(self.splitter)
        object.__setattr__(self, "theta1", _quantize(self.theta1, "theta1"))
        object.__setattr__(self, "theta2", _quantize(self.theta2, "theta2"))

    @classmethod
    def from_states(cls, splitter, r_state, t_state) -> "CellConfig":
        from .antenna import PhaseState

        return cls(splitter, PhaseState.parse(r_state).phase, PhaseState.parse(t_state).phase)


@dataclass(frozen=True)
class CellScattering:
    phi_r: complex
    phi_t: complex
    phi_r_back: complex

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.phi_r, self.phi_t], [self.phi_t, self.phi_r_back]])


def cell_network(cfg: CellConfig) -> TwoPortNetwork:
    """Total two-port of the cell, built by chaining the three blocks."""
    mode = _mode_matrix(cfg.splitter)
    z0 = cfg.splitter.s.z0 if isinstance(cfg.splitter, SplitterState) else (
        cfg.splitter.z0 if isinstance(cfg.splitter, TwoPortNetwork) else 50.0)
    if isinstance(cfg.splitter, IdealSplitter) or abs(mode[1, 0]) < 1e-12:
        # no circuit to chain (abstract splitter, or no through path): apply the phases directly
        e1, e2 = np.exp(1j * cfg.theta1), np.exp(1j * cfg.theta2)
        s = mode * np.array([[e1 * e1, e1 * e2], [e1 * e2, e2 * e2]])
        return TwoPortNetwork(s, z0)
    return cascade(phase_shifter(cfg.theta1, z0), TwoPortNetwork(mode, z0), phase_shifter(cfg.theta2, z0))


def cell_total_matrix(cfg: CellConfig) -> CellScattering:
    net = cell_network(cfg)
    return CellScattering(net.s11, net.s21, net.s22)


def cell_phases(cfg: CellConfig) -> tuple[float, float]:
    """Reflected and transmitted phase (radians, in [0, 2 pi))."""
    mode = _mode_matrix(cfg.splitter)
    if abs(mode[0, 0]) < 1e-12:
        raise PhaseUndefined("reflection phase undefined: |s11| < 1e-12")
    if abs(mode[1, 0]) < 1e-12:
        raise PhaseUndefined("transmission phase undefined: |s21| < 1e-12")
    c1 = float(np.angle(mode[0, 0]))
    c2 = float(np.angle(mode[1, 0]))
    theta_r = (2 * cfg.theta1 + c1) % TWO_PI
    theta_t = (cfg.theta1 + cfg.theta2 + c2) % TWO_PI
    return theta_r, theta_t


def power_ratio(cfg: CellConfig) -> float:
    """|phi_r / phi_t|^2; the antenna phases cancel."""
    mode = _mode_matrix(cfg.splitter)
    t = abs(mode[1, 0])
    if t == 0:
        raise InfiniteRatio("cell has no transmission path")
    return float((abs(mode[0, 0]) / t) ** 2)


@dataclass(frozen=True, eq=False)
class SurfacePhi:
    m: int
    matrix: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=complex)
        n = 2 * self.m
        if a.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {a.shape}")
        if not np.allclose(a, a.T, rtol=0, atol=1e-12):
            raise ValueError("surface scattering matrix must be symmetric")
        mask = structural_mask(self.m)
        if np.any(a[~mask] != 0):
            raise ValueError("entries outside the diagonal and the +-M off-diagonals")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)


def structural_mask(m: int) -> np.ndarray:
    n = 2 * m
    mask = np.eye(n, dtype=bool)
    i = np.arange(m)
    mask[i, i + m] = True
    mask[i + m, i] = True
    return mask


def assemble_phi(cells) -> SurfacePhi:
    cells = list(cells)
    m = len(cells)
    if m < 1:
        raise ValueError("need at least one cell")
    a = np.zeros((2 * m, 2 * m), dtype=complex)
    for i, c in enumerate(cells):
        a[i, i] = c.phi_r
        a[i + m, i + m] = c.phi_r_back
        a[i, i + m] = a[i + m, i] = c.phi_t
    return SurfacePhi(m, a)
