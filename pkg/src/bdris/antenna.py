"""2-bit phase-reconfigurable antenna: switch table, diode loads and scattering.

Six PIN-diode switches select one of four radiation phases. In circuit
simulations each switch is replaced by a port terminated with the diode's
equivalent impedance for its on or off state.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLoad
from .pattern import AngleGrid, FieldPattern

# diode equivalent circuit
R_ON = 1.5
R_OFF = 2.5e3
C_OFF = 0.12e-12
L_DIODE = 0.7e-9


class Switch(enum.Enum):
    ON = "on"
    OFF = "off"


class PhaseState(enum.IntEnum):
    """Two-bit antenna state; the integer value is the gene code."""

    S00 = 0
    S01 = 1
    S10 = 2
    S11 = 3

    @property
    def code(self) -> str:
        return format(int(self), "02b")

    @property
    def phase_deg(self) -> float:
        return 90.0 * int(self)

    @property
    def phase(self) -> float:
        return math.pi / 2 * int(self)

    @classmethod
    def parse(cls, x) -> "PhaseState":
        if isinstance(x, PhaseState):
            return x
        if isinstance(x, str):
            x = x.strip()
            if len(x) != 2 or any(ch not in "01" for ch in x):
                raise ValueError(f"invalid 2-bit code {x!r}")
            return cls(int(x, 2))
        return cls(int(x))

    @classmethod
    def from_phase(cls, theta: float) -> "PhaseState":
        k = theta / (math.pi / 2)
        n = round(k)
        if abs(k - n) > 1e-9:
            raise ValueError(f"phase {theta} rad is not a multiple of 90 deg")
        return cls(n % 4)


ON, OFF = Switch.ON, Switch.OFF

SWITCH_TABLE = {
    PhaseState.S00: (ON, OFF, ON, OFF, OFF, OFF),
    PhaseState.S01: (OFF, ON, OFF, OFF, OFF, ON),
    PhaseState.S10: (ON, OFF, OFF, ON, OFF, OFF),
    PhaseState.S11: (OFF, ON, OFF, OFF, ON, OFF),
}

SWITCHES_PER_ANTENNA = 6


def switch_states(state) -> tuple[Switch, ...]:
    return SWITCH_TABLE[PhaseState.parse(state)]


def diode_load(state: Switch, f: float) -> complex:
    if not f > 0:
        raise ValueError(f"frequency must be positive, got {f}")
    w = 2 * math.pi * f
    if Switch(state) is Switch.ON:
        return complex(R_ON, w * L_DIODE)
    zc = 1 / (1j * w * C_OFF)
    return complex(R_OFF * zc / (R_OFF + zc) + 1j * w * L_DIODE)


def state_load_vector(state, f: float) -> np.ndarray:
    z_on, z_off = diode_load(ON, f), diode_load(OFF, f)
    return np.array([z_on if s is ON else z_off for s in switch_states(state)], dtype=complex)


def element_pattern(theta_deg, q: float = 1.0, side: str = "front") -> np.ndarray:
    """cos^q element pattern, zero over the back hemisphere.

    ``side="front"`` radiates into theta < 90 deg and ``"back"`` into
    theta > 90 deg (the transmitting side).
    """
    th = np.radians(np.asarray(theta_deg, dtype=float))
    c = np.cos(th) if side == "front" else -np.cos(th)
    out = np.where(c > 1e-15, np.abs(c) ** q, 0.0)
    return out


@dataclass(frozen=True, eq=False)
class AntennaScatterModel:
    """Single antenna seen as structural plus load-dependent scattering."""

    z_a: complex
    e_structural: FieldPattern
    e_unit: FieldPattern
    i_s: complex = 1.0

    def __post_init__(self):
        if not complex(self.z_a).real > 0:
            raise ValueError(f"antenna impedance must have positive resistance, got {self.z_a}")
        if self.e_structural.grid != self.e_unit.grid:
            raise ValueError("structural and unit-current patterns use different grids")


def conjugate_reflection(z_load, z_a) -> complex:
    """Reflection coefficient referred to the conjugate antenna impedance."""
    z_a = complex(z_a)
    if cmath.isinf(complex(z_load)):
        return 1.0 + 0j
    z_load = complex(z_load)
    den = z_load + z_a.conjugate()
    if abs(den) <= 1e-12 * max(abs(z_a), 1.0):
        raise DegenerateLoad(f"load {z_load} cancels the conjugate antenna impedance")
    return (z_load - z_a.conjugate()) / den


def scattered_field(model: AntennaScatterModel, z_load, grid: AngleGrid | None = None) -> FieldPattern:
    """Field scattered by the antenna for an arbitrary termination.

    ``z_load`` may be ``math.inf`` for an open port.
    """
    g = conjugate_reflection(z_load, model.z_a)
    z_a = complex(model.z_a)
    k = g * z_a * model.i_s / (2 * z_a.real)
    e_str, e_unit = model.e_structural, model.e_unit
    if grid is not None and grid != e_str.grid:
        e_str, e_unit = e_str.select(grid), e_unit.select(grid)
    return FieldPattern(e_str.grid, e_str.values - k * e_unit.values, e_str.f)
