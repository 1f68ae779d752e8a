"""Tunable series-impedance power splitter.

The splitter is a single impedance ``Z`` placed in series between two
``z0`` lines. ``Z`` comes from a varactor (series ``L_s``, ``R_s``) shunted
by a bias inductor ``L_c``; tuning the varactor capacitance moves ``|Z|``
through a parallel resonance and therefore sweeps the reflected/transmitted
power ratio.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from functools import cached_property, lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DegenerateCircuit, InfiniteRatio, NonPassive, OutOfBand, SingularConversion, Unachievable
from .netalg import Z0, TwoPortNetwork, s_to_z

C_MIN = 0.35e-12
C_MAX = 3.2e-12
# datasheet bias range that the capacitance range corresponds to
V_AT_C_MIN = -20.0
V_AT_C_MAX = 0.0

BAND = (2.3e9, 2.5e9)


@dataclass(frozen=True)
class VaractorCircuit:
    """Varactor with its parasitics and the parallel bias inductor."""

    c_j0: float = C_MAX
    l_s: float = 0.7e-9
    r_s: float = 2.5
    l_c: float = 3.9e-9

    def __post_init__(self):
        if not self.c_j0 > 0:
            raise ValueError(f"c_j0 must be positive, got {self.c_j0}")
        if self.l_s < 0 or self.r_s < 0:
            raise ValueError("l_s and r_s must be non-negative")
        if not self.l_c > 0:
            raise ValueError(f"l_c must be positive, got {self.l_c}")

    def with_capacitance(self, c: float) -> "VaractorCircuit":
        return replace(self, c_j0=float(c))


class Mode(str, enum.Enum):
    REFLECTION = "reflection"
    HYBRID = "hybrid"
    TRANSMISSION = "transmission"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, text) -> "Mode":
        if isinstance(text, Mode):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ValueError(f"unknown splitter mode {text!r}; expected one of "
                             f"{', '.join(m.value for m in cls)}") from None


@dataclass(frozen=True, eq=False)
class SplitterState:
    """Resolved splitter: mode, series impedance and its scattering matrix."""

    mode: Mode
    z: complex
    s: TwoPortNetwork
    c_j0: float | None = None
    f: float | None = None

    @cached_property
    def z_params(self) -> np.ndarray | None:
        """Z-parameters, or ``None`` when the conversion is singular.

        A bare series element never has Z-parameters, so for states built by
        this module the property is ``None``; networks loaded from elsewhere
        may have them.
        """
        try:
            return s_to_z(self.s)
        except SingularConversion:
            return None

    def describe(self) -> dict:
        return {
            "mode": self.mode.value,
            "c_pf": None if self.c_j0 is None else self.c_j0 * 1e12,
            "z_ohm": [self.z.real, self.z.imag],
            "ratio_db": power_ratio_db(self),
        }


def varactor_impedance(circuit: VaractorCircuit, f: float) -> complex:
    """Impedance of the varactor branch in parallel with the bias inductor."""
    if not f > 0:
        raise ValueError(f"frequency must be positive, got {f}")
    w = 2 * math.pi * f
    branch = 1 / (1j * w * circuit.c_j0) + 1j * w * circuit.l_s + circuit.r_s
    zl = 1j * w * circuit.l_c
    den = branch + zl
    if abs(den) < 1e-9:
        raise DegenerateCircuit(
            f"lossless parallel resonance at c_j0={circuit.c_j0:.6g} F, f={f:.6g} Hz (|den|={abs(den):.3g})"
        )
    return complex(branch * zl / den)


def series_impedance_network(z: complex, z0: float = Z0) -> TwoPortNetwork:
    """Two-port of an impedance in series between two ``z0`` ports."""
    z = complex(z)
    if z.real < 0:
        raise NonPassive(f"series impedance {z} has negative resistance")
    k = 1 / (z + 2 * z0)
    return TwoPortNetwork(np.array([[z * k, 2 * z0 * k], [2 * z0 * k, z * k]]), z0)


def power_ratio_db(state) -> float:
    """20 log10(|s11| / |s21|) of a splitter state or a two-port."""
    net = state.s if isinstance(state, SplitterState) else state
    s21 = abs(net.s21)
    if s21 == 0:
        raise InfiniteRatio("|s21| = 0: no transmission path")
    s11 = abs(net.s11)
    if s11 == 0:
        return -math.inf
    return 20 * math.log10(s11 / s21)


def _ratio_of_c(c, f, circuit, z0):
    z = varactor_impedance(circuit.with_capacitance(c), f)
    return power_ratio_db(series_impedance_network(z, z0))


def _peak_capacitance(f, circuit, z0, lo=C_MIN, hi=C_MAX):
    # coarse log scan, then a bounded refinement between the neighbours of the best sample
    grid = np.geomspace(lo, hi, 801)
    vals = np.array([_ratio_of_c(c, f, circuit, z0) for c in grid])
    k = int(np.argmax(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda c: -_ratio_of_c(c, f, circuit, z0), bounds=(a, b),
                          method="bounded", options={"xatol": 1e-18})
    if -res.fun >= vals[k]:
        return float(res.x), -float(res.fun)
    return float(grid[k]), float(vals[k])


def ratio_range(f: float, circuit: VaractorCircuit | None = None, z0: float = Z0,
                c_range=(C_MIN, C_MAX)) -> tuple[float, float]:
    """Attainable (min, max) power ratio in dB over the capacitance range."""
    circuit = circuit or VaractorCircuit()
    lo, hi = c_range
    _, r_pk = _peak_capacitance(f, circuit, z0, lo, hi)
    grid = np.geomspace(lo, hi, 401)
    vals = [_ratio_of_c(c, f, circuit, z0) for c in grid]
    return min(vals), max(max(vals), r_pk)


def solve_capacitance(target_ratio_db: float, f: float, circuit: VaractorCircuit | None = None,
                      z0: float = Z0, c_range=(C_MIN, C_MAX)) -> tuple[float, ...]:
    """All capacitances in ``c_range`` giving the requested power ratio.

    The ratio rises to a single maximum at the parallel resonance and falls
    on either side, so there are at most two roots; they are returned in
    ascending order (lower-capacitance branch first).
    """
    circuit = circuit or VaractorCircuit()
    lo, hi = c_range
    c_pk, r_pk = _peak_capacitance(f, circuit, z0, lo, hi)
    g = lambda c: _ratio_of_c(c, f, circuit, z0) - target_ratio_db
    roots = []
    for a, b in ((lo, c_pk), (c_pk, hi)):
        if b <= a:
            continue
        # each side is scanned for sign changes instead of trusting monotonicity
        xs = np.geomspace(a, b, 200)
        ys = np.array([g(x) for x in xs])
        for i in range(len(xs) - 1):
            if ys[i] == 0:
                roots.append(float(xs[i]))
            elif ys[i] * ys[i + 1] < 0:
                roots.append(float(brentq(g, xs[i], xs[i + 1], xtol=1e-24, rtol=1e-14)))
        if ys[-1] == 0:
            roots.append(float(xs[-1]))
    roots = sorted(set(roots))
    if not roots:
        rmin, rmax = ratio_range(f, circuit, z0, c_range)
        raise Unachievable(
            f"ratio {target_ratio_db:g} dB not attainable at {f / 1e9:g} GHz; "
            f"range is [{rmin:.3f}, {rmax:.3f}] dB", rmin, rmax)
    return tuple(roots)


def splitter_state(c_j0: float, f: float, circuit: VaractorCircuit | None = None,
                   mode: Mode = Mode.CUSTOM, z0: float = Z0) -> SplitterState:
    circuit = (circuit or VaractorCircuit()).with_capacitance(c_j0)
    z = varactor_impedance(circuit, f)
    return SplitterState(Mode.parse(mode), z, series_impedance_network(z, z0), float(c_j0), float(f))


def impedance_state(z: complex, mode: Mode = Mode.CUSTOM, z0: float = Z0, f=None) -> SplitterState:
    """Splitter state from a given series impedance (no varactor)."""
    z = complex(z)
    return SplitterState(Mode.parse(mode), z, series_impedance_network(z, z0), None, f)


# mode -> target ratio in dB (None: use an end of the capacitance range)
PRESET_TARGETS = {Mode.REFLECTION: 20.0, Mode.HYBRID: 0.0, Mode.TRANSMISSION: None}


def preset_capacitance(mode, f: float, circuit: VaractorCircuit | None = None, z0: float = Z0) -> float:
    return _preset_capacitance(Mode.parse(mode), float(f), circuit or VaractorCircuit(), float(z0))


@lru_cache(maxsize=256)
def _preset_capacitance(mode, f, circuit, z0):
    if mode is Mode.TRANSMISSION:
        return C_MAX
    if mode not in PRESET_TARGETS:
        raise ValueError("custom mode has no preset capacitance")
    target = PRESET_TARGETS[mode]
    c = solve_capacitance(target, f, circuit, z0)[0]
    if mode is Mode.REFLECTION:
        # make sure rounding in the root finder never leaves us just under target
        c_pk, _ = _peak_capacitance(f, circuit, z0)
        while _ratio_of_c(c, f, circuit, z0) < target and c < c_pk:
            c = c + 1e-6 * (c_pk - c) + 1e-22
    return c


def mode_preset(mode, f: float = 2.4e9, circuit: VaractorCircuit | None = None,
                c_j0: float | None = None, z0: float = Z0) -> SplitterState:
    """Splitter state for one of the operating modes.

    Transmission uses the largest capacitance. Hybrid and reflection use the
    lower-capacitance root of the 0 dB and +20 dB ratio targets respectively;
    that branch is the less lossy one. ``Mode.CUSTOM`` needs ``c_j0``.
    """
    mode = Mode.parse(mode)
    if not (BAND[0] <= f <= BAND[1]):
        raise OutOfBand(f"{f / 1e9:g} GHz is outside the modelled band "
                        f"{BAND[0] / 1e9:g}-{BAND[1] / 1e9:g} GHz")
    if mode is Mode.CUSTOM:
        if c_j0 is None:
            raise ValueError("custom mode needs an explicit capacitance")
        c = float(c_j0)
    else:
        c = preset_capacitance(mode, f, circuit, z0)
    return splitter_state(c, f, circuit, mode, z0)


def capacitance_to_voltage(c: float) -> float:
    """Nominal bias voltage for a capacitance (display only).

    Straight line in log-capacitance between the datasheet end points; it is
    not a diode model and nothing downstream depends on it.
    """
    c = min(max(c, C_MIN), C_MAX)
    x = math.log(c / C_MIN) / math.log(C_MAX / C_MIN)
    return V_AT_C_MIN + x * (V_AT_C_MAX - V_AT_C_MIN)


def voltage_to_capacitance(v: float) -> float:
    v = min(max(v, V_AT_C_MIN), V_AT_C_MAX)
    x = (v - V_AT_C_MIN) / (V_AT_C_MAX - V_AT_C_MIN)
    return C_MIN * (C_MAX / C_MIN) ** x


SWEEP_COLUMNS = ("freq_hz", "c_pf", "re_z", "im_z", "s11_db", "s21_db", "ratio_db")


def _db20(x):
    return 20 * math.log10(x) if x > 0 else -math.inf


def sweep_row(state: SplitterState, f: float) -> dict:
    s = state.s
    try:
        ratio = power_ratio_db(state)
    except InfiniteRatio:
        ratio = math.inf
    return {
        "freq_hz": f,
        "c_pf": "" if state.c_j0 is None else state.c_j0 * 1e12,
        "re_z": state.z.real,
        "im_z": state.z.imag,
        "s11_db": _db20(abs(s.s11)),
        "s21_db": _db20(abs(s.s21)),
        "ratio_db": ratio,
    }


def sweep(capacitances, frequencies, circuit: VaractorCircuit | None = None, z0: float = Z0) -> list[dict]:
    """Forward model over a capacitance x frequency grid (frequency outer)."""
    rows = []
    for f in frequencies:
        for c in capacitances:
            rows.append(sweep_row(splitter_state(c, f, circuit, z0=z0), f))
    return rows


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
