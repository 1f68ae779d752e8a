"""Angle grids, far-field pattern containers and beam metrics.

Angles are in degrees throughout the public interface. The reflecting
half-space is ``theta < 90`` and the transmitting one ``theta > 90``.
Cut-plane work uses a *signed* cut angle: in the cut through ``phi_cut`` a
sample at ``(theta, phi_cut + 180)`` is reported with a negative sign, which
is how beam directions are usually quoted for a single plane.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, NoBeam, ZeroPattern

DB_FLOOR = -80.0
ANGLE_TOL = 1e-9
NO_BEAM_DB = -40.0


class Sector(str, enum.Enum):
    REFLECTION = "reflection"
    TRANSMISSION = "transmission"


def _axis(values, name, lo, hi, hi_closed):
    a = np.array(values, dtype=float).ravel()
    if a.size == 0:
        raise ValueError(f"{name} axis is empty")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} axis has non-finite samples")
    upper_ok = np.all(a <= hi + ANGLE_TOL) if hi_closed else np.all(a < hi - ANGLE_TOL)
    if np.any(a < lo - ANGLE_TOL) or not upper_ok:
        raise ValueError(f"{name} samples must lie in [{lo}, {hi}{']' if hi_closed else ')'}")
    if a.size > 1:
        d = np.diff(a)
        if np.any(d <= 0):
            raise ValueError(f"{name} samples must be strictly increasing")
        if not np.allclose(d, d[0], rtol=1e-9, atol=1e-9):
            raise ValueError(f"{name} samples must be uniformly spaced")
    a.setflags(write=False)
    return a


class AngleGrid:
    """Regular (theta, phi) sampling in degrees."""

    __slots__ = ("theta_deg", "phi_deg")

    def __init__(self, theta_deg, phi_deg):
        self.theta_deg = _axis(theta_deg, "theta", 0.0, 180.0, True)
        self.phi_deg = _axis(phi_deg, "phi", 0.0, 360.0, False)

    @classmethod
    def full(cls, theta_step=1.0, phi_step=5.0) -> "AngleGrid":
        nt = int(round(180.0 / theta_step)) + 1
        npf = int(round(360.0 / phi_step))
        return cls(np.linspace(0, 180, nt), np.arange(npf) * phi_step)

    @classmethod
    def default(cls) -> "AngleGrid":
        """1 deg x 5 deg over the whole sphere."""
        return cls.full(1.0, 5.0)

    @classmethod
    def cut(cls, phi_cut=90.0, theta_step=1.0) -> "AngleGrid":
        """Both halves of the plane through ``phi_cut`` (phi_cut and phi_cut + 180)."""
        nt = int(round(180.0 / theta_step)) + 1
        a = float(phi_cut) % 360.0
        b = (a + 180.0) % 360.0
        return cls(np.linspace(0, 180, nt), sorted((a, b)))

    @classmethod
    def point(cls, theta, phi) -> "AngleGrid":
        return cls([theta], [phi])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.theta_deg.size, self.phi_deg.size)

    @property
    def size(self) -> int:
        return self.theta_deg.size * self.phi_deg.size

    def __eq__(self, other):
        if not isinstance(other, AngleGrid):
            return NotImplemented
        return (self.shape == other.shape and np.allclose(self.theta_deg, other.theta_deg, atol=ANGLE_TOL, rtol=0)
                and np.allclose(self.phi_deg, other.phi_deg, atol=ANGLE_TOL, rtol=0))

    def __hash__(self):
        return hash((self.shape, self.theta_deg.tobytes(), self.phi_deg.tobytes()))

    def __repr__(self):
        def ax(a):
            if a.size == 1:
                return f"[{a[0]:g}]"
            return f"[{a[0]:g}:{a[1] - a[0]:g}:{a[-1]:g}]"
        return f"AngleGrid(theta={ax(self.theta_deg)}, phi={ax(self.phi_deg)})"

    def mesh(self):
        """Theta and phi in radians, each of shape ``self.shape``."""
        return np.meshgrid(np.radians(self.theta_deg), np.radians(self.phi_deg), indexing="ij")

    def unit_vectors(self) -> np.ndarray:
        """Direction cosines, shape ``(3, n_theta, n_phi)``."""
        th, ph = self.mesh()
        st = np.sin(th)
        return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)])

    def theta_index(self, theta) -> int:
        i = np.flatnonzero(np.abs(self.theta_deg - theta) <= ANGLE_TOL)
        if i.size == 0:
            raise GridMismatch(f"theta={theta} deg is not a grid sample")
        return int(i[0])

    def phi_index(self, phi) -> int:
        p = float(phi) % 360.0
        d = np.abs((self.phi_deg - p + 180.0) % 360.0 - 180.0)
        i = np.flatnonzero(d <= ANGLE_TOL)
        if i.size == 0:
            raise GridMismatch(f"phi={phi} deg is not a grid sample")
        return int(i[0])

    def index(self, theta, phi) -> tuple[int, int]:
        return self.theta_index(theta), self.phi_index(phi)

    def has(self, theta, phi) -> bool:
        try:
            self.index(theta, phi)
        except GridMismatch:
            return False
        return True

    def subgrid_index(self, other: "AngleGrid"):
        """Index arrays selecting ``other`` out of this grid (GridMismatch if not contained)."""
        it = np.array([self.theta_index(t) for t in other.theta_deg], dtype=int)
        ip = np.array([self.phi_index(p) for p in other.phi_deg], dtype=int)
        return it, ip

    def to_dict(self) -> dict:
        return {"theta_deg": [float(x) for x in self.theta_deg], "phi_deg": [float(x) for x in self.phi_deg]}

    @classmethod
    def from_dict(cls, d) -> "AngleGrid":
        return cls(d["theta_deg"], d["phi_deg"])


class FieldPattern:
    """Complex far-field samples on an `AngleGrid`."""

    __slots__ = ("grid", "values", "f", "normalized")

    def __init__(self, grid: AngleGrid, values, f: float, normalized: bool = False):
        v = np.array(values, dtype=complex)
        if v.shape != grid.shape:
            raise GridMismatch(f"pattern shape {v.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("pattern has non-finite samples")
        v.setflags(write=False)
        self.grid = grid
        self.values = v
        self.f = float(f)
        self.normalized = bool(normalized)

    def __repr__(self):
        return f"FieldPattern({self.grid!r}, f={self.f:g}, normalized={self.normalized})"

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def magnitude_db(self, floor: float = DB_FLOOR) -> np.ndarray:
        """20 log10 |E| relative to the pattern maximum, clamped at ``floor``."""
        mag = np.abs(self.values)
        peak = mag.max()
        if peak == 0:
            return np.full(mag.shape, floor)
        with np.errstate(divide="ignore"):
            db = 20 * np.log10(mag / peak)
        return np.maximum(db, floor)

    def at(self, theta, phi) -> complex:
        i, j = self.grid.index(theta, phi)
        return complex(self.values[i, j])

    def select(self, grid: AngleGrid) -> "FieldPattern":
        it, ip = self.grid.subgrid_index(grid)
        return FieldPattern(grid, self.values[np.ix_(it, ip)], self.f, self.normalized)

    def scaled(self, k) -> "FieldPattern":
        return FieldPattern(self.grid, self.values * k, self.f, False)

    def power(self, eta=376.730313668) -> float:
        """Radiated power of this pattern, integrating |E|^2/(2 eta) over the grid.

        Uses the trapezoidal rule in theta and a periodic rectangle rule in phi,
        so the grid must cover the sphere (a full phi axis).
        """
        th = np.radians(self.grid.theta_deg)
        ph = self.grid.phi_deg
        if ph.size < 2:
            raise ValueError("power integration needs a full phi axis")
        dphi = math.radians(360.0 / ph.size)
        inner = (np.abs(self.values) ** 2).sum(axis=1) * dphi
        return float(np.trapezoid(inner * np.sin(th), th) / (2 * eta))


def normalize(p: FieldPattern) -> FieldPattern:
    peak = np.abs(p.values).max()
    if peak == 0:
        raise ZeroPattern("cannot normalize an all-zero pattern")
    return FieldPattern(p.grid, p.values / peak, p.f, True)


def structural_subtract(total: FieldPattern, structural: FieldPattern) -> FieldPattern:
    """Pointwise ``total - structural`` (both on the same grid and frequency)."""
    if total.grid != structural.grid:
        raise GridMismatch(f"grids differ: {total.grid!r} vs {structural.grid!r}")
    if not math.isclose(total.f, structural.f, rel_tol=1e-12):
        raise GridMismatch(f"frequencies differ: {total.f} vs {structural.f}")
    return FieldPattern(total.grid, total.values - structural.values, total.f, False)


# --- signed cut angles -------------------------------------------------------

def from_signed(angle: float, phi_cut: float = 90.0) -> tuple[float, float]:
    """Signed cut angle -> (theta, phi). ``-15`` -> (15, phi_cut + 180)."""
    a = float(angle)
    if not -180.0 <= a <= 180.0:
        raise ValueError(f"signed cut angle {a} outside [-180, 180]")
    if a < 0:
        return -a, (phi_cut + 180.0) % 360.0
    return a, phi_cut % 360.0


def to_signed(theta: float, phi: float, phi_cut: float = 90.0) -> float:
    d = abs((phi - phi_cut + 180.0) % 360.0 - 180.0)
    if theta in (0.0, 180.0) or d < 90.0:
        return float(theta)
    return -float(theta)


def cut_samples(p: FieldPattern, sector: Sector, phi_cut: float = 90.0):
    """Samples of the cut plane restricted to ``sector``.

    Returns ``(psi, theta, phi, values)`` ordered by a continuous cut
    coordinate ``psi``: the signed angle in the reflecting sector and
    ``theta`` / ``360 - theta`` in the transmitting one, so a beam at
    180 deg is not split in two.
    """
    sector = Sector(sector)
    g = p.grid
    near = g.phi_index(phi_cut)
    try:
        far = g.phi_index((phi_cut + 180.0) % 360.0)
    except GridMismatch:
        far = None
    th = g.theta_deg
    rows = []
    refl = sector is Sector.REFLECTION
    in_sector = (th < 90.0 - ANGLE_TOL) if refl else (th > 90.0 + ANGLE_TOL)
    for i in np.flatnonzero(in_sector):
        t = th[i]
        psi = t
        rows.append((psi, t, g.phi_deg[near], p.values[i, near]))
        edge = abs(t) < ANGLE_TOL or abs(t - 180.0) < ANGLE_TOL
        if far is not None and not edge:
            psi_far = -t if refl else 360.0 - t
            rows.append((psi_far, t, g.phi_deg[far], p.values[i, far]))
    rows.sort(key=lambda r: r[0])
    psi = np.array([r[0] for r in rows])
    theta = np.array([r[1] for r in rows])
    phi = np.array([r[2] for r in rows])
    vals = np.array([r[3] for r in rows], dtype=complex)
    return psi, theta, phi, vals


@dataclass(frozen=True)
class BeamMetrics:
    peak_direction: tuple[float, float]
    peak_level_db: float
    hpbw_deg: float
    max_sidelobe_db: float
    peak_signed_deg: float = 0.0

    def to_dict(self) -> dict:
        return {
            "peak_theta_deg": self.peak_direction[0],
            "peak_phi_deg": self.peak_direction[1],
            "peak_signed_deg": self.peak_signed_deg,
            "peak_level_db": self.peak_level_db,
            "hpbw_deg": self.hpbw_deg,
            "max_sidelobe_db": self.max_sidelobe_db,
        }


def _crossing(x0, x1, y0, y1, level):
    if y1 == y0:
        return x0
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def beam_metrics(p: FieldPattern, sector, phi_cut: float = 90.0, prefer: float | None = None) -> BeamMetrics:
    """Peak, half-power beamwidth and highest sidelobe in one cut plane.

    ``prefer`` (signed cut angle) only decides between samples that tie for
    the maximum, e.g. the twin lobes of a symmetric pattern.
    """
    sector = Sector(sector)
    total_peak = float(np.abs(p.values).max())
    psi, theta, phi, vals = cut_samples(p, sector, phi_cut)
    mag = np.abs(vals)
    if mag.size == 0 or total_peak == 0 or mag.max() == 0:
        raise NoBeam(f"no field in the {sector.value} sector")
    k = int(np.argmax(mag))
    if prefer is not None:
        want = prefer if sector is Sector.REFLECTION or prefer >= 0 else 360.0 + prefer
        ties = np.flatnonzero(mag >= mag[k] * (1 - 1e-9))
        k = int(ties[np.argmin(np.abs(psi[ties] - want))])
    peak = float(mag[k])
    level_db = 20 * math.log10(peak / total_peak)
    if level_db < NO_BEAM_DB:
        raise NoBeam(f"{sector.value} sector peak is {level_db:.1f} dB below the pattern maximum")
    db = 20 * np.log10(np.maximum(mag / peak, 10 ** (DB_FLOOR / 20)))
    half = -10 * math.log10(2.0)

    def walk(step):
        i = k
        while 0 <= i + step < len(db):
            j = i + step
            if db[j] < half:
                return _crossing(psi[i], psi[j], db[i], db[j], half)
            i = j
        return None

    left, right = walk(-1), walk(+1)
    if left is None and right is None:
        hpbw = float(psi[-1] - psi[0])
    elif left is None:
        hpbw = 2 * (right - psi[k])
    elif right is None:
        hpbw = 2 * (psi[k] - left)
    else:
        hpbw = right - left

    # main lobe ends at the first local minimum on each side
    lo = k
    while lo > 0 and mag[lo - 1] <= mag[lo]:
        lo -= 1
    hi = k
    while hi < len(mag) - 1 and mag[hi + 1] <= mag[hi]:
        hi += 1
    side = DB_FLOOR
    for i in list(range(0, lo)) + list(range(hi + 1, len(mag))):
        left_ok = i == 0 or mag[i] >= mag[i - 1]
        right_ok = i == len(mag) - 1 or mag[i] >= mag[i + 1]
        if left_ok and right_ok:
            side = max(side, float(db[i]))
    side = min(side, 0.0)

    signed = float(psi[k]) if sector is Sector.REFLECTION else (
        float(psi[k]) if psi[k] <= 180.0 else -float(360.0 - psi[k]))
    return BeamMetrics((float(theta[k]), float(phi[k])), level_db, float(hpbw), side, signed)


# --- CSV --------------------------------------------------------------------

PATTERN_COLUMNS = ("theta_deg", "phi_deg", "re", "im", "mag_db")


def write_pattern_csv(p: FieldPattern, path) -> None:
    db = p.magnitude_db()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PATTERN_COLUMNS)
        for i, t in enumerate(p.grid.theta_deg):
            for j, ph in enumerate(p.grid.phi_deg):
                v = p.values[i, j]
                w.writerow([repr(float(t)), repr(float(ph)), repr(float(v.real)), repr(float(v.imag)),
                            repr(float(db[i, j]))])


def read_pattern_csv(path, f: float = 0.0) -> FieldPattern:
    """Inverse of `write_pattern_csv` (mag_db is ignored; re/im are authoritative)."""
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        missing = set(PATTERN_COLUMNS[:4]) - set(r.fieldnames or ())
        if missing:
            raise ValueError(f"pattern CSV lacks columns {sorted(missing)}")
        rows = [(float(d["theta_deg"]), float(d["phi_deg"]), complex(float(d["re"]), float(d["im"]))) for d in r]
    if not rows:
        raise ValueError("pattern CSV is empty")
    thetas = sorted({t for t, _, _ in rows})
    phis = sorted({p for _, p, _ in rows})
    grid = AngleGrid(thetas, phis)
    vals = np.zeros(grid.shape, dtype=complex)
    seen = np.zeros(grid.shape, dtype=bool)
    for t, ph, v in rows:
        i, j = grid.index(t, ph)
        vals[i, j] = v
        seen[i, j] = True
    if not seen.all():
        raise GridMismatch("pattern CSV does not cover a full rectangular grid")
    return FieldPattern(grid, vals, f)
