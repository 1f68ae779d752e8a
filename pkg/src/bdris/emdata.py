"""Electromagnetic dataset: impedance matrices, excitations and port patterns.

A dataset describes both antenna arrays of the surface at one frequency:

* ``z_r``, ``z_t``: (M+Q)x(M+Q) impedance matrices, antenna ports first,
  then Q internal (switch) ports grouped by antenna;
* ``v_oc``: open-circuit voltages of the reflecting array for the reference
  incidence;
* ``e_r_ports``, ``e_t_ports``: far field of every port driven with 1 A while
  all other ports are open;
* ``e_oc`` and ``e_r_str``: scattered field with all reflecting ports open
  and with all of them conjugate matched.

Real solver exports can be loaded from JSON. `generate_synthetic` builds an
analytic stand-in with cos^q elements on a rectangular lattice.

JSON layout (``schema_version`` 1)::

    {
      "format": "bdris-emdataset", "schema_version": 1,
      "tier": "behavioral" | "internal_ports",
      "frequency_hz": f, "m": M, "q": Q, "z0": 50.0,
      "layout_m": [[x, y], ...],                 # M rows
      "incidence_deg": [theta, phi],             # reference incidence of v_oc
      "grid": {"theta_deg": [...], "phi_deg": [...]},
      "z_r": [[[re, im], ...], ...], "z_t": ...,  # (M+Q) x (M+Q)
      "v_oc": [[re, im], ...],                   # M+Q
      "e_r_ports": [[[re, im], ...], ...],       # M+Q patterns, row-major (theta outer)
      "e_t_ports": ..., "e_oc": [[re, im], ...], "e_r_str": ...,
      "element": {"q": 1.0, "r_rad": 50.0, "l_eff": 1.0} | null,
      "weights_r": [[re, im], ...] | null, "weights_t": ... | null
    }

``element`` and the port weights are optional. They describe how the
patterns were synthesized (pattern of port n = weight_n x element field) and
are only needed to re-excite the array from a different direction or to
mirror the dataset.

Only the difference ``e_oc - e_r_str`` enters the reflected field.
Synthetic datasets model minimum-scattering antennas: an open-circuited
array scatters nothing (``e_oc = 0``) and ``e_r_str`` is the field radiated
by the conjugate-matched port currents.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, special

from .antenna import SWITCHES_PER_ANTENNA, Switch, diode_load, element_pattern
from .errors import GridMismatch, InvalidLayout, ReciprocityError, SchemaError, WrongSide
from .pattern import AngleGrid, FieldPattern

C0 = 299_792_458.0
ETA0 = 376.730313668
SCHEMA_VERSION = 1
FORMAT = "bdris-emdataset"

# internal-port construction constants (see `_internal_blocks`)
Z_PORT = 50.0
Z_COUPLE = 20.0


class Tier(str, enum.Enum):
    BEHAVIORAL = "behavioral"
    INTERNAL_PORTS = "internal_ports"


@dataclass(frozen=True)
class ElementParams:
    """cos^q element; amplitude chosen so an isolated element has ``r_rad`` ohms."""

    q: float = 1.0
    r_rad: float = 50.0
    l_eff: float = 1.0

    def __post_init__(self):
        if self.q < 0 or self.r_rad <= 0 or self.l_eff <= 0:
            raise ValueError("element parameters must be positive (q >= 0)")

    @property
    def amplitude(self) -> float:
        return math.sqrt(ETA0 * self.r_rad * (2 * self.q + 1) / (2 * math.pi))

    def to_dict(self):
        return {"q": self.q, "r_rad": self.r_rad, "l_eff": self.l_eff}


def _ro(a, dtype=complex):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EmDataset:
    f: float
    m: int
    q: int
    layout: np.ndarray
    z_r: np.ndarray
    z_t: np.ndarray
    v_oc: np.ndarray
    e_r_ports: np.ndarray
    e_t_ports: np.ndarray
    e_oc: np.ndarray
    e_r_str: np.ndarray
    grid: AngleGrid
    incidence: tuple = (0.0, 0.0)
    tier: Tier = Tier.BEHAVIORAL
    z0: float = 50.0
    element: ElementParams | None = None
    weights_r: np.ndarray | None = None
    weights_t: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        s = object.__setattr__
        s(self, "layout", _ro(self.layout, float))
        for name in ("z_r", "z_t", "v_oc", "e_r_ports", "e_t_ports", "e_oc", "e_r_str"):
            s(self, name, _ro(getattr(self, name)))
        for name in ("weights_r", "weights_t"):
            if getattr(self, name) is not None:
                s(self, name, _ro(getattr(self, name)))
        s(self, "tier", Tier(self.tier))
        s(self, "incidence", (float(self.incidence[0]), float(self.incidence[1])))
        validate(self)

    @property
    def n_ports(self) -> int:
        return self.m + self.q

    @property
    def q_per_antenna(self) -> int:
        return self.q // self.m

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi * self.f / C0

    def port_owner(self) -> np.ndarray:
        """Index of the antenna each port belongs to."""
        own = np.arange(self.m)
        if self.q:
            own = np.concatenate([own, np.repeat(np.arange(self.m), self.q_per_antenna)])
        return own

    def blocks(self, side: str):
        """(Z_AA, Z_AP, Z_PA, Z_PP) partition of ``z_r`` or ``z_t``."""
        z = self.z_r if side == "r" else self.z_t
        m = self.m
        return z[:m, :m], z[:m, m:], z[m:, :m], z[m:, m:]

    def pattern_stack(self, side: str, grid: AngleGrid | None = None) -> np.ndarray:
        """Port patterns of one side, restricted to ``grid`` when given."""
        e = self.e_r_ports if side == "r" else self.e_t_ports
        if grid is None or grid == self.grid:
            return e
        it, ip = self.grid.subgrid_index(grid)
        return e[:, it[:, None], ip[None, :]]

    def pattern(self, name: str) -> FieldPattern:
        return FieldPattern(self.grid, getattr(self, name), self.f)


def validate(ds: EmDataset, rtol: float = 1e-9) -> None:
    """Check shapes, finiteness, reciprocity and grid consistency."""
    if ds.m < 1:
        raise SchemaError("m must be at least 1")
    if ds.q < 0 or ds.q % ds.m:
        raise SchemaError(f"q={ds.q} must be a non-negative multiple of m={ds.m}")
    if not (ds.f > 0 and ds.z0 > 0):
        raise SchemaError("frequency and z0 must be positive")
    p = ds.n_ports
    if ds.layout.shape != (ds.m, 2):
        raise SchemaError(f"layout must have shape ({ds.m}, 2), got {ds.layout.shape}")
    for name in ("z_r", "z_t"):
        z = getattr(ds, name)
        if z.shape != (p, p):
            raise SchemaError(f"{name} must be {p}x{p}, got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise SchemaError(f"{name} has non-finite entries")
        scale = np.linalg.norm(z)
        if np.linalg.norm(z - z.T) > rtol * scale:
            raise ReciprocityError(f"{name} is not symmetric (|Z - Z^T| = {np.linalg.norm(z - z.T):.3g})")
        if np.any(np.diag(z)[: ds.m].real <= 0):
            raise SchemaError(f"{name} has antenna ports with non-positive resistance")
    if ds.v_oc.shape != (p,):
        raise SchemaError(f"v_oc must have length {p}, got shape {ds.v_oc.shape}")
    gshape = ds.grid.shape
    for name in ("e_r_ports", "e_t_ports"):
        e = getattr(ds, name)
        if e.ndim != 3 or e.shape[0] != p:
            raise SchemaError(f"{name} must hold {p} patterns, got shape {e.shape}")
        if e.shape[1:] != gshape:
            raise GridMismatch(f"{name} sampled on {e.shape[1:]} but grid is {gshape}")
    for name in ("e_oc", "e_r_str"):
        e = getattr(ds, name)
        if e.shape != gshape:
            raise GridMismatch(f"{name} sampled on {e.shape} but grid is {gshape}")
    for name in ("v_oc", "e_r_ports", "e_t_ports", "e_oc", "e_r_str"):
        if not np.all(np.isfinite(getattr(ds, name))):
            raise SchemaError(f"{name} has non-finite entries")
    for name in ("weights_r", "weights_t"):
        w = getattr(ds, name)
        if w is not None and w.shape != (p,):
            raise SchemaError(f"{name} must have length {p}")


# --- synthetic generation ---------------------------------------------------

def lattice(m_x: int, m_y: int, spacing: float) -> np.ndarray:
    """Centred rectangular lattice, x index fastest."""
    if int(m_x) != m_x or int(m_y) != m_y or m_x < 1 or m_y < 1:
        raise InvalidLayout(f"lattice needs positive integer sizes, got {m_x} x {m_y}")
    if not spacing > 0:
        raise InvalidLayout(f"spacing must be positive, got {spacing}")
    ix, iy = np.meshgrid(np.arange(m_x), np.arange(m_y), indexing="xy")
    x = (ix.ravel() - (m_x - 1) / 2) * spacing
    y = (iy.ravel() - (m_y - 1) / 2) * spacing
    return np.column_stack([x, y])


def element_fields(layout, grid: AngleGrid, k: float, element: ElementParams, side: str) -> np.ndarray:
    """Unit-current fields of isolated elements, shape (M, n_theta, n_phi)."""
    u = grid.unit_vectors()
    f = element_pattern(grid.theta_deg, element.q, "front" if side == "r" else "back")[:, None]
    phase = k * (layout[:, 0, None, None] * u[0] + layout[:, 1, None, None] * u[1])
    return element.amplitude * f[None] * np.exp(1j * phase)


def mutual_resistance(layout, k: float, element: ElementParams) -> np.ndarray:
    """Resistance matrix consistent with the element patterns.

    For elements in one plane with a rotationally symmetric cos^q pattern,
    the cross power integral reduces to a Hankel-type integral with J0.
    Reactances are not modelled (set to zero).
    """
    m = len(layout)
    c2 = element.amplitude ** 2
    out = np.zeros((m, m))
    cache = {}
    for i in range(m):
        for j in range(i, m):
            rho = float(np.hypot(*(layout[i] - layout[j])))
            key = round(rho, 12)
            if key not in cache:
                g = lambda t: np.cos(t) ** (2 * element.q) * special.j0(k * rho * np.sin(t)) * np.sin(t)
                val, _ = integrate.quad(g, 0.0, math.pi / 2, epsabs=1e-13, epsrel=1e-12, limit=200)
                cache[key] = c2 / ETA0 * 2 * math.pi * val
            out[i, j] = out[j, i] = cache[key]
    return out


def internal_weights(f: float, z_couple: float = Z_COUPLE, z_port: float = Z_PORT) -> np.ndarray:
    """Radiation weights of the six switch ports of one antenna.

    With the antenna port driven and the switch ports loaded by their
    diodes, port k carries ``-z_couple / (z_port + Z_k)`` times the antenna
    current. The weights are chosen so that the resulting field is exactly
    ``e^{j phase(state)}`` times the element field for every state.
    """
    u_on = 1 / (z_port + diode_load(Switch.ON, f))
    u_off = 1 / (z_port + diode_load(Switch.OFF, f))
    g = 1 / (z_couple * (u_on - u_off))
    # S1, S2 never decide the state on their own; S3, S6, S4, S5 select 0, 90, 180, 270 deg
    return np.array([0, 0, -g, g, 1j * g, -1j * g], dtype=complex)


def _internal_blocks(m, f, z_aa, z_couple=Z_COUPLE, z_port=Z_PORT):
    """Impedance matrix of M antennas with six switch ports each."""
    q6 = SWITCHES_PER_ANTENNA
    u_on = 1 / (z_port + diode_load(Switch.ON, f))
    u_off = 1 / (z_port + diode_load(Switch.OFF, f))
    p = m + q6 * m
    z = np.zeros((p, p), dtype=complex)
    # exactly two switches are on in every state, so this keeps the
    # loaded antenna-port impedance equal to z_aa for all four states
    z[:m, :m] = z_aa + np.eye(m) * z_couple ** 2 * (2 * u_on + 4 * u_off)
    for a in range(m):
        sl = slice(m + q6 * a, m + q6 * (a + 1))
        z[a, sl] = z_couple
        z[sl, a] = z_couple
    z[m:, m:] = np.eye(q6 * m) * z_port
    return z


def port_weights(m: int, tier: Tier, f: float) -> np.ndarray:
    if Tier(tier) is Tier.BEHAVIORAL:
        return np.ones(m, dtype=complex)
    return np.concatenate([np.zeros(m, dtype=complex), np.tile(internal_weights(f), m)])


def generate_synthetic(m_x: int, m_y: int, spacing: float, f: float,
                       element: ElementParams | None = None, tier=Tier.BEHAVIORAL,
                       grid: AngleGrid | None = None, incidence=(0.0, 0.0),
                       coupling: bool = False, amplitude: float = 1.0) -> EmDataset:
    """Analytic dataset for an ``m_x`` x ``m_y`` lattice (spacing in metres).

    ``coupling=True`` replaces the diagonal 50 ohm impedance matrix by the
    mutual-resistance matrix implied by the element patterns, which makes the
    dataset energy consistent (radiated power computed from the patterns
    equals the power delivered to the ports).
    """
    element = element or ElementParams()
    tier = Tier(tier)
    grid = grid or AngleGrid.default()
    if not f > 0:
        raise InvalidLayout(f"frequency must be positive, got {f}")
    layout = lattice(m_x, m_y, spacing)
    m = len(layout)
    k = 2 * math.pi * f / C0
    if coupling:
        z_aa = mutual_resistance(layout, k, element).astype(complex)
    else:
        z_aa = np.eye(m, dtype=complex) * element.r_rad
    if tier is Tier.BEHAVIORAL:
        z = z_aa
        q = 0
    else:
        z = _internal_blocks(m, f, z_aa)
        q = SWITCHES_PER_ANTENNA * m
    w = port_weights(m, tier, f)
    owner = np.concatenate([np.arange(m), np.repeat(np.arange(m), SWITCHES_PER_ANTENNA)]) if q else np.arange(m)
    elem_r = element_fields(layout, grid, k, element, "r")
    elem_t = element_fields(layout, grid, k, element, "t")
    e_r = w[:, None, None] * elem_r[owner]
    e_t = w[:, None, None] * elem_t[owner]
    ds = EmDataset(
        f=f, m=m, q=q, layout=layout, z_r=z, z_t=z.copy(), v_oc=np.zeros(m + q), e_r_ports=e_r,
        e_t_ports=e_t, e_oc=np.zeros(grid.shape), e_r_str=np.zeros(grid.shape), grid=grid,
        incidence=incidence, tier=tier, element=element, weights_r=w, weights_t=w.copy(),
        meta={"m_x": int(m_x), "m_y": int(m_y), "spacing_m": float(spacing), "coupling": bool(coupling)},
    )
    v, corr, e_str = reexcite(ds, incidence, amplitude)
    return replace(ds, v_oc=v, e_r_str=e_str, e_oc=e_str + corr)


def _need_synthesis_info(ds):
    if ds.element is None or ds.weights_r is None or ds.weights_t is None:
        raise SchemaError("dataset lacks element/weight metadata needed to re-excite it")


def _antenna_excitation(ds, incidence, amplitude):
    th, ph = float(incidence[0]), float(incidence[1])
    if not 0.0 <= th < 90.0:
        raise WrongSide(f"incidence theta={th} deg is not on the reflecting side")
    _need_synthesis_info(ds)
    t, p = math.radians(th), math.radians(ph)
    u = np.array([math.sin(t) * math.cos(p), math.sin(t) * math.sin(p)])
    f_inc = float(element_pattern(th, ds.element.q, "front"))
    return amplitude * ds.element.l_eff * f_inc * np.exp(1j * ds.wavenumber * (ds.layout @ u))


def plane_wave_voc(ds: EmDataset, incidence, amplitude: float = 1.0) -> np.ndarray:
    """Open-circuit voltages for a plane wave arriving from ``incidence``.

    ``incidence`` is the direction (theta, phi) in degrees the wave comes
    from; it must be on the reflecting side. By reciprocity each port
    receives in proportion to its own pattern in that direction.
    """
    per_antenna = _antenna_excitation(ds, incidence, amplitude)
    return ds.weights_r * per_antenna[ds.port_owner()]


def matched_currents(z: np.ndarray, v_oc: np.ndarray) -> np.ndarray:
    """Port currents when every port is conjugate matched."""
    return -np.linalg.solve(z + z.conj(), v_oc)


def open_circuit_correction(ds: EmDataset, v_oc, grid: AngleGrid | None = None) -> np.ndarray:
    """``e_oc - e_r_str`` for a given excitation.

    Going from conjugate-matched to open ports removes the matched-load
    currents, so the difference is minus their radiated field.
    """
    i_m = matched_currents(np.asarray(ds.z_r), np.asarray(v_oc))
    e = ds.pattern_stack("r", grid)
    return -np.tensordot(i_m, e, axes=1)


def matched_structural(ds: EmDataset, v_oc, grid: AngleGrid | None = None) -> np.ndarray:
    """Structural pattern of synthetic data: the field of the matched-load currents.

    The synthetic antennas scatter nothing when open circuited, so the
    conjugate-matched field is carried entirely by the port currents.
    """
    i_m = matched_currents(np.asarray(ds.z_r), np.asarray(v_oc))
    return np.tensordot(i_m, ds.pattern_stack("r", grid), axes=1)


def reexcite(ds: EmDataset, incidence, amplitude: float = 1.0, grid: AngleGrid | None = None):
    """(v_oc, e_oc - e_r_str, e_r_str) for another incidence direction."""
    v = plane_wave_voc(ds, incidence, amplitude)
    e_str = matched_structural(ds, v, grid)
    return v, -e_str, e_str


def mirror_dataset(ds: EmDataset) -> EmDataset:
    """Swap the two sides: the transmitting array becomes the illuminated one.

    Directions are reflected through the surface plane (theta -> 180 - theta),
    so the theta axis of the grid must be symmetric about 90 deg.
    """
    _need_synthesis_info(ds)
    th = ds.grid.theta_deg
    if not np.allclose(180.0 - th[::-1], th, atol=1e-9, rtol=0):
        raise GridMismatch("mirroring needs a theta axis symmetric about 90 deg")
    flip = lambda e: np.ascontiguousarray(e[:, ::-1, :])
    out = replace(ds, z_r=ds.z_t, z_t=ds.z_r, e_r_ports=flip(ds.e_t_ports), e_t_ports=flip(ds.e_r_ports),
                  weights_r=ds.weights_t, weights_t=ds.weights_r)
    v, corr, e_str = reexcite(out, ds.incidence)
    return replace(out, v_oc=v, e_r_str=e_str, e_oc=e_str + corr)


# --- JSON -------------------------------------------------------------------

def _c(a):
    a = np.asarray(a)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _uc(x, name, shape=None):
    try:
        a = np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{name}: expected nested [re, im] pairs") from None
    if a.ndim == 0 or a.shape[-1] != 2:
        raise SchemaError(f"{name}: innermost dimension must be [re, im]")
    out = a[..., 0] + 1j * a[..., 1]
    if shape is not None and out.shape != shape:
        raise SchemaError(f"{name}: expected shape {shape}, got {out.shape}")
    return out


def to_json_dict(ds: EmDataset) -> dict:
    return {
        "format": FORMAT,
        "schema_version": SCHEMA_VERSION,
        "tier": ds.tier.value,
        "frequency_hz": ds.f,
        "m": ds.m,
        "q": ds.q,
        "z0": ds.z0,
        "layout_m": ds.layout.tolist(),
        "incidence_deg": list(ds.incidence),
        "grid": ds.grid.to_dict(),
        "z_r": _c(ds.z_r),
        "z_t": _c(ds.z_t),
        "v_oc": _c(ds.v_oc),
        "e_r_ports": _c(ds.e_r_ports.reshape(ds.n_ports, -1)),
        "e_t_ports": _c(ds.e_t_ports.reshape(ds.n_ports, -1)),
        "e_oc": _c(ds.e_oc.ravel()),
        "e_r_str": _c(ds.e_r_str.ravel()),
        "element": None if ds.element is None else ds.element.to_dict(),
        "weights_r": None if ds.weights_r is None else _c(ds.weights_r),
        "weights_t": None if ds.weights_t is None else _c(ds.weights_t),
        "meta": ds.meta,
    }


def from_json_dict(d: dict) -> EmDataset:
    if not isinstance(d, dict):
        raise SchemaError("dataset document must be a JSON object")
    if d.get("format", FORMAT) != FORMAT:
        raise SchemaError(f"not a dataset document (format={d.get('format')!r})")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {d.get('schema_version')!r}")
    required = ("tier", "frequency_hz", "m", "q", "layout_m", "grid", "z_r", "z_t", "v_oc",
                "e_r_ports", "e_t_ports", "e_oc", "e_r_str")
    missing = [k for k in required if k not in d]
    if missing:
        raise SchemaError(f"missing fields: {', '.join(missing)}")
    try:
        grid = AngleGrid.from_dict(d["grid"])
        tier = Tier(d["tier"])
        m, q = int(d["m"]), int(d["q"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad header field: {exc}") from None
    p = m + q

    def patterns(name, lead):
        flat = _uc(d[name], name)
        want = (lead, grid.size) if lead else (grid.size,)
        if flat.shape[:-1] != want[:-1]:
            raise SchemaError(f"{name}: expected {want[0]} patterns, got shape {flat.shape}")
        if flat.shape[-1] != grid.size:
            raise GridMismatch(f"{name} has {flat.shape[-1]} samples per pattern, grid has {grid.size}")
        return flat.reshape((lead,) + grid.shape if lead else grid.shape)

    el = d.get("element")
    wr, wt = d.get("weights_r"), d.get("weights_t")
    try:
        element = None if el is None else ElementParams(**el)
    except TypeError as exc:
        raise SchemaError(f"element: {exc}") from None
    return EmDataset(
        f=float(d["frequency_hz"]), m=m, q=q, layout=np.asarray(d["layout_m"], dtype=float),
        z_r=_uc(d["z_r"], "z_r", (p, p)), z_t=_uc(d["z_t"], "z_t", (p, p)), v_oc=_uc(d["v_oc"], "v_oc", (p,)),
        e_r_ports=patterns("e_r_ports", p), e_t_ports=patterns("e_t_ports", p),
        e_oc=patterns("e_oc", 0), e_r_str=patterns("e_r_str", 0), grid=grid,
        incidence=tuple(d.get("incidence_deg", (0.0, 0.0))), tier=tier, z0=float(d.get("z0", 50.0)),
        element=element, weights_r=None if wr is None else _uc(wr, "weights_r", (p,)),
        weights_t=None if wt is None else _uc(wt, "weights_t", (p,)), meta=dict(d.get("meta") or {}),
    )


def save_dataset(ds: EmDataset, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_json_dict(ds), fh)


def load_dataset(path) -> EmDataset:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return from_json_dict(d)


def write_patterns_csv(ds: EmDataset, side: str, path) -> None:
    """Export every port pattern of one side (columns port, theta_deg, phi_deg, re, im, mag_db)."""
    import csv

    e = ds.e_r_ports if side == "r" else ds.e_t_ports
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("port", "theta_deg", "phi_deg", "re", "im", "mag_db"))
        for n in range(ds.n_ports):
            p = FieldPattern(ds.grid, e[n], ds.f)
            db = p.magnitude_db()
            for i, t in enumerate(ds.grid.theta_deg):
                for j, ph in enumerate(ds.grid.phi_deg):
                    v = e[n, i, j]
                    w.writerow((n, repr(float(t)), repr(float(ph)), repr(float(v.real)), repr(float(v.imag)),
                                repr(float(db[i, j]))))
