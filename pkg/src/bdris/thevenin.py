"""Thevenin-equivalent field engine for the whole surface.

The illuminated (reflecting) array is a Thevenin source: open-circuit
voltages ``v_oc`` behind its impedance matrix ``Z_R``. Each antenna port is
loaded by its cell, i.e. the splitter followed by the transmitting array,
and every internal switch port by its diode impedance. Solving that circuit
gives all port currents; the far fields are superpositions of the port
patterns.

Two dataset tiers are supported:

* behavioral: antenna ports only. Each antenna's phase state is an ideal
  phase shifter inside its cell, so a cell is shifter, splitter, shifter.
* internal_ports: six switch ports per antenna carry the state; the cell
  network is the bare splitter, and the transmitting array is reduced to its
  antenna ports with the switch loads folded in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import netalg
from .antenna import SWITCHES_PER_ANTENNA, PhaseState, state_load_vector
from .cell import IdealSplitter, _mode_matrix
from .emdata import EmDataset, Tier, reexcite
from .errors import BdrisError, GridMismatch, SchemaError
from .netalg import CASCADE_LIMIT, TwoPortNetwork
from .pattern import AngleGrid, FieldPattern
from .splitter import Mode, SplitterState, impedance_state, mode_preset, splitter_state


def _as_splitter(x, f):
    if isinstance(x, (SplitterState, TwoPortNetwork, IdealSplitter)):
        return x
    if isinstance(x, (str, Mode)):
        return mode_preset(Mode.parse(x), f)
    raise TypeError(f"cannot use {type(x).__name__} as a splitter")


@dataclass(frozen=True, eq=False)
class SurfaceConfig:
    """Per-cell splitter plus reflecting and transmitting antenna states."""

    splitters: tuple
    r_states: tuple
    t_states: tuple

    def __post_init__(self):
        sp = tuple(self.splitters)
        r = tuple(PhaseState.parse(x) for x in self.r_states)
        t = tuple(PhaseState.parse(x) for x in self.t_states)
        if not (len(sp) == len(r) == len(t)) or not sp:
            raise ValueError(f"inconsistent cell counts: {len(sp)} splitters, {len(r)} + {len(t)} states")
        for s in sp:
            _mode_matrix(s)
        object.__setattr__(self, "splitters", sp)
        object.__setattr__(self, "r_states", r)
        object.__setattr__(self, "t_states", t)

    @property
    def m(self) -> int:
        return len(self.splitters)

    @property
    def genes(self) -> tuple[int, ...]:
        return tuple(int(s) for s in self.r_states + self.t_states)

    @classmethod
    def uniform(cls, splitter, m: int, r_states=None, t_states=None) -> "SurfaceConfig":
        r = r_states if r_states is not None else [PhaseState.S00] * m
        t = t_states if t_states is not None else [PhaseState.S00] * m
        return cls((splitter,) * m, r, t)

    @classmethod
    def from_genes(cls, splitters, genes) -> "SurfaceConfig":
        genes = list(genes)
        m = len(genes) // 2
        if len(genes) != 2 * m:
            raise ValueError("gene vector must have even length")
        if not isinstance(splitters, (list, tuple)):
            splitters = (splitters,) * m
        return cls(tuple(splitters), genes[:m], genes[m:])

    def to_dict(self) -> dict:
        cells = []
        for s in self.splitters:
            if isinstance(s, SplitterState) and s.mode is not Mode.CUSTOM:
                cells.append({"mode": s.mode.value})
            elif isinstance(s, SplitterState) and s.c_j0 is not None:
                cells.append({"mode": "custom", "c_pf": s.c_j0 * 1e12})
            elif isinstance(s, SplitterState):
                cells.append({"mode": "custom", "z_ohm": [s.z.real, s.z.imag]})
            else:
                m = _mode_matrix(s)
                cells.append({"s": np.stack([m.real, m.imag], axis=-1).tolist()})
        return {
            "splitters": cells,
            "r_states": [s.code for s in self.r_states],
            "t_states": [s.code for s in self.t_states],
        }

    @classmethod
    def from_dict(cls, d: dict, f: float) -> "SurfaceConfig":
        """Build from a JSON config.

        ``splitters`` is either one entry applied to every cell or a list; an
        entry is a mode name, ``{"mode": ...}``, ``{"mode": "custom", "c_pf": c}``,
        ``{"mode": "custom", "z_ohm": [re, im]}`` or ``{"s": 2x2 [re, im]}``.
        """
        try:
            r, t = list(d["r_states"]), list(d["t_states"])
        except (KeyError, TypeError):
            raise SchemaError("config needs r_states and t_states") from None
        sp = d.get("splitters", d.get("mode", "hybrid"))
        if not isinstance(sp, list):
            sp = [sp] * len(r)
        return cls(tuple(_splitter_from_json(x, f) for x in sp), r, t)


def _splitter_from_json(x, f):
    if isinstance(x, str):
        return mode_preset(Mode.parse(x), f)
    if not isinstance(x, dict):
        raise SchemaError(f"bad splitter entry {x!r}")
    if "s" in x:
        a = np.asarray(x["s"], dtype=float)
        if a.shape != (2, 2, 2):
            raise SchemaError("splitter 's' must be a 2x2 matrix of [re, im] pairs")
        return TwoPortNetwork(a[..., 0] + 1j * a[..., 1])
    mode = Mode.parse(x.get("mode", "custom"))
    if mode is not Mode.CUSTOM:
        return mode_preset(mode, f)
    if "c_pf" in x:
        return splitter_state(float(x["c_pf"]) * 1e-12, f, mode=Mode.CUSTOM)
    if "z_ohm" in x:
        re, im = x["z_ohm"]
        return impedance_state(complex(re, im), f=f)
    raise SchemaError("custom splitter needs c_pf or z_ohm")


@dataclass(frozen=True, eq=False)
class CellArrays:
    """Scattering entries of all M cell two-ports, one array per entry."""

    s11: np.ndarray
    s12: np.ndarray
    s21: np.ndarray
    s22: np.ndarray
    z0: float = 50.0

    @classmethod
    def from_networks(cls, nets, z0: float = 50.0) -> "CellArrays":
        s = np.array([_mode_matrix(n) for n in nets], dtype=complex)
        return cls(s[:, 0, 0], s[:, 0, 1], s[:, 1, 0], s[:, 1, 1], z0)

    def __len__(self):
        return len(self.s11)

    def network(self, k: int) -> TwoPortNetwork:
        return TwoPortNetwork(np.array([[self.s11[k], self.s12[k]], [self.s21[k], self.s22[k]]]), self.z0)


def _cells(x) -> CellArrays:
    return x if isinstance(x, CellArrays) else CellArrays.from_networks(x)


def cell_arrays(ds: EmDataset, config: SurfaceConfig) -> CellArrays:
    """Cell two-ports between reflecting and transmitting antenna terminals."""
    if config.m != ds.m:
        raise ValueError(f"config has {config.m} cells, dataset has {ds.m}")
    c = CellArrays.from_networks(config.splitters, ds.z0)
    if ds.tier is Tier.INTERNAL_PORTS:
        return c
    e1 = np.exp(1j * np.array([s.phase for s in config.r_states]))
    e2 = np.exp(1j * np.array([s.phase for s in config.t_states]))
    return CellArrays(c.s11 * e1 * e1, c.s12 * e1 * e2, c.s21 * e1 * e2, c.s22 * e2 * e2, ds.z0)


@dataclass(frozen=True, eq=False)
class LoadMatrix:
    """Loads of the reflecting array: M x M antenna block plus diagonal switch loads."""

    z_ar_l: np.ndarray
    z_pr_l: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __post_init__(self):
        a = np.array(self.z_ar_l, dtype=complex)
        p = np.array(self.z_pr_l, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("z_ar_l must be square")
        if p.ndim == 2:
            if np.any(p - np.diag(np.diag(p))):
                raise ValueError("internal-port loads must be diagonal")
            p = np.diag(p).copy()
        object.__setattr__(self, "z_ar_l", a)
        object.__setattr__(self, "z_pr_l", p)

    @property
    def full(self) -> np.ndarray:
        m, q = self.z_ar_l.shape[0], self.z_pr_l.size
        z = np.zeros((m + q, m + q), dtype=complex)
        z[:m, :m] = self.z_ar_l
        z[m:, m:] = np.diag(self.z_pr_l)
        return z


def internal_loads(states, f: float) -> np.ndarray:
    """Diode loads of all switch ports, antenna by antenna (S1..S6 each)."""
    if not len(states):
        return np.zeros(0, dtype=complex)
    return np.concatenate([state_load_vector(s, f) for s in states])


def _is_diagonal(z) -> bool:
    off = z.copy()
    np.fill_diagonal(off, 0)
    return not np.any(off)


def _one_port_z(gamma, z0):
    """Impedance of reflection coefficients; open circuits (gamma = 1) become inf."""
    gamma = np.asarray(gamma, dtype=complex)
    out = np.full(gamma.shape, np.inf, dtype=complex)
    ok = np.abs(1 - gamma) > 1e-14
    out[ok] = netalg.gamma_to_z(gamma[ok], z0)
    return out


def _switch_loads(ds, states, override):
    if ds.q == 0:
        return np.zeros(0, dtype=complex)
    if override is not None:
        z = np.asarray(override, dtype=complex)
        if z.shape != (ds.q,):
            raise ValueError(f"need {ds.q} internal loads, got shape {z.shape}")
        return z
    if ds.q_per_antenna != SWITCHES_PER_ANTENNA:
        raise SchemaError(f"state loads need {SWITCHES_PER_ANTENNA} switch ports per antenna, "
                          f"dataset has {ds.q_per_antenna}; pass explicit loads")
    return internal_loads(states, ds.f)


def transmit_array_impedance(ds: EmDataset, t_states=None, z_pt_l=None) -> np.ndarray:
    """Antenna-port impedance of the transmitting array with switch ports loaded."""
    z_aa, z_ap, z_pa, z_pp = ds.blocks("t")
    if ds.q == 0:
        return np.array(z_aa)
    zl = _switch_loads(ds, t_states, z_pt_l)
    k = netalg.solve(z_pp + np.diag(zl), z_pa)
    return z_aa - z_ap @ k


def reflect_side_load(ds: EmDataset, cells, z_ta, diagnostics: dict | None = None) -> np.ndarray:
    """Load matrix seen by the reflecting antenna ports.

    Each cell two-port is terminated by the transmitting array. Uncoupled
    transmitting arrays reduce per cell to a one-port; coupled ones use the
    chain parameters of all cells at once. Cells without a through path are
    plain one-ports and load the transmitting array with their port-2
    impedance.
    """
    c = _cells(cells)
    z_ta = np.asarray(z_ta, dtype=complex)
    z0 = c.z0
    m = len(c)
    if z_ta.shape != (m, m):
        raise ValueError(f"Z_TA must be {m}x{m}")
    if diagnostics is None:
        diagnostics = {}
    if _is_diagonal(z_ta):
        gl = netalg.z_to_gamma(np.diag(z_ta), z0)
        gin = netalg.input_reflection(c.s11, c.s12, c.s21, c.s22, gl)
        diagnostics["load_path"] = "one-port"
        return np.diag(_one_port_z(gin, z0))
    thru = np.abs(c.s21) >= CASCADE_LIMIT
    iso = ~thru
    out = np.zeros((m, m), dtype=complex)
    zt = z_ta[np.ix_(thru, thru)]
    if iso.any():
        # isolated cells terminate their transmitting antenna with the splitter's port-2 impedance
        out[np.ix_(iso, iso)] = np.diag(_one_port_z(c.s11[iso], z0))
        # open-circuited transmitting antennas carry no current and drop out
        z2 = _one_port_z(c.s22[iso], z0)
        shorted = np.flatnonzero(iso)[np.isfinite(z2)]
        if thru.any() and shorted.size:
            zt = zt - z_ta[np.ix_(thru, shorted)] @ netalg.solve(
                z_ta[np.ix_(shorted, shorted)] + np.diag(z2[np.isfinite(z2)]), z_ta[np.ix_(shorted, thru)])
        diagnostics["isolated_cells"] = np.flatnonzero(iso).tolist()
    if thru.any():
        a, b, cc, d = netalg.s_to_abcd(c.s11[thru], c.s12[thru], c.s21[thru], c.s22[thru], z0)
        num = a[:, None] * zt + np.diag(b)
        den = cc[:, None] * zt + np.diag(d)
        # X = num @ den^-1  <=>  den^T X^T = num^T
        out[np.ix_(thru, thru)] = netalg.solve(den.T, num.T).T
    diagnostics["load_path"] = "chain"
    return out


def load_from_zparams(zparams, z_ta) -> np.ndarray:
    """Load matrix from cell Z-parameters (cells that have them).

    With ``v_r = z11 (-i_r) + z12 (-i_t)`` and ``v_t = z21 (-i_r) + z22 (-i_t)``
    solved for the transmitting side, ``i_t = a v_r + b i_r`` and
    ``v_t = -c v_r + d i_r`` with the diagonal coefficients below; combined
    with ``v_t = Z_TA i_t`` this yields ``Z = (C + Z_TA A)^-1 (Z_TA B - D)``.
    """
    zp = np.asarray(zparams, dtype=complex)
    z11, z12, z21, z22 = zp[:, 0, 0], zp[:, 0, 1], zp[:, 1, 0], zp[:, 1, 1]
    a = -1 / z12
    b = -z11 / z12
    c = -z22 / z12
    d = z22 * z11 / z12 - z21
    z_ta = np.asarray(z_ta, dtype=complex)
    return netalg.solve(np.diag(c) + z_ta * a[None, :], z_ta * b[None, :] - np.diag(d))


def transmitted_from_zparams(zparams, i_r, v_r) -> np.ndarray:
    zp = np.asarray(zparams, dtype=complex)
    z11, z12 = zp[:, 0, 0], zp[:, 0, 1]
    return (-1 / z12) * v_r + (-z11 / z12) * i_r


def port_currents(ds: EmDataset, loads: LoadMatrix, v_oc) -> tuple[np.ndarray, np.ndarray]:
    """Currents into, and voltages across, every reflecting-array port.

    Ports with an infinite (open-circuit) load carry no current; their
    voltage is the Thevenin voltage plus the coupling from the other ports.
    """
    v_oc = np.asarray(v_oc, dtype=complex)
    zl = loads.full
    if zl.shape != ds.z_r.shape or v_oc.shape != (ds.n_ports,):
        raise ValueError("load matrix / excitation do not match the dataset")
    opened = ~np.isfinite(np.diag(zl))
    i = np.zeros(ds.n_ports, dtype=complex)
    v = np.zeros(ds.n_ports, dtype=complex)
    keep = ~opened
    if opened.any():
        rest = zl[np.ix_(opened, keep)], zl[np.ix_(keep, opened)]
        if any(np.any(r != 0) for r in rest):
            raise ValueError("an open-circuit load may not be coupled to other loads")
    zk = zl[np.ix_(keep, keep)]
    z = ds.z_r[np.ix_(keep, keep)] + zk
    if _is_diagonal(z):
        dz = np.diag(z)
        if np.any(np.abs(dz) < 1e-300):
            raise netalg.SingularSystem("zero total impedance at a port", np.inf)
        i[keep] = -v_oc[keep] / dz
    else:
        i[keep] = -netalg.solve(z, v_oc[keep])
    v[keep] = -zk @ i[keep]
    v[opened] = ds.z_r[opened] @ i + v_oc[opened]
    return i, v


def transmitted_currents(i_r, v_r, cells, z_ta=None) -> np.ndarray:
    """Currents delivered by each cell into its transmitting antenna.

    Cells without a through path deliver nothing themselves, but when
    ``z_ta`` couples their antenna to the others and the splitter's port 2
    is not open, the antenna carries the current induced by its neighbours.
    """
    c = _cells(cells)
    m = len(c)
    i_r = np.asarray(i_r)[:m]
    v_r = np.asarray(v_r)[:m]
    out = np.zeros(m, dtype=complex)
    thru = np.abs(c.s21) >= CASCADE_LIMIT
    if thru.any():
        a, b, cc, d = netalg.s_to_abcd(c.s11[thru], c.s12[thru], c.s21[thru], c.s22[thru], c.z0)
        det = a * d - b * cc
        out[thru] = (-cc * v_r[thru] - a * i_r[thru]) / det
    if z_ta is not None and thru.any() and not thru.all():
        z_ta = np.asarray(z_ta, dtype=complex)
        iso = np.flatnonzero(~thru)
        z2 = _one_port_z(c.s22[iso], c.z0)
        s = iso[np.isfinite(z2)]
        if s.size:
            t = np.flatnonzero(thru)
            rhs = z_ta[np.ix_(s, t)] @ out[t]
            out[s] = -netalg.solve(z_ta[np.ix_(s, s)] + np.diag(z2[np.isfinite(z2)]), rhs)
    return out


def _grid_index(ds, grid):
    if grid is None:
        return None
    try:
        return ds.grid.subgrid_index(grid)
    except GridMismatch:
        raise GridMismatch(f"requested {grid!r} is not contained in the dataset grid {ds.grid!r}") from None


def _select(ds, arr, idx):
    if idx is None:
        return arr
    it, ip = idx
    if arr.ndim == 2:
        return arr[np.ix_(it, ip)]
    return arr[:, it[:, None], ip[None, :]]


def reflected_field(ds: EmDataset, i_r, grid: AngleGrid | None = None, correction=None) -> FieldPattern:
    """Port superposition plus the open-circuit/structural difference term.

    ``correction`` is ``e_oc - e_r_str`` on ``grid``; the dataset's stored
    value is used when omitted.
    """
    idx = _grid_index(ds, grid)
    g = grid or ds.grid
    if correction is None:
        correction = _select(ds, ds.e_oc - ds.e_r_str, idx)
    e = _select(ds, ds.e_r_ports, idx)
    vals = np.tensordot(np.asarray(i_r, dtype=complex), e, axes=1) + correction
    return FieldPattern(g, vals, ds.f)


def effective_transmit_patterns(ds: EmDataset, t_states, grid=None, z_pt_l=None) -> np.ndarray:
    """Pattern of each transmitting antenna port with its switches loaded, shape (M, ...)."""
    idx = _grid_index(ds, grid)
    e = _select(ds, ds.e_t_ports, idx)
    m = ds.m
    if ds.tier is Tier.BEHAVIORAL or ds.q == 0:
        ph = np.exp(1j * np.array([PhaseState.parse(s).phase for s in t_states]))
        return e[:m] * ph[:, None, None]
    _, _, z_pa, z_pp = ds.blocks("t")
    zl = _switch_loads(ds, t_states, z_pt_l)
    k = netalg.solve(z_pp + np.diag(zl), z_pa)
    return e[:m] - np.tensordot(k.T, e[m:], axes=1)


def transmitted_field(ds: EmDataset, i_t, t_states, grid: AngleGrid | None = None, z_pt_l=None) -> FieldPattern:
    """Field of the transmitting array driven with antenna-port currents ``i_t``.

    In the behavioral tier ``i_t`` is the current ahead of each antenna's
    phase stage and the state phase is applied here.
    """
    eff = effective_transmit_patterns(ds, t_states, grid, z_pt_l)
    vals = np.tensordot(np.asarray(i_t, dtype=complex), eff, axes=1)
    return FieldPattern(grid or ds.grid, vals, ds.f)


@dataclass(frozen=True, eq=False)
class SolveResult:
    i_r: np.ndarray
    v_r: np.ndarray
    i_t: np.ndarray
    e_r: FieldPattern | None = None
    e_t: FieldPattern | None = None
    e_r_total: FieldPattern | None = None
    i_tx: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def default_grid(ds: EmDataset) -> AngleGrid:
    """The phi = 90/270 deg cut when the dataset contains it, else the dataset grid."""
    cut = AngleGrid.cut(90.0)
    try:
        ds.grid.subgrid_index(cut)
    except GridMismatch:
        return ds.grid
    return cut


class _Stage:
    def __init__(self):
        self.name = "setup"

    def __call__(self, name):
        self.name = name
        return self


def excitation(ds: EmDataset, incidence=None, amplitude: float = 1.0, grid: AngleGrid | None = None):
    """(v_oc, e_oc - e_r_str, e_r_str) for the requested incidence on ``grid``."""
    same = incidence is None or (abs(incidence[0] - ds.incidence[0]) < 1e-12
                                 and abs(((incidence[1] - ds.incidence[1]) + 180) % 360 - 180) < 1e-12)
    if same:
        idx = _grid_index(ds, grid)
        return (amplitude * ds.v_oc, amplitude * _select(ds, ds.e_oc - ds.e_r_str, idx),
                amplitude * _select(ds, ds.e_r_str, idx))
    return reexcite(ds, incidence, amplitude, grid)


def solve_currents(ds: EmDataset, config: SurfaceConfig, v_oc, z_pr_l=None, z_pt_l=None) -> SolveResult:
    """Circuit part of `simulate` (no fields)."""
    stage = _Stage()
    diag = {}
    try:
        stage("transmit-impedance")
        z_ta = transmit_array_impedance(ds, config.t_states, z_pt_l)
        stage("cell-load")
        cells = cell_arrays(ds, config)
        z_ar = reflect_side_load(ds, cells, z_ta, diag)
        stage("port-currents")
        loads = LoadMatrix(z_ar, _switch_loads(ds, config.r_states, z_pr_l))
        i_r, v_r = port_currents(ds, loads, v_oc)
        stage("transmitted-currents")
        i_term = transmitted_currents(i_r, v_r, cells, z_ta)
        if ds.tier is Tier.BEHAVIORAL or ds.q == 0:
            ph = np.exp(1j * np.array([s.phase for s in config.t_states]))
            i_t = i_term * ph.conj()
            i_tx = i_term
        else:
            i_t = i_term
            _, _, z_pa, z_pp = ds.blocks("t")
            zl = _switch_loads(ds, config.t_states, z_pt_l)
            i_tx = np.concatenate([i_t, -netalg.solve(z_pp + np.diag(zl), z_pa @ i_t)])
    except BdrisError as exc:
        exc.stage = stage.name
        exc.args = (f"[{stage.name}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
        raise
    diag.update(z_ta=z_ta, z_ar_l=z_ar)
    return SolveResult(i_r, v_r, i_t, i_tx=i_tx, diagnostics=diag)


def simulate(ds: EmDataset, config: SurfaceConfig, incidence=None, grid: AngleGrid | None = None,
             amplitude: float = 1.0, z_pr_l=None, z_pt_l=None) -> SolveResult:
    """Currents and both far fields for one configuration.

    ``incidence`` defaults to the dataset's reference direction; ``grid``
    defaults to the phi = 90/270 deg cut.
    """
    grid = grid or default_grid(ds)
    try:
        v_oc, corr, e_str = excitation(ds, incidence, amplitude, grid)
    except BdrisError as exc:
        exc.stage = "excitation"
        raise
    res = solve_currents(ds, config, v_oc, z_pr_l, z_pt_l)
    try:
        e_r = reflected_field(ds, res.i_r, grid, corr)
        e_t = transmitted_field(ds, res.i_t, config.t_states, grid, z_pt_l)
    except BdrisError as exc:
        exc.stage = "fields"
        raise
    e_tot = FieldPattern(grid, e_r.values + e_str, ds.f)
    return SolveResult(res.i_r, res.v_r, res.i_t, e_r, e_t, e_tot, res.i_tx, res.diagnostics)


def mirrored_config(config: SurfaceConfig) -> SurfaceConfig:
    """Configuration of the same physical surface seen from the other side."""
    flipped = []
    for s in config.splitters:
        m = _mode_matrix(s)
        flipped.append(TwoPortNetwork(m[::-1, ::-1]))
    return SurfaceConfig(tuple(flipped), config.t_states, config.r_states)
