"""Discrete beam steering: genetic algorithm and exhaustive search.

A configuration is a chromosome of 2M two-bit genes, the M reflecting
antenna states followed by the M transmitting antenna states. The cost is
minus the product of the reflected and transmitted field magnitudes at the
two target directions; in the single-sided modes the unused factor is one.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .antenna import PhaseState
from .emdata import EmDataset
from .errors import TooLarge, UsageError
from .pattern import AngleGrid, Sector, beam_metrics, from_signed, to_signed
from .splitter import Mode, mode_preset
from .thevenin import (SurfaceConfig, default_grid, effective_transmit_patterns, excitation,
                       simulate, solve_currents)

TIE_RTOL = 1e-12
EXHAUSTIVE_LIMIT = 10 ** 6
_ACTIVE = (Mode.REFLECTION, Mode.TRANSMISSION, Mode.HYBRID)


@dataclass(frozen=True)
class BeamTarget:
    """Target directions in degrees; the unused one may be None."""

    mode: Mode
    omega_r: tuple | None = None
    omega_t: tuple | None = None

    def __post_init__(self):
        mode = Mode.parse(self.mode)
        if mode not in _ACTIVE:
            raise UsageError(f"optimization mode must be reflection, transmission or hybrid, not {mode.value}")
        object.__setattr__(self, "mode", mode)
        r, t = self.omega_r, self.omega_t
        if mode is not Mode.TRANSMISSION and r is None:
            raise UsageError(f"{mode.value} mode needs a reflection target")
        if mode is not Mode.REFLECTION and t is None:
            raise UsageError(f"{mode.value} mode needs a transmission target")
        if r is not None:
            r = (float(r[0]), float(r[1]) % 360.0)
            if not 0.0 <= r[0] < 90.0:
                raise UsageError(f"reflection target theta={r[0]} deg is outside [0, 90)")
        if t is not None:
            t = (float(t[0]), float(t[1]) % 360.0)
            if not 90.0 < t[0] <= 180.0:
                raise UsageError(f"transmission target theta={t[0]} deg is outside (90, 180]")
        object.__setattr__(self, "omega_r", r)
        object.__setattr__(self, "omega_t", t)

    @classmethod
    def from_signed(cls, mode, theta_r=None, theta_t=None, phi_cut: float = 90.0) -> "BeamTarget":
        """Targets given as signed angles in the cut plane (negative -> phi_cut + 180)."""
        r = from_signed(theta_r, phi_cut) if theta_r is not None else None
        t = from_signed(theta_t, phi_cut) if theta_t is not None else None
        return cls(mode, r, t)

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "omega_r": self.omega_r, "omega_t": self.omega_t}


@dataclass(frozen=True)
class GaParams:
    population: int = 64
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None: 1 / (2M)
    elitism: int = 2
    tournament: int = 3
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.population < 2:
            raise UsageError("population must be at least 2")
        if not 0 <= self.elitism < self.population:
            raise UsageError("elitism must be in [0, population)")
        if self.generations < 0:
            raise UsageError("generations must be non-negative")
        if self.tournament < 1:
            raise UsageError("tournament size must be at least 1")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise UsageError(f"{name} must be in [0, 1]")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned value")
        if self.threads < 1:
            raise UsageError("threads must be at least 1")

    def mutation_for(self, m: int) -> float:
        return self.mutation_rate if self.mutation_rate is not None else 1.0 / (2 * m)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, order=True)
class Chromosome:
    genes: tuple

    def __post_init__(self):
        g = tuple(int(PhaseState.parse(x)) for x in self.genes)
        if not g or len(g) % 2:
            raise ValueError("a chromosome needs 2M genes")
        object.__setattr__(self, "genes", g)

    @property
    def m(self) -> int:
        return len(self.genes) // 2

    @property
    def codes(self) -> list[str]:
        return [PhaseState(g).code for g in self.genes]

    def config(self, splitters) -> SurfaceConfig:
        return SurfaceConfig.from_genes(splitters, self.genes)


def default_threads() -> int:
    env = os.environ.get("BDRIS_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"BDRIS_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise UsageError("BDRIS_THREADS must be at least 1")
        return n
    return 1


class Objective:
    """Cost of a chromosome; reads the fields at the target directions only."""

    def __init__(self, ds: EmDataset, target: BeamTarget, splitters=None, incidence=None,
                 amplitude: float = 1.0):
        self.ds = ds
        self.target = target
        if splitters is None:
            splitters = mode_preset(target.mode, ds.f)
        if not isinstance(splitters, (list, tuple)):
            splitters = (splitters,) * ds.m
        if len(splitters) != ds.m:
            raise ValueError(f"{len(splitters)} splitters for {ds.m} cells")
        self.splitters = tuple(splitters)
        self.v_oc, _, _ = excitation(ds, incidence, amplitude, None)
        self._r = self._t = None
        if target.omega_r is not None:
            g = AngleGrid.point(*target.omega_r)
            _, corr, _ = excitation(ds, incidence, amplitude, g)
            self._r = (ds.pattern_stack("r", g)[:, 0, 0], complex(corr[0, 0]))
        if target.omega_t is not None:
            self._t = AngleGrid.point(*target.omega_t)
            ds.grid.subgrid_index(self._t)
        self.cache: dict[tuple, float] = {}
        self.evaluations = 0

    def config(self, genes) -> SurfaceConfig:
        return SurfaceConfig.from_genes(self.splitters, genes)

    def fields(self, genes) -> tuple[complex, complex]:
        """Reflected and transmitted field at the targets (0 where no target)."""
        cfg = self.config(genes)
        res = solve_currents(self.ds, cfg, self.v_oc)
        e_r = e_t = 0j
        if self._r is not None:
            pats, corr = self._r
            e_r = complex(res.i_r @ pats + corr)
        if self._t is not None:
            eff = effective_transmit_patterns(self.ds, cfg.t_states, self._t)[:, 0, 0]
            e_t = complex(res.i_t @ eff)
        return e_r, e_t

    def _compute(self, genes) -> float:
        e_r, e_t = self.fields(genes)
        mode = self.target.mode
        if mode is Mode.REFLECTION:
            return -abs(e_r)
        if mode is Mode.TRANSMISSION:
            return -abs(e_t)
        return -abs(e_r) * abs(e_t)

    def __call__(self, genes) -> float:
        key = tuple(int(g) for g in genes)
        v = self.cache.get(key)
        if v is None:
            v = self._compute(key)
            self.cache[key] = v
            self.evaluations += 1
        return v

    def many(self, population, threads: int = 1) -> np.ndarray:
        """Fitness of every row; duplicates and cached rows are computed once."""
        keys = [tuple(int(g) for g in row) for row in population]
        todo = list(dict.fromkeys(k for k in keys if k not in self.cache))
        if threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                vals = list(ex.map(self._compute, todo))
        else:
            vals = [self._compute(k) for k in todo]
        for k, v in zip(todo, vals):
            self.cache[k] = v
        self.evaluations += len(todo)
        return np.array([self.cache[k] for k in keys])


def fitness(genes, ds: EmDataset, target: BeamTarget, splitters=None) -> float:
    """One-off cost evaluation; use `Objective` for repeated calls."""
    if isinstance(genes, Chromosome):
        genes = genes.genes
    return Objective(ds, target, splitters)(genes)


def _better(f, genes, best_f, best_genes) -> bool:
    """Lower cost wins; costs equal to TIE_RTOL fall back to lexicographic order."""
    if best_genes is None:
        return True
    tol = TIE_RTOL * max(abs(f), abs(best_f))
    if f < best_f - tol:
        return True
    return abs(f - best_f) <= tol and tuple(genes) < tuple(best_genes)


def _canonical(obj: Objective, genes, f):
    """Smallest gene vector among the global-phase shifts of ``genes`` that tie with it.

    Shifting every reflecting state, or every transmitting state, by the same
    amount can leave the cost unchanged; this makes the reported optimum
    independent of which member of such a family the search met first.
    """
    m = len(genes) // 2
    best_f, best_g = f, tuple(genes)
    g = np.asarray(genes)
    for a in range(4):
        for b in range(4):
            cand = tuple(np.concatenate([(g[:m] + a) % 4, (g[m:] + b) % 4]).tolist())
            fc = obj(cand)
            tol = TIE_RTOL * max(abs(fc), abs(f))
            if abs(fc - f) <= tol and cand < best_g:
                best_f, best_g = fc, cand
    return best_g, best_f


class Generation(NamedTuple):
    generation: int
    best: float
    mean: float


class GaResult(NamedTuple):
    best: Chromosome
    fitness: float
    history: list


def _tournament(rng, fit, k):
    idx = rng.integers(0, len(fit), size=k)
    return idx[np.argmin(fit[idx])]


def ga_optimize(ds: EmDataset, mode, target: BeamTarget, params: GaParams | None = None,
                splitters=None, objective: Objective | None = None) -> GaResult:
    """Genetic search over the 4^(2M) state vectors.

    Tournament selection, uniform crossover, per-gene random reset and
    elitism; a fixed generation budget keeps runs reproducible. ``mode``
    selects the splitter preset when ``splitters`` is not given and must
    agree with ``target.mode``.
    """
    params = params or GaParams()
    mode = Mode.parse(mode)
    if mode is not target.mode:
        raise UsageError(f"mode {mode.value} does not match the target's {target.mode.value}")
    obj = objective or Objective(ds, target, splitters)
    m = ds.m
    n = 2 * m
    p_mut = params.mutation_for(m)
    rng = np.random.default_rng(int(params.seed))
    pop = rng.integers(0, 4, size=(params.population, n))
    fit = obj.many(pop, params.threads)
    history = []
    best_g, best_f = None, math.inf

    def record(gen):
        nonlocal best_g, best_f
        for row, f in zip(pop, fit):
            if _better(f, row, best_f, best_g):
                best_g, best_f = tuple(int(x) for x in row), float(f)
        history.append(Generation(gen, best_f, float(np.mean(fit))))

    record(0)
    for gen in range(1, params.generations + 1):
        order = sorted(range(len(pop)), key=lambda i: (fit[i], tuple(pop[i])))
        children = [pop[i].copy() for i in order[:params.elitism]]
        while len(children) < params.population:
            a = pop[_tournament(rng, fit, params.tournament)]
            b = pop[_tournament(rng, fit, params.tournament)]
            if rng.random() < params.crossover_rate:
                mask = rng.random(n) < 0.5
                c1, c2 = np.where(mask, a, b), np.where(mask, b, a)
            else:
                c1, c2 = a.copy(), b.copy()
            for c in (c1, c2):
                hit = rng.random(n) < p_mut
                if hit.any():
                    # reset to one of the three other codes
                    c[hit] = (c[hit] + rng.integers(1, 4, size=int(hit.sum()))) % 4
                children.append(c)
        pop = np.array(children[:params.population])
        fit = obj.many(pop, params.threads)
        record(gen)
    g, f = _canonical(obj, best_g, best_f)
    return GaResult(Chromosome(g), f, history)


def exhaustive_search(ds: EmDataset, mode, target: BeamTarget, limit: int = EXHAUSTIVE_LIMIT,
                      splitters=None, one_sided: bool | None = None,
                      objective: Objective | None = None) -> tuple[Chromosome, float]:
    """Enumerate configurations and return the global optimum.

    Hybrid targets enumerate all 16^M configurations. Single-sided modes by
    default enumerate only the genes that set the active phase: reflecting
    genes in reflection mode, transmitting genes (reflecting genes at 00)
    in transmission mode; the transmitted phase is the sum of both states,
    so that still reaches every transmitted phase pattern.
    """
    mode = Mode.parse(mode)
    if mode is not target.mode:
        raise UsageError(f"mode {mode.value} does not match the target's {target.mode.value}")
    obj = objective or Objective(ds, target, splitters)
    m = ds.m
    if one_sided is None:
        one_sided = mode is not Mode.HYBRID
    free = m if one_sided else 2 * m
    count = 4 ** free
    if count > limit:
        raise TooLarge(f"{count} configurations exceed the enumeration limit {limit}")
    best_g, best_f = None, math.inf
    for combo in itertools.product(range(4), repeat=free):
        if not one_sided:
            g = combo
        elif mode is Mode.REFLECTION:
            g = combo + (0,) * m
        else:
            g = (0,) * m + combo
        f = obj(g)
        if _better(f, g, best_f, best_g):
            best_g, best_f = g, f
    g, f = _canonical(obj, best_g, best_f)
    return Chromosome(g), f


def achieved_metrics(ds: EmDataset, config: SurfaceConfig, target: BeamTarget, grid=None, phi_cut=None) -> dict:
    """Beam metrics of the controllable reflected field and of the transmitted field."""
    grid = grid or default_grid(ds)
    res = simulate(ds, config, grid=grid)
    out = {}
    cut_r = phi_cut if phi_cut is not None else (target.omega_r[1] if target.omega_r else 90.0) % 180.0
    cut_t = phi_cut if phi_cut is not None else (target.omega_t[1] if target.omega_t else 90.0) % 180.0
    if target.omega_r is not None:
        pref = to_signed(*target.omega_r, cut_r)
        out["reflection"] = beam_metrics(res.e_r, Sector.REFLECTION, cut_r, pref).to_dict()
    if target.omega_t is not None:
        pref = to_signed(*target.omega_t, cut_t)
        out["transmission"] = beam_metrics(res.e_t, Sector.TRANSMISSION, cut_t, pref).to_dict()
    return out


def optimization_report(ds: EmDataset, target: BeamTarget, params: GaParams, result: GaResult,
                        splitters) -> dict:
    cfg = result.best.config(splitters)
    return {
        "seed": int(params.seed),
        "params": params.to_dict(),
        "target": target.to_dict(),
        "history": [g._asdict() for g in result.history],
        "best": {"genes": result.best.codes, "fitness": result.fitness},
        "config": cfg.to_dict(),
        "metrics": achieved_metrics(ds, cfg, target),
    }
