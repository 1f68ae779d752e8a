"""Command line: ``bdris <command> [flags]``.

Commands: gen-dataset, splitter-sweep, simulate, optimize, metrics.

Every command accepts ``--config FILE`` (JSON object whose keys are flag
names, dashes or underscores) and command-line flags override it. A run
manifest with the fully resolved parameters is written next to the outputs;
passing that manifest back as ``--config`` repeats the run.

Exit codes: 0 success, 2 usage error, 3 input/output or data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cell import IdealSplitter
from .emdata import ElementParams, Tier, generate_synthetic, load_dataset, save_dataset
from .errors import BdrisError, DataError, NumericalError, UsageError
from .optimize import (BeamTarget, GaParams, achieved_metrics, default_threads, ga_optimize,
                       optimization_report)
from .pattern import (AngleGrid, Sector, beam_metrics, read_pattern_csv, structural_subtract,
                      write_pattern_csv)
from .splitter import Mode, impedance_state, mode_preset, splitter_state, sweep, sweep_row, write_sweep_csv
from .thevenin import SurfaceConfig, simulate

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _dump(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(args, outputs, inputs=()):
    params = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    return {
        "command": args.command,
        "version": __version__,
        "params": params,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": sorted(str(p) for p in outputs),
    }


def _grid_from(name: str, ds_grid=None) -> AngleGrid | None:
    if name == "cut":
        return AngleGrid.cut(90.0)
    if name == "full":
        return AngleGrid.full(1.0, 5.0)
    if name == "dataset":
        return ds_grid
    raise UsageError(f"unknown grid {name!r}")


# --- commands ---------------------------------------------------------------

def cmd_gen_dataset(args):
    if args.mx < 1 or args.my < 1:
        raise UsageError("--mx and --my must be at least 1")
    if args.spacing_mm <= 0 or args.freq_ghz <= 0:
        raise UsageError("spacing and frequency must be positive")
    grid = AngleGrid.full(args.theta_step, args.phi_step)
    ds = generate_synthetic(
        args.mx, args.my, args.spacing_mm * 1e-3, args.freq_ghz * 1e9,
        element=ElementParams(q=args.q), tier=Tier(args.tier), grid=grid,
        incidence=(args.incidence_theta, args.incidence_phi), coupling=args.coupling)
    out = Path(args.outdir) / args.out
    save_dataset(ds, out)
    _dump(_manifest(args, [out]), Path(args.outdir) / "manifest.json")
    print(f"M={ds.m} Q={ds.q} f={ds.f / 1e9:g} GHz spacing={args.spacing_mm:g} mm tier={ds.tier.value} -> {out}")


def cmd_splitter_sweep(args):
    out = Path(args.outdir) / args.out
    if args.z_ohm is not None:
        z = complex(args.z_ohm.replace(" ", "").replace("i", "j"))
        rows = [sweep_row(impedance_state(z), args.freq_ghz * 1e9)]
    else:
        if args.c_points < 1 or args.f_points < 1:
            raise UsageError("sweep needs at least one point")
        if args.c_min_pf <= 0 or args.c_max_pf < args.c_min_pf:
            raise UsageError("empty or invalid capacitance range")
        f_max = args.f_max_ghz if args.f_max_ghz is not None else args.freq_ghz
        if f_max < args.freq_ghz:
            raise UsageError("empty frequency range")
        cs = np.linspace(args.c_min_pf, args.c_max_pf, args.c_points) * 1e-12
        fs = np.linspace(args.freq_ghz, f_max, args.f_points) * 1e9
        rows = sweep(cs, fs)
    write_sweep_csv(out, rows)
    _dump(_manifest(args, [out]), Path(args.outdir) / "manifest.json")
    finite = [r["ratio_db"] for r in rows if np.isfinite(r["ratio_db"])]
    if finite:
        print(f"{len(rows)} points, ratio {min(finite):.2f} .. {max(finite):.2f} dB -> {out}")
    else:
        print(f"{len(rows)} points -> {out}")


def _surface(args, ds):
    if args.surface:
        try:
            d = json.loads(Path(args.surface).read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{args.surface}: {exc}") from None
        return SurfaceConfig.from_dict(d, ds.f)
    r = list(args.r_states) if args.r_states else ["00"] * ds.m
    t = list(args.t_states) if args.t_states else ["00"] * ds.m
    return SurfaceConfig(tuple([mode_preset(args.mode, ds.f)] * ds.m), _states(r, ds.m), _states(t, ds.m))


def _states(x, m):
    if len(x) == 1 and len(x[0]) == 2 * m:
        s = x[0]
        x = [s[i:i + 2] for i in range(0, len(s), 2)]
    if len(x) == 1 and m > 1:
        x = x * m
    if len(x) != m:
        raise UsageError(f"need {m} states, got {len(x)}")
    return x


def _baselines(cfg: SurfaceConfig, kind: str, f: float):
    """Configurations whose fields stand in for the structural scattering."""
    if kind == "ideal":
        through, block = IdealSplitter(0.0, 1.0, 0.0, -np.pi / 2), IdealSplitter(1.0, 0.0)
    else:
        through, block = mode_preset(Mode.TRANSMISSION, f), mode_preset(Mode.REFLECTION, f)
    m = cfg.m
    return (SurfaceConfig((through,) * m, cfg.r_states, cfg.t_states),
            SurfaceConfig((block,) * m, cfg.r_states, cfg.t_states))


def cmd_simulate(args):
    ds = load_dataset(args.dataset)
    cfg = _surface(args, ds)
    grid = _grid_from(args.grid, ds.grid)
    inc = None if args.incidence_theta is None else (args.incidence_theta, args.incidence_phi)
    res = simulate(ds, cfg, incidence=inc, grid=grid)
    outdir = Path(args.outdir)
    outs = [outdir / "pattern_r.csv", outdir / "pattern_t.csv", outdir / "metrics.json"]
    outdir.mkdir(parents=True, exist_ok=True)
    write_pattern_csv(res.e_r, outs[0])
    write_pattern_csv(res.e_t, outs[1])
    metrics = {}
    for key, p, sector in (("reflection", res.e_r, Sector.REFLECTION), ("transmission", res.e_t, Sector.TRANSMISSION)):
        try:
            metrics[key] = beam_metrics(p, sector, args.phi_cut).to_dict()
        except NumericalError as exc:
            metrics[key] = {"error": str(exc)}
    if args.structural_subtract:
        base_t, base_r = _baselines(cfg, args.baseline, ds.f)
        b_t = simulate(ds, base_t, incidence=inc, grid=grid)
        b_r = simulate(ds, base_r, incidence=inc, grid=grid)
        sub_r = structural_subtract(res.e_r_total, b_t.e_r_total)
        sub_t = structural_subtract(res.e_t, b_r.e_t)
        outs += [outdir / "pattern_r_subtracted.csv", outdir / "pattern_t_subtracted.csv"]
        write_pattern_csv(sub_r, outs[-2])
        write_pattern_csv(sub_t, outs[-1])
    _dump(metrics, outs[2])
    _dump(_manifest(args, outs, [p for p in (args.dataset, args.surface) if p]), outdir / "manifest.json")
    print(json.dumps(metrics, indent=2, sort_keys=True))


def cmd_optimize(args):
    target = BeamTarget.from_signed(args.mode, args.theta_r, args.theta_t, args.phi_cut)
    ds = load_dataset(args.dataset)
    params = GaParams(population=args.population, generations=args.generations,
                      crossover_rate=args.crossover, mutation_rate=args.mutation,
                      elitism=args.elitism, tournament=args.tournament, seed=args.seed,
                      threads=args.threads or default_threads())
    splitters = mode_preset(target.mode, ds.f) if args.c_pf is None else splitter_state(args.c_pf * 1e-12, ds.f)
    res = ga_optimize(ds, target.mode, target, params, splitters)
    report = optimization_report(ds, target, params, res, (splitters,) * ds.m)
    outdir = Path(args.outdir)
    outs = [outdir / "report.json", outdir / "best_config.json"]
    _dump(report, outs[0])
    _dump(report["config"], outs[1])
    _dump(_manifest(args, outs, [args.dataset]), outdir / "manifest.json")
    print(json.dumps({"best": report["best"], "metrics": report["metrics"]}, indent=2, sort_keys=True))


def cmd_metrics(args):
    p = read_pattern_csv(args.pattern)
    if args.baseline_pattern:
        p = structural_subtract(p, read_pattern_csv(args.baseline_pattern))
    m = beam_metrics(p, Sector(args.sector), args.phi_cut).to_dict()
    if args.out:
        out = Path(args.outdir) / args.out
        _dump(m, out)
        _dump(_manifest(args, [out], [p for p in (args.pattern, args.baseline_pattern) if p]),
              Path(args.outdir) / "manifest.json")
    print(json.dumps(m, indent=2, sort_keys=True))


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bdris", description="Hybrid transmitting/reflecting surface toolkit")
    p.add_argument("--version", action="version", version=f"bdris {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON file with flag values (flags override it)")
        sp.add_argument("--outdir", default=".", help="output directory")

    g = sub.add_parser("gen-dataset", help="write a synthetic electromagnetic dataset")
    common(g)
    g.add_argument("--mx", type=int, default=4)
    g.add_argument("--my", type=int, default=4)
    g.add_argument("--spacing-mm", type=float, default=62.5)
    g.add_argument("--freq-ghz", type=float, default=2.4)
    g.add_argument("--tier", choices=[t.value for t in Tier], default="behavioral")
    g.add_argument("--coupling", action="store_true", help="mutual resistance from the element patterns")
    g.add_argument("--q", type=float, default=1.0, help="element pattern exponent (cos^q)")
    g.add_argument("--theta-step", type=float, default=1.0)
    g.add_argument("--phi-step", type=float, default=5.0)
    g.add_argument("--incidence-theta", type=float, default=0.0)
    g.add_argument("--incidence-phi", type=float, default=0.0)
    g.add_argument("--out", default="dataset.json")
    g.set_defaults(func=cmd_gen_dataset)

    s = sub.add_parser("splitter-sweep", help="tabulate the splitter against capacitance and frequency")
    common(s)
    s.add_argument("--c-min-pf", type=float, default=0.35)
    s.add_argument("--c-max-pf", type=float, default=3.2)
    s.add_argument("--c-points", type=int, default=58)
    s.add_argument("--freq-ghz", type=float, default=2.4)
    s.add_argument("--f-max-ghz", type=float, default=None)
    s.add_argument("--f-points", type=int, default=1)
    s.add_argument("--z-ohm", default=None, help="single series impedance, e.g. 100 or 2.5+37j")
    s.add_argument("--out", default="sweep.csv")
    s.set_defaults(func=cmd_splitter_sweep)

    m = sub.add_parser("simulate", help="fields of one surface configuration")
    common(m)
    m.add_argument("--dataset", required=True)
    m.add_argument("--surface", help="surface configuration JSON (as written by optimize)")
    m.add_argument("--mode", default="hybrid", choices=["reflection", "hybrid", "transmission"])
    m.add_argument("--r-states", nargs="+", help="reflecting states, e.g. 00 01 or one code for all")
    m.add_argument("--t-states", nargs="+")
    m.add_argument("--incidence-theta", type=float, default=None)
    m.add_argument("--incidence-phi", type=float, default=0.0)
    m.add_argument("--grid", choices=["cut", "full", "dataset"], default="cut")
    m.add_argument("--phi-cut", type=float, default=90.0)
    m.add_argument("--structural-subtract", action="store_true",
                   help="also write patterns with the baseline configurations subtracted")
    m.add_argument("--baseline", choices=["ideal", "preset"], default="ideal")
    m.set_defaults(func=cmd_simulate)

    o = sub.add_parser("optimize", help="genetic search for beam-steering states")
    common(o)
    o.add_argument("--dataset", required=True)
    o.add_argument("--mode", required=True, choices=["reflection", "hybrid", "transmission"])
    o.add_argument("--theta-r", type=float, default=None, help="signed reflection target in the cut (deg)")
    o.add_argument("--theta-t", type=float, default=None, help="signed transmission target in the cut (deg)")
    o.add_argument("--phi-cut", type=float, default=90.0)
    o.add_argument("--c-pf", type=float, default=None, help="custom varactor capacitance instead of the preset")
    o.add_argument("--population", type=int, default=64)
    o.add_argument("--generations", type=int, default=200)
    o.add_argument("--crossover", type=float, default=0.9)
    o.add_argument("--mutation", type=float, default=None)
    o.add_argument("--elitism", type=int, default=2)
    o.add_argument("--tournament", type=int, default=3)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--threads", type=int, default=None, help="worker threads (default: BDRIS_THREADS or 1)")
    o.set_defaults(func=cmd_optimize)

    t = sub.add_parser("metrics", help="beam metrics of a pattern CSV")
    common(t)
    t.add_argument("--pattern", required=True)
    t.add_argument("--baseline-pattern", help="structural pattern to subtract first")
    t.add_argument("--sector", choices=[x.value for x in Sector], default="reflection")
    t.add_argument("--phi-cut", type=float, default=90.0)
    t.add_argument("--out", default=None)
    t.set_defaults(func=cmd_metrics)
    return p


def _load_config(path) -> dict:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: {exc}") from None
    if not isinstance(d, dict):
        raise DataError(f"{path}: expected a JSON object")
    if isinstance(d.get("params"), dict):  # a run manifest
        d = d["params"]
    return {k.replace("-", "_"): v for k, v in d.items() if k not in ("command", "func", "config")}


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = _load_config(args.config)
        sp = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sp._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise UsageError(f"unknown keys in {args.config}: {', '.join(unknown)}")
        sp.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        Path(args.outdir).mkdir(parents=True, exist_ok=True)
        args.func(args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except BdrisError as exc:
        stage = f" (stage: {exc.stage})" if exc.stage else ""
        print(f"bdris: error{stage}: {exc}", file=sys.stderr)
        if isinstance(exc, NumericalError):
            return EXIT_NUMERIC
        if isinstance(exc, DataError):
            return EXIT_IO
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"bdris: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError, KeyError) as exc:
        print(f"bdris: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"bdris: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
