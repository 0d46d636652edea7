"""Command-line interface: one binary, all stages, deterministic outputs.

Subcommands: dynamics, response, absorption, pumpprobe, 2dmap,
reconstruct, selftest. Every run resolves its configuration as
defaults <- preset <- config file <- explicit flags, executes, and
writes a manifest next to the outputs. Usage errors exit 2; numerical
failures exit 1 and leave a diagnostic file.
"""

from __future__ import annotations

import argparse
import glob as _glob
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (ConfigError, RunConfig, build_run_config,
                     parse_config_text)
from .constants import N_STATES
from .integrate import IntegrationError
from .manifest import RunManifest, StageTimer
from .pipeline import PipelineError, reconstruct_from_maps, simulate_and_reconstruct
from .presets import PRESETS, preset_mapping
from .pulse import HyperfineSample, draw_hyperfine_ensemble
from .liouville import LindbladGenerator, TimeDependentHamiltonian, hamiltonian_at
from .response import (averaged_response, read_response_binary,
                       write_response_binary, write_response_csv)
from .spectra import (absorption, render_heatmap, spectrum_map,
                      transient_absorption, write_absorption_csv,
                      write_map_binary, write_map_csv, SpectrumMap)
from .spindyn import ensemble_average_populations


def _resolve_threads(value):
    if value is None:
        value = os.environ.get("DARKSPEC_THREADS", "0")
    try:
        n = int(value)
    except ValueError:
        raise SystemExit(2)
    if n > 0:
        try:
            import numba

            numba.set_num_threads(n)
        except ImportError:
            pass
        os.environ.setdefault("OMP_NUM_THREADS", str(n))
    return n


def _load_run_config(args) -> tuple[RunConfig, dict]:
    mapping: dict = {}
    if args.preset:
        mapping.update(preset_mapping(args.preset))
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
        mapping.update(parse_config_text(text))
    if getattr(args, "seed", None) is not None:
        mapping["seed"] = args.seed
    if getattr(args, "t2", None) is not None:
        mapping["t2_fs"] = args.t2
    run = build_run_config(mapping)
    return run, mapping


def _outdir(args) -> Path:
    out = Path(args.out or ".")
    if out.suffix:          # looks like a file path; use its directory
        out.parent.mkdir(parents=True, exist_ok=True)
        return out.parent
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, run: RunConfig, mapping: dict, sub: str) -> RunManifest:
    grids = run.grids
    return RunManifest(
        subcommand=sub,
        config_snapshot={k: v for k, v in sorted(mapping.items())},
        seed=run.system.rng_seed,
        grid_parameters={
            "n_t1": grids.n_t1, "dt1_fs": grids.dt1, "n_t3": grids.n_t3,
            "dt3_fs": grids.dt3, "t2_fs": grids.t2, "zero_pad": grids.zero_pad,
            "n_t": run.dynamics.n_t, "dt_fs": run.dynamics.dt,
        },
        code_version=__version__,
    )


def _dump_hamiltonian(run: RunConfig, t: float) -> None:
    samples = draw_hyperfine_ensemble(run.system.hyperfine, run.system.rng())
    ham = TimeDependentHamiltonian(run.system, run.pulse, samples[0])
    h = hamiltonian_at(t, ham)
    for i in range(N_STATES):
        print(",".join(f"{h[i, j].real:.12g}" for j in range(N_STATES)))


def _cmd_dynamics(args) -> int:
    run, mapping = _load_run_config(args)
    out = Path(args.out or "dynamics.csv")
    if out.is_dir() or (not out.suffix and not out.exists()):
        out = (_outdir(args) / "dynamics.csv")
    out.parent.mkdir(parents=True, exist_ok=True)

    man = _manifest(args, run, mapping, "dynamics")
    with StageTimer(man, "propagation"):
        traj = ensemble_average_populations(run.system, run.pulse,
                                            run.dynamics.times())
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("t_fs,pop_S,pop_T0,pop_Tplus,pop_Tminus\n")
        for k, t in enumerate(traj.times):
            p = traj.populations[k]
            fh.write(f"{t:.9g},{p[0]:.17g},{p[1]:.17g},{p[2]:.17g},{p[3]:.17g}\n")
    man.add_output(out)
    man.write(out.parent / (out.stem + ".manifest.json"))
    print(f"wrote {out}")
    return 0


def _cmd_response(args) -> int:
    run, mapping = _load_run_config(args)
    if args.dump_hamiltonian is not None:
        _dump_hamiltonian(run, args.dump_hamiltonian)
        return 0
    out = _outdir(args)
    man = _manifest(args, run, mapping, "response")
    with StageTimer(man, "response"):
        rset = averaged_response(run.system, run.pulse, run.grids)
    bin_path = out / "response.bin"
    csv_path = out / "response.csv"
    write_response_binary(rset.total, bin_path)
    write_response_csv(rset.total, csv_path)
    man.add_output(bin_path)
    man.add_output(csv_path)
    man.write(out / "response.manifest.json")
    print(f"wrote {bin_path} and {csv_path}")
    return 0


def _cmd_absorption(args) -> int:
    run, mapping = _load_run_config(args)
    out = _outdir(args)
    man = _manifest(args, run, mapping, "absorption")
    with StageTimer(man, "absorption"):
        spec = absorption(run.system, run.pulse, run.grids)
    path = out / "absorption.csv"
    write_absorption_csv(spec, path)
    man.add_output(path)
    man.write(out / "absorption.manifest.json")
    print(f"wrote {path}")
    return 0


def _cmd_pumpprobe(args) -> int:
    run, mapping = _load_run_config(args)
    out = _outdir(args)
    man = _manifest(args, run, mapping, "pumpprobe")
    t2 = args.t2 if args.t2 is not None else run.grids.t2
    with StageTimer(man, "pumpprobe"):
        spec = transient_absorption(run.system, run.pulse, t2, run.grids)
    path = out / "pumpprobe.csv"
    write_absorption_csv(spec, path)
    man.add_output(path)
    man.write(out / "pumpprobe.manifest.json")
    print(f"wrote {path}")
    return 0


def _cmd_2dmap(args) -> int:
    run, mapping = _load_run_config(args)
    out = _outdir(args)
    man = _manifest(args, run, mapping, "2dmap")
    with StageTimer(man, "response"):
        rset = averaged_response(run.system, run.pulse, run.grids)
    with StageTimer(man, "transform"):
        m = spectrum_map(rset, kind=args.kind, zero_pad=run.grids.zero_pad)
    paths = [out / "map.bin", out / "map.csv", out / "map.ppm"]
    write_map_binary(m, paths[0])
    write_map_csv(m, paths[1])
    render_heatmap(m, paths[2])
    for p in paths:
        man.add_output(p)
    man.add_output(Path(str(paths[2]) + ".meta.txt"))
    man.write(out / "map.manifest.json")
    print(f"wrote {', '.join(str(p) for p in paths)}")
    return 0


def _read_map_file(path) -> SpectrumMap:
    grid = read_response_binary(path)
    p1, p3 = grid.values.shape
    omega1 = grid.omega_ref + (np.arange(p1) - p1 // 2) * grid.dt1
    omega3 = grid.omega_ref + (np.arange(p3) - p3 // 2) * grid.dt3
    return SpectrumMap(omega1_grid=omega1, omega3_grid=omega3,
                       values=grid.values, t2=grid.t2, kind="total-real")


def _cmd_reconstruct(args) -> int:
    run, mapping = _load_run_config(args)
    out = _outdir(args)
    man = _manifest(args, run, mapping, "reconstruct")
    if args.maps:
        paths: list[str] = []
        for pattern in args.maps:
            hits = sorted(_glob.glob(pattern))
            paths.extend(hits if hits else [pattern])
        maps = [_read_map_file(p) for p in paths]
        with StageTimer(man, "inversion"):
            report = reconstruct_from_maps(maps, reference_t2=args.reference_t2)
    else:
        t2_list = np.arange(0.0, args.t2max + 0.5 * args.t2step, args.t2step)
        with StageTimer(man, "simulate+invert"):
            report = simulate_and_reconstruct(run.system, run.pulse, run.grids,
                                              t2_list,
                                              reference_t2=args.reference_t2)
    report_path = out / "report.txt"
    csv_path = out / "reconstruction.csv"
    report_path.write_text("\n".join(report.lines()) + "\n", encoding="utf-8")
    csv_path.write_text(report.csv_row(), encoding="utf-8")
    man.add_output(report_path)
    man.add_output(csv_path)
    man.write(out / "reconstruct.manifest.json")
    print("\n".join(report.lines()))
    if report.model.flagged:
        print("reconstruction flagged: eigenvalue residual above tolerance",
              file=sys.stderr)
        return 1
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    ok = run_selftest()
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="darkspec",
        description="coherently driven five-level spin-pair spectroscopy simulator",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--preset", choices=sorted(PRESETS),
                       help="named base configuration")
        p.add_argument("--out", help="output directory (or file for dynamics)")
        p.add_argument("--threads", default=None,
                       help="worker threads (0 = auto); env DARKSPEC_THREADS")
        p.add_argument("--seed", type=int, default=None,
                       help="override the ensemble seed")

    p = sub.add_parser("dynamics", help="ensemble-averaged populations CSV")
    common(p)
    p.set_defaults(func=_cmd_dynamics)

    p = sub.add_parser("response", help="time-domain third-order response grid")
    common(p)
    p.add_argument("--t2", type=float, default=None, help="population time fs")
    p.add_argument("--dump-hamiltonian", type=float, default=None, metavar="T",
                   help="print the 5x5 Hamiltonian at time T (fs) as CSV and exit")
    p.set_defaults(func=_cmd_response)

    p = sub.add_parser("absorption", help="linear absorption spectrum CSV")
    common(p)
    p.set_defaults(func=_cmd_absorption)

    p = sub.add_parser("pumpprobe", help="transient-absorption spectrum CSV")
    common(p)
    p.add_argument("--t2", type=float, default=None, help="pump-probe delay fs")
    p.set_defaults(func=_cmd_pumpprobe)

    p = sub.add_parser("2dmap", help="2D spectrum: binary grid + CSV + PPM")
    common(p)
    p.add_argument("--t2", type=float, default=None, help="population time fs")
    p.add_argument("--kind", choices=["total", "rephasing", "nonrephasing"],
                   default="total")
    p.set_defaults(func=_cmd_2dmap)

    p = sub.add_parser("reconstruct", help="invert 2D movie for bare energies")
    common(p)
    p.add_argument("--maps", nargs="*", default=None,
                   help="glob(s)/paths of map grid files; omit to simulate")
    p.add_argument("--t2max", type=float, default=2000.0)
    p.add_argument("--t2step", type=float, default=10.0)
    p.add_argument("--reference-t2", type=float, default=400.0)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("selftest", help="run the invariant suite")
    common(p)
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _resolve_threads(args.threads)
    try:
        return args.func(args)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return 2
    except (IntegrationError, PipelineError, ValueError) as exc:
        out = Path(args.out or ".")
        out = out if out.is_dir() else out.parent
        out.mkdir(parents=True, exist_ok=True)
        diag = out / "failure.txt"
        diag.write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
        print(f"numerical failure: {exc} (diagnostic in {diag})", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
