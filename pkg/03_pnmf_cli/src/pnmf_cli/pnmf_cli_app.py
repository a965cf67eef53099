"""*******************************************************************************
* Copyright (c) 2024 PNMF contributors
*
* All rights reserved. This program and the accompanying materials
* are made available under the terms of MIT and  is provided "as is",
* without warranty of any kind, express or implied, including but
* not limited to the warranties of merchantability, fitness for a
* particular purpose and noninfringement. In no event shall the
* authors, contributors or copyright holders be liable for any claim,
* damages or other liability, whether in an action of contract,
* tort or otherwise, arising from, out of or in connection with the software
* or the use or other dealings in the software.
*
* Contributors:
*    -
*******************************************************************************

Command line of the unmixing toolkit

    pnmf synth   scene synthesis: clean and noisy cubes with their truth
    pnmf unmix   one unmixing run on a cube
    pnmf eval    aligned metrics of an estimate
    pnmf bench   the SNR x denoiser benchmark on synthetic scenes
    pnmf plot    abundance maps, spectra and convergence of an unmix run
    pnmf sweep   sensitivity of the result to alpha, lambda or mu

Exit codes: 0 when every output was written, 1 when the command failed (its partial
outputs are removed), 2 for usage errors.
"""

import argparse
import logging
import math
import sys
from collections.abc import Sequence
from dataclasses import asdict
from pathlib import Path
from typing import Any, Final, Optional

import numpy as np
import pandas as pd

from hsi_core.cube import EndmemberMatrix, apply_band_mask, parse_band_ranges, reshape_to_cube
from hsi_core.hsic_io import (
    load_abundances,
    load_cube,
    load_endmember_csv,
    store_abundances,
    store_cube,
    store_endmember_csv,
)
from hsi_core.metrics import align
from hsi_core.synth import SynthConfig, add_noise, generate_abundances, measured_snr_db, mix, noise_seed, toy_library
from pnmf.denoisers import DenoiserSpec
from pnmf.engine import RunTruth, UnmixConfig, run_unmixing
from pnmf.engine_config import EngineDefaults
from pnmf_cli.artifacts import MANIFEST_NAME, RunManifest, StagedOutputs
from pnmf_cli.bench import (
    RESULT_COLUMNS,
    SWEEP_PARAMS,
    bench_grid,
    run_bench,
    run_sweep,
    score,
    summarize,
    write_table,
)
from pnmf_cli.cli_config import BenchDefaults, OutputConfig, SweepDefaults, SynthDefaults, parse_size
from pnmf_cli.plots import convergence_chart, save_svg, spectra_chart, sweep_chart, write_abundance_map

LOGGER = logging.getLogger(__name__)

TRACE_COLUMNS: Final[tuple[str, ...]] = ("iter", "objective", "data_fit", "l21", "split", "sum_to_one", "rmse", "seconds")
# engine flag -> UnmixConfig field
_ENGINE_FLAGS: Final[dict[str, str]] = {
    "alpha": "alpha",
    "lam": "lam",
    "mu": "mu",
    "delta": "delta",
    "max_iters": "max_iters",
    "rel_tol": "rel_tol",
    "eps_guard": "eps_guard",
    "stall_window": "stall_window",
    "noise_scaled_split": "noise_scaled_split",
}


def _integer(text: str) -> int:
    """
    Integer flag that also accepts scientific notation, e.g. 1e3
    """
    try:
        value = float(text)
    except ValueError as ex:
        raise argparse.ArgumentTypeError(f"not a number: '{text}'") from ex
    if not math.isfinite(value) or value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer: '{text}'")
    return int(value)


def _number(text: str) -> float:
    try:
        value = float(text)
    except ValueError as ex:
        raise argparse.ArgumentTypeError(f"not a number: '{text}'") from ex
    if math.isnan(value):
        raise argparse.ArgumentTypeError("NaN is not a valid value")
    return value


def _number_list(text: str) -> list[float]:
    """
    Comma separated numbers without duplicates, e.g. '5,10,2e1,30'
    """
    items = [item.strip() for item in text.split(",")]
    if not items or any(not item for item in items):
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers. Got '{text}'")
    values = [_number(item) for item in items]
    if len(set(values)) != len(values):
        raise argparse.ArgumentTypeError(f"list contains duplicates: '{text}'")
    return values


def _name_list(text: str) -> list[str]:
    names = [item.strip().lower() for item in text.split(",")]
    if any(not name for name in names):
        raise argparse.ArgumentTypeError(f"expected a comma separated list of names. Got '{text}'")
    return names


def _size(text: str) -> tuple[int, int]:
    try:
        return parse_size(text)
    except ValueError as ex:
        raise argparse.ArgumentTypeError(str(ex)) from ex


def _engine_params(args: argparse.Namespace) -> dict[str, Any]:
    """
    Engine flags that were given on the command line. The rest keep their configured defaults
    """
    return {field: getattr(args, flag) for flag, field in _ENGINE_FLAGS.items() if getattr(args, flag, None) is not None}


def _synth_config(args: argparse.Namespace, p: int, snr_db: Optional[float] = None) -> SynthConfig:
    rows, cols = args.size
    return SynthConfig(
        rows=rows,
        cols=cols,
        p=p,
        smoothness=args.smoothness,
        pure_pixel_fraction=args.pure_fraction,
        seed=args.seed,
        snr_db=snr_db,
        contrast=args.contrast,
    )


def _write_manifest(staged: StagedOutputs, manifest: RunManifest):
    path = staged.path(MANIFEST_NAME)
    manifest.outputs = staged.names()
    manifest.write(path)
    staged.verify()
    LOGGER.info("Wrote %s files to %s", len(manifest.outputs), staged.directory)


def cmd_synth(args: argparse.Namespace):
    """
    Writes clean.hsic, one noisy_<snr>db.hsic per SNR, the truth abundances and endmembers
    """
    library: Optional[EndmemberMatrix] = None
    p = args.p if args.p is not None else SynthDefaults.p
    if args.endmembers is not None:
        library = load_endmember_csv(args.endmembers)
        if args.p is not None and args.p != library.count:
            raise ValueError(f"--p {args.p} does not match the {library.count} endmembers of {args.endmembers}")
        p = library.count
    cfg = _synth_config(args, p)
    if library is None:
        library = toy_library(p)

    abundances = generate_abundances(cfg)
    clean = mix(library, abundances, cfg.rows, cfg.cols)
    snrs = args.snr or []
    with StagedOutputs(args.output or OutputConfig.root / "synth") as staged:
        store_cube(clean, staged.path("clean.hsic"))
        for snr in snrs:
            noisy = add_noise(clean, snr, noise_seed(cfg.seed, snr))
            store_cube(noisy, staged.path(f"noisy_{snr:g}db.hsic"))
            LOGGER.info("Noisy cube at %s dB, measured %.3f dB", snr, measured_snr_db(clean, noisy))
        store_abundances(abundances, cfg.rows, cfg.cols, staged.path("truth_abundances.hsic"))
        store_endmember_csv(library, staged.path("truth_endmembers.csv"))
        manifest = RunManifest(
            command="synth",
            seed=cfg.seed,
            inputs={"endmembers": str(args.endmembers)} if args.endmembers is not None else {},
            synth_config=asdict(cfg),
            extra={"snrs_db": snrs, "library": "csv" if args.endmembers is not None else "toy"},
        )
        _write_manifest(staged, manifest)


def _load_truth(
    endmembers_path: Optional[Path], abundances_path: Optional[Path], keep: Optional[np.ndarray] = None
) -> Optional[RunTruth]:
    if endmembers_path is None and abundances_path is None:
        return None
    if endmembers_path is None or abundances_path is None:
        raise ValueError("Truth needs both --truth-endmembers and --truth-abundances")
    endmembers = load_endmember_csv(endmembers_path)
    if keep is not None:
        if keep.shape[0] != endmembers.bands:
            raise ValueError(f"Truth endmembers have {endmembers.bands} bands, the cube had {keep.shape[0]}")
        endmembers = EndmemberMatrix(data=endmembers.data[keep])
    abundances, _, _ = load_abundances(abundances_path)
    return RunTruth(endmembers=endmembers, abundances=abundances)


def cmd_unmix(args: argparse.Namespace):
    """
    Writes endmembers.csv, abundances.hsic and trace.csv of one run
    """
    cube = load_cube(args.input)
    input_bands = cube.bands
    keep = None
    if args.drop_bands:
        mask = parse_band_ranges(args.drop_bands, cube.bands)
        cube = apply_band_mask(cube, mask)
        keep = mask.keep
        LOGGER.info("Dropped %s of %s bands", input_bands - mask.kept, input_bands)
    truth = _load_truth(args.truth_endmembers, args.truth_abundances, keep)
    cfg = UnmixConfig(
        p=args.p,
        denoiser=DenoiserSpec.from_cli(args.denoiser, args.denoiser_param or []),
        seed=args.seed,
        clamp_negative=args.clamp_negative,
        **_engine_params(args),
    )

    state, trace = run_unmixing(cube, cfg, truth)

    with StagedOutputs(args.output or OutputConfig.root / "unmix" / Path(args.input).stem) as staged:
        store_endmember_csv(state.e, staged.path("endmembers.csv"))
        store_abundances(state.a, cube.rows, cube.cols, staged.path("abundances.hsic"))
        pd.DataFrame(trace.as_rows(), columns=list(TRACE_COLUMNS)).to_csv(
            staged.path("trace.csv"), index=False, lineterminator="\n"
        )
        inputs = {"cube": str(args.input)}
        if truth is not None:
            inputs["truth_endmembers"] = str(args.truth_endmembers)
            inputs["truth_abundances"] = str(args.truth_abundances)
        manifest = RunManifest(
            command="unmix",
            seed=cfg.seed,
            inputs=inputs,
            unmix_config=cfg.as_dict(),
            extra={
                "drop_bands": args.drop_bands or "",
                "input_bands": input_bands,
                "rows": cube.rows,
                "cols": cube.cols,
                "iterations": state.iter,
                "noise_variance": state.noise_variance,
            },
        )
        _write_manifest(staged, manifest)


def _format_metric(value: Optional[float]) -> str:
    if value is None:
        return "n/a"
    return f"{value:.6g}"


def cmd_eval(args: argparse.Namespace):
    """
    Prints the aligned metrics of an estimate. Optionally appends them as a row of a results CSV
    """
    endmembers = load_endmember_csv(args.endmembers)
    abundances, _, _ = load_abundances(args.abundances)
    truth = _load_truth(args.truth_endmembers, args.truth_abundances)
    cube = load_cube(args.cube) if args.cube is not None else None
    if truth is None and cube is None:
        raise ValueError("Nothing to evaluate against. Give the truth files, --cube, or both")

    metrics = score(endmembers, abundances, truth, cube, args.re_normalizer)
    sys.stdout.write("".join(f"{name:<8} {_format_metric(value)}\n" for name, value in metrics.items()))

    if args.results is not None:
        row = {
            "method": args.method,
            "denoiser": args.denoiser,
            "snr_db": args.snr_db,
            "seed": args.seed,
            **metrics,
            "iters": args.iters,
            "seconds": None,
        }
        results = Path(args.results)
        pd.DataFrame([row], columns=list(RESULT_COLUMNS)).to_csv(
            results,
            mode="a",
            header=not results.exists() or results.stat().st_size == 0,
            index=False,
            lineterminator="\n",
            float_format="%.10g",
        )
        LOGGER.info("Appended metrics to %s", results)


def cmd_bench(args: argparse.Namespace):
    """
    Writes results.csv, results_summary.csv when repeated, and one convergence_<snr>db.svg per SNR
    """
    synth_cfg = _synth_config(args, args.p)
    seeds = [args.seed + offset for offset in range(args.repeat)]
    cells = bench_grid(args.snr, args.denoisers, seeds)
    record_timing = args.timing or BenchDefaults.record_timing
    frame, results = run_bench(cells, synth_cfg, _engine_params(args), args.n_jobs, record_timing)

    with StagedOutputs(args.output or OutputConfig.root / "bench") as staged:
        write_table(frame, staged.path("results.csv"))
        if args.repeat > 1:
            write_table(summarize(frame), staged.path("results_summary.csv"))
        for snr in args.snr:
            curves = {
                result.row["method"]: result.rmse_curve
                for result in results
                if result.cell.seed == seeds[0] and result.cell.snr_db == snr
            }
            figure = convergence_chart(curves, "abundance RMSE", title=f"Convergence at {snr:g} dB")
            save_svg(figure, staged.path(f"convergence_{snr:g}db.svg"))
        manifest = RunManifest(
            command="bench",
            seed=args.seed,
            synth_config=asdict(synth_cfg),
            unmix_config={"p": args.p, **dict(sorted(_engine_params(args).items()))},
            extra={
                "snrs_db": args.snr,
                "denoisers": args.denoisers,
                "seeds": seeds,
                "record_timing": record_timing,
            },
        )
        _write_manifest(staged, manifest)


def cmd_plot(args: argparse.Namespace):
    """
    Draws an unmix run: abundance_<k>.ppm per endmember, endmembers.svg and convergence.svg
    """
    run_dir = Path(args.run)
    manifest = RunManifest.load(run_dir)
    if manifest.command != "unmix":
        raise ValueError(f"{run_dir} holds a '{manifest.command}' run. Only unmix runs can be plotted")
    endmembers = load_endmember_csv(run_dir / "endmembers.csv")
    abundances, rows, cols = load_abundances(run_dir / "abundances.hsic")
    trace = pd.read_csv(run_dir / "trace.csv")

    keep = None
    drop_bands = manifest.extra.get("drop_bands", "")
    if drop_bands:
        keep = parse_band_ranges(drop_bands, int(manifest.extra["input_bands"])).keep
    truth_endmembers = manifest.inputs.get("truth_endmembers")
    truth_abundances = manifest.inputs.get("truth_abundances")
    truth = _load_truth(
        Path(truth_endmembers) if truth_endmembers else None,
        Path(truth_abundances) if truth_abundances else None,
        keep,
    )

    with StagedOutputs(args.output or run_dir) as staged:
        maps = reshape_to_cube(abundances, rows, cols)
        for k, abundance_map in enumerate(maps, start=1):
            staged.path(f"abundance_{k}.txt")
            write_abundance_map(abundance_map, staged.path(f"abundance_{k}.ppm"))

        perm = None
        if truth is not None:
            perm = align(endmembers, truth.endmembers).perm
            truth_maps = reshape_to_cube(truth.abundances, rows, cols)
            for k, match in enumerate(perm, start=1):
                staged.path(f"truth_abundance_{k}.txt")
                write_abundance_map(truth_maps[match], staged.path(f"truth_abundance_{k}.ppm"))

        spectra = spectra_chart(endmembers.data, truth.endmembers.data if truth is not None else None, perm)
        save_svg(spectra, staged.path("endmembers.svg"))

        if trace["rmse"].notna().any():
            curve, label = trace["rmse"], "abundance RMSE"
        else:
            curve, label = trace["objective"], "objective"
        save_svg(convergence_chart({label: curve.tolist()}, label), staged.path("convergence.svg"))
        staged.verify()
        LOGGER.info("Wrote %s plot files to %s", len(staged.paths), staged.directory)


def cmd_sweep(args: argparse.Namespace):
    """
    Writes sweep.csv and sweep.svg for one regularisation parameter
    """
    synth_cfg = _synth_config(args, args.p, args.snr)
    engine_params = _engine_params(args)
    frame = run_sweep(args.param, args.values, synth_cfg, args.denoiser, engine_params, args.n_jobs)
    with StagedOutputs(args.output or OutputConfig.root / "sweep") as staged:
        write_table(frame, staged.path("sweep.csv"))
        save_svg(sweep_chart(args.param, frame["value"].tolist(), frame["rmse"].tolist()), staged.path("sweep.svg"))
        manifest = RunManifest(
            command="sweep",
            seed=args.seed,
            synth_config=asdict(synth_cfg),
            unmix_config={"p": args.p, "denoiser": args.denoiser, **dict(sorted(engine_params.items()))},
            extra={"param": args.param, "values": args.values},
        )
        _write_manifest(staged, manifest)


def _add_engine_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("solver", "Defaults come from the engine settings")
    group.add_argument("--alpha", type=_number, help=f"l2,1 row sparsity weight (default {EngineDefaults.alpha})")
    group.add_argument("--lambda", dest="lam", type=_number, help=f"split penalty (default {EngineDefaults.lam})")
    group.add_argument("--mu", type=_number, help=f"prior strength, 0 disables the prior (default {EngineDefaults.mu})")
    group.add_argument("--delta", type=_number, help=f"sum-to-one penalty (default {EngineDefaults.delta})")
    group.add_argument("--max-iters", type=_integer, help=f"iteration cap (default {EngineDefaults.max_iters})")
    group.add_argument("--rel-tol", type=_number, help=f"stall threshold (default {EngineDefaults.rel_tol})")
    group.add_argument(
        "--stall-window", type=_integer, help=f"stalled iterations before stopping (default {EngineDefaults.stall_window})"
    )
    group.add_argument("--eps-guard", type=_number, help=f"denominator guard (default {EngineDefaults.eps_guard})")
    group.add_argument(
        "--absolute-weights",
        dest="noise_scaled_split",
        action="store_const",
        const=False,
        help="take lambda and mu as given instead of in units of the estimated noise variance",
    )


def _add_scene_flags(parser: argparse.ArgumentParser, with_p_default: bool = True):
    group = parser.add_argument_group("scene")
    group.add_argument("--size", type=_size, default=parse_size(SynthDefaults.size), help="ROWSxCOLS (default %(default)s)")
    group.add_argument("--p", type=_integer, default=SynthDefaults.p if with_p_default else None, help="endmembers")
    group.add_argument("--smoothness", type=_number, default=SynthDefaults.smoothness)
    group.add_argument("--pure-fraction", type=_number, default=SynthDefaults.pure_pixel_fraction)
    group.add_argument("--contrast", type=_number, default=SynthDefaults.contrast)
    group.add_argument("--seed", type=_integer, default=SynthDefaults.seed, help="scene seed (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pnmf", description="Blind hyperspectral unmixing with a plug-and-play prior")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every iteration")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="generate a synthetic scene")
    _add_scene_flags(synth, with_p_default=False)
    synth.add_argument("--snr", type=_number_list, help="noise levels in dB, e.g. 5,10,20,30. Omit for the clean cube only")
    synth.add_argument("--endmembers", type=Path, help="L x P endmember CSV instead of the built-in library")
    synth.add_argument("-o", "--output", type=Path)
    synth.set_defaults(handler=cmd_synth)

    unmix = commands.add_parser("unmix", help="unmix one cube")
    unmix.add_argument("-i", "--input", type=Path, required=True, help="HSIC cube")
    unmix.add_argument("--p", type=_integer, required=True, help="number of endmembers")
    unmix.add_argument("--denoiser", default=EngineDefaults.denoiser, help="none, gaussian, median, nlm or tv")
    unmix.add_argument("--denoiser-param", action="append", metavar="KEY=VALUE", help="repeatable denoiser knob")
    unmix.add_argument("--seed", type=_integer, default=EngineDefaults.seed, help="VCA seed (default %(default)s)")
    unmix.add_argument("--drop-bands", help="1-based bands to remove, e.g. 2,105-115,223")
    unmix.add_argument("--truth-endmembers", type=Path)
    unmix.add_argument("--truth-abundances", type=Path)
    unmix.add_argument("--clamp-negative", action="store_true", default=EngineDefaults.clamp_negative)
    unmix.add_argument("-o", "--output", type=Path)
    _add_engine_flags(unmix)
    unmix.set_defaults(handler=cmd_unmix)

    evaluate = commands.add_parser("eval", help="metrics of an estimate")
    evaluate.add_argument("--endmembers", type=Path, required=True, help="estimated endmember CSV")
    evaluate.add_argument("--abundances", type=Path, required=True, help="estimated abundance HSIC")
    evaluate.add_argument("--truth-endmembers", type=Path)
    evaluate.add_argument("--truth-abundances", type=Path)
    evaluate.add_argument("--cube", type=Path, help="observed cube, enables the reconstruction error")
    evaluate.add_argument("--re-normalizer", choices=["np", "nl"], default="np")
    evaluate.add_argument("--results", type=Path, help="CSV to append a row to")
    evaluate.add_argument("--method", default="", help="method label of the appended row")
    evaluate.add_argument("--denoiser", default="", help="denoiser label of the appended row")
    evaluate.add_argument("--snr-db", type=_number)
    evaluate.add_argument("--seed", type=_integer)
    evaluate.add_argument("--iters", type=_integer)
    evaluate.set_defaults(handler=cmd_eval)

    bench = commands.add_parser("bench", help="SNR x denoiser benchmark on synthetic scenes")
    _add_scene_flags(bench)
    bench.add_argument("--snr", type=_number_list, default=BenchDefaults.snrs)
    bench.add_argument("--denoisers", type=_name_list, default=BenchDefaults.denoisers)
    bench.add_argument("--repeat", type=_integer, default=BenchDefaults.repeat, help="seeds per cell")
    bench.add_argument("--n-jobs", type=_integer, default=BenchDefaults.n_jobs)
    bench.add_argument("--timing", action="store_true", help="fill the seconds column")
    bench.add_argument("-o", "--output", type=Path)
    _add_engine_flags(bench)
    bench.set_defaults(handler=cmd_bench)

    plot = commands.add_parser("plot", help="plot an unmix run")
    plot.add_argument("-r", "--run", type=Path, required=True, help="unmix output directory")
    plot.add_argument("-o", "--output", type=Path, help="defaults to the run directory")
    plot.set_defaults(handler=cmd_plot)

    sweep = commands.add_parser("sweep", help="sensitivity to one regularisation parameter")
    _add_scene_flags(sweep)
    sweep.add_argument("--param", choices=sorted(SWEEP_PARAMS), required=True)
    sweep.add_argument("--values", type=_number_list, required=True)
    sweep.add_argument("--snr", type=_number, default=SweepDefaults.snr)
    sweep.add_argument("--denoiser", default=SweepDefaults.denoiser)
    sweep.add_argument("--n-jobs", type=_integer, default=BenchDefaults.n_jobs)
    sweep.add_argument("-o", "--output", type=Path)
    _add_engine_flags(sweep)
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main function invoked from command line. Returns the exit code
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        args.handler(args)
    except Exception as ex:
        LOGGER.error("Command '%s' failed: %s", args.command, ex, stack_info=True, exc_info=True)
        return 1
    return 0


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
