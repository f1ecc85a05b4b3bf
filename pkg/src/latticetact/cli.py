"""Command-line entry point: ``latticetact <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import admittance as adm
from . import contactnet as net
from . import fatigue, figures, kernels, telemetry
from . import maze as mz
from .errors import InvalidInputError, LatticeTactError
from .estimator import EstimatorCalibration, calibrate_arrays, calibration_sweep
from .model import CharacterizationData, LatticeParams, run_characterization, synth_tip_pressures
from .render import render_ascii, render_svg

log = logging.getLogger("latticetact")


class Run:
    """Output directory plus its manifest; the manifest is written first."""

    def __init__(self, args):
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = {
            "subcommand": args.command,
            "arguments": {k: v for k, v in vars(args).items() if k not in ("func", "command")},
            "config": args.config,
            "seed": args.seed,
            "version": __version__,
            "kernel_backend": kernels.BACKEND,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "outputs": [],
        }
        self._write_manifest()

    def _write_manifest(self):
        with open(self.out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, indent=2, default=str)
            fh.write("\n")

    def path(self, name):
        name = Path(name)
        if name.is_absolute() or ".." in name.parts:
            raise InvalidInputError(f"output {name} must stay inside the output directory")
        self.manifest["outputs"].append(str(name))
        return self.out / name

    def finish(self, **results):
        self.manifest["results"] = results
        self._write_manifest()


def _params(args):
    return LatticeParams.from_file(args.config) if args.config else LatticeParams()


def _rng(args, stream=0):
    return np.random.default_rng([args.seed, stream])


def _characterization(args, params, trials):
    if getattr(args, "data", None):
        return CharacterizationData.from_csv(args.data)
    return run_characterization(params, trials=trials, rng=_rng(args, 1))


def _calibration(args, params):
    if getattr(args, "calibration", None):
        return EstimatorCalibration.load(args.calibration)
    disp, _ = calibration_sweep(params)
    return calibrate_arrays(synth_tip_pressures(params, disp), disp)


# -- subcommands -------------------------------------------------------------


def cmd_synth_characterize(args):
    params = _params(args)
    run = Run(args)
    data = run_characterization(params, trials=args.trials, rng=_rng(args, 1))
    data.to_csv(run.path("characterization.csv"))
    figures.write_characterization(run.path("response_curves.csv"), run.path("response_curves.svg"), data)
    run.finish(samples=len(data))
    print(f"wrote {len(data)} samples to {run.out / 'characterization.csv'}")


def cmd_calibrate(args):
    params = _params(args)
    run = Run(args)
    disp, _ = calibration_sweep(params, n=args.points)
    pressures = synth_tip_pressures(params, disp, noisy=args.noisy, rng=_rng(args, 2))
    cal = calibrate_arrays(pressures, disp)
    cal.save(run.path("calibration.txt"))
    figures.write_calibration(run.path("weighted_sums.csv"), run.path("weighted_sums.svg"), pressures, disp, cal)
    run.finish(alpha=list(cal.alphas), r2=cal.r2)
    print(f"alpha = {cal.alpha_x:.6g}, {cal.alpha_y:.6g}, {cal.alpha_z:.6g} mm/Pa; "
          f"R2 = {cal.r2['x']:.6f}, {cal.r2['y']:.6f}, {cal.r2['z']:.6f}")


def cmd_train(args):
    params = _params(args)
    run = Run(args)
    data = _characterization(args, params, trials=args.trials)
    train_set, test_set = net.split_by_trial(data)
    config = net.TrainConfig(learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch, seed=args.seed)
    result = net.train(train_set, config, test_set)
    net.save(result.model, run.path("model.mlp"))
    net.write_history(run.path("metrics.csv"), result.history)
    m = result.test
    run.finish(seconds=result.seconds, axial_acc=m.axial_acc, radial_acc=m.radial_acc, force_mae=m.force_mae)
    print(f"trained in {result.seconds:.1f} s: axial {m.axial_acc:.4f}, radial {m.radial_acc:.4f}, "
          f"force MAE {m.force_mae:.4f} N")


def cmd_eval(args):
    params = _params(args)
    run = Run(args)
    model = net.load(args.model)
    data = _characterization(args, params, trials=args.trials)
    if args.trial is not None:
        data = data.subset(data.trial == args.trial)
    elif not getattr(args, "data", None):
        _, data = net.split_by_trial(data)
    m = net.evaluate(model, data)
    axial, radial, force = net.predict(model, data.pressures)
    figures.write_force_scatter(run.path("force_scatter.csv"), run.path("force_scatter.svg"), data, force, axial, radial)
    with open(run.path("eval_metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write("samples,axial_acc,radial_acc,force_mae\n")
        fh.write(f"{len(data)},{m.axial_acc:.6f},{m.radial_acc:.6f},{m.force_mae:.6f}\n")
    run.finish(axial_acc=m.axial_acc, radial_acc=m.radial_acc, force_mae=m.force_mae)
    print(f"axial {m.axial_acc:.4f}, radial {m.radial_acc:.4f}, force MAE {m.force_mae:.4f} N "
          f"on {len(data)} samples")


def cmd_bench(args):
    run = Run(args)
    model = net.load(args.model) if args.model else net.init_model(rng=_rng(args, 3))
    mean, std = net.latency_bench(model, args.n, rng=_rng(args, 4))
    with open(run.path("bench.csv"), "w", encoding="utf-8") as fh:
        fh.write("n_samples,mean_ms,std_ms\n")
        fh.write(f"{args.n},{mean * 1e3:.6f},{std * 1e3:.6f}\n")
    run.finish(mean_ms=mean * 1e3, std_ms=std * 1e3)
    print(f"forward pass: {mean * 1e3:.4f} +/- {std * 1e3:.4f} ms over {args.n} samples")


def _default_profile(push_n=1.0):
    """1 s rest, 2 s lateral push, 2 s release, at 200 Hz."""
    t = np.arange(0.0, 5.0, adm.DT)
    f = np.zeros((len(t), 3))
    f[(t >= 1.0) & (t < 3.0), 0] = push_n
    return t, f


def cmd_admittance_run(args):
    params = _params(args)
    run = Run(args)
    cal = _calibration(args, params)
    gains = adm.default_gains(cal)
    t, forces = adm.read_force_profile(args.profile) if args.profile else _default_profile(args.push)
    config = adm.LoopConfig(tau=args.tau, noisy=args.noisy)
    states = adm.run_profile(forces, gains, cal, params, config, rng=_rng(args, 5))
    adm.write_run_log(run.path("run_log.csv"), t, states)
    figures.write_run_plot(run.path("run.svg"), t, states)
    final = states[-1].u
    run.finish(final_u=list(final), gains=list(gains.as_array()))
    print(f"ran {len(states)} steps; final arm offset {np.round(final, 4).tolist()} mm")


def cmd_stiffness(args):
    params = _params(args)
    run = Run(args)
    cal = _calibration(args, params)
    gains = adm.default_gains(cal)
    config = adm.LoopConfig(tau=args.tau, noisy=args.noisy)
    results = []
    axes = "xyz" if args.axis == "all" else args.axis
    for axis in axes:
        res = adm.measure_stiffness(axis, adm.default_forces(params, axis), gains, cal, params, config,
                                    rng=_rng(args, 6))
        adm.write_stiffness_report(run.path(f"stiffness_{axis}.csv"), res)
        results.append(res)
        print(f"k_{axis} = {res.k:.5f} N/mm (expected {adm.expected_stiffness(params, gains, axis):.5f}), "
              f"R2 = {res.r2:.6f}")
    figures.write_stiffness_plot(run.path("stiffness_fit.svg"), results)
    run.finish(k={r.axis: r.k for r in results}, r2={r.axis: r.r2 for r in results})


def _parse_size(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"size must look like 5x5, got {text!r}") from exc
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("maze size must be positive")
    return w, h


def cmd_maze(args):
    params = _params(args)
    run = Run(args)
    cal = _calibration(args, params)
    if args.maze:
        maze = mz.load_maze(args.maze)
    else:
        maze = mz.generate_maze(*args.size, _rng(args, 7), extra_openings=args.openings)
    mz.save_maze(maze, run.path("maze_truth.txt"))
    config = mz.ExploreConfig(threshold=args.threshold, noisy=not args.noiseless)
    explorer = mz.Explorer(maze, params, cal, config, rng=_rng(args, 8))
    m = explorer.explore(tuple(args.start))
    with open(run.path("map.svg"), "w", encoding="utf-8") as fh:
        fh.write(render_svg(m))
    with open(run.path("map.txt"), "w", encoding="utf-8") as fh:
        fh.write(render_ascii(m))
    times = np.arange(len(explorer.log)) * adm.DT
    states = [adm.LoopState(u=pos, delta_est=est, force=f, pressures=p) for f, p, est, pos in explorer.log]
    adm.write_run_log(run.path("run_log.csv"), times, states)
    agree = mz.agreement(maze, m)
    run.finish(agreement=agree, classified=mz.classified_fraction(m), guarded_moves=m.guarded_moves,
               contacts=len(m.contacts))
    print(render_ascii(m), end="")
    print(f"edge agreement with ground truth: {agree:.2%} ({m.guarded_moves} guarded moves)")
    if agree < 1.0:
        return 7
    return 0


def cmd_replay(args):
    params = _params(args)
    run = Run(args)
    if args.input:
        source = args.input
    else:
        source = run.path("capture.bin")
        n = args.frames
        t = np.arange(n) * adm.DT
        disp = np.zeros((n, 3))
        disp[:, 0] = 5.0 * np.clip(np.sin(2 * np.pi * 0.5 * t), 0, None)
        p = synth_tip_pressures(params, disp, noisy=True, rng=_rng(args, 9))
        telemetry.write_capture(source, telemetry.synth_stream(p))
    decoder = telemetry.FrameDecoder()
    frames = list(telemetry.replay(source, pacing=args.pacing, decoder=decoder))
    if not frames:
        raise InvalidInputError(f"{source}: no valid frames")
    comp = telemetry.compensate(frames, min(args.baseline, len(frames)), temperature=args.temperature)
    with open(run.path("replay_pressures.csv"), "w", encoding="utf-8") as fh:
        fh.write("seq," + ",".join(f"p{i}" for i in range(1, 8)) + "\n")
        for f, row in zip(frames, comp):
            fh.write(f"{f.seq}," + ",".join(f"{v:.3f}" for v in row) + "\n")
    s = decoder.stats
    run.finish(frames=s.frames, crc_errors=s.crc_errors, resync_events=s.resync_events,
               missing_frames=s.missing_frames)
    print(f"{s.frames} frames, {s.crc_errors} CRC errors, {s.resync_events} resyncs, "
          f"{s.missing_frames} missing")


def cmd_fatigue(args):
    run = Run(args)
    if args.log:
        cycle, t, force, disp = fatigue.read_fatigue_log(args.log)
    else:
        rng = _rng(args, 10)
        nan = rng.choice(np.arange(fatigue.DISCARD_FIRST + 1, args.cycles + 1),
                         size=min(args.nan_cycles, max(args.cycles - fatigue.DISCARD_FIRST, 0)), replace=False)
        cycle, t, force, disp = fatigue.synth_fatigue_log(args.cycles, nan, rng=rng, noise=args.noise)
        fatigue.write_fatigue_log(run.path("fatigue_log.csv"), cycle, t, force, disp)
    report = fatigue.analyze_fatigue(cycle, force, disp)
    fatigue.write_report(run.path("fatigue_report.csv"), report)
    figures.write_fatigue_plot(run.path("fatigue_cycles.svg"), report)
    max_drift = float(np.abs(report.drift).max()) if report.retained else 0.0
    run.finish(total=report.total_cycles, retained=report.retained, nan_dropped=report.nan_dropped,
               max_abs_drift_mm=max_drift, force_in_bounds=report.force_in_bounds)
    print(f"{report.retained} of {report.total_cycles} cycles retained "
          f"({report.discarded} discarded, {report.nan_dropped} with NaN); max |drift| {max_drift:.4g} mm")


# -- parser ------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="lattice parameter file (key = value)")
    common.add_argument("--seed", type=int, default=0, help="seed for every random stream")
    common.add_argument("--out", default="runs/latest", help="output directory")

    parser = argparse.ArgumentParser(prog="latticetact", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("synth-characterize", cmd_synth_characterize, "synthetic indentation dataset and response curves")
    p.add_argument("--trials", type=int, default=5)

    p = add("calibrate", cmd_calibrate, "fit estimator scale factors on a displacement sweep")
    p.add_argument("--points", type=int, default=41, help="samples per axis")
    p.add_argument("--noisy", action="store_true")

    p = add("train", cmd_train, "train the contact network (last trial held out)")
    p.add_argument("--data", help="characterization CSV; generated if omitted")
    p.add_argument("--trials", type=int, default=6, help="trials to generate when --data is omitted")
    p.add_argument("--epochs", type=int, default=net.TrainConfig.epochs)
    p.add_argument("--lr", type=float, default=net.TrainConfig.learning_rate)
    p.add_argument("--batch", type=int, default=net.TrainConfig.batch_size)

    p = add("eval", cmd_eval, "evaluate a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", help="characterization CSV; generated if omitted (held-out trial used)")
    p.add_argument("--trials", type=int, default=6)
    p.add_argument("--trial", type=int, help="evaluate only this trial")

    p = add("bench", cmd_bench, "single-sample forward-pass latency")
    p.add_argument("--model", help="model file; a fresh network if omitted")
    p.add_argument("--n", type=int, default=2000)

    for name, func, help_ in (("admittance-run", cmd_admittance_run, "run the admittance loop on a force profile"),
                              ("stiffness", cmd_stiffness, "measure effective stiffness per axis")):
        p = add(name, func, help_)
        p.add_argument("--calibration", help="calibration file; fitted on a noiseless sweep if omitted")
        p.add_argument("--tau", type=float, default=0.05, help="arm lag time constant (s)")
        p.add_argument("--noisy", action="store_true")
        if name == "admittance-run":
            p.add_argument("--profile", help="CSV t_s,Fx_N,Fy_N,Fz_N")
            p.add_argument("--push", type=float, default=1.0, help="default profile push force (N)")
        else:
            p.add_argument("--axis", choices=["x", "y", "z", "all"], default="all")

    p = add("maze", cmd_maze, "tactile DFS exploration of a maze")
    p.add_argument("--size", type=_parse_size, default=(5, 5))
    p.add_argument("--maze", help="maze file; random maze if omitted")
    p.add_argument("--openings", type=int, default=0, help="extra interior openings (loops)")
    p.add_argument("--threshold", type=float, default=2.0, help="deflection threshold (mm)")
    p.add_argument("--start", type=int, nargs=2, default=(0, 0), metavar=("X", "Y"))
    p.add_argument("--calibration")
    p.add_argument("--noiseless", action="store_true")

    p = add("replay", cmd_replay, "decode a raw capture and compensate it")
    p.add_argument("--input", help="raw frame file; a synthetic capture is written if omitted")
    p.add_argument("--frames", type=int, default=1000, help="frames in the synthetic capture")
    p.add_argument("--pacing", choices=["fast", "realtime"], default="fast")
    p.add_argument("--baseline", type=int, default=50, help="baseline window (frames)")
    p.add_argument("--temperature", action="store_true", help="also remove a linear temperature trend")

    p = add("fatigue", cmd_fatigue, "analyse a cyclic-loading log")
    p.add_argument("--log", help="CSV cycle,t_s,force_N,disp_mm; synthetic if omitted")
    p.add_argument("--cycles", type=int, default=10000)
    p.add_argument("--nan-cycles", type=int, default=374)
    p.add_argument("--noise", type=float, default=0.0, help="displacement noise (mm) for the synthetic log")
    return parser


def main(argv=None):
    logging.basicConfig(level=os.environ.get("LATTICE_TACT_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        code = args.func(args) or 0
    except LatticeTactError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 8
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
