"""Command-line surface.

Subcommands: `manifold solve`, `manifold sample`, `surface`, `simulate`,
`pair` and `ensemble`.  Each reads a config (defaults, a preset, or a
file), applies flag overrides, runs, and writes its artifacts plus a
metadata sidecar into the output directory.  Identical config and seed
give byte-identical files.  Exit status is 0 on success and 1 with a
message on stderr for any handled error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import diagnostics, dynamics, runio, stochastic
from .errors import TrigeoError
from .manifold import SolverConfig, conjugate_direction_solve, named_triple, \
    random_feasible_values, sample_manifold
from .potential import energy_surface_grid

ENV_OUT_ROOT = "TRIGEO_OUT_ROOT"


def _load_config(args) -> cfgmod.RunConfig:
    if getattr(args, "config", None) and getattr(args, "preset", None):
        raise cfgmod.ValidationError("config", "--config and --preset are exclusive")
    if getattr(args, "config", None):
        cfg = cfgmod.parse_config(Path(args.config).read_text(encoding="utf-8"))
    elif getattr(args, "preset", None):
        cfg = cfgmod.preset(args.preset)
    else:
        cfg = cfgmod.RunConfig()
    overrides = {}
    for name in ("seed", "steps", "triple", "members", "perturbation", "dt",
                 "decimation", "noise_eps", "noise_mode"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    if getattr(args, "snapshot_times", None):
        overrides["snapshot_times"] = tuple(
            float(p) for p in args.snapshot_times.replace(",", " ").split())
    return cfgmod.with_overrides(cfg, **overrides)


def _out_dir(args) -> Path:
    root = Path(os.environ.get(ENV_OUT_ROOT, "."))
    out = Path(args.out) if args.out else None
    if out is None:
        out = Path("run-output")
    return out if out.is_absolute() else root / out


def _add_common(p):
    p.add_argument("--config", help="config file path")
    p.add_argument("--preset", help=f"built-in preset ({', '.join(sorted(cfgmod.PRESETS))})")
    p.add_argument("--seed", type=int, help="override manifold/run seed")
    p.add_argument("--out", help="output directory")


def cmd_manifold_solve(args) -> int:
    cfg = _load_config(args)
    triple = named_triple(args.triple if args.triple else cfg.triple)
    solver = replace(cfg.solver_config(), seed=cfg.seed)
    if args.values:
        values = np.array([float(v) for v in args.values.split(",")])
    else:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x7f]))
        values = random_feasible_values(triple, rng)
    frame = conjugate_direction_solve(triple, values, solver)
    out = _out_dir(args)
    runio.write_frame(out / "frame.txt", frame)
    runio.write_sidecar(out / "frame.meta", cfg, "manifold solve", {
        "triple": triple.name, "family": triple.family,
        "fixed_values": ",".join(repr(float(v)) for v in frame.fixed_values),
        "residual_inf": frame.residual_inf, "iterations": frame.iterations})
    print(f"solved {triple.name} (family {triple.family}), "
          f"|g|_inf = {frame.residual_inf:.3e} -> {out / 'frame.txt'}")
    return 0


def cmd_manifold_sample(args) -> int:
    cfg = _load_config(args)
    triple = named_triple(args.triple if args.triple else cfg.triple)
    if args.n < 1:
        raise cfgmod.ValidationError("n", "must be >= 1", args.n)
    sample = sample_manifold(triple, args.n, cfg.solver_config(), seed=cfg.seed)
    out = _out_dir(args)
    runio.write_point_cloud(out / "points.csv", sample)
    runio.write_sidecar(out / "points.meta", cfg, "manifold sample", {
        "triple": triple.name, "family": triple.family, "n": args.n,
        "failures": len(sample.failures)})
    print(f"sampled {args.n} points on {triple.name} "
          f"({len(sample.failures)} failures) -> {out / 'points.csv'}")
    return 0


def cmd_surface(args) -> int:
    cfg = _load_config(args)
    model = cfg.model()
    r1 = tuple(float(v) for v in args.rho1.split(","))
    r2 = tuple(float(v) for v in args.rho2.split(","))
    theta = args.theta if args.theta is not None else cfg.rho3
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "surface.txt"
    tmp = out / "surface.txt.partial"
    energy_surface_grid((r1[0], r1[1], int(r1[2])), (r2[0], r2[1], int(r2[2])),
                        theta, model, tmp)
    os.replace(tmp, path)
    runio.write_sidecar(out / "surface.meta", cfg, "surface", {
        "rho1_range": args.rho1, "rho2_range": args.rho2, "theta": theta})
    print(f"energy surface grid -> {path}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    traj = dynamics.simulate(cfg.sim_config())
    out = _out_dir(args)
    runio.write_trajectory(out / "trajectory.csv", traj)
    runio.write_sidecar(out / "trajectory.meta", cfg, "simulate", {
        "termination": traj.termination, "steps_completed": traj.steps_completed,
        "max_pair_distance": traj.max_pair_distance,
        "frame_fixed_values": ",".join(repr(float(v)) for v in traj.frame.fixed_values),
        "final_s": traj.s[-1] if len(traj) else 0.0})
    print(f"simulated {traj.steps_completed} steps ({traj.termination}) "
          f"-> {out / 'trajectory.csv'}")
    return 0


def cmd_pair(args) -> int:
    cfg = _load_config(args)
    sim = cfg.sim_config()
    base, pert = dynamics.trajectory_pair(sim, perturbation=cfg.perturbation,
                                          component=cfg.perturb_component - 1)
    out = _out_dir(args)
    runio.write_trajectory(out / "traj_a.csv", base)
    runio.write_trajectory(out / "traj_b.csv", pert)
    extra = {"termination_a": base.termination, "termination_b": pert.termination,
             "perturbation": cfg.perturbation,
             "perturb_component": cfg.perturb_component}
    series = diagnostics.lyapunov_series(base, pert, tail_fraction=cfg.tail_fraction)
    runio.write_lyapunov(out / "eps.csv", series)
    extra["initial_separation"] = series.initial_separation
    extra["lyapunov_limit_estimate"] = series.limit_estimate
    extra["tail_fraction"] = cfg.tail_fraction
    try:
        dim = diagnostics.trajectory_dimension(base)
    except cfgmod.ValidationError:
        extra["dimension"] = "skipped (grid does not reach beyond t = 1)"
    else:
        runio.write_dimension(out / "dim.csv", dim)
    runio.write_sidecar(out / "pair.meta", cfg, "pair", extra)
    print(f"pair run ({base.steps_completed} steps) -> {out}/eps.csv, {out}/dim.csv")
    return 0


def cmd_ensemble(args) -> int:
    cfg = _load_config(args)
    sim = cfg.sim_config()
    noise_seed = int(np.random.SeedSequence([cfg.seed, 0x5eed]).generate_state(1)[0])
    noise = stochastic.NoiseSpec(mode=cfg.noise_mode, eps0=cfg.noise_eps,
                                 mask=tuple(bool(v) for v in cfg.mask),
                                 seed=noise_seed)
    result = stochastic.run_ensemble(sim, noise, cfg.members, cfg.snapshot_times,
                                     drift=args.drift)
    horizon = sim.steps * sim.dt
    ref_noise = stochastic.NoiseSpec(
        mode="constant", eps0=noise.mean_intensity(horizon),
        mask=noise.mask, seed=noise_seed + 1) if noise.mode != "zero" else noise
    reference = stochastic.run_ensemble(sim, ref_noise, cfg.members,
                                        cfg.snapshot_times, drift=args.drift)
    out = _out_dir(args)
    extra = {"members": cfg.members, "survivors": result.survivors,
             "noise_mode": cfg.noise_mode, "noise_eps": cfg.noise_eps,
             "drift": args.drift}
    series = stochastic.flow_functionals(result, reference)
    runio.write_functionals(out / "functionals.csv", series)
    if args.dump_snapshots:
        for snap in result.snapshots:
            runio.write_snapshot(out / f"snapshot_t{snap.t!r}.csv", snap)
    runio.write_sidecar(out / "ensemble.meta", cfg, "ensemble", extra)
    print(f"ensemble of {cfg.members} members, {result.survivors} survivors "
          f"-> {out / 'functionals.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trigeo",
                                 description="three-body geodesic-flow toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    man = sub.add_parser("manifold", help="transform-frame solver")
    man_sub = man.add_subparsers(dest="subcommand", required=True)
    ms = man_sub.add_parser("solve", help="solve one frame")
    _add_common(ms)
    ms.add_argument("--triple", help="A1..A6, B1..B6 or slot list like a1,b2,l3")
    ms.add_argument("--values", help="fixed values v1,v2,v3 (default: seeded feasible draw)")
    ms.set_defaults(func=cmd_manifold_solve)
    mp = man_sub.add_parser("sample", help="sample a manifold point cloud")
    _add_common(mp)
    mp.add_argument("--triple", help="triple name")
    mp.add_argument("--n", type=int, default=100, help="number of points")
    mp.set_defaults(func=cmd_manifold_sample)

    sf = sub.add_parser("surface", help="export the metric-factor grid")
    _add_common(sf)
    sf.add_argument("--rho1", default="0.1,6.0,60", help="min,max,n for rho1")
    sf.add_argument("--rho2", default="0.1,6.0,60", help="min,max,n for rho2")
    sf.add_argument("--theta", type=float, help="scattering angle (default: config rho3)")
    sf.set_defaults(func=cmd_surface)

    si = sub.add_parser("simulate", help="single trajectory run")
    _add_common(si)
    si.add_argument("--steps", type=int)
    si.add_argument("--dt", type=float)
    si.add_argument("--decimation", type=int)
    si.add_argument("--triple")
    si.set_defaults(func=cmd_simulate)

    pr = sub.add_parser("pair", help="perturbed pair, divergence exponent, dimension")
    _add_common(pr)
    pr.add_argument("--steps", type=int)
    pr.add_argument("--dt", type=float)
    pr.add_argument("--decimation", type=int)
    pr.add_argument("--triple")
    pr.add_argument("--perturbation", type=float)
    pr.set_defaults(func=cmd_pair)

    en = sub.add_parser("ensemble", help="forced-flow ensemble and functionals")
    _add_common(en)
    en.add_argument("--steps", type=int)
    en.add_argument("--dt", type=float)
    en.add_argument("--triple")
    en.add_argument("--members", type=int)
    en.add_argument("--noise-eps", dest="noise_eps", type=float)
    en.add_argument("--noise-mode", dest="noise_mode", choices=["zero", "constant"])
    en.add_argument("--snapshot-times", dest="snapshot_times",
                    help="comma-separated times")
    en.add_argument("--drift", choices=["dynamics", "none"], default="dynamics")
    en.add_argument("--dump-snapshots", action="store_true")
    en.set_defaults(func=cmd_ensemble)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrigeoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
