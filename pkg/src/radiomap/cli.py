"""Command-line front end: generate, sample, reconstruct, evaluate, experiment.

Exit codes: 0 success, 2 invalid arguments or inputs, 3 solver did not
converge and ``--strict`` was given.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import persistence as io
from .channel import ArrayGeometry, Beamformer, GridSpec, generate_map
from .exceptions import InvalidArgumentError
from .experiments import METHODS, preset, reconstruct, run_experiment, summarize
from .lowrank import SolverConfig
from .metrics import nmse
from .sampling import DEFAULT_MU, build_mask

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3

SCENE_DEFAULTS = {
    "grid": {"theta_min": -80.0, "theta_max": 80.0, "r_min": 0.1, "r_max": 10.0, "n_theta": 100, "n_r": 100},
    "n_elements": 256,
    "carrier_freq": 100e9,
    "power": 1.0,
    "sigma": 0.0,
    "seed": 0,
}

KIND_BY_METHOD = {"rbf": "rbf_prior", "rbf_noconst": "rbf_prior", "rbf_gaussian": "rbf_prior",
                  "rbf_tps": "rbf_prior", "lpr": "lpr_prior"}

log = logging.getLogger("radiomap")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def load_scene(path) -> dict:
    """Scene JSON merged over the default scene; unknown keys are rejected."""
    scene = json.loads(json.dumps(SCENE_DEFAULTS))
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        unknown = set(user) - set(scene)
        if unknown:
            raise InvalidArgumentError(f"unknown scene keys {sorted(unknown)}")
        grid = {**scene["grid"], **user.pop("grid", {})}
        scene.update(user)
        scene["grid"] = grid
    return scene


def cmd_generate(args) -> int:
    scene = load_scene(args.config)
    try:
        grid = GridSpec(**scene["grid"])
    except TypeError as exc:
        raise InvalidArgumentError(f"bad grid in scene: {exc}") from None
    geom = ArrayGeometry(int(scene["n_elements"]), float(scene["carrier_freq"]))
    rm = generate_map(grid, geom, Beamformer.omnidirectional(geom.n_elements), scene["power"],
                      scene["sigma"], scene["seed"])
    io.write_matrix(args.out, rm.values, "radio_map", grid, n_elements=geom.n_elements,
                    carrier_freq=geom.carrier_freq, power=scene["power"], sigma=scene["sigma"],
                    seed=scene["seed"])
    return EXIT_OK


def cmd_sample(args) -> int:
    values, header = io.read_matrix(args.map, "radio_map")
    grid = io.grid_from_header(header)
    mask = build_mask(grid, args.rho, args.strategy, seed=args.seed, mu=args.mu)
    io.write_mask(args.out, mask, values)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    values, header = io.read_matrix(args.map)
    grid = io.grid_from_header(header)
    mask, _ = io.read_mask(args.mask)
    if mask.shape != grid.shape:
        raise InvalidArgumentError(f"mask shape {mask.shape} does not match map {grid.shape}")
    if args.method == "rbf_mc_fixed" and args.delta is None:
        raise InvalidArgumentError("--delta is required for rbf_mc_fixed")
    solver = SolverConfig(max_iters=args.max_iters)
    rec = reconstruct(args.method, mask, values, grid, epsilon=args.epsilon, delta=args.delta, solver=solver)
    diag = {"method": args.method, "delta": rec.delta, "iterations": rec.iterations, "converged": rec.converged}
    if "threshold" in rec.info:
        diag["huber"] = rec.info
    kind = KIND_BY_METHOD.get(args.method, "completion")
    io.write_matrix(args.out, rec.estimate, kind, grid, diagnostics=diag)
    if args.strict and rec.converged is False:
        log.error("solver stopped after %s iterations without converging", rec.iterations)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_evaluate(args) -> int:
    truth, _ = io.read_matrix(args.truth)
    est, _ = io.read_matrix(args.estimate)
    print(repr(nmse(truth, est)))
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = preset(args.preset, args.trials)
    if args.seed is not None:
        cfg = cfg.with_(base_seed=args.seed)
    records = run_experiment(cfg, workers=args.workers)
    io.write_records(args.out, records)
    for key, value in summarize(records).items():
        log.info("%s %.6g", key, value)
    if args.strict and any(r.converged is False for r in records):
        return EXIT_NONCONVERGED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="radiomap", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="simulate a radio map")
    g.add_argument("--config", help="scene JSON; omitted keys take the default scene")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("sample", help="draw an observation mask")
    s.add_argument("--map", required=True)
    s.add_argument("--rho", type=float, required=True)
    s.add_argument("--strategy", choices=("uniform", "mulaw"), default="uniform")
    s.add_argument("--mu", type=float, default=DEFAULT_MU)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    r = sub.add_parser("reconstruct", help="fill a map from its observed cells")
    r.add_argument("--method", choices=METHODS, default="rbf_mc_huber")
    r.add_argument("--map", required=True)
    r.add_argument("--mask", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--delta", type=float)
    r.add_argument("--epsilon", type=float, default=1.0)
    r.add_argument("--max-iters", type=int, default=2000)
    r.add_argument("--strict", action="store_true", help="exit 3 if the solver does not converge")
    r.set_defaults(func=cmd_reconstruct)

    e = sub.add_parser("evaluate", help="print the NMSE of an estimate")
    e.add_argument("--truth", required=True)
    e.add_argument("--estimate", required=True)
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="run a figure preset")
    x.add_argument("--preset", required=True)
    x.add_argument("--trials", type=int)
    x.add_argument("--seed", type=int)
    x.add_argument("--out", required=True)
    x.add_argument("--workers", type=int, default=1, help="worker processes for the trials")
    x.add_argument("--strict", action="store_true")
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InvalidArgumentError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"radiomap: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"radiomap: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED if getattr(args, "strict", False) else 1


if __name__ == "__main__":
    sys.exit(main())
