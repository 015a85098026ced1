"""Command-line entry point: run one model and write getdist-style chains.

Example::

    geonest --model torus6 --nlive 50 --seed 1 --out chains/torus6

writes ``chains/torus6.txt``, ``.paramnames``, ``.stats`` and ``.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .models import MODEL_KEYS, get_model
from .nested import run
from .sampler import MODES, ProposalConfig, SamplerStall

__all__ = ["RunConfig", "parse_args", "write_outputs", "main"]

RNG_NAME = "numpy.random.PCG64(SeedSequence(seed))"


@dataclass(frozen=True)
class RunConfig:
    model_key: str
    n_live: int = 500
    epsilon: float = 0.01
    seed: int = 0
    sampler_mode: str = "geometric"
    nt_multiplier: int = 20
    output_root: str = ""


def _build_parser():
    p = argparse.ArgumentParser(
        prog="geonest",
        description="Nested sampling with wrapped (circle/torus) and Cartesian (sphere) proposals.",
    )
    p.add_argument("--model", required=True, help=f"model key: {', '.join(MODEL_KEYS)}")
    p.add_argument("--nlive", type=int, default=500, help="number of livepoints (default 500)")
    p.add_argument("--epsilon", type=float, default=0.01, help="stopping tolerance in (0, 1) (default 0.01)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--mode", choices=MODES, default="geometric", help="proposal mode (default geometric)")
    p.add_argument("--nt-mult", type=int, default=20, help="chain length per dimension (default 20)")
    p.add_argument("--out", required=True, help="output root; extensions are appended")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_args(argv=None):
    """Parse command-line flags into a :class:`RunConfig`.

    Invalid values exit through ``argparse`` with status 2.
    """
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.nlive < 2:
        parser.error("--nlive must be at least 2")
    if not 0.0 < args.epsilon < 1.0:
        parser.error("--epsilon must lie strictly between 0 and 1")
    if args.nt_mult < 1:
        parser.error("--nt-mult must be positive")
    if not 0 <= args.seed < 2**64:
        parser.error("--seed must be a non-negative 64-bit integer")
    try:
        get_model(args.model)
    except KeyError as exc:
        parser.error(str(exc.args[0]))
    cfg = RunConfig(
        model_key=args.model,
        n_live=args.nlive,
        epsilon=args.epsilon,
        seed=args.seed,
        sampler_mode=args.mode,
        nt_multiplier=args.nt_mult,
        output_root=args.out,
    )
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, format="%(name)s: %(message)s")
    return cfg


def stats_dict(result, cfg):
    return {
        "model": cfg.model_key,
        "logz_mean": result.logz_mean,
        "logz_err": result.logz_err,
        "n_iterations": result.n_iterations,
        "n_live": result.n_live,
        "epsilon": cfg.epsilon,
        "seed": cfg.seed,
        "sampler_mode": cfg.sampler_mode,
        "nt_multiplier": cfg.nt_multiplier,
        "mean_acceptance": result.mean_acceptance,
        "rng": RNG_NAME,
    }


def write_outputs(result, model, cfg):
    """Write ``<root>.txt``, ``.paramnames``, ``.stats`` and ``.json``.

    Chain rows are ``weight  -2*loglike  theta_1 ... theta_N`` for every dead
    point and final livepoint.
    """
    root = Path(cfg.output_root)
    root.parent.mkdir(parents=True, exist_ok=True)
    paths = {ext: root.with_name(root.name + ext) for ext in (".txt", ".paramnames", ".stats", ".json")}

    table = np.column_stack([result.weights, -2.0 * result.loglikes, result.samples])
    np.savetxt(paths[".txt"], table, fmt="%.16e", delimiter="  ")

    with open(paths[".paramnames"], "w") as fh:
        for name, label in zip(model.param_names, model.param_labels):
            fh.write(f"{name}\t{label}\n")

    stats = stats_dict(result, cfg)
    with open(paths[".stats"], "w") as fh:
        for key, value in stats.items():
            if isinstance(value, float):
                value = f"{value:.6g}"
            fh.write(f"{key:<16} {value}\n")

    with open(paths[".json"], "w") as fh:
        json.dump(stats, fh, indent=2)
        fh.write("\n")
    return paths


def main(argv=None):
    cfg = parse_args(argv)
    model = get_model(cfg.model_key)
    proposal = ProposalConfig(mode=cfg.sampler_mode, nt_multiplier=cfg.nt_multiplier)
    rng = np.random.default_rng(cfg.seed)
    start = time.perf_counter()
    try:
        result = run(model, cfg.n_live, proposal, cfg.epsilon, rng)
    except SamplerStall as exc:
        print(f"geonest: sampler stalled: {exc}", file=sys.stderr)
        return 3
    try:
        write_outputs(result, model, cfg)
    except OSError as exc:
        print(f"geonest: cannot write outputs: {exc}", file=sys.stderr)
        return 1
    print(
        f"{cfg.model_key}: logZ = {result.logz_mean:.6g} +/- {result.logz_err:.3g} "
        f"({result.n_iterations} iterations, {time.perf_counter() - start:.1f} s)"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
