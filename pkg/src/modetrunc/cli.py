"""Command-line interface for the Hadamard-square benchmark pipeline.

Subcommands:

* ``gen``    -- generate the synthetic density and persist it as a TKR1
  container directory,
* ``run``    -- run the full pipeline and write report.json (+ CSV row),
* ``report`` -- pretty-print a previously written report.

Exit codes: 0 success, 2 usage error, 3 resource-cap abort.
"""

import argparse
import json
import sys

from .bench import BenchConfig, gen_density, run_pipeline, write_report
from .errors import ResourceCapError
from .formats import save_tucker


def _load_config(args):
    cfg = BenchConfig.from_json(args.config) if args.config else BenchConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "dense_check", False):
        cfg.dense_check = True
    if args.out:
        cfg.out_dir = args.out
    return cfg


def _cmd_gen(args):
    cfg = _load_config(args)
    density = gen_density(cfg)
    out = cfg.out_dir
    save_tucker(density, out)
    print(f"wrote density container to {out} "
          f"(n={cfg.n}, terms={cfg.terms}, seed={cfg.seed})")
    return 0


def _cmd_run(args):
    cfg = _load_config(args)
    report = run_pipeline(cfg)
    path = write_report(report, cfg.out_dir)
    print(f"wrote {path}")
    print(f"  input ranks    {report.input_ranks}")
    print(f"  output ranks   {report.output_ranks}")
    print(f"  rel error (cross) {report.rel_error_cross:.3e}")
    print(f"  rel error (ALS)   {report.rel_error_refined:.3e}")
    return 0


def _cmd_report(args):
    with open(args.path) as fh:
        rep = json.load(fh)
    if rep.get("schema") != "bench-v1":
        raise ValueError(f"unsupported report schema {rep.get('schema')!r}")
    cfg = rep["config"]
    print(f"benchmark run: n={cfg['n']} terms={cfg['terms']} seed={cfg['seed']}")
    print(f"  input ranks     {tuple(rep['input_ranks'])}")
    print(f"  hadamard ranks  {tuple(rep['hadamard_ranks'])}")
    print(f"  output ranks    {tuple(rep['output_ranks'])}")
    print(f"  rel error cross   {rep['rel_error_cross']:.3e}")
    print(f"  rel error refined {rep['rel_error_refined']:.3e}")
    for key, val in sorted(rep["timings"].items()):
        print(f"  t[{key}] = {val:.3f} s")
    if rep.get("dense_check"):
        print(f"  dense check: {rep['dense_check']}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="modetrunc",
        description="Mode-rank truncation benchmark for Hadamard squares "
                    "of synthetic Gaussian densities.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate and save the density")
    p_run = sub.add_parser("run", help="run the full pipeline")
    for p in (p_gen, p_run):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--dense-check", action="store_true",
                       help="cross-check errors densely when the grid fits")
    p_gen.set_defaults(func=_cmd_gen)
    p_run.set_defaults(func=_cmd_run)

    p_rep = sub.add_parser("report", help="pretty-print a report.json")
    p_rep.add_argument("path")
    p_rep.set_defaults(func=_cmd_report)

    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
