"""Command line interface: ``udcs <command> ...``.

Exit codes: 0 ok, 2 bad spec or arguments, 3 encoder failure, 4 I/O error,
5 malformed codeword stream.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .analysis import (
    CoverageError,
    applicable_bounds,
    codeword_lengths,
    expected_length,
    implied_distribution,
    relative_entropy_lb,
)
from .bell import bell_bound, correlation_experiment, length_sweep, write_sweep_csv
from .codec import SchemeConfig, Variant, decode_stream, encode_batch, read_stream, serialize, write_stream
from .codes import CodeError
from .densities import UniformDensity
from .distspec import SpecError, load_spec
from .dyadic import Cube, DepthExhausted
from .regions import erosion_entropy, lemma1_check

EXIT_SPEC, EXIT_ENCODE, EXIT_IO, EXIT_STREAM = 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _seed(args):
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % (2**63))
        print(f"udcs: seed {args.seed}", file=sys.stderr)
    return args.seed


def _fmt(x):
    return format(float(x), ".17g")


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _load(path):
    try:
        spec = load_spec(path)
        return spec, spec.build()
    except SpecError as e:
        raise CliError(EXIT_SPEC, f"spec error in {path}: {e}") from None
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot read {path}: {e}") from None


# commands ------------------------------------------------------------------


def cmd_encode(args):
    spec, f = _load(args.spec)
    seed = _seed(args)
    cfg = SchemeConfig(args.variant, f.n, args.k_max)
    try:
        k, v, _, retries = encode_batch(f, cfg, args.count, np.random.default_rng(seed))
        words = [serialize(Cube(kk, tuple(vv)), cfg) for kk, vv in zip(k.tolist(), v.tolist())]
    except (DepthExhausted, ValueError) as e:
        raise CliError(EXIT_ENCODE, f"encoding failed: {e}") from None
    try:
        write_stream(args.out, words, cfg)
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot write {args.out}: {e}") from None
    lengths = np.array([len(w) for w in words], dtype=float)
    _emit({
        "count": args.count,
        "mean_length": float(lengths.mean()) if len(lengths) else 0.0,
        "stderr": float(lengths.std(ddof=1) / math.sqrt(len(lengths))) if len(lengths) > 1 else 0.0,
        "retries": int(retries),
        "seed": seed,
        "variant": cfg.variant.name.lower(),
        "n": cfg.n,
        "out": args.out,
    })


def cmd_decode(args):
    seed = _seed(args)
    try:
        cfg, bits = read_stream(args.stream, k_max=args.k_max)
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot read {args.stream}: {e}") from None
    except CodeError as e:
        raise CliError(EXIT_STREAM, f"malformed stream: {e}") from None
    try:
        out = decode_stream(bits, cfg, np.random.default_rng(seed))
    except CodeError as e:
        # header is 56 bits; report offsets within the file
        off = None if e.offset is None else e.offset + 56
        raise CliError(EXIT_STREAM, f"malformed stream at file bit offset {off}: {e.detail}") from None
    try:
        fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot write {args.out}: {e}") from None
    try:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(cfg.n)] + ["k"] + [f"v{i + 1}" for i in range(cfg.n)])
        for d in out:
            w.writerow([_fmt(a) for a in d.x] + [d.cube.k] + list(d.cube.v))
    finally:
        if args.out:
            fh.close()
    if args.ks_spec:
        from scipy.stats import kstest

        _, f = _load(args.ks_spec)
        if f.n != 1 or not hasattr(f, "cdf"):
            raise CliError(EXIT_SPEC, "KS check needs a 1D density with a cdf")
        x = np.array([d.x[0] for d in out])
        res = kstest(x, lambda t: f.cdf(t))
        print(json.dumps({"count": len(out), "ks_statistic": float(res.statistic),
                          "p_value": float(res.pvalue), "seed": seed}), file=sys.stderr)


def cmd_explen(args):
    _, f = _load(args.spec)
    t = time.perf_counter()
    rep = expected_length(f, args.variant, args.k_max)
    _emit(json.loads(rep.to_json()), args.out)
    print(f"udcs: enumerated in {time.perf_counter() - t:.2f} s", file=sys.stderr)


def cmd_bounds(args):
    _, f = _load(args.spec)
    _emit({"variant": args.variant, "bounds": applicable_bounds(f, args.variant)}, args.out)


def cmd_erosion(args):
    spec, f = _load(args.spec)
    if not isinstance(f, UniformDensity):
        raise CliError(EXIT_SPEC, "erosion needs a uniform_region spec")
    h, err = erosion_entropy(f.region)
    res = {"h": h, "h_error": err}
    try:
        res["lemma1"] = lemma1_check(f.region, rng=_seed(args))
        res["seed"] = args.seed
    except ValueError as e:
        res["lemma1"] = {"holds": None, "reason": str(e)}
    _emit(res, args.out)


def cmd_lb(args):
    _, f = _load(args.spec)
    seed = _seed(args)
    imp = implied_distribution(args.variant, f.n, args.k_lo, args.k_hi, args.v_max)
    try:
        r = relative_entropy_lb(f, imp, samples=args.samples, rng=seed)
    except CoverageError as e:
        raise CliError(EXIT_SPEC, f"implied table too small: {e}") from None
    _emit({"D": r.D, "D_unnormalized": r.D_unnormalized, "stderr": r.stderr,
           "leakage": r.leakage, "normalizer": r.normalizer, "k_lo": args.k_lo,
           "k_hi": args.k_hi, "v_max": args.v_max, "variant": args.variant,
           "seed": seed}, args.out)


def _sweep(points, k_max, out):
    rows = length_sweep(np.arange(points) / points, k_max)
    try:
        write_sweep_csv(rows, out) if out else write_sweep_csv(rows, sys.stdout)
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot write {out}: {e}") from None
    top = max(rows, key=lambda r: r.mean_length_upper)
    return {
        "points": points,
        "k_max": k_max,
        "max_mean_length_upper": top.mean_length_upper,
        "argmax_theta": top.theta,
        "max_with_split_penalty": max(r.with_split_penalty for r in rows),
        "analytic_bound": bell_bound(),
    }


def cmd_bell(args):
    if args.mode == "sweep":
        summary = _sweep(args.points, args.k_max, args.out)
        print(json.dumps(summary, sort_keys=True), file=sys.stderr)
        return
    seed = _seed(args)
    res = correlation_experiment(args.theta_a, args.theta_b, args.rounds, seed,
                                 split=args.split)
    res["seed"] = seed
    res["split"] = bool(args.split)
    _emit(res, args.out)


def cmd_figures(args):
    from .densities import builtin_gaussian1d, builtin_uniform_on
    from .regions import Ellipsoid

    os.makedirs(args.outdir, exist_ok=True)
    made = {}

    def put(name, obj):
        path = os.path.join(args.outdir, name)
        _emit(obj, path)
        made[name] = path

    ell = builtin_uniform_on(Ellipsoid([[4 / 3, -2 / 3], [-2 / 3, 4 / 3]]))
    put("example1_ellipse.json", json.loads(expected_length(ell, "unbounded", 16).to_json()))
    put("example2_gaussian.json",
        json.loads(expected_length(builtin_gaussian1d(), "unbounded", 20).to_json()))
    sweep_path = os.path.join(args.outdir, "bell_sweep.csv")
    summary = _sweep(args.points, 17, sweep_path)
    made["bell_sweep.csv"] = sweep_path
    put("bell_summary.json", summary)
    put("manifest.json", {"files": sorted(made), "version": __version__})


# parser --------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="udcs", description="Universal dyadic coding tools.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False, out=True):
        if seed:
            sp.add_argument("--seed", type=int, default=None,
                            help="rng seed; a random one is drawn and reported if omitted")
        if out:
            sp.add_argument("--out", default=None, help="output file (default: stdout)")

    def variant(sp):
        sp.add_argument("--variant", choices=["unbounded", "bounded"], default="unbounded",
                        help="codeword format (default: unbounded)")

    sp = sub.add_parser("encode", help="encode samples of a density to a stream file")
    sp.add_argument("spec", help="distribution spec JSON file")
    sp.add_argument("--count", type=int, default=1000, help="number of codewords")
    sp.add_argument("--k-max", type=int, default=40, help="encoder depth cap")
    variant(sp)
    common(sp, seed=True, out=False)
    sp.add_argument("--out", required=True, help="stream file to write")
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("decode", help="decode a stream file to CSV samples")
    sp.add_argument("stream", help="stream file written by encode")
    sp.add_argument("--k-max", type=int, default=40, help="sanity cap on decoded levels")
    sp.add_argument("--ks-spec", default=None,
                    help="spec to run a KS test against (1D); result goes to stderr")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("explen", help="enumerated expected length and H(W)")
    sp.add_argument("spec")
    sp.add_argument("--k-max", type=int, default=16, help="finest level enumerated")
    variant(sp)
    common(sp)
    sp.set_defaults(func=cmd_explen)

    sp = sub.add_parser("bounds", help="every closed-form bound that applies")
    sp.add_argument("spec")
    variant(sp)
    common(sp)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("erosion", help="erosion entropy of a region and the mean-norm inequality")
    sp.add_argument("spec", help="uniform_region spec")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_erosion)

    sp = sub.add_parser("lb", help="relative entropy to the implied distribution")
    sp.add_argument("spec")
    variant(sp)
    sp.add_argument("--k-lo", type=int, default=-20)
    sp.add_argument("--k-hi", type=int, default=30)
    sp.add_argument("--v-max", type=int, default=2**40)
    sp.add_argument("--samples", type=int, default=400_000)
    common(sp, seed=True)
    sp.set_defaults(func=cmd_lb)

    sp = sub.add_parser("bell", help="Bell correlation experiment or length sweep")
    sp.add_argument("mode", choices=["experiment", "sweep"])
    sp.add_argument("--theta-a", type=float, default=0.0, help="Alice's angle (radians)")
    sp.add_argument("--theta-b", type=float, default=0.0, help="Bob's angle (radians)")
    sp.add_argument("--rounds", type=int, default=100_000)
    sp.add_argument("--split", action="store_true",
                    help="prefix a piece-selector bit on wrapped supports")
    sp.add_argument("--points", type=int, default=512, help="sweep grid size")
    sp.add_argument("--k-max", type=int, default=17, help="sweep depth")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_bell)

    sp = sub.add_parser("figures", help="regenerate the worked examples and the sweep")
    sp.add_argument("outdir")
    sp.add_argument("--points", type=int, default=512)
    sp.set_defaults(func=cmd_figures)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) and EXIT_SPEC
    try:
        args.func(args)
    except CliError as e:
        print(f"udcs: {e}", file=sys.stderr)
        return e.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
