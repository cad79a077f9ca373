"""Command-line interface: encode, decode, sweep, timing, atlas, footprint.

Exit codes: 0 on success, 1 for configuration errors, 2 for empty results.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .atlas import AtlasSpec, atlas_sidecar, render_atlas, save_ppm
from .factor import NmfConfig
from .footprint import feasible_patch_sizes, footprint, per_rank_footprint, select_khat
from .image import save_pgm
from .metrics import quality_report
from .pipeline import (SweepConfig, decode_encoded, encode_decode_direct,
                       encode_decode_patched, load_image_source, parse_sweep_config,
                       run_sweep, run_timing, write_encoded, _factor)
from .reorder import reorder

log = logging.getLogger("patchlr")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_EMPTY = 2


class _Parser(argparse.ArgumentParser):
    # argument errors are configuration errors: exit 1, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self.prog + ": error: " + message)


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_nmf_flags(sub):
    sub.add_argument("--seed", type=int, default=0, help="seed for NMF initialization")
    sub.add_argument("--max-iters", type=int, default=500, help="NMF iteration cap")
    sub.add_argument("--rel-tol", type=float, default=1e-5,
                     help="NMF relative-improvement stopping threshold")


def _nmf_config(args):
    return NmfConfig(max_iters=args.max_iters, rel_tol=args.rel_tol, seed=args.seed)


def build_parser():
    parser = _Parser(prog="patchlr",
                     description="Patch-reordered low-rank image compression bench")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", parents=[], help="factor an image into an encoded bundle")
    enc.add_argument("input", help="PGM path or synth:<kind>:<rows>:<cols>[:<seed>]")
    enc.add_argument("--backend", choices=("svd", "nmf"), default="svd")
    enc.add_argument("--k", type=int, default=32, help="direct rank / patched budget rank")
    enc.add_argument("--p", type=int, default=0, help="patch size; 0 encodes directly")
    enc.add_argument("--khat", type=int, default=0,
                     help="patched rank; 0 selects the largest rank within the --k budget")
    _add_nmf_flags(enc)
    enc.add_argument("--out", required=True, help="output bundle directory")

    dec = sub.add_parser("decode", help="reconstruct a PGM from an encoded bundle")
    dec.add_argument("input", help="encoded bundle directory")
    dec.add_argument("--out", required=True, help="output PGM path")
    dec.add_argument("--maxval", type=int, choices=(255, 65535), default=255)

    sw = sub.add_parser("sweep", help="run the footprint-matched quality sweep")
    sw.add_argument("--config", help="flat key=value sweep config file")
    sw.add_argument("--image", action="append", default=[], metavar="NAME=SOURCE",
                    help="add an image (repeatable); overrides config images")
    sw.add_argument("--backends", type=str, default=None, help="comma list, e.g. svd,nmf")
    sw.add_argument("--k-values", type=_int_list, default=None)
    sw.add_argument("--p-values", type=_int_list, default=None)
    sw.add_argument("--seed", type=int, default=None, help="base NMF seed")
    sw.add_argument("--repeat", type=int, default=None,
                    help="run NMF cells for this many consecutive seeds")
    sw.add_argument("--out", default=None, help="output directory")
    sw.add_argument("--no-wall-time", action="store_true",
                    help="write wall_time_ms as 0 for byte-reproducible CSVs")

    tm = sub.add_parser("timing", help="direct vs patched factorization timing")
    tm.add_argument("--rows", type=int, default=512)
    tm.add_argument("--cols", type=int, default=512)
    tm.add_argument("--p", type=_int_list, default=(4, 8, 16, 32), dest="p_values",
                    help="comma-separated patch sizes")
    tm.add_argument("--k", type=int, default=16)
    tm.add_argument("--trials", type=int, default=5)
    tm.add_argument("--out", required=True, help="output directory for timing.csv")

    at = sub.add_parser("atlas", help="render the dictionary atlas of a factorization")
    at.add_argument("input", help="PGM path or synth:<kind>:<rows>:<cols>[:<seed>]")
    at.add_argument("--backend", choices=("svd", "nmf"), default="nmf")
    at.add_argument("--k", type=int, default=32, help="budget rank used to select khat")
    at.add_argument("--khat", type=int, default=0, help="explicit rank; 0 selects from --k")
    at.add_argument("--p", type=int, default=16, help="patch size")
    at.add_argument("--grid-rows", type=int, default=4)
    at.add_argument("--grid-cols", type=int, default=8)
    _add_nmf_flags(at)
    at.add_argument("--out", required=True, help="output directory")

    fp = sub.add_parser("footprint", help="print the per-patch-size footprint curve as CSV")
    fp.add_argument("--rows", type=int, required=True)
    fp.add_argument("--cols", type=int, required=True)
    fp.add_argument("--k", type=int, required=True, help="direct budget rank")
    fp.add_argument("--khat", type=int, default=0,
                    help="patched rank; 0 selects per patch size from the --k budget")
    return parser


def _cmd_encode(args):
    img = load_image_source(args.input)
    nmf_cfg = _nmf_config(args)
    if args.p == 0:
        fact = _factor(img.pixels, args.backend, args.k, nmf_cfg)
        write_encoded(args.out, fact, img.rows, img.cols, 0)
    else:
        khat = args.khat or select_khat(img.rows, img.cols, args.p, args.k)
        if khat < 1:
            log.error("budget k=%d admits no patched rank at p=%d", args.k, args.p)
            return EXIT_EMPTY
        rm = reorder(img, args.p)
        fact = _factor(rm.data, args.backend, khat, nmf_cfg)
        write_encoded(args.out, fact, img.rows, img.cols, args.p)
    log.info("encoded %s -> %s", args.input, args.out)
    return EXIT_OK


def _cmd_decode(args):
    img = decode_encoded(args.input)
    Path(args.out).write_bytes(save_pgm(img, args.maxval))
    log.info("decoded %s -> %s (%dx%d)", args.input, args.out, img.rows, img.cols)
    return EXIT_OK


def _cmd_sweep(args):
    if args.config:
        cfg = parse_sweep_config(Path(args.config).read_text(encoding="ascii"))
    else:
        cfg = SweepConfig(images=())
    overrides = {}
    if args.image:
        pairs = []
        for item in args.image:
            if "=" not in item:
                raise ValueError(f"--image wants NAME=SOURCE, got {item!r}")
            name, _, source = item.partition("=")
            pairs.append((name, source))
        overrides["images"] = tuple(pairs)
    if args.backends is not None:
        overrides["backends"] = tuple(b.strip() for b in args.backends.split(","))
    if args.k_values is not None:
        overrides["k_values"] = args.k_values
    if args.p_values is not None:
        overrides["p_values"] = args.p_values
    if args.seed is not None:
        overrides["nmf"] = NmfConfig(max_iters=cfg.nmf.max_iters, rel_tol=cfg.nmf.rel_tol,
                                     seed=args.seed, epsilon_guard=cfg.nmf.epsilon_guard)
    if args.repeat is not None:
        overrides["repeat"] = args.repeat
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.no_wall_time:
        overrides["record_wall_time"] = False
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    if not cfg.images:
        log.error("no images configured; use --image or a config file")
        return EXIT_CONFIG
    records = run_sweep(cfg)
    if not records:
        log.error("sweep produced no records")
        return EXIT_EMPTY
    log.info("wrote %d records to %s", len(records), Path(cfg.output_dir) / "sweep.csv")
    return EXIT_OK


def _cmd_timing(args):
    records = run_timing(args.rows, args.cols, args.p_values, args.k,
                         args.trials, output_dir=args.out)
    if not records:
        log.error("no feasible patch sizes")
        return EXIT_EMPTY
    for rec in records:
        log.info("p=%d: direct %.1fms patched %.1fms ratio %.3f (predicted %.4f)",
                 rec.p, rec.t_direct_ms, rec.t_patched_ms,
                 rec.measured_ratio, rec.predicted_ratio)
    return EXIT_OK


def _cmd_atlas(args):
    img = load_image_source(args.input)
    khat = args.khat or select_khat(img.rows, img.cols, args.p, args.k)
    if khat < 1:
        log.error("budget k=%d admits no patched rank at p=%d", args.k, args.p)
        return EXIT_EMPTY
    rm = reorder(img, args.p)
    fact = _factor(rm.data, args.backend, khat, _nmf_config(args))
    spec = AtlasSpec(patch_size=args.p, grid_rows=args.grid_rows, grid_cols=args.grid_cols)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "atlas.ppm").write_bytes(save_ppm(render_atlas(fact, spec)))
    (out_dir / "atlas.txt").write_text(atlas_sidecar(fact), encoding="ascii")
    log.info("rendered %d dictionary elements to %s", khat, out_dir / "atlas.ppm")
    return EXIT_OK


def _cmd_footprint(args):
    rows, cols, k = args.rows, args.cols, args.k
    print("p,g_p,khat,footprint_patched,footprint_direct")
    direct = footprint("direct", rows, cols, k=k)
    for p in feasible_patch_sizes(rows, cols):
        g_p = per_rank_footprint(p, rows, cols)
        khat = args.khat or select_khat(rows, cols, p, k)
        if khat < 1:
            continue
        patched = footprint("patched", rows, cols, khat=khat, p=p)
        print(f"{p},{g_p},{khat},{patched},{direct}")
    return EXIT_OK


_COMMANDS = {
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "sweep": _cmd_sweep,
    "timing": _cmd_timing,
    "atlas": _cmd_atlas,
    "footprint": _cmd_footprint,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK if not exc.code else EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
