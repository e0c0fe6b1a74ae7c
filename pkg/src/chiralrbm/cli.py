"""Command line front end: ``chiralrbm <subcommand> [options]``.

Exit status: 0 on success, 1 for configuration errors, 2 when the numerics
fail (too many singular samples, z in the spectrum, ...).
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys

import numpy as np

from . import __version__
from .experiments import (
    DECAY_CELL_COLUMNS,
    DECAY_FIT_COLUMNS,
    FMC_COLUMNS,
    ConfigError,
    DecayScanConfig,
    FmcScanConfig,
    decay_cell_rows,
    decay_fit_rows,
    fit_power_law,
    run_decay_scan,
    run_fractional_moment_scan,
)
from .lyapunov import (
    LYAPUNOV_COLUMNS,
    FactorGenerator,
    estimate_lyapunov,
    estimate_lyapunov_replicas,
    lyapunov_rows,
)
from .model import to_json
from .resolvent import (
    MODEL_BUILDERS,
    SAMPLE_COLUMNS,
    SingularMatrixError,
    resolvent_block,
    sample_rows,
)
from .sampling import InvalidDimensionError, RngStream
from .tables import table_to_csv, table_to_json, write_text

EXIT_CONFIG = 1
EXIT_NUMERIC = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _complex(text):
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're' or 're,im', got {text!r}")


def _pair(text):
    x, _, y = text.partition(",")
    try:
        return int(x), (None if y.strip() in ("n", "") else int(y))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y' with y an integer or 'n', got {text!r}")


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _common(p, *, width_list=False, blocks_list=False, model="chiral"):
    p.add_argument("--seed", type=_seed, default=0)
    if width_list:
        p.add_argument("--width", "-W", type=_int_list, default=(1, 2, 4))
    else:
        p.add_argument("--width", "-W", type=int, default=4)
    if blocks_list:
        p.add_argument("--blocks", "-n", type=_int_list, default=None)
    else:
        p.add_argument("--blocks", "-n", type=int, default=8)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--model", choices=("full", "chiral", "general-chiral"), default=model)
    p.add_argument("--workers", type=int, default=1, help="worker processes; does not change the output")
    p.add_argument("--timestamp", action="store_true", help="add a wall-clock timestamp to JSON meta")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chiralrbm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw one model and dump its blocks")
    _common(p)

    p = sub.add_parser("lyapunov", help="QR estimate of the Lyapunov spectrum vs analytic references")
    _common(p, width_list=True)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--kind", choices=("ginibre", "pair"), default="ginibre")
    p.add_argument("--odd", choices=("ginibre", "identity"), default="ginibre")
    p.add_argument("--replicas", type=int, default=1)

    p = sub.add_parser("green", help="one Green's function block (H - z)^{-1}_{x,y}")
    _common(p)
    p.add_argument("--z", type=_complex, default=0j)
    p.add_argument("--x", type=int, default=1)
    p.add_argument("--y", type=int, default=None, help="default: last block")
    p.add_argument("--norm", choices=("op", "fro"), default="op")

    p = sub.add_parser("decay-scan", help="chiral zero-energy corner decay over a (W, n) grid")
    _common(p, width_list=True, blocks_list=True)
    p.add_argument("--fit-min-n", type=int, default=None)
    p.add_argument("--raw", default=None, help="per-sample CSV path")

    p = sub.add_parser("fmc-scan", help="fractional moments E||G_xy||^s over (W, n, z, s)")
    _common(p, width_list=True, blocks_list=True, model="full")
    p.add_argument("--z", type=_complex, action="append", default=None)
    p.add_argument("--s", type=float, action="append", default=None)
    p.add_argument("--pair", type=_pair, action="append", default=None, help="'x,y' with y an int or 'n'")
    p.add_argument("--raw", default=None, help="per-sample CSV path")

    p = sub.add_parser("scaling-fit", help="power-law fit of decay rates against W")
    _common(p, width_list=True, blocks_list=True)
    p.add_argument("--mu", type=lambda t: tuple(float(v) for v in t.split(",")), default=None,
                   help="fit these rates directly instead of running decay scans")
    p.add_argument("--fit-min-n", type=int, default=None)
    return parser


def _meta(args, config: dict) -> dict:
    meta = {"command": args.command, "version": __version__, "seed": args.seed, "config": config}
    if args.timestamp:
        meta["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return meta


def _emit(args, columns, rows, config, stdout, **extra):
    rows = list(rows)
    if args.format == "json":
        text = table_to_json(columns, rows, _meta(args, config), **extra)
    else:
        text = table_to_csv(columns, rows)
    write_text(args.out, text, stdout)


def _side_path(out, suffix):
    if out in (None, "-"):
        return None
    stem, dot, ext = out.rpartition(".")
    return f"{stem}.{suffix}.{ext}" if dot else f"{out}.{suffix}"


def _default_blocks(widths):
    top = 64 * max(widths)
    n, out = 4, []
    while n <= top:
        out.append(n)
        n *= 2
    return tuple(out)


def cmd_sample(args, stdout):
    kind = args.model.replace("-", "_")
    H = MODEL_BUILDERS[kind](args.blocks, args.width, RngStream(args.seed))
    config = {"model": args.model, "W": args.width, "n": args.blocks}
    if args.format == "json":
        write_text(args.out, json.dumps(to_json(H, _meta(args, config))) + "\n", stdout)
        return
    rows = []
    for name, blocks in (("V", H.V), ("T", H.T)):
        for j, b in enumerate(blocks, start=1):
            for (r, c), a in np.ndenumerate(b):
                rows.append({"block": name, "index": j, "row": r, "col": c, "re": a.real, "im": a.imag})
    write_text(args.out, table_to_csv(("block", "index", "row", "col", "re", "im"), rows), stdout)


def cmd_lyapunov(args, stdout):
    root = RngStream(args.seed)
    estimates = []
    for W in args.width:
        if args.replicas > 1:
            est = estimate_lyapunov_replicas(
                args.kind, W, args.steps, root.substream(W), args.replicas,
                burn_in=args.burn_in, odd=args.odd, workers=args.workers,
            )
        else:
            gen = FactorGenerator(args.kind, W, root.substream(W), odd=args.odd)
            est = estimate_lyapunov(gen, args.steps, args.burn_in)
        estimates.append(est)
    rows = [row for est in estimates for row in lyapunov_rows(est)]
    config = {"W": list(args.width), "steps": args.steps, "burn_in": args.burn_in, "kind": args.kind,
              "odd": args.odd, "replicas": args.replicas}
    _emit(args, LYAPUNOV_COLUMNS, rows, config, stdout)


def cmd_green(args, stdout):
    kind = args.model.replace("-", "_")
    H = MODEL_BUILDERS[kind](args.blocks, args.width, RngStream(args.seed))
    y = args.blocks if args.y is None else args.y
    rb = resolvent_block(H, args.z, args.x, y, norm=args.norm)
    rows = [
        {"x": rb.x, "y": rb.y, "z_re": rb.z.real, "z_im": rb.z.imag, "norm": rb.norm,
         "row": r, "col": c, "re": a.real, "im": a.imag}
        for (r, c), a in np.ndenumerate(rb.block)
    ]
    columns = ("x", "y", "z_re", "z_im", "norm", "row", "col", "re", "im")
    config = {"model": args.model, "W": args.width, "n": args.blocks, "z": [args.z.real, args.z.imag],
              "x": args.x, "y": y, "norm": args.norm}
    _emit(args, columns, rows, config, stdout)


def _run_scan(args):
    blocks = args.blocks or _default_blocks(args.width)
    config = DecayScanConfig(tuple(args.width), tuple(blocks), args.samples, args.seed,
                             fit_min_n=args.fit_min_n)
    return config, run_decay_scan(config, workers=args.workers)


def _scan_config_dict(config):
    return {"W": list(config.W_list), "n": list(config.n_list), "samples": config.samples,
            "fit_min_n": {W: config.fit_threshold(W) for W in config.W_list},
            "statistic": "mean of log ||(H^-1)_{1,n}||",
            "jensen": "log E||.|| >= E log||.||; the log_mean columns bound the primary statistic from above"}


def cmd_decay_scan(args, stdout):
    if args.model != "chiral":
        raise ConfigError("decay scans use the chiral model at z = 0")
    config, scan = _run_scan(args)
    cells, fits = list(decay_cell_rows(scan)), list(decay_fit_rows(scan))
    meta_config = _scan_config_dict(config)
    if args.format == "json":
        fit_cols = {c: [f[c] for f in fits] for c in DECAY_FIT_COLUMNS}
        write_text(args.out, table_to_json(DECAY_CELL_COLUMNS, cells, _meta(args, meta_config), fits=fit_cols),
                   stdout)
    else:
        side = _side_path(args.out, "fits")
        if side is None:
            write_text("-", table_to_csv(DECAY_CELL_COLUMNS, cells) + "\n" + table_to_csv(DECAY_FIT_COLUMNS, fits),
                       stdout)
        else:
            write_text(args.out, table_to_csv(DECAY_CELL_COLUMNS, cells), stdout)
            write_text(side, table_to_csv(DECAY_FIT_COLUMNS, fits), stdout)
    if args.raw:
        rows = [r for (W, n), logs in scan.raw.items() for r in sample_rows(logs, n, W, 0j, 1.0)]
        write_text(args.raw, table_to_csv(SAMPLE_COLUMNS, rows), stdout)


def cmd_fmc_scan(args, stdout):
    blocks = args.blocks or (4, 8, 16)
    config = FmcScanConfig(
        W_list=tuple(args.width),
        n_list=tuple(blocks),
        z_list=tuple(args.z) if args.z else (),
        s_list=tuple(args.s) if args.s else (0.5,),
        pairs=tuple(args.pair) if args.pair else ((1, None),),
        samples=args.samples,
        seed=args.seed,
        model=args.model,
    )
    raw = {} if args.raw else None
    rows = run_fractional_moment_scan(config, workers=args.workers, raw=raw)
    meta_config = {"W": list(config.W_list), "n": list(config.n_list),
                   "z": [[z.real, z.imag] for z in map(complex, config.z_list)], "s": list(config.s_list),
                   "pairs": [[x, y] for x, y in config.pairs], "samples": config.samples, "model": config.model}
    _emit(args, FMC_COLUMNS, rows, meta_config, stdout)
    if raw is not None:
        out = []
        for (W, n, z, x, y), logs in raw.items():
            out.extend(sample_rows(logs, n, W, z, None))
        write_text(args.raw, table_to_csv(SAMPLE_COLUMNS, out), stdout)


def cmd_scaling_fit(args, stdout):
    widths = tuple(args.width)
    if args.mu is not None:
        mu, se = tuple(args.mu), (None,) * len(args.mu)
        meta_config = {"W": list(widths), "mu": list(mu), "source": "given"}
    else:
        config, scan = _run_scan(args)
        mu = tuple(scan.fits[W].mu_hat for W in widths)
        se = tuple(scan.fits[W].mu_se for W in widths)
        meta_config = dict(_scan_config_dict(config), source="decay-scan")
    try:
        fit = fit_power_law(widths, mu)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    rows = [{"W": W, "mu": m, "mu_se": s, "alpha": fit.alpha, "prefactor": fit.prefactor, "rss": fit.rss}
            for W, m, s in zip(widths, mu, se)]
    _emit(args, ("W", "mu", "mu_se", "alpha", "prefactor", "rss"), rows, meta_config, stdout)


COMMANDS = {
    "sample": cmd_sample,
    "lyapunov": cmd_lyapunov,
    "green": cmd_green,
    "decay-scan": cmd_decay_scan,
    "fmc-scan": cmd_fmc_scan,
    "scaling-fit": cmd_scaling_fit,
}


def main(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args, stdout)
    except (ConfigError, InvalidDimensionError, IndexError) as err:
        print(f"chiralrbm: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularMatrixError as err:
        print(f"chiralrbm: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as err:
        print(f"chiralrbm: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
