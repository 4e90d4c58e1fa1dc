"""maass-shift command-line entry point."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Sequence

from . import experiments as ex


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="maass-shift",
        description="Shifted convolution values of level-one cusp forms via harmonic Maass forms.",
    )
    p.add_argument("--precision", type=int, default=512, help="working precision in bits (default 512)")
    p.add_argument("--format", dest="output_format", choices=("csv", "json"), default="csv")
    p.add_argument("--cache", dest="cache_dir", default=None, help=f"coefficient cache directory (or ${ex.CACHE_ENV})")
    p.add_argument("--q-length", type=int, default=6000, help="length of the Δ expansion")
    p.add_argument("--atol", type=float, default=1e-26, help="absolute accuracy of Poincaré coefficients")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("tau", help="Ramanujan tau(n)")
    s.add_argument("--max", dest="n_max", type=int, required=True)

    s = sub.add_parser("periods", help="periods r_n and critical L-values")
    s.add_argument("--form", default="delta", choices=("delta",))

    s = sub.add_parser("poincare", help="calibrated Poincaré coefficients")
    s.add_argument("--n-list", type=_int_list, default=(1, 10, 100, 1000))
    s.add_argument("--c-max", type=int, default=4000)

    s = sub.add_parser("dhat", help="symmetrized shifted convolution values")
    s.add_argument("--h-list", type=_int_list, default=(1, 2, 3))
    s.add_argument("--route", choices=("direct", "mock", "projection", "all"), default="mock")
    s.add_argument("--direct-n", type=int, default=10**5)
    s.add_argument("--m-max", type=int, default=None, help="projection head length")

    sub.add_parser("table1", help="reproduce the n = 1, 10, 100, 1000 table").add_argument(
        "--digits", type=int, default=3, help="significant digits for the comparison"
    )

    s = sub.add_parser("growth", help="log-log growth exponent of D̂(h)")
    s.add_argument("--h-list", type=_int_list, default=(10, 30, 100, 300, 1000))

    s = sub.add_parser("periodcheck", help="period function cross-check and lemma constant scan")
    s.add_argument("--gammas", type=int, default=10)
    s.add_argument("--scan", type=int, default=50)
    return p


def _config(args) -> ex.RunConfig:
    kw = dict(
        precision=args.precision,
        q_length=args.q_length,
        atol=args.atol,
        output_format=args.output_format,
        cache_dir=args.cache_dir,
    )
    if getattr(args, "h_list", None):
        kw["h_list"] = tuple(args.h_list)
    if getattr(args, "c_max", None):
        kw["c_max"] = args.c_max
    if getattr(args, "direct_n", None):
        kw["direct_n"] = args.direct_n
    if getattr(args, "m_max", None):
        kw["projection_m_max"] = args.m_max
    if getattr(args, "digits", None):
        kw["sig_digits"] = args.digits
    return ex.RunConfig(**kw)


def emit(rows: Sequence[ex.ResultRow], fmt: str, stream=None) -> None:
    stream = stream or sys.stdout
    if fmt == "json":
        json.dump([r.to_json() for r in rows], stream, indent=1)
        stream.write("\n")
        return
    flat = [r.flat() for r in rows]
    fields: list[str] = []
    for row in flat:
        for key in row:
            if key not in fields:
                fields.append(key)
    writer = csv.DictWriter(stream, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(flat)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config(args)
        rows, status = _run(args, config)
    except ValueError as exc:
        print(f"maass-shift: {exc}", file=sys.stderr)
        return 2
    emit(rows, config.output_format)
    return status


def _run(args, config: ex.RunConfig):
    cmd = args.command
    if cmd == "tau":
        rows, status = ex.cmd_tau(config, args.n_max)
    elif cmd == "periods":
        rows, status = ex.cmd_periods(config, args.form)
    elif cmd == "poincare":
        rows, status = ex.cmd_poincare(config, args.n_list)
    elif cmd == "dhat":
        rows, status = ex.cmd_dhat(config, args.route)
    elif cmd == "table1":
        rows, status = ex.cmd_table1(config)
    elif cmd == "growth":
        rows, status = ex.cmd_growth(config)
    else:
        rows, status = ex.cmd_periodcheck(config, args.gammas, args.scan)
    return rows, status


if __name__ == "__main__":
    sys.exit(main())
