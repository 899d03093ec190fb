"""Command-line front end.

Channel specs are ``bec:A``, ``bsc:P``, ``awgn-sigma:S`` or ``awgn-ebn0:DB``;
for ``awgn-ebn0`` the noise is ``sigma^2 = 1 / (2 R 10^(EbN0/10))`` with ``R``
the rate of the simulated code (``k/n`` for ``bounds``).  Where a sweep is
accepted the value may be ``start:stop:step`` (inclusive) or a comma list.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .block import BlockCode, decode_block, encode_block
from .channels import make_channel
from .ensemble import (TAIL_BITING, TERMINATED, CouplingParams, EnsembleParams, gen_parity_matrix, read_matrix,
                       split_matrix, write_matrix)
from .sc import ENTROPY_EPS, ScCode, decode_sc, decoded_bits, encode_sc
from .sim import CodeSpec, SimConfig, config_meta, csv_header, run_sweep

PROG = "scldgm"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


def parse_sweep(text: str) -> list[float]:
    """``a:b:s`` (inclusive of ``b`` up to rounding) or ``a,b,c`` or a single value."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            a, b, s = (float(p) for p in parts)
            if s <= 0 or b < a:
                raise ValueError
            count = int(np.floor((b - a) / s + 1e-9)) + 1
            return [round(a + i * s, 12) for i in range(count)]
        vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValueError(f"bad sweep {text!r}: expected start:stop:step with step > 0, or a comma list") from None
    if not vals:
        raise ValueError(f"bad sweep {text!r}: no values")
    return vals


def parse_channel_sweep(spec: str) -> tuple[str, list[float]]:
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise ValueError(f"channel spec {spec!r}: expected '<kind>:<value or sweep>'")
    kind = kind.strip().lower()
    if kind not in ("bec", "bsc", "awgn-ebn0", "awgn-sigma"):
        raise ValueError(f"channel spec {spec!r}: unknown channel kind {kind!r}")
    return kind, parse_sweep(rest)


def _read_bits(path: str) -> np.ndarray:
    text = "".join(Path(path).read_text().split())
    bad = set(text) - {"0", "1"}
    if bad:
        raise ValueError(f"{path}: bit file may only contain 0/1, found {sorted(bad)[0]!r}")
    return np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")


def _write_bits(path: str | None, bits: np.ndarray) -> None:
    s = "".join(map(str, np.asarray(bits, dtype=int).tolist())) + "\n"
    if path is None:
        sys.stdout.write(s)
    else:
        Path(path).write_text(s)


def _read_llr(path: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in Path(path).read_text().split()])
    except ValueError as e:
        raise ValueError(f"{path}: LLR file must hold whitespace-separated numbers ({e})") from None


def _emit(out: str | None, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _sc_from_files(args) -> ScCode:
    P = read_matrix(args.matrix)
    layers = tuple(read_matrix(p) for p in args.layers)
    coupling = CouplingParams(len(layers) - 1, args.L, args.mode)
    return ScCode(BlockCode(P), layers, coupling)


def cmd_gen(args) -> None:
    P = gen_parity_matrix(EnsembleParams(args.n, args.k, args.rho, args.seed))
    write_matrix(P, args.out)


def cmd_split(args) -> None:
    P = read_matrix(args.matrix)
    layers = split_matrix(P, CouplingParams(args.m, max(args.m + 1, 1), TERMINATED, args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for ell, Pl in enumerate(layers):
        write_matrix(Pl, out / f"P{ell}.txt")


def cmd_encode(args) -> None:
    u = _read_bits(args.input)
    if args.layers:
        c = encode_sc(u, _sc_from_files(args))
    else:
        c = encode_block(u, BlockCode(read_matrix(args.matrix)))
    _write_bits(args.out, c)


def cmd_decode(args) -> None:
    llr = _read_llr(args.input)
    if args.layers:
        outs = decode_sc(llr, _sc_from_files(args), args.d, args.j_max, args.eps, not args.no_cancel)
        bits = decoded_bits(outs)
    else:
        code = BlockCode(read_matrix(args.matrix))
        if llr.size != code.n:
            raise ValueError(f"{args.input}: {llr.size} LLRs, code length is {code.n}")
        bits = decode_block(llr, code, args.i_max).bits
    _write_bits(args.out, bits)


def cmd_simulate(args) -> None:
    kind, sweep = parse_channel_sweep(args.channel)
    spec = CodeSpec(args.n, args.k, args.rho, args.code_seed, args.m, args.L, args.mode, args.split_seed,
                    args.matrix)
    cfg = SimConfig(spec, kind, sweep, args.min_frame_errors, args.max_frames, args.i_max, args.j_max, args.d,
                    args.eps, not args.no_cancel, args.seed, args.random_data, args.out)
    cfg.validate()
    code = spec.build()
    if args.json_meta:
        Path(args.json_meta).write_text(json.dumps(config_meta(cfg, code.rate), indent=2, sort_keys=True) + "\n")
    fh = open(args.out, "w") if args.out else sys.stdout
    try:
        fh.write(csv_header())
        fh.flush()
        for pt in run_sweep(cfg, code):
            fh.write(pt.csv_row() + "\n")
            fh.flush()
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_bounds(args) -> None:
    kind, sweep = parse_channel_sweep(args.channel)
    rate = args.k / args.n
    rows = ["x_value,lower,upper,r_star"]
    for x in sweep:
        rep = analysis.ber_bounds(args.n, args.k, args.rho, make_channel(kind, x, rate), args.method)
        rows.append(f"{x:.10g},{rep.lower:.10g},{rep.upper:.10g},{rep.r_star}")
    _emit(args.out, "\n".join(rows) + "\n")


def cmd_de(args) -> None:
    rows = ["alpha,beta,iters"]
    for a in parse_sweep(args.alpha):
        tr = analysis.de_bec(args.n, args.k, args.rho, a, args.tol, args.max_iter)
        rows.append(f"{a:.10g},{tr.beta:.10g},{tr.iterations}")
    _emit(args.out, "\n".join(rows) + "\n")


def cmd_capacity(args) -> None:
    kind, sweep = parse_channel_sweep(args.channel)
    for x in sweep:
        print(f"{make_channel(kind, x, args.rate).capacity():.12g}")


def _ensemble_args(p, need_code=True):
    p.add_argument("--n", type=int, required=need_code, help="code length")
    p.add_argument("--k", type=int, required=need_code, help="dimension")
    p.add_argument("--rho", type=float, required=need_code, help="density of P")


def _sc_file_args(p):
    p.add_argument("--matrix", required=True, help="parity-generator matrix P")
    p.add_argument("--layers", nargs="+", help="split layers P0..Pm; selects SC mode")
    p.add_argument("--L", type=int, default=1, help="number of coupled layers (SC mode)")
    p.add_argument("--mode", choices=(TERMINATED, TAIL_BITING), default=TERMINATED)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog=PROG, description="LDGM and spatially coupled LDGM code workbench")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="sample a parity-generator matrix P")
    _ensemble_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("split", help="split P into layers P0..Pm")
    p.add_argument("--matrix", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--out", required=True, help="output directory (files P0.txt..Pm.txt)")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("encode", help="encode a 0/1 text file")
    _sc_file_args(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode one frame of channel LLRs")
    _sc_file_args(p)
    p.add_argument("--in", dest="input", required=True, help="whitespace-separated LLRs in transmission order")
    p.add_argument("--out")
    p.add_argument("--i-max", type=int, default=50)
    p.add_argument("--j-max", type=int, default=18)
    p.add_argument("--d", type=int, default=None, help="window delay (default 2m)")
    p.add_argument("--eps", type=float, default=ENTROPY_EPS)
    p.add_argument("--no-cancel", action="store_true")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="Monte Carlo BER/FER sweep, CSV out")
    _ensemble_args(p)
    p.add_argument("--channel", required=True, help="e.g. awgn-ebn0:1:3:0.25")
    p.add_argument("--m", type=int, default=None, help="coupling memory; omit for a block code")
    p.add_argument("--L", type=int, default=1)
    p.add_argument("--mode", choices=(TERMINATED, TAIL_BITING), default=TERMINATED)
    p.add_argument("--code-seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--matrix", help="load P from a file instead of sampling it")
    p.add_argument("--seed", type=int, default=0, help="master noise seed")
    p.add_argument("--min-frame-errors", type=int, default=100)
    p.add_argument("--max-frames", type=int, default=1_000_000)
    p.add_argument("--i-max", type=int, default=50)
    p.add_argument("--j-max", type=int, default=18)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--eps", type=float, default=ENTROPY_EPS)
    p.add_argument("--no-cancel", action="store_true")
    p.add_argument("--random-data", action="store_true", help="random information words instead of all-zero")
    p.add_argument("--out")
    p.add_argument("--json-meta", help="write the resolved config as JSON here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bounds", help="ensemble MAP BER bounds, CSV out")
    _ensemble_args(p)
    p.add_argument("--channel", required=True)
    p.add_argument("--method", choices=(analysis.EXACT_PEP, analysis.BHATTACHARYYA), default=analysis.EXACT_PEP)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("de", help="BEC density evolution, CSV out")
    _ensemble_args(p)
    p.add_argument("--alpha", required=True, help="erasure probability or sweep")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_de)

    p = sub.add_parser("capacity", help="channel capacity in bits per use")
    p.add_argument("channel")
    p.add_argument("--rate", type=float, default=None, help="code rate for awgn-ebn0")
    p.set_defaults(func=cmd_capacity)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as e:
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"{PROG} {args.cmd}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
