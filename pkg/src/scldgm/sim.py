"""Monte Carlo BER/FER harness.

Trial ``i`` at sweep point ``j`` draws all of its randomness from
``numpy.random.SeedSequence([master_seed, j, i])``, so a trial's outcome does
not depend on which worker runs it or in what order.  A point stops at the
first trial index where the running frame-error count reaches
``min_frame_errors`` (or at ``max_frames``); tallies cover exactly trials
``0..stop``, so chunking and worker count never change the result.

Set ``SCLDGM_WORKERS`` to spread trials over worker processes.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .block import BlockCode, decode_block_batch, encode_block
from .channels import ChannelModel, make_channel
from .ensemble import TERMINATED, CouplingParams, EnsembleParams, read_matrix
from .sc import ENTROPY_EPS, ScCode, decode_sc, encode_sc

WORKERS_ENV = "SCLDGM_WORKERS"
CSV_COLUMNS = ("x", "ber", "fer", "ber_ci", "fer_ci", "frames", "bit_errs", "frame_errs", "seed")
Z95 = 1.959963984540054


@dataclass
class CodeSpec:
    """Block code when ``m`` is None, otherwise an SC chain of ``L`` layers."""

    n: int
    k: int
    rho: float
    seed: int = 0
    m: int | None = None
    L: int = 1
    mode: str = TERMINATED
    split_seed: int = 0
    matrix_path: str | None = None

    def build(self) -> BlockCode | ScCode:
        params = EnsembleParams(self.n, self.k, self.rho, self.seed)
        if self.matrix_path is not None:
            P = read_matrix(self.matrix_path)
            base = BlockCode(P, params)
        else:
            base = BlockCode.sample(params)
        if self.m is None:
            return base
        return ScCode.from_block(base, CouplingParams(self.m, self.L, self.mode, self.split_seed))


@dataclass
class SimConfig:
    code: CodeSpec
    channel: str
    sweep: Sequence[float]
    min_frame_errors: int = 100
    max_frames: int = 1_000_000
    i_max: int = 50
    j_max: int = 18
    d: int | None = None
    eps: float = ENTROPY_EPS
    cancel: bool = True
    master_seed: int = 0
    random_data: bool = False
    out: str | None = None
    chunk: int = 256

    def validate(self) -> None:
        if len(self.sweep) == 0:
            raise ValueError("sweep is empty")
        if self.min_frame_errors < 1:
            raise ValueError("min_frame_errors must be >= 1")
        if self.max_frames < 1:
            raise ValueError("max_frames must be >= 1")
        if self.i_max < 1 or self.j_max < 1:
            raise ValueError("iteration caps must be >= 1")
        c = self.code
        if c.m is not None:
            # CouplingParams raises on a bad mode or L <= m for tail-biting
            CouplingParams(c.m, c.L, c.mode, c.split_seed)
            d = 2 * c.m if self.d is None else self.d
            if d < 0:
                raise ValueError("window delay d must be >= 0")
            if d > c.L + c.m - 1:
                raise ValueError(f"window delay d={d} exceeds the chain (L + m - 1 = {c.L + c.m - 1})")


@dataclass
class PointResult:
    x: float
    frames: int
    bit_errs: int
    frame_errs: int
    bits_per_frame: int
    seed: int
    wall_time: float = field(default=0.0, compare=False)

    @property
    def ber(self) -> float:
        return self.bit_errs / (self.bits_per_frame * self.frames)

    @property
    def fer(self) -> float:
        return self.frame_errs / self.frames

    @property
    def ber_ci(self) -> float:
        return _half_width(self.ber, self.bits_per_frame * self.frames)

    @property
    def fer_ci(self) -> float:
        return _half_width(self.fer, self.frames)

    def csv_row(self) -> str:
        vals = (self.x, self.ber, self.fer, self.ber_ci, self.fer_ci)
        return ",".join([*(f"{v:.10g}" for v in vals), str(self.frames), str(self.bit_errs),
                         str(self.frame_errs), str(self.seed)])


@dataclass
class SimResult:
    config: SimConfig
    rate: float
    points: list[PointResult] = field(default_factory=list)


def _half_width(p: float, n: int) -> float:
    """95% normal-approximation half-width."""
    return Z95 * math.sqrt(p * (1.0 - p) / n)


def trial_rng(master: int, point: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master, point, trial]))


def code_rate(code: BlockCode | ScCode) -> float:
    return code.rate


def channel_at(cfg: SimConfig, x: float, rate: float) -> ChannelModel:
    kind = cfg.channel.strip().lower()
    return make_channel(kind, x, rate)


def _run_trials(code, ch: ChannelModel, cfg: SimConfig, point: int, trials: range) -> np.ndarray:
    """Bit-error count of each trial in ``trials``."""
    is_sc = isinstance(code, ScCode)
    info_len = code.info_length if is_sc else code.k
    length = code.length if is_sc else code.n
    rngs = [trial_rng(cfg.master_seed, point, i) for i in trials]
    if cfg.random_data:
        u = np.stack([g.integers(0, 2, info_len, dtype=np.uint8) for g in rngs])
        c = encode_sc(u, code) if is_sc else encode_block(u, code)
    else:
        u = np.zeros((len(rngs), info_len), dtype=np.uint8)
        c = np.zeros((len(rngs), length), dtype=np.uint8)
    llr = np.stack([ch.transmit_rng(c[i], g) for i, g in enumerate(rngs)])
    if is_sc:
        errs = np.empty(len(rngs), dtype=np.int64)
        for i in range(len(rngs)):
            outs = decode_sc(llr[i], code, cfg.d, cfg.j_max, cfg.eps, cfg.cancel)
            app = np.concatenate([o.app for o in outs])
            errs[i] = _count_errors(app, u[i])
        return errs
    _, app, _, _ = decode_block_batch(llr, code, cfg.i_max)
    return np.array([_count_errors(app[i], u[i]) for i in range(len(rngs))], dtype=np.int64)


def _count_errors(app: np.ndarray, u: np.ndarray) -> int:
    # an undetermined bit (LLR exactly 0) is not a correct decision
    wrong = ((app < 0).astype(np.uint8) != u) | (app == 0.0)
    return int(np.count_nonzero(wrong))


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        w = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    return max(w, 1)


def _chunk_job(args):
    code, ch, cfg, point, start, stop = args
    return _run_trials(code, ch, cfg, point, range(start, stop))


def run_point(code, ch: ChannelModel, cfg: SimConfig, point: int, x: float, pool=None) -> PointResult:
    t0 = time.perf_counter()
    chunk = 1 if isinstance(code, ScCode) else max(cfg.chunk, 1)
    width = 1 if pool is None else _workers()
    bits = code.info_length if isinstance(code, ScCode) else code.k
    done, bit_errs, frame_errs = 0, 0, 0
    while done < cfg.max_frames:
        starts = [done + i * chunk for i in range(width) if done + i * chunk < cfg.max_frames]
        jobs = [(code, ch, cfg, point, s, min(s + chunk, cfg.max_frames)) for s in starts]
        results = list(pool.map(_chunk_job, jobs)) if pool is not None else [_chunk_job(j) for j in jobs]
        errs = np.concatenate(results)
        fe = np.cumsum(errs > 0)
        hit = np.nonzero(frame_errs + fe >= cfg.min_frame_errors)[0]
        if hit.size:
            errs = errs[:hit[0] + 1]
        done += errs.size
        bit_errs += int(errs.sum())
        frame_errs += int(np.count_nonzero(errs))
        if hit.size:
            break
    return PointResult(float(x), done, bit_errs, frame_errs, bits, cfg.master_seed, time.perf_counter() - t0)


def run_sweep(cfg: SimConfig, code: BlockCode | ScCode | None = None) -> Iterator[PointResult]:
    """Yield one :class:`PointResult` per sweep point, in sweep order."""
    cfg.validate()
    if code is None:
        code = cfg.code.build()
    rate = code_rate(code)
    channels = [channel_at(cfg, x, rate) for x in cfg.sweep]
    w = _workers()
    pool = ProcessPoolExecutor(w) if w > 1 else None
    try:
        for j, (x, ch) in enumerate(zip(cfg.sweep, channels)):
            yield run_point(code, ch, cfg, j, x, pool)
    finally:
        if pool is not None:
            pool.shutdown()


def simulate(cfg: SimConfig, code: BlockCode | ScCode | None = None) -> SimResult:
    if code is None:
        cfg.validate()
        code = cfg.code.build()
    res = SimResult(cfg, code_rate(code))
    res.points.extend(run_sweep(cfg, code))
    return res


def csv_header(stamp: str | None = None) -> str:
    if stamp is None:
        stamp = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return f"# generated {stamp}\n" + ",".join(CSV_COLUMNS) + "\n"


def config_meta(cfg: SimConfig, rate: float) -> dict:
    meta = asdict(cfg)
    meta["sweep"] = [float(x) for x in cfg.sweep]
    meta["rate"] = rate
    meta["workers"] = _workers()
    meta["csv_columns"] = list(CSV_COLUMNS)
    return meta
