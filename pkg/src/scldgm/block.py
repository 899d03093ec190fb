"""Systematic LDGM block codes: encoder and sum-product decoder.

The decoder runs on the normal graph of ``G = [I P]``: one ``=`` node per
information bit (half-edge: its channel LLR) and one ``+`` node per parity bit
(half-edge: the parity bit's channel LLR), with a full edge for every one in
``P``.  Messages are LLRs.  Each iteration updates all ``=`` nodes and then all
``+`` nodes.

Kernels work on message arrays of shape ``(edges, batch)`` so that several
frames can be decoded with one pass of vectorised numpy work.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .channels import LLR_MAX
from .ensemble import EnsembleParams, SparseBitMatrix, build_block_parity_check, gen_parity_matrix

ERASURE_EPS = 1e-12
_T_MAX = np.tanh(LLR_MAX / 2.0)


class TannerGraph:
    """Edge bookkeeping for a bipartite graph between ``k`` variables and ``r`` checks.

    Edge ``e`` joins variable ``var[e]`` and check ``chk[e]``.  Every check
    also owns one half-edge (its parity bit); variables take an intrinsic LLR.
    """

    def __init__(self, k: int, r: int, var: np.ndarray, chk: np.ndarray):
        self.k, self.r = k, r
        self.var = np.asarray(var, dtype=np.int64)
        self.chk = np.asarray(chk, dtype=np.int64)
        e = self.var.size
        ones = np.ones(e)
        idx = np.arange(e)
        self._v_sum = sp.csr_matrix((ones, (self.var, idx)), shape=(k, e))
        self._c_sum = sp.csr_matrix((ones, (self.chk, idx)), shape=(r, e))

    @classmethod
    def from_matrix(cls, P: SparseBitMatrix) -> TannerGraph:
        var, chk = P.coo()
        return cls(P.rows, P.cols, var, chk)

    @property
    def n_edges(self) -> int:
        return self.var.size

    def var_update(self, c2v: np.ndarray, intrinsic: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``=`` node rule. Returns ``(v2c, total)`` where ``total`` is the a-posteriori LLR."""
        total = intrinsic + self._v_sum @ c2v
        return total[self.var] - c2v, total

    def check_update(self, v2c: np.ndarray, half: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``+`` node tanh rule.

        Returns ``(c2v, c2h)``: messages back along every full edge and the
        extrinsic message to each check's half-edge.
        """
        t_e = _tanh_half(v2c)
        t_h = _tanh_half(half)
        zero_e = t_e == 0.0
        zero_h = t_h == 0.0
        with np.errstate(divide="ignore"):
            log_e = np.where(zero_e, 0.0, np.log(np.abs(t_e)))
            log_h = np.where(zero_h, 0.0, np.log(np.abs(t_h)))
        neg_e = t_e < 0.0
        neg_h = t_h < 0.0
        # per-check totals over full edges only
        z_c = self._c_sum @ zero_e.astype(float)
        n_c = self._c_sum @ neg_e.astype(float)
        s_c = self._c_sum @ log_e

        # message to the half-edge: product over all full edges
        c2h = _from_product(z_c, n_c, s_c)

        # message along edge e: product over the other full edges and the half-edge
        z_all = z_c + zero_h
        n_all = n_c + neg_h
        s_all = s_c + log_h
        z_o = z_all[self.chk] - zero_e
        n_o = n_all[self.chk] - neg_e
        s_o = s_all[self.chk] - log_e
        c2v = _from_product(z_o, n_o, s_o)
        return c2v, c2h

    def syndrome_ok(self, u_hat: np.ndarray, p_hat: np.ndarray) -> np.ndarray:
        """Per-frame flag: every check satisfied by the hard decisions."""
        par = (self._c_sum @ u_hat[self.var].astype(float)).astype(np.int64) % 2
        return np.all(par == p_hat, axis=0)


def _tanh_half(x: np.ndarray) -> np.ndarray:
    t = np.tanh(0.5 * x)
    t[np.abs(x) < ERASURE_EPS] = 0.0
    return t


def _from_product(zeros: np.ndarray, negs: np.ndarray, logmag: np.ndarray) -> np.ndarray:
    prod = np.exp(logmag)
    prod = np.minimum(prod, _T_MAX)
    sign = 1.0 - 2.0 * (np.rint(negs).astype(np.int64) % 2)
    out = 2.0 * np.arctanh(prod) * sign
    out[zeros > 0.5] = 0.0
    return np.clip(out, -LLR_MAX, LLR_MAX)


@dataclass(frozen=True)
class BlockCode:
    """A sampled systematic LDGM code ``G = [I P]``."""

    P: SparseBitMatrix
    params: EnsembleParams | None = None
    graph: TannerGraph = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.params is not None and self.P.shape != (self.params.k, self.params.n - self.params.k):
            raise ValueError(f"P has shape {self.P.shape}, params need {(self.params.k, self.params.n - self.params.k)}")
        object.__setattr__(self, "graph", TannerGraph.from_matrix(self.P))

    @classmethod
    def sample(cls, params: EnsembleParams) -> BlockCode:
        return cls(gen_parity_matrix(params), params)

    @property
    def k(self) -> int:
        return self.P.rows

    @property
    def n(self) -> int:
        return self.P.rows + self.P.cols

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def adjacency(self) -> list[np.ndarray]:
        """Information bits feeding each parity bit."""
        return self.P.column_support()

    def parity_check(self) -> SparseBitMatrix:
        return build_block_parity_check(self.P)


@dataclass
class DecodeOutcome:
    bits: np.ndarray
    app: np.ndarray
    iterations: int
    converged: bool


def encode_block(u: np.ndarray, code: BlockCode) -> np.ndarray:
    """Return ``(u, uP)``; a 2-D ``u`` encodes one frame per row."""
    u = np.asarray(u, dtype=np.uint8)
    if u.shape[-1] != code.k:
        raise ValueError(f"information length {u.shape[-1]} != k={code.k}")
    return np.concatenate([u, code.P.left_mul(u)], axis=-1)


def _as_batch(x: np.ndarray, width: int, name: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != width:
        raise ValueError(f"{name} has length {x.shape[1]}, expected {width}")
    return x.T.copy(), single


def bp_decode(graph: TannerGraph, ch_info: np.ndarray, ch_par: np.ndarray, prior: np.ndarray | None,
              i_max: int):
    """Flooding BP on a batch; all arrays are ``(len, batch)``.

    Returns ``(app_info, ext_info, ext_par, iterations, converged)``; outputs of
    a frame freeze at the iteration where its hard decision satisfies every
    check with no undetermined (zero-LLR) bit.
    """
    if i_max < 1:
        raise ValueError("i_max must be >= 1")
    batch = ch_info.shape[1]
    intrinsic = ch_info if prior is None else ch_info + prior
    c2v = np.zeros((graph.n_edges, batch))
    app = np.empty_like(ch_info)
    ext_info = np.empty_like(ch_info)
    ext_par = np.empty_like(ch_par)
    iters = np.full(batch, i_max, dtype=np.int64)
    conv = np.zeros(batch, dtype=bool)
    active = np.arange(batch)
    for it in range(1, i_max + 1):
        v2c, _ = graph.var_update(c2v, intrinsic)
        c2v, c2h = graph.check_update(v2c, ch_par)
        a_info = intrinsic + graph._v_sum @ c2v
        a_par = ch_par + c2h
        u_hat = (a_info < 0).astype(np.uint8)
        p_hat = (a_par < 0).astype(np.uint8)
        ok = graph.syndrome_ok(u_hat, p_hat)
        ok &= np.all(a_info != 0.0, axis=0) & np.all(a_par != 0.0, axis=0)
        done = ok | (it == i_max)
        if done.any():
            idx = active[done]
            app[:, idx] = a_info[:, done]
            ext_info[:, idx] = a_info[:, done] - intrinsic[:, done]
            ext_par[:, idx] = c2h[:, done]
            iters[idx] = it
            conv[idx] = ok[done]
            keep = ~done
            if not keep.any():
                break
            active = active[keep]
            c2v = c2v[:, keep]
            intrinsic = intrinsic[:, keep]
            ch_par = ch_par[:, keep]
    return app, ext_info, ext_par, iters, conv


def decode_block_batch(llr: np.ndarray, code: BlockCode, i_max: int = 50,
                       prior: np.ndarray | None = None):
    """Decode a ``(batch, n)`` LLR array. Returns ``(bits, app, iterations, converged)``."""
    llr_t, _ = _as_batch(llr, code.n, "llr")
    pr = None if prior is None else _as_batch(prior, code.k, "prior")[0]
    app, _, _, iters, conv = bp_decode(code.graph, llr_t[:code.k], llr_t[code.k:], pr, i_max)
    return (app.T < 0).astype(np.uint8), app.T, iters, conv


def decode_block(llr: np.ndarray, code: BlockCode, i_max: int = 50) -> DecodeOutcome:
    """Iterative BP decoding of one frame of channel LLRs (length ``n``)."""
    llr_t, _ = _as_batch(llr, code.n, "llr")
    app, _, _, iters, conv = bp_decode(code.graph, llr_t[:code.k], llr_t[code.k:], None, i_max)
    app = app[:, 0]
    return DecodeOutcome((app < 0).astype(np.uint8), app, int(iters[0]), bool(conv[0]))


def decode_block_soft(llr: np.ndarray, code: BlockCode, prior: np.ndarray, i_max: int = 50):
    """BP with an extra a-priori LLR on every information bit.

    Returns ``(outcome, ext_info, ext_parity)``; extrinsic outputs exclude both
    the port's channel LLR and its prior.
    """
    llr_t, _ = _as_batch(llr, code.n, "llr")
    pr, _ = _as_batch(prior, code.k, "prior")
    app, ext_i, ext_p, iters, conv = bp_decode(code.graph, llr_t[:code.k], llr_t[code.k:], pr, i_max)
    app = app[:, 0]
    out = DecodeOutcome((app < 0).astype(np.uint8), app, int(iters[0]), bool(conv[0]))
    return out, ext_i[:, 0], ext_p[:, 0]
