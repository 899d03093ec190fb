"""Systematic convolutional (spatially coupled) LDGM codes.

Layer ``t`` of the coupled graph holds an ``=`` node for ``u(t)``, a ``+``
node for ``p(t)``, and ``m + 1`` nodes ``P_l`` that map ``u(t)`` to the partial
parities ``w(t, l) = u(t) P_l``.  The ``+`` node of layer ``tau`` enforces
``p(tau) = sum_l w(tau - l, l)``.  Each ``P_l`` node is a soft-in soft-out
LDGM decoder; one visit runs a single BP pass over its edges while keeping its
internal messages between visits.  The ``m + 1`` nodes of a layer never talk to
each other directly, so a layer updates them together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit, xlogy

from .block import BlockCode, DecodeOutcome, TannerGraph, _T_MAX
from .channels import LLR_MAX
from .ensemble import (TAIL_BITING, TERMINATED, CouplingParams, SparseBitMatrix, build_sc_parity_check,
                       sc_frame_layout, split_matrix)

ENTROPY_EPS = 1e-5


@dataclass(frozen=True)
class ScCode:
    base: BlockCode
    layers: tuple[SparseBitMatrix, ...]
    coupling: CouplingParams
    layer_graph: TannerGraph = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.layers) != self.coupling.m + 1:
            raise ValueError(f"need {self.coupling.m + 1} layers, got {len(self.layers)}")
        merged = self.layers[0]
        for Pl in self.layers[1:]:
            merged = merged.xor(Pl)
        if merged != self.base.P:
            raise ValueError("layers do not XOR back to the base matrix")
        k, r = self.base.k, self.base.n - self.base.k
        var, chk = [], []
        for ell, Pl in enumerate(self.layers):
            pr, pc = Pl.coo()
            var.append(ell * k + pr)
            chk.append(ell * r + pc)
        g = TannerGraph((self.coupling.m + 1) * k, (self.coupling.m + 1) * r,
                        np.concatenate(var), np.concatenate(chk))
        object.__setattr__(self, "layer_graph", g)

    @classmethod
    def from_block(cls, base: BlockCode, coupling: CouplingParams) -> ScCode:
        return cls(base, tuple(split_matrix(base.P, coupling)), coupling)

    @property
    def k(self) -> int:
        return self.base.k

    @property
    def r(self) -> int:
        return self.base.n - self.base.k

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def info_length(self) -> int:
        return self.k * self.coupling.L

    @property
    def length(self) -> int:
        """Number of transmitted bits per frame."""
        L, m = self.coupling.L, self.coupling.m
        if self.coupling.mode == TAIL_BITING:
            return self.n * L
        return self.n * L + m * self.r

    @property
    def rate(self) -> float:
        return self.info_length / self.length

    @property
    def n_parity_frames(self) -> int:
        L, m = self.coupling.L, self.coupling.m
        return L if self.coupling.mode == TAIL_BITING else L + m

    def parity_check(self) -> SparseBitMatrix:
        return build_sc_parity_check(self.layers, self.coupling)

    def layout(self) -> tuple[np.ndarray, np.ndarray]:
        return sc_frame_layout(self.k, self.r, self.coupling)

    def source(self, tau: int, ell: int) -> int | None:
        """Layer whose ``P_ell`` node feeds the ``+`` node of layer ``tau`` (None if absent)."""
        s = tau - ell
        if self.coupling.mode == TAIL_BITING:
            return s % self.coupling.L
        return s if 0 <= s < self.coupling.L else None

    def as_block_code(self) -> tuple[BlockCode, np.ndarray]:
        """The whole coupled code as one systematic LDGM code.

        Returns ``(code, perm)`` with ``word[perm]`` reordering a transmitted
        word into ``(u(0..L-1), p(0..))`` order.
        """
        k, r, L = self.k, self.r, self.coupling.L
        rows, cols = [], []
        for ell, Pl in enumerate(self.layers):
            pr, pc = Pl.coo()
            for t in range(L):
                tau = t + ell
                if self.coupling.mode == TAIL_BITING:
                    tau %= L
                rows.append(t * k + pr)
                cols.append(tau * r + pc)
        big = SparseBitMatrix.from_coo(k * L, r * self.n_parity_frames, np.concatenate(rows), np.concatenate(cols))
        info_start, parity_start = self.layout()
        perm = np.concatenate([(info_start[:, None] + np.arange(k)).ravel(),
                               (parity_start[:, None] + np.arange(r)).ravel()])
        return BlockCode(big), perm


def encode_sc(u: np.ndarray, code: ScCode) -> np.ndarray:
    """Encode ``k L`` information bits into sub-frames emitted in time order.

    Terminated codes append ``m`` parity-only tail sub-frames (the zero
    information bits of the tail are not sent).  A 2-D ``u`` encodes one frame
    per row.
    """
    u = np.asarray(u, dtype=np.uint8)
    single = u.ndim == 1
    if single:
        u = u[None, :]
    if u.shape[1] != code.info_length:
        raise ValueError(f"information length {u.shape[1]} != kL={code.info_length}")
    B, k, r, L = u.shape[0], code.k, code.r, code.coupling.L
    U = u.reshape(B, L, k)
    par = np.zeros((B, code.n_parity_frames, r), dtype=np.uint8)
    for ell, Pl in enumerate(code.layers):
        W = Pl.left_mul(U.reshape(B * L, k)).reshape(B, L, r)
        for t in range(L):
            tau = (t + ell) % L if code.coupling.mode == TAIL_BITING else t + ell
            par[:, tau] ^= W[:, t]
    out = np.empty((B, code.length), dtype=np.uint8)
    info_start, parity_start = code.layout()
    for t in range(L):
        out[:, info_start[t]:info_start[t] + k] = U[:, t]
    for tau in range(code.n_parity_frames):
        out[:, parity_start[tau]:parity_start[tau] + r] = par[:, tau]
    return out[0] if single else out


def entropy_stop(app: np.ndarray, eps: float = ENTROPY_EPS) -> bool:
    """True when the mean binary entropy of the bit posteriors is below ``eps``."""
    return mean_bit_entropy(app) < eps


def mean_bit_entropy(app: np.ndarray) -> float:
    p = expit(-np.abs(np.asarray(app, dtype=float)))
    h = -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / np.log(2.0)
    return float(np.mean(h))


def _boxplus_others(x: np.ndarray) -> np.ndarray:
    """For each row of ``x`` (ports x bits), the tanh-rule combination of all other rows."""
    t = np.tanh(0.5 * x)
    zero = np.abs(x) < 1e-12
    t[zero] = 0.0
    with np.errstate(divide="ignore"):
        lg = np.where(zero, 0.0, np.log(np.abs(t)))
    neg = t < 0.0
    z_o = zero.sum(axis=0) - zero
    n_o = neg.sum(axis=0) - neg
    s_o = lg.sum(axis=0) - lg
    prod = np.minimum(np.exp(s_o), _T_MAX)
    out = 2.0 * np.arctanh(prod) * np.where(n_o % 2 == 1, -1.0, 1.0)
    out[z_o > 0] = 0.0
    return np.clip(out, -LLR_MAX, LLR_MAX)


def _split_llr(llr, code: ScCode) -> tuple[np.ndarray, np.ndarray]:
    k, r, L = code.k, code.r, code.coupling.L
    if isinstance(llr, np.ndarray) and llr.ndim == 1:
        if llr.size != code.length:
            raise ValueError(f"LLR length {llr.size} != frame length {code.length}")
        info_start, parity_start = code.layout()
        ch_u = np.stack([llr[s:s + k] for s in info_start])
        ch_p = np.stack([llr[s:s + r] for s in parity_start])
        return ch_u.astype(float), ch_p.astype(float)
    layers = [np.asarray(x, dtype=float) for x in llr]
    if len(layers) != code.n_parity_frames:
        raise ValueError(f"expected {code.n_parity_frames} sub-frames, got {len(layers)}")
    ch_u = np.stack([layers[t][:k] for t in range(L)])
    ch_p = np.stack([layers[t][k:] if t < L else layers[t] for t in range(len(layers))])
    if ch_p.shape[1] != r:
        raise ValueError("sub-frame lengths do not match the code")
    return ch_u, ch_p


class _Window:
    """Message state of the sliding-window decoder for one frame."""

    def __init__(self, code: ScCode, ch_u: np.ndarray, ch_p: np.ndarray):
        self.code = code
        L, m, k, r = code.coupling.L, code.coupling.m, code.k, code.r
        self.ch_u = ch_u
        self.ch_p = ch_p
        self.a = np.zeros((L, m + 1, k))
        self.b = np.zeros((L, m + 1, k))
        self.c = np.zeros((L, m + 1, r))
        self.e = np.zeros((L, m + 1, r))
        self.inner = np.zeros((L, code.layer_graph.n_edges, 1))
        self.live = np.zeros(L, dtype=bool)      # initialised and not cancelled
        self.cancelled = np.zeros(L, dtype=bool)

    def init_layer(self, s: int) -> None:
        if s < self.code.coupling.L:
            self.live[s] = not self.cancelled[s]

    def plus(self, tau: int) -> None:
        code, m = self.code, self.code.coupling.m
        ports, srcs = [self.ch_p[tau]], []
        for ell in range(m + 1):
            s = code.source(tau, ell)
            if s is None or self.cancelled[s]:
                continue
            # layers not yet in the window stay erased (c == 0)
            ports.append(self.c[s, ell] if self.live[s] else np.zeros(code.r))
            srcs.append((s, ell))
        if not srcs:
            return
        out = _boxplus_others(np.stack(ports))
        for row, (s, ell) in enumerate(srcs, start=1):
            if self.live[s]:
                self.e[s, ell] = out[row]

    def equal(self, s: int) -> None:
        app = self.ch_u[s] + self.b[s].sum(axis=0)
        self.a[s] = app - self.b[s]

    def p_nodes(self, s: int) -> None:
        g = self.code.layer_graph
        v2c, _ = g.var_update(self.inner[s], self.a[s].reshape(-1, 1))
        self.inner[s], c2h = g.check_update(v2c, self.e[s].reshape(-1, 1))
        self.b[s] = (g._v_sum @ self.inner[s]).reshape(self.b[s].shape)
        self.c[s] = c2h.reshape(self.c[s].shape)

    def forward(self, s: int) -> None:
        self.plus(s)
        if s < self.code.coupling.L:
            self.p_nodes(s)
            self.equal(s)
            self.p_nodes(s)

    def backward(self, s: int) -> None:
        if s < self.code.coupling.L:
            self.equal(s)
            self.p_nodes(s)
        self.plus(s)
        if s < self.code.coupling.L:
            self.p_nodes(s)

    def app(self, t: int) -> np.ndarray:
        return self.ch_u[t] + self.b[t].sum(axis=0)

    def cancel(self, t: int, u_hat: np.ndarray) -> None:
        """Treat ``u(t)`` as known: fold its parity contribution into later channel LLRs."""
        code = self.code
        L = code.coupling.L
        for ell in range(1, code.coupling.m + 1):
            tau = t + ell
            if code.coupling.mode == TAIL_BITING:
                if tau >= L:
                    continue
            elif tau >= code.n_parity_frames:
                continue
            w = code.layers[ell].left_mul(u_hat)
            self.ch_p[tau] = np.where(w == 1, -self.ch_p[tau], self.ch_p[tau])
        self.cancelled[t] = True
        self.live[t] = False


def decode_sc(llr, code: ScCode, d: int | None = None, j_max: int = 18, eps: float = ENTROPY_EPS,
              cancel: bool = True, stall: bool = False) -> list[DecodeOutcome]:
    """Sliding-window decoding with delay ``d`` (default ``2m``).

    ``llr`` is either the flat transmitted-order LLR word or a sequence of
    per-sub-frame LLR vectors.  Returns one :class:`DecodeOutcome` per
    information sub-frame; ``converged`` records whether the entropy stopping
    rule fired.

    With ``stall`` set, the iterations for a sub-frame also end once its mean
    bit entropy drops by less than ``eps`` between global iterations.  Bits
    with empty rows in ``P`` keep the entropy above any small ``eps``, so
    without this the entropy rule alone rarely ends a sub-frame early.
    ``cancel=False`` keeps decided sub-frames in the graph with frozen
    messages instead of folding their decisions into the channel LLRs.
    """
    m, L = code.coupling.m, code.coupling.L
    if d is None:
        d = 2 * m
    if d < 0:
        raise ValueError("window delay d must be >= 0")
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    ch_u, ch_p = _split_llr(llr, code)
    last = code.n_parity_frames - 1
    if code.coupling.mode == TAIL_BITING:
        last = L - 1
    win = _Window(code, ch_u, ch_p)
    for s in range(min(d, last + 1)):
        win.init_layer(s)
    outcomes = []
    for t in range(L):
        hi = min(t + d, last)
        win.init_layer(hi)
        converged = False
        j = 0
        h_prev = np.inf
        for j in range(1, j_max + 1):
            for s in range(t, hi + 1):
                win.forward(s)
            for s in range(hi, t - 1, -1):
                win.backward(s)
            h = mean_bit_entropy(win.app(t))
            if h < eps:
                converged = True
                break
            if stall and h_prev - h < eps:
                break
            h_prev = h
        app = win.app(t)
        u_hat = (app < 0).astype(np.uint8)
        outcomes.append(DecodeOutcome(u_hat, app, j, converged))
        if cancel:
            win.cancel(t, u_hat)
    return outcomes


def decoded_bits(outcomes: Sequence[DecodeOutcome]) -> np.ndarray:
    return np.concatenate([o.bits for o in outcomes])
