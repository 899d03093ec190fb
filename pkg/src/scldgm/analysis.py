"""Ensemble analysis: weight enumerator, MAP BER bounds, error exponents, BEC density evolution.

Combinatorial sums are carried in natural logs and combined with
log-sum-exp.  Exponents (``E_0``, ``E_r``, rates) are in bits, matching the
``2^{-n E_r}`` form of the ensemble bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, log_ndtr, logsumexp, xlog1py, xlogy
from scipy.stats import binom

from .channels import BEC, BSC, BiAwgn, ChannelModel

PROB_FLOOR = 1e-300
EXACT_PEP = "exact_pep"
BHATTACHARYYA = "bhattacharyya"


def rho_w(rho: float, w: int) -> float:
    """Probability that a parity bit is 1 given an information word of weight ``w``."""
    if w < 1:
        raise ValueError("w must be >= 1")
    if not 0.0 <= rho <= 0.5:
        raise ValueError(f"rho must lie in [0, 1/2], got {rho}")
    if rho == 0.5:
        return 0.5
    return -0.5 * math.expm1(w * math.log1p(-2.0 * rho))


def _rho_w_array(rho: float, w: np.ndarray) -> np.ndarray:
    if rho == 0.5:
        return np.full(w.shape, 0.5)
    return -0.5 * np.expm1(w * np.log1p(-2.0 * rho))


def _log_comb(a, b):
    return gammaln(np.asarray(a) + 1.0) - gammaln(np.asarray(b) + 1.0) - gammaln(np.asarray(a) - np.asarray(b) + 1.0)


def irwef_coeff(n: int, k: int, rho: float, i: int, j: int) -> float:
    """``log A_ij``: log of the expected number of codewords with input weight ``i``, parity weight ``j``."""
    r = n - k
    if not 1 <= i <= k:
        raise ValueError(f"information weight i={i} outside [1, {k}]")
    if not 0 <= j <= r:
        raise ValueError(f"parity weight j={j} outside [0, {r}]")
    p = float(_rho_w_array(rho, np.array(float(i))))
    return float(_log_comb(k, i) + _log_comb(r, j) + xlogy(j, p) + xlog1py(r - j, -p))


@lru_cache(maxsize=16)
def irwef_log_table(n: int, k: int, rho: float) -> np.ndarray:
    """``log A_ij`` for ``i = 1..k`` (rows) and ``j = 0..n-k`` (columns)."""
    r = n - k
    i = np.arange(1, k + 1, dtype=float)[:, None]
    j = np.arange(0, r + 1, dtype=float)[None, :]
    p = _rho_w_array(rho, i)
    out = _log_comb(k, i) + _log_comb(r, j) + xlogy(j, p) + xlog1py(r - j, -p)
    out.setflags(write=False)
    return out


def log_pep(ch: ChannelModel, d, method: str = EXACT_PEP) -> np.ndarray:
    """Natural log of the pairwise error probability against a weight-``d`` codeword."""
    d = np.asarray(d)
    if np.any(d < 1):
        raise ValueError("PEP is defined for d >= 1")
    d = d.astype(float)
    if method == BHATTACHARYYA:
        z = ch.bhattacharyya()
        with np.errstate(divide="ignore"):
            return d * np.log(z) if z > 0 else np.full(d.shape, -np.inf)
    if method != EXACT_PEP:
        raise ValueError(f"unknown PEP method {method!r}")
    if isinstance(ch, BiAwgn):
        return log_ndtr(-np.sqrt(d) / ch.sigma)
    if isinstance(ch, BEC):
        with np.errstate(divide="ignore"):
            return d * np.log(ch.alpha) if ch.alpha > 0 else np.full(d.shape, -np.inf)
    if isinstance(ch, BSC):
        if ch.p == 0.0:
            return np.full(d.shape, -np.inf)
        # ties (i = d/2) count as errors
        return binom.logsf(np.ceil(d / 2.0) - 1.0, d, ch.p)
    raise TypeError(f"unsupported channel {ch!r}")


def pep(ch: ChannelModel, d, method: str = EXACT_PEP):
    out = np.exp(log_pep(ch, d, method))
    return float(out) if out.ndim == 0 else out


@dataclass
class BoundsReport:
    channel: ChannelModel
    upper: float | None = None
    lower: float | None = None
    r_star: int | None = None
    method: str = EXACT_PEP


def _floor(logv: float) -> float:
    return max(math.exp(logv) if logv > -745.0 else 0.0, PROB_FLOOR)


def _upper_log_terms(n: int, k: int, rho: float, ch: ChannelModel, method: str) -> np.ndarray:
    """Log of the bound's bracket for every ``r* = 0..k``."""
    logA = irwef_log_table(n, k, rho)
    r = n - k
    lp = log_pep(ch, np.arange(1, n + 1), method)
    i = np.arange(1, k + 1)
    # inner_i = log sum_j A_ij PEP(i + j); row i uses lp[i-1 : i+r]
    idx = (i - 1)[:, None] + np.arange(r + 1)[None, :]
    inner = logsumexp(logA + lp[idx], axis=1)
    with np.errstate(divide="ignore"):
        first = np.log(i / k) + inner
    # S1(r*) sums i = 1..min(2r*, k)
    cum = np.concatenate([[-np.inf], np.logaddexp.accumulate(first)])
    rs = np.arange(k + 1)
    s1 = cum[np.minimum(2 * rs, k)]

    lp1 = float(log_pep(ch, 1, EXACT_PEP))
    p1 = math.exp(lp1)
    logB = binom.logpmf(np.arange(k + 1), k, p1)
    s2 = np.full(k + 1, -np.inf)
    for rstar in range(k):
        ii = np.arange(rstar + 1, k + 1)
        s2[rstar] = logsumexp(np.log(np.minimum(ii + rstar, k) / k) + logB[ii])
    return np.logaddexp(s1, s2)


def ber_upper_bound(n: int, k: int, rho: float, ch: ChannelModel, method: str = EXACT_PEP) -> BoundsReport:
    """Ensemble MAP BER upper bound, minimised over the split point ``r*``.

    ``method='bhattacharyya'`` swaps PEP(d) for ``z^d`` in the first sum; the
    second sum always uses the exact PEP(1).
    """
    terms = _upper_log_terms(n, k, rho, ch, method)
    r_star = int(np.argmin(terms))
    return BoundsReport(ch, upper=_floor(float(terms[r_star])), r_star=r_star, method=method)


def lower_bound_weights(n: int, k: int, rho: float) -> np.ndarray:
    """``log P_W(w + 1)`` for ``w = 0..n-k``: a generator row has weight ``w + 1``."""
    r = n - k
    return binom.logpmf(np.arange(r + 1), r, rho)


def ber_lower_bound(n: int, k: int, rho: float, ch: ChannelModel) -> BoundsReport:
    r = n - k
    val = logsumexp(lower_bound_weights(n, k, rho) + log_pep(ch, np.arange(1, r + 2)))
    return BoundsReport(ch, lower=_floor(float(val)))


def ber_bounds(n: int, k: int, rho: float, ch: ChannelModel, method: str = EXACT_PEP) -> BoundsReport:
    up = ber_upper_bound(n, k, rho, ch, method)
    up.lower = ber_lower_bound(n, k, rho, ch).lower
    return up


# -- error exponents ---------------------------------------------------------

GAMMA_STEP = 1e-3
GOLDEN_TOL = 1e-6


def error_exponent(ch: ChannelModel, gamma: float) -> float:
    """Gallager's ``E_0(gamma)`` for uniform input, in bits."""
    return ch.e0(gamma)


@lru_cache(maxsize=32)
def _e0_grid(ch: ChannelModel) -> tuple[np.ndarray, np.ndarray]:
    g = np.linspace(0.0, 1.0, int(round(1.0 / GAMMA_STEP)) + 1)
    return g, np.array([ch.e0(x) for x in g])


def _golden_max(f, a: float, b: float, tol: float = GOLDEN_TOL) -> float:
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def random_coding_exponent(ch: ChannelModel, rate: float) -> tuple[float, float]:
    """``E_r(R) = max_{0<=g<=1} E_0(g) - g R``; returns ``(E_r, argmax g)``.

    A grid scan locates the peak and golden-section search refines it; the
    objective is concave in ``g``.
    """
    g, e0 = _e0_grid(ch)
    obj = e0 - g * rate
    best = int(np.argmax(obj))
    lo, hi = g[max(best - 1, 0)], g[min(best + 1, g.size - 1)]
    f = lambda x: ch.e0(x) - x * rate
    x = _golden_max(f, lo, hi)
    val = f(x)
    if val < obj[best]:
        x, val = g[best], float(obj[best])
    return max(val, 0.0), float(x)


def rate_tilde(rate: float, rho: float, T) -> np.ndarray:
    """Effective rate ``(1-R) log2(1 + (1-2 rho)^T) + R`` seen by words of weight >= T."""
    T = np.asarray(T, dtype=float)
    return (1.0 - rate) * np.log2(1.0 + (1.0 - 2.0 * rho) ** T) + rate


@dataclass
class ExponentReport:
    gammas: np.ndarray
    e0: np.ndarray
    rate: float
    er: float
    gamma_star: float
    T: np.ndarray
    rate_tilde: np.ndarray
    er_tilde: np.ndarray
    bound: np.ndarray
    T_star: int
    bound_min: float
    extra: dict = field(default_factory=dict)


def er_bound(n: int, k: int, rho: float, ch: ChannelModel) -> ExponentReport:
    """Evaluate ``min_T { T/(nR) + 2^{-n E_r(R~(T))} }`` over ``T = 1..k``."""
    R = k / n
    g, e0 = _e0_grid(ch)
    T = np.arange(1, k + 1)
    rt = rate_tilde(R, rho, T)
    er_t = np.max(e0[None, :] - g[None, :] * rt[:, None], axis=1)
    er_t = np.maximum(er_t, 0.0)
    best = int(np.argmin(T / (n * R) + np.exp2(-n * er_t)))
    er_t[best] = random_coding_exponent(ch, float(rt[best]))[0]
    bound = T / (n * R) + np.exp2(-n * er_t)
    best = int(np.argmin(bound))
    er, gstar = random_coding_exponent(ch, R)
    return ExponentReport(g, e0, R, er, gstar, T, rt, er_t, bound, int(T[best]), float(bound[best]))


# -- density evolution --------------------------------------------------------

@dataclass
class DeTrace:
    alpha: float
    eps: list[float]
    eta: list[float]
    eta_star: float
    beta: float

    @property
    def iterations(self) -> int:
        return len(self.eps)


def de_bec(n: int, k: int, rho: float, alpha: float, tol: float = 1e-12, max_iter: int = 100_000) -> DeTrace:
    """Erasure-probability recursion of BP on the ensemble over BEC(alpha)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    r = n - k
    eta = [1.0]
    eps: list[float] = []
    for _ in range(max_iter):
        e = alpha * (1.0 - rho * (1.0 - eta[-1])) ** (r - 1)
        nxt = 1.0 - (1.0 - alpha) * (1.0 - rho * e) ** (k - 1)
        eps.append(e)
        eta.append(nxt)
        if abs(eta[-2] - nxt) < tol:
            break
    eta_star = eta[-1]
    beta = alpha * (1.0 - rho * (1.0 - eta_star)) ** r
    return DeTrace(alpha, eps, eta, eta_star, beta)
