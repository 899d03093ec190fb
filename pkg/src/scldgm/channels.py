"""Binary-input output-symmetric memoryless channels.

Every channel maps a bit vector to channel LLRs ``log P(y|0)/P(y|1)``
(positive favours 0).  Magnitudes saturate at :data:`LLR_MAX`; a BEC erasure
is exactly ``0``.

Channel-level functionals (capacity, Bhattacharyya parameter, Gallager's
``E_0``) are computed as expectations over the LLR law under bit 0, which is
all a BIOS channel needs.  For the BPSK-AWGN channel that law is Gaussian and
the expectation uses Gauss-Hermite quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.optimize import brentq

LLR_MAX = 30.0
GH_NODES = 200


@lru_cache(maxsize=4)
def _hermite(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.hermite.hermgauss(nodes)
    # Probabilists' form: E[f(Z)] = sum w_i f(sqrt(2) x_i) / sqrt(pi).
    return math.sqrt(2.0) * x, w / math.sqrt(math.pi)


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


class _Bios:
    """Shared functionals; subclasses provide ``llr_law()``."""

    def llr_law(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def expect(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        """``E[fn(lambda)]`` for the channel LLR ``lambda`` given that 0 was sent."""
        vals, weights = self.llr_law()
        with np.errstate(over="ignore", invalid="ignore"):
            f = fn(vals)
        mask = weights > 0
        return float(np.sum(weights[mask] * f[mask]))

    def capacity(self) -> float:
        """Mutual information at uniform input, in bits per channel use."""
        return 1.0 - self.expect(lambda lam: _softplus(-lam) / math.log(2.0))

    def bhattacharyya(self) -> float:
        return self.expect(lambda lam: np.exp(-0.5 * lam))

    def e0(self, gamma: float) -> float:
        """Gallager's ``E_0(gamma)`` at uniform input, in bits."""
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
        s = 1.0 / (1.0 + gamma)
        ln2 = math.log(2.0)
        # With P0 = q 2 sig(lam), P1 = q 2 sig(-lam), q = (P0 + P1)/2, the summand is
        # q * h(lam) for an even h, and sum_y q h(lam) = E[h(lam) | 0 sent].  This
        # stays valid for outputs that bit 0 never produces (BEC, noiseless BSC).
        def h(lam):
            a = s * (ln2 - _softplus(-lam))
            b = s * (ln2 - _softplus(lam))
            return np.exp((1.0 + gamma) * (np.logaddexp(a, b) - ln2))
        return -math.log2(self.expect(h))

    def transmit(self, c: np.ndarray, seed) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return self.transmit_rng(np.asarray(c, dtype=np.uint8), rng)

    def transmit_rng(self, c: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class BEC(_Bios):
    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"BEC erasure probability must lie in [0, 1], got {self.alpha}")

    @property
    def noise(self) -> float:
        return self.alpha

    def llr_law(self):
        return np.array([np.inf, 0.0]), np.array([1.0 - self.alpha, self.alpha])

    def capacity(self) -> float:
        return 1.0 - self.alpha

    def bhattacharyya(self) -> float:
        return self.alpha

    def transmit_rng(self, c, rng):
        erased = rng.random(c.shape) < self.alpha
        return np.where(erased, 0.0, LLR_MAX * (1.0 - 2.0 * c))


@dataclass(frozen=True)
class BSC(_Bios):
    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"BSC crossover probability must lie in [0, 1/2], got {self.p}")

    @property
    def noise(self) -> float:
        return self.p

    @property
    def llr_magnitude(self) -> float:
        if self.p == 0.0:
            return LLR_MAX
        return min(math.log((1.0 - self.p) / self.p), LLR_MAX)

    def llr_law(self):
        if self.p == 0.0:
            return np.array([np.inf]), np.array([1.0])
        lam = math.log((1.0 - self.p) / self.p)
        return np.array([lam, -lam]), np.array([1.0 - self.p, self.p])

    def bhattacharyya(self) -> float:
        return 2.0 * math.sqrt(self.p * (1.0 - self.p))

    def capacity(self) -> float:
        return 1.0 - binary_entropy(self.p)

    def transmit_rng(self, c, rng):
        y = c ^ (rng.random(c.shape) < self.p)
        return self.llr_magnitude * (1.0 - 2.0 * y)


@dataclass(frozen=True)
class BiAwgn(_Bios):
    """BPSK (bit b -> 1 - 2b, unit energy) over real AWGN with std ``sigma``."""

    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise ValueError(f"AWGN sigma must be positive, got {self.sigma}")

    @classmethod
    def from_ebn0(cls, ebn0_db: float, rate: float) -> BiAwgn:
        return cls(ebn0_to_sigma(ebn0_db, rate))

    @property
    def noise(self) -> float:
        return self.sigma

    def llr_law(self):
        z, w = _hermite(GH_NODES)
        s2 = self.sigma**2
        # y = 1 + sigma Z, lambda = 2y / sigma^2
        return 2.0 / s2 + (2.0 / self.sigma) * z, w

    def bhattacharyya(self) -> float:
        return math.exp(-1.0 / (2.0 * self.sigma**2))

    def llr(self, y: np.ndarray) -> np.ndarray:
        return np.clip(2.0 * np.asarray(y, dtype=float) / self.sigma**2, -LLR_MAX, LLR_MAX)

    def transmit_rng(self, c, rng):
        y = (1.0 - 2.0 * c) + self.sigma * rng.standard_normal(c.shape)
        return self.llr(y)


ChannelModel = Union[BEC, BSC, BiAwgn]


def binary_entropy(p: float | np.ndarray) -> float | np.ndarray:
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p)
    h = np.where((p <= 0.0) | (p >= 1.0), 0.0, h)
    return float(h) if h.ndim == 0 else h


def ebn0_to_sigma(ebn0_db: float, rate: float) -> float:
    """``sigma^2 = 1 / (2 R 10^(EbN0/10))`` for unit-energy BPSK."""
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))


def sigma_to_ebn0(sigma: float, rate: float) -> float:
    return 10.0 * math.log10(1.0 / (2.0 * rate * sigma**2))


def shannon_limit_ebn0(rate: float) -> float:
    """Eb/N0 (dB) at which the BPSK-AWGN capacity equals ``rate``."""
    sigma = brentq(lambda s: BiAwgn(s).capacity() - rate, 0.05, 50.0, xtol=1e-12)
    return sigma_to_ebn0(sigma, rate)


def transmit(c: np.ndarray, ch: ChannelModel, seed) -> np.ndarray:
    return ch.transmit(c, seed)


def bhattacharyya(ch: ChannelModel) -> float:
    return ch.bhattacharyya()


def capacity(ch: ChannelModel) -> float:
    return ch.capacity()


def parse_channel(spec: str, rate: float | None = None) -> ChannelModel:
    """Parse ``bec:A``, ``bsc:P``, ``awgn-ebn0:DB`` or ``awgn-sigma:S``.

    ``awgn-ebn0`` needs the code rate to convert Eb/N0 to a noise level.
    """
    kind, value = split_channel_spec(spec)
    return make_channel(kind, value, rate)


def split_channel_spec(spec: str) -> tuple[str, float]:
    kind, sep, value = spec.partition(":")
    kind = kind.strip().lower()
    if not sep:
        raise ValueError(f"channel spec {spec!r}: expected '<kind>:<value>'")
    if kind not in ("bec", "bsc", "awgn-ebn0", "awgn-sigma"):
        raise ValueError(f"channel spec {spec!r}: unknown channel kind {kind!r}")
    try:
        return kind, float(value)
    except ValueError:
        raise ValueError(f"channel spec {spec!r}: value {value!r} is not a number") from None


def make_channel(kind: str, value: float, rate: float | None = None) -> ChannelModel:
    if kind == "bec":
        return BEC(value)
    if kind == "bsc":
        return BSC(value)
    if kind == "awgn-sigma":
        return BiAwgn(value)
    if kind == "awgn-ebn0":
        if rate is None:
            raise ValueError("awgn-ebn0 needs the code rate")
        return BiAwgn.from_ebn0(value, rate)
    raise ValueError(f"unknown channel kind {kind!r}")
