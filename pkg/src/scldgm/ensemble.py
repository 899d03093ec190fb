"""Random parity matrices for systematic LDGM codes and their GF(2) views.

A code of the ensemble is fixed by a ``k x (n-k)`` matrix ``P`` whose entries
are i.i.d. Bernoulli(rho); the generator is ``G = [I P]`` and the parity-check
matrix is ``H = [P^T I]``.  Spatial coupling splits ``P`` into ``m + 1`` layers
whose supports partition the support of ``P``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

TERMINATED = "terminated"
TAIL_BITING = "tail_biting"
_MODES = (TERMINATED, TAIL_BITING)

_HEADER_RE = re.compile(r"^ldgm-matrix v1 rows=(\d+) cols=(\d+) nnz=(\d+)$")


class MatrixFormatError(ValueError):
    """Raised when a matrix file does not follow the ``ldgm-matrix v1`` layout."""


@dataclass(frozen=True)
class SparseBitMatrix:
    """Row-sparse binary matrix.

    ``row_support[r]`` is the sorted tuple of column indices holding a one in
    row ``r``.  Instances are immutable; build them with :meth:`from_rows`,
    :meth:`from_dense` or :meth:`from_coo`.
    """

    rows: int
    cols: int
    row_support: tuple[tuple[int, ...], ...]
    _csr: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if len(self.row_support) != self.rows:
            raise ValueError(f"row_support has {len(self.row_support)} rows, expected {self.rows}")
        for r, sup in enumerate(self.row_support):
            prev = -1
            for c in sup:
                if not 0 <= c < self.cols:
                    raise ValueError(f"row {r}: column {c} out of range [0, {self.cols})")
                if c <= prev:
                    raise ValueError(f"row {r}: support not strictly increasing")
                prev = c

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_rows(cls, rows: int, cols: int, supports: Iterable[Iterable[int]]) -> SparseBitMatrix:
        return cls(rows, cols, tuple(tuple(sorted(set(int(c) for c in s))) for s in supports))

    @classmethod
    def from_coo(cls, rows: int, cols: int, r_idx: np.ndarray, c_idx: np.ndarray) -> SparseBitMatrix:
        """Build from coordinate arrays; duplicate coordinates cancel mod 2."""
        r_idx = np.asarray(r_idx, dtype=np.int64)
        c_idx = np.asarray(c_idx, dtype=np.int64)
        if r_idx.size:
            if r_idx.min() < 0 or r_idx.max() >= rows:
                raise ValueError("row index out of range")
            if c_idx.min() < 0 or c_idx.max() >= cols:
                raise ValueError("column index out of range")
        key = r_idx * max(cols, 1) + c_idx
        uniq, counts = np.unique(key, return_counts=True)
        uniq = uniq[counts % 2 == 1]
        rr, cc = np.divmod(uniq, max(cols, 1))
        bounds = np.searchsorted(rr, np.arange(rows + 1))
        support = tuple(tuple(cc[bounds[r]:bounds[r + 1]].tolist()) for r in range(rows))
        return cls(rows, cols, support)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> SparseBitMatrix:
        dense = np.asarray(dense)
        if dense.ndim != 2:
            raise ValueError("dense matrix must be 2-D")
        r, c = np.nonzero(dense % 2)
        return cls.from_coo(dense.shape[0], dense.shape[1], r, c)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> SparseBitMatrix:
        return cls(rows, cols, tuple(() for _ in range(rows)))

    # -- views --------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return sum(len(s) for s in self.row_support)

    def coo(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(row, col)`` index arrays of the nonzeros in lexicographic order."""
        lengths = [len(s) for s in self.row_support]
        r = np.repeat(np.arange(self.rows, dtype=np.int64), lengths)
        c = np.fromiter((c for s in self.row_support for c in s), dtype=np.int64, count=sum(lengths))
        return r, c

    def to_csr(self) -> sp.csr_matrix:
        if self._csr is None:
            r, c = self.coo()
            m = sp.csr_matrix((np.ones(r.size, dtype=np.int32), (r, c)), shape=self.shape)
            object.__setattr__(self, "_csr", m)
        return self._csr

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.uint8)
        r, c = self.coo()
        out[r, c] = 1
        return out

    def transpose(self) -> SparseBitMatrix:
        r, c = self.coo()
        return SparseBitMatrix.from_coo(self.cols, self.rows, c, r)

    def column_support(self) -> list[np.ndarray]:
        """Per-column sorted row indices (column adjacency, derived on demand)."""
        r, c = self.coo()
        order = np.lexsort((r, c))
        r, c = r[order], c[order]
        bounds = np.searchsorted(c, np.arange(self.cols + 1))
        return [r[bounds[j]:bounds[j + 1]] for j in range(self.cols)]

    def left_mul(self, u: np.ndarray) -> np.ndarray:
        """Compute ``u @ M`` over GF(2); ``u`` may be a vector or a batch of row vectors."""
        u = np.asarray(u)
        if u.shape[-1] != self.rows:
            raise ValueError(f"vector length {u.shape[-1]} does not match {self.rows} rows")
        csr_t = self.to_csr().T
        if u.ndim == 1:
            return (csr_t @ u.astype(np.int64) % 2).astype(np.uint8)
        return ((csr_t @ u.astype(np.int64).T) % 2).T.astype(np.uint8)

    def right_mul(self, x: np.ndarray) -> np.ndarray:
        """Compute ``M @ x`` over GF(2) (syndrome of a word or a batch of row-stacked words)."""
        x = np.asarray(x)
        if x.shape[-1] != self.cols:
            raise ValueError(f"vector length {x.shape[-1]} does not match {self.cols} columns")
        csr = self.to_csr()
        if x.ndim == 1:
            return (csr @ x.astype(np.int64) % 2).astype(np.uint8)
        return ((csr @ x.astype(np.int64).T) % 2).T.astype(np.uint8)

    def xor(self, other: SparseBitMatrix) -> SparseBitMatrix:
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        r1, c1 = self.coo()
        r2, c2 = other.coo()
        return SparseBitMatrix.from_coo(self.rows, self.cols, np.concatenate([r1, r2]), np.concatenate([c1, c2]))


@dataclass(frozen=True)
class EnsembleParams:
    n: int
    k: int
    rho: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.k < self.n:
            raise ValueError(f"need 0 < k < n, got n={self.n}, k={self.k}")
        if not 0.0 <= self.rho <= 0.5:
            raise ValueError(f"rho must lie in [0, 1/2], got {self.rho}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def rate(self) -> float:
        return self.k / self.n


@dataclass(frozen=True)
class CouplingParams:
    m: int
    L: int
    mode: str = TERMINATED
    split_seed: int = 0

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ValueError(f"coupling memory m must be >= 0, got {self.m}")
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.mode == TAIL_BITING and self.L <= self.m:
            raise ValueError(f"tail-biting needs L > m, got L={self.L}, m={self.m}")
        if not 0 <= self.split_seed < 2**64:
            raise ValueError("split_seed must be a 64-bit unsigned integer")


def gen_parity_matrix(params: EnsembleParams) -> SparseBitMatrix:
    """Sample ``P`` with i.i.d. Bernoulli(rho) entries from the seeded PCG64 stream."""
    k, r = params.k, params.n - params.k
    rng = np.random.default_rng(params.seed)
    # Row by row keeps memory at O(n) for large k.
    support = []
    for _ in range(k):
        support.append(tuple(np.flatnonzero(rng.random(r) < params.rho).tolist()))
    return SparseBitMatrix(k, r, tuple(support))


def split_matrix(P: SparseBitMatrix, coupling: CouplingParams) -> list[SparseBitMatrix]:
    """Send every nonzero of ``P`` to one of ``m + 1`` layers, uniformly at random.

    Zeros of ``P`` stay zero in every layer, so only the nonzeros draw a layer
    index.  ``m = 0`` returns ``[P]``.
    """
    if coupling.m == 0:
        return [P]
    rng = np.random.default_rng(coupling.split_seed)
    r, c = P.coo()
    layer = rng.integers(0, coupling.m + 1, size=r.size)
    return [SparseBitMatrix.from_coo(P.rows, P.cols, r[layer == ell], c[layer == ell])
            for ell in range(coupling.m + 1)]


def build_block_parity_check(P: SparseBitMatrix) -> SparseBitMatrix:
    """Return ``H = [P^T I]`` of shape ``(n-k) x n``."""
    k, r = P.shape
    rows, cols = P.coo()
    hr = np.concatenate([cols, np.arange(r)])
    hc = np.concatenate([rows, k + np.arange(r)])
    return SparseBitMatrix.from_coo(r, k + r, hr, hc)


def sc_frame_layout(k: int, r: int, coupling: CouplingParams) -> tuple[np.ndarray, np.ndarray]:
    """Offsets of each sub-frame's information and parity bits in the transmitted word.

    Sub-frames are laid out in time order: ``(u(0), p(0), ..., u(L-1), p(L-1))``
    followed, when terminated, by the parity-only tail ``p(L), ..., p(L+m-1)``.
    Returns ``(info_start, parity_start)``; ``info_start`` has ``L`` entries,
    ``parity_start`` one entry per emitted parity sub-frame.
    """
    L, m = coupling.L, coupling.m
    n = k + r
    info_start = np.arange(L) * n
    parity_start = info_start + k
    if coupling.mode == TERMINATED:
        parity_start = np.concatenate([parity_start, L * n + np.arange(m) * r])
    return info_start, parity_start


def build_sc_parity_check(layers: Sequence[SparseBitMatrix], coupling: CouplingParams) -> SparseBitMatrix:
    """Banded parity-check matrix of the coupled code, columns in transmission order.

    Row block ``tau`` expresses ``p(tau) + sum_l u(tau - l) P_l = 0``.  In
    terminated mode the shape is ``(L+m)(n-k) x [nL + m(n-k)]``; tail-biting
    wraps ``tau - l`` modulo ``L`` and gives ``L(n-k) x nL``.  An ordering with
    all information columns first is a column permutation of this.
    """
    if len(layers) != coupling.m + 1:
        raise ValueError(f"expected {coupling.m + 1} layers, got {len(layers)}")
    k, r = layers[0].shape
    L, m = coupling.L, coupling.m
    info_start, parity_start = sc_frame_layout(k, r, coupling)
    n_par_frames = len(parity_start)
    n_cols = int(parity_start[-1] + r)
    hr, hc = [], []
    for tau in range(n_par_frames):
        hr.append(tau * r + np.arange(r))
        hc.append(parity_start[tau] + np.arange(r))
    for ell, Pl in enumerate(layers):
        if Pl.shape != (k, r):
            raise ValueError("layers must share one shape")
        pr, pc = Pl.coo()
        for t in range(L):
            tau = t + ell
            if coupling.mode == TAIL_BITING:
                tau %= L
            hr.append(tau * r + pc)
            hc.append(info_start[t] + pr)
    return SparseBitMatrix.from_coo(n_par_frames * r, n_cols, np.concatenate(hr), np.concatenate(hc))


def write_matrix(M: SparseBitMatrix, path: str | Path) -> None:
    r, c = M.coo()
    lines = [f"ldgm-matrix v1 rows={M.rows} cols={M.cols} nnz={r.size}"]
    lines.extend(f"{a} {b}" for a, b in zip(r.tolist(), c.tolist()))
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path: str | Path) -> SparseBitMatrix:
    text = Path(path).read_text().splitlines()
    if not text:
        raise MatrixFormatError(f"{path}: empty file, expected header")
    m = _HEADER_RE.match(text[0].strip())
    if m is None:
        raise MatrixFormatError(f"{path}: malformed header {text[0]!r}")
    rows, cols, nnz = (int(g) for g in m.groups())
    body = [ln for ln in text[1:] if ln.strip()]
    if len(body) != nnz:
        raise MatrixFormatError(f"{path}: header nnz={nnz} but {len(body)} entries follow")
    r_idx = np.empty(nnz, dtype=np.int64)
    c_idx = np.empty(nnz, dtype=np.int64)
    for i, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 2:
            raise MatrixFormatError(f"{path}: line {i + 2}: expected 'row col', got {ln!r}")
        try:
            r_idx[i], c_idx[i] = int(parts[0]), int(parts[1])
        except ValueError:
            raise MatrixFormatError(f"{path}: line {i + 2}: non-integer entry {ln!r}") from None
        if not 0 <= r_idx[i] < rows:
            raise MatrixFormatError(f"{path}: line {i + 2}: row {r_idx[i]} outside [0, {rows})")
        if not 0 <= c_idx[i] < cols:
            raise MatrixFormatError(f"{path}: line {i + 2}: col {c_idx[i]} outside [0, {cols})")
    key = r_idx * max(cols, 1) + c_idx
    if nnz and np.any(np.diff(key) <= 0):
        raise MatrixFormatError(f"{path}: entries not sorted lexicographically or duplicated")
    return SparseBitMatrix.from_coo(rows, cols, r_idx, c_idx)
