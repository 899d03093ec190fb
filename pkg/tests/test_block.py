import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import block_check_matrix, exact_marginals, forest_matrix, peel
from scldgm.block import (BlockCode, TannerGraph, decode_block, decode_block_batch, decode_block_soft,
                          encode_block)
from scldgm.channels import BEC, LLR_MAX, BiAwgn
from scldgm.ensemble import EnsembleParams, SparseBitMatrix, build_block_parity_check

EX_P = SparseBitMatrix.from_dense(np.array([[1, 0, 1], [0, 1, 1], [1, 0, 1]]))


def flood(graph: TannerGraph, ch_info, ch_par, iters, prior=None):
    """Plain flooding iterations without early stopping; returns (app_info, app_par)."""
    intrinsic = ch_info if prior is None else ch_info + prior
    c2v = np.zeros((graph.n_edges, 1))
    for _ in range(iters):
        v2c, _ = graph.var_update(c2v, intrinsic[:, None])
        c2v, c2h = graph.check_update(v2c, ch_par[:, None])
    return (intrinsic + (graph._v_sum @ c2v)[:, 0]), ch_par + c2h[:, 0]


def test_encode_zero_word():
    code = BlockCode.sample(EnsembleParams(40, 20, 0.2, seed=1))
    assert not encode_block(np.zeros(20, dtype=np.uint8), code).any()


def test_encode_worked_example():
    assert encode_block(np.array([1, 0, 0]), BlockCode(EX_P)).tolist() == [1, 0, 0, 1, 0, 1]


def test_encode_length_checked():
    with pytest.raises(ValueError):
        encode_block(np.zeros(4, dtype=np.uint8), BlockCode(EX_P))


@given(st.integers(0, 2**32 - 1))
def test_codewords_satisfy_parity_check(seed):
    rng = np.random.default_rng(seed)
    code = BlockCode.sample(EnsembleParams(60, 25, 0.1, seed=seed))
    u = rng.integers(0, 2, (7, 25)).astype(np.uint8)
    c = encode_block(u, code)
    assert np.array_equal(c[:, :25], u)
    H = build_block_parity_check(code.P)
    assert not H.right_mul(c).any()


def test_adjacency_is_transpose():
    code = BlockCode.sample(EnsembleParams(50, 20, 0.15, seed=4))
    D = code.P.to_dense()
    for j, sup in enumerate(code.adjacency):
        assert list(sup) == list(np.flatnonzero(D[:, j]))


def test_noiseless_decode():
    code = BlockCode.sample(EnsembleParams(128, 64, 0.05, seed=2))
    u = np.random.default_rng(0).integers(0, 2, 64).astype(np.uint8)
    llr = LLR_MAX * (1.0 - 2.0 * encode_block(u, code))
    out = decode_block(llr, code, 50)
    assert np.array_equal(out.bits, u)
    assert out.converged and out.iterations == 1


def test_decision_sign_convention():
    code = BlockCode.sample(EnsembleParams(64, 32, 0.05, seed=3))
    llr = BiAwgn(1.0).transmit(np.zeros(64, dtype=np.uint8), 9)
    out = decode_block(llr, code, 20)
    assert np.array_equal(out.bits, (out.app < 0).astype(np.uint8))


@given(st.integers(2, 10), st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_tree_bp_equals_exact_marginals(k, r, seed):
    rng = np.random.default_rng(seed)
    P = forest_matrix(k, r, rng)
    code = BlockCode(P)
    llr = rng.normal(0.5, 2.0, k + r)
    a_info, a_par = flood(code.graph, llr[:k], llr[k:], k + r + 2)
    exact = exact_marginals(P, llr)
    np.testing.assert_allclose(a_info, exact[:k], atol=1e-9, rtol=0)
    # a check with no information bits pins its parity bit to 0 (infinite LLR)
    live = np.array([len(s) > 0 for s in P.column_support()])
    np.testing.assert_allclose(a_par[live], exact[k:][live], atol=1e-9, rtol=0)


@given(st.integers(0, 2**32 - 1))
def test_single_iteration_exact_on_depth_one_tree(seed):
    # each information bit touches at most one check: one pass is exact
    rng = np.random.default_rng(seed)
    k, r = 9, 3
    cols = rng.integers(-1, r, k)
    P = SparseBitMatrix.from_rows(k, r, [[c] if c >= 0 else [] for c in cols])
    llr = rng.normal(0.0, 3.0, k + r)
    out, ext_i, ext_p = decode_block_soft(llr, BlockCode(P), np.zeros(k), i_max=1)
    exact = exact_marginals(P, llr)
    np.testing.assert_allclose(out.app, exact[:k], atol=1e-9, rtol=0)
    live = np.array([len(s) > 0 for s in P.column_support()])
    np.testing.assert_allclose((llr[k:] + ext_p)[live], exact[k:][live], atol=1e-9, rtol=0)


def test_tree_bp_with_prior_equals_exact_marginals():
    rng = np.random.default_rng(5)
    P = forest_matrix(8, 5, rng)
    llr = rng.normal(0.3, 1.5, 13)
    prior = rng.normal(0.0, 1.0, 8)
    a_info, _ = flood(BlockCode(P).graph, llr[:8], llr[8:], 20, prior)
    np.testing.assert_allclose(a_info, exact_marginals(P, llr, prior)[:8], atol=1e-9, rtol=0)


def test_check_rule_is_tanh_product():
    g = TannerGraph.from_matrix(SparseBitMatrix.from_rows(3, 1, [[0], [0], [0]]))
    v2c = np.array([[0.7], [-1.3], [2.2]])
    half = np.array([[0.4]])
    c2v, c2h = g.check_update(v2c, half)
    t = np.tanh(np.array([0.7, -1.3, 2.2, 0.4]) / 2)
    for e in range(3):
        want = 2 * np.arctanh(np.prod(np.delete(t, e)))
        assert c2v[e, 0] == pytest.approx(want, abs=1e-12)
    assert c2h[0, 0] == pytest.approx(2 * np.arctanh(np.prod(t[:3])), abs=1e-12)


def test_check_rule_handles_erasures():
    g = TannerGraph.from_matrix(SparseBitMatrix.from_rows(2, 1, [[0], [0]]))
    c2v, c2h = g.check_update(np.array([[0.0], [3.0]]), np.array([[-2.0]]))
    assert c2v[1, 0] == 0.0 and c2h[0, 0] == 0.0
    assert c2v[0, 0] == pytest.approx(2 * np.arctanh(np.tanh(1.5) * np.tanh(-1.0)))


def _bec_batch(code, alpha, frames, seed):
    rng = np.random.default_rng(seed)
    u = rng.integers(0, 2, (frames, code.k)).astype(np.uint8)
    c = encode_block(u, code)
    llr = np.stack([BEC(alpha).transmit_rng(c[i], rng) for i in range(frames)])
    return u, c, llr


@pytest.mark.parametrize("alpha", [0.2, 0.35, 0.5])
def test_bec_bp_equals_peeling(alpha):
    code = BlockCode.sample(EnsembleParams(64, 32, 0.05, seed=17))
    u, c, llr = _bec_batch(code, alpha, 400, seed=int(alpha * 100))
    bits, app, _, _ = decode_block_batch(llr, code, i_max=128)
    known = peel(block_check_matrix(code.P), (llr != 0).T)
    assert np.array_equal(app != 0, known[:32].T)
    resolved = app != 0
    assert np.array_equal(bits[resolved], u[resolved])


def test_prior_zero_reduces_to_plain_decode():
    code = BlockCode.sample(EnsembleParams(96, 48, 0.06, seed=6))
    llr = BiAwgn(0.9).transmit(np.zeros(96, dtype=np.uint8), 1)
    a = decode_block(llr, code, 30)
    b, _, _ = decode_block_soft(llr, code, np.zeros(48), 30)
    assert np.array_equal(a.app, b.app) and a.iterations == b.iterations


def test_saturated_prior_gives_parity_signs():
    code = BlockCode.sample(EnsembleParams(80, 40, 0.08, seed=8))
    u = np.random.default_rng(3).integers(0, 2, 40).astype(np.uint8)
    c = encode_block(u, code)
    prior = LLR_MAX * (1.0 - 2.0 * u)
    _, _, ext_p = decode_block_soft(np.zeros(80), code, prior, 1)
    covered = np.array([len(s) > 0 for s in code.adjacency])
    assert np.array_equal((ext_p[covered] < 0).astype(np.uint8), c[40:][covered])
    assert np.all(ext_p[~covered] == 0.0)


@given(st.integers(0, 2**32 - 1), st.integers(0, 39), st.floats(-20, 20))
def test_extrinsic_ignores_own_prior(seed, i, new_prior):
    rng = np.random.default_rng(seed)
    code = BlockCode.sample(EnsembleParams(80, 40, 0.08, seed=seed % 1000))
    llr = rng.normal(1.0, 1.5, 80)
    prior = rng.normal(0.0, 1.0, 40)
    _, e1, _ = decode_block_soft(llr, code, prior, 1)
    prior[i] = new_prior
    _, e2, _ = decode_block_soft(llr, code, prior, 1)
    assert e1[i] == pytest.approx(e2[i], abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_translation_invariance(seed):
    rng = np.random.default_rng(seed)
    code = BlockCode.sample(EnsembleParams(96, 48, 0.06, seed=seed % 977))
    ch = BiAwgn(0.85)
    base = ch.transmit(np.zeros(96, dtype=np.uint8), seed)
    u = rng.integers(0, 2, 48).astype(np.uint8)
    c = encode_block(u, code)
    # same noise realisation, codeword c: y = (1 - 2c)(1 + sigma z)
    moved = base * (1.0 - 2.0 * c)
    a = decode_block(base, code, 25)
    b = decode_block(moved, code, 25)
    assert np.array_equal(a.bits ^ b.bits, u)
    assert a.iterations == b.iterations and a.converged == b.converged


def test_batch_matches_single():
    code = BlockCode.sample(EnsembleParams(128, 64, 0.05, seed=11))
    ch = BiAwgn(0.95)
    llr = np.stack([ch.transmit(np.zeros(128, dtype=np.uint8), s) for s in range(12)])
    bits, app, iters, conv = decode_block_batch(llr, code, 40)
    for i in range(12):
        o = decode_block(llr[i], code, 40)
        assert np.array_equal(o.app, app[i]) and o.iterations == iters[i] and o.converged == conv[i]


def test_i_max_validated():
    with pytest.raises(ValueError):
        decode_block(np.zeros(6), BlockCode(EX_P), 0)
    with pytest.raises(ValueError):
        decode_block(np.zeros(5), BlockCode(EX_P), 3)


def test_params_shape_checked():
    with pytest.raises(ValueError):
        BlockCode(EX_P, EnsembleParams(8, 3, 0.1))
