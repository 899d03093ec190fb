import math
from pathlib import Path

import numpy as np
import pytest

from scldgm.sim import CSV_COLUMNS, CodeSpec, SimConfig, csv_header, run_sweep, simulate, trial_rng

GOLDEN = Path(__file__).parent / "data" / "golden_sim.csv"


def block_cfg(**kw):
    base = dict(code=CodeSpec(96, 48, 0.06, seed=3), channel="awgn-ebn0", sweep=[1.0, 3.0],
                min_frame_errors=15, max_frames=2000, master_seed=21)
    base.update(kw)
    return SimConfig(**base)


def render(points):
    return "".join(p.csv_row() + "\n" for p in points)


def test_noiseless_bsc_has_no_errors():
    cfg = block_cfg(channel="bsc", sweep=[0.0], max_frames=300)
    (pt,) = simulate(cfg).points
    assert pt.frames == 300 and pt.bit_errs == 0 and pt.ber == 0.0 and pt.fer == 0.0


def test_noiseless_bsc_sc_code():
    cfg = SimConfig(CodeSpec(40, 20, 0.1, m=2, L=4), "bsc", [0.0], max_frames=3)
    (pt,) = simulate(cfg).points
    assert pt.bit_errs == 0 and pt.bits_per_frame == 80


def test_rerun_is_identical():
    a = simulate(block_cfg()).points
    b = simulate(block_cfg()).points
    assert a == b
    assert render(a) == render(b)


def test_worker_count_does_not_change_result(monkeypatch):
    serial = simulate(block_cfg(chunk=64)).points
    monkeypatch.setenv("SCLDGM_WORKERS", "3")
    parallel = simulate(block_cfg(chunk=64)).points
    assert serial == parallel


def test_chunk_size_does_not_change_result():
    assert simulate(block_cfg(chunk=7)).points == simulate(block_cfg(chunk=500)).points


def test_stop_rule():
    pts = simulate(block_cfg()).points
    for p in pts:
        assert p.frame_errs == 15 or p.frames == 2000
    capped = simulate(block_cfg(max_frames=5, min_frame_errors=10**6)).points
    assert all(p.frames == 5 for p in capped)


def test_stream_is_in_sweep_order():
    xs = [p.x for p in run_sweep(block_cfg(sweep=[3.0, 1.0, 2.0]))]
    assert xs == [3.0, 1.0, 2.0]


def test_consistency_of_rates():
    for p in simulate(block_cfg()).points:
        assert p.ber == p.bit_errs / (48 * p.frames)
        assert p.ber <= p.fer
        assert p.fer <= min(1.0, 48 * p.ber)
        assert p.ber_ci == pytest.approx(1.959963984540054 * math.sqrt(p.ber * (1 - p.ber) / (48 * p.frames)))


def test_uncoded_bsc_ber_is_p():
    # rho = 0: parity bits carry no information about the data
    p = 0.07
    cfg = SimConfig(CodeSpec(200, 100, 0.0), "bsc", [p], min_frame_errors=10**9, max_frames=400, master_seed=5)
    (pt,) = simulate(cfg).points
    n_bits = 100 * 400
    assert abs(pt.ber - p) < 4 * math.sqrt(p * (1 - p) / n_bits)


def test_random_data_matches_all_zero_statistically():
    a = simulate(block_cfg(sweep=[2.0], min_frame_errors=60)).points[0]
    b = simulate(block_cfg(sweep=[2.0], min_frame_errors=60, random_data=True)).points[0]
    assert abs(a.ber - b.ber) < 4 * math.hypot(a.ber_ci, b.ber_ci) / 1.96


def test_bec_erasures_count_as_errors():
    cfg = SimConfig(CodeSpec(40, 20, 0.0), "bec", [1.0], max_frames=4)
    (pt,) = simulate(cfg).points
    assert pt.ber == 1.0


def test_trial_seeds_are_independent_of_order():
    a = trial_rng(1, 2, 3).random(4)
    trial_rng(1, 2, 4).random(4)
    assert np.array_equal(a, trial_rng(1, 2, 3).random(4))
    assert not np.array_equal(a, trial_rng(1, 3, 2).random(4))


@pytest.mark.parametrize("kw,needle", [
    (dict(sweep=[]), "empty"),
    (dict(min_frame_errors=0), "min_frame_errors"),
    (dict(max_frames=0), "max_frames"),
    (dict(i_max=0), "iteration"),
    (dict(code=CodeSpec(40, 20, 0.1, m=2, L=3), d=5), "exceeds the chain"),
    (dict(code=CodeSpec(40, 20, 0.1, m=2, L=2, mode="tail_biting")), "tail-biting"),
])
def test_bad_config_rejected_before_running(kw, needle):
    with pytest.raises(ValueError, match=needle):
        next(iter(run_sweep(block_cfg(**kw))))


def test_csv_header_layout():
    head = csv_header("2000-01-01T00:00:00")
    lines = head.splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == ",".join(CSV_COLUMNS) == "x,ber,fer,ber_ci,fer_ci,frames,bit_errs,frame_errs,seed"


def test_golden_csv():
    cfg = SimConfig(CodeSpec(64, 32, 0.05, seed=1), "awgn-ebn0", [1.0, 2.0, 3.0], min_frame_errors=10,
                    max_frames=500, master_seed=1234)
    text = ",".join(CSV_COLUMNS) + "\n" + render(simulate(cfg).points)
    assert text == GOLDEN.read_text()
