"""LDGM block codes and spatially coupled LDGM codes: sampling, coding, decoding and ensemble analysis."""

from .analysis import (BoundsReport, DeTrace, ExponentReport, ber_bounds, ber_lower_bound, ber_upper_bound, de_bec,
                       er_bound, error_exponent, irwef_coeff, pep, random_coding_exponent, rho_w)
from .block import BlockCode, DecodeOutcome, decode_block, decode_block_batch, decode_block_soft, encode_block
from .channels import BEC, BSC, LLR_MAX, BiAwgn, bhattacharyya, capacity, parse_channel, transmit
from .ensemble import (TAIL_BITING, TERMINATED, CouplingParams, EnsembleParams, SparseBitMatrix,
                       build_block_parity_check, build_sc_parity_check, gen_parity_matrix, read_matrix, split_matrix,
                       write_matrix)
from .sc import ScCode, decode_sc, encode_sc, entropy_stop
from .sim import CodeSpec, PointResult, SimConfig, SimResult, run_sweep, simulate

__version__ = "0.1.0"
