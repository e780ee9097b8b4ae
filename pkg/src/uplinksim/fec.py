"""Punctured turbo code whose rate is set by the CQI.

Parallel-concatenated rate-1/3 mother code (two 8-state recursive
systematic constituents), quadratic-permutation interleaver, circular-buffer
rate matching with 32-column sub-block interleaving, CRC-24 per block, and
iterative max-log-MAP decoding. Structurally LTE-like; no bit-exact
conformance is claimed.
"""

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from . import modulation
from .kernels import CRC_LEN, crc24, maxlog_bcjr, rsc_encode

MAX_BLOCK = 6144  # interleaver size cap, mother rate 1/3
MIN_INFO = 16
N_TAIL = 3
EXTRINSIC_SCALE = 0.75
DEFAULT_ITERATIONS = 8


@dataclass(frozen=True)
class CqiEntry:
    index: int
    order: int       # QAM order
    rate: float      # effective code rate

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def efficiency(self) -> float:
        return self.rate * self.bits_per_symbol


def _load_cqi_table() -> tuple[CqiEntry, ...]:
    ref = resources.files("uplinksim.config").joinpath("cqi_table.json")
    with ref.open("r") as fh:
        spec = json.load(fh)
    return tuple(
        CqiEntry(index=e["index"], order=e["order"], rate=e["rate_1024"] / 1024)
        for e in spec["entries"]
    )


CQI_TABLE = _load_cqi_table()


def cqi_entry(index: int) -> CqiEntry:
    if not 1 <= index <= len(CQI_TABLE):
        raise ValueError(f"CQI index {index} out of range")
    return CQI_TABLE[index - 1]


def _build_trellis() -> tuple[np.ndarray, np.ndarray]:
    """8-state RSC trellis: feedback 1+D^2+D^3, feedforward 1+D+D^3."""
    next_state = np.empty((8, 2), dtype=np.int64)
    parity = np.empty((8, 2), dtype=np.int64)
    for s in range(8):
        fb = ((s >> 1) & 1) ^ (s & 1)
        for u in range(2):
            a = u ^ fb
            parity[s, u] = a ^ ((s >> 2) & 1) ^ (s & 1)
            next_state[s, u] = (a << 2) | (s >> 1)
    return next_state, parity


NEXT_STATE, PARITY = _build_trellis()


@lru_cache(maxsize=None)
def qpp_params(k: int) -> tuple[int, int]:
    """Deterministic quadratic-permutation parameters for block size k.

    Candidates are screened for bijectivity directly and ranked by a
    windowed spread metric, so any block size gets a valid, well-spread
    permutation without a standards table.
    """
    x = np.arange(k, dtype=np.int64)

    def is_perm(f1, f2):
        pi = (f1 * x + f2 * x * x) % k
        return np.bincount(pi, minlength=k).max() == 1

    def spread(f1, f2):
        pi = (f1 * x + f2 * x * x) % k
        best = k
        for d in range(1, min(21, k)):
            diff = np.abs(pi - np.roll(pi, -d))
            cyc = np.minimum(diff, k - diff)
            best = min(best, int(cyc.min()) + d)
        return best

    fracs = (0.236, 0.309, 0.382, 0.417, 0.451, 0.472)
    f1_cands = sorted({max(3, 2 * (int(k * f) // 2) + 1) for f in fracs}
                      | {3, 7, 11, 15, 21, 31})
    f2_cands = sorted({max(2, 2 * (int(k * f) // 2)) for f in fracs}
                      | {k // 2 - (k // 2) % 2, 2 * (k // 3) // 2 * 2})
    best = None
    for f1 in f1_cands:
        if f1 >= k or np.gcd(f1, k) != 1:
            continue
        for f2 in f2_cands:
            if not 0 < f2 < k or not is_perm(f1, f2):
                continue
            score = spread(f1, f2)
            if best is None or score > best[0]:
                best = (score, f1, f2)
    if best is None:
        # Always valid: the identity-like fallback f1=1 with f2 a multiple
        # of every prime factor of k.
        f2 = int(np.prod([p for p in range(2, k + 1)
                          if k % p == 0 and all(p % q for q in range(2, p))]))
        while not is_perm(1, f2):
            f2 += f2
        return 1, f2 % k
    return best[1], best[2]


@lru_cache(maxsize=None)
def qpp_interleaver(k: int) -> np.ndarray:
    f1, f2 = qpp_params(k)
    x = np.arange(k, dtype=np.int64)
    pi = (f1 * x + f2 * x * x) % k
    pi.setflags(write=False)
    return pi


@lru_cache(maxsize=None)
def _subblock_permutation(n: int) -> np.ndarray:
    """Read order of an n-element stream through the 32-column interleaver."""
    cols = 32
    rows = -(-n // cols)
    n_pad = rows * cols - n
    perm32 = np.array([int(f"{i:05b}"[::-1], 2) for i in range(cols)])
    virt = np.arange(rows * cols).reshape(rows, cols)[:, perm32].T.ravel()
    real = virt[virt >= n_pad] - n_pad
    real.setflags(write=False)
    return real


@lru_cache(maxsize=None)
def _buffer_order(k: int) -> np.ndarray:
    """Circular-buffer read order as indices into the mother codeword.

    Mother layout: [sys(k), tail_sys1(3), tail_sys2(3),
                    par1(k), tail_par1(3), par2(k), tail_par2(3)].
    """
    v0 = _subblock_permutation(k + 2 * N_TAIL)
    v1 = _subblock_permutation(k + N_TAIL)
    v2 = _subblock_permutation(k + N_TAIL)
    off1 = k + 2 * N_TAIL
    off2 = off1 + k + N_TAIL
    interlaced = np.empty(2 * (k + N_TAIL), dtype=np.int64)
    interlaced[0::2] = v1 + off1
    interlaced[1::2] = v2 + off2
    order = np.concatenate([v0, interlaced])
    order.setflags(write=False)
    return order


def coded_length(n_info: int, cqi: CqiEntry) -> int:
    return int(round(n_info / cqi.rate))


def crc_bits(bits: np.ndarray) -> np.ndarray:
    r = crc24(np.ascontiguousarray(bits, dtype=np.int8))
    return np.array([(r >> (CRC_LEN - 1 - i)) & 1 for i in range(CRC_LEN)],
                    dtype=np.int8)


def _mother_codeword(u: np.ndarray) -> np.ndarray:
    k = u.size
    par1, ts1, tp1 = rsc_encode(u, NEXT_STATE, PARITY)
    u2 = u[qpp_interleaver(k)]
    par2, ts2, tp2 = rsc_encode(np.ascontiguousarray(u2), NEXT_STATE, PARITY)
    return np.concatenate([u, ts1, ts2, par1, tp1, par2, tp2])


def encode(bits: np.ndarray, cqi: CqiEntry, n_out: int | None = None
           ) -> np.ndarray:
    """Turbo-encode and rate-match one block.

    The circular buffer produces any requested output length; by default
    the length realizing the CQI's code rate (within one bit of rounding).
    """
    bits = np.ascontiguousarray(bits, dtype=np.int8).ravel()
    n_info = bits.size
    if n_info < MIN_INFO:
        raise ValueError(f"block of {n_info} bits is below minimum {MIN_INFO}")
    k = n_info + CRC_LEN
    if k > MAX_BLOCK:
        raise ValueError(f"block of {n_info} bits exceeds maximum "
                         f"{MAX_BLOCK - CRC_LEN}")
    u = np.concatenate([bits, crc_bits(bits)])
    mother = _mother_codeword(u)
    if n_out is None:
        n_out = coded_length(n_info, cqi)
    positions = np.resize(_buffer_order(k), n_out)
    return mother[positions]


def infer_info_length(n_coded: int, cqi: CqiEntry) -> int:
    """Info bits carried by n_coded rate-matched bits at the CQI's rate."""
    n_info = int(round(n_coded * cqi.rate))
    if n_info < MIN_INFO:
        raise ValueError(f"{n_coded} coded bits cannot carry a block "
                         f"at rate {cqi.rate}")
    return n_info


def decode(llrs: np.ndarray, cqi: CqiEntry, n_info: int | None = None, *,
           n_iterations: int = DEFAULT_ITERATIONS
           ) -> tuple[np.ndarray, bool]:
    """Iterative max-log-MAP turbo decoding; failures surface as crc_ok=False.

    LLRs are positive-favours-one; repeats are soft-combined and punctured
    positions contribute zero.
    """
    llrs = np.asarray(llrs, dtype=float).ravel()
    if n_info is None:
        n_info = infer_info_length(llrs.size, cqi)
    k = n_info + CRC_LEN
    mother = np.zeros(3 * k + 4 * N_TAIL)
    positions = np.resize(_buffer_order(k), llrs.size)
    np.add.at(mother, positions, llrs)

    l_sys = mother[:k]
    l_ts1 = mother[k:k + N_TAIL]
    l_ts2 = mother[k + N_TAIL:k + 2 * N_TAIL]
    o = k + 2 * N_TAIL
    l_par1 = mother[o:o + k]
    l_tp1 = mother[o + k:o + k + N_TAIL]
    o += k + N_TAIL
    l_par2 = mother[o:o + k]
    l_tp2 = mother[o + k:o + k + N_TAIL]

    perm = qpp_interleaver(k)
    inv_perm = np.empty(k, dtype=np.int64)
    inv_perm[perm] = np.arange(k)
    l_sys2 = np.ascontiguousarray(l_sys[perm])

    l_apriori1 = np.zeros(k)
    decided = np.zeros(k, dtype=np.int8)
    crc_ok = False
    for _ in range(n_iterations):
        post1 = maxlog_bcjr(l_sys, l_par1, l_ts1, l_tp1, l_apriori1,
                            NEXT_STATE, PARITY)
        ext1 = EXTRINSIC_SCALE * (post1 - l_sys - l_apriori1)
        l_apriori2 = np.ascontiguousarray(ext1[perm])
        post2 = maxlog_bcjr(l_sys2, l_par2, l_ts2, l_tp2, l_apriori2,
                            NEXT_STATE, PARITY)
        ext2 = EXTRINSIC_SCALE * (post2 - l_sys2 - l_apriori2)
        l_apriori1 = np.ascontiguousarray(ext2[inv_perm])
        decided = (post2[inv_perm] > 0).astype(np.int8)
        if crc24(np.ascontiguousarray(decided)) == 0:
            crc_ok = True
            break
    return decided[:n_info], crc_ok


def bler_curve(cqi: CqiEntry, snr_grid_db: np.ndarray, n_blocks: int,
               n_info: int, rng: np.random.Generator) -> np.ndarray:
    """Monte-Carlo AWGN BLER per SNR point, smoothed nonincreasing.

    This is the mapping table behind link-adaptation step 2 (highest rate
    with BLER <= 0.1).
    """
    alphabet = modulation.qam_alphabet(cqi.order)
    m = alphabet.bits_per_symbol
    bler = np.empty(len(snr_grid_db))
    for i, snr_db in enumerate(snr_grid_db):
        snr = 10.0 ** (snr_db / 10.0)
        noise_std = np.sqrt(1.0 / snr / 2.0)
        errors = 0
        for _ in range(n_blocks):
            bits = rng.integers(0, 2, size=n_info).astype(np.int8)
            coded = encode(bits, cqi)
            pad = (-coded.size) % m
            coded_p = np.concatenate([coded, np.zeros(pad, dtype=np.int8)])
            tx = modulation.modulate_qam(coded_p, alphabet)
            noise = noise_std * (rng.standard_normal(tx.size)
                                 + 1j * rng.standard_normal(tx.size))
            llr = modulation.demodulate_qam_llr(tx + noise, snr, alphabet)
            _, ok = decode(llr[:coded.size], cqi, n_info)
            errors += not ok
        bler[i] = errors / n_blocks
    return np.minimum.accumulate(bler)
