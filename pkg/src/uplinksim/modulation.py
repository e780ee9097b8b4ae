"""Gray-labeled square QAM alphabets with hard and max-log soft demapping."""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64)


def _gray_pam(nbits: int) -> np.ndarray:
    """Amplitude per bit pattern so that adjacent levels differ in one bit."""
    n = 1 << nbits
    levels = 2.0 * np.arange(n) - (n - 1)
    amps = np.empty(n)
    for i in range(n):
        amps[i ^ (i >> 1)] = levels[i]
    return amps


@dataclass(frozen=True)
class QamAlphabet:
    """Unit-average-energy square QAM constellation.

    The first half of each symbol's bits selects the in-phase level, the
    second half the quadrature level, both Gray-coded.
    """

    order: int
    points: np.ndarray = field(repr=False)
    bits_per_symbol: int

    @property
    def bit_table(self) -> np.ndarray:
        """(order, bits_per_symbol) matrix of the label of each point."""
        idx = np.arange(self.order)
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        return (idx[:, None] >> shifts[None, :]) & 1


@lru_cache(maxsize=None)
def qam_alphabet(order: int) -> QamAlphabet:
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {order}")
    m = int(np.log2(order))
    half = m // 2
    pam = _gray_pam(half)
    i_idx = np.arange(order) >> half
    q_idx = np.arange(order) & ((1 << half) - 1)
    pts = pam[i_idx] + 1j * pam[q_idx]
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    pts.setflags(write=False)
    return QamAlphabet(order=order, points=pts, bits_per_symbol=m)


def modulate_qam(bits: np.ndarray, alphabet: QamAlphabet) -> np.ndarray:
    """Map a flat bit array onto constellation symbols."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    m = alphabet.bits_per_symbol
    if bits.size % m:
        raise ValueError(f"bit count {bits.size} not divisible by {m}")
    groups = bits.reshape(-1, m)
    shifts = np.arange(m - 1, -1, -1)
    idx = (groups << shifts[None, :]).sum(axis=1)
    return alphabet.points[idx]


def demodulate_qam_hard(symbols: np.ndarray, alphabet: QamAlphabet) -> np.ndarray:
    """Nearest-point hard decisions, returned as a flat bit array."""
    symbols = np.asarray(symbols).ravel()
    d = np.abs(symbols[:, None] - alphabet.points[None, :]) ** 2
    idx = d.argmin(axis=1)
    return alphabet.bit_table[idx].ravel().astype(np.int8)


def demodulate_qam_llr(symbols: np.ndarray, sinr, alphabet: QamAlphabet) -> np.ndarray:
    """Max-log LLRs, positive favouring bit 1.

    ``sinr`` is the linear post-equalization SINR of the (unit-gain
    normalized) symbols; scalar or broadcastable to the symbol array. The
    effective complex-noise variance per symbol is 1/sinr.
    """
    symbols = np.asarray(symbols).ravel()
    noise_var = np.broadcast_to(np.asarray(1.0 / np.asarray(sinr, dtype=float)),
                                symbols.shape).ravel()
    d = np.abs(symbols[:, None] - alphabet.points[None, :]) ** 2
    metric = -d / noise_var[:, None]
    m = alphabet.bits_per_symbol
    bt = alphabet.bit_table  # (order, m)
    llr = np.empty((symbols.size, m))
    for b in range(m):
        one = bt[:, b] == 1
        llr[:, b] = metric[:, one].max(axis=1) - metric[:, ~one].max(axis=1)
    return llr.ravel()
