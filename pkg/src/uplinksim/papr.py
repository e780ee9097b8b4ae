"""Oversampled PAPR measurement and CCDF estimation."""

from dataclasses import dataclass

import numpy as np

from . import modulation, phy
from .codebooks import scaled_identity

DEFAULT_OVERSAMPLING = 4

# 0.1 dB CCDF bins from 0 to 13 dB
CCDF_GRID_DB = np.round(np.arange(0.0, 13.0 + 1e-9, 0.1), 1)


@dataclass(frozen=True)
class PaprSample:
    papr: float  # linear, >= 1
    oversampling: int
    mode: str

    @property
    def papr_db(self) -> float:
        return 10.0 * np.log10(self.papr)


def oversampled_signal(x_pre: np.ndarray, n_fft: int, j: int) -> np.ndarray:
    """Zero-padded-spectrum interpolation of the pre-IFFT vector.

    out[m] = sum_k x_pre[k] exp(2j pi m k / (j n_fft)) / sqrt(n_fft)
    for m = 0 .. j*n_fft - 1; j = 1 reproduces the plain IFFT output.
    """
    x_pre = np.asarray(x_pre)
    if j < 1:
        raise ValueError("oversampling factor must be >= 1")
    if x_pre.shape[-1] != n_fft:
        raise ValueError("pre-IFFT vector length must equal n_fft")
    padded = np.concatenate(
        [x_pre, np.zeros(x_pre.shape[:-1] + ((j - 1) * n_fft,), dtype=complex)],
        axis=-1,
    )
    return np.fft.ifft(padded, axis=-1) * (j * n_fft) / np.sqrt(n_fft)


def papr(stacked: np.ndarray, oversampling: int = DEFAULT_OVERSAMPLING,
         mode: str = "") -> PaprSample:
    """Peak over all antennas and samples divided by the average power."""
    stacked = np.asarray(stacked)
    p = np.abs(stacked) ** 2
    mean = p.mean()
    if mean == 0:
        raise ValueError("zero-energy input")
    return PaprSample(papr=float(p.max() / mean), oversampling=oversampling,
                      mode=mode)


def symbol_papr(grid_column: np.ndarray, w: np.ndarray,
                mapping: phy.SubcarrierMapping, mode: str,
                j: int = DEFAULT_OVERSAMPLING) -> PaprSample:
    """PAPR of one OFDM/SC-FDM symbol across all transmit antennas.

    CP samples duplicate body samples and are excluded from the window.
    """
    pre = phy.transmit_pre_ifft(grid_column[:, :, None], w, mapping, mode)[0]
    time = oversampled_signal(pre, mapping.n_fft, j)
    return papr(time, oversampling=j, mode=mode)


def papr_ccdf(mode: str, n_sc: int, n_fft: int, alphabet_order: int,
              n_symbols: int, rng: np.random.Generator, *, n_tx: int = 1,
              n_layers: int = 1, j: int = DEFAULT_OVERSAMPLING
              ) -> tuple[np.ndarray, np.ndarray]:
    """Empirical CCDF of per-symbol PAPR in dB over the standard grid.

    Returns (grid_db, ccdf) with ccdf[i] = P(PAPR_dB > grid_db[i]).
    """
    alphabet = modulation.qam_alphabet(alphabet_order)
    mapping = phy.SubcarrierMapping(n_sc=n_sc, n_fft=n_fft)
    w = scaled_identity(n_tx, n_layers)
    m = alphabet.bits_per_symbol
    values = np.empty(n_symbols)
    for i in range(n_symbols):
        bits = rng.integers(0, 2, size=n_layers * n_sc * m)
        col = modulation.modulate_qam(bits, alphabet).reshape(n_layers, n_sc)
        values[i] = symbol_papr(col, w, mapping, mode, j).papr_db
    ccdf = (values[None, :] > CCDF_GRID_DB[:, None]).mean(axis=1)
    return CCDF_GRID_DB.copy(), ccdf


def ccdf_level_db(grid_db: np.ndarray, ccdf: np.ndarray, level: float) -> float:
    """PAPR in dB at which the CCDF crosses ``level`` (linear interpolation)."""
    above = np.nonzero(ccdf > level)[0]
    if above.size == 0:
        return float(grid_db[0])
    i = above[-1]
    if i + 1 >= len(grid_db):
        return float(grid_db[-1])
    c0, c1 = ccdf[i], ccdf[i + 1]
    if c0 == c1:
        return float(grid_db[i])
    frac = (c0 - level) / (c0 - c1)
    return float(grid_db[i] + frac * (grid_db[i + 1] - grid_db[i]))
