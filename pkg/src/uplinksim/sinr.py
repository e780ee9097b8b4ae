"""Closed-form post-equalization SINR for SC-FDM and OFDM.

The SC-FDM expressions exploit the block-circulant structure of the
composite input-output matrix: only the per-subcarrier diagonals of F H_eff
and the Frobenius norms of its layer rows enter, so nothing of size
n_sc x n_sc is ever materialized.
"""

from dataclasses import dataclass, field

import numpy as np

from .phy import Equalizer


@dataclass(frozen=True)
class SinrReport:
    """Linear post-equalization SINR: (L,) for SC-FDM, (L, n_sc) for OFDM."""

    mode: str
    sinr: np.ndarray = field(repr=False)
    sigma_x2: float
    sigma_n2: float
    degenerate: np.ndarray = field(repr=False)

    @property
    def n_layers(self) -> int:
        return self.sinr.shape[0]


def scfdm_sinr(g: np.ndarray, eq: Equalizer, sigma_x2: float,
               sigma_n2: float) -> SinrReport:
    """Per-layer SC-FDM SINR, constant over subcarriers within a layer.

    g is the effective channel (n_sc, n_rx, L); eq the matching equalizer.
    """
    n_sc = g.shape[0]
    fg = eq.f @ g  # (n_sc, L, L)
    n_layers = fg.shape[1]
    k = np.arange(n_layers)
    own_diag_sum = fg[:, k, k].sum(axis=0)  # (L,)
    signal = sigma_x2 * np.abs(own_diag_sum) ** 2 / n_sc
    row_energy = sigma_x2 * (np.abs(fg) ** 2).sum(axis=(0, 2))
    noise = sigma_n2 * (np.abs(eq.f) ** 2).sum(axis=(0, 2))
    denom = row_energy - signal + noise
    degenerate = (denom <= 0) | ~np.isfinite(denom) | ~np.isfinite(signal)
    sinr = np.full(n_layers, np.inf)
    ok = ~degenerate
    sinr[ok] = signal[ok] / denom[ok]
    return SinrReport(mode="SC-FDM", sinr=sinr, sigma_x2=sigma_x2,
                      sigma_n2=sigma_n2, degenerate=degenerate)


def ofdm_sinr(h: np.ndarray, w: np.ndarray, eq: Equalizer, sigma_x2: float,
              sigma_n2: float) -> SinrReport:
    """Per-layer, per-subcarrier OFDM SINR, shape (L, n_sc)."""
    fg = eq.f @ (h @ w)  # (n_sc, L, L)
    n_sc, n_layers = fg.shape[0], fg.shape[1]
    k = np.arange(n_layers)
    own = fg[:, k, k]  # (n_sc, L)
    signal = sigma_x2 * np.abs(own) ** 2
    row_energy = sigma_x2 * (np.abs(fg) ** 2).sum(axis=2)
    noise = sigma_n2 * (np.abs(eq.f) ** 2).sum(axis=2)
    denom = row_energy - signal + noise
    degenerate = (denom <= 0) | ~np.isfinite(denom) | eq.degenerate[:, None]
    sinr = np.full((n_sc, n_layers), np.inf)
    ok = ~degenerate
    sinr[ok] = signal[ok] / denom[ok]
    return SinrReport(mode="OFDM", sinr=sinr.T, sigma_x2=sigma_x2,
                      sigma_n2=sigma_n2, degenerate=degenerate.T)


def zf_scfdm_siso_snr(gains2: np.ndarray, sigma_x2: float,
                      sigma_n2: float) -> tuple[float, bool]:
    """SISO ZF SC-FDM SNR: snr times the harmonic mean of |H_k|^2.

    Returns (snr, degenerate); any zero gain collapses the harmonic mean.
    """
    gains2 = np.asarray(gains2, dtype=float)
    if np.any(gains2 <= 0):
        return 0.0, True
    hmean = 1.0 / np.mean(1.0 / gains2)
    return float(sigma_x2 / sigma_n2 * hmean), False


def ofdm_zf_siso_snr(gains2: np.ndarray, sigma_x2: float,
                     sigma_n2: float) -> np.ndarray:
    """Per-subcarrier SISO ZF OFDM SNR vector."""
    return sigma_x2 / sigma_n2 * np.asarray(gains2, dtype=float)


def mmse_scfdm_siso_sinr(gains2: np.ndarray, sigma_x2: float,
                         sigma_n2: float) -> float:
    """SISO MMSE SC-FDM SINR via the regularized harmonic-mean form."""
    if sigma_n2 <= 0:
        raise ValueError("MMSE form needs sigma_n2 > 0")
    rho = sigma_n2 / sigma_x2
    m = np.mean(1.0 / (rho + np.asarray(gains2, dtype=float)))
    return float(sigma_x2 / sigma_n2 * (1.0 / m - rho))


def mmse_sinr_upper_bound(gains2: np.ndarray, sigma_x2: float,
                          sigma_n2: float) -> float:
    """Low-SNR-tight upper bound snr * max_k |H_k|^2; checked against MMSE."""
    bound = float(sigma_x2 / sigma_n2 * np.max(np.asarray(gains2, dtype=float)))
    if bound < mmse_scfdm_siso_sinr(gains2, sigma_x2, sigma_n2) * (1 - 1e-12):
        raise ArithmeticError("upper bound fell below the MMSE SINR")
    return bound


def zf_scfdm_layer_snrs(h: np.ndarray, w: np.ndarray, sigma_x2: float,
                        sigma_n2: float) -> np.ndarray:
    """All-layer ZF SC-FDM SNRs for n_rx >= L via the inverse-Gram means."""
    g = h @ w
    gram = g.conj().swapaxes(1, 2) @ g
    s = np.linalg.svd(g, compute_uv=False)
    if np.any(s[:, -1] <= 1e-12 * s[:, 0]):
        raise np.linalg.LinAlgError("rank-deficient effective channel")
    inv = np.linalg.inv(gram)
    k = np.arange(gram.shape[1])
    inv_diag = inv[:, k, k].real.mean(axis=0)
    return sigma_x2 / sigma_n2 / inv_diag


def zf_scfdm_mimo_snr(h: np.ndarray, w: np.ndarray, sigma_x2: float,
                      sigma_n2: float, layer: int) -> float:
    """Per-layer ZF SC-FDM SNR for n_rx >= L via the inverse-Gram mean."""
    return float(zf_scfdm_layer_snrs(h, w, sigma_x2, sigma_n2)[layer])
