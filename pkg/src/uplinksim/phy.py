"""Transceiver chain: DFT spreading, precoding, OFDM with CP, equalization.

The mode string is "SC-FDM" (spreading enabled) or "OFDM" (spreading is the
identity). Resource grids are arrays of shape (n_layers, n_sc, n_symbols).
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import BlockMatrix, dft_matrix

SUBCARRIER_SPACING = 15e3
MODES = ("SC-FDM", "OFDM")

# n_sc, n_fft per LTE bandwidth
BANDWIDTH_DIMS = {1.4e6: (72, 128), 5e6: (300, 512), 10e6: (600, 1024)}

SYMBOLS_PER_SLOT = {"normal": 7, "extended": 6}
CP_DURATIONS = {"normal": 4.7e-6, "extended": 16.7e-6}

# DMRS sits at OFDM symbol n=3 of each slot
DMRS_SYMBOL_IN_SLOT = 3


def _check_mode(mode: str):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass(frozen=True)
class SubcarrierMapping:
    """Localized mapping of n_sc contiguous bins to the center of the FFT."""

    n_sc: int
    n_fft: int

    def __post_init__(self):
        if not 1 <= self.n_sc <= self.n_fft:
            raise ValueError(f"invalid mapping {self.n_sc}/{self.n_fft}")

    @property
    def bins(self) -> np.ndarray:
        start = (self.n_fft - self.n_sc) // 2
        return start + np.arange(self.n_sc)


@dataclass(frozen=True)
class CpConfig:
    kind: str
    duration: float
    n_samples: int

    @classmethod
    def for_fft(cls, n_fft: int, kind: str = "normal") -> "CpConfig":
        duration = CP_DURATIONS[kind]
        fs = n_fft * SUBCARRIER_SPACING
        return cls(kind=kind, duration=duration,
                   n_samples=int(round(duration * fs)))


def dmrs_symbol_indices(n_symbols: int, symbols_per_slot: int = 7) -> list[int]:
    return [s * symbols_per_slot + DMRS_SYMBOL_IN_SLOT
            for s in range(n_symbols // symbols_per_slot)]


def spread(x: np.ndarray, mode: str = "SC-FDM") -> np.ndarray:
    """Per-layer DFT spreading along axis 1 of (n_layers, n_sc, ...)."""
    _check_mode(mode)
    if mode == "OFDM":
        return np.asarray(x)
    return np.fft.fft(x, axis=1) / np.sqrt(x.shape[1])


def despread(x: np.ndarray, mode: str = "SC-FDM") -> np.ndarray:
    _check_mode(mode)
    if mode == "OFDM":
        return np.asarray(x)
    return np.fft.ifft(x, axis=1) * np.sqrt(x.shape[1])


def transmit_pre_ifft(grid: np.ndarray, w: np.ndarray,
                      mapping: SubcarrierMapping, mode: str) -> np.ndarray:
    """Per-antenna frequency vectors right before the IFFT.

    Returns (n_symbols, n_tx, n_fft); this is the PAPR measurement input.
    """
    _check_mode(mode)
    n_layers, n_sc, n_sym = grid.shape
    if w.shape[1] != n_layers or n_sc != mapping.n_sc:
        raise ValueError("grid/precoder/mapping dimensions disagree")
    spread_grid = spread(grid, mode)
    ant = np.einsum("tl,lks->skt", w, spread_grid)  # (n_sym, n_sc, n_tx)
    pre = np.zeros((n_sym, w.shape[0], mapping.n_fft), dtype=complex)
    pre[:, :, mapping.bins] = np.swapaxes(ant, 1, 2)
    return pre


def transmit(grid: np.ndarray, w: np.ndarray, mapping: SubcarrierMapping,
             cp: CpConfig, mode: str) -> np.ndarray:
    """Full transmitter chain; returns time samples (n_tx, n_samples)."""
    pre = transmit_pre_ifft(grid, w, mapping, mode)
    body = np.fft.ifft(pre, axis=2) * np.sqrt(mapping.n_fft)
    with_cp = np.concatenate([body[:, :, -cp.n_samples:], body], axis=2)
    n_sym, n_tx, sym_len = with_cp.shape
    return np.swapaxes(with_cp, 0, 1).reshape(n_tx, n_sym * sym_len)


def ofdm_demodulate(samples: np.ndarray, mapping: SubcarrierMapping,
                    cp: CpConfig) -> np.ndarray:
    """CP removal plus FFT plus demapping: (n_rx, n_sc, n_symbols)."""
    n_rx, total = samples.shape
    sym_len = mapping.n_fft + cp.n_samples
    if total % sym_len:
        raise ValueError("sample count is not a whole number of symbols")
    n_sym = total // sym_len
    sym = samples.reshape(n_rx, n_sym, sym_len)[:, :, cp.n_samples:]
    freq = np.fft.fft(sym, axis=2) / np.sqrt(mapping.n_fft)
    return np.moveaxis(freq[:, :, mapping.bins], 1, 2)


@dataclass(frozen=True)
class Equalizer:
    """Per-subcarrier one-tap equalizers F_k of shape (n_sc, L, n_rx)."""

    kind: str
    f: np.ndarray = field(repr=False)
    degenerate: np.ndarray = field(repr=False)  # bool per subcarrier
    noise_var: float = 0.0
    signal_var: float = 1.0


def build_equalizer(g: np.ndarray, kind: str, noise_var: float = 0.0,
                    signal_var: float = 1.0,
                    singular_tol: float = 1e-12) -> Equalizer:
    """ZF or MMSE equalizer for the effective channel g (n_sc, n_rx, L)."""
    g = np.asarray(g)
    n_sc, n_rx, n_layers = g.shape
    gh = g.conj().swapaxes(1, 2)
    gram = gh @ g  # (n_sc, L, L)
    if kind == "ZF":
        s = np.linalg.svd(g, compute_uv=False)
        degenerate = s[:, -1] <= singular_tol * np.maximum(s[:, 0], 1e-300)
        a = gram.copy()
        a[degenerate] = np.eye(n_layers)
        f = np.linalg.solve(a, gh)
        f[degenerate] = 0.0
    elif kind == "MMSE":
        if noise_var < 0 or signal_var <= 0:
            raise ValueError("MMSE needs signal_var > 0 and noise_var >= 0")
        reg = (noise_var / signal_var) * np.eye(n_layers)
        f = np.linalg.solve(gram + reg, gh)
        degenerate = np.zeros(n_sc, dtype=bool)
        if noise_var == 0.0:
            s = np.linalg.svd(g, compute_uv=False)
            degenerate = s[:, -1] <= singular_tol * np.maximum(s[:, 0], 1e-300)
    else:
        raise ValueError(f"unknown equalizer kind {kind!r}")
    return Equalizer(kind=kind, f=f, degenerate=degenerate,
                     noise_var=noise_var, signal_var=signal_var)


def equalize(y: np.ndarray, eq: Equalizer, mode: str) -> np.ndarray:
    """Equalize and de-spread received bins (n_rx, n_sc, n_symbols)."""
    xhat = np.einsum("klr,rks->lks", eq.f, y)
    return despread(xhat, mode)


def receive(samples: np.ndarray, eq: Equalizer, mapping: SubcarrierMapping,
            cp: CpConfig, mode: str) -> np.ndarray:
    """Full receiver chain: time samples to resource-grid estimates."""
    return equalize(ofdm_demodulate(samples, mapping, cp), eq, mode)


def compose_input_output(g: np.ndarray, eq: Equalizer, mode: str) -> BlockMatrix:
    """Dense composite input-output matrix K (oracle-scale sizes only).

    For SC-FDM the (l, l') blocks are circulant; for OFDM they are diagonal.
    """
    _check_mode(mode)
    n_sc, _, n_layers = g.shape
    fg = eq.f @ g  # (n_sc, L, L)
    data = np.zeros((n_layers * n_sc, n_layers * n_sc), dtype=complex)
    d = dft_matrix(n_sc)
    k = np.arange(n_sc)
    for l in range(n_layers):
        for lp in range(n_layers):
            diag = fg[:, l, lp]
            if mode == "OFDM":
                data[l * n_sc + k, lp * n_sc + k] = diag
            else:
                data[l * n_sc:(l + 1) * n_sc, lp * n_sc:(lp + 1) * n_sc] = (
                    d.conj().T @ (diag[:, None] * d)
                )
    return BlockMatrix(data=data, grid=(n_layers, n_layers))


def dump_waveform(path, samples: np.ndarray) -> None:
    """Write samples as raw little-endian float64 (re, im) pairs."""
    np.ascontiguousarray(samples, dtype="<c16").tofile(path)


def load_waveform(path, n_streams: int = 1) -> np.ndarray:
    data = np.fromfile(path, dtype="<c16")
    return data.reshape(n_streams, -1)
