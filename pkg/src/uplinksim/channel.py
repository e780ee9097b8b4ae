"""Fading channel generation and the three channel abstractions.

Channels live in three equivalent forms: tapped-delay-line realizations in
time (block-Toeplitz convolution matrices), per-subcarrier matrices after
CP handling and FFTs, and effective per-layer matrices after precoding.
The per-subcarrier path is the production one; the Toeplitz path exists as
an oracle.

Per-subcarrier channels are plain arrays of shape (n_sc, n_rx, n_tx);
effective channels are (n_sc, n_rx, n_layers).
"""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .numerics import BlockMatrix

GRANULARITIES = {"symbol": 1, "slot": 7, "subframe": 14, "static": 0}


@dataclass(frozen=True)
class TapDelayProfile:
    """Tapped-delay-line power profile; powers linear and normalized to 1."""

    name: str
    delays: np.ndarray  # seconds, nondecreasing
    powers: np.ndarray  # linear, sum 1
    kind: str = "custom"

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=float)
        p = np.asarray(self.powers, dtype=float)
        if d.shape != p.shape or d.ndim != 1 or d.size == 0:
            raise ValueError("delays and powers must be equal-length 1-D arrays")
        if np.any(np.diff(d) < 0):
            raise ValueError("tap delays must be nondecreasing")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("tap powers must be nonnegative and sum to 1")
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "powers", p)

    @classmethod
    def from_dict(cls, spec: dict) -> "TapDelayProfile":
        """Build from the shipped schema: delays in ns, powers in dB."""
        p = 10.0 ** (np.asarray(spec["powers_db"], dtype=float) / 10.0)
        return cls(
            name=spec["name"],
            delays=np.asarray(spec["delays_ns"], dtype=float) * 1e-9,
            powers=p / p.sum(),
            kind=spec.get("kind", "custom"),
        )

    @classmethod
    def named(cls, name: str) -> "TapDelayProfile":
        """Load one of the shipped profiles (PedB, VehA, TU)."""
        fname = name.lower() + ".json"
        ref = resources.files("uplinksim.profiles").joinpath(fname)
        with ref.open("r") as fh:
            return cls.from_dict(json.load(fh))

    def sampled(self, sample_rate: float) -> tuple[np.ndarray, np.ndarray]:
        """Quantize delays to the sample grid, merging taps that collide."""
        idx = np.round(self.delays * sample_rate).astype(int)
        uniq = np.unique(idx)
        powers = np.array([self.powers[idx == u].sum() for u in uniq])
        return uniq, powers


def flat_profile() -> TapDelayProfile:
    return TapDelayProfile("flat", np.array([0.0]), np.array([1.0]))


@dataclass(frozen=True)
class ChannelRealization:
    """Tap gains per (rx, tx) link across fading instants.

    ``taps`` has shape (n_rx, n_tx, n_instants, n_taps); ``delay_samples``
    gives each tap's integer delay at ``sample_rate``. Fading instants are
    granule starts per the configured block-fading granularity.
    """

    taps: np.ndarray
    delay_samples: np.ndarray
    sample_rate: float
    speed: float
    granularity: str
    doppler: str = "jakes-sos"

    @property
    def n_rx(self) -> int:
        return self.taps.shape[0]

    @property
    def n_tx(self) -> int:
        return self.taps.shape[1]

    def time_index(self, symbol: int) -> int:
        step = GRANULARITIES[self.granularity]
        return 0 if step == 0 else symbol // step

    def taps_at(self, symbol: int) -> np.ndarray:
        """Tap gains (n_rx, n_tx, n_taps) in effect during OFDM symbol n."""
        return self.taps[:, :, self.time_index(symbol), :]


def draw_taps(profile: TapDelayProfile, n_rx: int, n_tx: int, n_symbols: int,
              sample_rate: float, rng: np.random.Generator, *,
              speed: float = 0.0, carrier_freq: float = 2.1e9,
              granularity: str = "static", symbol_duration: float | None = None,
              n_sinusoids: int = 32) -> ChannelRealization:
    """Draw a Rayleigh tapped-delay-line realization.

    With ``speed`` > 0, each tap evolves as a Jakes-spectrum
    sum-of-sinusoids process sampled at granule starts; taps are constant
    within one OFDM symbol.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity {granularity!r}")
    delays, powers = profile.sampled(sample_rate)
    step = GRANULARITIES[granularity]
    n_inst = 1 if step == 0 else -(-n_symbols // step)
    n_taps = delays.size

    if speed == 0.0:
        g = rng.standard_normal((n_rx, n_tx, 1, n_taps, 2))
        taps = (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2)
        taps = np.broadcast_to(taps * np.sqrt(powers), (n_rx, n_tx, n_inst, n_taps)).copy()
    else:
        if symbol_duration is None:
            raise ValueError("symbol_duration required when speed > 0")
        f_d = speed / 299792458.0 * carrier_freq
        times = np.arange(n_inst) * (step if step else 1) * symbol_duration
        theta = rng.uniform(0, 2 * np.pi, (n_rx, n_tx, n_taps, n_sinusoids))
        phi = rng.uniform(0, 2 * np.pi, (n_rx, n_tx, n_taps, n_sinusoids))
        omega = 2 * np.pi * f_d * np.cos(theta)
        phase = omega[..., None, :] * times[:, None] + phi[..., None, :]
        taps = np.exp(1j * phase).sum(axis=-1) / np.sqrt(n_sinusoids)
        taps = np.swapaxes(taps, 2, 3) * np.sqrt(powers)  # (n_rx, n_tx, n_inst, n_taps)

    return ChannelRealization(
        taps=taps, delay_samples=delays, sample_rate=sample_rate,
        speed=speed, granularity=granularity,
    )


def evolve_time(realization: ChannelRealization, symbol: int) -> np.ndarray:
    """Taps in effect during OFDM symbol ``symbol`` (constant within it)."""
    return realization.taps_at(symbol)


def taps_to_frequency(taps: np.ndarray, delay_samples: np.ndarray,
                      n_fft: int, bins: np.ndarray) -> np.ndarray:
    """Per-subcarrier response H[k, i, t] at given FFT bins.

    ``taps`` is (..., n_taps); the result is (n_sc, ...) with the tap axis
    contracted against exp(-2j*pi*bin*delay/n_fft).
    """
    ek = np.exp(-2j * np.pi * np.outer(bins, delay_samples) / n_fft)
    return np.tensordot(ek, taps, axes=([1], [taps.ndim - 1]))


def draw_iid_rayleigh(n_rx: int, n_tx: int, n_sc: int,
                      rng: np.random.Generator) -> np.ndarray:
    """(n_sc, n_rx, n_tx) of iid unit-variance circular complex Gaussians."""
    if min(n_rx, n_tx, n_sc) < 1:
        raise ValueError("dimensions must be >= 1")
    g = rng.standard_normal((n_sc, n_rx, n_tx, 2))
    return (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2)


def psd_sqrt(c: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix."""
    w, v = np.linalg.eigh((c + c.conj().T) / 2)
    if w.min() < -tol * max(w.max(), 1.0):
        raise ValueError("correlation matrix is not positive semidefinite")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def draw_semicorrelated(n_rx: int, n_tx: int, c_t: np.ndarray, n_sc: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Semi-correlated Rayleigh draw: rows of each H_k have covariance c_t."""
    root = psd_sqrt(np.asarray(c_t))
    h = draw_iid_rayleigh(n_rx, n_tx, n_sc, rng)
    return h @ root


def uniform_correlation(n: int, rho: float) -> np.ndarray:
    """Unit-diagonal correlation matrix with constant off-diagonal rho."""
    return np.full((n, n), rho) + (1.0 - rho) * np.eye(n)


def build_toeplitz(realization: ChannelRealization, n_fft: int, n_cp: int,
                   symbol: int = 0) -> BlockMatrix:
    """Block-Toeplitz time-domain convolution matrix for one OFDM symbol."""
    n = n_fft + n_cp
    if realization.delay_samples.max() >= n:
        raise ValueError("channel delay spread exceeds the matrix span")
    taps = realization.taps_at(symbol)
    n_rx, n_tx = taps.shape[:2]
    data = np.zeros((n * n_rx, n * n_tx), dtype=complex)
    rows = np.arange(n)
    for i in range(n_rx):
        for t in range(n_tx):
            block = np.zeros((n, n), dtype=complex)
            for d, g in zip(realization.delay_samples, taps[i, t]):
                block[rows[d:], rows[d:] - d] = g
            data[i * n:(i + 1) * n, t * n:(t + 1) * n] = block
    return BlockMatrix(data=data, grid=(n_rx, n_tx))


def diagonalize(toeplitz: BlockMatrix, n_fft: int, n_cp: int,
                bins: np.ndarray) -> tuple[np.ndarray, float]:
    """CP addition/removal plus DFTs, restricted to the mapped bins.

    Returns the per-subcarrier channel (n_sc, n_rx, n_tx) and the largest
    off-diagonal magnitude left in any (rx, tx) block; the leakage is
    reported, not fatal, so short-CP scenarios remain inspectable.
    """
    n_rx, n_tx = toeplitz.grid
    n_sc = len(bins)
    h = np.empty((n_sc, n_rx, n_tx), dtype=complex)
    leakage = 0.0
    for i in range(n_rx):
        for t in range(n_tx):
            block = toeplitz.block(i, t)
            circ = block[n_cp:, :] @ _cp_add(n_fft, n_cp)
            b = np.fft.fft(np.fft.ifft(circ, axis=1), axis=0)
            off = b - np.diag(np.diag(b))
            leakage = max(leakage, float(np.abs(off).max()))
            h[:, i, t] = np.diag(b)[bins]
    return h, leakage


def _cp_add(n_fft: int, n_cp: int) -> np.ndarray:
    p = np.zeros((n_fft + n_cp, n_fft))
    p[:n_cp, n_fft - n_cp:] = np.eye(n_cp)
    p[n_cp:, :] = np.eye(n_fft)
    return p


def effective(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Effective per-layer channel G[k] = H_k W, shape (n_sc, n_rx, L)."""
    h = np.asarray(h)
    w = np.asarray(w)
    if h.ndim != 3 or w.ndim != 2 or h.shape[2] != w.shape[0]:
        raise ValueError(
            f"shape mismatch: channel {h.shape}, precoder {w.shape}"
        )
    return h @ w


def effective_dense(g: np.ndarray) -> BlockMatrix:
    """Materialize the effective channel as its dense block-diagonal form."""
    n_sc, n_rx, n_layers = g.shape
    data = np.zeros((n_rx * n_sc, n_layers * n_sc), dtype=complex)
    k = np.arange(n_sc)
    for i in range(n_rx):
        for l in range(n_layers):
            data[i * n_sc + k, l * n_sc + k] = g[:, i, l]
    return BlockMatrix(data=data, grid=(n_rx, n_layers))
