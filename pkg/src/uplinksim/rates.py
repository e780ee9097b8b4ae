"""Achievable rates, the inverse-Wishart rate estimate, BICM capacity,
water-filling capacity bounds."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import modulation
from .codebooks import codebook
from .sinr import SinrReport, zf_scfdm_layer_snrs


@dataclass(frozen=True)
class RateReport:
    mode: str
    bits_per_symbol: float
    per_layer: np.ndarray = field(repr=False)


def achievable_rate(report: SinrReport, n_sc: int | None = None) -> RateReport:
    """Gaussian-signalling achievable rate in bits per OFDM/SC-FDM symbol.

    OFDM sums log2(1+SINR) over subcarriers and layers; SC-FDM multiplies
    the per-layer sum by the subcarrier count. Degenerate entries contribute
    zero with a warning.
    """
    s = np.array(report.sinr, dtype=float)
    if report.degenerate.any():
        warnings.warn("degenerate SINR entries contribute zero rate",
                      stacklevel=2)
        s[report.degenerate] = 0.0
    if report.mode == "OFDM":
        per_layer = np.log2(1.0 + s).sum(axis=1)
    else:
        if n_sc is None:
            raise ValueError("SC-FDM rate needs the subcarrier count")
        per_layer = n_sc * np.log2(1.0 + s)
    return RateReport(mode=report.mode, bits_per_symbol=float(per_layer.sum()),
                      per_layer=per_layer)


def _wishart_scale_diag(c_t: np.ndarray, w: np.ndarray) -> np.ndarray:
    c = np.linalg.inv(w.conj().T @ c_t @ w)
    return np.diag(c).real


def scfdm_rate_estimate(c_t: np.ndarray, w: np.ndarray, snr: float,
                        n_rx: int, n_layers: int, n_sc: int) -> float:
    """Closed-form estimate of the mean ZF SC-FDM rate over semi-correlated
    Rayleigh fading; exists only for n_rx > L (inverse-Wishart first moment).
    """
    if n_rx <= n_layers:
        raise ValueError(
            f"rate estimate requires n_rx > n_layers: the diagonal of the "
            f"inverse Wishart matrix has no finite first moment for "
            f"n_rx={n_rx}, L={n_layers}")
    c_diag = _wishart_scale_diag(c_t, w)
    return float(n_sc * np.log2(1.0 + snr * (n_rx - n_layers) / c_diag).sum())


def high_snr_rate_approx(c_t: np.ndarray, w: np.ndarray, snr: float,
                         n_rx: int, n_layers: int, n_sc: int) -> float:
    """High-SNR approximation of the rate estimate (geometric-mean form)."""
    if n_rx <= n_layers:
        raise ValueError("approximation requires n_rx > n_layers")
    c_diag = _wishart_scale_diag(c_t, w)
    gmean = float(np.exp(np.mean(np.log(c_diag))))
    return float(n_sc * n_layers * (np.log2(snr / gmean)
                                    + np.log2(n_rx - n_layers)))


@dataclass(frozen=True)
class BicmTable:
    """Monotone SINR(dB) -> bits/channel-use map for one QAM alphabet."""

    order: int
    grid_db: np.ndarray = field(repr=False)
    bits: np.ndarray = field(repr=False)

    def capacity(self, sinr) -> np.ndarray:
        """Interpolated BICM capacity at linear SINR (0 below/at 0)."""
        s = np.asarray(sinr, dtype=float)
        out = np.zeros_like(s, dtype=float)
        pos = s > 0
        db = 10.0 * np.log10(s, where=pos, out=np.full_like(s, -np.inf))
        out[pos] = np.interp(db[pos], self.grid_db, self.bits)
        return out if out.ndim else float(out)


def build_bicm_table(order: int, grid_db: np.ndarray, n_samples: int,
                     rng: np.random.Generator, chunk: int = 20000) -> BicmTable:
    """Monte-Carlo integration of the BICM mutual information over AWGN."""
    alphabet = modulation.qam_alphabet(order)
    pts = alphabet.points
    m = alphabet.bits_per_symbol
    bt = alphabet.bit_table.astype(bool)  # (order, m)
    grid_db = np.asarray(grid_db, dtype=float)
    bits = np.empty(len(grid_db))
    for gi, snr_db in enumerate(grid_db):
        sigma2 = 10.0 ** (-snr_db / 10.0)
        loss = 0.0
        done = 0
        while done < n_samples:
            n = min(chunk, n_samples - done)
            sym_idx = rng.integers(0, order, n)
            noise = np.sqrt(sigma2 / 2) * (rng.standard_normal(n)
                                           + 1j * rng.standard_normal(n))
            y = pts[sym_idx] + noise
            metric = -np.abs(y[:, None] - pts[None, :]) ** 2 / sigma2
            peak = metric.max(axis=1, keepdims=True)
            expm = np.exp(metric - peak)
            num = np.log(expm.sum(axis=1))
            for b in range(m):
                tx_bit = bt[sym_idx, b]
                mask = bt[None, :, b] == tx_bit[:, None]
                den = np.log(np.where(mask, expm, 0.0).sum(axis=1))
                loss += (num - den).sum() / np.log(2)
            done += n
        bits[gi] = m - loss / n_samples
    bits = np.maximum.accumulate(np.clip(bits, 0.0, m))
    return BicmTable(order=order, grid_db=grid_db, bits=bits)


def waterfill(gains: np.ndarray, total_power: float,
              tol: float = 1e-9) -> np.ndarray:
    """Water-filling power allocation by bisection on the water level.

    gains are channel-to-noise ratios per stream; the returned powers sum
    to total_power within tol (absolute, scaled by the budget).
    """
    g = np.asarray(gains, dtype=float)
    if np.any(g < 0) or total_power <= 0:
        raise ValueError("gains must be nonnegative and power positive")
    p = np.zeros_like(g)
    active = g > 0
    if not active.any():
        return p
    inv = 1.0 / g[active]
    lo = inv.min()
    hi = inv.max() + total_power
    budget_tol = tol * max(1.0, total_power)
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        alloc = np.clip(mu - inv, 0.0, None)
        total = alloc.sum()
        if abs(total - total_power) <= budget_tol:
            break
        if total > total_power:
            hi = mu
        else:
            lo = mu
    # exact feasibility on the active set
    on = alloc > 0
    if on.any():
        alloc[on] += (total_power - alloc.sum()) / on.sum()
        alloc = np.clip(alloc, 0.0, None)
    p[active] = alloc
    return p


@dataclass(frozen=True)
class CapacityBounds:
    """Per-OFDM-symbol bounds: capacity >= achievable >= bicm_bound."""

    capacity: float
    achievable: float
    bicm_bound: float


def capacity_bounds(h: np.ndarray, sigma_x2: float, sigma_n2: float,
                    bicm_tables: dict[int, BicmTable],
                    pilot_overhead: float = 1.0 / 6.0) -> CapacityBounds:
    """SVD water-filling capacity, its pilot-overhead discount, and the
    equal-power codebook-precoded ZF BICM bound, all in bits per symbol.
    """
    n_sc, n_rx, n_tx = h.shape
    sv = np.linalg.svd(h, compute_uv=False)  # (n_sc, min(n_rx, n_tx))
    gains = (sv ** 2 / sigma_n2).ravel()
    powers = waterfill(gains, total_power=n_sc * sigma_x2)
    cap = float(np.log2(1.0 + powers * gains).sum())
    achievable = cap * (1.0 - pilot_overhead)

    def f(snr_lin) -> float:
        return float(sum(max(t.capacity(s) for t in bicm_tables.values())
                         for s in np.atleast_1d(snr_lin)))

    best = 0.0
    for rank in range(1, min(n_rx, n_tx) + 1):
        for pre in codebook(n_tx, rank):
            try:
                snrs = zf_scfdm_layer_snrs(h, pre.w, sigma_x2, sigma_n2)
            except np.linalg.LinAlgError:
                continue
            best = max(best, n_sc * f(snrs))
    return CapacityBounds(capacity=cap, achievable=achievable,
                          bicm_bound=best * (1.0 - pilot_overhead))
