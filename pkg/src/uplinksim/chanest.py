"""Pilot-based channel estimation at the DMRS symbol.

All estimators see the received pilot vector y per receive antenna,
y = sum_l Diag(r_l) h_l + noise, and return per-layer estimates of the
effective channels h_l (length n_sc each).
"""

from functools import lru_cache

import numpy as np

from .dmrs import DmrsMatrix

# Sliding-average window per layer count; wider windows null the faster
# pilot phase ramps of higher ranks.
SAV_WINDOWS = {1: 1, 2: 2, 3: 4, 4: 4}

DFT_WINDOW_KINDS = ("causal", "centered")


def correlation_estimate(y: np.ndarray, dmrs: DmrsMatrix) -> np.ndarray:
    """Matched-filter estimate (R^l)^H y; carries inter-layer interference."""
    return dmrs.r.conj() * y


def dft_based_estimate(h_tilde: np.ndarray, n_layers: int,
                       window: str = "causal") -> np.ndarray:
    """Time-domain windowing of the correlation output.

    The layer's own impulse response sits at delay zero after correlation
    while other layers are cyclically shifted away; a rectangular window of
    floor(n_sc / L) delay bins anchored at the layer's position keeps the
    own response and rejects the rest.
    """
    if n_layers > 4:
        raise ValueError("windows overlap beyond 4 layers")
    if window not in DFT_WINDOW_KINDS:
        raise ValueError(f"window must be one of {DFT_WINDOW_KINDS}")
    h_tilde = np.asarray(h_tilde)
    n_sc = h_tilde.shape[-1]
    width = n_sc // n_layers
    t = np.fft.ifft(h_tilde, axis=-1)
    keep = np.zeros(n_sc, dtype=bool)
    if window == "causal":
        keep[:width] = True
    else:
        half = width // 2
        keep[(np.arange(width) - half) % n_sc] = True
    return np.fft.fft(np.where(keep, t, 0.0), axis=-1)


@lru_cache(maxsize=None)
def _sav_matrix(n_sc: int, gamma: int) -> np.ndarray:
    """Averaging matrix of the double-sum sliding window.

    Interior rows carry the triangular weights of the full double sum; at
    the band edges the range of window shifts shrinks while each averaging
    window keeps its full length, preserving the phase-ramp cancellation
    on every subcarrier.
    """
    w = np.zeros((n_sc, n_sc))
    for k in range(n_sc):
        t_lo = max(0, k - gamma + 1)
        t_hi = min(k, n_sc - gamma)
        shifts = range(t_lo, t_hi + 1)
        for t in shifts:
            w[k, t:t + gamma] += 1.0 / (gamma * len(shifts))
    w.setflags(write=False)
    return w


def sliding_average_estimate(h_tilde: np.ndarray, n_layers: int) -> np.ndarray:
    """Double-sum sliding average over adjacent subcarriers."""
    h_tilde = np.asarray(h_tilde)
    w = _sav_matrix(h_tilde.shape[-1], SAV_WINDOWS[n_layers])
    return h_tilde @ w.T


@lru_cache(maxsize=None)
def _qs_matrix(n_sc: int, lam: float) -> np.ndarray:
    """(I + lam Q^T Q)^-1 for the (n_sc-2) x n_sc second-difference Q."""
    q = np.zeros((n_sc - 2, n_sc))
    idx = np.arange(n_sc - 2)
    q[idx, idx] = 1.0
    q[idx, idx + 1] = -2.0
    q[idx, idx + 2] = 1.0
    m = np.linalg.inv(np.eye(n_sc) + lam * (q.T @ q))
    m.setflags(write=False)
    return m


def quadratic_smoothing_estimate(y: np.ndarray, dmrs: DmrsMatrix,
                                 lam: float = 10.0) -> np.ndarray:
    """Second-difference smoothing of the correlation estimate."""
    if lam < 0:
        raise ValueError("smoothing factor must be nonnegative")
    h_tilde = correlation_estimate(y, dmrs)
    return h_tilde @ _qs_matrix(h_tilde.shape[-1], float(lam)).T


def dmrs_stack(dmrs_set: list[DmrsMatrix]) -> np.ndarray:
    """Wide pilot matrix R = [Diag(r_1) ... Diag(r_L)], (n_sc, L n_sc)."""
    n_sc = dmrs_set[0].r.shape[0]
    n_layers = len(dmrs_set)
    r = np.zeros((n_sc, n_layers * n_sc), dtype=complex)
    k = np.arange(n_sc)
    for l, d in enumerate(dmrs_set):
        r[k, l * n_sc + k] = d.r
    return r


def profile_prior(powers: np.ndarray, delay_samples: np.ndarray, n_fft: int,
                  bins: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Stacked effective-channel covariance from the true tap profile.

    Frequency covariance comes from the tap powers and delays; layer
    coupling from the precoder Gram matrix. Hermitian PSD by construction.
    """
    ek = np.exp(-2j * np.pi * np.outer(bins, delay_samples) / n_fft)
    c_freq = (ek * powers) @ ek.conj().T
    gram = w.conj().T @ w
    return np.kron(gram.T, c_freq)


def sample_prior(h_samples: np.ndarray) -> np.ndarray:
    """Sample covariance of stacked channel draws, rows are realizations."""
    h = np.asarray(h_samples)
    return h.T @ h.conj() / h.shape[0]


def mmse_estimate(y: np.ndarray, dmrs_set: list[DmrsMatrix],
                  prior: np.ndarray, noise_var: float) -> np.ndarray:
    """Linear MMSE estimate of all layers' channels, shape (L, n_sc).

    Evaluated as C R^H (R C R^H + noise I)^-1 y, which tolerates the
    rank-deficient priors a genuine tap profile produces.
    """
    n_sc = y.shape[-1]
    n_layers = len(dmrs_set)
    r = dmrs_stack(dmrs_set)
    rc = r @ prior  # (n_sc, L n_sc)
    a = rc @ r.conj().T + noise_var * np.eye(n_sc)
    if noise_var > 0:
        z = np.linalg.solve(a, y)
    else:
        z, *_ = np.linalg.lstsq(a, y, rcond=None)
    h = rc.conj().T @ z
    return h.reshape(n_layers, n_sc)


def estimator_mse(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Normalized squared error ||e - t||^2 / ||t||^2 over all entries."""
    e = np.asarray(estimate) - np.asarray(truth)
    return float(np.sum(np.abs(e) ** 2) / np.sum(np.abs(truth) ** 2))
