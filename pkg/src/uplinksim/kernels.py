"""Hot inner-loop kernels, numba-jitted with a pure-NumPy/Python fallback.

The turbo-code recursions are the only genuinely sequential loops in the
simulator; everything else stays vectorized NumPy. Set ``UPLINKSIM_NO_NUMBA=1``
to select the fallback path (same results, bit for bit). The two paths are
compared by ``benchmarks/bench_kernels.py`` and equivalence-tested in
``tests/test_kernels.py``.
"""

import os

import numpy as np

NEG_INF = -1e30

NUMBA_ENABLED = os.environ.get("UPLINKSIM_NO_NUMBA", "").lower() not in (
    "1",
    "true",
    "yes",
)
if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a hard dependency
        NUMBA_ENABLED = False


# CRC-24 generator x^24 + x^23 + x^18 + x^17 + x^14 + x^11 + x^10 + x^7
#                  + x^6 + x^5 + x^4 + x^3 + x + 1
CRC24_GENERATOR = (1 << 24) | 0x864CFB
CRC_LEN = 24


def _crc24_py(bits):
    """Remainder of bits * x^24 divided by the CRC-24 generator."""
    r = 0
    for i in range(bits.shape[0]):
        r = (r << 1) | int(bits[i])
        if r >> 24:
            r ^= CRC24_GENERATOR
    for _ in range(CRC_LEN):
        r <<= 1
        if r >> 24:
            r ^= CRC24_GENERATOR
    return r


def _rsc_encode_py(u, next_state, parity):
    """Rate-1/2 recursive systematic convolutional encoder with termination.

    Feedback 1 + D^2 + D^3, feedforward 1 + D + D^3 on an 8-state register.
    Returns (parity bits, tail systematic bits, tail parity bits); the
    systematic stream is the input itself.
    """
    k = u.shape[0]
    par = np.empty(k, dtype=np.int8)
    s = 0
    for t in range(k):
        b = int(u[t])
        par[t] = parity[s, b]
        s = next_state[s, b]
    tail_sys = np.empty(3, dtype=np.int8)
    tail_par = np.empty(3, dtype=np.int8)
    for t in range(3):
        fb = ((s >> 1) & 1) ^ (s & 1)
        tail_sys[t] = fb
        tail_par[t] = parity[s, fb]
        s = next_state[s, fb]
    return par, tail_sys, tail_par


def _maxlog_bcjr_loops(l_sys, l_par, l_tail_sys, l_tail_par, l_apriori,
                       next_state, parity):
    """Max-log BCJR over the 8-state trellis, trellis terminated via tails.

    LLR convention: positive favours bit 1. Returns the a-posteriori LLRs;
    the caller subtracts systematic and a-priori parts for the extrinsic.
    """
    k = l_sys.shape[0]
    n_states = next_state.shape[0]

    # Branch metrics: gamma[t, s, b] = b*(La+Lsys) + parity*Lpar.
    alpha = np.empty((k + 1, n_states))
    alpha[0, :] = NEG_INF
    alpha[0, 0] = 0.0
    for t in range(k):
        lin = l_apriori[t] + l_sys[t]
        lp = l_par[t]
        nxt = alpha[t + 1]
        nxt[:] = NEG_INF
        for s in range(n_states):
            a = alpha[t, s]
            if a <= NEG_INF:
                continue
            for b in range(2):
                m = a + b * lin + parity[s, b] * lp
                ns = next_state[s, b]
                if m > nxt[ns]:
                    nxt[ns] = m
        peak = nxt[0]
        for s in range(1, n_states):
            if nxt[s] > peak:
                peak = nxt[s]
        for s in range(n_states):
            nxt[s] -= peak

    # Backward pass seeded through the three termination steps (forced input).
    beta_tail = np.empty(n_states)
    beta_tail[:] = NEG_INF
    beta_tail[0] = 0.0
    for t in range(2, -1, -1):
        prev = np.empty(n_states)
        prev[:] = NEG_INF
        for s in range(n_states):
            fb = ((s >> 1) & 1) ^ (s & 1)
            m = fb * l_tail_sys[t] + parity[s, fb] * l_tail_par[t]
            ns = next_state[s, fb]
            if beta_tail[ns] > NEG_INF:
                prev[s] = beta_tail[ns] + m
        beta_tail = prev

    beta = np.empty((k + 1, n_states))
    beta[k] = beta_tail
    for t in range(k - 1, -1, -1):
        lin = l_apriori[t] + l_sys[t]
        lp = l_par[t]
        for s in range(n_states):
            best = NEG_INF
            for b in range(2):
                ns = next_state[s, b]
                if beta[t + 1, ns] <= NEG_INF:
                    continue
                m = beta[t + 1, ns] + b * lin + parity[s, b] * lp
                if m > best:
                    best = m
            beta[t, s] = best
        peak = beta[t, 0]
        for s in range(1, n_states):
            if beta[t, s] > peak:
                peak = beta[t, s]
        for s in range(n_states):
            beta[t, s] -= peak

    l_post = np.empty(k)
    for t in range(k):
        lin = l_apriori[t] + l_sys[t]
        lp = l_par[t]
        best0 = NEG_INF
        best1 = NEG_INF
        for s in range(n_states):
            a = alpha[t, s]
            if a <= NEG_INF:
                continue
            for b in range(2):
                ns = next_state[s, b]
                m = a + b * lin + parity[s, b] * lp + beta[t + 1, ns]
                if b == 1:
                    if m > best1:
                        best1 = m
                else:
                    if m > best0:
                        best0 = m
        l_post[t] = best1 - best0
    return l_post


def _maxlog_bcjr_numpy(l_sys, l_par, l_tail_sys, l_tail_par, l_apriori,
                       next_state, parity):
    """Vectorized fallback for :func:`_maxlog_bcjr_loops` (identical output)."""
    k = l_sys.shape[0]
    n_states = next_state.shape[0]
    ns_flat = next_state.ravel()

    lin = l_apriori + l_sys
    # gamma[t, s, b]
    gamma = (lin[:, None, None] * np.array([0.0, 1.0])[None, None, :]
             + l_par[:, None, None] * parity[None, :, :])

    alpha = np.full((k + 1, n_states), NEG_INF)
    alpha[0, 0] = 0.0
    for t in range(k):
        cand = (alpha[t][:, None] + gamma[t]).ravel()
        nxt = np.full(n_states, NEG_INF)
        np.maximum.at(nxt, ns_flat, cand)
        alpha[t + 1] = nxt - nxt.max()

    states = np.arange(n_states)
    fb = ((states >> 1) & 1) ^ (states & 1)
    tail_ns = next_state[states, fb]
    tail_par_bits = parity[states, fb]
    beta_tail = np.full(n_states, NEG_INF)
    beta_tail[0] = 0.0
    for t in range(2, -1, -1):
        m = fb * l_tail_sys[t] + tail_par_bits * l_tail_par[t]
        prev = np.where(beta_tail[tail_ns] > NEG_INF,
                        beta_tail[tail_ns] + m, NEG_INF)
        beta_tail = prev

    beta = np.empty((k + 1, n_states))
    beta[k] = beta_tail
    for t in range(k - 1, -1, -1):
        nxt = beta[t + 1][next_state]
        cand = np.where(nxt > NEG_INF, nxt + gamma[t], NEG_INF)
        b = cand.max(axis=1)
        beta[t] = b - b.max()

    full = alpha[:k, :, None] + gamma + beta[1:k + 1][:, next_state]
    full = np.where(alpha[:k, :, None] <= NEG_INF, NEG_INF, full)
    best = full.max(axis=1)
    return best[:, 1] - best[:, 0]


if NUMBA_ENABLED:
    crc24 = njit(cache=True)(_crc24_py)
    rsc_encode = njit(cache=True)(_rsc_encode_py)
    maxlog_bcjr = njit(cache=True)(_maxlog_bcjr_loops)
else:
    crc24 = _crc24_py
    rsc_encode = _rsc_encode_py
    maxlog_bcjr = _maxlog_bcjr_numpy
