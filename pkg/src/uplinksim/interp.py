"""Temporal channel interpolation across DMRS symbols.

Within a 14-symbol subframe the pilots sit at symbols 3 and 10; three-point
methods additionally use the previous subframe's second pilot at time -4.
All methods are linear in the pilot values, so each reduces to a
(n_symbols, n_pilots) weight matrix applied to the pilot estimates.
"""

import numpy as np

SUBFRAME_SYMBOLS = 14
SLOT_SYMBOLS = 7
PILOT_TIMES = (3, 10)
PREV_PILOT_TIME = PILOT_TIMES[1] - SUBFRAME_SYMBOLS  # -4

METHODS = ("P1", "L2", "L3", "S3")
_REQUIRED_PILOTS = {"P1": 1, "L2": 2, "L3": 3, "S3": 3}


def method_pilot_times(method: str) -> tuple[int, ...]:
    """Pilot symbol times each method consumes, oldest first."""
    if method == "P1":
        return PILOT_TIMES
    if method == "L2":
        return PILOT_TIMES
    return (PREV_PILOT_TIME,) + PILOT_TIMES


def interpolation_weights(method: str, pilot_times, n_symbols: int = SUBFRAME_SYMBOLS
                          ) -> np.ndarray:
    """(n_symbols, n_pilots) weights mapping pilot values to per-symbol values."""
    times = np.asarray(pilot_times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("pilot times must be strictly increasing")
    n_p = times.size
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if n_p < _REQUIRED_PILOTS[method]:
        raise ValueError(f"{method} needs {_REQUIRED_PILOTS[method]} pilots, "
                         f"got {n_p}")
    t = np.arange(n_symbols, dtype=float)
    w = np.zeros((n_symbols, n_p))

    if method == "P1":
        # hold each slot's own pilot; with a single pilot, hold it throughout
        if n_p == 1:
            w[:, 0] = 1.0
        else:
            slots = (t // SLOT_SYMBOLS).astype(int)
            pilot_slot = np.clip((times // SLOT_SYMBOLS).astype(int), 0, None)
            for s in np.unique(slots):
                cand = np.nonzero(pilot_slot == s)[0]
                p = cand[0] if cand.size else int(np.argmin(np.abs(times - s * SLOT_SYMBOLS)))
                w[slots == s, p] = 1.0
    elif method == "L2":
        t0, t1 = times[-2], times[-1]
        a = (t - t0) / (t1 - t0)
        w[:, -2] = 1.0 - a
        w[:, -1] = a
    elif method == "L3":
        # piecewise linear through the three pilots; beyond the last pilot
        # the final segment extrapolates
        tt = times[-3:]
        base = n_p - 3
        seg = np.where(t < tt[1], 0, 1)
        for s in (0, 1):
            on = seg == s
            a = (t[on] - tt[s]) / (tt[s + 1] - tt[s])
            w[on, base + s] = 1.0 - a
            w[on, base + s + 1] = a
    else:  # S3: the unique quadratic through the three pilots
        tt = times[-3:]
        base = n_p - 3
        for i in range(3):
            others = [j for j in range(3) if j != i]
            num = (t - tt[others[0]]) * (t - tt[others[1]])
            den = (tt[i] - tt[others[0]]) * (tt[i] - tt[others[1]])
            w[:, base + i] = num / den
    return w


def interpolate(pilot_values: np.ndarray, pilot_times, method: str,
                n_symbols: int = SUBFRAME_SYMBOLS) -> np.ndarray:
    """Per-symbol channel estimates from pilot-time estimates.

    pilot_values has the pilot axis first: (n_pilots, ...); the result is
    (n_symbols, ...). L2/L3/S3 reproduce the pilot values exactly at the
    pilot positions.
    """
    values = np.asarray(pilot_values)
    w = interpolation_weights(method, pilot_times, n_symbols)
    return np.tensordot(w, values, axes=([1], [0]))


def interpolation_mse(estimate: np.ndarray, truth: np.ndarray,
                      data_symbols=None) -> float:
    """Normalized MSE over the data symbols (all symbols by default)."""
    est = np.asarray(estimate)
    tru = np.asarray(truth)
    if data_symbols is not None:
        est = est[np.asarray(data_symbols)]
        tru = tru[np.asarray(data_symbols)]
    return float(np.sum(np.abs(est - tru) ** 2) / np.sum(np.abs(tru) ** 2))
