"""Build-and-cache layer for the BICM capacity and BLER threshold tables."""

import numpy as np

from . import caching, fec
from .adaptation import BlerThresholds
from .rates import BicmTable, build_bicm_table

BLER_TARGET = 0.1

# Spec'd production defaults; tests override with desk-scale budgets.
BICM_GRID_DB = (-10.0, 30.0, 0.1)
BICM_SAMPLES = 100_000
BLER_GRID_DB = (-10.0, 30.0, 1.0)
BLER_BLOCKS = 200


def _rng(seed: int, *salt: int) -> np.random.Generator:
    counter = (list(salt) + [0, 0, 0, 0])[:4]
    return np.random.Generator(np.random.Philox(key=np.uint64(seed),
                                                counter=counter))


def bicm_tables(seed: int = 1234, grid=BICM_GRID_DB,
                n_samples: int = BICM_SAMPLES) -> dict[int, BicmTable]:
    """BICM capacity tables for 4/16/64-QAM, cached on disk."""
    lo, hi, step = grid
    grid_db = np.round(np.arange(lo, hi + step / 2, step), 6)
    out = {}
    for order in (4, 16, 64):
        params = {"order": order, "grid": list(grid), "n_samples": n_samples,
                  "seed": seed}
        payload = caching.load("bicm", params)
        if payload is None:
            table = build_bicm_table(order, grid_db, n_samples,
                                     _rng(seed, order))
            caching.store("bicm", params,
                          {"grid_db": table.grid_db, "bits": table.bits})
            out[order] = table
        else:
            out[order] = BicmTable(order=order,
                                   grid_db=np.asarray(payload["grid_db"]),
                                   bits=np.asarray(payload["bits"]))
    return out


def _threshold_from_curve(grid_db: np.ndarray, bler: np.ndarray,
                          target: float) -> float:
    """Linear SINR where the smoothed BLER first meets the target."""
    below = np.nonzero(bler <= target)[0]
    if below.size == 0:
        return np.inf
    i = below[0]
    if i == 0:
        return 10.0 ** (grid_db[0] / 10.0)
    # log-interpolate the crossing between the straddling grid points
    b0, b1 = max(bler[i - 1], 1e-12), max(bler[i], 1e-12)
    frac = (np.log(b0) - np.log(target)) / (np.log(b0) - np.log(b1))
    db = grid_db[i - 1] + frac * (grid_db[i] - grid_db[i - 1])
    return 10.0 ** (db / 10.0)


def bler_thresholds(n_re: int, seed: int = 1234, grid=BLER_GRID_DB,
                    n_blocks: int = BLER_BLOCKS,
                    target: float = BLER_TARGET) -> BlerThresholds:
    """Per-CQI SINR thresholds for BLER <= target, cached on disk.

    ``n_re`` is the number of data resource elements per layer and subframe;
    each CQI's block size is what that CQI actually transmits over them.
    """
    lo, hi, step = grid
    grid_db = np.round(np.arange(lo, hi + step / 2, step), 6)
    params = {"n_re": n_re, "grid": list(grid), "n_blocks": n_blocks,
              "seed": seed, "target": target}
    payload = caching.load("bler_thresholds", params)
    if payload is not None:
        return BlerThresholds(target=target,
                              thresholds=tuple(payload["thresholds"]))
    thresholds = []
    for cqi in fec.CQI_TABLE:
        n_coded = n_re * cqi.bits_per_symbol
        n_info = fec.infer_info_length(n_coded, cqi)
        lo_i = np.searchsorted(grid_db,
                               10 * np.log10(2 ** cqi.efficiency - 1) - 3.0)
        sub = grid_db[max(0, lo_i - 1):]
        bler = fec.bler_curve(cqi, sub, n_blocks, n_info,
                              _rng(seed, cqi.index, n_re))
        thresholds.append(_threshold_from_curve(sub, bler, target))
    caching.store("bler_thresholds", params, {"thresholds": thresholds})
    return BlerThresholds(target=target, thresholds=tuple(thresholds))
