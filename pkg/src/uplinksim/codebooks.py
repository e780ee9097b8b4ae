"""LTE-style uplink precoder codebooks.

Entries follow the standard's structure (unit-modulus phase vectors plus
antenna-selection entries for 2 and 4 transmit antennas) but every matrix is
rescaled so that W^H W = (1/L) I holds exactly, keeping the overall
transmitter unitary. No bit-exact conformance is claimed.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

_PHASES = (1.0, -1.0, 1.0j, -1.0j)


@dataclass(frozen=True)
class Precoder:
    w: np.ndarray = field(repr=False)
    index: int
    rank: int

    @property
    def n_tx(self) -> int:
        return self.w.shape[0]


def scaled_identity(n_tx: int, rank: int) -> np.ndarray:
    """The identity-like precoder (1/sqrt(L)) [I_L; 0]."""
    if rank > n_tx:
        raise ValueError(f"rank {rank} exceeds {n_tx} transmit antennas")
    w = np.zeros((n_tx, rank), dtype=complex)
    w[:rank, :] = np.eye(rank)
    return w / np.sqrt(rank)


def _normalize(w: np.ndarray, rank: int) -> np.ndarray:
    cols = w / np.linalg.norm(w, axis=0, keepdims=True)
    return cols / np.sqrt(rank)


def _rank1_2tx():
    vecs = [np.array([1.0, p]) for p in _PHASES]
    vecs += [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    return [np.asarray(v, dtype=complex)[:, None] for v in vecs]


def _rank1_4tx():
    vecs = [np.array([1.0, a, b, -a * b]) for a in _PHASES for b in _PHASES]
    vecs += [np.array([1.0, 0.0, p, 0.0]) for p in _PHASES]
    vecs += [np.array([0.0, 1.0, 0.0, p]) for p in _PHASES]
    return [np.asarray(v, dtype=complex)[:, None] for v in vecs]


def _rank2_4tx():
    out = []
    for a in _PHASES:
        for b in _PHASES:
            w = np.zeros((4, 2), dtype=complex)
            w[0, 0], w[1, 0] = 1.0, a
            w[2, 1], w[3, 1] = 1.0, b
            out.append(w)
    return out


def _rank3_4tx():
    out = []
    for pair in ((0, 1), (2, 3), (0, 2)):
        singles = [t for t in range(4) if t not in pair]
        for p in _PHASES:
            w = np.zeros((4, 3), dtype=complex)
            w[pair[0], 0], w[pair[1], 0] = 1.0, p
            w[singles[0], 1] = 1.0
            w[singles[1], 2] = 1.0
            out.append(w)
    return out


@lru_cache(maxsize=None)
def codebook(n_tx: int, rank: int) -> tuple[Precoder, ...]:
    """All rank-``rank`` precoders for ``n_tx`` antennas."""
    if rank < 1 or rank > n_tx:
        raise ValueError(f"rank {rank} invalid for {n_tx} antennas")
    if n_tx == 1:
        raw = [np.ones((1, 1), dtype=complex)]
    elif n_tx == 2:
        raw = _rank1_2tx() if rank == 1 else [np.eye(2, dtype=complex)]
    elif n_tx == 4:
        raw = {1: _rank1_4tx, 2: _rank2_4tx, 3: _rank3_4tx,
               4: lambda: [np.eye(4, dtype=complex)]}[rank]()
    else:
        raise ValueError(f"no codebook for {n_tx} transmit antennas")
    entries = tuple(
        Precoder(w=_normalize(w, rank), index=i, rank=rank)
        for i, w in enumerate(raw)
    )
    for p in entries:
        p.w.setflags(write=False)
    return entries
