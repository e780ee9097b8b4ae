"""Zadoff-Chu demodulation reference signals with per-layer cyclic shifts.

Layers share one base sequence; a per-layer phase ramp (cyclic shift on the
12-subcarrier grid) makes them orthogonal in the FD-CDM sense whenever the
band is a multiple of 12 subcarriers.
"""

from dataclasses import dataclass, field

import numpy as np

# Cyclic-shift positions on the 12-grid per number of layers. Evenly spaced,
# so the pairwise shift differences sum to zero over any 12-multiple band.
SHIFT_SCHEDULE = {1: (0,), 2: (0, 6), 3: (0, 4, 8), 4: (0, 3, 6, 9)}


def _largest_prime_below(n: int) -> int:
    for cand in range(n - 1, 1, -1):
        if all(cand % p for p in range(2, int(cand ** 0.5) + 1)):
            return cand
    raise ValueError(f"no prime below {n}")


@dataclass(frozen=True)
class ZcBaseSequence:
    seq: np.ndarray = field(repr=False)
    root: int
    n_sc: int
    prime_len: int


@dataclass(frozen=True)
class DmrsMatrix:
    """Diagonal pilot operator for one layer, stored as its diagonal."""

    layer: int
    alpha: float
    r: np.ndarray = field(repr=False)

    def dense(self) -> np.ndarray:
        return np.diag(self.r)


def zc_core(length: int, root: int) -> np.ndarray:
    """Prime-length Zadoff-Chu sequence x_q[m] = exp(-j pi q m (m+1) / P)."""
    m = np.arange(length)
    return np.exp(-1j * np.pi * root * m * (m + 1) / length)


def base_sequence(n_sc: int, root: int = 25) -> ZcBaseSequence:
    """Prime-length ZC root sequence cyclically extended to n_sc."""
    if n_sc % 12 or n_sc < 12:
        raise ValueError(f"n_sc must be a positive multiple of 12, got {n_sc}")
    p = _largest_prime_below(n_sc)
    core = zc_core(p, root % p)
    seq = core[np.arange(n_sc) % p]
    seq.setflags(write=False)
    return ZcBaseSequence(seq=seq, root=root, n_sc=n_sc, prime_len=p)


def shifted_dmrs(base: ZcBaseSequence, layer: int, n_layers: int) -> DmrsMatrix:
    """Pilot for ``layer`` (1-based) out of ``n_layers`` active layers."""
    if not 1 <= layer <= n_layers <= 4:
        raise ValueError(f"need 1 <= layer <= n_layers <= 4, got {layer}/{n_layers}")
    alpha = 2 * np.pi * SHIFT_SCHEDULE[n_layers][layer - 1] / 12
    k = np.arange(base.n_sc)
    r = np.exp(1j * alpha * k) * base.seq
    r.setflags(write=False)
    return DmrsMatrix(layer=layer, alpha=alpha, r=r)


def dmrs_set(n_sc: int, n_layers: int, root: int = 25) -> list[DmrsMatrix]:
    base = base_sequence(n_sc, root)
    return [shifted_dmrs(base, l, n_layers) for l in range(1, n_layers + 1)]


def orthogonality_check(u: DmrsMatrix, l: DmrsMatrix) -> complex:
    """Inner product (r_u)^H r_l: n_sc when u = l, 0 otherwise."""
    return complex(np.vdot(u.r, l.r))
