"""Four-step CQI/PMI/RI link adaptation driven by closed-form SINR."""

from dataclasses import dataclass

import numpy as np

from .codebooks import codebook
from .fec import CQI_TABLE
from .rates import BicmTable
from .sinr import zf_scfdm_layer_snrs


@dataclass(frozen=True)
class BlerThresholds:
    """Per-CQI linear SINR needed to reach the target block error ratio."""

    target: float
    thresholds: tuple[float, ...]  # linear SINR per CQI index 1..15

    def max_cqi(self, sinr: float) -> int:
        """Highest CQI whose threshold the SINR meets; 0 if none."""
        best = 0
        for i, thr in enumerate(self.thresholds, start=1):
            if sinr >= thr:
                best = i
        return best


@dataclass(frozen=True)
class FeedbackDecision:
    rank: int
    precoder_index: int
    cqis: tuple[int, ...]  # 0 marks a layer that cannot meet the BLER target
    predicted_rate: float  # summed per-layer efficiency, bits per channel use

    def __post_init__(self):
        if self.rank != len(self.cqis):
            raise ValueError("one CQI per layer is required")


def _bicm_envelope(tables: dict[int, BicmTable], snr: float) -> float:
    return max(t.capacity(snr) for t in tables.values())


def adapt_link(h: np.ndarray, sigma_x2: float, sigma_n2: float,
               thresholds: BlerThresholds, bicm_tables: dict[int, BicmTable],
               eq_kind: str = "ZF", codebook_fn=codebook) -> FeedbackDecision:
    """Pick rank, precoder, and per-layer CQIs for the SC-FDM uplink.

    Step 1 scores each rank's codebook by summed BICM capacity of the
    per-layer SINRs; step 2 maps each layer's SINR to the highest CQI
    meeting the BLER target; step 3 picks the rank with the largest summed
    rate; step 4 is the emitted decision. All-zero rates fall back to
    rank 1 with CQI 1. ``codebook_fn`` restricts the precoder search (e.g.
    to the scaled identity for rank-only adaptation).
    """
    if eq_kind != "ZF":
        raise NotImplementedError("feedback procedure is defined for ZF")
    n_sc, n_rx, n_tx = h.shape
    best = None  # (rate, -rank, decision)
    for rank in range(1, min(n_rx, n_tx) + 1):
        best_w = None  # (bicm score, -index, index, snrs)
        for pre in codebook_fn(n_tx, rank):
            try:
                snrs = zf_scfdm_layer_snrs(h, pre.w, sigma_x2, sigma_n2)
            except np.linalg.LinAlgError:
                continue
            score = sum(_bicm_envelope(bicm_tables, s) for s in snrs)
            key = (score, -pre.index)
            if best_w is None or key > best_w[:2]:
                best_w = (score, -pre.index, pre.index, snrs)
        if best_w is None:
            continue
        _, _, w_index, snrs = best_w
        cqis = tuple(thresholds.max_cqi(s) for s in snrs)
        rate = sum(CQI_TABLE[c - 1].efficiency for c in cqis if c > 0)
        key = (rate, -rank)
        if best is None or key > best[:2]:
            best = (rate, -rank,
                    FeedbackDecision(rank=rank, precoder_index=w_index,
                                     cqis=cqis, predicted_rate=rate))
    if best is None or best[0] <= 0.0:
        return FeedbackDecision(rank=1, precoder_index=0, cqis=(1,),
                                predicted_rate=0.0)
    return best[2]
