"""Scenario configuration, seeded Monte-Carlo execution, metric aggregation.

Reproducibility scheme: every random draw comes from a counter-based
(Philox) substream keyed by (master seed, physical-link hash, purpose,
subframe). The physical-link hash covers only fields that shape the
channel, so scenarios differing in mode, equalizer, policy, or SNR grid see
identical channel realizations (paired comparisons), and splitting an SNR
grid across scenarios cannot change per-point results. Error counts are
integers and float metrics are reduced in subframe order, so results are
byte-identical for any worker count.
"""

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import chanest, channel, dmrs, fec, interp, modulation, papr, phy, rates, sinr
from .adaptation import adapt_link
from .codebooks import Precoder, codebook, scaled_identity

SCHEMA_VERSION = 1

MEASURES = ("ber_uncoded", "ber_coded", "bler", "throughput", "sinr",
            "rate", "mse_ce", "mse_interp", "papr")
CHANNELS = ("awgn", "flat", "iid", "PedB", "VehA", "TU")
RANK_POLICIES = ("fixed", "rank_adaptive", "pmi_rank_adaptive")
CQI_POLICIES = ("uncoded", "fixed", "ideal", "feedback")
ESTIMATORS = ("correlation", "dft", "sav", "qs", "mmse")

N_SYMBOLS = 14
PILOT_SYMBOLS = interp.PILOT_TIMES  # (3, 10)
DATA_SYMBOLS = tuple(s for s in range(N_SYMBOLS) if s not in PILOT_SYMBOLS)
N_SOS = 32  # sinusoids in the Jakes generator


class ScenarioError(ValueError):
    """Configuration is inconsistent; raised before any computation."""


@dataclass(frozen=True)
class Scenario:
    name: str
    bandwidth: float
    n_tx: int
    n_rx: int
    mode: str = "SC-FDM"
    equalizer: str = "ZF"
    rank_policy: str = "fixed"
    rank: int = 1
    channel: str = "iid"
    correlation_rho: float = 0.0
    speed: float = 0.0
    granularity: str = "static"
    carrier_freq: float = 2.1e9
    cp: str = "normal"
    csi: str = "perfect"
    estimator: str = "sav"
    interpolator: str = "P1"
    cqi_policy: str = "uncoded"
    cqi: int = 4
    snr_db: tuple = ()
    n_subframes: int = 0
    seed: int = 0
    measure: tuple = ("ber_uncoded",)

    def __post_init__(self):
        if self.bandwidth not in phy.BANDWIDTH_DIMS:
            raise ScenarioError(f"unknown bandwidth {self.bandwidth}")
        if self.mode not in phy.MODES:
            raise ScenarioError(f"unknown mode {self.mode}")
        if self.equalizer not in ("ZF", "MMSE"):
            raise ScenarioError(f"unknown equalizer {self.equalizer}")
        if self.rank_policy not in RANK_POLICIES:
            raise ScenarioError(f"unknown rank policy {self.rank_policy}")
        if self.rank_policy == "fixed" and not 1 <= self.rank <= min(self.n_tx, self.n_rx):
            raise ScenarioError(
                f"rank {self.rank} invalid for {self.n_tx}x{self.n_rx}")
        if self.channel not in CHANNELS:
            raise ScenarioError(f"unknown channel {self.channel}")
        if self.granularity not in channel.GRANULARITIES:
            raise ScenarioError(f"unknown granularity {self.granularity}")
        if self.csi not in ("perfect", "estimated"):
            raise ScenarioError(f"unknown CSI mode {self.csi}")
        if self.csi == "estimated":
            if self.estimator not in ESTIMATORS:
                raise ScenarioError(f"unknown estimator {self.estimator}")
            if self.interpolator not in interp.METHODS:
                raise ScenarioError(f"unknown interpolator {self.interpolator}")
            if self.estimator == "mmse" and self.channel == "awgn":
                raise ScenarioError("MMSE estimation needs a fading channel")
        if self.cqi_policy not in CQI_POLICIES:
            raise ScenarioError(f"unknown CQI policy {self.cqi_policy}")
        if self.cqi_policy in ("uncoded", "fixed") and not 1 <= self.cqi <= 15:
            raise ScenarioError(f"CQI {self.cqi} out of range")
        bad = set(self.measure) - set(MEASURES)
        if bad:
            raise ScenarioError(f"unknown measures {sorted(bad)}")
        if "ber_coded" in self.measure and self.cqi_policy in ("uncoded", "ideal"):
            raise ScenarioError("coded BER needs a fixed or feedback CQI policy")
        if any(m in self.measure for m in ("bler", "throughput")) \
                and self.cqi_policy == "uncoded":
            raise ScenarioError("BLER/throughput need a coded CQI policy")
        if self.cqi_policy == "feedback" and self.equalizer != "ZF":
            raise ScenarioError("the feedback procedure is defined for ZF")
        if self.speed > 0:
            if self.granularity == "static":
                raise ScenarioError("moving channels need a non-static granularity")
            if self.channel in ("awgn", "iid", "flat"):
                raise ScenarioError("moving channels need a tap-delay profile")
        if any(m in self.measure for m in ("mse_ce", "mse_interp")) \
                and self.csi != "estimated":
            raise ScenarioError("estimation metrics need estimated CSI")
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "measure", tuple(self.measure))

    @property
    def dims(self) -> tuple[int, int]:
        return phy.BANDWIDTH_DIMS[self.bandwidth]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        blob = json.loads(text)
        blob.pop("schema", None)
        try:
            return cls(**blob)
        except TypeError as exc:
            raise ScenarioError(str(exc)) from exc

    def physical_hash(self) -> str:
        phys = {k: getattr(self, k) for k in
                ("bandwidth", "n_tx", "n_rx", "channel", "correlation_rho",
                 "speed", "granularity", "carrier_freq", "cp")}
        canon = json.dumps(phys, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def scenario_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def substream(seed: int, *names) -> np.random.Generator:
    """Named counter-based substream; independent for distinct names."""
    digest = hashlib.blake2b(repr((seed,) + names).encode(),
                             digest_size=16).digest()
    key = np.frombuffer(digest, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    g = rng.standard_normal(shape + (2,))
    return (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2)


# ---------------------------------------------------------------------------
# channel source


class ChannelSource:
    """Per-subframe channel access with cross-subframe temporal continuity.

    Fast-fading channels draw their sum-of-sinusoids parameters once per
    (seed, physical link) and evaluate them at absolute symbol times, so any
    subframe (and its predecessor's pilot symbol) is reproducible in
    isolation.
    """

    def __init__(self, sc: Scenario):
        self.sc = sc
        self.n_sc, self.n_fft = sc.dims
        self.mapping = phy.SubcarrierMapping(self.n_sc, self.n_fft)
        self.cp = phy.CpConfig.for_fft(self.n_fft, sc.cp)
        self.fs = self.n_fft * phy.SUBCARRIER_SPACING
        self.symbol_duration = (self.n_fft + self.cp.n_samples) / self.fs
        self.profile = None
        if sc.channel in ("PedB", "VehA", "TU"):
            self.profile = channel.TapDelayProfile.named(sc.channel)
        self.root_ct = None
        if sc.correlation_rho:
            self.root_ct = channel.psd_sqrt(
                channel.uniform_correlation(sc.n_tx, sc.correlation_rho))
        self._sos = None
        if sc.speed > 0:
            rng = substream(sc.seed, sc.physical_hash(), "channel_params")
            delays, powers = self.profile.sampled(self.fs)
            shape = (sc.n_rx, sc.n_tx, delays.size, N_SOS)
            self._sos = {
                "delays": delays,
                "amps": np.sqrt(powers / N_SOS),
                "theta": rng.uniform(0, 2 * np.pi, shape),
                "phi": rng.uniform(0, 2 * np.pi, shape),
                "f_d": sc.speed / 299792458.0 * sc.carrier_freq,
            }

    @property
    def fast_fading(self) -> bool:
        return self._sos is not None

    def _sos_taps(self, t: float) -> np.ndarray:
        p = self._sos
        phase = 2 * np.pi * p["f_d"] * np.cos(p["theta"]) * t + p["phi"]
        return np.exp(1j * phase).sum(axis=-1) * p["amps"]

    def _response(self, taps: np.ndarray, delays: np.ndarray) -> np.ndarray:
        h = channel.taps_to_frequency(taps, delays, self.n_fft,
                                      self.mapping.bins)
        if self.root_ct is not None:
            h = h @ self.root_ct
        return h  # (n_sc, n_rx, n_tx)

    def symbol_channel(self, subframe: int, symbol: int) -> np.ndarray:
        """Channel at one symbol; the symbol index may reach into neighbours."""
        if self.fast_fading:
            step = channel.GRANULARITIES[self.sc.granularity]
            abs_sym = subframe * N_SYMBOLS + symbol
            granule = (abs_sym // step) * step
            taps = self._sos_taps(granule * self.symbol_duration)
            return self._response(taps, self._sos["delays"])
        sf = subframe + math.floor(symbol / N_SYMBOLS)
        return self._block_channel(sf)

    def per_symbol(self, subframe: int) -> np.ndarray:
        """True channel for every symbol of a subframe: (14, n_sc, n_rx, n_tx)."""
        if self.fast_fading:
            return np.stack([self.symbol_channel(subframe, s)
                             for s in range(N_SYMBOLS)])
        h = self._block_channel(subframe)
        return np.broadcast_to(h, (N_SYMBOLS,) + h.shape)

    def _block_channel(self, subframe: int) -> np.ndarray:
        sc = self.sc
        if sc.channel == "awgn":
            h = np.zeros((self.n_sc, sc.n_rx, sc.n_tx), dtype=complex)
            m = min(sc.n_rx, sc.n_tx)
            h[:, :m, :m] = np.eye(m)
            return h
        rng = substream(sc.seed, sc.physical_hash(), "channel", subframe)
        if sc.channel == "iid":
            h = _complex_normal(rng, (self.n_sc, sc.n_rx, sc.n_tx))
        elif sc.channel == "flat":
            h1 = _complex_normal(rng, (sc.n_rx, sc.n_tx))
            h = np.broadcast_to(h1, (self.n_sc, sc.n_rx, sc.n_tx)).copy()
        else:
            real = channel.draw_taps(self.profile, sc.n_rx, sc.n_tx, 1,
                                     self.fs, rng)
            return self._response(real.taps_at(0), real.delay_samples)
        if self.root_ct is not None:
            h = h @ self.root_ct
        return h


# ---------------------------------------------------------------------------
# per-subframe pipeline


def _noise_block(sc: Scenario, subframe: int, n_sc: int) -> np.ndarray:
    """Unit-variance receiver noise for all 14 symbols: (14, n_rx, n_sc)."""
    rng = substream(sc.seed, sc.physical_hash(), "noise", subframe)
    return _complex_normal(rng, (N_SYMBOLS, sc.n_rx, n_sc))


def _identity_codebook(n_tx: int, rank: int) -> tuple[Precoder, ...]:
    return (Precoder(w=scaled_identity(n_tx, rank), index=0, rank=rank),)


def _genie_prior(sc: Scenario, src: ChannelSource, w: np.ndarray) -> np.ndarray:
    gram = w.conj().T @ w
    if sc.correlation_rho:
        ct = channel.uniform_correlation(sc.n_tx, sc.correlation_rho)
        gram = w.conj().T @ ct @ w
    if sc.channel in ("PedB", "VehA", "TU"):
        delays, powers = src.profile.sampled(src.fs)
        return chanest.profile_prior(powers, delays, src.n_fft,
                                     src.mapping.bins, w)
    c_freq = np.eye(src.n_sc, dtype=complex) if sc.channel == "iid" \
        else np.ones((src.n_sc, src.n_sc), dtype=complex)
    return np.kron(gram.T, c_freq)


def _estimate_pilot(sc: Scenario, src: ChannelSource, dmrs_set, w, prior,
                    subframe: int, pilot_symbol: int,
                    sigma_n2: float) -> np.ndarray:
    """Estimate (n_sc, n_rx, L) from one DMRS symbol, possibly a neighbour's."""
    n_layers = len(dmrs_set)
    g = channel.effective(src.symbol_channel(subframe, pilot_symbol), w)
    r = np.stack([d.r for d in dmrs_set])  # (L, n_sc)
    sf = subframe + math.floor(pilot_symbol / N_SYMBOLS)
    sym = pilot_symbol % N_SYMBOLS
    noise = _noise_block(sc, sf, src.n_sc)[sym] * np.sqrt(sigma_n2)
    y = np.einsum("kil,lk->ik", g, r) + noise  # (n_rx, n_sc)

    est = np.empty((sc.n_rx, n_layers, src.n_sc), dtype=complex)
    for i in range(sc.n_rx):
        if sc.estimator == "mmse":
            est[i] = chanest.mmse_estimate(y[i], dmrs_set, prior, sigma_n2)
            continue
        for l, d in enumerate(dmrs_set):
            if sc.estimator == "qs":
                est[i, l] = chanest.quadratic_smoothing_estimate(y[i], d)
                continue
            ht = chanest.correlation_estimate(y[i], d)
            if sc.estimator == "dft":
                est[i, l] = chanest.dft_based_estimate(ht, n_layers)
            elif sc.estimator == "sav":
                est[i, l] = chanest.sliding_average_estimate(ht, n_layers)
            else:
                est[i, l] = ht
    return np.moveaxis(est, 2, 0)  # (n_sc, n_rx, L)


class SubframeRunner:
    """Processes single subframes of one scenario at one SNR point."""

    def __init__(self, sc: Scenario, tables=None):
        self.sc = sc
        self.src = ChannelSource(sc)
        self.thresholds = None
        self.bicm = None
        if sc.cqi_policy == "feedback":
            if tables is None:
                from . import link_tables
                n_re = self.src.n_sc * len(DATA_SYMBOLS)
                tables = (link_tables.bler_thresholds(n_re),
                          link_tables.bicm_tables())
            self.thresholds, self.bicm = tables

    # -- decision stage
    def decide(self, h0: np.ndarray, sigma_x2: float, sigma_n2: float):
        sc = self.sc
        if sc.cqi_policy == "feedback":
            if sc.rank_policy == "pmi_rank_adaptive":
                cb = codebook
            elif sc.rank_policy == "rank_adaptive":
                cb = _identity_codebook
            else:
                def cb(n_tx, rank, fixed=sc.rank):
                    return _identity_codebook(n_tx, rank) if rank == fixed else ()
            decision = adapt_link(h0, sigma_x2, sigma_n2, self.thresholds,
                                  self.bicm, codebook_fn=cb)
            if sc.rank_policy == "pmi_rank_adaptive":
                w = codebook(sc.n_tx, decision.rank)[decision.precoder_index].w
            else:
                w = scaled_identity(sc.n_tx, decision.rank)
            return w, decision
        rank = sc.rank if sc.rank_policy == "fixed" else min(sc.n_tx, sc.n_rx)
        return scaled_identity(sc.n_tx, rank), None

    def run(self, snr_db: float, subframe: int) -> dict:
        sc = self.sc
        src = self.src
        n_sc = src.n_sc
        sigma_x2 = 1.0
        sigma_n2 = 10.0 ** (-snr_db / 10.0)
        out: dict = {}

        h_sym = src.per_symbol(subframe)
        w, decision = self.decide(h_sym[0], sigma_x2, sigma_n2)
        n_layers = w.shape[1]
        rng_data = substream(sc.seed, sc.physical_hash(), "data", subframe)
        noise = _noise_block(sc, subframe, n_sc) * np.sqrt(sigma_n2)
        dmrs_set = dmrs.dmrs_set(n_sc, n_layers)
        pilot_vec = np.stack([d.r for d in dmrs_set])
        n_data = len(DATA_SYMBOLS)
        n_re = n_sc * n_data

        def make_grid(symbol_streams):
            """Pilot symbols pre-filled; DMRS are not DFT-spread."""
            grid = np.zeros((n_layers, n_sc, N_SYMBOLS), dtype=complex)
            for l, syms in enumerate(symbol_streams):
                grid[l, :, DATA_SYMBOLS] = syms.reshape(n_data, n_sc)
            return grid

        def channel_pass(grid):
            x = np.array(phy.spread(grid, sc.mode))
            x[:, :, PILOT_SYMBOLS[0]] = pilot_vec
            x[:, :, PILOT_SYMBOLS[1]] = pilot_vec
            y = np.empty((sc.n_rx, n_sc, N_SYMBOLS), dtype=complex)
            for s in range(N_SYMBOLS):
                g = h_sym[s] @ w
                y[:, :, s] = np.einsum("kil,lk->ik", g, x[:, :, s]) + noise[s]
            return y

        def receiver_csi():
            if sc.csi == "perfect":
                return h_sym @ w
            prior = _genie_prior(sc, src, w) if sc.estimator == "mmse" else None
            times = interp.method_pilot_times(sc.interpolator)
            pilots = np.stack([
                _estimate_pilot(sc, src, dmrs_set, w, prior, subframe, t,
                                sigma_n2)
                for t in times])
            est = interp.interpolate(pilots, times, sc.interpolator, N_SYMBOLS)
            if "mse_ce" in sc.measure:
                truth = np.stack([
                    channel.effective(src.symbol_channel(subframe, t), w)
                    for t in times])
                out["mse_values"] = [chanest.estimator_mse(pilots, truth)]
            if "mse_interp" in sc.measure:
                truth = np.stack([h_sym[s] @ w for s in DATA_SYMBOLS])
                out["mse_interp_values"] = [interp.interpolation_mse(
                    est[np.array(DATA_SYMBOLS)], truth)]
            return est

        def detect(y, g_est):
            """Equalize, bias-normalize; returns symbols and per-layer SINR."""
            block = sc.csi == "perfect" and not src.fast_fading
            eq0 = phy.build_equalizer(g_est[0], sc.equalizer,
                                      noise_var=sigma_n2, signal_var=sigma_x2)
            eqs = [eq0 if (block or s == 0) else
                   phy.build_equalizer(g_est[s], sc.equalizer,
                                       noise_var=sigma_n2, signal_var=sigma_x2)
                   for s in range(N_SYMBOLS)]
            xhat = np.empty((n_layers, n_sc, N_SYMBOLS), dtype=complex)
            for s in range(N_SYMBOLS):
                xhat[:, :, s] = np.einsum("klr,rk->lk", eqs[s].f, y[:, :, s])
            xhat = phy.despread(xhat, sc.mode)

            s_ref = N_SYMBOLS // 2
            fg = eqs[s_ref].f @ g_est[s_ref]
            k = np.arange(n_layers)
            if sc.mode == "SC-FDM":
                rep = sinr.scfdm_sinr(g_est[s_ref], eqs[s_ref], sigma_x2,
                                      sigma_n2)
                snr_l = np.where(rep.degenerate, np.inf, rep.sinr)[:, None]
                gain = fg[:, k, k].mean(axis=0)[:, None]
            else:
                rep = sinr.ofdm_sinr(g_est[s_ref], np.eye(n_layers, dtype=complex),
                                     eqs[s_ref], sigma_x2, sigma_n2)
                snr_l = np.where(rep.degenerate, np.inf, rep.sinr)
                gain = fg[:, k, k].T
            safe = np.where(np.abs(gain) < 1e-12, 1.0, gain)
            return xhat / safe[:, :, None], np.clip(snr_l, 1e-9, 1e12), rep

        def layer_symbols(xnorm, l):
            syms = xnorm[l][:, DATA_SYMBOLS].T.ravel()
            s_l = np.broadcast_to(snr_l[l][:, None], (n_sc, n_data)).T.ravel()
            return syms, s_l

        # ---- ideal rate adaptation: largest error-free rate this subframe
        if sc.cqi_policy == "ideal":
            g_est = receiver_csi()
            delivered = 0
            success_cqi = 0
            for c in range(15, 0, -1):
                entry = fec.cqi_entry(c)
                alphabet = modulation.qam_alphabet(entry.order)
                n_info = fec.infer_info_length(n_re * entry.bits_per_symbol,
                                               entry)
                bits = [rng_data.integers(0, 2, n_info).astype(np.int8)
                        for _ in range(n_layers)]
                grid = make_grid([
                    modulation.modulate_qam(
                        fec.encode(b, entry,
                                   n_out=n_re * entry.bits_per_symbol),
                        alphabet)
                    for b in bits])
                y = channel_pass(grid)
                xnorm, snr_l, rep = detect(y, g_est)
                ok = True
                for l in range(n_layers):
                    syms, s_l = layer_symbols(xnorm, l)
                    llr = modulation.demodulate_qam_llr(syms, s_l, alphabet)
                    _, crc_ok = fec.decode(llr, entry, n_info)
                    if not crc_ok:
                        ok = False
                        break
                if ok:
                    delivered = n_layers * n_info
                    success_cqi = c
                    break
            out.update(delivered_bits=delivered, blocks=n_layers,
                       block_errors=0 if success_cqi else n_layers,
                       data_re=n_re * n_layers)
            if "sinr" in sc.measure:
                out["sinr_values"] = [float(v) for v in
                                      np.atleast_1d(snr_l.mean(axis=-1))]
            if "rate" in sc.measure:
                out["rate_values"] = [
                    rates.achievable_rate(rep, n_sc).bits_per_symbol]
            return out

        # ---- single-pass policies
        if sc.cqi_policy == "uncoded":
            cqis = [sc.cqi] * n_layers
        elif sc.cqi_policy == "fixed":
            cqis = [sc.cqi] * n_layers
        else:
            cqis = [c if c > 0 else 1 for c in decision.cqis]
        entries = [fec.cqi_entry(c) for c in cqis]
        alphabets = [modulation.qam_alphabet(e.order) for e in entries]

        infos, tx_bits, coded = [], [], []
        for l, entry in enumerate(entries):
            if sc.cqi_policy == "uncoded":
                bits = rng_data.integers(
                    0, 2, n_re * alphabets[l].bits_per_symbol).astype(np.int8)
                infos.append(bits.size)
                tx_bits.append(bits)
                coded.append(bits)
            else:
                n_info = fec.infer_info_length(
                    n_re * entry.bits_per_symbol, entry)
                bits = rng_data.integers(0, 2, n_info).astype(np.int8)
                infos.append(n_info)
                tx_bits.append(bits)
                coded.append(fec.encode(bits, entry,
                                        n_out=n_re * entry.bits_per_symbol))

        grid = make_grid([modulation.modulate_qam(coded[l], alphabets[l])
                          for l in range(n_layers)])
        y = channel_pass(grid)
        g_est = receiver_csi()
        xnorm, snr_l, rep = detect(y, g_est)

        if "papr" in sc.measure:
            pre = phy.transmit_pre_ifft(grid[:, :, DATA_SYMBOLS], w,
                                        src.mapping, sc.mode)
            hist = np.zeros(len(papr.CCDF_GRID_DB), dtype=np.int64)
            for s in range(pre.shape[0]):
                t = papr.oversampled_signal(pre[s], src.n_fft, 4)
                hist += papr.papr(t).papr_db > papr.CCDF_GRID_DB
            out["papr_hist"] = hist
            out["papr_n"] = int(pre.shape[0])

        bit_errors = bits_total = 0
        coded_errors = coded_total = 0
        block_errors = delivered = 0
        for l in range(n_layers):
            syms, s_l = layer_symbols(xnorm, l)
            hard = modulation.demodulate_qam_hard(syms, alphabets[l])
            bit_errors += int((hard != coded[l]).sum())
            bits_total += hard.size
            if sc.cqi_policy != "uncoded":
                llr = modulation.demodulate_qam_llr(syms, s_l, alphabets[l])
                dec, crc_ok = fec.decode(llr, entries[l], infos[l])
                coded_errors += int((dec != tx_bits[l]).sum())
                coded_total += infos[l]
                block_errors += int(not crc_ok)
                delivered += infos[l] if crc_ok else 0

        if "ber_uncoded" in sc.measure:
            out.update(bit_errors=bit_errors, bits=bits_total)
        if sc.cqi_policy != "uncoded":
            out.update(coded_bit_errors=coded_errors, coded_bits=coded_total,
                       block_errors=block_errors, blocks=n_layers,
                       delivered_bits=delivered, data_re=n_re * n_layers)
        if "sinr" in sc.measure:
            out["sinr_values"] = [float(v) for v in
                                  np.atleast_1d(snr_l.mean(axis=-1))]
        if "rate" in sc.measure:
            out["rate_values"] = [
                rates.achievable_rate(rep, n_sc).bits_per_symbol]
        return out


# ---------------------------------------------------------------------------
# aggregation


_COUNT_RATES = (
    ("ber_uncoded", "bit_errors", "bits"),
    ("ber_coded", "coded_bit_errors", "coded_bits"),
    ("bler", "block_errors", "blocks"),
)
_VALUE_LISTS = (("sinr", "sinr_values"), ("rate", "rate_values"),
                ("mse_ce", "mse_values"), ("mse_interp", "mse_interp_values"))


def _binomial_halfwidth(k: int, n: int) -> float:
    if n == 0:
        return float("nan")
    p = k / n
    return 1.96 * math.sqrt(max(p * (1 - p), 0.0) / n)


def aggregate(sc: Scenario, snr_db: float, per_subframe: list[dict]) -> dict:
    """Reduce per-subframe raw counts into one result row (fixed order)."""
    row: dict = {"snr_db": snr_db}
    for name, knum, kden in _COUNT_RATES:
        if name not in sc.measure:
            continue
        num = sum(d.get(knum, 0) for d in per_subframe)
        den = sum(d.get(kden, 0) for d in per_subframe)
        row[name] = num / den if den else float("nan")
        row[name + "_ci"] = _binomial_halfwidth(num, den)
        row[name + "_n"] = den
    if "throughput" in sc.measure:
        bits = sum(d.get("delivered_bits", 0) for d in per_subframe)
        res = sum(d.get("data_re", 0) for d in per_subframe)
        n_sf = len(per_subframe)
        row["throughput_bits_per_s"] = bits / (n_sf * 1e-3) if n_sf else float("nan")
        row["throughput_bits_per_re"] = bits / res if res else float("nan")
        vals = [d.get("delivered_bits", 0) for d in per_subframe]
        std = float(np.std(vals, ddof=1)) if n_sf > 1 else 0.0
        row["throughput_ci_bits_per_s"] = 1.96 * std / math.sqrt(n_sf) / 1e-3 \
            if n_sf else float("nan")
        row["throughput_n"] = n_sf
    for name, key in _VALUE_LISTS:
        if name not in sc.measure:
            continue
        vals = [v for d in per_subframe for v in d.get(key, ())]
        row[name] = sum(vals) / len(vals) if vals else float("nan")
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        row[name + "_ci"] = 1.96 * std / math.sqrt(len(vals)) if vals else float("nan")
        row[name + "_n"] = len(vals)
    return row


@dataclass(frozen=True)
class ResultSet:
    scenario: Scenario
    rows: list
    papr_ccdf: np.ndarray | None = field(default=None, repr=False)

    def columns(self) -> list[str]:
        cols, seen = ["snr_db"], set()
        for row in self.rows:
            for k in row:
                if k != "snr_db" and k not in seen:
                    seen.add(k)
                    cols.append(k)
        return cols

    def to_csv(self) -> str:
        cols = self.columns()
        lines = [",".join(cols)]
        for row in self.rows:
            lines.append(",".join(_fmt(row.get(c)) for c in cols))
        return "\n".join(lines) + "\n"

    def provenance(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": asdict(self.scenario),
            "scenario_hash": self.scenario.scenario_hash(),
            "physical_hash": self.scenario.physical_hash(),
            "seed": self.scenario.seed,
        }

    def provenance_json(self) -> str:
        return json.dumps(self.provenance(), sort_keys=True, indent=2)

    def papr_ccdf_csv(self) -> str:
        if self.papr_ccdf is None:
            raise ValueError("scenario did not measure PAPR")
        lines = ["papr_db,ccdf"]
        for db, c in zip(papr.CCDF_GRID_DB, self.papr_ccdf):
            lines.append(f"{_fmt(float(db))},{_fmt(float(c))}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


# ---------------------------------------------------------------------------
# execution


def _run_chunk(scenario_json: str, snr_db: float, start: int, stop: int,
               tables) -> list[dict]:
    sc = Scenario.from_json(scenario_json)
    runner = SubframeRunner(sc, tables=tables)
    return [runner.run(snr_db, sf) for sf in range(start, stop)]


def run(sc: Scenario, workers: int = 1, tables=None) -> ResultSet:
    """Execute the scenario's subframe loop over its SNR grid.

    Results are independent of ``workers``; raw counts are combined in
    subframe order regardless of which process produced them.
    """
    if sc.cqi_policy == "feedback" and tables is None:
        from . import link_tables
        n_re = sc.dims[0] * len(DATA_SYMBOLS)
        tables = (link_tables.bler_thresholds(n_re), link_tables.bicm_tables())

    rows = []
    papr_hist = np.zeros(len(papr.CCDF_GRID_DB), dtype=np.int64)
    papr_n = 0
    if sc.n_subframes > 0:
        chunks = _partition(sc.n_subframes, workers)
        for snr_db in sc.snr_db:
            if workers > 1 and len(chunks) > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    futs = [pool.submit(_run_chunk, sc.to_json(), snr_db,
                                        a, b, tables) for a, b in chunks]
                    parts = [f.result() for f in futs]
            else:
                parts = [_run_chunk(sc.to_json(), snr_db, a, b, tables)
                         for a, b in chunks]
            per_subframe = [d for part in parts for d in part]
            rows.append(aggregate(sc, snr_db, per_subframe))
            for d in per_subframe:
                if "papr_hist" in d:
                    papr_hist += d["papr_hist"]
                    papr_n += d["papr_n"]
    ccdf = papr_hist / papr_n if papr_n else None
    return ResultSet(scenario=sc, rows=rows, papr_ccdf=ccdf)


def _partition(n: int, workers: int) -> list[tuple[int, int]]:
    n_chunks = max(1, min(workers * 4, n))
    size = -(-n // n_chunks)
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def sweep(scenarios: list[Scenario], workers: int = 1, tables=None
          ) -> list["ResultSet | Exception"]:
    """Run scenarios in sequence; per-scenario failures are isolated."""
    out: list = []
    for sc in scenarios:
        try:
            out.append(run(sc, workers=workers, tables=tables))
        except ScenarioError:
            raise
        except Exception as exc:  # noqa: BLE001 - isolation is the contract
            out.append(exc)
    return out
