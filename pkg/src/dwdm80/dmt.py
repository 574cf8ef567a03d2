"""DMT transceiver: multicarrier frames on an intensity-modulated field.

A frame is a real IFFT over the used subcarriers plus a cyclic prefix. The
record-level chain clips the drive, biases it just above zero and takes the
square root, so the photodiode's square law hands the drive back untouched.
Bit and power loading per subcarrier come from an SNR probe of the actual
link, which is what lets one transceiver ride out dispersion notches.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field as dc_field

import numpy as np

from .metrics import q_inv
from .signal_core import FilterSpec, SyncError, Waveform, apply_filter, circular_sync

MAX_BITS_PER_SYMBOL = 8
_SYNC_QUALITY_MIN = 8.0
_SNR_CAP = 1e6


class RateInfeasibleError(ValueError):
    """The SNR profile cannot carry the requested bits per frame."""


@dataclass(slots=True)
class DmtConfig:
    """Multicarrier numerology: 512-point frames at 112 GS/s by default."""

    fft_size: int = 512
    cp_len: int = 16
    dac_rate: float = 112e9
    clip_db: float = 9.5

    def __post_init__(self) -> None:
        if self.fft_size < 8 or self.fft_size % 2:
            raise ValueError("fft_size must be even and >= 8")
        if self.cp_len < 0 or self.cp_len >= self.fft_size:
            raise ValueError("cp_len must sit in [0, fft_size)")
        if self.dac_rate <= 0:
            raise ValueError("dac_rate must be positive")

    @property
    def n_used(self) -> int:
        """Data subcarriers: everything between DC and Nyquist."""
        return self.fft_size // 2 - 1

    @property
    def frame_len(self) -> int:
        return self.fft_size + self.cp_len

    @property
    def subcarrier_spacing_hz(self) -> float:
        return self.dac_rate / self.fft_size

    def subcarrier_freqs_hz(self) -> np.ndarray:
        return np.arange(1, self.n_used + 1) * self.subcarrier_spacing_hz


@dataclass(slots=True)
class LoadingTable:
    """Bits and relative power per subcarrier.

    ``power_scale`` sums to the used-subcarrier count, so a loaded record has
    the same per-subcarrier average power as uniform loading; ``margin`` is
    the headroom factor that normalization applied (>= 1 means the raw
    gap-rule powers fit the budget).
    """

    bits: np.ndarray
    power_scale: np.ndarray
    gap: float
    margin: float

    def __post_init__(self) -> None:
        self.bits = np.asarray(self.bits, dtype=np.int64)
        self.power_scale = np.asarray(self.power_scale, dtype=float)
        if self.bits.shape != self.power_scale.shape:
            raise ValueError("bits and power_scale must align")
        bad = set(np.unique(self.bits)) - {0, 2, 4, 6, 8}
        if bad:
            raise ValueError(f"unsupported bits per symbol: {sorted(bad)}")

    @property
    def bits_per_frame(self) -> int:
        return int(self.bits.sum())


@dataclass(slots=True)
class SnrProfile:
    """Per-subcarrier linear SNR measured by a probe."""

    snr_linear: np.ndarray
    freq_hz: np.ndarray

    def __post_init__(self) -> None:
        self.snr_linear = np.asarray(self.snr_linear, dtype=float)
        self.freq_hz = np.asarray(self.freq_hz, dtype=float)
        if self.snr_linear.shape != self.freq_hz.shape:
            raise ValueError("snr and frequency grids must align")

    def snr_db(self) -> np.ndarray:
        return 10 * np.log10(np.maximum(self.snr_linear, 1e-30))


@dataclass(slots=True)
class DmtRecord:
    """One transmitted record: training frames, then loaded payload frames."""

    waveform: Waveform
    reference: np.ndarray
    config: DmtConfig
    table: LoadingTable
    n_train: int
    n_payload: int
    train_symbols: np.ndarray
    payload_symbols: np.ndarray
    payload_bits: np.ndarray


@dataclass(slots=True)
class DmtRxResult:
    """Demodulation outcome plus the per-subcarrier intermediates."""

    bit_errors: int
    n_bits: int
    decided_bits: np.ndarray
    equalized: np.ndarray
    channel: np.ndarray
    diagnostics: dict = dc_field(default_factory=dict)

    @property
    def ber(self) -> float:
        return self.bit_errors / self.n_bits if self.n_bits else 0.0


def _gray_tables(axis_bits: int) -> tuple[np.ndarray, np.ndarray]:
    """(gray_to_index, index_to_gray) for one 2^axis_bits-level axis."""
    idx = np.arange(1 << axis_bits)
    index_to_gray = idx ^ (idx >> 1)
    gray_to_index = np.empty_like(idx)
    gray_to_index[index_to_gray] = idx
    return gray_to_index, index_to_gray


def _axis_norm(levels: int) -> float:
    # unit average constellation power across both axes
    return float(np.sqrt(3.0 / (2.0 * (levels**2 - 1))))


def qam_map(bits: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Gray-per-axis square QAM, unit average power. I bits first, then Q."""
    if bits_per_symbol not in (2, 4, 6, 8):
        raise ValueError(f"bits_per_symbol must be in {{2,4,6,8}}, got {bits_per_symbol}")
    b = np.asarray(bits, dtype=np.int64)
    if b.size % bits_per_symbol:
        raise ValueError("bit count is not a whole number of symbols")
    nb = bits_per_symbol // 2
    levels = 1 << nb
    gray_to_index, _ = _gray_tables(nb)
    chunks = b.reshape(-1, bits_per_symbol)
    weights = 1 << np.arange(nb - 1, -1, -1)
    gi = chunks[:, :nb] @ weights
    gq = chunks[:, nb:] @ weights
    norm = _axis_norm(levels)
    re = (2 * gray_to_index[gi] - (levels - 1)) * norm
    im = (2 * gray_to_index[gq] - (levels - 1)) * norm
    return re + 1j * im


def qam_decide(symbols: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Nearest-point decisions back to the bit stream."""
    if bits_per_symbol not in (2, 4, 6, 8):
        raise ValueError(f"bits_per_symbol must be in {{2,4,6,8}}, got {bits_per_symbol}")
    z = np.asarray(symbols, dtype=np.complex128)
    nb = bits_per_symbol // 2
    levels = 1 << nb
    _, index_to_gray = _gray_tables(nb)
    norm = _axis_norm(levels)
    out = np.empty((z.size, bits_per_symbol), dtype=np.uint8)
    for axis, vals in ((0, z.real), (1, z.imag)):
        idx = np.clip(np.round((vals / norm + (levels - 1)) / 2), 0, levels - 1)
        gray = index_to_gray[idx.astype(np.int64)]
        for j in range(nb):
            out[:, axis * nb + j] = (gray >> (nb - 1 - j)) & 1
    return out.reshape(-1)


def uniform_qpsk_table(config: DmtConfig) -> LoadingTable:
    """QPSK on every used subcarrier at equal power (the probe's table)."""
    n = config.n_used
    return LoadingTable(
        bits=np.full(n, 2, dtype=np.int64),
        power_scale=np.ones(n),
        gap=1.0,
        margin=1.0,
    )


def _bit_offsets(table: LoadingTable) -> np.ndarray:
    """Exclusive prefix sums: where each subcarrier's bits sit inside a frame."""
    return np.concatenate(([0], np.cumsum(table.bits)))[:-1]


def map_frames(bits: np.ndarray, table: LoadingTable) -> np.ndarray:
    """Serial bits to an (n_used, n_frames) symbol grid.

    Within a frame, bits fill subcarriers in ascending index order; loaded
    symbols are scaled by the table's per-subcarrier power.
    """
    b = np.asarray(bits, dtype=np.uint8)
    bpf = table.bits_per_frame
    if bpf == 0:
        raise ValueError("loading table carries no bits")
    if b.size % bpf:
        raise ValueError(f"bit count {b.size} is not a multiple of {bpf} bits/frame")
    n_frames = b.size // bpf
    frames = b.reshape(n_frames, bpf)
    offsets = _bit_offsets(table)
    grid = np.zeros((len(table.bits), n_frames), dtype=np.complex128)
    for k, (nk, off) in enumerate(zip(table.bits, offsets)):
        if nk == 0:
            continue
        chunk = frames[:, off : off + nk].reshape(-1)
        grid[k] = qam_map(chunk, int(nk)) * np.sqrt(table.power_scale[k])
    return grid


def frames_to_drive(symbol_grid: np.ndarray, config: DmtConfig) -> np.ndarray:
    """Symbol grid to the serial real drive: IFFT per frame plus cyclic prefix."""
    n_used, n_frames = symbol_grid.shape
    if n_used != config.n_used:
        raise ValueError("symbol grid does not match the configured subcarrier count")
    spectra = np.zeros((n_frames, config.fft_size // 2 + 1), dtype=np.complex128)
    spectra[:, 1 : n_used + 1] = symbol_grid.T
    time = np.fft.irfft(spectra, n=config.fft_size, axis=1)
    if config.cp_len:
        time = np.concatenate([time[:, -config.cp_len :], time], axis=1)
    return time.reshape(-1)


def build_record(
    config: DmtConfig,
    table: LoadingTable,
    payload_bits: np.ndarray,
    n_train: int,
    seed: int,
    tx_filter: FilterSpec | None = None,
    mean_power_mw: float = 1.0,
) -> DmtRecord:
    """Assemble a launch record: training frames, payload frames, optics drive.

    Training frames are uniform QPSK drawn from ``seed``. The concatenated
    drive is clipped at clip_db above its own RMS, biased up by the clip
    amplitude (so the floor sits at zero), optionally band-limited, and
    converted to field by a square root after power normalization. Square-law
    detection therefore returns a scaled copy of the drive.
    """
    if n_train < 1:
        raise ValueError("need at least one training frame")
    payload_bits = np.asarray(payload_bits, dtype=np.uint8)
    bpf = table.bits_per_frame
    if payload_bits.size:
        if bpf == 0:
            raise ValueError("payload bits supplied but the table carries none")
        if payload_bits.size % bpf:
            raise ValueError("payload does not fill a whole number of frames")
        n_payload = payload_bits.size // bpf
        payload_syms = map_frames(payload_bits, table)
    else:
        n_payload = 0
        payload_syms = np.zeros((config.n_used, 0), dtype=np.complex128)
    rng = np.random.default_rng(seed)
    train_bits = rng.integers(0, 2, size=2 * config.n_used * n_train, dtype=np.uint8)
    train_syms = map_frames(train_bits, uniform_qpsk_table(config))
    drive = np.concatenate([
        frames_to_drive(train_syms, config),
        frames_to_drive(payload_syms, config) if n_payload else np.empty(0),
    ])
    rms = float(np.sqrt(np.mean(drive**2)))
    if rms <= 0:
        raise ValueError("degenerate record: drive has no power")
    clip_amp = 10 ** (config.clip_db / 20) * rms
    drive = np.clip(drive, -clip_amp, clip_amp) + clip_amp
    if tx_filter is not None:
        w = Waveform(drive.astype(np.complex128), config.dac_rate)
        drive = np.maximum(apply_filter(w, tx_filter).samples.real, 0.0)
    intensity = drive * (mean_power_mw / np.mean(drive))
    field = np.sqrt(intensity)
    return DmtRecord(
        waveform=Waveform(field.astype(np.complex128), config.dac_rate),
        reference=intensity,
        config=config,
        table=table,
        n_train=n_train,
        n_payload=n_payload,
        train_symbols=train_syms,
        payload_symbols=payload_syms,
        payload_bits=payload_bits,
    )


def estimate_channel(rx_train: np.ndarray, tx_train: np.ndarray) -> np.ndarray:
    """Per-subcarrier complex gain: mean of rx/tx over the training frames."""
    if rx_train.shape != tx_train.shape:
        raise ValueError("training grids must align")
    return np.mean(rx_train / tx_train, axis=1)


def receive_record(w: Waveform, record: DmtRecord) -> DmtRxResult:
    """Demodulate a detected record against its transmitted description.

    Locates the record by correlation, strips cyclic prefixes, equalizes with
    the training-frame channel estimate and decides payload bits per the
    loading table. A subcarrier whose channel estimate vanishes cannot be
    equalized; its payload symbols decide from zero and count as errors.
    """
    config = record.config
    if w.sample_rate != config.dac_rate:
        raise ValueError("record rate does not match the DMT sample grid")
    detected = w.samples.real
    offset, quality = circular_sync(detected, record.reference)
    if quality < _SYNC_QUALITY_MIN:
        raise SyncError(f"pattern not found (sync quality {quality:.1f})")
    n = len(detected)
    total = record.n_train + record.n_payload
    starts = offset + np.arange(total)[:, None] * config.frame_len + config.cp_len
    idx = (starts + np.arange(config.fft_size)[None, :]) % n
    spectra = np.fft.rfft(detected[idx], axis=1)
    rx = spectra[:, 1 : config.n_used + 1].T
    channel = estimate_channel(rx[:, : record.n_train], record.train_symbols)
    dead = np.abs(channel) < 1e-30
    safe = np.where(dead, 1.0, channel)
    equalized = rx / safe[:, None]
    equalized[dead, :] = 0.0
    diag = {"offset": offset, "sync_quality": quality, "dead_subcarriers": int(dead.sum())}
    if record.n_payload == 0:
        return DmtRxResult(0, 0, np.empty(0, dtype=np.uint8), equalized, channel, diag)
    table = record.table
    offsets = _bit_offsets(table)
    payload = equalized[:, record.n_train :]
    decided = np.empty((record.n_payload, table.bits_per_frame), dtype=np.uint8)
    for k, (nk, off) in enumerate(zip(table.bits, offsets)):
        if nk == 0:
            continue
        z = payload[k] / np.sqrt(table.power_scale[k])
        decided[:, off : off + nk] = qam_decide(z, int(nk)).reshape(record.n_payload, nk)
    decided = decided.reshape(-1)
    errors = int(np.count_nonzero(decided != record.payload_bits))
    return DmtRxResult(errors, decided.size, decided, equalized, channel, diag)


def estimate_snr(
    equalized: np.ndarray, reference: np.ndarray, config: DmtConfig
) -> SnrProfile:
    """Error-vector SNR per subcarrier from known transmitted symbols.

    Needs at least 100 symbols per subcarrier for a usable estimate; the
    result is capped at 60 dB where the error power underflows.
    """
    if equalized.shape != reference.shape:
        raise ValueError("symbol grids must align")
    if equalized.shape[1] < 100:
        raise ValueError(
            f"need >= 100 symbols per subcarrier, got {equalized.shape[1]}"
        )
    sig = np.mean(np.abs(reference) ** 2, axis=1)
    err = np.mean(np.abs(equalized - reference) ** 2, axis=1)
    with np.errstate(divide="ignore"):
        snr = np.where(err > 0, sig / np.maximum(err, 1e-300), _SNR_CAP)
    return SnrProfile(np.minimum(snr, _SNR_CAP), config.subcarrier_freqs_hz())


def gap_from_ber(target_ber: float) -> float:
    """SNR gap (linear) for square QAM at a target pre-FEC BER."""
    if not 0 < target_ber < 0.5:
        raise ValueError("target BER must sit in (0, 0.5)")
    return float(q_inv(2.0 * target_ber)) ** 2 / 3.0


def bit_load(snr: np.ndarray, target_bits: int, gap: float) -> LoadingTable:
    """Greedy minimum-power loading to hit ``target_bits`` per frame.

    Each 2-bit increment on subcarrier k costs gap * 3 * 2^b / snr_k; the
    cheapest increment is always taken next, which is optimal because the
    per-subcarrier cost is convex in bits. Power scales are the gap-rule
    powers renormalized to the uniform budget, with the headroom recorded as
    ``margin``.
    """
    snr = np.asarray(snr, dtype=float)
    if target_bits < 0 or target_bits % 2:
        raise ValueError("target bits per frame must be even and >= 0")
    active = np.flatnonzero(snr > 0)
    if target_bits > MAX_BITS_PER_SYMBOL * active.size:
        raise RateInfeasibleError(
            f"{target_bits} bits/frame exceeds the {MAX_BITS_PER_SYMBOL * active.size} "
            f"supportable on {active.size} live subcarriers"
        )
    bits = np.zeros(snr.size, dtype=np.int64)
    heap = [(gap * 3.0 / snr[k], int(k)) for k in active]
    heapq.heapify(heap)
    remaining = target_bits
    while remaining > 0:
        cost, k = heapq.heappop(heap)
        bits[k] += 2
        remaining -= 2
        if bits[k] < MAX_BITS_PER_SYMBOL:
            heapq.heappush(heap, (gap * 3.0 * 2 ** bits[k] / snr[k], k))
    p_raw = np.zeros(snr.size)
    loaded = bits > 0
    p_raw[loaded] = gap * (2.0 ** bits[loaded] - 1) / snr[loaded]
    total = p_raw.sum()
    if total > 0:
        margin = snr.size / total
        scale = p_raw * margin
    else:
        margin = np.inf
        scale = p_raw
    return LoadingTable(bits=bits, power_scale=scale, gap=gap, margin=float(margin))


def max_loadable_bits(snr: np.ndarray, gap: float) -> int:
    """Largest even bits/frame whose raw gap-rule power fits the uniform budget.

    Same greedy increments as bit_load, stopped when the cheapest next
    increment would push the total power past one unit per used subcarrier.
    """
    snr = np.asarray(snr, dtype=float)
    budget = float(snr.size)
    bits = np.zeros(snr.size, dtype=np.int64)
    heap = [(gap * 3.0 / snr[k], int(k)) for k in np.flatnonzero(snr > 0)]
    heapq.heapify(heap)
    spent = 0.0
    total_bits = 0
    while heap:
        cost, k = heapq.heappop(heap)
        if spent + cost > budget:
            break
        spent += cost
        bits[k] += 2
        total_bits += 2
        if bits[k] < MAX_BITS_PER_SYMBOL:
            heapq.heappush(heap, (gap * 3.0 * 2 ** bits[k] / snr[k], k))
    return total_bits


def bits_per_frame_for_rate(rate_bps: float, config: DmtConfig) -> int:
    """Bits each frame must carry for a raw line rate, rounded up to even."""
    if rate_bps <= 0:
        raise ValueError("rate must be positive")
    exact = rate_bps * config.frame_len / config.dac_rate
    bits = int(np.ceil(exact))
    return bits + (bits % 2)


def raw_rate_bps(bits_per_frame: int, config: DmtConfig) -> float:
    """Raw line rate carried by a given per-frame bit count."""
    return bits_per_frame * config.dac_rate / config.frame_len


def probe_and_load(
    profile: SnrProfile, config: DmtConfig, rate_bps: float, target_ber: float
) -> LoadingTable:
    """Loading table for a raw line rate, given a measured SNR profile."""
    gap = gap_from_ber(target_ber)
    return bit_load(profile.snr_linear, bits_per_frame_for_rate(rate_bps, config), gap)
