"""Core signal types and generic waveform operations.

Every simulation leg shares one representation: a complex baseband field
record on a uniform sample grid. Field amplitude is in sqrt(mW), so
mean |x|^2 is an optical power in mW.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
import scipy.signal

FilterKind = Literal["bessel-lowpass", "interleaver", "rectangular-lowpass"]

# Maximal-length LFSR feedback taps: polynomial x^order + x^m + 1.
_PRBS_TAPS = {7: 6, 15: 14, 23: 18, 31: 28}


class SyncError(RuntimeError):
    """A receiver could not locate its transmitted pattern in the record."""


@dataclass(slots=True)
class Waveform:
    """Uniformly sampled complex field record.

    ``center_offset`` tracks where this record's baseband sits relative to the
    composite frequency grid (0 for single-channel work, the slot frequency
    after WDM placement).
    """

    samples: np.ndarray
    sample_rate: float
    center_offset: float = 0.0

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        self.samples = np.asarray(self.samples, dtype=np.complex128)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "Waveform":
        """New record on the same grid with replaced samples."""
        return Waveform(samples, self.sample_rate, self.center_offset)


@dataclass(slots=True)
class BitStream:
    """A 0/1 sequence plus a tag recording where it came from."""

    bits: np.ndarray
    origin: str = ""

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.size and bits.max(initial=0) > 1:
            raise ValueError("bits must contain only 0/1 values")
        self.bits = bits

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(slots=True)
class FilterSpec:
    """Frequency-domain filter description.

    ``cutoff_hz`` is the -3 dB frequency for bessel-lowpass and the brick-wall
    edge for rectangular-lowpass; interleavers are periodic super-Gaussian
    passbands described by ``bandwidth_hz`` (-3 dB width) and ``period_hz``.
    ``center_hz`` offsets the response on the record's frequency grid.
    """

    kind: FilterKind
    cutoff_hz: float | None = None
    order: int = 5
    bandwidth_hz: float | None = None
    period_hz: float | None = None
    center_hz: float = 0.0

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError(f"filter order must be >= 1, got {self.order}")
        if self.kind in ("bessel-lowpass", "rectangular-lowpass"):
            if self.cutoff_hz is None or self.cutoff_hz <= 0:
                raise ValueError(f"{self.kind} needs a positive cutoff_hz")
        elif self.kind == "interleaver":
            if self.bandwidth_hz is None or self.bandwidth_hz <= 0:
                raise ValueError("interleaver needs a positive bandwidth_hz")
            if self.period_hz is None or self.period_hz <= self.bandwidth_hz:
                raise ValueError("interleaver period must exceed its passband width")
        else:
            raise ValueError(f"unknown filter kind {self.kind!r}")


def bessel_lowpass(cutoff_hz: float, order: int = 5, center_hz: float = 0.0) -> FilterSpec:
    return FilterSpec("bessel-lowpass", cutoff_hz=cutoff_hz, order=order, center_hz=center_hz)


def rectangular_lowpass(cutoff_hz: float, center_hz: float = 0.0) -> FilterSpec:
    return FilterSpec("rectangular-lowpass", cutoff_hz=cutoff_hz, order=1, center_hz=center_hz)


def interleaver(
    period_hz: float = 50e9,
    bandwidth_hz: float = 42e9,
    order: int = 3,
    center_hz: float = 0.0,
) -> FilterSpec:
    return FilterSpec(
        "interleaver",
        order=order,
        bandwidth_hz=bandwidth_hz,
        period_hz=period_hz,
        center_hz=center_hz,
    )


def _seed_to_state(order: int, seed: int | Iterable[int] | None) -> int:
    """Normalize a seed (int register value or bit sequence) to a register int."""
    if seed is None:
        return (1 << order) - 1
    if isinstance(seed, (int, np.integer)):
        state = int(seed)
        if not 0 <= state < (1 << order):
            raise ValueError(f"seed must fit in {order} register bits")
        return state
    bits = list(seed)
    if len(bits) != order:
        raise ValueError(f"seed bit pattern must have length {order}")
    state = 0
    for i, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError("seed bits must be 0/1")
        state |= b << i
    return state


def prbs_generate(order: int, n: int, seed: int | Iterable[int] | None = None) -> BitStream:
    """First ``n`` bits of the maximal-length PRBS of the given order.

    Fibonacci LFSR with feedback x^order + x^m + 1 (standard tap pairs); the
    output bit is the register's oldest bit, so the first ``order`` outputs
    read the seed register out directly. Every register sequence satisfies the
    characteristic recurrence o[t] = o[t-order] ^ o[t-m], and so do its
    GF(2)-squared forms o[t] = o[t-order*k] ^ o[t-m*k] for k a power of two,
    which lets each vectorized extension step nearly double the generated
    length instead of stepping the register bit by bit.
    """
    if order not in _PRBS_TAPS:
        raise ValueError(f"order must be one of {sorted(_PRBS_TAPS)}, got {order}")
    if n < 0:
        raise ValueError("n must be >= 0")
    state = _seed_to_state(order, seed)
    if state == 0:
        raise ValueError("zero seed would lock the register at all-zeros")
    m = _PRBS_TAPS[order]
    out = np.empty(max(n, order), dtype=np.uint8)
    for i in range(order):
        out[i] = (state >> (order - 1 - i)) & 1
    filled = order
    while filled < out.size:
        k = 1
        while order * (k * 2) <= filled:
            k *= 2
        lag_long, lag_short = order * k, m * k
        ln = min(lag_short, out.size - filled)
        np.bitwise_xor(
            out[filled - lag_long : filled - lag_long + ln],
            out[filled - lag_short : filled - lag_short + ln],
            out=out[filled : filled + ln],
        )
        filled += ln
    return BitStream(out[:n].copy(), origin=f"prbs{order}/seed={state:#x}")


def frequency_shift(w: Waveform, df: float) -> Waveform:
    """Multiply by exp(i*2*pi*df*t); caller is responsible for aliasing."""
    if df == 0:
        return w.with_samples(w.samples.copy())
    t = np.arange(len(w)) / w.sample_rate
    shifted = w.samples * np.exp(2j * np.pi * df * t)
    return Waveform(shifted, w.sample_rate, w.center_offset + df)


def filter_response(spec: FilterSpec, freqs: np.ndarray) -> np.ndarray:
    """Complex transfer function of ``spec`` evaluated at ``freqs`` (Hz)."""
    f = np.asarray(freqs, dtype=float) - spec.center_hz
    if spec.kind == "bessel-lowpass":
        b, a = scipy.signal.bessel(
            spec.order, 2 * np.pi * spec.cutoff_hz, btype="low", analog=True,
            output="ba", norm="mag",
        )
        s = 2j * np.pi * f
        return np.polyval(b, s) / np.polyval(a, s)
    if spec.kind == "rectangular-lowpass":
        return (np.abs(f) <= spec.cutoff_hz).astype(np.complex128)
    # interleaver: periodic super-Gaussian passband; the field response is the
    # sqrt of a power transmission that reads -3 dB at +-bandwidth/2
    delta = np.mod(f + spec.period_hz / 2, spec.period_hz) - spec.period_hz / 2
    expo = (2.0 * delta / spec.bandwidth_hz) ** (2 * spec.order)
    return np.exp(-0.5 * np.log(2.0) * expo).astype(np.complex128)


def apply_filter(w: Waveform, spec: FilterSpec) -> Waveform:
    """Frequency-domain multiplication on the record's own FFT grid."""
    nyquist = w.sample_rate / 2
    if spec.kind != "interleaver" and spec.cutoff_hz >= nyquist:
        raise ValueError(
            f"cutoff {spec.cutoff_hz:.3e} Hz is not below Nyquist {nyquist:.3e} Hz"
        )
    f = np.fft.fftfreq(len(w), 1.0 / w.sample_rate)
    out = np.fft.ifft(np.fft.fft(w.samples) * filter_response(spec, f))
    return w.with_samples(out)


def mean_power(w: Waveform) -> float:
    """Mean |x|^2 in mW."""
    if len(w) == 0:
        raise ValueError("mean power of an empty waveform is undefined")
    return float(np.mean(np.abs(w.samples) ** 2))


def sum_waveforms(ws: list[Waveform]) -> Waveform:
    """Elementwise sum over the common (shortest) length."""
    if not ws:
        raise ValueError("need at least one waveform")
    rates = {w.sample_rate for w in ws}
    if len(rates) != 1:
        raise ValueError(f"mismatched sample rates: {sorted(rates)}")
    n = min(len(w) for w in ws)
    total = np.zeros(n, dtype=np.complex128)
    for w in ws:
        total += w.samples[:n]
    return Waveform(total, ws[0].sample_rate, 0.0)


def resample(w: Waveform, new_rate: float) -> Waveform:
    """FFT resampling to a new rate; sample counts must stay integral.

    Upsampling is exact for band-limited records; downsampling brick-walls
    anything above the new Nyquist.
    """
    if new_rate == w.sample_rate:
        return w.with_samples(w.samples.copy())
    exact = len(w) * new_rate / w.sample_rate
    n_new = round(exact)
    if abs(exact - n_new) > 1e-9:
        raise ValueError("record length does not resample to an integer sample count")
    out = scipy.signal.resample(w.samples, n_new)
    return Waveform(out, new_rate, w.center_offset)


def circular_sync(x: np.ndarray, ref: np.ndarray) -> tuple[int, float]:
    """Integer offset of ``ref`` inside circular record ``x``.

    Returns (offset, quality) where quality is the correlation peak expressed
    as a z-score against the rest of the correlation function; small values
    mean the reference was not found.
    """
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if len(ref) > len(x):
        raise ValueError("reference longer than the record")
    x0 = x - x.mean()
    r0 = ref - ref.mean()
    corr = np.fft.irfft(np.fft.rfft(x0) * np.conj(np.fft.rfft(r0, len(x0))), len(x0))
    offset = int(np.argmax(corr))
    spread = float(np.std(corr))
    if spread == 0.0:
        return offset, 0.0
    quality = float((corr[offset] - np.mean(corr)) / spread)
    return offset, quality
