"""PAM4 transmitter and receiver for the 56 GBd intensity-modulated lane.

The modulator is field-linear: the drive waveform directly sets the optical
field, so the two level schemes differ in where the eye openings sit after
square-law detection. Gray labeling keeps adjacent-level slips at one bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Literal

import numpy as np

from .channel import photodetect
from .signal_core import (
    BitStream,
    FilterSpec,
    SyncError,
    Waveform,
    apply_filter,
    bessel_lowpass,
    circular_sync,
    rectangular_lowpass,
)

# Gray labeling 00, 01, 11, 10 from the lowest level up. The table is its own
# inverse, so it serves both directions: bit pair value <-> level index.
GRAY_PAM4 = (0, 1, 3, 2)

ThresholdMode = Literal["midpoint", "variance-aware"]
LevelScheme = Literal["equidistant-field", "equidistant-power"]
LaneFilterKind = Literal["bessel-lowpass", "rectangular-lowpass"]

_SYNC_QUALITY_MIN = 8.0


def _lane_filter(kind: LaneFilterKind, cutoff_hz: float, order: int) -> FilterSpec:
    if kind == "bessel-lowpass":
        return bessel_lowpass(cutoff_hz, order)
    if kind == "rectangular-lowpass":
        return rectangular_lowpass(cutoff_hz)
    raise ValueError(f"unknown lane filter kind {kind!r}")


@dataclass(slots=True)
class PamScheme:
    """Lane parameters: 56 GBd PAM4 at 4 samples per symbol by default."""

    level_scheme: LevelScheme = "equidistant-field"
    symbol_rate: float = 56e9
    samples_per_symbol: int = 4
    tx_bandwidth_hz: float = 15e9
    rx_bandwidth_hz: float = 18e9
    filter_order: int = 5
    tx_filter_kind: LaneFilterKind = "bessel-lowpass"
    rx_filter_kind: LaneFilterKind = "bessel-lowpass"
    mean_power_mw: float = 1.0

    def __post_init__(self) -> None:
        if self.samples_per_symbol < 2:
            raise ValueError("need at least 2 samples per symbol")
        if self.mean_power_mw <= 0:
            raise ValueError("mean power must be positive")

    @property
    def sample_rate(self) -> float:
        return self.symbol_rate * self.samples_per_symbol

    def field_levels(self) -> np.ndarray:
        """Target field amplitudes per level index, at the scheme's mean power."""
        steps = np.array([0.0, 1 / 3, 2 / 3, 1.0])
        if self.level_scheme == "equidistant-field":
            # mean of steps^2 is 7/18
            amp = np.sqrt(self.mean_power_mw * 18.0 / 7.0)
            return steps * amp
        if self.level_scheme == "equidistant-power":
            # mean of steps is 1/2
            return np.sqrt(steps * 2.0 * self.mean_power_mw)
        raise ValueError(f"unknown level scheme {self.level_scheme!r}")


@dataclass(slots=True)
class FfeConfig:
    """Symbol-spaced feed-forward equalizer settings."""

    n_taps: int = 13
    method: Literal["ls", "lms"] = "ls"
    lms_step: float = 5e-3
    lms_epochs: int = 2

    def __post_init__(self) -> None:
        if self.n_taps < 1 or self.n_taps % 2 == 0:
            raise ValueError("n_taps must be odd and >= 1")


@dataclass(slots=True)
class Pam4Tx:
    """Modulator output: launch field plus the symbols/bits it encodes."""

    waveform: Waveform
    symbols: np.ndarray
    bits: np.ndarray
    scheme: PamScheme


@dataclass(slots=True)
class Pam4RxResult:
    """Receiver verdict over the payload (post-training) symbols."""

    bit_errors: int
    n_bits: int
    decided_bits: np.ndarray
    diagnostics: dict = dc_field(default_factory=dict)

    @property
    def ber(self) -> float:
        return self.bit_errors / self.n_bits if self.n_bits else 0.0


def pam4_map(bits: BitStream | np.ndarray) -> np.ndarray:
    """Bit pairs to Gray-labeled level indices."""
    b = bits.bits if isinstance(bits, BitStream) else np.asarray(bits, dtype=np.uint8)
    if len(b) % 2:
        raise ValueError("PAM4 needs an even bit count")
    pairs = b[0::2] * 2 + b[1::2]
    return np.asarray(GRAY_PAM4, dtype=np.int64)[pairs]


def pam4_unmap(symbols: np.ndarray) -> np.ndarray:
    """Level indices back to the bit stream."""
    vals = np.asarray(GRAY_PAM4, dtype=np.uint8)[np.asarray(symbols, dtype=np.int64)]
    bits = np.empty(2 * len(vals), dtype=np.uint8)
    bits[0::2] = vals >> 1
    bits[1::2] = vals & 1
    return bits


def pam4_modulate(bits: BitStream | np.ndarray, scheme: PamScheme) -> Pam4Tx:
    """NRZ PAM4 launch field: map, upsample, band-limit the drive, clamp.

    The transmit filter rings below zero on 0->3 style transitions; the
    modulator cannot produce negative field, so the drive is clamped before
    the record is rescaled to the scheme's mean launch power.
    """
    symbols = pam4_map(bits)
    b = bits.bits if isinstance(bits, BitStream) else np.asarray(bits, dtype=np.uint8)
    levels = scheme.field_levels()
    drive = np.repeat(levels[symbols], scheme.samples_per_symbol)
    w = Waveform(drive.astype(np.complex128), scheme.sample_rate)
    w = apply_filter(
        w, _lane_filter(scheme.tx_filter_kind, scheme.tx_bandwidth_hz, scheme.filter_order)
    )
    field = np.maximum(w.samples.real, 0.0)
    power = np.mean(field**2)
    if power <= 0:
        raise ValueError("degenerate drive: record has no power")
    field = field * np.sqrt(scheme.mean_power_mw / power)
    return Pam4Tx(
        waveform=Waveform(field.astype(np.complex128), scheme.sample_rate),
        symbols=symbols,
        bits=np.asarray(b, dtype=np.uint8).copy(),
        scheme=scheme,
    )


def gaussian_intersection(mu0: float, s0: float, mu1: float, s1: float) -> float:
    """Decision point where two Gaussian level densities cross.

    Falls back to the midpoint when the variances are degenerate or equal, or
    when no crossing lands between the two means.
    """
    if mu1 < mu0:
        mu0, s0, mu1, s1 = mu1, s1, mu0, s0
    mid = 0.5 * (mu0 + mu1)
    if s0 <= 0 or s1 <= 0:
        return mid
    a = 1.0 / s0**2 - 1.0 / s1**2
    if abs(a) < 1e-12 / max(s0, s1) ** 2:
        return mid
    b = -2.0 * (mu0 / s0**2 - mu1 / s1**2)
    c = mu0**2 / s0**2 - mu1**2 / s1**2 - 2.0 * np.log(s1 / s0)
    disc = b * b - 4 * a * c
    if disc < 0:
        return mid
    roots = ((-b - np.sqrt(disc)) / (2 * a), (-b + np.sqrt(disc)) / (2 * a))
    inside = [r for r in roots if mu0 < r < mu1]
    return float(inside[0]) if inside else mid


def decision_thresholds(
    means: np.ndarray, stds: np.ndarray, mode: ThresholdMode
) -> np.ndarray:
    """Three slicer thresholds from per-level statistics."""
    means = np.asarray(means, dtype=float)
    stds = np.asarray(stds, dtype=float)
    if means.shape != (4,) or stds.shape != (4,):
        raise ValueError("need statistics for exactly 4 levels")
    if mode == "midpoint":
        thr = (means[:-1] + means[1:]) / 2
    elif mode == "variance-aware":
        thr = np.array([
            gaussian_intersection(means[k], stds[k], means[k + 1], stds[k + 1])
            for k in range(3)
        ])
    else:
        raise ValueError(f"unknown threshold mode {mode!r}")
    return np.sort(thr)


def train_ffe(features: np.ndarray, targets: np.ndarray, config: FfeConfig) -> np.ndarray:
    """Fit equalizer taps to training symbols.

    Least squares goes through the normal equations and a dense solve, which
    is bit-stable across BLAS thread counts; a huge condition number means the
    training block cannot identify the taps.
    """
    x = np.asarray(features, dtype=float)
    t = np.asarray(targets, dtype=float)
    if x.ndim != 2 or x.shape[1] != config.n_taps:
        raise ValueError("features must be (n_train, n_taps)")
    if x.shape[0] != t.shape[0]:
        raise ValueError("features and targets disagree on training length")
    if x.shape[0] < 10 * config.n_taps:
        raise ValueError(
            f"training too short: {x.shape[0]} symbols for {config.n_taps} taps "
            f"(need >= {10 * config.n_taps})"
        )
    if config.method == "ls":
        gram = x.T @ x
        if np.linalg.cond(gram) > 1e12:
            raise ValueError("training block is rank deficient for this tap count")
        return np.linalg.solve(gram, x.T @ t)
    # LMS: start from a pass-through center tap, normalized step
    taps = np.zeros(config.n_taps)
    taps[config.n_taps // 2] = np.dot(x[:, config.n_taps // 2], t) / max(
        np.dot(x[:, config.n_taps // 2], x[:, config.n_taps // 2]), 1e-30
    )
    for _ in range(config.lms_epochs):
        for i in range(x.shape[0]):
            row = x[i]
            err = t[i] - row @ taps
            taps += config.lms_step * err * row / max(row @ row, 1e-30)
    return taps


def _window_features(samples: np.ndarray, n_taps: int) -> np.ndarray:
    """Circular symbol-spaced tap windows centered on each symbol."""
    n = len(samples)
    half = n_taps // 2
    idx = (np.arange(n)[:, None] + np.arange(-half, half + 1)[None, :]) % n
    return samples[idx]


def _locate(
    detected: np.ndarray, tx: Pam4Tx, n_probe: int
) -> tuple[int, int, float]:
    """Find the record offset and the best in-symbol sampling phase."""
    sps = tx.scheme.samples_per_symbol
    ref = np.repeat(tx.scheme.field_levels()[tx.symbols] ** 2, sps)
    offset, quality = circular_sync(detected, ref)
    if quality < _SYNC_QUALITY_MIN:
        raise SyncError(f"pattern not found (sync quality {quality:.1f})")
    n = len(detected)
    want = tx.scheme.field_levels()[tx.symbols[:n_probe]] ** 2
    best_phase, best_corr = 0, -np.inf
    for phase in range(sps):
        pick = detected[(offset + phase + np.arange(n_probe) * sps) % n]
        ps, ws = np.std(pick), np.std(want)
        corr = float(np.mean((pick - pick.mean()) * (want - want.mean())) / (ps * ws)) \
            if ps > 0 and ws > 0 else -np.inf
        if corr > best_corr:
            best_phase, best_corr = phase, corr
    if best_corr < 0.2:
        raise SyncError(f"sampling phase search failed (corr {best_corr:.2f})")
    return offset, best_phase, quality


def decide_and_count(
    z: np.ndarray,
    tx_symbols: np.ndarray,
    tx_bits: np.ndarray,
    n_train: int,
    thresholds: ThresholdMode,
) -> tuple[int, int, np.ndarray, dict]:
    """Slice symbol-rate samples against trained thresholds and count payload errors.

    The first ``n_train`` symbols calibrate the level statistics and are
    excluded from the error count.
    """
    z = np.asarray(z, dtype=float)
    if not 0 < n_train < len(z):
        raise ValueError("training must be a proper prefix of the record")
    train_z, train_sym = z[:n_train], tx_symbols[:n_train]
    means = np.empty(4)
    stds = np.empty(4)
    for lvl in range(4):
        mask = train_sym == lvl
        if not mask.any():
            raise ValueError(f"training never exercises level {lvl}")
        means[lvl] = train_z[mask].mean()
        stds[lvl] = train_z[mask].std()
    thr = decision_thresholds(means, stds, thresholds)
    decided = np.searchsorted(thr, z[n_train:])
    bits = pam4_unmap(decided)
    ref_bits = tx_bits[2 * n_train :]
    errors = int(np.count_nonzero(bits != ref_bits))
    diag = {"level_means": means, "level_stds": stds, "thresholds": thr}
    return errors, len(ref_bits), bits, diag


def pam4_receive(
    w: Waveform,
    tx: Pam4Tx,
    ffe: FfeConfig | None = None,
    thresholds: ThresholdMode = "midpoint",
    n_train: int | None = None,
    input_domain: Literal["detected", "optical"] = "detected",
) -> Pam4RxResult:
    """Demodulate a received record against the known transmitted pattern.

    ``input_domain="optical"`` photodetects the field first; otherwise the
    record is taken as the photocurrent. The chain is receive filter, pattern
    sync, symbol-rate sampling, optional equalizer, slicer. Errors are counted
    on the payload only.
    """
    scheme = tx.scheme
    if w.sample_rate != scheme.sample_rate:
        raise ValueError("record rate does not match the lane's sample grid")
    if input_domain == "optical":
        w = photodetect(w)
    w = apply_filter(
        w, _lane_filter(scheme.rx_filter_kind, scheme.rx_bandwidth_hz, scheme.filter_order)
    )
    detected = w.samples.real.copy()
    n_sym = len(tx.symbols)
    taps_n = ffe.n_taps if ffe is not None else 0
    if n_train is None:
        n_train = max(512, 10 * taps_n)
    if ffe is not None and n_train < 10 * ffe.n_taps:
        raise ValueError(
            f"{ffe.n_taps}-tap equalizer needs >= {10 * ffe.n_taps} training symbols"
        )
    if n_train >= n_sym:
        raise ValueError("record too short for the requested training length")
    offset, phase, quality = _locate(detected, tx, n_probe=min(n_train, 2048))
    sps = scheme.samples_per_symbol
    z = detected[(offset + phase + np.arange(n_sym) * sps) % len(detected)]
    diag: dict = {"offset": offset, "phase": phase, "sync_quality": quality}
    if ffe is not None:
        feats = _window_features(z, ffe.n_taps)
        ideal = scheme.field_levels()[tx.symbols] ** 2
        taps = train_ffe(feats[:n_train], ideal[:n_train], ffe)
        z = feats @ taps
        diag["ffe_taps"] = taps
    errors, n_bits, bits, sub = decide_and_count(
        z, tx.symbols, tx.bits, n_train, thresholds
    )
    diag.update(sub)
    return Pam4RxResult(bit_errors=errors, n_bits=n_bits, decided_bits=bits, diagnostics=diag)
