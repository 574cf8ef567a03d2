"""BER statistics, OSNR arithmetic and the search routines built on them.

Monte-Carlo counts come with Wilson confidence intervals so the searches can
stop as soon as a point is statistically resolved against the FEC target
instead of burning a fixed bit budget everywhere.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.special

from .channel import OSNR_REF_BANDWIDTH_HZ, ase_density_for_osnr
from .pam4 import PamScheme, decision_thresholds

_Z95 = 1.959963984540054


@dataclass(slots=True)
class BerResult:
    """Error count with its Wilson 95% interval half-width."""

    errors: int
    bits: int
    ber: float
    ci95: float

    @classmethod
    def from_counts(cls, errors: int, bits: int) -> "BerResult":
        if bits <= 0:
            raise ValueError("bit count must be positive")
        if not 0 <= errors <= bits:
            raise ValueError("error count out of range")
        p = errors / bits
        z2 = _Z95**2
        denom = 1 + z2 / bits
        half = _Z95 * np.sqrt(p * (1 - p) / bits + z2 / (4 * bits**2)) / denom
        return cls(errors=errors, bits=bits, ber=p, ci95=float(half))


@dataclass(frozen=True, slots=True)
class FecThreshold:
    """A decoder's input-BER limit and its rate overhead."""

    name: str
    ber_limit: float
    overhead: float

    @property
    def label(self) -> str:
        return f"{self.ber_limit:.1e}"

    def passes(self, ber: float) -> bool:
        return ber <= self.ber_limit

    def net_rate(self, raw_rate: float) -> float:
        return raw_rate / (1 + self.overhead)


HD_FEC = FecThreshold("hd-fec", 4e-3, 0.07)
SD_FEC = FecThreshold("sd-fec", 1.9e-2, 0.20)


def count_ber(decided: np.ndarray, reference: np.ndarray) -> BerResult:
    """Compare two bit arrays of equal length."""
    a = np.asarray(decided, dtype=np.uint8)
    b = np.asarray(reference, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return BerResult.from_counts(int(np.count_nonzero(a != b)), int(a.size))


def q_func(x: float | np.ndarray) -> float | np.ndarray:
    """Gaussian tail probability Q(x)."""
    return 0.5 * scipy.special.erfc(np.asarray(x) / np.sqrt(2.0))


def q_inv(p: float | np.ndarray) -> float | np.ndarray:
    """Inverse of the Gaussian tail: Q(q_inv(p)) = p."""
    return np.sqrt(2.0) * scipy.special.erfcinv(2.0 * np.asarray(p))


def ber_mqam_awgn(snr_linear: float | np.ndarray, m: int) -> float | np.ndarray:
    """Gray-coded square M-QAM bit error rate over AWGN."""
    if m < 4 or (m & (m - 1)) or int(np.log2(m)) % 2:
        raise ValueError(f"m must be an even power of two >= 4, got {m}")
    k = np.log2(m)
    arg = np.sqrt(3.0 * np.asarray(snr_linear) / (m - 1))
    return (4.0 / k) * (1.0 - 1.0 / np.sqrt(m)) * q_func(arg)


def osnr_to_snr(osnr_db: float, signal_bandwidth_hz: float, pols: int = 1) -> float:
    """OSNR (dB, dual-pol noise in 12.5 GHz) to electrical SNR (dB).

    SNR = OSNR * 2 B_ref / (pols * B): the noise that beats with the signal is
    the part inside the signal band, split across the polarizations the
    receiver uses. A 25 GHz single-polarization signal maps 1:1.
    """
    if signal_bandwidth_hz <= 0 or pols not in (1, 2):
        raise ValueError("need a positive bandwidth and pols in {1, 2}")
    factor = 2 * OSNR_REF_BANDWIDTH_HZ / (pols * signal_bandwidth_hz)
    return osnr_db + 10 * np.log10(factor)


def snr_to_osnr(snr_db: float, signal_bandwidth_hz: float, pols: int = 1) -> float:
    """Inverse of osnr_to_snr."""
    factor = 2 * OSNR_REF_BANDWIDTH_HZ / (pols * signal_bandwidth_hz)
    return snr_db - 10 * np.log10(factor)


def pam4_dd_ber_semianalytic(
    osnr_db: float,
    scheme: PamScheme | None = None,
    optical_bandwidth_hz: float | None = None,
    elec_bandwidth_hz: float | None = None,
) -> float:
    """Gaussian-noise PAM4 direct-detection BER at a given OSNR.

    Per level i with detected power P_i, the noise variance is the
    signal-spontaneous beat plus the spontaneous-spontaneous beat,
    4 P_i rho B_e + 2 rho^2 B_o B_e, with one ASE polarization reaching the
    detector. Decisions use the crossing points of the level densities; each
    adjacent-level slip costs one bit of the Gray-coded pair.
    """
    scheme = scheme or PamScheme()
    bo = optical_bandwidth_hz if optical_bandwidth_hz is not None else scheme.symbol_rate
    be = elec_bandwidth_hz if elec_bandwidth_hz is not None else bo / 2
    rho = ase_density_for_osnr(osnr_db, scheme.mean_power_mw)
    powers = scheme.field_levels() ** 2
    var = 4 * powers * rho * be + 2 * rho**2 * bo * be
    stds = np.sqrt(var)
    thr = decision_thresholds(powers, stds, "variance-aware")
    ber = 0.0
    for i in range(4):
        if i < 3:
            ber += 0.5 * float(q_func((thr[i] - powers[i]) / stds[i]))
        if i > 0:
            ber += 0.5 * float(q_func((powers[i] - thr[i - 1]) / stds[i]))
    return ber / 4.0


def evaluate_ber(
    trial: Callable[[int], tuple[int, int]],
    target_ber: float,
    max_bits: int = 2_000_000,
    min_batches: int = 2,
    rel_tol: float = 0.2,
) -> BerResult:
    """Accumulate Monte-Carlo batches until the point is resolved.

    ``trial(batch_index)`` returns (errors, bits) for one independent record.
    Stops when the Wilson interval is tight relative to the target, when the
    estimate is clearly on one side of the target, or at the bit budget.
    """
    if target_ber <= 0:
        raise ValueError("target BER must be positive")
    errors = bits = batches = 0
    while True:
        e, b = trial(batches)
        if b <= 0:
            raise ValueError("trial returned an empty batch")
        errors += int(e)
        bits += int(b)
        batches += 1
        result = BerResult.from_counts(errors, bits)
        if bits >= max_bits:
            return result
        if batches >= min_batches:
            if result.ci95 < rel_tol * target_ber:
                return result
            if abs(result.ber - target_ber) > result.ci95:
                return result


@dataclass(slots=True)
class RequiredOsnr:
    """Bisection outcome; ``saturated`` means the target held at the low edge."""

    osnr_db: float
    saturated: bool = False


class OutOfBracketError(ValueError):
    """BER stays above target across the whole OSNR bracket."""


def required_osnr(
    ber_at: Callable[[float], float],
    target_ber: float,
    lo_db: float = 5.0,
    hi_db: float = 50.0,
    tol_db: float = 0.1,
) -> RequiredOsnr:
    """Smallest OSNR meeting the target BER, by bisection.

    ``ber_at`` must be (statistically) non-increasing in OSNR. If even the low
    edge meets the target the result is flagged saturated; if the high edge
    does not, the bracket does not contain an answer and that is an error.
    """
    if hi_db <= lo_db:
        raise ValueError("empty OSNR bracket")
    ber_lo = ber_at(lo_db)
    if ber_lo <= target_ber:
        return RequiredOsnr(osnr_db=lo_db, saturated=True)
    ber_hi = ber_at(hi_db)
    if ber_hi > target_ber:
        raise OutOfBracketError(
            f"target {target_ber:.2e} unreachable: BER({lo_db:.1f} dB)={ber_lo:.2e}, "
            f"BER({hi_db:.1f} dB)={ber_hi:.2e}"
        )
    lo, hi = lo_db, hi_db
    while hi - lo > tol_db:
        mid = (lo + hi) / 2
        if ber_at(mid) > target_ber:
            lo = mid
        else:
            hi = mid
    return RequiredOsnr(osnr_db=(lo + hi) / 2)


@dataclass(slots=True)
class ReachResult:
    """Longest verified distance, with a note if the scan was not clean."""

    distance_km: float
    passed_any: bool
    warning: str | None = None


def max_reach(
    ber_at_km: Callable[[float], float],
    target_ber: float,
    scan_km: Sequence[float],
    refine_km: float = 1.0,
) -> ReachResult:
    """Longest distance whose BER meets the target.

    Scans the coarse grid in order, then bisects the first pass-to-fail
    interval down to ``refine_km``. A re-pass beyond the first failure gets
    reported as a warning rather than extending the reach: only the first
    contiguous passing interval counts.
    """
    scan = sorted(float(d) for d in scan_km)
    if not scan:
        raise ValueError("empty distance scan")
    passes: dict[float, bool] = {}

    def ok(d: float) -> bool:
        if d not in passes:
            passes[d] = ber_at_km(d) <= target_ber
        return passes[d]

    last_pass: float | None = None
    first_fail: float | None = None
    for d in scan:
        if ok(d):
            last_pass = d
        else:
            first_fail = d
            break
    warning = None
    if first_fail is not None:
        beyond = [d for d in scan if d > first_fail][:2]
        if any(ok(d) for d in beyond):
            warning = (
                f"non-monotone pass/fail beyond {first_fail:g} km; "
                "reporting the first passing interval"
            )
    if last_pass is None:
        return ReachResult(distance_km=0.0, passed_any=False, warning=warning)
    if first_fail is None:
        return ReachResult(
            distance_km=last_pass,
            passed_any=True,
            warning="no failure within the scanned range",
        )
    lo, hi = last_pass, first_fail
    while hi - lo > refine_km:
        mid = (lo + hi) / 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return ReachResult(distance_km=lo, passed_any=True, warning=warning)


def stable_seed(*parts: object) -> int:
    """Deterministic 63-bit seed from the reprs of the identifying values.

    Process-independent (unlike ``hash``) so parallel sweeps land on the same
    noise realizations no matter how points are scheduled.
    """
    text = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
