"""Fiber, noise and photodetection models for the direct-detection link.

The link is linear optics end to end: chromatic dispersion as an all-pass
phase, ASE loading calibrated to an OSNR target, optical filtering, then a
square-law photodiode. Nonlinearity and PMD are out of scope; loss is absorbed
into the OSNR setting, so field records stay at their launch power.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signal_core import FilterSpec, Waveform, apply_filter, filter_response, mean_power

C_M_PER_S = 299_792_458.0
OSNR_REF_BANDWIDTH_HZ = 12.5e9


@dataclass(slots=True)
class LinkSpec:
    """One span of standard single-mode fiber plus the receive-side optics.

    ``dispersion_ps_nm_km`` is the usual D coefficient; ``wavelength_nm`` sets
    the carrier. Optical filters listed in ``optical_filters`` act on the
    field after noise loading (both polarizations), in order.
    """

    distance_km: float
    dispersion_ps_nm_km: float = 17.0
    wavelength_nm: float = 1550.0
    optical_filters: list[FilterSpec] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.distance_km < 0:
            raise ValueError("distance must be >= 0")
        if self.wavelength_nm <= 0:
            raise ValueError("wavelength must be positive")


@dataclass(slots=True)
class WdmPlan:
    """Channel grid for multiplexing: ``n_channels`` slots on ``spacing_hz``.

    ``detuning_hz`` shifts every carrier off its slot center by the same
    amount (vestigial-sideband operation against the interleaver edges).
    ``mux_interleaver`` gives the passband shape each channel sees at its own
    multiplexer port; the same shape filters the slot again at the demux.
    """

    n_channels: int
    spacing_hz: float = 50e9
    detuning_hz: float = 0.0
    mux_interleaver: FilterSpec | None = None

    def __post_init__(self) -> None:
        if self.n_channels < 1:
            raise ValueError("need at least one channel")
        if self.spacing_hz <= 0:
            raise ValueError("spacing must be positive")

    def slot_center_hz(self, index: int) -> float:
        """Slot center of channel ``index`` relative to the composite center."""
        if not 0 <= index < self.n_channels:
            raise ValueError(f"channel index {index} out of range")
        return (index - (self.n_channels - 1) / 2) * self.spacing_hz


def cd_transfer(
    freqs: np.ndarray,
    distance_km: float,
    dispersion_ps_nm_km: float,
    wavelength_nm: float,
) -> np.ndarray:
    """All-pass chromatic dispersion transfer function H(f).

    D in ps/nm/km converts to s/m^2 by 1e-6; the quadratic phase is
    -pi * D * L * lambda^2 * f^2 / c.
    """
    d_si = dispersion_ps_nm_km * 1e-6
    length_m = distance_km * 1e3
    lam = wavelength_nm * 1e-9
    phase = -np.pi * d_si * length_m * lam**2 * np.asarray(freqs, dtype=float) ** 2 / C_M_PER_S
    return np.exp(1j * phase)


def apply_cd(w: Waveform, link: LinkSpec) -> Waveform:
    """Propagate the field through the span's chromatic dispersion."""
    if link.distance_km == 0:
        return w.with_samples(w.samples.copy())
    f = np.fft.fftfreq(len(w), 1.0 / w.sample_rate)
    h = cd_transfer(f, link.distance_km, link.dispersion_ps_nm_km, link.wavelength_nm)
    out = np.fft.ifft(np.fft.fft(w.samples) * h)
    return w.with_samples(out)


def dd_fading_factor(freqs: np.ndarray, link: LinkSpec) -> np.ndarray:
    """Power fading of a double-sideband intensity tone after detection.

    The upper and lower sidebands pick up opposite quadratic phases, so the
    detected tone scales by cos(pi * D * L * lambda^2 * f^2 / c); zeros of
    this factor are the dispersion notches.
    """
    d_si = link.dispersion_ps_nm_km * 1e-6
    length_m = link.distance_km * 1e3
    lam = link.wavelength_nm * 1e-9
    arg = np.pi * d_si * length_m * lam**2 * np.asarray(freqs, dtype=float) ** 2 / C_M_PER_S
    return np.cos(arg)


def fading_null_hz(link: LinkSpec, n: int = 1) -> float:
    """Frequency of the n-th dispersion notch (n = 1, 2, ...)."""
    if n < 1:
        raise ValueError("null index starts at 1")
    d_si = link.dispersion_ps_nm_km * 1e-6
    length_m = link.distance_km * 1e3
    lam = link.wavelength_nm * 1e-9
    return float(np.sqrt((2 * n - 1) * C_M_PER_S / (2 * d_si * length_m * lam**2)))


def ase_density_for_osnr(osnr_db: float, signal_power_mw: float) -> float:
    """Single-pol ASE density rho (mW/Hz) hitting a given OSNR.

    OSNR convention counts noise in both polarizations inside the 12.5 GHz
    reference bandwidth: OSNR = P / (2 * rho * B_ref).
    """
    osnr_lin = 10 ** (osnr_db / 10)
    return signal_power_mw / (2 * osnr_lin * OSNR_REF_BANDWIDTH_HZ)


def add_ase_noise(
    w: Waveform,
    osnr_db: float,
    rng_seed: int,
    include_orthogonal_pol: bool = True,
    signal_power_mw: float | None = None,
) -> tuple[Waveform, Waveform | None]:
    """Load white circular Gaussian ASE for a target OSNR.

    Returns the co-polarized field (signal + noise) and, when requested, the
    orthogonal-polarization noise record that the photodiode will also see.
    ``signal_power_mw`` overrides the measured record power for the OSNR
    bookkeeping (per-channel OSNR inside a WDM composite).
    """
    power = mean_power(w) if signal_power_mw is None else signal_power_mw
    if power <= 0:
        raise ValueError("signal power must be positive to set an OSNR")
    rho = ase_density_for_osnr(osnr_db, power)
    # White over the simulation band: per-sample complex variance rho * fs.
    var = rho * w.sample_rate
    rng = np.random.default_rng(rng_seed)
    n = len(w)
    scale = np.sqrt(var / 2)
    n_co = rng.normal(0.0, scale, n) + 1j * rng.normal(0.0, scale, n)
    co = w.with_samples(w.samples + n_co)
    if not include_orthogonal_pol:
        return co, None
    n_orth = rng.normal(0.0, scale, n) + 1j * rng.normal(0.0, scale, n)
    return co, w.with_samples(n_orth)


def photodetect(co: Waveform, orth: Waveform | None = None) -> Waveform:
    """Square-law detection: |E_co|^2 plus the orthogonal-pol power."""
    det = np.abs(co.samples) ** 2
    if orth is not None:
        if len(orth) != len(co) or orth.sample_rate != co.sample_rate:
            raise ValueError("polarization records must share the sample grid")
        det = det + np.abs(orth.samples) ** 2
    return Waveform(det.astype(np.complex128), co.sample_rate, 0.0)


def slot_passband(plan: WdmPlan, index: int) -> FilterSpec:
    """One mux/demux port's passband, centered on a slot.

    Same shape as the plan's interleaver but with a single passband in the
    simulation band (huge period): a port filters its own slot only, so
    neighbor-channel tails inside the slot survive as crosstalk while
    content a full grid step away does not ride along.
    """
    proto = plan.mux_interleaver
    bandwidth = proto.bandwidth_hz if proto is not None else 42e9
    order = proto.order if proto is not None else 3
    return FilterSpec(
        "interleaver",
        order=order,
        bandwidth_hz=bandwidth,
        period_hz=1e15,
        center_hz=plan.slot_center_hz(index),
    )


def wdm_mux(channels: list[Waveform], plan: WdmPlan, composite_rate: float) -> Waveform:
    """Assemble the composite field from per-channel baseband records.

    Each channel is FFT-upsampled to the composite rate, shifted to its slot
    center plus the common detuning, and filtered by its own mux port's slot
    passband before the ports are summed. Filtering before the sum is what
    truncates a wide signal to its slot (the vestigial-sideband edge when the
    carrier is detuned); the passband tails that overlap neighboring slots are
    the linear crosstalk. The composite grid must hold the outermost carrier
    plus half a slot: fs/2 >= max|f_slot + detuning| + spacing/2.
    """
    from .signal_core import frequency_shift, resample, sum_waveforms

    if len(channels) != plan.n_channels:
        raise ValueError(
            f"plan expects {plan.n_channels} channels, got {len(channels)}"
        )
    edges = [
        abs(plan.slot_center_hz(i) + plan.detuning_hz) + plan.spacing_hz / 2
        for i in range(plan.n_channels)
    ]
    if composite_rate / 2 < max(edges):
        raise ValueError(
            f"composite rate {composite_rate:.3e} cannot hold the channel plan "
            f"(needs >= {2 * max(edges):.3e})"
        )
    placed = []
    for i, ch in enumerate(channels):
        up = resample(ch, composite_rate)
        shifted = frequency_shift(up, plan.slot_center_hz(i) + plan.detuning_hz)
        if plan.mux_interleaver is not None:
            shifted = apply_filter(shifted, slot_passband(plan, i))
        placed.append(shifted)
    return sum_waveforms(placed)


def wdm_demux(composite: Waveform, plan: WdmPlan, index: int) -> Waveform:
    """Select one channel: slot passband, then shift the slot back to 0.

    The carrier stays at the detuning offset inside the passband, exactly as
    the vestigial-sideband receiver sees it.
    """
    from .signal_core import frequency_shift

    picked = apply_filter(composite, slot_passband(plan, index))
    return frequency_shift(picked, -plan.slot_center_hz(index))


def transmit(
    w: Waveform,
    link: LinkSpec,
    osnr_db: float | None,
    rng_seed: int = 0,
    include_orthogonal_pol: bool = True,
    signal_power_mw: float | None = None,
) -> Waveform:
    """Full single-channel leg: dispersion, noise loading, optics, detection.

    ``osnr_db=None`` runs the noiseless chain. Optical filters in the link act
    after the noise on both polarizations, as at a receiver-side demux.
    """
    out = apply_cd(w, link)
    if osnr_db is None:
        co, orth = out, None
    else:
        co, orth = add_ase_noise(
            out, osnr_db, rng_seed,
            include_orthogonal_pol=include_orthogonal_pol,
            signal_power_mw=signal_power_mw,
        )
    for spec in link.optical_filters:
        co = apply_filter(co, spec)
        if orth is not None:
            orth = apply_filter(orth, spec)
    return photodetect(co, orth)
