"""Link experiments: the runnable scenarios behind the CLI and their trials.

Each scenario expands into independent points (one OSNR, one distance, one
channel plan), every point re-derives its random seeds from the identifying
values, and the resulting rows all share one flat column set so downstream
tooling reads a single CSV shape regardless of scenario kind.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .channel import (
    LinkSpec,
    WdmPlan,
    add_ase_noise,
    apply_cd,
    photodetect,
    transmit,
    wdm_demux,
    wdm_mux,
)
from .dmt import (
    DmtConfig,
    DmtRecord,
    LoadingTable,
    RateInfeasibleError,
    SnrProfile,
    build_record,
    estimate_snr,
    probe_and_load,
    receive_record,
    uniform_qpsk_table,
)
from .metrics import (
    HD_FEC,
    SD_FEC,
    BerResult,
    ber_mqam_awgn,
    evaluate_ber,
    osnr_to_snr,
    pam4_dd_ber_semianalytic,
    required_osnr,
    stable_seed,
)
from .pam4 import (
    FfeConfig,
    PamScheme,
    Pam4Tx,
    decide_and_count,
    pam4_map,
    pam4_modulate,
    pam4_receive,
)
from .signal_core import (
    Waveform,
    interleaver,
    mean_power,
    prbs_generate,
    resample,
)

RESULT_COLUMNS = [
    "schema_version", "scenario_id", "kind", "series", "axis_name", "axis_value",
    "osnr_db", "distance_km", "rate_gbps", "channel_index",
    "ber", "ci95", "errors", "bits",
    "hd_limit", "hd_pass", "sd_limit", "sd_pass",
    "required_osnr_db", "aggregate_rate_gbps", "net_rate_hd_gbps",
    "net_rate_sd_gbps", "snr_profile_ref",
]

PROFILE_COLUMNS = [
    "schema_version", "scenario_id", "kind", "series",
    "subcarrier", "freq_ghz", "snr_db", "bits", "power_scale",
]

SCHEMA_VERSION = 1

# training frames carried by every payload record, enough for a clean
# channel estimate without paying the probe's 100-symbol SNR floor
_PAYLOAD_TRAIN_FRAMES = 50
_MATCHED_TRAIN_SYMBOLS = 512


@dataclass(slots=True)
class ScenarioResult:
    rows: list[dict] = dc_field(default_factory=list)
    profile_rows: list[dict] = dc_field(default_factory=list)


def _row(sid: str, kind: str, **kw) -> dict:
    row = dict.fromkeys(RESULT_COLUMNS)
    row["schema_version"] = SCHEMA_VERSION
    row["scenario_id"] = sid
    row["kind"] = kind
    row["hd_limit"] = HD_FEC.label
    row["sd_limit"] = SD_FEC.label
    row.update(kw)
    return row


def _ber_fields(r: BerResult) -> dict:
    return {
        "ber": r.ber, "ci95": r.ci95, "errors": r.errors, "bits": r.bits,
        "hd_pass": HD_FEC.passes(r.ber), "sd_pass": SD_FEC.passes(r.ber),
    }


def _prbs_payload(n_bits: int, seed: int) -> np.ndarray:
    register = (seed & 0x7FFFFFFF) or 1
    return prbs_generate(31, n_bits, seed=register).bits


# ---------------------------------------------------------------------------
# PAM4 trials


def pam4_full_trial(
    level_scheme: str,
    osnr_db: float | None,
    distance_km: float,
    ffe_taps: int,
    thresholds: str,
    n_symbols: int,
    seed: int,
    tx_bandwidth_hz: float = 15e9,
    rx_bandwidth_hz: float = 18e9,
    tx_filter_kind: str = "bessel-lowpass",
    rx_filter_kind: str = "bessel-lowpass",
) -> tuple[int, int]:
    """One end-to-end waveform record through the dispersive link."""
    scheme = PamScheme(
        level_scheme=level_scheme,
        tx_bandwidth_hz=tx_bandwidth_hz,
        rx_bandwidth_hz=rx_bandwidth_hz,
        tx_filter_kind=tx_filter_kind,
        rx_filter_kind=rx_filter_kind,
    )
    bits = _prbs_payload(2 * n_symbols, stable_seed("pam4-bits", seed))
    tx = pam4_modulate(bits, scheme)
    det = transmit(
        tx.waveform, LinkSpec(distance_km), osnr_db,
        rng_seed=stable_seed("pam4-noise", seed),
    )
    ffe = FfeConfig(n_taps=ffe_taps) if ffe_taps else None
    res = pam4_receive(det, tx, ffe=ffe, thresholds=thresholds)
    return res.bit_errors, res.n_bits


def pam4_matched_trial(
    level_scheme: str,
    osnr_db: float,
    n_symbols: int,
    seed: int,
    thresholds: str = "variance-aware",
) -> tuple[int, int]:
    """Back-to-back matched-filter bound for one noise realization.

    Ideal NRZ launch, co-polarized ASE only, and a symbol-length boxcar on
    the field sampled once per symbol: the noise bandwidth equals the symbol
    rate and there is no ISI, which is the regime the Gaussian level model
    describes exactly.
    """
    scheme = PamScheme(level_scheme=level_scheme)
    bits = _prbs_payload(2 * n_symbols, stable_seed("pam4m-bits", seed))
    symbols = pam4_map(bits)
    levels = scheme.field_levels()
    sps = scheme.samples_per_symbol
    field = np.repeat(levels[symbols], sps).astype(np.complex128)
    w = Waveform(field, scheme.sample_rate)
    co, _ = add_ase_noise(
        w, osnr_db, stable_seed("pam4m-noise", seed), include_orthogonal_pol=False
    )
    filtered = co.samples.reshape(n_symbols, sps).mean(axis=1)
    z = np.abs(filtered) ** 2
    errors, n_bits, _, _ = decide_and_count(
        z, symbols, bits, _MATCHED_TRAIN_SYMBOLS, thresholds
    )
    return errors, n_bits


# ---------------------------------------------------------------------------
# DMT trials


def dmt_probe_profile(
    config: DmtConfig,
    link: LinkSpec,
    osnr_db: float,
    n_train: int,
    record_seed: int,
    noise_seed: int,
) -> SnrProfile:
    """Uniform-QPSK probe through the link; returns the per-subcarrier SNR."""
    rec = build_record(
        config, uniform_qpsk_table(config), np.empty(0, dtype=np.uint8),
        n_train=n_train, seed=record_seed,
    )
    det = transmit(rec.waveform, link, osnr_db, rng_seed=noise_seed)
    rx = receive_record(det, rec)
    return estimate_snr(rx.equalized, rec.train_symbols, config)


def dmt_payload_trial(
    config: DmtConfig,
    link: LinkSpec,
    table: LoadingTable,
    osnr_db: float,
    n_payload: int,
    seed: int,
) -> tuple[int, int]:
    """One loaded record through the link; returns payload error counts."""
    bits = _prbs_payload(table.bits_per_frame * n_payload, stable_seed("dmt-bits", seed))
    rec = build_record(
        config, table, bits,
        n_train=_PAYLOAD_TRAIN_FRAMES, seed=stable_seed("dmt-rec", seed),
    )
    det = transmit(rec.waveform, link, osnr_db, rng_seed=stable_seed("dmt-noise", seed))
    rx = receive_record(det, rec)
    return rx.bit_errors, rx.n_bits


# ---------------------------------------------------------------------------
# WDM composite


def wdm_composite_rate(plan: WdmPlan, dac_rate: float) -> float:
    """Smallest integer multiple of the DAC rate that holds the channel plan."""
    edges = [
        abs(plan.slot_center_hz(i) + plan.detuning_hz) + plan.spacing_hz / 2
        for i in range(plan.n_channels)
    ]
    m = int(np.ceil(2 * max(edges) / dac_rate))
    return max(m, 1) * dac_rate


def wdm_pass(
    records: list[DmtRecord],
    plan: WdmPlan,
    distance_km: float,
    osnr_db: float,
    noise_seed: int,
) -> list:
    """Mux, propagate, demux and demodulate every channel of a composite.

    The per-channel OSNR convention divides the composite power evenly, and
    each demultiplexed field is detected at the composite rate (so detection
    products land where they physically do) before resampling to the DAC grid.
    """
    dac = records[0].config.dac_rate
    comp_rate = wdm_composite_rate(plan, dac)
    comp = wdm_mux([r.waveform for r in records], plan, comp_rate)
    comp = apply_cd(comp, LinkSpec(distance_km))
    per_channel_mw = mean_power(comp) / plan.n_channels
    co, orth = add_ase_noise(comp, osnr_db, noise_seed, signal_power_mw=per_channel_mw)
    out = []
    for i, rec in enumerate(records):
        ch_co = wdm_demux(co, plan, i)
        ch_orth = wdm_demux(orth, plan, i)
        det = resample(photodetect(ch_co, ch_orth), dac)
        out.append(receive_record(det, rec))
    return out


# ---------------------------------------------------------------------------
# analytic back-to-back series


def _analytic_models() -> list[tuple[str, object]]:
    def mqam(m: int, bandwidth_hz: float, pols: int):
        def f(osnr_db: float) -> float:
            snr = 10 ** (osnr_to_snr(osnr_db, bandwidth_hz, pols) / 10)
            return float(ber_mqam_awgn(snr, m))
        return f

    return [
        ("pam4-semianalytic", lambda o: pam4_dd_ber_semianalytic(o)),
        ("dmt-qpsk-56ghz", mqam(4, 56e9, 1)),
        ("dmt-16qam-28ghz", mqam(16, 28e9, 1)),
        ("pdm-64qam-37ghz", mqam(64, 448e9 / 12, 2)),
    ]


# ---------------------------------------------------------------------------
# point execution


def run_point(point: dict) -> tuple[list[dict], list[dict]]:
    """Execute one scenario point; safe to run in a worker process."""
    ptype = point["type"]
    sid, kind, seed = point["sid"], point["kind"], point["seed"]
    target = point.get("target_ber", HD_FEC.ber_limit)

    if ptype == "analytic":
        rows = []
        for name, model in _analytic_models():
            req = None
            if point["compute_required_osnr"]:
                req = required_osnr(model, target).osnr_db
            for osnr in point["osnr_db"]:
                ber = float(model(osnr))
                rows.append(_row(
                    sid, kind, series=name, axis_name="osnr_db",
                    axis_value=float(osnr), osnr_db=float(osnr), distance_km=0.0,
                    ber=ber, hd_pass=HD_FEC.passes(ber), sd_pass=SD_FEC.passes(ber),
                    required_osnr_db=req,
                ))
        return rows, []

    if ptype == "pam4-point":
        osnr = float(point["osnr_db"])
        dist = float(point["distance_km"])
        n_symbols = max(point["batch_bits"] // 2, 4 * _MATCHED_TRAIN_SYMBOLS)

        def trial(batch: int) -> tuple[int, int]:
            s = stable_seed(seed, kind, point["axis_name"], point["axis_value"], batch)
            if point["format"] == "pam4-matched":
                return pam4_matched_trial(
                    point["level_scheme"], osnr, n_symbols, s, point["thresholds"]
                )
            return pam4_full_trial(
                point["level_scheme"], osnr, dist, point["ffe_taps"],
                point["thresholds"], n_symbols, s, **point["lane"],
            )

        res = evaluate_ber(trial, target, max_bits=point["max_bits"])
        return [_row(
            sid, kind, series=point["series"], axis_name=point["axis_name"],
            axis_value=point["axis_value"], osnr_db=osnr, distance_km=dist,
            **_ber_fields(res),
        )], []

    if ptype == "dmt-point":
        config = DmtConfig()
        osnr = float(point["osnr_db"])
        dist = float(point["distance_km"])
        rate_bps = float(point["rate_gbps"]) * 1e9
        link = LinkSpec(dist)
        profile = dmt_probe_profile(
            config, link, osnr, point["n_train"],
            record_seed=stable_seed(seed, "probe-rec", dist, osnr),
            noise_seed=stable_seed(seed, "probe-noise", dist, osnr),
        )
        base = dict(
            series=point["series"], axis_name=point["axis_name"],
            axis_value=point["axis_value"], osnr_db=osnr, distance_km=dist,
            rate_gbps=float(point["rate_gbps"]),
            snr_profile_ref=point.get("snr_profile_ref"),
        )
        try:
            table = probe_and_load(profile, config, rate_bps, target)
        except RateInfeasibleError:
            return [_row(sid, kind, hd_pass=False, sd_pass=False, **base)], []
        n_payload = max(2, -(-point["batch_bits"] // table.bits_per_frame))

        def trial(batch: int) -> tuple[int, int]:
            s = stable_seed(seed, kind, point["rate_gbps"], dist, osnr, batch)
            return dmt_payload_trial(config, link, table, osnr, n_payload, s)

        res = evaluate_ber(trial, target, max_bits=point["max_bits"])
        return [_row(sid, kind, **base, **_ber_fields(res))], []

    if ptype == "dmt-profile":
        config = DmtConfig()
        osnr = float(point["osnr_db"])
        dist = float(point["distance_km"])
        link = LinkSpec(dist)
        profile = dmt_probe_profile(
            config, link, osnr, point["n_train"],
            record_seed=stable_seed(seed, "probe-rec", dist, osnr),
            noise_seed=stable_seed(seed, "probe-noise", dist, osnr),
        )
        prows = []
        for rate in point["rates_gbps"]:
            try:
                table = probe_and_load(profile, config, float(rate) * 1e9, target)
                bits, scale = table.bits, table.power_scale
            except RateInfeasibleError:
                bits = np.zeros(config.n_used, dtype=int)
                scale = np.zeros(config.n_used)
            series = point["series_fmt"].format(rate=float(rate), dist=dist)
            for k in range(config.n_used):
                prows.append({
                    "schema_version": SCHEMA_VERSION, "scenario_id": sid,
                    "kind": kind, "series": series, "subcarrier": k + 1,
                    "freq_ghz": profile.freq_hz[k] / 1e9,
                    "snr_db": float(profile.snr_db()[k]),
                    "bits": int(bits[k]), "power_scale": float(scale[k]),
                })
        return [], prows

    if ptype == "vsb-wdm":
        return _run_vsb_wdm(point)

    raise ValueError(f"unknown point type {ptype!r}")


def _run_vsb_wdm(point: dict) -> tuple[list[dict], list[dict]]:
    sid, kind, seed = point["sid"], point["kind"], point["seed"]
    target = point["target_ber"]
    config = DmtConfig()
    plan = WdmPlan(
        n_channels=point["n_channels"],
        spacing_hz=point["spacing_ghz"] * 1e9,
        detuning_hz=point["detuning_ghz"] * 1e9,
        mux_interleaver=interleaver(
            period_hz=point["spacing_ghz"] * 1e9,
            bandwidth_hz=point["interleaver_width_ghz"] * 1e9,
            order=point["interleaver_order"],
        ),
    )
    dist = float(point["distance_km"])
    osnr = float(point["osnr_db"])
    rate_bps = float(point["rate_gbps"]) * 1e9
    n = plan.n_channels

    probe_recs = [
        build_record(
            config, uniform_qpsk_table(config), np.empty(0, dtype=np.uint8),
            n_train=point["n_train"], seed=stable_seed(seed, "wdm-probe-rec", i),
        )
        for i in range(n)
    ]
    probe_rx = wdm_pass(probe_recs, plan, dist, osnr, stable_seed(seed, "wdm-probe-noise"))
    tables: list[LoadingTable | None] = []
    for i in range(n):
        profile = estimate_snr(probe_rx[i].equalized, probe_recs[i].train_symbols, config)
        try:
            tables.append(probe_and_load(profile, config, rate_bps, target))
        except RateInfeasibleError:
            tables.append(None)

    live = [i for i in range(n) if tables[i] is not None]
    errors = np.zeros(n, dtype=np.int64)
    bits = np.zeros(n, dtype=np.int64)
    if live:
        bpf = tables[live[0]].bits_per_frame
        n_payload = max(2, -(-point["batch_bits"] // bpf))
        for b in range(point["n_batches"]):
            recs = []
            for i in range(n):
                table = tables[i] if tables[i] is not None else uniform_qpsk_table(config)
                payload = _prbs_payload(
                    table.bits_per_frame * n_payload, stable_seed(seed, "wdm-bits", i, b)
                )
                recs.append(build_record(
                    config, table, payload,
                    n_train=_PAYLOAD_TRAIN_FRAMES,
                    seed=stable_seed(seed, "wdm-rec", i, b),
                ))
            rx = wdm_pass(recs, plan, dist, osnr, stable_seed(seed, "wdm-noise", b))
            for i in live:
                errors[i] += rx[i].bit_errors
                bits[i] += rx[i].n_bits

    rows = []
    results = {
        i: BerResult.from_counts(int(errors[i]), int(bits[i])) for i in live if bits[i]
    }
    rate = float(point["rate_gbps"])
    # raw aggregate is pure line-rate bookkeeping (n channels x per-channel
    # rate); the per-channel hd/sd columns say which lanes actually survive.
    aggregate = n * rate
    for i in range(n):
        base = dict(
            series="per-channel", axis_name="channel_index", axis_value=float(i),
            osnr_db=osnr, distance_km=dist, rate_gbps=rate, channel_index=i,
            aggregate_rate_gbps=aggregate,
            net_rate_hd_gbps=HD_FEC.net_rate(aggregate),
            net_rate_sd_gbps=SD_FEC.net_rate(aggregate),
        )
        if i in results:
            rows.append(_row(sid, kind, **base, **_ber_fields(results[i])))
        else:
            rows.append(_row(sid, kind, hd_pass=False, sd_pass=False, **base))
    return rows, []


# ---------------------------------------------------------------------------
# point builders


def _lane_params(p: dict) -> dict:
    """PAM4 lane filter knobs from scenario params, in trial-kwarg form."""
    return {
        "tx_bandwidth_hz": float(p.get("tx_bandwidth_ghz", 15.0)) * 1e9,
        "rx_bandwidth_hz": float(p.get("rx_bandwidth_ghz", 18.0)) * 1e9,
        "tx_filter_kind": p.get("tx_filter_kind", "bessel-lowpass"),
        "rx_filter_kind": p.get("rx_filter_kind", "bessel-lowpass"),
    }


def _points_b2b(spec: dict) -> list[dict]:
    p = spec["params"]
    common = {"sid": spec["id"], "kind": spec["kind"], "seed": spec.get("seed", 0),
              "target_ber": p.get("target_ber", HD_FEC.ber_limit)}
    fmt = p["format"]
    if fmt == "analytic":
        return [{
            "type": "analytic", **common,
            "osnr_db": [float(o) for o in p["osnr_db"]],
            "compute_required_osnr": p.get("compute_required_osnr", True),
        }]
    points = []
    if fmt in ("pam4", "pam4-matched"):
        schemes = p.get("level_schemes", ["equidistant-field", "equidistant-power"])
        thresholds = p.get(
            "thresholds", "variance-aware" if fmt == "pam4-matched" else "midpoint"
        )
        for scheme in schemes:
            for osnr in p["osnr_db"]:
                points.append({
                    "type": "pam4-point", **common, "format": fmt,
                    "level_scheme": scheme, "thresholds": thresholds,
                    "ffe_taps": int(p.get("ffe_taps", 0)),
                    "lane": _lane_params(p),
                    "series": f"{fmt}-{scheme}",
                    "axis_name": "osnr_db", "axis_value": float(osnr),
                    "osnr_db": float(osnr), "distance_km": 0.0,
                    "batch_bits": p.get("batch_bits", 30000),
                    "max_bits": p.get("max_bits", 2_000_000),
                })
    else:
        for rate in p.get("rates_gbps", [56]):
            for osnr in p["osnr_db"]:
                points.append({
                    "type": "dmt-point", **common,
                    "rate_gbps": float(rate), "distance_km": 0.0,
                    "osnr_db": float(osnr), "n_train": p.get("n_train", 150),
                    "series": f"dmt-{float(rate):g}g",
                    "axis_name": "osnr_db", "axis_value": float(osnr),
                    "batch_bits": p.get("batch_bits", 30000),
                    "max_bits": p.get("max_bits", 2_000_000),
                })
    return points


def _points_reach(spec: dict) -> list[dict]:
    p = spec["params"]
    common = {"sid": spec["id"], "kind": spec["kind"], "seed": spec.get("seed", 0),
              "target_ber": p.get("target_ber", HD_FEC.ber_limit)}
    points = []
    osnr = float(p["osnr_db"])
    if p["format"] == "pam4":
        for taps in p.get("ffe_taps", [0, 13]):
            for dist in p["distances_km"]:
                points.append({
                    "type": "pam4-point", **common, "format": "pam4",
                    "level_scheme": p.get("level_scheme", "equidistant-field"),
                    "thresholds": p.get("thresholds", "midpoint"),
                    "ffe_taps": int(taps), "series": f"pam4-ffe{int(taps)}",
                    "lane": _lane_params(p),
                    "axis_name": "distance_km", "axis_value": float(dist),
                    "osnr_db": osnr, "distance_km": float(dist),
                    "batch_bits": p.get("batch_bits", 30000),
                    "max_bits": p.get("max_bits", 2_000_000),
                })
    else:
        for rate in p.get("rates_gbps", [56, 112]):
            for dist in p["distances_km"]:
                points.append({
                    "type": "dmt-point", **common,
                    "rate_gbps": float(rate), "distance_km": float(dist),
                    "osnr_db": osnr, "n_train": p.get("n_train", 150),
                    "series": f"dmt-{float(rate):g}g",
                    "axis_name": "distance_km", "axis_value": float(dist),
                    "batch_bits": p.get("batch_bits", 30000),
                    "max_bits": p.get("max_bits", 2_000_000),
                })
    return points


def _points_dmt_rate(spec: dict) -> list[dict]:
    p = spec["params"]
    common = {"sid": spec["id"], "kind": spec["kind"], "seed": spec.get("seed", 0),
              "target_ber": p.get("target_ber", HD_FEC.ber_limit)}
    distances = [float(d) for d in p.get("distances_km", [82.0])]
    rates = [float(r) for r in p.get("rates_gbps", [56.0, 112.0])]
    osnrs = [float(o) for o in p["osnr_db"]]
    series_fmt = "dmt-{rate:g}g-{dist:g}km"
    points = []
    for dist in distances:
        for rate in rates:
            for osnr in osnrs:
                points.append({
                    "type": "dmt-point", **common,
                    "rate_gbps": rate, "distance_km": dist, "osnr_db": osnr,
                    "n_train": p.get("n_train", 150),
                    "series": series_fmt.format(rate=rate, dist=dist),
                    "axis_name": "osnr_db", "axis_value": osnr,
                    "batch_bits": p.get("batch_bits", 30000),
                    "max_bits": p.get("max_bits", 2_000_000),
                    "snr_profile_ref": "snr_profile.csv",
                })
    points.append({
        "type": "dmt-profile", **common,
        "distance_km": float(p.get("profile_distance_km", distances[0])),
        "osnr_db": float(p.get("profile_osnr_db", max(osnrs))),
        "rates_gbps": rates, "n_train": p.get("n_train", 150),
        "series_fmt": series_fmt,
    })
    return points


def _points_vsb(spec: dict) -> list[dict]:
    p = spec["params"]
    return [{
        "type": "vsb-wdm", "sid": spec["id"], "kind": spec["kind"],
        "seed": spec.get("seed", 0),
        "target_ber": p.get("target_ber", HD_FEC.ber_limit),
        "n_channels": int(p.get("n_channels", 8)),
        "spacing_ghz": float(p.get("spacing_ghz", 50.0)),
        "detuning_ghz": float(p.get("detuning_ghz", 17.5)),
        "rate_gbps": float(p.get("rate_gbps", 56.0)),
        "osnr_db": float(p["osnr_db"]),
        "distance_km": float(p.get("distance_km", 80.0)),
        "interleaver_width_ghz": float(p.get("interleaver_width_ghz", 42.0)),
        "interleaver_order": int(p.get("interleaver_order", 3)),
        "n_train": int(p.get("n_train", 150)),
        "batch_bits": int(p.get("batch_bits", 30000)),
        "n_batches": int(p.get("n_batches", 2)),
    }]


_POINT_BUILDERS = {
    "b2b-osnr": _points_b2b,
    "reach-sweep": _points_reach,
    "dmt-rate-82km": _points_dmt_rate,
    "vsb-wdm-400g": _points_vsb,
}

SCENARIO_KINDS = tuple(_POINT_BUILDERS)


def _sort_key(row: dict):
    ch = row.get("channel_index")
    return (
        str(row.get("series")), float(row.get("axis_value") or 0.0),
        -1 if ch is None else int(ch),
    )


def run_scenario(spec: dict, jobs: int = 1) -> ScenarioResult:
    """Expand a validated scenario into points, run them, gather sorted rows."""
    kind = spec["kind"]
    if kind not in _POINT_BUILDERS:
        raise ValueError(f"unknown scenario kind {kind!r}")
    points = _POINT_BUILDERS[kind](spec)
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_point, points))
    else:
        outcomes = [run_point(pt) for pt in points]
    result = ScenarioResult()
    for rows, prows in outcomes:
        result.rows.extend(rows)
        result.profile_rows.extend(prows)
    result.rows.sort(key=_sort_key)
    result.profile_rows.sort(key=lambda r: (r["series"], r["subcarrier"]))
    return result
