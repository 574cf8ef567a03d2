"""Release acceptance: one test per headline claim of the simulator.

Each test exercises the public API end to end at a pinned operating point and
asserts the physical outcome, not internals. Operating points were chosen so
every pass/fail margin is at least a factor of two above counting noise.
"""

import copy
import itertools

import numpy as np
import pytest

from dwdm80.channel import LinkSpec, WdmPlan, add_ase_noise
from dwdm80.cli import TEMPLATES, main, validate_scenario
from dwdm80.dmt import (
    DmtConfig,
    RateInfeasibleError,
    bit_load,
    build_record,
    estimate_snr,
    gap_from_ber,
    max_loadable_bits,
    probe_and_load,
    qam_decide,
    qam_map,
    raw_rate_bps,
    uniform_qpsk_table,
)
from dwdm80.metrics import (
    BerResult,
    ber_mqam_awgn,
    evaluate_ber,
    max_reach,
    pam4_dd_ber_semianalytic,
    q_func,
    q_inv,
    required_osnr,
    stable_seed,
)
from dwdm80.pam4 import PamScheme
from dwdm80.scenarios import (
    dmt_payload_trial,
    dmt_probe_profile,
    pam4_full_trial,
    pam4_matched_trial,
    run_point,
    run_scenario,
    wdm_pass,
)
from dwdm80.signal_core import Waveform, interleaver

TARGET = 4e-3
REACH_OSNR = 40.0  # high enough that dispersion, not noise, sets PAM4 reach
WIDE_LANE = {"tx_bandwidth_hz": 34e9, "rx_bandwidth_hz": 40e9}


# -- 1: dispersion nulls ------------------------------------------------------


def test_fading_nulls_land_within_one_subcarrier():
    """The probed 80 km SNR dips sit on the predicted power-fading nulls."""
    cfg = DmtConfig()
    profile = dmt_probe_profile(cfg, LinkSpec(80.0), 25.0, n_train=600,
                                record_seed=1, noise_seed=2)
    snr_db = profile.snr_db()
    for predicted in (6.77e9, 11.73e9):
        window = np.abs(profile.freq_hz - predicted) < 2e9
        k = np.flatnonzero(window)[np.argmin(snr_db[window])]
        assert abs(profile.freq_hz[k] - predicted) <= cfg.subcarrier_spacing_hz + 0.01e9


# -- 2 and 3: reach ordering --------------------------------------------------


def _pam4_ber_at_km(ffe_taps):
    def ber_at(dist):
        def trial(batch):
            s = stable_seed("acc-pam4", ffe_taps, dist, batch)
            return pam4_full_trial(
                "equidistant-power", REACH_OSNR, dist, ffe_taps,
                "variance-aware", 10000, s, **WIDE_LANE,
            )
        return evaluate_ber(trial, TARGET, max_bits=60000).ber
    return ber_at


@pytest.fixture(scope="module")
def pam4_reach():
    scan = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    return {taps: max_reach(_pam4_ber_at_km(taps), TARGET, scan).distance_km
            for taps in (0, 13)}


def test_ffe_equalization_extends_reach(pam4_reach):
    assert 2.0 <= pam4_reach[0] <= 40.0
    assert 2.0 <= pam4_reach[13] <= 40.0
    assert pam4_reach[13] >= pam4_reach[0] + 1.0


def _dmt_ber_at_km(dist):
    cfg = DmtConfig()
    link = LinkSpec(dist)
    profile = dmt_probe_profile(
        cfg, link, REACH_OSNR, n_train=150,
        record_seed=stable_seed("acc-dmt-rec", dist),
        noise_seed=stable_seed("acc-dmt-noise", dist),
    )
    try:
        table = probe_and_load(profile, cfg, 112e9, TARGET)
    except RateInfeasibleError:
        return 0.5
    def trial(batch):
        return dmt_payload_trial(cfg, link, table, REACH_OSNR, 38,
                                 stable_seed("acc-dmt-pay", dist, batch))
    return evaluate_ber(trial, TARGET, max_bits=60000).ber


def test_dmt_reach_exceeds_pam4_with_ffe(pam4_reach):
    """Loaded DMT at the same raw 112 Gb/s rides through the PAM4 wall."""
    dmt = max_reach(_dmt_ber_at_km, TARGET, [5.0, 10.0, 15.0, 20.0], refine_km=5.0)
    assert dmt.passed_any
    assert dmt.distance_km >= 1.5 * pam4_reach[13]


# -- 4: level-scheme OSNR ordering, two independent routes --------------------


def _matched_mc_curve(scheme):
    def ber_at(osnr):
        def trial(batch):
            s = stable_seed("acc-matched", scheme, round(osnr, 6), batch)
            return pam4_matched_trial(scheme, osnr, 10000, s)
        return evaluate_ber(trial, TARGET, max_bits=600000).ber
    return ber_at


def test_level_scheme_osnr_ordering_on_both_routes():
    req = {}
    for scheme in ("equidistant-field", "equidistant-power"):
        mc = required_osnr(_matched_mc_curve(scheme), TARGET).osnr_db
        semi = required_osnr(
            lambda o: pam4_dd_ber_semianalytic(o, PamScheme(level_scheme=scheme)),
            TARGET,
        ).osnr_db
        assert abs(mc - semi) <= 0.5
        req[scheme] = (mc, semi)
    assert req["equidistant-field"][0] <= req["equidistant-power"][0]
    assert req["equidistant-field"][1] <= req["equidistant-power"][1]


# -- 5: loading optimality ----------------------------------------------------


def test_greedy_loading_matches_exhaustive_minimum():
    rng = np.random.default_rng(2026)
    combos = {n: np.array(list(itertools.product((0, 2, 4, 6, 8), repeat=n)),
                          dtype=float)
              for n in (3, 4, 5, 6)}
    for _ in range(200):
        n = int(rng.integers(3, 7))
        snr = 10 ** rng.uniform(-0.5, 3.5, size=n)
        target = 2 * int(rng.integers(1, 4 * n + 1))
        gap = float(rng.uniform(1.0, 3.0))
        table = bit_load(snr, target, gap)
        assert int(table.bits.sum()) == target
        allc = combos[n]
        costs = ((2.0 ** allc - 1.0) / snr[None, :]).sum(axis=1) * gap
        best = costs[allc.sum(axis=1) == target].min()
        got = np.sum(table.power_scale) / table.margin
        assert got == pytest.approx(best, rel=1e-9)


# -- 6: Monte Carlo vs closed form --------------------------------------------


def test_mc_qam_tracks_analytic_curve():
    rng = np.random.default_rng(11)
    n_sym = 150000
    for m, bps, snr_db in ((4, 2, 6.0), (4, 2, 8.5), (16, 4, 13.0), (16, 4, 16.0)):
        snr = 10 ** (snr_db / 10)
        bits = rng.integers(0, 2, size=bps * n_sym).astype(np.uint8)
        tx = qam_map(bits, bps)
        noise = (rng.normal(size=n_sym) + 1j * rng.normal(size=n_sym))
        rx = tx + noise * np.sqrt(0.5 / snr)
        errors = int(np.count_nonzero(qam_decide(rx, bps) != bits))
        expected = ber_mqam_awgn(snr, m)
        assert 1e-3 <= expected <= 5e-2
        res = BerResult.from_counts(errors, bits.size)
        assert abs(res.ber - expected) <= 3 * res.ci95 / 1.96
    x = np.linspace(0.0, 8.0, 2001)
    assert np.max(np.abs(q_inv(q_func(x)) - x)) <= 1e-9


# -- 7: noise calibration -----------------------------------------------------


def test_osnr_calibration_round_trip():
    fs = 64e9
    n = 1 << 20
    field = np.exp(2j * np.pi * 5e9 * np.arange(n) / fs)  # 1 mW carrier
    w = Waveform(field, fs)
    for osnr_set in (20.0, 30.0):
        co, orth = add_ase_noise(w, osnr_set, rng_seed=3)
        rho = np.var(co.samples - field) / fs
        osnr_est = 10 * np.log10(1.0 / (2 * rho * 12.5e9))
        assert abs(osnr_est - osnr_set) <= 0.1
        assert orth is not None


# -- 8: vestigial-sideband benefit --------------------------------------------


def _vsb_probe(detuning_ghz):
    cfg = DmtConfig()
    plan = WdmPlan(
        n_channels=1, spacing_hz=50e9, detuning_hz=detuning_ghz * 1e9,
        mux_interleaver=interleaver(period_hz=50e9, bandwidth_hz=42e9, order=3),
    )
    rec = build_record(cfg, uniform_qpsk_table(cfg), np.empty(0, dtype=np.uint8),
                       n_train=200, seed=21)
    rx = wdm_pass([rec], plan, 82.0, 35.0, noise_seed=22)[0]
    return estimate_snr(rx.equalized, rec.train_symbols, cfg)


def test_vsb_detuning_beats_centered_dsb():
    """Parking the carrier on the filter edge defeats the dispersion fading."""
    cfg = DmtConfig()
    gap = gap_from_ber(TARGET)
    centered = _vsb_probe(0.0)
    detuned = _vsb_probe(17.5)
    rate_centered = raw_rate_bps(max_loadable_bits(centered.snr_linear, gap), cfg)
    rate_detuned = raw_rate_bps(max_loadable_bits(detuned.snr_linear, gap), cfg)
    assert rate_detuned > rate_centered
    above_null = centered.freq_hz > 6.69e9  # first 82 km fading null
    gain = np.median(detuned.snr_db()[above_null] - centered.snr_db()[above_null])
    assert gain >= 3.0


# -- 9: WDM crowding penalty --------------------------------------------------


def _wdm_center_ber_at_km(n_channels):
    center = 3 if n_channels == 8 else 0

    def ber_at(dist):
        point = {
            "type": "vsb-wdm", "sid": "acc", "kind": "vsb-wdm-400g", "seed": 1,
            "target_ber": TARGET, "n_channels": n_channels, "spacing_ghz": 50.0,
            "detuning_ghz": 17.5, "rate_gbps": 56.0, "osnr_db": 35.0,
            "distance_km": dist, "interleaver_width_ghz": 42.0,
            "interleaver_order": 3, "n_train": 150, "batch_bits": 15000,
            "n_batches": 4,
        }
        rows, _ = run_point(point)
        ber = rows[center]["ber"]
        return 0.5 if ber is None else ber
    return ber_at


def test_single_channel_reach_bounds_wdm_center():
    """A lit neighbor grid never outlasts the same channel running alone.

    Between 100 and 160 km the 56G loading sits at margin one, so measured
    BER hovers at the target by construction and pass/fail order is noise;
    the scan therefore compares the decisive points on either side of that
    band (at 80 km both run far below target, at 160 km far above).
    """
    scan = [40.0, 80.0, 160.0]
    single = max_reach(_wdm_center_ber_at_km(1), TARGET, scan, refine_km=80.0)
    center = max_reach(_wdm_center_ber_at_km(8), TARGET, scan, refine_km=80.0)
    assert single.passed_any and center.passed_any
    assert single.distance_km >= center.distance_km


# -- 10: aggregate-rate bookkeeping -------------------------------------------


def test_aggregate_rate_bookkeeping():
    base = {
        "schema_version": 1, "id": "agg8", "kind": "vsb-wdm-400g", "seed": 1,
        "params": {"osnr_db": 35.0, "n_train": 110,
                   "batch_bits": 2000, "n_batches": 1},
    }
    quad = copy.deepcopy(base)
    quad["id"] = "agg4"
    quad["params"].update({"n_channels": 4, "rate_gbps": 112.0})
    for spec, n in ((base, 8), (quad, 4)):
        validate_scenario(spec)
        rows = run_scenario(spec).rows
        assert len(rows) == n
        assert all(r["aggregate_rate_gbps"] == 448.0 for r in rows)


# -- 11: determinism ----------------------------------------------------------


def test_builtin_templates_are_deterministic(tmp_path, capsys):
    for name in TEMPLATES:
        outs = []
        for label, jobs in (("a", "1"), ("b", "1"), ("c", "2")):
            out = tmp_path / f"{name}-{label}"
            assert main(["run", "--template", name,
                         "--out", str(out), "--jobs", jobs]) == 0
            outs.append(out / name)
        capsys.readouterr()
        for artifact in ("results.csv", "snr_profile.csv"):
            if not (outs[0] / artifact).exists():
                continue
            ref = (outs[0] / artifact).read_bytes()
            assert (outs[1] / artifact).read_bytes() == ref
            assert (outs[2] / artifact).read_bytes() == ref
