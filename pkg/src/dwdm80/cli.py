"""Command-line front end: validate scenario files, run them, write CSVs.

Scenario files are strict JSON: any unknown or ill-typed key is rejected by
name before anything runs. Outputs land under <out>/<scenario id>/ and are
byte-stable for a given scenario file, so diffing two runs is meaningful.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import re
import sys
from pathlib import Path

from . import __version__
from .metrics import HD_FEC, SD_FEC
from .scenarios import (
    PROFILE_COLUMNS,
    RESULT_COLUMNS,
    SCENARIO_KINDS,
    run_scenario,
)


class ValidationError(ValueError):
    """Scenario file rejected; the message names the offending key."""


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _num(lo=None, hi=None):
    def check(v):
        if not _is_num(v):
            return "must be a number"
        if lo is not None and v < lo:
            return f"must be >= {lo}"
        if hi is not None and v > hi:
            return f"must be <= {hi}"
        return None
    return check


def _int(lo=None):
    def check(v):
        if not _is_int(v):
            return "must be an integer"
        if lo is not None and v < lo:
            return f"must be >= {lo}"
        return None
    return check


def _num_list(lo=None):
    item = _num(lo=lo)
    def check(v):
        if not isinstance(v, list) or not v:
            return "must be a non-empty list of numbers"
        for x in v:
            err = item(x)
            if err:
                return f"has an element that {err}"
        return None
    return check


def _choice(*allowed):
    def check(v):
        if v not in allowed:
            return f"must be one of {sorted(allowed)}"
        return None
    return check


def _bool(v):
    return None if isinstance(v, bool) else "must be a boolean"


def _taps_list(v):
    if not isinstance(v, list) or not v:
        return "must be a non-empty list of tap counts"
    for x in v:
        if not _is_int(x) or x < 0 or (x > 0 and x % 2 == 0):
            return "entries must be 0 (equalizer off) or an odd tap count"
    return None


_TARGET_BER = _num(lo=1e-12, hi=0.499)
_COMMON_MC = {
    "target_ber": (_TARGET_BER, False),
    "batch_bits": (_int(lo=1000), False),
    "max_bits": (_int(lo=1000), False),
}

# key -> (checker, required)
_PARAM_SPECS: dict[str, dict[str, tuple]] = {
    "b2b-osnr": {
        "format": (_choice("analytic", "pam4", "pam4-matched", "dmt"), True),
        "osnr_db": (_num_list(), True),
        "compute_required_osnr": (_bool, False),
        "level_schemes": (
            lambda v: None
            if isinstance(v, list) and v
            and all(x in ("equidistant-field", "equidistant-power") for x in v)
            else "must list level schemes",
            False,
        ),
        "thresholds": (_choice("midpoint", "variance-aware"), False),
        "ffe_taps": (_int(lo=0), False),
        "rates_gbps": (_num_list(lo=1.0), False),
        "n_train": (_int(lo=100), False),
        "tx_bandwidth_ghz": (_num(lo=1.0), False),
        "rx_bandwidth_ghz": (_num(lo=1.0), False),
        "tx_filter_kind": (_choice("bessel-lowpass", "rectangular-lowpass"), False),
        "rx_filter_kind": (_choice("bessel-lowpass", "rectangular-lowpass"), False),
        **_COMMON_MC,
    },
    "reach-sweep": {
        "format": (_choice("pam4", "dmt"), True),
        "distances_km": (_num_list(lo=0.0), True),
        "osnr_db": (_num(), True),
        "ffe_taps": (_taps_list, False),
        "level_scheme": (_choice("equidistant-field", "equidistant-power"), False),
        "thresholds": (_choice("midpoint", "variance-aware"), False),
        "rates_gbps": (_num_list(lo=1.0), False),
        "n_train": (_int(lo=100), False),
        "tx_bandwidth_ghz": (_num(lo=1.0), False),
        "rx_bandwidth_ghz": (_num(lo=1.0), False),
        "tx_filter_kind": (_choice("bessel-lowpass", "rectangular-lowpass"), False),
        "rx_filter_kind": (_choice("bessel-lowpass", "rectangular-lowpass"), False),
        **_COMMON_MC,
    },
    "dmt-rate-82km": {
        "osnr_db": (_num_list(), True),
        "distances_km": (_num_list(lo=0.0), False),
        "rates_gbps": (_num_list(lo=1.0), False),
        "n_train": (_int(lo=100), False),
        "profile_osnr_db": (_num(), False),
        "profile_distance_km": (_num(lo=0.0), False),
        **_COMMON_MC,
    },
    "vsb-wdm-400g": {
        "osnr_db": (_num(), True),
        "n_channels": (_int(lo=1), False),
        "spacing_ghz": (_num(lo=1.0), False),
        "detuning_ghz": (_num(), False),
        "rate_gbps": (_num(lo=1.0), False),
        "distance_km": (_num(lo=0.0), False),
        "interleaver_width_ghz": (_num(lo=1.0), False),
        "interleaver_order": (_int(lo=1), False),
        "n_train": (_int(lo=100), False),
        "n_batches": (_int(lo=1), False),
        "target_ber": (_TARGET_BER, False),
        "batch_bits": (_int(lo=1000), False),
    },
}

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


def validate_scenario(spec) -> None:
    """Raise ValidationError naming the first offending key, else return."""
    if not isinstance(spec, dict):
        raise ValidationError("scenario must be a JSON object")
    allowed_top = {"schema_version", "id", "kind", "seed", "params"}
    for key in spec:
        if key not in allowed_top:
            raise ValidationError(f"unknown key '{key}'")
    for key in ("schema_version", "id", "kind", "params"):
        if key not in spec:
            raise ValidationError(f"missing required key '{key}'")
    if spec["schema_version"] != 1:
        raise ValidationError("'schema_version': only version 1 is supported")
    if not isinstance(spec["id"], str) or not _ID_RE.match(spec["id"]):
        raise ValidationError(
            "'id': must be a name made of letters, digits, '.', '_' or '-'"
        )
    if spec["kind"] not in SCENARIO_KINDS:
        raise ValidationError(
            f"'kind': must be one of {sorted(SCENARIO_KINDS)}"
        )
    if "seed" in spec and not _is_int(spec["seed"]):
        raise ValidationError("'seed': must be an integer")
    params = spec["params"]
    if not isinstance(params, dict):
        raise ValidationError("'params': must be a JSON object")
    table = _PARAM_SPECS[spec["kind"]]
    for key in params:
        if key not in table:
            raise ValidationError(
                f"unknown key 'params.{key}' for kind '{spec['kind']}'"
            )
    for key, (check, required) in table.items():
        if key not in params:
            if required:
                raise ValidationError(f"missing required key 'params.{key}'")
            continue
        err = check(params[key])
        if err:
            raise ValidationError(f"'params.{key}': {err}")


TEMPLATES: dict[str, dict] = {
    "b2b-osnr-analytic": {
        "schema_version": 1,
        "id": "b2b-osnr-analytic",
        "kind": "b2b-osnr",
        "seed": 1,
        "params": {
            "format": "analytic",
            "osnr_db": [float(o) for o in range(10, 37)],
            "compute_required_osnr": True,
        },
    },
    "pam4-reach": {
        "schema_version": 1,
        "id": "pam4-reach",
        "kind": "reach-sweep",
        "seed": 1,
        "params": {
            "format": "pam4",
            "distances_km": [0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0],
            "osnr_db": 32.0,
            "ffe_taps": [0, 13],
            "batch_bits": 20000,
            "max_bits": 60000,
        },
    },
    "dmt-rate-82km": {
        "schema_version": 1,
        "id": "dmt-rate-82km",
        "kind": "dmt-rate-82km",
        "seed": 1,
        "params": {
            "distances_km": [82.0],
            "rates_gbps": [56.0, 112.0],
            "osnr_db": [24.0, 26.0, 28.0, 30.0, 32.0, 34.0, 36.0],
            "batch_bits": 20000,
            "max_bits": 60000,
        },
    },
    "vsb-wdm-400g": {
        "schema_version": 1,
        "id": "vsb-wdm-400g",
        "kind": "vsb-wdm-400g",
        "seed": 1,
        "params": {
            "osnr_db": 35.0,
            "batch_bits": 15000,
            "n_batches": 2,
        },
    },
}


def _format_cell(col: str, v) -> str:
    if v is None:
        return ""
    if col in ("ber", "ci95"):
        return f"{v:.6e}"
    if col == "osnr_db" or col == "required_osnr_db" or col == "snr_db":
        return f"{v:.2f}"
    if col in ("axis_value", "distance_km", "rate_gbps"):
        return format(float(v), "g")
    if col in ("errors", "bits", "channel_index", "schema_version", "subcarrier"):
        return str(int(v))
    if col in ("hd_pass", "sd_pass"):
        return "true" if v else "false"
    if col == "aggregate_rate_gbps":
        return f"{v:.1f}"
    if col in ("net_rate_hd_gbps", "net_rate_sd_gbps"):
        return f"{v:.2f}"
    if col == "freq_ghz":
        return f"{v:.4f}"
    if col == "power_scale":
        return f"{v:.4e}"
    return str(v)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(_format_cell(c, row.get(c)) for c in columns)


def _run(args) -> int:
    if args.template:
        if args.template not in TEMPLATES:
            print(
                f"unknown template '{args.template}' (see: dwdm80 list)",
                file=sys.stderr,
            )
            return 2
        spec = TEMPLATES[args.template]
    else:
        try:
            spec = json.loads(Path(args.scenario).read_text())
        except OSError as exc:
            print(f"cannot read scenario: {exc}", file=sys.stderr)
            return 2
        except json.JSONDecodeError as exc:
            print(f"scenario is not valid JSON: {exc}", file=sys.stderr)
            return 2
    try:
        validate_scenario(spec)
    except ValidationError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    jobs = args.jobs or int(os.environ.get("DWDM80_JOBS", "1"))
    result = run_scenario(spec, jobs=max(jobs, 1))
    outdir = Path(args.out) / spec["id"]
    outdir.mkdir(parents=True, exist_ok=True)
    _write_csv(outdir / "results.csv", RESULT_COLUMNS, result.rows)
    if result.profile_rows:
        _write_csv(outdir / "snr_profile.csv", PROFILE_COLUMNS, result.profile_rows)
    manifest = {
        "schema_version": 1,
        "scenario_id": spec["id"],
        "kind": spec["kind"],
        "package_version": __version__,
        "scenario": spec,
        "rows": len(result.rows),
        "profile_rows": len(result.profile_rows),
        "thresholds": {"hd": HD_FEC.label, "sd": SD_FEC.label},
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote {len(result.rows)} rows to {outdir / 'results.csv'}")
    return 0


def _validate_cmd(args) -> int:
    try:
        spec = json.loads(Path(args.scenario).read_text())
    except OSError as exc:
        print(f"cannot read scenario: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"scenario is not valid JSON: {exc}", file=sys.stderr)
        return 2
    try:
        validate_scenario(spec)
    except ValidationError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    print(f"{args.scenario}: valid ({spec['kind']})")
    return 0


def _list_cmd(_args) -> int:
    for name, spec in TEMPLATES.items():
        print(f"{name}\t{spec['kind']}")
    return 0


def _template_cmd(args) -> int:
    if args.name not in TEMPLATES:
        print(f"unknown template '{args.name}' (see: dwdm80 list)", file=sys.stderr)
        return 2
    print(json.dumps(TEMPLATES[args.name], indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dwdm80",
        description="Direct-detection DWDM link simulator: run measurement scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario file or builtin template")
    run_p.add_argument("scenario", nargs="?", help="path to a scenario JSON file")
    run_p.add_argument("--template", help="run a builtin template by name")
    run_p.add_argument("--out", default="out", help="output directory (default: out)")
    run_p.add_argument(
        "--jobs", type=int, default=0,
        help="worker processes (default: DWDM80_JOBS or 1)",
    )
    run_p.set_defaults(func=_run)

    val_p = sub.add_parser("validate", help="check a scenario file without running it")
    val_p.add_argument("scenario")
    val_p.set_defaults(func=_validate_cmd)

    list_p = sub.add_parser("list", help="list builtin templates")
    list_p.set_defaults(func=_list_cmd)

    tmpl_p = sub.add_parser("template", help="print a builtin template as JSON")
    tmpl_p.add_argument("name")
    tmpl_p.set_defaults(func=_template_cmd)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run" and bool(args.scenario) == bool(args.template):
        print("run needs exactly one of: a scenario file or --template", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except Exception as exc:  # runtime failure, distinct from usage errors
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
