"""render_figs: turn sweep CSVs into the standard figure layouts."""

import argparse
import sys
from pathlib import Path

from .render import KINDS, RenderError, RenderJob, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render_figs",
        description="Render sweep result CSVs into publication-style figures.",
    )
    parser.add_argument("--kind", required=True, choices=KINDS,
                        help="figure layout to produce")
    parser.add_argument("--in", dest="results", required=True,
                        help="results.csv from a sweep run")
    parser.add_argument("--snr", help="snr_profile.csv (inset kinds only)")
    parser.add_argument("--out", required=True,
                        help="output image path (.svg or .png)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = RenderJob(
        kind=args.kind,
        results_csv=Path(args.results),
        out_path=Path(args.out),
        snr_csv=Path(args.snr) if args.snr else None,
    )
    try:
        render(job)
    except RenderError as exc:
        print(f"cannot render: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot render: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {job.out_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
