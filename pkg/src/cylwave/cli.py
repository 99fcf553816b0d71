"""Command-line entry point: one verb per experiment scenario.

Every verb takes ``--config <path>`` and ``--out <dir>``; the exit code is 0
only when all acceptance assertions of the scenario pass.  ``sweep`` runs
several configs concurrently with disjoint output directories.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys

from .config import ConfigError, config_defaults_text, parse_config_file
from .scenarios import FLOAT_DIGITS_ENV, run_scenario

# CLI verb -> scenario key expected in the config
VERBS = {
    "wave": "wave",
    "converge": "converge",
    "gap": "gap",
    "secondary-speed": "secondary_speed",
    "compare": "comparison",
    "check-hypotheses": "hypotheses",
}

_EPILOG = """\
Config format: [section] headers with `key = value` entries, `#` comments.
Unknown keys and duplicate keys are errors. Defaults:

%s

Output precision: %s environment variable (significant digits, default 17).
""" % (config_defaults_text(), FLOAT_DIGITS_ENV)


def _run_one(config_path: str, out_dir: str, expected_scenario: str | None) -> int:
    try:
        cfg = parse_config_file(config_path)
    except (ConfigError, OSError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    if expected_scenario is not None and cfg.scenario != expected_scenario:
        print("config error: scenario %r does not match verb (expected %r)"
              % (cfg.scenario, expected_scenario), file=sys.stderr)
        return 2
    try:
        manifest = run_scenario(cfg, out_dir)
    except Exception as exc:  # partial outputs are kept in out_dir
        print("scenario failed: %s" % exc, file=sys.stderr)
        return 1
    for name, ok, detail in manifest.assertions:
        print("%-40s %s%s" % (name, "pass" if ok else "FAIL",
                              (" (%s)" % detail) if detail else ""))
    if manifest.note:
        print("note: %s" % manifest.note)
    return 0 if manifest.passed() else 1


def _sweep_entry(args):
    path, out = args
    return _run_one(path, out, None)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cylwave",
        description="Traveling-wave experiments for reaction-diffusion "
                    "equations in truncated cylinders.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb, help="run the %s scenario" % VERBS[verb])
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
    p = sub.add_parser("sweep", help="run several configs concurrently")
    p.add_argument("configs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    args = parser.parse_args(argv)
    if args.verb == "sweep":
        jobs = []
        for path in args.configs:
            stem = os.path.splitext(os.path.basename(path))[0]
            jobs.append((path, os.path.join(args.out, stem)))
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_sweep_entry, jobs))
        for (path, out), code in zip(jobs, codes):
            print("%-50s %s" % (path, "pass" if code == 0 else "FAIL(%d)" % code))
        return max(codes) if codes else 0
    return _run_one(args.config, args.out, VERBS[args.verb])


if __name__ == "__main__":
    sys.exit(main())
