#!/usr/bin/env python3
"""Run every acceptance-grade experiment and export its reports.

Equivalent to the pytest acceptance suite but standalone, leaving a run
directory that `make figures RUN=...` can render.
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from nsbesov.config import load_config
from nsbesov.experiments import (ExperimentConfig, bilinear_ratio_suite,
                                 cos_lemma_report, cross_oracle_report,
                                 cstar_report, picard_gate_report,
                                 quadratic_identity_report, run_nonosc,
                                 run_oscillation, run_stability,
                                 second_iteration_report,
                                 spectral_identity_report)
from nsbesov.reports import export_report

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")

DRIVERS = [
    ("identities.cfg", spectral_identity_report),
    ("quadratic.cfg", quadratic_identity_report),
    ("lemma_cos.cfg", cos_lemma_report),
    ("cstar.cfg", cstar_report),
    ("secondit.cfg", second_iteration_report),
    ("picard.cfg", picard_gate_report),
    ("crossoracle.cfg", cross_oracle_report),
    ("osc2d.cfg", run_oscillation),
    ("nonosc_power.cfg", run_nonosc),
    ("nonosc_log.cfg", run_nonosc),
    ("stability.cfg", run_stability),
    ("bilinear.cfg", bilinear_ratio_suite),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/acceptance")
    ap.add_argument("--only", default=None,
                    help="comma-separated config stems to run")
    args = ap.parse_args()
    only = set(args.only.split(",")) if args.only else None
    failures = 0
    for cfg_name, driver in DRIVERS:
        stem = cfg_name.removesuffix(".cfg")
        if only and stem not in only:
            continue
        cfg = ExperimentConfig.from_dict(load_config(os.path.join(CONFIGS, cfg_name)))
        t0 = time.time()
        report = driver(cfg)
        report.scalars["elapsed_seconds"] = time.time() - t0
        export_report(report, args.out)
        for line in report.summary_lines():
            print(line)
        if not report.passed:
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
