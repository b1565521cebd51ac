#!/usr/bin/env python3
"""Two-cycle high-dimensional oscillation run (slow; roughly an hour).

Runs the inductive schedule at 64^3 with carriers 8 then 16 and exports the
report; peaks stay level while the measured forcing window norms shrink by
the carrier-scaling factor 2^{n/r-1}.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from nsbesov.config import load_config
from nsbesov.experiments import ExperimentConfig, run_oscillation
from nsbesov.reports import export_report

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def main():
    cfg = ExperimentConfig.from_dict(load_config(os.path.join(CONFIGS, "osc3d.cfg")))
    report = run_oscillation(cfg)
    export_report(report, "runs/osc3d")
    for line in report.summary_lines():
        print(line)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
