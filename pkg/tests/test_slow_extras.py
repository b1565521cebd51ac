"""Long-running extras, excluded from the default run (pytest -m slow)."""

import os

import pytest

from nsbesov.config import load_config
from nsbesov.experiments import ExperimentConfig, run_oscillation

pytestmark = pytest.mark.slow

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def test_oscillation_3d_two_cycles():
    # the high-dimensional inductive schedule at 64^3: level peaks, troughs
    # pushed below a geometric threshold, carrier doubling per cycle
    cfg = ExperimentConfig.from_dict(
        load_config(os.path.join(CONFIG_DIR, "osc3d.cfg")))
    rep = run_oscillation(cfg)
    for line in rep.summary_lines():
        print(line)
    assert rep.flags["all_cycles_conclusive"]
    assert rep.flags["peaks_within_20pct"]
    assert rep.flags["troughs_decay_2x_per_cycle"]
    assert rep.flags["peak_to_trough_at_least_5"]
    # the window norms shrink by the carrier-scaling factor 2^{n/r-1}
    ratio = rep.scalars["window_norm_2"] / rep.scalars["window_norm_1"]
    assert ratio == pytest.approx(2.0 ** (cfg.n / cfg.r - 1.0), rel=0.10)
    # the weak-norm ledger stays finite and is recorded
    assert rep.scalars["weak_norm_sup"] > 0.0
