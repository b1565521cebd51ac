"""Report containers and their CSV + JSON serialization.

Every experiment produces a Report: flat scalars and flags into a JSON
sidecar (with config echo, code version, seed), time series / tables into
CSVs, and per-block norm profiles into a profiles CSV.  Floats are written
with shortest round-trip repr so re-importing is bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import subprocess
from dataclasses import dataclass, field

from . import __version__
from .littlewood_paley import NormSample


@dataclass
class Report:
    name: str
    config: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)      # name -> (header, rows)
    profiles: dict = field(default_factory=dict)    # quantity -> NormSample | {j: val}

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.flags.values())

    def add_profile(self, quantity: str, sample) -> None:
        self.profiles[quantity] = sample

    def summary_lines(self) -> list:
        out = []
        for k in sorted(self.scalars):
            v = self.scalars[k]
            if isinstance(v, float):
                out.append(f"{self.name}: {k} = {v:.6g}")
            else:
                out.append(f"{self.name}: {k} = {v}")
        for k in sorted(self.flags):
            out.append(f"{self.name}: [{'PASS' if self.flags[k] else 'FAIL'}] {k}")
        return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def code_version() -> str:
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"],
                             capture_output=True, text=True, timeout=5)
        if rev.returncode == 0:
            return f"{__version__}+{rev.stdout.strip()}"
    except Exception:
        pass
    return __version__


def write_csv(path: str, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path: str):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        vals = []
        for tok in ln.split(","):
            try:
                vals.append(int(tok))
            except ValueError:
                try:
                    vals.append(float(tok))
                except ValueError:
                    vals.append({"true": True, "false": False}.get(tok, tok))
        rows.append(tuple(vals))
    return header, rows


def export_report(report: Report, outdir: str) -> dict:
    """Write {name}.json plus one CSV per table and a profiles CSV.

    Returns the paths written.  Deterministic for a fixed report.
    """
    os.makedirs(outdir, exist_ok=True)
    paths = {}
    sidecar = {
        "name": report.name,
        "version": code_version(),
        "config": {k: report.config[k] for k in sorted(report.config)},
        "scalars": {k: report.scalars[k] for k in sorted(report.scalars)},
        "flags": {k: bool(report.flags[k]) for k in sorted(report.flags)},
        "passed": report.passed,
        "tables": sorted(report.tables),
    }
    jpath = os.path.join(outdir, f"{report.name}.json")
    with open(jpath, "w") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)
        fh.write("\n")
    paths["json"] = jpath

    for tname in sorted(report.tables):
        header, rows = report.tables[tname]
        cpath = os.path.join(outdir, f"{report.name}__{tname}.csv")
        write_csv(cpath, header, rows)
        paths[tname] = cpath

    if report.profiles:
        rows = []
        for quantity in sorted(report.profiles):
            sample = report.profiles[quantity]
            if isinstance(sample, NormSample):
                items = sample.block_profile.items()
            else:
                items = sample.items()
            for j, val in sorted(items):
                rows.append((quantity, j, float(val)))
        ppath = os.path.join(outdir, f"{report.name}__profiles.csv")
        write_csv(ppath, ["quantity", "j", "value"], rows)
        paths["profiles"] = ppath
    return paths


def load_report_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def config_hash(config: dict) -> str:
    text = json.dumps({k: config[k] for k in sorted(config)}, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def norm_table(samples: dict):
    """Standard norm-report rows: (quantity, s, p, q, r, window, value)."""
    header = ["quantity", "s", "p", "q", "r", "window_start", "window_end",
              "value"]
    rows = []
    for name in sorted(samples):
        ns = samples[name]
        idx = ns.index
        w0, w1 = ns.time_window if ns.time_window is not None else (math.nan,
                                                                    math.nan)
        rows.append((name, idx.s, idx.p, idx.q,
                     math.nan if idx.r is None else idx.r, w0, w1, ns.value))
    return header, rows
