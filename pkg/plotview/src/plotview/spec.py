"""Figure specifications."""

from __future__ import annotations

from dataclasses import dataclass, field

KINDS = ("forcing_staircase", "solution_oscillation", "slope_fit",
         "ratio_histogram")


@dataclass
class FigureSpec:
    """What to draw and from which files.

    ``csv_paths`` maps roles to CSV files (roles depend on the kind, e.g.
    "series" and "cycles" for the oscillation panels); ``sidecar`` is the
    JSON report the annotations are checked against.
    """

    kind: str
    csv_paths: dict
    sidecar: str
    output: str
    annotations: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {KINDS}")
