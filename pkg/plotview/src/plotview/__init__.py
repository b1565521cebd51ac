"""Render publication figures from exported run directories.

This package only reads the documented CSV / JSON report files; every number
it draws is recomputed from the CSV and cross-checked against the JSON
sidecar, so the figures add no data of their own.
"""

__version__ = "0.1.0"

from .spec import FigureSpec  # noqa: F401
from .render import render, RenderError  # noqa: F401
