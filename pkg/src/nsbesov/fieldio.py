"""Field snapshot format.

Layout (documented for golden-value tests):

    line 1: b"NSBSPEC1"                          magic
    line 2: JSON header {dim, shape, domain_length, ncomp, is_real}
    body  : for each component, C-order float64 pairs (Re, Im) of the
            Fourier coefficients, interleaved.
"""

from __future__ import annotations

import json

import numpy as np

from .spectral import Grid, SpectralField

MAGIC = b"NSBSPEC1"


def save_field(fld: SpectralField, path: str) -> None:
    header = {
        "dim": fld.grid.dim,
        "shape": list(fld.grid.shape),
        "domain_length": fld.grid.domain_length,
        "ncomp": fld.ncomp,
        "is_real": fld.is_real,
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\n")
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        inter = np.empty(fld.coeffs.shape + (2,), dtype=np.float64)
        inter[..., 0] = fld.coeffs.real
        inter[..., 1] = fld.coeffs.imag
        fh.write(inter.tobytes(order="C"))


def load_field(path: str) -> SpectralField:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != MAGIC:
            raise ValueError(f"not a field snapshot: bad magic {magic!r}")
        header = json.loads(fh.readline().decode())
        grid = Grid(header["dim"], tuple(header["shape"]), header["domain_length"])
        n = header["ncomp"]
        count = 2 * n * int(np.prod(grid.shape))
        body = np.frombuffer(fh.read(), dtype=np.float64, count=count)
    inter = body.reshape((n,) + grid.shape + (2,))
    coeffs = inter[..., 0] + 1j * inter[..., 1]
    return SpectralField(grid, coeffs.astype(np.complex128), header["is_real"])
