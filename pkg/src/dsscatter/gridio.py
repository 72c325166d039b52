"""Binary and CSV layouts for grids and CGO solutions.

Binary layout, little-endian: int64 n, float64 L, then n*n (re, im)
float64 pairs in row-major order of the (i, j) sample index.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from dsscatter.cauchy_transform import ComplexGrid

_HEADER = struct.Struct("<qd")


def grid_to_bytes(grid: ComplexGrid) -> bytes:
    body = np.empty((grid.n, grid.n, 2), dtype="<f8")
    body[..., 0] = grid.values.real
    body[..., 1] = grid.values.imag
    return _HEADER.pack(grid.n, grid.L) + body.tobytes(order="C")


def grid_from_bytes(data: bytes) -> ComplexGrid:
    if len(data) < _HEADER.size:
        raise ValueError("truncated grid header")
    n, L = _HEADER.unpack_from(data)
    expected = _HEADER.size + 16 * n * n
    if len(data) != expected:
        raise ValueError(f"grid payload has {len(data)} bytes, expected {expected} for n={n}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, n, 2)
    return ComplexGrid(int(n), float(L), body[..., 0] + 1j * body[..., 1])


def write_grid(grid: ComplexGrid, path) -> None:
    Path(path).write_bytes(grid_to_bytes(grid))


def read_grid(path) -> ComplexGrid:
    return grid_from_bytes(Path(path).read_bytes())


def write_grid_csv(grid: ComplexGrid, path) -> None:
    x = grid.coords
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "x", "y", "re", "im"])
        for i in range(grid.n):
            for j in range(grid.n):
                v = grid.values[i, j]
                w.writerow([i, j, f"{x[i]:.17g}", f"{x[j]:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])


def write_cgo(solution, stem) -> dict:
    """Write ``<stem>.phi1.bin``, ``<stem>.phi2.bin`` and ``<stem>.json``; return the sidecar."""
    stem = Path(stem)
    write_grid(solution.phi1, stem.with_suffix(".phi1.bin"))
    write_grid(solution.phi2, stem.with_suffix(".phi2.bin"))
    meta = {
        "k": [solution.k.real, solution.k.imag],
        "sigma": solution.sigma,
        "n": solution.phi1.n,
        "L": solution.phi1.L,
        "terms": solution.neumann_terms_used,
        "residual": solution.residual_norm,
    }
    stem.with_suffix(".json").write_text(json.dumps(meta, indent=2))
    return meta


def read_cgo(stem):
    from dsscatter.dirac_solver import CgoSolution

    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    return CgoSolution(
        phi1=read_grid(stem.with_suffix(".phi1.bin")),
        phi2=read_grid(stem.with_suffix(".phi2.bin")),
        neumann_terms_used=int(meta["terms"]),
        residual_norm=float(meta["residual"]),
        k=complex(*meta["k"]),
        sigma=int(meta["sigma"]),
    )
