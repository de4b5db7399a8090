"""Energyscape serialization: compact binary dumps and debug CSV."""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from ..grid import EnergyGrid, Energyscape

_HEADER = struct.Struct("<IIdd")  # n_range, n_angle, r_max, timestamp


def energyscape_to_bytes(scape: Energyscape) -> bytes:
    head = _HEADER.pack(scape.grid.n_range, scape.grid.n_angle, scape.grid.r_max,
                        scape.timestamp)
    return head + scape.energy.astype("<f4").tobytes(order="C")


def energyscape_from_bytes(data: bytes, sensor_index: int = 0) -> Energyscape:
    n_range, n_angle, r_max, timestamp = _HEADER.unpack_from(data, 0)
    body = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    if body.size != n_range * n_angle:
        raise ValueError("energyscape payload size does not match its header")
    grid = EnergyGrid(n_range=n_range, n_angle=n_angle, r_max=r_max)
    energy = body.reshape(n_range, n_angle).astype(np.float64)
    return Energyscape(energy, grid, sensor_index, timestamp)


def dump_energyscape(scape: Energyscape, path: Union[str, Path]) -> None:
    Path(path).write_bytes(energyscape_to_bytes(scape))


def load_energyscape(path: Union[str, Path], sensor_index: int = 0) -> Energyscape:
    return energyscape_from_bytes(Path(path).read_bytes(), sensor_index)


def energyscape_to_csv(scape: Energyscape, path: Union[str, Path]) -> None:
    header = (
        f"r_max={scape.grid.r_max} range_bin={scape.grid.range_bin} "
        f"timestamp={scape.timestamp} rows=range cols=angle_deg "
        + " ".join(f"{a:g}" for a in scape.angle_grid)
    )
    np.savetxt(path, scape.energy, fmt="%.9g", delimiter=",", header=header)
