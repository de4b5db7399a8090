"""Emitted waveform and microphone array geometry for the simulated sonar."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SPEED_OF_SOUND = 343.0  # m/s, dry indoor air

ARRAY_WIDTH = 0.116   # m, horizontal extent of the microphone face
ARRAY_HEIGHT = 0.05   # m, vertical extent
MIN_MIC_SPACING = 0.004
N_MICS = 32
CANONICAL_ARRAY_SEED = 42


@dataclass(frozen=True)
class Chirp:
    """Linear FM sweep; the default runs 80 kHz down to 20 kHz over 2.5 ms."""

    f_start: float = 80_000.0
    f_end: float = 20_000.0
    duration: float = 2.5e-3
    sample_rate: float = 450_000.0

    def __post_init__(self):
        nyq = self.sample_rate / 2
        if not (0 < self.f_start < nyq and 0 < self.f_end < nyq):
            raise ValueError("chirp frequencies must lie in (0, sample_rate/2)")
        if self.duration <= 0:
            raise ValueError("chirp duration must be positive")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))

    @property
    def band(self) -> tuple[float, float]:
        lo, hi = sorted((self.f_start, self.f_end))
        return lo, hi

    def waveform(self) -> np.ndarray:
        """Real-valued sweep samples at the chirp's sample rate."""
        t = np.arange(self.n_samples) / self.sample_rate
        k = (self.f_end - self.f_start) / self.duration
        phase = 2 * np.pi * (self.f_start * t + 0.5 * k * t * t)
        return np.sin(phase)


@dataclass(frozen=True)
class ArrayGeometry:
    """Irregular 32-microphone layout on the sensor face, plus the emitter.

    Microphones sit in the x = 0 plane of the sensor frame (boresight +x,
    y left, z up); positions are reproducible from the seed.
    """

    mic_positions: np.ndarray = field(repr=False)
    emitter_position: np.ndarray = field(repr=False)
    seed: int = CANONICAL_ARRAY_SEED

    def __post_init__(self):
        mics = np.asarray(self.mic_positions, dtype=float)
        if mics.shape != (N_MICS, 3):
            raise ValueError(f"expected {N_MICS} microphones with 3 coordinates")
        if np.max(np.abs(mics[:, 1])) > ARRAY_WIDTH / 2 + 1e-12:
            raise ValueError("microphones exceed the array face width")
        if np.max(np.abs(mics[:, 2])) > ARRAY_HEIGHT / 2 + 1e-12:
            raise ValueError("microphones exceed the array face height")
        object.__setattr__(self, "mic_positions", mics)
        object.__setattr__(self, "emitter_position", np.asarray(self.emitter_position, dtype=float))

    @classmethod
    def generate(cls, seed: int = CANONICAL_ARRAY_SEED) -> "ArrayGeometry":
        """Rejection-sample mic positions with the minimum pairwise spacing."""
        rng = np.random.default_rng(seed)
        pts: list[tuple[float, float]] = []
        while len(pts) < N_MICS:
            y = rng.uniform(-ARRAY_WIDTH / 2, ARRAY_WIDTH / 2)
            z = rng.uniform(-ARRAY_HEIGHT / 2, ARRAY_HEIGHT / 2)
            if all((y - py) ** 2 + (z - pz) ** 2 >= MIN_MIC_SPACING**2 for py, pz in pts):
                pts.append((y, z))
        mics = np.array([[0.0, y, z] for y, z in pts])
        return cls(mic_positions=mics, emitter_position=np.zeros(3), seed=seed)


@lru_cache(maxsize=8)
def canonical_array(seed: int = CANONICAL_ARRAY_SEED) -> ArrayGeometry:
    return ArrayGeometry.generate(seed)


def steering_delays(array: ArrayGeometry, angles_rad: np.ndarray) -> np.ndarray:
    """Far-field plane-wave delay tau[a, i] that aligns mic i at steering
    angle a (positive angles to the sensor's right: direction (cos, -sin))."""
    ux = np.cos(angles_rad)[:, None]
    uy = -np.sin(angles_rad)[:, None]
    mx = array.mic_positions[:, 0][None, :]
    my = array.mic_positions[:, 1][None, :]
    return (mx * ux + my * uy) / SPEED_OF_SOUND
