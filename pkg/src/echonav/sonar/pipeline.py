"""Time-domain sonar pipeline: echo synthesis, pulse compression,
delay-and-sum beamforming and envelope detection onto the polar grid.

``render_energyscape`` runs the same four stages fused in the frequency
domain (band-limited, decimated analytic inverse transform), which is what
the simulation loop uses; the individual stage functions remain available
and are cross-checked against the fused path in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import signal as sps
from scipy.fft import irfft, next_fast_len, rfft, rfftfreq

from ..grid import CANONICAL_GRID, EnergyGrid, Energyscape
from .reflect import ReflectionEvent
from .signals import SPEED_OF_SOUND, ArrayGeometry, Chirp, canonical_array, steering_delays

# Peak raw envelope for a unit plane reflector at 1 m dead ahead with the
# default chirp/array/grid (see echonav.calibrate.pipeline_peak_raw); the
# gain normalizes that reference echo to energy 1.0.
RAW_PEAK_REFERENCE = 15843.0625
PIPELINE_GAIN = 1.0 / RAW_PEAK_REFERENCE

_RANGE_MARGIN = 0.1  # m of synthesis slack beyond r_max for aperture paths
_BAND_PAD = 2_000.0  # Hz kept either side of the chirp band in the fused path
_DECIMATE = 4


@dataclass(frozen=True)
class SonarConfig:
    """Everything the renderers need besides the scene itself."""

    chirp: Chirp = field(default_factory=Chirp)
    array_seed: int = 42
    grid: EnergyGrid = field(default_factory=lambda: CANONICAL_GRID)
    pipeline_gain: float = PIPELINE_GAIN
    noise_std: float = 0.0  # additive white noise on the raw channels, off by default
    psf_sigma_angle_deg: float = 3.0
    psf_sigma_range_bins: float = 2.0

    @property
    def array(self) -> ArrayGeometry:
        return canonical_array(self.array_seed)


def synthesis_length(chirp: Chirp, r_max: float) -> int:
    window = 2.0 * (r_max + _RANGE_MARGIN) / SPEED_OF_SOUND + chirp.duration
    return int(math.ceil(window * chirp.sample_rate))


def event_point(ev: ReflectionEvent) -> np.ndarray:
    th = math.radians(ev.bearing)
    return np.array([ev.range * math.cos(th), -ev.range * math.sin(th), 0.0])


def synthesize_echo_signals(
    events: Sequence[ReflectionEvent],
    chirp: Chirp,
    array: ArrayGeometry,
    r_max: float = 5.0,
) -> np.ndarray:
    """Delayed, spreading-scaled chirp copies on every microphone channel."""
    n = synthesis_length(chirp, r_max)
    wave = chirp.waveform()
    L = len(wave)
    out = np.zeros((array.mic_positions.shape[0], n))
    for ev in events:
        if ev.range > r_max:
            continue  # would exceed the sample budget
        p = event_point(ev)
        d_emit = float(np.linalg.norm(p - array.emitter_position))
        d_mics = np.linalg.norm(array.mic_positions - p[None, :], axis=1)
        amp = ev.amplitude / (ev.range * ev.range)
        delays = (d_emit + d_mics) / SPEED_OF_SOUND * chirp.sample_rate
        for ch, delay in enumerate(delays):
            i0 = int(math.floor(delay))
            frac = delay - i0
            if i0 + L + 1 > n:
                continue
            out[ch, i0:i0 + L] += amp * (1.0 - frac) * wave
            out[ch, i0 + 1:i0 + 1 + L] += amp * frac * wave
    return out


def matched_filter(signals: np.ndarray, chirp: Chirp) -> np.ndarray:
    """Cross-correlate each channel with the emitted sweep, length preserved."""
    signals = np.atleast_2d(signals)
    wave = chirp.waveform()
    full = sps.fftconvolve(signals, wave[::-1][None, :], mode="full", axes=1)
    L = len(wave)
    return full[:, L - 1:L - 1 + signals.shape[1]]


def beamform(signals: np.ndarray, array: ArrayGeometry, angles_deg: np.ndarray,
             sample_rate: float) -> np.ndarray:
    """True-time-delay sum over channels for every steering angle."""
    signals = np.atleast_2d(signals)
    n = signals.shape[1]
    nfft = next_fast_len(n)
    spec = rfft(signals, nfft, axis=1)
    freqs = rfftfreq(nfft, 1.0 / sample_rate)
    taus = steering_delays(array, np.radians(np.asarray(angles_deg, dtype=float)))
    out = np.empty((len(angles_deg), n))
    for a in range(taus.shape[0]):
        phase = np.exp(-2j * np.pi * freqs[None, :] * taus[a][:, None])
        out[a] = irfft((spec * phase).sum(axis=0), nfft)[:n]
    return out


def envelope(per_angle: np.ndarray, chirp: Chirp, grid: EnergyGrid = CANONICAL_GRID,
             gain: float = PIPELINE_GAIN, sensor_index: int = 0,
             timestamp: float = 0.0) -> Energyscape:
    """Analytic-signal magnitude binned onto the polar grid (max per bin)."""
    analytic = sps.hilbert(per_angle, axis=1)
    env = np.abs(analytic)
    n = per_angle.shape[1]
    ranges = SPEED_OF_SOUND * np.arange(n) / (2.0 * chirp.sample_rate)
    return _bin_envelope(env, ranges, grid, gain, sensor_index, timestamp)


def _bin_envelope(env: np.ndarray, ranges: np.ndarray, grid: EnergyGrid, gain: float,
                  sensor_index: int, timestamp: float) -> Energyscape:
    edges = np.arange(grid.n_range + 1) * grid.range_bin
    starts = np.searchsorted(ranges, edges[:-1], side="left")
    stops = np.searchsorted(ranges, edges[1:], side="left")
    energy = np.zeros((grid.n_range, env.shape[0]))
    for i in range(grid.n_range):
        if stops[i] > starts[i]:
            energy[i] = env[:, starts[i]:stops[i]].max(axis=1)
    return Energyscape(energy * gain, grid, sensor_index, timestamp)


_steering_cache: dict = {}


def _fused_steering(array: ArrayGeometry, grid: EnergyGrid, sample_rate: float,
                    nfft: int, k_lo: int, k_hi: int) -> np.ndarray:
    key = (array.seed, grid.n_angle, sample_rate, nfft, k_lo, k_hi)
    cached = _steering_cache.get(key)
    if cached is None:
        freqs = rfftfreq(nfft, 1.0 / sample_rate)[k_lo:k_hi]
        taus = steering_delays(array, grid.angles_rad)
        cached = np.exp(-2j * np.pi * taus[:, :, None] * freqs[None, None, :]).astype(np.complex64)
        _steering_cache[key] = cached
    return cached


def render_energyscape(
    events: Sequence[ReflectionEvent],
    cfg: SonarConfig,
    sensor_index: int = 0,
    timestamp: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> Energyscape:
    """Full pipeline (synthesis -> matched filter -> beamform -> envelope),
    fused in the chirp band for speed."""
    chirp, grid, array = cfg.chirp, cfg.grid, cfg.array
    signals = synthesize_echo_signals(events, chirp, array, grid.r_max)
    if cfg.noise_std > 0:
        noise_rng = rng if rng is not None else np.random.default_rng(cfg.array_seed)
        signals = signals + noise_rng.normal(0.0, cfg.noise_std, signals.shape)

    n = signals.shape[1]
    nfft = next_fast_len(n)
    while nfft % _DECIMATE:
        nfft = next_fast_len(nfft + 1)
    m = nfft // _DECIMATE

    spec = rfft(signals, nfft, axis=1)
    spec *= np.conj(rfft(chirp.waveform(), nfft))[None, :]

    f_lo, f_hi = chirp.band
    df = chirp.sample_rate / nfft
    k_lo = max(0, int(math.floor((f_lo - _BAND_PAD) / df)))
    k_hi = min(nfft // 2 + 1, int(math.ceil((f_hi + _BAND_PAD) / df)) + 1)
    if k_hi > m:
        raise ValueError("chirp band too wide for the fused decimation factor")

    phases = _fused_steering(array, grid, chirp.sample_rate, nfft, k_lo, k_hi)
    band = spec[:, k_lo:k_hi].astype(np.complex64)
    steered = np.einsum("cf,acf->af", band, phases)

    one_sided = np.zeros((grid.n_angle, m), dtype=np.complex64)
    one_sided[:, k_lo:k_hi] = steered
    analytic = np.fft.ifft(one_sided, axis=1)
    # scale to match the full-length irfft convention (1/nfft) with the
    # one-sided spectrum doubled into the analytic signal
    env = np.abs(analytic) * (2.0 * m / nfft)

    ranges = SPEED_OF_SOUND * np.arange(m) * _DECIMATE / (2.0 * chirp.sample_rate)
    return _bin_envelope(env, ranges, grid, cfg.pipeline_gain, sensor_index, timestamp)
