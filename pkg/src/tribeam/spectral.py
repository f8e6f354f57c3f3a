"""Spectral analysis: windowing, magnitude spectra, peak heights, sine fits.

The pipeline is deliberately plain: subtract the mean, apply a symmetric
Hanning window, zero-pad to a power of two, take the one-sided transform and
calibrate it so a unit-amplitude cosine reports height one.  Path
information is read off as the spectrum height at known difference
frequencies, or (for binned counting data) via linear least squares on a
known-frequency sine basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SingularFitError(RuntimeError):
    """The sine-fit design matrix is rank deficient (aliased frequencies)."""


@dataclass(frozen=True)
class PreparedInput:
    """Mean-subtracted, windowed, zero-padded samples plus the window bookkeeping
    needed to calibrate the transform."""

    samples: np.ndarray
    n_input: int
    pad_factor: int
    window_sum: float
    window: str = "hanning"

    def __len__(self) -> int:
        return len(self.samples)

    def __array__(self, dtype=None):
        return np.asarray(self.samples, dtype=dtype)


@dataclass(frozen=True)
class MagnitudeSpectrum:
    """One-sided spectrum calibrated to report cosine amplitudes directly."""

    freq_bins_hz: np.ndarray
    magnitudes: np.ndarray
    window: str
    pad_factor: int
    n_input: int
    calibration: float
    kind: str = "magnitude"

    @property
    def bin_width_hz(self) -> float:
        return float(self.freq_bins_hz[1] - self.freq_bins_hz[0])


@dataclass(frozen=True)
class PeakEstimate:
    target_hz: float
    located_hz: float
    height: float
    height_normalized: float


@dataclass(frozen=True)
class PeakReport:
    peaks: tuple[PeakEstimate, ...]

    def by_target(self, target_hz: float) -> PeakEstimate:
        for peak in self.peaks:
            if peak.target_hz == target_hz:
                return peak
        raise KeyError(f"no peak entry for target {target_hz} Hz")

    @property
    def max_height(self) -> float:
        return max((p.height for p in self.peaks), default=0.0)


@dataclass(frozen=True)
class SineFitResult:
    """Known-frequency least-squares fit: one (amplitude, phase) per frequency."""

    freqs_hz: tuple[float, ...]
    amplitudes: np.ndarray
    phases: np.ndarray
    amplitude_errors: np.ndarray
    offset: float
    offset_error: float
    parameter_errors: np.ndarray
    residual_rms: float

    def amplitude(self, freq_hz: float) -> float:
        return float(self.amplitudes[self.freqs_hz.index(freq_hz)])


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def preprocess(values, pad_factor: int = 8) -> PreparedInput:
    """Mean-subtract, window and zero-pad a series for the transform.

    Accepts a plain array, an :class:`~tribeam.acquisition.IntensitySeries`,
    or delta-histogram values.  The output length is ``pad_factor`` times
    the next power of two at or above the input length.
    """
    data = np.asarray(getattr(values, "values", values), dtype=float)
    if data.ndim != 1:
        raise ValueError("expected a one-dimensional series")
    n = data.size
    if n < 8:
        raise ValueError(f"need at least 8 samples, got {n}")
    pad_factor = int(pad_factor)
    if pad_factor < 1:
        raise ValueError("pad factor must be at least 1")
    window = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / (n - 1)))
    tapered = (data - data.mean()) * window
    out = np.zeros(pad_factor * _next_pow2(n))
    out[:n] = tapered
    return PreparedInput(out, n, pad_factor, float(window.sum()))


def magnitude_spectrum(prepared: PreparedInput, sample_rate_hz: float,
                       kind: str = "magnitude") -> MagnitudeSpectrum:
    """One-sided spectrum of a prepared series.

    Heights are scaled so a unit-amplitude in-band cosine reports 1.0; with
    at least eightfold zero-padding the residual scalloping stays below half
    a percent.  ``kind="power"`` squares the calibrated heights.
    """
    if sample_rate_hz <= 0:
        raise ValueError("sample rate must be positive")
    if kind not in ("magnitude", "power"):
        raise ValueError(f"unknown spectrum kind {kind!r}")
    n_fft = len(prepared.samples)
    if n_fft & (n_fft - 1):
        raise ValueError("prepared input length must be a power of two")
    calibration = 2.0 / prepared.window_sum
    mags = calibration * np.abs(np.fft.rfft(prepared.samples))
    if kind == "power":
        mags = mags**2
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate_hz)
    return MagnitudeSpectrum(freqs, mags, prepared.window, prepared.pad_factor,
                             prepared.n_input, calibration, kind)


def _parabolic_vertex(freqs: np.ndarray, mags: np.ndarray, idx: int) -> float:
    """Refine a peak location with a three-point parabola around ``idx``."""
    if idx <= 0 or idx >= mags.size - 1:
        return float(freqs[idx])
    left, center, right = mags[idx - 1], mags[idx], mags[idx + 1]
    denom = left - 2.0 * center + right
    if denom == 0.0:
        return float(freqs[idx])
    shift = 0.5 * (left - right) / denom
    shift = max(-1.0, min(1.0, shift))
    return float(freqs[idx] + shift * (freqs[1] - freqs[0]))


def peak_heights(spec: MagnitudeSpectrum, targets_hz, half_window_hz: float = 500.0
                 ) -> PeakReport:
    """Largest magnitude within +-half_window of each target frequency."""
    nyquist = float(spec.freq_bins_hz[-1])
    width = spec.bin_width_hz
    if half_window_hz < 2.0 * width:
        raise ValueError(
            f"half window {half_window_hz} Hz narrower than two bins ({width} Hz each)")
    estimates = []
    for target in targets_hz:
        if not 0.0 < target < nyquist:
            raise ValueError(f"target {target} Hz outside the analysis band")
        mask = np.abs(spec.freq_bins_hz - target) <= half_window_hz
        if not mask.any():
            raise ValueError(f"empty search window around {target} Hz")
        idx = int(np.flatnonzero(mask)[0] + np.argmax(spec.magnitudes[mask]))
        estimates.append((float(target),
                          _parabolic_vertex(spec.freq_bins_hz, spec.magnitudes, idx),
                          float(spec.magnitudes[idx])))
    top = max((h for _, _, h in estimates), default=0.0)
    peaks = tuple(
        PeakEstimate(target, located, height,
                     height / top if top > 0.0 else 0.0)
        for target, located, height in estimates
    )
    return PeakReport(peaks)


def fit_sines(values, times, freqs_hz, sigmas=None) -> SineFitResult:
    """Weighted linear least squares on the basis {1, cos(2 pi f t), sin(2 pi f t)}.

    Per frequency the amplitude is sqrt(a^2 + b^2) and the phase
    atan2(-b, a), folded to (-pi, pi].  Parameter standard errors come from
    the normal-equations covariance with the supplied sigmas (unit weights
    if absent).
    """
    y = np.asarray(getattr(values, "values", values), dtype=float)
    t = np.asarray(times, dtype=float)
    freqs = tuple(float(f) for f in freqs_hz)
    if y.shape != t.shape:
        raise ValueError("values and times must have the same shape")
    if len(set(freqs)) != len(freqs):
        raise ValueError("fit frequencies must be distinct")
    n_params = 2 * len(freqs) + 1
    if n_params > y.size:
        raise ValueError(
            f"{n_params} parameters cannot be fit to {y.size} samples")
    if sigmas is not None:
        sig = np.asarray(sigmas, dtype=float)
        if sig.shape != y.shape:
            raise ValueError("sigmas must match the sample shape")
        if np.any(sig <= 0):
            raise ValueError("sigmas must be positive")
        weights = 1.0 / sig
    else:
        weights = np.ones_like(y)

    design = np.empty((y.size, n_params))
    design[:, 0] = 1.0
    for i, f in enumerate(freqs):
        phase = 2.0 * np.pi * f * t
        design[:, 1 + 2 * i] = np.cos(phase)
        design[:, 2 + 2 * i] = np.sin(phase)

    weighted = design * weights[:, None]
    solution, _, rank, _ = np.linalg.lstsq(weighted, y * weights, rcond=None)
    if rank < n_params:
        raise SingularFitError(
            "design matrix is rank deficient; the frequencies alias on this grid")
    try:
        covariance = np.linalg.inv(weighted.T @ weighted)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError("normal equations are singular") from exc

    param_errors = np.sqrt(np.diag(covariance))
    amplitudes = np.empty(len(freqs))
    phases = np.empty(len(freqs))
    amp_errors = np.empty(len(freqs))
    for i in range(len(freqs)):
        a, b = solution[1 + 2 * i], solution[2 + 2 * i]
        var_a = covariance[1 + 2 * i, 1 + 2 * i]
        var_b = covariance[2 + 2 * i, 2 + 2 * i]
        cov_ab = covariance[1 + 2 * i, 2 + 2 * i]
        amp = math.hypot(a, b)
        amplitudes[i] = amp
        phi = math.atan2(-b, a)
        phases[i] = math.pi if phi == -math.pi else phi
        if amp > 0.0:
            amp_errors[i] = math.sqrt(
                max(0.0, a * a * var_a + b * b * var_b + 2.0 * a * b * cov_ab)
            ) / amp
        else:
            amp_errors[i] = math.sqrt(0.5 * (var_a + var_b))
    residuals = y - design @ solution
    return SineFitResult(
        freqs_hz=freqs,
        amplitudes=amplitudes,
        phases=phases,
        amplitude_errors=amp_errors,
        offset=float(solution[0]),
        offset_error=float(param_errors[0]),
        parameter_errors=param_errors,
        residual_rms=float(np.sqrt(np.mean(residuals**2))),
    )
