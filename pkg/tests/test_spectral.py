"""Tests for windowing, spectrum calibration, peak extraction and sine fits."""

import math

import numpy as np
import pytest

from tribeam.spectral import (
    SingularFitError,
    fit_sines,
    magnitude_spectrum,
    peak_heights,
    preprocess,
)

RATE = 256_000.0


def cosine(freq_hz, n=256, amplitude=1.0, phase=0.0, rate=RATE):
    t = np.arange(n) / rate
    return amplitude * np.cos(2 * np.pi * freq_hz * t + phase), t


# ---------------------------------------------------------------------------
# preprocess


def test_constant_input_becomes_zero():
    prepared = preprocess(np.full(64, 3.7), pad_factor=2)
    assert np.max(np.abs(prepared.samples)) <= 1e-14  # mean subtraction dust


def test_minimal_length_and_padding():
    prepared = preprocess(np.arange(8.0), pad_factor=1)
    assert len(prepared) == 8
    assert preprocess(np.arange(9.0), pad_factor=1).samples.size == 16
    assert preprocess(np.arange(8.0), pad_factor=4).samples.size == 32
    with pytest.raises(ValueError):
        preprocess(np.arange(7.0))
    with pytest.raises(ValueError):
        preprocess(np.arange(16.0), pad_factor=0)


def test_window_matches_symmetric_hanning():
    x = np.ones(32)
    x[0] = 2.0  # break the constant so the mean subtraction leaves signal
    prepared = preprocess(x, pad_factor=1)
    n = 32
    window = 0.5 * (1 - np.cos(2 * np.pi * np.arange(n) / (n - 1)))
    expected = (x - x.mean()) * window
    assert np.allclose(prepared.samples[:n], expected, atol=1e-15)
    assert prepared.window_sum == pytest.approx(window.sum())


# ---------------------------------------------------------------------------
# magnitude spectrum


def test_zero_input_zero_spectrum():
    spec = magnitude_spectrum(preprocess(np.zeros(64)), RATE)
    assert np.max(spec.magnitudes) == 0.0


def test_unit_cosine_calibration():
    values, _ = cosine(6000.0)
    spec = magnitude_spectrum(preprocess(values, 8), RATE)
    assert spec.magnitudes.max() == pytest.approx(1.0, rel=5e-3)
    # independent check of the stored calibration constant
    window = 0.5 * (1 - np.cos(2 * np.pi * np.arange(256) / 255))
    assert spec.calibration == pytest.approx(2.0 / window.sum(), rel=1e-12)


def test_calibration_invariance_over_length_and_padding():
    for n in (256, 1024):
        for pad in (8, 16):
            for freq in (6000.0, 6437.0, 11111.0):  # on and off bin
                values, _ = cosine(freq, n=n)
                spec = magnitude_spectrum(preprocess(values, pad), RATE)
                assert spec.magnitudes.max() == pytest.approx(1.0, rel=5e-3)


def test_known_amplitude_recovered():
    values, _ = cosine(6000.0, amplitude=0.06512)
    spec = magnitude_spectrum(preprocess(values, 8), RATE)
    report = peak_heights(spec, [6000.0], 500.0)
    assert report.peaks[0].height == pytest.approx(0.06512, rel=5e-3)


def test_two_tone_height_ratio():
    a, _ = cosine(5000.0, n=512, amplitude=1.0)
    b, _ = cosine(20000.0, n=512, amplitude=2.0)
    spec = magnitude_spectrum(preprocess(a + b, 8), RATE)
    report = peak_heights(spec, [5000.0, 20000.0], 500.0)
    ratio = report.by_target(20000.0).height / report.by_target(5000.0).height
    assert ratio == pytest.approx(2.0, rel=1e-2)


def test_power_kind_squares_heights():
    values, _ = cosine(6000.0, amplitude=0.5)
    mag = magnitude_spectrum(preprocess(values, 8), RATE, kind="magnitude")
    power = magnitude_spectrum(preprocess(values, 8), RATE, kind="power")
    assert power.magnitudes.max() == pytest.approx(mag.magnitudes.max() ** 2,
                                                   rel=1e-12)


def test_parseval_before_calibration():
    rng = np.random.default_rng(11)
    values = rng.normal(size=256)
    prepared = preprocess(values, 4)
    time_energy = np.sum(prepared.samples**2)
    transform = np.fft.fft(prepared.samples)
    freq_energy = np.sum(np.abs(transform) ** 2) / transform.size
    assert freq_energy == pytest.approx(time_energy, rel=1e-9)


# ---------------------------------------------------------------------------
# peak extraction


def test_peak_report_contracts():
    values, _ = cosine(6000.0)
    spec = magnitude_spectrum(preprocess(values, 8), RATE)
    with pytest.raises(ValueError):
        peak_heights(spec, [6000.0], half_window_hz=spec.bin_width_hz)
    with pytest.raises(ValueError):
        peak_heights(spec, [200_000.0], 500.0)
    report = peak_heights(spec, [6000.0, 9000.0], 500.0)
    assert report.by_target(6000.0).height_normalized == 1.0
    assert abs(report.by_target(6000.0).located_hz - 6000.0) <= spec.bin_width_hz


def test_peak_location_tracks_off_bin_tones():
    values, _ = cosine(6330.0, n=512)
    spec = magnitude_spectrum(preprocess(values, 8), RATE)
    report = peak_heights(spec, [6330.0], 500.0)
    assert abs(report.peaks[0].located_hz - 6330.0) <= 25.0


# ---------------------------------------------------------------------------
# sine fitting


def test_fit_recovers_noise_free_multitone():
    t = np.arange(256) / RATE
    freqs = (3000.0, 6000.0, 9000.0, 12000.0)
    amps = (0.06512, 0.06512, 0.06512, 0.13024)
    values = sum(a * np.cos(2 * np.pi * f * t + 0.3 * i)
                 for i, (a, f) in enumerate(zip(amps, freqs)))
    fit = fit_sines(values, t, freqs)
    assert np.max(np.abs(fit.amplitudes - amps) / np.asarray(amps)) <= 1e-9
    assert fit.residual_rms <= 1e-12
    assert fit.phases[1] == pytest.approx(0.3, abs=1e-9)


def test_fit_zero_input():
    t = np.arange(64) / RATE
    fit = fit_sines(np.zeros(64), t, (3000.0, 6000.0))
    assert np.all(fit.amplitudes == 0.0)
    assert fit.offset == 0.0


def test_fit_rejects_aliased_frequencies():
    t = np.arange(64) / RATE
    values = np.cos(2 * np.pi * 3000 * t)
    with pytest.raises(SingularFitError):
        fit_sines(values, t, (3000.0, 3000.0 + RATE))  # alias on this grid
    with pytest.raises(ValueError):
        fit_sines(values, t, (3000.0, 3000.0))  # duplicates rejected up front


def test_fit_requires_enough_samples():
    t = np.arange(8) / RATE
    with pytest.raises(ValueError):
        fit_sines(np.zeros(8), t, tuple(1000.0 * k for k in range(1, 6)))


def test_fit_phase_convention_and_folding():
    t = np.arange(256) / RATE
    values = -np.cos(2 * np.pi * 6000 * t)  # amplitude 1, phase pi
    fit = fit_sines(values, t, (6000.0,))
    assert fit.amplitudes[0] == pytest.approx(1.0, rel=1e-12)
    assert fit.phases[0] == pytest.approx(math.pi, abs=1e-9)
    assert fit.phases[0] > 0  # folded to (-pi, pi], never -pi


def test_peak_heights_and_fit_agree_on_default_scenario():
    # two independent estimators of the same beat amplitudes
    from tribeam.acquisition import DEFAULT_GRID, synthesize_series
    from tribeam.beamline import ScenarioConfig

    _, _, delta = synthesize_series(ScenarioConfig(), DEFAULT_GRID)
    targets = (3000.0, 6000.0, 9000.0, 12000.0)
    spec = magnitude_spectrum(preprocess(delta, 8), DEFAULT_GRID.sample_rate_hz)
    report = peak_heights(spec, targets, 500.0)
    fit = fit_sines(delta.values, DEFAULT_GRID.times, targets)
    for peak, amplitude in zip(report.peaks, fit.amplitudes):
        assert peak.height == pytest.approx(amplitude, rel=0.01)


def test_fit_on_closed_form_reproduces_coefficient_ratios():
    from tribeam.beamline import ScenarioConfig, closed_form_intensity

    t = np.arange(256) / RATE
    freqs = (3000.0, 6000.0, 9000.0, 12000.0)
    dfreqs = ScenarioConfig().difference_frequencies_hz()
    for chi, expected in ((0.0, (1.0, 1.0, 1.0, 2.0)),
                          (math.pi, (1.0, 1.0, 1.0, 0.0))):
        delta = (closed_form_intensity(chi, "plus", t, math.pi / 9, dfreqs)
                 - closed_form_intensity(chi, "minus", t, math.pi / 9, dfreqs))
        fit = fit_sines(delta, t, freqs)
        ratios = fit.amplitudes / fit.amplitudes[0]
        # frequency order in `freqs` is R, I, II, I+II beats respectively
        assert np.max(np.abs(ratios - expected)) <= 1e-9


def test_weighted_fit_coverage_under_poisson_noise():
    # single cosine on a counting baseline, >= 1e6 total counts
    freq = 6000.0
    amplitude = 0.1
    per_sample = 8000.0
    t = np.arange(128) / RATE
    expectation = per_sample * (1.0 + amplitude * np.cos(2 * np.pi * freq * t))
    hits = 0
    n_runs = 500
    for seed in range(n_runs):
        rng = np.random.default_rng(1000 + seed)
        counts = rng.poisson(expectation)
        values = counts / per_sample
        sigmas = np.sqrt(np.maximum(counts, 1.0)) / per_sample
        fit = fit_sines(values, t, (freq,), sigmas=sigmas)
        if abs(fit.amplitudes[0] - amplitude) <= 3.0 * fit.amplitude_errors[0]:
            hits += 1
    assert hits / n_runs >= 0.99
