"""Time-series synthesis and simulated counting.

Detector intensities oscillate at the marker difference frequencies, so a
run is fully described by one folding period: the reciprocal of the exact
greatest common divisor of those frequencies.  Counting is modeled as two
independent acquisition halves (one per compensation sign), each folded
stroboscopically into a fixed number of phase bins with Poisson statistics
per bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .amplitudes import FIRST_ORDER
from .beamline import (
    MINUS,
    PLUS,
    PORT_O,
    ConfigurationError,
    ScenarioConfig,
    analyze_port,
    intensity_series,
    propagate,
)

I_PLUS = "Iplus"
I_MINUS = "Iminus"
DELTA = "Delta"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid; its span must cover whole folding periods."""

    sample_rate_hz: float
    n_samples: int
    origin_s: float = 0.0

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0 or not math.isfinite(self.sample_rate_hz):
            raise ConfigurationError("sample rate must be positive")
        if self.n_samples <= 0:
            raise ConfigurationError("need a positive number of samples")

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    @property
    def times(self) -> np.ndarray:
        return self.origin_s + np.arange(self.n_samples) / self.sample_rate_hz


#: 256 samples over 1 ms: Nyquist at 128 kHz, far above the default 12 kHz
#: maximum beat frequency, and spanning three 1/3 ms folding periods.
DEFAULT_GRID = TimeGrid(256_000.0, 256)


@dataclass(frozen=True)
class IntensitySeries:
    grid: TimeGrid
    values: np.ndarray
    kind: str  # I_PLUS, I_MINUS or DELTA
    fold_period_s: float


@dataclass(frozen=True)
class FoldedHistogram:
    """Stroboscopically folded counts for the two acquisition halves."""

    n_bins: int
    period_s: float
    counts_plus: np.ndarray
    counts_minus: np.ndarray
    live_time_per_branch_s: float

    @property
    def bin_centers_s(self) -> np.ndarray:
        return (np.arange(self.n_bins) + 0.5) * (self.period_s / self.n_bins)

    @property
    def live_time_per_bin_s(self) -> float:
        return self.live_time_per_branch_s / self.n_bins


def _fraction_gcd(a: Fraction, b: Fraction) -> Fraction:
    return Fraction(
        math.gcd(a.numerator * b.denominator, b.numerator * a.denominator),
        a.denominator * b.denominator,
    )


def _folding_period(config: ScenarioConfig) -> Fraction:
    diffs = [Fraction(d) for d in config.difference_frequencies_hz().values()]
    return 1 / reduce(_fraction_gcd, diffs)


def folding_period_s(config: ScenarioConfig) -> float:
    """Least common period of all configured difference frequencies (seconds)."""
    return float(_folding_period(config))


def validate_grid(grid: TimeGrid, config: ScenarioConfig) -> None:
    """Check the Nyquist margin and that the grid spans whole folding periods."""
    max_diff = max(config.difference_frequencies_hz().values())
    if grid.sample_rate_hz <= 2.0 * max_diff:
        raise ConfigurationError(
            f"sample rate {grid.sample_rate_hz} Hz leaves no Nyquist margin "
            f"over the maximum beat frequency {max_diff} Hz")
    duration = Fraction(grid.n_samples) / Fraction(grid.sample_rate_hz)
    ratio = duration / _folding_period(config)
    if ratio.denominator != 1:
        raise ConfigurationError(
            f"grid duration {float(duration)} s is not an integer multiple of "
            f"the folding period {folding_period_s(config)} s")


def synthesize_series(
    config: ScenarioConfig,
    grid: TimeGrid = DEFAULT_GRID,
    port: str = PORT_O,
) -> tuple[IntensitySeries, IntensitySeries, IntensitySeries]:
    """Intensities of both compensation branches and their difference.

    Ports other than O are run through the same compensation/filter chain
    before the intensity is evaluated.
    """
    validate_grid(grid, config)
    first_order = config.engine == FIRST_ORDER
    times = grid.times
    period = folding_period_s(config)
    branch_values = {}
    for sign in (PLUS, MINUS):
        ports = propagate(config, sign)
        state = ports[port]
        if port != PORT_O:
            state = analyze_port(state, config, sign)
        branch_values[sign] = intensity_series(
            state, config.contrast, times, first_order=first_order)
    iplus = IntensitySeries(grid, branch_values[PLUS], I_PLUS, period)
    iminus = IntensitySeries(grid, branch_values[MINUS], I_MINUS, period)
    delta = IntensitySeries(
        grid, branch_values[PLUS] - branch_values[MINUS], DELTA, period)
    return iplus, iminus, delta


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    # Recover the intended rational from its float image; all periods and
    # rates derive from integer-Hz frequencies, so this is exact in practice.
    return Fraction(x).limit_denominator(10**12)


def fold_bin_indices(grid: TimeGrid, period_s, n_bins: int) -> np.ndarray:
    """Phase-histogram bin index of every grid sample.

    Computed in exact rational arithmetic: samples land exactly on bin
    boundaries whenever the sample rate and the folding period are
    commensurate, and float rounding there would scramble the occupancy.
    """
    if n_bins <= 0:
        raise ConfigurationError("need a positive number of fold bins")
    period = _as_fraction(period_s)
    base = _as_fraction(grid.origin_s) / period
    step = 1 / (_as_fraction(grid.sample_rate_hz) * period)
    common = math.lcm(base.denominator, step.denominator)
    a = int(base * common)
    b = int(step * common)
    return np.fromiter(
        ((((a + i * b) % common) * n_bins) // common
         for i in range(grid.n_samples)),
        dtype=np.int64, count=grid.n_samples)


def fold_bin_means(series: IntensitySeries, n_bins: int) -> np.ndarray:
    """Mean series value per fold bin; every bin must receive the same number
    of samples for the fold to be unbiased."""
    bins = fold_bin_indices(series.grid, series.fold_period_s, n_bins)
    counts = np.bincount(bins, minlength=n_bins)
    if counts.min() == 0 or counts.max() != counts.min():
        raise ConfigurationError(
            f"{n_bins} bins do not divide the {series.grid.n_samples}-sample "
            "grid evenly over the folding period")
    sums = np.bincount(bins, weights=series.values, minlength=n_bins)
    return sums / counts


def simulate_counts(
    iplus: IntensitySeries,
    iminus: IntensitySeries,
    rate: float,
    total_time: float,
    n_bins: int,
    seed: int,
) -> FoldedHistogram:
    """Draw Poisson counts per fold bin for both acquisition halves.

    ``rate`` is the count rate at reference intensity 1; each branch
    receives half of ``total_time``.  Expected counts per bin follow the
    branch intensity averaged over the bin's fold positions (clamped at
    zero: a truncated intensity may dip marginally below zero near a
    destructive setting).  Draws are consumed in fixed (branch, bin) order,
    so a given seed always reproduces the same histogram.
    """
    if rate <= 0:
        raise ConfigurationError("count rate must be positive")
    if total_time <= 0:
        raise ConfigurationError("total acquisition time must be positive")
    if iplus.fold_period_s != iminus.fold_period_s:
        raise ConfigurationError("branch series disagree on the folding period")
    live = total_time / 2.0
    live_per_bin = live / n_bins
    means = []
    for series in (iplus, iminus):
        mu = rate * live_per_bin * np.clip(fold_bin_means(series, n_bins), 0.0, None)
        if mu.max() > 2.0**53:
            raise ConfigurationError(
                "expected counts per bin exceed the exact integer range")
        means.append(mu)
    rng = np.random.default_rng(seed)
    counts_plus = rng.poisson(means[0]).astype(np.int64)
    counts_minus = rng.poisson(means[1]).astype(np.int64)
    return FoldedHistogram(
        n_bins=n_bins,
        period_s=iplus.fold_period_s,
        counts_plus=counts_plus,
        counts_minus=counts_minus,
        live_time_per_branch_s=live,
    )


def delta_histogram(hist: FoldedHistogram) -> tuple[np.ndarray, np.ndarray]:
    """Per-bin normalized count difference and its Poisson standard deviation.

    Values are count rates: (n+ - n-) / (live time per bin), with
    sigma = sqrt(n+ + n-) / (live time per bin).  Divide by the reference
    count rate to express the result in intensity units.
    """
    ltb = hist.live_time_per_bin_s
    if ltb <= 0:
        raise ConfigurationError("live time per bin must be positive")
    diff = hist.counts_plus.astype(float) - hist.counts_minus.astype(float)
    total = hist.counts_plus.astype(float) + hist.counts_minus.astype(float)
    return diff / ltb, np.sqrt(total) / ltb
