"""Three-beam interferometer topology and detector intensities.

The instrument is a four-plate interferometer: plate 1 splits the incident
beam, plate 2 peels off a reference beam R, plate 3 recombines the two
front-loop paths I and II into the forward beam I+II (complement exits at
H1), and plate 4 recombines I+II with R into the forward port O (complement
H2).  Weak spin rotators mark each path at its own radio frequency; a strong
energy-compensation rotator and a spin filter behind the last plate convert
those marks into intensity beats at the difference frequencies.

Two normalizations are supported.  ``analytic`` uses fixed combination
weights and a source amplitude calibrated so that the propagated O-port
intensity coincides exactly with :func:`closed_form_intensity`.  ``unitary``
treats every plate as a flux-conserving two-port splitter, so that the mean
intensities of the three exit ports sum to one; its default transmissions
are chosen so the three stationary exit amplitudes at O are equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .amplitudes import (
    DOWN,
    EXACT,
    FIRST_ORDER,
    UP,
    AmplitudeComponent,
    BeamState,
    InvalidStateError,
    mean_flux,
    project_up,
    rotate_spin,
    superpose,
)

TWO_PI = 2.0 * math.pi

HISTORIES = ("I", "II", "R")
PATH_I, PATH_II, PATH_R, PATH_I_II = "I", "II", "R", "I+II"
PORT_O, PORT_H1, PORT_H2 = "O", "H1", "H2"

PLUS = "plus"
MINUS = "minus"

ANALYTIC = "analytic"
UNITARY = "unitary"

FREQ_KEYS = (PATH_I, PATH_II, PATH_I_II, PATH_R, "EC")

DEFAULT_FREQS_HZ: dict[str, float] = {
    PATH_I: 74_000,
    PATH_II: 77_000,
    PATH_I_II: 80_000,
    PATH_R: 71_000,
    "EC": 68_000,
}

# Source amplitude per history in analytic mode.  With the 1/sqrt(2) and 1/2
# combination weights below plus the compensation rotator's cos(pi/4), a
# launch amplitude of 1/2 puts each stationary exit coefficient at
# 1/(4*sqrt(2)), which is the scale the closed-form intensities are written in.
_ANALYTIC_SOURCE_AMP = 0.5

# Unitary-mode plate transmissions (t1, t2, t3, t4).  t1^2 = 3/5 and
# t2^2 = 1/3 solve the two-port product equations that make the three
# stationary amplitudes at O equal while conserving flux.
DEFAULT_TRANSMISSIONS = (
    math.sqrt(3.0 / 5.0),
    math.sqrt(1.0 / 3.0),
    math.sqrt(0.5),
    math.sqrt(0.5),
)


class ConfigurationError(ValueError):
    """A scenario or acquisition setting violates its contract."""


@dataclass(frozen=True)
class ContrastMatrix:
    """Pairwise interference contrasts between the histories I, II and R.

    Diagonal entries are fixed at one; off-diagonal entries below one model
    imperfect coherence between the corresponding paths.
    """

    i_ii: float = 1.0
    i_r: float = 1.0
    ii_r: float = 1.0

    def __post_init__(self) -> None:
        for name, value in (("i_ii", self.i_ii), ("i_r", self.i_r),
                            ("ii_r", self.ii_r)):
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"contrast {name}={value} outside [0, 1]")

    @classmethod
    def ideal(cls) -> "ContrastMatrix":
        return cls()

    @classmethod
    def measured(cls) -> "ContrastMatrix":
        """The reference contrast set used by the ``--contrast paper`` preset."""
        return cls(i_ii=0.55, i_r=0.60, ii_r=0.5)

    @classmethod
    def from_mapping(cls, data: Mapping[str, float]) -> "ContrastMatrix":
        known = {"i_ii", "i_r", "ii_r"}
        extra = set(data) - known
        if extra:
            raise ConfigurationError(f"unknown contrast entries {sorted(extra)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def get(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        pair = frozenset((a, b))
        if pair == frozenset((PATH_I, PATH_II)):
            return self.i_ii
        if pair == frozenset((PATH_I, PATH_R)):
            return self.i_r
        if pair == frozenset((PATH_II, PATH_R)):
            return self.ii_r
        raise KeyError(f"no contrast entry for histories {a!r}, {b!r}")

    def as_array(self) -> np.ndarray:
        order = HISTORIES
        return np.array([[self.get(a, b) for b in order] for a in order])

    def as_dict(self) -> dict[str, float]:
        return {"i_ii": self.i_ii, "i_r": self.i_r, "ii_r": self.ii_r}

    @property
    def is_ideal(self) -> bool:
        return self.i_ii == self.i_r == self.ii_r == 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Full experiment description: phases, rotators, blockers and engine."""

    chi_ii: float = 0.0
    chi_r: float = 0.0
    ww_angle: float = math.pi / 9
    freqs_hz: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_FREQS_HZ))
    blockers: frozenset[str] = frozenset()
    engine: str = FIRST_ORDER
    normalization: str = ANALYTIC
    contrast: ContrastMatrix = field(default_factory=ContrastMatrix.ideal)
    premark: tuple[float, float] | None = None  # (frequency Hz, angle rad)
    transmissions: tuple[float, float, float, float] = DEFAULT_TRANSMISSIONS

    def __post_init__(self) -> None:
        object.__setattr__(self, "blockers", frozenset(self.blockers))
        self._validate()

    def _validate(self) -> None:
        if set(self.freqs_hz) != set(FREQ_KEYS):
            raise ConfigurationError(
                f"frequency map must have keys {FREQ_KEYS}, got {sorted(self.freqs_hz)}")
        values = [float(self.freqs_hz[k]) for k in FREQ_KEYS]
        if any(not math.isfinite(v) or v <= 0 for v in values):
            raise ConfigurationError("all rotator frequencies must be positive")
        if len(set(values)) != len(values):
            raise ConfigurationError("rotator frequencies must be pairwise distinct")
        diffs = list(self.difference_frequencies_hz().values())
        if len(set(diffs)) != len(diffs):
            raise ConfigurationError(
                "difference frequencies alias; marker offsets from the "
                "compensation frequency must be pairwise distinct")
        if not -math.pi <= self.ww_angle <= math.pi:
            raise ConfigurationError("marking angle outside [-pi, pi]")
        for name, chi in (("chi_ii", self.chi_ii), ("chi_r", self.chi_r)):
            if not math.isfinite(chi):
                raise ConfigurationError(f"{name} must be finite")
        bad = self.blockers - {PATH_R, PATH_I_II}
        if bad:
            raise ConfigurationError(f"unknown blocker positions {sorted(bad)}")
        if self.engine not in (FIRST_ORDER, EXACT):
            raise ConfigurationError(f"unknown engine {self.engine!r}")
        if self.normalization not in (ANALYTIC, UNITARY):
            raise ConfigurationError(f"unknown normalization {self.normalization!r}")
        if self.premark is not None:
            pfreq, pangle = self.premark
            if not math.isfinite(pfreq) or pfreq <= 0:
                raise ConfigurationError("premark frequency must be positive")
            if pfreq in values:
                raise ConfigurationError("premark frequency collides with a marker")
            if not -math.pi <= pangle <= math.pi:
                raise ConfigurationError("premark angle outside [-pi, pi]")
        if len(self.transmissions) != 4 or any(
                not 0.0 < t < 1.0 for t in self.transmissions):
            raise ConfigurationError("plate transmissions must lie in (0, 1)")

    def difference_frequencies_hz(self) -> dict[str, float]:
        """Beat frequencies |f_marker - f_EC| per marked path (Hz)."""
        ec = float(self.freqs_hz["EC"])
        diffs = {
            key: abs(float(self.freqs_hz[key]) - ec)
            for key in (PATH_R, PATH_I, PATH_II, PATH_I_II)
        }
        if self.premark is not None:
            diffs["premark"] = abs(float(self.premark[0]) - ec)
        return diffs

    def analysis_targets_hz(self) -> tuple[float, ...]:
        return tuple(sorted(self.difference_frequencies_hz().values()))


@dataclass(frozen=True)
class PortStates:
    """Beam states at the three exit ports for one compensation sign branch.

    When ``analyzed`` is true the O state has passed the energy-compensation
    rotator and the spin filter; H1 and H2 are always the raw plate outputs
    (use :func:`analyze_port` to look at a complement port through the same
    compensation/filter chain).
    """

    ports: Mapping[str, BeamState]
    sign: str
    engine: str
    analyzed: bool = True

    def __getitem__(self, label: str) -> BeamState:
        return self.ports[label]

    @property
    def warnings(self) -> tuple[str, ...]:
        seen: list[str] = []
        for state in self.ports.values():
            for w in state.warnings:
                if w not in seen:
                    seen.append(w)
        return tuple(seen)


def _ec_angle(sign: str) -> float:
    if sign == PLUS:
        return math.pi / 2
    if sign == MINUS:
        return -math.pi / 2
    raise ConfigurationError(f"unknown compensation sign {sign!r}")


def _launch(config: ScenarioConfig) -> dict[str, BeamState]:
    """Initial spin-up states for the three histories, premarked if configured."""
    t1, t2 = config.transmissions[0], config.transmissions[1]
    r1 = math.sqrt(1.0 - t1 * t1)
    r2 = math.sqrt(1.0 - t2 * t2)
    if config.normalization == ANALYTIC:
        amps = {PATH_I: _ANALYTIC_SOURCE_AMP,
                PATH_II: _ANALYTIC_SOURCE_AMP,
                PATH_R: _ANALYTIC_SOURCE_AMP}
    else:
        amps = {PATH_I: r1, PATH_II: t1 * r2, PATH_R: t1 * t2}
    chis = {PATH_I: 0.0, PATH_II: config.chi_ii, PATH_R: config.chi_r}
    paths: dict[str, BeamState] = {}
    for h in HISTORIES:
        coeff = amps[h] * complex(math.cos(chis[h]), math.sin(chis[h]))
        state = BeamState(h, (AmplitudeComponent(h, UP, 0.0, coeff),))
        if config.premark is not None:
            pfreq, pangle = config.premark
            state = rotate_spin(state, TWO_PI * pfreq, pangle, config.engine)
        paths[h] = state
    return paths


def _marked_paths(config: ScenarioConfig) -> dict[str, BeamState]:
    paths = _launch(config)
    for h in HISTORIES:
        freq = TWO_PI * float(config.freqs_hz[h])
        paths[h] = rotate_spin(paths[h], freq, config.ww_angle, config.engine)
    return paths


def _recombine_front(config: ScenarioConfig,
                     paths: dict[str, BeamState]) -> tuple[BeamState, BeamState]:
    if config.normalization == ANALYTIC:
        t3 = r3 = math.sqrt(0.5)
    else:
        t3 = config.transmissions[2]
        r3 = math.sqrt(1.0 - t3 * t3)
    fwd = superpose([(paths[PATH_I], t3), (paths[PATH_II], r3)], PATH_I_II)
    h1 = superpose([(paths[PATH_I], r3), (paths[PATH_II], -t3)], PORT_H1)
    return fwd, h1


def front_loop(config: ScenarioConfig) -> tuple[BeamState, BeamState]:
    """Recombine paths I and II: returns (forward beam I+II, complement H1).

    The forward beam is the state entering the combined-path marker; at the
    destructive phase setting its stationary component cancels exactly while
    path-marked components survive.
    """
    return _recombine_front(config, _marked_paths(config))


def analyze_port(state: BeamState, config: ScenarioConfig, sign: str) -> BeamState:
    """Run a port through the energy-compensation rotator and the spin filter.

    The compensation rotation is pi/2 and always uses exact algebra.
    """
    compensated = rotate_spin(
        state, TWO_PI * float(config.freqs_hz["EC"]), _ec_angle(sign), EXACT)
    return project_up(compensated)


def propagate(config: ScenarioConfig, sign: str = PLUS,
              analyzer: bool = True) -> PortStates:
    """Build the exit-port states for one compensation sign branch.

    Pipeline: launch the three histories with their phases (premarking them
    first if configured), apply the path markers, recombine the front loop,
    mark the combined path, apply blockers, recombine with the reference
    beam, and finally (unless ``analyzer`` is false) compensate and
    spin-filter the O port.
    """
    _ec_angle(sign)  # validate early
    paths = _marked_paths(config)
    fwd, h1 = _recombine_front(config, paths)
    fwd = rotate_spin(fwd, TWO_PI * float(config.freqs_hz[PATH_I_II]),
                      config.ww_angle, config.engine)
    ref = paths[PATH_R]

    if PATH_I_II in config.blockers:
        fwd = BeamState(fwd.label, (), fwd.warnings)
    if PATH_R in config.blockers:
        ref = BeamState(ref.label, (), ref.warnings)

    if config.normalization == ANALYTIC:
        o = superpose([(fwd, math.sqrt(0.5)), (ref, 0.5)], PORT_O)
        h2 = superpose([(fwd, 0.5), (ref, -math.sqrt(0.5))], PORT_H2)
    else:
        t4 = config.transmissions[3]
        r4 = math.sqrt(1.0 - t4 * t4)
        o = superpose([(fwd, t4), (ref, r4)], PORT_O)
        h2 = superpose([(fwd, r4), (ref, -t4)], PORT_H2)

    if analyzer:
        o = analyze_port(o, config, sign)
    return PortStates({PORT_O: o, PORT_H1: h1, PORT_H2: h2}, sign,
                      config.engine, analyzed=analyzer)


# --------------------------------------------------------------------------
# intensities


def _pair_terms(port: BeamState, contrast: ContrastMatrix,
                first_order: bool) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear cross-term table: weights w_jk and beat frequencies d_jk.

    The intensity is Re(sum_jk w_jk * exp(-1j * d_jk * t)) over ordered
    component pairs, each weighted by the contrast of its history pair.
    In first-order mode pairs of two energy-shifted components are dropped:
    they are quadratic in the marking angle.
    """
    comps = port.components
    for c in comps:
        if c.spin != UP:
            raise InvalidStateError(
                "intensity requires a spin-filtered state; "
                f"found spin-down component in {port.label!r}")
    weights: list[complex] = []
    deltas: list[float] = []
    for j in comps:
        for k in comps:
            if first_order and j.offset != 0.0 and k.offset != 0.0:
                continue
            weights.append(contrast.get(j.history, k.history)
                           * j.coeff.conjugate() * k.coeff)
            deltas.append(k.offset - j.offset)
    return np.asarray(weights, dtype=complex), np.asarray(deltas, dtype=float)


def intensity_at(port: BeamState, contrast: ContrastMatrix, t: float,
                 first_order: bool = False) -> float:
    """Contrast-weighted detector intensity of a spin-filtered state at time t.

    With all contrasts at one this is exactly the squared magnitude of the
    instantaneous coherent amplitude.
    """
    weights, deltas = _pair_terms(port, contrast, first_order)
    if weights.size == 0:
        return 0.0
    return float(np.real(weights * np.exp(-1j * deltas * t)).sum())


def intensity_series(port: BeamState, contrast: ContrastMatrix,
                     times: np.ndarray, first_order: bool = False) -> np.ndarray:
    """Vectorized :func:`intensity_at` over a time array."""
    times = np.asarray(times, dtype=float)
    weights, deltas = _pair_terms(port, contrast, first_order)
    if weights.size == 0:
        return np.zeros_like(times)
    phases = np.exp(-1j * np.outer(deltas, times))
    return np.real(weights[:, None] * phases).sum(axis=0)


def mean_intensity(port: BeamState, contrast: ContrastMatrix,
                   first_order: bool = False) -> float:
    """Time-averaged intensity: only pairs with equal frequency offsets survive."""
    weights, deltas = _pair_terms(port, contrast, first_order)
    if weights.size == 0:
        return 0.0
    return float(np.real(weights[deltas == 0.0]).sum())


def port_flux(state: BeamState) -> float:
    """Time-averaged total intensity of a raw (unfiltered) port state."""
    return mean_flux(state)


def closed_form_intensity(chi_ii: float, sign: str, t, alpha: float,
                          dfreqs_hz: Mapping[str, float]):
    """Closed-form O-detector intensity for the two reference phase settings.

    Only ``chi_ii`` of 0 or pi (with chi_R = 0) has a closed form.  This is
    the analytic oracle for ``propagate`` plus ``intensity_at`` in
    first-order analytic mode with ideal contrast.  ``t`` may be a scalar or
    an array.
    """
    branch = _ec_angle(sign) > 0  # True for the "plus" branch
    s = math.sin(alpha / 2.0)
    t = np.asarray(t, dtype=float)
    w = {k: TWO_PI * float(dfreqs_hz[k]) for k in (PATH_I, PATH_II, PATH_R,
                                                   PATH_I_II)}
    if abs(chi_ii) <= 1e-12:
        osc = (np.cos(w[PATH_I] * t) + np.cos(w[PATH_II] * t)
               + np.cos(w[PATH_R] * t) + 2.0 * np.cos(w[PATH_I_II] * t))
        out = (9.0 - (6.0 * s * osc if branch else -6.0 * s * osc)) / 32.0
    elif abs(chi_ii - math.pi) <= 1e-12:
        osc = (np.cos(w[PATH_I] * t) - np.cos(w[PATH_II] * t)
               + np.cos(w[PATH_R] * t))
        out = (1.0 - (2.0 * s * osc if branch else -2.0 * s * osc)) / 32.0
    else:
        raise ConfigurationError(
            "closed form only exists for chi_ii in {0, pi} with chi_r = 0")
    return float(out) if out.ndim == 0 else out
