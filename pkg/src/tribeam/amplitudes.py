"""Spin-path-energy amplitude algebra.

A beam is a list of components, each tagged by its spatial origin (path I,
II or R), its spin projection, an accumulated angular-frequency offset, and
a complex coefficient.  The value of a component at time t is
``coeff * exp(-1j * offset * t)``.  A resonance spin rotator flips spin and
shifts the offset by its drive frequency; all other elements act as scalar
multipliers or linear combinations.  Every operation here is a pure function
on immutable states, so they compose and parallelize freely.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

UP = "up"
DOWN = "down"

EXACT = "exact"
FIRST_ORDER = "first-order"

#: Coefficients at or below this magnitude are treated as arithmetic noise
#: (double precision after a few tens of component operations).
MERGE_TOL = 1e-14

#: Offsets closer than this (rad/s) are the same physical frequency.  Real
#: offsets differ by whole rotator frequencies (multiples of 2*pi rad/s for
#: integer-Hz drives) while float accumulation dust is below 1e-9 rad/s.
OFFSET_TOL = 1e-6


class InvalidStateError(ValueError):
    """A beam state violates an operation's contract (non-finite or wrong spin)."""


@dataclass(frozen=True)
class AmplitudeComponent:
    """One wave-function term: (origin path, spin, frequency offset, coefficient)."""

    history: str
    spin: str
    offset: float  # accumulated angular frequency shift, rad/s
    coeff: complex

    def value_at(self, t: float) -> complex:
        return self.coeff * cmath.exp(-1j * self.offset * t)

    @property
    def key(self) -> tuple[str, str, float]:
        return (self.history, self.spin, self.offset)


@dataclass(frozen=True)
class BeamState:
    """A set of amplitude components occupying one spatial beam or exit port."""

    label: str
    components: tuple[AmplitudeComponent, ...] = ()
    warnings: tuple[str, ...] = ()

    def __iter__(self):
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    @property
    def is_empty(self) -> bool:
        return not self.components


def _check_finite(state: BeamState) -> None:
    for comp in state.components:
        if not (math.isfinite(comp.coeff.real) and math.isfinite(comp.coeff.imag)):
            raise InvalidStateError(
                f"non-finite coefficient {comp.coeff!r} in beam {state.label!r}"
            )


def _merge_warnings(*groups: Sequence[str]) -> tuple[str, ...]:
    seen: list[str] = []
    for group in groups:
        for w in group:
            if w not in seen:
                seen.append(w)
    return tuple(seen)


def _canonical_offsets(components: Sequence[AmplitudeComponent]) -> dict[float, float]:
    """Map each offset to a cluster representative within OFFSET_TOL.

    Accumulating offsets as float sums is not associative, so two routes to
    the same physical frequency can differ in the last bits; clustering
    restores a shared merge key without ever bridging distinct frequencies.
    """
    offsets = sorted({c.offset for c in components})
    mapping: dict[float, float] = {}
    rep = None
    prev = None
    for off in offsets:
        if prev is None or off - prev > OFFSET_TOL:
            rep = off
        mapping[off] = rep
        prev = off
    return mapping


def prune_merge(state: BeamState, tol: float = MERGE_TOL) -> BeamState:
    """Sum components sharing (history, spin, offset) and drop near-zero ones.

    Offsets within OFFSET_TOL count as identical.  The returned component
    list is sorted by its key, which makes state construction
    order-independent and output files bit-reproducible.
    """
    if tol < 0:
        raise ValueError("merge tolerance must be non-negative")
    canon = _canonical_offsets(state.components)
    acc: dict[tuple[str, str, float], complex] = {}
    for comp in state.components:
        key = (comp.history, comp.spin, canon[comp.offset])
        acc[key] = acc.get(key, 0j) + comp.coeff
    kept = tuple(
        AmplitudeComponent(h, s, off, c)
        for (h, s, off), c in sorted(acc.items())
        if abs(c) > tol
    )
    return BeamState(state.label, kept, state.warnings)


def rotate_spin(
    state: BeamState, freq: float, angle: float, mode: str = EXACT
) -> BeamState:
    """Apply a resonance spin rotator driven at ``freq`` (rad/s) with rotation ``angle``.

    Exact mode: each spin-up component (h, up, W, c) maps to
    (h, up, W, c*cos(angle/2)) plus (h, down, W - freq, -1j*c*sin(angle/2));
    spin-down maps to (h, down, W, c*cos(angle/2)) plus
    (h, up, W + freq, -1j*c*sin(angle/2)).  Flipping up->down subtracts the
    drive frequency from the offset, down->up adds it back.

    First-order mode keeps the cos factor at 1 and never flips an already
    marked (spin-down) component a second time; that second flip is
    quadratic in the angle.  Angles at or above pi/2 make that truncation
    untrustworthy, which is flagged in the result's warnings.
    """
    if not -math.pi <= angle <= math.pi:
        raise ValueError(f"rotation angle {angle} outside [-pi, pi]")
    if freq < 0:
        raise ValueError("rotator frequency must be non-negative")
    if mode not in (EXACT, FIRST_ORDER):
        raise ValueError(f"unknown rotation mode {mode!r}")
    _check_finite(state)

    warnings = state.warnings
    if mode == FIRST_ORDER and abs(angle) >= math.pi / 2:
        warnings = _merge_warnings(
            warnings,
            (f"first-order truncation untrustworthy for |angle| >= pi/2 "
             f"(angle={angle:.6g})",),
        )

    cos_half = math.cos(angle / 2.0)
    flip = -1j * math.sin(angle / 2.0)
    out: list[AmplitudeComponent] = []
    for comp in state.components:
        if mode == FIRST_ORDER:
            out.append(comp)
            if comp.spin == UP:
                out.append(
                    AmplitudeComponent(comp.history, DOWN, comp.offset - freq,
                                       flip * comp.coeff)
                )
            continue
        if comp.spin == UP:
            out.append(replace(comp, coeff=cos_half * comp.coeff))
            out.append(
                AmplitudeComponent(comp.history, DOWN, comp.offset - freq,
                                   flip * comp.coeff)
            )
        else:
            out.append(replace(comp, coeff=cos_half * comp.coeff))
            out.append(
                AmplitudeComponent(comp.history, UP, comp.offset + freq,
                                   flip * comp.coeff)
            )
    return prune_merge(BeamState(state.label, tuple(out), warnings))


def apply_phase(state: BeamState, chi: float) -> BeamState:
    """Multiply every coefficient by exp(1j*chi)."""
    if not math.isfinite(chi):
        raise ValueError("phase must be finite")
    factor = cmath.exp(1j * chi)
    comps = tuple(replace(c, coeff=factor * c.coeff) for c in state.components)
    return BeamState(state.label, comps, state.warnings)


def superpose(
    parts: Iterable[tuple[BeamState, complex]], label: str
) -> BeamState:
    """Weighted superposition of beams; history tags are preserved."""
    comps: list[AmplitudeComponent] = []
    warning_groups: list[Sequence[str]] = []
    for part, weight in parts:
        w = complex(weight)
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            raise ValueError("superposition weights must be finite")
        comps.extend(replace(c, coeff=w * c.coeff) for c in part.components)
        warning_groups.append(part.warnings)
    return prune_merge(BeamState(label, tuple(comps), _merge_warnings(*warning_groups)))


def project_up(state: BeamState) -> BeamState:
    """Ideal spin filter: keep only spin-up components, coefficients unchanged."""
    comps = tuple(c for c in state.components if c.spin == UP)
    return BeamState(state.label, comps, state.warnings)


def instantaneous_amplitude(state: BeamState, t: float) -> tuple[complex, complex]:
    """Coherent amplitude per spin at time t, ignoring history tags."""
    if not math.isfinite(t):
        raise ValueError("time must be finite")
    up = 0j
    down = 0j
    for comp in state.components:
        if comp.spin == UP:
            up += comp.value_at(t)
        else:
            down += comp.value_at(t)
    return up, down


def overlap(a: BeamState, b: BeamState) -> complex:
    """Time-averaged inner product <a|b>.

    Cross terms between different frequency offsets average to zero, so only
    pairs sharing (history, spin, offset) contribute conj(c_a) * c_b.
    """
    by_key: dict[tuple[str, str, float], complex] = {}
    for comp in b.components:
        by_key[comp.key] = by_key.get(comp.key, 0j) + comp.coeff
    total = 0j
    for comp in a.components:
        other = by_key.get(comp.key)
        if other is not None:
            total += comp.coeff.conjugate() * other
    return total


def total_weight(state: BeamState) -> float:
    """Sum of |coeff|^2 over all components (norm under orthogonal tags)."""
    return sum(abs(c.coeff) ** 2 for c in state.components)


def mean_flux(state: BeamState) -> float:
    """Time-averaged beam intensity with coherent same-mode interference.

    Components sharing (spin, offset) occupy the same physical mode at a
    port and are summed coherently across history tags; distinct offsets
    beat and average out.
    """
    acc: dict[tuple[str, float], complex] = {}
    for comp in state.components:
        key = (comp.spin, comp.offset)
        acc[key] = acc.get(key, 0j) + comp.coeff
    return sum(abs(c) ** 2 for c in acc.values())
