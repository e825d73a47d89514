"""Test ensembles, the reduced Gram state, the loss/noise device model, and
measurement records.

A benchmark run prepares d nonorthogonal test states with uniform weight 1/d,
passes them through the device under test, and homodynes each conditional
output.  Everything downstream consumes one MeasurementRecord per test state
plus the ensemble Gram matrix; the channel model here is only a convenience
for producing records in simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import Coherent, SqueezedVacuum, TestStateSpec, overlap

UNCERTAINTY_TOL = 1e-9
ENERGY_TOL = 1e-9

RECORDS_HEADER = "qbench-records v1"


class InvariantViolation(Exception):
    """Input data breaks a physical invariant (named in the message)."""


class NegativeEnergy(InvariantViolation):
    """Record implies a mean photon number below zero beyond tolerance."""


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class TestEnsemble:
    """Ordered test states; the uniform prior 1/d is implicit."""

    states: tuple[TestStateSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if self.d < 2:
            raise ValueError("an ensemble needs at least two test states")

    @property
    def d(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class ReducedStateA:
    """Sender-side reduced state: gram[m, n] = <psi_m|psi_n> / d."""

    gram: np.ndarray

    def __post_init__(self):
        g = self.gram
        d = g.shape[0]
        if g.shape != (d, d) or d < 2:
            raise ValueError("gram must be a square matrix of size >= 2")
        if not np.allclose(g, g.conj().T, atol=1e-12):
            raise InvariantViolation("gram matrix is not Hermitian")
        if abs(np.trace(g).real - 1.0) > 1e-12:
            raise InvariantViolation("gram matrix trace is not 1")
        if np.linalg.eigvalsh(g).min() < -1e-12:
            raise InvariantViolation("gram matrix is not positive semidefinite")

    @property
    def d(self) -> int:
        return self.gram.shape[0]


@dataclass(frozen=True)
class MeasurementRecord:
    """First and second homodyne moments of one conditional state.

    Shot-noise units with vacuum variance 1/2.
    """

    mean_x: float
    mean_p: float
    var_x: float
    var_p: float

    def __post_init__(self):
        if not (self.var_x > 0 and self.var_p > 0):
            raise InvariantViolation(
                f"variances must be positive, got ({self.var_x}, {self.var_p})"
            )
        if self.var_x * self.var_p < 0.25 - UNCERTAINTY_TOL:
            raise InvariantViolation(
                "uncertainty relation violated: "
                f"var_x*var_p = {self.var_x * self.var_p} < 1/4"
            )


@dataclass(frozen=True)
class DerivedMoments:
    """Moments the conic program consumes, derived from one record."""

    nbar: float
    a_mean: complex
    d_mean: float

    def __post_init__(self):
        if not math.isfinite(self.nbar) or self.nbar < 0:
            raise InvariantViolation(f"mean photon number {self.nbar} invalid")


@dataclass(frozen=True)
class ChannelModel:
    """Symmetric loss/excess-noise device model.

    Quadrature means scale by sqrt(T); both variances gain V_ex.
    """

    T: float
    V_ex: float = 0.0

    def __post_init__(self):
        if not (0 < self.T <= 1):
            raise ValueError(f"transmissivity must be in (0, 1], got {self.T}")
        if self.V_ex < 0:
            raise ValueError(f"excess noise must be nonnegative, got {self.V_ex}")


def build_rho_A(ensemble: TestEnsemble) -> ReducedStateA:
    """Gram matrix of the ensemble with the uniform 1/d weight."""
    d = ensemble.d
    g = np.array(
        [[overlap(sm, sn) for sn in ensemble.states] for sm in ensemble.states],
        dtype=complex,
    )
    return ReducedStateA(g / d)


def input_moments(spec: TestStateSpec) -> MeasurementRecord:
    """Analytic quadrature moments of a pure test state before the device."""
    if isinstance(spec, Coherent):
        a = complex(spec.alpha)
        return MeasurementRecord(
            mean_x=math.sqrt(2) * a.real,
            mean_p=math.sqrt(2) * a.imag,
            var_x=0.5,
            var_p=0.5,
        )
    if isinstance(spec, SqueezedVacuum):
        short = math.exp(-2 * spec.r) / 2
        long = math.exp(2 * spec.r) / 2
        if spec.sign == +1:
            return MeasurementRecord(0.0, 0.0, short, long)
        return MeasurementRecord(0.0, 0.0, long, short)
    raise TypeError(f"unknown test-state spec {spec!r}")


def apply_channel(record: MeasurementRecord, channel: ChannelModel) -> MeasurementRecord:
    """Push one record through the loss/noise model."""
    s = math.sqrt(channel.T)
    return MeasurementRecord(
        mean_x=s * record.mean_x,
        mean_p=s * record.mean_p,
        var_x=record.var_x + channel.V_ex,
        var_p=record.var_p + channel.V_ex,
    )


def simulate_channel(
    ensemble: TestEnsemble, channel: ChannelModel
) -> list[MeasurementRecord]:
    """Records that an ideal homodyne run would produce behind the model device."""
    return [apply_channel(input_moments(s), channel) for s in ensemble.states]


def derive_moments(record: MeasurementRecord) -> DerivedMoments:
    """Mean photon number, ladder mean, and squared-quadrature difference.

    nbar = (<x^2> + <p^2> - 1)/2, a_mean = (<x> + i<p>)/sqrt(2),
    d_mean = <x^2> - <p^2>.
    """
    x2 = record.var_x + record.mean_x**2
    p2 = record.var_p + record.mean_p**2
    nbar = (x2 + p2 - 1.0) / 2.0
    if nbar < -ENERGY_TOL:
        raise NegativeEnergy(f"record implies mean photon number {nbar} < 0")
    nbar = max(nbar, 0.0)
    a_mean = (record.mean_x + 1j * record.mean_p) / math.sqrt(2)
    return DerivedMoments(nbar=nbar, a_mean=a_mean, d_mean=x2 - p2)


# ---------------------------------------------------------------------------
# measurement-data files
#
# UTF-8, line oriented.  First non-comment line must be the header
# "qbench-records v1".  Then one line per test state:
#
#   state coherent <re> <im> | record <mean_x> <mean_p> <var_x> <var_p>
#   state squeezed <r> <sign> | record <mean_x> <mean_p> <var_x> <var_p>
#
# '#' starts a comment; blank lines are ignored.
# ---------------------------------------------------------------------------


def _spec_to_tokens(spec: TestStateSpec) -> list[str]:
    if isinstance(spec, Coherent):
        a = complex(spec.alpha)
        return ["coherent", repr(a.real), repr(a.imag)]
    if isinstance(spec, SqueezedVacuum):
        return ["squeezed", repr(spec.r), f"{spec.sign:+d}"]
    raise TypeError(f"unknown test-state spec {spec!r}")


def write_records(path, ensemble: TestEnsemble, records: list[MeasurementRecord]) -> None:
    """Writer for the measurement-data format (round-trip partner of ingest)."""
    if len(records) != ensemble.d:
        raise ValueError("one record per test state required")
    lines = [RECORDS_HEADER]
    for spec, rec in zip(ensemble.states, records):
        state_part = " ".join(_spec_to_tokens(spec))
        record_part = " ".join(
            repr(v) for v in (rec.mean_x, rec.mean_p, rec.var_x, rec.var_p)
        )
        lines.append(f"state {state_part} | record {record_part}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_float(token: str, lineno: int, col: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"expected a number, got {token!r}", lineno, col) from None


def _parse_state_line(body: str, lineno: int) -> tuple[TestStateSpec, MeasurementRecord]:
    if "|" not in body:
        raise ParseError("missing '| record ...' part", lineno, len(body))
    state_part, _, record_part = body.partition("|")
    stoks = state_part.split()
    rtoks = record_part.split()
    if len(stoks) < 2 or stoks[0] != "state":
        raise ParseError("expected 'state <family> <params...>'", lineno, 0)
    family = stoks[1]
    col = body.index("|")
    if family == "coherent":
        if len(stoks) != 4:
            raise ParseError("coherent state takes 2 parameters (re, im)", lineno, 0)
        spec: TestStateSpec = Coherent(
            complex(_parse_float(stoks[2], lineno, 0), _parse_float(stoks[3], lineno, 0))
        )
    elif family == "squeezed":
        if len(stoks) != 4:
            raise ParseError("squeezed state takes 2 parameters (r, sign)", lineno, 0)
        r = _parse_float(stoks[2], lineno, 0)
        sign = int(_parse_float(stoks[3], lineno, 0))
        try:
            spec = SqueezedVacuum(r, sign)
        except ValueError as exc:
            raise ParseError(str(exc), lineno, 0) from None
    else:
        raise ParseError(
            f"unknown state family {family!r} (expected coherent or squeezed)", lineno, 0
        )
    if len(rtoks) != 5 or rtoks[0] != "record":
        raise ParseError(
            "expected 'record <mean_x> <mean_p> <var_x> <var_p>'", lineno, col
        )
    vals = [_parse_float(t, lineno, col) for t in rtoks[1:]]
    return spec, MeasurementRecord(*vals)


def ingest_records(path) -> tuple[TestEnsemble, list[MeasurementRecord]]:
    """Parse a measurement-data file and validate every invariant.

    Raises ParseError on malformed syntax and InvariantViolation on
    physically impossible records (negative variance, uncertainty breach).
    """
    with open(path, encoding="utf-8") as fh:
        raw = fh.readlines()
    lines = []
    for i, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            lines.append((i, body))
    if not lines:
        raise ParseError("empty file", 1)
    first_no, first = lines[0]
    if first != RECORDS_HEADER:
        raise ParseError(f"expected header {RECORDS_HEADER!r}", first_no)
    specs: list[TestStateSpec] = []
    records: list[MeasurementRecord] = []
    for lineno, body in lines[1:]:
        spec, rec = _parse_state_line(body, lineno)
        specs.append(spec)
        records.append(rec)
    if len(specs) < 2:
        raise ParseError("need at least two test states", lines[-1][0])
    return TestEnsemble(tuple(specs)), records
