"""Truncated Fock-basis operators, test-state amplitude vectors, and overlaps.

Conventions: hbar = 1, vacuum quadrature variance 1/2, so
x = (a^dag + a)/sqrt(2) and p = i(a^dag - a)/sqrt(2).  All matrices act on
the span of the number states |0>..|N> and are plain complex numpy arrays
wrapped in a thin container.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

NORM_TOL = 1e-12


class CutoffInsufficient(Exception):
    """Raised when no affordable cutoff reaches the requested tail tolerance."""


@dataclass(frozen=True)
class TruncatedOperator:
    """A single-mode operator projected onto the number states |0>..|N>."""

    dim: int
    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"operator dimension must be >= 1, got {self.dim}")
        if self.entries.shape != (self.dim, self.dim):
            raise ValueError("entries shape does not match dim")
        if self.hermitian and not np.array_equal(self.entries, self.entries.conj().T):
            raise ValueError("operator tagged hermitian is not exactly self-adjoint")


@dataclass(frozen=True)
class FockVector:
    """Number-basis amplitudes of a pure state truncated at level dim-1."""

    dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.dim < 1 or self.amplitudes.shape != (self.dim,):
            raise ValueError("amplitude vector shape does not match dim")
        if self.norm_sq() > 1.0 + NORM_TOL:
            raise ValueError(f"truncated state norm^2 = {self.norm_sq()} exceeds 1")

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True)
class Coherent:
    """Coherent test state |alpha>."""

    alpha: complex


@dataclass(frozen=True)
class SqueezedVacuum:
    """Squeezed vacuum with magnitude r >= 0.

    sign=+1 squeezes x (Var(x) = e^{-2r}/2), sign=-1 squeezes p.
    The global phase is fixed so the vacuum amplitude is positive.
    """

    r: float
    sign: int = +1

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("squeezing magnitude must be nonnegative")
        if self.sign not in (+1, -1):
            raise ValueError("squeezing sign must be +1 or -1")


TestStateSpec = Coherent | SqueezedVacuum


def annihilation_matrix(N: int) -> TruncatedOperator:
    """Annihilation operator truncated at Fock level N: entry (k, k+1) = sqrt(k+1)."""
    if N < 0:
        raise ValueError("cutoff must be nonnegative")
    a = np.diag(np.sqrt(np.arange(1, N + 1, dtype=float)), k=1).astype(complex)
    return TruncatedOperator(N + 1, a)


def quadrature_matrices(
    N: int,
) -> tuple[TruncatedOperator, TruncatedOperator, TruncatedOperator, TruncatedOperator]:
    """Truncated x, p, number, and squared-quadrature-difference operators.

    The last one is d = x^2 - p^2 = a^dag^2 + a^2, whose only nonzero entries
    sit on the second off-diagonals: (k, k+2) = (k+2, k) = sqrt((k+1)(k+2)).
    """
    a = annihilation_matrix(N).entries
    ad = a.conj().T
    # identical float products land on both triangles, so these are exactly Hermitian
    x = (ad + a) / math.sqrt(2)
    p = 1j * (ad - a) / math.sqrt(2)
    n = np.diag(np.arange(N + 1, dtype=float)).astype(complex)
    diff = ad @ ad + a @ a
    return (
        TruncatedOperator(N + 1, x, hermitian=True),
        TruncatedOperator(N + 1, p, hermitian=True),
        TruncatedOperator(N + 1, n, hermitian=True),
        TruncatedOperator(N + 1, diff, hermitian=True),
    )


def coherent_fock_vector(alpha: complex, N: int) -> FockVector:
    """Number-basis amplitudes of |alpha> up to level N.

    amplitude[n] = exp(-|alpha|^2/2) alpha^n / sqrt(n!), evaluated in the log
    domain so large n does not overflow.
    """
    if N < 0:
        raise ValueError("cutoff must be nonnegative")
    alpha = complex(alpha)
    n = np.arange(N + 1)
    if alpha == 0:
        amps = np.zeros(N + 1, dtype=complex)
        amps[0] = 1.0
        return FockVector(N + 1, amps)
    log_mod = -abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    phase = np.exp(1j * n * np.angle(alpha))
    return FockVector(N + 1, np.exp(log_mod) * phase)


def squeezed_vacuum_fock_vector(r: float, sign: int, N: int) -> FockVector:
    """Number-basis amplitudes of a squeezed vacuum up to level N.

    Only even levels are populated:
    amplitude[2m] = (-sign tanh r)^m sqrt((2m)!) / (2^m m! sqrt(cosh r)).
    Computed by the two-step recurrence to stay stable at large N.
    """
    if N < 0:
        raise ValueError("cutoff must be nonnegative")
    spec = SqueezedVacuum(r, sign)  # validates r, sign
    amps = np.zeros(N + 1, dtype=complex)
    amps[0] = 1.0 / math.sqrt(math.cosh(spec.r))
    ratio = -spec.sign * math.tanh(spec.r)
    for m in range(1, N // 2 + 1):
        # c_{2m} / c_{2m-2} = -sign tanh(r) sqrt((2m-1)(2m)) / (2m)
        amps[2 * m] = amps[2 * m - 2] * ratio * math.sqrt((2 * m - 1) * (2 * m)) / (2 * m)
    return FockVector(N + 1, amps)


def fock_vector(spec: TestStateSpec, N: int) -> FockVector:
    """Truncated amplitude vector for either test-state family."""
    if isinstance(spec, Coherent):
        return coherent_fock_vector(spec.alpha, N)
    if isinstance(spec, SqueezedVacuum):
        return squeezed_vacuum_fock_vector(spec.r, spec.sign, N)
    raise TypeError(f"unknown test-state spec {spec!r}")


def _overlap_numeric(a: TestStateSpec, b: TestStateSpec, tol: float = 1e-12,
                     max_cutoff: int = 2048) -> complex:
    """Truncated dot product with the cutoff grown until the Cauchy-Schwarz
    bound on the dropped tail, sqrt((1-|a_N|^2)(1-|b_N|^2)), falls below tol."""
    N = 32
    while N <= max_cutoff:
        va = fock_vector(a, N).amplitudes
        vb = fock_vector(b, N).amplitudes
        tail_a = max(0.0, 1.0 - float(np.vdot(va, va).real))
        tail_b = max(0.0, 1.0 - float(np.vdot(vb, vb).real))
        if math.sqrt(tail_a * tail_b) < tol:
            return complex(np.vdot(va, vb))
        N *= 2
    raise CutoffInsufficient(
        f"tail bound not below {tol} at cutoff {max_cutoff} for {a!r}, {b!r}"
    )


def overlap(psi_m: TestStateSpec, psi_n: TestStateSpec) -> complex:
    """Inner product <psi_m|psi_n>, analytic where a closed form exists.

    Coherent pair: exp(-|a|^2/2 - |b|^2/2 + conj(a) b).
    Squeezed pair (real squeezing axes z = sign*r): 1/sqrt(cosh(z_m - z_n)).
    Mixed families fall back to a truncated dot product whose tail bound is
    pushed below 1e-12.
    """
    if isinstance(psi_m, Coherent) and isinstance(psi_n, Coherent):
        a, b = complex(psi_m.alpha), complex(psi_n.alpha)
        return complex(np.exp(-abs(a) ** 2 / 2 - abs(b) ** 2 / 2 + np.conj(a) * b))
    if isinstance(psi_m, SqueezedVacuum) and isinstance(psi_n, SqueezedVacuum):
        zm = psi_m.sign * psi_m.r
        zn = psi_n.sign * psi_n.r
        return complex(1.0 / math.sqrt(math.cosh(zm - zn)))
    return _overlap_numeric(psi_m, psi_n)
