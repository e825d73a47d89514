"""Rigorous truncation-error constraints as linear-matrix-inequality fragments.

Each emitted constraint is sound: the truncation tau_N = P tau P of any state
tau whose exact moments appear on the data side satisfies it.  Builders accept
either a numpy array block (constraints evaluate to numbers, used by the
soundness tests) or a cvxpy expression block (constraints stay symbolic and
are assembled into the conic model).

Data-side convention: moments are per conditional state (trace-1), and every
builder scales them by trace_total, the weight of one block in the global
state (1/d for a uniform d-state ensemble).  The block variable is compared
against tau = trace_total * rho_B throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .fock import annihilation_matrix, quadrature_matrices


class CutoffTooSmall(Exception):
    """The requested constraint needs more Fock levels than the block has."""


class DimensionMismatch(Exception):
    pass


def _is_expr(z) -> bool:
    return isinstance(z, cp.expressions.expression.Expression)


def _real(z):
    # real expressions pass through: the real atom only canonicalizes
    # inside a problem that carries complex leaves
    if _is_expr(z):
        return cp.real(z) if z.is_complex() else z
    return complex(z).real


def _conj(z):
    if _is_expr(z):
        return cp.conj(z) if z.is_complex() else z
    return complex(z).conjugate()


def _tr(M):
    return cp.trace(M) if _is_expr(M) else complex(np.trace(M))


def _op_tr(op: np.ndarray, M):
    # Tr(op @ M) with op a constant matrix
    return cp.trace(op @ M) if _is_expr(M) else complex(np.trace(op @ M))


@dataclass(frozen=True)
class LmiFragment:
    """Hermitian matrix of scalar affine expressions, required PSD.

    size is 2 for the moment bounds and d for the reduced-state bound.
    Entries are numbers on the numeric path and cvxpy scalars on the
    symbolic path; entry (j, k) is always the conjugate of entry (k, j).
    """

    size: int
    entries: tuple
    label: str = ""

    def __post_init__(self):
        if len(self.entries) != self.size or any(
            len(row) != self.size for row in self.entries
        ):
            raise ValueError("entries grid does not match size")

    def is_symbolic(self) -> bool:
        return any(_is_expr(e) for row in self.entries for e in row)

    def as_array(self) -> np.ndarray:
        """Numeric value; only valid on the numeric path."""
        if self.is_symbolic():
            raise ValueError("fragment holds symbolic entries")
        return np.array(self.entries, dtype=complex)


@dataclass(frozen=True)
class ConstraintSet:
    """Affine constraints in three flavors: scalars required >= 0, scalars
    required == 0, and LmiFragments required PSD."""

    nonneg: tuple = ()
    zero: tuple = ()
    fragments: tuple = ()


class TruncatedBlockHandles:
    """Affine scalar functionals of one (N+1)-dimensional block of sigma_N.

    The ladder, number, and squared-quadrature-difference matrices carry no
    imaginary entries, so they are applied with real dtype; a real block then
    yields real-typed handles and the builders emit purely real rows.  On a
    complex block the builders wrap the handles in an explicit real part.
    Post-solve, nbar_N >= nbar_m1 >= nbar_m2 must hold on any PSD block.
    """

    def __init__(self, N: int, block):
        if N < 1:
            raise CutoffTooSmall(f"cutoff must be >= 1, got {N}")
        if tuple(block.shape) != (N + 1, N + 1):
            raise DimensionMismatch(
                f"block shape {block.shape} does not match cutoff {N}"
            )
        self.N = N
        self.block = block
        a = annihilation_matrix(N).entries
        _, _, nmat, dmat = (t.entries for t in quadrature_matrices(N))
        a, nmat, dmat = (
            M.real if np.all(M.imag == 0) else M for M in (a, nmat, dmat)
        )
        self.tr_full = _tr(block)
        self.tr_m1 = _tr(block[:N, :N])
        self.nbar_N = _op_tr(nmat, block)
        self.nbar_m1 = _op_tr(nmat[:N, :N], block[:N, :N])
        self.a_N = _op_tr(a, block)
        self.d_N = _op_tr(dmat, block)
        if N >= 2:
            self.tr_m2 = _tr(block[: N - 1, : N - 1])
            self.nbar_m2 = _op_tr(nmat[: N - 1, : N - 1], block[: N - 1, : N - 1])
        else:
            self.tr_m2 = None
            self.nbar_m2 = None


def _check_data(nbar: float, trace_total: float) -> None:
    if nbar < 0:
        raise ValueError(f"mean photon number must be nonnegative, got {nbar}")
    if not (0 < trace_total <= 1):
        raise ValueError(f"trace_total must be in (0, 1], got {trace_total}")


def cutoff_lemma_constraint(
    block: TruncatedBlockHandles, nbar: float, trace_total: float, N: int
) -> ConstraintSet:
    """Trace-deficit bound: trace_total - Tr(sigma_N) <= (nbar_tau - nbar_N)/(N+1).

    nbar_tau = nbar * trace_total is the energy of the weighted block.  Also
    emits 0 <= nbar_N <= nbar_tau and Tr(sigma_N) <= trace_total.  With
    nbar = 0 the bound collapses, so the trace and energy are pinned exactly.
    """
    _check_data(nbar, trace_total)
    if N != block.N:
        raise DimensionMismatch(f"handles built for N={block.N}, got N={N}")
    tr = _real(block.tr_full)
    nN = _real(block.nbar_N)
    if nbar == 0:
        return ConstraintSet(zero=(trace_total - tr, nN))
    nb = nbar * trace_total
    return ConstraintSet(
        nonneg=(
            (nb - nN) / (N + 1) - (trace_total - tr),
            nN,
            nb - nN,
            trace_total - tr,
        )
    )


def first_order_lmi(
    block: TruncatedBlockHandles, a_mean: complex, nbar: float, trace_total: float
) -> ConstraintSet:
    """Ladder-moment bound |Tr(tau a) - Tr(sigma_N a_N)| <= eps in PSD form.

    eps^2 = (nbar_tau - nbar_N)(Tr tau - Tr sigma_{N-1}); the 2x2 fragment
    [[nbar_tau - nbar_N, z], [conj(z), Tr tau - Tr sigma_{N-1}]] >= 0 with
    z = a_mean*trace_total - Tr(sigma_N a_N) is its exact recasting.
    """
    _check_data(nbar, trace_total)
    z = a_mean * trace_total - block.a_N
    if nbar == 0:
        return ConstraintSet(zero=(z,))
    e11 = nbar * trace_total - _real(block.nbar_N)
    e22 = trace_total - _real(block.tr_m1)
    frag = LmiFragment(
        2, ((e11, z), (_conj(z), e22)), label="first-order moment bound"
    )
    return ConstraintSet(fragments=(frag,))


def second_order_lmi(
    block: TruncatedBlockHandles, d_mean: float, nbar: float, trace_total: float
) -> ConstraintSet:
    """Squared-quadrature-difference bound |Tr(tau d) - Tr(sigma_N d_N)| <= delta.

    delta^2 = 4 (nbar_tau - nbar_N) [(nbar_tau - nbar_{N-2}) + (Tr tau -
    Tr sigma_{N-2})], recast as the PSD fragment [[4(nbar_tau - nbar_N), w],
    [w, (nbar_tau - nbar_{N-2}) + (Tr tau - Tr sigma_{N-2})]] with real
    w = d_mean*trace_total - Tr(sigma_N d_N).  Needs N >= 2.
    """
    _check_data(nbar, trace_total)
    if block.N < 2:
        raise CutoffTooSmall("second-order bound needs cutoff N >= 2")
    w = d_mean * trace_total - _real(block.d_N)
    if nbar == 0:
        return ConstraintSet(zero=(w,))
    nb = nbar * trace_total
    e11 = 4 * (nb - _real(block.nbar_N))
    e22 = (nb - _real(block.nbar_m2)) + (trace_total - _real(block.tr_m2))
    frag = LmiFragment(2, ((e11, w), (w, e22)), label="second-order moment bound")
    return ConstraintSet(fragments=(frag,))


def rho_A_block_lmi(blocks, rho_A) -> ConstraintSet:
    """Reduced-state deficit fragment: entry (i,j) = rho_A(i,j) - Tr(block(j,i)).

    blocks is a d x d grid of TruncatedBlockHandles covering every (i, j)
    block of sigma_N.  The grid of deficits (the transpose of rho_A minus
    the traced-out candidate, which is PSD iff the deficit itself is) must
    be PSD; for d = 2 its determinant is the off-diagonal bound
    |deficit_01|^2 <= deficit_00 * deficit_11.
    """
    d = rho_A.d
    if len(blocks) != d or any(len(row) != d for row in blocks):
        raise DimensionMismatch(
            f"need a {d}x{d} grid of block handles to match the reduced state"
        )
    entries = tuple(
        tuple(rho_A.gram[i, j] - blocks[j][i].tr_full for j in range(d))
        for i in range(d)
    )
    return ConstraintSet(
        fragments=(LmiFragment(d, entries, label="reduced-state deficit"),)
    )
