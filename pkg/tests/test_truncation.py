"""Truncation-constraint tests: lemma saturation, LMI forms, soundness."""

import math

import numpy as np
import pytest

from qbench.ensemble import ReducedStateA
from qbench.fock import Coherent, SqueezedVacuum, fock_vector, quadrature_matrices
from qbench.truncation import (
    ConstraintSet,
    CutoffTooSmall,
    DimensionMismatch,
    LmiFragment,
    TruncatedBlockHandles,
    cutoff_lemma_constraint,
    first_order_lmi,
    rho_A_block_lmi,
    second_order_lmi,
)

from oracles import saturating_state, thermal_tail_ref

REF_CUTOFF = 60


def worst_violation(cs: ConstraintSet) -> float:
    """Most negative slack across all constraint flavors; 0 when all hold."""
    worst = 0.0
    for e in cs.nonneg:
        worst = min(worst, float(np.real(e)))
    for e in cs.zero:
        worst = min(worst, -abs(complex(e)))
    for frag in cs.fragments:
        worst = min(worst, float(np.linalg.eigvalsh(frag.as_array()).min()))
    return worst


def thermal_matrix(nbar: float, dim: int) -> np.ndarray:
    k = np.arange(dim)
    p = (1 / (1 + nbar)) * (nbar / (1 + nbar)) ** k
    return np.diag(p)


def handles_for(state: np.ndarray, N: int) -> TruncatedBlockHandles:
    return TruncatedBlockHandles(N, state[: N + 1, : N + 1])


def exact_moments(state: np.ndarray):
    """nbar, a_mean, d_mean of a reference-cutoff density matrix."""
    dim = state.shape[0]
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)
    n = np.diag(np.arange(dim, dtype=float))
    d = a @ a + a.T @ a.T
    return (
        float(np.trace(n @ state).real),
        complex(np.trace(a @ state)),
        float(np.trace(d @ state).real),
    )


# --- Fock cutoff lemma ------------------------------------------------------


@pytest.mark.parametrize("nbar,N", [(0.5, 3), (1.0, 4), (2.0, 9)])
def test_lemma_saturation_is_exact(nbar, N):
    # the two-level state with weight nbar/(N+1) parked just above the
    # cutoff loses exactly the allowed trace
    state = saturating_state(nbar, N, REF_CUTOFF)
    h = handles_for(state, N)
    deficit = 1.0 - float(np.real(h.tr_full))
    allowance = (nbar - float(np.real(h.nbar_N))) / (N + 1)
    assert deficit == pytest.approx(allowance, abs=1e-12)
    assert worst_violation(cutoff_lemma_constraint(h, nbar, 1.0, N)) >= -1e-12


def test_lemma_thermal_strictly_inside():
    nbar, N = 0.5, 10
    state = thermal_matrix(nbar, 400)
    h = handles_for(state, N)
    deficit = 1.0 - float(np.real(h.tr_full))
    assert deficit == pytest.approx(thermal_tail_ref(nbar, N), rel=1e-10)
    assert deficit < nbar / (N + 1) / 10  # far from the bound
    assert worst_violation(cutoff_lemma_constraint(h, nbar, 1.0, N)) >= -1e-12


def test_lemma_vacuum_pins_trace_exactly():
    state = np.zeros((10, 10))
    state[0, 0] = 1.0
    h = handles_for(state, 4)
    cs = cutoff_lemma_constraint(h, 0.0, 1.0, 4)
    assert len(cs.zero) == 2
    assert worst_violation(cs) >= -1e-15


def test_lemma_rejects_mismatched_cutoff():
    h = handles_for(thermal_matrix(0.5, 30), 4)
    with pytest.raises(DimensionMismatch):
        cutoff_lemma_constraint(h, 0.5, 1.0, 5)


def test_data_validation():
    h = handles_for(thermal_matrix(0.5, 30), 4)
    with pytest.raises(ValueError):
        cutoff_lemma_constraint(h, -0.1, 1.0, 4)
    with pytest.raises(ValueError):
        cutoff_lemma_constraint(h, 0.5, 0.0, 4)
    with pytest.raises(ValueError):
        cutoff_lemma_constraint(h, 0.5, 1.5, 4)


# --- handles ----------------------------------------------------------------


def test_handles_reject_small_or_mismatched_blocks():
    with pytest.raises(CutoffTooSmall):
        TruncatedBlockHandles(0, np.eye(1))
    with pytest.raises(DimensionMismatch):
        TruncatedBlockHandles(3, np.eye(3))


def test_handles_energy_levels_ordered_on_psd_blocks():
    rng = np.random.default_rng(7)
    for _ in range(50):
        M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        block = M @ M.conj().T
        h = TruncatedBlockHandles(5, block)
        n_full = float(np.real(h.nbar_N))
        n_m1 = float(np.real(h.nbar_m1))
        n_m2 = float(np.real(h.nbar_m2))
        assert n_full >= n_m1 - 1e-12
        assert n_m1 >= n_m2 - 1e-12


# --- first- and second-order fragments --------------------------------------


def test_first_order_sound_on_truncated_coherent():
    alpha, N = 0.6, 12
    v = fock_vector(Coherent(alpha), REF_CUTOFF).amplitudes
    state = np.outer(v, v.conj())
    h = handles_for(state, N)
    cs = first_order_lmi(h, alpha, abs(alpha) ** 2, 1.0)
    assert worst_violation(cs) >= -1e-12


def test_second_order_sound_on_truncated_squeezed():
    r, N = 0.35, 12
    v = fock_vector(SqueezedVacuum(r, +1), REF_CUTOFF).amplitudes
    state = np.outer(v, v.conj())
    h = handles_for(state, N)
    nbar = math.sinh(r) ** 2
    d_mean = -math.sinh(2 * r)  # <x^2> - <p^2> = e^{-2r}/2 - e^{2r}/2
    # scalar form: the truncated difference stays inside delta
    nb_N = float(np.real(h.nbar_N))
    nb_m2 = float(np.real(h.nbar_m2))
    tr_m2 = float(np.real(h.tr_m2))
    delta = 2 * math.sqrt((nbar - nb_N) * ((nbar - nb_m2) + (1.0 - tr_m2)))
    assert abs(d_mean - float(np.real(h.d_N))) <= delta + 1e-12
    assert worst_violation(second_order_lmi(h, d_mean, nbar, 1.0)) >= -1e-12


def test_first_order_vacuum_pins_ladder_moment():
    state = np.zeros((10, 10))
    state[0, 0] = 1.0
    h = handles_for(state, 4)
    cs = first_order_lmi(h, 0.0, 0.0, 1.0)
    assert len(cs.zero) == 1
    assert abs(complex(cs.zero[0])) <= 1e-15


def test_second_order_vacuum_pins_difference_moment():
    state = np.zeros((10, 10))
    state[0, 0] = 1.0
    h = handles_for(state, 4)
    cs = second_order_lmi(h, 0.0, 0.0, 1.0)
    assert len(cs.zero) == 1
    assert abs(complex(cs.zero[0])) <= 1e-15


def test_second_order_needs_three_levels():
    h = handles_for(thermal_matrix(0.3, 30), 1)
    with pytest.raises(CutoffTooSmall):
        second_order_lmi(h, 0.0, 0.3, 1.0)


def test_worst_case_eps_bound():
    # eps <= nbar/sqrt(N): with nbar = 1, N = 16 the envelope is 0.25
    nbar, N = 1.0, 16
    state = thermal_matrix(nbar, 400)
    h = handles_for(state, N)
    eps = math.sqrt(
        (nbar - float(np.real(h.nbar_N))) * (1.0 - float(np.real(h.tr_m1)))
    )
    assert eps <= nbar / math.sqrt(N)
    assert nbar / math.sqrt(N) == pytest.approx(0.25)


@pytest.mark.parametrize("order", ["first", "second"])
def test_lmi_agrees_with_determinant_form(order):
    # PSD status of each 2x2 fragment must match the scalar test
    # {both diagonals >= 0 and det >= 0} on random affine assignments
    rng = np.random.default_rng(11)
    N = 6
    disagreements = 0
    for _ in range(1000):
        M = rng.normal(size=(N + 1, N + 1)) + 1j * rng.normal(size=(N + 1, N + 1))
        block = (M + M.conj().T) / 2  # Hermitian but not PSD: affine probe
        h = TruncatedBlockHandles(N, block)
        nbar = float(rng.uniform(0.0, 2.0))
        if order == "first":
            cs = first_order_lmi(h, complex(rng.normal(), rng.normal()), nbar, 1.0)
        else:
            cs = second_order_lmi(h, float(rng.normal()), nbar, 1.0)
        if not cs.fragments:
            continue
        F = cs.fragments[0].as_array()
        assert np.allclose(F, F.conj().T, atol=1e-12)
        psd = float(np.linalg.eigvalsh(F).min()) >= 0.0
        a, b = float(F[0, 0].real), float(F[1, 1].real)
        det = a * b - abs(F[0, 1]) ** 2
        scalar = a >= 0.0 and b >= 0.0 and det >= 0.0
        disagreements += psd != scalar
    assert disagreements == 0


# --- reduced-state deficit fragment -----------------------------------------


def grid_with_traces(traces: np.ndarray, N: int = 2):
    """Handles grid whose (i, j) block holds the requested full trace."""
    d = traces.shape[0]
    grid = []
    for i in range(d):
        row = []
        for j in range(d):
            block = np.zeros((N + 1, N + 1), dtype=complex)
            block[0, 0] = traces[i, j]
            row.append(TruncatedBlockHandles(N, block))
        grid.append(row)
    return grid


def test_rho_A_zero_deficit_is_tight():
    gram = np.array([[0.5, 0.3], [0.3, 0.5]])
    rho = ReducedStateA(gram=gram)
    grid = grid_with_traces(gram.T)  # block (j, i) carries gram[i, j]
    frag = rho_A_block_lmi(grid, rho).fragments[0]
    assert np.allclose(frag.as_array(), 0.0, atol=1e-15)


def test_rho_A_determinant_arithmetic():
    gram = np.array([[0.5, 0.3], [0.3, 0.5]])
    rho = ReducedStateA(gram=gram)
    # diagonal deficits 0.01 and 0.04 allow off-diagonal deficit up to 0.02
    for off, ok in ((0.019, True), (0.021, False)):
        traces = gram.T - np.array([[0.01, off], [off, 0.04]])
        frag = rho_A_block_lmi(grid_with_traces(traces), rho).fragments[0]
        assert (np.linalg.eigvalsh(frag.as_array()).min() >= 0) == ok


def test_rho_A_three_state_check_beats_pairwise_minors():
    # a deficit pattern whose 2x2 minors all pass but whose 3x3
    # determinant is negative: only the full fragment catches it
    gram = np.eye(3) / 3
    rho = ReducedStateA(gram=gram)
    M = np.full((3, 3), -0.6)
    np.fill_diagonal(M, 1.0)
    deficits = 0.05 * M
    traces = (gram - deficits).T
    frag = rho_A_block_lmi(grid_with_traces(traces), rho).fragments[0].as_array()
    for i in range(3):
        for j in range(i + 1, 3):
            sub = frag[np.ix_([i, j], [i, j])]
            assert np.linalg.eigvalsh(sub).min() >= -1e-15
    assert np.linalg.eigvalsh(frag).min() < -1e-3


def test_rho_A_rejects_wrong_grid_shape():
    rho = ReducedStateA(gram=np.eye(2) / 2)
    with pytest.raises(DimensionMismatch):
        rho_A_block_lmi(grid_with_traces(np.eye(3) / 3), rho)


# --- fragment container -----------------------------------------------------


def test_fragment_shape_validation():
    with pytest.raises(ValueError):
        LmiFragment(2, ((1.0, 0.0),))


def test_fragment_symbolic_guard():
    import cvxpy as cp

    v = cp.Variable((3, 3), symmetric=True)
    h = TruncatedBlockHandles(2, v)
    cs = first_order_lmi(h, 0.1, 0.5, 1.0)
    frag = cs.fragments[0]
    assert frag.is_symbolic()
    with pytest.raises(ValueError):
        frag.as_array()
