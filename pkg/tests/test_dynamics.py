"""Core propagation: paired evolutions, propagators, series oracle, expm."""

import numpy as np
import pytest
import scipy.linalg

from nhpassage import (
    DimensionMismatchError,
    GridError,
    NonFiniteSampleError,
    TimeDependentOperator,
    TimeGrid,
    biorthogonality_defect,
    constant_operator,
    dyson_truncation,
    evolve_bra,
    evolve_ket,
    is_pt_symmetric_two_level,
    matrix_exponential,
    piecewise_operator,
    propagator_bra,
    propagator_ket,
)

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def random_generator(dim, seed, hermitian=False):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    if hermitian:
        a = 0.5 * (a + a.conj().T)
    return a / np.linalg.norm(a, 2)


def smooth_generator(dim, seed):
    """A non-Hermitian generator with smooth, genuinely time-dependent entries."""
    a = random_generator(dim, seed)
    b = random_generator(dim, seed + 1)

    def batch(ts):
        ts = np.asarray(ts, dtype=float)
        return (np.cos(1.3 * ts)[:, None, None] * a
                + np.sin(0.7 * ts + 0.2)[:, None, None] * b)

    return TimeDependentOperator(dim=dim, value_at=lambda t: batch(np.array([t]))[0],
                                 values_at=batch)


# ---------------------------------------------------------------------------
# evolve_ket / evolve_bra


def test_zero_generator_keeps_state():
    grid = TimeGrid(0.0, 1.0, 1e-3)
    zero = constant_operator(np.zeros((2, 2)))
    for evolve in (evolve_ket, evolve_bra):
        traj = evolve(zero, [1.0, 0.0], grid)
        assert np.max(np.abs(traj.states - np.array([1.0, 0.0]))) < 1e-14


def test_rabi_half_period():
    # closed-form flip of the constant transverse drive: psi(pi/Omega) = (0, -i)
    omega = 2.0
    grid = TimeGrid(0.0, np.pi / omega, (np.pi / omega) / 2000)
    traj = evolve_ket(constant_operator(0.5 * omega * SX), [1.0, 0.0], grid)
    assert np.abs(traj.states[-1] - np.array([0.0, -1.0j])).max() < 1e-10


def test_pure_decay_amplitude():
    gamma = 0.8
    h = np.diag([-0.5j * gamma, 0.0])
    grid = TimeGrid(0.0, 2.0, 1e-3)
    traj = evolve_ket(constant_operator(h), [1.0, 0.0], grid)
    expected = np.exp(-0.5 * gamma * traj.times)
    assert np.max(np.abs(traj.states[:, 0] - expected)) < 1e-10
    assert np.max(np.abs(traj.states[:, 1])) == 0.0


def test_bra_growth_mirrors_ket_decay():
    gamma = 0.8
    h = np.diag([-0.5j * gamma, 0.0])
    grid = TimeGrid(0.0, 2.0, 1e-3)
    traj = evolve_bra(constant_operator(h), [1.0, 0.0], grid)
    expected = np.exp(+0.5 * gamma * traj.times)
    assert np.max(np.abs(traj.states[:, 0] - expected)) < 1e-9


def test_bra_equals_ket_for_hermitian():
    h = random_generator(3, seed=5, hermitian=True)
    grid = TimeGrid(0.0, 1.0, 1e-3)
    psi0 = np.array([0.6, 0.8j, 0.0])
    ket = evolve_ket(constant_operator(h), psi0, grid)
    bra = evolve_bra(constant_operator(h), psi0, grid)
    assert np.max(np.abs(ket.states - bra.states)) < 1e-14


def test_hermitian_norm_conservation():
    H = smooth_generator(3, seed=11)
    sym = TimeDependentOperator(
        dim=3,
        value_at=lambda t: 0.5 * (H.value_at(t) + H.value_at(t).conj().T),
    )
    grid = TimeGrid(0.0, 2.0, 1e-3)
    traj = evolve_ket(sym, [1.0, 0.0, 0.0], grid)
    assert np.max(np.abs(traj.total_norm - 1.0)) < 1e-10


def test_evolution_is_linear():
    H = smooth_generator(2, seed=3)
    grid = TimeGrid(0.0, 1.5, 1e-3)
    x = np.array([0.3 + 0.1j, -0.4j])
    y = np.array([0.9, 0.2 - 0.7j])
    a, b = 0.7 - 0.2j, -1.1 + 0.4j
    combo = evolve_ket(H, a * x + b * y, grid)
    parts = a * evolve_ket(H, x, grid).states + b * evolve_ket(H, y, grid).states
    assert np.max(np.abs(combo.states - parts)) < 1e-12


def test_trajectory_population_identity():
    H = smooth_generator(2, seed=9)
    traj = evolve_ket(H, [1.0, 0.0], TimeGrid(0.0, 1.0, 1e-3))
    assert np.array_equal(traj.populations, np.abs(traj.states) ** 2)
    assert np.allclose(traj.total_norm, traj.populations.sum(axis=1))


def test_dimension_mismatch_raises():
    with pytest.raises(DimensionMismatchError):
        evolve_ket(constant_operator(np.eye(2)), [1.0, 0.0, 0.0], TimeGrid(0, 1, 0.1))


def test_nonfinite_sample_raises():
    bad = TimeDependentOperator(
        dim=2, value_at=lambda t: np.array([[np.nan, 0], [0, 0]], dtype=complex)
    )
    with pytest.raises(NonFiniteSampleError):
        evolve_ket(bad, [1.0, 0.0], TimeGrid(0, 1, 0.1))


# ---------------------------------------------------------------------------
# grids and piecewise generators


def test_grid_rejects_non_dividing_step():
    with pytest.raises(GridError):
        TimeGrid(0.0, 1.0, 0.3)


def test_grid_rejects_off_grid_boundary():
    with pytest.raises(GridError):
        TimeGrid(0.0, 1.0, 0.1, stage_boundaries=(0.55,))


def test_grid_segments_and_halving():
    grid = TimeGrid(0.0, 1.0, 0.1, stage_boundaries=(0.4,))
    assert grid.segment_indices() == [(0, 4), (4, 10)]
    half = grid.halved()
    assert half.n_steps == 20
    assert half.stage_boundaries == (0.4,)


def test_piecewise_generator_with_declared_boundary():
    # two constant pieces; the exact answer is a product of exponentials
    h1 = random_generator(2, seed=21)
    h2 = random_generator(2, seed=22)
    pieces = piecewise_operator([
        (0.0, 0.5, constant_operator(h1)),
        (0.5, 1.0, constant_operator(h2)),
    ])
    grid = TimeGrid(0.0, 1.0, 1e-3, stage_boundaries=(0.5,))
    traj = evolve_ket(pieces, [1.0, 0.0], grid)
    exact = matrix_exponential(-0.5j * h2) @ matrix_exponential(-0.5j * h1) @ np.array([1.0, 0.0])
    assert np.max(np.abs(traj.states[-1] - exact)) < 1e-10


def test_piecewise_generator_requires_boundary_on_grid():
    pieces = piecewise_operator([
        (0.0, 0.5, constant_operator(np.eye(2))),
        (0.5, 1.0, constant_operator(2 * np.eye(2))),
    ])
    with pytest.raises(GridError):
        evolve_ket(pieces, [1.0, 0.0], TimeGrid(0.0, 1.0, 0.2))


# ---------------------------------------------------------------------------
# propagators and biorthogonality


def test_propagator_starts_at_identity():
    H = smooth_generator(3, seed=7)
    U = propagator_ket(H, TimeGrid(0.0, 1.0, 1e-3))
    assert np.array_equal(U[0], np.eye(3))


def test_propagator_matches_expm_for_constant_hermitian():
    h = np.array([[0.3, 0.4 - 0.2j], [0.4 + 0.2j, -0.1]], dtype=complex)
    grid = TimeGrid(0.0, 1.0, 5e-4)
    U = propagator_ket(constant_operator(h), grid)
    # independent oracle: eigendecomposition of the fixed Hermitian matrix
    w, v = np.linalg.eigh(h)
    for idx in (500, 2000):
        t = grid.times()[idx]
        exact = (v * np.exp(-1j * w * t)) @ v.conj().T
        assert np.max(np.abs(U[idx] - exact)) < 1e-9


def test_propagator_columns_match_state_runs():
    H = smooth_generator(3, seed=13)
    grid = TimeGrid(0.0, 1.0, 1e-3)
    U = propagator_ket(H, grid)
    for j in range(3):
        e = np.zeros(3, dtype=complex)
        e[j] = 1.0
        traj = evolve_ket(H, e, grid)
        assert np.max(np.abs(U[:, :, j] - traj.states)) < 1e-12


def test_bra_propagator_equals_ket_for_hermitian():
    h = random_generator(2, seed=17, hermitian=True)
    grid = TimeGrid(0.0, 1.0, 1e-3)
    U = propagator_ket(constant_operator(h), grid)
    V = propagator_bra(constant_operator(h), grid)
    assert np.max(np.abs(U - V)) < 1e-14


@pytest.mark.parametrize("dim,seed", [(2, 31), (2, 32), (3, 33), (3, 34)])
def test_biorthogonality_conserved_for_random_generators(dim, seed):
    H = smooth_generator(dim, seed)
    grid = TimeGrid(0.0, 2.0, 1e-3)
    assert biorthogonality_defect(H, grid) < 1e-6


def test_paired_overlaps_stay_kronecker():
    H = smooth_generator(3, seed=41)
    grid = TimeGrid(0.0, 2.0, 1e-3)
    kets = [evolve_ket(H, np.eye(3)[m], grid).states for m in range(3)]
    bras = [evolve_bra(H, np.eye(3)[k], grid).states for k in range(3)]
    for k in range(3):
        for m in range(3):
            overlap = np.einsum("ni,ni->n", bras[k].conj(), kets[m])
            assert np.max(np.abs(overlap - (1.0 if k == m else 0.0))) < 1e-6


# ---------------------------------------------------------------------------
# series-truncation oracle


def test_series_order_zero_is_identity():
    H = smooth_generator(2, seed=51)
    assert np.array_equal(dyson_truncation(H, 0.7, 0, 128), np.eye(2))


def test_series_order_one_constant():
    h = random_generator(2, seed=52)
    approx = dyson_truncation(constant_operator(h), 0.7, 1, 512)
    assert np.max(np.abs(approx - (np.eye(2) - 0.7j * h))) < 1e-12


def test_series_order_four_scales_as_fifth_power():
    h = random_generator(2, seed=53)
    H = constant_operator(h)
    errs = []
    for tau in (0.8, 0.4):
        ref = propagator_ket(H, TimeGrid(0.0, tau, tau / 400))[-1]
        errs.append(np.max(np.abs(ref - dyson_truncation(H, tau, 4, 16384))))
    assert np.log2(errs[0] / errs[1]) > 4.5


def test_series_rejects_bad_arguments():
    H = constant_operator(np.eye(2))
    with pytest.raises(ValueError):
        dyson_truncation(H, 0.5, -1, 128)
    with pytest.raises(ValueError):
        dyson_truncation(H, 0.5, 2, 0)


# ---------------------------------------------------------------------------
# matrix exponential


def test_expm_of_zero_is_identity():
    assert np.array_equal(matrix_exponential(np.zeros((3, 3))), np.eye(3))


@pytest.mark.parametrize("dim,scale,seed", [(2, 1.0, 61), (2, 8.0, 62), (3, 1.0, 63), (3, 5.0, 64)])
def test_expm_matches_scipy(dim, scale, seed):
    a = scale * random_generator(dim, seed)
    assert np.max(np.abs(matrix_exponential(a) - scipy.linalg.expm(a))) < 1e-12


def test_expm_rejects_nonsquare():
    with pytest.raises(DimensionMismatchError):
        matrix_exponential(np.zeros((2, 3)))


# ---------------------------------------------------------------------------
# parity-time predicate


def test_pt_symmetry_examples():
    times = np.linspace(0.0, 2.0, 101)
    assert is_pt_symmetric_two_level(-np.pi / 2, np.pi / 2, 0.0, times)
    assert not is_pt_symmetric_two_level(-np.pi / 2, np.pi / 2, 0.3, times)
    assert not is_pt_symmetric_two_level(0.0, np.pi / 2, 0.0, times)
    # callable detuning that vanishes only somewhere is still asymmetric
    assert not is_pt_symmetric_two_level(
        -np.pi / 2, np.pi / 2, lambda t: 0.1 * np.sin(t), times)
