import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from sarlift import (
    SolverConfig,
    SolverState,
    assemble_forward,
    build_scene_grid,
    default_phantom,
    extract_reflectivity,
    kronecker_scene,
    psd_project,
    received_signal,
    correlate,
    solve,
    uzawa_step,
)
from sarlift.errors import DimensionError, DivergenceError, InvalidConfigError
from sarlift.solver import resolve_step_size
from conftest import make_sampling


def _random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def _oracle_psd(h):
    # independent eigensolver path (scipy) + clamping
    w, q = scipy.linalg.eigh(0.5 * (h + h.conj().T))
    return (q * np.clip(w, 0, None)) @ q.conj().T


class TestPsdProject:
    def test_diagonal_clamp(self):
        out = psd_project(np.diag([2.0, -3.0]).astype(complex))
        np.testing.assert_allclose(out, np.diag([2.0, 0.0]), atol=1e-14)

    def test_psd_fixed_point(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        psd = a @ a.conj().T
        out = psd_project(psd)
        assert np.linalg.norm(out - psd) <= 1e-12 * np.linalg.norm(psd)

    def test_matches_independent_eigensolver(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            h = _random_hermitian(rng, 8)
            np.testing.assert_allclose(psd_project(h), _oracle_psd(h),
                                       atol=1e-11)

    def test_hermitizes_input(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        np.testing.assert_allclose(psd_project(a), _oracle_psd(a), atol=1e-11)

    def test_nearest_point_property(self):
        # projection must not be farther than any sampled PSD competitor
        rng = np.random.default_rng(3)
        h = _random_hermitian(rng, 6)
        proj = psd_project(h)
        base = np.linalg.norm(h - proj)
        for _ in range(25):
            b = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
            competitor = b @ b.conj().T
            assert base <= np.linalg.norm(h - competitor) + 1e-12

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            psd_project(np.ones((2, 3)))

    @given(seed=st.integers(0, 2 ** 31))
    @settings(max_examples=25, deadline=None)
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        h = _random_hermitian(rng, 5)
        once = psd_project(h)
        twice = psd_project(once)
        assert np.linalg.norm(twice - once) <= 1e-10 * max(
            1.0, np.linalg.norm(once))


@pytest.fixture
def toy_problem(paper_geometry):
    grid = build_scene_grid(2, 10.0)
    sampling = make_sampling(m=2, p=3)
    op = assemble_forward(grid, paper_geometry, sampling)
    rng = np.random.default_rng(21)
    refl = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    data = op.apply_lifted(refl)
    return grid, op, data


class TestUzawaStep:
    def test_zero_dual_gives_zero_iterate(self, toy_problem):
        grid, op, data = toy_problem
        config = SolverConfig(step_rule="fixed", step_size=1e-3)
        state = SolverState(iterate=np.zeros((4, 4), complex),
                            dual=np.zeros(op.shape[0], complex))
        out = uzawa_step(state, op, data, config)
        assert np.all(out.iterate == 0)

    def test_fixed_point_leaves_dual_unchanged(self, toy_problem):
        grid, op, data = toy_problem
        config = SolverConfig(step_rule="fixed", step_size=1e-3)
        rng = np.random.default_rng(5)
        dual = rng.standard_normal(op.shape[0]) + 1j * rng.standard_normal(op.shape[0])
        state = SolverState(iterate=np.zeros((4, 4), complex), dual=dual)
        probe = uzawa_step(state, op, data, config)
        # feed back data that the current iterate reproduces exactly
        consistent = op.apply_kron(probe.iterate)
        out = uzawa_step(state, op, consistent, config)
        np.testing.assert_array_equal(out.dual, dual)

    def test_one_step_matches_hand_unrolled(self, toy_problem):
        grid, op, data = toy_problem
        lam, beta = 20.0, 2.5e-4
        config = SolverConfig(trace_weight=lam, step_rule="fixed",
                              step_size=beta)
        rng = np.random.default_rng(6)
        dual = rng.standard_normal(op.shape[0]) + 1j * rng.standard_normal(op.shape[0])
        state = SolverState(iterate=np.zeros((4, 4), complex), dual=dual.copy())
        out = uzawa_step(state, op, data, config)

        # independent unroll from the explicit matrix and scipy eigensolver
        f = op.explicit_matrix()
        h = (f.conj().T @ dual).reshape((4, 4), order="F")
        h = 0.5 * (h + h.conj().T) - lam * np.eye(4)
        w, q = scipy.linalg.eigh(h)
        rho = (q * np.clip(w, 0, None)) @ q.conj().T
        xi_next = dual + beta * (data - f @ rho.ravel(order="F"))
        np.testing.assert_allclose(out.iterate, rho, atol=1e-10)
        np.testing.assert_allclose(out.dual, xi_next, atol=1e-10)


class TestSolve:
    def test_zero_data(self, toy_problem):
        grid, op, _ = toy_problem
        config = SolverConfig(step_rule="fixed", step_size=1e-3,
                              max_iterations=50)
        kron, history = solve(op, np.zeros(op.shape[0]), config, grid)
        assert np.all(kron.entries == 0)
        assert history[-1].trace == 0.0
        assert np.isnan(history[-1].data_error)

    def test_small_scene_exact_recovery(self, paper_geometry, small_grid):
        rng = np.random.default_rng(31)
        refl = np.zeros(9, dtype=complex)
        refl[[1, 4, 7]] = [1.0, 0.6, 0.3]
        img_values = refl
        sampling = make_sampling(fc_hz=2e9, m=4, p=64)
        op = assemble_forward(small_grid, paper_geometry, sampling)
        data = op.apply_lifted(img_values)
        config = SolverConfig(step_rule="scaled", step_size=4.0,
                              max_iterations=3000, data_tolerance=1e-7)
        kron, history = solve(op, data, config, small_grid)
        truth = np.outer(img_values, img_values.conj())
        rel = np.linalg.norm(kron.entries - truth) / np.linalg.norm(truth)
        assert rel <= 1e-3
        assert history[-1].numerical_rank == 1

    def test_deterministic(self, toy_problem):
        grid, op, data = toy_problem
        config = SolverConfig(step_rule="scaled", step_size=4.0,
                              max_iterations=60)
        kron1, hist1 = solve(op, data, config, grid)
        kron2, hist2 = solve(op, data, config, grid)
        np.testing.assert_array_equal(kron1.entries, kron2.entries)
        assert [(r.iteration, r.trace, r.data_error) for r in hist1] == \
               [(r.iteration, r.trace, r.data_error) for r in hist2]

    def test_iterates_stay_psd(self, toy_problem):
        grid, op, data = toy_problem
        config = SolverConfig(step_rule="scaled", step_size=4.0)
        beta = resolve_step_size(config, op)
        state = SolverState(iterate=np.zeros((4, 4), complex),
                            dual=np.zeros(op.shape[0], complex))
        for _ in range(25):
            state = uzawa_step(state, op, data, config, beta)
            defect = np.linalg.norm(state.iterate - state.iterate.conj().T)
            assert defect <= 1e-10
            w = np.linalg.eigvalsh(state.iterate)
            assert w.min() >= -1e-10 * max(1.0, w.max())

    def test_divergence_detected(self, paper_geometry, small_grid):
        refl = np.zeros(9, dtype=complex)
        refl[4] = 1.0
        sampling = make_sampling(fc_hz=2e9, m=4, p=32)
        op = assemble_forward(small_grid, paper_geometry, sampling)
        data = op.apply_lifted(refl)
        config = SolverConfig(step_rule="fixed", step_size=1.0,
                              max_iterations=2000)
        with pytest.raises(DivergenceError):
            solve(op, data, config, small_grid)

    def test_data_length_checked(self, toy_problem):
        grid, op, data = toy_problem
        config = SolverConfig(step_rule="fixed", step_size=1e-3)
        with pytest.raises(DimensionError):
            solve(op, data[:-1], config, grid)

    def test_log_stride_and_final_record(self, toy_problem):
        grid, op, data = toy_problem
        config = SolverConfig(step_rule="fixed", step_size=1e-4,
                              max_iterations=25, log_stride=10)
        _, history = solve(op, data, config, grid)
        assert [r.iteration for r in history] == [0, 10, 20, 25]


class TestStepRules:
    def test_validation(self):
        with pytest.raises(InvalidConfigError):
            SolverConfig(step_rule="scaled")  # needs step_size
        with pytest.raises(InvalidConfigError):
            SolverConfig(trace_weight=-1.0)
        with pytest.raises(InvalidConfigError):
            SolverConfig(step_rule="unknown")

    def test_auto_rule_uses_safe_bound(self, toy_problem):
        from sarlift import largest_singular_value
        grid, op, data = toy_problem
        sigma = largest_singular_value(op)
        beta = resolve_step_size(SolverConfig(step_rule="auto"), op)
        assert beta == pytest.approx(0.9 * min(1 / sigma, 2 / sigma ** 2),
                                     rel=1e-4)

    def test_fixed_rule_literal(self, toy_problem):
        grid, op, _ = toy_problem
        config = SolverConfig(step_rule="fixed", step_size=0.123)
        assert resolve_step_size(config, op) == 0.123


class TestExtractReflectivity:
    def test_rank_one_round_trip(self, paper_grid):
        img = default_phantom(paper_grid)
        kron = kronecker_scene(img)
        out = extract_reflectivity(kron)
        np.testing.assert_allclose(out.values, img.values, atol=1e-10)

    @given(seed=st.integers(0, 2 ** 31))
    @settings(max_examples=25, deadline=None)
    def test_round_trip_up_to_phase(self, seed):
        from sarlift.scene import ReflectivityImage
        rng = np.random.default_rng(seed)
        grid = build_scene_grid(3, 1.0)
        values = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        img = ReflectivityImage(grid, values)
        out = extract_reflectivity(kronecker_scene(img))
        # equal up to a unit-modulus global factor
        j = int(np.argmax(np.abs(values)))
        aligned = values * np.exp(-1j * np.angle(values[j]))
        np.testing.assert_allclose(out.values, aligned, atol=1e-9)

    def test_degenerate_spectrum_deterministic(self):
        from sarlift.scene import KroneckerMatrix
        kron = KroneckerMatrix(np.eye(2, dtype=complex))
        a = extract_reflectivity(kron)
        b = extract_reflectivity(kron)
        np.testing.assert_array_equal(a, b)
        assert np.linalg.norm(a) == pytest.approx(1.0)
        j = int(np.argmax(np.abs(a)))
        assert a[j].imag == pytest.approx(0.0, abs=1e-14)
        assert a[j].real > 0

    def test_negative_matrix_warns_and_zeroes(self):
        from sarlift.scene import KroneckerMatrix
        kron = KroneckerMatrix(-np.eye(3, dtype=complex))
        with pytest.warns(RuntimeWarning, match="empty scene"):
            out = extract_reflectivity(kron)
        assert np.all(out == 0)
