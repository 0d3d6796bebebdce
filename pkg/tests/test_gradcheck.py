import numpy as np
import pytest

from illumopt.gradcheck import DEFAULT_TOL, default_suite, relative_errors, run_gradcheck


def test_relative_error_floor():
    fd = np.array([1.0, 1e-9, 0.0])
    G = fd + np.array([1e-6, 1e-6, 0.0])
    np.testing.assert_allclose(relative_errors(G, fd), [1e-6, 1e-3, 0.0])
    np.testing.assert_array_equal(relative_errors(np.ones(2), np.zeros(2)), [1.0, 1.0])


def test_suite_covers_settings():
    suite = default_suite(20)
    assert len(suite) == 20
    assert {s["K"] for s in suite} == {1, 2, 4}
    assert {s["n_iters"] for s in suite} == {1, 3, 10}
    assert {s["tau"] for s in suite} == {0.0, 1e-3}
    assert all(s["S"] >= s["K"] for s in suite)


def test_suite_passes():
    results = run_gradcheck(n_instances=20, seed=0)
    assert all(r.passed for r in results), [r.row() for r in results if not r.passed]
    assert max(r.max_rel_error for r in results) <= DEFAULT_TOL


def test_corrupted_gradient_is_caught():
    results = run_gradcheck(n_instances=6, seed=0, corrupt=lambda G: G * (1 + 1e-3))
    assert not any(r.passed for r in results)


@pytest.mark.parametrize("seed", [1, 2])
def test_suite_passes_other_seeds(seed):
    assert all(r.passed for r in run_gradcheck(n_instances=10, seed=seed))
