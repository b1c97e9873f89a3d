import numpy as np
import pytest

from baseline.ista import (DctBasis, IstaConfig, backproject, ista_recover, objective, recover_blocks,
                           soft_threshold)
from conftest import smooth_plane
from sensing.matrix import generate_matrix
from utils.errors import ConfigurationError, SolverError


def planted_signal(seed, sparsity=10, basis=None):
    basis = basis or DctBasis()
    rng = np.random.default_rng(seed)
    coefficients = np.zeros(1089)
    support = rng.choice(1089, size=sparsity, replace=False)
    coefficients[support] = rng.choice([-1.0, 1.0], size=sparsity) * rng.uniform(0.5, 1.5, size=sparsity)
    return basis.inverse(coefficients)


def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold(np.array([-3.0, -0.5, 0.0, 0.5, 2.0]), 1.0),
                                  [-2.0, 0.0, 0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        soft_threshold(np.zeros(2), -1.0)


def test_dct_basis_is_orthonormal():
    basis = DctBasis()
    x = np.random.default_rng(0).standard_normal(1089)
    c = basis.forward(x)
    assert np.linalg.norm(c) == pytest.approx(np.linalg.norm(x))
    np.testing.assert_allclose(basis.inverse(c), x, atol=1e-12)
    # a constant block has a single DC coefficient
    dc = basis.forward(np.ones(1089))
    assert dc[0] == pytest.approx(33.0)
    np.testing.assert_allclose(dc[1:], 0.0, atol=1e-12)


def test_backproject_is_exact_at_full_rate(phi_full):
    x = np.random.default_rng(1).uniform(size=1089)
    np.testing.assert_allclose(backproject(phi_full, phi_full.entries @ x), x, atol=1e-9)


def test_length_mismatch_is_a_configuration_error(phi_25):
    with pytest.raises(ConfigurationError):
        backproject(phi_25, np.zeros(10))
    with pytest.raises(ConfigurationError):
        ista_recover(phi_25, np.zeros(273))


def test_config_validation():
    for bad in (dict(lam=-1.0), dict(step=1.5), dict(step=0.0), dict(max_iters=0), dict(tolerance=0.0)):
        with pytest.raises(ValueError):
            IstaConfig(**bad).validate()


@pytest.mark.parametrize("accelerated", [True, False])
def test_iterations_lower_the_objective(phi_25, accelerated):
    x_true = planted_signal(0)
    y = phi_25.entries @ x_true
    config = IstaConfig(lam=1e-3, max_iters=60, accelerated=accelerated, continuation=False)
    start = backproject(phi_25, y)
    result = ista_recover(phi_25, y, config)
    assert 1 <= result.iterations <= 60
    assert objective(phi_25, y, result.x, 1e-3) < objective(phi_25, y, start, 1e-3)


def test_recovers_planted_sparse_signal(phi_25):
    x_true = planted_signal(3)
    result = ista_recover(phi_25, phi_25.entries @ x_true)
    assert np.linalg.norm(result.x - x_true) / np.linalg.norm(x_true) < 1e-3


@pytest.mark.slow
def test_recovers_planted_sparse_signals_in_most_trials(phi_25):
    successes = 0
    for seed in range(20):
        x_true = planted_signal(100 + seed)
        x = ista_recover(phi_25, phi_25.entries @ x_true).x
        successes += np.linalg.norm(x - x_true) / np.linalg.norm(x_true) < 1e-3
    assert successes >= 18


def test_zero_measurements_give_zero_block(phi_25):
    result = ista_recover(phi_25, np.zeros(272))
    np.testing.assert_array_equal(result.x, np.zeros(1089))


def test_non_finite_iterate_raises(phi_25):
    y = np.full(272, np.nan)
    with pytest.raises(SolverError):
        ista_recover(phi_25, y, IstaConfig(continuation=False))


def test_threaded_recovery_matches_serial():
    phi = generate_matrix(43, seed=4)
    rng = np.random.default_rng(2)
    measurements = rng.standard_normal((5, 43))
    config = IstaConfig(max_iters=30)
    serial = recover_blocks(phi, measurements, config, threads=1)
    threaded = recover_blocks(phi, measurements, config, threads=3)
    assert serial.shape == (5, 1089)
    np.testing.assert_array_equal(serial, threaded)
    assert recover_blocks(phi, np.empty((0, 43)), config).shape == (0, 1089)


def test_phi_times_backprojection_returns_the_measurements(phi_25):
    y = np.random.default_rng(4).standard_normal(272)
    np.testing.assert_allclose(phi_25.entries @ backproject(phi_25, y), y, atol=1e-6)


def test_plain_ista_objective_never_rises(phi_25):
    y = np.random.default_rng(5).standard_normal(272)
    lam = 1e-2
    values = [objective(phi_25, y, backproject(phi_25, y), lam)]
    for iters in range(1, 31):
        config = IstaConfig(lam=lam, max_iters=iters, tolerance=1e-15, accelerated=False, continuation=False)
        values.append(objective(phi_25, y, ista_recover(phi_25, y, config).x, lam))
    for before, after in zip(values, values[1:]):
        assert after <= before + 1e-10 * max(1.0, abs(before))
    assert values[-1] < values[0]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_fista_and_ista_reach_the_same_objective(seed):
    # a 4x4 block keeps 20000 iterations cheap
    phi = generate_matrix(12, 16, seed=seed)
    y = np.random.default_rng(seed).standard_normal(12)
    lam = 0.3
    values = []
    for accelerated in (True, False):
        config = IstaConfig(lam=lam, max_iters=20000, tolerance=1e-15, accelerated=accelerated, continuation=False)
        values.append(objective(phi, y, ista_recover(phi, y, config).x, lam))
    assert values[0] == pytest.approx(values[1], abs=1e-6)


def test_recovery_error_falls_as_measurements_grow():
    blocks = [smooth_plane(33, 33, seed=s).reshape(-1) for s in range(3)]
    errors = []
    for m in (272, 109, 43):
        phi = generate_matrix(m, seed=11)
        relative = [np.linalg.norm(ista_recover(phi, phi.entries @ x).x - x) / np.linalg.norm(x) for x in blocks]
        errors.append(np.mean(relative))
    assert errors[0] < errors[1] < errors[2]
