"""Gaussian field law and the distorted resistance/measure discretizations."""
import math

import numpy as np
import pytest

from lerrw.environment import DomainError
from lerrw.snake import (
    d_alpha,
    distorted_measure,
    distorted_resistance,
    dump_snake,
    limit_constants,
    sample_snake,
    sample_snake_matrix,
    snake_covariance,
    zero_snake,
)
from lerrw.trees import TreeMetricView, tree_from_parents


def path_tree(depth):
    return tree_from_parents([-1] + list(range(depth)))


def test_limit_constants():
    assert limit_constants(0.0, 1.0) == (1.0, 2.0)
    assert limit_constants(0.5, 1.0) == (2.0, math.sqrt(8.0))
    assert limit_constants(1.0, 2.0) == (1.0, math.sqrt(8.0))
    with pytest.raises(DomainError):
        limit_constants(1.5, 1.0)
    with pytest.raises(DomainError):
        limit_constants(0.5, 0.0)


def test_d_alpha_values():
    t = path_tree(4)
    assert d_alpha(t, 1.0, 0.5, 2, 2) == 0.0
    # ancestor pair at continuum depths (1, 4): 2 + 1 - 2 = 1
    assert d_alpha(t, 1.0, 0.5, 4, 1) == pytest.approx(1.0, abs=1e-14)
    star = tree_from_parents([-1, 0, 0])
    r = math.e - 1.0
    assert d_alpha(star, r, 1.0, 1, 2) == pytest.approx(2.0, abs=1e-14)
    with pytest.raises(DomainError):
        d_alpha(t, 1.0, 2.0, 0, 1)


def test_field_marginals():
    t = path_tree(9)
    m = 100_000
    phi = sample_snake_matrix(t, 1.0, 0.5, m, np.random.default_rng(3))
    assert np.all(phi[:, 0] == 0.0)
    var = phi[:, 9].var(ddof=1)
    se = 3.0 * math.sqrt(2.0 / m)  # chi-square spread of a variance estimate
    assert abs(var - 3.0) < 3 * se


def test_leaf_covariance():
    t = tree_from_parents([-1, 0, 1, 1])
    m = 100_000
    phi = sample_snake_matrix(t, 1.0, 0.0, m, np.random.default_rng(4))
    cov = float(np.cov(phi[:, 2], phi[:, 3])[0, 1])
    se = math.sqrt((2.0 * 2.0 + 1.0) / m)
    assert abs(cov - 1.0) < 3 * se


def test_covariance_matrix_matches_oracle():
    parents = [-1, 0, 0, 1, 1, 2, 5, 5]
    t = tree_from_parents(parents)
    exact = snake_covariance(t, 0.5, 0.5)
    assert exact[0, 0] == 0.0
    assert np.allclose(exact, exact.T)
    m = 60_000
    phi = sample_snake_matrix(t, 0.5, 0.5, m, np.random.default_rng(5))
    emp = np.cov(phi, rowvar=False)
    var = np.diag(exact)
    se = np.sqrt((np.outer(var, var) + exact**2) / m)
    bad = np.abs(emp - exact) > 4 * se + 1e-12
    assert not bad.any()


def test_gaussianity_shape():
    t = path_tree(6)
    m = 50_000
    phi = sample_snake_matrix(t, 1.0, 0.0, m, np.random.default_rng(6))
    x = phi[:, 1:]
    mu = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1)
    z = (x - mu) / sd
    skew = (z**3).mean(axis=0)
    kurt = (z**4).mean(axis=0) - 3.0
    assert np.all(np.abs(skew) < 4 * math.sqrt(6.0 / m))
    assert np.all(np.abs(kurt) < 4 * math.sqrt(24.0 / m))


def zero_noise_resistance(depth, rescale, alpha, delta):
    t = path_tree(depth)
    f = zero_snake(t, rescale, alpha, delta)
    return distorted_resistance(f, 0, depth)


def test_zero_noise_resistance_closed_form():
    # alpha = 0 integrand e^{delta s}: exact integral (e^{delta T} - 1)/delta
    delta, T = 1.5, 1.0
    exact = (math.exp(delta * T) - 1.0) / delta
    err1 = abs(zero_noise_resistance(50, T / 50, 0.0, delta) - exact)
    err2 = abs(zero_noise_resistance(100, T / 100, 0.0, delta) - exact)
    assert err1 < 1e-3
    assert 3.5 < err1 / err2 < 4.5  # halving the step quarters the error


def test_zero_noise_resistance_alpha_one_linear():
    # delta = 2 makes the alpha = 1 integrand linear: trapezoid is exact
    T = 2.0
    exact = T + T**2 / 2.0
    got = zero_noise_resistance(64, T / 64, 1.0, 2.0)
    assert got == pytest.approx(exact, rel=1e-12)


def test_resistance_additivity_and_symmetry():
    t = tree_from_parents([-1, 0, 1, 2, 2, 0, 5])
    rng = np.random.default_rng(8)
    f = sample_snake(t, 0.3, 0.5, rng, delta=1.25)
    metric = TreeMetricView(t)
    assert distorted_resistance(f, 4, 4, metric) == 0.0
    r_uv = distorted_resistance(f, 4, 6, metric)
    assert r_uv == pytest.approx(distorted_resistance(f, 6, 4, metric), rel=1e-12)
    mid = 0  # on the path from 4 to 6
    split = (distorted_resistance(f, 4, mid, metric)
             + distorted_resistance(f, mid, 6, metric))
    assert r_uv == pytest.approx(split, rel=1e-12)


def test_measure_shell_density():
    # zero noise, alpha = 0: density at continuum depth s is exactly e^{-delta s}
    t = tree_from_parents([-1, 0, 0, 1, 1, 2, 2])
    f = zero_snake(t, 0.5, 0.0, delta=2.0)
    shell = [x for x in range(t.n) if t.depth[x] == 2]
    mu_hat = len(shell) / t.n
    assert distorted_measure(f, shell) / mu_hat == pytest.approx(
        math.exp(-2.0 * 1.0), rel=1e-12)
    assert distorted_measure(f, []) == 0.0
    sub = distorted_measure(f, shell[:2])
    assert sub <= distorted_measure(f, shell)


def test_dump_format(tmp_path):
    t = path_tree(3)
    f = sample_snake(t, 0.25, 1.0, np.random.default_rng(1), delta=1.0)
    out = tmp_path / "snake.txt"
    dump_snake(f, str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == "# vertex depth phi density"
    assert len(lines) == t.n + 1
    cols = lines[3].split()
    assert cols[0] == "2" and float(cols[1]) == 0.5
