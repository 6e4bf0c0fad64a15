"""Offspring law pmf/tail identities and sampler distribution checks."""
import math

import numpy as np
import pytest

from lerrw.offspring import (
    K_TABLE,
    OffspringError,
    OffspringLaw,
    geometric_half,
    pmf,
    sample_offspring_array,
    sampling_tables,
    scaling_an,
    stable_family,
    tail_mass,
    tail_mean,
)

LAWS = [geometric_half(), stable_family(1.35), stable_family(1.5), stable_family(2.0)]


@pytest.mark.parametrize("law", LAWS, ids=lambda l: f"{l.kind}-{l.gamma}")
def test_total_mass_and_mean_are_one(law):
    # table mass plus closed-form tail must account for everything
    cdf, _ = sampling_tables(law)
    assert cdf[-1] + tail_mass(law, K_TABLE) == pytest.approx(1.0, abs=1e-9)
    head_mean = sum(k * pmf(law, k) for k in range(2000))
    assert head_mean + tail_mean(law, 1999) == pytest.approx(1.0, abs=1e-10)
    # tail_mean at 0 is the full mean since the k=0 term vanishes
    assert tail_mean(law, 0) == pytest.approx(1.0, abs=1e-12)
    # cdf-diff route is noisier (cancellation near 1) but must agree loosely
    p = np.diff(cdf, prepend=0.0)
    assert float(np.arange(len(p)) @ p) + tail_mean(law, K_TABLE) == pytest.approx(
        1.0, abs=2e-5)


def test_geometric_pmf_exact():
    law = geometric_half()
    for k in range(12):
        assert pmf(law, k) == 0.5 ** (k + 1)
    assert tail_mass(law, 5) == 0.5**6
    assert tail_mean(law, 5) == 7 * 0.5**6


def test_stable_family_pmf_frozen_values():
    law = stable_family(1.5)
    assert pmf(law, 0) == pytest.approx(2 / 3, abs=1e-14)
    assert pmf(law, 1) == 0.0
    assert pmf(law, 2) == pytest.approx(0.25, abs=1e-12)
    assert pmf(law, 3) == pytest.approx(1 / 24, abs=1e-12)
    # gamma=2 degenerates to the half/half binary law
    binary = stable_family(2.0)
    assert pmf(binary, 0) == pytest.approx(0.5, abs=1e-14)
    assert pmf(binary, 1) == 0.0
    assert pmf(binary, 2) == pytest.approx(0.5, abs=1e-14)
    assert pmf(binary, 3) == 0.0
    assert binary.variance == 1.0
    assert geometric_half().variance == 2.0
    assert math.isinf(stable_family(1.5).variance)


@pytest.mark.parametrize("gamma", [1.2, 1.5, 1.8])
def test_stable_tail_exponent(gamma):
    law = stable_family(gamma)
    for k in [10**4, 10**5]:
        ratio = tail_mass(law, k) / tail_mass(law, 2 * k)
        assert ratio == pytest.approx(2**gamma, rel=2e-3)


def test_scaling_an():
    assert scaling_an(geometric_half(), 10**6) == 1000.0
    assert scaling_an(stable_family(1.5), 2**15) == pytest.approx(1024.0)
    assert scaling_an(geometric_half(a_n_constant=2.5), 4) == 5.0
    assert scaling_an(stable_family(1.5), 1) == 1.0


def test_constructor_validation():
    with pytest.raises(OffspringError):
        stable_family(2.5)
    with pytest.raises(OffspringError):
        stable_family(1.0)
    with pytest.raises(OffspringError):
        geometric_half(a_n_constant=0.0)
    with pytest.raises(OffspringError):
        OffspringLaw("poisson", 2.0, 1.0, 1.0)


def test_geometric_sampler_moments():
    rng = np.random.default_rng(2024)
    x = sample_offspring_array(geometric_half(), rng, 10**6)
    assert x.min() >= 0
    assert abs(x.mean() - 1.0) < 4 * math.sqrt(2 / 10**6)
    assert abs((x == 0).mean() - 0.5) < 4 * math.sqrt(0.25 / 10**6)
    # size-biased: mean jumps to E[k^2]/E[k] = 3, support starts at 1
    xb = sample_offspring_array(geometric_half(), rng, 10**6, size_biased=True)
    assert xb.min() >= 1
    assert abs(xb.mean() - 3.0) < 4 * math.sqrt(8 / 10**6)


def test_stable_sampler_head_and_tail():
    rng = np.random.default_rng(99)
    law = stable_family(1.5)
    x = sample_offspring_array(law, rng, 10**7)
    assert abs((x == 0).mean() - 2 / 3) < 4e-4
    assert abs((x == 2).mean() - 0.25) < 4e-4
    assert (x == 1).sum() == 0
    for k in [10, 30, 100]:
        emp = (x >= k).mean()
        exact = tail_mass(law, k - 1)
        assert abs(emp / exact - 1.0) < 0.2, (k, emp, exact)


def test_binary_sampler_support():
    rng = np.random.default_rng(5)
    x = sample_offspring_array(stable_family(2.0), rng, 10**5)
    assert set(np.unique(x).tolist()) == {0, 2}
    xb = sample_offspring_array(stable_family(2.0), rng, 10**5, size_biased=True)
    assert set(np.unique(xb).tolist()) == {2}
