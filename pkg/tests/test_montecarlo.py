import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from entspec import (
    GOLDEN,
    SampleConfig,
    SizeError,
    ValidationError,
    asymptotic_spec,
    blockaded_chain_space,
    density,
    empirical_cdf_distance,
    finite_moment_exact,
    moment_estimate,
    sample_spectrum,
    self_averaging_scan,
)
from entspec.montecarlo import (
    EmpiricalSpectrum,
    _power_traces,
    amplitude_matrix,
    moment_estimates,
    raw_eigenvalues,
)


def test_dimensions_and_support():
    cfg = SampleConfig(asymptotic_spec("blockaded", phi=GOLDEN), N=1000, seed=3)
    emp = sample_spectrum(cfg, method="gram")
    assert emp.per_sample.shape == (1, 2618)
    assert emp.eps_values.min() >= 0 and emp.eps_values.max() < 4.5


def test_gapped_zero_fraction():
    emp = sample_spectrum(SampleConfig(asymptotic_spec("blockaded", phi=0.5), N=1000, seed=1))
    assert abs(emp.zero_fraction - 1 / 3) < 0.01


def test_unconstrained_cdf(mp_dens):
    emp = sample_spectrum(SampleConfig(asymptotic_spec("unconstrained"), N=500, seed=2))
    assert empirical_cdf_distance(emp, mp_dens) < 0.02


def test_gapped_cdf_distance(densities):
    emp = sample_spectrum(SampleConfig(asymptotic_spec("blockaded", phi=0.5), N=1000, seed=5))
    assert empirical_cdf_distance(emp, densities[0.5]) < 0.015


def test_self_comparison_is_zero(mp_dens):
    m = 20000
    u = (np.arange(m) + 0.5) / m
    eps = np.interp(u, mp_dens.cdf, mp_dens.eps_grid)
    emp = EmpiricalSpectrum(eps_values=eps, per_sample=eps[None, :], zero_fraction=0.0, traces=None, dim=m)
    assert empirical_cdf_distance(emp, mp_dens) < 1e-3


def test_per_sample_mean_is_one():
    emp = sample_spectrum(SampleConfig(asymptotic_spec("blockaded", phi=0.7), N=150, samples=4, seed=9))
    assert emp.per_sample.shape == (4, 255)
    assert np.allclose(emp.per_sample.mean(axis=1), 1.0, rtol=1e-13)
    assert np.all(emp.eps_values >= 0)


def test_block_structure_and_rank():
    N = 200
    cfg = SampleConfig(asymptotic_spec("blockaded", phi=0.5), N=N, seed=4)
    psi = amplitude_matrix(cfg)
    D, Dp = cfg.dims()
    assert np.all(psi[D[0]:, Dp[0]:] == 0)
    assert np.all(psi[:D[0], :] != 0)
    rank = np.linalg.matrix_rank(psi)
    assert rank == Dp[0] + min(D[0], Dp[1])
    emp = sample_spectrum(cfg)
    assert np.sum(emp.per_sample[0] == 0) == D.sum() - rank


def test_entry_variance():
    cfg = SampleConfig(asymptotic_spec("unconstrained"), N=400, seed=6)
    psi = amplitude_matrix(cfg)
    assert abs(np.var(psi.real) * 2 * 400 - 1) < 0.02
    assert abs(np.var(psi.imag) * 2 * 400 - 1) < 0.02


def test_determinism_across_threads(monkeypatch):
    cfg = SampleConfig(asymptotic_spec("blockaded", phi=GOLDEN), N=60, samples=6, seed=11)
    monkeypatch.setenv("ENTSPEC_THREADS", "1")
    a = sample_spectrum(cfg)
    monkeypatch.setenv("ENTSPEC_THREADS", "3")
    b = sample_spectrum(cfg)
    assert np.array_equal(a.per_sample, b.per_sample)
    c = sample_spectrum(SampleConfig(cfg.spec, N=60, samples=6, seed=12))
    assert not np.array_equal(a.per_sample, c.per_sample)


def test_sample_order_independent():
    spec = asymptotic_spec("unconstrained")
    many = sample_spectrum(SampleConfig(spec, N=30, samples=5, seed=7))
    assert np.array_equal(many.per_sample[3], sample_spectrum(SampleConfig(spec, N=30, samples=5, seed=7)).per_sample[3])
    assert np.array_equal(amplitude_matrix(SampleConfig(spec, N=30, seed=7), 3), amplitude_matrix(SampleConfig(spec, N=30, samples=1, seed=7), 3))


def test_svd_and_gram_agree():
    psi = amplitude_matrix(SampleConfig(asymptotic_spec("blockaded", phi=1.3), N=80, seed=1))
    assert np.allclose(raw_eigenvalues(psi, "svd"), raw_eigenvalues(psi, "gram"), atol=1e-12)
    with pytest.raises(ValidationError):
        raw_eigenvalues(psi, "qr")


@pytest.mark.parametrize("shape", [(None, None), (None, 40), (40, None)])
def test_power_traces_match_eigenvalues(shape):
    cfg = SampleConfig(asymptotic_spec("blockaded", phi=0.6), N=50, seed=2, samples=3)
    rows, cols = shape
    psi = amplitude_matrix(cfg)[:rows, :cols]
    x = raw_eigenvalues(psi, "svd")
    for ns in ([1, 2], [2], [3], [1, 2, 3, 4, 5, 6]):
        assert np.allclose(_power_traces(psi, ns), [np.sum(x ** n) for n in ns], rtol=1e-10)
    a, _, _ = moment_estimates(cfg, range(1, 7), method="power")
    b, _, _ = moment_estimates(cfg, range(1, 7), method="gram")
    assert np.allclose(a, b, rtol=1e-10)


def test_cap_and_size_errors():
    with pytest.raises(SizeError):
        amplitude_matrix(SampleConfig(asymptotic_spec("blockaded", phi=3.0), N=2000))
    with pytest.raises(SizeError):
        SampleConfig(asymptotic_spec("blockaded", phi=0.001), N=10).dims()
    with pytest.raises(ValidationError):
        sample_spectrum(SampleConfig(asymptotic_spec("unconstrained"), N=10, samples=0))
    with pytest.raises(ValidationError):
        moment_estimates(SampleConfig(asymptotic_spec("unconstrained"), N=10), [7])
    with pytest.raises(ValidationError):
        moment_estimates(SampleConfig(asymptotic_spec("unconstrained"), N=10), [2], method="lu")


def test_concrete_chain_matches_block_model():
    sp = blockaded_chain_space(12)
    concrete = sample_spectrum(SampleConfig(sp, samples=20, seed=1, concrete=True))
    block = sample_spectrum(SampleConfig(sp, samples=20, seed=2))
    assert concrete.per_sample.shape == block.per_sample.shape == (20, 377)
    assert ks_2samp(concrete.eps_values, block.eps_values, method="asymp").statistic < 0.02


def test_concrete_mask_only_blocks_adjacent_ones():
    sp = blockaded_chain_space(5)
    psi = amplitude_matrix(SampleConfig(sp, seed=0, concrete=True))
    left = np.sort(np.concatenate(sp.left_states))
    right = np.sort(np.concatenate(sp.right_states))
    forbidden = ((left[:, None] >> 4) & 1) & (right[None, :] & 1)
    assert np.array_equal(psi == 0, forbidden.astype(bool))


def test_concrete_requires_chain():
    with pytest.raises(ValidationError):
        amplitude_matrix(SampleConfig(asymptotic_spec("blockaded"), N=10, concrete=True))


def test_finite_chain_second_moment():
    sp = blockaded_chain_space(6)
    mean, err = moment_estimate(SampleConfig(sp, samples=10_000, seed=0), 2)
    exact = finite_moment_exact((sp.D, sp.D_prime), sp.C, sp.N_ref, 2) / sp.N_ref
    assert abs(exact - 27.67578125) < 1e-12
    assert abs(mean - exact) < 4 * err


def test_unconstrained_third_moment():
    N = 200
    mean, err = moment_estimate(SampleConfig(asymptotic_spec("unconstrained"), N=N, samples=400, seed=1), 3)
    assert abs(mean - (5 + 1 / N ** 2)) < 4 * err


def test_golden_second_moment_finite_n():
    mean, _ = moment_estimate(SampleConfig(asymptotic_spec("blockaded", phi=GOLDEN), N=500, samples=3, seed=2), 2)
    assert abs(mean - 2 * (GOLDEN ** 3 + 3 * GOLDEN ** 2 + GOLDEN)) < 0.2


def test_single_sample_stderr_is_missing():
    mean, err = moment_estimate(SampleConfig(asymptotic_spec("unconstrained"), N=20, samples=1), 2)
    assert math.isnan(err) and mean > 0
    scan = self_averaging_scan(asymptotic_spec("unconstrained"), 2, [10, 20], samples=1)
    assert all(math.isnan(r) for r in scan.rel_std) and math.isnan(scan.slope)


def test_scan_requires_ascending():
    with pytest.raises(ValidationError):
        self_averaging_scan(asymptotic_spec("unconstrained"), 2, [20, 10], samples=3)


@pytest.mark.slow
def test_unconstrained_self_averaging():
    scan = self_averaging_scan(asymptotic_spec("unconstrained"), 2, [100, 200, 400, 800], samples=150, seed=3)
    assert abs(scan.slope + 1.0) < 0.15
