import math

import numpy as np
import pytest

from entspec import (
    GOLDEN,
    ConstraintSpec,
    DivergenceError,
    ValidationError,
    asymptotic_spec,
    avg_entropy,
    blockaded_edges,
    catalan,
    density,
    entropy_report,
    inf_temp_entropy,
    moment_integral,
    normalized_moment,
    page_asymptote,
    page_correction,
    shannon_integral,
)
from entspec.entropy import blockaded_inf_temp_entropy
from entspec.montecarlo import EmpiricalSpectrum

from conftest import PHIS


def _point_mass(values):
    v = np.asarray(values, dtype=float)
    return EmpiricalSpectrum(eps_values=v, per_sample=v[None, :], zero_fraction=0.0, traces=None, dim=v.size)


def test_mp_moments(mp_dens):
    assert math.isclose(moment_integral(mp_dens, 2), 2.0, rel_tol=1e-10)
    assert math.isclose(moment_integral(mp_dens, 1), 1.0, rel_tol=1e-10)
    assert math.isclose(moment_integral(mp_dens, 0), 1.0, rel_tol=1e-10)


def test_golden_second_moment(densities):
    assert abs(moment_integral(densities[GOLDEN], 2) - 2.0944272) < 1e-7


def test_zeroth_moment_includes_delta(densities):
    assert math.isclose(moment_integral(densities[0.5], 0), 1.0, rel_tol=1e-10)


def test_negative_moment_divergence(mp_dens, densities):
    with pytest.raises(DivergenceError):
        moment_integral(mp_dens, -0.6)
    with pytest.raises(DivergenceError):
        moment_integral(densities[0.5], -0.2)


@pytest.mark.parametrize("s", [-0.25, 0.5, 2.5])
def test_mp_fractional_moments(mp_dens, s):
    exact = 4 ** s * math.gamma(s + 0.5) / (math.sqrt(math.pi) * math.gamma(s + 2))
    assert math.isclose(moment_integral(mp_dens, s), exact, rel_tol=1e-8)


def test_shannon_values(mp_dens):
    assert math.isclose(shannon_integral(mp_dens), 0.5, abs_tol=1e-10)
    assert shannon_integral(_point_mass([1.0, 1.0, 1.0])) == 0.0


def test_inf_temp_examples(golden_spec, mp_spec):
    assert math.isclose(inf_temp_entropy(golden_spec, 2), -math.log(2 / 5), rel_tol=1e-13)
    assert abs(inf_temp_entropy(golden_spec, 2) - 0.9162907) < 1e-7
    phi = GOLDEN
    closed = math.log(phi + 2) - (phi + 1) / (phi + 2) * math.log(phi)
    assert math.isclose(inf_temp_entropy(golden_spec, 1), closed, rel_tol=1e-14)
    for n in (0.5, 1, 2, 7):
        assert inf_temp_entropy(mp_spec, n) == 0.0
    with pytest.raises(ValidationError):
        inf_temp_entropy(golden_spec, -1)


@pytest.mark.parametrize("phi", (*PHIS, 0.2, 7.0))
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6, 2.5, 40])
def test_inf_temp_closed_forms(phi, n):
    spec = asymptotic_spec("blockaded", phi=phi)
    assert math.isclose(inf_temp_entropy(spec, n), blockaded_inf_temp_entropy(phi, n), rel_tol=1e-12)


def test_avg_entropy_examples(mp_spec, mp_dens, golden_spec, densities):
    assert math.isclose(avg_entropy(mp_spec, mp_dens, 1), -0.5, abs_tol=1e-10)
    assert math.isclose(avg_entropy(mp_spec, mp_dens, 2), -math.log(2), abs_tol=1e-10)
    assert abs(avg_entropy(golden_spec, densities[GOLDEN], 2) - math.log(5 / 4)) < 1e-9


def test_page_corrections(mp_spec, mp_dens, golden_spec, densities):
    assert abs(page_correction(golden_spec, densities[GOLDEN], 1) - 0.513595) < 2e-4
    assert abs(page_correction(golden_spec, densities[GOLDEN], 2) - math.log(2)) < 1e-6
    assert abs(page_correction(mp_spec, mp_dens, 3) - 0.5 * math.log(5)) < 1e-8
    for n in range(2, 7):
        assert abs(page_correction(mp_spec, mp_dens, n) - math.log(catalan(n)) / (n - 1)) < 1e-8


@pytest.mark.parametrize("phi", PHIS)
@pytest.mark.parametrize("n", range(2, 7))
def test_quadrature_matches_diagrams_in_entropy(densities, phi, n):
    spec = asymptotic_spec("blockaded", phi=phi)
    via_quad = avg_entropy(spec, densities[phi], n)
    via_diag = math.log(spec.d.sum()) + math.log(normalized_moment(spec, n)) / (1 - n)
    assert math.isclose(via_quad, via_diag, rel_tol=1e-5)


def test_monotone_in_n(golden_spec, densities):
    vals = [page_correction(golden_spec, densities[GOLDEN], n) for n in range(1, 21)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("phi", [0.3, 0.5, 1.0, GOLDEN, 2.0, 3.0, 5.0])
def test_page_bound_probe(phi):
    spec = asymptotic_spec("blockaded", phi=phi)
    assert page_correction(spec, density(spec, grid=64), 1) > 0.5


def test_asymptote_values(mp_spec, golden_spec):
    assert math.isclose(page_asymptote(mp_spec), math.log(4), rel_tol=1e-12)
    phi = GOLDEN
    assert math.isclose(page_asymptote(golden_spec), math.log(blockaded_edges(phi)[1]) - math.log(phi + 1), rel_tol=1e-13)


def test_large_n_approaches_asymptote(golden_spec, densities):
    target = page_asymptote(golden_spec)
    gaps = [target - page_correction(golden_spec, densities[GOLDEN], n) for n in (100, 1000, 10000)]
    assert all(g > 0 for g in gaps)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.01


def test_asymptote_generic_path_matches_blockaded(golden_spec):
    spec = ConstraintSpec("copy", golden_spec.C, golden_spec.d, golden_spec.d_prime * (1 + 1e-15))
    assert math.isclose(page_asymptote(spec, density(spec, method="fixedpoint", grid=16)),
                        page_asymptote(golden_spec), rel_tol=1e-5)


def test_common_rescaling_cancels():
    spec = asymptotic_spec("diagonal_sz", L=6, M=4)
    scaled = ConstraintSpec("scaled", spec.C, 3.7 * spec.d, 3.7 * spec.d_prime)
    a, b = density(spec), density(scaled)
    for n in (1, 2, 3.5):
        assert math.isclose(page_correction(spec, a, n), page_correction(scaled, b, n), rel_tol=1e-9)


def test_report(golden_spec, densities):
    rep = entropy_report(golden_spec, [1, 2, 3], densities[GOLDEN])
    assert rep.n_values == (1, 2, 3)
    assert math.isclose(rep.mu_n[0], 1.0, rel_tol=1e-9)
    for row in rep.rows():
        n, mu, s_avg, s_inf, delta = row
        assert math.isclose(delta, s_inf - s_avg, rel_tol=1e-14)
    assert rep.asymptote == page_asymptote(golden_spec)


def test_empirical_inputs():
    emp = _point_mass([0.5, 1.5])
    assert moment_integral(emp, 2) == pytest.approx(1.25)
    spec = asymptotic_spec("unconstrained")
    assert avg_entropy(spec, emp, 2) == pytest.approx(-math.log(1.25))
