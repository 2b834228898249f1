"""Trace moments, Renyi/von Neumann entropies and Page corrections.

All entropies are returned with the extensive ``ln N`` removed, so every
quantity here is independent of the reference scale ``N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import quadrature
from .exceptions import DivergenceError, ValidationError
from .resolvent import SpectralDensity, blockaded_edges, density as build_density, fit_small_eps_exponent
from .space import ConstraintSpec, blockaded_phi, scaling_constants

QUAD_TOL = 1e-10
QUAD_MAX_EVAL = 100_000


@dataclass(frozen=True)
class EntropyReport:
    spec: ConstraintSpec
    n_values: tuple
    mu_n: tuple
    S_avg_minus_lnN: tuple
    S_inf_minus_lnN: tuple
    delta_S: tuple
    asymptote: float

    def rows(self):
        return list(zip(self.n_values, self.mu_n, self.S_avg_minus_lnN, self.S_inf_minus_lnN, self.delta_S))


def _is_empirical(dens):
    return hasattr(dens, "eps_values")


def _log_moment(dens: SpectralDensity, n):
    """``ln int p eps^n`` computed with the integrand scaled by ``eps_max^n``."""
    top = dens.support[1]
    val, _ = quadrature.integrate(
        lambda e: dens(e) * (e / top) ** n,
        dens.breakpoints,
        dens.singular_zero,
        tol=QUAD_TOL,
        max_eval=QUAD_MAX_EVAL,
    )
    if n == 0:
        val += dens.delta_mass_at_zero
    return math.log(val) + n * math.log(top)


def _check_exponent(dens, n):
    if n >= 0:
        return
    if dens.delta_mass_at_zero > 0:
        raise DivergenceError(f"moment n={n} diverges on the zero-eigenvalue mass")
    if dens.singular_zero:
        lo = max(1e-9, dens.support[0])
        a = fit_small_eps_exponent(dens, window=(lo, 1e3 * lo))
        if n + a <= -1:
            raise DivergenceError(f"moment n={n} diverges against p ~ eps^{a:.3f}")


def moment_integral(dens, n: float) -> float:
    """``int p(eps) eps^n d eps`` plus the zero-eigenvalue mass when ``n == 0``.

    ``dens`` may also be an empirical spectrum (anything with an
    ``eps_values`` array), in which case the sample average is returned.
    """
    if _is_empirical(dens):
        return float(np.mean(np.asarray(dens.eps_values) ** n))
    _check_exponent(dens, n)
    return math.exp(_log_moment(dens, n))


def shannon_integral(dens) -> float:
    """``int p(eps) eps ln(eps) d eps``; the zero mass does not contribute."""
    if _is_empirical(dens):
        e = np.asarray(dens.eps_values, dtype=float)
        safe = np.where(e > 0, e, 1.0)
        return float(np.mean(np.where(e > 0, e * np.log(safe), 0.0)))
    val, _ = quadrature.integrate(
        lambda e: dens(e) * e * np.log(np.where(e > 0, e, 1.0)),
        dens.breakpoints,
        dens.singular_zero,
        tol=QUAD_TOL,
        max_eval=QUAD_MAX_EVAL,
    )
    return val


def _inf_temp_weights(spec):
    sc = scaling_constants(spec)
    return (spec.C @ spec.d_prime) / sc.norm_per_N


def inf_temp_entropy(spec: ConstraintSpec, n: float) -> float:
    """Entropy of the infinite-temperature reduced state minus ``ln N``.

    The reduced state is diagonal with weight ``w_l`` on each of the
    ``N d_l`` states of sector ``l``.
    """
    if n < 0:
        raise ValidationError(f"Renyi index must be non-negative, got {n}")
    w = _inf_temp_weights(spec)
    d = spec.d
    if n == 1:
        return float(-np.sum(d * w * np.log(w)))
    return float(logsumexp(n * np.log(w), b=d) / (1.0 - n))


def blockaded_inf_temp_entropy(phi: float, n: float) -> float:
    """Closed forms for the blockaded chain, minus ``ln N``."""
    if n == 1:
        return math.log(phi + 2.0) - (phi + 1.0) / (phi + 2.0) * math.log((phi + 1.0) / phi)
    num = math.log(phi * (phi + 1.0) ** n + phi ** n)
    return -(num - n * math.log(phi * phi + 2.0 * phi)) / (n - 1.0)


def avg_entropy(spec: ConstraintSpec, dens, n: float) -> float:
    """Ensemble-average entropy of a random state minus ``ln N``."""
    ln_sum_d = math.log(float(spec.d.sum()))
    if n == 1:
        return ln_sum_d - shannon_integral(dens)
    if _is_empirical(dens):
        return ln_sum_d + math.log(moment_integral(dens, n)) / (1.0 - n)
    _check_exponent(dens, n)
    return ln_sum_d + _log_moment(dens, n) / (1.0 - n)


def page_correction(spec: ConstraintSpec, dens, n: float) -> float:
    """``Delta S_n``: infinite-temperature entropy minus the random-state average."""
    return inf_temp_entropy(spec, n) - avg_entropy(spec, dens, n)


def page_asymptote(spec: ConstraintSpec, dens: SpectralDensity = None) -> float:
    """Large-``n`` limit of ``Delta S_n``.

    Both entropies tend to minus the log of the largest eigenvalue, so the
    limit is ``ln eps_max - ln(sum d) - ln max_l w_l``. For the blockaded
    chain this is ``ln z_plus - ln(phi + 1)``.
    """
    sc = scaling_constants(spec)
    phi = blockaded_phi(spec)
    if phi is not None:
        eps_max = sc.eps_scale * blockaded_edges(phi)[1]
    else:
        if dens is None:
            dens = build_density(spec, grid=16)
        eps_max = dens.support[1]
    w = _inf_temp_weights(spec)
    return math.log(eps_max) - math.log(sc.sum_d) - math.log(float(w.max()))


def entropy_report(spec: ConstraintSpec, n_values, dens: SpectralDensity = None) -> EntropyReport:
    if dens is None:
        dens = build_density(spec, grid=64)
    mus, avg, inf, delta = [], [], [], []
    for n in n_values:
        mus.append(moment_integral(dens, n))
        a = avg_entropy(spec, dens, n)
        i = inf_temp_entropy(spec, n)
        avg.append(a)
        inf.append(i)
        delta.append(i - a)
    return EntropyReport(
        spec=spec,
        n_values=tuple(n_values),
        mu_n=tuple(mus),
        S_avg_minus_lnN=tuple(avg),
        S_inf_minus_lnN=tuple(inf),
        delta_S=tuple(delta),
        asymptote=page_asymptote(spec, dens),
    )
