"""scikit-learn style wrappers.

:class:`EntanglementDOS` fits the analytic density of a constraint model
and then scores or transforms eigenvalue samples; :class:`RandomStateSampler`
draws the Monte Carlo counterpart. Both follow the usual estimator
contract (constructor only stores parameters, fitted state ends in ``_``).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import diagrams, entropy, montecarlo, resolvent
from .exceptions import ValidationError
from .space import GOLDEN, asymptotic_spec, scaling_constants

MODELS = ("blockaded", "blockaded-unbalanced", "unconstrained", "unbalanced", "diagonal-sz")


def build_spec(model="blockaded", phi=GOLDEN, lam=1.0, L=None, M=None):
    """Constraint model from flat keyword parameters (CLI and estimator helper)."""
    if model not in MODELS:
        raise ValidationError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    if model == "diagonal-sz":
        if L is None or M is None:
            raise ValidationError("diagonal-sz needs both L and M")
        return asymptotic_spec("diagonal_sz", L=L, M=M)
    if model == "unconstrained":
        return asymptotic_spec("unconstrained", lam=lam)
    if model == "unbalanced":
        return asymptotic_spec("unbalanced", lam=lam)
    if model == "blockaded":
        return asymptotic_spec("blockaded", phi=phi)
    return asymptotic_spec("blockaded_unbalanced", phi=phi, lam=lam)


def _eps_column(X):
    X = check_array(X, ensure_2d=False, dtype=float, ensure_all_finite=True)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single column of eps values, got shape {X.shape}")
        X = X[:, 0]
    return X


class EntanglementDOS(TransformerMixin, BaseEstimator):
    """Analytic entanglement density of states for a constraint model.

    Parameters
    ----------
    model : str
        One of ``blockaded``, ``blockaded-unbalanced``, ``unconstrained``,
        ``unbalanced`` or ``diagonal-sz``.
    phi, lam : float
        Relative sector dimension and imbalance ratio.
    L, M : int, optional
        Chain length and magnetisation for ``diagonal-sz``.
    method : {'closed', 'fixedpoint'}
    grid : int
        Number of Chebyshev grid points for the tabulated density.

    Examples
    --------
    >>> dos = EntanglementDOS(phi=1.0).fit()
    >>> dos.phase_
    'multicritical'
    """

    def __init__(self, model="blockaded", phi=GOLDEN, lam=1.0, L=None, M=None,
                 method="closed", grid=2000, eta=resolvent.DEFAULT_ETA):
        self.model = model
        self.phi = phi
        self.lam = lam
        self.L = L
        self.M = M
        self.method = method
        self.grid = grid
        self.eta = eta

    def fit(self, X=None, y=None):
        """Build the density. ``X``, if given, is an eigenvalue sample kept for scoring."""
        self.spec_ = build_spec(self.model, self.phi, self.lam, self.L, self.M)
        self.scaling_ = scaling_constants(self.spec_)
        self.density_ = resolvent.density(self.spec_, grid=self.grid, method=self.method, eta=self.eta)
        self.support_ = self.density_.support
        self.delta_mass_ = self.density_.delta_mass_at_zero
        self.phase_ = None
        if resolvent.blockaded_phi(self.spec_) is not None:
            self.phase_ = resolvent.classify_phase(self.phi).phase
        if X is not None:
            self.train_distance_ = self.score(X) * -1.0
        return self

    def predict(self, X):
        """Total density ``p(eps)`` at each sample."""
        check_is_fitted(self, "density_")
        return self.density_(_eps_column(X))

    def score_samples(self, X):
        """Log density; ``-inf`` outside the support."""
        with np.errstate(divide="ignore"):
            return np.log(self.predict(X))

    def transform(self, X):
        """Columns ``p_total, p_sector_0, ..., cdf`` evaluated at ``X``."""
        check_is_fitted(self, "density_")
        eps = _eps_column(X)
        total, sectors = self.density_.evaluator(eps)
        cdf = self.density_.cdf_at(eps)
        return np.column_stack([total, sectors.T, cdf])

    def score(self, X, y=None):
        """Negative Kolmogorov distance between the sample ``X`` and the fitted CDF."""
        check_is_fitted(self, "density_")
        emp = montecarlo.EmpiricalSpectrum(
            eps_values=np.sort(_eps_column(X)), per_sample=None, zero_fraction=float("nan"),
            traces=None, dim=0,
        )
        return -montecarlo.empirical_cdf_distance(emp, self.density_)

    def moments(self, n_values):
        """``(planar, quadrature)`` normalised moments for each order."""
        check_is_fitted(self, "density_")
        planar = np.array([diagrams.normalized_moment(self.spec_, n) for n in n_values])
        quad = np.array([entropy.moment_integral(self.density_, n) for n in n_values])
        return planar, quad

    def entropy_report(self, n_values=(1, 2, 3)):
        check_is_fitted(self, "density_")
        return entropy.entropy_report(self.spec_, n_values, self.density_)


class RandomStateSampler(BaseEstimator):
    """Monte Carlo entanglement spectra of Gaussian random states.

    ``fit`` draws ``samples`` states at scale ``N``; ``transform`` returns
    the pooled ``eps`` values as a column.
    """

    def __init__(self, model="blockaded", phi=GOLDEN, lam=1.0, L=None, M=None,
                 N=1000, samples=1, seed=0, svd_method="svd"):
        self.model = model
        self.phi = phi
        self.lam = lam
        self.L = L
        self.M = M
        self.N = N
        self.samples = samples
        self.seed = seed
        self.svd_method = svd_method

    def fit(self, X=None, y=None):
        self.spec_ = build_spec(self.model, self.phi, self.lam, self.L, self.M)
        self.config_ = montecarlo.SampleConfig(self.spec_, N=self.N, seed=self.seed, samples=self.samples)
        self.spectrum_ = montecarlo.sample_spectrum(self.config_, method=self.svd_method)
        self.zero_fraction_ = self.spectrum_.zero_fraction
        return self

    def transform(self, X=None):
        check_is_fitted(self, "spectrum_")
        return self.spectrum_.eps_values[:, None]

    def fit_transform(self, X=None, y=None):
        return self.fit(X, y).transform(X)
