"""Monte Carlo sampling of Gaussian random states in block-constrained spaces.

Each sample draws the amplitude matrix ``psi`` with independent complex
Gaussian entries of variance ``1/N`` (split evenly between real and
imaginary parts) on the allowed blocks and exact zeros elsewhere. Sample
``i`` uses a Philox stream keyed by ``(seed, i)`` so results do not depend
on how samples are scheduled.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg.blas import zherk

from .exceptions import SizeError, ValidationError
from .space import ConstraintSpec, FiniteConstrainedSpace

DEFAULT_CAP = 4096
ZERO_THRESHOLD = 1e-10


@dataclass(frozen=True)
class SampleConfig:
    """What to sample.

    ``spec`` may be an asymptotic model, whose sector dimensions become
    ``round(N d_l)``, or an enumerated chain, whose integer dimensions are
    used directly (``N`` is then ignored in favour of ``N_ref``). With
    ``concrete=True`` an enumerated chain is realised on its actual
    configurations instead of as sorted blocks.
    """

    spec: Union[ConstraintSpec, FiniteConstrainedSpace]
    N: int = 1000
    seed: int = 0
    samples: int = 1
    cap: int = DEFAULT_CAP
    concrete: bool = False

    @property
    def scale(self) -> int:
        if isinstance(self.spec, FiniteConstrainedSpace):
            return int(self.spec.N_ref)
        return int(self.N)

    def dims(self):
        """Left and right sector dimensions as integer arrays."""
        if isinstance(self.spec, FiniteConstrainedSpace):
            return np.asarray(self.spec.D), np.asarray(self.spec.D_prime)
        if self.N < 1:
            raise ValidationError(f"N must be positive, got {self.N}")
        D = np.rint(self.N * self.spec.d).astype(np.int64)
        Dp = np.rint(self.N * self.spec.d_prime).astype(np.int64)
        if np.any(D < 1) or np.any(Dp < 1):
            raise SizeError(f"N={self.N} leaves an empty sector")
        return D, Dp


@dataclass(frozen=True, eq=False)
class EmpiricalSpectrum:
    """Pooled ``eps`` values, one row per sample in ``per_sample``."""

    eps_values: np.ndarray
    per_sample: np.ndarray
    zero_fraction: float
    traces: np.ndarray
    dim: int


def _rng(seed, index):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _threads():
    try:
        return max(1, int(os.environ.get("ENTSPEC_THREADS", "1")))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    items = list(items)
    workers = _threads()
    if workers == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _mask(cfg):
    spec = cfg.spec
    if cfg.concrete:
        if not isinstance(spec, FiniteConstrainedSpace):
            raise ValidationError("concrete sampling needs an enumerated chain")
        left = np.sort(np.concatenate(spec.left_states))
        right = np.sort(np.concatenate(spec.right_states))
        lbit = (left >> (spec.L - 1)) & 1
        rbit = right & 1
        return spec.C[lbit[:, None], rbit[None, :]].astype(bool)
    D, Dp = cfg.dims()
    return np.repeat(np.repeat(np.asarray(spec.C, dtype=bool), D, axis=0), Dp, axis=1)


def amplitude_matrix(cfg: SampleConfig, index: int = 0) -> np.ndarray:
    """The ``index``-th sampled amplitude matrix ``psi`` (rows: left states)."""
    mask = _mask(cfg)
    if mask.shape[0] > cfg.cap or mask.shape[1] > cfg.cap:
        raise SizeError(f"dimension {mask.shape} exceeds the cap {cfg.cap}")
    rng = _rng(cfg.seed, index)
    sigma = 1.0 / math.sqrt(2.0 * cfg.scale)
    re = rng.standard_normal(mask.shape)
    im = rng.standard_normal(mask.shape)
    psi = (re + 1j * im) * sigma
    psi[~mask] = 0.0
    return psi


def raw_eigenvalues(psi: np.ndarray, method: str = "svd") -> np.ndarray:
    """Eigenvalues of ``psi psi^dagger`` (one per row), ascending.

    ``'svd'`` squares singular values and is accurate near zero;
    ``'gram'`` diagonalises the smaller Gram matrix and is faster.
    """
    rows, cols = psi.shape
    if method == "svd":
        x = np.linalg.svd(psi, compute_uv=False) ** 2
    elif method == "gram":
        gram = psi @ psi.conj().T if rows <= cols else psi.conj().T @ psi
        x = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
    else:
        raise ValidationError(f"unknown method {method!r}")
    if x.size < rows:
        x = np.concatenate([np.zeros(rows - x.size), x])
    return np.sort(x)


def sample_spectrum(cfg: SampleConfig, method: str = "svd") -> EmpiricalSpectrum:
    """Entanglement spectra of ``cfg.samples`` random states, each normalised to unit mean."""
    if cfg.samples < 1:
        raise ValidationError("samples must be at least 1")

    def one(i):
        x = raw_eigenvalues(amplitude_matrix(cfg, i), method)
        tr = x.sum()
        eps = x.size * x / tr
        # structural zeros come out at rounding level; make them exact
        eps[eps < ZERO_THRESHOLD * x.size] = 0.0
        return eps, tr

    out = _map_ordered(one, range(cfg.samples))
    per = np.stack([e for e, _ in out])
    traces = np.array([t for _, t in out])
    dim = per.shape[1]
    zero = float(np.mean(per == 0.0))
    return EmpiricalSpectrum(
        eps_values=np.sort(per.ravel()),
        per_sample=per,
        zero_fraction=zero,
        traces=traces,
        dim=dim,
    )


def empirical_cdf_distance(emp: EmpiricalSpectrum, dens) -> float:
    """Kolmogorov distance between the pooled sample and the analytic integrated DOS.

    Both one-sided limits of the empirical step function are compared at
    every sample point; the analytic CDF includes the mass at zero.
    """
    v = np.sort(np.asarray(emp.eps_values, dtype=float))
    m = v.size
    uniq, first = np.unique(v, return_index=True)
    last = np.concatenate([first[1:], [m]])
    F = dens.cdf_at(uniq)
    # left limit of the analytic CDF drops the atom at zero
    F_left = np.where(uniq == 0.0, 0.0, F)
    upper = last / m
    lower = first / m
    return float(max(np.max(np.abs(upper - F)), np.max(np.abs(F_left - lower))))


def _gram_upper(psi):
    """Upper triangle of ``psi psi^dagger`` (or its conjugate) on the smaller side.

    ``zherk`` leaves the strict lower triangle zero.
    """
    rows, cols = psi.shape
    a = np.ascontiguousarray(psi if rows <= cols else psi.T)
    # a.T is Fortran ordered, so trans=2 gives conj(a a^dagger) without a copy
    return zherk(1.0, a.T, trans=2)


def _power_traces(psi, n_values):
    """``Tr W^n`` for ``n <= 6`` from at most two further products of ``W``."""
    U = _gram_upper(psi)
    diag = np.diagonal(U).real
    top = max(n_values)
    tr = {1: float(diag.sum()), 2: float(2.0 * np.vdot(U, U).real - np.dot(diag, diag))}
    if top >= 3:
        W = U + np.triu(U, 1).conj().T
        W2 = W @ W
        tr[3] = float(np.vdot(W2, W).real)
        tr[4] = float(np.vdot(W2, W2).real)
        if top >= 5:
            W3 = W2 @ W
            tr[5] = float(np.vdot(W3, W2).real)
            tr[6] = float(np.vdot(W3, W3).real)
    return np.array([tr[n] for n in n_values])


def _trace_powers(psi, n_values, method):
    if method == "power":
        return _power_traces(psi, n_values)
    x = raw_eigenvalues(psi, method)
    return np.array([np.sum(x ** n) for n in n_values])


def moment_estimates(cfg: SampleConfig, n_values, method: str = "gram"):
    """Per-order sample mean and standard error of ``Tr rho^n / N``.

    Traces use the raw Gaussian normalisation (no per-sample trace
    rescaling). ``method`` is ``'gram'`` or ``'svd'`` (eigenvalues) or
    ``'power'`` (traces of matrix powers, cheapest for low orders). Returns ``(means, stderrs, samples)`` where ``samples`` has
    shape ``(cfg.samples, len(n_values))``. With a single sample the
    standard error is NaN.
    """
    n_values = list(n_values)
    if any(n > 6 or n < 1 for n in n_values):
        raise ValidationError("moment orders must lie in 1..6")
    if method not in ("gram", "svd", "power"):
        raise ValidationError(f"unknown method {method!r}")
    vals = _map_ordered(lambda i: _trace_powers(amplitude_matrix(cfg, i), n_values, method), range(cfg.samples))
    vals = np.stack(vals) / cfg.scale
    mean = vals.mean(axis=0)
    if cfg.samples > 1:
        err = vals.std(axis=0, ddof=1) / math.sqrt(cfg.samples)
    else:
        err = np.full(len(n_values), np.nan)
    return mean, err, vals


def moment_estimate(cfg: SampleConfig, n: int, method: str = "gram"):
    mean, err, _ = moment_estimates(cfg, [n], method)
    return float(mean[0]), float(err[0])


@dataclass(frozen=True)
class SelfAveragingScan:
    N: tuple
    mean: tuple
    rel_std: tuple
    slope: float


def self_averaging_scan(spec, n: int, N_list, samples: int, seed: int = 0, method: str = "power") -> SelfAveragingScan:
    """Relative standard deviation of ``Tr rho^n`` against ``N`` and its log-log slope."""
    N_list = [int(v) for v in N_list]
    if N_list != sorted(N_list):
        raise ValidationError("N_list must be ascending")
    means, rels = [], []
    for k, N in enumerate(N_list):
        cfg = SampleConfig(spec, N=N, seed=seed + 7919 * k, samples=samples)
        _, _, vals = moment_estimates(cfg, [n], method)
        col = vals[:, 0]
        means.append(float(col.mean()))
        rels.append(float(col.std(ddof=1) / col.mean()) if samples > 1 else float("nan"))
    rel = np.array(rels)
    if len(N_list) >= 2 and np.all(np.isfinite(rel)) and np.all(rel > 0):
        slope = float(np.polyfit(np.log(N_list), np.log(rel), 1)[0])
    else:
        slope = float("nan")
    return SelfAveragingScan(tuple(N_list), tuple(means), tuple(rels), slope)
