"""Sector resolvents and the entanglement density of states.

Raw eigenvalues ``x`` of the unnormalised reduced density matrix (entry
variance ``1/N``) are used internally; a :class:`SpectralDensity` is always
expressed in the rescaled variable ``eps = eps_scale * x`` whose mean is 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linprog

from . import quadrature
from .exceptions import ConvergenceError, EdgeError, ValidationError
from .space import ConstraintSpec, asymptotic_spec, blockaded_phi, scaling_constants

MULTICRITICAL_TOL = 1e-9
DEFAULT_GRID = 2000
DEFAULT_ETA = 1e-6


@dataclass(frozen=True)
class ResolventValue:
    z: complex
    G: np.ndarray
    H: np.ndarray
    Sigma: np.ndarray
    Sigma_prime: np.ndarray


@dataclass(frozen=True)
class SolverOptions:
    """Options for :func:`solve_fixed_point`.

    ``method='newton'`` polishes each continuation level with damped Newton
    steps; ``method='picard'`` uses the plain damped map
    ``G <- (1 - alpha) G + alpha f(G)`` and is only practical away from the
    real axis.
    """

    tol: float = 1e-12
    max_iter: int = 100_000
    alpha: float = 0.5
    method: str = "newton"
    step_ratio: float = 0.5


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """Density of states sampled on a grid in the ``eps`` variable.

    ``p_sector[l]`` is the continuous density of sector ``l`` (its integral
    is ``1 - delta_sector[l]``); ``p_total`` is their ``d``-weighted mean.
    ``cdf`` is the integrated density including the zero-eigenvalue mass.
    ``evaluator(eps)`` returns ``(p_total, p_sector)`` at arbitrary points
    and ``breakpoints`` lists the edges used by the quadrature.
    """

    eps_grid: np.ndarray
    p_total: np.ndarray
    p_sector: np.ndarray
    delta_mass_at_zero: float
    support: tuple
    model: ConstraintSpec
    cdf: np.ndarray
    delta_sector: np.ndarray
    breakpoints: tuple
    singular_zero: bool
    evaluator: Callable = field(repr=False)
    method: str = "closed"

    def __call__(self, eps):
        return self.evaluator(np.asarray(eps, dtype=float))[0]

    def cdf_at(self, eps):
        """Integrated density (including the delta mass) at arbitrary points."""
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        out = np.zeros_like(eps)
        pos = eps >= 0
        order = np.argsort(eps[pos])
        pts = eps[pos][order]
        lo, hi = self.breakpoints[0], self.breakpoints[-1]
        inner = quadrature.cumulative(
            self.__call__, self.breakpoints, np.clip(pts, lo, hi), self.singular_zero
        )
        inner[pts < lo] = 0.0
        vals = np.empty_like(pts)
        vals[order] = inner + self.delta_mass_at_zero
        out[pos] = vals
        return out


# --------------------------------------------------------------------------
# Marchenko-Pastur forms
# --------------------------------------------------------------------------

def mp_density(eps):
    """Balanced Marchenko-Pastur density on ``(0, 4)``."""
    eps = np.asarray(eps, dtype=float)
    out = np.zeros_like(eps)
    inside = (eps > 0) & (eps < 4)
    e = eps[inside]
    out[inside] = np.sqrt((4.0 - e) / e) / (2.0 * np.pi)
    return out if out.ndim else float(out)


def mp_unbalanced(lam, d_left, d_right, x):
    """Density of a single rectangular Gaussian block of relative shape ``d_left x d_right``.

    Returns ``(density, delta_mass, (x_minus, x_plus))`` where the density is
    normalised over the ``d_left`` eigenvalues, so it integrates to
    ``min(d_left, d_right) / d_left``.
    """
    if not lam > 0 or not d_left > 0 or not d_right > 0:
        raise ValidationError("lam, d_left and d_right must be positive")
    if not math.isclose(lam, d_left / d_right, rel_tol=1e-9):
        raise ValidationError(f"lam={lam} differs from d_left/d_right={d_left / d_right}")
    x_lo = (math.sqrt(d_left) - math.sqrt(d_right)) ** 2
    x_hi = (math.sqrt(d_left) + math.sqrt(d_right)) ** 2
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > x_lo) & (x < x_hi) & (x > 0)
    xi = x[inside]
    out[inside] = np.sqrt((x_hi - xi) * (xi - x_lo)) / (2.0 * np.pi * lam * d_right * xi)
    delta = max(0.0, 1.0 - 1.0 / lam)
    return (out if out.ndim else float(out)), delta, (x_lo, x_hi)


def mp_resolvent(z):
    """Closed form ``G(z) = (1 - sqrt(1 - 4/z)) / 2`` on the physical branch."""
    z = np.asarray(z, dtype=complex)
    # sqrt(z) sqrt(z - 4) keeps the cut on [0, 4] only
    return 0.5 * (1.0 - np.sqrt(z) * np.sqrt(z - 4.0) / z)


# --------------------------------------------------------------------------
# Blockaded chain: closed form
# --------------------------------------------------------------------------

def blockaded_edges(phi):
    """Zeros ``(z_minus, z_plus)`` of the cubic's discriminant."""
    if not phi > 0:
        raise ValidationError(f"phi must be positive, got {phi}")
    root = math.sqrt(phi * (phi + 8.0) ** 3)
    base = -phi * phi + 20.0 * phi + 8.0
    return (base - root) / 8.0, (base + root) / 8.0


def blockaded_delta_mass(phi):
    return (1.0 - phi) / (1.0 + phi) if phi < 1 else 0.0


def _cubic_invariants(phi, z):
    z = np.asarray(z, dtype=complex)
    zm, zp = blockaded_edges(phi)
    d0 = 1.0 / phi ** 2 - 3.0 * (phi - 1.0) / (z * phi ** 2)
    d1 = 2.0 / phi ** 3 - 9.0 * (2.0 + phi) / (z * phi ** 3)
    minus27disc = -108.0 * (z - zm) * (z - zp) / (z ** 3 * phi ** 6)
    return d0, d1, minus27disc


def cubic_residual(phi, z, G0):
    """Residual of ``G0`` in the blockaded cubic, scaled by its largest term."""
    z = np.asarray(z, dtype=complex)
    terms = [
        G0 ** 3,
        -2.0 / phi * G0 ** 2,
        (z + phi - 1.0) / (z * phi ** 2) * G0,
        -1.0 / (z * phi ** 2) + 0 * G0,
    ]
    scale = np.max(np.abs(np.stack(terms)), axis=0)
    return np.abs(sum(terms)) / scale


def vieta_roots(phi, z):
    """The three roots of the blockaded cubic, indexed by ``k`` on the last axis.

    Uses ``A = (Delta_1 - sqrt(-27 Delta)) / 2`` with principal roots, except
    that the sign of the square root is flipped wherever that increases
    ``|A|``; this leaves the set of roots unchanged and avoids cancellation.
    """
    d0, d1, m27 = _cubic_invariants(phi, z)
    sq = np.sqrt(m27)
    A = 0.5 * (d1 - sq)
    alt = 0.5 * (d1 + sq)
    A = np.where(np.abs(alt) > np.abs(A), alt, A)
    cr = A ** (1.0 / 3.0)
    omega = np.exp(2j * np.pi * np.arange(3) / 3.0)
    c = cr[..., None] * omega
    return 2.0 / (3.0 * phi) - (c + d0[..., None] / c) / 3.0


def g1_from_g0(phi, G0):
    """Sector-1 resolvent from ``1/G1 = 1/G0 + 1/(1 - phi G0)``."""
    return G0 * (1.0 - phi * G0) / (1.0 + (1.0 - phi) * G0)


def _continuation_heights(y_start, y_end, ratio):
    steps = np.ceil(np.log(np.max(y_start / y_end)) / -np.log(ratio)).astype(int)
    steps = max(int(steps), 1)
    t = np.arange(1, steps + 1)[:, None] / steps
    return y_start[None, :] * (y_end / y_start)[None, :] ** t


def blockaded_resolvent(phi, z, ratio=0.5):
    """Physical-branch ``(G0, G1)`` of the blockaded chain.

    Real ``z`` is interpreted as ``x + i0``. The branch is followed from
    ``Re z + i max(10, |z|)``, where it is the root closest to ``1/z``,
    down to the target by geometric steps in ``Im z``, keeping at each
    step the Vieta root nearest the previous one.
    """
    if not phi > 0:
        raise ValidationError(f"phi must be positive, got {phi}")
    z_in = np.asarray(z)
    scalar = z_in.ndim == 0
    z_arr = np.atleast_1d(z_in).astype(complex)
    x, y = z_arr.real, z_arr.imag
    if np.any(y < 0):
        raise ValidationError("blockaded_resolvent needs Im z >= 0")
    zm, zp = blockaded_edges(phi)
    on_axis = y == 0
    for edge in (0.0, zm, zp):
        if np.any(on_axis & (x == edge)):
            raise EdgeError(f"z={edge} is a branch point; use a one-sided limit")
    scale = np.maximum(1.0, np.abs(x))
    y_floor = np.where(on_axis, 1e-14 * scale, y)
    y0 = np.maximum(10.0, np.abs(z_arr))
    y0 = np.maximum(y0, y_floor)
    z0 = x + 1j * y0
    roots = vieta_roots(phi, z0)
    pick = np.argmin(np.abs(roots - (1.0 / z0)[:, None]), axis=1)
    g = roots[np.arange(z0.size), pick]
    heights = _continuation_heights(y0, y_floor, ratio)
    final = [heights[i] for i in range(heights.shape[0])]
    final.append(np.where(on_axis, 0.0, y))
    for h in final:
        zz = x + 1j * h
        roots = vieta_roots(phi, zz)
        pick = np.argmin(np.abs(roots - g[:, None]), axis=1)
        g = roots[np.arange(zz.size), pick]
    G0 = g
    G1 = g1_from_g0(phi, G0)
    if scalar:
        return complex(G0[0]), complex(G1[0])
    return G0.reshape(z_in.shape), G1.reshape(z_in.shape)


def blockaded_p0_explicit(phi, x):
    """Sector-0 density in raw ``x`` from the explicit cube-root expression."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    zm, zp = blockaded_edges(phi)
    inside = (x > max(0.0, zm)) & (x < zp)
    xi = x[inside]
    d0 = 1.0 / phi ** 2 - 3.0 * (phi - 1.0) / (xi * phi ** 2)
    d1 = 2.0 / phi ** 3 - 9.0 * (2.0 + phi) / (xi * phi ** 3)
    m27 = -108.0 * (xi - zm) * (xi - zp) / (xi ** 3 * phi ** 6)
    A = np.abs(0.5 * (d1 - np.sqrt(m27)))
    c = np.cbrt(A)
    out[inside] = math.sin(math.pi / 3.0) / (3.0 * math.pi) * (c - d0 / c)
    return out


def _blockaded_axis_resolvent(phi, x):
    """``(G0, G1)`` at real ``x`` strictly inside the support.

    On the support the cubic has one real root and a conjugate pair; the
    physical value is the member of the pair with negative imaginary part.
    """
    roots = vieta_roots(phi, np.asarray(x, dtype=complex))
    G0 = roots[np.arange(roots.shape[0]), np.argmin(roots.imag, axis=1)]
    return G0, g1_from_g0(phi, G0)


def _blockaded_sector_densities(phi, x):
    x = np.asarray(x, dtype=float)
    zm, zp = blockaded_edges(phi)
    p = np.zeros((2,) + x.shape)
    inside = (x > max(0.0, zm)) & (x < zp)
    if np.any(inside):
        _, G1 = _blockaded_axis_resolvent(phi, x[inside])
        p[0, inside] = blockaded_p0_explicit(phi, x[inside])
        p[1, inside] = np.maximum(-G1.imag / np.pi, 0.0)
    return p


# --------------------------------------------------------------------------
# General self-consistency solver
# --------------------------------------------------------------------------

def _fp_map(spec, z, G):
    C = spec.C.astype(float)
    T = G @ (C * spec.d[:, None])            # Sigma'_r = sum_l C_lr d_l G_l
    H = 1.0 / (1.0 - T)
    S = H @ (C * spec.d_prime[None, :]).T    # Sigma_l = sum_r C_lr d'_r H_r
    F = 1.0 / (z[:, None] - S)
    return F, H, S, T


def _fp_jacobian(spec, F, H):
    C = spec.C.astype(float)
    # dF_l/dG_k = F_l^2 sum_r C_lr d'_r H_r^2 C_kr d_k
    inner = (C * spec.d_prime[None, :])[None, :, :] * (H ** 2)[:, None, :]
    M = inner @ (C * spec.d[:, None]).T[None, :, :]
    return (F ** 2)[:, :, None] * M


def _relres(G, F):
    return np.max(np.abs(G - F) / np.maximum(1.0, np.abs(G)), axis=1)


def _converge(spec, z, G, opts, budget):
    """Polish ``G`` at fixed ``z``; returns (G, residual, iterations used)."""
    n = G.shape[1]
    eye = np.eye(n)
    used = 0
    F, H, _, _ = _fp_map(spec, z, G)
    res = _relres(G, F)
    alpha = np.full(z.shape, opts.alpha)
    while np.any(res > opts.tol) and used < budget:
        used += 1
        if opts.method == "newton":
            J = eye[None] - _fp_jacobian(spec, F, H)
            step = np.linalg.solve(J, (G - F)[..., None])[..., 0]
            trial = G - step
        else:
            trial = (1.0 - alpha[:, None]) * G + alpha[:, None] * F
        Ft, Ht, _, _ = _fp_map(spec, z, trial)
        rt = _relres(trial, Ft)
        worse = rt > res
        if opts.method == "newton":
            # damping: fall back to a half step where the full step overshoots
            if np.any(worse):
                half = G - 0.5 * step
                Fh, Hh, _, _ = _fp_map(spec, z, half)
                rh = _relres(half, Fh)
                trial = np.where(worse[:, None], half, trial)
                Ft = np.where(worse[:, None], Fh, Ft)
                Ht = np.where(worse[:, None], Hh, Ht)
                rt = np.where(worse, rh, rt)
        else:
            alpha = np.where(worse, alpha * 0.5, alpha)
        G, F, H, res = trial, Ft, Ht, rt
    return G, res, used


def _solve_batch(spec, z, opts=None):
    """Vectorised continuation solve; returns ``(G, H)`` with shapes (P, n_L), (P, n_R)."""
    opts = opts or SolverOptions()
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z.imag <= 0):
        raise ValidationError("the self-consistency solver needs Im z > 0")
    y0 = np.maximum(10.0, np.abs(z))
    y0 = np.maximum(y0, z.imag)
    z0 = z.real + 1j * y0
    G = np.repeat((1.0 / z0)[:, None], spec.n_left, axis=1)
    heights = _continuation_heights(y0, z.imag, opts.step_ratio)
    used_total = 0
    levels = [y0] + [heights[i] for i in range(heights.shape[0])]
    per_level = max(1, opts.max_iter // len(levels))
    for h in levels:
        zz = z.real + 1j * h
        G, res, used = _converge(spec, zz, G, opts, per_level)
        used_total += used
        if np.any(res > opts.tol):
            bad = int(np.argmax(res))
            raise ConvergenceError(
                f"no convergence at z={zz[bad]:.6g} (residual {res[bad]:.3g})",
                residual=float(res[bad]),
                z=complex(zz[bad]),
            )
    _, H, _, _ = _fp_map(spec, z, G)
    return G, H


def solve_fixed_point(spec: ConstraintSpec, z: complex, opts: Optional[SolverOptions] = None) -> ResolventValue:
    """Solve the sector self-consistency equations at a single ``z`` with ``Im z > 0``."""
    G, H = _solve_batch(spec, [z], opts)
    C = spec.C.astype(float)
    sigma = (C * spec.d_prime[None, :]) @ H[0]
    sigma_p = (C * spec.d[:, None]).T @ G[0]
    return ResolventValue(complex(z), G[0], H[0], sigma, sigma_p)


def _eta_profile(x, eta):
    # shrink eta near x = 0 so the smearing stays small relative to x
    return np.minimum(eta, np.maximum(1e-3 * np.abs(x), 1e-13))


def fixed_point_sector_densities(spec, x, eta=DEFAULT_ETA, opts=None):
    """Sector densities at raw ``x`` by Richardson extrapolation of ``G(x + i eta)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = _eta_profile(x, eta)
    G1, _ = _solve_batch(spec, x + 1j * h, opts)
    G2, _ = _solve_batch(spec, x + 2j * h, opts)
    G = 2.0 * G1 - G2
    return np.maximum(-G.imag / np.pi, 0.0).T


def generic_rank_fraction(spec: ConstraintSpec) -> float:
    """Generic rank of the block amplitude matrix, per unit ``N``.

    Equals the maximum flow from left sectors (capacity ``d_l``) to right
    sectors (capacity ``d'_r``) through the allowed pairs.
    """
    pairs = np.argwhere(spec.C == 1)
    nl, nr = spec.n_left, spec.n_right
    A = np.zeros((nl + nr, len(pairs)))
    for e, (l, r) in enumerate(pairs):
        A[l, e] = 1.0
        A[nl + r, e] = 1.0
    b = np.concatenate([spec.d, spec.d_prime])
    res = linprog(-np.ones(len(pairs)), A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    return float(-res.fun)


def zero_mass(spec: ConstraintSpec) -> float:
    """Weight of exact zero eigenvalues of the reduced density matrix."""
    return max(0.0, 1.0 - generic_rank_fraction(spec) / float(spec.d.sum()))


# --------------------------------------------------------------------------
# Densities
# --------------------------------------------------------------------------

def _chebyshev_grid(lo, hi, n, cubic):
    s = (np.arange(n) + 0.5) / n
    eps, _ = quadrature.map_interval(lo, hi, s, cubic)
    return eps


def _make_density(spec, sector_eps, support, delta_sector, breakpoints, singular_zero, grid, method):
    sc = scaling_constants(spec)
    d = spec.d

    def _eval(eps):
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        ps = sector_eps(eps)
        return (d @ ps) / sc.sum_d, ps

    if grid is None:
        grid = DEFAULT_GRID
    if np.isscalar(grid):
        eps_grid = _chebyshev_grid(support[0], support[1], int(grid), singular_zero and support[0] == 0)
    else:
        eps_grid = np.sort(np.asarray(grid, dtype=float))
    p_total, p_sector = _eval(eps_grid)
    delta_total = float(d @ delta_sector / sc.sum_d)
    inner = quadrature.cumulative(
        lambda e: _eval(e)[0], breakpoints, np.clip(eps_grid, breakpoints[0], breakpoints[-1]), singular_zero
    )
    inner[eps_grid < breakpoints[0]] = 0.0
    cdf = np.where(eps_grid >= 0, inner + delta_total, 0.0)
    return SpectralDensity(
        eps_grid=eps_grid,
        p_total=p_total,
        p_sector=p_sector,
        delta_mass_at_zero=delta_total,
        support=(float(support[0]), float(support[1])),
        model=spec,
        cdf=cdf,
        delta_sector=np.asarray(delta_sector, dtype=float),
        breakpoints=tuple(float(b) for b in breakpoints),
        singular_zero=bool(singular_zero),
        evaluator=_eval,
        method=method,
    )


def blockaded_density(phi, grid=None) -> SpectralDensity:
    """Closed-form density of the blockaded chain in the ``eps`` variable."""
    if not phi > 0:
        raise ValidationError(f"phi must be positive, got {phi}")
    spec = asymptotic_spec("blockaded", phi=phi)
    s = scaling_constants(spec).eps_scale
    zm, zp = blockaded_edges(phi)
    lo = s * max(0.0, zm)
    if abs(phi - 1.0) <= MULTICRITICAL_TOL:
        lo = 0.0
    support = (lo, s * zp)

    def sector_eps(eps):
        return _blockaded_sector_densities(phi, eps / s) / s

    delta = np.array([0.0, max(0.0, 1.0 - phi)])
    return _make_density(spec, sector_eps, support, delta, support, lo == 0.0, grid, "closed")


def _single_block_density(spec, grid):
    d_l, d_r = float(spec.d[0]), float(spec.d_prime[0])
    s = scaling_constants(spec).eps_scale
    _, delta, (x_lo, x_hi) = mp_unbalanced(d_l / d_r, d_l, d_r, 0.0)

    def sector_eps(eps):
        return mp_unbalanced(d_l / d_r, d_l, d_r, eps / s)[0][None, :] / s

    support = (s * x_lo, s * x_hi)
    return _make_density(spec, sector_eps, support, np.array([delta]), support, x_lo == 0.0, grid, "closed")


def diagonal_density(spec: ConstraintSpec, grid=None) -> SpectralDensity:
    """Density for one-to-one sector constraints: a weighted sum of rectangular MP laws."""
    if not spec.is_diagonal:
        raise ValidationError("diagonal_density needs a one-to-one constraint matrix")
    s = scaling_constants(spec).eps_scale
    partner = np.argmax(spec.C, axis=1)
    dl = spec.d
    dr = spec.d_prime[partner]
    deltas, edges = [], []
    for a, b in zip(dl, dr):
        _, delta, e = mp_unbalanced(a / b, a, b, 0.0)
        deltas.append(delta)
        edges.append(e)

    def sector_eps(eps):
        x = eps / s
        return np.stack([mp_unbalanced(a / b, a, b, x)[0] for a, b in zip(dl, dr)]) / s

    bps = sorted({0.0} | {s * v for e in edges for v in e})
    lo = min(s * e[0] for e in edges)
    support = (lo, max(s * e[1] for e in edges))
    bps = [b for b in bps if b >= lo]
    singular = any(e[0] == 0.0 for e in edges)
    return _make_density(spec, sector_eps, support, np.array(deltas), bps, singular, grid, "closed")


def _fixed_point_density(spec, grid, eta, opts):
    sc = scaling_constants(spec)
    s = sc.eps_scale

    def sector_x(x):
        return fixed_point_sector_densities(spec, x, eta, opts)

    # upper bound on the spectrum: (sqrt(max row weight) + sqrt(max column weight))^2
    rows = (spec.C * spec.d_prime[None, :]).sum(axis=1).max()
    cols = (spec.C * spec.d[:, None]).sum(axis=0).max()
    bound = 1.5 * (math.sqrt(rows) + math.sqrt(cols)) ** 2
    scan = np.linspace(bound / 2000, bound, 2000)
    p_scan = spec.d @ sector_x(scan)
    thresh = 1e-9 * p_scan.max()
    on = np.nonzero(p_scan > thresh)[0]
    if on.size == 0:
        raise ConvergenceError("no continuous spectrum found", residual=float("nan"))

    def total(x):
        return float(spec.d @ sector_x(np.array([x]))[:, 0])

    def bisect(a, b, inside_at_a):
        for _ in range(60):
            m = 0.5 * (a + b)
            if (total(m) > thresh) == inside_at_a:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    top = scan[on[-1]]
    x_hi = bisect(top, top + bound / 2000, True)
    if on[0] == 0:
        x_lo = 0.0
    else:
        first = scan[on[0]]
        x_lo = bisect(first, scan[on[0] - 1], True)
    delta_total = zero_mass(spec)
    delta_sector = np.zeros(spec.n_left)
    if delta_total > 0:
        y = 1e-8 * bound
        g1, _ = _solve_batch(spec, [1j * y], opts)
        g4, _ = _solve_batch(spec, [4j * y], opts)
        m1 = (1j * y * g1[0]).real
        m4 = (4j * y * g4[0]).real
        delta_sector = np.clip(2.0 * m1 - m4, 0.0, 1.0)
        weight = spec.d @ delta_sector / sc.sum_d
        if weight > 0:
            delta_sector *= delta_total / weight

    def sector_eps(eps):
        return sector_x(eps / s) / s

    support = (s * x_lo, s * x_hi)
    return _make_density(spec, sector_eps, support, delta_sector, support, x_lo == 0.0, grid, "fixedpoint")


def density(spec: ConstraintSpec, grid=None, method: str = "closed", eta: float = DEFAULT_ETA,
            opts: Optional[SolverOptions] = None) -> SpectralDensity:
    """Spectral density of ``spec`` on ``grid`` (int = Chebyshev point count, or explicit eps values).

    ``method='closed'`` is available for the blockaded family (balanced),
    single-block models and diagonal constraints; ``method='fixedpoint'``
    works for any model and assumes a single support interval.
    """
    if method == "closed":
        phi = blockaded_phi(spec)
        if phi is not None:
            return blockaded_density(phi, grid)
        if spec.C.size == 1:
            return _single_block_density(spec, grid)
        if spec.is_diagonal:
            return diagonal_density(spec, grid)
        raise ValidationError(f"no closed form for {spec.name}; use method='fixedpoint'")
    if method == "fixedpoint":
        return _fixed_point_density(spec, grid, eta, opts)
    raise ValidationError(f"unknown method {method!r}")


# --------------------------------------------------------------------------
# Phases and exponents
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseInfo:
    phase: str
    z_minus: float
    z_plus: float
    delta_mass: float
    exponent: Optional[float]


def fit_small_eps_exponent(dens: SpectralDensity, window=(1e-6, 1e-3), points: int = 50) -> float:
    """Least-squares slope of ``log p`` against ``log eps`` over a log-spaced window."""
    lo, hi = window
    if not 0 < lo < hi:
        raise ValidationError(f"invalid window {window}")
    if lo < dens.support[0] or hi > dens.support[1]:
        raise ValidationError(f"window {window} lies outside the support {dens.support}")
    eps = np.geomspace(lo, hi, points)
    p = dens(eps)
    if np.any(p <= 0):
        raise ValidationError("density vanishes inside the fit window")
    slope, _ = np.polyfit(np.log(eps), np.log(p), 1)
    return float(slope)


def classify_phase(phi) -> PhaseInfo:
    """Entanglement phase of the blockaded family at relative dimension ``phi``."""
    if not phi > 0:
        raise ValidationError(f"phi must be positive, got {phi}")
    zm, zp = blockaded_edges(phi)
    if abs(phi - 1.0) <= MULTICRITICAL_TOL:
        phase = "multicritical"
    elif phi > 1:
        phase = "MP"
    else:
        phase = "gapped"
    exponent = None
    if phase != "gapped":
        exponent = fit_small_eps_exponent(blockaded_density(phi, grid=16))
    return PhaseInfo(phase, zm, zp, blockaded_delta_mass(phi), exponent)
