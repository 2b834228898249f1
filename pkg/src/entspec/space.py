"""Constrained Hilbert-space models.

Two descriptions are provided. :class:`ConstraintSpec` is the asymptotic
model: a binary compatibility matrix ``C`` between left and right boundary
sectors together with the relative sector dimensions ``d`` and ``d_prime``.
:class:`FiniteConstrainedSpace` is a concrete enumerated half chain with
integer sector dimensions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import SizeError, ValidationError

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0

MAX_CHAIN_LENGTH = 30


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ConstraintSpec:
    """Asymptotic constraint model ``(C, d, d')``.

    Parameters
    ----------
    name : str
        Free-form label.
    C : array_like of {0, 1}, shape (n_L, n_R)
        ``C[l, r] == 1`` iff left sector ``l`` and right sector ``r`` may
        coexist across the cut.
    d : array_like, shape (n_L,)
        Relative dimensions of the left sectors.
    d_prime : array_like, shape (n_R,)
        Relative dimensions of the right sectors.
    """

    name: str
    C: np.ndarray
    d: np.ndarray
    d_prime: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C))
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        dp = np.atleast_1d(np.asarray(self.d_prime, dtype=float))
        if C.ndim != 2 or d.ndim != 1 or dp.ndim != 1:
            raise ValidationError("C must be 2-D and d, d_prime 1-D")
        if C.shape != (d.size, dp.size):
            raise ValidationError(
                f"C has shape {C.shape}, expected ({d.size}, {dp.size})"
            )
        if not np.all((C == 0) | (C == 1)):
            raise ValidationError("C must contain only 0 and 1")
        C = C.astype(np.int8)
        if np.any(C.sum(axis=1) == 0) or np.any(C.sum(axis=0) == 0):
            raise ValidationError("C has an all-zero row or column")
        for label, v in (("d", d), ("d_prime", dp)):
            if not np.all(np.isfinite(v)) or np.any(v <= 0):
                raise ValidationError(f"{label} must be strictly positive and finite")
        object.__setattr__(self, "C", _frozen(C, np.int8))
        object.__setattr__(self, "d", _frozen(d, float))
        object.__setattr__(self, "d_prime", _frozen(dp, float))

    @property
    def n_left(self) -> int:
        return self.d.size

    @property
    def n_right(self) -> int:
        return self.d_prime.size

    @property
    def is_diagonal(self) -> bool:
        """True when every left sector has exactly one partner and vice versa."""
        C = self.C
        return bool(np.all(C.sum(axis=1) == 1) and np.all(C.sum(axis=0) == 1))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "C": self.C.tolist(),
            "d": self.d.tolist(),
            "d_prime": self.d_prime.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConstraintSpec":
        return cls(data["name"], data["C"], data["d"], data["d_prime"])

    def __repr__(self):
        return (
            f"ConstraintSpec(name={self.name!r}, C={self.C.tolist()}, "
            f"d={self.d.tolist()}, d_prime={self.d_prime.tolist()})"
        )


@dataclass(frozen=True, eq=False)
class FiniteConstrainedSpace:
    """Enumerated half-chain configurations grouped by boundary sector.

    Configurations are bit-packed integers: bit ``k`` holds site ``k`` of
    the half chain, counted from the outer end. For the left half the
    boundary site is bit ``L - 1``; for the right half it is bit ``0``.
    """

    L: int
    left_states: tuple
    right_states: tuple
    C: np.ndarray
    N_ref: int
    D: np.ndarray = field(init=False)
    D_prime: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "C", _frozen(self.C, np.int8))
        object.__setattr__(self, "D", _frozen([len(s) for s in self.left_states], np.int64))
        object.__setattr__(
            self, "D_prime", _frozen([len(s) for s in self.right_states], np.int64)
        )

    def relative_spec(self, name=None) -> ConstraintSpec:
        """The ``(C, D/N, D'/N)`` model realised by this finite space."""
        return ConstraintSpec(
            name or f"finite(L={self.L})",
            self.C,
            self.D / self.N_ref,
            self.D_prime / self.N_ref,
        )

    def n_allowed_pairs(self) -> int:
        return int(self.D @ self.C.astype(np.int64) @ self.D_prime)


@dataclass(frozen=True)
class ScalingConstants:
    """Normalisation constants derived from a :class:`ConstraintSpec`.

    ``norm_per_N`` is the mean trace of the unnormalised reduced density
    matrix per unit ``N``; ``eps_scale`` converts a raw eigenvalue ``x`` to
    ``epsilon`` (unit mean eigenvalue).
    """

    norm_per_N: float
    sum_d: float
    eps_scale: float


def _no_adjacent_ones(L):
    """All length-``L`` bitstrings without two adjacent ones, as ints."""
    states = np.array([0, 1], dtype=np.int64)
    for k in range(1, L):
        prev_bit = (states >> (k - 1)) & 1
        extended = states | (np.int64(1) << k)
        states = np.concatenate([states, extended[prev_bit == 0]])
    return np.sort(states)


def blockaded_chain_space(L: int) -> FiniteConstrainedSpace:
    """Enumerate the Rydberg-blockaded half chain of length ``L``.

    Left states are grouped by their last site (sector 0 or 1), right
    states by their first site. Both halves have dimensions
    ``(F_{L+1}, F_L)``; ``N_ref`` is the sector-1 dimension.
    """
    if isinstance(L, bool) or not isinstance(L, (int, np.integer)):
        raise SizeError(f"L must be an integer, got {L!r}")
    if not 1 <= L <= MAX_CHAIN_LENGTH:
        raise SizeError(f"L must lie in [1, {MAX_CHAIN_LENGTH}], got {L}")
    L = int(L)
    states = _no_adjacent_ones(L)
    left_bit = (states >> (L - 1)) & 1
    right_bit = states & 1
    left = tuple(states[left_bit == s] for s in (0, 1))
    right = tuple(states[right_bit == s] for s in (0, 1))
    return FiniteConstrainedSpace(
        L=L,
        left_states=left,
        right_states=right,
        C=np.array([[1, 1], [1, 0]]),
        N_ref=len(left[1]),
    )


def _positive(value, label):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{label} must be a number, got {value!r}") from None
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{label} must be positive, got {value}")
    return value


def asymptotic_spec(kind: str, **params) -> ConstraintSpec:
    """Build one of the supported asymptotic constraint models.

    Parameters
    ----------
    kind : {'unconstrained', 'unbalanced', 'blockaded', 'blockaded_unbalanced', 'diagonal_sz'}
    **params
        ``phi`` for the blockaded families (default golden ratio), ``lam``
        for the unbalanced families, ``L`` and ``M`` for ``diagonal_sz``.

    Notes
    -----
    ``unconstrained`` accepts an optional ``lam`` placed on the right
    dimension, ``d' = (lam,)``. ``unbalanced`` places it on the left,
    ``d = (lam,)``, matching the convention ``lam = d_l / d'_r`` used by
    the blockaded family.
    """
    kind = kind.replace("-", "_")
    if kind == "unconstrained":
        lam = _positive(params.get("lam", 1.0), "lam")
        return ConstraintSpec("unconstrained", [[1]], [1.0], [lam])
    if kind == "unbalanced":
        lam = _positive(params.get("lam", 1.0), "lam")
        return ConstraintSpec(f"unbalanced(lam={lam:g})", [[1]], [lam], [1.0])
    if kind == "blockaded":
        phi = _positive(params.get("phi", GOLDEN), "phi")
        return ConstraintSpec(
            f"blockaded(phi={phi:.12g})", [[1, 1], [1, 0]], [phi, 1.0], [phi, 1.0]
        )
    if kind == "blockaded_unbalanced":
        phi = _positive(params.get("phi", GOLDEN), "phi")
        lam = _positive(params.get("lam", 1.0), "lam")
        return ConstraintSpec(
            f"blockaded_unbalanced(phi={phi:.12g}, lam={lam:g})",
            [[1, 1], [1, 0]],
            [lam * phi, lam],
            [phi, 1.0],
        )
    if kind == "diagonal_sz":
        try:
            L, M = int(params["L"]), int(params["M"])
        except KeyError as exc:
            raise ValidationError(f"diagonal_sz requires {exc.args[0]}") from None
        if L < 1:
            raise ValidationError(f"L must be positive, got {L}")
        ref = math.comb(L, L // 2)
        sectors = [l for l in range(L + 1) if 0 <= M - l <= L]
        if not sectors:
            raise ValidationError(f"no sector with 0 <= M - l <= L for L={L}, M={M}")
        d = [math.comb(L, l) / ref for l in sectors]
        dp = [math.comb(L, M - l) / ref for l in sectors]
        return ConstraintSpec(f"diagonal_sz(L={L}, M={M})", np.eye(len(sectors)), d, dp)
    raise ValidationError(f"unknown model kind {kind!r}")


def scaling_constants(spec: ConstraintSpec) -> ScalingConstants:
    norm = float(spec.d @ spec.C @ spec.d_prime)
    sum_d = float(spec.d.sum())
    return ScalingConstants(norm_per_N=norm, sum_d=sum_d, eps_scale=sum_d / norm)


def blockaded_phi(spec: ConstraintSpec):
    """Return ``phi`` if ``spec`` is a balanced blockaded model, else None."""
    if spec.C.shape != (2, 2) or spec.C.tolist() != [[1, 1], [1, 0]]:
        return None
    d, dp = spec.d, spec.d_prime
    if not (np.isclose(d[1], 1.0, rtol=1e-12) and np.isclose(dp[1], 1.0, rtol=1e-12)):
        return None
    if not np.isclose(d[0], dp[0], rtol=1e-12):
        return None
    return float(d[0])
