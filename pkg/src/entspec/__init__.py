"""Entanglement spectra of random states in locally constrained Hilbert spaces."""

__version__ = "0.1.0"

from .diagrams import (
    catalan,
    enumerate_pairings,
    finite_moment_exact,
    loop_structure,
    normalized_moment,
    planar_moment,
    sector_sum,
)
from .entropy import (
    EntropyReport,
    avg_entropy,
    entropy_report,
    inf_temp_entropy,
    moment_integral,
    page_asymptote,
    page_correction,
    shannon_integral,
)
from .estimators import EntanglementDOS, RandomStateSampler, build_spec
from .exceptions import (
    ConvergenceError,
    DivergenceError,
    EdgeError,
    EntspecError,
    SizeError,
    ValidationError,
)
from .montecarlo import (
    SampleConfig,
    empirical_cdf_distance,
    moment_estimate,
    sample_spectrum,
    self_averaging_scan,
)
from .resolvent import (
    SpectralDensity,
    blockaded_density,
    blockaded_edges,
    blockaded_resolvent,
    classify_phase,
    density,
    diagonal_density,
    fit_small_eps_exponent,
    mp_density,
    mp_unbalanced,
    solve_fixed_point,
)
from .space import (
    GOLDEN,
    ConstraintSpec,
    FiniteConstrainedSpace,
    asymptotic_spec,
    blockaded_chain_space,
    scaling_constants,
)
