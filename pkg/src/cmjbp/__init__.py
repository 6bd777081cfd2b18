"""Explosion of heavy-tailed continuous-time branching processes.

Decide, certify and empirically measure whether a population model with
infinite-mean offspring reaches infinitely many individuals in finite time:

* delay (birth-time) laws, including defective, atomic and singular ones
  (:mod:`cmjbp.birth_times`, :mod:`cmjbp.singular`);
* offspring laws with heavy-tail witnesses (:mod:`cmjbp.offspring`);
* analytic verdicts via the threshold recursion and the integral criterion
  (:mod:`cmjbp.criteria`);
* fixed-point operator iteration for the explosion-time cdf
  (:mod:`cmjbp.operator`);
* lazy Monte Carlo genealogy simulation (:mod:`cmjbp.simulate`);
* supercriticality certificates via generation-dependent thinning
  (:mod:`cmjbp.thinning`).
"""

from .birth_times import (
    BackwardThinned,
    BirthTimeDistribution,
    Deterministic,
    Exponential,
    MaxOf,
    MinOf,
    PowerAtOrigin,
    Scaled,
    SteepGamma,
    SumOf,
    TabulatedCdf,
    Thinned,
    Uniform,
    backward_thinned,
    combine,
    dominates_at_origin,
)
from .criteria import (
    CONSERVATIVE,
    EXPLOSIVE,
    INCONCLUSIVE,
    ExplosionVerdict,
    HSequence,
    age_dependent_verdicts,
    h_sequence,
    integral_verdict,
    mass_at_zero_classify,
    minsum_verdict,
)
from .errors import (
    ConfigError,
    DomainError,
    RecursionDivergedError,
    ScheduleInfeasibleError,
    UnsupportedCombinationError,
    ZeroTimeExplosionError,
)
from .model import EpidemicSpec, age_dependent
from .offspring import (
    Constant,
    FiniteTable,
    LogTail,
    OffspringDistribution,
    ParetoTail,
    PowerLawGen,
    TailSandwich,
    gen_fn_dominates,
    h_gen,
    offspring_quantile,
    plump_check,
)
from .operator import (
    GridFunction,
    OperatorCache,
    apply_Q,
    apply_T,
    explosion_time_cdf,
    iterate_phi,
    test_function_check,
)
from .simulate import SimulationRecord, estimate_cdf, simulate_once, wilson_interval
from .singular import Cantor, DyadicAtoms, NuBeta, OmegaBlend
from .thinning import (
    ThinningSchedule,
    assumption_q_estimate,
    build_schedule,
    forward_incubation_schedule,
    h_gamma_transform,
    survival_bound,
    wn_recursion,
)

__version__ = "0.1.0"
