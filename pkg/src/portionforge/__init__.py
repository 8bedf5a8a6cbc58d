"""Budget aggregation toolkit: mechanisms, fairness audits, exact impossibility checks.

A distribution splits a unit budget over m alternatives; agents report ideal
distributions (peaks).  The package implements the classic aggregation rules
(generalized medians, moving phantoms, welfare optimizers), decides fairness
and incentive axioms on concrete instances, and replays the incompatibility
arguments for metric preferences in exact rational arithmetic.
"""

from .core import (
    EPS_RATIO,
    EPS_SUM,
    Distribution,
    Profile,
    RatioVector,
    UtilityModel,
    critical_set,
    is_single_minded,
    leximin_compare,
    mean_rule,
    ratio_vector,
    utilities,
    utility,
)
from .onedim import (
    PhantomVector,
    generalized_median,
    maxmin_rule,
    median,
    uniform_phantom,
    uniform_phantoms,
)
from .phantoms import (
    PhantomSystem,
    capped_nearest,
    independent_markets,
    independent_markets_system,
    moving_phantom,
    normalization_time,
)
from .welfare import (
    CertificateResult,
    Decomposition,
    decomposition_certificate,
    mirror_descent_nash,
    nash_objective,
    nash_optimize,
    utilitarian_l1,
)
from .axioms import (
    AuditReport,
    SearchConfig,
    audit_continuity,
    audit_group_sp,
    audit_strategyproofness,
    blocking_witness_check,
    check_cfs_leontief,
    check_efficiency,
    check_proportionality,
    check_range_respect,
)
from .impossibility import (
    ChainReport,
    RationalProfileFamily,
    gen_profiles,
    mechanism_gauntlet,
    region_infeasible,
    verify_chain,
)
from .numerics import Rational, grid_argmax, grid_points
from .sampling import random_profile, random_profiles

__version__ = "0.1.0"
