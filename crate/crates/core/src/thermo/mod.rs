//! Thermodynamic formalism for locally constant potentials: Gibbs measures,
//! pressure and entropy, exact Birkhoff-sum laws and cocycle variances.

mod function;
mod gibbs;
mod sums;
mod variance;

pub use function::{Cocycle, FunctionSpec, LocallyConstant, Potential};
pub use gibbs::{
    build_gibbs, gibbs_bound_report, Edge, GibbsBoundReport, GibbsModel, GibbsSummary, MarkovLaw, POWER_MAX_ITERATIONS,
    POWER_TOLERANCE,
};
pub use sums::{
    exact_sum_distribution, exact_sum_distribution_capped, llt_ratio, state_sum_table, StateSumTable, SumDistribution,
    DEFAULT_RANGE_CAP,
};
pub use variance::{
    check_centered, cocycle_aperiodicity, green_kubo_variance, green_kubo_variance_with, twisted_radius,
    variance_estimator, variance_growth, AperiodicityReport, DpGrowth, FundamentalMatrix, TruncatedGreenKubo,
    VarianceEstimator, VarianceMethod, VarianceReport, CENTERING_TOLERANCE, DEGENERACY_TOLERANCE, PERIODICITY_MARGIN,
    VARIANCE_METHODS,
};

pub(crate) use function::word_code;
