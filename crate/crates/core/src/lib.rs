//! Weighted translation operators on discretized `L^p(G)`.
//!
//! The crate models a locally compact group by a grid carrier with Haar cell
//! masses ([`group`]), finitely supported functions with their `L^p` norms
//! ([`lp`]), positive weights ([`weight`]) and the weighted translation
//! `T_{a,ω} f(x) = ω(x) f(x a^{-1})` ([`operator`]). On top of that sit the
//! J-class condition checkers ([`criteria`]), constructive witness
//! certificates ([`witness`]) and a dense-matrix oracle for cyclic groups
//! ([`oracle`]).

pub mod criteria;
pub mod error;
pub mod group;
pub mod lp;
pub mod numfmt;
pub mod operator;
pub mod oracle;
pub mod weight;
pub mod witness;

pub use criteria::{
    check_necessary_condition, check_power_bounded_torsion, check_sufficient_pair,
    check_tilde_decay, check_torsion_condition, classify, power_orbit_bound, CheckParams,
    Classification, ConditionId, ConditionReport, DeltaRule, ReportVerdict, ScanParams, ScanRow,
    Verdict, WitnessEntry,
};
pub use error::{Error, Result};
pub use group::{CompactWindow, GroupCarrier, GroupElement, Separation};
pub use lp::LpFunction;
pub use operator::{Summation, WeightProducts, WeightedTranslation};
pub use oracle::{
    inverse_power_norms, j_zero_full_space, run_trial, run_trials, CyclicMatrix, InversePowerNorms,
    RandomInstance, TrialConfig, TrialResult,
};
pub use weight::{Jump, Periodicity, PiecewiseWeight, Segment, Weight};
pub use witness::{
    build_witness_jvector, build_witness_torsion, build_witness_zero, verify, verify_detailed,
    BuilderId, Verification, WitnessCertificate, WitnessFailure,
};
