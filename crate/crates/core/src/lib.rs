//! Multiple comparison procedures with the interval property.
//!
//! The central procedure is the residual-based step-down procedure (RSD):
//! it splits the population set into blocks by maximizing a two-group
//! dispersion statistic and rejects H_ij exactly when i and j end up in
//! different blocks. The classic step-down and step-up procedures are
//! provided for comparison, along with tools that audit the interval
//! property along data rays and a Monte Carlo harness.
//!
//! ```
//! use intervalmt::{
//!     CriticalValues, Dataset, HypothesisFamily, Problem, Procedure, ProcedureKind, SampleMatrix, SetFamilySpec,
//!     Sidedness,
//! };
//!
//! let data = Dataset::Normal(SampleMatrix::univariate(&[1.0, 4.0, -2.0, 0.0])?);
//! let family = HypothesisFamily::new(SetFamilySpec::new(Problem::TreatmentsVsControl, 4)?, Sidedness::Two);
//! let criticals = CriticalValues::user(vec![1.48, 1.97, 2.40])?;
//! let outcome = Procedure::new(ProcedureKind::Rsd, family, criticals).run(&data)?;
//! let rejected: Vec<String> = outcome.report.rejected().iter().map(|p| p.to_string()).collect();
//! assert_eq!(rejected, ["H(2,4)", "H(3,4)"]);
//! # Ok::<(), intervalmt::Error>(())
//! ```

pub mod audit;
pub mod data;
pub mod decision;
pub mod error;
pub mod family;
pub mod io;
pub mod partition;
pub mod procedure;
pub mod quantile;
pub mod sim;
pub mod statistics;
pub mod stepwise;

pub use data::{Dataset, Model, RankData};
pub use decision::{Decision, DecisionReport, HypothesisDecision, ProcedureKind};
pub use error::{Error, Result};
pub use family::{HypothesisFamily, Pair, Problem, SetFamilySpec};
pub use partition::{
    decisions_from_partition, dispersion_max, rsd_run, rsd_run_with, ModelStatistic, MultinomialPooling, Partition,
    PartitionTrace, RsdOptions, SplitStatistic,
};
pub use procedure::{Outcome, Procedure};
pub use statistics::{
    critical_values_bg, critical_values_bh, ContingencyTable, CriticalSource, CriticalValues, RankScale, SampleMatrix,
    SampleModel, Sidedness,
};
pub use stepwise::{pairwise_stats, step_down, step_up, StatKind, StatisticTable};
