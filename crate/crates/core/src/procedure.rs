use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::decision::{DecisionReport, ProcedureKind};
use crate::error::Result;
use crate::family::HypothesisFamily;
use crate::partition::{rsd_run_with, ModelStatistic, PartitionTrace, RsdOptions};
use crate::statistics::CriticalValues;
use crate::stepwise::{pairwise_stats, step_down, step_up, StatKind, StatisticTable};

/// A fully specified multiple-testing procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Procedure {
    pub kind: ProcedureKind,
    pub family: HypothesisFamily,
    pub criticals: CriticalValues,
    /// RSD split statistic; the model default when absent.
    pub split_statistic: Option<ModelStatistic>,
    /// Pairwise statistic for the classic procedures; the model default when absent.
    pub pair_statistic: Option<StatKind>,
    pub options: RsdOptions,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub report: DecisionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PartitionTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistics: Option<StatisticTable>,
}

impl Procedure {
    pub fn new(kind: ProcedureKind, family: HypothesisFamily, criticals: CriticalValues) -> Self {
        Procedure {
            kind,
            family,
            criticals,
            split_statistic: None,
            pair_statistic: None,
            options: RsdOptions::default(),
        }
    }

    pub fn with_split_statistic(mut self, stat: ModelStatistic) -> Self {
        self.split_statistic = Some(stat);
        self
    }

    pub fn with_pair_statistic(mut self, stat: StatKind) -> Self {
        self.pair_statistic = Some(stat);
        self
    }

    pub fn with_options(mut self, options: RsdOptions) -> Self {
        self.options = options;
        self
    }

    pub fn run(&self, data: &Dataset) -> Result<Outcome> {
        match self.kind {
            ProcedureKind::Rsd => {
                let stat = self
                    .split_statistic
                    .unwrap_or_else(|| ModelStatistic::for_dataset(data, self.family.sided));
                let (trace, report) = rsd_run_with(data, &self.family, &stat, &self.criticals, self.options)?;
                Ok(Outcome {
                    report,
                    trace: Some(trace),
                    statistics: None,
                })
            }
            ProcedureKind::StepDown | ProcedureKind::StepUp => {
                let kind = self.pair_statistic.unwrap_or_else(|| StatKind::default_for(data));
                let stats = pairwise_stats(data, &self.family, kind)?;
                let report = if self.kind == ProcedureKind::StepDown {
                    step_down(&stats, &self.criticals)?
                } else {
                    step_up(&stats, &self.criticals)?
                };
                Ok(Outcome {
                    report,
                    trace: None,
                    statistics: Some(stats),
                })
            }
        }
    }

    pub fn decide(&self, data: &Dataset) -> Result<DecisionReport> {
        Ok(self.run(data)?.report)
    }
}
