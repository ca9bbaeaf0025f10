use std::fmt;

use serde::{Deserialize, Serialize};

use crate::family::Pair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn is_reject(self) -> bool {
        self == Decision::Reject
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcedureKind {
    Rsd,
    StepDown,
    StepUp,
}

impl fmt::Display for ProcedureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProcedureKind::Rsd => "rsd",
            ProcedureKind::StepDown => "step-down",
            ProcedureKind::StepUp => "step-up",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisDecision {
    pub pair: Pair,
    pub decision: Decision,
    /// The statistic that decided this hypothesis, when there is one: T_ij
    /// for the classic procedures, the separating split's H for RSD.
    pub statistic: Option<f64>,
    /// Step (1-based) at which the hypothesis was rejected.
    pub stage: Option<usize>,
}

/// Accept/reject outcome for every hypothesis of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub procedure: ProcedureKind,
    pub decisions: Vec<HypothesisDecision>,
}

impl DecisionReport {
    pub fn decision(&self, pair: Pair) -> Option<Decision> {
        self.decisions.iter().find(|d| d.pair == pair).map(|d| d.decision)
    }

    pub fn rejected(&self) -> Vec<Pair> {
        self.decisions
            .iter()
            .filter(|d| d.decision.is_reject())
            .map(|d| d.pair)
            .collect()
    }

    pub fn rejection_count(&self) -> usize {
        self.decisions.iter().filter(|d| d.decision.is_reject()).count()
    }

    pub fn pattern(&self) -> Vec<Decision> {
        self.decisions.iter().map(|d| d.decision).collect()
    }
}
