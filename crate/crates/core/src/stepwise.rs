//! The usual statistic-based step-down procedure and the FDR step-up procedure.
//!
//! Both work on one statistic per hypothesis. Hypotheses are ranked by
//! statistic, larger first; equal statistics rank the smaller pair first so
//! results never depend on storage order.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::decision::{Decision, DecisionReport, HypothesisDecision, ProcedureKind};
use crate::error::{Error, Result};
use crate::family::{HypothesisFamily, Pair};
use crate::statistics::{chisq_pair_stat, normal_h, rank_h, wmw_midrank_z, CriticalValues, Sidedness};

/// T_ij for every hypothesis in Q, already on the comparison scale
/// (absolute values for two-sided problems).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticTable {
    entries: Vec<(Pair, f64)>,
    sided: Sidedness,
}

impl StatisticTable {
    pub fn new(entries: Vec<(Pair, f64)>, sided: Sidedness) -> Result<Self> {
        if let Some((p, v)) = entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!("statistic for {p} is not finite: {v}")));
        }
        for (n, (p, _)) in entries.iter().enumerate() {
            if entries[..n].iter().any(|(q, _)| q == p) {
                return Err(Error::InvalidData(format!("{p} listed twice")));
            }
        }
        Ok(StatisticTable { entries, sided })
    }

    pub fn entries(&self) -> &[(Pair, f64)] {
        &self.entries
    }

    pub fn sided(&self) -> Sidedness {
        self.sided
    }

    pub fn get(&self, pair: Pair) -> Option<f64> {
        self.entries.iter().find(|(p, _)| *p == pair).map(|&(_, v)| v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Indices into `entries`, most significant first.
    fn significance_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, ta) = self.entries[a];
            let (pb, tb) = self.entries[b];
            tb.partial_cmp(&ta).unwrap_or(Ordering::Equal).then(pa.cmp(&pb))
        });
        order
    }
}

fn check_lengths(stats: &StatisticTable, criticals: &CriticalValues) -> Result<()> {
    if stats.len() != criticals.len() {
        return Err(Error::DimensionMismatch {
            expected: stats.len(),
            got: criticals.len(),
        });
    }
    Ok(())
}

fn report(stats: &StatisticTable, procedure: ProcedureKind, stage_of: &[Option<usize>]) -> DecisionReport {
    let decisions = stats
        .entries
        .iter()
        .zip(stage_of)
        .map(|(&(pair, t), &stage)| HypothesisDecision {
            pair,
            decision: if stage.is_some() {
                Decision::Reject
            } else {
                Decision::Accept
            },
            statistic: Some(t),
            stage,
        })
        .collect();
    DecisionReport { procedure, decisions }
}

/// At step m the largest remaining statistic is rejected if it exceeds
/// C_{K−m+1}; the first failure accepts everything left.
pub fn step_down(stats: &StatisticTable, criticals: &CriticalValues) -> Result<DecisionReport> {
    check_lengths(stats, criticals)?;
    let big_k = criticals.len();
    let mut stage_of = vec![None; stats.len()];
    for (m, &idx) in stats.significance_order().iter().enumerate() {
        if stats.entries[idx].1 > criticals.get(big_k - m) {
            stage_of[idx] = Some(m + 1);
        } else {
            break;
        }
    }
    Ok(report(stats, ProcedureKind::StepDown, &stage_of))
}

/// With T_(1) ≤ … ≤ T_(K) paired against C_1 < … < C_K, finds the first m
/// (scanning from the least significant) with T_(m) > C_m and rejects
/// T_(m), …, T_(K). This is the statistic form of the Benjamini–Hochberg rule.
pub fn step_up(stats: &StatisticTable, criticals: &CriticalValues) -> Result<DecisionReport> {
    check_lengths(stats, criticals)?;
    let mut ascending = stats.significance_order();
    ascending.reverse();
    let mut stage_of = vec![None; stats.len()];
    if let Some(cut) = ascending
        .iter()
        .enumerate()
        .position(|(m, &idx)| stats.entries[idx].1 > criticals.get(m + 1))
    {
        for (m, &idx) in ascending.iter().enumerate().skip(cut) {
            // stage counts from the most significant rejection
            stage_of[idx] = Some(ascending.len() - m);
        }
    }
    Ok(report(stats, ProcedureKind::StepUp, &stage_of))
}

/// Which two-sample statistic feeds the classic procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatKind {
    /// WMW midrank Z on the rows of a contingency table.
    Wmw,
    /// (x_i − x_j)'(x_i − x_j)/2 on normal vectors.
    Chisq,
    /// (x_j − x_i)/√2 on univariate normal data.
    ZDifference,
    /// Raw difference x_j − x_i on univariate data.
    Difference,
    /// (R_j − R_i)/σ_{i,j} on mean joint ranks.
    RankZ,
}

impl StatKind {
    /// The natural pairwise statistic for a dataset.
    pub fn default_for(data: &Dataset) -> StatKind {
        match data {
            Dataset::Multinomial(_) => StatKind::Wmw,
            Dataset::Normal(m) if m.q() == 1 => StatKind::ZDifference,
            Dataset::Normal(_) => StatKind::Chisq,
            Dataset::Rank(_) => StatKind::RankZ,
        }
    }
}

/// Fills T_ij for every (i, j) in the family.
pub fn pairwise_stats(data: &Dataset, family: &HypothesisFamily, kind: StatKind) -> Result<StatisticTable> {
    if data.k() != family.k() {
        return Err(Error::DimensionMismatch {
            expected: family.k(),
            got: data.k(),
        });
    }
    let sided = family.sided;
    let entries = family
        .pairs()
        .into_iter()
        .map(|pair| {
            let (xi, xj) = (data.row(pair.i), data.row(pair.j));
            let t = match (kind, data) {
                (StatKind::Wmw, Dataset::Multinomial(_)) => sided.apply(wmw_midrank_z(xi, xj)?),
                (StatKind::Chisq, Dataset::Normal(_)) => chisq_pair_stat(xi, xj)?,
                (StatKind::ZDifference, Dataset::Normal(m)) if m.q() == 1 => normal_h(xi, 1, xj, 1, sided)?,
                (StatKind::Difference, Dataset::Normal(m)) if m.q() == 1 => sided.apply(xj[0] - xi[0]),
                (StatKind::RankZ, Dataset::Rank(r)) => rank_h(&[pair.j], &[pair.i], &r.rank_sums(), r.scale(), sided)?,
                _ => {
                    return Err(Error::Unsupported(format!(
                        "statistic {kind:?} does not apply to {} data with q = {}",
                        data.model(),
                        data.q()
                    )))
                }
            };
            Ok((pair, t))
        })
        .collect::<Result<Vec<_>>>()?;
    StatisticTable::new(entries, sided)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{Problem, SetFamilySpec};
    use crate::statistics::{ContingencyTable, SampleMatrix};

    fn table(values: &[f64]) -> StatisticTable {
        let entries = values
            .iter()
            .enumerate()
            .map(|(n, &v)| (Pair::new(n, values.len()), v))
            .collect();
        StatisticTable::new(entries, Sidedness::Two).unwrap()
    }

    fn cv(v: &[f64]) -> CriticalValues {
        CriticalValues::user(v.to_vec()).unwrap()
    }

    #[test]
    fn step_down_shifted_counts() {
        let stats =
            StatisticTable::new(vec![(Pair::new(0, 1), 1.653), (Pair::new(1, 2), 2.006)], Sidedness::One).unwrap();
        let r = step_down(&stats, &cv(&[1.645, 1.96])).unwrap();
        assert_eq!(r.rejection_count(), 2);
        assert_eq!(r.decisions[1].stage, Some(1));
        assert_eq!(r.decisions[0].stage, Some(2));

        let stats =
            StatisticTable::new(vec![(Pair::new(0, 1), 1.954), (Pair::new(1, 2), 1.865)], Sidedness::One).unwrap();
        assert_eq!(step_down(&stats, &cv(&[1.645, 1.96])).unwrap().rejection_count(), 0);
    }

    #[test]
    fn step_down_all_small() {
        let r = step_down(&table(&[0.1, 0.2, 0.3]), &cv(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(r.rejection_count(), 0);
    }

    #[test]
    fn step_up_hand_traces() {
        let c = cv(&[1.96, 2.13, 2.39]);
        let r = step_up(&table(&[2.5, 1.0, 2.2]), &c).unwrap();
        assert_eq!(r.pattern(), vec![Decision::Reject, Decision::Accept, Decision::Reject]);
        let r = step_up(&table(&[2.0, 0.5, 0.6]), &c).unwrap();
        assert_eq!(r.rejection_count(), 0);
        let r = step_up(&table(&[0.1, 0.2, 0.3]), &c).unwrap();
        assert_eq!(r.rejection_count(), 0);
    }

    #[test]
    fn step_up_rejects_beyond_a_failed_top_comparison() {
        // the largest statistic fails C_3 but the second passes C_2
        let r = step_up(&table(&[2.3, 2.2, 0.0]), &cv(&[1.96, 2.13, 2.39])).unwrap();
        assert_eq!(r.rejection_count(), 2);
        let d = step_down(&table(&[2.3, 2.2, 0.0]), &cv(&[1.96, 2.13, 2.39])).unwrap();
        assert_eq!(d.rejection_count(), 0);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            step_down(&table(&[1.0, 2.0]), &cv(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(step_up(&table(&[1.0, 2.0]), &cv(&[1.0])).is_err());
    }

    #[test]
    fn ties_resolved_by_pair() {
        let stats = StatisticTable::new(vec![(Pair::new(1, 3), 2.0), (Pair::new(0, 3), 2.0)], Sidedness::Two).unwrap();
        let r = step_down(&stats, &cv(&[1.5, 1.9])).unwrap();
        // (0,3) ranks first among the tied statistics
        let stage = |p| r.decisions.iter().find(|d| d.pair == p).unwrap().stage;
        assert_eq!(stage(Pair::new(0, 3)), Some(1));
        assert_eq!(stage(Pair::new(1, 3)), Some(2));
    }

    #[test]
    fn pairwise_counts() {
        let t = Dataset::Multinomial(
            ContingencyTable::new(vec![
                vec![15.0, 226.0, 4.0],
                vec![4.0, 226.0, 15.0],
                vec![6.0, 196.0, 43.0],
            ])
            .unwrap(),
        );
        let fam = HypothesisFamily::new(SetFamilySpec::new(Problem::ChangePoint, 3).unwrap(), Sidedness::One);
        let s = pairwise_stats(&t, &fam, StatKind::Wmw).unwrap();
        assert!((s.get(Pair::new(0, 1)).unwrap() - 1.653).abs() < 1e-3);
        assert!((s.get(Pair::new(1, 2)).unwrap() - 2.006).abs() < 1e-3);
    }

    #[test]
    fn pairwise_tvc_four_and_identical() {
        let x = Dataset::Normal(SampleMatrix::univariate(&[1.0, 4.0, -2.0, 0.0]).unwrap());
        let fam = HypothesisFamily::new(
            SetFamilySpec::new(Problem::TreatmentsVsControl, 4).unwrap(),
            Sidedness::Two,
        );
        let s = pairwise_stats(&x, &fam, StatKind::ZDifference).unwrap();
        assert!((s.get(Pair::new(0, 3)).unwrap() - 0.71).abs() < 0.005);
        let one = HypothesisFamily::new(fam.spec, Sidedness::One);
        let s = pairwise_stats(&x, &one, StatKind::ZDifference).unwrap();
        assert!((s.get(Pair::new(0, 3)).unwrap() + 0.71).abs() < 0.005);

        let same = Dataset::Normal(SampleMatrix::univariate(&[3.0; 4]).unwrap());
        let s = pairwise_stats(&same, &fam, StatKind::ZDifference).unwrap();
        assert!(s.entries().iter().all(|&(_, v)| v == 0.0));
        assert!(pairwise_stats(&same, &fam, StatKind::Wmw).is_err());
    }
}
