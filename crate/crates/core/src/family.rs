//! Hypothesis families and the set families that constrain partitioning.
//!
//! Populations are zero-indexed throughout the library; reports intended for
//! people print them one-indexed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statistics::Sidedness;

/// Default upper bound on the size of a block the all-pairwise family will
/// enumerate splits for (2^(n−1) − 1 candidates).
pub const DEFAULT_MAX_BLOCK: usize = 20;

/// Shape of the pairwise-difference problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    AllPairwise,
    ChangePoint,
    TreatmentsVsControl,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::AllPairwise => "all-pairwise",
            Problem::ChangePoint => "change-point",
            Problem::TreatmentsVsControl => "treatments-vs-control",
        })
    }
}

/// An ordered pair (i, j) naming the hypothesis that populations i and j are
/// equal. Evidence against it is "j larger than i"; for treatments versus
/// control, `j` is the control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
}

impl Pair {
    pub fn new(i: usize, j: usize) -> Self {
        Pair { i, j }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H({},{})", self.i + 1, self.j + 1)
    }
}

/// The Ω / Ω₁ / Ω₂ families for one problem shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetFamilySpec {
    pub problem: Problem,
    pub k: usize,
    /// Control population for treatments versus control.
    pub control: Option<usize>,
}

impl SetFamilySpec {
    /// Uses the last population as the control for treatments versus control.
    pub fn new(problem: Problem, k: usize) -> Result<Self> {
        let control = (problem == Problem::TreatmentsVsControl).then(|| k.saturating_sub(1));
        Self::build(problem, k, control)
    }

    pub fn treatments_vs_control(k: usize, control: usize) -> Result<Self> {
        Self::build(Problem::TreatmentsVsControl, k, Some(control))
    }

    fn build(problem: Problem, k: usize, control: Option<usize>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidData(format!("need at least 2 populations, got {k}")));
        }
        if let Some(c) = control {
            if c >= k {
                return Err(Error::InvalidData(format!("control {c} out of range for k = {k}")));
            }
        }
        Ok(SetFamilySpec { problem, k, control })
    }

    fn control_index(&self) -> usize {
        self.control.unwrap_or(self.k - 1)
    }

    /// Maximum number of splits a run can perform.
    pub fn max_splits(&self) -> usize {
        self.k - 1
    }

    /// Membership in Ω: may this block be split?
    pub fn is_eligible(&self, block: &[usize]) -> bool {
        match self.problem {
            Problem::AllPairwise => block.len() >= 2,
            Problem::ChangePoint => block.len() >= 2 && is_consecutive(block),
            Problem::TreatmentsVsControl => block.len() >= 2 && block.contains(&self.control_index()),
        }
    }

    /// Membership in Ω₁.
    pub fn in_first(&self, set: &[usize]) -> bool {
        match self.problem {
            Problem::AllPairwise => !set.is_empty(),
            Problem::ChangePoint => !set.is_empty() && is_consecutive(set),
            Problem::TreatmentsVsControl => set.len() == 1 && set[0] != self.control_index(),
        }
    }

    /// Membership in Ω₂.
    pub fn in_second(&self, set: &[usize]) -> bool {
        match self.problem {
            Problem::AllPairwise => !set.is_empty(),
            Problem::ChangePoint => !set.is_empty() && is_consecutive(set),
            Problem::TreatmentsVsControl => set.contains(&self.control_index()),
        }
    }

    /// Calls `visit` with the first part of every admissible split of `block`
    /// (sorted), in increasing lexicographic order of that part.
    ///
    /// The first part is the one the split statistic treats as the
    /// "smaller" group: the lower run for change point, the treatment
    /// singleton for treatments versus control, and the part holding the
    /// smallest index for all-pairwise. Unordered all-pairwise splits are
    /// visited once.
    pub fn visit_splits<F>(&self, block: &[usize], max_block: usize, mut visit: F) -> Result<()>
    where
        F: FnMut(&[usize]) -> Result<()>,
    {
        if !self.is_eligible(block) {
            return Err(Error::NoAdmissibleSplit { block: block.to_vec() });
        }
        match self.problem {
            Problem::ChangePoint => {
                for t in 1..block.len() {
                    visit(&block[..t])?;
                }
            }
            Problem::TreatmentsVsControl => {
                let control = self.control_index();
                for member in block.iter().filter(|&&m| m != control) {
                    visit(std::slice::from_ref(member))?;
                }
            }
            Problem::AllPairwise => {
                if block.len() > max_block {
                    return Err(Error::BlockTooLarge {
                        size: block.len(),
                        cap: max_block,
                    });
                }
                let mut first = Vec::with_capacity(block.len());
                first.push(block[0]);
                visit_lex_subsets(&block[1..], 0, &mut first, block.len(), &mut visit)?;
            }
        }
        Ok(())
    }
}

/// Depth-first walk over `first ∪ S` for the subsets S of `rest[from..]`,
/// which is lexicographic order on sorted lists. The whole block is skipped.
fn visit_lex_subsets<F>(rest: &[usize], from: usize, first: &mut Vec<usize>, whole: usize, visit: &mut F) -> Result<()>
where
    F: FnMut(&[usize]) -> Result<()>,
{
    if first.len() < whole {
        visit(first)?;
    }
    for t in from..rest.len() {
        first.push(rest[t]);
        visit_lex_subsets(rest, t + 1, first, whole, visit)?;
        first.pop();
    }
    Ok(())
}

pub(crate) fn is_consecutive(set: &[usize]) -> bool {
    set.windows(2).all(|w| w[1] == w[0] + 1)
}

/// The set Q of hypotheses plus their sidedness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisFamily {
    pub spec: SetFamilySpec,
    pub sided: Sidedness,
}

impl HypothesisFamily {
    pub fn new(spec: SetFamilySpec, sided: Sidedness) -> Self {
        HypothesisFamily { spec, sided }
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn problem(&self) -> Problem {
        self.spec.problem
    }

    pub fn pairs(&self) -> Vec<Pair> {
        let k = self.spec.k;
        match self.spec.problem {
            Problem::AllPairwise => (0..k).flat_map(|i| (i + 1..k).map(move |j| Pair::new(i, j))).collect(),
            Problem::ChangePoint => (0..k - 1).map(|i| Pair::new(i, i + 1)).collect(),
            Problem::TreatmentsVsControl => {
                let c = self.spec.control_index();
                (0..k).filter(|&i| i != c).map(|i| Pair::new(i, c)).collect()
            }
        }
    }

    pub fn len(&self) -> usize {
        let k = self.spec.k;
        match self.spec.problem {
            Problem::AllPairwise => k * (k - 1) / 2,
            _ => k - 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn firsts(spec: &SetFamilySpec, block: &[usize]) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        spec.visit_splits(block, DEFAULT_MAX_BLOCK, |a| {
            out.push(a.to_vec());
            Ok(())
        })
        .unwrap();
        out
    }

    #[test]
    fn change_point_splits_are_prefixes() {
        let spec = SetFamilySpec::new(Problem::ChangePoint, 6).unwrap();
        assert_eq!(firsts(&spec, &[2, 3, 4]), vec![vec![2], vec![2, 3]]);
        assert!(!spec.is_eligible(&[1, 3]));
        assert!(!spec.is_eligible(&[4]));
    }

    #[test]
    fn tvc_splits_single_out_treatments() {
        let spec = SetFamilySpec::new(Problem::TreatmentsVsControl, 4).unwrap();
        assert_eq!(firsts(&spec, &[0, 1, 2, 3]), vec![vec![0], vec![1], vec![2]]);
        assert!(!spec.is_eligible(&[0, 1]));
        assert!(spec.is_eligible(&[1, 3]));
        assert!(!spec.in_first(&[3]));
        assert!(spec.in_second(&[0, 3]));
    }

    #[test]
    fn all_pairwise_splits_for_four() {
        let spec = SetFamilySpec::new(Problem::AllPairwise, 4).unwrap();
        let got = firsts(&spec, &[0, 1, 2, 3]);
        assert_eq!(
            got,
            vec![
                vec![0],
                vec![0, 1],
                vec![0, 1, 2],
                vec![0, 1, 3],
                vec![0, 2],
                vec![0, 2, 3],
                vec![0, 3],
            ]
        );
    }

    #[test]
    fn all_pairwise_cap() {
        let spec = SetFamilySpec::new(Problem::AllPairwise, 30).unwrap();
        let block: Vec<usize> = (0..21).collect();
        let err = spec.visit_splits(&block, DEFAULT_MAX_BLOCK, |_| Ok(())).unwrap_err();
        assert_eq!(err, Error::BlockTooLarge { size: 21, cap: 20 });
    }

    #[test]
    fn ineligible_block_errors() {
        let spec = SetFamilySpec::new(Problem::TreatmentsVsControl, 4).unwrap();
        assert!(matches!(
            spec.visit_splits(&[0, 1], DEFAULT_MAX_BLOCK, |_| Ok(())),
            Err(Error::NoAdmissibleSplit { .. })
        ));
    }

    #[test]
    fn families_list_pairs() {
        let tvc = HypothesisFamily::new(
            SetFamilySpec::new(Problem::TreatmentsVsControl, 4).unwrap(),
            Sidedness::Two,
        );
        assert_eq!(tvc.pairs(), vec![Pair::new(0, 3), Pair::new(1, 3), Pair::new(2, 3)]);
        let ap = HypothesisFamily::new(SetFamilySpec::new(Problem::AllPairwise, 4).unwrap(), Sidedness::Two);
        assert_eq!(ap.pairs().len(), 6);
        assert_eq!(ap.len(), 6);
        let cp = HypothesisFamily::new(SetFamilySpec::new(Problem::ChangePoint, 4).unwrap(), Sidedness::One);
        assert_eq!(cp.pairs(), vec![Pair::new(0, 1), Pair::new(1, 2), Pair::new(2, 3)]);
    }

    #[test]
    fn all_pairwise_visits_each_unordered_split_once_in_order() {
        let spec = SetFamilySpec::new(Problem::AllPairwise, 7).unwrap();
        let block = [0, 2, 3, 5, 6];
        let got = firsts(&spec, &block);
        assert_eq!(got.len(), (1 << 4) - 1);
        assert!(got.windows(2).all(|w| w[0] < w[1]));
        assert!(got.iter().all(|a| a[0] == 0 && a.len() < block.len()));
    }
}
