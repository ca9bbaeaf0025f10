//! Residual-based step-down (RSD) partitioning.
//!
//! A run starts from the single block {0, …, k−1}. At stage m every block in
//! Ω is scored by its dispersion D(B) = max H(A, B∖A) over admissible splits,
//! and the block with the largest D is split if D exceeds C_{K+1−m};
//! otherwise the run stops. H_ij is rejected iff i and j end in different
//! blocks.
//!
//! H only sees pooled summaries (size and column totals) of the two parts,
//! so the complement of a candidate part is obtained by subtraction from
//! the block's summary.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::decision::{Decision, DecisionReport, HypothesisDecision, ProcedureKind};
use crate::error::{Error, Result};
use crate::family::{HypothesisFamily, Problem, SetFamilySpec, DEFAULT_MAX_BLOCK};
use crate::statistics::{normal_h, rank_h_pooled, wmw_midrank_z, CriticalValues, RankScale, Sidedness};

/// n(A) and Y(A; x): the number of pooled populations and their column totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledGroup {
    pub size: usize,
    pub totals: Vec<f64>,
}

impl PooledGroup {
    /// Y(A; x)/n(A).
    pub fn mean(&self) -> Vec<f64> {
        let n = self.size as f64;
        self.totals.iter().map(|t| t / n).collect()
    }

    /// The summary of `self` with `part` removed.
    pub fn without(&self, part: &PooledGroup) -> PooledGroup {
        PooledGroup {
            size: self.size - part.size,
            totals: self.totals.iter().zip(&part.totals).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Pools the data vectors of the populations in `members`.
pub fn pool(members: &[usize], data: &Dataset) -> Result<PooledGroup> {
    if members.is_empty() {
        return Err(Error::InvalidGroup("cannot pool an empty set".into()));
    }
    let mut totals = vec![0.0; data.q()];
    for &i in members {
        if i >= data.k() {
            return Err(Error::InvalidGroup(format!("population {i} out of range")));
        }
        for (t, v) in totals.iter_mut().zip(data.row(i)) {
            *t += v;
        }
    }
    Ok(PooledGroup {
        size: members.len(),
        totals,
    })
}

/// The dispersion metric H(A, B∖A) evaluated on pooled summaries.
///
/// Implementations are oriented so that a positive value means the second
/// group is larger; two-sided statistics are nonnegative.
pub trait SplitStatistic: Sync {
    fn statistic(&self, first: &PooledGroup, second: &PooledGroup) -> Result<f64>;
}

impl<F> SplitStatistic for F
where
    F: Fn(&PooledGroup, &PooledGroup) -> Result<f64> + Sync,
{
    fn statistic(&self, first: &PooledGroup, second: &PooledGroup) -> Result<f64> {
        self(first, second)
    }
}

/// How multinomial rows are combined before the two-sample test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultinomialPooling {
    /// Row average Y(A)/n(A); keeps the pooled row on the per-population scale.
    #[default]
    Average,
    /// Raw row sum Y(A).
    Sum,
}

/// The standard H for each model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelStatistic {
    /// WMW midrank Z on the pooled 2×q table.
    Wmw {
        sided: Sidedness,
        pooling: MultinomialPooling,
    },
    /// Standardized difference of pooled normal means.
    Normal { sided: Sidedness },
    /// Pooled joint-rank statistic.
    Rank { sided: Sidedness, scale: RankScale },
}

impl ModelStatistic {
    pub fn for_dataset(data: &Dataset, sided: Sidedness) -> Self {
        match data {
            Dataset::Multinomial(_) => ModelStatistic::Wmw {
                sided,
                pooling: MultinomialPooling::Average,
            },
            Dataset::Normal(_) => ModelStatistic::Normal { sided },
            Dataset::Rank(r) => ModelStatistic::Rank {
                sided,
                scale: *r.scale(),
            },
        }
    }
}

impl SplitStatistic for ModelStatistic {
    fn statistic(&self, first: &PooledGroup, second: &PooledGroup) -> Result<f64> {
        match *self {
            ModelStatistic::Wmw { sided, pooling } => {
                let z = match pooling {
                    MultinomialPooling::Average => wmw_midrank_z(&first.mean(), &second.mean())?,
                    MultinomialPooling::Sum => wmw_midrank_z(&first.totals, &second.totals)?,
                };
                Ok(sided.apply(z))
            }
            ModelStatistic::Normal { sided } => normal_h(&first.mean(), first.size, &second.mean(), second.size, sided),
            ModelStatistic::Rank { sided, scale } => {
                // totals hold summed mean ranks; rank totals are n times that
                let n = scale.n as f64;
                Ok(rank_h_pooled(
                    second.totals[0] * n,
                    second.size as f64 * n,
                    first.totals[0] * n,
                    first.size as f64 * n,
                    scale.w,
                    sided,
                ))
            }
        }
    }
}

/// One candidate split of a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub block: Vec<usize>,
    pub split: Vec<usize>,
    pub rest: Vec<usize>,
    pub h: f64,
}

fn complement(block: &[usize], part: &[usize]) -> Vec<usize> {
    block.iter().copied().filter(|m| !part.contains(m)).collect()
}

/// `h > best` beyond rounding noise. Equal statistics computed along
/// different summation orders can differ in the last bits; those count as ties.
fn exceeds(h: f64, best: f64) -> bool {
    h > best + 1e-12 * (1.0 + best.abs())
}

fn best_split(
    block: &[usize],
    family: &SetFamilySpec,
    data: &Dataset,
    stat: &dyn SplitStatistic,
    max_block: usize,
    mut log: Option<&mut Vec<Candidate>>,
) -> Result<Candidate> {
    let whole = pool(block, data)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    family.visit_splits(block, max_block, |first| {
        let a = pool(first, data)?;
        let b = whole.without(&a);
        let h = stat.statistic(&a, &b)?;
        if h.is_nan() {
            return Err(Error::InvalidData(format!("split statistic is NaN for {first:?}")));
        }
        if let Some(log) = log.as_deref_mut() {
            log.push(Candidate {
                block: block.to_vec(),
                split: first.to_vec(),
                rest: complement(block, first),
                h,
            });
        }
        // splits arrive in increasing lexicographic order, so a strict
        // improvement keeps the smallest maximizer
        if best.as_ref().is_none_or(|(_, bh)| exceeds(h, *bh)) {
            best = Some((first.to_vec(), h));
        }
        Ok(())
    })?;
    let (split, h) = best.ok_or_else(|| Error::NoAdmissibleSplit { block: block.to_vec() })?;
    Ok(Candidate {
        block: block.to_vec(),
        rest: complement(block, &split),
        split,
        h,
    })
}

/// D(B; x) and the maximizing part A_B.
///
/// Ties go to the lexicographically smallest A (sorted member lists).
/// `block` must be sorted.
pub fn dispersion_max(
    block: &[usize],
    family: &SetFamilySpec,
    data: &Dataset,
    stat: &dyn SplitStatistic,
) -> Result<Candidate> {
    best_split(block, family, data, stat, DEFAULT_MAX_BLOCK, None)
}

/// Disjoint blocks covering {0, …, k−1}, each sorted, ordered by smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn trivial(k: usize) -> Self {
        Partition {
            blocks: vec![(0..k).collect()],
        }
    }

    pub fn new(mut blocks: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        let mut seen = vec![false; k];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidGroup("partition blocks must be nonempty".into()));
            }
            block.sort_unstable();
            for &m in block.iter() {
                if m >= k || seen[m] {
                    return Err(Error::InvalidGroup(format!(
                        "population {m} is out of range or appears twice"
                    )));
                }
                seen[m] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidGroup("partition does not cover every population".into()));
        }
        blocks.sort();
        Ok(Partition { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, i: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&i))
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        match (self.block_of(i), self.block_of(j)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    fn split(&mut self, index: usize, part: Vec<usize>, rest: Vec<usize>) {
        self.blocks.remove(index);
        self.blocks.push(part);
        self.blocks.push(rest);
        self.blocks.sort();
    }
}

/// An executed split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub stage: usize,
    pub block: Vec<usize>,
    pub split: Vec<usize>,
    pub rest: Vec<usize>,
    pub h: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The stage maximum did not exceed its threshold.
    BelowThreshold,
    /// No block of the partition lies in Ω.
    NoEligibleBlock,
}

/// Why and where the run stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopInfo {
    pub stage: usize,
    pub reason: StopReason,
    pub threshold: Option<f64>,
    /// Best candidate at the stopping stage, if any block was eligible.
    pub best: Option<Candidate>,
}

/// Candidates scored at one stage (only kept when requested).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: usize,
    pub threshold: f64,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionTrace {
    pub steps: Vec<TraceStep>,
    pub stop: StopInfo,
    pub final_partition: Partition,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<StageLog>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsdOptions {
    /// All-pairwise enumeration cap on block size.
    pub max_block: usize,
    /// Keep every scored candidate in the trace.
    pub record_candidates: bool,
}

impl Default for RsdOptions {
    fn default() -> Self {
        RsdOptions {
            max_block: DEFAULT_MAX_BLOCK,
            record_candidates: false,
        }
    }
}

/// Runs RSD with default options.
pub fn rsd_run(
    data: &Dataset,
    family: &HypothesisFamily,
    stat: &dyn SplitStatistic,
    criticals: &CriticalValues,
) -> Result<(PartitionTrace, DecisionReport)> {
    rsd_run_with(data, family, stat, criticals, RsdOptions::default())
}

pub fn rsd_run_with(
    data: &Dataset,
    family: &HypothesisFamily,
    stat: &dyn SplitStatistic,
    criticals: &CriticalValues,
    options: RsdOptions,
) -> Result<(PartitionTrace, DecisionReport)> {
    let spec = &family.spec;
    if data.k() != spec.k {
        return Err(Error::DimensionMismatch {
            expected: spec.k,
            got: data.k(),
        });
    }
    if spec.problem == Problem::AllPairwise && family.sided == Sidedness::One {
        return Err(Error::Unsupported(
            "one-sided all-pairwise RSD: unordered splits have no direction".into(),
        ));
    }
    let needed = spec.max_splits();
    let big_k = criticals.len();
    if big_k < needed {
        return Err(Error::TooFewCriticals { needed, got: big_k });
    }

    let mut partition = Partition::trivial(spec.k);
    let mut steps = Vec::new();
    let mut stages = Vec::new();
    let mut stage = 1;
    let stop = loop {
        if stage > big_k {
            // unreachable with K ≥ k − 1, kept so a bad family cannot loop
            break StopInfo {
                stage,
                reason: StopReason::NoEligibleBlock,
                threshold: None,
                best: None,
            };
        }
        let threshold = criticals.get(big_k + 1 - stage);
        let mut log = options.record_candidates.then(Vec::new);
        let mut best: Option<(usize, Candidate)> = None;
        for (index, block) in partition.blocks().iter().enumerate() {
            if !spec.is_eligible(block) {
                continue;
            }
            let candidate = best_split(block, spec, data, stat, options.max_block, log.as_mut())?;
            // blocks are ordered by smallest member, so strict > breaks ties
            // toward the lexicographically smallest block
            if best.as_ref().is_none_or(|(_, b)| exceeds(candidate.h, b.h)) {
                best = Some((index, candidate));
            }
        }
        if let Some(candidates) = log {
            stages.push(StageLog {
                stage,
                threshold,
                candidates,
            });
        }
        match best {
            None => {
                break StopInfo {
                    stage,
                    reason: StopReason::NoEligibleBlock,
                    threshold: None,
                    best: None,
                }
            }
            Some((_, candidate)) if candidate.h <= threshold => {
                break StopInfo {
                    stage,
                    reason: StopReason::BelowThreshold,
                    threshold: Some(threshold),
                    best: Some(candidate),
                }
            }
            Some((index, candidate)) => {
                partition.split(index, candidate.split.clone(), candidate.rest.clone());
                steps.push(TraceStep {
                    stage,
                    block: candidate.block,
                    split: candidate.split,
                    rest: candidate.rest,
                    h: candidate.h,
                    threshold,
                });
                stage += 1;
            }
        }
    };

    let report = rsd_decisions(&steps, family);
    Ok((
        PartitionTrace {
            steps,
            stop,
            final_partition: partition,
            stages,
        },
        report,
    ))
}

fn rsd_decisions(steps: &[TraceStep], family: &HypothesisFamily) -> DecisionReport {
    let decisions = family
        .pairs()
        .into_iter()
        .map(|pair| {
            let separating = steps.iter().find(|s| {
                s.block.contains(&pair.i)
                    && s.block.contains(&pair.j)
                    && s.split.contains(&pair.i) != s.split.contains(&pair.j)
            });
            match separating {
                Some(s) => HypothesisDecision {
                    pair,
                    decision: Decision::Reject,
                    statistic: Some(s.h),
                    stage: Some(s.stage),
                },
                None => HypothesisDecision {
                    pair,
                    decision: Decision::Accept,
                    statistic: None,
                    stage: None,
                },
            }
        })
        .collect();
    DecisionReport {
        procedure: ProcedureKind::Rsd,
        decisions,
    }
}

/// Rejects H_ij exactly when i and j lie in different blocks.
pub fn decisions_from_partition(partition: &Partition, family: &HypothesisFamily) -> DecisionReport {
    let decisions = family
        .pairs()
        .into_iter()
        .map(|pair| HypothesisDecision {
            pair,
            decision: if partition.same_block(pair.i, pair.j) {
                Decision::Accept
            } else {
                Decision::Reject
            },
            statistic: None,
            stage: None,
        })
        .collect();
    DecisionReport {
        procedure: ProcedureKind::Rsd,
        decisions,
    }
}
