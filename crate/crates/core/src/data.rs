//! Observed data for the three probability models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statistics::{ContingencyTable, RankScale, SampleMatrix, SampleModel};

/// Which probability model the data come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Multinomial,
    Normal,
    Rank,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Multinomial => "multinomial",
            Model::Normal => "normal",
            Model::Rank => "rank",
        })
    }
}

/// Mean joint ranks of k populations with n observations each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankData {
    mean_ranks: SampleMatrix,
    scale: RankScale,
}

impl RankData {
    pub fn new(mean_ranks: &[f64], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidData(
                "observations per population must be positive".into(),
            ));
        }
        let matrix = SampleMatrix::new(mean_ranks.iter().map(|&r| vec![r]).collect(), SampleModel::RankMeans)?;
        let scale = RankScale::new(n, matrix.k());
        Ok(RankData {
            mean_ranks: matrix,
            scale,
        })
    }

    /// Jointly ranks all observations (midranks for ties) and keeps each
    /// population's mean rank. Every population must have the same size.
    pub fn from_observations(groups: &[Vec<f64>]) -> Result<Self> {
        let n = groups.first().map_or(0, Vec::len);
        if groups.iter().any(|g| g.len() != n) {
            return Err(Error::InvalidData(
                "all populations need the same number of observations".into(),
            ));
        }
        if groups.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("observations must be finite".into()));
        }
        let ranks = joint_midranks(groups);
        let means: Vec<f64> = ranks
            .chunks(n.max(1))
            .map(|r| r.iter().sum::<f64>() / n as f64)
            .collect();
        Self::new(&means, n)
    }

    pub fn with_w(mut self, w: f64) -> Self {
        self.scale = self.scale.with_w(w);
        self
    }

    pub fn k(&self) -> usize {
        self.mean_ranks.k()
    }

    pub fn n(&self) -> usize {
        self.scale.n
    }

    pub fn scale(&self) -> &RankScale {
        &self.scale
    }

    pub fn mean_ranks(&self) -> &SampleMatrix {
        &self.mean_ranks
    }

    /// Per-population rank totals n·R_i.
    pub fn rank_sums(&self) -> Vec<f64> {
        self.mean_ranks.rows().map(|r| r[0] * self.scale.n as f64).collect()
    }
}

/// Midranks of the concatenation of `groups`, in the same order.
fn joint_midranks(groups: &[Vec<f64>]) -> Vec<f64> {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.sort_by(|&a, &b| all[a].total_cmp(&all[b]));
    let mut ranks = vec![0.0; all.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && all[order[end]] == all[order[start]] {
            end += 1;
        }
        let mid = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mid;
        }
        start = end;
    }
    ranks
}

/// Observed data under one of the three models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "data", rename_all = "kebab-case")]
pub enum Dataset {
    Multinomial(ContingencyTable),
    Normal(SampleMatrix),
    Rank(RankData),
}

impl Dataset {
    pub fn model(&self) -> Model {
        match self {
            Dataset::Multinomial(_) => Model::Multinomial,
            Dataset::Normal(_) => Model::Normal,
            Dataset::Rank(_) => Model::Rank,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Dataset::Multinomial(t) => t.k(),
            Dataset::Normal(m) => m.k(),
            Dataset::Rank(r) => r.k(),
        }
    }

    /// Width of one population's data vector.
    pub fn q(&self) -> usize {
        match self {
            Dataset::Multinomial(t) => t.q(),
            Dataset::Normal(m) => m.q(),
            Dataset::Rank(_) => 1,
        }
    }

    /// Population i's data vector (cell counts, observation, or mean rank).
    pub fn row(&self, i: usize) -> &[f64] {
        match self {
            Dataset::Multinomial(t) => t.row(i),
            Dataset::Normal(m) => m.row(i),
            Dataset::Rank(r) => r.mean_ranks.row(i),
        }
    }

    /// All data as one flat k·q vector, the layout direction vectors act on.
    pub fn flat(&self) -> &[f64] {
        match self {
            Dataset::Multinomial(t) => t.as_flat(),
            Dataset::Normal(m) => m.as_flat(),
            Dataset::Rank(r) => r.mean_ranks.as_flat(),
        }
    }

    /// Rebuilds a dataset of the same model and shape from a flat vector.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Dataset> {
        match self {
            Dataset::Multinomial(t) => Ok(Dataset::Multinomial(ContingencyTable::from_flat(t.k(), t.q(), flat)?)),
            Dataset::Normal(m) => Ok(Dataset::Normal(SampleMatrix::from_flat(m.k(), m.q(), flat, m.model())?)),
            Dataset::Rank(r) => {
                let mut out = RankData::new(flat, r.n())?;
                out.scale = r.scale;
                Ok(Dataset::Rank(out))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_with_ties() {
        let r = joint_midranks(&[vec![1.0, 2.0], vec![2.0, 5.0]]);
        assert_eq!(r, vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn rank_data_from_observations() {
        let d = RankData::from_observations(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        assert_eq!(d.rank_sums(), vec![3.0, 7.0]);
        assert_eq!(d.scale().w, 10.0);
        assert!(RankData::from_observations(&[vec![0.1], vec![0.3, 0.4]]).is_err());
    }

    #[test]
    fn with_flat_keeps_shape() {
        let t = ContingencyTable::new(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let d = Dataset::Multinomial(t);
        let e = d.with_flat(&[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert_eq!(e.row(1), &[4.0, 3.0]);
        assert!(d.with_flat(&[-1.0, 1.0, 4.0, 3.0]).is_err());
    }

    #[test]
    fn rank_with_flat_keeps_w_override() {
        let d = Dataset::Rank(RankData::new(&[1.5, 3.5], 2).unwrap().with_w(20.0));
        match d.with_flat(&[2.0, 3.0]).unwrap() {
            Dataset::Rank(r) => assert_eq!(r.scale().w, 20.0),
            _ => unreachable!(),
        }
    }
}
