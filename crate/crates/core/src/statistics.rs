//! Two-sample and pooled-group test statistics, plus critical-value generators.
//!
//! Every function here is pure. Pooling (which rows or populations are
//! combined) happens in [`crate::partition`]; the functions below only see
//! the two already-pooled groups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::normal_quantile;

/// Whether the alternative is directional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    One,
    Two,
}

impl Sidedness {
    /// Maps a signed statistic onto the scale the procedures compare.
    pub fn apply(self, signed: f64) -> f64 {
        match self {
            Sidedness::One => signed,
            Sidedness::Two => signed.abs(),
        }
    }
}

/// k multinomial populations over q ordered cells, stored row-major.
///
/// Counts may be fractional: pooled rows are row averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    counts: Vec<f64>,
    k: usize,
    q: usize,
    labels: Vec<String>,
}

impl ContingencyTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (1..=rows.len()).map(|i| i.to_string()).collect();
        Self::with_labels(rows, labels)
    }

    pub fn with_labels(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let k = rows.len();
        if k < 2 {
            return Err(Error::InvalidData(format!(
                "a contingency table needs at least 2 rows, got {k}"
            )));
        }
        let q = rows[0].len();
        if q < 2 {
            return Err(Error::InvalidData(format!(
                "a contingency table needs at least 2 cells, got {q}"
            )));
        }
        if labels.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: labels.len(),
            });
        }
        let mut counts = Vec::with_capacity(k * q);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    got: row.len(),
                });
            }
            for (l, &c) in row.iter().enumerate() {
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::InvalidData(format!(
                        "cell ({}, {}) must be a finite nonnegative count, got {c}",
                        i + 1,
                        l + 1
                    )));
                }
            }
            counts.extend_from_slice(row);
        }
        Ok(ContingencyTable { counts, k, q, labels })
    }

    /// Builds a table from a flat row-major vector (the layout rays act on).
    pub fn from_flat(k: usize, q: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != k * q {
            return Err(Error::DimensionMismatch {
                expected: k * q,
                got: flat.len(),
            });
        }
        Self::new(flat.chunks(q).map(<[f64]>::to_vec).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.counts[i * self.q..(i + 1) * self.q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.counts.chunks(self.q)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.counts
    }

    pub fn row_total(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }
}

/// What the rows of a [`SampleMatrix`] hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleModel {
    /// One q-variate normal observation per population, unit covariance.
    Normal,
    /// One mean joint rank per population (q = 1).
    RankMeans,
}

/// k×q real matrix, one row per population, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    values: Vec<f64>,
    k: usize,
    q: usize,
    model: SampleModel,
    labels: Vec<String>,
}

impl SampleMatrix {
    pub fn new(rows: Vec<Vec<f64>>, model: SampleModel) -> Result<Self> {
        let labels = (1..=rows.len()).map(|i| i.to_string()).collect();
        Self::with_labels(rows, model, labels)
    }

    pub fn with_labels(rows: Vec<Vec<f64>>, model: SampleModel, labels: Vec<String>) -> Result<Self> {
        let k = rows.len();
        if k < 2 {
            return Err(Error::InvalidData(format!("need at least 2 populations, got {k}")));
        }
        let q = rows[0].len();
        if q == 0 {
            return Err(Error::InvalidData("rows must not be empty".into()));
        }
        if model == SampleModel::RankMeans && q != 1 {
            return Err(Error::InvalidData(format!("rank-mean data has one column, got {q}")));
        }
        if labels.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: labels.len(),
            });
        }
        let mut values = Vec::with_capacity(k * q);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    got: row.len(),
                });
            }
            if let Some(l) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "entry ({}, {}) is not finite",
                    i + 1,
                    l + 1
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(SampleMatrix {
            values,
            k,
            q,
            model,
            labels,
        })
    }

    /// Convenience for univariate data, one value per population.
    pub fn univariate(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect(), SampleModel::Normal)
    }

    pub fn from_flat(k: usize, q: usize, flat: &[f64], model: SampleModel) -> Result<Self> {
        if flat.len() != k * q {
            return Err(Error::DimensionMismatch {
                expected: k * q,
                got: flat.len(),
            });
        }
        Self::new(flat.chunks(q).map(<[f64]>::to_vec).collect(), model)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn model(&self) -> SampleModel {
        self.model
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.q..(i + 1) * self.q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.q)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }
}

/// Where a set of critical values came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalSource {
    /// Two-sided FDR step-up constants.
    Bh,
    /// Residual step-down constants.
    Bg,
    User,
}

/// Strictly increasing critical values C_1 < … < C_K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    values: Vec<f64>,
    source: CriticalSource,
}

impl CriticalValues {
    pub fn new(values: Vec<f64>, source: CriticalSource) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidCriticals("at least one value is required".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidCriticals(format!("non-finite value {v}")));
        }
        if let Some(w) = values.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidCriticals(format!(
                "values must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(CriticalValues { values, source })
    }

    pub fn user(values: Vec<f64>) -> Result<Self> {
        Self::new(values, CriticalSource::User)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `C_m` with the 1-based index used throughout the procedures.
    pub fn get(&self, m: usize) -> f64 {
        self.values[m - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> CriticalSource {
        self.source
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// Two-sided step-up constants Φ⁻¹(1 − (K+1−i)(α/2)/K), i = 1..K (already increasing).
pub fn critical_values_bh(count: usize, alpha: f64) -> Result<CriticalValues> {
    check_alpha(alpha)?;
    if count == 0 {
        return Err(Error::InvalidCriticals("K must be at least 1".into()));
    }
    let k = count as f64;
    let values = (1..=count)
        .map(|i| normal_quantile(1.0 - (k + 1.0 - i as f64) * (alpha / 2.0) / k))
        .collect();
    CriticalValues::new(values, CriticalSource::Bh)
}

/// Residual step-down constants Φ⁻¹(1 − i(α/2)/(K+1−i(1−α/2))).
///
/// The formula decreases in i, so the output position m holds i = K+1−m.
pub fn critical_values_bg(count: usize, alpha: f64) -> Result<CriticalValues> {
    check_alpha(alpha)?;
    if count == 0 {
        return Err(Error::InvalidCriticals("K must be at least 1".into()));
    }
    let k = count as f64;
    let values = (1..=count)
        .rev()
        .map(|i| {
            let i = i as f64;
            normal_quantile(1.0 - i * (alpha / 2.0) / (k + 1.0 - i * (1.0 - alpha / 2.0)))
        })
        .collect();
    CriticalValues::new(values, CriticalSource::Bg)
}

/// Normalized Wilcoxon–Mann–Whitney statistic for a 2×q ordinal table.
///
/// W is the midrank sum of `row_b`; a positive value means `row_b` is
/// stochastically larger. Midranks follow the grouped-data formula, so
/// fractional (row-averaged) counts are accepted. No tie correction is applied
/// to the variance.
pub fn wmw_midrank_z(row_a: &[f64], row_b: &[f64]) -> Result<f64> {
    if row_a.len() != row_b.len() {
        return Err(Error::DimensionMismatch {
            expected: row_a.len(),
            got: row_b.len(),
        });
    }
    let m: f64 = row_a.iter().sum();
    let n: f64 = row_b.iter().sum();
    if !(m > 0.0 && n > 0.0) {
        return Err(Error::DegenerateSample(format!(
            "row totals must be positive, got {m} and {n}"
        )));
    }
    if row_a.iter().chain(row_b).any(|&c| !c.is_finite() || c < 0.0) {
        return Err(Error::InvalidData("cell counts must be finite and nonnegative".into()));
    }

    let mut below = 0.0;
    let mut w = 0.0;
    for (&a, &b) in row_a.iter().zip(row_b) {
        let pooled = a + b;
        w += (below + (pooled + 1.0) / 2.0) * b;
        below += pooled;
    }
    let total = m + n;
    Ok((w - n * (total + 1.0) / 2.0) / (m * n * (total + 1.0) / 12.0).sqrt())
}

/// Standardized distance between two pooled normal group means.
///
/// For q = 1 this is (b̄ − ā)/√(1/n_a + 1/n_b), absolute when two-sided; for
/// q > 1 it is the quadratic form |ā − b̄|²/(1/n_a + 1/n_b), which is
/// direction-free and ignores `sided`.
pub fn normal_h(mean_a: &[f64], n_a: usize, mean_b: &[f64], n_b: usize, sided: Sidedness) -> Result<f64> {
    if n_a == 0 || n_b == 0 {
        return Err(Error::DegenerateSample("group sizes must be positive".into()));
    }
    if mean_a.len() != mean_b.len() {
        return Err(Error::DimensionMismatch {
            expected: mean_a.len(),
            got: mean_b.len(),
        });
    }
    if mean_a.is_empty() {
        return Err(Error::InvalidData("mean vectors are empty".into()));
    }
    let scale = 1.0 / n_a as f64 + 1.0 / n_b as f64;
    if mean_a.len() == 1 {
        Ok(sided.apply((mean_b[0] - mean_a[0]) / scale.sqrt()))
    } else {
        let ss: f64 = mean_a.iter().zip(mean_b).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(ss / scale)
    }
}

/// (x_i − x_j)'(x_i − x_j)/2, chi-squared on q degrees of freedom under H_ij.
pub fn chisq_pair_stat(x_i: &[f64], x_j: &[f64]) -> Result<f64> {
    if x_i.len() != x_j.len() {
        return Err(Error::DimensionMismatch {
            expected: x_i.len(),
            got: x_j.len(),
        });
    }
    Ok(x_i.iter().zip(x_j).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / 2.0)
}

/// Scale constants for the joint-rank statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankScale {
    /// Observations per population.
    pub n: usize,
    /// Number of populations.
    pub k: usize,
    /// Variance constant; defaults to k(kn+1).
    pub w: f64,
}

impl RankScale {
    pub fn new(n: usize, k: usize) -> Self {
        RankScale {
            n,
            k,
            w: (k * (k * n + 1)) as f64,
        }
    }

    pub fn with_w(mut self, w: f64) -> Self {
        self.w = w;
        self
    }
}

/// Pooled joint-rank statistic (Y(A)/N(A) − Y(B)/N(B))/σ with
/// σ² = w(1/N(A) + 1/N(B))/12 and N(·) = n·|·|.
///
/// `rank_sums[i]` is the total of the joint ranks of population i.
pub fn rank_h(
    group_a: &[usize],
    group_b: &[usize],
    rank_sums: &[f64],
    scale: &RankScale,
    sided: Sidedness,
) -> Result<f64> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::InvalidGroup("groups must be nonempty".into()));
    }
    if let Some(i) = group_a.iter().find(|i| group_b.contains(i)) {
        return Err(Error::InvalidGroup(format!("population {i} appears in both groups")));
    }
    if let Some(&i) = group_a.iter().chain(group_b).find(|&&i| i >= rank_sums.len()) {
        return Err(Error::InvalidGroup(format!(
            "population {i} out of range for {} rank sums",
            rank_sums.len()
        )));
    }
    if scale.n == 0 {
        return Err(Error::DegenerateSample("sample size per population is zero".into()));
    }
    let total = |g: &[usize]| g.iter().map(|&i| rank_sums[i]).sum::<f64>();
    let n_a = (scale.n * group_a.len()) as f64;
    let n_b = (scale.n * group_b.len()) as f64;
    Ok(rank_h_pooled(total(group_a), n_a, total(group_b), n_b, scale.w, sided))
}

/// [`rank_h`] on already pooled totals.
pub(crate) fn rank_h_pooled(y_a: f64, n_a: f64, y_b: f64, n_b: f64, w: f64, sided: Sidedness) -> f64 {
    let sigma = (w * (1.0 / n_a + 1.0 / n_b) / 12.0).sqrt();
    sided.apply((y_a / n_a - y_b / n_b) / sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNTS: [[f64; 3]; 3] = [[15.0, 226.0, 4.0], [4.0, 226.0, 15.0], [6.0, 196.0, 43.0]];
    const TABLE2: [[f64; 3]; 3] = [[16.0, 226.0, 3.0], [3.0, 226.0, 16.0], [6.0, 196.0, 43.0]];

    #[test]
    fn wmw_reported_values() {
        let z12 = wmw_midrank_z(&COUNTS[0], &COUNTS[1]).unwrap();
        let z23 = wmw_midrank_z(&COUNTS[1], &COUNTS[2]).unwrap();
        let z12_star = wmw_midrank_z(&TABLE2[0], &TABLE2[1]).unwrap();
        assert!((z12 - 1.653).abs() < 1e-3, "{z12}");
        assert!((z23 - 2.006).abs() < 1e-3, "{z23}");
        assert!((z12_star - 1.954).abs() < 1e-3, "{z12_star}");
    }

    #[test]
    fn wmw_identical_rows_is_zero() {
        let row = [3.0, 7.5, 1.0, 2.0];
        assert_eq!(wmw_midrank_z(&row, &row).unwrap(), 0.0);
    }

    #[test]
    fn wmw_errors() {
        assert!(matches!(
            wmw_midrank_z(&[0.0, 0.0], &[1.0, 2.0]),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            wmw_midrank_z(&[1.0, 0.0], &[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn normal_h_example_values() {
        let rest = (4.0 - 2.0 + 0.0) / 3.0;
        let h = normal_h(&[1.0], 1, &[rest], 3, Sidedness::Two).unwrap();
        assert!((h - 0.29).abs() < 0.005, "{h}");
        let h = normal_h(&[4.0], 1, &[-1.0 / 3.0], 3, Sidedness::Two).unwrap();
        assert!((h - 3.75).abs() < 0.005, "{h}");
        assert_eq!(normal_h(&[2.0], 4, &[2.0], 7, Sidedness::Two).unwrap(), 0.0);
    }

    #[test]
    fn normal_h_sign_and_errors() {
        let one = normal_h(&[1.0], 1, &[0.0], 1, Sidedness::One).unwrap();
        assert!((one + 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(normal_h(&[1.0], 0, &[0.0], 1, Sidedness::Two).is_err());
        assert!(normal_h(&[1.0, 2.0], 1, &[0.0], 1, Sidedness::Two).is_err());
    }

    #[test]
    fn normal_h_multivariate_matches_pair_stat_for_singletons() {
        let a = [1.0, -2.0, 0.5];
        let b = [0.0, 1.0, 2.0];
        let h = normal_h(&a, 1, &b, 1, Sidedness::Two).unwrap();
        assert!((h - chisq_pair_stat(&a, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn chisq_pair_examples() {
        assert_eq!(chisq_pair_stat(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(chisq_pair_stat(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(chisq_pair_stat(&[3.0], &[0.0]).unwrap(), 4.5);
        assert!(chisq_pair_stat(&[3.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn rank_h_hand_example() {
        // ranks {1,2} in population 0, {3,4} in population 1
        let h = rank_h(&[0], &[1], &[3.0, 7.0], &RankScale::new(2, 2), Sidedness::One).unwrap();
        assert!((h + 2.191).abs() < 1e-3, "{h}");
        let h2 = rank_h(&[0], &[1], &[3.0, 7.0], &RankScale::new(2, 2), Sidedness::Two).unwrap();
        assert!((h2 - 2.191).abs() < 1e-3);
    }

    #[test]
    fn rank_h_equal_means_and_errors() {
        let s = RankScale::new(2, 3);
        assert_eq!(
            rank_h(&[0], &[1, 2], &[7.0, 6.0, 8.0], &s, Sidedness::Two).unwrap(),
            0.0
        );
        assert!(rank_h(&[0, 1], &[1], &[1.0, 2.0], &s, Sidedness::Two).is_err());
        assert!(rank_h(&[], &[1], &[1.0, 2.0], &s, Sidedness::Two).is_err());
    }

    #[test]
    fn rank_scale_override() {
        let s = RankScale::new(3, 4);
        assert_eq!(s.w, 52.0);
        assert_eq!(s.with_w(156.0).w, 156.0);
    }

    #[test]
    fn bg_and_bh_reference_lists() {
        let bg = critical_values_bg(3, 0.05).unwrap();
        for (v, e) in bg.values().iter().zip([1.48, 1.97, 2.40]) {
            assert!((v - e).abs() < 0.005, "{v} vs {e}");
        }
        let bh = critical_values_bh(3, 0.05).unwrap();
        for (v, e) in bh.values().iter().zip([1.960, 2.128, 2.394]) {
            assert!((v - e).abs() < 0.005, "{v} vs {e}");
        }
        assert!((critical_values_bg(1, 0.05).unwrap().get(1) - 1.970_51).abs() < 1e-4);
        assert!((critical_values_bh(1, 0.05).unwrap().get(1) - 1.959_964).abs() < 1e-5);
    }

    #[test]
    fn critical_value_errors() {
        assert!(matches!(critical_values_bh(3, 0.0), Err(Error::AlphaOutOfRange(_))));
        assert!(matches!(critical_values_bg(3, 1.0), Err(Error::AlphaOutOfRange(_))));
        assert!(critical_values_bg(0, 0.05).is_err());
        assert!(CriticalValues::user(vec![1.0, 1.0]).is_err());
        assert!(CriticalValues::user(vec![]).is_err());
        assert!(CriticalValues::user(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn table_validation() {
        assert!(ContingencyTable::new(vec![vec![1.0, 2.0]]).is_err());
        assert!(ContingencyTable::new(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(ContingencyTable::new(vec![vec![1.0, -2.0], vec![1.0, 1.0]]).is_err());
        let t = ContingencyTable::new(COUNTS.iter().map(|r| r.to_vec()).collect()).unwrap();
        assert_eq!((t.k(), t.q()), (3, 3));
        assert!((0..3).all(|i| t.row_total(i) == 245.0));
    }
}
