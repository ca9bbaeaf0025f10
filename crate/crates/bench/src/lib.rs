//! Deterministic workloads shared by the benchmarks.

pub use intervalmt::*;

/// A spread of values in [-2, 2] that is fixed across runs.
fn wave(i: usize, salt: usize) -> f64 {
    2.0 * ((i * 7 + salt * 13) as f64 * 0.618_034).sin()
}

/// Univariate normal data with `k` populations.
pub fn normal_data(k: usize) -> Dataset {
    let x: Vec<f64> = (0..k).map(|i| wave(i, 1)).collect();
    Dataset::Normal(SampleMatrix::univariate(&x).expect("k >= 1"))
}

/// A k × q contingency table with counts between 5 and 45.
pub fn multinomial_data(k: usize, q: usize) -> Dataset {
    let rows = (0..k)
        .map(|i| (0..q).map(|l| (25.0 + 10.0 * wave(i, l)).round()).collect())
        .collect();
    Dataset::Multinomial(ContingencyTable::new(rows).expect("positive counts"))
}

/// Joint ranks of k populations with n observations each.
pub fn rank_data(k: usize, n: usize) -> Dataset {
    let obs: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..n).map(|r| wave(i, r) + i as f64 * 0.1).collect())
        .collect();
    Dataset::Rank(RankData::from_observations(&obs).expect("n >= 1"))
}

pub fn family(problem: Problem, k: usize, sided: Sidedness) -> HypothesisFamily {
    HypothesisFamily::new(SetFamilySpec::new(problem, k).expect("k >= 2"), sided)
}
