//! Independent brute-force oracles shared by the oracle and acceptance tests.

#![allow(dead_code)]

use intervalmt::statistics::wmw_midrank_z;
use intervalmt::{
    dispersion_max, ContingencyTable, Dataset, ModelStatistic, Problem, RankData, SampleMatrix, SampleModel,
    SetFamilySpec, Sidedness,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Midranks of `values` (1-based, ties averaged) by sorting.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        let mid = (start + end) as f64 / 2.0 + 1.0;
        for &o in &order[start..=end] {
            ranks[o] = mid;
        }
        start = end + 1;
    }
    ranks
}

/// Z from observation-level midranks of the expanded 2×q table.
pub fn wmw_by_observations(row_a: &[usize], row_b: &[usize]) -> f64 {
    let mut values = Vec::new();
    let mut from_b = Vec::new();
    for (cell, (&a, &b)) in row_a.iter().zip(row_b).enumerate() {
        for _ in 0..a {
            values.push(cell as f64);
            from_b.push(false);
        }
        for _ in 0..b {
            values.push(cell as f64);
            from_b.push(true);
        }
    }
    let ranks = midranks(&values);
    let w: f64 = ranks.iter().zip(&from_b).filter(|(_, &b)| b).map(|(r, _)| r).sum();
    let m = row_a.iter().sum::<usize>() as f64;
    let n = row_b.iter().sum::<usize>() as f64;
    (w - n * (m + n + 1.0) / 2.0) / (m * n * (m + n + 1.0) / 12.0).sqrt()
}

fn cells(limit: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..=limit {
        for b in 0..=limit - a {
            for c in 0..=limit - a - b {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Compares the cell-count WMW formula with observation-level midranks on
/// every 2×3 table with positive row totals and grand total ≤ `max_total`.
/// Returns the number of tables checked and any mismatches.
pub fn wmw_small_table_mismatches(max_total: usize) -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut bad = Vec::new();
    for a in cells(max_total) {
        let used: usize = a.iter().sum();
        if used == 0 {
            continue;
        }
        for b in cells(max_total - used) {
            if b.iter().sum::<usize>() == 0 {
                continue;
            }
            let fa: Vec<f64> = a.iter().map(|&v| v as f64).collect();
            let fb: Vec<f64> = b.iter().map(|&v| v as f64).collect();
            let z = wmw_midrank_z(&fa, &fb).unwrap();
            let oracle = wmw_by_observations(&a, &b);
            if (z - oracle).abs() > 1e-12 {
                bad.push(format!("{a:?} {b:?}: {z} vs {oracle}"));
            }
            checked += 1;
        }
    }
    (checked, bad)
}

/// Is `a` (sorted) an admissible first part of `block` (sorted)?
fn admissible_first(problem: Problem, block: &[usize], a: &[usize], control: usize) -> bool {
    if a.is_empty() || a.len() == block.len() {
        return false;
    }
    match problem {
        // both parts runs of consecutive integers, A the lower one
        Problem::ChangePoint => a == &block[..a.len()],
        Problem::TreatmentsVsControl => a.len() == 1 && a[0] != control,
        Problem::AllPairwise => a[0] == block[0],
    }
}

fn pooled_mean(data: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let q = data[0].len();
    (0..q)
        .map(|l| members.iter().map(|&i| data[i][l]).sum::<f64>() / members.len() as f64)
        .collect()
}

/// Mann–Whitney Z from pair counts: U = #(a < b) + ½#(a = b) over the
/// (fractional) cell masses.
pub fn wmw_by_pairs(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for (la, &ma) in a.iter().enumerate() {
        for (lb, &mb) in b.iter().enumerate() {
            u += ma
                * mb
                * if la < lb {
                    1.0
                } else if la == lb {
                    0.5
                } else {
                    0.0
                };
        }
    }
    let m: f64 = a.iter().sum();
    let n: f64 = b.iter().sum();
    (u - m * n / 2.0) / (m * n * (m + n + 1.0) / 12.0).sqrt()
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Multinomial,
    Normal,
    Rank,
}

fn oracle_h(kind: Kind, rows: &[Vec<f64>], n: usize, a: &[usize], b: &[usize], sided: Sidedness) -> f64 {
    let (ma, mb) = (pooled_mean(rows, a), pooled_mean(rows, b));
    let signed = match kind {
        Kind::Multinomial => wmw_by_pairs(&ma, &mb),
        Kind::Normal if ma.len() == 1 => (mb[0] - ma[0]) / (1.0 / a.len() as f64 + 1.0 / b.len() as f64).sqrt(),
        Kind::Normal => {
            let d: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y).powi(2)).sum();
            return d / (1.0 / a.len() as f64 + 1.0 / b.len() as f64);
        }
        Kind::Rank => {
            let k = rows.len() as f64;
            let w = k * (k * n as f64 + 1.0);
            let (na, nb) = ((n * a.len()) as f64, (n * b.len()) as f64);
            // rows hold per-population mean ranks, so pooled means are per observation
            (mb[0] - ma[0]) / (w * (1.0 / na + 1.0 / nb) / 12.0).sqrt()
        }
    };
    match sided {
        Sidedness::One => signed,
        Sidedness::Two => signed.abs(),
    }
}

/// Runs `instances` random (model, family, block) cases with k ≤ 5 and
/// compares `dispersion_max` with exhaustive enumeration of every subset.
pub fn dispersion_mismatches(instances: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for instance in 0..instances {
        let kind = [Kind::Multinomial, Kind::Normal, Kind::Rank][instance % 3];
        let problem = [Problem::ChangePoint, Problem::TreatmentsVsControl, Problem::AllPairwise][(instance / 3) % 3];
        let k = rng.gen_range(2..=5);
        let sided = if problem == Problem::AllPairwise || rng.gen_bool(0.5) {
            Sidedness::Two
        } else {
            Sidedness::One
        };
        let spec = SetFamilySpec::new(problem, k).unwrap();
        let control = k - 1;

        let mut n = 1;
        let (rows, data): (Vec<Vec<f64>>, Dataset) = match kind {
            Kind::Multinomial => {
                let q = rng.gen_range(2..=4);
                let rows: Vec<Vec<f64>> = (0..k)
                    .map(|_| (0..q).map(|_| rng.gen_range(1..30) as f64).collect())
                    .collect();
                (rows.clone(), Dataset::Multinomial(ContingencyTable::new(rows).unwrap()))
            }
            Kind::Normal => {
                let q = rng.gen_range(1..=3);
                let rows: Vec<Vec<f64>> = (0..k)
                    .map(|_| (0..q).map(|_| rng.gen_range(-3.0..3.0)).collect())
                    .collect();
                (
                    rows.clone(),
                    Dataset::Normal(SampleMatrix::new(rows, SampleModel::Normal).unwrap()),
                )
            }
            Kind::Rank => {
                n = rng.gen_range(2..=5);
                let obs: Vec<Vec<f64>> = (0..k)
                    .map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect())
                    .collect();
                let rd = RankData::from_observations(&obs).unwrap();
                let rows = rd.mean_ranks().rows().map(<[f64]>::to_vec).collect();
                (rows, Dataset::Rank(rd))
            }
        };

        let block: Vec<usize> = match problem {
            Problem::ChangePoint => {
                let start = rng.gen_range(0..k - 1);
                let end = rng.gen_range(start + 1..k);
                (start..=end).collect()
            }
            Problem::TreatmentsVsControl => {
                let mut b: Vec<usize> = (0..k - 1).filter(|_| rng.gen_bool(0.7)).collect();
                if b.is_empty() {
                    b.push(rng.gen_range(0..k - 1));
                }
                b.push(control);
                b
            }
            Problem::AllPairwise => loop {
                let b: Vec<usize> = (0..k).filter(|_| rng.gen_bool(0.7)).collect();
                if b.len() >= 2 {
                    break b;
                }
            },
        };

        let mut best: Option<(Vec<usize>, f64)> = None;
        for mask in 1u32..(1 << block.len()) - 1 {
            let a: Vec<usize> = block
                .iter()
                .enumerate()
                .filter(|(p, _)| mask & (1 << p) != 0)
                .map(|(_, &m)| m)
                .collect();
            if !admissible_first(problem, &block, &a, control) {
                continue;
            }
            let b: Vec<usize> = block.iter().copied().filter(|m| !a.contains(m)).collect();
            let h = oracle_h(kind, &rows, n, &a, &b, sided);
            let better = match &best {
                None => true,
                Some((ba, bh)) => h > *bh + 1e-12 || ((h - bh).abs() <= 1e-12 && a < *ba),
            };
            if better {
                best = Some((a, h));
            }
        }
        let (split, hmax) = best.expect("every eligible block has a split");

        let stat = ModelStatistic::for_dataset(&data, sided);
        let got = dispersion_max(&block, &spec, &data, &stat).unwrap();
        if (got.h - hmax).abs() > 1e-9 || got.split != split {
            bad.push(format!(
                "instance {instance} {kind:?} {problem} block {block:?}: {:?} {} vs {split:?} {hmax}",
                got.split, got.h
            ));
        }
    }
    bad
}
