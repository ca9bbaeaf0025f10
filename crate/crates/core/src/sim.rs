//! Monte Carlo comparison of RSD and the step-up procedure on the
//! univariate normal treatments-versus-control problem.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::decision::{DecisionReport, ProcedureKind};
use crate::error::{Error, Result};
use crate::family::{HypothesisFamily, Problem, SetFamilySpec};
use crate::procedure::Procedure;
use crate::statistics::{critical_values_bg, critical_values_bh, CriticalValues, SampleMatrix, Sidedness};
use crate::stepwise::StatKind;

/// Treatments `first..=last` (1-based treatment numbers) share `mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanBlock {
    pub first: usize,
    pub last: usize,
    pub mean: f64,
}

/// Population k is the control; populations 1..k−1 are treatments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub k: usize,
    pub blocks: Vec<MeanBlock>,
    pub control_mean: f64,
    /// Multiplies every block mean before sampling.
    pub mean_scale: f64,
    pub iterations: usize,
    pub rsd_alpha: f64,
    pub su_alpha: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least one treatment and a control, got k = {}",
                self.k
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        for alpha in [self.rsd_alpha, self.su_alpha] {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::AlphaOutOfRange(alpha));
            }
        }
        if !self.mean_scale.is_finite() || !self.control_mean.is_finite() {
            return Err(Error::InvalidConfig("means must be finite".into()));
        }
        let mut blocks = self.blocks.clone();
        blocks.sort_by_key(|b| b.first);
        for b in &blocks {
            if b.first < 1 || b.first > b.last || b.last > self.k - 1 {
                return Err(Error::InvalidConfig(format!(
                    "treatment range {}..={} must lie within 1..={}",
                    b.first,
                    b.last,
                    self.k - 1
                )));
            }
            if !b.mean.is_finite() {
                return Err(Error::InvalidConfig("means must be finite".into()));
            }
        }
        if let Some(w) = blocks.windows(2).find(|w| w[1].first <= w[0].last) {
            return Err(Error::InvalidConfig(format!(
                "treatment ranges {}..={} and {}..={} overlap",
                w[0].first, w[0].last, w[1].first, w[1].last
            )));
        }
        Ok(())
    }

    /// Population means, control last.
    pub fn means(&self) -> Vec<f64> {
        let mut mu = vec![self.control_mean; self.k];
        for b in &self.blocks {
            for m in &mut mu[b.first - 1..b.last] {
                *m = b.mean * self.mean_scale;
            }
        }
        mu
    }
}

/// A Monte Carlo mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub mcse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub type_i: Estimate,
    pub type_ii: Estimate,
    pub total: Estimate,
    pub fdr: Estimate,
}

impl Metrics {
    pub fn get(&self, metric: Metric) -> Estimate {
        match metric {
            Metric::TypeI => self.type_i,
            Metric::TypeII => self.type_ii,
            Metric::Total => self.total,
            Metric::Fdr => self.fdr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub iterations: usize,
    pub seed: u64,
    pub rsd: Metrics,
    pub su: Metrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    TypeI,
    TypeII,
    Total,
    Fdr,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::TypeI, Metric::TypeII, Metric::Total, Metric::Fdr];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TypeI => "type_i",
            Metric::TypeII => "type_ii",
            Metric::Total => "total",
            Metric::Fdr => "fdr",
        }
    }
}

/// Per-iteration tallies: false rejections, missed rejections, total, false discovery proportion.
fn tally(report: &DecisionReport, null: &[bool]) -> [f64; 4] {
    let (mut false_rej, mut missed, mut rejected) = (0usize, 0usize, 0usize);
    for (d, &is_null) in report.decisions.iter().zip(null) {
        match (d.decision.is_reject(), is_null) {
            (true, true) => {
                false_rej += 1;
                rejected += 1;
            }
            (true, false) => rejected += 1,
            (false, false) => missed += 1,
            (false, true) => {}
        }
    }
    [
        false_rej as f64,
        missed as f64,
        (false_rej + missed) as f64,
        false_rej as f64 / rejected.max(1) as f64,
    ]
}

fn summarize(samples: &[[f64; 8]], offset: usize) -> Metrics {
    let n = samples.len() as f64;
    let est = |col: usize| {
        let mean = samples.iter().map(|s| s[col]).sum::<f64>() / n;
        let mcse = if samples.len() > 1 {
            let var = samples.iter().map(|s| (s[col] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, mcse }
    };
    Metrics {
        type_i: est(offset),
        type_ii: est(offset + 1),
        total: est(offset + 2),
        fdr: est(offset + 3),
    }
}

/// The two procedures being compared, built once per configuration.
struct Arms {
    rsd: Procedure,
    su: Procedure,
}

impl Arms {
    fn new(config: &SimConfig) -> Result<Self> {
        let family = HypothesisFamily::new(
            SetFamilySpec::new(Problem::TreatmentsVsControl, config.k)?,
            Sidedness::Two,
        );
        let big_k = config.k - 1;
        let rsd_c: CriticalValues = critical_values_bg(big_k, config.rsd_alpha)?;
        let su_c = critical_values_bh(big_k, config.su_alpha)?;
        Ok(Arms {
            rsd: Procedure::new(ProcedureKind::Rsd, family.clone(), rsd_c),
            su: Procedure::new(ProcedureKind::StepUp, family, su_c).with_pair_statistic(StatKind::ZDifference),
        })
    }
}

/// Runs both procedures for `config.iterations` independent draws.
///
/// Iteration t draws from stream t of a ChaCha generator seeded with
/// `config.seed`, so the result is identical for any thread count.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let arms = Arms::new(config)?;
    let mu = config.means();
    let control = mu[config.k - 1];
    let null: Vec<bool> = arms.rsd.family.pairs().iter().map(|p| mu[p.i] == control).collect();

    let samples: Vec<[f64; 8]> = (0..config.iterations)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let x: Vec<f64> = mu
                .iter()
                .map(|m| m + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            let data = Dataset::Normal(SampleMatrix::univariate(&x)?);
            let r = tally(&arms.rsd.decide(&data)?, &null);
            let s = tally(&arms.su.decide(&data)?, &null);
            Ok([r[0], r[1], r[2], r[3], s[0], s[1], s[2], s[3]])
        })
        .collect::<Result<_>>()?;

    Ok(SimResult {
        iterations: config.iterations,
        seed: config.seed,
        rsd: summarize(&samples, 0),
        su: summarize(&samples, 4),
    })
}

/// Reference values for one parameter point: means of the three treatment
/// blocks, then type I, type II, total and FDR for RSD and SU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub means: [f64; 3],
    pub rsd: [f64; 4],
    pub su: [f64; 4],
}

impl ReferenceRow {
    pub fn value(&self, procedure: ProcedureKind, metric: Metric) -> f64 {
        let v = if procedure == ProcedureKind::Rsd {
            &self.rsd
        } else {
            &self.su
        };
        v[Metric::ALL.iter().position(|&m| m == metric).expect("metric listed")]
    }
}

const fn row(means: [f64; 3], t1: [f64; 2], t2: [f64; 2], tot: [f64; 2], fdr: [f64; 2]) -> ReferenceRow {
    ReferenceRow {
        means,
        rsd: [t1[0], t2[0], tot[0], fdr[0]],
        su: [t1[1], t2[1], tot[1], fdr[1]],
    }
}

const TABLE5: [ReferenceRow; 17] = [
    row([0.0, 0.0, 0.0], [0.1, 0.7], [0.0, 0.0], [0.1, 0.7], [0.048, 0.045]),
    row([0.0, 0.0, -2.0], [0.1, 0.7], [3.5, 4.4], [3.6, 5.1], [0.046, 0.050]),
    row([0.0, 0.0, -4.0], [0.3, 0.8], [0.0, 0.8], [0.4, 1.6], [0.051, 0.054]),
    row([0.0, 2.0, -2.0], [0.3, 0.7], [6.0, 8.8], [6.2, 9.5], [0.045, 0.044]),
    row([0.0, 2.0, 2.0], [0.2, 0.8], [6.8, 8.5], [7.0, 9.2], [0.048, 0.044]),
    row([0.0, 2.0, -4.0], [0.4, 1.0], [2.7, 4.6], [3.1, 5.6], [0.049, 0.054]),
    row([0.0, 2.0, 4.0], [0.4, 0.8], [2.7, 4.8], [3.2, 5.6], [0.048, 0.048]),
    row([0.0, 4.0, -4.0], [0.6, 0.9], [0.0, 1.0], [0.6, 1.9], [0.050, 0.052]),
    row([0.0, 4.0, 4.0], [0.6, 0.9], [0.0, 1.1], [0.6, 2.0], [0.049, 0.050]),
    row([2.0, 2.0, -2.0], [0.4, 0.9], [8.1, 12.8], [8.5, 13.7], [0.045, 0.048]),
    row([2.0, 2.0, 2.0], [0.4, 0.9], [10.0, 12.3], [10.3, 13.2], [0.055, 0.045]),
    row([2.0, 2.0, -4.0], [0.6, 0.9], [5.3, 8.2], [5.9, 9.2], [0.051, 0.048]),
    row([2.0, 2.0, 4.0], [0.6, 0.9], [5.3, 8.6], [5.9, 9.4], [0.034, 0.047]),
    row([2.0, 4.0, -4.0], [0.7, 1.1], [2.3, 4.6], [3.0, 5.7], [0.049, 0.052]),
    row([2.0, 4.0, 4.0], [0.7, 1.0], [2.3, 4.7], [3.0, 5.7], [0.049, 0.049]),
    row([4.0, 4.0, -4.0], [0.8, 1.2], [0.0, 1.1], [0.8, 2.3], [0.048, 0.050]),
    row([4.0, 4.0, 4.0], [0.8, 1.3], [0.0, 1.3], [0.9, 2.6], [0.050, 0.055]),
];

const TABLE6: [ReferenceRow; 17] = [
    row([0.0, 0.0, 0.0], [0.0, 0.5], [0.0, 0.0], [0.0, 0.5], [0.031, 0.038]),
    row([0.0, 0.0, -2.0], [0.1, 0.7], [6.1, 6.9], [6.2, 7.6], [0.029, 0.046]),
    row([0.0, 0.0, -4.0], [0.3, 0.8], [0.0, 0.9], [0.3, 1.8], [0.031, 0.051]),
    row([0.0, 2.0, -2.0], [0.2, 0.8], [9.6, 13.7], [9.8, 14.5], [0.027, 0.043]),
    row([0.0, 2.0, 2.0], [0.2, 0.8], [12.1, 13.0], [12.3, 13.8], [0.037, 0.043]),
    row([0.0, 2.0, -4.0], [0.4, 1.1], [4.5, 6.7], [4.9, 7.8], [0.030, 0.051]),
    row([0.0, 2.0, 4.0], [0.4, 1.0], [4.6, 6.9], [5.0, 7.9], [0.029, 0.048]),
    row([0.0, 4.0, -4.0], [0.5, 1.4], [0.0, 1.2], [0.6, 2.6], [0.030, 0.056]),
    row([0.0, 4.0, 4.0], [0.5, 1.3], [0.0, 1.3], [0.6, 2.6], [0.030, 0.053]),
    row([2.0, 2.0, -2.0], [0.3, 1.0], [13.3, 19.6], [13.6, 20.6], [0.028, 0.045]),
    row([2.0, 2.0, 2.0], [0.3, 1.0], [19.2, 18.8], [19.5, 19.7], [0.058, 0.040]),
    row([2.0, 2.0, -4.0], [0.5, 1.0], [9.4, 12.1], [9.9, 13.1], [0.034, 0.045]),
    row([2.0, 2.0, 4.0], [0.5, 1.0], [9.4, 12.5], [10.0, 13.5], [0.034, 0.045]),
    row([2.0, 4.0, -4.0], [0.6, 1.3], [3.8, 6.5], [4.5, 7.8], [0.030, 0.048]),
    row([2.0, 4.0, 4.0], [0.6, 1.2], [3.8, 6.7], [4.5, 7.9], [0.029, 0.046]),
    row([4.0, 4.0, -4.0], [0.8, 1.4], [0.0, 1.3], [0.8, 2.7], [0.030, 0.047]),
    row([4.0, 4.0, 4.0], [0.8, 1.6], [0.0, 1.4], [0.8, 3.0], [0.030, 0.052]),
];

/// Settings shared by every row of a reference table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableSetup {
    pub table: u8,
    pub k: usize,
    pub block_size: usize,
    pub rsd_alpha: f64,
    pub su_alpha: f64,
    /// Listed means are standardized differences x_i − x_k; the population
    /// means are these times √2.
    pub mean_scale: f64,
}

pub fn table_setup(table: u8) -> Result<TableSetup> {
    let (block_size, rsd_alpha) = match table {
        5 => (5, 0.05),
        6 => (8, 0.03),
        _ => {
            return Err(Error::InvalidConfig(format!(
                "no such table: {table} (expected 5 or 6)"
            )))
        }
    };
    Ok(TableSetup {
        table,
        k: 101,
        block_size,
        rsd_alpha,
        su_alpha: 0.07,
        mean_scale: std::f64::consts::SQRT_2,
    })
}

pub fn reference_rows(table: u8) -> Result<&'static [ReferenceRow]> {
    match table {
        5 => Ok(&TABLE5),
        6 => Ok(&TABLE6),
        _ => Err(Error::InvalidConfig(format!(
            "no such table: {table} (expected 5 or 6)"
        ))),
    }
}

pub fn reference_row(table: u8, row: usize) -> Result<ReferenceRow> {
    let rows = reference_rows(table)?;
    row.checked_sub(1)
        .and_then(|r| rows.get(r))
        .copied()
        .ok_or(Error::UnknownRow { table, row })
}

/// Configuration for a 1-based row of table 5 or 6.
pub fn table_config(table: u8, row: usize, iterations: usize, seed: u64) -> Result<SimConfig> {
    let setup = table_setup(table)?;
    let reference = reference_row(table, row)?;
    let blocks = reference
        .means
        .iter()
        .enumerate()
        .map(|(b, &mean)| MeanBlock {
            first: b * setup.block_size + 1,
            last: (b + 1) * setup.block_size,
            mean,
        })
        .collect();
    Ok(SimConfig {
        k: setup.k,
        blocks,
        control_mean: 0.0,
        mean_scale: setup.mean_scale,
        iterations,
        rsd_alpha: setup.rsd_alpha,
        su_alpha: setup.su_alpha,
        seed,
    })
}

/// Tolerance for comparing a simulated metric with its reference value:
/// max(3·MCSE, 0.1) for expected error counts, 0.01 for FDR.
pub fn tolerance(metric: Metric, estimate: Estimate) -> f64 {
    match metric {
        Metric::Fdr => 0.01,
        _ => (3.0 * estimate.mcse).max(0.1),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub procedure: ProcedureKind,
    pub metric: Metric,
    pub simulated: f64,
    pub mcse: f64,
    pub reference: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowComparison {
    pub row: usize,
    pub means: [f64; 3],
    pub simulated: SimResult,
    pub reference: ReferenceRow,
    pub metrics: Vec<MetricComparison>,
}

impl RowComparison {
    pub fn all_within(&self) -> bool {
        self.metrics.iter().all(|m| m.within)
    }

    /// RSD total minus SU total, and the 3-standard-error allowance for it.
    pub fn total_gap(&self) -> (f64, f64) {
        let (r, s) = (self.simulated.rsd.total, self.simulated.su.total);
        (r.mean - s.mean, 3.0 * r.mcse.hypot(s.mcse))
    }

    /// RSD commits no more errors than SU, within Monte Carlo error.
    pub fn rsd_not_worse(&self) -> bool {
        let (gap, allowance) = self.total_gap();
        gap <= allowance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub setup: TableSetup,
    pub iterations: usize,
    pub seed: u64,
    pub rows: Vec<RowComparison>,
}

pub fn compare_row(table: u8, row: usize, iterations: usize, seed: u64) -> Result<RowComparison> {
    let reference = reference_row(table, row)?;
    let simulated = simulate(&table_config(table, row, iterations, seed)?)?;
    let mut metrics = Vec::with_capacity(8);
    for (procedure, m) in [
        (ProcedureKind::Rsd, &simulated.rsd),
        (ProcedureKind::StepUp, &simulated.su),
    ] {
        for metric in Metric::ALL {
            let est = m.get(metric);
            let value = reference.value(procedure, metric);
            let tol = tolerance(metric, est);
            let difference = (est.mean - value).abs();
            metrics.push(MetricComparison {
                procedure,
                metric,
                simulated: est.mean,
                mcse: est.mcse,
                reference: value,
                difference,
                tolerance: tol,
                within: difference <= tol,
            });
        }
    }
    Ok(RowComparison {
        row,
        means: reference.means,
        simulated,
        reference,
        metrics,
    })
}

/// Simulates the requested 1-based rows of table 5 or 6 and compares them
/// with the reference values.
pub fn table_runner(table: u8, rows: &[usize], iterations: usize, seed: u64) -> Result<TableReport> {
    let setup = table_setup(table)?;
    for &row in rows {
        reference_row(table, row)?;
    }
    let rows = rows
        .iter()
        .map(|&row| compare_row(table, row, iterations, seed))
        .collect::<Result<_>>()?;
    Ok(TableReport {
        setup,
        iterations,
        seed,
        rows,
    })
}

/// One CSV line per row: block means, the simulated table columns, their
/// standard errors, then the reference values.
pub fn write_csv<W: Write>(report: &TableReport, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let b = report.setup.block_size;
    let mut header: Vec<String> = (0..3).map(|i| format!("means_{}_{}", i * b + 1, (i + 1) * b)).collect();
    header.insert(0, "row".into());
    for prefix in ["", "mcse_", "reference_"] {
        for metric in Metric::ALL {
            for p in ["rsd", "su"] {
                header.push(format!("{prefix}{}_{p}", metric.name()));
            }
        }
    }
    w.write_record(&header).map_err(io)?;
    for r in &report.rows {
        let mut rec = vec![r.row.to_string()];
        rec.extend(r.means.iter().map(|m| format!("{m:.2}")));
        let sim = &r.simulated;
        for metric in Metric::ALL {
            rec.push(format!("{:.4}", sim.rsd.get(metric).mean));
            rec.push(format!("{:.4}", sim.su.get(metric).mean));
        }
        for metric in Metric::ALL {
            rec.push(format!("{:.4}", sim.rsd.get(metric).mcse));
            rec.push(format!("{:.4}", sim.su.get(metric).mcse));
        }
        for metric in Metric::ALL {
            rec.push(r.reference.value(ProcedureKind::Rsd, metric).to_string());
            rec.push(r.reference.value(ProcedureKind::StepUp, metric).to_string());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
