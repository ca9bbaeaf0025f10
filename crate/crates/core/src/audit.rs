//! Interval-property auditing.
//!
//! A test of H_ij has the interval property along the direction g_ij if its
//! decision at x + a·g_ij is nondecreasing in a (one-sided) or its
//! acceptance set in a is an interval (two-sided). This module builds the
//! model-specific directions, scans procedures along rays, checks the
//! resulting decision patterns, and produces the classic step-down
//! counterexamples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Model, RankData};
use crate::decision::{Decision, DecisionReport, ProcedureKind};
use crate::error::{Error, Result};
use crate::family::{HypothesisFamily, Pair, Problem, SetFamilySpec};
use crate::procedure::Procedure;
use crate::statistics::{critical_values_bg, ContingencyTable, CriticalValues, SampleMatrix, SampleModel, Sidedness};
use crate::stepwise::StatKind;

/// g_ij in the flat k·q data layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionVector {
    pub pair: Pair,
    pub model: Model,
    pub k: usize,
    pub q: usize,
    pub g: Vec<f64>,
}

impl DirectionVector {
    fn check(k: usize, pair: Pair) -> Result<()> {
        if pair.i >= k || pair.j >= k || pair.i == pair.j {
            return Err(Error::InvalidGroup(format!(
                "{pair} is not a pair of distinct populations among {k}"
            )));
        }
        Ok(())
    }

    /// Moves mass from the last to the first cell of row i and from the
    /// first to the last cell of row j.
    pub fn multinomial(k: usize, q: usize, pair: Pair) -> Result<Self> {
        Self::check(k, pair)?;
        let mut g = vec![0.0; k * q];
        g[pair.i * q] += 1.0;
        g[pair.i * q + q - 1] -= 1.0;
        g[pair.j * q] -= 1.0;
        g[pair.j * q + q - 1] += 1.0;
        Ok(DirectionVector {
            pair,
            model: Model::Multinomial,
            k,
            q,
            g,
        })
    }

    /// −1 on every coordinate of population i, +1 on every coordinate of j.
    pub fn normal(k: usize, q: usize, pair: Pair) -> Result<Self> {
        Self::check(k, pair)?;
        let mut g = vec![0.0; k * q];
        g[pair.i * q..(pair.i + 1) * q].fill(-1.0);
        g[pair.j * q..(pair.j + 1) * q].fill(1.0);
        Ok(DirectionVector {
            pair,
            model: Model::Normal,
            k,
            q,
            g,
        })
    }

    /// −1 at mean rank i, +1 at mean rank j.
    pub fn rank(k: usize, pair: Pair) -> Result<Self> {
        let mut d = Self::normal(k, 1, pair)?;
        d.model = Model::Rank;
        Ok(d)
    }

    pub fn for_dataset(data: &Dataset, pair: Pair) -> Result<Self> {
        match data.model() {
            Model::Multinomial => Self::multinomial(data.k(), data.q(), pair),
            Model::Normal => Self::normal(data.k(), data.q(), pair),
            Model::Rank => Self::rank(data.k(), pair),
        }
    }

    /// x + a·g.
    pub fn point(&self, x: &[f64], a: f64) -> Vec<f64> {
        x.iter().zip(&self.g).map(|(v, g)| v + a * g).collect()
    }

    /// The valid data domain along this direction.
    pub fn domain(&self) -> RayDomain {
        match self.model {
            Model::Multinomial => RayDomain::NonNegative,
            _ => RayDomain::Unbounded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RayDomain {
    Unbounded,
    /// Every coordinate must stay ≥ 0 (cell counts).
    NonNegative,
}

impl RayDomain {
    fn contains(self, x: &[f64]) -> bool {
        match self {
            RayDomain::Unbounded => x.iter().all(|v| v.is_finite()),
            RayDomain::NonNegative => x.iter().all(|&v| v.is_finite() && v >= 0.0),
        }
    }
}

/// Largest a ≥ 0 with x + a·g inside `domain` (infinite when unbounded).
pub fn max_valid_a(x: &[f64], g: &DirectionVector, domain: RayDomain) -> f64 {
    match domain {
        RayDomain::Unbounded => f64::INFINITY,
        RayDomain::NonNegative => x
            .iter()
            .zip(&g.g)
            .filter(|(_, &d)| d < 0.0)
            .map(|(&v, &d)| v / -d)
            .fold(f64::INFINITY, f64::min),
    }
}

/// `points` evenly spaced values 0, step, 2·step, ….
pub fn uniform_grid(step: f64, points: usize) -> Vec<f64> {
    (0..points).map(|n| n as f64 * step).collect()
}

/// Decision on `g.pair` at x + a·g for each a in `grid`.
///
/// Fails on the first grid point outside `domain`.
pub fn ray_decisions<F>(
    mut procedure: F,
    x: &[f64],
    g: &DirectionVector,
    grid: &[f64],
    domain: RayDomain,
) -> Result<Vec<Decision>>
where
    F: FnMut(&[f64]) -> Result<DecisionReport>,
{
    if x.len() != g.g.len() {
        return Err(Error::DimensionMismatch {
            expected: g.g.len(),
            got: x.len(),
        });
    }
    grid.iter()
        .enumerate()
        .map(|(index, &a)| {
            let point = g.point(x, a);
            if !domain.contains(&point) {
                return Err(Error::DomainViolation { index, a });
            }
            procedure(&point)?
                .decision(g.pair)
                .ok_or_else(|| Error::InvalidGroup(format!("{} is not tested by the procedure", g.pair)))
        })
        .collect()
}

/// Like [`ray_decisions`] but stops at the last grid point inside the domain.
/// Returns the grid actually scanned alongside the pattern.
pub fn ray_survey<F>(
    procedure: F,
    x: &[f64],
    g: &DirectionVector,
    grid: &[f64],
    domain: RayDomain,
) -> Result<(Vec<f64>, Vec<Decision>)>
where
    F: FnMut(&[f64]) -> Result<DecisionReport>,
{
    let limit = max_valid_a(x, g, domain);
    let used: Vec<f64> = grid.iter().copied().take_while(|&a| a <= limit).collect();
    let pattern = ray_decisions(procedure, x, g, &used, domain)?;
    Ok((used, pattern))
}

/// Adapts a [`Procedure`] to flat data vectors shaped like `template`.
pub fn flat_procedure<'a>(
    procedure: &'a Procedure,
    template: &'a Dataset,
) -> impl FnMut(&[f64]) -> Result<DecisionReport> + 'a {
    move |flat| procedure.decide(&template.with_flat(flat)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// A rejection followed by an acceptance.
    OneSided,
    /// Acceptance, then rejection, then acceptance again.
    TwoSided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Grid indices that witness the violation.
    pub indices: Vec<usize>,
}

/// Flags the first acceptance that follows a rejection.
pub fn check_one_sided(pattern: &[Decision]) -> Option<Violation> {
    let first_reject = pattern.iter().position(|d| d.is_reject())?;
    let back = pattern[first_reject..].iter().position(|d| !d.is_reject())?;
    Some(Violation {
        kind: ViolationKind::OneSided,
        indices: vec![first_reject, first_reject + back],
    })
}

/// Flags accept → reject → accept, i.e. an acceptance set that is not an interval.
pub fn check_two_sided(pattern: &[Decision]) -> Option<Violation> {
    let accept = pattern.iter().position(|d| !d.is_reject())?;
    let reject = accept + pattern[accept..].iter().position(|d| d.is_reject())?;
    let again = reject + pattern[reject..].iter().position(|d| !d.is_reject())?;
    Some(Violation {
        kind: ViolationKind::TwoSided,
        indices: vec![accept, reject, again],
    })
}

pub fn check(pattern: &[Decision], sided: Sidedness) -> Option<Violation> {
    match sided {
        Sidedness::One => check_one_sided(pattern),
        Sidedness::Two => check_two_sided(pattern),
    }
}

/// A ray scan and its verdict, ready to serialize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub label: String,
    pub procedure: ProcedureKind,
    pub model: Model,
    pub problem: Problem,
    pub sided: Sidedness,
    pub pair: Pair,
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub grid: Vec<f64>,
    pub pattern: Vec<Decision>,
    pub violation: Option<Violation>,
}

/// Scans `procedure` along g from `data` and checks the pattern.
pub fn audit_ray(
    label: &str,
    procedure: &Procedure,
    data: &Dataset,
    g: &DirectionVector,
    grid: &[f64],
) -> Result<ViolationReport> {
    let (grid, pattern) = ray_survey(flat_procedure(procedure, data), data.flat(), g, grid, g.domain())?;
    let sided = procedure.family.sided;
    Ok(ViolationReport {
        label: label.to_string(),
        procedure: procedure.kind,
        model: data.model(),
        problem: procedure.family.problem(),
        sided,
        pair: g.pair,
        x: data.flat().to_vec(),
        g: g.g.clone(),
        violation: check(&pattern, sided),
        grid,
        pattern,
    })
}

/// A labelled point on a counterexample ray with its expected classic decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayPoint {
    pub label: String,
    pub a: f64,
    pub x: Vec<f64>,
    /// Expected step-down decisions, in family order.
    pub expected: Vec<(Pair, Decision)>,
}

/// Three-population univariate instance on which the classic step-down
/// procedure loses the interval property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub name: String,
    pub family: HypothesisFamily,
    pub criticals: CriticalValues,
    pub direction: DirectionVector,
    pub points: Vec<RayPoint>,
}

impl Counterexample {
    /// Step-down on T_ij = x_j − x_i (absolute when two-sided).
    pub fn classic(&self) -> Procedure {
        Procedure::new(ProcedureKind::StepDown, self.family.clone(), self.criticals.clone())
            .with_pair_statistic(StatKind::Difference)
    }

    /// RSD with the pooled standardized mean difference and the same constants.
    pub fn rsd(&self) -> Procedure {
        Procedure::new(ProcedureKind::Rsd, self.family.clone(), self.criticals.clone())
    }

    pub fn dataset(&self, x: &[f64]) -> Result<Dataset> {
        Ok(Dataset::Normal(SampleMatrix::univariate(x)?))
    }

    pub fn base(&self) -> &[f64] {
        &self.points[0].x
    }

    /// A dense grid that contains every labelled point.
    pub fn scan_grid(&self) -> Vec<f64> {
        let mut grid = uniform_grid(0.05, 31);
        grid.extend(self.points.iter().map(|p| p.a));
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        grid
    }
}

/// One-sided change point, C = (1, 2): H₂₃ rejected at stage 1 and H₁₂ at
/// stage 2 at x, but moving along g₁₂ lowers T₂₃ below C₂ and the procedure
/// stops with H₁₂ accepted.
pub fn counterexample_change_point() -> Counterexample {
    let family = HypothesisFamily::new(
        SetFamilySpec::new(Problem::ChangePoint, 3).expect("k = 3"),
        Sidedness::One,
    );
    let direction = DirectionVector::normal(3, 1, Pair::new(0, 1)).expect("valid pair");
    let x = vec![0.0, 1.05, 3.10];
    let star = direction.point(&x, 0.2);
    let (h12, h23) = (Pair::new(0, 1), Pair::new(1, 2));
    Counterexample {
        name: "figure1".into(),
        family,
        criticals: CriticalValues::user(vec![1.0, 2.0]).expect("increasing"),
        points: vec![
            RayPoint {
                label: "x".into(),
                a: 0.0,
                x,
                expected: vec![(h12, Decision::Reject), (h23, Decision::Reject)],
            },
            RayPoint {
                label: "x*".into(),
                a: 0.2,
                x: star,
                expected: vec![(h12, Decision::Accept), (h23, Decision::Accept)],
            },
        ],
        direction,
    }
}

/// Two-sided treatments versus control (control = population 3), C = (1, 2):
/// along g₁₃ the classic decisions on H₁₃ go accept, reject, accept.
pub fn counterexample_tvc() -> Counterexample {
    let family = HypothesisFamily::new(
        SetFamilySpec::new(Problem::TreatmentsVsControl, 3).expect("k = 3"),
        Sidedness::Two,
    );
    let direction = DirectionVector::normal(3, 1, Pair::new(0, 2)).expect("valid pair");
    let (c1, eps) = (1.0, 0.1);
    // T₂₃(x) = C₂ + (C₁ + ε)/2 + ε
    let x = vec![0.0, 2.0 + (c1 + eps) / 2.0 + eps, 0.0];
    let a_star = (c1 + eps) / 2.0;
    let a_star2 = a_star + 2.0 * eps;
    let (h13, h23) = (Pair::new(0, 2), Pair::new(1, 2));
    Counterexample {
        name: "figure2".into(),
        family,
        criticals: CriticalValues::user(vec![c1, 2.0]).expect("increasing"),
        points: vec![
            RayPoint {
                label: "x".into(),
                a: 0.0,
                expected: vec![(h13, Decision::Accept), (h23, Decision::Reject)],
                x: x.clone(),
            },
            RayPoint {
                label: "x*".into(),
                a: a_star,
                x: direction.point(&x, a_star),
                expected: vec![(h13, Decision::Reject), (h23, Decision::Reject)],
            },
            RayPoint {
                label: "x**".into(),
                a: a_star2,
                x: direction.point(&x, a_star2),
                expected: vec![(h13, Decision::Accept), (h23, Decision::Accept)],
            },
        ],
        direction,
    }
}

/// The all-pairwise version of the two-sided construction needs C₁ + 2C₂ > 2C₃.
pub fn all_pairwise_construction_applies(criticals: &CriticalValues) -> bool {
    criticals.len() >= 3 && criticals.get(1) + 2.0 * criticals.get(2) > 2.0 * criticals.get(3)
}

/// Sidedness under which each (model, problem) pair is certified: one-sided
/// for ordered categorical and rank change points, two-sided otherwise.
pub fn certified_sidedness(model: Model, problem: Problem) -> Sidedness {
    match (model, problem) {
        (Model::Multinomial | Model::Rank, Problem::ChangePoint) => Sidedness::One,
        _ => Sidedness::Two,
    }
}

/// Outcome of a randomized interval-property sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationSummary {
    pub procedure: ProcedureKind,
    pub model: Model,
    pub problem: Problem,
    pub sided: Sidedness,
    pub instances: usize,
    pub ray_points: usize,
    pub violations: Vec<ViolationReport>,
}

/// Random instance for the sweep: data, family, constants, and a ray.
struct Instance {
    data: Dataset,
    family: HypothesisFamily,
    criticals: CriticalValues,
    direction: DirectionVector,
    grid: Vec<f64>,
}

fn random_instance(
    rng: &mut ChaCha8Rng,
    model: Model,
    problem: Problem,
    sided: Sidedness,
    kind: ProcedureKind,
) -> Result<Instance> {
    let k = match problem {
        Problem::AllPairwise => rng.gen_range(3..=5),
        _ => rng.gen_range(3..=6),
    };
    let spec = SetFamilySpec::new(problem, k)?;
    let family = HypothesisFamily::new(spec, sided);
    let pairs = family.pairs();
    let pair = pairs[rng.gen_range(0..pairs.len())];
    // a few distinct levels so that some hypotheses are false
    let levels: Vec<f64> = (0..k)
        .map(|_| [0.0, 0.0, 0.8, -0.8, 1.6][rng.gen_range(0..5)])
        .collect();

    let (data, grid) = match model {
        Model::Multinomial => {
            let q = rng.gen_range(2..=4);
            let rows = levels
                .iter()
                .map(|&shift| {
                    let total = rng.gen_range(12..=40);
                    let mut row = vec![0.0; q];
                    for _ in 0..total {
                        let z: f64 = rng.sample::<f64, _>(StandardNormal) + shift;
                        let cell = (((z + 1.5) / 3.0) * q as f64).floor().clamp(0.0, (q - 1) as f64) as usize;
                        row[cell] += 1.0;
                    }
                    // make room for mass to move along the ray
                    row[0] += rng.gen_range(2..12) as f64;
                    row[q - 1] += rng.gen_range(2..12) as f64;
                    row
                })
                .collect();
            let table = ContingencyTable::new(rows)?;
            let data = Dataset::Multinomial(table);
            let g = DirectionVector::multinomial(k, q, pair)?;
            let limit = max_valid_a(data.flat(), &g, RayDomain::NonNegative).min(40.0);
            let grid = (0..=limit as usize).map(|a| a as f64).collect();
            (data, grid)
        }
        Model::Normal => {
            let q = rng.gen_range(1..=3);
            let rows = levels
                .iter()
                .map(|&mu| (0..q).map(|_| mu + rng.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            let data = Dataset::Normal(SampleMatrix::new(rows, SampleModel::Normal)?);
            (data, uniform_grid(0.1, 41))
        }
        Model::Rank => {
            let n = rng.gen_range(3..=8);
            let groups: Vec<Vec<f64>> = levels
                .iter()
                .map(|&mu| (0..n).map(|_| mu + rng.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            let data = Dataset::Rank(RankData::from_observations(&groups)?);
            let span = (n * k) as f64 / 2.0;
            (data, uniform_grid(span / 40.0, 41))
        }
    };

    let big_k = match kind {
        ProcedureKind::Rsd => spec.max_splits(),
        _ => family.len(),
    };
    let alpha = rng.gen_range(0.01..0.3);
    let mut criticals = critical_values_bg(big_k, alpha)?;
    if model == Model::Normal && data.q() > 1 {
        // quadratic-form statistics live on the chi-square scale; small
        // constants can be negative, so shift before squaring
        let low = criticals.values()[0].min(0.0);
        let squared = criticals.values().iter().map(|c| (c - low + 0.1).powi(2)).collect();
        criticals = CriticalValues::user(squared)?;
    }
    let direction = DirectionVector::for_dataset(&data, pair)?;
    Ok(Instance {
        data,
        family,
        criticals,
        direction,
        grid,
    })
}

/// Scans `instances` random rays for `kind` under (model, problem) and
/// collects every interval-property violation. Instance t uses stream t of
/// a ChaCha generator seeded with `seed`, so results do not depend on
/// scheduling.
pub fn certify(
    kind: ProcedureKind,
    model: Model,
    problem: Problem,
    instances: usize,
    seed: u64,
) -> Result<CertificationSummary> {
    let sided = certified_sidedness(model, problem);
    let results: Vec<Result<(usize, Option<ViolationReport>)>> = (0..instances)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let inst = random_instance(&mut rng, model, problem, sided, kind)?;
            let procedure = Procedure::new(kind, inst.family, inst.criticals);
            let report = audit_ray(
                &format!("instance {t}"),
                &procedure,
                &inst.data,
                &inst.direction,
                &inst.grid,
            )?;
            let points = report.grid.len();
            Ok((points, report.violation.is_some().then_some(report)))
        })
        .collect();
    let mut ray_points = 0;
    let mut violations = Vec::new();
    for r in results {
        let (points, violation) = r?;
        ray_points += points;
        violations.extend(violation);
    }
    Ok(CertificationSummary {
        procedure: kind,
        model,
        problem,
        sided,
        instances,
        ray_points,
        violations,
    })
}
