//! Plain-text reports. Populations are numbered from 1.

use std::fmt::Write;

use intervalmt::partition::StopReason;
use intervalmt::sim::Metric;
use intervalmt::{CriticalSource, Decision, ProcedureKind, Sidedness};

use crate::{AnalyzeReport, AuditReport, ReproduceReport, SimulateReport};

fn set(members: &[usize]) -> String {
    let inner: Vec<String> = members.iter().map(|m| (m + 1).to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

fn sided(s: Sidedness) -> &'static str {
    match s {
        Sidedness::One => "one-sided",
        Sidedness::Two => "two-sided",
    }
}

fn letter(d: Decision) -> char {
    match d {
        Decision::Accept => 'A',
        Decision::Reject => 'R',
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

pub fn analyze(r: &AnalyzeReport) -> String {
    let mut s = String::new();
    let run = &r.run;
    let procedure = run.procedure.map_or_else(String::new, |p| p.to_string());
    let model = run.model.map_or_else(String::new, |m| m.to_string());
    let family = run.family.map_or_else(String::new, |f| f.to_string());
    let sidedness = run.sided.map_or("", sided);
    let _ = writeln!(
        s,
        "{procedure} on {model} data, {family} family ({sidedness}), k = {}",
        r.k
    );
    if let Some(labels) = &r.labels {
        let named: Vec<String> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| format!("{}={l}", i + 1))
            .collect();
        let _ = writeln!(s, "populations: {}", named.join(" "));
    }
    let values: Vec<String> = r
        .criticals
        .values
        .iter()
        .enumerate()
        .map(|(m, v)| format!("C{}={v:.4}", m + 1))
        .collect();
    let alpha = r.criticals.alpha.map_or_else(String::new, |a| format!(", alpha {a}"));
    let source = match r.criticals.source {
        CriticalSource::Bh => "bh",
        CriticalSource::Bg => "bg",
        CriticalSource::User => "user",
    };
    let _ = writeln!(s, "critical values ({source}{alpha}): {}", values.join(" "));
    if let Some(note) = &r.extrapolation {
        let _ = writeln!(s, "note: {note}");
    }

    if let Some(trace) = &r.outcome.trace {
        let _ = writeln!(
            s,
            "\n{:<6}{:<22}{:<26}{:>9}{:>11}",
            "step", "block", "split", "H", "threshold"
        );
        for step in &trace.steps {
            let split = format!("{} | {}", set(&step.split), set(&step.rest));
            let _ = writeln!(
                s,
                "{:<6}{:<22}{:<26}{:>9.3}{:>11.3}",
                step.stage,
                set(&step.block),
                split,
                step.h,
                step.threshold
            );
        }
        let stop = &trace.stop;
        match stop.reason {
            StopReason::BelowThreshold => {
                let best = stop.best.as_ref().map_or(f64::NAN, |b| b.h);
                let _ = writeln!(
                    s,
                    "stopped at step {}: max H = {best:.3} <= {:.3}",
                    stop.stage,
                    stop.threshold.unwrap_or(f64::NAN)
                );
            }
            StopReason::NoEligibleBlock => {
                let _ = writeln!(s, "stopped at step {}: no block left to split", stop.stage);
            }
        }
        let blocks: Vec<String> = trace.final_partition.blocks().iter().map(|b| set(b)).collect();
        let _ = writeln!(s, "final partition: {}", blocks.join(" "));
    }

    let _ = writeln!(s, "\n{:<12}{:>11}{:>7}  decision", "hypothesis", "statistic", "step");
    for d in &r.outcome.report.decisions {
        let stage = d.stage.map_or_else(|| "-".into(), |v| v.to_string());
        let _ = writeln!(
            s,
            "{:<12}{:>11}{:>7}  {}",
            d.pair.to_string(),
            fmt_opt(d.statistic),
            stage,
            d.decision
        );
    }
    let _ = writeln!(
        s,
        "\n{} of {} hypotheses rejected",
        r.outcome.report.rejection_count(),
        r.outcome.report.decisions.len()
    );
    s
}

pub fn audit(r: &AuditReport) -> String {
    let mut s = String::new();
    for ray in &r.rays {
        let _ = writeln!(
            s,
            "{}: {} on {} {} ({}), ray along g{}{}",
            ray.label,
            ray.procedure,
            ray.model,
            ray.problem,
            sided(ray.sided),
            ray.pair.i + 1,
            ray.pair.j + 1
        );
        let pattern: String = ray.pattern.iter().map(|&d| letter(d)).collect();
        let first = ray.grid.first().copied().unwrap_or(0.0);
        let last = ray.grid.last().copied().unwrap_or(0.0);
        let _ = writeln!(
            s,
            "  {} over a in [{first}, {last}] ({} points): {pattern}",
            ray.pair,
            ray.grid.len()
        );
        match &ray.violation {
            Some(v) => {
                let at: Vec<String> = v.indices.iter().map(|&i| format!("{}", ray.grid[i])).collect();
                let _ = writeln!(s, "  VIOLATION ({:?}) at a = {}", v.kind, at.join(", "));
            }
            None => {
                let _ = writeln!(s, "  interval property holds");
            }
        }
    }
    if !r.certification.is_empty() {
        let _ = writeln!(
            s,
            "{:<11}{:<13}{:<23}{:<11}{:>10}{:>12}{:>12}",
            "procedure", "model", "family", "sided", "instances", "ray points", "violations"
        );
        for c in &r.certification {
            let _ = writeln!(
                s,
                "{:<11}{:<13}{:<23}{:<11}{:>10}{:>12}{:>12}",
                c.procedure.to_string(),
                c.model.to_string(),
                c.problem.to_string(),
                sided(c.sided),
                c.instances,
                c.ray_points,
                c.violations.len()
            );
        }
    }
    let _ = writeln!(s, "{} violation(s)", r.violations);
    s
}

fn metric_header(s: &mut String, lead: &str) {
    let _ = write!(s, "{lead}");
    for m in Metric::ALL {
        let _ = write!(s, "{:>16}", m.name());
    }
    let _ = writeln!(s);
    let _ = write!(s, "{}", " ".repeat(lead.len()));
    for _ in Metric::ALL {
        let _ = write!(s, "{:>8}{:>8}", "RSD", "SU");
    }
    let _ = writeln!(s);
}

pub fn simulate(r: &SimulateReport) -> String {
    let mut s = String::new();
    let c = &r.config;
    let _ = writeln!(
        s,
        "k = {}, {} iterations, seed {}, RSD alpha {}, SU alpha {}, mean scale {:.4}",
        c.k, c.iterations, c.seed, c.rsd_alpha, c.su_alpha, c.mean_scale
    );
    for b in &c.blocks {
        let _ = writeln!(s, "  treatments {}-{}: mean {}", b.first, b.last, b.mean);
    }
    let lead = format!("{:<10}", "");
    metric_header(&mut s, &lead);
    for (label, pick) in [("estimate", 0), ("mcse", 1)] {
        let _ = write!(s, "{label:<10}");
        for m in Metric::ALL {
            for metrics in [&r.result.rsd, &r.result.su] {
                let e = metrics.get(m);
                let _ = write!(s, "{:>8.3}", if pick == 0 { e.mean } else { e.mcse });
            }
        }
        let _ = writeln!(s);
    }
    s
}

/// Mirrors the reference table: one simulated line and one reference line
/// per row. `*` marks a value outside tolerance.
pub fn reproduce(r: &ReproduceReport) -> String {
    let mut s = String::new();
    let t = &r.report;
    let _ = writeln!(
        s,
        "Table {}: k = {}, blocks of {}, RSD alpha {}, SU alpha {}; {} iterations, seed {}",
        t.setup.table, t.setup.k, t.setup.block_size, t.setup.rsd_alpha, t.setup.su_alpha, t.iterations, t.seed
    );
    let lead = format!("{:<5}{:<21}{:<10}", "row", "means", "");
    metric_header(&mut s, &lead);
    for row in &t.rows {
        let means: Vec<String> = row.means.iter().map(|m| format!("{m:.2}")).collect();
        let _ = write!(s, "{:<5}{:<21}{:<10}", row.row, means.join(" "), "sim");
        for m in Metric::ALL {
            for p in [ProcedureKind::Rsd, ProcedureKind::StepUp] {
                let c = row
                    .metrics
                    .iter()
                    .find(|c| c.metric == m && c.procedure == p)
                    .expect("all metrics compared");
                let mark = if c.within { ' ' } else { '*' };
                let _ = write!(s, "{:>7.3}{mark}", c.simulated);
            }
        }
        let _ = writeln!(s);
        let _ = write!(s, "{:<26}{:<10}", "", "reference");
        for m in Metric::ALL {
            for p in [ProcedureKind::Rsd, ProcedureKind::StepUp] {
                let _ = write!(s, "{:>7} ", row.reference.value(p, m));
            }
        }
        let _ = writeln!(s);
    }
    let outside: usize = t
        .rows
        .iter()
        .map(|r| r.metrics.iter().filter(|m| !m.within).count())
        .sum();
    let worse: Vec<String> = t
        .rows
        .iter()
        .filter(|r| !r.rsd_not_worse())
        .map(|r| r.row.to_string())
        .collect();
    let _ = writeln!(s, "{outside} value(s) outside tolerance");
    if worse.is_empty() {
        let _ = writeln!(s, "RSD total errors no larger than SU in every row");
    } else {
        let _ = writeln!(s, "RSD total errors exceed SU in rows {}", worse.join(", "));
    }
    s
}
