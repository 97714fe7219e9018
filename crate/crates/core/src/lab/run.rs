//! Executes a scenario's checks and writes `report.json`, `envelopes.csv`
//! and `rho.csv`.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::scenario::{CheckKind, Scenario};
use crate::convergence::{
    check_envelope_convergence, frolik_wijsman_check, gamma_limit_from_envelopes, mosco_check, vanishes, weak_limit,
    Convergence, MoscoOptions, MoscoReport, MoscoVerdict, Selector,
};
use crate::error::{LabError, Result};
use crate::metric::{
    ball_samples, cauchy_limit, equi_lipschitz_bound, max_difference_quotient, rho, CauchyOptions, MoscoDistance,
};
use crate::prox::{default_tol, estimate_minorization};
use crate::tolerance;

/// Command-line overrides of the scenario tolerances.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub tol_geom: Option<f64>,
    pub tol_prox: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Stamp {
    pub seed: u64,
    pub tol_geom: f64,
    pub tol_prox: f64,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub verdict: String,
    pub expected: Option<String>,
    pub matched: Option<bool>,
    pub details: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub description: String,
    pub space: String,
    pub stamp: Stamp,
    pub window: crate::catalog::Window,
    pub checks: Vec<CheckOutcome>,
    /// Every declared expectation matched.
    pub expectations_met: bool,
    #[serde(skip)]
    pub envelope_rows: Vec<EnvelopeRow>,
    #[serde(skip)]
    pub rho_rows: Vec<RhoRow>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnvelopeRow {
    pub n: usize,
    pub max_gap: f64,
    pub max_prox_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoRow {
    pub target: &'static str,
    pub n: usize,
    pub rho: f64,
    pub e_terms: f64,
    pub r_terms: f64,
    pub max_certified_gap: f64,
}

impl RhoRow {
    fn new(target: &'static str, n: usize, d: &MoscoDistance) -> Self {
        RhoRow {
            target,
            n,
            rho: d.value,
            e_terms: d.e_terms,
            r_terms: d.r_terms,
            max_certified_gap: d.max_certified_gap,
        }
    }
}

/// At most `count` indices spread geometrically over the window.
fn sampled_indices(window: crate::catalog::Window, count: usize) -> Vec<usize> {
    if window.len <= count {
        return window.indices().collect();
    }
    let (a, b) = (window.start as f64, window.end() as f64);
    let mut out: Vec<usize> =
        (0..count).map(|i| (a * (b / a).powf(i as f64 / (count - 1) as f64)).round() as usize).collect();
    out.dedup();
    out
}

fn mosco_details(r: &MoscoReport) -> Value {
    let passed = |v: &mut dyn Iterator<Item = bool>| v.filter(|p| *p).count();
    json!({
        "verdict": r.verdict,
        "witness": r.witness,
        "liminf_checks": r.liminf_checks.len(),
        "recovery_checks": r.recovery_checks.len(),
        "recovery_passed": passed(&mut r.recovery_checks.iter().map(|c| c.pass)),
        "envelope_recovery_checks": r.envelope_recovery_checks.len(),
        "envelope_recovery_passed": passed(&mut r.envelope_recovery_checks.iter().map(|(_, c)| c.pass)),
        "worst_limsup_excess": r.recovery_checks.iter().chain(r.envelope_recovery_checks.iter().map(|(_, c)| c))
            .map(|c| c.limsup_estimate - c.f_x).fold(f64::NEG_INFINITY, f64::max),
        "skipped": r.skipped,
    })
}

fn mosco_verdict(v: MoscoVerdict) -> &'static str {
    match v {
        MoscoVerdict::Consistent => "consistent",
        MoscoVerdict::Falsified => "falsified",
        MoscoVerdict::Inconclusive => "inconclusive",
    }
}

/// Refusals that a scenario may expect are verdicts, not crashes.
fn refusal(e: &LabError) -> Option<&'static str> {
    match e {
        LabError::NoUniformBound(_) => Some("no_uniform_bound"),
        LabError::NoBound(_) => Some("no_bound"),
        LabError::NotCauchy(_) => Some("not_cauchy"),
        LabError::Unbounded(_) => Some("unbounded"),
        LabError::PreconditionFailed(_) => Some("precondition_failed"),
        LabError::Unconverged { .. } => Some("unconverged"),
        _ => None,
    }
}

/// Runs every requested check of the scenario. Check failures become
/// verdicts in the report; only malformed input is an error.
pub fn run(scenario: &Scenario, seed: u64, overrides: Overrides) -> Result<RunReport> {
    let tol_geom = overrides.tol_geom.or(scenario.tolerances.geom).unwrap_or(tolerance::GEOM);
    let tol_prox = overrides.tol_prox.or(scenario.tolerances.prox).unwrap_or_else(|| default_tol(&scenario.space));
    let mut report = RunReport {
        scenario: scenario.id.clone(),
        description: scenario.description.clone(),
        space: scenario.space.name(),
        stamp: Stamp { seed, tol_geom, tol_prox, version: env!("CARGO_PKG_VERSION") },
        window: scenario.window,
        checks: Vec::new(),
        expectations_met: true,
        envelope_rows: Vec::new(),
        rho_rows: Vec::new(),
    };
    let opts = MoscoOptions { window: scenario.window, seed, ..MoscoOptions::default() };
    let seq = &scenario.sequence;
    let anchor = &scenario.probes.points()[0];

    for &check in &scenario.checks {
        let mut outcomes: Vec<(String, Result<(String, Value)>)> = Vec::new();
        match check {
            CheckKind::Minorization => {
                let r = estimate_minorization(seq, anchor, scenario.lambdas.values()[0], scenario.window)
                    .map(|b| ("bounded".to_string(), json!(b)));
                outcomes.push((check.name().into(), r));
            }
            CheckKind::EquiLipschitz => {
                let r = (|| {
                    let lambda0 = scenario.lambdas.values()[0];
                    let radius = scenario.probes.radius().max(1.0);
                    let samples = ball_samples(anchor, radius, 32, seed);
                    let est = equi_lipschitz_bound(seq, lambda0, anchor, radius, scenario.window, &samples)?;
                    let mut worst_ratio = 0.0f64;
                    for &lambda in scenario.lambdas.values() {
                        let q = max_difference_quotient(seq, lambda, &samples, scenario.window)?;
                        worst_ratio = worst_ratio.max(q / est.bound(lambda));
                    }
                    let verdict = if worst_ratio <= 1.0 { "bounded" } else { "violated" };
                    Ok((verdict.to_string(), json!({ "estimate": est, "worst_quotient_over_bound": worst_ratio })))
                })();
                outcomes.push((check.name().into(), r));
            }
            CheckKind::EnvelopeConvergence => {
                let r = check_envelope_convergence(
                    seq,
                    scenario.limit.as_ref(),
                    &scenario.lambdas,
                    &scenario.probes,
                    scenario.window,
                    tol_prox,
                )
                .map(|r| {
                    report.envelope_rows = r
                        .indices
                        .iter()
                        .zip(r.max_gap.iter().zip(&r.max_prox_distance))
                        .map(|(&n, (&g, &d))| EnvelopeRow { n, max_gap: g, max_prox_distance: d })
                        .collect();
                    let verdict = match (scenario.limit.is_some(), r.gaps_vanish && r.prox_distances_vanish) {
                        (true, true) => "converges",
                        (true, false) => "fails",
                        (false, _) if r.pointwise_limit => "pointwise_limit",
                        (false, _) => "no_limit",
                    };
                    let details = json!({
                        "gaps_vanish": r.gaps_vanish,
                        "prox_distances_vanish": r.prox_distances_vanish,
                        "pointwise_limit": r.pointwise_limit,
                        "last_max_gap": r.max_gap.last(),
                        "last_max_prox_distance": r.max_prox_distance.last(),
                    });
                    (verdict.to_string(), details)
                });
                outcomes.push((check.name().into(), r));
            }
            CheckKind::GammaLimit => {
                let r = gamma_limit_from_envelopes(seq, &scenario.lambdas, &scenario.probes, scenario.window).map(|t| {
                    let rows: Vec<Value> = t
                        .rows
                        .iter()
                        .map(|row| json!({ "probe": row.probe, "sup": row.sup, "divergent": row.divergent }))
                        .collect();
                    let details = json!({
                        "minorization_r": t.minorization_r,
                        "monotone_in_k": t.monotone_in_k(10.0 * tol_prox),
                        "rows": rows,
                    });
                    ("assembled".to_string(), details)
                });
                outcomes.push((check.name().into(), r));
            }
            CheckKind::WeakLimit => {
                for w in &scenario.weak_sequences {
                    let r = weak_limit(w, &Selector::standard_battery(seed), tolerance::CENTER).map(|v| {
                        let verdict = match v.converges {
                            Convergence::Yes => "yes",
                            Convergence::No => "no",
                            Convergence::Inconclusive => "inconclusive",
                        };
                        (verdict.to_string(), json!(v))
                    });
                    outcomes.push((format!("weak_limit:{}", w.label()), r));
                }
            }
            CheckKind::Mosco => {
                let f = scenario.limit.as_ref().expect("validated on load");
                let r = mosco_check(seq, f, &scenario.probes, &scenario.weak_sequences, &opts)
                    .map(|r| (mosco_verdict(r.verdict).to_string(), mosco_details(&r)));
                outcomes.push((check.name().into(), r));
            }
            CheckKind::FrolikWijsman => {
                let sets = scenario.sets.as_ref().expect("validated on load");
                let c = scenario.limit_set.as_ref().expect("validated on load");
                let r = frolik_wijsman_check(sets, c, &scenario.probes, &scenario.weak_sequences, &opts).map(|r| {
                    let verdict = match (r.agree, r.distances_converge) {
                        (false, _) => "disagree",
                        (true, true) => "pass",
                        (true, false) => "fail",
                    };
                    let details = json!({
                        "distances_converge": r.distances_converge,
                        "mosco": mosco_details(&r.mosco),
                        "bridge_residual": r.bridge_residual,
                    });
                    (verdict.to_string(), details)
                });
                outcomes.push((check.name().into(), r));
            }
            CheckKind::Rho => {
                let f = scenario.limit.as_ref().expect("validated on load");
                let r = (|| {
                    let indices = sampled_indices(scenario.window, 32);
                    let mut values = Vec::new();
                    for &n in &indices {
                        let d = rho(&seq.at(n)?, f, &scenario.lambdas, &scenario.probes, tol_prox)?;
                        values.push(d.value);
                        report.rho_rows.push(RhoRow::new("limit", n, &d));
                    }
                    let verdict = if vanishes(&indices, &values, 10.0 * tol_prox) { "vanishes" } else { "does_not_vanish" };
                    Ok((verdict.to_string(), json!({ "last_rho": values.last() })))
                })();
                outcomes.push((check.name().into(), r));
            }
            CheckKind::CauchyLimit => {
                let mut copts = CauchyOptions::default();
                if let Some(w) = scenario.cauchy_window {
                    copts.window = w;
                }
                let r = cauchy_limit(seq, &scenario.lambdas, &scenario.probes, &copts).and_then(|table| {
                    let indices = sampled_indices(scenario.window, 32);
                    let mut values = Vec::new();
                    for &n in &indices {
                        let d = table.rho_to(&seq.at(n)?, tol_prox)?;
                        values.push(d.value);
                        report.rho_rows.push(RhoRow::new("cauchy_limit", n, &d));
                    }
                    let details = json!({
                        "cauchy_diameter": table.cauchy_diameter,
                        "cauchy_window": table.window,
                        "witness": table.witness,
                        "last_rho_to_table": values.last(),
                    });
                    Ok(("cauchy".to_string(), details))
                });
                outcomes.push((check.name().into(), r));
            }
        }
        for (name, r) in outcomes {
            let (verdict, details) = match r {
                Ok(v) => v,
                Err(e) => match refusal(&e) {
                    Some(v) => (v.to_string(), json!({ "message": e.to_string() })),
                    None => ("error".to_string(), json!({ "message": e.to_string() })),
                },
            };
            let expected = scenario.expect.get(&name).cloned();
            let matched = expected.as_ref().map(|e| *e == verdict);
            if matched == Some(false) {
                report.expectations_met = false;
            }
            report.checks.push(CheckOutcome { name, verdict, expected, matched, details });
        }
    }
    Ok(report)
}

/// Writes the report and its tables into `dir`, creating it if needed.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    let io = |e: std::io::Error| LabError::Parse(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut text = serde_json::to_string_pretty(report).map_err(|e| LabError::Parse(e.to_string()))?;
    text.push('\n');
    fs::write(dir.join("report.json"), text).map_err(io)?;
    write_csv(&dir.join("envelopes.csv"), &report.envelope_rows)?;
    write_csv(&dir.join("rho.csv"), &report.rho_rows)?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let err = |e: csv::Error| LabError::Parse(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for row in rows {
        w.serialize(row).map_err(err)?;
    }
    w.flush().map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// One line per check, as printed by the CLI.
pub fn summary_lines(report: &RunReport) -> Vec<String> {
    report
        .checks
        .iter()
        .map(|c| {
            let status = match c.matched {
                Some(true) => "ok",
                Some(false) => "MISMATCH",
                None => "--",
            };
            match &c.expected {
                Some(e) => format!("{status:8} {:28} {} (expected {e})", c.name, c.verdict),
                None => format!("{status:8} {:28} {}", c.name, c.verdict),
            }
        })
        .collect()
}
