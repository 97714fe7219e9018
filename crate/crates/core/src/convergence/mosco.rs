use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::center::{weak_limit, Convergence, PointSequence, Selector};
use crate::catalog::{ConvexFunction, ConvexSet, FunctionSequence, SetSequence, Window};
use crate::error::{LabError, Result};
use crate::metric::{LambdaGrid, ProbeGrid};
use crate::prox::{default_tol, estimate_minorization, prox};
use crate::space::Point;

/// Whether a nonnegative windowed series tends to zero: either it already
/// sits below `floor` on the window tail, or it falls at least like `n^-1/2`
/// on a log-log fit and ends no higher than it starts.
pub fn vanishes(indices: &[usize], values: &[f64], floor: f64) -> bool {
    assert_eq!(indices.len(), values.len());
    if values.is_empty() {
        return true;
    }
    if values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let half = values.len() / 2;
    if values[half..].iter().all(|&v| v <= floor) {
        return true;
    }
    let pts: Vec<(f64, f64)> = indices[half..]
        .iter()
        .zip(&values[half..])
        .filter(|(_, &v)| v > 0.0)
        .map(|(&n, &v)| ((n as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return false;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    slope <= -0.5 && values[values.len() - 1] <= values[half]
}

/// A step-size rule `n -> lambda_n` for recovery sequences.
#[derive(Clone)]
pub struct Schedule(Arc<dyn Fn(usize) -> f64 + Send + Sync>);

impl Schedule {
    pub fn new(f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        Schedule(Arc::new(f))
    }

    /// `lambda_n = 1/n`.
    pub fn harmonic() -> Self {
        Schedule::new(|n| 1.0 / n as f64)
    }

    pub fn at(&self, n: usize) -> f64 {
        (self.0)(n)
    }

    fn check(&self, window: Window) -> Result<()> {
        for n in window.indices() {
            let (a, b) = (self.at(n), self.at(n + 1));
            if !(a > b && b > 0.0) {
                return Err(LabError::domain(format!(
                    "schedule must decrease through positive values, got {a} then {b} at n = {n}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::harmonic()
    }
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Schedule(lambda_1 = {})", self.at(1))
    }
}

#[derive(Debug, Clone)]
pub struct MoscoOptions {
    /// Indices used for recovery sequences and distance-function gaps.
    pub window: Window,
    pub tol: f64,
    /// Tolerance when comparing asymptotic centers.
    pub weak_tol: f64,
    pub seed: u64,
    /// Envelope parameters for probes outside the closed domain.
    pub mus: Vec<f64>,
    pub schedule: Schedule,
}

impl Default for MoscoOptions {
    fn default() -> Self {
        MoscoOptions {
            window: Window { start: 1, len: 256 },
            tol: 1e-6,
            weak_tol: 1e-6,
            seed: 0,
            mus: vec![1.0, 0.25],
            schedule: Schedule::harmonic(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LiminfCheck {
    pub label: String,
    pub x: Point,
    pub liminf_estimate: f64,
    pub f_x: f64,
    pub pass: bool,
    pub window: Window,
}

/// `f(x) <= liminf f_n(x_n)` along a weakly convergent `x_n -> x`, with the
/// liminf estimated by the minimum over the window tail.
pub fn check_liminf_condition(
    seq: &FunctionSequence,
    f: &ConvexFunction,
    wseq: &PointSequence,
    x: &Point,
    opts: &MoscoOptions,
) -> Result<LiminfCheck> {
    let verdict = weak_limit(wseq, &Selector::standard_battery(opts.seed), opts.weak_tol)?;
    let candidate = match (verdict.converges, verdict.candidate) {
        (Convergence::Yes, Some(c)) => c,
        (converges, _) => {
            return Err(LabError::PreconditionFailed(format!(
                "{} is not weakly convergent over {:?} (verdict {converges:?})",
                wseq.label(),
                wseq.window()
            )))
        }
    };
    if candidate.distance(x)? > opts.weak_tol {
        return Err(LabError::PreconditionFailed(format!("{} converges weakly to {candidate}, not {x}", wseq.label())));
    }
    liminf_along(seq, f, wseq, x, opts.tol)
}

fn liminf_along(
    seq: &FunctionSequence,
    f: &ConvexFunction,
    wseq: &PointSequence,
    x: &Point,
    tol: f64,
) -> Result<LiminfCheck> {
    let mut estimate = f64::INFINITY;
    for n in wseq.window().tail() {
        estimate = estimate.min(seq.at(n)?.evaluate(&wseq.at(n)?)?);
    }
    let f_x = f.evaluate(x)?;
    let pass = f_x <= estimate + tol || f_x == estimate;
    Ok(LiminfCheck { label: wseq.label().into(), x: x.clone(), liminf_estimate: estimate, f_x, pass, window: wseq.window() })
}

/// `y_n = J^n_{lambda_n} x`.
pub fn build_recovery_sequence(
    seq: &FunctionSequence,
    x: &Point,
    schedule: &Schedule,
    window: Window,
) -> Result<PointSequence> {
    schedule.check(window)?;
    let seq = seq.clone();
    let x = x.clone();
    let schedule = schedule.clone();
    let tol = default_tol(seq.space());
    let space = seq.space().clone();
    Ok(PointSequence::new(&space, window, move |n| Ok(prox(&seq.at(n)?, &x, schedule.at(n), tol)?.minimizer))
        .with_label("recovery"))
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryCheck {
    pub label: String,
    pub x: Point,
    pub f_x: f64,
    /// `f(x) = +inf`: nothing to recover.
    pub vacuous: bool,
    pub indices: Vec<usize>,
    /// `d(y_n, x)` over the window.
    pub distances: Vec<f64>,
    /// `f_n(y_n)` over the window.
    pub values: Vec<f64>,
    pub limsup_estimate: f64,
    pub converges_to_x: bool,
    pub pass: bool,
    /// Indices where the prox solver failed.
    pub failures: Vec<(usize, String)>,
}

pub fn check_recovery(
    seq: &FunctionSequence,
    f: &ConvexFunction,
    x: &Point,
    opts: &MoscoOptions,
) -> Result<RecoveryCheck> {
    check_recovery_labelled(seq, f, x, opts, "f")
}

fn check_recovery_labelled(
    seq: &FunctionSequence,
    f: &ConvexFunction,
    x: &Point,
    opts: &MoscoOptions,
    label: &str,
) -> Result<RecoveryCheck> {
    let f_x = f.evaluate(x)?;
    let mut check = RecoveryCheck {
        label: label.into(),
        x: x.clone(),
        f_x,
        vacuous: !f_x.is_finite(),
        indices: Vec::new(),
        distances: Vec::new(),
        values: Vec::new(),
        limsup_estimate: f64::NEG_INFINITY,
        converges_to_x: true,
        pass: true,
        failures: Vec::new(),
    };
    if check.vacuous {
        return Ok(check);
    }
    let ys = build_recovery_sequence(seq, x, &opts.schedule, opts.window)?;
    for n in opts.window.indices() {
        match ys.at(n) {
            Ok(y) => {
                check.indices.push(n);
                check.distances.push(y.dist(x));
                check.values.push(seq.at(n)?.evaluate(&y)?);
            }
            Err(e @ LabError::Unconverged { .. }) => check.failures.push((n, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let half = check.values.len() / 2;
    check.limsup_estimate = check.values[half..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // An excess over f(x) that is still decaying has limsup zero.
    let excess: Vec<f64> = check.values.iter().map(|v| (v - f_x).max(0.0)).collect();
    if check.limsup_estimate > f_x && vanishes(&check.indices, &excess, opts.tol) {
        check.limsup_estimate = f_x;
    }
    check.converges_to_x = vanishes(&check.indices, &check.distances, crate::tolerance::GEOM);
    check.pass = check.failures.is_empty() && check.converges_to_x && check.limsup_estimate <= f_x + opts.tol;
    Ok(check)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MoscoVerdict {
    Consistent,
    Falsified,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MoscoWitness {
    Liminf { label: String, x: Point, f_x: f64, liminf_estimate: f64, mu: Option<f64> },
    Recovery { x: Point, f_x: f64, limsup_estimate: f64, last_distance: f64, mu: Option<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct MoscoReport {
    pub liminf_checks: Vec<LiminfCheck>,
    pub recovery_checks: Vec<RecoveryCheck>,
    /// Recovery checks for `g_n = f_{n,mu}` against `g = f_mu`, keyed by `mu`.
    pub envelope_recovery_checks: Vec<(f64, RecoveryCheck)>,
    pub envelope_liminf_checks: Vec<(f64, LiminfCheck)>,
    /// Adversarial sequences that were not weakly convergent.
    pub skipped: Vec<String>,
    pub verdict: MoscoVerdict,
    pub witness: Option<MoscoWitness>,
    pub window: Window,
    pub tol: f64,
}

/// Searches for a violation of either Mosco condition. Probes in the domain
/// of `f` get recovery sequences; probes outside it are handled through the
/// envelopes `g_n = f_{n,mu}` and `g = f_mu`, which are finite everywhere.
/// "Consistent" only means no counterexample turned up.
pub fn mosco_check(
    seq: &FunctionSequence,
    f: &ConvexFunction,
    probes: &ProbeGrid,
    adversarial: &[PointSequence],
    opts: &MoscoOptions,
) -> Result<MoscoReport> {
    f.dom_sample().check_same_space(&probes.points()[0])?;
    let mut report = MoscoReport {
        liminf_checks: Vec::new(),
        recovery_checks: Vec::new(),
        envelope_recovery_checks: Vec::new(),
        envelope_liminf_checks: Vec::new(),
        skipped: Vec::new(),
        verdict: MoscoVerdict::Consistent,
        witness: None,
        window: opts.window,
        tol: opts.tol,
    };

    let mut limits = Vec::new();
    for wseq in adversarial {
        let verdict = weak_limit(wseq, &Selector::standard_battery(opts.seed), opts.weak_tol)?;
        match (verdict.converges, verdict.candidate) {
            (Convergence::Yes, Some(x)) => limits.push((wseq, x)),
            (c, _) => report.skipped.push(format!("{}: weak limit verdict {c:?}", wseq.label())),
        }
    }
    for (wseq, x) in &limits {
        report.liminf_checks.push(liminf_along(seq, f, wseq, x, opts.tol)?);
    }

    let mut outside = Vec::new();
    for x in probes.points() {
        let check = check_recovery(seq, f, x, opts)?;
        if check.vacuous {
            outside.push(x.clone());
        } else {
            report.recovery_checks.push(check);
        }
    }

    if !outside.is_empty() {
        for &mu in &opts.mus {
            let base = seq.clone();
            let g_seq = FunctionSequence::new(seq.space(), move |n| ConvexFunction::envelope_of(base.at(n)?, mu));
            let g = ConvexFunction::envelope_of(f.clone(), mu)?;
            for x in &outside {
                let check = check_recovery_labelled(&g_seq, &g, x, opts, &format!("envelope mu={mu}"))?;
                report.envelope_recovery_checks.push((mu, check));
            }
            for (wseq, x) in &limits {
                report.envelope_liminf_checks.push((mu, liminf_along(&g_seq, &g, wseq, x, opts.tol)?));
            }
        }
    }

    report.witness = first_witness(&report);
    let errored = report
        .recovery_checks
        .iter()
        .chain(report.envelope_recovery_checks.iter().map(|(_, c)| c))
        .any(|c| !c.pass);
    let ran = report.liminf_checks.len() + report.recovery_checks.len() + report.envelope_recovery_checks.len();
    report.verdict = if report.witness.is_some() {
        MoscoVerdict::Falsified
    } else if errored || ran == 0 {
        MoscoVerdict::Inconclusive
    } else {
        MoscoVerdict::Consistent
    };
    Ok(report)
}

fn first_witness(report: &MoscoReport) -> Option<MoscoWitness> {
    let liminf = |c: &LiminfCheck, mu| MoscoWitness::Liminf {
        label: c.label.clone(),
        x: c.x.clone(),
        f_x: c.f_x,
        liminf_estimate: c.liminf_estimate,
        mu,
    };
    let recovery = |c: &RecoveryCheck, mu| MoscoWitness::Recovery {
        x: c.x.clone(),
        f_x: c.f_x,
        limsup_estimate: c.limsup_estimate,
        last_distance: c.distances.last().copied().unwrap_or(f64::NAN),
        mu,
    };
    // Solver failures make a check inconclusive, not falsified.
    // A recovery sequence that merely fails to reach x refutes nothing.
    let refutes = |c: &RecoveryCheck| c.failures.is_empty() && c.limsup_estimate > c.f_x + report.tol;
    report
        .liminf_checks
        .iter()
        .find(|c| !c.pass)
        .map(|c| liminf(c, None))
        .or_else(|| report.recovery_checks.iter().find(|c| refutes(c)).map(|c| recovery(c, None)))
        .or_else(|| report.envelope_liminf_checks.iter().find(|(_, c)| !c.pass).map(|(mu, c)| liminf(c, Some(*mu))))
        .or_else(|| {
            report
                .envelope_recovery_checks
                .iter()
                .find(|(_, c)| refutes(c))
                .map(|(mu, c)| recovery(c, Some(*mu)))
        })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeCell {
    pub lambda: f64,
    pub probe: usize,
    /// `f_{n,lambda}(x)` at the last index of the window.
    pub last_value: f64,
    /// `f_lambda(x)`, when a limit was declared.
    pub limit_value: Option<f64>,
    pub last_gap: Option<f64>,
    pub last_prox_distance: Option<f64>,
    /// Spread of `f_{n,lambda}(x)` over the first and second window halves.
    pub head_spread: f64,
    pub tail_spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeConvergenceReport {
    pub window: Window,
    pub indices: Vec<usize>,
    /// Largest `|f_{n,lambda}(x) - f_lambda(x)|` over all cells, per index.
    pub max_gap: Vec<f64>,
    /// Largest `d(J^n_lambda x, J_lambda x)` over all cells, per index.
    pub max_prox_distance: Vec<f64>,
    pub cells: Vec<EnvelopeCell>,
    pub gaps_vanish: bool,
    pub prox_distances_vanish: bool,
    /// Every cell looks Cauchy in `n`: values settle instead of drifting.
    pub pointwise_limit: bool,
}

/// Envelope and prox convergence at every `(lambda_k, x_l)` over a window,
/// with proxes solved to `tol`.
pub fn check_envelope_convergence(
    seq: &FunctionSequence,
    f: Option<&ConvexFunction>,
    lambdas: &LambdaGrid,
    probes: &ProbeGrid,
    window: Window,
    tol: f64,
) -> Result<EnvelopeConvergenceReport> {
    let indices: Vec<usize> = window.indices().collect();
    let terms: Vec<ConvexFunction> = indices.iter().map(|&n| seq.at(n)).collect::<Result<_>>()?;
    let mut max_gap = vec![0.0f64; indices.len()];
    let mut max_prox = vec![0.0f64; indices.len()];
    let mut cells = Vec::new();
    let half = indices.len() / 2;
    for &lambda in lambdas.values() {
        for (l, x) in probes.points().iter().enumerate() {
            let limit = f.map(|f| prox(f, x, lambda, tol)).transpose()?;
            let mut values = Vec::with_capacity(indices.len());
            let mut cell = EnvelopeCell {
                lambda,
                probe: l,
                last_value: 0.0,
                limit_value: limit.as_ref().map(|r| r.value),
                last_gap: None,
                last_prox_distance: None,
                head_spread: 0.0,
                tail_spread: 0.0,
            };
            for (i, fn_) in terms.iter().enumerate() {
                let r = prox(fn_, x, lambda, tol)?;
                if let Some(lim) = &limit {
                    let gap = (r.value - lim.value).abs();
                    let dist = r.minimizer.dist(&lim.minimizer);
                    max_gap[i] = max_gap[i].max(gap);
                    max_prox[i] = max_prox[i].max(dist);
                    cell.last_gap = Some(gap);
                    cell.last_prox_distance = Some(dist);
                }
                values.push(r.value);
            }
            cell.last_value = *values.last().expect("nonempty window");
            cell.head_spread = spread(&values[..half]);
            cell.tail_spread = spread(&values[half..]);
            cells.push(cell);
        }
    }
    let floor = 10.0 * tol;
    let pointwise_limit = cells.iter().all(|c| c.tail_spread <= floor.max(0.5 * c.head_spread));
    Ok(EnvelopeConvergenceReport {
        window,
        gaps_vanish: f.is_some() && vanishes(&indices, &max_gap, floor),
        prox_distances_vanish: f.is_some() && vanishes(&indices, &max_prox, floor),
        indices,
        max_gap,
        max_prox_distance: max_prox,
        cells,
        pointwise_limit,
    })
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaRow {
    pub probe: Point,
    /// `f_{N,lambda_k}(x)` at the window end `N`, one per `lambda_k`.
    pub values: Vec<f64>,
    /// `sup_k` of the values; `+inf` when they blow up along the grid.
    pub sup: f64,
    pub divergent: bool,
    /// Largest spread of `f_{n,lambda_k}(x)` over the window tail.
    pub tail_spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaTable {
    pub lambdas: Vec<f64>,
    pub window: Window,
    pub minorization_r: f64,
    pub rows: Vec<GammaRow>,
}

impl GammaTable {
    /// Values nondecreasing in `k` at every probe, up to `slack`.
    pub fn monotone_in_k(&self, slack: f64) -> bool {
        self.rows.iter().all(|r| r.values.windows(2).all(|w| w[1] >= w[0] - slack))
    }
}

/// The Gamma-limit candidate `sup_k lim_n f_{n,lambda_k}(x)` at each probe.
/// Refuses with `NoUniformBound` when the sequence has no uniform quadratic
/// minorant, since the sup formula needs one.
pub fn gamma_limit_from_envelopes(
    seq: &FunctionSequence,
    lambdas: &LambdaGrid,
    probes: &ProbeGrid,
    window: Window,
) -> Result<GammaTable> {
    let bound = estimate_minorization(seq, &probes.points()[0], lambdas.values()[0], window)?;
    let tol = default_tol(seq.space());
    let tail: Vec<ConvexFunction> = window.tail().map(|n| seq.at(n)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for x in probes.points() {
        let mut values = Vec::new();
        let mut tail_spread = 0.0f64;
        for &lambda in lambdas.values() {
            let series: Vec<f64> = tail.iter().map(|f| Ok(prox(f, x, lambda, tol)?.value)).collect::<Result<_>>()?;
            tail_spread = tail_spread.max(spread(&series));
            values.push(*series.last().expect("nonempty tail"));
        }
        let divergent = blows_up(&values, tol);
        let sup = if divergent { f64::INFINITY } else { values.iter().copied().fold(f64::NEG_INFINITY, f64::max) };
        rows.push(GammaRow { probe: x.clone(), values, sup, divergent, tail_spread });
    }
    Ok(GammaTable { lambdas: lambdas.values().to_vec(), window, minorization_r: bound.r, rows })
}

/// Increments along the grid that are still growing at the finest scale.
fn blows_up(values: &[f64], tol: f64) -> bool {
    let k = values.len();
    if values.iter().any(|v| !v.is_finite()) {
        return true;
    }
    if k < 3 {
        return false;
    }
    let last = values[k - 1] - values[k - 2];
    let prev = values[k - 2] - values[k - 3];
    last > tol && last > 1.5 * prev
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceGap {
    pub probe: Point,
    /// `|d(x, C_n) - d(x, C)|` over the window.
    pub gaps: Vec<f64>,
    pub vanishes: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrolikWijsmanReport {
    pub indices: Vec<usize>,
    pub distance_gaps: Vec<DistanceGap>,
    pub distances_converge: bool,
    pub mosco: MoscoReport,
    /// Largest `|iota_C envelope at 1/2 - d(x, C)^2|` over the probes.
    pub bridge_residual: f64,
    pub agree: bool,
}

/// Pointwise convergence of distance functions next to Mosco convergence of
/// the indicators; the two verdicts should coincide.
pub fn frolik_wijsman_check(
    sets: &SetSequence,
    c: &ConvexSet,
    probes: &ProbeGrid,
    adversarial: &[PointSequence],
    opts: &MoscoOptions,
) -> Result<FrolikWijsmanReport> {
    let indices: Vec<usize> = opts.window.indices().collect();
    let members: Vec<ConvexSet> = indices.iter().map(|&n| sets.at(n)).collect::<Result<_>>()?;
    let indicator = ConvexFunction::indicator(c.clone());
    let tol = default_tol(c.space());
    let mut distance_gaps = Vec::new();
    let mut bridge_residual = 0.0f64;
    for x in probes.points() {
        let target = c.distance(x)?;
        let gaps: Vec<f64> = members.iter().map(|cn| Ok((cn.distance(x)? - target).abs())).collect::<Result<_>>()?;
        let vanish = vanishes(&indices, &gaps, crate::tolerance::GEOM);
        distance_gaps.push(DistanceGap { probe: x.clone(), gaps, vanishes: vanish });
        let half_envelope = prox(&indicator, x, 0.5, tol)?.value;
        bridge_residual = bridge_residual.max((half_envelope - target * target).abs());
    }
    let distances_converge = distance_gaps.iter().all(|g| g.vanishes);
    let mosco = mosco_check(&sets.indicators(), &indicator, probes, adversarial, opts)?;
    let agree = distances_converge == (mosco.verdict == MoscoVerdict::Consistent);
    Ok(FrolikWijsmanReport { indices, distance_gaps, distances_converge, mosco, bridge_residual, agree })
}
