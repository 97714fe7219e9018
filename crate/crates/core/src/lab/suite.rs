//! Property batteries over the bundled fixtures, one summary line per property.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::fixtures::{self, is_closed_form, random_closed_form, random_function, random_set, suggested_tol, SCALE};
use crate::catalog::{convexity_residual, ConvexFunction, Window};
use crate::convergence::{
    asymptotic_center, check_envelope_convergence, frolik_wijsman_check, gamma_limit_from_envelopes, mosco_check,
    weak_limit, Convergence, MoscoOptions, MoscoVerdict, PointSequence, Selector,
};
use crate::error::{LabError, Result};
use crate::metric::{cauchy_limit, pseudometric_e, pseudometric_r, rho, CauchyOptions, LambdaGrid, ProbeGrid};
use crate::prox::{default_tol, prox, resolvent_inequality_residual, semigroup_residual};
use crate::space::sample::{random_in_ball, random_point};
use crate::space::{quadruple_residual, Geodesic, Point, Space};
use crate::tolerance::GEOM;

#[derive(Debug, Clone, Serialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub trials: usize,
    /// The worst observed value of the checked quantity.
    pub worst: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub properties: Vec<PropertyOutcome>,
    pub all_pass: bool,
}

impl SuiteReport {
    pub fn lines(&self) -> Vec<String> {
        self.properties
            .iter()
            .map(|p| {
                let status = if p.pass { "pass" } else { "FAIL" };
                format!("{status} {:56} trials={:<6} worst={:.3e}", p.name, p.trials, p.worst)
            })
            .collect()
    }
}

pub const SUITES: [&str; 5] = ["geometry", "prox", "convergence", "metric", "all"];

/// Trial counts for the randomized batteries.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub quadruples: usize,
    pub triples: usize,
    pub prox_trials: usize,
    pub semigroup_trials: usize,
    pub function_triples: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { quadruples: 10_000, triples: 2_000, prox_trials: 2_500, semigroup_trials: 250, function_triples: 20 }
    }
}

pub fn suite(name: &str, seed: u64) -> Result<SuiteReport> {
    suite_with(name, seed, Budget::default())
}

pub fn suite_with(name: &str, seed: u64, budget: Budget) -> Result<SuiteReport> {
    let mut properties = Vec::new();
    match name {
        "geometry" => geometry(seed, budget, &mut properties)?,
        "prox" => prox_suite(seed, budget, &mut properties)?,
        "convergence" => convergence(seed, &mut properties)?,
        "metric" => metric(seed, budget, &mut properties)?,
        "all" => {
            geometry(seed, budget, &mut properties)?;
            prox_suite(seed, budget, &mut properties)?;
            convergence(seed, &mut properties)?;
            metric(seed, budget, &mut properties)?;
        }
        other => {
            return Err(LabError::domain(format!("unknown suite `{other}`; expected one of {}", SUITES.join(", "))))
        }
    }
    let all_pass = properties.iter().all(|p| p.pass);
    Ok(SuiteReport { suite: name.into(), seed, properties, all_pass })
}

/// Tracks the worst value of a quantity that must stay at or below a bound.
struct Worst {
    name: String,
    trials: usize,
    worst: f64,
    bound: f64,
}

impl Worst {
    fn new(name: impl Into<String>, bound: f64) -> Self {
        Worst { name: name.into(), trials: 0, worst: f64::NEG_INFINITY, bound }
    }

    fn see(&mut self, v: f64) {
        self.trials += 1;
        if v > self.worst || v.is_nan() {
            self.worst = v;
        }
    }

    fn done(self) -> PropertyOutcome {
        let pass = self.worst <= self.bound;
        PropertyOutcome { name: self.name, trials: self.trials, worst: self.worst, pass }
    }
}

fn verdict(name: &str, pass: bool) -> PropertyOutcome {
    PropertyOutcome { name: name.into(), trials: 1, worst: if pass { 0.0 } else { 1.0 }, pass }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn geometry(seed: u64, budget: Budget, out: &mut Vec<PropertyOutcome>) -> Result<()> {
    for (i, (label, space)) in fixtures::standard_spaces().into_iter().enumerate() {
        let mut rng = rng_for(seed, 100 + i as u64);
        let mut sym = Worst::new(format!("{label}: symmetry |d(x,y) - d(y,x)|"), GEOM);
        let mut tri = Worst::new(format!("{label}: triangle d(x,z) - d(x,y) - d(y,z)"), GEOM);
        let mut speed = Worst::new(format!("{label}: geodesic speed defect"), GEOM);
        let mut quad = Worst::new(format!("{label}: quadruple residual (negated)"), GEOM);
        let mut weaker = Worst::new(format!("{label}: strong minus weak quadruple residual"), GEOM);
        for _ in 0..budget.triples {
            let (x, y, z) = (random_point(&space, SCALE, &mut rng), random_point(&space, SCALE, &mut rng), random_point(&space, SCALE, &mut rng));
            sym.see((x.distance(&y)? - y.distance(&x)?).abs());
            tri.see(x.distance(&z)? - x.distance(&y)? - y.distance(&z)?);
            let g = Geodesic::new(&x, &y)?;
            let scale = g.length().max(1.0);
            for _ in 0..11 {
                let (s, t) = (rng.gen::<f64>(), rng.gen::<f64>());
                speed.see(g.speed_defect(s, t)?.abs() / scale);
            }
        }
        for _ in 0..budget.quadruples {
            let p: Vec<Point> = (0..4).map(|_| random_point(&space, SCALE, &mut rng)).collect();
            let r = quadruple_residual(&p[0], &p[1], &p[2], &p[3])?;
            quad.see(-r.strong);
            weaker.see(r.strong - r.weak);
        }
        out.extend([sym.done(), tri.done(), speed.done(), quad.done(), weaker.done()]);

        if let Space::Product(..) = &*space {
            let mut split = Worst::new(format!("{label}: product distance decomposition"), GEOM);
            let mut parts = Worst::new(format!("{label}: product geodesics componentwise"), GEOM);
            for _ in 0..budget.triples {
                let (x, y) = (random_point(&space, SCALE, &mut rng), random_point(&space, SCALE, &mut rng));
                let ((x1, x2), (y1, y2)) = (x.split().expect("pair"), y.split().expect("pair"));
                let d = (x1.distance(&y1)?.powi(2) + x2.distance(&y2)?.powi(2)).sqrt();
                split.see((x.distance(&y)? - d).abs());
                let t = rng.gen::<f64>();
                let (m1, m2) = Geodesic::new(&x, &y)?.at(t)?.split().expect("pair");
                let e1 = Geodesic::new(&x1, &y1)?.at(t)?.distance(&m1)?;
                let e2 = Geodesic::new(&x2, &y2)?.at(t)?.distance(&m2)?;
                parts.see(e1.max(e2));
            }
            out.extend([split.done(), parts.done()]);
        }
    }
    Ok(())
}

fn prox_suite(seed: u64, budget: Budget, out: &mut Vec<PropertyOutcome>) -> Result<()> {
    for (i, (label, space)) in fixtures::standard_spaces().into_iter().enumerate() {
        let mut rng = rng_for(seed, 200 + i as u64);
        let mut convex = Worst::new(format!("{label}: convexity residual (negated)"), GEOM);
        let mut optimal = Worst::new(format!("{label}: exact prox beats 100 perturbations by"), GEOM);
        let mut nonexp = Worst::new(format!("{label}: prox nonexpansive excess"), GEOM);
        let mut resolvent = Worst::new(format!("{label}: resolvent inequality slack (negated)"), 0.0);
        let mut fields = Worst::new(format!("{label}: prox value equals objective at minimizer"), 1e-12);
        let mut project = Worst::new(format!("{label}: projection idempotent and nonexpansive"), GEOM);
        let mut half = Worst::new(format!("{label}: indicator envelope at 1/2 equals d^2"), GEOM);
        for _ in 0..budget.prox_trials {
            let f = random_function(&space, &mut rng);
            let tol = suggested_tol(&f);
            let (x, y) = (random_point(&space, SCALE, &mut rng), random_point(&space, SCALE, &mut rng));
            let lambda = rng.gen_range(0.05..3.0);
            let t = rng.gen::<f64>();
            let c = convexity_residual(&f, &x, &y, t)?;
            convex.see(if c.is_finite() { -c / f.evaluate(&x)?.abs().max(f.evaluate(&y)?.abs()).max(1.0) } else { 0.0 });
            match (solved(prox(&f, &x, lambda, tol))?, solved(prox(&f, &y, lambda, tol))?) {
                (Some(px), Some(py)) => {
                    let slack = 2.0 * (2.0 * lambda * (px.certified_gap + py.certified_gap)).sqrt();
                    nonexp.see(px.minimizer.distance(&py.minimizer)? - x.distance(&y)? - slack);
                    let objective = f.evaluate(&px.minimizer)? + px.minimizer.distance(&x)?.powi(2) / (2.0 * lambda);
                    fields.see((objective - px.value).abs() / px.value.abs().max(1.0));
                }
                _ => nonexp.see(f64::INFINITY),
            }
            match solved(resolvent_inequality_residual(&f, &x, &y, lambda, tol))? {
                Some(check) if check.residual.is_finite() => resolvent.see(-(check.residual + tol + check.certified_gap)),
                Some(_) => {}
                None => resolvent.see(f64::INFINITY),
            }
            if let Some(star) = f.exact_prox(&x, lambda)? {
                let base = f.evaluate(&star)? + star.distance(&x)?.powi(2) / (2.0 * lambda);
                for _ in 0..100 {
                    let z = random_in_ball(&star, 0.1, 0.1, &mut rng);
                    let v = f.evaluate(&z)? + z.distance(&x)?.powi(2) / (2.0 * lambda);
                    if v.is_finite() {
                        optimal.see((base - v) / base.abs().max(1.0));
                    }
                }
            }
            let set = random_set(&space, &mut rng);
            let (sx, sy) = (set.project(&x)?, set.project(&y)?);
            project.see(set.project(&sx)?.distance(&sx)?.max(sx.distance(&sy)? - x.distance(&y)?));
            let ind = ConvexFunction::indicator(set.clone());
            let e = prox(&ind, &x, 0.5, default_tol(&space))?.value;
            half.see((e - set.distance(&x)?.powi(2)).abs());
        }
        let mut closed = Worst::new(format!("{label}: semigroup residual, closed forms"), 1e-9);
        let mut numeric = Worst::new(format!("{label}: semigroup residual over 10 tol, numerical proxes"), 1.0);
        for _ in 0..budget.semigroup_trials {
            let f = random_function(&space, &mut rng);
            let tol = suggested_tol(&f);
            let x = random_point(&space, SCALE, &mut rng);
            let (lambda, mu) = (rng.gen_range(0.05..2.0), rng.gen_range(0.05..2.0));
            let residual = solved(semigroup_residual(&f, &x, lambda, mu, tol))?.unwrap_or(f64::INFINITY);
            if is_closed_form(&f) {
                closed.see(residual);
            } else {
                numeric.see(residual / (10.0 * tol));
            }
        }
        out.extend([
            convex.done(),
            optimal.done(),
            nonexp.done(),
            resolvent.done(),
            fields.done(),
            project.done(),
            half.done(),
            closed.done(),
            numeric.done(),
        ]);
    }
    Ok(())
}

/// Solver non-convergence is a failed trial, not an aborted suite.
fn solved<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(LabError::Unconverged { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn convergence(seed: u64, out: &mut Vec<PropertyOutcome>) -> Result<()> {
    let opts = MoscoOptions { seed, ..MoscoOptions::default() };
    let plane = Space::euclidean(2)?;
    let probes = ProbeGrid::lattice(&plane, &[-2.0, -2.0], &[2.0, 2.0], 0.5)?;
    let lambdas = LambdaGrid::default();

    let (s1, c1) = fixtures::shrinking_balls();
    let f1 = ConvexFunction::indicator(c1.clone());
    let env = check_envelope_convergence(&s1.indicators(), Some(&f1), &lambdas, &probes, opts.window, 1e-8)?;
    out.push(verdict("S1: envelope gaps and prox distances vanish", env.gaps_vanish && env.prox_distances_vanish));
    let m = mosco_check(&s1.indicators(), &f1, &probes, &[], &opts)?;
    out.push(verdict("S1: Mosco check consistent", m.verdict == MoscoVerdict::Consistent));

    let (alt, c_alt) = fixtures::alternating_balls();
    let f_alt = ConvexFunction::indicator(c_alt);
    let adversarial = [PointSequence::constant(Point::vector(&plane, vec![1.0, 0.0])?, Window::new(1, 32)?)];
    let m = mosco_check(&alt.indicators(), &f_alt, &probes, &adversarial, &opts)?;
    out.push(verdict("alternating balls: Mosco check falsified", m.verdict == MoscoVerdict::Falsified));
    let env = check_envelope_convergence(&alt.indicators(), Some(&f_alt), &lambdas, &probes, opts.window, 1e-8)?;
    out.push(verdict("alternating balls: envelope gaps do not vanish", !env.gaps_vanish));

    for (label, (sets, c), expect) in [
        ("S1", fixtures::shrinking_balls(), true),
        ("fixed ball", fixtures::fixed_ball(), true),
        ("escaping points", fixtures::escaping_points(), false),
    ] {
        let r = frolik_wijsman_check(&sets, &c, &probes, &[], &opts)?;
        let consistent = r.mosco.verdict == MoscoVerdict::Consistent;
        out.push(verdict(
            &format!("{label}: Frolik-Wijsman and Mosco verdicts agree ({})", if expect { "pass" } else { "fail" }),
            r.agree && r.distances_converge == expect && consistent == expect,
        ));
    }

    let spider = fixtures::spider();
    let tips = fixtures::spider_tips(Window::new(1, 64)?);
    let hub = Point::vertex(&spider, 0)?;
    let center = asymptotic_center(&tips)?;
    out.push(PropertyOutcome {
        name: "spider: asymptotic center of alternating tips is the hub".into(),
        trials: 1,
        worst: center.distance(&hub)?,
        pass: center.distance(&hub)? <= 1e-6,
    });
    let w = weak_limit(&tips, &Selector::standard_battery(seed), 1e-6)?;
    out.push(verdict("spider: alternating tips have no weak limit", w.converges == Convergence::No && w.witness.is_some()));
    let doubled = asymptotic_center(&tips.clone().with_window(tips.window().doubled()))?;
    out.push(PropertyOutcome {
        name: "spider: center stable under window doubling".into(),
        trials: 1,
        worst: doubled.distance(&center)?,
        pass: doubled.distance(&center)? < 1e-6,
    });

    let (mq, _) = fixtures::moving_quadratics();
    let line = mq.space().clone();
    let line_probes = ProbeGrid::lattice(&line, &[-2.0], &[2.0], 0.25)?;
    let t = gamma_limit_from_envelopes(&mq, &lambdas, &line_probes, Window::new(1, 256)?)?;
    out.push(verdict("moving quadratics: Gamma table monotone in k", t.monotone_in_k(1e-12)));
    let refused = gamma_limit_from_envelopes(&fixtures::escaping_indicators(), &lambdas, &line_probes, Window::new(1, 64)?);
    out.push(verdict("escaping indicators: Gamma assembly refused", matches!(refused, Err(LabError::NoUniformBound(_)))));
    Ok(())
}

fn metric(seed: u64, budget: Budget, out: &mut Vec<PropertyOutcome>) -> Result<()> {
    let mut rng = rng_for(seed, 300);
    let lambdas = LambdaGrid::dyadic(6)?;
    for (label, space) in fixtures::standard_spaces() {
        let probes = ProbeGrid::explicit((0..6).map(|_| random_point(&space, SCALE, &mut rng)).collect())?;
        let tol = default_tol(&space);
        let mut symmetric = Worst::new(format!("{label}: rho symmetric"), 0.0);
        let mut triangle = Worst::new(format!("{label}: rho triangle excess over 8 certified gaps"), 0.0);
        for _ in 0..budget.function_triples {
            let f = random_closed_form(&space, &mut rng);
            let g = random_closed_form(&space, &mut rng);
            let h = random_closed_form(&space, &mut rng);
            let (fg, gf) = (rho(&f, &g, &lambdas, &probes, tol)?, rho(&g, &f, &lambdas, &probes, tol)?);
            symmetric.see((fg.value - gf.value).abs());
            let (gh, fh) = (rho(&g, &h, &lambdas, &probes, tol)?, rho(&f, &h, &lambdas, &probes, tol)?);
            let slack = 8.0 * fg.max_certified_gap.max(gh.max_certified_gap).max(fh.max_certified_gap);
            triangle.see(fh.value - fg.value - gh.value - slack - 1e-12);
        }
        out.extend([symmetric.done(), triangle.done()]);
    }

    let line = Space::euclidean(1)?;
    let f = ConvexFunction::squared_distance(Point::origin(&line), 1.0)?;
    let shifted = ConvexFunction::shifted(f.clone(), 0.5)?;
    let x = Point::vector(&line, vec![1.5])?;
    let e = pseudometric_e(&f, &shifted, 0.5, &x, 1e-8)?;
    let r = pseudometric_r(&f, &shifted, 0.5, &x, 1e-8)?;
    out.push(verdict("shifted pair separates e and r (e > 0, r = 0)", e > 0.25 && r == 0.0));

    let (mq, limit) = fixtures::moving_quadratics();
    let probes = ProbeGrid::lattice(&line, &[-2.0], &[2.0], 0.25)?;
    let grid = LambdaGrid::default();
    let table = cauchy_limit(&mq, &grid, &probes, &CauchyOptions::default())?;
    let ns = [1usize, 10, 100, 1000];
    let values: Vec<f64> = ns.iter().map(|&n| Ok(table.rho_to(&mq.at(n)?, 1e-8)?.value)).collect::<Result<_>>()?;
    out.push(PropertyOutcome {
        name: "moving quadratics: rho to the Cauchy limit decreases below 1e-3".into(),
        trials: ns.len(),
        worst: values[3],
        pass: values.windows(2).all(|w| w[1] < w[0]) && values[3] < 1e-3,
    });
    let to_limit = rho(&mq.at(1000)?, &limit, &grid, &probes, 1e-8)?.value;
    out.push(PropertyOutcome {
        name: "moving quadratics: rho to the declared limit at n = 1000".into(),
        trials: 1,
        worst: to_limit,
        pass: to_limit < 1e-3,
    });
    let not_cauchy = cauchy_limit(&fixtures::alternating_quadratics(), &grid, &probes, &CauchyOptions::default());
    out.push(verdict("alternating quadratics: NotCauchy", matches!(not_cauchy, Err(LabError::NotCauchy(_)))));
    Ok(())
}

