use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{golden_section, Window};
use crate::error::{LabError, Result};
use crate::space::{hyperbolic, Coords, Point, Space, SpaceRef};

/// An indexed point sequence `n -> x_n` observed through a window.
#[derive(Clone)]
pub struct PointSequence {
    space: SpaceRef,
    generator: Arc<dyn Fn(usize) -> Result<Point> + Send + Sync>,
    window: Window,
    label: String,
}

impl PointSequence {
    pub fn new(
        space: &SpaceRef,
        window: Window,
        generator: impl Fn(usize) -> Result<Point> + Send + Sync + 'static,
    ) -> Self {
        PointSequence { space: space.clone(), generator: Arc::new(generator), window, label: "sequence".into() }
    }

    pub fn constant(p: Point, window: Window) -> Self {
        let space = p.space().clone();
        PointSequence::new(&space, window, move |_| Ok(p.clone())).with_label("constant")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn at(&self, n: usize) -> Result<Point> {
        if n == 0 {
            return Err(LabError::domain("sequences are indexed from 1"));
        }
        let p = (self.generator)(n)?;
        if !crate::space::same_space(p.space(), &self.space) {
            return Err(LabError::mismatch(format!("term {n} lives on {}", p.space().name())));
        }
        Ok(p)
    }

    /// Points over the second half of the window.
    pub fn tail_points(&self) -> Result<Vec<Point>> {
        self.window.tail().map(|n| self.at(n)).collect()
    }

    pub fn subsequence(&self, selector: Selector) -> PointSequence {
        let base = self.clone();
        PointSequence::new(&self.space, self.window, move |k| base.at(selector.index(k)))
            .with_label(format!("{}/{}", self.label, selector.name()))
    }
}

impl fmt::Debug for PointSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointSequence")
            .field("label", &self.label)
            .field("space", &self.space.name())
            .field("window", &self.window)
            .finish_non_exhaustive()
    }
}

/// A rule picking a strictly increasing index subsequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selector {
    Identity,
    Evens,
    Odds,
    /// Keeps one index out of each pair `{2k-1, 2k}`, chosen by a seeded stream.
    RandomThinning { seed: u64 },
}

impl Selector {
    pub fn index(&self, k: usize) -> usize {
        match *self {
            Selector::Identity => k,
            Selector::Evens => 2 * k,
            Selector::Odds => 2 * k - 1,
            Selector::RandomThinning { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_word_pos(k as u128);
                2 * k - (rng.next_u32() & 1) as usize
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Selector::Identity => "identity".into(),
            Selector::Evens => "evens".into(),
            Selector::Odds => "odds".into(),
            Selector::RandomThinning { seed } => format!("thinning({seed})"),
        }
    }

    /// Identity, evens, odds and one random thinning.
    pub fn standard_battery(seed: u64) -> Vec<Selector> {
        vec![Selector::Identity, Selector::Evens, Selector::Odds, Selector::RandomThinning { seed }]
    }
}

/// Minimizer of `x -> max_n d(x, x_n)` over the window tail.
pub fn asymptotic_center(seq: &PointSequence) -> Result<Point> {
    let mut points: Vec<Point> = Vec::new();
    for p in seq.tail_points()? {
        if !points.contains(&p) {
            points.push(p);
        }
    }
    let radius = points.iter().map(|p| p.dist(&points[0])).fold(0.0, f64::max);
    if !radius.is_finite() {
        return Err(LabError::Unbounded(format!("{} has non-finite spread over {:?}", seq.label(), seq.window())));
    }
    Ok(enclosing_center(seq.space(), &points))
}

/// Center of the smallest ball containing `points`.
pub(crate) fn enclosing_center(space: &SpaceRef, points: &[Point]) -> Point {
    if points.len() == 1 {
        return points[0].clone();
    }
    match &**space {
        Space::Euclidean { .. } => {
            let vs: Vec<&[f64]> = points.iter().map(|p| p.as_vector().expect("Euclidean point")).collect();
            Point::from_valid(space, Coords::Vector(welzl(&vs)))
        }
        Space::Tree(tree) => {
            let radius = |p: &Point| points.iter().map(|q| p.dist(q)).fold(0.0, f64::max);
            let mut best: Option<(f64, Point)> = None;
            for (e, edge) in tree.edges().iter().enumerate() {
                let at = |s: f64| Point::on_edge(space, e, s.clamp(0.0, edge.length)).expect("offset within edge");
                let s = golden_section(|s| radius(&at(s)), 0.0, edge.length, 1e-13 * edge.length.max(1.0));
                let p = at(s);
                let r = radius(&p);
                if best.as_ref().map_or(true, |(b, _)| r < *b) {
                    best = Some((r, p));
                }
            }
            best.expect("trees have edges").1
        }
        Space::Hyperbolic2 => hyperbolic_center(space, points),
        Space::Product(..) => badoiu_clarkson(points),
    }
}

/// Welzl's algorithm with a deterministic shuffle.
fn welzl(points: &[&[f64]]) -> Vec<f64> {
    let dim = points[0].len();
    let mut order: Vec<&[f64]> = points.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let ball = welzl_with(&order, &mut Vec::new(), dim);
    ball.map(|b| b.0).unwrap_or_else(|| order[0].to_vec())
}

type Ball = (Vec<f64>, f64);

fn inside(ball: &Option<Ball>, p: &[f64]) -> bool {
    match ball {
        None => false,
        Some((c, r2)) => {
            let d2: f64 = c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
            d2 <= r2 * (1.0 + 1e-12) + 1e-26
        }
    }
}

fn welzl_with<'a>(points: &[&'a [f64]], boundary: &mut Vec<&'a [f64]>, dim: usize) -> Option<Ball> {
    let mut ball = circumball(boundary);
    if boundary.len() == dim + 1 {
        return ball;
    }
    for i in 0..points.len() {
        if !inside(&ball, points[i]) {
            boundary.push(points[i]);
            ball = welzl_with(&points[..i], boundary, dim);
            boundary.pop();
        }
    }
    ball
}

/// Smallest ball with all of `b` on its boundary, within their affine hull.
fn circumball(b: &[&[f64]]) -> Option<Ball> {
    let p0 = b.first()?;
    let k = b.len() - 1;
    if k == 0 {
        return Some((p0.to_vec(), 0.0));
    }
    let rel: Vec<Vec<f64>> = b[1..].iter().map(|p| p.iter().zip(p0.iter()).map(|(a, o)| a - o).collect()).collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let gram = DMatrix::from_fn(k, k, |i, j| 2.0 * dot(&rel[i], &rel[j]));
    let rhs = DVector::from_fn(k, |i, _| dot(&rel[i], &rel[i]));
    let alpha = gram.svd(true, true).solve(&rhs, 1e-14).ok()?;
    let mut c = p0.to_vec();
    for (a, r) in alpha.iter().zip(&rel) {
        for (ci, ri) in c.iter_mut().zip(r) {
            *ci += a * ri;
        }
    }
    let r2 = c.iter().zip(p0.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Some((c, r2))
}

/// Nested golden-section search in Klein coordinates, where geodesics are
/// straight chords and the radius function is quasiconvex.
fn hyperbolic_center(space: &SpaceRef, points: &[Point]) -> Point {
    let klein: Vec<[f64; 2]> = points
        .iter()
        .map(|p| match p.coords() {
            Coords::Hyperboloid(x) => [x[1] / x[0], x[2] / x[0]],
            _ => unreachable!("hyperbolic point"),
        })
        .collect();
    let to_point = |u: f64, v: f64| {
        let scale = 1.0 / (1.0 - u * u - v * v).max(1e-300).sqrt();
        Point::from_valid(space, Coords::Hyperboloid(hyperbolic::lift(u * scale, v * scale)))
    };
    let radius = |p: &Point| points.iter().map(|q| p.dist(q)).fold(0.0, f64::max);
    let (mut ulo, mut uhi, mut vlo, mut vhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for [u, v] in &klein {
        ulo = ulo.min(*u);
        uhi = uhi.max(*u);
        vlo = vlo.min(*v);
        vhi = vhi.max(*v);
    }
    let v_range = |u: f64| {
        let chord = (1.0 - u * u).max(0.0).sqrt() * (1.0 - 1e-12);
        let lo = vlo.max(-chord);
        (lo, vhi.min(chord).max(lo))
    };
    let inner = |u: f64| {
        let (lo, hi) = v_range(u);
        golden_section(|v| radius(&to_point(u, v)), lo, hi, 1e-11)
    };
    let u = golden_section(|u| radius(&to_point(u, inner(u))), ulo, uhi, 1e-11);
    to_point(u, inner(u))
}

/// Geodesic Badoiu-Clarkson iteration: step toward the farthest point with weight `1/(i+1)`.
fn badoiu_clarkson(points: &[Point]) -> Point {
    let farthest = |c: &Point| {
        points
            .iter()
            .max_by(|a, b| c.dist(a).total_cmp(&c.dist(b)))
            .expect("nonempty")
            .clone()
    };
    let mut c = points[0].clone();
    let mut best = (points.iter().map(|q| c.dist(q)).fold(0.0, f64::max), c.clone());
    for i in 1..=20_000 {
        let far = farthest(&c);
        c = c.toward(&far, 1.0 / (i as f64 + 1.0));
        let r = c.dist(&farthest(&c));
        if r < best.0 {
            best = (r, c.clone());
        }
    }
    best.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectorCenter {
    pub selector: Selector,
    pub center: Point,
    /// How far the center moves when the window doubles.
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakWitness {
    pub selector: Selector,
    pub center: Point,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakLimitVerdict {
    pub converges: Convergence,
    pub candidate: Option<Point>,
    pub witness: Option<WeakWitness>,
    pub centers: Vec<SelectorCenter>,
    pub window: Window,
    pub tol: f64,
}

/// Weak convergence test: every subsequence in the battery must share the
/// asymptotic center of the whole sequence, stably under window doubling.
pub fn weak_limit(seq: &PointSequence, battery: &[Selector], tol: f64) -> Result<WeakLimitVerdict> {
    let has = |pred: fn(&Selector) -> bool| battery.iter().any(pred);
    if !(has(|s| *s == Selector::Identity)
        && has(|s| *s == Selector::Evens)
        && has(|s| *s == Selector::Odds)
        && has(|s| matches!(s, Selector::RandomThinning { .. })))
    {
        return Err(LabError::PreconditionFailed(
            "the battery needs identity, evens, odds and a random thinning".into(),
        ));
    }
    let mut centers = Vec::with_capacity(battery.len());
    for &selector in battery {
        let sub = seq.subsequence(selector);
        let short = asymptotic_center(&sub)?;
        let long = asymptotic_center(&sub.with_window(seq.window().doubled()))?;
        centers.push(SelectorCenter { selector, drift: short.dist(&long), center: long });
    }
    let candidate = centers
        .iter()
        .find(|c| c.selector == Selector::Identity)
        .expect("battery has the identity")
        .center
        .clone();
    let verdict = |converges, candidate, witness| WeakLimitVerdict {
        converges,
        candidate,
        witness,
        centers: centers.clone(),
        window: seq.window(),
        tol,
    };
    if centers.iter().any(|c| !(c.drift <= tol)) {
        return Ok(verdict(Convergence::Inconclusive, None, None));
    }
    let worst = centers
        .iter()
        .map(|c| (c.center.dist(&candidate), c))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("nonempty battery");
    if worst.0 > tol {
        let witness = WeakWitness { selector: worst.1.selector, center: worst.1.center.clone(), distance: worst.0 };
        return Ok(verdict(Convergence::No, Some(candidate), Some(witness)));
    }
    Ok(verdict(Convergence::Yes, Some(candidate), None))
}
