//! The pseudometric families `e` and `r`, the metric `rho` built from them,
//! equi-Lipschitz bounds for envelopes, and limits of rho-Cauchy sequences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{ConvexFunction, FunctionSequence, Window};
use crate::error::{LabError, Result};
use crate::prox::{anchor_envelopes, default_tol, estimate_minorization, prox, ProxResult};
use crate::space::{hyperbolic, sample, Coords, Point, Space, SpaceRef};

/// Strictly decreasing positive scales `lambda_1 > lambda_2 > ...`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(LabError::domain("lambda grid is empty"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(LabError::domain("lambda grid values must be positive and finite"));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(LabError::domain("lambda grid must strictly decrease"));
        }
        Ok(LambdaGrid { values })
    }

    /// `lambda_k = 2^(1-k)` for `k = 1..=count`.
    pub fn dyadic(count: usize) -> Result<Self> {
        LambdaGrid::new((1..=count).map(|k| 2f64.powi(1 - k as i32)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::dyadic(12).expect("valid dyadic grid")
    }
}

/// Probe points `x_1, x_2, ...`, ordered so that early (heavily weighted)
/// probes sit near the middle of the region.
#[derive(Debug, Clone)]
pub struct ProbeGrid {
    points: Vec<Point>,
    spacing: Option<f64>,
}

impl ProbeGrid {
    pub fn explicit(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or_else(|| LabError::domain("probe grid is empty"))?;
        for p in &points {
            p.check_same_space(first)?;
        }
        Ok(ProbeGrid { points, spacing: None })
    }

    /// All lattice points of the box `[lo, hi]` in a Euclidean space.
    pub fn lattice(space: &SpaceRef, lo: &[f64], hi: &[f64], spacing: f64) -> Result<Self> {
        let Space::Euclidean { dim } = **space else {
            return Err(LabError::mismatch(format!("box lattices need a Euclidean space, not {}", space.name())));
        };
        if lo.len() != dim || hi.len() != dim {
            return Err(LabError::mismatch(format!("box corners must have {dim} coordinates")));
        }
        if !(spacing.is_finite() && spacing > 0.0) || lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
            return Err(LabError::domain("lattice needs a positive spacing and lo <= hi"));
        }
        let counts: Vec<usize> = lo.iter().zip(hi).map(|(a, b)| ((b - a) / spacing + 1e-9).floor() as usize + 1).collect();
        let total: usize = counts.iter().product();
        if total > 1_000_000 {
            return Err(LabError::domain(format!("lattice would have {total} points")));
        }
        let mut points = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut v = Vec::with_capacity(dim);
            for (d, &c) in counts.iter().enumerate() {
                v.push(lo[d] + (idx % c) as f64 * spacing);
                idx /= c;
            }
            points.push(Point::vector(space, v)?);
        }
        let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let center = Point::vector(space, center)?;
        Ok(ProbeGrid::sorted_around(points, &center, spacing))
    }

    /// Vertices plus points every `spacing` along each edge of a tree.
    pub fn tree_lattice(space: &SpaceRef, spacing: f64) -> Result<Self> {
        let tree = space
            .as_tree()
            .ok_or_else(|| LabError::mismatch(format!("tree lattices need a tree space, not {}", space.name())))?;
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(LabError::domain("lattice spacing must be positive"));
        }
        let mut points: Vec<Point> = (0..tree.vertex_count()).map(|v| Point::vertex(space, v)).collect::<Result<_>>()?;
        for (e, edge) in tree.edges().iter().enumerate() {
            let mut s = spacing;
            while s < edge.length - 1e-12 {
                points.push(Point::on_edge(space, e, s)?);
                s += spacing;
            }
        }
        let hub = Point::vertex(space, 0)?;
        Ok(ProbeGrid::sorted_around(points, &hub, spacing))
    }

    /// Rings of radius `spacing, 2 spacing, ...` up to `radius` around the
    /// hyperboloid origin, with roughly `spacing` between ring neighbours.
    pub fn hyperbolic_lattice(space: &SpaceRef, radius: f64, spacing: f64) -> Result<Self> {
        if **space != Space::Hyperbolic2 {
            return Err(LabError::mismatch(format!("hyperbolic lattices need the hyperbolic plane, not {}", space.name())));
        }
        if !(spacing.is_finite() && spacing > 0.0 && radius >= 0.0) {
            return Err(LabError::domain("lattice needs a positive spacing and nonnegative radius"));
        }
        let mut points = vec![Point::origin(space)];
        let mut r = spacing;
        while r <= radius + 1e-12 {
            let count = ((std::f64::consts::TAU * r.sinh()) / spacing).ceil().max(3.0) as usize;
            for i in 0..count {
                let theta = std::f64::consts::TAU * i as f64 / count as f64;
                points.push(Point::from_valid(space, Coords::Hyperboloid(hyperbolic::from_polar(r, theta))));
            }
            r += spacing;
        }
        Ok(ProbeGrid { points, spacing: Some(spacing) })
    }

    fn sorted_around(mut points: Vec<Point>, center: &Point, spacing: f64) -> Self {
        points.sort_by(|a, b| a.dist(center).total_cmp(&b.dist(center)));
        ProbeGrid { points, spacing: Some(spacing) }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn space(&self) -> &SpaceRef {
        self.points[0].space()
    }

    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    /// Index of the probe closest to `x`, and its distance.
    pub fn nearest(&self, x: &Point) -> Result<(usize, f64)> {
        x.check_same_space(&self.points[0])?;
        Ok(self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.dist(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty grid"))
    }

    /// Largest distance from the first probe to any other.
    pub fn radius(&self) -> f64 {
        self.points.iter().map(|p| p.dist(&self.points[0])).fold(0.0, f64::max)
    }
}

fn same_space(f: &ConvexFunction, g: &ConvexFunction) -> Result<()> {
    f.dom_sample().check_same_space(&g.dom_sample())
}

/// `|f_lambda(x) - g_lambda(x)|`.
pub fn pseudometric_e(f: &ConvexFunction, g: &ConvexFunction, lambda: f64, x: &Point, tol: f64) -> Result<f64> {
    same_space(f, g)?;
    Ok((prox(f, x, lambda, tol)?.value - prox(g, x, lambda, tol)?.value).abs())
}

/// `d(J^f_lambda x, J^g_lambda x)`.
pub fn pseudometric_r(f: &ConvexFunction, g: &ConvexFunction, lambda: f64, x: &Point, tol: f64) -> Result<f64> {
    same_space(f, g)?;
    Ok(prox(f, x, lambda, tol)?.minimizer.dist(&prox(g, x, lambda, tol)?.minimizer))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoscoDistance {
    pub value: f64,
    pub e_terms: f64,
    pub r_terms: f64,
    /// Weight of the ignored tail, `2^-K + 2^-L`; each ignored bracket is below 2.
    pub residual_weight: f64,
    pub lambdas: usize,
    pub probes: usize,
    /// Largest certified prox gap among all evaluations.
    pub max_certified_gap: f64,
}

fn accumulate(
    lambdas: &LambdaGrid,
    probes: &ProbeGrid,
    mut pair: impl FnMut(usize, usize) -> Result<(f64, f64, f64)>,
) -> Result<MoscoDistance> {
    let (mut e_terms, mut r_terms, mut max_gap) = (0.0, 0.0, 0.0f64);
    for k in 0..lambdas.len() {
        for l in 0..probes.len() {
            let (e, r, gap) = pair(k, l)?;
            let w = 0.5f64.powi((k + l + 2) as i32);
            e_terms += w * bracket(e);
            r_terms += w * bracket(r);
            max_gap = max_gap.max(gap);
        }
    }
    Ok(MoscoDistance {
        value: e_terms + r_terms,
        e_terms,
        r_terms,
        residual_weight: 0.5f64.powi(lambdas.len() as i32) + 0.5f64.powi(probes.len() as i32),
        lambdas: lambdas.len(),
        probes: probes.len(),
        max_certified_gap: max_gap,
    })
}

fn bracket(t: f64) -> f64 {
    if t.is_finite() {
        t / (1.0 + t)
    } else {
        1.0
    }
}

/// `sum_{k,l} 2^-(k+l) [e/(1+e) + r/(1+r)]` over the finite grids.
pub fn rho(f: &ConvexFunction, g: &ConvexFunction, lambdas: &LambdaGrid, probes: &ProbeGrid, tol: f64) -> Result<MoscoDistance> {
    same_space(f, g)?;
    f.dom_sample().check_same_space(&probes.points()[0])?;
    accumulate(lambdas, probes, |k, l| {
        let (lambda, x) = (lambdas.values()[k], &probes.points()[l]);
        let a = prox(f, x, lambda, tol)?;
        let b = prox(g, x, lambda, tol)?;
        Ok(((a.value - b.value).abs(), a.minimizer.dist(&b.minimizer), a.certified_gap.max(b.certified_gap)))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzEstimate {
    pub lambda0: f64,
    pub anchor: Point,
    pub radius: f64,
    /// Largest sampled `d(J^n_{lambda0} x, x)` over the ball and window.
    pub c: f64,
    pub window: Window,
}

impl LipschitzEstimate {
    /// `(C + R) / lambda`, valid for `lambda <= lambda0`.
    pub fn bound(&self, lambda: f64) -> f64 {
        (self.c + self.radius) / lambda
    }
}

/// The displacement constant `C` behind the envelope Lipschitz bound
/// `(C + R)/lambda` on `B_R(x0)`. Needs envelope values at `x0` to settle at
/// the scales `lambda0` and `2 lambda0`; otherwise `NoBound`.
pub fn equi_lipschitz_bound(
    seq: &FunctionSequence,
    lambda0: f64,
    x0: &Point,
    radius: f64,
    window: Window,
    samples: &[Point],
) -> Result<LipschitzEstimate> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(LabError::domain("radius must be positive"));
    }
    for lambda in [lambda0, 2.0 * lambda0] {
        let values = anchor_envelopes(seq, x0, lambda, window)?;
        let tail = &values[window.len / 2..];
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi - lo <= 1.0) {
            return Err(LabError::NoBound(format!(
                "envelope values at the anchor for lambda = {lambda} range over [{lo}, {hi}]"
            )));
        }
    }
    let tol = default_tol(seq.space());
    let mut c = 0.0f64;
    for n in window.indices() {
        let f = seq.at(n)?;
        for x in samples.iter().chain(std::iter::once(x0)) {
            if x.distance(x0)? > radius * (1.0 + 1e-12) {
                return Err(LabError::domain(format!("sample {x} lies outside the ball")));
            }
            c = c.max(prox(&f, x, lambda0, tol)?.minimizer.dist(x));
        }
    }
    Ok(LipschitzEstimate { lambda0, anchor: x0.clone(), radius, c, window })
}

/// Seeded sample points in `B_R(x0)`.
pub fn ball_samples(x0: &Point, radius: f64, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sample::random_in_ball(x0, radius, 2.0 * radius, &mut rng)).collect()
}

/// Largest `|f_{n,lambda}(x) - f_{n,lambda}(y)| / d(x,y)` over pairs of
/// `points` and indices of the window; coincident pairs are skipped.
pub fn max_difference_quotient(seq: &FunctionSequence, lambda: f64, points: &[Point], window: Window) -> Result<f64> {
    let tol = default_tol(seq.space());
    let mut worst = 0.0f64;
    for n in window.indices() {
        let f = seq.at(n)?;
        let values: Vec<f64> = points.iter().map(|x| Ok(prox(&f, x, lambda, tol)?.value)).collect::<Result<_>>()?;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d = points[i].dist(&points[j]);
                if d > 0.0 {
                    worst = worst.max((values[i] - values[j]).abs() / d);
                }
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct PropernessWitness {
    pub lambda: f64,
    pub probe: Point,
    /// `Phi(lambda, x)`, the limit of the prox points.
    pub point: Point,
    /// `phi(lambda, x)`, finite.
    pub phi: f64,
    /// The table's own value at `point`, with its extension error bar.
    pub table_value: f64,
    pub table_error: f64,
}

/// Pointwise limit data `phi(lambda_k, x_l)` and `Phi(lambda_k, x_l)` of a
/// rho-Cauchy sequence, extended off the grid by nearest probes.
#[derive(Debug, Clone, Serialize)]
pub struct LimitTable {
    pub lambdas: Vec<f64>,
    pub probes: Vec<Point>,
    /// `phi[k][l]`
    pub phi: Vec<Vec<f64>>,
    /// `prox_points[k][l]`
    pub prox_points: Vec<Vec<Point>>,
    /// Lipschitz bound of `phi(lambda_k, .)` near the probes.
    pub lipschitz: Vec<f64>,
    /// Largest rho between sampled pairs of the window.
    pub cauchy_diameter: f64,
    pub window: Window,
    pub witness: Option<PropernessWitness>,
    #[serde(skip)]
    grid: Option<ProbeGrid>,
}

impl LimitTable {
    fn grid(&self) -> &ProbeGrid {
        self.grid.as_ref().expect("assembled by cauchy_limit")
    }

    /// `phi(lambda_k, x)` from the nearest probe, with error bar `L_k d(x, x_l)`.
    pub fn phi_at(&self, k: usize, x: &Point) -> Result<(f64, f64)> {
        let (l, d) = self.grid().nearest(x)?;
        Ok((self.phi[k][l], self.lipschitz[k] * d))
    }

    /// The limit function `sup_k phi(lambda_k, x)` and an error bar.
    pub fn evaluate(&self, x: &Point) -> Result<(f64, f64)> {
        let (l, d) = self.grid().nearest(x)?;
        let k = (0..self.lambdas.len())
            .max_by(|&a, &b| self.phi[a][l].total_cmp(&self.phi[b][l]))
            .expect("nonempty grid");
        Ok((self.phi[k][l], self.lipschitz[k] * d))
    }

    /// rho between `f` and the tabulated limit over the table's own grids.
    pub fn rho_to(&self, f: &ConvexFunction, tol: f64) -> Result<MoscoDistance> {
        let lambdas = LambdaGrid::new(self.lambdas.clone())?;
        let grid = self.grid();
        f.dom_sample().check_same_space(&grid.points()[0])?;
        accumulate(&lambdas, grid, |k, l| {
            let r = prox(f, &grid.points()[l], self.lambdas[k], tol)?;
            Ok(((r.value - self.phi[k][l]).abs(), r.minimizer.dist(&self.prox_points[k][l]), r.certified_gap))
        })
    }
}

#[derive(Debug, Clone)]
pub struct CauchyOptions {
    pub window: Window,
    /// Largest tolerated rho between window members.
    pub epsilon: f64,
}

impl Default for CauchyOptions {
    fn default() -> Self {
        CauchyOptions { window: Window { start: 1 << 20, len: 8 }, epsilon: 1e-3 }
    }
}

/// Tabulates the limit `f = sup_k phi(lambda_k, .)` of a rho-Cauchy sequence
/// from deep window members. Raises `NotCauchy` when window members are
/// still `epsilon` apart in rho.
pub fn cauchy_limit(
    seq: &FunctionSequence,
    lambdas: &LambdaGrid,
    probes: &ProbeGrid,
    opts: &CauchyOptions,
) -> Result<LimitTable> {
    let window = opts.window;
    let tol = default_tol(seq.space());
    let members: Vec<ConvexFunction> = window.indices().map(|n| seq.at(n)).collect::<Result<_>>()?;
    let mut diameter = 0.0f64;
    let mut pairs: Vec<(usize, usize)> = (1..members.len()).map(|i| (i - 1, i)).collect();
    pairs.push((0, members.len() - 1));
    for (i, j) in pairs {
        diameter = diameter.max(rho(&members[i], &members[j], lambdas, probes, tol)?.value);
    }
    if !(diameter < opts.epsilon) {
        return Err(LabError::NotCauchy(format!(
            "members of {:?} are still {diameter:.3e} apart in rho (epsilon {:.1e})",
            window, opts.epsilon
        )));
    }
    estimate_minorization(seq, &probes.points()[0], lambdas.values()[0], window)?;

    let last = members.last().expect("nonempty window");
    let results: Vec<Vec<ProxResult>> = lambdas
        .values()
        .iter()
        .map(|&lambda| probes.points().iter().map(|x| prox(last, x, lambda, tol)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let c = probes
        .points()
        .iter()
        .zip(&results[0])
        .map(|(x, r)| r.minimizer.dist(x))
        .fold(0.0, f64::max);
    let radius = probes.radius();
    let mut table = LimitTable {
        lambdas: lambdas.values().to_vec(),
        probes: probes.points().to_vec(),
        phi: results.iter().map(|row| row.iter().map(|r| r.value).collect()).collect(),
        prox_points: results.iter().map(|row| row.iter().map(|r| r.minimizer.clone()).collect()).collect(),
        lipschitz: lambdas.values().iter().map(|l| (c + radius.max(1e-300)) / l).collect(),
        cauchy_diameter: diameter,
        window,
        witness: None,
        grid: Some(probes.clone()),
    };
    let point = table.prox_points[0][0].clone();
    let (table_value, table_error) = table.evaluate(&point)?;
    table.witness = Some(PropernessWitness {
        lambda: table.lambdas[0],
        probe: table.probes[0].clone(),
        point,
        phi: table.phi[0][0],
        table_value,
        table_error,
    });
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ConvexSet;

    fn line() -> SpaceRef {
        Space::euclidean(1).unwrap()
    }

    fn at(s: &SpaceRef, x: f64) -> Point {
        Point::vector(s, vec![x]).unwrap()
    }

    fn moving_quadratics(s: &SpaceRef) -> FunctionSequence {
        let s2 = s.clone();
        FunctionSequence::new(s, move |n| ConvexFunction::squared_distance(at(&s2, 1.0 / n as f64), 1.0))
    }

    #[test]
    fn grids_validate() {
        assert!(LambdaGrid::new(vec![1.0, 1.0]).is_err());
        assert!(LambdaGrid::new(vec![]).is_err());
        assert!(LambdaGrid::new(vec![1.0, -0.5]).is_err());
        let g = LambdaGrid::default();
        assert_eq!(g.len(), 12);
        assert_eq!(g.values()[0], 1.0);
        assert_eq!(g.values()[11], 2f64.powi(-11));
        let s = Space::euclidean(2).unwrap();
        let p = ProbeGrid::lattice(&s, &[-1.0, -1.0], &[1.0, 1.0], 0.25).unwrap();
        assert_eq!(p.len(), 81);
        assert_eq!(p.points()[0], Point::origin(&s));
        assert!(ProbeGrid::explicit(vec![]).is_err());
    }

    #[test]
    fn e_and_r_examples() {
        let s = line();
        let f = ConvexFunction::indicator(ConvexSet::ball(at(&s, 0.0), 1.0).unwrap());
        let g = ConvexFunction::indicator(ConvexSet::ball(at(&s, 0.0), 2.0).unwrap());
        let x = at(&s, 3.0);
        assert!((pseudometric_e(&f, &g, 0.5, &x, 1e-8).unwrap() - 3.0).abs() < 1e-14);
        for lambda in [0.1, 1.0, 5.0] {
            assert!((pseudometric_r(&f, &g, lambda, &x, 1e-8).unwrap() - 1.0).abs() < 1e-14);
        }
        let shifted = ConvexFunction::shifted(f.clone(), 0.7).unwrap();
        assert!((pseudometric_e(&f, &shifted, 0.3, &x, 1e-8).unwrap() - 0.7).abs() < 1e-14);
        assert_eq!(pseudometric_r(&f, &shifted, 0.3, &x, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn rho_basics() {
        let s = line();
        let probes = ProbeGrid::lattice(&s, &[-2.0], &[2.0], 0.25).unwrap();
        let grid = LambdaGrid::default();
        let f = ConvexFunction::squared_distance(at(&s, 0.0), 1.0).unwrap();
        let same = rho(&f, &f, &grid, &probes, 1e-8).unwrap();
        assert_eq!(same.value, 0.0);
        let far = ConvexFunction::indicator(ConvexSet::ball(at(&s, 50.0), 0.0).unwrap());
        let d = rho(&f, &far, &grid, &probes, 1e-8).unwrap();
        assert!(d.value < 2.0 && d.e_terms < 1.0 && d.r_terms < 1.0);
        let back = rho(&far, &f, &grid, &probes, 1e-8).unwrap();
        assert_eq!(d.value, back.value);
        let seq = moving_quadratics(&s);
        let values: Vec<f64> =
            [10, 100, 1000].iter().map(|&n| rho(&seq.at(n).unwrap(), &f, &grid, &probes, 1e-8).unwrap().value).collect();
        assert!(values[0] > values[1] && values[1] > values[2]);
        assert!(values[2] < 1e-3);
    }

    #[test]
    fn lipschitz_example() {
        let s = line();
        let f = ConvexFunction::squared_distance(at(&s, 0.0), 1.0).unwrap();
        let seq = FunctionSequence::constant(f);
        let x0 = at(&s, 0.0);
        let samples = ball_samples(&x0, 1.0, 32, 9);
        let est = equi_lipschitz_bound(&seq, 0.5, &x0, 1.0, Window::new(1, 8).unwrap(), &samples).unwrap();
        // d(J x, x) = |x| lambda/(1+lambda) <= 1/3 on the unit ball.
        assert!(est.c <= 1.0 / 3.0 + 1e-12);
        let q = max_difference_quotient(&seq, 0.5, &samples, Window::new(1, 8).unwrap()).unwrap();
        assert!(q <= 2.0 / 1.5 + 1e-12);
        assert!(q <= est.bound(0.5));
    }

    #[test]
    fn escaping_sequence_has_no_lipschitz_bound() {
        let s = line();
        let s2 = s.clone();
        let seq = FunctionSequence::new(&s, move |n| {
            Ok(ConvexFunction::indicator(ConvexSet::ball(at(&s2, n as f64), 0.0)?))
        });
        let r = equi_lipschitz_bound(&seq, 0.5, &at(&s, 0.0), 1.0, Window::new(1, 8).unwrap(), &[]);
        assert!(matches!(r, Err(LabError::NoBound(_))));
    }

    #[test]
    fn cauchy_limit_of_moving_quadratics() {
        let s = line();
        let probes = ProbeGrid::lattice(&s, &[-2.0], &[2.0], 0.25).unwrap();
        let grid = LambdaGrid::default();
        let t = cauchy_limit(&moving_quadratics(&s), &grid, &probes, &CauchyOptions::default()).unwrap();
        let (v, err) = t.evaluate(&at(&s, 1.0)).unwrap();
        let lambda_min = grid.values()[11];
        assert!((v - 0.5 / (1.0 + lambda_min)).abs() < 1e-5 && err == 0.0);
        let w = t.witness.as_ref().unwrap();
        assert!(w.table_value <= w.phi + w.table_error + 1e-12 && w.phi.is_finite());
    }

    #[test]
    fn alternating_sequence_is_not_cauchy() {
        let s = line();
        let a = ConvexFunction::squared_distance(at(&s, 0.0), 1.0).unwrap();
        let b = ConvexFunction::squared_distance(at(&s, 1.0), 1.0).unwrap();
        let probes = ProbeGrid::lattice(&s, &[-2.0], &[2.0], 0.25).unwrap();
        let r = cauchy_limit(&FunctionSequence::alternating(a, b), &LambdaGrid::default(), &probes, &CauchyOptions::default());
        assert!(matches!(r, Err(LabError::NotCauchy(_))));
    }
}
