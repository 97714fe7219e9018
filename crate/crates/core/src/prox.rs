//! Proximal mappings, Moreau envelopes and the identities relating them.

use serde::Serialize;

use crate::catalog::{golden_section, ConvexFunction, FunctionKind, FunctionSequence, Window};
use crate::error::{LabError, Result};
use crate::space::{Coords, MetricTree, Point, Space, TreeCoord};
use crate::tolerance;

/// Cycle budget for the cyclic proximal point solver.
pub const MAX_CYCLES: usize = 400_000;

#[derive(Debug, Clone)]
pub struct ProxResult {
    pub minimizer: Point,
    /// The envelope value `f(minimizer) + d(x, minimizer)^2 / (2 lambda)`.
    pub value: f64,
    pub iterations: usize,
    /// Upper bound on the suboptimality of `value`.
    pub certified_gap: f64,
}

pub fn default_tol(space: &Space) -> f64 {
    if space.has_hyperbolic_factor() {
        tolerance::PROX_HYPERBOLIC
    } else {
        tolerance::PROX_FLAT
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(LabError::domain(format!("lambda must be positive and finite, got {lambda}")))
    }
}

/// The minimizer of `f(y) + d(x, y)^2 / (2 lambda)` and the minimal value.
pub fn prox(f: &ConvexFunction, x: &Point, lambda: f64, tol: f64) -> Result<ProxResult> {
    check_lambda(lambda)?;
    if !(tol > 0.0) {
        return Err(LabError::domain(format!("tolerance must be positive, got {tol}")));
    }
    x.check_same_space(&f.dom_sample())?;
    prox_unchecked(f, x, lambda, tol)
}

/// `f_lambda(x)` at the default tolerance for the space.
pub fn envelope(f: &ConvexFunction, x: &Point, lambda: f64) -> Result<f64> {
    Ok(prox(f, x, lambda, default_tol(f.space()))?.value)
}

pub(crate) fn prox_unchecked(f: &ConvexFunction, x: &Point, lambda: f64, tol: f64) -> Result<ProxResult> {
    if let Some(y) = f.exact_prox_unchecked(x, lambda) {
        let value = f.eval_unchecked(&y)? + x.dist(&y).powi(2) / (2.0 * lambda);
        return Ok(ProxResult { minimizer: y, value, iterations: 0, certified_gap: 0.0 });
    }
    match f.kind() {
        FunctionKind::Shifted { f: inner, c } => {
            let mut r = prox_unchecked(inner, x, lambda, tol)?;
            r.value += c;
            Ok(r)
        }
        FunctionKind::EnvelopeOf { f: inner, mu } => envelope_prox(inner, *mu, x, lambda, tol),
        FunctionKind::WeightedSum { .. } => cyclic_prox(f, x, lambda, tol),
        _ => unreachable!("closed-form kinds return above"),
    }
}

/// Prox of `g_mu` at `x`. Jointly minimizing `g(z) + d(y, z)^2 / (2 mu) +
/// d(x, y)^2 / (2 lambda)` puts `z` at `J^g_{lambda+mu} x` and `y` on the
/// geodesic from `x` to `z` at fraction `lambda / (lambda + mu)`. The minimal
/// value `g_{lambda+mu}(x)` certifies the result.
fn envelope_prox(g: &ConvexFunction, mu: f64, x: &Point, lambda: f64, tol: f64) -> Result<ProxResult> {
    let far = prox_unchecked(g, x, lambda + mu, tol)?;
    let t = lambda / (lambda + mu);
    let y = x.toward(&far.minimizer, t);
    let inner = prox_unchecked(g, &y, mu, tol)?;
    let value = inner.value + x.dist(&y).powi(2) / (2.0 * lambda);
    let certified_gap = (value - far.value + far.certified_gap).max(0.0) + inner.certified_gap;
    Ok(ProxResult { minimizer: y, value, iterations: far.iterations + inner.iterations + 1, certified_gap })
}

struct Term {
    w: f64,
    f: ConvexFunction,
}

fn flatten(f: &ConvexFunction, w: f64, terms: &mut Vec<Term>, shift: &mut f64) {
    match f.kind() {
        FunctionKind::WeightedSum { terms: inner, .. } => {
            for (wi, fi) in inner {
                flatten(fi, w * wi, terms, shift);
            }
        }
        FunctionKind::Shifted { f: inner, c } => {
            *shift += w * c;
            flatten(inner, w, terms, shift);
        }
        _ => terms.push(Term { w, f: f.clone() }),
    }
}

/// Cyclic proximal point iteration for `sum w_i h_i + d(x, .)^2 / (2 lambda)`
/// with steps `sigma_j = lambda / j`.
///
/// Each cycle `z_0 -> z_1 -> ... -> z_k` applies the resolvent inequality to
/// every step. Summed, it gives a lower bound `LB - (2 m D + m^2) / (2 sigma)`
/// on the optimum, where `m = d(z_0, z_k)` and `D = d(z_k, y*)`. Strong
/// convexity bounds `D` by `sqrt(2 lambda gap)`, and solving the resulting
/// quadratic inequality in `sqrt(gap)` yields the certificate.
fn cyclic_prox(f: &ConvexFunction, x: &Point, lambda: f64, tol: f64) -> Result<ProxResult> {
    let mut terms = Vec::new();
    let mut shift = 0.0;
    flatten(f, 1.0, &mut terms, &mut shift);
    // Domain-restricting summands go last so every cycle ends inside one of them.
    terms.sort_by_key(|t| !t.f.is_finite_everywhere());

    let objective = |y: &Point| -> Result<f64> {
        let mut total = shift + x.dist(y).powi(2) / (2.0 * lambda);
        for t in &terms {
            total += t.w * t.f.eval_unchecked(y)?;
        }
        Ok(total)
    };

    if let Some(tree) = x.space().as_tree() {
        if let Some(r) = tree_sum_prox(tree, x, &objective)? {
            if r.certified_gap <= tol {
                return Ok(r);
            }
        }
    }

    let mut z = x.clone();
    let mut best: Option<ProxResult> = None;
    let mut iterations = 0;
    for j in 1..=MAX_CYCLES {
        let sigma = lambda / j as f64;
        let start = z.clone();
        z = start.toward(x, sigma / (lambda + sigma));
        let mut lower = shift + x.dist(&z).powi(2) / (2.0 * lambda) + start.dist(&z).powi(2) / (2.0 * sigma);
        let mut inner_gap = 0.0;
        for t in &terms {
            let step = t.w * sigma;
            let (next, h) = match t.f.exact_prox_unchecked(&z, step) {
                Some(y) => {
                    let h = t.f.eval_unchecked(&y)?;
                    (y, h)
                }
                None => {
                    let r = prox_unchecked(&t.f, &z, step, tol)?;
                    inner_gap += t.w * r.certified_gap;
                    iterations += r.iterations;
                    let h = r.value - z.dist(&r.minimizer).powi(2) / (2.0 * step);
                    (r.minimizer, h)
                }
            };
            lower += t.w * h + z.dist(&next).powi(2) / (2.0 * sigma);
            z = next;
        }
        iterations += 1;

        let moved = start.dist(&z);
        let checkpoint = moved < tol || j.is_power_of_two() || j % 256 == 0;
        if !checkpoint {
            continue;
        }
        let value = objective(&z)?;
        let a = value - lower + inner_gap;
        let b = moved / sigma;
        let c = moved * moved / (2.0 * sigma);
        let disc = (2.0 * lambda * b * b + 4.0 * (a + c)).max(0.0);
        let s = 0.5 * (b * (2.0 * lambda).sqrt() + disc.sqrt());
        let gap = if value.is_finite() { s * s } else { f64::INFINITY };
        let candidate = ProxResult { minimizer: z.clone(), value, iterations, certified_gap: gap };
        if moved < tol && gap <= tol {
            return Ok(candidate);
        }
        if best.as_ref().map_or(true, |b| gap < b.certified_gap || !b.value.is_finite()) {
            best = Some(candidate);
        }
    }
    let best = best.expect("at least one checkpoint ran");
    Err(LabError::Unconverged { best: Box::new(best) })
}

/// Direct minimization of a strongly convex objective on a metric tree.
///
/// Along every geodesic the objective is convex, so it decreases along the
/// path from any vertex to the minimizer; the minimizer therefore lies on an
/// edge incident to the best vertex. Each such edge is searched exactly.
///
/// Certificate: on each direction leaving `y`, with values `a, b, c` at
/// distances `0, t, 2t`, convexity gives `inf >= min(a, 2b - c)` once `b >= a`,
/// so the gap is at most the largest second difference `a - 2b + c`. This
/// holds at kinks, where slope-based bounds do not. Returns `None` when no
/// finite point was found.
fn tree_sum_prox(
    tree: &MetricTree,
    x: &Point,
    objective: &dyn Fn(&Point) -> Result<f64>,
) -> Result<Option<ProxResult>> {
    let space = x.space();
    let at = |edge: usize, offset: f64| {
        Point::from_valid(space, Coords::Tree(tree.canonical(TreeCoord { edge, offset })))
    };
    let evals = std::cell::Cell::new(0usize);
    let value_at = |edge: usize, offset: f64| -> Result<f64> {
        evals.set(evals.get() + 1);
        objective(&at(edge, offset))
    };

    let edges = tree.edges();
    let mut seeds: Vec<(usize, f64)> = Vec::new();
    let mut best_vertex: Option<(usize, f64)> = None;
    for v in 0..tree.vertex_count() {
        let c = tree.vertex_coord(v);
        let fv = value_at(c.edge, c.offset)?;
        if fv.is_finite() && best_vertex.map_or(true, |(_, b)| fv < b) {
            best_vertex = Some((v, fv));
        }
    }
    match best_vertex {
        Some((v, _)) => {
            for &e in tree.incident_edges(v) {
                seeds.push((e, if edges[e].u == v { 0.0 } else { edges[e].length }));
            }
        }
        None => {
            // The domain misses every vertex, so it sits inside one edge.
            'scan: for (e, edge) in edges.iter().enumerate() {
                for k in 1..64 {
                    let s = edge.length * k as f64 / 64.0;
                    if value_at(e, s)?.is_finite() {
                        seeds.push((e, s));
                        break 'scan;
                    }
                }
            }
        }
    }

    let mut best: Option<(f64, TreeCoord)> = None;
    for (e, seed) in seeds {
        let len = edges[e].length;
        let edge_end = |end: f64| -> Result<f64> {
            if value_at(e, end)?.is_finite() {
                return Ok(end);
            }
            let (mut inside, mut outside) = (seed, end);
            for _ in 0..64 {
                let mid = 0.5 * (inside + outside);
                if value_at(e, mid)?.is_finite() {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            Ok(inside)
        };
        let lo = edge_end(0.0)?;
        let hi = edge_end(len)?;
        let err = std::cell::RefCell::new(None);
        let s = golden_section(
            |s| {
                value_at(e, s).unwrap_or_else(|e| {
                    err.borrow_mut().get_or_insert(e);
                    f64::INFINITY
                })
            },
            lo,
            hi,
            1e-13 * len.max(1.0),
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        let v = value_at(e, s)?;
        if best.map_or(true, |(b, _)| v < b) {
            best = Some((v, tree.canonical(TreeCoord { edge: e, offset: s })));
        }
    }
    let Some((value, y)) = best else {
        return Ok(None);
    };

    // Directions leaving `y`, as (edge, distance from the edge's `u` end per unit step).
    let directions: Vec<(usize, f64, f64, f64)> = match tree.as_vertex(&y) {
        Some(v) => tree
            .incident_edges(v)
            .iter()
            .map(|&e| {
                let len = edges[e].length;
                if edges[e].u == v { (e, 0.0, 1.0, len) } else { (e, len, -1.0, len) }
            })
            .collect(),
        None => {
            let len = edges[y.edge].length;
            vec![(y.edge, y.offset, -1.0, y.offset), (y.edge, y.offset, 1.0, len - y.offset)]
        }
    };
    let mut certified_gap = 0.0f64;
    for (e, start, sign, room) in directions {
        let mut t = 1e-6f64.min(0.25 * room);
        let (b, c) = loop {
            let b = value_at(e, start + sign * t)?;
            let c = value_at(e, start + sign * 2.0 * t)?;
            if !b.is_finite() || c.is_finite() || t < 1e-12 {
                break (b, c);
            }
            t *= 0.5;
        };
        if !b.is_finite() {
            // The domain ends within rounding of `y` on this side.
            continue;
        }
        let bound = if b < value || !c.is_finite() { f64::INFINITY } else { (c - 2.0 * b + value).max(0.0) };
        certified_gap = certified_gap.max(bound);
    }
    let centre = at(y.edge, y.offset);
    Ok(Some(ProxResult { minimizer: centre, value, iterations: evals.get(), certified_gap }))
}

/// `|(f_lambda)_mu (x) - f_{lambda+mu}(x)|`, with the inner envelope nested explicitly.
pub fn semigroup_residual(f: &ConvexFunction, x: &Point, lambda: f64, mu: f64, tol: f64) -> Result<f64> {
    check_lambda(mu)?;
    let nested = ConvexFunction::envelope_of(f.clone(), lambda)?;
    let lhs = prox(&nested, x, mu, tol)?.value;
    let rhs = prox(f, x, lambda + mu, tol)?.value;
    Ok((lhs - rhs).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    /// Right side minus left side; `+inf` when vacuous.
    pub residual: f64,
    pub certified_gap: f64,
}

/// `f(y) + d(x,y)^2/(2l) - f(J x) - d(x,J x)^2/(2l) - d(J x,y)^2/(2l)`.
pub fn resolvent_inequality_residual(
    f: &ConvexFunction,
    x: &Point,
    y: &Point,
    lambda: f64,
    tol: f64,
) -> Result<InequalityCheck> {
    let fy = f.evaluate(y)?;
    let r = prox(f, x, lambda, tol)?;
    if !fy.is_finite() {
        return Ok(InequalityCheck { residual: f64::INFINITY, certified_gap: r.certified_gap });
    }
    let j = &r.minimizer;
    let two_l = 2.0 * lambda;
    let residual = fy + x.dist(y).powi(2) / two_l - r.value - j.dist(y).powi(2) / two_l;
    Ok(InequalityCheck { residual, certified_gap: r.certified_gap })
}

/// Checks `f_{l1}(x) <= f_{l2}(x) <= f(x)` for `l1 > l2`, up to solver slack.
pub fn envelope_monotone_in_lambda(f: &ConvexFunction, x: &Point, l1: f64, l2: f64, tol: f64) -> Result<bool> {
    if !(l1 > l2) {
        return Err(LabError::domain(format!("need l1 > l2, got {l1} and {l2}")));
    }
    let big = prox(f, x, l1, tol)?;
    let small = prox(f, x, l2, tol)?;
    let fx = f.evaluate(x)?;
    let slack = tol + big.certified_gap + small.certified_gap;
    Ok(big.value <= small.value + slack && small.value <= fx + slack)
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaProbe {
    pub lambda: f64,
    pub envelope: f64,
    /// `f(x) - f_lambda(x)`, infinite outside the domain.
    pub gap: f64,
}

/// Envelope values along a decreasing grid, for watching `f_lambda(x) -> f(x)`.
pub fn lambda_limit_probe(f: &ConvexFunction, x: &Point, lambdas: &[f64], tol: f64) -> Result<Vec<LambdaProbe>> {
    let fx = f.evaluate(x)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let envelope = prox(f, x, lambda, tol)?.value;
            Ok(LambdaProbe { lambda, envelope, gap: fx - envelope })
        })
        .collect()
}

/// Checks `d(J_{l2} x, x) <= d(J_{l1} x, x)` for `l1 > l2`.
pub fn prox_displacement_monotone(f: &ConvexFunction, x: &Point, l1: f64, l2: f64, tol: f64) -> Result<bool> {
    if !(l1 > l2) {
        return Err(LabError::domain(format!("need l1 > l2, got {l1} and {l2}")));
    }
    let big = prox(f, x, l1, tol)?;
    let small = prox(f, x, l2, tol)?;
    let slack = tol + (2.0 * l1 * big.certified_gap).sqrt() + (2.0 * l2 * small.certified_gap).sqrt();
    Ok(small.minimizer.dist(x) <= big.minimizer.dist(x) + slack)
}

#[derive(Debug, Clone, Serialize)]
pub struct MinorizationBound {
    pub anchor: Point,
    pub r: f64,
    pub lambda: f64,
    /// The sampled limit `f_0` of `f_{n,lambda}(anchor)`.
    pub envelope_at_anchor: f64,
    pub window: Window,
}

impl MinorizationBound {
    /// `-r (d(x, anchor)^2 + 1)`.
    pub fn lower_bound(&self, x: &Point) -> f64 {
        -self.r * (x.dist(&self.anchor).powi(2) + 1.0)
    }
}

/// Envelope values `f_{n,lambda}(x0)` over the window.
pub(crate) fn anchor_envelopes(seq: &FunctionSequence, x0: &Point, lambda: f64, window: Window) -> Result<Vec<f64>> {
    let tol = default_tol(seq.space());
    window.indices().map(|n| Ok(prox(&seq.at(n)?, x0, lambda, tol)?.value)).collect()
}

/// The explicit constant `r = max(1/(2 lambda), |f_0| + 1)` with `f_0` the
/// stabilized value of `f_{n,lambda}(x0)`. Values that still move by more than
/// one unit across the window tail are treated as divergent.
pub fn estimate_minorization(
    seq: &FunctionSequence,
    x0: &Point,
    lambda: f64,
    window: Window,
) -> Result<MinorizationBound> {
    check_lambda(lambda)?;
    let values = anchor_envelopes(seq, x0, lambda, window)?;
    let tail = &values[window.len / 2..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo <= 1.0) {
        return Err(LabError::NoUniformBound(format!(
            "envelope values at the anchor range over [{lo}, {hi}] across indices {:?}",
            window.tail()
        )));
    }
    let f0 = *values.last().expect("window is nonempty");
    Ok(MinorizationBound {
        anchor: x0.clone(),
        r: (0.5 / lambda).max(f0.abs() + 1.0),
        lambda,
        envelope_at_anchor: f0,
        window,
    })
}
