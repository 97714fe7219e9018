//! Standard spaces, named sequences and seeded random catalog members shared
//! by the property suites, the CLI and the integration tests.

use rand::Rng;

use crate::catalog::{ConvexFunction, ConvexSet, FunctionKind, FunctionSequence, SetSequence, Window};
use crate::prox::default_tol;
use crate::convergence::PointSequence;
use crate::error::Result;
use crate::space::{sample::random_point, MetricTree, Point, Space, SpaceRef};

/// Spread of random points around the origin.
pub const SCALE: f64 = 2.0;

/// The plane, the hyperbolic plane, a small labelled tree and `R x H^2`.
pub fn standard_spaces() -> Vec<(&'static str, SpaceRef)> {
    let tree = MetricTree::new(6, vec![(0, 1, 1.0), (0, 2, 0.5), (0, 3, 2.0), (3, 4, 1.0), (3, 5, 0.75)])
        .expect("valid tree");
    vec![
        ("euclidean2", Space::euclidean(2).expect("dim 2")),
        ("hyperbolic", Space::hyperbolic()),
        ("tree", Space::tree(tree)),
        ("product", Space::product(Space::euclidean(1).expect("dim 1"), Space::hyperbolic())),
    ]
}

/// Three unit legs around a hub (vertex 0).
pub fn spider() -> SpaceRef {
    Space::tree(MetricTree::spider(&[1.0, 1.0, 1.0]).expect("valid spider"))
}

fn plane_point(s: &SpaceRef, x: f64, y: f64) -> Result<Point> {
    Point::vector(s, vec![x, y])
}

/// `C_n = B((1/n, 0), 1 + 1/n)` in the plane, Mosco convergent to `B(0, 1)`.
pub fn shrinking_balls() -> (SetSequence, ConvexSet) {
    let s = Space::euclidean(2).expect("dim 2");
    let s2 = s.clone();
    let seq = SetSequence::new(&s, move |n| {
        let h = 1.0 / n as f64;
        ConvexSet::ball(plane_point(&s2, h, 0.0)?, 1.0 + h)
    });
    (seq, ConvexSet::ball(Point::origin(&s), 1.0).expect("unit ball"))
}

/// The constant sequence `C_n = B(0, 1)`.
pub fn fixed_ball() -> (SetSequence, ConvexSet) {
    let s = Space::euclidean(2).expect("dim 2");
    let c = ConvexSet::ball(Point::origin(&s), 1.0).expect("unit ball");
    let c2 = c.clone();
    (SetSequence::new(&s, move |_| Ok(c2.clone())), c)
}

/// `C_n = {(n, 0)}`, which escapes every bounded region; paired with the
/// singleton at the origin as a would-be limit.
pub fn escaping_points() -> (SetSequence, ConvexSet) {
    let s = Space::euclidean(2).expect("dim 2");
    let s2 = s.clone();
    let seq = SetSequence::new(&s, move |n| ConvexSet::ball(plane_point(&s2, n as f64, 0.0)?, 0.0));
    (seq, ConvexSet::ball(Point::origin(&s), 0.0).expect("singleton"))
}

/// `C_n = B(((-1)^n, 0), 1/2)`; no Mosco limit, tested against `B(0, 1/2)`.
pub fn alternating_balls() -> (SetSequence, ConvexSet) {
    let s = Space::euclidean(2).expect("dim 2");
    let s2 = s.clone();
    let seq = SetSequence::new(&s, move |n| {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        ConvexSet::ball(plane_point(&s2, sign, 0.0)?, 0.5)
    });
    (seq, ConvexSet::ball(Point::origin(&s), 0.5).expect("ball"))
}

/// `f_n = d(., 1/n)^2` on the line, converging to `d(., 0)^2`.
pub fn moving_quadratics() -> (FunctionSequence, ConvexFunction) {
    let s = Space::euclidean(1).expect("dim 1");
    let s2 = s.clone();
    let seq = FunctionSequence::new(&s, move |n| {
        ConvexFunction::squared_distance(Point::vector(&s2, vec![1.0 / n as f64])?, 1.0)
    });
    let limit = ConvexFunction::squared_distance(Point::origin(&s), 1.0).expect("quadratic");
    (seq.with_limit(limit.clone()), limit)
}

/// `f_n = d(., 0)^2` for odd `n` and `d(., 1)^2` for even `n` on the line.
pub fn alternating_quadratics() -> FunctionSequence {
    let s = Space::euclidean(1).expect("dim 1");
    let a = ConvexFunction::squared_distance(Point::origin(&s), 1.0).expect("quadratic");
    let b = ConvexFunction::squared_distance(Point::vector(&s, vec![1.0]).expect("point"), 1.0).expect("quadratic");
    FunctionSequence::alternating(a, b)
}

/// `f_n = indicator of {n}` on the line; envelopes at any fixed point blow up.
pub fn escaping_indicators() -> FunctionSequence {
    let s = Space::euclidean(1).expect("dim 1");
    let s2 = s.clone();
    FunctionSequence::new(&s, move |n| {
        Ok(ConvexFunction::indicator(ConvexSet::ball(Point::vector(&s2, vec![n as f64])?, 0.0)?))
    })
}

/// Spider points alternating between the tips of legs 1 and 2.
pub fn spider_tips(window: Window) -> PointSequence {
    let s = spider();
    let s2 = s.clone();
    PointSequence::new(&s, window, move |n| Point::vertex(&s2, if n % 2 == 0 { 1 } else { 2 })).with_label("spider tips")
}

/// A random closed convex set of the space.
pub fn random_set<R: Rng + ?Sized>(space: &SpaceRef, rng: &mut R) -> ConvexSet {
    let p = random_point(space, SCALE, rng);
    match (rng.gen_range(0..4), &**space) {
        (0, _) => ConvexSet::ball(p, rng.gen_range(0.0..1.5)).expect("radius is nonnegative"),
        (1, _) => ConvexSet::segment(p, random_point(space, SCALE, rng)).expect("same space"),
        (2, Space::Euclidean { dim }) => {
            let normal: Vec<f64> = (0..*dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if normal.iter().all(|v| v.abs() < 1e-3) {
                return ConvexSet::ball(p, 0.5).expect("ball");
            }
            ConvexSet::halfspace(space, normal, rng.gen_range(-1.0..1.0)).expect("nonzero normal")
        }
        (2, Space::Tree(t)) => {
            let e = &t.edges()[rng.gen_range(0..t.edges().len())];
            ConvexSet::subtree(space, &[e.u, e.v]).expect("an edge is connected")
        }
        _ => ConvexSet::ball(p, rng.gen_range(0.0..1.0)).expect("radius is nonnegative"),
    }
}

/// A random catalog function with a closed-form prox.
pub fn random_closed_form<R: Rng + ?Sized>(space: &SpaceRef, rng: &mut R) -> ConvexFunction {
    let base = match rng.gen_range(0..4) {
        0 => ConvexFunction::squared_distance(random_point(space, SCALE, rng), rng.gen_range(0.1..3.0))
            .expect("positive weight"),
        1 => ConvexFunction::distance_to(random_point(space, SCALE, rng)),
        2 => ConvexFunction::indicator(random_set(space, rng)),
        _ => ConvexFunction::distance_to_set(random_set(space, rng)),
    };
    if rng.gen_bool(0.25) {
        ConvexFunction::shifted(base, rng.gen_range(-1.0..1.0)).expect("finite shift")
    } else {
        base
    }
}

/// A random `WeightedSum` of a quadratic and one further closed-form term.
pub fn random_weighted_sum<R: Rng + ?Sized>(space: &SpaceRef, rng: &mut R) -> ConvexFunction {
    let q = ConvexFunction::squared_distance(random_point(space, SCALE, rng), rng.gen_range(0.2..2.0))
        .expect("positive weight");
    let other = match rng.gen_range(0..3) {
        0 => ConvexFunction::squared_distance(random_point(space, SCALE, rng), 1.0).expect("unit weight"),
        1 => ConvexFunction::distance_to(random_point(space, SCALE, rng)),
        _ => ConvexFunction::indicator(
            ConvexSet::ball(random_point(space, SCALE, rng), rng.gen_range(0.5..1.5)).expect("ball"),
        ),
    };
    ConvexFunction::weighted_sum(vec![(1.0, q), (rng.gen_range(0.2..1.5), other)]).expect("finite somewhere")
}

/// Any catalog function: mostly closed forms, with sums and envelopes mixed in.
pub fn random_function<R: Rng + ?Sized>(space: &SpaceRef, rng: &mut R) -> ConvexFunction {
    match rng.gen_range(0..10) {
        0 => random_weighted_sum(space, rng),
        1 => ConvexFunction::envelope_of(random_closed_form(space, rng), rng.gen_range(0.1..2.0)).expect("mu > 0"),
        _ => random_closed_form(space, rng),
    }
}

/// Prox tolerance the batteries use for `f`: the space default, relaxed to
/// `1e-6` when a `WeightedSum` has to be solved by cyclic proximal steps.
pub fn suggested_tol(f: &ConvexFunction) -> f64 {
    fn has_sum(f: &ConvexFunction) -> bool {
        match f.kind() {
            FunctionKind::WeightedSum { .. } => true,
            FunctionKind::Shifted { f, .. } | FunctionKind::EnvelopeOf { f, .. } => has_sum(f),
            _ => false,
        }
    }
    let base = default_tol(f.space());
    if has_sum(f) {
        base.max(NUMERIC_TOL)
    } else {
        base
    }
}

pub const NUMERIC_TOL: f64 = 1e-6;

/// Whether `f` has a closed-form prox.
pub fn is_closed_form(f: &ConvexFunction) -> bool {
    match f.kind() {
        FunctionKind::WeightedSum { .. } | FunctionKind::EnvelopeOf { .. } => false,
        FunctionKind::Shifted { f, .. } => is_closed_form(f),
        _ => true,
    }
}
