use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{LabError, Result};
use crate::space::{hyperbolic, Coords, Point, Space, SpaceRef};
use crate::tolerance;

/// A nonempty closed convex subset of one of the supported spaces.
#[derive(Debug, Clone)]
pub struct ConvexSet(Arc<SetKind>);

#[derive(Debug)]
pub enum SetKind {
    Ball { center: Point, radius: f64 },
    Segment { a: Point, b: Point },
    /// Union of the tree edges spanned by a connected vertex set.
    Subtree { space: SpaceRef, vertices: Vec<usize> },
    /// `{ y : <normal, y> <= offset }`, Euclidean only.
    Halfspace { space: SpaceRef, normal: Vec<f64>, offset: f64 },
    WholeSpace(SpaceRef),
}

impl ConvexSet {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if radius.is_nan() || radius < 0.0 {
            return Err(LabError::ImproperFunction(format!("ball radius {radius} leaves the set empty")));
        }
        if !radius.is_finite() {
            return Err(LabError::domain("ball radius must be finite"));
        }
        Ok(ConvexSet(Arc::new(SetKind::Ball { center, radius })))
    }

    pub fn segment(a: Point, b: Point) -> Result<Self> {
        a.check_same_space(&b)?;
        Ok(ConvexSet(Arc::new(SetKind::Segment { a, b })))
    }

    pub fn subtree(space: &SpaceRef, vertices: &[usize]) -> Result<Self> {
        let tree = space
            .as_tree()
            .ok_or_else(|| LabError::mismatch(format!("subtrees need a tree space, not {}", space.name())))?;
        if vertices.is_empty() {
            return Err(LabError::ImproperFunction("subtree with no vertices".into()));
        }
        if let Some(v) = vertices.iter().find(|&&v| v >= tree.vertex_count()) {
            return Err(LabError::domain(format!("tree has no vertex {v}")));
        }
        let mut vertices = vertices.to_vec();
        vertices.sort_unstable();
        vertices.dedup();
        if !tree.is_connected_subset(&vertices) {
            return Err(LabError::domain(format!("vertex set {vertices:?} is not connected")));
        }
        Ok(ConvexSet(Arc::new(SetKind::Subtree { space: space.clone(), vertices })))
    }

    pub fn halfspace(space: &SpaceRef, normal: Vec<f64>, offset: f64) -> Result<Self> {
        let Space::Euclidean { dim } = **space else {
            return Err(LabError::mismatch("halfspaces are only defined on Euclidean spaces"));
        };
        if normal.len() != dim {
            return Err(LabError::mismatch(format!("normal has {} entries, space has dimension {dim}", normal.len())));
        }
        if normal.iter().all(|&c| c == 0.0) {
            return Err(LabError::domain("halfspace normal must be nonzero"));
        }
        if !offset.is_finite() || normal.iter().any(|c| !c.is_finite()) {
            return Err(LabError::domain("halfspace data must be finite"));
        }
        Ok(ConvexSet(Arc::new(SetKind::Halfspace { space: space.clone(), normal, offset })))
    }

    pub fn whole(space: &SpaceRef) -> Self {
        ConvexSet(Arc::new(SetKind::WholeSpace(space.clone())))
    }

    pub fn kind(&self) -> &SetKind {
        &self.0
    }

    pub fn space(&self) -> &SpaceRef {
        match &*self.0 {
            SetKind::Ball { center, .. } => center.space(),
            SetKind::Segment { a, .. } => a.space(),
            SetKind::Subtree { space, .. } | SetKind::Halfspace { space, .. } | SetKind::WholeSpace(space) => space,
        }
    }

    /// A point of the set.
    pub fn sample(&self) -> Point {
        match &*self.0 {
            SetKind::Ball { center, .. } => center.clone(),
            SetKind::Segment { a, .. } => a.clone(),
            SetKind::Subtree { space, vertices } => Point::vertex(space, vertices[0]).expect("validated vertex"),
            SetKind::Halfspace { space, .. } => self.project_unchecked(&Point::origin(space)),
            SetKind::WholeSpace(space) => Point::origin(space),
        }
    }

    /// Membership up to [`tolerance::MEMBERSHIP`].
    pub fn contains(&self, x: &Point) -> Result<bool> {
        x.check_same_space(&self.sample())?;
        Ok(match &*self.0 {
            SetKind::Ball { center, radius } => center.dist(x) <= radius + tolerance::MEMBERSHIP * radius.max(1.0),
            SetKind::Segment { a, b } => {
                self.project_unchecked(x).dist(x) <= tolerance::MEMBERSHIP * a.dist(b).max(1.0)
            }
            SetKind::Halfspace { normal, offset, .. } => {
                let v = x.as_vector().expect("Euclidean point");
                dot(normal, v) <= offset + tolerance::MEMBERSHIP * offset.abs().max(1.0)
            }
            SetKind::WholeSpace(_) => true,
            SetKind::Subtree { .. } => self.project_unchecked(x).dist(x) <= tolerance::MEMBERSHIP,
        })
    }

    /// Metric projection onto the set.
    pub fn project(&self, x: &Point) -> Result<Point> {
        x.check_same_space(&self.sample())?;
        Ok(self.project_unchecked(x))
    }

    pub fn distance(&self, x: &Point) -> Result<f64> {
        Ok(self.project(x)?.dist(x))
    }

    pub(crate) fn project_unchecked(&self, x: &Point) -> Point {
        match &*self.0 {
            SetKind::Ball { center, radius } => {
                let d = center.dist(x);
                if d <= *radius {
                    x.clone()
                } else {
                    center.toward(x, radius / d)
                }
            }
            SetKind::Segment { a, b } => project_to_segment(x, a, b),
            SetKind::Subtree { space, vertices } => {
                let tree = space.as_tree().expect("validated tree");
                let c = x.as_tree_coord().expect("tree point");
                let e = tree.edges()[c.edge];
                if vertices.contains(&e.u) && vertices.contains(&e.v) {
                    return x.clone();
                }
                // The gate of a whole-edge subtree is one of its vertices.
                let nearest = vertices
                    .iter()
                    .map(|&v| (v, Point::vertex(space, v).expect("validated vertex")))
                    .min_by(|(_, p), (_, q)| x.dist(p).total_cmp(&x.dist(q)))
                    .expect("nonempty subtree");
                nearest.1
            }
            SetKind::Halfspace { space, normal, offset } => {
                let v = x.as_vector().expect("Euclidean point");
                let excess = dot(normal, v) - offset;
                if excess <= 0.0 {
                    return x.clone();
                }
                let scale = excess / dot(normal, normal);
                let projected = v.iter().zip(normal).map(|(vi, ni)| vi - scale * ni).collect();
                Point::from_valid(space, Coords::Vector(projected))
            }
            SetKind::WholeSpace(_) => x.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        match &*self.0 {
            SetKind::Ball { center, radius } => json!({"kind": "ball", "center": center.to_json(), "radius": radius}),
            SetKind::Segment { a, b } => json!({"kind": "segment", "a": a.to_json(), "b": b.to_json()}),
            SetKind::Subtree { vertices, .. } => json!({"kind": "subtree", "vertices": vertices}),
            SetKind::Halfspace { normal, offset, .. } => json!({"kind": "halfspace", "normal": normal, "offset": offset}),
            SetKind::WholeSpace(_) => json!({"kind": "whole"}),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_to_segment(x: &Point, a: &Point, b: &Point) -> Point {
    let len = a.dist(b);
    if len == 0.0 {
        return a.clone();
    }
    match (&**x.space(), x.coords(), a.coords(), b.coords()) {
        (Space::Euclidean { .. }, Coords::Vector(p), Coords::Vector(u), Coords::Vector(v)) => {
            let dir: Vec<f64> = v.iter().zip(u).map(|(vi, ui)| vi - ui).collect();
            let rel: Vec<f64> = p.iter().zip(u).map(|(pi, ui)| pi - ui).collect();
            let t = (dot(&rel, &dir) / (len * len)).clamp(0.0, 1.0);
            a.toward(b, t)
        }
        (Space::Hyperbolic2, Coords::Hyperboloid(p), Coords::Hyperboloid(u), Coords::Hyperboloid(v)) => {
            Point::from_valid(x.space(), Coords::Hyperboloid(hyperbolic::project_to_segment(p, u, v)))
        }
        (Space::Tree(_), ..) => {
            // In a tree the projection is the median of (a, b, x).
            let s = 0.5 * (a.dist(x) + len - b.dist(x));
            a.toward(b, (s / len).clamp(0.0, 1.0))
        }
        _ => {
            // Bisection on the sign of the slope, which is monotone in t.
            let slope = |t: f64| x.space().half_sq_slope(a.coords(), b.coords(), x.coords(), t);
            if slope(0.0) >= 0.0 {
                return a.clone();
            }
            if slope(1.0) <= 0.0 {
                return b.clone();
            }
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if slope(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            a.toward(b, 0.5 * (lo + hi))
        }
    }
}

/// Minimizer of a unimodal function on `[lo, hi]`, located to `tol`.
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    // Endpoints are candidates too: the minimum may sit on the boundary.
    let mid = 0.5 * (lo + hi);
    [mid, lo, hi]
        .into_iter()
        .min_by(|p, q| f(*p).total_cmp(&f(*q)))
        .unwrap_or(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricTree;

    fn plane() -> SpaceRef {
        Space::euclidean(2).unwrap()
    }

    #[test]
    fn ball_projection_is_radial() {
        let s = plane();
        let ball = ConvexSet::ball(Point::origin(&s), 1.0).unwrap();
        let x = Point::vector(&s, vec![2.0, 0.0]).unwrap();
        assert_eq!(ball.project(&x).unwrap().as_vector().unwrap(), &[1.0, 0.0]);
        let inside = Point::vector(&s, vec![0.5, 0.0]).unwrap();
        assert_eq!(ball.project(&inside).unwrap(), inside);
        assert!(ball.contains(&inside).unwrap());
        assert!(!ball.contains(&x).unwrap());
    }

    #[test]
    fn spider_leg_projection_lands_on_hub() {
        let s = Space::tree(MetricTree::spider(&[1.0, 1.0, 1.0]).unwrap());
        let leg_a = ConvexSet::subtree(&s, &[0, 1]).unwrap();
        let tip_b = Point::vertex(&s, 2).unwrap();
        assert_eq!(leg_a.project(&tip_b).unwrap(), Point::vertex(&s, 0).unwrap());
        let on_leg = Point::on_edge(&s, 0, 0.4).unwrap();
        assert_eq!(leg_a.project(&on_leg).unwrap(), on_leg);
        assert!(ConvexSet::subtree(&s, &[1, 2]).is_err());
    }

    #[test]
    fn tree_segment_projection_is_median() {
        let s = Space::tree(MetricTree::spider(&[1.0, 2.0, 3.0]).unwrap());
        let seg = ConvexSet::segment(Point::vertex(&s, 1).unwrap(), Point::vertex(&s, 2).unwrap()).unwrap();
        let p = seg.project(&Point::on_edge(&s, 2, 1.5).unwrap()).unwrap();
        assert_eq!(p, Point::vertex(&s, 0).unwrap());
    }

    #[test]
    fn halfspace_projection() {
        let s = plane();
        let h = ConvexSet::halfspace(&s, vec![0.0, 2.0], 2.0).unwrap();
        let p = h.project(&Point::vector(&s, vec![3.0, 5.0]).unwrap()).unwrap();
        assert!((p.as_vector().unwrap()[1] - 1.0).abs() < 1e-15);
        assert!(ConvexSet::halfspace(&Space::hyperbolic(), vec![1.0], 0.0).is_err());
        assert!(ConvexSet::halfspace(&s, vec![0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn empty_ball_is_improper() {
        assert!(matches!(
            ConvexSet::ball(Point::origin(&plane()), -1.0),
            Err(LabError::ImproperFunction(_))
        ));
    }

    #[test]
    fn product_segment_projection() {
        let e = Space::euclidean(1).unwrap();
        let s = Space::product(e.clone(), e.clone());
        let p = |x: f64, y: f64| {
            Point::pair(&s, Point::vector(&e, vec![x]).unwrap(), Point::vector(&e, vec![y]).unwrap()).unwrap()
        };
        let seg = ConvexSet::segment(p(0.0, 0.0), p(2.0, 0.0)).unwrap();
        let proj = seg.project(&p(0.5, 1.0)).unwrap();
        assert!(proj.dist(&p(0.5, 0.0)) < 1e-14);
        let on = p(1.25, 0.0);
        assert!(seg.project(&on).unwrap().dist(&on) < 1e-14 && seg.contains(&on).unwrap());
        assert!(!seg.contains(&p(1.0, 1e-6)).unwrap());
    }

    #[test]
    fn product_segment_with_hyperbolic_factor() {
        let e = Space::euclidean(1).unwrap();
        let h = Space::hyperbolic();
        let s = Space::product(e.clone(), h.clone());
        let p = |x: f64, r: f64, th: f64| {
            Point::pair(&s, Point::vector(&e, vec![x]).unwrap(), Point::polar(&h, r, th).unwrap()).unwrap()
        };
        let seg = ConvexSet::segment(p(-1.0, 1.0, 0.0), p(2.0, 1.5, 2.0)).unwrap();
        let x = p(0.3, 2.0, -1.0);
        let proj = seg.project(&x).unwrap();
        // Oracle: dense scan along the segment.
        let best = (0..=20_000)
            .map(|i| x.dist(&seg_point(&seg, i as f64 / 20_000.0)))
            .fold(f64::INFINITY, f64::min);
        assert!(proj.dist(&x) <= best + 1e-12);
        let mid = seg_point(&seg, 0.37);
        assert!(seg.contains(&mid).unwrap());
    }

    fn seg_point(seg: &ConvexSet, t: f64) -> Point {
        let SetKind::Segment { a, b } = seg.kind() else { unreachable!() };
        a.toward(b, t)
    }
}
