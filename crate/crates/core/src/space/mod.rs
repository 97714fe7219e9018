//! Hadamard spaces with exact distances and geodesics.
//!
//! The roster covers flat ([`Space::Euclidean`]), negatively curved
//! ([`Space::Hyperbolic2`]) and branching ([`Space::Tree`]) geometry, closed
//! under 2-products. Every point carries a shared handle to its space so that
//! mixing points from different spaces is caught at the call site.

pub mod hyperbolic;
pub mod sample;
pub mod tree;

use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{LabError, Result};
pub use tree::{MetricTree, TreeCoord, TreeEdge};

#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Euclidean { dim: usize },
    /// The hyperbolic plane, hyperboloid model.
    Hyperbolic2,
    Tree(MetricTree),
    /// 2-product: `d((a,b),(a',b'))^2 = d(a,a')^2 + d(b,b')^2`.
    Product(Arc<Space>, Arc<Space>),
}

pub type SpaceRef = Arc<Space>;

#[derive(Debug, Clone, PartialEq)]
pub enum Coords {
    Vector(Vec<f64>),
    Hyperboloid([f64; 3]),
    Tree(TreeCoord),
    Pair(Box<Coords>, Box<Coords>),
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<SpaceRef> {
        if dim == 0 {
            return Err(LabError::domain("Euclidean dimension must be at least 1"));
        }
        Ok(Arc::new(Space::Euclidean { dim }))
    }

    pub fn hyperbolic() -> SpaceRef {
        Arc::new(Space::Hyperbolic2)
    }

    pub fn tree(tree: MetricTree) -> SpaceRef {
        Arc::new(Space::Tree(tree))
    }

    pub fn product(left: SpaceRef, right: SpaceRef) -> SpaceRef {
        Arc::new(Space::Product(left, right))
    }

    pub fn has_hyperbolic_factor(&self) -> bool {
        match self {
            Space::Hyperbolic2 => true,
            Space::Product(l, r) => l.has_hyperbolic_factor() || r.has_hyperbolic_factor(),
            _ => false,
        }
    }

    pub fn as_tree(&self) -> Option<&MetricTree> {
        match self {
            Space::Tree(t) => Some(t),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Space::Euclidean { dim } => format!("R^{dim}"),
            Space::Hyperbolic2 => "H^2".into(),
            Space::Tree(t) => format!("tree({} vertices)", t.vertex_count()),
            Space::Product(l, r) => format!("{} x {}", l.name(), r.name()),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Space::Euclidean { dim } => json!({"kind": "euclidean", "dim": dim}),
            Space::Hyperbolic2 => json!({"kind": "hyperbolic2"}),
            Space::Tree(t) => {
                let mut v = t.to_json();
                v["kind"] = json!("tree");
                v
            }
            Space::Product(l, r) => json!({"kind": "product", "left": l.to_json(), "right": r.to_json()}),
        }
    }

    /// A fixed reference point: the origin, the hyperboloid apex, vertex 0.
    pub(crate) fn origin_coords(&self) -> Coords {
        match self {
            Space::Euclidean { dim } => Coords::Vector(vec![0.0; *dim]),
            Space::Hyperbolic2 => Coords::Hyperboloid([1.0, 0.0, 0.0]),
            Space::Tree(t) => Coords::Tree(t.vertex_coord(0)),
            Space::Product(l, r) => Coords::Pair(Box::new(l.origin_coords()), Box::new(r.origin_coords())),
        }
    }

    fn validate(&self, c: &Coords) -> Result<Coords> {
        match (self, c) {
            (Space::Euclidean { dim }, Coords::Vector(v)) => {
                if v.len() != *dim {
                    return Err(LabError::mismatch(format!("expected {dim} coordinates, found {}", v.len())));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(LabError::domain("coordinates must be finite"));
                }
                Ok(c.clone())
            }
            (Space::Hyperbolic2, Coords::Hyperboloid(x)) => Ok(Coords::Hyperboloid(hyperbolic::checked(*x)?)),
            (Space::Tree(t), Coords::Tree(tc)) => Ok(Coords::Tree(t.coord(tc.edge, tc.offset)?)),
            (Space::Product(l, r), Coords::Pair(a, b)) => {
                Ok(Coords::Pair(Box::new(l.validate(a)?), Box::new(r.validate(b)?)))
            }
            _ => Err(LabError::mismatch(format!("coordinates do not describe a point of {}", self.name()))),
        }
    }

    pub(crate) fn dist(&self, a: &Coords, b: &Coords) -> f64 {
        match (self, a, b) {
            (Space::Euclidean { .. }, Coords::Vector(x), Coords::Vector(y)) => {
                x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
            }
            (Space::Hyperbolic2, Coords::Hyperboloid(x), Coords::Hyperboloid(y)) => hyperbolic::distance(x, y),
            (Space::Tree(t), Coords::Tree(p), Coords::Tree(q)) => t.distance(p, q),
            (Space::Product(l, r), Coords::Pair(a1, a2), Coords::Pair(b1, b2)) => {
                l.dist(a1, b1).hypot(r.dist(a2, b2))
            }
            _ => unreachable!("coordinates validated against their space"),
        }
    }

    pub(crate) fn geodesic(&self, a: &Coords, b: &Coords, t: f64) -> Coords {
        if t == 0.0 {
            return a.clone();
        }
        if t == 1.0 {
            return b.clone();
        }
        match (self, a, b) {
            (Space::Euclidean { .. }, Coords::Vector(x), Coords::Vector(y)) => {
                Coords::Vector(x.iter().zip(y).map(|(p, q)| p + t * (q - p)).collect())
            }
            (Space::Hyperbolic2, Coords::Hyperboloid(x), Coords::Hyperboloid(y)) => {
                Coords::Hyperboloid(hyperbolic::geodesic(x, y, t))
            }
            (Space::Tree(tree), Coords::Tree(p), Coords::Tree(q)) => Coords::Tree(tree.geodesic(p, q, t)),
            (Space::Product(l, r), Coords::Pair(a1, a2), Coords::Pair(b1, b2)) => {
                Coords::Pair(Box::new(l.geodesic(a1, b1, t)), Box::new(r.geodesic(a2, b2, t)))
            }
            _ => unreachable!("coordinates validated against their space"),
        }
    }
}

impl Space {
    /// `d/dt` of `d(gamma(t), x)^2 / 2` along the geodesic from `a` to `b`;
    /// nondecreasing in `t`.
    pub(crate) fn half_sq_slope(&self, a: &Coords, b: &Coords, x: &Coords, t: f64) -> f64 {
        match (self, a, b, x) {
            (Space::Euclidean { .. }, Coords::Vector(a), Coords::Vector(b), Coords::Vector(x)) => {
                a.iter().zip(b).zip(x).map(|((ai, bi), xi)| (ai + t * (bi - ai) - xi) * (bi - ai)).sum()
            }
            (Space::Hyperbolic2, Coords::Hyperboloid(a), Coords::Hyperboloid(b), Coords::Hyperboloid(x)) => {
                let len = hyperbolic::distance(a, b);
                if len == 0.0 {
                    return 0.0;
                }
                let u = hyperbolic::unit_tangent(a, b);
                let s = t * len;
                let rho = hyperbolic::distance(&hyperbolic::geodesic(a, b, t), x);
                let velocity = [0, 1, 2].map(|i| s.sinh() * a[i] + s.cosh() * u[i]);
                let ratio = if rho < 1e-8 { 1.0 } else { rho / rho.sinh() };
                -hyperbolic::minkowski(x, &velocity) * ratio * len
            }
            (Space::Tree(tree), Coords::Tree(a), Coords::Tree(b), Coords::Tree(x)) => {
                let len = tree.distance(a, b);
                let (ax, bx) = (tree.distance(a, x), tree.distance(b, x));
                let median = 0.5 * (ax + len - bx);
                let height = 0.5 * (ax + bx - len);
                let off = t * len - median;
                if off == 0.0 {
                    0.0
                } else {
                    (off.abs() + height) * len * off.signum()
                }
            }
            (Space::Product(l, r), Coords::Pair(a1, a2), Coords::Pair(b1, b2), Coords::Pair(x1, x2)) => {
                l.half_sq_slope(a1, b1, x1, t) + r.half_sq_slope(a2, b2, x2, t)
            }
            _ => unreachable!("coordinates validated against their space"),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// A point of one of the supported spaces.
#[derive(Debug, Clone)]
pub struct Point {
    space: SpaceRef,
    coords: Coords,
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.coords == other.coords
    }
}

pub(crate) fn same_space(a: &SpaceRef, b: &SpaceRef) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Point {
    pub fn new(space: &SpaceRef, coords: Coords) -> Result<Point> {
        let coords = space.validate(&coords)?;
        Ok(Point { space: space.clone(), coords })
    }

    pub(crate) fn from_valid(space: &SpaceRef, coords: Coords) -> Point {
        Point { space: space.clone(), coords }
    }

    pub fn vector(space: &SpaceRef, v: Vec<f64>) -> Result<Point> {
        Point::new(space, Coords::Vector(v))
    }

    pub fn hyperboloid(space: &SpaceRef, x: [f64; 3]) -> Result<Point> {
        Point::new(space, Coords::Hyperboloid(x))
    }

    /// Point at hyperbolic distance `r` from the apex in direction `theta`.
    pub fn polar(space: &SpaceRef, r: f64, theta: f64) -> Result<Point> {
        Point::new(space, Coords::Hyperboloid(hyperbolic::from_polar(r, theta)))
    }

    pub fn on_edge(space: &SpaceRef, edge: usize, offset: f64) -> Result<Point> {
        Point::new(space, Coords::Tree(TreeCoord { edge, offset }))
    }

    pub fn vertex(space: &SpaceRef, vertex: usize) -> Result<Point> {
        let tree = space
            .as_tree()
            .ok_or_else(|| LabError::mismatch(format!("{} is not a tree", space.name())))?;
        if vertex >= tree.vertex_count() {
            return Err(LabError::domain(format!("tree has no vertex {vertex}")));
        }
        Ok(Point::from_valid(space, Coords::Tree(tree.vertex_coord(vertex))))
    }

    pub fn pair(space: &SpaceRef, left: Point, right: Point) -> Result<Point> {
        match &**space {
            Space::Product(l, r) if same_space(l, &left.space) && same_space(r, &right.space) => {
                Ok(Point::from_valid(space, Coords::Pair(Box::new(left.coords), Box::new(right.coords))))
            }
            _ => Err(LabError::mismatch("pair components do not match the product's factors")),
        }
    }

    pub fn origin(space: &SpaceRef) -> Point {
        Point::from_valid(space, space.origin_coords())
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn coords(&self) -> &Coords {
        &self.coords
    }

    /// Euclidean coordinates, when the point lives in a Euclidean space.
    pub fn as_vector(&self) -> Option<&[f64]> {
        match &self.coords {
            Coords::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_tree_coord(&self) -> Option<TreeCoord> {
        match &self.coords {
            Coords::Tree(c) => Some(*c),
            _ => None,
        }
    }

    /// Left and right factors of a product point.
    pub fn split(&self) -> Option<(Point, Point)> {
        match (&*self.space, &self.coords) {
            (Space::Product(l, r), Coords::Pair(a, b)) => {
                Some((Point::from_valid(l, (**a).clone()), Point::from_valid(r, (**b).clone())))
            }
            _ => None,
        }
    }

    pub fn check_same_space(&self, other: &Point) -> Result<()> {
        if same_space(&self.space, &other.space) {
            Ok(())
        } else {
            Err(LabError::mismatch(format!("{} vs {}", self.space.name(), other.space.name())))
        }
    }

    pub fn distance(&self, other: &Point) -> Result<f64> {
        distance(self, other)
    }

    /// Distance without the space check; callers guarantee a shared space.
    pub(crate) fn dist(&self, other: &Point) -> f64 {
        self.space.dist(&self.coords, &other.coords)
    }

    /// Geodesic point without argument checks.
    pub(crate) fn toward(&self, other: &Point, t: f64) -> Point {
        Point::from_valid(&self.space, self.space.geodesic(&self.coords, &other.coords, t))
    }

    pub fn to_json(&self) -> Value {
        coords_json(&self.space, &self.coords)
    }
}

fn coords_json(space: &Space, c: &Coords) -> Value {
    match (space, c) {
        (_, Coords::Vector(v)) => json!(v),
        (_, Coords::Hyperboloid(x)) => json!(x),
        (Space::Tree(t), Coords::Tree(tc)) => match t.as_vertex(tc) {
            Some(v) => json!({"vertex": t.labels()[v]}),
            None => json!({"edge": tc.edge, "offset": tc.offset}),
        },
        (Space::Product(l, r), Coords::Pair(a, b)) => json!({"left": coords_json(l, a), "right": coords_json(r, b)}),
        _ => Value::Null,
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

impl serde::Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

/// Metric distance between two points of the same space.
pub fn distance(x: &Point, y: &Point) -> Result<f64> {
    x.check_same_space(y)?;
    Ok(x.dist(y))
}

/// The point `gamma(t)` on the geodesic from `x` to `y`.
pub fn geodesic_point(x: &Point, y: &Point, t: f64) -> Result<Point> {
    x.check_same_space(y)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(LabError::domain(format!("geodesic parameter {t} outside [0, 1]")));
    }
    Ok(x.toward(y, t))
}

/// Constant-speed geodesic between two endpoints.
#[derive(Debug, Clone)]
pub struct Geodesic {
    a: Point,
    b: Point,
    length: f64,
}

impl Geodesic {
    pub fn new(a: &Point, b: &Point) -> Result<Geodesic> {
        let length = distance(a, b)?;
        Ok(Geodesic { a: a.clone(), b: b.clone(), length })
    }

    pub fn start(&self) -> &Point {
        &self.a
    }

    pub fn end(&self) -> &Point {
        &self.b
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn at(&self, t: f64) -> Result<Point> {
        geodesic_point(&self.a, &self.b, t)
    }

    /// `d(gamma(s), gamma(t)) - |s - t| d(a, b)`; zero for a true geodesic.
    pub fn speed_defect(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.at(s)?.dist(&self.at(t)?) - (s - t).abs() * self.length)
    }
}

/// Both forms of the four-point curvature inequality, as slacks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrupleResidual {
    /// `d(x,w)^2 + d(y,v)^2 + 2 d(x,y) d(v,w) - d(x,v)^2 - d(y,w)^2`
    pub strong: f64,
    /// Same with `d(x,y)^2 + d(v,w)^2` replacing the product term.
    pub weak: f64,
}

pub fn quadruple_residual(x: &Point, y: &Point, v: &Point, w: &Point) -> Result<QuadrupleResidual> {
    x.check_same_space(y)?;
    x.check_same_space(v)?;
    x.check_same_space(w)?;
    let (xy, vw) = (x.dist(y), v.dist(w));
    let base = x.dist(w).powi(2) + y.dist(v).powi(2) - x.dist(v).powi(2) - y.dist(w).powi(2);
    Ok(QuadrupleResidual { strong: base + 2.0 * xy * vw, weak: base + xy * xy + vw * vw })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_pythagoras() {
        let s = Space::euclidean(2).unwrap();
        let a = Point::vector(&s, vec![0.0, 0.0]).unwrap();
        let b = Point::vector(&s, vec![3.0, 4.0]).unwrap();
        assert_eq!(distance(&a, &b).unwrap(), 5.0);
    }

    #[test]
    fn hyperbolic_unit_distance() {
        let s = Space::hyperbolic();
        let a = Point::hyperboloid(&s, [1.0, 0.0, 0.0]).unwrap();
        let b = Point::hyperboloid(&s, [1f64.cosh(), 1f64.sinh(), 0.0]).unwrap();
        assert!((distance(&a, &b).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spider_tips() {
        let s = Space::tree(MetricTree::spider(&[1.0, 1.0, 1.0]).unwrap());
        let a = Point::vertex(&s, 1).unwrap();
        let b = Point::vertex(&s, 2).unwrap();
        assert_eq!(distance(&a, &b).unwrap(), 2.0);
        assert_eq!(geodesic_point(&a, &b, 0.5).unwrap(), Point::vertex(&s, 0).unwrap());
    }

    #[test]
    fn geodesic_endpoints_and_midpoint() {
        let s = Space::euclidean(2).unwrap();
        let a = Point::vector(&s, vec![0.0, 0.0]).unwrap();
        let b = Point::vector(&s, vec![2.0, 2.0]).unwrap();
        assert_eq!(geodesic_point(&a, &b, 0.0).unwrap(), a);
        assert_eq!(geodesic_point(&a, &b, 0.5).unwrap().as_vector().unwrap(), &[1.0, 1.0]);
        assert!(matches!(geodesic_point(&a, &b, 1.5), Err(LabError::DomainError(_))));
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = Point::origin(&Space::euclidean(2).unwrap());
        let b = Point::origin(&Space::euclidean(3).unwrap());
        let h = Point::origin(&Space::hyperbolic());
        assert!(matches!(distance(&a, &b), Err(LabError::SpaceMismatch(_))));
        assert!(matches!(distance(&a, &h), Err(LabError::SpaceMismatch(_))));
        assert!(Point::vector(&Space::euclidean(2).unwrap(), vec![1.0]).is_err());
    }

    #[test]
    fn structurally_equal_spaces_are_compatible() {
        let a = Point::origin(&Space::euclidean(2).unwrap());
        let b = Point::vector(&Space::euclidean(2).unwrap(), vec![1.0, 0.0]).unwrap();
        assert_eq!(distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn unit_square_quadruple() {
        let s = Space::euclidean(2).unwrap();
        let p = |x: f64, y: f64| Point::vector(&s, vec![x, y]).unwrap();
        let r = quadruple_residual(&p(0.0, 0.0), &p(1.0, 0.0), &p(0.0, 1.0), &p(1.0, 1.0)).unwrap();
        // d(x,w)^2 + d(y,v)^2 = 2 + 2, product term 2, subtracted sides 1 + 1.
        assert!((r.strong - 4.0).abs() < 1e-12);
        assert!(r.weak >= r.strong);
        let o = p(0.3, 0.4);
        let z = quadruple_residual(&o, &o, &o, &o).unwrap();
        assert_eq!(z.strong, 0.0);
    }

    #[test]
    fn product_metric_decomposes() {
        let e = Space::euclidean(1).unwrap();
        let h = Space::hyperbolic();
        let s = Space::product(e.clone(), h.clone());
        let a = Point::pair(&s, Point::vector(&e, vec![0.0]).unwrap(), Point::origin(&h)).unwrap();
        let b = Point::pair(&s, Point::vector(&e, vec![3.0]).unwrap(), Point::polar(&h, 4.0, 0.2).unwrap()).unwrap();
        assert!((distance(&a, &b).unwrap() - 5.0).abs() < 1e-12);
        let (l, r) = geodesic_point(&a, &b, 0.25).unwrap().split().unwrap();
        assert!((l.as_vector().unwrap()[0] - 0.75).abs() < 1e-15);
        assert!((distance(&Point::origin(&h), &r).unwrap() - 1.0).abs() < 1e-12);
    }
}
