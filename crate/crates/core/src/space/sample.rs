//! Seeded random points for property batteries.

use rand::Rng;

use super::{hyperbolic, Coords, Point, Space, SpaceRef, TreeCoord};

/// A random point spread over a region of size roughly `scale` around the origin.
pub fn random_point<R: Rng + ?Sized>(space: &SpaceRef, scale: f64, rng: &mut R) -> Point {
    Point::from_valid(space, random_coords(space, scale, rng))
}

fn random_coords<R: Rng + ?Sized>(space: &Space, scale: f64, rng: &mut R) -> Coords {
    match space {
        Space::Euclidean { dim } => Coords::Vector((0..*dim).map(|_| rng.gen_range(-scale..=scale)).collect()),
        Space::Hyperbolic2 => {
            let r = scale * rng.gen::<f64>().sqrt();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            Coords::Hyperboloid(hyperbolic::from_polar(r, theta))
        }
        Space::Tree(t) => {
            let edge = rng.gen_range(0..t.edges().len());
            let len = t.edges()[edge].length;
            // Land on vertices now and then so vertex handling gets exercised.
            let offset = match rng.gen_range(0..10) {
                0 => 0.0,
                1 => len,
                _ => rng.gen_range(0.0..=len),
            };
            Coords::Tree(t.canonical(TreeCoord { edge, offset }))
        }
        Space::Product(l, r) => Coords::Pair(Box::new(random_coords(l, scale, rng)), Box::new(random_coords(r, scale, rng))),
    }
}

/// A random point of the closed ball `B_radius(center)`.
pub fn random_in_ball<R: Rng + ?Sized>(center: &Point, radius: f64, scale: f64, rng: &mut R) -> Point {
    let z = random_point(center.space(), scale.max(radius), rng);
    let d = center.dist(&z);
    if d == 0.0 {
        return z;
    }
    let target = radius * rng.gen::<f64>();
    center.toward(&z, (target / d).min(1.0))
}
