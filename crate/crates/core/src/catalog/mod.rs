//! Proper convex lsc functions and closed convex sets on the supported spaces.

mod sequence;
mod set;

use std::sync::Arc;

use serde_json::{json, Value};

pub use sequence::{FunctionSequence, SetSequence, Window};
pub(crate) use set::golden_section;
pub use set::{ConvexSet, SetKind};

use crate::error::{LabError, Result};
use crate::space::{Point, SpaceRef};
use crate::tolerance;

#[derive(Debug, Clone)]
pub struct ConvexFunction(Arc<FunctionKind>);

#[derive(Debug)]
pub enum FunctionKind {
    /// `(w/2) d(., p)^2`
    SquaredDistance { p: Point, w: f64 },
    DistanceTo { p: Point },
    Indicator(ConvexSet),
    DistanceToSet(ConvexSet),
    WeightedSum { space: SpaceRef, terms: Vec<(f64, ConvexFunction)> },
    Shifted { f: ConvexFunction, c: f64 },
    /// The Moreau envelope `f_mu`.
    EnvelopeOf { f: ConvexFunction, mu: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(LabError::domain(format!("{name} must be a positive finite number, got {v}")))
    }
}

impl ConvexFunction {
    pub fn squared_distance(p: Point, w: f64) -> Result<Self> {
        positive("weight", w)?;
        Ok(Self::wrap(FunctionKind::SquaredDistance { p, w }))
    }

    pub fn distance_to(p: Point) -> Self {
        Self::wrap(FunctionKind::DistanceTo { p })
    }

    pub fn indicator(c: ConvexSet) -> Self {
        Self::wrap(FunctionKind::Indicator(c))
    }

    pub fn distance_to_set(c: ConvexSet) -> Self {
        Self::wrap(FunctionKind::DistanceToSet(c))
    }

    /// Rejects empty lists, nonpositive weights, mixed spaces and sums whose
    /// summands have no common finite point among their domain samples.
    pub fn weighted_sum(terms: Vec<(f64, ConvexFunction)>) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(LabError::ImproperFunction("empty weighted sum".into()));
        };
        let space = first.space().clone();
        for (w, f) in &terms {
            positive("summand weight", *w)?;
            f.dom_sample().check_same_space(&first.dom_sample())?;
        }
        let sum = Self::wrap(FunctionKind::WeightedSum { space, terms });
        if sum.try_dom_sample().is_none() {
            return Err(LabError::ImproperFunction(
                "no sampled point is in the domain of every summand".into(),
            ));
        }
        Ok(sum)
    }

    pub fn shifted(f: ConvexFunction, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(LabError::domain("shift must be finite"));
        }
        Ok(Self::wrap(FunctionKind::Shifted { f, c }))
    }

    pub fn envelope_of(f: ConvexFunction, mu: f64) -> Result<Self> {
        positive("envelope parameter", mu)?;
        if f.envelope_depth() >= tolerance::MAX_ENVELOPE_DEPTH {
            return Err(LabError::domain(format!(
                "envelopes nest at most {} deep",
                tolerance::MAX_ENVELOPE_DEPTH
            )));
        }
        Ok(Self::wrap(FunctionKind::EnvelopeOf { f, mu }))
    }

    fn wrap(kind: FunctionKind) -> Self {
        ConvexFunction(Arc::new(kind))
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.0
    }

    pub fn space(&self) -> &SpaceRef {
        match &*self.0 {
            FunctionKind::SquaredDistance { p, .. } | FunctionKind::DistanceTo { p } => p.space(),
            FunctionKind::Indicator(c) | FunctionKind::DistanceToSet(c) => c.space(),
            FunctionKind::WeightedSum { space, .. } => space,
            FunctionKind::Shifted { f, .. } | FunctionKind::EnvelopeOf { f, .. } => f.space(),
        }
    }

    pub fn envelope_depth(&self) -> usize {
        match &*self.0 {
            FunctionKind::EnvelopeOf { f, .. } => 1 + f.envelope_depth(),
            FunctionKind::Shifted { f, .. } => f.envelope_depth(),
            FunctionKind::WeightedSum { terms, .. } => terms.iter().map(|(_, f)| f.envelope_depth()).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// True when the value is finite everywhere.
    pub fn is_finite_everywhere(&self) -> bool {
        match &*self.0 {
            FunctionKind::Indicator(c) => matches!(c.kind(), SetKind::WholeSpace(_)),
            FunctionKind::WeightedSum { terms, .. } => terms.iter().all(|(_, f)| f.is_finite_everywhere()),
            FunctionKind::Shifted { f, .. } => f.is_finite_everywhere(),
            _ => true,
        }
    }

    /// `f(x)`, with `f64::INFINITY` outside the domain.
    pub fn evaluate(&self, x: &Point) -> Result<f64> {
        x.check_same_space(&self.dom_sample())?;
        self.eval_unchecked(x)
    }

    pub(crate) fn eval_unchecked(&self, x: &Point) -> Result<f64> {
        Ok(match &*self.0 {
            FunctionKind::SquaredDistance { p, w } => 0.5 * w * p.dist(x).powi(2),
            FunctionKind::DistanceTo { p } => p.dist(x),
            FunctionKind::Indicator(c) => {
                if c.contains(x)? {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FunctionKind::DistanceToSet(c) => c.project_unchecked(x).dist(x),
            FunctionKind::WeightedSum { terms, .. } => {
                let mut total = 0.0;
                for (w, f) in terms {
                    total += w * f.eval_unchecked(x)?;
                }
                total
            }
            FunctionKind::Shifted { f, c } => f.eval_unchecked(x)? + c,
            FunctionKind::EnvelopeOf { f, mu } => {
                crate::prox::prox(f, x, *mu, crate::prox::default_tol(f.space()))?.value
            }
        })
    }

    /// The closed-form proximal point, or `None` when the numerical solver is needed.
    pub fn exact_prox(&self, x: &Point, lambda: f64) -> Result<Option<Point>> {
        positive("lambda", lambda)?;
        x.check_same_space(&self.dom_sample())?;
        Ok(self.exact_prox_unchecked(x, lambda))
    }

    pub(crate) fn exact_prox_unchecked(&self, x: &Point, lambda: f64) -> Option<Point> {
        match &*self.0 {
            FunctionKind::SquaredDistance { p, w } => Some(x.toward(p, w * lambda / (1.0 + w * lambda))),
            FunctionKind::DistanceTo { p } => Some(shrink_toward(x, p, lambda)),
            FunctionKind::Indicator(c) => Some(c.project_unchecked(x)),
            FunctionKind::DistanceToSet(c) => Some(shrink_toward(x, &c.project_unchecked(x), lambda)),
            FunctionKind::Shifted { f, .. } => f.exact_prox_unchecked(x, lambda),
            FunctionKind::WeightedSum { .. } | FunctionKind::EnvelopeOf { .. } => None,
        }
    }

    /// A point where the function is finite.
    pub fn dom_sample(&self) -> Point {
        self.try_dom_sample().expect("catalog functions are proper")
    }

    fn try_dom_sample(&self) -> Option<Point> {
        match &*self.0 {
            FunctionKind::SquaredDistance { p, .. } | FunctionKind::DistanceTo { p } => Some(p.clone()),
            FunctionKind::Indicator(c) | FunctionKind::DistanceToSet(c) => Some(c.sample()),
            FunctionKind::Shifted { f, .. } | FunctionKind::EnvelopeOf { f, .. } => f.try_dom_sample(),
            FunctionKind::WeightedSum { terms, .. } => {
                let mut candidates: Vec<Point> = terms.iter().filter_map(|(_, f)| f.try_dom_sample()).collect();
                // Projections of one candidate onto each indicator's set cover
                // sums like ball + ball where neither center lies in the other.
                let extra: Vec<Point> = candidates
                    .iter()
                    .flat_map(|x| terms.iter().filter_map(move |(_, f)| f.project_into_domain(x)))
                    .collect();
                candidates.extend(extra);
                candidates.into_iter().find(|x| {
                    terms
                        .iter()
                        .all(|(_, f)| f.eval_unchecked(x).map(f64::is_finite).unwrap_or(false))
                })
            }
        }
    }

    fn project_into_domain(&self, x: &Point) -> Option<Point> {
        match &*self.0 {
            FunctionKind::Indicator(c) => Some(c.project_unchecked(x)),
            FunctionKind::Shifted { f, .. } => f.project_into_domain(x),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match &*self.0 {
            FunctionKind::SquaredDistance { p, w } => json!({"kind": "squared_distance", "p": p.to_json(), "w": w}),
            FunctionKind::DistanceTo { p } => json!({"kind": "distance_to", "p": p.to_json()}),
            FunctionKind::Indicator(c) => json!({"kind": "indicator", "set": c.to_json()}),
            FunctionKind::DistanceToSet(c) => json!({"kind": "distance_to_set", "set": c.to_json()}),
            FunctionKind::WeightedSum { terms, .. } => json!({
                "kind": "weighted_sum",
                "terms": terms.iter().map(|(w, f)| json!({"w": w, "f": f.to_json()})).collect::<Vec<_>>(),
            }),
            FunctionKind::Shifted { f, c } => json!({"kind": "shifted", "f": f.to_json(), "c": c}),
            FunctionKind::EnvelopeOf { f, mu } => json!({"kind": "envelope_of", "f": f.to_json(), "mu": mu}),
        }
    }
}

/// Move from `x` toward `target` by at most `step`.
fn shrink_toward(x: &Point, target: &Point, step: f64) -> Point {
    let d = x.dist(target);
    if d <= step {
        target.clone()
    } else {
        x.toward(target, step / d)
    }
}

/// `(1-t) f(x) + t f(y) - f(gamma(t))`, or `+inf` when `f(x)` or `f(y)` is infinite.
pub fn convexity_residual(f: &ConvexFunction, x: &Point, y: &Point, t: f64) -> Result<f64> {
    let mid = crate::space::geodesic_point(x, y, t)?;
    let fx = f.evaluate(x)?;
    let fy = f.evaluate(y)?;
    if !fx.is_finite() || !fy.is_finite() {
        return Ok(f64::INFINITY);
    }
    if t == 0.0 || t == 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - t) * fx + t * fy - f.evaluate(&mid)?)
}
