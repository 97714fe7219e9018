//! Scenario files: a JSON description of a space, a function sequence with
//! symbolic index `n`, an optional declared limit, grids and checks.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::{ConvexFunction, ConvexSet, FunctionSequence, SetSequence, Window};
use crate::convergence::PointSequence;
use crate::error::{LabError, Result};
use crate::metric::{LambdaGrid, ProbeGrid};
use crate::space::{geodesic_point, MetricTree, Point, Space, SpaceRef};

/// A number, or an expression in `n` such as `"1 + 1/n"` or `"(-1)^n"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Value(f64),
    Expr(String),
}

impl Num {
    pub fn eval(&self, n: Option<usize>) -> Result<f64> {
        match self {
            Num::Value(v) => Ok(*v),
            Num::Expr(src) => {
                let mut ctx = meval::Context::new();
                if let Some(n) = n {
                    ctx.var("n", n as f64);
                }
                let v = meval::eval_str_with_context(src, ctx).map_err(|e| match n {
                    None if src.contains('n') => {
                        LabError::Parse(format!("`{src}`: {e} (n is only defined inside the sequence)"))
                    }
                    _ => LabError::Parse(format!("`{src}`: {e}")),
                })?;
                if v.is_nan() {
                    return Err(LabError::domain(format!("`{src}` is NaN at n = {n:?}")));
                }
                Ok(v)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Euclidean { dim: usize },
    Hyperbolic,
    Tree { vertices: Vec<Value>, edges: Vec<(Value, Value, f64)> },
    Spider { legs: Vec<f64> },
    Product { left: Box<SpaceSpec>, right: Box<SpaceSpec> },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<SpaceRef> {
        Ok(match self {
            SpaceSpec::Euclidean { dim } => Space::euclidean(*dim)?,
            SpaceSpec::Hyperbolic => Space::hyperbolic(),
            SpaceSpec::Tree { vertices, edges } => {
                Space::tree(MetricTree::from_json(&serde_json::json!({ "vertices": vertices, "edges": edges }))?)
            }
            SpaceSpec::Spider { legs } => Space::tree(MetricTree::spider(legs)?),
            SpaceSpec::Product { left, right } => Space::product(left.build()?, right.build()?),
        })
    }
}

/// A tree vertex, by label or by (possibly symbolic) index.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum VertexRef {
    Index(usize),
    Named(String),
}

impl VertexRef {
    fn resolve(&self, space: &SpaceRef, n: Option<usize>) -> Result<usize> {
        let tree = space
            .as_tree()
            .ok_or_else(|| LabError::Parse(format!("vertex reference in a {} space", space.name())))?;
        match self {
            VertexRef::Index(i) => Ok(*i),
            VertexRef::Named(s) => match tree.vertex_index(s) {
                Some(i) => Ok(i),
                None => {
                    let v = Num::Expr(s.clone()).eval(n)?.round();
                    if v < 0.0 || v >= tree.vertex_count() as f64 {
                        return Err(LabError::Parse(format!("`{s}` is not a vertex of the tree")));
                    }
                    Ok(v as usize)
                }
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    /// Euclidean coordinates, or hyperboloid coordinates in the hyperbolic plane.
    Coords(Vec<Num>),
    /// `"origin"`, or a tree vertex label.
    Named(String),
    Polar { polar: (Num, Num) },
    Vertex { vertex: VertexRef },
    Edge { edge: usize, offset: Num },
    Pair { pair: (Box<PointSpec>, Box<PointSpec>) },
    Geodesic { from: Box<PointSpec>, to: Box<PointSpec>, t: Num },
}

impl PointSpec {
    pub fn build(&self, space: &SpaceRef, n: Option<usize>) -> Result<Point> {
        match self {
            PointSpec::Coords(c) => {
                let v: Vec<f64> = c.iter().map(|x| x.eval(n)).collect::<Result<_>>()?;
                match **space {
                    Space::Hyperbolic2 => match v.as_slice() {
                        [a, b, c] => Point::hyperboloid(space, [*a, *b, *c]),
                        _ => Err(LabError::Parse("hyperboloid points need three coordinates".into())),
                    },
                    _ => Point::vector(space, v),
                }
            }
            PointSpec::Named(s) if s == "origin" => Ok(Point::origin(space)),
            PointSpec::Named(s) => Point::vertex(space, VertexRef::Named(s.clone()).resolve(space, n)?),
            PointSpec::Polar { polar: (r, theta) } => Point::polar(space, r.eval(n)?, theta.eval(n)?),
            PointSpec::Vertex { vertex } => Point::vertex(space, vertex.resolve(space, n)?),
            PointSpec::Edge { edge, offset } => Point::on_edge(space, *edge, offset.eval(n)?),
            PointSpec::Pair { pair: (l, r) } => {
                let Space::Product(ls, rs) = &**space else {
                    return Err(LabError::Parse(format!("pair point in a {} space", space.name())));
                };
                Point::pair(space, l.build(ls, n)?, r.build(rs, n)?)
            }
            PointSpec::Geodesic { from, to, t } => geodesic_point(&from.build(space, n)?, &to.build(space, n)?, t.eval(n)?),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Ball { center: PointSpec, radius: Num },
    Segment { a: PointSpec, b: PointSpec },
    Subtree { vertices: Vec<VertexRef> },
    Halfspace { normal: Vec<Num>, offset: Num },
    Whole,
}

impl SetSpec {
    pub fn build(&self, space: &SpaceRef, n: Option<usize>) -> Result<ConvexSet> {
        match self {
            SetSpec::Ball { center, radius } => ConvexSet::ball(center.build(space, n)?, radius.eval(n)?),
            SetSpec::Segment { a, b } => ConvexSet::segment(a.build(space, n)?, b.build(space, n)?),
            SetSpec::Subtree { vertices } => {
                let v: Vec<usize> = vertices.iter().map(|v| v.resolve(space, n)).collect::<Result<_>>()?;
                ConvexSet::subtree(space, &v)
            }
            SetSpec::Halfspace { normal, offset } => {
                let normal = normal.iter().map(|x| x.eval(n)).collect::<Result<_>>()?;
                ConvexSet::halfspace(space, normal, offset.eval(n)?)
            }
            SetSpec::Whole => Ok(ConvexSet::whole(space)),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub weight: Num,
    pub f: FunctionSpec,
}

fn one() -> Num {
    Num::Value(1.0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    SquaredDistance {
        p: PointSpec,
        #[serde(default = "one")]
        w: Num,
    },
    DistanceTo {
        p: PointSpec,
    },
    Indicator {
        set: SetSpec,
    },
    DistanceToSet {
        set: SetSpec,
    },
    WeightedSum {
        terms: Vec<TermSpec>,
    },
    Shifted {
        f: Box<FunctionSpec>,
        c: Num,
    },
    Envelope {
        f: Box<FunctionSpec>,
        mu: Num,
    },
}

impl FunctionSpec {
    pub fn build(&self, space: &SpaceRef, n: Option<usize>) -> Result<ConvexFunction> {
        Ok(match self {
            FunctionSpec::SquaredDistance { p, w } => ConvexFunction::squared_distance(p.build(space, n)?, w.eval(n)?)?,
            FunctionSpec::DistanceTo { p } => ConvexFunction::distance_to(p.build(space, n)?),
            FunctionSpec::Indicator { set } => ConvexFunction::indicator(set.build(space, n)?),
            FunctionSpec::DistanceToSet { set } => ConvexFunction::distance_to_set(set.build(space, n)?),
            FunctionSpec::WeightedSum { terms } => ConvexFunction::weighted_sum(
                terms.iter().map(|t| Ok((t.weight.eval(n)?, t.f.build(space, n)?))).collect::<Result<_>>()?,
            )?,
            FunctionSpec::Shifted { f, c } => ConvexFunction::shifted(f.build(space, n)?, c.eval(n)?)?,
            FunctionSpec::Envelope { f, mu } => ConvexFunction::envelope_of(f.build(space, n)?, mu.eval(n)?)?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSpec {
    Lattice { lo: Vec<f64>, hi: Vec<f64>, spacing: f64 },
    TreeLattice { spacing: f64 },
    HyperbolicLattice { radius: f64, spacing: f64 },
    Points { points: Vec<PointSpec> },
}

impl ProbeSpec {
    pub fn build(&self, space: &SpaceRef) -> Result<ProbeGrid> {
        match self {
            ProbeSpec::Lattice { lo, hi, spacing } => ProbeGrid::lattice(space, lo, hi, *spacing),
            ProbeSpec::TreeLattice { spacing } => ProbeGrid::tree_lattice(space, *spacing),
            ProbeSpec::HyperbolicLattice { radius, spacing } => ProbeGrid::hyperbolic_lattice(space, *radius, *spacing),
            ProbeSpec::Points { points } => {
                ProbeGrid::explicit(points.iter().map(|p| p.build(space, None)).collect::<Result<_>>()?)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Dyadic { dyadic: usize },
    Values(Vec<f64>),
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::Dyadic { dyadic: 12 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakSpec {
    pub label: String,
    pub point: PointSpec,
    #[serde(default)]
    pub window: Option<WindowSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Minorization,
    EquiLipschitz,
    EnvelopeConvergence,
    GammaLimit,
    WeakLimit,
    Mosco,
    FrolikWijsman,
    Rho,
    CauchyLimit,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Minorization => "minorization",
            CheckKind::EquiLipschitz => "equi_lipschitz",
            CheckKind::EnvelopeConvergence => "envelope_convergence",
            CheckKind::GammaLimit => "gamma_limit",
            CheckKind::WeakLimit => "weak_limit",
            CheckKind::Mosco => "mosco",
            CheckKind::FrolikWijsman => "frolik_wijsman",
            CheckKind::Rho => "rho",
            CheckKind::CauchyLimit => "cauchy_limit",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default)]
    pub geom: Option<f64>,
    #[serde(default)]
    pub prox: Option<f64>,
}

/// The document as written on disk.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub space: SpaceSpec,
    pub sequence: FunctionSpec,
    #[serde(default)]
    pub limit: Option<FunctionSpec>,
    #[serde(default)]
    pub lambdas: LambdaSpec,
    pub probes: ProbeSpec,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub cauchy_window: Option<WindowSpec>,
    #[serde(default)]
    pub weak_sequences: Vec<WeakSpec>,
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub expect: BTreeMap<String, String>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// A validated scenario with every component built.
#[derive(Clone)]
pub struct Scenario {
    pub id: String,
    pub description: String,
    pub space: SpaceRef,
    pub sequence: FunctionSequence,
    /// The sequence as indicators of sets, when it is one.
    pub sets: Option<SetSequence>,
    pub limit: Option<ConvexFunction>,
    pub limit_set: Option<ConvexSet>,
    pub lambdas: LambdaGrid,
    pub probes: ProbeGrid,
    pub window: Window,
    pub cauchy_window: Option<Window>,
    pub weak_sequences: Vec<PointSequence>,
    /// Requested checks in dependency order.
    pub checks: Vec<CheckKind>,
    pub expect: BTreeMap<String, String>,
    pub tolerances: Tolerances,
}

fn parse_error(origin: &str, e: serde_json::Error) -> LabError {
    let full = e.to_string();
    let msg = full.rsplit_once(" at line ").map_or(full.as_str(), |(m, _)| m);
    LabError::Parse(format!("{origin}:{}:{}: {msg}", e.line(), e.column()))
}

fn window_of(spec: WindowSpec) -> Result<Window> {
    Window::new(spec.start, spec.len)
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Parse(format!("{}: cannot read: {e}", path.display())))?;
        Scenario::from_str_named(&text, &path.display().to_string())
    }

    pub fn from_str_named(text: &str, origin: &str) -> Result<Scenario> {
        let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| parse_error(origin, e))?;
        Scenario::from_doc(doc).map_err(|e| match e {
            LabError::Parse(m) => LabError::Parse(format!("{origin}: {m}")),
            other => LabError::Parse(format!("{origin}: {other}")),
        })
    }

    pub fn from_doc(doc: ScenarioDoc) -> Result<Scenario> {
        let space = doc.space.build()?;
        let window = window_of(doc.window.unwrap_or(WindowSpec { start: 1, len: 256 }))?;

        let spec = doc.sequence.clone();
        let s2 = space.clone();
        let mut sequence = FunctionSequence::new(&space, move |n| spec.build(&s2, Some(n)));
        sequence.at(window.start).map_err(|e| context("sequence", e))?;
        let sets = match &doc.sequence {
            FunctionSpec::Indicator { set } => {
                let (set, s2) = (set.clone(), space.clone());
                Some(SetSequence::new(&space, move |n| set.build(&s2, Some(n))))
            }
            _ => None,
        };
        let limit = doc.limit.as_ref().map(|f| f.build(&space, None)).transpose().map_err(|e| context("limit", e))?;
        if let Some(f) = &limit {
            sequence = sequence.with_limit(f.clone());
        }
        let limit_set = match &doc.limit {
            Some(FunctionSpec::Indicator { set }) => Some(set.build(&space, None)?),
            _ => None,
        };

        let lambdas = match &doc.lambdas {
            LambdaSpec::Dyadic { dyadic } => LambdaGrid::dyadic(*dyadic),
            LambdaSpec::Values(v) => LambdaGrid::new(v.clone()),
        }
        .map_err(|e| context("lambdas", e))?;
        let probes = doc.probes.build(&space).map_err(|e| context("probes", e))?;

        let mut weak_sequences = Vec::new();
        for w in &doc.weak_sequences {
            let win = w.window.map(window_of).transpose()?.unwrap_or(window);
            let (p, s2) = (w.point.clone(), space.clone());
            let seq = PointSequence::new(&space, win, move |n| p.build(&s2, Some(n))).with_label(w.label.clone());
            seq.at(win.start).map_err(|e| context(&format!("weak sequence {}", w.label), e))?;
            weak_sequences.push(seq);
        }

        let mut checks = doc.checks.clone();
        checks.sort();
        checks.dedup();
        if checks.is_empty() {
            return Err(LabError::Parse("no checks requested".into()));
        }
        if checks.contains(&CheckKind::FrolikWijsman) && (sets.is_none() || limit_set.is_none()) {
            return Err(LabError::Parse("frolik_wijsman needs indicator sequence and limit".into()));
        }
        if checks.iter().any(|c| matches!(c, CheckKind::Mosco | CheckKind::Rho)) && limit.is_none() {
            return Err(LabError::Parse("mosco and rho checks need a declared limit".into()));
        }
        if checks.contains(&CheckKind::WeakLimit) && weak_sequences.is_empty() {
            return Err(LabError::Parse("weak_limit needs at least one weak sequence".into()));
        }
        let known = check_names(&checks, &weak_sequences);
        for key in doc.expect.keys() {
            if !known.contains(key) {
                return Err(LabError::Parse(format!("expectation for unknown check `{key}`")));
            }
        }
        for t in [doc.tolerances.geom, doc.tolerances.prox].into_iter().flatten() {
            if !(t.is_finite() && t > 0.0) {
                return Err(LabError::Parse(format!("tolerance {t} must be positive")));
            }
        }

        Ok(Scenario {
            id: doc.id,
            description: doc.description,
            space,
            sequence,
            sets,
            limit,
            limit_set,
            lambdas,
            probes,
            window,
            cauchy_window: doc.cauchy_window.map(window_of).transpose()?,
            weak_sequences,
            checks,
            expect: doc.expect,
            tolerances: doc.tolerances,
        })
    }
}

/// Names under which check outcomes are reported.
pub fn check_names(checks: &[CheckKind], weak: &[PointSequence]) -> Vec<String> {
    let mut names = Vec::new();
    for c in checks {
        match c {
            CheckKind::WeakLimit => names.extend(weak.iter().map(|w| format!("weak_limit:{}", w.label()))),
            c => names.push(c.name().to_string()),
        }
    }
    names
}

fn context(what: &str, e: LabError) -> LabError {
    match e {
        LabError::Parse(m) => LabError::Parse(format!("{what}: {m}")),
        other => LabError::Parse(format!("{what}: {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S1: &str = r#"{
        "id": "S1",
        "space": {"kind": "euclidean", "dim": 2},
        "sequence": {"kind": "indicator", "set": {"kind": "ball", "center": ["1/n", 0], "radius": "1 + 1/n"}},
        "limit": {"kind": "indicator", "set": {"kind": "ball", "center": "origin", "radius": 1}},
        "probes": {"kind": "lattice", "lo": [-2, -2], "hi": [2, 2], "spacing": 0.5},
        "checks": ["mosco", "envelope_convergence"],
        "expect": {"mosco": "consistent"}
    }"#;

    #[test]
    fn parses_symbolic_sequence() {
        let s = Scenario::from_str_named(S1, "s1.json").unwrap();
        assert_eq!(s.checks, vec![CheckKind::EnvelopeConvergence, CheckKind::Mosco]);
        let c = s.sets.as_ref().unwrap().at(4).unwrap();
        let x = Point::vector(&s.space, vec![2.5, 0.0]).unwrap();
        assert!((c.distance(&x).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(s.window, Window { start: 1, len: 256 });
        assert_eq!(s.probes.len(), 81);
    }

    #[test]
    fn expressions() {
        assert_eq!(Num::Expr("(-1)^n".into()).eval(Some(3)).unwrap(), -1.0);
        assert_eq!(Num::Expr("n % 2".into()).eval(Some(7)).unwrap(), 1.0);
        assert!(matches!(Num::Expr("1/n".into()).eval(None), Err(LabError::Parse(_))));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let broken = S1.replace("\"radius\": 1}", "\"radius\": 1,}");
        let Err(LabError::Parse(msg)) = Scenario::from_str_named(&broken, "s1.json") else { panic!() };
        assert!(msg.starts_with("s1.json:5:"), "{msg}");
        let unknown = S1.replace("\"kind\": \"ball\", \"center\": \"origin\"", "\"kind\": \"bal\", \"center\": \"origin\"");
        let Err(LabError::Parse(msg)) = Scenario::from_str_named(&unknown, "s1.json") else { panic!() };
        assert!(msg.contains("s1.json:5:") && msg.contains("bal"), "{msg}");
    }

    #[test]
    fn semantic_errors() {
        let n_in_limit = S1.replace("\"radius\": 1}", "\"radius\": \"1/n\"}");
        assert!(matches!(Scenario::from_str_named(&n_in_limit, "x"), Err(LabError::Parse(m)) if m.contains("limit")));
        let bad_expect = S1.replace("\"mosco\": \"consistent\"", "\"gamma_limit\": \"assembled\"");
        assert!(Scenario::from_str_named(&bad_expect, "x").is_err());
        let negative = S1.replace("\"1 + 1/n\"", "\"-1\"");
        assert!(Scenario::from_str_named(&negative, "x").is_err());
    }

    #[test]
    fn tree_points() {
        let doc = r#"{
            "id": "spider",
            "space": {"kind": "spider", "legs": [1, 1, 1]},
            "sequence": {"kind": "squared_distance", "p": {"vertex": "1 + n % 2"}},
            "probes": {"kind": "tree_lattice", "spacing": 0.5},
            "weak_sequences": [{"label": "tips", "point": {"vertex": "1 + n % 2"}}],
            "checks": ["weak_limit"],
            "expect": {"weak_limit:tips": "no"}
        }"#;
        let s = Scenario::from_str_named(doc, "spider.json").unwrap();
        let w = &s.weak_sequences[0];
        assert_eq!(w.at(1).unwrap(), Point::vertex(&s.space, 2).unwrap());
        assert_eq!(w.at(2).unwrap(), Point::vertex(&s.space, 1).unwrap());
        assert_eq!(s.probes.len(), 7);
    }
}
