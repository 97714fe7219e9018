use std::fmt;
use std::sync::Arc;

use super::{ConvexFunction, ConvexSet};
use crate::error::{LabError, Result};
use crate::space::{same_space, SpaceRef};

type Generator<T> = Arc<dyn Fn(usize) -> Result<T> + Send + Sync>;

/// An indexed family `n -> f_n`, `n >= 1`, optionally with a declared limit.
#[derive(Clone)]
pub struct FunctionSequence {
    space: SpaceRef,
    generator: Generator<ConvexFunction>,
    limit: Option<ConvexFunction>,
}

impl FunctionSequence {
    pub fn new(space: &SpaceRef, generator: impl Fn(usize) -> Result<ConvexFunction> + Send + Sync + 'static) -> Self {
        FunctionSequence { space: space.clone(), generator: Arc::new(generator), limit: None }
    }

    pub fn constant(f: ConvexFunction) -> Self {
        let g = f.clone();
        FunctionSequence::new(f.space(), move |_| Ok(g.clone())).with_limit(f)
    }

    /// A sequence alternating between `a` (odd n) and `b` (even n).
    pub fn alternating(a: ConvexFunction, b: ConvexFunction) -> Self {
        let space = a.space().clone();
        FunctionSequence::new(&space, move |n| Ok(if n % 2 == 1 { a.clone() } else { b.clone() }))
    }

    pub fn with_limit(mut self, limit: ConvexFunction) -> Self {
        self.limit = Some(limit);
        self
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn limit(&self) -> Option<&ConvexFunction> {
        self.limit.as_ref()
    }

    pub fn at(&self, n: usize) -> Result<ConvexFunction> {
        if n == 0 {
            return Err(LabError::domain("sequences are indexed from 1"));
        }
        let f = (self.generator)(n)?;
        if !same_space(f.space(), &self.space) {
            return Err(LabError::mismatch(format!(
                "term {n} lives on {}, sequence on {}",
                f.space().name(),
                self.space.name()
            )));
        }
        Ok(f)
    }
}

impl fmt::Debug for FunctionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSequence")
            .field("space", &self.space.name())
            .field("limit", &self.limit)
            .finish_non_exhaustive()
    }
}

/// An indexed family of sets `n -> C_n`.
#[derive(Clone)]
pub struct SetSequence {
    space: SpaceRef,
    generator: Generator<ConvexSet>,
}

impl SetSequence {
    pub fn new(space: &SpaceRef, generator: impl Fn(usize) -> Result<ConvexSet> + Send + Sync + 'static) -> Self {
        SetSequence { space: space.clone(), generator: Arc::new(generator) }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn at(&self, n: usize) -> Result<ConvexSet> {
        if n == 0 {
            return Err(LabError::domain("sequences are indexed from 1"));
        }
        let c = (self.generator)(n)?;
        if !same_space(c.space(), &self.space) {
            return Err(LabError::mismatch(format!("set {n} lives on {}", c.space().name())));
        }
        Ok(c)
    }

    /// The indicator sequence `n -> iota_{C_n}`.
    pub fn indicators(&self) -> FunctionSequence {
        let this = self.clone();
        FunctionSequence::new(&self.space, move |n| Ok(ConvexFunction::indicator(this.at(n)?)))
    }
}

impl fmt::Debug for SetSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetSequence").field("space", &self.space.name()).finish_non_exhaustive()
    }
}

/// A finite index window `start .. start + len` standing in for the tail of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

impl Window {
    pub const MIN_LEN: usize = 8;

    pub fn new(start: usize, len: usize) -> Result<Self> {
        if start == 0 {
            return Err(LabError::domain("windows start at index 1 or later"));
        }
        if len < Self::MIN_LEN {
            return Err(LabError::domain(format!("window length {len} is below {}", Self::MIN_LEN)));
        }
        Ok(Window { start, len })
    }

    pub fn end(&self) -> usize {
        self.start + self.len - 1
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end()
    }

    /// The second half of the window.
    pub fn tail(&self) -> std::ops::RangeInclusive<usize> {
        self.start + self.len / 2..=self.end()
    }

    pub fn doubled(&self) -> Window {
        Window { start: self.start, len: 2 * self.len }
    }
}
