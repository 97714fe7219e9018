//! Scenario files, property suites and reports behind the command-line tool.

pub mod fixtures;
mod run;
mod scenario;
mod suite;

pub use run::{run, summary_lines, write_outputs, CheckOutcome, EnvelopeRow, Overrides, RhoRow, RunReport, Stamp};
pub use scenario::{
    check_names, CheckKind, FunctionSpec, LambdaSpec, Num, PointSpec, ProbeSpec, Scenario, ScenarioDoc, SetSpec,
    SpaceSpec, Tolerances, VertexRef, WeakSpec, WindowSpec,
};
pub use suite::{suite, suite_with, Budget, PropertyOutcome, SuiteReport, SUITES};
