//! Effective resistance spaces on finite weighted graphs.
//!
//! The crate decides whether a finite metric is the effective resistance of
//! some weighted graph and recovers that graph, reduces electrical networks
//! with the star-mesh transform, estimates limit graphs of infinite
//! resistance metrics from finite exhaustions, and cross-checks resistances
//! against random-walk quantities, both exactly and by Monte Carlo.
//!
//! Every algorithm is generic over [`Scalar`], implemented by exact
//! [`Rational`] numbers and by `f64`.

pub mod error;
pub mod ers;
pub mod families;
pub mod graph;
pub mod io;
pub mod limit;
pub mod metric;
pub mod numeric;
pub mod reduction;
pub mod walk;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use ers::{effective_resistance, potential, recover_graph, ErsVerdict, Outcome, Rejection};
pub use families::{builtin_family, Family, Fixture, Instance};
pub use graph::{Edge, WeightedGraph};
pub use limit::{exhaustion_traces, limit_graph_estimate, ConditionC, ExhaustionPlan, LimitGraphReport, LimitOptions};
pub use metric::{builtin_metric, DefectSystem, MetricFamily, MetricSpace, MetricViolation};
pub use numeric::{Backend, DenseMatrix, Rational, Scalar, Sign, SignVerdict, Tolerance};
pub use reduction::{monotonicity_report, star_mesh, trace_to_subset, ReductionTrace};
pub use walk::{mc_resistance, phi_law_check, McEstimate, WalkConfig};
