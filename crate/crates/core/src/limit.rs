//! Finite exhaustions of infinite resistance metrics and finite-horizon
//! estimates of their limit graphs.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ers::{effective_resistance, recover_graph, Outcome};
use crate::families::{two_ray, Family};
use crate::graph::WeightedGraph;
use crate::metric::MetricSpace;
use crate::numeric::{Backend, DenseMatrix, Scalar, Sign, Tolerance};

/// Produces the metric on the first `size` vertices of a countable space.
pub trait MetricSource<T: Scalar>: Sync {
    fn describe(&self) -> String;
    fn metric(&self, size: usize, tol: Tolerance) -> Result<MetricSpace<T>>;
}

impl<T: Scalar> MetricSource<T> for Family {
    fn describe(&self) -> String {
        self.name().to_string()
    }

    fn metric(&self, size: usize, tol: Tolerance) -> Result<MetricSpace<T>> {
        self.metric_prefix(size, tol)
    }
}

/// Prefixes of one finite metric, in label order.
#[derive(Debug, Clone)]
pub struct PrefixSource<T>(pub MetricSpace<T>);

impl<T: Scalar> MetricSource<T> for PrefixSource<T> {
    fn describe(&self) -> String {
        format!("prefixes of a {}-point metric", self.0.len())
    }

    fn metric(&self, size: usize, _tol: Tolerance) -> Result<MetricSpace<T>> {
        self.0.prefix(size)
    }
}

/// A user-supplied generator `size → metric`.
pub struct Generator<F> {
    pub name: String,
    pub f: F,
}

impl<T, F> MetricSource<T> for Generator<F>
where
    T: Scalar,
    F: Fn(usize) -> Result<MetricSpace<T>> + Sync,
{
    fn describe(&self) -> String {
        self.name.clone()
    }

    fn metric(&self, size: usize, _tol: Tolerance) -> Result<MetricSpace<T>> {
        (self.f)(size)
    }
}

#[derive(Debug, Clone)]
pub struct ExhaustionPlan<S> {
    pub source: S,
    pub sizes: Vec<usize>,
}

impl<S> ExhaustionPlan<S> {
    /// Sizes must be strictly increasing and at least 2.
    pub fn new(source: S, sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::BadParameter("no sizes given".into()));
        }
        if sizes[0] < 2 {
            return Err(Error::TooSmall {
                min: 2,
                found: sizes[0],
            });
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadParameter("sizes must be strictly increasing".into()));
        }
        Ok(Self { source, sizes })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustionStep<T> {
    pub size: usize,
    pub graph: WeightedGraph<T>,
}

fn first_error<V>(results: Vec<Result<V>>) -> Result<Vec<V>> {
    results.into_iter().collect()
}

/// Recovers `G_n` from the restriction to each `V_n` of the plan, after
/// checking that consecutive restrictions are nested.
pub fn exhaustion_traces<T: Scalar, S: MetricSource<T>>(
    plan: &ExhaustionPlan<S>,
    tol: Tolerance,
) -> Result<Vec<ExhaustionStep<T>>> {
    let metrics = first_error(
        plan.sizes
            .par_iter()
            .map(|&n| {
                let m = plan.source.metric(n, tol)?;
                if m.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: m.len(),
                    });
                }
                Ok(m)
            })
            .collect(),
    )?;
    for (k, pair) in metrics.windows(2).enumerate() {
        let (small, large) = (&pair[0], &pair[1]);
        let restricted = large.prefix(small.len())?;
        let same = restricted.labels() == small.labels()
            && (0..small.len()).all(|i| {
                (0..small.len()).all(|j| restricted.distance(i, j).approx_eq(small.distance(i, j), tol))
            });
        if !same {
            return Err(Error::InconsistentExhaustion {
                size: plan.sizes[k],
                larger: plan.sizes[k + 1],
            });
        }
    }
    let verdicts = first_error(metrics.par_iter().map(|m| recover_graph(m, tol)).collect())?;
    plan.sizes
        .iter()
        .zip(verdicts)
        .map(|(&size, v)| match v.outcome {
            Outcome::IsErs(graph) => Ok(ExhaustionStep { size, graph }),
            _ => Err(Error::NotAResistanceMetric {
                size,
                detail: v.summary(),
            }),
        })
        .collect()
}

/// How a limit was read off a finite trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// The trajectory stopped moving; the last value is taken.
    Stalled,
    /// `L + a/n` fits the last three points.
    Harmonic,
    /// Aitken's Δ² on a geometrically converging tail.
    Geometric,
    /// No model fits; the last value is a one-sided bound only.
    Bound,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Stalled => "stalled",
            Method::Harmonic => "harmonic",
            Method::Geometric => "geometric",
            Method::Bound => "bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub method: Method,
}

impl<T: Scalar> Estimate<T> {
    pub fn converged(&self) -> bool {
        self.method != Method::Bound
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"value": self.value.to_json(), "method": self.method.name()})
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOptions {
    /// Relative change below which a float trajectory counts as stalled.
    pub stall: f64,
    /// Largest admissible gap between `lim (c_n)_x` and `Σ_y c(x,y)`.
    pub epsilon: f64,
    /// Strengths beyond this value are treated as diverging.
    pub strength_cap: Option<f64>,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            stall: 1e-6,
            epsilon: 1e-3,
            strength_cap: None,
        }
    }
}

fn exact<T: Scalar>() -> bool {
    T::BACKEND == Backend::Rational
}

fn close<T: Scalar>(a: &T, b: &T, rel: f64, scale: f64) -> bool {
    if exact::<T>() {
        a == b
    } else {
        (a.to_f64() - b.to_f64()).abs() <= rel * scale.max(f64::MIN_POSITIVE)
    }
}

fn stalled<T: Scalar>(values: &[T], stall: f64) -> bool {
    let n = values.len();
    if exact::<T>() {
        return values[n - 1] == values[n - 2];
    }
    let tail = &values[n.saturating_sub(3)..];
    tail.windows(2)
        .all(|w| close(&w[0], &w[1], stall, w[1].to_f64().abs()))
}

fn harmonic<T: Scalar>(points: &[(usize, T)], stall: f64) -> Option<T> {
    let [(n1, y1), (n2, y2), (n3, y3)] = points.last_chunk::<3>()?.clone();
    let inv = |n: usize| T::from_int(n as i64).recip();
    let a = (y2 - y3.clone()) / (inv(n2) - inv(n3));
    let l = y3.clone() - a.clone() * inv(n3);
    let predicted = l.clone() + a * inv(n1);
    let spread = (y1.to_f64() - y3.to_f64()).abs();
    close(&predicted, &y1, stall, spread).then_some(l)
}

fn geometric<T: Scalar>(values: &[T], stall: f64) -> Option<T> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let d1 = values[n - 2].clone() - values[n - 3].clone();
    let d2 = values[n - 1].clone() - values[n - 2].clone();
    if d1.is_exact_zero() {
        return None;
    }
    let r = d2.clone() / d1;
    if !(r > T::zero() && r < T::one()) {
        return None;
    }
    if n >= 4 {
        let d0 = values[n - 3].clone() - values[n - 4].clone();
        if d0.is_exact_zero() {
            return None;
        }
        let r0 = (values[n - 2].clone() - values[n - 3].clone()) / d0;
        if !close(&r0, &r, stall, r.to_f64()) {
            return None;
        }
    }
    Some(values[n - 1].clone() + d2 * r.clone() / (T::one() - r))
}

/// Reads a limit off a trajectory of at least two points.
pub fn extrapolate<T: Scalar>(points: &[(usize, T)], stall: f64) -> Option<Estimate<T>> {
    if points.len() < 2 {
        return None;
    }
    let values: Vec<T> = points.iter().map(|(_, v)| v.clone()).collect();
    let last = values[values.len() - 1].clone();
    if stalled(&values, stall) {
        return Some(Estimate {
            value: last,
            method: Method::Stalled,
        });
    }
    if let Some(value) = harmonic(points, stall) {
        return Some(Estimate {
            value,
            method: Method::Harmonic,
        });
    }
    if let Some(value) = geometric(&values, stall) {
        return Some(Estimate {
            value,
            method: Method::Geometric,
        });
    }
    Some(Estimate {
        value: last,
        method: Method::Bound,
    })
}

/// Condition (C) at one vertex, judged from finitely many sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionC {
    Holds,
    FailsWithin(f64),
    DivergenceSuspected,
}

impl ConditionC {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            ConditionC::Holds => serde_json::json!({"verdict": "holds"}),
            ConditionC::FailsWithin(eps) => serde_json::json!({"verdict": "fails_within", "epsilon": eps}),
            ConditionC::DivergenceSuspected => serde_json::json!({"verdict": "divergence_suspected"}),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTrajectory<T> {
    pub x: String,
    pub y: String,
    pub points: Vec<(usize, T)>,
    /// Absent when the edge was seen at a single size.
    pub estimate: Option<Estimate<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexTrajectory<T> {
    pub x: String,
    pub points: Vec<(usize, T)>,
    pub estimate: Option<Estimate<T>>,
    /// `Σ_y c(x,y)` over the estimated limit edges.
    pub edge_sum: Option<T>,
    /// Needs at least three sizes.
    pub condition: Option<ConditionC>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitGraphReport<T> {
    pub sizes: Vec<usize>,
    pub edges: Vec<EdgeTrajectory<T>>,
    pub vertices: Vec<VertexTrajectory<T>>,
    /// Estimated weights on the vertices seen at two or more sizes.
    pub limit_graph: WeightedGraph<T>,
    pub monotonicity_violations: Vec<String>,
    pub options: LimitOptions,
}

impl<T: Scalar> LimitGraphReport<T> {
    pub fn edge(&self, x: &str, y: &str) -> Option<&EdgeTrajectory<T>> {
        self.edges
            .iter()
            .find(|e| (e.x == x && e.y == y) || (e.x == y && e.y == x))
    }

    pub fn vertex(&self, x: &str) -> Option<&VertexTrajectory<T>> {
        self.vertices.iter().find(|v| v.x == x)
    }

    pub fn condition(&self, x: &str) -> Option<ConditionC> {
        self.vertex(x).and_then(|v| v.condition)
    }

    /// Every edge whose limit could be estimated has limit zero.
    pub fn is_completely_disconnected(&self, tol: Tolerance) -> bool {
        self.edges
            .iter()
            .filter_map(|e| e.estimate.as_ref())
            .filter(|e| e.converged())
            .all(|e| e.value.near_zero(tol))
    }

    pub fn unconverged_edges(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| e.estimate.as_ref().is_some_and(|e| !e.converged()))
            .count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        let points = |p: &[(usize, T)]| {
            p.iter()
                .map(|(n, v)| json!([n, v.to_json()]))
                .collect::<Vec<_>>()
        };
        json!({
            "sizes": self.sizes,
            "options": {
                "stall": self.options.stall,
                "epsilon": self.options.epsilon,
                "strength_cap": self.options.strength_cap,
            },
            "edges": self.edges.iter().map(|e| json!({
                "x": e.x,
                "y": e.y,
                "trajectory": points(&e.points),
                "limit": e.estimate.as_ref().map(Estimate::to_json),
            })).collect::<Vec<_>>(),
            "vertices": self.vertices.iter().map(|v| json!({
                "x": v.x,
                "strength": points(&v.points),
                "strength_limit": v.estimate.as_ref().map(Estimate::to_json),
                "edge_sum": v.edge_sum.as_ref().map(Scalar::to_json),
                "condition_c": v.condition.as_ref().map(ConditionC::to_json),
            })).collect::<Vec<_>>(),
            "limit_graph": self.limit_graph.to_json(),
            "completely_disconnected": self.is_completely_disconnected(Tolerance::DEFAULT),
            "unconverged_edges": self.unconverged_edges(),
            "monotonicity_violations": self.monotonicity_violations,
        })
    }

    /// Trajectories as CSV with columns `series,n,value`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["series", "n", "value"]).map_err(io)?;
        for e in &self.edges {
            let series = format!("c({},{})", e.x, e.y);
            for (n, v) in &e.points {
                w.write_record([series.as_str(), &n.to_string(), &v.to_string()])
                    .map_err(io)?;
            }
        }
        for v in &self.vertices {
            let series = format!("strength({})", v.x);
            for (n, s) in &v.points {
                w.write_record([series.as_str(), &n.to_string(), &s.to_string()])
                    .map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Estimates the limit graph from a sequence of nested traces.
pub fn limit_graph_estimate<T: Scalar>(
    traces: &[ExhaustionStep<T>],
    options: LimitOptions,
    tol: Tolerance,
) -> Result<LimitGraphReport<T>> {
    if traces.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            found: traces.len(),
        });
    }
    let all = traces.last().expect("non-empty").graph.labels().to_vec();
    let seen: BTreeMap<&str, usize> = all
        .iter()
        .map(|l| {
            let count = traces.iter().filter(|t| t.graph.index_of(l).is_ok()).count();
            (l.as_str(), count)
        })
        .collect();
    let limit_labels: Vec<String> = all.iter().filter(|l| seen[l.as_str()] >= 2).cloned().collect();

    let mut violations = Vec::new();
    let mut edges = Vec::new();
    for (i, x) in all.iter().enumerate() {
        for y in &all[i + 1..] {
            let points: Vec<(usize, T)> = traces
                .iter()
                .filter_map(|t| {
                    let (a, b) = (t.graph.index_of(x).ok()?, t.graph.index_of(y).ok()?);
                    Some((t.size, t.graph.weight(a, b).clone()))
                })
                .collect();
            if points.iter().all(|(_, w)| w.is_exact_zero()) {
                continue;
            }
            for w in points.windows(2) {
                if (w[0].1.clone() - w[1].1.clone()).sign(tol).sign == Sign::Negative {
                    violations.push(format!("c({x},{y}) increases from n={} to n={}", w[0].0, w[1].0));
                }
            }
            let last = points.last().expect("non-empty").1.clone();
            let estimate = extrapolate(&points, options.stall).map(|mut e| {
                if e.value > last {
                    e.value = last.clone();
                }
                if e.value < T::zero() {
                    e.value = T::zero();
                }
                e
            });
            edges.push(EdgeTrajectory {
                x: x.clone(),
                y: y.clone(),
                points,
                estimate,
            });
        }
    }

    let mut c = DenseMatrix::zeros(limit_labels.clone())?;
    for e in &edges {
        if let (Some(est), Some(i), Some(j)) = (&e.estimate, c.index_of(&e.x), c.index_of(&e.y)) {
            c.set(i, j, est.value.clone());
            c.set(j, i, est.value.clone());
        }
    }
    let limit_graph = WeightedGraph::from_weights(c)?;

    let mut vertices = Vec::new();
    for x in &all {
        let points: Vec<(usize, T)> = traces
            .iter()
            .filter_map(|t| t.graph.index_of(x).ok().map(|i| (t.size, t.graph.strength(i))))
            .collect();
        for w in points.windows(2) {
            if (w[1].1.clone() - w[0].1.clone()).sign(tol).sign == Sign::Negative {
                violations.push(format!("strength of {x} decreases from n={} to n={}", w[0].0, w[1].0));
            }
        }
        let last = points.last().expect("non-empty").1.clone();
        let estimate = extrapolate(&points, options.stall).map(|mut e| {
            if e.value < last {
                e.value = last.clone();
            }
            e
        });
        let edge_sum = limit_graph
            .index_of(x)
            .ok()
            .map(|i| limit_graph.strength(i));
        let condition = match (&estimate, &edge_sum) {
            (Some(est), Some(sum)) if points.len() >= 3 => {
                Some(judge(&points, est, sum, &options))
            }
            _ => None,
        };
        vertices.push(VertexTrajectory {
            x: x.clone(),
            points,
            estimate,
            edge_sum,
            condition,
        });
    }

    Ok(LimitGraphReport {
        sizes: traces.iter().map(|t| t.size).collect(),
        edges,
        vertices,
        limit_graph,
        monotonicity_violations: violations,
        options,
    })
}

fn judge<T: Scalar>(points: &[(usize, T)], est: &Estimate<T>, sum: &T, options: &LimitOptions) -> ConditionC {
    let n = points.len();
    let last = points[n - 1].1.to_f64();
    if options.strength_cap.is_some_and(|cap| last > cap) {
        return ConditionC::DivergenceSuspected;
    }
    if !est.converged() {
        let inc = points[n - 1].1.to_f64() - points[n - 2].1.to_f64();
        let prev = points[n - 2].1.to_f64() - points[n - 3].1.to_f64();
        if inc > 0.0 && inc >= prev {
            return ConditionC::DivergenceSuspected;
        }
    }
    let gap = (est.value.clone() - sum.clone()).to_f64().abs();
    if gap <= options.epsilon {
        ConditionC::Holds
    } else {
        ConditionC::FailsWithin(options.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoRayIdentityReport<T> {
    pub n: usize,
    pub r1: DenseMatrix<T>,
    pub r2: DenseMatrix<T>,
    pub pairs: usize,
    /// Pairs where `R₂ ≠ ¼R₁(4 − R₁)`.
    pub mismatches: Vec<(String, String)>,
}

impl<T: Scalar> TwoRayIdentityReport<T> {
    pub fn holds(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "pairs": self.pairs,
            "holds": self.holds(),
            "mismatches": self.mismatches,
            "r1": self.r1.to_json(),
            "r2": self.r2.to_json(),
        })
    }
}

/// Compares the resistance of the two-sided doubling line with and without
/// its closing bridge, pair by pair.
pub fn two_ray_resistance_identity_check<T: Scalar>(n: usize, tol: Tolerance) -> Result<TwoRayIdentityReport<T>> {
    if n < 2 {
        return Err(Error::BadParameter(format!("n = {n}, need n >= 2")));
    }
    let r1 = effective_resistance(&two_ray::<T>(n, false)?, tol)?.matrix().clone();
    let r2 = effective_resistance(&two_ray::<T>(n, true)?, tol)?.matrix().clone();
    let four = T::from_int(4);
    let quarter = T::from_ratio(1, 4);
    let mut mismatches = Vec::new();
    let mut pairs = 0;
    let labels = r1.labels().to_vec();
    for i in 0..labels.len() {
        for j in i..labels.len() {
            pairs += 1;
            let a = r1.get(i, j).clone();
            let expect = quarter.clone() * a.clone() * (four.clone() - a);
            if !expect.approx_eq(r2.get(i, j), tol) {
                mismatches.push((labels[i].clone(), labels[j].clone()));
            }
        }
    }
    Ok(TwoRayIdentityReport {
        n,
        r1,
        r2,
        pairs,
        mismatches,
    })
}
