//! Star-mesh elimination, traces onto vertex subsets and the monotonicity
//! laws between nested traces.

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::numeric::{DenseMatrix, Scalar, Sign, Tolerance};

/// Removes `x0` and joins its neighbours by
/// `c'(x,y) = c(x,y) + c(x,x0)c(x0,y)/c_{x0}`.
pub fn star_mesh<T: Scalar>(g: &WeightedGraph<T>, x0: &str, tol: Tolerance) -> Result<WeightedGraph<T>> {
    let k = g.index_of(x0)?;
    if g.len() < 3 {
        return Err(Error::TooSmall {
            min: 3,
            found: g.len(),
        });
    }
    let ck = g.strength(k);
    if ck.sign(tol).sign != Sign::Positive {
        return Err(Error::IsolatedVertex(x0.to_string()));
    }
    let keep: Vec<usize> = (0..g.len()).filter(|&i| i != k).collect();
    let labels: Vec<String> = keep.iter().map(|&i| g.labels()[i].clone()).collect();
    let m = keep.len();
    let mut c = DenseMatrix::zeros(labels)?;
    for a in 0..m {
        for b in a + 1..m {
            let (i, j) = (keep[a], keep[b]);
            let w = g.weight(i, j).clone()
                + g.weight(i, k).clone() * g.weight(k, j).clone() / ck.clone();
            c.set(a, b, w.clone());
            c.set(b, a, w);
        }
    }
    let reduced = WeightedGraph::trusted(c);
    if !reduced.is_connected(tol) {
        return Err(Error::Disconnects(x0.to_string()));
    }
    Ok(reduced)
}

/// Strength of every survivor after removing `x0`, by the closed form
/// `c'_x = c_x − c(x0,x)²/c_{x0}`.
pub fn strengths_after_removal<T: Scalar>(g: &WeightedGraph<T>, x0: &str) -> Result<Vec<(String, T)>> {
    let k = g.index_of(x0)?;
    let ck = g.strength(k);
    Ok((0..g.len())
        .filter(|&x| x != k)
        .map(|x| {
            let w = g.weight(k, x).clone();
            (g.labels()[x].clone(), g.strength(x) - w.clone() * w / ck.clone())
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionStep<T> {
    pub removed: String,
    pub graph: WeightedGraph<T>,
    /// `c'_x − c_x` for every survivor.
    pub strength_deltas: Vec<(String, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionTrace<T> {
    pub original: WeightedGraph<T>,
    pub removal_order: Vec<String>,
    pub steps: Vec<ReductionStep<T>>,
    /// Accumulated disagreement between closed-form and recomputed
    /// strengths. Always zero for rationals.
    pub residual_bound: f64,
}

impl<T: Scalar> ReductionTrace<T> {
    pub fn result(&self) -> &WeightedGraph<T> {
        self.steps.last().map_or(&self.original, |s| &s.graph)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "original": self.original.to_json(),
            "removal_order": self.removal_order,
            "steps": self.steps.iter().map(|s| serde_json::json!({
                "removed": s.removed,
                "graph": s.graph.to_json(),
                "strength_deltas": s.strength_deltas.iter()
                    .map(|(l, d)| (l.clone(), d.to_json()))
                    .collect::<serde_json::Map<_, _>>(),
            })).collect::<Vec<_>>(),
            "result": self.result().to_json(),
            "residual_bound": self.residual_bound,
        })
    }
}

/// Eliminates every vertex outside `keep`, in `order` when given and in
/// label order otherwise.
pub fn trace_to_subset<T: Scalar>(
    g: &WeightedGraph<T>,
    keep: &[String],
    order: Option<&[String]>,
    tol: Tolerance,
) -> Result<ReductionTrace<T>> {
    for l in keep {
        g.index_of(l)?;
    }
    let mut unique = keep.to_vec();
    unique.sort();
    unique.dedup();
    if unique.len() != keep.len() {
        return Err(Error::BadParameter("keep set lists a vertex twice".into()));
    }
    if keep.len() < 2 {
        return Err(Error::TooSmall {
            min: 2,
            found: keep.len(),
        });
    }
    let mut default: Vec<String> = g
        .labels()
        .iter()
        .filter(|l| !keep.contains(l))
        .cloned()
        .collect();
    let removal_order = match order {
        None => default,
        Some(o) => {
            let mut given = o.to_vec();
            given.sort();
            default.sort();
            if given != default {
                return Err(Error::BadParameter(
                    "removal order must list exactly the vertices outside the keep set".into(),
                ));
            }
            o.to_vec()
        }
    };
    if removal_order.is_empty() && !g.is_connected(tol) {
        return Err(Error::Disconnected);
    }

    let mut steps = Vec::with_capacity(removal_order.len());
    let mut residual_bound = 0.0;
    let mut current = g.clone();
    for x0 in &removal_order {
        let before = current.labels().to_vec();
        let closed = strengths_after_removal(&current, x0)?;
        let next = star_mesh(&current, x0, tol)?;
        let recomputed = next.strengths();
        let mut deltas = Vec::with_capacity(closed.len());
        for (idx, (label, s)) in closed.into_iter().enumerate() {
            residual_bound += (s.clone() - recomputed[idx].clone()).abs().to_f64();
            let old = current.strength(before.iter().position(|l| *l == label).expect("survivor"));
            deltas.push((label, recomputed[idx].clone() - old));
        }
        steps.push(ReductionStep {
            removed: x0.clone(),
            graph: next.clone(),
            strength_deltas: deltas,
        });
        current = next;
    }
    Ok(ReductionTrace {
        original: g.clone(),
        removal_order,
        steps,
        residual_bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum MonotonicityViolation {
    /// `c₁(x,y) < c₂(x,y)`.
    Weight { x: String, y: String },
    /// `(c₁)_x > (c₂)_x`.
    Strength { x: String },
    /// `c₁(x,y)/(c₁)_x < c₂(x,y)/(c₂)_x`.
    Quotient { x: String, y: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport<T> {
    pub small: WeightedGraph<T>,
    pub large: WeightedGraph<T>,
    pub comparisons: usize,
    pub equalities: usize,
    pub violations: Vec<MonotonicityViolation>,
}

impl<T: Scalar> MonotonicityReport<T> {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        json!({
            "small": self.small.to_json(),
            "large": self.large.to_json(),
            "comparisons": self.comparisons,
            "equalities": self.equalities,
            "violations": self.violations.iter().map(|v| match v {
                MonotonicityViolation::Weight { x, y } => json!({"kind": "weight", "x": x, "y": y}),
                MonotonicityViolation::Strength { x } => json!({"kind": "strength", "x": x}),
                MonotonicityViolation::Quotient { x, y } => json!({"kind": "quotient", "x": x, "y": y}),
            }).collect::<Vec<_>>(),
        })
    }
}

/// Compares the traces of `g` on `v1 ⊆ v2`: weights shrink, strengths grow
/// and transition probabilities shrink as the subset grows.
pub fn monotonicity_report<T: Scalar>(
    g: &WeightedGraph<T>,
    v1: &[String],
    v2: &[String],
    tol: Tolerance,
) -> Result<MonotonicityReport<T>> {
    if let Some(x) = v1.iter().find(|x| !v2.contains(x)) {
        return Err(Error::BadParameter(format!("{x} is in the smaller set only")));
    }
    let g1 = trace_to_subset(g, v1, None, tol)?.result().clone();
    let g2 = trace_to_subset(g, v2, None, tol)?.result().clone();
    let s1 = g1.strengths();
    let s2 = g2.strengths();
    let mut report = MonotonicityReport {
        comparisons: 0,
        equalities: 0,
        violations: Vec::new(),
        small: g1.clone(),
        large: g2.clone(),
    };
    let mut compare = |bigger: T, smaller: T, violation: MonotonicityViolation| {
        report.comparisons += 1;
        match (bigger - smaller).sign(tol).sign {
            Sign::Negative => report.violations.push(violation),
            Sign::Zero | Sign::Indeterminate => report.equalities += 1,
            Sign::Positive => {}
        }
    };
    for x in v1 {
        let (a1, a2) = (g1.index_of(x)?, g2.index_of(x)?);
        compare(
            s2[a2].clone(),
            s1[a1].clone(),
            MonotonicityViolation::Strength { x: x.clone() },
        );
        for y in v1 {
            if x == y {
                continue;
            }
            let (b1, b2) = (g1.index_of(y)?, g2.index_of(y)?);
            let (w1, w2) = (g1.weight(a1, b1).clone(), g2.weight(a2, b2).clone());
            compare(
                w1.clone(),
                w2.clone(),
                MonotonicityViolation::Weight {
                    x: x.clone(),
                    y: y.clone(),
                },
            );
            compare(
                w1 / s1[a1].clone(),
                w2 / s2[a2].clone(),
                MonotonicityViolation::Quotient {
                    x: x.clone(),
                    y: y.clone(),
                },
            );
        }
    }
    Ok(report)
}
