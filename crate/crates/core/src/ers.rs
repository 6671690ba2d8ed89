//! Effective resistance of a graph, and recovery of the unique graph behind
//! an effective resistance space.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::metric::MetricSpace;
use crate::numeric::{determinant, DenseMatrix, Lu, Scalar, Sign, Tolerance};

/// Solution of the Dirichlet problem for a unit current from `source` to
/// `sink`, grounded at the sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential<T> {
    pub source: String,
    pub sink: String,
    pub labels: Vec<String>,
    pub values: Vec<T>,
}

impl<T: Scalar> Potential<T> {
    /// `R(source, sink) = φ(source)`.
    pub fn resistance(&self) -> &T {
        let i = self
            .labels
            .iter()
            .position(|l| *l == self.source)
            .expect("source is a vertex");
        &self.values[i]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "source": self.source,
            "sink": self.sink,
            "values": self
                .labels
                .iter()
                .zip(&self.values)
                .map(|(l, v)| (l.clone(), v.to_json()))
                .collect::<serde_json::Map<_, _>>(),
        })
    }
}

fn require_connected<T: Scalar>(g: &WeightedGraph<T>, tol: Tolerance) -> Result<()> {
    g.check_no_isolated().map_err(|_| Error::Disconnected)?;
    if g.is_connected(tol) {
        Ok(())
    } else {
        Err(Error::Disconnected)
    }
}

/// Solves `Δφ = 1_x/c_x − 1_y/c_y` with `φ(y) = 0` on `V∖{y}`.
pub fn potential<T: Scalar>(
    g: &WeightedGraph<T>,
    x: &str,
    y: &str,
    tol: Tolerance,
) -> Result<Potential<T>> {
    let xi = g.index_of(x)?;
    let yi = g.index_of(y)?;
    if xi == yi {
        return Err(Error::SameVertex(x.to_string()));
    }
    require_connected(g, tol)?;
    let lap = g.laplacian()?.without(yi);
    let cx = g.strength(xi);
    let rhs: Vec<T> = (0..g.len())
        .filter(|&k| k != yi)
        .map(|k| if k == xi { cx.recip() } else { T::zero() })
        .collect();
    let phi = Lu::factor(&lap, tol).solve(&rhs)?;
    let mut values = phi;
    values.insert(yi, T::zero());
    Ok(Potential {
        source: x.to_string(),
        sink: y.to_string(),
        labels: g.labels().to_vec(),
        values,
    })
}

/// Inverse of the Kirchhoff matrix with the row and column of `ground`
/// deleted, re-embedded with a zero row and column at `ground`.
pub(crate) fn grounded_green<T: Scalar>(
    g: &WeightedGraph<T>,
    ground: usize,
    tol: Tolerance,
) -> Result<DenseMatrix<T>> {
    let k = g.kirchhoff().without(ground);
    let lu = Lu::factor(&k, tol);
    let m = k.n();
    let columns = (0..m)
        .map(|j| {
            let e: Vec<T> = (0..m)
                .map(|i| if i == j { T::one() } else { T::zero() })
                .collect();
            lu.solve(&e)
        })
        .collect::<Result<Vec<_>>>()?;
    let embed = |i: usize| (i != ground).then(|| if i < ground { i } else { i - 1 });
    DenseMatrix::from_fn(g.labels().to_vec(), |i, j| match (embed(i), embed(j)) {
        (Some(a), Some(b)) => columns[b][a].clone(),
        _ => T::zero(),
    })
}

/// Matrix of effective resistances; always a metric on a connected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceMatrix<T> {
    r: DenseMatrix<T>,
}

impl<T: Scalar> ResistanceMatrix<T> {
    pub fn labels(&self) -> &[String] {
        self.r.labels()
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        self.r.get(i, j)
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.r
    }

    pub fn between(&self, x: &str, y: &str) -> Result<&T> {
        let i = self
            .r
            .index_of(x)
            .ok_or_else(|| Error::UnknownVertex(x.into()))?;
        let j = self
            .r
            .index_of(y)
            .ok_or_else(|| Error::UnknownVertex(y.into()))?;
        Ok(self.r.get(i, j))
    }

    /// Validates the metric axioms and returns the metric space.
    pub fn to_metric(&self, tol: Tolerance) -> Result<MetricSpace<T>> {
        MetricSpace::from_matrix(self.r.clone(), tol)
    }

    pub fn to_json(&self) -> serde_json::Value {
        self.r.to_json()
    }
}

/// `R(x,y)` for all pairs, from one grounded Green's function:
/// `R(x,z) = G(x,x) + G(z,z) − 2G(x,z)`.
pub fn effective_resistance<T: Scalar>(
    g: &WeightedGraph<T>,
    tol: Tolerance,
) -> Result<ResistanceMatrix<T>> {
    require_connected(g, tol)?;
    if g.len() < 2 {
        return Err(Error::TooSmall {
            min: 2,
            found: g.len(),
        });
    }
    let green = grounded_green(g, 0, tol)?;
    let two = T::from_int(2);
    let r = DenseMatrix::from_fn(g.labels().to_vec(), |i, j| {
        if i == j {
            T::zero()
        } else {
            green.get(i, i).clone() + green.get(j, j).clone() - two.clone() * green.get(i, j).clone()
        }
    })?;
    Ok(ResistanceMatrix { r })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rejection<T> {
    /// `det M'_y` is not positive.
    SingularDefect { anchor: String, det: T },
    NegativeWeight { x: String, y: String, value: T },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    IsErs(WeightedGraph<T>),
    NotErs(Rejection<T>),
    Indeterminate(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErsVerdict<T> {
    pub outcome: Outcome<T>,
    /// `det A_y` per anchor that was factored.
    pub determinants: Vec<(String, T)>,
    /// Infinity-norm residual of each anchor solve.
    pub residuals: Vec<(String, f64)>,
    /// Solution matrix of the anchor systems, when they were solved.
    pub candidate: Option<DenseMatrix<T>>,
    pub max_asymmetry: f64,
}

impl<T: Scalar> ErsVerdict<T> {
    pub fn is_ers(&self) -> bool {
        matches!(self.outcome, Outcome::IsErs(_))
    }

    pub fn graph(&self) -> Option<&WeightedGraph<T>> {
        match &self.outcome {
            Outcome::IsErs(g) => Some(g),
            _ => None,
        }
    }

    pub fn outcome_name(&self) -> &'static str {
        match self.outcome {
            Outcome::IsErs(_) => "is_ers",
            Outcome::NotErs(_) => "not_ers",
            Outcome::Indeterminate(_) => "indeterminate",
        }
    }

    pub fn summary(&self) -> String {
        match &self.outcome {
            Outcome::IsErs(_) => "is an effective resistance".into(),
            Outcome::NotErs(Rejection::SingularDefect { anchor, det }) => {
                format!("defect determinant at {anchor} is {det}")
            }
            Outcome::NotErs(Rejection::NegativeWeight { x, y, value }) => {
                format!("recovered weight c({x},{y}) = {value} is negative")
            }
            Outcome::Indeterminate(d) => format!("indeterminate: {d}"),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        let reason = match &self.outcome {
            Outcome::NotErs(Rejection::SingularDefect { anchor, det }) => json!({
                "kind": "singular_defect", "anchor": anchor, "det": det.to_json(),
            }),
            Outcome::NotErs(Rejection::NegativeWeight { x, y, value }) => json!({
                "kind": "negative_weight", "x": x, "y": y, "value": value.to_json(),
            }),
            Outcome::Indeterminate(d) => json!({"kind": "indeterminate", "detail": d}),
            Outcome::IsErs(_) => serde_json::Value::Null,
        };
        json!({
            "outcome": self.outcome_name(),
            "graph": self.graph().map(WeightedGraph::to_json),
            "reason": reason,
            "determinants": self
                .determinants
                .iter()
                .map(|(a, d)| json!({"anchor": a, "det": d.to_json()}))
                .collect::<Vec<_>>(),
            "residuals": self
                .residuals
                .iter()
                .map(|(a, r)| json!({"anchor": a, "residual": r}))
                .collect::<Vec<_>>(),
            "candidate": self.candidate.as_ref().map(DenseMatrix::to_json),
            "max_asymmetry": self.max_asymmetry,
        })
    }
}

struct AnchorSolve<T> {
    det: T,
    column: Option<Vec<T>>,
    residual: f64,
}

fn solve_anchor<T: Scalar>(m: &MetricSpace<T>, y: &str, tol: Tolerance) -> Result<AnchorSolve<T>> {
    let sys = m.defect_system(y)?;
    let lu = Lu::factor(&sys.a, tol);
    let det = lu.determinant();
    match lu.solve(&sys.b) {
        Ok(x) => {
            let residual = crate::numeric::matrix_residual(&sys.a, &x, &sys.b)?;
            Ok(AnchorSolve {
                det,
                column: Some(x),
                residual,
            })
        }
        Err(Error::SingularMatrix { .. }) => Ok(AnchorSolve {
            det,
            column: None,
            residual: f64::INFINITY,
        }),
        Err(e) => Err(e),
    }
}

/// Decides whether `m` is an effective resistance space and, if so, returns
/// the unique graph inducing it.
///
/// The determinant of `M'_y` is tested at the first label only; the system
/// `A_y·c(·,y) = b_y` is then solved for every anchor.
pub fn recover_graph<T: Scalar>(m: &MetricSpace<T>, tol: Tolerance) -> Result<ErsVerdict<T>> {
    let labels = m.labels().to_vec();
    let first = &labels[0];
    let sys = m.defect_system(first)?;
    let det0 = determinant(&sys.m_prime, tol).value;
    let mut verdict = ErsVerdict {
        outcome: Outcome::Indeterminate(String::new()),
        determinants: vec![(first.clone(), det0.clone())],
        residuals: Vec::new(),
        candidate: None,
        max_asymmetry: 0.0,
    };
    match det0.sign(tol).sign {
        Sign::Positive => {}
        Sign::Indeterminate => {
            verdict.outcome = Outcome::Indeterminate(format!(
                "defect determinant at {first} is {det0}, inside the tolerance band"
            ));
            return Ok(verdict);
        }
        Sign::Zero | Sign::Negative => {
            verdict.outcome = Outcome::NotErs(Rejection::SingularDefect {
                anchor: first.clone(),
                det: det0,
            });
            return Ok(verdict);
        }
    }

    let solves = labels
        .par_iter()
        .map(|y| solve_anchor(m, y, tol))
        .collect::<Result<Vec<_>>>()?;
    verdict.determinants = labels
        .iter()
        .zip(&solves)
        .map(|(l, s)| (l.clone(), s.det.clone()))
        .collect();
    verdict.residuals = labels
        .iter()
        .zip(&solves)
        .map(|(l, s)| (l.clone(), s.residual))
        .collect();
    let mut columns = Vec::with_capacity(solves.len());
    for (y, s) in labels.iter().zip(solves) {
        match s.column {
            Some(col) => columns.push(col),
            None if T::BACKEND == crate::numeric::Backend::Float => {
                verdict.outcome =
                    Outcome::Indeterminate(format!("system for anchor {y} is numerically singular"));
                return Ok(verdict);
            }
            None => return Err(Error::SingularMatrix { pivot: 0 }),
        }
    }

    let n = labels.len();
    let mut c = DenseMatrix::from_fn(labels.clone(), |x, y| columns[y][x].clone())?;
    verdict.max_asymmetry = c.max_asymmetry();
    match T::BACKEND {
        crate::numeric::Backend::Rational => {
            if verdict.max_asymmetry != 0.0 || !c.is_symmetric(tol) {
                return Err(Error::AsymmetricSolution(verdict.max_asymmetry));
            }
        }
        crate::numeric::Backend::Float => {
            if verdict.max_asymmetry > tol.0 {
                return Err(Error::AsymmetricSolution(verdict.max_asymmetry));
            }
            let half = T::half();
            for i in 0..n {
                c.set(i, i, T::zero());
                for j in i + 1..n {
                    let avg = (c.get(i, j).clone() + c.get(j, i).clone()) * half.clone();
                    c.set(i, j, avg.clone());
                    c.set(j, i, avg);
                }
            }
        }
    }
    verdict.candidate = Some(c.clone());

    let mut negative = None;
    let mut unsure = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            match c.get(i, j).sign(tol).sign {
                Sign::Negative if negative.is_none() => negative = Some((i, j)),
                Sign::Indeterminate => unsure.push(format!("c({},{})", labels[i], labels[j])),
                _ => {}
            }
        }
    }
    if let Some((i, j)) = negative {
        verdict.outcome = Outcome::NotErs(Rejection::NegativeWeight {
            x: labels[i].clone(),
            y: labels[j].clone(),
            value: c.get(i, j).clone(),
        });
        return Ok(verdict);
    }
    if !unsure.is_empty() {
        verdict.outcome = Outcome::Indeterminate(format!(
            "sign of {} inside the tolerance band",
            unsure.join(", ")
        ));
        return Ok(verdict);
    }
    let g = WeightedGraph::from_weights(c)?;
    if !g.is_connected(tol) {
        return Err(Error::Disconnected);
    }
    verdict.outcome = Outcome::IsErs(g);
    Ok(verdict)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTripReport<T> {
    pub exact: bool,
    pub max_discrepancy: f64,
    pub recovered: Option<WeightedGraph<T>>,
    pub outcome: &'static str,
}

impl<T: Scalar> RoundTripReport<T> {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "exact": self.exact,
            "max_discrepancy": self.max_discrepancy,
            "outcome": self.outcome,
            "recovered": self.recovered.as_ref().map(WeightedGraph::to_json),
        })
    }
}

/// Recovers the graph from its own effective resistance and compares weights.
pub fn check_round_trip<T: Scalar>(
    g: &WeightedGraph<T>,
    tol: Tolerance,
) -> Result<RoundTripReport<T>> {
    let r = effective_resistance(g, tol)?;
    let metric = r.to_metric(tol)?;
    let verdict = recover_graph(&metric, tol)?;
    let outcome = verdict.outcome_name();
    let Outcome::IsErs(recovered) = verdict.outcome else {
        return Ok(RoundTripReport {
            exact: false,
            max_discrepancy: f64::INFINITY,
            recovered: None,
            outcome,
        });
    };
    let n = g.len();
    let mut worst = 0.0f64;
    let mut equal = true;
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (g.weight(i, j), recovered.weight(i, j));
            worst = worst.max((a.clone() - b.clone()).abs().to_f64());
            equal &= a.approx_eq(b, tol);
        }
    }
    Ok(RoundTripReport {
        exact: equal,
        max_discrepancy: worst,
        recovered: Some(recovered),
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalReport<T> {
    pub resistance: T,
    /// `ℰ(φ^{xy})`; equals the resistance.
    pub energy: T,
    pub energy_matches: bool,
    /// `u = φ/R` has `u(x) = 1`, `u(y) = 0`.
    pub boundary_ok: bool,
    /// Largest central-difference derivative of `ℰ` at interior vertices.
    pub max_derivative: f64,
    /// No interior ±ε perturbation lowers the energy of `u`.
    pub minimizes: bool,
}

impl<T: Scalar> VariationalReport<T> {
    pub fn passed(&self, tol: Tolerance) -> bool {
        self.energy_matches && self.boundary_ok && self.minimizes && self.max_derivative <= tol.0
    }
}

/// Checks `ℰ(φ^{xy}) = R(x,y)` and that the normalized potential is a
/// stationary minimizer of the energy under the boundary conditions.
pub fn variational_check<T: Scalar>(
    g: &WeightedGraph<T>,
    x: &str,
    y: &str,
    tol: Tolerance,
) -> Result<VariationalReport<T>> {
    let phi = potential(g, x, y, tol)?;
    let xi = g.index_of(x)?;
    let yi = g.index_of(y)?;
    let r = phi.values[xi].clone();
    let energy = g.energy(&phi.values)?;
    let u: Vec<T> = phi.values.iter().map(|v| v.clone() / r.clone()).collect();
    let boundary_ok = u[xi].approx_eq(&T::one(), tol) && u[yi].approx_eq(&T::zero(), tol);
    let base = g.energy(&u)?;
    let eps = T::from_ratio(1, 1000);
    let mut max_derivative = 0.0f64;
    let mut minimizes = true;
    for z in (0..g.len()).filter(|&z| z != xi && z != yi) {
        let mut plus = u.clone();
        plus[z] += &eps;
        let mut minus = u.clone();
        minus[z] -= &eps;
        let ep = g.energy(&plus)?;
        let em = g.energy(&minus)?;
        let derivative = (ep.clone() - em.clone()) / (T::from_int(2) * eps.clone());
        max_derivative = max_derivative.max(derivative.abs().to_f64());
        let slack = tol.0.max(0.0);
        if (base.clone() - ep).to_f64() > slack || (base.clone() - em).to_f64() > slack {
            minimizes = false;
        }
    }
    Ok(VariationalReport {
        energy_matches: energy.approx_eq(&r, tol),
        resistance: r,
        energy,
        boundary_ok,
        max_derivative,
        minimizes,
    })
}
