//! Finite metric spaces and their triangle-defect systems.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::numeric::{DenseMatrix, Scalar, Sign, Tolerance};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricViolation {
    NotSymmetric { x: String, y: String },
    NonzeroDiagonal { x: String },
    NonPositiveOffDiagonal { x: String, y: String },
    /// `d(x,z) > d(x,y) + d(y,z)`.
    TriangleViolation { x: String, y: String, z: String },
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotSymmetric { x, y } => write!(f, "d({x},{y}) != d({y},{x})"),
            Self::NonzeroDiagonal { x } => write!(f, "d({x},{x}) != 0"),
            Self::NonPositiveOffDiagonal { x, y } => write!(f, "d({x},{y}) <= 0"),
            Self::TriangleViolation { x, y, z } => {
                write!(f, "d({x},{z}) > d({x},{y}) + d({y},{z})")
            }
        }
    }
}

impl MetricViolation {
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Self::NotSymmetric { x, y } => json!({"kind": "not_symmetric", "x": x, "y": y}),
            Self::NonzeroDiagonal { x } => json!({"kind": "nonzero_diagonal", "x": x}),
            Self::NonPositiveOffDiagonal { x, y } => {
                json!({"kind": "non_positive_off_diagonal", "x": x, "y": y})
            }
            Self::TriangleViolation { x, y, z } => {
                json!({"kind": "triangle_violation", "x": x, "y": y, "z": z})
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace<T> {
    d: DenseMatrix<T>,
}

impl<T: Scalar> MetricSpace<T> {
    /// Checks (M1) positivity, (M2) symmetry and the triangle inequality,
    /// collecting every violation.
    pub fn validate(labels: Vec<String>, rows: Vec<Vec<T>>, tol: Tolerance) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::TooSmall {
                min: 2,
                found: labels.len(),
            });
        }
        let d = DenseMatrix::from_rows(labels, rows)?;
        Self::from_matrix(d, tol)
    }

    pub fn from_matrix(d: DenseMatrix<T>, tol: Tolerance) -> Result<Self> {
        let n = d.n();
        if n < 2 {
            return Err(Error::TooSmall { min: 2, found: n });
        }
        let l = d.labels();
        let mut bad = Vec::new();
        for i in 0..n {
            if !d.get(i, i).near_zero(tol) {
                bad.push(MetricViolation::NonzeroDiagonal { x: l[i].clone() });
            }
            for j in i + 1..n {
                if !d.get(i, j).approx_eq(d.get(j, i), tol) {
                    bad.push(MetricViolation::NotSymmetric {
                        x: l[i].clone(),
                        y: l[j].clone(),
                    });
                }
                if d.get(i, j).sign(tol).sign != Sign::Positive
                    || d.get(j, i).sign(tol).sign != Sign::Positive
                {
                    bad.push(MetricViolation::NonPositiveOffDiagonal {
                        x: l[i].clone(),
                        y: l[j].clone(),
                    });
                }
            }
        }
        for i in 0..n {
            for k in i + 1..n {
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    let slack = d.get(i, j).clone() + d.get(j, k).clone() - d.get(i, k).clone();
                    if slack.sign(tol).sign == Sign::Negative {
                        bad.push(MetricViolation::TriangleViolation {
                            x: l[i].clone(),
                            y: l[j].clone(),
                            z: l[k].clone(),
                        });
                    }
                }
            }
        }
        if bad.is_empty() {
            Ok(Self { d })
        } else {
            Err(Error::InvalidMetric(bad))
        }
    }

    /// Skips validation; callers guarantee the axioms.
    pub(crate) fn trusted(d: DenseMatrix<T>) -> Self {
        Self { d }
    }

    pub fn labels(&self) -> &[String] {
        self.d.labels()
    }

    pub fn len(&self) -> usize {
        self.d.n()
    }

    pub fn is_empty(&self) -> bool {
        self.d.n() == 0
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.d
    }

    pub fn distance(&self, i: usize, j: usize) -> &T {
        self.d.get(i, j)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.d
            .index_of(label)
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    /// Restriction to the given vertices (in the given order).
    pub fn restrict(&self, idx: &[usize]) -> Result<Self> {
        if idx.len() < 2 {
            return Err(Error::TooSmall {
                min: 2,
                found: idx.len(),
            });
        }
        Ok(Self::trusted(self.d.principal(idx)))
    }

    pub fn restrict_to_labels(&self, labels: &[String]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| self.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        self.restrict(&idx)
    }

    /// The first `size` vertices in label order.
    pub fn prefix(&self, size: usize) -> Result<Self> {
        if size > self.len() {
            return Err(Error::BadParameter(format!(
                "prefix of size {size} from a {}-point space",
                self.len()
            )));
        }
        self.restrict(&(0..size).collect::<Vec<_>>())
    }

    /// Triangle defects `M_y`, their restriction `M'_y`, the system matrix
    /// `A_y` and right-hand side `b_y` for anchor `y`.
    pub fn defect_system(&self, anchor: &str) -> Result<DefectSystem<T>> {
        let y = self.index_of(anchor)?;
        let d = &self.d;
        let half = T::half();
        let m = DenseMatrix::from_fn(d.labels().to_vec(), |x, z| {
            (d.get(x, y).clone() + d.get(y, z).clone() - d.get(x, z).clone()) * half.clone()
        })?;
        let m_prime = m.without(y);
        let mut a = m.clone();
        a.set(y, y, T::one());
        let b = (0..d.n())
            .map(|x| if x == y { T::zero() } else { T::one() })
            .collect();
        Ok(DefectSystem {
            anchor: anchor.to_string(),
            anchor_index: y,
            m,
            m_prime,
            a,
            b,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "labels": self.labels(),
            "d": self
                .d
                .rows()
                .iter()
                .map(|r| r.iter().map(Scalar::to_json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

/// The linear system attached to one anchor vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectSystem<T> {
    pub anchor: String,
    pub anchor_index: usize,
    /// `M_y(x,z) = ½(d(x,y) + d(y,z) − d(x,z))` on `V × V`.
    pub m: DenseMatrix<T>,
    /// `M_y` with the anchor row and column removed.
    pub m_prime: DenseMatrix<T>,
    /// `M_y` with `A_y(y,y) = 1`.
    pub a: DenseMatrix<T>,
    /// `b_y(x) = 1 − δ_y(x)`.
    pub b: Vec<T>,
}

#[derive(Debug, Clone)]
pub enum MetricFamily<'a, T> {
    Discrete(usize),
    Star(usize),
    GeodesicOf(&'a WeightedGraph<T>),
}

fn numbered(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

/// Built-in metrics. Discrete and star spaces are labelled `1..=n`; in the
/// star metric vertex `1` is the hub.
pub fn builtin_metric<T: Scalar>(family: MetricFamily<'_, T>) -> Result<MetricSpace<T>> {
    match family {
        MetricFamily::Discrete(n) | MetricFamily::Star(n) if n < 2 => {
            Err(Error::BadParameter(format!("n = {n}, need n >= 2")))
        }
        MetricFamily::Discrete(n) => Ok(MetricSpace::trusted(DenseMatrix::from_fn(
            numbered(n),
            |i, j| if i == j { T::zero() } else { T::one() },
        )?)),
        MetricFamily::Star(n) => Ok(MetricSpace::trusted(DenseMatrix::from_fn(
            numbered(n),
            |i, j| {
                if i == j {
                    T::zero()
                } else if i == 0 || j == 0 {
                    T::one()
                } else {
                    T::from_int(2)
                }
            },
        )?)),
        MetricFamily::GeodesicOf(g) => g.geodesic_metric(),
    }
}
