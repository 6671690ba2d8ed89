//! Weighted graphs: Laplacian, Kirchhoff matrix, connectivity, energy and
//! geodesic distance.

use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::numeric::{determinant, DenseMatrix, Scalar, Sign, Tolerance};

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub u: String,
    pub v: String,
    pub w: T,
}

impl<T> Edge<T> {
    pub fn new(u: impl Into<String>, v: impl Into<String>, w: T) -> Self {
        Self {
            u: u.into(),
            v: v.into(),
            w,
        }
    }
}

/// Conductances `c(x,y)` on a labelled vertex set. Symmetric, non-negative,
/// zero diagonal. Isolated vertices are allowed here; operations that need
/// a Laplacian check for them.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T> {
    c: DenseMatrix<T>,
}

impl<T: Scalar> WeightedGraph<T> {
    pub fn build(labels: Vec<String>, edges: &[Edge<T>]) -> Result<Self> {
        let mut c = DenseMatrix::zeros(labels)?;
        let mut seen = HashSet::new();
        for e in edges {
            let i = c
                .index_of(&e.u)
                .ok_or_else(|| Error::UnknownVertex(e.u.clone()))?;
            let j = c
                .index_of(&e.v)
                .ok_or_else(|| Error::UnknownVertex(e.v.clone()))?;
            if i == j {
                return Err(Error::SelfLoop(e.u.clone()));
            }
            if e.w.sign(Tolerance(0.0)).sign == Sign::Negative {
                return Err(Error::NegativeWeight {
                    u: e.u.clone(),
                    v: e.v.clone(),
                });
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::DuplicateEdge {
                    u: e.u.clone(),
                    v: e.v.clone(),
                });
            }
            c.set(i, j, e.w.clone());
            c.set(j, i, e.w.clone());
        }
        Ok(Self { c })
    }

    /// Wraps a weight matrix after checking symmetry, zero diagonal and
    /// non-negativity (exactly; float callers symmetrize beforehand).
    pub fn from_weights(c: DenseMatrix<T>) -> Result<Self> {
        let n = c.n();
        for i in 0..n {
            if !c.get(i, i).is_exact_zero() {
                return Err(Error::InvalidWeights(format!(
                    "nonzero diagonal at {}",
                    c.labels()[i]
                )));
            }
            for j in 0..n {
                if c.get(i, j) != c.get(j, i) {
                    return Err(Error::InvalidWeights(format!(
                        "asymmetric entry ({}, {})",
                        c.labels()[i],
                        c.labels()[j]
                    )));
                }
                if *c.get(i, j) < T::zero() {
                    return Err(Error::NegativeWeight {
                        u: c.labels()[i].clone(),
                        v: c.labels()[j].clone(),
                    });
                }
            }
        }
        Ok(Self { c })
    }

    pub(crate) fn trusted(c: DenseMatrix<T>) -> Self {
        Self { c }
    }

    pub fn labels(&self) -> &[String] {
        self.c.labels()
    }

    pub fn len(&self) -> usize {
        self.c.n()
    }

    pub fn is_empty(&self) -> bool {
        self.c.n() == 0
    }

    pub fn weights(&self) -> &DenseMatrix<T> {
        &self.c
    }

    pub fn weight(&self, i: usize, j: usize) -> &T {
        self.c.get(i, j)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.c
            .index_of(label)
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    /// Vertex strength `c_x = Σ_y c(x,y)`.
    pub fn strength(&self, x: usize) -> T {
        let mut s = T::zero();
        for w in self.c.row(x) {
            s += w;
        }
        s
    }

    pub fn strengths(&self) -> Vec<T> {
        (0..self.len()).map(|x| self.strength(x)).collect()
    }

    /// Edges `(i, j, w)` with `i < j` and `w != 0`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &T)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| {
            (i + 1..n).filter_map(move |j| {
                let w = self.c.get(i, j);
                (!w.is_exact_zero()).then_some((i, j, w))
            })
        })
    }

    pub fn edge_list(&self) -> Vec<Edge<T>> {
        let l = self.labels();
        self.edges()
            .map(|(i, j, w)| Edge::new(l[i].clone(), l[j].clone(), w.clone()))
            .collect()
    }

    pub fn check_no_isolated(&self) -> Result<()> {
        for x in 0..self.len() {
            if self.strength(x).is_exact_zero() {
                return Err(Error::IsolatedVertex(self.labels()[x].clone()));
            }
        }
        Ok(())
    }

    /// Normalized Laplacian `Δ(x,y) = δ_x(y) − c(x,y)/c_x`.
    pub fn laplacian(&self) -> Result<DenseMatrix<T>> {
        self.check_no_isolated()?;
        let strengths = self.strengths();
        DenseMatrix::from_fn(self.labels().to_vec(), |x, y| {
            let q = self.c.get(x, y).clone() / strengths[x].clone();
            if x == y {
                T::one() - q
            } else {
                -q
            }
        })
    }

    /// Kirchhoff matrix `K(x,x) = c_x`, `K(x,y) = −c(x,y)`.
    pub fn kirchhoff(&self) -> DenseMatrix<T> {
        let strengths = self.strengths();
        DenseMatrix::from_fn(self.labels().to_vec(), |x, y| {
            if x == y {
                strengths[x].clone()
            } else {
                -self.c.get(x, y).clone()
            }
        })
        .expect("labels already validated")
    }

    /// `det K↾(V∖{y})`: the weighted spanning-tree sum.
    pub fn kirchhoff_minor_determinant(&self, y: &str) -> Result<T> {
        let yi = self.index_of(y)?;
        let minor = self.kirchhoff().without(yi);
        Ok(determinant(&minor, Tolerance::DEFAULT).value)
    }

    /// Breadth-first search over edges whose weight is positive (exactly in
    /// rational mode, above `tol` in float mode).
    pub fn is_connected(&self, tol: Tolerance) -> bool {
        let n = self.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if !seen[y] && self.c.get(x, y).sign(tol).sign == Sign::Positive {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == n
    }

    /// `ℰ(u) = ½ Σ_{x,y} c(x,y)(u(x) − u(y))²`.
    pub fn energy(&self, u: &[T]) -> Result<T> {
        self.check_function(u)?;
        let mut acc = T::zero();
        for (i, j, w) in self.edges() {
            let diff = u[i].clone() - u[j].clone();
            acc += &(w.clone() * diff.clone() * diff);
        }
        Ok(acc)
    }

    /// Bilinear energy by polarization, `¼(ℰ(u+v) − ℰ(u−v))`.
    pub fn energy_bilinear(&self, u: &[T], v: &[T]) -> Result<T> {
        self.check_function(u)?;
        self.check_function(v)?;
        let plus: Vec<T> = u.iter().zip(v).map(|(a, b)| a.clone() + b.clone()).collect();
        let minus: Vec<T> = u.iter().zip(v).map(|(a, b)| a.clone() - b.clone()).collect();
        Ok((self.energy(&plus)? - self.energy(&minus)?) * T::from_ratio(1, 4))
    }

    /// Energy of a function given by vertex label.
    pub fn energy_of(&self, u: &BTreeMap<String, T>) -> Result<T> {
        let values = self
            .labels()
            .iter()
            .map(|l| u.get(l).cloned().ok_or_else(|| Error::MissingValue(l.clone())))
            .collect::<Result<Vec<_>>>()?;
        self.energy(&values)
    }

    fn check_function(&self, u: &[T]) -> Result<()> {
        if u.len() < self.len() {
            return Err(Error::MissingValue(self.labels()[u.len()].clone()));
        }
        if u.len() > self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: u.len(),
            });
        }
        Ok(())
    }

    /// All-pairs shortest paths with edge length `1/c(x,y)`.
    pub fn geodesic_metric(&self) -> Result<MetricSpace<T>> {
        let n = self.len();
        let mut dist: Vec<Option<T>> = vec![None; n * n];
        for i in 0..n {
            dist[i * n + i] = Some(T::zero());
        }
        for (i, j, w) in self.edges() {
            let len = w.recip();
            dist[i * n + j] = Some(len.clone());
            dist[j * n + i] = Some(len);
        }
        for k in 0..n {
            for i in 0..n {
                let Some(ik) = dist[i * n + k].clone() else {
                    continue;
                };
                for j in 0..n {
                    let Some(kj) = &dist[k * n + j] else {
                        continue;
                    };
                    let via = ik.clone() + kj.clone();
                    if dist[i * n + j].as_ref().is_none_or(|cur| via < *cur) {
                        dist[i * n + j] = Some(via);
                    }
                }
            }
        }
        let data = dist
            .into_iter()
            .collect::<Option<Vec<T>>>()
            .ok_or(Error::Disconnected)?;
        Ok(MetricSpace::trusted(DenseMatrix::new(
            self.labels().to_vec(),
            data,
        )?))
    }

    /// Subgraph induced on the given vertices.
    pub fn induced(&self, idx: &[usize]) -> Self {
        Self::trusted(self.c.principal(idx))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "labels": self.labels(),
            "edges": self
                .edge_list()
                .into_iter()
                .map(|e| serde_json::json!({"u": e.u, "v": e.v, "w": e.w.to_json()}))
                .collect::<Vec<_>>(),
        })
    }
}
