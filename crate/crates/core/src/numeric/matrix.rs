use std::collections::HashSet;

use super::{Backend, Scalar, Tolerance};
use crate::error::{Error, Result};

/// Square matrix whose rows and columns are indexed by the same vertex labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    labels: Vec<String>,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(labels: Vec<String>, data: Vec<T>) -> Result<Self> {
        check_unique(&labels)?;
        let n = labels.len();
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(Self { labels, data })
    }

    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<T>>) -> Result<Self> {
        let n = labels.len();
        if rows.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rows.len(),
            });
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Self::new(labels, data)
    }

    /// Rows and columns labelled `"0"`, `"1"`, ...
    pub fn unlabeled(rows: Vec<Vec<T>>) -> Result<Self> {
        let labels = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::from_rows(labels, rows)
    }

    pub fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let n = labels.len();
        let data = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Self::new(labels, data)
    }

    pub fn zeros(labels: Vec<String>) -> Result<Self> {
        Self::from_fn(labels, |_, _| T::zero())
    }

    pub fn identity(labels: Vec<String>) -> Result<Self> {
        Self::from_fn(labels, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let n = self.n();
        self.data[i * n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        let n = self.n();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n()).map(|i| self.row(i).to_vec()).collect()
    }

    /// Principal submatrix on the given indices, in the given order.
    pub fn principal(&self, idx: &[usize]) -> Self {
        let labels = idx.iter().map(|&i| self.labels[i].clone()).collect();
        let data = idx
            .iter()
            .flat_map(|&i| idx.iter().map(move |&j| self.get(i, j).clone()))
            .collect();
        Self { labels, data }
    }

    /// Principal submatrix with index `k` deleted.
    pub fn without(&self, k: usize) -> Self {
        let idx: Vec<usize> = (0..self.n()).filter(|&i| i != k).collect();
        self.principal(&idx)
    }

    pub fn transpose(&self) -> Self {
        let n = self.n();
        let data = (0..n * n).map(|k| self.get(k % n, k / n).clone()).collect();
        Self {
            labels: self.labels.clone(),
            data,
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        Ok((0..n)
            .map(|i| {
                let mut acc = T::zero();
                for (a, b) in self.row(i).iter().zip(x) {
                    if !a.is_exact_zero() {
                        acc += &(a.clone() * b.clone());
                    }
                }
                acc
            })
            .collect())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let n = self.n();
        if other.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: other.n(),
            });
        }
        Self::from_fn(self.labels.clone(), |i, j| {
            let mut acc = T::zero();
            for k in 0..n {
                acc += &(self.get(i, k).clone() * other.get(k, j).clone());
            }
            acc
        })
    }

    /// Largest |a(i,j) - a(j,i)|, as f64.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let d = (self.get(i, j).clone() - self.get(j, i).clone()).abs().to_f64();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_symmetric(&self, tol: Tolerance) -> bool {
        let n = self.n();
        (0..n).all(|i| (i + 1..n).all(|j| self.get(i, j).approx_eq(self.get(j, i), tol)))
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.abs().to_f64())
            .fold(0.0, f64::max)
    }

    pub fn relabel(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: labels.len(),
            });
        }
        check_unique(&labels)?;
        self.labels = labels;
        Ok(self)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "labels": self.labels,
            "rows": self
                .rows()
                .iter()
                .map(|r| r.iter().map(Scalar::to_json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

pub(crate) fn check_unique(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

/// Row-pivoted LU factorization `P·A = L·U`, packed in one matrix.
///
/// Rational mode pivots on the first nonzero entry and is exact. Float mode
/// uses partial pivoting; a pivot counts as zero when it is below
/// `tolerance · max|a_ij|`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    odd: bool,
    singular_at: Option<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &DenseMatrix<T>, tol: Tolerance) -> Self {
        let n = a.n();
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        let mut singular_at = None;
        let threshold = tol.0 * a.max_abs();

        for k in 0..n {
            let pivot_row = match T::BACKEND {
                Backend::Rational => (k..n).find(|&r| !lu[r * n + k].is_exact_zero()),
                Backend::Float => {
                    let (best, mag) = (k..n)
                        .map(|r| (r, lu[r * n + k].abs().to_f64()))
                        .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
                    (mag > threshold && mag > 0.0).then_some(best)
                }
            };
            let Some(p) = pivot_row else {
                singular_at.get_or_insert(k);
                continue;
            };
            if p != k {
                for j in 0..n {
                    lu.swap(p * n + j, k * n + j);
                }
                perm.swap(p, k);
                odd = !odd;
            }
            let pivot = lu[k * n + k].clone();
            for r in k + 1..n {
                if lu[r * n + k].is_exact_zero() {
                    continue;
                }
                let mut factor = lu[r * n + k].clone();
                factor /= &pivot;
                for j in k + 1..n {
                    if lu[k * n + j].is_exact_zero() {
                        continue;
                    }
                    let delta = factor.clone() * lu[k * n + j].clone();
                    lu[r * n + j] -= &delta;
                }
                lu[r * n + k] = factor;
            }
        }
        Self {
            n,
            lu,
            perm,
            odd,
            singular_at,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular_at.is_some()
    }

    pub fn determinant(&self) -> T {
        if self.singular_at.is_some() && T::BACKEND == Backend::Rational {
            return T::zero();
        }
        let mut det = T::one();
        for k in 0..self.n {
            det *= &self.lu[k * self.n + k];
        }
        if self.odd {
            -det
        } else {
            det
        }
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        if let Some(pivot) = self.singular_at {
            return Err(Error::SingularMatrix { pivot });
        }
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let l = &self.lu[i * n + j];
                if !l.is_exact_zero() && !y[j].is_exact_zero() {
                    let delta = l.clone() * y[j].clone();
                    y[i] -= &delta;
                }
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = &self.lu[i * n + j];
                if !u.is_exact_zero() && !y[j].is_exact_zero() {
                    let delta = u.clone() * y[j].clone();
                    y[i] -= &delta;
                }
            }
            let d = self.lu[i * n + i].clone();
            y[i] /= &d;
        }
        Ok(y)
    }
}

/// Solution of `A·x = b` with the infinity-norm residual (zero in rational mode).
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub x: Vec<T>,
    pub residual: f64,
}

pub fn solve_linear_system<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &[T],
    tol: Tolerance,
) -> Result<Solution<T>> {
    if b.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.len(),
        });
    }
    let x = Lu::factor(a, tol).solve(b)?;
    let residual = residual_inf(a, &x, b)?;
    Ok(Solution { x, residual })
}

pub(crate) fn residual_inf<T: Scalar>(a: &DenseMatrix<T>, x: &[T], b: &[T]) -> Result<f64> {
    Ok(a.mul_vec(x)?
        .into_iter()
        .zip(b)
        .map(|(ax, bi)| (ax - bi.clone()).abs().to_f64())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Determinant<T> {
    pub value: T,
    /// 1-norm condition estimate, float backend only (infinite when singular).
    pub condition: Option<f64>,
}

pub fn determinant<T: Scalar>(a: &DenseMatrix<T>, tol: Tolerance) -> Determinant<T> {
    let lu = Lu::factor(a, tol);
    let value = lu.determinant();
    let condition = match T::BACKEND {
        Backend::Rational => None,
        Backend::Float => Some(condition_1norm(a, &lu)),
    };
    Determinant { value, condition }
}

fn condition_1norm<T: Scalar>(a: &DenseMatrix<T>, lu: &Lu<T>) -> f64 {
    let n = a.n();
    if n == 0 {
        return 1.0;
    }
    if lu.is_singular() {
        return f64::INFINITY;
    }
    let col_norm = |col: &dyn Fn(usize) -> f64| -> f64 { (0..n).map(col).sum() };
    let norm_a = (0..n)
        .map(|j| col_norm(&|i| a.get(i, j).abs().to_f64()))
        .fold(0.0, f64::max);
    let mut norm_inv = 0.0f64;
    for j in 0..n {
        let e: Vec<T> = (0..n)
            .map(|i| if i == j { T::one() } else { T::zero() })
            .collect();
        let Ok(col) = lu.solve(&e) else {
            return f64::INFINITY;
        };
        norm_inv = norm_inv.max(col.iter().map(|v| v.abs().to_f64()).sum());
    }
    norm_a * norm_inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn qm(rows: &[&[i64]], den: i64) -> DenseMatrix<Rational> {
        DenseMatrix::unlabeled(
            rows.iter()
                .map(|r| r.iter().map(|&v| q(v, den)).collect())
                .collect(),
        )
        .unwrap()
    }

    /// Cofactor expansion along the first row.
    fn cofactor_det(m: &DenseMatrix<Rational>) -> Rational {
        let n = m.n();
        if n == 0 {
            return q(1, 1);
        }
        if n == 1 {
            return m.get(0, 0).clone();
        }
        let mut acc = q(0, 1);
        for j in 0..n {
            let rows: Vec<usize> = (1..n).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
            let minor = DenseMatrix::unlabeled(
                rows.iter()
                    .map(|&r| cols.iter().map(|&c| m.get(r, c).clone()).collect())
                    .collect(),
            )
            .unwrap();
            let term = m.get(0, j).clone() * cofactor_det(&minor);
            if j % 2 == 0 {
                acc += &term;
            } else {
                acc -= &term;
            }
        }
        acc
    }

    #[test]
    fn identity_solve_and_det() {
        let i3 = DenseMatrix::<Rational>::identity(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let b = vec![q(1, 1), q(2, 1), q(3, 1)];
        let s = solve_linear_system(&i3, &b, Tolerance::DEFAULT).unwrap();
        assert_eq!(s.x, b);
        assert_eq!(s.residual, 0.0);
        let i4 = DenseMatrix::<Rational>::unlabeled(
            (0..4)
                .map(|i| (0..4).map(|j| q((i == j) as i64, 1)).collect())
                .collect(),
        )
        .unwrap();
        assert_eq!(determinant(&i4, Tolerance::DEFAULT).value, q(1, 1));
    }

    #[test]
    fn negative_example_defect_matrix() {
        let rows: &[&[i64]] = &[&[23, 10, 20], &[10, 36, 20], &[20, 20, 40]];
        let m130 = qm(rows, 130);
        assert_eq!(determinant(&m130, Tolerance::DEFAULT).value, q(26, 4225));
        // the metric scaled by 1/260 has defect matrix scaled by 1/260
        let m260 = qm(rows, 260);
        assert_eq!(determinant(&m260, Tolerance::DEFAULT).value, q(1, 1300));
        let ones = vec![q(1, 1); 3];
        let s = solve_linear_system(&m260, &ones, Tolerance::DEFAULT).unwrap();
        assert_eq!(s.x, vec![q(10, 1), q(5, 1), q(-1, 1)]);
        let s = solve_linear_system(&m130, &ones, Tolerance::DEFAULT).unwrap();
        assert_eq!(s.x, vec![q(5, 1), q(5, 2), q(-1, 2)]);
    }

    #[test]
    fn cycle_defect_matrix_is_singular() {
        let m = qm(&[&[1, 1, 0], &[1, 2, 1], &[0, 1, 1]], 1);
        assert_eq!(determinant(&m, Tolerance::DEFAULT).value, q(0, 1));
        let err = solve_linear_system(&m, &[q(1, 1), q(1, 1), q(1, 1)], Tolerance::DEFAULT);
        assert!(matches!(err, Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn float_singular_below_tolerance() {
        let m = DenseMatrix::<f64>::unlabeled(vec![
            vec![1.0, 1.0, 0.0],
            vec![1.0, 2.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ])
        .unwrap();
        let err = solve_linear_system(&m, &[1.0, 1.0, 1.0], Tolerance::DEFAULT);
        assert!(matches!(err, Err(Error::SingularMatrix { .. })));
        let d = determinant(&m, Tolerance::DEFAULT);
        assert!(d.value.abs() < 1e-12);
        assert_eq!(d.condition, Some(f64::INFINITY));
    }

    #[test]
    fn float_condition_estimate() {
        let m = DenseMatrix::<f64>::unlabeled(vec![vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let d = determinant(&m, Tolerance::DEFAULT);
        assert!((d.value - 1.0).abs() < 1e-15);
        assert!((d.condition.unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let m = qm(&[&[1, 0], &[0, 1]], 1);
        assert!(matches!(
            solve_linear_system(&m, &[q(1, 1)], Tolerance::DEFAULT),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(DenseMatrix::<f64>::unlabeled(vec![vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn duplicate_labels_rejected() {
        let e = DenseMatrix::<f64>::zeros(vec!["a".into(), "a".into()]);
        assert!(matches!(e, Err(Error::DuplicateLabel(_))));
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-6i64..=6, 1i64..=4).prop_map(|(n, d)| q(n, d))
    }

    fn square(n: usize) -> impl Strategy<Value = DenseMatrix<Rational>> {
        proptest::collection::vec(small_rational(), n * n).prop_map(move |v| {
            DenseMatrix::unlabeled(v.chunks(n).map(<[Rational]>::to_vec).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn determinant_matches_cofactor_expansion(m in (1usize..=5).prop_flat_map(square)) {
            prop_assert_eq!(determinant(&m, Tolerance::DEFAULT).value, cofactor_det(&m));
        }

        #[test]
        fn solve_then_multiply_is_exact(
            m in (1usize..=6).prop_flat_map(square),
            seed in proptest::collection::vec(small_rational(), 6),
        ) {
            let b: Vec<Rational> = seed.into_iter().take(m.n()).collect();
            match solve_linear_system(&m, &b, Tolerance::DEFAULT) {
                Ok(s) => {
                    prop_assert_eq!(m.mul_vec(&s.x).unwrap(), b);
                    prop_assert_eq!(s.residual, 0.0);
                }
                Err(Error::SingularMatrix { .. }) => {
                    prop_assert_eq!(cofactor_det(&m), q(0, 1));
                }
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }

        #[test]
        fn row_permutation_flips_sign_by_parity(
            m in (2usize..=5).prop_flat_map(square),
            swaps in proptest::collection::vec((0usize..5, 0usize..5), 0..6),
        ) {
            let n = m.n();
            let mut order: Vec<usize> = (0..n).collect();
            let mut parity = false;
            for (a, b) in swaps {
                let (a, b) = (a % n, b % n);
                if a != b {
                    order.swap(a, b);
                    parity = !parity;
                }
            }
            let permuted = DenseMatrix::unlabeled(
                order.iter().map(|&r| m.row(r).to_vec()).collect(),
            ).unwrap();
            let d = determinant(&m, Tolerance::DEFAULT).value;
            let dp = determinant(&permuted, Tolerance::DEFAULT).value;
            prop_assert_eq!(dp, if parity { -d } else { d });
        }
    }

    #[test]
    fn spd_construct_then_solve() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            // A = B·Bᵀ + I is symmetric positive definite
            let n = 6;
            let b: Vec<Vec<Rational>> = (0..n)
                .map(|_| (0..n).map(|_| q(rng.gen_range(-5..=5), rng.gen_range(1..=3))).collect())
                .collect();
            let a = DenseMatrix::unlabeled(
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let mut s: Rational = (0..n).map(|k| b[i][k].clone() * b[j][k].clone()).sum();
                                if i == j {
                                    s += &q(1, 1);
                                }
                                s
                            })
                            .collect()
                    })
                    .collect(),
            )
            .unwrap();
            let x_star: Vec<Rational> = (0..n).map(|_| q(rng.gen_range(-9..=9), rng.gen_range(1..=7))).collect();
            let rhs = a.mul_vec(&x_star).unwrap();
            let s = solve_linear_system(&a, &rhs, Tolerance::DEFAULT).unwrap();
            assert_eq!(s.x, x_star);
        }
    }

}
