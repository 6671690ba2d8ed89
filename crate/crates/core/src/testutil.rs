use proptest::prelude::*;

use crate::graph::WeightedGraph;
use crate::numeric::{DenseMatrix, Rational, Scalar};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

/// Connected graphs on `min..=max` vertices: a random spanning path plus
/// random extra edges, weights in `{1/3, …, 3}`.
pub fn connected_graph(min: usize, max: usize) -> impl Strategy<Value = WeightedGraph<Rational>> {
    (min..=max).prop_flat_map(|n| {
        (
            Just(n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            proptest::collection::vec((1i64..=3, 1i64..=3), n - 1),
            proptest::collection::vec((0i64..=3, 1i64..=3), n * (n - 1) / 2),
        )
            .prop_map(|(n, perm, path, extra)| {
                let mut c = DenseMatrix::zeros(labels(n)).unwrap();
                let mut k = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        let w = q(extra[k].0, extra[k].1);
                        c.set(i, j, w.clone());
                        c.set(j, i, w);
                        k += 1;
                    }
                }
                for (s, w) in perm.windows(2).zip(path) {
                    let (i, j) = (s[0], s[1]);
                    let w = c.get(i, j).clone() + q(w.0, w.1);
                    c.set(i, j, w.clone());
                    c.set(j, i, w);
                }
                WeightedGraph::from_weights(c).unwrap()
            })
    })
}
