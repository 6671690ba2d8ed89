//! Built-in graphs and metrics used as worked examples and as exhaustion
//! sources for infinite spaces.
//!
//! Every family lists its vertices in a canonical order, so the first `m`
//! labels of a larger instance are the first `m` labels of every smaller
//! one.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ers::effective_resistance;
use crate::graph::{Edge, WeightedGraph};
use crate::metric::{builtin_metric, MetricFamily, MetricSpace};
use crate::numeric::{Scalar, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Metric with all distances 1 on `1..=n`.
    Discrete,
    /// Metric of the unit star with hub `1` and leaves `2..=n`.
    Star,
    /// `v0..vn` with `c(v0,vk) = 2^{1-k}` for `k < n`, `c(v0,vn) = 1` and
    /// `c(vk,vk+1) = 2^{k-1} − 1`.
    Tightness,
    /// Path `−n..n` with `c(k,k+1) = 2^{min(|k|,|k+1|)}`.
    TwoRay,
    /// [`Family::TwoRay`] plus an edge of weight `2^{n-2}` between `−n`
    /// and `n`.
    TwoRayBridge,
    /// Vertices `B`, `T` both joined to `0`, and a ray `0, 1, …, n` with
    /// `c(k,k+1) = 2^k`.
    Transient,
    /// Unit path `0..n`.
    Path,
    /// Unit cycle `v0..v(n-1)`.
    Cycle,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Discrete,
        Family::Star,
        Family::Tightness,
        Family::TwoRay,
        Family::TwoRayBridge,
        Family::Transient,
        Family::Path,
        Family::Cycle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Discrete => "discrete",
            Family::Star => "star",
            Family::Tightness => "tightness",
            Family::TwoRay => "two-ray",
            Family::TwoRayBridge => "two-ray-bridge",
            Family::Transient => "transient",
            Family::Path => "path",
            Family::Cycle => "cycle",
        }
    }

    /// Smallest admissible parameter.
    pub fn min_parameter(self) -> usize {
        match self {
            Family::Discrete | Family::Star => 2,
            Family::Cycle => 3,
            Family::Tightness | Family::TwoRay | Family::Path => 1,
            Family::TwoRayBridge => 2,
            Family::Transient => 0,
        }
    }

    /// Largest admissible parameter; exact weights grow like `2^n`.
    pub fn max_parameter(self) -> usize {
        match self {
            Family::Discrete | Family::Star | Family::Path | Family::Cycle => 4096,
            _ => 1000,
        }
    }

    /// Number of vertices of the instance with parameter `n`.
    pub fn vertex_count(self, n: usize) -> usize {
        match self {
            Family::Discrete | Family::Star | Family::Cycle => n,
            Family::Tightness | Family::Path => n + 1,
            Family::TwoRay | Family::TwoRayBridge => 2 * n + 1,
            Family::Transient => n + 3,
        }
    }

    /// Whether larger instances restrict to smaller ones, so that the
    /// family defines one infinite resistance metric.
    pub fn is_nested(self) -> bool {
        !matches!(self, Family::Cycle)
    }

    pub fn build<T: Scalar>(self, n: usize) -> Result<Instance<T>> {
        if n < self.min_parameter() || n > self.max_parameter() {
            return Err(Error::BadParameter(format!(
                "{} needs a parameter in {}..={}, got {n}",
                self.name(),
                self.min_parameter(),
                self.max_parameter()
            )));
        }
        Ok(match self {
            Family::Discrete => Instance::Metric(builtin_metric(MetricFamily::Discrete(n))?),
            Family::Star => Instance::Metric(builtin_metric(MetricFamily::Star(n))?),
            Family::Tightness => Instance::Graph(tightness(n)?),
            Family::TwoRay => Instance::Graph(two_ray(n, false)?),
            Family::TwoRayBridge => Instance::Graph(two_ray(n, true)?),
            Family::Transient => Instance::Graph(transient(n)?),
            Family::Path => Instance::Graph(path(n)?),
            Family::Cycle => Instance::Graph(cycle(n)?),
        })
    }

    /// The metric on the first `size` canonical vertices: the family's own
    /// metric, or the effective resistance of a large enough instance.
    pub fn metric_prefix<T: Scalar>(self, size: usize, tol: Tolerance) -> Result<MetricSpace<T>> {
        if !self.is_nested() {
            return Err(Error::BadParameter(format!(
                "{} instances are not nested",
                self.name()
            )));
        }
        let n = (self.min_parameter()..=self.max_parameter())
            .find(|&n| self.vertex_count(n) >= size)
            .ok_or_else(|| Error::BadParameter(format!("{} has no instance of size {size}", self.name())))?;
        self.build::<T>(n)?.metric(tol)?.prefix(size)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance<T> {
    Graph(WeightedGraph<T>),
    Metric(MetricSpace<T>),
}

impl<T: Scalar> Instance<T> {
    pub fn labels(&self) -> &[String] {
        match self {
            Instance::Graph(g) => g.labels(),
            Instance::Metric(m) => m.labels(),
        }
    }

    /// The metric itself, or the effective resistance of the graph.
    pub fn metric(&self, tol: Tolerance) -> Result<MetricSpace<T>> {
        match self {
            Instance::Graph(g) => effective_resistance(g, tol)?.to_metric(tol),
            Instance::Metric(m) => Ok(m.clone()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Instance::Graph(g) => g.to_json(),
            Instance::Metric(m) => m.to_json(),
        }
    }
}

pub fn tightness<T: Scalar>(n: usize) -> Result<WeightedGraph<T>> {
    let labels: Vec<String> = (0..=n).map(|k| format!("v{k}")).collect();
    let mut edges = Vec::with_capacity(2 * n);
    for k in 1..=n {
        let w = if k < n { T::pow2(1 - k as i32) } else { T::one() };
        edges.push(Edge::new("v0", format!("v{k}"), w));
    }
    for k in 2..n {
        edges.push(Edge::new(
            format!("v{k}"),
            format!("v{}", k + 1),
            T::pow2(k as i32 - 1) - T::one(),
        ));
    }
    WeightedGraph::build(labels, &edges)
}

/// Labels `0, 1, −1, 2, −2, …, n, −n`.
pub fn two_ray_labels(n: usize) -> Vec<String> {
    let mut l = vec!["0".to_string()];
    for k in 1..=n {
        l.push(k.to_string());
        l.push(format!("-{k}"));
    }
    l
}

pub fn two_ray<T: Scalar>(n: usize, bridge: bool) -> Result<WeightedGraph<T>> {
    let mut edges = Vec::with_capacity(2 * n + 1);
    for k in 0..n {
        let w = T::pow2(k as i32);
        let (a, b) = (k.to_string(), (k + 1).to_string());
        let neg = |s: &str| if s == "0" { s.to_string() } else { format!("-{s}") };
        edges.push(Edge::new(a.clone(), b.clone(), w.clone()));
        edges.push(Edge::new(neg(&a), neg(&b), w));
    }
    if bridge {
        edges.push(Edge::new(format!("-{n}"), n.to_string(), T::pow2(n as i32 - 2)));
    }
    WeightedGraph::build(two_ray_labels(n), &edges)
}

pub fn transient<T: Scalar>(depth: usize) -> Result<WeightedGraph<T>> {
    let mut labels = vec!["B".to_string(), "T".to_string()];
    labels.extend((0..=depth).map(|k| k.to_string()));
    let mut edges = vec![Edge::new("B", "0", T::one()), Edge::new("T", "0", T::one())];
    edges.extend((0..depth).map(|k| Edge::new(k.to_string(), (k + 1).to_string(), T::pow2(k as i32))));
    WeightedGraph::build(labels, &edges)
}

pub fn path<T: Scalar>(n: usize) -> Result<WeightedGraph<T>> {
    let labels: Vec<String> = (0..=n).map(|k| k.to_string()).collect();
    let edges: Vec<_> = (0..n)
        .map(|k| Edge::new(k.to_string(), (k + 1).to_string(), T::one()))
        .collect();
    WeightedGraph::build(labels, &edges)
}

pub fn cycle<T: Scalar>(n: usize) -> Result<WeightedGraph<T>> {
    let labels: Vec<String> = (0..n).map(|k| format!("v{k}")).collect();
    let edges: Vec<_> = (0..n)
        .map(|k| Edge::new(labels[k].clone(), labels[(k + 1) % n].clone(), T::one()))
        .collect();
    WeightedGraph::build(labels.clone(), &edges)
}

/// Named fixed examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    /// Geodesic metric of the unit 4-cycle; not an effective resistance.
    CycleGeodesic,
    /// A 4-point metric whose recovered weights include `−1`.
    NegativeWitness,
}

impl Fixture {
    pub const ALL: [Fixture; 2] = [Fixture::CycleGeodesic, Fixture::NegativeWitness];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::CycleGeodesic => "c4-geodesic",
            Fixture::NegativeWitness => "negative-witness",
        }
    }

    pub fn metric<T: Scalar>(self) -> Result<MetricSpace<T>> {
        let (rows, den): ([[i64; 4]; 4], i64) = match self {
            Fixture::CycleGeodesic => ([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]], 1),
            Fixture::NegativeWitness => (
                [[0, 23, 36, 40], [23, 0, 39, 23], [36, 39, 0, 36], [40, 23, 36, 0]],
                260,
            ),
        };
        MetricSpace::validate(
            (0..4).map(|k| format!("v{k}")).collect(),
            rows.iter()
                .map(|r| r.iter().map(|&v| T::from_ratio(v, den)).collect())
                .collect(),
            Tolerance::DEFAULT,
        )
    }
}

impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Fixture::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// Looks up a family by name and builds the instance with parameter `n`.
pub fn builtin_family<T: Scalar>(name: &str, n: usize) -> Result<Instance<T>> {
    name.parse::<Family>()?.build(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;
    use crate::testutil::q;

    fn weight(g: &WeightedGraph<Rational>, a: &str, b: &str) -> Rational {
        g.weight(g.index_of(a).unwrap(), g.index_of(b).unwrap()).clone()
    }

    #[test]
    fn tightness_four() {
        let g = tightness::<Rational>(4).unwrap();
        let expect = [
            ("v0", "v1", q(1, 1)),
            ("v0", "v2", q(1, 2)),
            ("v0", "v3", q(1, 4)),
            ("v0", "v4", q(1, 1)),
            ("v1", "v2", q(0, 1)),
            ("v2", "v3", q(1, 1)),
            ("v3", "v4", q(3, 1)),
        ];
        for (a, b, w) in expect {
            assert_eq!(weight(&g, a, b), w, "{a}{b}");
        }
        assert_eq!(g.edges().count(), 6);
        assert_eq!(g.strength(0), q(11, 4));
    }

    #[test]
    fn bridge_weight() {
        for n in 2..8 {
            let h = two_ray::<Rational>(n, true).unwrap();
            assert_eq!(weight(&h, &format!("-{n}"), &n.to_string()), Rational::pow2(n as i32 - 2));
            assert_eq!(h.edges().count(), 2 * n + 1);
        }
        let g = two_ray::<Rational>(3, false).unwrap();
        assert_eq!(g.labels(), ["0", "1", "-1", "2", "-2", "3", "-3"]);
        assert_eq!(weight(&g, "-2", "-3"), q(4, 1));
        assert_eq!(weight(&g, "0", "-1"), q(1, 1));
    }

    #[test]
    fn transient_depth_four() {
        let g = transient::<Rational>(4).unwrap();
        let got: Vec<_> = g.edge_list().into_iter().map(|e| (e.u, e.v, e.w)).collect();
        let expect = [
            ("B", "0", 1),
            ("T", "0", 1),
            ("0", "1", 1),
            ("1", "2", 2),
            ("2", "3", 4),
            ("3", "4", 8),
        ];
        assert_eq!(got.len(), expect.len());
        for (a, b, w) in expect {
            assert!(got.contains(&(a.to_string(), b.to_string(), q(w, 1))), "{a}{b}");
        }
    }

    #[test]
    fn names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            let inst = f.build::<Rational>(f.min_parameter().max(2)).unwrap();
            assert_eq!(inst.labels().len(), f.vertex_count(f.min_parameter().max(2)));
        }
        assert!(matches!("lattice".parse::<Family>(), Err(Error::UnknownFamily(_))));
        assert!(matches!(Family::Star.build::<Rational>(1), Err(Error::BadParameter(_))));
        assert!(matches!(builtin_family::<f64>("two-ray-bridge", 1), Err(Error::BadParameter(_))));
    }

    #[test]
    fn nested_prefixes_agree() {
        let tol = Tolerance::DEFAULT;
        for f in Family::ALL.into_iter().filter(|f| f.is_nested()) {
            let big = f.metric_prefix::<Rational>(9, tol).unwrap();
            for size in 2..9 {
                assert_eq!(big.prefix(size).unwrap(), f.metric_prefix(size, tol).unwrap(), "{f} {size}");
            }
        }
        assert!(Family::Cycle.metric_prefix::<Rational>(4, tol).is_err());
    }

    #[test]
    fn fixtures_are_metrics() {
        for f in Fixture::ALL {
            assert_eq!(f.metric::<Rational>().unwrap().len(), 4);
            assert_eq!(f.name().parse::<Fixture>().unwrap(), f);
        }
    }
}
