//! Random walks on weighted graphs: exact hitting quantities from absorbing
//! chains, seeded Monte-Carlo estimates of resistance, and the geometric
//! law of the number of visits before hitting a target.
//!
//! The walk moves from `y` to `z` with probability `c(y,z)/c_y`. For
//! `x ≠ y`, `Φ^{xy}` counts visits to `x` (time 0 included) strictly before
//! the first visit to `y`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::ers::effective_resistance;
use crate::graph::WeightedGraph;
use crate::limit::{exhaustion_traces, limit_graph_estimate, ConditionC, ExhaustionPlan, LimitOptions, MetricSource};
use crate::numeric::{Backend, DenseMatrix, Lu, Scalar, Sign, Tolerance};

/// Default per-walk step cap.
pub const DEFAULT_STEP_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCause {
    HitTarget,
    StepCap,
}

impl StopCause {
    pub fn name(self) -> &'static str {
        match self {
            StopCause::HitTarget => "hit_target",
            StopCause::StepCap => "step_cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    pub labels: Vec<String>,
    pub start: usize,
    /// Visited vertices, the start included.
    pub steps: Vec<usize>,
    pub stop: StopCause,
}

impl WalkTrace {
    pub fn path(&self) -> Vec<&str> {
        self.steps.iter().map(|&i| self.labels[i].as_str()).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "start": self.labels[self.start],
            "steps": self.path(),
            "stop": self.stop.name(),
        })
    }
}

/// Precomputed transition tables.
struct Sampler {
    neighbours: Vec<Vec<usize>>,
    choose: Vec<WeightedIndex<f64>>,
}

impl Sampler {
    fn new<T: Scalar>(g: &WeightedGraph<T>) -> Result<Self> {
        g.check_no_isolated()?;
        let n = g.len();
        let mut neighbours = Vec::with_capacity(n);
        let mut choose = Vec::with_capacity(n);
        for x in 0..n {
            let (nb, w): (Vec<usize>, Vec<f64>) = (0..n)
                .filter(|&z| !g.weight(x, z).is_exact_zero())
                .map(|z| (z, g.weight(x, z).to_f64()))
                .unzip();
            let dist = WeightedIndex::new(&w)
                .map_err(|_| Error::IsolatedVertex(g.labels()[x].clone()))?;
            neighbours.push(nb);
            choose.push(dist);
        }
        Ok(Self { neighbours, choose })
    }

    fn step<R: Rng>(&self, rng: &mut R, x: usize) -> usize {
        self.neighbours[x][self.choose[x].sample(rng)]
    }

    /// Visits to `x` before hitting `y`, starting at `x`; `None` when the
    /// cap is reached first.
    fn phi<R: Rng>(&self, rng: &mut R, x: usize, y: usize, cap: u64) -> Option<u64> {
        let mut at = x;
        let mut visits = 1;
        for _ in 0..cap {
            at = self.step(rng, at);
            if at == y {
                return Some(visits);
            }
            if at == x {
                visits += 1;
            }
        }
        None
    }
}

/// Random stream for walk number `index` under `seed`.
fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Samples one trajectory from `x` until `target` or `cap` steps.
pub fn simulate_walk<T: Scalar>(
    g: &WeightedGraph<T>,
    x: &str,
    target: Option<&str>,
    cap: u64,
    seed: u64,
) -> Result<WalkTrace> {
    if cap == 0 {
        return Err(Error::BadParameter("step cap must be at least 1".into()));
    }
    let start = g.index_of(x)?;
    let target = target.map(|t| g.index_of(t)).transpose()?;
    let sampler = Sampler::new(g)?;
    let mut rng = stream(seed, 0);
    let mut steps = vec![start];
    let mut at = start;
    let mut stop = StopCause::StepCap;
    for _ in 0..cap {
        at = sampler.step(&mut rng, at);
        steps.push(at);
        if Some(at) == target {
            stop = StopCause::HitTarget;
            break;
        }
    }
    Ok(WalkTrace {
        labels: g.labels().to_vec(),
        start,
        steps,
        stop,
    })
}

fn require_pair<T: Scalar>(g: &WeightedGraph<T>, x: &str, y: &str, tol: Tolerance) -> Result<(usize, usize)> {
    let (xi, yi) = (g.index_of(x)?, g.index_of(y)?);
    if xi == yi {
        return Err(Error::SameVertex(x.to_string()));
    }
    g.check_no_isolated().map_err(|_| Error::Disconnected)?;
    if !g.is_connected(tol) {
        return Err(Error::Disconnected);
    }
    Ok((xi, yi))
}

/// `h(z) = P_z[hit target before the other absorbing vertices]` for every
/// vertex; the absorbing vertices get 1 (target) or 0.
fn absorption<T: Scalar>(g: &WeightedGraph<T>, absorbing: &[usize], target: usize, tol: Tolerance) -> Result<Vec<T>> {
    let n = g.len();
    let free: Vec<usize> = (0..n).filter(|z| !absorbing.contains(z)).collect();
    let strengths = g.strengths();
    let mut h: Vec<T> = (0..n)
        .map(|z| if z == target { T::one() } else { T::zero() })
        .collect();
    if free.is_empty() {
        return Ok(h);
    }
    let labels: Vec<String> = free.iter().map(|&z| g.labels()[z].clone()).collect();
    let a = DenseMatrix::from_fn(labels, |i, j| {
        let q = g.weight(free[i], free[j]).clone() / strengths[free[i]].clone();
        if i == j {
            T::one() - q
        } else {
            -q
        }
    })?;
    let rhs: Vec<T> = free
        .iter()
        .map(|&z| g.weight(z, target).clone() / strengths[z].clone())
        .collect();
    let sol = Lu::factor(&a, tol).solve(&rhs)?;
    for (k, &z) in free.iter().enumerate() {
        h[z] = sol[k].clone();
    }
    Ok(h)
}

/// One step from `x`, then absorb: `Σ_z P(x,z) h(z)`.
fn first_step<T: Scalar>(g: &WeightedGraph<T>, x: usize, h: &[T]) -> T {
    let cx = g.strength(x);
    let mut acc = T::zero();
    for (z, hz) in h.iter().enumerate() {
        if z != x {
            acc += &(g.weight(x, z).clone() * hz.clone() / cx.clone());
        }
    }
    acc
}

/// `p = P_x[τ_x⁺ < τ_y]`.
pub fn exact_return_vs_hit<T: Scalar>(g: &WeightedGraph<T>, x: &str, y: &str, tol: Tolerance) -> Result<T> {
    let (xi, yi) = require_pair(g, x, y, tol)?;
    let h = absorption(g, &[xi, yi], xi, tol)?;
    Ok(first_step(g, xi, &h))
}

/// Where a walk from `x` ends up first when `y` and a frontier are
/// absorbing. A killed frontier stands in for escape to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeReport<T> {
    /// `P_x[τ_y < τ_x⁺ ∧ τ_F]`.
    pub hit_first: T,
    /// `P_x[τ_x⁺ < τ_y ∧ τ_F]`.
    pub return_first: T,
    /// `P_x[τ_F < τ_x⁺ ∧ τ_y]`.
    pub escape_first: T,
}

impl<T: Scalar> EscapeReport<T> {
    /// `P_x[τ_y ≤ τ_x⁺]` once escape means neither time is finite.
    pub fn hit_or_escape(&self) -> T {
        self.hit_first.clone() + self.escape_first.clone()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "hit_first": self.hit_first.to_json(),
            "return_first": self.return_first.to_json(),
            "escape_first": self.escape_first.to_json(),
            "hit_or_escape": self.hit_or_escape().to_json(),
        })
    }
}

pub fn exact_escape_probabilities<T: Scalar>(
    g: &WeightedGraph<T>,
    x: &str,
    y: &str,
    frontier: &[String],
    tol: Tolerance,
) -> Result<EscapeReport<T>> {
    let (xi, yi) = require_pair(g, x, y, tol)?;
    let f = frontier
        .iter()
        .map(|l| g.index_of(l))
        .collect::<Result<Vec<_>>>()?;
    if f.contains(&xi) || f.contains(&yi) {
        return Err(Error::BadParameter("frontier must avoid both endpoints".into()));
    }
    let mut absorbing = vec![xi, yi];
    absorbing.extend(&f);
    let hit = first_step(g, xi, &absorption(g, &absorbing, yi, tol)?);
    let back = first_step(g, xi, &absorption(g, &absorbing, xi, tol)?);
    let escape = T::one() - hit.clone() - back.clone();
    Ok(EscapeReport {
        hit_first: hit,
        return_first: back,
        escape_first: escape,
    })
}

fn expected_from_p<T: Scalar>(p: T, tol: Tolerance) -> Result<T> {
    let gap = T::one() - p;
    let degenerate = match T::BACKEND {
        Backend::Rational => gap.is_exact_zero(),
        Backend::Float => gap.sign(tol).sign != Sign::Positive,
    };
    if degenerate {
        return Err(Error::PEqualsOne);
    }
    Ok(gap.recip())
}

/// `E_x[Φ^{xy}] = 1/(1 − p)`.
pub fn exact_expected_visits<T: Scalar>(g: &WeightedGraph<T>, x: &str, y: &str, tol: Tolerance) -> Result<T> {
    expected_from_p(exact_return_vs_hit(g, x, y, tol)?, tol)
}

/// `E_x[visits to z before τ_y]` for every `z`, from row `x` of the
/// fundamental matrix of the chain absorbed at `y`.
pub fn expected_visits_row<T: Scalar>(
    g: &WeightedGraph<T>,
    x: &str,
    y: &str,
    tol: Tolerance,
) -> Result<Vec<(String, T)>> {
    let (xi, yi) = require_pair(g, x, y, tol)?;
    let strengths = g.strengths();
    let free: Vec<usize> = (0..g.len()).filter(|&z| z != yi).collect();
    let labels: Vec<String> = free.iter().map(|&z| g.labels()[z].clone()).collect();
    // (I − Q)ᵀ v = e_x
    let a = DenseMatrix::from_fn(labels.clone(), |i, j| {
        let q = g.weight(free[j], free[i]).clone() / strengths[free[j]].clone();
        if i == j {
            T::one() - q
        } else {
            -q
        }
    })?;
    let e: Vec<T> = free
        .iter()
        .map(|&z| if z == xi { T::one() } else { T::zero() })
        .collect();
    let v = Lu::factor(&a, tol).solve(&e)?;
    let mut out: Vec<(String, T)> = labels.into_iter().zip(v).collect();
    out.insert(yi, (g.labels()[yi].clone(), T::zero()));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkConfig {
    pub walks: u64,
    pub cap: u64,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl WalkConfig {
    pub fn new(walks: u64, seed: u64) -> Self {
        Self {
            walks,
            cap: DEFAULT_STEP_CAP,
            seed,
            workers: 0,
        }
    }
}

/// `Φ` for each walk in index order; `None` marks a capped walk.
pub fn sample_phi<T: Scalar>(
    g: &WeightedGraph<T>,
    x: &str,
    y: &str,
    cfg: WalkConfig,
    tol: Tolerance,
) -> Result<Vec<Option<u64>>> {
    if cfg.walks == 0 || cfg.cap == 0 {
        return Err(Error::BadParameter("need at least one walk and one step".into()));
    }
    let (xi, yi) = require_pair(g, x, y, tol)?;
    let sampler = Sampler::new(g)?;
    let run = || -> Vec<Option<u64>> {
        (0..cfg.walks)
            .into_par_iter()
            .map(|i| sampler.phi(&mut stream(cfg.seed, i), xi, yi, cfg.cap))
            .collect()
    };
    if cfg.workers == 0 {
        return Ok(run());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::BadParameter(e.to_string()))?;
    Ok(pool.install(run))
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Walks that hit the target and enter the estimate.
    pub samples: u64,
    /// Walks stopped by the step cap.
    pub capped: u64,
    pub seed: u64,
    pub cap: u64,
}

impl McEstimate {
    /// Excluding capped walks biases the estimate downward.
    pub fn biased(&self) -> bool {
        self.capped > 0
    }

    /// `|estimate − exact| ≤ k·SE` (exact equality when SE is zero).
    pub fn within(&self, exact: f64, k: f64) -> bool {
        (self.estimate - exact).abs() <= k * self.std_error + 1e-12 * exact.abs().max(1.0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "estimate": self.estimate,
            "std_error": self.std_error,
            "samples": self.samples,
            "capped": self.capped,
            "bias_warning": self.biased(),
            "seed": self.seed,
            "cap": self.cap,
        })
    }
}

struct Moments {
    n: u64,
    mean: f64,
    var: f64,
    m4: f64,
}

/// Sequential two-pass moments; the order of `xs` is fixed by walk index.
fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as u64;
    if n == 0 {
        return Moments {
            n,
            mean: f64::NAN,
            var: f64::NAN,
            m4: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let (mut s2, mut s4) = (0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        s2 += d * d;
        s4 += d * d * d * d;
    }
    let var = if n > 1 { s2 / (n - 1) as f64 } else { 0.0 };
    Moments {
        n,
        mean,
        var,
        m4: s4 / n as f64,
    }
}

/// `R(x,y) ≈ mean(Φ)/c_x` over seeded independent walks.
pub fn mc_resistance<T: Scalar>(
    g: &WeightedGraph<T>,
    x: &str,
    y: &str,
    cfg: WalkConfig,
    tol: Tolerance,
) -> Result<McEstimate> {
    let phis = sample_phi(g, x, y, cfg, tol)?;
    let cx = g.strength(g.index_of(x)?).to_f64();
    let hits: Vec<f64> = phis.iter().flatten().map(|&k| k as f64).collect();
    let m = moments(&hits);
    Ok(McEstimate {
        estimate: m.mean / cx,
        std_error: (m.var / m.n as f64).sqrt() / cx,
        samples: m.n,
        capped: cfg.walks - m.n,
        seed: cfg.seed,
        cap: cfg.cap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    /// Smallest `Φ` in the bin.
    pub k: u64,
    /// The last bin collects every `Φ ≥ k`.
    pub tail: bool,
    pub observed: u64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiLawReport<T> {
    pub p: T,
    pub bins: Vec<HistogramBin>,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub chi_square_pass: bool,
    pub mean: f64,
    pub mean_std_error: f64,
    pub mean_expected: f64,
    pub mean_pass: bool,
    pub variance: f64,
    pub variance_std_error: f64,
    pub variance_expected: f64,
    pub variance_pass: bool,
    pub samples: u64,
    pub capped: u64,
    pub seed: u64,
}

impl<T: Scalar> PhiLawReport<T> {
    pub fn passed(&self) -> bool {
        self.chi_square_pass && self.mean_pass && self.variance_pass
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        json!({
            "p": self.p.to_json(),
            "histogram": self.bins.iter().map(|b| json!({
                "k": b.k, "tail": b.tail, "observed": b.observed, "expected": b.expected,
            })).collect::<Vec<_>>(),
            "chi_square": {"statistic": self.chi_square, "dof": self.dof, "p_value": self.p_value,
                           "alpha": self.alpha, "pass": self.chi_square_pass},
            "mean": {"sample": self.mean, "std_error": self.mean_std_error,
                     "expected": self.mean_expected, "pass": self.mean_pass},
            "variance": {"sample": self.variance, "std_error": self.variance_std_error,
                         "expected": self.variance_expected, "pass": self.variance_pass},
            "samples": self.samples,
            "capped": self.capped,
            "seed": self.seed,
            "passed": self.passed(),
        })
    }
}

/// Compares sampled `Φ^{xy}` with the geometric law
/// `P[Φ = k] = (1 − p)p^{k−1}`, `p` from the exact solve.
pub fn phi_law_check<T: Scalar>(
    g: &WeightedGraph<T>,
    x: &str,
    y: &str,
    cfg: WalkConfig,
    alpha: f64,
    tol: Tolerance,
) -> Result<PhiLawReport<T>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::BadParameter(format!("significance level {alpha} outside [0, 1)")));
    }
    let p = exact_return_vs_hit(g, x, y, tol)?;
    let pf = p.to_f64();
    let phis = sample_phi(g, x, y, cfg, tol)?;
    let hits: Vec<u64> = phis.iter().flatten().copied().collect();
    let n = hits.len() as u64;
    if n == 0 {
        return Err(Error::BadParameter("every walk hit the step cap".into()));
    }

    // Bins k = 1, 2, … while the expected count stays at least 5; the
    // remainder forms a tail bin.
    let total = n as f64;
    let prob = |k: u64| (1.0 - pf) * pf.powi(k as i32 - 1);
    let mut bins = Vec::new();
    let mut k = 1;
    let mut mass = 0.0;
    while total * prob(k) >= 5.0 && total * (1.0 - mass - prob(k)) >= 5.0 {
        bins.push(HistogramBin {
            k,
            tail: false,
            observed: hits.iter().filter(|&&h| h == k).count() as u64,
            expected: total * prob(k),
        });
        mass += prob(k);
        k += 1;
    }
    bins.push(HistogramBin {
        k,
        tail: true,
        observed: hits.iter().filter(|&&h| h >= k).count() as u64,
        expected: total * (1.0 - mass),
    });
    let chi_square: f64 = bins
        .iter()
        .filter(|b| b.expected > 0.0)
        .map(|b| (b.observed as f64 - b.expected).powi(2) / b.expected)
        .sum();
    let dof = bins.len() - 1;
    let p_value = if dof == 0 {
        if chi_square == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| Error::BadParameter(e.to_string()))?
            .sf(chi_square)
    };

    let xs: Vec<f64> = hits.iter().map(|&h| h as f64).collect();
    let m = moments(&xs);
    let mean_expected = 1.0 / (1.0 - pf);
    let variance_expected = pf / (1.0 - pf).powi(2);
    let mean_std_error = (m.var / total).sqrt();
    let variance_std_error = ((m.m4 - m.var * m.var).max(0.0) / total).sqrt();
    let close = |a: f64, b: f64, se: f64| (a - b).abs() <= 3.0 * se + 1e-12 * b.abs().max(1.0);

    Ok(PhiLawReport {
        p,
        bins,
        chi_square,
        dof,
        p_value,
        alpha,
        chi_square_pass: p_value >= alpha,
        mean: m.mean,
        mean_std_error,
        mean_expected,
        mean_pass: close(m.mean, mean_expected, mean_std_error),
        variance: m.var,
        variance_std_error,
        variance_expected,
        variance_pass: close(m.var, variance_expected, variance_std_error),
        samples: n,
        capped: cfg.walks - n,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitWalkReport<T> {
    pub x: String,
    pub y: String,
    /// `R(x,y)` of the family at the largest size.
    pub resistance: T,
    pub estimate: Option<McEstimate>,
    pub agrees: bool,
    /// Per size: largest `|c_n(x,z)/(c_n)_x − c(x,z)/c_x|` over `z`.
    pub transition_gaps: Vec<(usize, f64)>,
    /// Largest gap between sampled one-step frequencies on the largest
    /// `G_n` and the limit graph's transition probabilities.
    pub empirical_gap: f64,
}

impl<T: Scalar> LimitWalkReport<T> {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "x": self.x,
            "y": self.y,
            "resistance": self.resistance.to_json(),
            "estimate": self.estimate.as_ref().map(McEstimate::to_json),
            "agrees": self.agrees,
            "transition_gaps": self.transition_gaps.iter()
                .map(|(n, g)| serde_json::json!([n, g])).collect::<Vec<_>>(),
            "empirical_gap": self.empirical_gap,
        })
    }
}

fn transition_row<T: Scalar>(g: &WeightedGraph<T>, x: &str, labels: &[String]) -> Result<Vec<f64>> {
    let xi = g.index_of(x)?;
    let cx = g.strength(xi).to_f64();
    labels
        .iter()
        .map(|z| Ok(g.index_of(z).map_or(0.0, |zi| g.weight(xi, zi).to_f64() / cx)))
        .collect()
}

/// Runs the walk on the estimated limit graph and compares it with the
/// resistance of the family. Recurrence of the limit graph cannot be
/// checked and has to be asserted by the caller.
pub fn limit_walk_consistency<T: Scalar, S: MetricSource<T>>(
    plan: &ExhaustionPlan<S>,
    x: &str,
    y: &str,
    cfg: WalkConfig,
    recurrence_asserted: bool,
    options: LimitOptions,
    tol: Tolerance,
) -> Result<LimitWalkReport<T>> {
    if !recurrence_asserted {
        return Err(Error::RecurrenceNotAsserted);
    }
    let traces = exhaustion_traces(plan, tol)?;
    let largest = &traces.last().expect("plan has sizes").graph;
    largest.index_of(x)?;
    largest.index_of(y)?;
    if x == y {
        return Ok(LimitWalkReport {
            x: x.into(),
            y: y.into(),
            resistance: T::zero(),
            estimate: None,
            agrees: true,
            transition_gaps: Vec::new(),
            empirical_gap: 0.0,
        });
    }
    let report = limit_graph_estimate(&traces, options, tol)?;
    for v in [x, y] {
        if report.condition(v) != Some(ConditionC::Holds) {
            return Err(Error::ConditionCFails(v.to_string()));
        }
    }
    let limit = &report.limit_graph;
    let resistance = effective_resistance(largest, tol)?.between(x, y)?.clone();
    let estimate = mc_resistance(limit, x, y, cfg, tol)?;
    let agrees = estimate.within(resistance.to_f64(), 3.0);

    let targets = limit.labels().to_vec();
    let target_row = transition_row(limit, x, &targets)?;
    let transition_gaps = traces
        .iter()
        .filter(|t| t.graph.index_of(x).is_ok())
        .map(|t| {
            let row = transition_row(&t.graph, x, &targets)?;
            let gap = row
                .iter()
                .zip(&target_row)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok((t.size, gap))
        })
        .collect::<Result<Vec<_>>>()?;

    let sampler = Sampler::new(largest)?;
    let xi = largest.index_of(x)?;
    let mut counts = vec![0u64; largest.len()];
    let mut rng = stream(cfg.seed, u64::MAX);
    for _ in 0..cfg.walks {
        counts[sampler.step(&mut rng, xi)] += 1;
    }
    let empirical_gap = targets
        .iter()
        .zip(&target_row)
        .map(|(z, p)| {
            let seen = largest.index_of(z).map_or(0, |zi| counts[zi]);
            (seen as f64 / cfg.walks as f64 - p).abs()
        })
        .fold(0.0, f64::max);

    Ok(LimitWalkReport {
        x: x.into(),
        y: y.into(),
        resistance,
        estimate: Some(estimate),
        agrees,
        transition_gaps,
        empirical_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ers::potential;
    use crate::families::{cycle, transient, Family};
    use crate::graph::Edge;
    use crate::limit::PrefixSource;
    use crate::numeric::Rational;
    use crate::testutil::{connected_graph, q};
    use proptest::prelude::*;

    const TOL: Tolerance = Tolerance::DEFAULT;

    fn single_edge(w: i64) -> WeightedGraph<Rational> {
        WeightedGraph::build(vec!["x".into(), "y".into()], &[Edge::new("x", "y", q(w, 1))]).unwrap()
    }

    #[test]
    fn single_edge_is_deterministic() {
        let g = single_edge(2);
        let t = simulate_walk(&g, "x", Some("y"), 10, 7).unwrap();
        assert_eq!(t.path(), ["x", "y"]);
        assert_eq!(t.stop, StopCause::HitTarget);
        assert_eq!(exact_return_vs_hit(&g, "x", "y", TOL).unwrap(), q(0, 1));
        assert_eq!(exact_expected_visits(&g, "x", "y", TOL).unwrap(), q(1, 1));
        let est = mc_resistance(&g, "x", "y", WalkConfig::new(100, 1), TOL).unwrap();
        assert_eq!((est.estimate, est.std_error, est.samples), (0.5, 0.0, 100));
        let law = phi_law_check(&g, "x", "y", WalkConfig::new(100, 1), 0.01, TOL).unwrap();
        assert_eq!(law.bins.len(), 1);
        assert_eq!(law.bins[0].observed, 100);
        assert!(law.passed());
    }

    #[test]
    fn capped_walks_are_counted() {
        let g = cycle::<Rational>(4).unwrap();
        let t = simulate_walk(&g, "v0", None, 5, 3).unwrap();
        assert_eq!((t.steps.len(), t.stop), (6, StopCause::StepCap));
        for w in t.steps.windows(2) {
            assert!(!g.weight(w[0], w[1]).is_exact_zero());
        }
        let cfg = WalkConfig { cap: 1, ..WalkConfig::new(200, 3) };
        let est = mc_resistance(&g, "v0", "v2", cfg, TOL).unwrap();
        assert_eq!(est.samples, 0);
        assert_eq!(est.capped, 200);
        assert!(est.biased());
    }

    #[test]
    fn cycle_first_step_is_fair() {
        let g = cycle::<Rational>(4).unwrap();
        let n = 10_000;
        let right = (0..n)
            .filter(|&s| simulate_walk(&g, "v0", None, 1, s).unwrap().steps[1] == 1)
            .count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((right - n as f64 / 2.0).abs() <= 3.0 * sigma, "{right}");
    }

    #[test]
    fn cycle_exact_quantities() {
        let g = cycle::<Rational>(4).unwrap();
        assert_eq!(exact_return_vs_hit(&g, "v0", "v2", TOL).unwrap(), q(1, 2));
        assert_eq!(exact_expected_visits(&g, "v0", "v2", TOL).unwrap(), q(2, 1));
        let row = expected_visits_row(&g, "v0", "v2", TOL).unwrap();
        assert_eq!(row[0], ("v0".to_string(), q(2, 1)));
        assert_eq!(row[2], ("v2".to_string(), q(0, 1)));
        assert!(matches!(exact_return_vs_hit(&g, "v1", "v1", TOL), Err(Error::SameVertex(_))));
        let split = WeightedGraph::build(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            &[Edge::new("a", "b", q(1, 1)), Edge::new("c", "d", q(1, 1))],
        )
        .unwrap();
        assert!(matches!(exact_return_vs_hit(&split, "a", "d", TOL), Err(Error::Disconnected)));
        assert!(matches!(expected_from_p(q(1, 1), TOL), Err(Error::PEqualsOne)));
        assert!(matches!(expected_from_p(1.0 - 1e-12, TOL), Err(Error::PEqualsOne)));
    }

    #[test]
    fn cycle_monte_carlo() {
        let g = cycle::<Rational>(4).unwrap();
        let est = mc_resistance(&g, "v0", "v2", WalkConfig::new(20_000, 11), TOL).unwrap();
        assert!(est.within(1.0, 3.0), "{est:?}");
        assert_eq!(est.capped, 0);
        let law = phi_law_check(&g, "v0", "v2", WalkConfig::new(20_000, 12), 0.01, TOL).unwrap();
        assert!(law.passed(), "{:?}", law.to_json());
        assert_eq!(law.variance_expected, 2.0);
        assert!(law.dof >= 5);
    }

    #[test]
    fn transient_truncations() {
        for depth in [1, 4, 12, 20] {
            let g = transient::<Rational>(depth).unwrap();
            assert_eq!(*effective_resistance(&g, TOL).unwrap().between("B", "T").unwrap(), q(2, 1));
            assert_eq!(exact_return_vs_hit(&g, "B", "T", TOL).unwrap(), q(1, 2));
        }
        let g = transient::<Rational>(20).unwrap();
        let r = exact_escape_probabilities(&g, "B", "T", &["20".to_string()], TOL).unwrap();
        assert!((r.hit_first.to_f64() - 0.4).abs() < 1e-3);
        assert!((r.hit_or_escape().to_f64() - 0.6).abs() < 1e-3);
        assert_eq!(r.hit_first.clone() + r.return_first.clone() + r.escape_first.clone(), q(1, 1));
        let none = exact_escape_probabilities(&g, "B", "T", &[], TOL).unwrap();
        assert_eq!(none.escape_first, q(0, 1));
        assert!(exact_escape_probabilities(&g, "B", "T", &["T".to_string()], TOL).is_err());
    }

    #[test]
    fn transient_monte_carlo_at_small_depth() {
        let g = transient::<f64>(6).unwrap();
        let cfg = WalkConfig::new(4_000, 5);
        let est = mc_resistance(&g, "B", "T", cfg, TOL).unwrap();
        assert!(est.within(2.0, 3.0), "{est:?}");
        let phis = sample_phi(&g, "B", "T", cfg, TOL).unwrap();
        let hit_first = phis.iter().filter(|p| **p == Some(1)).count() as f64 / 4_000.0;
        let p = exact_return_vs_hit(&g, "B", "T", TOL).unwrap();
        assert!((hit_first - (1.0 - p)).abs() <= 3.0 * (0.25f64 / 4_000.0).sqrt());
    }

    #[test]
    fn worker_count_does_not_change_estimates() {
        let g = cycle::<Rational>(6).unwrap();
        let run = |workers| {
            let cfg = WalkConfig { workers, ..WalkConfig::new(3_000, 99) };
            mc_resistance(&g, "v0", "v3", cfg, TOL).unwrap()
        };
        let one = run(1);
        for w in [2, 4, 8] {
            let other = run(w);
            assert_eq!(one.estimate.to_bits(), other.estimate.to_bits());
            assert_eq!(one.std_error.to_bits(), other.std_error.to_bits());
        }
        assert_ne!(one, mc_resistance(&g, "v0", "v3", WalkConfig::new(3_000, 100), TOL).unwrap());
    }

    #[test]
    fn recurrence_must_be_asserted() {
        let plan = ExhaustionPlan::new(Family::TwoRay, (3..=9).collect()).unwrap();
        let r = limit_walk_consistency::<Rational, _>(&plan, "0", "1", WalkConfig::new(10, 1), false, LimitOptions::default(), TOL);
        assert!(matches!(r, Err(Error::RecurrenceNotAsserted)));
    }

    #[test]
    fn path_limit_walk_matches_resistance() {
        let plan = ExhaustionPlan::new(Family::Path, (4..=14).collect()).unwrap();
        let cfg = WalkConfig::new(4_000, 21);
        let r = limit_walk_consistency::<Rational, _>(&plan, "5", "6", cfg, true, LimitOptions::default(), TOL).unwrap();
        assert_eq!(r.resistance, q(1, 1));
        assert!(r.agrees, "{:?}", r.estimate);
        assert!(r.transition_gaps.iter().skip(3).all(|(_, g)| *g == 0.0));
        assert!(r.empirical_gap < 0.05);
        let same = limit_walk_consistency::<Rational, _>(&plan, "5", "5", cfg, true, LimitOptions::default(), TOL).unwrap();
        assert_eq!(same.resistance, q(0, 1));
    }

    #[test]
    fn condition_c_gates_the_limit_walk() {
        let plan = ExhaustionPlan::new(Family::Star, (2..=8).collect()).unwrap();
        let r = limit_walk_consistency::<Rational, _>(&plan, "1", "2", WalkConfig::new(10, 1), true, LimitOptions::default(), TOL);
        assert!(matches!(r, Err(Error::ConditionCFails(v)) if v == "1"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn resistance_from_return_probability(g in connected_graph(2, 6), a in 0usize..6, b in 0usize..6) {
            let (a, b) = (a % g.len(), b % g.len());
            prop_assume!(a != b);
            let (x, y) = (g.labels()[a].clone(), g.labels()[b].clone());
            let r = effective_resistance(&g, TOL).unwrap().between(&x, &y).unwrap().clone();
            let visits = exact_expected_visits(&g, &x, &y, TOL).unwrap();
            prop_assert_eq!(visits / g.strength(a), r);
            let phi = potential(&g, &x, &y, TOL).unwrap();
            for (z, (label, v)) in expected_visits_row(&g, &x, &y, TOL).unwrap().into_iter().enumerate() {
                prop_assert_eq!(&label, &g.labels()[z]);
                prop_assert_eq!(v / g.strength(z), phi.values[z].clone());
            }
        }

        #[test]
        fn nested_traces_obey_the_edge_bound(g in connected_graph(4, 7)) {
            let r = effective_resistance(&g, TOL).unwrap();
            let source = PrefixSource(r.to_metric(TOL).unwrap());
            let plan = ExhaustionPlan::new(source, (2..=g.len()).collect()).unwrap();
            let traces = exhaustion_traces(&plan, TOL).unwrap();
            for t in &traces {
                for (i, j, w) in t.graph.edges() {
                    prop_assert!(w.clone() * r.get(i, j).clone() <= q(1, 1));
                }
            }
            for pair in traces.windows(2) {
                let (small, large) = (&pair[0].graph, &pair[1].graph);
                for x in 0..small.len() {
                    for y in 0..small.len() {
                        if x != y {
                            prop_assert!(small.weight(x, y).clone() / small.strength(x)
                                >= large.weight(x, y).clone() / large.strength(x));
                        }
                    }
                }
            }
        }
    }
}
