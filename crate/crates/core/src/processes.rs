//! Random sequences `(ξ_n)`, random indices `(N_n)`, deterministic index
//! sequences `(k_n)`, and the randomized sequence `(ξ_{N_n})`.
//!
//! Paths and index sequences are indexed from 1. Index realizations for
//! different `n` come from independent substreams and are independent of the
//! path.

use std::collections::BTreeMap;

use rand::Rng;

use crate::distributions::{AnalyticLaw, FiniteDistribution, Law, RngStream};
use crate::error::{Error, Result};
use crate::metric_space::{Coords, MetricPoint, Space};
use crate::oracle::FiniteProcessSpec;

/// Longest partial-sum path that can be enumerated outcome by outcome.
pub const MAX_ENUMERABLE_HORIZON: usize = 25;
const MAX_ENUMERATED_OUTCOMES: u128 = 1 << 25;

/// Rounds `x` to the nearest integer when it is within floating noise of one, so
/// expressions like `0.1 * 3 * 10` land on 3 before `ceil` and `floor`.
pub(crate) fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// A realization `ξ_1, …, ξ_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    values: Vec<MetricPoint>,
}

impl Path {
    pub fn new(values: Vec<MetricPoint>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("a path needs at least one value".into()));
        }
        Ok(Path { values })
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// `ξ_n` for `1 ≤ n ≤ H`.
    pub fn at(&self, n: u64) -> Option<&MetricPoint> {
        if n == 0 {
            return None;
        }
        self.values.get((n - 1) as usize)
    }

    pub fn values(&self) -> &[MetricPoint] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockGrowth {
    /// Block `j` has length about `c·(j+1)`.
    Linear(f64),
    /// Block boundaries at powers of `r`.
    Exponential(f64),
}

impl BlockGrowth {
    /// Continuous block coordinate of index `n`; block boundaries sit at integers.
    fn coordinate(&self, n: u64) -> f64 {
        let n = n as f64;
        match *self {
            BlockGrowth::Linear(c) => ((1.0 + 8.0 * n / c).sqrt() - 1.0) / 2.0,
            BlockGrowth::Exponential(r) => n.ln() / r.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventualOutcome {
    pub prefix: Vec<MetricPoint>,
    pub limit: MetricPoint,
    pub probability: f64,
}

impl EventualOutcome {
    fn value(&self, n: u64) -> &MetricPoint {
        self.prefix.get((n - 1) as usize).unwrap_or(&self.limit)
    }
}

/// Generator of a random sequence `(ξ_n)_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessModel {
    Constant(MetricPoint),
    /// `ξ_n = even` for even `n`, `odd` for odd `n`.
    Alternating {
        even: MetricPoint,
        odd: MetricPoint,
    },
    /// `ξ_n = S_n / √n` for i.i.d. steps.
    PartialSumNormalized {
        step: Law,
    },
    /// One of finitely many paths: a prefix followed by a constant tail.
    EventuallyConstant(Vec<EventualOutcome>),
    /// Constant on blocks, alternating between `a` (even blocks) and `b` across
    /// blocks; the block grid is shifted by a phase drawn uniformly from
    /// `{0, 1/phases, …, (phases-1)/phases}`.
    BlockOscillating {
        growth: BlockGrowth,
        a: MetricPoint,
        b: MetricPoint,
        phases: u32,
    },
}

impl ProcessModel {
    pub fn check(&self, space: &Space) -> Result<()> {
        match self {
            ProcessModel::Constant(p) => space.check_point(p),
            ProcessModel::Alternating { even, odd } => {
                space.check_point(even)?;
                space.check_point(odd)
            }
            ProcessModel::PartialSumNormalized { step } => {
                if !matches!(space, Space::Euclidean { .. }) {
                    return Err(Error::DomainMismatch("partial sums need a euclidean space".into()));
                }
                step.check(space)
            }
            ProcessModel::EventuallyConstant(outcomes) => {
                if outcomes.is_empty() {
                    return Err(Error::InvalidParameter("eventually_constant needs at least one outcome".into()));
                }
                let mut total = 0.0;
                for o in outcomes {
                    if !(o.probability > 0.0) {
                        return Err(Error::InvalidParameter("outcome probabilities must be positive".into()));
                    }
                    total += o.probability;
                    space.check_point(&o.limit)?;
                    o.prefix.iter().try_for_each(|p| space.check_point(p))?;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!("outcome probabilities sum to {total}, not 1")));
                }
                Ok(())
            }
            ProcessModel::BlockOscillating { growth, a, b, phases } => {
                match *growth {
                    BlockGrowth::Linear(c) if !(c > 0.0) || !c.is_finite() => {
                        return Err(Error::InvalidParameter("linear block growth needs c > 0".into()))
                    }
                    BlockGrowth::Exponential(r) if !(r > 1.0) || !r.is_finite() => {
                        return Err(Error::InvalidParameter("exponential block growth needs r > 1".into()))
                    }
                    _ => {}
                }
                if *phases == 0 {
                    return Err(Error::InvalidParameter("block_oscillating needs phases >= 1".into()));
                }
                space.check_point(a)?;
                space.check_point(b)
            }
        }
    }

    /// For finite one-dimensional step laws: `Some((mean, variance))`.
    pub fn step_moments(&self) -> Option<(f64, f64)> {
        match self {
            ProcessModel::PartialSumNormalized { step } => step.as_finite()?.mean_variance(),
            _ => None,
        }
    }

    pub fn sample_path(&self, rng: &RngStream, horizon: usize) -> Result<Path> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        let mut g = rng.rng();
        let values = match self {
            ProcessModel::Constant(p) => vec![p.clone(); horizon],
            ProcessModel::Alternating { even, odd } => {
                (1..=horizon as u64).map(|n| if n % 2 == 0 { even.clone() } else { odd.clone() }).collect()
            }
            ProcessModel::PartialSumNormalized { step } => partial_sum_path(step, &mut g, horizon),
            ProcessModel::EventuallyConstant(outcomes) => {
                let u: f64 = g.random();
                let mut acc = 0.0;
                let mut chosen = outcomes.len() - 1;
                for (i, o) in outcomes.iter().enumerate() {
                    acc += o.probability;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                let o = &outcomes[chosen];
                (1..=horizon as u64).map(|n| o.value(n).clone()).collect()
            }
            ProcessModel::BlockOscillating { phases, .. } => {
                let k = g.random_range(0..*phases);
                self.block_path(k, horizon)
            }
        };
        Path::new(values)
    }

    fn block_path(&self, phase: u32, horizon: usize) -> Vec<MetricPoint> {
        let ProcessModel::BlockOscillating { growth, a, b, phases } = self else {
            unreachable!("block_path on a non-block model")
        };
        let u = phase as f64 / *phases as f64;
        (1..=horizon as u64)
            .map(|n| {
                let block = (growth.coordinate(n) + u).floor() as i64;
                if block.rem_euclid(2) == 0 {
                    a.clone()
                } else {
                    b.clone()
                }
            })
            .collect()
    }

    /// Every path to `horizon` with its probability, when the outcome space is finite
    /// and small enough.
    pub fn enumerate_paths(&self, horizon: usize) -> Result<Vec<(Path, f64)>> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        let dummy = RngStream::new(0, 0);
        match self {
            ProcessModel::Constant(_) | ProcessModel::Alternating { .. } => {
                Ok(vec![(self.sample_path(&dummy, horizon)?, 1.0)])
            }
            ProcessModel::EventuallyConstant(outcomes) => outcomes
                .iter()
                .map(|o| Ok((Path::new((1..=horizon as u64).map(|n| o.value(n).clone()).collect())?, o.probability)))
                .collect(),
            ProcessModel::BlockOscillating { phases, .. } => {
                (0..*phases).map(|k| Ok((Path::new(self.block_path(k, horizon))?, 1.0 / *phases as f64))).collect()
            }
            ProcessModel::PartialSumNormalized { step } => {
                let law = step
                    .as_finite()
                    .ok_or_else(|| Error::NotEnumerable("partial sums with a continuous step law".into()))?;
                let count = (law.atoms().len() as u128).checked_pow(horizon as u32).unwrap_or(u128::MAX);
                if horizon > MAX_ENUMERABLE_HORIZON || count > MAX_ENUMERATED_OUTCOMES {
                    return Err(Error::NotEnumerable(format!(
                        "partial sums to horizon {horizon} have {count} outcomes (horizon cap {MAX_ENUMERABLE_HORIZON})"
                    )));
                }
                let mut out = Vec::with_capacity(count as usize);
                let mut prefix: Vec<MetricPoint> = Vec::with_capacity(horizon);
                let dim = match &law.atoms()[0] {
                    MetricPoint::Euclidean(c) => c.len(),
                    MetricPoint::Discrete(_) => {
                        return Err(Error::DomainMismatch("partial sums need euclidean steps".into()))
                    }
                };
                let zero: Coords = std::iter::repeat(0.0).take(dim).collect();
                enumerate_sums(&law, horizon, &zero, 1.0, &mut prefix, &mut out);
                Ok(out)
            }
        }
    }

    /// Exact joint law of the path (to `horizon`) and of the index realizations for
    /// every `n` in `n_window`, in product form.
    pub fn exact_finite_spec(
        &self,
        index: &IndexModel,
        horizon: usize,
        n_window: (u64, u64),
    ) -> Result<FiniteProcessSpec> {
        let outcomes = self.enumerate_paths(horizon)?;
        let mut index_laws = BTreeMap::new();
        for n in n_window.0..=n_window.1 {
            index_laws.insert(n, index.law_at(n)?);
        }
        FiniteProcessSpec::new(outcomes, index_laws, horizon, n_window)
    }
}

fn add_scaled(acc: &Coords, step: &MetricPoint) -> Coords {
    match step {
        MetricPoint::Euclidean(c) => acc.iter().zip(c.iter()).map(|(a, s)| a + s).collect(),
        MetricPoint::Discrete(_) => acc.clone(),
    }
}

fn normalized(sum: &Coords, n: usize) -> MetricPoint {
    let root = (n as f64).sqrt();
    MetricPoint::Euclidean(sum.iter().map(|s| s / root).collect())
}

fn enumerate_sums(
    law: &FiniteDistribution,
    horizon: usize,
    sum: &Coords,
    prob: f64,
    prefix: &mut Vec<MetricPoint>,
    out: &mut Vec<(Path, f64)>,
) {
    if prefix.len() == horizon {
        out.push((Path { values: prefix.clone() }, prob));
        return;
    }
    for (atom, w) in law.iter() {
        if w == 0.0 {
            continue;
        }
        let next = add_scaled(sum, atom);
        prefix.push(normalized(&next, prefix.len() + 1));
        enumerate_sums(law, horizon, &next, prob * w, prefix, out);
        prefix.pop();
    }
}

/// Single pass over the steps keeping the running sum `S_n`; `ξ_n = S_n / √n`.
fn partial_sum_path<R: Rng>(step: &Law, g: &mut R, horizon: usize) -> Vec<MetricPoint> {
    let mut values = Vec::with_capacity(horizon);
    // Two equiprobable scalar atoms (Rademacher and friends): one bit per step.
    let two_point = match step {
        Law::Analytic(AnalyticLaw::UniformFinite(a)) if a.len() == 2 => match (a[0].as_real(), a[1].as_real()) {
            (Some(x), Some(y)) => Some((x, y)),
            _ => None,
        },
        _ => None,
    };
    if let Some((lo, hi)) = two_point {
        let mut sum = 0.0f64;
        let mut bits = 0u64;
        for n in 1..=horizon {
            if (n - 1) % 64 == 0 {
                bits = g.random();
            }
            sum += if bits & 1 == 1 { hi } else { lo };
            bits >>= 1;
            values.push(MetricPoint::real(sum / (n as f64).sqrt()));
        }
        return values;
    }
    let mut sum: Option<Coords> = None;
    for n in 1..=horizon {
        let s = step.sample(g);
        let next = match &sum {
            None => match &s {
                MetricPoint::Euclidean(c) => c.clone(),
                MetricPoint::Discrete(_) => Coords::new(),
            },
            Some(acc) => add_scaled(acc, &s),
        };
        values.push(normalized(&next, n));
        sum = Some(next);
    }
    values
}

/// `h(n) = floor(coef · n^exponent)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfwidth {
    pub coef: f64,
    pub exponent: f64,
}

impl Halfwidth {
    pub fn at(&self, n: u64) -> u64 {
        snap(self.coef * (n as f64).powf(self.exponent)).floor().max(0.0) as u64
    }
}

/// Deterministic index sequence `(k_n)`.
#[derive(Debug, Clone, PartialEq)]
pub enum KnSpec {
    /// `k_n = max(1, round(c·n))`.
    Linear(f64),
    /// `k_1, k_2, …` given explicitly.
    Explicit(Vec<u64>),
}

impl KnSpec {
    pub fn check(&self) -> Result<()> {
        match self {
            KnSpec::Linear(c) if !(*c > 0.0) || !c.is_finite() => {
                Err(Error::InvalidParameter(format!("linear k_n needs c > 0, got {c}")))
            }
            KnSpec::Linear(_) => Ok(()),
            KnSpec::Explicit(v) => {
                if v.is_empty() || v.iter().any(|k| *k == 0) {
                    return Err(Error::InvalidParameter("explicit k_n must be nonempty positive integers".into()));
                }
                if v.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidParameter("explicit k_n must be nondecreasing".into()));
                }
                Ok(())
            }
        }
    }

    pub fn k(&self, n: u64) -> Result<u64> {
        match self {
            KnSpec::Linear(c) => Ok((snap(c * n as f64).round() as u64).max(1)),
            KnSpec::Explicit(v) => {
                v.get((n.max(1) - 1) as usize).copied().ok_or(Error::HorizonExceeded { needed: n, horizon: v.len() })
            }
        }
    }

    /// Length of an explicit list; `None` for unbounded families.
    pub fn declared_len(&self) -> Option<usize> {
        match self {
            KnSpec::Linear(_) => None,
            KnSpec::Explicit(v) => Some(v.len()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            KnSpec::Linear(c) => format!("linear({c})"),
            KnSpec::Explicit(v) => format!("explicit[{}]", v.len()),
        }
    }
}

/// Generator of the random indices `(N_n)_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexModel {
    Deterministic(KnSpec),
    /// `N_n = n` with probability `1-q`, `2n` with probability `q`.
    TwoPoint {
        q: f64,
    },
    /// `N_n` uniform on `{n, …, floor((1+β)n)}`.
    UniformWindow {
        beta: f64,
    },
    /// `N_n = max(1, round(c·n) + U)` with `U` uniform on `{-h(n), …, h(n)}`.
    LinearNoise {
        c: f64,
        halfwidth: Halfwidth,
    },
}

fn window_top(n: u64, beta: f64) -> u64 {
    snap((1.0 + beta) * n as f64).floor() as u64
}

impl IndexModel {
    pub fn check(&self) -> Result<()> {
        match self {
            IndexModel::Deterministic(kn) => kn.check(),
            IndexModel::TwoPoint { q } if !(0.0..=1.0).contains(q) => {
                Err(Error::InvalidParameter(format!("two_point q must lie in [0,1], got {q}")))
            }
            IndexModel::UniformWindow { beta } if !(*beta >= 0.0) || !beta.is_finite() => {
                Err(Error::InvalidParameter(format!("uniform_window beta must be >= 0, got {beta}")))
            }
            IndexModel::LinearNoise { c, halfwidth } => {
                if !(*c > 0.0) || !c.is_finite() {
                    return Err(Error::InvalidParameter(format!("linear_noise c must be > 0, got {c}")));
                }
                if !(halfwidth.coef >= 0.0) || !halfwidth.exponent.is_finite() || !halfwidth.coef.is_finite() {
                    return Err(Error::InvalidParameter("linear_noise halfwidth needs finite coef >= 0".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Tight upper bound on any realization of `N_n`.
    pub fn max_index_bound(&self, n: u64) -> Result<u64> {
        Ok(match self {
            IndexModel::Deterministic(kn) => kn.k(n)?,
            IndexModel::TwoPoint { .. } => 2 * n,
            IndexModel::UniformWindow { beta } => window_top(n, *beta),
            IndexModel::LinearNoise { c, halfwidth } => (snap(c * n as f64).round() as u64).max(1) + halfwidth.at(n),
        })
    }

    /// Exact law of `N_n` as `(value, probability)` pairs with distinct values.
    pub fn law_at(&self, n: u64) -> Result<Vec<(u64, f64)>> {
        Ok(match self {
            IndexModel::Deterministic(kn) => vec![(kn.k(n)?, 1.0)],
            IndexModel::TwoPoint { q } => {
                let mut v = Vec::new();
                if *q < 1.0 {
                    v.push((n, 1.0 - q));
                }
                if *q > 0.0 {
                    v.push((2 * n, *q));
                }
                v
            }
            IndexModel::UniformWindow { beta } => {
                let top = window_top(n, *beta);
                let count = (top - n + 1) as f64;
                (n..=top).map(|k| (k, 1.0 / count)).collect()
            }
            IndexModel::LinearNoise { c, halfwidth } => {
                let centre = (snap(c * n as f64).round() as i64).max(1);
                let h = halfwidth.at(n) as i64;
                let w = 1.0 / (2 * h + 1) as f64;
                let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
                for u in -h..=h {
                    *acc.entry((centre + u).max(1) as u64).or_insert(0.0) += w;
                }
                acc.into_iter().collect()
            }
        })
    }

    pub fn sample_index<R: Rng>(&self, n: u64, g: &mut R) -> Result<u64> {
        Ok(match self {
            IndexModel::Deterministic(kn) => kn.k(n)?,
            IndexModel::TwoPoint { q } => {
                if g.random::<f64>() < *q {
                    2 * n
                } else {
                    n
                }
            }
            IndexModel::UniformWindow { beta } => g.random_range(n..=window_top(n, *beta)),
            IndexModel::LinearNoise { c, halfwidth } => {
                let centre = (snap(c * n as f64).round() as i64).max(1);
                let h = halfwidth.at(n) as i64;
                (centre + g.random_range(-h..=h)).max(1) as u64
            }
        })
    }

    /// One realization of `N_n` per requested `n`, each from substream `n` of `rng`.
    pub fn sample_indices(&self, rng: &RngStream, n_list: &[u64]) -> Result<Vec<u64>> {
        n_list.iter().map(|&n| self.sample_index(n, &mut rng.substream(n).rng())).collect()
    }

    pub fn label(&self) -> String {
        match self {
            IndexModel::Deterministic(kn) => format!("deterministic({})", kn.label()),
            IndexModel::TwoPoint { q } => format!("two_point({q})"),
            IndexModel::UniformWindow { beta } => format!("uniform_window({beta})"),
            IndexModel::LinearNoise { c, halfwidth } => {
                format!("linear_noise({c},{}*n^{})", halfwidth.coef, halfwidth.exponent)
            }
        }
    }
}

/// `(ξ_{N_1}, ξ_{N_2}, …)`: position `j` takes the path value at `indices[j]`.
pub fn compose_randomized(path: &Path, indices: &[u64]) -> Result<Path> {
    let values = indices
        .iter()
        .map(|&i| path.at(i).cloned().ok_or(Error::IndexOutOfHorizon { index: i, horizon: path.horizon() }))
        .collect::<Result<Vec<_>>>()?;
    Path::new(values)
}
