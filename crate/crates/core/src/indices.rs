//! Finite-horizon surrogates and Monte Carlo estimators for the weak defect `λ_w`,
//! the in-probability defect `λ_P`, the Anscombe index `χ`, and the checker for
//!
//! ```text
//! λ_w(ξ_{N_n} → ξ) ≤ λ_w(ξ_n → ξ) + χ((ξ_n)) + inf_{(k_n)} λ_P(N_n / k_n → 1).
//! ```
//!
//! Surrogate conventions, shared with [`crate::oracle`]:
//!
//! * `limsup_{n→∞}` is the maximum over `n ∈ [a, b]` stepped by `stride`;
//! * `sup_ε`, `inf_δ` and `sup_F` are extrema over the declared grids and set family;
//! * argmax/argmin ties go to the first (smallest) grid value.
//!
//! Sampling fans out over sample indices with rayon. Sample `s` uses substream `s`
//! of the estimator's stream, and every accumulator is an integer count, so results
//! do not depend on the number of worker threads.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{Law, RngStream};
use crate::error::{Error, Result};
use crate::metric_space::{HatFunction, PointKey, SetFamily, Side, Space, TestSet};
use crate::processes::{snap, IndexModel, KnSpec, ProcessModel};

/// Substream roles under a scenario's root stream.
pub mod role {
    pub const RANDOMIZED_WEAK: u64 = 1;
    pub const WEAK: u64 = 2;
    pub const CHI: u64 = 3;
    pub const LAMBDA_P: u64 = 4;
    pub const EXCEEDANCE: u64 = 5;
}

/// `[max(1, ⌈(1-δ)n⌉), ⌊(1+δ)n⌋]`.
pub fn window_bounds(n: u64, delta: f64) -> (u64, u64) {
    let nf = n as f64;
    let lo = snap((1.0 - delta) * nf).ceil().max(1.0) as u64;
    let hi = snap((1.0 + delta) * nf).floor().max(0.0) as u64;
    (lo.min(n), hi.max(n))
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaGrid {
    /// Distinct pairwise support distances plus half the smallest one.
    Auto,
    Values(Vec<f64>),
}

/// Discretisation of ε, δ, α and of the n-range standing in for `n → ∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorGrid {
    epsilons: Vec<f64>,
    deltas: Vec<f64>,
    alphas: AlphaGrid,
    n_window: (u64, u64),
    stride: u64,
    samples: usize,
}

pub const MIN_SAMPLES: usize = 100;

impl EstimatorGrid {
    /// Sorts the grids and checks every constraint, reporting all violations at once.
    pub fn new(
        mut epsilons: Vec<f64>,
        mut deltas: Vec<f64>,
        alphas: AlphaGrid,
        n_window: (u64, u64),
        stride: u64,
        samples: usize,
    ) -> Result<Self> {
        let mut errs = Vec::new();
        let (a, b) = n_window;
        if a < 1 {
            errs.push("n_window: lower end must be >= 1".to_string());
        }
        if a > b {
            errs.push(format!("n_window: [{a}, {b}] must satisfy a <= b"));
        }
        if stride < 1 {
            errs.push("stride: must be >= 1".to_string());
        }
        if samples < MIN_SAMPLES {
            errs.push(format!("samples: must be >= {MIN_SAMPLES}, got {samples}"));
        }
        if epsilons.is_empty() {
            errs.push("epsilon_grid: must be nonempty".to_string());
        }
        for e in &epsilons {
            if !(*e > 0.0) || !e.is_finite() {
                errs.push(format!("epsilon_grid: entries must be positive, got {e}"));
            }
        }
        if deltas.is_empty() {
            errs.push("delta_grid: must be nonempty".to_string());
        }
        for d in &deltas {
            if !(*d > 0.0) || !d.is_finite() {
                errs.push(format!("delta_grid: entries must be positive, got {d}"));
            } else if d * (a as f64) < 2.0 - 1e-9 {
                errs.push(format!(
                    "delta_grid: rule delta*a >= 2 violated by delta={d} with a={a} (windows would collapse to {{n}})"
                ));
            }
        }
        if let AlphaGrid::Values(v) = &alphas {
            if v.is_empty() {
                errs.push("alpha_grid: must be nonempty or \"auto\"".to_string());
            }
            for x in v {
                if !(*x >= 0.0) || !x.is_finite() {
                    errs.push(format!("alpha_grid: entries must be nonnegative, got {x}"));
                }
            }
        }
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        epsilons.sort_by(f64::total_cmp);
        epsilons.dedup();
        deltas.sort_by(f64::total_cmp);
        deltas.dedup();
        let alphas = match alphas {
            AlphaGrid::Values(mut v) => {
                v.sort_by(f64::total_cmp);
                v.dedup();
                AlphaGrid::Values(v)
            }
            auto => auto,
        };
        Ok(EstimatorGrid { epsilons, deltas, alphas, n_window, stride, samples })
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn alphas(&self) -> &AlphaGrid {
        &self.alphas
    }

    pub fn n_window(&self) -> (u64, u64) {
        self.n_window
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn epsilon_min(&self) -> f64 {
        self.epsilons[0]
    }

    pub fn with_samples(mut self, samples: usize) -> Result<Self> {
        if samples < MIN_SAMPLES {
            return Err(Error::Validation(vec![format!("samples: must be >= {MIN_SAMPLES}, got {samples}")]));
        }
        self.samples = samples;
        Ok(self)
    }

    /// `a, a+stride, …` up to `b`.
    pub fn n_values(&self) -> Vec<u64> {
        (self.n_window.0..=self.n_window.1).step_by(self.stride as usize).collect()
    }

    /// Largest index any χ window reaches.
    pub fn chi_horizon(&self) -> u64 {
        let dmax = *self.deltas.last().expect("nonempty delta grid");
        self.n_values().into_iter().map(|n| window_bounds(n, dmax).1).max().unwrap_or(1)
    }
}

/// One entry of a per-grid table. Absent coordinates do not apply to the quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    pub value: f64,
    pub stderr: f64,
}

/// Grid point at which an estimate's value is attained.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ArgPoint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kn: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexEstimate {
    pub value: f64,
    pub stderr: f64,
    pub argpoint: ArgPoint,
    /// Hat-function form of `λ_w`, reported next to the closed-set value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<f64>,
    pub per_grid: Vec<GridCell>,
}

fn binomial_stderr(p: f64, samples: usize) -> f64 {
    (p * (1.0 - p) / samples as f64).max(0.0).sqrt()
}

fn par_accumulate<A, I, F, M>(samples: usize, init: I, body: F, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, u64) -> Result<()> + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    (0..samples as u64)
        .into_par_iter()
        .try_fold(&init, |mut acc, s| {
            body(&mut acc, s)?;
            Ok(acc)
        })
        .try_reduce(&init, |a, b| Ok(merge(a, b)))
}

fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

fn path_stream(rng: &RngStream, sample: u64) -> RngStream {
    rng.substream(sample).substream(0)
}

fn index_stream(rng: &RngStream, sample: u64, n: u64) -> RngStream {
    rng.substream(sample).substream(n)
}

/// `P[max_{m ∈ window(n,δ)} d(ξ_n, ξ_m) ≥ ε]` by Monte Carlo: `(estimate, stderr)`.
pub fn window_exceedance(
    space: &Space,
    model: &ProcessModel,
    n: u64,
    delta: f64,
    epsilon: f64,
    samples: usize,
    rng: &RngStream,
) -> Result<(f64, f64)> {
    let (lo, hi) = window_bounds(n, delta);
    let hits = par_accumulate(
        samples,
        || 0u64,
        |acc, s| {
            let path = model.sample_path(&path_stream(rng, s), hi as usize)?;
            let x = path.at(n).expect("n within horizon");
            let maxd = (lo..=hi).map(|m| space.dist(x, path.at(m).unwrap())).fold(0.0, f64::max);
            if maxd >= epsilon {
                *acc += 1;
            }
            Ok(())
        },
        |a, b| a + b,
    )?;
    let p = hits as f64 / samples as f64;
    Ok((p, binomial_stderr(p, samples)))
}

/// χ surrogate: `max_ε min_δ max_n P̂[window max ≥ ε]`, with the full `(ε, δ, n)` table.
pub fn chi_ansc(space: &Space, model: &ProcessModel, grid: &EstimatorGrid, rng: &RngStream) -> Result<IndexEstimate> {
    let ns = grid.n_values();
    let (eps, dels) = (grid.epsilons(), grid.deltas());
    let horizon = grid.chi_horizon() as usize;
    let cell = |e: usize, d: usize, i: usize| (e * dels.len() + d) * ns.len() + i;
    let size = eps.len() * dels.len() * ns.len();
    let counts = par_accumulate(
        grid.samples(),
        || vec![0u64; size],
        |acc, s| {
            let path = model.sample_path(&path_stream(rng, s), horizon)?;
            for (i, &n) in ns.iter().enumerate() {
                let x = path.at(n).expect("n within horizon");
                let (mut cur_lo, mut cur_hi) = (n, n);
                let mut maxd = 0.0f64;
                // windows are nested in δ, so extend the previous one
                for (d, &delta) in dels.iter().enumerate() {
                    let (lo, hi) = window_bounds(n, delta);
                    for m in lo..cur_lo {
                        maxd = maxd.max(space.dist(x, path.at(m).unwrap()));
                    }
                    for m in cur_hi + 1..=hi {
                        maxd = maxd.max(space.dist(x, path.at(m).unwrap()));
                    }
                    cur_lo = cur_lo.min(lo);
                    cur_hi = cur_hi.max(hi);
                    for (e, &epsilon) in eps.iter().enumerate() {
                        if maxd >= epsilon {
                            acc[cell(e, d, i)] += 1;
                        }
                    }
                }
            }
            Ok(())
        },
        add_counts,
    )?;

    let samples = grid.samples();
    let mut per_grid = Vec::with_capacity(size);
    for (e, &epsilon) in eps.iter().enumerate() {
        for (d, &delta) in dels.iter().enumerate() {
            for (i, &n) in ns.iter().enumerate() {
                let p = counts[cell(e, d, i)] as f64 / samples as f64;
                per_grid.push(GridCell {
                    epsilon: Some(epsilon),
                    delta: Some(delta),
                    alpha: None,
                    n: Some(n),
                    value: p,
                    stderr: binomial_stderr(p, samples),
                });
            }
        }
    }
    let (value, idx) = chi_compose(&per_grid, eps.len(), dels.len(), ns.len());
    let best = &per_grid[idx];
    Ok(IndexEstimate {
        value,
        stderr: best.stderr,
        argpoint: ArgPoint { epsilon: best.epsilon, delta: best.delta, n: best.n, ..Default::default() },
        cross_check: None,
        per_grid,
    })
}

/// `max_ε min_δ max_n` over an `(ε, δ, n)`-ordered table; returns the value and the
/// index of the cell attaining it.
pub fn chi_compose(table: &[GridCell], n_eps: usize, n_del: usize, n_n: usize) -> (f64, usize) {
    let mut best: Option<(f64, usize)> = None;
    for e in 0..n_eps {
        let mut inner: Option<(f64, usize)> = None;
        for d in 0..n_del {
            let base = (e * n_del + d) * n_n;
            let mut top = (table[base].value, base);
            for i in 1..n_n {
                if table[base + i].value > top.0 {
                    top = (table[base + i].value, base + i);
                }
            }
            if inner.map_or(true, |(v, _)| top.0 < v) {
                inner = Some(top);
            }
        }
        let inner = inner.expect("nonempty delta grid");
        if best.map_or(true, |(v, _)| inner.0 > v) {
            best = Some(inner);
        }
    }
    best.expect("nonempty epsilon grid")
}

/// λ_P surrogate for `N_n / k_n → 1`, one estimate per candidate `k_n`, all from the
/// same index draws.
pub fn lambda_p_ratios(
    index: &IndexModel,
    kns: &[KnSpec],
    grid: &EstimatorGrid,
    rng: &RngStream,
) -> Result<Vec<IndexEstimate>> {
    let ns = grid.n_values();
    let eps = grid.epsilons();
    let mut k_table = Vec::with_capacity(kns.len());
    for kn in kns {
        kn.check()?;
        k_table.push(ns.iter().map(|&n| kn.k(n)).collect::<Result<Vec<u64>>>()?);
    }
    let cell = |c: usize, e: usize, i: usize| (c * eps.len() + e) * ns.len() + i;
    let size = kns.len() * eps.len() * ns.len();
    let counts = par_accumulate(
        grid.samples(),
        || vec![0u64; size],
        |acc, s| {
            for (i, &n) in ns.iter().enumerate() {
                let big_n = index.sample_index(n, &mut index_stream(rng, s, n).rng())?;
                for (c, ks) in k_table.iter().enumerate() {
                    let dev = (big_n as f64 / ks[i] as f64 - 1.0).abs();
                    for (e, &epsilon) in eps.iter().enumerate() {
                        if dev >= epsilon {
                            acc[cell(c, e, i)] += 1;
                        }
                    }
                }
            }
            Ok(())
        },
        add_counts,
    )?;

    let samples = grid.samples();
    Ok(kns
        .iter()
        .enumerate()
        .map(|(c, kn)| {
            let mut per_grid = Vec::with_capacity(eps.len() * ns.len());
            let mut best = 0usize;
            for (e, &epsilon) in eps.iter().enumerate() {
                for (i, &n) in ns.iter().enumerate() {
                    let p = counts[cell(c, e, i)] as f64 / samples as f64;
                    per_grid.push(GridCell {
                        epsilon: Some(epsilon),
                        delta: None,
                        alpha: None,
                        n: Some(n),
                        value: p,
                        stderr: binomial_stderr(p, samples),
                    });
                    if p > per_grid[best].value {
                        best = per_grid.len() - 1;
                    }
                }
            }
            let top = &per_grid[best];
            IndexEstimate {
                value: top.value,
                stderr: top.stderr,
                argpoint: ArgPoint { epsilon: top.epsilon, n: top.n, kn: Some(kn.label()), ..Default::default() },
                cross_check: None,
                per_grid,
            }
        })
        .collect())
}

/// λ_P surrogate: `max_ε max_n P̂[|N_n/k_n − 1| ≥ ε]`.
pub fn lambda_p_ratio(index: &IndexModel, kn: &KnSpec, grid: &EstimatorGrid, rng: &RngStream) -> Result<IndexEstimate> {
    Ok(lambda_p_ratios(index, std::slice::from_ref(kn), grid, rng)?.remove(0))
}

/// Minimises the λ_P surrogate over the candidate sequences, first candidate on ties.
///
/// The minimum over a restricted family is an upper bound on the true infimum, so
/// it can only enlarge the right-hand side being checked.
pub fn infimum_over_kn(
    index: &IndexModel,
    kns: &[KnSpec],
    grid: &EstimatorGrid,
    rng: &RngStream,
) -> Result<(KnSpec, IndexEstimate)> {
    if kns.is_empty() {
        return Err(Error::InvalidParameter("kn family is empty".into()));
    }
    let estimates = lambda_p_ratios(index, kns, grid, rng)?;
    let mut best = 0;
    for (i, e) in estimates.iter().enumerate() {
        if e.value < estimates[best].value {
            best = i;
        }
    }
    let est = estimates.into_iter().nth(best).unwrap();
    Ok((kns[best].clone(), est))
}

/// Per-`n` empirical marginals as sorted `(point, count)` lists.
type Marginals = Vec<BTreeMap<PointKey, u64>>;

fn sample_marginals(
    model: &ProcessModel,
    index: Option<&IndexModel>,
    ns: &[u64],
    samples: usize,
    rng: &RngStream,
) -> Result<Marginals> {
    let horizon = match index {
        Some(im) => ns.iter().map(|&n| im.max_index_bound(n)).collect::<Result<Vec<_>>>()?.into_iter().max(),
        None => ns.iter().copied().max(),
    }
    .unwrap_or(1) as usize;
    par_accumulate(
        samples,
        || vec![BTreeMap::new(); ns.len()],
        |acc: &mut Marginals, s| {
            let path = model.sample_path(&path_stream(rng, s), horizon)?;
            for (i, &n) in ns.iter().enumerate() {
                let at = match index {
                    Some(im) => im.sample_index(n, &mut index_stream(rng, s, n).rng())?,
                    None => n,
                };
                let x = path.at(at).ok_or(Error::IndexOutOfHorizon { index: at, horizon })?;
                *acc[i].entry(PointKey(x.clone())).or_insert(0) += 1;
            }
            Ok(())
        },
        |mut a, b| {
            for (ma, mb) in a.iter_mut().zip(b) {
                for (k, v) in mb {
                    *ma.entry(k).or_insert(0) += v;
                }
            }
            a
        },
    )
}

/// Counts how many sampled values fall in each member of the family.
fn family_counts(
    space: &Space,
    family: &SetFamily,
    members: &[TestSet],
    marginal: &BTreeMap<PointKey, u64>,
) -> Vec<u64> {
    if let (SetFamily::HalfLines { .. }, true) = (family, space.is_real_line()) {
        // sorted atoms and prefix sums: binary search per threshold
        let xs: Vec<f64> = marginal.keys().map(|k| k.0.as_real().unwrap()).collect();
        let mut prefix = Vec::with_capacity(xs.len() + 1);
        prefix.push(0u64);
        for c in marginal.values() {
            prefix.push(prefix.last().unwrap() + c);
        }
        let total = *prefix.last().unwrap();
        return members
            .iter()
            .map(|m| match m {
                TestSet::HalfLine { side: Side::AtMost, threshold } => prefix[xs.partition_point(|x| x <= threshold)],
                TestSet::HalfLine { side: Side::AtLeast, threshold } => {
                    total - prefix[xs.partition_point(|x| x < threshold)]
                }
                other => marginal.iter().filter(|(k, _)| other.contains(space, &k.0)).map(|(_, c)| c).sum(),
            })
            .collect();
    }
    members.iter().map(|m| marginal.iter().filter(|(k, _)| m.contains(space, &k.0)).map(|(_, c)| *c).sum()).collect()
}

/// λ_w surrogate by the closed-set form:
/// `max_{F ∈ family} max_n (P̂[ξ_n ∈ F] − P[ξ ∈ F])`, clamped to `[0, 1]`.
///
/// With `index` set, the sequence is the randomized `ξ_{N_n}`. The hat-function form
/// `max_{F, width ∈ ε-grid, n} |Ê h(ξ_n) − E h(ξ)|` is reported as `cross_check`.
pub fn lambda_w(
    space: &Space,
    model: &ProcessModel,
    index: Option<&IndexModel>,
    target: &Law,
    family: &SetFamily,
    grid: &EstimatorGrid,
    rng: &RngStream,
) -> Result<IndexEstimate> {
    let members = family.members();
    let target_probs = members.iter().map(|f| target.exact_prob(space, f)).collect::<Result<Vec<f64>>>()?;
    let ns = grid.n_values();
    let samples = grid.samples();
    let marginals = sample_marginals(model, index, &ns, samples, rng)?;

    let mut per_grid = Vec::with_capacity(ns.len());
    let mut best_sets = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        let counts = family_counts(space, family, &members, &marginals[i]);
        let mut best: Option<(f64, f64, usize)> = None;
        for (f, (&c, &p)) in counts.iter().zip(&target_probs).enumerate() {
            let phat = c as f64 / samples as f64;
            let diff = phat - p;
            if best.map_or(true, |(v, _, _)| diff > v) {
                best = Some((diff, phat, f));
            }
        }
        let (diff, phat, f) = best.ok_or_else(|| Error::InvalidParameter("set family is empty".into()))?;
        per_grid.push(GridCell {
            epsilon: None,
            delta: None,
            alpha: None,
            n: Some(n),
            value: diff,
            stderr: binomial_stderr(phat, samples),
        });
        best_sets.push(f);
    }
    let mut top = 0;
    for (i, c) in per_grid.iter().enumerate() {
        if c.value > per_grid[top].value {
            top = i;
        }
    }

    let mut cross = 0.0f64;
    for w in grid.epsilons() {
        for f in &members {
            let hat = HatFunction::new(f.clone(), *w)?;
            let exact = target.expect_hat(space, &hat)?;
            for m in &marginals {
                let emp: f64 = m.iter().map(|(k, c)| *c as f64 * hat.eval(space, &k.0)).sum::<f64>() / samples as f64;
                cross = cross.max((emp - exact).abs());
            }
        }
    }

    Ok(IndexEstimate {
        value: per_grid[top].value.clamp(0.0, 1.0),
        stderr: per_grid[top].stderr,
        argpoint: ArgPoint {
            n: per_grid[top].n,
            set: Some(members[best_sets[top]].label(space)),
            ..Default::default()
        },
        cross_check: Some(cross.min(1.0)),
        per_grid,
    })
}

/// `max_F (P[ξ ∈ F^{(ε)}] − P[ξ ∈ F])` over the family: how much mass the target
/// gains when every test set is enlarged by `ε`.
pub fn target_modulus(space: &Space, target: &Law, family: &SetFamily, epsilon: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for f in family.members() {
        let gain = target.exact_prob(space, &f.enlarge(space, epsilon))? - target.exact_prob(space, &f)?;
        worst = worst.max(gain);
    }
    Ok(worst)
}

/// Everything needed to estimate the indices and check the inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub space: Space,
    pub process: ProcessModel,
    pub index_model: IndexModel,
    pub target: Law,
    pub family: SetFamily,
    pub kn_family: Vec<KnSpec>,
    pub grid: EstimatorGrid,
    pub seed: u64,
}

impl Scenario {
    /// Checks cross-module preconditions, collecting every violation.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        fn push(errs: &mut Vec<String>, prefix: &str, r: Result<()>) {
            if let Err(e) = r {
                match e {
                    Error::Validation(v) => errs.extend(v),
                    other => errs.push(format!("{prefix}: {other}")),
                }
            }
        }
        push(&mut errs, "process", self.process.check(&self.space));
        push(&mut errs, "index_model", self.index_model.check());
        push(&mut errs, "target", self.target.check(&self.space));
        push(&mut errs, "set_family", self.family.check(&self.space));
        if !self.family.is_enlargement_closed() {
            errs.push("set_family: must be closed under enlargement".into());
        }
        if self.kn_family.is_empty() {
            errs.push("kn_family: must contain at least one sequence".into());
        }
        let b = self.grid.n_window().1;
        for kn in &self.kn_family {
            push(&mut errs, "kn_family", kn.check());
            if let Some(len) = kn.declared_len() {
                if (len as u64) < b {
                    errs.push(format!("kn_family: explicit sequence has {len} terms, n_window needs {b}"));
                }
            }
        }
        if let IndexModel::Deterministic(kn) = &self.index_model {
            if let Some(len) = kn.declared_len() {
                if (len as u64) < b {
                    errs.push(format!("index_model: explicit sequence has {len} terms, n_window needs {b}"));
                }
            }
        }
        if errs.is_empty() {
            for f in self.family.members() {
                if let Err(e) = self.target.exact_prob(&self.space, &f) {
                    errs.push(format!("target: {e}"));
                    break;
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn root_stream(&self) -> RngStream {
        RngStream::new(self.seed, 0)
    }

    pub fn stream(&self, role: u64) -> RngStream {
        self.root_stream().substream(role)
    }

    /// Horizon that covers every χ window and every realization of `N_n`.
    pub fn full_horizon(&self) -> Result<u64> {
        let mut h = self.grid.chi_horizon();
        for n in self.grid.n_values() {
            h = h.max(self.index_model.max_index_bound(n)?);
        }
        Ok(h)
    }

    pub fn chi(&self) -> Result<IndexEstimate> {
        chi_ansc(&self.space, &self.process, &self.grid, &self.stream(role::CHI))
    }

    pub fn lambda_w(&self) -> Result<IndexEstimate> {
        lambda_w(&self.space, &self.process, None, &self.target, &self.family, &self.grid, &self.stream(role::WEAK))
    }

    pub fn lambda_w_randomized(&self) -> Result<IndexEstimate> {
        lambda_w(
            &self.space,
            &self.process,
            Some(&self.index_model),
            &self.target,
            &self.family,
            &self.grid,
            &self.stream(role::RANDOMIZED_WEAK),
        )
    }

    pub fn lambda_p_all(&self) -> Result<Vec<IndexEstimate>> {
        lambda_p_ratios(&self.index_model, &self.kn_family, &self.grid, &self.stream(role::LAMBDA_P))
    }

    pub fn lambda_p_infimum(&self) -> Result<(KnSpec, IndexEstimate)> {
        infimum_over_kn(&self.index_model, &self.kn_family, &self.grid, &self.stream(role::LAMBDA_P))
    }

    /// The exceedance cell `(n = a, δ = max, ε = min)` used in comparisons.
    pub fn probe_cell(&self) -> (u64, f64, f64) {
        (self.grid.n_window().0, *self.grid.deltas().last().unwrap(), self.grid.epsilon_min())
    }

    pub fn probe_exceedance(&self) -> Result<(f64, f64)> {
        let (n, d, e) = self.probe_cell();
        window_exceedance(&self.space, &self.process, n, d, e, self.grid.samples(), &self.stream(role::EXCEEDANCE))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slack {
    /// Three times the combined standard error of the four estimates.
    pub mc: f64,
    /// Target modulus at the smallest ε.
    pub modulus: f64,
    pub total: f64,
}

/// A right-hand-side term of the inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsTerm {
    Weak,
    Chi,
    LambdaP,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub lhs: IndexEstimate,
    pub rhs_weak: IndexEstimate,
    pub rhs_chi: IndexEstimate,
    pub rhs_lp: IndexEstimate,
    pub best_kn: String,
    pub slack: Slack,
    pub pass: bool,
}

impl InequalityReport {
    pub fn rhs_total(&self) -> f64 {
        self.rhs_weak.value + self.rhs_chi.value + self.rhs_lp.value + self.slack.total
    }

    /// The verdict with one right-hand term removed (slack unchanged).
    pub fn passes_without(&self, term: RhsTerm) -> bool {
        let dropped = match term {
            RhsTerm::Weak => self.rhs_weak.value,
            RhsTerm::Chi => self.rhs_chi.value,
            RhsTerm::LambdaP => self.rhs_lp.value,
        };
        self.lhs.value <= self.rhs_total() - dropped
    }
}

/// Estimates all four terms on independent substreams and checks
/// `lhs ≤ rhs_weak + rhs_chi + rhs_lp + slack`.
pub fn verify_inequality(scenario: &Scenario) -> Result<InequalityReport> {
    scenario.validate()?;
    let lhs = scenario.lambda_w_randomized()?;
    let rhs_weak = scenario.lambda_w()?;
    let rhs_chi = scenario.chi()?;
    let (best_kn, rhs_lp) = scenario.lambda_p_infimum()?;
    let modulus = target_modulus(&scenario.space, &scenario.target, &scenario.family, scenario.grid.epsilon_min())?;
    let combined = [&lhs, &rhs_weak, &rhs_chi, &rhs_lp].iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt();
    let mc = 3.0 * combined;
    let slack = Slack { mc, modulus, total: mc + modulus };
    let rhs = rhs_weak.value + rhs_chi.value + rhs_lp.value + slack.total;
    let pass = lhs.value <= rhs;
    Ok(InequalityReport { pass, lhs, rhs_weak, rhs_chi, rhs_lp, best_kn: best_kn.label(), slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::AnalyticLaw;
    use crate::metric_space::MetricPoint;
    use crate::processes::EventualOutcome;
    use proptest::prelude::*;

    fn r(x: f64) -> MetricPoint {
        MetricPoint::real(x)
    }

    fn grid(eps: &[f64], dels: &[f64], window: (u64, u64), stride: u64, samples: usize) -> EstimatorGrid {
        EstimatorGrid::new(eps.to_vec(), dels.to_vec(), AlphaGrid::Auto, window, stride, samples).unwrap()
    }

    #[test]
    fn window_bounds_examples() {
        assert_eq!(window_bounds(10, 0.25), (8, 12));
        assert_eq!(window_bounds(10, 0.05), (10, 10));
        assert_eq!(window_bounds(7, 0.5), (4, 10));
        assert_eq!(window_bounds(10, 0.3), (7, 13));
        assert_eq!(window_bounds(3, 2.0), (1, 9));
    }

    #[test]
    fn grid_validation_collects_every_violation() {
        let err = EstimatorGrid::new(vec![-1.0], vec![0.001], AlphaGrid::Auto, (1000, 900), 0, 10).unwrap_err();
        let Error::Validation(list) = err else { panic!("expected validation error") };
        assert!(list.iter().any(|m| m.contains("delta*a >= 2")));
        assert!(list.iter().any(|m| m.starts_with("epsilon_grid")));
        assert!(list.iter().any(|m| m.starts_with("samples")));
        assert!(list.iter().any(|m| m.starts_with("stride")));
        assert!(list.iter().any(|m| m.starts_with("n_window")));
        assert!(EstimatorGrid::new(vec![0.1], vec![0.002], AlphaGrid::Auto, (1000, 1024), 1, 100).is_ok());
    }

    #[test]
    fn exceedance_examples() {
        let line = Space::real_line();
        let s = RngStream::new(1, 0);
        let (p, se) = window_exceedance(&line, &ProcessModel::Constant(r(3.0)), 50, 0.2, 0.01, 200, &s).unwrap();
        assert_eq!((p, se), (0.0, 0.0));
        let alt = ProcessModel::Alternating { even: r(-1.0), odd: r(1.0) };
        let (p, _) = window_exceedance(&line, &alt, 100, 0.1, 1.0, 200, &s).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn chi_of_constant_and_alternating() {
        let line = Space::real_line();
        let g = grid(&[0.5, 1.0], &[0.1, 0.2], (100, 200), 10, 200);
        let c = chi_ansc(&line, &ProcessModel::Constant(r(0.0)), &g, &RngStream::new(2, 0)).unwrap();
        assert_eq!(c.value, 0.0);
        assert!(c.per_grid.iter().all(|cell| cell.value == 0.0));
        let alt = ProcessModel::Alternating { even: r(-1.0), odd: r(1.0) };
        let a = chi_ansc(&line, &alt, &g, &RngStream::new(2, 0)).unwrap();
        assert_eq!(a.value, 1.0);
        assert_eq!(a.per_grid.len(), 2 * 2 * 11);
        let (v, _) = chi_compose(&a.per_grid, 2, 2, 11);
        assert_eq!(v, a.value);
    }

    #[test]
    fn chi_table_is_monotone_for_partial_sums() {
        let line = Space::real_line();
        let model = ProcessModel::PartialSumNormalized { step: Law::rademacher() };
        let g = grid(&[0.05, 0.1, 0.2], &[0.01, 0.04], (400, 800), 50, 2_000);
        let est = chi_ansc(&line, &model, &g, &RngStream::new(7, 3)).unwrap();
        let cell = |e: usize, d: usize, i: usize| est.per_grid[(e * 2 + d) * 9 + i].value;
        for i in 0..9 {
            for d in 0..2 {
                for e in 1..3 {
                    assert!(cell(e, d, i) <= cell(e - 1, d, i));
                }
            }
            for e in 0..3 {
                assert!(cell(e, 0, i) <= cell(e, 1, i));
            }
        }
        // smallest ε: strictly inside (0, value at 4x larger δ)
        let small = (0..9).map(|i| cell(0, 0, i)).fold(0.0, f64::max);
        let large = (0..9).map(|i| cell(0, 1, i)).fold(0.0, f64::max);
        assert!(small > 0.0 && small < large, "{small} vs {large}");
        assert!(est.value > 0.0 && est.value < 1.0);
    }

    #[test]
    fn lambda_p_examples() {
        let g = grid(&[0.1, 0.5], &[0.1], (20, 30), 1, 10_000);
        let s = RngStream::new(9, 4);
        let det = IndexModel::Deterministic(KnSpec::Linear(1.0));
        assert_eq!(lambda_p_ratio(&det, &KnSpec::Linear(1.0), &g, &s).unwrap().value, 0.0);
        let tp = IndexModel::TwoPoint { q: 0.3 };
        let one = lambda_p_ratio(&tp, &KnSpec::Linear(1.0), &g, &s).unwrap();
        assert!((one.value - 0.3).abs() < 0.02, "{}", one.value);
        let two = lambda_p_ratio(&tp, &KnSpec::Linear(2.0), &g, &s).unwrap();
        assert!((two.value - 0.7).abs() < 0.02, "{}", two.value);
        // per-ε values are nonincreasing in ε
        for i in 0..11 {
            assert!(one.per_grid[11 + i].value <= one.per_grid[i].value);
        }
    }

    #[test]
    fn infimum_examples() {
        let g = grid(&[0.1, 0.5], &[0.1], (20, 30), 1, 10_000);
        let s = RngStream::new(10, 4);
        let cs: Vec<KnSpec> = [0.5, 1.0, 2.0].iter().map(|&c| KnSpec::Linear(c)).collect();
        let (best, est) = infimum_over_kn(&IndexModel::Deterministic(KnSpec::Linear(1.0)), &cs, &g, &s).unwrap();
        assert_eq!((best, est.value), (KnSpec::Linear(1.0), 0.0));

        let cs: Vec<KnSpec> = [0.5, 1.0, 1.5, 2.0, 3.0].iter().map(|&c| KnSpec::Linear(c)).collect();
        let (best, est) = infimum_over_kn(&IndexModel::TwoPoint { q: 0.3 }, &cs, &g, &s).unwrap();
        assert_eq!(best, KnSpec::Linear(1.0));
        assert!((est.value - 0.3).abs() < 0.02);

        let (best, est) = infimum_over_kn(&IndexModel::TwoPoint { q: 0.5 }, &cs, &g, &s).unwrap();
        assert!(best == KnSpec::Linear(1.0) || best == KnSpec::Linear(2.0));
        assert!((est.value - 0.5).abs() < 0.02);
        assert!(infimum_over_kn(&IndexModel::TwoPoint { q: 0.5 }, &[], &g, &s).is_err());
    }

    #[test]
    fn lambda_w_point_masses() {
        let line = Space::real_line();
        let g = grid(&[0.1], &[0.5], (4, 8), 1, 100);
        let fam = SetFamily::half_lines(vec![-0.5, 0.5, 1.5]).unwrap();
        let s = RngStream::new(0, 0);
        let zero = ProcessModel::Constant(r(0.0));
        let far = lambda_w(&line, &zero, None, &Law::point_mass(r(1.0)), &fam, &g, &s).unwrap();
        assert_eq!(far.value, 1.0);
        assert_eq!(far.argpoint.set.as_deref(), Some("(-inf,0.5]"));
        let same = lambda_w(&line, &zero, None, &Law::point_mass(r(0.0)), &fam, &g, &s).unwrap();
        assert_eq!(same.value, 0.0);
    }

    #[test]
    fn lambda_w_value_recomposes_from_table() {
        let line = Space::real_line();
        let g = grid(&[0.2], &[0.5], (4, 12), 2, 500);
        let fam = SetFamily::half_lines((-4..=4).map(|i| i as f64 * 0.5).collect()).unwrap();
        let model = ProcessModel::PartialSumNormalized { step: Law::rademacher() };
        let est =
            lambda_w(&line, &model, None, &Law::normal(0.0, 1.0).unwrap(), &fam, &g, &RngStream::new(3, 3)).unwrap();
        let top = est.per_grid.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(est.value, top.clamp(0.0, 1.0));
        assert!(est.cross_check.is_some());
    }

    #[test]
    fn verifier_on_degenerate_scenario() {
        let sc = Scenario {
            space: Space::real_line(),
            process: ProcessModel::Constant(r(0.0)),
            index_model: IndexModel::Deterministic(KnSpec::Linear(1.0)),
            target: Law::point_mass(r(0.0)),
            family: SetFamily::support_subsets(vec![r(0.0), r(1.0)]).unwrap(),
            kn_family: vec![KnSpec::Linear(1.0)],
            grid: grid(&[0.25, 0.5], &[0.2], (10, 20), 1, 200),
            seed: 1,
        };
        let rep = verify_inequality(&sc).unwrap();
        assert!(rep.pass);
        for e in [&rep.lhs, &rep.rhs_weak, &rep.rhs_chi, &rep.rhs_lp] {
            assert_eq!(e.value, 0.0);
        }
        assert_eq!(rep.slack.total, 0.0);
    }

    #[test]
    fn verifier_refuses_invalid_scenarios() {
        let sc = Scenario {
            space: Space::real_line(),
            process: ProcessModel::Constant(r(0.0)),
            index_model: IndexModel::TwoPoint { q: 1.5 },
            target: Law::point_mass(r(0.0)),
            family: SetFamily::half_lines(vec![0.0]).unwrap(),
            kn_family: vec![KnSpec::Explicit(vec![1, 2, 3])],
            grid: grid(&[0.25], &[0.2], (10, 20), 1, 200),
            seed: 1,
        };
        let Err(Error::Validation(list)) = verify_inequality(&sc) else { panic!("expected validation failure") };
        assert!(list.iter().any(|m| m.contains("two_point")));
        assert!(list.iter().any(|m| m.contains("explicit sequence has 3 terms")));
    }

    #[test]
    fn target_modulus_matches_normal_bound() {
        let line = Space::real_line();
        let fam = SetFamily::half_lines((-30..=30).map(|i| i as f64 * 0.1).collect()).unwrap();
        let w = target_modulus(&line, &Law::normal(0.0, 1.0).unwrap(), &fam, 0.1).unwrap();
        assert!(w <= 0.1 / (2.0 * std::f64::consts::PI).sqrt() + 1e-12);
        assert!(w > 0.039);
        let pm = target_modulus(
            &line,
            &Law::point_mass(r(0.0)),
            &SetFamily::support_subsets(vec![r(0.0), r(1.0)]).unwrap(),
            0.5,
        )
        .unwrap();
        assert_eq!(pm, 0.0);
    }

    #[test]
    fn mixed_outcome_exceedance_is_near_its_weight() {
        let line = Space::real_line();
        let osc: Vec<MetricPoint> = (1..=60).map(|n| r(if n % 2 == 0 { 0.0 } else { 1.0 })).collect();
        let model = ProcessModel::EventuallyConstant(vec![
            EventualOutcome { prefix: osc, limit: r(0.0), probability: 0.25 },
            EventualOutcome { prefix: vec![], limit: r(0.0), probability: 0.75 },
        ]);
        let (p, se) = window_exceedance(&line, &model, 20, 0.2, 0.5, 20_000, &RngStream::new(4, 4)).unwrap();
        assert!((p - 0.25).abs() <= 4.0 * se, "{p}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn window_contains_n(n in 1u64..5000, delta in 0.0001f64..3.0) {
            let (lo, hi) = window_bounds(n, delta);
            prop_assert!(lo >= 1 && lo <= n && n <= hi);
        }

        #[test]
        fn estimates_stay_in_unit_interval(seed in any::<u64>(), q in 0.0f64..1.0) {
            let line = Space::real_line();
            let g = grid(&[0.3, 0.9], &[0.25], (8, 12), 2, 100);
            let model = ProcessModel::PartialSumNormalized { step: Law::rademacher() };
            let s = RngStream::new(seed, 0);
            let target = Law::Analytic(AnalyticLaw::rademacher());
            let fam = SetFamily::half_lines(vec![-1.0, 0.0, 1.0]).unwrap();
            let im = IndexModel::TwoPoint { q };
            for est in [
                chi_ansc(&line, &model, &g, &s).unwrap(),
                lambda_p_ratio(&im, &KnSpec::Linear(1.0), &g, &s).unwrap(),
                lambda_w(&line, &model, Some(&im), &target, &fam, &g, &s).unwrap(),
            ] {
                prop_assert!((0.0..=1.0).contains(&est.value));
                prop_assert!(est.stderr >= 0.0);
            }
        }
    }
}
