//! Exact evaluation of the surrogates for finitely supported models, the five
//! equivalent forms of the weak defect, and the pathwise check of the inclusion
//! behind the inequality.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::distributions::{FiniteDistribution, Law};
use crate::error::{Error, Result};
use crate::indices::{chi_compose, window_bounds, EstimatorGrid, GridCell, Scenario};
use crate::metric_space::{HatFunction, Interval, MetricPoint, OpenSet, SetFamily, Space, TestSet};
use crate::processes::{KnSpec, Path};

/// Upper bound on the number of joint (path, index) outcomes materialised at once.
const MAX_JOINT_OUTCOMES: usize = 1 << 22;

/// Largest combined support accepted by [`lambda_w_five_forms`].
pub const MAX_FIVE_FORM_SUPPORT: usize = 20;

/// Exact law of a finite-outcome process together with the law of `N_n` for each
/// `n` in a window. Path and index are independent, so outcomes are stored in
/// product form.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProcessSpec {
    outcomes: Vec<(Path, f64)>,
    index_laws: BTreeMap<u64, Vec<(u64, f64)>>,
    horizon: usize,
    n_window: (u64, u64),
}

/// One atom of the joint law: a path, one index per `n` of the window, and its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcome {
    pub path: usize,
    pub indices: Vec<u64>,
    pub probability: f64,
}

fn check_weights<I: IntoIterator<Item = f64>>(what: &str, weights: I) -> Result<()> {
    let mut total = 0.0;
    for w in weights {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidParameter(format!("{what}: probabilities must be positive, got {w}")));
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("{what}: probabilities sum to {total}, expected 1")));
    }
    Ok(())
}

impl FiniteProcessSpec {
    pub fn new(
        outcomes: Vec<(Path, f64)>,
        index_laws: BTreeMap<u64, Vec<(u64, f64)>>,
        horizon: usize,
        n_window: (u64, u64),
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidParameter("finite spec needs at least one outcome".into()));
        }
        check_weights("path outcomes", outcomes.iter().map(|(_, p)| *p))?;
        if let Some((p, _)) = outcomes.iter().find(|(p, _)| p.horizon() != horizon) {
            return Err(Error::InvalidParameter(format!(
                "path of length {} in a spec with horizon {horizon}",
                p.horizon()
            )));
        }
        for (n, law) in &index_laws {
            check_weights(&format!("index law at n={n}"), law.iter().map(|(_, p)| *p))?;
        }
        Ok(FiniteProcessSpec { outcomes, index_laws, horizon, n_window })
    }

    pub fn outcomes(&self) -> &[(Path, f64)] {
        &self.outcomes
    }

    pub fn index_law(&self, n: u64) -> Option<&[(u64, f64)]> {
        self.index_laws.get(&n).map(Vec::as_slice)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_window(&self) -> (u64, u64) {
        self.n_window
    }

    /// Expands the product form into explicit joint atoms.
    pub fn joint_outcomes(&self) -> Result<Vec<JointOutcome>> {
        let laws: Vec<&Vec<(u64, f64)>> = self.index_laws.values().collect();
        let count = laws.iter().try_fold(self.outcomes.len(), |acc, l| acc.checked_mul(l.len()));
        match count {
            Some(c) if c <= MAX_JOINT_OUTCOMES => {}
            _ => return Err(Error::NotEnumerable("joint outcome space is too large".into())),
        }
        let mut out = Vec::new();
        for (pi, (_, pp)) in self.outcomes.iter().enumerate() {
            let mut partial = vec![(Vec::new(), *pp)];
            for law in &laws {
                partial = partial
                    .into_iter()
                    .flat_map(|(idx, p): (Vec<u64>, f64)| {
                        law.iter().map(move |(k, q)| {
                            let mut v = idx.clone();
                            v.push(*k);
                            (v, p * q)
                        })
                    })
                    .collect();
            }
            out.extend(partial.into_iter().map(|(indices, probability)| JointOutcome {
                path: pi,
                indices,
                probability,
            }));
        }
        Ok(out)
    }

    fn value_at(&self, path: &Path, n: u64) -> Result<MetricPoint> {
        path.at(n).cloned().ok_or(Error::HorizonExceeded { needed: n, horizon: self.horizon })
    }

    /// Law of `ξ_n`.
    pub fn marginal(&self, n: u64) -> Result<FiniteDistribution> {
        let mut items = Vec::with_capacity(self.outcomes.len());
        for (path, p) in &self.outcomes {
            items.push((self.value_at(path, n)?, *p));
        }
        FiniteDistribution::from_weighted(items)
    }

    /// Law of `ξ_{N_n}`.
    pub fn randomized_marginal(&self, n: u64) -> Result<FiniteDistribution> {
        let law =
            self.index_law(n).ok_or_else(|| Error::InvalidParameter(format!("no index law recorded for n={n}")))?;
        let mut items = Vec::with_capacity(self.outcomes.len() * law.len());
        for (path, p) in &self.outcomes {
            for (k, q) in law {
                items.push((self.value_at(path, *k)?, p * q));
            }
        }
        FiniteDistribution::from_weighted(items)
    }
}

fn window_max(space: &Space, path: &Path, n: u64, delta: f64, horizon: usize) -> Result<f64> {
    let (lo, hi) = window_bounds(n, delta);
    if hi as usize > horizon {
        return Err(Error::HorizonExceeded { needed: hi, horizon });
    }
    let x = path.at(n).unwrap();
    Ok((lo..=hi).map(|m| space.dist(x, path.at(m).unwrap())).fold(0.0, f64::max))
}

/// `P[max_{m ∈ window(n,δ)} d(ξ_n, ξ_m) ≥ ε]`, exactly.
pub fn exact_window_exceedance(
    space: &Space,
    spec: &FiniteProcessSpec,
    n: u64,
    delta: f64,
    epsilon: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (path, p) in spec.outcomes() {
        if window_max(space, path, n, delta, spec.horizon())? >= epsilon {
            total += p;
        }
    }
    Ok(total)
}

/// Exact χ surrogate table in `(ε, δ, n)` order, and its `max_ε min_δ max_n`.
pub fn exact_chi_surrogate(
    space: &Space,
    spec: &FiniteProcessSpec,
    grid: &EstimatorGrid,
) -> Result<(f64, Vec<GridCell>)> {
    let ns = grid.n_values();
    let mut table = Vec::new();
    for &epsilon in grid.epsilons() {
        for &delta in grid.deltas() {
            for &n in &ns {
                let value = exact_window_exceedance(space, spec, n, delta, epsilon)?;
                table.push(GridCell {
                    epsilon: Some(epsilon),
                    delta: Some(delta),
                    alpha: None,
                    n: Some(n),
                    value,
                    stderr: 0.0,
                });
            }
        }
    }
    let (value, _) = chi_compose(&table, grid.epsilons().len(), grid.deltas().len(), ns.len());
    Ok((value, table))
}

/// Exact λ_P surrogate `max_ε max_n P[|N_n/k_n − 1| ≥ ε]`.
pub fn exact_lambda_p(spec: &FiniteProcessSpec, kn: &KnSpec, grid: &EstimatorGrid) -> Result<f64> {
    let mut best = 0.0f64;
    for n in grid.n_values() {
        let law =
            spec.index_law(n).ok_or_else(|| Error::InvalidParameter(format!("no index law recorded for n={n}")))?;
        let k = kn.k(n)? as f64;
        for &epsilon in grid.epsilons() {
            let p: f64 = law.iter().filter(|(m, _)| (*m as f64 / k - 1.0).abs() >= epsilon).map(|(_, q)| q).sum();
            best = best.max(p);
        }
    }
    Ok(best)
}

/// Exact λ_w surrogate `max_n max_F (P[ξ_n ∈ F] − P[ξ ∈ F])`, clamped to `[0, 1]`,
/// for the plain or the randomized sequence.
pub fn exact_lambda_w(
    space: &Space,
    spec: &FiniteProcessSpec,
    target: &Law,
    family: &SetFamily,
    grid: &EstimatorGrid,
    randomized: bool,
) -> Result<f64> {
    let members = family.members();
    let target_probs = members.iter().map(|f| target.exact_prob(space, f)).collect::<Result<Vec<_>>>()?;
    let mut best = f64::NEG_INFINITY;
    for n in grid.n_values() {
        let law = if randomized { spec.randomized_marginal(n)? } else { spec.marginal(n)? };
        for (f, p) in members.iter().zip(&target_probs) {
            best = best.max(law.prob(space, f) - p);
        }
    }
    Ok(best.clamp(0.0, 1.0))
}

/// Laws of `S_n / √n` for an integer-valued step law, by repeated convolution.
/// The atoms are computed with the same arithmetic as sampled paths.
pub fn partial_sum_marginals(step: &FiniteDistribution, ns: &[u64]) -> Result<Vec<FiniteDistribution>> {
    let mut steps = Vec::with_capacity(step.atoms().len());
    for (atom, w) in step.iter() {
        let x = atom
            .as_real()
            .filter(|x| x.fract() == 0.0 && x.abs() < 1e6)
            .ok_or_else(|| Error::InvalidParameter("partial-sum marginals need integer-valued real steps".into()))?;
        steps.push((x as i64, w));
    }
    let lo_step = steps.iter().map(|s| s.0).min().unwrap();
    let hi_step = steps.iter().map(|s| s.0).max().unwrap();
    let mut wanted: Vec<u64> = ns.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    if wanted.first() == Some(&0) {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }

    // mass[j] = P[S_n = n·lo_step + j]
    let mut mass = vec![1.0f64];
    let mut out = BTreeMap::new();
    let mut n = 0u64;
    for &target in &wanted {
        while n < target {
            let width = (hi_step - lo_step) as usize;
            let mut next = vec![0.0; mass.len() + width];
            for (j, m) in mass.iter().enumerate() {
                if *m == 0.0 {
                    continue;
                }
                for (s, w) in &steps {
                    next[j + (s - lo_step) as usize] += m * w;
                }
            }
            mass = next;
            n += 1;
        }
        let root = (n as f64).sqrt();
        let items = mass
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(|(j, m)| (MetricPoint::real((n as i64 * lo_step + j as i64) as f64 / root), *m));
        out.insert(n, FiniteDistribution::from_weighted(items)?);
    }
    Ok(ns.iter().map(|n| out[n].clone()).collect())
}

/// The weak defect evaluated through each of its five equivalent characterisations,
/// on finite surrogates built from the combined support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveFormResult {
    /// `max_{F, width} |E h(ξ) − E h(ξ_n)|` over hat functions around subsets.
    pub function_form: f64,
    /// `max_{α, A} (P[ξ ∈ A] − P[ξ_n ∈ A^{(α)}])`.
    pub enlargement_form: f64,
    /// `max_G (P[ξ ∈ G] − P[ξ_n ∈ G])` over complements of subsets.
    pub open_form: f64,
    /// `max_F (P[ξ_n ∈ F] − P[ξ ∈ F])` over subsets.
    pub closed_form: f64,
    /// `max_A |P[ξ_n ∈ A] − P[ξ ∈ A]|` over sets with target-null boundary.
    pub continuity_form: f64,
}

impl FiveFormResult {
    pub fn values(&self) -> [f64; 5] {
        [self.function_form, self.enlargement_form, self.open_form, self.closed_form, self.continuity_form]
    }

    pub fn max_gap(&self) -> f64 {
        let v = self.values();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Distinct pairwise distances of `points` plus half the smallest one.
pub fn auto_alpha_grid(space: &Space, points: &[MetricPoint]) -> Vec<f64> {
    let mut d = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push(space.dist(&points[i], &points[j]));
        }
    }
    d.retain(|x| *x > 0.0);
    d.sort_by(f64::total_cmp);
    d.dedup();
    match d.first() {
        Some(&m) => {
            d.insert(0, m / 2.0);
            d
        }
        None => vec![1.0],
    }
}

fn combined_support(laws: &[&FiniteDistribution]) -> Vec<MetricPoint> {
    let mut pts: Vec<MetricPoint> = Vec::new();
    for law in laws {
        for a in law.atoms() {
            if !pts.iter().any(|p| p.same_as(a)) {
                pts.push(a.clone());
            }
        }
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts
}

/// Weights of a law on an indexed support.
fn weight_vector(law: &FiniteDistribution, support: &[MetricPoint]) -> Vec<f64> {
    let mut w = vec![0.0; support.len()];
    for (a, p) in law.iter() {
        let i = support.iter().position(|s| s.same_as(a)).expect("atom in combined support");
        w[i] += p;
    }
    w
}

fn subset(support: &[MetricPoint], mask: u32) -> Vec<MetricPoint> {
    support.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, p)| p.clone()).collect()
}

fn membership(support: &[MetricPoint], mut inside: impl FnMut(&MetricPoint) -> bool) -> u32 {
    support.iter().enumerate().fold(0, |m, (i, p)| if inside(p) { m | (1 << i) } else { m })
}

fn mass(weights: &[f64], mask: u32) -> f64 {
    weights.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, w)| w).sum()
}

/// Interval union on the line whose points among `support` are exactly `mask`,
/// with every endpoint strictly between support points.
fn separating_union(support: &[MetricPoint], mask: u32, gap: f64) -> TestSet {
    let xs: Vec<f64> = support.iter().map(|p| p.as_real().unwrap()).collect();
    let mut ivs = Vec::new();
    let mut i = 0;
    while i < xs.len() {
        if mask & (1 << i) == 0 {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < xs.len() && mask & (1 << (i + 1)) != 0 {
            i += 1;
        }
        let lo = if start == 0 { xs[0] - gap / 2.0 } else { (xs[start - 1] + xs[start]) / 2.0 };
        let hi = if i + 1 == xs.len() { xs[i] + gap / 2.0 } else { (xs[i] + xs[i + 1]) / 2.0 };
        ivs.push(Interval::new(lo, hi).expect("ordered endpoints"));
        i += 1;
    }
    TestSet::interval_union(ivs)
}

/// Evaluates `max_n` of the weak defect between each marginal and the target in five
/// ways. `alphas` is used for both the enlargement radii and the hat widths; `None`
/// selects [`auto_alpha_grid`].
pub fn lambda_w_five_forms(
    space: &Space,
    marginals: &[FiniteDistribution],
    target: &FiniteDistribution,
    alphas: Option<&[f64]>,
) -> Result<FiveFormResult> {
    let mut all: Vec<&FiniteDistribution> = marginals.iter().collect();
    all.push(target);
    for law in &all {
        for a in law.atoms() {
            space.check_point(a)?;
        }
    }
    let support = combined_support(&all);
    if support.len() > MAX_FIVE_FORM_SUPPORT {
        return Err(Error::SupportTooLarge { size: support.len(), limit: MAX_FIVE_FORM_SUPPORT });
    }
    let grid = match alphas {
        Some(a) => a.to_vec(),
        None => auto_alpha_grid(space, &support),
    };
    if grid.is_empty() || grid.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidParameter("alpha grid must be nonempty and positive".into()));
    }
    let gap = auto_alpha_grid(space, &support)[0] * 2.0;

    let target_w = weight_vector(target, &support);
    let laws_w: Vec<Vec<f64>> = marginals.iter().map(|m| weight_vector(m, &support)).collect();
    let subsets = 1u32 << support.len();

    let mut closed_form = 0.0f64;
    let mut open_form = 0.0f64;
    let mut continuity_form = 0.0f64;
    let mut enlargement_form = 0.0f64;
    let mut function_form = 0.0f64;

    for mask in 0..subsets {
        let closed = TestSet::finite_points(subset(&support, mask), 0.0)?;

        let inside = membership(&support, |p| closed.contains(space, p));
        let pt = mass(&target_w, inside);
        for w in &laws_w {
            closed_form = closed_form.max(mass(w, inside) - pt);
        }

        let open = OpenSet::complement_of(closed.clone());
        let inside = membership(&support, |p| open.contains(space, p));
        let pt = mass(&target_w, inside);
        for w in &laws_w {
            open_form = open_form.max(pt - mass(w, inside));
        }

        let continuity = if space.is_real_line() {
            separating_union(&support, mask, gap)
        } else {
            TestSet::finite_points(subset(&support, mask), gap / 4.0)?
        };
        let inside = membership(&support, |p| continuity.contains(space, p));
        let pt = mass(&target_w, inside);
        for w in &laws_w {
            continuity_form = continuity_form.max((mass(w, inside) - pt).abs());
        }

        for &alpha in &grid {
            let grown = closed.enlarge(space, alpha);
            let inside = membership(&support, |p| grown.contains(space, p));
            let pt = mass(&target_w, membership(&support, |p| closed.contains(space, p)));
            for w in &laws_w {
                enlargement_form = enlargement_form.max(pt - mass(w, inside));
            }

            let hat = HatFunction::new(closed.clone(), alpha)?;
            let values: Vec<f64> = support.iter().map(|p| hat.eval(space, p)).collect();
            let et: f64 = values.iter().zip(&target_w).map(|(h, w)| h * w).sum();
            for w in &laws_w {
                let en: f64 = values.iter().zip(w).map(|(h, w)| h * w).sum();
                function_form = function_form.max((et - en).abs());
            }
        }
    }

    Ok(FiveFormResult { function_form, enlargement_form, open_form, closed_form, continuity_form })
}

/// A premise of the pathwise inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Premise {
    /// `ξ_{N} ∈ F`.
    InSet,
    /// `max_{m ∈ window(k,δ)} d(ξ_k, ξ_m) < ε`.
    SmallOscillation,
    /// `|k − N| ≤ δ k`.
    IndexClose,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InclusionOutcome {
    /// All premises held and `ξ_k ∈ F^{(ε)}`.
    Holds,
    /// The listed premises failed, so the inclusion says nothing.
    PremiseViolated(Vec<Premise>),
}

/// Checks, on one path, that `ξ_N ∈ F`, small oscillation around `k` and
/// `|k − N| ≤ δk` together force `ξ_k ∈ F^{(ε)}`. A counterexample is a
/// [`Error::TheoremViolation`].
pub fn proof_inclusion_check(
    space: &Space,
    path: &Path,
    big_n: u64,
    k: u64,
    delta: f64,
    epsilon: f64,
    set: &TestSet,
) -> Result<InclusionOutcome> {
    if big_n == 0 || k == 0 {
        return Err(Error::InvalidParameter("indices start at 1".into()));
    }
    let horizon = path.horizon();
    let (_, hi) = window_bounds(k, delta);
    let needed = hi.max(big_n);
    if needed as usize > horizon {
        return Err(Error::HorizonExceeded { needed, horizon });
    }
    let mut failed = Vec::new();
    if !set.contains(space, path.at(big_n).unwrap()) {
        failed.push(Premise::InSet);
    }
    if window_max(space, path, k, delta, horizon)? >= epsilon {
        failed.push(Premise::SmallOscillation);
    }
    if (k as f64 - big_n as f64).abs() > delta * k as f64 {
        failed.push(Premise::IndexClose);
    }
    if !failed.is_empty() {
        return Ok(InclusionOutcome::PremiseViolated(failed));
    }
    let x = path.at(k).unwrap();
    if set.enlarge(space, epsilon).contains(space, x) {
        Ok(InclusionOutcome::Holds)
    } else {
        Err(Error::TheoremViolation(format!(
            "premises hold at N={big_n}, k={k}, delta={delta}, epsilon={epsilon} but {} is outside the {epsilon}-enlargement of {}",
            space.format_point(x),
            set.label(space)
        )))
    }
}

/// One quantity computed both by Monte Carlo and by the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub mc: f64,
    pub oracle: f64,
    pub stderr: f64,
    /// `(mc − oracle) / stderr`; zero when both agree exactly.
    pub z: f64,
    pub flagged: bool,
}

pub const Z_FLAG: f64 = 4.0;

fn row(quantity: String, mc: f64, stderr: f64, oracle: f64) -> ComparisonRow {
    let diff = mc - oracle;
    let z = if diff.abs() <= 1e-12 {
        0.0
    } else if stderr > 0.0 {
        diff / stderr
    } else {
        f64::INFINITY.copysign(diff)
    };
    ComparisonRow { quantity, mc, oracle, stderr, z, flagged: z.abs() > Z_FLAG }
}

/// Exact surrogate values for an enumerable scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleValues {
    pub exceedance_probe: f64,
    pub chi: f64,
    pub chi_table: Vec<GridCell>,
    pub lambda_p: Vec<(String, f64)>,
    pub lambda_p_infimum: f64,
    pub lambda_w: f64,
    pub lambda_w_randomized: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub five_forms: Option<FiveFormResult>,
}

pub fn scenario_spec(scenario: &Scenario) -> Result<FiniteProcessSpec> {
    let horizon = scenario.full_horizon()? as usize;
    scenario.process.exact_finite_spec(&scenario.index_model, horizon, scenario.grid.n_window())
}

/// Computes every surrogate exactly. The five forms are included when the target is
/// finite and the combined support is small enough.
pub fn oracle_values(scenario: &Scenario) -> Result<OracleValues> {
    scenario.validate()?;
    let spec = scenario_spec(scenario)?;
    let (space, grid) = (&scenario.space, &scenario.grid);
    let (n, d, e) = scenario.probe_cell();
    let exceedance_probe = exact_window_exceedance(space, &spec, n, d, e)?;
    let (chi, chi_table) = exact_chi_surrogate(space, &spec, grid)?;
    let mut lambda_p = Vec::new();
    for kn in &scenario.kn_family {
        lambda_p.push((kn.label(), exact_lambda_p(&spec, kn, grid)?));
    }
    let lambda_p_infimum = lambda_p.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let lambda_w = exact_lambda_w(space, &spec, &scenario.target, &scenario.family, grid, false)?;
    let lambda_w_randomized = exact_lambda_w(space, &spec, &scenario.target, &scenario.family, grid, true)?;
    let five_forms = match scenario.target.as_finite() {
        Some(t) => {
            let marginals = grid.n_values().into_iter().map(|n| spec.marginal(n)).collect::<Result<Vec<_>>>()?;
            match lambda_w_five_forms(space, &marginals, &t, None) {
                Ok(r) => Some(r),
                Err(Error::SupportTooLarge { .. }) => None,
                Err(e) => return Err(e),
            }
        }
        None => None,
    };
    Ok(OracleValues {
        exceedance_probe,
        chi,
        chi_table,
        lambda_p,
        lambda_p_infimum,
        lambda_w,
        lambda_w_randomized,
        five_forms,
    })
}

/// Runs the Monte Carlo estimators and the oracle on the same scenario and grids.
pub fn mc_vs_oracle_compare(scenario: &Scenario) -> Result<Vec<ComparisonRow>> {
    let exact = oracle_values(scenario)?;
    let mut rows = Vec::new();
    let (p, se) = scenario.probe_exceedance()?;
    rows.push(row("window_exceedance".into(), p, se, exact.exceedance_probe));
    let chi = scenario.chi()?;
    rows.push(row("chi".into(), chi.value, chi.stderr, exact.chi));
    for (est, (label, value)) in scenario.lambda_p_all()?.iter().zip(&exact.lambda_p) {
        rows.push(row(format!("lambda_p[{label}]"), est.value, est.stderr, *value));
    }
    let w = scenario.lambda_w()?;
    rows.push(row("lambda_w".into(), w.value, w.stderr, exact.lambda_w));
    let wr = scenario.lambda_w_randomized()?;
    rows.push(row("lambda_w_randomized".into(), wr.value, wr.stderr, exact.lambda_w_randomized));
    Ok(rows)
}
