//! Laws of state-space-valued random variables, exact set probabilities and
//! reproducible random streams.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metric_space::{HatFunction, MetricPoint, OpenSet, Space, TestSet};

/// Standard normal distribution function, `Φ(x) = erfc(-x/√2) / 2`.
///
/// Backed by the FreeBSD/musl `erfc` port in `libm`, accurate to a few ulp.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    atoms: Vec<MetricPoint>,
    weights: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(atoms: Vec<MetricPoint>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "finite law needs matching nonempty atoms and weights ({} vs {})",
                atoms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        let mut sorted: Vec<&MetricPoint> = atoms.iter().collect();
        sorted.sort_by(|a, b| a.total_cmp(b));
        if sorted.windows(2).any(|w| w[0].same_as(w[1])) {
            return Err(Error::InvalidParameter("atoms must be distinct".into()));
        }
        Ok(FiniteDistribution { atoms, weights })
    }

    /// Builds a law from possibly repeated atoms, merging duplicates. Weights must
    /// already sum to one within `1e-12`.
    pub fn from_weighted<I>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MetricPoint, f64)>,
    {
        let mut items: Vec<(MetricPoint, f64)> = items.into_iter().filter(|(_, w)| *w != 0.0).collect();
        items.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<MetricPoint> = Vec::with_capacity(items.len());
        let mut weights: Vec<f64> = Vec::with_capacity(items.len());
        for (p, w) in items {
            match atoms.last() {
                Some(last) if last.same_as(&p) => *weights.last_mut().unwrap() += w,
                _ => {
                    atoms.push(p);
                    weights.push(w);
                }
            }
        }
        FiniteDistribution::new(atoms, weights)
    }

    pub fn uniform(atoms: Vec<MetricPoint>) -> Result<Self> {
        let k = atoms.len();
        if k == 0 {
            return Err(Error::InvalidParameter("uniform law needs at least one atom".into()));
        }
        FiniteDistribution::new(atoms, vec![1.0 / k as f64; k])
    }

    pub fn point_mass(p: MetricPoint) -> Self {
        FiniteDistribution { atoms: vec![p], weights: vec![1.0] }
    }

    pub fn atoms(&self) -> &[MetricPoint] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MetricPoint, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// Sum of the weights of atoms inside `set`.
    pub fn prob(&self, space: &Space, set: &TestSet) -> f64 {
        self.iter().filter(|(p, _)| set.contains(space, p)).map(|(_, w)| w).sum()
    }

    pub fn prob_open(&self, space: &Space, set: &OpenSet) -> f64 {
        self.iter().filter(|(p, _)| set.contains(space, p)).map(|(_, w)| w).sum()
    }

    pub fn expect(&self, mut f: impl FnMut(&MetricPoint) -> f64) -> f64 {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }

    /// Mean and variance of a one-dimensional law.
    pub fn mean_variance(&self) -> Option<(f64, f64)> {
        let xs: Option<Vec<f64>> = self.atoms.iter().map(|p| p.as_real()).collect();
        let xs = xs?;
        let mean: f64 = xs.iter().zip(&self.weights).map(|(x, w)| x * w).sum();
        let var: f64 = xs.iter().zip(&self.weights).map(|(x, w)| w * (x - mean).powi(2)).sum();
        Some((mean, var))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MetricPoint {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (p, w) in self.iter() {
            acc += w;
            if u < acc {
                return p.clone();
            }
        }
        // weights sum to 1 within 1e-12; land on the last positive atom
        let last = self.weights.iter().rposition(|w| *w > 0.0).unwrap_or(self.atoms.len() - 1);
        self.atoms[last].clone()
    }
}

/// Target laws with closed-form set probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticLaw {
    Normal { mean: f64, stddev: f64 },
    PointMass(MetricPoint),
    UniformFinite(Vec<MetricPoint>),
}

impl AnalyticLaw {
    pub fn normal(mean: f64, stddev: f64) -> Result<Self> {
        if !(stddev > 0.0) || !stddev.is_finite() || !mean.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "normal law needs finite mean and stddev > 0, got ({mean}, {stddev})"
            )));
        }
        Ok(AnalyticLaw::Normal { mean, stddev })
    }

    pub fn uniform_finite(atoms: Vec<MetricPoint>) -> Result<Self> {
        // validates distinctness
        FiniteDistribution::uniform(atoms.clone())?;
        Ok(AnalyticLaw::UniformFinite(atoms))
    }

    /// The ±1 equiprobable step law.
    pub fn rademacher() -> Self {
        AnalyticLaw::UniformFinite(vec![MetricPoint::real(-1.0), MetricPoint::real(1.0)])
    }
}

/// Law of an X-valued random variable.
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Finite(FiniteDistribution),
    Analytic(AnalyticLaw),
}

impl From<FiniteDistribution> for Law {
    fn from(d: FiniteDistribution) -> Self {
        Law::Finite(d)
    }
}

impl From<AnalyticLaw> for Law {
    fn from(d: AnalyticLaw) -> Self {
        Law::Analytic(d)
    }
}

impl Law {
    pub fn normal(mean: f64, stddev: f64) -> Result<Self> {
        AnalyticLaw::normal(mean, stddev).map(Law::Analytic)
    }

    pub fn point_mass(p: MetricPoint) -> Self {
        Law::Analytic(AnalyticLaw::PointMass(p))
    }

    pub fn rademacher() -> Self {
        Law::Analytic(AnalyticLaw::rademacher())
    }

    /// The law as an explicit finite distribution, when it has finite support.
    pub fn as_finite(&self) -> Option<FiniteDistribution> {
        match self {
            Law::Finite(d) => Some(d.clone()),
            Law::Analytic(AnalyticLaw::PointMass(p)) => Some(FiniteDistribution::point_mass(p.clone())),
            Law::Analytic(AnalyticLaw::UniformFinite(a)) => FiniteDistribution::uniform(a.clone()).ok(),
            Law::Analytic(AnalyticLaw::Normal { .. }) => None,
        }
    }

    pub fn check(&self, space: &Space) -> Result<()> {
        match self {
            Law::Analytic(AnalyticLaw::Normal { .. }) => {
                if space.is_real_line() {
                    Ok(())
                } else {
                    Err(Error::DomainMismatch("normal laws live on the real line".into()))
                }
            }
            other => other.as_finite().expect("finite support").atoms().iter().try_for_each(|p| space.check_point(p)),
        }
    }

    pub fn label(&self, space: &Space) -> String {
        match self {
            Law::Analytic(AnalyticLaw::Normal { mean, stddev }) => format!("normal({mean},{stddev})"),
            Law::Analytic(AnalyticLaw::PointMass(p)) => format!("point_mass({})", space.format_point(p)),
            Law::Analytic(AnalyticLaw::UniformFinite(a)) => {
                let names: Vec<String> = a.iter().map(|p| space.format_point(p)).collect();
                format!("uniform{{{}}}", names.join(","))
            }
            Law::Finite(d) => format!("finite[{} atoms]", d.atoms().len()),
        }
    }

    /// `P[ξ ∈ S]`. Normal laws support sets that reduce to interval unions on the line.
    pub fn exact_prob(&self, space: &Space, set: &TestSet) -> Result<f64> {
        match self {
            Law::Analytic(AnalyticLaw::Normal { mean, stddev }) => {
                let ivs = set
                    .as_intervals()
                    .ok_or_else(|| Error::UnsupportedSetForLaw { law: self.label(space), set: set.label(space) })?;
                let p: f64 = ivs
                    .iter()
                    .map(|iv| {
                        let lo = (iv.lo - mean) / stddev;
                        let hi = (iv.hi - mean) / stddev;
                        // upper tail via symmetry keeps precision for large thresholds
                        if lo > 0.0 {
                            normal_cdf(-lo) - normal_cdf(-hi)
                        } else {
                            normal_cdf(hi) - normal_cdf(lo)
                        }
                    })
                    .sum();
                Ok(p.clamp(0.0, 1.0))
            }
            other => Ok(other.as_finite().expect("finite support").prob(space, set)),
        }
    }

    /// `P[ξ ∈ G]` for an open set given as a complement.
    pub fn exact_prob_open(&self, space: &Space, set: &OpenSet) -> Result<f64> {
        match self {
            Law::Analytic(AnalyticLaw::Normal { .. }) => Ok(1.0 - self.exact_prob(space, set.complement())?),
            other => Ok(other.as_finite().expect("finite support").prob_open(space, set)),
        }
    }

    /// `E[h(ξ)]` for a hat function, exact for every supported law.
    ///
    /// For the normal law the hat is piecewise linear between the breakpoints of
    /// its base set, and each linear piece integrates in closed form.
    pub fn expect_hat(&self, space: &Space, hat: &HatFunction) -> Result<f64> {
        match self {
            Law::Analytic(AnalyticLaw::Normal { mean, stddev }) => {
                let features = hat.base().features_1d().ok_or_else(|| Error::UnsupportedSetForLaw {
                    law: self.label(space),
                    set: hat.base().label(space),
                })?;
                if features.is_empty() {
                    return Ok(0.0);
                }
                let w = hat.width();
                let mut sorted = features.clone();
                sorted.sort_by(f64::total_cmp);
                let mut bps: Vec<f64> = Vec::with_capacity(sorted.len() * 4);
                for (i, &f) in sorted.iter().enumerate() {
                    bps.extend([f - w, f, f + w]);
                    if i + 1 < sorted.len() {
                        bps.push(0.5 * (f + sorted[i + 1]));
                    }
                }
                bps.retain(|x| x.is_finite());
                bps.sort_by(f64::total_cmp);
                bps.dedup();
                let h = |x: f64| hat.eval(space, &MetricPoint::real(x));
                let z = |x: f64| (x - mean) / stddev;
                let first = bps[0];
                let last = *bps.last().unwrap();
                let mut total = h(first) * normal_cdf(z(first)) + h(last) * normal_cdf(-z(last));
                for pair in bps.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    let (ha, hb) = (h(a), h(b));
                    let slope = (hb - ha) / (b - a);
                    let (za, zb) = (z(a), z(b));
                    let mass = normal_cdf(zb) - normal_cdf(za);
                    // ∫_a^b (x − a) dN(μ,σ²) = (μ − a)·mass + σ(φ(za) − φ(zb))
                    let first_moment = (mean - a) * mass + stddev * (normal_pdf(za) - normal_pdf(zb));
                    total += ha * mass + slope * first_moment;
                }
                Ok(total.clamp(0.0, 1.0))
            }
            other => Ok(other.as_finite().expect("finite support").expect(|p| hat.eval(space, p))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MetricPoint {
        match self {
            Law::Finite(d) => d.sample(rng),
            Law::Analytic(AnalyticLaw::Normal { mean, stddev }) => {
                let z: f64 = rng.sample(StandardNormal);
                MetricPoint::real(mean + stddev * z)
            }
            Law::Analytic(AnalyticLaw::PointMass(p)) => p.clone(),
            Law::Analytic(AnalyticLaw::UniformFinite(a)) => a[rng.random_range(0..a.len())].clone(),
        }
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finaliser: a bijective 64-bit avalanche mix.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identifies one independent random substream.
///
/// The generator for a stream is ChaCha8 keyed by the mixed master seed, with the
/// stream index selecting the ChaCha stream, so draws depend only on
/// `(master_seed, stream_index)` and the draw counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream { master_seed, stream_index }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// A child stream; distinct `index` values give distinct streams.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream {
            master_seed: self.master_seed,
            stream_index: mix64(self.stream_index.wrapping_mul(GOLDEN) ^ mix64(index.wrapping_add(GOLDEN))),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut z = self.master_seed;
        for chunk in key.chunks_mut(8) {
            z = z.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&mix64(z).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_index);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_space::{Interval, Side};
    use proptest::prelude::*;
    use rand::Rng;

    fn r(x: f64) -> MetricPoint {
        MetricPoint::real(x)
    }

    /// Composite Simpson rule for the standard normal density on [0, x].
    fn simpson_phi(x: f64, intervals: usize) -> f64 {
        let h = x / intervals as f64;
        let mut s = normal_pdf(0.0) + normal_pdf(x);
        for i in 1..intervals {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * normal_pdf(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn normal_cdf_matches_quadrature() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(40.0) - 1.0).abs() < 1e-12);
        let oracle = 0.5 + simpson_phi(1.0, 20_000);
        assert!((normal_cdf(1.0) - oracle).abs() < 1e-9);
        assert!((normal_cdf(1.0) - 0.841345).abs() < 1e-6);
        for &x in &[0.25, 0.5, 1.5, 2.0, 3.0, 4.5] {
            let oracle = 0.5 + simpson_phi(x, 40_000);
            assert!((normal_cdf(x) - oracle).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn exact_prob_examples() {
        let line = Space::real_line();
        let coin = Law::Analytic(AnalyticLaw::uniform_finite(vec![r(0.0), r(1.0)]).unwrap());
        assert_eq!(coin.exact_prob(&line, &TestSet::half_line(Side::AtLeast, 0.5)).unwrap(), 0.5);
        let std = Law::normal(0.0, 1.0).unwrap();
        assert_eq!(std.exact_prob(&line, &TestSet::half_line(Side::AtMost, 0.0)).unwrap(), 0.5);
        let p = std.exact_prob(&line, &TestSet::half_line(Side::AtMost, 1.0)).unwrap();
        assert!((p - (0.5 + simpson_phi(1.0, 20_000))).abs() < 1e-9);
        assert!((p - 0.841345).abs() < 1e-6);
    }

    #[test]
    fn normal_rejects_sets_without_closed_form() {
        let plane = Space::euclidean(2).unwrap();
        let std = Law::normal(0.0, 1.0).unwrap();
        let b = TestSet::boxed(vec![Interval::new(0.0, 1.0).unwrap(), Interval::new(0.0, 1.0).unwrap()]).unwrap();
        assert!(matches!(std.exact_prob(&plane, &b), Err(Error::UnsupportedSetForLaw { .. })));
    }

    #[test]
    fn finite_law_validation() {
        assert!(FiniteDistribution::new(vec![r(0.0), r(0.0)], vec![0.5, 0.5]).is_err());
        assert!(FiniteDistribution::new(vec![r(0.0), r(1.0)], vec![0.5, 0.6]).is_err());
        assert!(FiniteDistribution::new(vec![r(0.0), r(1.0)], vec![-0.1, 1.1]).is_err());
        let merged = FiniteDistribution::from_weighted(vec![(r(1.0), 0.25), (r(0.0), 0.5), (r(1.0), 0.25)]).unwrap();
        assert_eq!(merged.atoms(), &[r(0.0), r(1.0)]);
        assert_eq!(merged.weights(), &[0.5, 0.5]);
        assert!(AnalyticLaw::normal(0.0, 0.0).is_err());
    }

    #[test]
    fn hat_expectation_under_normal_matches_quadrature() {
        let line = Space::real_line();
        let law = Law::normal(0.3, 1.7).unwrap();
        let sets = [
            TestSet::half_line(Side::AtLeast, 1.0),
            TestSet::half_line(Side::AtMost, -0.4),
            TestSet::interval_union(vec![Interval::new(-1.0, 0.0).unwrap(), Interval::new(0.6, 2.0).unwrap()]),
            TestSet::finite_points(vec![r(0.0), r(1.0)], 0.2).unwrap(),
        ];
        for s in sets {
            for &w in &[0.1, 0.5, 2.0] {
                let hat = HatFunction::new(s.clone(), w).unwrap();
                let exact = law.expect_hat(&line, &hat).unwrap();
                // midpoint rule on a fine grid over ±12σ
                let (lo, hi, m) = (0.3 - 12.0 * 1.7, 0.3 + 12.0 * 1.7, 400_000);
                let dx = (hi - lo) / m as f64;
                let quad: f64 = (0..m)
                    .map(|i| {
                        let x = lo + (i as f64 + 0.5) * dx;
                        hat.eval(&line, &r(x)) * normal_pdf((x - 0.3) / 1.7) / 1.7 * dx
                    })
                    .sum();
                assert!((exact - quad).abs() < 1e-7, "set {s:?} w {w}: {exact} vs {quad}");
            }
        }
    }

    #[test]
    fn point_mass_sampling_is_degenerate() {
        let law = Law::point_mass(r(2.5));
        let mut rng = RngStream::new(1, 2).rng();
        assert!((0..100).all(|_| law.sample(&mut rng) == r(2.5)));
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let draw = |s: RngStream| -> Vec<u64> {
            let mut g = s.rng();
            (0..8).map(|_| g.random()).collect()
        };
        let base = RngStream::new(42, 7);
        assert_eq!(draw(base), draw(RngStream::new(42, 7)));
        assert_ne!(draw(base), draw(RngStream::new(42, 8)));
        assert_ne!(draw(base), draw(RngStream::new(43, 7)));
        assert_ne!(draw(base.substream(1)), draw(base.substream(2)));
        assert_eq!(draw(base.substream(1)), draw(RngStream::new(42, 7).substream(1)));
    }

    #[test]
    fn fair_coin_frequency() {
        // 10^5 draws: binomial sd is 0.0016, so 0.01 is a > 6 sd bound
        let law = Law::Analytic(AnalyticLaw::uniform_finite(vec![r(0.0), r(1.0)]).unwrap());
        let mut rng = RngStream::new(2026, 0).rng();
        let ones = (0..100_000).filter(|_| law.sample(&mut rng) == r(1.0)).count();
        assert!((ones as f64 / 1e5 - 0.5).abs() < 0.01);
    }

    #[test]
    fn sampler_matches_exact_probabilities() {
        let line = Space::real_line();
        let laws = [
            Law::normal(0.0, 1.0).unwrap(),
            Law::normal(-1.0, 0.5).unwrap(),
            Law::Finite(FiniteDistribution::new(vec![r(-1.0), r(0.0), r(2.0)], vec![0.2, 0.3, 0.5]).unwrap()),
            Law::rademacher(),
        ];
        let probes = [
            TestSet::half_line(Side::AtMost, 0.0),
            TestSet::half_line(Side::AtLeast, 0.5),
            TestSet::interval_union(vec![Interval::new(-1.2, -0.5).unwrap(), Interval::new(1.0, 3.0).unwrap()]),
        ];
        let n = 20_000;
        for (i, law) in laws.iter().enumerate() {
            let mut rng = RngStream::new(99, i as u64).rng();
            let draws: Vec<MetricPoint> = (0..n).map(|_| law.sample(&mut rng)).collect();
            for s in &probes {
                let p = law.exact_prob(&line, s).unwrap();
                let freq = draws.iter().filter(|x| s.contains(&line, x)).count() as f64 / n as f64;
                let tol = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
                assert!((freq - p).abs() <= tol.max(1e-12), "law {i} set {s:?}: {freq} vs {p}");
            }
        }
    }

    proptest! {
        #[test]
        fn cdf_symmetry_and_monotonicity(x in -8.0f64..8.0, dx in 0.0f64..1.0) {
            prop_assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() < 1e-12);
            prop_assert!(normal_cdf(x) <= normal_cdf(x + dx));
        }

        #[test]
        fn closed_plus_open_is_one(t in -4.0f64..4.0, lo in -3.0f64..3.0, len in 0.0f64..2.0,
                                  mean in -1.0f64..1.0, sd in 0.2f64..3.0) {
            let line = Space::real_line();
            let laws = [
                Law::normal(mean, sd).unwrap(),
                Law::Finite(FiniteDistribution::new(vec![r(-1.0), r(0.0), r(0.5), r(2.0)], vec![0.1, 0.2, 0.3, 0.4]).unwrap()),
                Law::point_mass(r(t)),
            ];
            let sets = [
                TestSet::half_line(Side::AtMost, t),
                TestSet::half_line(Side::AtLeast, t),
                TestSet::interval_union(vec![Interval::new(lo, lo + len).unwrap()]),
            ];
            for law in &laws {
                for s in &sets {
                    let closed = law.exact_prob(&line, s).unwrap();
                    let open = law.exact_prob_open(&line, &OpenSet::complement_of(s.clone())).unwrap();
                    prop_assert!((closed + open - 1.0).abs() < 1e-12);
                    prop_assert!((0.0..=1.0).contains(&closed));
                }
            }
        }

        #[test]
        fn finite_prob_is_additive(cut in -2.0f64..3.0, gap in 0.01f64..1.0) {
            let line = Space::real_line();
            let d = FiniteDistribution::new(vec![r(-1.0), r(0.0), r(0.5), r(2.0)], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
            let left = TestSet::half_line(Side::AtMost, cut);
            let right = TestSet::half_line(Side::AtLeast, cut + gap);
            let both = TestSet::interval_union(vec![
                Interval { lo: f64::NEG_INFINITY, hi: cut },
                Interval { lo: cut + gap, hi: f64::INFINITY },
            ]);
            prop_assert!((d.prob(&line, &left) + d.prob(&line, &right) - d.prob(&line, &both)).abs() < 1e-12);
        }
    }
}
