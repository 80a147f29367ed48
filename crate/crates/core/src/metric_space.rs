//! State spaces, closed test sets, their closed α-enlargements and the Lipschitz
//! hat functions used as the implementable subfamily of `C(X, [0,1])`.
//!
//! Two kinds of space are supported: `ℝ^d` with the L2 metric and finite discrete
//! spaces with an explicit distance table. Points never carry their space; every
//! operation that needs the metric takes a [`Space`].

use std::cmp::Ordering;
use std::fmt::Write as _;

use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

pub type Coords = SmallVec<[f64; 2]>;

/// Hard cap on the number of points a [`SetFamily::SupportSubsets`] may enumerate.
pub const MAX_SUBSET_POINTS: usize = 20;

/// Cap on interval-union families so enumeration stays bounded.
const MAX_FAMILY_MEMBERS: usize = 250_000;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricPoint {
    Euclidean(Coords),
    /// Index into the alphabet of a discrete space.
    Discrete(usize),
}

impl MetricPoint {
    pub fn real(x: f64) -> Self {
        MetricPoint::Euclidean(smallvec![x])
    }

    pub fn euclidean(coords: &[f64]) -> Self {
        MetricPoint::Euclidean(Coords::from_slice(coords))
    }

    pub fn symbol(index: usize) -> Self {
        MetricPoint::Discrete(index)
    }

    /// The coordinate of a one-dimensional point.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            MetricPoint::Euclidean(c) if c.len() == 1 => Some(c[0]),
            _ => None,
        }
    }

    /// Total order used for deduplication; `-0.0` and `0.0` compare equal.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (MetricPoint::Euclidean(a), MetricPoint::Euclidean(b)) => {
                for (x, y) in a.iter().zip(b.iter()) {
                    match (x + 0.0).total_cmp(&(y + 0.0)) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
                a.len().cmp(&b.len())
            }
            (MetricPoint::Discrete(a), MetricPoint::Discrete(b)) => a.cmp(b),
            (MetricPoint::Euclidean(_), MetricPoint::Discrete(_)) => Ordering::Less,
            (MetricPoint::Discrete(_), MetricPoint::Euclidean(_)) => Ordering::Greater,
        }
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.total_cmp(other) == Ordering::Equal
    }
}

/// Ordering wrapper so points can key a `BTreeMap`.
#[derive(Debug, Clone)]
pub(crate) struct PointKey(pub MetricPoint);

impl PartialEq for PointKey {
    fn eq(&self, other: &Self) -> bool {
        self.0.same_as(&other.0)
    }
}

impl Eq for PointKey {}

impl PartialOrd for PointKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PointKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpace {
    alphabet: Vec<String>,
    // row-major k×k
    table: Vec<f64>,
}

impl DiscreteSpace {
    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphabet.is_empty()
    }

    fn d(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.alphabet.len() + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Euclidean { dim: usize },
    Discrete(DiscreteSpace),
}

impl Space {
    pub fn real_line() -> Self {
        Space::Euclidean { dim: 1 }
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("euclidean dimension must be at least 1".into()));
        }
        Ok(Space::Euclidean { dim })
    }

    /// Builds a finite metric space, checking the metric axioms on the table.
    pub fn discrete(alphabet: Vec<String>, distances: Vec<Vec<f64>>) -> Result<Self> {
        let k = alphabet.len();
        if k == 0 {
            return Err(Error::InvalidParameter("discrete alphabet is empty".into()));
        }
        for (i, a) in alphabet.iter().enumerate() {
            if alphabet[..i].contains(a) {
                return Err(Error::InvalidParameter(format!("duplicate symbol {a:?}")));
            }
        }
        if distances.len() != k || distances.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidParameter(format!("distance table must be {k}x{k}")));
        }
        for i in 0..k {
            if distances[i][i] != 0.0 {
                return Err(Error::InvalidParameter(format!("d({0},{0}) must be 0", alphabet[i])));
            }
            for j in 0..k {
                let d = distances[i][j];
                if !d.is_finite() {
                    return Err(Error::InvalidParameter("distances must be finite".into()));
                }
                if d != distances[j][i] {
                    return Err(Error::InvalidParameter(format!(
                        "distance table is not symmetric at ({}, {})",
                        alphabet[i], alphabet[j]
                    )));
                }
                if i != j && d <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "d({}, {}) must be positive",
                        alphabet[i], alphabet[j]
                    )));
                }
            }
        }
        for i in 0..k {
            for j in 0..k {
                for m in 0..k {
                    if distances[i][m] > distances[i][j] + distances[j][m] + 1e-12 {
                        return Err(Error::InvalidParameter(format!(
                            "triangle inequality fails for ({}, {}, {})",
                            alphabet[i], alphabet[j], alphabet[m]
                        )));
                    }
                }
            }
        }
        Ok(Space::Discrete(DiscreteSpace { alphabet, table: distances.into_iter().flatten().collect() }))
    }

    pub fn symbol(&self, name: &str) -> Option<MetricPoint> {
        match self {
            Space::Discrete(ds) => ds.alphabet.iter().position(|s| s == name).map(MetricPoint::Discrete),
            Space::Euclidean { .. } => None,
        }
    }

    pub fn is_real_line(&self) -> bool {
        matches!(self, Space::Euclidean { dim: 1 })
    }

    pub fn check_point(&self, p: &MetricPoint) -> Result<()> {
        match (self, p) {
            (Space::Euclidean { dim }, MetricPoint::Euclidean(c)) => {
                if c.len() != *dim {
                    return Err(Error::DomainMismatch(format!(
                        "point has dimension {}, space has dimension {dim}",
                        c.len()
                    )));
                }
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(Error::DomainMismatch("point coordinates must be finite".into()));
                }
                Ok(())
            }
            (Space::Discrete(ds), MetricPoint::Discrete(i)) if *i < ds.len() => Ok(()),
            (Space::Discrete(ds), MetricPoint::Discrete(i)) => {
                Err(Error::DomainMismatch(format!("symbol index {i} outside alphabet of size {}", ds.len())))
            }
            _ => Err(Error::DomainMismatch("euclidean and discrete points do not mix".into())),
        }
    }

    pub fn distance(&self, p: &MetricPoint, q: &MetricPoint) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(self.dist(p, q))
    }

    /// Unchecked distance for points already validated against this space.
    #[inline]
    pub(crate) fn dist(&self, p: &MetricPoint, q: &MetricPoint) -> f64 {
        match (self, p, q) {
            (Space::Euclidean { .. }, MetricPoint::Euclidean(a), MetricPoint::Euclidean(b)) => {
                if a.len() == 1 {
                    (a[0] - b[0]).abs()
                } else {
                    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
                }
            }
            (Space::Discrete(ds), MetricPoint::Discrete(i), MetricPoint::Discrete(j)) => ds.d(*i, *j),
            _ => f64::INFINITY,
        }
    }

    pub fn format_point(&self, p: &MetricPoint) -> String {
        match (self, p) {
            (Space::Discrete(ds), MetricPoint::Discrete(i)) => {
                ds.alphabet.get(*i).cloned().unwrap_or_else(|| format!("#{i}"))
            }
            (_, MetricPoint::Euclidean(c)) if c.len() == 1 => format!("{}", c[0]),
            (_, MetricPoint::Euclidean(c)) => {
                let parts: Vec<String> = c.iter().map(|x| format!("{x}")).collect();
                format!("({})", parts.join(","))
            }
            (_, MetricPoint::Discrete(i)) => format!("#{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `{x ≤ t}`
    AtMost,
    /// `{x ≥ t}`
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidParameter(format!("interval endpoints out of order: [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn dist(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }
}

/// A closed subset of the state space.
///
/// Open sets enter only as complements, see [`OpenSet`].
#[derive(Debug, Clone, PartialEq)]
pub enum TestSet {
    HalfLine {
        side: Side,
        threshold: f64,
    },
    /// Sorted, pairwise disjoint closed intervals.
    IntervalUnion(Vec<Interval>),
    /// Union of closed balls of a common radius; radius 0 is the point set itself.
    FinitePoints {
        points: Vec<MetricPoint>,
        radius: f64,
    },
    /// Product of closed intervals, one per coordinate.
    Box(Vec<Interval>),
}

impl TestSet {
    pub fn half_line(side: Side, threshold: f64) -> Self {
        TestSet::HalfLine { side, threshold }
    }

    /// Sorts the intervals and merges members that overlap or touch.
    pub fn interval_union(mut intervals: Vec<Interval>) -> Self {
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        TestSet::IntervalUnion(merged)
    }

    pub fn finite_points(points: Vec<MetricPoint>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("radius must be a finite nonnegative number, got {radius}")));
        }
        Ok(TestSet::FinitePoints { points, radius })
    }

    pub fn boxed(sides: Vec<Interval>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::InvalidParameter("a box needs at least one side".into()));
        }
        Ok(TestSet::Box(sides))
    }

    pub fn is_empty(&self) -> bool {
        match self {
            TestSet::HalfLine { .. } | TestSet::Box(_) => false,
            TestSet::IntervalUnion(ivs) => ivs.is_empty(),
            TestSet::FinitePoints { points, .. } => points.is_empty(),
        }
    }

    /// Checks that the set lives in `space`.
    pub fn check(&self, space: &Space) -> Result<()> {
        match self {
            TestSet::HalfLine { threshold, .. } => {
                if !space.is_real_line() {
                    return Err(Error::DomainMismatch("half-lines need the real line".into()));
                }
                if threshold.is_nan() {
                    return Err(Error::InvalidParameter("half-line threshold is NaN".into()));
                }
                Ok(())
            }
            TestSet::IntervalUnion(_) => {
                if space.is_real_line() {
                    Ok(())
                } else {
                    Err(Error::DomainMismatch("interval unions need the real line".into()))
                }
            }
            TestSet::FinitePoints { points, .. } => points.iter().try_for_each(|p| space.check_point(p)),
            TestSet::Box(sides) => match space {
                Space::Euclidean { dim } if *dim == sides.len() => Ok(()),
                _ => Err(Error::DomainMismatch(format!("box with {} sides does not fit the space", sides.len()))),
            },
        }
    }

    /// Membership with the closed-set convention: boundary points belong to the set.
    pub fn contains(&self, space: &Space, p: &MetricPoint) -> bool {
        match self {
            TestSet::HalfLine { side, threshold } => match p.as_real() {
                Some(x) => match side {
                    Side::AtMost => x <= *threshold,
                    Side::AtLeast => x >= *threshold,
                },
                None => false,
            },
            TestSet::IntervalUnion(ivs) => match p.as_real() {
                Some(x) => ivs.iter().any(|iv| iv.contains(x)),
                None => false,
            },
            TestSet::FinitePoints { points, radius } => points.iter().any(|c| space.dist(p, c) <= *radius),
            TestSet::Box(sides) => match p {
                MetricPoint::Euclidean(c) if c.len() == sides.len() => {
                    c.iter().zip(sides).all(|(x, iv)| iv.contains(*x))
                }
                _ => false,
            },
        }
    }

    /// `inf_{s ∈ S} d(p, s)`; `+∞` for the empty set.
    pub fn dist_to(&self, space: &Space, p: &MetricPoint) -> f64 {
        match self {
            TestSet::HalfLine { side, threshold } => match p.as_real() {
                Some(x) => match side {
                    Side::AtMost => (x - threshold).max(0.0),
                    Side::AtLeast => (threshold - x).max(0.0),
                },
                None => f64::INFINITY,
            },
            TestSet::IntervalUnion(ivs) => match p.as_real() {
                Some(x) => ivs.iter().map(|iv| iv.dist(x)).fold(f64::INFINITY, f64::min),
                None => f64::INFINITY,
            },
            TestSet::FinitePoints { points, radius } => match space {
                Space::Euclidean { .. } => {
                    points.iter().map(|c| (space.dist(p, c) - radius).max(0.0)).fold(f64::INFINITY, f64::min)
                }
                Space::Discrete(ds) => {
                    if *radius == 0.0 {
                        points.iter().map(|c| space.dist(p, c)).fold(f64::INFINITY, f64::min)
                    } else {
                        // Balls in a finite space are explicit symbol sets.
                        (0..ds.len())
                            .map(MetricPoint::Discrete)
                            .filter(|s| self.contains(space, s))
                            .map(|s| space.dist(p, &s))
                            .fold(f64::INFINITY, f64::min)
                    }
                }
            },
            TestSet::Box(sides) => match p {
                MetricPoint::Euclidean(c) if c.len() == sides.len() => {
                    c.iter().zip(sides).map(|(x, iv)| iv.dist(*x).powi(2)).sum::<f64>().sqrt()
                }
                _ => f64::INFINITY,
            },
        }
    }

    /// Point-to-set distance with domain checking.
    pub fn distance_from(&self, space: &Space, p: &MetricPoint) -> Result<f64> {
        space.check_point(p)?;
        self.check(space)?;
        Ok(self.dist_to(space, p))
    }

    /// Closed enlargement `{x : d(x, S) ≤ α}`. Negative `α` is treated as 0.
    pub fn enlarge(&self, space: &Space, alpha: f64) -> TestSet {
        let alpha = alpha.max(0.0);
        if alpha == 0.0 {
            return self.clone();
        }
        match self {
            TestSet::HalfLine { side, threshold } => TestSet::HalfLine {
                side: *side,
                threshold: match side {
                    Side::AtMost => threshold + alpha,
                    Side::AtLeast => threshold - alpha,
                },
            },
            TestSet::IntervalUnion(ivs) => TestSet::interval_union(
                ivs.iter().map(|iv| Interval { lo: iv.lo - alpha, hi: iv.hi + alpha }).collect(),
            ),
            TestSet::FinitePoints { points, radius } => match space {
                Space::Euclidean { .. } => TestSet::FinitePoints { points: points.clone(), radius: radius + alpha },
                Space::Discrete(ds) => {
                    // A union of larger balls can overshoot in a general metric, so
                    // materialise the exact enlargement.
                    let members =
                        (0..ds.len()).map(MetricPoint::Discrete).filter(|s| self.dist_to(space, s) <= alpha).collect();
                    TestSet::FinitePoints { points: members, radius: 0.0 }
                }
            },
            TestSet::Box(sides) => {
                TestSet::Box(sides.iter().map(|iv| Interval { lo: iv.lo - alpha, hi: iv.hi + alpha }).collect())
            }
        }
    }

    /// Positions on the real line where the distance function to this set changes slope.
    pub(crate) fn features_1d(&self) -> Option<Vec<f64>> {
        match self {
            TestSet::HalfLine { threshold, .. } => Some(vec![*threshold]),
            TestSet::IntervalUnion(ivs) => Some(ivs.iter().flat_map(|iv| [iv.lo, iv.hi]).collect()),
            TestSet::FinitePoints { points, radius } => points
                .iter()
                .map(|p| p.as_real().map(|x| [x - radius, x + radius]))
                .collect::<Option<Vec<_>>>()
                .map(|v| v.concat()),
            TestSet::Box(sides) if sides.len() == 1 => Some(vec![sides[0].lo, sides[0].hi]),
            TestSet::Box(_) => None,
        }
    }

    /// The same set as a union of intervals, when it lives on the real line.
    pub(crate) fn as_intervals(&self) -> Option<Vec<Interval>> {
        match self {
            TestSet::HalfLine { side: Side::AtMost, threshold } => {
                Some(vec![Interval { lo: f64::NEG_INFINITY, hi: *threshold }])
            }
            TestSet::HalfLine { side: Side::AtLeast, threshold } => {
                Some(vec![Interval { lo: *threshold, hi: f64::INFINITY }])
            }
            TestSet::IntervalUnion(ivs) => Some(ivs.clone()),
            TestSet::FinitePoints { points, radius } => {
                let ivs = points
                    .iter()
                    .map(|p| p.as_real().map(|x| Interval { lo: x - radius, hi: x + radius }))
                    .collect::<Option<Vec<_>>>()?;
                match TestSet::interval_union(ivs) {
                    TestSet::IntervalUnion(v) => Some(v),
                    _ => None,
                }
            }
            TestSet::Box(sides) if sides.len() == 1 => Some(sides.clone()),
            TestSet::Box(_) => None,
        }
    }

    pub fn label(&self, space: &Space) -> String {
        fn iv(out: &mut String, iv: &Interval) {
            let _ = write!(out, "[{},{}]", iv.lo, iv.hi);
        }
        let mut out = String::new();
        match self {
            TestSet::HalfLine { side: Side::AtMost, threshold } => {
                let _ = write!(out, "(-inf,{threshold}]");
            }
            TestSet::HalfLine { side: Side::AtLeast, threshold } => {
                let _ = write!(out, "[{threshold},inf)");
            }
            TestSet::IntervalUnion(ivs) => {
                if ivs.is_empty() {
                    out.push_str("{}");
                }
                for (i, v) in ivs.iter().enumerate() {
                    if i > 0 {
                        out.push('u');
                    }
                    iv(&mut out, v);
                }
            }
            TestSet::FinitePoints { points, radius } => {
                let names: Vec<String> = points.iter().map(|p| space.format_point(p)).collect();
                let _ = write!(out, "{{{}}}", names.join(","));
                if *radius > 0.0 {
                    let _ = write!(out, "+{radius}");
                }
            }
            TestSet::Box(sides) => {
                for (i, v) in sides.iter().enumerate() {
                    if i > 0 {
                        out.push('x');
                    }
                    iv(&mut out, v);
                }
            }
        }
        out
    }
}

/// Open set realised as the complement of a closed [`TestSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct OpenSet {
    closed: TestSet,
}

impl OpenSet {
    pub fn complement_of(closed: TestSet) -> Self {
        OpenSet { closed }
    }

    pub fn contains(&self, space: &Space, p: &MetricPoint) -> bool {
        !self.closed.contains(space, p)
    }

    /// The closed set this open set is the complement of.
    pub fn complement(&self) -> &TestSet {
        &self.closed
    }

    pub fn into_complement(self) -> TestSet {
        self.closed
    }
}

/// `f(x) = max(0, 1 − d(x, base) / width)`: equal to 1 on `base`, 0 at distance
/// `width` or more, and `1/width`-Lipschitz.
#[derive(Debug, Clone, PartialEq)]
pub struct HatFunction {
    base: TestSet,
    width: f64,
}

impl HatFunction {
    pub fn new(base: TestSet, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidParameter(format!("hat width must be positive, got {width}")));
        }
        Ok(HatFunction { base, width })
    }

    pub fn base(&self) -> &TestSet {
        &self.base
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn eval(&self, space: &Space, p: &MetricPoint) -> f64 {
        let d = self.base.dist_to(space, p);
        (1.0 - d / self.width).max(0.0)
    }
}

/// Finite proxy for "all closed sets" over which the weak-defect suprema run.
#[derive(Debug, Clone, PartialEq)]
pub enum SetFamily {
    /// `(-∞, t]` and `[t, ∞)` for every threshold.
    HalfLines { thresholds: Vec<f64> },
    /// Unions of up to `max_components` separated intervals with endpoints on a grid.
    IntervalUnions { max_components: usize, endpoints: Vec<f64> },
    /// Every subset of a finite point list, as radius-0 point sets.
    SupportSubsets { points: Vec<MetricPoint> },
}

impl SetFamily {
    pub fn half_lines(mut thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() || thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(
                "half-line thresholds must be a nonempty list of finite numbers".into(),
            ));
        }
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
        Ok(SetFamily::HalfLines { thresholds })
    }

    pub fn interval_unions(max_components: usize, mut endpoints: Vec<f64>) -> Result<Self> {
        if max_components == 0 {
            return Err(Error::InvalidParameter("max_components must be at least 1".into()));
        }
        if endpoints.is_empty() || endpoints.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("interval endpoints must be a nonempty list of finite numbers".into()));
        }
        endpoints.sort_by(f64::total_cmp);
        endpoints.dedup();
        let family = SetFamily::IntervalUnions { max_components, endpoints };
        let count = family.member_count();
        if count > MAX_FAMILY_MEMBERS {
            return Err(Error::InvalidParameter(format!(
                "interval-union family would have {count} members, limit is {MAX_FAMILY_MEMBERS}"
            )));
        }
        Ok(family)
    }

    pub fn support_subsets(points: Vec<MetricPoint>) -> Result<Self> {
        if points.len() > MAX_SUBSET_POINTS {
            return Err(Error::SupportTooLarge { size: points.len(), limit: MAX_SUBSET_POINTS });
        }
        for (i, p) in points.iter().enumerate() {
            if points[..i].iter().any(|q| q.same_as(p)) {
                return Err(Error::InvalidParameter("support_subsets points must be distinct".into()));
            }
        }
        Ok(SetFamily::SupportSubsets { points })
    }

    /// Every family here maps members to members under enlargement.
    pub fn is_enlargement_closed(&self) -> bool {
        true
    }

    pub fn check(&self, space: &Space) -> Result<()> {
        match self {
            SetFamily::HalfLines { .. } | SetFamily::IntervalUnions { .. } => {
                if space.is_real_line() {
                    Ok(())
                } else {
                    Err(Error::DomainMismatch("half-line and interval families need the real line".into()))
                }
            }
            SetFamily::SupportSubsets { points } => points.iter().try_for_each(|p| space.check_point(p)),
        }
    }

    fn member_count(&self) -> usize {
        match self {
            SetFamily::HalfLines { thresholds } => 2 * thresholds.len(),
            SetFamily::SupportSubsets { points } => 1usize << points.len(),
            SetFamily::IntervalUnions { max_components, endpoints } => {
                // unions[c][i]: number of unions of exactly c intervals using endpoints from index i on
                let g = endpoints.len();
                let k = *max_components;
                let mut ways = vec![vec![0usize; g + 2]; k + 1];
                for i in 0..=g + 1 {
                    ways[0][i] = 1;
                }
                for c in 1..=k {
                    for i in (0..g).rev() {
                        let mut total = ways[c][i + 1];
                        for j in i..g {
                            total = total.saturating_add(ways[c - 1][(j + 2).min(g + 1)]);
                        }
                        ways[c][i] = total;
                    }
                }
                (1..=k).fold(0usize, |acc, c| acc.saturating_add(ways[c][0]))
            }
        }
    }

    /// Enumerates the family in a fixed, documented order.
    pub fn members(&self) -> Vec<TestSet> {
        match self {
            SetFamily::HalfLines { thresholds } => thresholds
                .iter()
                .flat_map(|&t| [TestSet::half_line(Side::AtMost, t), TestSet::half_line(Side::AtLeast, t)])
                .collect(),
            SetFamily::SupportSubsets { points } => (0u64..(1u64 << points.len()))
                .map(|mask| TestSet::FinitePoints {
                    points: points
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, p)| p.clone())
                        .collect(),
                    radius: 0.0,
                })
                .collect(),
            SetFamily::IntervalUnions { max_components, endpoints } => {
                let mut out = Vec::new();
                let mut current = Vec::new();
                push_unions(endpoints, 0, *max_components, &mut current, &mut out);
                out
            }
        }
    }
}

fn push_unions(grid: &[f64], start: usize, remaining: usize, current: &mut Vec<Interval>, out: &mut Vec<TestSet>) {
    if remaining == 0 {
        return;
    }
    for i in start..grid.len() {
        for j in i..grid.len() {
            current.push(Interval { lo: grid[i], hi: grid[j] });
            out.push(TestSet::IntervalUnion(current.clone()));
            // the next interval must start strictly after a gap
            push_unions(grid, j + 2, remaining - 1, current, out);
            current.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(x: f64) -> MetricPoint {
        MetricPoint::real(x)
    }

    fn ab_space() -> Space {
        Space::discrete(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.5], vec![2.0, 1.5, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn distance_examples() {
        let plane = Space::euclidean(2).unwrap();
        let o = MetricPoint::euclidean(&[0.0, 0.0]);
        assert_eq!(plane.distance(&o, &o).unwrap(), 0.0);
        assert_eq!(plane.distance(&o, &MetricPoint::euclidean(&[3.0, 4.0])).unwrap(), 5.0);
        let s = ab_space();
        assert_eq!(s.distance(&s.symbol("a").unwrap(), &s.symbol("b").unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn distance_rejects_mismatched_points() {
        let plane = Space::euclidean(2).unwrap();
        let err = plane.distance(&r(0.0), &MetricPoint::euclidean(&[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::DomainMismatch(_)));
        let s = ab_space();
        assert!(matches!(s.distance(&MetricPoint::symbol(0), &MetricPoint::symbol(7)), Err(Error::DomainMismatch(_))));
        assert!(matches!(s.distance(&MetricPoint::symbol(0), &r(1.0)), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn discrete_table_is_validated() {
        let names = || vec!["x".to_string(), "y".to_string(), "z".to_string()];
        assert!(Space::discrete(names(), vec![vec![0.0, 1.0, 1.0], vec![2.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).is_err());
        assert!(Space::discrete(names(), vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).is_err());
        // d(x,z) = 5 > d(x,y) + d(y,z) = 2
        let err =
            Space::discrete(names(), vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]]).unwrap_err();
        assert!(err.to_string().contains("triangle"));
    }

    #[test]
    fn dist_to_set_examples() {
        let line = Space::real_line();
        let ge1 = TestSet::half_line(Side::AtLeast, 1.0);
        assert!((ge1.dist_to(&line, &r(0.6)) - 0.4).abs() < 1e-15);
        assert_eq!(ge1.dist_to(&line, &r(3.0)), 0.0);
        let pts = TestSet::finite_points(vec![r(0.0), r(2.0)], 0.0).unwrap();
        assert_eq!(pts.dist_to(&line, &r(1.0)), 1.0);
        let empty = TestSet::finite_points(vec![], 0.0).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.dist_to(&line, &r(1.0)), f64::INFINITY);
        assert!(matches!(ge1.distance_from(&ab_space(), &MetricPoint::symbol(0)), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn enlarge_examples() {
        let line = Space::real_line();
        let ge1 = TestSet::half_line(Side::AtLeast, 1.0);
        assert_eq!(ge1.enlarge(&line, 0.5), TestSet::half_line(Side::AtLeast, 0.5));
        assert_eq!(ge1.enlarge(&line, 0.0), ge1);
        let pts = TestSet::finite_points(vec![r(0.0), r(2.0)], 0.0).unwrap();
        let big = pts.enlarge(&line, 1.0);
        assert_eq!(big, TestSet::finite_points(vec![r(0.0), r(2.0)], 1.0).unwrap());
        assert!(big.contains(&line, &r(1.0)));
    }

    #[test]
    fn interval_union_normalizes_and_enlarges() {
        let line = Space::real_line();
        let s = TestSet::interval_union(vec![
            Interval::new(2.0, 3.0).unwrap(),
            Interval::new(0.0, 1.0).unwrap(),
            Interval::new(0.5, 1.5).unwrap(),
        ]);
        assert_eq!(s, TestSet::IntervalUnion(vec![Interval { lo: 0.0, hi: 1.5 }, Interval { lo: 2.0, hi: 3.0 }]));
        assert_eq!(s.enlarge(&line, 0.25), TestSet::IntervalUnion(vec![Interval { lo: -0.25, hi: 3.25 }]));
        assert!(Interval::new(1.0, 0.0).is_err());
    }

    #[test]
    fn discrete_enlargement_is_exact() {
        let s = ab_space();
        let a = TestSet::finite_points(vec![s.symbol("a").unwrap()], 0.0).unwrap();
        let e = a.enlarge(&s, 1.2);
        assert!(e.contains(&s, &s.symbol("b").unwrap()));
        assert!(!e.contains(&s, &s.symbol("c").unwrap()));
        let e2 = a.enlarge(&s, 2.0);
        assert!(e2.contains(&s, &s.symbol("c").unwrap()));
    }

    #[test]
    fn complement_view() {
        let line = Space::real_line();
        let le0 = TestSet::half_line(Side::AtMost, 0.0);
        let open = OpenSet::complement_of(le0.clone());
        assert!(open.contains(&line, &r(1.0)));
        assert!(!open.contains(&line, &r(0.0)));
        assert_eq!(open.into_complement(), le0);
    }

    #[test]
    fn hat_examples() {
        let line = Space::real_line();
        let h = HatFunction::new(TestSet::half_line(Side::AtLeast, 1.0), 0.5).unwrap();
        assert_eq!(h.eval(&line, &r(2.0)), 1.0);
        assert_eq!(h.eval(&line, &r(0.5)), 0.0);
        assert!((h.eval(&line, &r(0.75)) - 0.5).abs() < 1e-15);
        assert!(HatFunction::new(TestSet::half_line(Side::AtLeast, 1.0), 0.0).is_err());
    }

    #[test]
    fn families_enumerate() {
        let hl = SetFamily::half_lines(vec![1.0, 0.0, 1.0]).unwrap();
        assert_eq!(hl.members().len(), 4);
        let ss = SetFamily::support_subsets(vec![r(0.0), r(1.0), r(2.0)]).unwrap();
        assert_eq!(ss.members().len(), 8);
        let too_many: Vec<_> = (0..21).map(|i| r(i as f64)).collect();
        assert!(matches!(SetFamily::support_subsets(too_many), Err(Error::SupportTooLarge { .. })));
        let iu = SetFamily::interval_unions(2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let members = iu.members();
        assert_eq!(members.len(), iu.member_count());
        // 10 single intervals plus 3 separated pairs ([0,0]+[2,*], [0,0]+[3,3], [0,1]+[3,3] ...)
        assert_eq!(members.len(), 10 + 5);
        for m in &members {
            if let TestSet::IntervalUnion(ivs) = m {
                assert_eq!(TestSet::interval_union(ivs.clone()), *m);
            }
        }
    }

    proptest! {
        #[test]
        fn metric_axioms_in_the_plane(a in prop::array::uniform2(-10.0f64..10.0),
                                      b in prop::array::uniform2(-10.0f64..10.0),
                                      c in prop::array::uniform2(-10.0f64..10.0)) {
            let s = Space::euclidean(2).unwrap();
            let (p, q, w) = (MetricPoint::euclidean(&a), MetricPoint::euclidean(&b), MetricPoint::euclidean(&c));
            prop_assert_eq!(s.dist(&p, &q), s.dist(&q, &p));
            prop_assert_eq!(s.dist(&p, &p), 0.0);
            prop_assert!(s.dist(&p, &w) <= s.dist(&p, &q) + s.dist(&q, &w) + 1e-12);
        }

        #[test]
        fn enlargement_is_monotone(t in -5.0f64..5.0, lo in -5.0f64..5.0, len in 0.0f64..3.0,
                                   a1 in 0.0f64..2.0, extra in 0.0f64..2.0, x in -10.0f64..10.0) {
            let line = Space::real_line();
            let sets = [
                TestSet::half_line(Side::AtMost, t),
                TestSet::half_line(Side::AtLeast, t),
                TestSet::interval_union(vec![Interval::new(lo, lo + len).unwrap(), Interval::new(lo + len + 1.0, lo + len + 2.0).unwrap()]),
                TestSet::finite_points(vec![MetricPoint::real(lo), MetricPoint::real(t)], len).unwrap(),
            ];
            let p = MetricPoint::real(x);
            for s in &sets {
                let small = s.enlarge(&line, a1);
                let large = s.enlarge(&line, a1 + extra);
                if s.contains(&line, &p) { prop_assert!(small.contains(&line, &p)); }
                if small.contains(&line, &p) { prop_assert!(large.contains(&line, &p)); }
            }
        }

        #[test]
        fn subset_enlargement_below_min_distance_keeps_list_points(xs in prop::collection::btree_set(-50i32..50, 2..8),
                                                                   mask in 0u32..256, frac in 0.0f64..0.999) {
            let line = Space::real_line();
            let pts: Vec<MetricPoint> = xs.iter().map(|&x| MetricPoint::real(x as f64 * 0.5)).collect();
            let min_d = 0.5; // distinct multiples of 0.5
            let subset: Vec<MetricPoint> = pts.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, p)| p.clone()).collect();
            let a = TestSet::finite_points(subset, 0.0).unwrap();
            let e = a.enlarge(&line, frac * min_d);
            for p in &pts {
                prop_assert_eq!(a.contains(&line, p), e.contains(&line, p));
            }
        }

        #[test]
        fn hat_is_lipschitz(t in -3.0f64..3.0, w in 0.01f64..2.0, x in -6.0f64..6.0, y in -6.0f64..6.0) {
            let line = Space::real_line();
            let h = HatFunction::new(TestSet::interval_union(vec![Interval::new(t, t + 0.5).unwrap()]), w).unwrap();
            let (p, q) = (MetricPoint::real(x), MetricPoint::real(y));
            let (hp, hq) = (h.eval(&line, &p), h.eval(&line, &q));
            prop_assert!((0.0..=1.0).contains(&hp));
            prop_assert!((hp - hq).abs() <= line.dist(&p, &q) / w + 1e-12);
        }

        #[test]
        fn complement_membership_is_exclusive(t in -3.0f64..3.0, x in -6.0f64..6.0) {
            let line = Space::real_line();
            let s = TestSet::half_line(Side::AtMost, t);
            let open = OpenSet::complement_of(s.clone());
            let p = MetricPoint::real(x);
            prop_assert!(open.contains(&line, &p) ^ s.contains(&line, &p));
        }
    }
}
