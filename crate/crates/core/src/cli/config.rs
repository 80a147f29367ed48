//! JSON scenario configs: strict schema, overrides, and conversion to a [`Scenario`].

use serde::Deserialize;
use serde_json::Value;

use crate::distributions::{AnalyticLaw, FiniteDistribution, Law};
use crate::error::{Error, Result};
use crate::indices::{AlphaGrid, EstimatorGrid, Scenario};
use crate::metric_space::{MetricPoint, SetFamily, Space};
use crate::processes::{BlockGrowth, EventualOutcome, Halfwidth, IndexModel, KnSpec, ProcessModel};

const TOP_LEVEL_FIELDS: &[&str] = &[
    "seed",
    "samples",
    "n_window",
    "stride",
    "epsilon_grid",
    "delta_grid",
    "alpha_grid",
    "space",
    "process",
    "index_model",
    "target",
    "set_family",
    "kn_family",
];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    samples: usize,
    n_window: [u64; 2],
    #[serde(default = "default_stride")]
    stride: u64,
    epsilon_grid: Vec<f64>,
    delta_grid: Vec<f64>,
    #[serde(default)]
    alpha_grid: Option<RawAlpha>,
    #[serde(default)]
    space: Option<RawSpace>,
    process: RawProcess,
    index_model: RawIndex,
    target: RawLaw,
    set_family: RawFamily,
    kn_family: RawKnFamily,
}

fn default_stride() -> u64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawAlpha {
    Keyword(String),
    Values(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawSpace {
    Euclidean { dim: usize },
    Discrete { alphabet: Vec<String>, distances: Vec<Vec<f64>> },
}

/// A number (real line), a coordinate list, or a symbol name.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawPoint {
    Real(f64),
    Vector(Vec<f64>),
    Symbol(String),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawLaw {
    Normal { mean: f64, stddev: f64 },
    PointMass { point: RawPoint },
    UniformFinite { points: Vec<RawPoint> },
    Rademacher {},
    Finite { atoms: Vec<RawPoint>, weights: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutcome {
    #[serde(default)]
    prefix: Vec<RawPoint>,
    limit: RawPoint,
    probability: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawGrowth {
    Linear { c: f64 },
    Exponential { r: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawProcess {
    Constant {
        point: RawPoint,
    },
    Alternating {
        a: RawPoint,
        b: RawPoint,
    },
    PartialSumNormalized {
        step_law: RawLaw,
    },
    EventuallyConstant {
        outcomes: Vec<RawOutcome>,
    },
    BlockOscillating {
        growth: RawGrowth,
        a: RawPoint,
        b: RawPoint,
        #[serde(default = "default_phases")]
        phases: u32,
    },
}

fn default_phases() -> u32 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawKn {
    Linear { c: f64 },
    Explicit { values: Vec<u64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHalfwidth {
    coef: f64,
    #[serde(default)]
    exponent: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawIndex {
    Deterministic { kn: RawKn },
    TwoPoint { q: f64 },
    UniformWindow { beta: f64 },
    LinearNoise { c: f64, halfwidth: RawHalfwidth },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGridSpec {
    List(Vec<f64>),
    Range(RawRange),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRange {
    lo: f64,
    hi: f64,
    count: usize,
}

impl RawGridSpec {
    fn values(&self) -> std::result::Result<Vec<f64>, String> {
        match self {
            RawGridSpec::List(v) => Ok(v.clone()),
            RawGridSpec::Range(RawRange { lo, hi, count }) => {
                if *count < 2 || !(lo < hi) {
                    return Err(format!("range needs lo < hi and count >= 2, got lo={lo}, hi={hi}, count={count}"));
                }
                let step = (hi - lo) / (*count as f64 - 1.0);
                Ok((0..*count).map(|i| lo + step * i as f64).collect())
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawFamily {
    HalfLines { thresholds: RawGridSpec },
    IntervalUnions { max_components: usize, endpoints: RawGridSpec },
    SupportSubsets { points: Vec<RawPoint> },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawKnFamily {
    Linear {
        c_grid: Vec<f64>,
        #[serde(default)]
        explicit: Vec<Vec<u64>>,
    },
    Explicit {
        sequences: Vec<Vec<u64>>,
    },
}

/// A loaded config: the validated scenario plus its canonical echo.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub echo: Value,
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

pub fn load_config(path: &std::path::Path, overrides: Overrides) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, overrides)
}

/// Parses and validates config text. Syntax errors are [`Error::Parse`]; every schema
/// or constraint violation found is listed in one [`Error::Validation`].
pub fn parse_config(text: &str, overrides: Overrides) -> Result<ScenarioConfig> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let Some(obj) = value.as_object_mut() else {
        return Err(Error::Validation(vec!["config must be a JSON object".into()]));
    };
    let unknown: Vec<String> = obj
        .keys()
        .filter(|k| !TOP_LEVEL_FIELDS.contains(&k.as_str()))
        .map(|k| format!("unknown field `{k}`"))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::Validation(unknown));
    }
    if let Some(seed) = overrides.seed {
        obj.insert("seed".into(), Value::from(seed));
    }
    if let Some(samples) = overrides.samples {
        obj.insert("samples".into(), Value::from(samples));
    }
    let raw: RawConfig = serde_json::from_value(value.clone()).map_err(|e| Error::Validation(vec![e.to_string()]))?;
    let scenario = build(raw)?;
    Ok(ScenarioConfig { scenario, echo: value })
}

/// Collects violations while converting raw sections.
struct Collector {
    errors: Vec<String>,
}

impl Collector {
    fn take<T>(&mut self, section: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(Error::Validation(list)) => {
                self.errors.extend(list.into_iter().map(|m| format!("{section}: {m}")));
                None
            }
            Err(e) => {
                self.errors.push(format!("{section}: {e}"));
                None
            }
        }
    }
}

fn point(space: &Space, raw: &RawPoint) -> Result<MetricPoint> {
    let p = match raw {
        RawPoint::Real(x) => MetricPoint::real(*x),
        RawPoint::Vector(v) => MetricPoint::euclidean(v),
        RawPoint::Symbol(s) => {
            space.symbol(s).ok_or_else(|| Error::DomainMismatch(format!("symbol `{s}` is not in the alphabet")))?
        }
    };
    space.check_point(&p)?;
    Ok(p)
}

fn points(space: &Space, raw: &[RawPoint]) -> Result<Vec<MetricPoint>> {
    raw.iter().map(|p| point(space, p)).collect()
}

fn law(space: &Space, raw: &RawLaw) -> Result<Law> {
    Ok(match raw {
        RawLaw::Normal { mean, stddev } => Law::normal(*mean, *stddev)?,
        RawLaw::PointMass { point: p } => Law::point_mass(point(space, p)?),
        RawLaw::UniformFinite { points: ps } => Law::Analytic(AnalyticLaw::uniform_finite(points(space, ps)?)?),
        RawLaw::Rademacher {} => Law::rademacher(),
        RawLaw::Finite { atoms, weights } => {
            Law::Finite(FiniteDistribution::new(points(space, atoms)?, weights.clone())?)
        }
    })
}

fn kn(raw: &RawKn) -> KnSpec {
    match raw {
        RawKn::Linear { c } => KnSpec::Linear(*c),
        RawKn::Explicit { values } => KnSpec::Explicit(values.clone()),
    }
}

fn process(space: &Space, raw: &RawProcess) -> Result<ProcessModel> {
    let model = match raw {
        RawProcess::Constant { point: p } => ProcessModel::Constant(point(space, p)?),
        RawProcess::Alternating { a, b } => ProcessModel::Alternating { even: point(space, a)?, odd: point(space, b)? },
        RawProcess::PartialSumNormalized { step_law } => {
            let step = law(space, step_law)?;
            let model = ProcessModel::PartialSumNormalized { step };
            if let Some((mean, var)) = model.step_moments() {
                if mean.abs() > 1e-12 || (var - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "step_law must have mean 0 and variance 1, got mean {mean} and variance {var}"
                    )));
                }
            }
            model
        }
        RawProcess::EventuallyConstant { outcomes } => ProcessModel::EventuallyConstant(
            outcomes
                .iter()
                .map(|o| {
                    Ok(EventualOutcome {
                        prefix: points(space, &o.prefix)?,
                        limit: point(space, &o.limit)?,
                        probability: o.probability,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        RawProcess::BlockOscillating { growth, a, b, phases } => ProcessModel::BlockOscillating {
            growth: match growth {
                RawGrowth::Linear { c } => BlockGrowth::Linear(*c),
                RawGrowth::Exponential { r } => BlockGrowth::Exponential(*r),
            },
            a: point(space, a)?,
            b: point(space, b)?,
            phases: *phases,
        },
    };
    model.check(space)?;
    Ok(model)
}

fn index_model(raw: &RawIndex) -> IndexModel {
    match raw {
        RawIndex::Deterministic { kn: k } => IndexModel::Deterministic(kn(k)),
        RawIndex::TwoPoint { q } => IndexModel::TwoPoint { q: *q },
        RawIndex::UniformWindow { beta } => IndexModel::UniformWindow { beta: *beta },
        RawIndex::LinearNoise { c, halfwidth } => IndexModel::LinearNoise {
            c: *c,
            halfwidth: Halfwidth { coef: halfwidth.coef, exponent: halfwidth.exponent },
        },
    }
}

fn family(space: &Space, raw: &RawFamily) -> Result<SetFamily> {
    match raw {
        RawFamily::HalfLines { thresholds } => {
            SetFamily::half_lines(thresholds.values().map_err(Error::InvalidParameter)?)
        }
        RawFamily::IntervalUnions { max_components, endpoints } => {
            SetFamily::interval_unions(*max_components, endpoints.values().map_err(Error::InvalidParameter)?)
        }
        RawFamily::SupportSubsets { points: ps } => SetFamily::support_subsets(points(space, ps)?),
    }
}

fn kn_family(raw: &RawKnFamily) -> Vec<KnSpec> {
    match raw {
        RawKnFamily::Linear { c_grid, explicit } => {
            let mut cs = c_grid.clone();
            cs.sort_by(f64::total_cmp);
            cs.dedup();
            cs.into_iter().map(KnSpec::Linear).chain(explicit.iter().cloned().map(KnSpec::Explicit)).collect()
        }
        RawKnFamily::Explicit { sequences } => sequences.iter().cloned().map(KnSpec::Explicit).collect(),
    }
}

fn build(raw: RawConfig) -> Result<Scenario> {
    let mut c = Collector { errors: Vec::new() };
    let space = match &raw.space {
        None => Some(Space::real_line()),
        Some(RawSpace::Euclidean { dim }) => c.take("space", Space::euclidean(*dim)),
        Some(RawSpace::Discrete { alphabet, distances }) => {
            c.take("space", Space::discrete(alphabet.clone(), distances.clone()))
        }
    };
    let alphas = match &raw.alpha_grid {
        None => Some(AlphaGrid::Auto),
        Some(RawAlpha::Keyword(k)) if k == "auto" => Some(AlphaGrid::Auto),
        Some(RawAlpha::Keyword(k)) => {
            c.errors.push(format!("alpha_grid: expected \"auto\" or a list, got \"{k}\""));
            None
        }
        Some(RawAlpha::Values(v)) => Some(AlphaGrid::Values(v.clone())),
    };
    let grid = alphas.and_then(|alphas| {
        c.take(
            "grid",
            EstimatorGrid::new(
                raw.epsilon_grid.clone(),
                raw.delta_grid.clone(),
                alphas,
                (raw.n_window[0], raw.n_window[1]),
                raw.stride,
                raw.samples,
            ),
        )
    });
    let index = index_model(&raw.index_model);
    let kns = kn_family(&raw.kn_family);
    let Some(space) = space else {
        return Err(Error::Validation(c.errors));
    };
    let process = c.take("process", process(&space, &raw.process));
    let target = c.take("target", law(&space, &raw.target));
    let fam = c.take("set_family", family(&space, &raw.set_family));
    if let Some(grid) = &grid {
        for n in grid.n_values() {
            if let Err(e) = index.max_index_bound(n) {
                c.errors.push(format!("index_model: {e}"));
                break;
            }
        }
    }
    match (process, target, fam, grid) {
        (Some(process), Some(target), Some(family), Some(grid)) if c.errors.is_empty() => {
            let scenario =
                Scenario { space, process, index_model: index, target, family, kn_family: kns, grid, seed: raw.seed };
            scenario.validate()?;
            Ok(scenario)
        }
        _ => Err(Error::Validation(c.errors)),
    }
}
