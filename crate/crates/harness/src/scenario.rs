//! Experiment descriptions: a grid of network settings crossed with repetitions.

use std::fmt;
use std::str::FromStr;

use census_core::aggregation::AggregateKind;
use census_core::protocol::Variant;
use census_core::sim::{MobilityModel, WorldConfig, DEFAULT_SLOT_DT};
use census_core::trial::TrialConfig;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Radio range in metres. Only the ratio of range to deployment side matters,
/// and the side is derived from the density.
pub const RANGE_M: f64 = 100.0;

/// Sizes reproduced by default; larger networks are opt-in.
pub const DESK_SIZES: [usize; 4] = [125, 250, 500, 1000];
pub const FULL_SIZES: [usize; 6] = [125, 250, 500, 1000, 2000, 4000];

fn invalid(field: &'static str, reason: impl Into<String>) -> HarnessError {
    HarnessError::InvalidScenario {
        field,
        reason: reason.into(),
    }
}

/// How many tokens a trial starts with, as a function of network size.
#[derive(Clone, Debug, PartialEq)]
pub enum TokenRule {
    Fixed(usize),
    Sqrt,
    Log2,
    /// One explicit count per entry of the size list.
    PerSize(Vec<usize>),
}

impl TokenRule {
    /// Token count for a network of `n` nodes; `index` locates `n` in the size list.
    pub fn tokens(&self, n: usize, index: usize) -> Result<usize, HarnessError> {
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        let k = match self {
            TokenRule::Fixed(k) => *k,
            TokenRule::Sqrt => (n as f64).sqrt().round() as usize,
            TokenRule::Log2 => ((n as f64).log2().round() as usize).max(1),
            TokenRule::PerSize(ks) => *ks
                .get(index)
                .ok_or_else(|| invalid("tokens", format!("no token count for size index {index}")))?,
        };
        if k == 0 || k > n {
            return Err(invalid("tokens", format!("{k} tokens for {n} nodes")));
        }
        Ok(k)
    }
}

impl fmt::Display for TokenRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenRule::Fixed(k) => write!(f, "{k}"),
            TokenRule::Sqrt => f.write_str("sqrt"),
            TokenRule::Log2 => f.write_str("log2"),
            TokenRule::PerSize(ks) => {
                let list: Vec<String> = ks.iter().map(usize::to_string).collect();
                f.write_str(&list.join("/"))
            }
        }
    }
}

impl FromStr for TokenRule {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || invalid("tokens", format!("`{s}` is not fixed, sqrt, log2 or a/b/c"));
        match s.trim() {
            "sqrt" => Ok(TokenRule::Sqrt),
            "log2" | "log" => Ok(TokenRule::Log2),
            t if t.contains('/') => t
                .split('/')
                .map(|x| x.trim().parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()
                .map(TokenRule::PerSize),
            t => t.parse().map(TokenRule::Fixed).map_err(|_| bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MobilityKind {
    RandomWalk2D,
    RandomWaypoint,
    GaussMarkov,
}

impl MobilityKind {
    pub fn name(self) -> &'static str {
        match self {
            MobilityKind::RandomWalk2D => "rw2d",
            MobilityKind::RandomWaypoint => "rwp",
            MobilityKind::GaussMarkov => "gm",
        }
    }

    /// Concrete model for a speed range in m/s.
    pub fn model(self, speed: SpeedRange) -> MobilityModel {
        match self {
            MobilityKind::RandomWalk2D => MobilityModel::RandomWalk2D {
                leg_len: RANGE_M,
                v_min: speed.min,
                v_max: speed.max,
            },
            MobilityKind::RandomWaypoint => MobilityModel::RandomWaypoint {
                pause: 2.0,
                v_min: speed.min,
                v_max: speed.max,
            },
            MobilityKind::GaussMarkov => MobilityModel::GaussMarkov {
                alpha: 0.75,
                mean_speed: 0.5 * (speed.min + speed.max),
                speed_sigma: 0.5,
                direction_sigma: std::f64::consts::FRAC_PI_4,
                update_interval: 1.0,
            },
        }
    }
}

impl fmt::Display for MobilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MobilityKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "rw2d" | "random_walk" => Ok(MobilityKind::RandomWalk2D),
            "rwp" | "random_waypoint" => Ok(MobilityKind::RandomWaypoint),
            "gm" | "gauss_markov" => Ok(MobilityKind::GaussMarkov),
            other => Err(invalid("mobility", format!("unknown model `{other}`"))),
        }
    }
}

/// Node speed interval in m/s, written `min:max` or a single value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedRange {
    pub min: f64,
    pub max: f64,
}

impl SpeedRange {
    /// `centre ± 1` m/s, the spread used by the speed scenarios.
    pub fn around(centre: f64) -> Self {
        Self {
            min: (centre - 1.0).max(0.0),
            max: centre + 1.0,
        }
    }
}

impl fmt::Display for SpeedRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.min, self.max)
    }
}

impl FromStr for SpeedRange {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid("speed", format!("`{s}` is not `min:max` in m/s")))
        };
        let range = match s.split_once(':') {
            Some((a, b)) => Self { min: num(a)?, max: num(b)? },
            None => {
                let v = num(s)?;
                Self { min: v, max: v }
            }
        };
        if !(range.min >= 0.0 && range.max >= range.min) {
            return Err(invalid("speed", format!("`{s}` needs 0 <= min <= max")));
        }
        Ok(range)
    }
}

/// A named experiment: every combination of the list-valued fields, repeated.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub variants: Vec<Variant>,
    pub sizes: Vec<usize>,
    pub tokens: TokenRule,
    pub densities: Vec<f64>,
    pub mobility: Vec<MobilityKind>,
    pub speeds: Vec<SpeedRange>,
    pub losses: Vec<f64>,
    pub reliable: bool,
    pub repetitions: u32,
    /// Stop each trial at this coverage fraction instead of full coverage.
    pub partial_stop: Option<f64>,
    /// Trials per union ensemble when `partial_stop` is set.
    pub union_size: u32,
    pub seed_base: u64,
    pub aggregate: AggregateKind,
    /// Gradient trials keep running after coverage until termination is detected.
    pub await_termination: bool,
    pub max_slots: u64,
    pub timeline: bool,
    /// Flood the final tokens to every node after the trial stops.
    pub exfiltrate: bool,
}

impl Scenario {
    /// A single-configuration scenario with desk defaults.
    pub fn single(name: &str, variant: Variant, n: usize) -> Self {
        Self {
            name: name.to_string(),
            variants: vec![variant],
            sizes: vec![n],
            tokens: TokenRule::Fixed(1),
            densities: vec![10.0],
            mobility: vec![MobilityKind::RandomWalk2D],
            speeds: vec![SpeedRange::around(3.0)],
            losses: vec![0.0],
            reliable: false,
            repetitions: 10,
            partial_stop: None,
            union_size: 5,
            seed_base: 1000,
            aggregate: AggregateKind::Count,
            await_termination: true,
            max_slots: 2_000_000,
            timeline: false,
            exfiltrate: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let nonempty = |len: usize, field| if len == 0 { Err(invalid(field, "list is empty")) } else { Ok(()) };
        nonempty(self.variants.len(), "variants")?;
        nonempty(self.sizes.len(), "sizes")?;
        nonempty(self.densities.len(), "density")?;
        nonempty(self.mobility.len(), "mobility")?;
        nonempty(self.speeds.len(), "speed")?;
        nonempty(self.losses.len(), "loss")?;
        if self.repetitions == 0 {
            return Err(invalid("repetitions", "must be at least 1"));
        }
        if let TokenRule::PerSize(ks) = &self.tokens {
            if ks.len() != self.sizes.len() {
                return Err(invalid("tokens", "per-size list must match the size list"));
            }
        }
        if let Some(m) = self.partial_stop {
            if !(m > 0.0 && m < 1.0) {
                return Err(invalid("partial_stop", format!("{m} is outside (0, 1)")));
            }
            if self.union_size == 0 || !self.repetitions.is_multiple_of(self.union_size) {
                return Err(invalid("union_size", "must divide the repetition count"));
            }
            // Several trials of one ensemble can count the same node, so only
            // aggregates that tolerate duplicates are meaningful across a union.
            if !self.aggregate.duplicate_insensitive() {
                return Err(invalid("aggregate", "union trials need min, max or histogram"));
            }
        }
        for spec in self.trials()? {
            spec.config.validate()?;
        }
        Ok(())
    }

    /// Every trial of the run in output order.
    pub fn trials(&self) -> Result<Vec<TrialSpec>, HarnessError> {
        let mut out = Vec::new();
        let mut cell = 0;
        for &variant in &self.variants {
            for (si, &n) in self.sizes.iter().enumerate() {
                let tokens = self.tokens.tokens(n, si)?;
                for &density in &self.densities {
                    for &mobility in &self.mobility {
                        for &speed in &self.speeds {
                            for &loss in &self.losses {
                                let world = WorldConfig::derive(n, density, RANGE_M, loss, DEFAULT_SLOT_DT)?;
                                for rep in 0..self.repetitions {
                                    let seed = self.seed_base + u64::from(rep);
                                    let mut config = TrialConfig::new(world.clone(), mobility.model(speed), variant, tokens, seed);
                                    config.protocol.reliable_transfer = self.reliable;
                                    config.aggregate = census_core::aggregation::AggregateSpec::new(self.aggregate);
                                    config.stop.coverage = self.partial_stop.unwrap_or(1.0);
                                    config.stop.max_slots = self.max_slots;
                                    config.stop.await_termination = self.await_termination;
                                    config.exfiltrate = self.exfiltrate;
                                    out.push(TrialSpec {
                                        index: out.len(),
                                        cell,
                                        rep,
                                        mobility,
                                        speed,
                                        config,
                                    });
                                }
                                cell += 1;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// One trial of a scenario with its grid coordinates.
#[derive(Clone, Debug)]
pub struct TrialSpec {
    pub index: usize,
    pub cell: usize,
    pub rep: u32,
    pub mobility: MobilityKind,
    pub speed: SpeedRange,
    pub config: TrialConfig,
}

/// Names accepted by `builtin`.
pub const BUILTINS: [&str; 10] = [
    "fig2a",
    "overhead",
    "sqrtN",
    "logN",
    "tokens",
    "density",
    "mobility",
    "speed",
    "union",
    "reliability",
];

/// A catalogued experiment. `full` adds the 2000 and 4000 node sizes where they apply.
pub fn builtin(name: &str, full: bool) -> Result<Scenario, HarnessError> {
    let sizes = if full { FULL_SIZES.to_vec() } else { DESK_SIZES.to_vec() };
    let mut s = Scenario::single(name, Variant::GradientBias, 500);
    match name {
        "fig2a" => {
            s.variants = Variant::ALL.to_vec();
            s.sizes = vec![100, 200, 300, 400, 500];
        }
        "overhead" => {
            s.variants = vec![Variant::LocalBias, Variant::GradientBias];
            s.sizes = sizes;
            s.timeline = true;
        }
        "sqrtN" | "logN" => {
            s.variants = vec![Variant::LocalBias, Variant::GradientBias];
            let ks: &[usize] = if name == "sqrtN" {
                &[11, 15, 22, 31, 42, 62]
            } else {
                &[7, 8, 9, 10, 11, 12]
            };
            s.tokens = TokenRule::PerSize(ks[..sizes.len()].to_vec());
            s.sizes = sizes;
        }
        "tokens" => {
            // Repeating the size gives each token count its own grid cell.
            s.sizes = vec![500; 4];
            s.tokens = TokenRule::PerSize(vec![1, 5, 11, 22]);
        }
        "density" => s.densities = vec![7.0, 10.0, 13.0],
        "mobility" => {
            s.mobility = vec![
                MobilityKind::RandomWalk2D,
                MobilityKind::RandomWaypoint,
                MobilityKind::GaussMarkov,
            ];
        }
        "speed" => s.speeds = vec![SpeedRange::around(3.0), SpeedRange::around(15.0)],
        "union" => {
            s.variants = vec![Variant::LocalBias];
            s.partial_stop = Some(0.6);
            s.repetitions = 50;
            s.aggregate = AggregateKind::Max;
        }
        "reliability" => {
            s.sizes = vec![200];
            s.losses = vec![0.05, 0.2];
            s.reliable = true;
            s.repetitions = 20;
        }
        other => return Err(HarnessError::UnknownScenario(other.to_string())),
    }
    Ok(s)
}

/// Flat `key = value` scenario file. Every key is optional; omitted keys keep
/// the single-configuration defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: Option<String>,
    /// Start from a builtin and override individual keys.
    pub base: Option<String>,
    pub variants: Option<Vec<String>>,
    pub sizes: Option<Vec<usize>>,
    /// `1`, `sqrt`, `log2` or a per-size list such as `11/15/22`.
    pub tokens: Option<String>,
    pub density: Option<Vec<f64>>,
    pub mobility: Option<Vec<String>>,
    /// Speed ranges such as `"2:4"`.
    pub speed: Option<Vec<String>>,
    pub loss: Option<Vec<f64>>,
    pub reliable: Option<bool>,
    pub repetitions: Option<u32>,
    pub partial_stop: Option<f64>,
    pub union_size: Option<u32>,
    pub seed_base: Option<u64>,
    pub aggregate: Option<String>,
    pub await_termination: Option<bool>,
    pub max_slots: Option<u64>,
    pub timeline: Option<bool>,
    pub exfiltrate: Option<bool>,
    pub full: Option<bool>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        Ok(toml::from_str(text)?)
    }

    pub fn build(&self) -> Result<Scenario, HarnessError> {
        let mut s = match &self.base {
            Some(base) => builtin(base, self.full.unwrap_or(false))?,
            None => Scenario::single("custom", Variant::GradientBias, 500),
        };
        if let Some(name) = &self.name {
            s.name = name.clone();
        }
        if let Some(v) = &self.variants {
            s.variants = v.iter().map(|x| x.parse()).collect::<Result<_, _>>()?;
        }
        if let Some(v) = &self.sizes {
            s.sizes = v.clone();
        }
        if let Some(v) = &self.tokens {
            s.tokens = v.parse()?;
        }
        if let Some(v) = &self.density {
            s.densities = v.clone();
        }
        if let Some(v) = &self.mobility {
            s.mobility = v.iter().map(|x| x.parse()).collect::<Result<_, _>>()?;
        }
        if let Some(v) = &self.speed {
            s.speeds = v.iter().map(|x| x.parse()).collect::<Result<_, _>>()?;
        }
        if let Some(v) = &self.loss {
            s.losses = v.clone();
        }
        if let Some(v) = self.reliable {
            s.reliable = v;
        }
        if let Some(v) = self.repetitions {
            s.repetitions = v;
        }
        if self.partial_stop.is_some() {
            s.partial_stop = self.partial_stop;
        }
        if let Some(v) = self.union_size {
            s.union_size = v;
        }
        if let Some(v) = self.seed_base {
            s.seed_base = v;
        }
        if let Some(v) = &self.aggregate {
            s.aggregate = v.parse()?;
        }
        if let Some(v) = self.await_termination {
            s.await_termination = v;
        }
        if let Some(v) = self.max_slots {
            s.max_slots = v;
        }
        if let Some(v) = self.timeline {
            s.timeline = v;
        }
        if let Some(v) = self.exfiltrate {
            s.exfiltrate = v;
        }
        s.validate()?;
        Ok(s)
    }

    /// The complete description of `s`, suitable for writing into a manifest.
    pub fn snapshot(s: &Scenario) -> Self {
        Self {
            name: Some(s.name.clone()),
            base: None,
            variants: Some(s.variants.iter().map(|v| v.name().to_string()).collect()),
            sizes: Some(s.sizes.clone()),
            tokens: Some(s.tokens.to_string()),
            density: Some(s.densities.clone()),
            mobility: Some(s.mobility.iter().map(|m| m.name().to_string()).collect()),
            speed: Some(s.speeds.iter().map(SpeedRange::to_string).collect()),
            loss: Some(s.losses.clone()),
            reliable: Some(s.reliable),
            repetitions: Some(s.repetitions),
            partial_stop: s.partial_stop,
            union_size: Some(s.union_size),
            seed_base: Some(s.seed_base),
            aggregate: Some(s.aggregate.to_string()),
            await_termination: Some(s.await_termination),
            max_slots: Some(s.max_slots),
            timeline: Some(s.timeline),
            exfiltrate: Some(s.exfiltrate),
            full: None,
        }
    }
}
