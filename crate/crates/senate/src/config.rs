//! Scenario configuration: every experiment knob in one struct, plus the
//! flat `key = value` config-file format.
//!
//! Unknown keys are a hard error; so are duplicates. `#` starts a comment.

use std::path::Path;

use crate::adversary::{AttackProfile, BaAttack, ShoutCoordination, ShoutStyle};
use crate::error::{Error, Result};

/// Ranging-error model for pairwise distance estimation.
///
/// The net effect of a ranging measurement is `d̂ = σ·d + n`: time-of-arrival
/// ranging contributes an additive Gaussian term, received-signal-strength
/// ranging a multiplicative log-normal one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangingModel {
    /// Exact distances.
    Perfect,
    /// Additive Gaussian error with the given standard deviation in meters.
    Toa { additive_std: f64 },
    /// Log-normal multiplicative error with the given log-domain std.
    Rss { mult_log_std: f64 },
}

impl RangingModel {
    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("perfect") {
            return Ok(RangingModel::Perfect);
        }
        if let Some(v) = s.strip_prefix("toa:") {
            let std = parse_f64("ranging", v)?;
            if std < 0.0 {
                return Err(Error::Config("ranging: toa std must be >= 0".into()));
            }
            return Ok(RangingModel::Toa { additive_std: std });
        }
        if let Some(v) = s.strip_prefix("rss:") {
            let std = parse_f64("ranging", v)?;
            if std < 0.0 {
                return Err(Error::Config("ranging: rss std must be >= 0".into()));
            }
            return Ok(RangingModel::Rss { mult_log_std: std });
        }
        Err(Error::Config(format!(
            "ranging: expected `perfect`, `toa:<std>` or `rss:<std>`, got `{s}`"
        )))
    }

    fn format(&self) -> String {
        match self {
            RangingModel::Perfect => "perfect".into(),
            RangingModel::Toa { additive_std } => format!("toa:{additive_std}"),
            RangingModel::Rss { mult_log_std } => format!("rss:{mult_log_std}"),
        }
    }
}

/// All experiment knobs. Immutable value data once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Population size N.
    pub n_nodes: usize,
    /// Faulty nodes F (chosen uniformly at spawn).
    pub n_faulty: usize,
    /// Candidate quota S filled by the sortition lottery.
    pub n_candidates: usize,
    /// Senator quota K (one per cluster).
    pub n_senators: usize,
    /// Chorus duration T in slots.
    pub chorus_slots: u64,
    /// Per-slot transmission cost c of the ALOHA game, relative to the unit
    /// payoff of a collision-free transmission.
    pub tx_cost: f64,
    /// Symmetry-verification tolerance on squared-distance disagreement, m².
    /// When absent from a config file it is derived from the ranging model.
    pub symmetry_tol: f64,
    /// Embedding step size.
    pub wnc_step: f64,
    /// Local-error blending rate in (0, 1].
    pub wnc_error_blend: f64,
    /// Eviction threshold: remove the worst candidate when its local error
    /// exceeds this multiple of the mean.
    pub removal_factor: f64,
    /// Maximum relaxation rounds (each round ends with one eviction check).
    pub max_wnc_rounds: usize,
    /// Pair sweeps per round before the eviction check.
    pub wnc_sweeps_per_round: usize,
    /// Side of the square deployment area, meters.
    pub area_side: f64,
    /// Ranging-error model.
    pub ranging: RangingModel,
    /// Faulty-node strategy profile.
    pub attack: AttackProfile,
    /// Design fault budget t of the senate agreement; requires K >= 3t+1.
    pub agreement_fault_budget: usize,
    /// Base seed; episode i runs on `seed + i`.
    pub seed: u64,
    /// Episodes per sweep point.
    pub episodes: usize,
    /// Hard cap on ALOHA slots; derived from the equilibrium when absent.
    pub aloha_slot_cap: Option<u64>,
    /// Initial-value range for good nodes.
    pub good_values: (f64, f64),
    /// Initial-value range for faulty nodes.
    pub faulty_values: (f64, f64),
}

impl Default for ScenarioConfig {
    /// The reference experiment: 100 nodes in a 200 m square, 50 candidates,
    /// 7 senators, perfect ranging, good values on [-1,1] and faulty on
    /// [99,101], with the full attack profile enabled.
    fn default() -> Self {
        ScenarioConfig {
            n_nodes: 100,
            n_faulty: 0,
            n_candidates: 50,
            n_senators: 7,
            chorus_slots: 2000,
            tx_cost: 0.1,
            symmetry_tol: default_symmetry_tol(&RangingModel::Perfect, 200.0),
            wnc_step: 0.05,
            wnc_error_blend: 0.5,
            removal_factor: 3.0,
            max_wnc_rounds: 200,
            wnc_sweeps_per_round: 20,
            area_side: 200.0,
            ranging: RangingModel::Perfect,
            attack: AttackProfile::default(),
            agreement_fault_budget: 2,
            seed: 1,
            episodes: 200,
            aloha_slot_cap: None,
            good_values: (-1.0, 1.0),
            faulty_values: (99.0, 101.0),
        }
    }
}

/// No formula for the symmetry tolerance exists beyond "a constant related
/// to the error coefficients"; six times the additive variance is the knob's
/// default, with scale-based stand-ins for the other models.
fn default_symmetry_tol(ranging: &RangingModel, area_side: f64) -> f64 {
    match ranging {
        RangingModel::Perfect => 1e-6,
        RangingModel::Toa { additive_std } => {
            let v = additive_std * additive_std * 6.0;
            if v > 0.0 {
                v
            } else {
                1e-6
            }
        }
        RangingModel::Rss { mult_log_std } => {
            let v = mult_log_std * mult_log_std * 6.0 * area_side * area_side;
            if v > 0.0 {
                v
            } else {
                1e-6
            }
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_nodes == 0 {
            return fail("n_nodes must be positive".into());
        }
        if self.n_faulty > self.n_nodes {
            return fail(format!(
                "n_faulty ({}) exceeds n_nodes ({})",
                self.n_faulty, self.n_nodes
            ));
        }
        if self.n_candidates > self.n_nodes {
            return fail(format!(
                "n_candidates ({}) exceeds n_nodes ({})",
                self.n_candidates, self.n_nodes
            ));
        }
        if self.n_senators > self.n_candidates {
            return fail(format!(
                "n_senators ({}) exceeds n_candidates ({})",
                self.n_senators, self.n_candidates
            ));
        }
        if self.n_senators < 3 * self.agreement_fault_budget + 1 {
            return fail(format!(
                "n_senators ({}) must be at least 3*agreement_fault_budget+1 ({})",
                self.n_senators,
                3 * self.agreement_fault_budget + 1
            ));
        }
        if self.chorus_slots < 2 {
            return fail("chorus_slots must be at least 2".into());
        }
        if !(self.tx_cost > 0.0 && self.tx_cost < 1.0) {
            return fail(format!("tx_cost must lie in (0,1), got {}", self.tx_cost));
        }
        if !(self.symmetry_tol > 0.0) {
            return fail("symmetry_tol must be strictly positive".into());
        }
        if !(self.wnc_step > 0.0) {
            return fail("wnc_step must be strictly positive".into());
        }
        if !(self.wnc_error_blend > 0.0 && self.wnc_error_blend <= 1.0) {
            return fail("wnc_error_blend must lie in (0,1]".into());
        }
        if !(self.removal_factor > 1.0) {
            return fail("removal_factor must exceed 1".into());
        }
        if self.max_wnc_rounds == 0 || self.wnc_sweeps_per_round == 0 {
            return fail("max_wnc_rounds and wnc_sweeps_per_round must be positive".into());
        }
        if !(self.area_side > 0.0) {
            return fail("area_side must be strictly positive".into());
        }
        if self.episodes == 0 {
            return fail("episodes must be positive".into());
        }
        if self.good_values.0 > self.good_values.1 || self.faulty_values.0 > self.faulty_values.1 {
            return fail("value ranges must satisfy lo <= hi".into());
        }
        self.attack.validate().map_err(Error::Config)?;
        Ok(())
    }

    /// Parse the flat `key = value` format. Unknown keys and duplicate keys
    /// are hard errors.
    pub fn from_str(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: Vec<String> = Vec::new();
        let mut symmetry_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{}`",
                    lineno + 1,
                    line
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{}`",
                    lineno + 1,
                    key
                )));
            }
            seen.push(key.to_string());
            if key == "symmetry_tol" {
                symmetry_set = true;
            }
            cfg.apply(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, e)))?;
        }
        if !symmetry_set {
            cfg.symmetry_tol = default_symmetry_tol(&cfg.ranging, cfg.area_side);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    /// Apply one `key = value` override. Used both by the file parser and by
    /// `--set key=value` command-line overrides.
    pub fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let bad = |e: Error| match e {
            Error::Config(m) => m,
            other => other.to_string(),
        };
        match key {
            "n_nodes" => self.n_nodes = parse_usize(key, value).map_err(bad)?,
            "n_faulty" => self.n_faulty = parse_usize(key, value).map_err(bad)?,
            "n_candidates" => self.n_candidates = parse_usize(key, value).map_err(bad)?,
            "n_senators" => self.n_senators = parse_usize(key, value).map_err(bad)?,
            "chorus_slots" => self.chorus_slots = parse_u64(key, value).map_err(bad)?,
            "tx_cost" => self.tx_cost = parse_f64(key, value).map_err(bad)?,
            "symmetry_tol" => self.symmetry_tol = parse_f64(key, value).map_err(bad)?,
            "wnc_step" => self.wnc_step = parse_f64(key, value).map_err(bad)?,
            "wnc_error_blend" => self.wnc_error_blend = parse_f64(key, value).map_err(bad)?,
            "removal_factor" => self.removal_factor = parse_f64(key, value).map_err(bad)?,
            "max_wnc_rounds" => self.max_wnc_rounds = parse_usize(key, value).map_err(bad)?,
            "wnc_sweeps_per_round" => {
                self.wnc_sweeps_per_round = parse_usize(key, value).map_err(bad)?
            }
            "area_side" => self.area_side = parse_f64(key, value).map_err(bad)?,
            "ranging" => self.ranging = RangingModel::parse(value).map_err(bad)?,
            "agreement_fault_budget" => {
                self.agreement_fault_budget = parse_usize(key, value).map_err(bad)?
            }
            "seed" => self.seed = parse_u64(key, value).map_err(bad)?,
            "episodes" => self.episodes = parse_usize(key, value).map_err(bad)?,
            "aloha_slot_cap" => self.aloha_slot_cap = Some(parse_u64(key, value).map_err(bad)?),
            "good_values" => self.good_values = parse_range(key, value).map_err(bad)?,
            "faulty_values" => self.faulty_values = parse_range(key, value).map_err(bad)?,
            "attack.chorus_always_transmit" => {
                self.attack.chorus_always_transmit = parse_bool(key, value).map_err(bad)?
            }
            "attack.sybil_seats" => self.attack.sybil_seats = parse_usize(key, value).map_err(bad)?,
            "attack.shout_offset" => {
                self.attack.shout_offset = parse_f64(key, value).map_err(bad)?
            }
            "attack.shout_style" => {
                self.attack.shout_style = match value {
                    "additive" => ShoutStyle::Additive,
                    "multiplicative" => ShoutStyle::Multiplicative,
                    other => {
                        return Err(format!(
                            "attack.shout_style: expected `additive` or `multiplicative`, got `{other}`"
                        ))
                    }
                }
            }
            "attack.shout_coordination" => {
                self.attack.shout_coordination = match value {
                    "independent" => ShoutCoordination::Independent,
                    "shared" => ShoutCoordination::Shared,
                    other => {
                        return Err(format!(
                            "attack.shout_coordination: expected `independent` or `shared`, got `{other}`"
                        ))
                    }
                }
            }
            "attack.asymmetric_lie" => {
                self.attack.asymmetric_lie = parse_bool(key, value).map_err(bad)?
            }
            "attack.ba_strategy" => self.attack.ba_strategy = BaAttack::parse(value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Render back to the config-file format (documentation and tests).
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("n_nodes", self.n_nodes.to_string());
        push("n_faulty", self.n_faulty.to_string());
        push("n_candidates", self.n_candidates.to_string());
        push("n_senators", self.n_senators.to_string());
        push("chorus_slots", self.chorus_slots.to_string());
        push("tx_cost", self.tx_cost.to_string());
        push("symmetry_tol", self.symmetry_tol.to_string());
        push("wnc_step", self.wnc_step.to_string());
        push("wnc_error_blend", self.wnc_error_blend.to_string());
        push("removal_factor", self.removal_factor.to_string());
        push("max_wnc_rounds", self.max_wnc_rounds.to_string());
        push("wnc_sweeps_per_round", self.wnc_sweeps_per_round.to_string());
        push("area_side", self.area_side.to_string());
        push("ranging", self.ranging.format());
        push("agreement_fault_budget", self.agreement_fault_budget.to_string());
        push("seed", self.seed.to_string());
        push("episodes", self.episodes.to_string());
        if let Some(cap) = self.aloha_slot_cap {
            push("aloha_slot_cap", cap.to_string());
        }
        push("good_values", format!("{},{}", self.good_values.0, self.good_values.1));
        push(
            "faulty_values",
            format!("{},{}", self.faulty_values.0, self.faulty_values.1),
        );
        push(
            "attack.chorus_always_transmit",
            self.attack.chorus_always_transmit.to_string(),
        );
        push("attack.sybil_seats", self.attack.sybil_seats.to_string());
        push("attack.shout_offset", self.attack.shout_offset.to_string());
        push(
            "attack.shout_style",
            match self.attack.shout_style {
                ShoutStyle::Additive => "additive".into(),
                ShoutStyle::Multiplicative => "multiplicative".into(),
            },
        );
        push(
            "attack.shout_coordination",
            match self.attack.shout_coordination {
                ShoutCoordination::Independent => "independent".into(),
                ShoutCoordination::Shared => "shared".into(),
            },
        );
        push("attack.asymmetric_lie", self.attack.asymmetric_lie.to_string());
        push("attack.ba_strategy", self.attack.ba_strategy.format());
        out
    }
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got `{v}`")))
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got `{v}`")))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("{key}: must be finite")));
    }
    Ok(x)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got `{v}`"))),
    }
}

fn parse_range(key: &str, v: &str) -> Result<(f64, f64)> {
    let Some((lo, hi)) = v.split_once(',') else {
        return Err(Error::Config(format!("{key}: expected `lo,hi`, got `{v}`")));
    };
    Ok((parse_f64(key, lo.trim())?, parse_f64(key, hi.trim())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_comments_and_values() {
        let cfg = ScenarioConfig::from_str(
            "# experiment\n\
             n_nodes = 20\n\
             n_faulty = 5   # out of 20\n\
             n_candidates = 10\n\
             n_senators = 4\n\
             agreement_fault_budget = 1\n\
             ranging = toa:1.5\n\
             tx_cost = 0.25\n",
        )
        .unwrap();
        assert_eq!(cfg.n_nodes, 20);
        assert_eq!(cfg.n_faulty, 5);
        assert_eq!(cfg.ranging, RangingModel::Toa { additive_std: 1.5 });
        assert!((cfg.symmetry_tol - 6.0 * 1.5 * 1.5).abs() < 1e-12);
        assert_eq!(cfg.tx_cost, 0.25);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = ScenarioConfig::from_str("n_node = 10\n").unwrap_err();
        assert!(err.to_string().contains("unknown key"));
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = ScenarioConfig::from_str("seed = 1\nseed = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn faulty_beyond_population_is_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.n_faulty = cfg.n_nodes + 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn senate_smaller_than_fault_bound_is_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.n_senators = 6;
        cfg.agreement_fault_budget = 2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn round_trips_through_config_format() {
        let mut cfg = ScenarioConfig::default();
        cfg.n_faulty = 30;
        cfg.ranging = RangingModel::Rss { mult_log_std: 0.1 };
        cfg.symmetry_tol = 42.0;
        cfg.aloha_slot_cap = Some(12345);
        let text = cfg.to_config_string();
        let parsed = ScenarioConfig::from_str(&text).unwrap();
        assert_eq!(parsed, cfg);
    }
}
