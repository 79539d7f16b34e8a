//! Faulty-node strategies, collected behind one pluggable profile.
//!
//! Faulty nodes comply with the medium (they never transmit in someone
//! else's slot and never jam) but are free to lie in content: inflate the
//! chorus count by always transmitting, occupy several candidate seats,
//! shift their apparent location by delaying pilots (shout) or advancing
//! them (whisper), and say anything at all during agreement.

use rand::Rng;

use crate::rng::Prng;
use crate::world::NodeTruth;

/// How a shout offset distorts a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShoutStyle {
    /// `d ↦ d + Δ` — a delayed time-of-arrival pilot.
    Additive,
    /// `d ↦ d · (1 + Δ)` — an amplified signal-strength pilot; the offset is
    /// then a unitless factor.
    Multiplicative,
}

/// Whether faulty nodes agree their offset ladders in advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShoutCoordination {
    /// Each node jitters its ladder independently.
    Independent,
    /// All nodes use the exact same ladder.
    Shared,
}

/// Per-senator agreement-stage strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaStrategy {
    /// Broadcast the fixed value `v` whenever a value is expected; reject
    /// every leader proposal.
    ExtremeValue(f64),
    /// Never broadcast, never vote.
    Silent,
    /// Broadcast a fresh uniform value from the range on each occasion and
    /// vote by fair coin.
    RandomVote { lo: f64, hi: f64 },
}

/// Config-level choice of agreement strategy, resolved per faulty senator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaAttack {
    /// Behave exactly like a good senator.
    Honest,
    /// `ExtremeValue` pinned to the senator's own initial value.
    Extreme,
    /// `ExtremeValue` pinned to a fixed value.
    ExtremeAt(f64),
    Silent,
    Random { lo: f64, hi: f64 },
}

impl BaAttack {
    pub(crate) fn parse(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "honest" {
            return Ok(BaAttack::Honest);
        }
        if s == "extreme" {
            return Ok(BaAttack::Extreme);
        }
        if let Some(v) = s.strip_prefix("extreme:") {
            let v: f64 = v
                .parse()
                .map_err(|_| format!("attack.ba_strategy: bad value in `{s}`"))?;
            return Ok(BaAttack::ExtremeAt(v));
        }
        if s == "silent" {
            return Ok(BaAttack::Silent);
        }
        if let Some(r) = s.strip_prefix("random:") {
            let Some((lo, hi)) = r.split_once(',') else {
                return Err("attack.ba_strategy: expected `random:lo,hi`".into());
            };
            let lo: f64 = lo.trim().parse().map_err(|_| "attack.ba_strategy: bad lo")?;
            let hi: f64 = hi.trim().parse().map_err(|_| "attack.ba_strategy: bad hi")?;
            if lo > hi {
                return Err("attack.ba_strategy: need lo <= hi".into());
            }
            return Ok(BaAttack::Random { lo, hi });
        }
        Err(format!(
            "attack.ba_strategy: expected honest|extreme|extreme:<v>|silent|random:<lo>,<hi>, got `{s}`"
        ))
    }

    pub(crate) fn format(&self) -> String {
        match self {
            BaAttack::Honest => "honest".into(),
            BaAttack::Extreme => "extreme".into(),
            BaAttack::ExtremeAt(v) => format!("extreme:{v}"),
            BaAttack::Silent => "silent".into(),
            BaAttack::Random { lo, hi } => format!("random:{lo},{hi}"),
        }
    }

    /// Resolve to a concrete per-senator strategy, or `None` for honest play.
    pub fn resolve(&self, own_value: f64) -> Option<BaStrategy> {
        match *self {
            BaAttack::Honest => None,
            BaAttack::Extreme => Some(BaStrategy::ExtremeValue(own_value)),
            BaAttack::ExtremeAt(v) => Some(BaStrategy::ExtremeValue(v)),
            BaAttack::Silent => Some(BaStrategy::Silent),
            BaAttack::Random { lo, hi } => Some(BaStrategy::RandomVote { lo, hi }),
        }
    }
}

/// The whole faulty behavior space, one knob per attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackProfile {
    /// Inflate every good node's population estimate by transmitting in all
    /// chorus slots (the worst admissible chorus attack).
    pub chorus_always_transmit: bool,
    /// Candidate seats each faulty node tries to win.
    pub sybil_seats: usize,
    /// Base location-forgery offset in meters (or a factor when the style is
    /// multiplicative). Zero disables; negative values whisper.
    pub shout_offset: f64,
    pub shout_style: ShoutStyle,
    pub shout_coordination: ShoutCoordination,
    /// Inflate reports only, leaving pilots honest — detectable by the
    /// symmetry check, unlike the consistent shout.
    pub asymmetric_lie: bool,
    pub ba_strategy: BaAttack,
}

impl Default for AttackProfile {
    /// The reference experiment's adversary: always-transmit chorus attack,
    /// three seats per faulty node at laddered shout offsets, extreme values
    /// during agreement.
    fn default() -> Self {
        AttackProfile {
            chorus_always_transmit: true,
            sybil_seats: 3,
            shout_offset: 100.0,
            shout_style: ShoutStyle::Additive,
            shout_coordination: ShoutCoordination::Independent,
            asymmetric_lie: false,
            ba_strategy: BaAttack::Extreme,
        }
    }
}

impl AttackProfile {
    /// Every attack switched off: a faulty node under this profile is
    /// behaviorally indistinguishable from a good one.
    pub fn disabled() -> Self {
        AttackProfile {
            chorus_always_transmit: false,
            sybil_seats: 1,
            shout_offset: 0.0,
            shout_style: ShoutStyle::Additive,
            shout_coordination: ShoutCoordination::Independent,
            asymmetric_lie: false,
            ba_strategy: BaAttack::Honest,
        }
    }

    pub fn is_disabled(&self) -> bool {
        !self.chorus_always_transmit
            && self.sybil_seats <= 1
            && self.shout_offset == 0.0
            && !self.asymmetric_lie
            && self.ba_strategy == BaAttack::Honest
    }

    pub(crate) fn validate(&self) -> std::result::Result<(), String> {
        if self.sybil_seats == 0 {
            return Err("attack.sybil_seats must be at least 1".into());
        }
        if !self.shout_offset.is_finite() {
            return Err("attack.shout_offset must be finite".into());
        }
        if let BaAttack::ExtremeAt(v) = self.ba_strategy {
            if !v.is_finite() {
                return Err("attack.ba_strategy: extreme value must be finite".into());
            }
        }
        Ok(())
    }
}

/// Ranging offset of each seat identity a faulty node may occupy.
///
/// Every identity of a shouting node forges a distinct location: seat `j`
/// (0-based) uses `(j+1)·Δ`, so pseudonyms land on separate fake rings
/// instead of stacking on one spot. Independent coordination jitters each
/// rung by a uniform factor in [0.5, 1.5]. With `Δ = 0` all identities stay
/// at the node's true position.
///
/// Good nodes get the single honest identity.
pub fn pseudonym_offsets(node: &NodeTruth, profile: &AttackProfile, rng: &mut Prng) -> Vec<f64> {
    if !node.is_faulty {
        return vec![0.0];
    }
    let seats = node.pseudonym_budget.max(1);
    (0..seats)
        .map(|j| {
            let base = (j as f64 + 1.0) * profile.shout_offset;
            if base == 0.0 {
                return 0.0;
            }
            match profile.shout_coordination {
                ShoutCoordination::Shared => base,
                ShoutCoordination::Independent => base * rng.random_range(0.5..1.5),
            }
        })
        .collect()
}

/// Apply a forgery offset to a true distance. Reported distances never go
/// below zero, so a whisper saturates at coincidence.
pub fn apply_offset(distance: f64, offset: f64, style: ShoutStyle) -> f64 {
    let shifted = match style {
        ShoutStyle::Additive => distance + offset,
        ShoutStyle::Multiplicative => distance * (1.0 + offset),
    };
    shifted.max(0.0)
}

/// Value (or silence) a faulty senator broadcasts when one is expected.
pub fn ba_emit(strategy: &BaStrategy, rng: &mut Prng) -> Option<f64> {
    match *strategy {
        BaStrategy::ExtremeValue(v) => Some(v),
        BaStrategy::Silent => None,
        BaStrategy::RandomVote { lo, hi } => Some(rng.random_range(lo..=hi)),
    }
}

/// Accept/reject vote of a faulty senator on a leader value (`None` = keeps
/// quiet). Extremists obstruct every anchor; random voters flip a coin.
pub fn ba_vote(strategy: &BaStrategy, _leader_value: f64, rng: &mut Prng) -> Option<bool> {
    match *strategy {
        BaStrategy::ExtremeValue(_) => Some(false),
        BaStrategy::Silent => None,
        BaStrategy::RandomVote { .. } => Some(rng.random_bool(0.5)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::world::{NodeId, NodeTruth};

    fn faulty_node(budget: usize) -> NodeTruth {
        NodeTruth {
            id: NodeId(0),
            position: [10.0, 20.0],
            is_faulty: true,
            initial_value: 100.0,
            pseudonym_budget: budget,
        }
    }

    #[test]
    fn single_seat_no_shout_is_honest_geometry() {
        let mut profile = AttackProfile::disabled();
        profile.sybil_seats = 1;
        let offs = pseudonym_offsets(&faulty_node(1), &profile, &mut seeded(3));
        assert_eq!(offs, vec![0.0]);
    }

    #[test]
    fn three_seats_share_the_physical_position() {
        let mut profile = AttackProfile::disabled();
        profile.sybil_seats = 3;
        let node = faulty_node(3);
        let offs = pseudonym_offsets(&node, &profile, &mut seeded(3));
        assert_eq!(offs, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn shout_offsets_ladder_per_seat() {
        let mut profile = AttackProfile::disabled();
        profile.sybil_seats = 3;
        profile.shout_offset = 40.0;
        profile.shout_coordination = ShoutCoordination::Shared;
        let offs = pseudonym_offsets(&faulty_node(3), &profile, &mut seeded(3));
        assert_eq!(offs, vec![40.0, 80.0, 120.0]);
    }

    #[test]
    fn independent_offsets_stay_within_jitter_band() {
        let mut profile = AttackProfile::disabled();
        profile.sybil_seats = 2;
        profile.shout_offset = 40.0;
        let offs = pseudonym_offsets(&faulty_node(2), &profile, &mut seeded(9));
        assert!(offs[0] >= 20.0 && offs[0] <= 60.0);
        assert!(offs[1] >= 40.0 && offs[1] <= 120.0);
    }

    #[test]
    fn shout_applies_to_both_directions_identically() {
        let d = 30.0;
        assert_eq!(apply_offset(d, 15.0, ShoutStyle::Additive), 45.0);
        assert_eq!(apply_offset(d, 0.5, ShoutStyle::Multiplicative), 45.0);
    }

    #[test]
    fn whisper_cannot_drive_distances_negative() {
        assert_eq!(apply_offset(10.0, -25.0, ShoutStyle::Additive), 0.0);
    }

    #[test]
    fn extreme_broadcasts_same_value_every_round() {
        let mut rng = seeded(1);
        let s = BaStrategy::ExtremeValue(100.0);
        for _ in 0..5 {
            assert_eq!(ba_emit(&s, &mut rng), Some(100.0));
        }
    }

    #[test]
    fn silent_never_broadcasts_or_votes() {
        let mut rng = seeded(1);
        assert_eq!(ba_emit(&BaStrategy::Silent, &mut rng), None);
        assert_eq!(ba_vote(&BaStrategy::Silent, 1.0, &mut rng), None);
    }

    #[test]
    fn random_vote_replays_under_the_same_seed() {
        let s = BaStrategy::RandomVote { lo: -5.0, hi: 5.0 };
        let mut a = seeded(17);
        let mut b = seeded(17);
        for _ in 0..10 {
            assert_eq!(ba_emit(&s, &mut a), ba_emit(&s, &mut b));
            assert_eq!(ba_vote(&s, 0.0, &mut a), ba_vote(&s, 0.0, &mut b));
        }
    }
}
