//! Phase 1 — chorus population estimation and the selfish-ALOHA candidate
//! lottery.
//!
//! In the chorus, every well-behaved node picks one receive slot out of `T`
//! and transmits a pilot in the other `T−1`; counting the transmitters it
//! overhears gives an unbiased population estimate `N̂ = 1 + T/(T−1)·q`.
//! Multipath counting resolves *physical* transmitters, so pseudonyms cannot
//! inflate `q`; the only chorus attack is transmitting in every slot.
//!
//! In the lottery, each node transmits per slot with the equilibrium
//! probability `p* = 1 − c^(1/(n−1))` computed from its own estimate. A
//! collision-free slot seats its lone transmitter. Good winners leave the
//! game; a faulty winner keeps competing until its pseudonym budget is
//! spent.

use rand::Rng;

use crate::adversary::AttackProfile;
use crate::error::{Error, Result};
use crate::rng::Prng;
use crate::world::{NodeId, NodeTruth};

/// What one node learned from its receive slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChorusReport {
    pub node: NodeId,
    /// Receive slot, 1-based in `1..=T`.
    pub receive_slot: u64,
    /// Physical transmitters overheard in that slot.
    pub observed_transmitters: usize,
    /// `1 + T/(T−1) · observed_transmitters`.
    pub population_estimate: f64,
}

/// One candidate seat, in seating order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seat {
    pub owner: NodeId,
    /// 0 for the owner's first seat, 1 for its second, and so on. Good
    /// owners only ever hold index 0.
    pub pseudonym_index: usize,
}

impl Seat {
    pub fn is_pseudonym(&self) -> bool {
        self.pseudonym_index > 0
    }
}

/// Result of the whole sortition phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SortitionOutcome {
    /// Exactly `S` seats, ordered by the collision-free success that won them.
    pub seats: Vec<Seat>,
    pub slots_elapsed: u64,
    pub reports: Vec<ChorusReport>,
}

impl SortitionOutcome {
    /// Seats held by faulty owners.
    pub fn faulty_seats(&self, world: &[NodeTruth]) -> usize {
        self.seats.iter().filter(|s| world[s.owner.0].is_faulty).count()
    }

    pub fn distinct_owners(&self) -> usize {
        let mut owners: Vec<usize> = self.seats.iter().map(|s| s.owner.0).collect();
        owners.sort_unstable();
        owners.dedup();
        owners.len()
    }
}

/// Symmetric mixed-strategy equilibrium transmission probability for per-slot
/// cost `c` and population `n` (fractional estimates are used as-is).
pub fn nash_probability(c: f64, n: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain(format!(
            "nash_probability: cost must lie in (0,1], got {c}"
        )));
    }
    if !(n >= 2.0) {
        return Err(Error::Domain(format!(
            "nash_probability: population must be at least 2, got {n}"
        )));
    }
    Ok(1.0 - c.powf(1.0 / (n - 1.0)))
}

/// Expected per-slot payoff of transmitting with probability `p_self` while
/// each of the other `n−1` players transmits with `p_other`: success pays
/// `1−c`, a collision costs `c`, silence pays zero.
pub fn transmit_payoff(p_self: f64, p_other: f64, n: f64, c: f64) -> f64 {
    let clear = (1.0 - p_other).powf(n - 1.0);
    p_self * ((1.0 - c) * clear - c * (1.0 - clear))
}

/// Run the chorus. Well-behaved nodes (good ones, and faulty ones unless the
/// profile says to transmit always) each produce a report; always-transmit
/// attackers receive nothing and report nothing.
pub fn run_chorus(
    world: &[NodeTruth],
    slots: u64,
    profile: &AttackProfile,
    rng: &mut Prng,
) -> Vec<ChorusReport> {
    assert!(slots >= 2, "chorus needs at least 2 slots");
    let behaves_well = |n: &NodeTruth| !n.is_faulty || !profile.chorus_always_transmit;

    // Receive-slot draws in id order keep the stream layout stable.
    let mut receive_slot = vec![0u64; world.len()];
    let mut per_slot = vec![0usize; slots as usize + 1];
    let mut behaving = 0usize;
    for node in world {
        if behaves_well(node) {
            let t = rng.random_range(1..=slots);
            receive_slot[node.id.0] = t;
            per_slot[t as usize] += 1;
            behaving += 1;
        }
    }
    let always_on = world.len() - behaving;

    let factor = slots as f64 / (slots as f64 - 1.0);
    world
        .iter()
        .filter(|n| behaves_well(n))
        .map(|node| {
            let t = receive_slot[node.id.0];
            // Among well-behaved peers, exactly those whose own receive slot
            // differs from `t` transmit during `t`.
            let q = always_on + (behaving - 1) - (per_slot[t as usize] - 1);
            ChorusReport {
                node: node.id,
                receive_slot: t,
                observed_transmitters: q,
                population_estimate: 1.0 + factor * q as f64,
            }
        })
        .collect()
}

/// Per-identity transmit probability: equilibrium play against the node's
/// own population estimate. Estimates below 2 clamp to the 2-player game —
/// the exponent needs at least one presumed competitor, and transmitting
/// with certainty would deadlock two nodes that both believe they are alone.
fn transmit_probability(c: f64, estimate: f64) -> f64 {
    nash_probability(c, estimate.max(2.0)).expect("clamped estimate >= 2 and c in (0,1]")
}

/// Run the ALOHA lottery until `seats` candidates are seated.
///
/// Each physical node flips one coin per slot (one radio) and exits once its
/// seat budget is spent: one seat for good nodes, `pseudonym_budget` for
/// faulty ones. Nodes without a chorus report (always-transmit attackers)
/// play the equilibrium against the true population — the strongest
/// knowledge an adversary can bring.
pub fn run_aloha(
    world: &[NodeTruth],
    reports: &[ChorusReport],
    seats: usize,
    c: f64,
    slot_cap: u64,
    rng: &mut Prng,
) -> Result<SortitionOutcome> {
    struct Player {
        node: usize,
        p: f64,
        seats_won: usize,
        budget: usize,
    }

    let mut estimate = vec![f64::NAN; world.len()];
    for r in reports {
        estimate[r.node.0] = r.population_estimate;
    }

    let mut players: Vec<Player> = world
        .iter()
        .map(|node| {
            let est = if estimate[node.id.0].is_nan() {
                world.len() as f64
            } else {
                estimate[node.id.0]
            };
            Player {
                node: node.id.0,
                p: transmit_probability(c, est),
                seats_won: 0,
                budget: if node.is_faulty { node.pseudonym_budget.max(1) } else { 1 },
            }
        })
        .collect();

    let mut seated: Vec<Seat> = Vec::with_capacity(seats);
    let mut slot = 0u64;
    while seated.len() < seats {
        if players.is_empty() || slot >= slot_cap {
            return Err(Error::SortitionTimeout(slot_cap));
        }
        slot += 1;
        let mut winner: Option<usize> = None;
        let mut transmitters = 0usize;
        for (idx, p) in players.iter().enumerate() {
            if rng.random_bool(p.p) {
                transmitters += 1;
                winner = if transmitters == 1 { Some(idx) } else { None };
            }
        }
        if transmitters == 1 {
            let idx = winner.expect("exactly one transmitter");
            let player = &mut players[idx];
            seated.push(Seat {
                owner: NodeId(player.node),
                pseudonym_index: player.seats_won,
            });
            player.seats_won += 1;
            if player.seats_won >= player.budget {
                players.remove(idx);
            }
        }
    }

    Ok(SortitionOutcome {
        seats: seated,
        slots_elapsed: slot,
        reports: reports.to_vec(),
    })
}

/// Default slot cap: generous headroom over the expected seating time at the
/// mean equilibrium probability.
pub fn default_slot_cap(world: &[NodeTruth], reports: &[ChorusReport], seats: usize, c: f64) -> u64 {
    let mut mean_p = 0.0;
    let mut count = 0usize;
    for r in reports {
        mean_p += transmit_probability(c, r.population_estimate);
        count += 1;
    }
    for node in world.iter().filter(|n| n.is_faulty) {
        if node.pseudonym_budget > 0 || reports.iter().all(|r| r.node != node.id) {
            mean_p += transmit_probability(c, world.len() as f64);
            count += 1;
        }
    }
    if count == 0 {
        return 1000;
    }
    let mean_p = (mean_p / count as f64).max(1e-6);
    ((50.0 * seats as f64 / mean_p).ceil() as u64).max(1000)
}
