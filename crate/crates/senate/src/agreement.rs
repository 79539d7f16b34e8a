//! Phase 3 — rotating-leader byzantine agreement among the senators, with
//! median validity, plus the final network-wide majority broadcast.
//!
//! The medium is an equivocation-free broadcast: one transmission is heard
//! identically by every listener, so a faulty senator can send garbage or
//! stay silent but cannot tell two receivers different things. Every good
//! senator therefore works from the same received multiset and the protocol
//! proceeds in lockstep.
//!
//! Setup: everyone broadcasts an initial value; each good senator sorts the
//! common multiset `R`, trims `t` from each end to get its acceptable
//! interval `A = [R[t], R[|R|−1−t]]`, and proposes `median(R)`. Search: for
//! rounds `1..=t+1` the leader (ascending seat order) broadcasts the median
//! of the current proposals clipped into its own `A`; each good senator
//! votes to accept iff the value lies in its `A`; at `k−t` accepts every
//! good senator adopts the leader value. The value held after round `t+1`
//! is the decision. With `f ≤ t` and `k ≥ 3t+1`, every anchored value —
//! and the default `median(R)` — lies within `t` sorted positions of the
//! good median.

use crate::adversary::{ba_emit, ba_vote, BaStrategy};
use crate::error::{Error, Result};
use crate::rng::Prng;

/// One senate member as the agreement sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct SenatorSpec {
    /// Stable identity used in transcripts (seat order = input order).
    pub id: u64,
    pub behavior: SenatorBehavior,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SenatorBehavior {
    Good { value: f64 },
    Faulty { strategy: BaStrategy },
}

/// Sizing of one agreement instance; the guarantees need `k ≥ 3t+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgreementParams {
    /// Design fault budget t.
    pub fault_budget: usize,
}

/// One search round as recorded in the transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRound {
    pub leader: u64,
    /// What the leader broadcast (None = silent leader).
    pub leader_value: Option<f64>,
    /// Accept votes by seat; None for senators that kept quiet.
    pub votes: Vec<Option<bool>>,
    pub accepts: usize,
    /// Whether the accept quorum anchored the leader value.
    pub anchored: bool,
    /// The good senators' common value after the round.
    pub current: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementTranscript {
    /// Setup broadcasts by seat (None = silent).
    pub setup_broadcasts: Vec<Option<f64>>,
    /// The common acceptable interval, when anyone broadcast at all.
    pub acceptable: Option<(f64, f64)>,
    /// The common starting proposal, `median(R)`.
    pub initial_proposal: Option<f64>,
    /// Exactly `t+1` rounds.
    pub rounds: Vec<SearchRound>,
    /// Final decision of every good senator, in seat order.
    pub decisions: Vec<(u64, f64)>,
}

/// Median of a sorted slice (mean of the middles for even length).
fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// The interval a decision must land in to be median-valid: within `t`
/// sorted positions of the good median, indices clamped to the array.
///
/// `good_sorted` must hold the `n − f` good values in ascending order.
pub fn median_valid_interval(
    good_sorted: &[f64],
    n: usize,
    f: usize,
    t: usize,
) -> Result<(f64, f64)> {
    if good_sorted.is_empty() {
        return Err(Error::NoGoodValues);
    }
    if f > n || good_sorted.len() != n - f {
        return Err(Error::Domain(format!(
            "median_valid_interval: |G| = {} but n − f = {}",
            good_sorted.len(),
            n as i64 - f as i64
        )));
    }
    let center = (n - f).div_ceil(2) - 1;
    let lo = good_sorted[center.saturating_sub(t)];
    let hi = good_sorted[(center + t).min(good_sorted.len() - 1)];
    Ok((lo, hi))
}

/// Run one synchronous agreement instance.
///
/// Rejects configurations with `k < 3t+1`. Always runs exactly `t+1` search
/// rounds; all good senators finish with the same value.
pub fn run_agreement(
    senators: &[SenatorSpec],
    params: &AgreementParams,
    rng: &mut Prng,
) -> Result<AgreementTranscript> {
    let k = senators.len();
    let t = params.fault_budget;
    if k < 3 * t + 1 {
        return Err(Error::FaultBudget { k, t });
    }

    // Setup: one broadcast each, heard by all.
    let setup_broadcasts: Vec<Option<f64>> = senators
        .iter()
        .map(|s| match &s.behavior {
            SenatorBehavior::Good { value } => Some(*value),
            SenatorBehavior::Faulty { strategy } => ba_emit(strategy, rng),
        })
        .collect();

    let mut received: Vec<f64> = setup_broadcasts.iter().flatten().copied().collect();
    received.sort_by(|a, b| a.total_cmp(b));

    let (acceptable, initial_proposal) = if received.is_empty() {
        (None, None)
    } else {
        let last = received.len() - 1;
        let lo_idx = t.min(last);
        let hi_idx = last.saturating_sub(t).max(lo_idx);
        (
            Some((received[lo_idx], received[hi_idx])),
            Some(median_sorted(&received)),
        )
    };

    let mut current = initial_proposal;
    let mut rounds = Vec::with_capacity(t + 1);
    for round in 0..=t {
        let leader = &senators[round];

        // Everyone broadcasts its current proposal.
        let proposals: Vec<Option<f64>> = senators
            .iter()
            .map(|s| match &s.behavior {
                SenatorBehavior::Good { .. } => current,
                SenatorBehavior::Faulty { strategy } => ba_emit(strategy, rng),
            })
            .collect();

        let leader_value = match &leader.behavior {
            SenatorBehavior::Good { .. } => {
                let mut heard: Vec<f64> = proposals.iter().flatten().copied().collect();
                heard.sort_by(|a, b| a.total_cmp(b));
                match (heard.is_empty(), acceptable) {
                    (false, Some((lo, hi))) => Some(median_sorted(&heard).clamp(lo, hi)),
                    _ => None,
                }
            }
            SenatorBehavior::Faulty { strategy } => ba_emit(strategy, rng),
        };

        let votes: Vec<Option<bool>> = senators
            .iter()
            .map(|s| {
                let value = leader_value?;
                match &s.behavior {
                    SenatorBehavior::Good { .. } => {
                        let (lo, hi) = acceptable?;
                        Some(value >= lo && value <= hi)
                    }
                    SenatorBehavior::Faulty { strategy } => ba_vote(strategy, value, rng),
                }
            })
            .collect();
        let accepts = votes.iter().filter(|v| **v == Some(true)).count();

        let anchored = leader_value.is_some() && accepts >= k - t;
        if anchored {
            current = leader_value;
        }
        rounds.push(SearchRound {
            leader: leader.id,
            leader_value,
            votes,
            accepts,
            anchored,
            current,
        });
    }

    let decisions = senators
        .iter()
        .filter_map(|s| match &s.behavior {
            SenatorBehavior::Good { .. } => current.map(|v| (s.id, v)),
            SenatorBehavior::Faulty { .. } => None,
        })
        .collect();

    Ok(AgreementTranscript {
        setup_broadcasts,
        acceptable,
        initial_proposal,
        rounds,
        decisions,
    })
}

/// Network-wide adoption: every senator broadcasts its decision and each
/// good node takes the most frequent value, ties to the smallest. `None`
/// when nothing was broadcast at all.
pub fn finalize_network(broadcasts: &[Option<f64>]) -> Option<f64> {
    let mut values: Vec<f64> = broadcasts.iter().flatten().copied().collect();
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let mut best_value = values[0];
    let mut best_count = 0usize;
    let mut i = 0;
    while i < values.len() {
        let mut j = i;
        while j < values.len() && values[j] == values[i] {
            j += 1;
        }
        if j - i > best_count {
            best_count = j - i;
            best_value = values[i];
        }
        i = j;
    }
    Some(best_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    fn good(id: u64, value: f64) -> SenatorSpec {
        SenatorSpec { id, behavior: SenatorBehavior::Good { value } }
    }

    fn faulty(id: u64, strategy: BaStrategy) -> SenatorSpec {
        SenatorSpec { id, behavior: SenatorBehavior::Faulty { strategy } }
    }

    #[test]
    fn interval_of_four_with_one_fault_one_budget() {
        let (lo, hi) = median_valid_interval(&[1.0, 2.0, 3.0], 4, 1, 1).unwrap();
        assert_eq!((lo, hi), (1.0, 3.0));
    }

    #[test]
    fn interval_of_singleton() {
        let (lo, hi) = median_valid_interval(&[7.0], 1, 0, 0).unwrap();
        assert_eq!((lo, hi), (7.0, 7.0));
    }

    #[test]
    fn interval_clamps_at_the_edges() {
        let (lo, hi) = median_valid_interval(&[0.0, 1.0, 2.0, 3.0, 4.0], 7, 2, 2).unwrap();
        assert_eq!((lo, hi), (0.0, 4.0));
    }

    #[test]
    fn interval_rejects_empty_goods() {
        assert!(matches!(median_valid_interval(&[], 3, 3, 1), Err(Error::NoGoodValues)));
    }

    #[test]
    fn undersized_senate_is_rejected() {
        let senators: Vec<SenatorSpec> = (0..6).map(|i| good(i, i as f64)).collect();
        let r = run_agreement(&senators, &AgreementParams { fault_budget: 2 }, &mut seeded(1));
        assert!(matches!(r, Err(Error::FaultBudget { k: 6, t: 2 })));
    }

    #[test]
    fn unanimous_value_decides_that_value() {
        let senators: Vec<SenatorSpec> = (0..4).map(|i| good(i, 2.5)).collect();
        let t = run_agreement(&senators, &AgreementParams { fault_budget: 1 }, &mut seeded(2))
            .unwrap();
        assert_eq!(t.decisions.len(), 4);
        for (_, v) in &t.decisions {
            assert_eq!(*v, 2.5);
        }
    }

    #[test]
    fn no_faults_decides_the_exact_median_of_goods() {
        let senators =
            vec![good(0, -0.4), good(1, 0.1), good(2, 0.9), good(3, -0.2), good(4, 0.5)];
        let t = run_agreement(&senators, &AgreementParams { fault_budget: 1 }, &mut seeded(3))
            .unwrap();
        // goods sorted: -0.4, -0.2, 0.1, 0.5, 0.9 → median 0.1
        for (_, v) in &t.decisions {
            assert_relative_eq!(*v, 0.1);
        }
    }

    #[test]
    fn transcript_has_exactly_budget_plus_one_rounds() {
        for t in 0..4usize {
            let k = 3 * t + 1;
            let senators: Vec<SenatorSpec> = (0..k as u64).map(|i| good(i, i as f64)).collect();
            let tr = run_agreement(&senators, &AgreementParams { fault_budget: t }, &mut seeded(4))
                .unwrap();
            assert_eq!(tr.rounds.len(), t + 1);
        }
    }

    /// Exhaustive sweep over strategies, faulty placements and seeds for the
    /// smallest interesting senate: every decision must agree across goods
    /// and land in the median-valid interval.
    #[test]
    fn four_senators_one_fault_all_strategies_stay_valid() {
        let strategies = [
            BaStrategy::ExtremeValue(100.0),
            BaStrategy::Silent,
            BaStrategy::RandomVote { lo: -50.0, hi: 50.0 },
        ];
        for strategy in strategies {
            for faulty_seat in 0..4usize {
                for seed in 0..50u64 {
                    let mut rng = seeded(900 + seed);
                    let mut values = Vec::new();
                    let senators: Vec<SenatorSpec> = (0..4u64)
                        .map(|i| {
                            if i as usize == faulty_seat {
                                faulty(i, strategy)
                            } else {
                                use rand::Rng;
                                let v = rng.random_range(-1.0..1.0);
                                values.push(v);
                                good(i, v)
                            }
                        })
                        .collect();
                    let tr = run_agreement(
                        &senators,
                        &AgreementParams { fault_budget: 1 },
                        &mut seeded(7000 + seed),
                    )
                    .unwrap();
                    values.sort_by(|a, b| a.total_cmp(b));
                    let (lo, hi) = median_valid_interval(&values, 4, 1, 1).unwrap();
                    assert_eq!(tr.decisions.len(), 3);
                    let first = tr.decisions[0].1;
                    for (_, v) in &tr.decisions {
                        assert_eq!(*v, first, "goods disagreed");
                        assert!(
                            *v >= lo && *v <= hi,
                            "decision {v} outside [{lo},{hi}] for {strategy:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn seven_senators_two_extremists_decide_within_the_goods() {
        for seed in 0..200u64 {
            use rand::Rng;
            let mut rng = seeded(31_000 + seed);
            let mut values: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let senators: Vec<SenatorSpec> = (0..7u64)
                .map(|i| {
                    if i < 5 {
                        good(i, values[i as usize])
                    } else {
                        faulty(i, BaStrategy::ExtremeValue(100.0))
                    }
                })
                .collect();
            let tr = run_agreement(
                &senators,
                &AgreementParams { fault_budget: 2 },
                &mut seeded(43_000 + seed),
            )
            .unwrap();
            values.sort_by(|a, b| a.total_cmp(b));
            let (lo, hi) = median_valid_interval(&values, 7, 2, 2).unwrap();
            for (_, v) in &tr.decisions {
                assert!(*v >= lo && *v <= hi);
            }
        }
    }

    #[test]
    fn silent_senators_shrink_the_received_multiset() {
        let senators = vec![
            good(0, 1.0),
            good(1, 2.0),
            good(2, 3.0),
            faulty(3, BaStrategy::Silent),
        ];
        let tr = run_agreement(&senators, &AgreementParams { fault_budget: 1 }, &mut seeded(6))
            .unwrap();
        assert_eq!(tr.setup_broadcasts.iter().flatten().count(), 3);
        // R = [1,2,3], t = 1 → A = [2,2], proposal = 2.
        assert_eq!(tr.acceptable, Some((2.0, 2.0)));
        assert_eq!(tr.initial_proposal, Some(2.0));
        for (_, v) in &tr.decisions {
            assert_eq!(*v, 2.0);
        }
    }

    #[test]
    fn majority_broadcast_wins() {
        let broadcasts: Vec<Option<f64>> =
            vec![Some(5.0); 5].into_iter().chain(vec![Some(9.0); 2]).collect();
        assert_eq!(finalize_network(&broadcasts), Some(5.0));
    }

    #[test]
    fn tie_breaks_to_the_smallest_value() {
        let broadcasts = vec![
            Some(1.0),
            Some(1.0),
            Some(1.0),
            Some(2.0),
            Some(2.0),
            Some(2.0),
            None,
        ];
        assert_eq!(finalize_network(&broadcasts), Some(1.0));
    }

    #[test]
    fn zero_broadcasts_fail_consensus() {
        assert_eq!(finalize_network(&[None, None]), None);
    }
}
