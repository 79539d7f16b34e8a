//! Episode orchestration, experiment sweeps, validity scoring and CSV
//! emission.
//!
//! One episode runs the full pipeline: spawn → chorus → lottery → distance
//! feedback → symmetry check → robust embedding → clustering → election →
//! agreement → network broadcast. Phase failures become failure reasons on
//! the result, never aborts. Everything is a pure function of
//! `(config, seed)`; sweep episodes run on `seed + index` and aggregate in
//! index order, so worker count never changes the output.

use std::io::Write;

use rayon::prelude::*;

use crate::adversary::ba_emit;
use crate::agreement::{
    finalize_network, median_valid_interval, run_agreement, AgreementParams, AgreementTranscript,
    SenatorBehavior, SenatorSpec,
};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::selection::{
    collect_feedback, elect_senators, kmeans, robust_wnc, symmetry_verify, SenateRoster,
    WncParams, WncTraceRow,
};
use crate::sortition::{default_slot_cap, run_aloha, run_chorus};
use crate::world::spawn_world;

/// Why an episode produced no decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    /// The lottery ran out of slots before filling the candidate quota.
    SortitionTimeout,
    /// Fewer surviving candidates than senate seats.
    Quorum,
    /// Seesaw evictions left fewer than three candidates.
    DegenerateGeometry,
    /// Every distance entry was flagged invalid.
    NoFeedbackData,
    /// No senator broadcast a decision.
    NoBroadcast,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FailureReason::SortitionTimeout => "sortition-timeout",
            FailureReason::Quorum => "quorum",
            FailureReason::DegenerateGeometry => "degenerate-geometry",
            FailureReason::NoFeedbackData => "no-feedback-data",
            FailureReason::NoBroadcast => "no-broadcast",
        };
        f.write_str(s)
    }
}

/// Full per-episode outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub seed: u64,
    /// `(owner node index, pseudonym index)` per candidate seat, in seating
    /// order. Empty for baseline episodes.
    pub seats: Vec<(usize, usize)>,
    /// Candidate seats held by faulty owners (baseline: faulty identities).
    pub sybil_seats: usize,
    pub distinct_owners: usize,
    /// Seat indices evicted by the seesaw test, in eviction order.
    pub removed: Vec<usize>,
    /// Seat indices of the elected senators.
    pub senators: Vec<usize>,
    pub valid_senate: bool,
    pub faulty_senators: usize,
    /// The network-adopted value, when consensus completed.
    pub decision: Option<f64>,
    /// Populated exactly when there is no decision.
    pub failure: Option<FailureReason>,
    /// All good nodes ended up holding the same value.
    pub agreement_ok: bool,
    /// The decision lies in the median-valid interval of the good
    /// participants' initial values at the design fault budget.
    pub median_valid: bool,
    pub slots_elapsed: u64,
    pub wnc_rounds: usize,
}

/// Episode result plus the traces the CLI can dump.
#[derive(Debug, Clone)]
pub struct EpisodeDetail {
    pub result: EpisodeResult,
    pub wnc_trace: Vec<WncTraceRow>,
    pub transcript: Option<AgreementTranscript>,
}

fn failed(seed: u64, reason: FailureReason) -> EpisodeResult {
    EpisodeResult {
        seed,
        seats: Vec::new(),
        sybil_seats: 0,
        distinct_owners: 0,
        removed: Vec::new(),
        senators: Vec::new(),
        valid_senate: false,
        faulty_senators: 0,
        decision: None,
        failure: Some(reason),
        agreement_ok: false,
        median_valid: false,
        slots_elapsed: 0,
        wnc_rounds: 0,
    }
}

/// Run one full episode.
pub fn run_episode(config: &ScenarioConfig, seed: u64) -> Result<EpisodeResult> {
    run_episode_detailed(config, seed).map(|d| d.result)
}

/// Run one full episode, keeping the embedding trace and the agreement
/// transcript.
pub fn run_episode_detailed(config: &ScenarioConfig, seed: u64) -> Result<EpisodeDetail> {
    config.validate()?;
    let mut rng = seeded(seed);
    let world = spawn_world(config, &mut rng)?;
    let profile = &config.attack;

    let reports = run_chorus(&world, config.chorus_slots, profile, &mut rng);
    let cap = config.aloha_slot_cap.unwrap_or_else(|| {
        default_slot_cap(&world, &reports, config.n_candidates, config.tx_cost)
    });
    let sortition = match run_aloha(
        &world,
        &reports,
        config.n_candidates,
        config.tx_cost,
        cap,
        &mut rng,
    ) {
        Ok(o) => o,
        Err(Error::SortitionTimeout(_)) => {
            return Ok(EpisodeDetail {
                result: failed(seed, FailureReason::SortitionTimeout),
                wnc_trace: Vec::new(),
                transcript: None,
            })
        }
        Err(e) => return Err(e),
    };

    let seats: Vec<(usize, usize)> =
        sortition.seats.iter().map(|s| (s.owner.0, s.pseudonym_index)).collect();
    let sybil_seats = sortition.faulty_seats(&world);
    let distinct_owners = sortition.distinct_owners();
    let slots_elapsed = sortition.slots_elapsed;

    let feedback = collect_feedback(&sortition, &world, &config.ranging, profile, &mut rng);
    let checked = symmetry_verify(&feedback.edm, config.symmetry_tol);

    let base = EpisodeResult {
        seed,
        seats: seats.clone(),
        sybil_seats,
        distinct_owners,
        removed: Vec::new(),
        senators: Vec::new(),
        valid_senate: false,
        faulty_senators: 0,
        decision: None,
        failure: None,
        agreement_ok: false,
        median_valid: false,
        slots_elapsed,
        wnc_rounds: 0,
    };

    let wnc = match robust_wnc(&checked, &WncParams::from(config), &mut rng) {
        Ok(w) => w,
        Err(Error::DegenerateGeometry(_)) => {
            return Ok(EpisodeDetail {
                result: EpisodeResult {
                    failure: Some(FailureReason::DegenerateGeometry),
                    ..base
                },
                wnc_trace: Vec::new(),
                transcript: None,
            })
        }
        Err(Error::NoData) => {
            return Ok(EpisodeDetail {
                result: EpisodeResult { failure: Some(FailureReason::NoFeedbackData), ..base },
                wnc_trace: Vec::new(),
                transcript: None,
            })
        }
        Err(e) => return Err(e),
    };
    let removed: Vec<usize> = wnc.removed.clone();

    // Quorum: enough survivors to fill every cluster.
    if wnc.survivors.len() < config.n_senators {
        return Ok(EpisodeDetail {
            result: EpisodeResult {
                removed,
                wnc_rounds: wnc.rounds,
                failure: Some(FailureReason::Quorum),
                ..base
            },
            wnc_trace: wnc.trace,
            transcript: None,
        });
    }

    let clustering = kmeans(&wnc.coords.points, config.n_senators, &mut rng)?;
    let roster: SenateRoster = elect_senators(&wnc.coords.points, &clustering);
    if !roster.valid_senate {
        return Ok(EpisodeDetail {
            result: EpisodeResult {
                removed,
                wnc_rounds: wnc.rounds,
                failure: Some(FailureReason::Quorum),
                ..base
            },
            wnc_trace: wnc.trace,
            transcript: None,
        });
    }
    // Map survivor-domain senators back to candidate seats.
    let senators: Vec<usize> = roster.senators.iter().map(|&i| wnc.survivors[i]).collect();

    let specs: Vec<SenatorSpec> = senators
        .iter()
        .map(|&seat| {
            let owner = &world[sortition.seats[seat].owner.0];
            let behavior = if owner.is_faulty {
                match profile.ba_strategy.resolve(owner.initial_value) {
                    Some(strategy) => SenatorBehavior::Faulty { strategy },
                    None => SenatorBehavior::Good { value: owner.initial_value },
                }
            } else {
                SenatorBehavior::Good { value: owner.initial_value }
            };
            SenatorSpec { id: seat as u64, behavior }
        })
        .collect();
    let faulty_senators = senators
        .iter()
        .filter(|&&seat| world[sortition.seats[seat].owner.0].is_faulty)
        .count();

    let params = AgreementParams { fault_budget: config.agreement_fault_budget };
    let transcript = run_agreement(&specs, &params, &mut rng)?;

    // Every senator broadcasts a final value; good nodes adopt the majority.
    let broadcasts: Vec<Option<f64>> = specs
        .iter()
        .map(|s| match &s.behavior {
            SenatorBehavior::Good { .. } => {
                transcript.decisions.iter().find(|(id, _)| *id == s.id).map(|(_, v)| *v)
            }
            SenatorBehavior::Faulty { strategy } => ba_emit(strategy, &mut rng),
        })
        .collect();
    let decision = finalize_network(&broadcasts);

    let goods_agree = transcript.decisions.windows(2).all(|w| w[0].1 == w[1].1);
    let agreement_ok = decision.is_some() && goods_agree;

    let mut good_values: Vec<f64> = senators
        .iter()
        .filter_map(|&seat| {
            let owner = &world[sortition.seats[seat].owner.0];
            (!owner.is_faulty).then_some(owner.initial_value)
        })
        .collect();
    good_values.sort_by(|a, b| a.total_cmp(b));
    let median_valid = match (decision, good_values.is_empty()) {
        (Some(d), false) => {
            let (lo, hi) = median_valid_interval(
                &good_values,
                senators.len(),
                faulty_senators,
                config.agreement_fault_budget,
            )?;
            agreement_ok && d >= lo && d <= hi
        }
        _ => false,
    };

    Ok(EpisodeDetail {
        result: EpisodeResult {
            seed,
            seats,
            sybil_seats,
            distinct_owners,
            removed,
            senators,
            valid_senate: true,
            faulty_senators,
            decision,
            failure: if decision.is_none() { Some(FailureReason::NoBroadcast) } else { None },
            agreement_ok,
            median_valid,
            slots_elapsed,
            wnc_rounds: wnc.rounds,
        },
        wnc_trace: wnc.trace,
        transcript: Some(transcript),
    })
}

/// One baseline episode: skip sortition and selection entirely and run the
/// agreement over every node directly (each faulty node contributing its
/// pseudonym identities when `sybil` is on). The fault budget is the largest
/// the instance supports, `⌊(k−1)/3⌋`.
pub fn run_baseline_episode(
    config: &ScenarioConfig,
    seed: u64,
    sybil: bool,
) -> Result<EpisodeResult> {
    config.validate()?;
    let mut rng = seeded(seed);
    let world = spawn_world(config, &mut rng)?;
    let profile = &config.attack;

    let mut specs = Vec::new();
    let mut good_values = Vec::new();
    for node in &world {
        let copies = if node.is_faulty && sybil { profile.sybil_seats } else { 1 };
        let behavior = if node.is_faulty {
            match profile.ba_strategy.resolve(node.initial_value) {
                Some(strategy) => SenatorBehavior::Faulty { strategy },
                None => SenatorBehavior::Good { value: node.initial_value },
            }
        } else {
            good_values.push(node.initial_value);
            SenatorBehavior::Good { value: node.initial_value }
        };
        for _ in 0..copies {
            specs.push(SenatorSpec { id: specs.len() as u64, behavior: clone_behavior(&behavior) });
        }
    }
    let k = specs.len();
    let faulty_identities = world
        .iter()
        .map(|n| if n.is_faulty { if sybil { profile.sybil_seats } else { 1 } } else { 0 })
        .sum::<usize>();
    let budget = (k - 1) / 3;

    let transcript = run_agreement(&specs, &AgreementParams { fault_budget: budget }, &mut rng)?;
    let broadcasts: Vec<Option<f64>> = specs
        .iter()
        .map(|s| match &s.behavior {
            SenatorBehavior::Good { .. } => {
                transcript.decisions.iter().find(|(id, _)| *id == s.id).map(|(_, v)| *v)
            }
            SenatorBehavior::Faulty { strategy } => ba_emit(strategy, &mut rng),
        })
        .collect();
    let decision = finalize_network(&broadcasts);
    let goods_agree = transcript.decisions.windows(2).all(|w| w[0].1 == w[1].1);
    let agreement_ok = decision.is_some() && goods_agree;

    good_values.sort_by(|a, b| a.total_cmp(b));
    let median_valid = match (decision, good_values.is_empty()) {
        (Some(d), false) => {
            let (lo, hi) = median_valid_interval(&good_values, k, faulty_identities, budget)?;
            agreement_ok && d >= lo && d <= hi
        }
        _ => false,
    };

    Ok(EpisodeResult {
        seed,
        seats: Vec::new(),
        sybil_seats: faulty_identities,
        distinct_owners: world.len(),
        removed: Vec::new(),
        senators: Vec::new(),
        valid_senate: true,
        faulty_senators: faulty_identities,
        decision,
        failure: if decision.is_none() { Some(FailureReason::NoBroadcast) } else { None },
        agreement_ok,
        median_valid,
        slots_elapsed: 0,
        wnc_rounds: 0,
    })
}

fn clone_behavior(b: &SenatorBehavior) -> SenatorBehavior {
    b.clone()
}

/// One aggregated sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub faulty_count: usize,
    pub episodes: usize,
    pub consensus_rate: f64,
    pub valid_rate: f64,
    pub mean_sybil_seats: f64,
    pub mean_faulty_senators: f64,
    pub baseline: bool,
    pub seed: u64,
}

fn aggregate(
    faulty_count: usize,
    results: &[EpisodeResult],
    baseline: bool,
    seed: u64,
) -> SweepRow {
    let n = results.len() as f64;
    SweepRow {
        faulty_count,
        episodes: results.len(),
        consensus_rate: results.iter().filter(|r| r.agreement_ok).count() as f64 / n,
        valid_rate: results.iter().filter(|r| r.median_valid).count() as f64 / n,
        mean_sybil_seats: results.iter().map(|r| r.sybil_seats as f64).sum::<f64>() / n,
        mean_faulty_senators: results.iter().map(|r| r.faulty_senators as f64).sum::<f64>() / n,
        baseline,
        seed,
    }
}

/// Run `episodes` episodes per faulty count. Episodes are independent and
/// run in parallel; results merge in episode order.
pub fn run_sweep(
    config: &ScenarioConfig,
    faulty_counts: &[usize],
    episodes: usize,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(faulty_counts.len());
    for &f in faulty_counts {
        let mut cfg = config.clone();
        cfg.n_faulty = f;
        cfg.validate()?;
        let results: Vec<EpisodeResult> = (0..episodes)
            .into_par_iter()
            .map(|i| run_episode(&cfg, config.seed + i as u64))
            .collect::<Result<_>>()?;
        rows.push(aggregate(f, &results, false, config.seed));
    }
    Ok(rows)
}

/// The comparison arm: direct agreement among all nodes, no sortition or
/// selection. `sybil` switches the pseudonym identities on (the sanity arm
/// showing why Sybil resistance matters) or off (the reference curve).
pub fn run_baseline(
    config: &ScenarioConfig,
    faulty_counts: &[usize],
    episodes: usize,
    sybil: bool,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(faulty_counts.len());
    for &f in faulty_counts {
        let mut cfg = config.clone();
        cfg.n_faulty = f;
        cfg.validate()?;
        let results: Vec<EpisodeResult> = (0..episodes)
            .into_par_iter()
            .map(|i| run_baseline_episode(&cfg, config.seed + i as u64, sybil))
            .collect::<Result<_>>()?;
        rows.push(aggregate(f, &results, true, config.seed));
    }
    Ok(rows)
}

/// Fixed, versioned CSV schema.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "schema=1")?;
    writeln!(
        out,
        "faulty_count,episodes,consensus_rate,valid_rate,mean_sybil_seats,mean_faulty_senators,baseline,seed"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            r.faulty_count,
            r.episodes,
            r.consensus_rate,
            r.valid_rate,
            r.mean_sybil_seats,
            r.mean_faulty_senators,
            r.baseline as u8,
            r.seed
        )?;
    }
    Ok(())
}

/// Sweep straight into CSV bytes (reproducibility checks compare these).
pub fn sweep_csv(config: &ScenarioConfig, faulty_counts: &[usize], episodes: usize) -> Result<Vec<u8>> {
    let rows = run_sweep(config, faulty_counts, episodes)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    Ok(buf)
}
