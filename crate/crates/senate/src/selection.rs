//! Phase 2 — senator selection: distance feedback, symmetry verification,
//! robust coordinate generation with seesaw eviction, K-means clustering and
//! the election itself.

use rand::Rng;

use crate::adversary::{apply_offset, pseudonym_offsets, AttackProfile};
use crate::config::RangingModel;
use crate::error::{Error, Result};
use crate::geometry::{classical_mds, gram_from_edm, CoordinateSet, Edm};
use crate::rng::Prng;
use crate::sortition::SortitionOutcome;
use crate::world::{estimate_distance, true_distance, NodeTruth};

/// Everything the candidates feed back after the pilot exchange: plain
/// reported distances (row = reporter) and the squared-distance matrix built
/// from them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackTable {
    pub reports: Vec<Vec<f64>>,
    pub edm: Edm,
}

/// Simulate pilot measurement plus feedback for every seated candidate.
///
/// A good candidate reports its measurements as they are. A shouting
/// candidate delays its pilot *and* inflates its reports by the same offset,
/// so the tampered matrix stays symmetric; with `asymmetric_lie` the pilots
/// stay honest and only the reports are inflated, which the symmetry check
/// can see. Pseudonyms report from their owner's physical position plus
/// their per-seat offset.
pub fn collect_feedback(
    outcome: &SortitionOutcome,
    world: &[NodeTruth],
    ranging: &RangingModel,
    profile: &AttackProfile,
    rng: &mut Prng,
) -> FeedbackTable {
    let seats = &outcome.seats;
    let s = seats.len();

    // Offset ladder per faulty owner, drawn once in id order.
    let mut ladders: Vec<Option<Vec<f64>>> = vec![None; world.len()];
    for node in world.iter().filter(|n| n.is_faulty) {
        ladders[node.id.0] = Some(pseudonym_offsets(node, profile, rng));
    }
    let seat_offset = |seat_idx: usize| -> f64 {
        let seat = &seats[seat_idx];
        match &ladders[seat.owner.0] {
            Some(l) => l[seat.pseudonym_index.min(l.len() - 1)],
            None => 0.0,
        }
    };

    let mut reports = vec![vec![0.0; s]; s];
    for i in 0..s {
        let off_i = seat_offset(i);
        for j in 0..s {
            if i == j {
                continue;
            }
            let d = true_distance(&world[seats[i].owner.0], &world[seats[j].owner.0]);
            // Pilot of j as heard by i; the pilot carries j's forgery unless
            // the liar keeps its pilot honest.
            let pilot_off = if profile.asymmetric_lie { 0.0 } else { seat_offset(j) };
            let heard = apply_offset(d, pilot_off, profile.shout_style);
            let measured = estimate_distance(heard, ranging, rng);
            reports[i][j] = apply_offset(measured, off_i, profile.shout_style);
        }
    }

    let mut entries = Vec::with_capacity(s * s);
    for row in &reports {
        for &d in row {
            entries.push(d * d);
        }
    }
    FeedbackTable { edm: Edm::from_entries(s, entries), reports }
}

/// Cross-check the squared-distance matrix against its transpose: whenever
/// `|D̂²_ij − D̂²_ji| ≥ ε` both directions are flagged invalid — there is no
/// way to tell which endpoint lied. The diagonal is untouched.
pub fn symmetry_verify(edm: &Edm, tolerance: f64) -> Edm {
    let mut out = edm.clone();
    let n = edm.size();
    for i in 0..n {
        for j in (i + 1)..n {
            if (edm.get(i, j) - edm.get(j, i)).abs() >= tolerance {
                out.invalidate(i, j);
                out.invalidate(j, i);
            }
        }
    }
    out
}

/// Knobs of the robust embedding loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WncParams {
    /// Step size applied to each pair force.
    pub step: f64,
    /// Local-error blending rate in (0, 1].
    pub error_blend: f64,
    /// Evict when the worst error exceeds this multiple of the mean.
    pub removal_factor: f64,
    pub max_rounds: usize,
    pub sweeps_per_round: usize,
}

impl From<&crate::config::ScenarioConfig> for WncParams {
    fn from(cfg: &crate::config::ScenarioConfig) -> Self {
        WncParams {
            step: cfg.wnc_step,
            error_blend: cfg.wnc_error_blend,
            removal_factor: cfg.removal_factor,
            max_rounds: cfg.max_wnc_rounds,
            sweeps_per_round: cfg.wnc_sweeps_per_round,
        }
    }
}

/// Local errors never blend below this level. With exact distances the raw
/// relative errors decay to numerical dust spread over many orders of
/// magnitude, where the max-to-mean eviction ratio is meaningless; 1e-4 is
/// far below any fit error that matters.
const ERROR_FLOOR: f64 = 1e-4;

/// One traced embedding state, per candidate per round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WncTraceRow {
    pub round: usize,
    pub candidate: usize,
    pub x: f64,
    pub y: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WncOutcome {
    /// Candidate indices that survived, ascending.
    pub survivors: Vec<usize>,
    /// Embedding of the survivors, aligned with `survivors`.
    pub coords: CoordinateSet,
    /// Candidate indices evicted by the seesaw test, in eviction order.
    pub removed: Vec<usize>,
    /// True when the loop settled (no eviction triggered) before the round
    /// cap.
    pub terminated: bool,
    pub rounds: usize,
    pub trace: Vec<WncTraceRow>,
}

/// Robust coordinate generation with seesaw eviction.
///
/// Rounds sweep all valid ordered pairs in row-major order. For pair (i, j)
/// the relative error `r = (‖x_i−x_j‖ − d̂_ij)/d̂_ij` blends into candidate
/// i's local error with weight `w = e_i/(e_i+e_j)` — a well-fitted candidate
/// barely listens to a badly-fitted one — and x_i moves by
/// `γ·w·(d̂_ij − ‖x_i−x_j‖)` along the line through x_j: pushed away when
/// the estimate exceeds the prediction, pulled closer when it falls short.
/// After each round the candidate with the largest error is evicted if it
/// exceeds `β·mean(e)`; otherwise the loop terminates — residual error that
/// is evenly spread comes from ranging noise, not from a forger.
pub fn robust_wnc(edm: &Edm, params: &WncParams, rng: &mut Prng) -> Result<WncOutcome> {
    let s0 = edm.size();
    if s0 < 3 {
        return Err(Error::DegenerateGeometry(s0));
    }

    // Plain distances; invalid and zero entries never drive an update.
    let mut usable = false;
    let mut scale: f64 = 0.0;
    let mut dist = vec![f64::NAN; s0 * s0];
    for i in 0..s0 {
        for j in 0..s0 {
            if i != j && edm.is_valid(i, j) && edm.get(i, j) > 0.0 {
                let d = edm.get(i, j).sqrt();
                dist[i * s0 + j] = d;
                scale = scale.max(d);
                usable = true;
            }
        }
    }
    if !usable {
        return Err(Error::NoData);
    }

    // A near-coincident start lets the expansion phase fold the layout and a
    // fold never relaxes away, so seed the positions from classical scaling
    // of the reported matrix when it is complete. The relaxation then only
    // has to refine (and expose forgers, whose misfit no planar start can
    // hide). Incomplete matrices fall back to a random spread at the data's
    // own scale.
    let mds_init = gram_from_edm(edm, 0)
        .ok()
        .map(|gram| classical_mds(&gram, 2).points);
    let mut pos: Vec<[f64; 2]> = match mds_init {
        Some(points) => points.iter().map(|p| [p[0], p[1]]).collect(),
        None => {
            let half = 0.5 * scale;
            (0..s0)
                .map(|_| [rng.random_range(-half..half), rng.random_range(-half..half)])
                .collect()
        }
    };
    let mut err = vec![1.0f64; s0];
    let mut alive = vec![true; s0];
    let mut alive_count = s0;
    let mut removed = Vec::new();
    let mut trace = Vec::new();
    let mut terminated = false;
    let mut rounds = 0;

    for round in 1..=params.max_rounds {
        rounds = round;
        for _ in 0..params.sweeps_per_round {
            for i in 0..s0 {
                if !alive[i] {
                    continue;
                }
                for j in 0..s0 {
                    if i == j || !alive[j] {
                        continue;
                    }
                    let d = dist[i * s0 + j];
                    if !d.is_finite() {
                        continue;
                    }
                    let mut ux = pos[i][0] - pos[j][0];
                    let mut uy = pos[i][1] - pos[j][1];
                    let norm = (ux * ux + uy * uy).sqrt();
                    if norm > 1e-12 {
                        ux /= norm;
                        uy /= norm;
                    } else {
                        let angle = rng.random_range(0.0..std::f64::consts::TAU);
                        ux = angle.cos();
                        uy = angle.sin();
                    }
                    let rel = (norm - d) / d;
                    let w = err[i] / (err[i] + err[j]);
                    err[i] = (rel.abs() * params.error_blend * w
                        + (1.0 - params.error_blend * w) * err[i])
                        .max(ERROR_FLOOR);
                    let pull = params.step * w * (d - norm);
                    pos[i][0] += pull * ux;
                    pos[i][1] += pull * uy;
                }
            }
        }

        for i in 0..s0 {
            if alive[i] {
                trace.push(WncTraceRow {
                    round,
                    candidate: i,
                    x: pos[i][0],
                    y: pos[i][1],
                    error: err[i],
                });
            }
        }

        let (mut worst, mut worst_err, mut sum) = (usize::MAX, f64::NEG_INFINITY, 0.0);
        for i in 0..s0 {
            if alive[i] {
                sum += err[i];
                if err[i] > worst_err {
                    worst_err = err[i];
                    worst = i;
                }
            }
        }
        let mean = sum / alive_count as f64;
        if worst_err > params.removal_factor * mean {
            if alive_count - 1 < 3 {
                return Err(Error::DegenerateGeometry(alive_count - 1));
            }
            alive[worst] = false;
            alive_count -= 1;
            removed.push(worst);
        } else {
            terminated = true;
            break;
        }
    }

    let survivors: Vec<usize> = (0..s0).filter(|&i| alive[i]).collect();
    let coords = CoordinateSet {
        points: survivors.iter().map(|&i| pos[i]).collect(),
        local_error: survivors.iter().map(|&i| err[i]).collect(),
    };
    Ok(WncOutcome { survivors, coords, removed, terminated, rounds, trace })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansOutcome {
    pub assignments: Vec<usize>,
    pub centroids: Vec<[f64; 2]>,
}

fn d2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Lloyd iterations from distance-weighted seeding, until the assignments
/// stabilize or 100 iterations pass. An empty cluster is reseeded to the
/// point currently farthest from its own centroid.
pub fn kmeans(points: &[[f64; 2]], k: usize, rng: &mut Prng) -> Result<KmeansOutcome> {
    let n = points.len();
    if n < k || k == 0 {
        return Err(Error::Quorum { points: n, clusters: k });
    }

    // Seeding: first centroid uniform, the rest weighted by squared distance
    // to the nearest chosen one.
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first]];
    let mut best = vec![f64::INFINITY; n];
    while centroids.len() < k {
        let last = *centroids.last().unwrap();
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            best[i] = best[i].min(d2(*p, last));
            total += best[i];
        }
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &w) in best.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // All remaining mass sits on chosen points (duplicates); take the
            // first fresh index.
            (0..n).find(|&i| !chosen[i]).unwrap()
        };
        chosen[pick] = true;
        centroids.push(points[pick]);
    }

    let mut assignments = vec![0usize; n];
    for _ in 0..100 {
        let mut next = vec![0usize; n];
        for (i, p) in points.iter().enumerate() {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let dd = d2(*p, *centroid);
                if dd < best_d {
                    best_d = dd;
                    best_c = c;
                }
            }
            next[i] = best_c;
        }

        // Reseed empty clusters from the farthest point.
        loop {
            let mut counts = vec![0usize; k];
            for &a in &next {
                counts[a] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let farthest = (0..n)
                .filter(|&i| counts[next[i]] > 1)
                .max_by(|&a, &b| {
                    d2(points[a], centroids[next[a]])
                        .partial_cmp(&d2(points[b], centroids[next[b]]))
                        .unwrap()
                        .then(b.cmp(&a))
                })
                .expect("some cluster has at least two points when another is empty");
            next[farthest] = empty;
        }

        let stable = next == assignments;
        assignments = next;
        for c in 0..k {
            let mut sum = [0.0, 0.0];
            let mut count = 0usize;
            for (i, p) in points.iter().enumerate() {
                if assignments[i] == c {
                    sum[0] += p[0];
                    sum[1] += p[1];
                    count += 1;
                }
            }
            if count > 0 {
                centroids[c] = [sum[0] / count as f64, sum[1] / count as f64];
            }
        }
        if stable {
            break;
        }
    }

    Ok(KmeansOutcome { assignments, centroids })
}

/// Total within-cluster squared distance.
pub fn kmeans_cost(points: &[[f64; 2]], outcome: &KmeansOutcome) -> f64 {
    points
        .iter()
        .zip(&outcome.assignments)
        .map(|(p, &a)| d2(*p, outcome.centroids[a]))
        .sum()
}

/// The elected senate: one representative per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SenateRoster {
    /// Candidate indices of the elected senators, one per cluster in cluster
    /// order. Empty when the senate is invalid.
    pub senators: Vec<usize>,
    pub assignments: Vec<usize>,
    /// True iff exactly K senators were drawn from K distinct clusters.
    pub valid_senate: bool,
}

impl SenateRoster {
    /// Fewer surviving candidates than clusters: no quorum.
    pub fn quorum_failure(n_candidates: usize) -> Self {
        SenateRoster {
            senators: Vec::new(),
            assignments: vec![0; n_candidates],
            valid_senate: false,
        }
    }
}

/// Elect the candidate nearest its cluster centroid, per cluster; ties break
/// to the lowest candidate index (candidates arrive in seat order).
pub fn elect_senators(points: &[[f64; 2]], clustering: &KmeansOutcome) -> SenateRoster {
    let k = clustering.centroids.len();
    if points.len() < k {
        return SenateRoster::quorum_failure(points.len());
    }
    let mut senators = Vec::with_capacity(k);
    for c in 0..k {
        let mut best: Option<usize> = None;
        let mut best_d = f64::INFINITY;
        for (i, p) in points.iter().enumerate() {
            if clustering.assignments[i] != c {
                continue;
            }
            let dd = d2(*p, clustering.centroids[c]);
            if dd < best_d {
                best_d = dd;
                best = Some(i);
            }
        }
        match best {
            Some(i) => senators.push(i),
            None => return SenateRoster {
                senators: Vec::new(),
                assignments: clustering.assignments.clone(),
                valid_senate: false,
            },
        }
    }
    SenateRoster { senators, assignments: clustering.assignments.clone(), valid_senate: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{BaAttack, ShoutCoordination, ShoutStyle};
    use crate::config::ScenarioConfig;
    use crate::geometry::edm_from_coords;
    use crate::rng::seeded;
    use crate::sortition::{run_aloha, run_chorus};
    use crate::world::spawn_world;
    use approx::assert_relative_eq;

    fn default_wnc() -> WncParams {
        WncParams {
            step: 0.05,
            error_blend: 0.5,
            removal_factor: 3.0,
            max_rounds: 200,
            sweeps_per_round: 20,
        }
    }

    /// A seated world with no lottery: every node takes one seat in id order.
    fn seat_everyone(world: &[NodeTruth]) -> SortitionOutcome {
        SortitionOutcome {
            seats: world
                .iter()
                .map(|n| crate::sortition::Seat { owner: n.id, pseudonym_index: 0 })
                .collect(),
            slots_elapsed: 0,
            reports: Vec::new(),
        }
    }

    fn shout_profile(offset: f64) -> AttackProfile {
        AttackProfile {
            chorus_always_transmit: false,
            sybil_seats: 1,
            shout_offset: offset,
            shout_style: ShoutStyle::Additive,
            shout_coordination: ShoutCoordination::Shared,
            asymmetric_lie: false,
            ba_strategy: BaAttack::Honest,
        }
    }

    #[test]
    fn all_good_perfect_feedback_is_the_true_edm() {
        let mut cfg = ScenarioConfig::default();
        cfg.n_nodes = 8;
        cfg.n_faulty = 0;
        let world = spawn_world(&cfg, &mut seeded(1)).unwrap();
        let table = collect_feedback(
            &seat_everyone(&world),
            &world,
            &RangingModel::Perfect,
            &AttackProfile::disabled(),
            &mut seeded(2),
        );
        let truth = edm_from_coords(&world.iter().map(|n| n.position).collect::<Vec<_>>());
        for i in 0..8 {
            for j in 0..8 {
                assert_relative_eq!(table.edm.get(i, j), truth.get(i, j), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn shout_attacker_inflates_row_and_column_symmetrically() {
        let mut cfg = ScenarioConfig::default();
        cfg.n_nodes = 6;
        cfg.n_faulty = 1;
        let world = spawn_world(&cfg, &mut seeded(3)).unwrap();
        let attacker = world.iter().position(|n| n.is_faulty).unwrap();
        let delta = 40.0;
        let table = collect_feedback(
            &seat_everyone(&world),
            &world,
            &RangingModel::Perfect,
            &shout_profile(delta),
            &mut seeded(4),
        );
        for j in 0..6 {
            if j == attacker {
                continue;
            }
            let d = true_distance(&world[attacker], &world[j]);
            let expect = (d + delta) * (d + delta);
            assert_relative_eq!(table.edm.get(attacker, j), expect, epsilon = 1e-9);
            assert_relative_eq!(table.edm.get(j, attacker), expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn asymmetric_liar_breaks_symmetry_by_the_expected_residual() {
        let mut cfg = ScenarioConfig::default();
        cfg.n_nodes = 5;
        cfg.n_faulty = 1;
        let world = spawn_world(&cfg, &mut seeded(5)).unwrap();
        let liar = world.iter().position(|n| n.is_faulty).unwrap();
        let delta = 25.0;
        let mut profile = shout_profile(delta);
        profile.asymmetric_lie = true;
        let table = collect_feedback(
            &seat_everyone(&world),
            &world,
            &RangingModel::Perfect,
            &profile,
            &mut seeded(6),
        );
        for j in 0..5 {
            if j == liar {
                continue;
            }
            let d = true_distance(&world[liar], &world[j]);
            let residual = (table.edm.get(liar, j) - table.edm.get(j, liar)).abs();
            assert_relative_eq!(residual, ((d + delta).powi(2) - d * d).abs(), epsilon = 1e-9);
        }
    }

    #[test]
    fn symmetry_verify_keeps_a_symmetric_matrix_intact() {
        let edm = edm_from_coords(&[[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]);
        let checked = symmetry_verify(&edm, 5.0);
        assert!(checked.is_complete());
        assert_eq!(checked, symmetry_verify(&checked, 5.0));
    }

    #[test]
    fn symmetry_verify_flags_both_directions() {
        let mut edm = edm_from_coords(&[[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]]);
        edm.set(0, 1, 25.0);
        edm.set(1, 0, 36.0);
        let checked = symmetry_verify(&edm, 5.0);
        assert!(!checked.is_valid(0, 1));
        assert!(!checked.is_valid(1, 0));
        assert!(checked.is_valid(0, 2));
    }

    #[test]
    fn symmetry_verify_keeps_disagreement_under_tolerance() {
        let mut edm = edm_from_coords(&[[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]]);
        edm.set(0, 1, 25.0);
        edm.set(1, 0, 26.0);
        let checked = symmetry_verify(&edm, 5.0);
        assert!(checked.is_complete());
    }

    #[test]
    fn exact_triangle_embeds_within_one_percent() {
        let edm = edm_from_coords(&[[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]);
        let out = robust_wnc(&edm, &default_wnc(), &mut seeded(8)).unwrap();
        assert!(out.terminated);
        assert!(out.removed.is_empty());
        let p = &out.coords.points;
        for (i, j, want) in [(0usize, 1usize, 3.0f64), (0, 2, 4.0), (1, 2, 5.0)] {
            let dx = p[i][0] - p[j][0];
            let dy = p[i][1] - p[j][1];
            let got = (dx * dx + dy * dy).sqrt();
            assert!((got - want).abs() / want < 0.01, "pair ({i},{j}): {got} vs {want}");
        }
    }

    #[test]
    fn all_good_exact_edm_terminates_without_evictions() {
        let mut rng = seeded(9);
        for trial in 0..10 {
            let points: Vec<[f64; 2]> = (0..20)
                .map(|_| [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)])
                .collect();
            let edm = edm_from_coords(&points);
            let out = robust_wnc(&edm, &default_wnc(), &mut seeded(100 + trial)).unwrap();
            assert!(out.terminated, "trial {trial} hit the round cap");
            assert!(out.removed.is_empty(), "trial {trial} evicted {:?}", out.removed);
        }
    }

    #[test]
    fn shout_attacker_is_the_one_evicted() {
        // One forger among 20 honest candidates; its seesaw error dominates.
        let mut hits = 0;
        for seed in 0..20u64 {
            let mut rng = seeded(200 + seed);
            let mut points: Vec<[f64; 2]> = (0..21)
                .map(|_| [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)])
                .collect();
            points.truncate(21);
            let mut edm = edm_from_coords(&points);
            let attacker = 7usize;
            let delta = 100.0;
            for j in 0..21 {
                if j != attacker {
                    let d = edm.get(attacker, j).sqrt() + delta;
                    edm.set(attacker, j, d * d);
                    edm.set(j, attacker, d * d);
                }
            }
            let out = robust_wnc(&edm, &default_wnc(), &mut seeded(300 + seed)).unwrap();
            if out.removed == vec![attacker] {
                hits += 1;
            }
        }
        assert!(hits >= 18, "attacker evicted cleanly in only {hits}/20 runs");
    }

    #[test]
    fn eviction_below_three_candidates_is_degenerate() {
        // Three candidates whose matrix is wildly inconsistent, checked with
        // an eviction factor low enough to fire at this size (with three
        // candidates max/mean never exceeds 3): the first eviction would
        // drop below three.
        let mut edm = edm_from_coords(&[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]);
        edm.set(0, 1, 1e6);
        edm.set(1, 0, 1e6);
        let params = WncParams { removal_factor: 1.3, ..default_wnc() };
        let r = robust_wnc(&edm, &params, &mut seeded(4));
        match r {
            Err(Error::DegenerateGeometry(_)) => {}
            other => panic!("expected degenerate geometry, got {other:?}"),
        }
    }

    #[test]
    fn fully_invalid_matrix_is_no_data() {
        let mut edm = edm_from_coords(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    edm.invalidate(i, j);
                }
            }
        }
        assert!(matches!(robust_wnc(&edm, &default_wnc(), &mut seeded(1)), Err(Error::NoData)));
    }

    #[test]
    fn candidate_set_only_shrinks() {
        let mut rng = seeded(77);
        let mut points: Vec<[f64; 2]> =
            (0..15).map(|_| [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)]).collect();
        points[3] = [500.0, 500.0]; // plant an outlier-ish point, still consistent
        let mut edm = edm_from_coords(&points);
        for j in 0..15 {
            if j != 5 {
                let d = edm.get(5, j).sqrt() + 120.0;
                edm.set(5, j, d * d);
                edm.set(j, 5, d * d);
            }
        }
        let out = robust_wnc(&edm, &default_wnc(), &mut seeded(78)).unwrap();
        let mut all: Vec<usize> = out.survivors.clone();
        all.extend(&out.removed);
        all.sort_unstable();
        assert_eq!(all, (0..15).collect::<Vec<_>>());
    }

    #[test]
    fn kmeans_with_k_equal_points_gives_singletons() {
        let points: Vec<[f64; 2]> = (0..5).map(|i| [i as f64 * 10.0, 0.0]).collect();
        let out = kmeans(&points, 5, &mut seeded(1)).unwrap();
        let mut clusters: Vec<usize> = out.assignments.clone();
        clusters.sort_unstable();
        clusters.dedup();
        assert_eq!(clusters.len(), 5);
        assert!(kmeans_cost(&points, &out) < 1e-12);
    }

    #[test]
    fn kmeans_separates_two_far_blobs() {
        let mut rng = seeded(2);
        let mut points = Vec::new();
        for _ in 0..10 {
            points.push([rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)]);
        }
        for _ in 0..10 {
            points.push([100.0 + rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)]);
        }
        let out = kmeans(&points, 2, &mut seeded(3)).unwrap();
        let first = out.assignments[0];
        assert!(out.assignments[..10].iter().all(|&a| a == first));
        assert!(out.assignments[10..].iter().all(|&a| a != first));
    }

    #[test]
    fn kmeans_beats_the_median_of_random_restarts() {
        let mut rng = seeded(4);
        let points: Vec<[f64; 2]> =
            (0..50).map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)]).collect();
        let ours = kmeans_cost(&points, &kmeans(&points, 7, &mut seeded(5)).unwrap());

        // Restart oracle: Lloyd from plain random seeds, 100 restarts.
        let mut costs = Vec::new();
        for restart in 0..100u64 {
            let mut r = seeded(1000 + restart);
            let mut idx: Vec<usize> = (0..50).collect();
            for i in 0..7 {
                let j = r.random_range(i..50);
                idx.swap(i, j);
            }
            let mut centroids: Vec<[f64; 2]> = idx[..7].iter().map(|&i| points[i]).collect();
            let mut assignments = vec![0usize; 50];
            for _ in 0..100 {
                let mut next = vec![0usize; 50];
                for (i, p) in points.iter().enumerate() {
                    next[i] = (0..7)
                        .min_by(|&a, &b| {
                            d2(*p, centroids[a]).partial_cmp(&d2(*p, centroids[b])).unwrap()
                        })
                        .unwrap();
                }
                let done = next == assignments;
                assignments = next;
                for c in 0..7 {
                    let members: Vec<&[f64; 2]> = points
                        .iter()
                        .zip(&assignments)
                        .filter(|(_, &a)| a == c)
                        .map(|(p, _)| p)
                        .collect();
                    if !members.is_empty() {
                        let n = members.len() as f64;
                        centroids[c] = [
                            members.iter().map(|p| p[0]).sum::<f64>() / n,
                            members.iter().map(|p| p[1]).sum::<f64>() / n,
                        ];
                    }
                }
                if done {
                    break;
                }
            }
            let cost: f64 =
                points.iter().zip(&assignments).map(|(p, &a)| d2(*p, centroids[a])).sum();
            costs.push(cost);
        }
        costs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = costs[costs.len() / 2];
        assert!(ours <= median, "kmeans cost {ours} above restart median {median}");
    }

    #[test]
    fn kmeans_rejects_too_few_points() {
        let points = vec![[0.0, 0.0], [1.0, 1.0]];
        assert!(matches!(kmeans(&points, 3, &mut seeded(1)), Err(Error::Quorum { .. })));
    }

    #[test]
    fn singleton_clusters_elect_themselves() {
        let points: Vec<[f64; 2]> = (0..4).map(|i| [i as f64 * 50.0, 0.0]).collect();
        let clustering = kmeans(&points, 4, &mut seeded(6)).unwrap();
        let roster = elect_senators(&points, &clustering);
        assert!(roster.valid_senate);
        let mut senators = roster.senators.clone();
        senators.sort_unstable();
        assert_eq!(senators, vec![0, 1, 2, 3]);
    }

    #[test]
    fn coincident_sybil_pair_yields_at_most_one_senator() {
        let mut rng = seeded(7);
        let mut points: Vec<[f64; 2]> =
            (0..20).map(|_| [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)]).collect();
        points.push(points[4]); // the pseudonym twin of candidate 4
        let clustering = kmeans(&points, 7, &mut seeded(8)).unwrap();
        assert_eq!(clustering.assignments[4], clustering.assignments[20]);
        let roster = elect_senators(&points, &clustering);
        let both = roster.senators.contains(&4) && roster.senators.contains(&20);
        assert!(!both, "both pseudonyms elected: {:?}", roster.senators);
    }

    #[test]
    fn election_is_invariant_under_rigid_motion() {
        let mut rng = seeded(9);
        let points: Vec<[f64; 2]> =
            (0..30).map(|_| [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)]).collect();
        let clustering = kmeans(&points, 5, &mut seeded(10)).unwrap();
        let roster = elect_senators(&points, &clustering);

        let (s, c) = (0.6f64.sin(), 0.6f64.cos());
        let moved: Vec<[f64; 2]> = points
            .iter()
            .map(|p| [c * p[0] - s * p[1] + 31.0, s * p[0] + c * p[1] - 17.0])
            .collect();
        let clustering2 = kmeans(&moved, 5, &mut seeded(10)).unwrap();
        let roster2 = elect_senators(&moved, &clustering2);
        assert_eq!(roster.assignments, roster2.assignments);
        assert_eq!(roster.senators, roster2.senators);
    }

    #[test]
    fn pipeline_quorum_failure_marks_senate_invalid() {
        let roster = SenateRoster::quorum_failure(4);
        assert!(!roster.valid_senate);
        assert!(roster.senators.is_empty());
    }

    #[test]
    fn sortition_pilots_feed_every_candidate_pair() {
        // Two nodes, two seats: after feedback each candidate holds an
        // estimate of the other.
        let mut cfg = ScenarioConfig::default();
        cfg.n_nodes = 2;
        cfg.n_faulty = 0;
        let world = spawn_world(&cfg, &mut seeded(11)).unwrap();
        let profile = AttackProfile::disabled();
        let reports = run_chorus(&world, 10, &profile, &mut seeded(12));
        let outcome = run_aloha(&world, &reports, 2, 0.3, 100_000, &mut seeded(13)).unwrap();
        let table = collect_feedback(
            &outcome,
            &world,
            &RangingModel::Perfect,
            &profile,
            &mut seeded(14),
        );
        let d = true_distance(&world[0], &world[1]);
        assert_relative_eq!(table.reports[0][1], d, epsilon = 1e-12);
        assert_relative_eq!(table.reports[1][0], d, epsilon = 1e-12);
    }
}
