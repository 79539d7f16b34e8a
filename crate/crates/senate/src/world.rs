//! Ground-truth world state and ranging-error models.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{RangingModel, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rng::{fork, Prng};

/// Opaque node ordinal; doubles as the deterministic tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Ground truth for one node. Immutable after spawn; the protocol itself
/// never reads `is_faulty` or `pseudonym_budget` — only the simulator does.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTruth {
    pub id: NodeId,
    /// Position in the deployment square, meters.
    pub position: [f64; 2],
    pub is_faulty: bool,
    /// The value this node wants consensus to reflect.
    pub initial_value: f64,
    /// Candidate seats this node will try to occupy (0 for good nodes).
    pub pseudonym_budget: usize,
}

/// Euclidean ground-truth distance between two nodes.
pub fn true_distance(a: &NodeTruth, b: &NodeTruth) -> f64 {
    let dx = a.position[0] - b.position[0];
    let dy = a.position[1] - b.position[1];
    (dx * dx + dy * dy).sqrt()
}

/// One ranging measurement of a true distance `d` under the given model.
///
/// Time-of-arrival adds Gaussian noise (clamped at zero — a negative
/// distance breaks every downstream square root); signal-strength ranging
/// multiplies by a log-normal factor, so a zero distance stays zero.
pub fn estimate_distance(d: f64, model: &RangingModel, rng: &mut Prng) -> f64 {
    debug_assert!(d >= 0.0);
    match model {
        RangingModel::Perfect => d,
        RangingModel::Toa { additive_std } => {
            let z: f64 = rng.sample(StandardNormal);
            (d + additive_std * z).max(0.0)
        }
        RangingModel::Rss { mult_log_std } => {
            let z: f64 = rng.sample(StandardNormal);
            d * (mult_log_std * z).exp()
        }
    }
}

/// Generate the ground-truth population for one episode.
///
/// Positions are uniform in the deployment square; good values are uniform
/// on the good range, faulty values on the faulty range. The faulty subset
/// is drawn from a forked sub-stream so that toggling `n_faulty` leaves the
/// position/value draws untouched.
pub fn spawn_world(config: &ScenarioConfig, rng: &mut Prng) -> Result<Vec<NodeTruth>> {
    if config.n_faulty > config.n_nodes {
        return Err(Error::Config(format!(
            "n_faulty ({}) exceeds n_nodes ({})",
            config.n_faulty, config.n_nodes
        )));
    }
    let mut pick = fork(rng);
    let mut faulty = vec![false; config.n_nodes];
    for idx in rand::seq::index::sample(&mut pick, config.n_nodes, config.n_faulty) {
        faulty[idx] = true;
    }

    let mut nodes = Vec::with_capacity(config.n_nodes);
    for i in 0..config.n_nodes {
        let x = rng.random_range(0.0..=config.area_side);
        let y = rng.random_range(0.0..=config.area_side);
        let range = if faulty[i] {
            config.faulty_values
        } else {
            config.good_values
        };
        let value = rng.random_range(range.0..=range.1);
        nodes.push(NodeTruth {
            id: NodeId(i),
            position: [x, y],
            is_faulty: faulty[i],
            initial_value: value,
            pseudonym_budget: if faulty[i] { config.attack.sybil_seats } else { 0 },
        });
    }
    Ok(nodes)
}
