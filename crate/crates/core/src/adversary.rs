//! Malicious robot behaviour: how they move and what trust vectors they
//! disclose when a legitimate robot asks for one.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::markov::{sample_step, TransitionMatrix};
use crate::topology::{SiteGraph, SiteId};
use crate::trust::{RobotId, TrustVector};

/// Public information an adversary may use when choosing its next site.
#[derive(Debug, Clone, Copy)]
pub struct WorldSnapshot<'a> {
    pub graph: &'a SiteGraph,
    pub kernel: &'a TransitionMatrix,
    /// Positions at the start of the current step.
    pub positions: &'a [SiteId],
}

pub trait MovementPolicy: Send + Sync {
    fn next_site(
        &self,
        robot: RobotId,
        current: SiteId,
        world: &WorldSnapshot<'_>,
        rng: &mut dyn RngCore,
    ) -> SiteId;
}

pub trait DisclosurePolicy: Send + Sync {
    fn vector(&self, ground_truth: &[bool], self_id: RobotId, rng: &mut dyn RngCore) -> TrustVector;
}

#[derive(Clone)]
pub enum Movement {
    /// Same lazy walk as legitimate robots (one draw per step).
    LazyWalk,
    /// Heads to the site along a shortest path, then stays (no draws).
    Stationary(SiteId),
    /// Follows the target robot along a shortest path (no draws).
    Shadow(RobotId),
    Custom(Arc<dyn MovementPolicy>),
}

#[derive(Clone)]
pub enum Disclosure {
    /// Claims every legitimate robot is malicious and every malicious one
    /// legitimate, itself included.
    InvertTruth,
    /// Distrusts every legitimate robot and vouches for every malicious one.
    AllDistrustLegit,
    /// Each bit is 1 independently with the given probability.
    Random(f64),
    Custom(Arc<dyn DisclosurePolicy>),
}

impl fmt::Debug for Movement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string())
    }
}

impl fmt::Debug for Disclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string())
    }
}

impl fmt::Display for Movement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Movement::LazyWalk => write!(f, "lazy_walk"),
            Movement::Stationary(s) => write!(f, "stationary:{s}"),
            Movement::Shadow(r) => write!(f, "shadow:{r}"),
            Movement::Custom(_) => write!(f, "custom"),
        }
    }
}

impl fmt::Display for Disclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Disclosure::InvertTruth => write!(f, "invert_truth"),
            Disclosure::AllDistrustLegit => write!(f, "all_distrust_legit"),
            Disclosure::Random(p) => write!(f, "random:{p}"),
            Disclosure::Custom(_) => write!(f, "custom"),
        }
    }
}

fn split_arg(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((name, arg)) => (name.trim(), Some(arg.trim())),
        None => (s.trim(), None),
    }
}

impl FromStr for Movement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown adversary movement {s:?}"));
        match split_arg(s) {
            ("lazy_walk", None) => Ok(Movement::LazyWalk),
            ("stationary", Some(a)) => a.parse().map(Movement::Stationary).map_err(|_| bad()),
            ("shadow", Some(a)) => a.parse().map(Movement::Shadow).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl FromStr for Disclosure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown adversary disclosure {s:?}"));
        match split_arg(s) {
            ("invert_truth", None) => Ok(Disclosure::InvertTruth),
            ("all_distrust_legit", None) => Ok(Disclosure::AllDistrustLegit),
            ("random", Some(a)) => {
                let p: f64 = a.parse().map_err(|_| bad())?;
                if (0.0..=1.0).contains(&p) {
                    Ok(Disclosure::Random(p))
                } else {
                    Err(bad())
                }
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdversaryStrategy {
    pub movement: Movement,
    pub disclosure: Disclosure,
}

impl Default for AdversaryStrategy {
    fn default() -> Self {
        AdversaryStrategy {
            movement: Movement::LazyWalk,
            disclosure: Disclosure::InvertTruth,
        }
    }
}

impl AdversaryStrategy {
    /// Whether `fabricate_vector` consumes randomness.
    pub fn disclosure_is_random(&self) -> bool {
        !matches!(
            self.disclosure,
            Disclosure::InvertTruth | Disclosure::AllDistrustLegit
        )
    }
}

/// Next site of a malicious robot. The engine rejects any result that is
/// neither the current site nor adjacent to it.
pub fn adversary_move<R: RngCore>(
    strategy: &AdversaryStrategy,
    robot: RobotId,
    current: SiteId,
    world: &WorldSnapshot<'_>,
    rng: &mut R,
) -> SiteId {
    match &strategy.movement {
        Movement::LazyWalk => sample_step(world.kernel, current, rng),
        Movement::Stationary(site) => world.graph.next_hop_towards(current, *site),
        Movement::Shadow(target) => {
            let goal = world.positions.get(*target).copied().unwrap_or(current);
            world.graph.next_hop_towards(current, goal)
        }
        Movement::Custom(policy) => policy.next_site(robot, current, world, rng),
    }
}

/// The vector a malicious robot hands over in place of an honest interim
/// vector.
pub fn fabricate_vector<R: RngCore>(
    strategy: &AdversaryStrategy,
    ground_truth: &[bool],
    self_id: RobotId,
    rng: &mut R,
) -> TrustVector {
    match &strategy.disclosure {
        Disclosure::InvertTruth | Disclosure::AllDistrustLegit => {
            ground_truth.iter().map(|&legit| !legit).collect()
        }
        Disclosure::Random(p) => ground_truth.iter().map(|_| rng.gen::<f64>() < *p).collect(),
        Disclosure::Custom(policy) => policy.vector(ground_truth, self_id, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::lazy_transition_matrix;
    use crate::topology::{grid, line};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stationary_stays_put() {
        let g = grid(3, 3).unwrap();
        let p = lazy_transition_matrix(&g);
        let positions = [4, 0];
        let world = WorldSnapshot { graph: &g, kernel: &p, positions: &positions };
        let s = AdversaryStrategy { movement: Movement::Stationary(4), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(adversary_move(&s, 0, 4, &world, &mut rng), 4);
        }
        // from elsewhere it walks there one hop at a time
        assert_eq!(adversary_move(&s, 0, 0, &world, &mut rng), 1);
        assert_eq!(adversary_move(&s, 0, 1, &world, &mut rng), 4);
    }

    #[test]
    fn lazy_walk_matches_kernel() {
        let g = line(2).unwrap();
        let p = lazy_transition_matrix(&g);
        let positions = [0];
        let world = WorldSnapshot { graph: &g, kernel: &p, positions: &positions };
        let s = AdversaryStrategy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let stays = (0..n)
            .filter(|_| adversary_move(&s, 0, 0, &world, &mut rng) == 0)
            .count();
        assert!((stays as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn shadow_follows_target() {
        let g = grid(3, 3).unwrap();
        let p = lazy_transition_matrix(&g);
        let s = AdversaryStrategy { movement: Movement::Shadow(1), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let positions = [4, 4];
        let world = WorldSnapshot { graph: &g, kernel: &p, positions: &positions };
        assert_eq!(adversary_move(&s, 0, 4, &world, &mut rng), 4);
        let positions = [0, 8];
        let world = WorldSnapshot { graph: &g, kernel: &p, positions: &positions };
        assert_eq!(adversary_move(&s, 0, 0, &world, &mut rng), 1);
    }

    #[test]
    fn fabricated_vectors() {
        let truth = [true, true, false, false];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let inv = AdversaryStrategy::default();
        assert_eq!(fabricate_vector(&inv, &truth, 2, &mut rng), vec![false, false, true, true]);
        let all = AdversaryStrategy { disclosure: Disclosure::AllDistrustLegit, ..Default::default() };
        assert_eq!(fabricate_vector(&all, &truth, 3, &mut rng), vec![false, false, true, true]);
        let zero = AdversaryStrategy { disclosure: Disclosure::Random(0.0), ..Default::default() };
        assert_eq!(fabricate_vector(&zero, &truth, 2, &mut rng), vec![false; 4]);
        let one = AdversaryStrategy { disclosure: Disclosure::Random(1.0), ..Default::default() };
        assert_eq!(fabricate_vector(&one, &truth, 2, &mut rng), vec![true; 4]);
    }

    #[test]
    fn invert_truth_votes_are_always_wrong_about_legit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for mask in 0u32..64 {
            let truth: Vec<bool> = (0..6).map(|b| mask >> b & 1 == 1).collect();
            let v = fabricate_vector(&AdversaryStrategy::default(), &truth, 0, &mut rng);
            for (k, &legit) in truth.iter().enumerate() {
                if legit {
                    assert!(!v[k]);
                }
            }
        }
    }

    #[test]
    fn parse_names() {
        assert!(matches!("lazy_walk".parse::<Movement>().unwrap(), Movement::LazyWalk));
        assert!(matches!("stationary:3".parse::<Movement>().unwrap(), Movement::Stationary(3)));
        assert!(matches!("shadow: 1".parse::<Movement>().unwrap(), Movement::Shadow(1)));
        assert!("teleport".parse::<Movement>().is_err());
        assert!(matches!("random:0.25".parse::<Disclosure>().unwrap(), Disclosure::Random(p) if p == 0.25));
        assert!("random:2".parse::<Disclosure>().is_err());
        for s in ["invert_truth", "all_distrust_legit", "random:0.5"] {
            assert_eq!(s.parse::<Disclosure>().unwrap().to_string(), s);
        }
    }
}
