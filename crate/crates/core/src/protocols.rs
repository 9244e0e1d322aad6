//! Parameter calculators, majority fusion, and the two classification
//! protocols: individual observation and two-phase crowd vetting.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::engine::{success_check, Mode, RunRecord, Team, World};
use crate::error::{Error, Result};
use crate::markov::TransitionMatrix;
use crate::topology::SiteGraph;
use crate::trust::{ObservationModel, RobotId, TrustVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Individual,
    Dcv,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::Individual => "individual",
            ProtocolKind::Dcv => "dcv",
        })
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "individual" => Ok(ProtocolKind::Individual),
            "dcv" => Ok(ProtocolKind::Dcv),
            _ => Err(Error::InvalidConfig(format!("unknown protocol {s:?}"))),
        }
    }
}

/// Proportions bounding the four coverage/misclassification properties that
/// make majority fusion correct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rho {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
}

impl Default for Rho {
    fn default() -> Self {
        Rho {
            r1: 0.1,
            r2: 0.2,
            r3: 0.2,
            r4: 0.1,
        }
    }
}

impl Rho {
    /// `1 > 3 r2 + r3 + r4`, the fusion correctness condition.
    pub fn fusion_condition(&self) -> Result<bool> {
        let parts = [self.r1, self.r2, self.r3, self.r4];
        if parts.iter().any(|&r| !(r >= 0.0)) {
            return Err(Error::ParameterDomain(format!(
                "rho components must be non-negative, got {parts:?}"
            )));
        }
        Ok(1.0 > 3.0 * self.r2 + self.r3 + self.r4)
    }
}

/// Which term of the crowd-vetting window was smaller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauBranch {
    HittingTime,
    MeetingTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub protocol: ProtocolKind,
    pub delta: f64,
    pub epsilon_alpha: f64,
    pub n_robots: usize,
    pub n_legit: Option<usize>,
    pub rho: Rho,
    /// Observation threshold the protocol runs with.
    pub n_alpha: usize,
    /// Individual window, in time-steps.
    pub tau_ind: usize,
    /// Crowd-vetting per-phase window, in time-steps.
    pub tau: usize,
    pub q: Option<f64>,
    pub f: Option<f64>,
    /// Unrounded hitting-branch observation count `8 ln(1/q) / (r1 eps^2)`.
    pub n_alpha_hit: Option<f64>,
    pub branch: Option<TauBranch>,
    pub tau_hit_term: Option<f64>,
    pub tau_meet_term: Option<f64>,
}

impl ProtocolParams {
    /// Length of the observation window actually simulated.
    pub fn window(&self) -> usize {
        match self.protocol {
            ProtocolKind::Individual => self.tau_ind,
            ProtocolKind::Dcv => self.tau,
        }
    }

    /// Full guarantee horizon: one window for the individual protocol, two
    /// phases for crowd vetting.
    pub fn total_steps(&self) -> usize {
        match self.protocol {
            ProtocolKind::Individual => self.tau_ind,
            ProtocolKind::Dcv => 2 * self.tau,
        }
    }

    /// Hand-set parameters for experiments that bypass the closed forms.
    pub fn explicit(
        protocol: ProtocolKind,
        n_robots: usize,
        epsilon_alpha: f64,
        n_alpha: usize,
        window: usize,
    ) -> Self {
        ProtocolParams {
            protocol,
            delta: f64::NAN,
            epsilon_alpha,
            n_robots,
            n_legit: None,
            rho: Rho::default(),
            n_alpha,
            tau_ind: window,
            tau: window,
            q: None,
            f: None,
            n_alpha_hit: None,
            branch: None,
            tau_hit_term: None,
            tau_meet_term: None,
        }
    }
}

fn check_common(n_robots: usize, delta: f64, epsilon_alpha: f64) -> Result<()> {
    if n_robots == 0 {
        return Err(Error::ParameterDomain("team must have at least one robot".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ParameterDomain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(epsilon_alpha > 0.0 && epsilon_alpha <= 0.5) {
        return Err(Error::ParameterDomain(format!(
            "epsilon_alpha must lie in (0, 1/2], got {epsilon_alpha}"
        )));
    }
    Ok(())
}

fn ceil_window(x: f64) -> usize {
    (x.ceil() as usize).max(1)
}

/// `n_alpha = ln(2N^3/delta) / (2 eps^2)` and
/// `tau_ind = 4 ln(2N^3/delta) / eps^2 * T_meet`, both rounded up; the
/// window is floored at one step.
pub fn individual_params(
    n_robots: usize,
    delta: f64,
    epsilon_alpha: f64,
    t_meet: f64,
) -> Result<ProtocolParams> {
    check_common(n_robots, delta, epsilon_alpha)?;
    if !(t_meet >= 0.0) {
        return Err(Error::ParameterDomain(format!("T_meet must be >= 0, got {t_meet}")));
    }
    let n = n_robots as f64;
    let log_term = (2.0 * n.powi(3) / delta).ln();
    let eps2 = epsilon_alpha * epsilon_alpha;
    let n_alpha = (log_term / (2.0 * eps2)).ceil() as usize;
    let tau_ind = ceil_window(4.0 * log_term / eps2 * t_meet);
    Ok(ProtocolParams {
        protocol: ProtocolKind::Individual,
        delta,
        epsilon_alpha,
        n_robots,
        n_legit: None,
        rho: Rho::default(),
        n_alpha: n_alpha.max(1),
        tau_ind,
        tau: tau_ind,
        q: None,
        f: None,
        n_alpha_hit: None,
        branch: None,
        tau_hit_term: None,
        tau_meet_term: None,
    })
}

/// Crowd-vetting parameters:
///
/// * `q = delta r1 / e^(2e) * |L| / N`
/// * `n_alpha_hit = 8 / (r1 eps^2) * ln(1/q)`
/// * `f = 26 / (1 - 1/e)^2 * n_alpha_hit`
/// * `tau = ceil(min(f T_hit, 4 ln(4N^3/delta) / eps^2 * T_meet))`
///
/// The operative threshold follows the branch: `ceil(n_alpha_hit)` when the
/// hitting-time term is the minimum, otherwise `ceil(ln(4N^3/delta) /
/// (2 eps^2))`, the count the meeting-time window is sized for.
pub fn dcv_params(
    n_robots: usize,
    n_legit: usize,
    delta: f64,
    epsilon_alpha: f64,
    t_hit: f64,
    t_meet: f64,
    rho: Rho,
) -> Result<ProtocolParams> {
    check_common(n_robots, delta, epsilon_alpha)?;
    if n_legit == 0 || n_legit > n_robots {
        return Err(Error::ParameterDomain(format!(
            "need 1 <= |L| <= N, got |L|={n_legit}, N={n_robots}"
        )));
    }
    if !rho.fusion_condition()? {
        return Err(Error::ParameterDomain(format!(
            "rho violates 1 > 3 r2 + r3 + r4: {rho:?}"
        )));
    }
    if !(rho.r1 > 0.0) {
        return Err(Error::ParameterDomain("r1 must be positive".into()));
    }
    if !(t_hit >= 0.0 && t_meet >= 0.0) {
        return Err(Error::ParameterDomain("hitting and meeting times must be >= 0".into()));
    }
    let n = n_robots as f64;
    let eps2 = epsilon_alpha * epsilon_alpha;
    let q = delta * rho.r1 / (2.0 * E).exp() * (n_legit as f64 / n);
    assert!(q < 1.0, "q = {q} must be below 1 for valid inputs");
    let n_alpha_hit = 8.0 / (rho.r1 * eps2) * (1.0 / q).ln();
    let f = 26.0 / (1.0 - 1.0 / E).powi(2) * n_alpha_hit;
    let meet_log = (4.0 * n.powi(3) / delta).ln();
    let hit_term = f * t_hit;
    let meet_term = 4.0 * meet_log / eps2 * t_meet;
    let (branch, raw_tau, n_alpha) = if hit_term <= meet_term {
        (TauBranch::HittingTime, hit_term, n_alpha_hit.ceil())
    } else {
        (TauBranch::MeetingTime, meet_term, (meet_log / (2.0 * eps2)).ceil())
    };
    let tau = ceil_window(raw_tau);
    Ok(ProtocolParams {
        protocol: ProtocolKind::Dcv,
        delta,
        epsilon_alpha,
        n_robots,
        n_legit: Some(n_legit),
        rho,
        n_alpha: (n_alpha as usize).max(1),
        tau_ind: tau,
        tau,
        q: Some(q),
        f: Some(f),
        n_alpha_hit: Some(n_alpha_hit),
        branch: Some(branch),
        tau_hit_term: Some(hit_term),
        tau_meet_term: Some(meet_term),
    })
}

/// Robots whose vectors the owner collected and currently trusts, plus the
/// owner itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustedNeighborhood {
    pub owner: RobotId,
    pub members: BTreeSet<RobotId>,
    pub collected_vectors: BTreeMap<RobotId, TrustVector>,
    /// Phase-2 encounters per member, for diagnostics.
    pub encounters: BTreeMap<RobotId, u32>,
}

impl TrustedNeighborhood {
    pub fn new(owner: RobotId, own_vector: TrustVector) -> Self {
        let mut collected_vectors = BTreeMap::new();
        collected_vectors.insert(owner, own_vector);
        TrustedNeighborhood {
            owner,
            members: BTreeSet::from([owner]),
            collected_vectors,
            encounters: BTreeMap::new(),
        }
    }

    /// Adds a member's vector; the first copy wins.
    pub fn insert(&mut self, member: RobotId, vector: TrustVector) {
        *self.encounters.entry(member).or_default() += 1;
        if self.members.insert(member) {
            self.collected_vectors.insert(member, vector);
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Majority rule over the trusted neighborhood: entry `k` is 1 iff at least
/// half of the members vote 1 for `k`. Ties trust. The owner's vote is
/// `own_vector`, and its entry for itself is always 1.
///
/// With `exclude_subject_vote`, a member's vote about itself is left out.
pub fn fuse_majority(
    own_vector: &[bool],
    neighborhood: &TrustedNeighborhood,
    exclude_subject_vote: bool,
) -> Result<TrustVector> {
    let n = own_vector.len();
    let mut tally = vec![0usize; n];
    let mut voters = 0usize;
    for &m in &neighborhood.members {
        let v: &[bool] = if m == neighborhood.owner {
            own_vector
        } else {
            neighborhood
                .collected_vectors
                .get(&m)
                .ok_or(Error::UnknownRobot { id: m, n_robots: n })?
        };
        if v.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: v.len(),
            });
        }
        voters += 1;
        for (t, &b) in tally.iter_mut().zip(v) {
            *t += usize::from(b);
        }
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (mut yes, mut total) = (tally[k], voters);
        if exclude_subject_vote && neighborhood.members.contains(&k) {
            let self_vote = if k == neighborhood.owner {
                own_vector[k]
            } else {
                neighborhood.collected_vectors[&k][k]
            };
            yes -= usize::from(self_vote);
            total -= 1;
        }
        out.push(2 * yes >= total);
    }
    if neighborhood.owner < n {
        out[neighborhood.owner] = true;
    }
    Ok(out)
}

/// How phase 1 and phase 2 of crowd vetting are laid out in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcvSchedule {
    /// Observe for `tau` steps, freeze interim vectors, then exchange for
    /// `tau` more.
    TwoPhase,
    /// Observation and exchange run together from the first step; robots
    /// hand over their current interim vector and receivers keep the latest
    /// copy.
    Pipelined,
}

impl fmt::Display for DcvSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DcvSchedule::TwoPhase => "two_phase",
            DcvSchedule::Pipelined => "pipelined",
        })
    }
}

impl FromStr for DcvSchedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_phase" => Ok(DcvSchedule::TwoPhase),
            "pipelined" => Ok(DcvSchedule::Pipelined),
            _ => Err(Error::InvalidConfig(format!("unknown dcv schedule {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub mode: Mode,
    pub schedule: DcvSchedule,
    pub exclude_subject_vote: bool,
    /// Keep the per-step co-location log in the record.
    pub record_meetings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mode: Mode::Fixed,
            schedule: DcvSchedule::TwoPhase,
            exclude_subject_vote: false,
            record_meetings: true,
        }
    }
}

/// Static inputs shared by every run on one topology.
#[derive(Debug, Clone, Copy)]
pub struct Environment<'a> {
    pub graph: &'a SiteGraph,
    pub kernel: &'a TransitionMatrix,
    pub model: &'a ObservationModel,
}

/// Individual protocol: every robot walks and observes co-located teammates
/// for `tau_ind` steps (fixed mode) or until every legitimate robot's
/// interim vector matches ground truth (until-correct mode), then classifies
/// from its own ledger.
pub fn run_individual<R: RngCore>(
    env: Environment<'_>,
    params: &ProtocolParams,
    team: &Team,
    rng: &mut R,
    options: &RunOptions,
) -> Result<RunRecord> {
    let mut world = World::new(env, team, params.n_alpha, options.record_meetings, rng)?;
    let mut record = world.start_record(ProtocolKind::Individual, params, options);
    let limit = match options.mode {
        Mode::Fixed => params.tau_ind,
        Mode::UntilCorrect { cap } => cap,
    };
    let mut first_correct = world.individual_all_correct().then_some(0);
    while world.time() < limit {
        if first_correct.is_some() && options.mode != Mode::Fixed {
            break;
        }
        world.advance(rng)?;
        world.observe(rng)?;
        if first_correct.is_none() && world.individual_all_correct() {
            first_correct = Some(world.time());
        }
    }
    let vectors = world.interim_vectors();
    if options.mode != Mode::Fixed {
        debug_assert_eq!(
            first_correct.is_some(),
            success_check(&vectors, team.ground_truth()).unwrap_or(false)
        );
    }
    world.finish_record(&mut record, first_correct, vectors, None);
    Ok(record)
}

/// Crowd vetting. With the two-phase schedule: phase 1 is the individual
/// protocol for `tau` steps, after which interim vectors are frozen; during
/// the next `tau` steps each robot collects the frozen vector of every
/// co-located robot it trusts (malicious robots hand over fabricated ones)
/// and finally fuses them by majority. In until-correct mode phase 2 keeps
/// going past `2 tau` until the fused vectors are all correct or the cap is
/// hit.
pub fn run_dcv<R: RngCore>(
    env: Environment<'_>,
    params: &ProtocolParams,
    team: &Team,
    rng: &mut R,
    options: &RunOptions,
) -> Result<RunRecord> {
    let mut world = World::new(env, team, params.n_alpha, options.record_meetings, rng)?;
    let mut record = world.start_record(ProtocolKind::Dcv, params, options);
    let (phase1, limit) = match (options.schedule, options.mode) {
        (DcvSchedule::TwoPhase, Mode::Fixed) => (params.tau, 2 * params.tau),
        (DcvSchedule::TwoPhase, Mode::UntilCorrect { cap }) => (params.tau, cap),
        (DcvSchedule::Pipelined, Mode::Fixed) => (0, params.tau),
        (DcvSchedule::Pipelined, Mode::UntilCorrect { cap }) => (0, cap),
    };
    let pipelined = options.schedule == DcvSchedule::Pipelined;
    let stop_early = options.mode != Mode::Fixed;
    let mut first_correct = None;

    if pipelined {
        world.begin_exchange(true, options.exclude_subject_vote);
        if world.fused_all_correct() {
            first_correct = Some(0);
        }
    } else {
        while world.time() < phase1.min(limit) {
            world.advance(rng)?;
            world.observe(rng)?;
        }
        record.phase_boundaries.push(world.time());
        world.begin_exchange(false, options.exclude_subject_vote);
    }

    while world.time() < limit {
        if first_correct.is_some() && stop_early {
            break;
        }
        world.advance(rng)?;
        if pipelined {
            world.observe(rng)?;
        }
        world.exchange(rng)?;
        if first_correct.is_none() && world.fused_all_correct() {
            first_correct = Some(world.time());
        }
    }
    if !pipelined {
        record.phase_boundaries.push(world.time());
    }
    let fused = world.fused_vectors(options.exclude_subject_vote)?;
    let neighborhoods = world.neighborhoods();
    world.finish_record(&mut record, first_correct, fused, Some(neighborhoods));
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn hood(owner: RobotId, others: &[(RobotId, Vec<bool>)], own: Vec<bool>) -> TrustedNeighborhood {
        let mut h = TrustedNeighborhood::new(owner, own);
        for (id, v) in others {
            h.insert(*id, v.clone());
        }
        h
    }

    #[test]
    fn individual_params_examples() {
        let p = individual_params(32, 0.1, 0.25, 1.0).unwrap();
        // ln(2 * 32^3 / 0.1) = ln(655360) = 13.3929..., / 0.125 = 107.14...
        assert_eq!(p.n_alpha, 108);

        for delta in [0.5, 0.1, 0.01, 1e-6] {
            let p = individual_params(1, delta, 0.5, 3.0).unwrap();
            assert_eq!(p.n_alpha, (2.0 * (2.0 / delta).ln()).ceil() as usize);
        }

        // tau_ind / T_meet = 8 n_alpha before rounding
        for (n, delta, eps, t) in [(8, 0.5, 0.25, 7.3), (32, 0.1, 0.2, 11.0), (4, 0.05, 0.4, 2.5)] {
            let p = individual_params(n, delta, eps, t).unwrap();
            let raw_n = (2.0 * (n as f64).powi(3) / delta).ln() / (2.0 * eps * eps);
            let raw_tau = 8.0 * raw_n * t;
            assert_eq!(p.tau_ind, raw_tau.ceil() as usize);
        }
    }

    #[test]
    fn individual_params_domain() {
        assert!(individual_params(0, 0.1, 0.25, 1.0).is_err());
        assert!(individual_params(4, 1.0, 0.25, 1.0).is_err());
        assert!(individual_params(4, 0.1, 0.6, 1.0).is_err());
        assert!(individual_params(4, 0.1, 0.25, -1.0).is_err());
        // zero meeting time still yields a one-step window
        assert_eq!(individual_params(4, 0.1, 0.25, 0.0).unwrap().tau_ind, 1);
    }

    #[test]
    fn dcv_params_examples() {
        let p = dcv_params(32, 16, 0.1, 0.25, 10.0, 10.0, Rho::default()).unwrap();
        let q = p.q.unwrap();
        // 0.005 / e^(2e), evaluated independently
        let want_q = 0.005 * (-2.0 * std::f64::consts::E).exp();
        assert!((q - want_q).abs() / want_q < 1e-12);
        assert!((q - 2.1776e-5).abs() < 1e-8, "{q}");

        let n_hit = p.n_alpha_hit.unwrap();
        assert_eq!(n_hit.ceil() as usize, (1280.0 * (1.0 / q).ln()).ceil() as usize);
        let ind = individual_params(32, 0.1, 0.25, 10.0).unwrap();
        assert!(n_hit.ceil() as usize > ind.n_alpha);

        let ratio = p.f.unwrap() / n_hit;
        assert!((ratio - 26.0 / (1.0 - 1.0 / std::f64::consts::E).powi(2)).abs() < 1e-9);
        assert!((ratio - 65.07).abs() < 0.005);
    }

    #[test]
    fn dcv_branch_selection() {
        // realistic graphs: the meeting branch is far smaller
        let p = dcv_params(32, 16, 0.1, 0.25, 10.0, 8.0, Rho::default()).unwrap();
        assert_eq!(p.branch, Some(TauBranch::MeetingTime));
        let meet_log = (4.0 * 32f64.powi(3) / 0.1).ln();
        assert_eq!(p.tau, (4.0 * meet_log / 0.0625 * 8.0).ceil() as usize);
        assert_eq!(p.n_alpha, (meet_log / 0.125).ceil() as usize);

        // a vanishing hitting time flips it
        let p = dcv_params(32, 16, 0.1, 0.25, 1e-9, 8.0, Rho::default()).unwrap();
        assert_eq!(p.branch, Some(TauBranch::HittingTime));
        assert_eq!(p.n_alpha, p.n_alpha_hit.unwrap().ceil() as usize);
        assert_eq!(p.tau, 1);
    }

    #[test]
    fn dcv_params_domain() {
        let bad_rho = Rho { r2: 0.3, ..Rho::default() };
        assert!(dcv_params(32, 16, 0.1, 0.25, 1.0, 1.0, bad_rho).is_err());
        assert!(dcv_params(32, 0, 0.1, 0.25, 1.0, 1.0, Rho::default()).is_err());
        assert!(dcv_params(32, 33, 0.1, 0.25, 1.0, 1.0, Rho::default()).is_err());
        assert!(dcv_params(32, 16, 0.0, 0.25, 1.0, 1.0, Rho::default()).is_err());
    }

    #[test]
    fn rho_condition() {
        let r = |r2, r3, r4| Rho { r1: 0.1, r2, r3, r4 };
        assert!(r(0.2, 0.2, 0.1).fusion_condition().unwrap());
        assert!(!r(0.3, 0.2, 0.1).fusion_condition().unwrap());
        assert!(r(0.0, 0.0, 0.0).fusion_condition().unwrap());
        assert!(r(-0.1, 0.0, 0.0).fusion_condition().is_err());
        let d = Rho::default();
        assert!((3.0 * d.r2 + d.r3 + d.r4 - 0.9).abs() < 1e-12);
    }

    #[test]
    fn fuse_examples() {
        // k = 3: votes (1, 1, 0) among {0, 1, 2}
        let h = hood(0, &[(1, vec![true, true, true, true]), (2, vec![true, true, true, false])], vec![true, false, false, true]);
        assert!(fuse_majority(&[true, false, false, true], &h, false).unwrap()[3]);

        // k = 4: votes (1, 1, 0, 0) tie -> trust
        let own = vec![true, true, true, true, true];
        let h = hood(
            0,
            &[
                (1, vec![true, true, true, true, true]),
                (2, vec![true, true, true, true, false]),
                (3, vec![true, true, true, true, false]),
            ],
            own.clone(),
        );
        assert!(fuse_majority(&own, &h, false).unwrap()[4]);

        // lone voter keeps its own vector
        let own = vec![false, true, false, true];
        let h = TrustedNeighborhood::new(1, own.clone());
        assert_eq!(fuse_majority(&own, &h, false).unwrap(), own);
    }

    #[test]
    fn fuse_length_mismatch() {
        let h = hood(0, &[(1, vec![true, true])], vec![true, true, true]);
        assert!(matches!(
            fuse_majority(&[true, true, true], &h, false),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn fuse_excluding_subject() {
        // robot 2 vouches for itself; without its vote the others distrust it
        let own = vec![true, true, false];
        let h = hood(0, &[(1, vec![true, true, false]), (2, vec![false, false, true])], own.clone());
        assert!(!fuse_majority(&own, &h, false).unwrap()[2]);
        let h2 = hood(0, &[(2, vec![false, false, true])], vec![true, true, false]);
        // {0, 2}: literal rule ties at 1 of 2 -> trust; excluding 2's self-vote -> 0 of 1
        assert!(fuse_majority(&[true, true, false], &h2, false).unwrap()[2]);
        assert!(!fuse_majority(&[true, true, false], &h2, true).unwrap()[2]);
    }

    #[test]
    fn neighborhood_keeps_first_copy() {
        let mut h = TrustedNeighborhood::new(0, vec![true, true]);
        h.insert(1, vec![true, true]);
        h.insert(1, vec![false, false]);
        assert_eq!(h.collected_vectors[&1], vec![true, true]);
        assert_eq!(h.encounters, BTreeMap::from([(1, 2)]));
        assert_eq!(h.len(), 2);
    }
}
