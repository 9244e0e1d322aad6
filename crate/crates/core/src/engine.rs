//! Seeded time-step simulation.
//!
//! Randomness comes from one generator per run and is consumed in a fixed
//! order, which is part of the trace contract:
//!
//! 1. initial placement, robot ids ascending, one `gen_range(0..sites)` each
//!    (skipped for explicit placements);
//! 2. every step, movement in robot id order: legitimate robots draw one
//!    uniform for the lazy walk, adversaries draw whatever their movement
//!    policy needs (one for `lazy_walk`, none for `stationary`/`shadow`);
//! 3. observations in ordered-pair order `(i, j)`, `i` legitimate ascending,
//!    `j` co-located ascending, one observation each;
//! 4. vector exchange in the same ordered-pair order; a malicious robot with
//!    a random disclosure fabricates one vector per step, the first time it
//!    is asked.
//!
//! Moves are synchronous: every robot chooses from the positions at the
//! start of the step and meetings are evaluated after all moves.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{adversary_move, fabricate_vector, AdversaryStrategy, WorldSnapshot};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::markov::sample_step;
use crate::protocols::{
    fuse_majority, run_dcv, run_individual, DcvSchedule, Environment, ProtocolKind,
    ProtocolParams, RunOptions, TrustedNeighborhood,
};
use crate::topology::SiteId;
use crate::trust::{RobotId, TrustLedger, TrustVector};

/// Generator family used for every run; echoed into traces.
pub const RNG_FAMILY: &str = "ChaCha8Rng(seed_from_u64)";

pub type RunRng = ChaCha8Rng;

pub fn run_rng(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer over `(master, stream)`; used to derive child seeds.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Fixed,
    UntilCorrect { cap: usize },
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Fixed => f.write_str("fixed"),
            Mode::UntilCorrect { .. } => f.write_str("until-correct"),
        }
    }
}

/// Default step cap for until-correct runs.
pub const DEFAULT_CAP: usize = 10_000_000;

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Mode::Fixed),
            "until-correct" | "until_correct" => Ok(Mode::UntilCorrect { cap: DEFAULT_CAP }),
            _ => Err(Error::InvalidConfig(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Uniform,
    Explicit(Vec<SiteId>),
}

/// Team composition: who is legitimate, how adversaries behave, where
/// everyone starts.
#[derive(Debug, Clone)]
pub struct Team {
    ground_truth: Vec<bool>,
    pub adversary: AdversaryStrategy,
    pub placement: Placement,
}

impl Team {
    /// Robots `0..n_legit` are legitimate, the rest malicious.
    pub fn new(n_robots: usize, n_legit: usize) -> Result<Self> {
        if n_robots == 0 || n_legit > n_robots {
            return Err(Error::ParameterDomain(format!(
                "need 0 <= |L| <= N and N >= 1, got |L|={n_legit}, N={n_robots}"
            )));
        }
        Ok(Team {
            ground_truth: (0..n_robots).map(|r| r < n_legit).collect(),
            adversary: AdversaryStrategy::default(),
            placement: Placement::Uniform,
        })
    }

    pub fn from_ground_truth(ground_truth: Vec<bool>) -> Result<Self> {
        if ground_truth.is_empty() {
            return Err(Error::ParameterDomain("team must have at least one robot".into()));
        }
        Ok(Team {
            ground_truth,
            adversary: AdversaryStrategy::default(),
            placement: Placement::Uniform,
        })
    }

    pub fn with_adversary(mut self, adversary: AdversaryStrategy) -> Self {
        self.adversary = adversary;
        self
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn n_robots(&self) -> usize {
        self.ground_truth.len()
    }

    pub fn n_legit(&self) -> usize {
        self.ground_truth.iter().filter(|&&b| b).count()
    }

    pub fn ground_truth(&self) -> &[bool] {
        &self.ground_truth
    }

    pub fn is_legit(&self, r: RobotId) -> bool {
        self.ground_truth[r]
    }

    pub fn legit_ids(&self) -> Vec<RobotId> {
        (0..self.n_robots()).filter(|&r| self.ground_truth[r]).collect()
    }
}

/// True iff every legitimate robot's vector equals ground truth.
/// `vectors` holds one vector per legitimate robot.
pub fn success_check(vectors: &[TrustVector], ground_truth: &[bool]) -> Result<bool> {
    let n_legit = ground_truth.iter().filter(|&&b| b).count();
    if vectors.len() != n_legit {
        return Err(Error::LengthMismatch {
            expected: n_legit,
            got: vectors.len(),
        });
    }
    let mut ok = true;
    for v in vectors {
        if v.len() != ground_truth.len() {
            return Err(Error::LengthMismatch {
                expected: ground_truth.len(),
                got: v.len(),
            });
        }
        ok &= v.as_slice() == ground_truth;
    }
    Ok(ok)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Phase1,
    Phase2,
    /// Observation and exchange at once (pipelined crowd vetting).
    Combined,
    Done,
}

/// Co-located groups (size >= 2) after the moves of step `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepMeetings {
    pub t: usize,
    pub groups: Vec<Vec<RobotId>>,
}

/// Everything one run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub rng: String,
    pub config: Option<Config>,
    pub protocol: ProtocolKind,
    pub mode: Mode,
    pub schedule: DcvSchedule,
    pub exclude_subject_vote: bool,
    pub params: ProtocolParams,
    pub ground_truth: Vec<bool>,
    pub initial_positions: Vec<SiteId>,
    pub final_positions: Vec<SiteId>,
    pub meeting_log: Vec<StepMeetings>,
    /// Co-location counts while observing (symmetric, robots x robots).
    pub observe_meetings: Vec<Vec<u32>>,
    /// Co-location counts while exchanging.
    pub exchange_meetings: Vec<Vec<u32>>,
    pub phase_boundaries: Vec<usize>,
    pub steps: usize,
    pub first_correct_time: Option<usize>,
    pub cap_exceeded: bool,
    /// Legitimate robot ids, the order of the vector lists below.
    pub legit_ids: Vec<RobotId>,
    /// Per legitimate robot: observation counts toward each robot.
    pub eta: Vec<Vec<u32>>,
    pub interim_vectors: Vec<TrustVector>,
    pub final_vectors: Vec<TrustVector>,
    pub neighborhoods: Option<Vec<TrustedNeighborhood>>,
}

#[derive(Serialize)]
struct TraceHeader<'a> {
    kind: &'static str,
    seed: u64,
    rng: &'a str,
    config: &'a Option<Config>,
    protocol: ProtocolKind,
    mode: Mode,
    schedule: DcvSchedule,
    exclude_subject_vote: bool,
    params: &'a ProtocolParams,
    ground_truth: &'a [bool],
    initial_positions: &'a [SiteId],
}

#[derive(Serialize)]
struct TraceStep<'a> {
    kind: &'static str,
    t: usize,
    groups: &'a [Vec<RobotId>],
}

#[derive(Serialize)]
struct TraceSummary<'a> {
    kind: &'static str,
    steps: usize,
    first_correct_time: Option<usize>,
    cap_exceeded: bool,
    phase_boundaries: &'a [usize],
    final_positions: &'a [SiteId],
    observe_meetings: &'a [Vec<u32>],
    exchange_meetings: &'a [Vec<u32>],
    legit_ids: &'a [RobotId],
    eta: &'a [Vec<u32>],
    interim_vectors: &'a [TrustVector],
    final_vectors: &'a [TrustVector],
    neighborhoods: &'a Option<Vec<TrustedNeighborhood>>,
}

impl RunRecord {
    /// Line-delimited JSON: a header line, one line per logged step, and a
    /// summary line.
    pub fn write_trace<W: Write>(&self, mut out: W) -> Result<()> {
        let header = TraceHeader {
            kind: "header",
            seed: self.seed,
            rng: &self.rng,
            config: &self.config,
            protocol: self.protocol,
            mode: self.mode,
            schedule: self.schedule,
            exclude_subject_vote: self.exclude_subject_vote,
            params: &self.params,
            ground_truth: &self.ground_truth,
            initial_positions: &self.initial_positions,
        };
        let io = |e| Error::io("<trace>", e);
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n").map_err(io)?;
        for step in &self.meeting_log {
            let line = TraceStep {
                kind: "step",
                t: step.t,
                groups: &step.groups,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n").map_err(io)?;
        }
        let summary = TraceSummary {
            kind: "summary",
            steps: self.steps,
            first_correct_time: self.first_correct_time,
            cap_exceeded: self.cap_exceeded,
            phase_boundaries: &self.phase_boundaries,
            final_positions: &self.final_positions,
            observe_meetings: &self.observe_meetings,
            exchange_meetings: &self.exchange_meetings,
            legit_ids: &self.legit_ids,
            eta: &self.eta,
            interim_vectors: &self.interim_vectors,
            final_vectors: &self.final_vectors,
            neighborhoods: &self.neighborhoods,
        };
        serde_json::to_writer(&mut out, &summary)?;
        out.write_all(b"\n").map_err(io)?;
        Ok(())
    }

    pub fn to_trace(&self) -> String {
        let mut buf = Vec::new();
        self.write_trace(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn succeeded(&self) -> bool {
        success_check(&self.final_vectors, &self.ground_truth).unwrap_or(false)
    }
}

/// Per-robot fusion bookkeeping during vector exchange.
#[derive(Debug, Clone)]
struct Fusion {
    own: TrustVector,
    collected: Vec<Option<TrustVector>>,
    member: Vec<bool>,
    members: usize,
    encounters: Vec<u32>,
    tally: Vec<usize>,
    wrong: usize,
    dirty: bool,
}

impl Fusion {
    fn new(owner: RobotId, own: TrustVector) -> Self {
        let n = own.len();
        let mut member = vec![false; n];
        member[owner] = true;
        let tally = own.iter().map(|&b| usize::from(b)).collect();
        Fusion {
            own,
            collected: vec![None; n],
            member,
            members: 1,
            encounters: vec![0; n],
            tally,
            wrong: 0,
            dirty: true,
        }
    }

    fn add_votes(&mut self, v: &[bool]) {
        for (t, &b) in self.tally.iter_mut().zip(v) {
            *t += usize::from(b);
        }
    }

    fn remove_votes(&mut self, v: &[bool]) {
        for (t, &b) in self.tally.iter_mut().zip(v) {
            *t -= usize::from(b);
        }
    }

    fn vote_of(&self, owner: RobotId, k: RobotId) -> &[bool] {
        if k == owner {
            &self.own
        } else {
            self.collected[k].as_deref().expect("member has a vector")
        }
    }

    fn fused_entry(&self, owner: RobotId, k: RobotId, exclude_subject: bool) -> bool {
        if k == owner {
            return true;
        }
        let (mut yes, mut total) = (self.tally[k], self.members);
        if exclude_subject && self.member[k] {
            yes -= usize::from(self.vote_of(owner, k)[k]);
            total -= 1;
        }
        2 * yes >= total
    }

    fn refresh(&mut self, owner: RobotId, truth: &[bool], exclude_subject: bool) {
        if self.dirty {
            self.wrong = (0..truth.len())
                .filter(|&k| self.fused_entry(owner, k, exclude_subject) != truth[k])
                .count();
            self.dirty = false;
        }
    }
}

#[derive(Debug, Clone)]
struct Exchange {
    pipelined: bool,
    exclude_subject: bool,
    // indexed by robot id, `None` for malicious robots
    fusion: Vec<Option<Fusion>>,
}

/// Mutable state of one run.
pub struct World<'a> {
    env: Environment<'a>,
    team: &'a Team,
    time: usize,
    phase: Phase,
    positions: Vec<SiteId>,
    initial_positions: Vec<SiteId>,
    occupancy: Vec<Vec<RobotId>>,
    ledgers: Vec<Option<TrustLedger>>,
    legit: Vec<RobotId>,
    interim_wrong: Vec<usize>,
    interim_wrong_total: usize,
    observe_meetings: Vec<Vec<u32>>,
    exchange_meetings: Vec<Vec<u32>>,
    meeting_log: Option<Vec<StepMeetings>>,
    exchange: Option<Exchange>,
    fabricated: Vec<Option<TrustVector>>,
}

impl<'a> World<'a> {
    pub fn new<R: RngCore>(
        env: Environment<'a>,
        team: &'a Team,
        n_alpha: usize,
        record_meetings: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let n = team.n_robots();
        let sites = env.graph.num_sites();
        if env.kernel.n_states() != sites {
            return Err(Error::InvalidKernel(format!(
                "kernel has {} states, graph has {sites} sites",
                env.kernel.n_states()
            )));
        }
        let positions: Vec<SiteId> = match &team.placement {
            Placement::Uniform => (0..n).map(|_| rng.gen_range(0..sites)).collect(),
            Placement::Explicit(p) => {
                if p.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        got: p.len(),
                    });
                }
                if let Some(&bad) = p.iter().find(|&&s| s >= sites) {
                    return Err(Error::InvalidConfig(format!(
                        "placement site {bad} outside 0..{sites}"
                    )));
                }
                p.clone()
            }
        };
        let legit = team.legit_ids();
        let mut ledgers = vec![None; n];
        let mut interim_wrong = vec![0; n];
        for &i in &legit {
            let ledger = TrustLedger::new(i, n, n_alpha)?;
            interim_wrong[i] = (0..n)
                .filter(|&j| ledger.entry(j) != team.is_legit(j))
                .count();
            ledgers[i] = Some(ledger);
        }
        let interim_wrong_total = interim_wrong.iter().sum();
        let mut world = World {
            env,
            team,
            time: 0,
            phase: Phase::Phase1,
            initial_positions: positions.clone(),
            positions,
            occupancy: vec![Vec::new(); sites],
            ledgers,
            legit,
            interim_wrong,
            interim_wrong_total,
            observe_meetings: vec![vec![0; n]; n],
            exchange_meetings: vec![vec![0; n]; n],
            meeting_log: record_meetings.then(Vec::new),
            exchange: None,
            fabricated: vec![None; n],
        };
        world.rebuild_occupancy();
        Ok(world)
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn positions(&self) -> &[SiteId] {
        &self.positions
    }

    pub fn ledger(&self, robot: RobotId) -> Option<&TrustLedger> {
        self.ledgers[robot].as_ref()
    }

    /// `N_i(t)`: robots sharing `robot`'s site, itself included.
    pub fn neighborhood(&self, robot: RobotId) -> &[RobotId] {
        &self.occupancy[self.positions[robot]]
    }

    fn rebuild_occupancy(&mut self) {
        for site in &mut self.occupancy {
            site.clear();
        }
        for (r, &s) in self.positions.iter().enumerate() {
            self.occupancy[s].push(r);
        }
    }

    /// Moves every robot once and counts the resulting co-locations.
    pub fn advance<R: RngCore>(&mut self, rng: &mut R) -> Result<()> {
        let snapshot = self.positions.clone();
        let world = WorldSnapshot {
            graph: self.env.graph,
            kernel: self.env.kernel,
            positions: &snapshot,
        };
        for r in 0..self.positions.len() {
            let from = snapshot[r];
            let to = if self.team.is_legit(r) {
                sample_step(self.env.kernel, from, rng)
            } else {
                adversary_move(&self.team.adversary, r, from, &world, rng)
            };
            if to >= self.env.graph.num_sites() || !self.env.graph.is_adjacent_or_same(from, to) {
                return Err(Error::IllegalMove { from, to });
            }
            self.positions[r] = to;
        }
        self.time += 1;
        self.rebuild_occupancy();
        self.fabricated.iter_mut().for_each(|f| *f = None);

        let counts_observe = matches!(self.phase, Phase::Phase1 | Phase::Combined);
        let counts_exchange = matches!(self.phase, Phase::Phase2 | Phase::Combined);
        let mut groups = Vec::new();
        for site in &self.occupancy {
            if site.len() < 2 {
                continue;
            }
            for (a, &i) in site.iter().enumerate() {
                for &j in &site[a + 1..] {
                    if counts_observe {
                        self.observe_meetings[i][j] += 1;
                        self.observe_meetings[j][i] += 1;
                    }
                    if counts_exchange {
                        self.exchange_meetings[i][j] += 1;
                        self.exchange_meetings[j][i] += 1;
                    }
                }
            }
            if self.meeting_log.is_some() {
                groups.push(site.clone());
            }
        }
        if let Some(log) = &mut self.meeting_log {
            groups.sort();
            log.push(StepMeetings { t: self.time, groups });
        }
        Ok(())
    }

    /// Every legitimate robot records one observation of each co-located
    /// robot.
    pub fn observe<R: RngCore>(&mut self, rng: &mut R) -> Result<()> {
        for idx in 0..self.legit.len() {
            let i = self.legit[idx];
            let site = self.positions[i];
            for a in 0..self.occupancy[site].len() {
                let j = self.occupancy[site][a];
                if j == i {
                    continue;
                }
                let legit_j = self.team.is_legit(j);
                let value = self.env.model.sample_observation(legit_j, rng);
                let ledger = self.ledgers[i].as_mut().expect("legit robot has a ledger");
                let before = ledger.entry(j);
                ledger.record(j, value)?;
                let after = ledger.entry(j);
                if before != after {
                    if after == legit_j {
                        self.interim_wrong[i] -= 1;
                        self.interim_wrong_total -= 1;
                    } else {
                        self.interim_wrong[i] += 1;
                        self.interim_wrong_total += 1;
                    }
                    self.on_interim_flip(i, j, after);
                }
            }
        }
        Ok(())
    }

    fn on_interim_flip(&mut self, i: RobotId, j: RobotId, now: bool) {
        let Some(ex) = &mut self.exchange else { return };
        if !ex.pipelined {
            return;
        }
        let f = ex.fusion[i].as_mut().expect("legit robot has fusion state");
        f.own[j] = now;
        if now {
            f.tally[j] += 1;
        } else {
            f.tally[j] -= 1;
        }
        if let Some(v) = f.collected[j].take() {
            if now && !f.member[j] {
                f.member[j] = true;
                f.members += 1;
                f.add_votes(&v);
            } else if !now && f.member[j] {
                f.member[j] = false;
                f.members -= 1;
                f.remove_votes(&v);
            }
            f.collected[j] = Some(v);
        }
        f.dirty = true;
    }

    /// True iff every legitimate robot's interim vector is correct.
    pub fn individual_all_correct(&self) -> bool {
        self.interim_wrong_total == 0
    }

    pub fn interim_vectors(&self) -> Vec<TrustVector> {
        self.legit
            .iter()
            .map(|&i| self.ledgers[i].as_ref().unwrap().interim_vector())
            .collect()
    }

    /// Switches to vector exchange. Two-phase runs freeze interim vectors
    /// here; pipelined runs keep observing and track them live.
    pub fn begin_exchange(&mut self, pipelined: bool, exclude_subject: bool) {
        let n = self.team.n_robots();
        let mut fusion = vec![None; n];
        for &i in &self.legit {
            let own = self.ledgers[i].as_ref().unwrap().interim_vector();
            fusion[i] = Some(Fusion::new(i, own));
        }
        self.exchange = Some(Exchange {
            pipelined,
            exclude_subject,
            fusion,
        });
        self.phase = if pipelined { Phase::Combined } else { Phase::Phase2 };
    }

    /// Each legitimate robot collects the vector of every co-located robot
    /// it currently trusts.
    pub fn exchange<R: RngCore>(&mut self, rng: &mut R) -> Result<()> {
        let Some(mut ex) = self.exchange.take() else {
            return Ok(());
        };
        for &i in &self.legit {
            let site = self.positions[i];
            for &j in &self.occupancy[site] {
                if j == i || !ex.fusion[i].as_ref().unwrap().own[j] {
                    continue;
                }
                let vector = if self.team.is_legit(j) {
                    ex.fusion[j].as_ref().unwrap().own.clone()
                } else {
                    if self.fabricated[j].is_none() {
                        self.fabricated[j] = Some(fabricate_vector(
                            &self.team.adversary,
                            self.team.ground_truth(),
                            j,
                            rng,
                        ));
                    }
                    self.fabricated[j].clone().unwrap()
                };
                let f = ex.fusion[i].as_mut().unwrap();
                f.encounters[j] += 1;
                match f.collected[j].take() {
                    None => {
                        f.member[j] = true;
                        f.members += 1;
                        f.add_votes(&vector);
                        f.collected[j] = Some(vector);
                        f.dirty = true;
                    }
                    Some(old) if ex.pipelined && old != vector => {
                        // membership implied: i trusts j right now
                        f.remove_votes(&old);
                        f.add_votes(&vector);
                        f.collected[j] = Some(vector);
                        f.dirty = true;
                    }
                    Some(old) => f.collected[j] = Some(old),
                }
            }
        }
        self.exchange = Some(ex);
        Ok(())
    }

    /// True iff every legitimate robot's fused vector is correct.
    pub fn fused_all_correct(&mut self) -> bool {
        let truth = self.team.ground_truth();
        let Some(ex) = &mut self.exchange else {
            return false;
        };
        let exclude = ex.exclude_subject;
        let mut ok = true;
        for &i in &self.legit {
            let f = ex.fusion[i].as_mut().unwrap();
            f.refresh(i, truth, exclude);
            ok &= f.wrong == 0;
        }
        ok
    }

    /// Trusted neighborhoods as of now, one per legitimate robot.
    pub fn neighborhoods(&self) -> Vec<TrustedNeighborhood> {
        let Some(ex) = &self.exchange else {
            return Vec::new();
        };
        self.legit
            .iter()
            .map(|&i| {
                let f = ex.fusion[i].as_ref().unwrap();
                let mut h = TrustedNeighborhood::new(i, f.own.clone());
                for j in 0..f.own.len() {
                    if j != i && f.member[j] {
                        h.members.insert(j);
                        h.collected_vectors
                            .insert(j, f.collected[j].clone().unwrap());
                    }
                    if f.encounters[j] > 0 {
                        h.encounters.insert(j, f.encounters[j]);
                    }
                }
                h
            })
            .collect()
    }

    /// Fused vectors recomputed from scratch with [`fuse_majority`].
    pub fn fused_vectors(&self, exclude_subject: bool) -> Result<Vec<TrustVector>> {
        let hoods = self.neighborhoods();
        let Some(ex) = &self.exchange else {
            return Ok(self.interim_vectors());
        };
        let mut out = Vec::with_capacity(hoods.len());
        for h in &hoods {
            let f = ex.fusion[h.owner].as_ref().unwrap();
            let fused = fuse_majority(&f.own, h, exclude_subject)?;
            debug_assert!((0..fused.len())
                .all(|k| fused[k] == f.fused_entry(h.owner, k, exclude_subject)));
            out.push(fused);
        }
        Ok(out)
    }

    fn frozen_interim(&self) -> Vec<TrustVector> {
        match &self.exchange {
            Some(ex) if !ex.pipelined => self
                .legit
                .iter()
                .map(|&i| ex.fusion[i].as_ref().unwrap().own.clone())
                .collect(),
            _ => self.interim_vectors(),
        }
    }

    pub(crate) fn start_record(
        &self,
        protocol: ProtocolKind,
        params: &ProtocolParams,
        options: &RunOptions,
    ) -> RunRecord {
        RunRecord {
            seed: 0,
            rng: RNG_FAMILY.to_string(),
            config: None,
            protocol,
            mode: options.mode,
            schedule: options.schedule,
            exclude_subject_vote: options.exclude_subject_vote,
            params: params.clone(),
            ground_truth: self.team.ground_truth().to_vec(),
            initial_positions: self.initial_positions.clone(),
            final_positions: Vec::new(),
            meeting_log: Vec::new(),
            observe_meetings: Vec::new(),
            exchange_meetings: Vec::new(),
            phase_boundaries: Vec::new(),
            steps: 0,
            first_correct_time: None,
            cap_exceeded: false,
            legit_ids: self.legit.clone(),
            eta: Vec::new(),
            interim_vectors: Vec::new(),
            final_vectors: Vec::new(),
            neighborhoods: None,
        }
    }

    pub(crate) fn finish_record(
        &mut self,
        record: &mut RunRecord,
        first_correct: Option<usize>,
        final_vectors: Vec<TrustVector>,
        neighborhoods: Option<Vec<TrustedNeighborhood>>,
    ) {
        self.phase = Phase::Done;
        record.steps = self.time;
        record.first_correct_time = first_correct;
        record.cap_exceeded = matches!(record.mode, Mode::UntilCorrect { .. }) && first_correct.is_none();
        record.final_positions = self.positions.clone();
        record.meeting_log = self.meeting_log.take().unwrap_or_default();
        record.observe_meetings = std::mem::take(&mut self.observe_meetings);
        record.exchange_meetings = std::mem::take(&mut self.exchange_meetings);
        record.eta = self
            .legit
            .iter()
            .map(|&i| {
                let l = self.ledgers[i].as_ref().unwrap();
                (0..l.n_robots()).map(|j| l.count(j) as u32).collect()
            })
            .collect();
        record.interim_vectors = self.frozen_interim();
        for (&i, v) in self.legit.iter().zip(&final_vectors) {
            let _ = self.ledgers[i].as_mut().unwrap().set_final_vector(v.clone());
        }
        record.final_vectors = final_vectors;
        record.neighborhoods = neighborhoods;
    }

    pub fn into_ledgers(self) -> Vec<TrustLedger> {
        self.ledgers.into_iter().flatten().collect()
    }
}

/// Runs one simulation described by `config`. The topology comes from its
/// own derived stream so that runs with different seeds can share it when
/// `topology_seed` is pinned.
pub fn simulate(config: &Config, seed: u64) -> Result<RunRecord> {
    let scenario = config.scenario(seed)?;
    let mut record = scenario.run(config, seed)?;
    record.config = Some(config.clone());
    Ok(record)
}

pub fn run_protocol<R: RngCore>(
    env: Environment<'_>,
    params: &ProtocolParams,
    team: &Team,
    rng: &mut R,
    options: &RunOptions,
) -> Result<RunRecord> {
    match params.protocol {
        ProtocolKind::Individual => run_individual(env, params, team, rng, options),
        ProtocolKind::Dcv => run_dcv(env, params, team, rng, options),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn success_check_cases() {
        let truth = [true, true, false];
        let good = vec![vec![true, true, false], vec![true, true, false]];
        assert!(success_check(&good, &truth).unwrap());
        let mut bad = good.clone();
        bad[1][2] = true;
        assert!(!success_check(&bad, &truth).unwrap());
        assert!(success_check(&[], &[false, false]).unwrap());
        assert!(success_check(&[vec![true]], &truth).is_err());
        assert!(success_check(&good[..1], &truth).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 0);
        let b = derive_seed(1, 1);
        let c = derive_seed(2, 0);
        assert!(a != b && a != c && b != c);
        assert_eq!(derive_seed(1, 0), a);
    }

    #[test]
    fn team_layout() {
        let t = Team::new(4, 2).unwrap();
        assert_eq!(t.ground_truth(), &[true, true, false, false]);
        assert_eq!(t.legit_ids(), vec![0, 1]);
        assert!(Team::new(2, 3).is_err());
        assert!(Team::new(0, 0).is_err());
    }

    #[test]
    fn mode_names() {
        assert_eq!("fixed".parse::<Mode>().unwrap(), Mode::Fixed);
        assert!(matches!("until-correct".parse::<Mode>().unwrap(), Mode::UntilCorrect { .. }));
        assert!("forever".parse::<Mode>().is_err());
    }
}
