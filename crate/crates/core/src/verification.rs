//! Executable checks for the probabilistic claims behind the protocols:
//! the four-property coverage event that makes majority fusion correct,
//! the concentration bounds it rests on, and a few walk facts.
//!
//! Statistical checks assert non-violation of an upper bound with a
//! one-sided 3-sigma sampling margin. Bounds that can underflow are
//! compared in log space.

use std::f64::consts::E;
use std::fmt;
use std::io::Write;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryStrategy, Disclosure, Movement};
use crate::engine::{derive_seed, run_rng, Mode, RunRecord, Team};
use crate::error::{Error, Result};
use crate::markov::{lazy_transition_matrix, sample_step, MarkovQuantities, TransitionMatrix};
use crate::protocols::{
    run_dcv, DcvSchedule, Environment, ProtocolKind, ProtocolParams, Rho, RunOptions,
};
use crate::topology::{grid, line, SiteGraph, SiteId};
use crate::trust::{ObservationModel, RobotId, TrustLedger};

/// Slack for comparing integer counts against real-valued thresholds.
const COUNT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inapplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inapplicable => "inapplicable",
        })
    }
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub observed: f64,
    pub bound: f64,
    pub margin: f64,
    pub trials: usize,
    pub detail: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    fn upper(name: String, observed: f64, bound: f64, margin: f64, trials: usize, detail: String) -> Self {
        let status = if observed <= bound + margin {
            Status::Pass
        } else {
            Status::Fail
        };
        Check {
            name,
            status,
            observed,
            bound,
            margin,
            trials,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "check={} status={} observed={:.6e} bound={:.6e} margin={:.3e} trials={}",
            self.name, self.status, self.observed, self.bound, self.margin, self.trials
        )?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

/// Writes one `key=value` line per check plus a closing summary line.
pub fn write_report<W: Write>(checks: &[Check], mut out: W) -> Result<()> {
    let io = |e| Error::io("<report>", e);
    for c in checks {
        writeln!(out, "{c}").map_err(io)?;
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    writeln!(out, "summary checks={} failed={failed}", checks.len()).map_err(io)?;
    Ok(())
}

fn three_sigma(p: f64, trials: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Per-robot counts behind the four coverage properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotAudit {
    pub robot: RobotId,
    /// Legitimate robots (itself included) observed at least `n_alpha`
    /// times while observing.
    pub legit_met_enough: usize,
    pub legit_misclassified: usize,
    pub malicious_misclassified: usize,
    /// Legitimate robots (itself included) met at least once while
    /// exchanging.
    pub legit_met_exchange: usize,
    pub holds: [bool; 4],
}

/// Vote counts for one observer about one subject, taken over the
/// observer's trusted neighborhood minus the subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionTally {
    pub observer: RobotId,
    pub subject: RobotId,
    pub legit_correct: usize,
    pub legit_wrong: usize,
    pub malicious_wrong: usize,
    pub malicious_correct: usize,
    /// The subject's vote about itself, when it is a member.
    pub subject_self_vote: Option<bool>,
    pub fused_correct: bool,
}

impl FusionTally {
    /// Correct advocates strictly outnumber wrong ones.
    pub fn sufficient(&self) -> bool {
        self.legit_correct > self.legit_wrong + self.malicious_wrong
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEAudit {
    pub n_legit: usize,
    /// `(1 - r1) L`, `r2 L`, `r3 L`, `(1 - r4) L`.
    pub thresholds: [f64; 4],
    pub robots: Vec<RobotAudit>,
    pub property_holds: [bool; 4],
    pub holds: bool,
    pub tallies: Vec<FusionTally>,
    /// Per robot: how many other legitimate robots misclassify it.
    pub misclassified_by: Vec<usize>,
    /// Every robot is misclassified by at most `r2 L` legitimate robots.
    /// Not part of the event; the fusion argument needs it per subject.
    pub subject_bound_holds: bool,
}

/// Audits a fixed-window two-phase crowd-vetting record.
pub fn audit_event_e(record: &RunRecord, params: &ProtocolParams) -> Result<EventEAudit> {
    let neighborhoods = match (&record.protocol, &record.mode, &record.schedule, &record.neighborhoods) {
        (ProtocolKind::Dcv, Mode::Fixed, DcvSchedule::TwoPhase, Some(h)) => h,
        _ => return Err(Error::NotDcvRecord),
    };
    let truth = &record.ground_truth;
    let n = truth.len();
    let n_legit = record.legit_ids.len();
    let l = n_legit as f64;
    let rho = params.rho;
    let thresholds = [(1.0 - rho.r1) * l, rho.r2 * l, rho.r3 * l, (1.0 - rho.r4) * l];

    let mut robots = Vec::with_capacity(n_legit);
    let mut tallies = Vec::new();
    for (idx, &i) in record.legit_ids.iter().enumerate() {
        let eta = &record.eta[idx];
        let interim = &record.interim_vectors[idx];
        let met_enough = 1 + (0..n)
            .filter(|&j| j != i && truth[j] && eta[j] as usize >= params.n_alpha)
            .count();
        let legit_wrong = (0..n).filter(|&j| truth[j] && !interim[j]).count();
        let malicious_wrong = (0..n).filter(|&j| !truth[j] && interim[j]).count();
        let met_exchange = 1 + (0..n)
            .filter(|&j| j != i && truth[j] && record.exchange_meetings[i][j] > 0)
            .count();
        let holds = [
            met_enough as f64 >= thresholds[0] - COUNT_TOL,
            legit_wrong as f64 <= thresholds[1] + COUNT_TOL,
            malicious_wrong as f64 <= thresholds[2] + COUNT_TOL,
            met_exchange as f64 >= thresholds[3] - COUNT_TOL,
        ];
        robots.push(RobotAudit {
            robot: i,
            legit_met_enough: met_enough,
            legit_misclassified: legit_wrong,
            malicious_misclassified: malicious_wrong,
            legit_met_exchange: met_exchange,
            holds,
        });

        let hood = &neighborhoods[idx];
        let fused = &record.final_vectors[idx];
        for j in (0..n).filter(|&j| j != i) {
            let mut t = FusionTally {
                observer: i,
                subject: j,
                legit_correct: 0,
                legit_wrong: 0,
                malicious_wrong: 0,
                malicious_correct: 0,
                subject_self_vote: None,
                fused_correct: fused[j] == truth[j],
            };
            for &k in &hood.members {
                let vote = hood.collected_vectors[&k][j];
                if k == j {
                    t.subject_self_vote = Some(vote);
                    continue;
                }
                match (truth[k], vote == truth[j]) {
                    (true, true) => t.legit_correct += 1,
                    (true, false) => t.legit_wrong += 1,
                    (false, true) => t.malicious_correct += 1,
                    (false, false) => t.malicious_wrong += 1,
                }
            }
            tallies.push(t);
        }
    }
    let property_holds: [bool; 4] = std::array::from_fn(|p| robots.iter().all(|r| r.holds[p]));
    let mut misclassified_by = vec![0usize; n];
    for (idx, &i) in record.legit_ids.iter().enumerate() {
        for j in (0..n).filter(|&j| j != i) {
            misclassified_by[j] += usize::from(record.interim_vectors[idx][j] != truth[j]);
        }
    }
    let subject_bound_holds = misclassified_by
        .iter()
        .all(|&c| c as f64 <= thresholds[1] + COUNT_TOL);
    Ok(EventEAudit {
        n_legit,
        thresholds,
        holds: property_holds.iter().all(|&h| h),
        property_holds,
        robots,
        tallies,
        misclassified_by,
        subject_bound_holds,
    })
}

/// `1 > 3 r2 + r3 + r4`.
pub fn rho_margin_condition(rho: &Rho) -> Result<bool> {
    rho.fusion_condition()
}

/// Largest `p` for which the binomial tail bound is stated.
pub fn binomial_tail_domain(rho: f64) -> f64 {
    rho * rho / (2.0 * E * (1.0 - rho)).exp()
}

/// Empirical `Pr[Y >= rho n]` for `Y ~ Bin(n, p)` against `p^(rho n / 2)`.
/// Inapplicable outside `rho in (0, 0.8]`, `p <= rho^2 / exp(2e(1 - rho))`.
pub fn check_binomial_tail<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    rho: f64,
    trials: usize,
    rng: &mut R,
) -> Check {
    let name = format!("binomial_tail(n={n},p={p:.4e},rho={rho})");
    let limit = binomial_tail_domain(rho);
    if !(rho > 0.0 && rho <= 0.8) || !(0.0..=1.0).contains(&p) || p > limit * (1.0 + 1e-12) {
        return Check {
            name,
            status: Status::Inapplicable,
            observed: f64::NAN,
            bound: f64::NAN,
            margin: 0.0,
            trials: 0,
            detail: format!("domain p<={limit:.4e}"),
        };
    }
    let threshold = rho * n as f64 - COUNT_TOL;
    let hits = (0..trials)
        .filter(|_| {
            let y = (0..n).filter(|_| rng.gen::<f64>() < p).count();
            y as f64 >= threshold
        })
        .count();
    let observed = hits as f64 / trials as f64;
    let bound = if p == 0.0 { 0.0 } else { (rho * n as f64 / 2.0 * p.ln()).exp() };
    Check::upper(name, observed, bound, three_sigma(bound, trials), trials, String::new())
}

/// Empirical `Pr[X <= (1 - gamma) mu]` for `X ~ Bin(n, p)` against
/// `exp(-gamma^2 mu / 2)`.
pub fn check_chernoff_lower<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    gamma: f64,
    trials: usize,
    rng: &mut R,
) -> Check {
    let mu = n as f64 * p;
    let cut = (1.0 - gamma) * mu + COUNT_TOL;
    let hits = (0..trials)
        .filter(|_| {
            let x = (0..n).filter(|_| rng.gen::<f64>() < p).count();
            x as f64 <= cut
        })
        .count();
    let observed = hits as f64 / trials as f64;
    let bound = (-gamma * gamma * mu / 2.0).exp();
    Check::upper(
        format!("chernoff_lower(n={n},p={p},gamma={gamma})"),
        observed,
        bound,
        three_sigma(bound, trials),
        trials,
        String::new(),
    )
}

/// The Chernoff grid: `gamma in {0.25, 0.5}`, `n in {50, 200}`,
/// `p in {0.3, 0.7}`.
pub fn chernoff_grid<R: Rng + ?Sized>(trials: usize, rng: &mut R) -> Vec<Check> {
    let mut out = Vec::new();
    for gamma in [0.25, 0.5] {
        for n in [50, 200] {
            for p in [0.3, 0.7] {
                out.push(check_chernoff_lower(n, p, gamma, trials, rng));
            }
        }
    }
    out
}

/// Binomial-tail grid: several `rho`, `n`, and `p` from tiny up to the
/// domain boundary.
pub fn binomial_tail_grid<R: Rng + ?Sized>(trials: usize, rng: &mut R) -> Vec<Check> {
    let mut out = Vec::new();
    for rho in [0.1, 0.3, 0.5, 0.8] {
        let limit = binomial_tail_domain(rho);
        for n in [1, 5, 20, 60] {
            for p in [0.0, limit * 1e-3, limit * 0.1, limit] {
                out.push(check_binomial_tail(n, p, rho, trials, rng));
            }
        }
    }
    out
}

/// `q^L <= delta / (4 N L)` with `q = delta r1 / e^(2e) * L / N`,
/// `r1 = 0.1`, compared in log space.
pub fn check_proba_bound(n_legit: usize, n_robots: usize, delta: f64) -> bool {
    let l = n_legit as f64;
    let n = n_robots as f64;
    let ln_q = delta.ln() + 0.1f64.ln() - 2.0 * E + (l / n).ln();
    l * ln_q <= delta.ln() - (4.0 * n * l).ln()
}

/// Every `1 <= L <= N <= max_robots` for each `delta`; returns the
/// violating triples.
pub fn proba_bound_sweep(max_robots: usize, deltas: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut bad = Vec::new();
    for &delta in deltas {
        for n in 1..=max_robots {
            for l in 1..=n {
                if !check_proba_bound(l, n, delta) {
                    bad.push((l, n, delta));
                }
            }
        }
    }
    bad
}

/// Classifies `ledgers` subjects from `ceil(ln(1/delta) / (2 eps^2))`
/// observations each, half legitimate and half malicious, and compares the
/// misclassification rate with `delta`.
pub fn check_majority_bound<R: RngCore>(
    epsilon_alpha: f64,
    delta: f64,
    ledgers: usize,
    rng: &mut R,
) -> Result<Check> {
    let n_alpha = ((1.0 / delta).ln() / (2.0 * epsilon_alpha * epsilon_alpha)).ceil() as usize;
    let model = ObservationModel::bernoulli(epsilon_alpha)?;
    let mut wrong = 0usize;
    for s in 0..ledgers {
        let legit = s % 2 == 0;
        let mut ledger = TrustLedger::new(0, 2, n_alpha)?;
        for _ in 0..n_alpha {
            ledger.record(1, model.sample_observation(legit, rng))?;
        }
        if ledger.interim_trust_entry(1)? != legit {
            wrong += 1;
        }
    }
    let rate = wrong as f64 / ledgers as f64;
    Ok(Check::upper(
        format!("majority_bound(eps={epsilon_alpha},delta={delta})"),
        rate,
        delta,
        0.0,
        ledgers,
        format!("n_alpha={n_alpha}"),
    ))
}

fn sample_from<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> SiteId {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (s, &w) in dist.iter().enumerate() {
        acc += w;
        if u < acc {
            return s;
        }
    }
    dist.len() - 1
}

/// A walk started from stationarity avoids a fixed trajectory for `t`
/// steps with probability at most `(1 - 1/T_hit)^t`.
pub fn check_moving_target<R: Rng + ?Sized>(
    kernel: &TransitionMatrix,
    quantities: &MarkovQuantities,
    trajectory: &[SiteId],
    trials: usize,
    rng: &mut R,
) -> Check {
    let t = trajectory.len();
    let mut avoided = 0usize;
    for _ in 0..trials {
        let mut pos = sample_from(&quantities.stationary, rng);
        let mut met = false;
        for (k, &target) in trajectory.iter().enumerate() {
            if k > 0 {
                pos = sample_step(kernel, pos, rng);
            }
            if pos == target {
                met = true;
                break;
            }
        }
        avoided += usize::from(!met);
    }
    let observed = avoided as f64 / trials as f64;
    let t_hit = quantities.t_hit();
    let bound = if t_hit <= 1.0 { 0.0 } else { (1.0 - 1.0 / t_hit).powi(t as i32) };
    Check::upper(
        format!("moving_target(t={t})"),
        observed,
        bound,
        three_sigma(bound, trials),
        trials,
        format!("t_hit={t_hit:.4}"),
    )
}

/// Two independent walks from any pair of sites meet within
/// `ceil(2 T_meet)` steps with probability at least 1/2. Reports the worst
/// pair's miss rate against 1/2.
pub fn check_meeting_within<R: Rng + ?Sized>(
    kernel: &TransitionMatrix,
    quantities: &MarkovQuantities,
    trials: usize,
    rng: &mut R,
) -> Check {
    let horizon = (2.0 * quantities.t_meet()).ceil() as usize;
    let n = kernel.n_states();
    let mut worst = 0.0f64;
    let mut worst_pair = (0, 0);
    for a in 0..n {
        for b in a + 1..n {
            let mut missed = 0usize;
            for _ in 0..trials {
                let (mut x, mut y) = (a, b);
                let mut met = false;
                for _ in 0..horizon {
                    x = sample_step(kernel, x, rng);
                    y = sample_step(kernel, y, rng);
                    if x == y {
                        met = true;
                        break;
                    }
                }
                missed += usize::from(!met);
            }
            let rate = missed as f64 / trials as f64;
            if rate > worst {
                worst = rate;
                worst_pair = (a, b);
            }
        }
    }
    Check::upper(
        format!("meeting_within_2t_meet(horizon={horizon})"),
        worst,
        0.5,
        three_sigma(0.5, trials),
        trials,
        format!("worst_pair={}-{}", worst_pair.0, worst_pair.1),
    )
}

/// Outcome of the randomized fusion-correctness experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionExperiment {
    pub runs: usize,
    pub event_holding: usize,
    pub successes_given_event: usize,
    /// Seeds of runs where the event held but some fused vector was wrong.
    pub counterexamples: Vec<u64>,
    /// Event-holding runs that also met the per-subject bound.
    pub subject_bound_holding: usize,
    /// Failures among those.
    pub subject_bound_counterexamples: Vec<u64>,
}

/// Parameter ranges (inclusive) for synthetic crowd-vetting instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpace {
    pub n_robots: (usize, usize),
    pub epsilon_alpha: (f64, f64),
    pub n_alpha: (usize, usize),
    pub tau: (usize, usize),
}

impl Default for SyntheticSpace {
    fn default() -> Self {
        SyntheticSpace {
            n_robots: (3, 10),
            epsilon_alpha: (0.3, 0.5),
            n_alpha: (1, 5),
            tau: (20, 200),
        }
    }
}

/// One synthetic crowd-vetting instance: small graph and team, explicit
/// threshold and window, varied adversaries. Deterministic in `seed`.
pub fn synthetic_dcv_run(space: &SyntheticSpace, seed: u64) -> Result<(RunRecord, ProtocolParams)> {
    let mut rng = run_rng(seed);
    let graph: SiteGraph = match rng.gen_range(0..5) {
        0 => line(1)?,
        1 => line(2)?,
        2 => line(3)?,
        3 => grid(2, 2)?,
        _ => grid(2, 3)?,
    };
    let kernel = lazy_transition_matrix(&graph);
    let n_robots = rng.gen_range(space.n_robots.0..=space.n_robots.1);
    let n_legit = rng.gen_range(1..=n_robots);
    let epsilon = rng.gen_range(space.epsilon_alpha.0..=space.epsilon_alpha.1);
    let n_alpha = rng.gen_range(space.n_alpha.0..=space.n_alpha.1);
    let tau = rng.gen_range(space.tau.0..=space.tau.1);
    let disclosure = match rng.gen_range(0..3) {
        0 => Disclosure::InvertTruth,
        1 => Disclosure::AllDistrustLegit,
        _ => Disclosure::Random(0.5),
    };
    let movement = if rng.gen_bool(0.5) {
        Movement::LazyWalk
    } else {
        Movement::Stationary(graph.num_sites() - 1)
    };
    let model = ObservationModel::bernoulli(epsilon)?;
    let team = Team::new(n_robots, n_legit)?.with_adversary(AdversaryStrategy { movement, disclosure });
    let mut params = ProtocolParams::explicit(ProtocolKind::Dcv, n_robots, epsilon, n_alpha, tau);
    params.n_legit = Some(n_legit);
    let env = Environment {
        graph: &graph,
        kernel: &kernel,
        model: &model,
    };
    let options = RunOptions {
        record_meetings: false,
        ..RunOptions::default()
    };
    let mut record = run_dcv(env, &params, &team, &mut rng, &options)?;
    record.seed = seed;
    Ok((record, params))
}

/// Runs synthetic instances until `target` of them satisfy the coverage
/// event (or `max_runs` is reached) and counts fusion failures among those.
pub fn fusion_experiment(
    space: &SyntheticSpace,
    master_seed: u64,
    target: usize,
    max_runs: usize,
) -> Result<FusionExperiment> {
    let mut out = FusionExperiment {
        runs: 0,
        event_holding: 0,
        successes_given_event: 0,
        counterexamples: Vec::new(),
        subject_bound_holding: 0,
        subject_bound_counterexamples: Vec::new(),
    };
    while out.event_holding < target && out.runs < max_runs {
        let seed = derive_seed(master_seed, out.runs as u64);
        out.runs += 1;
        let (record, params) = synthetic_dcv_run(space, seed)?;
        if !rho_margin_condition(&params.rho)? {
            continue;
        }
        let audit = audit_event_e(&record, &params)?;
        if !audit.holds {
            continue;
        }
        out.event_holding += 1;
        let ok = record.succeeded();
        if ok {
            out.successes_given_event += 1;
        } else {
            out.counterexamples.push(seed);
        }
        if audit.subject_bound_holds {
            out.subject_bound_holding += 1;
            if !ok {
                out.subject_bound_counterexamples.push(seed);
            }
        }
    }
    Ok(out)
}
