//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use crowdvet::engine::{derive_seed, run_rng};
use crowdvet::experiments::{run_sweep, SweepAxis, SweepResult, SweepSpec};
use crowdvet::markov::{
    hitting_times, lazy_transition_matrix, meeting_times, sample_step, stationary_distribution, TransitionMatrix,
};
use crowdvet::protocols::{DcvSchedule, ProtocolKind};
use crowdvet::topology::{build_topology, grid, line, TopologyKind};
use crowdvet::verification::{
    binomial_tail_grid, check_majority_bound, chernoff_grid, fusion_experiment, proba_bound_sweep, SyntheticSpace,
};
use crowdvet::{simulate, Config};
use rayon::prelude::*;

const MASTER_SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mc_hitting(p: &TransitionMatrix, from: usize, to: usize, trials: usize, seed: u64) -> f64 {
    let mut rng = run_rng(seed);
    let mut total = 0u64;
    for _ in 0..trials {
        let mut x = from;
        while x != to {
            x = sample_step(p, x, &mut rng);
            total += 1;
        }
    }
    total as f64 / trials as f64
}

fn mc_meeting(p: &TransitionMatrix, a: usize, b: usize, trials: usize, seed: u64) -> f64 {
    let mut rng = run_rng(seed);
    let mut total = 0u64;
    for _ in 0..trials {
        let (mut x, mut y) = (a, b);
        while x != y {
            x = sample_step(p, x, &mut rng);
            y = sample_step(p, y, &mut rng);
            total += 1;
        }
    }
    total as f64 / trials as f64
}

fn majority_bound() -> Outcome {
    let n_alpha = (20f64.ln() / (2.0 * 0.04)).ceil() as usize;
    let check = check_majority_bound(0.2, 0.05, 20_000, &mut run_rng(MASTER_SEED)).unwrap();
    outcome(
        n_alpha == 38 && check.detail == "n_alpha=38" && check.observed <= 0.05,
        format!("n_alpha={n_alpha} misclassification_rate={:.5} bound=0.05", check.observed),
    )
}

fn markov_oracle() -> Outcome {
    let p2 = lazy_transition_matrix(&line(2).unwrap());
    let (h2, m2) = (hitting_times(&p2).unwrap(), meeting_times(&p2).unwrap());
    let exact = h2.max == 2.0 && m2.max == 2.0 && m2.matrix[0][1] == 2.0;

    let p = lazy_transition_matrix(&grid(3, 3).unwrap());
    let (h, m) = (hitting_times(&p).unwrap(), meeting_times(&p).unwrap());
    let n = p.n_states();
    let trials = 20_000;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|(a, b)| a != b).collect();
    let hit_err = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let mc = mc_hitting(&p, a, b, trials, derive_seed(MASTER_SEED, k as u64));
            (mc - h.matrix[a][b]).abs() / h.matrix[a][b]
        })
        .reduce(|| 0.0, f64::max);
    let unordered: Vec<(usize, usize)> = pairs.iter().copied().filter(|(a, b)| a < b).collect();
    let meet_err = unordered
        .par_iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let mc = mc_meeting(&p, a, b, trials, derive_seed(MASTER_SEED ^ 1, k as u64));
            (mc - m.matrix[a][b]).abs() / m.matrix[a][b]
        })
        .reduce(|| 0.0, f64::max);
    outcome(
        exact && hit_err <= 0.05 && meet_err <= 0.05,
        format!(
            "line2 t_hit={} t_meet={} grid3x3 t_hit={:.4} t_meet={:.4} max_rel_err hitting={:.4} meeting={:.4} trials_per_pair={trials}",
            h2.max, m2.max, h.max, m.max, hit_err, meet_err
        ),
    )
}

fn fusion_determinism() -> (Outcome, String) {
    let e = fusion_experiment(&SyntheticSpace::default(), MASTER_SEED, 5000, 200_000).unwrap();
    let pass = e.event_holding >= 1000 && e.counterexamples.is_empty();
    let main = outcome(
        pass,
        format!(
            "runs={} event_holding={} correct_given_event={} exceptions={} exception_seeds={:?}",
            e.runs,
            e.event_holding,
            e.successes_given_event,
            e.counterexamples.len(),
            e.counterexamples
        ),
    );
    let extra = format!(
        "with per-subject misclassification bound: qualifying={} exceptions={}",
        e.subject_bound_holding,
        e.subject_bound_counterexamples.len()
    );
    (main, extra)
}

fn base_sweep_config() -> Config {
    Config {
        topology: TopologyKind::Grid { rows: 3, cols: 3 },
        n_robots: 32,
        n_legit: 16,
        dcv_schedule: DcvSchedule::Pipelined,
        ..Config::default()
    }
}

fn sweep(axis: SweepAxis, values: Vec<f64>, stream: u64) -> SweepResult {
    let spec = SweepSpec {
        include_theory: false,
        ..SweepSpec::new(axis, values, base_sweep_config())
    };
    run_sweep(&spec, derive_seed(MASTER_SEED, stream)).unwrap()
}

fn means(r: &SweepResult, protocol: ProtocolKind) -> Vec<f64> {
    r.values().iter().map(|&v| r.mean(v, protocol).unwrap()).collect()
}

fn failures(r: &SweepResult) -> usize {
    r.points.iter().map(|p| p.failures).sum()
}

fn fmt(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>().join(",")
}

fn robots_trend() -> Outcome {
    let r = sweep(SweepAxis::NRobots, vec![4.0, 8.0, 16.0, 32.0], 4);
    let ind = means(&r, ProtocolKind::Individual);
    let dcv = means(&r, ProtocolKind::Dcv);
    let increasing = ind.windows(2).all(|w| w[0] < w[1]);
    let ratio = dcv[3] / dcv[1];
    let faster = (1..4).all(|k| dcv[k] < ind[k]);
    outcome(
        increasing && ratio <= 1.5 && faster && failures(&r) == 0,
        format!(
            "individual=[{}] dcv=[{}] (a) increasing={increasing} (b) dcv32/dcv8={ratio:.3} (c) dcv<individual for N>=8: {faster}",
            fmt(&ind),
            fmt(&dcv)
        ),
    )
}

fn gaps(r: &SweepResult) -> Vec<f64> {
    means(r, ProtocolKind::Individual)
        .iter()
        .zip(means(r, ProtocolKind::Dcv))
        .map(|(i, d)| i - d)
        .collect()
}

fn gap_trends() -> Outcome {
    let sites = sweep(SweepAxis::NSites, vec![4.0, 9.0, 16.0, 25.0], 5);
    let legit = sweep(SweepAxis::LegitFraction, vec![0.25, 0.5, 0.75, 0.9375], 6);
    let (gs, gl) = (gaps(&sites), gaps(&legit));
    let nondecreasing = |g: &[f64]| g.windows(2).all(|w| w[0] <= w[1]);
    outcome(
        nondecreasing(&gs) && nondecreasing(&gl) && failures(&sites) + failures(&legit) == 0,
        format!("sites(4,9,16,25) gap=[{}] legit(8,16,24,30) gap=[{}]", fmt(&gs), fmt(&gl)),
    )
}

fn concentration() -> Outcome {
    let mut rng = run_rng(MASTER_SEED);
    let checks: Vec<_> = binomial_tail_grid(20_000, &mut rng)
        .into_iter()
        .chain(chernoff_grid(20_000, &mut rng))
        .collect();
    let violated = checks.iter().filter(|c| !c.passed()).count();
    let proba = proba_bound_sweep(256, &[0.5, 0.1, 0.01]);
    outcome(
        violated == 0 && proba.is_empty(),
        format!(
            "tail_checks={} violations={violated} proba_bound_violations={} (n<=256)",
            checks.len(),
            proba.len()
        ),
    )
}

fn exactness() -> Outcome {
    let kinds = [
        TopologyKind::Grid { rows: 3, cols: 3 },
        TopologyKind::Line { n: 9 },
        TopologyKind::BarabasiAlbert { n: 9, k: 2 },
        TopologyKind::ErdosRenyi { n: 9, p: 0.2 },
    ];
    let mut worst = 0.0f64;
    for kind in &kinds {
        let g = build_topology(kind, &mut run_rng(MASTER_SEED)).unwrap();
        let p = lazy_transition_matrix(&g);
        let pi = stationary_distribution(&p).unwrap();
        let residual: f64 = p.apply_left(&pi).iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        worst = worst.max(residual);
    }
    let fuse = common::fuse_invariants_exhaustive(6);
    let mut identical = true;
    for protocol in [ProtocolKind::Individual, ProtocolKind::Dcv] {
        let c = Config {
            protocol,
            n_alpha: Some(4),
            tau: Some(60),
            tau_ind: Some(60),
            ..Config::default()
        };
        for seed in 0..5 {
            identical &= simulate(&c, seed).unwrap().to_trace() == simulate(&c, seed).unwrap().to_trace();
        }
    }
    outcome(
        worst <= 1e-10 && fuse.is_ok() && identical,
        format!(
            "max_stationary_residual={worst:.3e} fuse_patterns={} byte_identical_traces={identical}",
            fuse.map_or_else(|e| e, |n| n.to_string())
        ),
    )
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn report(id: usize, name: &str, limit_secs: u64, (o, took): (Outcome, Duration)) -> bool {
    let pass = o.pass && took.as_secs() < limit_secs;
    println!(
        "criterion {id} {name}: {} ({:.1}s, limit {limit_secs}s) {}",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        o.detail
    );
    pass
}

fn main() {
    let mut all = true;
    all &= report(1, "majority_bound", 60, timed(majority_bound));
    all &= report(2, "markov_oracle", 120, timed(markov_oracle));
    let ((fusion, extra), took) = timed(fusion_determinism);
    all &= report(3, "fusion_determinism", 300, (fusion, took));
    println!("  note: {extra}");
    all &= report(4, "robots_trend", 1200, timed(robots_trend));
    all &= report(5, "gap_trends", 1200, timed(gap_trends));
    all &= report(6, "concentration_bounds", 300, timed(concentration));
    all &= report(7, "exactness", 60, timed(exactness));
    println!("acceptance: {}", if all { "all criteria passed" } else { "some criteria failed" });
    if !all {
        std::process::exit(1);
    }
}
