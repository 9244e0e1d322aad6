//! Monte-Carlo sweeps comparing the two protocols, closed-form theory
//! curves, and CSV/SVG export.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, Scenario};
use crate::engine::{derive_seed, run_rng, Mode, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::markov::{lazy_transition_matrix, MarkovQuantities};
use crate::protocols::{dcv_params, individual_params, ProtocolKind};
use crate::topology::{build_topology, TopologyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NRobots,
    NSites,
    LegitFraction,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::NRobots => "n_robots",
            SweepAxis::NSites => "n_sites",
            SweepAxis::LegitFraction => "legit_fraction",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_robots" => Ok(SweepAxis::NRobots),
            "n_sites" => Ok(SweepAxis::NSites),
            "legit_fraction" => Ok(SweepAxis::LegitFraction),
            _ => Err(Error::InvalidSweep(format!("unknown axis {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub base: Config,
    pub runs_per_point: usize,
    pub protocols: Vec<ProtocolKind>,
    pub include_theory: bool,
    pub cap: usize,
}

impl SweepSpec {
    /// Defaults: 100 runs per point, both protocols, theory curves on, the
    /// default step cap.
    pub fn new(axis: SweepAxis, values: Vec<f64>, base: Config) -> Self {
        SweepSpec {
            axis,
            values,
            base,
            runs_per_point: 100,
            protocols: vec![ProtocolKind::Individual, ProtocolKind::Dcv],
            include_theory: true,
            cap: DEFAULT_CAP,
        }
    }

    /// Flat `key = value` sweep file: the sweep keys `axis`, `values`,
    /// `runs_per_point`, `protocols`, `include_theory` plus any run config
    /// keys for the base config. `cap` sets the step cap. Crowd vetting
    /// defaults to the pipelined schedule here.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config_text = String::from("dcv_schedule = pipelined\n");
        let mut axis = None;
        let mut values = None;
        let mut runs = 100;
        let mut protocols = vec![ProtocolKind::Individual, ProtocolKind::Dcv];
        let mut include_theory = true;
        let mut cap = DEFAULT_CAP;
        for raw in text.lines() {
            let body = raw.split('#').next().unwrap().trim();
            let Some((k, v)) = body.split_once('=') else {
                config_text.push_str(raw);
                config_text.push('\n');
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            let bad = |what: &str| Error::InvalidSweep(format!("bad {what} {v:?}"));
            match k {
                "axis" => axis = Some(v.parse()?),
                "values" => {
                    values = Some(
                        v.split(',')
                            .map(|x| x.trim().parse::<f64>().map_err(|_| bad("values")))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "runs_per_point" => runs = v.parse().map_err(|_| bad("runs_per_point"))?,
                "protocols" => {
                    protocols = v
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<Result<Vec<_>>>()?
                }
                "include_theory" => include_theory = v.parse().map_err(|_| bad("include_theory"))?,
                "cap" => cap = v.parse().map_err(|_| bad("cap"))?,
                _ => {
                    config_text.push_str(raw);
                    config_text.push('\n');
                }
            }
        }
        let base = Config::parse(&config_text)?;
        let spec = SweepSpec {
            axis: axis.ok_or_else(|| Error::InvalidSweep("missing axis".into()))?,
            values: values.ok_or_else(|| Error::InvalidSweep("missing values".into()))?,
            base,
            runs_per_point: runs,
            protocols,
            include_theory,
            cap,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSweep(m));
        if self.values.is_empty() {
            return bad("no axis values".into());
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return bad(format!("values must be strictly increasing: {:?}", self.values));
        }
        if self.runs_per_point == 0 {
            return bad("runs_per_point must be at least 1".into());
        }
        if self.protocols.is_empty() {
            return bad("no protocols selected".into());
        }
        if self.cap == 0 {
            return bad("cap must be positive".into());
        }
        for &v in &self.values {
            self.config_at(v)?;
        }
        Ok(())
    }

    /// Base config adjusted for one axis value, in until-correct mode.
    pub fn config_at(&self, value: f64) -> Result<Config> {
        let mut c = self.base.clone();
        c.mode = Mode::UntilCorrect { cap: self.cap };
        c.record_meetings = false;
        let as_count = |v: f64, what: &str| -> Result<usize> {
            if v >= 1.0 && (v - v.round()).abs() < 1e-9 {
                Ok(v.round() as usize)
            } else {
                Err(Error::InvalidSweep(format!("{what} value {v} is not a positive integer")))
            }
        };
        match self.axis {
            SweepAxis::NRobots => {
                let n = as_count(value, "n_robots")?;
                if n < 2 {
                    return Err(Error::InvalidSweep("robot sweep needs N >= 2".into()));
                }
                c.n_robots = n;
                c.n_legit = n / 2;
            }
            SweepAxis::NSites => {
                let sites = as_count(value, "n_sites")?;
                c.topology = match c.topology {
                    TopologyKind::Grid { .. } => {
                        let side = (sites as f64).sqrt().round() as usize;
                        if side * side != sites {
                            return Err(Error::InvalidSweep(format!(
                                "grid sweep needs square site counts, got {sites}"
                            )));
                        }
                        TopologyKind::Grid { rows: side, cols: side }
                    }
                    TopologyKind::Line { .. } => TopologyKind::Line { n: sites },
                    TopologyKind::BarabasiAlbert { k, .. } => TopologyKind::BarabasiAlbert { n: sites, k },
                    TopologyKind::ErdosRenyi { p, .. } => TopologyKind::ErdosRenyi { n: sites, p },
                    TopologyKind::Explicit { .. } => {
                        return Err(Error::InvalidSweep("cannot resize an explicit topology".into()))
                    }
                };
            }
            SweepAxis::LegitFraction => {
                let l = value * c.n_robots as f64;
                c.n_legit = as_count(l, "legit count")?;
                if c.n_legit > c.n_robots {
                    return Err(Error::InvalidSweep(format!("legit fraction {value} exceeds 1")));
                }
            }
        }
        c.validate()?;
        Ok(c)
    }
}

/// One simulated run of one protocol at one axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub value: f64,
    pub protocol: ProtocolKind,
    pub run: usize,
    pub seed: u64,
    pub first_correct_time: Option<usize>,
}

/// Aggregate for one (axis value, series). Theory series carry the window
/// as `mean` with zero spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub axis_value: f64,
    pub series: String,
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub failures: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub protocols: Vec<ProtocolKind>,
    pub points: Vec<SeriesPoint>,
    pub outcomes: Vec<RunOutcome>,
}

impl SweepResult {
    pub fn point(&self, value: f64, series: &str) -> Option<&SeriesPoint> {
        self.points
            .iter()
            .find(|p| p.axis_value == value && p.series == series)
    }

    pub fn mean(&self, value: f64, protocol: ProtocolKind) -> Option<f64> {
        self.point(value, &protocol.to_string()).map(|p| p.mean)
    }

    /// Axis values in order of appearance.
    pub fn values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for p in &self.points {
            if !out.contains(&p.axis_value) {
                out.push(p.axis_value);
            }
        }
        out
    }
}

/// Mean, sample standard deviation and normal-approximation 95% interval
/// of the successful runs.
pub fn summarize(times: &[f64]) -> (f64, f64, f64, f64) {
    let n = times.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = times.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let half = 1.96 * sd / (n as f64).sqrt();
    (mean, sd, mean - half, mean + half)
}

/// Per-run seed streams: the topology seed is shared by both protocols of
/// a run, the run seeds are independent.
fn topology_seed(master: u64, point: usize, run: usize) -> u64 {
    derive_seed(derive_seed(master, point as u64), run as u64)
}

fn protocol_seed(master: u64, point: usize, run: usize, protocol: ProtocolKind) -> u64 {
    let stream = match protocol {
        ProtocolKind::Individual => 1,
        ProtocolKind::Dcv => 2,
    };
    derive_seed(topology_seed(master, point, run), stream)
}

/// Runs every (value, run, protocol) combination in parallel and reduces
/// in `(value, protocol, run)` order.
pub fn run_sweep(spec: &SweepSpec, master_seed: u64) -> Result<SweepResult> {
    spec.validate()?;
    let configs: Vec<Config> = spec
        .values
        .iter()
        .map(|&v| spec.config_at(v))
        .collect::<Result<_>>()?;

    // fixed topologies: one scenario per (point, protocol)
    let fixed: Vec<Option<Vec<Scenario>>> = configs
        .par_iter()
        .map(|c| -> Result<Option<Vec<Scenario>>> {
            if c.topology.is_random() {
                return Ok(None);
            }
            let graph = build_topology(&c.topology, &mut run_rng(0))?;
            let kernel = lazy_transition_matrix(&graph);
            let q = MarkovQuantities::compute(&kernel)?;
            spec.protocols
                .iter()
                .map(|&p| {
                    let mut cp = c.clone();
                    cp.protocol = p;
                    Scenario::with_quantities(&cp, graph.clone(), kernel.clone(), Some(q.clone()))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some)
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|p| (0..spec.runs_per_point).map(move |r| (p, r)))
        .collect();
    let per_job: Vec<(Vec<RunOutcome>, Option<(f64, f64)>)> = jobs
        .par_iter()
        .map(|&(p, r)| -> Result<_> {
            let c = &configs[p];
            let mut outcomes = Vec::with_capacity(spec.protocols.len());
            let mut chain = None;
            let random_scenarios;
            let scenarios: &[Scenario] = match &fixed[p] {
                Some(s) => s,
                None => {
                    let mut rng = run_rng(topology_seed(master_seed, p, r));
                    let graph = build_topology(&c.topology, &mut rng)?;
                    let kernel = lazy_transition_matrix(&graph);
                    let q = MarkovQuantities::compute(&kernel)?;
                    chain = Some((q.t_hit(), q.t_meet()));
                    random_scenarios = spec
                        .protocols
                        .iter()
                        .map(|&proto| {
                            let mut cp = c.clone();
                            cp.protocol = proto;
                            Scenario::with_quantities(&cp, graph.clone(), kernel.clone(), Some(q.clone()))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    &random_scenarios
                }
            };
            for (&proto, scenario) in spec.protocols.iter().zip(scenarios) {
                let mut cp = c.clone();
                cp.protocol = proto;
                let seed = protocol_seed(master_seed, p, r, proto);
                let record = scenario.run(&cp, seed)?;
                outcomes.push(RunOutcome {
                    value: spec.values[p],
                    protocol: proto,
                    run: r,
                    seed,
                    first_correct_time: record.first_correct_time,
                });
            }
            Ok((outcomes, chain))
        })
        .collect::<Result<_>>()?;

    let mut outcomes: Vec<RunOutcome> = per_job.iter().flat_map(|(o, _)| o.clone()).collect();
    outcomes.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then((a.protocol as u8).cmp(&(b.protocol as u8)))
            .then(a.run.cmp(&b.run))
    });

    let mut points = Vec::new();
    for (p, &value) in spec.values.iter().enumerate() {
        for &proto in &spec.protocols {
            let mine: Vec<&RunOutcome> = outcomes
                .iter()
                .filter(|o| o.value == value && o.protocol == proto)
                .collect();
            let times: Vec<f64> = mine
                .iter()
                .filter_map(|o| o.first_correct_time.map(|t| t as f64))
                .collect();
            let (mean, sd, ci_low, ci_high) = summarize(&times);
            points.push(SeriesPoint {
                axis_value: value,
                series: proto.to_string(),
                mean,
                sd,
                ci_low,
                ci_high,
                failures: mine.len() - times.len(),
                runs: mine.len(),
            });
        }
        if spec.include_theory {
            let chains: Vec<(f64, f64)> = per_job
                .iter()
                .zip(&jobs)
                .filter(|(_, &(jp, _))| jp == p)
                .filter_map(|((_, chain), _)| *chain)
                .collect();
            let averaged = if chains.is_empty() {
                None
            } else {
                let k = chains.len() as f64;
                Some((
                    chains.iter().map(|c| c.0).sum::<f64>() / k,
                    chains.iter().map(|c| c.1).sum::<f64>() / k,
                ))
            };
            let theory = theory_point(&configs[p], averaged)?;
            for (series, window) in [("theory_individual", theory.tau_ind), ("theory_dcv", theory.dcv_total)] {
                points.push(SeriesPoint {
                    axis_value: value,
                    series: series.to_string(),
                    mean: window as f64,
                    sd: 0.0,
                    ci_low: window as f64,
                    ci_high: window as f64,
                    failures: 0,
                    runs: 0,
                });
            }
        }
    }
    Ok(SweepResult {
        axis: spec.axis,
        protocols: spec.protocols.clone(),
        points,
        outcomes,
    })
}

/// Closed-form windows at one axis value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub value: f64,
    pub t_hit: f64,
    pub t_meet: f64,
    pub tau_ind: usize,
    /// Two crowd-vetting phases, `2 tau`.
    pub dcv_total: usize,
}

fn theory_point(config: &Config, averaged: Option<(f64, f64)>) -> Result<TheoryPoint> {
    let (t_hit, t_meet) = match averaged {
        Some(x) => x,
        None => {
            let graph = build_topology(&config.topology, &mut run_rng(0))?;
            let q = MarkovQuantities::compute(&lazy_transition_matrix(&graph))?;
            (q.t_hit(), q.t_meet())
        }
    };
    let ind = individual_params(config.n_robots, config.delta, config.epsilon_alpha, t_meet)?;
    let dcv = dcv_params(
        config.n_robots,
        config.n_legit,
        config.delta,
        config.epsilon_alpha,
        t_hit,
        t_meet,
        config.rho,
    )?;
    Ok(TheoryPoint {
        value: 0.0,
        t_hit,
        t_meet,
        tau_ind: ind.tau_ind,
        dcv_total: dcv.total_steps(),
    })
}

/// `(tau_ind, 2 tau)` per axis value. Random topologies are averaged over
/// `samples` draws from `seed`.
pub fn theory_curve(
    axis: SweepAxis,
    values: &[f64],
    base: &Config,
    samples: usize,
    seed: u64,
) -> Result<Vec<TheoryPoint>> {
    let spec = SweepSpec {
        runs_per_point: 1,
        ..SweepSpec::new(axis, values.to_vec(), base.clone())
    };
    values
        .iter()
        .enumerate()
        .map(|(p, &v)| {
            let c = spec.config_at(v)?;
            let averaged = if c.topology.is_random() {
                let mut sums = (0.0, 0.0);
                for r in 0..samples.max(1) {
                    let graph = build_topology(&c.topology, &mut run_rng(topology_seed(seed, p, r)))?;
                    let q = MarkovQuantities::compute(&lazy_transition_matrix(&graph))?;
                    sums.0 += q.t_hit();
                    sums.1 += q.t_meet();
                }
                let k = samples.max(1) as f64;
                Some((sums.0 / k, sums.1 / k))
            } else {
                None
            };
            let mut t = theory_point(&c, averaged)?;
            t.value = v;
            Ok(t)
        })
        .collect()
}

const CSV_HEADER: [&str; 8] = [
    "axis_value", "series", "mean", "sd", "ci_low", "ci_high", "failures", "runs",
];

pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in &result.points {
        w.write_record([
            p.axis_value.to_string(),
            p.series.clone(),
            p.mean.to_string(),
            p.sd.to_string(),
            p.ci_low.to_string(),
            p.ci_high.to_string(),
            p.failures.to_string(),
            p.runs.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SeriesPoint>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let f = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| Error::InvalidSweep(format!("bad number {:?}", &row[i])))
        };
        let u = |i: usize| -> Result<usize> {
            row[i]
                .parse()
                .map_err(|_| Error::InvalidSweep(format!("bad count {:?}", &row[i])))
        };
        out.push(SeriesPoint {
            axis_value: f(0)?,
            series: row[1].to_string(),
            mean: f(2)?,
            sd: f(3)?,
            ci_low: f(4)?,
            ci_high: f(5)?,
            failures: u(6)?,
            runs: u(7)?,
        });
    }
    Ok(out)
}

const PALETTE: [&str; 6] = ["#7f7f7f", "#1f77b4", "#9467bd", "#2ca02c", "#d62728", "#ff7f0e"];

/// Line plot with one series per protocol and theory curve.
pub fn render_svg(result: &SweepResult) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 170.0, 30.0, 50.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;

    let mut series: Vec<&str> = Vec::new();
    for p in &result.points {
        if !series.contains(&p.series.as_str()) {
            series.push(&p.series);
        }
    }
    let finite = result.points.iter().filter(|p| p.mean.is_finite());
    let x_min = result.points.iter().map(|p| p.axis_value).fold(f64::INFINITY, f64::min);
    let x_max = result.points.iter().map(|p| p.axis_value).fold(f64::NEG_INFINITY, f64::max);
    let y_max = finite.map(|p| p.mean.max(p.ci_high)).fold(0.0, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let sx = |x: f64| left + (x - x_min) / x_span * plot_w;
    let sy = |y: f64| top + plot_h - y / y_max * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.2}" stroke="black"/>"#,
        top + plot_h
    );
    for v in result.values() {
        let x = sx(v);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{v}</text>"#,
            top + plot_h + 16.0
        );
    }
    for k in 0..=4 {
        let y = y_max * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.0}</text>"#,
            left - 6.0,
            sy(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        left + plot_w / 2.0,
        h - 12.0,
        result.axis.name()
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">time-steps to correct vectors</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    for (idx, name) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let dash = if name.starts_with("theory") { r#" stroke-dasharray="6 4""# } else { "" };
        let pts: Vec<String> = result
            .points
            .iter()
            .filter(|p| p.series == *name && p.mean.is_finite())
            .map(|p| format!("{:.2},{:.2}", sx(p.axis_value), sy(p.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        for pt in &pts {
            let (x, y) = pt.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
        let ly = top + 14.0 + 18.0 * idx as f64;
        let lx = left + plot_w + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 24.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{name}</text>"#, lx + 30.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Svg,
}

impl FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(ExportFormat::Csv),
            "svg" => Ok(ExportFormat::Svg),
            other => Err(Error::InvalidSweep(format!("unknown export format {other:?}"))),
        }
    }
}

/// Writes `sweep.csv` and/or `sweep.svg` under `dir`; returns the paths.
pub fn export(result: &SweepResult, formats: &[ExportFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    if result.protocols.is_empty() || result.points.is_empty() {
        return Err(Error::InvalidSweep("nothing to export".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for f in formats {
        let path = match f {
            ExportFormat::Csv => dir.join("sweep.csv"),
            ExportFormat::Svg => dir.join("sweep.svg"),
        };
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        match f {
            ExportFormat::Csv => write_csv(result, file)?,
            ExportFormat::Svg => {
                let mut file = file;
                file.write_all(render_svg(result).as_bytes())
                    .map_err(|e| Error::io(&path, e))?;
            }
        }
        written.push(path);
    }
    Ok(written)
}
