//! Flat `key = value` run configuration.
//!
//! Blank lines and anything after `#` are ignored. Unknown keys are errors.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryStrategy, Disclosure, Movement};
use crate::engine::{derive_seed, run_protocol, run_rng, Mode, Placement, RunRecord, Team};
use crate::error::{Error, Result};
use crate::markov::{lazy_transition_matrix, MarkovQuantities, TransitionMatrix};
use crate::protocols::{
    dcv_params, individual_params, DcvSchedule, Environment, ProtocolKind, ProtocolParams, Rho,
    RunOptions,
};
use crate::topology::{build_topology, SiteGraph, SiteId, TopologyKind};
use crate::trust::ObservationModel;

/// Stream index for topology generation when no `topology_seed` is pinned.
const TOPOLOGY_STREAM: u64 = 0x746f_706f;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub protocol: ProtocolKind,
    pub mode: Mode,
    pub topology: TopologyKind,
    pub n_robots: usize,
    pub n_legit: usize,
    pub delta: f64,
    pub epsilon_alpha: f64,
    pub rho: Rho,
    pub n_alpha: Option<usize>,
    pub tau: Option<usize>,
    pub tau_ind: Option<usize>,
    pub adversary_movement: String,
    pub adversary_disclosure: String,
    pub dcv_schedule: DcvSchedule,
    pub exclude_subject_vote: bool,
    pub placement: Placement,
    pub record_meetings: bool,
    pub seed: Option<u64>,
    pub topology_seed: Option<u64>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            protocol: ProtocolKind::Dcv,
            mode: Mode::Fixed,
            topology: TopologyKind::Grid { rows: 3, cols: 3 },
            n_robots: 8,
            n_legit: 4,
            delta: 0.1,
            epsilon_alpha: 0.25,
            rho: Rho::default(),
            n_alpha: None,
            tau: None,
            tau_ind: None,
            adversary_movement: "lazy_walk".into(),
            adversary_disclosure: "invert_truth".into(),
            dcv_schedule: DcvSchedule::TwoPhase,
            exclude_subject_vote: false,
            placement: Placement::Uniform,
            record_meetings: true,
            seed: None,
            topology_seed: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config {
        line,
        msg: format!("bad value {v:?} for {key}"),
    })
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config {
            line,
            msg: format!("bad boolean {v:?} for {key}"),
        }),
    }
}

/// `0-1, 1-2` or `0 1; 1 2`.
fn parse_edges(line: usize, v: &str) -> Result<Vec<(SiteId, SiteId)>> {
    v.split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let mut it = pair.split(|c: char| c == '-' || c.is_whitespace()).filter(|s| !s.is_empty());
            match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => Ok((parse_num(line, "edges", a)?, parse_num(line, "edges", b)?)),
                _ => Err(Error::Config {
                    line,
                    msg: format!("bad edge {pair:?}"),
                }),
            }
        })
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse_with_base(&text, Some(base))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_base(text, None)
    }

    fn parse_with_base(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut c = Config::default();
        let mut kind: Option<String> = None;
        let (mut rows, mut cols, mut sites, mut k, mut p) = (None, None, None, None, None);
        let mut edges: Option<Vec<(SiteId, SiteId)>> = None;
        let mut edges_graph: Option<SiteGraph> = None;
        let mut cap = None;
        let mut n_legit = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap().trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::Config {
                    line,
                    msg: format!("expected key = value, got {body:?}"),
                });
            };
            let (key, v) = (key.trim(), value.trim());
            let wrap = |e: Error| match e {
                Error::Config { .. } => e,
                other => Error::Config {
                    line,
                    msg: other.to_string(),
                },
            };
            match key {
                "protocol" => c.protocol = v.parse().map_err(wrap)?,
                "mode" => c.mode = v.parse().map_err(wrap)?,
                "cap" => cap = Some(parse_num(line, key, v)?),
                "topology" => kind = Some(v.to_string()),
                "rows" => rows = Some(parse_num(line, key, v)?),
                "cols" => cols = Some(parse_num(line, key, v)?),
                "sites" => sites = Some(parse_num(line, key, v)?),
                "k" => k = Some(parse_num(line, key, v)?),
                "p" => p = Some(parse_num(line, key, v)?),
                "edges" => edges = Some(parse_edges(line, v)?),
                "edges_file" => {
                    let path = base.map_or_else(|| Path::new(v).to_path_buf(), |b| b.join(v));
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    edges_graph = Some(SiteGraph::parse_edge_list(&text).map_err(wrap)?);
                }
                "n_robots" => c.n_robots = parse_num(line, key, v)?,
                "n_legit" => n_legit = Some(parse_num(line, key, v)?),
                "delta" => c.delta = parse_num(line, key, v)?,
                "epsilon_alpha" => c.epsilon_alpha = parse_num(line, key, v)?,
                "rho1" => c.rho.r1 = parse_num(line, key, v)?,
                "rho2" => c.rho.r2 = parse_num(line, key, v)?,
                "rho3" => c.rho.r3 = parse_num(line, key, v)?,
                "rho4" => c.rho.r4 = parse_num(line, key, v)?,
                "n_alpha" => c.n_alpha = Some(parse_num(line, key, v)?),
                "tau" => c.tau = Some(parse_num(line, key, v)?),
                "tau_ind" => c.tau_ind = Some(parse_num(line, key, v)?),
                "adversary_movement" => {
                    v.parse::<Movement>().map_err(wrap)?;
                    c.adversary_movement = v.to_string();
                }
                "adversary_disclosure" => {
                    v.parse::<Disclosure>().map_err(wrap)?;
                    c.adversary_disclosure = v.to_string();
                }
                "dcv_schedule" => c.dcv_schedule = v.parse().map_err(wrap)?,
                "exclude_subject_vote" => c.exclude_subject_vote = parse_bool(line, key, v)?,
                "placement" => {
                    c.placement = if v == "uniform" {
                        Placement::Uniform
                    } else {
                        Placement::Explicit(
                            v.split(',')
                                .map(|s| parse_num(line, key, s.trim()))
                                .collect::<Result<_>>()?,
                        )
                    }
                }
                "record_meetings" => c.record_meetings = parse_bool(line, key, v)?,
                "seed" => c.seed = Some(parse_num(line, key, v)?),
                "topology_seed" => c.topology_seed = Some(parse_num(line, key, v)?),
                _ => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown key {key:?}"),
                    })
                }
            }
        }

        if let Some(name) = kind {
            let need = |x: Option<usize>, what: &str| {
                x.ok_or_else(|| Error::InvalidConfig(format!("topology {name} needs {what}")))
            };
            c.topology = match name.as_str() {
                "grid" => TopologyKind::Grid {
                    rows: need(rows, "rows")?,
                    cols: need(cols, "cols")?,
                },
                "line" => TopologyKind::Line { n: need(sites, "sites")? },
                "barabasi_albert" => TopologyKind::BarabasiAlbert {
                    n: need(sites, "sites")?,
                    k: need(k, "k")?,
                },
                "erdos_renyi" => TopologyKind::ErdosRenyi {
                    n: need(sites, "sites")?,
                    p: p.ok_or_else(|| Error::InvalidConfig("topology erdos_renyi needs p".into()))?,
                },
                "explicit" => match (edges_graph, edges) {
                    (Some(g), _) => TopologyKind::Explicit {
                        num_sites: g.num_sites(),
                        edges: g.edges().to_vec(),
                    },
                    (None, Some(e)) => {
                        let max_id = e.iter().map(|&(a, b)| a.max(b)).max();
                        let num_sites = sites.unwrap_or_else(|| max_id.map_or(1, |m| m + 1));
                        TopologyKind::Explicit { num_sites, edges: e }
                    }
                    (None, None) => {
                        return Err(Error::InvalidConfig(
                            "explicit topology needs edges or edges_file".into(),
                        ))
                    }
                },
                other => return Err(Error::InvalidConfig(format!("unknown topology {other:?}"))),
            };
        }
        if let Mode::UntilCorrect { cap: ref mut slot } = c.mode {
            if let Some(cap) = cap {
                *slot = cap;
            }
        }
        c.n_legit = n_legit.unwrap_or(c.n_robots / 2);
        c.validate()?;
        Ok(c)
    }

    /// Serializes back to the flat format; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("protocol", self.protocol.to_string());
        kv("mode", self.mode.to_string());
        if let Mode::UntilCorrect { cap } = self.mode {
            kv("cap", cap.to_string());
        }
        kv("topology", self.topology.name().to_string());
        match &self.topology {
            TopologyKind::Grid { rows, cols } => {
                kv("rows", rows.to_string());
                kv("cols", cols.to_string());
            }
            TopologyKind::Line { n } => kv("sites", n.to_string()),
            TopologyKind::BarabasiAlbert { n, k } => {
                kv("sites", n.to_string());
                kv("k", k.to_string());
            }
            TopologyKind::ErdosRenyi { n, p } => {
                kv("sites", n.to_string());
                kv("p", p.to_string());
            }
            TopologyKind::Explicit { num_sites, edges } => {
                kv("sites", num_sites.to_string());
                let e: Vec<String> = edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
                kv("edges", e.join(","));
            }
        }
        kv("n_robots", self.n_robots.to_string());
        kv("n_legit", self.n_legit.to_string());
        kv("delta", self.delta.to_string());
        kv("epsilon_alpha", self.epsilon_alpha.to_string());
        kv("rho1", self.rho.r1.to_string());
        kv("rho2", self.rho.r2.to_string());
        kv("rho3", self.rho.r3.to_string());
        kv("rho4", self.rho.r4.to_string());
        for (k, v) in [("n_alpha", self.n_alpha), ("tau", self.tau), ("tau_ind", self.tau_ind)] {
            if let Some(v) = v {
                kv(k, v.to_string());
            }
        }
        kv("adversary_movement", self.adversary_movement.clone());
        kv("adversary_disclosure", self.adversary_disclosure.clone());
        kv("dcv_schedule", self.dcv_schedule.to_string());
        kv("exclude_subject_vote", self.exclude_subject_vote.to_string());
        kv(
            "placement",
            match &self.placement {
                Placement::Uniform => "uniform".into(),
                Placement::Explicit(p) => join(p),
            },
        );
        kv("record_meetings", self.record_meetings.to_string());
        if let Some(seed) = self.seed {
            kv("seed", seed.to_string());
        }
        if let Some(seed) = self.topology_seed {
            kv("topology_seed", seed.to_string());
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_robots == 0 {
            return bad("n_robots must be at least 1".into());
        }
        if self.n_legit > self.n_robots {
            return bad(format!("n_legit {} exceeds n_robots {}", self.n_legit, self.n_robots));
        }
        if self.protocol == ProtocolKind::Dcv && self.n_legit == 0 && self.tau.is_none() {
            return bad("crowd vetting needs n_legit >= 1 or an explicit tau".into());
        }
        if let Placement::Explicit(p) = &self.placement {
            if p.len() != self.n_robots {
                return bad(format!("placement lists {} sites for {} robots", p.len(), self.n_robots));
            }
        }
        if let Mode::UntilCorrect { cap } = self.mode {
            if cap == 0 {
                return bad("cap must be positive".into());
            }
        }
        if matches!(self.n_alpha, Some(0)) {
            return bad("n_alpha must be positive".into());
        }
        self.adversary()?;
        Ok(())
    }

    pub fn adversary(&self) -> Result<AdversaryStrategy> {
        Ok(AdversaryStrategy {
            movement: self.adversary_movement.parse()?,
            disclosure: self.adversary_disclosure.parse()?,
        })
    }

    pub fn team(&self) -> Result<Team> {
        Ok(Team::new(self.n_robots, self.n_legit)?
            .with_adversary(self.adversary()?)
            .with_placement(self.placement.clone()))
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            mode: self.mode,
            schedule: self.dcv_schedule,
            exclude_subject_vote: self.exclude_subject_vote,
            record_meetings: self.record_meetings,
        }
    }

    /// Seed for topology construction: pinned, or derived from the run seed.
    pub fn topology_seed_for(&self, seed: u64) -> u64 {
        self.topology_seed
            .unwrap_or_else(|| derive_seed(seed, TOPOLOGY_STREAM))
    }

    /// Protocol parameters for this config on a given chain, with any
    /// explicit overrides applied last.
    pub fn params(&self, quantities: Option<&MarkovQuantities>) -> Result<ProtocolParams> {
        let needs_theory = match self.protocol {
            ProtocolKind::Individual => self.n_alpha.is_none() || self.tau_ind.is_none(),
            ProtocolKind::Dcv => self.n_alpha.is_none() || self.tau.is_none(),
        };
        let mut params = if needs_theory {
            let q = quantities.ok_or_else(|| {
                Error::InvalidConfig("theory-derived parameters need chain quantities".into())
            })?;
            match self.protocol {
                ProtocolKind::Individual => {
                    individual_params(self.n_robots, self.delta, self.epsilon_alpha, q.t_meet())?
                }
                ProtocolKind::Dcv => dcv_params(
                    self.n_robots,
                    self.n_legit,
                    self.delta,
                    self.epsilon_alpha,
                    q.t_hit(),
                    q.t_meet(),
                    self.rho,
                )?,
            }
        } else {
            let mut p = ProtocolParams::explicit(self.protocol, self.n_robots, self.epsilon_alpha, 1, 1);
            p.delta = self.delta;
            p.rho = self.rho;
            p.n_legit = Some(self.n_legit);
            p
        };
        if let Some(n) = self.n_alpha {
            params.n_alpha = n;
        }
        if let Some(t) = self.tau {
            params.tau = t;
            if self.protocol == ProtocolKind::Dcv {
                params.tau_ind = t;
            }
        }
        if let Some(t) = self.tau_ind {
            params.tau_ind = t;
            if self.protocol == ProtocolKind::Individual {
                params.tau = t;
            }
        }
        Ok(params)
    }

    /// Builds the topology, kernel, observation model and parameters for a
    /// run with `seed`. Chain quantities are only computed when a parameter
    /// has to come from theory.
    pub fn scenario(&self, seed: u64) -> Result<Scenario> {
        self.validate()?;
        let mut rng = run_rng(self.topology_seed_for(seed));
        let graph = build_topology(&self.topology, &mut rng)?;
        Scenario::new(self, graph)
    }
}

/// Static inputs for one run: graph, kernel, chain quantities, observation
/// model and protocol parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: SiteGraph,
    pub kernel: TransitionMatrix,
    pub quantities: Option<MarkovQuantities>,
    pub model: ObservationModel,
    pub params: ProtocolParams,
}

impl Scenario {
    pub fn new(config: &Config, graph: SiteGraph) -> Result<Self> {
        let kernel = lazy_transition_matrix(&graph);
        let quantities = match config.params(None) {
            Ok(_) => None,
            Err(_) => Some(MarkovQuantities::compute(&kernel)?),
        };
        Self::with_quantities(config, graph, kernel, quantities)
    }

    pub fn with_quantities(
        config: &Config,
        graph: SiteGraph,
        kernel: TransitionMatrix,
        quantities: Option<MarkovQuantities>,
    ) -> Result<Self> {
        let params = config.params(quantities.as_ref())?;
        let model = ObservationModel::bernoulli(config.epsilon_alpha)?;
        Ok(Scenario {
            graph,
            kernel,
            quantities,
            model,
            params,
        })
    }

    pub fn env(&self) -> Environment<'_> {
        Environment {
            graph: &self.graph,
            kernel: &self.kernel,
            model: &self.model,
        }
    }

    /// One run with the run generator seeded from `seed`.
    pub fn run(&self, config: &Config, seed: u64) -> Result<RunRecord> {
        let team = config.team()?;
        let mut rng = run_rng(seed);
        let mut record = run_protocol(self.env(), &self.params, &team, &mut rng, &config.run_options())?;
        record.seed = seed;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
        # two-phase crowd vetting on a small grid
        protocol = dcv
        mode = until-correct
        cap = 5000
        topology = grid
        rows = 3
        cols = 3
        n_robots = 6
        n_legit = 4      # two adversaries
        epsilon_alpha = 0.3
        adversary_disclosure = random:0.5
        seed = 7
    ";

    #[test]
    fn parses_sample() {
        let c = Config::parse(SAMPLE).unwrap();
        assert_eq!(c.protocol, ProtocolKind::Dcv);
        assert_eq!(c.mode, Mode::UntilCorrect { cap: 5000 });
        assert_eq!(c.topology, TopologyKind::Grid { rows: 3, cols: 3 });
        assert_eq!((c.n_robots, c.n_legit), (6, 4));
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.adversary_disclosure, "random:0.5");
    }

    #[test]
    fn round_trips() {
        let mut c = Config::parse(SAMPLE).unwrap();
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
        c.topology = TopologyKind::Explicit { num_sites: 3, edges: vec![(0, 1), (1, 2)] };
        c.placement = Placement::Explicit(vec![0, 1, 2, 2, 1, 0]);
        c.n_alpha = Some(3);
        c.tau = Some(40);
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "bogus = 1",
            "n_robots = x",
            "no equals sign",
            "n_robots = 4\nn_legit = 5",
            "topology = grid\nrows = 3",
            "adversary_movement = teleport",
            "protocol = voting",
            "placement = 0,1",
            "mode = until-correct\ncap = 0",
        ] {
            assert!(Config::parse(text).is_err(), "{text:?} accepted");
        }
        match Config::parse("\n\nn_robots = -3") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_skip_chain_quantities() {
        let c = Config::parse("protocol = individual\nn_alpha = 2\ntau_ind = 10").unwrap();
        let s = c.scenario(1).unwrap();
        assert!(s.quantities.is_none());
        assert_eq!((s.params.n_alpha, s.params.tau_ind), (2, 10));
    }

    #[test]
    fn theory_params_use_chain() {
        let c = Config::parse("protocol = individual\nn_robots = 4").unwrap();
        let s = c.scenario(1).unwrap();
        let q = s.quantities.as_ref().unwrap();
        let want = individual_params(4, 0.1, 0.25, q.t_meet()).unwrap();
        assert_eq!(s.params, want);
    }
}
