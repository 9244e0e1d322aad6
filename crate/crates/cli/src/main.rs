use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use crowdvet::engine::{run_rng, Mode};
use crowdvet::experiments::{export, run_sweep, ExportFormat, SweepSpec};
use crowdvet::markov::{lazy_transition_matrix, MarkovQuantities};
use crowdvet::topology::build_topology;
use crowdvet::verification::{
    binomial_tail_grid, check_majority_bound, check_meeting_within, chernoff_grid, proba_bound_sweep,
    write_report, Check, Status,
};
use crowdvet::{simulate, Config};

#[derive(Parser)]
#[command(name = "crowdvet", version, about = "Trust discovery among mobile robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and write its line-delimited JSON trace.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// `fixed` or `until-correct`
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Monte-Carlo sweep over one axis; writes sweep.csv / sweep.svg.
    Sweep {
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "csv,svg")]
        format: Vec<ExportFormat>,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Exact Markov quantities of the config's topology, as CSV.
    Markov {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Statistical checks of the probability bounds.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20_000)]
        trials: usize,
        /// Config whose topology gets the meeting-time check.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Protocol parameters derived from a config, as JSON.
    Params {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(path: &Path) -> Result<Config> {
    Config::load(path).with_context(|| format!("loading {}", path.display()))
}

fn quantities(config: &Config, seed: u64) -> Result<MarkovQuantities> {
    let mut rng = run_rng(config.topology_seed_for(seed));
    let graph = build_topology(&config.topology, &mut rng)?;
    Ok(MarkovQuantities::compute(&lazy_transition_matrix(&graph))?)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out, mode, cap } => {
            let mut c = load(&config)?;
            if let Some(m) = mode {
                c.mode = m;
            }
            if let Some(cap) = cap {
                match &mut c.mode {
                    Mode::UntilCorrect { cap: k } => *k = cap,
                    Mode::Fixed => bail!("--cap only applies to until-correct mode"),
                }
            }
            let seed = seed.or(c.seed).unwrap_or(0);
            let record = simulate(&c, seed)?;
            let mut w = output(out.as_deref())?;
            record.write_trace(&mut w)?;
            w.flush()?;
            eprintln!(
                "steps={} first_correct_time={} cap_exceeded={}",
                record.steps,
                record.first_correct_time.map_or("none".to_string(), |t| t.to_string()),
                record.cap_exceeded
            );
        }
        Command::Sweep { spec, seed, out, format, cap } => {
            let mut s = SweepSpec::load(&spec).with_context(|| format!("loading {}", spec.display()))?;
            if let Some(cap) = cap {
                s.cap = cap;
            }
            let result = run_sweep(&s, seed)?;
            for path in export(&result, &format, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Markov { config, seed, out } => {
            let c = load(&config)?;
            let q = quantities(&c, seed.or(c.seed).unwrap_or(0))?;
            let mut w = output(out.as_deref())?;
            q.write_csv(&mut w)?;
            w.flush()?;
            eprintln!("t_hit={} t_meet={} t_mix={}", q.t_hit(), q.t_meet(), q.t_mix);
        }
        Command::Verify { seed, trials, config, out } => {
            let mut rng = run_rng(seed);
            let mut checks: Vec<Check> = Vec::new();
            checks.push(check_majority_bound(0.2, 0.05, trials, &mut rng)?);
            checks.extend(binomial_tail_grid(trials, &mut rng));
            checks.extend(chernoff_grid(trials, &mut rng));
            let violations = proba_bound_sweep(256, &[0.5, 0.1, 0.01]);
            checks.push(Check {
                name: "proba_bound_sweep(n<=256)".into(),
                status: if violations.is_empty() { Status::Pass } else { Status::Fail },
                observed: violations.len() as f64,
                bound: 0.0,
                margin: 0.0,
                trials: 0,
                detail: format!("violations={violations:?}"),
            });
            if let Some(path) = config {
                let c = load(&path)?;
                let mut trng = run_rng(c.topology_seed_for(seed));
                let graph = build_topology(&c.topology, &mut trng)?;
                let kernel = lazy_transition_matrix(&graph);
                let q = MarkovQuantities::compute(&kernel)?;
                checks.push(check_meeting_within(&kernel, &q, (trials / 10).max(100), &mut rng));
            }
            let mut w = output(out.as_deref())?;
            write_report(&checks, &mut w)?;
            w.flush()?;
            if checks.iter().any(|c| c.status == Status::Fail) {
                std::process::exit(1);
            }
        }
        Command::Params { config, seed } => {
            let c = load(&config)?;
            let params = match c.params(None) {
                Ok(p) => p,
                Err(_) => c.params(Some(&quantities(&c, seed.or(c.seed).unwrap_or(0))?))?,
            };
            println!("{}", serde_json::to_string_pretty(&params)?);
        }
    }
    Ok(())
}
