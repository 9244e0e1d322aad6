//! Trust observations, the trust function, and per-robot ledgers.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type RobotId = usize;

/// One bit per robot; `true` means trusted.
pub type TrustVector = Vec<bool>;

/// Draws used to validate a custom sampler's means.
pub const SAMPLER_CHECK_DRAWS: usize = 100_000;

/// Source of `[0, 1]`-valued observations for a custom observation model.
pub trait ObservationSampler: Send + Sync {
    fn sample(&self, target_is_legitimate: bool, rng: &mut dyn RngCore) -> f64;
}

#[derive(Clone)]
pub enum ObservationKind {
    Bernoulli,
    Custom(Arc<dyn ObservationSampler>),
}

impl fmt::Debug for ObservationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservationKind::Bernoulli => f.write_str("Bernoulli"),
            ObservationKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Observation quality `epsilon_alpha`: legitimate targets are observed with
/// mean at least `1/2 + eps`, malicious ones with mean at most `1/2 - eps`.
#[derive(Debug, Clone)]
pub struct ObservationModel {
    epsilon_alpha: f64,
    kind: ObservationKind,
}

fn check_epsilon(epsilon_alpha: f64) -> Result<()> {
    if epsilon_alpha > 0.0 && epsilon_alpha <= 0.5 {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!(
            "epsilon_alpha must lie in (0, 1/2], got {epsilon_alpha}"
        )))
    }
}

impl ObservationModel {
    pub fn bernoulli(epsilon_alpha: f64) -> Result<Self> {
        check_epsilon(epsilon_alpha)?;
        Ok(ObservationModel {
            epsilon_alpha,
            kind: ObservationKind::Bernoulli,
        })
    }

    /// Accepts a custom sampler after checking, over
    /// [`SAMPLER_CHECK_DRAWS`] draws per class, that values stay in `[0, 1]`
    /// and that both empirical means respect their bound within three
    /// standard errors.
    pub fn custom(
        epsilon_alpha: f64,
        sampler: Arc<dyn ObservationSampler>,
        check_seed: u64,
    ) -> Result<Self> {
        check_epsilon(epsilon_alpha)?;
        let mut rng = ChaCha8Rng::seed_from_u64(check_seed);
        for legit in [true, false] {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..SAMPLER_CHECK_DRAWS {
                let x = sampler.sample(legit, &mut rng);
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::ObservationRange(x));
                }
                sum += x;
                sum_sq += x * x;
            }
            let n = SAMPLER_CHECK_DRAWS as f64;
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0);
            let margin = 3.0 * (var / n).sqrt();
            let ok = if legit {
                mean + margin >= 0.5 + epsilon_alpha
            } else {
                mean - margin <= 0.5 - epsilon_alpha
            };
            if !ok {
                return Err(Error::SamplerMean(format!(
                    "{} target mean {mean:.4} (margin {margin:.4}) vs eps {epsilon_alpha}",
                    if legit { "legitimate" } else { "malicious" }
                )));
            }
        }
        Ok(ObservationModel {
            epsilon_alpha,
            kind: ObservationKind::Custom(sampler),
        })
    }

    pub fn epsilon_alpha(&self) -> f64 {
        self.epsilon_alpha
    }

    pub fn kind(&self) -> &ObservationKind {
        &self.kind
    }

    /// One independent observation. The Bernoulli kind uses exactly one
    /// uniform draw.
    pub fn sample_observation<R: RngCore>(&self, target_is_legitimate: bool, rng: &mut R) -> f64 {
        match &self.kind {
            ObservationKind::Bernoulli => {
                let mean = if target_is_legitimate {
                    0.5 + self.epsilon_alpha
                } else {
                    0.5 - self.epsilon_alpha
                };
                if rng.gen::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            ObservationKind::Custom(s) => s.sample(target_is_legitimate, rng),
        }
    }
}

/// Sum of centered observations. Positive means evidence of legitimacy.
pub fn trust_score(observations: &[f64]) -> Result<f64> {
    let mut beta = 0.0;
    for &o in observations {
        if !(0.0..=1.0).contains(&o) {
            return Err(Error::ObservationRange(o));
        }
        beta += o - 0.5;
    }
    Ok(beta)
}

/// Everything one robot has observed about its teammates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustLedger {
    owner: RobotId,
    n_alpha: usize,
    observations: Vec<Vec<f64>>,
    // running trust score, accumulated in the same order as `trust_score`
    scores: Vec<f64>,
    final_vector: Option<TrustVector>,
}

impl TrustLedger {
    pub fn new(owner: RobotId, n_robots: usize, n_alpha: usize) -> Result<Self> {
        if owner >= n_robots {
            return Err(Error::UnknownRobot { id: owner, n_robots });
        }
        Ok(TrustLedger {
            owner,
            n_alpha,
            observations: vec![Vec::new(); n_robots],
            scores: vec![0.0; n_robots],
            final_vector: None,
        })
    }

    pub fn owner(&self) -> RobotId {
        self.owner
    }

    pub fn n_robots(&self) -> usize {
        self.observations.len()
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    fn check(&self, target: RobotId) -> Result<()> {
        if target < self.n_robots() {
            Ok(())
        } else {
            Err(Error::UnknownRobot {
                id: target,
                n_robots: self.n_robots(),
            })
        }
    }

    pub fn record(&mut self, target: RobotId, value: f64) -> Result<()> {
        self.check(target)?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::ObservationRange(value));
        }
        self.observations[target].push(value);
        self.scores[target] += value - 0.5;
        Ok(())
    }

    pub fn observations(&self, target: RobotId) -> &[f64] {
        &self.observations[target]
    }

    /// Number of observations of `target`.
    pub fn count(&self, target: RobotId) -> usize {
        self.observations[target].len()
    }

    pub fn score(&self, target: RobotId) -> f64 {
        self.scores[target]
    }

    /// Self is always trusted. Others are trusted only with at least
    /// `n_alpha` observations and a non-negative score; insufficient
    /// evidence means distrust.
    pub fn interim_trust_entry(&self, target: RobotId) -> Result<bool> {
        self.check(target)?;
        Ok(self.entry(target))
    }

    #[inline]
    pub(crate) fn entry(&self, target: RobotId) -> bool {
        target == self.owner
            || (self.observations[target].len() >= self.n_alpha && self.scores[target] >= 0.0)
    }

    pub fn interim_vector(&self) -> TrustVector {
        (0..self.n_robots()).map(|j| self.entry(j)).collect()
    }

    pub fn set_final_vector(&mut self, v: TrustVector) -> Result<()> {
        if v.len() != self.n_robots() {
            return Err(Error::LengthMismatch {
                expected: self.n_robots(),
                got: v.len(),
            });
        }
        self.final_vector = Some(v);
        Ok(())
    }

    pub fn final_vector(&self) -> Option<&TrustVector> {
        self.final_vector.as_ref()
    }

    /// Rows `owner,target,eta,beta,interim,final`; `final` is empty until set.
    pub fn write_csv_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for j in 0..self.n_robots() {
            let fin = self
                .final_vector
                .as_ref()
                .map(|v| u8::from(v[j]).to_string())
                .unwrap_or_default();
            w.write_record([
                self.owner.to_string(),
                j.to_string(),
                self.count(j).to_string(),
                self.score(j).to_string(),
                u8::from(self.entry(j)).to_string(),
                fin,
            ])?;
        }
        Ok(())
    }
}

/// Dumps several ledgers to one CSV with a header row.
pub fn write_ledgers_csv<W: Write>(ledgers: &[TrustLedger], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["owner", "target", "eta", "beta", "interim", "final"])?;
    for l in ledgers {
        l.write_csv_rows(&mut w)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
